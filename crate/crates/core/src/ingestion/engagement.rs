use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{
    check_header, csv_reader, csv_writer, finish_writer, CsvReport, CurriculumLayout, IngestError, IngestErrorKind,
    RejectReason, RowReject,
};
use crate::engagement::Metric;
use crate::Scalar;

const FILE: &str = "engagement.csv";

pub const ENGAGEMENT_HEADER: [&str; 6] =
    ["student_id", "course_id", "attendance_rate", "quiz_score", "assignment_submission_rate", "cohort_year"];
const MAX_SCORE: &str = "max_score";

/// One student's engagement in one course. Absent metrics are `None`,
/// never zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct EngagementRecord<T> {
    pub student_id: String,
    pub course_id: String,
    pub attendance_rate: Option<T>,
    pub quiz_score: Option<T>,
    pub assignment_submission_rate: Option<T>,
    pub cohort_year: i32,
}

impl<T: Scalar> EngagementRecord<T> {
    pub fn metric(&self, metric: Metric) -> Option<T> {
        match metric {
            Metric::Attendance => self.attendance_rate,
            Metric::Quiz => self.quiz_score,
            Metric::Assignment => self.assignment_submission_rate,
        }
    }
}

fn parse_number<T: Scalar>(raw: &str, field: &str, line: u64) -> Result<Option<T>, IngestError> {
    if raw.is_empty() {
        return Ok(None);
    }
    let invalid = || {
        IngestError::at_row(
            FILE,
            line,
            Some(field),
            IngestErrorKind::InvalidNumber { field: field.into(), value: raw.into() },
        )
    };
    let v: T = raw.parse().map_err(|_| invalid())?;
    if !v.is_finite() {
        return Err(invalid());
    }
    Ok(Some(v))
}

fn check_fraction<T: Scalar>(v: Option<T>, field: &str, line: u64) -> Result<Option<T>, IngestError> {
    match v {
        Some(x) if x < T::zero() || x > T::one() => Err(IngestError::at_row(
            FILE,
            line,
            Some(field),
            IngestErrorKind::OutOfRange {
                field: field.into(),
                value: x.to_f64().unwrap_or(f64::NAN),
                min: 0.0,
                max: 1.0,
            },
        )),
        other => Ok(other),
    }
}

/// Parses `engagement.csv`.
///
/// Fractions must lie in `[0, 1]`. An optional trailing `max_score` column
/// marks `quiz_score` as a raw score to be divided by it. Rows naming a
/// course absent from `layout`, or repeating a (student, course) pair, are
/// rejected rather than failing the parse.
pub fn parse_engagement_csv<T: Scalar>(
    bytes: &[u8],
    layout: &CurriculumLayout,
) -> Result<CsvReport<EngagementRecord<T>>, IngestError> {
    let mut reader = csv_reader(bytes);
    let header = reader.headers().map_err(|e| IngestError::from_csv(FILE, &e))?.clone();
    let with_max = header.len() == ENGAGEMENT_HEADER.len() + 1;
    if with_max {
        let mut expected = ENGAGEMENT_HEADER.to_vec();
        expected.push(MAX_SCORE);
        check_header(FILE, &header, &expected)?;
    } else {
        check_header(FILE, &header, &ENGAGEMENT_HEADER)?;
    }

    let known = layout.course_ids();
    let mut seen = BTreeSet::new();
    let mut report = CsvReport { accepted: Vec::new(), rejects: Vec::new(), input_rows: 0 };
    for row in reader.records() {
        let row = row.map_err(|e| IngestError::from_csv(FILE, &e))?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        report.input_rows += 1;

        let student_id = &row[0];
        let course_id = &row[1];
        for (idx, field) in [(0, "student_id"), (1, "course_id"), (5, "cohort_year")] {
            if row[idx].is_empty() {
                return Err(IngestError::at_row(
                    FILE,
                    line,
                    Some(field),
                    IngestErrorKind::EmptyField { field: field.into() },
                ));
            }
        }
        let attendance = check_fraction(parse_number::<T>(&row[2], "attendance_rate", line)?, "attendance_rate", line)?;
        let mut quiz = parse_number::<T>(&row[3], "quiz_score", line)?;
        if with_max {
            if let Some(max) = parse_number::<T>(&row[6], MAX_SCORE, line)? {
                if max <= T::zero() {
                    return Err(IngestError::at_row(
                        FILE,
                        line,
                        Some(MAX_SCORE),
                        IngestErrorKind::OutOfRange {
                            field: MAX_SCORE.into(),
                            value: max.to_f64().unwrap_or(f64::NAN),
                            min: 0.0,
                            max: f64::INFINITY,
                        },
                    ));
                }
                quiz = quiz.map(|q| q / max);
            }
        }
        let quiz = check_fraction(quiz, "quiz_score", line)?;
        let assignment = check_fraction(
            parse_number::<T>(&row[4], "assignment_submission_rate", line)?,
            "assignment_submission_rate",
            line,
        )?;
        let cohort_year: i32 = row[5].parse().map_err(|_| {
            IngestError::at_row(
                FILE,
                line,
                Some("cohort_year"),
                IngestErrorKind::InvalidNumber { field: "cohort_year".into(), value: row[5].into() },
            )
        })?;

        if !known.contains(course_id) {
            report
                .rejects
                .push(RowReject { line, reason: RejectReason::UnknownCourse { course_id: course_id.into() } });
            continue;
        }
        if !seen.insert((student_id.to_string(), course_id.to_string())) {
            report.rejects.push(RowReject {
                line,
                reason: RejectReason::DuplicateRecord { student_id: student_id.into(), course_id: course_id.into() },
            });
            continue;
        }
        report.accepted.push(EngagementRecord {
            student_id: student_id.into(),
            course_id: course_id.into(),
            attendance_rate: attendance,
            quiz_score: quiz,
            assignment_submission_rate: assignment,
            cohort_year,
        });
    }
    Ok(report)
}

/// Canonical CSV with normalized fractions and empty cells for missing metrics.
pub fn serialize_engagement_csv<T: Scalar>(records: &[EngagementRecord<T>]) -> String {
    let mut w = csv_writer();
    w.write_record(ENGAGEMENT_HEADER).expect("in-memory write");
    let cell = |v: Option<T>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in records {
        w.write_record([
            r.student_id.clone(),
            r.course_id.clone(),
            cell(r.attendance_rate),
            cell(r.quiz_score),
            cell(r.assignment_submission_rate),
            r.cohort_year.to_string(),
        ])
        .expect("in-memory write");
    }
    finish_writer(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingestion::{Course, Location};

    fn layout() -> CurriculumLayout {
        let course = |id: &str, col| Course {
            course_id: id.into(),
            title: id.into(),
            semester_index: col,
            objective_row: 0,
            credits: 1.0,
            overview_text: String::new(),
            lecture_plan_text: String::new(),
        };
        CurriculumLayout {
            curriculum_id: "x".into(),
            rows: vec!["r".into()],
            columns: vec!["s1".into(), "s2".into()],
            courses: vec![course("c1", 0), course("c2", 1)],
            multi_cells: vec![],
        }
    }

    fn csv(rows: &[&str]) -> String {
        let mut s = ENGAGEMENT_HEADER.join(",");
        s.push('\n');
        for r in rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }

    #[test]
    fn full_row() {
        let r = parse_engagement_csv::<f64>(csv(&["s1,c1,0.9,0.8,1.0,2023"]).as_bytes(), &layout()).unwrap();
        assert_eq!(r.accepted.len(), 1);
        let rec = &r.accepted[0];
        assert_eq!(rec.attendance_rate, Some(0.9));
        assert_eq!(rec.quiz_score, Some(0.8));
        assert_eq!(rec.assignment_submission_rate, Some(1.0));
        assert_eq!(rec.cohort_year, 2023);
    }

    #[test]
    fn empty_quiz_is_missing() {
        let r = parse_engagement_csv::<f64>(csv(&["s1,c1,0.9,,1.0,2023"]).as_bytes(), &layout()).unwrap();
        assert_eq!(r.accepted[0].quiz_score, None);
    }

    #[test]
    fn attendance_above_one_fails() {
        let err = parse_engagement_csv::<f64>(
            csv(&["s1,c1,0.5,0.8,1.0,2023", "s2,c1,1.2,0.8,1.0,2023"]).as_bytes(),
            &layout(),
        )
        .unwrap_err();
        assert!(matches!(err.kind, IngestErrorKind::OutOfRange { .. }));
        assert_eq!(err.location, Location::Row { line: 3, column: Some("attendance_rate".into()) });
    }

    #[test]
    fn unknown_course_and_duplicates_are_rejected() {
        let r = parse_engagement_csv::<f64>(
            csv(&["s1,c1,0.9,0.8,1.0,2023", "s1,zz,0.9,0.8,1.0,2023", "s1,c1,0.1,0.1,0.1,2023"]).as_bytes(),
            &layout(),
        )
        .unwrap();
        assert_eq!(r.accepted.len(), 1);
        assert_eq!(r.rejects.len(), 2);
        assert_eq!(r.rejects[0].line, 3);
        assert_eq!(r.accepted.len() + r.rejects.len(), r.input_rows);
    }

    #[test]
    fn raw_quiz_scores_are_normalized() {
        let mut text = ENGAGEMENT_HEADER.join(",");
        text.push_str(",max_score\ns1,c1,1,45,1,2022,50\ns1,c2,1,0.5,1,2022,\n");
        let r = parse_engagement_csv::<f64>(text.as_bytes(), &layout()).unwrap();
        assert_eq!(r.accepted[0].quiz_score, Some(0.9));
        assert_eq!(r.accepted[1].quiz_score, Some(0.5));
    }

    #[test]
    fn wrong_header() {
        let err = parse_engagement_csv::<f64>(b"student,course\ns1,c1\n", &layout()).unwrap_err();
        assert!(matches!(err.kind, IngestErrorKind::HeaderMismatch { .. }));
    }

    #[test]
    fn ragged_row_is_malformed() {
        let err = parse_engagement_csv::<f64>(csv(&["s1,c1,0.9"]).as_bytes(), &layout()).unwrap_err();
        assert!(matches!(err.kind, IngestErrorKind::MalformedCsv { .. }));
    }

    #[test]
    fn canonical_round_trip() {
        let text = csv(&["s1,c1,0.9,,1,2023", "s2,c2,0.25,0.5,0,2021"]);
        let r = parse_engagement_csv::<f64>(text.as_bytes(), &layout()).unwrap();
        assert_eq!(serialize_engagement_csv(&r.accepted), text);
    }
}
