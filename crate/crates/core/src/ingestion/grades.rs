use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{
    check_header, csv_reader, csv_writer, finish_writer, CsvReport, CurriculumLayout, IngestError, IngestErrorKind,
    Location, RejectReason, RowReject,
};
use crate::Scalar;

const FILE: &str = "grades.csv";
const SCALE_FILE: &str = "grade_scale.json";

pub const GRADES_HEADER: [&str; 3] = ["student_id", "course_id", "letter"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", deny_unknown_fields)]
pub struct GradeLetter<T> {
    pub letter: String,
    pub grade_point: T,
}

/// Ordered letter scale, best letter first by convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", deny_unknown_fields)]
pub struct GradeScale<T> {
    pub scale_name: String,
    pub letters: Vec<GradeLetter<T>>,
}

impl<T: Scalar> GradeScale<T> {
    pub fn grade_point(&self, letter: &str) -> Option<T> {
        self.letters.iter().find(|l| l.letter == letter).map(|l| l.grade_point)
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        let err = |path: String, message: String| {
            IngestError::at_path(SCALE_FILE, path, IngestErrorKind::InvalidScale { message })
        };
        if self.letters.is_empty() {
            return Err(err("letters".into(), "scale has no letters".into()));
        }
        let mut seen = BTreeSet::new();
        for (i, l) in self.letters.iter().enumerate() {
            if l.letter.is_empty() {
                return Err(err(format!("letters[{i}].letter"), "empty letter".into()));
            }
            if !seen.insert(l.letter.as_str()) {
                return Err(err(format!("letters[{i}].letter"), format!("duplicate letter {:?}", l.letter)));
            }
            if !l.grade_point.is_finite() || l.grade_point < T::zero() {
                return Err(err(format!("letters[{i}].grade_point"), "grade point must be >= 0".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GradeRecord<T> {
    pub student_id: String,
    pub course_id: String,
    pub letter: String,
    pub grade_point: T,
}

pub fn parse_grade_scale<T: Scalar>(bytes: &[u8]) -> Result<GradeScale<T>, IngestError> {
    let scale: GradeScale<T> = serde_json::from_slice(bytes).map_err(|e| IngestError {
        file: SCALE_FILE.into(),
        location: Location::Position { line: e.line(), column: e.column() },
        kind: IngestErrorKind::MalformedJson { message: e.to_string() },
    })?;
    scale.validate()?;
    Ok(scale)
}

pub fn serialize_grade_scale<T: Scalar>(scale: &GradeScale<T>) -> String {
    let mut s = serde_json::to_string_pretty(scale).expect("scale is always serializable");
    s.push('\n');
    s
}

/// Parses `grades.csv`, deriving each grade point from `scale`.
pub fn parse_grades_csv<T: Scalar>(
    bytes: &[u8],
    layout: &CurriculumLayout,
    scale: &GradeScale<T>,
) -> Result<CsvReport<GradeRecord<T>>, IngestError> {
    let mut reader = csv_reader(bytes);
    let header = reader.headers().map_err(|e| IngestError::from_csv(FILE, &e))?.clone();
    check_header(FILE, &header, &GRADES_HEADER)?;

    let known = layout.course_ids();
    let mut seen = BTreeSet::new();
    let mut report = CsvReport { accepted: Vec::new(), rejects: Vec::new(), input_rows: 0 };
    for row in reader.records() {
        let row = row.map_err(|e| IngestError::from_csv(FILE, &e))?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        report.input_rows += 1;
        for (idx, field) in GRADES_HEADER.iter().enumerate() {
            if row[idx].is_empty() {
                return Err(IngestError::at_row(
                    FILE,
                    line,
                    Some(field),
                    IngestErrorKind::EmptyField { field: field.to_string() },
                ));
            }
        }
        let (student_id, course_id, letter) = (&row[0], &row[1], &row[2]);
        let grade_point = scale.grade_point(letter).ok_or_else(|| {
            IngestError::at_row(
                FILE,
                line,
                Some("letter"),
                IngestErrorKind::UnknownLetter { letter: letter.into(), scale: scale.scale_name.clone() },
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
        report.accepted.push(GradeRecord {
            student_id: student_id.into(),
            course_id: course_id.into(),
            letter: letter.into(),
            grade_point,
        });
    }
    Ok(report)
}

pub fn serialize_grades_csv<T: Scalar>(records: &[GradeRecord<T>]) -> String {
    let mut w = csv_writer();
    w.write_record(GRADES_HEADER).expect("in-memory write");
    for r in records {
        w.write_record([&r.student_id, &r.course_id, &r.letter]).expect("in-memory write");
    }
    finish_writer(w)
}
