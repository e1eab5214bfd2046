//! Parsing and validation of the external data files: curriculum layout,
//! engagement logs, grades, grade scales and survey responses.
//!
//! CSV inputs use a fixed dialect: UTF-8, comma separated, `\n` line ends,
//! header row first. Every parser either returns fully validated records or
//! an [`IngestError`] naming the file and location. Rows that are
//! well-formed but refer to something unknown are skipped and listed in the
//! report's `rejects`, so `accepted + rejects == input_rows` always holds.

mod engagement;
mod grades;
mod layout;
mod survey;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use engagement::{parse_engagement_csv, serialize_engagement_csv, EngagementRecord, ENGAGEMENT_HEADER};
pub use grades::{
    parse_grade_scale, parse_grades_csv, serialize_grade_scale, serialize_grades_csv, GradeLetter, GradeRecord,
    GradeScale, GRADES_HEADER,
};
pub use layout::{parse_layout, serialize_layout, Course, CurriculumLayout, MultiCell};
pub use survey::{parse_survey_csv, serialize_survey_csv, unpaired_respondents, Phase, SurveyParse, SurveyResponseSet};

/// Where in an input file a problem was found.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Location {
    /// JSON path such as `courses[3].objective_row`.
    Path { path: String },
    /// 1-based line and column of a JSON syntax error.
    Position { line: usize, column: usize },
    /// 1-based CSV line, optionally narrowed to a column.
    Row { line: u64, column: Option<String> },
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Path { path } => write!(f, "at {path}"),
            Location::Position { line, column } => write!(f, "at line {line}, column {column}"),
            Location::Row { line, column: Some(c) } => write!(f, "at line {line}, column {c}"),
            Location::Row { line, column: None } => write!(f, "at line {line}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Error)]
#[serde(tag = "error", rename_all = "snake_case")]
pub enum IngestErrorKind {
    #[error("malformed JSON: {message}")]
    MalformedJson { message: String },
    #[error("malformed CSV: {message}")]
    MalformedCsv { message: String },
    #[error("header mismatch: expected `{expected}`, found `{found}`")]
    HeaderMismatch { expected: String, found: String },
    #[error("duplicate course_id {course_id:?}")]
    DuplicateCourse { course_id: String },
    #[error(
        "out-of-grid: course {course_id:?} at row {objective_row}, column {semester_index} \
         outside a {rows}x{columns} grid"
    )]
    OutOfGrid { course_id: String, objective_row: usize, semester_index: usize, rows: usize, columns: usize },
    #[error("cell ({objective_row}, {semester_index}) holds {courses:?} but is not declared multi-course")]
    CellConflict { objective_row: usize, semester_index: usize, courses: Vec<String> },
    #[error("invalid multi-course cell: {message}")]
    InvalidMultiCell { message: String },
    #[error("field {field} is empty")]
    EmptyField { field: String },
    #[error("field {field}: {value:?} is not a number")]
    InvalidNumber { field: String, value: String },
    #[error("field {field}: {value} outside [{min}, {max}]")]
    OutOfRange { field: String, value: f64, min: f64, max: f64 },
    #[error("letter {letter:?} is not in grade scale {scale:?}")]
    UnknownLetter { letter: String, scale: String },
    #[error("invalid grade scale: {message}")]
    InvalidScale { message: String },
    #[error("item {item}: {value:?} is not a Likert value in {min}..={max}")]
    InvalidLikert { item: String, value: String, min: u8, max: u8 },
    #[error("phase {value:?} is neither `pre` nor `post`")]
    InvalidPhase { value: String },
    #[error("invalid instrument: {message}")]
    InvalidInstrument { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Error)]
#[error("{file} {location}: {kind}")]
pub struct IngestError {
    pub file: String,
    pub location: Location,
    pub kind: IngestErrorKind,
}

impl IngestError {
    pub(crate) fn at_path(file: &str, path: impl Into<String>, kind: IngestErrorKind) -> Self {
        Self { file: file.to_string(), location: Location::Path { path: path.into() }, kind }
    }

    pub(crate) fn at_row(file: &str, line: u64, column: Option<&str>, kind: IngestErrorKind) -> Self {
        Self { file: file.to_string(), location: Location::Row { line, column: column.map(str::to_string) }, kind }
    }

    pub(crate) fn from_csv(file: &str, err: &csv::Error) -> Self {
        let line = err.position().map(|p| p.line()).unwrap_or(0);
        Self::at_row(file, line, None, IngestErrorKind::MalformedCsv { message: err.to_string() })
    }
}

/// Why a well-formed row was skipped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum RejectReason {
    UnknownCourse { course_id: String },
    DuplicateRecord { student_id: String, course_id: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowReject {
    pub line: u64,
    #[serde(flatten)]
    pub reason: RejectReason,
}

/// Outcome of a CSV parse: accepted records plus skipped rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvReport<R> {
    pub accepted: Vec<R>,
    pub rejects: Vec<RowReject>,
    pub input_rows: usize,
}

pub(crate) fn check_header(file: &str, found: &csv::StringRecord, expected: &[&str]) -> Result<(), IngestError> {
    let matches = found.len() == expected.len() && found.iter().zip(expected).all(|(a, b)| a == *b);
    if matches {
        Ok(())
    } else {
        Err(IngestError::at_row(
            file,
            1,
            None,
            IngestErrorKind::HeaderMismatch {
                expected: expected.join(","),
                found: found.iter().collect::<Vec<_>>().join(","),
            },
        ))
    }
}

pub(crate) fn csv_reader(bytes: &[u8]) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().has_headers(true).delimiter(b',').from_reader(bytes)
}

pub(crate) fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().delimiter(b',').terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

pub(crate) fn finish_writer(w: csv::Writer<Vec<u8>>) -> String {
    let bytes = w.into_inner().expect("in-memory writer cannot fail");
    String::from_utf8(bytes).expect("csv output of UTF-8 fields is UTF-8")
}
