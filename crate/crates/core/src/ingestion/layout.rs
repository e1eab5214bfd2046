use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{IngestError, IngestErrorKind, Location};

const FILE: &str = "layout.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Course {
    pub course_id: String,
    pub title: String,
    /// Column on the horizontal (timeline) axis.
    pub semester_index: usize,
    /// Row on the vertical (learning objective) axis.
    pub objective_row: usize,
    pub credits: f64,
    pub overview_text: String,
    pub lecture_plan_text: String,
}

impl Course {
    /// Text used for relevance scoring: overview and lecture plan joined by a space.
    pub fn syllabus_text(&self) -> String {
        format!("{} {}", self.overview_text, self.lecture_plan_text)
    }
}

/// A grid cell that intentionally holds several courses, in display order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiCell {
    pub objective_row: usize,
    pub semester_index: usize,
    pub order: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurriculumLayout {
    pub curriculum_id: String,
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    pub courses: Vec<Course>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub multi_cells: Vec<MultiCell>,
}

impl CurriculumLayout {
    pub fn course(&self, course_id: &str) -> Option<&Course> {
        self.courses.iter().find(|c| c.course_id == course_id)
    }

    pub fn course_ids(&self) -> BTreeSet<&str> {
        self.courses.iter().map(|c| c.course_id.as_str()).collect()
    }

    pub fn contains(&self, course_id: &str) -> bool {
        self.courses.iter().any(|c| c.course_id == course_id)
    }

    /// Checks ids, grid placement and cell occupancy.
    pub fn validate(&self) -> Result<(), IngestError> {
        let mut ids = BTreeSet::new();
        let mut cells: BTreeMap<(usize, usize), Vec<&str>> = BTreeMap::new();
        for (i, c) in self.courses.iter().enumerate() {
            let path = |field: &str| format!("courses[{i}].{field}");
            if c.course_id.is_empty() {
                return Err(IngestError::at_path(
                    FILE,
                    path("course_id"),
                    IngestErrorKind::EmptyField { field: "course_id".into() },
                ));
            }
            if !ids.insert(c.course_id.as_str()) {
                return Err(IngestError::at_path(
                    FILE,
                    path("course_id"),
                    IngestErrorKind::DuplicateCourse { course_id: c.course_id.clone() },
                ));
            }
            if c.objective_row >= self.rows.len() || c.semester_index >= self.columns.len() {
                let field = if c.objective_row >= self.rows.len() { "objective_row" } else { "semester_index" };
                return Err(IngestError::at_path(
                    FILE,
                    path(field),
                    IngestErrorKind::OutOfGrid {
                        course_id: c.course_id.clone(),
                        objective_row: c.objective_row,
                        semester_index: c.semester_index,
                        rows: self.rows.len(),
                        columns: self.columns.len(),
                    },
                ));
            }
            if !c.credits.is_finite() || c.credits < 0.0 {
                return Err(IngestError::at_path(
                    FILE,
                    path("credits"),
                    IngestErrorKind::OutOfRange {
                        field: "credits".into(),
                        value: c.credits,
                        min: 0.0,
                        max: f64::INFINITY,
                    },
                ));
            }
            cells.entry((c.objective_row, c.semester_index)).or_default().push(&c.course_id);
        }

        let mut declared = BTreeSet::new();
        for (i, m) in self.multi_cells.iter().enumerate() {
            let path = format!("multi_cells[{i}]");
            let key = (m.objective_row, m.semester_index);
            if !declared.insert(key) {
                return Err(IngestError::at_path(
                    FILE,
                    path,
                    IngestErrorKind::InvalidMultiCell { message: "cell declared twice".into() },
                ));
            }
            let mut occupants: Vec<&str> = cells.get(&key).cloned().unwrap_or_default();
            let mut order: Vec<&str> = m.order.iter().map(String::as_str).collect();
            occupants.sort_unstable();
            order.sort_unstable();
            if occupants != order {
                return Err(IngestError::at_path(
                    FILE,
                    format!("{path}.order"),
                    IngestErrorKind::InvalidMultiCell {
                        message: format!("order {:?} does not list exactly the cell's courses {occupants:?}", m.order),
                    },
                ));
            }
        }
        for (&(row, col), occupants) in &cells {
            if occupants.len() > 1 && !declared.contains(&(row, col)) {
                return Err(IngestError {
                    file: FILE.into(),
                    location: Location::Path { path: format!("cell[{row}][{col}]") },
                    kind: IngestErrorKind::CellConflict {
                        objective_row: row,
                        semester_index: col,
                        courses: occupants.iter().map(|s| s.to_string()).collect(),
                    },
                });
            }
        }
        Ok(())
    }
}

/// Parses and validates `layout.json`.
pub fn parse_layout(bytes: &[u8]) -> Result<CurriculumLayout, IngestError> {
    let layout: CurriculumLayout = serde_json::from_slice(bytes).map_err(|e| IngestError {
        file: FILE.into(),
        location: Location::Position { line: e.line(), column: e.column() },
        kind: IngestErrorKind::MalformedJson { message: e.to_string() },
    })?;
    layout.validate()?;
    Ok(layout)
}

/// Canonical form: pretty-printed JSON with a trailing newline.
pub fn serialize_layout(layout: &CurriculumLayout) -> String {
    let mut s = serde_json::to_string_pretty(layout).expect("layout is always serializable");
    s.push('\n');
    s
}
