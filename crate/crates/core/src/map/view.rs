use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::MapSnapshot;
use crate::engagement::{
    cohort_composite, cohort_year_of, individual_composite, DisplaySettings, GradeDisplay, InvalidSettings, Layer,
    Metric,
};
use crate::relevance::GraphExport;
use crate::Scalar;

/// A course block on the base map, positioned by grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub course_id: String,
    pub title: String,
    pub objective_row: usize,
    pub semester_index: usize,
    /// Position inside a multi-course cell; 0 otherwise.
    pub cell_order: usize,
    pub credits: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct IndividualShade<T> {
    pub course_id: String,
    pub value: Option<T>,
    pub parts: BTreeMap<Metric, Option<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CohortShade<T> {
    pub course_id: String,
    pub value: Option<T>,
    pub parts: BTreeMap<Metric, Option<T>>,
    pub n_contributors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GradePin<T> {
    pub course_id: String,
    pub grade: GradeDisplay<T>,
}

/// What one student sees: the base map plus the layers they switched on.
/// Layers that are off are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MapView<T> {
    pub snapshot_id: String,
    pub curriculum_id: String,
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    pub student_id: Option<String>,
    pub settings: DisplaySettings,
    pub blocks: Vec<Block>,
    pub relevance: Option<GraphExport<T>>,
    pub individual: Option<Vec<IndividualShade<T>>>,
    pub cohort: Option<Vec<CohortShade<T>>>,
    pub grades: Option<Vec<GradePin<T>>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ViewError {
    #[error(transparent)]
    Settings(#[from] InvalidSettings),
}

/// Projects `snapshot` for `student_id` under `settings`.
///
/// Individual shading and grade pins only ever carry the viewer's own
/// records; an unknown or absent viewer gets those layers empty. Cohort
/// shading is withheld for courses below the snapshot's minimum cohort size.
pub fn view<T: Scalar>(
    snapshot: &MapSnapshot<T>,
    student_id: Option<&str>,
    settings: &DisplaySettings,
) -> Result<MapView<T>, ViewError> {
    settings.validate()?;
    let layout = &snapshot.layout;
    let records = &snapshot.engagement;
    let shows = |l: Layer| settings.show_layers.contains(&l);

    let blocks = layout
        .courses
        .iter()
        .map(|c| {
            let cell_order = layout
                .multi_cells
                .iter()
                .find(|m| m.objective_row == c.objective_row && m.semester_index == c.semester_index)
                .and_then(|m| m.order.iter().position(|id| *id == c.course_id))
                .unwrap_or(0);
            Block {
                course_id: c.course_id.clone(),
                title: c.title.clone(),
                objective_row: c.objective_row,
                semester_index: c.semester_index,
                cell_order,
                credits: c.credits,
            }
        })
        .collect();

    let relevance = shows(Layer::Relevance).then(|| GraphExport::from(&snapshot.layers.relevance));

    let individual = shows(Layer::Individual).then(|| match student_id {
        None => Vec::new(),
        Some(s) => layout
            .courses
            .iter()
            .filter(|c| records.iter().any(|r| r.student_id == s && r.course_id == c.course_id))
            .map(|c| {
                let comp = individual_composite(records, s, &c.course_id, settings);
                IndividualShade { course_id: comp.course_id, value: comp.value, parts: comp.parts }
            })
            .collect(),
    });

    let cohort = shows(Layer::Cohort).then(|| {
        let viewer_year = student_id.and_then(|s| cohort_year_of(records, s));
        let years = snapshot.config.cohort_filter.resolve(viewer_year);
        layout
            .courses
            .iter()
            .filter_map(|c| {
                let comp = cohort_composite(records, &c.course_id, settings, years);
                let n = comp.n_contributors.unwrap_or(0);
                (n > 0 && n >= snapshot.config.min_cohort_n).then_some(CohortShade {
                    course_id: comp.course_id,
                    value: comp.value,
                    parts: comp.parts,
                    n_contributors: n,
                })
            })
            .collect()
    });

    let grades = shows(Layer::Grades).then(|| match student_id {
        None => Vec::new(),
        Some(s) => layout
            .courses
            .iter()
            .filter_map(|c| {
                let g = snapshot.layers.grades.iter().find(|g| g.student_id == s && g.course_id == c.course_id)?;
                Some(GradePin { course_id: c.course_id.clone(), grade: GradeDisplay::of(g, settings.grade_mode)? })
            })
            .collect(),
    });

    Ok(MapView {
        snapshot_id: snapshot.snapshot_id.clone(),
        curriculum_id: layout.curriculum_id.clone(),
        rows: layout.rows.clone(),
        columns: layout.columns.clone(),
        student_id: student_id.map(str::to_string),
        settings: settings.clone(),
        blocks,
        relevance,
        individual,
        cohort,
        grades,
    })
}
