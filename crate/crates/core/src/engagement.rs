//! Individual and cohort engagement composites (the two half-block
//! shadings) and the hover card payload.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingestion::{Course, CurriculumLayout, EngagementRecord, GradeRecord};
use crate::relevance::{thickness_for, RelevanceGraph};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Attendance,
    Quiz,
    Assignment,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Attendance, Metric::Quiz, Metric::Assignment];

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "attendance" => Some(Metric::Attendance),
            "quiz" => Some(Metric::Quiz),
            "assignment" => Some(Metric::Assignment),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradeMode {
    #[default]
    Letter,
    GradePoint,
    None,
}

impl GradeMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "letter" => Some(GradeMode::Letter),
            "grade_point" => Some(GradeMode::GradePoint),
            "none" => Some(GradeMode::None),
            _ => None,
        }
    }
}

/// Toggleable overlays on the base map (layers 1 to 4).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    Relevance,
    Individual,
    Cohort,
    Grades,
}

impl Layer {
    pub const ALL: [Layer; 4] = [Layer::Relevance, Layer::Individual, Layer::Cohort, Layer::Grades];

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "relevance" => Some(Layer::Relevance),
            "individual" => Some(Layer::Individual),
            "cohort" => Some(Layer::Cohort),
            "grades" => Some(Layer::Grades),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisplaySettings {
    pub metrics_included: BTreeSet<Metric>,
    pub grade_mode: GradeMode,
    pub show_layers: BTreeSet<Layer>,
}

impl Default for DisplaySettings {
    fn default() -> Self {
        Self {
            metrics_included: Metric::ALL.into_iter().collect(),
            grade_mode: GradeMode::Letter,
            show_layers: Layer::ALL.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no engagement metric selected while an engagement layer is shown")]
pub struct InvalidSettings;

impl DisplaySettings {
    pub fn validate(&self) -> Result<(), InvalidSettings> {
        let shading = self.show_layers.contains(&Layer::Individual) || self.show_layers.contains(&Layer::Cohort);
        if shading && self.metrics_included.is_empty() {
            Err(InvalidSettings)
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Subject {
    Individual { student_id: String },
    Cohort,
}

/// Mean of the included, non-missing metric parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct EngagementComposite<T> {
    pub course_id: String,
    pub subject: Subject,
    pub value: Option<T>,
    pub parts: BTreeMap<Metric, Option<T>>,
    /// Distinct contributing students; cohort composites only.
    pub n_contributors: Option<usize>,
}

fn composite_of<T: Scalar>(parts: &BTreeMap<Metric, Option<T>>) -> Option<T> {
    let present: Vec<T> = parts.values().flatten().copied().collect();
    if present.is_empty() {
        None
    } else {
        let sum = present.iter().fold(T::zero(), |acc, &x| acc + x);
        Some(sum / T::from_count(present.len()))
    }
}

/// The student's composite for one course; missing if they never took it.
pub fn individual_composite<T: Scalar>(
    records: &[EngagementRecord<T>],
    student_id: &str,
    course_id: &str,
    settings: &DisplaySettings,
) -> EngagementComposite<T> {
    let record = records.iter().find(|r| r.student_id == student_id && r.course_id == course_id);
    let parts: BTreeMap<Metric, Option<T>> =
        settings.metrics_included.iter().map(|&m| (m, record.and_then(|r| r.metric(m)))).collect();
    EngagementComposite {
        course_id: course_id.to_string(),
        subject: Subject::Individual { student_id: student_id.to_string() },
        value: composite_of(&parts),
        parts,
        n_contributors: None,
    }
}

/// Inclusive cohort-year bounds; `None` leaves that side open.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct YearRange {
    pub from: Option<i32>,
    pub to: Option<i32>,
}

impl YearRange {
    pub const ALL: YearRange = YearRange { from: None, to: None };

    pub fn contains(&self, year: i32) -> bool {
        self.from.is_none_or(|f| year >= f) && self.to.is_none_or(|t| year <= t)
    }
}

/// Which past takers populate the cohort layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CohortFilter {
    /// Cohort years strictly before the viewing student's own.
    #[default]
    BeforeViewer,
    All,
    Years {
        from: Option<i32>,
        to: Option<i32>,
    },
}

impl CohortFilter {
    /// Resolves against the viewer's cohort year; without a viewer the
    /// relative filter covers all years.
    pub fn resolve(&self, viewer_year: Option<i32>) -> YearRange {
        match *self {
            CohortFilter::BeforeViewer => YearRange { from: None, to: viewer_year.map(|y| y - 1) },
            CohortFilter::All => YearRange::ALL,
            CohortFilter::Years { from, to } => YearRange { from, to },
        }
    }
}

/// Cohort composite for one course: per-metric means over the takers in
/// `years`, then the mean of those means over the included metrics.
pub fn cohort_composite<T: Scalar>(
    records: &[EngagementRecord<T>],
    course_id: &str,
    settings: &DisplaySettings,
    years: YearRange,
) -> EngagementComposite<T> {
    let takers: Vec<&EngagementRecord<T>> =
        records.iter().filter(|r| r.course_id == course_id && years.contains(r.cohort_year)).collect();
    let mut contributors = BTreeSet::new();
    let parts: BTreeMap<Metric, Option<T>> = settings
        .metrics_included
        .iter()
        .map(|&m| {
            let values: Vec<T> = takers
                .iter()
                .filter_map(|r| {
                    let v = r.metric(m)?;
                    contributors.insert(r.student_id.as_str());
                    Some(v)
                })
                .collect();
            let part = if values.is_empty() {
                None
            } else {
                Some(values.iter().fold(T::zero(), |acc, &x| acc + x) / T::from_count(values.len()))
            };
            (m, part)
        })
        .collect();
    EngagementComposite {
        course_id: course_id.to_string(),
        subject: Subject::Cohort,
        value: composite_of(&parts),
        parts,
        n_contributors: Some(contributors.len()),
    }
}

/// The viewer's cohort year, taken as the earliest year on their records.
pub fn cohort_year_of<T: Scalar>(records: &[EngagementRecord<T>], student_id: &str) -> Option<i32> {
    records.iter().filter(|r| r.student_id == student_id).map(|r| r.cohort_year).min()
}

/// Everything the hover card draws on.
#[derive(Debug, Clone, Copy)]
pub struct HoverSources<'a, T> {
    pub snapshot_id: &'a str,
    pub layout: &'a CurriculumLayout,
    pub graph: &'a RelevanceGraph<T>,
    pub engagement: &'a [EngagementRecord<T>],
    pub grades: &'a [GradeRecord<T>],
    pub cohort_filter: CohortFilter,
    pub min_cohort_n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
#[serde(bound = "T: Scalar")]
pub enum GradeDisplay<T> {
    Letter { letter: String },
    GradePoint { grade_point: T },
}

impl<T: Scalar> GradeDisplay<T> {
    pub fn of(record: &GradeRecord<T>, mode: GradeMode) -> Option<Self> {
        match mode {
            GradeMode::Letter => Some(GradeDisplay::Letter { letter: record.letter.clone() }),
            GradeMode::GradePoint => Some(GradeDisplay::GradePoint { grade_point: record.grade_point }),
            GradeMode::None => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Neighbor<T> {
    pub course_id: String,
    pub title: String,
    pub similarity: T,
    pub thickness: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CohortSummary<T> {
    pub value: Option<T>,
    pub parts: BTreeMap<Metric, Option<T>>,
    pub n_contributors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct IndividualSummary<T> {
    pub value: Option<T>,
    pub parts: BTreeMap<Metric, Option<T>>,
}

/// Popup contents for one course block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct HoverCard<T> {
    pub snapshot_id: String,
    pub course: Course,
    pub objective_label: String,
    pub semester_label: String,
    /// Present when a viewing student was given.
    pub individual: Option<IndividualSummary<T>>,
    /// Absent when fewer than the minimum number of past takers contribute.
    pub cohort: Option<CohortSummary<T>>,
    pub grade: Option<GradeDisplay<T>>,
    pub neighbors: Vec<Neighbor<T>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HoverError {
    #[error("unknown course {0:?}")]
    UnknownCourse(String),
    #[error(transparent)]
    Settings(#[from] InvalidSettings),
}

pub fn hover_payload<T: Scalar>(
    sources: &HoverSources<'_, T>,
    course_id: &str,
    student_id: Option<&str>,
    settings: &DisplaySettings,
) -> Result<HoverCard<T>, HoverError> {
    if settings.metrics_included.is_empty() {
        return Err(InvalidSettings.into());
    }
    let layout = sources.layout;
    let course = layout.course(course_id).ok_or_else(|| HoverError::UnknownCourse(course_id.to_string()))?;

    let individual = student_id.map(|s| {
        let c = individual_composite(sources.engagement, s, course_id, settings);
        IndividualSummary { value: c.value, parts: c.parts }
    });

    let viewer_year = student_id.and_then(|s| cohort_year_of(sources.engagement, s));
    let years = sources.cohort_filter.resolve(viewer_year);
    let cohort = cohort_composite(sources.engagement, course_id, settings, years);
    let n = cohort.n_contributors.unwrap_or(0);
    let cohort = (n >= sources.min_cohort_n && n > 0).then_some(CohortSummary {
        value: cohort.value,
        parts: cohort.parts,
        n_contributors: n,
    });

    let grade = student_id
        .and_then(|s| sources.grades.iter().find(|g| g.student_id == s && g.course_id == course_id))
        .and_then(|g| GradeDisplay::of(g, settings.grade_mode));

    // graph edges are already sorted by descending similarity
    let neighbors = sources
        .graph
        .edges
        .iter()
        .filter_map(|e| {
            let other = e.other(course_id)?;
            Some(Neighbor {
                course_id: other.to_string(),
                title: layout.course(other).map(|c| c.title.clone()).unwrap_or_default(),
                similarity: e.similarity,
                thickness: thickness_for(e.similarity, &sources.graph.policy),
            })
        })
        .collect();

    Ok(HoverCard {
        snapshot_id: sources.snapshot_id.to_string(),
        course: course.clone(),
        objective_label: layout.rows[course.objective_row].clone(),
        semester_label: layout.columns[course.semester_index].clone(),
        individual,
        cohort,
        grade,
        neighbors,
    })
}
