use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::engagement::{
    cohort_composite, individual_composite, CohortFilter, DisplaySettings, EngagementComposite, HoverSources,
};
use crate::ingestion::{CurriculumLayout, EngagementRecord, GradeRecord, GradeScale};
use crate::relevance::{
    build_graph, build_tfidf, corpus_from_layout, RelevanceError, RelevanceGraph, RenderPolicy, Tokenizer,
};
use crate::Scalar;

/// Effective configuration recorded inside every snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MapConfig<T> {
    pub policy: RenderPolicy<T>,
    pub tokenizer: Tokenizer,
    pub cohort_filter: CohortFilter,
    /// Cohort aggregates with fewer contributors are withheld from views.
    pub min_cohort_n: usize,
    pub grade_scale: Option<GradeScale<T>>,
}

impl<T: Scalar> Default for MapConfig<T> {
    fn default() -> Self {
        Self {
            policy: RenderPolicy::default(),
            tokenizer: Tokenizer::default(),
            cohort_filter: CohortFilter::default(),
            min_cohort_n: 3,
            grade_scale: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MapLayers<T> {
    /// Layer 1: relevance lines.
    pub relevance: RelevanceGraph<T>,
    /// Layer 2: per (student, course) composite over all metrics.
    pub individual: Vec<EngagementComposite<T>>,
    /// Layer 3: per-course cohort composite over the configured years.
    pub cohort: Vec<EngagementComposite<T>>,
    /// Layer 4: grade markers.
    pub grades: Vec<GradeRecord<T>>,
}

/// Immutable composed map. The layout is layer 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MapSnapshot<T> {
    pub snapshot_id: String,
    pub created_at: DateTime<Utc>,
    pub config: MapConfig<T>,
    pub layout: CurriculumLayout,
    /// Source records, kept so views can recompute composites for other
    /// metric selections and viewer-relative cohorts.
    pub engagement: Vec<EngagementRecord<T>>,
    pub layers: MapLayers<T>,
}

impl<T: Scalar> MapSnapshot<T> {
    pub fn hover_sources(&self) -> HoverSources<'_, T> {
        HoverSources {
            snapshot_id: &self.snapshot_id,
            layout: &self.layout,
            graph: &self.layers.relevance,
            engagement: &self.engagement,
            grades: &self.layers.grades,
            cohort_filter: self.config.cohort_filter,
            min_cohort_n: self.config.min_cohort_n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ComposeError {
    #[error("{what} refers to unknown course {course_id:?}")]
    UnknownCourse { what: &'static str, course_id: String },
    #[error(transparent)]
    Relevance(#[from] RelevanceError),
}

#[derive(Serialize)]
#[serde(bound = "T: Scalar")]
struct IdInputs<'a, T> {
    config: &'a MapConfig<T>,
    layout: &'a CurriculumLayout,
    graph: &'a RelevanceGraph<T>,
    engagement: &'a [EngagementRecord<T>],
    grades: &'a [GradeRecord<T>],
}

/// SHA-256 over the canonical JSON of every input and the configuration.
pub fn snapshot_id_for<T: Scalar>(
    layout: &CurriculumLayout,
    graph: &RelevanceGraph<T>,
    engagement: &[EngagementRecord<T>],
    grades: &[GradeRecord<T>],
    config: &MapConfig<T>,
) -> String {
    let inputs = IdInputs { config, layout, graph, engagement, grades };
    let bytes = serde_json::to_vec(&inputs).expect("inputs are serializable");
    hex::encode(Sha256::digest(&bytes))
}

/// Materializes layers 1 to 4 and seals them into a snapshot.
pub fn compose<T: Scalar>(
    layout: CurriculumLayout,
    graph: RelevanceGraph<T>,
    engagement: Vec<EngagementRecord<T>>,
    grades: Vec<GradeRecord<T>>,
    config: MapConfig<T>,
) -> Result<MapSnapshot<T>, ComposeError> {
    let known = layout.course_ids();
    let check = |what: &'static str, id: &str| {
        if known.contains(id) {
            Ok(())
        } else {
            Err(ComposeError::UnknownCourse { what, course_id: id.to_string() })
        }
    };
    for e in &graph.edges {
        check("relevance edge", &e.a)?;
        check("relevance edge", &e.b)?;
    }
    for r in &engagement {
        check("engagement record", &r.course_id)?;
    }
    for g in &grades {
        check("grade record", &g.course_id)?;
    }

    let snapshot_id = snapshot_id_for(&layout, &graph, &engagement, &grades, &config);
    let all = DisplaySettings::default();
    let individual =
        engagement.iter().map(|r| individual_composite(&engagement, &r.student_id, &r.course_id, &all)).collect();
    let years = config.cohort_filter.resolve(None);
    let cohort = layout
        .courses
        .iter()
        .map(|c| cohort_composite(&engagement, &c.course_id, &all, years))
        .filter(|c| c.n_contributors.unwrap_or(0) > 0)
        .collect();

    Ok(MapSnapshot {
        snapshot_id,
        created_at: Utc::now(),
        layers: MapLayers { relevance: graph, individual, cohort, grades },
        config,
        layout,
        engagement,
    })
}

/// Relevance graph from the layout's syllabi followed by [`compose`].
pub fn build_snapshot<T: Scalar>(
    layout: CurriculumLayout,
    engagement: Vec<EngagementRecord<T>>,
    grades: Vec<GradeRecord<T>>,
    config: MapConfig<T>,
) -> Result<MapSnapshot<T>, ComposeError> {
    let vectors = build_tfidf::<T>(&corpus_from_layout(&layout), &config.tokenizer)?;
    let graph = build_graph(&vectors, config.policy);
    compose(layout, graph, engagement, grades, config)
}
