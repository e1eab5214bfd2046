//! Curriculum-map learning analytics.
//!
//! A curriculum map (courses on a grid of learning objectives by semesters)
//! serves as the base map; relevance lines, individual and cohort
//! engagement shading and grade pins are overlaid as independent layers.
//! The [`stats`] module holds the pre/post questionnaire analysis used to
//! evaluate such a dashboard.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which is what the service and CLI use.

pub mod engagement;
pub mod ingestion;
pub mod map;
pub mod relevance;
mod scalar;
pub mod stats;
pub mod synth;

pub use scalar::Scalar;

pub type DocumentVector = relevance::DocumentVector<f64>;
pub type RelevanceGraph = relevance::RelevanceGraph<f64>;
pub type RelevanceEdge = relevance::RelevanceEdge<f64>;
pub type RenderPolicy = relevance::RenderPolicy<f64>;
pub type GraphExport = relevance::GraphExport<f64>;
pub type EngagementRecord = ingestion::EngagementRecord<f64>;
pub type GradeRecord = ingestion::GradeRecord<f64>;
pub type GradeScale = ingestion::GradeScale<f64>;
pub type EngagementComposite = engagement::EngagementComposite<f64>;
pub type HoverCard = engagement::HoverCard<f64>;
pub type MapConfig = map::MapConfig<f64>;
pub type MapSnapshot = map::MapSnapshot<f64>;
pub type MapView = map::MapView<f64>;
pub type SnapshotStore = map::SnapshotStore<f64>;
pub type PairedSample = stats::PairedSample<f64>;
pub type EffectSize = stats::EffectSize<f64>;
pub type TestReport = stats::TestReport<f64>;
pub type Comparison = stats::Comparison<f64>;
