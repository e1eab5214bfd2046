//! Validation, staging and snapshot computation shared by the CLI and the
//! HTTP ingest endpoint.
//!
//! Validated inputs are staged in canonical form under `<store>/inputs/`;
//! `compute` builds a snapshot from whatever is staged there.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use palm_core::ingestion::{
    parse_engagement_csv, parse_grade_scale, parse_grades_csv, parse_layout, serialize_engagement_csv,
    serialize_grade_scale, serialize_grades_csv, serialize_layout, CsvReport, CurriculumLayout, IngestError,
    IngestErrorKind, Location, RowReject,
};
use palm_core::map::{build_snapshot, ComposeError, StoreError};
use palm_core::{EngagementRecord, GradeRecord, GradeScale, MapConfig, MapSnapshot, SnapshotStore};
use serde::Serialize;
use thiserror::Error;

pub const INPUTS_DIR: &str = "inputs";
const LAYOUT: &str = "layout.json";
const ENGAGEMENT: &str = "engagement.csv";
const GRADES: &str = "grades.csv";
const SCALE: &str = "grade_scale.json";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Validation(#[from] IngestError),
    #[error(transparent)]
    Compose(#[from] ComposeError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("nothing staged under {0}; run `palm ingest` first")]
    NothingStaged(PathBuf),
}

impl PipelineError {
    /// Input problems the caller can fix, as opposed to internal failures.
    pub fn is_validation(&self) -> bool {
        matches!(self, PipelineError::Validation(_) | PipelineError::NothingStaged(_))
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

/// Raw upload: the layout is required, the rest may be absent.
#[derive(Debug, Clone, Default)]
pub struct InputFiles {
    pub layout: Vec<u8>,
    pub engagement: Option<Vec<u8>>,
    pub grades: Option<Vec<u8>>,
    pub grade_scale: Option<Vec<u8>>,
}

impl InputFiles {
    pub fn read(
        layout: &Path,
        engagement: Option<&Path>,
        grades: Option<&Path>,
        grade_scale: Option<&Path>,
    ) -> Result<Self, PipelineError> {
        let read = |p: &Path| fs::read(p).map_err(io_err(p));
        Ok(Self {
            layout: read(layout)?,
            engagement: engagement.map(read).transpose()?,
            grades: grades.map(read).transpose()?,
            grade_scale: grade_scale.map(read).transpose()?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Validated {
    pub layout: CurriculumLayout,
    pub engagement: CsvReport<EngagementRecord>,
    pub grades: CsvReport<GradeRecord>,
    pub scale: Option<GradeScale>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub courses: usize,
    pub engagement_rows: usize,
    pub engagement_accepted: usize,
    pub grade_rows: usize,
    pub grades_accepted: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rejects {
    pub engagement: Vec<RowReject>,
    pub grades: Vec<RowReject>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IngestSummary {
    /// Set once a snapshot has been published from these inputs.
    pub snapshot_id: Option<String>,
    pub counts: Counts,
    pub rejects: Rejects,
}

impl Validated {
    pub fn summary(&self, snapshot_id: Option<String>) -> IngestSummary {
        IngestSummary {
            snapshot_id,
            counts: Counts {
                courses: self.layout.courses.len(),
                engagement_rows: self.engagement.input_rows,
                engagement_accepted: self.engagement.accepted.len(),
                grade_rows: self.grades.input_rows,
                grades_accepted: self.grades.accepted.len(),
            },
            rejects: Rejects { engagement: self.engagement.rejects.clone(), grades: self.grades.rejects.clone() },
        }
    }
}

fn empty_report<R>() -> CsvReport<R> {
    CsvReport { accepted: Vec::new(), rejects: Vec::new(), input_rows: 0 }
}

/// Parses every file; the first hard error aborts. An uploaded scale wins
/// over the configured one.
pub fn validate(files: &InputFiles, configured_scale: Option<GradeScale>) -> Result<Validated, IngestError> {
    let layout = parse_layout(&files.layout)?;
    let scale = match &files.grade_scale {
        Some(bytes) => Some(parse_grade_scale(bytes)?),
        None => configured_scale,
    };
    let engagement = match &files.engagement {
        Some(bytes) => parse_engagement_csv(bytes, &layout)?,
        None => empty_report(),
    };
    let grades = match (&files.grades, &scale) {
        (Some(bytes), Some(scale)) => parse_grades_csv(bytes, &layout, scale)?,
        (Some(bytes), None) if has_data_rows(bytes) => {
            return Err(IngestError {
                file: SCALE.into(),
                location: Location::Path { path: String::new() },
                kind: IngestErrorKind::InvalidScale { message: "grades were supplied without a grade scale".into() },
            })
        }
        _ => empty_report(),
    };
    Ok(Validated { layout, engagement, grades, scale })
}

fn has_data_rows(bytes: &[u8]) -> bool {
    bytes.split(|&b| b == b'\n').skip(1).any(|line| !line.iter().all(u8::is_ascii_whitespace))
}

fn write_atomic(path: &Path, text: &str) -> Result<(), PipelineError> {
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(text.as_bytes()).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// Writes the accepted inputs in canonical form. Callers hold the store's
/// writer lock.
pub fn stage(store_root: &Path, v: &Validated) -> Result<(), PipelineError> {
    let dir = store_root.join(INPUTS_DIR);
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    write_atomic(&dir.join(LAYOUT), &serialize_layout(&v.layout))?;
    write_atomic(&dir.join(ENGAGEMENT), &serialize_engagement_csv(&v.engagement.accepted))?;
    write_atomic(&dir.join(GRADES), &serialize_grades_csv(&v.grades.accepted))?;
    let scale_path = dir.join(SCALE);
    match &v.scale {
        Some(scale) => write_atomic(&scale_path, &serialize_grade_scale(scale))?,
        None if scale_path.exists() => fs::remove_file(&scale_path).map_err(io_err(&scale_path))?,
        None => {}
    }
    Ok(())
}

/// Re-reads the staged canonical inputs.
pub fn load_staged(store_root: &Path) -> Result<Validated, PipelineError> {
    let dir = store_root.join(INPUTS_DIR);
    if !dir.join(LAYOUT).exists() {
        return Err(PipelineError::NothingStaged(dir));
    }
    let optional = |name: &str| -> Result<Option<Vec<u8>>, PipelineError> {
        let p = dir.join(name);
        if p.exists() {
            fs::read(&p).map(Some).map_err(io_err(&p))
        } else {
            Ok(None)
        }
    };
    let files = InputFiles {
        layout: fs::read(dir.join(LAYOUT)).map_err(io_err(&dir.join(LAYOUT)))?,
        engagement: optional(ENGAGEMENT)?,
        grades: optional(GRADES)?,
        grade_scale: optional(SCALE)?,
    };
    Ok(validate(&files, None)?)
}

pub fn build(v: &Validated, base: &MapConfig) -> Result<MapSnapshot, PipelineError> {
    let config = MapConfig { grade_scale: v.scale.clone(), ..base.clone() };
    Ok(build_snapshot(v.layout.clone(), v.engagement.accepted.clone(), v.grades.accepted.clone(), config)?)
}

/// Validate, build, stage and publish in one step under the writer lock.
/// Nothing is published unless every step succeeds.
pub fn ingest_and_publish(
    store: &SnapshotStore,
    files: &InputFiles,
    base: &MapConfig,
    configured_scale: Option<GradeScale>,
) -> Result<(IngestSummary, Arc<MapSnapshot>), PipelineError> {
    let _guard = store.writer();
    let validated = validate(files, configured_scale)?;
    let snapshot = build(&validated, base)?;
    stage(store.root(), &validated)?;
    let published = store.publish_locked(snapshot)?;
    Ok((validated.summary(Some(published.snapshot_id.clone())), published))
}
