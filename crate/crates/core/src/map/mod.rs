//! Map snapshots: the composed, immutable bundle of base map and layers,
//! filtered views over it, and the file-backed snapshot store.

mod compose;
mod store;
mod view;

pub use compose::{build_snapshot, compose, snapshot_id_for, ComposeError, MapConfig, MapLayers, MapSnapshot};
pub use store::{SnapshotStore, StoreError};
pub use view::{view, Block, CohortShade, GradePin, IndividualShade, MapView, ViewError};
