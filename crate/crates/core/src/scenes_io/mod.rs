//! Scene files, network checkpoints and trajectory export.

mod checkpoint;
mod schema;
mod trajectory;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, load_checkpoint_for, save_checkpoint, Checkpoint, Descriptor,
    CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use schema::{load_scene, LiftSection, MaterialSection, NetworkSection, Scene, SimulationSection, SCENE_VERSION};
pub use trajectory::{
    export_trajectory, import_trajectory, read_trajectory, write_trajectory, TrajectoryHeader, TRAJECTORY_FORMAT,
    TRAJECTORY_VERSION,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Parse { line: Option<usize>, message: String },
    #[error("{}invalid `{field}`: {message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Invalid {
        line: Option<usize>,
        field: String,
        message: String,
    },
    #[error("checksum mismatch: file is corrupted")]
    Checksum,
    #[error("format version {found} is not supported (this build reads version {supported})")]
    Version { found: u32, supported: u32 },
    #[error("checkpoint does not match scene: {0}")]
    Mismatch(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(String),
}
