//! Trajectory export as newline-delimited JSON: one header line, then one
//! frame per line.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SceneError;
use crate::sim::{Frame, Trajectory};

pub const TRAJECTORY_FORMAT: &str = "liftfield-trajectory";
pub const TRAJECTORY_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryHeader {
    pub format: String,
    pub version: u32,
    pub dim: usize,
    pub k: usize,
    pub frames: usize,
}

pub fn write_trajectory(out: &mut impl Write, traj: &Trajectory) -> Result<(), SceneError> {
    let header = TrajectoryHeader {
        format: TRAJECTORY_FORMAT.into(),
        version: TRAJECTORY_VERSION,
        dim: traj.dim,
        k: traj.k,
        frames: traj.frames.len(),
    };
    let io = |e: std::io::Error| SceneError::Io(e.to_string());
    serde_json::to_writer(&mut *out, &header).map_err(|e| SceneError::Format(e.to_string()))?;
    out.write_all(b"\n").map_err(io)?;
    for f in &traj.frames {
        serde_json::to_writer(&mut *out, f).map_err(|e| SceneError::Format(e.to_string()))?;
        out.write_all(b"\n").map_err(io)?;
    }
    Ok(())
}

pub fn read_trajectory(input: impl BufRead) -> Result<Trajectory, SceneError> {
    let mut lines = input.lines();
    let header_line = lines
        .next()
        .ok_or_else(|| SceneError::Format("empty trajectory file (missing header)".into()))?
        .map_err(|e| SceneError::Io(e.to_string()))?;
    let header: TrajectoryHeader = serde_json::from_str(&header_line).map_err(|e| SceneError::Format(format!("header: {e}")))?;
    if header.format != TRAJECTORY_FORMAT {
        return Err(SceneError::Format(format!("not a trajectory file: {}", header.format)));
    }
    if header.version != TRAJECTORY_VERSION {
        return Err(SceneError::Version {
            found: header.version,
            supported: TRAJECTORY_VERSION,
        });
    }
    let mut frames = Vec::with_capacity(header.frames);
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| SceneError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let frame: Frame = serde_json::from_str(&line).map_err(|e| SceneError::Format(format!("frame line {}: {e}", i + 2)))?;
        if frame.z.len() != header.k * header.dim * (header.dim + 1) {
            return Err(SceneError::Format(format!("frame line {}: z has {} entries", i + 2, frame.z.len())));
        }
        frames.push(frame);
    }
    if frames.len() != header.frames {
        return Err(SceneError::Format(format!("header announces {} frames, found {}", header.frames, frames.len())));
    }
    Ok(Trajectory {
        dim: header.dim,
        k: header.k,
        frames,
    })
}

pub fn export_trajectory(path: impl AsRef<Path>, traj: &Trajectory) -> Result<(), SceneError> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| SceneError::Io(format!("{}: {e}", path.display())))?;
    let mut w = std::io::BufWriter::new(file);
    write_trajectory(&mut w, traj)?;
    w.flush().map_err(|e| SceneError::Io(e.to_string()))
}

pub fn import_trajectory(path: impl AsRef<Path>) -> Result<Trajectory, SceneError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| SceneError::Io(format!("{}: {e}", path.display())))?;
    read_trajectory(BufReader::new(file))
}
