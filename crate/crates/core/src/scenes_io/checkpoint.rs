//! Network checkpoints: a text preamble (magic, JSON descriptor, checksum)
//! followed by the flat weight array as little-endian f64.

use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Scene, SceneError};
use crate::field::{FieldNetwork, NetworkSpec};
use crate::lifting::FamilyKind;

pub const CHECKPOINT_MAGIC: &str = "liftfield-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Descriptor {
    pub version: u32,
    pub spec: NetworkSpec,
    /// Clamp threshold `s` the network was trained with.
    pub threshold: f64,
    pub family: FamilyKind,
    pub alpha_range: [f64; 2],
    pub parameters: usize,
}

impl Descriptor {
    pub fn for_scene(scene: &Scene, network: &FieldNetwork) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            spec: network.spec().clone(),
            threshold: scene.lift.threshold,
            family: scene.lift.family,
            alpha_range: scene.lift.alpha_range,
            parameters: network.parameters().len(),
        }
    }

    /// Check that the checkpoint was trained for `scene`.
    pub fn validate_against(&self, scene: &Scene) -> Result<(), SceneError> {
        let expected = scene.network_spec();
        let mismatch = |what: &str, got: String, want: String| {
            Err(SceneError::Mismatch(format!("checkpoint {what} is {got}, scene expects {want}")))
        };
        if self.spec.outputs != expected.outputs {
            return mismatch("k", self.spec.outputs.to_string(), expected.outputs.to_string());
        }
        if self.spec != expected {
            return mismatch("architecture", format!("{:?}", self.spec), format!("{expected:?}"));
        }
        if self.threshold != scene.lift.threshold {
            return mismatch("threshold s", self.threshold.to_string(), scene.lift.threshold.to_string());
        }
        if self.family != scene.lift.family {
            return mismatch("family", self.family.to_string(), scene.lift.family.to_string());
        }
        let [a, b] = scene.lift.alpha_range;
        if a < self.alpha_range[0] || b > self.alpha_range[1] {
            return mismatch("α range", format!("{:?}", self.alpha_range), format!("{:?}", scene.lift.alpha_range));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub descriptor: Descriptor,
    pub network: FieldNetwork,
}

fn digest(descriptor_line: &str, weights: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(descriptor_line.as_bytes());
    h.update(weights);
    hex::encode(h.finalize())
}

pub fn encode_checkpoint(descriptor: &Descriptor, network: &FieldNetwork) -> Vec<u8> {
    let json = serde_json::to_string(descriptor).expect("descriptor serializes");
    let weights: Vec<u8> = network.parameters().iter().flat_map(|v| v.to_le_bytes()).collect();
    let mut out = Vec::with_capacity(weights.len() + json.len() + 128);
    writeln!(out, "{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}").unwrap();
    writeln!(out, "{json}").unwrap();
    writeln!(out, "sha256 {}", digest(&json, &weights)).unwrap();
    out.extend_from_slice(&weights);
    out
}

fn take_line<'a>(bytes: &'a [u8], at: &mut usize) -> Result<&'a str, SceneError> {
    let rest = &bytes[*at..];
    let end = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| SceneError::Format("truncated checkpoint header".into()))?;
    *at += end + 1;
    std::str::from_utf8(&rest[..end]).map_err(|_| SceneError::Format("checkpoint header is not UTF-8".into()))
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint, SceneError> {
    let mut at = 0;
    let magic = take_line(bytes, &mut at)?;
    let version = magic
        .strip_prefix(CHECKPOINT_MAGIC)
        .and_then(|v| v.trim().parse::<u32>().ok())
        .ok_or_else(|| SceneError::Format("not a liftfield checkpoint".into()))?;
    if version != CHECKPOINT_VERSION {
        return Err(SceneError::Version {
            found: version,
            supported: CHECKPOINT_VERSION,
        });
    }
    let json = take_line(bytes, &mut at)?;
    let sum = take_line(bytes, &mut at)?
        .strip_prefix("sha256 ")
        .ok_or_else(|| SceneError::Format("missing checksum line".into()))?
        .to_string();
    let weights = &bytes[at..];
    if digest(json, weights) != sum {
        return Err(SceneError::Checksum);
    }
    let descriptor: Descriptor = serde_json::from_str(json).map_err(|e| SceneError::Format(format!("descriptor: {e}")))?;
    if descriptor.version != CHECKPOINT_VERSION {
        return Err(SceneError::Version {
            found: descriptor.version,
            supported: CHECKPOINT_VERSION,
        });
    }
    if weights.len() != 8 * descriptor.parameters {
        return Err(SceneError::Format(format!(
            "expected {} weights, found {} bytes",
            descriptor.parameters,
            weights.len()
        )));
    }
    let params: Vec<f64> = weights
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let mut network = FieldNetwork::new(descriptor.spec.clone(), &mut ChaCha8Rng::seed_from_u64(0))
        .map_err(|e| SceneError::Format(e.to_string()))?;
    network.set_parameters(&params).map_err(|e| SceneError::Format(e.to_string()))?;
    Ok(Checkpoint { descriptor, network })
}

pub fn save_checkpoint(path: impl AsRef<Path>, descriptor: &Descriptor, network: &FieldNetwork) -> Result<(), SceneError> {
    let path = path.as_ref();
    std::fs::write(path, encode_checkpoint(descriptor, network)).map_err(|e| SceneError::Io(format!("{}: {e}", path.display())))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint, SceneError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| SceneError::Io(format!("{}: {e}", path.display())))?;
    decode_checkpoint(&bytes)
}

/// Load a checkpoint and check it against the scene it will be used with.
pub fn load_checkpoint_for(path: impl AsRef<Path>, scene: &Scene) -> Result<FieldNetwork, SceneError> {
    let ckpt = load_checkpoint(path)?;
    ckpt.descriptor.validate_against(scene)?;
    Ok(ckpt.network)
}

