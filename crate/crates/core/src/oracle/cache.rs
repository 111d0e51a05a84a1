//! On-disk cache of FEM reference modes, keyed by a hash of the problem.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::fem::{fem_modes_1d, fem_modes_2d, Fem1DProblem, FemMesh, FemModes, GridRect};
use super::OracleError;

/// Each entry is a CSV file with one record per mode: eigenvalue, then the
/// nodal vector.
#[derive(Clone, Debug)]
pub struct OracleCache {
    dir: PathBuf,
}

fn cache_err(e: impl std::fmt::Display) -> OracleError {
    OracleError::Cache(e.to_string())
}

impl OracleCache {
    pub fn new(dir: impl AsRef<Path>) -> Self {
        Self {
            dir: dir.as_ref().to_path_buf(),
        }
    }

    pub fn key(description: &str) -> String {
        hex::encode(Sha256::digest(description.as_bytes()))
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.csv"))
    }

    fn load(&self, key: &str) -> Option<(Vec<f64>, Vec<Vec<f64>>)> {
        let mut reader = csv::ReaderBuilder::new().has_headers(false).from_path(self.path(key)).ok()?;
        let mut values = vec![];
        let mut vectors = vec![];
        for record in reader.records() {
            let row: Vec<f64> = record.ok()?.iter().map(|s| s.parse().ok()).collect::<Option<_>>()?;
            let (first, rest) = row.split_first()?;
            values.push(*first);
            vectors.push(rest.to_vec());
        }
        Some((values, vectors))
    }

    fn store(&self, key: &str, modes: &FemModes) -> Result<(), OracleError> {
        fs::create_dir_all(&self.dir).map_err(cache_err)?;
        let mut writer = csv::WriterBuilder::new().has_headers(false).from_path(self.path(key)).map_err(cache_err)?;
        for (lam, v) in modes.eigenvalues.iter().zip(&modes.vectors) {
            let row: Vec<String> = std::iter::once(lam).chain(v).map(|x| format!("{x:e}")).collect();
            writer.write_record(&row).map_err(cache_err)?;
        }
        writer.flush().map_err(cache_err)
    }

    fn cached(
        &self,
        description: String,
        mesh: FemMesh,
        compute: impl FnOnce() -> Result<FemModes, OracleError>,
    ) -> Result<FemModes, OracleError> {
        let key = Self::key(&description);
        if let Some((eigenvalues, vectors)) = self.load(&key) {
            log::debug!("oracle cache hit {key}");
            return Ok(FemModes {
                mesh,
                eigenvalues,
                vectors,
            });
        }
        let modes = compute()?;
        self.store(&key, &modes)?;
        Ok(modes)
    }

    pub fn modes_1d(&self, problem: &Fem1DProblem, k: usize) -> Result<FemModes, OracleError> {
        let description = format!("fem1d/{}/{k}", serde_json::to_string(problem).map_err(cache_err)?);
        let h = 1.0 / problem.elements as f64;
        let mesh = FemMesh::Line {
            nodes: (0..=problem.elements).map(|i| i as f64 * h).collect(),
        };
        self.cached(description, mesh, || fem_modes_1d(problem, k))
    }

    /// `label` must identify the weight function; it is part of the key.
    pub fn modes_2d(
        &self,
        grid: &GridRect,
        label: &str,
        weight: &dyn Fn(&[f64]) -> f64,
        k: usize,
    ) -> Result<FemModes, OracleError> {
        let description = format!("fem2d/{}/{label}/{k}", serde_json::to_string(grid).map_err(cache_err)?);
        self.cached(description, FemMesh::Grid(*grid), || fem_modes_2d(grid, weight, k))
    }
}
