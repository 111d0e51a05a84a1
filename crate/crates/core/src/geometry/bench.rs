//! Hash-grid versus brute-force comparison on random segment soups.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{closest_point, GeometryError, HashQuery, InterfaceMesh, SpatialHashGrid};

#[derive(Clone, Debug)]
pub struct HashBenchReport {
    pub segments: usize,
    pub queries: usize,
    pub threshold: f64,
    /// Queries whose brute-force distance is below the threshold.
    pub near: usize,
    /// Queries where the hash disagrees with brute force.
    pub mismatches: usize,
    pub max_distance_diff: f64,
    pub build_time: Duration,
    pub hash_time: Duration,
    pub brute_time: Duration,
    pub cells: usize,
    pub entries: usize,
}

impl HashBenchReport {
    pub fn exact(&self) -> bool {
        self.mismatches == 0 && self.max_distance_diff <= 1e-12
    }

    pub fn faster(&self) -> bool {
        self.hash_time < self.brute_time
    }
}

/// `n` random segments of length up to `2 * half_length` in the unit square.
pub fn random_segments(n: usize, half_length: f64, rng: &mut impl Rng) -> Result<InterfaceMesh, GeometryError> {
    let mut verts = Vec::with_capacity(2 * n);
    let mut elems = Vec::with_capacity(n);
    for i in 0..n {
        let c = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
        let d = [rng.gen_range(-half_length..half_length), rng.gen_range(-half_length..half_length)];
        verts.push(vec![c[0] - d[0], c[1] - d[1]]);
        verts.push(vec![c[0] + d[0], c[1] + d[1]]);
        elems.push(vec![2 * i, 2 * i + 1]);
    }
    InterfaceMesh::new(2, verts, elems)
}

pub fn hash_benchmark(segments: usize, queries: usize, threshold: f64, seed: u64) -> Result<HashBenchReport, GeometryError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mesh = random_segments(segments, 0.005, &mut rng)?;
    let points: Vec<[f64; 2]> = (0..queries).map(|_| [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)]).collect();

    let t = Instant::now();
    let grid = SpatialHashGrid::build(&mesh, threshold)?;
    let build_time = t.elapsed();

    let t = Instant::now();
    let hashed = points.iter().map(|x| grid.clamped_query(&mesh, x)).collect::<Result<Vec<_>, _>>()?;
    let hash_time = t.elapsed();

    let t = Instant::now();
    let brute = points.iter().map(|x| closest_point(&mesh, x)).collect::<Result<Vec<_>, _>>()?;
    let brute_time = t.elapsed();

    let mut near = 0;
    let mut mismatches = 0;
    let mut max_diff: f64 = 0.0;
    for (h, b) in hashed.iter().zip(&brute) {
        if b.distance < threshold {
            near += 1;
        }
        match h {
            HashQuery::Near(f) => {
                let diff = (f.distance - b.distance).abs();
                max_diff = max_diff.max(diff);
                if b.distance >= threshold || diff > 1e-12 {
                    mismatches += 1;
                }
            }
            HashQuery::Far => {
                if b.distance < threshold {
                    mismatches += 1;
                }
            }
        }
    }
    Ok(HashBenchReport {
        segments,
        queries,
        threshold,
        near,
        mismatches,
        max_distance_diff: max_diff,
        build_time,
        hash_time,
        brute_time,
        cells: grid.cell_count(),
        entries: grid.entry_count(),
    })
}
