//! Inputs shared by the benchmarks.

use deepjam_core::fungrid::srsf;
use deepjam_core::simgen::{generate, random_warp};
use deepjam_core::{Grid, Scenario, SimConfig, SrsfSample, Warp};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SRSFs of `n` simulated subjects with 43 points per period (127 points).
pub fn desk_srsfs(scenario: Scenario, n: usize) -> Vec<SrsfSample> {
    let cfg = SimConfig { n_total: n, points_per_period: 43, seed: 3, ..SimConfig::default() };
    generate(scenario, &cfg).expect("valid configuration").functions.iter().map(srsf).collect()
}

pub fn random_warps(points: usize, n: usize, roughness: f64) -> Vec<Warp> {
    let grid = Grid::new(points, 0.0, 1.0).expect("valid grid");
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    (0..n)
        .map(|_| random_warp(&grid, roughness, 4, &mut rng).expect("valid warp"))
        .collect()
}
