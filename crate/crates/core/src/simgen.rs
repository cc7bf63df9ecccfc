//! Simulated quasi-periodic data with planted warps.
//!
//! Every subject is generated as `y_i ∘ ext(γˡ_i) ∘ γᵍ_i`, where `y_i` is a
//! known analytic function (the extended template, possibly with per-period
//! amplitude factors) evaluated exactly at the warped times. The planted
//! warps are centred so that each subject's local warp is recoverable from
//! its total warp.

use std::f64::consts::PI;
use std::ops::Range;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fungrid::{compose_warps, extend_warp, invert_warp, FunctionSample, Grid, PeriodStructure, Warp};
use crate::jam::decompose_total_warp;
use crate::sphere::{exp_map, psi_to_warp, KarcherConfig, PsiPoint, TangentVector};

/// Draws of a tangent vector before giving up on staying in the positive orthant.
const MAX_WARP_RETRIES: usize = 100;

/// Standard deviation of the per-period amplitude factors in scenario 2.
const AMPLITUDE_SD: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Univariate sine periods, no amplitude variation.
    One,
    /// Three channels with per-period amplitude factors.
    Two,
}

impl Scenario {
    pub fn from_number(n: u32) -> Result<Self> {
        match n {
            1 => Ok(Scenario::One),
            2 => Ok(Scenario::Two),
            _ => Err(Error::Config(format!("unknown scenario {n}; expected 1 or 2"))),
        }
    }

    pub fn number(self) -> u32 {
        match self {
            Scenario::One => 1,
            Scenario::Two => 2,
        }
    }

    pub fn channels(self) -> usize {
        match self {
            Scenario::One => 1,
            Scenario::Two => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub n_total: usize,
    pub train_fraction: f64,
    pub tune_fraction: f64,
    pub validation_fraction: f64,
    pub test_fraction: f64,
    pub num_periods: usize,
    pub points_per_period: usize,
    pub seed: u64,
    /// Tangent-space coefficient scale of the per-period warps.
    pub local_roughness: f64,
    /// Tangent-space coefficient scale of the whole-domain warps.
    pub global_roughness: f64,
    pub basis_size: usize,
    pub karcher: KarcherConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_total: 14_000,
            train_fraction: 8.0 / 14.0,
            tune_fraction: 2.0 / 14.0,
            validation_fraction: 2.0 / 14.0,
            test_fraction: 2.0 / 14.0,
            num_periods: 3,
            points_per_period: 65,
            seed: 0,
            local_roughness: 0.11,
            global_roughness: 0.11,
            basis_size: 4,
            karcher: KarcherConfig::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let fractions = [
            self.train_fraction,
            self.tune_fraction,
            self.validation_fraction,
            self.test_fraction,
        ];
        if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::Config("split fractions must lie in [0, 1]".into()));
        }
        let total: f64 = fractions.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("split fractions sum to {total}, expected 1")));
        }
        if self.n_total == 0 {
            return Err(Error::Config("n_total must be positive".into()));
        }
        if self.num_periods == 0 || self.points_per_period < 3 {
            return Err(Error::Config(
                "need at least one period and three points per period".into(),
            ));
        }
        for r in [self.local_roughness, self.global_roughness] {
            if !(r.is_finite() && r >= 0.0) {
                return Err(Error::Config(format!("roughness must be non-negative, got {r}")));
            }
        }
        self.karcher.validate()
    }

    pub fn total_points(&self) -> usize {
        (self.points_per_period - 1) * self.num_periods + 1
    }

    /// Index ranges of the train / tune / validation / test subsets.
    pub fn split(&self) -> DatasetSplit {
        let n = self.n_total;
        let count = |f: f64| ((n as f64) * f).round() as usize;
        let train = count(self.train_fraction).min(n);
        let tune = count(self.tune_fraction).min(n - train);
        let validation = count(self.validation_fraction).min(n - train - tune);
        DatasetSplit {
            train: 0..train,
            tune: train..train + tune,
            validation: train + tune..train + tune + validation,
            test: train + tune + validation..n,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Range<usize>,
    pub tune: Range<usize>,
    pub validation: Range<usize>,
    pub test: Range<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimDataset {
    pub scenario: Scenario,
    pub num_periods: usize,
    pub functions: Vec<FunctionSample>,
    /// Subject functions before warping (the extended template in scenario 1).
    pub unwarped: Vec<FunctionSample>,
    /// Planted local warps, one period rescaled to `[0, 1]`.
    pub local_warps: Vec<Warp>,
    pub global_warps: Vec<Warp>,
    /// `ext(local) ∘ global`; the data are `unwarped ∘ total` up to the
    /// analytic evaluation.
    pub total_warps: Vec<Warp>,
    /// One period of the common template, on `[0, 1/K]`.
    pub template: FunctionSample,
    /// The template extended over all periods, on `[0, 1]`.
    pub extended_template: FunctionSample,
    /// Per-subject amplitude factors (empty in scenario 1).
    pub amplitude_factors: Vec<Vec<f64>>,
    pub split: DatasetSplit,
}

impl SimDataset {
    pub fn subset(&self, range: Range<usize>) -> Vec<FunctionSample> {
        self.functions[range].to_vec()
    }
}

/// Random warp of `[0, 1]` obtained by shooting from the identity along a
/// Gaussian tangent vector `Σ a_m √2 sin(2πmt)`, `a_m ~ N(0, (roughness/m)²)`.
pub fn random_warp(grid: &Grid, roughness: f64, basis_size: usize, rng: &mut impl Rng) -> Result<Warp> {
    if roughness == 0.0 || basis_size == 0 {
        return Ok(Warp::identity(*grid));
    }
    let base = PsiPoint::identity(*grid)?;
    let points = grid.points();
    let mut last_err = None;
    for _ in 0..MAX_WARP_RETRIES {
        let mut v = vec![0.0; grid.len()];
        for m in 1..=basis_size {
            let z: f64 = StandardNormal.sample(rng);
            let a = z * roughness / m as f64;
            let freq = 2.0 * PI * m as f64;
            v.iter_mut()
                .zip(&points)
                .for_each(|(v, t)| *v += a * 2f64.sqrt() * (freq * t).sin());
        }
        let tangent = TangentVector::project(&base, v)?;
        match exp_map(&base, &tangent, 1.0).and_then(|psi| psi_to_warp(&psi)) {
            Ok(w) => return Ok(w),
            Err(e @ Error::OrthantViolation { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::Config("could not draw a warp".into())))
}

/// Re-splits each `(local, global)` pair so that the Karcher mean of the
/// segments of the aligning warp `(ext(local) ∘ global)⁻¹` is exactly
/// `local⁻¹`. The total warp `ext(local) ∘ global` is unchanged.
pub fn center_warp_set(
    locals: &[Warp],
    globals: &[Warp],
    num_periods: usize,
    karcher: &KarcherConfig,
) -> Result<(Vec<Warp>, Vec<Warp>)> {
    if locals.len() != globals.len() {
        return Err(Error::Shape(format!(
            "{} local but {} global warps",
            locals.len(),
            globals.len()
        )));
    }
    let mut new_locals = Vec::with_capacity(locals.len());
    let mut new_globals = Vec::with_capacity(locals.len());
    for (l, g) in locals.iter().zip(globals) {
        let total = compose_warps(&extend_warp(l, num_periods)?, g)?;
        let (mean, global_part) = decompose_total_warp(&invert_warp(&total)?, num_periods, karcher)?;
        new_locals.push(invert_warp(&mean)?);
        new_globals.push(invert_warp(&global_part)?);
    }
    Ok((new_locals, new_globals))
}

/// Analytic channel shapes. Arguments are the position within a period,
/// `u ∈ [0, 1]`, and that period's amplitude factors.
mod shapes {
    use std::f64::consts::PI;

    pub fn sine(u: f64, z: &[f64]) -> f64 {
        z[0] * (2.0 * PI * u).sin()
    }

    fn gauss(x: f64, mean: f64, sd: f64) -> f64 {
        (-0.5 * ((x - mean) / sd).powi(2)).exp() / (sd * (2.0 * PI).sqrt())
    }

    // Bump pair on x ∈ [−3, 3]. The linear terms c3, c4 match c1, c2 at both
    // ends so that every period starts and ends at the same value whatever
    // the factors are.
    pub fn bumps(u: f64, z: &[f64]) -> f64 {
        let x = 6.0 * u - 3.0;
        let a = (-4.5f64 * 4.5 / 2.0).exp();
        let b = (-1.5f64 * 1.5 / 2.0).exp();
        let c1 = (-(x + 1.5).powi(2) / 2.0).exp();
        let c2 = (-(x - 1.5).powi(2) / 2.0).exp();
        let c3 = (a - b) / 6.0 * x + (a + b) / 2.0;
        let c4 = (b - a) / 6.0 * x + (a + b) / 2.0;
        z[0] * (c1 - c3) + c3 + z[1] * (c2 - c4) + c4
    }

    // Density mix on [0, 1]; the offsets p1(0) and p3(1) make both halves
    // meet at u = 0.5.
    pub fn densities(u: f64, z: &[f64]) -> f64 {
        let p1 = |x| gauss(x, 0.25, 0.1);
        let p2 = |x| gauss(x, 0.5, 0.15);
        let p3 = |x| gauss(x, 0.75, 0.1);
        if u < 0.5 {
            z[0] * p2(u) - z[1] * (p1(u) - p1(0.0))
        } else {
            z[0] * p2(u) + z[2] * (p3(u) - p3(1.0))
        }
    }
}

/// One channel: a period shape, the number of amplitude factors it consumes
/// per period and an affine map applied to its values.
#[derive(Clone, Copy)]
struct Channel {
    shape: fn(f64, &[f64]) -> f64,
    factors_per_period: usize,
    scale: f64,
    shift: f64,
}

impl Channel {
    fn raw(shape: fn(f64, &[f64]) -> f64, factors_per_period: usize) -> Self {
        Channel {
            shape,
            factors_per_period,
            scale: 1.0,
            shift: 0.0,
        }
    }

    /// Rescales so that the template (all factors one) spans `[−1, 1]`,
    /// using a dense evaluation to locate its extrema.
    fn normalized(shape: fn(f64, &[f64]) -> f64, factors_per_period: usize) -> Self {
        let ones = vec![1.0; factors_per_period];
        let n = 100_001;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            let v = shape(i as f64 / (n - 1) as f64, &ones);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let scale = 2.0 / (hi - lo);
        Channel {
            shape,
            factors_per_period,
            scale,
            shift: -1.0 - lo * scale,
        }
    }

    fn template(&self, u: f64) -> f64 {
        let ones = vec![1.0; self.factors_per_period];
        self.scale * (self.shape)(u, &ones) + self.shift
    }

    /// Value at normalised time `s ∈ [0, 1]` over `K` periods with factors
    /// laid out period by period. Periods are half open; `s = 1` belongs to
    /// the last one.
    fn eval(&self, s: f64, num_periods: usize, factors: &[f64]) -> f64 {
        let w = (s * num_periods as f64).clamp(0.0, num_periods as f64);
        let k = (w.floor() as usize).min(num_periods - 1);
        let u = w - k as f64;
        let f = self.factors_per_period;
        self.scale * (self.shape)(u, &factors[k * f..(k + 1) * f]) + self.shift
    }
}

fn channels(scenario: Scenario) -> &'static [Channel] {
    static ONE: OnceLock<Vec<Channel>> = OnceLock::new();
    static TWO: OnceLock<Vec<Channel>> = OnceLock::new();
    match scenario {
        Scenario::One => ONE.get_or_init(|| vec![Channel::raw(shapes::sine, 1)]),
        Scenario::Two => TWO.get_or_init(|| {
            vec![
                Channel::raw(shapes::sine, 1),
                Channel::normalized(shapes::bumps, 2),
                Channel::normalized(shapes::densities, 3),
            ]
        }),
    }
}

/// Analytic template of the scenario, channel by channel, at period
/// position `u ∈ [0, 1]`.
pub fn template_value(scenario: Scenario, channel: usize, u: f64) -> f64 {
    channels(scenario)[channel].template(u)
}

fn subject_rng(seed: u64, subject: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(subject as u64);
    rng
}

/// Generates a dataset for `scenario`.
pub fn generate(scenario: Scenario, cfg: &SimConfig) -> Result<SimDataset> {
    cfg.validate()?;
    let k = cfg.num_periods;
    let periods = PeriodStructure::from_segment(cfg.points_per_period, k)?;
    let grid = Grid::unit(periods.total_points())?;
    let local_grid = Grid::unit(cfg.points_per_period)?;
    let chans = channels(scenario);
    let factors_per_subject: usize = chans.iter().map(|c| c.factors_per_period * k).sum();
    let amplitude = Normal::new(1.0, AMPLITUDE_SD).expect("valid normal");

    let mut raw_locals = Vec::with_capacity(cfg.n_total);
    let mut raw_globals = Vec::with_capacity(cfg.n_total);
    let mut factors = Vec::with_capacity(cfg.n_total);
    for i in 0..cfg.n_total {
        let mut rng = subject_rng(cfg.seed, i);
        raw_locals.push(random_warp(&local_grid, cfg.local_roughness, cfg.basis_size, &mut rng)?);
        raw_globals.push(random_warp(&grid, cfg.global_roughness, cfg.basis_size, &mut rng)?);
        factors.push(match scenario {
            Scenario::One => Vec::new(),
            Scenario::Two => (0..factors_per_subject).map(|_| amplitude.sample(&mut rng)).collect(),
        });
    }
    let (local_warps, global_warps) = center_warp_set(&raw_locals, &raw_globals, k, &cfg.karcher)?;

    let points = grid.points();
    let mut functions = Vec::with_capacity(cfg.n_total);
    let mut unwarped = Vec::with_capacity(cfg.n_total);
    let mut total_warps = Vec::with_capacity(cfg.n_total);
    for i in 0..cfg.n_total {
        let total = compose_warps(&extend_warp(&local_warps[i], k)?, &global_warps[i])?;
        let ones;
        let z: &[f64] = match scenario {
            Scenario::One => {
                ones = vec![1.0; k];
                &ones
            }
            Scenario::Two => &factors[i],
        };
        let mut offset = 0;
        let mut observed = Vec::with_capacity(chans.len());
        let mut clean = Vec::with_capacity(chans.len());
        for c in chans {
            let n = c.factors_per_period * k;
            let zc = &z[offset..offset + n];
            offset += n;
            observed.push(total.values().iter().map(|&s| c.eval(s, k, zc)).collect());
            clean.push(points.iter().map(|&s| c.eval(s, k, zc)).collect());
        }
        functions.push(FunctionSample::new(grid, observed)?);
        unwarped.push(FunctionSample::new(grid, clean)?);
        total_warps.push(total);
    }

    let period_grid = periods.segment_grid(&grid)?;
    let template = FunctionSample::from_fn(period_grid, chans.len(), |j, t| {
        chans[j].template(t * k as f64)
    })?;
    let extended_template = FunctionSample::from_fn(grid, chans.len(), |j, s| {
        let w = s * k as f64;
        chans[j].template(w - (w.floor()).min(k as f64 - 1.0))
    })?;
    Ok(SimDataset {
        scenario,
        num_periods: k,
        functions,
        unwarped,
        local_warps,
        global_warps,
        total_warps,
        template,
        extended_template,
        amplitude_factors: factors,
        split: cfg.split(),
    })
}

pub fn scenario1(cfg: &SimConfig) -> Result<SimDataset> {
    generate(Scenario::One, cfg)
}

pub fn scenario2(cfg: &SimConfig) -> Result<SimDataset> {
    generate(Scenario::Two, cfg)
}
