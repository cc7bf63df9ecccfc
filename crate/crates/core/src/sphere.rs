//! Warping functions as points on the positive orthant of the unit Hilbert sphere.
//!
//! A warp `γ` of `[0, 1]` is represented by `ψ = sqrt(γ̇)`, which has unit L²
//! norm. Exponential and inverse exponential maps of the sphere then give a
//! fixed-point iteration for the Karcher mean of a set of warps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fungrid::{cumulative_trapezoid, inner, l2_norm, Grid, Warp};

/// Angles and tangent norms below this are treated as zero.
const SERIES_THRESHOLD: f64 = 1e-12;
/// Lower bound on `γ̇` before taking the square root, keeping `ψ` strictly positive.
const RATE_FLOOR: f64 = 1e-8;

/// Unit-norm, strictly positive SRSF of a warp.
#[derive(Clone, Debug, PartialEq)]
pub struct PsiPoint {
    grid: Grid,
    values: Vec<f64>,
}

impl PsiPoint {
    /// Validates positivity and unit norm (within `1e-9`).
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        check_orthant(&values)?;
        let norm = l2_norm(&values, grid.spacing());
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSample(format!("psi has norm {norm}, expected 1")));
        }
        Ok(PsiPoint { grid, values })
    }

    /// Rescales positive values to unit norm.
    pub fn normalized(grid: Grid, mut values: Vec<f64>) -> Result<Self> {
        check_orthant(&values)?;
        let norm = l2_norm(&values, grid.spacing());
        values.iter_mut().for_each(|v| *v /= norm);
        Ok(PsiPoint { grid, values })
    }

    /// `ψ ≡ 1`, the representation of the identity warp.
    pub fn identity(grid: Grid) -> Result<Self> {
        if grid.start() != 0.0 || grid.end() != 1.0 {
            return Err(Error::GridMismatch("psi points live on [0, 1]".into()));
        }
        Ok(PsiPoint {
            values: vec![1.0; grid.len()],
            grid,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.values, self.grid.spacing())
    }
}

fn check_orthant(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !(*v > 0.0)) {
        Some(index) => Err(Error::OrthantViolation {
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}

/// Element of the tangent space at some [`PsiPoint`].
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    grid: Grid,
    values: Vec<f64>,
}

impl TangentVector {
    /// Validates orthogonality to `base` (within `1e-8`, relative to `‖v‖` when larger than one).
    pub fn new(base: &PsiPoint, values: Vec<f64>) -> Result<Self> {
        if values.len() != base.grid.len() {
            return Err(Error::Shape(format!(
                "tangent vector has {} values, base point has {}",
                values.len(),
                base.grid.len()
            )));
        }
        let h = base.grid.spacing();
        let dot = inner(&base.values, &values, h);
        let scale = l2_norm(&values, h).max(1.0);
        if dot.abs() > 1e-8 * scale {
            return Err(Error::InvalidSample(format!(
                "vector is not tangent: <psi, v> = {dot}"
            )));
        }
        Ok(TangentVector {
            grid: base.grid,
            values,
        })
    }

    /// Projects an arbitrary vector onto the tangent space at `base`.
    pub fn project(base: &PsiPoint, mut values: Vec<f64>) -> Result<Self> {
        let dot = inner(&base.values, &values, base.grid.spacing());
        for (v, b) in values.iter_mut().zip(&base.values) {
            *v -= dot * b;
        }
        TangentVector::new(base, values)
    }

    pub fn zero(grid: Grid) -> Self {
        TangentVector {
            values: vec![0.0; grid.len()],
            grid,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.values, self.grid.spacing())
    }
}

/// Stopping rule and step size of the Karcher mean iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KarcherConfig {
    /// Stop once the mean tangent vector is shorter than this.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub step_size: f64,
}

impl Default for KarcherConfig {
    fn default() -> Self {
        KarcherConfig {
            tolerance: 1e-6,
            max_iterations: 200,
            step_size: 0.3,
        }
    }
}

impl KarcherConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::Config("karcher tolerance must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("karcher max_iterations must be at least 1".into()));
        }
        if !(self.step_size > 0.0 && self.step_size <= 1.0) {
            return Err(Error::Config("karcher step_size must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

/// `ψ = sqrt(γ̇)`, renormalised to unit norm. `γ` must be a warp of `[0, 1]`.
pub fn warp_to_psi(warp: &Warp) -> Result<PsiPoint> {
    let grid = *warp.grid();
    if grid.start() != 0.0 || grid.end() != 1.0 {
        return Err(Error::GridMismatch(format!(
            "warp_to_psi expects a warp of [0, 1], got [{}, {}]",
            grid.start(),
            grid.end()
        )));
    }
    let values = warp
        .derivative()
        .into_iter()
        .map(|d| d.max(RATE_FLOOR).sqrt())
        .collect();
    PsiPoint::normalized(grid, values)
}

/// `γ(t) = ∫₀ᵗ ψ²`, pinned so that `γ(0) = 0` and `γ(1) = 1`.
pub fn psi_to_warp(psi: &PsiPoint) -> Result<Warp> {
    let squared: Vec<f64> = psi.values.iter().map(|v| v * v).collect();
    let mut gamma = cumulative_trapezoid(&squared, psi.grid.spacing(), 0.0);
    let total = gamma[gamma.len() - 1];
    gamma.iter_mut().for_each(|g| *g /= total);
    Warp::pinned(psi.grid, gamma)
}

/// Geodesic distance `arccos <ψ₁, ψ₂>`, evaluated through the chord length
/// for accuracy at small angles.
pub fn geodesic_distance(a: &PsiPoint, b: &PsiPoint) -> f64 {
    let h = a.grid.spacing();
    let diff: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect();
    let chord = l2_norm(&diff, h);
    2.0 * (0.5 * chord).min(1.0).asin()
}

/// `exp_ψ(s·v) = cos(‖sv‖)ψ + sin(‖sv‖)·sv/‖sv‖`.
pub fn exp_map(psi: &PsiPoint, v: &TangentVector, scale: f64) -> Result<PsiPoint> {
    let h = psi.grid.spacing();
    let norm = scale.abs() * l2_norm(&v.values, h);
    if norm < SERIES_THRESHOLD {
        return Ok(psi.clone());
    }
    let (s, c) = norm.sin_cos();
    let coeff = s * scale / norm;
    let values: Vec<f64> = psi
        .values
        .iter()
        .zip(&v.values)
        .map(|(p, t)| c * p + coeff * t)
        .collect();
    PsiPoint::normalized(psi.grid, values)
}

/// `exp_ψ⁻¹ ψ̃ = θ/sin θ · (ψ̃ − <ψ, ψ̃> ψ)`.
pub fn inv_exp_map(psi: &PsiPoint, target: &PsiPoint) -> Result<TangentVector> {
    if !psi.grid.matches(&target.grid) {
        return Err(Error::GridMismatch("inv_exp_map on different grids".into()));
    }
    let h = psi.grid.spacing();
    let theta = geodesic_distance(psi, target);
    if theta < SERIES_THRESHOLD {
        return Ok(TangentVector::zero(psi.grid));
    }
    if theta >= std::f64::consts::PI - 1e-9 {
        return Err(Error::Antipodal(theta));
    }
    let dot = inner(&psi.values, &target.values, h).clamp(-1.0, 1.0);
    let coeff = theta / theta.sin();
    let values = target
        .values
        .iter()
        .zip(&psi.values)
        .map(|(t, p)| coeff * (t - dot * p))
        .collect();
    Ok(TangentVector {
        grid: psi.grid,
        values,
    })
}

/// Outcome of [`karcher_mean_warps`].
#[derive(Clone, Debug)]
pub struct KarcherMean {
    pub mean: Warp,
    pub psi: PsiPoint,
    pub iterations: usize,
    /// Norm of the mean tangent vector at the returned mean.
    pub residual: f64,
    pub converged: bool,
}

/// Karcher mean of warps of `[0, 1]` under the Fisher-Rao metric.
pub fn karcher_mean_warps(warps: &[Warp], cfg: &KarcherConfig) -> Result<KarcherMean> {
    cfg.validate()?;
    let first = warps
        .first()
        .ok_or_else(|| Error::InvalidSample("karcher mean of an empty set".into()))?;
    let grid = *first.grid();
    let psis = warps
        .iter()
        .map(|w| {
            if !w.grid().matches(&grid) {
                return Err(Error::GridMismatch("karcher mean inputs differ in grid".into()));
            }
            warp_to_psi(w)
        })
        .collect::<Result<Vec<_>>>()?;
    let karcher = karcher_mean_psi(&psis, cfg)?;
    let mean = psi_to_warp(&karcher.0)?;
    Ok(KarcherMean {
        mean,
        psi: karcher.0,
        iterations: karcher.1,
        residual: karcher.2,
        converged: karcher.2 < cfg.tolerance,
    })
}

/// Fixed-point iteration on the sphere; returns `(mean, iterations, residual)`.
pub fn karcher_mean_psi(psis: &[PsiPoint], cfg: &KarcherConfig) -> Result<(PsiPoint, usize, f64)> {
    let grid = psis[0].grid;
    let n = psis.len() as f64;
    let mut acc = vec![0.0; grid.len()];
    for psi in psis {
        acc.iter_mut().zip(&psi.values).for_each(|(a, v)| *a += v / n);
    }
    let mut mu = PsiPoint::normalized(grid, acc)?;
    let mut mean_v = TangentVector::zero(grid);
    let mut residual = 0.0;
    let mut e = 0;
    while (e == 0 || residual >= cfg.tolerance) && e < cfg.max_iterations {
        e += 1;
        mu = exp_map(&mu, &mean_v, cfg.step_size)?;
        let mut acc = vec![0.0; grid.len()];
        for psi in psis {
            let v = inv_exp_map(&mu, psi)?;
            acc.iter_mut().zip(&v.values).for_each(|(a, x)| *a += x / n);
        }
        mean_v = TangentVector {
            grid,
            values: acc,
        };
        residual = mean_v.norm();
    }
    Ok((mu, e, residual))
}

/// Sum of squared geodesic distances from `mu` to every point.
pub fn frechet_functional(mu: &PsiPoint, psis: &[PsiPoint]) -> f64 {
    psis.iter().map(|p| geodesic_distance(mu, p).powi(2)).sum()
}
