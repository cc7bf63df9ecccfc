//! Discretised functions and warping functions on equidistant grids.
//!
//! Every quantity lives on a [`Grid`] of `P` equidistant points that include
//! both endpoints. Three numerical building blocks are shared by everything
//! downstream so that discrete identities (isometry of the group action,
//! reconstruction of a function from its SRSF) hold consistently:
//!
//! - derivatives: central differences in the interior, second-order one-sided
//!   differences at the two boundary points ([`derivative`]);
//! - interpolation: piecewise linear ([`locate`]);
//! - integration and norms: the trapezoidal rule ([`integrate`], [`l2_norm`]).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative margin by which consecutive warp values must increase.
pub const MONOTONE_MARGIN: f64 = 1e-12;

const GRID_TOLERANCE: f64 = 1e-12;

/// Equidistant grid of `num_points` points on `[start, end]`, endpoints included.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct Grid {
    num_points: usize,
    start: f64,
    end: f64,
}

#[derive(Serialize, Deserialize)]
struct RawGrid {
    num_points: usize,
    start: f64,
    end: f64,
}

impl TryFrom<RawGrid> for Grid {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        Grid::new(raw.num_points, raw.start, raw.end)
    }
}

impl From<Grid> for RawGrid {
    fn from(g: Grid) -> Self {
        RawGrid {
            num_points: g.num_points,
            start: g.start,
            end: g.end,
        }
    }
}

impl Grid {
    pub fn new(num_points: usize, start: f64, end: f64) -> Result<Self> {
        if num_points < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 points, got {num_points}"
            )));
        }
        if !start.is_finite() || !end.is_finite() || end <= start {
            return Err(Error::InvalidGrid(format!(
                "domain [{start}, {end}] is not a proper finite interval"
            )));
        }
        Ok(Grid {
            num_points,
            start,
            end,
        })
    }

    /// Grid on `[0, 1]`.
    pub fn unit(num_points: usize) -> Result<Self> {
        Grid::new(num_points, 0.0, 1.0)
    }

    pub fn len(&self) -> usize {
        self.num_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    /// Length `b - a` of the domain.
    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    pub fn spacing(&self) -> f64 {
        self.length() / (self.num_points - 1) as f64
    }

    pub fn point(&self, p: usize) -> f64 {
        if p + 1 == self.num_points {
            self.end
        } else {
            self.start + self.length() * (p as f64 / (self.num_points - 1) as f64)
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.num_points).map(|p| self.point(p)).collect()
    }

    /// Same number of points and the same domain up to rounding.
    pub fn matches(&self, other: &Grid) -> bool {
        let tol = GRID_TOLERANCE * self.length().abs().max(1.0);
        self.num_points == other.num_points
            && (self.start - other.start).abs() <= tol
            && (self.end - other.end).abs() <= tol
    }

    fn ensure_matches(&self, other: &Grid, what: &str) -> Result<()> {
        if self.matches(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{what}: {} points on [{}, {}] vs {} points on [{}, {}]",
                self.num_points, self.start, self.end, other.num_points, other.start, other.end
            )))
        }
    }

    /// Same number of points on `[start, end]`.
    pub fn with_domain(&self, start: f64, end: f64) -> Result<Grid> {
        Grid::new(self.num_points, start, end)
    }
}

// ---------------------------------------------------------------------------
// Shared numerical kernels
// ---------------------------------------------------------------------------

/// Numerical derivative of equidistant samples with spacing `h`.
///
/// Central differences at interior points and second-order one-sided
/// differences at the boundaries. Requires at least three samples.
pub fn derivative(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    assert!(n >= 3, "derivative needs at least 3 samples");
    let inv = 1.0 / (2.0 * h);
    let mut d = Vec::with_capacity(n);
    // written as differences so that constants differentiate to exactly zero
    d.push((4.0 * (values[1] - values[0]) - (values[2] - values[0])) * inv);
    for i in 1..n - 1 {
        d.push((values[i + 1] - values[i - 1]) * inv);
    }
    d.push((4.0 * (values[n - 1] - values[n - 2]) - (values[n - 1] - values[n - 3])) * inv);
    d
}

/// Adjoint (transpose) of [`derivative`]: maps a gradient with respect to the
/// derivative samples onto a gradient with respect to the input samples.
pub fn derivative_adjoint(grad: &[f64], h: f64) -> Vec<f64> {
    let n = grad.len();
    assert!(n >= 3, "derivative needs at least 3 samples");
    let inv = 1.0 / (2.0 * h);
    let mut out = vec![0.0; n];
    out[0] -= 3.0 * grad[0] * inv;
    out[1] += 4.0 * grad[0] * inv;
    out[2] -= grad[0] * inv;
    for i in 1..n - 1 {
        out[i + 1] += grad[i] * inv;
        out[i - 1] -= grad[i] * inv;
    }
    out[n - 1] += 3.0 * grad[n - 1] * inv;
    out[n - 2] -= 4.0 * grad[n - 1] * inv;
    out[n - 3] += grad[n - 1] * inv;
    out
}

/// Trapezoidal quadrature weights for `n` samples with spacing `h`.
pub fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    w[0] = 0.5 * h;
    w[n - 1] = 0.5 * h;
    w
}

/// Trapezoidal integral of equidistant samples.
pub fn integrate(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let interior: f64 = values[1..n - 1].iter().sum();
    h * (interior + 0.5 * (values[0] + values[n - 1]))
}

/// Trapezoidal L² inner product.
pub fn inner(a: &[f64], b: &[f64], h: f64) -> f64 {
    let n = a.len();
    debug_assert_eq!(n, b.len());
    let mut acc = 0.5 * (a[0] * b[0] + a[n - 1] * b[n - 1]);
    for i in 1..n - 1 {
        acc += a[i] * b[i];
    }
    acc * h
}

pub fn l2_norm(values: &[f64], h: f64) -> f64 {
    inner(values, values, h).max(0.0).sqrt()
}

/// Squared L² distance between two sample vectors.
pub fn l2_distance_sq(a: &[f64], b: &[f64], h: f64) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    inner(&diff, &diff, h)
}

/// Running trapezoidal integral starting at `initial`.
pub fn cumulative_trapezoid(values: &[f64], h: f64, initial: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = initial;
    out.push(acc);
    for w in values.windows(2) {
        acc += 0.5 * h * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

/// Segment index `i` and fraction `λ` such that `x = start + (i + λ)·h`.
///
/// Points lying exactly on an interior knot are assigned to the segment on
/// their left (`λ = 1`); points outside the grid are clamped to it.
pub fn locate(start: f64, h: f64, n: usize, x: f64) -> (usize, f64) {
    let u = ((x - start) / h).clamp(0.0, (n - 1) as f64);
    let i = (u.ceil() as usize).saturating_sub(1).min(n - 2);
    (i, u - i as f64)
}

/// Linear interpolation of equidistant samples at `x`.
pub fn interpolate(values: &[f64], start: f64, h: f64, x: f64) -> f64 {
    let (i, lambda) = locate(start, h, values.len(), x);
    (1.0 - lambda) * values[i] + lambda * values[i + 1]
}

fn sign_sqrt(x: f64) -> f64 {
    if x > 0.0 {
        x.sqrt()
    } else if x < 0.0 {
        -(-x).sqrt()
    } else {
        0.0
    }
}

fn check_channels(grid: &Grid, channels: &[Vec<f64>]) -> Result<()> {
    if channels.is_empty() {
        return Err(Error::InvalidSample("at least one channel is required".into()));
    }
    for (j, ch) in channels.iter().enumerate() {
        if ch.len() != grid.len() {
            return Err(Error::InvalidSample(format!(
                "channel {j} has {} values, grid has {} points",
                ch.len(),
                grid.len()
            )));
        }
        if let Some(p) = ch.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSample(format!(
                "channel {j} has a non-finite value at index {p}"
            )));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Samples
// ---------------------------------------------------------------------------

/// A multivariate function sampled on a grid, one vector per channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionSample {
    grid: Grid,
    channels: Vec<Vec<f64>>,
}

impl FunctionSample {
    pub fn new(grid: Grid, channels: Vec<Vec<f64>>) -> Result<Self> {
        check_channels(&grid, &channels)?;
        Ok(FunctionSample { grid, channels })
    }

    pub fn univariate(grid: Grid, values: Vec<f64>) -> Result<Self> {
        Self::new(grid, vec![values])
    }

    /// Samples `f(t)` for each channel `j` at every grid point.
    pub fn from_fn(grid: Grid, num_channels: usize, f: impl Fn(usize, f64) -> f64) -> Result<Self> {
        let channels = (0..num_channels)
            .map(|j| grid.points().into_iter().map(|t| f(j, t)).collect())
            .collect();
        Self::new(grid, channels)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn channel(&self, j: usize) -> &[f64] {
        &self.channels[j]
    }

    pub fn into_channels(self) -> Vec<Vec<f64>> {
        self.channels
    }

    pub fn initial_values(&self) -> Vec<f64> {
        self.channels.iter().map(|c| c[0]).collect()
    }

    /// Same values on a different domain with the same number of points.
    pub fn with_domain(&self, start: f64, end: f64) -> Result<Self> {
        Ok(FunctionSample {
            grid: self.grid.with_domain(start, end)?,
            channels: self.channels.clone(),
        })
    }

    pub fn sup_norm(&self) -> f64 {
        self.channels
            .iter()
            .flatten()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// SRSF of a [`FunctionSample`], keeping the initial values for reconstruction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SrsfSample {
    grid: Grid,
    channels: Vec<Vec<f64>>,
    anchor: Vec<f64>,
}

impl SrsfSample {
    pub fn new(grid: Grid, channels: Vec<Vec<f64>>, anchor: Vec<f64>) -> Result<Self> {
        check_channels(&grid, &channels)?;
        if anchor.len() != channels.len() || anchor.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidSample(format!(
                "anchor must hold one finite value per channel ({} channels, {} anchors)",
                channels.len(),
                anchor.len()
            )));
        }
        Ok(SrsfSample {
            grid,
            channels,
            anchor,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn channel(&self, j: usize) -> &[f64] {
        &self.channels[j]
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn with_anchor(mut self, anchor: Vec<f64>) -> Result<Self> {
        if anchor.len() != self.channels.len() {
            return Err(Error::Shape(format!(
                "anchor has {} values for {} channels",
                anchor.len(),
                self.channels.len()
            )));
        }
        self.anchor = anchor;
        Ok(self)
    }

    /// Channel-wise L² norm.
    pub fn channel_norms(&self) -> Vec<f64> {
        let h = self.grid.spacing();
        self.channels.iter().map(|c| l2_norm(c, h)).collect()
    }
}

// ---------------------------------------------------------------------------
// Warps
// ---------------------------------------------------------------------------

/// A boundary-preserving, strictly increasing warping function sampled on a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWarp", into = "RawWarp")]
pub struct Warp {
    grid: Grid,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawWarp {
    grid: Grid,
    values: Vec<f64>,
}

impl TryFrom<RawWarp> for Warp {
    type Error = Error;

    fn try_from(raw: RawWarp) -> Result<Self> {
        Warp::new(raw.grid, raw.values)
    }
}

impl From<Warp> for RawWarp {
    fn from(w: Warp) -> Self {
        RawWarp {
            grid: w.grid,
            values: w.values,
        }
    }
}

impl Warp {
    /// Validates endpoints (exact) and strict monotonicity.
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidSample(format!(
                "warp has {} values, grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        let (first, last) = (values[0], values[values.len() - 1]);
        if first != grid.start() || last != grid.end() {
            return Err(Error::WarpEndpoints {
                first,
                last,
                start: grid.start(),
                end: grid.end(),
            });
        }
        let margin = MONOTONE_MARGIN * grid.length();
        for (index, w) in values.windows(2).enumerate() {
            // also rejects NaN
            if !(w[1] - w[0] > margin) {
                return Err(Error::NonMonotoneWarp {
                    index,
                    left: w[0],
                    right: w[1],
                });
            }
        }
        Ok(Warp { grid, values })
    }

    /// Overwrites the endpoints with the domain bounds, then validates.
    pub fn pinned(grid: Grid, mut values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.first_mut() {
            *v = grid.start();
        }
        if let Some(v) = values.last_mut() {
            *v = grid.end();
        }
        Warp::new(grid, values)
    }

    pub fn identity(grid: Grid) -> Self {
        Warp {
            values: grid.points(),
            grid,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_identity(&self) -> bool {
        self.values
            .iter()
            .enumerate()
            .all(|(p, v)| *v == self.grid.point(p))
    }

    pub fn eval(&self, x: f64) -> f64 {
        interpolate(&self.values, self.grid.start(), self.grid.spacing(), x)
    }

    /// `γ̇` with the shared derivative stencil.
    pub fn derivative(&self) -> Vec<f64> {
        derivative(&self.values, self.grid.spacing())
    }

    pub fn sup_distance(&self, other: &Warp) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Sup distance from the identity warp of the same grid.
    pub fn distance_from_identity(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .fold(0.0_f64, |m, (p, v)| m.max((v - self.grid.point(p)).abs()))
    }
}

/// Affine rescale of a warp's domain and image onto `[start, end]`.
pub fn scale_warp(warp: &Warp, start: f64, end: f64) -> Result<Warp> {
    let grid = warp.grid.with_domain(start, end)?;
    let (a, len) = (warp.grid.start(), warp.grid.length());
    let factor = (end - start) / len;
    let values = warp
        .values
        .iter()
        .map(|v| start + (v - a) * factor)
        .collect();
    Warp::pinned(grid, values)
}

/// `γ₁ ∘ γ₂`, sampled on the grid of `γ₂`.
pub fn compose_warps(outer: &Warp, inner: &Warp) -> Result<Warp> {
    outer.grid.ensure_matches(&inner.grid, "compose_warps")?;
    if inner.is_identity() {
        return Ok(outer.clone());
    }
    let values = inner.values.iter().map(|&x| outer.eval(x)).collect();
    Warp::pinned(inner.grid, values)
}

/// Interpolated inverse obtained by reading the graph of `γ` with swapped axes.
pub fn invert_warp(warp: &Warp) -> Result<Warp> {
    let grid = warp.grid;
    let h = grid.spacing();
    let v = &warp.values;
    let n = v.len();
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for p in 0..n {
        let t = grid.point(p);
        while seg + 2 < n && v[seg + 1] < t {
            seg += 1;
        }
        let frac = ((t - v[seg]) / (v[seg + 1] - v[seg])).clamp(0.0, 1.0);
        out.push(grid.point(seg) + frac * h);
    }
    Warp::pinned(grid, out)
}

// ---------------------------------------------------------------------------
// SRSF transform pair and the group action
// ---------------------------------------------------------------------------

/// `q = sign(ḟ)·sqrt(|ḟ|)` per channel, keeping `f(0)` as the anchor.
pub fn srsf(f: &FunctionSample) -> SrsfSample {
    let h = f.grid.spacing();
    let channels = f
        .channels
        .iter()
        .map(|c| derivative(c, h).into_iter().map(sign_sqrt).collect())
        .collect();
    SrsfSample {
        grid: f.grid,
        channels,
        anchor: f.initial_values(),
    }
}

/// `f(t) = f(0) + ∫₀ᵗ q|q|`, trapezoidal.
pub fn srsf_inverse(q: &SrsfSample) -> FunctionSample {
    let h = q.grid.spacing();
    let channels = q
        .channels
        .iter()
        .zip(&q.anchor)
        .map(|(c, &a)| {
            let integrand: Vec<f64> = c.iter().map(|v| v * v.abs()).collect();
            cumulative_trapezoid(&integrand, h, a)
        })
        .collect();
    FunctionSample {
        grid: q.grid,
        channels,
    }
}

/// Group action `(q, γ) = (q ∘ γ)·sqrt(γ̇)`.
pub fn warp_srsf(q: &SrsfSample, warp: &Warp) -> Result<SrsfSample> {
    q.grid.ensure_matches(&warp.grid, "warp_srsf")?;
    if warp.is_identity() {
        return Ok(q.clone());
    }
    let (start, h) = (q.grid.start(), q.grid.spacing());
    let root_rate: Vec<f64> = warp
        .derivative()
        .into_iter()
        .map(|d| d.max(0.0).sqrt())
        .collect();
    let channels = q
        .channels
        .iter()
        .map(|c| {
            warp.values
                .iter()
                .zip(&root_rate)
                .map(|(&g, &r)| interpolate(c, start, h, g) * r)
                .collect()
        })
        .collect();
    Ok(SrsfSample {
        grid: q.grid,
        channels,
        anchor: q.anchor.clone(),
    })
}

/// Elementwise composition `f ∘ γ` by linear interpolation.
pub fn warp_function(f: &FunctionSample, warp: &Warp) -> Result<FunctionSample> {
    f.grid.ensure_matches(&warp.grid, "warp_function")?;
    if warp.is_identity() {
        return Ok(f.clone());
    }
    let (start, h) = (f.grid.start(), f.grid.spacing());
    let channels = f
        .channels
        .iter()
        .map(|c| warp.values.iter().map(|&g| interpolate(c, start, h, g)).collect())
        .collect();
    Ok(FunctionSample {
        grid: f.grid,
        channels,
    })
}

// ---------------------------------------------------------------------------
// Periodic extension and split
// ---------------------------------------------------------------------------

/// `K` periods of equal length on a grid with `P` points; `(P - 1)` must be
/// divisible by `K`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodStructure {
    num_periods: usize,
    segment_points: usize,
}

impl PeriodStructure {
    pub fn new(num_points: usize, num_periods: usize) -> Result<Self> {
        if num_periods == 0 || num_points < 3 || (num_points - 1) % num_periods != 0 {
            return Err(Error::PeriodMismatch {
                points: num_points,
                periods: num_periods,
            });
        }
        let steps = (num_points - 1) / num_periods;
        if steps < 2 {
            return Err(Error::PeriodMismatch {
                points: num_points,
                periods: num_periods,
            });
        }
        Ok(PeriodStructure {
            num_periods,
            segment_points: steps + 1,
        })
    }

    /// Period structure obtained by extending a single period of `segment_points` points.
    pub fn from_segment(segment_points: usize, num_periods: usize) -> Result<Self> {
        Self::new(num_periods * (segment_points.max(1) - 1) + 1, num_periods)
    }

    pub fn num_periods(&self) -> usize {
        self.num_periods
    }

    /// Points per period, shared boundary points included.
    pub fn segment_points(&self) -> usize {
        self.segment_points
    }

    pub fn total_points(&self) -> usize {
        self.num_periods * (self.segment_points - 1) + 1
    }

    /// Period length `τ` for a full grid.
    pub fn period_length(&self, grid: &Grid) -> f64 {
        grid.length() / self.num_periods as f64
    }

    /// Grid of one period, shifted to start at zero.
    pub fn segment_grid(&self, grid: &Grid) -> Result<Grid> {
        Grid::new(self.segment_points, 0.0, self.period_length(grid))
    }
}

/// `K` overlapping chunks; interior boundary samples appear in both neighbours.
pub fn split_values(values: &[f64], periods: &PeriodStructure) -> Vec<Vec<f64>> {
    let m = periods.segment_points - 1;
    (0..periods.num_periods)
        .map(|k| values[k * m..=(k + 1) * m].to_vec())
        .collect()
}

/// `K` copies of `values[..m]` followed by the final sample.
pub fn extend_values(values: &[f64], num_periods: usize) -> Vec<f64> {
    let m = values.len() - 1;
    let mut out = Vec::with_capacity(num_periods * m + 1);
    for _ in 0..num_periods {
        out.extend_from_slice(&values[..m]);
    }
    out.push(values[m]);
    out
}

/// Periodic extension of a function over `K` periods; the output grid is `[0, 1]`.
pub fn extend_function(f: &FunctionSample, num_periods: usize) -> Result<FunctionSample> {
    let periods = PeriodStructure::from_segment(f.grid.len(), num_periods)?;
    let grid = Grid::unit(periods.total_points())?;
    let channels = f
        .channels
        .iter()
        .map(|c| extend_values(c, num_periods))
        .collect();
    FunctionSample::new(grid, channels)
}

/// Periodic extension of an SRSF segment on `[a, b]` to `[a, a + K(b - a)]`.
///
/// SRSF values depend on the time scale, so the domain grows with `K` instead
/// of being rescaled.
pub fn extend_srsf(q: &SrsfSample, num_periods: usize) -> Result<SrsfSample> {
    let periods = PeriodStructure::from_segment(q.grid.len(), num_periods)?;
    let a = q.grid.start();
    let grid = Grid::new(
        periods.total_points(),
        a,
        a + num_periods as f64 * q.grid.length(),
    )?;
    let channels = q
        .channels
        .iter()
        .map(|c| extend_values(c, num_periods))
        .collect();
    SrsfSample::new(grid, channels, q.anchor.clone())
}

/// Split into `K` functions, each on `[0, τ]`.
pub fn split_function(f: &FunctionSample, num_periods: usize) -> Result<Vec<FunctionSample>> {
    let periods = PeriodStructure::new(f.grid.len(), num_periods)?;
    let grid = periods.segment_grid(&f.grid)?;
    let per_channel: Vec<Vec<Vec<f64>>> = f
        .channels
        .iter()
        .map(|c| split_values(c, &periods))
        .collect();
    (0..num_periods)
        .map(|k| {
            let channels = per_channel.iter().map(|segs| segs[k].clone()).collect();
            FunctionSample::new(grid, channels)
        })
        .collect()
}

/// Split an SRSF into `K` segments on `[0, τ]`; each anchor is the
/// reconstructed function value at the start of its segment.
pub fn split_srsf(q: &SrsfSample, num_periods: usize) -> Result<Vec<SrsfSample>> {
    let periods = PeriodStructure::new(q.grid.len(), num_periods)?;
    let grid = periods.segment_grid(&q.grid)?;
    let m = periods.segment_points - 1;
    let reconstructed = srsf_inverse(q);
    let per_channel: Vec<Vec<Vec<f64>>> = q
        .channels
        .iter()
        .map(|c| split_values(c, &periods))
        .collect();
    (0..num_periods)
        .map(|k| {
            let channels = per_channel.iter().map(|segs| segs[k].clone()).collect();
            let anchor = reconstructed.channels.iter().map(|c| c[k * m]).collect();
            SrsfSample::new(grid, channels, anchor)
        })
        .collect()
}

/// Split a warp into `K` segments, each affinely rescaled to a warp of `[0, 1]`.
///
/// A segment of a warp is generally not boundary preserving on its own
/// period, so the image is rescaled together with the domain.
pub fn split_warp(warp: &Warp, num_periods: usize) -> Result<Vec<Warp>> {
    let periods = PeriodStructure::new(warp.grid.len(), num_periods)?;
    let grid = Grid::unit(periods.segment_points)?;
    split_values(&warp.values, &periods)
        .into_iter()
        .map(|seg| {
            let (lo, hi) = (seg[0], seg[seg.len() - 1]);
            let values = seg.iter().map(|v| (v - lo) / (hi - lo)).collect();
            Warp::pinned(grid, values)
        })
        .collect()
}

/// Periodic extension `(ext γ)(t + kτ) = γ(t) + kτ`, with domain and image
/// rescaled to `[0, 1]`.
pub fn extend_warp(warp: &Warp, num_periods: usize) -> Result<Warp> {
    let periods = PeriodStructure::from_segment(warp.grid.len(), num_periods)?;
    let grid = Grid::unit(periods.total_points())?;
    let (a, len) = (warp.grid.start(), warp.grid.length());
    let unit: Vec<f64> = warp.values.iter().map(|v| (v - a) / len).collect();
    let m = unit.len() - 1;
    let k_f = num_periods as f64;
    let mut values = Vec::with_capacity(periods.total_points());
    for k in 0..num_periods {
        values.extend(unit[..m].iter().map(|u| (u + k as f64) / k_f));
    }
    values.push(1.0);
    Warp::pinned(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sample(p: usize, f: impl Fn(f64) -> f64) -> FunctionSample {
        FunctionSample::from_fn(Grid::unit(p).unwrap(), 1, |_, t| f(t)).unwrap()
    }

    fn bent_warp(p: usize, a: f64) -> Warp {
        // t + a·sin(2πt)/(2π) is strictly increasing for |a| < 1
        let grid = Grid::unit(p).unwrap();
        let v = grid
            .points()
            .iter()
            .map(|t| t + a * (2.0 * PI * t).sin() / (2.0 * PI))
            .collect();
        Warp::pinned(grid, v).unwrap()
    }

    #[test]
    fn grid_rejects_degenerate_input() {
        assert!(Grid::unit(2).is_err());
        assert!(Grid::new(5, 1.0, 1.0).is_err());
        assert!(Grid::new(5, 0.0, f64::NAN).is_err());
        let g = Grid::new(5, 0.0, 2.0).unwrap();
        assert_eq!(g.spacing(), 0.5);
        assert_eq!(g.point(4), 2.0);
    }

    #[test]
    fn srsf_of_line_is_one() {
        let q = srsf(&sample(5, |t| t));
        for v in q.channel(0) {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn srsf_of_square() {
        let f = sample(101, |t| t * t);
        let q = srsf(&f);
        let g = f.grid();
        for p in 1..100 {
            let t = g.point(p);
            assert!((q.channel(0)[p] - (2.0 * t).sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn srsf_of_constant_is_zero() {
        let q = srsf(&sample(9, |_| 4.2));
        assert!(q.channel(0).iter().all(|v| *v == 0.0));
        assert_eq!(q.anchor(), &[4.2]);
    }

    #[test]
    fn inverse_of_constant_srsf() {
        let g = Grid::unit(7).unwrap();
        let one = SrsfSample::new(g, vec![vec![1.0; 7]], vec![0.0]).unwrap();
        let f = srsf_inverse(&one);
        for (p, v) in f.channel(0).iter().enumerate() {
            assert!((v - g.point(p)).abs() < 1e-14);
        }
        let zero = SrsfSample::new(g, vec![vec![0.0; 7]], vec![3.0]).unwrap();
        assert!(srsf_inverse(&zero).channel(0).iter().all(|v| *v == 3.0));
    }

    #[test]
    fn srsf_round_trip_sine() {
        let f = sample(193, |t| (2.0 * PI * t).sin());
        let back = srsf_inverse(&srsf(&f));
        let err = f
            .channel(0)
            .iter()
            .zip(back.channel(0))
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-3, "round trip error {err}");
    }

    #[test]
    fn identity_action_is_exact() {
        let q = srsf(&sample(33, |t| (3.0 * t).cos()));
        let id = Warp::identity(*q.grid());
        assert_eq!(warp_srsf(&q, &id).unwrap(), q);
    }

    #[test]
    fn constant_srsf_action_is_root_rate() {
        let g = Grid::unit(65).unwrap();
        let q = SrsfSample::new(g, vec![vec![1.0; 65]], vec![0.0]).unwrap();
        let w = bent_warp(65, 0.6);
        let out = warp_srsf(&q, &w).unwrap();
        for (o, d) in out.channel(0).iter().zip(w.derivative()) {
            assert!((o - d.sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn warp_function_examples() {
        let w = bent_warp(41, 0.5);
        let line = sample(41, |t| t);
        let out = warp_function(&line, &w).unwrap();
        for (a, b) in out.channel(0).iter().zip(w.values()) {
            assert!((a - b).abs() < 1e-14);
        }
        let c = sample(41, |_| -2.0);
        assert_eq!(warp_function(&c, &w).unwrap(), c);
        let id = Warp::identity(*line.grid());
        assert_eq!(warp_function(&line, &id).unwrap(), line);
    }

    #[test]
    fn non_monotone_warp_rejected() {
        let g = Grid::unit(5).unwrap();
        let err = Warp::new(g, vec![0.0, 0.5, 0.4, 0.9, 1.0]).unwrap_err();
        assert!(matches!(err, Error::NonMonotoneWarp { index: 1, .. }));
        assert!(matches!(
            Warp::new(g, vec![0.0, 0.2, 0.4, 0.9, 0.99]),
            Err(Error::WarpEndpoints { .. })
        ));
    }

    #[test]
    fn composition_and_inverse() {
        let w = bent_warp(129, 0.7);
        let id = Warp::identity(*w.grid());
        let inv = invert_warp(&w).unwrap();
        let round = compose_warps(&w, &inv).unwrap();
        assert!(round.sup_distance(&id) < 2.0 * w.grid().spacing());
        assert_eq!(compose_warps(&id, &w).unwrap(), w);
        assert_eq!(invert_warp(&id).unwrap(), id);
    }

    #[test]
    fn extend_and_split_round_trip() {
        let one = sample(17, |t| (2.0 * PI * t).sin());
        assert_eq!(extend_function(&one, 1).unwrap(), one);
        let ext = extend_function(&one, 3).unwrap();
        assert_eq!(ext.grid().len(), 49);
        for (p, v) in ext.channel(0).iter().enumerate() {
            let t = ext.grid().point(p);
            assert!((v - (6.0 * PI * t).sin()).abs() < 1e-12);
        }
        for seg in split_function(&ext, 3).unwrap() {
            for (a, b) in seg.channel(0).iter().zip(one.channel(0)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        assert!(matches!(
            split_function(&ext, 5),
            Err(Error::PeriodMismatch { .. })
        ));
    }

    #[test]
    fn split_boundaries_shared() {
        let f = sample(13, |t| t * t);
        let segs = split_function(&f, 4).unwrap();
        for k in 0..3 {
            assert_eq!(segs[k].channel(0)[3], segs[k + 1].channel(0)[0]);
            assert_eq!(segs[k].channel(0)[0], f.channel(0)[3 * k]);
        }
    }

    #[test]
    fn extend_warp_examples() {
        let w = bent_warp(21, 0.8);
        assert_eq!(extend_warp(&w, 1).unwrap(), w);
        let id = Warp::identity(Grid::unit(21).unwrap());
        let ext = extend_warp(&id, 4).unwrap();
        assert!(ext.distance_from_identity() < 1e-15);
        let ext = extend_warp(&w, 3).unwrap();
        for (seg, _) in split_warp(&ext, 3).unwrap().iter().zip(0..) {
            assert!(seg.sup_distance(&w) < 1e-14);
        }
    }

    #[test]
    fn scale_warp_round_trip() {
        let w = bent_warp(33, 0.4);
        assert_eq!(scale_warp(&w, 0.0, 1.0).unwrap(), w);
        let s = scale_warp(&w, 0.0, 1.0 / 3.0).unwrap();
        let back = scale_warp(&s, 0.0, 1.0).unwrap();
        assert!(back.sup_distance(&w) < 1e-12);
        let id = Warp::identity(Grid::unit(9).unwrap());
        let s = scale_warp(&id, -2.0, 5.0).unwrap();
        assert!(s.distance_from_identity() < 1e-14);
    }

    #[test]
    fn split_srsf_anchors_follow_reconstruction() {
        let f = sample(31, |t| (4.0 * t).sin() + 2.0);
        let q = srsf(&f);
        let rec = srsf_inverse(&q);
        let segs = split_srsf(&q, 3).unwrap();
        for (k, s) in segs.iter().enumerate() {
            assert!((s.anchor()[0] - rec.channel(0)[10 * k]).abs() < 1e-14);
            assert!((s.grid().end() - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn derivative_adjoint_is_transpose() {
        let n = 9;
        let h = 0.125;
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            let col = derivative(&e, h);
            for j in 0..n {
                let mut g = vec![0.0; n];
                g[j] = 1.0;
                let row = derivative_adjoint(&g, h);
                assert!((row[i] - col[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn locate_uses_left_segment_on_knots() {
        assert_eq!(locate(0.0, 0.25, 5, 0.5), (1, 1.0));
        assert_eq!(locate(0.0, 0.25, 5, 0.0), (0, 0.0));
        assert_eq!(locate(0.0, 0.25, 5, 1.0), (3, 1.0));
        assert_eq!(locate(0.0, 0.25, 5, 2.0), (3, 1.0));
    }
}
