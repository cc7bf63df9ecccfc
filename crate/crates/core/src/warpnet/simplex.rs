//! Output activation mapping unconstrained network outputs to a warp.
//!
//! Stick-breaking with offsets `log(P - p + 1)` sends `y` to a point `x` of
//! the open simplex with `P + 1` coordinates (zero input gives the barycentre).
//! A floor `δ` is mixed in so that saturated sigmoids cannot produce empty
//! increments, the cumulative sum is taken on an equidistant fine grid of
//! `P + 2` points and resampled at the `P` output points.

use crate::error::{Error, Result};
use crate::fungrid::{locate, Grid, Warp};

/// Mixing weight of the uniform increment.
pub const SIMPLEX_FLOOR: f64 = 1e-9;

/// Forward values kept for backpropagation.
#[derive(Clone, Debug)]
pub struct SimplexOutput {
    pub y: Vec<f64>,
    /// `σ(y_p - log(P - p + 1))`.
    pub z: Vec<f64>,
    /// Stick remaining before each break (`r_0 = 1`).
    pub remaining: Vec<f64>,
    /// Simplex coordinates after mixing, `P + 1` entries summing to one.
    pub x: Vec<f64>,
    pub warp: Warp,
}

fn sigmoid_pair(s: f64) -> (f64, f64) {
    // (σ(s), 1 - σ(s)) without cancellation
    if s >= 0.0 {
        let e = (-s).exp();
        (1.0 / (1.0 + e), e / (1.0 + e))
    } else {
        let e = s.exp();
        (e / (1.0 + e), 1.0 / (1.0 + e))
    }
}

/// Interpolation stencil from the fine grid (`P + 2` points) to the `P`
/// output points, both on `[0, 1]`.
fn resample_stencil(p: usize) -> impl Iterator<Item = (usize, f64)> {
    let fine_h = 1.0 / (p + 1) as f64;
    (0..p).map(move |j| {
        let t = if j + 1 == p { 1.0 } else { j as f64 / (p - 1) as f64 };
        locate(0.0, fine_h, p + 2, t)
    })
}

/// Maps network outputs to a warp on `grid` (domain `[0, 1]`).
pub fn simplex_activation(y: &[f64], grid: &Grid) -> Result<Warp> {
    simplex_forward(y, grid).map(|o| o.warp)
}

pub fn simplex_forward(y: &[f64], grid: &Grid) -> Result<SimplexOutput> {
    let p = y.len();
    if p != grid.len() || grid.start() != 0.0 || grid.end() != 1.0 {
        return Err(Error::Shape(format!(
            "simplex activation needs {} outputs on [0, 1], got {p} on [{}, {}]",
            grid.len(),
            grid.start(),
            grid.end()
        )));
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidSample(format!("non-finite network output at {i}")));
    }
    let mut z = Vec::with_capacity(p);
    let mut remaining = Vec::with_capacity(p + 1);
    let mut x = Vec::with_capacity(p + 1);
    let mut r = 1.0;
    for (i, &yi) in y.iter().enumerate() {
        let (zi, wi) = sigmoid_pair(yi - ((p - i) as f64).ln());
        remaining.push(r);
        z.push(zi);
        x.push(r * zi);
        r *= wi;
    }
    remaining.push(r);
    x.push(r);

    let scale = 1.0 / (1.0 + (p + 1) as f64 * SIMPLEX_FLOOR);
    let x: Vec<f64> = x.iter().map(|v| (v + SIMPLEX_FLOOR) * scale).collect();
    let mut fine = Vec::with_capacity(p + 2);
    let mut acc = 0.0;
    fine.push(0.0);
    for inc in &x[..p] {
        acc += inc;
        fine.push(acc);
    }
    fine.push(1.0);

    let values = resample_stencil(p)
        .map(|(i, lam)| (1.0 - lam) * fine[i] + lam * fine[i + 1])
        .collect();
    let warp = Warp::pinned(*grid, values)?;
    Ok(SimplexOutput {
        y: y.to_vec(),
        z,
        remaining,
        x,
        warp,
    })
}

/// Gradient with respect to `y` given the gradient with respect to the warp
/// values. Endpoint entries of `grad_warp` are ignored (the endpoints are fixed).
pub fn simplex_backward(out: &SimplexOutput, grad_warp: &[f64]) -> Vec<f64> {
    let p = out.z.len();
    assert_eq!(grad_warp.len(), p);
    let mut grad_fine = vec![0.0; p + 2];
    for (j, (i, lam)) in resample_stencil(p).enumerate() {
        if j == 0 || j + 1 == p {
            continue;
        }
        grad_fine[i] += (1.0 - lam) * grad_warp[j];
        grad_fine[i + 1] += lam * grad_warp[j];
    }
    // fine[k] = Σ_{m<k} inc[m] for k = 1..=P; fine[0] and fine[P+1] are constant
    let scale = 1.0 / (1.0 + (p + 1) as f64 * SIMPLEX_FLOOR);
    let mut grad_x = vec![0.0; p + 1];
    let mut suffix = 0.0;
    for m in (0..p).rev() {
        suffix += grad_fine[m + 1];
        grad_x[m] = suffix * scale;
    }

    let mut grad_y = vec![0.0; p];
    let mut grad_r = grad_x[p];
    for i in (0..p).rev() {
        let (zi, r) = (out.z[i], out.remaining[i]);
        let wi = 1.0 - zi;
        let grad_z = grad_x[i] * r;
        let grad_w = grad_r * r;
        grad_r = grad_x[i] * zi + grad_r * wi;
        grad_y[i] = (grad_z - grad_w) * zi * wi;
    }
    grad_y
}
