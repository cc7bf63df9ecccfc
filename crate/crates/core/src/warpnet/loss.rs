//! Elastic (Fisher–Rao) alignment loss and its gradient with respect to the
//! warp values.

use crate::error::{Error, Result};
use crate::fungrid::{
    derivative, derivative_adjoint, l2_distance_sq, locate, trapezoid_weights, warp_srsf,
    SrsfSample, Warp,
};

/// `(1/n) Σ_i (1/J) Σ_j ‖μ_j − (q_ij, γ_i)‖²`.
pub fn fisher_rao_loss(batch: &[SrsfSample], target: &SrsfSample, warps: &[Warp]) -> Result<f64> {
    check_batch(batch, target, warps.len())?;
    let h = target.grid().spacing();
    let mut total = 0.0;
    for (q, w) in batch.iter().zip(warps) {
        let aligned = warp_srsf(q, w)?;
        let per_subject: f64 = aligned
            .channels()
            .iter()
            .zip(target.channels())
            .map(|(a, m)| l2_distance_sq(a, m, h))
            .sum();
        total += per_subject / q.num_channels() as f64;
    }
    Ok(total / batch.len() as f64)
}

pub(crate) fn check_batch(batch: &[SrsfSample], target: &SrsfSample, warps: usize) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::Shape("empty batch".into()));
    }
    if batch.len() != warps {
        return Err(Error::Shape(format!(
            "{} samples but {warps} warps",
            batch.len()
        )));
    }
    for q in batch {
        if !q.grid().matches(target.grid()) {
            return Err(Error::GridMismatch(format!(
                "sample grid {:?} differs from target grid {:?}",
                q.grid(),
                target.grid()
            )));
        }
        if q.num_channels() != target.num_channels() {
            return Err(Error::Shape(format!(
                "sample has {} channels, target has {}",
                q.num_channels(),
                target.num_channels()
            )));
        }
    }
    Ok(())
}

/// One subject's contribution `(1/J) Σ_j ‖μ_j − (q_j, γ)‖²` and its gradient
/// with respect to the warp values `γ`.
///
/// The forward value uses `sqrt(max(γ̇, 0))`; where `γ̇ ≤ 0` the root rate is
/// treated as locally constant.
pub fn subject_loss_and_grad(q: &SrsfSample, target: &SrsfSample, gamma: &[f64]) -> (f64, Vec<f64>) {
    let grid = q.grid();
    let (start, h, n) = (grid.start(), grid.spacing(), grid.len());
    debug_assert_eq!(gamma.len(), n);
    let weights = trapezoid_weights(n, h);
    let rate = derivative(gamma, h);
    let root: Vec<f64> = rate.iter().map(|d| d.max(0.0).sqrt()).collect();
    let stencil: Vec<(usize, f64)> = gamma.iter().map(|&g| locate(start, h, n, g)).collect();
    let inv_j = 1.0 / q.num_channels() as f64;

    let mut loss = 0.0;
    let mut grad_gamma = vec![0.0; n];
    let mut grad_root = vec![0.0; n];
    for (qc, mc) in q.channels().iter().zip(target.channels()) {
        for p in 0..n {
            let (i, lam) = stencil[p];
            let a = (1.0 - lam) * qc[i] + lam * qc[i + 1];
            let slope = (qc[i + 1] - qc[i]) / h;
            let r = mc[p] - a * root[p];
            loss += weights[p] * r * r * inv_j;
            let g = -2.0 * weights[p] * r * inv_j;
            grad_gamma[p] += g * root[p] * slope;
            grad_root[p] += g * a;
        }
    }
    let grad_rate: Vec<f64> = grad_root
        .iter()
        .zip(&rate)
        .map(|(g, &d)| if d > 0.0 { g / (2.0 * d.max(1e-10).sqrt()) } else { 0.0 })
        .collect();
    for (g, extra) in grad_gamma.iter_mut().zip(derivative_adjoint(&grad_rate, h)) {
        *g += extra;
    }
    (loss, grad_gamma)
}
