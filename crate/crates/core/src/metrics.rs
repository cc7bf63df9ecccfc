//! Cross-sectional variance and template distance metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fungrid::{inner, FunctionSample};

fn check_sample_set(fs: &[FunctionSample], min: usize) -> Result<()> {
    if fs.len() < min {
        return Err(Error::InvalidSample(format!(
            "need at least {min} functions, got {}",
            fs.len()
        )));
    }
    let (g, j) = (fs[0].grid(), fs[0].num_channels());
    for f in fs {
        if !f.grid().matches(g) {
            return Err(Error::GridMismatch("functions use different grids".into()));
        }
        if f.num_channels() != j {
            return Err(Error::Shape("functions have different channel counts".into()));
        }
    }
    Ok(())
}

/// Pointwise mean over subjects.
pub fn cross_sectional_mean(fs: &[FunctionSample]) -> Result<FunctionSample> {
    check_sample_set(fs, 1)?;
    let inv = 1.0 / fs.len() as f64;
    let channels = (0..fs[0].num_channels())
        .map(|j| {
            let mut acc = vec![0.0; fs[0].grid().len()];
            for f in fs {
                acc.iter_mut().zip(f.channel(j)).for_each(|(a, v)| *a += v);
            }
            acc.into_iter().map(|a| a * inv).collect()
        })
        .collect();
    FunctionSample::new(*fs[0].grid(), channels)
}

/// Cumulative cross-sectional variance per channel,
/// `(1/(n−1)) ∫ Σᵢ (fᵢ − ref)²`, where `ref` is `reference` if given and the
/// cross-sectional mean otherwise.
pub fn ccsv(fs: &[FunctionSample], reference: Option<&FunctionSample>) -> Result<Vec<f64>> {
    check_sample_set(fs, 2)?;
    let mean;
    let reference = match reference {
        Some(r) => {
            check_sample_set(&[fs[0].clone(), r.clone()], 2)?;
            r
        }
        None => {
            mean = cross_sectional_mean(fs)?;
            &mean
        }
    };
    let h = fs[0].grid().spacing();
    let scale = 1.0 / (fs.len() - 1) as f64;
    Ok((0..fs[0].num_channels())
        .map(|j| {
            let r = reference.channel(j);
            let total: f64 = fs
                .iter()
                .map(|f| {
                    let d: Vec<f64> = f.channel(j).iter().zip(r).map(|(a, b)| a - b).collect();
                    inner(&d, &d, h)
                })
                .sum();
            total * scale
        })
        .collect())
}

/// `‖(1/n) Σ fᵢ − μ‖²` per channel.
pub fn mean_template_distance(fs: &[FunctionSample], template: &FunctionSample) -> Result<Vec<f64>> {
    let mean = cross_sectional_mean(fs)?;
    check_sample_set(&[mean.clone(), template.clone()], 2)?;
    let h = mean.grid().spacing();
    Ok((0..mean.num_channels())
        .map(|j| {
            let d: Vec<f64> = mean
                .channel(j)
                .iter()
                .zip(template.channel(j))
                .map(|(a, b)| a - b)
                .collect();
            inner(&d, &d, h)
        })
        .collect())
}

/// `100·(1 − aligned/observed)`, undefined when nothing was observed.
pub fn percent_reduction(observed: f64, aligned: f64) -> Option<f64> {
    (observed > 0.0).then(|| 100.0 * (1.0 - aligned / observed))
}

/// Formats `x` with three significant figures.
pub fn format_sig3(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (2 - magnitude).max(0) as usize;
    if magnitude > 2 {
        let unit = 10f64.powi(magnitude - 2);
        format!("{}", (x / unit).round() * unit)
    } else {
        format!("{x:.decimals$}")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelReport {
    pub channel: usize,
    pub observed_ccsv: f64,
    pub aligned_ccsv: f64,
    pub ccsv_reduction: Option<f64>,
    pub observed_distance: Option<f64>,
    pub aligned_distance: Option<f64>,
    pub distance_reduction: Option<f64>,
}

/// Observed vs aligned variance for each channel. With a known template the
/// variance is measured around it and the mean distance is reported too;
/// otherwise the variance is measured around the cross-sectional mean.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub channels: Vec<ChannelReport>,
}

impl VarianceReport {
    pub fn new(
        observed: &[FunctionSample],
        aligned: &[FunctionSample],
        template: Option<&FunctionSample>,
    ) -> Result<Self> {
        let obs = ccsv(observed, template)?;
        let ali = ccsv(aligned, template)?;
        if obs.len() != ali.len() {
            return Err(Error::Shape("observed and aligned channel counts differ".into()));
        }
        let (obs_d, ali_d) = match template {
            Some(t) => (
                Some(mean_template_distance(observed, t)?),
                Some(mean_template_distance(aligned, t)?),
            ),
            None => (None, None),
        };
        let channels = (0..obs.len())
            .map(|j| {
                let od = obs_d.as_ref().map(|d| d[j]);
                let ad = ali_d.as_ref().map(|d| d[j]);
                ChannelReport {
                    channel: j,
                    observed_ccsv: obs[j],
                    aligned_ccsv: ali[j],
                    ccsv_reduction: percent_reduction(obs[j], ali[j]),
                    observed_distance: od,
                    aligned_distance: ad,
                    distance_reduction: od.zip(ad).and_then(|(o, a)| percent_reduction(o, a)),
                }
            })
            .collect();
        Ok(VarianceReport { channels })
    }

    /// One row per channel, full precision.
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut out = String::from(
            "channel,observed_ccsv,aligned_ccsv,ccsv_reduction,observed_distance,aligned_distance,distance_reduction\n",
        );
        for c in &self.channels {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                c.channel,
                c.observed_ccsv,
                c.aligned_ccsv,
                opt(c.ccsv_reduction),
                opt(c.observed_distance),
                opt(c.aligned_distance),
                opt(c.distance_reduction)
            ));
        }
        out
    }

    /// Human-readable table with three significant figures.
    pub fn to_table(&self) -> String {
        let opt = |v: Option<f64>| v.map(format_sig3).unwrap_or_else(|| "-".into());
        let mut out = format!(
            "{:<8} {:>10} {:>10} {:>8} {:>10} {:>10} {:>8}\n",
            "channel", "ccsv obs", "ccsv ali", "%red", "dist obs", "dist ali", "%red"
        );
        for c in &self.channels {
            out.push_str(&format!(
                "{:<8} {:>10} {:>10} {:>8} {:>10} {:>10} {:>8}\n",
                c.channel + 1,
                format_sig3(c.observed_ccsv),
                format_sig3(c.aligned_ccsv),
                opt(c.ccsv_reduction),
                opt(c.observed_distance),
                opt(c.aligned_distance),
                opt(c.distance_reduction)
            ));
        }
        out
    }
}
