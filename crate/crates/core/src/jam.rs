//! Joint alignment of quasi-periodic samples.
//!
//! The outer loop alternates between a template step (mean of the aligned
//! SRSF periods over all subjects) and a registration step (one training
//! epoch of the warping network against that template, followed by centering
//! the predicted warps so that their period segments have identity Karcher
//! mean).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fungrid::{
    compose_warps, extend_srsf, extend_warp, invert_warp, scale_warp, split_function, split_srsf,
    split_warp, srsf, srsf_inverse, warp_function, warp_srsf, FunctionSample, Grid,
    PeriodStructure, SrsfSample, Warp,
};
use crate::metrics::ccsv;
use crate::sphere::{karcher_mean_warps, KarcherConfig, KarcherMean};
use crate::warpnet::{NetConfig, WarpNet};

/// Integration constant used when a template is reconstructed from its SRSF.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorRule {
    Zero,
    #[default]
    MeanInitialValues,
}

/// How subject-specific templates are formed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateMode {
    /// Common template composed with the inverse local mean. Only meaningful
    /// when amplitude does not vary between subjects.
    Warp,
    /// Mean of the subject's aligned periods.
    #[default]
    Amplitude,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JamConfig {
    pub num_periods: usize,
    pub outer_iterations: usize,
    /// Training epochs per outer iteration.
    #[serde(default = "one")]
    pub epochs_per_iteration: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default)]
    pub karcher: KarcherConfig,
    pub net: NetConfig,
    #[serde(default)]
    pub template_anchor_rule: AnchorRule,
    /// Seed of the mini-batch shuffle.
    #[serde(default)]
    pub seed: u64,
}

fn one() -> usize {
    1
}
fn default_batch_size() -> usize {
    32
}

impl JamConfig {
    pub fn new(num_periods: usize, outer_iterations: usize, net: NetConfig) -> Self {
        JamConfig {
            num_periods,
            outer_iterations,
            epochs_per_iteration: 1,
            batch_size: default_batch_size(),
            karcher: KarcherConfig::default(),
            net,
            template_anchor_rule: AnchorRule::default(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_periods == 0 {
            return Err(Error::Config("num_periods must be at least 1".into()));
        }
        if self.outer_iterations == 0 || self.epochs_per_iteration == 0 {
            return Err(Error::Config(
                "outer_iterations and epochs_per_iteration must be at least 1".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        self.karcher.validate()?;
        self.net.validate()?;
        PeriodStructure::new(self.net.input_points, self.num_periods)?;
        Ok(())
    }
}

/// Progress of one outer iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationReport {
    pub iteration: usize,
    /// Mean training loss of the last epoch.
    pub loss: f64,
    /// Mean-referenced CCSV of the aligned functions, per channel.
    pub ccsv: Vec<f64>,
    pub karcher_iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignmentResult {
    pub total_warps: Vec<Warp>,
    /// Karcher mean of each subject's period segments (inverse local warp).
    pub local_means: Vec<Warp>,
    /// Total warp with the extended local mean removed (inverse global warp).
    pub global_warps: Vec<Warp>,
    pub aligned: Vec<FunctionSample>,
    pub common_template_srsf: SrsfSample,
    pub common_template: FunctionSample,
    pub subject_templates: Vec<FunctionSample>,
    pub loss_history: Vec<f64>,
    pub variance_history: Vec<Vec<f64>>,
}

/// Everything needed to align new samples after training.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainedAligner {
    pub net: WarpNet,
    pub num_periods: usize,
    pub karcher: KarcherConfig,
    /// Composed with every prediction: extended inverse of the last Karcher
    /// mean of the predicted segments.
    pub centering: Warp,
    pub template_srsf: SrsfSample,
    pub template: FunctionSample,
}

/// Checks that all samples share one `[0, 1]` grid and channel count and
/// that the grid splits into `num_periods` periods.
pub fn validate_data(data: &[FunctionSample], num_periods: usize) -> Result<(Grid, usize)> {
    let first = data
        .first()
        .ok_or_else(|| Error::InvalidSample("no functions given".into()))?;
    let grid = *first.grid();
    if grid.start() != 0.0 || grid.end() != 1.0 {
        return Err(Error::InvalidGrid(format!(
            "functions must be sampled on [0, 1], got [{}, {}]",
            grid.start(),
            grid.end()
        )));
    }
    PeriodStructure::new(grid.len(), num_periods)?;
    let j = first.num_channels();
    for (i, f) in data.iter().enumerate() {
        if !f.grid().matches(&grid) {
            return Err(Error::GridMismatch(format!("function {i} uses a different grid")));
        }
        if f.num_channels() != j {
            return Err(Error::Shape(format!(
                "function {i} has {} channels, expected {j}",
                f.num_channels()
            )));
        }
    }
    Ok((grid, j))
}

/// Per-channel mean of SRSF samples on a shared grid (anchors averaged too).
pub fn mean_srsf(samples: &[SrsfSample]) -> Result<SrsfSample> {
    let first = samples
        .first()
        .ok_or_else(|| Error::InvalidSample("mean of an empty set".into()))?;
    let inv = 1.0 / samples.len() as f64;
    let mut channels = vec![vec![0.0; first.grid().len()]; first.num_channels()];
    let mut anchor = vec![0.0; first.num_channels()];
    for s in samples {
        if !s.grid().matches(first.grid()) || s.num_channels() != first.num_channels() {
            return Err(Error::GridMismatch("SRSF samples differ in shape".into()));
        }
        for (acc, c) in channels.iter_mut().zip(s.channels()) {
            acc.iter_mut().zip(c).for_each(|(a, v)| *a += v * inv);
        }
        anchor.iter_mut().zip(s.anchor()).for_each(|(a, v)| *a += v * inv);
    }
    SrsfSample::new(*first.grid(), channels, anchor)
}

/// Karcher mean of all period segments of `warps`, each rescaled to `[0, 1]`.
pub fn segment_karcher_mean(
    warps: &[Warp],
    num_periods: usize,
    karcher: &KarcherConfig,
) -> Result<KarcherMean> {
    let mut segments = Vec::with_capacity(warps.len() * num_periods);
    for w in warps {
        segments.extend(split_warp(w, num_periods)?);
    }
    karcher_mean_warps(&segments, karcher)
}

/// Composes each warp with the extended inverse of the segment Karcher mean.
/// Returns the centred warps and the mean.
pub fn center_warps(
    warps: &[Warp],
    num_periods: usize,
    karcher: &KarcherConfig,
) -> Result<(Vec<Warp>, KarcherMean)> {
    let mean = segment_karcher_mean(warps, num_periods, karcher)?;
    let centering = extend_warp(&invert_warp(&mean.mean)?, num_periods)?;
    let centred = warps
        .iter()
        .map(|w| compose_warps(w, &centering))
        .collect::<Result<Vec<_>>>()?;
    Ok((centred, mean))
}

/// Splits a total warp into its local mean `μ_γ` (Karcher mean of the
/// rescaled segments, a warp of `[0, 1]`) and the global part
/// `γ ∘ (ext μ_γ)⁻¹`.
pub fn decompose_total_warp(
    warp: &Warp,
    num_periods: usize,
    karcher: &KarcherConfig,
) -> Result<(Warp, Warp)> {
    let local = segment_karcher_mean(std::slice::from_ref(warp), num_periods, karcher)?.mean;
    let global = compose_warps(warp, &invert_warp(&extend_warp(&local, num_periods)?)?)?;
    Ok((local, global))
}

/// Integration constant for each channel under `rule`.
pub fn template_anchor(rule: AnchorRule, data: &[FunctionSample]) -> Vec<f64> {
    let j = data.first().map_or(0, |f| f.num_channels());
    match rule {
        AnchorRule::Zero => vec![0.0; j],
        AnchorRule::MeanInitialValues => {
            let mut acc = vec![0.0; j];
            for f in data {
                acc.iter_mut()
                    .zip(f.initial_values())
                    .for_each(|(a, v)| *a += v / data.len() as f64);
            }
            acc
        }
    }
}

/// `μ(t) = c + ∫₀ᵗ μ_q|μ_q|` with `c = anchor`.
pub fn extract_common_template(template_srsf: &SrsfSample, anchor: &[f64]) -> Result<FunctionSample> {
    Ok(srsf_inverse(&template_srsf.clone().with_anchor(anchor.to_vec())?))
}

/// Template of one subject on the period grid of `common`.
///
/// `local` and `global` come from [`decompose_total_warp`].
pub fn subject_template(
    f: &FunctionSample,
    local: &Warp,
    global: &Warp,
    common: &FunctionSample,
    num_periods: usize,
    mode: TemplateMode,
) -> Result<FunctionSample> {
    let period = *common.grid();
    match mode {
        TemplateMode::Warp => {
            let inv = scale_warp(&invert_warp(local)?, period.start(), period.end())?;
            warp_function(common, &inv)
        }
        TemplateMode::Amplitude => {
            let q = warp_srsf(&srsf(f), global)?;
            let mean = mean_srsf(&split_srsf(&q, num_periods)?)?;
            let starts: Vec<FunctionSample> = split_function(&warp_function(f, global)?, num_periods)?;
            let anchor = template_anchor(AnchorRule::MeanInitialValues, &starts);
            let out = srsf_inverse(&mean.with_anchor(anchor)?);
            if !out.grid().matches(&period) {
                return Err(Error::GridMismatch(
                    "subject period grid differs from the common template grid".into(),
                ));
            }
            Ok(out)
        }
    }
}

fn aligned_functions(data: &[FunctionSample], warps: &[Warp]) -> Result<Vec<FunctionSample>> {
    data.iter().zip(warps).map(|(f, w)| warp_function(f, w)).collect()
}

fn assemble(
    data: &[FunctionSample],
    total_warps: Vec<Warp>,
    aligner: &TrainedAligner,
    mode: TemplateMode,
    loss_history: Vec<f64>,
    variance_history: Vec<Vec<f64>>,
) -> Result<AlignmentResult> {
    let k = aligner.num_periods;
    let mut local_means = Vec::with_capacity(data.len());
    let mut global_warps = Vec::with_capacity(data.len());
    let mut subject_templates = Vec::with_capacity(data.len());
    for (f, w) in data.iter().zip(&total_warps) {
        let (local, global) = decompose_total_warp(w, k, &aligner.karcher)?;
        subject_templates.push(subject_template(f, &local, &global, &aligner.template, k, mode)?);
        local_means.push(local);
        global_warps.push(global);
    }
    Ok(AlignmentResult {
        aligned: aligned_functions(data, &total_warps)?,
        total_warps,
        local_means,
        global_warps,
        common_template_srsf: aligner.template_srsf.clone(),
        common_template: aligner.template.clone(),
        subject_templates,
        loss_history,
        variance_history,
    })
}

/// Runs the joint alignment and keeps the trained network.
pub fn fit(
    data: &[FunctionSample],
    cfg: &JamConfig,
    mode: TemplateMode,
    mut observer: impl FnMut(&IterationReport),
) -> Result<(TrainedAligner, AlignmentResult)> {
    cfg.validate()?;
    let (grid, j) = validate_data(data, cfg.num_periods)?;
    if grid.len() != cfg.net.input_points || j != cfg.net.channels {
        return Err(Error::Config(format!(
            "network is configured for {} points and {} channels, data has {} and {j}",
            cfg.net.input_points,
            cfg.net.channels,
            grid.len()
        )));
    }
    let k = cfg.num_periods;
    let periods = PeriodStructure::new(grid.len(), k)?;
    let period_grid = periods.segment_grid(&grid)?;
    let q: Vec<SrsfSample> = data.iter().map(srsf).collect();
    let mut net = WarpNet::new(cfg.net.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut warps = vec![Warp::identity(grid); data.len()];
    let mut loss_history = Vec::with_capacity(cfg.outer_iterations);
    let mut variance_history = Vec::with_capacity(cfg.outer_iterations);
    let mut last: Option<(SrsfSample, KarcherMean)> = None;

    for iteration in 0..cfg.outer_iterations {
        let mut segments = Vec::with_capacity(data.len() * k);
        for (qi, w) in q.iter().zip(&warps) {
            segments.extend(split_srsf(&warp_srsf(qi, w)?, k)?);
        }
        let period_mean = mean_srsf(&segments)?;
        let target = extend_srsf(&period_mean, k)?;
        let mut loss = f64::NAN;
        for _ in 0..cfg.epochs_per_iteration {
            loss = net.train_epoch(&q, &target, cfg.batch_size, &mut rng)?.mean_loss();
        }
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { iteration, loss });
        }
        let predicted = net.predict(&q)?;
        let (centred, mean) = center_warps(&predicted, k, &cfg.karcher)?;
        warps = centred;
        let variance = ccsv(&aligned_functions(data, &warps)?, None).unwrap_or_else(|_| vec![0.0; j]);
        observer(&IterationReport {
            iteration,
            loss,
            ccsv: variance.clone(),
            karcher_iterations: mean.iterations,
        });
        loss_history.push(loss);
        variance_history.push(variance);
        last = Some((period_mean, mean));
    }

    let (period_mean, mean) = last.expect("at least one outer iteration");
    let to_center = scale_warp(&invert_warp(&mean.mean)?, period_grid.start(), period_grid.end())?;
    let template_srsf = warp_srsf(&period_mean.with_anchor(vec![0.0; j])?, &to_center)?;
    let anchor = template_anchor(cfg.template_anchor_rule, data);
    let template = extract_common_template(&template_srsf, &anchor)?;
    let aligner = TrainedAligner {
        centering: extend_warp(&invert_warp(&mean.mean)?, k)?,
        net,
        num_periods: k,
        karcher: cfg.karcher,
        template_srsf: template_srsf.with_anchor(anchor)?,
        template,
    };
    let result = assemble(data, warps, &aligner, mode, loss_history, variance_history)?;
    Ok((aligner, result))
}

/// Joint alignment with the default subject-template mode.
pub fn run_deepjam(data: &[FunctionSample], cfg: &JamConfig) -> Result<AlignmentResult> {
    fit(data, cfg, TemplateMode::default(), |_| {}).map(|(_, r)| r)
}

impl TrainedAligner {
    /// Total warps for new samples: network prediction followed by the stored
    /// centering.
    pub fn predict_warps(&self, data: &[FunctionSample]) -> Result<Vec<Warp>> {
        validate_data(data, self.num_periods)?;
        let q: Vec<SrsfSample> = data.iter().map(srsf).collect();
        self.net
            .predict(&q)?
            .iter()
            .map(|w| compose_warps(w, &self.centering))
            .collect()
    }

    pub fn align(&self, data: &[FunctionSample], mode: TemplateMode) -> Result<AlignmentResult> {
        let warps = self.predict_warps(data)?;
        assemble(data, warps, self, mode, Vec::new(), Vec::new())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let a: TrainedAligner = serde_json::from_str(text)?;
        a.karcher.validate()?;
        let periods = PeriodStructure::new(a.net.config().input_points, a.num_periods)?;
        if a.centering.grid().len() != periods.total_points()
            || a.template_srsf.grid().len() != periods.segment_points()
            || a.template.grid().len() != periods.segment_points()
        {
            return Err(Error::Format("aligner components disagree in size".into()));
        }
        Ok(a)
    }
}
