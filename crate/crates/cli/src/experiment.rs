//! Simulate, train on the training split, align the test split and score it,
//! all in memory.

use std::time::{Duration, Instant};

use anyhow::anyhow;
use deepjam_core::jam::{fit, segment_karcher_mean, IterationReport};
use deepjam_core::simgen::generate;
use deepjam_core::VarianceReport;

use crate::config::RunConfig;
use crate::{CliError, CliResult};

#[derive(Clone, Debug)]
pub struct Experiment {
    /// Test-split report against the true template.
    pub report: VarianceReport,
    /// Sup distance from the identity of the Karcher mean of all training
    /// warp segments after the last iteration.
    pub center_distance: f64,
    pub loss_history: Vec<f64>,
    pub elapsed: Duration,
}

pub fn run_experiment(cfg: &RunConfig, progress: impl FnMut(&IterationReport)) -> CliResult<Experiment> {
    let start = Instant::now();
    let scenario = cfg
        .scenario()?
        .ok_or_else(|| CliError::validation(anyhow!("the configuration names no scenario")))?;
    let sim = generate(scenario, &cfg.sim_config())?;
    let train = sim.subset(sim.split.train.clone());
    let test = sim.subset(sim.split.test.clone());
    if train.is_empty() || test.is_empty() {
        return Err(CliError::validation(anyhow!("both the training and the test split must be non-empty")));
    }
    let jam = cfg.jam_config(sim.functions[0].grid().len(), scenario.channels());
    let (aligner, result) = fit(&train, &jam, cfg.template_mode, progress)?;
    let center = segment_karcher_mean(&result.total_warps, jam.num_periods, &jam.karcher)?;
    let aligned = aligner.align(&test, cfg.template_mode)?;
    let report = VarianceReport::new(&test, &aligned.aligned, Some(&sim.extended_template))?;
    Ok(Experiment {
        report,
        center_distance: center.mean.distance_from_identity(),
        loss_history: result.loss_history,
        elapsed: start.elapsed(),
    })
}
