//! Flat TOML run configuration and the bundled presets.
//!
//! A configuration is assembled from three layers: a named preset, then the
//! keys of a `--config` file, then individual command-line flags. Unknown keys
//! are rejected at every layer.

use std::path::Path;

use anyhow::{anyhow, Context};
use deepjam_core::{
    AnchorRule, JamConfig, KarcherConfig, NetConfig, Scenario, SimConfig, TemplateMode,
};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const PRESETS: &[(&str, &str)] = &[
    ("scenario1", include_str!("../presets/scenario1.toml")),
    ("scenario2", include_str!("../presets/scenario2.toml")),
    ("ecg", include_str!("../presets/ecg.toml")),
    ("desk-scenario1", include_str!("../presets/desk-scenario1.toml")),
    ("desk-scenario2", include_str!("../presets/desk-scenario2.toml")),
    ("smoke", include_str!("../presets/smoke.toml")),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Master seed; simulation, initialisation and shuffling seeds derive from it.
    pub seed: u64,
    pub scenario: Option<u32>,

    pub n_total: usize,
    pub train_fraction: f64,
    pub tune_fraction: f64,
    pub validation_fraction: f64,
    pub test_fraction: f64,
    pub num_periods: usize,
    pub points_per_period: usize,
    pub local_roughness: f64,
    pub global_roughness: f64,
    pub basis_size: usize,

    pub num_layers: usize,
    pub filters: usize,
    pub kernel_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,

    pub outer_iterations: usize,
    pub epochs_per_iteration: usize,
    pub batch_size: usize,
    pub template_mode: TemplateMode,
    pub template_anchor: AnchorRule,

    pub karcher_tolerance: f64,
    pub karcher_max_iterations: usize,
    pub karcher_step_size: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sim = SimConfig::default();
        let net = NetConfig::new(sim.total_points(), 1, 6, 16, 32, 1e-4);
        let jam = JamConfig::new(sim.num_periods, 300, net.clone());
        let karcher = KarcherConfig::default();
        RunConfig {
            seed: 0,
            scenario: None,
            n_total: sim.n_total,
            train_fraction: sim.train_fraction,
            tune_fraction: sim.tune_fraction,
            validation_fraction: sim.validation_fraction,
            test_fraction: sim.test_fraction,
            num_periods: sim.num_periods,
            points_per_period: sim.points_per_period,
            local_roughness: sim.local_roughness,
            global_roughness: sim.global_roughness,
            basis_size: sim.basis_size,
            num_layers: net.num_layers,
            filters: net.filters_per_hidden_layer,
            kernel_size: net.kernel_size,
            learning_rate: net.learning_rate,
            adam_beta1: net.adam_beta1,
            adam_beta2: net.adam_beta2,
            adam_epsilon: net.adam_epsilon,
            outer_iterations: jam.outer_iterations,
            epochs_per_iteration: jam.epochs_per_iteration,
            batch_size: jam.batch_size,
            template_mode: TemplateMode::default(),
            template_anchor: jam.template_anchor_rule,
            karcher_tolerance: karcher.tolerance,
            karcher_max_iterations: karcher.max_iterations,
            karcher_step_size: karcher.step_size,
        }
    }
}

/// Seeds derived from the master seed, one per consumer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Seeds {
    pub simulation: u64,
    pub initialisation: u64,
    pub shuffle: u64,
}

impl Seeds {
    pub fn derive(master: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master);
        Seeds {
            simulation: rng.next_u64(),
            initialisation: rng.next_u64(),
            shuffle: rng.next_u64(),
        }
    }
}

pub fn preset_text(name: &str) -> Result<&'static str, CliError> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
        .ok_or_else(|| {
            let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
            CliError::validation(anyhow!("unknown preset `{name}`; available: {}", names.join(", ")))
        })
}

fn parse_table(text: &str, origin: &str) -> Result<toml::Table, CliError> {
    text.parse::<toml::Table>()
        .with_context(|| format!("{origin} is not valid TOML"))
        .map_err(CliError::validation)
}

impl RunConfig {
    /// Preset (if any) overlaid with the keys of `file` (if any).
    pub fn load(preset: Option<&str>, file: Option<&Path>) -> Result<Self, CliError> {
        let mut table = match preset {
            Some(name) => parse_table(preset_text(name)?, &format!("preset `{name}`"))?,
            None => toml::Table::new(),
        };
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read config {}", path.display()))
                .map_err(CliError::validation)?;
            for (key, value) in parse_table(&text, &path.display().to_string())? {
                table.insert(key, value);
            }
        }
        let cfg: RunConfig = table
            .try_into()
            .context("invalid configuration")
            .map_err(CliError::validation)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text)
            .context("invalid configuration")
            .map_err(CliError::validation)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration serialises")
    }

    pub fn seeds(&self) -> Seeds {
        Seeds::derive(self.seed)
    }

    pub fn scenario(&self) -> Result<Option<Scenario>, CliError> {
        self.scenario
            .map(Scenario::from_number)
            .transpose()
            .map_err(CliError::from)
    }

    pub fn karcher(&self) -> KarcherConfig {
        KarcherConfig {
            tolerance: self.karcher_tolerance,
            max_iterations: self.karcher_max_iterations,
            step_size: self.karcher_step_size,
        }
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            n_total: self.n_total,
            train_fraction: self.train_fraction,
            tune_fraction: self.tune_fraction,
            validation_fraction: self.validation_fraction,
            test_fraction: self.test_fraction,
            num_periods: self.num_periods,
            points_per_period: self.points_per_period,
            seed: self.seeds().simulation,
            local_roughness: self.local_roughness,
            global_roughness: self.global_roughness,
            basis_size: self.basis_size,
            karcher: self.karcher(),
        }
    }

    /// Training settings for data with `input_points` grid points and
    /// `channels` channels.
    pub fn jam_config(&self, input_points: usize, channels: usize) -> JamConfig {
        let seeds = self.seeds();
        let mut net = NetConfig::new(
            input_points,
            channels,
            self.num_layers,
            self.filters,
            self.kernel_size,
            self.learning_rate,
        );
        net.adam_beta1 = self.adam_beta1;
        net.adam_beta2 = self.adam_beta2;
        net.adam_epsilon = self.adam_epsilon;
        net.seed = seeds.initialisation;
        let mut jam = JamConfig::new(self.num_periods, self.outer_iterations, net);
        jam.epochs_per_iteration = self.epochs_per_iteration;
        jam.batch_size = self.batch_size;
        jam.karcher = self.karcher();
        jam.template_anchor_rule = self.template_anchor;
        jam.seed = seeds.shuffle;
        jam
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.scenario()?;
        self.sim_config().validate()?;
        let points = (self.points_per_period.max(2) - 1) * self.num_periods.max(1) + 1;
        self.jam_config(points, 1).validate()?;
        Ok(())
    }
}
