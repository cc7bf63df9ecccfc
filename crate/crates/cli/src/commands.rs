//! The five subcommands. Each one validates its inputs before taking the
//! output lock, writes every file atomically and appends a step to the output
//! directory's `run.json`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use deepjam_core::io::{write_atomic, Dataset, DATASET_MANIFEST};
use deepjam_core::jam::{decompose_total_warp, fit, subject_template, IterationReport};
use deepjam_core::metrics::cross_sectional_mean;
use deepjam_core::simgen::generate;
use deepjam_core::{FunctionSample, TemplateMode, TrainedAligner, VarianceReport, Warp};

use crate::cli::{AlignArgs, Cli, Command, ConfigArgs, EvaluateArgs, SimulateArgs, TemplateArgs, TrainArgs};
use crate::config::RunConfig;
use crate::manifest::{OutputLock, RunManifest, RunStep};
use crate::results::{select_subset, ResultSet, CHECKPOINT};
use crate::{CliError, CliResult, CoreContext, ErrorKind};

pub const REPORT_CSV: &str = "report.csv";
pub const REPORT_TXT: &str = "report.txt";
pub const PLOT_CURVES: &str = "plot_curves.csv";
pub const PLOT_MEANS: &str = "plot_means.csv";
pub const PLOT_WARPS: &str = "plot_warps.csv";
pub const PLOT_TEMPLATES: &str = "plot_templates.csv";
pub const PLOT_HISTORY: &str = "plot_history.csv";

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate(a) => simulate(&a),
        Command::Train(a) => train(&a),
        Command::Align(a) => align(&a),
        Command::Template(a) => template(&a),
        Command::Evaluate(a) => evaluate(&a),
    }
}

fn load_config(a: &ConfigArgs) -> CliResult<RunConfig> {
    let mut cfg = RunConfig::load(a.preset.as_deref(), a.config.as_deref())?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

/// Unreadable inputs are the caller's to fix, whatever the cause.
fn as_input(mut e: CliError) -> CliError {
    e.kind = ErrorKind::Validation;
    e
}

fn read_dataset(path: &Path) -> CliResult<Dataset> {
    Dataset::read(path)
        .ctx(format!("cannot read dataset {}", path.display()))
        .map_err(as_input)
}

fn read_result(path: &Path) -> CliResult<ResultSet> {
    ResultSet::read(path).map_err(as_input)
}

fn path_string(p: &Path) -> String {
    p.display().to_string()
}

fn progress(r: &IterationReport) {
    if r.iteration % 10 == 0 {
        let ccsv: Vec<String> = r.ccsv.iter().map(|v| format!("{v:.4e}")).collect();
        eprintln!("iteration {:>5}  loss {:.6e}  ccsv [{}]", r.iteration, r.loss, ccsv.join(", "));
    }
}

pub fn simulate(a: &SimulateArgs) -> CliResult<()> {
    let mut cfg = load_config(&a.config)?;
    if a.scenario.is_some() {
        cfg.scenario = a.scenario;
    }
    cfg.validate()?;
    let scenario = cfg
        .scenario()?
        .ok_or_else(|| CliError::validation(anyhow!("no scenario given; pass --scenario 1 or 2")))?;
    let sim = generate(scenario, &cfg.sim_config())?;
    let ds = Dataset::from_simulation(&sim, cfg.seed);

    let _lock = OutputLock::acquire(&a.out)?;
    let manifest = ds.write(&a.out)?;
    let mut outputs = vec![DATASET_MANIFEST.to_string()];
    outputs.extend(manifest.channel_files.iter().cloned());
    if let Some(t) = &manifest.truth {
        let names = [
            &t.template_file,
            &t.extended_template_file,
            &t.local_warps_file,
            &t.global_warps_file,
            &t.total_warps_file,
        ];
        outputs.extend(names.map(String::clone));
        outputs.extend(t.amplitude_factors_file.iter().cloned());
    }
    RunManifest::append(
        &a.out,
        RunStep {
            command: "simulate".into(),
            seed: Some(cfg.seed),
            config: Some(cfg),
            outputs,
            ..Default::default()
        },
    )?;
    Ok(())
}

pub fn train(a: &TrainArgs) -> CliResult<()> {
    let mut cfg = load_config(&a.config)?;
    if let Some(n) = a.iterations {
        cfg.outer_iterations = n;
    }
    if let Some(m) = a.mode {
        cfg.template_mode = m.into();
    }
    let ds = read_dataset(&a.data)?;
    // The dataset decides the period structure.
    cfg.num_periods = ds.num_periods;
    cfg.validate()?;
    let (subset, part) = select_subset(&ds, a.subset.as_deref(), "train")?;
    let jam = cfg.jam_config(part.grid().len(), part.num_channels());

    let _lock = OutputLock::acquire(&a.out)?;
    let (aligner, result) = fit(&part.functions, &jam, cfg.template_mode, progress)?;
    let rs = ResultSet {
        subset: subset.clone(),
        mode: cfg.template_mode,
        observed: part.functions,
        result,
        aligner,
        true_template: part.truth.map(|t| t.extended_template),
    };
    let outputs = rs.write(&a.out)?;
    let report = report(&rs)?;
    RunManifest::append(
        &a.out,
        RunStep {
            command: "train".into(),
            seed: Some(cfg.seed),
            config: Some(cfg),
            dataset: Some(path_string(&a.data)),
            subset: Some(subset.name),
            checkpoint: Some(CHECKPOINT.into()),
            report: Some(report),
            loss_history: rs.result.loss_history.clone(),
            variance_history: rs.result.variance_history.clone(),
            outputs,
        },
    )?;
    Ok(())
}

fn checkpoint_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join(CHECKPOINT)
    } else {
        p.to_path_buf()
    }
}

pub fn load_checkpoint(p: &Path) -> CliResult<TrainedAligner> {
    let path = checkpoint_path(p);
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::validation(anyhow!("cannot read checkpoint {}: {e}", path.display())))?;
    TrainedAligner::from_json(&text).ctx(format!("{} is not a valid checkpoint", path.display()))
}

pub fn align(a: &AlignArgs) -> CliResult<()> {
    let aligner = load_checkpoint(&a.checkpoint)?;
    let ds = read_dataset(&a.data)?;
    let (subset, part) = select_subset(&ds, a.subset.as_deref(), "test")?;
    let net = aligner.net.config();
    if part.grid().len() != net.input_points || part.num_channels() != net.channels || ds.num_periods != aligner.num_periods {
        return Err(CliError::validation(anyhow!(
            "checkpoint expects {} points, {} channels and {} periods; dataset has {}, {} and {}",
            net.input_points,
            net.channels,
            aligner.num_periods,
            part.grid().len(),
            part.num_channels(),
            ds.num_periods
        )));
    }
    let mode: TemplateMode = a.mode.into();

    let _lock = OutputLock::acquire(&a.out)?;
    let result = aligner.align(&part.functions, mode)?;
    let rs = ResultSet {
        subset: subset.clone(),
        mode,
        observed: part.functions,
        result,
        aligner,
        true_template: part.truth.map(|t| t.extended_template),
    };
    let outputs = rs.write(&a.out)?;
    let report = report(&rs)?;
    RunManifest::append(
        &a.out,
        RunStep {
            command: "align".into(),
            dataset: Some(path_string(&a.data)),
            subset: Some(subset.name),
            checkpoint: Some(path_string(&checkpoint_path(&a.checkpoint))),
            report: Some(report),
            outputs,
            ..Default::default()
        },
    )?;
    Ok(())
}

/// Subject templates of `rs` recomputed under `mode`.
pub fn recompute_templates(rs: &ResultSet, mode: TemplateMode) -> CliResult<Vec<FunctionSample>> {
    let al = &rs.aligner;
    rs.observed
        .iter()
        .zip(&rs.result.total_warps)
        .map(|(f, w)| {
            let (local, global) = decompose_total_warp(w, al.num_periods, &al.karcher)?;
            Ok(subject_template(f, &local, &global, &al.template, al.num_periods, mode)?)
        })
        .collect()
}

pub fn template(a: &TemplateArgs) -> CliResult<()> {
    let mut rs = read_result(&a.out)?;
    let mode = a.mode.map_or(rs.mode, TemplateMode::from);

    let _lock = OutputLock::acquire(&a.out)?;
    rs.result.subject_templates = recompute_templates(&rs, mode)?;
    rs.result.common_template = rs.aligner.template.clone();
    rs.mode = mode;
    let outputs = rs.write(&a.out)?;
    RunManifest::append(&a.out, RunStep { command: "template".into(), outputs, ..Default::default() })?;
    Ok(())
}

fn push_samples(out: &mut String, kind: &str, fs: &[FunctionSample]) {
    for (i, f) in fs.iter().enumerate() {
        let t = f.grid().points();
        for (j, ch) in f.channels().iter().enumerate() {
            for (x, v) in t.iter().zip(ch) {
                let _ = writeln!(out, "{kind},{i},{},{x},{v}", j + 1);
            }
        }
    }
}

fn push_warps(out: &mut String, kind: &str, ws: &[Warp]) {
    for (i, w) in ws.iter().enumerate() {
        for (x, v) in w.grid().points().iter().zip(w.values()) {
            let _ = writeln!(out, "{kind},{i},{x},{v}");
        }
    }
}

/// Tidy long-format plot data, keyed by file name.
pub fn plot_data(rs: &ResultSet) -> CliResult<Vec<(&'static str, String)>> {
    let r = &rs.result;
    let mut curves = String::from("kind,subject,channel,t,value\n");
    push_samples(&mut curves, "observed", &rs.observed);
    push_samples(&mut curves, "aligned", &r.aligned);

    let observed_mean = cross_sectional_mean(&rs.observed)?;
    let aligned_mean = cross_sectional_mean(&r.aligned)?;
    let mut means = String::from("channel,t,observed_mean,aligned_mean,true_template\n");
    let t = observed_mean.grid().points();
    for j in 0..observed_mean.num_channels() {
        for (k, x) in t.iter().enumerate() {
            let truth = rs.true_template.as_ref().map(|f| f.channels()[j][k].to_string()).unwrap_or_default();
            let _ = writeln!(
                means,
                "{},{x},{},{},{truth}",
                j + 1,
                observed_mean.channels()[j][k],
                aligned_mean.channels()[j][k]
            );
        }
    }

    let mut warps = String::from("kind,subject,t,value\n");
    push_warps(&mut warps, "total", &r.total_warps);
    push_warps(&mut warps, "local", &r.local_means);
    push_warps(&mut warps, "global", &r.global_warps);

    let mut templates = String::from("kind,subject,channel,t,value\n");
    let common = r.common_template.grid().points();
    for (j, ch) in r.common_template.channels().iter().enumerate() {
        for (x, v) in common.iter().zip(ch) {
            let _ = writeln!(templates, "common,,{},{x},{v}", j + 1);
        }
    }
    push_samples(&mut templates, "subject", &r.subject_templates);

    let mut history = String::from("iteration,loss,channel,ccsv\n");
    for (it, (loss, ccsv)) in r.loss_history.iter().zip(&r.variance_history).enumerate() {
        for (j, v) in ccsv.iter().enumerate() {
            let _ = writeln!(history, "{it},{loss},{},{v}", j + 1);
        }
    }

    Ok(vec![
        (PLOT_CURVES, curves),
        (PLOT_MEANS, means),
        (PLOT_WARPS, warps),
        (PLOT_TEMPLATES, templates),
        (PLOT_HISTORY, history),
    ])
}

/// Variance report of a result directory: around the true template when it
/// is known, around the cross-sectional mean otherwise.
pub fn report(rs: &ResultSet) -> CliResult<VarianceReport> {
    Ok(VarianceReport::new(&rs.observed, &rs.result.aligned, rs.true_template.as_ref())?)
}

pub fn evaluate(a: &EvaluateArgs) -> CliResult<()> {
    let rs = read_result(&a.data)?;
    let out = a.out.as_deref().unwrap_or(&a.data);
    let report = report(&rs)?;
    let reference = if rs.true_template.is_some() { "true template" } else { "cross-sectional mean" };
    let table = format!(
        "{} subjects ({} subset), variance around the {reference}\n{}",
        rs.observed.len(),
        rs.subset.name,
        report.to_table()
    );
    let mut files = vec![(REPORT_CSV, report.to_csv()), (REPORT_TXT, table.clone())];
    files.extend(plot_data(&rs)?);

    let _lock = OutputLock::acquire(out)?;
    for (name, text) in &files {
        write_atomic(&out.join(name), text.as_bytes())?;
    }
    print!("{table}");
    RunManifest::append(
        out,
        RunStep {
            command: "evaluate".into(),
            dataset: Some(path_string(&a.data)),
            subset: Some(rs.subset.name.clone()),
            report: Some(report),
            outputs: files.iter().map(|(n, _)| n.to_string()).collect(),
            ..Default::default()
        },
    )?;
    Ok(())
}
