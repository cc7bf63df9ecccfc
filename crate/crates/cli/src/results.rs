//! Result directories written by `train` and `align`.
//!
//! A result directory is self-contained: it holds the aligner that produced
//! it, the observed subset, the aligned functions, the three kinds of warps,
//! the templates and (for simulated data) the true template. Warps and
//! sample sets use the per-channel CSV format of the dataset directories.

use std::fs;
use std::path::Path;

use anyhow::anyhow;
use deepjam_core::io::{
    read_json, read_rows_as_channels, read_samples, read_warps, write_atomic,
    write_channels_as_rows, write_json, write_samples, write_warps, Dataset,
};
use deepjam_core::jam::AlignmentResult;
use deepjam_core::{FunctionSample, Grid, TemplateMode, TrainedAligner};
use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult, CoreContext};

pub const RESULT_FORMAT: &str = "deepjam-result";
pub const RESULT_VERSION: u32 = 1;
pub const RESULT_MANIFEST: &str = "result.json";
pub const CHECKPOINT: &str = "checkpoint.json";

const TOTAL_WARPS: &str = "total_warps.csv";
const LOCAL_WARPS: &str = "local_warps.csv";
const GLOBAL_WARPS: &str = "global_warps.csv";
const COMMON_TEMPLATE: &str = "common_template.csv";
const TRUE_TEMPLATE: &str = "true_extended_template.csv";

/// A contiguous range of a dataset's subjects.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Subset {
    pub name: String,
    pub start: usize,
    pub end: usize,
}

pub const SUBSET_NAMES: &[&str] = &["all", "train", "tune", "validation", "test"];

/// Subjects of `ds` named by `name`; without a name, `fallback` if the
/// dataset has a split and all subjects otherwise.
pub fn select_subset(ds: &Dataset, name: Option<&str>, fallback: &str) -> CliResult<(Subset, Dataset)> {
    let n = ds.functions.len();
    let name = name.unwrap_or(if ds.split.is_some() { fallback } else { "all" });
    let range = match (name, &ds.split) {
        ("all", _) => 0..n,
        ("train", Some(s)) => s.train.clone(),
        ("tune", Some(s)) => s.tune.clone(),
        ("validation", Some(s)) => s.validation.clone(),
        ("test", Some(s)) => s.test.clone(),
        (other, None) if SUBSET_NAMES.contains(&other) => {
            return Err(CliError::validation(anyhow!(
                "dataset has no train/test split; use --subset all"
            )))
        }
        (other, _) => {
            return Err(CliError::validation(anyhow!(
                "unknown subset `{other}`; expected one of {}",
                SUBSET_NAMES.join(", ")
            )))
        }
    };
    if range.is_empty() {
        return Err(CliError::validation(anyhow!("subset `{name}` is empty")));
    }
    let subset = Subset { name: name.to_string(), start: range.start, end: range.end };
    Ok((subset, ds.subset(range)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultManifest {
    pub format: String,
    pub version: u32,
    pub grid: Grid,
    pub period_grid: Grid,
    pub local_grid: Grid,
    pub num_periods: usize,
    pub num_channels: usize,
    pub num_subjects: usize,
    pub subset: Subset,
    pub template_mode: TemplateMode,
    pub observed_files: Vec<String>,
    pub aligned_files: Vec<String>,
    pub subject_template_files: Vec<String>,
    pub common_template_file: String,
    pub total_warps_file: String,
    pub local_warps_file: String,
    pub global_warps_file: String,
    pub checkpoint_file: String,
    pub true_template_file: Option<String>,
    pub loss_history: Vec<f64>,
    pub variance_history: Vec<Vec<f64>>,
}

/// Everything a result directory holds, in memory.
#[derive(Clone, Debug)]
pub struct ResultSet {
    pub subset: Subset,
    pub mode: TemplateMode,
    pub observed: Vec<FunctionSample>,
    pub result: AlignmentResult,
    pub aligner: TrainedAligner,
    pub true_template: Option<FunctionSample>,
}

/// Writes the common template and one subject-template file per channel;
/// returns the subject-template file names.
fn write_templates(dir: &Path, common: &FunctionSample, subjects: &[FunctionSample]) -> CliResult<Vec<String>> {
    write_channels_as_rows(&dir.join(COMMON_TEMPLATE), common)?;
    Ok(write_samples(dir, "subject_template", subjects)?)
}

impl ResultSet {
    pub fn write(&self, dir: &Path) -> CliResult<Vec<String>> {
        fs::create_dir_all(dir).map_err(|e| CliError::runtime(anyhow!("cannot create {}: {e}", dir.display())))?;
        let r = &self.result;
        let first = self
            .observed
            .first()
            .ok_or_else(|| CliError::validation(anyhow!("result has no subjects")))?;
        let checkpoint = self.aligner.to_json()?;
        write_atomic(&dir.join(CHECKPOINT), checkpoint.as_bytes())?;
        let observed_files = write_samples(dir, "observed", &self.observed)?;
        let aligned_files = write_samples(dir, "aligned", &r.aligned)?;
        write_warps(&dir.join(TOTAL_WARPS), &r.total_warps)?;
        write_warps(&dir.join(LOCAL_WARPS), &r.local_means)?;
        write_warps(&dir.join(GLOBAL_WARPS), &r.global_warps)?;
        let subject_template_files = write_templates(dir, &r.common_template, &r.subject_templates)?;
        let true_template_file = match &self.true_template {
            Some(t) => {
                write_channels_as_rows(&dir.join(TRUE_TEMPLATE), t)?;
                Some(TRUE_TEMPLATE.to_string())
            }
            None => None,
        };
        let manifest = ResultManifest {
            format: RESULT_FORMAT.into(),
            version: RESULT_VERSION,
            grid: *first.grid(),
            period_grid: *r.common_template.grid(),
            local_grid: *r.local_means[0].grid(),
            num_periods: self.aligner.num_periods,
            num_channels: first.num_channels(),
            num_subjects: self.observed.len(),
            subset: self.subset.clone(),
            template_mode: self.mode,
            observed_files,
            aligned_files,
            subject_template_files,
            common_template_file: COMMON_TEMPLATE.into(),
            total_warps_file: TOTAL_WARPS.into(),
            local_warps_file: LOCAL_WARPS.into(),
            global_warps_file: GLOBAL_WARPS.into(),
            checkpoint_file: CHECKPOINT.into(),
            true_template_file,
            loss_history: r.loss_history.clone(),
            variance_history: r.variance_history.clone(),
        };
        write_json(&dir.join(RESULT_MANIFEST), &manifest)?;
        let mut outputs = vec![RESULT_MANIFEST.to_string(), CHECKPOINT.to_string()];
        outputs.extend(manifest.observed_files.iter().cloned());
        outputs.extend(manifest.aligned_files.iter().cloned());
        outputs.extend([TOTAL_WARPS, LOCAL_WARPS, GLOBAL_WARPS, COMMON_TEMPLATE].map(String::from));
        outputs.extend(manifest.subject_template_files.iter().cloned());
        outputs.extend(manifest.true_template_file.iter().cloned());
        Ok(outputs)
    }

    pub fn read(dir: &Path) -> CliResult<ResultSet> {
        let m: ResultManifest = read_json(&dir.join(RESULT_MANIFEST))
            .ctx(format!("{} is not a result directory", dir.display()))?;
        if m.format != RESULT_FORMAT || m.version != RESULT_VERSION {
            return Err(CliError::validation(anyhow!(
                "{}: expected {RESULT_FORMAT} version {RESULT_VERSION}, found {} version {}",
                dir.display(),
                m.format,
                m.version
            )));
        }
        let text = fs::read_to_string(dir.join(&m.checkpoint_file))
            .map_err(|e| CliError::validation(anyhow!("cannot read checkpoint in {}: {e}", dir.display())))?;
        let aligner = TrainedAligner::from_json(&text).ctx("corrupt checkpoint")?;
        let observed = read_samples(dir, &m.observed_files, &m.grid)?;
        let aligned = read_samples(dir, &m.aligned_files, &m.grid)?;
        let subject_templates = read_samples(dir, &m.subject_template_files, &m.period_grid)?;
        let total_warps = read_warps(&dir.join(&m.total_warps_file), &m.grid)?;
        let local_means = read_warps(&dir.join(&m.local_warps_file), &m.local_grid)?;
        let global_warps = read_warps(&dir.join(&m.global_warps_file), &m.grid)?;
        let common_template = read_rows_as_channels(&dir.join(&m.common_template_file), &m.period_grid)?;
        let true_template = match &m.true_template_file {
            Some(name) => Some(read_rows_as_channels(&dir.join(name), &m.grid)?),
            None => None,
        };
        let n = m.num_subjects;
        let counts = [
            observed.len(),
            aligned.len(),
            subject_templates.len(),
            total_warps.len(),
            local_means.len(),
            global_warps.len(),
        ];
        if counts.iter().any(|&c| c != n) {
            return Err(CliError::validation(anyhow!(
                "{}: files disagree on the number of subjects ({counts:?}, manifest says {n})",
                dir.display()
            )));
        }
        Ok(ResultSet {
            subset: m.subset,
            mode: m.template_mode,
            observed,
            result: AlignmentResult {
                total_warps,
                local_means,
                global_warps,
                aligned,
                common_template_srsf: aligner.template_srsf.clone(),
                common_template,
                subject_templates,
                loss_history: m.loss_history,
                variance_history: m.variance_history,
            },
            aligner,
            true_template,
        })
    }
}
