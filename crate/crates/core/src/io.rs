//! On-disk formats.
//!
//! A sample set is stored as one CSV file per channel: the header row holds
//! `subject` followed by the grid points, every other row a subject index and
//! its values. Floats are written in shortest round-trip form, so reading a
//! file back gives bit-identical values. Datasets add a JSON manifest with the
//! grid, `K`, the seed and (for simulated data) the ground truth files.

use std::fs;
use std::io::Write;
use std::ops::Range;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fungrid::{FunctionSample, Grid, Warp};
use crate::simgen::{DatasetSplit, SimDataset};

pub const DATASET_FORMAT: &str = "deepjam-dataset";
pub const DATASET_VERSION: u32 = 1;
pub const DATASET_MANIFEST: &str = "dataset.json";

/// Writes `bytes` to a temporary sibling of `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::Format(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| with_path(e, path))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

fn with_path(e: std::io::Error, path: &Path) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

/// Writes a numeric table whose header row is `subject` followed by `header`.
pub fn write_table(path: &Path, header: &[f64], rows: &[&[f64]]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut record = vec!["subject".to_string()];
    record.extend(header.iter().map(|v| v.to_string()));
    w.write_record(&record)?;
    for (i, row) in rows.iter().enumerate() {
        if row.len() != header.len() {
            return Err(Error::Shape(format!(
                "row {i} has {} values, header has {}",
                row.len(),
                header.len()
            )));
        }
        record.clear();
        record.push(i.to_string());
        record.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&record)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Format(format!("csv buffer: {e}")))?;
    write_atomic(path, &bytes)
}

/// Reads a table written by [`write_table`], returning the header values and
/// the rows.
pub fn read_table(path: &Path) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let file = fs::File::open(path).map_err(|e| with_path(e, path))?;
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(file);
    let bad = |line: usize, msg: String| Error::Format(format!("{}:{line}: {msg}", path.display()));
    let mut records = r.records();
    let header = records
        .next()
        .ok_or_else(|| bad(1, "empty file".into()))??;
    if header.get(0) != Some("subject") {
        return Err(bad(1, "header must start with `subject`".into()));
    }
    let parse = |line: usize, s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| bad(line, format!("`{s}` is not a number")))
    };
    let header: Vec<f64> = header
        .iter()
        .skip(1)
        .map(|s| parse(1, s))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (k, record) in records.enumerate() {
        let record = record?;
        let line = k + 2;
        if record.get(0).map(str::trim) != Some(k.to_string().as_str()) {
            return Err(bad(line, format!("expected subject index {k}")));
        }
        if record.len() != header.len() + 1 {
            return Err(bad(
                line,
                format!("{} values, header has {}", record.len() - 1, header.len()),
            ));
        }
        let row: Vec<f64> = record
            .iter()
            .skip(1)
            .map(|s| parse(line, s))
            .collect::<Result<_>>()?;
        if let Some(v) = row.iter().find(|v| !v.is_finite()) {
            return Err(bad(line, format!("non-finite value {v}")));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

fn check_header(path: &Path, header: &[f64], grid: &Grid) -> Result<()> {
    if header.len() != grid.len() || header.iter().zip(grid.points()).any(|(a, b)| *a != b) {
        return Err(Error::GridMismatch(format!(
            "{}: header does not list the {} points of [{}, {}]",
            path.display(),
            grid.len(),
            grid.start(),
            grid.end()
        )));
    }
    Ok(())
}

/// Rows on `grid`, checking the header against it.
pub fn read_grid_table(path: &Path, grid: &Grid) -> Result<Vec<Vec<f64>>> {
    let (header, rows) = read_table(path)?;
    check_header(path, &header, grid)?;
    Ok(rows)
}

/// File name of channel `j` (zero-based) for a sample set called `prefix`.
pub fn channel_file(prefix: &str, j: usize) -> String {
    format!("{prefix}_channel_{}.csv", j + 1)
}

/// Writes one file per channel into `dir` and returns their names.
pub fn write_samples(dir: &Path, prefix: &str, fs: &[FunctionSample]) -> Result<Vec<String>> {
    let first = fs
        .first()
        .ok_or_else(|| Error::Shape("no functions to write".into()))?;
    let (grid, channels) = (*first.grid(), first.num_channels());
    if let Some(f) = fs.iter().find(|f| !f.grid().matches(&grid) || f.num_channels() != channels) {
        return Err(Error::Shape(format!(
            "functions differ in grid or channel count ({} channels on {:?})",
            f.num_channels(),
            f.grid()
        )));
    }
    let points = grid.points();
    (0..channels)
        .map(|j| {
            let name = channel_file(prefix, j);
            let rows: Vec<&[f64]> = fs.iter().map(|f| f.channel(j)).collect();
            write_table(&dir.join(&name), &points, &rows)?;
            Ok(name)
        })
        .collect()
}

/// Reads a sample set written by [`write_samples`].
pub fn read_samples(dir: &Path, files: &[String], grid: &Grid) -> Result<Vec<FunctionSample>> {
    if files.is_empty() {
        return Err(Error::Format("sample set lists no channel files".into()));
    }
    let mut channels: Vec<Vec<Vec<f64>>> = Vec::with_capacity(files.len());
    for name in files {
        let path = dir.join(name);
        let rows = read_grid_table(&path, grid)?;
        if let Some(prev) = channels.first() {
            if prev.len() != rows.len() {
                return Err(Error::Format(format!(
                    "{} has {} subjects, {} has {}",
                    files[0],
                    prev.len(),
                    name,
                    rows.len()
                )));
            }
        }
        channels.push(rows);
    }
    (0..channels[0].len())
        .map(|i| FunctionSample::new(*grid, channels.iter().map(|c| c[i].clone()).collect()))
        .collect()
}

pub fn write_warps(path: &Path, warps: &[Warp]) -> Result<()> {
    let grid = match warps.first() {
        Some(w) => *w.grid(),
        None => return Err(Error::Shape("no warps to write".into())),
    };
    if warps.iter().any(|w| !w.grid().matches(&grid)) {
        return Err(Error::GridMismatch("warps use different grids".into()));
    }
    let rows: Vec<&[f64]> = warps.iter().map(|w| w.values()).collect();
    write_table(path, &grid.points(), &rows)
}

pub fn read_warps(path: &Path, grid: &Grid) -> Result<Vec<Warp>> {
    read_grid_table(path, grid)?
        .into_iter()
        .map(|v| Warp::new(*grid, v))
        .collect()
}

/// Known generating quantities of a simulated dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    /// One period of the common template.
    pub template: FunctionSample,
    pub extended_template: FunctionSample,
    pub local_warps: Vec<Warp>,
    pub global_warps: Vec<Warp>,
    pub total_warps: Vec<Warp>,
    pub amplitude_factors: Vec<Vec<f64>>,
}

/// Functions to align plus their provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub functions: Vec<FunctionSample>,
    pub num_periods: usize,
    pub seed: Option<u64>,
    pub scenario: Option<u32>,
    pub split: Option<DatasetSplit>,
    pub truth: Option<GroundTruth>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub format: String,
    pub version: u32,
    pub grid: Grid,
    pub num_channels: usize,
    pub num_periods: usize,
    pub num_subjects: usize,
    pub seed: Option<u64>,
    pub scenario: Option<u32>,
    pub split: Option<DatasetSplit>,
    pub channel_files: Vec<String>,
    pub truth: Option<TruthManifest>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthManifest {
    pub template_grid: Grid,
    pub template_file: String,
    pub extended_template_file: String,
    pub local_warp_grid: Grid,
    pub local_warps_file: String,
    pub global_warps_file: String,
    pub total_warps_file: String,
    pub amplitude_factors_file: Option<String>,
}

/// One row per channel.
pub fn write_channels_as_rows(path: &Path, f: &FunctionSample) -> Result<()> {
    let rows: Vec<&[f64]> = f.channels().iter().map(Vec::as_slice).collect();
    write_table(path, &f.grid().points(), &rows)
}

pub fn read_rows_as_channels(path: &Path, grid: &Grid) -> Result<FunctionSample> {
    FunctionSample::new(*grid, read_grid_table(path, grid)?)
}

impl Dataset {
    pub fn from_simulation(sim: &SimDataset, seed: u64) -> Self {
        Dataset {
            functions: sim.functions.clone(),
            num_periods: sim.num_periods,
            seed: Some(seed),
            scenario: Some(sim.scenario.number()),
            split: Some(sim.split.clone()),
            truth: Some(GroundTruth {
                template: sim.template.clone(),
                extended_template: sim.extended_template.clone(),
                local_warps: sim.local_warps.clone(),
                global_warps: sim.global_warps.clone(),
                total_warps: sim.total_warps.clone(),
                amplitude_factors: sim.amplitude_factors.clone(),
            }),
        }
    }

    pub fn grid(&self) -> Grid {
        *self.functions[0].grid()
    }

    pub fn num_channels(&self) -> usize {
        self.functions[0].num_channels()
    }

    /// Subjects in `range`, with the matching ground-truth warps. The split
    /// is dropped.
    pub fn subset(&self, range: Range<usize>) -> Result<Dataset> {
        if range.start > range.end || range.end > self.functions.len() || range.is_empty() {
            return Err(Error::Shape(format!(
                "subset {range:?} of {} subjects",
                self.functions.len()
            )));
        }
        let truth = self.truth.as_ref().map(|t| GroundTruth {
            template: t.template.clone(),
            extended_template: t.extended_template.clone(),
            local_warps: t.local_warps[range.clone()].to_vec(),
            global_warps: t.global_warps[range.clone()].to_vec(),
            total_warps: t.total_warps[range.clone()].to_vec(),
            amplitude_factors: t.amplitude_factors.get(range.clone()).map(<[_]>::to_vec).unwrap_or_default(),
        });
        Ok(Dataset {
            functions: self.functions[range].to_vec(),
            num_periods: self.num_periods,
            seed: self.seed,
            scenario: self.scenario,
            split: None,
            truth,
        })
    }

    pub fn write(&self, dir: &Path) -> Result<DatasetManifest> {
        if self.functions.is_empty() {
            return Err(Error::Shape("dataset has no functions".into()));
        }
        fs::create_dir_all(dir)?;
        let channel_files = write_samples(dir, "observed", &self.functions)?;
        let truth = match &self.truth {
            None => None,
            Some(t) => {
                let names = TruthManifest {
                    template_grid: *t.template.grid(),
                    template_file: "true_template.csv".into(),
                    extended_template_file: "true_extended_template.csv".into(),
                    local_warp_grid: *t.local_warps[0].grid(),
                    local_warps_file: "true_local_warps.csv".into(),
                    global_warps_file: "true_global_warps.csv".into(),
                    total_warps_file: "true_total_warps.csv".into(),
                    amplitude_factors_file: (!t.amplitude_factors.is_empty())
                        .then(|| "true_amplitude_factors.csv".into()),
                };
                write_channels_as_rows(&dir.join(&names.template_file), &t.template)?;
                write_channels_as_rows(&dir.join(&names.extended_template_file), &t.extended_template)?;
                write_warps(&dir.join(&names.local_warps_file), &t.local_warps)?;
                write_warps(&dir.join(&names.global_warps_file), &t.global_warps)?;
                write_warps(&dir.join(&names.total_warps_file), &t.total_warps)?;
                if let Some(name) = &names.amplitude_factors_file {
                    let width = t.amplitude_factors[0].len();
                    let header: Vec<f64> = (1..=width).map(|m| m as f64).collect();
                    let rows: Vec<&[f64]> = t.amplitude_factors.iter().map(Vec::as_slice).collect();
                    write_table(&dir.join(name), &header, &rows)?;
                }
                Some(names)
            }
        };
        let manifest = DatasetManifest {
            format: DATASET_FORMAT.into(),
            version: DATASET_VERSION,
            grid: self.grid(),
            num_channels: self.num_channels(),
            num_periods: self.num_periods,
            num_subjects: self.functions.len(),
            seed: self.seed,
            scenario: self.scenario,
            split: self.split.clone(),
            channel_files,
            truth,
        };
        write_json(&dir.join(DATASET_MANIFEST), &manifest)?;
        Ok(manifest)
    }

    pub fn read(dir: &Path) -> Result<Dataset> {
        let m: DatasetManifest = read_json(&dir.join(DATASET_MANIFEST))?;
        if m.format != DATASET_FORMAT || m.version != DATASET_VERSION {
            return Err(Error::Format(format!(
                "{}: expected {DATASET_FORMAT} version {DATASET_VERSION}, found {} version {}",
                dir.display(),
                m.format,
                m.version
            )));
        }
        if m.channel_files.len() != m.num_channels {
            return Err(Error::Format(format!(
                "manifest lists {} channel files for {} channels",
                m.channel_files.len(),
                m.num_channels
            )));
        }
        let functions = read_samples(dir, &m.channel_files, &m.grid)?;
        if functions.len() != m.num_subjects {
            return Err(Error::Format(format!(
                "manifest declares {} subjects, files hold {}",
                m.num_subjects,
                functions.len()
            )));
        }
        let truth = match &m.truth {
            None => None,
            Some(t) => {
                let amplitude_factors = match &t.amplitude_factors_file {
                    Some(name) => read_table(&dir.join(name))?.1,
                    None => Vec::new(),
                };
                let truth = GroundTruth {
                    template: read_rows_as_channels(&dir.join(&t.template_file), &t.template_grid)?,
                    extended_template: read_rows_as_channels(&dir.join(&t.extended_template_file), &m.grid)?,
                    local_warps: read_warps(&dir.join(&t.local_warps_file), &t.local_warp_grid)?,
                    global_warps: read_warps(&dir.join(&t.global_warps_file), &m.grid)?,
                    total_warps: read_warps(&dir.join(&t.total_warps_file), &m.grid)?,
                    amplitude_factors,
                };
                let n = m.num_subjects;
                if [truth.local_warps.len(), truth.global_warps.len(), truth.total_warps.len()]
                    .iter()
                    .any(|&k| k != n)
                {
                    return Err(Error::Format("ground-truth warp files do not match the subject count".into()));
                }
                Some(truth)
            }
        };
        Ok(Dataset {
            functions,
            num_periods: m.num_periods,
            seed: m.seed,
            scenario: m.scenario,
            split: m.split,
            truth,
        })
    }
}
