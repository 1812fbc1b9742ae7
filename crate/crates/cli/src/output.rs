//! Files written by `simulate`.
//!
//! `timeseries.csv` has the header `t,mean,mean_drift,norm_h<s>...,tail_slope,max_abs_f`
//! with one `norm_h<s>` column per monitored Sobolev index; `tail_slope` is
//! empty when the tail is below the round-off floor. Snapshots go to
//! `snapshots/snap_<step>.{csv,json,bin}`:
//!
//! * csv: `index,x,f,coeff_abs`, where `coeff_abs` is `|c_index|` for
//!   `index <= n/2` and empty otherwise;
//! * json: `t`, `step`, `samples`, `coeff_abs` and the monitor record;
//! * bin: 16-byte header (`MUSKATSN`, `u32` version, `u32` n), then `t` and
//!   the `n` samples, all little-endian.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use muskat::evolution::{MonitorRecord, Snapshot, SnapshotSink, TailSlope};
use muskat::{Grid, MuskatError, SpectralField};
use serde::{Deserialize, Serialize};

use crate::config::SnapshotFormat;
use crate::error::CliError;

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"MUSKATSN";
pub const SNAPSHOT_VERSION: u32 = 1;

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

fn io_error(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub t: f64,
    pub step: u64,
    pub samples: Vec<f64>,
    pub coeff_abs: Vec<f64>,
    pub mean_drift: f64,
    pub sobolev_indices: Vec<f64>,
    pub sobolev_norms: Vec<f64>,
    pub tail_slope: Option<f64>,
    pub max_abs_f: f64,
}

impl SnapshotRecord {
    pub fn new(step: u64, f: &SpectralField, record: &MonitorRecord, indices: &[f64]) -> Self {
        let nyquist = f.grid().nyquist() as i64;
        Self {
            t: record.t,
            step,
            samples: f.samples().to_vec(),
            coeff_abs: (0..=nyquist).map(|m| f.coeff(m).norm()).collect(),
            mean_drift: record.mean_drift,
            sobolev_indices: indices.to_vec(),
            sobolev_norms: record.sobolev_norms.clone(),
            tail_slope: record.tail_slope.value(),
            max_abs_f: record.max_abs_f,
        }
    }
}

pub fn write_snapshot_bin(path: &Path, t: f64, samples: &[f64]) -> Result<(), CliError> {
    let mut out = BufWriter::new(File::create(path).map_err(io_error(path))?);
    let mut bytes = Vec::with_capacity(24 + 8 * samples.len());
    bytes.extend_from_slice(SNAPSHOT_MAGIC);
    bytes.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    bytes.extend_from_slice(&(samples.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&t.to_le_bytes());
    for v in samples {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&bytes).map_err(io_error(path))?;
    out.flush().map_err(io_error(path))
}

pub fn read_snapshot_bin(path: &Path) -> Result<(f64, Vec<f64>), CliError> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(io_error(path))?;
    let bad = |message: &str| CliError::Parse { path: path.display().to_string(), message: message.into() };
    if bytes.len() < 24 || &bytes[..8] != SNAPSHOT_MAGIC {
        return Err(bad("not a snapshot file"));
    }
    let word = |k: usize| u32::from_le_bytes(bytes[k..k + 4].try_into().unwrap());
    if word(8) != SNAPSHOT_VERSION {
        return Err(bad("unsupported snapshot version"));
    }
    let n = word(12) as usize;
    if bytes.len() != 24 + 8 * n {
        return Err(bad("truncated snapshot"));
    }
    let float = |k: usize| f64::from_le_bytes(bytes[k..k + 8].try_into().unwrap());
    Ok((float(16), (0..n).map(|i| float(24 + 8 * i)).collect()))
}

/// Writes the time series and snapshots as monitors are recorded.
pub struct RunWriter {
    directory: PathBuf,
    formats: Vec<SnapshotFormat>,
    indices: Vec<f64>,
    grid: Grid,
    timeseries: BufWriter<File>,
}

impl RunWriter {
    pub fn create(
        directory: &Path,
        formats: &[SnapshotFormat],
        indices: &[f64],
        grid: Grid,
    ) -> Result<Self, CliError> {
        std::fs::create_dir_all(directory).map_err(io_error(directory))?;
        if !formats.is_empty() {
            let snaps = directory.join("snapshots");
            std::fs::create_dir_all(&snaps).map_err(io_error(&snaps))?;
        }
        let path = directory.join("timeseries.csv");
        let mut timeseries = BufWriter::new(File::create(&path).map_err(io_error(&path))?);
        let mut header = vec!["t".to_string(), "mean".into(), "mean_drift".into()];
        header.extend(indices.iter().map(|s| format!("norm_h{s}")));
        header.extend(["tail_slope".to_string(), "max_abs_f".into()]);
        writeln!(timeseries, "{}", header.join(",")).map_err(io_error(&path))?;
        Ok(Self {
            directory: directory.to_path_buf(),
            formats: formats.to_vec(),
            indices: indices.to_vec(),
            grid,
            timeseries,
        })
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        let path = self.directory.join("timeseries.csv");
        self.timeseries.flush().map_err(io_error(&path))
    }

    fn write_row(&mut self, snapshot: &Snapshot<'_>) -> Result<(), CliError> {
        let r = snapshot.record;
        let mut row = vec![fmt_f64(r.t), fmt_f64(snapshot.f.integral_mean()), fmt_f64(r.mean_drift)];
        row.extend(r.sobolev_norms.iter().map(|&v| fmt_f64(v)));
        row.push(match r.tail_slope {
            TailSlope::Slope(s) => fmt_f64(s),
            TailSlope::BelowFloor => String::new(),
        });
        row.push(fmt_f64(r.max_abs_f));
        let path = self.directory.join("timeseries.csv");
        writeln!(self.timeseries, "{}", row.join(",")).map_err(io_error(&path))
    }

    fn write_snapshots(&self, snapshot: &Snapshot<'_>) -> Result<(), CliError> {
        let stem = self.directory.join("snapshots").join(format!("snap_{:08}", snapshot.step));
        let record = SnapshotRecord::new(snapshot.step, snapshot.f, snapshot.record, &self.indices);
        for format in &self.formats {
            match format {
                SnapshotFormat::Bin => write_snapshot_bin(&stem.with_extension("bin"), record.t, &record.samples)?,
                SnapshotFormat::Json => {
                    let path = stem.with_extension("json");
                    let text = serde_json::to_string(&record).map_err(|e| CliError::Failed(e.to_string()))?;
                    std::fs::write(&path, text).map_err(io_error(&path))?;
                }
                SnapshotFormat::Csv => {
                    let path = stem.with_extension("csv");
                    let mut text = String::from("index,x,f,coeff_abs\n");
                    for (j, v) in record.samples.iter().enumerate() {
                        let c = record.coeff_abs.get(j).map(|&c| fmt_f64(c)).unwrap_or_default();
                        text.push_str(&format!("{j},{},{},{c}\n", fmt_f64(self.grid.node(j)), fmt_f64(*v)));
                    }
                    std::fs::write(&path, text).map_err(io_error(&path))?;
                }
            }
        }
        Ok(())
    }
}

impl SnapshotSink for RunWriter {
    fn record(&mut self, snapshot: &Snapshot<'_>) -> muskat::Result<()> {
        self.write_row(snapshot)
            .and_then(|_| self.write_snapshots(snapshot))
            .map_err(|e| MuskatError::Sink(e.to_string()))
    }
}

/// Contents of `run.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMetadata {
    pub config: crate::config::RunConfig,
    pub termination: serde_json::Value,
    pub final_t: f64,
    pub steps: u64,
    pub initial_mean: f64,
    pub final_mean: f64,
    pub max_mean_drift: f64,
    pub wall_time_s: f64,
    pub library_version: String,
    pub cli_version: String,
}
