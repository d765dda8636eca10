//! CSV tables, wave dumps and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use zrdelay::observables::{DUAL_METHOD_ATOL, DUAL_METHOD_RTOL};
use zrdelay::propagator::COMPLETION_TOLERANCE;

use crate::config::Scenario;
use crate::error::CliError;
use crate::run::{Counts, RunResult, Table, WaveDump};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub file: String,
    pub kind: &'static str,
    pub channel: Option<&'static str>,
    pub rows: usize,
}

#[derive(Debug, Serialize)]
struct Tolerances {
    completion_leak: f64,
    dual_method_rtol: f64,
    dual_method_atol: f64,
    refinement_residual: f64,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    schema_version: u32,
    config_sha256: &'a str,
    scenario: &'a Scenario,
    tolerances: Tolerances,
    counts: &'a Counts,
    files: &'a [FileEntry],
}

fn preamble(scenario: &Scenario, what: &str) -> String {
    format!(
        "# zrdelay {TOOL_VERSION}\n# schema_version {SCHEMA_VERSION}\n# config_sha256 {}\n# scenario {}\n# table {what}\n# grid_scale {}\n",
        scenario.config_sha256, scenario.name, scenario.grid_scale
    )
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|source| CliError::Write { path: path.to_path_buf(), source })
}

fn csv_bytes<T: Serialize>(head: String, rows: &[T]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(head.into_bytes());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| CliError::Pool(e.to_string()))
}

fn dump_bytes(scenario: &Scenario, d: &WaveDump) -> Result<Vec<u8>, CliError> {
    #[derive(Serialize)]
    struct Sample {
        kind: &'static str,
        t: f64,
        x: f64,
        re: f64,
        im: f64,
        density: f64,
    }
    let mut samples = Vec::new();
    for (kind, wave) in [("initial", &d.initial), ("final", &d.last)] {
        let dens: Vec<f64> = wave.values.iter().map(|z| z.norm_sqr()).collect();
        let peak = dens.iter().copied().fold(0.0, f64::max);
        let keep: Vec<usize> = (0..dens.len()).filter(|&i| dens[i] >= 1e-10 * peak).collect();
        let (Some(&lo), Some(&hi)) = (keep.first(), keep.last()) else { continue };
        let stride = ((hi - lo) / (scenario.dump_points - 1)).max(1);
        for i in (lo..=hi).step_by(stride) {
            let z = wave.values[i];
            samples.push(Sample { kind, t: wave.t, x: wave.grid.point(i), re: z.re, im: z.im, density: dens[i] });
        }
    }
    csv_bytes(preamble(scenario, &format!("wave {} {} {}", d.channel.name(), d.law, d.index)), &samples)
}

/// Writes the tables, dumps and `manifest.json` under `out`. Empty tables are
/// not written; the manifest always is.
pub fn write_outputs(out: &Path, scenario: &Scenario, result: &RunResult) -> Result<Vec<FileEntry>, CliError> {
    fs::create_dir_all(out).map_err(|source| CliError::Write { path: out.to_path_buf(), source })?;
    let mut files = Vec::new();
    for table in &result.tables {
        let (name, kind, channel, bytes, rows) = match table {
            Table::Delay { channel, rows } => {
                if rows.is_empty() {
                    continue;
                }
                let name = format!("{}_{}.csv", scenario.name, channel.name());
                let bytes = csv_bytes(preamble(scenario, &format!("delay {}", channel.name())), rows)?;
                (name, "delay", Some(channel.name()), bytes, rows.len())
            }
            Table::Larmor { rows } => {
                if rows.is_empty() {
                    continue;
                }
                let name = format!("{}_larmor.csv", scenario.name);
                (name, "larmor", None, csv_bytes(preamble(scenario, "larmor"), rows)?, rows.len())
            }
        };
        write_file(&out.join(&name), &bytes)?;
        files.push(FileEntry { file: name, kind, channel, rows });
    }
    for d in &result.dumps {
        let name = format!("{}_{}_{}_{:03}_wave.csv", scenario.name, d.channel.name(), d.law, d.index);
        let bytes = dump_bytes(scenario, d)?;
        write_file(&out.join(&name), &bytes)?;
        files.push(FileEntry { file: name, kind: "wave", channel: Some(d.channel.name()), rows: 0 });
    }
    let manifest = Manifest {
        tool: "zrdelay",
        version: TOOL_VERSION,
        schema_version: SCHEMA_VERSION,
        config_sha256: &scenario.config_sha256,
        scenario,
        tolerances: Tolerances {
            completion_leak: COMPLETION_TOLERANCE,
            dual_method_rtol: DUAL_METHOD_RTOL,
            dual_method_atol: DUAL_METHOD_ATOL,
            refinement_residual: scenario.residual_tolerance,
        },
        counts: &result.counts,
        files: &files,
    };
    let mut json = serde_json::to_vec_pretty(&manifest)?;
    json.push(b'\n');
    write_file(&manifest_path(out), &json)?;
    Ok(files)
}

pub fn manifest_path(out: &Path) -> PathBuf {
    out.join("manifest.json")
}
