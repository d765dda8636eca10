//! Scenario files: TOML with `[scenario]`, `[potential]`, `[packet]`,
//! `[sweep]`, `[larmor]`, `[grid]` and `[output]` sections.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use zrdelay::amplitudes::PotentialSpec;
use zrdelay::wavepackets::Dispersion;

use crate::error::{CliError, FieldError};

pub const DEFAULT_PER_DECADE: usize = 24;
pub const DEFAULT_RESIDUAL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    TransmitSweep,
    ReflectSweep,
    RadialSweep,
    LarmorSweep,
    SingleShot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LawName {
    Quadratic,
    Linear,
}

#[derive(Debug, Deserialize)]
struct RawConfig {
    scenario: RawScenario,
    potential: toml::Value,
    #[serde(default)]
    packet: RawPacket,
    #[serde(default)]
    sweep: RawSweep,
    larmor: Option<RawLarmor>,
    #[serde(default)]
    grid: RawGrid,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
struct RawScenario {
    name: String,
    mode: Mode,
    #[serde(default)]
    description: String,
}

#[derive(Debug, Deserialize)]
struct RawPacket {
    #[serde(default = "one")]
    p: f64,
    #[serde(default = "default_laws")]
    laws: Vec<LawName>,
    #[serde(default = "one")]
    c: f64,
    #[serde(default = "three")]
    separation: f64,
    x_i: Option<f64>,
    t: Option<f64>,
    dx: Option<f64>,
}

impl Default for RawPacket {
    fn default() -> Self {
        Self { p: 1.0, laws: default_laws(), c: 1.0, separation: 3.0, x_i: None, t: None, dx: None }
    }
}

#[derive(Debug, Default, Deserialize)]
struct RawSweep {
    dx: Option<Vec<f64>>,
    dx_min: Option<f64>,
    dx_max: Option<f64>,
    per_decade: Option<usize>,
}

#[derive(Debug, Deserialize)]
struct RawLarmor {
    #[serde(default = "one")]
    p: f64,
    df: Option<Vec<f64>>,
    df_min: Option<f64>,
    df_max: Option<f64>,
    per_decade: Option<usize>,
}

#[derive(Debug, Deserialize)]
struct RawGrid {
    #[serde(default = "one_usize")]
    scale: usize,
    #[serde(default = "default_residual")]
    residual_tolerance: f64,
}

impl Default for RawGrid {
    fn default() -> Self {
        Self { scale: 1, residual_tolerance: DEFAULT_RESIDUAL_TOLERANCE }
    }
}

#[derive(Debug, Deserialize)]
struct RawOutput {
    #[serde(default)]
    wave_dump: bool,
    #[serde(default = "default_dump_points")]
    dump_points: usize,
    dump_indices: Option<Vec<usize>>,
}

impl Default for RawOutput {
    fn default() -> Self {
        Self { wave_dump: false, dump_points: default_dump_points(), dump_indices: None }
    }
}

fn one() -> f64 {
    1.0
}
fn three() -> f64 {
    3.0
}
fn one_usize() -> usize {
    1
}
fn default_laws() -> Vec<LawName> {
    vec![LawName::Quadratic]
}
fn default_residual() -> f64 {
    DEFAULT_RESIDUAL_TOLERANCE
}
fn default_dump_points() -> usize {
    2001
}

/// Packet template shared by every sweep point.
#[derive(Debug, Clone, Serialize)]
pub struct PacketTemplate {
    pub p: f64,
    pub laws: Vec<Dispersion>,
    pub separation: f64,
    pub x_i: Option<f64>,
    pub t: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LarmorSweep {
    pub p: f64,
    pub df: Vec<f64>,
}

/// A validated scenario.
#[derive(Debug, Clone, Serialize)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub mode: Mode,
    pub potential: PotentialSpec,
    pub packet: PacketTemplate,
    pub dx: Vec<f64>,
    pub larmor: Option<LarmorSweep>,
    pub grid_scale: usize,
    pub residual_tolerance: f64,
    pub wave_dump: bool,
    pub dump_points: usize,
    /// Point indices to dump; all points when absent.
    pub dump_indices: Option<Vec<usize>>,
    pub config_sha256: String,
    /// Keys present in the file but not understood.
    pub unknown_keys: Vec<String>,
}

pub fn config_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// `n` log-spaced values from `min` to `max`, with `per_decade` steps per
/// factor of ten (endpoints included).
pub fn log_range(min: f64, max: f64, per_decade: usize) -> Vec<f64> {
    if min == max {
        return vec![min];
    }
    let steps = ((max / min).log10() * per_decade as f64).round().max(1.0) as usize;
    (0..=steps).map(|j| min * (max / min).powf(j as f64 / steps as f64)).collect()
}

fn positive(errors: &mut Vec<FieldError>, field: &str, v: f64) {
    if !(v > 0.0 && v.is_finite()) {
        errors.push(FieldError::new(field, format!("must be positive and finite, got {v}")));
    }
}

fn resolve_range(
    errors: &mut Vec<FieldError>,
    prefix: &str,
    list: Option<Vec<f64>>,
    min: Option<f64>,
    max: Option<f64>,
    per_decade: Option<usize>,
) -> Vec<f64> {
    let (lk, mink, maxk, pk) =
        (format!("{prefix}"), format!("{prefix}_min"), format!("{prefix}_max"), "per_decade".to_string());
    match (list, min, max) {
        (Some(values), None, None) => {
            for (i, &v) in values.iter().enumerate() {
                positive(errors, &format!("{lk}[{i}]"), v);
            }
            values
        }
        (None, Some(lo), Some(hi)) => {
            positive(errors, &mink, lo);
            positive(errors, &maxk, hi);
            let per = per_decade.unwrap_or(DEFAULT_PER_DECADE);
            if per == 0 {
                errors.push(FieldError::new(&pk, "must be at least 1"));
            }
            if hi < lo {
                errors.push(FieldError::new(&maxk, format!("must not be below {mink} ({hi} < {lo})")));
            }
            if errors.is_empty() {
                log_range(lo, hi, per)
            } else {
                Vec::new()
            }
        }
        (None, None, None) => {
            errors.push(FieldError::new(&lk, format!("give either {lk} or both {mink} and {maxk}")));
            Vec::new()
        }
        _ => {
            errors.push(FieldError::new(&lk, format!("give either {lk} or both {mink} and {maxk}, not a mix")));
            Vec::new()
        }
    }
}

fn resolve_potential(errors: &mut Vec<FieldError>, raw: toml::Value) -> Option<PotentialSpec> {
    let parsed: PotentialSpec = match raw.try_into() {
        Ok(p) => p,
        Err(e) => {
            errors.push(FieldError::new("potential", e.message().trim().to_string()));
            return None;
        }
    };
    let checked = match parsed {
        PotentialSpec::ZeroRange { omega } => PotentialSpec::zero_range(omega),
        PotentialSpec::Rectangular { height, left, right } => PotentialSpec::rectangular(height, left, right),
        PotentialSpec::RadialZeroRange { alpha } => PotentialSpec::radial(alpha),
    };
    match checked {
        Ok(p) => Some(p),
        Err(e) => {
            errors.push(FieldError::new("potential", e.to_string()));
            None
        }
    }
}

/// Parses and validates a scenario. Unknown keys are collected; with
/// `strict` they are errors.
pub fn validate_scenario(text: &str, strict: bool) -> Result<Scenario, CliError> {
    let mut unknown = Vec::new();
    let de = toml::Deserializer::new(text);
    let raw: RawConfig = serde_ignored::deserialize(de, |path| unknown.push(path.to_string()))
        .map_err(|e| CliError::Config(vec![FieldError::new("config", e.message().trim().to_string())]))?;
    // the potential section is a free-form table; check its keys by kind
    if let Some(table) = raw.potential.as_table() {
        let allowed: &[&str] = match table.get("kind").and_then(|k| k.as_str()) {
            Some("zero-range") => &["kind", "omega"],
            Some("rectangular") => &["kind", "height", "left", "right"],
            Some("radial-zero-range") => &["kind", "alpha"],
            _ => &[],
        };
        if !allowed.is_empty() {
            unknown.extend(table.keys().filter(|k| !allowed.contains(&k.as_str())).map(|k| format!("potential.{k}")));
        }
    }

    let mut errors = Vec::new();
    if strict {
        errors.extend(unknown.iter().map(|k| FieldError::new(k, "unknown key")));
    }
    if raw.scenario.name.trim().is_empty()
        || !raw.scenario.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
    {
        errors.push(FieldError::new("scenario.name", "must be non-empty and use only [A-Za-z0-9_-]"));
    }
    let mode = raw.scenario.mode;
    let potential = resolve_potential(&mut errors, raw.potential);

    let pk = &raw.packet;
    positive(&mut errors, "packet.p", pk.p);
    positive(&mut errors, "packet.c", pk.c);
    positive(&mut errors, "packet.separation", pk.separation);
    if pk.laws.is_empty() {
        errors.push(FieldError::new("packet.laws", "needs at least one dispersion law"));
    }
    if let Some(x) = pk.x_i {
        if !(x.is_finite() && x < 0.0) {
            errors.push(FieldError::new("packet.x_i", format!("must be negative and finite, got {x}")));
        }
    }
    if let Some(t) = pk.t {
        if !(t.is_finite() && t >= 0.0) {
            errors.push(FieldError::new("packet.t", format!("must be non-negative, got {t}")));
        }
    }
    let laws: Vec<Dispersion> = pk
        .laws
        .iter()
        .map(|l| match l {
            LawName::Quadratic => Dispersion::Quadratic,
            LawName::Linear => Dispersion::Linear { c: pk.c },
        })
        .collect();

    if raw.grid.scale == 0 {
        errors.push(FieldError::new("grid.scale", "must be at least 1"));
    }
    positive(&mut errors, "grid.residual_tolerance", raw.grid.residual_tolerance);
    if raw.output.dump_points < 2 {
        errors.push(FieldError::new("output.dump_points", "must be at least 2"));
    }

    let mut dx = Vec::new();
    let mut larmor = None;
    match mode {
        Mode::SingleShot => match pk.dx {
            Some(v) => {
                positive(&mut errors, "packet.dx", v);
                dx.push(v);
            }
            None => errors.push(FieldError::new("packet.dx", "single-shot needs packet.dx")),
        },
        Mode::LarmorSweep => match raw.larmor {
            Some(l) => {
                positive(&mut errors, "larmor.p", l.p);
                let mut sub = Vec::new();
                let df = resolve_range(&mut sub, "larmor.df", l.df, l.df_min, l.df_max, l.per_decade);
                errors.extend(sub);
                larmor = Some(LarmorSweep { p: l.p, df });
            }
            None => errors.push(FieldError::new("larmor", "larmor-sweep needs a [larmor] section")),
        },
        _ => {
            let s = raw.sweep;
            let mut sub = Vec::new();
            dx = resolve_range(&mut sub, "sweep.dx", s.dx, s.dx_min, s.dx_max, s.per_decade);
            errors.extend(sub);
        }
    }

    if let Some(v) = potential {
        let radial = matches!(v, PotentialSpec::RadialZeroRange { .. });
        match mode {
            Mode::RadialSweep if !radial => {
                errors.push(FieldError::new("potential.kind", "radial-sweep needs kind = \"radial-zero-range\""))
            }
            Mode::TransmitSweep | Mode::ReflectSweep if radial => {
                errors.push(FieldError::new("potential.kind", "one-dimensional sweeps need a line potential"))
            }
            Mode::LarmorSweep if !matches!(v, PotentialSpec::Rectangular { .. }) => {
                errors.push(FieldError::new("potential.kind", "larmor-sweep needs kind = \"rectangular\""))
            }
            Mode::ReflectSweep if matches!(v, PotentialSpec::ZeroRange { omega } if omega == 0.0) => {
                errors.push(FieldError::new("potential.omega", "no reflected packet for omega = 0"))
            }
            _ => {}
        }
    }

    // the quadratic-law event time 2pΔxK/(p² − K²Δk²) is singular at pΔx = 2K
    if pk.t.is_none() && mode != Mode::LarmorSweep && laws.contains(&Dispersion::Quadratic) {
        for (i, &d) in dx.iter().enumerate() {
            if pk.p * d == 2.0 * pk.separation {
                errors.push(FieldError::new(
                    format!("sweep.dx[{i}]"),
                    format!(
                        "p*dx = 2K = {} makes t(p, dk, K) = 2p*dx*K/(p^2 - K^2 dk^2) singular",
                        2.0 * pk.separation
                    ),
                ));
            }
        }
    }

    if !errors.is_empty() {
        return Err(CliError::Config(errors));
    }
    Ok(Scenario {
        name: raw.scenario.name,
        description: raw.scenario.description,
        mode,
        potential: potential.expect("validated"),
        packet: PacketTemplate { p: pk.p, laws, separation: pk.separation, x_i: pk.x_i, t: pk.t },
        dx,
        larmor,
        grid_scale: raw.grid.scale,
        residual_tolerance: raw.grid.residual_tolerance,
        wave_dump: raw.output.wave_dump,
        dump_points: raw.output.dump_points,
        dump_indices: raw.output.dump_indices,
        config_sha256: config_hash(text),
        unknown_keys: unknown,
    })
}
