//! Executes a validated scenario point by point.

use rayon::prelude::*;
use serde::Serialize;

use zrdelay::amplitudes::PotentialSpec;
use zrdelay::larmor::{
    complex_time, mean_pointer_reading, mean_pointer_reading_spectral, shifted_transmission, transmitted_weight,
    PointerSpec,
};
use zrdelay::observables::{measure, Measurement};
use zrdelay::propagator::{event_time, propagate, Channel, SpatialWave, COMPLETION_TOLERANCE};
use zrdelay::wavepackets::{Dispersion, PacketSpec};
use zrdelay::Error;

use crate::config::{Mode, Scenario};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Flagged,
    Skipped,
    Failed,
}

/// One row of a delay table.
#[derive(Debug, Clone, Serialize)]
pub struct DelayRow {
    pub index: usize,
    pub channel: &'static str,
    pub law: &'static str,
    pub p: f64,
    pub dx: f64,
    pub x_i: Option<f64>,
    pub t: Option<f64>,
    pub separation: f64,
    pub m_omega_dx: Option<f64>,
    pub omega_over_c: Option<f64>,
    pub mc_over_p: Option<f64>,
    pub m_omega_x_i: Option<f64>,
    pub m_omega_c_t: Option<f64>,
    pub delay: Option<f64>,
    pub delay_scaled: Option<f64>,
    pub delay_spectral: Option<f64>,
    pub asymptote: Option<f64>,
    pub filtering: Option<f64>,
    pub norm: Option<f64>,
    pub com_real_space: Option<f64>,
    pub com_spectral: Option<f64>,
    pub leak: Option<f64>,
    pub residual: Option<f64>,
    pub status: Status,
    pub reason: String,
}

/// One row of a Larmor table.
#[derive(Debug, Clone, Serialize)]
pub struct LarmorRow {
    pub index: usize,
    pub p: f64,
    pub height: f64,
    pub width: f64,
    pub tau0: f64,
    pub df: f64,
    pub df_over_tau0: f64,
    pub reading: Option<f64>,
    pub reading_spectral: Option<f64>,
    pub re_tau: Option<f64>,
    pub im_tau: Option<f64>,
    pub weight: Option<f64>,
    pub transmission_sq: Option<f64>,
    pub residual: Option<f64>,
    pub status: Status,
    pub reason: String,
}

/// Initial and final packets of one sweep point.
#[derive(Debug, Clone)]
pub struct WaveDump {
    pub index: usize,
    pub channel: Channel,
    pub law: &'static str,
    pub initial: SpatialWave,
    pub last: SpatialWave,
}

#[derive(Debug, Clone)]
pub enum Table {
    Delay { channel: Channel, rows: Vec<DelayRow> },
    Larmor { rows: Vec<LarmorRow> },
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Counts {
    pub ok: usize,
    pub flagged: usize,
    pub skipped: usize,
    pub failed: usize,
}

impl Counts {
    fn add(&mut self, s: Status) {
        match s {
            Status::Ok => self.ok += 1,
            Status::Flagged => self.flagged += 1,
            Status::Skipped => self.skipped += 1,
            Status::Failed => self.failed += 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub tables: Vec<Table>,
    pub dumps: Vec<WaveDump>,
    pub counts: Counts,
}

/// Inverse length setting the dimensionless groups: Ω, the area UL of a
/// rectangular region, or 1/α.
pub fn inverse_length(v: &PotentialSpec) -> Option<f64> {
    let s = match *v {
        PotentialSpec::ZeroRange { omega } => omega,
        PotentialSpec::Rectangular { height, left, right } => height * (right - left),
        PotentialSpec::RadialZeroRange { alpha } => 1.0 / alpha,
    };
    (s != 0.0).then_some(s)
}

fn channels(scenario: &Scenario) -> Vec<Channel> {
    match scenario.mode {
        Mode::TransmitSweep => vec![Channel::Transmitted],
        Mode::ReflectSweep => vec![Channel::Reflected],
        Mode::RadialSweep => vec![Channel::Radial],
        Mode::SingleShot => match scenario.potential {
            PotentialSpec::RadialZeroRange { .. } => vec![Channel::Radial],
            PotentialSpec::ZeroRange { omega } if omega == 0.0 => vec![Channel::Transmitted],
            _ => vec![Channel::Transmitted, Channel::Reflected],
        },
        Mode::LarmorSweep => Vec::new(),
    }
}

/// Precondition failures skip a point; grid and norm failures fail it.
fn classify(e: &Error) -> Status {
    match e {
        Error::GridTooNarrow(_) | Error::VanishingNorm(_) | Error::AmplitudeUnderflow(_) => Status::Failed,
        Error::Domain(_) | Error::Pole { .. } | Error::Unsupported(_) => Status::Skipped,
    }
}

fn blank_row(index: usize, channel: Channel, law: Dispersion, p: f64, dx: f64, separation: f64) -> DelayRow {
    DelayRow {
        index,
        channel: channel.name(),
        law: law.name(),
        p,
        dx,
        x_i: None,
        t: None,
        separation,
        m_omega_dx: None,
        omega_over_c: None,
        mc_over_p: None,
        m_omega_x_i: None,
        m_omega_c_t: None,
        delay: None,
        delay_scaled: None,
        delay_spectral: None,
        asymptote: None,
        filtering: None,
        norm: None,
        com_real_space: None,
        com_spectral: None,
        leak: None,
        residual: None,
        status: Status::Skipped,
        reason: String::new(),
    }
}

fn fill_measurement(row: &mut DelayRow, m: &Measurement, omega: Option<f64>, tolerance: f64) {
    row.delay = Some(m.delay);
    row.delay_scaled = omega.map(|w| w * m.delay);
    row.delay_spectral = Some(m.delay_spectral);
    row.asymptote = Some(m.asymptote);
    row.filtering = Some(m.filtering);
    row.norm = Some(m.norm);
    row.com_real_space = Some(m.com_real_space);
    row.com_spectral = Some(m.com_spectral);
    row.leak = Some(m.leak);
    row.residual = Some(m.refinement_residual);
    let mut reasons = Vec::new();
    if m.leak >= COMPLETION_TOLERANCE {
        reasons.push(format!("event not completed (leak {:.3e})", m.leak));
    }
    if m.refinement_residual > tolerance {
        reasons.push(format!("refinement residual {:.3e} above {tolerance:e}", m.refinement_residual));
    }
    if !m.methods_agree() {
        reasons.push(format!("COM methods differ by {:.3e}", (m.com_real_space - m.com_spectral).abs()));
    }
    row.status = if reasons.is_empty() { Status::Ok } else { Status::Flagged };
    row.reason = reasons.join("; ");
}

fn delay_point(
    scenario: &Scenario,
    index: usize,
    channel: Channel,
    law: Dispersion,
    dx: f64,
) -> (DelayRow, Option<WaveDump>) {
    let pk = &scenario.packet;
    let v = &scenario.potential;
    let omega = inverse_length(v);
    let mut row = blank_row(index, channel, law, pk.p, dx, pk.separation);
    let outcome = (|| -> Result<(Measurement, Option<WaveDump>), Error> {
        let spec = match pk.x_i {
            Some(x) => {
                let spec = PacketSpec::new(pk.p, dx, x, law)?;
                spec.check_separation(pk.separation)?;
                spec
            }
            None => PacketSpec::separated(pk.p, dx, pk.separation, law)?,
        };
        row.x_i = Some(spec.x_i);
        let t = match pk.t {
            Some(t) => t,
            None => event_time(&spec, pk.separation, v)?,
        };
        row.t = Some(t);
        if let Some(w) = omega {
            row.m_omega_dx = Some(w * dx);
            row.m_omega_x_i = Some(w * spec.x_i);
            row.m_omega_c_t = Some(w * spec.velocity() * t);
            if let Dispersion::Linear { c } = law {
                row.omega_over_c = Some(w / c);
                row.mc_over_p = Some(c / pk.p);
            }
        } else if let Dispersion::Linear { c } = law {
            row.mc_over_p = Some(c / pk.p);
        }
        let m = measure(&spec, channel, v, t, scenario.grid_scale)?;
        let wanted = scenario.dump_indices.as_ref().map_or(true, |ix| ix.contains(&index));
        let dump = if scenario.wave_dump && wanted {
            let (_, initial) = propagate(&spec, Channel::Free, None, 0.0, scenario.grid_scale)?;
            let (_, last) = propagate(&spec, channel, Some(v), t, scenario.grid_scale)?;
            Some(WaveDump { index, channel, law: law.name(), initial, last })
        } else {
            None
        };
        Ok((m, dump))
    })();
    match outcome {
        Ok((m, dump)) => {
            fill_measurement(&mut row, &m, omega, scenario.residual_tolerance);
            (row, dump)
        }
        Err(e) => {
            row.status = classify(&e);
            row.reason = e.to_string();
            (row, None)
        }
    }
}

fn larmor_point(scenario: &Scenario, index: usize, p: f64, df: f64) -> LarmorRow {
    let PotentialSpec::Rectangular { height, left, right } = scenario.potential else {
        unreachable!("validated as rectangular")
    };
    let width = right - left;
    let tau0 = width / p;
    let mut row = LarmorRow {
        index,
        p,
        height,
        width,
        tau0,
        df,
        df_over_tau0: df / tau0,
        reading: None,
        reading_spectral: None,
        re_tau: None,
        im_tau: None,
        weight: None,
        transmission_sq: None,
        residual: None,
        status: Status::Skipped,
        reason: String::new(),
    };
    let v = &scenario.potential;
    let scale = scenario.grid_scale;
    let outcome = (|| -> Result<(), Error> {
        let pointer = PointerSpec::new(df)?;
        row.transmission_sq = Some(shifted_transmission(p, v, 0.0)?.norm_sqr());
        let tau = complex_time(p, v)?.value;
        row.re_tau = Some(tau.re);
        row.im_tau = Some(tau.im);
        row.weight = Some(transmitted_weight(&pointer, p, v, scale)?);
        let reading = mean_pointer_reading(&pointer, p, v, scale)?;
        row.reading = Some(reading);
        row.reading_spectral = Some(mean_pointer_reading_spectral(&pointer, p, v, scale)?);
        let fine = mean_pointer_reading(&pointer, p, v, 2 * scale)?;
        row.residual = Some((fine - reading).abs());
        Ok(())
    })();
    match outcome {
        Ok(()) => {
            let residual = row.residual.unwrap_or(0.0);
            if residual > scenario.residual_tolerance {
                row.status = Status::Flagged;
                row.reason = format!("refinement residual {residual:.3e} above {:e}", scenario.residual_tolerance);
            } else {
                row.status = Status::Ok;
            }
        }
        Err(e) => {
            row.status = classify(&e);
            row.reason = e.to_string();
        }
    }
    row
}

/// Runs every point of the scenario on a pool of `jobs` workers (0 picks the
/// number of cores). Rows come back in input order.
pub fn run_scenario(scenario: &Scenario, jobs: usize) -> Result<RunResult, CliError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(|e| CliError::Pool(e.to_string()))?;
    let mut counts = Counts::default();
    let mut tables = Vec::new();
    let mut dumps = Vec::new();

    if let Some(l) = &scenario.larmor {
        let rows: Vec<LarmorRow> =
            pool.install(|| l.df.par_iter().enumerate().map(|(i, &df)| larmor_point(scenario, i, l.p, df)).collect());
        rows.iter().for_each(|r| counts.add(r.status));
        tables.push(Table::Larmor { rows });
        return Ok(RunResult { tables, dumps, counts });
    }

    for channel in channels(scenario) {
        let points: Vec<(usize, Dispersion, f64)> = scenario
            .packet
            .laws
            .iter()
            .flat_map(|&law| scenario.dx.iter().map(move |&dx| (law, dx)))
            .enumerate()
            .map(|(i, (law, dx))| (i, law, dx))
            .collect();
        let results: Vec<(DelayRow, Option<WaveDump>)> = pool.install(|| {
            points.par_iter().map(|&(i, law, dx)| delay_point(scenario, i, channel, law, dx)).collect()
        });
        let mut rows = Vec::with_capacity(results.len());
        for (row, dump) in results {
            counts.add(row.status);
            rows.push(row);
            dumps.extend(dump);
        }
        tables.push(Table::Delay { channel, rows });
    }
    Ok(RunResult { tables, dumps, counts })
}
