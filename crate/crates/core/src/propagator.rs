//! Spectral synthesis of scattered packets on spatial windows.
//!
//! The k-space trapezoid sum ψ(x) = Σ_j w_j F(k_j) e^{ik_j x} is evaluated on
//! every window point at once with an inverse FFT, which ties the spatial step
//! to the momentum step through dk·dx·N = 2π.

use std::f64::consts::PI;

use errorfunctions::ComplexErrorFunctions;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::amplitudes::{PotentialSpec, ShiftDistribution};
use crate::error::{domain, Error, Result};
use crate::wavepackets::{
    envelope_at, free_wave, gaussian_spectral, spread_width, trapezoid, Dispersion, GaussianEnvelope, MomentumGrid,
    PacketSpec, SpectralAmplitude, UniformGrid,
};

const I: Complex64 = Complex64::new(0.0, 1.0);

pub type SpatialGrid = UniformGrid;

/// Fraction of the channel norm allowed on the incident side of the scatterer.
pub const COMPLETION_TOLERANCE: f64 = 1e-8;
/// Largest window-edge density, relative to the peak, accepted without widening.
pub const EDGE_TOLERANCE: f64 = 1e-13;
/// Window half-width in units of Δx_t, before the tail allowance.
pub const WINDOW_WIDTHS: f64 = 6.0;
/// Minimum number of FFT points.
pub const MIN_POINTS: usize = 8192;
const MAX_WIDENINGS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Channel {
    Transmitted,
    Reflected,
    Radial,
    Free,
}

impl Channel {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Transmitted => "transmitted",
            Self::Reflected => "reflected",
            Self::Radial => "radial",
            Self::Free => "free",
        }
    }
}

/// Momentum grid and spatial window of one synthesis.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisPlan {
    pub momentum: MomentumGrid,
    pub window: SpatialGrid,
    /// First point of the FFT's spatial period (in the channel's own frame).
    origin: f64,
    fft_len: usize,
    /// Index of the first window point within the period.
    offset: usize,
    /// True if the lower window edge was clipped (radial grids at r = 0).
    clipped_low: bool,
}

/// ψ on a uniform spatial window at time t.
#[derive(Debug, Clone)]
pub struct SpatialWave {
    pub grid: SpatialGrid,
    pub values: Vec<Complex64>,
    pub t: f64,
    pub channel: Channel,
    /// Fraction of the channel norm still on the incident side of the scatterer.
    pub leak: f64,
    /// 2π∫|amplitude|²|A|²dk for this channel.
    pub channel_norm: f64,
}

impl SpatialWave {
    pub fn density(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().map(|v| v.norm_sqr())
    }

    /// ∫|ψ|²dx over the window.
    pub fn norm(&self) -> f64 {
        trapezoid(&self.grid, self.density())
    }

    pub fn completed(&self) -> bool {
        self.leak < COMPLETION_TOLERANCE
    }
}

/// Time at which the freely moving centre of mass sits K·Δx_t past the
/// origin: 2pΔxK/(p² − K²Δk²) for the quadratic law, (KΔx − x_I)/c for the
/// linear law.
pub fn completed_event_time(spec: &PacketSpec, separation: f64) -> Result<f64> {
    if !(separation > 0.0) {
        return domain(format!("separation factor must be positive, got {separation}"));
    }
    match spec.dispersion {
        Dispersion::Quadratic => {
            let (p, dk) = (spec.p, spec.dk());
            if p <= separation * dk {
                return domain(format!(
                    "t(p, dk, K) needs p > K*dk, got p = {p}, K*dk = {} (p*dx must exceed 2K)",
                    separation * dk
                ));
            }
            Ok(2.0 * p * spec.dx * separation / (p * p - separation * separation * dk * dk))
        }
        Dispersion::Linear { c } => Ok(((separation * spec.dx - spec.x_i) / c).max(0.0)),
    }
}

/// Completed-event time with room for the potential's exponential tail. For
/// the linear law the tail is added as extra flight time; the quadratic-law
/// time is left at the closed-form value, whose spreading already exceeds the
/// tail for pΔx > 2K.
pub fn event_time(spec: &PacketSpec, separation: f64, potential: &PotentialSpec) -> Result<f64> {
    let t = completed_event_time(spec, separation)?;
    Ok(match spec.dispersion {
        Dispersion::Quadratic => t,
        Dispersion::Linear { c } => t + (potential.tail_length() + potential.width()) / c,
    })
}

fn window_center(spec: &PacketSpec, channel: Channel, potential: Option<&PotentialSpec>, t: f64) -> f64 {
    let free = spec.free_center(t);
    match channel {
        Channel::Transmitted | Channel::Free | Channel::Radial => free,
        Channel::Reflected => -free + 2.0 * potential.map_or(0.0, |v| v.edges().0),
    }
}

/// Plans a synthesis for `channel` at time t. `scale` multiplies the point
/// count; both dk and dx shrink by √scale.
pub fn plan_synthesis(
    spec: &PacketSpec,
    channel: Channel,
    potential: Option<&PotentialSpec>,
    t: f64,
    scale: usize,
) -> Result<SynthesisPlan> {
    let tail = potential.map_or(0.0, |v| v.tail_length() + v.width());
    let half = WINDOW_WIDTHS * spread_width(spec, t)? + tail;
    plan_with_half_width(spec, channel, potential, t, scale, half)
}

fn plan_with_half_width(
    spec: &PacketSpec,
    channel: Channel,
    potential: Option<&PotentialSpec>,
    t: f64,
    scale: usize,
    half: f64,
) -> Result<SynthesisPlan> {
    if scale == 0 {
        return domain("grid scale must be at least 1");
    }
    let center = window_center(spec, channel, potential, t);
    let (mut lo, hi) = (center - half, center + half);
    let clipped_low = channel == Channel::Radial && lo < 0.0;
    if clipped_low {
        if hi <= 0.0 {
            return domain(format!("radial packet still converging at t = {t}: window ends at r = {hi}"));
        }
        lo = 0.0;
    }
    let s = scale as f64;
    let period0 = 4.0 * half;
    let dx_max = spec.dx / 6.0;
    let base = ((period0 / dx_max).ceil() as usize).max(MIN_POINTS).next_power_of_two();
    let n = base * scale;
    let period = period0 * s.sqrt();
    let dx = period / n as f64;
    let dk = 2.0 * PI / period;

    // Channel frame: reflected packets are synthesised at y = −x.
    let (flo, fhi) = match channel {
        Channel::Reflected => (-hi, -lo),
        _ => (lo, hi),
    };
    let origin = 0.5 * (flo + fhi) - 0.5 * period;
    let first = ((flo - origin) / dx).ceil() as usize;
    let last = (((fhi - origin) / dx).floor() as usize).min(n - 1);
    let k_min = spec.p - (n / 2) as f64 * dk;
    let momentum = UniformGrid::new(k_min, k_min + (n - 1) as f64 * dk, n)?;
    let (a, b) = (origin + first as f64 * dx, origin + last as f64 * dx);
    let window = match channel {
        Channel::Reflected => UniformGrid::new(-b, -a, last - first + 1)?,
        _ => UniformGrid::new(a, b, last - first + 1)?,
    };
    Ok(SynthesisPlan { momentum, window, origin, fft_len: n, offset: first, clipped_low })
}

/// Amplitude multiplying A(k) in each channel. The rectangular limit at
/// k = 0 (T = 0, R = −1) is filled in by hand.
fn channel_amplitude(channel: Channel, potential: Option<&PotentialSpec>, k: f64) -> Result<Complex64> {
    let Some(v) = potential else { return Ok(Complex64::new(1.0, 0.0)) };
    if k == 0.0 {
        if let PotentialSpec::Rectangular { height, .. } = v {
            if *height != 0.0 {
                return Ok(match channel {
                    Channel::Reflected => Complex64::new(-1.0, 0.0),
                    _ => Complex64::new(0.0, 0.0),
                });
            }
        }
    }
    match channel {
        Channel::Free => Ok(Complex64::new(1.0, 0.0)),
        Channel::Transmitted => v.transmission(k),
        Channel::Reflected => v.reflection(k),
        Channel::Radial => v.s_matrix(k),
    }
}

/// Σ_j dk·c_j·A_j·e^{ik_j y − iE_j t} at the plan's window points (channel frame).
fn fft_sum(plan: &SynthesisPlan, spectral: &SpectralAmplitude, coeff: &[Complex64], t: f64) -> Vec<Complex64> {
    let grid = plan.momentum;
    let (dk, n) = (grid.step(), plan.fft_len);
    let law = spectral.spec().dispersion;
    let mut buf: Vec<Complex64> = spectral
        .iter()
        .zip(coeff)
        .enumerate()
        .map(|(j, ((k, a), c))| {
            let phase = -law.energy(k) * t + j as f64 * dk * plan.origin;
            c * a * Complex64::from_polar(dk, phase)
        })
        .collect();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let dx = 2.0 * PI / (dk * n as f64);
    (0..plan.window.n)
        .map(|m| {
            let idx = plan.offset + m;
            let y = plan.origin + idx as f64 * dx;
            buf[idx] * Complex64::from_polar(1.0, grid.min * y)
        })
        .collect()
}

fn check_plan(spectral: &SpectralAmplitude, plan: &SynthesisPlan) -> Result<()> {
    if *spectral.grid() != plan.momentum {
        return Err(Error::GridTooNarrow("spectral amplitude was not built on the plan's momentum grid".into()));
    }
    Ok(())
}

/// Fraction of `channel_norm` missing from the physical side of the window.
fn leak_fraction(grid: &SpatialGrid, values: &[Complex64], physical: impl Fn(f64) -> bool, channel_norm: f64) -> f64 {
    let mass = trapezoid(grid, grid.points().zip(values).map(|(x, v)| if physical(x) { v.norm_sqr() } else { 0.0 }));
    if channel_norm <= 0.0 {
        return 0.0;
    }
    (1.0 - mass / channel_norm).max(0.0)
}

fn synthesize(
    spectral: &SpectralAmplitude,
    potential: Option<&PotentialSpec>,
    channel: Channel,
    t: f64,
    plan: &SynthesisPlan,
) -> Result<SpatialWave> {
    check_plan(spectral, plan)?;
    if t < 0.0 {
        return domain(format!("time must be non-negative, got {t}"));
    }
    let coeff: Vec<Complex64> = spectral
        .grid()
        .points()
        .map(|k| channel_amplitude(channel, potential, k))
        .collect::<Result<_>>()?;
    let channel_norm = 2.0
        * PI
        * trapezoid(spectral.grid(), spectral.values().iter().zip(&coeff).map(|(a, c)| (a * c).norm_sqr()));
    let mut values = fft_sum(plan, spectral, &coeff, t);
    let (a, b) = potential.map_or((0.0, 0.0), |v| v.edges());
    let leak = match channel {
        Channel::Free => 0.0,
        Channel::Transmitted => leak_fraction(&plan.window, &values, |x| x >= b, channel_norm),
        Channel::Reflected => {
            values.reverse();
            leak_fraction(&plan.window, &values, |x| x <= a, channel_norm)
        }
        Channel::Radial => {
            let leak = leak_fraction(&plan.window, &values, |r| r >= 0.0, channel_norm);
            // incoming part ∫A e^{−ikr − iE_k t}dk = ψ₀(−r, t), in closed form
            let spec = spectral.spec();
            for (r, v) in plan.window.points().zip(values.iter_mut()) {
                *v += free_wave(spec, -r, t)?;
            }
            leak
        }
    };
    Ok(SpatialWave { grid: plan.window, values, t, channel, leak, channel_norm })
}

pub fn synthesize_transmitted(
    spectral: &SpectralAmplitude,
    potential: &PotentialSpec,
    t: f64,
    plan: &SynthesisPlan,
) -> Result<SpatialWave> {
    synthesize(spectral, Some(potential), Channel::Transmitted, t, plan)
}

pub fn synthesize_reflected(
    spectral: &SpectralAmplitude,
    potential: &PotentialSpec,
    t: f64,
    plan: &SynthesisPlan,
) -> Result<SpatialWave> {
    synthesize(spectral, Some(potential), Channel::Reflected, t, plan)
}

/// Radial wave ∫A(k)[e^{−ikr} + S(k)e^{ikr}]e^{−iE_k t}dk on r ≥ 0. The
/// packet is launched at r_I = −x_I.
pub fn synthesize_radial(
    spectral: &SpectralAmplitude,
    potential: &PotentialSpec,
    t: f64,
    plan: &SynthesisPlan,
) -> Result<SpatialWave> {
    synthesize(spectral, Some(potential), Channel::Radial, t, plan)
}

pub fn synthesize_free(spectral: &SpectralAmplitude, t: f64, plan: &SynthesisPlan) -> Result<SpatialWave> {
    synthesize(spectral, None, Channel::Free, t, plan)
}

fn edge_ratio(wave: &SpatialWave, skip_low: bool) -> f64 {
    let d: Vec<f64> = wave.density().collect();
    let peak = d.iter().copied().fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    let lo = if skip_low { 0.0 } else { d[0] };
    lo.max(d[d.len() - 1]) / peak
}

/// Plans, builds the spectral amplitude and synthesises, widening the window
/// while edge density exceeds [`EDGE_TOLERANCE`] of the peak.
pub fn propagate(
    spec: &PacketSpec,
    channel: Channel,
    potential: Option<&PotentialSpec>,
    t: f64,
    scale: usize,
) -> Result<(SpectralAmplitude, SpatialWave)> {
    if channel != Channel::Free && potential.is_none() {
        return domain(format!("{} channel needs a potential", channel.name()));
    }
    let tail = potential.map_or(0.0, |v| v.tail_length() + v.width());
    let mut half = WINDOW_WIDTHS * spread_width(spec, t)? + tail;
    let mut last_ratio = f64::NAN;
    for _ in 0..MAX_WIDENINGS {
        let plan = plan_with_half_width(spec, channel, potential, t, scale, half)?;
        let spectral = gaussian_spectral(spec, plan.momentum)?;
        let wave = synthesize(&spectral, potential, channel, t, &plan)?;
        last_ratio = edge_ratio(&wave, plan.clipped_low);
        if last_ratio <= EDGE_TOLERANCE {
            return Ok((spectral, wave));
        }
        half *= 1.5;
    }
    Err(Error::GridTooNarrow(format!("window edge density still {last_ratio:e} of peak after widening")))
}

/// ∫₀^∞ e^{−βu} e^{−(u−z)²/σ²} du in closed form via erfcx, choosing the
/// branch that keeps every factor bounded.
pub(crate) fn half_line_gaussian(z: f64, beta: Complex64, sigma_sq: Complex64) -> Complex64 {
    let a = sigma_sq.inv().sqrt();
    let s0 = beta / (2.0 * a) - a * z;
    let pref = PI.sqrt() / (2.0 * a);
    let gauss = (-(z * z) / sigma_sq).exp();
    if s0.re >= 0.0 {
        pref * gauss * s0.erfcx()
    } else {
        pref * (2.0 * (-beta * z + beta * beta * sigma_sq / 4.0).exp() - gauss * (-s0).erfcx())
    }
}

/// ∫G(x − x′)η(x′)dx′ for a Gaussian envelope and a shift distribution.
pub fn convolve_shift(eta: &ShiftDistribution, envelope: &GaussianEnvelope, x: f64) -> Complex64 {
    let mut out = eta.delta_weight * envelope.eval(x);
    if let Some(b) = eta.branch {
        let beta = b.rate(eta.momentum);
        let z = x - envelope.center;
        let j = match b.side {
            crate::amplitudes::BranchSide::PositiveAxis => half_line_gaussian(z, beta, envelope.sigma_sq),
            crate::amplitudes::BranchSide::NegativeAxis => half_line_gaussian(-z, beta, envelope.sigma_sq),
        };
        out += b.amplitude * envelope.amplitude * j;
    }
    out
}

/// e^{ipx − iE_p t}∫G₀(x − x′, t)η(x′, p)dx′: the x-space form of a channel
/// whose outgoing wave is e^{ikx}.
pub fn convolution_wave(spec: &PacketSpec, eta: &ShiftDistribution, x: f64, t: f64) -> Complex64 {
    let env = envelope_at(spec, t);
    (I * (spec.p * x - spec.energy() * t)).exp() * convolve_shift(eta, &env, x)
}

/// Mirrored form for reflection: e^{−ipx − iE_p t}∫G₀(−x − x′, t)η_R(x′, p)dx′.
pub fn convolution_wave_reflected(spec: &PacketSpec, eta: &ShiftDistribution, x: f64, t: f64) -> Complex64 {
    let env = envelope_at(spec, t);
    (I * (-spec.p * x - spec.energy() * t)).exp() * convolve_shift(eta, &env, -x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplitudes::{shift_distribution_radial, shift_distribution_reflection, shift_distribution_transmission};
    use approx::assert_abs_diff_eq;

    fn quad(p: f64, dx: f64, k: f64) -> PacketSpec {
        PacketSpec::separated(p, dx, k, Dispersion::Quadratic).unwrap()
    }

    fn lin(p: f64, dx: f64, x_i: f64) -> PacketSpec {
        PacketSpec::new(p, dx, x_i, Dispersion::Linear { c: 1.0 }).unwrap()
    }

    /// Direct O(n_k) trapezoid sum at one point, independent of the FFT path.
    fn direct_sum(s: &SpectralAmplitude, amp: impl Fn(f64) -> Complex64, x: f64, t: f64, sign: f64) -> Complex64 {
        let g = s.grid();
        let law = s.spec().dispersion;
        s.iter()
            .enumerate()
            .map(|(j, (k, a))| g.weight(j) * amp(k) * a * Complex64::from_polar(1.0, sign * k * x - law.energy(k) * t))
            .sum()
    }

    #[test]
    fn event_time_examples() {
        let t = completed_event_time(&quad(1.0, 50.0, 3.0), 3.0).unwrap();
        assert_abs_diff_eq!(t, 300.0 / 0.9856, epsilon = 1e-10);
        let err = completed_event_time(&quad(1.0, 5.0, 3.0), 3.0).unwrap_err();
        assert!(err.to_string().contains("p > K*dk"));
        // m Ω² t = 6mΩΔx/[1 − 36(mΩΔx)^−2] at p = Ω = 1
        for dx in [10.0, 40.0, 100.0] {
            let t = completed_event_time(&quad(1.0, dx, 3.0), 3.0).unwrap();
            assert_abs_diff_eq!(t, 6.0 * dx / (1.0 - 36.0 / (dx * dx)), epsilon = 1e-9 * t);
        }
    }

    #[test]
    fn event_time_puts_free_center_k_widths_past_origin() {
        let spec = quad(1.3, 12.0, 3.0);
        let t = completed_event_time(&spec, 3.0).unwrap();
        assert_abs_diff_eq!(spec.free_center(t), 3.0 * spread_width(&spec, t).unwrap(), epsilon = 1e-9);
    }

    #[test]
    fn free_synthesis_matches_envelope() {
        for spec in [quad(1.0, 4.0, 3.0), lin(1.0, 0.5, -10.0)] {
            let t = 25.0;
            let (_, wave) = propagate(&spec, Channel::Free, None, t, 1).unwrap();
            let w = spread_width(&spec, t).unwrap();
            let c = spec.free_center(t);
            let peak = wave.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
            for (x, v) in wave.grid.points().zip(&wave.values) {
                if (x - c).abs() <= 4.0 * w {
                    let exact = free_wave(&spec, x, t).unwrap();
                    assert!((v - exact).norm() < 1e-8 * peak, "{x}: {v} vs {exact}");
                }
            }
            assert_abs_diff_eq!(wave.norm(), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn fft_path_matches_direct_sum() {
        let spec = quad(1.0, 3.0, 3.0);
        let v = PotentialSpec::zero_range(0.7).unwrap();
        let t = 40.0;
        let plan = plan_synthesis(&spec, Channel::Transmitted, Some(&v), t, 1).unwrap();
        let s = gaussian_spectral(&spec, plan.momentum).unwrap();
        let wave = synthesize_transmitted(&s, &v, t, &plan).unwrap();
        let peak = wave.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for m in (0..wave.grid.n).step_by(997) {
            let x = wave.grid.point(m);
            let direct = direct_sum(&s, |k| v.transmission(k).unwrap(), x, t, 1.0);
            assert!((wave.values[m] - direct).norm() < 1e-11 * peak);
        }
        let other = gaussian_spectral(&spec, plan_synthesis(&spec, Channel::Transmitted, Some(&v), t, 2).unwrap().momentum).unwrap();
        assert!(matches!(synthesize_transmitted(&other, &v, t, &plan), Err(Error::GridTooNarrow(_))));
    }

    #[test]
    fn reflected_window_is_mirrored() {
        let spec = quad(1.0, 3.0, 3.0);
        let v = PotentialSpec::zero_range(0.7).unwrap();
        let t = 40.0;
        let (s, wave) = propagate(&spec, Channel::Reflected, Some(&v), t, 1).unwrap();
        let c = -(spec.x_i + t);
        assert!(wave.grid.min < c && c < wave.grid.max);
        let peak = wave.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for m in (0..wave.grid.n).step_by(1013) {
            let x = wave.grid.point(m);
            let direct = direct_sum(&s, |k| v.reflection(k).unwrap(), x, t, -1.0);
            assert!((wave.values[m] - direct).norm() < 1e-11 * peak);
        }
    }

    #[test]
    fn zero_strength_transmission_is_free() {
        let spec = quad(1.0, 10.0, 3.0);
        let v = PotentialSpec::zero_range(0.0).unwrap();
        let t = completed_event_time(&spec, 3.0).unwrap();
        let plan = plan_synthesis(&spec, Channel::Transmitted, Some(&v), t, 1).unwrap();
        let s = gaussian_spectral(&spec, plan.momentum).unwrap();
        let a = synthesize_transmitted(&s, &v, t, &plan).unwrap();
        let b = synthesize_free(&s, t, &plan).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).norm() < 1e-12);
        }
        let r = synthesize_reflected(&s, &v, t, &plan_synthesis(&spec, Channel::Reflected, Some(&v), t, 1).unwrap());
        assert!(r.unwrap().values.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn channel_norms_add_to_one() {
        let v = PotentialSpec::zero_range(1.0).unwrap();
        for spec in [quad(1.0, 50.0, 3.0), lin(1.0, 2.0, -6.0)] {
            let t = event_time(&spec, 3.0, &v).unwrap();
            let (_, tr) = propagate(&spec, Channel::Transmitted, Some(&v), t, 1).unwrap();
            let (s, re) = propagate(&spec, Channel::Reflected, Some(&v), t, 1).unwrap();
            assert!(tr.completed() && re.completed(), "leaks {} {}", tr.leak, re.leak);
            assert_abs_diff_eq!(tr.norm() + re.norm(), 1.0, epsilon = 1e-8);
            assert_abs_diff_eq!(tr.norm(), tr.channel_norm, epsilon = 1e-6 * tr.channel_norm);
            // independent k-space oracle for the transmitted norm
            let oracle = 2.0 * PI * trapezoid(s.grid(), s.iter().map(|(k, a)| v.transmission(k).unwrap().norm_sqr() * a.norm_sqr()));
            assert_abs_diff_eq!(tr.norm(), oracle, epsilon = 1e-6 * oracle);
        }
    }

    #[test]
    fn convolution_form_matches_synthesis() {
        for omega in [1.0, -0.6] {
            let v = PotentialSpec::zero_range(omega).unwrap();
            for spec in [quad(1.0, 20.0, 3.0), lin(1.0, 0.3, -20.0)] {
                let t = event_time(&spec, 3.0, &v).unwrap();
                for channel in [Channel::Transmitted, Channel::Reflected] {
                    let (_, wave) = propagate(&spec, channel, Some(&v), t, 1).unwrap();
                    let peak = wave.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
                    let w = spread_width(&spec, t).unwrap();
                    let c = window_center(&spec, channel, Some(&v), t);
                    for (x, z) in wave.grid.points().zip(&wave.values).step_by(7) {
                        if (x - c).abs() > 4.0 * w + v.tail_length() {
                            continue;
                        }
                        let conv = match channel {
                            Channel::Transmitted => convolution_wave(&spec, &shift_distribution_transmission(spec.p, omega), x, t),
                            _ => convolution_wave_reflected(&spec, &shift_distribution_reflection(spec.p, omega), x, t),
                        };
                        assert!((z - conv).norm() < 1e-7 * peak, "{channel:?} Ω={omega} x={x}: {z} vs {conv}");
                    }
                }
            }
        }
    }

    #[test]
    fn radial_convolution_and_norm() {
        for alpha in [1.0, -1.0, 0.2] {
            let v = PotentialSpec::radial(alpha).unwrap();
            let spec = quad(1.0, 15.0, 3.0);
            let t = completed_event_time(&spec, 3.0).unwrap();
            let (_, wave) = propagate(&spec, Channel::Radial, Some(&v), t, 1).unwrap();
            assert!(wave.completed());
            assert!(wave.grid.min >= 0.0);
            assert_abs_diff_eq!(wave.norm(), 1.0, epsilon = 1e-8);
            let eta = shift_distribution_radial(spec.p, alpha).unwrap();
            let peak = wave.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
            for (x, z) in wave.grid.points().zip(&wave.values).step_by(11) {
                let conv = convolution_wave(&spec, &eta, x, t) + free_wave(&spec, -x, t).unwrap();
                assert!((z - conv).norm() < 1e-7 * peak);
            }
        }
    }

    #[test]
    fn radial_wave_vanishes_at_origin_for_hard_wall_limit() {
        // Before completion the incoming and outgoing parts overlap; with |α|
        // huge S ≈ −1 and ψ(0) ≈ 0.
        let spec = quad(1.0, 2.0, 3.0);
        let v = PotentialSpec::radial(1e9).unwrap();
        let plan = plan_with_half_width(&spec, Channel::Radial, Some(&v), 6.0, 1, 40.0).unwrap();
        let s = gaussian_spectral(&spec, plan.momentum).unwrap();
        let wave = synthesize_radial(&s, &v, 6.0, &plan).unwrap();
        assert_eq!(wave.grid.min, plan.window.min);
        let at0 = direct_sum(&s, |k| 1.0 + v.s_matrix(k).unwrap(), 0.0, 6.0, 1.0);
        assert!(at0.norm() < 1e-8);
        let peak = wave.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(wave.values[0].norm() < 1e-3 * peak);
    }

    #[test]
    fn narrow_reflected_packet_has_exponential_profile() {
        let v = PotentialSpec::zero_range(1.0).unwrap();
        let spec = lin(1.0, 0.01, -50.0);
        let (_, wave) = propagate(&spec, Channel::Reflected, Some(&v), 100.0, 1).unwrap();
        let front = -(spec.x_i + 100.0);
        let d = |x: f64| {
            let m = ((x - wave.grid.min) / wave.grid.step()).round() as usize;
            wave.values[m].norm_sqr()
        };
        // |ψ_R|² ∝ Θ(x − x₀)·exp[−2Ω(x − x₀)] with x₀ = −(x_I + ct)
        let ratio = d(front + 3.0) / d(front + 2.0);
        assert_abs_diff_eq!(ratio.ln(), -2.0, epsilon = 1e-2);
        assert!(d(front - 0.5) < 1e-6 * d(front + 0.5));
    }

    #[test]
    fn grid_scale_refines_both_steps() {
        let spec = quad(1.0, 10.0, 3.0);
        let v = PotentialSpec::zero_range(1.0).unwrap();
        let a = plan_synthesis(&spec, Channel::Transmitted, Some(&v), 10.0, 1).unwrap();
        let b = plan_synthesis(&spec, Channel::Transmitted, Some(&v), 10.0, 2).unwrap();
        assert_abs_diff_eq!(a.momentum.step() / b.momentum.step(), 2f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(a.window.step() / b.window.step(), 2f64.sqrt(), epsilon = 1e-12);
        assert!(plan_synthesis(&spec, Channel::Transmitted, Some(&v), 10.0, 0).is_err());
    }

    #[test]
    fn incomplete_event_is_flagged() {
        let v = PotentialSpec::zero_range(1.0).unwrap();
        let spec = quad(1.0, 10.0, 3.0);
        let (_, wave) = propagate(&spec, Channel::Transmitted, Some(&v), 20.0, 1).unwrap();
        assert!(!wave.completed());
        assert!(wave.leak > 0.1);
    }
}
