//! Larmor clock with an infinitely heavy Gaussian pointer: final pointer
//! states, mean readings, complex times and their zero-range limits.
//!
//! The pointer couples through V → V + λΘ_[a,b], so the final state is
//! Φ(f) = (2π)⁻¹∫Ĝ(λ)T(p, U + λ)e^{iλf}dλ, with Ĝ the Fourier transform of
//! the initial pointer state G(f) = C exp(−f²/Δf²).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::amplitudes::{larmor_distribution_zero_range, log_derivative, transmission_rectangular, PotentialSpec};
use crate::error::{domain, Error, Result};
use crate::propagator::half_line_gaussian;
use crate::wavepackets::{trapezoid, UniformGrid};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Half-width of the λ grid in units of 1/Δf; Ĝ has fallen to e^{−36} there.
pub const LAMBDA_SPAN: f64 = 12.0;
const MIN_LAMBDA_POINTS: usize = 2049;
const MIN_F_POINTS: usize = 1025;
const F_EDGE_TOLERANCE: f64 = 1e-12;
const MAX_WIDENINGS: usize = 10;
const RESEED: usize = 256;

/// Initial pointer state G(f) = C exp(−f²/Δf²), C = (2/(πΔf²))^{1/4}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointerSpec {
    pub df: f64,
}

impl PointerSpec {
    pub fn new(df: f64) -> Result<Self> {
        if !(df > 0.0 && df.is_finite()) {
            return domain(format!("pointer width must be positive, got {df}"));
        }
        Ok(Self { df })
    }

    fn norm_const(&self) -> f64 {
        (2.0 / (PI * self.df * self.df)).powf(0.25)
    }

    pub fn amplitude(&self, f: f64) -> f64 {
        self.norm_const() * (-(f * f) / (self.df * self.df)).exp()
    }

    /// Ĝ(λ) = ∫G(f)e^{−iλf}df = C√π Δf exp(−λ²Δf²/4).
    pub fn spectrum(&self, lambda: f64) -> f64 {
        self.norm_const() * PI.sqrt() * self.df * (-lambda * lambda * self.df * self.df / 4.0).exp()
    }
}

/// First moment of a complex duration distribution (time units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexTime {
    pub value: Complex64,
}

/// Final pointer amplitude Φ(f) on a uniform grid.
#[derive(Debug, Clone)]
pub struct PointerState {
    pub grid: UniformGrid,
    pub values: Vec<Complex64>,
}

impl PointerState {
    /// ∫|Φ|²df, the transmitted weight seen by the clock.
    pub fn norm(&self) -> f64 {
        trapezoid(&self.grid, self.values.iter().map(|v| v.norm_sqr()))
    }

    pub fn mean(&self) -> Result<f64> {
        let norm = self.norm();
        if !(norm > 1e-300) {
            return Err(Error::VanishingNorm(norm));
        }
        Ok(trapezoid(&self.grid, self.grid.points().zip(&self.values).map(|(f, v)| f * v.norm_sqr())) / norm)
    }
}

fn check_scale(scale: usize) -> Result<()> {
    if scale == 0 {
        return domain("grid scale must be at least 1");
    }
    Ok(())
}

fn rectangular_parts(potential: &PotentialSpec) -> Result<(f64, f64, f64)> {
    match *potential {
        PotentialSpec::Rectangular { height, left, right } => Ok((height, left, right)),
        _ => Err(Error::Unsupported("Larmor clock over a zero-width region")),
    }
}

/// T(p, U + λ) for the rectangular region.
pub fn shifted_transmission(p: f64, potential: &PotentialSpec, lambda: f64) -> Result<Complex64> {
    let (u, a, b) = rectangular_parts(potential)?;
    transmission_rectangular(p, u + lambda, a, b)
}

fn lambda_grid(pointer: &PointerSpec, f_extent: f64, scale: usize) -> Result<UniformGrid> {
    check_scale(scale)?;
    let span = LAMBDA_SPAN / pointer.df;
    // period 2π/dλ of the λ-sum must exceed twice the f extent
    let dl_max = PI / (2.0 * f_extent.max(pointer.df));
    let n = ((((2.0 * span / dl_max).ceil() as usize) + 1).max(MIN_LAMBDA_POINTS) - 1) * scale + 1;
    let grid = UniformGrid::new(-span, span, n)?;
    let edge = pointer.spectrum(span) / pointer.spectrum(0.0);
    if edge >= 1e-12 {
        return Err(Error::GridTooNarrow(format!("pointer spectrum at the λ-grid edge is {edge:e} of peak")));
    }
    Ok(grid)
}

/// Φ(f) on `f_grid` from the λ-representation, by trapezoid in λ. `scale`
/// multiplies the number of λ intervals.
pub fn pointer_final_state(
    pointer: &PointerSpec,
    p: f64,
    potential: &PotentialSpec,
    f_grid: &UniformGrid,
    scale: usize,
) -> Result<PointerState> {
    if !(p > 0.0) {
        return domain(format!("momentum must be positive, got {p}"));
    }
    let extent = f_grid.min.abs().max(f_grid.max.abs());
    let lg = lambda_grid(pointer, extent, scale)?;
    let weights: Vec<Complex64> = lg
        .points()
        .enumerate()
        .map(|(j, l)| Ok(lg.weight(j) * pointer.spectrum(l) * shifted_transmission(p, potential, l)? / (2.0 * PI)))
        .collect::<Result<_>>()?;
    let dl = lg.step();
    let values = f_grid
        .points()
        .map(|f| {
            let step = Complex64::from_polar(1.0, dl * f);
            let mut phase = Complex64::from_polar(1.0, lg.min * f);
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, w) in weights.iter().enumerate() {
                if j % RESEED == 0 {
                    phase = Complex64::from_polar(1.0, lg.point(j) * f);
                }
                acc += w * phase;
                phase *= step;
            }
            acc
        })
        .collect();
    Ok(PointerState { grid: *f_grid, values })
}

/// Φ(f) on an f window wide enough that |Φ|² at its edges is below 1e-12 of
/// the peak. `scale` multiplies the number of f and λ intervals.
pub fn pointer_state_auto(pointer: &PointerSpec, p: f64, potential: &PotentialSpec, scale: usize) -> Result<PointerState> {
    check_scale(scale)?;
    let (_, a, b) = rectangular_parts(potential)?;
    let tau0 = (b - a) / p;
    let guess = complex_time(p, potential).map(|c| c.value).unwrap_or(Complex64::new(tau0, 0.0));
    let center = guess.re;
    let mut half = 8.0 * pointer.df + 10.0 * (tau0 + guess.norm());
    let mut last = f64::NAN;
    for _ in 0..MAX_WIDENINGS {
        let df = (pointer.df / 8.0).min(half / 64.0);
        let n = (((2.0 * half / df).ceil() as usize + 1).max(MIN_F_POINTS) - 1) * scale + 1;
        let grid = UniformGrid::new(center - half, center + half, n)?;
        let state = pointer_final_state(pointer, p, potential, &grid, scale)?;
        let d: Vec<f64> = state.values.iter().map(|v| v.norm_sqr()).collect();
        let peak = d.iter().copied().fold(0.0, f64::max);
        last = d[0].max(d[d.len() - 1]) / peak;
        if last <= F_EDGE_TOLERANCE {
            return Ok(state);
        }
        half *= 1.5;
    }
    Err(Error::GridTooNarrow(format!("pointer edge density still {last:e} of peak")))
}

/// ⟨f⟩ = ∫f|Φ(f)|²df / ∫|Φ(f)|²df.
pub fn mean_pointer_reading(pointer: &PointerSpec, p: f64, potential: &PotentialSpec, scale: usize) -> Result<f64> {
    pointer_state_auto(pointer, p, potential, scale)?.mean()
}

/// ⟨f⟩ evaluated in λ-space: −∫Ĝ²|T|²∂_λ arg T dλ / ∫Ĝ²|T|²dλ.
pub fn mean_pointer_reading_spectral(
    pointer: &PointerSpec,
    p: f64,
    potential: &PotentialSpec,
    scale: usize,
) -> Result<f64> {
    let lg = lambda_grid(pointer, pointer.df, scale)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (j, l) in lg.points().enumerate() {
        let w = lg.weight(j) * pointer.spectrum(l).powi(2) * shifted_transmission(p, potential, l)?.norm_sqr();
        if w == 0.0 {
            continue;
        }
        let slope = log_derivative(|x| shifted_transmission(p, potential, x), l)?.im;
        num -= w * slope;
        den += w;
    }
    if !(den > 1e-300) {
        return Err(Error::VanishingNorm(den));
    }
    Ok(num / den)
}

/// ∫|Φ|²df = (2π)⁻¹∫Ĝ(λ)²|T(p, U + λ)|²dλ by Parseval.
pub fn transmitted_weight(pointer: &PointerSpec, p: f64, potential: &PotentialSpec, scale: usize) -> Result<f64> {
    let lg = lambda_grid(pointer, pointer.df, scale)?;
    let vals: Vec<f64> = lg
        .points()
        .map(|l| Ok(pointer.spectrum(l).powi(2) * shifted_transmission(p, potential, l)?.norm_sqr()))
        .collect::<Result<_>>()?;
    Ok(trapezoid(&lg, vals) / (2.0 * PI))
}

/// τ̄ = i∂_λ ln T(p, U + λ) at λ = 0.
pub fn complex_time(p: f64, potential: &PotentialSpec) -> Result<ComplexTime> {
    let t0 = shifted_transmission(p, potential, 0.0)?;
    if t0.norm() < 1e-300 {
        return Err(Error::AmplitudeUnderflow(t0.norm()));
    }
    let (u, _, _) = rectangular_parts(potential)?;
    let d = log_derivative(|x| shifted_transmission(p, potential, x - u), u)?;
    Ok(ComplexTime { value: I * d })
}

/// 1/s for the analytic narrow-region A_T(p, τ) = τ₀⁻¹e^{−iΩτ/w}e^{−τ/τ₀}.
pub fn larmor_moment_zero_range(p: f64, omega: f64, width: f64) -> Result<ComplexTime> {
    Ok(ComplexTime { value: larmor_distribution_zero_range(p, omega, width)?.mean() })
}

/// Φ(f) = ∫₀^∞G(f − τ)A_T(p, τ)dτ with the analytic narrow-region A_T, in
/// closed form.
pub fn pointer_state_zero_range(pointer: &PointerSpec, p: f64, omega: f64, width: f64, f: f64) -> Result<Complex64> {
    let dist = larmor_distribution_zero_range(p, omega, width)?;
    let sigma_sq = Complex64::new(pointer.df * pointer.df, 0.0);
    Ok(dist.prefactor * pointer.norm_const() * half_line_gaussian(f, dist.complex_decay, sigma_sq))
}
