//! Gaussian packets: spectral amplitudes on uniform momentum grids and their
//! closed-form free envelopes for the quadratic and linear dispersion laws.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Default number of momentum samples before any window-driven increase.
pub const DEFAULT_K_POINTS: usize = 4096;
/// Half-width of the default momentum grid in units of Δk.
pub const K_SPAN_SIGMAS: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum Dispersion {
    /// E = k²/2 (unit mass).
    Quadratic,
    /// E = c·k: envelopes translate rigidly at speed c.
    Linear { c: f64 },
}

impl Dispersion {
    pub fn energy(&self, k: f64) -> f64 {
        match *self {
            Self::Quadratic => 0.5 * k * k,
            Self::Linear { c } => c * k,
        }
    }

    pub fn group_velocity(&self, k: f64) -> f64 {
        match *self {
            Self::Quadratic => k,
            Self::Linear { c } => c,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Quadratic => "quadratic",
            Self::Linear { .. } => "linear",
        }
    }
}

/// Mean momentum, coordinate width, launch position and dispersion law of a
/// Gaussian probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacketSpec {
    pub p: f64,
    pub dx: f64,
    pub x_i: f64,
    pub dispersion: Dispersion,
}

impl PacketSpec {
    pub fn new(p: f64, dx: f64, x_i: f64, dispersion: Dispersion) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return domain(format!("mean momentum must be positive, got {p}"));
        }
        if !(dx > 0.0 && dx.is_finite()) {
            return domain(format!("packet width must be positive, got {dx}"));
        }
        if !x_i.is_finite() {
            return domain("launch position must be finite");
        }
        if let Dispersion::Linear { c } = dispersion {
            if !(c > 0.0 && c.is_finite()) {
                return domain(format!("linear dispersion needs c > 0, got {c}"));
            }
        }
        Ok(Self { p, dx, x_i, dispersion })
    }

    /// Launches the packet at x_I = −K·Δx.
    pub fn separated(p: f64, dx: f64, separation: f64, dispersion: Dispersion) -> Result<Self> {
        Self::new(p, dx, -separation * dx, dispersion)
    }

    /// Momentum width, Δk = 2/Δx.
    pub fn dk(&self) -> f64 {
        2.0 / self.dx
    }

    /// Speed of the free centre of mass.
    pub fn velocity(&self) -> f64 {
        self.dispersion.group_velocity(self.p)
    }

    pub fn energy(&self) -> f64 {
        self.dispersion.energy(self.p)
    }

    /// Free centre of mass at time t.
    pub fn free_center(&self, t: f64) -> f64 {
        self.x_i + self.velocity() * t
    }

    /// Checks |x_I| ≥ K·Δx with the packet launched from the left.
    pub fn check_separation(&self, separation: f64) -> Result<()> {
        if self.x_i >= 0.0 || self.x_i.abs() < separation * self.dx * (1.0 - 1e-12) {
            return domain(format!(
                "launch position {} is closer than {separation}·Δx = {} to the scatterer",
                self.x_i,
                separation * self.dx
            ));
        }
        Ok(())
    }

    /// A(k, p) = 2^{−1/4} π^{−3/4} Δk^{−1/2} exp[−(k−p)²/Δk² − i(k−p)x_I].
    pub fn amplitude(&self, k: f64) -> Complex64 {
        let dk = self.dk();
        let q = k - self.p;
        let norm = 2f64.powf(-0.25) * PI.powf(-0.75) / dk.sqrt();
        norm * Complex64::new(-q * q / (dk * dk), -q * self.x_i).exp()
    }
}

/// Uniform grid including both endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl UniformGrid {
    pub fn new(min: f64, max: f64, n: usize) -> Result<Self> {
        if !(max > min) || n < 3 {
            return Err(Error::GridTooNarrow(format!("need max > min and n >= 3, got [{min}, {max}] x {n}")));
        }
        Ok(Self { min, max, n })
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.n - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        self.min + i as f64 * self.step()
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.point(i))
    }

    /// Trapezoid weight of sample i.
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.n {
            0.5 * self.step()
        } else {
            self.step()
        }
    }

    /// Same span, `factor` times as many intervals.
    pub fn refined(&self, factor: usize) -> Self {
        Self { n: (self.n - 1) * factor + 1, ..*self }
    }
}

pub type MomentumGrid = UniformGrid;

/// Trapezoid rule over a uniform grid.
pub fn trapezoid(grid: &UniformGrid, values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().enumerate().map(|(i, v)| grid.weight(i) * v).sum()
}

/// p ± 8Δk with the default sample count.
pub fn default_momentum_grid(spec: &PacketSpec) -> MomentumGrid {
    let half = K_SPAN_SIGMAS * spec.dk();
    UniformGrid { min: spec.p - half, max: spec.p + half, n: DEFAULT_K_POINTS }
}

/// Packet amplitude sampled on a momentum grid. Immutable once built.
#[derive(Debug, Clone)]
pub struct SpectralAmplitude {
    spec: PacketSpec,
    grid: MomentumGrid,
    values: Vec<Complex64>,
}

impl SpectralAmplitude {
    pub fn spec(&self) -> &PacketSpec {
        &self.spec
    }

    pub fn grid(&self) -> &MomentumGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, Complex64)> + '_ {
        self.grid.points().zip(self.values.iter().copied())
    }

    /// ∫|A|²dk.
    pub fn spectral_mass(&self) -> f64 {
        trapezoid(&self.grid, self.values.iter().map(|a| a.norm_sqr()))
    }

    /// Position-space norm of ψ = ∫A e^{ikx}dk, i.e. 2π∫|A|²dk. Equals 1 for
    /// a freshly built Gaussian.
    pub fn norm(&self) -> f64 {
        2.0 * PI * self.spectral_mass()
    }
}

/// Samples the Gaussian amplitude on `grid`, which must span at least p ± 8Δk.
pub fn gaussian_spectral(spec: &PacketSpec, grid: MomentumGrid) -> Result<SpectralAmplitude> {
    let half = K_SPAN_SIGMAS * spec.dk();
    let slack = 1e-9 * half;
    if grid.min > spec.p - half + slack || grid.max < spec.p + half - slack {
        return Err(Error::GridTooNarrow(format!(
            "momentum grid [{}, {}] does not span p ± 8Δk = [{}, {}]",
            grid.min,
            grid.max,
            spec.p - half,
            spec.p + half
        )));
    }
    let values: Vec<Complex64> = grid.points().map(|k| spec.amplitude(k)).collect();
    let peak = values.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let edge = values[0].norm().max(values[values.len() - 1].norm());
    if edge >= 1e-12 * peak {
        return Err(Error::GridTooNarrow(format!("endpoint amplitude {edge:e} not negligible vs peak {peak:e}")));
    }
    Ok(SpectralAmplitude { spec: *spec, grid, values })
}

/// `amplitude · exp(−(x − center)²/sigma_sq)` with Re(1/sigma_sq) > 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianEnvelope {
    pub center: f64,
    pub sigma_sq: Complex64,
    pub amplitude: Complex64,
}

impl GaussianEnvelope {
    /// Real envelope normalised so that ∫|G|² = 1, with |G|² ∝ exp(−2x²/width²).
    pub fn real(center: f64, width: f64) -> Self {
        Self {
            center,
            sigma_sq: Complex64::new(width * width, 0.0),
            amplitude: Complex64::new((2.0 / (PI * width * width)).powf(0.25), 0.0),
        }
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        let d = x - self.center;
        self.amplitude * (-(d * d) / self.sigma_sq).exp()
    }

    pub fn derivative(&self, x: f64) -> Complex64 {
        let d = x - self.center;
        -2.0 * d / self.sigma_sq * self.eval(x)
    }

    /// Width of |G|: the Δ with |G| ∝ exp(−(x − c)²/Δ²).
    pub fn modulus_width(&self) -> f64 {
        (1.0 / self.sigma_sq.inv().re).sqrt()
    }
}

/// Free envelope G₀(·, t): ψ₀(x, t) = e^{ipx − iE_p t} G₀(x, t).
pub fn envelope_at(spec: &PacketSpec, t: f64) -> GaussianEnvelope {
    match spec.dispersion {
        Dispersion::Quadratic => {
            let sigma_sq = Complex64::new(spec.dx * spec.dx, 2.0 * t);
            let norm = 2f64.powf(-0.25) * PI.powf(-0.75) / spec.dk().sqrt();
            GaussianEnvelope { center: spec.free_center(t), sigma_sq, amplitude: norm * 2.0 * PI.sqrt() / sigma_sq.sqrt() }
        }
        Dispersion::Linear { .. } => GaussianEnvelope::real(spec.free_center(t), spec.dx),
    }
}

/// G₀(x, t).
pub fn free_envelope(spec: &PacketSpec, x: f64, t: f64) -> Result<Complex64> {
    if t < 0.0 {
        return domain(format!("time must be non-negative, got {t}"));
    }
    Ok(envelope_at(spec, t).eval(x))
}

/// ψ₀(x, t) = e^{ipx − iE_p t} G₀(x, t).
pub fn free_wave(spec: &PacketSpec, x: f64, t: f64) -> Result<Complex64> {
    let phase = (I * (spec.p * x - spec.energy() * t)).exp();
    Ok(phase * free_envelope(spec, x, t)?)
}

/// Δx_t = (Δx² + Δk²t²)^{1/2} for the quadratic law; Δx for the linear law.
pub fn spread_width(spec: &PacketSpec, t: f64) -> Result<f64> {
    if t < 0.0 {
        return domain(format!("time must be non-negative, got {t}"));
    }
    Ok(match spec.dispersion {
        Dispersion::Quadratic => (spec.dx * spec.dx + (spec.dk() * t).powi(2)).sqrt(),
        Dispersion::Linear { .. } => spec.dx,
    })
}

/// Root-mean-square width of |ψ₀|², which is Δx_t/2.
pub fn density_rms(spec: &PacketSpec, t: f64) -> Result<f64> {
    Ok(spread_width(spec, t)? / 2.0)
}
