//! Closed-form scattering amplitudes for zero-range, rectangular and radial
//! zero-range potentials, and the shift/duration distributions obtained by
//! Fourier transforming them.
//!
//! Units are natural throughout: ħ = 1 and the particle mass is 1, so the
//! energy of a plane wave is k²/2 and its velocity is k.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Relative step of the five-point stencil used for derivatives of
/// amplitudes without a convenient closed-form derivative.
pub(crate) const FD_REL_STEP: f64 = 1e-4;

/// The scatterer under study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PotentialSpec {
    /// `omega * delta(x)` at the origin. Positive strength is a barrier.
    ZeroRange { omega: f64 },
    /// `height` on `[left, right]`, zero elsewhere.
    Rectangular { height: f64, left: f64, right: f64 },
    /// s-wave zero-range potential characterised by its scattering length.
    RadialZeroRange { alpha: f64 },
}

impl PotentialSpec {
    pub fn zero_range(omega: f64) -> Result<Self> {
        if !omega.is_finite() {
            return domain("zero-range strength must be finite");
        }
        Ok(Self::ZeroRange { omega })
    }

    pub fn rectangular(height: f64, left: f64, right: f64) -> Result<Self> {
        if !(height.is_finite() && left.is_finite() && right.is_finite()) {
            return domain("rectangular potential parameters must be finite");
        }
        if right <= left {
            return domain(format!("rectangular potential needs right > left, got [{left}, {right}]"));
        }
        Ok(Self::Rectangular { height, left, right })
    }

    pub fn radial(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha == 0.0 {
            return domain("scattering length must be finite and non-zero");
        }
        Ok(Self::RadialZeroRange { alpha })
    }

    /// Width of the region occupied by the potential (zero for zero-range kinds).
    pub fn width(&self) -> f64 {
        match *self {
            Self::Rectangular { left, right, .. } => right - left,
            _ => 0.0,
        }
    }

    /// Left and right edges of the interaction region.
    pub fn edges(&self) -> (f64, f64) {
        match *self {
            Self::Rectangular { left, right, .. } => (left, right),
            _ => (0.0, 0.0),
        }
    }

    /// Length over which the shift distribution's smooth part decays to
    /// roughly e^-18 of its peak. Used to size spatial windows.
    pub fn tail_length(&self) -> f64 {
        match *self {
            Self::ZeroRange { omega } if omega != 0.0 => 18.0 / omega.abs(),
            Self::ZeroRange { .. } => 0.0,
            Self::RadialZeroRange { alpha } => 18.0 * alpha.abs(),
            Self::Rectangular { height, left, right } => {
                let l = right - left;
                let inner = if height != 0.0 { 1.0 / (2.0 * height.abs()).sqrt() } else { 0.0 };
                18.0 * l.max(inner) + l
            }
        }
    }

    pub fn transmission(&self, k: f64) -> Result<Complex64> {
        match *self {
            Self::ZeroRange { omega } => transmission_zero_range(k.into(), omega),
            Self::Rectangular { height, left, right } => transmission_rectangular(k, height, left, right),
            Self::RadialZeroRange { .. } => Err(Error::Unsupported("transmission")),
        }
    }

    pub fn reflection(&self, k: f64) -> Result<Complex64> {
        match *self {
            Self::ZeroRange { omega } => reflection_zero_range(k.into(), omega),
            Self::Rectangular { height, left, right } => reflection_rectangular(k, height, left, right),
            Self::RadialZeroRange { .. } => Err(Error::Unsupported("reflection")),
        }
    }

    pub fn s_matrix(&self, k: f64) -> Result<Complex64> {
        match *self {
            Self::RadialZeroRange { alpha } => s_matrix_radial(k.into(), alpha),
            _ => Err(Error::Unsupported("radial S-matrix")),
        }
    }

    /// ∂φ_T/∂k for the transmission phase.
    pub fn transmission_phase_slope(&self, k: f64) -> Result<f64> {
        match *self {
            Self::ZeroRange { omega } => Ok(omega / (k * k + omega * omega)),
            _ => log_derivative(|q| self.transmission(q), k).map(|d| d.im),
        }
    }

    /// ∂φ_R/∂k for the reflection phase (includes the 2k·left edge term).
    pub fn reflection_phase_slope(&self, k: f64) -> Result<f64> {
        match *self {
            Self::ZeroRange { omega } => Ok(omega / (k * k + omega * omega)),
            _ => log_derivative(|q| self.reflection(q), k).map(|d| d.im),
        }
    }

    /// ∂φ_S/∂k for the radial S-matrix phase.
    pub fn s_matrix_phase_slope(&self, k: f64) -> Result<f64> {
        match *self {
            Self::RadialZeroRange { alpha } => Ok(-2.0 * alpha / (1.0 + alpha * alpha * k * k)),
            _ => Err(Error::Unsupported("radial S-matrix")),
        }
    }
}

/// Five-point central-difference estimate of d ln f / dk. Differences are
/// taken as logarithms of ratios, which stay near 1, so no phase unwrapping
/// is needed.
pub(crate) fn log_derivative(f: impl Fn(f64) -> Result<Complex64>, k: f64) -> Result<Complex64> {
    let h = FD_REL_STEP * k.abs().max(1.0);
    let mut v = [Complex64::new(0.0, 0.0); 4];
    for (slot, step) in v.iter_mut().zip([-2.0, -1.0, 1.0, 2.0]) {
        *slot = f(k + step * h)?;
        if slot.norm() < 1e-300 {
            return Err(Error::AmplitudeUnderflow(slot.norm()));
        }
    }
    let near = (v[2] / v[1]).ln();
    let far = (v[3] / v[0]).ln();
    Ok((8.0 * near - far) / (12.0 * h))
}

/// T(k, Ω) = k / (k + iΩ).
pub fn transmission_zero_range(k: Complex64, omega: f64) -> Result<Complex64> {
    let den = k + I * omega;
    if den == Complex64::new(0.0, 0.0) {
        return Err(Error::Pole { re: k.re, im: k.im });
    }
    Ok(k / den)
}

/// R(k, Ω) = −iΩ / (k + iΩ).
pub fn reflection_zero_range(k: Complex64, omega: f64) -> Result<Complex64> {
    let den = k + I * omega;
    if den == Complex64::new(0.0, 0.0) {
        return Err(Error::Pole { re: k.re, im: k.im });
    }
    Ok(-I * omega / den)
}

/// Location of the single pole of the zero-range amplitudes, k = −iΩ.
/// A well (Ω < 0) puts it on the positive imaginary axis (bound state).
pub fn zero_range_pole(omega: f64) -> Complex64 {
    Complex64::new(0.0, -omega)
}

/// S(k, α) = −(k + i/α)/(k − i/α), written as −(αk + i)/(αk − i) so that
/// α → 0 reduces smoothly to the hard wall S = −1.
pub fn s_matrix_radial(k: Complex64, alpha: f64) -> Result<Complex64> {
    let den = alpha * k - I;
    if den == Complex64::new(0.0, 0.0) {
        return Err(Error::Pole { re: k.re, im: k.im });
    }
    Ok(-(alpha * k + I) / den)
}

/// cos(qL) and sin(qL)/q as entire functions of q², so the interior
/// wavenumber never needs a branch choice and q → 0 (E = U) is regular.
fn interior_factors(q2: f64, width: f64) -> (Complex64, Complex64) {
    let z = q2 * width * width;
    if z.abs() < 1e-3 {
        let cos = 1.0 - z / 2.0 + z * z / 24.0 - z * z * z / 720.0;
        let sinc = width * (1.0 - z / 6.0 + z * z / 120.0 - z * z * z / 5040.0);
        return (cos.into(), sinc.into());
    }
    let q = Complex64::new(q2, 0.0).sqrt();
    let ql = q * width;
    (ql.cos(), ql.sin() / q)
}

/// Transmission and reflection (referred to a left edge at the origin) of a
/// rectangular step of the given height and width.
fn rectangular_core(k: f64, height: f64, width: f64) -> Result<(Complex64, Complex64)> {
    if !k.is_finite() || k == 0.0 {
        return domain(format!("rectangular amplitudes need finite k != 0, got {k}"));
    }
    let q2 = k * k - 2.0 * height;
    let (cos, sinc) = interior_factors(q2, width);
    let den = cos - I * ((k * k + q2) / (2.0 * k)) * sinc;
    if den.norm() == 0.0 {
        return Err(Error::Pole { re: k, im: 0.0 });
    }
    let t = (-I * k * width).exp() / den;
    let r = -I * (height / k) * sinc / den;
    Ok((t, r))
}

/// Transmission amplitude of a rectangular barrier (height > 0) or well
/// (height < 0) on `[left, right]`, with the transmitted wave T·e^{ikx} for
/// x > right. Negative k gives the analytic continuation T(−k) = T(k)*.
pub fn transmission_rectangular(k: f64, height: f64, left: f64, right: f64) -> Result<Complex64> {
    if right <= left {
        return domain("rectangular potential needs right > left");
    }
    rectangular_core(k, height, right - left).map(|(t, _)| t)
}

/// Reflection amplitude for incidence from the left, R·e^{−ikx} for x < left.
/// Moving the potential by s multiplies R by e^{2iks}.
pub fn reflection_rectangular(k: f64, height: f64, left: f64, right: f64) -> Result<Complex64> {
    if right <= left {
        return domain("rectangular potential needs right > left");
    }
    rectangular_core(k, height, right - left).map(|(_, r)| r * (2.0 * I * k * left).exp())
}

/// Classical time spent over a flat-topped region, (b − a)/√(2(E − U)).
pub fn classical_traversal_time(energy: f64, potential: &PotentialSpec) -> Result<f64> {
    let PotentialSpec::Rectangular { height, left, right } = *potential else {
        return Err(Error::Unsupported("classical traversal time"));
    };
    if energy <= height {
        return domain(format!("classically forbidden: E = {energy} <= U = {height}"));
    }
    Ok((right - left) / (2.0 * (energy - height)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BranchSide {
    NegativeAxis,
    PositiveAxis,
}

/// One-sided exponential `amplitude · exp(−i p x′ ∓ decay_rate x′)` living on
/// one half-axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpBranch {
    pub side: BranchSide,
    pub amplitude: Complex64,
    pub decay_rate: f64,
}

impl ExpBranch {
    /// Complex rate β such that the branch reads amplitude·e^{−β|x′|}.
    pub fn rate(&self, momentum: f64) -> Complex64 {
        match self.side {
            BranchSide::PositiveAxis => Complex64::new(self.decay_rate, momentum),
            BranchSide::NegativeAxis => Complex64::new(self.decay_rate, -momentum),
        }
    }
}

/// Amplitude distribution over spatial shifts x′: an optional Dirac weight at
/// the origin plus at most one exponential branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftDistribution {
    pub delta_weight: Complex64,
    pub branch: Option<ExpBranch>,
    pub momentum: f64,
}

impl ShiftDistribution {
    pub fn pure_delta(weight: Complex64, momentum: f64) -> Self {
        Self { delta_weight: weight, branch: None, momentum }
    }

    /// Smooth part at x′ (the Dirac term is excluded).
    pub fn smooth_part(&self, x: f64) -> Complex64 {
        let Some(b) = self.branch else { return Complex64::new(0.0, 0.0) };
        let on_side = match b.side {
            BranchSide::PositiveAxis => x > 0.0,
            BranchSide::NegativeAxis => x < 0.0,
        };
        if !on_side {
            return Complex64::new(0.0, 0.0);
        }
        b.amplitude * (-b.rate(self.momentum) * x.abs()).exp()
    }

    /// ∫η dx′, in closed form.
    pub fn zeroth_moment(&self) -> Complex64 {
        let branch = self.branch.map_or(Complex64::new(0.0, 0.0), |b| b.amplitude / b.rate(self.momentum));
        self.delta_weight + branch
    }

    /// ∫x′η dx′, in closed form. The Dirac term does not contribute.
    pub fn first_moment(&self) -> Complex64 {
        self.branch.map_or(Complex64::new(0.0, 0.0), |b| {
            let beta = b.rate(self.momentum);
            let m = b.amplitude / (beta * beta);
            match b.side {
                BranchSide::PositiveAxis => m,
                BranchSide::NegativeAxis => -m,
            }
        })
    }

    /// First moment over zeroth moment: the complex shift.
    pub fn mean(&self) -> Result<Complex64> {
        let z = self.zeroth_moment();
        if z.norm() < 1e-300 {
            return Err(Error::VanishingNorm(z.norm()));
        }
        Ok(self.first_moment() / z)
    }
}

/// η_T(x′, p) for Ω δ(x): δ(x′) minus an exponential branch behind (barrier)
/// or ahead of (well) the origin.
pub fn shift_distribution_transmission(p: f64, omega: f64) -> ShiftDistribution {
    let mut eta = ShiftDistribution::pure_delta(1.0.into(), p);
    if omega != 0.0 {
        eta.branch = Some(ExpBranch {
            side: if omega > 0.0 { BranchSide::NegativeAxis } else { BranchSide::PositiveAxis },
            amplitude: Complex64::new(-omega.abs(), 0.0),
            decay_rate: omega.abs(),
        });
    }
    eta
}

/// η_R(x′, p) for Ω δ(x). There is no Dirac term since R → 0 as |k| → ∞;
/// Ω = 0 yields the empty distribution.
pub fn shift_distribution_reflection(p: f64, omega: f64) -> ShiftDistribution {
    let mut eta = shift_distribution_transmission(p, omega);
    eta.delta_weight = Complex64::new(0.0, 0.0);
    eta
}

/// η(r′, p) for the radial zero-range S-matrix.
pub fn shift_distribution_radial(p: f64, alpha: f64) -> Result<ShiftDistribution> {
    if alpha == 0.0 || !alpha.is_finite() {
        return domain("radial shift distribution needs a finite non-zero scattering length");
    }
    Ok(ShiftDistribution {
        delta_weight: Complex64::new(-1.0, 0.0),
        branch: Some(ExpBranch {
            side: if alpha > 0.0 { BranchSide::PositiveAxis } else { BranchSide::NegativeAxis },
            amplitude: Complex64::new(2.0 / alpha.abs(), 0.0),
            decay_rate: 1.0 / alpha.abs(),
        }),
        momentum: p,
    })
}

/// A_T(p, τ) = prefactor · e^{−sτ} for τ ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LarmorDistribution {
    pub prefactor: Complex64,
    pub complex_decay: Complex64,
}

impl LarmorDistribution {
    pub fn eval(&self, tau: f64) -> Complex64 {
        if tau < 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        self.prefactor * (-self.complex_decay * tau).exp()
    }

    pub fn zeroth_moment(&self) -> Complex64 {
        self.prefactor / self.complex_decay
    }

    pub fn first_moment(&self) -> Complex64 {
        self.prefactor / (self.complex_decay * self.complex_decay)
    }

    /// Complex time: first moment over zeroth moment, 1/s.
    pub fn mean(&self) -> Complex64 {
        self.complex_decay.inv()
    }
}

/// Narrow-barrier limit of the duration amplitude distribution:
/// τ₀⁻¹ exp(−iΩτ/w) exp(−τ/τ₀) with τ₀ = w/p.
pub fn larmor_distribution_zero_range(p: f64, omega: f64, width: f64) -> Result<LarmorDistribution> {
    if !(width > 0.0) {
        return domain(format!("region width must be positive, got {width}"));
    }
    if !(p > 0.0) {
        return domain(format!("momentum must be positive, got {p}"));
    }
    let tau0 = width / p;
    Ok(LarmorDistribution {
        prefactor: Complex64::new(1.0 / tau0, 0.0),
        complex_decay: Complex64::new(1.0 / tau0, omega / width),
    })
}
