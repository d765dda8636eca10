//! Complex shifts, phase times, asymptotic delay predictions and the weak
//! average of a position over a shift distribution.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::amplitudes::{log_derivative, PotentialSpec, ShiftDistribution};
use crate::error::{domain, Error, Result};
use crate::propagator::{convolve_shift, Channel};
use crate::wavepackets::{trapezoid, Dispersion, GaussianEnvelope, PacketSpec, UniformGrid};

const I: Complex64 = Complex64::new(0.0, 1.0);
const UNDERFLOW: f64 = 1e-300;

/// i∂_p ln(amplitude) for one channel, in length units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexShift {
    pub value: Complex64,
    pub channel: Channel,
}

fn check_amplitude(a: Complex64) -> Result<()> {
    if a.norm() < UNDERFLOW {
        return Err(Error::AmplitudeUnderflow(a.norm()));
    }
    Ok(())
}

/// x̄′_T(p) = i∂_p ln T(p). Closed form for zero-range potentials,
/// ratio-form central differences otherwise.
pub fn complex_shift_transmission(p: f64, potential: &PotentialSpec) -> Result<ComplexShift> {
    check_amplitude(potential.transmission(p)?)?;
    let value = match *potential {
        PotentialSpec::ZeroRange { omega } => {
            let d = p * p + omega * omega;
            Complex64::new(-omega / d, omega * omega / (p * d))
        }
        _ => I * log_derivative(|k| potential.transmission(k), p)?,
    };
    Ok(ComplexShift { value, channel: Channel::Transmitted })
}

/// x̄′_R(p) = i∂_p ln R(p).
pub fn complex_shift_reflection(p: f64, potential: &PotentialSpec) -> Result<ComplexShift> {
    check_amplitude(potential.reflection(p)?)?;
    let value = match *potential {
        PotentialSpec::ZeroRange { omega } => -I / Complex64::new(p, omega),
        _ => I * log_derivative(|k| potential.reflection(k), p)?,
    };
    Ok(ComplexShift { value, channel: Channel::Reflected })
}

/// r̄′(p) = i∂_p ln S(p) = 2α/(1 + p²α²), real.
pub fn complex_shift_radial(p: f64, potential: &PotentialSpec) -> Result<ComplexShift> {
    let PotentialSpec::RadialZeroRange { alpha } = *potential else {
        return Err(Error::Unsupported("radial complex shift"));
    };
    Ok(ComplexShift { value: Complex64::new(asymptote_radial(p, alpha), 0.0), channel: Channel::Radial })
}

/// τ(p) = (b − a)/v − Re[x̄′_T(p)]/v with v = p.
pub fn phase_time(p: f64, potential: &PotentialSpec) -> Result<f64> {
    if !(p > 0.0) {
        return domain(format!("phase time needs p > 0, got {p}"));
    }
    let shift = complex_shift_transmission(p, potential)?;
    Ok((potential.width() - shift.value.re) / p)
}

/// Re[x̄′_T(p)] + Im[x̄′_T(p)]Δk²t/2 for the zero-range barrier.
pub fn asymptote_transmission_dispersive(p: f64, omega: f64, dk: f64, t: f64) -> f64 {
    let d = p * p + omega * omega;
    -omega / d + omega * omega / (p * d) * dk * dk / 2.0 * t
}

/// Excess drift from momentum filtering, Im[x̄′_T(p)]Δk²t/2; zero for the
/// linear law.
pub fn filtering_term(spec: &PacketSpec, potential: &PotentialSpec, t: f64) -> Result<f64> {
    match spec.dispersion {
        Dispersion::Linear { .. } => Ok(0.0),
        Dispersion::Quadratic => {
            let shift = complex_shift_transmission(spec.p, potential)?;
            Ok(shift.value.im * spec.dk() * spec.dk() / 2.0 * t)
        }
    }
}

/// Predicted transmission delay: Re[x̄′_T(p)] plus the filtering term.
pub fn asymptote_transmission(spec: &PacketSpec, potential: &PotentialSpec, t: f64) -> Result<f64> {
    Ok(complex_shift_transmission(spec.p, potential)?.value.re + filtering_term(spec, potential, t)?)
}

/// Broad-packet reflection delay of Ωδ(x): Ω/(p² + Ω²).
pub fn asymptote_reflection(p: f64, omega: f64) -> f64 {
    if omega == 0.0 {
        return 0.0;
    }
    omega / (p * p + omega * omega)
}

/// Broad-packet reflection delay for any potential: the slope of the
/// reflection phase, ∂φ_R/∂p (equal to Ω/(p² + Ω²) for Ωδ(x)).
pub fn asymptote_reflection_general(p: f64, potential: &PotentialSpec) -> Result<f64> {
    check_amplitude(potential.reflection(p)?)?;
    potential.reflection_phase_slope(p)
}

/// Narrow dispersionless-packet reflection delay, 1/(2Ω).
pub fn asymptote_reflection_narrow(omega: f64) -> Result<f64> {
    if omega == 0.0 {
        return domain("no reflected packet without a potential");
    }
    Ok(1.0 / (2.0 * omega))
}

/// Broad-packet radial delay, 2α/(1 + p²α²).
pub fn asymptote_radial(p: f64, alpha: f64) -> f64 {
    2.0 * alpha / (1.0 + p * p * alpha * alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeakMode {
    Exact,
    FirstOrder,
}

/// Result of [`weak_average`]. `terms` holds the three first-order
/// contributions ∫x|G|², Re[x̄′] and 2Im[x̄′]∫x Im[G*G′] (FirstOrder only).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakAverage {
    pub mean: f64,
    pub terms: Option<[f64; 3]>,
}

fn quadrature_grid(eta: &ShiftDistribution, envelope: &GaussianEnvelope, scale: usize) -> Result<UniformGrid> {
    if scale == 0 {
        return domain("grid scale must be at least 1");
    }
    let width = envelope.modulus_width();
    let (decay_scale, tail) = eta.branch.map_or((width, 0.0), |b| (1.0 / b.decay_rate, 40.0 / b.decay_rate));
    let span = 8.0 * width + tail;
    let dx = width.min(decay_scale) / (16.0 * scale as f64);
    let n = ((2.0 * span / dx).ceil() as usize).max(4097);
    UniformGrid::new(envelope.center - span, envelope.center + span, n)
}

/// ⟨x⟩ = ∫x|∫G(x − x′)η(x′)dx′|²dx / ∫|…|²dx.
///
/// `Exact` evaluates the inner convolution in closed form and the outer
/// integrals by trapezoid. `FirstOrder` returns ∫x|G|² + Re[x̄′] +
/// 2Im[x̄′]∫x Im[G*G′]dx for unit-normalised G. `scale` refines the
/// quadrature grid.
pub fn weak_average(
    eta: &ShiftDistribution,
    envelope: &GaussianEnvelope,
    mode: WeakMode,
    scale: usize,
) -> Result<WeakAverage> {
    let grid = quadrature_grid(eta, envelope, scale)?;
    match mode {
        WeakMode::Exact => {
            let dens: Vec<f64> = grid.points().map(|x| convolve_shift(eta, envelope, x).norm_sqr()).collect();
            let norm = trapezoid(&grid, dens.iter().copied());
            if !(norm > 1e-300) {
                return Err(Error::VanishingNorm(norm));
            }
            let first = trapezoid(&grid, grid.points().zip(&dens).map(|(x, d)| x * d));
            Ok(WeakAverage { mean: first / norm, terms: None })
        }
        WeakMode::FirstOrder => {
            let norm = trapezoid(&grid, grid.points().map(|x| envelope.eval(x).norm_sqr()));
            if !(norm > 1e-300) {
                return Err(Error::VanishingNorm(norm));
            }
            let com = trapezoid(&grid, grid.points().map(|x| x * envelope.eval(x).norm_sqr())) / norm;
            let shift = eta.mean()?;
            let chirp = trapezoid(
                &grid,
                grid.points().map(|x| x * (envelope.eval(x).conj() * envelope.derivative(x)).im),
            ) / norm;
            let terms = [com, shift.re, 2.0 * shift.im * chirp];
            Ok(WeakAverage { mean: terms.iter().sum(), terms: Some(terms) })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplitudes::{shift_distribution_radial, shift_distribution_transmission, transmission_rectangular};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn zr(omega: f64) -> PotentialSpec {
        PotentialSpec::zero_range(omega).unwrap()
    }

    #[test]
    fn complex_shift_examples() {
        let s = complex_shift_transmission(1.0, &zr(1.0)).unwrap().value;
        assert_abs_diff_eq!(s.re, -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.im, 0.5, epsilon = 1e-15);
        assert_eq!(complex_shift_transmission(1.0, &zr(0.0)).unwrap().value, Complex64::new(0.0, 0.0));
        assert!(matches!(complex_shift_reflection(1.0, &zr(0.0)), Err(Error::AmplitudeUnderflow(_))));
    }

    #[test]
    fn rectangular_shift_matches_independent_difference() {
        // plain central difference of ln T with a different step as oracle
        let v = PotentialSpec::rectangular(2.0, 0.0, 1.0).unwrap();
        let h = 1e-5;
        let t = |k: f64| transmission_rectangular(k, 2.0, 0.0, 1.0).unwrap();
        let oracle = I * (t(1.0 + h) / t(1.0 - h)).ln() / (2.0 * h);
        let s = complex_shift_transmission(1.0, &v).unwrap().value;
        assert!((s - oracle).norm() < 1e-8, "{s} vs {oracle}");
    }

    #[test]
    fn phase_time_examples() {
        assert_abs_diff_eq!(phase_time(1.0, &zr(1.0)).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(phase_time(2.0, &zr(1.0)).unwrap(), 0.1, epsilon = 1e-15);
        let free = PotentialSpec::rectangular(0.0, 0.0, 3.0).unwrap();
        assert_abs_diff_eq!(phase_time(1.5, &free).unwrap(), 2.0, epsilon = 1e-9);
    }

    #[test]
    fn asymptote_examples() {
        assert_abs_diff_eq!(asymptote_transmission_dispersive(1.0, 1.0, 0.0, 100.0), -0.5);
        let t = 300.0 / 0.9856;
        assert_abs_diff_eq!(
            asymptote_transmission_dispersive(1.0, 1.0, 0.04, t),
            -0.5 + 0.5 * 0.04 * 0.04 / 2.0 * t,
            epsilon = 1e-15
        );
        let lin = PacketSpec::new(1.0, 50.0, -150.0, Dispersion::Linear { c: 1.0 }).unwrap();
        assert_eq!(filtering_term(&lin, &zr(1.0), 1e4).unwrap(), 0.0);
        assert_abs_diff_eq!(asymptote_transmission(&lin, &zr(1.0), 1e4).unwrap(), -0.5, epsilon = 1e-15);

        assert_abs_diff_eq!(asymptote_reflection(1.0, 1.0), 0.5);
        assert_eq!(asymptote_reflection(1.0, 0.0), 0.0);
        assert_abs_diff_eq!(asymptote_reflection(1.0, -2.0), -0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(asymptote_reflection_general(1.0, &zr(-2.0)).unwrap(), -0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(asymptote_reflection_narrow(1.0).unwrap(), 0.5);
        assert_abs_diff_eq!(asymptote_reflection_narrow(-1.0).unwrap(), -0.5);
        assert!(asymptote_reflection_narrow(0.0).is_err());

        assert_abs_diff_eq!(asymptote_radial(1.0, 1.0), 1.0);
        assert_abs_diff_eq!(asymptote_radial(1.0, 1e-12), 0.0, epsilon = 1e-11);
    }

    #[test]
    fn radial_asymptote_is_minus_phase_slope() {
        for (p, alpha) in [(1.0, 1.0), (0.7, -2.0), (2.5, 0.3)] {
            let v = PotentialSpec::radial(alpha).unwrap();
            let h = 1e-6 * p;
            let slope = (v.s_matrix(p + h).unwrap() / v.s_matrix(p - h).unwrap()).arg() / (2.0 * h);
            assert_abs_diff_eq!(asymptote_radial(p, alpha), -slope, epsilon = 1e-8);
            assert!(complex_shift_radial(p, &v).unwrap().value.im.abs() < 1e-12);
        }
    }

    #[test]
    fn weak_average_pure_delta_is_envelope_com() {
        let eta = ShiftDistribution::pure_delta(Complex64::new(0.3, -0.2), 1.0);
        for env in [
            GaussianEnvelope::real(1.7, 2.0),
            GaussianEnvelope { center: -3.0, sigma_sq: Complex64::new(4.0, 6.0), amplitude: Complex64::new(0.5, 0.1) },
        ] {
            let exact = weak_average(&eta, &env, WeakMode::Exact, 1).unwrap().mean;
            assert_abs_diff_eq!(exact, env.center, epsilon = 1e-12);
        }
    }

    #[test]
    fn first_order_with_real_envelope() {
        let eta = shift_distribution_transmission(1.0, 1.0);
        let w = weak_average(&eta, &GaussianEnvelope::real(0.0, 10.0), WeakMode::FirstOrder, 1).unwrap();
        let [com, re, third] = w.terms.unwrap();
        assert!(com.abs() < 1e-12);
        assert_abs_diff_eq!(re, -0.5, epsilon = 1e-15);
        assert!(third.abs() < 1e-12);
        assert_abs_diff_eq!(w.mean, -0.5, epsilon = 1e-12);
    }

    #[test]
    fn chirp_term_matches_closed_form() {
        // ∫x Im[G*G′] = −Im(1/σ²)/(2 Re(1/σ²)) for unit-normalised G
        let env = GaussianEnvelope { center: 0.4, sigma_sq: Complex64::new(9.0, 12.0), amplitude: Complex64::new(1.0, 0.0) };
        let eta = shift_distribution_transmission(1.0, 1.0);
        let third = weak_average(&eta, &env, WeakMode::FirstOrder, 1).unwrap().terms.unwrap()[2];
        let inv = env.sigma_sq.inv();
        assert_abs_diff_eq!(third, 2.0 * 0.5 * (-inv.im / (2.0 * inv.re)), epsilon = 1e-10);
    }

    #[test]
    fn exact_weak_average_matches_phase_slope_oracle() {
        // For a real centred Gaussian, Exact ⟨x⟩ = −⟨∂φ⟩ over |T|²|Ĝ(k − p)|².
        let eta = shift_distribution_radial(1.0, 1.0).unwrap();
        let dx = 5.0;
        let exact = weak_average(&eta, &GaussianEnvelope::real(0.0, dx), WeakMode::Exact, 1).unwrap().mean;
        let dk = 2.0 / dx;
        let grid = UniformGrid::new(1.0 - 10.0 * dk, 1.0 + 10.0 * dk, 20001).unwrap();
        let w = |k: f64| (-2.0 * (k - 1.0f64).powi(2) / (dk * dk)).exp();
        let num = trapezoid(&grid, grid.points().map(|k| w(k) * asymptote_radial(k, 1.0)));
        let den = trapezoid(&grid, grid.points().map(w));
        assert_abs_diff_eq!(exact, num / den, epsilon = 1e-9);
    }

    proptest! {
        #[test]
        fn closed_form_shift_matches_difference(p in 0.1f64..5.0, omega in -5.0f64..5.0) {
            let v = zr(omega);
            let closed = complex_shift_transmission(p, &v).unwrap().value;
            let fd = I * log_derivative(|k| v.transmission(k), p).unwrap();
            prop_assert!((closed - fd).norm() < 1e-8);
        }

        #[test]
        fn phase_time_is_phase_slope_over_v(p in 0.2f64..3.0, u in -2.0f64..2.0, l in 0.1f64..2.0) {
            let v = PotentialSpec::rectangular(u, 0.0, l).unwrap();
            let tau = phase_time(p, &v).unwrap();
            // independent estimate: Richardson-extrapolated difference of arg T
            let d = |h: f64| (v.transmission(p + h).unwrap() / v.transmission(p - h).unwrap()).arg() / (2.0 * h);
            let h = 2e-4 * p;
            let slope = (4.0 * d(h / 2.0) - d(h)) / 3.0;
            let expect = (l + slope) / p;
            prop_assert!((tau - expect).abs() < 1e-10 * expect.abs().max(1.0), "{} vs {}", tau, expect);
        }

        #[test]
        fn radial_shift_is_real(p in 0.05f64..5.0, alpha in -5.0f64..5.0) {
            prop_assume!(alpha.abs() > 1e-6);
            let v = PotentialSpec::radial(alpha).unwrap();
            prop_assert!(complex_shift_radial(p, &v).unwrap().value.im.abs() < 1e-12);
        }
    }
}
