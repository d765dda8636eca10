//! Centre-of-mass extraction by real-space quadrature and by spectral
//! formulas, and assembly of delays against free propagation.

use serde::{Deserialize, Serialize};

use crate::amplitudes::PotentialSpec;
use crate::error::{domain, Error, Result};
use crate::propagator::{propagate, Channel, SpatialWave};
use crate::wavepackets::{trapezoid, PacketSpec, SpectralAmplitude};
use crate::weakvalues::{asymptote_radial, asymptote_reflection_general, asymptote_transmission, filtering_term};

/// Relative agreement required between the two COM routes.
pub const DUAL_METHOD_RTOL: f64 = 1e-6;
/// Absolute agreement used when the COM is near zero.
pub const DUAL_METHOD_ATOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    RealSpace,
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayResult {
    pub delay: f64,
    pub channel: Channel,
    pub t_eval: f64,
    /// Channel probability.
    pub norm: f64,
    pub asymptote: f64,
    pub method: Method,
    /// Fraction of the channel still on the incident side (real-space only).
    pub leak: f64,
}

/// ∫x|ψ|²dx / ∫|ψ|²dx over the wave's window.
pub fn com_real_space(wave: &SpatialWave) -> Result<f64> {
    let norm = wave.norm();
    if !(norm > 1e-12) {
        return Err(Error::VanishingNorm(norm));
    }
    let first = trapezoid(&wave.grid, wave.grid.points().zip(wave.density()).map(|(x, d)| x * d));
    Ok(first / norm)
}

/// |amp|²|A|²-weighted averages of v(k) and of the amplitude's phase slope.
fn spectral_averages(
    spectral: &SpectralAmplitude,
    amplitude: impl Fn(f64) -> Result<num_complex::Complex64>,
    slope: impl Fn(f64) -> Result<f64>,
) -> Result<(f64, f64, f64)> {
    let law = spectral.spec().dispersion;
    let grid = spectral.grid();
    let weights: Vec<f64> =
        spectral.iter().map(|(k, a)| Ok(amplitude(k)?.norm_sqr() * a.norm_sqr())).collect::<Result<_>>()?;
    let peak = weights.iter().copied().fold(0.0, f64::max);
    let norm = trapezoid(grid, weights.iter().copied());
    if !(norm > 1e-300) {
        return Err(Error::VanishingNorm(norm));
    }
    let mut v_sum = 0.0;
    let mut s_sum = 0.0;
    for (j, (k, w)) in grid.points().zip(&weights).enumerate() {
        if *w <= 1e-30 * peak {
            continue;
        }
        let gw = grid.weight(j) * w;
        v_sum += gw * law.group_velocity(k);
        s_sum += gw * slope(k)?;
    }
    Ok((v_sum / norm, s_sum / norm, norm))
}

/// ⟨x⟩_T = x_I + ⟨v⟩_T t − ⟨∂φ_T/∂k⟩_T.
pub fn com_spectral_transmission(spectral: &SpectralAmplitude, potential: &PotentialSpec, t: f64) -> Result<f64> {
    let (v, s, _) =
        spectral_averages(spectral, |k| potential.transmission(k), |k| potential.transmission_phase_slope(k))?;
    Ok(spectral.spec().x_i + v * t - s)
}

/// ⟨x⟩_R = −x_I − ⟨v⟩_R t + ⟨∂φ_R/∂k⟩_R.
pub fn com_spectral_reflection(spectral: &SpectralAmplitude, potential: &PotentialSpec, t: f64) -> Result<f64> {
    let (v, s, _) = spectral_averages(spectral, |k| potential.reflection(k), |k| potential.reflection_phase_slope(k))?;
    Ok(-spectral.spec().x_i - v * t + s)
}

/// ⟨r⟩ = x_I + ⟨v⟩t − ⟨∂φ_S/∂k⟩ for the outgoing radial wave (r_I = −x_I).
pub fn com_spectral_radial(spectral: &SpectralAmplitude, potential: &PotentialSpec, t: f64) -> Result<f64> {
    let (v, s, _) = spectral_averages(spectral, |k| potential.s_matrix(k), |k| potential.s_matrix_phase_slope(k))?;
    Ok(spectral.spec().x_i + v * t - s)
}

/// Free-propagation reference the channel's COM is compared with.
pub fn reference_position(spec: &PacketSpec, channel: Channel, t: f64) -> f64 {
    match channel {
        Channel::Reflected => -spec.free_center(t),
        _ => spec.free_center(t),
    }
}

fn asymptote(spec: &PacketSpec, channel: Channel, potential: &PotentialSpec, t: f64) -> Result<f64> {
    match channel {
        Channel::Transmitted => asymptote_transmission(spec, potential, t),
        Channel::Reflected => asymptote_reflection_general(spec.p, potential),
        Channel::Radial => match *potential {
            PotentialSpec::RadialZeroRange { alpha } => Ok(asymptote_radial(spec.p, alpha)),
            _ => Err(Error::Unsupported("radial delay")),
        },
        Channel::Free => Ok(0.0),
    }
}

fn spectral_com(spectral: &SpectralAmplitude, channel: Channel, potential: &PotentialSpec, t: f64) -> Result<f64> {
    match channel {
        Channel::Transmitted => com_spectral_transmission(spectral, potential, t),
        Channel::Reflected => com_spectral_reflection(spectral, potential, t),
        Channel::Radial => com_spectral_radial(spectral, potential, t),
        Channel::Free => domain("free channel has no potential"),
    }
}

fn delay(spec: &PacketSpec, channel: Channel, potential: &PotentialSpec, t: f64, method: Method) -> Result<DelayResult> {
    let (spectral, wave) = propagate(spec, channel, Some(potential), t, 1)?;
    let com = match method {
        Method::RealSpace => com_real_space(&wave)?,
        Method::Spectral => spectral_com(&spectral, channel, potential, t)?,
    };
    Ok(DelayResult {
        delay: com - reference_position(spec, channel, t),
        channel,
        t_eval: t,
        norm: wave.channel_norm,
        asymptote: asymptote(spec, channel, potential, t)?,
        method,
        leak: wave.leak,
    })
}

/// δx_T = ⟨x⟩_T − (x_I + vt), with v = p (quadratic) or c (linear).
pub fn delay_transmission(spec: &PacketSpec, potential: &PotentialSpec, t: f64) -> Result<DelayResult> {
    delay(spec, Channel::Transmitted, potential, t, Method::RealSpace)
}

/// δx_R = ⟨x⟩_R + vt + x_I. Positive means delayed.
pub fn delay_reflection(spec: &PacketSpec, potential: &PotentialSpec, t: f64) -> Result<DelayResult> {
    delay(spec, Channel::Reflected, potential, t, Method::RealSpace)
}

/// δr = ⟨r⟩ − (vt − r_I), measured against the hard-wall (S = −1) packet.
pub fn delay_radial(spec: &PacketSpec, potential: &PotentialSpec, t: f64) -> Result<DelayResult> {
    delay(spec, Channel::Radial, potential, t, Method::RealSpace)
}

/// Both COM routes, the grid-refinement residual and the predictions for one
/// sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub channel: Channel,
    pub t: f64,
    pub com_real_space: f64,
    pub com_spectral: f64,
    pub delay: f64,
    pub delay_spectral: f64,
    pub asymptote: f64,
    /// Momentum-filtering part of the transmission prediction (zero otherwise).
    pub filtering: f64,
    pub norm: f64,
    pub leak: f64,
    /// |δx(scale) − δx(2·scale)| for the real-space route.
    pub refinement_residual: f64,
}

impl Measurement {
    pub fn methods_agree(&self) -> bool {
        let tol = (DUAL_METHOD_RTOL * self.com_spectral.abs()).max(DUAL_METHOD_ATOL);
        (self.com_real_space - self.com_spectral).abs() <= tol
    }
}

/// Measures one channel at time t with grid scale `scale`, repeating the
/// real-space route at twice the scale for the refinement residual.
pub fn measure(
    spec: &PacketSpec,
    channel: Channel,
    potential: &PotentialSpec,
    t: f64,
    scale: usize,
) -> Result<Measurement> {
    if channel == Channel::Free {
        return domain("measure needs a scattering channel");
    }
    let reference = reference_position(spec, channel, t);
    let (spectral, wave) = propagate(spec, channel, Some(potential), t, scale)?;
    let com_rs = com_real_space(&wave)?;
    let com_sp = spectral_com(&spectral, channel, potential, t)?;
    let (_, fine) = propagate(spec, channel, Some(potential), t, 2 * scale)?;
    let com_fine = com_real_space(&fine)?;
    let filtering = match channel {
        Channel::Transmitted => filtering_term(spec, potential, t)?,
        _ => 0.0,
    };
    Ok(Measurement {
        channel,
        t,
        com_real_space: com_rs,
        com_spectral: com_sp,
        delay: com_rs - reference,
        delay_spectral: com_sp - reference,
        asymptote: asymptote(spec, channel, potential, t)?,
        filtering,
        norm: wave.channel_norm,
        leak: wave.leak,
        refinement_residual: (com_fine - com_rs).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagator::{completed_event_time, event_time, plan_synthesis, synthesize_free};
    use crate::wavepackets::{gaussian_spectral, Dispersion, UniformGrid};
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    fn quad(p: f64, dx: f64) -> PacketSpec {
        PacketSpec::separated(p, dx, 3.0, Dispersion::Quadratic).unwrap()
    }

    fn lin(dx: f64) -> PacketSpec {
        PacketSpec::separated(1.0, dx, 3.0, Dispersion::Linear { c: 1.0 }).unwrap()
    }

    fn zr(omega: f64) -> PotentialSpec {
        PotentialSpec::zero_range(omega).unwrap()
    }

    #[test]
    fn free_com_follows_ehrenfest() {
        let spec = quad(1.3, 7.0);
        for t in [0.0, 30.0, 200.0] {
            let (_, wave) = propagate(&spec, Channel::Free, None, t, 1).unwrap();
            assert_abs_diff_eq!(com_real_space(&wave).unwrap(), spec.x_i + 1.3 * t, epsilon = 1e-8);
        }
    }

    #[test]
    fn symmetric_density_com() {
        let grid = UniformGrid::new(-4.0, 6.0, 1001).unwrap();
        let values = grid.points().map(|x| Complex64::new((-(x - 1.0f64).powi(2)).exp(), 0.0)).collect();
        let wave = SpatialWave { grid, values, t: 0.0, channel: Channel::Free, leak: 0.0, channel_norm: 1.0 };
        assert_abs_diff_eq!(com_real_space(&wave).unwrap(), 1.0, epsilon = 1e-12);
        let empty = SpatialWave { values: vec![Complex64::new(0.0, 0.0); 1001], ..wave };
        assert!(matches!(com_real_space(&empty), Err(Error::VanishingNorm(_))));
    }

    #[test]
    fn spectral_com_without_potential_is_free() {
        let spec = quad(1.0, 20.0);
        let t = 150.0;
        let plan = plan_synthesis(&spec, Channel::Free, None, t, 1).unwrap();
        let s = gaussian_spectral(&spec, plan.momentum).unwrap();
        assert_abs_diff_eq!(com_spectral_transmission(&s, &zr(0.0), t).unwrap(), spec.x_i + t, epsilon = 1e-9);
        let free = synthesize_free(&s, t, &plan).unwrap();
        assert_abs_diff_eq!(com_real_space(&free).unwrap(), spec.x_i + t, epsilon = 1e-8);
    }

    #[test]
    fn dual_methods_agree_at_reference_point() {
        let spec = quad(1.0, 20.0);
        let t = completed_event_time(&spec, 3.0).unwrap();
        for channel in [Channel::Transmitted, Channel::Reflected] {
            let m = measure(&spec, channel, &zr(1.0), t, 1).unwrap();
            assert!(m.methods_agree(), "{channel:?}: {} vs {}", m.com_real_space, m.com_spectral);
            assert!(m.refinement_residual < 1e-8);
        }
    }

    #[test]
    fn filtering_term_matches_mean_velocity_shift() {
        // ⟨v⟩_T − p ≈ Im[x̄′_T]Δk²/2 for broad packets
        let spec = quad(1.0, 200.0);
        let v = zr(1.0);
        let plan = plan_synthesis(&spec, Channel::Transmitted, Some(&v), 0.0, 1).unwrap();
        let s = gaussian_spectral(&spec, plan.momentum).unwrap();
        let (mean_v, _, _) = spectral_averages(&s, |k| v.transmission(k), |k| v.transmission_phase_slope(k)).unwrap();
        let predicted = 0.5 * spec.dk() * spec.dk() / 2.0;
        assert_abs_diff_eq!((mean_v - 1.0) / predicted, 1.0, epsilon = 0.02);
    }

    #[test]
    fn hard_wall_reflection_has_no_delay() {
        let spec = quad(1.0, 10.0);
        let t = completed_event_time(&spec, 3.0).unwrap();
        let (s, wave) = propagate(&spec, Channel::Reflected, Some(&zr(1e9)), t, 1).unwrap();
        let com = com_spectral_reflection(&s, &zr(1e9), t).unwrap();
        assert_abs_diff_eq!(com, -spec.x_i - t, epsilon = 1e-7);
        assert_abs_diff_eq!(com_real_space(&wave).unwrap(), -spec.x_i - t, epsilon = 1e-7);
    }

    #[test]
    fn delay_examples() {
        let spec = lin(50.0);
        let v = zr(1.0);
        let t = event_time(&spec, 3.0, &v).unwrap();
        let d = delay_transmission(&spec, &v, t).unwrap();
        assert_abs_diff_eq!(d.delay, -0.5, epsilon = 0.01);
        assert_eq!(d.method, Method::RealSpace);
        assert!(delay_transmission(&spec, &zr(0.0), t).unwrap().delay.abs() < 1e-9);

        let spec = lin(200.0);
        let t = event_time(&spec, 3.0, &zr(-1.0)).unwrap();
        assert_abs_diff_eq!(delay_reflection(&spec, &zr(-1.0), t).unwrap().delay, -0.5, epsilon = 0.005);
    }

    #[test]
    fn narrow_linear_packet_is_not_delayed() {
        let spec = PacketSpec::new(1.0, 0.005, -50.0, Dispersion::Linear { c: 1.0 }).unwrap();
        let d = delay_transmission(&spec, &zr(1.0), 100.0).unwrap();
        assert!(d.delay.abs() < 0.01, "{}", d.delay);
        let r = delay_reflection(&spec, &zr(1.0), 100.0).unwrap();
        assert_abs_diff_eq!(r.delay, 0.5, epsilon = 0.025);
    }

    #[test]
    fn radial_delay_signs() {
        for alpha in [1.0, -1.0] {
            let spec = quad(1.0, 100.0);
            let t = completed_event_time(&spec, 3.0).unwrap();
            let d = delay_radial(&spec, &PotentialSpec::radial(alpha).unwrap(), t).unwrap();
            assert_abs_diff_eq!(d.delay, alpha, epsilon = 0.02);
        }
        let spec = quad(1.0, 20.0);
        let t = completed_event_time(&spec, 3.0).unwrap();
        let d = delay_radial(&spec, &PotentialSpec::radial(1e-6).unwrap(), t).unwrap();
        assert!(d.delay.abs() < 1e-5);
    }

    #[test]
    fn translation_covariance() {
        let spec = quad(1.0, 15.0);
        let t = completed_event_time(&spec, 3.0).unwrap();
        let base = PotentialSpec::rectangular(1.0, 0.0, 0.5).unwrap();
        let s = 0.75;
        let moved = PotentialSpec::rectangular(1.0, s, 0.5 + s).unwrap();
        let r0 = delay_reflection(&spec, &base, t).unwrap().delay;
        let r1 = delay_reflection(&spec, &moved, t).unwrap().delay;
        assert_abs_diff_eq!(r1 - r0, 2.0 * s, epsilon = 1e-8);
        let t0 = delay_transmission(&spec, &base, t).unwrap().delay;
        let t1 = delay_transmission(&spec, &moved, t).unwrap().delay;
        assert_abs_diff_eq!(t1, t0, epsilon = 1e-8);
    }

    #[test]
    fn sign_law_for_broad_packets() {
        let spec = lin(100.0);
        for omega in [0.8, -0.8, 2.0, -1.5] {
            let v = zr(omega);
            let t = event_time(&spec, 3.0, &v).unwrap();
            let dt = delay_transmission(&spec, &v, t).unwrap().delay;
            let dr = delay_reflection(&spec, &v, t).unwrap().delay;
            assert_eq!(dt.signum(), -omega.signum());
            assert_eq!(dr.signum(), omega.signum());
        }
    }
}
