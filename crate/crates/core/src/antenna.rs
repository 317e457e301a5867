//! Path loss and antenna radiation patterns.
//!
//! All gains are linear power ratios. Angles are radians unless a name says
//! otherwise.

use crate::channel::ChannelError;
use std::f64::consts::{FRAC_PI_2, PI};

/// Bessel-pattern constant placing `u` at the −3 dB point when `φ = φ_3dB`.
pub const BEAM_PATTERN_CONSTANT: f64 = 2.07123;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn positive(name: &'static str, value: f64) -> Result<f64, ChannelError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(ChannelError::InvalidParameter { name, value })
    }
}

/// Free-space path gain `(λ / 4πd)²`.
pub fn free_space_gain(wavelength: f64, distance: f64) -> Result<f64, ChannelError> {
    let wavelength = positive("wavelength", wavelength)?;
    let distance = positive("distance", distance)?;
    Ok((wavelength / (4.0 * PI * distance)).powi(2))
}

/// Transmit gain of a single-feed-per-beam spot towards a point `phi` off
/// the beam boresight.
///
/// `G_T_max · [J1(u)/(2u) + 36·J3(u)/u³]²` with
/// `u = 2.07123·sin(φ)/sin(φ_3dB)`.
pub fn beam_gain(phi: f64, phi_3db: f64, g_t_max: f64) -> Result<f64, ChannelError> {
    if !(0.0..FRAC_PI_2).contains(&phi) {
        return Err(ChannelError::InvalidParameter {
            name: "phi",
            value: phi,
        });
    }
    if !(phi_3db > 0.0 && phi_3db < FRAC_PI_2) {
        return Err(ChannelError::InvalidParameter {
            name: "phi_3db",
            value: phi_3db,
        });
    }
    let g_t_max = positive("g_t_max", g_t_max)?;
    let u = BEAM_PATTERN_CONSTANT * phi.sin() / phi_3db.sin();
    Ok(g_t_max * beam_pattern_bracket(u).powi(2))
}

/// `J1(u)/(2u) + 36·J3(u)/u³`, continuous at `u = 0` where it equals 1.
pub(crate) fn beam_pattern_bracket(u: f64) -> f64 {
    if u.abs() < 1e-3 {
        // Leading terms of the two Bessel series.
        1.0 - 5.0 * u * u / 64.0
    } else {
        libm::j1(u) / (2.0 * u) + 36.0 * libm::jn(3, u) / u.powi(3)
    }
}

/// Reflector diameter over wavelength implied by a peak gain, from the
/// `G_max = 20·log10(D/λ) + 7.7 dBi` relation of the off-axis envelope.
pub fn d_over_lambda_for_peak(g_max_dbi: f64) -> f64 {
    10f64.powf((g_max_dbi - 7.7) / 20.0)
}

/// Off-axis receive envelope of a user terminal (Recommendation ITU-R
/// S.1428-1), anchored to the configured peak gain.
///
/// Two diameter regimes are supported, `25 < D/λ ≤ 100` and `D/λ > 100`.
/// The returned gain never exceeds `g_r_max` and equals it exactly on axis.
pub fn gu_rx_gain(theta: f64, g_r_max: f64, d_over_lambda: f64) -> Result<f64, ChannelError> {
    if !(0.0..=PI).contains(&theta) {
        return Err(ChannelError::InvalidParameter {
            name: "theta",
            value: theta,
        });
    }
    let g_r_max = positive("g_r_max", g_r_max)?;
    if !(d_over_lambda.is_finite() && d_over_lambda > 25.0) {
        return Err(ChannelError::InvalidParameter {
            name: "d_over_lambda",
            value: d_over_lambda,
        });
    }
    let g_max_db = linear_to_db(g_r_max);
    let phi = theta.to_degrees();
    let dl = d_over_lambda;

    let (g1, phi_r) = if dl > 100.0 {
        (-1.0 + 15.0 * dl.log10(), 15.85 * dl.powf(-0.6))
    } else {
        let phi_r = 95.0 / dl;
        (29.0 - 25.0 * phi_r.log10(), phi_r)
    };
    let g1 = g1.min(g_max_db);
    let phi_m = 20.0 / dl * (g_max_db - g1).max(0.0).sqrt();

    let mainlobe_loss_db = 2.5e-3 * (dl * phi).powi(2);
    if phi < phi_m {
        return Ok(g_r_max * db_to_linear(-mainlobe_loss_db));
    }
    let gain_db = if phi < phi_r {
        g1
    } else if dl > 100.0 {
        match phi {
            p if p < 10.0 => 29.0 - 25.0 * p.log10(),
            p if p < 34.1 => 34.0 - 30.0 * p.log10(),
            p if p < 80.0 => -12.0,
            p if p < 120.0 => -7.0,
            _ => -12.0,
        }
    } else {
        match phi {
            p if p < 33.1 => 29.0 - 25.0 * p.log10(),
            p if p < 80.0 => -9.0,
            p if p < 120.0 => -4.0,
            _ => -9.0,
        }
    };
    Ok(db_to_linear(gain_db.min(g_max_db)))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Integer-order Bessel function from its integral representation,
    /// `J_n(x) = (1/π)∫_0^π cos(nτ − x·sin τ) dτ`, by the trapezoidal rule
    /// (spectrally accurate for this periodic integrand).
    fn bessel_quadrature(n: i32, x: f64) -> f64 {
        let m = 400;
        let h = PI / m as f64;
        let f = |t: f64| (n as f64 * t - x * t.sin()).cos();
        let mut acc = 0.5 * (f(0.0) + f(PI));
        for i in 1..m {
            acc += f(i as f64 * h);
        }
        acc * h / PI
    }

    #[test]
    fn free_space_gain_values() {
        let g = free_space_gain(0.015, 6e5).unwrap();
        assert!((g / 3.957e-18 - 1.0).abs() < 1e-3, "{g}");
        assert!((linear_to_db(g) + 174.0).abs() < 0.05);
        let geo = free_space_gain(0.015, 3.5786e7).unwrap();
        assert!((geo / 1.113e-21 - 1.0).abs() < 1e-3, "{geo}");
        let ratio = free_space_gain(0.015, 1.2e6).unwrap() / g;
        assert!((ratio - 0.25).abs() < 1e-15);
    }

    #[test]
    fn free_space_gain_rejects_bad_inputs() {
        assert!(free_space_gain(0.0, 1.0).is_err());
        assert!(free_space_gain(0.01, -3.0).is_err());
        assert!(free_space_gain(f64::NAN, 3.0).is_err());
    }

    #[test]
    fn bracket_matches_quadrature_bessel() {
        for &u in &[0.1, 0.3, 1.0, 2.07123, 3.5, 7.0, 15.0, 30.0] {
            let oracle =
                bessel_quadrature(1, u) / (2.0 * u) + 36.0 * bessel_quadrature(3, u) / u.powi(3);
            assert!((beam_pattern_bracket(u) - oracle).abs() < 1e-10, "u={u}");
        }
        // below the quadrature's reach the two-term series is the oracle
        for &u in &[1e-2f64, 3e-3] {
            let series = 1.0 - 5.0 * u * u / 64.0 + 19.0 * u.powi(4) / 7680.0;
            assert!((beam_pattern_bracket(u) - series).abs() < 1e-9, "u={u}");
        }
    }

    #[test]
    fn beam_gain_on_axis_and_at_half_power() {
        let g_t = db_to_linear(30.5);
        let phi_3db = (35e3f64 / 600e3).atan();
        assert_eq!(beam_gain(0.0, phi_3db, g_t).unwrap(), g_t);
        let at_edge = beam_gain(phi_3db, phi_3db, g_t).unwrap();
        assert!((linear_to_db(at_edge / (g_t / 2.0))).abs() < 0.1);
        // continuity across the series switch-over
        let u_small = 0.999e-3;
        let u_large = 1.001e-3;
        assert!((beam_pattern_bracket(u_small) - beam_pattern_bracket(u_large)).abs() < 1e-9);
    }

    #[test]
    fn beam_gain_is_symmetric_in_sign_of_angle_offset() {
        // Mirror-symmetric users see the same off-boresight angle magnitude.
        let phi_3db = 0.05;
        let a = beam_gain(0.02, phi_3db, 100.0).unwrap();
        let b = beam_gain((-0.02f64).abs(), phi_3db, 100.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn beam_gain_rejects_out_of_range_angles() {
        assert!(beam_gain(FRAC_PI_2, 0.05, 1.0).is_err());
        assert!(beam_gain(-0.1, 0.05, 1.0).is_err());
        assert!(beam_gain(0.1, 0.0, 1.0).is_err());
    }

    #[test]
    fn rx_gain_peak_and_monotone_mainlobe() {
        let g_max = db_to_linear(39.7);
        let dl = d_over_lambda_for_peak(39.7);
        assert_eq!(gu_rx_gain(0.0, g_max, dl).unwrap(), g_max);
        let mut prev = f64::INFINITY;
        for i in 0..=400 {
            let theta = (20.0 * i as f64 / 400.0).to_radians();
            let g = gu_rx_gain(theta, g_max, dl).unwrap();
            assert!(g <= prev * (1.0 + 1e-12), "not monotone at {theta}");
            prev = g;
        }
    }

    #[test]
    fn rx_gain_three_degrees_is_outside_mainlobe() {
        let g_max = db_to_linear(39.7);
        let dl = d_over_lambda_for_peak(39.7);
        let g = gu_rx_gain(3f64.to_radians(), g_max, dl).unwrap();
        assert!(g < g_max / 10.0);
        // 29 − 25·log10(3) dBi in the far-sidelobe segment
        assert!((linear_to_db(g) - (29.0 - 25.0 * 3f64.log10())).abs() < 1e-9);
    }

    #[test]
    fn rx_gain_large_dish_regime() {
        let dl: f64 = 150.0;
        let g_max_db = 20.0 * dl.log10() + 8.4;
        let g_max = db_to_linear(g_max_db);
        let g = gu_rx_gain(5f64.to_radians(), g_max, dl).unwrap();
        assert!((linear_to_db(g) - (29.0 - 25.0 * 5f64.log10())).abs() < 1e-9);
        let g = gu_rx_gain(20f64.to_radians(), g_max, dl).unwrap();
        assert!((linear_to_db(g) - (34.0 - 30.0 * 20f64.log10())).abs() < 1e-9);
        let g = gu_rx_gain(50f64.to_radians(), g_max, dl).unwrap();
        assert!((linear_to_db(g) + 12.0).abs() < 1e-9);
    }

    #[test]
    fn rx_gain_rejects_small_dishes() {
        assert!(gu_rx_gain(0.1, 10.0, 20.0).is_err());
        assert!(gu_rx_gain(4.0, 10.0, 50.0).is_err());
    }
}
