use crate::antenna::d_over_lambda_for_peak;
use crate::baselines::SchemeId;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// One invalid configuration field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("could not parse configuration: {0}")]
    Parse(String),
    #[error("invalid configuration: {}", join_fields(.0))]
    Invalid(Vec<FieldError>),
}

fn join_fields(errors: &[FieldError]) -> String {
    errors
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Which GU channel the randomization rescale step protects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LeakageChannel {
    /// The transmitter's estimate `ẑ`.
    #[default]
    Estimated,
    /// The realised channel `z = ẑ + e`.
    True,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkConfig {
    pub carrier_frequency_hz: f64,
    pub bandwidth_hz: f64,
    pub noise_temperature_k: f64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            carrier_frequency_hz: 20e9,
            bandwidth_hz: 500e6,
            noise_temperature_k: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LeoConfig {
    pub altitude_m: f64,
    pub tx_gain_dbi: f64,
    /// Spot-beam footprint radius; sets `φ_3dB = atan(r / altitude)`.
    pub beam_radius_m: f64,
    pub feeds: usize,
    pub power_w: f64,
    /// Geocentric angle to a second LEO satellite in the same orbit.
    pub second_separation_deg: Option<f64>,
}

impl Default for LeoConfig {
    fn default() -> Self {
        Self {
            altitude_m: 600e3,
            tx_gain_dbi: 30.5,
            beam_radius_m: 35e3,
            feeds: 2,
            power_w: 10.0,
            second_separation_deg: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeoConfig {
    pub altitude_m: f64,
    pub tx_gain_dbi: f64,
    pub beam_radius_m: f64,
    pub feeds: usize,
    pub power_w: f64,
}

impl Default for GeoConfig {
    fn default() -> Self {
        Self {
            altitude_m: 35_786e3,
            tx_gain_dbi: 50.5,
            beam_radius_m: 180e3,
            feeds: 2,
            power_w: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UserConfig {
    /// Peak receive gain shared by LU and GU terminals.
    pub rx_gain_dbi: f64,
    /// Terminal dish diameter over wavelength for the off-axis envelope.
    /// Derived from the peak gain when absent.
    pub d_over_lambda: Option<f64>,
    pub lu_count: usize,
    pub gu_count: usize,
    /// Distance of each LU from the centre of its LEO beam.
    pub lu_spacing_m: f64,
    /// Spread of the GU cluster around the LEO beam midpoint.
    pub gu_spacing_m: f64,
    /// Angle at the GUs between the GEO boresight and the LEO direction.
    pub off_boresight_deg: f64,
    /// Per-LU traffic demand in bits/s/Hz.
    pub demands: Vec<f64>,
}

impl Default for UserConfig {
    fn default() -> Self {
        Self {
            rx_gain_dbi: 39.7,
            d_over_lambda: None,
            lu_count: 4,
            gu_count: 2,
            lu_spacing_m: 25e3,
            gu_spacing_m: 0.0,
            off_boresight_deg: 0.2,
            demands: vec![1.5, 1.0, 2.5, 1.5],
        }
    }
}

impl UserConfig {
    pub fn effective_d_over_lambda(&self) -> f64 {
        self.d_over_lambda
            .unwrap_or_else(|| d_over_lambda_for_peak(self.rx_gain_dbi))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignConfig {
    /// Interference-leakage threshold `I_th` (noise-normalised, may be `inf`).
    pub il_threshold: f64,
    pub csi_error_variance: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub random_vectors: usize,
    pub leakage_channel: LeakageChannel,
    pub band_split_fraction: f64,
    /// Whether band splitting keeps the common stream.
    pub band_split_common: bool,
    /// Progressive pitch: switch off every beam whose boresight is within
    /// this angle of a GU as seen from the LEO. When absent, the single beam
    /// nearest the GU cluster is switched off.
    pub pitch_guard_deg: Option<f64>,
}

impl Default for DesignConfig {
    fn default() -> Self {
        Self {
            il_threshold: 1.0,
            csi_error_variance: 0.05,
            tolerance: 1e-6,
            max_iterations: 20,
            random_vectors: 5000,
            leakage_channel: LeakageChannel::Estimated,
            band_split_fraction: 0.5,
            band_split_common: true,
            pitch_guard_deg: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRange {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl SweepRange {
    pub fn points(&self) -> Vec<f64> {
        match self.steps {
            0 => Vec::new(),
            1 => vec![self.start],
            n => (0..n)
                .map(|i| self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub off_boresight_deg: SweepRange,
    pub separation_deg: SweepRange,
    /// Fixed GU off-boresight angle of the demand bar experiment.
    pub bar_off_boresight_deg: f64,
    pub draws: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            off_boresight_deg: SweepRange {
                start: -5.0,
                stop: 5.0,
                steps: 21,
            },
            separation_deg: SweepRange {
                start: 2.0,
                stop: 16.0,
                steps: 8,
            },
            bar_off_boresight_deg: 0.2,
            draws: 20,
        }
    }
}

/// Full parameterisation of one coexistence snapshot and its experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub scheme: SchemeId,
    pub link: LinkConfig,
    pub leo: LeoConfig,
    pub geo: GeoConfig,
    pub users: UserConfig,
    pub design: DesignConfig,
    pub sweep: SweepConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            scheme: SchemeId::SpcRsmaTtm,
            link: LinkConfig::default(),
            leo: LeoConfig::default(),
            geo: GeoConfig::default(),
            users: UserConfig::default(),
            design: DesignConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

impl ScenarioConfig {
    /// Parses and validates a TOML document. Missing keys take defaults.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let config: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration is always serialisable")
    }

    pub fn wavelength(&self) -> f64 {
        crate::channel::SPEED_OF_LIGHT / self.link.carrier_frequency_hz
    }

    /// Checks every field and reports all violations at once.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errors = Vec::new();
        let mut check = |ok: bool, field: &'static str, message: String| {
            if !ok {
                errors.push(FieldError { field, message });
            }
        };
        let pos = |x: f64| x.is_finite() && x > 0.0;

        check(
            pos(self.link.carrier_frequency_hz),
            "link.carrier_frequency_hz",
            "must be positive".into(),
        );
        check(
            pos(self.link.bandwidth_hz),
            "link.bandwidth_hz",
            "must be positive".into(),
        );
        check(
            pos(self.link.noise_temperature_k),
            "link.noise_temperature_k",
            "must be positive".into(),
        );

        check(
            pos(self.leo.altitude_m),
            "leo.altitude_m",
            "must be positive".into(),
        );
        check(
            self.leo.tx_gain_dbi.is_finite(),
            "leo.tx_gain_dbi",
            "must be finite".into(),
        );
        check(
            pos(self.leo.beam_radius_m),
            "leo.beam_radius_m",
            "must be positive".into(),
        );
        check(
            self.leo.feeds >= 1,
            "leo.feeds",
            "need at least one feed".into(),
        );
        check(
            self.leo.power_w.is_finite() && self.leo.power_w >= 0.0,
            "leo.power_w",
            format!("must be a non-negative power, got {}", self.leo.power_w),
        );
        if let Some(s) = self.leo.second_separation_deg {
            check(
                s.is_finite() && s > 0.0 && s < 90.0,
                "leo.second_separation_deg",
                "must lie in (0, 90) degrees".into(),
            );
        }

        check(
            pos(self.geo.altitude_m),
            "geo.altitude_m",
            "must be positive".into(),
        );
        check(
            self.geo.tx_gain_dbi.is_finite(),
            "geo.tx_gain_dbi",
            "must be finite".into(),
        );
        check(
            pos(self.geo.beam_radius_m),
            "geo.beam_radius_m",
            "must be positive".into(),
        );
        check(
            self.geo.feeds >= 1,
            "geo.feeds",
            "need at least one feed".into(),
        );
        check(
            self.geo.power_w.is_finite() && self.geo.power_w >= 0.0,
            "geo.power_w",
            format!("must be a non-negative power, got {}", self.geo.power_w),
        );

        check(
            self.users.rx_gain_dbi.is_finite(),
            "users.rx_gain_dbi",
            "must be finite".into(),
        );
        let dl = self.users.effective_d_over_lambda();
        check(
            dl.is_finite() && dl > 25.0,
            "users.d_over_lambda",
            format!("off-axis envelope needs D/λ > 25, got {dl}"),
        );
        check(
            self.users.lu_count >= 1,
            "users.lu_count",
            "need at least one LU".into(),
        );
        check(
            self.users.gu_count >= 1,
            "users.gu_count",
            "need at least one GU".into(),
        );
        check(
            self.users.lu_spacing_m.is_finite() && self.users.lu_spacing_m >= 0.0,
            "users.lu_spacing_m",
            "must be non-negative".into(),
        );
        check(
            self.users.gu_spacing_m.is_finite() && self.users.gu_spacing_m >= 0.0,
            "users.gu_spacing_m",
            "must be non-negative".into(),
        );
        check(
            self.users.off_boresight_deg.is_finite() && self.users.off_boresight_deg.abs() <= 180.0,
            "users.off_boresight_deg",
            "must lie in [-180, 180]".into(),
        );
        check(
            self.users.demands.len() == self.users.lu_count,
            "users.demands",
            format!(
                "expected {} demands, got {}",
                self.users.lu_count,
                self.users.demands.len()
            ),
        );
        check(
            self.users.demands.iter().all(|t| !t.is_nan() && *t >= 0.0),
            "users.demands",
            "demands must be non-negative".into(),
        );

        let d = &self.design;
        check(
            !d.il_threshold.is_nan() && d.il_threshold > 0.0,
            "design.il_threshold",
            "must be positive (inf disables the constraint)".into(),
        );
        check(
            d.csi_error_variance.is_finite() && d.csi_error_variance >= 0.0,
            "design.csi_error_variance",
            "must be non-negative".into(),
        );
        check(
            pos(d.tolerance),
            "design.tolerance",
            "must be positive".into(),
        );
        check(
            d.max_iterations >= 1,
            "design.max_iterations",
            "must be at least 1".into(),
        );
        check(
            d.band_split_fraction > 0.0 && d.band_split_fraction <= 1.0,
            "design.band_split_fraction",
            "must lie in (0, 1]".into(),
        );
        if let Some(g) = d.pitch_guard_deg {
            check(
                g.is_finite() && g >= 0.0,
                "design.pitch_guard_deg",
                "must be non-negative".into(),
            );
        }

        let s = &self.sweep;
        for (range, name) in [
            (&s.off_boresight_deg, "sweep.off_boresight_deg"),
            (&s.separation_deg, "sweep.separation_deg"),
        ] {
            check(
                range.start.is_finite() && range.stop.is_finite(),
                name,
                "bounds must be finite".into(),
            );
        }
        check(
            s.bar_off_boresight_deg.is_finite(),
            "sweep.bar_off_boresight_deg",
            "must be finite".into(),
        );
        check(s.draws >= 1, "sweep.draws", "need at least one draw".into());

        if errors.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errors))
        }
    }
}
