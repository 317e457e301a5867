//! Snapshot geometry and noise-normalised channel realisations.
//!
//! The scenario lives in a flat local frame: `x` runs along the LEO ground
//! track, `z` is up, and the LEO satellite sits above the origin. Ground
//! users are on the `z = 0` plane. The GEO satellite is placed along the
//! direction that makes the GUs see the LEO satellite at the configured
//! off-boresight angle. A second LEO satellite, when present, is positioned
//! on the same orbit using the spherical Earth.

use crate::antenna::{beam_gain, db_to_linear, free_space_gain, gu_rx_gain};
use crate::linalg::complex_gaussian;
use crate::scenario::ScenarioConfig;
use crate::{CVector, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const EARTH_RADIUS_M: f64 = 6_371e3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
}

type Point = [f64; 3];

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm(a: Point) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

/// Angle between two directions, robust near 0 and π.
fn angle_between(a: Point, b: Point) -> f64 {
    let cross = [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ];
    let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    norm(cross).atan2(dot)
}

/// One satellite-to-user link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkGeometry {
    pub satellite_altitude: f64,
    pub user_ground_position: [f64; 2],
    pub slant_distance: f64,
    /// Angle at the satellite between each beam boresight and the user.
    pub beam_angles: Vec<f64>,
    /// Angle at the user between its antenna boresight and this satellite.
    pub rx_off_axis: f64,
    /// False when the satellite is below the user's horizon.
    pub visible: bool,
}

fn link(
    sat: Point,
    altitude: f64,
    beam_centres: &[Point],
    user: Point,
    rx_boresight: Option<Point>,
) -> LinkGeometry {
    let to_sat = sub(sat, user);
    let beam_angles = beam_centres
        .iter()
        .map(|&c| angle_between(sub(user, sat), sub(c, sat)))
        .collect();
    let rx_off_axis = rx_boresight.map_or(0.0, |b| angle_between(to_sat, sub(b, user)));
    LinkGeometry {
        satellite_altitude: altitude,
        user_ground_position: [user[0], user[1]],
        slant_distance: norm(to_sat),
        beam_angles,
        rx_off_axis,
        visible: to_sat[2] > 0.0,
    }
}

/// Second LEO satellite in the same orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondLeoGeometry {
    pub separation: f64,
    pub to_lu: Vec<LinkGeometry>,
    pub to_gu: Vec<LinkGeometry>,
}

/// Deterministic geometry of one snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotGeometry {
    pub leo_to_lu: Vec<LinkGeometry>,
    pub leo_to_gu: Vec<LinkGeometry>,
    pub geo_to_gu: Vec<LinkGeometry>,
    pub geo_to_lu: Vec<LinkGeometry>,
    pub second_leo: Option<SecondLeoGeometry>,
    /// GEO beam serving each LU and GU (nearest beam centre, ties to the
    /// lowest index).
    pub lu_geo_beam: Vec<usize>,
    pub gu_geo_beam: Vec<usize>,
    pub leo_beam_centres: Vec<[f64; 2]>,
    /// Angle between each GEO beam boresight and every GEO feed boresight.
    pub geo_beam_to_feed: Vec<Vec<f64>>,
    pub gu_off_boresight: f64,
    pub leo_phi_3db: f64,
    pub geo_phi_3db: f64,
}

/// LU ground positions: users are dealt to beams in contiguous blocks and
/// spread symmetrically about each beam centre along the ground track.
pub fn lu_positions(lu_count: usize, beam_x: &[f64], spacing: f64) -> Vec<[f64; 2]> {
    let n = beam_x.len();
    let beam_of = |k: usize| k * n / lu_count;
    (0..lu_count)
        .map(|k| {
            let beam = beam_of(k);
            let members: Vec<usize> = (0..lu_count).filter(|&j| beam_of(j) == beam).collect();
            let m = members.len();
            let slot = members.iter().position(|&j| j == k).unwrap();
            let offset = if m == 1 {
                0.0
            } else {
                spacing * (2.0 * slot as f64 / (m - 1) as f64 - 1.0)
            };
            [beam_x[beam] + offset, 0.0]
        })
        .collect()
}

fn nearest(point: [f64; 2], centres: &[[f64; 2]]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centres.iter().enumerate() {
        let d = (point[0] - c[0]).hypot(point[1] - c[1]);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

impl SnapshotGeometry {
    pub fn from_config(config: &ScenarioConfig) -> Result<Self, ChannelError> {
        let leo = &config.leo;
        let geo = &config.geo;
        let users = &config.users;
        let a_l = leo.altitude_m;
        let a_g = geo.altitude_m;
        let r_l = leo.beam_radius_m;
        let r_g = geo.beam_radius_m;
        let theta_g = users.off_boresight_deg.to_radians();

        let leo_sat: Point = [0.0, 0.0, a_l];
        let leo_x: Vec<f64> = (0..leo.feeds)
            .map(|n| (n as f64 - (leo.feeds as f64 - 1.0) / 2.0) * 2.0 * r_l)
            .collect();
        let leo_centres: Vec<Point> = leo_x.iter().map(|&x| [x, 0.0, 0.0]).collect();
        let geo_sat: Point = [a_g * theta_g.sin(), 0.0, a_g * theta_g.cos()];
        let geo_centres: Vec<Point> = (0..geo.feeds)
            .map(|n| [n as f64 * 2.0 * r_g, 0.0, 0.0])
            .collect();
        let geo_centres_2d: Vec<[f64; 2]> = geo_centres.iter().map(|c| [c[0], c[1]]).collect();

        let lus: Vec<Point> = lu_positions(users.lu_count, &leo_x, users.lu_spacing_m)
            .into_iter()
            .map(|p| [p[0], p[1], 0.0])
            .collect();
        let gus: Vec<Point> = (0..users.gu_count)
            .map(|g| {
                let y = (g as f64 - (users.gu_count as f64 - 1.0) / 2.0) * users.gu_spacing_m;
                [0.0, y, 0.0]
            })
            .collect();

        for (k, lu) in lus.iter().enumerate() {
            let d = leo_x
                .iter()
                .map(|x| (lu[0] - x).hypot(lu[1]))
                .fold(f64::INFINITY, f64::min);
            if d > 2.0 * r_l {
                return Err(ChannelError::Geometry(format!(
                    "LU {} lies {:.0} m from the nearest LEO beam centre, outside coverage",
                    k + 1,
                    d
                )));
            }
        }
        if geo_sat[2] <= 0.0 {
            return Err(ChannelError::Geometry(format!(
                "GEO satellite below the horizon at off-boresight angle {} deg",
                users.off_boresight_deg
            )));
        }

        let leo_to_lu: Vec<_> = lus
            .iter()
            .map(|&u| link(leo_sat, a_l, &leo_centres, u, None))
            .collect();
        let leo_to_gu: Vec<_> = gus
            .iter()
            .map(|&u| link(leo_sat, a_l, &leo_centres, u, Some(geo_sat)))
            .collect();
        let geo_to_gu: Vec<_> = gus
            .iter()
            .map(|&u| link(geo_sat, a_g, &geo_centres, u, None))
            .collect();
        let geo_to_lu: Vec<_> = lus
            .iter()
            .map(|&u| link(geo_sat, a_g, &geo_centres, u, Some(leo_sat)))
            .collect();

        let second_leo = leo.second_separation_deg.map(|deg| {
            let s = deg.to_radians();
            let centre: Point = [0.0, 0.0, -EARTH_RADIUS_M];
            let radial = [s.sin(), 0.0, s.cos()];
            let along = [s.cos(), 0.0, -s.sin()];
            let at = |r: f64| -> Point {
                [
                    centre[0] + r * radial[0],
                    centre[1] + r * radial[1],
                    centre[2] + r * radial[2],
                ]
            };
            let sat = at(EARTH_RADIUS_M + a_l);
            let nadir = at(EARTH_RADIUS_M);
            let centres: Vec<Point> = leo_x
                .iter()
                .map(|&x| [nadir[0] + x * along[0], nadir[1], nadir[2] + x * along[2]])
                .collect();
            SecondLeoGeometry {
                separation: s,
                to_lu: lus
                    .iter()
                    .map(|&u| link(sat, a_l, &centres, u, Some(leo_sat)))
                    .collect(),
                to_gu: gus
                    .iter()
                    .map(|&u| link(sat, a_l, &centres, u, Some(geo_sat)))
                    .collect(),
            }
        });

        let geo_beam_to_feed = geo_centres
            .iter()
            .map(|&b| {
                geo_centres
                    .iter()
                    .map(|&f| angle_between(sub(b, geo_sat), sub(f, geo_sat)))
                    .collect()
            })
            .collect();

        for l in leo_to_lu
            .iter()
            .chain(&leo_to_gu)
            .chain(&geo_to_gu)
            .chain(&geo_to_lu)
        {
            if !l.visible || l.beam_angles.iter().any(|&p| p >= FRAC_PI_2) {
                return Err(ChannelError::Geometry(format!(
                    "user at {:?} is not covered by the satellite",
                    l.user_ground_position
                )));
            }
        }

        Ok(Self {
            lu_geo_beam: lus
                .iter()
                .map(|u| nearest([u[0], u[1]], &geo_centres_2d))
                .collect(),
            gu_geo_beam: gus
                .iter()
                .map(|u| nearest([u[0], u[1]], &geo_centres_2d))
                .collect(),
            leo_beam_centres: leo_x.iter().map(|&x| [x, 0.0]).collect(),
            geo_beam_to_feed,
            gu_off_boresight: theta_g.abs(),
            leo_phi_3db: (r_l / a_l).atan(),
            geo_phi_3db: (r_g / a_g).atan(),
            leo_to_lu,
            leo_to_gu,
            geo_to_gu,
            geo_to_lu,
            second_leo,
        })
    }
}

/// Link-budget constants shared by every channel entry.
struct Budget {
    wavelength: f64,
    noise_power: f64,
    g_r_max: f64,
    d_over_lambda: f64,
}

impl Budget {
    fn new(config: &ScenarioConfig) -> Self {
        Self {
            wavelength: config.wavelength(),
            noise_power: BOLTZMANN * config.link.bandwidth_hz * config.link.noise_temperature_k,
            g_r_max: db_to_linear(config.users.rx_gain_dbi),
            d_over_lambda: config.users.effective_d_over_lambda(),
        }
    }

    /// Per-feed channel power `|entry|²` (noise-normalised).
    fn entry_powers(
        &self,
        link: &LinkGeometry,
        phi_3db: f64,
        g_t_max: f64,
    ) -> Result<Vec<f64>, ChannelError> {
        if !link.visible {
            return Ok(vec![0.0; link.beam_angles.len()]);
        }
        let fspl = free_space_gain(self.wavelength, link.slant_distance)?;
        let g_rx = if link.rx_off_axis == 0.0 {
            self.g_r_max
        } else {
            gu_rx_gain(link.rx_off_axis.min(PI), self.g_r_max, self.d_over_lambda)?
        };
        link.beam_angles
            .iter()
            .map(|&phi| {
                let b = if phi < FRAC_PI_2 {
                    beam_gain(phi, phi_3db, g_t_max)?
                } else {
                    0.0
                };
                Ok(fspl * g_rx * b / self.noise_power)
            })
            .collect()
    }
}

fn draw_vector<R: Rng>(rng: &mut R, powers: &[f64]) -> CVector {
    CVector::from_iterator(
        powers.len(),
        powers.iter().map(|&p| {
            let phase = rng.random_range(0.0..2.0 * PI);
            C64::from_polar(p.sqrt(), phase)
        }),
    )
}

fn add_error<R: Rng>(rng: &mut R, v: &CVector, variance: f64) -> CVector {
    if variance == 0.0 {
        return v.clone();
    }
    v.map(|x| x + complex_gaussian(rng, variance))
}

/// Channels seen from a second LEO satellite.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondLeoChannels {
    pub h: Vec<CVector>,
    pub z: Vec<CVector>,
}

/// One realisation of every link in the snapshot. Entries are normalised
/// by the noise power, so `noise_variance` is exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub h_hat: Vec<CVector>,
    pub z_hat: Vec<CVector>,
    pub f: Vec<CVector>,
    pub g: Vec<CVector>,
    pub true_h: Vec<CVector>,
    pub true_z: Vec<CVector>,
    pub sigma_e2: f64,
    pub noise_variance: f64,
    pub lu_geo_beam: Vec<usize>,
    pub gu_geo_beam: Vec<usize>,
    /// Extra interference power at each LU and GU from outside the LEO
    /// system under design (for instance a neighbouring LEO satellite).
    pub external_lu: Vec<f64>,
    pub external_gu: Vec<f64>,
    pub second_leo: Option<SecondLeoChannels>,
}

impl ChannelSet {
    pub fn n_l(&self) -> usize {
        self.h_hat
            .first()
            .or(self.z_hat.first())
            .map_or(0, |v| v.len())
    }

    pub fn n_g(&self) -> usize {
        self.f.first().or(self.g.first()).map_or(0, |v| v.len())
    }

    pub fn k_l(&self) -> usize {
        self.h_hat.len()
    }

    pub fn k_g(&self) -> usize {
        self.z_hat.len()
    }

    /// Builds a channel set from explicit vectors with no errors or
    /// external interference. GEO beam association defaults to beam 0.
    pub fn from_parts(
        h_hat: Vec<CVector>,
        z_hat: Vec<CVector>,
        f: Vec<CVector>,
        g: Vec<CVector>,
        sigma_e2: f64,
    ) -> Result<Self, ChannelError> {
        let set = Self {
            true_h: h_hat.clone(),
            true_z: z_hat.clone(),
            lu_geo_beam: vec![0; h_hat.len()],
            gu_geo_beam: vec![0; z_hat.len()],
            external_lu: vec![0.0; h_hat.len()],
            external_gu: vec![0.0; z_hat.len()],
            h_hat,
            z_hat,
            f,
            g,
            sigma_e2,
            noise_variance: 1.0,
            second_leo: None,
        };
        set.check()?;
        Ok(set)
    }

    /// Verifies dimensions and finiteness.
    pub fn check(&self) -> Result<(), ChannelError> {
        let (n_l, n_g) = (self.n_l(), self.n_g());
        let dims = |vs: &[CVector], n: usize| -> Result<(), ChannelError> {
            for v in vs {
                if v.len() != n {
                    return Err(ChannelError::Dimension {
                        expected: n,
                        found: v.len(),
                    });
                }
                if v.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
                    return Err(ChannelError::Geometry("non-finite channel entry".into()));
                }
            }
            Ok(())
        };
        dims(&self.h_hat, n_l)?;
        dims(&self.z_hat, n_l)?;
        dims(&self.true_h, n_l)?;
        dims(&self.true_z, n_l)?;
        dims(&self.f, n_g)?;
        dims(&self.g, n_g)?;
        let count = |expected: usize, found: usize| {
            if expected == found {
                Ok(())
            } else {
                Err(ChannelError::Dimension { expected, found })
            }
        };
        count(self.k_l(), self.true_h.len())?;
        count(self.k_l(), self.g.len())?;
        count(self.k_l(), self.lu_geo_beam.len())?;
        count(self.k_l(), self.external_lu.len())?;
        count(self.k_g(), self.true_z.len())?;
        count(self.k_g(), self.f.len())?;
        count(self.k_g(), self.gu_geo_beam.len())?;
        count(self.k_g(), self.external_gu.len())?;
        if !(self.sigma_e2.is_finite() && self.sigma_e2 >= 0.0) {
            return Err(ChannelError::InvalidParameter {
                name: "sigma_e2",
                value: self.sigma_e2,
            });
        }
        Ok(())
    }

    /// Keeps only the listed LEO feeds; the rest are treated as switched off.
    pub fn restrict_feeds(&self, feeds: &[usize]) -> ChannelSet {
        let pick = |v: &CVector| CVector::from_iterator(feeds.len(), feeds.iter().map(|&i| v[i]));
        let pick_all = |vs: &[CVector]| vs.iter().map(pick).collect::<Vec<_>>();
        ChannelSet {
            h_hat: pick_all(&self.h_hat),
            z_hat: pick_all(&self.z_hat),
            true_h: pick_all(&self.true_h),
            true_z: pick_all(&self.true_z),
            second_leo: self.second_leo.as_ref().map(|s| SecondLeoChannels {
                h: pick_all(&s.h),
                z: pick_all(&s.z),
            }),
            ..self.clone()
        }
    }
}

/// Matched GEO beam precoders: beam `n` points at its own centre with
/// power `P_G / N_G`.
pub fn matched_geo_precoders(
    geometry: &SnapshotGeometry,
    config: &ScenarioConfig,
) -> Result<Vec<CVector>, ChannelError> {
    let g_t = db_to_linear(config.geo.tx_gain_dbi);
    let n_g = geometry.geo_beam_to_feed.len();
    let per_beam = config.geo.power_w / n_g as f64;
    geometry
        .geo_beam_to_feed
        .iter()
        .map(|angles| {
            let amps: Vec<f64> = angles
                .iter()
                .map(|&phi| beam_gain(phi, geometry.geo_phi_3db, g_t).map(f64::sqrt))
                .collect::<Result<_, _>>()?;
            let norm = amps.iter().map(|a| a * a).sum::<f64>().sqrt();
            Ok(CVector::from_iterator(
                amps.len(),
                amps.iter().map(|a| C64::from(a / norm * per_beam.sqrt())),
            ))
        })
        .collect()
}

/// Draws one channel realisation for a precomputed geometry.
pub fn build_channel_set_for(
    geometry: &SnapshotGeometry,
    config: &ScenarioConfig,
    seed: u64,
) -> Result<ChannelSet, ChannelError> {
    let budget = Budget::new(config);
    let g_l = db_to_linear(config.leo.tx_gain_dbi);
    let g_g = db_to_linear(config.geo.tx_gain_dbi);
    let sigma_e2 = config.design.csi_error_variance;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut draw =
        |links: &[LinkGeometry], phi_3db: f64, g_t: f64| -> Result<Vec<CVector>, ChannelError> {
            links
                .iter()
                .map(|l| {
                    Ok(draw_vector(
                        &mut rng,
                        &budget.entry_powers(l, phi_3db, g_t)?,
                    ))
                })
                .collect()
        };
    let h_hat = draw(&geometry.leo_to_lu, geometry.leo_phi_3db, g_l)?;
    let z_hat = draw(&geometry.leo_to_gu, geometry.leo_phi_3db, g_l)?;
    let f = draw(&geometry.geo_to_gu, geometry.geo_phi_3db, g_g)?;
    let g = draw(&geometry.geo_to_lu, geometry.geo_phi_3db, g_g)?;
    let true_h = h_hat
        .iter()
        .map(|v| add_error(&mut rng, v, sigma_e2))
        .collect();
    let true_z = z_hat
        .iter()
        .map(|v| add_error(&mut rng, v, sigma_e2))
        .collect();
    // drawn last so the primary links do not depend on its presence
    let second = match &geometry.second_leo {
        Some(s) => {
            let mut draw = |links: &[LinkGeometry]| -> Result<Vec<CVector>, ChannelError> {
                links
                    .iter()
                    .map(|l| {
                        Ok(draw_vector(
                            &mut rng,
                            &budget.entry_powers(l, geometry.leo_phi_3db, g_l)?,
                        ))
                    })
                    .collect()
            };
            Some(SecondLeoChannels {
                h: draw(&s.to_lu)?,
                z: draw(&s.to_gu)?,
            })
        }
        None => None,
    };

    let set = ChannelSet {
        external_lu: vec![0.0; h_hat.len()],
        external_gu: vec![0.0; z_hat.len()],
        lu_geo_beam: geometry.lu_geo_beam.clone(),
        gu_geo_beam: geometry.gu_geo_beam.clone(),
        h_hat,
        z_hat,
        f,
        g,
        true_h,
        true_z,
        sigma_e2,
        noise_variance: 1.0,
        second_leo: second,
    };
    set.check()?;
    Ok(set)
}

/// Builds the geometry from `config` and draws one channel realisation.
/// Identical seeds give bit-identical channel sets.
pub fn build_channel_set(config: &ScenarioConfig, seed: u64) -> Result<ChannelSet, ChannelError> {
    let geometry = SnapshotGeometry::from_config(config)?;
    build_channel_set_for(&geometry, config, seed)
}
