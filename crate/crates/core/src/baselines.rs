//! The proposed scheme and the six schemes it is compared against.

use crate::channel::{ChannelSet, SnapshotGeometry};
use crate::optimizer::{
    design, Design, DesignInputs, ObjectiveKind, OptimizerError, RandomizationSettings, SolveTrace,
    StreamLayout,
};
use crate::scenario::ScenarioConfig;
use crate::signal::{self, FeasibilityLimits, PrecoderSolution, RateBreakdown};
use crate::{CVector, C64};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SchemeId {
    SpcRsmaTtm,
    RsmaTtm,
    SdmaTtm,
    ProgressivePitchTtm,
    BandSplitTtm,
    SpcRsmaStm,
    SpcRsmaMmf,
}

impl SchemeId {
    pub const ALL: [SchemeId; 7] = [
        SchemeId::SpcRsmaTtm,
        SchemeId::RsmaTtm,
        SchemeId::SdmaTtm,
        SchemeId::ProgressivePitchTtm,
        SchemeId::BandSplitTtm,
        SchemeId::SpcRsmaStm,
        SchemeId::SpcRsmaMmf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeId::SpcRsmaTtm => "SPC_RSMA_TTM",
            SchemeId::RsmaTtm => "RSMA_TTM",
            SchemeId::SdmaTtm => "SDMA_TTM",
            SchemeId::ProgressivePitchTtm => "PROGRESSIVE_PITCH_TTM",
            SchemeId::BandSplitTtm => "BAND_SPLIT_TTM",
            SchemeId::SpcRsmaStm => "SPC_RSMA_STM",
            SchemeId::SpcRsmaMmf => "SPC_RSMA_MMF",
        }
    }

    /// Whether the scheme is bound by the leakage threshold.
    pub fn protects_gus(self) -> bool {
        self != SchemeId::BandSplitTtm
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownScheme(pub String);

impl fmt::Display for UnknownScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = SchemeId::ALL.iter().map(|s| s.name()).collect();
        write!(
            f,
            "unknown scheme `{}` (expected one of {})",
            self.0,
            names.join(", ")
        )
    }
}

impl std::error::Error for UnknownScheme {}

impl FromStr for SchemeId {
    type Err = UnknownScheme;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wanted = s.trim().to_ascii_uppercase().replace('-', "_");
        SchemeId::ALL
            .into_iter()
            .find(|id| id.name() == wanted)
            .ok_or_else(|| UnknownScheme(s.to_string()))
    }
}

/// Inputs shared by every scheme on one channel realisation.
#[derive(Debug, Clone, Copy)]
pub struct SchemeContext<'a> {
    pub config: &'a ScenarioConfig,
    pub geometry: &'a SnapshotGeometry,
    pub channels: &'a ChannelSet,
    pub geo_precoders: &'a [CVector],
    /// Seed of the randomization step.
    pub seed: u64,
}

/// A scheme's precoders evaluated on the design channels.
#[derive(Debug, Clone)]
pub struct SchemeSolution {
    pub scheme: SchemeId,
    pub solution: PrecoderSolution,
    pub rates: RateBreakdown,
    pub trace: SolveTrace,
    /// Final relaxed objective of the concave-convex iteration.
    pub relaxed_objective: f64,
    /// LEO feeds that were allowed to radiate.
    pub active_feeds: Vec<usize>,
    /// Fraction of the band the LEO system used.
    pub band_fraction: f64,
}

impl SchemeSolution {
    /// Limits the independent checker applies to this scheme.
    pub fn limits(&self, config: &ScenarioConfig) -> FeasibilityLimits {
        FeasibilityLimits {
            power: config.leo.power_w,
            leakage_threshold: if self.scheme.protects_gus()
                && config.design.il_threshold.is_finite()
            {
                Some(config.design.il_threshold)
            } else {
                None
            },
            tolerance: 1e-9,
        }
    }
}

/// LEO feeds left on by progressive pitch.
///
/// With a guard angle, every beam whose boresight is within the guard of a
/// GU (as seen from the LEO satellite) is switched off. Without one, the
/// single beam closest to the GU cluster is switched off.
pub fn progressive_pitch_feeds(geometry: &SnapshotGeometry, guard_deg: Option<f64>) -> Vec<usize> {
    let n = geometry.leo_beam_centres.len();
    match guard_deg {
        Some(g) => {
            let guard = g.to_radians();
            (0..n)
                .filter(|&b| geometry.leo_to_gu.iter().all(|l| l.beam_angles[b] >= guard))
                .collect()
        }
        None => {
            let k = geometry.leo_to_gu.len().max(1) as f64;
            let cx = geometry
                .leo_to_gu
                .iter()
                .map(|l| l.user_ground_position[0])
                .sum::<f64>()
                / k;
            let cy = geometry
                .leo_to_gu
                .iter()
                .map(|l| l.user_ground_position[1])
                .sum::<f64>()
                / k;
            let mut off = 0;
            let mut best = f64::INFINITY;
            for (b, c) in geometry.leo_beam_centres.iter().enumerate() {
                let d = (c[0] - cx).hypot(c[1] - cy);
                if d < best {
                    best = d;
                    off = b;
                }
            }
            (0..n).filter(|&b| b != off).collect()
        }
    }
}

fn widen(v: &CVector, feeds: &[usize], n: usize) -> CVector {
    let mut out = CVector::zeros(n);
    for (i, &f) in feeds.iter().enumerate() {
        out[f] = v[i];
    }
    out
}

/// Channels of the LEO system on its own sub-band: no coupling with the
/// GEO system in either direction.
pub fn isolated_channels(ch: &ChannelSet) -> ChannelSet {
    let zero = |vs: &[CVector]| {
        vs.iter()
            .map(|v| v.map(|_| C64::from(0.0)))
            .collect::<Vec<_>>()
    };
    ChannelSet {
        g: zero(&ch.g),
        z_hat: zero(&ch.z_hat),
        true_z: zero(&ch.true_z),
        external_gu: vec![0.0; ch.k_g()],
        ..ch.clone()
    }
}

fn inputs<'a>(
    ctx: &SchemeContext<'a>,
    channels: &'a ChannelSet,
    demands: &'a [f64],
    layout: StreamLayout,
    objective: ObjectiveKind,
    protect: bool,
) -> DesignInputs<'a> {
    let d = &ctx.config.design;
    DesignInputs {
        channels,
        geo_precoders: ctx.geo_precoders,
        demands,
        power: ctx.config.leo.power_w,
        il_threshold: if protect && d.il_threshold.is_finite() {
            Some(d.il_threshold)
        } else {
            None
        },
        layout,
        objective,
        tolerance: d.tolerance,
        max_iterations: d.max_iterations,
    }
}

fn settings(ctx: &SchemeContext) -> RandomizationSettings {
    RandomizationSettings {
        candidates: ctx.config.design.random_vectors,
        seed: ctx.seed,
        leakage: ctx.config.design.leakage_channel,
    }
}

fn finish(
    scheme: SchemeId,
    d: Design,
    ch: &ChannelSet,
    demands: &[f64],
    feeds: Vec<usize>,
) -> SchemeSolution {
    SchemeSolution {
        scheme,
        rates: signal::rates(&d.solution, ch, demands),
        relaxed_objective: d.state.objective,
        solution: d.solution,
        trace: d.trace,
        active_feeds: feeds,
        band_fraction: 1.0,
    }
}

/// Designs the precoders of `scheme` and evaluates them.
pub fn solve_scheme(
    scheme: SchemeId,
    ctx: &SchemeContext,
) -> Result<SchemeSolution, OptimizerError> {
    let ch = ctx.channels;
    let demands = ctx.config.users.demands.as_slice();
    let all_feeds: Vec<usize> = (0..ch.n_l()).collect();
    let full = |layout, objective| -> Result<SchemeSolution, OptimizerError> {
        let d = design(
            &inputs(ctx, ch, demands, layout, objective, true),
            &settings(ctx),
        )?;
        Ok(finish(scheme, d, ch, demands, all_feeds.clone()))
    };
    match scheme {
        SchemeId::SpcRsmaTtm => full(StreamLayout::FULL, ObjectiveKind::Ttm),
        SchemeId::RsmaTtm => full(StreamLayout::RSMA, ObjectiveKind::Ttm),
        SchemeId::SdmaTtm => full(StreamLayout::SDMA, ObjectiveKind::Ttm),
        SchemeId::SpcRsmaStm => full(StreamLayout::FULL, ObjectiveKind::Stm),
        SchemeId::SpcRsmaMmf => full(StreamLayout::FULL, ObjectiveKind::Mmf),
        SchemeId::ProgressivePitchTtm => {
            let feeds = progressive_pitch_feeds(ctx.geometry, ctx.config.design.pitch_guard_deg);
            let n = ch.n_l();
            let reduced = ch.restrict_feeds(&feeds);
            let d = design(
                &inputs(
                    ctx,
                    &reduced,
                    demands,
                    StreamLayout::SDMA,
                    ObjectiveKind::Ttm,
                    true,
                ),
                &settings(ctx),
            )?;
            let mut sol = d.solution.clone();
            sol.p_spc = widen(&sol.p_spc, &feeds, n);
            sol.p_c = widen(&sol.p_c, &feeds, n);
            for p in &mut sol.p_priv {
                *p = widen(p, &feeds, n);
            }
            Ok(finish(
                scheme,
                Design { solution: sol, ..d },
                ch,
                demands,
                feeds,
            ))
        }
        SchemeId::BandSplitTtm => {
            let rho = ctx.config.design.band_split_fraction;
            let layout = if ctx.config.design.band_split_common {
                StreamLayout::RSMA
            } else {
                StreamLayout::SDMA
            };
            let isolated = isolated_channels(ch);
            // demands on the sub-band are expressed per unit of its width
            let scaled: Vec<f64> = demands.iter().map(|t| t / rho).collect();
            let d = design(
                &inputs(ctx, &isolated, &scaled, layout, ObjectiveKind::Ttm, false),
                &settings(ctx),
            )?;
            let full_band = signal::rates(&d.solution, &isolated, &scaled);
            Ok(SchemeSolution {
                scheme,
                rates: full_band.scaled_to_band(rho, demands),
                relaxed_objective: d.state.objective * rho,
                solution: d.solution,
                trace: d.trace,
                active_feeds: all_feeds,
                band_fraction: rho,
            })
        }
    }
}
