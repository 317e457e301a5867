//! Experiment orchestration: single runs, Monte-Carlo sweeps and CSV output.
//!
//! Every (scheme, draw) pair is an independent work item. A draw's channel
//! seed depends only on the base seed and the draw index, so all sweep
//! points and schemes see the same random phases and estimation errors and
//! differences between points come from geometry alone. Items run in
//! parallel and the merged records are sorted, so output never depends on
//! scheduling.

mod config;
mod report;
mod validate;

pub use config::*;
pub use report::{
    separation_losses, summarize, write_csv, SeparationLoss, SummaryRow, CSV_FLOAT_DIGITS,
};
pub use validate::{
    grid_search_oracle, oracle_config, validate, CheckResult, OracleResult, ValidationReport,
};

use crate::baselines::{isolated_channels, solve_scheme, SchemeContext, SchemeId, SchemeSolution};
use crate::channel::{
    build_channel_set_for, matched_geo_precoders, ChannelError, ChannelSet, SnapshotGeometry,
};
use crate::linalg::inner_sq;
use crate::optimizer::OptimizerError;
use crate::signal::{check_feasibility, FeasibilityViolation, PrecoderSolution};
use rayon::prelude::*;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("{scheme}: {source}")]
    Optimizer {
        scheme: SchemeId,
        #[source]
        source: OptimizerError,
    },
    #[error("{scheme} returned an infeasible solution on draw {draw}: {violation}")]
    Infeasible {
        scheme: SchemeId,
        draw: usize,
        violation: FeasibilityViolation,
    },
}

/// One row of experiment output.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub scheme: SchemeId,
    /// Value of the swept variable (off-boresight or separation angle in
    /// degrees). Single-LEO reference rows of the separation sweep use `inf`.
    pub sweep_value: f64,
    pub draw: usize,
    pub r_total: Vec<f64>,
    pub served: Vec<f64>,
    pub objective: f64,
    pub satisfaction: f64,
    pub r_spc: f64,
    pub r_c: f64,
    /// Largest leakage over GUs on the estimated channel.
    pub il_estimated: f64,
    /// Largest leakage over GUs on the realised channel.
    pub il_true: f64,
    pub power: f64,
    pub iterations: usize,
    pub wall_time_s: f64,
}

impl ExperimentRecord {
    fn from_solution(
        s: &SchemeSolution,
        demands: &[f64],
        sweep_value: f64,
        draw: usize,
        wall: f64,
    ) -> Self {
        let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
        Self {
            scheme: s.scheme,
            sweep_value,
            draw,
            r_total: s.rates.r_total.clone(),
            served: s.rates.served.clone(),
            objective: s.rates.objective,
            satisfaction: s.rates.satisfaction(demands),
            r_spc: s.rates.r_spc,
            r_c: s.rates.r_c,
            il_estimated: max(&s.rates.il_at_gu),
            il_true: max(&s.rates.il_true_at_gu),
            power: s.solution.leo_power(),
            iterations: s.trace.iterations(),
            wall_time_s: wall,
        }
    }

    fn sort_key(&self) -> (SchemeId, f64, usize) {
        (self.scheme, self.sweep_value, self.draw)
    }
}

fn sort_records(records: &mut [ExperimentRecord]) {
    records.sort_by(|a, b| {
        let (sa, va, da) = a.sort_key();
        let (sb, vb, db) = b.sort_key();
        sa.cmp(&sb).then(va.total_cmp(&vb)).then(da.cmp(&db))
    });
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Channel seed of Monte-Carlo draw `draw`.
pub fn draw_seed(base: u64, draw: usize) -> u64 {
    base ^ splitmix64(draw as u64)
}

/// Seed of the randomization step, derived from a channel seed.
pub fn randomization_seed(channel_seed: u64) -> u64 {
    splitmix64(channel_seed ^ 0x5EED_5EED_5EED_5EED)
}

/// Channels the independent checker evaluates a scheme on.
fn checked_channels(scheme: SchemeId, ch: &ChannelSet) -> ChannelSet {
    if scheme == SchemeId::BandSplitTtm {
        isolated_channels(ch)
    } else {
        ch.clone()
    }
}

fn verified(
    scheme: SchemeId,
    ctx: &SchemeContext,
    draw: usize,
) -> Result<SchemeSolution, ScenarioError> {
    let s =
        solve_scheme(scheme, ctx).map_err(|source| ScenarioError::Optimizer { scheme, source })?;
    check_feasibility(
        &s.solution,
        &checked_channels(scheme, ctx.channels),
        s.limits(ctx.config),
    )
    .map_err(|violation| ScenarioError::Infeasible {
        scheme,
        draw,
        violation,
    })?;
    Ok(s)
}

/// Solves one scheme on one draw of `config`'s geometry.
pub fn solve_draw(
    config: &ScenarioConfig,
    geometry: &SnapshotGeometry,
    scheme: SchemeId,
    draw: usize,
) -> Result<(SchemeSolution, ChannelSet), ScenarioError> {
    let seed = draw_seed(config.seed, draw);
    let channels = build_channel_set_for(geometry, config, seed)?;
    let geo_precoders = matched_geo_precoders(geometry, config)?;
    let ctx = SchemeContext {
        config,
        geometry,
        channels: &channels,
        geo_precoders: &geo_precoders,
        seed: randomization_seed(seed),
    };
    let s = verified(scheme, &ctx, draw)?;
    Ok((s, channels))
}

fn record_for(
    config: &ScenarioConfig,
    geometry: &SnapshotGeometry,
    scheme: SchemeId,
    draw: usize,
    sweep_value: f64,
) -> Result<ExperimentRecord, ScenarioError> {
    let start = Instant::now();
    let (s, _) = solve_draw(config, geometry, scheme, draw)?;
    Ok(ExperimentRecord::from_solution(
        &s,
        &config.users.demands,
        sweep_value,
        draw,
        start.elapsed().as_secs_f64(),
    ))
}

/// Runs `config.scheme` on the first draw. Deterministic per seed.
pub fn run(config: &ScenarioConfig) -> Result<ExperimentRecord, ScenarioError> {
    config.validate()?;
    let geometry = SnapshotGeometry::from_config(config)?;
    record_for(
        config,
        &geometry,
        config.scheme,
        0,
        config.users.off_boresight_deg,
    )
}

/// Runs every scheme in `schemes` on `draws` draws of the configured
/// snapshot.
pub fn run_draws(
    config: &ScenarioConfig,
    schemes: &[SchemeId],
    draws: usize,
) -> Result<Vec<ExperimentRecord>, ScenarioError> {
    config.validate()?;
    let geometry = SnapshotGeometry::from_config(config)?;
    let items: Vec<(SchemeId, usize)> = schemes
        .iter()
        .flat_map(|&s| (0..draws).map(move |d| (s, d)))
        .collect();
    let mut records = items
        .par_iter()
        .map(|&(s, d)| record_for(config, &geometry, s, d, config.users.off_boresight_deg))
        .collect::<Result<Vec<_>, _>>()?;
    sort_records(&mut records);
    Ok(records)
}

/// Sweeps the GU off-boresight angle over `points` (degrees).
pub fn sweep_offboresight(
    config: &ScenarioConfig,
    points: &[f64],
    schemes: &[SchemeId],
    draws: usize,
) -> Result<Vec<ExperimentRecord>, ScenarioError> {
    config.validate()?;
    let configs: Vec<ScenarioConfig> = points
        .iter()
        .map(|&theta| {
            let mut c = config.clone();
            c.users.off_boresight_deg = theta;
            c
        })
        .collect();
    let geometries = configs
        .iter()
        .map(SnapshotGeometry::from_config)
        .collect::<Result<Vec<_>, _>>()?;
    let mut items = Vec::new();
    for (p, _) in points.iter().enumerate() {
        for &s in schemes {
            for d in 0..draws {
                items.push((p, s, d));
            }
        }
    }
    let mut records = items
        .par_iter()
        .map(|&(p, s, d)| record_for(&configs[p], &geometries[p], s, d, points[p]))
        .collect::<Result<Vec<_>, _>>()?;
    sort_records(&mut records);
    Ok(records)
}

/// Every scheme at the fixed off-boresight angle of the demand bar chart.
pub fn bar_demand(
    config: &ScenarioConfig,
    schemes: &[SchemeId],
    draws: usize,
) -> Result<Vec<ExperimentRecord>, ScenarioError> {
    let mut c = config.clone();
    c.users.off_boresight_deg = config.sweep.bar_off_boresight_deg;
    run_draws(&c, schemes, draws)
}

/// Interference a second LEO satellite radiating `sol` causes at each LU
/// and GU. Every stream counts, the super-common one included, since it is
/// a different satellite's signal.
pub fn second_leo_interference(sol: &PrecoderSolution, ch: &ChannelSet) -> (Vec<f64>, Vec<f64>) {
    let Some(second) = &ch.second_leo else {
        return (vec![0.0; ch.k_l()], vec![0.0; ch.k_g()]);
    };
    let power = |v: &crate::CVector| {
        inner_sq(v, &sol.p_spc)
            + inner_sq(v, &sol.p_c)
            + sol.p_priv.iter().map(|p| inner_sq(v, p)).sum::<f64>()
    };
    (
        second.h.iter().map(power).collect(),
        second.z.iter().map(power).collect(),
    )
}

/// Sweeps the separation to a second LEO satellite in the same orbit.
///
/// For each draw the single-LEO design is computed first and reported with
/// `sweep_value = inf`. The second satellite then radiates that same
/// precoder through its own channels, and the first satellite redesigns
/// with the resulting interference added to every user and subtracted
/// from the leakage budgets.
pub fn sweep_separation(
    config: &ScenarioConfig,
    points: &[f64],
    schemes: &[SchemeId],
    draws: usize,
) -> Result<Vec<ExperimentRecord>, ScenarioError> {
    config.validate()?;
    let mut single = config.clone();
    single.leo.second_separation_deg = None;
    let single_geometry = SnapshotGeometry::from_config(&single)?;
    let configs: Vec<ScenarioConfig> = points
        .iter()
        .map(|&sep| {
            let mut c = config.clone();
            c.leo.second_separation_deg = Some(sep);
            c
        })
        .collect();
    let geometries = configs
        .iter()
        .map(SnapshotGeometry::from_config)
        .collect::<Result<Vec<_>, _>>()?;
    let geo_precoders = matched_geo_precoders(&single_geometry, config)?;

    let items: Vec<(SchemeId, usize)> = schemes
        .iter()
        .flat_map(|&s| (0..draws).map(move |d| (s, d)))
        .collect();
    let per_item =
        |&(scheme, draw): &(SchemeId, usize)| -> Result<Vec<ExperimentRecord>, ScenarioError> {
            let demands = &config.users.demands;
            let start = Instant::now();
            let (base, _) = solve_draw(&single, &single_geometry, scheme, draw)?;
            let mut out = vec![ExperimentRecord::from_solution(
                &base,
                demands,
                f64::INFINITY,
                draw,
                start.elapsed().as_secs_f64(),
            )];
            let seed = draw_seed(config.seed, draw);
            for (p, &sep) in points.iter().enumerate() {
                let start = Instant::now();
                let mut channels = build_channel_set_for(&geometries[p], &configs[p], seed)?;
                let (ext_lu, ext_gu) = second_leo_interference(&base.solution, &channels);
                channels.external_lu = ext_lu;
                channels.external_gu = ext_gu;
                let ctx = SchemeContext {
                    config: &configs[p],
                    geometry: &geometries[p],
                    channels: &channels,
                    geo_precoders: &geo_precoders,
                    seed: randomization_seed(seed),
                };
                let s = verified(scheme, &ctx, draw)?;
                out.push(ExperimentRecord::from_solution(
                    &s,
                    demands,
                    sep,
                    draw,
                    start.elapsed().as_secs_f64(),
                ));
            }
            Ok(out)
        };
    let nested = items
        .par_iter()
        .map(per_item)
        .collect::<Result<Vec<_>, _>>()?;
    let mut records: Vec<ExperimentRecord> = nested.into_iter().flatten().collect();
    sort_records(&mut records);
    Ok(records)
}
