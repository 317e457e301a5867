use super::lifting::{LiftedMatrices, Stream};
use super::portions::{objective_value, portions_for};
use super::DesignInputs;
use crate::linalg::{complex_gaussian, hermitian_eigen};
use crate::scenario::LeakageChannel;
use crate::signal::{interference_leakage, leakage_budget, stream_rates, PrecoderSolution};
use crate::{CMatrix, CVector, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomizationSettings {
    /// Number of Gaussian candidates on top of the dominant eigenvector.
    pub candidates: usize,
    pub seed: u64,
    /// Channel whose leakage the rescaling step enforces.
    pub leakage: LeakageChannel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomizationStats {
    pub candidates: usize,
    /// 0 is the dominant eigenvector; `i ≥ 1` the i-th Gaussian draw.
    pub best_index: usize,
    /// Amplitude factor applied to the winning candidate.
    pub rescale_factor: f64,
    pub objective: f64,
    pub il_estimated: Vec<f64>,
    pub il_true: Vec<f64>,
    pub power: f64,
}

/// Splits a stacked vector over the active streams into a full solution.
fn expand(p: &CVector, m: &LiftedMatrices, inputs: &DesignInputs) -> PrecoderSolution {
    let n = m.n_l;
    let k_l = inputs.channels.k_l();
    let mut sol = PrecoderSolution::zeros(n, k_l, inputs.geo_precoders.to_vec());
    for (i, s) in m.streams.iter().enumerate() {
        let block = p.rows(i * n, n).into_owned();
        match s {
            Stream::Private(k) => sol.p_priv[*k] = block,
            Stream::Common => sol.p_c = block,
            Stream::SuperCommon => sol.p_spc = block,
        }
    }
    sol
}

/// Largest amplitude factor (at most 1) that meets the power budget and
/// every leakage budget.
fn rescale_factor(
    p: &CVector,
    m: &LiftedMatrices,
    inputs: &DesignInputs,
    mode: LeakageChannel,
) -> f64 {
    let mut factor2: f64 = 1.0;
    let power = p.norm_squared();
    if power > inputs.power {
        factor2 = factor2.min(inputs.power / power);
    }
    if let Some(i_th) = inputs.il_threshold {
        let n = m.n_l;
        let blocks: Vec<CVector> = (0..m.streams.len())
            .map(|i| p.rows(i * n, n).into_owned())
            .collect();
        let ch = inputs.channels;
        let mut sol = None;
        for k in 0..ch.k_g() {
            let mut leak = m.leakage[k].quadratic(&blocks);
            if mode == LeakageChannel::True {
                let s = sol.get_or_insert_with(|| expand(p, m, inputs));
                leak = leak.max(interference_leakage(k, s, ch, true));
            }
            let budget = leakage_budget(k, ch, i_th);
            if leak > budget {
                factor2 = factor2.min(budget / leak);
            }
        }
    }
    factor2.sqrt()
}

fn evaluate(sol: &mut PrecoderSolution, inputs: &DesignInputs) -> f64 {
    let ch = inputs.channels;
    let r = stream_rates(sol, ch);
    let (c_spc, c) = portions_for(inputs.objective, r.r_spc, r.r_c, &r.r_p, inputs.demands);
    let totals: Vec<f64> = (0..ch.k_l()).map(|k| c_spc[k] + c[k] + r.r_p[k]).collect();
    sol.c_spc = c_spc;
    sol.c = c;
    objective_value(inputs.objective, &totals, inputs.demands)
}

/// Draws rank-one candidates from `X* = UΣU^H` (the dominant eigenvector
/// and `p = UΣ^{1/2}f` with `f ~ CN(0, I)`), rescales each to feasibility
/// and keeps the best by the design objective. Ties go to the lowest index.
pub fn randomize_and_rescale(
    x: &CMatrix,
    m: &LiftedMatrices,
    inputs: &DesignInputs,
    settings: &RandomizationSettings,
) -> (PrecoderSolution, RandomizationStats) {
    let side = m.side();
    let ch = inputs.channels;
    let finish = |mut sol: PrecoderSolution, index: usize, factor: f64, candidates: usize| {
        let objective = evaluate(&mut sol, inputs);
        let stats = RandomizationStats {
            candidates,
            best_index: index,
            rescale_factor: factor,
            objective,
            il_estimated: (0..ch.k_g())
                .map(|k| interference_leakage(k, &sol, ch, false))
                .collect(),
            il_true: (0..ch.k_g())
                .map(|k| interference_leakage(k, &sol, ch, true))
                .collect(),
            power: sol.leo_power(),
        };
        (sol, stats)
    };

    let trace: f64 = (0..side).map(|i| x[(i, i)].re).sum();
    if side == 0 || trace.is_nan() || trace <= 1e-9 * inputs.power.max(1.0) {
        let sol = expand(&CVector::zeros(side), m, inputs);
        return finish(sol, 0, 1.0, 0);
    }

    let (values, vectors) = hermitian_eigen(x);
    let roots: Vec<f64> = values.iter().map(|v| v.max(0.0).sqrt()).collect();
    let factor_matrix = CMatrix::from_fn(side, side, |r, c| vectors[(r, c)] * roots[c]);

    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let draws: Vec<CVector> = (0..settings.candidates)
        .map(|_| CVector::from_fn(side, |_, _| complex_gaussian(&mut rng, 1.0)))
        .collect();
    let candidate = |i: usize| -> CVector {
        if i == 0 {
            factor_matrix.column(0).into_owned()
        } else {
            &factor_matrix * &draws[i - 1]
        }
    };
    let score = |i: usize| -> (f64, f64) {
        let mut p = candidate(i);
        let f = rescale_factor(&p, m, inputs, settings.leakage);
        p *= C64::from(f);
        let mut sol = expand(&p, m, inputs);
        (evaluate(&mut sol, inputs), f)
    };
    let scores: Vec<(f64, f64)> = (0..=settings.candidates)
        .into_par_iter()
        .map(score)
        .collect();
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if s.0 > scores[best].0 {
            best = i;
        }
    }
    let factor = scores[best].1;
    let p = candidate(best) * C64::from(factor);
    finish(expand(&p, m, inputs), best, factor, settings.candidates)
}
