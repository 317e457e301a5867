use super::{run, solve_draw, write_csv, ScenarioConfig, ScenarioError};
use crate::baselines::SchemeId;
use crate::channel::{build_channel_set_for, matched_geo_precoders, ChannelSet, SnapshotGeometry};
use crate::linalg::{complex_gaussian, inner_sq, outer};
use crate::optimizer::{build_lifted_matrices, StreamLayout};
use crate::signal::{gu_terms, lu_terms, PrecoderSolution};
use crate::{CVector, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: impl Into<String>, passed: bool, detail: String) {
        self.checks.push(CheckResult {
            name: name.into(),
            passed,
            detail,
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{} {:<28} {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            )?;
        }
        Ok(())
    }
}

/// Single-feed snapshot with one GU and `lu_count` LUs and perfect CSI,
/// small enough for exhaustive search. Demands exceed what the link can
/// carry so that the comparison is not decided by the demand cap.
pub fn oracle_config(base: &ScenarioConfig, lu_count: usize) -> ScenarioConfig {
    let mut c = base.clone();
    c.leo.feeds = 1;
    c.leo.second_separation_deg = None;
    c.users.lu_count = lu_count;
    c.users.gu_count = 1;
    c.users.demands = [4.0, 3.0, 5.0, 2.0]
        .iter()
        .copied()
        .cycle()
        .take(lu_count)
        .collect();
    c.leo.power_w = 2.0;
    c.design.csi_error_variance = 0.0;
    c.scheme = SchemeId::SpcRsmaTtm;
    c
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub objective: f64,
    /// Powers of the super-common, common and private streams.
    pub powers: Vec<f64>,
}

/// Exhaustive search over stream powers on a grid of step `power / steps`
/// for a single-feed LEO satellite with perfect CSI. Rate portions are
/// optimal in closed form: private rates are used first and the shared
/// pools fill the remaining deficits. Grid points that break the leakage
/// cap are scaled back onto it, since the cap is often below one step.
///
/// With one feed every precoder is a scalar, so only powers matter. The
/// super-common stream does not leak and is decoded before everything
/// else, so it always takes the power left over by the other streams.
pub fn grid_search_oracle(
    ch: &ChannelSet,
    geo_precoders: &[CVector],
    demands: &[f64],
    power: f64,
    il_threshold: Option<f64>,
    steps: usize,
) -> OracleResult {
    assert_eq!(ch.n_l(), 1, "the oracle needs a single-feed satellite");
    let k_l = ch.k_l();
    let a: Vec<f64> = ch.h_hat.iter().map(|h| h[0].norm_sqr()).collect();
    let u: Vec<f64> = (0..k_l)
        .map(|k| {
            inner_sq(&ch.g[k], &geo_precoders[ch.lu_geo_beam[k]])
                + ch.external_lu[k]
                + ch.noise_variance
        })
        .collect();
    let b: Vec<f64> = ch.z_hat.iter().map(|z| z[0].norm_sqr()).collect();
    let s: Vec<f64> = (0..ch.k_g())
        .map(|k| {
            inner_sq(&ch.f[k], &geo_precoders[ch.gu_geo_beam[k]])
                + ch.external_gu[k]
                + ch.noise_variance
        })
        .collect();
    let budgets: Vec<f64> = match il_threshold {
        Some(t) => ch.external_gu.iter().map(|e| (t - e).max(0.0)).collect(),
        None => vec![f64::INFINITY; ch.k_g()],
    };
    let step = power / steps as f64;
    let total_demand: f64 = demands.iter().sum();

    // powers[0] = common, powers[1..] = privates
    let mut best = OracleResult {
        objective: f64::NEG_INFINITY,
        powers: vec![0.0; k_l + 2],
    };
    let mut idx = vec![0usize; k_l + 1];
    loop {
        let pc = idx[0] as f64 * step;
        let pp: Vec<f64> = idx[1..].iter().map(|&i| i as f64 * step).collect();
        let leaky = pc + pp.iter().sum::<f64>();
        // points past the leakage cap are pulled back onto it
        let shrink = b
            .iter()
            .zip(&budgets)
            .filter(|(bk, _)| **bk * leaky > 0.0)
            .map(|(bk, &bud)| bud / (bk * leaky))
            .fold(1.0f64, f64::min);
        let (pc, pp, leaky) = (
            pc * shrink,
            pp.iter().map(|p| p * shrink).collect::<Vec<_>>(),
            leaky * shrink,
        );
        let ps = (power - leaky).max(0.0);
        let sum_p: f64 = pp.iter().sum();
        let mut r_spc = f64::INFINITY;
        let mut r_c = f64::INFINITY;
        let mut served = 0.0;
        let mut deficit = 0.0;
        for k in 0..k_l {
            let rest = a[k] * sum_p + u[k];
            r_spc = r_spc.min((1.0 + a[k] * ps / (a[k] * pc + rest)).log2());
            r_c = r_c.min((1.0 + a[k] * pc / rest).log2());
            let rp = (1.0 + a[k] * pp[k] / (rest - a[k] * pp[k])).log2();
            served += rp.min(demands[k]);
            deficit += (demands[k] - rp).max(0.0);
        }
        for k in 0..ch.k_g() {
            r_spc = r_spc.min((1.0 + b[k] * ps / (b[k] * leaky + s[k])).log2());
        }
        let objective = (served + deficit.min(r_spc + r_c)).min(total_demand);
        if objective > best.objective {
            let mut powers = vec![ps, pc];
            powers.extend(pp);
            best = OracleResult { objective, powers };
        }
        // odometer over the common and private indices
        let mut i = 0;
        loop {
            if i == idx.len() {
                return best;
            }
            idx[i] += 1;
            if idx.iter().sum::<usize>() <= steps {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

fn lifting_check(
    config: &ScenarioConfig,
    report: &mut ValidationReport,
) -> Result<(), ScenarioError> {
    let geometry = SnapshotGeometry::from_config(config)?;
    let ch = build_channel_set_for(&geometry, config, super::draw_seed(config.seed, 0))?;
    let w = matched_geo_precoders(&geometry, config)?;
    let m = build_lifted_matrices(&ch, &w, StreamLayout::FULL).map_err(|source| {
        ScenarioError::Optimizer {
            scheme: SchemeId::SpcRsmaTtm,
            source,
        }
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (n, k_l) = (ch.n_l(), ch.k_l());
    let scale = (config.leo.power_w / (n * (k_l + 2)) as f64).sqrt();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let p = CVector::from_fn(m.side(), |_, _| {
            complex_gaussian(&mut rng, 1.0) * C64::from(scale)
        });
        let x = outer(&p);
        let sol = PrecoderSolution::from_stacked(&p, n, k_l, w.clone());
        let lr = |num: &crate::optimizer::LiftedForm, den: &crate::optimizer::LiftedForm| {
            (num.trace_lifted(&x) / den.trace_lifted(&x)).log2()
        };
        let direct = |(num, den): (f64, f64)| (1.0 + num / den).log2();
        let mut compare = |lifted: f64, exact: f64| {
            worst = worst.max((lifted - exact).abs() / exact.abs().max(1e-300))
        };
        for k in 0..k_l {
            let t = lu_terms(k, &sol, &ch);
            compare(lr(&m.d[k], &m.f[k]), direct(t.spc));
            compare(lr(&m.f[k], &m.q[k]), direct(t.common));
            compare(lr(&m.q[k], &m.v[k]), direct(t.private));
        }
        for k in 0..ch.k_g() {
            compare(lr(&m.a[k], &m.b[k]), direct(gu_terms(k, &sol, &ch)));
        }
    }
    report.push(
        "lifting identity",
        worst <= 1e-10,
        format!("worst relative error {worst:.3e} over 100 stacks"),
    );
    Ok(())
}

/// Runs the invariant suite on `config`.
pub fn validate(config: &ScenarioConfig) -> Result<ValidationReport, ScenarioError> {
    config.validate()?;
    let mut report = ValidationReport::default();
    lifting_check(config, &mut report)?;

    let geometry = SnapshotGeometry::from_config(config)?;
    let slack = 10.0 * config.design.tolerance;
    let mut worst_drop: f64 = 0.0;
    let mut most_iterations = 0;
    for draw in 0..3 {
        let (s, _) = solve_draw(config, &geometry, SchemeId::SpcRsmaTtm, draw)?;
        for w in s.trace.objectives.windows(2) {
            worst_drop = worst_drop.max(w[0] - w[1]);
        }
        most_iterations = most_iterations.max(s.trace.iterations());
    }
    report.push(
        "concave-convex monotonicity",
        worst_drop <= slack && most_iterations <= config.design.max_iterations,
        format!(
            "largest decrease {worst_drop:.3e}, at most {most_iterations} iterations over 3 draws"
        ),
    );

    let mut failures = Vec::new();
    for scheme in SchemeId::ALL {
        // solve_draw already runs the independent checker
        if let Err(e) = solve_draw(config, &geometry, scheme, 0) {
            failures.push(e.to_string());
        }
    }
    report.push(
        "feasibility",
        failures.is_empty(),
        if failures.is_empty() {
            format!("{} schemes feasible", SchemeId::ALL.len())
        } else {
            failures.join("; ")
        },
    );

    for lu_count in [1, 2] {
        let c = oracle_config(config, lu_count);
        let geometry = SnapshotGeometry::from_config(&c)?;
        let (s, ch) = solve_draw(&c, &geometry, SchemeId::SpcRsmaTtm, 0)?;
        let w = matched_geo_precoders(&geometry, &c)?;
        let oracle = grid_search_oracle(
            &ch,
            &w,
            &c.users.demands,
            c.leo.power_w,
            Some(c.design.il_threshold).filter(|t| t.is_finite()),
            200,
        );
        let gap = (s.rates.objective - oracle.objective).abs() / oracle.objective.max(1e-9);
        report.push(
            format!("oracle, {lu_count} LU"),
            gap <= 0.05,
            format!(
                "pipeline {:.6}, grid {:.6}",
                s.rates.objective, oracle.objective
            ),
        );
    }

    let first = write_csv(&[run(config)?], false);
    let second = write_csv(&[run(config)?], false);
    report.push(
        "determinism",
        first == second,
        "two runs with the same seed".to_string(),
    );
    Ok(report)
}
