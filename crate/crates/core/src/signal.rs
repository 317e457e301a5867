//! SINR and rate algebra of the rate-split downlink under imperfect CSI.
//!
//! Every design-time quantity uses the estimated LEO channels together with
//! the `σ_e²`-weighted power floor that the mismatched-decoding rate bound
//! adds to each denominator. True channels only enter the leakage report.

use crate::channel::ChannelSet;
use crate::linalg::inner_sq;
use crate::CVector;
use thiserror::Error;

/// LEO precoders, GEO precoders and the split of the two shared rates.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSolution {
    pub p_spc: CVector,
    pub p_c: CVector,
    pub p_priv: Vec<CVector>,
    pub w: Vec<CVector>,
    pub c_spc: Vec<f64>,
    pub c: Vec<f64>,
}

impl PrecoderSolution {
    /// All-zero LEO precoders with the given GEO precoders.
    pub fn zeros(n_l: usize, k_l: usize, w: Vec<CVector>) -> Self {
        Self {
            p_spc: CVector::zeros(n_l),
            p_c: CVector::zeros(n_l),
            p_priv: vec![CVector::zeros(n_l); k_l],
            w,
            c_spc: vec![0.0; k_l],
            c: vec![0.0; k_l],
        }
    }

    /// `‖p_spc‖² + ‖p_c‖² + Σ‖p_k‖²`
    pub fn leo_power(&self) -> f64 {
        self.p_spc.norm_squared()
            + self.p_c.norm_squared()
            + self.p_priv.iter().map(|p| p.norm_squared()).sum::<f64>()
    }

    pub fn geo_power(&self) -> f64 {
        self.w.iter().map(|w| w.norm_squared()).sum()
    }

    pub fn n_l(&self) -> usize {
        self.p_spc.len()
    }

    /// Stacked vector `[p_1, …, p_K, p_c, p_spc]`.
    pub fn stacked(&self) -> CVector {
        let n = self.n_l();
        let k = self.p_priv.len();
        let mut out = CVector::zeros(n * (k + 2));
        for (j, p) in self
            .p_priv
            .iter()
            .chain([&self.p_c, &self.p_spc])
            .enumerate()
        {
            out.rows_mut(j * n, n).copy_from(p);
        }
        out
    }

    /// Inverse of [`PrecoderSolution::stacked`]; portions are zeroed.
    pub fn from_stacked(p: &CVector, n_l: usize, k_l: usize, w: Vec<CVector>) -> Self {
        let block = |j: usize| p.rows(j * n_l, n_l).into_owned();
        Self {
            p_priv: (0..k_l).map(block).collect(),
            p_c: block(k_l),
            p_spc: block(k_l + 1),
            w,
            c_spc: vec![0.0; k_l],
            c: vec![0.0; k_l],
        }
    }

    /// Multiplies every LEO precoder by `factor` (amplitude).
    pub fn scale_leo(&mut self, factor: f64) {
        self.p_spc *= crate::C64::from(factor);
        self.p_c *= crate::C64::from(factor);
        for p in &mut self.p_priv {
            *p *= crate::C64::from(factor);
        }
    }
}

/// GEO signal power the LU hears from its serving GEO beam, plus any
/// external interference.
fn geo_term_lu(k: usize, sol: &PrecoderSolution, ch: &ChannelSet) -> f64 {
    inner_sq(&ch.g[k], &sol.w[ch.lu_geo_beam[k]]) + ch.external_lu[k]
}

fn geo_term_gu(k: usize, sol: &PrecoderSolution, ch: &ChannelSet) -> f64 {
    inner_sq(&ch.f[k], &sol.w[ch.gu_geo_beam[k]]) + ch.external_gu[k]
}

/// `u_k = |g_k^H w_μ(k)|² + σ_e²·‖p‖²`
pub fn effective_error_floor_lu(k: usize, sol: &PrecoderSolution, ch: &ChannelSet) -> f64 {
    geo_term_lu(k, sol, ch) + ch.sigma_e2 * sol.leo_power()
}

/// `w_k = |f_k^H w_μ(k)|² + σ_e²·‖p‖²`
pub fn effective_error_floor_gu(k: usize, sol: &PrecoderSolution, ch: &ChannelSet) -> f64 {
    geo_term_gu(k, sol, ch) + ch.sigma_e2 * sol.leo_power()
}

fn private_sum(v: &CVector, sol: &PrecoderSolution, skip: Option<usize>) -> f64 {
    sol.p_priv
        .iter()
        .enumerate()
        .filter(|(j, _)| Some(*j) != skip)
        .map(|(_, p)| inner_sq(v, p))
        .sum()
}

/// Numerator and denominator of each stream's SINR at one LU.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LuTerms {
    pub spc: (f64, f64),
    pub common: (f64, f64),
    pub private: (f64, f64),
}

pub fn lu_terms(k: usize, sol: &PrecoderSolution, ch: &ChannelSet) -> LuTerms {
    let h = &ch.h_hat[k];
    let base = effective_error_floor_lu(k, sol, ch) + ch.noise_variance;
    let own = inner_sq(h, &sol.p_priv[k]);
    let others = private_sum(h, sol, Some(k));
    let common = inner_sq(h, &sol.p_c);
    let spc = inner_sq(h, &sol.p_spc);
    LuTerms {
        spc: (spc, base + common + own + others),
        common: (common, base + own + others),
        private: (own, base + others),
    }
}

/// Numerator and denominator of the super-common SINR at one GU.
pub fn gu_terms(k: usize, sol: &PrecoderSolution, ch: &ChannelSet) -> (f64, f64) {
    let z = &ch.z_hat[k];
    let base = effective_error_floor_gu(k, sol, ch) + ch.noise_variance;
    (
        inner_sq(z, &sol.p_spc),
        base + inner_sq(z, &sol.p_c) + private_sum(z, sol, None),
    )
}

fn ratio((num, den): (f64, f64)) -> f64 {
    num / den
}

pub fn sinr_spc_lu(k: usize, sol: &PrecoderSolution, ch: &ChannelSet) -> f64 {
    ratio(lu_terms(k, sol, ch).spc)
}

pub fn sinr_spc_gu(k: usize, sol: &PrecoderSolution, ch: &ChannelSet) -> f64 {
    ratio(gu_terms(k, sol, ch))
}

pub fn sinr_common(k: usize, sol: &PrecoderSolution, ch: &ChannelSet) -> f64 {
    ratio(lu_terms(k, sol, ch).common)
}

pub fn sinr_private(k: usize, sol: &PrecoderSolution, ch: &ChannelSet) -> f64 {
    ratio(lu_terms(k, sol, ch).private)
}

/// Leakage `|z^H p_c|² + Σ|z^H p_j|²` at GU `k`. The super-common stream is
/// excluded because GUs decode and cancel it.
pub fn interference_leakage(
    k: usize,
    sol: &PrecoderSolution,
    ch: &ChannelSet,
    use_true: bool,
) -> f64 {
    let z = if use_true {
        &ch.true_z[k]
    } else {
        &ch.z_hat[k]
    };
    inner_sq(z, &sol.p_c) + private_sum(z, sol, None)
}

/// Leakage as the design constrains it: the estimated channel plus the
/// expected error contribution of every stream, super-common included.
pub fn design_leakage(k: usize, sol: &PrecoderSolution, ch: &ChannelSet) -> f64 {
    interference_leakage(k, sol, ch, false) + ch.sigma_e2 * sol.leo_power()
}

/// Leakage budget left for the designed LEO satellite at GU `k` once
/// external interference is accounted for.
pub fn leakage_budget(k: usize, ch: &ChannelSet, i_th: f64) -> f64 {
    (i_th - ch.external_gu[k]).max(0.0)
}

fn rate(sinr: f64) -> f64 {
    (1.0 + sinr).log2()
}

/// Every per-decoder rate, the shared-stream rates and the resulting
/// per-LU throughput.
#[derive(Debug, Clone, PartialEq)]
pub struct RateBreakdown {
    pub r_spc_at_lu: Vec<f64>,
    pub r_spc_at_gu: Vec<f64>,
    pub r_c_at_lu: Vec<f64>,
    pub r_p: Vec<f64>,
    pub r_spc: f64,
    pub r_c: f64,
    pub r_total: Vec<f64>,
    pub served: Vec<f64>,
    pub objective: f64,
    pub il_at_gu: Vec<f64>,
    pub il_true_at_gu: Vec<f64>,
}

impl RateBreakdown {
    /// Mean over LUs of `min(T, R) / T`; users without demand count as
    /// satisfied.
    pub fn satisfaction(&self, demands: &[f64]) -> f64 {
        if demands.is_empty() {
            return 1.0;
        }
        demands
            .iter()
            .zip(&self.served)
            .map(|(&t, &s)| if t > 0.0 { s / t } else { 1.0 })
            .sum::<f64>()
            / demands.len() as f64
    }

    /// Rates on a `fraction` of the band, compared against `demands`.
    pub fn scaled_to_band(&self, fraction: f64, demands: &[f64]) -> Self {
        let s = |v: &[f64]| v.iter().map(|x| x * fraction).collect::<Vec<_>>();
        let r_total = s(&self.r_total);
        let served: Vec<f64> = r_total
            .iter()
            .zip(demands)
            .map(|(&r, &t)| r.min(t))
            .collect();
        Self {
            r_spc_at_lu: s(&self.r_spc_at_lu),
            r_spc_at_gu: s(&self.r_spc_at_gu),
            r_c_at_lu: s(&self.r_c_at_lu),
            r_p: s(&self.r_p),
            r_spc: self.r_spc * fraction,
            r_c: self.r_c * fraction,
            objective: served.iter().sum(),
            r_total,
            served,
            il_at_gu: self.il_at_gu.clone(),
            il_true_at_gu: self.il_true_at_gu.clone(),
        }
    }
}

/// Per-stream rates for fixed precoders, without portions.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamRates {
    pub r_spc_at_lu: Vec<f64>,
    pub r_spc_at_gu: Vec<f64>,
    pub r_c_at_lu: Vec<f64>,
    pub r_p: Vec<f64>,
    pub r_spc: f64,
    pub r_c: f64,
}

pub fn stream_rates(sol: &PrecoderSolution, ch: &ChannelSet) -> StreamRates {
    let k_l = ch.k_l();
    let mut r_spc_at_lu = Vec::with_capacity(k_l);
    let mut r_c_at_lu = Vec::with_capacity(k_l);
    let mut r_p = Vec::with_capacity(k_l);
    for k in 0..k_l {
        let t = lu_terms(k, sol, ch);
        r_spc_at_lu.push(rate(ratio(t.spc)));
        r_c_at_lu.push(rate(ratio(t.common)));
        r_p.push(rate(ratio(t.private)));
    }
    let r_spc_at_gu: Vec<f64> = (0..ch.k_g())
        .map(|k| rate(sinr_spc_gu(k, sol, ch)))
        .collect();
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let r_spc = min(&r_spc_at_lu).min(min(&r_spc_at_gu));
    let r_c = min(&r_c_at_lu);
    StreamRates {
        r_spc: if r_spc.is_finite() { r_spc } else { 0.0 },
        r_c: if r_c.is_finite() { r_c } else { 0.0 },
        r_spc_at_lu,
        r_spc_at_gu,
        r_c_at_lu,
        r_p,
    }
}

/// Evaluates `sol` (including its rate portions) against `demands`.
pub fn rates(sol: &PrecoderSolution, ch: &ChannelSet, demands: &[f64]) -> RateBreakdown {
    let s = stream_rates(sol, ch);
    let r_total: Vec<f64> = (0..ch.k_l())
        .map(|k| sol.c_spc[k] + sol.c[k] + s.r_p[k])
        .collect();
    let served: Vec<f64> = r_total
        .iter()
        .zip(demands)
        .map(|(&r, &t)| r.min(t))
        .collect();
    RateBreakdown {
        objective: served.iter().sum(),
        il_at_gu: (0..ch.k_g())
            .map(|k| interference_leakage(k, sol, ch, false))
            .collect(),
        il_true_at_gu: (0..ch.k_g())
            .map(|k| interference_leakage(k, sol, ch, true))
            .collect(),
        r_spc_at_lu: s.r_spc_at_lu,
        r_spc_at_gu: s.r_spc_at_gu,
        r_c_at_lu: s.r_c_at_lu,
        r_p: s.r_p,
        r_spc: s.r_spc,
        r_c: s.r_c,
        r_total,
        served,
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeasibilityViolation {
    #[error("LEO power {power} exceeds budget {budget}")]
    Power { power: f64, budget: f64 },
    #[error("leakage {leakage} at GU {gu} exceeds threshold {threshold}")]
    Leakage {
        gu: usize,
        leakage: f64,
        threshold: f64,
    },
    #[error("super-common portions sum to {sum}, above the rate {rate}")]
    SuperCommonPortions { sum: f64, rate: f64 },
    #[error("common portions sum to {sum}, above the rate {rate}")]
    CommonPortions { sum: f64, rate: f64 },
    #[error("negative or non-finite rate portion")]
    Portion,
}

/// Limits a solution is checked against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityLimits {
    pub power: f64,
    /// `None` when no leakage constraint applies.
    pub leakage_threshold: Option<f64>,
    /// Relative slack.
    pub tolerance: f64,
}

/// Independent post-hoc check of a precoder against the power budget, the
/// design leakage bound and the shared-rate portion budgets.
pub fn check_feasibility(
    sol: &PrecoderSolution,
    ch: &ChannelSet,
    limits: FeasibilityLimits,
) -> Result<(), FeasibilityViolation> {
    let tol = limits.tolerance;
    let power = sol.leo_power();
    if power > limits.power * (1.0 + tol) {
        return Err(FeasibilityViolation::Power {
            power,
            budget: limits.power,
        });
    }
    if let Some(i_th) = limits.leakage_threshold {
        for k in 0..ch.k_g() {
            let budget = leakage_budget(k, ch, i_th);
            let leakage = design_leakage(k, sol, ch);
            if leakage > budget * (1.0 + tol) + 1e-12 {
                return Err(FeasibilityViolation::Leakage {
                    gu: k,
                    leakage,
                    threshold: budget,
                });
            }
        }
    }
    if sol
        .c_spc
        .iter()
        .chain(&sol.c)
        .any(|c| !c.is_finite() || *c < 0.0)
    {
        return Err(FeasibilityViolation::Portion);
    }
    let s = stream_rates(sol, ch);
    let sum_spc: f64 = sol.c_spc.iter().sum();
    if sum_spc > s.r_spc * (1.0 + tol) + 1e-12 {
        return Err(FeasibilityViolation::SuperCommonPortions {
            sum: sum_spc,
            rate: s.r_spc,
        });
    }
    let sum_c: f64 = sol.c.iter().sum();
    if sum_c > s.r_c * (1.0 + tol) + 1e-12 {
        return Err(FeasibilityViolation::CommonPortions {
            sum: sum_c,
            rate: s.r_c,
        });
    }
    Ok(())
}
