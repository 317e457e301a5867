//! Splitting the super-common and common rates among LUs once the
//! precoders are fixed.

use super::ObjectiveKind;

/// Hands out `pool` to fill `needs` in user order, returning the grants
/// and what is left.
fn fill(pool: f64, needs: &mut [f64]) -> (Vec<f64>, f64) {
    let mut left = pool.max(0.0);
    let grants = needs
        .iter_mut()
        .map(|need| {
            let g = need.min(left).max(0.0);
            *need -= g;
            left -= g;
            g
        })
        .collect();
    (grants, left)
}

/// Demand-driven split: each LU's deficit `max(0, T_j − R_p,j)` is filled
/// in user order, first from the super-common pool and then from the
/// common pool. Capacity left over goes to the lowest-index user.
///
/// This attains the optimum of `max Σ min(T_j, c_spc,j + c_j + R_p,j)`
/// subject to `Σ c_spc ≤ R_spc`, `Σ c ≤ R_c` and non-negative portions.
pub fn recover_rate_portions(
    r_spc: f64,
    r_c: f64,
    r_p: &[f64],
    demands: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let mut need: Vec<f64> = demands
        .iter()
        .zip(r_p)
        .map(|(&t, &r)| (t - r).max(0.0))
        .collect();
    let (mut c_spc, spc_left) = fill(r_spc, &mut need);
    let (mut c, c_left) = fill(r_c, &mut need);
    if let Some(first) = c_spc.first_mut() {
        *first += spc_left;
    }
    if let Some(first) = c.first_mut() {
        *first += c_left;
    }
    (c_spc, c)
}

/// Max-min split: raises the lowest totals together (water-filling).
pub fn water_fill_portions(r_spc: f64, r_c: f64, r_p: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let k = r_p.len();
    if k == 0 {
        return (Vec::new(), Vec::new());
    }
    let pool = r_spc.max(0.0) + r_c.max(0.0);
    let mut sorted = r_p.to_vec();
    sorted.sort_by(f64::total_cmp);
    // find the level L with Σ max(0, L − R_p,j) = pool
    let mut level = sorted[0] + pool;
    let mut prefix = 0.0;
    for (i, &r) in sorted.iter().enumerate() {
        prefix += r;
        let candidate = (pool + prefix) / (i + 1) as f64;
        if i + 1 == k || candidate <= sorted[i + 1] {
            level = candidate;
            break;
        }
    }
    let mut need: Vec<f64> = r_p.iter().map(|&r| (level - r).max(0.0)).collect();
    let (mut c_spc, spc_left) = fill(r_spc, &mut need);
    let (mut c, c_left) = fill(r_c, &mut need);
    // rounding crumbs
    c_spc[0] += spc_left;
    c[0] += c_left;
    (c_spc, c)
}

/// Sum-rate split: the total is fixed, so the pools are shared equally.
pub fn equal_portions(r_spc: f64, r_c: f64, k: usize) -> (Vec<f64>, Vec<f64>) {
    if k == 0 {
        return (Vec::new(), Vec::new());
    }
    (
        vec![r_spc.max(0.0) / k as f64; k],
        vec![r_c.max(0.0) / k as f64; k],
    )
}

pub fn portions_for(
    kind: ObjectiveKind,
    r_spc: f64,
    r_c: f64,
    r_p: &[f64],
    demands: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    match kind {
        ObjectiveKind::Ttm => recover_rate_portions(r_spc, r_c, r_p, demands),
        ObjectiveKind::Stm => equal_portions(r_spc, r_c, r_p.len()),
        ObjectiveKind::Mmf => water_fill_portions(r_spc, r_c, r_p),
    }
}

/// Value of the scheme's own objective for per-LU totals.
pub fn objective_value(kind: ObjectiveKind, totals: &[f64], demands: &[f64]) -> f64 {
    match kind {
        ObjectiveKind::Ttm => totals.iter().zip(demands).map(|(&r, &t)| r.min(t)).sum(),
        ObjectiveKind::Stm => totals.iter().sum(),
        ObjectiveKind::Mmf => totals.iter().copied().fold(f64::INFINITY, f64::min),
    }
}
