use super::ExperimentRecord;
use crate::baselines::SchemeId;
use std::fmt::Write;

/// Significant digits of every float written to CSV.
pub const CSV_FLOAT_DIGITS: usize = 12;

fn float(x: f64) -> String {
    if x.is_finite() {
        format!("{:.*e}", CSV_FLOAT_DIGITS - 1, x)
    } else {
        x.to_string()
    }
}

/// Renders records as CSV. Columns follow the record's field order, with
/// the per-LU vectors expanded to one column per LU. Wall time is left
/// blank unless `timing` is set so that output stays byte-stable.
pub fn write_csv(records: &[ExperimentRecord], timing: bool) -> String {
    let k = records.first().map_or(0, |r| r.r_total.len());
    let mut out = String::from("scheme,sweep_value,draw");
    for i in 1..=k {
        write!(out, ",r_total_{i}").unwrap();
    }
    for i in 1..=k {
        write!(out, ",served_{i}").unwrap();
    }
    out.push_str(
        ",objective,satisfaction,r_spc,r_c,il_estimated,il_true,power,iterations,wall_time_s\n",
    );
    for r in records {
        write!(out, "{},{},{}", r.scheme, float(r.sweep_value), r.draw).unwrap();
        for v in r.r_total.iter().chain(&r.served) {
            write!(out, ",{}", float(*v)).unwrap();
        }
        for v in [
            r.objective,
            r.satisfaction,
            r.r_spc,
            r.r_c,
            r.il_estimated,
            r.il_true,
            r.power,
        ] {
            write!(out, ",{}", float(v)).unwrap();
        }
        write!(out, ",{},", r.iterations).unwrap();
        if timing {
            out.push_str(&float(r.wall_time_s));
        }
        out.push('\n');
    }
    out
}

/// Monte-Carlo mean over the draws of one (scheme, sweep value) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scheme: SchemeId,
    pub sweep_value: f64,
    pub draws: usize,
    pub mean_objective: f64,
    pub se_objective: f64,
    pub mean_satisfaction: f64,
    pub se_satisfaction: f64,
    /// Mean served throughput per LU.
    pub mean_served: Vec<f64>,
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn groups(records: &[ExperimentRecord]) -> Vec<&[ExperimentRecord]> {
    records
        .chunk_by(|a, b| a.scheme == b.scheme && a.sweep_value.total_cmp(&b.sweep_value).is_eq())
        .collect()
}

/// Means and standard errors per (scheme, sweep value). Expects records in
/// their sorted output order.
pub fn summarize(records: &[ExperimentRecord]) -> Vec<SummaryRow> {
    groups(records)
        .into_iter()
        .map(|g| {
            let obj: Vec<f64> = g.iter().map(|r| r.objective).collect();
            let sat: Vec<f64> = g.iter().map(|r| r.satisfaction).collect();
            let (mean_objective, se_objective) = mean_se(&obj);
            let (mean_satisfaction, se_satisfaction) = mean_se(&sat);
            let k = g[0].served.len();
            let mean_served = (0..k)
                .map(|i| g.iter().map(|r| r.served[i]).sum::<f64>() / g.len() as f64)
                .collect();
            SummaryRow {
                scheme: g[0].scheme,
                sweep_value: g[0].sweep_value,
                draws: g.len(),
                mean_objective,
                se_objective,
                mean_satisfaction,
                se_satisfaction,
                mean_served,
            }
        })
        .collect()
}

/// Relative throughput loss against the single-LEO reference.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationLoss {
    pub scheme: SchemeId,
    pub separation_deg: f64,
    /// `1 − mean(objective) / mean(reference objective)`
    pub loss: f64,
    /// Standard error from the paired per-draw differences.
    pub se: f64,
}

/// Losses of a separation sweep; reference rows carry `sweep_value = inf`.
pub fn separation_losses(records: &[ExperimentRecord]) -> Vec<SeparationLoss> {
    let mut out = Vec::new();
    for g in groups(records) {
        if g[0].sweep_value.is_infinite() {
            continue;
        }
        let reference: Vec<&ExperimentRecord> = records
            .iter()
            .filter(|r| r.scheme == g[0].scheme && r.sweep_value.is_infinite())
            .collect();
        let paired: Vec<(f64, f64)> = g
            .iter()
            .filter_map(|r| {
                reference
                    .iter()
                    .find(|b| b.draw == r.draw)
                    .map(|b| (b.objective, r.objective))
            })
            .collect();
        let base_mean = paired.iter().map(|p| p.0).sum::<f64>() / paired.len() as f64;
        let diffs: Vec<f64> = paired.iter().map(|(b, s)| (b - s) / base_mean).collect();
        let (loss, se) = mean_se(&diffs);
        out.push(SeparationLoss {
            scheme: g[0].scheme,
            separation_deg: g[0].sweep_value,
            loss,
            se,
        });
    }
    out
}
