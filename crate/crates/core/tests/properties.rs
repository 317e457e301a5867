use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spc_rsma::channel::{build_channel_set_for, matched_geo_precoders, SnapshotGeometry};
use spc_rsma::conic::{parse_dump, AffineExpr, ConicProblem, Constraint, MatrixTerm};
use spc_rsma::linalg::complex_gaussian;
use spc_rsma::optimizer::{
    build_lifted_matrices, randomize_and_rescale, recover_rate_portions, DesignInputs,
    ObjectiveKind, RandomizationSettings, StreamLayout,
};
use spc_rsma::scenario::{write_csv, LeakageChannel};
use spc_rsma::{CMatrix, CVector, ExperimentRecord, ScenarioConfig, SchemeId, C64};

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6..1e6f64, -1.0..1.0f64, Just(0.0), Just(1.0 / 3.0)]
}

fn expr(scalars: usize, side: usize) -> impl Strategy<Value = AffineExpr> {
    let terms = prop::collection::vec((0..side.max(1), 0..side.max(1), finite(), finite()), 0..4);
    (
        finite(),
        prop::collection::vec((0..scalars.max(1), finite()), 0..4),
        terms,
    )
        .prop_map(move |(constant, s, m)| AffineExpr {
            constant,
            scalars: if scalars == 0 { vec![] } else { s },
            matrix: if side == 0 {
                vec![]
            } else {
                m.into_iter()
                    .map(|(a, b, re, im)| {
                        let (row, col) = (a.min(b), a.max(b));
                        MatrixTerm {
                            row,
                            col,
                            coef: C64::new(re, if row == col { 0.0 } else { im }),
                        }
                    })
                    .collect()
            },
        })
}

fn problem() -> impl Strategy<Value = ConicProblem> {
    (1usize..4, 0usize..4).prop_flat_map(|(n, side)| {
        let bound = prop_oneof![
            (finite(), 0.0..10.0f64).prop_map(|(lo, w)| (lo, lo + w)),
            Just((f64::NEG_INFINITY, f64::INFINITY)),
            finite().prop_map(|lo| (lo, f64::INFINITY)),
        ];
        let constraint = prop_oneof![
            expr(n, side).prop_map(Constraint::Le),
            expr(n, side).prop_map(Constraint::Eq),
            (expr(n, side), expr(n, side)).prop_map(|(u, v)| Constraint::Exp(u, v)),
        ];
        (
            prop::collection::vec(bound, n),
            expr(n, side),
            prop::collection::vec(constraint, 0..5),
        )
            .prop_map(move |(bounds, objective, constraints)| ConicProblem {
                bounds,
                psd_side: side,
                objective,
                constraints,
            })
    })
}

proptest! {
    #[test]
    fn conic_dump_round_trips(p in problem()) {
        let text = p.to_dump();
        let back = parse_dump(&text).unwrap();
        prop_assert_eq!(&back, &p);
        prop_assert_eq!(back.to_dump(), text);
    }

    #[test]
    fn config_toml_round_trips(
        seed in any::<u64>(),
        power in 0.1..100.0f64,
        angle in -10.0..10.0f64,
        demands in prop::collection::vec(0.0..4.0f64, 4),
        csi in 0.0..0.2f64,
    ) {
        let mut c = ScenarioConfig { seed, ..Default::default() };
        c.leo.power_w = power;
        c.users.off_boresight_deg = angle;
        c.users.demands = demands;
        c.design.csi_error_variance = csi;
        let back = ScenarioConfig::from_toml_str(&c.to_toml_string()).unwrap();
        prop_assert_eq!(back, c);
    }

    #[test]
    fn csv_keeps_twelve_significant_digits(values in prop::collection::vec(-1e9..1e9f64, 13)) {
        let r = ExperimentRecord {
            scheme: SchemeId::RsmaTtm,
            sweep_value: values[0],
            draw: 3,
            r_total: values[1..3].to_vec(),
            served: values[3..5].to_vec(),
            objective: values[5],
            satisfaction: values[6],
            r_spc: values[7],
            r_c: values[8],
            il_estimated: values[9],
            il_true: values[10],
            power: values[11],
            iterations: 7,
            wall_time_s: values[12],
        };
        let csv = write_csv(std::slice::from_ref(&r), false);
        let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
        let parsed: Vec<f64> = row[3..14].iter().map(|s| s.parse().unwrap()).collect();
        let expected = [&values[1..5], &values[5..12]].concat();
        for (p, e) in parsed.iter().zip(&expected) {
            prop_assert!((p - e).abs() <= 5e-12 * e.abs());
        }
        prop_assert_eq!(row[14], "7");
        prop_assert_eq!(row[15], "");
    }

    #[test]
    fn portions_match_the_pooled_optimum(
        r_spc in 0.0..3.0f64,
        r_c in 0.0..3.0f64,
        r_p in prop::collection::vec(0.0..3.0f64, 1..6),
        demand_pool in prop::collection::vec(0.0..3.0f64, 6),
    ) {
        let demands = demand_pool[..r_p.len()].to_vec();
        let (c_spc, c) = recover_rate_portions(r_spc, r_c, &r_p, &demands);
        prop_assert!(c_spc.iter().chain(&c).all(|&x| x >= 0.0));
        prop_assert!(c_spc.iter().sum::<f64>() <= r_spc * (1.0 + 1e-12) + 1e-15);
        prop_assert!(c.iter().sum::<f64>() <= r_c * (1.0 + 1e-12) + 1e-15);
        let got: f64 = (0..r_p.len()).map(|k| (c_spc[k] + c[k] + r_p[k]).min(demands[k])).sum();
        let floor: f64 = r_p.iter().zip(&demands).map(|(r, t)| r.min(*t)).sum();
        let deficit: f64 = r_p.iter().zip(&demands).map(|(r, t)| (t - r).max(0.0)).sum();
        prop_assert!((got - (floor + deficit.min(r_spc + r_c))).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Whatever the relaxed matrix, extraction returns a point inside the
    /// power budget and the leakage bound.
    #[test]
    fn extraction_is_always_feasible(
        seed in any::<u64>(),
        x_seed in any::<u64>(),
        rank in 1usize..4,
        scale in 0.01..50.0f64,
        threshold in 0.6..5.0f64,
    ) {
        let config = ScenarioConfig::default();
        let geometry = SnapshotGeometry::from_config(&config).unwrap();
        let ch = build_channel_set_for(&geometry, &config, seed).unwrap();
        let w = matched_geo_precoders(&geometry, &config).unwrap();
        let m = build_lifted_matrices(&ch, &w, StreamLayout::FULL).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(x_seed);
        let side = m.side();
        let mut x = CMatrix::zeros(side, side);
        for _ in 0..rank {
            let v = CVector::from_fn(side, |_, _| complex_gaussian(&mut rng, scale));
            x += &v * v.adjoint();
        }
        let inputs = DesignInputs {
            channels: &ch,
            geo_precoders: &w,
            demands: &config.users.demands,
            power: config.leo.power_w,
            il_threshold: Some(threshold),
            layout: StreamLayout::FULL,
            objective: ObjectiveKind::Ttm,
            tolerance: 1e-3,
            max_iterations: 20,
        };
        let settings = RandomizationSettings { candidates: 50, seed: x_seed, leakage: LeakageChannel::Estimated };
        let (sol, stats) = randomize_and_rescale(&x, &m, &inputs, &settings);
        let power = sol.leo_power();
        prop_assert!(power <= config.leo.power_w * (1.0 + 1e-9));
        for z in &ch.z_hat {
            let leak = z.dotc(&sol.p_c).norm_sqr()
                + sol.p_priv.iter().map(|p| z.dotc(p).norm_sqr()).sum::<f64>()
                + ch.sigma_e2 * power;
            prop_assert!(leak <= threshold * (1.0 + 1e-9), "leakage {leak} over {threshold}");
        }
        prop_assert!(stats.objective.is_finite() && stats.objective >= 0.0);
    }
}
