mod common;

use common::{central, random_cases, rel_err, Case, Congestion, Gain};
use proptest::prelude::*;
use twosided::equilibrium::{solve_for_demands, Sign};
use twosided::oracle::fixed_point_equilibrium;
use twosided::{comparative_statics, solve_equilibrium, PricePair};

fn case_strategy() -> impl Strategy<Value = Case> {
    (
        prop::bool::ANY,
        prop::bool::ANY,
        0.5f64..3.0,
        0.5f64..3.0,
        0.3f64..10.0,
        0.1f64..5.0,
        0.0f64..0.99,
        0.0f64..0.99,
    )
        .prop_map(|(rec, sharing, alpha, beta, mu, s, p, q)| Case {
            gain: if rec {
                Gain::Reciprocal
            } else {
                Gain::Exponential
            },
            congestion: if sharing {
                Congestion::Sharing
            } else {
                Congestion::Mm1
            },
            alpha,
            beta,
            mu,
            s,
            cost: 0.7,
            p,
            q,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn solution_invariants(case in case_strategy()) {
        let eq = solve_equilibrium(&case.model(), case.prices()).unwrap();
        let lambda = case.m() * case.n() * case.rho(eq.congestion);
        prop_assert!(eq.elasticity > 0.0 && eq.elasticity <= 1.0);
        prop_assert!((eq.throughput - lambda).abs() <= 1e-12 * lambda);
        // residual recomputed from the reference formulas
        let gap = case.supply(eq.congestion) - lambda;
        prop_assert!(gap.abs() <= 1e-10 * lambda.max(1.0), "gap {gap:e}");
        prop_assert!(eq.gap_residual <= 1e-10 * eq.throughput.max(1.0));
    }

    #[test]
    fn gap_increasing_over_bracket(case in case_strategy()) {
        let eq = solve_equilibrium(&case.model(), case.prices()).unwrap();
        let demand = case.m() * case.n();
        let floor = match case.congestion {
            Congestion::Sharing => 0.0,
            Congestion::Mm1 => 1.0 / case.mu,
        };
        let top = floor + 2.0 * (eq.congestion - floor) + 1.0;
        let mut last = f64::NEG_INFINITY;
        for i in 0..100 {
            let phi = floor + 1e-9 + (top - floor) * i as f64 / 99.0;
            let g = case.supply(phi) - demand * case.rho(phi);
            prop_assert!(g > last);
            last = g;
        }
    }

    #[test]
    fn re_solve_is_idempotent(case in case_strategy()) {
        let model = case.model();
        let eq = solve_equilibrium(&model, case.prices()).unwrap();
        let again = solve_for_demands(&model, eq.user_demand, eq.cp_demand).unwrap();
        prop_assert!((again.congestion - eq.congestion).abs() <= 1e-12 * eq.congestion.max(1.0));
    }

    #[test]
    fn fixed_point_agrees(case in case_strategy()) {
        let model = case.model();
        let eq = solve_equilibrium(&model, case.prices()).unwrap();
        let fp = fixed_point_equilibrium(&model, case.prices()).unwrap();
        prop_assert!((fp.congestion - eq.congestion).abs() <= 1e-10 * eq.congestion.max(1.0));
    }
}

#[test]
fn closed_form_cases() {
    // sharing, mn/μ = 2: φ² + φ − 2 = 0
    let case = Case {
        gain: Gain::Reciprocal,
        congestion: Congestion::Sharing,
        alpha: 1.0,
        beta: 1.0,
        mu: 0.5,
        s: 1.0,
        cost: 0.7,
        p: 0.0,
        q: 0.0,
    };
    let eq = solve_equilibrium(&case.model(), case.prices()).unwrap();
    assert!((eq.congestion - 1.0).abs() <= 1e-10);
    assert!((eq.throughput - 0.5).abs() <= 1e-10);
    // MM1, μ = 2: 2φ² − 1 = 0
    let case = Case {
        congestion: Congestion::Mm1,
        mu: 2.0,
        ..case
    };
    let eq = solve_equilibrium(&case.model(), case.prices()).unwrap();
    assert!((eq.congestion - 0.5f64.sqrt()).abs() <= 1e-10);
    assert!((eq.throughput - (2.0 - 2f64.sqrt())).abs() <= 1e-10);
}

#[test]
fn zero_demand_sits_at_floor() {
    for c in random_cases(3, 20, 0.1, 0.9) {
        let model = c.model();
        let eq = solve_equilibrium(&model, PricePair::new(1.0, c.q)).unwrap();
        assert!(eq.degenerate);
        assert_eq!(eq.throughput, 0.0);
        let floor = if c.congestion == Congestion::Mm1 {
            1.0 / c.mu
        } else {
            0.0
        };
        assert_eq!(eq.congestion, floor);
    }
}

#[test]
fn statics_match_finite_differences() {
    for c in random_cases(11, 400, 0.05, 0.95) {
        let model = c.model();
        let st = comparative_statics(&model, c.prices()).unwrap();
        let eq = &st.equilibrium;
        let (m, n) = (eq.user_demand, eq.cp_demand);
        let at_demands = |mm: f64, nn: f64| solve_for_demands(&model, mm, nn).unwrap();
        let at_prices = |p: f64, q: f64| solve_equilibrium(&model, PricePair::new(p, q)).unwrap();
        let at_mu =
            |mu: f64| solve_equilibrium(&model.clone().with_capacity(mu), c.prices()).unwrap();
        let fd = [
            ("dphi_dm", central(|x| at_demands(x, n).congestion, m)),
            ("dlambda_dm", central(|x| at_demands(x, n).throughput, m)),
            ("dphi_dn", central(|x| at_demands(m, x).congestion, n)),
            ("dlambda_dn", central(|x| at_demands(m, x).throughput, n)),
            ("dphi_dmu", central(|x| at_mu(x).congestion, c.mu)),
            ("dlambda_dmu", central(|x| at_mu(x).throughput, c.mu)),
            ("dphi_dp", central(|x| at_prices(x, c.q).congestion, c.p)),
            ("dlambda_dp", central(|x| at_prices(x, c.q).throughput, c.p)),
            ("dphi_dq", central(|x| at_prices(c.p, x).congestion, c.q)),
            ("dlambda_dq", central(|x| at_prices(c.p, x).throughput, c.q)),
        ];
        for ((name, analytic, sign), (fd_name, numeric)) in st.entries().into_iter().zip(fd) {
            assert_eq!(name, fd_name);
            assert!(
                rel_err(analytic, numeric, 1e-6) <= 1e-4,
                "{name}: {analytic} vs {numeric} at {c:?}"
            );
            assert!(sign.holds_for(analytic), "{name} sign at {c:?}");
        }
    }
}

#[test]
fn demand_elasticities_of_throughput_coincide() {
    for c in random_cases(12, 300, 0.05, 0.95) {
        let model = c.model();
        let eq = solve_equilibrium(&model, c.prices()).unwrap();
        let (m, n, lambda) = (eq.user_demand, eq.cp_demand, eq.throughput);
        let h = 1e-5;
        let em = (solve_for_demands(&model, m * (1.0 + h), n)
            .unwrap()
            .throughput
            - solve_for_demands(&model, m * (1.0 - h), n)
                .unwrap()
                .throughput)
            / (2.0 * h * lambda);
        let en = (solve_for_demands(&model, m, n * (1.0 + h))
            .unwrap()
            .throughput
            - solve_for_demands(&model, m, n * (1.0 - h))
                .unwrap()
                .throughput)
            / (2.0 * h * lambda);
        assert!((em - en).abs() <= 1e-8, "{em} vs {en} at {c:?}");
        assert!((em - eq.elasticity).abs() <= 1e-6);
    }
}

#[test]
fn price_elasticity_ratio() {
    for c in random_cases(13, 300, 0.05, 0.95) {
        let st = comparative_statics(&c.model(), c.prices()).unwrap();
        let lambda = st.equilibrium.throughput;
        let e_lp = (st.dlambda_dp * c.p / lambda).abs();
        let e_lq = (st.dlambda_dq * c.q / lambda).abs();
        let e_mp = c.user_hazard() * c.p;
        let e_nq = c.cp_hazard() * c.q;
        assert!(rel_err(e_lp * e_nq, e_lq * e_mp, 1e-300) <= 1e-6, "{c:?}");
    }
}

#[test]
fn elasticity_identities_by_family() {
    for c in random_cases(14, 500, 0.0, 0.99) {
        let eq = solve_equilibrium(&c.model(), c.prices()).unwrap();
        let phi = eq.congestion;
        let direct = 1.0 / (1.0 + c.m() * c.n() * c.rho_slope(phi).abs() / c.supply_slope(phi));
        assert!((eq.elasticity - direct).abs() <= 1e-10);
        let family_form = match c.congestion {
            Congestion::Sharing => 1.0 / (1.0 + phi * c.rho_slope(phi).abs() / c.rho(phi)),
            Congestion::Mm1 => 1.0 / (1.0 + c.m() * c.n() * (-phi * phi * c.rho_slope(phi))),
        };
        assert!((eq.elasticity - family_form).abs() <= 1e-10, "{c:?}");
    }
}

#[test]
fn baseline_signs() {
    let c = Case {
        gain: Gain::Reciprocal,
        congestion: Congestion::Sharing,
        alpha: 1.0,
        beta: 1.0,
        mu: 1.0,
        s: 1.0,
        cost: 0.7,
        p: 0.3,
        q: 0.3,
    };
    let st = comparative_statics(&c.model(), c.prices()).unwrap();
    assert!(Sign::Positive.holds_for(st.dphi_dm));
    assert!(st.dphi_dmu < 0.0 && st.dlambda_dmu > 0.0);
    assert!(st.dphi_dp < 0.0 && st.dlambda_dp < 0.0);
}

#[test]
fn no_congestion_limit() {
    let c = Case {
        gain: Gain::Reciprocal,
        congestion: Congestion::Sharing,
        alpha: 1.0,
        beta: 1.0,
        mu: 1e9,
        s: 1.0,
        cost: 0.7,
        p: 0.3,
        q: 0.3,
    };
    let eq = solve_equilibrium(&c.model(), c.prices()).unwrap();
    assert!((eq.elasticity - 1.0).abs() <= 1e-3);
}
