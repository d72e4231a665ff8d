//! Solver behavior against independent oracles: grid search, explicit rank
//! computations and perturbation arguments.

mod common;

use condrisk::axioms::RiskMeasureKind;
use condrisk::optimizer::{
    brute_force_minimize, feasibility_check, pricing_kernel, solve_entropic, solve_mmv,
    verify_thm46, BruteConstraints, EntropicProblemSpec, GridSpec, SolverOptions,
};
use condrisk::risk::mmv;
use condrisk::{
    ConditionalValue, EntropicParams, Error, FiniteSpace, MarketModel, MmvParams, NormOrder,
    Partition, RandomVariable,
};
use rand::Rng;

fn opts() -> SolverOptions {
    SolverOptions::default()
}

/// Rank of a 2×d matrix from its 2×2 minors.
fn rank_2xd(rows: [&[f64]; 2], tol: f64) -> usize {
    let d = rows[0].len();
    let mut biggest_minor: f64 = 0.0;
    for i in 0..d {
        for j in i + 1..d {
            biggest_minor = biggest_minor.max((rows[0][i] * rows[1][j] - rows[0][j] * rows[1][i]).abs());
        }
    }
    let scale = rows.iter().flat_map(|r| r.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
    if biggest_minor > tol * scale * scale {
        2
    } else if scale > tol {
        1
    } else {
        0
    }
}

#[test]
fn rank_check_agrees_with_minors() {
    let mut rng = common::rng(11);
    let mut seen = [0usize; 3];
    for i in 0..120 {
        let d = rng.random_range(1..=4);
        let mut m = common::random_market(&mut rng, d, 2, 4);
        // every third market makes payoff 1 constant on atom 0, which drops
        // the rank there when it is the only risky payoff
        if i % 3 == 0 && d >= 2 {
            let f = m.partition().clone();
            let mut payoffs = m.payoffs().to_vec();
            payoffs[1] = RandomVariable::new((0..f.outcome_count()).map(|o| if f.atom_of(o) == 0 { 2.0 } else { payoffs[1][o] }).collect());
            m = MarketModel::new(f, payoffs, m.state_price().clone()).unwrap();
        }
        let report = m.assumption_48(1e-10);
        let f = m.partition();
        let prices = m.payoff_prices();
        for a in 0..f.atom_count() {
            let pi: Vec<f64> = prices.iter().map(|p| p[a]).collect();
            let mean: Vec<f64> = m.payoffs().iter().map(|y| f.expect(y).unwrap()[a]).collect();
            let expected = rank_2xd([&pi, &mean], 1e-10);
            assert_eq!(report.ranks[a], expected, "market {i} atom {a}");
            seen[expected] += 1;
        }
        if let Some(z) = &report.witness {
            let price = m.price(z).unwrap();
            let mean = f.expect(z).unwrap();
            for a in 0..f.atom_count() {
                assert!(price[a].abs() < 1e-12);
                assert!(mean[a].abs() > 1e-12);
            }
        }
    }
    assert!(seen[1] > 0 && seen[2] > 0);
}

#[test]
fn span_of_constants_gives_the_risk_free_return() {
    let f = Partition::new(FiniteSpace::uniform(4).unwrap(), vec![0, 0, 1, 1]).unwrap();
    let m = MarketModel::new(
        f,
        vec![RandomVariable::constant(1.0, 4)],
        RandomVariable::new(vec![0.9, 1.0, 1.2, 1.3]),
    )
    .unwrap();
    let sol = solve_mmv(&m, &MmvParams::scalar(1.0).unwrap(), &opts()).unwrap();
    let rf = m.partition().lift(&m.risk_free_return().unwrap()).unwrap();
    assert!(sol.x_star.max_abs_diff(&rf).unwrap() < 1e-12);
    assert!(sol.certificate_residual <= 1e-10);
}

#[test]
fn atoms_decouple() {
    // changing the market on atom 1 leaves the solution on atom 0 untouched
    let mut rng = common::rng(12);
    for _ in 0..10 {
        let m = common::random_market(&mut rng, 3, 2, 5);
        let f = m.partition().clone();
        let mut payoffs = m.payoffs().to_vec();
        let mut psi = m.state_price().clone();
        for o in 0..f.outcome_count() {
            if f.atom_of(o) == 1 {
                payoffs[2].0[o] = rng.random_range(0.0..3.0);
                psi.0[o] *= rng.random_range(0.7..1.3);
            }
        }
        let m2 = MarketModel::new(f.clone(), payoffs, psi).unwrap();
        let b = MmvParams::scalar(1.7).unwrap();
        let s1 = solve_mmv(&m, &b, &opts()).unwrap();
        let s2 = solve_mmv(&m2, &b, &opts()).unwrap();
        let spec = EntropicProblemSpec::scalar(1.02, 50.0, 3.0).unwrap();
        let g = EntropicParams::scalar(1.0).unwrap();
        let e1 = solve_entropic(&m, &g, &spec, &opts()).unwrap();
        let e2 = solve_entropic(&m2, &g, &spec, &opts()).unwrap();
        for &o in f.members(0) {
            assert_eq!(s1.x_star[o], s2.x_star[o]);
            assert_eq!(e1.x_star[o], e2.x_star[o]);
        }
        assert_eq!(s1.value[0], s2.value[0]);
    }
}

#[test]
fn certificate_characterizes_optimality() {
    let mut rng = common::rng(13);
    for _ in 0..20 {
        let m = common::random_market(&mut rng, 2, 2, 4);
        let b = MmvParams::scalar(rng.random_range(0.3..4.0)).unwrap();
        let sol = solve_mmv(&m, &b, &opts()).unwrap();
        assert!(sol.converged && sol.certificate_residual <= 1e-8);
        // zero residual ⇒ optimal: nothing on a fine grid is better
        let beta = b.beta()[0];
        let grid = brute_force_minimize(
            &m,
            RiskMeasureKind::Mmv { beta },
            &BruteConstraints::default(),
            GridSpec { lo: -6.0, hi: 6.0, step: 5e-4 },
        )
        .unwrap();
        for a in 0..2 {
            assert!(sol.value[a] <= grid.value[a] + 1e-9);
            assert!(sol.value[a] >= grid.value[a] - 1e-3);
        }
        // moving off the optimum along a zero-price direction breaks the condition
        for (_, z) in common::zero_price_directions(&m) {
            let off = sol.x_star.add(&z.scale(0.05)).unwrap();
            assert!(verify_thm46(&m, &b, &off).unwrap() > 1e-6);
            let v_off = mmv(&off, &b, m.partition()).unwrap();
            let v = mmv(&sol.x_star, &b, m.partition()).unwrap();
            for a in 0..2 {
                assert!(v_off[a] >= v[a] - 1e-12);
            }
        }
    }
}

#[test]
fn non_returns_are_rejected_by_the_certificate() {
    let mut rng = common::rng(14);
    let m = common::random_market(&mut rng, 2, 1, 4);
    let b = MmvParams::scalar(1.0).unwrap();
    let sol = solve_mmv(&m, &b, &opts()).unwrap();
    let doubled = sol.x_star.scale(2.0);
    assert!(matches!(verify_thm46(&m, &b, &doubled), Err(Error::NotAReturn { .. })));
}

#[test]
fn pricing_kernel_reprices_every_payoff() {
    let m = MarketModel::load(concat!(env!("CARGO_MANIFEST_DIR"), "/data/three_asset_model.json")).unwrap();
    let b = MmvParams::scalar(1.0).unwrap();
    let sol = solve_mmv(&m, &b, &opts()).unwrap();
    let k = pricing_kernel(&m, &b, &sol, 1e-8).unwrap();
    assert!(k.pricing_residual < 1e-10);
    assert!(k.nabla_v.iter().all(|&v| v >= 0.0));
    // the representer lies in M and prices like ψ
    let f = m.partition();
    for y in m.payoffs() {
        let by_riesz = f.inner(&k.riesz, y).unwrap();
        let by_psi = m.price(y).unwrap();
        assert!(by_riesz.max_abs_diff(&by_psi).unwrap() < 1e-10);
    }
    assert!(m.membership(&k.riesz, 1e-10).unwrap().iter().all(|&b| b));
}

#[test]
fn entropic_matches_grid_search() {
    let mut rng = common::rng(15);
    for i in 0..6 {
        // four payoffs: price and mean leave two free directions per atom
        let m = common::random_market(&mut rng, 4, 1, 7);
        let p = if i % 2 == 0 { 2.0 } else { 3.0 };
        let w = 1.05;
        let probe = EntropicProblemSpec::scalar(w, 1e3, p).unwrap();
        let min_norm = feasibility_check(&m, &probe).unwrap()[0].min_norm;
        let r = min_norm * 1.15;
        let spec = EntropicProblemSpec::scalar(w, r, p).unwrap();
        let gamma = 1.5;
        let sol = solve_entropic(&m, &EntropicParams::scalar(gamma).unwrap(), &spec, &opts()).unwrap();
        assert!(sol.converged && sol.unique);
        assert!(sol.max_feasibility_residual() < 1e-10);
        let grid = brute_force_minimize(
            &m,
            RiskMeasureKind::Entropic { gamma },
            &BruteConstraints {
                mean: Some(ConditionalValue::new(vec![w])),
                norm: Some((p, ConditionalValue::new(vec![r]))),
            },
            GridSpec { lo: -3.0, hi: 3.0, step: 4e-3 },
        )
        .unwrap();
        assert!(grid.value[0].is_finite());
        assert!(sol.value[0] <= grid.value[0] + 1e-9, "{} vs {}", sol.value[0], grid.value[0]);
        assert!(sol.value[0] >= grid.value[0] - 5e-3);
        let norm = m.partition().norm(&sol.x_star, NormOrder::Finite(p)).unwrap();
        assert!(norm[0] <= r * (1.0 + 1e-12));
    }
}

#[test]
fn active_ball_has_a_positive_multiplier() {
    let m = MarketModel::load(concat!(env!("CARGO_MANIFEST_DIR"), "/data/three_asset_model.json")).unwrap();
    let g = EntropicParams::scalar(2.0).unwrap();
    let spec = EntropicProblemSpec::new(vec![1.05].into(), vec![1.16, 1.19].into(), 3.0).unwrap();
    let sol = solve_entropic(&m, &g, &spec, &opts()).unwrap();
    assert_eq!(sol.ball_active, vec![false, true]);
    assert!(sol.ball_multiplier[1] > 0.0);
    assert!(sol.norm_slack[1].abs() < 1e-10);
    // a looser radius on atom 1 lowers its optimal value
    let loose = EntropicProblemSpec::new(vec![1.05].into(), vec![1.16, 1.5].into(), 3.0).unwrap();
    let sol2 = solve_entropic(&m, &g, &loose, &opts()).unwrap();
    assert!(sol2.value[1] < sol.value[1]);
    assert_eq!(sol2.value[0], sol.value[0]);
}

#[test]
fn infeasible_atoms_are_listed() {
    let m = MarketModel::load(concat!(env!("CARGO_MANIFEST_DIR"), "/data/three_asset_model.json")).unwrap();
    let g = EntropicParams::scalar(1.0).unwrap();
    let spec = EntropicProblemSpec::new(vec![1.05].into(), vec![5.0, 0.5].into(), 2.0).unwrap();
    match solve_entropic(&m, &g, &spec, &opts()) {
        Err(Error::Infeasible { atoms }) => assert_eq!(atoms, vec![1]),
        other => panic!("expected infeasibility, got {other:?}"),
    }
}

#[test]
fn seeds_change_starts_but_not_the_answer() {
    let m = MarketModel::load(concat!(env!("CARGO_MANIFEST_DIR"), "/data/three_asset_model.json")).unwrap();
    let g = EntropicParams::scalar(2.0).unwrap();
    let spec = EntropicProblemSpec::new(vec![1.05].into(), vec![1.16, 1.19].into(), 3.0).unwrap();
    let a = solve_entropic(&m, &g, &spec, &opts()).unwrap();
    let again = solve_entropic(&m, &g, &spec, &opts()).unwrap();
    assert_eq!(a.x_star, again.x_star);
    let other = SolverOptions { seed: 99, starts: 9, ..opts() };
    let b = solve_entropic(&m, &g, &spec, &other).unwrap();
    assert!(a.x_star.max_abs_diff(&b.x_star).unwrap() < 1e-8);
}

#[test]
fn beta_scales_the_excess_return() {
    // x*(β) - r^f scales like 1/β, while V'(x*) does not move
    let m = MarketModel::load(concat!(env!("CARGO_MANIFEST_DIR"), "/data/demo_model.json")).unwrap();
    let rf = m.partition().lift(&m.risk_free_return().unwrap()).unwrap();
    let x1 = solve_mmv(&m, &MmvParams::scalar(1.0).unwrap(), &opts()).unwrap().x_star;
    let x4 = solve_mmv(&m, &MmvParams::scalar(4.0).unwrap(), &opts()).unwrap().x_star;
    let e1 = x1.sub(&rf).unwrap();
    let e4 = x4.sub(&rf).unwrap().scale(4.0);
    assert!(e1.max_abs_diff(&e4).unwrap() < 1e-9);
}

#[test]
fn grid_search_handles_zero_free_dimensions() {
    let f = Partition::trivial(FiniteSpace::uniform(3).unwrap());
    let m = MarketModel::new(
        f,
        vec![RandomVariable::constant(1.0, 3), RandomVariable::new(vec![0.0, 1.0, 2.0])],
        RandomVariable::new(vec![1.5, 1.0, 0.5]),
    )
    .unwrap();
    let out = brute_force_minimize(
        &m,
        RiskMeasureKind::Entropic { gamma: 1.0 },
        &BruteConstraints { mean: Some(ConditionalValue::new(vec![1.0])), norm: None },
        GridSpec { lo: -1.0, hi: 1.0, step: 0.5 },
    )
    .unwrap();
    assert!(out.argmin[0].is_empty());
    // price and mean pin down the payoff
    assert!((m.price(&out.x).unwrap()[0] - 1.0).abs() < 1e-12);
    assert!((m.partition().expect(&out.x).unwrap()[0] - 1.0).abs() < 1e-12);
}
