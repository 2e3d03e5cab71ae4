use plap_core::capacity::{wiener_probe, Verdict, WienerProbeConfig};
use plap_core::domain::{build_grid, GridDomain};
use plap_core::solver::{
    solve_dirichlet, solve_obstacle, verify_comparison, BoundaryData, ObstacleConstraint, Sign,
    SolverConfig,
};
use plap_core::{math, Field, OperatorSpec, ShapeSpec};
use proptest::prelude::*;

const TOL: f64 = 1e-9;

fn disk(h: f64) -> GridDomain {
    build_grid(&ShapeSpec::ball(2, &[0.0, 0.0], 1.0), h).unwrap()
}

fn ball_nodes(g: &GridDomain, c: [f64; 2], r: f64) -> Vec<usize> {
    g.interior_nodes()
        .filter(|&i| math::dist(&g.point(i), &[c[0], c[1], 0.0]) <= r)
        .collect()
}

#[test]
fn energy_never_increases() {
    let g = disk(1.0 / 16.0);
    let phi = BoundaryData::from_fn(&g, |x| (3.0 * x[0]).sin() + x[1] * x[1], true);
    for t in [1.5, 3.0] {
        let cfg = SolverConfig {
            track_energy: true,
            ..SolverConfig::with_tol(TOL)
        };
        let (_, rep) = solve_dirichlet(&g, &OperatorSpec::p_laplace(t), &phi, &cfg).unwrap();
        assert!(rep.converged && rep.energy_trace.len() > 2);
        for w in rep.energy_trace.windows(2) {
            assert!(
                w[1] <= w[0] + 1e-14 * w[0].abs().max(1.0),
                "t = {t}: {} -> {}",
                w[0],
                w[1]
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn maximum_principle_and_contraction(
        t in prop::sample::select(vec![1.5, 3.0]),
        a in -2.0..2.0f64, b in -2.0..2.0f64, k in 1.0..4.0f64, shift in -0.5..0.5f64,
    ) {
        let g = disk(1.0 / 16.0);
        let spec = OperatorSpec::p_laplace(t);
        let cfg = SolverConfig::with_tol(TOL);
        let phi = BoundaryData::from_fn(&g, |x| a * x[0] + b * (k * x[1]).sin(), true);
        let psi = BoundaryData::from_fn(&g, |x| a * x[0] + b * (k * x[1]).sin() + shift + 0.3 * x[0] * x[1], true);
        let (u, ru) = solve_dirichlet(&g, &spec, &phi, &cfg).unwrap();
        let (v, rv) = solve_dirichlet(&g, &spec, &psi, &cfg).unwrap();
        prop_assert!(ru.converged && rv.converged);
        let rep = verify_comparison(&g, &u, &phi, &v, &psi, 2.0 * TOL);
        prop_assert!(rep.passed(), "{:?}", rep);
    }

    #[test]
    fn potentials_grow_with_the_obstacle(
        cx in -0.2..0.2f64, cy in -0.2..0.2f64, r in 0.1..0.2f64, grow in 0.02..0.2f64,
        t in prop::sample::select(vec![1.5, 2.0, 3.0]),
    ) {
        let g = disk(1.0 / 16.0);
        let spec = OperatorSpec::p_laplace(t);
        let cfg = SolverConfig::with_tol(TOL);
        let small = ObstacleConstraint { nodes: ball_nodes(&g, [cx, cy], r), m: 1.0, sign: Sign::Plus };
        let large = ObstacleConstraint { nodes: ball_nodes(&g, [cx, cy], r + grow), m: 1.0, sign: Sign::Plus };
        prop_assume!(!small.nodes.is_empty());
        let (u, _) = solve_obstacle(&g, &small, &spec, &cfg).unwrap();
        let (v, _) = solve_obstacle(&g, &large, &spec, &cfg).unwrap();
        for i in g.interior_nodes() {
            prop_assert!(u.values[i] <= v.values[i] + 2.0 * TOL);
        }
    }
}

#[test]
fn odd_operators_give_antisymmetric_potentials() {
    let g = disk(1.0 / 16.0);
    let nodes = ball_nodes(&g, [0.1, -0.2], 0.25);
    let cfg = SolverConfig::with_tol(TOL);
    for t in [1.5, 3.0] {
        let spec = OperatorSpec::p_laplace(t);
        let plus = ObstacleConstraint {
            nodes: nodes.clone(),
            m: 0.7,
            sign: Sign::Plus,
        };
        let minus = ObstacleConstraint {
            sign: Sign::Minus,
            ..plus.clone()
        };
        let (u, _) = solve_obstacle(&g, &plus, &spec, &cfg).unwrap();
        let (v, _) = solve_obstacle(&g, &minus, &spec, &cfg).unwrap();
        let diff = u.max_diff_where(&v.negated(), |i| g.is_interior(i));
        assert!(diff <= 2.0 * TOL, "t = {t}: {diff}");
        assert!(nodes
            .iter()
            .all(|&i| u.values[i] == 0.7 && v.values[i] == -0.7));
        let _ = Field::zeros(&g);
    }
}

#[test]
fn probe_verdict_ignores_the_scale_of_m() {
    let omega = ShapeSpec::ball(2, &[0.0, 0.0], 0.5);
    let cfg = |m: f64| WienerProbeConfig {
        y: vec![0.5, 0.0],
        m,
        rho0: 0.5,
        r0: 0.25,
        ratio: 2.0,
        count: 3,
        levels: vec![1.0 / 32.0, 1.0 / 64.0],
        decay: 0.5,
        floor: 0.25,
        stagnation_radius: None,
        solver: SolverConfig::with_tol(1e-9),
        criteria: Default::default(),
    };
    for t in [2.0, 3.0] {
        let spec = OperatorSpec::p_laplace(t);
        let a = wiener_probe(&omega, &cfg(1.0), &spec).unwrap();
        let b = wiener_probe(&omega, &cfg(4.0), &spec).unwrap();
        assert_eq!(a.verdict, b.verdict, "t = {t}");
        assert_ne!(a.verdict, Verdict::Inconclusive);
        let (qa, qb) = (a.decay_ratio.unwrap(), b.decay_ratio.unwrap());
        assert!((qa - qb).abs() <= 1e-6, "t = {t}: {qa} vs {qb}");
        for l in &a.levels {
            let osc = &l.result.as_ref().unwrap().oscillation;
            for w in osc.windows(2) {
                assert!(w[1].omega <= w[0].omega + 1e-9);
            }
        }
    }
}
