use plap_core::domain::{build_grid, GridDomain};
use plap_core::operator::{apply_a, energy, homogeneity_defect, reflect, weak_residual};
use plap_core::{math, Field, OperatorSpec, ShapeSpec};
use proptest::prelude::*;

fn disk(h: f64) -> GridDomain {
    build_grid(&ShapeSpec::ball(2, &[0.0, 0.0], 0.5), h).unwrap()
}

/// A tilted plane plus bounded wiggles, so gradients stay away from zero.
fn wiggly(g: &GridDomain, a: f64, b: f64, c: f64) -> Field {
    Field::from_fn(g, |x| {
        1.5 * x[0] + a * (7.0 * x[1]).sin() + b * (5.0 * x[0] * x[1]).cos() + c * x[1] * x[1]
    })
}

fn fd_matches(spec: &OperatorSpec, g: &GridDomain, u: &Field) -> Result<(), String> {
    let r = weak_residual(spec, g, u).unwrap();
    let scale = u.values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let step = 1e-6 * scale;
    let rmax = r.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let w = math::powf(g.h(), 2.0 - g.dim() as f64);
    for i in g.interior_nodes() {
        let mut up = u.clone();
        up.values[i] += step;
        let mut dn = u.clone();
        dn.values[i] -= step;
        let fd = w * (energy(spec, g, &up).unwrap() - energy(spec, g, &dn).unwrap()) / (2.0 * step);
        let err = (fd - r.values[i]).abs();
        if err > 1e-6 * r.values[i].abs().max(1e-3 * rmax) {
            return Err(format!("node {i}: residual {} vs fd {fd}", r.values[i]));
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn residual_is_the_energy_gradient(
        t in prop::sample::select(vec![1.5, 2.0, 3.0, 4.0]),
        a in -0.3..0.3f64, b in -0.3..0.3f64, c in -1.0..1.0f64,
        regularized in any::<bool>(),
    ) {
        let g = disk(1.0 / 8.0);
        let u = wiggly(&g, a, b, c);
        let spec = if regularized { OperatorSpec::regularized(t) } else { OperatorSpec::p_laplace(t) };
        prop_assert!(fd_matches(&spec, &g, &u).is_ok(), "{:?}", fd_matches(&spec, &g, &u));
    }

    #[test]
    fn reflection_negates_the_residual_of_the_negated_field(
        a in -1.0..1.0f64, b in -1.0..1.0f64, c in -1.0..1.0f64,
        s0 in -1.0..1.0f64, s1 in -1.0..1.0f64, t in 1.5..4.0f64,
    ) {
        let g = disk(1.0 / 8.0);
        let u = wiggly(&g, a, b, c);
        for spec in [OperatorSpec::p_laplace(t), OperatorSpec::regularized(t), OperatorSpec::custom(1.3, &[s0, s1])] {
            let lhs = weak_residual(&reflect(&spec), &g, &u).unwrap();
            let rhs = weak_residual(&spec, &g, &u.negated()).unwrap();
            for i in g.interior_nodes() {
                prop_assert_eq!(lhs.values[i], -rhs.values[i]);
            }
        }
    }
}

#[test]
fn monotone_on_random_pairs() {
    use rand_chacha::rand_core::{RngCore, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let mut uniform = || 6.0 * (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 3.0;
    for spec in [
        OperatorSpec::p_laplace(1.5),
        OperatorSpec::p_laplace(3.0),
        OperatorSpec::regularized(2.5),
    ] {
        for _ in 0..10_000 {
            let mut p = [0.0; 3];
            let mut q = [0.0; 3];
            for d in 0..3 {
                p[d] = uniform();
                q[d] = uniform();
            }
            let (ap, aq) = (apply_a(&spec, &p), apply_a(&spec, &q));
            let dot: f64 = (0..3).map(|d| (ap[d] - aq[d]) * (p[d] - q[d])).sum();
            assert!(dot >= 0.0, "{spec:?} at {p:?}, {q:?}");
        }
        assert_eq!(apply_a(&spec, &[0.0; 3]), [0.0; 3]);
    }
}

#[test]
fn homogeneous_of_degree_t_minus_one() {
    for t in [1.5, 2.0, 3.0, 4.5] {
        let spec = OperatorSpec::p_laplace(t);
        for p in [[0.3, -1.2, 0.4], [2.0, 0.0, 0.0], [-0.01, 0.02, 5.0]] {
            for s in [0.5, 2.0, 10.0] {
                assert!(homogeneity_defect(&spec, &p, s).unwrap() <= 1e-12);
            }
        }
    }
}
