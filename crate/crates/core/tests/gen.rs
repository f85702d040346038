mod common;

use common::*;
use lsipp_core::certify::verify_certificate;
use lsipp_core::gen::*;
use lsipp_core::relax::{build_moment, run_hierarchy, HierarchyOptions};
use lsipp_core::{LsippProblem, Polynomial};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn invalid_specs_are_rejected() {
    assert!(GenSpec::new(1, 3, 2, 0).is_err());
    assert!(GenSpec::new(5, 0, 2, 0).is_err());
    assert!(GenSpec::new(5, 3, 0, 0).is_err());
    assert!(GenSpec::new(6, 1, 1, 0).is_err());
    assert!(GenSpec::new(5, 1, 1, 0).is_ok());
}

#[test]
fn index_set_is_the_box_plus_ball() {
    let inst = generate(&GenSpec::new(3, 2, 1, 4).unwrap()).unwrap();
    let g = &inst.problem.gens;
    assert_eq!(g.len(), 5);
    for y in [[2.0, 2.0], [-2.0, 1.0], [0.0, -2.0]] {
        assert!(g.iter().all(|p| p.evaluate(&y).unwrap() >= 0.0));
    }
    assert!(g.iter().any(|p| p.evaluate(&[2.1, 0.0]).unwrap() < 0.0));
    assert_eq!(g[4], poly("8 - Y1^2 - Y2^2", 2));
    assert!(inst.problem.index_set_compact);
}

#[test]
fn same_seed_same_instance() {
    let s = GenSpec::new(5, 3, 2, 11).unwrap();
    assert_eq!(generate(&s).unwrap(), generate(&s).unwrap());
    let other = generate(&GenSpec { seed: 12, ..s }).unwrap();
    assert_ne!(generate(&s).unwrap().problem, other.problem);
}

#[test]
fn bounds_for_unit_b() {
    let mut inst = generate(&GenSpec::new(3, 2, 1, 0).unwrap()).unwrap();
    inst.problem.b = Polynomial::constant(2, 1.0);
    assert_eq!(bound_check(&inst).unwrap(), vec![-2.0; 3]);
}

#[test]
fn certified_instances_respect_bounds_and_verify() {
    for seed in 1..=3 {
        let inst = generate(&GenSpec::new(5, 3, 2, seed).unwrap()).unwrap();
        let h = run_hierarchy(&inst.problem, 2, 4, &HierarchyOptions::default()).unwrap();
        let best = h.certified().expect("certified by order 4");
        let lb = bound_check(&inst).unwrap();
        for (x, l) in best.x.iter().zip(&lb) {
            assert!(*x >= l - 1e-6, "seed {seed}: {x} < {l}");
        }
        let cert = best.certificate.as_ref().unwrap();
        let rel = build_moment(&inst.problem, best.k).unwrap();
        let v = verify_certificate(&rel.view, best.value, &cert.atoms, 1e-4);
        assert!(v.c_residual < 1e-4 && v.value_residual < 1e-4, "seed {seed}: {v:?}");
        // The optimum is attained by c^T x at the recovered decision.
        let cx: f64 = inst.problem.c.iter().zip(&best.x).map(|(c, x)| c * x).sum();
        assert!((cx - best.value).abs() < 1e-4 * (1.0 + best.value.abs()));
    }
}

fn check_feasible_zero(p: &LsippProblem, rng: &mut ChaCha8Rng) -> Result<(), TestCaseError> {
    let zero = vec![0.0; p.m()];
    for _ in 0..1000 {
        let y: Vec<f64> = (0..p.nvars).map(|_| rng.gen_range(-3.0..3.0)).collect();
        prop_assert!(p.b.evaluate(&y).unwrap() >= 1.0);
        prop_assert!(p.constraint_value(&zero, &y).unwrap() >= 1.0);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn interpolants_and_positivity(m in 2usize..7, n in 1usize..5, t in 1u32..3, seed in any::<u64>()) {
        prop_assume!((m as f64) <= 5f64.powi(n as i32));
        let inst = generate(&GenSpec::new(m, n, t, seed).unwrap()).unwrap();
        prop_assert_eq!(inst.points.len(), m);
        for (i, v) in inst.points.iter().enumerate() {
            prop_assert!(v.iter().all(|c| c.fract() == 0.0 && c.abs() <= 2.0));
            prop_assert!(inst.points[..i].iter().all(|w| w != v));
            for (j, a) in inst.problem.a.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((a.evaluate(v).unwrap() - want).abs() < 1e-10);
            }
        }
        prop_assert!(inst.problem.c.iter().all(|c| *c > 0.0 && *c < 1.0));
        prop_assert_eq!(inst.problem.b.degree(), 2 * t);
        check_feasible_zero(&inst.problem, &mut ChaCha8Rng::seed_from_u64(seed))?;
    }
}
