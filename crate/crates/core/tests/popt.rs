mod common;

use common::*;
use lsipp_core::popt::*;
use lsipp_core::relax::{build_moment, HierarchyOptions};
use lsipp_core::sdp::{solve, SolverOptions};
use lsipp_core::Polynomial;

fn opts() -> HierarchyOptions {
    HierarchyOptions::default()
}

#[test]
fn reformulation_data() {
    let p = PoptProblem::new(poly("Y1^2", 1), vec![]).unwrap();
    let l = to_lsipp(&p);
    assert_eq!(l.b, poly("Y1^2", 1));
    assert_eq!(l.a, vec![Polynomial::constant(1, -1.0)]);
    assert_eq!(l.c, vec![-1.0]);
    assert_eq!(p.d_f(), 2);

    let e = ex46();
    assert_eq!(to_lsipp(&e).gens, e.gens);
}

#[test]
fn mismatched_generators_are_rejected() {
    assert!(PoptProblem::new(poly("Y1", 1), vec![poly("Y2", 2)]).is_err());
}

#[test]
fn compact_relaxation_matches_the_lsipp_moment_relaxation() {
    let mut p = PoptProblem::new(poly("Y1^3 - Y1 + Y2^2", 2), vec![poly("1 - Y1^2", 2), poly("1 - Y2^2", 2)]).unwrap();
    p.compact = true;
    let a = build_compact(&p, 2).unwrap();
    let b = build_moment(&to_lsipp(&p), 2).unwrap();
    assert_eq!(a.sdp.blocks, b.sdp.blocks);
    assert_eq!(a.sdp.objective, b.sdp.objective);
    assert_eq!(a.sdp.equalities.len(), b.sdp.equalities.len());
    for (ra, rb) in a.sdp.equalities.iter().zip(&b.sdp.equalities) {
        assert_eq!((&ra.coeffs, ra.rhs), (&rb.coeffs, rb.rhs));
    }
    // f_mom is -p_mom of the same SDP.
    let r = solve_compact(&p, 2, &opts()).unwrap();
    let sol = solve(&b.sdp, &SolverOptions::default()).unwrap();
    assert_eq!(r.f_mom, -b.value(&sol));
}

#[test]
fn quadratic_on_interval_is_exact_at_order_one() {
    let mut p = PoptProblem::new(poly("(Y1 - 0.5)^2", 1), vec![poly("1 - Y1^2", 1)]).unwrap();
    p.compact = true;
    let r = solve_compact(&p, 1, &opts()).unwrap();
    assert!(r.f_mom.abs() < 1e-6, "{}", r.f_mom);
    assert!(r.certified());
    assert!(covers(&r.minimizers, &[vec![0.5]], 1e-4), "{:?}", r.minimizers);
}

#[test]
fn bilinear_on_unit_disk() {
    // Stationarity gives y1 = -y2 on the circle.
    let mut p = PoptProblem::new(poly("Y1*Y2", 2), vec![poly("1 - Y1^2 - Y2^2", 2)]).unwrap();
    p.compact = true;
    let (_, rows) = run_hierarchy(&p, false, 1, 4, &opts()).unwrap();
    let last = rows.last().unwrap();
    assert!(last.certified());
    assert!((last.f_mom + 0.5).abs() < 1e-6, "{}", last.f_mom);
    let h = 0.5f64.sqrt();
    assert!(covers(&last.minimizers, &[vec![h, -h], vec![-h, h]], 1e-4));
    assert!((last.f_mom - last.f_sos).abs() < 1e-6);
}

#[test]
fn sign_convention_against_grid_minimum() {
    let mut p = PoptProblem::new(poly("Y1^3 - Y1 + Y2^2", 2), vec![poly("1 - Y1^2", 2), poly("1 - Y2^2", 2)]).unwrap();
    p.compact = true;
    let mut grid_min = f64::INFINITY;
    for i in 0..=400 {
        for j in 0..=40 {
            let y = [-1.0 + i as f64 / 200.0, -1.0 + j as f64 / 20.0];
            grid_min = grid_min.min(p.f.evaluate(&y).unwrap());
        }
    }
    let (h, rows) = run_hierarchy(&p, false, 2, 4, &opts()).unwrap();
    let last = rows.last().unwrap();
    assert!(last.certified());
    assert!((last.f_mom - grid_min).abs() < 1e-4, "{} vs {grid_min}", last.f_mom);
    assert_eq!(h.last().unwrap().value, -last.f_mom);
    for m in &last.minimizers {
        assert!((p.f.evaluate(m).unwrap() - last.f_mom).abs() < 1e-4);
    }
}

#[test]
fn minimum_orders() {
    let (c, h) = min_orders(&ex46()).unwrap();
    assert_eq!((c, h), (1, 1));
    let p = PoptProblem::new(poly("Y1^4 + Y2", 2), vec![]).unwrap();
    assert_eq!(min_orders(&p).unwrap(), (2, 2));
}

#[test]
fn witness_on_sphere() {
    let r = check_stable_boundedness_witness(&ex46(), 20_000, 3).unwrap();
    assert_eq!(r.verdict, Witness::Supported);
    assert!((r.min_value - 1.0).abs() < 1e-12);
    assert!(r.accepted > 0 && r.accepted < r.samples);
}

#[test]
fn witness_finds_counterexample() {
    let p = PoptProblem::new(poly("Y1", 2), vec![]).unwrap();
    let r = check_stable_boundedness_witness(&p, 10_000, 1).unwrap();
    assert_eq!(r.verdict, Witness::Counterexample);
    assert!(r.min_value < -0.999);
    assert_eq!(r.accepted, r.samples);
}

#[test]
fn witness_on_cusp_objective() {
    // On the arc y1 >= 0, y2 <= 0 the top form 3 y1 - 4.5 y2 is smallest at (1, 0).
    let p = PoptProblem::new(
        poly("(1 - 3*Y2)*1.5 + 3*Y1", 2),
        vec![poly("Y1", 2), poly("Y1^2 - Y2^3", 2)],
    )
    .unwrap();
    let r = check_stable_boundedness_witness(&p, 100_000, 9).unwrap();
    let oracle = (0..=10_000)
        .map(|i| {
            let th = std::f64::consts::FRAC_PI_2 * i as f64 / 10_000.0;
            3.0 * th.cos() + 4.5 * th.sin()
        })
        .fold(f64::INFINITY, f64::min);
    assert!((oracle - 3.0).abs() < 1e-12);
    assert_eq!(r.verdict, Witness::Supported);
    // The -1e-9 filter on -y2³ admits y2 up to 1e-3.
    assert!((r.min_value - oracle).abs() < 1e-2, "{}", r.min_value);
}

#[test]
fn witness_without_admissible_samples_is_inconclusive() {
    let p = PoptProblem::new(poly("Y1", 1), vec![poly("-Y1^2", 1)]).unwrap();
    let r = check_stable_boundedness_witness(&p, 100, 1).unwrap();
    assert_eq!(r.verdict, Witness::Inconclusive);
}
