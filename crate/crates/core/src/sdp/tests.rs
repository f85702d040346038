use super::*;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn triplets_of(m: &DMatrix<f64>) -> SymTriplets {
    let mut t = Vec::new();
    for r in 0..m.nrows() {
        for c in r..m.ncols() {
            if m[(r, c)] != 0.0 {
                t.push((r, c, m[(r, c)]));
            }
        }
    }
    t
}

fn random_sym(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    (&a + a.transpose()) * 0.5
}

fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    a.qr().q()
}

/// Random SDP with a planted complementary optimal pair `(z*, X*, S*)`.
fn planted(seed: u64, nvar: usize, size: usize, rank_s: usize, neq: usize) -> (SdpProblem, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = random_orthogonal(&mut rng, size);
    let mut ds = DMatrix::zeros(size, size);
    let mut dx = DMatrix::zeros(size, size);
    for i in 0..size {
        if i < rank_s {
            ds[(i, i)] = rng.gen_range(0.5..2.0);
        } else {
            dx[(i, i)] = rng.gen_range(0.5..2.0);
        }
    }
    let s_star = &q * ds * q.transpose();
    let x_star = &q * dx * q.transpose();
    let z_star: Vec<f64> = (0..nvar).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let bs: Vec<DMatrix<f64>> = (0..nvar).map(|_| random_sym(&mut rng, size)).collect();
    let mut b0 = s_star.clone();
    for (b, z) in bs.iter().zip(&z_star) {
        b0 -= b * *z;
    }
    let mut prob = SdpProblem::new(nvar);
    let mut block = PsdBlock::new(size, "planted");
    block.constant = triplets_of(&b0);
    block.coeffs = bs.iter().enumerate().map(|(i, b)| (i, triplets_of(b))).collect();
    prob.blocks.push(block);
    let lam: Vec<f64> = (0..neq).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut f: Vec<f64> = bs.iter().map(|b| crate::linalg::frob_inner(&x_star, b)).collect();
    for l in lam.iter() {
        let row: Vec<f64> = (0..nvar).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let rhs: f64 = row.iter().zip(&z_star).map(|(a, b)| a * b).sum();
        for (fi, a) in f.iter_mut().zip(&row) {
            *fi += a * l;
        }
        prob.equalities.push(EqConstraint {
            coeffs: row.into_iter().enumerate().collect(),
            rhs,
            label: String::new(),
        });
    }
    let opt = f.iter().zip(&z_star).map(|(a, b)| a * b).sum();
    prob.objective = f;
    (prob, opt)
}

#[test]
fn one_by_one_lp() {
    let mut p = SdpProblem::new(1);
    p.objective = vec![1.0];
    let mut b = PsdBlock::new(1, "z");
    b.coeffs.push((0, vec![(0, 0, 1.0)]));
    p.blocks.push(b);
    let sol = solve(&p, &SolverOptions::default()).unwrap();
    assert_eq!(sol.status, SdpStatus::Optimal);
    assert!(sol.z[0].abs() < 1e-7);
}

#[test]
fn two_by_two_am_gm() {
    // [[z1, 1], [1, z2]] ⪰ 0  ⇔  z1, z2 >= 0, z1 z2 >= 1; min z1 + z2 = 2 at (1, 1)
    let mut p = SdpProblem::new(2);
    p.objective = vec![1.0, 1.0];
    let mut b = PsdBlock::new(2, "amgm");
    b.constant = vec![(0, 1, 1.0)];
    b.coeffs = vec![(0, vec![(0, 0, 1.0)]), (1, vec![(1, 1, 1.0)])];
    p.blocks.push(b);
    let sol = solve(&p, &SolverOptions::default()).unwrap();
    assert_eq!(sol.status, SdpStatus::Optimal);
    assert!((sol.objective_value - 2.0).abs() < 1e-7);
    assert!((sol.z[0] - 1.0).abs() < 1e-4 && (sol.z[1] - 1.0).abs() < 1e-4);
    assert!(sol.z[0] * sol.z[1] >= 1.0 - 1e-7);
}

#[test]
fn presolve_drops_duplicates_and_detects_inconsistency() {
    let mut p = SdpProblem::new(2);
    p.objective = vec![1.0, 0.0];
    let mut b = PsdBlock::new(1, "z1");
    b.coeffs.push((0, vec![(0, 0, 1.0)]));
    p.blocks.push(b);
    let row = EqConstraint {
        coeffs: vec![(0, 1.0), (1, 1.0)],
        rhs: 2.0,
        label: "r".into(),
    };
    p.equalities = vec![row.clone(), row.clone()];
    let pre = presolve(&p).unwrap();
    assert_eq!(pre.problem().equalities.len(), 1);
    assert_eq!(pre.removed_rows(), 1);
    let sol = solve(&p, &SolverOptions::default()).unwrap();
    assert_eq!(sol.eq_duals.len(), 2);
    assert_eq!(sol.status, SdpStatus::Optimal);

    // scaled copy of a row is dependent, not duplicate
    let mut p2 = p.clone();
    p2.equalities[1].coeffs = vec![(0, 2.0), (1, 2.0)];
    p2.equalities[1].rhs = 4.0;
    assert_eq!(presolve(&p2).unwrap().rank(), 1);
    p2.equalities[1].rhs = 5.0;
    assert!(presolve(&p2).is_err());

    let mut p3 = p.clone();
    p3.equalities.push(EqConstraint {
        coeffs: vec![],
        rhs: 1.0,
        label: "0=1".into(),
    });
    assert!(matches!(
        presolve(&p3),
        Err(crate::LsippError::InconsistentEquality { .. })
    ));
    let sol = solve(&p3, &SolverOptions::default()).unwrap();
    assert_eq!(sol.status, SdpStatus::Infeasible);
}

#[test]
fn planted_random_sdps_recover_objective() {
    for seed in 0..24 {
        let size = 3 + (seed % 5) as usize;
        let nvar = size + 2 + (seed % 4) as usize;
        let (p, opt) = planted(seed, nvar, size, 1 + (seed % 2) as usize, (seed % 3) as usize);
        let sol = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal, "seed {seed}");
        let rel = (sol.objective_value - opt).abs() / (1.0 + opt.abs());
        assert!(rel < 1e-6, "seed {seed}: {} vs {opt}", sol.objective_value);
        // weak duality on the returned pair
        assert!(sol.objective_value >= sol.dual_objective - 1e-8);
    }
}

#[test]
fn scaled_solution_matches_unscaled() {
    for seed in 10..14 {
        let (mut p, _) = planted(seed, 5, 4, 2, 1);
        // badly scaled block data
        for (_, t) in p.blocks[0].coeffs.iter_mut() {
            for e in t.iter_mut() {
                e.2 *= 1e3;
            }
        }
        for e in p.blocks[0].constant.iter_mut() {
            e.2 *= 1e3;
        }
        let opts = SolverOptions::default();
        let a = solve(&p, &opts).unwrap();
        let b = solve_presolved(&p, &opts);
        assert_eq!(a.status, SdpStatus::Optimal);
        assert!((a.objective_value - b.objective_value).abs() < 1e-6 * (1.0 + b.objective_value.abs()));
        // recovered multipliers satisfy the original stationarity equations
        let mut adj = vec![0.0; p.nfree];
        for (blk, x) in p.blocks.iter().zip(&a.dual_matrices) {
            for (i, t) in &blk.coeffs {
                adj[*i] += inner_triplets(x, t);
            }
        }
        for (eq, l) in p.equalities.iter().zip(&a.eq_duals) {
            for &(i, c) in &eq.coeffs {
                adj[i] += c * l;
            }
        }
        for (lhs, f) in adj.iter().zip(&p.objective) {
            assert!((lhs - f).abs() < 1e-5 * (1.0 + f.abs()));
        }
    }
}

#[test]
fn complementarity_gap_is_monotone() {
    let (p, _) = planted(3, 8, 6, 3, 2);
    let sol = solve(&p, &SolverOptions::default()).unwrap();
    for w in sol.gap_history.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-12), "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn deterministic_iterates() {
    let (p, _) = planted(4, 7, 5, 2, 1);
    let a = solve(&p, &SolverOptions::default()).unwrap();
    let b = solve(&p, &SolverOptions::default()).unwrap();
    assert_eq!(a.z, b.z);
    assert_eq!(a.gap_history, b.gap_history);
}

#[test]
fn sdpa_round_trip() {
    let (p, _) = planted(5, 4, 3, 1, 2);
    let text = sdpa::write_sdpa(&p);
    let back = sdpa::read_sdpa(&text).unwrap();
    assert_eq!(back, p);
}

#[test]
fn max_iter_status() {
    let (p, _) = planted(6, 5, 4, 2, 0);
    let opts = SolverOptions {
        max_iter: 2,
        ..Default::default()
    };
    let sol = solve(&p, &opts).unwrap();
    assert_eq!(sol.status, SdpStatus::MaxIter);
}

#[test]
fn validate_rejects_lower_triangle() {
    let mut p = SdpProblem::new(1);
    let mut b = PsdBlock::new(2, "bad");
    b.coeffs.push((0, vec![(1, 0, 1.0)]));
    p.blocks.push(b);
    assert!(solve(&p, &SolverOptions::default()).is_err());
}

