//! Flat-truncation certificates and extraction of the atomic measure behind
//! a flat moment vector.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{LsippError, Result};
use crate::linalg::singular_values;
use crate::moment::{moment_matrix, MomentBasis, MomentVector};
use crate::polyring::{ExponentVec, Polynomial};
use crate::relax::{LsippView, MomentRelaxation};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CertifyOptions {
    /// Singular values below `rank_tol * max(1, σ_max)` count as zero.
    pub rank_tol: f64,
    /// Bound on `‖z - Σ λ_i ζ(v_i)‖∞ / max(1, ‖z‖∞)` over degrees `<= 2t`.
    pub reconstruction_tol: f64,
    /// Atoms must satisfy `g_j(v) >= -membership_tol` (and `|h(v)| <= membership_tol`).
    pub membership_tol: f64,
    pub verify_tol: f64,
    /// Seed of the random combination of multiplication matrices.
    pub seed: u64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            rank_tol: 1e-3,
            reconstruction_tol: 1e-3,
            membership_tol: 1e-4,
            verify_tol: 1e-3,
            seed: 0x5eed,
        }
    }
}

/// One support point of an atomic measure.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Atom {
    pub point: Vec<f64>,
    pub weight: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct CertResiduals {
    /// Relative moment reconstruction error of the extracted measure.
    pub reconstruction: f64,
    /// Largest violation of the index-set constraints at an atom.
    pub membership: f64,
    /// `‖Σ λ_i a(v_i) - c‖∞`.
    pub c_residual: f64,
    /// `|Σ λ_i b(v_i) + p_mom|`.
    pub value_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub order_k: u32,
    pub flat_t: Option<u32>,
    /// `t -> (rank M_{t-d_S}, rank M_t)`.
    pub ranks: BTreeMap<u32, (usize, usize)>,
    /// `σ_r / σ_{r+1}` of `M_t` at the flat order (infinite if full rank).
    pub rank_gap: Option<f64>,
    pub atoms: Vec<Atom>,
    pub certified: bool,
    pub verified: bool,
    pub residuals: CertResiduals,
    pub failure: Option<String>,
    pub tolerances: CertifyOptions,
}

/// Number of singular values `σ_i > rank_tol * max(1, σ_max)`.
pub fn numeric_rank(m: &DMatrix<f64>, rank_tol: f64) -> usize {
    let sv = singular_values(m);
    let Some(&smax) = sv.first() else { return 0 };
    let thr = rank_tol * smax.max(1.0);
    sv.iter().filter(|&&s| s > thr).count()
}

/// `t -> (rank M_{t-d_S}(z), rank M_t(z))` for `t` in `[d_P, k]`.
pub fn rank_profile(
    z: &MomentVector,
    k: u32,
    d_s: u32,
    d_p: u32,
    rank_tol: f64,
) -> Result<BTreeMap<u32, (usize, usize)>> {
    let mut cache: BTreeMap<u32, usize> = BTreeMap::new();
    let mut rank_at = |t: u32| -> Result<usize> {
        if let Some(&r) = cache.get(&t) {
            return Ok(r);
        }
        let r = numeric_rank(&moment_matrix(z, t)?, rank_tol);
        cache.insert(t, r);
        Ok(r)
    };
    let mut out = BTreeMap::new();
    for t in d_p.max(d_s)..=k {
        let lo = rank_at(t - d_s)?;
        let hi = rank_at(t)?;
        out.insert(t, (lo, hi));
    }
    Ok(out)
}

/// Smallest `t` in `[d_P, k]` with `rank M_{t-d_S}(z) = rank M_t(z)`.
pub fn check_flatness(z: &MomentVector, k: u32, d_s: u32, d_p: u32, rank_tol: f64) -> Option<u32> {
    let profile = rank_profile(z, k, d_s, d_p, rank_tol).ok()?;
    first_flat(&profile)
}

fn first_flat(profile: &BTreeMap<u32, (usize, usize)>) -> Option<u32> {
    profile.iter().find(|(_, (a, b))| a == b).map(|(t, _)| *t)
}

/// Recovers the atoms of a moment vector that is flat at order `t`.
///
/// A rank-`r` factor `V` of `M_t(z)` is reduced to column echelon form on
/// `r` pivot monomials of degree `< t`; the rows of the echelon form at
/// `Y_i * w_j` give the multiplication matrices, which are simultaneously
/// triangularized by the Schur form of a random convex combination.
pub fn extract_atoms(z: &MomentVector, t: u32, opts: &CertifyOptions) -> Result<Vec<Atom>> {
    if t == 0 {
        return Err(LsippError::Extraction("flat order must be positive".into()));
    }
    let n = z.nvars();
    let m = moment_matrix(z, t)?;
    let r = numeric_rank(&m, opts.rank_tol);
    if r == 0 {
        return Err(LsippError::Extraction("moment matrix is numerically zero".into()));
    }
    let rows = MomentBasis::new(n, t);
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let s = rows.len();
    let mut v = DMatrix::zeros(s, r);
    for (col, &e) in order.iter().take(r).enumerate() {
        let lam = eig.eigenvalues[e].max(0.0).sqrt();
        for i in 0..s {
            v[(i, col)] = eig.eigenvectors[(i, e)] * lam;
        }
    }

    // greedy pivot rows in basis order
    let max_norm = (0..s).map(|i| v.row(i).norm()).fold(0.0, f64::max);
    let piv_tol = 1e-6 * max_norm.max(f64::MIN_POSITIVE);
    let mut ortho: Vec<DVector<f64>> = Vec::with_capacity(r);
    let mut pivots = Vec::with_capacity(r);
    for i in 0..s {
        if pivots.len() == r {
            break;
        }
        let mut res: DVector<f64> = v.row(i).transpose();
        for q in &ortho {
            let d = q.dot(&res);
            res -= q * d;
        }
        let nrm = res.norm();
        if nrm > piv_tol {
            ortho.push(res / nrm);
            pivots.push(i);
        }
    }
    if pivots.len() < r {
        return Err(LsippError::Extraction(format!(
            "found {} of {r} independent monomials",
            pivots.len()
        )));
    }
    if let Some(&p) = pivots.iter().find(|&&p| rows.get(p).degree() >= t) {
        return Err(LsippError::Extraction(format!(
            "pivot monomial {:?} has degree {}, needs < {t}",
            rows.get(p).0,
            rows.get(p).degree()
        )));
    }
    let w = v.select_rows(&pivots);
    let w_inv = w
        .clone()
        .try_inverse()
        .ok_or_else(|| LsippError::Extraction("singular pivot block".into()))?;
    let u = &v * &w_inv;

    let mut shifts = Vec::with_capacity(n);
    for var in 0..n {
        let mut nm = DMatrix::zeros(r, r);
        for (j, &p) in pivots.iter().enumerate() {
            let shifted = rows.get(p).add(&ExponentVec::unit(n, var));
            let idx = rows.index_of(&shifted).expect("degree < t");
            nm.row_mut(j).copy_from(&u.row(idx));
        }
        shifts.push(nm);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut rho: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = rho.iter().sum();
    rho.iter_mut().for_each(|x| *x /= total);
    let mut comb = DMatrix::zeros(r, r);
    for (nm, w) in shifts.iter().zip(&rho) {
        comb += nm * *w;
    }
    let (q, _) = nalgebra::linalg::Schur::try_new(comb, f64::EPSILON, 10_000)
        .ok_or_else(|| LsippError::Extraction("Schur decomposition did not converge".into()))?
        .unpack();

    // coordinates q_j^T N_i q_j
    let points: Vec<Vec<f64>> = (0..r)
        .map(|j| {
            let qj = q.column(j);
            shifts.iter().map(|nm| qj.dot(&(nm * qj))).collect()
        })
        .collect();
    if points.iter().flatten().any(|x| !x.is_finite()) {
        return Err(LsippError::Extraction("non-finite atom coordinates".into()));
    }

    // weights by least squares on the moments of degree <= t
    let low = rows.len();
    let a = DMatrix::from_fn(low, r, |i, j| rows.get(i).eval(&points[j]));
    let rhs = DVector::from_column_slice(&z.values()[..low]);
    let weights = a
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .map_err(|e| LsippError::Extraction(format!("weight solve failed: {e}")))?;
    let mut atoms: Vec<Atom> = points
        .into_iter()
        .zip(weights.iter())
        .map(|(point, &weight)| Atom { point, weight })
        .collect();
    if let Some(bad) = atoms.iter().find(|a| a.weight.is_nan() || a.weight <= 0.0) {
        return Err(LsippError::Extraction(format!(
            "nonpositive weight {} at {:?}",
            bad.weight, bad.point
        )));
    }
    atoms.sort_by(|x, y| {
        x.point
            .iter()
            .zip(&y.point)
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(atoms)
}

/// `‖z - Σ λ_i ζ(v_i)‖∞ / max(1, ‖z‖∞)` over moments of degree `<= order`.
pub fn reconstruction_residual(z: &MomentVector, atoms: &[Atom], order: u32) -> f64 {
    let len = MomentBasis::new(z.nvars(), order.min(z.order())).len();
    let basis = z.basis();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 1.0;
    for i in 0..len {
        let e = basis.get(i);
        let approx: f64 = atoms.iter().map(|a| a.weight * e.eval(&a.point)).sum();
        worst = worst.max((z.values()[i] - approx).abs());
        scale = scale.max(z.values()[i].abs());
    }
    worst / scale
}

/// Largest violation of `g_j(v) >= 0` (and `h(v) = 0`) over the atoms.
pub fn membership_violation(gens: &[Polynomial], sphere: Option<&Polynomial>, atoms: &[Atom]) -> f64 {
    let mut worst: f64 = 0.0;
    for a in atoms {
        for g in gens {
            let v = g.evaluate(&a.point).unwrap_or(f64::NAN);
            worst = worst.max(-v);
            if v.is_nan() {
                return f64::INFINITY;
            }
        }
        if let Some(h) = sphere {
            worst = worst.max(h.evaluate(&a.point).map(f64::abs).unwrap_or(f64::INFINITY));
        }
    }
    worst
}

/// Checks `Σ λ_i a(v_i) = c` and `-Σ λ_i b(v_i) = p_mom`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Verification {
    pub c_residual: f64,
    pub value_residual: f64,
    pub verified: bool,
}

pub fn verify_certificate(view: &LsippView, p_mom: f64, atoms: &[Atom], verify_tol: f64) -> Verification {
    let mut c_res: f64 = 0.0;
    for (ai, ci) in view.a.iter().zip(&view.c) {
        let s: f64 = atoms
            .iter()
            .map(|at| at.weight * ai.evaluate(&at.point).unwrap_or(f64::NAN))
            .sum();
        c_res = c_res.max((s - ci).abs());
    }
    let val: f64 = atoms
        .iter()
        .map(|at| at.weight * view.b.evaluate(&at.point).unwrap_or(f64::NAN))
        .sum();
    let value_residual = (val + p_mom).abs();
    Verification {
        c_residual: c_res,
        value_residual,
        verified: c_res <= verify_tol && value_residual <= verify_tol,
    }
}

/// Runs the rank test, extraction and verification on a solved relaxation.
pub fn certify(rel: &MomentRelaxation, z: &MomentVector, p_mom: f64, opts: &CertifyOptions) -> Certificate {
    let ord = &rel.order;
    let mut cert = Certificate {
        order_k: ord.k,
        flat_t: None,
        ranks: BTreeMap::new(),
        rank_gap: None,
        atoms: Vec::new(),
        certified: false,
        verified: false,
        residuals: CertResiduals::default(),
        failure: None,
        tolerances: *opts,
    };
    match rank_profile(z, ord.k, ord.d_s, ord.d_p, opts.rank_tol) {
        Ok(p) => cert.ranks = p,
        Err(e) => {
            cert.failure = Some(e.to_string());
            return cert;
        }
    }
    let Some(t) = first_flat(&cert.ranks) else {
        cert.failure = Some("rank condition not met".into());
        return cert;
    };
    cert.flat_t = Some(t);
    if let Ok(m) = moment_matrix(z, t) {
        let sv = singular_values(&m);
        let r = cert.ranks[&t].1;
        cert.rank_gap = Some(match sv.get(r) {
            Some(&next) if next > 0.0 => sv[r - 1] / next,
            _ => f64::INFINITY,
        });
    }
    let atoms = match extract_atoms(z, t, opts) {
        Ok(a) => a,
        Err(e) => {
            log::debug!("order {}: {e}", ord.k);
            cert.failure = Some(e.to_string());
            return cert;
        }
    };
    cert.residuals.reconstruction = reconstruction_residual(z, &atoms, 2 * t);
    cert.residuals.membership = membership_violation(&rel.gens, rel.sphere.as_ref(), &atoms);
    let ver = verify_certificate(&rel.view, p_mom, &atoms, opts.verify_tol);
    cert.residuals.c_residual = ver.c_residual;
    cert.residuals.value_residual = ver.value_residual;
    cert.atoms = atoms;
    let mut problems = Vec::new();
    if cert.residuals.reconstruction > opts.reconstruction_tol {
        problems.push(format!("reconstruction residual {:.2e}", cert.residuals.reconstruction));
    }
    if cert.residuals.membership > opts.membership_tol {
        problems.push(format!("membership violation {:.2e}", cert.residuals.membership));
    }
    cert.certified = problems.is_empty();
    cert.verified = cert.certified && ver.verified;
    if !problems.is_empty() {
        cert.failure = Some(problems.join(", "));
    }
    cert
}
