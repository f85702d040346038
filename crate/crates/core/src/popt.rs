//! Polynomial optimization `f* = inf { f(y) : g_j(y) >= 0 }` as the LSIPP
//! `min -x  s.t.  f(y) - x >= 0`.
//!
//! The compact path is the classic moment hierarchy with `z_0 = 1`. The
//! noncompact path works on the homogenized problem with the normalization
//! `z_{(D_f, 0)} = 1` and reads minimizers off atoms as `v / v0`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::certify::{Atom, Certificate};
use crate::error::{LsippError, Result};
use crate::polyring::{ExponentVec, Polynomial};
use crate::relax::{
    build_moment_sdp, homogenize_problem, solve_relaxation, sweep, HierarchyOptions,
    HierarchyResult, LsippProblem, LsippView, MomentRelaxation, MomentRow, OrderResult,
};

/// Atoms with `v0` at or below this are points at infinity.
pub const ATOM_V0_TOL: f64 = 1e-6;

pub const DEFAULT_WITNESS_SAMPLES: usize = 100_000;

#[derive(Clone, Debug, PartialEq)]
pub struct PoptProblem {
    pub f: Polynomial,
    pub gens: Vec<Polynomial>,
    /// The caller asserts that `S` is compact.
    pub compact: bool,
    /// Optional redundant ball `M - ‖Y‖² >= 0`.
    pub ball: Option<f64>,
}

impl PoptProblem {
    pub fn new(f: Polynomial, gens: Vec<Polynomial>) -> Result<Self> {
        if let Some(g) = gens.iter().find(|g| g.nvars() != f.nvars()) {
            return Err(LsippError::DimensionMismatch {
                expected: f.nvars(),
                found: g.nvars(),
            });
        }
        Ok(PoptProblem {
            f,
            gens,
            compact: false,
            ball: None,
        })
    }

    pub fn nvars(&self) -> usize {
        self.f.nvars()
    }

    /// `D_f = deg f`.
    pub fn d_f(&self) -> u32 {
        self.f.degree()
    }
}

/// `m = 1, a = (-1), b = f, c = (-1)`; the LSIPP optimum is `-f*`.
pub fn to_lsipp(p: &PoptProblem) -> LsippProblem {
    let n = p.nvars();
    let mut prob = LsippProblem::new(
        vec![-1.0],
        vec![Polynomial::constant(n, -1.0)],
        p.f.clone(),
        p.gens.clone(),
    )
    .expect("consistent dimensions")
    .compact(p.compact);
    prob.archimedean_bound = p.ball;
    prob
}

/// `min Σ f_α z_α  s.t.  z_0 = 1, M_k(z) ⪰ 0, M_{k-d_j}(g_j z) ⪰ 0`.
pub fn build_compact(p: &PoptProblem, k: u32) -> Result<MomentRelaxation> {
    let lp = to_lsipp(p);
    let order = lp.order(k)?;
    let gens = lp.generators();
    let n = p.nvars();
    let rows = [MomentRow {
        poly: Polynomial::constant(n, -1.0),
        rhs: -1.0,
        label: "normalization".into(),
    }];
    let (sdp, basis) = build_moment_sdp(n, &order, &p.f, &rows, &gens, None)?;
    Ok(MomentRelaxation {
        sdp,
        basis,
        order,
        view: LsippView {
            c: lp.c,
            a: lp.a,
            b: lp.b,
        },
        gens,
        sphere: None,
    })
}

/// The homogenized relaxation: `min Σ f^h_α z_α` with `z_{(D_f,0)} = 1`,
/// localizers for `g_j^h` and `Y0`, and `M_{k-1}((‖Ỹ‖² - 1) z) = 0`.
pub fn build_noncompact(p: &PoptProblem, k: u32) -> Result<MomentRelaxation> {
    let hp = homogenize_problem(&to_lsipp(p))?;
    let order = hp.order(k)?;
    let n1 = hp.nvars();
    // Written as `a = -Y0^{D_f}, c = -1` so the row multiplier reads as `x`.
    let mut e = ExponentVec::zero(n1);
    e.0[0] = p.d_f();
    let rows = [MomentRow {
        poly: Polynomial::monomial(n1, e, -1.0),
        rhs: -1.0,
        label: "normalization".into(),
    }];
    let gens = hp.inequality_generators().to_vec();
    let sphere = hp.sphere().clone();
    let (sdp, basis) = build_moment_sdp(n1, &order, &hp.b_h, &rows, &gens, Some(&sphere))?;
    Ok(MomentRelaxation {
        sdp,
        basis,
        order,
        view: LsippView {
            c: hp.base.c.clone(),
            a: hp.a_h.clone(),
            b: hp.b_h.clone(),
        },
        gens,
        sphere: Some(sphere),
    })
}

#[derive(Clone, Debug)]
pub struct PoptResult {
    pub k: u32,
    /// `f_mom_k = -p_mom_k`, a lower bound on `f*`.
    pub f_mom: f64,
    /// `f_sos_k`, read from the dual solution.
    pub f_sos: f64,
    pub order: OrderResult,
    /// Global minimizers recovered from a certified solution.
    pub minimizers: Vec<Vec<f64>>,
    /// Atoms with `v0 <= ATOM_V0_TOL` (noncompact path only).
    pub at_infinity: Vec<Atom>,
    pub note: Option<String>,
}

impl PoptResult {
    pub fn certificate(&self) -> Option<&Certificate> {
        self.order.certificate.as_ref()
    }

    pub fn certified(&self) -> bool {
        self.order.certified()
    }
}

fn compact_result(order: OrderResult) -> PoptResult {
    let minimizers = match &order.certificate {
        Some(c) if c.certified => c.atoms.iter().map(|a| a.point.clone()).collect(),
        _ => Vec::new(),
    };
    PoptResult {
        k: order.k,
        f_mom: -order.value,
        f_sos: -order.sos_value,
        order,
        minimizers,
        at_infinity: Vec::new(),
        note: None,
    }
}

fn noncompact_result(order: OrderResult) -> PoptResult {
    let mut minimizers = Vec::new();
    let mut at_infinity = Vec::new();
    if let Some(c) = order.certificate.as_ref().filter(|c| c.certified) {
        for a in &c.atoms {
            let v0 = a.point[0];
            if v0 > ATOM_V0_TOL {
                minimizers.push(a.point[1..].iter().map(|v| v / v0).collect());
            } else {
                at_infinity.push(a.clone());
            }
        }
    }
    minimizers.sort_by(|a: &Vec<f64>, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let note = (minimizers.is_empty() && !at_infinity.is_empty())
        .then(|| "minimum attained only at infinity direction".to_string());
    PoptResult {
        k: order.k,
        f_mom: -order.value,
        f_sos: -order.sos_value,
        order,
        minimizers,
        at_infinity,
        note,
    }
}

pub fn solve_compact(p: &PoptProblem, k: u32, opts: &HierarchyOptions) -> Result<PoptResult> {
    let rel = build_compact(p, k)?;
    Ok(compact_result(solve_relaxation(&rel, opts)?))
}

pub fn solve_noncompact(p: &PoptProblem, k: u32, opts: &HierarchyOptions) -> Result<PoptResult> {
    let rel = build_noncompact(p, k)?;
    Ok(noncompact_result(solve_relaxation(&rel, opts)?))
}

/// Smallest admissible order of the compact and noncompact paths.
pub fn min_orders(p: &PoptProblem) -> Result<(u32, u32)> {
    let lp = to_lsipp(p);
    Ok((lp.min_order(), homogenize_problem(&lp)?.min_order()))
}

/// Runs either path over `k_min..=k_max`, stopping once certified.
pub fn run_hierarchy(
    p: &PoptProblem,
    noncompact: bool,
    k_min: u32,
    k_max: u32,
    opts: &HierarchyOptions,
) -> Result<(HierarchyResult, Vec<PoptResult>)> {
    let h = if noncompact {
        sweep(k_min, k_max, opts, |k| build_noncompact(p, k))?
    } else {
        sweep(k_min, k_max, opts, |k| build_compact(p, k))?
    };
    let rows = h
        .orders
        .iter()
        .cloned()
        .map(if noncompact { noncompact_result } else { compact_result })
        .collect();
    Ok((h, rows))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Witness {
    /// `min f̂ > 0` on the sampled part of `Ŝ`: evidence, not proof.
    Supported,
    /// A sampled point of `Ŝ` has `f̂ <= 0`.
    Counterexample,
    /// No sample landed in `Ŝ`.
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct StableBoundednessReport {
    pub samples: usize,
    pub accepted: usize,
    pub min_value: f64,
    pub argmin: Option<Vec<f64>>,
    pub verdict: Witness,
}

/// Samples the unit sphere, keeps points with every top form
/// `ĝ_j >= -1e-9`, and reports the minimum of the top form `f̂` there.
pub fn check_stable_boundedness_witness(
    p: &PoptProblem,
    samples: usize,
    seed: u64,
) -> Result<StableBoundednessReport> {
    let n = p.nvars();
    let f_hat = if p.f.is_zero() {
        p.f.clone()
    } else {
        p.f.top_form()?
    };
    let g_hat: Vec<Polynomial> = p
        .gens
        .iter()
        .filter(|g| !g.is_zero())
        .map(Polynomial::top_form)
        .collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = vec![0.0; n];
    let mut best = f64::INFINITY;
    let mut argmin = None;
    let mut accepted = 0;
    for _ in 0..samples {
        for v in y.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        y.iter_mut().for_each(|v| *v /= norm);
        let mut inside = true;
        for g in &g_hat {
            if g.evaluate(&y)? < -1e-9 {
                inside = false;
                break;
            }
        }
        if !inside {
            continue;
        }
        accepted += 1;
        let v = f_hat.evaluate(&y)?;
        if v < best {
            best = v;
            argmin = Some(y.clone());
        }
    }
    let verdict = if accepted == 0 {
        Witness::Inconclusive
    } else if best > 0.0 {
        Witness::Supported
    } else {
        Witness::Counterexample
    };
    Ok(StableBoundednessReport {
        samples,
        accepted,
        min_value: best,
        argmin,
        verdict,
    })
}
