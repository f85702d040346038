//! SOS and moment relaxations of an LSIPP problem, for a compact index set
//! and for the homogenized problem on the unit sphere.
//!
//! Both sides are emitted as [`SdpProblem`]s in the crate's minimization
//! convention. The moment side minimizes `Σ_α b_α z_α`, so its relaxation
//! value is `p_mom = -objective`. Its equality multipliers `λ` give the
//! decision vector of the SOS side as `x = -λ`.

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::certify::{self, Certificate, CertifyOptions};
use crate::error::{LsippError, Result};
use crate::moment::{LocalizerStructure, MomentBasis, MomentVector};
use crate::polyring::{ExponentVec, Polynomial};
use crate::sdp::{self, EqConstraint, PsdBlock, Residuals, SdpProblem, SdpStatus, SolverOptions};

/// `min c^T x  s.t.  a(y)^T x + b(y) >= 0  for all y with g_j(y) >= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct LsippProblem {
    pub nvars: usize,
    pub c: Vec<f64>,
    pub a: Vec<Polynomial>,
    pub b: Polynomial,
    pub gens: Vec<Polynomial>,
    /// The caller asserts that `S` is compact (and its quadratic module Archimedean).
    pub index_set_compact: bool,
    /// When set, `M - ‖Y‖²` is used as an extra generator.
    pub archimedean_bound: Option<f64>,
}

impl LsippProblem {
    pub fn new(c: Vec<f64>, a: Vec<Polynomial>, b: Polynomial, gens: Vec<Polynomial>) -> Result<Self> {
        let nvars = b.nvars();
        if nvars == 0 {
            return Err(LsippError::InvalidInput("the index set needs at least one variable".into()));
        }
        if c.is_empty() || a.len() != c.len() {
            return Err(LsippError::DimensionMismatch {
                expected: c.len().max(1),
                found: a.len(),
            });
        }
        for p in a.iter().chain(&gens) {
            if p.nvars() != nvars {
                return Err(LsippError::DimensionMismatch {
                    expected: nvars,
                    found: p.nvars(),
                });
            }
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(LsippError::InvalidInput("non-finite cost vector".into()));
        }
        Ok(LsippProblem {
            nvars,
            c,
            a,
            b,
            gens,
            index_set_compact: false,
            archimedean_bound: None,
        })
    }

    pub fn compact(mut self, flag: bool) -> Self {
        self.index_set_compact = flag;
        self
    }

    /// Adds the redundant ball constraint `M - ‖Y‖² >= 0`.
    pub fn with_ball(mut self, m: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(LsippError::InvalidInput(format!("ball radius must be positive, got {m}")));
        }
        self.archimedean_bound = Some(m);
        Ok(self)
    }

    /// Number of decision variables.
    pub fn m(&self) -> usize {
        self.c.len()
    }

    /// The generators actually used, including the ball when set.
    pub fn generators(&self) -> Vec<Polynomial> {
        let mut g = self.gens.clone();
        if let Some(m) = self.archimedean_bound {
            let ball = Polynomial::constant(self.nvars, m)
                .sub(&Polynomial::squared_norm(self.nvars))
                .expect("same nvars");
            g.push(ball);
        }
        g
    }

    /// `a(y)^T x + b(y)`.
    pub fn constraint_value(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let mut v = self.b.evaluate(y)?;
        for (ai, xi) in self.a.iter().zip(x) {
            v += xi * ai.evaluate(y)?;
        }
        Ok(v)
    }

    pub fn order(&self, k: u32) -> Result<RelaxationOrder> {
        RelaxationOrder::new(&self.generators(), self.a.iter().chain([&self.b]), k)
    }

    pub fn min_order(&self) -> u32 {
        RelaxationOrder::minimum(&self.generators(), self.a.iter().chain([&self.b]))
    }
}

/// Degree bookkeeping of one relaxation order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RelaxationOrder {
    pub k: u32,
    /// `⌈deg g_j / 2⌉` for each generator.
    pub d_j: Vec<u32>,
    pub d_s: u32,
    pub d_p: u32,
}

impl RelaxationOrder {
    pub fn new<'a>(
        gens: &[Polynomial],
        data: impl IntoIterator<Item = &'a Polynomial>,
        k: u32,
    ) -> Result<Self> {
        let d_j: Vec<u32> = gens.iter().map(Polynomial::half_degree).collect();
        let d_s = d_j.iter().copied().fold(1, u32::max);
        let d_p = data.into_iter().map(Polynomial::half_degree).fold(d_s, u32::max);
        if k < d_p {
            return Err(LsippError::OrderTooSmall { k, min: d_p });
        }
        Ok(RelaxationOrder { k, d_j, d_s, d_p })
    }

    /// `d_P`, the smallest admissible order.
    pub fn minimum<'a>(gens: &[Polynomial], data: impl IntoIterator<Item = &'a Polynomial>) -> u32 {
        let d_s = gens.iter().map(Polynomial::half_degree).fold(1, u32::max);
        data.into_iter().map(Polynomial::half_degree).fold(d_s, u32::max)
    }
}

/// The problem on `S̃ = { (y0, y) : g_j^h >= 0, y0 >= 0, y0² + ‖y‖² = 1 }`.
#[derive(Clone, Debug, PartialEq)]
pub struct HomogenizedProblem {
    pub base: LsippProblem,
    pub omega: u32,
    /// `a_i^h`, homogeneous of degree `omega` in `n + 1` variables (`Y0` first).
    pub a_h: Vec<Polynomial>,
    pub b_h: Polynomial,
    /// `g_1^h, .., g_s^h, Y0, ‖Ỹ‖² - 1, 1 - ‖Ỹ‖²`.
    pub gens_h: Vec<Polynomial>,
}

impl HomogenizedProblem {
    pub fn nvars(&self) -> usize {
        self.base.nvars + 1
    }

    /// The generators imposed through PSD localizers (everything but the sphere pair).
    pub fn inequality_generators(&self) -> &[Polynomial] {
        &self.gens_h[..self.gens_h.len() - 2]
    }

    /// `‖Ỹ‖² - 1`, imposed as an equality.
    pub fn sphere(&self) -> &Polynomial {
        &self.gens_h[self.gens_h.len() - 2]
    }

    pub fn order(&self, k: u32) -> Result<RelaxationOrder> {
        RelaxationOrder::new(&self.gens_h, self.a_h.iter().chain([&self.b_h]), k)
    }

    pub fn min_order(&self) -> u32 {
        RelaxationOrder::minimum(&self.gens_h, self.a_h.iter().chain([&self.b_h]))
    }
}

pub fn homogenize_problem(prob: &LsippProblem) -> Result<HomogenizedProblem> {
    if prob.a.iter().all(Polynomial::is_zero) && prob.b.is_zero() {
        return Err(LsippError::InvalidInput(
            "cannot homogenize: all of a and b are zero".into(),
        ));
    }
    let omega = prob.a.iter().chain([&prob.b]).map(Polynomial::degree).max().unwrap_or(0);
    let a_h = prob
        .a
        .iter()
        .map(|p| p.homogenize(omega))
        .collect::<Result<Vec<_>>>()?;
    let b_h = prob.b.homogenize(omega)?;
    let n1 = prob.nvars + 1;
    let mut gens_h = prob
        .generators()
        .iter()
        .map(|g| g.homogenize(g.degree()))
        .collect::<Result<Vec<_>>>()?;
    let sphere = Polynomial::squared_norm(n1).sub(&Polynomial::constant(n1, 1.0))?;
    gens_h.push(Polynomial::var(n1, 0));
    gens_h.push(sphere.clone());
    gens_h.push(sphere.scale(-1.0));
    Ok(HomogenizedProblem {
        base: prob.clone(),
        omega,
        a_h,
        b_h,
        gens_h,
    })
}

/// The LSIPP data a relaxation was built from, in the variables of its
/// moment basis. Used to verify certificates.
#[derive(Clone, Debug)]
pub struct LsippView {
    pub c: Vec<f64>,
    pub a: Vec<Polynomial>,
    pub b: Polynomial,
}

/// A moment relaxation together with the metadata needed to read its solution.
#[derive(Clone, Debug)]
pub struct MomentRelaxation {
    pub sdp: SdpProblem,
    pub basis: Arc<MomentBasis>,
    pub order: RelaxationOrder,
    pub view: LsippView,
    /// Generators imposed through localizing matrices.
    pub gens: Vec<Polynomial>,
    /// Equality generator `h` with `M_{k-1}(h z) = 0`, if any.
    pub sphere: Option<Polynomial>,
}

impl MomentRelaxation {
    pub fn nvars(&self) -> usize {
        self.basis.nvars()
    }

    /// The moment vector `z` of a solution.
    pub fn moments(&self, sol: &sdp::SdpSolution) -> MomentVector {
        MomentVector::new(self.basis.clone(), sol.z.clone()).expect("solution matches basis")
    }

    /// `p_mom = -(min Σ b_α z_α)`.
    pub fn value(&self, sol: &sdp::SdpSolution) -> f64 {
        -sol.objective_value
    }

    /// Decision vector read off the equality multipliers of the `a` rows.
    pub fn decision(&self, sol: &sdp::SdpSolution) -> Vec<f64> {
        let m = self.view.c.len();
        sol.eq_duals.iter().take(m).map(|l| -l).collect()
    }
}

/// An SOS relaxation. Variables are `x` followed by the Gram matrix entries.
#[derive(Clone, Debug)]
pub struct SosRelaxation {
    pub sdp: SdpProblem,
    pub order: RelaxationOrder,
    pub m: usize,
}

impl SosRelaxation {
    pub fn decision(&self, sol: &sdp::SdpSolution) -> Vec<f64> {
        sol.z[..self.m].to_vec()
    }
}

/// One equality row `L_z(p) = rhs` of a moment relaxation.
pub(crate) struct MomentRow {
    pub poly: Polynomial,
    pub rhs: f64,
    pub label: String,
}

fn localizer_block(st: &LocalizerStructure, label: String) -> PsdBlock {
    let mut coeffs: Vec<(usize, Vec<(usize, usize, f64)>)> = st
        .coefficient_matrices()
        .into_iter()
        .map(|(i, mut t)| {
            t.retain(|e| e.2 != 0.0);
            (i, t)
        })
        .filter(|(_, t)| !t.is_empty())
        .collect();
    coeffs.sort_by_key(|(i, _)| *i);
    let mut b = PsdBlock::new(st.size(), label);
    b.coeffs = coeffs;
    b
}

/// Builds `min Σ obj_α z_α` over `z ∈ R^{s(2k)}` subject to the given rows,
/// `M_k(z) ⪰ 0`, `M_{k-d_j}(g_j z) ⪰ 0` and, if present, `M_{k-1}(h z) = 0`.
pub(crate) fn build_moment_sdp(
    nvars: usize,
    order: &RelaxationOrder,
    objective: &Polynomial,
    rows: &[MomentRow],
    gens: &[Polynomial],
    sphere: Option<&Polynomial>,
) -> Result<(SdpProblem, Arc<MomentBasis>)> {
    let k = order.k;
    let basis = Arc::new(MomentBasis::new(nvars, 2 * k));
    let index = |p: &Polynomial| -> Result<Vec<(usize, f64)>> {
        p.terms()
            .map(|(e, c)| {
                basis
                    .index_of(e)
                    .map(|i| (i, c))
                    .ok_or(LsippError::OrderTooSmall { k, min: p.half_degree() })
            })
            .collect()
    };
    let mut sdp = SdpProblem::new(basis.len());
    for (i, c) in index(objective)? {
        sdp.objective[i] += c;
    }
    for row in rows {
        sdp.equalities.push(EqConstraint {
            coeffs: index(&row.poly)?,
            rhs: row.rhs,
            label: row.label.clone(),
        });
    }
    let one = Polynomial::constant(nvars, 1.0);
    let st = LocalizerStructure::new(&one, k, &basis)?;
    sdp.blocks.push(localizer_block(&st, "moment".into()));
    for (j, g) in gens.iter().enumerate() {
        let st = LocalizerStructure::new(g, k, &basis)?;
        sdp.blocks.push(localizer_block(&st, format!("localizer g{}", j + 1)));
    }
    if let Some(h) = sphere {
        let st = LocalizerStructure::new(h, k, &basis)?;
        let mut seen = HashSet::new();
        for (_, _, cell) in st.upper_cells() {
            let mut key: Vec<usize> = cell.iter().map(|&(i, _)| i).collect();
            key.sort_unstable();
            if seen.insert(key) {
                sdp.equalities.push(EqConstraint {
                    coeffs: cell.to_vec(),
                    rhs: 0.0,
                    label: "sphere".into(),
                });
            }
        }
    }
    Ok((sdp, basis))
}

/// `sup -Σ b_α z_α  s.t.  Σ_α a_{i,α} z_α = c_i, M_k(z) ⪰ 0, M_{k-d_j}(g_j z) ⪰ 0`.
pub fn build_moment(prob: &LsippProblem, k: u32) -> Result<MomentRelaxation> {
    let order = prob.order(k)?;
    let gens = prob.generators();
    let view = LsippView {
        c: prob.c.clone(),
        a: prob.a.clone(),
        b: prob.b.clone(),
    };
    moment_from_view(prob.nvars, order, view, gens, None)
}

/// The moment relaxation of the homogenized problem; the sphere constraint
/// becomes equality rows.
pub fn build_moment_h(hprob: &HomogenizedProblem, k: u32) -> Result<MomentRelaxation> {
    let order = hprob.order(k)?;
    let view = LsippView {
        c: hprob.base.c.clone(),
        a: hprob.a_h.clone(),
        b: hprob.b_h.clone(),
    };
    moment_from_view(
        hprob.nvars(),
        order,
        view,
        hprob.inequality_generators().to_vec(),
        Some(hprob.sphere().clone()),
    )
}

fn moment_from_view(
    nvars: usize,
    order: RelaxationOrder,
    view: LsippView,
    gens: Vec<Polynomial>,
    sphere: Option<Polynomial>,
) -> Result<MomentRelaxation> {
    let rows: Vec<MomentRow> = view
        .a
        .iter()
        .zip(&view.c)
        .enumerate()
        .map(|(i, (a, &c))| MomentRow {
            poly: a.clone(),
            rhs: c,
            label: format!("a{}", i + 1),
        })
        .collect();
    let (sdp, basis) = build_moment_sdp(nvars, &order, &view.b, &rows, &gens, sphere.as_ref())?;
    Ok(MomentRelaxation {
        sdp,
        basis,
        order,
        view,
        gens,
        sphere,
    })
}

/// `min c^T x  s.t.  a(Y)^T x + b(Y) = Σ_j σ_j g_j` with `σ_j` SOS of degree
/// `<= 2(k - d_j)` (`g_0 = 1`).
pub fn build_sos(prob: &LsippProblem, k: u32) -> Result<SosRelaxation> {
    if !prob.index_set_compact {
        log::debug!("build_sos: index set not asserted compact");
    }
    let order = prob.order(k)?;
    let gens = prob.generators();
    let sdp = sos_sdp(prob.nvars, &order, &prob.c, &prob.a, &prob.b, &gens, None)?;
    Ok(SosRelaxation {
        sdp,
        order,
        m: prob.m(),
    })
}

/// SOS side of the homogenized problem; the sphere pair becomes one free
/// polynomial multiplier of degree `<= 2k - 2`.
pub fn build_sos_h(hprob: &HomogenizedProblem, k: u32) -> Result<SosRelaxation> {
    let order = hprob.order(k)?;
    let sdp = sos_sdp(
        hprob.nvars(),
        &order,
        &hprob.base.c,
        &hprob.a_h,
        &hprob.b_h,
        hprob.inequality_generators(),
        Some(hprob.sphere()),
    )?;
    Ok(SosRelaxation {
        sdp,
        order,
        m: hprob.base.m(),
    })
}

fn sos_sdp(
    nvars: usize,
    order: &RelaxationOrder,
    c: &[f64],
    a: &[Polynomial],
    b: &Polynomial,
    gens: &[Polynomial],
    sphere: Option<&Polynomial>,
) -> Result<SdpProblem> {
    let k = order.k;
    if b.degree() > 2 * k {
        return Err(LsippError::OrderTooSmall { k, min: b.half_degree() });
    }
    let basis = MomentBasis::new(nvars, 2 * k);
    let m = c.len();
    // row α collects Σ x_i a_{i,α} - Σ_j <Z_j, C_{j,α}> - (τ h)_α = -b_α
    let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); basis.len()];
    for (i, ai) in a.iter().enumerate() {
        for (e, coef) in ai.terms() {
            let r = basis.index_of(e).ok_or(LsippError::OrderTooSmall { k, min: ai.half_degree() })?;
            *rows[r].entry(i).or_default() += coef;
        }
    }
    let mut next = m;
    let mut blocks = Vec::new();
    let one = Polynomial::constant(nvars, 1.0);
    let all: Vec<(&Polynomial, String)> = std::iter::once((&one, "gram sigma0".to_string()))
        .chain(gens.iter().enumerate().map(|(j, g)| (g, format!("gram sigma{}", j + 1))))
        .collect();
    for (g, label) in all {
        let dg = g.half_degree();
        if k < dg {
            return Err(LsippError::OrderTooSmall { k, min: dg });
        }
        let mut gram_rows: Vec<ExponentVec> = MomentBasis::new(nvars, k - dg).monomials().to_vec();
        if sphere.is_some() {
            // Y0² ≡ 1 - Σ Y_i² on the sphere; Y0-degree <= 1 suffices.
            gram_rows.retain(|e| e.0[0] <= 1);
        }
        let mut blk = PsdBlock::new(gram_rows.len(), label);
        for ra in 0..gram_rows.len() {
            for rb in ra..gram_rows.len() {
                let var = next;
                next += 1;
                blk.coeffs.push((var, vec![(ra, rb, 1.0)]));
                let mult = if ra == rb { 1.0 } else { 2.0 };
                let ab = gram_rows[ra].add(&gram_rows[rb]);
                for (gamma, coef) in g.terms() {
                    let idx = basis.index_of(&ab.add(gamma)).expect("degree <= 2k");
                    *rows[idx].entry(var).or_default() -= mult * coef;
                }
            }
        }
        blocks.push(blk);
    }
    if let Some(h) = sphere {
        let mult_basis = MomentBasis::new(nvars, 2 * k - 2);
        for delta in mult_basis.monomials() {
            let var = next;
            next += 1;
            for (gamma, coef) in h.terms() {
                let idx = basis.index_of(&delta.add(gamma)).expect("degree <= 2k");
                *rows[idx].entry(var).or_default() -= coef;
            }
        }
    }
    let mut sdp = SdpProblem::new(next);
    sdp.objective[..m].copy_from_slice(c);
    sdp.blocks = blocks;
    for (r, row) in rows.into_iter().enumerate() {
        sdp.equalities.push(EqConstraint {
            coeffs: row.into_iter().filter(|(_, v)| *v != 0.0).collect(),
            rhs: -b.coeff(basis.get(r)),
            label: format!("coef {:?}", basis.get(r).0),
        });
    }
    Ok(sdp)
}

/// Knobs for a hierarchy sweep.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct HierarchyOptions {
    pub solver: SolverOptions,
    pub certify: bool,
    pub cert: CertifyOptions,
}

impl Default for HierarchyOptions {
    fn default() -> Self {
        HierarchyOptions {
            solver: SolverOptions::default(),
            certify: true,
            cert: CertifyOptions::default(),
        }
    }
}

/// The outcome of one relaxation order.
#[derive(Clone, Debug)]
pub struct OrderResult {
    pub k: u32,
    /// `p_mom_k`.
    pub value: f64,
    /// Value of the SOS side read from the dual solution.
    pub sos_value: f64,
    pub status: SdpStatus,
    pub residuals: Residuals,
    pub iterations: usize,
    pub solve_time: Duration,
    /// Decision vector recovered from the equality multipliers.
    pub x: Vec<f64>,
    pub moments: MomentVector,
    pub certificate: Option<Certificate>,
}

impl OrderResult {
    pub fn certified(&self) -> bool {
        self.certificate.as_ref().is_some_and(|c| c.certified)
    }
}

#[derive(Clone, Debug, Default)]
pub struct HierarchyResult {
    pub orders: Vec<OrderResult>,
}

impl HierarchyResult {
    pub fn certified(&self) -> Option<&OrderResult> {
        self.orders.iter().find(|o| o.certified())
    }

    pub fn last(&self) -> Option<&OrderResult> {
        self.orders.last()
    }

    pub fn at(&self, k: u32) -> Option<&OrderResult> {
        self.orders.iter().find(|o| o.k == k)
    }
}

/// Solves one relaxation and optionally certifies it.
pub fn solve_relaxation(rel: &MomentRelaxation, opts: &HierarchyOptions) -> Result<OrderResult> {
    let start = Instant::now();
    let sol = sdp::solve(&rel.sdp, &opts.solver)?;
    let solve_time = start.elapsed();
    let value = rel.value(&sol);
    let moments = rel.moments(&sol);
    let certificate = if opts.certify && sol.status == SdpStatus::Optimal {
        Some(certify::certify(rel, &moments, value, &opts.cert))
    } else {
        None
    };
    log::info!(
        "order {}: value {:.8} status {:?} ({} iterations, {:.3}s){}",
        rel.order.k,
        value,
        sol.status,
        sol.iterations,
        solve_time.as_secs_f64(),
        if certificate.as_ref().is_some_and(|c| c.certified) { " certified" } else { "" }
    );
    Ok(OrderResult {
        k: rel.order.k,
        value,
        sos_value: -sol.dual_objective,
        status: sol.status,
        residuals: sol.residuals,
        iterations: sol.iterations,
        solve_time,
        x: rel.decision(&sol),
        moments,
        certificate,
    })
}

/// Solves the relaxations produced by `build` for `k = k_min..=k_max`,
/// stopping after the first certified order when certification is on.
pub fn sweep<F>(k_min: u32, k_max: u32, opts: &HierarchyOptions, mut build: F) -> Result<HierarchyResult>
where
    F: FnMut(u32) -> Result<MomentRelaxation>,
{
    let mut out = HierarchyResult::default();
    for k in k_min..=k_max {
        let rel = build(k)?;
        let res = solve_relaxation(&rel, opts)?;
        let stop = opts.certify && res.certified();
        out.orders.push(res);
        if stop {
            break;
        }
    }
    Ok(out)
}

/// Moment hierarchy of the compact formulation.
pub fn run_hierarchy(
    prob: &LsippProblem,
    k_min: u32,
    k_max: u32,
    opts: &HierarchyOptions,
) -> Result<HierarchyResult> {
    let d_p = prob.min_order();
    if k_min < d_p {
        return Err(LsippError::OrderTooSmall { k: k_min, min: d_p });
    }
    sweep(k_min, k_max, opts, |k| build_moment(prob, k))
}

/// Moment hierarchy of the homogenized formulation.
pub fn run_hierarchy_h(
    hprob: &HomogenizedProblem,
    k_min: u32,
    k_max: u32,
    opts: &HierarchyOptions,
) -> Result<HierarchyResult> {
    let d_p = hprob.min_order();
    if k_min < d_p {
        return Err(LsippError::OrderTooSmall { k: k_min, min: d_p });
    }
    sweep(k_min, k_max, opts, |k| build_moment_h(hprob, k))
}
