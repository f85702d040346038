//! Infeasible primal-dual path-following method with HKM search direction
//! and Mehrotra predictor-corrector steps.
//!
//! Free variables stay free and equality rows are kept as exact rows of the
//! Newton system
//!
//! ```text
//! [ H   -E^T ] [dz]   [ g - r_d ]
//! [ E    0   ] [dλ] = [   r_e   ]
//! ```
//!
//! where `H_il = Σ_j tr(B_{j,i} X_j B_{j,l} S_j^{-1})`.

use nalgebra::{DMatrix, DVector};

use super::{
    add_triplets, inner_triplets, Residuals, SdpProblem, SdpSolution, SdpStatus, SolverOptions,
    SymTriplets,
};
use crate::linalg::{frob_inner, max_step_psd, symmetrize};

const DIVERGENCE: f64 = 1e10;
const STALL_WINDOW: usize = 30;

struct BlockData<'a> {
    size: usize,
    b0: DMatrix<f64>,
    coeffs: &'a [(usize, SymTriplets)],
}

impl BlockData<'_> {
    fn lmi(&self, z: &[f64]) -> DMatrix<f64> {
        let mut m = self.b0.clone();
        for (i, t) in self.coeffs {
            if z[*i] != 0.0 {
                add_triplets(&mut m, t, z[*i]);
            }
        }
        m
    }

    fn lin(&self, dz: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.size, self.size);
        for (i, t) in self.coeffs {
            if dz[*i] != 0.0 {
                add_triplets(&mut m, t, dz[*i]);
            }
        }
        m
    }

    fn adjoint_into(&self, m: &DMatrix<f64>, out: &mut [f64]) {
        for (i, t) in self.coeffs {
            out[*i] += inner_triplets(m, t);
        }
    }

    /// Adds this block's contribution to the Schur matrix `H`.
    fn schur_into(&self, x: &DMatrix<f64>, sinv: &DMatrix<f64>, h: &mut DMatrix<f64>) {
        let nb = self.size;
        let xs = x.as_slice();
        let si = sinv.as_slice();
        let mut p = vec![0.0; nb * nb];
        for (pi, (var_p, trips_p)) in self.coeffs.iter().enumerate() {
            p.iter_mut().for_each(|v| *v = 0.0);
            // P = S^{-1} B_p X, column-major
            for &(a, b, v) in trips_p {
                for c in 0..nb {
                    let col = &mut p[c * nb..(c + 1) * nb];
                    let xb = v * xs[b + c * nb];
                    if xb != 0.0 {
                        let sa = &si[a * nb..(a + 1) * nb];
                        for (pd, s) in col.iter_mut().zip(sa) {
                            *pd += xb * s;
                        }
                    }
                    if a != b {
                        let xa = v * xs[a + c * nb];
                        if xa != 0.0 {
                            let sb = &si[b * nb..(b + 1) * nb];
                            for (pd, s) in col.iter_mut().zip(sb) {
                                *pd += xa * s;
                            }
                        }
                    }
                }
            }
            for (var_l, trips_l) in &self.coeffs[pi..] {
                let mut s = 0.0;
                for &(c, d, v) in trips_l {
                    s += if c == d {
                        v * p[c + c * nb]
                    } else {
                        v * (p[d + c * nb] + p[c + d * nb])
                    };
                }
                h[(*var_p, *var_l)] += s;
                if var_l != var_p {
                    h[(*var_l, *var_p)] += s;
                }
            }
        }
    }
}

struct Kkt {
    matrix: DMatrix<f64>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl Kkt {
    /// LU solve followed by two rounds of iterative refinement.
    fn solve(&self, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        let mut sol = self.lu.solve(rhs)?;
        for _ in 0..2 {
            let r = rhs - &self.matrix * &sol;
            sol += self.lu.solve(&r)?;
        }
        Some(sol)
    }
}

struct Direction {
    dz: Vec<f64>,
    dlam: Vec<f64>,
    dx: Vec<DMatrix<f64>>,
    ds: Vec<DMatrix<f64>>,
}

#[derive(Clone)]
struct Iterate {
    z: Vec<f64>,
    lam: Vec<f64>,
    x: Vec<DMatrix<f64>>,
    s: Vec<DMatrix<f64>>,
}

struct Measures {
    pobj: f64,
    dobj: f64,
    compl: f64,
    res: Residuals,
}

/// Solves an already presolved problem (no scaling or row removal is
/// applied here).
pub fn solve_presolved(prob: &SdpProblem, opts: &SolverOptions) -> SdpSolution {
    Solver::new(prob).run(opts)
}

struct Solver<'a> {
    prob: &'a SdpProblem,
    blocks: Vec<BlockData<'a>>,
    e_mat: DMatrix<f64>,
    e_rhs: DVector<f64>,
    f: Vec<f64>,
    nsum: f64,
    b0_norm: f64,
}

impl<'a> Solver<'a> {
    fn new(prob: &'a SdpProblem) -> Self {
        let blocks: Vec<BlockData> = prob
            .blocks
            .iter()
            .map(|b| {
                let mut b0 = DMatrix::zeros(b.size, b.size);
                add_triplets(&mut b0, &b.constant, 1.0);
                BlockData {
                    size: b.size,
                    b0,
                    coeffs: &b.coeffs,
                }
            })
            .collect();
        let me = prob.equalities.len();
        let mut e_mat = DMatrix::zeros(me, prob.nfree);
        let mut e_rhs = DVector::zeros(me);
        for (r, eq) in prob.equalities.iter().enumerate() {
            for &(i, c) in &eq.coeffs {
                e_mat[(r, i)] += c;
            }
            e_rhs[r] = eq.rhs;
        }
        let nsum = blocks.iter().map(|b| b.size as f64).sum::<f64>().max(1.0);
        let b0_norm = blocks.iter().map(|b| b.b0.norm()).fold(0.0, f64::max);
        Solver {
            prob,
            blocks,
            e_mat,
            e_rhs,
            f: prob.objective.clone(),
            nsum,
            b0_norm,
        }
    }

    fn initial(&self) -> Iterate {
        let n = self.prob.nfree;
        let mut x = Vec::new();
        let mut s = Vec::new();
        for (bd, pb) in self.blocks.iter().zip(&self.prob.blocks) {
            let nb = bd.size as f64;
            let mut amax: f64 = 0.0;
            let mut ratio: f64 = 0.0;
            for (i, t) in pb.coeffs.iter() {
                let norm = t
                    .iter()
                    .map(|&(r, c, v)| if r == c { v * v } else { 2.0 * v * v })
                    .sum::<f64>()
                    .sqrt();
                amax = amax.max(norm);
                ratio = ratio.max((1.0 + self.f[*i].abs()) / (1.0 + norm));
            }
            let xi = 10f64.max(nb.sqrt()).max(nb * ratio);
            let eta = 10f64.max(nb.sqrt()).max(amax).max(bd.b0.norm());
            x.push(DMatrix::identity(bd.size, bd.size) * xi);
            s.push(DMatrix::identity(bd.size, bd.size) * eta);
        }
        Iterate {
            z: vec![0.0; n],
            lam: vec![0.0; self.prob.equalities.len()],
            x,
            s,
        }
    }

    // r_d = f - Σ A_j^*(X_j) - E^T λ
    fn dual_residual(&self, it: &Iterate) -> Vec<f64> {
        let mut r = self.f.clone();
        let mut adj = vec![0.0; self.prob.nfree];
        for (b, x) in self.blocks.iter().zip(&it.x) {
            b.adjoint_into(x, &mut adj);
        }
        let etl = self.e_mat.transpose() * DVector::from_column_slice(&it.lam);
        for i in 0..r.len() {
            r[i] -= adj[i] + etl[i];
        }
        r
    }

    fn measures(
        &self,
        it: &Iterate,
        rlmi: &[DMatrix<f64>],
        rd: &[f64],
        re: &DVector<f64>,
    ) -> Measures {
        let pobj = self.prob.primal_objective(&it.z);
        let dobj = self.prob.objective_constant
            - self
                .blocks
                .iter()
                .zip(&it.x)
                .map(|(b, x)| frob_inner(x, &b.b0))
                .sum::<f64>()
            + self.e_rhs.dot(&DVector::from_column_slice(&it.lam));
        let compl: f64 = it.x.iter().zip(&it.s).map(|(x, s)| frob_inner(x, s)).sum();
        let lmi_inf = rlmi.iter().map(|r| r.norm()).fold(0.0, f64::max) / (1.0 + self.b0_norm);
        let eq_inf = re.amax() / (1.0 + self.e_rhs.amax());
        let fmax = self.f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let dinf = rd.iter().fold(0.0f64, |m, v| m.max(v.abs())) / (1.0 + fmax);
        let denom = 1.0 + pobj.abs() + dobj.abs();
        Measures {
            pobj,
            dobj,
            compl,
            res: Residuals {
                primal_feas: lmi_inf.max(eq_inf),
                dual_feas: dinf,
                gap: (pobj - dobj).abs() / denom,
            },
        }
    }

    fn run(&self, opts: &SolverOptions) -> SdpSolution {
        let n = self.prob.nfree;
        let mut it = self.initial();
        let mut history = Vec::new();
        let mut status = SdpStatus::MaxIter;
        let mut trend: Vec<[f64; 3]> = Vec::new();
        let mut tiny_steps = 0;
        let mut iterations = 0;
        let mut last = None;
        let mut best: Option<(f64, Iterate)> = None;

        for iter in 0..opts.max_iter {
            iterations = iter;
            let rlmi: Vec<DMatrix<f64>> = self
                .blocks
                .iter()
                .zip(&it.s)
                .map(|(b, s)| b.lmi(&it.z) - s)
                .collect();
            let rd = self.dual_residual(&it);
            let re = &self.e_rhs - &self.e_mat * DVector::from_column_slice(&it.z);
            let m = self.measures(&it, &rlmi, &rd, &re);
            let compl_rel = m.compl / (1.0 + m.pobj.abs() + m.dobj.abs());
            log::trace!(
                "iter {iter}: pobj {:.10e} dobj {:.10e} pinf {:.2e} dinf {:.2e} gap {:.2e} compl {:.2e}",
                m.pobj,
                m.dobj,
                m.res.primal_feas,
                m.res.dual_feas,
                m.res.gap,
                compl_rel
            );
            let done = m.res.primal_feas <= opts.tol
                && m.res.dual_feas <= opts.tol
                && m.res.gap <= opts.tol
                && compl_rel <= opts.tol;
            last = Some(m);
            let m = last.as_ref().unwrap();
            if done {
                status = SdpStatus::Optimal;
                break;
            }
            if m.pobj < -DIVERGENCE && m.res.primal_feas < 1e-6 {
                status = SdpStatus::Unbounded;
                break;
            }
            if m.dobj > DIVERGENCE && m.res.dual_feas < 1e-6 {
                status = SdpStatus::Infeasible;
                break;
            }
            let merit = m.res.primal_feas.max(m.res.dual_feas).max(m.res.gap).max(compl_rel);
            if best.as_ref().is_none_or(|(b, _)| merit < *b) {
                best = Some((merit, it.clone()));
            }
            // stalled if no measure dropped by 10% over the window
            let now = [compl_rel, m.res.primal_feas, m.res.dual_feas];
            if trend.len() >= STALL_WINDOW {
                let then = trend[trend.len() - STALL_WINDOW];
                let progress = now
                    .iter()
                    .zip(&then)
                    .any(|(a, b)| *a < 0.9 * b && *b > opts.tol);
                if !progress || !merit.is_finite() {
                    log::debug!("no progress over {STALL_WINDOW} iterations");
                    status = SdpStatus::NumericalTrouble;
                    break;
                }
            }
            trend.push(now);

            let mu = m.compl / self.nsum;
            let sinv: Option<Vec<DMatrix<f64>>> = it
                .s
                .iter()
                .map(|s| s.clone().cholesky().map(|c| c.inverse()))
                .collect();
            let Some(sinv) = sinv else {
                status = SdpStatus::NumericalTrouble;
                break;
            };

            let mut h = DMatrix::zeros(n, n);
            for ((b, x), si) in self.blocks.iter().zip(&it.x).zip(&sinv) {
                b.schur_into(x, si, &mut h);
            }
            let Some(kkt) = self.factor_kkt(&h) else {
                log::debug!("KKT factorization failed");
                status = SdpStatus::NumericalTrouble;
                break;
            };
            let xrs: Vec<DMatrix<f64>> = it
                .x
                .iter()
                .zip(&rlmi)
                .zip(&sinv)
                .map(|((x, r), si)| x * r * si)
                .collect();

            // predictor
            let zero_targets: Vec<DMatrix<f64>> = self
                .blocks
                .iter()
                .map(|b| DMatrix::zeros(b.size, b.size))
                .collect();
            let Some(pred) = self.direction(&it, &sinv, &xrs, &rlmi, &rd, &re, &kkt, &zero_targets)
            else {
                status = SdpStatus::NumericalTrouble;
                break;
            };
            let (ap, ad) = match self.step_lengths(&it, &pred, 1.0) {
                Some(v) => v,
                None => {
                    status = SdpStatus::NumericalTrouble;
                    break;
                }
            };
            let mu_aff = it
                .x
                .iter()
                .zip(&it.s)
                .zip(pred.dx.iter().zip(&pred.ds))
                .map(|((x, s), (dx, ds))| frob_inner(&(x + dx * ap), &(s + ds * ad)))
                .sum::<f64>()
                / self.nsum;
            let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

            // corrector
            let targets: Vec<DMatrix<f64>> = sinv
                .iter()
                .zip(pred.dx.iter().zip(&pred.ds))
                .map(|(si, (dx, ds))| {
                    let mut corr = dx * ds * si;
                    symmetrize(&mut corr);
                    si * (sigma * mu) - corr
                })
                .collect();
            let Some(corrected) =
                self.direction(&it, &sinv, &xrs, &rlmi, &rd, &re, &kkt, &targets)
            else {
                status = SdpStatus::NumericalTrouble;
                break;
            };
            let Some(steps) = self.step_lengths(&it, &corrected, opts.step_factor) else {
                status = SdpStatus::NumericalTrouble;
                break;
            };

            // keep the complementarity gap nonincreasing; the uncorrected
            // centering direction with a common step always decreases it
            let (dir, ap, ad) = match self.monotone_step(&it, &corrected, steps, m.compl, false) {
                Some((ap, ad)) => (corrected, ap, ad),
                None => {
                    let centering: Vec<DMatrix<f64>> =
                        sinv.iter().map(|si| si * (sigma * mu)).collect();
                    let Some(plain) =
                        self.direction(&it, &sinv, &xrs, &rlmi, &rd, &re, &kkt, &centering)
                    else {
                        status = SdpStatus::NumericalTrouble;
                        break;
                    };
                    let Some(steps) = self.step_lengths(&it, &plain, opts.step_factor) else {
                        status = SdpStatus::NumericalTrouble;
                        break;
                    };
                    let (ap, ad) = self
                        .monotone_step(&it, &plain, steps, m.compl, true)
                        .unwrap_or((0.0, 0.0));
                    (plain, ap, ad)
                }
            };

            if ap.max(ad) < 1e-10 {
                tiny_steps += 1;
                if tiny_steps >= 3 {
                    status = SdpStatus::NumericalTrouble;
                    break;
                }
            } else {
                tiny_steps = 0;
            }

            for (x, dx) in it.x.iter_mut().zip(&dir.dx) {
                *x += dx * ap;
                symmetrize(x);
            }
            for (l, dl) in it.lam.iter_mut().zip(&dir.dlam) {
                *l += ap * dl;
            }
            for (s, ds) in it.s.iter_mut().zip(&dir.ds) {
                *s += ds * ad;
                symmetrize(s);
            }
            for (z, dz) in it.z.iter_mut().zip(&dir.dz) {
                *z += ad * dz;
            }
            history.push(it.x.iter().zip(&it.s).map(|(x, s)| frob_inner(x, s)).sum());
            iterations = iter + 1;
        }

        if status != SdpStatus::Optimal {
            if let Some((merit, b)) = best {
                if merit <= opts.acceptable_tol {
                    log::debug!("{status:?}; returning best iterate (merit {merit:.2e})");
                    it = b;
                    status = SdpStatus::Optimal;
                }
            }
            // refresh measures for the final iterate
            let rlmi: Vec<DMatrix<f64>> = self
                .blocks
                .iter()
                .zip(&it.s)
                .map(|(b, s)| b.lmi(&it.z) - s)
                .collect();
            let rd = self.dual_residual(&it);
            let re = &self.e_rhs - &self.e_mat * DVector::from_column_slice(&it.z);
            last = Some(self.measures(&it, &rlmi, &rd, &re));
        }
        let m = last.expect("at least one iteration");
        log::debug!(
            "sdp: {:?} after {iterations} iterations, pobj {:.10e}, residuals {:?}",
            status,
            m.pobj,
            m.res
        );
        SdpSolution {
            status,
            z: it.z,
            objective_value: m.pobj,
            dual_objective: m.dobj,
            dual_matrices: it.x,
            eq_duals: it.lam,
            residuals: m.res,
            iterations,
            gap_history: history,
        }
    }

    fn factor_kkt(&self, h: &DMatrix<f64>) -> Option<Kkt> {
        let n = self.prob.nfree;
        let me = self.e_mat.nrows();
        let mut k = DMatrix::zeros(n + me, n + me);
        k.view_mut((0, 0), (n, n)).copy_from(h);
        for r in 0..me {
            for c in 0..n {
                let v = self.e_mat[(r, c)];
                k[(n + r, c)] = v;
                k[(c, n + r)] = -v;
            }
        }
        let hmax = (0..n).map(|i| h[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
        for attempt in 0..3 {
            if attempt > 0 {
                let reg = hmax * 10f64.powi(-14 + 3 * attempt);
                for i in 0..n {
                    k[(i, i)] += reg;
                }
            }
            let lu = k.clone().lu();
            if lu.is_invertible() {
                return Some(Kkt { matrix: k, lu });
            }
        }
        None
    }

    #[allow(clippy::too_many_arguments)]
    fn direction(
        &self,
        it: &Iterate,
        sinv: &[DMatrix<f64>],
        xrs: &[DMatrix<f64>],
        rlmi: &[DMatrix<f64>],
        rd: &[f64],
        re: &DVector<f64>,
        kkt: &Kkt,
        targets: &[DMatrix<f64>],
    ) -> Option<Direction> {
        let n = self.prob.nfree;
        let me = self.e_mat.nrows();
        let mut g = vec![0.0; n];
        for (j, b) in self.blocks.iter().enumerate() {
            let gm = &targets[j] - &it.x[j] - &xrs[j];
            b.adjoint_into(&gm, &mut g);
        }
        let mut rhs = DVector::zeros(n + me);
        for i in 0..n {
            rhs[i] = g[i] - rd[i];
        }
        for r in 0..me {
            rhs[n + r] = re[r];
        }
        let sol = kkt.solve(&rhs)?;
        if sol.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let dz: Vec<f64> = sol.rows(0, n).iter().copied().collect();
        let dlam: Vec<f64> = sol.rows(n, me).iter().copied().collect();
        let mut ds = Vec::with_capacity(self.blocks.len());
        let mut dx = Vec::with_capacity(self.blocks.len());
        for (j, b) in self.blocks.iter().enumerate() {
            let dsj = &rlmi[j] + b.lin(&dz);
            let mut t = &it.x[j] * &dsj * &sinv[j];
            symmetrize(&mut t);
            dx.push(&targets[j] - &it.x[j] - t);
            ds.push(dsj);
        }
        Some(Direction { dz, dlam, dx, ds })
    }

    fn gap_after(it: &Iterate, d: &Direction, ap: f64, ad: f64) -> f64 {
        it.x.iter()
            .zip(&it.s)
            .zip(d.dx.iter().zip(&d.ds))
            .map(|((x, s), (dx, ds))| frob_inner(&(x + dx * ap), &(s + ds * ad)))
            .sum()
    }

    /// Shrinks the steps until the complementarity gap does not grow.
    fn monotone_step(
        &self,
        it: &Iterate,
        d: &Direction,
        (mut ap, mut ad): (f64, f64),
        compl: f64,
        common: bool,
    ) -> Option<(f64, f64)> {
        if common {
            ap = ap.min(ad);
            ad = ap;
        }
        for _ in 0..60 {
            if Self::gap_after(it, d, ap, ad) <= compl {
                return Some((ap, ad));
            }
            ap *= 0.7;
            ad *= 0.7;
        }
        None
    }

    fn step_lengths(&self, it: &Iterate, d: &Direction, factor: f64) -> Option<(f64, f64)> {
        let mut ap = f64::INFINITY;
        let mut ad = f64::INFINITY;
        for j in 0..self.blocks.len() {
            ap = ap.min(max_step_psd(&it.x[j], &d.dx[j])?);
            ad = ad.min(max_step_psd(&it.s[j], &d.ds[j])?);
        }
        Some(((factor * ap).min(1.0), (factor * ad).min(1.0)))
    }
}
