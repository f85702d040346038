//! Block-structured semidefinite programs in LMI form and a primal-dual
//! interior-point solver for them.
//!
//! # Sign convention
//!
//! An [`SdpProblem`] always **minimizes** `f0 + f^T z` over free variables
//! `z ∈ R^N` subject to
//!
//! ```text
//! S_j(z) = B_{j,0} + Σ_i z_i B_{j,i} ⪰ 0      for every block j
//! Σ_i E_{r,i} z_i = e_r                        for every equality row r
//! ```
//!
//! Its Lagrangian dual maximizes `f0 - Σ_j <X_j, B_{j,0}> + e^T λ` over
//! `X_j ⪰ 0` and free `λ` subject to `Σ_j <X_j, B_{j,i}> + (E^T λ)_i = f_i`.
//! We call the `z` side *primal* and the `(X, λ)` side *dual*; weak duality
//! reads `primal objective >= dual objective`.

mod ipm;
mod presolve;
pub mod sdpa;

use nalgebra::DMatrix;
use serde::Serialize;

pub use ipm::solve_presolved;
pub use presolve::{presolve, Presolved};

/// Upper-triangle triplets `(row, col, value)` with `row <= col`; an
/// off-diagonal triplet stands for both mirrored entries.
pub type SymTriplets = Vec<(usize, usize, f64)>;

/// One affine matrix map `z ↦ B_0 + Σ_i z_i B_i` constrained to be PSD.
#[derive(Clone, Debug, PartialEq)]
pub struct PsdBlock {
    pub size: usize,
    pub constant: SymTriplets,
    /// `(variable index, B_i)` for the variables that touch this block,
    /// sorted by variable index.
    pub coeffs: Vec<(usize, SymTriplets)>,
    pub label: String,
}

impl PsdBlock {
    pub fn new(size: usize, label: impl Into<String>) -> Self {
        PsdBlock {
            size,
            constant: Vec::new(),
            coeffs: Vec::new(),
            label: label.into(),
        }
    }

    /// Evaluates `B_0 + Σ z_i B_i`.
    pub fn evaluate(&self, z: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.size, self.size);
        add_triplets(&mut m, &self.constant, 1.0);
        for (i, t) in &self.coeffs {
            if z[*i] != 0.0 {
                add_triplets(&mut m, t, z[*i]);
            }
        }
        m
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.constant
            .iter()
            .chain(self.coeffs.iter().flat_map(|(_, t)| t.iter()))
            .fold(0.0, |m, &(_, _, v)| m.max(v.abs()))
    }
}

pub(crate) fn add_triplets(m: &mut DMatrix<f64>, t: &[(usize, usize, f64)], scale: f64) {
    for &(r, c, v) in t {
        m[(r, c)] += scale * v;
        if r != c {
            m[(c, r)] += scale * v;
        }
    }
}

/// `<M, B>` for symmetric `B` given as triplets (uses both mirrored entries of `M`).
pub(crate) fn inner_triplets(m: &DMatrix<f64>, t: &[(usize, usize, f64)]) -> f64 {
    t.iter()
        .map(|&(r, c, v)| {
            if r == c {
                v * m[(r, r)]
            } else {
                v * (m[(r, c)] + m[(c, r)])
            }
        })
        .sum()
}

/// `Σ_i coeff_i z_i = rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct EqConstraint {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
    pub label: String,
}

impl EqConstraint {
    pub fn evaluate(&self, z: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(i, c)| c * z[i]).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SdpProblem {
    pub nfree: usize,
    pub objective_constant: f64,
    pub objective: Vec<f64>,
    pub blocks: Vec<PsdBlock>,
    pub equalities: Vec<EqConstraint>,
}

impl SdpProblem {
    pub fn new(nfree: usize) -> Self {
        SdpProblem {
            nfree,
            objective_constant: 0.0,
            objective: vec![0.0; nfree],
            blocks: Vec::new(),
            equalities: Vec::new(),
        }
    }

    pub fn primal_objective(&self, z: &[f64]) -> f64 {
        self.objective_constant
            + self
                .objective
                .iter()
                .zip(z)
                .map(|(f, v)| f * v)
                .sum::<f64>()
    }

    /// Checks indices, symmetry layout and block sizes.
    pub fn validate(&self) -> crate::Result<()> {
        use crate::LsippError::InvalidInput;
        if self.objective.len() != self.nfree {
            return Err(InvalidInput("objective length differs from nfree".into()));
        }
        if self.blocks.is_empty() && self.equalities.is_empty() {
            return Err(InvalidInput("problem has no constraints".into()));
        }
        for b in &self.blocks {
            if b.size == 0 {
                return Err(InvalidInput(format!("block `{}` has size 0", b.label)));
            }
            let trips = b.constant.iter().chain(b.coeffs.iter().flat_map(|(_, t)| t));
            for &(r, c, v) in trips {
                if r > c || c >= b.size || !v.is_finite() {
                    return Err(InvalidInput(format!(
                        "bad triplet ({r},{c},{v}) in block `{}`",
                        b.label
                    )));
                }
            }
            if b.coeffs.iter().any(|(i, _)| *i >= self.nfree) {
                return Err(InvalidInput(format!("variable out of range in `{}`", b.label)));
            }
            if b.coeffs.windows(2).any(|w| w[0].0 >= w[1].0) {
                return Err(InvalidInput(format!("unsorted coefficients in `{}`", b.label)));
            }
        }
        for e in &self.equalities {
            if e.coeffs.iter().any(|(i, _)| *i >= self.nfree) {
                return Err(InvalidInput(format!("variable out of range in `{}`", e.label)));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalTrouble,
    MaxIter,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Residuals {
    /// Relative violation of the LMI and equality constraints on `z`.
    pub primal_feas: f64,
    /// Relative violation of `Σ <X_j, B_{j,i}> + (E^T λ)_i = f_i`.
    pub dual_feas: f64,
    /// `|pobj - dobj| / (1 + |pobj| + |dobj|)`.
    pub gap: f64,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub z: Vec<f64>,
    pub objective_value: f64,
    pub dual_objective: f64,
    /// `X_j`, one per block.
    pub dual_matrices: Vec<DMatrix<f64>>,
    /// `λ`, one per equality row of the original problem.
    pub eq_duals: Vec<f64>,
    pub residuals: Residuals,
    pub iterations: usize,
    /// Complementarity `Σ <X_j, S_j>` after each accepted iteration.
    pub gap_history: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SolverOptions {
    pub tol: f64,
    /// A run that stalls after reaching this accuracy reports its best
    /// iterate as optimal.
    pub acceptable_tol: f64,
    pub max_iter: usize,
    /// Fraction of the distance to the cone boundary taken per step.
    pub step_factor: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-9,
            acceptable_tol: 1e-6,
            max_iter: 500,
            step_factor: 0.98,
        }
    }
}

/// Presolves and solves `prob`, mapping the solution back to its variables
/// and rows.
pub fn solve(prob: &SdpProblem, opts: &SolverOptions) -> crate::Result<SdpSolution> {
    prob.validate()?;
    match presolve(prob) {
        Ok(pre) => {
            let sol = solve_presolved(pre.problem(), opts);
            Ok(pre.recover(sol))
        }
        Err(crate::LsippError::InconsistentEquality { row, rhs }) => {
            log::info!("presolve: inconsistent equality row {row} (0 = {rhs})");
            Ok(SdpSolution {
                status: SdpStatus::Infeasible,
                z: vec![0.0; prob.nfree],
                objective_value: f64::NAN,
                dual_objective: f64::NAN,
                dual_matrices: prob
                    .blocks
                    .iter()
                    .map(|b| DMatrix::zeros(b.size, b.size))
                    .collect(),
                eq_duals: vec![0.0; prob.equalities.len()],
                residuals: Residuals::default(),
                iterations: 0,
                gap_history: Vec::new(),
            })
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests;
