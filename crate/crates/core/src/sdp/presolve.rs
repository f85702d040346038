use std::collections::HashSet;

use super::{SdpProblem, SdpSolution};
use crate::error::{LsippError, Result};

const ZERO_ROW_TOL: f64 = 1e-14;
const DEPENDENT_TOL: f64 = 1e-9;

/// A presolved problem plus what is needed to map its solution back.
#[derive(Clone, Debug)]
pub struct Presolved {
    problem: SdpProblem,
    kept_rows: Vec<usize>,
    row_scale: Vec<f64>,
    block_scale: Vec<f64>,
    original_rows: usize,
    rank: usize,
}

impl Presolved {
    pub fn problem(&self) -> &SdpProblem {
        &self.problem
    }

    /// Rank of the equality system (number of rows kept).
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn removed_rows(&self) -> usize {
        self.original_rows - self.kept_rows.len()
    }

    pub fn block_scale(&self) -> &[f64] {
        &self.block_scale
    }

    /// Maps a solution of the presolved problem back to the original rows
    /// and block scaling. Dropped rows get a zero multiplier.
    pub fn recover(&self, mut sol: SdpSolution) -> SdpSolution {
        for (x, s) in sol.dual_matrices.iter_mut().zip(&self.block_scale) {
            *x *= *s;
        }
        let mut lam = vec![0.0; self.original_rows];
        for ((&row, &r), &l) in self.kept_rows.iter().zip(&self.row_scale).zip(&sol.eq_duals) {
            lam[row] = l * r;
        }
        sol.eq_duals = lam;
        sol
    }
}

/// Removes zero, duplicate and linearly dependent equality rows, scales
/// each row and each block to unit max-entry.
///
/// Returns [`LsippError::InconsistentEquality`] when a row reduces to
/// `0 = c` with `c != 0`.
pub fn presolve(prob: &SdpProblem) -> Result<Presolved> {
    let n = prob.nfree;
    let mut seen = HashSet::new();
    let mut candidates = Vec::new();
    for (idx, eq) in prob.equalities.iter().enumerate() {
        let mut coeffs: Vec<(usize, f64)> = eq
            .coeffs
            .iter()
            .copied()
            .filter(|(_, c)| c.abs() > ZERO_ROW_TOL)
            .collect();
        coeffs.sort_by_key(|&(i, _)| i);
        // merge repeated variables
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(coeffs.len());
        for (i, c) in coeffs {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += c,
                _ => merged.push((i, c)),
            }
        }
        merged.retain(|(_, c)| c.abs() > ZERO_ROW_TOL);
        if merged.is_empty() {
            if eq.rhs.abs() > 1e-12 {
                return Err(LsippError::InconsistentEquality { row: idx, rhs: eq.rhs });
            }
            continue;
        }
        let key: Vec<(usize, u64)> = merged.iter().map(|&(i, c)| (i, c.to_bits())).collect();
        if !seen.insert((key, eq.rhs.to_bits())) {
            continue;
        }
        candidates.push((idx, merged, eq.rhs));
    }

    // sequential elimination to find an independent subset
    let mut basis: Vec<(Vec<f64>, f64, usize)> = Vec::new();
    let mut kept_rows = Vec::new();
    let mut row_scale = Vec::new();
    let mut new_eqs = Vec::new();
    for (idx, coeffs, rhs) in candidates {
        let scale = 1.0 / coeffs.iter().fold(0.0f64, |m, &(_, c)| m.max(c.abs()));
        let mut dense = vec![0.0; n];
        for &(i, c) in &coeffs {
            dense[i] = c * scale;
        }
        let mut r = rhs * scale;
        for (brow, brhs, piv) in &basis {
            let f = dense[*piv];
            if f != 0.0 {
                for (d, b) in dense.iter_mut().zip(brow) {
                    *d -= f * b;
                }
                r -= f * brhs;
            }
        }
        let (piv, pmax) = dense
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |(bi, bm), (i, v)| if v.abs() > bm { (i, v.abs()) } else { (bi, bm) });
        if pmax < DEPENDENT_TOL {
            if r.abs() > 1e-8 * (1.0 + (rhs * scale).abs()) {
                return Err(LsippError::InconsistentEquality { row: idx, rhs: r });
            }
            continue;
        }
        let p = dense[piv];
        for d in dense.iter_mut() {
            *d /= p;
        }
        basis.push((dense, r / p, piv));
        kept_rows.push(idx);
        row_scale.push(scale);
        let mut eq = prob.equalities[idx].clone();
        eq.coeffs = coeffs.iter().map(|&(i, c)| (i, c * scale)).collect();
        eq.rhs = rhs * scale;
        new_eqs.push(eq);
    }

    let mut problem = prob.clone();
    problem.equalities = new_eqs;
    let mut block_scale = Vec::with_capacity(problem.blocks.len());
    for b in problem.blocks.iter_mut() {
        let m = b.max_abs_entry();
        let s = if m > 0.0 { 1.0 / m } else { 1.0 };
        for t in b.constant.iter_mut() {
            t.2 *= s;
        }
        for (_, trips) in b.coeffs.iter_mut() {
            for t in trips.iter_mut() {
                t.2 *= s;
            }
        }
        block_scale.push(s);
    }
    let rank = kept_rows.len();
    if rank < prob.equalities.len() {
        log::debug!(
            "presolve: kept {rank} of {} equality rows",
            prob.equalities.len()
        );
    }
    Ok(Presolved {
        problem,
        kept_rows,
        row_scale,
        block_scale,
        original_rows: prob.equalities.len(),
        rank,
    })
}
