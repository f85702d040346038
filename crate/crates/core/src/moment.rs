//! Monomial bases, truncated moment sequences, and the moment/localizing
//! matrices built from them.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{LsippError, Result};
use crate::polyring::{ExponentVec, Polynomial};

/// `C(n + k, n)`, the number of monomials of degree at most `k` in `n` variables.
pub fn basis_len(nvars: usize, k: u32) -> usize {
    let mut num: u128 = 1;
    let k = k as u128;
    for i in 1..=nvars as u128 {
        num = num * (k + i) / i;
    }
    num as usize
}

/// All exponents of total degree `<= order`, in graded-lex order.
#[derive(Clone, Debug)]
pub struct MomentBasis {
    nvars: usize,
    order: u32,
    monomials: Vec<ExponentVec>,
    index: HashMap<ExponentVec, usize>,
}

impl MomentBasis {
    pub fn new(nvars: usize, order: u32) -> Self {
        assert!(nvars >= 1, "a monomial basis needs at least one variable");
        let mut monomials = Vec::with_capacity(basis_len(nvars, order));
        for d in 0..=order {
            push_degree(nvars, d, &mut monomials);
        }
        let index = monomials
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();
        MomentBasis {
            nvars,
            order,
            monomials,
            index,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomials(&self) -> &[ExponentVec] {
        &self.monomials
    }

    pub fn get(&self, i: usize) -> &ExponentVec {
        &self.monomials[i]
    }

    pub fn index_of(&self, e: &ExponentVec) -> Option<usize> {
        self.index.get(e).copied()
    }

    /// Number of leading monomials of degree `<= d`.
    pub fn prefix_len(&self, d: u32) -> usize {
        basis_len(self.nvars, d.min(self.order))
    }
}

// Exponents of degree exactly `d`, appended in graded-lex order (first
// variable's power descending).
fn push_degree(nvars: usize, d: u32, out: &mut Vec<ExponentVec>) {
    fn rec(prefix: &mut Vec<u32>, left: u32, remaining_vars: usize, out: &mut Vec<ExponentVec>) {
        if remaining_vars == 1 {
            prefix.push(left);
            out.push(ExponentVec(prefix.clone()));
            prefix.pop();
            return;
        }
        for a in (0..=left).rev() {
            prefix.push(a);
            rec(prefix, left - a, remaining_vars - 1, out);
            prefix.pop();
        }
    }
    rec(&mut Vec::with_capacity(nvars), d, nvars, out);
}

/// Convenience wrapper for [`MomentBasis::new`].
pub fn basis(nvars: usize, k: u32) -> MomentBasis {
    MomentBasis::new(nvars, k)
}

/// A truncated moment sequence `(z_α)` indexed by a [`MomentBasis`].
#[derive(Clone, Debug)]
pub struct MomentVector {
    basis: Arc<MomentBasis>,
    values: Vec<f64>,
}

impl MomentVector {
    pub fn new(basis: Arc<MomentBasis>, values: Vec<f64>) -> Result<Self> {
        if values.len() != basis.len() {
            return Err(LsippError::DimensionMismatch {
                expected: basis.len(),
                found: values.len(),
            });
        }
        Ok(MomentVector { basis, values })
    }

    pub fn zeros(basis: Arc<MomentBasis>) -> Self {
        let n = basis.len();
        MomentVector {
            basis,
            values: vec![0.0; n],
        }
    }

    pub fn basis(&self) -> &MomentBasis {
        &self.basis
    }

    pub fn order(&self) -> u32 {
        self.basis.order()
    }

    pub fn nvars(&self) -> usize {
        self.basis.nvars()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, e: &ExponentVec) -> Option<f64> {
        self.basis.index_of(e).map(|i| self.values[i])
    }

    /// `self + w * other` (same basis).
    pub fn add_scaled(&mut self, w: f64, other: &MomentVector) {
        assert_eq!(self.values.len(), other.values.len());
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += w * b;
        }
    }

    /// Restriction to moments of degree `<= order`.
    pub fn truncate(&self, order: u32) -> MomentVector {
        let b = Arc::new(MomentBasis::new(self.nvars(), order.min(self.order())));
        let len = b.len();
        MomentVector {
            basis: b,
            values: self.values[..len].to_vec(),
        }
    }
}

/// `ζ_v`: the moments of the Dirac measure at `v` up to degree `order`.
pub fn zeta_vector(v: &[f64], order: u32) -> MomentVector {
    let b = Arc::new(MomentBasis::new(v.len(), order));
    zeta_in_basis(v, b)
}

pub fn zeta_in_basis(v: &[f64], basis: Arc<MomentBasis>) -> MomentVector {
    let values = basis.monomials().iter().map(|e| e.eval(v)).collect();
    MomentVector { basis, values }
}

/// The Riesz functional `L_z(q) = Σ q_α z_α`.
pub fn riesz(z: &MomentVector, q: &Polynomial) -> Result<f64> {
    if q.nvars() != z.nvars() {
        return Err(LsippError::DimensionMismatch {
            expected: z.nvars(),
            found: q.nvars(),
        });
    }
    if q.degree() > z.order() {
        return Err(LsippError::InsufficientOrder {
            have: z.order(),
            need: q.degree(),
        });
    }
    Ok(q.terms()
        .map(|(e, c)| c * z.get(e).expect("degree checked"))
        .sum())
}

/// Symbolic structure of a localizing matrix `M_{k-d_g}(g z)`.
///
/// Cell `(a, b)` with `a <= b` reads `Σ_γ g_γ z_{α_a + α_b + γ}`, stored as
/// indices into the order-`2k` basis.
#[derive(Clone, Debug)]
pub struct LocalizerStructure {
    generator: Polynomial,
    half_degree: u32,
    block_order: u32,
    size: usize,
    // upper triangle, row-major
    cells: Vec<Vec<(usize, f64)>>,
}

impl LocalizerStructure {
    /// Structure of `M_{k - d_g}(g z)` where `z` lives on `moments` (order >= 2k).
    pub fn new(g: &Polynomial, k: u32, moments: &MomentBasis) -> Result<Self> {
        if g.nvars() != moments.nvars() {
            return Err(LsippError::DimensionMismatch {
                expected: moments.nvars(),
                found: g.nvars(),
            });
        }
        let dg = g.half_degree();
        if k < dg {
            return Err(LsippError::OrderTooSmall { k, min: dg });
        }
        if moments.order() < 2 * k {
            return Err(LsippError::InsufficientOrder {
                have: moments.order(),
                need: 2 * k,
            });
        }
        let block_order = k - dg;
        let rows = MomentBasis::new(g.nvars(), block_order);
        let size = rows.len();
        let mut cells = Vec::with_capacity(size * (size + 1) / 2);
        for a in 0..size {
            for b in a..size {
                let ab = rows.get(a).add(rows.get(b));
                let cell: Vec<(usize, f64)> = g
                    .terms()
                    .map(|(gamma, c)| {
                        let idx = moments
                            .index_of(&ab.add(gamma))
                            .expect("degree bounded by 2k");
                        (idx, c)
                    })
                    .collect();
                cells.push(cell);
            }
        }
        Ok(LocalizerStructure {
            generator: g.clone(),
            half_degree: dg,
            block_order,
            size,
            cells,
        })
    }

    pub fn generator(&self) -> &Polynomial {
        &self.generator
    }

    pub fn half_degree(&self) -> u32 {
        self.half_degree
    }

    pub fn block_order(&self) -> u32 {
        self.block_order
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Entry map of cell `(a, b)`; symmetric by construction.
    pub fn cell(&self, a: usize, b: usize) -> &[(usize, f64)] {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        &self.cells[self.cell_index(a, b)]
    }

    fn cell_index(&self, a: usize, b: usize) -> usize {
        // row a starts after Σ_{r<a} (n - r) packed cells
        a * self.size - a * a.saturating_sub(1) / 2 + (b - a)
    }

    /// Iterates `(a, b, entry_map)` over the upper triangle.
    pub fn upper_cells(&self) -> impl Iterator<Item = (usize, usize, &[(usize, f64)])> {
        let n = self.size;
        (0..n)
            .flat_map(move |a| (a..n).map(move |b| (a, b)))
            .zip(self.cells.iter())
            .map(|((a, b), c)| (a, b, c.as_slice()))
    }

    /// Gathers the numeric matrix for a concrete moment vector.
    pub fn assemble(&self, z: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.size, self.size);
        for (a, b, cell) in self.upper_cells() {
            let v: f64 = cell.iter().map(|&(i, c)| c * z[i]).sum();
            m[(a, b)] = v;
            m[(b, a)] = v;
        }
        m
    }

    /// Sparse coefficient matrices `C_α`: for every moment index `α`, the
    /// upper-triangle triplets `(row, col, value)` such that
    /// `M(z) = Σ_α z_α C_α`.
    pub fn coefficient_matrices(&self) -> HashMap<usize, Vec<(usize, usize, f64)>> {
        let mut out: HashMap<usize, Vec<(usize, usize, f64)>> = HashMap::new();
        for (a, b, cell) in self.upper_cells() {
            for &(idx, c) in cell {
                let list = out.entry(idx).or_default();
                if let Some(last) = list.last_mut() {
                    if last.0 == a && last.1 == b {
                        last.2 += c;
                        continue;
                    }
                }
                list.push((a, b, c));
            }
        }
        out
    }
}

fn check_order(z: &MomentVector, need: u32) -> Result<()> {
    if z.order() < need {
        return Err(LsippError::InsufficientOrder {
            have: z.order(),
            need,
        });
    }
    Ok(())
}

/// `M_k(z)` with entries `z_{α+β}`.
pub fn moment_matrix(z: &MomentVector, k: u32) -> Result<DMatrix<f64>> {
    check_order(z, 2 * k)?;
    let rows = MomentBasis::new(z.nvars(), k);
    let n = rows.len();
    let mut m = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let v = z
                .get(&rows.get(a).add(rows.get(b)))
                .expect("order checked");
            m[(a, b)] = v;
            m[(b, a)] = v;
        }
    }
    Ok(m)
}

/// `M_{k-d_g}(g z)`.
pub fn localizing_matrix(z: &MomentVector, g: &Polynomial, k: u32) -> Result<DMatrix<f64>> {
    check_order(z, 2 * k)?;
    let s = LocalizerStructure::new(g, k, z.basis())?;
    Ok(s.assemble(z.values()))
}
