//! Seeded random LSIPP instances on the box `[-2, 2]^n`.
//!
//! Each instance has `m` distinct integer nodes `v^(i)`, product-form
//! Lagrange interpolants `a_i` at those nodes, `b = ‖N m_t(Y)‖² + 1` and
//! `c ∈ (0, 1)^m`. The box is given as `2n` linear generators followed by
//! the redundant ball `4n - ‖Y‖² >= 0`.
//!
//! Randomness comes from ChaCha8 seeded with `seed`, one stream per
//! ingredient: stream 0 for the nodes, 1 for the interpolation indices,
//! 2 for `N` and 3 for `c`. Changing how one ingredient is drawn leaves the
//! others unchanged.

use rand::distributions::{Distribution, Open01};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LsippError, Result};
use crate::moment::MomentBasis;
use crate::polyring::Polynomial;
use crate::relax::LsippProblem;

/// Attempts allowed when sampling a node that differs from the previous ones.
pub const MAX_POINT_ATTEMPTS: usize = 10_000;

const STREAM_POINTS: u64 = 0;
const STREAM_INDICES: u64 = 1;
const STREAM_N: u64 = 2;
const STREAM_C: u64 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenSpec {
    pub m: usize,
    pub n: usize,
    pub t: u32,
    pub seed: u64,
}

impl GenSpec {
    pub fn new(m: usize, n: usize, t: u32, seed: u64) -> Result<Self> {
        let spec = GenSpec { m, n, t, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(LsippError::Generation(format!("m must be at least 2, got {}", self.m)));
        }
        if self.n == 0 || self.t == 0 {
            return Err(LsippError::Generation("n and t must be positive".into()));
        }
        // {-2..2}^n has 5^n points.
        let capacity = 5f64.powi(self.n.min(64) as i32);
        if (self.m as f64) > capacity {
            return Err(LsippError::Generation(format!(
                "cannot pick {} distinct points from {{-2..2}}^{}",
                self.m, self.n
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedInstance {
    pub spec: GenSpec,
    pub problem: LsippProblem,
    /// Interpolation nodes `v^(1), .., v^(m)`.
    pub points: Vec<Vec<f64>>,
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn sample_points(spec: &GenSpec) -> Result<Vec<Vec<i32>>> {
    let mut r = rng(spec.seed, STREAM_POINTS);
    let mut points: Vec<Vec<i32>> = Vec::with_capacity(spec.m);
    let mut attempts = 0;
    while points.len() < spec.m {
        if attempts == MAX_POINT_ATTEMPTS {
            return Err(LsippError::Generation(format!(
                "found only {} distinct points after {MAX_POINT_ATTEMPTS} attempts",
                points.len()
            )));
        }
        attempts += 1;
        let v: Vec<i32> = (0..spec.n).map(|_| r.gen_range(-2..=2)).collect();
        if !points.contains(&v) {
            points.push(v);
        }
    }
    Ok(points)
}

/// `a_i = Π_{j≠i} (Y_k - v^(j)_k) / (v^(i)_k - v^(j)_k)` with `k = k_ij`
/// drawn uniformly among coordinates where the two nodes differ.
fn lagrange(points: &[Vec<i32>], n: usize, r: &mut ChaCha8Rng) -> Result<Vec<Polynomial>> {
    let mut out = Vec::with_capacity(points.len());
    for (i, vi) in points.iter().enumerate() {
        let mut a = Polynomial::constant(n, 1.0);
        for (j, vj) in points.iter().enumerate() {
            if i == j {
                continue;
            }
            let valid: Vec<usize> = (0..n).filter(|&k| vi[k] != vj[k]).collect();
            let k = valid[r.gen_range(0..valid.len())];
            let denom = f64::from(vi[k] - vj[k]);
            let factor = Polynomial::var(n, k)
                .sub(&Polynomial::constant(n, f64::from(vj[k])))?
                .scale(1.0 / denom);
            a = a.mul(&factor)?;
        }
        out.push(a);
    }
    Ok(out)
}

/// `b = Σ_r (Σ_s N_rs m_s(Y))² + 1` over the monomials of degree `<= t`.
fn sos_plus_one(n: usize, t: u32, r: &mut ChaCha8Rng) -> Result<Polynomial> {
    let basis = MomentBasis::new(n, t);
    let s = basis.len();
    let mut b = Polynomial::constant(n, 1.0);
    for _ in 0..s {
        let mut row = Polynomial::zero(n);
        for e in basis.monomials() {
            let w: f64 = Open01.sample(r);
            row = row.add(&Polynomial::monomial(n, e.clone(), w))?;
        }
        b = b.add(&row.mul(&row)?)?;
    }
    Ok(b)
}

fn box_generators(n: usize) -> Result<Vec<Polynomial>> {
    let two = Polynomial::constant(n, 2.0);
    let mut gens = Vec::with_capacity(2 * n + 1);
    for k in 0..n {
        let y = Polynomial::var(n, k);
        gens.push(two.sub(&y)?);
        gens.push(two.add(&y)?);
    }
    gens.push(Polynomial::constant(n, 4.0 * n as f64).sub(&Polynomial::squared_norm(n))?);
    Ok(gens)
}

pub fn generate(spec: &GenSpec) -> Result<GeneratedInstance> {
    spec.validate()?;
    let n = spec.n;
    let points = sample_points(spec)?;
    let a = lagrange(&points, n, &mut rng(spec.seed, STREAM_INDICES))?;
    let b = sos_plus_one(n, spec.t, &mut rng(spec.seed, STREAM_N))?;
    let mut rc = rng(spec.seed, STREAM_C);
    let c: Vec<f64> = (0..spec.m).map(|_| Open01.sample(&mut rc)).collect();
    let problem = LsippProblem::new(c, a, b, box_generators(n)?)?.compact(true);
    Ok(GeneratedInstance {
        spec: *spec,
        problem,
        points: points
            .into_iter()
            .map(|v| v.into_iter().map(f64::from).collect())
            .collect(),
    })
}

/// Lower bounds `x_i >= -b(v^(i)) - 1` valid for every feasible `x`.
pub fn bound_check(inst: &GeneratedInstance) -> Result<Vec<f64>> {
    inst.points
        .iter()
        .map(|v| Ok(-inst.problem.b.evaluate(v)? - 1.0))
        .collect()
}
