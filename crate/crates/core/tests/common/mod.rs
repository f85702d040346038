#![allow(dead_code)]

use lsipp_core::popt::PoptProblem;
use lsipp_core::{LsippProblem, Polynomial};

pub fn poly(s: &str, n: usize) -> Polynomial {
    Polynomial::parse(s, n).unwrap()
}

/// Polynomial lower-bounding LSIP on `[0, 1]` with seven coefficients.
pub fn ex37() -> LsippProblem {
    let c = (1..=7).map(|i| 1.0 / i as f64).collect();
    let a = (0..7)
        .map(|i| if i == 0 { poly("1", 1) } else { poly(&format!("Y1^{i}"), 1) })
        .collect();
    let b = poly("1 + Y1^2 + Y1^4 + Y1^6 + Y1^8", 1);
    LsippProblem::new(c, a, b, vec![poly("Y1", 1), poly("1 - Y1", 1)])
        .unwrap()
        .compact(true)
}

/// Lowest line above `(Y1 + 5 Y2) Y1² >= (Y1² + Y2²)²`.
pub fn ex38() -> LsippProblem {
    LsippProblem::new(
        vec![0.0, 1.0],
        vec![poly("Y1", 2), poly("1", 2)],
        poly("-Y2", 2),
        vec![poly("(Y1 + 5*Y2)*Y1^2 - (Y1^2 + Y2^2)^2", 2)],
    )
    .unwrap()
    .compact(true)
}

pub fn ex38_tangent_points() -> [[f64; 2]; 2] {
    let s3 = 3f64.sqrt();
    [
        [(625.0 - 1875.0 * s3) / 2704.0, (3375.0 - 375.0 * s3) / 2704.0],
        [(625.0 + 1875.0 * s3) / 2704.0, (3375.0 + 375.0 * s3) / 2704.0],
    ]
}

/// Cusp region `Y1 >= 0, Y1² >= Y2³`, unbounded.
pub fn ex34() -> LsippProblem {
    LsippProblem::new(
        vec![-0.5],
        vec![poly("1 - 3*Y2", 2)],
        poly("3*Y1", 2),
        vec![poly("Y1", 2), poly("Y1^2 - Y2^3", 2)],
    )
    .unwrap()
}

/// `Y1² + Y2²` over an unbounded region, with parameter `M = 1`.
pub fn ex46() -> PoptProblem {
    PoptProblem::new(
        poly("Y1^2 + Y2^2", 2),
        vec![
            poly("Y2^2 - 1", 2),
            poly("Y1^2 - Y1*Y2 - 1", 2),
            poly("Y1^2 + Y1*Y2 - 1", 2),
        ],
    )
    .unwrap()
}

pub fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

/// Every expected point has some found point within `tol`.
pub fn covers(found: &[Vec<f64>], expected: &[Vec<f64>], tol: f64) -> bool {
    expected.iter().all(|e| found.iter().any(|f| close(f, e, tol)))
}
