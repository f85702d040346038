//! Fixtures shared by the benchmarks in `benches/`.

use lsipp_core::{LsippProblem, Polynomial};

fn poly(s: &str, n: usize) -> Polynomial {
    Polynomial::parse(s, n).expect("valid fixture")
}

/// Seven-term polynomial LSIP on `[0, 1]`.
pub fn interval_problem() -> LsippProblem {
    let c = (1..=7).map(|i| 1.0 / i as f64).collect();
    let a = (0..7).map(|i| poly(&format!("Y1^{i}"), 1)).collect();
    let b = poly("1 + Y1^2 + Y1^4 + Y1^6 + Y1^8", 1);
    LsippProblem::new(c, a, b, vec![poly("Y1", 1), poly("1 - Y1", 1)])
        .expect("valid fixture")
        .compact(true)
}

/// Lowest line above a quartic curve in the plane.
pub fn tangent_line_problem() -> LsippProblem {
    LsippProblem::new(
        vec![0.0, 1.0],
        vec![poly("Y1", 2), poly("1", 2)],
        poly("-Y2", 2),
        vec![poly("(Y1 + 5*Y2)*Y1^2 - (Y1^2 + Y2^2)^2", 2)],
    )
    .expect("valid fixture")
    .compact(true)
}

/// Unbounded cusp index set.
pub fn cusp_problem() -> LsippProblem {
    LsippProblem::new(
        vec![-0.5],
        vec![poly("1 - 3*Y2", 2)],
        poly("3*Y1", 2),
        vec![poly("Y1", 2), poly("Y1^2 - Y2^3", 2)],
    )
    .expect("valid fixture")
}
