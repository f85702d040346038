//! Moment and sum-of-squares relaxations for linear semi-infinite
//! polynomial programs (LSIPP)
//!
//! ```text
//! min_x c^T x   s.t.   a(y)^T x + b(y) >= 0   for all y in S = { y : g_j(y) >= 0 }
//! ```
//!
//! The crate is layered bottom-up: [`polyring`] (sparse polynomials),
//! [`moment`] (moment and localizing matrices), [`sdp`] (an interior-point
//! SDP solver), [`relax`] (the relaxation hierarchy, including the
//! homogenized variant for unbounded `S`), [`certify`] (flat truncation and
//! atom extraction), [`popt`] (polynomial optimization as a special case)
//! and [`gen`] (seeded random instances).

pub mod certify;
pub mod error;
pub mod gen;
pub mod linalg;
pub mod moment;
pub mod polyring;
pub mod popt;
pub mod relax;
pub mod sdp;

pub use certify::{Atom, Certificate, CertifyOptions};
pub use error::{LsippError, Result};
pub use moment::{MomentBasis, MomentVector};
pub use polyring::{ExponentVec, Polynomial};
pub use relax::{HierarchyOptions, HierarchyResult, HomogenizedProblem, LsippProblem, OrderResult, RelaxationOrder};
pub use sdp::{SdpProblem, SdpSolution, SdpStatus, SolverOptions};
