//! Problem files.
//!
//! ```json
//! {
//!   "kind": "lsipp",
//!   "nvars": 2,
//!   "m": 2,
//!   "c": [0, 1],
//!   "a": ["Y1", "1"],
//!   "b": "-Y2",
//!   "generators": ["(Y1 + 5*Y2)*Y1^2 - (Y1^2 + Y2^2)^2"],
//!   "flags": { "compact": true }
//! }
//! ```
//!
//! A polynomial is either a string in `Y1..Yn` or a list of terms
//! `{"exp": [..], "coef": 1.5}`. Scalars may be numbers or strings such as
//! `"1/3"`. Popt files use `"objective"` in place of `m`, `c`, `a` and `b`.

use lsipp_core::polyring::parse_scalar;
use lsipp_core::popt::PoptProblem;
use lsipp_core::{ExponentVec, LsippProblem, Polynomial};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    #[default]
    Lsipp,
    Popt,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Homogenize {
    #[default]
    Auto,
    On,
    Off,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Number(f64),
    Text(String),
}

impl Scalar {
    pub fn value(&self) -> anyhow::Result<f64> {
        match self {
            Scalar::Number(v) => Ok(*v),
            Scalar::Text(s) => Ok(parse_scalar(s)?),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub exp: Vec<u32>,
    pub coef: Scalar,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolyText {
    Text(String),
    Terms(Vec<Term>),
}

impl PolyText {
    pub fn to_polynomial(&self, nvars: usize) -> anyhow::Result<Polynomial> {
        match self {
            PolyText::Text(s) => Ok(Polynomial::parse(s, nvars)?),
            PolyText::Terms(terms) => {
                let mut out = Vec::with_capacity(terms.len());
                for t in terms {
                    out.push((ExponentVec(t.exp.clone()), t.coef.value()?));
                }
                Ok(Polynomial::from_terms(nvars, out)?)
            }
        }
    }

    /// Term-list form, exact under a JSON round trip.
    pub fn from_polynomial(p: &Polynomial) -> Self {
        PolyText::Terms(
            p.terms()
                .map(|(e, c)| Term {
                    exp: e.0.clone(),
                    coef: Scalar::Number(c),
                })
                .collect(),
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Flags {
    #[serde(default)]
    pub compact: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ball: Option<f64>,
    #[serde(default)]
    pub homogenize: Homogenize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default)]
    pub kind: Kind,
    pub nvars: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<Scalar>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<PolyText>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<PolyText>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<PolyText>,
    #[serde(default)]
    pub generators: Vec<PolyText>,
    #[serde(default)]
    pub flags: Flags,
}

/// A parsed problem together with its flags.
#[derive(Clone, Debug)]
pub enum Problem {
    Lsipp(LsippProblem),
    Popt(PoptProblem),
}

impl Problem {
    pub fn nvars(&self) -> usize {
        match self {
            Problem::Lsipp(p) => p.nvars,
            Problem::Popt(p) => p.nvars(),
        }
    }

    pub fn compact(&self) -> bool {
        match self {
            Problem::Lsipp(p) => p.index_set_compact,
            Problem::Popt(p) => p.compact,
        }
    }
}

/// Parses JSON text, reporting the path of the offending field on error.
pub fn parse_problem_file(text: &str) -> anyhow::Result<ProblemFile> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        anyhow::anyhow!("malformed problem file at `{path}`: {}", e.into_inner())
    })
}

fn at<T>(what: &str, r: anyhow::Result<T>) -> anyhow::Result<T> {
    r.map_err(|e| anyhow::anyhow!("{what}: {e}"))
}

impl ProblemFile {
    pub fn to_problem(&self) -> anyhow::Result<Problem> {
        let n = self.nvars;
        anyhow::ensure!(n > 0, "nvars: must be positive");
        if let Some(r) = self.flags.ball {
            anyhow::ensure!(r > 0.0 && r.is_finite(), "flags.ball: must be positive, got {r}");
        }
        let mut gens = Vec::with_capacity(self.generators.len());
        for (j, g) in self.generators.iter().enumerate() {
            gens.push(at(&format!("generators[{j}]"), g.to_polynomial(n))?);
        }
        match self.kind {
            Kind::Lsipp => {
                anyhow::ensure!(self.objective.is_none(), "objective: not allowed for kind lsipp");
                let (Some(c), Some(a), Some(b)) = (&self.c, &self.a, &self.b) else {
                    anyhow::bail!("kind lsipp needs `c`, `a` and `b`");
                };
                let mut cv = Vec::with_capacity(c.len());
                for (i, s) in c.iter().enumerate() {
                    cv.push(at(&format!("c[{i}]"), s.value())?);
                }
                let mut av = Vec::with_capacity(a.len());
                for (i, p) in a.iter().enumerate() {
                    av.push(at(&format!("a[{i}]"), p.to_polynomial(n))?);
                }
                let bv = at("b", b.to_polynomial(n))?;
                if let Some(m) = self.m {
                    anyhow::ensure!(m == cv.len(), "m: {m} does not match len(c) = {}", cv.len());
                }
                anyhow::ensure!(av.len() == cv.len(), "a: expected {} entries, found {}", cv.len(), av.len());
                let mut p = LsippProblem::new(cv, av, bv, gens)?.compact(self.flags.compact);
                if let Some(r) = self.flags.ball {
                    p = p.with_ball(r)?;
                }
                Ok(Problem::Lsipp(p))
            }
            Kind::Popt => {
                anyhow::ensure!(
                    self.c.is_none() && self.a.is_none() && self.b.is_none() && self.m.is_none(),
                    "kind popt takes `objective` instead of `m`, `c`, `a`, `b`"
                );
                let Some(f) = &self.objective else {
                    anyhow::bail!("kind popt needs `objective`");
                };
                let f = at("objective", f.to_polynomial(n))?;
                let mut p = PoptProblem::new(f, gens)?;
                p.compact = self.flags.compact;
                p.ball = self.flags.ball;
                Ok(Problem::Popt(p))
            }
        }
    }

    pub fn from_lsipp(p: &LsippProblem) -> Self {
        ProblemFile {
            kind: Kind::Lsipp,
            nvars: p.nvars,
            m: Some(p.m()),
            c: Some(p.c.iter().map(|&v| Scalar::Number(v)).collect()),
            a: Some(p.a.iter().map(PolyText::from_polynomial).collect()),
            b: Some(PolyText::from_polynomial(&p.b)),
            objective: None,
            generators: p.gens.iter().map(PolyText::from_polynomial).collect(),
            flags: Flags {
                compact: p.index_set_compact,
                ball: p.archimedean_bound,
                homogenize: Homogenize::Auto,
            },
        }
    }
}
