//! Result records written by `solve`.

use std::collections::BTreeMap;
use std::io::Write;

use lsipp_core::certify::{Atom, Certificate, CertifyOptions};
use lsipp_core::popt::StableBoundednessReport;
use lsipp_core::sdp::Residuals;
use lsipp_core::SolverOptions;
use serde::Serialize;

/// Which hierarchy produced the rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Path {
    Compact,
    Homogenized,
}

#[derive(Clone, Debug, Serialize)]
pub struct OrderRow {
    pub k: u32,
    /// `p_mom_k` for lsipp, `f_mom_k` for popt.
    pub value: Option<f64>,
    /// `p_sos_k` for lsipp, `f_sos_k` for popt.
    pub sos_value: Option<f64>,
    /// Solver status, or `Error` when the order could not be solved.
    pub status: String,
    pub iterations: usize,
    pub solve_ms: f64,
    pub certified: bool,
    pub flat_t: Option<u32>,
    pub ranks: BTreeMap<u32, (usize, usize)>,
    pub residuals: Option<Residuals>,
    pub x: Option<Vec<f64>>,
    pub certificate: Option<Certificate>,
    pub error: Option<String>,
}

impl OrderRow {
    pub fn failed(k: u32, err: String) -> Self {
        OrderRow {
            k,
            value: None,
            sos_value: None,
            status: "Error".into(),
            iterations: 0,
            solve_ms: 0.0,
            certified: false,
            flat_t: None,
            ranks: BTreeMap::new(),
            residuals: None,
            x: None,
            certificate: None,
            error: Some(err),
        }
    }

    pub fn optimal(&self) -> bool {
        self.status == "Optimal"
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Tolerances {
    pub solver: SolverOptions,
    pub cert: CertifyOptions,
}

#[derive(Clone, Debug, Serialize)]
pub struct Versions {
    pub lsipp: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub best_value: Option<f64>,
    pub best_k: Option<u32>,
    pub certified: bool,
    pub atoms: Vec<Atom>,
    /// Atoms mapped back to the original variables (homogenized path).
    pub points: Vec<Vec<f64>>,
    pub x: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub minimizers: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<StableBoundednessReport>,
    pub tolerances: Tolerances,
    pub versions: Versions,
    /// Seed of the atom extraction.
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResultRecord {
    pub kind: crate::problem::Kind,
    pub path: Path,
    pub k_min: u32,
    pub k_max: u32,
    pub rows: Vec<OrderRow>,
    #[serde(rename = "final")]
    pub summary: Summary,
}

impl ResultRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes") + "\n"
    }

    /// One line per order.
    pub fn write_csv<W: Write>(&self, w: W) -> anyhow::Result<()> {
        #[derive(Serialize)]
        struct CsvRow<'a> {
            k: u32,
            value: Option<f64>,
            sos_value: Option<f64>,
            status: &'a str,
            iterations: usize,
            solve_ms: f64,
            certified: bool,
            flat_t: Option<u32>,
            rank: Option<usize>,
            atoms: usize,
        }
        let mut out = csv::Writer::from_writer(w);
        for r in &self.rows {
            out.serialize(CsvRow {
                k: r.k,
                value: r.value,
                sos_value: r.sos_value,
                status: &r.status,
                iterations: r.iterations,
                solve_ms: r.solve_ms,
                certified: r.certified,
                flat_t: r.flat_t,
                rank: r.flat_t.and_then(|t| r.ranks.get(&t)).map(|p| p.1),
                atoms: r.certificate.as_ref().map_or(0, |c| c.atoms.len()),
            })?;
        }
        out.flush()?;
        Ok(())
    }

    /// Human-readable table for the terminal.
    pub fn table(&self) -> String {
        let mut s = format!("{:>3}  {:>16}  {:>16}  {:<17} {:>5}  {:>9}  cert\n", "k", "value", "sos", "status", "iter", "ms");
        for r in &self.rows {
            let f = |v: Option<f64>| v.map_or("-".into(), |v| format!("{v:.8}"));
            s += &format!(
                "{:>3}  {:>16}  {:>16}  {:<17} {:>5}  {:>9.1}  {}\n",
                r.k,
                f(r.value),
                f(r.sos_value),
                r.status,
                r.iterations,
                r.solve_ms,
                if r.certified { "yes" } else { "no" }
            );
        }
        s
    }
}
