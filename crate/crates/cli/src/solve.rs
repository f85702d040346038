use lsipp_core::popt::{self, PoptResult, ATOM_V0_TOL, DEFAULT_WITNESS_SAMPLES};
use lsipp_core::relax::{build_moment, build_moment_h, homogenize_problem, solve_relaxation};
use lsipp_core::{HierarchyOptions, OrderResult};

use crate::problem::{Homogenize, Kind, Problem};
use crate::report::{OrderRow, Path, ResultRecord, Summary, Tolerances, Versions};

/// Orders tried above the minimum when `k_max` is not given.
pub const DEFAULT_EXTRA_ORDERS: u32 = 2;

/// Largest dimension for which the sphere-sampling witness is run.
pub const WITNESS_MAX_NVARS: usize = 4;

#[derive(Clone, Debug)]
pub struct SolveConfig {
    pub k_min: Option<u32>,
    pub k_max: Option<u32>,
    pub homogenize: Homogenize,
    pub opts: HierarchyOptions,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            k_min: None,
            k_max: None,
            homogenize: Homogenize::Auto,
            opts: HierarchyOptions::default(),
        }
    }
}

pub fn choose_path(prob: &Problem, h: Homogenize) -> Path {
    match h {
        Homogenize::On => Path::Homogenized,
        Homogenize::Off => Path::Compact,
        Homogenize::Auto if prob.compact() => Path::Compact,
        Homogenize::Auto => Path::Homogenized,
    }
}

fn row(o: &OrderResult, value: f64, sos_value: f64) -> OrderRow {
    let cert = o.certificate.as_ref();
    OrderRow {
        k: o.k,
        value: Some(value),
        sos_value: Some(sos_value),
        status: format!("{:?}", o.status),
        iterations: o.iterations,
        solve_ms: o.solve_time.as_secs_f64() * 1e3,
        certified: o.certified(),
        flat_t: cert.and_then(|c| c.flat_t),
        ranks: cert.map(|c| c.ranks.clone()).unwrap_or_default(),
        residuals: Some(o.residuals),
        x: Some(o.x.clone()),
        certificate: o.certificate.clone(),
        error: None,
    }
}

fn popt_row(r: &PoptResult) -> OrderRow {
    let mut out = row(&r.order, r.f_mom, r.f_sos);
    out.x = None;
    out
}

/// Runs the hierarchy, recording a failed order as an `Error` row and
/// continuing with the next one.
pub fn solve_problem(prob: &Problem, cfg: &SolveConfig) -> anyhow::Result<ResultRecord> {
    let path = choose_path(prob, cfg.homogenize);
    let opts = &cfg.opts;
    let d_p = match (prob, path) {
        (Problem::Lsipp(p), Path::Compact) => p.min_order(),
        (Problem::Lsipp(p), Path::Homogenized) => homogenize_problem(p)?.min_order(),
        (Problem::Popt(p), _) => {
            let (c, h) = popt::min_orders(p)?;
            if path == Path::Compact {
                c
            } else {
                h
            }
        }
    };
    let k_min = cfg.k_min.unwrap_or(d_p);
    anyhow::ensure!(k_min >= d_p, "--kmin {k_min} is below the minimum order {d_p}");
    let k_max = cfg.k_max.unwrap_or(k_min + DEFAULT_EXTRA_ORDERS);
    anyhow::ensure!(k_max >= k_min, "--kmax {k_max} is below the first order {k_min}");

    let hprob = match (prob, path) {
        (Problem::Lsipp(p), Path::Homogenized) => Some(homogenize_problem(p)?),
        _ => None,
    };

    let mut rows = Vec::new();
    let mut minimizers = None;
    let mut note = None;
    for k in k_min..=k_max {
        let r = match prob {
            Problem::Lsipp(p) => {
                let rel = match &hprob {
                    Some(h) => build_moment_h(h, k),
                    None => build_moment(p, k),
                };
                rel.and_then(|rel| solve_relaxation(&rel, opts))
                    .map(|o| row(&o, o.value, o.sos_value))
            }
            Problem::Popt(p) => {
                let res = match path {
                    Path::Compact => popt::solve_compact(p, k, opts),
                    Path::Homogenized => popt::solve_noncompact(p, k, opts),
                };
                res.map(|r| {
                    if r.certified() {
                        minimizers = Some(r.minimizers.clone());
                        note = r.note.clone();
                    }
                    popt_row(&r)
                })
            }
        };
        let r = r.unwrap_or_else(|e| {
            log::warn!("order {k}: {e}");
            OrderRow::failed(k, e.to_string())
        });
        let stop = opts.certify && r.certified;
        rows.push(r);
        if stop {
            break;
        }
    }

    let best = rows
        .iter()
        .find(|r| r.certified)
        .or_else(|| rows.iter().rev().find(|r| r.optimal()));
    let atoms = best
        .and_then(|r| r.certificate.as_ref())
        .filter(|c| c.certified)
        .map(|c| c.atoms.clone())
        .unwrap_or_default();
    let points = if path == Path::Homogenized {
        atoms
            .iter()
            .filter(|a| a.point[0] > ATOM_V0_TOL)
            .map(|a| a.point[1..].iter().map(|v| v / a.point[0]).collect())
            .collect()
    } else {
        atoms.iter().map(|a| a.point.clone()).collect()
    };
    let witness = match prob {
        Problem::Popt(p) if path == Path::Homogenized && p.nvars() <= WITNESS_MAX_NVARS => Some(
            popt::check_stable_boundedness_witness(p, DEFAULT_WITNESS_SAMPLES, opts.cert.seed)?,
        ),
        _ => None,
    };
    let kind = match prob {
        Problem::Lsipp(_) => Kind::Lsipp,
        Problem::Popt(_) => Kind::Popt,
    };
    let summary = Summary {
        best_value: best.and_then(|r| r.value),
        best_k: best.map(|r| r.k),
        certified: best.is_some_and(|r| r.certified),
        atoms,
        points,
        x: best.and_then(|r| r.x.clone()),
        minimizers: if kind == Kind::Popt {
            Some(minimizers.unwrap_or_default())
        } else {
            None
        },
        note,
        witness,
        tolerances: Tolerances {
            solver: opts.solver,
            cert: opts.cert,
        },
        versions: Versions {
            lsipp: env!("CARGO_PKG_VERSION").to_string(),
        },
        seed: opts.cert.seed,
    };
    Ok(ResultRecord {
        kind,
        path,
        k_min,
        k_max,
        rows,
        summary,
    })
}
