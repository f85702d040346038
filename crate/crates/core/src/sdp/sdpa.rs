//! Sparse SDPA (`.dat-s`) export and import.
//!
//! SDPA's primal is `min Σ c_i x_i  s.t.  Σ_i F_i x_i - F_0 ⪰ 0`, so an
//! [`SdpProblem`] maps to it with `x = z`, `c = f`, `F_i = B_{j,i}` and
//! `F_0 = -B_{j,0}`, one SDPA block per PSD block. The constant `f0` of the
//! objective has no SDPA field; it is recorded in a comment line.
//!
//! Equality rows `Σ E_ri z_i = e_r` are written as one trailing diagonal
//! (LP) block of size `2 * rows`, entries `2r+1` and `2r+2` holding
//! `E_r z - e_r >= 0` and `-(E_r z - e_r) >= 0`. A comment names this
//! block so that [`read_sdpa`] can restore the rows exactly.
//!
//! Indices in the file are 1-based and only the upper triangle is listed.
//! Metadata comment lines start with `* lsipp`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{EqConstraint, PsdBlock, SdpProblem};
use crate::error::{LsippError, Result};

pub fn write_sdpa(prob: &SdpProblem) -> String {
    let mut out = String::new();
    let me = prob.equalities.len();
    let nblocks = prob.blocks.len() + usize::from(me > 0);
    let _ = writeln!(out, "\"lsipp moment relaxation: minimize c^T x, F_1 x_1 + .. + F_m x_m - F_0 PSD\"");
    let _ = writeln!(out, "* lsipp objective_constant {:e}", prob.objective_constant);
    for (j, b) in prob.blocks.iter().enumerate() {
        let _ = writeln!(out, "* lsipp block {} {}", j + 1, b.label);
    }
    if me > 0 {
        let _ = writeln!(out, "* lsipp equality_block {}", prob.blocks.len() + 1);
        for (r, e) in prob.equalities.iter().enumerate() {
            let _ = writeln!(out, "* lsipp eq {} {}", r + 1, e.label);
        }
    }
    let _ = writeln!(out, "{}", prob.nfree);
    let _ = writeln!(out, "{nblocks}");
    let mut sizes: Vec<String> = prob.blocks.iter().map(|b| b.size.to_string()).collect();
    if me > 0 {
        sizes.push(format!("-{}", 2 * me));
    }
    let _ = writeln!(out, "{}", sizes.join(" "));
    let c: Vec<String> = prob.objective.iter().map(|v| format!("{v:e}")).collect();
    let _ = writeln!(out, "{}", c.join(" "));
    for (j, b) in prob.blocks.iter().enumerate() {
        for &(r, cc, v) in &b.constant {
            let _ = writeln!(out, "0 {} {} {} {:e}", j + 1, r + 1, cc + 1, -v);
        }
        for (i, trips) in &b.coeffs {
            for &(r, cc, v) in trips {
                let _ = writeln!(out, "{} {} {} {} {:e}", i + 1, j + 1, r + 1, cc + 1, v);
            }
        }
    }
    if me > 0 {
        let blk = prob.blocks.len() + 1;
        // group by variable so that matno is nondecreasing
        let mut by_var: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
        for (r, e) in prob.equalities.iter().enumerate() {
            let pos = 2 * r + 1;
            let _ = writeln!(out, "0 {blk} {pos} {pos} {:e}", e.rhs);
            let _ = writeln!(out, "0 {blk} {} {} {:e}", pos + 1, pos + 1, -e.rhs);
            for &(i, c) in &e.coeffs {
                by_var.entry(i).or_default().push((r, c));
            }
        }
        for (i, rows) in by_var {
            for (r, c) in rows {
                let pos = 2 * r + 1;
                let _ = writeln!(out, "{} {blk} {pos} {pos} {c:e}", i + 1);
                let _ = writeln!(out, "{} {blk} {} {} {:e}", i + 1, pos + 1, pos + 1, -c);
            }
        }
    }
    out
}

pub fn read_sdpa(text: &str) -> Result<SdpProblem> {
    let mut f0 = 0.0;
    let mut eq_block: Option<usize> = None;
    let mut block_labels: BTreeMap<usize, String> = BTreeMap::new();
    let mut eq_labels: BTreeMap<usize, String> = BTreeMap::new();
    let mut tokens: Vec<String> = Vec::new();
    for line in text.lines() {
        let t = line.trim();
        if let Some(rest) = t.strip_prefix("* lsipp ") {
            let mut parts = rest.splitn(3, ' ');
            let key = parts.next().unwrap_or("");
            let a = parts.next().unwrap_or("");
            let b = parts.next().unwrap_or("").to_string();
            match key {
                "objective_constant" => f0 = parse_num(a)?,
                "equality_block" => eq_block = Some(parse_idx(a)?),
                "block" => {
                    block_labels.insert(parse_idx(a)?, b);
                }
                "eq" => {
                    eq_labels.insert(parse_idx(a)?, b);
                }
                _ => {}
            }
            continue;
        }
        if t.is_empty() || t.starts_with('"') || t.starts_with('*') {
            continue;
        }
        let cleaned: String = t
            .chars()
            .map(|c| if "{}(),".contains(c) { ' ' } else { c })
            .collect();
        tokens.extend(cleaned.split_whitespace().map(str::to_string));
    }
    let mut tok = tokens.into_iter();
    let mut next = |what: &str| {
        tok.next()
            .ok_or_else(|| LsippError::Parse(format!("sdpa: missing {what}")))
    };
    let m = parse_idx(&next("mDIM")?)?;
    let nblock = parse_idx(&next("nBLOCK")?)?;
    let mut sizes = Vec::with_capacity(nblock);
    for _ in 0..nblock {
        let v: i64 = next("block size")?
            .parse()
            .map_err(|_| LsippError::Parse("sdpa: bad block size".into()))?;
        sizes.push(v);
    }
    let mut c = Vec::with_capacity(m);
    for _ in 0..m {
        c.push(parse_num(&next("objective")?)?);
    }

    // (block, matno) -> triplets in file order
    let mut entries: BTreeMap<(usize, usize), Vec<(usize, usize, f64)>> = BTreeMap::new();
    while let Some(matno) = tok_next_opt(&mut next)? {
        let matno = parse_idx(&matno)?;
        let blk = parse_idx(&next("block")?)?;
        let i = parse_idx(&next("row")?)?;
        let j = parse_idx(&next("col")?)?;
        let v = parse_num(&next("value")?)?;
        if blk == 0 || blk > nblock || i == 0 || j == 0 || matno > m {
            return Err(LsippError::Parse(format!(
                "sdpa: entry out of range ({matno} {blk} {i} {j})"
            )));
        }
        let (r, cc) = if i <= j { (i - 1, j - 1) } else { (j - 1, i - 1) };
        entries.entry((blk, matno)).or_default().push((r, cc, v));
    }

    let mut prob = SdpProblem::new(m);
    prob.objective = c;
    prob.objective_constant = f0;
    for (bi, &size) in sizes.iter().enumerate() {
        let blk = bi + 1;
        if Some(blk) == eq_block {
            let rows = size.unsigned_abs() as usize / 2;
            let mut eqs: Vec<EqConstraint> = (0..rows)
                .map(|r| EqConstraint {
                    coeffs: Vec::new(),
                    rhs: 0.0,
                    label: eq_labels.get(&(r + 1)).cloned().unwrap_or_default(),
                })
                .collect();
            for ((b, matno), trips) in entries.range((blk, 0)..=(blk, m)) {
                debug_assert_eq!(*b, blk);
                for &(r, _, v) in trips {
                    if r % 2 == 1 {
                        continue;
                    }
                    let row = &mut eqs[r / 2];
                    if *matno == 0 {
                        row.rhs = v;
                    } else {
                        row.coeffs.push((matno - 1, v));
                    }
                }
            }
            prob.equalities = eqs;
        } else if size > 0 {
            let mut b = PsdBlock::new(size as usize, block_labels.get(&blk).cloned().unwrap_or_default());
            for ((_, matno), trips) in entries.range((blk, 0)..=(blk, m)) {
                if *matno == 0 {
                    b.constant = trips.iter().map(|&(r, cc, v)| (r, cc, -v)).collect();
                } else {
                    b.coeffs.push((matno - 1, trips.clone()));
                }
            }
            prob.blocks.push(b);
        } else {
            // plain LP block: one 1x1 PSD block per diagonal entry
            let n = size.unsigned_abs() as usize;
            let mut singles: Vec<PsdBlock> = (0..n)
                .map(|d| PsdBlock::new(1, format!("lp{blk}_{}", d + 1)))
                .collect();
            for ((_, matno), trips) in entries.range((blk, 0)..=(blk, m)) {
                for &(r, _, v) in trips {
                    if *matno == 0 {
                        singles[r].constant.push((0, 0, -v));
                    } else {
                        singles[r].coeffs.push((matno - 1, vec![(0, 0, v)]));
                    }
                }
            }
            prob.blocks.extend(singles);
        }
    }
    prob.validate()?;
    Ok(prob)
}

fn tok_next_opt<F>(next: &mut F) -> Result<Option<String>>
where
    F: FnMut(&str) -> Result<String>,
{
    match next("matno") {
        Ok(t) => Ok(Some(t)),
        Err(_) => Ok(None),
    }
}

fn parse_idx(s: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| LsippError::Parse(format!("sdpa: expected index, found `{s}`")))
}

fn parse_num(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| LsippError::Parse(format!("sdpa: expected number, found `{s}`")))
}
