//! Reader for the subset of the MATPOWER `.m` case format needed by
//! distribution feeders: `mpc.baseMVA`, `mpc.bus` and `mpc.branch`.
//!
//! Anything else in the file (the `function` header, `mpc.version`, other
//! matrix blocks such as `mpc.gen`) is skipped. Inside the two required
//! matrices only numeric literals are accepted; rows are separated by `;`
//! or a line break and `%` starts a comment.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::CaseError;

/// Bus row, columns taken by MATPOWER position (1-based): 1 id, 2 type,
/// 3 Pd, 4 Qd, 10 baseKV, 12 Vmax, 13 Vmin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusRow {
    pub id: u32,
    pub kind: u8,
    pub pd: f64,
    pub qd: f64,
    pub base_kv: f64,
    pub vmax: f64,
    pub vmin: f64,
}

/// Branch row: 1 from, 2 to, 3 r, 4 x, 11 status.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchRow {
    pub from: u32,
    pub to: u32,
    pub r: f64,
    pub x: f64,
    pub status: f64,
}

impl BranchRow {
    pub fn in_service(&self) -> bool {
        self.status != 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawCase {
    pub base_mva: f64,
    pub buses: Vec<BusRow>,
    pub branches: Vec<BranchRow>,
}

const BUS_COLS: usize = 13;
const BRANCH_COLS: usize = 11;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Block {
    Bus,
    Branch,
    Ignored,
}

fn strip_comment(line: &str) -> &str {
    match line.find('%') {
        Some(pos) => &line[..pos],
        None => line,
    }
}

fn parse_number(tok: &str, line: usize) -> Result<f64, CaseError> {
    let v: f64 = tok.parse().map_err(|_| CaseError::Parse {
        line,
        msg: format!("not a numeric literal: `{tok}`"),
    })?;
    if !v.is_finite() {
        return Err(CaseError::Parse {
            line,
            msg: format!("non-finite value `{tok}`"),
        });
    }
    Ok(v)
}

fn as_id(v: f64, line: usize, what: &str) -> Result<u32, CaseError> {
    if v < 1.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
        return Err(CaseError::Parse {
            line,
            msg: format!("{what} must be a positive integer, got {v}"),
        });
    }
    Ok(v as u32)
}

/// Parses the text of a MATPOWER case file.
pub fn parse_matpower_case(text: &str) -> Result<RawCase, CaseError> {
    let mut base_mva: Option<f64> = None;
    let mut buses: Option<Vec<BusRow>> = None;
    let mut branches: Option<Vec<BranchRow>> = None;
    let mut current: Option<(Block, usize)> = None;
    let mut bus_rows: Vec<BusRow> = Vec::new();
    let mut branch_rows: Vec<BranchRow> = Vec::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let mut line = strip_comment(raw_line).trim();

        if current.is_none() {
            if line.is_empty() {
                continue;
            }
            let Some(rest) = line.strip_prefix("mpc.") else {
                continue;
            };
            let Some((name, rhs)) = rest.split_once('=') else {
                continue;
            };
            let name = name.trim();
            let rhs = rhs.trim();
            if name == "baseMVA" {
                let value = rhs.trim_end_matches(';').trim();
                base_mva = Some(parse_number(value, line_no)?);
                continue;
            }
            let Some(body) = rhs.strip_prefix('[') else {
                continue;
            };
            let block = match name {
                "bus" => Block::Bus,
                "branch" => Block::Branch,
                _ => Block::Ignored,
            };
            if block == Block::Bus && buses.is_some() || block == Block::Branch && branches.is_some() {
                return Err(CaseError::Parse {
                    line: line_no,
                    msg: format!("duplicate `mpc.{name}` block"),
                });
            }
            current = Some((block, line_no));
            line = body;
        }

        let (block, _) = current.expect("inside a block");
        let (content, closes) = match line.find(']') {
            Some(pos) => {
                let tail = line[pos + 1..].trim();
                if !tail.is_empty() && tail != ";" {
                    return Err(CaseError::Parse {
                        line: line_no,
                        msg: format!("unexpected text after `]`: `{tail}`"),
                    });
                }
                (&line[..pos], true)
            }
            None => (line, false),
        };

        if block != Block::Ignored {
            for row in content.split(';') {
                let toks: Vec<&str> = row
                    .split(|c: char| c.is_whitespace() || c == ',')
                    .filter(|t| !t.is_empty())
                    .collect();
                if toks.is_empty() {
                    continue;
                }
                let vals = toks
                    .iter()
                    .map(|t| parse_number(t, line_no))
                    .collect::<Result<Vec<_>, _>>()?;
                match block {
                    Block::Bus => {
                        if vals.len() < BUS_COLS {
                            return Err(CaseError::Parse {
                                line: line_no,
                                msg: format!("bus row has {} columns, need {BUS_COLS}", vals.len()),
                            });
                        }
                        let kind = vals[1];
                        if !(1.0..=4.0).contains(&kind) || kind.fract() != 0.0 {
                            return Err(CaseError::Parse {
                                line: line_no,
                                msg: format!("invalid bus type {kind}"),
                            });
                        }
                        bus_rows.push(BusRow {
                            id: as_id(vals[0], line_no, "bus id")?,
                            kind: kind as u8,
                            pd: vals[2],
                            qd: vals[3],
                            base_kv: vals[9],
                            vmax: vals[11],
                            vmin: vals[12],
                        });
                    }
                    Block::Branch => {
                        if vals.len() < BRANCH_COLS {
                            return Err(CaseError::Parse {
                                line: line_no,
                                msg: format!(
                                    "branch row has {} columns, need {BRANCH_COLS}",
                                    vals.len()
                                ),
                            });
                        }
                        branch_rows.push(BranchRow {
                            from: as_id(vals[0], line_no, "from bus")?,
                            to: as_id(vals[1], line_no, "to bus")?,
                            r: vals[2],
                            x: vals[3],
                            status: vals[10],
                        });
                    }
                    Block::Ignored => unreachable!(),
                }
            }
        }

        if closes {
            match block {
                Block::Bus => buses = Some(std::mem::take(&mut bus_rows)),
                Block::Branch => branches = Some(std::mem::take(&mut branch_rows)),
                Block::Ignored => {}
            }
            current = None;
        }
    }

    if let Some((_, opened)) = current {
        return Err(CaseError::Parse {
            line: opened,
            msg: "matrix block is never closed with `]`".into(),
        });
    }
    let base_mva = base_mva.ok_or_else(|| CaseError::Structure("missing `mpc.baseMVA`".into()))?;
    let buses = buses.ok_or_else(|| CaseError::Structure("missing `mpc.bus` block".into()))?;
    let branches =
        branches.ok_or_else(|| CaseError::Structure("missing `mpc.branch` block".into()))?;

    let raw = RawCase {
        base_mva,
        buses,
        branches,
    };
    raw.validate()?;
    Ok(raw)
}

impl RawCase {
    /// Structural checks: positive base, unique bus ids, declared endpoints.
    pub fn validate(&self) -> Result<(), CaseError> {
        if !(self.base_mva > 0.0) {
            return Err(CaseError::Structure(format!(
                "baseMVA must be positive, got {}",
                self.base_mva
            )));
        }
        if self.buses.is_empty() {
            return Err(CaseError::Structure("case has no buses".into()));
        }
        let mut seen = HashSet::new();
        for b in &self.buses {
            if !seen.insert(b.id) {
                return Err(CaseError::Structure(format!("duplicate bus id {}", b.id)));
            }
        }
        for br in &self.branches {
            for end in [br.from, br.to] {
                if !seen.contains(&end) {
                    return Err(CaseError::Structure(format!(
                        "branch {}-{} references undeclared bus {end}",
                        br.from, br.to
                    )));
                }
            }
        }
        Ok(())
    }

    /// Writes the case back out in the same subset format. Columns that the
    /// reader ignores are emitted as zeros.
    pub fn to_matpower(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "function mpc = case_export");
        let _ = writeln!(out, "mpc.version = '2';");
        let _ = writeln!(out, "mpc.baseMVA = {};", fmt_num(self.base_mva));
        let _ = writeln!(out, "mpc.bus = [");
        for b in &self.buses {
            let _ = writeln!(
                out,
                "\t{}\t{}\t{}\t{}\t0\t0\t1\t1\t0\t{}\t1\t{}\t{};",
                b.id,
                b.kind,
                fmt_num(b.pd),
                fmt_num(b.qd),
                fmt_num(b.base_kv),
                fmt_num(b.vmax),
                fmt_num(b.vmin)
            );
        }
        let _ = writeln!(out, "];");
        let _ = writeln!(out, "mpc.branch = [");
        for br in &self.branches {
            let _ = writeln!(
                out,
                "\t{}\t{}\t{}\t{}\t0\t0\t0\t0\t0\t0\t{}\t-360\t360;",
                br.from,
                br.to,
                fmt_num(br.r),
                fmt_num(br.x),
                fmt_num(br.status)
            );
        }
        let _ = writeln!(out, "];");
        out
    }
}

// `{:?}` on f64 is the shortest string that parses back to the same bits.
fn fmt_num(v: f64) -> String {
    format!("{v:?}")
}
