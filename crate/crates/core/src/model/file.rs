//! Plain-text model files.
//!
//! ```text
//! # two modes coupled through a common reservoir
//! [system]
//! n_modes = 2
//!
//! [detunings]
//! 1 -1
//!
//! [decoherence]
//! 1 0.8
//! 0.8 1
//! ```
//!
//! Sections `[coherent]`, `[squeezing]` and `[decoherence]` hold one matrix
//! row per line; entries are complex numbers written `a+bi`, `a-bi`, `a` or
//! `bi`. Missing sections default to zero. Numbers are written back with the
//! shortest representation that parses to the same `f64`, so a
//! parse/serialize/parse cycle is bit-exact.

use std::fmt::Write as _;

use super::QuadraticSystem;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, C64};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    System,
    Detunings,
    Coherent,
    Squeezing,
    Decoherence,
}

impl Section {
    fn name(self) -> &'static str {
        match self {
            Section::System => "system",
            Section::Detunings => "detunings",
            Section::Coherent => "coherent",
            Section::Squeezing => "squeezing",
            Section::Decoherence => "decoherence",
        }
    }
}

fn syntax(line: usize, msg: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        msg: msg.into(),
    }
}

fn parse_real(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| syntax(line, format!("non-numeric entry `{tok}`")))?;
    if !v.is_finite() {
        return Err(syntax(line, format!("non-finite entry `{tok}`")));
    }
    Ok(v)
}

/// Parses `a+bi`, `a-bi`, `a`, `bi`, `-i`, …
pub fn parse_complex(tok: &str) -> Option<C64> {
    let tok = tok.trim();
    if tok.is_empty() {
        return None;
    }
    let finite = |v: f64| v.is_finite().then_some(v);
    let Some(body) = tok.strip_suffix('i') else {
        return finite(tok.parse().ok()?).map(|re| c(re, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let imag = |s: &str| -> Option<f64> {
        match s {
            "" | "+" => Some(1.0),
            "-" => Some(-1.0),
            _ => finite(s.parse().ok()?),
        }
    };
    match split {
        Some(k) => Some(c(finite(body[..k].parse().ok()?)?, imag(&body[k..])?)),
        None => Some(c(0.0, imag(body)?)),
    }
}

/// Writes `re±|im|i` with shortest round-trip formatting of both parts.
pub fn format_complex(z: C64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{}{}{}i", z.re, sign, z.im.abs())
}

pub fn parse_model(text: &str) -> Result<QuadraticSystem> {
    let mut section: Option<Section> = None;
    let mut n_modes: Option<(usize, usize)> = None;
    let mut detunings: Vec<(f64, usize)> = Vec::new();
    let mut rows: [Vec<(Vec<C64>, usize)>; 3] = Default::default();
    let mut seen: Vec<Section> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| syntax(line_no, "unterminated section header"))?
                .trim();
            let s = match name {
                "system" => Section::System,
                "detunings" => Section::Detunings,
                "coherent" => Section::Coherent,
                "squeezing" => Section::Squeezing,
                "decoherence" => Section::Decoherence,
                other => return Err(syntax(line_no, format!("unknown section `[{other}]`"))),
            };
            if seen.contains(&s) {
                return Err(syntax(line_no, format!("duplicate section `[{name}]`")));
            }
            seen.push(s);
            section = Some(s);
            continue;
        }
        match section {
            None => return Err(syntax(line_no, "content before the first section header")),
            Some(Section::System) => {
                let (key, value) = line
                    .split_once('=')
                    .ok_or_else(|| syntax(line_no, "expected `key = value`"))?;
                match key.trim() {
                    "n_modes" => {
                        let v = value.trim();
                        let n: usize = v
                            .parse()
                            .map_err(|_| syntax(line_no, format!("n_modes must be a positive integer, got `{v}`")))?;
                        if n == 0 {
                            return Err(syntax(line_no, "n_modes must be positive"));
                        }
                        n_modes = Some((n, line_no));
                    }
                    other => return Err(syntax(line_no, format!("unknown key `{other}` in [system]"))),
                }
            }
            Some(Section::Detunings) => {
                for tok in line.split_whitespace() {
                    detunings.push((parse_real(tok, line_no)?, line_no));
                }
            }
            Some(s) => {
                let row = line
                    .split_whitespace()
                    .map(|tok| {
                        parse_complex(tok).ok_or_else(|| syntax(line_no, format!("non-numeric entry `{tok}`")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let slot = match s {
                    Section::Coherent => 0,
                    Section::Squeezing => 1,
                    _ => 2,
                };
                rows[slot].push((row, line_no));
            }
        }
    }

    let (n, _) = n_modes.ok_or_else(|| syntax(0, "missing `n_modes` in [system]"))?;
    let det = if seen.contains(&Section::Detunings) {
        if detunings.len() != n {
            let line = detunings.last().map_or(0, |d| d.1);
            return Err(Error::Dimension(format!(
                "[detunings] near line {line}: {} values for {n} modes",
                detunings.len()
            )));
        }
        detunings.into_iter().map(|d| d.0).collect()
    } else {
        vec![0.0; n]
    };

    let sections = [Section::Coherent, Section::Squeezing, Section::Decoherence];
    let mut mats: Vec<CMatrix> = Vec::with_capacity(3);
    for (slot, s) in sections.iter().enumerate() {
        let r = &rows[slot];
        if r.is_empty() {
            mats.push(linalg::zeros(n, n));
            continue;
        }
        if r.len() != n {
            return Err(Error::Dimension(format!(
                "[{}] has {} rows, expected {n} (last row at line {})",
                s.name(),
                r.len(),
                r.last().map_or(0, |x| x.1)
            )));
        }
        if let Some((row, line)) = r.iter().find(|(row, _)| row.len() != n) {
            return Err(Error::Dimension(format!(
                "[{}] line {line}: row has {} entries, expected {n}",
                s.name(),
                row.len()
            )));
        }
        let plain: Vec<Vec<C64>> = r.iter().map(|(row, _)| row.clone()).collect();
        mats.push(linalg::from_rows(&plain)?);
    }
    let dec = mats.pop().expect("three matrices");
    let sq = mats.pop().expect("three matrices");
    let coh = mats.pop().expect("three matrices");
    QuadraticSystem::new(det, coh, sq, dec)
}

pub fn serialize_model(sys: &QuadraticSystem) -> String {
    let mut out = String::new();
    let n = sys.n_modes();
    writeln!(out, "[system]\nn_modes = {n}\n").unwrap();
    let det: Vec<String> = sys.detunings().iter().map(|d| d.to_string()).collect();
    writeln!(out, "[detunings]\n{}\n", det.join(" ")).unwrap();
    for (name, m) in [
        ("coherent", sys.coherent_coupling()),
        ("squeezing", sys.squeezing_coupling()),
        ("decoherence", sys.decoherence()),
    ] {
        writeln!(out, "[{name}]").unwrap();
        for i in 0..n {
            let row: Vec<String> = (0..n).map(|j| format_complex(m[(i, j)])).collect();
            writeln!(out, "{}", row.join(" ")).unwrap();
        }
        out.push('\n');
    }
    out
}
