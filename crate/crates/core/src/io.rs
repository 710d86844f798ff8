//! File formats.
//!
//! Matrices are JSON arrays of rows, each entry a `[re, im]` pair; a matrix
//! with an empty dimension is written as `[]`. A realization is an object
//! with integer fields `m`, `s`, `t` and matrix fields `R0`, `C`, `A`, `B`,
//! `gamma`, `alpha`, `beta`. CSV output has one line per matrix row with
//! entries formatted as `re+imj` to 17 significant digits.

use std::fmt::Write as _;

use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::factorization::FactorPair;
use crate::matcore::{CMatrix, C64};
use crate::symbol::Realization;

type RawMatrix = Vec<Vec<[f64; 2]>>;

impl Serialize for CMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_empty() {
            return serializer.serialize_seq(Some(0))?.end();
        }
        let mut seq = serializer.serialize_seq(Some(self.rows()))?;
        for i in 0..self.rows() {
            let row: Vec<[f64; 2]> = self.row(i).iter().map(|z| [z.re, z.im]).collect();
            seq.serialize_element(&row)?;
        }
        seq.end()
    }
}

/// Interprets a raw JSON matrix with the expected shape. Empty dimensions
/// accept either `[]` or a list of empty rows.
fn matrix_from_raw(field: &str, raw: &RawMatrix, rows: usize, cols: usize) -> Result<CMatrix> {
    let input_err = |message: String| Error::Input {
        field: field.to_string(),
        message,
    };
    if rows == 0 || cols == 0 {
        let ok = raw.is_empty() || (raw.len() == rows && raw.iter().all(Vec::is_empty));
        if !ok {
            return Err(input_err(format!("expected an empty {rows}x{cols} matrix")));
        }
        return Ok(CMatrix::zeros(rows, cols));
    }
    if raw.len() != rows {
        return Err(input_err(format!("expected {rows} rows, found {}", raw.len())));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for (i, row) in raw.iter().enumerate() {
        if row.len() != cols {
            return Err(input_err(format!("row {i} has {} entries, expected {cols}", row.len())));
        }
        data.extend(row.iter().map(|&[re, im]| C64::new(re, im)));
    }
    CMatrix::from_vec(rows, cols, data).map_err(|e| input_err(e.to_string()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RealizationFile {
    m: usize,
    s: usize,
    t: usize,
    #[serde(rename = "R0")]
    r0: RawMatrix,
    #[serde(rename = "C")]
    c: RawMatrix,
    #[serde(rename = "A")]
    a: RawMatrix,
    #[serde(rename = "B")]
    b: RawMatrix,
    gamma: RawMatrix,
    alpha: RawMatrix,
    beta: RawMatrix,
}

impl RealizationFile {
    fn into_realization(self) -> Result<Realization> {
        let (m, s, t) = (self.m, self.s, self.t);
        Realization::new(
            matrix_from_raw("R0", &self.r0, m, m)?,
            matrix_from_raw("C", &self.c, m, s)?,
            matrix_from_raw("A", &self.a, s, s)?,
            matrix_from_raw("B", &self.b, s, m)?,
            matrix_from_raw("gamma", &self.gamma, m, t)?,
            matrix_from_raw("alpha", &self.alpha, t, t)?,
            matrix_from_raw("beta", &self.beta, t, m)?,
        )
    }
}

/// Parses a realization document. Syntax errors carry line and column;
/// shape errors name the offending field.
pub fn realization_from_json(text: &str) -> Result<Realization> {
    let file: RealizationFile = serde_json::from_str(text).map_err(|e| Error::Input {
        field: "<document>".into(),
        message: e.to_string(),
    })?;
    file.into_realization()
}

pub fn realization_from_value(value: Value) -> Result<Realization> {
    let file: RealizationFile = serde_json::from_value(value).map_err(|e| Error::Input {
        field: "<document>".into(),
        message: e.to_string(),
    })?;
    file.into_realization()
}

pub fn realization_to_value(r: &Realization) -> Value {
    json!({
        "m": r.m(),
        "s": r.s(),
        "t": r.t(),
        "R0": r.r0(),
        "C": r.c(),
        "A": r.a(),
        "B": r.b(),
        "gamma": r.gamma(),
        "alpha": r.alpha(),
        "beta": r.beta(),
    })
}

pub fn realization_to_json(r: &Realization) -> String {
    serde_json::to_string_pretty(&realization_to_value(r)).expect("matrices serialize")
}

pub fn factor_pair_to_value(f: &FactorPair) -> Value {
    json!({
        "split": f.split.to_string(),
        "theta": realization_to_value(&f.theta),
        "psi": realization_to_value(&f.psi),
        "theta_inv": realization_to_value(&f.theta_inv),
        "psi_inv": realization_to_value(&f.psi_inv),
        "delta": &f.delta,
        "D": &f.d,
    })
}

/// Reads back the four factor realizations from a factor-pair document, in
/// the order `theta, psi, theta_inv, psi_inv`.
pub fn factor_realizations_from_json(text: &str) -> Result<[Realization; 4]> {
    let mut v: Value = serde_json::from_str(text)?;
    let mut take = |key: &str| -> Result<Realization> {
        let part = v.get_mut(key).map(Value::take).ok_or_else(|| Error::Input {
            field: key.into(),
            message: "missing".into(),
        })?;
        realization_from_value(part)
    };
    Ok([take("theta")?, take("psi")?, take("theta_inv")?, take("psi_inv")?])
}

/// Reads a JSON matrix of known shape.
pub fn matrix_from_value(field: &str, value: Value, rows: usize, cols: usize) -> Result<CMatrix> {
    let raw: RawMatrix = serde_json::from_value(value).map_err(|e| Error::Input {
        field: field.into(),
        message: e.to_string(),
    })?;
    matrix_from_raw(field, &raw, rows, cols)
}

fn fmt_entry(out: &mut String, z: C64) {
    // + 0.0 normalizes negative zero
    let re = z.re + 0.0;
    let im = z.im + 0.0;
    let _ = write!(out, "{re:.16e}{im:+.16e}j");
}

/// One line per row, comma separated `re+imj` entries.
pub fn matrix_to_csv(m: &CMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        for (j, &z) in m.row(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            fmt_entry(&mut out, z);
        }
        out.push('\n');
    }
    out
}

fn parse_entry(s: &str) -> Option<C64> {
    let body = s.trim().strip_suffix('j')?;
    // the imaginary sign is the last +/- not belonging to an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && bytes[k - 1] != b'e' && bytes[k - 1] != b'E')?;
    let re: f64 = body[..split].parse().ok()?;
    let im: f64 = body[split..].parse().ok()?;
    Some(C64::new(re, im))
}

pub fn matrix_from_csv(text: &str) -> Result<CMatrix> {
    let mut rows = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|e| {
                parse_entry(e).ok_or_else(|| Error::Input {
                    field: format!("line {}", ln + 1),
                    message: format!("cannot parse entry `{e}`"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    CMatrix::from_rows(&rows)
}
