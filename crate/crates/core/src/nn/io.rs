//! Plain-text tensor format: one line per tensor,
//! `name rows cols v0 v1 ...` with 17 significant digits per value.

use std::fmt::Write as _;

use super::{Matrix, Param};
use crate::error::{Error, Result};

pub fn format_tensor(name: &str, m: &Matrix) -> String {
    let mut line = format!("{name} {} {}", m.rows(), m.cols());
    for v in m.data() {
        write!(line, " {v:.16e}").unwrap();
    }
    line
}

pub fn parse_tensor(line: &str) -> Result<(String, Matrix)> {
    let mut parts = line.split_ascii_whitespace();
    let bad = |what: &str| Error::Parse(format!("tensor line: {what}: {:.60}", line));
    let name = parts.next().ok_or_else(|| bad("missing name"))?.to_string();
    let rows: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| bad("bad rows"))?;
    let cols: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| bad("bad cols"))?;
    let data = parts
        .map(|s| s.parse::<f64>().map_err(|_| bad("bad value")))
        .collect::<Result<Vec<_>>>()?;
    if data.len() != rows * cols {
        return Err(bad("value count does not match shape"));
    }
    Ok((name, Matrix::from_vec(rows, cols, data)?))
}

pub fn write_params<'a>(params: impl IntoIterator<Item = &'a Param>) -> String {
    let mut out = String::new();
    for p in params {
        out.push_str(&format_tensor(&p.name, &p.value));
        out.push('\n');
    }
    out
}

/// Loads values into `params` by name; every parameter must be present with
/// a matching shape.
pub fn read_params<'a>(text: &str, params: impl IntoIterator<Item = &'a mut Param>) -> Result<()> {
    let mut tensors = std::collections::HashMap::new();
    for line in text
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
    {
        let (name, m) = parse_tensor(line)?;
        tensors.insert(name, m);
    }
    for p in params {
        let m = tensors
            .remove(&p.name)
            .ok_or_else(|| Error::Parse(format!("missing tensor {}", p.name)))?;
        if m.shape() != p.value.shape() {
            return Err(Error::Shape {
                context: "loading tensor",
                left: p.value.shape(),
                right: m.shape(),
            });
        }
        p.value = m;
    }
    Ok(())
}
