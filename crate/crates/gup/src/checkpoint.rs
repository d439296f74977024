//! `GUP1` model checkpoints.
//!
//! ```text
//! GUP1
//! theta_lambda <float>
//! theta_eta <float>
//! provider <id>
//! transform <rows> <cols>
//! <cols floats per row, rows lines>
//! ```
//!
//! A model without a transform is written as `transform 0 0`. Floats use the
//! shortest representation that parses back to the same value.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use gup_core::features::{FeatureProvider, LinearTransform};
use gup_core::train::ModelParams;

use crate::FormatError;

const MAGIC: &str = "GUP1";

pub fn encode_model(model: &ModelParams) -> String {
    let mut out = String::new();
    writeln!(out, "{MAGIC}").unwrap();
    writeln!(out, "theta_lambda {}", model.theta_lambda).unwrap();
    writeln!(out, "theta_eta {}", model.theta_eta).unwrap();
    writeln!(out, "provider {}", model.provider).unwrap();
    match &model.transform {
        None => writeln!(out, "transform 0 0").unwrap(),
        Some(t) => {
            writeln!(out, "transform {} {}", t.inputs(), t.outputs()).unwrap();
            for row in t.data().chunks(t.outputs()) {
                let cells: Vec<String> = row.iter().map(f64::to_string).collect();
                writeln!(out, "{}", cells.join(" ")).unwrap();
            }
        }
    }
    out
}

fn field<'a>(line: Option<&'a str>, key: &str) -> Result<&'a str, FormatError> {
    let line = line.ok_or_else(|| FormatError::Header(format!("missing {key} line")))?;
    line.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix(' '))
        .ok_or_else(|| FormatError::Header(format!("expected {key:?}, found {line:?}")))
}

fn float(tok: &str) -> Result<f64, FormatError> {
    let v: f64 = tok.trim().parse().map_err(|_| FormatError::Payload(format!("bad number {tok:?}")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(FormatError::NonFinite)
    }
}

pub fn decode_model(text: &str) -> Result<ModelParams, FormatError> {
    let mut lines = text.lines();
    if lines.next().map(str::trim_end) != Some(MAGIC) {
        return Err(FormatError::Unsupported("not a GUP1 checkpoint".into()));
    }
    let theta_lambda = float(field(lines.next(), "theta_lambda")?)?;
    let theta_eta = float(field(lines.next(), "theta_eta")?)?;
    let provider: FeatureProvider =
        field(lines.next(), "provider")?.parse().map_err(|e| FormatError::Header(format!("{e}")))?;
    let dims = field(lines.next(), "transform")?;
    let (rows, cols) = dims
        .split_once(' ')
        .and_then(|(r, c)| Some((r.parse::<usize>().ok()?, c.trim().parse::<usize>().ok()?)))
        .ok_or_else(|| FormatError::Header(format!("bad transform dims {dims:?}")))?;
    let transform = if rows == 0 && cols == 0 {
        None
    } else {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let line = lines.next().ok_or_else(|| FormatError::Payload(format!("missing transform row {r}")))?;
            let row = line.split_ascii_whitespace().map(float).collect::<Result<Vec<_>, _>>()?;
            if row.len() != cols {
                return Err(FormatError::Payload(format!("transform row {r} has {} values, expected {cols}", row.len())));
            }
            data.extend(row);
        }
        Some(LinearTransform::new(rows, cols, data)?)
    };
    if let Some(extra) = lines.find(|l| !l.trim().is_empty()) {
        return Err(FormatError::Payload(format!("trailing content {extra:?}")));
    }
    Ok(ModelParams { theta_lambda, theta_eta, provider, transform })
}

pub fn save_model(model: &ModelParams, path: impl AsRef<Path>) -> Result<(), FormatError> {
    fs::write(path, encode_model(model))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelParams, FormatError> {
    decode_model(&fs::read_to_string(path)?)
}
