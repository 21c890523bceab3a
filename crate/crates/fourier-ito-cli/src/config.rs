//! JSON run configuration for the `qwiener` subcommand.
//!
//! ```json
//! {
//!   "kind": "I3", "q": 2, "dt": 0.25, "seed": 7,
//!   "spectrum": { "lambdas": [1.0, 0.25], "trace": 1.6449 },
//!   "operator": { "arity": 4, "dim": 3, "data": [ ... ] }
//! }
//! ```
//!
//! `spectrum` may instead be `{ "scale": 1.0, "nu": 2.0, "modes": 4 }`.
//! Operator data is laid out with the first mode index slowest and the range
//! component fastest, so it holds `M^arity * dim` numbers. Every field is
//! optional; command-line flags fill the gaps.

use std::path::Path;

use fourier_ito::qwiener::{CompositeKind, MultilinearOperator, QWienerSpec};
use fourier_ito::Error;
use serde_json::Value;

#[derive(Clone, Debug)]
pub struct QWienerConfig {
    pub kind: Option<CompositeKind>,
    pub q: Option<usize>,
    pub dt: Option<f64>,
    pub seed: Option<u64>,
    pub spectrum: Option<QWienerSpec>,
    pub operator: Option<MultilinearOperator>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidInput(format!("config: {}", msg.into()))
}

fn field_f64(v: &Value, name: &str) -> Result<Option<f64>, Error> {
    match v.get(name) {
        None | Some(Value::Null) => Ok(None),
        Some(x) => x.as_f64().map(Some).ok_or_else(|| bad(format!("`{name}` must be a number"))),
    }
}

fn field_u64(v: &Value, name: &str) -> Result<Option<u64>, Error> {
    match v.get(name) {
        None | Some(Value::Null) => Ok(None),
        Some(x) => x.as_u64().map(Some).ok_or_else(|| bad(format!("`{name}` must be a nonnegative integer"))),
    }
}

fn numbers(v: &Value, name: &str) -> Result<Vec<f64>, Error> {
    v.get(name)
        .and_then(Value::as_array)
        .ok_or_else(|| bad(format!("`{name}` must be an array of numbers")))?
        .iter()
        .map(|x| x.as_f64().ok_or_else(|| bad(format!("`{name}` must be an array of numbers"))))
        .collect()
}

fn spectrum(v: &Value) -> Result<QWienerSpec, Error> {
    if v.get("lambdas").is_some() {
        let lambdas = numbers(v, "lambdas")?;
        let trace = field_f64(v, "trace")?.unwrap_or_else(|| lambdas.iter().sum());
        QWienerSpec::explicit(lambdas, trace)
    } else {
        let nu = field_f64(v, "nu")?.ok_or_else(|| bad("spectrum needs `lambdas` or `nu`"))?;
        let m = field_u64(v, "modes")?.ok_or_else(|| bad("spectrum needs `modes`"))?;
        QWienerSpec::power_law(field_f64(v, "scale")?.unwrap_or(1.0), nu, m as usize)
    }
}

impl QWienerConfig {
    pub fn parse(text: &str) -> Result<Self, Error> {
        let v: Value = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        if !v.is_object() {
            return Err(bad("top level must be an object"));
        }
        let kind = match v.get("kind") {
            None | Some(Value::Null) => None,
            Some(k) => Some(
                k.as_str()
                    .ok_or_else(|| bad("`kind` must be a string"))?
                    .parse::<CompositeKind>()
                    .map_err(|e| bad(e.to_string()))?,
            ),
        };
        let spectrum = v.get("spectrum").map(spectrum).transpose()?;
        let operator = match v.get("operator") {
            None | Some(Value::Null) => None,
            Some(o) => {
                let m = spectrum.as_ref().map(|s| s.m()).ok_or_else(|| bad("`operator` requires `spectrum`"))?;
                let arity = field_u64(o, "arity")?.ok_or_else(|| bad("operator needs `arity`"))? as usize;
                let dim = field_u64(o, "dim")?.ok_or_else(|| bad("operator needs `dim`"))? as usize;
                Some(MultilinearOperator::from_data(arity, dim, m, numbers(o, "data")?)?)
            }
        };
        Ok(QWienerConfig {
            kind,
            q: field_u64(&v, "q")?.map(|q| q as usize),
            dt: field_f64(&v, "dt")?,
            seed: field_u64(&v, "seed")?,
            spectrum,
            operator,
        })
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}
