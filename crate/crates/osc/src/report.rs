//! Self-describing JSON reports. Keys are emitted in sorted order and no
//! clock or host information is recorded, so equal inputs give equal bytes.

use nalgebra::{DMatrix, DVector};
use osc_core::lattice::LatticeSpec;
use osc_core::quotient::ClosedGeodesicCertificate;
use osc_core::{AlgebraVector, ExactElement, FloatElement, FrequencyList, Rational};
use serde_json::{json, Map, Value};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub command: String,
    pub seed: u64,
    pub exact: bool,
    pub float_tolerance: f64,
    pub inputs: Map<String, Value>,
    pub verdicts: Vec<Value>,
    pub certificates: Vec<Value>,
    pub tables: Vec<Value>,
    pub diagnostics: Vec<Value>,
    /// Set when an internal check failed; the report is still written.
    pub verification_failed: bool,
}

impl Report {
    pub fn new(command: &str, seed: u64, exact: bool, float_tolerance: f64) -> Self {
        Self {
            command: command.to_string(),
            seed,
            exact,
            float_tolerance,
            inputs: Map::new(),
            verdicts: Vec::new(),
            certificates: Vec::new(),
            tables: Vec::new(),
            diagnostics: Vec::new(),
            verification_failed: false,
        }
    }

    pub fn input(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.inputs.insert(key.to_string(), value.into());
        self
    }

    /// Records a verdict together with the arithmetic it was computed in.
    pub fn verdict(&mut self, name: &str, exact: bool, mut body: Value) -> &mut Self {
        if let Value::Object(map) = &mut body {
            map.insert("name".into(), name.into());
            map.insert("exact".into(), exact.into());
        }
        self.verdicts.push(body);
        self
    }

    pub fn diagnostic(&mut self, message: impl Into<String>) -> &mut Self {
        self.diagnostics.push(Value::String(message.into()));
        self
    }

    pub fn to_value(&self) -> Value {
        json!({
            "schema_version": SCHEMA_VERSION,
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "seed": self.seed,
            "exact": self.exact,
            "float_tolerance": self.float_tolerance,
            "inputs": self.inputs,
            "verdicts": self.verdicts,
            "certificates": self.certificates,
            "tables": self.tables,
            "diagnostics": self.diagnostics,
            "status": if self.verification_failed { "verification_failed" } else { "ok" },
        })
    }

    pub fn render(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_value()).unwrap_or_default();
        s.push('\n');
        s
    }
}

pub fn rational_json(q: &Rational) -> Value {
    Value::String(q.to_string())
}

pub fn freqs_json(freqs: &FrequencyList) -> Value {
    Value::Array(freqs.lambdas().iter().map(rational_json).collect())
}

pub fn exact_element_json(g: &ExactElement) -> Value {
    json!({
        "z": g.z.to_string(),
        "v": g.v.iter().map(rational_json).collect::<Vec<_>>(),
        "t": g.t.to_string(),
    })
}

pub fn float_element_json(g: &FloatElement) -> Value {
    json!({ "z": clean(g.z), "v": g.v.iter().map(|x| clean(*x)).collect::<Vec<_>>(), "t": clean(g.t) })
}

pub fn exact_vector_json(x: &AlgebraVector<Rational>) -> Value {
    Value::Array(x.coords().iter().map(rational_json).collect())
}

pub fn float_vector_json(x: &AlgebraVector<f64>) -> Value {
    Value::Array(x.coords().iter().map(|c| clean(*c)).collect())
}

pub fn matrix_json(m: &DMatrix<f64>) -> Value {
    Value::Array((0..m.nrows()).map(|i| Value::Array((0..m.ncols()).map(|j| clean(m[(i, j)])).collect())).collect())
}

pub fn dvector_json(v: &DVector<f64>) -> Value {
    Value::Array(v.iter().map(|x| clean(*x)).collect())
}

/// JSON number for a float, mapping `-0.0` to `0` and non-finite values to strings.
pub fn clean(x: f64) -> Value {
    if x.is_finite() {
        json!(x + 0.0)
    } else {
        Value::String(x.to_string())
    }
}

pub fn lattice_json(spec: &LatticeSpec) -> Value {
    json!({ "compact": spec.to_string(), "label": spec.label(), "freqs": freqs_json(&spec.freqs) })
}

pub fn certificate_json(cert: &ClosedGeodesicCertificate, verified: bool) -> Value {
    json!({
        "initial": float_vector_json(&cert.initial),
        "initial_exact": cert.initial_exact.as_ref().map(exact_vector_json),
        "s_star": clean(cert.s_star),
        "s_star_exact": cert.s_star_exact.as_ref().map(|s| s.to_string()),
        "lattice_point": exact_element_json(&cert.lattice_point),
        "causal": format!("{:?}", cert.causal),
        "deviation": clean(cert.deviation),
        "exact_hit": cert.exact_hit,
        "verified": verified,
    })
}
