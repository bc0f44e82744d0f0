//! Parsing of command-line inputs: frequency lists, lattices, group elements,
//! Lie algebra vectors, matrices and isometries, each from inline JSON, a
//! compact string or `@path`.

use std::fs;
use std::str::FromStr;

use nalgebra::DMatrix;
use osc_core::isometry::{Isometry, ThetaVariant};
use osc_core::lattice::{Dim4Angle, LatticeSpec, LineStep, DEFAULT_WORD_DEPTH};
use osc_core::scalar::parse_rational;
use osc_core::{AlgebraVector, ExactElement, ExactScalar, FloatElement, FrequencyList, GroupElement, Rational};
use serde_json::Value;

/// A rejected input, located by a pointer such as `--lattice/base/k`.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("{pointer}: {message}")]
pub struct InputError {
    pub pointer: String,
    pub message: String,
}

impl InputError {
    pub fn new(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        Self { pointer: pointer.into(), message: message.into() }
    }
}

pub type InputResult<T> = Result<T, InputError>;

fn resolve_file(src: &str, pointer: &str) -> InputResult<String> {
    match src.trim().strip_prefix('@') {
        Some(path) => fs::read_to_string(path)
            .map(|s| s.trim().to_string())
            .map_err(|e| InputError::new(pointer, format!("cannot read '{path}': {e}"))),
        None => Ok(src.trim().to_string()),
    }
}

fn parse_json(src: &str, pointer: &str) -> InputResult<Value> {
    serde_json::from_str(src).map_err(|e| InputError::new(pointer, format!("invalid JSON: {e}")))
}

fn text_of(v: &Value, pointer: &str) -> InputResult<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        other => Err(InputError::new(pointer, format!("expected a number or string, got {other}"))),
    }
}

fn exact_scalar(v: &Value, pointer: &str) -> InputResult<ExactScalar> {
    let text = text_of(v, pointer)?;
    ExactScalar::from_str(&text).map_err(|e| InputError::new(pointer, e.to_string()))
}

fn rational(v: &Value, pointer: &str) -> InputResult<Rational> {
    let text = text_of(v, pointer)?;
    parse_rational(&text).map_err(|e| InputError::new(pointer, e.to_string()))
}

fn float(v: &Value, pointer: &str) -> InputResult<f64> {
    if let Value::Number(n) = v {
        if let Some(x) = n.as_f64() {
            return Ok(x);
        }
    }
    Ok(exact_scalar(v, pointer)?.to_f64())
}

fn field<'a>(obj: &'a Value, key: &str, pointer: &str) -> InputResult<&'a Value> {
    obj.get(key).ok_or_else(|| InputError::new(pointer, format!("missing field '{key}'")))
}

fn positive_int(obj: &Value, key: &str, pointer: &str) -> InputResult<u32> {
    let v = field(obj, key, pointer)?;
    v.as_u64()
        .filter(|&k| k >= 1 && k <= u32::MAX as u64)
        .map(|k| k as u32)
        .ok_or_else(|| InputError::new(format!("{pointer}/{key}"), format!("expected a positive integer, got {v}")))
}

fn array<'a>(v: &'a Value, pointer: &str) -> InputResult<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| InputError::new(pointer, format!("expected an array, got {v}")))
}

/// A frequency list such as `[1]`, `[1, 2, "1/2"]` or `1,2`.
pub fn parse_freqs(src: &str, pointer: &str) -> InputResult<FrequencyList> {
    let text = resolve_file(src, pointer)?;
    let lambdas = if text.starts_with('[') {
        let json = parse_json(&text, pointer)?;
        array(&json, pointer)?
            .iter()
            .enumerate()
            .map(|(i, x)| rational(x, &format!("{pointer}/{i}")))
            .collect::<InputResult<Vec<_>>>()?
    } else {
        text.split(',')
            .enumerate()
            .map(|(i, x)| parse_rational(x).map_err(|e| InputError::new(format!("{pointer}/{i}"), e.to_string())))
            .collect::<InputResult<Vec<_>>>()?
    };
    FrequencyList::new(lambdas).map_err(|e| InputError::new(pointer, e.to_string()))
}

fn freqs_value(v: &Value, pointer: &str) -> InputResult<FrequencyList> {
    let lambdas = array(v, pointer)?
        .iter()
        .enumerate()
        .map(|(i, x)| rational(x, &format!("{pointer}/{i}")))
        .collect::<InputResult<Vec<_>>>()?;
    FrequencyList::new(lambdas).map_err(|e| InputError::new(pointer, e.to_string()))
}

/// A lattice from its compact form (`dim4:k=1:angle=2pi`), a JSON object or `@file`.
pub fn parse_lattice(src: &str, pointer: &str) -> InputResult<LatticeSpec> {
    let text = resolve_file(src, pointer)?;
    if text.starts_with('{') {
        lattice_value(&parse_json(&text, pointer)?, pointer)
    } else {
        LatticeSpec::from_str(&text).map_err(|e| InputError::new(pointer, e.to_string()))
    }
}

fn lattice_value(v: &Value, pointer: &str) -> InputResult<LatticeSpec> {
    if let Value::String(s) = v {
        return LatticeSpec::from_str(s).map_err(|e| InputError::new(pointer, e.to_string()));
    }
    let family = field(v, "family", pointer)?
        .as_str()
        .ok_or_else(|| InputError::new(format!("{pointer}/family"), "expected a string"))?;
    let invalid = |key: &str, e: osc_core::Error| InputError::new(format!("{pointer}/{key}"), e.to_string());
    match family {
        "dim4" => {
            let k = positive_int(v, "k", pointer)?;
            let angle = match v.get("angle") {
                None => Dim4Angle::TwoPi,
                Some(a) => Dim4Angle::from_str(&text_of(a, &format!("{pointer}/angle"))?).map_err(|e| invalid("angle", e))?,
            };
            LatticeSpec::dim4(k, angle).map_err(|e| InputError::new(pointer, e.to_string()))
        }
        "dim6" => {
            let k = positive_int(v, "k", pointer)?;
            let p = positive_int(v, "p", pointer)?;
            let q = positive_int(v, "q", pointer)?;
            let key = if v.get("M").is_some() { "M" } else { "m" };
            let m = positive_int(v, key, pointer)?;
            LatticeSpec::dim6(k, p, q, m).map_err(|e| InputError::new(pointer, e.to_string()))
        }
        "twisted" => {
            let m = exact_scalar(field(v, "m", pointer)?, &format!("{pointer}/m"))?;
            let base = lattice_value(field(v, "base", pointer)?, &format!("{pointer}/base"))?;
            LatticeSpec::twisted(base, m).map_err(|e| invalid("m", e))
        }
        "product_line" => {
            let w = if let Some(w) = v.get("w") {
                LineStep::Exact(exact_scalar(w, &format!("{pointer}/w"))?)
            } else if let Some(w2) = v.get("w2") {
                LineStep::Squared(exact_scalar(w2, &format!("{pointer}/w2"))?)
            } else if let Some(name) = v.get("w_irrational") {
                LineStep::Irrational(text_of(name, &format!("{pointer}/w_irrational"))?)
            } else {
                return Err(InputError::new(pointer, "missing one of 'w', 'w2', 'w_irrational'"));
            };
            let base = lattice_value(field(v, "base", pointer)?, &format!("{pointer}/base"))?;
            LatticeSpec::product_with_line(base, w).map_err(|e| InputError::new(pointer, e.to_string()))
        }
        "generators" => {
            let freqs = freqs_value(field(v, "freqs", pointer)?, &format!("{pointer}/freqs"))?;
            let n = freqs.n();
            let elements = array(field(v, "elements", pointer)?, &format!("{pointer}/elements"))?
                .iter()
                .enumerate()
                .map(|(i, e)| exact_element_value(e, n, &format!("{pointer}/elements/{i}")))
                .collect::<InputResult<Vec<_>>>()?;
            let depth = match v.get("depth") {
                None => DEFAULT_WORD_DEPTH,
                Some(d) => d
                    .as_u64()
                    .ok_or_else(|| InputError::new(format!("{pointer}/depth"), "expected a non-negative integer"))?
                    as usize,
            };
            LatticeSpec::generator_list(freqs, elements, depth).map_err(|e| InputError::new(pointer, e.to_string()))
        }
        other => Err(InputError::new(format!("{pointer}/family"), format!("unknown family '{other}'"))),
    }
}

fn element_parts<'a>(v: &'a Value, n: usize, pointer: &str) -> InputResult<(&'a Value, &'a Vec<Value>, &'a Value)> {
    let z = field(v, "z", pointer)?;
    let vv = array(field(v, "v", pointer)?, &format!("{pointer}/v"))?;
    let t = field(v, "t", pointer)?;
    if vv.len() != 2 * n {
        return Err(InputError::new(
            format!("{pointer}/v"),
            format!("expected {} entries, found {}", 2 * n, vv.len()),
        ));
    }
    Ok((z, vv, t))
}

fn exact_element_value(v: &Value, n: usize, pointer: &str) -> InputResult<ExactElement> {
    let (z, vv, t) = element_parts(v, n, pointer)?;
    let coords = vv
        .iter()
        .enumerate()
        .map(|(i, x)| rational(x, &format!("{pointer}/v/{i}")))
        .collect::<InputResult<Vec<_>>>()?;
    Ok(GroupElement::new(exact_scalar(z, &format!("{pointer}/z"))?, coords, exact_scalar(t, &format!("{pointer}/t"))?))
}

fn float_element_value(v: &Value, n: usize, pointer: &str) -> InputResult<FloatElement> {
    let (z, vv, t) = element_parts(v, n, pointer)?;
    let coords = vv
        .iter()
        .enumerate()
        .map(|(i, x)| float(x, &format!("{pointer}/v/{i}")))
        .collect::<InputResult<Vec<_>>>()?;
    Ok(GroupElement::new(float(z, &format!("{pointer}/z"))?, coords, float(t, &format!("{pointer}/t"))?))
}

/// A group element `{"z": "1/2", "v": [0, "1/3"], "t": "pi/2"}` with exact entries.
pub fn parse_exact_element(src: &str, n: usize, pointer: &str) -> InputResult<ExactElement> {
    let text = resolve_file(src, pointer)?;
    exact_element_value(&parse_json(&text, pointer)?, n, pointer)
}

pub fn parse_float_element(src: &str, n: usize, pointer: &str) -> InputResult<FloatElement> {
    let text = resolve_file(src, pointer)?;
    float_element_value(&parse_json(&text, pointer)?, n, pointer)
}

/// Basis index of a generator name: `Z`, `X1`, `Y1`, …, `T`.
fn basis_index(name: &str, n: usize) -> Option<usize> {
    match name {
        "Z" => Some(0),
        "T" => Some(2 * n + 1),
        _ => {
            let (head, idx) = name.split_at(1);
            let i: usize = if idx.is_empty() && n == 1 { 1 } else { idx.parse().ok()? };
            if i == 0 || i > n {
                return None;
            }
            match head {
                "X" => Some(2 * i - 1),
                "Y" => Some(2 * i),
                _ => None,
            }
        }
    }
}

/// A Lie algebra vector, either a coordinate array `[d, b1, c1, …, a]` or a
/// linear combination such as `Z - T`, `2X1 + Y1` or `1/2*Z + 3/4 T`.
pub fn parse_vector(src: &str, n: usize, pointer: &str) -> InputResult<AlgebraVector<Rational>> {
    let text = resolve_file(src, pointer)?;
    if text.starts_with('[') {
        let json = parse_json(&text, pointer)?;
        let coords = array(&json, pointer)?
            .iter()
            .enumerate()
            .map(|(i, x)| rational(x, &format!("{pointer}/{i}")))
            .collect::<InputResult<Vec<_>>>()?;
        if coords.len() != 2 * n + 2 {
            return Err(InputError::new(pointer, format!("expected {} coordinates, found {}", 2 * n + 2, coords.len())));
        }
        return AlgebraVector::from_coords(coords).map_err(|e| InputError::new(pointer, e.to_string()));
    }
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Err(InputError::new(pointer, "empty expression"));
    }
    let mut coords = vec![Rational::from_integer(0); 2 * n + 2];
    let mut terms = Vec::new();
    let mut start = 0;
    for (i, ch) in compact.char_indices() {
        if (ch == '+' || ch == '-') && i > start {
            terms.push(&compact[start..i]);
            start = i;
        }
    }
    terms.push(&compact[start..]);
    for term in terms {
        let (sign, body) = match term.strip_prefix('-') {
            Some(rest) => (Rational::from_integer(-1), rest),
            None => (Rational::from_integer(1), term.strip_prefix('+').unwrap_or(term)),
        };
        let split = body.find(|c: char| c.is_ascii_alphabetic()).ok_or_else(|| {
            InputError::new(pointer, format!("term '{term}' names no generator"))
        })?;
        let (coef_text, name) = body.split_at(split);
        let coef_text = coef_text.trim_end_matches('*');
        let coef = if coef_text.is_empty() {
            Rational::from_integer(1)
        } else {
            parse_rational(coef_text).map_err(|e| InputError::new(pointer, e.to_string()))?
        };
        let idx = basis_index(name, n)
            .ok_or_else(|| InputError::new(pointer, format!("unknown generator '{name}' for n = {n}")))?;
        coords[idx] += sign * coef;
    }
    AlgebraVector::from_coords(coords).map_err(|e| InputError::new(pointer, e.to_string()))
}

fn matrix_value(v: &Value, pointer: &str) -> InputResult<DMatrix<f64>> {
    let rows = array(v, pointer)?;
    if rows.is_empty() {
        return Err(InputError::new(pointer, "empty matrix"));
    }
    let mut data = Vec::new();
    let mut ncols = None;
    for (i, row) in rows.iter().enumerate() {
        let row = array(row, &format!("{pointer}/{i}"))?;
        if *ncols.get_or_insert(row.len()) != row.len() {
            return Err(InputError::new(format!("{pointer}/{i}"), "ragged matrix rows"));
        }
        for (j, x) in row.iter().enumerate() {
            data.push(float(x, &format!("{pointer}/{i}/{j}"))?);
        }
    }
    Ok(DMatrix::from_row_slice(rows.len(), ncols.unwrap_or(0), &data))
}

/// A dense matrix given as a JSON array of rows.
pub fn parse_matrix(src: &str, pointer: &str) -> InputResult<DMatrix<f64>> {
    let text = resolve_file(src, pointer)?;
    matrix_value(&parse_json(&text, pointer)?, pointer)
}

/// Cuts a block-diagonal orthogonal matrix into one block per run of equal
/// frequencies; entries outside the blocks must vanish.
pub fn split_blocks(b: &DMatrix<f64>, freqs: &FrequencyList, pointer: &str) -> InputResult<Vec<DMatrix<f64>>> {
    let dim = 2 * freqs.n();
    if b.nrows() != dim || b.ncols() != dim {
        return Err(InputError::new(pointer, format!("expected a {dim}x{dim} matrix, got {}x{}", b.nrows(), b.ncols())));
    }
    let runs: Vec<(usize, usize)> = freqs.runs().iter().map(|r| (2 * r.start, 2 * r.multiplicity)).collect();
    for i in 0..dim {
        for j in 0..dim {
            let same = runs.iter().any(|&(s, m)| (s..s + m).contains(&i) && (s..s + m).contains(&j));
            if !same && b[(i, j)] != 0.0 {
                return Err(InputError::new(
                    format!("{pointer}/{i}/{j}"),
                    "entry couples coordinates of different frequencies",
                ));
            }
        }
    }
    Ok(runs.iter().map(|&(s, m)| b.view((s, s), (m, m)).into_owned()).collect())
}

fn variant_value(v: Option<&Value>, pointer: &str) -> InputResult<ThetaVariant> {
    match v.map(|x| x.as_str()) {
        None => Ok(ThetaVariant::Printed),
        Some(Some(s)) => parse_variant(s).map_err(|m| InputError::new(pointer, m)),
        Some(None) => Err(InputError::new(pointer, "expected a string")),
    }
}

pub fn parse_variant(s: &str) -> Result<ThetaVariant, String> {
    match s {
        "printed" => Ok(ThetaVariant::Printed),
        "normalized" => Ok(ThetaVariant::Normalized),
        other => Err(format!("unknown variant '{other}', expected 'printed' or 'normalized'")),
    }
}

fn isometry_value(v: &Value, freqs: &FrequencyList, pointer: &str) -> InputResult<Isometry> {
    if let Value::String(s) = v {
        return match s.as_str() {
            "inversion" => Ok(Isometry::Inversion),
            other => Err(InputError::new(pointer, format!("unknown isometry '{other}'"))),
        };
    }
    let kind = field(v, "kind", pointer)?
        .as_str()
        .ok_or_else(|| InputError::new(format!("{pointer}/kind"), "expected a string"))?;
    let n = freqs.n();
    match kind {
        "inversion" => Ok(Isometry::Inversion),
        "left" => Ok(Isometry::LeftTranslation(exact_element_value(field(v, "h", pointer)?, n, &format!("{pointer}/h"))?)),
        "inner" => Ok(Isometry::Inner(exact_element_value(field(v, "h", pointer)?, n, &format!("{pointer}/h"))?)),
        "theta" => {
            let b = matrix_value(field(v, "B", pointer)?, &format!("{pointer}/B"))?;
            let blocks = split_blocks(&b, freqs, &format!("{pointer}/B"))?;
            let variant = variant_value(v.get("variant"), &format!("{pointer}/variant"))?;
            Ok(Isometry::Theta { blocks, variant })
        }
        "composite" => {
            let parts = array(field(v, "parts", pointer)?, &format!("{pointer}/parts"))?
                .iter()
                .enumerate()
                .map(|(i, p)| isometry_value(p, freqs, &format!("{pointer}/parts/{i}")))
                .collect::<InputResult<Vec<_>>>()?;
            Ok(Isometry::Composite(parts))
        }
        other => Err(InputError::new(format!("{pointer}/kind"), format!("unknown isometry kind '{other}'"))),
    }
}

/// An isometry: `"inversion"`, `{"kind": "theta", "B": [[1,0],[0,-1]]}`,
/// `{"kind": "inner", "h": {...}}`, `{"kind": "left", "h": {...}}` or
/// `{"kind": "composite", "parts": [...]}` (last part acts first).
pub fn parse_isometry(src: &str, freqs: &FrequencyList, pointer: &str) -> InputResult<Isometry> {
    let text = resolve_file(src, pointer)?;
    let value = if text.starts_with('{') || text.starts_with('"') {
        parse_json(&text, pointer)?
    } else {
        Value::String(text)
    };
    isometry_value(&value, freqs, pointer)
}

/// An inclusive range `a..b`, optionally with a step `a..b:h`.
pub fn parse_range(src: &str, pointer: &str) -> InputResult<(f64, f64, Option<f64>)> {
    let bad = || InputError::new(pointer, format!("expected a range like 1..3 or 0..5:0.5, got '{src}'"));
    let (range, step) = match src.split_once(':') {
        Some((r, h)) => (r, Some(h.trim().parse::<f64>().map_err(|_| bad())?)),
        None => (src, None),
    };
    let (a, b) = range.split_once("..").ok_or_else(bad)?;
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    if !a.is_finite() || !b.is_finite() || b < a || step.is_some_and(|h| !(h > 0.0)) {
        return Err(bad());
    }
    Ok((a, b, step))
}

/// A real number: a float literal or an exact scalar such as `pi/3`.
pub fn parse_real(src: &str, pointer: &str) -> InputResult<f64> {
    let text = src.trim();
    if let Ok(x) = text.parse::<f64>() {
        return Ok(x);
    }
    ExactScalar::from_str(text).map(|x| x.to_f64()).map_err(|e| InputError::new(pointer, e.to_string()))
}

/// A JSON array of reals.
pub fn parse_real_list(src: &str, pointer: &str) -> InputResult<Vec<f64>> {
    let text = resolve_file(src, pointer)?;
    let json = parse_json(&text, pointer)?;
    array(&json, pointer)?.iter().enumerate().map(|(i, x)| float(x, &format!("{pointer}/{i}"))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use osc_core::scalar::rat;

    #[test]
    fn expressions() {
        let x = parse_vector("Z - T", 1, "--X").unwrap();
        assert_eq!(x.coords(), &[rat(1, 1), rat(0, 1), rat(0, 1), rat(-1, 1)]);
        let y = parse_vector("2X1+Y1", 1, "--X").unwrap();
        assert_eq!(y.coords(), &[rat(0, 1), rat(2, 1), rat(1, 1), rat(0, 1)]);
        let w = parse_vector("1/2*Z + 3/4 T - Y2", 2, "--X").unwrap();
        assert_eq!(w.coords()[0], rat(1, 2));
        assert_eq!(w.coords()[4], rat(-1, 1));
        assert_eq!(w.coords()[5], rat(3, 4));
        assert!(parse_vector("X3", 2, "--X").is_err());
        assert!(parse_vector("2", 1, "--X").is_err());
    }

    #[test]
    fn lattices_from_json_and_compact() {
        let a = parse_lattice("dim4:k=1:angle=2pi", "--lattice").unwrap();
        let b = parse_lattice(r#"{"family":"dim4","k":1,"angle":"2pi"}"#, "--lattice").unwrap();
        assert_eq!(a, b);
        let t = parse_lattice(r#"{"family":"twisted","m":2,"base":{"family":"dim4","k":1}}"#, "--lattice").unwrap();
        assert_eq!(t.to_string(), "twisted:m=2:dim4:k=1:angle=2pi");
        let err = parse_lattice(r#"{"family":"dim6","k":1,"p":0,"q":1,"M":4}"#, "--lattice").unwrap_err();
        assert_eq!(err.pointer, "--lattice/p");
        let err = parse_lattice(r#"{"family":"twisted","m":1,"base":{"family":"dim4"}}"#, "--lattice").unwrap_err();
        assert_eq!(err.pointer, "--lattice/base");
    }

    #[test]
    fn elements_and_pointers() {
        let g = parse_exact_element(r#"{"z":"1/2","v":[0,"1/3"],"t":"pi/2"}"#, 1, "--element").unwrap();
        assert_eq!(g.v[1], rat(1, 3));
        assert_eq!(g.t, ExactScalar::pi_multiple(rat(1, 2)));
        let err = parse_exact_element(r#"{"z":0,"v":[0,"x"],"t":0}"#, 1, "--element").unwrap_err();
        assert_eq!(err.pointer, "--element/v/1");
        let f = parse_float_element(r#"{"z":0.25,"v":[1,2],"t":"pi"}"#, 1, "--element").unwrap();
        assert!((f.t - std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn blocks_follow_frequency_runs() {
        let freqs = FrequencyList::from_integers(&[1, 1, 2]).unwrap();
        let b = DMatrix::<f64>::identity(6, 6);
        let blocks = split_blocks(&b, &freqs, "B").unwrap();
        assert_eq!(blocks.iter().map(|m| m.nrows()).collect::<Vec<_>>(), vec![4, 2]);
        let mut bad = b.clone();
        bad[(0, 5)] = 0.5;
        assert_eq!(split_blocks(&bad, &freqs, "B").unwrap_err().pointer, "B/0/5");
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("1..3", "--s").unwrap(), (1.0, 3.0, None));
        assert_eq!(parse_range("0..5:0.5", "--s").unwrap(), (0.0, 5.0, Some(0.5)));
        assert!(parse_range("3..1", "--s").is_err());
        assert!(parse_range("0..1:0", "--s").is_err());
    }
}
