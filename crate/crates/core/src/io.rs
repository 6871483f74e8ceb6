//! JSON file formats.
//!
//! | document      | shape                                                                |
//! |---------------|----------------------------------------------------------------------|
//! | vector        | `{"scalar_mode"?, "n", "coords": [s; n]}`                            |
//! | matrix        | `{"scalar_mode"?, "n", "entries": [[s; n]; n]}`                      |
//! | superoperator | `{"scalar_mode"?, "n", "vec": "col-major", "entries": [[s; n²]; n²]}` |
//! | family        | `{label: [index, ...], ...}`                                         |
//! | relation      | `[[label, label], ...]`                                              |
//!
//! A scalar `s` is a JSON number or a string (`"p/q"`, `"p"` or decimal).
//! A document declaring `"scalar_mode": "float"` may not contain `"p/q"`
//! strings, and one declaring `"exact"` may not contain non-integer JSON
//! numbers. Exact output writes every scalar as a `"p/q"` string, float
//! output writes JSON numbers.

use serde_json::{json, Map, Value};

use crate::detect::SuperOperator;
use crate::error::{Error, Result};
use crate::inner::{BlockFamily, IndexRelation, Label};
use crate::lattice::LatticeVector;
use crate::operator::RegularOperator;
use crate::scalar::{parse_rational, Scalar, ScalarMode};

/// Environment variable overriding the scalar mode declared in files.
pub const SCALAR_MODE_ENV: &str = "RIESZ_SCALAR_MODE";

pub fn parse_json(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

/// The `scalar_mode` a document declares, if any.
pub fn declared_mode(doc: &Value) -> Result<Option<ScalarMode>> {
    match doc.get("scalar_mode") {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => s.parse().map(Some),
        Some(other) => Err(Error::Parse(format!("scalar_mode must be a string, found {other}"))),
    }
}

/// Picks the mode for a run: the override if given, otherwise the mode the
/// documents agree on, otherwise exact. Documents declaring different modes
/// are rejected.
pub fn resolve_mode(override_mode: Option<&str>, docs: &[&Value]) -> Result<ScalarMode> {
    let mut declared: Option<ScalarMode> = None;
    for doc in docs {
        if let Some(mode) = declared_mode(doc)? {
            match declared {
                Some(prev) if prev != mode => {
                    return Err(Error::Parse(format!("inputs mix scalar modes {prev} and {mode}")));
                }
                _ => declared = Some(mode),
            }
        }
    }
    match override_mode {
        Some(s) if !s.trim().is_empty() => s.parse(),
        _ => Ok(declared.unwrap_or(ScalarMode::Exact)),
    }
}

fn parse_scalar<S: Scalar>(v: &Value, declared: Option<ScalarMode>) -> Result<S> {
    match v {
        Value::String(s) => {
            if declared == Some(ScalarMode::Float) && s.contains('/') {
                return Err(Error::Parse(format!("fraction {s:?} in a float-mode document")));
            }
            Ok(S::from_rational(&parse_rational(s)?))
        }
        Value::Number(num) => {
            let integral = num.is_i64() || num.is_u64();
            if declared == Some(ScalarMode::Exact) && !integral {
                return Err(Error::Parse(format!("decimal {num} in an exact-mode document")));
            }
            Ok(S::from_rational(&parse_rational(&num.to_string())?))
        }
        other => Err(Error::Parse(format!(
            "expected a number or \"p/q\" string, found {other}"
        ))),
    }
}

fn field<'a>(doc: &'a Value, name: &str) -> Result<&'a Value> {
    doc.get(name)
        .ok_or_else(|| Error::Parse(format!("missing field {name:?}")))
}

fn dimension(doc: &Value) -> Result<usize> {
    let n = field(doc, "n")?
        .as_u64()
        .ok_or_else(|| Error::Parse("field \"n\" must be a non-negative integer".into()))?;
    if n == 0 {
        return Err(Error::EmptyDimension);
    }
    Ok(n as usize)
}

fn array<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>> {
    v.as_array()
        .ok_or_else(|| Error::Parse(format!("{what} must be an array")))
}

fn parse_rows<S: Scalar>(doc: &Value, size: usize) -> Result<RegularOperator<S>> {
    let declared = declared_mode(doc)?;
    let rows = array(field(doc, "entries")?, "entries")?;
    if rows.len() != size {
        return Err(Error::DimensionMismatch {
            expected: size,
            found: rows.len(),
        });
    }
    let rows = rows
        .iter()
        .map(|row| {
            let row = array(row, "matrix row")?;
            if row.len() != size {
                return Err(Error::DimensionMismatch {
                    expected: size,
                    found: row.len(),
                });
            }
            row.iter()
                .map(|v| parse_scalar(v, declared))
                .collect::<Result<Vec<S>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    RegularOperator::from_rows(rows)
}

pub fn parse_vector<S: Scalar>(doc: &Value) -> Result<LatticeVector<S>> {
    let n = dimension(doc)?;
    let declared = declared_mode(doc)?;
    let coords = array(field(doc, "coords")?, "coords")?;
    if coords.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: coords.len(),
        });
    }
    LatticeVector::new(
        coords
            .iter()
            .map(|v| parse_scalar(v, declared))
            .collect::<Result<_>>()?,
    )
}

pub fn parse_matrix<S: Scalar>(doc: &Value) -> Result<RegularOperator<S>> {
    let n = dimension(doc)?;
    parse_rows(doc, n)
}

pub fn parse_superoperator<S: Scalar>(doc: &Value) -> Result<SuperOperator<S>> {
    let n = dimension(doc)?;
    match doc.get("vec") {
        None => {}
        Some(Value::String(s)) if s == "col-major" => {}
        Some(other) => return Err(Error::Parse(format!("unsupported vectorization {other}"))),
    }
    SuperOperator::new(n, parse_rows(doc, n * n)?)
}

fn parse_label(v: &Value) -> Result<Label> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) if n.is_u64() || n.is_i64() => Ok(n.to_string()),
        other => Err(Error::Parse(format!(
            "labels must be strings or integers, found {other}"
        ))),
    }
}

/// Reads a family over `n` coordinates.
pub fn parse_family(doc: &Value, n: usize) -> Result<BlockFamily> {
    let map = doc
        .as_object()
        .ok_or_else(|| Error::Parse("family must be an object".into()))?;
    let blocks = map
        .iter()
        .map(|(label, indices)| {
            let indices = array(indices, "block")?
                .iter()
                .map(|i| {
                    i.as_u64()
                        .map(|i| i as usize)
                        .ok_or_else(|| Error::Parse(format!("bad index {i}")))
                })
                .collect::<Result<Vec<usize>>>()?;
            Ok((label.clone(), indices))
        })
        .collect::<Result<Vec<_>>>()?;
    BlockFamily::new(n, blocks)
}

/// Smallest dimension a family document fits in.
pub fn family_extent(doc: &Value) -> Result<usize> {
    let map = doc
        .as_object()
        .ok_or_else(|| Error::Parse("family must be an object".into()))?;
    let mut extent = 0;
    for indices in map.values() {
        for i in array(indices, "block")? {
            let i = i.as_u64().ok_or_else(|| Error::Parse(format!("bad index {i}")))?;
            extent = extent.max(i as usize + 1);
        }
    }
    Ok(extent)
}

pub fn parse_relation(doc: &Value) -> Result<IndexRelation> {
    let pairs = array(doc, "relation")?
        .iter()
        .map(|pair| match pair.as_array().map(Vec::as_slice) {
            Some([a, b]) => Ok((parse_label(a)?, parse_label(b)?)),
            _ => Err(Error::Parse(format!(
                "relation entries must be [label, label] pairs, found {pair}"
            ))),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IndexRelation::new(pairs))
}

fn rows_to_json<S: Scalar>(m: &RegularOperator<S>) -> Value {
    Value::Array(
        m.rows()
            .map(|row| Value::Array(row.iter().map(S::to_json).collect()))
            .collect(),
    )
}

pub fn vector_to_json<S: Scalar>(v: &LatticeVector<S>) -> Value {
    json!({
        "scalar_mode": S::MODE.as_str(),
        "n": v.dim(),
        "coords": v.coords().iter().map(S::to_json).collect::<Vec<_>>(),
    })
}

pub fn matrix_to_json<S: Scalar>(m: &RegularOperator<S>) -> Value {
    json!({ "scalar_mode": S::MODE.as_str(), "n": m.dim(), "entries": rows_to_json(m) })
}

pub fn superoperator_to_json<S: Scalar>(p: &SuperOperator<S>) -> Value {
    json!({
        "scalar_mode": S::MODE.as_str(),
        "n": p.dim(),
        "vec": "col-major",
        "entries": rows_to_json(p.matrix()),
    })
}

pub fn family_to_json(f: &BlockFamily) -> Value {
    let map: Map<String, Value> = f
        .blocks()
        .iter()
        .map(|(label, block)| (label.clone(), json!(block.iter().collect::<Vec<_>>())))
        .collect();
    Value::Object(map)
}

pub fn relation_to_json(r: &IndexRelation) -> Value {
    Value::Array(r.pairs().map(|(a, b)| json!([a, b])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{q, Float, Rational};

    #[test]
    fn reads_numbers_and_fractions() {
        let doc = parse_json(r#"{"n": 2, "coords": [3, "-1/4"]}"#).unwrap();
        let v: LatticeVector = parse_vector(&doc).unwrap();
        assert_eq!(v.coords(), &[q(3, 1), q(-1, 4)]);
        let doc = parse_json(r#"{"n": 2, "coords": [0.5, "2"]}"#).unwrap();
        let v: LatticeVector = parse_vector(&doc).unwrap();
        assert_eq!(v.coords(), &[q(1, 2), q(2, 1)]);
    }

    #[test]
    fn rejects_mixed_modes() {
        let doc = parse_json(r#"{"scalar_mode": "float", "n": 1, "coords": ["1/3"]}"#).unwrap();
        assert!(matches!(parse_vector::<Float>(&doc), Err(Error::Parse(_))));
        let doc = parse_json(r#"{"scalar_mode": "exact", "n": 1, "coords": [0.25]}"#).unwrap();
        assert!(matches!(parse_vector::<Rational>(&doc), Err(Error::Parse(_))));
        let a = json!({"scalar_mode": "exact"});
        let b = json!({"scalar_mode": "float"});
        assert!(resolve_mode(None, &[&a, &b]).is_err());
        assert_eq!(resolve_mode(None, &[&a]).unwrap(), ScalarMode::Exact);
        assert_eq!(resolve_mode(Some("float"), &[&a]).unwrap(), ScalarMode::Float);
        assert_eq!(resolve_mode(None, &[]).unwrap(), ScalarMode::Exact);
        assert!(resolve_mode(Some("fuzzy"), &[]).is_err());
    }

    #[test]
    fn shape_errors_are_dimension_mismatches() {
        let doc = parse_json(r#"{"n": 2, "entries": [[1, 0]]}"#).unwrap();
        assert!(matches!(
            parse_matrix::<Rational>(&doc),
            Err(Error::DimensionMismatch { .. })
        ));
        let doc = parse_json(r#"{"n": 2, "entries": [[1, 0], [0]]}"#).unwrap();
        assert!(matches!(
            parse_matrix::<Rational>(&doc),
            Err(Error::DimensionMismatch { .. })
        ));
        let doc = parse_json(r#"{"n": 2, "vec": "col-major", "entries": [[1, 0], [0, 1]]}"#).unwrap();
        assert!(matches!(
            parse_superoperator::<Rational>(&doc),
            Err(Error::DimensionMismatch { .. })
        ));
        let doc = parse_json(r#"{"n": 1, "vec": "row-major", "entries": [[1]]}"#).unwrap();
        assert!(matches!(parse_superoperator::<Rational>(&doc), Err(Error::Parse(_))));
    }

    #[test]
    fn matrix_round_trip() {
        let m = RegularOperator::from_rows(vec![vec![q(1, 2), q(-3, 1)], vec![q(0, 1), q(7, 9)]]).unwrap();
        let doc = matrix_to_json(&m);
        assert_eq!(doc["entries"][0][0], json!("1/2"));
        assert_eq!(doc["scalar_mode"], json!("exact"));
        assert_eq!(parse_matrix::<Rational>(&doc).unwrap(), m);
    }

    #[test]
    fn family_and_relation_documents() {
        let fam = parse_json(r#"{"a": [0, 2], "b": [1]}"#).unwrap();
        assert_eq!(family_extent(&fam).unwrap(), 3);
        let family = parse_family(&fam, 3).unwrap();
        assert_eq!(family_to_json(&family), fam);
        let rel = parse_json(r#"[["a", "b"], [1, 2]]"#).unwrap();
        let r = parse_relation(&rel).unwrap();
        assert!(r.contains("a", "b") && r.contains("1", "2"));
        assert!(parse_relation(&json!([["a"]])).is_err());
        assert!(parse_family(&json!({"a": [0], "b": [0]}), 2).is_err());
    }
}
