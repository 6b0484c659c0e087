//! JSON interchange.
//!
//! Forms are `{"degree": p, "terms": [{"idx": [i, j, …], "val": v}]}` with
//! 1-based indices; `v` is a number in float mode and a `"num/den"` string in
//! exact mode (bare integers are accepted in both). Output lists nonzero
//! terms in lexicographic index order. Symmetric tensors are 7×7 arrays, and
//! grid fields are `{"sizes": [...], "degree": p, "data": [...]}` with the
//! components of each point in canonical order, points row-major.

use std::str::FromStr;

use serde_json::{json, Value};

use crate::error::{G2Error, Result};
use crate::field::{Field, FormField, Grid};
use crate::scalar::{Rational, Scalar};
use crate::tensor::index::masks;
use crate::tensor::{Form, Mat7, SymBilinear, Vec7, DIM};

/// Scalars with a JSON representation.
pub trait JsonScalar: Scalar {
    fn to_json(&self) -> Value;
    fn from_json(v: &Value, at: &str) -> Result<Self>;
}

fn parse_err(at: &str, msg: impl std::fmt::Display) -> G2Error {
    G2Error::Parse(format!("at {at}: {msg}"))
}

impl JsonScalar for f64 {
    fn to_json(&self) -> Value {
        json!(self)
    }

    fn from_json(v: &Value, at: &str) -> Result<Self> {
        match v {
            Value::Number(n) => n.as_f64().ok_or_else(|| parse_err(at, "number out of range")),
            Value::String(_) => Err(G2Error::MixedMode(format!("exact value at {at} in a float run"))),
            other => Err(parse_err(at, format!("expected a number, found {other}"))),
        }
    }
}

impl JsonScalar for Rational {
    fn to_json(&self) -> Value {
        Value::String(self.to_string())
    }

    fn from_json(v: &Value, at: &str) -> Result<Self> {
        match v {
            Value::String(s) => {
                Rational::from_str(s.trim()).map_err(|e| parse_err(at, format!("bad rational `{s}`: {e}")))
            }
            Value::Number(n) => match n.as_i64() {
                Some(i) => Ok(<Rational as Scalar>::from_int(i)),
                None => Err(G2Error::MixedMode(format!("float value {n} at {at} in an exact run"))),
            },
            other => Err(parse_err(at, format!("expected a \"num/den\" string, found {other}"))),
        }
    }
}

/// Parse text, reporting syntax errors with line and column.
pub fn parse_document(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| G2Error::Parse(format!("line {} column {}: {e}", e.line(), e.column())))
}

fn field<'a>(v: &'a Value, key: &str, at: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| parse_err(at, format!("missing key `{key}`")))
}

fn as_array<'a>(v: &'a Value, at: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| parse_err(at, "expected an array"))
}

fn as_usize(v: &Value, at: &str) -> Result<usize> {
    v.as_u64().map(|x| x as usize).ok_or_else(|| parse_err(at, "expected a nonnegative integer"))
}

pub fn form_to_json<S: JsonScalar>(f: &Form<S>) -> Value {
    let terms: Vec<Value> = f
        .terms()
        .filter(|(_, v)| !v.is_zero())
        .map(|(idx, v)| json!({"idx": idx.iter().map(|i| i + 1).collect::<Vec<_>>(), "val": v.to_json()}))
        .collect();
    json!({"degree": f.degree(), "terms": terms})
}

pub fn form_from_json<S: JsonScalar>(v: &Value, at: &str) -> Result<Form<S>> {
    let degree = as_usize(field(v, "degree", at)?, &format!("{at}.degree"))?;
    if degree > DIM {
        return Err(parse_err(at, format!("degree {degree} exceeds 7")));
    }
    let mut f = Form::zero(degree);
    for (k, t) in as_array(field(v, "terms", at)?, &format!("{at}.terms"))?.iter().enumerate() {
        let here = format!("{at}.terms[{k}]");
        let idx = as_array(field(t, "idx", &here)?, &format!("{here}.idx"))?
            .iter()
            .map(|i| {
                let i = as_usize(i, &format!("{here}.idx"))?;
                if (1..=DIM).contains(&i) {
                    Ok(i - 1)
                } else {
                    Err(parse_err(&format!("{here}.idx"), format!("index {i} outside 1..7")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let val = S::from_json(field(t, "val", &here)?, &format!("{here}.val"))?;
        f.add_term(&idx, val).map_err(|e| parse_err(&here, e))?;
    }
    Ok(f)
}

pub fn form_from_str<S: JsonScalar>(text: &str) -> Result<Form<S>> {
    form_from_json(&parse_document(text)?, "$")
}

pub fn matrix_to_json<S: JsonScalar>(m: &Mat7<S>) -> Value {
    Value::Array((0..DIM).map(|i| Value::Array((0..DIM).map(|j| m[i][j].to_json()).collect())).collect())
}

pub fn sym_to_json<S: JsonScalar>(m: &SymBilinear<S>) -> Value {
    matrix_to_json(m.mat())
}

pub fn vector_to_json<S: JsonScalar>(v: &Vec7<S>) -> Value {
    Value::Array((0..DIM).map(|i| v[i].to_json()).collect())
}

pub fn matrix_from_json<S: JsonScalar>(v: &Value, at: &str) -> Result<Mat7<S>> {
    let rows = as_array(v, at)?;
    if rows.len() != DIM {
        return Err(parse_err(at, format!("expected 7 rows, found {}", rows.len())));
    }
    let mut out = Vec::with_capacity(DIM);
    for (i, r) in rows.iter().enumerate() {
        let here = format!("{at}[{i}]");
        let r = as_array(r, &here)?;
        if r.len() != DIM {
            return Err(parse_err(&here, format!("expected 7 entries, found {}", r.len())));
        }
        out.push(r.iter().enumerate().map(|(j, x)| S::from_json(x, &format!("{here}[{j}]"))).collect::<Result<Vec<S>>>()?);
    }
    Ok(Mat7::from_fn(|i, j| out[i][j].clone()))
}

pub fn sym_from_json<S: JsonScalar>(v: &Value, at: &str) -> Result<SymBilinear<S>> {
    let m = matrix_from_json::<S>(v, at)?;
    for i in 0..DIM {
        for j in 0..i {
            if !(m[i][j].clone() - m[j][i].clone()).is_negligible(1e-12) {
                return Err(parse_err(at, format!("entries [{i}][{j}] and [{j}][{i}] differ")));
            }
        }
    }
    Ok(SymBilinear::from_fn(|i, j| m[i][j].clone()))
}

pub fn field_to_json(f: &FormField) -> Value {
    let degree = f.values().first().map_or(0, Form::degree);
    let data: Vec<Value> = f.values().iter().flat_map(|x| x.components().iter().map(|c| json!(c))).collect();
    json!({"sizes": f.grid().sizes(), "degree": degree, "data": data})
}

pub fn field_from_json(v: &Value, at: &str) -> Result<FormField> {
    let sizes = as_array(field(v, "sizes", at)?, &format!("{at}.sizes"))?;
    if sizes.len() != DIM {
        return Err(parse_err(&format!("{at}.sizes"), format!("expected 7 sizes, found {}", sizes.len())));
    }
    let sizes: [usize; DIM] = {
        let s = sizes.iter().map(|x| as_usize(x, &format!("{at}.sizes"))).collect::<Result<Vec<_>>>()?;
        std::array::from_fn(|k| s[k])
    };
    let grid = Grid::new(sizes)?;
    let degree = as_usize(field(v, "degree", at)?, &format!("{at}.degree"))?;
    if degree > DIM {
        return Err(parse_err(at, format!("degree {degree} exceeds 7")));
    }
    let width = masks(degree).len();
    let data = as_array(field(v, "data", at)?, &format!("{at}.data"))?;
    if data.len() != width * grid.len() {
        return Err(parse_err(
            &format!("{at}.data"),
            format!("expected {} values ({} points × {width}), found {}", width * grid.len(), grid.len(), data.len()),
        ));
    }
    let values = data
        .chunks(width)
        .enumerate()
        .map(|(p, chunk)| {
            let comps = chunk
                .iter()
                .enumerate()
                .map(|(c, x)| f64::from_json(x, &format!("{at}.data[{}]", p * width + c)))
                .collect::<Result<Vec<_>>>()?;
            Form::from_components(degree, comps)
        })
        .collect::<Result<Vec<_>>>()?;
    Field::new(grid, values)
}

/// A moduli basis: an array of forms, or `{"basis": [...]}`.
pub fn basis_from_json(v: &Value) -> Result<Vec<Form<f64>>> {
    let list = v.get("basis").unwrap_or(v);
    as_array(list, "$.basis")?.iter().enumerate().map(|(k, f)| form_from_json(f, &format!("$.basis[{k}]"))).collect()
}

/// Coordinates: an array of numbers, or `{"coords": [...]}`.
pub fn coords_from_json(v: &Value) -> Result<Vec<f64>> {
    let list = v.get("coords").unwrap_or(v);
    as_array(list, "$.coords")?.iter().enumerate().map(|(k, x)| f64::from_json(x, &format!("$.coords[{k}]"))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::phi0;

    #[test]
    fn form_round_trip_both_modes() {
        let p = phi0::<f64>().scale(&0.5);
        let back: Form<f64> = form_from_json(&form_to_json(&p), "$").unwrap();
        assert_eq!(back, p);
        let q = phi0::<Rational>().scale(&Rational::ratio(-3, 4));
        let v = form_to_json(&q);
        assert_eq!(v["terms"][0], json!({"idx": [1, 2, 3], "val": "-3/4"}));
        assert_eq!(form_from_json::<Rational>(&v, "$").unwrap(), q);
    }

    #[test]
    fn unsorted_indices_pick_up_signs() {
        let f: Form<f64> = form_from_str(r#"{"degree":2,"terms":[{"idx":[3,1],"val":2}]}"#).unwrap();
        assert_eq!(f.get(&[0, 2]), -2.0);
    }

    #[test]
    fn errors_carry_locations() {
        let e = form_from_str::<f64>("{\"degree\": 3,\n \"terms\": [}").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        let e = form_from_str::<f64>(r#"{"degree":1,"terms":[{"idx":[9],"val":1}]}"#).unwrap_err();
        assert!(e.to_string().contains("terms[0].idx"), "{e}");
        let e = form_from_str::<f64>(r#"{"degree":1,"terms":[{"idx":[1],"val":"1/2"}]}"#).unwrap_err();
        assert!(matches!(e, G2Error::MixedMode(_)));
        let e = form_from_str::<Rational>(r#"{"degree":1,"terms":[{"idx":[1],"val":0.5}]}"#).unwrap_err();
        assert!(matches!(e, G2Error::MixedMode(_)));
    }

    #[test]
    fn field_round_trip() {
        let grid = Grid::along(&[2], 5).unwrap();
        let f = Field::from_fn(grid, |x| phi0::<f64>().scale(&(1.0 + x[2])));
        let back = field_from_json(&field_to_json(&f), "$").unwrap();
        assert_eq!(back, f);
    }
}
