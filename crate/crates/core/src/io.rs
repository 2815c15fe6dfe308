//! JSON encodings of sections, framings, flat bundles, Higgs fields, Hitchin
//! reports and spectral data.
//!
//! Per-vertex, per-edge and per-dart maps are JSON objects keyed by the
//! decimal index. Scalars are fraction strings (exact) or `[re, im]` pairs
//! (float); decoding one domain's scalar as the other's is a
//! `ScalarDomainMismatch`.

use std::path::Path;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::framed::{Framing, SurfaceFlatBundle};
use crate::graph::{GraphJson, TrivalentGraph};
use crate::higgs::{HiggsField, VertexHiggs};
use crate::mat2::{Mat2, SL2Matrix};
use crate::scalar::{Complex, Scalar};
use crate::sections::{ComponentDifferential, ComponentQuadratic, GlobalDifferential, GlobalQuadratic};
use crate::spectral::{BranchData, DartLift, NodeLift, PrymReport, SpectralData};

pub fn read_json(path: &Path) -> Result<Value> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(std::fs::write(path, text)?)
}

pub fn graph_from_value(v: &Value) -> Result<TrivalentGraph> {
    let j: GraphJson = serde_json::from_value(v.clone())?;
    TrivalentGraph::from_json(&j)
}

pub fn graph_to_value(g: &TrivalentGraph) -> Value {
    serde_json::to_value(g.to_json()).unwrap_or(Value::Null)
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| Error::InvalidInput(format!("missing field `{key}`")))
}

/// Object keyed `"0"..n` into a vector, requiring every key.
fn indexed<'a>(v: &'a Value, n: usize, what: &str) -> Result<Vec<&'a Value>> {
    let obj = v
        .as_object()
        .ok_or_else(|| Error::InvalidInput(format!("{what} must be an object keyed by index")))?;
    if obj.len() != n {
        return Err(Error::InvalidInput(format!("{} {what} entries given, {n} expected", obj.len())));
    }
    (0..n)
        .map(|i| {
            obj.get(&i.to_string())
                .ok_or_else(|| Error::InvalidInput(format!("{what} entry {i} missing")))
        })
        .collect()
}

fn keyed(values: impl IntoIterator<Item = (usize, Value)>) -> Value {
    Value::Object(values.into_iter().map(|(i, v)| (i.to_string(), v)).collect::<Map<_, _>>())
}

fn scalars<T: Scalar>(v: &Value, n: usize) -> Result<Vec<T>> {
    match v.as_array() {
        Some(items) if items.len() == n => items.iter().map(T::from_json).collect(),
        _ => Err(Error::InvalidInput(format!("expected an array of {n} scalars, got {v}"))),
    }
}

pub fn differential_to_json<T: Scalar>(omega: &GlobalDifferential<T>) -> Value {
    let data = omega
        .vertex_data
        .iter()
        .enumerate()
        .map(|(v, c)| (v, json!([c.r0.to_json(), c.r1.to_json()])));
    json!({ "vertex_data": keyed(data) })
}

pub fn differential_from_json<T: Scalar>(g: &TrivalentGraph, v: &Value) -> Result<GlobalDifferential<T>> {
    let vertex_data = indexed(field(v, "vertex_data")?, g.vertex_count(), "vertex_data")?
        .into_iter()
        .map(|c| {
            let [r0, r1]: [T; 2] = scalars(c, 2)?.try_into().map_err(|_| unreachable_len())?;
            Ok(ComponentDifferential::new(r0, r1))
        })
        .collect::<Result<_>>()?;
    Ok(GlobalDifferential { vertex_data })
}

pub fn quadratic_to_json<T: Scalar>(omega: &GlobalQuadratic<T>) -> Value {
    let data = omega
        .vertex_data
        .iter()
        .enumerate()
        .map(|(v, c)| (v, json!([c.q0.to_json(), c.q1.to_json(), c.q2.to_json()])));
    json!({ "vertex_data": keyed(data) })
}

pub fn quadratic_from_json<T: Scalar>(g: &TrivalentGraph, v: &Value) -> Result<GlobalQuadratic<T>> {
    let vertex_data = indexed(field(v, "vertex_data")?, g.vertex_count(), "vertex_data")?
        .into_iter()
        .map(|c| {
            let [q0, q1, q2]: [T; 3] = scalars(c, 3)?.try_into().map_err(|_| unreachable_len())?;
            Ok(ComponentQuadratic::new(q0, q1, q2))
        })
        .collect::<Result<_>>()?;
    Ok(GlobalQuadratic { vertex_data })
}

fn unreachable_len() -> Error {
    Error::InvalidInput("wrong number of scalars".into())
}

pub fn mat2_to_json<T: Scalar>(m: &Mat2<T>) -> Value {
    json!([[m.a.to_json(), m.b.to_json()], [m.c.to_json(), m.d.to_json()]])
}

pub fn mat2_from_json<T: Scalar>(v: &Value) -> Result<Mat2<T>> {
    let rows = v
        .as_array()
        .filter(|r| r.len() == 2)
        .ok_or_else(|| Error::InvalidInput(format!("expected a 2×2 matrix, got {v}")))?;
    let [a, b]: [T; 2] = scalars(&rows[0], 2)?.try_into().map_err(|_| unreachable_len())?;
    let [c, d]: [T; 2] = scalars(&rows[1], 2)?.try_into().map_err(|_| unreachable_len())?;
    Ok(Mat2::new(a, b, c, d))
}

/// Values on source darts, keyed by dart id.
fn per_source_dart<T: Scalar>(g: &TrivalentGraph, values: &[SL2Matrix<T>]) -> Value {
    keyed(
        g.edges()
            .iter()
            .zip(values)
            .map(|(&(s, _), m)| (s, mat2_to_json(m.matrix()))),
    )
}

/// Reads one matrix per edge, given on either of its darts; a value on the
/// target dart is inverted onto the source dart.
fn read_per_edge<T: Scalar>(g: &TrivalentGraph, v: &Value, what: &str) -> Result<Vec<SL2Matrix<T>>> {
    let obj = v
        .as_object()
        .ok_or_else(|| Error::InvalidInput(format!("{what} must be an object keyed by dart")))?;
    let mut out: Vec<Option<SL2Matrix<T>>> = vec![None; g.edge_count()];
    for (key, value) in obj {
        let d: usize = key
            .parse()
            .map_err(|_| Error::InvalidInput(format!("`{key}` is not a dart id")))?;
        if d >= g.dart_count() {
            return Err(Error::DartOutOfRange(d));
        }
        let e = g.edge_of(d);
        let m = SL2Matrix::new(mat2_from_json(value)?)?;
        let m = if d == g.source_dart(e) { m } else { m.inverse() };
        if out[e].replace(m).is_some() {
            return Err(Error::InvalidInput(format!("{what}: edge {e} given twice")));
        }
    }
    out.into_iter()
        .enumerate()
        .map(|(e, m)| m.ok_or_else(|| Error::InvalidInput(format!("{what}: no value for edge {e}"))))
        .collect()
}

pub fn framing_to_json<T: Scalar>(g: &TrivalentGraph, a: &Framing<T>) -> Value {
    json!({ "darts": per_source_dart(g, &a.edge_values(g)) })
}

pub fn framing_from_json<T: Scalar>(g: &TrivalentGraph, v: &Value) -> Result<Framing<T>> {
    Framing::from_edges(g, read_per_edge(g, field(v, "darts")?, "darts")?)
}

pub fn flat_bundle_to_json<T: Scalar>(g: &TrivalentGraph, fb: &SurfaceFlatBundle<T>) -> Value {
    json!({
        "darts": per_source_dart(g, &fb.framing().edge_values(g)),
        "meridians": per_source_dart(g, &fb.edge_meridians(g)),
    })
}

/// Meridians must be given on source darts (the target value is not the
/// inverse but the framed conjugate of the inverse).
pub fn flat_bundle_from_json<T: Scalar>(g: &TrivalentGraph, v: &Value) -> Result<SurfaceFlatBundle<T>> {
    let a = framing_from_json(g, v)?;
    let obj = field(v, "meridians")?
        .as_object()
        .ok_or_else(|| Error::InvalidInput("meridians must be an object keyed by dart".into()))?;
    let mut per_edge = Vec::with_capacity(g.edge_count());
    for &(s, _) in g.edges() {
        let m = obj
            .get(&s.to_string())
            .ok_or_else(|| Error::InvalidInput(format!("meridians: no value for source dart {s}")))?;
        per_edge.push(SL2Matrix::new(mat2_from_json(m)?)?);
    }
    if obj.len() != g.edge_count() {
        return Err(Error::InvalidInput("meridians: only source darts may be given".into()));
    }
    SurfaceFlatBundle::from_edge_meridians(g, a, per_edge)
}

pub fn higgs_to_json<T: Scalar>(phi: &HiggsField<T>) -> Value {
    let pair = |c: &ComponentDifferential<T>| json!([c.r0.to_json(), c.r1.to_json()]);
    let data = phi
        .vertex_data
        .iter()
        .enumerate()
        .map(|(v, h)| (v, json!({ "w11": pair(&h.w11), "w12": pair(&h.w12), "w21": pair(&h.w21) })));
    json!({ "vertex_data": keyed(data) })
}

pub fn higgs_from_json<T: Scalar>(g: &TrivalentGraph, v: &Value) -> Result<HiggsField<T>> {
    let read = |h: &Value, key: &str| -> Result<ComponentDifferential<T>> {
        let [r0, r1]: [T; 2] = scalars(field(h, key)?, 2)?.try_into().map_err(|_| unreachable_len())?;
        Ok(ComponentDifferential::new(r0, r1))
    };
    let vertex_data = indexed(field(v, "vertex_data")?, g.vertex_count(), "vertex_data")?
        .into_iter()
        .map(|h| {
            Ok(VertexHiggs {
                w11: read(h, "w11")?,
                w12: read(h, "w12")?,
                w21: read(h, "w21")?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(HiggsField { vertex_data })
}

pub fn hitchin_report_to_json<T: Scalar>(he_coords: &[T], regular: bool, jacobian_rank: usize) -> Value {
    json!({
        "He_coords": keyed(he_coords.iter().enumerate().map(|(e, x)| (e, x.to_json()))),
        "regular": regular,
        "jacobian_rank": jacobian_rank,
    })
}

fn vector_to_json(v: &[Complex; 2]) -> Value {
    json!([v[0].to_json(), v[1].to_json()])
}

fn vector_from_json(v: &Value) -> Result<[Complex; 2]> {
    let [x, y]: [Complex; 2] = scalars(v, 2)?.try_into().map_err(|_| unreachable_len())?;
    Ok([x, y])
}

pub fn spectral_to_json(data: &SpectralData, prym: Option<&PrymReport>) -> Value {
    let branch = data.branch.as_ref().map(|b| {
        keyed(
            b.points
                .iter()
                .enumerate()
                .map(|(v, [z1, z2])| (v, json!([z1.to_json(), z2.to_json()]))),
        )
    });
    let lift = |l: &DartLift| json!({ "plus": vector_to_json(&l.plus), "minus": vector_to_json(&l.minus) });
    let nodes = keyed(data.nodes.iter().map(|n| {
        let mut lines = Map::new();
        lines.insert(n.source.dart.to_string(), lift(&n.source));
        lines.insert(n.target.dart.to_string(), lift(&n.target));
        (n.edge, json!({ "lambda": n.lambda.to_json(), "eigenlines": lines }))
    }));
    let mut out = json!({ "branch": branch, "nodes": nodes });
    if let Some(p) = prym {
        out["prym"] = serde_json::to_value(p).unwrap_or(Value::Null);
    }
    out
}

pub fn spectral_from_json(g: &TrivalentGraph, v: &Value) -> Result<SpectralData> {
    let branch = match v.get("branch") {
        None | Some(Value::Null) => None,
        Some(b) => Some(BranchData {
            points: indexed(b, g.vertex_count(), "branch")?
                .into_iter()
                .map(|pair| {
                    let [z1, z2]: [Complex; 2] = scalars(pair, 2)?.try_into().map_err(|_| unreachable_len())?;
                    Ok([z1, z2])
                })
                .collect::<Result<_>>()?,
        }),
    };
    let nodes = indexed(field(v, "nodes")?, g.edge_count(), "nodes")?
        .into_iter()
        .enumerate()
        .map(|(e, n)| {
            let lines = field(n, "eigenlines")?;
            let lift = |d: usize| -> Result<DartLift> {
                let l = lines
                    .get(d.to_string())
                    .ok_or_else(|| Error::InvalidInput(format!("node {e}: no eigenlines for dart {d}")))?;
                Ok(DartLift {
                    dart: d,
                    plus: vector_from_json(field(l, "plus")?)?,
                    minus: vector_from_json(field(l, "minus")?)?,
                })
            };
            Ok(NodeLift {
                edge: e,
                lambda: Complex::from_json(field(n, "lambda")?)?,
                source: lift(g.source_dart(e))?,
                target: lift(g.target_dart(e))?,
                matching_residual: 0.0,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SpectralData { branch, nodes })
}
