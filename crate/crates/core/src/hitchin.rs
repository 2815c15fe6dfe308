//! The Hitchin map `φ ↦ det ω(v) = -ω11² - ω12·ω21`, its coordinates in the
//! edge functionals `H_e`, its differential, and the regularity test for
//! quadratic differentials.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::framed::Framing;
use crate::graph::{MarkedPoint, TrivalentGraph, VertexId};
use crate::higgs::{check_vertex_count, constraint_defects, first_defective_dart, residue_matrix, HiggsField};
use crate::linalg::Matrix;
use crate::scalar::{Complex, Scalar};
use crate::sections::{bires_coordinates, multiply_differentials, ComponentQuadratic, GlobalQuadratic};

/// Relative tolerance for the regularity conditions in the float domain.
pub const REGULARITY_TOL: f64 = 1e-10;

/// Per vertex `-w11·w11 - w12·w21`.
pub fn hitchin_image<T: Scalar>(phi: &HiggsField<T>) -> GlobalQuadratic<T> {
    GlobalQuadratic {
        vertex_data: phi
            .vertex_data
            .iter()
            .map(|h| {
                multiply_differentials(&h.w11, &h.w11)
                    .add(&multiply_differentials(&h.w12, &h.w21))
                    .scale(&-T::one())
            })
            .collect(),
    }
}

/// Symmetric polarization of the determinant:
/// `B(φ, ψ)(v) = -2 ω11ψ11 - ω12ψ21 - ω21ψ12`.
pub fn polarization<T: Scalar>(phi: &HiggsField<T>, psi: &HiggsField<T>) -> GlobalQuadratic<T> {
    GlobalQuadratic {
        vertex_data: phi
            .vertex_data
            .iter()
            .zip(&psi.vertex_data)
            .map(|(f, s)| {
                multiply_differentials(&f.w11, &s.w11)
                    .scale(&T::from_i64(2))
                    .add(&multiply_differentials(&f.w12, &s.w21))
                    .add(&multiply_differentials(&f.w21, &s.w12))
                    .scale(&-T::one())
            })
            .collect(),
    }
}

/// `max_(v,p) |bires_p(det ω(v)) - det(res_p ω(v))|`; vanishes for every
/// field, Higgs or not.
pub fn bires_det_identity<T: Scalar>(phi: &HiggsField<T>) -> f64 {
    let image = hitchin_image(phi);
    (0..phi.vertex_data.len())
        .flat_map(|v| MarkedPoint::ALL.map(|p| (v, p)))
        .map(|(v, p)| {
            let lhs = image.vertex_data[v].biresidue(p);
            let rhs = residue_matrix(phi, v, p).det();
            (lhs - rhs).magnitude()
        })
        .fold(0.0, crate::scalar::nan_max)
}

/// `H_e(det φ)` for every edge.
pub fn hitchin_in_he_coords<T: Scalar>(g: &TrivalentGraph, phi: &HiggsField<T>, a: &Framing<T>) -> Result<Vec<T>> {
    check_vertex_count(g, phi)?;
    if let Some(d) = first_defective_dart(g, phi, a) {
        return Err(Error::MatchingViolated {
            edge: g.edge_of(d),
            difference: constraint_defects(g, phi, a)[d].norm(),
        });
    }
    bires_coordinates(g, &hitchin_image(phi))
}

#[derive(Clone, Debug)]
pub struct HitchinJacobian<T> {
    /// Row `k`: `H_e` coordinates of `B(φ, ψ_k)`.
    pub matrix: Matrix<T>,
    pub rank: usize,
}

/// Differential of the Hitchin map at `phi` along a basis of the Higgs space.
pub fn hitchin_jacobian<T: Scalar>(
    g: &TrivalentGraph,
    phi: &HiggsField<T>,
    basis: &[HiggsField<T>],
) -> Result<HitchinJacobian<T>> {
    check_vertex_count(g, phi)?;
    let rows = basis
        .iter()
        .map(|psi| bires_coordinates(g, &polarization(phi, psi)))
        .collect::<Result<Vec<_>>>()?;
    let matrix = Matrix::from_rows(rows, g.edge_count());
    let rank = if basis.is_empty() { 0 } else { matrix.rank() };
    Ok(HitchinJacobian { matrix, rank })
}

/// Central finite differences of [`hitchin_in_he_coords`] along each basis
/// field, one row per field.
pub fn finite_difference_jacobian(
    g: &TrivalentGraph,
    phi: &HiggsField<Complex>,
    a: &Framing<Complex>,
    basis: &[HiggsField<Complex>],
    step: f64,
) -> Result<Matrix<Complex>> {
    let h = Complex::new(step, 0.0);
    let rows = basis
        .iter()
        .map(|psi| {
            let forward = hitchin_in_he_coords(g, &phi.add(&psi.scale(&h)), a)?;
            let backward = hitchin_in_he_coords(g, &phi.add(&psi.scale(&-h)), a)?;
            Ok(forward.iter().zip(backward).map(|(f, b)| (f - b) / (2.0 * step)).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Matrix::from_rows(rows, g.edge_count()))
}

/// `max |J - J_fd| / max |J|` with the finite-difference step `step`.
pub fn jacobian_fd_error(
    g: &TrivalentGraph,
    phi: &HiggsField<Complex>,
    a: &Framing<Complex>,
    basis: &[HiggsField<Complex>],
    step: f64,
) -> Result<f64> {
    let exact = hitchin_jacobian(g, phi, basis)?.matrix;
    let approx = finite_difference_jacobian(g, phi, a, basis, step)?;
    let mut diff = 0.0f64;
    for i in 0..exact.rows() {
        for j in 0..exact.cols() {
            diff = diff.max((exact.get(i, j) - approx.get(i, j)).norm());
        }
    }
    Ok(diff / exact.max_entry().max(f64::MIN_POSITIVE))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularityCondition {
    /// `q2 = 0`: a zero at the marked point ∞.
    ZeroAtInfinity,
    /// `q0 = 0`: a zero at the marked point 0.
    ZeroAtZero,
    /// `q(1) = 0`: a zero at the marked point 1.
    ZeroAtOne,
    /// Vanishing discriminant: the two zeros coincide.
    DoubleZero,
}

impl std::fmt::Display for RegularityCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RegularityCondition::ZeroAtInfinity => "zero at the marked point infinity (q2 = 0)",
            RegularityCondition::ZeroAtZero => "zero at the marked point 0 (q0 = 0)",
            RegularityCondition::ZeroAtOne => "zero at the marked point 1 (q(1) = 0)",
            RegularityCondition::DoubleZero => "coinciding zeros (discriminant 0)",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RegularityFailure {
    pub vertex: VertexId,
    pub condition: RegularityCondition,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Regularity {
    pub regular: bool,
    pub failures: Vec<RegularityFailure>,
}

/// Failed conditions for one component quadratic differential.
pub fn component_regularity<T: Scalar>(q: &ComponentQuadratic<T>) -> Vec<RegularityCondition> {
    let scale = q.norm();
    let mut out = Vec::new();
    if scale == 0.0 || q.q2.negligible(REGULARITY_TOL, scale) {
        out.push(RegularityCondition::ZeroAtInfinity);
    }
    if q.q0.negligible(REGULARITY_TOL, scale) {
        out.push(RegularityCondition::ZeroAtZero);
    }
    if q.eval(&T::one()).negligible(REGULARITY_TOL, scale) {
        out.push(RegularityCondition::ZeroAtOne);
    }
    let disc = q.q1.clone() * q.q1.clone() - T::from_i64(4) * q.q0.clone() * q.q2.clone();
    if disc.negligible(REGULARITY_TOL, scale * scale) {
        out.push(RegularityCondition::DoubleZero);
    }
    out
}

/// Two distinct finite zeros avoiding `{0, 1, ∞}` on every component.
pub fn is_regular<T: Scalar>(g: &TrivalentGraph, omega: &GlobalQuadratic<T>) -> Regularity {
    let failures: Vec<_> = omega
        .vertex_data
        .iter()
        .enumerate()
        .take(g.vertex_count())
        .flat_map(|(vertex, q)| {
            component_regularity(q)
                .into_iter()
                .map(move |condition| RegularityFailure { vertex, condition })
        })
        .collect();
    Regularity {
        regular: failures.is_empty() && omega.vertex_data.len() == g.vertex_count(),
        failures,
    }
}
