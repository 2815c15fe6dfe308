//! Differentials and quadratic differentials on the component spheres, and
//! the global section spaces of the canonical and double-canonical sheaves.
//!
//! On a component with marked points 0, 1, ∞ a differential with simple poles
//! is `(r0/z + r1/(z-1)) dz`, so its residues are `(r0, r1, -(r0+r1))`: the
//! per-vertex residue-sum relation holds identically and is never imposed as
//! a constraint. A quadratic differential is
//! `(q0 + q1 z + q2 z²) dz² / (z²(z-1)²)` with bi-residues
//! `(q0, q0+q1+q2, q2)`.

use crate::error::{Error, Result};
use crate::graph::{DartId, MarkedPoint, TrivalentGraph};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Relative tolerance for bi-residue matching in the float domain.
pub const MATCHING_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct ComponentDifferential<T> {
    pub r0: T,
    pub r1: T,
}

impl<T: Scalar> ComponentDifferential<T> {
    pub fn new(r0: T, r1: T) -> Self {
        ComponentDifferential { r0, r1 }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    /// Residues at `(0, 1, ∞)`.
    pub fn residues(&self) -> [T; 3] {
        [
            self.r0.clone(),
            self.r1.clone(),
            -(self.r0.clone() + self.r1.clone()),
        ]
    }

    pub fn residue(&self, p: MarkedPoint) -> T {
        match p {
            MarkedPoint::Zero => self.r0.clone(),
            MarkedPoint::One => self.r1.clone(),
            MarkedPoint::Infinity => -(self.r0.clone() + self.r1.clone()),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(self.r0.clone() + o.r0.clone(), self.r1.clone() + o.r1.clone())
    }

    pub fn scale(&self, s: &T) -> Self {
        Self::new(self.r0.clone() * s.clone(), self.r1.clone() * s.clone())
    }
}

/// Residue of `(r0, r1)` at `p` as a linear form: coefficients of `(r0, r1)`.
pub fn residue_coefficients(p: MarkedPoint) -> [i64; 2] {
    match p {
        MarkedPoint::Zero => [1, 0],
        MarkedPoint::One => [0, 1],
        MarkedPoint::Infinity => [-1, -1],
    }
}

/// Bi-residue of `(q0, q1, q2)` at `p` as a linear form.
pub fn biresidue_coefficients(p: MarkedPoint) -> [i64; 3] {
    match p {
        MarkedPoint::Zero => [1, 0, 0],
        MarkedPoint::One => [1, 1, 1],
        MarkedPoint::Infinity => [0, 0, 1],
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComponentQuadratic<T> {
    pub q0: T,
    pub q1: T,
    pub q2: T,
}

impl<T: Scalar> ComponentQuadratic<T> {
    pub fn new(q0: T, q1: T, q2: T) -> Self {
        ComponentQuadratic { q0, q1, q2 }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    /// Bi-residues at `(0, 1, ∞)`.
    pub fn biresidues(&self) -> [T; 3] {
        [self.q0.clone(), self.eval(&T::one()), self.q2.clone()]
    }

    pub fn biresidue(&self, p: MarkedPoint) -> T {
        self.biresidues()[p.index()].clone()
    }

    /// The numerator polynomial `q(z)`.
    pub fn eval(&self, z: &T) -> T {
        self.q0.clone() + z.clone() * (self.q1.clone() + z.clone() * self.q2.clone())
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(
            self.q0.clone() + o.q0.clone(),
            self.q1.clone() + o.q1.clone(),
            self.q2.clone() + o.q2.clone(),
        )
    }

    pub fn scale(&self, s: &T) -> Self {
        Self::new(
            self.q0.clone() * s.clone(),
            self.q1.clone() * s.clone(),
            self.q2.clone() * s.clone(),
        )
    }

    pub fn norm(&self) -> f64 {
        [&self.q0, &self.q1, &self.q2]
            .iter()
            .map(|x| x.magnitude())
            .fold(0.0, crate::scalar::nan_max)
    }
}

/// Product of two differentials as a quadratic differential:
/// `q(z) = r0 s0 (z-1)² + (r0 s1 + r1 s0) z(z-1) + r1 s1 z²`.
pub fn multiply_differentials<T: Scalar>(
    d1: &ComponentDifferential<T>,
    d2: &ComponentDifferential<T>,
) -> ComponentQuadratic<T> {
    let a = d1.r0.clone() * d2.r0.clone();
    let m = d1.r0.clone() * d2.r1.clone() + d1.r1.clone() * d2.r0.clone();
    let c = d1.r1.clone() * d2.r1.clone();
    let two = T::from_i64(2);
    ComponentQuadratic::new(a.clone(), -(two * a.clone()) - m.clone(), a + m + c)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GlobalDifferential<T> {
    pub vertex_data: Vec<ComponentDifferential<T>>,
}

impl<T: Scalar> GlobalDifferential<T> {
    pub fn residue_at_dart(&self, g: &TrivalentGraph, d: DartId) -> T {
        self.vertex_data[g.vertex_of(d)].residue(g.marked_point(d))
    }

    /// Largest `|res(d) + res(σ(d))|` over edges.
    pub fn matching_residual(&self, g: &TrivalentGraph) -> f64 {
        g.edges()
            .iter()
            .map(|&(s, t)| (self.residue_at_dart(g, s) + self.residue_at_dart(g, t)).magnitude())
            .fold(0.0, crate::scalar::nan_max)
    }

    fn from_vec(v: &[T]) -> Self {
        GlobalDifferential {
            vertex_data: v
                .chunks(2)
                .map(|c| ComponentDifferential::new(c[0].clone(), c[1].clone()))
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GlobalQuadratic<T> {
    pub vertex_data: Vec<ComponentQuadratic<T>>,
}

impl<T: Scalar> GlobalQuadratic<T> {
    pub fn zero(vertex_count: usize) -> Self {
        GlobalQuadratic {
            vertex_data: vec![ComponentQuadratic::zero(); vertex_count],
        }
    }

    pub fn biresidue_at_dart(&self, g: &TrivalentGraph, d: DartId) -> T {
        self.vertex_data[g.vertex_of(d)].biresidue(g.marked_point(d))
    }

    pub fn add(&self, o: &Self) -> Self {
        GlobalQuadratic {
            vertex_data: self
                .vertex_data
                .iter()
                .zip(&o.vertex_data)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn scale(&self, s: &T) -> Self {
        GlobalQuadratic {
            vertex_data: self.vertex_data.iter().map(|q| q.scale(s)).collect(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.vertex_data.iter().map(|q| q.norm()).fold(0.0, crate::scalar::nan_max)
    }

    fn from_vec(v: &[T]) -> Self {
        GlobalQuadratic {
            vertex_data: v
                .chunks(3)
                .map(|c| ComponentQuadratic::new(c[0].clone(), c[1].clone(), c[2].clone()))
                .collect(),
        }
    }
}

/// Kernel basis of an edge-constraint system together with its rank.
#[derive(Clone, Debug)]
pub struct SectionSpace<S, T> {
    pub basis: Vec<S>,
    pub dimension: usize,
    pub constraint_rank: usize,
    pub constraints: Matrix<T>,
}

/// `(3g-3) × (4g-4)` system `res(d) + res(σ(d)) = 0`, columns `(r0, r1)` per vertex.
pub fn canonical_constraints<T: Scalar>(g: &TrivalentGraph) -> Matrix<T> {
    let mut m = Matrix::zeros(g.edge_count(), 2 * g.vertex_count());
    for (e, &(s, t)) in g.edges().iter().enumerate() {
        for d in [s, t] {
            let v = g.vertex_of(d);
            for (k, c) in residue_coefficients(g.marked_point(d)).into_iter().enumerate() {
                m.add_to(e, 2 * v + k, T::from_i64(c));
            }
        }
    }
    m
}

/// Global sections of the canonical sheaf.
pub fn canonical_space<T: Scalar>(
    g: &TrivalentGraph,
) -> SectionSpace<GlobalDifferential<T>, T> {
    let constraints = canonical_constraints::<T>(g);
    let kernel = T::kernel(&constraints);
    SectionSpace {
        dimension: kernel.dimension(),
        constraint_rank: kernel.rank,
        basis: kernel.basis.iter().map(|v| GlobalDifferential::from_vec(v)).collect(),
        constraints,
    }
}

/// `(3g-3) × (6g-6)` system `bires(d) - bires(σ(d)) = 0`, columns `(q0, q1, q2)` per vertex.
pub fn double_canonical_constraints<T: Scalar>(g: &TrivalentGraph) -> Matrix<T> {
    let mut m = Matrix::zeros(g.edge_count(), 3 * g.vertex_count());
    for (e, &(s, t)) in g.edges().iter().enumerate() {
        for (d, sign) in [(s, 1), (t, -1)] {
            let v = g.vertex_of(d);
            for (k, c) in biresidue_coefficients(g.marked_point(d)).into_iter().enumerate() {
                m.add_to(e, 3 * v + k, T::from_i64(sign * c));
            }
        }
    }
    m
}

/// Global sections of the double-canonical sheaf.
pub fn double_canonical_space<T: Scalar>(
    g: &TrivalentGraph,
) -> SectionSpace<GlobalQuadratic<T>, T> {
    let constraints = double_canonical_constraints::<T>(g);
    let kernel = T::kernel(&constraints);
    SectionSpace {
        dimension: kernel.dimension(),
        constraint_rank: kernel.rank,
        basis: kernel.basis.iter().map(|v| GlobalQuadratic::from_vec(v)).collect(),
        constraints,
    }
}

/// The common bi-residue on each edge, i.e. the values of the coordinate
/// functionals `H_e`.
pub fn bires_coordinates<T: Scalar>(g: &TrivalentGraph, omega: &GlobalQuadratic<T>) -> Result<Vec<T>> {
    vertex_count_check(g, &omega.vertex_data)?;
    let scale = g
        .darts()
        .iter()
        .map(|d| omega.biresidue_at_dart(g, d.id).magnitude())
        .fold(0.0, crate::scalar::nan_max);
    g.edges()
        .iter()
        .enumerate()
        .map(|(e, &(s, t))| {
            let bs = omega.biresidue_at_dart(g, s);
            let diff = bs.clone() - omega.biresidue_at_dart(g, t);
            if diff.negligible(MATCHING_TOL, scale) {
                Ok(bs)
            } else {
                Err(Error::MatchingViolated {
                    edge: e,
                    difference: diff.magnitude(),
                })
            }
        })
        .collect()
}

/// Matrix whose row `k` holds the `H_e` coordinates of `basis[k]`.
pub fn bires_coordinate_matrix<T: Scalar>(
    g: &TrivalentGraph,
    basis: &[GlobalQuadratic<T>],
) -> Result<Matrix<T>> {
    let rows = basis
        .iter()
        .map(|q| bires_coordinates(g, q))
        .collect::<Result<Vec<_>>>()?;
    Ok(Matrix::from_rows(rows, g.edge_count()))
}

pub(crate) fn vertex_count_check<S>(g: &TrivalentGraph, data: &[S]) -> Result<()> {
    if data.len() == g.vertex_count() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "{} components given for a graph with {} vertices",
            data.len(),
            g.vertex_count()
        )))
    }
}
