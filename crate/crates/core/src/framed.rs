//! Framed rank-2 bundles as flat SL(2) connections on the graph.
//!
//! A framing assigns an SL(2) matrix `a(d)` to every dart with
//! `a(σ(d)) = a(d)⁻¹`; gauge transformations act by
//! `a(d) ↦ g(v_s) a(d) g(v_t)⁻¹`. A flat bundle on the nodal curve adds a
//! meridian holonomy `μ(d)` at every dart, in the frame of the dart's vertex,
//! subject to `μ(σ(d)) = a(σ(d)) μ(d)⁻¹ a(σ(d))⁻¹` and, at every vertex,
//! `μ(d₀) μ(d₁) μ(d∞) = I` (product in marked-point order 0, 1, ∞).

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{DartId, EdgeId, SpanningTreeData, TrivalentGraph, VertexId};
use crate::linalg::{self, Matrix};
use crate::mat2::{exp_sl2, Mat2, RandomSl2, SL2Matrix};
use crate::scalar::{Complex, Scalar};

/// Vertex residual above which a bundle is considered off the variety.
pub const ON_VARIETY_TOL: f64 = 1e-8;
/// Zero test for identity checks in the float domain.
pub const IDENTITY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct Framing<T> {
    values: Vec<SL2Matrix<T>>,
}

impl<T: Scalar> Framing<T> {
    pub fn identity(g: &TrivalentGraph) -> Self {
        Framing {
            values: vec![SL2Matrix::identity(); g.dart_count()],
        }
    }

    /// Framing from one matrix per edge, placed on the edge's source dart.
    pub fn from_edges(g: &TrivalentGraph, per_edge: Vec<SL2Matrix<T>>) -> Result<Self> {
        if per_edge.len() != g.edge_count() {
            return Err(Error::InvalidInput(format!(
                "{} edge values for {} edges",
                per_edge.len(),
                g.edge_count()
            )));
        }
        let mut values = vec![SL2Matrix::identity(); g.dart_count()];
        for (e, m) in per_edge.into_iter().enumerate() {
            let (s, t) = g.edges()[e];
            values[t] = m.inverse();
            values[s] = m;
        }
        Ok(Framing { values })
    }

    pub fn random<R: Rng + ?Sized>(g: &TrivalentGraph, rng: &mut R) -> Self
    where
        T: RandomSl2,
    {
        let per_edge = (0..g.edge_count()).map(|_| T::random_sl2(rng)).collect();
        Self::from_edges(g, per_edge).expect("edge count matches")
    }

    pub fn get(&self, d: DartId) -> &SL2Matrix<T> {
        &self.values[d]
    }

    /// Values on the source dart of each edge.
    pub fn edge_values(&self, g: &TrivalentGraph) -> Vec<SL2Matrix<T>> {
        g.edges().iter().map(|&(s, _)| self.values[s].clone()).collect()
    }

    pub fn set_edge(&mut self, g: &TrivalentGraph, e: EdgeId, m: SL2Matrix<T>) {
        let (s, t) = g.edges()[e];
        self.values[t] = m.inverse();
        self.values[s] = m;
    }

    /// Largest deviation from `a(σ(d)) a(d) = I`.
    pub fn inversion_residual(&self, g: &TrivalentGraph) -> f64 {
        g.darts()
            .iter()
            .map(|d| {
                self.values[d.partner]
                    .mul(&self.values[d.id])
                    .matrix()
                    .distance_to_identity()
            })
            .fold(0.0, crate::scalar::nan_max)
    }

    pub fn map_domain<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Framing<U> {
        Framing {
            values: self
                .values
                .iter()
                .map(|m| {
                    let m = m.matrix();
                    SL2Matrix::new(Mat2::new(f(&m.a), f(&m.b), f(&m.c), f(&m.d)))
                        .expect("conversion preserves determinant")
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaugeTransform<T> {
    pub values: Vec<SL2Matrix<T>>,
}

impl<T: Scalar> GaugeTransform<T> {
    pub fn identity(g: &TrivalentGraph) -> Self {
        GaugeTransform {
            values: vec![SL2Matrix::identity(); g.vertex_count()],
        }
    }

    pub fn random<R: Rng + ?Sized>(g: &TrivalentGraph, rng: &mut R) -> Self
    where
        T: RandomSl2,
    {
        GaugeTransform {
            values: (0..g.vertex_count()).map(|_| T::random_sl2(rng)).collect(),
        }
    }

    pub fn at(&self, v: VertexId) -> &SL2Matrix<T> {
        &self.values[v]
    }

    /// Pointwise product `self · other` (apply `other` first).
    pub fn compose(&self, other: &Self) -> Self {
        GaugeTransform {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| x.mul(y))
                .collect(),
        }
    }
}

/// `g(a)(d) = g(v_s(d)) · a(d) · g(v_t(d))⁻¹`.
pub fn apply_gauge<T: Scalar>(
    graph: &TrivalentGraph,
    gauge: &GaugeTransform<T>,
    a: &Framing<T>,
) -> Framing<T> {
    Framing {
        values: graph
            .darts()
            .iter()
            .map(|d| {
                let vs = d.vertex;
                let vt = graph.vertex_of(d.partner);
                gauge.values[vs]
                    .mul(&a.values[d.id])
                    .mul(&gauge.values[vt].inverse())
            })
            .collect(),
    }
}

/// The gauge transformation, trivial at the root, that makes every tree dart
/// the identity: `h(child) = h(parent) · a(parent → child)`.
pub fn tree_gauge<T: Scalar>(
    graph: &TrivalentGraph,
    a: &Framing<T>,
    tree: &SpanningTreeData,
) -> GaugeTransform<T> {
    let mut values = vec![SL2Matrix::identity(); graph.vertex_count()];
    for &v in tree.order.iter().skip(1) {
        let d = tree.parent_dart[v].expect("non-root vertex has a parent dart");
        let parent = graph.vertex_of(d);
        values[v] = values[parent].mul(a.get(d));
    }
    GaugeTransform { values }
}

/// Holonomies of the cotree edges, one per free generator.
#[derive(Clone, Debug, PartialEq)]
pub struct HolonomyTuple<T> {
    pub matrices: Vec<SL2Matrix<T>>,
}

/// Gauge-fixes the tree to the identity (root frame fixed) and returns the
/// cotree holonomies in increasing edge order.
pub fn schottky_holonomies<T: Scalar>(
    graph: &TrivalentGraph,
    a: &Framing<T>,
    tree: &SpanningTreeData,
) -> HolonomyTuple<T> {
    let fixed = apply_gauge(graph, &tree_gauge(graph, a, tree), a);
    HolonomyTuple {
        matrices: tree
            .cotree_edges
            .iter()
            .map(|&e| fixed.get(graph.source_dart(e)).clone())
            .collect(),
    }
}

/// Gauge-fixed framing: identity on tree darts, cotree holonomies elsewhere.
pub fn gauge_fixed_framing<T: Scalar>(
    graph: &TrivalentGraph,
    a: &Framing<T>,
    tree: &SpanningTreeData,
) -> Framing<T> {
    apply_gauge(graph, &tree_gauge(graph, a, tree), a)
}

/// Traces of all single generators, then of ordered pairs `A_i A_j` (i<j),
/// then of ordered triples `A_i A_j A_k` (i<j<k).
pub fn trace_invariants<T: Scalar>(t: &HolonomyTuple<T>) -> Vec<T> {
    let m = &t.matrices;
    let n = m.len();
    let mut out: Vec<T> = m.iter().map(SL2Matrix::trace).collect();
    for i in 0..n {
        for j in i + 1..n {
            out.push(m[i].mul(&m[j]).trace());
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                out.push(m[i].mul(&m[j]).mul(&m[k]).trace());
            }
        }
    }
    out
}

/// A flat bundle on the nodal curve: framing plus meridian holonomies.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceFlatBundle<T> {
    framing: Framing<T>,
    meridians: Vec<SL2Matrix<T>>,
}

impl<T: Scalar> SurfaceFlatBundle<T> {
    /// Builds from one meridian per edge (on the source dart); the partner
    /// dart's meridian follows from edge compatibility.
    pub fn from_edge_meridians(
        graph: &TrivalentGraph,
        framing: Framing<T>,
        per_edge: Vec<SL2Matrix<T>>,
    ) -> Result<Self> {
        if per_edge.len() != graph.edge_count() {
            return Err(Error::InvalidInput(format!(
                "{} meridians for {} edges",
                per_edge.len(),
                graph.edge_count()
            )));
        }
        let mut meridians = vec![SL2Matrix::identity(); graph.dart_count()];
        for (e, mu) in per_edge.into_iter().enumerate() {
            let (s, t) = graph.edges()[e];
            let back = framing.get(t);
            meridians[t] = back.mul(&mu.inverse()).mul(&back.inverse());
            meridians[s] = mu;
        }
        Ok(SurfaceFlatBundle { framing, meridians })
    }

    pub fn framing(&self) -> &Framing<T> {
        &self.framing
    }

    pub fn meridian(&self, d: DartId) -> &SL2Matrix<T> {
        &self.meridians[d]
    }

    pub fn edge_meridians(&self, g: &TrivalentGraph) -> Vec<SL2Matrix<T>> {
        g.edges().iter().map(|&(s, _)| self.meridians[s].clone()).collect()
    }

    /// Largest deviation from `μ(σ(d)) = a(σ(d)) μ(d)⁻¹ a(σ(d))⁻¹`.
    pub fn compatibility_residual(&self, g: &TrivalentGraph) -> f64 {
        g.darts()
            .iter()
            .map(|d| {
                let back = self.framing.get(d.partner);
                let expected = back
                    .mul(&self.meridians[d.id].inverse())
                    .mul(&back.inverse());
                expected
                    .matrix()
                    .sub(self.meridians[d.partner].matrix())
                    .norm()
            })
            .fold(0.0, crate::scalar::nan_max)
    }

    /// `μ(d₀) μ(d₁) μ(d∞)` at vertex `v`.
    pub fn vertex_product(&self, g: &TrivalentGraph, v: VertexId) -> SL2Matrix<T> {
        let [d0, d1, d2] = g.darts_at(v);
        self.meridians[d0]
            .mul(&self.meridians[d1])
            .mul(&self.meridians[d2])
    }
}

/// The section `r*`: all meridians trivial over the given framing.
pub fn zero_section<T: Scalar>(g: &TrivalentGraph, a: &Framing<T>) -> SurfaceFlatBundle<T> {
    SurfaceFlatBundle {
        framing: a.clone(),
        meridians: vec![SL2Matrix::identity(); g.dart_count()],
    }
}

/// The forgetful map `(E, h) ↦ E`.
pub fn forget_flat<T: Scalar>(fb: &SurfaceFlatBundle<T>) -> Framing<T> {
    fb.framing.clone()
}

/// Gauge action on flat bundles: framing by [`apply_gauge`], meridians by
/// conjugation in the frame of their vertex.
pub fn apply_gauge_flat<T: Scalar>(
    graph: &TrivalentGraph,
    gauge: &GaugeTransform<T>,
    fb: &SurfaceFlatBundle<T>,
) -> SurfaceFlatBundle<T> {
    SurfaceFlatBundle {
        framing: apply_gauge(graph, gauge, &fb.framing),
        meridians: graph
            .darts()
            .iter()
            .map(|d| {
                let gv = gauge.at(d.vertex);
                gv.mul(&fb.meridians[d.id]).mul(&gv.inverse())
            })
            .collect(),
    }
}

/// `max_v ‖μ(d₀)μ(d₁)μ(d∞) − I‖` in the max-entry norm.
pub fn vertex_relation_residual<T: Scalar>(g: &TrivalentGraph, fb: &SurfaceFlatBundle<T>) -> f64 {
    (0..g.vertex_count())
        .map(|v| fb.vertex_product(g, v).matrix().distance_to_identity())
        .fold(0.0, crate::scalar::nan_max)
}

/// Jacobian of the vertex relations with respect to per-edge meridian
/// parameters.
///
/// Column block `e` (three columns, sl(2) coordinates `x11, x12, x21`)
/// perturbs the source-dart meridian as `μ ↦ (I + εX) μ`; row block `v`
/// (three rows) is the right-trivialized derivative `dP · P⁻¹` of the vertex
/// product, which is traceless.
pub fn flat_linearization<T: Scalar>(g: &TrivalentGraph, fb: &SurfaceFlatBundle<T>) -> Matrix<T> {
    let mut jac = Matrix::zeros(3 * g.vertex_count(), 3 * g.edge_count());
    for (e, &(s, t)) in g.edges().iter().enumerate() {
        let back = fb.framing.get(t);
        let mu_s = &fb.meridians[s];
        for (j, x) in Mat2::<T>::sl2_basis().iter().enumerate() {
            // left-trivialized perturbation at the target dart:
            // Y = -a(t) μ(s)⁻¹ X μ(s) a(t)⁻¹
            let transported = back.mul(&mu_s.inverse());
            let y_t = transported.conjugate(x).neg();
            for (d, y) in [(s, x.clone()), (t, y_t)] {
                let v = g.vertex_of(d);
                let k = g.dart(d).local_index;
                let darts = g.darts_at(v);
                let mut prefix = SL2Matrix::identity();
                for &before in &darts[..k] {
                    prefix = prefix.mul(&fb.meridians[before]);
                }
                let contribution = prefix.conjugate(&y);
                for (i, c) in contribution.sl2_coords().into_iter().enumerate() {
                    jac.add_to(3 * v + i, 3 * e + j, c);
                }
            }
        }
    }
    jac
}

/// Dimension of the kernel of [`flat_linearization`], i.e. the tangent
/// dimension of the fiber of the forgetful map through `fb`.
pub fn flat_local_dimension<T: Scalar>(g: &TrivalentGraph, fb: &SurfaceFlatBundle<T>) -> Result<usize> {
    let residual = vertex_relation_residual(g, fb);
    if !(residual <= ON_VARIETY_TOL) {
        return Err(Error::NotOnVariety { residual });
    }
    Ok(T::kernel(&flat_linearization(g, fb)).dimension())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct SubspaceFlags {
    pub in_sa: bool,
    pub in_sb: bool,
}

/// `in_sa`: all meridians trivial (the image of `r*`). `in_sb`: all cotree
/// holonomies trivial after tree gauge fixing.
pub fn subspace_flags<T: Scalar>(
    g: &TrivalentGraph,
    fb: &SurfaceFlatBundle<T>,
    tree: &SpanningTreeData,
) -> SubspaceFlags {
    let in_sa = fb.meridians.iter().all(|m| m.is_identity(IDENTITY_TOL));
    let in_sb = schottky_holonomies(g, &fb.framing, tree)
        .matrices
        .iter()
        .all(|m| m.is_identity(IDENTITY_TOL));
    SubspaceFlags { in_sa, in_sb }
}

/// Newton iteration for a flat bundle over `a` whose source-dart meridians
/// start at `exp(X_e)`; converges to a nearby solution of the vertex
/// relations using minimum-norm steps.
pub fn flat_solve(
    g: &TrivalentGraph,
    a: &Framing<Complex>,
    initial: &[Mat2<Complex>],
    tol: f64,
    max_iterations: usize,
) -> Result<SurfaceFlatBundle<Complex>> {
    let start = initial.iter().map(exp_sl2).collect();
    let mut fb = SurfaceFlatBundle::from_edge_meridians(g, a.clone(), start)?;
    for _ in 0..max_iterations {
        let residual = vertex_relation_residual(g, &fb);
        if residual < tol {
            return Ok(fb);
        }
        if !residual.is_finite() || residual > 1e6 {
            return Err(Error::NumericalFailure(format!("flat solve diverged (residual {residual:e})")));
        }
        // residual in right-trivialized coordinates: (P - I) P⁻¹ ≈ log P
        let mut rhs = Vec::with_capacity(3 * g.vertex_count());
        for v in 0..g.vertex_count() {
            let p = fb.vertex_product(g, v);
            let r = p.matrix().sub(&Mat2::identity()).mul(&p.inverse().into_matrix());
            let trace_free = r.sub(&Mat2::identity().scale(&(r.trace() / Complex::new(2.0, 0.0))));
            rhs.extend(trace_free.sl2_coords().map(|c| -c));
        }
        let jac = flat_linearization(g, &fb);
        let step = linalg::min_norm_solve(&jac, &rhs)
            .ok_or_else(|| Error::NumericalFailure("least-squares step failed".into()))?;
        // backtrack until the residual decreases
        let current = fb.edge_meridians(g);
        let mut t = 1.0;
        loop {
            let updated = current
                .iter()
                .enumerate()
                .map(|(e, mu)| {
                    let x = Mat2::traceless(step[3 * e], step[3 * e + 1], step[3 * e + 2]);
                    exp_sl2(&x.scale(&Complex::new(t, 0.0))).mul(mu)
                })
                .collect();
            let candidate = SurfaceFlatBundle::from_edge_meridians(g, a.clone(), updated)?;
            if vertex_relation_residual(g, &candidate) < residual || t < 1e-4 {
                fb = candidate;
                break;
            }
            t /= 2.0;
        }
    }
    let residual = vertex_relation_residual(g, &fb);
    if residual < tol {
        Ok(fb)
    } else {
        Err(Error::NumericalFailure(format!(
            "flat solve stalled at residual {residual:e}"
        )))
    }
}

/// A random nontrivial flat bundle near the zero section over `a`.
pub fn random_flat_bundle<R: Rng + ?Sized>(
    g: &TrivalentGraph,
    a: &Framing<Complex>,
    scale: f64,
    rng: &mut R,
) -> Result<SurfaceFlatBundle<Complex>> {
    // conjugation by the framing amplifies perturbations by up to |a|²
    let size = a.edge_values(g).iter().map(|m| m.matrix().norm()).fold(1.0, crate::scalar::nan_max);
    let initial: Vec<_> = (0..g.edge_count())
        .map(|_| {
            let s = Complex::new(scale / (size * size), 0.0);
            Mat2::traceless(
                Complex::random_scalar(rng) * s,
                Complex::random_scalar(rng) * s,
                Complex::random_scalar(rng) * s,
            )
        })
        .collect();
    flat_solve(g, a, &initial, 1e-13, 60)
}
