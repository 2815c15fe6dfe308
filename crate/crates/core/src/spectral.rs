//! Spectral data of a Higgs field in the float domain: branch points, node
//! eigen-data, the glued spectral curve with its sheet involution, the line
//! bundle, the combinatorial Prym, and reconstruction of the field.
//!
//! The curve is combinatorial: one rational component per vertex (a double
//! cover of `P_v` branched at the two zeros of `det ω(v)`) and two nodes
//! `e⁺`, `e⁻` over every edge, sitting over the eigenlines of the residue
//! matrices at the edge's two darts.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::framed::Framing;
use crate::graph::{DartId, EdgeId, TrivalentGraph, VertexId};
use crate::higgs::{
    check_vertex_count, higgs_residual, random_higgs_field, residue_at_dart, HiggsField, HiggsSpace, VertexHiggs,
};
use crate::hitchin::{component_regularity, hitchin_image};
use crate::linalg::{integer_rank, Matrix};
use crate::mat2::Mat2;
use crate::scalar::Complex;
use crate::sections::ComponentQuadratic;

/// Parallelism defect allowed between glued eigenlines.
pub const NODE_MATCHING_TOL: f64 = 1e-10;
/// Relative tolerance for the consistency checks in [`reconstruct_higgs`].
pub const RECONSTRUCTION_TOL: f64 = 1e-8;
/// `|det R|` below this fraction of `|R|²` makes a node degenerate.
pub const DEGENERATE_NODE_TOL: f64 = 1e-12;

/// Two branch points per vertex, larger real part first.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchData {
    pub points: Vec<[Complex; 2]>,
}

impl BranchData {
    /// Largest distance between corresponding unordered pairs, relative to the
    /// largest point modulus.
    pub fn distance(&self, other: &BranchData) -> f64 {
        if self.points.len() != other.points.len() {
            return f64::INFINITY;
        }
        let scale = self
            .points
            .iter()
            .chain(&other.points)
            .flatten()
            .map(|z| z.norm())
            .fold(1.0, crate::scalar::nan_max);
        self.points
            .iter()
            .zip(&other.points)
            .map(|([a, b], [c, d])| {
                let straight = (a - c).norm().max((b - d).norm());
                let crossed = (a - d).norm().max((b - c).norm());
                straight.min(crossed)
            })
            .fold(0.0, crate::scalar::nan_max)
            / scale
    }
}

fn ordered(z1: Complex, z2: Complex) -> [Complex; 2] {
    if (z1.re, z1.im) >= (z2.re, z2.im) {
        [z1, z2]
    } else {
        [z2, z1]
    }
}

/// Roots of `q0 + q1 z + q2 z²`, avoiding cancellation.
pub fn quadratic_roots(q: &ComponentQuadratic<Complex>) -> [Complex; 2] {
    let s = (q.q1 * q.q1 - 4.0 * q.q0 * q.q2).sqrt();
    let plus = -q.q1 + s;
    let minus = -q.q1 - s;
    let big = if plus.norm() >= minus.norm() { plus } else { minus };
    ordered(big / (2.0 * q.q2), 2.0 * q.q0 / big)
}

/// Zeros of `det ω(v)` on every component.
pub fn branch_points(g: &TrivalentGraph, phi: &HiggsField<Complex>) -> Result<BranchData> {
    check_vertex_count(g, phi)?;
    let image = hitchin_image(phi);
    let mut points = Vec::with_capacity(g.vertex_count());
    for (vertex, q) in image.vertex_data.iter().enumerate() {
        if let Some(condition) = component_regularity(q).first() {
            return Err(Error::IrregularDeterminant {
                vertex,
                condition: condition.to_string(),
            });
        }
        points.push(quadratic_roots(q));
    }
    Ok(BranchData { points })
}

/// Unit eigenvector of the trace-free `r` for eigenvalue `mu`, with its
/// largest component real and positive.
pub fn eigenline(r: &Mat2<Complex>, mu: Complex) -> Option<[Complex; 2]> {
    let first = [r.b, mu - r.a];
    let second = [mu + r.a, r.c];
    let size = |v: &[Complex; 2]| v[0].norm_sqr() + v[1].norm_sqr();
    let v = if size(&first) >= size(&second) { first } else { second };
    normalize_line(v)
}

/// Representative of the line through `v` used throughout: unit length,
/// largest component real positive.
pub fn normalize_line(v: [Complex; 2]) -> Option<[Complex; 2]> {
    let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    if n == 0.0 || !n.is_finite() {
        return None;
    }
    let lead = if v[0].norm() >= v[1].norm() { v[0] } else { v[1] };
    let phase = lead.conj() / lead.norm();
    Some([v[0] * phase / n, v[1] * phase / n])
}

/// `|u ∧ v| / (|u||v|)`: zero iff the vectors span the same line.
pub fn line_defect(u: &[Complex; 2], v: &[Complex; 2]) -> f64 {
    let nu = (u[0].norm_sqr() + u[1].norm_sqr()).sqrt();
    let nv = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    (u[0] * v[1] - u[1] * v[0]).norm() / (nu * nv)
}

fn apply(m: &Mat2<Complex>, v: &[Complex; 2]) -> [Complex; 2] {
    [m.a * v[0] + m.b * v[1], m.c * v[0] + m.d * v[1]]
}

/// Eigenlines of one dart's residue matrix for `+λ_e` and `-λ_e`.
#[derive(Clone, Debug, PartialEq)]
pub struct DartLift {
    pub dart: DartId,
    pub plus: [Complex; 2],
    pub minus: [Complex; 2],
}

impl DartLift {
    /// `P diag(λ, -λ) P⁻¹` with `P = [plus | minus]`.
    pub fn residue(&self, lambda: Complex) -> Option<Mat2<Complex>> {
        let p = Mat2::new(self.plus[0], self.minus[0], self.plus[1], self.minus[1]);
        let det = p.det();
        if det.norm() <= 1e-14 {
            return None;
        }
        Some(p.mul(&Mat2::diag(lambda, -lambda)).mul(&p.inverse()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NodeLift {
    pub edge: EdgeId,
    pub lambda: Complex,
    pub source: DartLift,
    pub target: DartLift,
    /// Worst line defect of the gluing `a(s)·(target ±λ) ~ source ∓λ`.
    pub matching_residual: f64,
}

impl NodeLift {
    pub fn lift(&self, d: DartId) -> Option<&DartLift> {
        if self.source.dart == d {
            Some(&self.source)
        } else if self.target.dart == d {
            Some(&self.target)
        } else {
            None
        }
    }
}

fn dart_lift(g: &TrivalentGraph, phi: &HiggsField<Complex>, d: DartId, lambda: Complex) -> Result<DartLift> {
    let r = residue_at_dart(g, phi, d);
    let degenerate = || Error::DegenerateNode { edge: g.edge_of(d) };
    Ok(DartLift {
        dart: d,
        plus: eigenline(&r, lambda).ok_or_else(degenerate)?,
        minus: eigenline(&r, -lambda).ok_or_else(degenerate)?,
    })
}

/// `λ_e`, the eigenlines on both sides of `e`, and the gluing defect.
pub fn node_eigendata(
    g: &TrivalentGraph,
    phi: &HiggsField<Complex>,
    a: &Framing<Complex>,
    e: EdgeId,
) -> Result<NodeLift> {
    check_vertex_count(g, phi)?;
    if e >= g.edge_count() {
        return Err(Error::InvalidInput(format!("edge {e} out of range")));
    }
    let (s, t) = (g.source_dart(e), g.target_dart(e));
    let rs = residue_at_dart(g, phi, s);
    let det = rs.det();
    let size = rs.norm();
    if det.norm() <= DEGENERATE_NODE_TOL * size * size || size == 0.0 {
        return Err(Error::DegenerateNode { edge: e });
    }
    let lambda = (-det).sqrt();
    let source = dart_lift(g, phi, s, lambda)?;
    let target = dart_lift(g, phi, t, lambda)?;
    let frame = a.get(s).matrix();
    let matching_residual = line_defect(&apply(frame, &target.plus), &source.minus)
        .max(line_defect(&apply(frame, &target.minus), &source.plus));
    if !(matching_residual <= NODE_MATCHING_TOL) {
        return Err(Error::MatchingViolated {
            edge: e,
            difference: matching_residual,
        });
    }
    Ok(NodeLift {
        edge: e,
        lambda,
        source,
        target,
        matching_residual,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Sheet {
    /// Joins the `+λ` lift at the source dart to the `-λ` lift at the target.
    Plus,
    /// Joins the `-λ` lift at the source dart to the `+λ` lift at the target.
    Minus,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralNode {
    pub edge: EdgeId,
    pub sheet: Sheet,
    /// `(component, eigenvalue of the residue there)` on the source side.
    pub source: (VertexId, Complex),
    pub target: (VertexId, Complex),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralComponent {
    pub vertex: VertexId,
    /// Fixed points of the sheet swap on this component.
    pub branch: [Complex; 2],
}

#[derive(Clone, Debug)]
pub struct SpectralCurve {
    pub components: Vec<SpectralComponent>,
    /// Node `2e` is `e⁺`, node `2e + 1` is `e⁻`.
    pub nodes: Vec<SpectralNode>,
    pub lifts: Vec<NodeLift>,
    /// Node permutation induced by the sheet swap.
    pub involution: Vec<usize>,
    /// Dual graph edges: the endpoints of every node.
    pub dual_graph: Vec<(VertexId, VertexId)>,
}

impl SpectralCurve {
    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn arithmetic_genus(&self) -> usize {
        self.node_count() + 1 - self.component_count()
    }

    pub fn fixed_point_count(&self) -> usize {
        2 * self.components.len()
    }

    pub fn branch_data(&self) -> BranchData {
        BranchData {
            points: self.components.iter().map(|c| c.branch).collect(),
        }
    }

    /// The involution is a fixed-point-free pairing of nodes over the same base
    /// edge, negates eigenvalues, and the quotient of the dual graph is `g`.
    pub fn quotient_is(&self, g: &TrivalentGraph) -> bool {
        if self.nodes.len() != 2 * g.edge_count() || self.components.len() != g.vertex_count() {
            return false;
        }
        self.nodes.iter().enumerate().all(|(i, n)| {
            let j = self.involution[i];
            let m = &self.nodes[j];
            j != i
                && self.involution[j] == i
                && m.edge == n.edge
                && m.sheet != n.sheet
                && (m.source.1 + n.source.1).norm() <= 1e-12 * n.source.1.norm()
                && self.dual_graph[i] == g.endpoints(n.edge)
                && self.dual_graph[j] == g.endpoints(n.edge)
        })
    }

    /// The spectral curve's own dual graph as a trivalent-style incidence
    /// list: node index → endpoints.
    pub fn dual_edges(&self) -> &[(VertexId, VertexId)] {
        &self.dual_graph
    }
}

pub fn build_spectral_curve(
    g: &TrivalentGraph,
    phi: &HiggsField<Complex>,
    a: &Framing<Complex>,
) -> Result<SpectralCurve> {
    let branch = branch_points(g, phi)?;
    let lifts = (0..g.edge_count())
        .map(|e| node_eigendata(g, phi, a, e))
        .collect::<Result<Vec<_>>>()?;
    let components = branch
        .points
        .iter()
        .enumerate()
        .map(|(vertex, &branch)| SpectralComponent { vertex, branch })
        .collect();
    let mut nodes = Vec::with_capacity(2 * lifts.len());
    let mut involution = Vec::with_capacity(2 * lifts.len());
    let mut dual_graph = Vec::with_capacity(2 * lifts.len());
    for lift in &lifts {
        let (vs, vt) = g.endpoints(lift.edge);
        let l = lift.lambda;
        nodes.push(SpectralNode {
            edge: lift.edge,
            sheet: Sheet::Plus,
            source: (vs, l),
            target: (vt, -l),
        });
        nodes.push(SpectralNode {
            edge: lift.edge,
            sheet: Sheet::Minus,
            source: (vs, -l),
            target: (vt, l),
        });
        let base = involution.len();
        involution.extend([base + 1, base]);
        dual_graph.extend([(vs, vt), (vs, vt)]);
    }
    let curve = SpectralCurve {
        components,
        nodes,
        lifts,
        involution,
        dual_graph,
    };
    if curve.arithmetic_genus() != 4 * g.genus() - 3 || !curve.quotient_is(g) {
        return Err(Error::NumericalFailure(format!(
            "spectral curve has genus {} (expected {}) or a wrong quotient",
            curve.arithmetic_genus(),
            4 * g.genus() - 3
        )));
    }
    Ok(curve)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PrymReport {
    pub b1_base: usize,
    pub b1_spectral: usize,
    pub pullback_rank: usize,
    pub prym_dim: usize,
}

/// Coboundary `C⁰ → C¹` of a graph given by its edge endpoints: row per edge,
/// `+1` at the target vertex, `-1` at the source; loops give zero rows.
pub fn coboundary(vertex_count: usize, edges: &[(VertexId, VertexId)]) -> Matrix<i64> {
    let mut m = Matrix::filled(edges.len(), vertex_count, 0i64);
    for (e, &(s, t)) in edges.iter().enumerate() {
        if s != t {
            m.set(e, s, -1);
            m.set(e, t, 1);
        }
    }
    m
}

/// Endpoints of `e⁺` (index `2e`) and `e⁻` (index `2e + 1`).
pub fn doubled_edges(g: &TrivalentGraph) -> Vec<(VertexId, VertexId)> {
    (0..g.edge_count())
        .flat_map(|e| {
            let ends = g.endpoints(e);
            [ends, ends]
        })
        .collect()
}

/// Cochain maps into the doubled graph: pullback `c ↦ (c, c)` (`sign = 1`)
/// and the anti-invariant embedding `c ↦ (c, -c)` (`sign = -1`).
pub fn doubling_matrix(edge_count: usize, sign: i64) -> Matrix<i64> {
    let mut m = Matrix::filled(2 * edge_count, edge_count, 0i64);
    for e in 0..edge_count {
        m.set(2 * e, e, 1);
        m.set(2 * e + 1, e, sign);
    }
    m
}

/// Rank of `im(m)` in `C¹(doubled) / im δ̃`.
fn rank_modulo_coboundaries(g: &TrivalentGraph, m: &Matrix<i64>) -> usize {
    let delta = coboundary(g.vertex_count(), &doubled_edges(g));
    integer_rank(&delta.hstack(m)) - integer_rank(&delta)
}

/// Ranks of first cohomology of the base and doubled dual graphs and of the
/// pullback between them.
pub fn prym_report(g: &TrivalentGraph) -> PrymReport {
    let (v, e) = (g.vertex_count(), g.edge_count());
    let b1_base = e + 1 - v;
    let b1_spectral = 2 * e + 1 - v;
    let pullback_rank = rank_modulo_coboundaries(g, &doubling_matrix(e, 1));
    PrymReport {
        b1_base,
        b1_spectral,
        pullback_rank,
        prym_dim: b1_spectral - pullback_rank,
    }
}

/// Dimension of the anti-invariant part of `H¹` of the doubled graph.
pub fn anti_invariant_rank(g: &TrivalentGraph) -> usize {
    rank_modulo_coboundaries(g, &doubling_matrix(g.edge_count(), -1))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralLineBundle {
    pub multidegree: Vec<i64>,
    /// One gluing scalar per node, indexed like [`SpectralCurve::nodes`].
    pub gluing: Vec<Complex>,
}

pub fn line_bundle_lphi(s: &SpectralCurve) -> SpectralLineBundle {
    SpectralLineBundle {
        multidegree: vec![1; s.component_count()],
        gluing: vec![Complex::new(1.0, 0.0); s.node_count()],
    }
}

impl SpectralLineBundle {
    /// Number of Prym parameters: one anti-invariant character per base edge.
    pub fn parameter_count(&self) -> usize {
        self.gluing.len() / 2
    }

    /// Multiplies the gluing at `e⁺` by `exp(t_e)` and at `e⁻` by `exp(-t_e)`.
    pub fn twist(&self, params: &[Complex]) -> Result<SpectralLineBundle> {
        if params.len() != self.parameter_count() {
            return Err(Error::InvalidInput(format!(
                "{} twist parameters given, {} expected",
                params.len(),
                self.parameter_count()
            )));
        }
        let mut gluing = self.gluing.clone();
        for (e, t) in params.iter().enumerate() {
            gluing[2 * e] *= t.exp();
            gluing[2 * e + 1] *= (-t).exp();
        }
        Ok(SpectralLineBundle {
            multidegree: self.multidegree.clone(),
            gluing,
        })
    }

    pub fn distance(&self, other: &Self) -> f64 {
        if self.multidegree != other.multidegree || self.gluing.len() != other.gluing.len() {
            return f64::INFINITY;
        }
        self.gluing
            .iter()
            .zip(&other.gluing)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, crate::scalar::nan_max)
    }
}

/// Input to [`reconstruct_higgs`]: node data for every edge, and optionally
/// the branch points the result must reproduce.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralData {
    pub branch: Option<BranchData>,
    pub nodes: Vec<NodeLift>,
}

pub fn spectral_data(g: &TrivalentGraph, phi: &HiggsField<Complex>, a: &Framing<Complex>) -> Result<SpectralData> {
    Ok(SpectralData {
        branch: Some(branch_points(g, phi)?),
        nodes: (0..g.edge_count())
            .map(|e| node_eigendata(g, phi, a, e))
            .collect::<Result<_>>()?,
    })
}

/// Rebuilds every residue matrix as `P diag(λ, -λ) P⁻¹` and reads the field
/// off its residues at 0 and 1.
pub fn reconstruct_higgs(
    g: &TrivalentGraph,
    data: &SpectralData,
    a: &Framing<Complex>,
) -> Result<HiggsField<Complex>> {
    if data.nodes.len() != g.edge_count() {
        return Err(Error::InconsistentSpectralData(format!(
            "{} nodes given for {} edges",
            data.nodes.len(),
            g.edge_count()
        )));
    }
    let mut residues: Vec<Option<Mat2<Complex>>> = vec![None; g.dart_count()];
    for node in &data.nodes {
        let e = node.edge;
        if e >= g.edge_count() || node.source.dart != g.source_dart(e) || node.target.dart != g.target_dart(e) {
            return Err(Error::InconsistentSpectralData(format!(
                "node data for edge {e} names the wrong darts"
            )));
        }
        for lift in [&node.source, &node.target] {
            let r = lift.residue(node.lambda).ok_or_else(|| {
                Error::InconsistentSpectralData(format!("eigenlines at dart {} coincide", lift.dart))
            })?;
            if residues[lift.dart].replace(r).is_some() {
                return Err(Error::InconsistentSpectralData(format!("dart {} given twice", lift.dart)));
            }
        }
    }
    let residues: Vec<Mat2<Complex>> = residues.into_iter().map(|r| r.unwrap_or_else(Mat2::zero)).collect();
    let scale = residues.iter().map(Mat2::norm).fold(0.0, crate::scalar::nan_max).max(f64::MIN_POSITIVE);

    let mut vertex_data = Vec::with_capacity(g.vertex_count());
    for v in 0..g.vertex_count() {
        let [d0, d1, d2] = g.darts_at(v);
        let sum = residues[d0].add(&residues[d1]).add(&residues[d2]);
        if !(sum.norm() <= RECONSTRUCTION_TOL * scale) {
            return Err(Error::InconsistentSpectralData(format!(
                "residues at vertex {v} sum to {:.3e}, not zero",
                sum.norm() / scale
            )));
        }
        vertex_data.push(VertexHiggs::from_residues(&residues[d0], &residues[d1]));
    }
    for (e, &(s, t)) in g.edges().iter().enumerate() {
        let defect = residues[s].add(&a.get(s).conjugate(&residues[t]));
        if !(defect.norm() <= RECONSTRUCTION_TOL * scale) {
            return Err(Error::InconsistentSpectralData(format!(
                "residues across edge {e} do not match ({:.3e})",
                defect.norm() / scale
            )));
        }
    }
    let phi = HiggsField { vertex_data };
    if let Some(expected) = &data.branch {
        branch_points(g, &phi)
            .map_err(|err| Error::InconsistentSpectralData(format!("rebuilt field is irregular: {err}")))?;
        // backward error: roots near a double zero are ill-conditioned, the
        // polynomial values at them are not
        let gap = branch_backward_error(&hitchin_image(&phi).vertex_data, expected, phi.norm());
        if !(gap <= RECONSTRUCTION_TOL) {
            return Err(Error::InconsistentSpectralData(format!(
                "branch points are not zeros of the rebuilt determinant (relative value {gap:.3e})"
            )));
        }
    }
    debug_assert!(higgs_residual(g, &phi, a) <= RECONSTRUCTION_TOL * scale.max(1.0));
    Ok(phi)
}

/// `max |q(z)| / (|q0| + |q1||z| + |q2||z|²)` over the given points of every
/// component, where the coefficient sizes are floored at `field_scale²` so that
/// a component whose determinant nearly cancels is judged against the accuracy
/// of the field itself.
pub fn branch_backward_error(q: &[ComponentQuadratic<Complex>], branch: &BranchData, field_scale: f64) -> f64 {
    let floor = field_scale * field_scale;
    if q.len() != branch.points.len() {
        return f64::INFINITY;
    }
    q.iter()
        .zip(&branch.points)
        .flat_map(|(q, pair)| {
            pair.iter().map(move |z| {
                let r = z.norm();
                let size = q.q0.norm().max(floor) + q.q1.norm().max(floor) * r + q.q2.norm().max(floor) * r * r;
                q.eval(z).norm() / size.max(f64::MIN_POSITIVE)
            })
        })
        .fold(0.0, crate::scalar::nan_max)
}

/// `max |φ - ψ| / max |φ|` over all coordinates.
pub fn relative_error(phi: &HiggsField<Complex>, psi: &HiggsField<Complex>) -> f64 {
    let diff = phi
        .to_vec()
        .iter()
        .zip(psi.to_vec())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, crate::scalar::nan_max);
    diff / phi.norm().max(f64::MIN_POSITIVE)
}

/// A random element of `space` with regular determinant and nondegenerate,
/// well-matched nodes.
pub fn random_regular_higgs_field<R: Rng + ?Sized>(
    g: &TrivalentGraph,
    a: &Framing<Complex>,
    space: &HiggsSpace<Complex>,
    rng: &mut R,
) -> Result<HiggsField<Complex>> {
    const ATTEMPTS: usize = 100;
    for _ in 0..ATTEMPTS {
        let phi = random_higgs_field(g, space, rng);
        if spectral_data(g, &phi, a).is_ok() {
            return Ok(phi);
        }
    }
    Err(Error::GenerationFailed {
        attempts: ATTEMPTS,
        reason: "no regular Higgs field found".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{catalog_graph, random_trivalent, CATALOG};
    use crate::higgs::higgs_space;
    use crate::linalg::rref;
    use crate::mat2::SL2Matrix;
    use crate::scalar::{Rational, Scalar};
    use crate::sections::{ComponentDifferential, GlobalQuadratic};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex {
        Complex::new(re, 0.0)
    }

    fn close(x: Complex, y: Complex) -> bool {
        (x - y).norm() < 1e-12
    }

    fn regular_setup(name: &str, seed: u64) -> (TrivalentGraph, Framing<Complex>, HiggsField<Complex>) {
        let g = catalog_graph(name).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Framing::random(&g, &mut rng);
        let space = higgs_space(&g, &a);
        let phi = random_regular_higgs_field(&g, &a, &space, &mut rng).unwrap();
        (g, a, phi)
    }

    #[test]
    fn quadratic_roots_example() {
        let [z1, z2] = quadratic_roots(&ComponentQuadratic::new(c(-1.0), c(-1.0), c(1.0)));
        assert!(close(z1, c((1.0 + 5f64.sqrt()) / 2.0)));
        assert!(close(z2, c((1.0 - 5f64.sqrt()) / 2.0)));
        // cancellation-prone coefficients still give both roots accurately
        let [z1, z2] = quadratic_roots(&ComponentQuadratic::new(c(1.0), c(-1e8), c(1.0)));
        assert!((z1.re - 1e8).abs() / 1e8 < 1e-15);
        assert!((z2.re - 1e-8).abs() / 1e-8 < 1e-12);
    }

    #[test]
    fn branch_points_examples() {
        let g = catalog_graph("theta").unwrap();
        let q = GlobalQuadratic {
            vertex_data: vec![ComponentQuadratic::new(c(-1.0), c(-1.0), c(1.0)); 2],
        };
        for comp in &q.vertex_data {
            let [z1, z2] = quadratic_roots(comp);
            assert!(close(z1, c(1.618033988749895)));
            assert!(close(z2, c(-0.6180339887498949)));
        }
        let mut diagonal = HiggsField::<Complex>::zero(2);
        for v in &mut diagonal.vertex_data {
            v.w11 = ComponentDifferential::new(c(1.0), c(-1.0));
        }
        match branch_points(&g, &diagonal) {
            Err(Error::IrregularDeterminant { vertex: 0, condition }) => assert!(condition.contains("infinity")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn branch_points_factor_through_image() {
        let (g, _, phi) = regular_setup("theta", 10);
        // -φ has the same determinant
        assert_eq!(branch_points(&g, &phi).unwrap(), branch_points(&g, &phi.neg()).unwrap());
        let b = branch_points(&g, &phi).unwrap();
        for (v, [z1, z2]) in b.points.iter().enumerate() {
            let q = &hitchin_image(&phi).vertex_data[v];
            for z in [z1, z2] {
                assert!(q.eval(z).norm() < 1e-10 * q.norm());
            }
        }
    }

    #[test]
    fn eigenline_examples() {
        let r = Mat2::diag(c(1.0), c(-1.0));
        let lam = (-r.det()).sqrt();
        assert!(close(lam, c(1.0)));
        assert_eq!(eigenline(&r, lam).unwrap(), [c(1.0), c(0.0)]);
        assert_eq!(eigenline(&r, -lam).unwrap(), [c(0.0), c(1.0)]);
        let r = Mat2::new(c(0.0), c(1.0), c(1.0), c(0.0));
        assert!(close((-r.det()).sqrt(), c(1.0)));
        let h = 1.0 / 2f64.sqrt();
        let plus = eigenline(&r, c(1.0)).unwrap();
        let minus = eigenline(&r, c(-1.0)).unwrap();
        assert!(close(plus[0], c(h)) && close(plus[1], c(h)));
        assert!(line_defect(&minus, &[c(1.0), c(-1.0)]) < 1e-15);
    }

    #[test]
    fn node_eigendata_on_theta() {
        let (g, a, phi) = regular_setup("theta", 11);
        for e in 0..3 {
            let lift = node_eigendata(&g, &phi, &a, e).unwrap();
            assert!(lift.matching_residual < 1e-10);
            let rs = residue_at_dart(&g, &phi, g.source_dart(e));
            let rt = residue_at_dart(&g, &phi, g.target_dart(e));
            assert!((lift.lambda * lift.lambda + rs.det()).norm() < 1e-10 * rs.norm().powi(2));
            assert!((lift.lambda * lift.lambda + rt.det()).norm() < 1e-10 * rs.norm().powi(2));
            // principal branch
            assert!(lift.lambda.re > 0.0 || (lift.lambda.re == 0.0 && lift.lambda.im >= 0.0));
        }
    }

    #[test]
    fn degenerate_node() {
        let g = catalog_graph("theta").unwrap();
        let phi = HiggsField::<Complex>::zero(2);
        assert!(matches!(
            node_eigendata(&g, &phi, &Framing::identity(&g), 0),
            Err(Error::DegenerateNode { edge: 0 })
        ));
    }

    #[test]
    fn spectral_curve_bookkeeping() {
        for (name, comps, nodes, genus) in [("theta", 2, 6, 5), ("k4", 4, 12, 9), ("prism", 6, 18, 13)] {
            let (g, a, phi) = regular_setup(name, 12);
            let s = build_spectral_curve(&g, &phi, &a).unwrap();
            assert_eq!((s.component_count(), s.node_count(), s.arithmetic_genus()), (comps, nodes, genus));
            assert_eq!(s.fixed_point_count(), 2 * (2 * g.genus() - 2));
            assert!(s.quotient_is(&g));
            for (i, &j) in s.involution.iter().enumerate() {
                assert!(close(s.nodes[i].source.1, -s.nodes[j].source.1));
            }
        }
    }

    fn rational_rank_mod(g: &TrivalentGraph, sign: i64) -> usize {
        let to_q = |m: &Matrix<i64>| m.map(|&x| Rational::from_i64(x));
        let delta = to_q(&coboundary(g.vertex_count(), &doubled_edges(g)));
        let both = delta.hstack(&to_q(&doubling_matrix(g.edge_count(), sign)));
        let (mut d, mut b) = (delta, both);
        rref(&mut b).len() - rref(&mut d).len()
    }

    #[test]
    fn prym_examples() {
        let theta = catalog_graph("theta").unwrap();
        let r = prym_report(&theta);
        assert_eq!((r.b1_base, r.b1_spectral, r.pullback_rank, r.prym_dim), (2, 5, 2, 3));
        let k4 = catalog_graph("k4").unwrap();
        let r = prym_report(&k4);
        assert_eq!((r.b1_base, r.b1_spectral, r.pullback_rank, r.prym_dim), (3, 9, 3, 6));
        for name in CATALOG {
            let g = catalog_graph(name).unwrap();
            let r = prym_report(&g);
            assert_eq!(r.pullback_rank, rational_rank_mod(&g, 1));
            assert_eq!(anti_invariant_rank(&g), rational_rank_mod(&g, -1));
            assert_eq!(anti_invariant_rank(&g), r.prym_dim);
        }
        for seed in 0..10 {
            let g = random_trivalent(10, seed).unwrap();
            assert_eq!(prym_report(&g).prym_dim, 3 * g.genus() - 3);
        }
    }

    #[test]
    fn line_bundle_examples() {
        let (g, a, phi) = regular_setup("theta", 13);
        let s = build_spectral_curve(&g, &phi, &a).unwrap();
        let l = line_bundle_lphi(&s);
        assert_eq!(l.multidegree, vec![1, 1]);
        assert_eq!(l.twist(&[c(0.0); 3]).unwrap(), l);
        let t1 = [c(0.3), Complex::new(0.1, -0.2), c(-1.0)];
        let t2 = [Complex::new(0.0, 2.0), c(0.5), c(0.25)];
        let sum: Vec<_> = t1.iter().zip(&t2).map(|(x, y)| x + y).collect();
        let composed = l.twist(&t1).unwrap().twist(&t2).unwrap();
        assert!(composed.distance(&l.twist(&sum).unwrap()) < 1e-12);
        assert_eq!(composed.multidegree, vec![1, 1]);
        assert!(l.twist(&[c(0.0); 2]).is_err());
    }

    #[test]
    fn reconstruction_round_trip() {
        for seed in 0..5 {
            let (g, a, phi) = regular_setup("theta", 100 + seed);
            let data = spectral_data(&g, &phi, &a).unwrap();
            let back = reconstruct_higgs(&g, &data, &a).unwrap();
            assert!(relative_error(&phi, &back) < 1e-8);
        }
    }

    #[test]
    fn perturbed_eigenline_is_rejected() {
        let (g, a, phi) = regular_setup("theta", 14);
        let mut data = spectral_data(&g, &phi, &a).unwrap();
        data.nodes[0].source.plus[0] += c(1e-2);
        match reconstruct_higgs(&g, &data, &a) {
            Err(Error::InconsistentSpectralData(msg)) => assert!(msg.contains("vertex"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn moved_branch_point_is_rejected() {
        let (g, a, phi) = regular_setup("theta", 15);
        let mut data = spectral_data(&g, &phi, &a).unwrap();
        assert!(reconstruct_higgs(&g, &data, &a).is_ok());
        data.branch.as_mut().unwrap().points[1][0] += c(1e-3);
        match reconstruct_higgs(&g, &data, &a) {
            Err(Error::InconsistentSpectralData(msg)) => assert!(msg.contains("branch"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn diagonal_field_reconstructs_exactly() {
        let g = catalog_graph("theta").unwrap();
        let mut phi = HiggsField::<Complex>::zero(2);
        for v in &mut phi.vertex_data {
            v.w11 = ComponentDifferential::new(c(1.0), c(-1.0));
        }
        // J swaps the eigenlines of a diagonal matrix, negating it
        let j = SL2Matrix::new(Mat2::new(c(0.0), c(1.0), c(-1.0), c(0.0))).unwrap();
        let a = Framing::from_edges(&g, vec![j.clone(), j, SL2Matrix::identity()]).unwrap();
        assert!(higgs_residual(&g, &phi, &a) == 0.0);
        let x = [c(1.0), c(0.0)];
        let y = [c(0.0), c(1.0)];
        let nodes = (0..3)
            .map(|e| {
                let (s, t) = (g.source_dart(e), g.target_dart(e));
                let rs = residue_at_dart(&g, &phi, s);
                let lambda = (-rs.det()).sqrt();
                // +λ = rs.a on the x axis unless the entry is negative
                let (sp, sm) = if rs.a.re >= 0.0 { (x, y) } else { (y, x) };
                let rt = residue_at_dart(&g, &phi, t);
                let (tp, tm) = if rt.a.re >= 0.0 { (x, y) } else { (y, x) };
                NodeLift {
                    edge: e,
                    lambda,
                    source: DartLift { dart: s, plus: sp, minus: sm },
                    target: DartLift { dart: t, plus: tp, minus: tm },
                    matching_residual: 0.0,
                }
            })
            .collect();
        let data = SpectralData { branch: None, nodes };
        assert_eq!(reconstruct_higgs(&g, &data, &a).unwrap(), phi);
    }
}
