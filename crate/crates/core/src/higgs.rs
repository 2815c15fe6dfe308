//! Higgs fields on a framed bundle: per-vertex traceless matrices of
//! differentials subject to the residue-matrix matching on every edge,
//! `R_s + a(d) R_t a(d)⁻¹ = 0`.
//!
//! A field stores `(w11, w12, w21)` per vertex with `w22 = -w11`. Columns of
//! every assembled system are ordered vertex-major as
//! `(w11.r0, w11.r1, w12.r0, w12.r1, w21.r0, w21.r1)`; rows are edge-major in
//! sl(2) coordinates `(x11, x12, x21)`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::framed::{flat_linearization, zero_section, Framing, GaugeTransform};
use crate::graph::{DartId, MarkedPoint, TrivalentGraph, VertexId};
use crate::linalg::Matrix;
use crate::mat2::{Mat2, RandomSl2};
use crate::scalar::Scalar;
use crate::sections::{residue_coefficients, ComponentDifferential};

/// Relative residual tolerance for float-domain Higgs fields.
pub const HIGGS_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct VertexHiggs<T> {
    pub w11: ComponentDifferential<T>,
    pub w12: ComponentDifferential<T>,
    pub w21: ComponentDifferential<T>,
}

impl<T: Scalar> VertexHiggs<T> {
    pub fn zero() -> Self {
        VertexHiggs {
            w11: ComponentDifferential::zero(),
            w12: ComponentDifferential::zero(),
            w21: ComponentDifferential::zero(),
        }
    }

    pub fn residue_matrix(&self, p: MarkedPoint) -> Mat2<T> {
        Mat2::traceless(self.w11.residue(p), self.w12.residue(p), self.w21.residue(p))
    }

    /// The field whose residue matrices at 0 and 1 are `r0` and `r1`.
    pub fn from_residues(r0: &Mat2<T>, r1: &Mat2<T>) -> Self {
        let [a0, b0, c0] = r0.sl2_coords();
        let [a1, b1, c1] = r1.sl2_coords();
        VertexHiggs {
            w11: ComponentDifferential::new(a0, a1),
            w12: ComponentDifferential::new(b0, b1),
            w21: ComponentDifferential::new(c0, c1),
        }
    }

    fn coords(&self) -> [T; 6] {
        [
            self.w11.r0.clone(),
            self.w11.r1.clone(),
            self.w12.r0.clone(),
            self.w12.r1.clone(),
            self.w21.r0.clone(),
            self.w21.r1.clone(),
        ]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HiggsField<T> {
    pub vertex_data: Vec<VertexHiggs<T>>,
}

impl<T: Scalar> HiggsField<T> {
    pub fn zero(vertex_count: usize) -> Self {
        HiggsField {
            vertex_data: vec![VertexHiggs::zero(); vertex_count],
        }
    }

    pub fn from_vec(v: &[T]) -> Self {
        HiggsField {
            vertex_data: v
                .chunks(6)
                .map(|c| VertexHiggs {
                    w11: ComponentDifferential::new(c[0].clone(), c[1].clone()),
                    w12: ComponentDifferential::new(c[2].clone(), c[3].clone()),
                    w21: ComponentDifferential::new(c[4].clone(), c[5].clone()),
                })
                .collect(),
        }
    }

    pub fn to_vec(&self) -> Vec<T> {
        self.vertex_data.iter().flat_map(VertexHiggs::coords).collect()
    }

    pub fn add(&self, o: &Self) -> Self {
        let v: Vec<T> = self
            .to_vec()
            .into_iter()
            .zip(o.to_vec())
            .map(|(x, y)| x + y)
            .collect();
        Self::from_vec(&v)
    }

    pub fn scale(&self, s: &T) -> Self {
        let v: Vec<T> = self.to_vec().into_iter().map(|x| x * s.clone()).collect();
        Self::from_vec(&v)
    }

    pub fn neg(&self) -> Self {
        self.scale(&-T::one())
    }

    /// Max-entry norm of the coefficient vector.
    pub fn norm(&self) -> f64 {
        self.to_vec().iter().map(Scalar::magnitude).fold(0.0, crate::scalar::nan_max)
    }

    /// Linear combination `Σ c_k basis_k`.
    pub fn combination(basis: &[Self], coefficients: &[T], vertex_count: usize) -> Self {
        basis
            .iter()
            .zip(coefficients)
            .fold(Self::zero(vertex_count), |acc, (b, c)| acc.add(&b.scale(c)))
    }

    pub fn map_domain<U: Scalar>(&self, f: impl Fn(&T) -> U) -> HiggsField<U> {
        HiggsField::from_vec(&self.to_vec().iter().map(f).collect::<Vec<_>>())
    }
}

/// Entrywise residues of the matrix of differentials at `p`.
pub fn residue_matrix<T: Scalar>(phi: &HiggsField<T>, v: VertexId, p: MarkedPoint) -> Mat2<T> {
    phi.vertex_data[v].residue_matrix(p)
}

pub fn residue_at_dart<T: Scalar>(g: &TrivalentGraph, phi: &HiggsField<T>, d: DartId) -> Mat2<T> {
    residue_matrix(phi, g.vertex_of(d), g.marked_point(d))
}

/// The `(9g-9) × (12g-12)` residue-matrix constraint system of a framing.
#[derive(Clone, Debug, PartialEq)]
pub struct HiggsConstraintSystem<T> {
    pub matrix: Matrix<T>,
}

/// Adds `coef · M` (in sl(2) coordinates) for every column of vertex `v`'s
/// residue at marked point `p`, where `M` is the image of the column's basis
/// matrix under `transform`.
fn add_residue_block<T: Scalar>(
    m: &mut Matrix<T>,
    row0: usize,
    v: VertexId,
    p: MarkedPoint,
    transform: &dyn Fn(&Mat2<T>) -> Mat2<T>,
) {
    let coefs = residue_coefficients(p);
    for (entry, basis) in Mat2::<T>::sl2_basis().iter().enumerate() {
        let image = transform(basis);
        for (k, &c) in coefs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let col = 6 * v + 2 * entry + k;
            for (i, x) in image.sl2_coords().into_iter().enumerate() {
                m.add_to(row0 + i, col, x * T::from_i64(c));
            }
        }
    }
}

/// Assembles one row block per edge; `reverse` orients every edge from its
/// higher dart instead of its lower one.
pub fn assemble_higgs_constraints_oriented<T: Scalar>(
    g: &TrivalentGraph,
    a: &Framing<T>,
    reverse: bool,
) -> HiggsConstraintSystem<T> {
    let mut m = Matrix::zeros(3 * g.edge_count(), 6 * g.vertex_count());
    for (e, &(s, t)) in g.edges().iter().enumerate() {
        let (s, t) = if reverse { (t, s) } else { (s, t) };
        let frame = a.get(s).clone();
        add_residue_block(&mut m, 3 * e, g.vertex_of(s), g.marked_point(s), &|x| x.clone());
        add_residue_block(&mut m, 3 * e, g.vertex_of(t), g.marked_point(t), &|x| frame.conjugate(x));
    }
    HiggsConstraintSystem { matrix: m }
}

pub fn assemble_higgs_constraints<T: Scalar>(g: &TrivalentGraph, a: &Framing<T>) -> HiggsConstraintSystem<T> {
    assemble_higgs_constraints_oriented(g, a, false)
}

#[derive(Clone, Debug)]
pub struct HiggsSpace<T> {
    pub basis: Vec<HiggsField<T>>,
    pub dimension: usize,
    pub constraint_rank: usize,
}

pub fn higgs_space<T: Scalar>(g: &TrivalentGraph, a: &Framing<T>) -> HiggsSpace<T> {
    let system = assemble_higgs_constraints(g, a);
    let kernel = T::kernel(&system.matrix);
    HiggsSpace {
        dimension: kernel.dimension(),
        constraint_rank: kernel.rank,
        basis: kernel.basis.iter().map(|v| HiggsField::from_vec(v)).collect(),
    }
}

/// `R_s + a(d) R_t a(d)⁻¹` for every dart `d`, indexed by dart.
pub fn constraint_defects<T: Scalar>(g: &TrivalentGraph, phi: &HiggsField<T>, a: &Framing<T>) -> Vec<Mat2<T>> {
    g.darts()
        .iter()
        .map(|d| {
            let rs = residue_at_dart(g, phi, d.id);
            let rt = residue_at_dart(g, phi, d.partner);
            rs.add(&a.get(d.id).conjugate(&rt))
        })
        .collect()
}

/// `max` over oriented edges of `‖R_s + a R_t a⁻¹‖` (max entry).
pub fn higgs_residual<T: Scalar>(g: &TrivalentGraph, phi: &HiggsField<T>, a: &Framing<T>) -> f64 {
    constraint_defects(g, phi, a)
        .iter()
        .map(Mat2::norm)
        .fold(0.0, crate::scalar::nan_max)
}

/// Whether `phi` satisfies the constraints of `a`: exactly in the rational
/// domain, to [`HIGGS_TOL`] relative to the field norm in the float domain.
pub fn is_higgs_field<T: Scalar>(g: &TrivalentGraph, phi: &HiggsField<T>, a: &Framing<T>) -> bool {
    first_defective_dart(g, phi, a).is_none()
}

/// The first dart whose constraint defect is not negligible.
pub fn first_defective_dart<T: Scalar>(g: &TrivalentGraph, phi: &HiggsField<T>, a: &Framing<T>) -> Option<DartId> {
    let scale = phi.norm() * a.edge_values(g).iter().map(|m| m.matrix().norm().powi(2)).fold(1.0, crate::scalar::nan_max);
    constraint_defects(g, phi, a)
        .iter()
        .position(|m| m.entries().iter().any(|x| !x.negligible(HIGGS_TOL, scale)))
}

/// Conjugates the matrix of differentials at each vertex by `g(v)`.
pub fn gauge_transform_higgs<T: Scalar>(gauge: &GaugeTransform<T>, phi: &HiggsField<T>) -> HiggsField<T> {
    HiggsField {
        vertex_data: phi
            .vertex_data
            .iter()
            .enumerate()
            .map(|(v, h)| {
                let gv = gauge.at(v);
                let r0 = gv.conjugate(&h.residue_matrix(MarkedPoint::Zero));
                let r1 = gv.conjugate(&h.residue_matrix(MarkedPoint::One));
                VertexHiggs::from_residues(&r0, &r1)
            })
            .collect(),
    }
}

/// A random element of `higgs_space(a)`.
pub fn random_higgs_field<T: RandomSl2, R: Rng + ?Sized>(
    g: &TrivalentGraph,
    space: &HiggsSpace<T>,
    rng: &mut R,
) -> HiggsField<T> {
    let coefficients: Vec<T> = (0..space.dimension).map(|_| T::random_scalar(rng)).collect();
    HiggsField::combination(&space.basis, &coefficients, g.vertex_count())
}

/// The residue parameterization of Higgs fields by one traceless matrix `X_e`
/// per edge, placed at the source dart, with `-a(σd) X_e a(σd)⁻¹` at the
/// target dart; the per-vertex residue sums must vanish.
#[derive(Clone, Debug)]
pub struct ResidueParameterization<T> {
    /// `(6g-6) × (9g-9)`: rows vertex-major, columns edge-major, both in
    /// sl(2) coordinates.
    pub system: Matrix<T>,
    /// `(12g-12) × (9g-9)`: edge parameters to Higgs field coordinates.
    pub to_higgs: Matrix<T>,
    pub parameter_kernel_dim: usize,
    pub higgs_dim: usize,
    pub connecting_rank: usize,
    pub matches_flat_linearization: bool,
}

impl<T: Scalar> ResidueParameterization<T> {
    pub fn is_isomorphism(&self) -> bool {
        self.parameter_kernel_dim == self.higgs_dim && self.connecting_rank == self.higgs_dim
    }
}

/// Residue matrix at dart `d` contributed by the unit parameter `basis` on
/// edge `e`.
fn dart_residue_for_parameter<T: Scalar>(
    g: &TrivalentGraph,
    a: &Framing<T>,
    d: DartId,
    basis: &Mat2<T>,
) -> Mat2<T> {
    let e = g.edge_of(d);
    if d == g.source_dart(e) {
        basis.clone()
    } else {
        a.get(d).conjugate(basis).neg()
    }
}

pub fn residue_parameterization<T: Scalar>(g: &TrivalentGraph, a: &Framing<T>) -> ResidueParameterization<T> {
    let n_params = 3 * g.edge_count();
    let mut system = Matrix::zeros(3 * g.vertex_count(), n_params);
    let mut to_higgs = Matrix::zeros(6 * g.vertex_count(), n_params);
    for (e, &(s, t)) in g.edges().iter().enumerate() {
        for (j, x) in Mat2::<T>::sl2_basis().iter().enumerate() {
            let col = 3 * e + j;
            for d in [s, t] {
                let v = g.vertex_of(d);
                let r = dart_residue_for_parameter(g, a, d, x);
                for (i, c) in r.sl2_coords().into_iter().enumerate() {
                    system.add_to(3 * v + i, col, c.clone());
                    // residues at 0 and 1 are the field's coordinates
                    match g.marked_point(d) {
                        MarkedPoint::Zero => to_higgs.add_to(6 * v + 2 * i, col, c),
                        MarkedPoint::One => to_higgs.add_to(6 * v + 2 * i + 1, col, c),
                        MarkedPoint::Infinity => {}
                    }
                }
            }
        }
    }
    let param_kernel = T::kernel(&system);
    let higgs = higgs_space(g, a);
    let image = Matrix::from_columns(
        &param_kernel
            .basis
            .iter()
            .map(|k| to_higgs.mul_vec(k))
            .collect::<Vec<_>>(),
        6 * g.vertex_count(),
    );
    let connecting_rank = if param_kernel.basis.is_empty() { 0 } else { image.rank() };
    let linearization = flat_linearization(g, &zero_section(g, a));
    ResidueParameterization {
        matches_flat_linearization: linearization == system,
        parameter_kernel_dim: param_kernel.dimension(),
        higgs_dim: higgs.dimension,
        connecting_rank,
        system,
        to_higgs,
    }
}

/// Residue matrices of the three darts at every vertex sum to zero.
pub fn vertex_sum_residual<T: Scalar>(g: &TrivalentGraph, phi: &HiggsField<T>) -> f64 {
    (0..g.vertex_count())
        .map(|v| {
            MarkedPoint::ALL
                .iter()
                .fold(Mat2::zero(), |acc, &p| acc.add(&residue_matrix(phi, v, p)))
                .norm()
        })
        .fold(0.0, crate::scalar::nan_max)
}

pub(crate) fn check_vertex_count<T>(g: &TrivalentGraph, phi: &HiggsField<T>) -> Result<()> {
    if phi.vertex_data.len() == g.vertex_count() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "Higgs field has {} vertices, graph has {}",
            phi.vertex_data.len(),
            g.vertex_count()
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::framed::apply_gauge;
    use crate::graph::catalog_graph;
    use crate::scalar::{Complex, Rational};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q(n: i64) -> Rational {
        Rational::from_i64(n)
    }

    fn diagonal_field(n: usize) -> HiggsField<Rational> {
        let mut phi = HiggsField::zero(n);
        for v in &mut phi.vertex_data {
            v.w11 = ComponentDifferential::new(q(1), q(-1));
        }
        phi
    }

    #[test]
    fn residue_matrix_examples() {
        let phi = diagonal_field(2);
        assert_eq!(residue_matrix(&phi, 0, MarkedPoint::Zero), Mat2::diag(q(1), q(-1)));
        assert_eq!(residue_matrix(&phi, 0, MarkedPoint::Infinity), Mat2::zero());
        let zero = HiggsField::<Rational>::zero(2);
        for p in MarkedPoint::ALL {
            assert_eq!(residue_matrix(&zero, 1, p), Mat2::zero());
        }
    }

    #[test]
    fn residue_matrices_sum_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let g = catalog_graph("k4").unwrap();
        for _ in 0..50 {
            let v: Vec<Rational> = (0..24).map(|_| Rational::random_scalar(&mut rng)).collect();
            assert_eq!(vertex_sum_residual(&g, &HiggsField::from_vec(&v)), 0.0);
        }
    }

    #[test]
    fn constraint_rank_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let theta = catalog_graph("theta").unwrap();
        let sys = assemble_higgs_constraints(&theta, &Framing::<Rational>::identity(&theta));
        assert_eq!((sys.matrix.rows(), sys.matrix.cols()), (9, 12));
        assert_eq!(sys.matrix.rank(), 6);
        let a = Framing::<Rational>::random(&theta, &mut rng);
        assert_eq!(assemble_higgs_constraints(&theta, &a).matrix.rank(), 9);
        let k4 = catalog_graph("k4").unwrap();
        let a = Framing::<Rational>::random(&k4, &mut rng);
        let sys = assemble_higgs_constraints(&k4, &a);
        assert_eq!((sys.matrix.rows(), sys.matrix.cols()), (18, 24));
        assert_eq!(sys.matrix.rank(), 18);
        let k33 = catalog_graph("k33").unwrap();
        let a = Framing::<Rational>::random(&k33, &mut rng);
        let sys = assemble_higgs_constraints(&k33, &a);
        assert_eq!((sys.matrix.rows(), sys.matrix.cols()), (27, 36));
        assert_eq!(sys.matrix.rank(), 27);
    }

    #[test]
    fn higgs_space_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let theta = catalog_graph("theta").unwrap();
        let a = Framing::<Rational>::random(&theta, &mut rng);
        let space = higgs_space(&theta, &a);
        assert_eq!(space.dimension, 3);
        for phi in &space.basis {
            assert_eq!(higgs_residual(&theta, phi, &a), 0.0);
        }
        let k4 = catalog_graph("k4").unwrap();
        assert_eq!(higgs_space(&k4, &Framing::<Rational>::random(&k4, &mut rng)).dimension, 6);
        assert_eq!(higgs_space(&theta, &Framing::<Rational>::identity(&theta)).dimension, 6);
    }

    #[test]
    fn residual_of_non_kernel_field() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = catalog_graph("theta").unwrap();
        let a = Framing::<Rational>::random(&g, &mut rng);
        assert_eq!(higgs_residual(&g, &HiggsField::zero(2), &a), 0.0);
        assert!(higgs_residual(&g, &diagonal_field(2), &a) > 0.0);
    }

    #[test]
    fn gauge_examples() {
        let g = catalog_graph("theta").unwrap();
        let phi = diagonal_field(2);
        assert_eq!(gauge_transform_higgs(&GaugeTransform::identity(&g), &phi), phi);
        let w = crate::mat2::SL2Matrix::new(Mat2::new(q(0), q(1), q(-1), q(0))).unwrap();
        let gauge = GaugeTransform {
            values: vec![w.clone(), w],
        };
        assert_eq!(gauge_transform_higgs(&gauge, &phi), phi.neg());
    }

    #[test]
    fn gauge_equivariance_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = catalog_graph("k4").unwrap();
        for _ in 0..5 {
            let a = Framing::<Rational>::random(&g, &mut rng);
            let gauge = GaugeTransform::random(&g, &mut rng);
            let phi = random_higgs_field(&g, &higgs_space(&g, &a), &mut rng);
            let moved = gauge_transform_higgs(&gauge, &phi);
            assert_eq!(higgs_residual(&g, &moved, &apply_gauge(&g, &gauge, &a)), 0.0);
        }
    }

    #[test]
    fn constraint_defects_transform_by_conjugation() {
        // for arbitrary fields the defect at d moves to g(v_s) · defect · g(v_s)⁻¹,
        // so vanishing of the residual is gauge invariant
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = catalog_graph("dumbbell").unwrap();
        let a = Framing::<Rational>::random(&g, &mut rng);
        let gauge = GaugeTransform::random(&g, &mut rng);
        let v: Vec<Rational> = (0..12).map(|_| Rational::random_scalar(&mut rng)).collect();
        let phi = HiggsField::from_vec(&v);
        let before = constraint_defects(&g, &phi, &a);
        let after = constraint_defects(&g, &gauge_transform_higgs(&gauge, &phi), &apply_gauge(&g, &gauge, &a));
        for d in g.darts() {
            assert_eq!(after[d.id], gauge.at(d.vertex).conjugate(&before[d.id]));
        }
        assert!(higgs_residual(&g, &phi, &a) > 0.0);
    }

    #[test]
    fn float_domain_kernel_and_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = catalog_graph("theta").unwrap();
        let a = Framing::<Complex>::random(&g, &mut rng);
        let gauge = GaugeTransform::random(&g, &mut rng);
        let space = higgs_space(&g, &a);
        assert_eq!(space.dimension, 3);
        let phi = random_higgs_field(&g, &space, &mut rng);
        assert!(is_higgs_field(&g, &phi, &a));
        let moved = gauge_transform_higgs(&gauge, &phi);
        assert!(is_higgs_field(&g, &moved, &apply_gauge(&g, &gauge, &a)));
    }

    #[test]
    fn orientation_independence() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for name in ["theta", "dumbbell", "k4"] {
            let g = catalog_graph(name).unwrap();
            let a = Framing::<Rational>::random(&g, &mut rng);
            let fwd = assemble_higgs_constraints_oriented(&g, &a, false).matrix;
            let rev = assemble_higgs_constraints_oriented(&g, &a, true).matrix;
            let kf = Rational::kernel(&fwd);
            assert_eq!(kf.rank, rev.rank());
            for v in &kf.basis {
                assert!(rev.mul_vec(v).iter().all(|x| *x == q(0)));
            }
        }
    }

    #[test]
    fn residue_parameterization_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let theta = catalog_graph("theta").unwrap();
        let rp = residue_parameterization(&theta, &Framing::<Rational>::random(&theta, &mut rng));
        assert_eq!((rp.parameter_kernel_dim, rp.higgs_dim, rp.connecting_rank), (3, 3, 3));
        assert!(rp.matches_flat_linearization);
        let rp = residue_parameterization(&theta, &Framing::<Rational>::identity(&theta));
        assert_eq!((rp.parameter_kernel_dim, rp.higgs_dim), (6, 6));
        assert!(rp.is_isomorphism());
        let k4 = catalog_graph("k4").unwrap();
        let rp = residue_parameterization(&k4, &Framing::<Rational>::random(&k4, &mut rng));
        assert!(rp.is_isomorphism() && rp.matches_flat_linearization);
        assert_eq!((rp.system.rows(), rp.system.cols()), (12, 18));
    }
}
