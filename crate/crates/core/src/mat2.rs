//! 2×2 matrices, the traceless coordinates `(x11, x12, x21)` of sl(2), and
//! the unimodular group SL(2).

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::scalar::{Complex, Rational, Scalar};

/// `[[a, b], [c, d]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat2<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
}

impl<T: Scalar> Mat2<T> {
    pub fn new(a: T, b: T, c: T, d: T) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn identity() -> Self {
        Mat2::new(T::one(), T::zero(), T::zero(), T::one())
    }

    pub fn zero() -> Self {
        Mat2::new(T::zero(), T::zero(), T::zero(), T::zero())
    }

    pub fn diag(x: T, y: T) -> Self {
        Mat2::new(x, T::zero(), T::zero(), y)
    }

    /// The traceless matrix with coordinates `(x11, x12, x21)`.
    pub fn traceless(x11: T, x12: T, x21: T) -> Self {
        let d = -x11.clone();
        Mat2::new(x11, x12, x21, d)
    }

    /// Basis of sl(2) in coordinate order: diag(1,-1), E12, E21.
    pub fn sl2_basis() -> [Self; 3] {
        [
            Mat2::traceless(T::one(), T::zero(), T::zero()),
            Mat2::traceless(T::zero(), T::one(), T::zero()),
            Mat2::traceless(T::zero(), T::zero(), T::one()),
        ]
    }

    /// `(x11, x12, x21)`; meaningful for traceless matrices.
    pub fn sl2_coords(&self) -> [T; 3] {
        [self.a.clone(), self.b.clone(), self.c.clone()]
    }

    pub fn entries(&self) -> [&T; 4] {
        [&self.a, &self.b, &self.c, &self.d]
    }

    pub fn mul(&self, o: &Self) -> Self {
        Mat2::new(
            self.a.clone() * o.a.clone() + self.b.clone() * o.c.clone(),
            self.a.clone() * o.b.clone() + self.b.clone() * o.d.clone(),
            self.c.clone() * o.a.clone() + self.d.clone() * o.c.clone(),
            self.c.clone() * o.b.clone() + self.d.clone() * o.d.clone(),
        )
    }

    pub fn add(&self, o: &Self) -> Self {
        Mat2::new(
            self.a.clone() + o.a.clone(),
            self.b.clone() + o.b.clone(),
            self.c.clone() + o.c.clone(),
            self.d.clone() + o.d.clone(),
        )
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(&-T::one()))
    }

    pub fn neg(&self) -> Self {
        self.scale(&-T::one())
    }

    pub fn scale(&self, s: &T) -> Self {
        Mat2::new(
            self.a.clone() * s.clone(),
            self.b.clone() * s.clone(),
            self.c.clone() * s.clone(),
            self.d.clone() * s.clone(),
        )
    }

    pub fn det(&self) -> T {
        self.a.clone() * self.d.clone() - self.b.clone() * self.c.clone()
    }

    pub fn trace(&self) -> T {
        self.a.clone() + self.d.clone()
    }

    pub fn adjugate(&self) -> Self {
        Mat2::new(self.d.clone(), -self.b.clone(), -self.c.clone(), self.a.clone())
    }

    pub fn inverse(&self) -> Self {
        let det = self.det();
        self.adjugate().scale(&(T::one() / det))
    }

    /// Max-entry norm.
    pub fn norm(&self) -> f64 {
        self.entries().iter().map(|x| x.magnitude()).fold(0.0, crate::scalar::nan_max)
    }

    /// Max-entry distance to the identity.
    pub fn distance_to_identity(&self) -> f64 {
        self.sub(&Self::identity()).norm()
    }
}

/// An element of SL(2): determinant exactly one (rational domain) or within
/// [`SL2_DET_TOL`] (float domain).
#[derive(Clone, Debug, PartialEq)]
pub struct SL2Matrix<T>(Mat2<T>);

pub const SL2_DET_TOL: f64 = 1e-12;

impl<T: Scalar> SL2Matrix<T> {
    pub fn new(m: Mat2<T>) -> Result<Self> {
        let off = m.det() - T::one();
        if off.negligible(SL2_DET_TOL, 1.0) {
            Ok(SL2Matrix(m))
        } else {
            Err(Error::NotUnimodular(off.magnitude()))
        }
    }

    pub fn identity() -> Self {
        SL2Matrix(Mat2::identity())
    }

    pub fn matrix(&self) -> &Mat2<T> {
        &self.0
    }

    pub fn into_matrix(self) -> Mat2<T> {
        self.0
    }

    pub fn mul(&self, o: &Self) -> Self {
        SL2Matrix(self.0.mul(&o.0))
    }

    pub fn inverse(&self) -> Self {
        SL2Matrix(self.0.adjugate())
    }

    /// `self · x · self⁻¹`.
    pub fn conjugate(&self, x: &Mat2<T>) -> Mat2<T> {
        self.0.mul(x).mul(&self.0.adjugate())
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.0
            .sub(&Mat2::identity())
            .entries()
            .iter()
            .all(|x| x.negligible(tol, 1.0))
    }

    pub fn trace(&self) -> T {
        self.0.trace()
    }

    /// Elementary lower or upper shear.
    pub fn shear(upper: bool, t: T) -> Self {
        if upper {
            SL2Matrix(Mat2::new(T::one(), t, T::zero(), T::one()))
        } else {
            SL2Matrix(Mat2::new(T::one(), T::zero(), t, T::one()))
        }
    }
}

/// Exponential of a traceless matrix, `cosh(s) I + sinh(s)/s X` with `s² = -det X`.
pub fn exp_sl2(x: &Mat2<Complex>) -> SL2Matrix<Complex> {
    let s = (-x.det()).sqrt();
    let (c, sinhc) = if s.norm() < 1e-4 {
        let s2 = s * s;
        (
            Complex::new(1.0, 0.0) + s2 / 2.0 + s2 * s2 / 24.0,
            Complex::new(1.0, 0.0) + s2 / 6.0 + s2 * s2 / 120.0,
        )
    } else {
        (s.cosh(), s.sinh() / s)
    };
    SL2Matrix(Mat2::identity().scale(&c).add(&x.scale(&sinhc)))
}

/// Random elements of SL(2) in each scalar domain.
pub trait RandomSl2: Scalar {
    fn random_sl2<R: Rng + ?Sized>(rng: &mut R) -> SL2Matrix<Self>;
    /// A random scalar of moderate size, used for random sections and fields.
    fn random_scalar<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

fn small_rational<R: Rng + ?Sized>(rng: &mut R) -> Rational {
    let num = rng.random_range(-4..=4);
    let den = rng.random_range(1..=3);
    Rational::from_ratio(num, den)
}

impl RandomSl2 for Rational {
    /// Product of four alternating shears with small nonzero rational
    /// parameters, resampled until the trace is not ±2: parabolic elements and
    /// ±I form a measure-zero locus on which the Higgs space jumps, and small
    /// rational parameters hit it often.
    fn random_sl2<R: Rng + ?Sized>(rng: &mut R) -> SL2Matrix<Self> {
        let two = Rational::from_i64(2);
        loop {
            let mut m = SL2Matrix::identity();
            for k in 0..4 {
                let t = loop {
                    let t = small_rational(rng);
                    if !t.is_exact_zero() {
                        break t;
                    }
                };
                m = m.mul(&SL2Matrix::shear(k % 2 == 0, t));
            }
            let tr = m.trace();
            if tr != two && tr != -two.clone() {
                return m;
            }
        }
    }

    fn random_scalar<R: Rng + ?Sized>(rng: &mut R) -> Self {
        small_rational(rng)
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex::new(re, im)
}

impl RandomSl2 for Complex {
    /// Gaussian matrix divided by a square root of its determinant.
    fn random_sl2<R: Rng + ?Sized>(rng: &mut R) -> SL2Matrix<Self> {
        loop {
            let m = Mat2::new(gaussian(rng), gaussian(rng), gaussian(rng), gaussian(rng));
            let det = m.det();
            if det.norm() < 1e-3 {
                continue;
            }
            let m = m.scale(&(Complex::new(1.0, 0.0) / det.sqrt()));
            if let Ok(g) = SL2Matrix::new(m) {
                return g;
            }
        }
    }

    fn random_scalar<R: Rng + ?Sized>(rng: &mut R) -> Self {
        gaussian(rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_exact_sl2_has_unit_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let g = Rational::random_sl2(&mut rng);
            assert_eq!(g.matrix().det(), Rational::one());
            assert_eq!(g.mul(&g.inverse()), SL2Matrix::identity());
        }
    }

    #[test]
    fn random_float_sl2_has_unit_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let g = Complex::random_sl2(&mut rng);
            assert!((g.matrix().det() - Complex::one()).norm() < 1e-12);
        }
    }

    #[test]
    fn exp_of_nilpotent_is_shear() {
        let x = Mat2::traceless(Complex::zero(), Complex::new(2.0, 0.0), Complex::zero());
        let e = exp_sl2(&x);
        assert!(e.matrix().sub(&Mat2::new(
            Complex::one(),
            Complex::new(2.0, 0.0),
            Complex::zero(),
            Complex::one()
        ))
        .norm()
            < 1e-15);
    }

    #[test]
    fn exp_of_diagonal() {
        let t = Complex::new(0.3, -0.2);
        let e = exp_sl2(&Mat2::traceless(t, Complex::zero(), Complex::zero()));
        assert!((e.matrix().a - t.exp()).norm() < 1e-14);
        assert!((e.matrix().d - (-t).exp()).norm() < 1e-14);
    }

    #[test]
    fn sl2_rejects_non_unimodular() {
        let m = Mat2::diag(Rational::from_i64(2), Rational::from_i64(1));
        assert!(SL2Matrix::new(m).is_err());
    }
}
