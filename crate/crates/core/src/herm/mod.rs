//! Hermitian-matrix algebra over `C^{n_1} ⊗ ... ⊗ C^{n_p}`.
//!
//! `Herm(w)` is the real vector space of `w × w` Hermitian matrices, with the
//! Hilbert–Schmidt inner product `<A, B> = tr(AB)`. The trace-`r` slice is an
//! affine hyperplane; the traceless slice is its tangent space.

mod basis;
mod rank;
mod sample;

use std::fmt;
use std::ops::Deref;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{invalid, Error, Result};

pub use basis::{
    from_traceless_coords, herm_coords, pure_density_basis, traceless_basis, traceless_coords,
    traceless_coords_into,
};
pub use rank::{eigenvalues, min_eigenvalue, numerical_rank, RankInfo};
pub use sample::{sample_density, sample_pure, sample_unit_vector};

/// Absolute tolerance for Hermiticity.
pub const TOL_HERM: f64 = 1e-10;
/// Absolute tolerance for unit trace.
pub const TOL_TRACE: f64 = 1e-10;
/// Smallest eigenvalue accepted as positive semi-definite is `-TOL_PSD`.
pub const TOL_PSD: f64 = 1e-10;
/// Default relative tolerance for [`numerical_rank`].
pub const RANK_REL_TOL: f64 = 1e-8;

/// Particle dimensions `(n_1, ..., n_p)` of a composite system.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SystemShape {
    dims: Vec<usize>,
}

impl SystemShape {
    pub fn new(dims: impl Into<Vec<usize>>) -> Result<Self> {
        let dims = dims.into();
        if dims.is_empty() {
            return invalid("shape needs at least one particle");
        }
        if let Some(&d) = dims.iter().find(|&&d| d < 2) {
            return invalid(format!("particle dimension {d} < 2"));
        }
        dims.iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .and_then(|n| n.checked_mul(n))
            .ok_or(Error::Overflow("total dimension"))?;
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Number of particles `p`.
    pub fn particles(&self) -> usize {
        self.dims.len()
    }

    /// Total dimension `N = n_1 ⋯ n_p`.
    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    /// Dimension of the traceless space `N² − 1`, the codomain of every Jacobian.
    pub fn codomain_dim(&self) -> usize {
        let n = self.total();
        n * n - 1
    }

    pub fn is_sorted(&self) -> bool {
        self.dims.windows(2).all(|w| w[0] <= w[1])
    }

    /// Dims ascending and the product of all but the last at most the last.
    pub fn dominant_last(&self) -> bool {
        let (last, rest) = self.dims.split_last().expect("non-empty");
        self.is_sorted() && rest.iter().product::<usize>() <= *last
    }
}

impl fmt::Display for SystemShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.dims.iter().map(|d| d.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// A complex Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    m: DMatrix<C64>,
}

impl HermitianMatrix {
    /// Wraps `m` after checking it is square and Hermitian within [`TOL_HERM`].
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if !m.is_square() {
            return invalid(format!("matrix is {}x{}, not square", m.nrows(), m.ncols()));
        }
        let dev = hermiticity_defect(&m);
        if dev > TOL_HERM {
            return invalid(format!("matrix not Hermitian (defect {dev:.3e})"));
        }
        Ok(Self { m })
    }

    /// Wraps `m` as is. The caller guarantees Hermiticity.
    pub fn from_matrix_unchecked(m: DMatrix<C64>) -> Self {
        debug_assert!(m.is_square());
        Self { m }
    }

    /// `(m + m†) / 2`.
    pub fn hermitian_part(m: &DMatrix<C64>) -> Self {
        Self { m: (m + m.adjoint()).scale(0.5) }
    }

    pub fn zeros(w: usize) -> Self {
        Self { m: DMatrix::zeros(w, w) }
    }

    pub fn identity(w: usize) -> Self {
        Self { m: DMatrix::identity(w, w) }
    }

    /// The maximally mixed state `I / w`.
    pub fn maximally_mixed(w: usize) -> Self {
        Self::identity(w).scale(1.0 / w as f64)
    }

    pub fn diag(values: &[f64]) -> Self {
        let d = DVector::from_iterator(values.len(), values.iter().map(|&x| C64::new(x, 0.0)));
        Self { m: DMatrix::from_diagonal(&d) }
    }

    /// The rank-one matrix `v v†`.
    pub fn outer(v: &DVector<C64>) -> Self {
        Self { m: v * v.adjoint() }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.m
    }

    /// Real part of the trace.
    pub fn trace(&self) -> f64 {
        self.m.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { m: self.m.scale(s) }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { m: &self.m + &other.m }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { m: &self.m - &other.m }
    }

    /// Hilbert–Schmidt norm `sqrt(tr(A²))`.
    pub fn hs_norm(&self) -> f64 {
        self.m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.m
            .iter()
            .zip(other.m.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    let w = m.nrows();
    let mut dev = 0.0f64;
    for i in 0..w {
        for j in i..w {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// A density matrix: Hermitian, unit trace, positive semi-definite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(HermitianMatrix);

impl DensityMatrix {
    pub fn new(h: HermitianMatrix) -> Result<Self> {
        let tr = h.trace();
        if (tr - 1.0).abs() > TOL_TRACE {
            return invalid(format!("trace {tr} is not 1"));
        }
        let lo = min_eigenvalue(&h);
        if lo < -TOL_PSD {
            return invalid(format!("not positive semi-definite (min eigenvalue {lo:.3e})"));
        }
        Ok(Self(h))
    }

    pub(crate) fn new_unchecked(h: HermitianMatrix) -> Self {
        Self(h)
    }

    pub fn maximally_mixed(w: usize) -> Self {
        Self(HermitianMatrix::maximally_mixed(w))
    }

    /// Pure state `v v† / |v|²`.
    pub fn pure(v: &DVector<C64>) -> Result<Self> {
        let n = v.norm();
        if n == 0.0 {
            return invalid("zero vector has no pure state");
        }
        Ok(Self(HermitianMatrix::outer(&v.unscale(n))))
    }

    pub fn hermitian(&self) -> &HermitianMatrix {
        &self.0
    }

    pub fn into_hermitian(self) -> HermitianMatrix {
        self.0
    }
}

impl Deref for DensityMatrix {
    type Target = HermitianMatrix;
    fn deref(&self) -> &HermitianMatrix {
        &self.0
    }
}

/// Kronecker product of `factors` in order.
pub fn tensor(factors: &[&HermitianMatrix]) -> Result<HermitianMatrix> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| Error::InvalidArgument("tensor of an empty list".into()))?;
    let m = rest
        .iter()
        .fold(first.m.clone(), |acc, f| acc.kronecker(&f.m));
    Ok(HermitianMatrix { m })
}

/// Kronecker product of raw complex matrices. Panics on an empty slice.
pub(crate) fn kron_all(factors: &[&DMatrix<C64>]) -> DMatrix<C64> {
    let (first, rest) = factors.split_first().expect("non-empty factor list");
    rest.iter().fold((*first).clone(), |acc, f| acc.kronecker(f))
}

/// `A − (tr A / w) I`, the orthogonal projection onto the traceless slice.
pub fn project_traceless(a: &HermitianMatrix) -> HermitianMatrix {
    let w = a.dim();
    let shift = a.trace() / w as f64;
    let mut m = a.m.clone();
    for i in 0..w {
        m[(i, i)] -= C64::new(shift, 0.0);
    }
    HermitianMatrix { m }
}

/// Hilbert–Schmidt inner product `tr(AB)`.
pub fn hs_inner(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), actual: b.dim() });
    }
    Ok(hs_inner_raw(&a.m, &b.m))
}

/// `Re tr(A B)` for equally sized matrices, using `B` Hermitian.
pub(crate) fn hs_inner_raw(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    // tr(AB) = Σ_ij A_ij B_ji = Σ_ij A_ij conj(B_ij) for Hermitian B
    a.iter().zip(b.iter()).map(|(x, y)| (x * y.conj()).re).sum()
}

/// `|tr A − 1| ≤ tol` and smallest eigenvalue `≥ −tol`.
pub fn is_density(a: &HermitianMatrix, tol: f64) -> bool {
    (a.trace() - 1.0).abs() <= tol && min_eigenvalue(a) >= -tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;

    pub(crate) fn random_hermitian(w: usize, rng: &mut impl Rng) -> HermitianMatrix {
        let g = DMatrix::from_fn(w, w, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        HermitianMatrix::hermitian_part(&g)
    }

    fn pauli_x() -> HermitianMatrix {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = C64::new(1.0, 0.0);
        m[(1, 0)] = C64::new(1.0, 0.0);
        HermitianMatrix::new(m).unwrap()
    }

    #[test]
    fn shape_validation() {
        assert!(SystemShape::new(vec![]).is_err());
        assert!(SystemShape::new(vec![2, 1]).is_err());
        let s = SystemShape::new(vec![2, 3]).unwrap();
        assert_eq!(s.total(), 6);
        assert_eq!(s.particles(), 2);
        assert_eq!(s.codomain_dim(), 35);
    }

    #[test]
    fn dominant_last_flag() {
        let yes = [vec![2, 2], vec![2, 3], vec![2, 2, 4], vec![3, 9], vec![5]];
        let no = [vec![3, 2], vec![2, 2, 2], vec![3, 3, 3], vec![2, 4, 3]];
        for d in yes {
            assert!(SystemShape::new(d.clone()).unwrap().dominant_last(), "{d:?}");
        }
        for d in no {
            assert!(!SystemShape::new(d.clone()).unwrap().dominant_last(), "{d:?}");
        }
    }

    #[test]
    fn tensor_of_identities() {
        let h = HermitianMatrix::maximally_mixed(2);
        let t = tensor(&[&h, &h]).unwrap();
        assert!(t.max_abs_diff(&HermitianMatrix::maximally_mixed(4)) < 1e-15);
    }

    #[test]
    fn tensor_of_projectors() {
        let a = HermitianMatrix::diag(&[1.0, 0.0]);
        let b = HermitianMatrix::diag(&[0.0, 1.0]);
        let t = tensor(&[&a, &b]).unwrap();
        assert!(t.max_abs_diff(&HermitianMatrix::diag(&[0.0, 1.0, 0.0, 0.0])) < 1e-15);
    }

    #[test]
    fn tensor_empty_is_error() {
        assert!(matches!(tensor(&[]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn tensor_trace_is_multiplicative() {
        let mut rng = stream_rng(11, 0);
        for _ in 0..50 {
            let a = random_hermitian(3, &mut rng);
            let b = random_hermitian(2, &mut rng);
            let t = tensor(&[&a, &b]).unwrap();
            // direct product of the two traces is the oracle
            let want = a.trace() * b.trace();
            let scale = want.abs().max(1e-3);
            assert!((t.trace() - want).abs() / scale <= 1e-12);
        }
    }

    #[test]
    fn tensor_is_associative() {
        let mut rng = stream_rng(12, 0);
        let a = random_hermitian(2, &mut rng);
        let b = random_hermitian(3, &mut rng);
        let c = random_hermitian(2, &mut rng);
        let left = tensor(&[&tensor(&[&a, &b]).unwrap(), &c]).unwrap();
        let right = tensor(&[&a, &tensor(&[&b, &c]).unwrap()]).unwrap();
        assert!(left.max_abs_diff(&right) <= 1e-14);
        assert!(HermitianMatrix::new(left.into_matrix()).is_ok());
    }

    #[test]
    fn traceless_projection_examples() {
        let z = project_traceless(&HermitianMatrix::maximally_mixed(2));
        assert!(z.max_abs_diff(&HermitianMatrix::zeros(2)) < 1e-16);
        let p = project_traceless(&HermitianMatrix::diag(&[1.0, 0.0]));
        assert!(p.max_abs_diff(&HermitianMatrix::diag(&[0.5, -0.5])) < 1e-16);
    }

    #[test]
    fn traceless_projection_is_idempotent() {
        let mut rng = stream_rng(13, 0);
        for _ in 0..100 {
            let a = random_hermitian(4, &mut rng);
            let once = project_traceless(&a);
            let twice = project_traceless(&once);
            assert!(once.max_abs_diff(&twice) <= 1e-14);
            assert!(once.trace().abs() <= TOL_TRACE);
            let ortho = hs_inner(&once, &HermitianMatrix::identity(4)).unwrap();
            assert!(ortho.abs() <= 1e-12);
        }
    }

    #[test]
    fn hs_inner_examples() {
        let i2 = HermitianMatrix::identity(2);
        assert_eq!(hs_inner(&i2, &i2).unwrap(), 2.0);
        let z = HermitianMatrix::diag(&[1.0, -1.0]);
        assert_eq!(hs_inner(&pauli_x(), &z).unwrap(), 0.0);
        assert!(matches!(
            hs_inner(&i2, &HermitianMatrix::identity(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn hs_inner_is_sum_of_squared_eigenvalues() {
        let mut rng = stream_rng(14, 0);
        for _ in 0..100 {
            let a = random_hermitian(3, &mut rng);
            let ev: f64 = eigenvalues(&a).iter().map(|x| x * x).sum();
            let v = hs_inner(&a, &a).unwrap();
            assert!(v >= 0.0);
            assert!((v - ev).abs() <= 1e-12 * ev.max(1.0));
        }
    }

    #[test]
    fn hs_inner_is_symmetric() {
        let mut rng = stream_rng(15, 0);
        let a = random_hermitian(3, &mut rng);
        let b = random_hermitian(3, &mut rng);
        let ab = hs_inner(&a, &b).unwrap();
        let ba = hs_inner(&b, &a).unwrap();
        assert!((ab - ba).abs() < 1e-14);
        let direct = (a.as_matrix() * b.as_matrix()).trace();
        assert!((direct.re - ab).abs() < 1e-13 && direct.im.abs() < 1e-13);
    }

    #[test]
    fn density_checks() {
        assert!(is_density(&HermitianMatrix::maximally_mixed(4), 1e-10));
        assert!(!is_density(&HermitianMatrix::diag(&[2.0, -1.0]), 1e-10));
        assert!(DensityMatrix::new(HermitianMatrix::diag(&[2.0, -1.0])).is_err());
        assert!(DensityMatrix::new(HermitianMatrix::diag(&[0.5, 0.6])).is_err());
        assert!(DensityMatrix::new(HermitianMatrix::diag(&[0.25, 0.75])).is_ok());
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = C64::new(1.0, 0.0);
        assert!(HermitianMatrix::new(m).is_err());
        assert!(HermitianMatrix::new(DMatrix::zeros(2, 3)).is_err());
    }
}
