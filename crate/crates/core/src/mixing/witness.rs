use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::{jacobian, Ensemble, GeneralEnsemble, JacobianReport};
use crate::herm::{
    from_traceless_coords, herm_coords, numerical_rank, traceless_coords, HermitianMatrix,
    RANK_REL_TOL,
};

/// Unit vector orthogonal to every column of `cols` (`dim` rows), taken from
/// the left singular vector of the smallest singular value. `None` when the
/// columns have full row rank at `rel_tol`.
pub(crate) fn left_null_vector(cols: &DMatrix<f64>, rel_tol: f64) -> Option<DVector<f64>> {
    let m = cols.nrows();
    if m == 0 {
        return None;
    }
    if numerical_rank(cols, rel_tol).rank >= m {
        return None;
    }
    // pad to at least m columns so the SVD yields a full m × m left factor
    let width = cols.ncols().max(m);
    let mut padded = DMatrix::<f64>::zeros(m, width);
    padded.columns_mut(0, cols.ncols()).copy_from(cols);
    let svd = padded.svd(true, false);
    let u = svd.u.expect("left factor requested");
    let idx = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("m > 0");
    let v = u.column(idx).into_owned();
    let n = v.norm();
    Some(v.unscale(n))
}

/// A unit-norm traceless `W` orthogonal to the image of the differential, or
/// `None` when the differential is onto.
pub fn cokernel_witness(ens: &Ensemble) -> Option<HermitianMatrix> {
    witness_from_report(&jacobian(ens))
}

pub(crate) fn witness_from_report(report: &JacobianReport) -> Option<HermitianMatrix> {
    if report.is_onto() {
        return None;
    }
    let n = report.shape.total();
    let u = left_null_vector(&report.matrix, report.rel_tol)?;
    Some(from_traceless_coords(n, u.as_slice()))
}

/// Product-form cokernel element `B ⊗ C`.
///
/// The first `p − 1` particles are grouped into one factor of dimension
/// `n_1⋯n_{p−1}`. One factor lies in the full Hermitian space and is
/// orthogonal to every term's component there; the other is traceless and
/// orthogonal to the traceless parts of the other side's components.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductWitness {
    pub left: HermitianMatrix,
    pub right: HermitianMatrix,
    /// `left ⊗ right`, unit Hilbert–Schmidt norm.
    pub product: HermitianMatrix,
}

fn from_herm_coords(w: usize, c: &DVector<f64>) -> HermitianMatrix {
    let tl = from_traceless_coords(w, &c.as_slice()[..w * w - 1]);
    let id = HermitianMatrix::identity(w).scale(c[w * w - 1] / (w as f64).sqrt());
    tl.add(&id)
}

/// Searches for a [`ProductWitness`] at a general-model ensemble. Needs at
/// least two particles.
pub fn product_witness(ens: &GeneralEnsemble) -> Option<ProductWitness> {
    let dims = ens.shape().dims();
    let p = dims.len();
    if p < 2 {
        return None;
    }
    let left_dim: usize = dims[..p - 1].iter().product();
    let right_dim = dims[p - 1];
    let lefts: Vec<DMatrix<C64>> = ens
        .components()
        .iter()
        .map(|row| {
            let f: Vec<&DMatrix<C64>> = row[..p - 1].iter().map(|a| a.as_matrix()).collect();
            crate::herm::kron_all(&f)
        })
        .collect();
    let rights: Vec<&DMatrix<C64>> = ens.components().iter().map(|row| row[p - 1].as_matrix()).collect();

    let full = |ms: &[&DMatrix<C64>], w: usize| {
        let cols: Vec<DVector<f64>> = ms.iter().map(|m| herm_coords(m)).collect();
        let mat = DMatrix::from_columns(&cols);
        left_null_vector(&mat, RANK_REL_TOL).map(|u| from_herm_coords(w, &u))
    };
    let traceless = |ms: &[&DMatrix<C64>], w: usize| {
        let cols: Vec<DVector<f64>> = ms.iter().map(|m| traceless_coords(m)).collect();
        let mat = DMatrix::from_columns(&cols);
        left_null_vector(&mat, RANK_REL_TOL).map(|u| from_traceless_coords(w, u.as_slice()))
    };
    let left_refs: Vec<&DMatrix<C64>> = lefts.iter().collect();

    let pair = full(&left_refs, left_dim)
        .zip(traceless(&rights, right_dim))
        .or_else(|| traceless(&left_refs, left_dim).zip(full(&rights, right_dim)))?;
    let (left, right) = pair;
    let prod = left.as_matrix().kronecker(right.as_matrix());
    let product = HermitianMatrix::from_matrix_unchecked(prod);
    let norm = product.hs_norm();
    Some(ProductWitness { left, right, product: product.scale(1.0 / norm) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::herm::{hs_inner, project_traceless, SystemShape};
    use crate::mixing::Model;
    use crate::rng::stream_rng;

    #[test]
    fn witness_is_orthogonal_to_every_column() {
        let shape = SystemShape::new(vec![2, 2]).unwrap();
        let mut rng = stream_rng(61, 0);
        for model in [Model::General, Model::Pure] {
            let ens = Ensemble::random(&shape, 3, model, &mut rng).unwrap();
            let report = jacobian(&ens);
            assert!(report.rank < 15);
            let w = cokernel_witness(&ens).expect("deficient");
            assert!(w.trace().abs() < 1e-12);
            assert!((w.hs_norm() - 1.0).abs() < 1e-12);
            for c in 0..report.matrix.ncols() {
                let col = from_traceless_coords(4, report.matrix.column(c).as_slice());
                assert!(hs_inner(&w, &col).unwrap().abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn product_witness_for_small_k() {
        let shape = SystemShape::new(vec![2, 3]).unwrap();
        let mut rng = stream_rng(62, 0);
        let Ensemble::General(e) = Ensemble::random(&shape, 3, Model::General, &mut rng).unwrap() else {
            unreachable!()
        };
        assert!(cokernel_witness(&Ensemble::General(e.clone())).is_some());
        let pw = product_witness(&e).expect("k < n_1^2");
        for row in e.components() {
            assert!(hs_inner(&pw.left, &row[0]).unwrap().abs() < 1e-10);
            let proj = project_traceless(&row[1]);
            assert!(hs_inner(&pw.right, &proj).unwrap().abs() < 1e-10);
        }
        assert!(pw.right.trace().abs() < 1e-12);
        let report = jacobian(&Ensemble::General(e));
        let coords = traceless_coords(pw.product.as_matrix());
        assert!(pw.product.trace().abs() < 1e-12);
        let resid = report.matrix.transpose() * coords;
        assert!(resid.amax() <= 1e-8);
    }

    #[test]
    fn no_product_witness_when_both_sides_span() {
        let shape = SystemShape::new(vec![2, 2]).unwrap();
        let mut rng = stream_rng(63, 0);
        let Ensemble::General(e) = Ensemble::random(&shape, 5, Model::General, &mut rng).unwrap() else {
            unreachable!()
        };
        assert!(product_witness(&e).is_none());
    }
}
