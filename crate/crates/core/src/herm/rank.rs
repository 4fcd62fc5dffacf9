use nalgebra::{ComplexField, DMatrix, SymmetricEigen};

use super::HermitianMatrix;

/// Result of [`numerical_rank`].
#[derive(Debug, Clone, PartialEq)]
pub struct RankInfo {
    pub rank: usize,
    /// Descending.
    pub singular_values: Vec<f64>,
    pub rel_tol: f64,
}

/// Number of singular values above `rel_tol · σ_max`; zero for a zero matrix.
pub fn numerical_rank<T>(m: &DMatrix<T>, rel_tol: f64) -> RankInfo
where
    T: ComplexField<RealField = f64>,
{
    assert!(rel_tol > 0.0, "rel_tol must be positive");
    let mut singular_values = if m.is_empty() {
        Vec::new()
    } else {
        m.clone().svd(false, false).singular_values.as_slice().to_vec()
    };
    singular_values.sort_by(|a, b| b.total_cmp(a));
    let top = singular_values.first().copied().unwrap_or(0.0);
    let rank = if top > 0.0 {
        singular_values.iter().filter(|&&s| s > rel_tol * top).count()
    } else {
        0
    };
    RankInfo { rank, singular_values, rel_tol }
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigenvalues(h: &HermitianMatrix) -> Vec<f64> {
    let mut ev = SymmetricEigen::new(h.as_matrix().clone())
        .eigenvalues
        .as_slice()
        .to_vec();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn min_eigenvalue(h: &HermitianMatrix) -> f64 {
    eigenvalues(h).first().copied().unwrap_or(0.0)
}
