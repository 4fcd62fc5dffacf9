use std::f64::consts::SQRT_2;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::{DensityMatrix, HermitianMatrix};
use crate::error::{invalid, Result};

/// Generalized Gell-Mann matrices spanning the traceless `w × w` Hermitian
/// matrices.
///
/// Order: symmetric pairs `E_ij + E_ji` (i < j, lexicographic), then
/// antisymmetric pairs `−i E_ij + i E_ji`, then the diagonal ladder
/// `sqrt(2/(l(l+1))) (Σ_{m<l} E_mm − l E_ll)` for `l = 1..w−1`. Every element
/// has Hilbert–Schmidt norm `√2`; they are mutually orthogonal.
pub fn traceless_basis(w: usize) -> Result<Vec<HermitianMatrix>> {
    if w < 2 {
        return invalid(format!("traceless basis needs w >= 2, got {w}"));
    }
    let mut out = Vec::with_capacity(w * w - 1);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    for (a, b) in pairs(w) {
        let mut m = DMatrix::zeros(w, w);
        m[(a, b)] = one;
        m[(b, a)] = one;
        out.push(HermitianMatrix::from_matrix_unchecked(m));
    }
    for (a, b) in pairs(w) {
        let mut m = DMatrix::zeros(w, w);
        m[(a, b)] = -i;
        m[(b, a)] = i;
        out.push(HermitianMatrix::from_matrix_unchecked(m));
    }
    for l in 1..w {
        let c = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut m = DMatrix::zeros(w, w);
        for k in 0..l {
            m[(k, k)] = C64::new(c, 0.0);
        }
        m[(l, l)] = C64::new(-c * l as f64, 0.0);
        out.push(HermitianMatrix::from_matrix_unchecked(m));
    }
    Ok(out)
}

fn pairs(w: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..w).flat_map(move |a| (a + 1..w).map(move |b| (a, b)))
}

/// Coordinates of `m` against the orthonormalized [`traceless_basis`]
/// (each element divided by `√2`). The trace component is discarded.
pub fn traceless_coords(m: &DMatrix<C64>) -> DVector<f64> {
    let w = m.nrows();
    let mut out = DVector::zeros(w * w - 1);
    traceless_coords_into(m, out.as_mut_slice());
    out
}

/// In-place form of [`traceless_coords`]; `out.len()` must be `w² − 1`.
pub fn traceless_coords_into(m: &DMatrix<C64>, out: &mut [f64]) {
    let w = m.nrows();
    debug_assert_eq!(out.len(), w * w - 1);
    let npairs = w * (w - 1) / 2;
    // <(E_ab + E_ba)/√2, M> = √2 Re M_ab ; <(−iE_ab + iE_ba)/√2, M> = −√2 Im M_ab
    for (idx, (a, b)) in pairs(w).enumerate() {
        let z = 0.5 * (m[(a, b)] + m[(b, a)].conj());
        out[idx] = SQRT_2 * z.re;
        out[npairs + idx] = -SQRT_2 * z.im;
    }
    let mut prefix = 0.0;
    for l in 1..w {
        prefix += m[(l - 1, l - 1)].re;
        let c = (1.0 / (l * (l + 1)) as f64).sqrt();
        out[2 * npairs + l - 1] = c * (prefix - l as f64 * m[(l, l)].re);
    }
}

/// Inverse of [`traceless_coords`] on the traceless subspace.
pub fn from_traceless_coords(w: usize, coords: &[f64]) -> HermitianMatrix {
    assert_eq!(coords.len(), w * w - 1, "coordinate length");
    let npairs = w * (w - 1) / 2;
    let mut m = DMatrix::<C64>::zeros(w, w);
    for (idx, (a, b)) in pairs(w).enumerate() {
        let z = C64::new(coords[idx], -coords[npairs + idx]) / SQRT_2;
        m[(a, b)] = z;
        m[(b, a)] = z.conj();
    }
    for l in 1..w {
        let c = coords[2 * npairs + l - 1] * (1.0 / (l * (l + 1)) as f64).sqrt();
        for k in 0..l {
            m[(k, k)] += C64::new(c, 0.0);
        }
        m[(l, l)] -= C64::new(c * l as f64, 0.0);
    }
    HermitianMatrix::from_matrix_unchecked(m)
}

/// Coordinates of `m` in the orthonormal basis of `Herm(w)`: the `w² − 1`
/// traceless coordinates followed by the component along `I / √w`.
pub fn herm_coords(m: &DMatrix<C64>) -> DVector<f64> {
    let w = m.nrows();
    let mut out = DVector::zeros(w * w);
    traceless_coords_into(m, &mut out.as_mut_slice()[..w * w - 1]);
    let tr: f64 = m.diagonal().iter().map(|z| z.re).sum();
    out[w * w - 1] = tr / (w as f64).sqrt();
    out
}

/// `w²` pure states whose projectors span `Herm(w)`: `|i⟩` for each `i`, then
/// `(|a⟩ + |b⟩)/√2` and `(|a⟩ + i|b⟩)/√2` for each pair `a < b`.
pub fn pure_density_basis(w: usize) -> Result<Vec<DensityMatrix>> {
    if w < 2 {
        return invalid(format!("pure density basis needs w >= 2, got {w}"));
    }
    Ok(pure_basis_vectors(w)
        .iter()
        .map(|v| DensityMatrix::new_unchecked(HermitianMatrix::outer(v)))
        .collect())
}

pub(crate) fn pure_basis_vectors(w: usize) -> Vec<DVector<C64>> {
    let mut out = Vec::with_capacity(w * w);
    for a in 0..w {
        let mut v = DVector::zeros(w);
        v[a] = C64::new(1.0, 0.0);
        out.push(v);
    }
    let s = 1.0 / SQRT_2;
    for phase in [C64::new(s, 0.0), C64::new(0.0, s)] {
        for (a, b) in pairs(w) {
            let mut v = DVector::zeros(w);
            v[a] = C64::new(s, 0.0);
            v[b] = phase;
            out.push(v);
        }
    }
    out
}
