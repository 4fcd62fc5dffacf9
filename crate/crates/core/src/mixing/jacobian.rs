use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::{canonicalize_vector, mix_matrix, Ensemble, GeneralEnsemble, Model, PureEnsemble};
use crate::error::{invalid, Result};
use crate::herm::{
    kron_all, numerical_rank, traceless_basis, traceless_coords_into, DensityMatrix,
    HermitianMatrix, SystemShape, RANK_REL_TOL,
};

/// The assembled differential of the mixing function at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianReport {
    pub model: Model,
    pub shape: SystemShape,
    pub k: usize,
    /// `(N² − 1) × domain_dim`, rows in orthonormal traceless coordinates.
    pub matrix: DMatrix<f64>,
    pub rank: usize,
    /// Descending.
    pub singular_values: Vec<f64>,
    pub rel_tol: f64,
}

impl JacobianReport {
    pub fn domain_dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn codomain_dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// The differential is onto the traceless space.
    pub fn is_onto(&self) -> bool {
        self.rank == self.codomain_dim()
    }
}

/// `(k − 1) + k Σ(n_i² − 1)` for the general model, `(k − 1) + k Σ(2n_i − 2)`
/// for the pure model.
pub fn domain_dim(shape: &SystemShape, k: usize, model: Model) -> usize {
    let per_term: usize = match model {
        Model::General => shape.dims().iter().map(|n| n * n - 1).sum(),
        Model::Pure => shape.dims().iter().map(|n| 2 * n - 2).sum(),
    };
    k - 1 + k * per_term
}

/// Real tangent directions of `CP(n − 1)` at the unit vector `v`:
/// `w_1, i·w_1, w_2, i·w_2, ...` for an orthonormal completion `{w_m}` of `v`.
///
/// The completion is Gram–Schmidt over the standard basis with the
/// coordinate of largest `|v_m|` left out.
pub fn pure_tangents(v: &DVector<C64>) -> Vec<DVector<C64>> {
    let n = v.len();
    let skip = (0..n)
        .max_by(|&a, &b| v[a].norm().total_cmp(&v[b].norm()))
        .expect("non-empty vector");
    let mut frame: Vec<DVector<C64>> = vec![v.clone()];
    for m in (0..n).filter(|&m| m != skip) {
        let mut e = DVector::<C64>::zeros(n);
        e[m] = C64::new(1.0, 0.0);
        // two passes of modified Gram–Schmidt
        for _ in 0..2 {
            for u in &frame {
                let c = u.dotc(&e);
                e -= u * c;
            }
        }
        let nrm = e.norm();
        frame.push(e.unscale(nrm));
    }
    let i = C64::new(0.0, 1.0);
    frame[1..]
        .iter()
        .flat_map(|w| [w.clone(), w * i])
        .collect()
}

fn identity1() -> DMatrix<C64> {
    DMatrix::identity(1, 1)
}

/// For each particle `i`, `(A_1 ⊗ ⋯ ⊗ A_{i−1}, A_{i+1} ⊗ ⋯ ⊗ A_p)`.
fn prefix_suffix(factors: &[&DMatrix<C64>]) -> Vec<(DMatrix<C64>, DMatrix<C64>)> {
    let p = factors.len();
    (0..p)
        .map(|i| {
            let pre = if i == 0 { identity1() } else { kron_all(&factors[..i]) };
            let suf = if i + 1 == p { identity1() } else { kron_all(&factors[i + 1..]) };
            (pre, suf)
        })
        .collect()
}

/// Raw Jacobian matrix, without the rank analysis.
pub(crate) fn jacobian_matrix(ens: &Ensemble) -> DMatrix<f64> {
    let shape = ens.shape();
    let n = shape.total();
    let rows = n * n - 1;
    let k = ens.k();
    let dim = domain_dim(shape, k, ens.model());
    let mut out = DMatrix::<f64>::zeros(rows, dim);

    let (factors, directions): (Vec<Vec<DMatrix<C64>>>, Vec<Vec<Vec<DMatrix<C64>>>>) = match ens {
        Ensemble::General(e) => general_parts(e),
        Ensemble::Pure(e) => pure_parts(e),
    };
    let weights: Vec<f64> = match ens {
        Ensemble::General(e) => e.term_weights(),
        Ensemble::Pure(e) => e.term_weights(),
    };

    let products: Vec<DMatrix<C64>> = factors
        .iter()
        .map(|row| kron_all(&row.iter().collect::<Vec<_>>()))
        .collect();
    for j in 0..k - 1 {
        let diff = &products[j] - &products[k - 1];
        traceless_coords_into(&diff, out.column_mut(j).as_mut_slice());
    }

    // one block of columns per (term, particle), filled independently
    let mut blocks: Vec<(usize, usize, usize)> = Vec::new();
    let mut col = k - 1;
    for (j, dirs_j) in directions.iter().enumerate() {
        for (i, dirs) in dirs_j.iter().enumerate() {
            blocks.push((j, i, col));
            col += dirs.len();
        }
    }
    debug_assert_eq!(col, dim);
    let filled: Vec<(usize, Vec<f64>)> = blocks
        .iter()
        .map(|&(j, i, start)| {
            let refs: Vec<&DMatrix<C64>> = factors[j].iter().collect();
            let (pre, suf) = prefix_suffix(&refs).swap_remove(i);
            let dirs = &directions[j][i];
            let mut data = vec![0.0; rows * dirs.len()];
            for (c, h) in dirs.iter().enumerate() {
                let img = pre.kronecker(h).kronecker(&suf).scale(weights[j]);
                traceless_coords_into(&img, &mut data[c * rows..(c + 1) * rows]);
            }
            (start, data)
        })
        .collect();
    for (start, data) in filled {
        for (c, chunk) in data.chunks(rows).enumerate() {
            out.column_mut(start + c).copy_from_slice(chunk);
        }
    }
    out
}

type Parts = (Vec<Vec<DMatrix<C64>>>, Vec<Vec<Vec<DMatrix<C64>>>>);

fn general_parts(e: &GeneralEnsemble) -> Parts {
    let bases: Vec<Vec<DMatrix<C64>>> = e
        .shape
        .dims()
        .iter()
        .map(|&n| traceless_basis(n).expect("n >= 2").into_iter().map(|b| b.into_matrix()).collect())
        .collect();
    let factors = e
        .components
        .iter()
        .map(|row| row.iter().map(|a| a.as_matrix().clone()).collect())
        .collect();
    let directions = e.components.iter().map(|_| bases.clone()).collect();
    (factors, directions)
}

fn pure_parts(e: &PureEnsemble) -> Parts {
    let factors = e
        .vectors
        .iter()
        .map(|row| row.iter().map(|v| v * v.adjoint()).collect())
        .collect();
    let directions = e
        .vectors
        .iter()
        .map(|row| {
            row.iter()
                .map(|v| {
                    pure_tangents(v)
                        .iter()
                        .map(|d| d * v.adjoint() + v * d.adjoint())
                        .collect()
                })
                .collect()
        })
        .collect();
    (factors, directions)
}

/// Differential of `μ_k` (general model) or of `μ_k ∘ ι` (pure model),
/// applied to each canonical domain direction.
///
/// Column order: the `k − 1` weight directions, then for each term `j` and
/// particle `i` (row-major) the component directions, which are the
/// Gell-Mann matrices of `traceless_basis(n_i)` in the general model and
/// [`pure_tangents`] in the pure model.
pub fn jacobian(ens: &Ensemble) -> JacobianReport {
    jacobian_with_tol(ens, RANK_REL_TOL)
}

pub fn jacobian_with_tol(ens: &Ensemble, rel_tol: f64) -> JacobianReport {
    let matrix = jacobian_matrix(ens);
    let info = numerical_rank(&matrix, rel_tol);
    JacobianReport {
        model: ens.model(),
        shape: ens.shape().clone(),
        k: ens.k(),
        matrix,
        rank: info.rank,
        singular_values: info.singular_values,
        rel_tol,
    }
}

/// Central-difference approximation of [`jacobian`], same column convention.
///
/// Weight steps shrink to half the distance to the simplex boundary when
/// `step` would cross it.
pub fn jacobian_fd(ens: &Ensemble, step: f64) -> Result<DMatrix<f64>> {
    if !(step > 0.0) {
        return invalid(format!("finite-difference step must be positive, got {step}"));
    }
    if !ens.is_interior() {
        return invalid("finite differences need an interior ensemble (all λ > 0, Σλ < 1)");
    }
    let shape = ens.shape();
    let n = shape.total();
    let rows = n * n - 1;
    let k = ens.k();
    let dim = domain_dim(shape, k, ens.model());
    let mut out = DMatrix::<f64>::zeros(rows, dim);

    let mut central = |col: usize, plus: Ensemble, minus: Ensemble, h: f64| {
        let d = (mix_matrix(&plus) - mix_matrix(&minus)).unscale(2.0 * h);
        traceless_coords_into(&d, out.column_mut(col).as_mut_slice());
    };

    let weights = ens.weights().to_vec();
    let slack = 1.0 - weights.iter().sum::<f64>();
    for j in 0..k - 1 {
        let h = step.min(weights[j] / 2.0).min(slack / 2.0);
        let shifted = |s: f64| {
            let mut w = weights.clone();
            w[j] += s;
            with_weights(ens, w)
        };
        central(j, shifted(h), shifted(-h), h);
    }

    let mut col = k - 1;
    match ens {
        Ensemble::General(e) => {
            let bases: Vec<Vec<HermitianMatrix>> =
                shape.dims().iter().map(|&n| traceless_basis(n).expect("n >= 2")).collect();
            for j in 0..k {
                for i in 0..shape.particles() {
                    for b in &bases[i] {
                        let moved = |s: f64| {
                            let mut c = e.clone();
                            let a = c.components[j][i].add(&b.scale(s));
                            c.components[j][i] = DensityMatrix::new_unchecked(a);
                            Ensemble::General(c)
                        };
                        central(col, moved(step), moved(-step), step);
                        col += 1;
                    }
                }
            }
        }
        Ensemble::Pure(e) => {
            for j in 0..k {
                for i in 0..shape.particles() {
                    let v = &e.vectors[j][i];
                    for d in pure_tangents(v) {
                        let moved = |s: f64| {
                            let mut c = e.clone();
                            c.vectors[j][i] = canonicalize_vector(v + d.scale(s));
                            Ensemble::Pure(c)
                        };
                        central(col, moved(step), moved(-step), step);
                        col += 1;
                    }
                }
            }
        }
    }
    debug_assert_eq!(col, dim);
    Ok(out)
}

fn with_weights(ens: &Ensemble, weights: Vec<f64>) -> Ensemble {
    match ens {
        Ensemble::General(e) => Ensemble::General(GeneralEnsemble { weights, ..e.clone() }),
        Ensemble::Pure(e) => Ensemble::Pure(PureEnsemble { weights, ..e.clone() }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::herm::{from_traceless_coords, hs_inner};
    use crate::rng::stream_rng;

    fn shape(d: &[usize]) -> SystemShape {
        SystemShape::new(d.to_vec()).unwrap()
    }

    #[test]
    fn single_term_has_no_weight_columns() {
        let s = shape(&[2, 2]);
        let mut rng = stream_rng(51, 0);
        let ens = Ensemble::random(&s, 1, Model::General, &mut rng).unwrap();
        let r = jacobian(&ens);
        assert_eq!(r.matrix.ncols(), 6);
        assert_eq!(r.matrix.nrows(), 15);
        for c in 0..6 {
            let col = r.matrix.column(c);
            let img = from_traceless_coords(4, col.as_slice());
            let tr = hs_inner(&img, &HermitianMatrix::identity(4)).unwrap();
            assert!(tr.abs() <= 1e-12);
        }
    }

    #[test]
    fn domain_dims() {
        let s = shape(&[2, 2]);
        assert_eq!(domain_dim(&s, 3, Model::Pure), 14);
        assert_eq!(domain_dim(&s, 3, Model::General), 20);
        let mut rng = stream_rng(52, 0);
        let ens = Ensemble::random(&s, 3, Model::Pure, &mut rng).unwrap();
        let r = jacobian(&ens);
        assert_eq!(r.domain_dim(), 14);
        assert!(r.rank <= 14);
    }

    #[test]
    fn tangents_are_orthonormal_and_orthogonal_to_v() {
        let mut rng = stream_rng(53, 0);
        for n in 2..6 {
            let v = crate::herm::sample_unit_vector(n, &mut rng);
            let t = pure_tangents(&v);
            assert_eq!(t.len(), 2 * n - 2);
            for d in &t {
                assert!(v.dotc(d).norm() <= 1e-12);
                assert!((d.norm() - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn analytic_matches_finite_differences() {
        let mut rng = stream_rng(54, 0);
        for (dims, k) in [(&[2, 2][..], 3), (&[2, 3][..], 2), (&[2, 2, 2][..], 2)] {
            for model in [Model::General, Model::Pure] {
                let ens = Ensemble::random(&shape(dims), k, model, &mut rng).unwrap();
                let a = jacobian(&ens).matrix;
                let f = jacobian_fd(&ens, 1e-5).unwrap();
                let dev = (a - f).amax();
                assert!(dev <= 1e-6, "{dims:?} k={k} {model}: {dev}");
            }
        }
    }

    #[test]
    fn fd_needs_interior_and_positive_step() {
        let s = shape(&[2, 2]);
        let mut rng = stream_rng(55, 0);
        let ens = Ensemble::random(&s, 2, Model::General, &mut rng).unwrap();
        assert!(jacobian_fd(&ens, 0.0).is_err());
        let Ensemble::General(mut e) = ens else { unreachable!() };
        e.weights = vec![0.0];
        assert!(jacobian_fd(&Ensemble::General(e), 1e-5).is_err());
    }

    #[test]
    fn doubling_a_direction_doubles_its_column() {
        // the differential is linear in V: the image of 2H is exactly twice that of H
        let s = shape(&[2, 2]);
        let mut rng = stream_rng(56, 0);
        let Ensemble::General(e) = Ensemble::random(&s, 2, Model::General, &mut rng).unwrap() else {
            unreachable!()
        };
        let j = jacobian(&Ensemble::General(e.clone())).matrix;
        let basis = traceless_basis(2).unwrap();
        let w = e.term_weights()[0];
        let h2 = basis[1].scale(2.0);
        let direct = h2.as_matrix().kronecker(e.components[0][1].as_matrix()).scale(w);
        let coords = crate::herm::traceless_coords(&direct);
        let col = j.column(1 + 1);
        assert_eq!(coords, col.scale(2.0));
    }

    #[test]
    fn k1_fd_has_no_weight_block() {
        let s = shape(&[2, 2]);
        let mut rng = stream_rng(57, 0);
        let ens = Ensemble::random(&s, 1, Model::Pure, &mut rng).unwrap();
        assert_eq!(jacobian_fd(&ens, 1e-5).unwrap().ncols(), 4);
        assert_eq!(jacobian(&ens).matrix.ncols(), 4);
    }
}
