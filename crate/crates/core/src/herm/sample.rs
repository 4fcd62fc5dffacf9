use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{DensityMatrix, HermitianMatrix};

fn complex_gaussian(rng: &mut impl Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Hilbert–Schmidt random density matrix `G G† / tr(G G†)` with `G` a
/// `w × w` matrix of independent standard complex Gaussians.
pub fn sample_density(w: usize, rng: &mut impl Rng) -> DensityMatrix {
    assert!(w >= 1, "dimension must be positive");
    let g = DMatrix::from_fn(w, w, |_, _| complex_gaussian(rng));
    let gg = &g * g.adjoint();
    let h = HermitianMatrix::hermitian_part(&gg);
    let tr = h.trace();
    DensityMatrix::new_unchecked(h.scale(1.0 / tr))
}

/// Haar-uniform unit vector in `C^w`, phase-fixed so that its first nonzero
/// coordinate is real and positive.
pub fn sample_unit_vector(w: usize, rng: &mut impl Rng) -> DVector<C64> {
    assert!(w >= 1, "dimension must be positive");
    let v = DVector::from_fn(w, |_, _| complex_gaussian(rng));
    crate::mixing::canonicalize_vector(v)
}

/// Haar-random pure state `v v†`.
pub fn sample_pure(w: usize, rng: &mut impl Rng) -> DensityMatrix {
    DensityMatrix::new_unchecked(HermitianMatrix::outer(&sample_unit_vector(w, rng)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::herm::{eigenvalues, is_density, numerical_rank};
    use crate::rng::stream_rng;

    #[test]
    fn density_samples_are_full_rank_states() {
        let mut rng = stream_rng(31, 0);
        for _ in 0..100 {
            let rho = sample_density(4, &mut rng);
            assert!((rho.trace() - 1.0).abs() <= 1e-12);
            assert!(eigenvalues(&rho)[0] > 0.0);
        }
        for _ in 0..100 {
            assert!(is_density(&sample_density(6, &mut rng), 1e-10));
        }
    }

    #[test]
    fn samplers_are_deterministic() {
        let a = sample_density(3, &mut stream_rng(5, 9));
        let b = sample_density(3, &mut stream_rng(5, 9));
        assert_eq!(a, b);
        let c = sample_pure(3, &mut stream_rng(5, 9));
        let d = sample_pure(3, &mut stream_rng(5, 9));
        assert_eq!(c, d);
    }

    #[test]
    fn density_mean_approaches_maximally_mixed() {
        let mut rng = stream_rng(32, 0);
        let draws = 10_000;
        let mut acc = DMatrix::<C64>::zeros(2, 2);
        for _ in 0..draws {
            acc += sample_density(2, &mut rng).as_matrix();
        }
        acc /= C64::new(draws as f64, 0.0);
        let target = HermitianMatrix::maximally_mixed(2);
        let dev = HermitianMatrix::from_matrix_unchecked(acc).max_abs_diff(&target);
        assert!(dev <= 0.02, "deviation {dev}");
    }

    #[test]
    fn pure_samples_are_rank_one() {
        let mut rng = stream_rng(33, 0);
        for _ in 0..100 {
            let rho = sample_pure(3, &mut rng);
            assert!((rho.trace() - 1.0).abs() <= 1e-12);
            assert_eq!(numerical_rank(rho.as_matrix(), 1e-8).rank, 1);
        }
    }

    #[test]
    fn unit_vectors_follow_phase_convention() {
        let mut rng = stream_rng(34, 0);
        for _ in 0..20 {
            let v = sample_unit_vector(4, &mut rng);
            assert!((v.norm() - 1.0).abs() < 1e-14);
            assert!(v[0].re > 0.0 && v[0].im == 0.0);
        }
    }
}
