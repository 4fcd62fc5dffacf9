//! The length-`k` mixing function and its differential.
//!
//! A point of the domain is a weight vector `(λ_1, ..., λ_{k−1})` in the
//! simplex `Λ_k` together with a `k × p` grid of one-particle states. The map
//! sends it to `Σ_{j<k} λ_j A_j1⊗⋯⊗A_jp + (1 − Σλ) A_k1⊗⋯⊗A_kp`.

pub(crate) mod jacobian;
mod witness;

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::Exp1;

use crate::error::{invalid, Result};
use crate::herm::{
    is_density, kron_all, sample_density, sample_unit_vector, DensityMatrix, HermitianMatrix,
    SystemShape, TOL_PSD,
};

pub use jacobian::{domain_dim, jacobian, jacobian_fd, jacobian_with_tol, pure_tangents, JacobianReport};
pub use witness::{cokernel_witness, product_witness, ProductWitness};

/// Slack allowed on the simplex constraints.
pub const TOL_WEIGHTS: f64 = 1e-12;
/// Unit-norm tolerance for pure components.
pub const TOL_UNIT: f64 = 1e-12;

/// Which parametrization of the product terms is in use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    /// Components range over all one-particle density matrices.
    General,
    /// Components are pure states `v v†`, parametrized by unit vectors.
    Pure,
}

impl Model {
    pub fn as_str(self) -> &'static str {
        match self {
            Model::General => "general",
            Model::Pure => "pure",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Model {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "general" => Ok(Model::General),
            "pure" => Ok(Model::Pure),
            other => invalid(format!("unknown model '{other}' (expected general|pure)")),
        }
    }
}

fn check_weights(k: usize, weights: &[f64]) -> Result<()> {
    if k == 0 {
        return invalid("ensemble length k must be at least 1");
    }
    if weights.len() != k - 1 {
        return invalid(format!("expected {} weights for k = {k}, got {}", k - 1, weights.len()));
    }
    if let Some((j, w)) = weights.iter().enumerate().find(|(_, w)| !(**w >= -TOL_WEIGHTS)) {
        return invalid(format!("weight λ_{} = {w} is negative", j + 1));
    }
    let sum: f64 = weights.iter().sum();
    if sum > 1.0 + TOL_WEIGHTS {
        return invalid(format!("weights sum to {sum} > 1"));
    }
    Ok(())
}

fn full_weights(weights: &[f64]) -> Vec<f64> {
    let mut w = weights.to_vec();
    w.push(1.0 - weights.iter().sum::<f64>());
    w
}

/// Scales to unit norm and rotates the global phase so the first
/// coordinate with non-negligible modulus is real and positive.
pub fn canonicalize_vector(v: DVector<C64>) -> DVector<C64> {
    let norm = v.norm();
    assert!(norm > 0.0, "cannot canonicalize the zero vector");
    let v = v.unscale(norm);
    let pivot = v.iter().find(|z| z.norm() > 1e-12).copied().unwrap_or(C64::new(1.0, 0.0));
    let phase = pivot.conj() / pivot.norm();
    let mut out = v.map(|z| z * phase);
    if let Some(z) = out.iter_mut().find(|z| z.norm() > 1e-12) {
        z.im = 0.0;
    }
    out
}

/// A point `Q` of the mixing-function domain with density-matrix components.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralEnsemble {
    pub(crate) shape: SystemShape,
    pub(crate) weights: Vec<f64>,
    pub(crate) components: Vec<Vec<DensityMatrix>>,
}

impl GeneralEnsemble {
    /// `components[j][i]` is the state of particle `i` in term `j`.
    pub fn new(
        shape: SystemShape,
        weights: Vec<f64>,
        components: Vec<Vec<DensityMatrix>>,
    ) -> Result<Self> {
        let k = components.len();
        check_weights(k, &weights)?;
        for (j, row) in components.iter().enumerate() {
            if row.len() != shape.particles() {
                return invalid(format!("term {} has {} factors, shape has {}", j + 1, row.len(), shape.particles()));
            }
            for (i, a) in row.iter().enumerate() {
                if a.dim() != shape.dims()[i] {
                    return invalid(format!("component ({},{}) has dim {}, expected {}", j + 1, i + 1, a.dim(), shape.dims()[i]));
                }
                if !is_density(a, TOL_PSD) {
                    return invalid(format!("component ({},{}) is not a density matrix", j + 1, i + 1));
                }
            }
        }
        Ok(Self { shape, weights, components })
    }

    pub fn shape(&self) -> &SystemShape {
        &self.shape
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    /// `λ_1, ..., λ_{k−1}`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// All `k` term weights, the last being `1 − Σλ`.
    pub fn term_weights(&self) -> Vec<f64> {
        full_weights(&self.weights)
    }

    pub fn components(&self) -> &[Vec<DensityMatrix>] {
        &self.components
    }

    /// All `λ_j > 0` and `Σλ_j < 1`.
    pub fn is_interior(&self) -> bool {
        interior(&self.weights)
    }

    /// `A_j1 ⊗ ⋯ ⊗ A_jp` for term `j` (zero-based).
    pub fn term_product(&self, j: usize) -> DMatrix<C64> {
        let f: Vec<&DMatrix<C64>> = self.components[j].iter().map(|a| a.as_matrix()).collect();
        kron_all(&f)
    }

    /// Appends a zero-weight copy of the first term; the mixed state is unchanged.
    pub fn padded(&self) -> Self {
        let mut weights = self.weights.clone();
        weights.push(1.0 - self.weights.iter().sum::<f64>());
        let mut components = self.components.clone();
        components.push(self.components[0].clone());
        Self { shape: self.shape.clone(), weights, components }
    }
}

fn interior(weights: &[f64]) -> bool {
    weights.iter().all(|&w| w > 0.0) && weights.iter().sum::<f64>() < 1.0
}

/// A point of the pure-state domain: weights plus a `k × p` grid of unit
/// vectors, each stored with its first nonzero coordinate real and positive.
#[derive(Debug, Clone, PartialEq)]
pub struct PureEnsemble {
    pub(crate) shape: SystemShape,
    pub(crate) weights: Vec<f64>,
    pub(crate) vectors: Vec<Vec<DVector<C64>>>,
}

impl PureEnsemble {
    pub fn new(
        shape: SystemShape,
        weights: Vec<f64>,
        vectors: Vec<Vec<DVector<C64>>>,
    ) -> Result<Self> {
        let k = vectors.len();
        check_weights(k, &weights)?;
        let mut canon = Vec::with_capacity(k);
        for (j, row) in vectors.into_iter().enumerate() {
            if row.len() != shape.particles() {
                return invalid(format!("term {} has {} factors, shape has {}", j + 1, row.len(), shape.particles()));
            }
            let mut out = Vec::with_capacity(row.len());
            for (i, v) in row.into_iter().enumerate() {
                if v.len() != shape.dims()[i] {
                    return invalid(format!("vector ({},{}) has length {}, expected {}", j + 1, i + 1, v.len(), shape.dims()[i]));
                }
                if (v.norm() - 1.0).abs() > TOL_UNIT {
                    return invalid(format!("vector ({},{}) has norm {}, expected 1", j + 1, i + 1, v.norm()));
                }
                out.push(canonicalize_vector(v));
            }
            canon.push(out);
        }
        Ok(Self { shape, weights, vectors: canon })
    }

    pub fn shape(&self) -> &SystemShape {
        &self.shape
    }

    pub fn k(&self) -> usize {
        self.vectors.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn term_weights(&self) -> Vec<f64> {
        full_weights(&self.weights)
    }

    pub fn vectors(&self) -> &[Vec<DVector<C64>>] {
        &self.vectors
    }

    pub fn is_interior(&self) -> bool {
        interior(&self.weights)
    }

    /// Product vector `v_j1 ⊗ ⋯ ⊗ v_jp` of term `j`.
    pub fn term_vector(&self, j: usize) -> DVector<C64> {
        let (first, rest) = self.vectors[j].split_first().expect("p >= 1");
        rest.iter().fold(first.clone(), |acc, v| acc.kronecker(v))
    }

    /// The same point viewed in the general model, each `v` replaced by `v v†`.
    pub fn to_general(&self) -> GeneralEnsemble {
        let components = self
            .vectors
            .iter()
            .map(|row| {
                row.iter()
                    .map(|v| DensityMatrix::new_unchecked(HermitianMatrix::outer(v)))
                    .collect()
            })
            .collect();
        GeneralEnsemble { shape: self.shape.clone(), weights: self.weights.clone(), components }
    }

    pub fn padded(&self) -> Self {
        let mut weights = self.weights.clone();
        weights.push(1.0 - self.weights.iter().sum::<f64>());
        let mut vectors = self.vectors.clone();
        vectors.push(self.vectors[0].clone());
        Self { shape: self.shape.clone(), weights, vectors }
    }
}

/// Either kind of ensemble. The variant fixes the model used for Jacobians.
#[derive(Debug, Clone, PartialEq)]
pub enum Ensemble {
    General(GeneralEnsemble),
    Pure(PureEnsemble),
}

impl Ensemble {
    pub fn model(&self) -> Model {
        match self {
            Ensemble::General(_) => Model::General,
            Ensemble::Pure(_) => Model::Pure,
        }
    }

    pub fn shape(&self) -> &SystemShape {
        match self {
            Ensemble::General(e) => e.shape(),
            Ensemble::Pure(e) => e.shape(),
        }
    }

    pub fn k(&self) -> usize {
        match self {
            Ensemble::General(e) => e.k(),
            Ensemble::Pure(e) => e.k(),
        }
    }

    pub fn weights(&self) -> &[f64] {
        match self {
            Ensemble::General(e) => e.weights(),
            Ensemble::Pure(e) => e.weights(),
        }
    }

    pub fn is_interior(&self) -> bool {
        interior(self.weights())
    }

    pub fn padded(&self) -> Self {
        match self {
            Ensemble::General(e) => Ensemble::General(e.padded()),
            Ensemble::Pure(e) => Ensemble::Pure(e.padded()),
        }
    }

    /// Random interior point: flat-Dirichlet weights, components from
    /// [`sample_density`] or Haar-random unit vectors.
    pub fn random(shape: &SystemShape, k: usize, model: Model, rng: &mut impl Rng) -> Result<Self> {
        if k == 0 {
            return invalid("ensemble length k must be at least 1");
        }
        let weights = dirichlet_weights(k, rng);
        Ok(match model {
            Model::General => {
                let components = (0..k)
                    .map(|_| shape.dims().iter().map(|&n| sample_density(n, rng)).collect())
                    .collect();
                Ensemble::General(GeneralEnsemble { shape: shape.clone(), weights, components })
            }
            Model::Pure => {
                let vectors = (0..k)
                    .map(|_| shape.dims().iter().map(|&n| sample_unit_vector(n, rng)).collect())
                    .collect();
                Ensemble::Pure(PureEnsemble { shape: shape.clone(), weights, vectors })
            }
        })
    }
}

impl From<GeneralEnsemble> for Ensemble {
    fn from(e: GeneralEnsemble) -> Self {
        Ensemble::General(e)
    }
}

impl From<PureEnsemble> for Ensemble {
    fn from(e: PureEnsemble) -> Self {
        Ensemble::Pure(e)
    }
}

/// First `k − 1` coordinates of a flat Dirichlet draw on the `k`-simplex.
pub fn dirichlet_weights(k: usize, rng: &mut impl Rng) -> Vec<f64> {
    let draws: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = draws.iter().sum();
    draws[..k - 1].iter().map(|x| x / total).collect()
}

/// Mixed state as a raw matrix, no validation.
pub(crate) fn mix_matrix(ens: &Ensemble) -> DMatrix<C64> {
    let n = ens.shape().total();
    let mut out = DMatrix::<C64>::zeros(n, n);
    match ens {
        Ensemble::General(e) => {
            for (j, w) in e.term_weights().into_iter().enumerate() {
                out += e.term_product(j).scale(w);
            }
        }
        Ensemble::Pure(e) => {
            for (j, w) in e.term_weights().into_iter().enumerate() {
                let v = e.term_vector(j);
                out += (&v * v.adjoint()).scale(w);
            }
        }
    }
    out
}

/// `μ_k(Q)`: the convex combination of the ensemble's product terms.
pub fn mix(ens: &Ensemble) -> Result<DensityMatrix> {
    let h = HermitianMatrix::hermitian_part(&mix_matrix(ens));
    DensityMatrix::new(h)
}
