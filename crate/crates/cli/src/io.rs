//! On-disk JSON formats. Complex entries are `[re, im]`; matrices are flat
//! row-major lists.

use serde::{Deserialize, Serialize};

use sepmix::herm::TOL_HERM;
use sepmix::{
    DMatrix, DVector, DensityMatrix, Ensemble, GeneralEnsemble, HermitianMatrix, Model,
    PureEnsemble, SystemShape, C64,
};

use crate::CliError;

pub type Complex = [f64; 2];

/// Sum of the listed term weights may differ from 1 by at most this much.
pub const TOL_WEIGHT_SUM: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub dims: Vec<usize>,
    pub matrix: Vec<Complex>,
}

/// Ensemble file. `weights` lists all `k` term weights. General ensembles fill
/// `components[j][i]` with a flat row-major matrix; pure ones fill
/// `vectors[j][i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleFile {
    pub dims: Vec<usize>,
    pub model: String,
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<Vec<Vec<Complex>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vectors: Option<Vec<Vec<Vec<Complex>>>>,
}

fn c(z: &C64) -> Complex {
    [z.re, z.im]
}

pub fn matrix_to_flat(m: &DMatrix<C64>) -> Vec<Complex> {
    let n = m.nrows();
    (0..n).flat_map(|r| (0..n).map(move |col| (r, col))).map(|(r, col)| c(&m[(r, col)])).collect()
}

pub fn flat_to_matrix(n: usize, flat: &[Complex]) -> Result<DMatrix<C64>, CliError> {
    if flat.len() != n * n {
        return Err(CliError::Argument(format!("matrix has {} entries, expected {}", flat.len(), n * n)));
    }
    Ok(DMatrix::from_fn(n, n, |r, col| {
        let [re, im] = flat[r * n + col];
        C64::new(re, im)
    }))
}

impl StateFile {
    pub fn from_matrix(shape: &SystemShape, m: &HermitianMatrix) -> Self {
        Self { dims: shape.dims().to_vec(), matrix: matrix_to_flat(m.as_matrix()) }
    }

    pub fn shape(&self) -> Result<SystemShape, CliError> {
        Ok(SystemShape::new(self.dims.clone())?)
    }

    /// Parses and validates Hermiticity at `TOL_HERM`.
    pub fn hermitian(&self) -> Result<HermitianMatrix, CliError> {
        let shape = self.shape()?;
        let m = flat_to_matrix(shape.total(), &self.matrix)?;
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(CliError::Argument("matrix has non-finite entries".into()));
        }
        let defect = (&m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if defect > TOL_HERM {
            return Err(CliError::Argument(format!("matrix is not Hermitian (defect {defect:e})")));
        }
        Ok(HermitianMatrix::hermitian_part(&m))
    }

    pub fn density(&self) -> Result<DensityMatrix, CliError> {
        Ok(DensityMatrix::new(self.hermitian()?)?)
    }
}

impl EnsembleFile {
    pub fn from_ensemble(ens: &Ensemble) -> Self {
        let dims = ens.shape().dims().to_vec();
        match ens {
            Ensemble::General(e) => Self {
                dims,
                model: Model::General.to_string(),
                weights: e.term_weights(),
                components: Some(
                    e.components()
                        .iter()
                        .map(|row| row.iter().map(|a| matrix_to_flat(a.as_matrix())).collect())
                        .collect(),
                ),
                vectors: None,
            },
            Ensemble::Pure(e) => Self {
                dims,
                model: Model::Pure.to_string(),
                weights: e.term_weights(),
                components: None,
                vectors: Some(
                    e.vectors().iter().map(|row| row.iter().map(|v| v.iter().map(c).collect()).collect()).collect(),
                ),
            },
        }
    }

    pub fn to_ensemble(&self) -> Result<Ensemble, CliError> {
        let shape = SystemShape::new(self.dims.clone())?;
        let model: Model = self.model.parse()?;
        let k = self.weights.len();
        if k == 0 {
            return Err(CliError::Argument("ensemble has no terms".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > TOL_WEIGHT_SUM {
            return Err(CliError::Argument(format!("term weights sum to {total}, expected 1")));
        }
        let free = self.weights[..k - 1].to_vec();
        let ens = match model {
            Model::General => {
                let rows = self.components.as_ref().ok_or_else(|| CliError::Argument("general ensemble needs `components`".into()))?;
                check_rows(k, rows, &shape)?;
                let comps = rows
                    .iter()
                    .map(|row| {
                        row.iter()
                            .zip(shape.dims())
                            .map(|(flat, &n)| Ok(DensityMatrix::new(HermitianMatrix::new(flat_to_matrix(n, flat)?)?)?))
                            .collect::<Result<Vec<_>, CliError>>()
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ensemble::General(GeneralEnsemble::new(shape, free, comps)?)
            }
            Model::Pure => {
                let rows = self.vectors.as_ref().ok_or_else(|| CliError::Argument("pure ensemble needs `vectors`".into()))?;
                check_rows(k, rows, &shape)?;
                let vecs: Vec<Vec<DVector<C64>>> = rows
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|v| DVector::from_iterator(v.len(), v.iter().map(|&[re, im]| C64::new(re, im))))
                            .collect()
                    })
                    .collect();
                Ensemble::Pure(PureEnsemble::new(shape, free, vecs)?)
            }
        };
        Ok(ens)
    }
}

fn check_rows<T>(k: usize, rows: &[Vec<T>], shape: &SystemShape) -> Result<(), CliError> {
    if rows.len() != k {
        return Err(CliError::Argument(format!("{} weights but {} terms", k, rows.len())));
    }
    if let Some(j) = rows.iter().position(|r| r.len() != shape.particles()) {
        return Err(CliError::Argument(format!("term {} has the wrong number of factors", j + 1)));
    }
    Ok(())
}
