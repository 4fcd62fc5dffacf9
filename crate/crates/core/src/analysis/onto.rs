use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::herm::{herm_coords, kron_all, pure_density_basis, numerical_rank, DensityMatrix, HermitianMatrix, SystemShape, RANK_REL_TOL};
use crate::mixing::{jacobian, Ensemble, GeneralEnsemble, JacobianReport};

/// Knobs for the interiorized spanning basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OntoOptions {
    /// Initial mixing toward the maximally mixed state.
    pub epsilon: f64,
    /// Halvings of `epsilon` tried before giving up.
    pub retries: usize,
    /// Largest accepted condition number of the product Gram matrix.
    pub max_condition: f64,
}

impl Default for OntoOptions {
    fn default() -> Self {
        Self { epsilon: 0.5, retries: 8, max_condition: 1e6 }
    }
}

/// Constructs an interior ensemble at which the differential is onto.
///
/// The first `p − 1` particles run through products of interiorized pure
/// bases `(1 − ε) P + (ε / n) I`, whose tensor products span
/// `Herm(n_1⋯n_{p−1})`; the last particle is always `I / n_p`; every weight
/// is `1/k`. Requires `k ≥ n_1²⋯n_{p−1}²`.
pub fn onto_witness(shape: &SystemShape, k: usize) -> Result<(GeneralEnsemble, JacobianReport)> {
    onto_witness_with(shape, k, OntoOptions::default())
}

pub fn onto_witness_with(
    shape: &SystemShape,
    k: usize,
    opts: OntoOptions,
) -> Result<(GeneralEnsemble, JacobianReport)> {
    let dims = shape.dims();
    let p = dims.len();
    let needed: usize = dims[..p - 1].iter().map(|n| n * n).product();
    if k < needed {
        return invalid(format!(
            "onto witness needs k >= n_1²⋯n_(p-1)² = {needed}, got k = {k}"
        ));
    }
    let mut eps = opts.epsilon;
    let mut last_cond = f64::INFINITY;
    for _ in 0..=opts.retries {
        let bases: Vec<Vec<DensityMatrix>> = dims[..p - 1]
            .iter()
            .map(|&n| interiorized_basis(n, eps))
            .collect::<Result<_>>()?;
        let tuples = index_tuples(&dims[..p - 1]);
        let cond = product_gram_condition(&bases, &tuples);
        last_cond = cond;
        if cond.is_finite() && cond < opts.max_condition {
            let last = DensityMatrix::maximally_mixed(dims[p - 1]);
            let mut components: Vec<Vec<DensityMatrix>> = tuples
                .iter()
                .map(|t| {
                    let mut row: Vec<DensityMatrix> =
                        t.iter().enumerate().map(|(i, &m)| bases[i][m].clone()).collect();
                    row.push(last.clone());
                    row
                })
                .collect();
            while components.len() < k {
                components.push(dims.iter().map(|&n| DensityMatrix::maximally_mixed(n)).collect());
            }
            let weights = vec![1.0 / k as f64; k - 1];
            let ens = GeneralEnsemble::new(shape.clone(), weights, components)?;
            let report = jacobian(&Ensemble::General(ens.clone()));
            if !report.is_onto() {
                return Err(Error::Construction(format!(
                    "differential has rank {} < {} at the constructed point (Gram condition {cond:.3e})",
                    report.rank,
                    report.codomain_dim()
                )));
            }
            return Ok((ens, report));
        }
        eps /= 2.0;
    }
    Err(Error::Construction(format!(
        "product basis numerically deficient after {} retries (Gram condition {last_cond:.3e})",
        opts.retries
    )))
}

fn interiorized_basis(n: usize, eps: f64) -> Result<Vec<DensityMatrix>> {
    let mixed = HermitianMatrix::maximally_mixed(n).scale(eps);
    Ok(pure_density_basis(n)?
        .into_iter()
        .map(|p| DensityMatrix::new_unchecked(p.scale(1.0 - eps).add(&mixed)))
        .collect())
}

/// Mixed-radix enumeration of `(m_1, ..., m_{p−1})`, `m_i < n_i²`, last index fastest.
fn index_tuples(dims: &[usize]) -> Vec<Vec<usize>> {
    dims.iter().fold(vec![Vec::new()], |acc, &n| {
        acc.into_iter()
            .flat_map(|t| {
                (0..n * n).map(move |m| {
                    let mut t = t.clone();
                    t.push(m);
                    t
                })
            })
            .collect()
    })
}

fn product_gram_condition(bases: &[Vec<DensityMatrix>], tuples: &[Vec<usize>]) -> f64 {
    let cols: Vec<_> = tuples
        .iter()
        .map(|t| {
            if t.is_empty() {
                return herm_coords(&DMatrix::identity(1, 1));
            }
            let f: Vec<_> = t.iter().enumerate().map(|(i, &m)| bases[i][m].as_matrix()).collect();
            herm_coords(&kron_all(&f))
        })
        .collect();
    let span = DMatrix::from_columns(&cols);
    let gram = span.transpose() * &span;
    let info = numerical_rank(&gram, RANK_REL_TOL);
    if info.rank < tuples.len() {
        return f64::INFINITY;
    }
    let top = info.singular_values[0];
    let bottom = *info.singular_values.last().expect("non-empty");
    top / bottom
}
