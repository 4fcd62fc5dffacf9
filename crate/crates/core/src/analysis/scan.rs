use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::herm::SystemShape;
use crate::mixing::{domain_dim, jacobian, Ensemble, Model};
use crate::parallel::with_workers;
use crate::rng::stream_rng;

/// Jacobian ranks at random interior points of one domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    pub shape: SystemShape,
    pub k: usize,
    pub model: Model,
    pub samples: usize,
    pub seed: u64,
    /// Rank at sample `i`, in sample order.
    pub ranks: Vec<usize>,
    pub max_rank: usize,
    pub min_rank: usize,
    pub domain_dim: usize,
    pub codomain_dim: usize,
    pub full_rank_fraction: f64,
}

/// Sample `index` of a scan seeded with `seed`.
pub fn scan_sample(shape: &SystemShape, k: usize, model: Model, seed: u64, index: u64) -> Result<Ensemble> {
    Ensemble::random(shape, k, model, &mut stream_rng(seed, index))
}

/// Draws `samples` interior ensembles and records the rank of the
/// differential at each. Output depends only on the arguments, not on
/// `workers`.
pub fn criticality_scan(
    shape: &SystemShape,
    k: usize,
    model: Model,
    samples: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<ScanReport> {
    if samples == 0 {
        return invalid("scan needs at least one sample");
    }
    if k == 0 {
        return invalid("ensemble length k must be at least 1");
    }
    let ranks: Vec<usize> = with_workers(workers, || {
        (0..samples as u64)
            .into_par_iter()
            .map(|i| scan_sample(shape, k, model, seed, i).map(|e| jacobian(&e).rank))
            .collect::<Result<Vec<_>>>()
    })?;
    let codomain_dim = shape.codomain_dim();
    let full = ranks.iter().filter(|&&r| r == codomain_dim).count();
    Ok(ScanReport {
        shape: shape.clone(),
        k,
        model,
        samples,
        seed,
        max_rank: *ranks.iter().max().expect("samples > 0"),
        min_rank: *ranks.iter().min().expect("samples > 0"),
        ranks,
        domain_dim: domain_dim(shape, k, model),
        codomain_dim,
        full_rank_fraction: full as f64 / samples as f64,
    })
}
