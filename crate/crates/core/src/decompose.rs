//! Search for explicit length-`k` product decompositions of a target state.
//!
//! Minimizes `‖μ_k(Q) − ρ‖²_HS` over valid ensembles from many random starts.
//! A success is a certificate that `ρ` has (pure) ensemble length at most
//! `k`. A failure certifies nothing: the search is local.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::herm::{
    numerical_rank, traceless_basis, traceless_coords, DensityMatrix, HermitianMatrix,
    SystemShape, RANK_REL_TOL,
};
use crate::mixing::{
    canonicalize_vector, jacobian::jacobian_matrix, mix_matrix, pure_tangents, Ensemble, Model,
};
use crate::parallel::with_workers;
use crate::rng::stream_rng;

/// How a descent direction is formed from the Jacobian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepPolicy {
    /// Plain gradient `−Jᵀr`.
    Gradient,
    /// Gradient preconditioned by `(JᵀJ + μI)⁻¹` with `μ = damping · ‖r‖`.
    DampedGaussNewton { damping: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecomposeOptions {
    pub restarts: usize,
    pub max_iterations: usize,
    /// Success threshold on the Hilbert–Schmidt residual.
    pub tolerance: f64,
    pub initial_step: f64,
    /// Step shrink factor during backtracking.
    pub backtrack: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    /// A restart stops early once 50 iterations lower the squared residual
    /// by less than this relative amount.
    pub stall_tolerance: f64,
    pub policy: StepPolicy,
    pub seed: u64,
    /// Worker threads; `None` uses the global pool. Never affects results.
    pub workers: Option<usize>,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        Self {
            restarts: 50,
            max_iterations: 2000,
            tolerance: 1e-7,
            initial_step: 1.0,
            backtrack: 0.5,
            armijo: 1e-4,
            stall_tolerance: 1e-6,
            policy: StepPolicy::DampedGaussNewton { damping: 1.0 },
            seed: 0,
            workers: None,
        }
    }
}

/// Restarts are evaluated in fixed-size batches; the search stops after the
/// first batch that contains a success.
const RESTART_BATCH: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    Failure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecomposeResult {
    pub status: Status,
    pub ensemble: Ensemble,
    /// `‖μ_k(Q) − ρ‖_HS` at the returned ensemble.
    pub residual: f64,
    /// Iterations used by the best restart.
    pub iterations: usize,
    /// Index of the best restart.
    pub restart: usize,
    pub restarts_run: usize,
}

impl DecomposeResult {
    pub fn is_success(&self) -> bool {
        self.status == Status::Success
    }
}

fn check_target(target: &DensityMatrix, shape: &SystemShape) -> Result<()> {
    if target.dim() != shape.total() {
        return Err(Error::DimensionMismatch { expected: shape.total(), actual: target.dim() });
    }
    Ok(())
}

/// Multi-start search for a length-`k` decomposition of `target`.
pub fn decompose(
    target: &DensityMatrix,
    shape: &SystemShape,
    k: usize,
    model: Model,
    opts: &DecomposeOptions,
) -> Result<DecomposeResult> {
    decompose_from(target, shape, k, model, opts, None)
}

/// As [`decompose`], with `warm` used as restart 0.
pub fn decompose_from(
    target: &DensityMatrix,
    shape: &SystemShape,
    k: usize,
    model: Model,
    opts: &DecomposeOptions,
    warm: Option<&Ensemble>,
) -> Result<DecomposeResult> {
    check_target(target, shape)?;
    if k == 0 {
        return invalid("ensemble length k must be at least 1");
    }
    if opts.restarts == 0 {
        return invalid("restarts must be at least 1");
    }
    if !(opts.tolerance > 0.0) {
        return invalid("residual tolerance must be positive");
    }
    if let Some(w) = warm {
        if w.k() != k || w.model() != model || w.shape() != shape {
            return invalid("warm start does not match (shape, k, model)");
        }
    }
    let problem = Problem::new(target, shape, model)?;

    let mut runs: Vec<RunOutcome> = Vec::with_capacity(opts.restarts);
    let mut start = 0;
    while start < opts.restarts {
        let end = (start + RESTART_BATCH).min(opts.restarts);
        let batch: Vec<RunOutcome> = with_workers(opts.workers, || {
            (start..end)
                .into_par_iter()
                .map(|r| {
                    let init = match (r, warm) {
                        (0, Some(w)) => w.clone(),
                        _ => Ensemble::random(shape, k, model, &mut stream_rng(opts.seed, r as u64))
                            .expect("k >= 1"),
                    };
                    problem.descend(init, opts)
                })
                .collect()
        });
        let hit = batch.iter().any(|o| o.residual <= opts.tolerance);
        runs.extend(batch);
        start = end;
        if hit {
            break;
        }
    }

    let (restart, best) = runs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.residual.total_cmp(&b.1.residual).then(a.0.cmp(&b.0)))
        .expect("at least one restart");
    let status = if best.residual <= opts.tolerance { Status::Success } else { Status::Failure };
    Ok(DecomposeResult {
        status,
        ensemble: best.ensemble.clone(),
        residual: best.residual,
        iterations: best.iterations,
        restart,
        restarts_run: runs.len(),
    })
}

struct RunOutcome {
    ensemble: Ensemble,
    residual: f64,
    iterations: usize,
}

struct Problem {
    target: DMatrix<C64>,
    /// Gell-Mann directions per particle (general model).
    bases: Vec<Vec<DMatrix<C64>>>,
}

impl Problem {
    fn new(target: &DensityMatrix, shape: &SystemShape, model: Model) -> Result<Self> {
        let bases = match model {
            Model::General => shape
                .dims()
                .iter()
                .map(|&n| Ok(traceless_basis(n)?.into_iter().map(|b| b.into_matrix()).collect()))
                .collect::<Result<_>>()?,
            Model::Pure => Vec::new(),
        };
        Ok(Self { target: target.as_matrix().clone(), bases })
    }

    /// Residual matrix and its squared Hilbert–Schmidt norm.
    fn residual(&self, ens: &Ensemble) -> (DMatrix<C64>, f64) {
        let r = mix_matrix(ens) - &self.target;
        let f = r.iter().map(|z| z.norm_sqr()).sum();
        (r, f)
    }

    fn descend(&self, mut ens: Ensemble, opts: &DecomposeOptions) -> RunOutcome {
        let (mut r, mut f) = self.residual(&ens);
        let mut step_hint = opts.initial_step;
        let mut history = vec![f];
        let mut iterations = 0;
        while iterations < opts.max_iterations && f.sqrt() > opts.tolerance {
            iterations += 1;
            let jac = jacobian_matrix(&ens);
            // traceless coordinates of R; the trace coordinate has a zero
            // Jacobian row because every iterate has unit trace
            let rc = traceless_coords(&r);
            let grad = jac.tr_mul(&rc) * 2.0;
            let dir = match opts.policy {
                StepPolicy::Gradient => -&grad,
                StepPolicy::DampedGaussNewton { damping } => {
                    let mut normal = jac.tr_mul(&jac);
                    let mu = damping * f.sqrt();
                    for i in 0..normal.nrows() {
                        normal[(i, i)] += mu;
                    }
                    match normal.cholesky() {
                        Some(ch) => -ch.solve(&grad) * 0.5,
                        None => -&grad,
                    }
                }
            };
            let slope = grad.dot(&dir);
            if !(slope < 0.0) {
                break;
            }
            let mut t = match opts.policy {
                StepPolicy::Gradient => (step_hint * 2.0).min(1e6),
                StepPolicy::DampedGaussNewton { .. } => opts.initial_step,
            };
            let mut accepted = None;
            for _ in 0..60 {
                let cand = self.retract(&ens, &dir, t);
                let (rc, fc) = self.residual(&cand);
                if fc <= f + opts.armijo * t * slope {
                    accepted = Some((cand, rc, fc));
                    break;
                }
                t *= opts.backtrack;
            }
            let Some((cand, rc, fc)) = accepted else { break };
            ens = cand;
            r = rc;
            f = fc;
            step_hint = t;
            history.push(f);
            if history.len() > 50 {
                let old = history[history.len() - 51];
                if old - f < opts.stall_tolerance * old {
                    break;
                }
            }
        }
        RunOutcome { ensemble: ens, residual: f.sqrt(), iterations }
    }

    /// Moves along `t · dir` in domain coordinates, then projects back onto
    /// the constraint set.
    fn retract(&self, ens: &Ensemble, dir: &DVector<f64>, t: f64) -> Ensemble {
        let k = ens.k();
        let mut weights: Vec<f64> = ens.weights().iter().enumerate().map(|(j, w)| w + t * dir[j]).collect();
        project_weights(&mut weights);
        let mut col = k - 1;
        match ens {
            Ensemble::General(e) => {
                let mut e = e.clone();
                e.weights = weights;
                for row in e.components.iter_mut() {
                    for (i, a) in row.iter_mut().enumerate() {
                        let mut m = a.as_matrix().clone();
                        for b in &self.bases[i] {
                            m += b.scale(t * dir[col]);
                            col += 1;
                        }
                        *a = project_density(&m);
                    }
                }
                Ensemble::General(e)
            }
            Ensemble::Pure(e) => {
                let mut e = e.clone();
                e.weights = weights;
                for row in e.vectors.iter_mut() {
                    for v in row.iter_mut() {
                        let mut moved = v.clone();
                        for d in pure_tangents(v) {
                            moved += d.scale(t * dir[col]);
                            col += 1;
                        }
                        *v = canonicalize_vector(moved);
                    }
                }
                Ensemble::Pure(e)
            }
        }
    }
}

/// Euclidean projection onto `{λ ≥ 0, Σλ ≤ 1}`.
pub(crate) fn project_weights(w: &mut [f64]) {
    for x in w.iter_mut() {
        *x = x.max(0.0);
    }
    if w.iter().sum::<f64>() <= 1.0 {
        return;
    }
    // projection onto the probability simplex
    let mut sorted = w.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        cum += x;
        let cand = (cum - 1.0) / (i + 1) as f64;
        if x - cand > 0.0 {
            theta = cand;
        }
    }
    for x in w.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

/// Hermitian part, negative eigenvalues clipped to zero, trace renormalized;
/// `I/n` if nothing positive survives.
pub(crate) fn project_density(m: &DMatrix<C64>) -> DensityMatrix {
    let n = m.nrows();
    let h = HermitianMatrix::hermitian_part(m);
    let eig = SymmetricEigen::new(h.as_matrix().clone());
    if eig.eigenvalues.iter().all(|&x| x >= 0.0) {
        let tr = h.trace();
        if tr > 1e-12 {
            return DensityMatrix::new_unchecked(h.scale(1.0 / tr));
        }
    }
    let clipped: Vec<f64> = eig.eigenvalues.iter().map(|&x| x.max(0.0)).collect();
    let tr: f64 = clipped.iter().sum();
    if tr < 1e-12 {
        return DensityMatrix::maximally_mixed(n);
    }
    let d = DMatrix::from_diagonal(&DVector::from_iterator(n, clipped.iter().map(|&x| C64::new(x / tr, 0.0))));
    let v = &eig.eigenvectors;
    let out = v * d * v.adjoint();
    DensityMatrix::new_unchecked(HermitianMatrix::hermitian_part(&out))
}

/// Outcome of [`ensemble_length_upper`].
#[derive(Debug, Clone, PartialEq)]
pub struct LengthSearch {
    /// Smallest `k` with a found decomposition, if any.
    pub length: Option<usize>,
    /// Best residual per attempted `k`, ascending in `k`.
    pub attempts: Vec<(usize, f64)>,
    /// Lengths skipped because a pure decomposition needs at least `rank(ρ)` terms.
    pub skipped_below: usize,
    pub certificate: Option<DecomposeResult>,
}

/// Smallest `k ≤ N²` for which [`decompose`] succeeds. Each `k` warm-starts
/// from the best ensemble at `k − 1` padded with a zero-weight term.
///
/// For the pure model lengths below `rank(ρ)` are skipped. A pure success
/// shorter than the rank is reported as an invariant violation.
pub fn ensemble_length_upper(
    target: &DensityMatrix,
    shape: &SystemShape,
    model: Model,
    opts: &DecomposeOptions,
) -> Result<LengthSearch> {
    check_target(target, shape)?;
    let n = shape.total();
    let rank = numerical_rank(target.as_matrix(), RANK_REL_TOL).rank;
    let first = match model {
        Model::Pure => rank.max(1),
        Model::General => 1,
    };
    let mut attempts = Vec::new();
    let mut warm: Option<Ensemble> = None;
    for k in first..=n * n {
        let res = decompose_from(target, shape, k, model, opts, warm.as_ref())?;
        attempts.push((k, res.residual));
        if res.is_success() {
            if model == Model::Pure && k < rank {
                return Err(Error::Invariant(format!(
                    "pure decomposition of length {k} below rank {rank}"
                )));
            }
            return Ok(LengthSearch { length: Some(k), attempts, skipped_below: first - 1, certificate: Some(res) });
        }
        warm = Some(res.ensemble.padded());
    }
    Ok(LengthSearch { length: None, attempts, skipped_below: first - 1, certificate: None })
}

/// Comparison of a found pure decomposition length with the rank bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UhlmannCheck {
    pub rank: usize,
    pub found_len: usize,
    /// `rank ≤ found_len`.
    pub lower_bound_holds: bool,
    /// `found_len > rank²`: the witness is longer than the optimum can be.
    pub above_optimum_bound: bool,
}

pub fn uhlmann_bounds_check(target: &DensityMatrix, found_len: usize) -> UhlmannCheck {
    let rank = numerical_rank(target.as_matrix(), RANK_REL_TOL).rank;
    UhlmannCheck {
        rank,
        found_len,
        lower_bound_holds: rank <= found_len,
        above_optimum_bound: found_len > rank * rank,
    }
}

/// Partial transpose over particle `particle`.
pub fn partial_transpose(rho: &HermitianMatrix, shape: &SystemShape, particle: usize) -> Result<HermitianMatrix> {
    if rho.dim() != shape.total() {
        return Err(Error::DimensionMismatch { expected: shape.total(), actual: rho.dim() });
    }
    let dims = shape.dims();
    if particle >= dims.len() {
        return invalid(format!("particle index {particle} out of range"));
    }
    let inner: usize = dims[particle + 1..].iter().product();
    let d = dims[particle];
    let n = shape.total();
    let split = |x: usize| {
        let lo = x % inner;
        let mid = (x / inner) % d;
        let hi = x / (inner * d);
        (hi, mid, lo)
    };
    let join = |hi: usize, mid: usize, lo: usize| (hi * d + mid) * inner + lo;
    let m = rho.as_matrix();
    let out = DMatrix::from_fn(n, n, |r, c| {
        let (rh, rm, rl) = split(r);
        let (ch, cm, cl) = split(c);
        m[(join(rh, cm, rl), join(ch, rm, cl))]
    });
    Ok(HermitianMatrix::from_matrix_unchecked(out))
}

/// Smallest eigenvalue of the partial transpose on the last particle.
/// Negative values certify entanglement. Advisory only.
pub fn ppt_min_eigenvalue(rho: &HermitianMatrix, shape: &SystemShape) -> Result<f64> {
    let pt = partial_transpose(rho, shape, shape.particles() - 1)?;
    Ok(crate::herm::min_eigenvalue(&pt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::herm::{is_density, min_eigenvalue};
    use crate::mixing::mix;

    fn shape22() -> SystemShape {
        SystemShape::new(vec![2, 2]).unwrap()
    }

    #[test]
    fn weight_projection() {
        let mut w = vec![0.3, -0.2, 0.4];
        project_weights(&mut w);
        assert_eq!(w, vec![0.3, 0.0, 0.4]);
        let mut w = vec![0.8, 0.6];
        project_weights(&mut w);
        assert!((w[0] - 0.6).abs() < 1e-15 && (w[1] - 0.4).abs() < 1e-15);
        let mut w = vec![2.0, 0.0, 0.1];
        project_weights(&mut w);
        assert_eq!(w, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn density_projection() {
        let m = HermitianMatrix::diag(&[0.7, -0.1, 0.4]);
        let p = project_density(m.as_matrix());
        assert!(p.max_abs_diff(&HermitianMatrix::diag(&[0.7 / 1.1, 0.0, 0.4 / 1.1])) < 1e-12);
        let z = project_density(HermitianMatrix::diag(&[-1.0, -2.0]).as_matrix());
        assert_eq!(z, DensityMatrix::maximally_mixed(2));
        assert!(is_density(&project_density(HermitianMatrix::diag(&[0.2, 0.3]).as_matrix()), 1e-12));
    }

    #[test]
    fn maximally_mixed_pure_four_terms() {
        let target = DensityMatrix::maximally_mixed(4);
        let opts = DecomposeOptions { seed: 3, ..Default::default() };
        let res = decompose(&target, &shape22(), 4, Model::Pure, &opts).unwrap();
        assert!(res.is_success(), "residual {}", res.residual);
        assert!(res.residual <= 1e-8 || res.residual <= opts.tolerance);
        let back = mix(&res.ensemble).unwrap();
        assert!(back.sub(&target).hs_norm() <= opts.tolerance);
    }

    #[test]
    fn general_length_of_maximally_mixed_is_one() {
        let target = DensityMatrix::maximally_mixed(4);
        let opts = DecomposeOptions { seed: 1, ..Default::default() };
        let r = ensemble_length_upper(&target, &shape22(), Model::General, &opts).unwrap();
        assert_eq!(r.length, Some(1));
    }

    #[test]
    fn dimension_mismatch() {
        let target = DensityMatrix::maximally_mixed(3);
        let opts = DecomposeOptions::default();
        assert!(matches!(
            decompose(&target, &shape22(), 2, Model::Pure, &opts),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn uhlmann_examples() {
        let full = DensityMatrix::maximally_mixed(4);
        assert!(uhlmann_bounds_check(&full, 4).lower_bound_holds);
        assert!(!uhlmann_bounds_check(&full, 3).lower_bound_holds);
        let e0 = DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
        let product = DensityMatrix::pure(&e0).unwrap();
        let c = uhlmann_bounds_check(&product, 1);
        assert!(c.lower_bound_holds && !c.above_optimum_bound);
        assert!(uhlmann_bounds_check(&product, 2).above_optimum_bound);
    }

    #[test]
    fn bell_state_has_negative_partial_transpose() {
        let s = 1.0 / 2f64.sqrt();
        let v = DVector::from_vec(vec![C64::new(s, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(s, 0.0)]);
        let bell = DensityMatrix::pure(&v).unwrap();
        assert!((ppt_min_eigenvalue(&bell, &shape22()).unwrap() + 0.5).abs() < 1e-12);
        let mixed = DensityMatrix::maximally_mixed(4);
        assert!(ppt_min_eigenvalue(&mixed, &shape22()).unwrap() > 0.0);
    }

    #[test]
    fn partial_transpose_of_product_is_product_of_transposes() {
        let shape = SystemShape::new(vec![2, 3]).unwrap();
        let mut rng = stream_rng(71, 0);
        let a = crate::herm::sample_density(2, &mut rng);
        let b = crate::herm::sample_density(3, &mut rng);
        let ab = crate::herm::tensor(&[&a, &b]).unwrap();
        let pt = partial_transpose(&ab, &shape, 1).unwrap();
        let bt = HermitianMatrix::from_matrix_unchecked(b.as_matrix().transpose());
        let want = crate::herm::tensor(&[&a, &bt]).unwrap();
        assert!(pt.max_abs_diff(&want) < 1e-15);
        assert!(min_eigenvalue(&pt) > 0.0);
    }
}
