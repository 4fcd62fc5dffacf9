//! The edge case `n_1 = n_2 = n`, `k = n² − 1` of the bipartite
//! measure-zero argument, checked by explicit row reduction.
//!
//! With `A_j1 = E_j + I/n`, `A_j2 = F_j + I/n` for traceless bases `{E_s}`,
//! `{F_t}` and equal weights, the images of the canonical domain directions
//! fall into three groups:
//!
//! 1. `E_s⊗F_t + E_s⊗I/n` (direction `E_s` on the first factor of term `t`),
//! 2. `E_s⊗F_t + I/n⊗F_t` (direction `F_t` on the second factor of term `s`),
//! 3. `A_j1⊗A_j2 − A_k1⊗A_k2` for the weight directions `j < k`.
//!
//! Span-preserving row operations turn these into
//! `{E_s⊗F_t + I/n⊗F_k} ∪ {I/n⊗F_k − E_s⊗I/n} ∪ {I/n⊗F_t − I/n⊗F_k}`, where the
//! second group has collapsed to one element per `s`. That leaves
//! `(n²−1)² + (n²−1) + (n²−2) = n⁴ − 2` vectors for an `n⁴ − 1` dimensional
//! target.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};
use crate::herm::{
    numerical_rank, traceless_basis, traceless_coords, DensityMatrix, HermitianMatrix,
    SystemShape, RANK_REL_TOL,
};
use crate::mixing::{jacobian, Ensemble, GeneralEnsemble};

#[derive(Debug, Clone, PartialEq)]
pub struct DegenerateSpanReport {
    pub n: usize,
    /// `n² − 1`.
    pub k: usize,
    /// Sizes of the three reduced groups.
    pub group_sizes: [usize; 3],
    /// Total number of reduced elements, `n⁴ − 2`.
    pub element_count: usize,
    /// Numerical rank of the reduced set.
    pub span_dim: usize,
    /// Numerical rank of the unreduced image set.
    pub image_rank: usize,
    /// Rank of the two sets stacked together; equal to both when the
    /// reduction preserved the span.
    pub joint_rank: usize,
    /// Rank of the assembled Jacobian at the same point.
    pub jacobian_rank: usize,
    /// `n⁴ − 1`.
    pub codomain_dim: usize,
    /// Largest deviation between Jacobian columns and the group formulas.
    pub image_deviation: f64,
    /// Largest deviation between the row-reduced vectors and their closed forms,
    /// including the collapse of the second group.
    pub reduction_deviation: f64,
}

impl DegenerateSpanReport {
    pub fn is_deficient(&self) -> bool {
        self.span_dim < self.codomain_dim && self.jacobian_rank < self.codomain_dim
    }
}

pub fn degenerate_span_check(n: usize) -> Result<DegenerateSpanReport> {
    if n < 2 {
        return invalid(format!("degenerate span check needs n >= 2, got {n}"));
    }
    let b = n * n - 1;
    let k = b;
    let gm = traceless_basis(n)?;
    // Scaled bases keep E + I/n and F + I/n positive definite. F is an
    // upper-bidiagonal recombination of E so the two bases differ.
    let c = 1.0 / (4.0 * n as f64);
    let e: Vec<HermitianMatrix> = gm.iter().map(|g| g.scale(c)).collect();
    let f: Vec<HermitianMatrix> = (0..b)
        .map(|t| if t + 1 < b { gm[t].add(&gm[t + 1].scale(0.5)).scale(c) } else { gm[t].scale(c) })
        .collect();
    let id = HermitianMatrix::maximally_mixed(n);
    let a1: Vec<HermitianMatrix> = e.iter().map(|x| x.add(&id)).collect();
    let a2: Vec<HermitianMatrix> = f.iter().map(|x| x.add(&id)).collect();

    let shape = SystemShape::new(vec![n, n])?;
    let components = a1
        .iter()
        .zip(&a2)
        .map(|(x, y)| vec![DensityMatrix::new(x.clone()), DensityMatrix::new(y.clone())].into_iter().collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let lambda = 1.0 / k as f64;
    let ens = GeneralEnsemble::new(shape, vec![lambda; k - 1], components)?;
    let report = jacobian(&Ensemble::General(ens));

    let kr = |x: &HermitianMatrix, y: &HermitianMatrix| -> DVector<f64> {
        traceless_coords(&x.as_matrix().kronecker(y.as_matrix()))
    };
    let last = k - 1;

    // unreduced groups: g1[s][t], g2[s][t], g3[j]
    let g1: Vec<Vec<DVector<f64>>> =
        (0..b).map(|s| (0..b).map(|t| kr(&e[s], &f[t]) + kr(&e[s], &id)).collect()).collect();
    let g2: Vec<Vec<DVector<f64>>> =
        (0..b).map(|s| (0..b).map(|t| kr(&e[s], &f[t]) + kr(&id, &f[t])).collect()).collect();
    let g3: Vec<DVector<f64>> = (0..last).map(|j| kr(&a1[j], &a2[j]) - kr(&a1[last], &a2[last])).collect();

    // Jacobian columns, rescaled from Gell-Mann directions to E_s / F_t
    let dir_block = 2 * b;
    let col = |j: usize, i: usize, dir: usize| k - 1 + j * dir_block + i * b + dir;
    let mut image_deviation = 0.0f64;
    for t in 0..k {
        let wt = if t < last { lambda } else { 1.0 - lambda * (k - 1) as f64 };
        for s in 0..b {
            let from_e = report.matrix.column(col(t, 0, s)) * (c / wt);
            image_deviation = image_deviation.max((from_e - &g1[s][t]).amax());
        }
        // F_u = c (G_u + G_{u+1}/2) on the second factor of term t
        for u in 0..b {
            let mut from_f = report.matrix.column(col(t, 1, u)) * (c / wt);
            if u + 1 < b {
                from_f += report.matrix.column(col(t, 1, u + 1)) * (0.5 * c / wt);
            }
            image_deviation = image_deviation.max((from_f - &g2[t][u]).amax());
        }
    }
    for j in 0..last {
        image_deviation = image_deviation.max((report.matrix.column(j) - &g3[j]).amax());
    }

    // first pass: second group minus first, third group minus first plus the (k, k) element
    let g2r: Vec<Vec<DVector<f64>>> =
        (0..b).map(|s| (0..b).map(|t| &g2[s][t] - &g1[s][t]).collect()).collect();
    let g3r: Vec<DVector<f64>> = (0..last).map(|j| &g3[j] - &g1[j][j] + &g1[last][last]).collect();
    // second pass: second minus third, then added to the first
    let g2rr: Vec<Vec<DVector<f64>>> = (0..b)
        .map(|s| (0..b).map(|t| if t < last { &g2r[s][t] - &g3r[t] } else { g2r[s][t].clone() }).collect())
        .collect();
    let g1r: Vec<Vec<DVector<f64>>> =
        (0..b).map(|s| (0..b).map(|t| &g1[s][t] + &g2rr[s][t]).collect()).collect();

    // closed forms of the reduced set
    let mut reduction_deviation = 0.0f64;
    let mut dev = |x: &DVector<f64>, y: &DVector<f64>| reduction_deviation = reduction_deviation.max((x - y).amax());
    for s in 0..b {
        let collapsed = kr(&id, &f[last]) - kr(&e[s], &id);
        for t in 0..b {
            dev(&g1r[s][t], &(kr(&e[s], &f[t]) + kr(&id, &f[last])));
            dev(&g2rr[s][t], &collapsed);
            dev(&g2r[s][t], &(kr(&id, &f[t]) - kr(&e[s], &id)));
        }
    }
    for (j, v) in g3r.iter().enumerate() {
        dev(v, &(kr(&id, &f[j]) - kr(&id, &f[last])));
    }

    let reduced: Vec<DVector<f64>> = g1r
        .iter()
        .flatten()
        .cloned()
        .chain(g2rr.iter().map(|row| row[0].clone()))
        .chain(g3r.iter().cloned())
        .collect();
    let group_sizes = [b * b, b, last];
    let element_count = reduced.len();
    debug_assert_eq!(element_count, group_sizes.iter().sum::<usize>());

    let original: Vec<DVector<f64>> =
        g1.iter().flatten().chain(g2.iter().flatten()).chain(g3.iter()).cloned().collect();
    let reduced_m = DMatrix::from_columns(&reduced);
    let original_m = DMatrix::from_columns(&original);
    let joint = DMatrix::from_columns(&[reduced.clone(), original].concat());

    Ok(DegenerateSpanReport {
        n,
        k,
        group_sizes,
        element_count,
        span_dim: numerical_rank(&reduced_m, RANK_REL_TOL).rank,
        image_rank: numerical_rank(&original_m, RANK_REL_TOL).rank,
        joint_rank: numerical_rank(&joint, RANK_REL_TOL).rank,
        jacobian_rank: report.rank,
        codomain_dim: n.pow(4) - 1,
        image_deviation,
        reduction_deviation,
    })
}
