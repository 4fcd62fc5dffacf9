use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::herm::SystemShape;

/// `dim(k) = slope · k + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AffineDim {
    pub slope: i64,
    pub intercept: i64,
}

impl AffineDim {
    pub fn at(&self, k: i64) -> i64 {
        self.slope * k + self.intercept
    }
}

/// Closed-form ensemble-length bounds for one shape, all exact.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdReport {
    pub shape: SystemShape,
    /// `N²`: length that always suffices.
    pub caratheodory: i64,
    /// `N`: maximal rank of a density matrix.
    pub uhlmann_max_rank: i64,
    /// Dims ascending and `n_1⋯n_{p−1} ≤ n_p`.
    pub thm1_applicable: bool,
    /// Sharp threshold `n_1²⋯n_{p−1}²` when applicable: below it the
    /// length-`k` set has measure zero, at or above it contains an open set.
    pub thm1_open_at: Option<i64>,
    /// `n_1²⋯n_{p−1}²` over the dims sorted ascending; at or above it the
    /// length-`k` set contains an open set.
    pub thm2_open_at: i64,
    /// `N² / (1 − p + Σ n_i²)`: general-ensemble lengths below this are measure zero.
    pub thm2_zero_below: Ratio<i64>,
    /// `N² / (1 − 2p + Σ 2n_i)`: pure-ensemble lengths below this are measure zero.
    pub thm3_zero_below: Ratio<i64>,
    pub general_domain: AffineDim,
    pub pure_domain: AffineDim,
    /// `N² − 1`.
    pub codomain_dim: i64,
}

impl ThresholdReport {
    pub fn general_domain_dim(&self, k: i64) -> i64 {
        self.general_domain.at(k)
    }

    pub fn pure_domain_dim(&self, k: i64) -> i64 {
        self.pure_domain.at(k)
    }

    /// `k` is below the general-model measure-zero bound.
    pub fn general_measure_zero(&self, k: i64) -> bool {
        Ratio::from_integer(k) < self.thm2_zero_below
            || self.thm1_open_at.is_some_and(|t| k < t)
    }

    pub fn pure_measure_zero(&self, k: i64) -> bool {
        Ratio::from_integer(k) < self.thm3_zero_below
    }
}

/// `"p/q"`, always with an explicit denominator.
pub fn format_ratio(r: &Ratio<i64>) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn checked_product<'a>(mut xs: impl Iterator<Item = &'a i64>, what: &'static str) -> Result<i64> {
    xs.try_fold(1i64, |acc, &x| acc.checked_mul(x)).ok_or(Error::Overflow(what))
}

pub fn thresholds(shape: &SystemShape) -> Result<ThresholdReport> {
    let dims: Vec<i64> = shape.dims().iter().map(|&d| d as i64).collect();
    let p = dims.len() as i64;
    let squares: Vec<i64> = dims
        .iter()
        .map(|d| d.checked_mul(*d).ok_or(Error::Overflow("n_i²")))
        .collect::<Result<_>>()?;
    let n = checked_product(dims.iter(), "N")?;
    let n2 = n.checked_mul(n).ok_or(Error::Overflow("N²"))?;

    let mut sorted = squares.clone();
    sorted.sort_unstable();
    let thm2_open_at = checked_product(sorted[..sorted.len() - 1].iter(), "open-set threshold")?;
    let thm1_applicable = shape.dominant_last();
    let thm1_open_at = if thm1_applicable {
        Some(checked_product(squares[..squares.len() - 1].iter(), "open-set threshold")?)
    } else {
        None
    };

    let sum_sq = squares
        .iter()
        .try_fold(0i64, |a, &x| a.checked_add(x))
        .ok_or(Error::Overflow("Σ n_i²"))?;
    let sum_2n = dims
        .iter()
        .try_fold(0i64, |a, &x| a.checked_add(2 * x))
        .ok_or(Error::Overflow("Σ 2n_i"))?;
    let general_slope = 1 - p + sum_sq;
    let pure_slope = 1 - 2 * p + sum_2n;

    Ok(ThresholdReport {
        shape: shape.clone(),
        caratheodory: n2,
        uhlmann_max_rank: n,
        thm1_applicable,
        thm1_open_at,
        thm2_open_at,
        thm2_zero_below: Ratio::new(n2, general_slope),
        thm3_zero_below: Ratio::new(n2, pure_slope),
        general_domain: AffineDim { slope: general_slope, intercept: -1 },
        pure_domain: AffineDim { slope: pure_slope, intercept: -1 },
        codomain_dim: n2 - 1,
    })
}
