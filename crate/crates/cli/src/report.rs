use serde::{Deserialize, Serialize};

use crate::io::{EnsembleFile, StateFile};

/// One JSON document per invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub parameters: Parameters,
    pub seed: Option<u64>,
    pub version: String,
    pub payload: Payload,
    /// Seconds; present only with `--timing` so that default output is
    /// reproducible byte for byte.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
}

/// Echo of the arguments that determine the result. Worker count is
/// deliberately absent.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Payload {
    Thresholds(ThresholdTable),
    RankScan(ScanStats),
    Witness(WitnessRank),
    DegenerateCheck(DegenerateStats),
    Decompose(Certificate),
    LengthUpper(LengthEstimate),
    SampleState(SampledState),
    Mix(MixedState),
}

impl Payload {
    /// The ensemble carried by the payload, if any.
    pub fn ensemble(&self) -> Option<&EnsembleFile> {
        match self {
            Payload::Witness(w) => Some(&w.ensemble),
            Payload::Decompose(c) => Some(&c.ensemble),
            Payload::LengthUpper(l) => l.certificate.as_ref().map(|c| &c.ensemble),
            Payload::SampleState(s) => s.ensemble.as_ref(),
            _ => None,
        }
    }

    /// The state carried by the payload, if any.
    pub fn state(&self) -> Option<&StateFile> {
        match self {
            Payload::SampleState(s) => Some(&s.state),
            Payload::Mix(m) => Some(&m.state),
            Payload::Witness(w) => Some(&w.state),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub slope: i64,
    pub intercept: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdTable {
    pub dims: Vec<usize>,
    pub total_dim: usize,
    pub caratheodory: i64,
    pub uhlmann_max_rank: i64,
    pub thm1_applicable: bool,
    pub thm1_open_at: Option<i64>,
    pub thm2_open_at: i64,
    /// Exact rational `"p/q"`.
    pub thm2_zero_below: String,
    pub thm3_zero_below: String,
    pub general_domain: Affine,
    pub pure_domain: Affine,
    pub codomain_dim: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanStats {
    pub domain_dim: usize,
    pub codomain_dim: usize,
    pub ranks: Vec<usize>,
    pub max_rank: usize,
    pub min_rank: usize,
    pub full_rank_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessRank {
    pub rank: usize,
    pub codomain_dim: usize,
    pub domain_dim: usize,
    pub onto: bool,
    pub smallest_singular_value: f64,
    pub ensemble: EnsembleFile,
    pub state: StateFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegenerateStats {
    pub n: usize,
    pub k: usize,
    pub group_sizes: [usize; 3],
    pub element_count: usize,
    pub span_dim: usize,
    pub image_rank: usize,
    pub joint_rank: usize,
    pub jacobian_rank: usize,
    pub codomain_dim: usize,
    pub image_deviation: f64,
    pub reduction_deviation: f64,
    pub deficient: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UhlmannFlags {
    pub rank: usize,
    pub found_len: usize,
    pub lower_bound_holds: bool,
    pub above_optimum_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub status: String,
    pub k: usize,
    pub residual: f64,
    pub tolerance: f64,
    /// Residual recomputed from the serialized ensemble.
    pub remix_residual: f64,
    pub iterations: usize,
    pub restart: usize,
    pub restarts_run: usize,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uhlmann: Option<UhlmannFlags>,
    /// Smallest eigenvalue of the partial transpose on the last particle.
    /// Advisory only.
    pub advisory_ppt_min_eigenvalue: f64,
    pub ensemble: EnsembleFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub k: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthEstimate {
    pub length: Option<usize>,
    pub target_rank: usize,
    pub skipped_below: usize,
    pub attempts: Vec<Attempt>,
    pub message: String,
    pub advisory_ppt_min_eigenvalue: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledState {
    /// `"hilbert-schmidt"`, `"pure"`, or `"separable-mixture"`.
    pub construction: String,
    pub state: StateFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedState {
    pub k: usize,
    pub trace: f64,
    pub min_eigenvalue: f64,
    pub state: StateFile,
}
