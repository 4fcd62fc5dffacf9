//! Ensemble-length thresholds and rank experiments on the mixing function.

mod degenerate;
mod onto;
mod scan;
mod thresholds;

pub use degenerate::{degenerate_span_check, DegenerateSpanReport};
pub use onto::{onto_witness, onto_witness_with, OntoOptions};
pub use scan::{criticality_scan, scan_sample, ScanReport};
pub use thresholds::{format_ratio, thresholds, AffineDim, ThresholdReport};
