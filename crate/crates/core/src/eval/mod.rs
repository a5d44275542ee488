//! Tracking metrics, the re-initialising failure protocol and ablation runs.

mod ablation;
pub mod io;
mod metrics;
mod protocol;

pub use ablation::{
    ablation_variants, compare_configs, sign_test_p, AblationReport, RunConfig, SequenceRow, Variant, VariantSummary,
};
pub use metrics::{precision_success, Curves, EvalResult, PRECISION_THRESHOLDS, SUCCESS_THRESHOLDS};
pub use protocol::{vot_protocol, vot_robustness, FrameTracker, SimTracker, VotOutcome, REINIT_GAP};
