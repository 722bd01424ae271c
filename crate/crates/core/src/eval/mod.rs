//! Metrics, single runs and Monte-Carlo sweeps.

pub mod metrics;
pub mod pipeline;
pub mod sweep;

pub use metrics::{clean_reference, compute_metrics, ProfileMetrics};
pub use pipeline::{run_once, FilterChoice, RunOutput, WaveformChoice, WaveformSpec};
pub use sweep::{monte_carlo_sweep, parse_values, SweepAxis, SweepPoint, SweepResult, TrialRecord};
