//! Waveform-domain complementary signal sets and adaptive matched filtering
//! against interrupted-sampling repeater jamming.
//!
//! The crate is organized bottom-up:
//!
//! * [`codeset`]: binary code sets whose cross-pulse lag sums vanish,
//! * [`waveform`]: sampled pulse sets (coded, chirp, Golay),
//! * [`scene`]: received trains with target, repeater jamming and noise,
//! * [`wdfilter`]: waveform responses, matched filtering, ambiguity,
//! * [`wdamf`]: the adaptive filter and its IMM estimator,
//! * [`eval`]: metrics, end-to-end runs and Monte-Carlo sweeps,
//! * [`config`]: scenario files.

pub mod codeset;
pub mod config;
pub mod error;
pub mod eval;
pub mod rng;
pub mod scene;
pub mod waveform;
pub mod wdamf;
pub mod wdfilter;

pub use error::{Error, ErrorClass, Result};
