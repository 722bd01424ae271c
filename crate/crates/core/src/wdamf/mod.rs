//! Waveform-domain adaptive matched filtering.
//!
//! Per fast-time instant: estimate the response level `ŵ(μ)` with the IMM
//! filter, derive the threshold `Ê = λ·|ŷ_end|/T` (never below a multiple
//! of the per-element noise deviation `√D·σ`), label every μ whose
//! dilated estimate exceeds it as jammed, and integrate the snapshot over the
//! clean part. The jammed part is filled with synthetic noise of matching
//! variance (WDCSS output) or, for the comparison waveforms, with estimates
//! taken from a random contiguous run of clean elements.

pub mod full_imm;
pub mod imm;

pub use full_imm::{FullStateImm, ImmState};
pub use imm::{estimate, estimate_into, ImmConfig, ImmOutput, ImmScratch, NoiseLevel};

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{complex_normal, stream_rng, Domain};
use crate::scene::ReceivedTrain;
use crate::wdfilter::{ProfileKind, RangeProfile, WaveformPlane, WaveformSnapshot};
use crate::waveform::PulseSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ThresholdConfig {
    /// Largest jamming duty ratio the threshold is designed for.
    pub epsilon0: f64,
    /// Half-width of the protective dilation, in samples. The default is one
    /// chip at 10 MHz sampling.
    pub gamma: usize,
    /// Lower bound on the threshold in units of `√D·σ`. Without it a
    /// noise-only snapshot gets labeled by its own fluctuations, and the
    /// kept part is then a biased selection of the noise.
    pub noise_floor: f64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self {
            epsilon0: 0.5,
            gamma: 10,
            noise_floor: 1.0,
        }
    }
}

impl ThresholdConfig {
    pub fn lambda(&self) -> f64 {
        1.0 / self.epsilon0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon0 > 0.0 && self.epsilon0 <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon0 = {} must lie in (0, 1]",
                self.epsilon0
            )));
        }
        if !(self.noise_floor >= 0.0 && self.noise_floor.is_finite()) {
            return Err(Error::InvalidConfig(format!("noise floor {}", self.noise_floor)));
        }
        Ok(())
    }
}

/// `λ·|ŷ_end|/T`; `y_end` and `pulse_width` in the same time units.
pub fn adaptive_threshold(y_end: Complex64, cfg: &ThresholdConfig, pulse_width: f64) -> f64 {
    cfg.lambda() * y_end.norm() / pulse_width
}

/// Threshold floor `noise_floor·√D·σ` in per-element response units.
pub fn threshold_floor(cfg: &ThresholdConfig, noise: NoiseLevel) -> f64 {
    cfg.noise_floor * (noise.d as f64).sqrt() * noise.sigma
}

/// Partition of the μ grid into clean (`U_s`) and jammed (`U_ȷ`) elements.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSets {
    /// `true` for μ in the jammed set.
    pub jammed: Vec<bool>,
    pub threshold: f64,
}

impl LabeledSets {
    pub fn jammed_count(&self) -> usize {
        self.jammed.iter().filter(|&&j| j).count()
    }

    pub fn clean_count(&self) -> usize {
        self.jammed.len() - self.jammed_count()
    }

    pub fn clean_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.jammed.iter().enumerate().filter(|(_, &j)| !j).map(|(k, _)| k)
    }
}

/// Marks every μ within `gamma` samples of an element where `|ŵ| > Ê`.
pub fn label_sets(w_hat: &[Complex64], threshold: f64, gamma: usize) -> LabeledSets {
    let mut jammed = vec![false; w_hat.len()];
    label_into(w_hat, threshold, gamma, &mut jammed);
    LabeledSets { jammed, threshold }
}

fn label_into(w_hat: &[Complex64], threshold: f64, gamma: usize, jammed: &mut Vec<bool>) {
    let m = w_hat.len();
    jammed.clear();
    jammed.resize(m, false);
    // Distance to the most recent exceedance on either side.
    let mut last: Option<usize> = None;
    for k in 0..m {
        if w_hat[k].norm() > threshold {
            last = Some(k);
        }
        if last.is_some_and(|l| k - l <= gamma) {
            jammed[k] = true;
        }
    }
    last = None;
    for k in (0..m).rev() {
        if w_hat[k].norm() > threshold {
            last = Some(k);
        }
        if last.is_some_and(|l| l - k <= gamma) {
            jammed[k] = true;
        }
    }
}

/// Fewest clean elements for which the residual-based σ estimate is used.
pub const MIN_CLEAN_FOR_SIGMA: usize = 16;

/// Receiver σ estimated from the clean residual `w - ŵ`, which has variance
/// `D·σ²`; falls back to `fallback` when too few clean elements remain.
pub fn estimate_sigma(
    w: &[Complex64],
    w_hat: &[Complex64],
    sets: &LabeledSets,
    d: usize,
    fallback: f64,
) -> f64 {
    let n = sets.clean_count();
    if n < MIN_CLEAN_FOR_SIGMA {
        return fallback;
    }
    let mut mean = Complex64::new(0.0, 0.0);
    for k in sets.clean_indices() {
        mean += w[k] - w_hat[k];
    }
    mean /= n as f64;
    let ss: f64 = sets
        .clean_indices()
        .map(|k| (w[k] - w_hat[k] - mean).norm_sqr())
        .sum();
    (ss / (n - 1) as f64 / d as f64).sqrt()
}

/// `Σ_{U_s} w dμ + Σ_{U_ȷ} n dμ` with `n ~ CN(0, D·σ_est²)`.
pub fn integrate_output<R: Rng + ?Sized>(
    w: &[Complex64],
    sets: &LabeledSets,
    d: usize,
    sigma_est: f64,
    dmu: f64,
    rng: &mut R,
) -> Complex64 {
    let var = d as f64 * sigma_est * sigma_est;
    let mut acc = Complex64::new(0.0, 0.0);
    for (v, &j) in w.iter().zip(&sets.jammed) {
        if j {
            if var > 0.0 {
                acc += complex_normal(rng, var);
            }
        } else {
            acc += v;
        }
    }
    acc * dmu
}

/// Which compensation the adaptive filter applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AdaptiveMethod {
    /// Synthetic noise on the jammed elements.
    Wdamf,
    /// Estimates copied from a random contiguous run of clean elements.
    Baseline,
}

/// Settings shared by both adaptive filters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WdamfConfig {
    #[serde(flatten)]
    pub imm: ImmConfig,
    #[serde(flatten)]
    pub threshold: ThresholdConfig,
}

impl WdamfConfig {
    pub fn validate(&self) -> Result<()> {
        self.imm.validate()?;
        self.threshold.validate()?;
        if self.imm.impulse_gain < self.threshold.lambda() - 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "impulse gain {} must be at least 1/epsilon0 = {}",
                self.imm.impulse_gain,
                self.threshold.lambda()
            )));
        }
        Ok(())
    }
}

/// Matched and adaptive profiles from one pass over the window.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveRun {
    pub matched: RangeProfile,
    pub adaptive: RangeProfile,
    /// Jammed elements per instant.
    pub jammed_counts: Vec<usize>,
    /// Instants where the baseline had fewer clean than jammed elements.
    pub compensation_shortfalls: usize,
}

/// Processes every instant of the window. `noise_sigma` is the receiver σ
/// assumed by the estimator and used when σ cannot be estimated; `seed`
/// keys the compensation streams.
pub fn adaptive_filter(
    rx: &ReceivedTrain,
    ps: &PulseSet,
    cfg: &WdamfConfig,
    method: AdaptiveMethod,
    noise_sigma: f64,
    seed: u64,
) -> Result<AdaptiveRun> {
    cfg.validate()?;
    let plane = WaveformPlane::new(rx, ps)?;
    adaptive_filter_on_plane(&plane, rx, ps.cpi(), cfg, method, noise_sigma, seed)
}

struct Scratch {
    w: Vec<Complex64>,
    imm: ImmScratch,
    out: ImmOutput,
    jammed: Vec<bool>,
}

struct InstantResult {
    matched: Complex64,
    adaptive: Complex64,
    jammed: usize,
    shortfall: bool,
}

pub fn adaptive_filter_on_plane(
    plane: &WaveformPlane,
    rx: &ReceivedTrain,
    d: usize,
    cfg: &WdamfConfig,
    method: AdaptiveMethod,
    noise_sigma: f64,
    seed: u64,
) -> Result<AdaptiveRun> {
    let m = plane.snapshot_len();
    let dmu = plane.dt();
    let noise = NoiseLevel {
        d,
        sigma: noise_sigma,
    };
    let results: Vec<InstantResult> = (0..plane.t_len())
        .into_par_iter()
        .map_init(
            || Scratch {
                w: vec![Complex64::new(0.0, 0.0); m],
                imm: ImmScratch::default(),
                out: ImmOutput {
                    w_hat: Vec::new(),
                    y_hat: Vec::new(),
                },
                jammed: Vec::new(),
            },
            |sc, k| {
                plane.snapshot_into(k, &mut sc.w);
                let stream = (plane.t_start() + k as i64) as u64;
                process_instant(sc, cfg, method, noise, dmu, seed, stream)
            },
        )
        .collect::<Result<_>>()?;

    let mut matched = Vec::with_capacity(results.len());
    let mut adaptive = Vec::with_capacity(results.len());
    let mut jammed_counts = Vec::with_capacity(results.len());
    let mut shortfalls = 0;
    for r in results {
        matched.push(r.matched);
        adaptive.push(r.adaptive);
        jammed_counts.push(r.jammed);
        shortfalls += r.shortfall as usize;
    }
    let kind = match method {
        AdaptiveMethod::Wdamf => ProfileKind::Wdamf,
        AdaptiveMethod::Baseline => ProfileKind::BaselineWdamf,
    };
    Ok(AdaptiveRun {
        matched: RangeProfile {
            kind: ProfileKind::Matched,
            grid: rx.grid,
            t_start: rx.t_start,
            values: matched,
        },
        adaptive: RangeProfile {
            kind,
            grid: rx.grid,
            t_start: rx.t_start,
            values: adaptive,
        },
        jammed_counts,
        compensation_shortfalls: shortfalls,
    })
}

fn process_instant(
    sc: &mut Scratch,
    cfg: &WdamfConfig,
    method: AdaptiveMethod,
    noise: NoiseLevel,
    dmu: f64,
    seed: u64,
    stream: u64,
) -> Result<InstantResult> {
    let m = sc.w.len();
    let matched = sc.w.iter().sum::<Complex64>() * dmu;
    estimate_into(&sc.w, &cfg.imm, noise, &mut sc.imm, &mut sc.out)?;
    // Threshold in sample units: λ·|ŷ_end|/M.
    let threshold = adaptive_threshold(sc.out.y_end(), &cfg.threshold, m as f64)
        .max(threshold_floor(&cfg.threshold, noise));
    let mut sets = LabeledSets {
        jammed: std::mem::take(&mut sc.jammed),
        threshold,
    };
    label_into(&sc.out.w_hat, threshold, cfg.threshold.gamma, &mut sets.jammed);
    let jammed = sets.jammed_count();
    let (adaptive, shortfall) = match method {
        AdaptiveMethod::Wdamf => {
            let sigma = estimate_sigma(&sc.w, &sc.out.w_hat, &sets, noise.d, noise.sigma);
            let mut rng = stream_rng(seed, Domain::Compensation, stream);
            (integrate_output(&sc.w, &sets, noise.d, sigma, dmu, &mut rng), false)
        }
        AdaptiveMethod::Baseline => {
            let mut rng = stream_rng(seed, Domain::BaselineSubset, stream);
            baseline_output(&sc.w, &sc.out.w_hat, &sets, dmu, &mut rng)
        }
    };
    sc.jammed = sets.jammed;
    Ok(InstantResult {
        matched,
        adaptive,
        jammed,
        shortfall,
    })
}

/// `Σ_{U_s} w dμ + Σ_{Ψ} ŵ dμ`, with `Ψ` a run of consecutive entries of
/// the ordered clean index list, as long as the jammed set and starting at
/// a uniformly drawn position. When the clean set is the shorter one, all
/// of it is used and the second value reports the shortfall.
pub fn baseline_output<R: Rng + ?Sized>(
    w: &[Complex64],
    w_hat: &[Complex64],
    sets: &LabeledSets,
    dmu: f64,
    rng: &mut R,
) -> (Complex64, bool) {
    let clean: Vec<usize> = sets.clean_indices().collect();
    let want = sets.jammed_count();
    let len = want.min(clean.len());
    let mut acc: Complex64 = clean.iter().map(|&k| w[k]).sum();
    if len > 0 {
        let start = rng.random_range(0..=clean.len() - len);
        acc += clean[start..start + len].iter().map(|&k| w_hat[k]).sum::<Complex64>();
    }
    (acc * dmu, len < want)
}

/// WDCSS adaptive profile.
pub fn wdamf_profile(
    rx: &ReceivedTrain,
    ps: &PulseSet,
    cfg: &WdamfConfig,
    noise_sigma: f64,
    seed: u64,
) -> Result<RangeProfile> {
    Ok(adaptive_filter(rx, ps, cfg, AdaptiveMethod::Wdamf, noise_sigma, seed)?.adaptive)
}

/// Comparison-waveform adaptive profile.
pub fn baseline_wdamf(
    rx: &ReceivedTrain,
    ps: &PulseSet,
    cfg: &WdamfConfig,
    noise_sigma: f64,
    seed: u64,
) -> Result<RangeProfile> {
    Ok(adaptive_filter(rx, ps, cfg, AdaptiveMethod::Baseline, noise_sigma, seed)?.adaptive)
}

/// Runs the estimator on one snapshot and returns `(ŵ, ŷ)` with `ŷ` in the
/// snapshot's time units.
pub fn imm_estimate(
    snapshot: &WaveformSnapshot,
    cfg: &ImmConfig,
    noise: NoiseLevel,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let out = estimate(&snapshot.w, cfg, noise)?;
    let y = out.y_hat.iter().map(|v| v * snapshot.dmu).collect();
    Ok((out.w_hat, y))
}
