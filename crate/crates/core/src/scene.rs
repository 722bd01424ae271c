//! Received pulse trains: target echo, interrupted-sampling repeater jamming
//! and receiver noise.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{complex_normal, stream_rng, Domain};
use crate::waveform::{apply_doppler, PulseSet, SamplingGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JammerMode {
    /// Each captured slice is replayed once.
    Isdrj,
    /// Each captured slice is replayed `P` times back to back.
    Isrrj,
    /// Slices are replayed `Q` times with delays growing by one slice plus
    /// one sampling period per repeat.
    Iscrj,
}

impl JammerMode {
    pub const ALL: [JammerMode; 3] = [JammerMode::Isdrj, JammerMode::Isrrj, JammerMode::Iscrj];

    pub fn name(&self) -> &'static str {
        match self {
            JammerMode::Isdrj => "isdrj",
            JammerMode::Isrrj => "isrrj",
            JammerMode::Iscrj => "iscrj",
        }
    }
}

impl std::str::FromStr for JammerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "isdrj" | "direct" => Ok(JammerMode::Isdrj),
            "isrrj" | "repetitive" => Ok(JammerMode::Isrrj),
            "iscrj" | "cyclic" => Ok(JammerMode::Iscrj),
            other => Err(Error::InvalidConfig(format!("unknown jammer mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TargetParams {
    /// Round-trip delay in seconds.
    pub delay: f64,
    pub snr_db: f64,
    pub doppler_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JammerParams {
    pub mode: JammerMode,
    /// Sampling period T_J in seconds.
    pub sample_period: f64,
    /// Slice width over sampling period.
    pub slice_ratio: f64,
    pub repeat_count: usize,
    pub cycle_count: usize,
    /// Delay of the first replay in seconds.
    pub delay: f64,
    pub jnr_db: f64,
}

impl JammerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.slice_ratio > 0.0 && self.slice_ratio <= 0.5) {
            return Err(Error::InvalidConfig(format!(
                "slice ratio {} must lie in (0, 1/2]",
                self.slice_ratio
            )));
        }
        if !(self.sample_period > 0.0) {
            return Err(Error::InvalidConfig("jammer sampling period must be positive".into()));
        }
        if self.repeat_count == 0 || self.cycle_count == 0 {
            return Err(Error::InvalidConfig("P and Q must be at least 1".into()));
        }
        Ok(())
    }

    /// Slice width T_ȷ in seconds.
    pub fn slice_width(&self) -> f64 {
        self.slice_ratio * self.sample_period
    }

    /// Duty cycle implied by the mode: ε, P·ε or (Q+1)/2·ε.
    pub fn nominal_duty_cycle(&self) -> f64 {
        match self.mode {
            JammerMode::Isdrj => self.slice_ratio,
            JammerMode::Isrrj => self.repeat_count as f64 * self.slice_ratio,
            JammerMode::Iscrj => (self.cycle_count as f64 + 1.0) / 2.0 * self.slice_ratio,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadarParams {
    pub carrier_hz: f64,
    pub pri: f64,
    pub cpi: usize,
}

/// Fast-time span `[start, end)` in seconds over which outputs are computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeWindow {
    pub start: f64,
    pub end: f64,
}

impl TimeWindow {
    /// 40 µs before to 360 µs after the target.
    pub fn around(target_delay: f64) -> Self {
        Self {
            start: target_delay - 40e-6,
            end: target_delay + 360e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub radar: RadarParams,
    pub target: TargetParams,
    pub jammer: Option<JammerParams>,
    /// Receiver noise level: `E|n|² = σ²` per complex sample.
    pub noise_sigma: f64,
    pub seed: u64,
    pub window: TimeWindow,
}

impl Scenario {
    /// Amplitude reference: σ itself, or 1 for a noise-free scenario so that
    /// SNR and JNR keep their meaning as amplitude ratios.
    pub fn amplitude_reference(&self) -> f64 {
        if self.noise_sigma > 0.0 {
            self.noise_sigma
        } else {
            1.0
        }
    }

    pub fn target_amplitude(&self) -> f64 {
        self.amplitude_reference() * 10f64.powf(self.target.snr_db / 20.0)
    }

    pub fn jammer_amplitude(&self) -> f64 {
        self.jammer
            .map_or(0.0, |j| self.amplitude_reference() * 10f64.powf(j.jnr_db / 20.0))
    }

    pub fn validate(&self, ps: &PulseSet) -> Result<()> {
        if self.radar.cpi != ps.cpi() {
            return Err(Error::InvalidConfig(format!(
                "scenario CPI {} differs from pulse set size {}",
                self.radar.cpi,
                ps.cpi()
            )));
        }
        if self.radar.pri <= ps.grid().pulse_width() {
            return Err(Error::InvalidConfig(format!(
                "PRI {:e} s must exceed the pulse width {:e} s",
                self.radar.pri,
                ps.grid().pulse_width()
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!("noise sigma {}", self.noise_sigma)));
        }
        if let Some(j) = &self.jammer {
            j.validate()?;
        }
        Ok(())
    }
}

/// Jammer gate and replay delays, in samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JammerTiming {
    pub period_samples: usize,
    pub slice_samples: usize,
    pub shifts: Vec<usize>,
}

impl JammerTiming {
    pub fn new(jp: &JammerParams, grid: &SamplingGrid) -> Result<Self> {
        let slice_exact = jp.slice_width() * grid.sample_rate;
        if slice_exact < 1.0 - 1e-9 {
            return Err(Error::DegenerateSlice {
                slice_samples: slice_exact,
            });
        }
        let period_samples = (jp.sample_period * grid.sample_rate).round() as usize;
        let slice_samples = slice_exact.round() as usize;
        let shifts = match jp.mode {
            JammerMode::Isdrj => vec![0],
            JammerMode::Isrrj => (0..jp.repeat_count).map(|p| p * slice_samples).collect(),
            JammerMode::Iscrj => (0..jp.cycle_count)
                .map(|q| q * (slice_samples + period_samples))
                .collect(),
        };
        Ok(Self {
            period_samples,
            slice_samples,
            shifts,
        })
    }

    pub fn max_shift(&self) -> usize {
        self.shifts.iter().copied().max().unwrap_or(0)
    }
}

/// Capture gate over one pulse: 1 on `[k·T_J, k·T_J + T_ȷ)`.
pub fn sampling_gate(jp: &JammerParams, grid: &SamplingGrid) -> Result<Vec<bool>> {
    let timing = JammerTiming::new(jp, grid)?;
    Ok(gate_from_timing(&timing, grid.samples_per_pulse))
}

fn gate_from_timing(timing: &JammerTiming, len: usize) -> Vec<bool> {
    (0..len)
        .map(|n| n % timing.period_samples.max(1) < timing.slice_samples)
        .collect()
}

/// Replayed jamming for one pulse, indexed from the jammer's time origin.
/// Its length covers the pulse plus the longest replay delay.
pub fn synthesize_jamming(
    pulse: &[Complex64],
    jp: &JammerParams,
    grid: &SamplingGrid,
) -> Result<Vec<Complex64>> {
    let timing = JammerTiming::new(jp, grid)?;
    Ok(jamming_from_timing(pulse, &timing))
}

fn jamming_from_timing(pulse: &[Complex64], timing: &JammerTiming) -> Vec<Complex64> {
    let gate = gate_from_timing(timing, pulse.len());
    let mut out = vec![Complex64::new(0.0, 0.0); pulse.len() + timing.max_shift()];
    for &shift in &timing.shifts {
        for (n, (&g, &s)) in gate.iter().zip(pulse).enumerate() {
            if g {
                out[n + shift] += s;
            }
        }
    }
    out
}

/// Fraction of samples within one pulse length of the jammer frame that carry
/// at least one replayed slice.
pub fn duty_cycle(jp: &JammerParams, grid: &SamplingGrid) -> Result<f64> {
    let timing = JammerTiming::new(jp, grid)?;
    let len = grid.samples_per_pulse;
    let gate = gate_from_timing(&timing, len);
    let mut active = vec![false; len];
    for &shift in &timing.shifts {
        for n in 0..len.saturating_sub(shift) {
            active[n + shift] |= gate[n];
        }
    }
    Ok(active.iter().filter(|&&a| a).count() as f64 / len as f64)
}

/// Which parts of the received signal to synthesize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainComponents {
    pub target: bool,
    pub jammer: bool,
    pub noise: bool,
}

impl TrainComponents {
    pub const ALL: Self = Self {
        target: true,
        jammer: true,
        noise: true,
    };
    pub const TARGET_ONLY: Self = Self {
        target: true,
        jammer: false,
        noise: false,
    };
    pub const JAMMER_ONLY: Self = Self {
        target: false,
        jammer: true,
        noise: false,
    };
    pub const NOISE_ONLY: Self = Self {
        target: false,
        jammer: false,
        noise: true,
    };
}

/// Per-pulse received samples. Sample `k` of every pulse sits at fast-time
/// index `t_start + k`; the buffers extend one pulse length past the last
/// output instant so every snapshot in the window is fully covered.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedTrain {
    pub grid: SamplingGrid,
    /// Fast-time sample index of the first output instant.
    pub t_start: i64,
    /// Number of output instants.
    pub t_len: usize,
    pub pulses: Vec<Vec<Complex64>>,
    /// Set when part of the replayed jamming fell outside the buffers.
    pub replay_overrun: bool,
}

impl ReceivedTrain {
    pub fn cpi(&self) -> usize {
        self.pulses.len()
    }

    pub fn t_end(&self) -> i64 {
        self.t_start + self.t_len as i64
    }

    pub fn time_of(&self, t_index: usize) -> f64 {
        self.grid.time_of(self.t_start + t_index as i64)
    }
}

/// Sample range `[start, start+len)` covering a time window.
pub fn window_indices(window: &TimeWindow, grid: &SamplingGrid) -> Result<(i64, usize)> {
    let start = grid.index_of(window.start);
    let end = grid.index_of(window.end);
    if end <= start {
        return Err(Error::WindowTooSmall(format!(
            "[{:e}, {:e}) s holds no samples",
            window.start, window.end
        )));
    }
    Ok((start, (end - start) as usize))
}

pub fn compose_train(ps: &PulseSet, sc: &Scenario) -> Result<ReceivedTrain> {
    compose_train_with(ps, sc, TrainComponents::ALL)
}

pub fn compose_train_with(
    ps: &PulseSet,
    sc: &Scenario,
    parts: TrainComponents,
) -> Result<ReceivedTrain> {
    sc.validate(ps)?;
    let grid = *ps.grid();
    let m = grid.samples_per_pulse;
    let (t_start, t_len) = window_indices(&sc.window, &grid)?;
    let buf_len = t_len + m;

    let echo = apply_doppler(ps, sc.target.doppler_hz, sc.radar.pri);
    let a_s = sc.target_amplitude();
    let a_j = sc.jammer_amplitude();
    let target_offset = grid.index_of(sc.target.delay) - t_start;
    let jam = match (&sc.jammer, parts.jammer) {
        (Some(jp), true) => Some((
            JammerTiming::new(jp, &grid)?,
            grid.index_of(jp.delay) - t_start,
        )),
        _ => None,
    };
    let replay_overrun = jam.as_ref().is_some_and(|(timing, offset)| {
        let first = *offset;
        let last = offset + (m + timing.max_shift()) as i64;
        first < 0 || last > buf_len as i64
    });

    let sigma = sc.noise_sigma;
    let pulses = (0..ps.cpi())
        .into_par_iter()
        .map(|i| {
            let mut x = vec![Complex64::new(0.0, 0.0); buf_len];
            let s = echo.pulse(i);
            if parts.target {
                add_shifted(&mut x, s.iter().map(|v| v * a_s), target_offset);
            }
            if let Some((timing, offset)) = &jam {
                let j = jamming_from_timing(s, timing);
                add_shifted(&mut x, j.iter().map(|v| v * a_j), *offset);
            }
            if parts.noise && sigma > 0.0 {
                let mut rng = stream_rng(sc.seed, Domain::ReceiverNoise, i as u64);
                let var = sigma * sigma;
                for v in &mut x {
                    *v += complex_normal(&mut rng, var);
                }
            }
            x
        })
        .collect();

    Ok(ReceivedTrain {
        grid,
        t_start,
        t_len,
        pulses,
        replay_overrun,
    })
}

fn add_shifted<I: Iterator<Item = Complex64>>(x: &mut [Complex64], src: I, offset: i64) {
    for (k, v) in src.enumerate() {
        let idx = offset + k as i64;
        if idx >= 0 && (idx as usize) < x.len() {
            x[idx as usize] += v;
        }
    }
}
