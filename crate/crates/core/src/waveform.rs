//! Sampled baseband pulse sets: WDCSS phase codes, LFM chirps and Golay pairs.
//!
//! Besides the materialized samples, every pulse set carries a low-rank
//! factorization
//!
//! ```text
//! s_i(μ) = phase_i · Σ_r mix[i][r] · basis_r(μ)
//! ```
//!
//! with a real `mix` matrix and at most a couple of nonzero basis functions
//! per sample. The waveform-domain filter uses it to collapse the sum over
//! the CPI before the per-snapshot work.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::codeset::BinaryCodeMatrix;
use crate::error::{Error, Result};

/// Sample-rate and chip layout shared by every pulse of a set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SamplingGrid {
    pub sample_rate: f64,
    pub samples_per_chip: usize,
    pub samples_per_pulse: usize,
}

impl SamplingGrid {
    /// Grid for `n_chips` chips of width `chip_width` seconds. The chip must
    /// span an integral number of samples.
    pub fn new(sample_rate: f64, chip_width: f64, n_chips: usize) -> Result<Self> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!("sample rate {sample_rate}")));
        }
        let spc_f = chip_width * sample_rate;
        let spc = spc_f.round();
        if spc < 1.0 || (spc_f - spc).abs() > 1e-6 * spc_f.max(1.0) {
            return Err(Error::GridMismatch(format!(
                "chip width {chip_width:e} s is {spc_f} samples at {sample_rate:e} Hz, \
                 expected a positive integer"
            )));
        }
        if n_chips == 0 {
            return Err(Error::InvalidConfig("pulse needs at least one chip".into()));
        }
        let spc = spc as usize;
        Ok(Self {
            sample_rate,
            samples_per_chip: spc,
            samples_per_pulse: spc * n_chips,
        })
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate
    }

    pub fn chip_width(&self) -> f64 {
        self.samples_per_chip as f64 / self.sample_rate
    }

    pub fn pulse_width(&self) -> f64 {
        self.samples_per_pulse as f64 / self.sample_rate
    }

    pub fn chips(&self) -> usize {
        self.samples_per_pulse / self.samples_per_chip
    }

    /// Nearest sample index for a time in seconds.
    pub fn index_of(&self, t: f64) -> i64 {
        (t * self.sample_rate).round() as i64
    }

    pub fn time_of(&self, index: i64) -> f64 {
        index as f64 / self.sample_rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WaveformKind {
    Wdcss,
    Lfm { bandwidth_hz: f64 },
    Golay,
}

impl WaveformKind {
    pub fn name(&self) -> &'static str {
        match self {
            WaveformKind::Wdcss => "wdcss",
            WaveformKind::Lfm { .. } => "lfm",
            WaveformKind::Golay => "golay",
        }
    }
}

/// Low-rank description of a pulse set; see the module docs.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseFactors {
    /// Number of basis functions R.
    pub rank: usize,
    /// Row-major D×R real mixing coefficients.
    pub mix: Vec<f64>,
    /// Per-pulse unit phasor (inter-pulse Doppler).
    pub pulse_phase: Vec<Complex64>,
    /// Nonzero basis functions per sample.
    pub per_sample: usize,
    /// `per_sample` basis indices for each sample, flattened.
    pub basis_index: Vec<u32>,
    /// Basis values matching `basis_index`.
    pub basis_value: Vec<Complex64>,
}

impl PulseFactors {
    pub fn mix_row(&self, pulse: usize) -> &[f64] {
        &self.mix[pulse * self.rank..(pulse + 1) * self.rank]
    }

    fn reconstruct(&self, pulse: usize, samples: usize) -> Vec<Complex64> {
        let row = self.mix_row(pulse);
        (0..samples)
            .map(|mu| {
                let base = mu * self.per_sample;
                let v: Complex64 = (base..base + self.per_sample)
                    .map(|k| self.basis_value[k] * row[self.basis_index[k] as usize])
                    .sum();
                v * self.pulse_phase[pulse]
            })
            .collect()
    }
}

/// D sampled pulses sharing one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSet {
    kind: WaveformKind,
    grid: SamplingGrid,
    pulses: Vec<Vec<Complex64>>,
    factors: PulseFactors,
    doppler_hz: f64,
}

impl PulseSet {
    fn from_factors(kind: WaveformKind, grid: SamplingGrid, factors: PulseFactors) -> Self {
        let d = factors.pulse_phase.len();
        let pulses = (0..d)
            .map(|i| factors.reconstruct(i, grid.samples_per_pulse))
            .collect();
        Self {
            kind,
            grid,
            pulses,
            factors,
            doppler_hz: 0.0,
        }
    }

    pub fn kind(&self) -> WaveformKind {
        self.kind
    }

    pub fn grid(&self) -> &SamplingGrid {
        &self.grid
    }

    /// Pulses per CPI.
    pub fn cpi(&self) -> usize {
        self.pulses.len()
    }

    pub fn pulse(&self, i: usize) -> &[Complex64] {
        &self.pulses[i]
    }

    pub fn pulses(&self) -> &[Vec<Complex64>] {
        &self.pulses
    }

    pub fn factors(&self) -> &PulseFactors {
        &self.factors
    }

    pub fn doppler_hz(&self) -> f64 {
        self.doppler_hz
    }

    /// Width of the mainlobe region excluded from sidelobe searches, in
    /// seconds: two chips for coded waveforms, `2/B` for chirps.
    pub fn mainlobe_exclusion(&self) -> f64 {
        match self.kind {
            WaveformKind::Lfm { bandwidth_hz } if bandwidth_hz > 0.0 => 2.0 / bandwidth_hz,
            _ => 2.0 * self.grid.chip_width(),
        }
    }

    /// Writes `pulse_index,sample_index,re,im` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["pulse_index", "sample_index", "re", "im"])?;
        for (i, p) in self.pulses.iter().enumerate() {
            for (k, v) in p.iter().enumerate() {
                w.write_record([
                    i.to_string(),
                    k.to_string(),
                    format!("{:.12e}", v.re),
                    format!("{:.12e}", v.im),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Phase-coded pulses with rectangular chips, one pulse per code row.
pub fn make_wdcss(a: &BinaryCodeMatrix, grid: SamplingGrid) -> Result<PulseSet> {
    if grid.chips() != a.n() || !grid.samples_per_pulse.is_multiple_of(grid.samples_per_chip) {
        return Err(Error::GridMismatch(format!(
            "grid holds {} chips but the code length is {}",
            grid.chips(),
            a.n()
        )));
    }
    let (d, n) = (a.d(), a.n());
    let mix = a.rows().flat_map(|r| r.iter().map(|&c| c as f64)).collect();
    let m = grid.samples_per_pulse;
    let factors = PulseFactors {
        rank: n,
        mix,
        pulse_phase: vec![Complex64::new(1.0, 0.0); d],
        per_sample: 1,
        basis_index: (0..m).map(|mu| (mu / grid.samples_per_chip) as u32).collect(),
        basis_value: vec![Complex64::new(1.0, 0.0); m],
    };
    Ok(PulseSet::from_factors(WaveformKind::Wdcss, grid, factors))
}

/// `cpi` identical chirps with phase `π(B/T)(t - T/2)²` over the pulse.
pub fn make_lfm(bandwidth_hz: f64, grid: SamplingGrid, cpi: usize) -> Result<PulseSet> {
    if !(bandwidth_hz >= 0.0 && bandwidth_hz.is_finite()) {
        return Err(Error::InvalidConfig(format!("bandwidth {bandwidth_hz}")));
    }
    if cpi == 0 {
        return Err(Error::InvalidConfig("CPI must be positive".into()));
    }
    let m = grid.samples_per_pulse;
    let width = grid.pulse_width();
    let rate = bandwidth_hz / width;
    let basis_value = (0..m)
        .map(|k| {
            let t = k as f64 / grid.sample_rate - width / 2.0;
            Complex64::from_polar(1.0, PI * rate * t * t)
        })
        .collect();
    let factors = PulseFactors {
        rank: 1,
        mix: vec![1.0; cpi],
        pulse_phase: vec![Complex64::new(1.0, 0.0); cpi],
        per_sample: 1,
        basis_index: vec![0; m],
        basis_value,
    };
    Ok(PulseSet::from_factors(
        WaveformKind::Lfm { bandwidth_hz },
        grid,
        factors,
    ))
}

const GOLAY_A10: [i8; 10] = [1, 1, -1, 1, -1, 1, -1, -1, 1, 1];
const GOLAY_B10: [i8; 10] = [1, 1, -1, 1, 1, 1, 1, 1, -1, -1];

/// Golay complementary pair of length `2^k` or `10·2^k`, grown from the
/// length-2 or length-10 seed by repeated `(a|b, a|-b)` concatenation.
pub fn golay_pair(n: usize) -> Result<(Vec<i8>, Vec<i8>)> {
    let (mut a, mut b, mut len) = if n >= 2 && n.is_power_of_two() {
        (vec![1, 1], vec![1, -1], 2)
    } else if n >= 10 && n.is_multiple_of(10) && (n / 10).is_power_of_two() {
        (GOLAY_A10.to_vec(), GOLAY_B10.to_vec(), 10)
    } else {
        return Err(Error::UnsupportedLength(n));
    };
    while len < n {
        let next_a = [a.as_slice(), b.as_slice()].concat();
        let next_b: Vec<i8> = a.iter().copied().chain(b.iter().map(|&c| -c)).collect();
        a = next_a;
        b = next_b;
        len *= 2;
    }
    Ok((a, b))
}

/// Pulse train alternating the two sequences of a Golay pair.
pub fn make_golay_set(n: usize, grid: SamplingGrid, cpi: usize) -> Result<PulseSet> {
    let (a, b) = golay_pair(n)?;
    if grid.chips() != n {
        return Err(Error::GridMismatch(format!(
            "grid holds {} chips, Golay length is {n}",
            grid.chips()
        )));
    }
    if cpi == 0 {
        return Err(Error::InvalidConfig("CPI must be positive".into()));
    }
    let m = grid.samples_per_pulse;
    let mut basis_index = Vec::with_capacity(2 * m);
    let mut basis_value = Vec::with_capacity(2 * m);
    for mu in 0..m {
        let chip = mu / grid.samples_per_chip;
        basis_index.extend([0, 1]);
        basis_value.push(Complex64::new(a[chip] as f64, 0.0));
        basis_value.push(Complex64::new(b[chip] as f64, 0.0));
    }
    let mix = (0..cpi)
        .flat_map(|i| if i % 2 == 0 { [1.0, 0.0] } else { [0.0, 1.0] })
        .collect();
    let factors = PulseFactors {
        rank: 2,
        mix,
        pulse_phase: vec![Complex64::new(1.0, 0.0); cpi],
        per_sample: 2,
        basis_index,
        basis_value,
    };
    Ok(PulseSet::from_factors(WaveformKind::Golay, grid, factors))
}

/// Multiplies pulse `i` by `exp(j2π f_d (i·PRI + μ/F_s))`, i.e. a Doppler
/// shift with time running continuously across the pulse train.
pub fn apply_doppler(ps: &PulseSet, fd_hz: f64, pri: f64) -> PulseSet {
    apply_doppler_parts(ps, fd_hz, pri, true)
}

/// Like [`apply_doppler`] but with the inter-pulse progression switched off,
/// leaving only the intra-pulse ramp.
pub fn apply_intra_pulse_doppler(ps: &PulseSet, fd_hz: f64) -> PulseSet {
    apply_doppler_parts(ps, fd_hz, 0.0, false)
}

fn apply_doppler_parts(ps: &PulseSet, fd_hz: f64, pri: f64, inter: bool) -> PulseSet {
    if fd_hz == 0.0 {
        return ps.clone();
    }
    let mut factors = ps.factors.clone();
    if inter {
        for (i, ph) in factors.pulse_phase.iter_mut().enumerate() {
            // Reduce the phase in cycles first to keep precision over long trains.
            let cycles = (fd_hz * pri * i as f64).fract();
            *ph *= Complex64::from_polar(1.0, 2.0 * PI * cycles);
        }
    }
    let fs = ps.grid.sample_rate;
    for mu in 0..ps.grid.samples_per_pulse {
        let rot = Complex64::from_polar(1.0, 2.0 * PI * fd_hz * mu as f64 / fs);
        for k in 0..factors.per_sample {
            factors.basis_value[mu * factors.per_sample + k] *= rot;
        }
    }
    let mut out = PulseSet::from_factors(ps.kind, ps.grid, factors);
    out.doppler_hz = ps.doppler_hz + fd_hz;
    out
}
