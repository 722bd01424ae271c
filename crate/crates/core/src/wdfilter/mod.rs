//! Waveform-domain matched filtering.
//!
//! At fast-time instant `t` the matched filter integrand, summed over the
//! CPI, is the waveform response
//!
//! ```text
//! w(t, μ) = Σ_i x_i(t+μ) conj(s_i(μ)),    μ over the pulse support,
//! ```
//!
//! and its running integral `y(t, ρ) = Σ_{μ≤ρ} w(t, μ) dμ` ends at the
//! ordinary matched filter output. Integrals are sums times `dμ = 1/F_s`.

mod ambiguity;
mod plane;

pub use ambiguity::{
    ambiguity, gate_harmonic, isdrj_analytic_mf, jamming_kappa, kappa, AmbiguityMode,
    AmbiguitySurface,
};
pub use plane::WaveformPlane;

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scene::ReceivedTrain;
use crate::waveform::{PulseSet, SamplingGrid};

/// `w(t, ·)` and its cumulative coherence `y(t, ·)` at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformSnapshot {
    /// Fast time in seconds.
    pub t: f64,
    pub w: Vec<Complex64>,
    /// `y[ρ] = Σ_{μ≤ρ} w[μ]·dμ`.
    pub y: Vec<Complex64>,
    pub dmu: f64,
}

impl WaveformSnapshot {
    pub fn new(t: f64, w: Vec<Complex64>, dmu: f64) -> Self {
        let y = cumulative(&w, dmu);
        Self { t, w, y, dmu }
    }

    /// `y` at the end of the pulse: the matched filter output at `t`.
    pub fn endpoint(&self) -> Complex64 {
        self.y.last().copied().unwrap_or_default()
    }
}

/// Inclusive running sum scaled by `dmu`.
pub fn cumulative(w: &[Complex64], dmu: f64) -> Vec<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    w.iter()
        .map(|v| {
            acc += v;
            acc * dmu
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Matched,
    BaselineWdamf,
    Wdamf,
}

impl ProfileKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProfileKind::Matched => "matched",
            ProfileKind::BaselineWdamf => "baseline_wdamf",
            ProfileKind::Wdamf => "wdamf",
        }
    }
}

/// Filter output versus fast time on the sample grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeProfile {
    pub kind: ProfileKind,
    pub grid: SamplingGrid,
    /// Fast-time sample index of `values[0]`.
    pub t_start: i64,
    pub values: Vec<Complex64>,
}

impl RangeProfile {
    pub fn time_of(&self, k: usize) -> f64 {
        self.grid.time_of(self.t_start + k as i64)
    }

    /// Index of the sample nearest to time `t`, if inside the profile.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let k = self.grid.index_of(t) - self.t_start;
        (k >= 0 && (k as usize) < self.values.len()).then_some(k as usize)
    }

    /// Writes `t_us,re,im,mag_db` rows with magnitudes in dB relative to
    /// `reference`.
    pub fn write_csv<W: Write>(&self, out: W, reference: f64) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t_us", "re", "im", "mag_db"])?;
        for (k, v) in self.values.iter().enumerate() {
            w.write_record([
                format!("{:.4}", self.time_of(k) * 1e6),
                format!("{:.9e}", v.re),
                format!("{:.9e}", v.im),
                format!("{:.6}", db(v.norm() / reference)),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `20·log10(x)`, floored at -400 dB so that exact zeros stay finite.
pub fn db(ratio: f64) -> f64 {
    (20.0 * ratio.log10()).max(-400.0)
}

fn t_index(rx: &ReceivedTrain, t: f64) -> Result<usize> {
    let k = rx.grid.index_of(t);
    if k < rx.t_start || k >= rx.t_end() {
        return Err(Error::OutOfWindow {
            index: k,
            start: rx.t_start,
            end: rx.t_end(),
        });
    }
    Ok((k - rx.t_start) as usize)
}

/// Direct evaluation of `w(t, ·)` by summing over every pulse.
pub fn waveform_response(rx: &ReceivedTrain, ps: &PulseSet, t: f64) -> Result<WaveformSnapshot> {
    plane::check_compatible(rx, ps)?;
    let k = t_index(rx, t)?;
    let m = ps.grid().samples_per_pulse;
    let mut w = vec![Complex64::new(0.0, 0.0); m];
    for (x, s) in rx.pulses.iter().zip(ps.pulses()) {
        for (mu, o) in w.iter_mut().enumerate() {
            *o += x[k + mu] * s[mu].conj();
        }
    }
    Ok(WaveformSnapshot::new(rx.time_of(k), w, ps.grid().dt()))
}

/// Snapshot at `t` taken from a prebuilt plane.
pub fn plane_snapshot(plane: &WaveformPlane, rx: &ReceivedTrain, t: f64) -> Result<WaveformSnapshot> {
    let k = t_index(rx, t)?;
    Ok(WaveformSnapshot::new(rx.time_of(k), plane.snapshot(k), plane.dt()))
}

/// Coherent matched filter over the CPI at every instant of the window.
pub fn matched_filter(rx: &ReceivedTrain, ps: &PulseSet) -> Result<RangeProfile> {
    let plane = WaveformPlane::new(rx, ps)?;
    Ok(matched_filter_from_plane(&plane, rx))
}

pub fn matched_filter_from_plane(plane: &WaveformPlane, rx: &ReceivedTrain) -> RangeProfile {
    let m = plane.snapshot_len();
    let values = (0..plane.t_len())
        .into_par_iter()
        .map_init(
            || vec![Complex64::new(0.0, 0.0); m],
            |buf, k| {
                plane.snapshot_into(k, buf);
                buf.iter().sum::<Complex64>() * plane.dt()
            },
        )
        .collect();
    RangeProfile {
        kind: ProfileKind::Matched,
        grid: rx.grid,
        t_start: rx.t_start,
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codeset::{generate_codeset, CodeGenerator, ColumnSelection};
    use crate::scene::{
        compose_train, compose_train_with, JammerMode, JammerParams, RadarParams, Scenario,
        TargetParams, TimeWindow, TrainComponents,
    };
    use crate::waveform::{apply_doppler, make_golay_set, make_lfm, make_wdcss};

    fn grid(n: usize) -> SamplingGrid {
        SamplingGrid::new(10e6, 1e-6, n).unwrap()
    }

    fn wdcss(d: usize, n: usize) -> PulseSet {
        let a = generate_codeset(d, n, CodeGenerator::Cascade, 0, ColumnSelection::Leading)
            .unwrap();
        make_wdcss(&a, grid(n)).unwrap()
    }

    fn scenario(cpi: usize, jam: Option<JammerMode>, sigma: f64) -> Scenario {
        Scenario {
            radar: RadarParams {
                carrier_hz: 2e9,
                pri: 480e-6,
                cpi,
            },
            target: TargetParams {
                delay: 0.0,
                snr_db: 0.0,
                doppler_hz: 0.0,
            },
            jammer: jam.map(|mode| JammerParams {
                mode,
                sample_period: 8e-6,
                slice_ratio: 0.25,
                repeat_count: 3,
                cycle_count: 3,
                delay: 6e-6,
                jnr_db: 20.0,
            }),
            noise_sigma: sigma,
            seed: 9,
            window: TimeWindow {
                start: -10e-6,
                end: 60e-6,
            },
        }
    }

    #[test]
    fn plane_matches_direct_sum_for_every_kind() {
        let sets = [
            wdcss(16, 12),
            make_lfm(2e6, grid(12), 16).unwrap(),
            make_golay_set(8, grid(8), 16).unwrap(),
            apply_doppler(&wdcss(16, 12), 3e3, 480e-6),
        ];
        for ps in &sets {
            let sc = scenario(ps.cpi(), Some(JammerMode::Isrrj), 1.0);
            let rx = compose_train(ps, &sc).unwrap();
            let plane = WaveformPlane::new(&rx, ps).unwrap();
            for t in [-10e-6, -1e-6, 0.0, 0.3e-6, 6e-6, 25e-6, 59.9e-6] {
                let a = waveform_response(&rx, ps, t).unwrap();
                let b = plane_snapshot(&plane, &rx, t).unwrap();
                for (u, v) in a.w.iter().zip(&b.w) {
                    assert!((u - v).norm() < 1e-9 * (1.0 + u.norm()));
                }
            }
        }
    }

    #[test]
    fn clean_echo_snapshots() {
        let ps = wdcss(16, 12);
        let sc = scenario(16, None, 0.0);
        let rx = compose_train(&ps, &sc).unwrap();
        let at = waveform_response(&rx, &ps, 0.0).unwrap();
        assert!(at.w.iter().all(|v| (v.norm() - 16.0).abs() < 1e-12));
        let mf_peak = at.endpoint();
        assert!((mf_peak.norm() - 16.0 * 12e-6).abs() < 1e-15);
        for t in [-5e-6, -1.1e-6, 1.1e-6, 3e-6, 11e-6] {
            let s = waveform_response(&rx, &ps, t).unwrap();
            assert!(s.w.iter().all(|v| v.norm() < 1e-9 * 16.0), "t={t}");
        }
        assert!(matches!(
            waveform_response(&rx, &ps, 1.0),
            Err(Error::OutOfWindow { .. })
        ));
    }

    #[test]
    fn endpoint_equals_matched_filter() {
        let ps = make_lfm(2e6, grid(12), 8).unwrap();
        let sc = scenario(8, Some(JammerMode::Isdrj), 1.0);
        let rx = compose_train(&ps, &sc).unwrap();
        let mf = matched_filter(&rx, &ps).unwrap();
        for k in [0usize, 50, 100, 250, 699] {
            let snap = waveform_response(&rx, &ps, rx.time_of(k)).unwrap();
            let a = snap.endpoint();
            assert!((a - mf.values[k]).norm() <= 1e-9 * a.norm().max(1e-12));
        }
    }

    #[test]
    fn response_is_linear() {
        let ps = wdcss(16, 12);
        let sc = scenario(16, Some(JammerMode::Iscrj), 1.0);
        let all = compose_train(&ps, &sc).unwrap();
        let mut parts = Vec::new();
        for c in [TrainComponents::TARGET_ONLY, TrainComponents::JAMMER_ONLY, TrainComponents::NOISE_ONLY] {
            parts.push(compose_train_with(&ps, &sc, c).unwrap());
        }
        for t in [0.0, 6e-6, 14e-6] {
            let total = waveform_response(&all, &ps, t).unwrap();
            let sum: Vec<Complex64> = (0..total.w.len())
                .map(|mu| {
                    parts
                        .iter()
                        .map(|rx| waveform_response(rx, &ps, t).unwrap().w[mu])
                        .sum()
                })
                .collect();
            for (a, b) in total.w.iter().zip(&sum) {
                assert!((a - b).norm() < 1e-9 * (1.0 + a.norm()));
            }
        }
    }

    #[test]
    fn zero_input_gives_zero_profile() {
        let ps = wdcss(16, 12);
        let mut sc = scenario(16, None, 0.0);
        sc.target.snr_db = f64::NEG_INFINITY;
        let rx = compose_train(&ps, &sc).unwrap();
        let mf = matched_filter(&rx, &ps).unwrap();
        assert!(mf.values.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let ps = wdcss(16, 12);
        let rx = compose_train(&ps, &scenario(16, None, 1.0)).unwrap();
        let other = wdcss(16, 8);
        assert!(matches!(matched_filter(&rx, &other), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn profile_csv_schema() {
        let ps = wdcss(16, 12);
        let rx = compose_train(&ps, &scenario(16, None, 0.0)).unwrap();
        let mf = matched_filter(&rx, &ps).unwrap();
        let mut buf = Vec::new();
        mf.write_csv(&mut buf, 16.0 * 12e-6).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t_us,re,im,mag_db"));
        let peak = text.lines().find(|l| l.starts_with("0.0000,")).unwrap();
        assert!(peak.ends_with(",0.000000") || peak.ends_with(",-0.000000"), "{peak}");
    }
}
