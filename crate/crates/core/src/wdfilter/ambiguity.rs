//! Noise-free correlation structure of a pulse set: the κ sparsity ratio,
//! the delay-Doppler ambiguity surface and the harmonic prediction of the
//! direct-repeater matched filter output.
//!
//! All three reduce to the pulse-summed lag product
//! `Σ_i c_i · s_i(μ) · conj(s_i(μ+l))`, which the factorization turns into a
//! small R×R Gram matrix `G(r, r') = Σ_i c_i m[i][r] m[i][r']`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scene::{JammerMode, JammerParams, JammerTiming};
use crate::waveform::PulseSet;

/// Pulse-summed Gram matrix with per-pulse weights `c_i`.
fn gram(ps: &PulseSet, weights: impl Fn(usize) -> Complex64) -> Vec<Complex64> {
    let f = ps.factors();
    let r = f.rank;
    let mut g = vec![Complex64::new(0.0, 0.0); r * r];
    for i in 0..ps.cpi() {
        let c = weights(i);
        let row = f.mix_row(i);
        for (a, &ma) in row.iter().enumerate() {
            if ma == 0.0 {
                continue;
            }
            let ca = c * ma;
            for (b, &mb) in row.iter().enumerate() {
                if mb != 0.0 {
                    g[a * r + b] += ca * mb;
                }
            }
        }
    }
    g
}

/// `u(μ) = Σ_i c_i s_i(μ+lead) conj(s_i(μ))` for one lag, written into `out`
/// (zero where `μ+lead` leaves the pulse). Pulse phases cancel in the product.
fn lag_product(ps: &PulseSet, g: &[Complex64], lead: i64, out: &mut [Complex64]) {
    let f = ps.factors();
    let m = ps.grid().samples_per_pulse as i64;
    let k = f.per_sample;
    for (mu, o) in out.iter_mut().enumerate() {
        let nu = mu as i64 + lead;
        *o = Complex64::new(0.0, 0.0);
        if nu < 0 || nu >= m {
            continue;
        }
        let nu = nu as usize;
        for p in nu * k..(nu + 1) * k {
            for q in mu * k..(mu + 1) * k {
                let gi = f.basis_index[p] as usize * f.rank + f.basis_index[q] as usize;
                *o += f.basis_value[p] * f.basis_value[q].conj() * g[gi];
            }
        }
    }
}

fn lag_samples(ps: &PulseSet, t: f64) -> i64 {
    ps.grid().index_of(t)
}

/// κ(t) for each `t`: fraction of the pulse where the noise-free waveform
/// response exceeds `rel_tol` times its zero-lag peak.
pub fn kappa(ps: &PulseSet, ts: &[f64], rel_tol: f64) -> Vec<f64> {
    let g = gram(ps, |_| Complex64::new(1.0, 0.0));
    let m = ps.grid().samples_per_pulse;
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    lag_product(ps, &g, 0, &mut buf);
    let floor = rel_tol * buf.iter().map(|v| v.norm()).fold(0.0, f64::max);
    ts.iter()
        .map(|&t| {
            lag_product(ps, &g, lag_samples(ps, t), &mut buf);
            buf.iter().filter(|v| v.norm() > floor).count() as f64 / m as f64
        })
        .collect()
}

/// κ of the jamming waveform response, with `t` measured from the jammer
/// delay and the threshold referenced to the target's zero-lag peak.
pub fn jamming_kappa(ps: &PulseSet, jp: &JammerParams, ts: &[f64], rel_tol: f64) -> Result<Vec<f64>> {
    let timing = JammerTiming::new(jp, ps.grid())?;
    let g = gram(ps, |_| Complex64::new(1.0, 0.0));
    let m = ps.grid().samples_per_pulse;
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    lag_product(ps, &g, 0, &mut buf);
    let floor = rel_tol * buf.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let gate = |n: i64| {
        n >= 0 && (n as usize) < m && (n as usize) % timing.period_samples.max(1) < timing.slice_samples
    };
    let mut total = vec![Complex64::new(0.0, 0.0); m];
    Ok(ts
        .iter()
        .map(|&t| {
            let lead = lag_samples(ps, t);
            total.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            for &shift in &timing.shifts {
                let l = lead - shift as i64;
                lag_product(ps, &g, l, &mut buf);
                for (mu, (o, v)) in total.iter_mut().zip(&buf).enumerate() {
                    if gate(mu as i64 + l) {
                        *o += v;
                    }
                }
            }
            total.iter().filter(|v| v.norm() > floor).count() as f64 / m as f64
        })
        .collect())
}

/// Whether the Doppler phase progresses from pulse to pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AmbiguityMode {
    /// Coherent over the CPI: pulse `i` carries `exp(j2π f i PRI)`.
    #[default]
    Cpi,
    /// Intra-pulse Doppler only.
    IntraPulse,
}

/// `|χ(t, f_d)|` on a grid, normalized so that `|χ(0, 0)| = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmbiguitySurface {
    pub t: Vec<f64>,
    pub fd: Vec<f64>,
    /// Row-major over (t, fd).
    pub values: Vec<Complex64>,
}

impl AmbiguitySurface {
    pub fn at(&self, ti: usize, fi: usize) -> Complex64 {
        self.values[ti * self.fd.len() + fi]
    }

    /// Writes `t_us,fd_hz,mag_db` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t_us", "fd_hz", "mag_db"])?;
        for (ti, t) in self.t.iter().enumerate() {
            for (fi, f) in self.fd.iter().enumerate() {
                w.write_record([
                    format!("{:.4}", t * 1e6),
                    format!("{f:.6}"),
                    format!("{:.6}", super::db(self.at(ti, fi).norm())),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Unnormalized `χ(t, f) = Σ_i e^{j2π f i PRI} Σ_μ s_i(μ) conj(s_i(t+μ)) e^{j2π f μ/F_s}`,
/// with the inter-pulse factor dropped in intra-pulse mode.
fn chi_raw(ps: &PulseSet, ts: &[f64], fds: &[f64], pri: f64, mode: AmbiguityMode) -> Vec<Complex64> {
    let m = ps.grid().samples_per_pulse;
    let fs = ps.grid().sample_rate;
    let columns: Vec<Vec<Complex64>> = fds
        .par_iter()
        .map(|&f| {
            let g = gram(ps, |i| match mode {
                AmbiguityMode::Cpi => Complex64::from_polar(1.0, 2.0 * PI * (f * pri * i as f64).fract()),
                AmbiguityMode::IntraPulse => Complex64::new(1.0, 0.0),
            });
            let ramp: Vec<Complex64> = (0..m)
                .map(|mu| Complex64::from_polar(1.0, 2.0 * PI * f * mu as f64 / fs))
                .collect();
            let mut buf = vec![Complex64::new(0.0, 0.0); m];
            ts.iter()
                .map(|&t| {
                    // lag_product gives Σ c_i s_i(μ+l) conj(s_i(μ)); χ needs the
                    // conjugate ordering, so evaluate at -l and shift μ.
                    let l = lag_samples(ps, t);
                    lag_product(ps, &g, -l, &mut buf);
                    // buf[ν] = Σ c_i s_i(ν-l) conj(s_i(ν)); with μ = ν-l this is
                    // Σ c_i s_i(μ) conj(s_i(μ+l)) located at ν = μ+l.
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (nu, v) in buf.iter().enumerate() {
                        let mu = nu as i64 - l;
                        if (0..m as i64).contains(&mu) {
                            acc += v * ramp[mu as usize];
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); ts.len() * fds.len()];
    for (fi, col) in columns.iter().enumerate() {
        for (ti, v) in col.iter().enumerate() {
            out[ti * fds.len() + fi] = *v;
        }
    }
    out
}

pub fn ambiguity(
    ps: &PulseSet,
    ts: &[f64],
    fds: &[f64],
    pri: f64,
    mode: AmbiguityMode,
) -> AmbiguitySurface {
    let peak = chi_raw(ps, &[0.0], &[0.0], pri, mode)[0].norm();
    let values = chi_raw(ps, ts, fds, pri, mode)
        .into_iter()
        .map(|v| v / peak)
        .collect();
    AmbiguitySurface {
        t: ts.to_vec(),
        fd: fds.to_vec(),
        values,
    }
}

/// Amplitude of gate harmonic `q`: `ε·sinc(π q ε)`.
pub fn gate_harmonic(q: i64, slice_ratio: f64) -> f64 {
    let x = PI * q as f64 * slice_ratio;
    if x == 0.0 {
        slice_ratio
    } else {
        slice_ratio * x.sin() / x
    }
}

/// Matched filter output of a noise-free direct repeater predicted from the
/// gate's Fourier series truncated to `|q| ≤ q_max`:
///
/// ```text
/// ȷ(t) = A_ȷ dμ Σ_q c_q e^{j2π q f_J t} conj(χ_intra(t, -q f_J)),
/// c_q  = ε sinc(π q ε) e^{-jπ q ε}.
/// ```
///
/// `ts` are lags relative to the jammer delay. The phase on `c_q` comes from
/// the gate opening at the start of each period rather than being centred.
pub fn isdrj_analytic_mf(
    jp: &JammerParams,
    ps: &PulseSet,
    jammer_amplitude: f64,
    q_max: usize,
    ts: &[f64],
) -> Result<Vec<Complex64>> {
    if jp.mode != JammerMode::Isdrj {
        return Err(Error::InvalidConfig(
            "harmonic prediction applies to the direct repeater only".into(),
        ));
    }
    let f_j = 1.0 / jp.sample_period;
    let q = q_max as i64;
    let qs: Vec<i64> = (-q..=q).collect();
    let fds: Vec<f64> = qs.iter().map(|&q| -(q as f64) * f_j).collect();
    let chi = chi_raw(ps, ts, &fds, 0.0, AmbiguityMode::IntraPulse);
    let dmu = ps.grid().dt();
    Ok(ts
        .iter()
        .enumerate()
        .map(|(ti, &t)| {
            let t = lag_samples(ps, t) as f64 * dmu;
            qs.iter()
                .enumerate()
                .map(|(qi, &q)| {
                    let c = Complex64::from_polar(
                        gate_harmonic(q, jp.slice_ratio),
                        -PI * q as f64 * jp.slice_ratio,
                    );
                    let rot = Complex64::from_polar(1.0, 2.0 * PI * q as f64 * f_j * t);
                    c * rot * chi[ti * fds.len() + qi].conj()
                })
                .sum::<Complex64>()
                * jammer_amplitude
                * dmu
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codeset::{generate_codeset, CodeGenerator, ColumnSelection};
    use crate::waveform::{apply_intra_pulse_doppler, make_lfm, make_wdcss, SamplingGrid};

    fn grid(n: usize) -> SamplingGrid {
        SamplingGrid::new(10e6, 1e-6, n).unwrap()
    }

    fn wdcss(d: usize, n: usize) -> PulseSet {
        let a = generate_codeset(d, n, CodeGenerator::Cascade, 0, ColumnSelection::Leading)
            .unwrap();
        make_wdcss(&a, grid(n)).unwrap()
    }

    /// Direct χ straight from the definition.
    fn chi_direct(ps: &PulseSet, l: i64, f: f64, pri: f64) -> Complex64 {
        let fs = ps.grid().sample_rate;
        let m = ps.grid().samples_per_pulse as i64;
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, s) in ps.pulses().iter().enumerate() {
            let ph = Complex64::from_polar(1.0, 2.0 * PI * f * pri * i as f64);
            for mu in 0..m {
                let nu = mu + l;
                if (0..m).contains(&nu) {
                    acc += ph
                        * s[mu as usize]
                        * s[nu as usize].conj()
                        * Complex64::from_polar(1.0, 2.0 * PI * f * mu as f64 / fs);
                }
            }
        }
        acc
    }

    #[test]
    fn chi_matches_definition() {
        for ps in [wdcss(16, 6), make_lfm(2e6, grid(6), 4).unwrap()] {
            let ts = [-3e-6, -0.4e-6, 0.0, 0.7e-6, 2.5e-6];
            let fds = [0.0, 1.3e3, -40e3];
            let raw = chi_raw(&ps, &ts, &fds, 480e-6, AmbiguityMode::Cpi);
            for (ti, &t) in ts.iter().enumerate() {
                for (fi, &f) in fds.iter().enumerate() {
                    let d = chi_direct(&ps, lag_samples(&ps, t), f, 480e-6);
                    assert!((raw[ti * 3 + fi] - d).norm() < 1e-9 * (1.0 + d.norm()));
                }
            }
        }
    }

    #[test]
    fn ambiguity_normalization_and_sparsity() {
        let ps = wdcss(32, 16);
        let ts: Vec<f64> = (-30..=30).map(|k| k as f64 * 0.5e-6).collect();
        let s = ambiguity(&ps, &ts, &[0.0], 480e-6, AmbiguityMode::Cpi);
        let zero = ts.iter().position(|&t| t == 0.0).unwrap();
        assert!((s.at(zero, 0).norm() - 1.0).abs() < 1e-12);
        for (ti, &t) in ts.iter().enumerate() {
            if t.abs() > 1e-6 + 1e-12 {
                assert!(s.at(ti, 0).norm() < 1e-12, "t={t}");
            }
        }
    }

    #[test]
    fn cpi_doppler_cut_decays() {
        let ps = wdcss(32, 16);
        let pri = 480e-6;
        let width = 1.0 / (32.0 * pri);
        let s = ambiguity(&ps, &[0.0], &[0.0, 0.25 * width, width, 2.0 * width], pri, AmbiguityMode::Cpi);
        let cut: Vec<f64> = (0..4).map(|fi| s.at(0, fi).norm()).collect();
        assert!(cut[1] < cut[0] && cut[1] > 0.5);
        assert!(cut[2] < 0.3, "{cut:?}");
    }

    #[test]
    fn kappa_examples() {
        let ps = wdcss(16, 8);
        let k = kappa(&ps, &[0.0, 0.5e-6, 1.1e-6, 3e-6, -5e-6], 1e-6);
        assert_eq!(k[0], 1.0);
        assert!(k[1] > 0.0);
        assert_eq!(&k[2..], &[0.0, 0.0, 0.0]);
        let lfm = make_lfm(2e6, grid(8), 4).unwrap();
        let k = kappa(&lfm, &[4e-6, -2e-6], 1e-6);
        assert!((k[0] - 0.5).abs() < 1e-12);
        assert!((k[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn intra_pulse_doppler_keeps_complementarity() {
        let ps = apply_intra_pulse_doppler(&wdcss(16, 8), 20e3);
        let k = kappa(&ps, &[1.5e-6, 4e-6, -2e-6], 1e-9);
        assert!(k.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn harmonic_amplitudes() {
        assert_eq!(gate_harmonic(0, 0.1), 0.1);
        assert!(gate_harmonic(10, 0.1).abs() < 1e-15);
        assert!(gate_harmonic(5, 0.2).abs() < 1e-15);
    }
}
