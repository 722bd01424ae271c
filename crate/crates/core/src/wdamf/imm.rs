//! Interacting multiple-model Kalman estimation of the waveform response
//! level from its cumulative coherence.
//!
//! Each real channel is filtered separately. Time runs in samples (`dμ = 1`),
//! the measurement at step `k` is the exclusive running sum
//! `z_k = Σ_{ν<k} w(ν)` and three motion models compete:
//!
//! * linear growth: the level `w` persists,
//! * negative impulse: the level is cancelled (`δ₋ = -w`),
//! * positive impulse: the level receives the kick `δ₊ = K·ô`.
//!
//! Receiver noise enters the measured sum as a Brownian component whose
//! increments have variance `D·σ²/2` per channel.
//!
//! The state carried here is `(s, w)` with `s = y + b` the measured sum (true
//! coherence plus Brownian noise). Because only `s` is observed and the
//! impulse states are rewritten before every use, this marginal evolves
//! exactly like the five-state `(y, w, δ₋, δ₊, b)` filter in
//! [`super::full_imm`], at a fraction of the cost.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImmConfig {
    /// Probability of leaving the linear-growth model at each step.
    pub p0: f64,
    /// Value substituted for zero transition probabilities.
    pub diag_floor: f64,
    /// Impulse gain K.
    pub impulse_gain: f64,
    /// Level random-walk variance of the linear model, relative to `|ô|²`.
    pub process_noise_scale: f64,
    /// Standard deviation of the impulse size, relative to `K·|ô|`.
    pub jump_noise_scale: f64,
    /// Measurement variance relative to the Brownian increment variance.
    pub measurement_noise_scale: f64,
    pub initial_weights: [f64; 3],
}

impl Default for ImmConfig {
    fn default() -> Self {
        Self {
            p0: 0.05,
            diag_floor: 1e-6,
            impulse_gain: 2.0,
            process_noise_scale: 1e-4,
            jump_noise_scale: 1.0,
            measurement_noise_scale: 1e-3,
            initial_weights: [0.9, 0.05, 0.05],
        }
    }
}

impl ImmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.p0 > 0.0 && self.p0 < 0.5) {
            return bad(format!("p0 = {} must lie in (0, 1/2)", self.p0));
        }
        if !(self.diag_floor > 0.0 && self.diag_floor < self.p0) {
            return bad(format!("diag_floor = {} must lie in (0, p0)", self.diag_floor));
        }
        if !(self.impulse_gain > 0.0) {
            return bad("impulse gain must be positive".into());
        }
        for (name, v) in [
            ("process_noise_scale", self.process_noise_scale),
            ("jump_noise_scale", self.jump_noise_scale),
            ("measurement_noise_scale", self.measurement_noise_scale),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} = {v} must be positive"));
            }
        }
        let sum: f64 = self.initial_weights.iter().sum();
        if self.initial_weights.iter().any(|&u| u < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return bad(format!("initial weights {:?} must sum to 1", self.initial_weights));
        }
        Ok(())
    }

    /// Row-stochastic model transition matrix `[from][to]`.
    pub fn transition_matrix(&self) -> [[f64; 3]; 3] {
        let p = self.p0;
        let raw = [[1.0 - 2.0 * p, p, p], [1.0, 0.0, 0.0], [1.0, 0.0, 0.0]];
        raw.map(|row| {
            let floored = row.map(|v| if v == 0.0 { self.diag_floor } else { v });
            let s: f64 = floored.iter().sum();
            floored.map(|v| v / s)
        })
    }
}

/// Noise level the estimator assumes for the snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseLevel {
    /// Pulses summed into the waveform response.
    pub d: usize,
    /// Receiver noise σ with `E|n|² = σ²`.
    pub sigma: f64,
}

/// Per-channel model parameters derived from the config and the snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub kick: f64,
    pub q_level: f64,
    pub q_jump: f64,
    pub q_brown: f64,
    pub r: f64,
}

/// Parameters for both channels given the mean level `ô` (sample units).
pub fn channel_params(cfg: &ImmConfig, o_hat: Complex64, noise: NoiseLevel) -> [ChannelParams; 2] {
    let level2 = o_hat.norm_sqr();
    let q_brown = noise.d as f64 * noise.sigma * noise.sigma / 2.0;
    let scale2 = level2.max(q_brown).max(1e-200);
    let floor = 1e-12 * scale2;
    let q_level = (cfg.process_noise_scale * level2).max(floor);
    let q_jump = (cfg.jump_noise_scale * cfg.impulse_gain).powi(2) * level2;
    let q_jump = q_jump.max(floor);
    let r = (cfg.measurement_noise_scale * q_brown).max(floor);
    [o_hat.re, o_hat.im].map(|o| ChannelParams {
        kick: cfg.impulse_gain * o,
        q_level,
        q_jump,
        q_brown,
        r,
    })
}

#[derive(Debug, Clone, Copy, Default)]
struct Gauss {
    s: f64,
    w: f64,
    pss: f64,
    psw: f64,
    pww: f64,
}

/// Fused estimates over the μ grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ImmOutput {
    /// Estimated waveform response level at each μ.
    pub w_hat: Vec<Complex64>,
    /// Filtered cumulative coherence (noise included) after each μ, in
    /// sample units.
    pub y_hat: Vec<Complex64>,
}

impl ImmOutput {
    pub fn y_end(&self) -> Complex64 {
        self.y_hat.last().copied().unwrap_or_default()
    }
}

/// Reusable state for [`estimate_into`]. The recursion keeps no buffers,
/// so this is empty; it is kept so callers can hold one per worker.
#[derive(Debug, Default)]
pub struct ImmScratch {}

/// Runs the estimator over one snapshot `w` (waveform response values).
pub fn estimate(w: &[Complex64], cfg: &ImmConfig, noise: NoiseLevel) -> Result<ImmOutput> {
    let mut out = ImmOutput {
        w_hat: vec![Complex64::new(0.0, 0.0); w.len()],
        y_hat: vec![Complex64::new(0.0, 0.0); w.len()],
    };
    estimate_into(w, cfg, noise, &mut ImmScratch::default(), &mut out)?;
    Ok(out)
}

/// As [`estimate`], writing into `out`.
pub fn estimate_into(
    w: &[Complex64],
    cfg: &ImmConfig,
    noise: NoiseLevel,
    _scratch: &mut ImmScratch,
    out: &mut ImmOutput,
) -> Result<()> {
    let m = w.len();
    out.w_hat.resize(m, Complex64::new(0.0, 0.0));
    out.y_hat.resize(m, Complex64::new(0.0, 0.0));
    if m == 0 {
        return Ok(());
    }
    let o_hat = w.iter().sum::<Complex64>() / m as f64;
    let [pr, pi_] = channel_params(cfg, o_hat, noise);
    let pi = cfg.transition_matrix();
    // The two channels are independent; stepping them together lets their
    // dependency chains overlap.
    let mut re = ChannelFilter::new(w[0].re, &pr, cfg.initial_weights);
    let mut im = ChannelFilter::new(w[0].im, &pi_, cfg.initial_weights);
    let (mut zr, mut zi) = (0.0, 0.0);
    for (k, v) in w.iter().enumerate() {
        zr += v.re;
        zi += v.im;
        let (sr, wr) = re.step(zr, &pr, &pi);
        let (si, wi) = im.step(zi, &pi_, &pi);
        out.w_hat[k] = Complex64::new(wr, wi);
        out.y_hat[k] = Complex64::new(sr, si);
    }
    if !out.y_hat.iter().chain(&out.w_hat).all(|v| v.is_finite()) {
        let k = out.y_hat.iter().zip(&out.w_hat).position(|(a, b)| !(a.is_finite() && b.is_finite()));
        return Err(Error::NumericalDivergence(format!(
            "estimate became non-finite after {} steps",
            k.unwrap_or(0)
        )));
    }
    Ok(())
}

/// Reduced per-channel IMM state.
struct ChannelFilter {
    est: [Gauss; 3],
    u: [f64; 3],
}

impl ChannelFilter {
    fn new(first: f64, p: &ChannelParams, init: [f64; 3]) -> Self {
        let start = Gauss {
            s: 0.0,
            w: first,
            pss: p.r,
            psw: 0.0,
            pww: 10.0 * (p.q_brown + p.r),
        };
        Self {
            est: [start; 3],
            u: init,
        }
    }

    /// One mix, predict, update and fuse cycle on measurement `z`; returns
    /// the fused `(s, w)`.
    #[inline(always)]
    fn step(&mut self, z: f64, p: &ChannelParams, pi: &[[f64; 3]; 3]) -> (f64, f64) {
        let (est, u) = (&mut self.est, &mut self.u);
        // Mixing.
        let mut c = [0.0; 3];
        for (j, cj) in c.iter_mut().enumerate() {
            *cj = pi[0][j] * u[0] + pi[1][j] * u[1] + pi[2][j] * u[2];
        }
        let mut mixed = [Gauss::default(); 3];
        for j in 0..3 {
            let inv = 1.0 / c[j];
            let om = [pi[0][j] * u[0] * inv, pi[1][j] * u[1] * inv, pi[2][j] * u[2] * inv];
            let s = om[0] * est[0].s + om[1] * est[1].s + om[2] * est[2].s;
            let w = om[0] * est[0].w + om[1] * est[1].w + om[2] * est[2].w;
            let (mut pss, mut psw, mut pww) = (0.0, 0.0, 0.0);
            for i in 0..3 {
                let (ds, dw) = (est[i].s - s, est[i].w - w);
                pss += om[i] * (est[i].pss + ds * ds);
                psw += om[i] * (est[i].psw + ds * dw);
                pww += om[i] * (est[i].pww + dw * dw);
            }
            mixed[j] = Gauss { s, w, pss, psw, pww };
        }
        // Model-conditioned predict and update; the likelihood of model j is
        // exp(expo[j])/sqrt(sv[j]).
        let mut expo = [0.0; 3];
        let mut svs = [0.0; 3];
        for j in 0..3 {
            let x = mixed[j];
            let base_pss = x.pss + 2.0 * x.psw + x.pww;
            let pred = match j {
                0 => Gauss {
                    s: x.s + x.w,
                    w: x.w,
                    pss: base_pss + p.q_brown,
                    psw: x.psw + x.pww,
                    pww: x.pww + p.q_level,
                },
                1 => Gauss {
                    s: x.s,
                    w: 0.0,
                    pss: x.pss + p.q_jump + p.q_brown,
                    psw: p.q_jump,
                    pww: p.q_jump,
                },
                _ => Gauss {
                    s: x.s + x.w + p.kick,
                    w: x.w + p.kick,
                    pss: base_pss + p.q_jump + p.q_brown,
                    psw: x.psw + x.pww + p.q_jump,
                    pww: x.pww + p.q_jump,
                },
            };
            let sv = pred.pss + p.r;
            let inv_sv = 1.0 / sv;
            let nu = z - pred.s;
            let (ks, kw) = (pred.pss * inv_sv, pred.psw * inv_sv);
            est[j] = Gauss {
                s: pred.s + ks * nu,
                w: pred.w + kw * nu,
                pss: (pred.pss - ks * pred.pss).max(0.0),
                psw: pred.psw - ks * pred.psw,
                pww: (pred.pww - kw * pred.psw).max(0.0),
            };
            expo[j] = -0.5 * nu * nu * inv_sv;
            svs[j] = sv;
        }
        let top = expo[0].max(expo[1]).max(expo[2]);
        let mut total = 0.0;
        for j in 0..3 {
            u[j] = c[j] * (expo[j] - top).exp() / svs[j].sqrt();
            total += u[j];
        }
        let inv_total = 1.0 / total;
        let (mut sf, mut wf) = (0.0, 0.0);
        for j in 0..3 {
            u[j] *= inv_total;
            sf += u[j] * est[j].s;
            wf += u[j] * est[j].w;
        }
        (sf, wf)
    }
}
