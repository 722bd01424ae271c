//! Five-state reference form of the estimator in [`super::imm`].
//!
//! State `(y, w, δ₋, δ₊, b)`: coherence, level, negative and positive impulse,
//! Brownian noise. The measurement is `y + b`. Before the negative-impulse
//! transition `δ₋` is set to `-w`; before the positive one `δ₊` is set to the
//! known kick `K·ô`. Both resets carry the impulse-size variance.
//!
//! This version spells out every matrix and is used to check the fast path.

use nalgebra::{Matrix5, RowVector5, Vector5};
use num_complex::Complex64;

use super::imm::{channel_params, ChannelParams, ImmConfig, ImmOutput, NoiseLevel};
use crate::error::{Error, Result};

const Y: usize = 0;
const W: usize = 1;
const DM: usize = 2;
const DP: usize = 3;
const B: usize = 4;

/// Per-channel state of the three model-conditioned filters.
#[derive(Debug, Clone, PartialEq)]
pub struct ImmState {
    pub x: [Vector5<f64>; 3],
    pub p: [Matrix5<f64>; 3],
    pub weights: [f64; 3],
}

impl ImmState {
    fn new(first_increment: f64, params: &ChannelParams, weights: [f64; 3]) -> Self {
        let mut x = Vector5::zeros();
        x[W] = first_increment;
        let mut p = Matrix5::zeros();
        p[(Y, Y)] = params.r;
        p[(W, W)] = 10.0 * (params.q_brown + params.r);
        Self {
            x: [x; 3],
            p: [p; 3],
            weights,
        }
    }

    /// Weighted combination of the model estimates.
    pub fn fused(&self) -> Vector5<f64> {
        (0..3).map(|j| self.x[j] * self.weights[j]).sum()
    }
}

/// Reference five-state interacting multiple-model filter.
pub struct FullStateImm {
    f: [Matrix5<f64>; 3],
    h: RowVector5<f64>,
    pi: [[f64; 3]; 3],
}

impl FullStateImm {
    pub fn new(cfg: &ImmConfig) -> Self {
        let mut f1 = Matrix5::identity();
        f1[(Y, W)] = 1.0;
        f1[(DM, DM)] = 0.0;

        let mut f2 = Matrix5::identity();
        f2[(Y, W)] = 1.0;
        f2[(Y, DM)] = 1.0;
        f2[(W, DM)] = 1.0;
        f2[(DM, DM)] = 0.0;
        f2[(DM, W)] = -1.0;

        let mut f3 = Matrix5::identity();
        f3[(Y, W)] = 1.0;
        f3[(Y, DP)] = 1.0;
        f3[(W, DP)] = 1.0;
        f3[(DM, DM)] = 0.0;

        Self {
            f: [f1, f2, f3],
            h: RowVector5::new(1.0, 0.0, 0.0, 0.0, 1.0),
            pi: cfg.transition_matrix(),
        }
    }

    /// Impulse-state reset applied before transition `model`.
    fn reset(&self, model: usize, x: &mut Vector5<f64>, p: &mut Matrix5<f64>, params: &ChannelParams) {
        match model {
            1 => {
                let mut j = Matrix5::identity();
                j[(DM, DM)] = 0.0;
                j[(DM, W)] = -1.0;
                *x = j * *x;
                *p = j * *p * j.transpose();
                p[(DM, DM)] += params.q_jump;
            }
            2 => {
                x[DP] = params.kick;
                for k in 0..5 {
                    p[(DP, k)] = 0.0;
                    p[(k, DP)] = 0.0;
                }
                p[(DP, DP)] = params.q_jump;
            }
            _ => {}
        }
    }

    fn process_noise(model: usize, params: &ChannelParams) -> Matrix5<f64> {
        let mut q = Matrix5::zeros();
        q[(B, B)] = params.q_brown;
        if model == 0 {
            q[(W, W)] = params.q_level;
        }
        q
    }

    /// One mixing, prediction and update cycle with measurement `z`.
    pub fn step(&self, state: &mut ImmState, z: f64, params: &ChannelParams) -> Result<()> {
        let u = state.weights;
        let c: [f64; 3] = [0, 1, 2].map(|j| (0..3).map(|i| self.pi[i][j] * u[i]).sum());
        let mut mixed_x = [Vector5::zeros(); 3];
        let mut mixed_p = [Matrix5::zeros(); 3];
        for j in 0..3 {
            let om = [0, 1, 2].map(|i| self.pi[i][j] * u[i] / c[j]);
            let xm: Vector5<f64> = (0..3).map(|i| state.x[i] * om[i]).sum();
            let mut pm = Matrix5::zeros();
            for ((x, p), w) in state.x.iter().zip(&state.p).zip(om) {
                let dx = x - xm;
                pm += (p + dx * dx.transpose()) * w;
            }
            mixed_x[j] = xm;
            mixed_p[j] = pm;
        }
        let mut logl = [0.0; 3];
        for j in 0..3 {
            let (mut x, mut p) = (mixed_x[j], mixed_p[j]);
            self.reset(j, &mut x, &mut p, params);
            x = self.f[j] * x;
            p = self.f[j] * p * self.f[j].transpose() + Self::process_noise(j, params);
            let s = (self.h * p * self.h.transpose())[(0, 0)] + params.r;
            let nu = z - (self.h * x)[(0, 0)];
            let k = p * self.h.transpose() / s;
            x += k * nu;
            p -= k * s * k.transpose();
            p = (p + p.transpose()) * 0.5;
            if (0..5).any(|d| p[(d, d)] < -1e-9 * (1.0 + p.diagonal().abs().max())) {
                return Err(Error::NumericalDivergence(
                    "reference filter covariance lost positive semidefiniteness".into(),
                ));
            }
            state.x[j] = x;
            state.p[j] = p;
            logl[j] = -0.5 * (nu * nu / s + s.ln()) + c[j].ln();
        }
        let top = logl.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e = logl.map(|l| (l - top).exp());
        let total: f64 = e.iter().sum();
        state.weights = e.map(|v| v / total);
        Ok(())
    }

    /// Runs the reference filter over one snapshot.
    pub fn estimate(&self, w: &[Complex64], cfg: &ImmConfig, noise: NoiseLevel) -> Result<ImmOutput> {
        let m = w.len();
        let mut out = ImmOutput {
            w_hat: vec![Complex64::new(0.0, 0.0); m],
            y_hat: vec![Complex64::new(0.0, 0.0); m],
        };
        if m == 0 {
            return Ok(out);
        }
        let o_hat = w.iter().sum::<Complex64>() / m as f64;
        let params = channel_params(cfg, o_hat, noise);
        for (ch, p) in params.iter().enumerate() {
            let part = |v: &Complex64| if ch == 0 { v.re } else { v.im };
            let mut state = ImmState::new(part(&w[0]), p, cfg.initial_weights);
            let mut z = 0.0;
            for (k, v) in w.iter().enumerate() {
                z += part(v);
                self.step(&mut state, z, p)?;
                let x = state.fused();
                let (wv, yv) = (x[W], x[Y] + x[B]);
                if ch == 0 {
                    out.w_hat[k].re = wv;
                    out.y_hat[k].re = yv;
                } else {
                    out.w_hat[k].im = wv;
                    out.y_hat[k].im = yv;
                }
            }
        }
        Ok(out)
    }
}
