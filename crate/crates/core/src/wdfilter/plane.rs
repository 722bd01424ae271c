//! CPI-collapsed receive buffers.
//!
//! For a pulse set with factors `s_i(μ) = φ_i Σ_r m[i][r] b_r(μ)` the
//! waveform response is
//!
//! ```text
//! w(t, μ) = Σ_i x_i(t+μ) conj(s_i(μ)) = Σ_r conj(b_r(μ)) · Z_r(t+μ),
//! Z_r(k)  = Σ_i m[i][r] conj(φ_i) x_i(k),
//! ```
//!
//! so the D-fold sum is paid once per receive sample instead of once per
//! (t, μ) pair. When the mixing columns are columns of a Sylvester Hadamard
//! matrix the Z rows come out of a single fast Walsh-Hadamard transform.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scene::ReceivedTrain;
use crate::waveform::{PulseFactors, PulseSet};

pub struct WaveformPlane {
    m: usize,
    t_start: i64,
    t_len: usize,
    dt: f64,
    per_sample: usize,
    basis_index: Vec<u32>,
    basis_conj: Vec<Complex64>,
    unit_basis: bool,
    z: Vec<Vec<Complex64>>,
}

impl WaveformPlane {
    pub fn new(rx: &ReceivedTrain, ps: &PulseSet) -> Result<Self> {
        check_compatible(rx, ps)?;
        let f = ps.factors();
        let mut x: Vec<Vec<Complex64>> = rx.pulses.clone();
        for (row, ph) in x.iter_mut().zip(&f.pulse_phase) {
            if *ph != Complex64::new(1.0, 0.0) {
                let c = ph.conj();
                row.iter_mut().for_each(|v| *v *= c);
            }
        }
        let z = match sylvester_columns(f) {
            Some(cols) => {
                fwht_rows(&mut x);
                cols.iter()
                    .map(|&(c, sign)| {
                        let mut row = x[c].clone();
                        if sign < 0.0 {
                            row.iter_mut().for_each(|v| *v = -*v);
                        }
                        row
                    })
                    .collect()
            }
            None => mix_rows(f, &x),
        };
        let basis_conj: Vec<Complex64> = f.basis_value.iter().map(|b| b.conj()).collect();
        let unit_basis =
            f.per_sample == 1 && basis_conj.iter().all(|b| *b == Complex64::new(1.0, 0.0));
        Ok(Self {
            m: ps.grid().samples_per_pulse,
            t_start: rx.t_start,
            t_len: rx.t_len,
            dt: ps.grid().dt(),
            per_sample: f.per_sample,
            basis_index: f.basis_index.clone(),
            basis_conj,
            unit_basis,
            z,
        })
    }

    /// Samples per pulse (length of every snapshot).
    pub fn snapshot_len(&self) -> usize {
        self.m
    }

    pub fn t_start(&self) -> i64 {
        self.t_start
    }

    pub fn t_len(&self) -> usize {
        self.t_len
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Writes `w(t, ·)` for output instant `t_index` into `out`.
    pub fn snapshot_into(&self, t_index: usize, out: &mut [Complex64]) {
        assert!(t_index < self.t_len && out.len() == self.m);
        if self.unit_basis {
            for (mu, o) in out.iter_mut().enumerate() {
                *o = self.z[self.basis_index[mu] as usize][t_index + mu];
            }
            return;
        }
        let ps = self.per_sample;
        for (mu, o) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in mu * ps..(mu + 1) * ps {
                acc += self.basis_conj[k] * self.z[self.basis_index[k] as usize][t_index + mu];
            }
            *o = acc;
        }
    }

    pub fn snapshot(&self, t_index: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.m];
        self.snapshot_into(t_index, &mut out);
        out
    }
}

pub(crate) fn check_compatible(rx: &ReceivedTrain, ps: &PulseSet) -> Result<()> {
    if rx.grid != *ps.grid() {
        return Err(Error::GridMismatch(
            "received train and pulse set use different grids".into(),
        ));
    }
    if rx.cpi() != ps.cpi() {
        return Err(Error::GridMismatch(format!(
            "received train has {} pulses, pulse set has {}",
            rx.cpi(),
            ps.cpi()
        )));
    }
    let need = rx.t_len + ps.grid().samples_per_pulse;
    if rx.pulses.iter().any(|p| p.len() != need) {
        return Err(Error::GridMismatch("received pulse buffers have the wrong length".into()));
    }
    Ok(())
}

/// `(row, sign)` per mixing column when every column is `±` a column of the
/// Sylvester Hadamard matrix of order D.
fn sylvester_columns(f: &PulseFactors) -> Option<Vec<(usize, f64)>> {
    let d = f.pulse_phase.len();
    if d < 2 || !d.is_power_of_two() {
        return None;
    }
    let bits = d.trailing_zeros();
    (0..f.rank)
        .map(|r| {
            let col = |i: usize| f.mix[i * f.rank + r];
            let sign = col(0);
            if sign != 1.0 && sign != -1.0 {
                return None;
            }
            let c = (0..bits)
                .filter(|&b| col(1 << b) * sign < 0.0)
                .fold(0usize, |acc, b| acc | (1 << b));
            let matches = (0..d).all(|i| {
                let h = if (i & c).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                col(i) == sign * h
            });
            matches.then_some((c, sign))
        })
        .collect()
}

/// In-place Walsh-Hadamard transform across rows (natural ordering).
fn fwht_rows(x: &mut [Vec<Complex64>]) {
    let d = x.len();
    let mut h = 1;
    while h < d {
        for block in (0..d).step_by(2 * h) {
            for j in block..block + h {
                let (lo, hi) = x.split_at_mut(j + h);
                let (a, b) = (&mut lo[j], &mut hi[0]);
                for (u, v) in a.iter_mut().zip(b.iter_mut()) {
                    let (s, t) = (*u + *v, *u - *v);
                    *u = s;
                    *v = t;
                }
            }
        }
        h *= 2;
    }
}

fn mix_rows(f: &PulseFactors, x: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let len = x.first().map_or(0, Vec::len);
    let mut z = vec![vec![Complex64::new(0.0, 0.0); len]; f.rank];
    for (i, xi) in x.iter().enumerate() {
        for (r, zr) in z.iter_mut().enumerate() {
            let c = f.mix[i * f.rank + r];
            if c != 0.0 {
                for (o, v) in zr.iter_mut().zip(xi) {
                    *o += v * c;
                }
            }
        }
    }
    z
}
