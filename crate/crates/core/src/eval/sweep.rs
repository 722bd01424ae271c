//! Seeded Monte-Carlo sweeps over SNR, JNR or jamming duty cycle.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::metrics::ProfileMetrics;
use crate::eval::pipeline::{run_once, FilterChoice};
use crate::rng::derive_seed;
use crate::scene::{JammerMode, Scenario};
use crate::waveform::PulseSet;
use crate::wdamf::WdamfConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Snr,
    Jnr,
    /// Jamming duty cycle, realised as an ISRRJ repeat count `P = η/ε`.
    Eta,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Snr => "snr_db",
            SweepAxis::Jnr => "jnr_db",
            SweepAxis::Eta => "eta",
        }
    }

    /// Copy of `base` with the axis set to `value`.
    pub fn apply(&self, base: &Scenario, value: f64) -> Result<Scenario> {
        let mut sc = base.clone();
        match self {
            SweepAxis::Snr => sc.target.snr_db = value,
            SweepAxis::Jnr => {
                let j = sc.jammer.as_mut().ok_or_else(|| {
                    Error::InvalidConfig("JNR sweep needs a jammer".into())
                })?;
                j.jnr_db = value;
            }
            SweepAxis::Eta => {
                let j = sc.jammer.as_mut().ok_or_else(|| {
                    Error::InvalidConfig("duty-cycle sweep needs a jammer".into())
                })?;
                let p = (value / j.slice_ratio).round();
                if p < 1.0 || (p * j.slice_ratio - value).abs() > 1e-6 {
                    return Err(Error::InvalidConfig(format!(
                        "duty cycle {value} is not a whole multiple of the slice ratio {}",
                        j.slice_ratio
                    )));
                }
                j.mode = JammerMode::Isrrj;
                j.repeat_count = p as usize;
            }
        }
        Ok(sc)
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "snr" | "snr_db" => Ok(SweepAxis::Snr),
            "jnr" | "jnr_db" => Ok(SweepAxis::Jnr),
            "eta" => Ok(SweepAxis::Eta),
            other => Err(Error::InvalidConfig(format!("unknown sweep axis `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialRecord {
    pub value: f64,
    pub trial: usize,
    pub seed: u64,
    pub metrics: ProfileMetrics,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub trials: usize,
    pub mean_mll_db: f64,
    pub std_mll_db: f64,
    pub mean_sll_db: f64,
    pub std_sll_db: f64,
    pub mean_pslr_db: f64,
    pub std_pslr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
    pub records: Vec<TrialRecord>,
}

/// Sample mean and (n-1) standard deviation; zero spread for a single value.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl SweepPoint {
    fn from_records(value: f64, recs: &[TrialRecord]) -> Self {
        let col = |f: fn(&ProfileMetrics) -> f64| {
            mean_std(&recs.iter().map(|r| f(&r.metrics)).collect::<Vec<_>>())
        };
        let (mean_mll_db, std_mll_db) = col(|m| m.mll_db);
        let (mean_sll_db, std_sll_db) = col(|m| m.sll_db);
        let (mean_pslr_db, std_pslr_db) = col(|m| m.pslr_db);
        Self {
            value,
            trials: recs.len(),
            mean_mll_db,
            std_mll_db,
            mean_sll_db,
            std_sll_db,
            mean_pslr_db,
            std_pslr_db,
        }
    }
}

/// Seed of trial `trial` at axis position `axis_index`.
pub fn trial_seed(master: u64, axis_index: usize, trial: usize) -> u64 {
    derive_seed(master, &[axis_index as u64, trial as u64])
}

/// Runs `trials` seeded trials at every axis value. `base.seed` is the
/// master seed. Results do not depend on `parallel`.
#[allow(clippy::too_many_arguments)]
pub fn monte_carlo_sweep(
    ps: &PulseSet,
    base: &Scenario,
    axis: SweepAxis,
    values: &[f64],
    trials: usize,
    filter: FilterChoice,
    cfg: &WdamfConfig,
    parallel: bool,
) -> Result<SweepResult> {
    if trials == 0 {
        return Err(Error::InvalidConfig("a sweep needs at least one trial".into()));
    }
    if values.is_empty() {
        return Err(Error::InvalidConfig("a sweep needs at least one value".into()));
    }
    let scenarios = values
        .iter()
        .map(|&v| axis.apply(base, v))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..values.len())
        .flat_map(|a| (0..trials).map(move |t| (a, t)))
        .collect();
    let run = |&(a, t): &(usize, usize)| -> Result<TrialRecord> {
        let mut sc = scenarios[a].clone();
        sc.seed = trial_seed(base.seed, a, t);
        let out = run_once(ps, &sc, filter, cfg)?;
        Ok(TrialRecord {
            value: values[a],
            trial: t,
            seed: sc.seed,
            metrics: *out.metrics(),
        })
    };
    let records: Vec<TrialRecord> = if parallel {
        jobs.par_iter().map(run).collect::<Result<_>>()?
    } else {
        jobs.iter().map(run).collect::<Result<_>>()?
    };
    let points = records
        .chunks(trials)
        .zip(values)
        .map(|(recs, &v)| SweepPoint::from_records(v, recs))
        .collect();
    Ok(SweepResult {
        axis,
        points,
        records,
    })
}

impl SweepResult {
    /// Largest minus smallest mean PSLR over the axis.
    pub fn pslr_spread(&self) -> f64 {
        let (lo, hi) = self
            .points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p.mean_pslr_db), hi.max(p.mean_pslr_db))
            });
        hi - lo
    }

    /// One row per trial: axis, value, trial, mll_db, sll_db, pslr_db.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["axis", "value", "trial", "mll_db", "sll_db", "pslr_db"])?;
        for r in &self.records {
            w.write_record([
                self.axis.name().to_string(),
                format!("{}", r.value),
                r.trial.to_string(),
                format!("{:.6}", r.metrics.mll_db),
                format!("{:.6}", r.metrics.sll_db),
                format!("{:.6}", r.metrics.pslr_db),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// One row per axis value with mean and standard deviation.
    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "axis",
            "value",
            "trials",
            "mean_mll_db",
            "std_mll_db",
            "mean_sll_db",
            "std_sll_db",
            "mean_pslr_db",
            "std_pslr_db",
        ])?;
        for p in &self.points {
            w.write_record([
                self.axis.name().to_string(),
                format!("{}", p.value),
                p.trials.to_string(),
                format!("{:.6}", p.mean_mll_db),
                format!("{:.6}", p.std_mll_db),
                format!("{:.6}", p.mean_sll_db),
                format!("{:.6}", p.std_sll_db),
                format!("{:.6}", p.mean_pslr_db),
                format!("{:.6}", p.std_pslr_db),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Parses `start:end:step` (inclusive end) or a comma list.
pub fn parse_values(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::Parse(format!("bad value list `{spec}`"));
    if spec.contains(':') {
        let parts = spec
            .split(':')
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        let [start, end, step] = parts[..] else {
            return Err(bad());
        };
        if !(step > 0.0) || end < start {
            return Err(bad());
        }
        let n = ((end - start) / step + 1e-9).floor() as usize;
        // round to the step's decimal grid so 0.1:0.9:0.1 gives clean values
        Ok((0..=n)
            .map(|k| ((start + k as f64 * step) * 1e9).round() / 1e9)
            .collect())
    } else {
        spec.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
            .collect()
    }
}
