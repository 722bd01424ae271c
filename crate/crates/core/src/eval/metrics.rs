//! Mainlobe level, sidelobe level and their ratio.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scene::Scenario;
use crate::waveform::PulseSet;
use crate::wdfilter::{db, RangeProfile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileMetrics {
    /// Output at the target delay relative to the clean peak, dB.
    pub mll_db: f64,
    /// Largest output outside the mainlobe region, dB.
    pub sll_db: f64,
    pub pslr_db: f64,
    /// Output at the jammer delay, dB, when it lies outside the mainlobe
    /// region and inside the window.
    pub level_at_jammer_db: Option<f64>,
    pub reference_peak: f64,
    /// Half-width of the excluded region around the target, seconds.
    pub mainlobe_exclusion: f64,
}

/// Clean matched filter peak `A_s · Σ_i Σ_μ |s_i(μ)|² · dμ`, which is
/// `A_s·D·T` for constant-modulus pulses.
pub fn clean_reference(ps: &PulseSet, sc: &Scenario) -> f64 {
    let energy: f64 = ps.pulses().iter().flatten().map(Complex64::norm_sqr).sum();
    sc.target_amplitude() * energy * ps.grid().dt()
}

pub fn compute_metrics(
    profile: &RangeProfile,
    sc: &Scenario,
    reference: f64,
    exclusion: f64,
) -> Result<ProfileMetrics> {
    if !(reference > 0.0 && reference.is_finite()) {
        return Err(Error::MissingReference);
    }
    let k0 = profile.index_of(sc.target.delay).ok_or(Error::OutOfWindow {
        index: profile.grid.index_of(sc.target.delay),
        start: profile.t_start,
        end: profile.t_start + profile.values.len() as i64,
    })?;
    let half = (exclusion * profile.grid.sample_rate).round() as i64;
    let outside = |k: usize| (k as i64 - k0 as i64).abs() > half;
    let mll = profile.values[k0].norm() / reference;
    let sll = profile
        .values
        .iter()
        .enumerate()
        .filter(|(k, _)| outside(*k))
        .map(|(_, v)| v.norm())
        .fold(0.0, f64::max)
        / reference;
    let level_at_jammer_db = sc
        .jammer
        .and_then(|j| profile.index_of(j.delay))
        .filter(|&k| outside(k))
        .map(|k| db(profile.values[k].norm() / reference));
    let (mll_db, sll_db) = (db(mll), db(sll));
    Ok(ProfileMetrics {
        mll_db,
        sll_db,
        pslr_db: mll_db - sll_db,
        level_at_jammer_db,
        reference_peak: reference,
        mainlobe_exclusion: exclusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{RadarParams, TargetParams, TimeWindow};
    use crate::waveform::SamplingGrid;
    use crate::wdfilter::ProfileKind;

    fn scenario() -> Scenario {
        Scenario {
            radar: RadarParams {
                carrier_hz: 2e9,
                pri: 480e-6,
                cpi: 2,
            },
            target: TargetParams {
                delay: 0.0,
                snr_db: 0.0,
                doppler_hz: 0.0,
            },
            jammer: None,
            noise_sigma: 1.0,
            seed: 0,
            window: TimeWindow {
                start: -2e-6,
                end: 8e-6,
            },
        }
    }

    fn profile(values: Vec<Complex64>) -> RangeProfile {
        RangeProfile {
            kind: ProfileKind::Matched,
            grid: SamplingGrid::new(10e6, 1e-6, 2).unwrap(),
            t_start: -20,
            values,
        }
    }

    #[test]
    fn self_reference_gives_zero_mll() {
        let mut v = vec![Complex64::new(0.01, 0.0); 100];
        v[20] = Complex64::new(0.0, 4.0);
        v[60] = Complex64::new(0.04, 0.0);
        let p = profile(v);
        let m = compute_metrics(&p, &scenario(), 4.0, 2e-6).unwrap();
        assert!(m.mll_db.abs() < 1e-12);
        assert!((m.sll_db - 20.0 * (0.01f64).log10()).abs() < 1e-9);
        assert!((m.pslr_db - 40.0).abs() < 1e-9);
    }

    #[test]
    fn exclusion_region_is_skipped() {
        let mut v = vec![Complex64::new(0.0, 0.0); 100];
        v[20] = Complex64::new(1.0, 0.0);
        v[35] = Complex64::new(0.5, 0.0); // 1.5 µs after the peak
        let m = compute_metrics(&profile(v.clone()), &scenario(), 1.0, 2e-6).unwrap();
        assert_eq!(m.sll_db, -400.0);
        let m = compute_metrics(&profile(v), &scenario(), 1.0, 1e-6).unwrap();
        assert!((m.sll_db - 20.0 * 0.5f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn missing_reference() {
        let p = profile(vec![Complex64::new(1.0, 0.0); 100]);
        assert!(matches!(
            compute_metrics(&p, &scenario(), 0.0, 2e-6),
            Err(Error::MissingReference)
        ));
    }
}
