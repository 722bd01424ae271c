//! Wall-clock split of one reference-scene run.

use std::time::Instant;

use wdcss::config::ScenarioFile;
use wdcss::eval::WaveformChoice;
use wdcss::scene::compose_train;
use wdcss::wdamf::{adaptive_filter, AdaptiveMethod};
use wdcss::wdfilter::{matched_filter, WaveformPlane};

fn main() -> wdcss::Result<()> {
    let file = ScenarioFile::reference();
    let cfg = file.wdamf_config()?;
    let sc = file.to_scenario()?;
    for choice in [WaveformChoice::Wdcss, WaveformChoice::Lfm, WaveformChoice::Golay] {
        let ps = file.waveform_spec().build(choice)?;
        let t = Instant::now();
        let rx = compose_train(&ps, &sc)?;
        let t_rx = t.elapsed();
        let t = Instant::now();
        let plane = WaveformPlane::new(&rx, &ps)?;
        let t_plane = t.elapsed();
        let t = Instant::now();
        let mut w = vec![num_complex::Complex64::new(0.0, 0.0); plane.snapshot_len()];
        for k in 0..plane.t_len() {
            plane.snapshot_into(k, &mut w);
        }
        let t_snap = t.elapsed();
        let t = Instant::now();
        let _ = matched_filter(&rx, &ps)?;
        let t_mf = t.elapsed();
        let t = Instant::now();
        let _ = adaptive_filter(&rx, &ps, &cfg, AdaptiveMethod::Wdamf, sc.noise_sigma, 1)?;
        let t_ad = t.elapsed();
        println!("{choice:?}: rx {t_rx:?} plane {t_plane:?} snapshots {t_snap:?} mf {t_mf:?} adaptive {t_ad:?}");
    }
    Ok(())
}
