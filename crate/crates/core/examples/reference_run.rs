//! Runs the reference scene once per waveform and jammer mode and prints
//! the metrics with timings.
//!
//! `cargo run --release --example reference_run -- [seed] [gamma]`

use std::time::Instant;

use wdcss::config::ScenarioFile;
use wdcss::eval::{run_once, FilterChoice, WaveformChoice};
use wdcss::scene::JammerMode;

fn main() -> wdcss::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let gamma: Option<usize> = args.next().and_then(|s| s.parse().ok());
    let mut file = ScenarioFile::reference();
    file.seed = seed;
    let mut cfg = file.wdamf_config()?;
    if let Some(g) = gamma {
        cfg.threshold.gamma = g;
    }
    for choice in [WaveformChoice::Wdcss, WaveformChoice::Lfm, WaveformChoice::Golay] {
        let ps = file.waveform_spec().build(choice)?;
        for mode in JammerMode::ALL {
            file.mode = Some(mode);
            let sc = file.to_scenario()?;
            let start = Instant::now();
            let out = run_once(&ps, &sc, FilterChoice::default_for(choice), &cfg)?;
            let m = out.metrics();
            println!(
                "{:6} {:6} mll {:8.2} sll {:8.2} pslr {:7.2} at_jam {:8.2} | mf mll {:6.2} sll {:7.2} | {:.1}s",
                format!("{choice:?}"),
                mode.name(),
                m.mll_db,
                m.sll_db,
                m.pslr_db,
                m.level_at_jammer_db.unwrap_or(f64::NAN),
                out.matched_metrics.mll_db,
                out.matched_metrics.sll_db,
                start.elapsed().as_secs_f64()
            );
        }
    }
    Ok(())
}
