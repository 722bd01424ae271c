//! Lists the largest adaptive-output sidelobes of one reference-scene run.
//!
//! `cargo run --release --example sidelobes -- [mode|none] [seed] [gamma]`

use wdcss::config::ScenarioFile;
use wdcss::eval::{clean_reference, run_once, FilterChoice, WaveformChoice};
use wdcss::wdfilter::db;

fn main() -> wdcss::Result<()> {
    let mut args = std::env::args().skip(1);
    let mode = args.next().unwrap_or_else(|| "isrrj".into());
    let mut file = ScenarioFile::reference();
    file.mode = if mode == "none" { None } else { Some(mode.parse()?) };
    file.seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let mut cfg = file.wdamf_config()?;
    if let Some(g) = args.next().and_then(|s| s.parse().ok()) {
        cfg.threshold.gamma = g;
    }
    let ps = file.waveform_spec().build(WaveformChoice::Wdcss)?;
    let sc = file.to_scenario()?;
    let out = run_once(&ps, &sc, FilterChoice::Wdamf, &cfg)?;
    let reference = clean_reference(&ps, &sc);
    let p = out.profile();
    let mut idx: Vec<usize> = (0..p.values.len()).collect();
    idx.sort_by(|&a, &b| p.values[b].norm().total_cmp(&p.values[a].norm()));
    let mean_sq = p.values.iter().map(|v| v.norm_sqr()).sum::<f64>() / p.values.len() as f64;
    println!("rms {:.2} dB", db(mean_sq.sqrt() / reference));
    let off = |v: &[num_complex::Complex64]| {
        let xs: Vec<f64> = v
            .iter()
            .enumerate()
            .filter(|(k, _)| p.time_of(*k).abs() > 2e-6)
            .map(|(_, v)| v.norm_sqr())
            .collect();
        db((xs.iter().sum::<f64>() / xs.len() as f64).sqrt() / reference)
    };
    println!("off-mainlobe rms: matched {:.2} adaptive {:.2}", off(&out.matched.values), off(&p.values));
    for &k in idx.iter().take(12) {
        println!("t {:9.2} us  {:8.2} dB", p.time_of(k) * 1e6, db(p.values[k].norm() / reference));
    }
    Ok(())
}
