//! `wdcss` command-line driver.
//!
//! Every subcommand writes its outputs plus a `manifest.json` into `--out`.
//! Exit codes: 0 ok, 1 configuration error, 2 violated mathematical
//! precondition, 3 numerical failure. `WDCSS_THREADS` caps the worker pool.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use wdcss::codeset::{generate_codeset, verify_wdc, ChipFormat, CodeGenerator, ColumnSelection};
use wdcss::config::ScenarioFile;
use wdcss::eval::{monte_carlo_sweep, parse_values, run_once, FilterChoice, SweepAxis, WaveformChoice};
use wdcss::scene::JammerMode;
use wdcss::wdfilter::{ambiguity, jamming_kappa, kappa, AmbiguityMode};
use wdcss::ErrorClass;

const THREADS_ENV: &str = "WDCSS_THREADS";

#[derive(Parser)]
#[command(name = "wdcss", version, about = "Waveform-domain anti-jamming simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a D×N code matrix and its verification report.
    GenCodes(GenCodesArgs),
    /// Simulate one CPI and write range profiles and metrics.
    Simulate(SimulateArgs),
    /// Monte-Carlo sweep over SNR, JNR or jamming duty cycle.
    Sweep(SweepArgs),
    /// Delay-Doppler ambiguity surface of a pulse set.
    Ambiguity(AmbiguityArgs),
    /// Sparsity ratio of the waveform response versus delay.
    Kappa(KappaArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GeneratorArg {
    Cascade,
    Sylvester,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Symbols,
    Integers,
}

#[derive(Args)]
struct GenCodesArgs {
    /// Number of sequences (pulses), a power of two.
    #[arg(long)]
    d: usize,
    /// Code length (chips per pulse), at most D.
    #[arg(long)]
    n: usize,
    /// Index of the cascade block the columns come from.
    #[arg(long, default_value_t = 0)]
    r: usize,
    /// Choose columns at random with this seed instead of the leading ones.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "cascade")]
    generator: GeneratorArg,
    #[arg(long, value_enum, default_value = "symbols")]
    format: FormatArg,
    #[arg(long)]
    out: PathBuf,
}

/// Flags that override fields of the scenario file.
#[derive(Args)]
struct ScenarioOverrides {
    #[arg(long)]
    seed: Option<u64>,
    /// Jammer mode, or `none`.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    jnr_db: Option<f64>,
    #[arg(long)]
    cpi: Option<usize>,
    #[arg(long)]
    n_chips: Option<usize>,
    #[arg(long)]
    noise_sigma: Option<f64>,
}

impl ScenarioOverrides {
    fn apply(&self, f: &mut ScenarioFile) -> Result<()> {
        if let Some(v) = self.seed {
            f.seed = v;
        }
        if let Some(m) = &self.mode {
            f.mode = parse_mode(m)?;
        }
        if let Some(v) = self.snr_db {
            f.snr_db = v;
        }
        if let Some(v) = self.jnr_db {
            f.jnr_db = v;
        }
        if let Some(v) = self.cpi {
            f.cpi = v;
        }
        if self.n_chips.is_some() {
            f.n_chips = self.n_chips;
        }
        if self.noise_sigma.is_some() {
            f.noise_sigma = self.noise_sigma;
        }
        Ok(())
    }
}

#[derive(Args)]
struct SimulateArgs {
    scenario: PathBuf,
    #[arg(long, default_value = "wdcss")]
    waveform: WaveformChoice,
    /// Defaults to wdamf for WDCSS and baseline otherwise.
    #[arg(long)]
    filter: Option<FilterChoice>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    overrides: ScenarioOverrides,
}

#[derive(Args)]
struct SweepArgs {
    scenario: PathBuf,
    #[arg(long)]
    axis: SweepAxis,
    /// `start:end:step` with inclusive end, or a comma list.
    #[arg(long, allow_hyphen_values = true)]
    values: String,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value = "wdcss")]
    waveform: WaveformChoice,
    #[arg(long)]
    filter: Option<FilterChoice>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    overrides: ScenarioOverrides,
}

#[derive(Args)]
struct AmbiguityArgs {
    /// Scenario providing the pulse set geometry; the reference scene if absent.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value = "wdcss")]
    waveform: WaveformChoice,
    /// Delay grid in microseconds, `start:end:step` or a list.
    #[arg(long, default_value = "-5:5:0.1", allow_hyphen_values = true)]
    t_range: String,
    /// Doppler grid in hertz, `start:end:step` or a list.
    #[arg(long, default_value = "-40:40:2", allow_hyphen_values = true)]
    fd_range: String,
    /// Ignore the pulse-to-pulse Doppler phase.
    #[arg(long)]
    intra_pulse: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct KappaArgs {
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value = "wdcss")]
    waveform: WaveformChoice,
    /// Add the jamming response curve for this mode (replays from the
    /// scenario's jammer delay).
    #[arg(long)]
    jammer_mode: Option<JammerMode>,
    /// Delay grid in microseconds; spans ± one pulse width if absent.
    #[arg(long, allow_hyphen_values = true)]
    t_range: Option<String>,
    #[arg(long, default_value_t = 1e-6)]
    rel_tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    scenario: Option<PathBuf>,
    output_dir: PathBuf,
    seed: Option<u64>,
    version: &'static str,
    threads: usize,
    duration_s: f64,
    outputs: Vec<String>,
}

fn parse_mode(s: &str) -> Result<Option<JammerMode>> {
    if s.eq_ignore_ascii_case("none") {
        Ok(None)
    } else {
        Ok(Some(s.parse()?))
    }
}

fn load_scenario(path: Option<&Path>) -> Result<ScenarioFile> {
    match path {
        Some(p) => ScenarioFile::load(p).with_context(|| format!("reading {}", p.display())),
        None => Ok(ScenarioFile::reference()),
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(dir.join(name), text)?;
    Ok(())
}

/// Output file names plus the seed that produced them.
struct Written {
    files: Vec<String>,
    seed: Option<u64>,
}

fn gen_codes(a: &GenCodesArgs) -> Result<Written> {
    let generator = match a.generator {
        GeneratorArg::Cascade => CodeGenerator::Cascade,
        GeneratorArg::Sylvester => CodeGenerator::Sylvester,
    };
    let selection = a.seed.map_or(ColumnSelection::Leading, |seed| ColumnSelection::Random { seed });
    let m = generate_codeset(a.d, a.n, generator, a.r, selection)?;
    let report = verify_wdc(&m);
    let format = match a.format {
        FormatArg::Symbols => ChipFormat::Symbols,
        FormatArg::Integers => ChipFormat::Integers,
    };
    fs::write(a.out.join("codes.txt"), m.to_text(format))?;
    write_json(&a.out, "report.json", &report)?;
    println!(
        "{}x{} code set: {}",
        a.d,
        a.n,
        if report.passed() { "verified" } else { "FAILED verification" }
    );
    if !report.passed() {
        anyhow::bail!(wdcss::Error::NumericalDivergence(
            "generated code set failed verification".into()
        ));
    }
    Ok(Written {
        files: vec!["codes.txt".into(), "report.json".into()],
        seed: a.seed,
    })
}

#[derive(Serialize)]
struct SimulateSummary<'a> {
    waveform: WaveformChoice,
    filter: FilterChoice,
    matched: &'a wdcss::eval::ProfileMetrics,
    adaptive: Option<&'a wdcss::eval::ProfileMetrics>,
    replay_overrun: bool,
    compensation_shortfalls: usize,
}

fn simulate(a: &SimulateArgs) -> Result<Written> {
    let mut file = load_scenario(Some(&a.scenario))?;
    a.overrides.apply(&mut file)?;
    let filter = a.filter.unwrap_or(FilterChoice::default_for(a.waveform));
    let ps = file.waveform_spec().build(a.waveform)?;
    let sc = file.to_scenario()?;
    let cfg = file.wdamf_config()?;
    let out = run_once(&ps, &sc, filter, &cfg)?;
    let reference = out.matched_metrics.reference_peak;

    let mut files = vec!["matched.csv".to_string()];
    out.matched.write_csv(create(&a.out, "matched.csv")?, reference)?;
    if let Some(p) = &out.adaptive {
        let name = format!("{}.csv", p.kind.name());
        p.write_csv(create(&a.out, &name)?, reference)?;
        files.push(name);
    }
    let summary = SimulateSummary {
        waveform: a.waveform,
        filter,
        matched: &out.matched_metrics,
        adaptive: out.adaptive_metrics.as_ref(),
        replay_overrun: out.replay_overrun,
        compensation_shortfalls: out.compensation_shortfalls,
    };
    write_json(&a.out, "metrics.json", &summary)?;
    files.push("metrics.json".into());
    let m = out.metrics();
    println!(
        "MLL {:.2} dB  SLL {:.2} dB  PSLR {:.2} dB",
        m.mll_db, m.sll_db, m.pslr_db
    );
    if out.replay_overrun {
        eprintln!("warning: jamming replays run past the buffered train and were clipped");
    }
    Ok(Written {
        files,
        seed: Some(file.seed),
    })
}

fn sweep(a: &SweepArgs) -> Result<Written> {
    let mut file = load_scenario(Some(&a.scenario))?;
    a.overrides.apply(&mut file)?;
    let values = parse_values(&a.values)?;
    let filter = a.filter.unwrap_or(FilterChoice::default_for(a.waveform));
    let ps = file.waveform_spec().build(a.waveform)?;
    let cfg = file.wdamf_config()?;
    let res = monte_carlo_sweep(&ps, &file.to_scenario()?, a.axis, &values, a.trials, filter, &cfg, true)?;
    res.write_csv(create(&a.out, "sweep.csv")?)?;
    res.write_summary_csv(create(&a.out, "summary.csv")?)?;
    for p in &res.points {
        println!(
            "{} = {}: PSLR {:.2} ± {:.2} dB, MLL {:.2} dB",
            a.axis.name(),
            p.value,
            p.mean_pslr_db,
            p.std_pslr_db,
            p.mean_mll_db
        );
    }
    Ok(Written {
        files: vec!["sweep.csv".into(), "summary.csv".into()],
        seed: Some(file.seed),
    })
}

fn ambiguity_cmd(a: &AmbiguityArgs) -> Result<Written> {
    let file = load_scenario(a.scenario.as_deref())?;
    let ps = file.waveform_spec().build(a.waveform)?;
    let ts: Vec<f64> = parse_values(&a.t_range)?.iter().map(|t| t * 1e-6).collect();
    let fds = parse_values(&a.fd_range)?;
    let mode = if a.intra_pulse {
        AmbiguityMode::IntraPulse
    } else {
        AmbiguityMode::Cpi
    };
    let surface = ambiguity(&ps, &ts, &fds, file.pri_us * 1e-6, mode);
    surface.write_csv(create(&a.out, "surface.csv")?)?;
    Ok(Written {
        files: vec!["surface.csv".into()],
        seed: None,
    })
}

fn kappa_cmd(a: &KappaArgs) -> Result<Written> {
    let mut file = load_scenario(a.scenario.as_deref())?;
    let ps = file.waveform_spec().build(a.waveform)?;
    let ts_us = match &a.t_range {
        Some(r) => parse_values(r)?,
        None => {
            let half = ps.grid().pulse_width() * 1e6;
            parse_values(&format!("{}:{}:0.1", -half, half))?
        }
    };
    let ts: Vec<f64> = ts_us.iter().map(|t| t * 1e-6).collect();
    let target = kappa(&ps, &ts, a.rel_tol);
    let jam = match a.jammer_mode {
        Some(mode) => {
            file.mode = Some(mode);
            let jp = file
                .to_scenario()?
                .jammer
                .context("jammer parameters missing")?;
            let rel: Vec<f64> = ts.iter().map(|t| t - jp.delay).collect();
            Some(jamming_kappa(&ps, &jp, &rel, a.rel_tol)?)
        }
        None => None,
    };
    let mut w = csv::Writer::from_writer(create(&a.out, "kappa.csv")?);
    if jam.is_some() {
        w.write_record(["t_us", "kappa", "kappa_jamming"])?;
    } else {
        w.write_record(["t_us", "kappa"])?;
    }
    for (k, t) in ts_us.iter().enumerate() {
        let mut row = vec![format!("{t:.4}"), format!("{:.6}", target[k])];
        if let Some(j) = &jam {
            row.push(format!("{:.6}", j[k]));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(Written {
        files: vec!["kappa.csv".into()],
        seed: None,
    })
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let class = err
        .chain()
        .find_map(|e| e.downcast_ref::<wdcss::Error>())
        .map(wdcss::Error::class);
    match class {
        Some(ErrorClass::Precondition) => 2,
        Some(ErrorClass::Numerical) => 3,
        _ => 1,
    }
}

fn configure_threads() -> Result<usize> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .with_context(|| format!("{THREADS_ENV} must be a positive integer, got `{v}`"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(rayon::current_num_threads())
}

fn run(cli: &Cli, command_line: String) -> Result<()> {
    let threads = configure_threads()?;
    let start = Instant::now();
    let (out, scenario) = match &cli.command {
        Command::GenCodes(a) => (&a.out, None),
        Command::Simulate(a) => (&a.out, Some(a.scenario.clone())),
        Command::Sweep(a) => (&a.out, Some(a.scenario.clone())),
        Command::Ambiguity(a) => (&a.out, a.scenario.clone()),
        Command::Kappa(a) => (&a.out, a.scenario.clone()),
    };
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let written = match &cli.command {
        Command::GenCodes(a) => gen_codes(a),
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(a),
        Command::Ambiguity(a) => ambiguity_cmd(a),
        Command::Kappa(a) => kappa_cmd(a),
    }?;
    let manifest = RunManifest {
        command: command_line,
        scenario,
        output_dir: out.clone(),
        seed: written.seed,
        version: env!("CARGO_PKG_VERSION"),
        threads,
        duration_s: start.elapsed().as_secs_f64(),
        outputs: written.files,
    };
    write_json(out, "manifest.json", &manifest)
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli, args.join(" ")) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
