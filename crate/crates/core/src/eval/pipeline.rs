//! One end-to-end run: pulse set, received train, filter, metrics.

use serde::Serialize;

use crate::codeset::{generate_codeset, CodeGenerator, ColumnSelection};
use crate::error::{Error, Result};
use crate::eval::metrics::{clean_reference, compute_metrics, ProfileMetrics};
use crate::scene::{compose_train, Scenario};
use crate::waveform::{make_golay_set, make_lfm, make_wdcss, PulseSet, SamplingGrid};
use crate::wdamf::{adaptive_filter, AdaptiveMethod, WdamfConfig};
use crate::wdfilter::{matched_filter, RangeProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveformChoice {
    Wdcss,
    Lfm,
    Golay,
}

impl std::str::FromStr for WaveformChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wdcss" => Ok(Self::Wdcss),
            "lfm" => Ok(Self::Lfm),
            "golay" => Ok(Self::Golay),
            other => Err(Error::InvalidConfig(format!("unknown waveform `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterChoice {
    /// Plain matched filter.
    Mf,
    /// Adaptive filter with noise compensation.
    Wdamf,
    /// Adaptive filter with run-copy compensation.
    Baseline,
}

impl FilterChoice {
    /// The adaptive filter each waveform is normally paired with.
    pub fn default_for(w: WaveformChoice) -> Self {
        match w {
            WaveformChoice::Wdcss => FilterChoice::Wdamf,
            WaveformChoice::Lfm | WaveformChoice::Golay => FilterChoice::Baseline,
        }
    }
}

impl std::str::FromStr for FilterChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mf" => Ok(Self::Mf),
            "wdamf" => Ok(Self::Wdamf),
            "baseline" => Ok(Self::Baseline),
            other => Err(Error::InvalidConfig(format!("unknown filter `{other}`"))),
        }
    }
}

/// Pulse-set geometry shared by every waveform choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaveformSpec {
    pub sample_rate: f64,
    pub chip_width: f64,
    pub n_chips: usize,
    pub cpi: usize,
    pub lfm_bandwidth: f64,
    pub generator: CodeGenerator,
    pub block_index: usize,
    /// Seed for random column selection; leading columns when absent.
    pub column_seed: Option<u64>,
}

impl WaveformSpec {
    pub fn grid(&self) -> Result<SamplingGrid> {
        SamplingGrid::new(self.sample_rate, self.chip_width, self.n_chips)
    }

    pub fn build(&self, choice: WaveformChoice) -> Result<PulseSet> {
        let grid = self.grid()?;
        match choice {
            WaveformChoice::Wdcss => {
                let selection = self
                    .column_seed
                    .map_or(ColumnSelection::Leading, |seed| ColumnSelection::Random { seed });
                let a = generate_codeset(
                    self.cpi,
                    self.n_chips,
                    self.generator,
                    self.block_index,
                    selection,
                )?;
                make_wdcss(&a, grid)
            }
            WaveformChoice::Lfm => make_lfm(self.lfm_bandwidth, grid, self.cpi),
            WaveformChoice::Golay => make_golay_set(self.n_chips, grid, self.cpi),
        }
    }
}

/// Profiles and metrics from one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub matched: RangeProfile,
    pub adaptive: Option<RangeProfile>,
    pub matched_metrics: ProfileMetrics,
    pub adaptive_metrics: Option<ProfileMetrics>,
    pub replay_overrun: bool,
    pub compensation_shortfalls: usize,
}

impl RunOutput {
    /// Metrics of the selected filter's output.
    pub fn metrics(&self) -> &ProfileMetrics {
        self.adaptive_metrics.as_ref().unwrap_or(&self.matched_metrics)
    }

    pub fn profile(&self) -> &RangeProfile {
        self.adaptive.as_ref().unwrap_or(&self.matched)
    }
}

/// Simulates one CPI of `sc` and filters it.
pub fn run_once(
    ps: &PulseSet,
    sc: &Scenario,
    filter: FilterChoice,
    cfg: &WdamfConfig,
) -> Result<RunOutput> {
    let rx = compose_train(ps, sc)?;
    let reference = clean_reference(ps, sc);
    let exclusion = ps.mainlobe_exclusion();
    let (matched, adaptive, shortfalls) = match filter {
        FilterChoice::Mf => (matched_filter(&rx, ps)?, None, 0),
        FilterChoice::Wdamf | FilterChoice::Baseline => {
            let method = if filter == FilterChoice::Wdamf {
                AdaptiveMethod::Wdamf
            } else {
                AdaptiveMethod::Baseline
            };
            let run = adaptive_filter(&rx, ps, cfg, method, sc.noise_sigma, sc.seed)?;
            (run.matched, Some(run.adaptive), run.compensation_shortfalls)
        }
    };
    let matched_metrics = compute_metrics(&matched, sc, reference, exclusion)?;
    let adaptive_metrics = adaptive
        .as_ref()
        .map(|p| compute_metrics(p, sc, reference, exclusion))
        .transpose()?;
    Ok(RunOutput {
        matched,
        adaptive,
        matched_metrics,
        adaptive_metrics,
        replay_overrun: rx.replay_overrun,
        compensation_shortfalls: shortfalls,
    })
}
