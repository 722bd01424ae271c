//! Scenario files: flat JSON in microseconds, dB and hertz.
//!
//! ```json
//! { "pri_us": 480, "cpi": 256, "tau_s_us": 0, "tau_j_us": 20,
//!   "mode": "isrrj", "T_J_us": 32, "epsilon": 0.1, "P": 9, "Q": 5,
//!   "snr_db": 0, "jnr_db": 20, "fs_hz": 1e7, "seed": 1 }
//! ```
//!
//! `mode` may be `"none"` or `null` for a jam-free scene. Adaptive filter
//! settings go in an optional `wdamf` object.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::codeset::CodeGenerator;
use crate::error::{Error, Result};
use crate::eval::WaveformSpec;
use crate::scene::{JammerMode, JammerParams, RadarParams, Scenario, TargetParams, TimeWindow};
use crate::wdamf::WdamfConfig;

const US: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub pri_us: f64,
    pub cpi: usize,
    pub tau_s_us: f64,
    pub tau_j_us: f64,
    #[serde(with = "mode_field")]
    pub mode: Option<JammerMode>,
    #[serde(rename = "T_J_us")]
    pub t_j_us: f64,
    pub epsilon: f64,
    #[serde(rename = "P")]
    pub p: usize,
    #[serde(rename = "Q")]
    pub q: usize,
    pub snr_db: f64,
    pub jnr_db: f64,
    pub fs_hz: f64,
    pub seed: u64,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f0_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fd_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chip_us: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_chips: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lfm_bandwidth_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_start_us: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_end_us: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<CodeGeneratorName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wdamf: Option<WdamfOverrides>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodeGeneratorName {
    Cascade,
    Sylvester,
}

impl From<CodeGeneratorName> for CodeGenerator {
    fn from(g: CodeGeneratorName) -> Self {
        match g {
            CodeGeneratorName::Cascade => CodeGenerator::Cascade,
            CodeGeneratorName::Sylvester => CodeGenerator::Sylvester,
        }
    }
}

/// Partial adaptive-filter settings; absent keys keep their defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WdamfOverrides {
    pub p0: Option<f64>,
    pub diag_floor: Option<f64>,
    pub impulse_gain: Option<f64>,
    pub process_noise_scale: Option<f64>,
    pub jump_noise_scale: Option<f64>,
    pub measurement_noise_scale: Option<f64>,
    pub initial_weights: Option<[f64; 3]>,
    pub epsilon0: Option<f64>,
    pub gamma: Option<usize>,
    pub noise_floor: Option<f64>,
}

impl WdamfOverrides {
    pub fn apply(&self, cfg: &mut WdamfConfig) {
        macro_rules! set {
            ($($src:ident => $dst:expr),* $(,)?) => {
                $(if let Some(v) = self.$src { $dst = v; })*
            };
        }
        set!(
            p0 => cfg.imm.p0,
            diag_floor => cfg.imm.diag_floor,
            impulse_gain => cfg.imm.impulse_gain,
            process_noise_scale => cfg.imm.process_noise_scale,
            jump_noise_scale => cfg.imm.jump_noise_scale,
            measurement_noise_scale => cfg.imm.measurement_noise_scale,
            initial_weights => cfg.imm.initial_weights,
            epsilon0 => cfg.threshold.epsilon0,
            gamma => cfg.threshold.gamma,
            noise_floor => cfg.threshold.noise_floor,
        );
    }
}

mod mode_field {
    use super::JammerMode;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &Option<JammerMode>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(m.map_or("none", |m| m.name()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<JammerMode>, D::Error> {
        match Option::<String>::deserialize(d)? {
            None => Ok(None),
            Some(s) if s.eq_ignore_ascii_case("none") => Ok(None),
            Some(s) => s.parse().map(Some).map_err(serde::de::Error::custom),
        }
    }
}

impl ScenarioFile {
    /// The reference scene: 256 pulses of 160 one-microsecond chips at
    /// 10 MHz, target at 0, ISRRJ replays from 20 µs.
    pub fn reference() -> Self {
        Self {
            pri_us: 480.0,
            cpi: 256,
            tau_s_us: 0.0,
            tau_j_us: 20.0,
            mode: Some(JammerMode::Isrrj),
            t_j_us: 32.0,
            epsilon: 0.1,
            p: 9,
            q: 5,
            snr_db: 0.0,
            jnr_db: 20.0,
            fs_hz: 10e6,
            seed: 1,
            f0_hz: None,
            fd_hz: None,
            noise_sigma: None,
            chip_us: None,
            n_chips: None,
            lfm_bandwidth_hz: None,
            window_start_us: None,
            window_end_us: None,
            generator: None,
            block_index: None,
            column_seed: None,
            wdamf: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_scenario(&self) -> Result<Scenario> {
        let default_window = TimeWindow::around(self.tau_s_us * US);
        let window = TimeWindow {
            start: self.window_start_us.map_or(default_window.start, |v| v * US),
            end: self.window_end_us.map_or(default_window.end, |v| v * US),
        };
        if !(window.end > window.start) {
            return Err(Error::InvalidConfig("window end must follow its start".into()));
        }
        let jammer = self.mode.map(|mode| JammerParams {
            mode,
            sample_period: self.t_j_us * US,
            slice_ratio: self.epsilon,
            repeat_count: self.p,
            cycle_count: self.q,
            delay: self.tau_j_us * US,
            jnr_db: self.jnr_db,
        });
        if let Some(j) = &jammer {
            j.validate()?;
        }
        let noise_sigma = self.noise_sigma.unwrap_or(1.0);
        if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!("noise sigma {noise_sigma}")));
        }
        Ok(Scenario {
            radar: RadarParams {
                carrier_hz: self.f0_hz.unwrap_or(2e9),
                pri: self.pri_us * US,
                cpi: self.cpi,
            },
            target: TargetParams {
                delay: self.tau_s_us * US,
                snr_db: self.snr_db,
                doppler_hz: self.fd_hz.unwrap_or(0.0),
            },
            jammer,
            noise_sigma,
            seed: self.seed,
            window,
        })
    }

    pub fn waveform_spec(&self) -> WaveformSpec {
        WaveformSpec {
            sample_rate: self.fs_hz,
            chip_width: self.chip_us.unwrap_or(1.0) * US,
            n_chips: self.n_chips.unwrap_or(160),
            cpi: self.cpi,
            lfm_bandwidth: self.lfm_bandwidth_hz.unwrap_or(2e6),
            generator: self.generator.map_or(CodeGenerator::Cascade, Into::into),
            block_index: self.block_index.unwrap_or(0),
            column_seed: self.column_seed,
        }
    }

    pub fn wdamf_config(&self) -> Result<WdamfConfig> {
        let mut cfg = WdamfConfig::default();
        if let Some(o) = &self.wdamf {
            o.apply(&mut cfg);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
