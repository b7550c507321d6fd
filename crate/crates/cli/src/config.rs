//! Run configuration: TOML with dotted section names, or the `config` block of a JSON
//! report written by an earlier `analyze`.

use std::path::Path;

use qds_core::sim::KeySizing;
use qds_core::{
    AnalysisOptions, ChannelParams, DecoySettings, GammaClamp, SearchOptions, SecurityParams, SiftingConvention,
    ZErrorSample,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SecuritySection {
    pub eps_pe: f64,
    pub eps_smooth: f64,
    pub markov_a: f64,
    pub alpha1: f64,
    #[serde(default)]
    pub min_entropy_offset_bits: f64,
}

impl Default for SecuritySection {
    fn default() -> Self {
        let r = SecurityParams::<f64>::reference();
        Self {
            eps_pe: r.eps_pe,
            eps_smooth: r.eps_smooth,
            markov_a: r.markov_a,
            alpha1: r.alpha1,
            min_entropy_offset_bits: r.min_entropy_offset_bits,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    pub sifting: SiftingConvention,
    pub f_ec: f64,
    pub sample_ratio: f64,
    pub gamma_clamp: GammaClamp,
    pub z_error_sample: ZErrorSample,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        let d = AnalysisOptions::<f64>::default();
        Self {
            sifting: d.sifting,
            f_ec: d.f_ec,
            sample_ratio: d.sample_ratio,
            gamma_clamp: d.gamma_clamp,
            z_error_sample: d.z_error_sample,
        }
    }
}

/// Fixed pulse count (single analysis) or target level (signature-length search).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_pulses: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_level: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSection {
    pub points_per_decade: u32,
    pub min_exp: f64,
    pub max_exp: f64,
    pub refine: bool,
    pub rel_tol: f64,
}

impl Default for SearchSection {
    fn default() -> Self {
        let d = SearchOptions::default();
        Self {
            points_per_decade: d.points_per_decade,
            min_exp: d.min_exp,
            max_exp: d.max_exp,
            refine: d.refine,
            rel_tol: d.rel_tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HonestSourceKind {
    /// Full key-generation runs at `run.n_pulses`.
    #[default]
    Kgp,
    /// Independent bit flips at `simulate.error_rate`.
    Iid,
}

/// Scenario parameters for `simulate`. Unset thresholds in the honest key-generation
/// scenario are taken from the analysis of the same configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub source: HonestSourceKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signature_length: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_v: Option<f64>,
    pub error_rate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e_b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forger_error_rate: Option<f64>,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            source: HonestSourceKind::Kgp,
            signature_length: None,
            s_a: None,
            s_v: None,
            error_rate: 0.0,
            e_b: None,
            e_c: None,
            forger_error_rate: None,
        }
    }
}

/// Length and thresholds used by the adversarial scenarios when the config leaves them out.
pub const DEFAULT_SIM_LENGTH: u64 = 2000;
pub const DEFAULT_SIM_S_A: f64 = 0.05;
pub const DEFAULT_SIM_S_V: f64 = 0.10;

impl SimulateSection {
    pub fn thresholds(&self) -> (f64, f64) {
        (self.s_a.unwrap_or(DEFAULT_SIM_S_A), self.s_v.unwrap_or(DEFAULT_SIM_S_V))
    }

    pub fn length(&self) -> u64 {
        self.signature_length.unwrap_or(DEFAULT_SIM_LENGTH)
    }

    pub fn sizing(&self, sample_ratio: f64) -> KeySizing {
        KeySizing { signature_length: self.signature_length, sample_ratio }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub channel: ChannelParams<f64>,
    pub decoy: DecoySettings<f64>,
    #[serde(default)]
    pub security: SecuritySection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub search: SearchSection,
    #[serde(default)]
    pub simulate: SimulateSection,
}

/// What `analyze` should do with the configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunMode {
    FixedPulses(u64),
    Target(f64),
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> CliResult<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads TOML, or the `config` block of a JSON report (recognised by a leading `{`).
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
        if text.trim_start().starts_with('{') {
            #[derive(Deserialize)]
            struct Embedded {
                config: RunConfig,
            }
            let e: Embedded = serde_json::from_str(&text).map_err(|e| {
                CliError::Config(format!("{}: line {} column {}: {e}", path.display(), e.line(), e.column()))
            })?;
            e.config.validate()?;
            Ok(e.config)
        } else {
            Self::from_toml_str(&text).map_err(|e| match e {
                CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
                other => other,
            })
        }
    }

    pub fn security_params(&self) -> SecurityParams<f64> {
        let s = &self.security;
        SecurityParams {
            eps_pe: s.eps_pe,
            eps_smooth: s.eps_smooth,
            markov_a: s.markov_a,
            alpha1: s.alpha1,
            target_level: self.run.target_level.unwrap_or(SecurityParams::<f64>::reference().target_level),
            min_entropy_offset_bits: s.min_entropy_offset_bits,
        }
    }

    pub fn analysis_options(&self) -> AnalysisOptions<f64> {
        let a = &self.analysis;
        AnalysisOptions {
            sifting: a.sifting,
            f_ec: a.f_ec,
            sample_ratio: a.sample_ratio,
            gamma_clamp: a.gamma_clamp,
            z_error_sample: a.z_error_sample,
        }
    }

    pub fn search_options(&self) -> SearchOptions {
        let s = &self.search;
        SearchOptions {
            points_per_decade: s.points_per_decade,
            min_exp: s.min_exp,
            max_exp: s.max_exp,
            refine: s.refine,
            rel_tol: s.rel_tol,
        }
    }

    pub fn mode(&self) -> CliResult<RunMode> {
        match (self.run.n_pulses, self.run.target_level) {
            (Some(n), None) => Ok(RunMode::FixedPulses(n)),
            (None, Some(t)) => Ok(RunMode::Target(t)),
            (Some(_), Some(_)) => {
                Err(CliError::Config("set exactly one of run.n_pulses and run.target_level, not both".into()))
            }
            (None, None) => Err(CliError::Config("set one of run.n_pulses or run.target_level".into())),
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let v = CliError::from_validation;
        self.channel.validate().map_err(v)?;
        self.decoy.validate().map_err(v)?;
        self.security_params().validate().map_err(v)?;
        self.analysis_options().validate().map_err(v)?;
        if self.run.n_pulses == Some(0) {
            return Err(CliError::Config("run.n_pulses must be at least 1".into()));
        }
        let sim = &self.simulate;
        for (name, p) in [("simulate.s_a", sim.s_a), ("simulate.s_v", sim.s_v)] {
            if let Some(p) = p {
                if !(p > 0.0 && p < 0.5) {
                    return Err(CliError::Config(format!("{name} = {p} must lie in (0, 1/2)")));
                }
            }
        }
        for (name, p) in [
            ("simulate.error_rate", Some(sim.error_rate)),
            ("simulate.e_b", sim.e_b),
            ("simulate.e_c", sim.e_c),
            ("simulate.forger_error_rate", sim.forger_error_rate),
        ] {
            if let Some(p) = p {
                if !(0.0..=1.0).contains(&p) {
                    return Err(CliError::Config(format!("{name} = {p} must lie in [0, 1]")));
                }
            }
        }
        if let Some(l) = sim.signature_length {
            if l == 0 || l % 2 != 0 {
                return Err(CliError::Config(format!("simulate.signature_length = {l} must be even and positive")));
            }
        }
        Ok(())
    }
}
