//! Versioned JSON experiment configuration.
//!
//! The schema is strict: unknown keys are rejected everywhere, and every
//! numeric knob has the library default so a minimal config stays small.

use serde::Deserialize;

use ccekit::dgp::{ErrorConfig, ErrorMode, FactorConfig, InnovationScale, PanelConfig};
use ccekit::montecarlo::{CellSpec, CriterionSpec, RateStatistic};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub dgp: DgpSection,
    #[serde(default)]
    pub table: Option<TableSection>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub rate: Option<RateSection>,
}

fn default_reps() -> usize {
    500
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSection {
    pub cells: Vec<CellSpec>,
    pub criteria: Vec<CriterionSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default = "default_sweep_n")]
    pub n: usize,
    #[serde(default = "default_sweep_n")]
    pub t: usize,
    pub tau_grid: Vec<f64>,
    pub criteria: Vec<CriterionSpec>,
    #[serde(default = "default_sweep_modes")]
    pub error_modes: Vec<ErrorMode>,
}

fn default_sweep_n() -> usize {
    100
}

fn default_sweep_modes() -> Vec<ErrorMode> {
    vec![ErrorMode::WeakCs, ErrorMode::WeakTimeCs]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSection {
    pub statistics: Vec<RateStatistic>,
    #[serde(default = "default_rate_n")]
    pub n_fixed: usize,
    pub t_grid: Vec<usize>,
    pub tau: f64,
    #[serde(default = "default_rate_reps")]
    pub reps: usize,
}

fn default_rate_n() -> usize {
    200
}

fn default_rate_reps() -> usize {
    200
}

/// DGP template knobs. Everything is optional; mode presets fill the error
/// parameters unless overridden explicitly.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgpSection {
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_beta")]
    pub beta_level: f64,
    #[serde(default)]
    pub slope_het_sd: f64,
    #[serde(default = "default_one")]
    pub loading_mean: f64,
    #[serde(default = "default_one")]
    pub loading_sd: f64,
    #[serde(default)]
    pub oracle_candidates: bool,
    #[serde(default)]
    pub q_low: f64,
    #[serde(default = "default_q_high")]
    pub q_high: f64,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "default_scale")]
    pub innovation_scale: InnovationScale,
    #[serde(default = "default_mode")]
    pub error_mode: ErrorMode,
    pub rho: Option<f64>,
    pub rho_v: Option<f64>,
    pub kappa: Option<f64>,
    pub kappa_v: Option<f64>,
    pub j_band: Option<usize>,
    pub j_band_v: Option<usize>,
}

fn default_k() -> usize {
    8
}
fn default_m() -> usize {
    4
}
fn default_beta() -> f64 {
    0.5
}
fn default_one() -> f64 {
    1.0
}
fn default_q_high() -> f64 {
    2.0
}
fn default_burn_in() -> usize {
    50
}
fn default_scale() -> InnovationScale {
    InnovationScale::StdDev
}
fn default_mode() -> ErrorMode {
    ErrorMode::WeakCs
}

impl Default for DgpSection {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty DGP section")
    }
}

impl DgpSection {
    pub fn error_config(&self, mode: ErrorMode) -> ErrorConfig {
        let mut cfg = match mode {
            ErrorMode::Iid => ErrorConfig::iid(),
            ErrorMode::WeakCs => ErrorConfig::weak_cs(),
            ErrorMode::WeakTimeCs => ErrorConfig::weak_time_cs(),
            ErrorMode::NonstationaryV => ErrorConfig::nonstationary_v(),
        };
        if let Some(v) = self.rho {
            cfg.rho = v;
        }
        if let Some(v) = self.rho_v {
            cfg.rho_v = v;
        }
        if let Some(v) = self.kappa {
            cfg.kappa = v;
        }
        if let Some(v) = self.kappa_v {
            cfg.kappa_v = v;
        }
        if let Some(v) = self.j_band {
            cfg.j_band = v;
        }
        if let Some(v) = self.j_band_v {
            cfg.j_band_v = v;
        }
        cfg
    }

    /// Panel template; n, T and tau are placeholders overridden per cell.
    pub fn panel_template(&self) -> PanelConfig {
        PanelConfig {
            n_units: 2,
            t_periods: self.k + 2,
            k: self.k,
            beta_level: self.beta_level,
            slope_het_sd: self.slope_het_sd,
            loading_mean: self.loading_mean,
            loading_sd: self.loading_sd,
            oracle_candidates: self.oracle_candidates,
            factor: FactorConfig {
                m: self.m,
                tau: 0.0,
                q_low: self.q_low,
                q_high: self.q_high,
                burn_in: self.burn_in,
                innovation_scale: self.innovation_scale,
            },
            errors: self.error_config(self.error_mode),
        }
    }
}

/// Parse and version-check a config file's contents.
pub fn parse(text: &str) -> Result<RunConfig, String> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| {
        format!("config parse error at line {}, column {}: {e}", e.line(), e.column())
    })?;
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(format!(
            "unsupported schema_version {} (this build reads {SCHEMA_VERSION})",
            cfg.schema_version
        ));
    }
    if cfg.reps == 0 {
        return Err("reps must be at least 1".into());
    }
    Ok(cfg)
}
