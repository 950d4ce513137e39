//! Strict TOML run configurations. Units are part of every key name.
//!
//! `simulate`:
//!
//! ```toml
//! seed = 1
//! output_dir = "traces"            # relative to this file
//! statistics = "video-average"     # "gaussian-db" needs sigma_db
//! dark_clearance_db = -24.9        # optional
//!
//! [truth]
//! eta = 0.952
//! kappa_fwhm_hz = 109.8e6
//! epsilons = [0.857, 0.476, 0.263, 0.086]
//!
//! [analyzer]
//! rbw_hz = 300e3
//! vbw_hz = 300.0
//! start_hz = 3e6
//! stop_hz = 25e6
//! n_points = 221
//!
//! [zero_span]                      # optional; replaces the swept traces
//! center_hz = 5e6
//! duration_s = 0.1
//! n_points = 1001
//! start_rad = 0.0
//! rate_rad_per_s = 62.83
//! sigma_theta_rad = 0.0
//! ```
//!
//! `coresonance`:
//!
//! ```toml
//! dispersion_file = "ktp_placeholder.toml"   # relative to this file
//! poling_period_m = 24.7e-6                  # or qpm_matched_at_c = 40.0
//!
//! [geometry]
//! l_crystal_m = 9.3e-3
//! mirror_radius_m = 0.05
//! coating_phase_f_rad = 0.0
//! coating_phase_h_rad = 0.0
//!
//! [scan]
//! l_air_start_m = 0.020
//! l_air_stop_m = 0.025
//! l_air_step_m = 45e-9
//! t_start_c = 20.0
//! t_stop_c = 60.0
//! t_step_c = 0.5
//!
//! [tolerances]
//! detune_rad = 1e-3
//! min_qpm_efficiency = 0.5
//! score_scale_rad = 3.141592653589793        # optional
//! ```

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::CliError;

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {}", path.display(), e.message())))
}

/// Resolves `p` against the directory holding `config`.
pub fn resolve(config: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_owned()
    } else {
        config.parent().unwrap_or(Path::new(".")).join(p)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateFile {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub statistics: Option<String>,
    pub sigma_db: Option<f64>,
    pub dark_clearance_db: Option<f64>,
    pub truth: Option<TruthBlock>,
    pub analyzer: Option<AnalyzerBlock>,
    pub zero_span: Option<ZeroSpanBlock>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthBlock {
    pub eta: f64,
    pub kappa_fwhm_hz: f64,
    pub epsilons: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzerBlock {
    pub rbw_hz: f64,
    pub vbw_hz: f64,
    pub start_hz: f64,
    pub stop_hz: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZeroSpanBlock {
    pub center_hz: f64,
    pub duration_s: f64,
    pub n_points: usize,
    #[serde(default)]
    pub start_rad: f64,
    pub rate_rad_per_s: f64,
    #[serde(default)]
    pub sigma_theta_rad: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoresonanceFile {
    pub dispersion_file: PathBuf,
    pub poling_period_m: Option<f64>,
    pub qpm_matched_at_c: Option<f64>,
    pub geometry: GeometryBlock,
    pub scan: ScanBlock,
    pub tolerances: TolerancesBlock,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryBlock {
    pub l_crystal_m: f64,
    pub mirror_radius_m: f64,
    #[serde(default)]
    pub coating_phase_f_rad: f64,
    #[serde(default)]
    pub coating_phase_h_rad: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanBlock {
    pub l_air_start_m: f64,
    pub l_air_stop_m: f64,
    pub l_air_step_m: f64,
    pub t_start_c: f64,
    pub t_stop_c: f64,
    pub t_step_c: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesBlock {
    pub detune_rad: f64,
    pub min_qpm_efficiency: f64,
    pub score_scale_rad: Option<f64>,
}
