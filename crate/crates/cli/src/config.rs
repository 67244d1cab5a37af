//! Experiment description, read from TOML.
//!
//! Every key is optional; missing keys take the defaults below (8x8 grid,
//! 2 kHz spacing, 3 paths with `l_max = 4` and `k_max = 2`, 0 dBm noise,
//! 4-QAM, `ξ₀ = 1e-3`, 20 channel realizations). Unknown keys are rejected.
//!
//! ```toml
//! kind = "ber-vs-power"
//! seed = 7
//! power_dbm = [20.0, 25.0, 30.0]
//! gamma_c = [5e-5]
//!
//! [grid]
//! m = 8
//! n = 8
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{0}")]
    Parse(#[from] toml::de::Error),

    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },

    #[error("unknown experiment kind `{0}` (expected one of {kinds})", kinds = ExperimentKind::NAMES.join(", "))]
    UnknownKind(String),
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Dual value and iterates of the ellipsoid search.
    Convergence,
    /// Analytic and simulated BER of the proposed design and the benchmarks.
    BerVsPower,
    /// Diagonal of `(ζ σ_c² I + W^H H^H H W)^{-1}` per scheme.
    DiagElements,
    /// Proposed-design BER across CRB limits.
    BerVsCrb,
    /// Single-symbol versus full-frame designs, plus the BER-only bound for every `K`.
    SymbolSweep,
    /// Achievable rate per scheme.
    CapacitySweep,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        Self::Convergence,
        Self::BerVsPower,
        Self::DiagElements,
        Self::BerVsCrb,
        Self::SymbolSweep,
        Self::CapacitySweep,
    ];

    pub const NAMES: [&'static str; 6] = [
        "convergence",
        "ber-vs-power",
        "diag-elements",
        "ber-vs-crb",
        "symbol-sweep",
        "capacity-sweep",
    ];

    pub fn name(self) -> &'static str {
        let idx = Self::ALL.iter().position(|&k| k == self).unwrap();
        Self::NAMES[idx]
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::NAMES
            .iter()
            .position(|&n| n == s)
            .map(|i| Self::ALL[i])
            .ok_or_else(|| ConfigError::UnknownKind(s.to_string()))
    }
}

/// Unit of the Doppler parameter the CRB refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrbUnit {
    /// Normalized Doppler tap `k = N T ν`.
    DopplerTap,
    Hertz,
}

/// Transmit power of the ZF / MMSE benchmark schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselinePower {
    /// `W = I`: unit power per symbol, independent of `P_T`.
    Unit,
    /// `W = sqrt(P_T / MN) I`.
    Budget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub m: usize,
    pub n: usize,
    pub delta_f_hz: f64,
    /// Recorded for reference; the delay-Doppler model does not depend on it.
    pub carrier_hz: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            m: 8,
            n: 8,
            delta_f_hz: 2e3,
            carrier_hz: 4e9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSpec {
    /// Number of communication paths; gains are `CN(0, 1/paths)`.
    pub paths: usize,
    pub max_delay_tap: usize,
    pub max_doppler_tap: f64,
    /// `|h_s|` of the sensing target.
    pub target_gain: f64,
    pub crb_unit: CrbUnit,
}

impl Default for ChannelSpec {
    fn default() -> Self {
        Self {
            paths: 3,
            max_delay_tap: 4,
            max_doppler_tap: 2.0,
            target_gain: 1.0,
            crb_unit: CrbUnit::DopplerTap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSpec {
    pub sigma_c_dbm: f64,
    pub sigma_s_dbm: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            sigma_c_dbm: 0.0,
            sigma_s_dbm: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub xi_0: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            xi_0: 1e-3,
            max_iters: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloSpec {
    /// Frames simulated per BER point.
    pub blocks: u64,
    /// Early stop once this many bit errors are seen; 0 disables.
    pub target_errors: u64,
}

impl Default for MonteCarloSpec {
    fn default() -> Self {
        Self {
            blocks: 2000,
            target_errors: 400,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub channel_realizations: usize,
    pub power_dbm: Vec<f64>,
    pub gamma_c: Vec<f64>,
    pub qam_order: usize,
    pub baseline_power: BaselinePower,
    pub output: PathBuf,
    pub grid: GridSpec,
    pub channel: ChannelSpec,
    pub noise: NoiseSpec,
    pub solver: SolverSpec,
    pub monte_carlo: MonteCarloSpec,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::BerVsPower,
            seed: 1,
            channel_realizations: 20,
            power_dbm: vec![10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0],
            gamma_c: vec![5e-5],
            qam_order: 4,
            baseline_power: BaselinePower::Unit,
            output: PathBuf::from("results"),
            grid: GridSpec::default(),
            channel: ChannelSpec::default(),
            noise: NoiseSpec::default(),
            solver: SolverSpec::default(),
            monte_carlo: MonteCarloSpec::default(),
        }
    }
}

impl ExperimentSpec {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let spec: Self = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("experiment spec serializes to TOML")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let g = &self.grid;
        if g.m == 0 {
            return Err(invalid("grid.m", "must be at least 1"));
        }
        if g.n == 0 {
            return Err(invalid("grid.n", "must be at least 1"));
        }
        if !(g.delta_f_hz > 0.0 && g.delta_f_hz.is_finite()) {
            return Err(invalid("grid.delta_f_hz", "must be positive and finite"));
        }
        if !(g.carrier_hz > 0.0 && g.carrier_hz.is_finite()) {
            return Err(invalid("grid.carrier_hz", "must be positive and finite"));
        }
        let c = &self.channel;
        if c.paths == 0 {
            return Err(invalid("channel.paths", "need at least one path"));
        }
        if c.max_delay_tap >= g.m * g.n {
            return Err(invalid(
                "channel.max_delay_tap",
                format!("must be below the frame size {}", g.m * g.n),
            ));
        }
        if !(c.max_doppler_tap >= 0.0 && c.max_doppler_tap.is_finite()) {
            return Err(invalid(
                "channel.max_doppler_tap",
                "must be finite and nonnegative",
            ));
        }
        if !(c.target_gain > 0.0 && c.target_gain.is_finite()) {
            return Err(invalid(
                "channel.target_gain",
                "must be positive and finite",
            ));
        }
        if !self.noise.sigma_c_dbm.is_finite() {
            return Err(invalid("noise.sigma_c_dbm", "must be finite"));
        }
        if !self.noise.sigma_s_dbm.is_finite() {
            return Err(invalid("noise.sigma_s_dbm", "must be finite"));
        }
        if !(self.solver.xi_0 > 0.0 && self.solver.xi_0.is_finite()) {
            return Err(invalid("solver.xi_0", "must be positive and finite"));
        }
        if self.solver.max_iters == Some(0) {
            return Err(invalid("solver.max_iters", "must be at least 1"));
        }
        if self.monte_carlo.blocks == 0 {
            return Err(invalid("monte_carlo.blocks", "must be at least 1"));
        }
        if self.channel_realizations == 0 {
            return Err(invalid("channel_realizations", "must be at least 1"));
        }
        if self.power_dbm.is_empty() {
            return Err(invalid("power_dbm", "sweep is empty"));
        }
        if let Some(p) = self.power_dbm.iter().find(|p| !p.is_finite()) {
            return Err(invalid("power_dbm", format!("non-finite power {p}")));
        }
        if self.gamma_c.is_empty() {
            return Err(invalid("gamma_c", "sweep is empty"));
        }
        if let Some(v) = self.gamma_c.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(invalid(
                "gamma_c",
                format!("CRB limits must be positive and finite, got {v}"),
            ));
        }
        if otfs_isac::QamConstellation::new(self.qam_order).is_err() {
            return Err(invalid(
                "qam_order",
                format!("unsupported constellation order {}", self.qam_order),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(
            ExperimentSpec::from_toml_str("").unwrap(),
            ExperimentSpec::default()
        );
    }

    #[test]
    fn zero_grid_dimension_names_field() {
        let err = ExperimentSpec::from_toml_str("[grid]\nm = 0\n").unwrap_err();
        assert!(err.to_string().contains("grid.m"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let err = ExperimentSpec::from_toml_str("seed = 3\n\n[grid]\nmm = 4\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("mm"), "{msg}");
        assert!(msg.contains("line 4"), "{msg}");
        assert!(ExperimentSpec::from_toml_str("colour = 1").is_err());
    }

    #[test]
    fn emitted_spec_round_trips() {
        let mut spec = ExperimentSpec {
            kind: ExperimentKind::SymbolSweep,
            seed: 99,
            gamma_c: vec![4e-5, 1e-3],
            ..Default::default()
        };
        spec.solver.max_iters = Some(150);
        spec.channel.crb_unit = CrbUnit::Hertz;
        let parsed = ExperimentSpec::from_toml_str(&spec.to_toml()).unwrap();
        assert_eq!(parsed, spec);
        let default = ExperimentSpec::default();
        assert_eq!(
            ExperimentSpec::from_toml_str(&default.to_toml()).unwrap(),
            default
        );
    }

    #[test]
    fn kind_names_parse() {
        for kind in ExperimentKind::ALL {
            assert_eq!(kind.name().parse::<ExperimentKind>().unwrap(), kind);
        }
        assert!("fig5".parse::<ExperimentKind>().is_err());
    }

    #[test]
    fn rejects_bad_sweeps() {
        assert!(ExperimentSpec::from_toml_str("power_dbm = []").is_err());
        assert!(ExperimentSpec::from_toml_str("power_dbm = [nan]").is_err());
        let err = ExperimentSpec::from_toml_str("gamma_c = [0.0]").unwrap_err();
        assert!(err.to_string().contains("gamma_c"));
        assert!(ExperimentSpec::from_toml_str("qam_order = 5").is_err());
    }
}
