//! Scenario configuration: strict TOML schema with lossless round-trip.
//! Unknown keys are rejected; every tolerance in use is an explicit field so
//! output metadata can echo the exact values applied.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScatterError};
use crate::modelspace::{
    EnergyGridSpec, EpsMode, H0Kind, ModelConfig, PotentialKind, Spacing,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKindCfg {
    DenseHermitian,
    SeparableRank1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum H0KindCfg {
    Linear,
    Quadratic,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpacingCfg {
    Linear,
    Logarithmic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsModeCfg {
    Fixed,
    Proportional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub n_particles: u32,
    pub dim: usize,
    pub seed: u64,
    pub coupling_scale: f64,
    pub potential_kind: PotentialKindCfg,
    pub h0_kind: H0KindCfg,
    /// explicit eigenvalue list; required iff h0_kind = "explicit"
    #[serde(default)]
    pub h0_levels: Option<Vec<f64>>,
    #[serde(default)]
    pub inert_channels: Vec<(u32, u32)>,
}

impl ModelSection {
    pub fn to_model_config(&self) -> Result<ModelConfig> {
        let h0_kind = match self.h0_kind {
            H0KindCfg::Linear => {
                if self.h0_levels.is_some() {
                    return Err(ScatterError::Config(
                        "h0_levels is only valid with h0_kind = \"explicit\"".into(),
                    ));
                }
                H0Kind::Linear
            }
            H0KindCfg::Quadratic => {
                if self.h0_levels.is_some() {
                    return Err(ScatterError::Config(
                        "h0_levels is only valid with h0_kind = \"explicit\"".into(),
                    ));
                }
                H0Kind::Quadratic
            }
            H0KindCfg::Explicit => H0Kind::Explicit(self.h0_levels.clone().ok_or_else(|| {
                ScatterError::Config("h0_kind = \"explicit\" requires h0_levels".into())
            })?),
        };
        let cfg = ModelConfig {
            n_particles: self.n_particles,
            dim: self.dim,
            seed: self.seed,
            coupling_scale: self.coupling_scale,
            potential_kind: match self.potential_kind {
                PotentialKindCfg::DenseHermitian => PotentialKind::DenseHermitian,
                PotentialKindCfg::SeparableRank1 => PotentialKind::SeparableRank1,
            },
            h0_kind,
            inert_channels: self.inert_channels.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub e_min: f64,
    pub e_max: f64,
    pub points: usize,
    pub spacing: SpacingCfg,
    pub eps: f64,
    #[serde(default = "default_eps_mode")]
    pub eps_mode: EpsModeCfg,
}

fn default_eps_mode() -> EpsModeCfg {
    EpsModeCfg::Fixed
}

impl GridSection {
    pub fn to_grid_spec(&self) -> Result<EnergyGridSpec> {
        let spec = EnergyGridSpec {
            e_min: self.e_min,
            e_max: self.e_max,
            points: self.points,
            spacing: match self.spacing {
                SpacingCfg::Linear => Spacing::Linear,
                SpacingCfg::Logarithmic => Spacing::Logarithmic,
            },
            eps: self.eps,
            eps_mode: match self.eps_mode {
                EpsModeCfg::Fixed => EpsMode::Fixed,
                EpsModeCfg::Proportional => EpsMode::Proportional,
            },
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Optional coupling-scale sweep applied on top of the energy grid.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    #[serde(default)]
    pub coupling: Vec<f64>,
}

/// Every tolerance the verify and scan paths apply. No silent defaults at the
/// point of use: these values are echoed into output metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    pub identity_tol: f64,
    pub hermiticity_tol: f64,
    pub unitarity_tol: f64,
    pub coincidence_tol: f64,
    pub smallness: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            identity_tol: 1e-10,
            hermiticity_tol: 1e-12,
            unitarity_tol: 1e-10,
            coincidence_tol: 1e-14,
            smallness: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoBodySection {
    pub beta: f64,
    pub lambda: f64,
    pub nodes: usize,
    pub cutoff: f64,
    pub on_shell_momentum: f64,
    /// node counts for the self-convergence ladder
    #[serde(default = "default_convergence_nodes")]
    pub convergence_nodes: Vec<usize>,
    /// denser grid used only for the bound-state pole search
    #[serde(default = "default_binding_nodes")]
    pub binding_nodes: usize,
    #[serde(default = "default_binding_cutoff")]
    pub binding_cutoff: f64,
}

fn default_convergence_nodes() -> Vec<usize> {
    vec![50, 100, 200]
}

fn default_binding_nodes() -> usize {
    400
}

fn default_binding_cutoff() -> f64 {
    1000.0
}

impl TwoBodySection {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(ScatterError::Config(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        if !self.lambda.is_finite() {
            return Err(ScatterError::Config("lambda must be finite".into()));
        }
        if self.cutoff <= self.beta || self.binding_cutoff <= self.beta {
            return Err(ScatterError::Config(
                "cutoffs must exceed the form-factor range beta".into(),
            ));
        }
        if !(self.on_shell_momentum > 0.0 && self.on_shell_momentum < self.cutoff) {
            return Err(ScatterError::Config(format!(
                "on_shell_momentum {} must lie in (0, cutoff)",
                self.on_shell_momentum
            )));
        }
        if self.nodes < 16 || self.binding_nodes < 16 {
            return Err(ScatterError::Config("node counts must be at least 16".into()));
        }
        if self.convergence_nodes.len() < 2 || self.convergence_nodes.iter().any(|&n| n < 16) {
            return Err(ScatterError::Config(
                "convergence_nodes needs at least two counts, each at least 16".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub write_csv: bool,
    pub write_json: bool,
    pub write_plots: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            write_csv: true,
            write_json: true,
            write_plots: true,
        }
    }
}

/// Complete scenario: model, energy grid, optional coupling sweep and
/// two-body section, tolerances and output switches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: ModelSection,
    pub grid: GridSection,
    #[serde(default)]
    pub scan: ScanSection,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub twobody: Option<TwoBodySection>,
    #[serde(default)]
    pub output: OutputSection,
}

impl ScenarioConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ScenarioConfig =
            toml::from_str(s).map_err(|e| ScatterError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| ScatterError::Config(e.to_string()))
    }

    /// Semantic validation beyond the schema.
    pub fn validate(&self) -> Result<()> {
        self.model.to_model_config()?;
        self.grid.to_grid_spec()?;
        for &s in &self.scan.coupling {
            if !(s.is_finite() && s > 0.0) {
                return Err(ScatterError::Config(format!(
                    "coupling scan values must be positive, got {s}"
                )));
            }
        }
        let t = &self.thresholds;
        for (name, v) in [
            ("identity_tol", t.identity_tol),
            ("hermiticity_tol", t.hermiticity_tol),
            ("unitarity_tol", t.unitarity_tol),
            ("coincidence_tol", t.coincidence_tol),
            ("smallness", t.smallness),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ScatterError::Config(format!(
                    "threshold {name} must be positive, got {v}"
                )));
            }
        }
        if let Some(tb) = &self.twobody {
            tb.validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[model]
n_particles = 3
dim = 8
seed = 42
coupling_scale = 0.1
potential_kind = "dense_hermitian"
h0_kind = "linear"

[grid]
e_min = 1.0
e_max = 100.0
points = 8
spacing = "logarithmic"
eps = 0.4
"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = ScenarioConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(cfg.model.n_particles, 3);
        assert_eq!(cfg.thresholds, Thresholds::default());
        assert!(cfg.scan.coupling.is_empty());
        assert!(cfg.twobody.is_none());
        assert!(cfg.output.write_csv);
    }

    #[test]
    fn round_trip_is_lossless() {
        let mut cfg = ScenarioConfig::from_toml_str(MINIMAL).unwrap();
        cfg.scan.coupling = vec![0.2, 0.1, 0.05];
        cfg.model.inert_channels = vec![(2, 3)];
        cfg.twobody = Some(TwoBodySection {
            beta: 1.0,
            lambda: -1.5,
            nodes: 200,
            cutoff: 200.0,
            on_shell_momentum: 1.0,
            convergence_nodes: default_convergence_nodes(),
            binding_nodes: default_binding_nodes(),
            binding_cutoff: default_binding_cutoff(),
        });
        let text = cfg.to_toml_string().unwrap();
        let back = ScenarioConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, back);
        // a second cycle is byte-stable
        assert_eq!(text, back.to_toml_string().unwrap());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{MINIMAL}\n[model2]\nx = 1\n");
        assert!(matches!(
            ScenarioConfig::from_toml_str(&text),
            Err(ScatterError::Config(_))
        ));
        let text = MINIMAL.replace("seed = 42", "seed = 42\nbogus_key = 1");
        assert!(matches!(
            ScenarioConfig::from_toml_str(&text),
            Err(ScatterError::Config(_))
        ));
    }

    #[test]
    fn zero_eps_is_a_config_error() {
        let text = MINIMAL.replace("eps = 0.4", "eps = 0.0");
        assert!(matches!(
            ScenarioConfig::from_toml_str(&text),
            Err(ScatterError::Config(_))
        ));
    }

    #[test]
    fn explicit_spectrum_requires_levels() {
        let text = MINIMAL.replace("h0_kind = \"linear\"", "h0_kind = \"explicit\"");
        assert!(ScenarioConfig::from_toml_str(&text).is_err());
        let text = MINIMAL.replace(
            "h0_kind = \"linear\"",
            "h0_kind = \"explicit\"\nh0_levels = [0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0]",
        );
        let cfg = ScenarioConfig::from_toml_str(&text).unwrap();
        let model = cfg.model.to_model_config().unwrap();
        assert!(matches!(model.h0_kind, H0Kind::Explicit(ref l) if l.len() == 8));
    }

    #[test]
    fn levels_with_non_explicit_kind_are_rejected() {
        let text = MINIMAL.replace(
            "h0_kind = \"linear\"",
            "h0_kind = \"linear\"\nh0_levels = [0.0, 1.0]",
        );
        assert!(ScenarioConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn parse_error_reports_location() {
        let err = ScenarioConfig::from_toml_str("[model\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line"), "message should locate the error: {msg}");
    }
}
