use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::equilibria::PlasmaPair;
use crate::kernel::KernelParams;
use crate::scenarios::{CavityConfig, InitialRecipe, RelaxationConfig};
use crate::{Error, Result};

/// The checked-in defaults, also the reference document for the schema.
pub const DEFAULTS_JSON: &str = include_str!("../../config/defaults.json");
/// JSON schema of [`RunConfig`].
pub const SCHEMA_JSON: &str = include_str!("../../config/run_config.schema.json");

/// Overrides the output directory.
pub const ENV_OUT_DIR: &str = "RVML_OUT_DIR";
/// Overrides the thread budget.
pub const ENV_THREADS: &str = "RVML_THREADS";

/// Pass thresholds of every acceptance check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Relative target handed to adaptive quadratures.
    pub quadrature: f64,
    pub normalisation: f64,
    pub second_moment: f64,
    pub neutrality: f64,
    pub bessel: f64,
    pub kernel_null_vector: f64,
    pub kernel_rotation: f64,
    pub kernel_diagonal: f64,
    pub i_tables: f64,
    pub determinant: f64,
    pub moment_functions: f64,
    pub operator_symmetry: f64,
    /// Relative size of `L chi_i`, and the moment drift rate of relaxation.
    pub null: f64,
    /// Eigenvalues below `spectral_count * ||L||` count as zero.
    pub spectral_count: f64,
    pub gap_stability: f64,
    pub collision_conservation: f64,
    pub decay_rate: f64,
    pub energy_closure: f64,
    pub billiard_momentum: f64,
    pub billiard_angular: f64,
    pub billiard_reversal: f64,
    pub div_b: f64,
    pub field_energy_drift: f64,
    pub gauss_drift: f64,
    pub momentum_order: f64,
    pub divergence_identity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentParams {
    /// Relative target of the moment-function quadratures.
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorParams {
    pub n_per_axis: usize,
    pub refined_n_per_axis: usize,
    pub p_max: f64,
    /// Write the dense operator to `operator.bin` in `assemble`.
    pub dump: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollisionParams {
    pub n_per_axis: usize,
    pub refined_n_per_axis: usize,
    pub p_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentityParams {
    pub n_per_axis: usize,
    pub refined_n_per_axis: usize,
    pub p_max: f64,
    pub bump_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelaxParams {
    /// Random microscopic data: decay rate, moment drift and monotonicity.
    pub random: RelaxationConfig,
    /// Smooth data: energy closure and monotonicity.
    pub smooth: RelaxationConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Disk,
    Ball,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BilliardParams {
    pub domains: Vec<DomainKind>,
    pub radius: f64,
    pub particles: usize,
    pub reflections: usize,
    /// Momenta are drawn uniformly from the ball of this radius.
    pub p_scale: f64,
}

/// Everything a run needs. Unknown keys are rejected at every level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker threads; `0` uses every core.
    pub threads: usize,
    pub out_dir: PathBuf,
    pub species: PlasmaPair,
    pub kernel: KernelParams,
    pub kernel_samples: usize,
    pub tolerances: Tolerances,
    pub momentfn: MomentParams,
    pub operator: OperatorParams,
    pub collision: CollisionParams,
    pub identity: IdentityParams,
    pub relax: RelaxParams,
    pub billiard: BilliardParams,
    pub cavity: CavityConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::from_json(DEFAULTS_JSON).expect("checked-in defaults parse")
    }
}

impl RunConfig {
    /// Parses and validates; errors carry the JSON path of the offending key.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(format!("at `{path}`: {}", e.into_inner()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Applies `RVML_OUT_DIR` and `RVML_THREADS` if set.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(dir) = std::env::var(ENV_OUT_DIR) {
            self.out_dir = dir.into();
        }
        if let Ok(n) = std::env::var(ENV_THREADS) {
            self.threads = n
                .trim()
                .parse()
                .map_err(|_| Error::config(format!("{ENV_THREADS}={n} is not a thread count")))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.species.validate()?;
        self.kernel.validate()?;
        let tol = serde_json::to_value(&self.tolerances)?;
        for (name, v) in tol.as_object().into_iter().flatten() {
            if !v.as_f64().is_some_and(|x| x > 0.0 && x.is_finite()) {
                return Err(Error::config(format!("tolerance `{name}` must be a positive number")));
            }
        }
        if !(self.momentfn.tol > 0.0 && self.momentfn.tol < 1.0) {
            return Err(Error::config("momentfn.tol must lie in (0, 1)"));
        }
        if self.kernel_samples == 0 {
            return Err(Error::config("kernel_samples must be at least 1"));
        }
        let ladder = |what: &str, coarse: usize, fine: usize, p_max: f64| {
            if coarse < 4 || fine <= coarse || !(p_max > 0.0) {
                return Err(Error::config(format!(
                    "{what}: need 4 <= n_per_axis < refined_n_per_axis and p_max > 0"
                )));
            }
            Ok(())
        };
        ladder(
            "operator",
            self.operator.n_per_axis,
            self.operator.refined_n_per_axis,
            self.operator.p_max,
        )?;
        ladder(
            "collision",
            self.collision.n_per_axis,
            self.collision.refined_n_per_axis,
            self.collision.p_max,
        )?;
        ladder(
            "identity",
            self.identity.n_per_axis,
            self.identity.refined_n_per_axis,
            self.identity.p_max,
        )?;
        if !(self.identity.bump_radius > 0.0) {
            return Err(Error::config("identity.bump_radius must be positive"));
        }
        for (name, r) in [("random", &self.relax.random), ("smooth", &self.relax.smooth)] {
            r.validate().map_err(|e| Error::config(format!("relax.{name}: {e}")))?;
        }
        if !matches!(self.relax.random.initial, InitialRecipe::RandomMicroscopic { .. }) {
            return Err(Error::config("relax.random.initial must be random-microscopic"));
        }
        let b = &self.billiard;
        if b.domains.is_empty() || b.particles == 0 || b.reflections == 0 || !(b.radius > 0.0) || !(b.p_scale > 0.0) {
            return Err(Error::config(
                "billiard: need a domain, particles, reflections, radius > 0 and p_scale > 0",
            ));
        }
        self.cavity.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse_and_round_trip() {
        let cfg = RunConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), cfg);
    }

    #[test]
    fn unknown_key_names_its_path() {
        let mut v: serde_json::Value = serde_json::from_str(DEFAULTS_JSON).unwrap();
        v["cavity"]["cels"] = 3.into();
        let err = RunConfig::from_json(&v.to_string()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("cavity"), "{err}");
    }

    #[test]
    fn nonpositive_tolerance_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(DEFAULTS_JSON).unwrap();
        v["tolerances"]["div_b"] = (-1.0).into();
        assert!(RunConfig::from_json(&v.to_string())
            .unwrap_err()
            .to_string()
            .contains("div_b"));
    }

    #[test]
    fn schema_lists_every_top_level_key() {
        let schema: serde_json::Value = serde_json::from_str(SCHEMA_JSON).unwrap();
        let cfg = serde_json::to_value(RunConfig::default()).unwrap();
        let props = schema["properties"].as_object().unwrap();
        let keys: Vec<_> = cfg.as_object().unwrap().keys().collect();
        assert_eq!(props.len(), keys.len());
        for k in keys {
            assert!(props.contains_key(k), "schema misses {k}");
        }
        let tol = schema["properties"]["tolerances"]["properties"].as_object().unwrap();
        assert_eq!(tol.len(), cfg["tolerances"].as_object().unwrap().len());
    }
}
