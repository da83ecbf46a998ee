//! Experiment configuration, read from TOML. Every field has a default so an
//! empty file reproduces the first simulation example.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::array::AngularDensity;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Example1,
    Example2,
    Example3,
    Custom,
}

/// Which signal covariance `η = factor·√tr(R_s)` is evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaRule {
    Presumed,
    Actual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaStart {
    Midpoint,
    Random,
}

/// Starting point of the DC iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DcStart {
    /// Principal direction of the presumed covariance, scaled to feasibility.
    Principal,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Potdc,
    ClosedForm,
    Dc,
    Smi,
    /// Best grid point of `k(α)`.
    Exhaustive,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Potdc => "potdc",
            Method::ClosedForm => "closed_form",
            Method::Dc => "dc",
            Method::Smi => "smi",
            Method::Exhaustive => "exhaustive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub master_seed: u64,
    pub num_trials: usize,
    pub array_sizes: Vec<usize>,
    /// Element spacing in wavelengths.
    pub spacing: f64,
    pub snapshots: usize,
    pub snr_db: Vec<f64>,
    pub inr_db: f64,
    pub gamma: f64,
    pub eta_factor: f64,
    pub eta_rule: EtaRule,
    /// Mismatch bound of the closed-form baseline; `η` when absent.
    pub epsilon: Option<f64>,
    pub zeta_term: f64,
    pub max_iter: usize,
    pub dc_max_iter: usize,
    pub alpha_start: AlphaStart,
    pub dc_start: DcStart,
    /// Sectors of the lower bound; 0 skips it.
    pub lower_bound_sectors: usize,
    /// Grid points of the exhaustive search; 0 skips it.
    pub exhaustive_points: usize,
    /// Run the convexity check on the exhaustive grid.
    pub convexity: bool,
    pub methods: Vec<Method>,
    pub quadrature_points: usize,
    /// Record wall times; off by default so output is reproducible.
    pub timing: bool,
    pub actual: AngularDensity,
    pub presumed: AngularDensity,
    pub interference: AngularDensity,
}

pub const DEFAULT_SNR_GRID: [f64; 9] = [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0];

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::example1()
    }
}

impl ExperimentConfig {
    pub fn example1() -> Self {
        Self {
            scenario: Scenario::Example1,
            master_seed: 2013,
            num_trials: 100,
            array_sizes: vec![10],
            spacing: 0.5,
            snapshots: 20,
            snr_db: DEFAULT_SNR_GRID.to_vec(),
            inr_db: 10.0,
            gamma: 10.0,
            eta_factor: 0.3,
            eta_rule: EtaRule::Presumed,
            epsilon: None,
            zeta_term: 1e-6,
            max_iter: 50,
            dc_max_iter: 500,
            alpha_start: AlphaStart::Midpoint,
            dc_start: DcStart::Principal,
            lower_bound_sectors: 32,
            exhaustive_points: 0,
            convexity: false,
            methods: vec![Method::Potdc, Method::ClosedForm, Method::Dc, Method::Smi],
            quadrature_points: crate::array::DEFAULT_GRID_POINTS,
            timing: false,
            actual: AngularDensity::Gaussian {
                center: 30.0,
                spread: 4.0,
            },
            presumed: AngularDensity::Gaussian {
                center: 32.0,
                spread: 1.0,
            },
            interference: AngularDensity::Uniform {
                center: 10.0,
                width: 4.0,
            },
        }
    }

    pub fn example2() -> Self {
        Self {
            scenario: Scenario::Example2,
            actual: AngularDensity::TruncatedLaplacian {
                center: 30.0,
                scale: 0.1,
                support: (15.0, 45.0),
                fluctuation_seed: 7,
                fluctuation_strength: 0.9,
            },
            ..Self::example1()
        }
    }

    /// Iteration counts over array sizes at −10 dB from random starts.
    pub fn example3() -> Self {
        Self {
            scenario: Scenario::Example3,
            num_trials: 200,
            array_sizes: (8..=20).step_by(2).collect(),
            snr_db: vec![-10.0],
            alpha_start: AlphaStart::Random,
            dc_start: DcStart::Random,
            lower_bound_sectors: 0,
            methods: vec![Method::Potdc, Method::Dc],
            ..Self::example1()
        }
    }

    pub fn for_scenario(s: Scenario) -> Self {
        match s {
            Scenario::Example1 | Scenario::Custom => Self::example1(),
            Scenario::Example2 => Self::example2(),
            Scenario::Example3 => Self::example3(),
        }
    }

    /// Parses TOML on top of the defaults of the scenario named in the file.
    pub fn from_toml_str(s: &str) -> Result<Self> {
        Self::parse(s, None)
    }

    /// Parses TOML on top of the defaults of `scenario`, which overrides any
    /// scenario named in the file.
    pub fn from_toml_for(s: &str, scenario: Scenario) -> Result<Self> {
        Self::parse(s, Some(scenario))
    }

    fn parse(s: &str, forced: Option<Scenario>) -> Result<Self> {
        let mut table: toml::Table = s
            .parse()
            .map_err(|e: toml::de::Error| Error::InvalidInput(format!("config: {e}")))?;
        let named = match table.remove("scenario") {
            Some(v) => Some(
                Scenario::deserialize(v)
                    .map_err(|e| Error::InvalidInput(format!("config: scenario: {e}")))?,
            ),
            None => None,
        };
        let scenario = forced.or(named).unwrap_or(Scenario::Custom);
        let mut base = toml::Table::try_from(Self::for_scenario(scenario))
            .map_err(|e| Error::InvalidInput(format!("config: {e}")))?;
        for (k, v) in table {
            base.insert(k, v);
        }
        let mut cfg: Self = base
            .try_into()
            .map_err(|e: toml::de::Error| Error::InvalidInput(format!("config: {e}")))?;
        cfg.scenario = scenario;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path, scenario: Option<Scenario>) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| {
            Error::InvalidInput(format!("config: cannot read {}: {e}", path.display()))
        })?;
        Self::parse(&s, scenario)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad =
            |field: &str, msg: String| Err(Error::InvalidInput(format!("config: {field}: {msg}")));
        if self.num_trials == 0 {
            return bad("num_trials", "must be positive".into());
        }
        if self.array_sizes.is_empty() || self.array_sizes.iter().any(|&m| m < 2) {
            return bad(
                "array_sizes",
                format!("need at least one size ≥ 2, got {:?}", self.array_sizes),
            );
        }
        if self.snapshots == 0 {
            return bad("snapshots", "must be positive".into());
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| !s.is_finite()) {
            return bad("snr_db", "must be a non-empty list of finite values".into());
        }
        if !(self.spacing > 0.0) {
            return bad("spacing", format!("must be positive, got {}", self.spacing));
        }
        if !self.inr_db.is_finite() {
            return bad("inr_db", "must be finite".into());
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad("gamma", format!("must be positive, got {}", self.gamma));
        }
        if !(self.eta_factor > 0.0 && self.eta_factor < 1.0) {
            return bad(
                "eta_factor",
                format!("must lie in (0, 1), got {}", self.eta_factor),
            );
        }
        if let Some(e) = self.epsilon {
            if !(e >= 0.0 && e.is_finite()) {
                return bad("epsilon", format!("must be nonnegative, got {e}"));
            }
        }
        if !(self.zeta_term > 0.0) {
            return bad(
                "zeta_term",
                format!("must be positive, got {}", self.zeta_term),
            );
        }
        if self.max_iter == 0 || self.dc_max_iter == 0 {
            return bad("max_iter", "iteration caps must be positive".into());
        }
        if self.methods.is_empty() {
            return bad("methods", "need at least one method".into());
        }
        if self.methods.contains(&Method::Exhaustive) && self.exhaustive_points < 2 {
            return bad(
                "exhaustive_points",
                "the exhaustive method needs at least 2 points".into(),
            );
        }
        if self.convexity && self.exhaustive_points < 3 {
            return bad("convexity", "needs exhaustive_points ≥ 3".into());
        }
        if self.quadrature_points < 181 {
            return bad(
                "quadrature_points",
                format!("need at least 181, got {}", self.quadrature_points),
            );
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(
            c,
            ExperimentConfig {
                scenario: Scenario::Custom,
                ..ExperimentConfig::example1()
            }
        );
    }

    #[test]
    fn scenario_selects_base_and_keys_override() {
        let c =
            ExperimentConfig::from_toml_str("scenario = \"example3\"\nnum_trials = 5\n").unwrap();
        assert_eq!(c.array_sizes, vec![8, 10, 12, 14, 16, 18, 20]);
        assert_eq!(c.num_trials, 5);
        let c = ExperimentConfig::from_toml_str(
            "[actual]\nkind = \"uniform\"\ncenter = 20.0\nwidth = 10.0\n",
        )
        .unwrap();
        assert_eq!(
            c.actual,
            AngularDensity::Uniform {
                center: 20.0,
                width: 10.0
            }
        );
        let c =
            ExperimentConfig::from_toml_for("scenario = \"example3\"", Scenario::Example2).unwrap();
        assert_eq!(c, ExperimentConfig::example2());
    }

    #[test]
    fn round_trips_through_toml() {
        for c in [
            ExperimentConfig::example1(),
            ExperimentConfig::example2(),
            ExperimentConfig::example3(),
        ] {
            assert_eq!(ExperimentConfig::from_toml_str(&c.to_toml()).unwrap(), c);
        }
    }

    #[test]
    fn errors_name_the_field() {
        for (src, field) in [
            ("num_trials = 0", "num_trials"),
            ("snr_db = []", "snr_db"),
            ("gamma = -1.0", "gamma"),
            ("bogus = 1", "bogus"),
            ("eta_factor = \"x\"", "eta_factor"),
        ] {
            let e = ExperimentConfig::from_toml_str(src)
                .unwrap_err()
                .to_string();
            assert!(e.contains(field), "{src}: {e}");
        }
    }
}
