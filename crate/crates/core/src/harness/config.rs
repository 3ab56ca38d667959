//! JSON experiment configuration. Unknown keys are rejected everywhere.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::MAX_MODES;

fn default_hbar() -> f64 {
    1.0
}

fn default_tol() -> f64 {
    crate::tdhf::DEFAULT_TOL
}

fn default_orders() -> Vec<usize> {
    vec![1, 2]
}

fn default_sizes() -> Vec<usize> {
    vec![4, 6, 8]
}

fn default_family() -> usize {
    8
}

fn default_cap() -> f64 {
    1.0
}

fn default_beta() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub d: usize,
    pub seed: u64,
    #[serde(default)]
    pub state: StateSpec,
    #[serde(default)]
    pub one_body: OneBodySpec,
    #[serde(default)]
    pub interaction: InteractionSpec,
    #[serde(default)]
    pub lambda: LambdaSpec,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
    #[serde(default)]
    pub time_grid: TimeGrid,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_orders")]
    pub orders: Vec<usize>,
    /// Mode counts visited by the mean-field sweep.
    #[serde(default = "default_sizes")]
    pub sizes: Vec<usize>,
    /// Number of consecutive seeds, starting at `seed`, averaged per sweep size.
    #[serde(default = "default_family")]
    pub family: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateSpec {
    Slater { occupied: Vec<usize> },
    Quasifree { p: Vec<f64> },
    /// Gibbs state of `dΓ(L)` at inverse temperature `beta`; `mu` defaults to
    /// the median of L's spectrum.
    Thermal {
        #[serde(default = "default_beta")]
        beta: f64,
        #[serde(default)]
        mu: Option<f64>,
    },
}

impl Default for StateSpec {
    fn default() -> Self {
        StateSpec::Thermal { beta: 1.0, mu: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OneBodySpec {
    Diagonal { values: Vec<f64> },
    /// Seeded Hermitian matrix rescaled to operator norm `norm_cap`.
    Random {
        #[serde(default = "default_cap")]
        norm_cap: f64,
    },
}

impl Default for OneBodySpec {
    fn default() -> Self {
        OneBodySpec::Random { norm_cap: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InteractionSpec {
    /// Seeded swap-symmetric Hermitian matrix rescaled to operator norm `norm_cap`.
    Random {
        #[serde(default = "default_cap")]
        norm_cap: f64,
    },
    /// Row-major `d² × d²` matrix; `imag` may be omitted for real interactions.
    Explicit {
        real: Vec<Vec<f64>>,
        #[serde(default)]
        imag: Option<Vec<Vec<f64>>>,
    },
    Zero,
}

impl Default for InteractionSpec {
    fn default() -> Self {
        InteractionSpec::Random { norm_cap: 1.0 }
    }
}

/// Either a fixed coupling or `"mean-field"`, meaning `λ = 1 / Tr N_1(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaSpec {
    Value(f64),
    Keyword(LambdaKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LambdaKeyword {
    #[serde(rename = "mean-field")]
    MeanField,
}

impl Default for LambdaSpec {
    fn default() -> Self {
        LambdaSpec::Value(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeUnit {
    Absolute,
    /// `t_max` is a multiple of the horizon τ.
    Tau,
}

/// `samples` equally spaced times in `(0, t_max]`, preceded by `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t_max: f64,
    pub samples: usize,
    #[serde(default = "TimeGrid::default_unit")]
    pub unit: TimeUnit,
}

impl TimeGrid {
    fn default_unit() -> TimeUnit {
        TimeUnit::Absolute
    }

    pub fn times(&self, tau: f64) -> Result<Vec<f64>> {
        let t_max = match self.unit {
            TimeUnit::Absolute => self.t_max,
            TimeUnit::Tau if tau.is_finite() => self.t_max * tau,
            TimeUnit::Tau => {
                return Err(Error::Config(
                    "time grid in units of tau needs a nonzero interaction".into(),
                ))
            }
        };
        let n = self.samples;
        Ok(std::iter::once(0.0)
            .chain((1..=n).map(|k| t_max * k as f64 / n as f64))
            .collect())
    }
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self {
            t_max: 0.9,
            samples: 20,
            unit: TimeUnit::Tau,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Half-filled Gibbs state (β = 1, μ at the median) with unit-norm random
    /// `L` and `V` and mean-field coupling: the default sweep family.
    pub fn thermal_default(d: usize, seed: u64) -> Self {
        Self {
            d,
            seed,
            state: StateSpec::default(),
            one_body: OneBodySpec::default(),
            interaction: InteractionSpec::default(),
            lambda: LambdaSpec::Keyword(LambdaKeyword::MeanField),
            hbar: 1.0,
            time_grid: TimeGrid {
                t_max: 1.0,
                samples: 2,
                unit: TimeUnit::Absolute,
            },
            tol: default_tol(),
            orders: default_orders(),
            sizes: default_sizes(),
            family: default_family(),
        }
    }

    pub fn with_d(&self, d: usize) -> Self {
        Self { d, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let check_d = |d: usize| (1..=MAX_MODES).contains(&d);
        if !check_d(self.d) {
            return bad(format!("d = {} must lie in 1..={MAX_MODES}", self.d));
        }
        if let Some(&d) = self.sizes.iter().find(|&&d| !check_d(d)) {
            return bad(format!("sweep size {d} must lie in 1..={MAX_MODES}"));
        }
        if self.family == 0 {
            return bad("seed family must contain at least one seed".into());
        }
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return bad(format!("hbar must be positive, got {}", self.hbar));
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if !(self.time_grid.t_max >= 0.0 && self.time_grid.t_max.is_finite()) || self.time_grid.samples == 0 {
            return bad("time grid needs t_max >= 0 and at least one sample".into());
        }
        if self.orders.is_empty() || self.orders.iter().any(|&m| m == 0 || m > self.d) {
            return bad(format!("orders {:?} must be nonempty and lie in 1..={}", self.orders, self.d));
        }
        if let LambdaSpec::Value(l) = self.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return bad(format!("lambda must be finite and >= 0, got {l}"));
            }
        }
        match &self.state {
            StateSpec::Slater { occupied } if occupied.iter().any(|&j| j >= self.d) => {
                return bad(format!("occupied modes {occupied:?} exceed d = {}", self.d));
            }
            StateSpec::Quasifree { p } if p.len() != self.d => {
                return bad(format!("occupation vector has {} entries, expected {}", p.len(), self.d));
            }
            StateSpec::Thermal { beta, .. } if !(*beta > 0.0) => {
                return bad(format!("beta must be positive, got {beta}"));
            }
            _ => {}
        }
        match &self.one_body {
            OneBodySpec::Diagonal { values } if values.len() != self.d => {
                return bad(format!("diagonal L has {} entries, expected {}", values.len(), self.d));
            }
            OneBodySpec::Random { norm_cap } if !(*norm_cap >= 0.0) => {
                return bad(format!("norm_cap must be >= 0, got {norm_cap}"));
            }
            _ => {}
        }
        match &self.interaction {
            InteractionSpec::Random { norm_cap } if !(*norm_cap >= 0.0) => {
                return bad(format!("norm_cap must be >= 0, got {norm_cap}"));
            }
            InteractionSpec::Explicit { real, imag } => {
                let dd = self.d * self.d;
                let square = |m: &Vec<Vec<f64>>| m.len() == dd && m.iter().all(|r| r.len() == dd);
                if !square(real) || imag.as_ref().is_some_and(|m| !square(m)) {
                    return bad(format!("explicit interaction must be {dd} x {dd}"));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_json_takes_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"d": 4, "seed": 3}"#).unwrap();
        assert_eq!(cfg.state, StateSpec::Thermal { beta: 1.0, mu: None });
        assert_eq!(cfg.lambda, LambdaSpec::Value(1.0));
        assert_eq!(cfg.orders, vec![1, 2]);
        assert_eq!(cfg.time_grid.unit, TimeUnit::Tau);
    }

    #[test]
    fn full_json_round_trips() {
        let text = r#"{
            "d": 3, "seed": 9,
            "state": {"kind": "slater", "occupied": [0, 2]},
            "one_body": {"kind": "diagonal", "values": [0.0, 1.0, 2.0]},
            "interaction": {"kind": "zero"},
            "lambda": "mean-field",
            "hbar": 2.0,
            "time_grid": {"t_max": 1.5, "samples": 3, "unit": "absolute"},
            "tol": 1e-8,
            "orders": [1],
            "sizes": [3],
            "family": 2
        }"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(cfg.lambda, LambdaSpec::Keyword(LambdaKeyword::MeanField));
        let again = ExperimentConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.time_grid.times(f64::INFINITY).unwrap(), vec![0.0, 0.5, 1.0, 1.5]);
    }

    #[test]
    fn rejects_unknown_and_inconsistent() {
        assert!(ExperimentConfig::from_json(r#"{"d": 4, "seed": 3, "colour": 1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"d": 4, "seed": 3, "state": {"kind": "thermal", "beta": 1, "nu": 0}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"d": 2, "seed": 3, "state": {"kind": "slater", "occupied": [2]}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"d": 2, "seed": 3, "lambda": "strong"}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"d": 2, "seed": 3, "orders": [3]}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"d": 2, "seed": 3, "interaction": {"kind": "explicit", "real": [[1.0]]}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"d": 13, "seed": 3}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"d": 4, "seed": 3, "family": 0}"#).is_err());
    }

    #[test]
    fn tau_grid_needs_finite_tau() {
        let grid = TimeGrid { t_max: 0.5, samples: 2, unit: TimeUnit::Tau };
        assert_eq!(grid.times(0.2).unwrap(), vec![0.0, 0.05, 0.1]);
        assert!(grid.times(f64::INFINITY).is_err());
    }
}
