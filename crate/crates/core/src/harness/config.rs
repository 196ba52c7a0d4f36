//! TOML study configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coeffs::CoefficientSpec;
use crate::mesh::Rect;
use crate::microcell::CellTemplate;
use crate::reconstruct::minimum_samples;
use crate::{Error, Result};

/// One value or a strictly increasing list of values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Schedule {
    One(usize),
    Many(Vec<usize>),
}

impl Schedule {
    pub fn values(&self) -> Vec<usize> {
        match self {
            Schedule::One(v) => vec![*v],
            Schedule::Many(v) => v.clone(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Schedule::One(_) => 1,
            Schedule::Many(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn validate(&self, name: &str) -> Result<()> {
        let v = self.values();
        if v.is_empty() {
            return Err(Error::InvalidArgument(format!("{name} schedule is empty")));
        }
        if v.contains(&0) {
            return Err(Error::InvalidArgument(format!("{name} schedule contains 0")));
        }
        if v.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!("{name} schedule must be strictly increasing")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OfflineConfig {
    pub q: Schedule,
    pub m: usize,
    /// Defaults to the sampling threshold of `m`.
    #[serde(default)]
    pub n_lowest: Option<usize>,
    /// Sample the closed-form effective matrix instead of solving cell problems.
    #[serde(default)]
    pub analytic: bool,
    #[serde(default)]
    pub cell: CellTemplate,
}

impl OfflineConfig {
    pub fn n_lowest(&self) -> usize {
        self.n_lowest.unwrap_or_else(|| minimum_samples(self.m))
    }
}

/// Right-hand side and boundary data of the macroscopic problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Forcing {
    /// `f = 1`, `g = 0`; errors are measured against a fine solve with the
    /// known effective matrix.
    #[default]
    Unit,
    /// `u = sin(pi x1) sin(pi x2)` with `A = I`; errors against the exact `u`.
    Manufactured,
}

fn default_l() -> usize {
    2
}

fn default_reference_n() -> usize {
    256
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OnlineConfig {
    pub n: Schedule,
    #[serde(default = "default_l")]
    pub l: usize,
    #[serde(default = "default_reference_n")]
    pub reference_n: usize,
    /// Defaults to exactness `2l + m`.
    #[serde(default)]
    pub quadrature_degree: Option<usize>,
    #[serde(default)]
    pub forcing: Forcing,
}

/// How `q` follows `n` in a study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingRule {
    #[default]
    None,
    /// `q = ceil(c n^{l/(m+1)})`
    H1,
    /// `q = ceil(c n^{(l+1)/(m+1)})`
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    #[serde(default)]
    pub rule: CouplingRule,
    /// Defaults to 2 for `m = 2`, 2.5 for `m = 3`, 1 otherwise.
    #[serde(default)]
    pub c: Option<f64>,
}

impl CouplingConfig {
    pub fn constant(&self, m: usize) -> f64 {
        self.c.unwrap_or(match m {
            2 => 2.0,
            3 => 2.5,
            _ => 1.0,
        })
    }

    pub fn exponent(&self, l: usize, m: usize) -> Option<f64> {
        match self.rule {
            CouplingRule::None => None,
            CouplingRule::H1 => Some(l as f64 / (m + 1) as f64),
            CouplingRule::L2 => Some((l + 1) as f64 / (m + 1) as f64),
        }
    }

    pub fn q_for(&self, n: usize, l: usize, m: usize) -> Option<usize> {
        let e = self.exponent(l, m)?;
        // guard against ceil(2.0000000000000004)
        let raw = self.constant(m) * (n as f64).powf(e);
        Some(((raw - 1e-9).ceil() as usize).max(1))
    }
}

fn default_realizations() -> usize {
    100
}

fn default_l_schedule() -> Vec<usize> {
    vec![4, 8, 16]
}

fn default_probes() -> Vec<[f64; 2]> {
    vec![[0.25, 0.0], [0.75, 0.5], [1.0, 0.25]]
}

fn default_cells_per_epsilon() -> usize {
    10
}

fn default_max_excluded() -> f64 {
    0.01
}

/// Sampling of the effective matrix at fixed probe points over many
/// checkerboard realizations and cell sizes `delta = L epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    #[serde(default = "default_l_schedule")]
    pub l_schedule: Vec<usize>,
    #[serde(default = "default_probes")]
    pub probes: Vec<[f64; 2]>,
    /// Micro elements per side of one checkerboard cell.
    #[serde(default = "default_cells_per_epsilon")]
    pub cells_per_epsilon: usize,
    /// Largest tolerated fraction of failed realizations.
    #[serde(default = "default_max_excluded")]
    pub max_excluded: f64,
    /// Also run the offline-online pipeline per realization (needs the
    /// `offline` and `online` blocks with single `q` and `n`).
    #[serde(default)]
    pub pipeline: bool,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            realizations: default_realizations(),
            l_schedule: default_l_schedule(),
            probes: default_probes(),
            cells_per_epsilon: default_cells_per_epsilon(),
            max_excluded: default_max_excluded(),
            pipeline: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

fn default_domain() -> Rect {
    Rect::unit_square()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(default)]
    pub name: Option<String>,
    /// Master seed; realization seeds are derived from it.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_domain")]
    pub domain: Rect,
    pub problem: CoefficientSpec,
    #[serde(default)]
    pub offline: Option<OfflineConfig>,
    #[serde(default)]
    pub online: Option<OnlineConfig>,
    #[serde(default)]
    pub coupling: CouplingConfig,
    #[serde(default)]
    pub ensemble: Option<EnsembleConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl StudyConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&super::read_text(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        if let Some(off) = &self.offline {
            off.q.validate("q")?;
            if !(1..=3).contains(&off.m) {
                return Err(Error::InvalidArgument(format!("reconstruction order m = {} not in 1..=3", off.m)));
            }
            if off.n_lowest() < minimum_samples(off.m) {
                return Err(Error::InvalidArgument(format!(
                    "n_lowest = {} is below the threshold {} for m = {}",
                    off.n_lowest(),
                    minimum_samples(off.m),
                    off.m
                )));
            }
            if off.analytic && self.problem.known_effective().is_none() {
                return Err(Error::InvalidArgument(format!(
                    "analytic table requested but {} has no closed-form effective matrix",
                    self.problem.name()
                )));
            }
        }
        if let Some(on) = &self.online {
            on.n.validate("n")?;
            if !(1..=2).contains(&on.l) {
                return Err(Error::InvalidArgument(format!("online degree l = {} not in 1..=2", on.l)));
            }
            if on.reference_n == 0 {
                return Err(Error::InvalidArgument("reference_n must be positive".into()));
            }
        }
        if self.coupling.rule != CouplingRule::None {
            if self.offline.is_none() || self.online.is_none() {
                return Err(Error::InvalidArgument("coupling needs both offline and online blocks".into()));
            }
            if let Some(c) = self.coupling.c {
                if !(c > 0.0 && c.is_finite()) {
                    return Err(Error::InvalidArgument(format!("coupling constant must be positive, got {c}")));
                }
            }
        }
        if let Some(ens) = &self.ensemble {
            if !matches!(self.problem, CoefficientSpec::Checkerboard(_)) {
                return Err(Error::InvalidArgument("ensemble studies need a checkerboard problem".into()));
            }
            if ens.realizations == 0 {
                return Err(Error::InvalidArgument("ensemble needs at least one realization".into()));
            }
            Schedule::Many(ens.l_schedule.clone()).validate("L")?;
            if ens.probes.is_empty() {
                return Err(Error::InvalidArgument("ensemble needs at least one probe point".into()));
            }
            let coarsest = ens.cells_per_epsilon * ens.l_schedule[0];
            if coarsest < 4 {
                return Err(Error::InvalidArgument(format!(
                    "cells_per_epsilon * L must be at least 4 (micro resolution), got {coarsest}"
                )));
            }
            if !(0.0..=1.0).contains(&ens.max_excluded) {
                return Err(Error::InvalidArgument("max_excluded must lie in [0, 1]".into()));
            }
        }
        Ok(())
    }

    pub fn offline(&self) -> Result<&OfflineConfig> {
        self.offline
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("config has no [offline] block".into()))
    }

    pub fn online(&self) -> Result<&OnlineConfig> {
        self.online
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("config has no [online] block".into()))
    }

    pub fn ensemble(&self) -> Result<&EnsembleConfig> {
        self.ensemble
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("config has no [ensemble] block".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
name = "coupled"
seed = 7

[problem]
kind = "locally_periodic"
epsilon = 1e-6

[offline]
q = 16
m = 2
analytic = true

[online]
n = [16, 32, 64]

[coupling]
rule = "h1"
"#;

    #[test]
    fn parses_example() {
        let cfg = StudyConfig::from_toml(EXAMPLE).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.online().unwrap().l, 2);
        assert_eq!(cfg.online().unwrap().reference_n, 256);
        assert_eq!(cfg.offline().unwrap().n_lowest(), 7);
        assert_eq!(cfg.coupling.q_for(64, 2, 2), Some(32));
        assert_eq!(cfg.coupling.q_for(16, 2, 2), Some(13));
    }

    #[test]
    fn coupling_l2_for_m2_is_linear() {
        let c = CouplingConfig {
            rule: CouplingRule::L2,
            c: Some(2.0),
        };
        for n in [16, 32, 64] {
            assert_eq!(c.q_for(n, 2, 2), Some(2 * n));
        }
        let m3 = CouplingConfig {
            rule: CouplingRule::H1,
            c: None,
        };
        assert_eq!(m3.q_for(16, 2, 3), Some(10));
    }

    #[test]
    fn rejects_decreasing_schedule() {
        let bad = EXAMPLE.replace("[16, 32, 64]", "[32, 16]");
        assert!(matches!(StudyConfig::from_toml(&bad), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn rejects_analytic_checkerboard() {
        let bad = EXAMPLE.replace(
            "kind = \"locally_periodic\"\nepsilon = 1e-6",
            "kind = \"checkerboard\"\nepsilon = 1e-6\nk1 = 2.0\nk2 = 8.0\np1 = 0.5\nseed = 0",
        );
        assert!(StudyConfig::from_toml(&bad).is_err());
    }

    #[test]
    fn ensemble_defaults() {
        let text = r#"
[problem]
kind = "checkerboard"
epsilon = 1e-6
k1 = 2.0
k2 = 8.0
p1 = 0.5
seed = 0

[ensemble]
"#;
        let cfg = StudyConfig::from_toml(text).unwrap();
        let e = cfg.ensemble().unwrap();
        assert_eq!(e.realizations, 100);
        assert_eq!(e.l_schedule, vec![4, 8, 16]);
        assert_eq!(e.probes.len(), 3);
    }
}
