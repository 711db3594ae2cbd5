//! Experiment configuration: a single JSON document, validated with field paths.

use std::collections::BTreeMap;

use mdim_core::counting::{Caps, CurveOptions};
use mdim_core::group_actions::{FolnerSchedule, GroupElement, GroupSpec, ScheduleKind};
use mdim_core::measures::MeasureSpec;
use mdim_core::metric_spaces::{entdim_k0, entdim_valid_window, generate_entdim_set, geometric_grid, Alphabet, CountMode, DEFAULT_POINT_CAP};
use mdim_core::pressure::Potential;
use mdim_core::rate_distortion::RdConstraint;
use mdim_core::shift_systems::{Configuration, Constraints, OrbitMetric, ShiftSystem, WeightFunction};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    Boxdim,
    Mdim,
    Smdim,
    Entdim,
    Katok,
    Brinkatok,
    Rd,
    Rdsuite,
    Pressure,
    Localmdim,
    Powerrule,
    Product,
    Folnercheck,
}

impl Quantity {
    pub fn name(&self) -> String {
        serde_json::to_value(self)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlphabetSpec {
    /// `{j/(k−1)}`; `k` defaults to a resolution of a quarter of the smallest scale.
    IntervalNet {
        #[serde(default)]
        k: Option<usize>,
    },
    CubeNet {
        m: usize,
        #[serde(default)]
        k: Option<usize>,
    },
    Harmonic { n_max: usize },
    EntdimSet {
        s: f64,
        alpha: f64,
        #[serde(default)]
        k0: Option<usize>,
        k_max: usize,
    },
    Explicit { alphabet: Alphabet },
}

fn one() -> usize {
    1
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub alphabet: AlphabetSpec,
    #[serde(default = "one")]
    pub rank: usize,
    #[serde(default = "half")]
    pub weight_base: f64,
    #[serde(default)]
    pub default_symbol: usize,
    /// Overrides the window chosen from the smallest scale.
    #[serde(default)]
    pub window_radius: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsGridSpec {
    pub eps_max: f64,
    pub ratio: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapsSpec {
    pub enumeration: Option<usize>,
    pub pairwise: Option<usize>,
    pub exact: Option<usize>,
    pub oracle: Option<usize>,
}

impl CapsSpec {
    pub fn resolve(&self) -> Caps {
        let d = Caps::default();
        Caps {
            enumeration: self.enumeration.unwrap_or(d.enumeration),
            pairwise: self.pairwise.unwrap_or(d.pairwise),
            exact: self.exact.unwrap_or(d.exact),
            oracle: self.oracle.unwrap_or(d.oracle),
        }
    }
}

/// Quantity-specific parameters; each quantity reads only its own fields.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Scaling exponent (smdim).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orbit: Option<OrbitMetric>,
    /// Centre of the Bowen balls (brinkatok).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Configuration>,
    /// Følner index of the window (rd, rdsuite).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint: Option<RdConstraint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<Potential>,
    /// Pinned coordinates `(g, symbol)` (localmdim).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraints: Option<Vec<(Vec<i64>, usize)>>,
    /// Subgroup index (powerrule).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
}

fn boxes() -> ScheduleKind {
    ScheduleKind::Boxes
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemSpec,
    #[serde(default = "boxes")]
    pub schedule: ScheduleKind,
    pub quantity: Quantity,
    pub eps_grid: EpsGridSpec,
    #[serde(default)]
    pub n_grid: Vec<usize>,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub caps: CapsSpec,
    #[serde(default)]
    pub mode: CountMode,
}

/// Parses a config, reporting the path of the offending field.
pub fn parse(text: &str) -> Result<ExperimentConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            CliError::Config(inner.to_string())
        } else {
            CliError::Config(format!("{path}: {inner}"))
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let g = &self.eps_grid;
        let bad = |path: &str, msg: String| Err(CliError::Config(format!("{path}: {msg}")));
        if !(g.eps_max > 0.0 && g.eps_max < (-1.0f64).exp()) {
            return bad("eps_grid.eps_max", format!("must lie in (0, 1/e), got {}", g.eps_max));
        }
        if !(g.ratio > 0.0 && g.ratio < 1.0) {
            return bad("eps_grid.ratio", format!("must lie in (0, 1), got {}", g.ratio));
        }
        if g.count == 0 {
            return bad("eps_grid.count", "must be at least 1".into());
        }
        if self.n_grid.contains(&0) {
            return bad("n_grid", "entries must be at least 1".into());
        }
        let needs_n = !matches!(self.quantity, Quantity::Boxdim | Quantity::Rd | Quantity::Rdsuite);
        if needs_n && self.n_grid.is_empty() {
            return bad("n_grid", format!("{} needs a non-empty n_grid", self.quantity.name()));
        }
        if !(self.system.weight_base > 0.0 && self.system.weight_base < 1.0) {
            return bad("system.weight_base", format!("must lie in (0, 1), got {}", self.system.weight_base));
        }
        let p = &self.params;
        match self.quantity {
            Quantity::Smdim if p.s.is_none() => bad("params.s", "smdim needs a scaling exponent".into()),
            Quantity::Pressure if p.potential.is_none() => bad("params.potential", "pressure needs a potential".into()),
            Quantity::Powerrule if p.m.is_none() => bad("params.m", "powerrule needs a subgroup index".into()),
            Quantity::Localmdim if p.constraints.is_none() => {
                bad("params.constraints", "localmdim needs pinned coordinates".into())
            }
            _ => Ok(()),
        }
    }

    pub fn eps(&self) -> Vec<f64> {
        geometric_grid(self.eps_grid.eps_max, self.eps_grid.ratio, self.eps_grid.count)
    }

    pub fn eps_min(&self) -> f64 {
        *self.eps().last().expect("count >= 1")
    }

    pub fn group(&self) -> Result<GroupSpec, CliError> {
        GroupSpec::new(self.system.rank).map_err(|e| CliError::at("system.rank", e))
    }

    pub fn schedule(&self) -> Result<FolnerSchedule, CliError> {
        let group = self.group()?;
        match self.schedule {
            ScheduleKind::Boxes => Ok(FolnerSchedule::boxes(group)),
            ScheduleKind::Subgroup { m } => FolnerSchedule::subgroup(group, m).map_err(|e| CliError::at("schedule", e)),
        }
    }

    pub fn alphabet(&self) -> Result<Alphabet, CliError> {
        let auto_k = || (4.0 / self.eps_min()).ceil() as usize + 1;
        let at = |e| CliError::at("system.alphabet", e);
        match &self.system.alphabet {
            AlphabetSpec::IntervalNet { k } => Alphabet::unit_interval_net(k.unwrap_or_else(auto_k)).map_err(at),
            AlphabetSpec::CubeNet { m, k } => Alphabet::unit_cube_net(*m, k.unwrap_or_else(auto_k)).map_err(at),
            AlphabetSpec::Harmonic { n_max } => Alphabet::harmonic(*n_max).map_err(at),
            AlphabetSpec::EntdimSet { s, alpha, k0, k_max } => {
                let k0 = match k0 {
                    Some(k) => *k,
                    None => entdim_k0(*s, *alpha).map_err(at)?,
                };
                generate_entdim_set(*s, *alpha, k0, *k_max, DEFAULT_POINT_CAP).map_err(at)
            }
            AlphabetSpec::Explicit { alphabet } => Ok(alphabet.clone()),
        }
    }

    /// The ε range an entropy-dimension alphabet represents faithfully after truncation.
    pub fn faithful_eps_window(&self) -> Option<(f64, f64)> {
        match &self.system.alphabet {
            AlphabetSpec::EntdimSet { s, alpha, k0, k_max } => {
                let k0 = k0.or_else(|| entdim_k0(*s, *alpha).ok())?;
                Some(entdim_valid_window(*s, k0, *k_max))
            }
            _ => None,
        }
    }

    pub fn system(&self) -> Result<ShiftSystem, CliError> {
        let alphabet = self.alphabet()?;
        let weights = WeightFunction::geometric(self.system.weight_base).map_err(|e| CliError::at("system.weight_base", e))?;
        let group = self.group()?;
        let sys = match self.system.window_radius {
            Some(r) => ShiftSystem::with_window_radius(alphabet, group, weights, self.system.default_symbol, r),
            None => ShiftSystem::new(alphabet, group, weights, self.system.default_symbol, self.eps_min()),
        };
        sys.map_err(|e| CliError::at("system", e))
    }

    pub fn curve_options(&self) -> CurveOptions {
        CurveOptions {
            mode: self.mode,
            orbit: self.params.orbit.unwrap_or_default(),
            caps: self.caps.resolve(),
            ..CurveOptions::default()
        }
    }

    pub fn measure(&self) -> MeasureSpec {
        self.params.measure.clone().unwrap_or_else(MeasureSpec::uniform)
    }

    pub fn pins(&self) -> Result<Constraints, CliError> {
        let mut out = BTreeMap::new();
        for (coords, v) in self.params.constraints.iter().flatten() {
            if coords.len() != self.system.rank {
                return Err(CliError::Config(format!(
                    "params.constraints: element {coords:?} does not have rank {}",
                    self.system.rank
                )));
            }
            out.insert(GroupElement::new(coords.clone()), *v);
        }
        Ok(out)
    }

    /// Canonical JSON: parsed, defaults filled, keys sorted.
    pub fn canonical_json(&self) -> String {
        let v = serde_json::to_value(self).expect("config serializes");
        serde_json::to_string(&v).expect("value serializes")
    }
}
