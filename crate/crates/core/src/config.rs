//! TOML run configuration with sections `[system]`, `[geometry]`, `[sweep]`
//! and `[mc]`. Every field is optional; missing fields take the reference
//! scenario defaults. Powers are given in dBm and thresholds in dB.
//!
//! ```toml
//! [system]
//! antennas = 8
//! elements = 50
//! users = 10
//! pathloss_exponent = 2.0
//! tx_power_dbm = 56.0
//! noise_dbm = -96.0          # or one value per user
//! # power_alloc = [...]      # defaults to 1/sqrt(K) each
//! reflection = 1.0
//! moment_forms = "corrected" # or "printed"; x2_form/z2_form/xz_form override
//!
//! [geometry]
//! source = [0.0, 0.0]
//! irs = [0.0, 5.0]
//! layout_side = 50.0
//! layout_distance = 150.0    # square centered at (distance + side/2, 0)
//! layout_seed = 1
//! # users = [[160.0, 3.0], ...]  # explicit positions replace the layout
//!
//! [sweep]
//! variable = "irs_x"         # irs_x, n_elements or threshold_db
//! grid = [0.0, 25.0, 50.0]
//! thresholds_db = [0.0]
//! # users = [0, 3]
//!
//! [mc]
//! # trials = 100000
//! seed = 42
//! z_threshold = 4.0
//! ```

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::experiments::{reference, Scenario, SweepSpec, SweepVariable};
use crate::model::{dbm_to_watts, uniform_power_allocation, Geometry, Point, SquareLayout, SystemConfig};
use crate::moments::{Forms, Variant};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub antennas: Option<usize>,
    pub elements: Option<usize>,
    pub users: Option<usize>,
    pub pathloss_exponent: Option<f64>,
    pub tx_power_dbm: Option<f64>,
    pub noise_dbm: Option<OneOrMany>,
    pub power_alloc: Option<Vec<f64>>,
    pub reflection: Option<f64>,
    pub moment_forms: Option<String>,
    pub x2_form: Option<String>,
    pub z2_form: Option<String>,
    pub xz_form: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub source: Option<[f64; 2]>,
    pub irs: Option<[f64; 2]>,
    pub users: Option<Vec<[f64; 2]>>,
    pub layout_side: Option<f64>,
    pub layout_distance: Option<f64>,
    pub layout_center: Option<[f64; 2]>,
    pub layout_seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub variable: Option<String>,
    pub grid: Option<Vec<f64>>,
    pub thresholds_db: Option<Vec<f64>>,
    pub users: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub z_threshold: Option<f64>,
}

/// The parsed file. Command-line flags are applied by overwriting fields
/// before [`RunConfig::scenario`] and friends resolve it.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub system: SystemSection,
    #[serde(default)]
    pub geometry: GeometrySection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub mc: McSection,
}

fn parse_variant(field: &str, v: &Option<String>) -> Result<Option<Variant>> {
    v.as_deref()
        .map(|s| s.parse().map_err(|_| Error::Config(format!("{field}: expected \"printed\" or \"corrected\", got {s:?}"))))
        .transpose()
}

fn point(p: [f64; 2]) -> Point {
    Point::new(p[0], p[1])
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn layout_seed(&self) -> u64 {
        self.geometry.layout_seed.unwrap_or(reference::LAYOUT_SEED)
    }

    pub fn fading_seed(&self) -> u64 {
        self.mc.seed.unwrap_or(reference::FADING_SEED)
    }

    pub fn z_threshold(&self) -> f64 {
        self.mc.z_threshold.unwrap_or(4.0)
    }

    pub fn forms(&self) -> Result<Forms> {
        let s = &self.system;
        let base = parse_variant("moment_forms", &s.moment_forms)?.unwrap_or_default();
        Ok(Forms {
            x2: parse_variant("x2_form", &s.x2_form)?.unwrap_or(base),
            z2: parse_variant("z2_form", &s.z2_form)?.unwrap_or(base),
            xz: parse_variant("xz_form", &s.xz_form)?.unwrap_or(base),
        })
    }

    pub fn system_config(&self) -> Result<SystemConfig> {
        let s = &self.system;
        let users = s.users.unwrap_or(reference::USERS);
        let tx = dbm_to_watts(s.tx_power_dbm.unwrap_or(reference::TX_POWER_DBM));
        let noise = match &s.noise_dbm {
            None => vec![dbm_to_watts(reference::NOISE_DBM); users],
            Some(OneOrMany::One(v)) => vec![dbm_to_watts(*v); users],
            Some(OneOrMany::Many(v)) => v.iter().map(|d| dbm_to_watts(*d)).collect(),
        };
        let power_alloc = match &s.power_alloc {
            Some(lambda) => lambda.clone(),
            None => uniform_power_allocation(users.max(1))?,
        };
        let config = SystemConfig {
            antennas: s.antennas.unwrap_or(reference::ANTENNAS),
            elements: s.elements.unwrap_or(reference::ELEMENTS),
            users,
            pathloss_exponent: s.pathloss_exponent.unwrap_or(reference::PATHLOSS_EXPONENT),
            tx_power: tx,
            noise,
            power_alloc,
            reflection: s.reflection.unwrap_or(1.0),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn geometry(&self, users: usize) -> Result<Geometry> {
        let g = &self.geometry;
        let source = point(g.source.unwrap_or(reference::SOURCE));
        let irs = point(g.irs.unwrap_or(reference::IRS));
        let positions = match &g.users {
            Some(list) => {
                if list.len() != users {
                    return Err(Error::Config(format!("{} user positions given for K={users}", list.len())));
                }
                list.iter().map(|p| point(*p)).collect()
            }
            None => {
                let side = g.layout_side.unwrap_or(reference::LAYOUT_SIDE);
                if !(side > 0.0 && side.is_finite()) {
                    return Err(Error::Config(format!("layout_side must be positive, got {side}")));
                }
                let center = match g.layout_center {
                    Some(c) => point(c),
                    None => Point::new(g.layout_distance.unwrap_or(reference::LAYOUT_DISTANCE) + side / 2.0, 0.0),
                };
                SquareLayout { side, center }.sample(users, self.layout_seed())
            }
        };
        Ok(Geometry::new(source, irs, positions))
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let config = self.system_config()?;
        let geometry = self.geometry(config.users)?;
        let mut s = Scenario::new(config, geometry)?;
        s.forms = self.forms()?;
        Ok(s)
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        let w = &self.sweep;
        let variable: SweepVariable = w
            .variable
            .as_deref()
            .ok_or_else(|| Error::Config("[sweep] variable is required".into()))?
            .parse()?;
        let grid = w.grid.clone().ok_or_else(|| Error::Config("[sweep] grid is required".into()))?;
        let spec = SweepSpec {
            variable,
            grid,
            template: self.scenario()?,
            thresholds_db: w.thresholds_db.clone().unwrap_or_else(|| vec![0.0]),
            users: w.users.clone(),
            mc_trials: self.mc.trials,
            seed: self.fading_seed(),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `key = value` lines for the parts of the run not captured by the
    /// scenario itself.
    pub fn describe_run(&self) -> Vec<String> {
        vec![
            format!("layout_seed = {}", self.layout_seed()),
            format!("fading_seed = {}", self.fading_seed()),
            format!(
                "mc_trials = {}",
                self.mc.trials.map(|n| n.to_string()).unwrap_or_else(|| "none".into())
            ),
        ]
    }
}
