use serde::{Deserialize, Serialize};

use super::{CascadedGains, HoverLqr};
use crate::error::Result;
use crate::models::Axis;

/// One tuned controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerEntry {
    pub axis: Axis,
    pub point: usize,
    pub v_bar: f64,
    pub gains: CascadedGains,
    pub gamma: f64,
    pub iterations: usize,
}

/// Everything the synthesis stage hands on: the tuned cascaded controllers
/// and the hover LQR baseline. Floats are written in shortest round-trip
/// form, so reloading is bit-exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisExport {
    pub config_hash: String,
    pub seed: u64,
    #[serde(default, rename = "controller")]
    pub controllers: Vec<ControllerEntry>,
    #[serde(default)]
    pub lqr: Vec<HoverLqr>,
}

impl SynthesisExport {
    pub fn get(&self, axis: Axis, point: usize) -> Option<&ControllerEntry> {
        self.controllers.iter().find(|c| c.axis == axis && c.point == point)
    }

    pub fn lqr_for(&self, axis: Axis) -> Option<&HoverLqr> {
        self.lqr.iter().find(|l| l.axis == axis)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }
}
