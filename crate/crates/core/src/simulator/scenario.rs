//! Fault scenarios and the scenario file format.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::control::Variant;
use super::dynamics::N_ACT;
use crate::allocator::{actuator_index, ACTUATOR_NAMES};
use crate::error::{FtcError, Result};

/// Loss-of-effectiveness faults that switch on together at `onset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultScenario {
    pub name: String,
    pub onset: f64,
    /// Loss fraction in `[0, 1]` by actuator name.
    pub losses: BTreeMap<String, f64>,
}

/// The named scenarios the workbench ships.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Case {
    NoFault,
    One,
    Two,
}

impl Case {
    pub const FAULTED: [Case; 2] = [Case::One, Case::Two];

    pub fn name(self) -> &'static str {
        match self {
            Case::NoFault => "none",
            Case::One => "case1",
            Case::Two => "case2",
        }
    }

    pub fn scenario(self) -> FaultScenario {
        match self {
            Case::NoFault => FaultScenario::none(),
            Case::One => FaultScenario::case1(),
            Case::Two => FaultScenario::case2(),
        }
    }
}

impl std::fmt::Display for Case {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Case {
    type Err = FtcError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "nofault" | "0" => Ok(Case::NoFault),
            "1" | "case1" => Ok(Case::One),
            "2" | "case2" => Ok(Case::Two),
            _ => Err(FtcError::Parse(format!("unknown case '{s}', expected 1, 2 or none"))),
        }
    }
}

pub const FAULT_ONSET: f64 = 22.0;

impl FaultScenario {
    pub fn none() -> Self {
        Self { name: "none".into(), onset: FAULT_ONSET, losses: BTreeMap::new() }
    }

    /// Rotor 2b at half effectiveness, all surfaces at 80 %.
    pub fn case1() -> Self {
        let losses = [("rotor2b", 0.5), ("ail", 0.2), ("elev", 0.2), ("rud", 0.2)];
        Self { name: "case1".into(), onset: FAULT_ONSET, losses: losses.iter().map(|(k, v)| (k.to_string(), *v)).collect() }
    }

    /// Case 1 plus rotors 1a and 4a at half effectiveness.
    pub fn case2() -> Self {
        let mut s = Self::case1();
        s.name = "case2".into();
        s.losses.insert("rotor1a".into(), 0.5);
        s.losses.insert("rotor4a".into(), 0.5);
        s
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.onset.is_finite() && self.onset >= 0.0) {
            return Err(FtcError::InvalidParameter(format!("fault onset {} must be finite and >= 0", self.onset)));
        }
        for (k, v) in &self.losses {
            if actuator_index(k).is_none() {
                return Err(FtcError::InvalidParameter(format!(
                    "unknown actuator '{k}', expected one of {}",
                    ACTUATOR_NAMES.join(", ")
                )));
            }
            if !(0.0..=1.0).contains(v) {
                return Err(FtcError::InvalidParameter(format!("loss of {k} = {v} outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// Loss vector in actuator order.
    pub fn loss_vector(&self) -> Result<[f64; N_ACT]> {
        self.validate()?;
        let mut l = [0.0; N_ACT];
        for (k, v) in &self.losses {
            l[actuator_index(k).expect("validated")] = *v;
        }
        Ok(l)
    }

    /// Loss vector in force at time `t`.
    pub fn losses_at(&self, t: f64) -> Result<[f64; N_ACT]> {
        if t < self.onset {
            return Ok([0.0; N_ACT]);
        }
        self.loss_vector()
    }

    /// Effective actuation: unchanged before onset, scaled by `1 - loss`
    /// from onset on.
    pub fn apply_fault(&self, t: f64, commands: &[f64; N_ACT]) -> Result<[f64; N_ACT]> {
        Ok(super::dynamics::effective(commands, &self.losses_at(t)?))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultSection {
    pub time: Option<f64>,
    #[serde(default)]
    pub losses: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    pub variant: Option<Variant>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub dt: Option<f64>,
    pub duration: Option<f64>,
}

/// Scenario file: `fault.time`, `fault.losses.<actuator>`,
/// `controller.variant`, `sim.dt`, `sim.duration`. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: Option<String>,
    #[serde(default)]
    pub fault: FaultSection,
    #[serde(default)]
    pub controller: ControllerSection,
    #[serde(default)]
    pub sim: SimSection,
}

impl ScenarioFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut f = Self::from_toml(&std::fs::read_to_string(path)?)?;
        if f.name.is_none() {
            f.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        }
        Ok(f)
    }

    pub fn scenario(&self) -> Result<FaultScenario> {
        let s = FaultScenario {
            name: self.name.clone().unwrap_or_else(|| "custom".into()),
            onset: self.fault.time.unwrap_or(FAULT_ONSET),
            losses: self.fault.losses.clone(),
        };
        s.validate()?;
        Ok(s)
    }
}
