use serde::{Deserialize, Serialize};

use crate::error::{FtcError, Result};
use crate::linsys::RationalTF;
use crate::models::{AircraftParameters, Axis};

pub const DEFAULT_A: f64 = 1e-4;
pub const DEFAULT_OMEGA_A: f64 = 5.0;
/// Angle reference amplitude, 30 degrees.
pub const DEFAULT_R_MAX: f64 = std::f64::consts::PI / 6.0;

/// `(M, omega_b)` for roll, pitch, yaw at design points 1..6.
pub const PUBLISHED_TABLE: [[(f64, f64); 3]; 6] = [
    [(2.0, 2.4), (1.1, 0.012), (1.8, 0.1)],
    [(1.1, 0.5), (2.0, 0.2), (1.3, 0.002)],
    [(1.6, 1.1), (15.3, 0.059), (1.8, 0.003)],
    [(2.0, 1.2), (1.3, 0.16), (1.1, 0.007)],
    [(1.9, 1.1), (1.3, 0.89), (1.5, 0.006)],
    [(1.8, 0.6), (1.4, 0.82), (2.5, 2.9)],
];

pub const DEFAULT_WEIGHTS: &str = include_str!("../../fixtures/weights.toml");

const RETUNED_M_FLOOR: f64 = 3.0;
const RETUNED_ROLL_M: f64 = 10.0;
const RETUNED_YAW: (f64, f64) = (6.0, 0.1);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityWeightParams {
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "A")]
    pub a: f64,
    pub omega_b: f64,
}

impl SensitivityWeightParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.m >= 1.0 && self.a > 0.0 && self.a < 1.0 && self.omega_b > 0.0) {
            return Err(FtcError::InvalidParameter(format!("bad sensitivity weight {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlWeightParams {
    pub r_max: f64,
    pub u_max: f64,
    pub omega_a: f64,
}

impl ControlWeightParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_max > 0.0 && self.u_max > 0.0 && self.omega_a > 0.0) {
            return Err(FtcError::InvalidParameter(format!("bad control weight {self:?}")));
        }
        Ok(())
    }
}

/// `W_s(s) = (s/M + omega_b) / (s + A omega_b)`.
pub fn make_ws(p: &SensitivityWeightParams) -> RationalTF {
    RationalTF::new(vec![1.0 / p.m, p.omega_b], vec![1.0, p.a * p.omega_b]).expect("W_s")
}

/// `W_r(s) = ((r_max/u_max) s + omega_a 1e-3) / (s + omega_a)`.
pub fn make_wr(p: &ControlWeightParams) -> RationalTF {
    RationalTF::new(vec![p.r_max / p.u_max, p.omega_a * 1e-3], vec![1.0, p.omega_a]).expect("W_r")
}

/// Weight parameters of one (axis, design point) problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisWeights {
    pub axis: Axis,
    pub point: usize,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "A")]
    pub a: f64,
    pub omega_b: f64,
    pub r_max: f64,
    pub u_max: f64,
    pub omega_a: f64,
}

impl AxisWeights {
    pub fn sensitivity(&self) -> SensitivityWeightParams {
        SensitivityWeightParams { m: self.m, a: self.a, omega_b: self.omega_b }
    }

    pub fn control(&self) -> ControlWeightParams {
        ControlWeightParams { r_max: self.r_max, u_max: self.u_max, omega_a: self.omega_a }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightTable {
    #[serde(rename = "entry")]
    pub entries: Vec<AxisWeights>,
}

impl WeightTable {
    /// Sensitivity weights as published, with `A`, `r_max` and `u_max`
    /// reconstructed from the airframe.
    pub fn published(p: &AircraftParameters) -> Self {
        let mut entries = Vec::with_capacity(18);
        for (i, row) in PUBLISHED_TABLE.iter().enumerate() {
            for axis in Axis::ALL {
                let (m, omega_b) = row[axis.index()];
                entries.push(AxisWeights {
                    axis,
                    point: i + 1,
                    m,
                    a: DEFAULT_A,
                    omega_b,
                    r_max: DEFAULT_R_MAX,
                    u_max: p.moment_authority(axis),
                    omega_a: DEFAULT_OMEGA_A,
                });
            }
        }
        Self { entries }
    }

    /// Shipped design weights: the published table with `M >= 3`, roll
    /// with `M = 10` and yaw with `M = 6`, `omega_b = 0.1`, at every point.
    pub fn retuned(p: &AircraftParameters) -> Self {
        let mut t = Self::published(p);
        for e in t.entries.iter_mut() {
            e.m = e.m.max(RETUNED_M_FLOOR);
            match e.axis {
                Axis::Roll => e.m = RETUNED_ROLL_M,
                Axis::Yaw => (e.m, e.omega_b) = RETUNED_YAW,
                Axis::Pitch => {}
            }
        }
        t
    }

    /// The weight table shipped under `fixtures/weights.toml`.
    pub fn fixture() -> Self {
        Self::from_toml(DEFAULT_WEIGHTS).expect("shipped weight fixture parses")
    }

    pub fn get(&self, axis: Axis, point: usize) -> Result<&AxisWeights> {
        self.entries
            .iter()
            .find(|e| e.axis == axis && e.point == point)
            .ok_or_else(|| FtcError::InvalidParameter(format!("no weights for {axis} at point {point}")))
    }

    pub fn validate(&self) -> Result<()> {
        for e in &self.entries {
            e.sensitivity().validate()?;
            e.control().validate()?;
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let t: Self = toml::from_str(text)?;
        t.validate()?;
        Ok(t)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }
}
