//! Airspeed-dependent, fault-scaled attitude plants and the airframe data
//! they are built from.

use serde::{Deserialize, Serialize};

use crate::error::{FtcError, Result};
use crate::linsys::RationalTF;

/// Shipped airframe fixture, used whenever no other file is configured.
pub const DEFAULT_FIXTURE: &str = include_str!("../fixtures/airframe.toml");

/// Upper end of the loss-of-effectiveness range used for design.
pub const GAMMA_MAX: f64 = 0.6;

pub const GRAVITY: f64 = 9.81;

/// Airspeed at which transition ends and the wing carries the aircraft, m/s.
pub const STALL_SPEED: f64 = 13.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Roll,
    Pitch,
    Yaw,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::Roll, Axis::Pitch, Axis::Yaw];

    pub fn name(self) -> &'static str {
        match self {
            Axis::Roll => "roll",
            Axis::Pitch => "pitch",
            Axis::Yaw => "yaw",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Axis {
    type Err = FtcError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "roll" => Ok(Axis::Roll),
            "pitch" => Ok(Axis::Pitch),
            "yaw" => Ok(Axis::Yaw),
            _ => Err(FtcError::Parse(format!("unknown axis '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AircraftParameters {
    pub mass: f64,
    #[serde(rename = "J_x")]
    pub jx: f64,
    #[serde(rename = "J_y")]
    pub jy: f64,
    #[serde(rename = "J_z")]
    pub jz: f64,
    #[serde(rename = "S")]
    pub wing_area: f64,
    #[serde(rename = "b")]
    pub span: f64,
    pub c_bar: f64,
    #[serde(default = "default_rho")]
    pub rho: f64,
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub l4: f64,
    pub l_r: f64,
    pub l_f: f64,
    /// Vertical rotor thrust at full throttle, N.
    pub rotor_thrust: f64,
    /// Vertical rotor reaction torque at full throttle, N m.
    pub rotor_torque: f64,
    /// Horizontal (pusher) rotor thrust at full throttle, N.
    pub hrotor_thrust: f64,
    /// Lateral offset of each horizontal rotor from the centreline, m.
    pub hrotor_offset: f64,
    /// Symmetric deflection limit of every control surface, rad.
    pub surface_limit: f64,
    /// First-order actuator bandwidth, rad/s.
    pub actuator_bandwidth: f64,
}

fn default_rho() -> f64 {
    1.225
}

impl AircraftParameters {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("mass", self.mass),
            ("J_x", self.jx),
            ("J_y", self.jy),
            ("J_z", self.jz),
            ("S", self.wing_area),
            ("b", self.span),
            ("c_bar", self.c_bar),
            ("rho", self.rho),
            ("l1", self.l1),
            ("l2", self.l2),
            ("l3", self.l3),
            ("l4", self.l4),
            ("l_r", self.l_r),
            ("l_f", self.l_f),
            ("rotor_thrust", self.rotor_thrust),
            ("rotor_torque", self.rotor_torque),
            ("hrotor_thrust", self.hrotor_thrust),
            ("hrotor_offset", self.hrotor_offset),
            ("surface_limit", self.surface_limit),
            ("actuator_bandwidth", self.actuator_bandwidth),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(FtcError::InvalidParameter(format!("aircraft.{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn inertia(&self, axis: Axis) -> f64 {
        match axis {
            Axis::Roll => self.jx,
            Axis::Pitch => self.jy,
            Axis::Yaw => self.jz,
        }
    }

    pub fn dynamic_pressure(&self, v: f64) -> f64 {
        0.5 * self.rho * v * v
    }

    pub fn weight(&self) -> f64 {
        self.mass * GRAVITY
    }

    /// Vertical rotors in the order 1a, 1b, 2a, 2b, 3a, 3b, 4a, 4b.
    pub fn rotors(&self) -> [Rotor; 8] {
        let r = |name, x, y, spin| Rotor { name, x, y, spin };
        [
            r("1a", self.l_f, self.l1, 1.0),
            r("1b", self.l3, self.l2, -1.0),
            r("2a", -self.l_r, -self.l1, 1.0),
            r("2b", -self.l4, -self.l2, -1.0),
            r("3a", self.l_f, -self.l1, -1.0),
            r("3b", self.l3, -self.l2, 1.0),
            r("4a", -self.l_r, self.l1, -1.0),
            r("4b", -self.l4, self.l2, 1.0),
        ]
    }

    /// Body moment available from a half-throttle differential on the
    /// vertical rotors, N m.
    pub fn moment_authority(&self, axis: Axis) -> f64 {
        let rotors = self.rotors();
        let lever: f64 = match axis {
            Axis::Roll => rotors.iter().map(|r| r.y.abs() * self.rotor_thrust).sum(),
            Axis::Pitch => rotors.iter().map(|r| r.x.abs() * self.rotor_thrust).sum(),
            Axis::Yaw => rotors.iter().map(|_| self.rotor_torque).sum(),
        };
        0.5 * lever
    }
}

pub const ROTOR_NAMES: [&str; 8] = ["1a", "1b", "2a", "2b", "3a", "3b", "4a", "4b"];

/// Vertical rotor position in body axes (x forward, y right) and the sign of
/// its reaction yaw moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotor {
    pub name: &'static str,
    pub x: f64,
    pub y: f64,
    pub spin: f64,
}

/// Tabulated aerodynamic derivatives indexed by airspeed, plus the lift and
/// drag tables the simulator needs. Linear interpolation between breakpoints,
/// clamped at the ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AeroCoefficientTable {
    pub breakpoints: Vec<f64>,
    #[serde(rename = "C_lp")]
    pub c_lp: Vec<f64>,
    #[serde(rename = "C_mq")]
    pub c_mq: Vec<f64>,
    #[serde(rename = "C_Malpha")]
    pub c_malpha: Vec<f64>,
    #[serde(rename = "C_nr")]
    pub c_nr: Vec<f64>,
    #[serde(rename = "C_Nbeta")]
    pub c_nbeta: Vec<f64>,
    #[serde(rename = "C_m0")]
    pub c_m0: f64,
    #[serde(rename = "C_Ybeta")]
    pub c_ybeta: f64,
    #[serde(rename = "C_l_delta_a")]
    pub c_l_delta_a: f64,
    #[serde(rename = "C_m_delta_e")]
    pub c_m_delta_e: f64,
    #[serde(rename = "C_n_delta_r")]
    pub c_n_delta_r: f64,
    pub alpha_breakpoints: Vec<f64>,
    #[serde(rename = "C_L")]
    pub c_lift: Vec<Vec<f64>>,
    #[serde(rename = "C_D")]
    pub c_drag: Vec<Vec<f64>>,
}

/// Index and weight for linear interpolation in a sorted breakpoint list.
fn bracket(bps: &[f64], x: f64) -> (usize, f64) {
    if x <= bps[0] {
        return (0, 0.0);
    }
    let last = bps.len() - 1;
    if x >= bps[last] {
        return (last.saturating_sub(1), if last == 0 { 0.0 } else { 1.0 });
    }
    let i = bps.partition_point(|b| *b <= x) - 1;
    (i, (x - bps[i]) / (bps[i + 1] - bps[i]))
}

fn lerp_table(bps: &[f64], vals: &[f64], x: f64) -> f64 {
    if bps.len() == 1 {
        return vals[0];
    }
    let (i, t) = bracket(bps, x);
    vals[i] + t * (vals[i + 1] - vals[i])
}

impl AeroCoefficientTable {
    pub fn validate(&self) -> Result<()> {
        let n = self.breakpoints.len();
        let bad = |m: &str| Err(FtcError::InvalidParameter(m.to_string()));
        if n < 2 || self.breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return bad("aero.breakpoints must be strictly increasing with at least two entries");
        }
        if self.breakpoints[0] > 0.0 || self.breakpoints[n - 1] < 13.0 {
            return bad("aero.breakpoints must span [0, 13] m/s");
        }
        for (name, col) in [
            ("C_lp", &self.c_lp),
            ("C_mq", &self.c_mq),
            ("C_Malpha", &self.c_malpha),
            ("C_nr", &self.c_nr),
            ("C_Nbeta", &self.c_nbeta),
        ] {
            if col.len() != n {
                return bad(&format!("aero.{name} length {} != breakpoints {n}", col.len()));
            }
        }
        if self.c_lp.iter().chain(&self.c_mq).chain(&self.c_nr).any(|c| *c > 0.0) {
            return bad("damping derivatives must be non-positive");
        }
        if self.c_malpha.iter().any(|c| *c > 0.0) {
            return bad("C_Malpha must be non-positive");
        }
        let na = self.alpha_breakpoints.len();
        if na < 2 || self.alpha_breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return bad("aero.alpha_breakpoints must be strictly increasing");
        }
        for (name, t) in [("C_L", &self.c_lift), ("C_D", &self.c_drag)] {
            if t.len() != n || t.iter().any(|row| row.len() != na) {
                return bad(&format!("aero.{name} must be {n} x {na}"));
            }
        }
        Ok(())
    }

    pub fn span(&self) -> (f64, f64) {
        (self.breakpoints[0], *self.breakpoints.last().unwrap())
    }

    /// Tabulated incidence range, rad.
    pub fn alpha_range(&self) -> (f64, f64) {
        (self.alpha_breakpoints[0], *self.alpha_breakpoints.last().unwrap())
    }

    pub fn check_envelope(&self, v: f64) -> Result<()> {
        let (min, max) = self.span();
        if !(v >= min && v <= max) {
            return Err(FtcError::OutOfEnvelope { airspeed: v, min, max });
        }
        Ok(())
    }

    pub fn c_lp(&self, v: f64) -> f64 {
        lerp_table(&self.breakpoints, &self.c_lp, v)
    }

    pub fn c_mq(&self, v: f64) -> f64 {
        lerp_table(&self.breakpoints, &self.c_mq, v)
    }

    pub fn c_malpha(&self, v: f64) -> f64 {
        lerp_table(&self.breakpoints, &self.c_malpha, v)
    }

    pub fn c_nr(&self, v: f64) -> f64 {
        lerp_table(&self.breakpoints, &self.c_nr, v)
    }

    pub fn c_nbeta(&self, v: f64) -> f64 {
        lerp_table(&self.breakpoints, &self.c_nbeta, v)
    }

    fn bilinear(&self, table: &[Vec<f64>], alpha: f64, v: f64) -> f64 {
        let (i, tv) = bracket(&self.breakpoints, v);
        let (j, ta) = bracket(&self.alpha_breakpoints, alpha);
        let row = |k: usize| table[k][j] + ta * (table[k][j + 1] - table[k][j]);
        row(i) + tv * (row(i + 1) - row(i))
    }

    pub fn c_lift(&self, alpha: f64, v: f64) -> f64 {
        self.bilinear(&self.c_lift, alpha, v)
    }

    pub fn c_drag(&self, alpha: f64, v: f64) -> f64 {
        self.bilinear(&self.c_drag, alpha, v)
    }
}

#[derive(Debug, Clone, Deserialize)]
struct FixtureFile {
    aircraft: AircraftParameters,
    aero: AeroCoefficientTable,
}

/// Parsed and validated airframe fixture.
#[derive(Debug, Clone, PartialEq)]
pub struct Airframe {
    pub params: AircraftParameters,
    pub aero: AeroCoefficientTable,
}

impl Airframe {
    pub fn from_toml(text: &str) -> Result<Self> {
        let f: FixtureFile = toml::from_str(text)?;
        f.aircraft.validate()?;
        f.aero.validate()?;
        Ok(Self { params: f.aircraft, aero: f.aero })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn fixture() -> Self {
        Self::from_toml(DEFAULT_FIXTURE).expect("shipped fixture is valid")
    }
}

/// Loss-of-effectiveness fractions for thrust and the three body moments.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FaultState {
    pub gamma_t: f64,
    pub gamma_l: f64,
    pub gamma_m: f64,
    pub gamma_n: f64,
}

impl FaultState {
    pub fn new(gamma_t: f64, gamma_l: f64, gamma_m: f64, gamma_n: f64) -> Result<Self> {
        for g in [gamma_t, gamma_l, gamma_m, gamma_n] {
            check_gamma(g)?;
        }
        Ok(Self { gamma_t, gamma_l, gamma_m, gamma_n })
    }

    pub fn for_axis(&self, axis: Axis) -> f64 {
        match axis {
            Axis::Roll => self.gamma_l,
            Axis::Pitch => self.gamma_m,
            Axis::Yaw => self.gamma_n,
        }
    }
}

fn check_gamma(g: f64) -> Result<()> {
    if !(0.0..=GAMMA_MAX).contains(&g) {
        return Err(FtcError::InvalidParameter(format!("loss of effectiveness {g} outside [0, {GAMMA_MAX}]")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignPoint {
    pub index: usize,
    pub v_bar: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub gamma_range: (f64, f64),
}

/// The six nominal design points covering 0 to 13 m/s.
pub fn design_points() -> Vec<DesignPoint> {
    const ROWS: [(f64, f64, f64); 6] =
        [(0.0, 0.0, 0.8), (1.0, 0.8, 2.5), (4.0, 2.5, 5.5), (7.0, 5.5, 8.5), (10.0, 8.5, 11.5), (13.0, 11.5, 13.0)];
    ROWS.iter()
        .enumerate()
        .map(|(i, &(v_bar, v_min, v_max))| DesignPoint { index: i + 1, v_bar, v_min, v_max, gamma_range: (0.0, GAMMA_MAX) })
        .collect()
}

pub fn design_point(index: usize) -> Result<DesignPoint> {
    design_points()
        .into_iter()
        .find(|p| p.index == index)
        .ok_or_else(|| FtcError::InvalidParameter(format!("no design point {index}")))
}

/// Roll damping derivative `q S b C_lp b / (2V)`, written in the form that is
/// linear in V so it vanishes exactly at hover.
pub fn roll_damping(p: &AircraftParameters, a: &AeroCoefficientTable, v: f64) -> f64 {
    0.25 * p.rho * v * p.wing_area * p.span * p.span * a.c_lp(v)
}

pub fn pitch_damping(p: &AircraftParameters, a: &AeroCoefficientTable, v: f64) -> f64 {
    0.25 * p.rho * v * p.wing_area * p.c_bar * p.c_bar * a.c_mq(v)
}

pub fn pitch_stiffness(p: &AircraftParameters, a: &AeroCoefficientTable, v: f64) -> f64 {
    p.dynamic_pressure(v) * p.wing_area * p.c_bar * a.c_malpha(v)
}

pub fn yaw_damping(p: &AircraftParameters, a: &AeroCoefficientTable, v: f64) -> f64 {
    0.25 * p.rho * v * p.wing_area * p.span * p.span * a.c_nr(v)
}

pub fn yaw_stiffness(p: &AircraftParameters, a: &AeroCoefficientTable, v: f64) -> f64 {
    -p.dynamic_pressure(v) * p.wing_area * p.span * a.c_nbeta(v)
}

/// Roll rate per unit rolling moment: `(1 - gamma_L) / (J_x s - M_x^p(V))`.
pub fn roll_tf(p: &AircraftParameters, a: &AeroCoefficientTable, v: f64, gamma_l: f64) -> Result<RationalTF> {
    a.check_envelope(v)?;
    check_gamma(gamma_l)?;
    RationalTF::new(vec![1.0 - gamma_l], vec![p.jx, -roll_damping(p, a, v)])
}

/// Pitch rate per unit pitching moment:
/// `(1 - gamma_M) s / (J_y s^2 - M_y^q(V) s - M_y^alpha(V))`.
pub fn pitch_tf(p: &AircraftParameters, a: &AeroCoefficientTable, v: f64, gamma_m: f64) -> Result<RationalTF> {
    a.check_envelope(v)?;
    check_gamma(gamma_m)?;
    let den = vec![p.jy, -pitch_damping(p, a, v), -pitch_stiffness(p, a, v)];
    Ok(RationalTF::new(vec![1.0 - gamma_m, 0.0], den)?.reduced())
}

/// Yaw rate per unit yawing moment:
/// `(1 - gamma_N) s / (J_z s^2 - M_z^r(V) s - M_z^beta(V))`.
pub fn yaw_tf(p: &AircraftParameters, a: &AeroCoefficientTable, v: f64, gamma_n: f64) -> Result<RationalTF> {
    a.check_envelope(v)?;
    check_gamma(gamma_n)?;
    let den = vec![p.jz, -yaw_damping(p, a, v), -yaw_stiffness(p, a, v)];
    Ok(RationalTF::new(vec![1.0 - gamma_n, 0.0], den)?.reduced())
}

pub fn plant(axis: Axis, p: &AircraftParameters, a: &AeroCoefficientTable, v: f64, gamma: f64) -> Result<RationalTF> {
    match axis {
        Axis::Roll => roll_tf(p, a, v, gamma),
        Axis::Pitch => pitch_tf(p, a, v, gamma),
        Axis::Yaw => yaw_tf(p, a, v, gamma),
    }
}
