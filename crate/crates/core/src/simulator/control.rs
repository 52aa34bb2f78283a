//! Attitude and altitude controllers and the open-loop transition schedule.

use serde::{Deserialize, Serialize};

use crate::models::{AeroCoefficientTable, AircraftParameters, Axis, GRAVITY, STALL_SPEED};
use crate::scheduler::GainSchedule;
use crate::synthesis::{CascadedGains, HoverLqr};

/// Which attitude controller flies the aircraft.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Lqr,
    Shif,
    GsShif,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Lqr, Variant::Shif, Variant::GsShif];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Lqr => "lqr",
            Variant::Shif => "shif",
            Variant::GsShif => "gs_shif",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = crate::FtcError;
    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lqr" => Ok(Variant::Lqr),
            "shif" => Ok(Variant::Shif),
            "gs_shif" | "gs-shif" | "gsshif" => Ok(Variant::GsShif),
            _ => Err(crate::FtcError::Parse(format!("unknown controller variant '{s}'"))),
        }
    }
}

/// Design point whose gains the fixed-gain variant flies.
pub const SHIF_POINT: usize = 4;

/// Pitch attitude that zeroes the aerodynamic pitching moment with neutral
/// elevator, `-C_m0 / C_Malpha(V)`.
pub fn trim_pitch(a: &AeroCoefficientTable, v: f64) -> f64 {
    -a.c_m0 / a.c_malpha(v)
}

/// Pitch reference: level in hover, blended into [`trim_pitch`] with
/// dynamic pressure and reached in full at stall speed.
pub fn pitch_reference(a: &AeroCoefficientTable, v: f64) -> f64 {
    let share = (v / STALL_SPEED).powi(2).min(1.0);
    share * trim_pitch(a, v)
}

/// Cascaded P-PID on one axis: outer P on angle error gives a rate command,
/// inner PID with filtered derivative acts on the rate error. The integrator
/// accumulates `ki * e`, so the integral moment stays continuous when
/// scheduled gains change.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CascadedAxis {
    integral: f64,
    /// Low-passed rate error for the derivative term.
    filtered: f64,
}

impl CascadedAxis {
    pub fn output(&self, g: &CascadedGains, angle_err: f64, rate: f64) -> (f64, f64) {
        let e = g.kp_outer * angle_err - rate;
        let d = g.kd * (e - self.filtered) / g.tau_f;
        (g.kp * e + self.integral + d, e)
    }

    pub fn update(&mut self, g: &CascadedGains, e: f64, dt: f64, integrate: bool) {
        if integrate {
            self.integral += g.ki * e * dt;
        }
        self.filtered += dt * (e - self.filtered) / g.tau_f;
    }
}

/// Hover LQR with integral action on one axis, state
/// `[integral of angle error, angle error, rate]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LqrAxis {
    integral: f64,
}

impl LqrAxis {
    pub fn output(&self, k: &[f64; 3], angle_err: f64, rate: f64) -> f64 {
        // angle_err is ref - angle; the design state is angle - ref
        -(k[0] * -self.integral + k[1] * -angle_err + k[2] * rate)
    }

    pub fn update(&mut self, angle_err: f64, dt: f64, integrate: bool) {
        if integrate {
            self.integral += angle_err * dt;
        }
    }
}

/// Gains the attitude controller uses at one instant, for logging.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActiveGains {
    Cascaded([CascadedGains; 3]),
    Lqr([[f64; 3]; 3]),
}

impl ActiveGains {
    /// Flat view, five numbers per axis (LQR padded with zeros).
    pub fn flat(&self) -> [f64; 15] {
        let mut out = [0.0; 15];
        for i in 0..3 {
            match self {
                ActiveGains::Cascaded(g) => out[5 * i..5 * i + 5].copy_from_slice(&g[i].to_array()),
                ActiveGains::Lqr(k) => out[5 * i..5 * i + 3].copy_from_slice(&k[i]),
            }
        }
        out
    }
}

/// Source of attitude gains for one variant.
#[derive(Debug, Clone, PartialEq)]
pub enum GainSource {
    Fixed([CascadedGains; 3]),
    Scheduled(GainSchedule),
    Lqr([HoverLqr; 3]),
}

impl GainSource {
    pub fn gains_at(&self, v: f64) -> crate::Result<ActiveGains> {
        Ok(match self {
            GainSource::Fixed(g) => ActiveGains::Cascaded(*g),
            GainSource::Scheduled(s) => ActiveGains::Cascaded([
                s.gains_at(Axis::Roll, v)?,
                s.gains_at(Axis::Pitch, v)?,
                s.gains_at(Axis::Yaw, v)?,
            ]),
            GainSource::Lqr(l) => ActiveGains::Lqr([l[0].k, l[1].k, l[2].k]),
        })
    }
}

/// Attitude controller state for all three axes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AttitudeController {
    cascaded: [CascadedAxis; 3],
    lqr: [LqrAxis; 3],
}

impl AttitudeController {
    /// Moment demand per axis. `err` is reference minus angle, `rates` the
    /// body rates.
    pub fn output(&self, gains: &ActiveGains, err: [f64; 3], rates: [f64; 3]) -> ([f64; 3], [f64; 3]) {
        let mut m = [0.0; 3];
        let mut e = [0.0; 3];
        for i in 0..3 {
            match gains {
                ActiveGains::Cascaded(g) => (m[i], e[i]) = self.cascaded[i].output(&g[i], err[i], rates[i]),
                ActiveGains::Lqr(k) => {
                    m[i] = self.lqr[i].output(&k[i], err[i], rates[i]);
                    e[i] = err[i];
                }
            }
        }
        (m, e)
    }

    pub fn update(&mut self, gains: &ActiveGains, inner_err: [f64; 3], dt: f64, integrate: [bool; 3]) {
        for i in 0..3 {
            match gains {
                ActiveGains::Cascaded(g) => self.cascaded[i].update(&g[i], inner_err[i], dt, integrate[i]),
                ActiveGains::Lqr(_) => self.lqr[i].update(inner_err[i], dt, integrate[i]),
            }
        }
    }
}

/// Constant-gain altitude PID commanding total vertical rotor thrust.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AltitudeGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

impl AltitudeGains {
    /// Pole placement on the hover point mass `m z'' = T`: a triple pole at
    /// `-omega`.
    pub fn for_mass(mass: f64, omega: f64) -> Self {
        Self { kp: 3.0 * mass * omega * omega, ki: mass * omega.powi(3), kd: 3.0 * mass * omega }
    }
}

pub const ALTITUDE_BANDWIDTH: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AltitudeController {
    integral: f64,
}

impl AltitudeController {
    /// Total vertical thrust, tilt compensated, with conditional integration
    /// when the command saturates.
    pub fn command(
        &mut self,
        g: &AltitudeGains,
        p: &AircraftParameters,
        err: f64,
        climb_rate: f64,
        tilt_cos: f64,
        dt: f64,
    ) -> f64 {
        let t_max = 8.0 * p.rotor_thrust;
        let raw = |i: f64| (p.mass * GRAVITY + g.kp * err + g.ki * i - g.kd * climb_rate) / tilt_cos.max(0.5);
        let out = raw(self.integral);
        let saturated = (out >= t_max && err > 0.0) || (out <= 0.0 && err < 0.0);
        if !saturated {
            self.integral += err * dt;
        }
        out.clamp(0.0, t_max)
    }
}

/// Open-loop pusher throttle: zero until `start`, linear ramp to `cruise`
/// over `ramp` seconds, then held.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionSchedule {
    pub start: f64,
    pub ramp: f64,
    pub cruise_throttle: f64,
}

impl Default for TransitionSchedule {
    fn default() -> Self {
        Self { start: 20.0, ramp: 6.0, cruise_throttle: DEFAULT_CRUISE_THROTTLE }
    }
}

pub const DEFAULT_CRUISE_THROTTLE: f64 = 0.7;

impl TransitionSchedule {
    pub fn throttle(&self, t: f64) -> f64 {
        if t < self.start {
            0.0
        } else {
            self.cruise_throttle * ((t - self.start) / self.ramp).min(1.0)
        }
    }
}
