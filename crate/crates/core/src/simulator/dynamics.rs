//! Rigid-body equations of motion, forces and the RK4 step.

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{FtcError, Result};
use crate::models::{
    pitch_damping, roll_damping, yaw_damping, AeroCoefficientTable, AircraftParameters, GRAVITY,
};

pub const N_ACT: usize = 13;

/// NED position, body velocity, body-to-NED attitude and body rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidBodyState {
    pub pos: Vector3<f64>,
    pub vel: Vector3<f64>,
    pub quat: Quaternion<f64>,
    pub omega: Vector3<f64>,
}

impl RigidBodyState {
    pub fn at_rest(altitude: f64) -> Self {
        Self {
            pos: Vector3::new(0.0, 0.0, -altitude),
            vel: Vector3::zeros(),
            quat: Quaternion::identity(),
            omega: Vector3::zeros(),
        }
    }

    pub fn attitude(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::new_unchecked(self.quat)
    }

    /// `(roll, pitch, yaw)`, ZYX convention.
    pub fn euler(&self) -> (f64, f64, f64) {
        self.attitude().euler_angles()
    }

    pub fn airspeed(&self) -> f64 {
        self.vel.norm()
    }

    pub fn altitude(&self) -> f64 {
        -self.pos.z
    }

    pub fn is_finite(&self) -> bool {
        self.pos.iter().chain(self.vel.iter()).chain(self.quat.coords.iter()).chain(self.omega.iter()).all(|v| v.is_finite())
    }
}

/// Lagged actuator outputs in `ACTUATOR_NAMES` order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuatorState {
    pub out: [f64; N_ACT],
    pub bandwidth: f64,
    /// Output rate limit per actuator, units per second.
    pub rate_limit: f64,
}

impl ActuatorState {
    pub fn new(initial: [f64; N_ACT], bandwidth: f64) -> Self {
        Self { out: initial, bandwidth, rate_limit: f64::INFINITY }
    }

    fn rate(&self, out: &[f64; N_ACT], cmd: &[f64; N_ACT]) -> [f64; N_ACT] {
        let mut d = [0.0; N_ACT];
        for i in 0..N_ACT {
            d[i] = (self.bandwidth * (cmd[i] - out[i])).clamp(-self.rate_limit, self.rate_limit);
        }
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicsOptions {
    pub aerodynamics: bool,
}

impl Default for PhysicsOptions {
    fn default() -> Self {
        Self { aerodynamics: true }
    }
}

/// Everything fixed during one step.
#[derive(Debug, Clone, Copy)]
pub struct StepInputs<'a> {
    pub params: &'a AircraftParameters,
    pub aero: &'a AeroCoefficientTable,
    pub options: PhysicsOptions,
    /// Actuator commands, held over the step.
    pub command: &'a [f64; N_ACT],
    /// Loss fraction per actuator, held over the step.
    pub loss: &'a [f64; N_ACT],
}

#[derive(Debug, Clone, Copy)]
struct Deriv {
    pos: Vector3<f64>,
    vel: Vector3<f64>,
    quat: Quaternion<f64>,
    omega: Vector3<f64>,
    act: [f64; N_ACT],
}

/// Force and moment in body axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wrench {
    pub force: Vector3<f64>,
    pub moment: Vector3<f64>,
}

/// Angle of attack and sideslip from body velocity; zero at rest.
pub fn flow_angles(vel: &Vector3<f64>) -> (f64, f64) {
    let v = vel.norm();
    if v == 0.0 {
        return (0.0, 0.0);
    }
    (vel.z.atan2(vel.x), (vel.y / v).clamp(-1.0, 1.0).asin())
}

pub fn aero_wrench(p: &AircraftParameters, a: &AeroCoefficientTable, vel: &Vector3<f64>, omega: &Vector3<f64>) -> Wrench {
    let v = vel.norm();
    let q = p.dynamic_pressure(v);
    let (alpha, beta) = flow_angles(vel);
    // static moments saturate outside the tabulated incidence range
    let (lo, hi) = a.alpha_range();
    let (alpha_m, beta_m) = (alpha.clamp(lo, hi), beta.clamp(lo, hi));
    let lift = q * p.wing_area * a.c_lift(alpha, v);
    let drag = q * p.wing_area * a.c_drag(alpha, v);
    let (sa, ca) = alpha.sin_cos();
    let force = Vector3::new(-drag * ca + lift * sa, q * p.wing_area * a.c_ybeta * beta_m, -drag * sa - lift * ca);
    let moment = Vector3::new(
        roll_damping(p, a, v) * omega.x,
        q * p.wing_area * p.c_bar * (a.c_m0 + a.c_malpha(v) * alpha_m) + pitch_damping(p, a, v) * omega.y,
        q * p.wing_area * p.span * a.c_nbeta(v) * beta_m + yaw_damping(p, a, v) * omega.z,
    );
    Wrench { force, moment }
}

/// Body wrench of effective actuator outputs at airspeed `v`.
pub fn actuator_wrench(p: &AircraftParameters, a: &AeroCoefficientTable, eff: &[f64; N_ACT], v: f64) -> Wrench {
    let mut force = Vector3::zeros();
    let mut moment = Vector3::zeros();
    for (i, r) in p.rotors().iter().enumerate() {
        let t = p.rotor_thrust * eff[i];
        force.z -= t;
        moment.x -= r.y * t;
        moment.y += r.x * t;
        moment.z += r.spin * p.rotor_torque * eff[i];
    }
    let q = p.dynamic_pressure(v);
    moment.x += q * p.wing_area * p.span * a.c_l_delta_a * eff[8];
    moment.y += q * p.wing_area * p.c_bar * a.c_m_delta_e * eff[9];
    moment.z += q * p.wing_area * p.span * a.c_n_delta_r * eff[10];
    // pushers at y = -offset (1) and +offset (2)
    let (h1, h2) = (p.hrotor_thrust * eff[11], p.hrotor_thrust * eff[12]);
    force.x += h1 + h2;
    moment.z += p.hrotor_offset * (h1 - h2);
    Wrench { force, moment }
}

pub fn effective(out: &[f64; N_ACT], loss: &[f64; N_ACT]) -> [f64; N_ACT] {
    let mut e = [0.0; N_ACT];
    for i in 0..N_ACT {
        e[i] = (1.0 - loss[i]) * out[i];
    }
    e
}

fn derivative(s: &RigidBodyState, act: &ActuatorState, out: &[f64; N_ACT], u: &StepInputs) -> Deriv {
    let p = u.params;
    let rot = UnitQuaternion::new_normalize(s.quat);
    let eff = effective(out, u.loss);
    let v = s.vel.norm();
    let mut w = actuator_wrench(p, u.aero, &eff, v);
    if u.options.aerodynamics {
        let a = aero_wrench(p, u.aero, &s.vel, &s.omega);
        w.force += a.force;
        w.moment += a.moment;
    }
    let gravity = rot.inverse_transform_vector(&Vector3::new(0.0, 0.0, p.mass * GRAVITY));
    let j = Vector3::new(p.jx, p.jy, p.jz);
    let jw = j.component_mul(&s.omega);
    let omega_dot = (w.moment - s.omega.cross(&jw)).component_div(&j);
    let vel_dot = (w.force + gravity) / p.mass - s.omega.cross(&s.vel);
    let quat_dot = s.quat * Quaternion::from_imag(s.omega) * 0.5;
    Deriv { pos: rot.transform_vector(&s.vel), vel: vel_dot, quat: quat_dot, omega: omega_dot, act: act.rate(out, u.command) }
}

fn advance(s: &RigidBodyState, out: &[f64; N_ACT], d: &Deriv, h: f64) -> (RigidBodyState, [f64; N_ACT]) {
    let mut o = *out;
    for i in 0..N_ACT {
        o[i] += h * d.act[i];
    }
    (
        RigidBodyState {
            pos: s.pos + d.pos * h,
            vel: s.vel + d.vel * h,
            quat: s.quat + d.quat * h,
            omega: s.omega + d.omega * h,
        },
        o,
    )
}

/// One fixed RK4 step of length `dt`, quaternion renormalised afterwards.
pub fn step(
    state: &RigidBodyState,
    act: &ActuatorState,
    inputs: &StepInputs,
    dt: f64,
    t: f64,
) -> Result<(RigidBodyState, ActuatorState)> {
    if !(dt > 0.0 && dt <= 5e-3) {
        return Err(FtcError::InvalidParameter(format!("dt = {dt} outside (0, 5 ms]")));
    }
    let k1 = derivative(state, act, &act.out, inputs);
    let (s2, o2) = advance(state, &act.out, &k1, 0.5 * dt);
    let k2 = derivative(&s2, act, &o2, inputs);
    let (s3, o3) = advance(state, &act.out, &k2, 0.5 * dt);
    let k3 = derivative(&s3, act, &o3, inputs);
    let (s4, o4) = advance(state, &act.out, &k3, dt);
    let k4 = derivative(&s4, act, &o4, inputs);
    let sum = |a: Vector3<f64>, b: Vector3<f64>, c: Vector3<f64>, d: Vector3<f64>| (a + b * 2.0 + c * 2.0 + d) * (dt / 6.0);
    let mut next = RigidBodyState {
        pos: state.pos + sum(k1.pos, k2.pos, k3.pos, k4.pos),
        vel: state.vel + sum(k1.vel, k2.vel, k3.vel, k4.vel),
        quat: state.quat + (k1.quat + k2.quat * 2.0 + k3.quat * 2.0 + k4.quat) * (dt / 6.0),
        omega: state.omega + sum(k1.omega, k2.omega, k3.omega, k4.omega),
    };
    next.quat = next.quat.normalize();
    let mut next_act = *act;
    for i in 0..N_ACT {
        next_act.out[i] += dt / 6.0 * (k1.act[i] + 2.0 * k2.act[i] + 2.0 * k3.act[i] + k4.act[i]);
    }
    if !next.is_finite() || next_act.out.iter().any(|v| !v.is_finite()) {
        return Err(FtcError::NonFiniteState { time: t + dt, detail: format!("{next:?}") });
    }
    Ok((next, next_act))
}

/// Kinetic plus potential energy, potential zero at `z = 0`.
pub fn mechanical_energy(p: &AircraftParameters, s: &RigidBodyState) -> f64 {
    let j = Vector3::new(p.jx, p.jy, p.jz);
    0.5 * p.mass * s.vel.norm_squared() + 0.5 * s.omega.dot(&j.component_mul(&s.omega)) + p.mass * GRAVITY * s.altitude()
}
