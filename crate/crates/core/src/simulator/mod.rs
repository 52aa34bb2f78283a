//! Nonlinear six-degree-of-freedom simulation of the hover-to-cruise
//! transition with actuator faults.
//!
//! Timeline: hover at the reference altitude until the transition start,
//! then the pushers follow an open-loop ramp while the altitude PID and the
//! attitude controller hold their references. The run ends a settling time
//! after airspeed first reaches stall speed, or fails at the time cap.

pub mod control;
pub mod dynamics;
pub mod log;
pub mod scenario;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use control::{
    pitch_reference, trim_pitch, ActiveGains, AltitudeController, AltitudeGains, AttitudeController, GainSource, TransitionSchedule,
    Variant, ALTITUDE_BANDWIDTH, SHIF_POINT,
};
pub use dynamics::{step, ActuatorState, PhysicsOptions, RigidBodyState, StepInputs, N_ACT};
pub use log::{Mode, SimLog, SimMeta, SimRecord};
pub use scenario::{Case, FaultScenario, ScenarioFile};

use crate::allocator::{allocate, ActuatorCommand, EffectivenessMatrix};
use crate::error::{FtcError, Result};
use crate::models::{Airframe, Axis, STALL_SPEED};
use crate::scheduler::GainSchedule;
use crate::synthesis::{CascadedGains, HoverLqr, SynthesisExport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub dt: f64,
    /// Run fails if stall speed is not reached by this time.
    pub duration: f64,
    /// Log every this many steps.
    pub log_every: usize,
    pub altitude_ref: f64,
    /// Time flown after stall speed is first reached.
    pub settle: f64,
    pub transition: TransitionSchedule,
    pub altitude_bandwidth: f64,
    pub physics: PhysicsOptions,
    /// Standard deviation of the airspeed seen by the scheduler, m/s.
    pub airspeed_noise: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            duration: 60.0,
            log_every: 10,
            altitude_ref: 30.0,
            settle: 3.0,
            transition: TransitionSchedule::default(),
            altitude_bandwidth: ALTITUDE_BANDWIDTH,
            physics: PhysicsOptions::default(),
            airspeed_noise: 0.0,
            seed: 0,
        }
    }
}

/// Controllers for all three variants, built from one synthesis export.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerBank {
    pub schedule: GainSchedule,
    pub shif: [CascadedGains; 3],
    pub lqr: [HoverLqr; 3],
}

impl ControllerBank {
    pub fn from_export(export: &SynthesisExport) -> Result<Self> {
        let schedule = GainSchedule::from_export(export)?;
        let shif_at = |a: Axis| {
            export.get(a, SHIF_POINT).map(|c| c.gains).ok_or_else(|| {
                FtcError::IncompleteSchedule(format!("{a} has no gains at design point {SHIF_POINT}"))
            })
        };
        let lqr_for = |a: Axis| {
            export.lqr_for(a).cloned().ok_or_else(|| FtcError::IncompleteSchedule(format!("no hover LQR for {a}")))
        };
        Ok(Self {
            schedule,
            shif: [shif_at(Axis::Roll)?, shif_at(Axis::Pitch)?, shif_at(Axis::Yaw)?],
            lqr: [lqr_for(Axis::Roll)?, lqr_for(Axis::Pitch)?, lqr_for(Axis::Yaw)?],
        })
    }

    pub fn source(&self, variant: Variant) -> Result<GainSource> {
        match variant {
            Variant::Lqr => Ok(GainSource::Lqr(self.lqr.clone())),
            Variant::Shif => Ok(GainSource::Fixed(self.shif)),
            Variant::GsShif => {
                if !self.schedule.is_complete() {
                    // surface the hole now rather than mid-run
                    self.schedule.gains_at(Axis::Roll, 0.0)?;
                }
                Ok(GainSource::Scheduled(self.schedule.clone()))
            }
        }
    }
}

fn fingerprint(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub fn allocator_fingerprint(eff: &EffectivenessMatrix) -> String {
    fingerprint(&eff.to_csv())
}

pub fn gain_fingerprint(source: &GainSource) -> String {
    fingerprint(&format!("{source:?}"))
}

/// Angle wrapped into `(-pi, pi]`.
pub fn wrap_pi(a: f64) -> f64 {
    let t = std::f64::consts::TAU;
    let r = (a + std::f64::consts::PI).rem_euclid(t) - std::f64::consts::PI;
    if r == -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        r
    }
}

/// Runs one scenario with one controller variant.
pub fn run_scenario(
    airframe: &Airframe,
    bank: &ControllerBank,
    scenario: &FaultScenario,
    variant: Variant,
    cfg: &SimConfig,
    config_hash: &str,
) -> Result<SimLog> {
    if !(cfg.dt > 0.0 && cfg.dt <= 5e-3) {
        return Err(FtcError::InvalidParameter(format!("dt = {} outside (0, 5 ms]", cfg.dt)));
    }
    if cfg.log_every == 0 || !(cfg.duration > 0.0) || !(cfg.airspeed_noise >= 0.0) {
        return Err(FtcError::InvalidParameter("log_every, duration and noise must be positive".into()));
    }
    let loss_vector = scenario.loss_vector()?;
    let (p, a) = (&airframe.params, &airframe.aero);
    let eff = EffectivenessMatrix::new(p, a)?;
    let source = bank.source(variant)?;
    let alt_gains = AltitudeGains::for_mass(p.mass, cfg.altitude_bandwidth);

    let mut meta = SimMeta {
        scenario: scenario.name.clone(),
        variant: variant.name().into(),
        config_hash: config_hash.into(),
        seed: cfg.seed,
        allocator_fingerprint: allocator_fingerprint(&eff),
        gain_fingerprint: gain_fingerprint(&source),
        dt: cfg.dt,
        log_interval: cfg.dt * cfg.log_every as f64,
        fault_onset: scenario.onset,
        t_reach: None,
    };

    let trim = ActuatorCommand::hover_trim(p);
    let mut state = RigidBodyState::at_rest(cfg.altitude_ref);
    let mut act = ActuatorState::new(trim.to_array(), p.actuator_bandwidth);
    let mut attitude = AttitudeController::default();
    let mut altitude = AltitudeController::default();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.airspeed_noise).map_err(|e| FtcError::InvalidParameter(e.to_string()))?;
    let no_loss = [0.0; N_ACT];

    let max_steps = (cfg.duration / cfg.dt).round() as u64;
    let mut end_step: Option<u64> = None;
    let mut records = Vec::with_capacity((max_steps / cfg.log_every as u64 + 1) as usize);
    let mut k: u64 = 0;
    loop {
        let t = k as f64 * cfg.dt;
        let v = state.airspeed();
        if meta.t_reach.is_none() && v >= STALL_SPEED {
            meta.t_reach = Some(t);
            // end on a logged sample
            let every = cfg.log_every as u64;
            end_step = Some((k + (cfg.settle / cfg.dt).round() as u64).div_ceil(every) * every);
        }
        let mode = match meta.t_reach {
            Some(_) => Mode::FixedWing,
            None if t >= cfg.transition.start => Mode::Transition,
            None => Mode::Hover,
        };

        // references and errors
        let (roll, pitch, yaw) = state.euler();
        let refs = [cfg.altitude_ref, 0.0, pitch_reference(a, v), 0.0];
        let err = [refs[1] - roll, refs[2] - pitch, wrap_pi(refs[3] - yaw)];
        let rates = [state.omega.x, state.omega.y, state.omega.z];

        let v_sched = if cfg.airspeed_noise > 0.0 { (v + noise.sample(&mut rng)).max(0.0) } else { v };
        let gains = source.gains_at(v_sched)?;
        let (moments, inner) = attitude.output(&gains, err, rates);

        let ned_vel = state.attitude().transform_vector(&state.vel);
        let tilt = roll.cos() * pitch.cos();
        let thrust = altitude.command(&alt_gains, p, refs[0] - state.altitude(), -ned_vel.z, tilt, cfg.dt);

        let mut base = trim;
        base.hrotors = [cfg.transition.throttle(t); 2];
        let alloc = allocate(&eff, [thrust, moments[0], moments[1], moments[2]], v, &base);
        let command = alloc.command.to_array();
        let loss = if t >= scenario.onset { &loss_vector } else { &no_loss };

        if k.is_multiple_of(cfg.log_every as u64) {
            let effective = dynamics::effective(&act.out, loss);
            records.push(SimRecord {
                t,
                pos: state.pos.into(),
                vel: state.vel.into(),
                quat: [state.quat.w, state.quat.i, state.quat.j, state.quat.k],
                omega: state.omega.into(),
                airspeed: v,
                euler: [roll, pitch, yaw],
                refs,
                command,
                actuated: act.out,
                effective,
                mode,
                v_sched,
                gains: gains.flat(),
            });
        }
        if end_step == Some(k) {
            break;
        }
        if k >= max_steps {
            return Err(FtcError::TransitionTimeout { airspeed: v, cap: cfg.duration });
        }

        attitude.update(&gains, inner, cfg.dt, [!alloc.infeasible(); 3]);
        let inputs = StepInputs { params: p, aero: a, options: cfg.physics, command: &command, loss };
        (state, act) = step(&state, &act, &inputs, cfg.dt, t)?;
        k += 1;
    }
    Ok(SimLog { meta, records })
}

/// Checks that the logged gains are a function of the scheduling airspeed
/// alone, the same before and after fault onset, and that the recorded
/// fingerprints match the controllers and allocator this bank produces.
pub fn check_passive(log: &SimLog, airframe: &Airframe, bank: &ControllerBank, variant: Variant) -> Result<()> {
    let source = bank.source(variant)?;
    let eff = EffectivenessMatrix::new(&airframe.params, &airframe.aero)?;
    let fail = |m: String| Err(FtcError::InvalidParameter(format!("passive contract violated: {m}")));
    if log.meta.gain_fingerprint != gain_fingerprint(&source) {
        return fail("gain fingerprint differs".into());
    }
    if log.meta.allocator_fingerprint != allocator_fingerprint(&eff) {
        return fail("allocator fingerprint differs".into());
    }
    for r in &log.records {
        let g = source.gains_at(r.v_sched)?.flat();
        if g.iter().zip(r.gains).any(|(x, y)| x.to_bits() != y.to_bits()) {
            return fail(format!("gains at t = {} are not the schedule's", r.t));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap() {
        assert!((wrap_pi(3.0 * std::f64::consts::PI / 2.0) + std::f64::consts::PI / 2.0).abs() < 1e-15);
        assert_eq!(wrap_pi(0.25), 0.25);
        assert_eq!(wrap_pi(-std::f64::consts::PI), std::f64::consts::PI);
    }
}
