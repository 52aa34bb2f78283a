//! Maps a commanded wrench `[T, Mx, My, Mz]` onto the eight vertical rotors
//! and the three control surfaces.
//!
//! Moments are split between surfaces and rotors by a dynamic-pressure blend.
//! The rotor share, together with any thrust change, is solved about trim by
//! a weighted pseudo-inverse, then saturated components are clamped and the
//! leftover wrench is handed once to the actuators that are still free. The
//! allocator always uses nominal effectiveness; it never sees faults.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SMatrix, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{FtcError, Result};
use crate::models::{AeroCoefficientTable, AircraftParameters, ROTOR_NAMES, STALL_SPEED};

/// Rotor throttles to `[T, Mx, My, Mz]`.
pub type RotorMatrix = SMatrix<f64, 4, 8>;

/// Wrench norm above which a demand component is treated as absurd.
const WRENCH_CAP: f64 = 1e9;
const INFEASIBLE_FRACTION: f64 = 0.1;

/// Vertical rotor throttles in `ROTOR_NAMES` order, surface deflections and
/// the two horizontal (pusher) rotor throttles.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ActuatorCommand {
    pub rotors: [f64; 8],
    pub aileron: f64,
    pub elevator: f64,
    pub rudder: f64,
    pub hrotors: [f64; 2],
}

/// Actuator names in the flat order used by logs and fault scenarios.
pub const ACTUATOR_NAMES: [&str; 13] = [
    "rotor1a", "rotor1b", "rotor2a", "rotor2b", "rotor3a", "rotor3b", "rotor4a", "rotor4b", "ail", "elev", "rud", "hrot1",
    "hrot2",
];

pub fn actuator_index(name: &str) -> Option<usize> {
    ACTUATOR_NAMES.iter().position(|n| *n == name)
}

impl ActuatorCommand {
    pub fn to_array(&self) -> [f64; 13] {
        let mut a = [0.0; 13];
        a[..8].copy_from_slice(&self.rotors);
        a[8..11].copy_from_slice(&self.surfaces());
        a[11..].copy_from_slice(&self.hrotors);
        a
    }

    pub fn from_array(a: &[f64; 13]) -> Self {
        let mut rotors = [0.0; 8];
        rotors.copy_from_slice(&a[..8]);
        Self { rotors, aileron: a[8], elevator: a[9], rudder: a[10], hrotors: [a[11], a[12]] }
    }

    /// Equal throttles that carry the weight, surfaces neutral.
    pub fn hover_trim(p: &AircraftParameters) -> Self {
        let u = p.weight() / (8.0 * p.rotor_thrust);
        Self { rotors: [u; 8], ..Default::default() }
    }

    pub fn surfaces(&self) -> [f64; 3] {
        [self.aileron, self.elevator, self.rudder]
    }

    pub fn set_surfaces(&mut self, s: [f64; 3]) {
        self.aileron = s[0];
        self.elevator = s[1];
        self.rudder = s[2];
    }

    /// Every component inside its box.
    pub fn within_limits(&self, surface_limit: f64) -> bool {
        let unit = |v: &f64| (0.0..=1.0).contains(v);
        self.rotors.iter().all(unit)
            && self.hrotors.iter().all(unit)
            && self.surfaces().iter().all(|d| d.abs() <= surface_limit)
    }

    /// Copy with every component clamped into its box; NaN goes to the
    /// lower rotor limit or neutral surface.
    pub fn clamped(&self, surface_limit: f64) -> Self {
        let unit = |v: f64| if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        let surf = |v: f64| if v.is_nan() { 0.0 } else { v.clamp(-surface_limit, surface_limit) };
        Self {
            rotors: self.rotors.map(unit),
            aileron: surf(self.aileron),
            elevator: surf(self.elevator),
            rudder: surf(self.rudder),
            hrotors: self.hrotors.map(unit),
        }
    }
}

/// Nominal control effectiveness of the airframe.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectivenessMatrix {
    pub rotor: RotorMatrix,
    /// Moment per radian per pascal of dynamic pressure for aileron,
    /// elevator and rudder about x, y, z.
    pub surface_per_q: [f64; 3],
    pub surface_limit: f64,
    pub q_stall: f64,
    pub rho: f64,
    /// Actuator authority used as the pseudo-inverse weight (larger means
    /// used more).
    pub rotor_authority: [f64; 8],
    rotor_pinv: SMatrix<f64, 8, 4>,
}

impl EffectivenessMatrix {
    pub fn new(p: &AircraftParameters, a: &AeroCoefficientTable) -> Result<Self> {
        let mut rotor = RotorMatrix::zeros();
        for (j, r) in p.rotors().iter().enumerate() {
            rotor[(0, j)] = p.rotor_thrust;
            rotor[(1, j)] = -r.y * p.rotor_thrust;
            rotor[(2, j)] = r.x * p.rotor_thrust;
            rotor[(3, j)] = r.spin * p.rotor_torque;
        }
        let rotor_authority = [p.rotor_thrust; 8];
        let rotor_pinv = weighted_pinv(&dyn_of(&rotor), &rotor_authority)?;
        let rotor_pinv = SMatrix::<f64, 8, 4>::from_iterator(rotor_pinv.iter().copied());
        Ok(Self {
            rotor,
            surface_per_q: [
                p.wing_area * p.span * a.c_l_delta_a,
                p.wing_area * p.c_bar * a.c_m_delta_e,
                p.wing_area * p.span * a.c_n_delta_r,
            ],
            surface_limit: p.surface_limit,
            q_stall: p.dynamic_pressure(STALL_SPEED),
            rho: p.rho,
            rotor_authority,
            rotor_pinv,
        })
    }

    pub fn rank(&self) -> usize {
        dyn_of(&self.rotor).rank(1e-9)
    }

    /// Share of the moment demand given to the surfaces.
    pub fn surface_share(&self, q: f64) -> f64 {
        (q / self.q_stall).clamp(0.0, 1.0)
    }

    pub fn surface_gains(&self, q: f64) -> [f64; 3] {
        self.surface_per_q.map(|g| g * q)
    }

    pub fn rotor_wrench(&self, rotors: &[f64; 8]) -> Vector4<f64> {
        self.rotor * SMatrix::<f64, 8, 1>::from_column_slice(rotors)
    }

    /// Wrench produced by `cmd` at dynamic pressure `q`, ignoring the pushers.
    pub fn wrench(&self, cmd: &ActuatorCommand, q: f64) -> Vector4<f64> {
        let mut w = self.rotor_wrench(&cmd.rotors);
        let g = self.surface_gains(q);
        for (i, d) in cmd.surfaces().iter().enumerate() {
            w[i + 1] += g[i] * d;
        }
        w
    }

    /// Rotor matrix as CSV, one row per wrench component.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row");
        for n in ROTOR_NAMES {
            let _ = write!(out, ",rotor{n}");
        }
        out.push('\n');
        for (i, name) in ["T", "Mx", "My", "Mz"].iter().enumerate() {
            out.push_str(name);
            for j in 0..8 {
                let _ = write!(out, ",{}", self.rotor[(i, j)]);
            }
            out.push('\n');
        }
        out
    }
}

fn dyn_of(m: &RotorMatrix) -> DMatrix<f64> {
    DMatrix::from_iterator(4, 8, m.iter().copied())
}

/// `D pinv(B D)` with `D = diag(sqrt(authority))`, the minimiser of
/// `sum du_i^2 / authority_i` subject to `B du = dw`.
fn weighted_pinv(b: &DMatrix<f64>, authority: &[f64]) -> Result<DMatrix<f64>> {
    let d = DMatrix::from_diagonal(&DVector::from_iterator(authority.len(), authority.iter().map(|a| a.sqrt())));
    let bd = b * &d;
    let pinv = bd
        .pseudo_inverse(1e-12)
        .map_err(|e| FtcError::InvalidParameter(format!("pseudo-inverse failed: {e}")))?;
    Ok(d * pinv)
}

/// Result of one allocation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Allocation {
    pub command: ActuatorCommand,
    /// Wrench requested of the rotors about trim, after the blend.
    pub rotor_demand: Vector4<f64>,
    /// Wrench actually produced by the clamped command.
    pub achieved: Vector4<f64>,
    pub residual: f64,
    pub demand: f64,
}

impl Allocation {
    pub fn infeasible(&self) -> bool {
        self.residual > INFEASIBLE_FRACTION * self.demand
    }

    pub fn check(&self) -> Result<()> {
        if self.infeasible() {
            return Err(FtcError::InfeasibleWrench { residual: self.residual, demand: self.demand });
        }
        Ok(())
    }
}

fn sanitize(w: [f64; 4]) -> Vector4<f64> {
    Vector4::from_iterator(w.iter().map(|v| if v.is_nan() { 0.0 } else { v.clamp(-WRENCH_CAP, WRENCH_CAP) }))
}

/// Allocates `wrench` at airspeed `v` about `trim`. The pushers are passed
/// through from `trim`.
pub fn allocate(eff: &EffectivenessMatrix, wrench: [f64; 4], v: f64, trim: &ActuatorCommand) -> Allocation {
    let trim = trim.clamped(eff.surface_limit);
    let q = 0.5 * eff.rho * v * v;
    allocate_at_q(eff, wrench, q, &trim)
}

fn allocate_at_q(eff: &EffectivenessMatrix, wrench: [f64; 4], q: f64, trim: &ActuatorCommand) -> Allocation {
    let w = sanitize(wrench);
    let target = w - eff.wrench(trim, q);
    let sigma = eff.surface_share(q);
    let gains = eff.surface_gains(q);

    // surfaces take sigma of each moment, rotors the rest plus all thrust
    let mut cmd = *trim;
    let mut surf = trim.surfaces();
    let mut surface_moment = [0.0; 3];
    for i in 0..3 {
        if sigma > 0.0 && gains[i] != 0.0 {
            surface_moment[i] = sigma * target[i + 1];
            surf[i] += surface_moment[i] / gains[i];
        }
    }
    let rotor_demand = Vector4::new(
        target[0],
        target[1] - surface_moment[0],
        target[2] - surface_moment[1],
        target[3] - surface_moment[2],
    );
    let du = eff.rotor_pinv * rotor_demand;
    for j in 0..8 {
        cmd.rotors[j] = trim.rotors[j] + du[j];
    }
    cmd.set_surfaces(surf);

    let clamped = cmd.clamped(eff.surface_limit);
    let residual = target - (eff.wrench(&clamped, q) - eff.wrench(trim, q));
    let mut out = clamped;
    if residual.norm() > 1e-12 * (1.0 + target.norm()) {
        out = redistribute(eff, &clamped, &cmd, residual, q);
    }
    let achieved = eff.wrench(&out, q);
    let res = (w - achieved).norm();
    Allocation { command: out, rotor_demand, achieved, residual: res, demand: target.norm() }
}

/// One pass: the leftover wrench goes to rotors and surfaces that were not
/// clamped in the first pass, then everything is clamped again.
fn redistribute(
    eff: &EffectivenessMatrix,
    clamped: &ActuatorCommand,
    raw: &ActuatorCommand,
    residual: Vector4<f64>,
    q: f64,
) -> ActuatorCommand {
    let free_rotors: Vec<usize> = (0..8).filter(|&j| clamped.rotors[j] == raw.rotors[j]).collect();
    let gains = eff.surface_gains(q);
    let (cs, rs) = (clamped.surfaces(), raw.surfaces());
    let free_surf: Vec<usize> = (0..3).filter(|&i| cs[i] == rs[i] && gains[i] != 0.0).collect();
    let n = free_rotors.len() + free_surf.len();
    if n == 0 {
        return *clamped;
    }
    let mut b = DMatrix::zeros(4, n);
    let mut auth = Vec::with_capacity(n);
    for (c, &j) in free_rotors.iter().enumerate() {
        b.set_column(c, &eff.rotor.column(j));
        auth.push(eff.rotor_authority[j]);
    }
    for (c, &i) in free_surf.iter().enumerate() {
        b[(i + 1, free_rotors.len() + c)] = gains[i];
        // authority as the moment a full deflection buys
        auth.push((gains[i] * eff.surface_limit).abs());
    }
    let Ok(pinv) = weighted_pinv(&b, &auth) else { return *clamped };
    let r = DVector::from_column_slice(residual.as_slice());
    let d = pinv * r;
    let mut out = *clamped;
    for (c, &j) in free_rotors.iter().enumerate() {
        out.rotors[j] += d[c];
    }
    let mut s = out.surfaces();
    for (c, &i) in free_surf.iter().enumerate() {
        s[i] += d[free_rotors.len() + c];
    }
    out.set_surfaces(s);
    out.clamped(eff.surface_limit)
}
