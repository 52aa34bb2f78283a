//! Nominal stability and SISO structured-singular-value tests.
//!
//! With one complex multiplicative block the structured singular value of
//! the robust-stability interconnection is `|W_t T|`, and with an added
//! performance block it is `|W_s S| + |W_t T|`. Both are exact for SISO
//! loops, so no D-scale iteration is needed.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{FtcError, Result};
use crate::linsys::{refined_peak, FrequencyGrid, RationalTF, C64};
use crate::models::Axis;
use crate::synthesis::ClosedLoop;

/// A frequency-domain peak and where it occurs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub value: f64,
    pub omega: f64,
}

fn require_stable(tfs: &[&RationalTF]) -> Result<()> {
    if tfs.iter().all(|t| t.is_stable()) {
        Ok(())
    } else {
        Err(FtcError::UnstableNominal)
    }
}

pub fn mu_rs_at(wt: &RationalTF, t: &RationalTF, omega: f64) -> f64 {
    (wt.at(omega) * t.at(omega)).norm()
}

pub fn mu_rp_at(ws: &RationalTF, s: &RationalTF, wt: &RationalTF, t: &RationalTF, omega: f64) -> f64 {
    (ws.at(omega) * s.at(omega)).norm() + mu_rs_at(wt, t, omega)
}

/// Robust stability peak, `max |W_t T|`.
pub fn mu_rs(wt: &RationalTF, t: &RationalTF, grid: &FrequencyGrid) -> Result<Peak> {
    require_stable(&[t])?;
    let (omega, value) = refined_peak(|w| mu_rs_at(wt, t, w), grid);
    Ok(Peak { value, omega })
}

/// Robust performance peak, `max (|W_s S| + |W_t T|)`.
pub fn mu_rp(ws: &RationalTF, s: &RationalTF, wt: &RationalTF, t: &RationalTF, grid: &FrequencyGrid) -> Result<Peak> {
    require_stable(&[s, t])?;
    let (omega, value) = refined_peak(|w| mu_rp_at(ws, s, wt, t, w), grid);
    Ok(Peak { value, omega })
}

/// Design points whose controllers must reach robust performance.
pub const RP_POINTS: std::ops::RangeInclusive<usize> = 3..=6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleSet {
    pub axis: Axis,
    pub point: usize,
    pub poles: Vec<(f64, f64)>,
    pub stable: bool,
}

/// Closed-loop poles of each nominal loop with a stability verdict.
pub fn nominal_pole_report(loops: &[(Axis, usize, &ClosedLoop)]) -> Vec<PoleSet> {
    loops
        .iter()
        .map(|(axis, point, cl)| {
            let poles: Vec<C64> = cl.poles();
            PoleSet {
                axis: *axis,
                point: *point,
                stable: cl.is_stable(),
                poles: poles.iter().map(|p| (p.re, p.im)).collect(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuEntry {
    pub axis: Axis,
    pub point: usize,
    pub mu_rs: f64,
    pub mu_rp: f64,
    pub w_rs: f64,
    pub w_rp: f64,
}

impl MuEntry {
    pub fn rs_pass(&self) -> bool {
        self.mu_rs < 1.0
    }

    pub fn rp_pass(&self) -> bool {
        self.mu_rp < 1.0
    }

    /// Both tests pass.
    pub fn pass(&self) -> bool {
        self.rs_pass() && self.rp_pass()
    }
}

/// Both tests for one loop. `ws`, `wt` are the performance and uncertainty
/// weights.
pub fn analyze_loop(
    axis: Axis,
    point: usize,
    cl: &ClosedLoop,
    ws: &RationalTF,
    wt: &RationalTF,
    grid: &FrequencyGrid,
) -> Result<MuEntry> {
    if !cl.is_stable() {
        return Err(FtcError::UnstableNominal);
    }
    let rs = mu_rs(wt, &cl.t, grid)?;
    let rp = mu_rp(ws, &cl.s, wt, &cl.t, grid)?;
    Ok(MuEntry { axis, point, mu_rs: rs.value, mu_rp: rp.value.max(rs.value), w_rs: rs.omega, w_rp: rp.omega })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MuReport {
    pub entries: Vec<MuEntry>,
}

impl MuReport {
    pub fn get(&self, axis: Axis, point: usize) -> Option<&MuEntry> {
        self.entries.iter().find(|e| e.axis == axis && e.point == point)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("axis,point,mu_rs,mu_rp,w_rs,w_rp,pass\n");
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{},{},{:.6},{:.6},{:.6},{:.6},{}",
                e.axis.name(),
                e.point,
                e.mu_rs,
                e.mu_rp,
                e.w_rs,
                e.w_rp,
                e.pass()
            );
        }
        out
    }

    /// Design points across, one RS and one RP row per axis.
    pub fn summary_table(&self) -> String {
        let mut points: Vec<usize> = self.entries.iter().map(|e| e.point).collect();
        points.sort_unstable();
        points.dedup();
        let mut out = String::from("axis   test ");
        for p in &points {
            let _ = write!(out, "{:>8}", format!("pt {p}"));
        }
        out.push('\n');
        for axis in Axis::ALL {
            for (label, rp) in [("RS", false), ("RP", true)] {
                let _ = write!(out, "{:<6} {label}   ", axis.name());
                for p in &points {
                    match self.get(axis, *p) {
                        Some(e) => {
                            let v = if rp { e.mu_rp } else { e.mu_rs };
                            let mark = if v < 1.0 { ' ' } else { '*' };
                            let _ = write!(out, "{v:>7.3}{mark}");
                        }
                        None => out.push_str("       -"),
                    }
                }
                out.push('\n');
            }
        }
        out.push_str("* marks mu >= 1\n");
        out
    }
}
