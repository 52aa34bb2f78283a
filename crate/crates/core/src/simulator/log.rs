//! Sampled simulation record and its CSV form.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dynamics::N_ACT;
use crate::allocator::ACTUATOR_NAMES;
use crate::error::{FtcError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Hover,
    Transition,
    FixedWing,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Hover => "hover",
            Mode::Transition => "transition",
            Mode::FixedWing => "fixed_wing",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "hover" => Ok(Mode::Hover),
            "transition" => Ok(Mode::Transition),
            "fixed_wing" => Ok(Mode::FixedWing),
            _ => Err(FtcError::Parse(format!("unknown mode '{s}'"))),
        }
    }
}

/// One logged sample. Angles in radians, altitude reference in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimRecord {
    pub t: f64,
    pub pos: [f64; 3],
    pub vel: [f64; 3],
    pub quat: [f64; 4],
    pub omega: [f64; 3],
    pub airspeed: f64,
    /// roll, pitch, yaw
    pub euler: [f64; 3],
    /// altitude, roll, pitch, yaw references
    pub refs: [f64; 4],
    /// Allocator output.
    pub command: [f64; N_ACT],
    /// Actuator output after the first-order lag, before the fault.
    pub actuated: [f64; N_ACT],
    /// `actuated` scaled by `1 - loss`.
    pub effective: [f64; N_ACT],
    pub mode: Mode,
    /// Airspeed the gains were scheduled on.
    pub v_sched: f64,
    /// Five numbers per axis, see `ActiveGains::flat`.
    pub gains: [f64; 15],
}

impl SimRecord {
    pub fn altitude(&self) -> f64 {
        -self.pos[2]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMeta {
    pub scenario: String,
    pub variant: String,
    pub config_hash: String,
    pub seed: u64,
    pub allocator_fingerprint: String,
    pub gain_fingerprint: String,
    pub dt: f64,
    pub log_interval: f64,
    pub fault_onset: f64,
    /// First time airspeed reached stall speed.
    pub t_reach: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimLog {
    pub meta: SimMeta,
    pub records: Vec<SimRecord>,
}

const GAIN_NAMES: [&str; 5] = ["kp_outer", "kp", "ki", "kd", "tau_f"];

pub fn csv_header() -> Vec<String> {
    let mut h: Vec<String> = [
        "t", "x", "y", "z", "u", "v", "w", "q0", "q1", "q2", "q3", "p", "q", "r", "V", "phi", "theta", "psi", "href",
        "phiref", "thetaref", "psiref",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    h.extend(ACTUATOR_NAMES.iter().map(|s| s.to_string()));
    h.extend(ACTUATOR_NAMES.iter().map(|s| format!("out_{s}")));
    h.extend(ACTUATOR_NAMES.iter().map(|s| format!("eff_{s}")));
    h.push("mode".into());
    h.push("v_sched".into());
    for axis in ["roll", "pitch", "yaw"] {
        h.extend(GAIN_NAMES.iter().map(|g| format!("{axis}_{g}")));
    }
    h
}

impl SimLog {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.t)
    }

    pub fn last(&self) -> Option<&SimRecord> {
        self.records.last()
    }

    /// Metadata as `# key = value` lines, then one header and one row per
    /// record. Floats are written in shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let meta = toml::to_string(&self.meta).expect("metadata serialises");
        for line in meta.lines() {
            let _ = writeln!(s, "# {line}");
        }
        s.push_str(&csv_header().join(","));
        s.push('\n');
        for r in &self.records {
            let mut nums: Vec<f64> = vec![r.t];
            nums.extend(r.pos);
            nums.extend(r.vel);
            nums.extend(r.quat);
            nums.extend(r.omega);
            nums.push(r.airspeed);
            nums.extend(r.euler);
            nums.extend(r.refs);
            nums.extend(r.command);
            nums.extend(r.actuated);
            nums.extend(r.effective);
            let row: Vec<String> = nums.iter().map(|v| v.to_string()).collect();
            s.push_str(&row.join(","));
            let _ = write!(s, ",{},{}", r.mode.name(), r.v_sched);
            for g in r.gains {
                let _ = write!(s, ",{g}");
            }
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut meta_text = String::new();
        let mut lines = text.lines().peekable();
        while let Some(l) = lines.peek() {
            let Some(m) = l.strip_prefix('#') else { break };
            meta_text.push_str(m.strip_prefix(' ').unwrap_or(m));
            meta_text.push('\n');
            lines.next();
        }
        let meta: SimMeta = toml::from_str(&meta_text)?;
        let header = lines.next().ok_or_else(|| FtcError::Parse("log has no header".into()))?;
        let expected = csv_header();
        if header.split(',').ne(expected.iter().map(String::as_str)) {
            return Err(FtcError::Parse("log header does not match the schema".into()));
        }
        let mode_col = 22 + 3 * N_ACT;
        let mut records = Vec::new();
        for (n, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != expected.len() {
                return Err(FtcError::Parse(format!("row {n}: {} columns, expected {}", cols.len(), expected.len())));
            }
            let num = |i: usize| -> Result<f64> {
                cols[i].parse().map_err(|_| FtcError::Parse(format!("row {n}, column {}: '{}'", expected[i], cols[i])))
            };
            let arr = |start: usize, out: &mut [f64]| -> Result<()> {
                for (k, o) in out.iter_mut().enumerate() {
                    *o = num(start + k)?;
                }
                Ok(())
            };
            let mut r = SimRecord {
                t: num(0)?,
                pos: [0.0; 3],
                vel: [0.0; 3],
                quat: [0.0; 4],
                omega: [0.0; 3],
                airspeed: num(14)?,
                euler: [0.0; 3],
                refs: [0.0; 4],
                command: [0.0; N_ACT],
                actuated: [0.0; N_ACT],
                effective: [0.0; N_ACT],
                mode: Mode::parse(cols[mode_col])?,
                v_sched: num(mode_col + 1)?,
                gains: [0.0; 15],
            };
            arr(1, &mut r.pos)?;
            arr(4, &mut r.vel)?;
            arr(7, &mut r.quat)?;
            arr(11, &mut r.omega)?;
            arr(15, &mut r.euler)?;
            arr(18, &mut r.refs)?;
            arr(22, &mut r.command)?;
            arr(22 + N_ACT, &mut r.actuated)?;
            arr(22 + 2 * N_ACT, &mut r.effective)?;
            arr(mode_col + 2, &mut r.gains)?;
            records.push(r);
        }
        Ok(Self { meta, records })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}
