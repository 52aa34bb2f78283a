//! Tracking error statistics and the cross-variant comparison.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{FtcError, Result};
use crate::simulator::{wrap_pi, SimLog, SimRecord, Variant};

/// Evaluation windows open at the transition start.
pub const WINDOW_START: f64 = 20.0;
/// Relative slack on the attitude orderings.
pub const ORDERING_SLACK: f64 = 0.05;
/// Largest altitude RMSE may exceed the smallest by this fraction.
pub const ALTITUDE_SPREAD: f64 = 0.10;
/// Run-end attitude band around the reference, degrees.
pub const END_ATTITUDE_BAND_DEG: f64 = 2.0;
/// Run-end altitude band around the reference, metres.
pub const END_ALTITUDE_BAND: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Altitude,
    Roll,
    Pitch,
    Yaw,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::Altitude, Channel::Roll, Channel::Pitch, Channel::Yaw];
    pub const ATTITUDE: [Channel; 3] = [Channel::Roll, Channel::Pitch, Channel::Yaw];

    pub fn name(self) -> &'static str {
        match self {
            Channel::Altitude => "h",
            Channel::Roll => "phi",
            Channel::Pitch => "theta",
            Channel::Yaw => "psi",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Channel::Altitude => "m",
            _ => "deg",
        }
    }

    /// Reference minus actual, metres or radians.
    pub fn error(self, r: &SimRecord) -> f64 {
        match self {
            Channel::Altitude => r.refs[0] - r.altitude(),
            Channel::Roll => r.refs[1] - r.euler[0],
            Channel::Pitch => r.refs[2] - r.euler[1],
            Channel::Yaw => wrap_pi(r.refs[3] - r.euler[2]),
        }
    }

    /// Converts an SI value of this channel to report units.
    pub fn to_report(self, v: f64) -> f64 {
        match self {
            Channel::Altitude => v,
            _ => v.to_degrees(),
        }
    }
}

/// Closed time interval `[start, end]`, seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

impl Window {
    /// `[WINDOW_START, last sample]`.
    pub fn for_log(log: &SimLog) -> Result<Self> {
        let end = log.last().ok_or(FtcError::EmptyWindow)?.t;
        Ok(Self { start: WINDOW_START, end })
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t <= self.end
    }
}

/// Root mean square of the channel error over the samples inside `window`,
/// in SI units.
pub fn rmse(log: &SimLog, channel: Channel, window: Window) -> Result<f64> {
    let (sum, n) = log
        .records
        .iter()
        .filter(|r| window.contains(r.t))
        .fold((0.0, 0usize), |(s, n), r| (s + channel.error(r).powi(2), n + 1));
    if n == 0 {
        return Err(FtcError::EmptyWindow);
    }
    Ok((sum / n as f64).sqrt())
}

/// Largest absolute channel error inside `window`, SI units.
pub fn max_abs_error(log: &SimLog, channel: Channel, window: Window) -> Result<f64> {
    log.records
        .iter()
        .filter(|r| window.contains(r.t))
        .map(|r| channel.error(r).abs())
        .reduce(f64::max)
        .ok_or(FtcError::EmptyWindow)
}

/// RMSE of one run in report units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmseRow {
    pub variant: Variant,
    pub e_h: f64,
    pub e_phi: f64,
    pub e_theta: f64,
    pub e_psi: f64,
}

impl RmseRow {
    pub fn get(&self, c: Channel) -> f64 {
        match c {
            Channel::Altitude => self.e_h,
            Channel::Roll => self.e_phi,
            Channel::Pitch => self.e_theta,
            Channel::Yaw => self.e_psi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub channel: Channel,
    pub pass: bool,
    pub detail: String,
}

/// RMSE table and verdicts for one fault case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingReport {
    pub case: String,
    pub window: Window,
    /// LQR, SHIF, GS_SHIF order.
    pub rows: Vec<RmseRow>,
    pub verdicts: Vec<Verdict>,
}

impl TrackingReport {
    pub fn row(&self, v: Variant) -> Option<&RmseRow> {
        self.rows.iter().find(|r| r.variant == v)
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("case,variant,window_start,window_end,e_h_m,e_phi_deg,e_theta_deg,e_psi_deg\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                self.case, r.variant, self.window.start, self.window.end, r.e_h, r.e_phi, r.e_theta, r.e_psi
            );
        }
        s
    }

    pub fn verdicts_csv(&self) -> String {
        let mut s = String::from("case,channel,pass,detail\n");
        for v in &self.verdicts {
            let _ = writeln!(s, "{},{},{},\"{}\"", self.case, v.channel.name(), v.pass, v.detail);
        }
        s
    }
}

/// `a <= b` up to the ordering slack.
fn not_worse(a: f64, b: f64) -> bool {
    a <= b * (1.0 + ORDERING_SLACK)
}

fn variant_of(log: &SimLog) -> Result<Variant> {
    log.meta.variant.parse()
}

/// Common window of a set of logs: from [`WINDOW_START`] to the earliest
/// run end. Logs must share the sampling interval and sample times and all
/// cover the window start.
pub fn common_window(logs: &[&SimLog]) -> Result<Window> {
    let first = logs.first().ok_or(FtcError::EmptyWindow)?;
    let mut end = f64::INFINITY;
    for l in logs {
        if l.meta.log_interval.to_bits() != first.meta.log_interval.to_bits() {
            return Err(FtcError::WindowMismatch);
        }
        if l.records.first().is_none_or(|r| r.t > WINDOW_START) {
            return Err(FtcError::WindowMismatch);
        }
        end = end.min(Window::for_log(l)?.end);
    }
    let w = Window { start: WINDOW_START, end };
    let times = |l: &SimLog| l.times().filter(|t| w.contains(*t)).map(f64::to_bits).collect::<Vec<_>>();
    let reference = times(first);
    if reference.is_empty() {
        return Err(FtcError::EmptyWindow);
    }
    if logs.iter().any(|l| times(l) != reference) {
        return Err(FtcError::WindowMismatch);
    }
    Ok(w)
}

/// RMSE table and verdicts for one case from one log per variant. Attitude
/// channels must satisfy GS_SHIF <= SHIF <= LQR within the ordering slack;
/// altitude RMSEs must lie within [`ALTITUDE_SPREAD`] of each other.
pub fn compare(case: &str, logs: &[SimLog]) -> Result<TrackingReport> {
    let mut by_variant: [Option<&SimLog>; 3] = [None; 3];
    for l in logs {
        let v = variant_of(l)?;
        let i = Variant::ALL.iter().position(|x| *x == v).expect("variant in ALL");
        if by_variant[i].replace(l).is_some() {
            return Err(FtcError::InvalidParameter(format!("two logs for variant {}", Variant::ALL[i])));
        }
    }
    let ordered: Vec<&SimLog> = by_variant
        .iter()
        .zip(Variant::ALL)
        .map(|(l, v)| l.ok_or_else(|| FtcError::InvalidParameter(format!("no log for variant {v} in {case}"))))
        .collect::<Result<_>>()?;
    let window = common_window(&ordered)?;

    let mut rows = Vec::with_capacity(3);
    for (l, v) in ordered.iter().zip(Variant::ALL) {
        let e = |c: Channel| rmse(l, c, window).map(|x| c.to_report(x));
        rows.push(RmseRow {
            variant: v,
            e_h: e(Channel::Altitude)?,
            e_phi: e(Channel::Roll)?,
            e_theta: e(Channel::Pitch)?,
            e_psi: e(Channel::Yaw)?,
        });
    }
    let [lqr, shif, gs] = [rows[0], rows[1], rows[2]];

    let mut verdicts = Vec::with_capacity(4);
    for c in Channel::ATTITUDE {
        let (a, b, d) = (gs.get(c), shif.get(c), lqr.get(c));
        verdicts.push(Verdict {
            channel: c,
            pass: not_worse(a, b) && not_worse(b, d),
            detail: format!("gs_shif {a:.4} <= shif {b:.4} <= lqr {d:.4} (5% slack)"),
        });
    }
    let h: Vec<f64> = rows.iter().map(|r| r.e_h).collect();
    let (lo, hi) = (h.iter().cloned().fold(f64::INFINITY, f64::min), h.iter().cloned().fold(0.0, f64::max));
    verdicts.push(Verdict {
        channel: Channel::Altitude,
        pass: hi <= lo * (1.0 + ALTITUDE_SPREAD),
        detail: format!("spread {lo:.4}..{hi:.4} m"),
    });
    Ok(TrackingReport { case: case.into(), window, rows, verdicts })
}

/// Attitude and altitude at the last logged sample against their references.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndState {
    pub t: f64,
    pub altitude_error: f64,
    /// Roll, pitch, yaw error, degrees.
    pub attitude_error_deg: [f64; 3],
}

impl EndState {
    pub fn of(log: &SimLog) -> Result<Self> {
        let r = log.last().ok_or(FtcError::EmptyWindow)?;
        Ok(Self {
            t: r.t,
            altitude_error: Channel::Altitude.error(r),
            attitude_error_deg: Channel::ATTITUDE.map(|c| c.error(r).to_degrees()),
        })
    }

    pub fn converged(&self) -> bool {
        self.altitude_error.abs() <= END_ALTITUDE_BAND
            && self.attitude_error_deg.iter().all(|e| e.abs() <= END_ATTITUDE_BAND_DEG)
    }
}

/// Reports side by side, one row per variant, one column group per case.
pub fn table(reports: &[TrackingReport]) -> String {
    let mut s = String::from("method  ");
    for r in reports {
        let _ = write!(s, "| {:<39}", r.case);
    }
    s.push('\n');
    s.push_str("        ");
    for _ in reports {
        let _ = write!(s, "| {:>9}{:>10}{:>10}{:>10}", "e_h (m)", "e_phi", "e_theta", "e_psi");
    }
    s.push('\n');
    for v in Variant::ALL {
        let _ = write!(s, "{:<8}", v.name());
        for r in reports {
            match r.row(v) {
                Some(x) => {
                    let _ = write!(s, "| {:>9.4}{:>10.4}{:>10.4}{:>10.4}", x.e_h, x.e_phi, x.e_theta, x.e_psi);
                }
                None => {
                    let _ = write!(s, "| {:>39}", "-");
                }
            }
        }
        s.push('\n');
    }
    s.push_str("attitude errors in degrees\n");
    for r in reports {
        for v in &r.verdicts {
            let _ = writeln!(s, "{} {:<6} {} {}", r.case, v.channel.name(), if v.pass { "PASS" } else { "FAIL" }, v.detail);
        }
    }
    s
}

/// Bar-chart data for one channel: one row per case, one column per variant.
pub fn bar_chart_csv(reports: &[TrackingReport], channel: Channel) -> String {
    let mut s = format!("case,lqr_{u},shif_{u},gs_shif_{u}\n", u = channel.unit());
    for r in reports {
        let cell = |v: Variant| r.row(v).map(|x| x.get(channel).to_string()).unwrap_or_default();
        let _ = writeln!(s, "{},{},{},{}", r.case, cell(Variant::Lqr), cell(Variant::Shif), cell(Variant::GsShif));
    }
    s
}
