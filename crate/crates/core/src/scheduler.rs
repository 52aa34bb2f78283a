//! Piecewise-linear gain scheduling over airspeed.

use serde::{Deserialize, Serialize};

use crate::error::{FtcError, Result};
use crate::models::{design_points, Axis};
use crate::synthesis::{CascadedGains, SynthesisExport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainSchedule {
    breakpoints: Vec<f64>,
    /// `gains[k][axis.index()]` at breakpoint `k`.
    gains: Vec<[Option<CascadedGains>; 3]>,
}

impl GainSchedule {
    pub fn new(breakpoints: Vec<f64>, gains: Vec<[Option<CascadedGains>; 3]>) -> Result<Self> {
        if breakpoints.is_empty() || breakpoints.len() != gains.len() {
            return Err(FtcError::InvalidParameter("one gain row per breakpoint required".into()));
        }
        if breakpoints.iter().any(|v| !v.is_finite()) || breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(FtcError::InvalidParameter("breakpoints must be finite and strictly increasing".into()));
        }
        Ok(Self { breakpoints, gains })
    }

    /// Breakpoints at the design-point airspeeds, gains from `export`.
    /// Missing entries are kept as holes and reported on query.
    pub fn from_export(export: &SynthesisExport) -> Result<Self> {
        let points = design_points();
        let breakpoints = points.iter().map(|p| p.v_bar).collect();
        let gains = points
            .iter()
            .map(|p| Axis::ALL.map(|a| export.get(a, p.index).map(|c| c.gains)))
            .collect();
        Self::new(breakpoints, gains)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn is_complete(&self) -> bool {
        self.gains.iter().all(|row| row.iter().all(Option::is_some))
    }

    fn at_breakpoint(&self, k: usize, axis: Axis) -> Result<CascadedGains> {
        self.gains[k][axis.index()].ok_or_else(|| {
            FtcError::IncompleteSchedule(format!("{axis} has no gains at {} m/s", self.breakpoints[k]))
        })
    }

    /// Componentwise `(1 - t) g_k + t g_{k+1}` on the bracketing segment,
    /// clamped to the end breakpoints outside the range. Exact at every
    /// breakpoint.
    pub fn gains_at(&self, axis: Axis, v: f64) -> Result<CascadedGains> {
        if !self.is_complete() {
            let k = (0..self.gains.len()).find(|k| self.gains[*k].iter().any(Option::is_none)).unwrap_or(0);
            let a = Axis::ALL.into_iter().find(|a| self.gains[k][a.index()].is_none()).unwrap_or(axis);
            return self.at_breakpoint(k, a);
        }
        let bp = &self.breakpoints;
        let last = bp.len() - 1;
        if v.is_nan() {
            return Err(FtcError::InvalidParameter("airspeed is NaN".into()));
        }
        if v <= bp[0] {
            return self.at_breakpoint(0, axis);
        }
        if v >= bp[last] {
            return self.at_breakpoint(last, axis);
        }
        let k = bp.partition_point(|b| *b <= v) - 1;
        let t = (v - bp[k]) / (bp[k + 1] - bp[k]);
        let a = self.at_breakpoint(k, axis)?.to_array();
        let b = self.at_breakpoint(k + 1, axis)?.to_array();
        let mut out = [0.0; 5];
        for i in 0..5 {
            out[i] = (1.0 - t) * a[i] + t * b[i];
        }
        Ok(CascadedGains::from_array(out))
    }

    /// Largest componentwise slope between adjacent breakpoints.
    pub fn max_slope(&self, axis: Axis) -> Result<f64> {
        let mut l: f64 = 0.0;
        for k in 0..self.breakpoints.len().saturating_sub(1) {
            let a = self.at_breakpoint(k, axis)?.to_array();
            let b = self.at_breakpoint(k + 1, axis)?.to_array();
            let dv = self.breakpoints[k + 1] - self.breakpoints[k];
            for i in 0..5 {
                l = l.max((b[i] - a[i]).abs() / dv);
            }
        }
        Ok(l)
    }
}
