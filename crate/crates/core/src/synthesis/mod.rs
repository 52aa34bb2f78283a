//! Weighting functions, the cascaded P-PID loop, the stacked mixed-sensitivity
//! cost and its derivative-free minimisation, plus the LQR baseline.

mod export;
mod lqr;
mod optim;
mod weights;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FtcError, Result};
use crate::linsys::{poly, refined_peak, FrequencyGrid, RationalTF, C64, STABILITY_EPS};
use crate::models::{plant, AeroCoefficientTable, AircraftParameters, Axis};

pub use export::{ControllerEntry, SynthesisExport};
pub use lqr::{care_residual, hover_lqr, hover_model, lqr_design, HoverLqr, LqrDesign, LQR_Q, LQR_R};
pub use optim::{nelder_mead, NelderMeadResult};
pub use weights::{
    make_wr, make_ws, AxisWeights, ControlWeightParams, SensitivityWeightParams, WeightTable, DEFAULT_A,
    DEFAULT_OMEGA_A, DEFAULT_R_MAX, DEFAULT_WEIGHTS, PUBLISHED_TABLE,
};

/// Derivative filter time constant used for every loop, s.
pub const TAU_F: f64 = 0.05;

/// Cost assigned to gains whose loop has a pole at or right of `-STABILITY_EPS`,
/// before adding the largest pole real part.
pub const INSTABILITY_PENALTY: f64 = 1e6;

/// Outer P gain on angle error and inner PID on rate error. The derivative
/// term is `kd s / (tau_f s + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CascadedGains {
    pub kp_outer: f64,
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub tau_f: f64,
}

impl CascadedGains {
    pub fn new(kp_outer: f64, kp: f64, ki: f64, kd: f64, tau_f: f64) -> Result<Self> {
        let g = Self { kp_outer, kp, ki, kd, tau_f };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.to_array().iter().any(|v| !v.is_finite()) {
            return Err(FtcError::InvalidParameter("non-finite gain".into()));
        }
        if self.tau_f <= 0.0 {
            return Err(FtcError::InvalidParameter("tau_f must be positive".into()));
        }
        Ok(())
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.kp_outer, self.kp, self.ki, self.kd, self.tau_f]
    }

    pub fn from_array(v: [f64; 5]) -> Self {
        Self { kp_outer: v[0], kp: v[1], ki: v[2], kd: v[3], tau_f: v[4] }
    }

    /// Inner PID as `[kp s (tau s + 1) + ki (tau s + 1) + kd s^2] / [s (tau s + 1)]`.
    pub fn pid_polys(&self) -> (Vec<f64>, Vec<f64>) {
        let t = self.tau_f;
        let num = vec![self.kp * t + self.kd, self.kp + self.ki * t, self.ki];
        let den = vec![t, 1.0, 0.0];
        (num, den)
    }

    pub fn pid_tf(&self) -> RationalTF {
        let (n, d) = self.pid_polys();
        RationalTF::new(n, d).expect("pid tf")
    }
}

/// Sensitivity, complementary sensitivity and control sensitivity of the
/// cascaded loop, all over the shared characteristic polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoop {
    pub s: RationalTF,
    pub t: RationalTF,
    pub r: RationalTF,
    pub characteristic: Vec<f64>,
}

impl ClosedLoop {
    pub fn poles(&self) -> Vec<C64> {
        poly::roots(&self.characteristic)
    }

    pub fn max_pole_real(&self) -> f64 {
        self.poles().iter().map(|p| p.re).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_stable(&self) -> bool {
        self.max_pole_real() < -STABILITY_EPS
    }
}

/// Closes the rate loop (PID) and angle loop (P) around `plant`, the rate
/// response to moment. The angle is the integral of the rate.
///
/// With `P_theta = plant / s = n/d` and reduced PID `nc/dc` the characteristic
/// polynomial is `dc d + nc n (s + kp_outer)`, and
/// `S = (dc d + s nc n) / chi`, `T = kp_outer nc n / chi`,
/// `R = kp_outer nc d / chi` (angle reference to moment).
pub fn closed_loop(plant: &RationalTF, gains: &CascadedGains) -> Result<ClosedLoop> {
    gains.validate()?;
    let angle = plant.mul_raw(&RationalTF::integrator()).reduced();
    let (n, d) = (angle.num(), angle.den());
    // reduce so that ki = 0 or kd = 0 do not leave a cancelled pole behind
    let pid = gains.pid_tf().reduced();
    let (nc, dc) = (pid.num(), pid.den());
    let nn = poly::mul(nc, n);
    let dd = poly::mul(dc, d);
    let chi = poly::trim(&poly::add(&dd, &poly::mul(&nn, &[1.0, gains.kp_outer])));
    let s_num = poly::add(&dd, &poly::mul(&nn, &[1.0, 0.0]));
    let t_num = poly::scale(&nn, gains.kp_outer);
    let r_num = poly::scale(&poly::mul(nc, d), gains.kp_outer);
    let mk = |num: Vec<f64>| -> Result<RationalTF> {
        let tf = RationalTF::new(num, chi.clone()).map_err(|e| FtcError::ImproperLoop(e.to_string()))?;
        if !tf.is_proper() {
            return Err(FtcError::ImproperLoop(format!(
                "numerator degree {} above denominator degree {}",
                tf.num_degree(),
                tf.den_degree()
            )));
        }
        Ok(tf)
    };
    Ok(ClosedLoop { s: mk(s_num)?, t: mk(t_num)?, r: mk(r_num)?, characteristic: chi })
}

/// Rate response to commanded moment through the first-order actuator lag,
/// `plant(axis, V) * w_a / (s + w_a)`. Synthesis and mu-analysis use this.
pub fn design_plant(axis: Axis, p: &AircraftParameters, a: &AeroCoefficientTable, v: f64) -> Result<RationalTF> {
    let g = plant(axis, p, a, v, 0.0)?;
    let wa = p.actuator_bandwidth;
    Ok(g.mul_raw(&RationalTF::new(vec![wa], vec![1.0, wa])?).reduced())
}

/// The three weights of the stacked criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopWeights {
    pub ws: RationalTF,
    pub wt: RationalTF,
    pub wr: RationalTF,
}

/// Peak over `grid` of `sqrt(|Ws S|^2 + |Wt T|^2 + |Wr R|^2)`, refined by
/// golden-section search within one grid interval of the arg-max.
pub fn mixed_cost(
    s: &RationalTF,
    t: &RationalTF,
    r: &RationalTF,
    ws: &RationalTF,
    wt: &RationalTF,
    wr: &RationalTF,
    grid: &FrequencyGrid,
) -> f64 {
    let f = |w: f64| {
        let a = (ws.at(w) * s.at(w)).norm_sqr();
        let b = (wt.at(w) * t.at(w)).norm_sqr();
        let c = (wr.at(w) * r.at(w)).norm_sqr();
        (a + b + c).sqrt()
    };
    refined_peak(f, grid).1
}

pub fn loop_cost(cl: &ClosedLoop, w: &LoopWeights, grid: &FrequencyGrid) -> f64 {
    mixed_cost(&cl.s, &cl.t, &cl.r, &w.ws, &w.wt, &w.wr, grid)
}

/// Cost used by the optimiser: the mixed cost for stabilising gains, else
/// `INSTABILITY_PENALTY + max Re(pole)`.
pub fn penalized_cost(plant: &RationalTF, gains: &CascadedGains, w: &LoopWeights, grid: &FrequencyGrid) -> f64 {
    match closed_loop(plant, gains) {
        Ok(cl) => {
            let worst = cl.max_pole_real();
            if worst < -STABILITY_EPS {
                loop_cost(&cl, w, grid)
            } else {
                INSTABILITY_PENALTY + worst
            }
        }
        Err(_) => f64::INFINITY,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuneBudget {
    pub starts: usize,
    pub evals_per_start: usize,
    pub seed: u64,
}

impl Default for TuneBudget {
    fn default() -> Self {
        Self { starts: 8, evals_per_start: 2000, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisResult {
    pub gains: CascadedGains,
    pub gamma_achieved: f64,
    pub iterations: usize,
    pub stable: bool,
}

/// Plant inertia seen by the rate loop at high frequency.
fn effective_inertia(plant: &RationalTF) -> f64 {
    let n = plant.num();
    let d = plant.den();
    (d[0] / n[0]).abs()
}

/// Pole-placement style seed: inner rate loop four times faster than the
/// outer angle loop, integral corner a fifth of the inner bandwidth. Tries a
/// ladder of outer bandwidths until the loop is stable.
pub fn seed_gains(plant: &RationalTF, omega_b: f64) -> Result<CascadedGains> {
    let j = effective_inertia(plant);
    let base = omega_b.clamp(0.2, 2.0);
    for f in [1.0, 0.5, 2.0, 0.25, 4.0, 0.1, 10.0] {
        let wo = base * f;
        let wi = 4.0 * wo;
        let kp = 1.4 * j * wi;
        let g = CascadedGains { kp_outer: wo, kp, ki: kp * wi / 5.0, kd: 0.05 * kp / wi, tau_f: TAU_F };
        if closed_loop(plant, &g)?.is_stable() {
            return Ok(g);
        }
    }
    Err(FtcError::NoStabilizingGains("no stabilising seed found".into()))
}

/// Search box `(lower, upper)` for `kp_outer, kp, ki, kd`.
pub const GAIN_BOUNDS: [(f64, f64); 4] = [(1e-2, 1e2), (1e-2, 1e3), (1e-4, 1e3), (1e-6, 1e2)];

/// Lower bound on `ki / kp`, rad/s. The stacked cost cannot see input
/// disturbances, so without it the integral term drifts to zero.
pub const MIN_INTEGRAL_RATIO: f64 = 1.0;

fn gains_from_log(x: &[f64]) -> CascadedGains {
    let g = |i: usize| x[i].exp().clamp(GAIN_BOUNDS[i].0, GAIN_BOUNDS[i].1);
    let kp = g(1);
    let ki = g(2).max(MIN_INTEGRAL_RATIO * kp).min(GAIN_BOUNDS[2].1);
    CascadedGains { kp_outer: g(0), kp, ki, kd: g(3), tau_f: TAU_F }
}

fn log_of_gains(g: &CascadedGains) -> Vec<f64> {
    vec![g.kp_outer.ln(), g.kp.ln(), g.ki.ln(), g.kd.max(1e-12).ln()]
}

/// Minimises the penalised mixed cost over `(kp_outer, kp, ki, kd)` in log
/// coordinates with a multi-start Nelder-Mead, clamped to [`GAIN_BOUNDS`]. Start `k` scales the loop
/// frequency of `initial` by `10^(e_k / 4)` with `e = 0, -1, 1, -2, 2, ...`;
/// starts after the first get a seeded jitter. The filter constant stays at
/// `initial.tau_f`.
pub fn tune(
    plant: &RationalTF,
    weights: &LoopWeights,
    initial: &CascadedGains,
    budget: &TuneBudget,
    grid: &FrequencyGrid,
) -> Result<SynthesisResult> {
    initial.validate()?;
    let tau = initial.tau_f;
    let cost = |x: &[f64]| {
        let mut g = gains_from_log(x);
        g.tau_f = tau;
        penalized_cost(plant, &g, weights, grid)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let x0 = log_of_gains(initial);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let init_cost = cost(&x0);
    if init_cost < INSTABILITY_PENALTY {
        best = Some((init_cost, x0.clone()));
    }
    let mut evals = 1;
    for k in 0..budget.starts {
        let e = if k == 0 { 0.0 } else if k % 2 == 1 { -(k.div_ceil(2) as f64) } else { (k / 2) as f64 };
        let ln_c = e * std::f64::consts::LN_10 / 4.0;
        let mut start = x0.clone();
        start[0] += ln_c;
        start[1] += ln_c;
        start[2] += 2.0 * ln_c;
        if k > 0 {
            for v in start.iter_mut() {
                *v += rng.random_range(-0.1..0.1);
            }
        }
        let res = nelder_mead(&cost, &start, 0.5, budget.evals_per_start, 1e-10);
        evals += res.evaluations;
        let better = match &best {
            None => true,
            Some((c, _)) => res.value < *c,
        };
        if better && res.value < INSTABILITY_PENALTY {
            best = Some((res.value, res.x));
        }
    }
    let (_, x) = best.ok_or_else(|| FtcError::NoStabilizingGains(format!("no start stabilised the loop in {evals} evaluations")))?;
    let mut gains = gains_from_log(&x);
    gains.tau_f = tau;
    let cl = closed_loop(plant, &gains)?;
    let stable = cl.is_stable();
    if !stable {
        return Err(FtcError::NoStabilizingGains("optimum lost stability on re-evaluation".into()));
    }
    Ok(SynthesisResult { gains, gamma_achieved: loop_cost(&cl, weights, grid), iterations: evals, stable })
}

/// Cost slack the disturbance refinement may spend, relative to the tuned
/// optimum.
pub const DISTURBANCE_SLACK: f64 = 0.05;

/// Peak gain from an input moment disturbance to the angle,
/// `|P / (s + C P (s + kp_outer))|`.
pub fn disturbance_peak(plant: &RationalTF, gains: &CascadedGains, grid: &FrequencyGrid) -> f64 {
    let c = gains.pid_tf();
    let f = |w: f64| {
        let s = C64::new(0.0, w);
        let p = plant.at(w);
        (p / (s + c.at(w) * p * (s + gains.kp_outer))).norm()
    };
    refined_peak(f, grid).1
}

/// Secondary search from tuned gains: minimises [`disturbance_peak`] over
/// stabilising gains whose mixed cost stays within [`DISTURBANCE_SLACK`] of
/// the tuned optimum. Used where the mixed cost is flat near its optimum and
/// leaves the disturbance response undetermined.
pub fn refine_for_disturbance(
    plant: &RationalTF,
    weights: &LoopWeights,
    tuned: &SynthesisResult,
    budget: &TuneBudget,
    grid: &FrequencyGrid,
) -> Result<SynthesisResult> {
    let tau = tuned.gains.tau_f;
    let cap = tuned.gamma_achieved * (1.0 + DISTURBANCE_SLACK);
    let cost = |x: &[f64]| {
        let mut g = gains_from_log(x);
        g.tau_f = tau;
        match closed_loop(plant, &g) {
            Ok(cl) if cl.max_pole_real() < -STABILITY_EPS => {
                let m = loop_cost(&cl, weights, grid);
                if m <= cap {
                    disturbance_peak(plant, &g, grid)
                } else {
                    INSTABILITY_PENALTY * (1.0 + m - cap)
                }
            }
            _ => f64::INFINITY,
        }
    };
    let x0 = log_of_gains(&tuned.gains);
    let res = nelder_mead(&cost, &x0, 0.3, budget.evals_per_start, 1e-12);
    if !(res.value < cost(&x0)) {
        return Ok(tuned.clone());
    }
    let mut gains = gains_from_log(&res.x);
    gains.tau_f = tau;
    let cl = closed_loop(plant, &gains)?;
    Ok(SynthesisResult {
        gains,
        gamma_achieved: loop_cost(&cl, weights, grid),
        iterations: tuned.iterations + res.evaluations,
        stable: cl.is_stable(),
    })
}
