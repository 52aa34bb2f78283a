//! Relative-error envelopes of the perturbed plant family around each design
//! point and first-order multiplicative weights that cover them.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{FtcError, Result};
use crate::linsys::{FrequencyGrid, RationalTF, C64};
use crate::models::{plant, AeroCoefficientTable, AircraftParameters, Axis, DesignPoint};

pub const DEFAULT_V_SAMPLES: usize = 9;
pub const DEFAULT_GAMMA_SAMPLES: usize = 7;

/// Maximum uniform gain inflation (20 dB) tolerated when enforcing coverage.
pub const MAX_INFLATION: f64 = 10.0;

/// (airspeed, loss-of-effectiveness) pairs at which the perturbed plants are
/// sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationGrid {
    pub airspeeds: Vec<f64>,
    pub gammas: Vec<f64>,
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|k| if k == n - 1 { b } else { a + (b - a) * k as f64 / (n - 1) as f64 }).collect()
}

impl PerturbationGrid {
    pub fn for_point(point: &DesignPoint, n_v: usize, n_gamma: usize) -> Self {
        let mut airspeeds = linspace(point.v_min, point.v_max, n_v.max(2));
        if !airspeeds.contains(&point.v_bar) {
            // swap the closest interior sample for the nominal airspeed
            let k = (1..airspeeds.len() - 1)
                .min_by(|&i, &j| {
                    (airspeeds[i] - point.v_bar).abs().partial_cmp(&(airspeeds[j] - point.v_bar).abs()).unwrap()
                })
                .unwrap_or(0);
            airspeeds[k] = point.v_bar;
        }
        let gammas = linspace(point.gamma_range.0, point.gamma_range.1, n_gamma.max(2));
        Self { airspeeds, gammas }
    }

    pub fn default_for(point: &DesignPoint) -> Self {
        Self::for_point(point, DEFAULT_V_SAMPLES, DEFAULT_GAMMA_SAMPLES)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.airspeeds.iter().flat_map(move |v| self.gammas.iter().map(move |g| (*v, *g)))
    }

    pub fn len(&self) -> usize {
        self.airspeeds.len() * self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelativeErrorEnvelope {
    pub grid: FrequencyGrid,
    pub l: Vec<f64>,
}

/// `W_t(s) = k (s/z + 1) / (s/p + 1)`; `z == p` is the flat weight `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyWeight {
    pub gain: f64,
    pub zero: f64,
    pub pole: f64,
}

impl UncertaintyWeight {
    pub fn flat(gain: f64) -> Self {
        Self { gain, zero: 1.0, pole: 1.0 }
    }

    pub fn tf(&self) -> RationalTF {
        if self.zero == self.pole || self.gain == 0.0 {
            return RationalTF::constant(self.gain);
        }
        RationalTF::new(vec![self.gain / self.zero, self.gain], vec![1.0 / self.pole, 1.0]).expect("weight tf")
    }

    pub fn magnitude(&self, omega: f64) -> f64 {
        self.gain * shape_mag(self.zero, self.pole, omega)
    }

    /// Same weight with its gain multiplied by `c`.
    pub fn inflated(&self, c: f64) -> Self {
        Self { gain: self.gain * c, ..self.clone() }
    }
}

fn shape_mag(z: f64, p: f64, w: f64) -> f64 {
    if z == p {
        return 1.0;
    }
    ((1.0 + (w / z).powi(2)) / (1.0 + (w / p).powi(2))).sqrt()
}

/// Plants at every pair of the perturbation grid, in airspeed-major order.
pub fn perturbed_samples(
    axis: Axis,
    grid: &PerturbationGrid,
    p: &AircraftParameters,
    a: &AeroCoefficientTable,
) -> Result<Vec<RationalTF>> {
    grid.pairs().map(|(v, g)| plant(axis, p, a, v, g)).collect()
}

/// Pointwise maximum of `|G_p / G_nom - 1|` over `samples`.
pub fn envelope_from_samples(
    nominal: &RationalTF,
    samples: &[RationalTF],
    grid: &FrequencyGrid,
) -> Result<RelativeErrorEnvelope> {
    let mut l = Vec::with_capacity(grid.len());
    for &w in grid.omegas() {
        let g0 = nominal.at(w);
        if g0.norm() < 1e-14 || !g0.norm().is_finite() {
            return Err(FtcError::NominalZero { omega: w });
        }
        let worst = samples
            .iter()
            .map(|g| (g.at(w) / g0 - C64::new(1.0, 0.0)).norm())
            .fold(0.0, f64::max);
        l.push(worst);
    }
    Ok(RelativeErrorEnvelope { grid: grid.clone(), l })
}

pub fn relative_error_envelope(
    axis: Axis,
    point: &DesignPoint,
    p: &AircraftParameters,
    a: &AeroCoefficientTable,
    grid: &FrequencyGrid,
) -> Result<RelativeErrorEnvelope> {
    let pgrid = PerturbationGrid::default_for(point);
    let nominal = plant(axis, p, a, point.v_bar, 0.0)?;
    let samples = perturbed_samples(axis, &pgrid, p, a)?;
    envelope_from_samples(&nominal, &samples, grid)
}

/// Log-magnitude residual of the coverage-tight fit with corner frequencies
/// `(z, p)`; returns `(sum of squares, log gain, log of unconstrained gain)`.
fn fit_residual(log_l: &[(f64, f64)], z: f64, p: f64) -> (f64, f64, f64) {
    let mut max_gap = f64::NEG_INFINITY;
    let mut mean_gap = 0.0;
    for &(w, ll) in log_l {
        let gap = ll - shape_mag(z, p, w).ln();
        max_gap = max_gap.max(gap);
        mean_gap += gap;
    }
    mean_gap /= log_l.len() as f64;
    let ss = log_l.iter().map(|&(w, ll)| (shape_mag(z, p, w).ln() + max_gap - ll).powi(2)).sum();
    (ss, max_gap, mean_gap)
}

/// First-order cover of the envelope.
///
/// Corner frequencies are searched on a log grid (coarse, then refined);
/// for each candidate the gain is set to the smallest value that covers every
/// envelope sample, and the candidate with the least log-magnitude squared
/// error wins. A final uniform inflation absorbs rounding so that
/// `|W_t(j w_k)| >= l(w_k)` holds at every grid point.
pub fn fit_weight(env: &RelativeErrorEnvelope) -> Result<UncertaintyWeight> {
    if env.l.iter().any(|v| !v.is_finite()) {
        return Err(FtcError::FitFailure("envelope is not finite".into()));
    }
    let log_l: Vec<(f64, f64)> = env
        .grid
        .omegas()
        .iter()
        .zip(&env.l)
        .filter(|(_, l)| **l > 1e-12)
        .map(|(w, l)| (*w, l.ln()))
        .collect();
    if log_l.is_empty() {
        return Ok(UncertaintyWeight::flat(0.0));
    }

    let mut best = (f64::INFINITY, 1.0, 1.0, 0.0, 0.0);
    let consider = |best: &mut (f64, f64, f64, f64, f64), z: f64, p: f64| {
        let (ss, lk, lk_ls) = fit_residual(&log_l, z, p);
        if ss < best.0 - 1e-12 {
            *best = (ss, z, p, lk, lk_ls);
        }
    };
    // flat candidate first so that ties keep the degenerate fit
    consider(&mut best, 1.0, 1.0);
    let coarse: Vec<f64> = (0..=80).map(|k| 10f64.powf(-4.0 + 0.1 * k as f64)).collect();
    for &z in &coarse {
        for &p in &coarse {
            if z != p {
                consider(&mut best, z, p);
            }
        }
    }
    let (_, z0, p0, _, _) = best;
    if z0 != p0 {
        for i in -10..=10 {
            for j in -10..=10 {
                let z = z0 * 10f64.powf(0.01 * i as f64);
                let p = p0 * 10f64.powf(0.01 * j as f64);
                if z != p {
                    consider(&mut best, z, p);
                }
            }
        }
    }
    let (_, z, p, log_k, log_k_ls) = best;
    if log_k - log_k_ls > MAX_INFLATION.ln() {
        return Err(FtcError::FitFailure(format!(
            "coverage needs {:.1} dB of inflation over the least-squares gain",
            20.0 * (log_k - log_k_ls) / std::f64::consts::LN_10
        )));
    }
    let mut w = UncertaintyWeight { gain: log_k.exp(), zero: z, pole: p };
    // absorb rounding in exp/ln so coverage is exact on the grid
    let shortfall = env
        .grid
        .omegas()
        .iter()
        .zip(&env.l)
        .map(|(om, l)| l / w.magnitude(*om))
        .fold(1.0, f64::max);
    w.gain *= shortfall * (1.0 + 1e-12);
    Ok(w)
}

/// `omega, l, |W_t|` rows for plotting.
pub fn envelope_csv(env: &RelativeErrorEnvelope, weight: &UncertaintyWeight) -> String {
    let mut out = String::from("omega,l,W_t\n");
    for (w, l) in env.grid.omegas().iter().zip(&env.l) {
        let _ = writeln!(out, "{w:.9e},{l:.9e},{:.9e}", weight.magnitude(*w));
    }
    out
}

/// Envelope and fitted weight for one (axis, point) problem.
#[derive(Debug, Clone)]
pub struct AxisUncertainty {
    pub axis: Axis,
    pub point: DesignPoint,
    pub envelope: RelativeErrorEnvelope,
    pub weight: UncertaintyWeight,
}

pub fn analyze_point(
    axis: Axis,
    point: &DesignPoint,
    p: &AircraftParameters,
    a: &AeroCoefficientTable,
    grid: &FrequencyGrid,
) -> Result<AxisUncertainty> {
    let envelope = relative_error_envelope(axis, point, p, a, grid)?;
    let weight = fit_weight(&envelope)?;
    Ok(AxisUncertainty { axis, point: *point, envelope, weight })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{design_points, Airframe};

    fn fx() -> Airframe {
        Airframe::fixture()
    }

    #[test]
    fn grid_contains_nominal_and_corners() {
        for pt in design_points() {
            let g = PerturbationGrid::default_for(&pt);
            assert_eq!(g.len(), 63);
            assert!(g.airspeeds.contains(&pt.v_bar));
            for v in [pt.v_min, pt.v_max] {
                assert!(g.airspeeds.contains(&v));
            }
            assert_eq!(g.gammas.first(), Some(&0.0));
            assert_eq!(g.gammas.last(), Some(&0.6));
            assert_eq!(g.pairs().filter(|&(v, gm)| v == pt.v_bar && gm == 0.0).count(), 1);
        }
    }

    #[test]
    fn gamma_only_family_gives_flat_point_six() {
        let f = fx();
        let pt = design_points()[2];
        let nominal = plant(Axis::Pitch, &f.params, &f.aero, pt.v_bar, 0.0).unwrap();
        let samples: Vec<_> = (0..7)
            .map(|k| plant(Axis::Pitch, &f.params, &f.aero, pt.v_bar, k as f64 / 10.0).unwrap())
            .collect();
        let env = envelope_from_samples(&nominal, &samples, &FrequencyGrid::default()).unwrap();
        for l in &env.l {
            assert!((l - 0.6).abs() < 1e-12);
        }
        let w = fit_weight(&env).unwrap();
        assert_eq!(w.zero, w.pole);
        assert!((w.gain - 0.6).abs() < 1e-9);
        assert_eq!(w.tf().den_degree(), 0);
    }

    #[test]
    fn nominal_only_gives_zero() {
        let f = fx();
        let nominal = plant(Axis::Roll, &f.params, &f.aero, 7.0, 0.0).unwrap();
        let env = envelope_from_samples(&nominal, std::slice::from_ref(&nominal), &FrequencyGrid::default()).unwrap();
        assert!(env.l.iter().all(|l| *l == 0.0));
    }

    #[test]
    fn single_scalar_loss_fits_flat() {
        let f = fx();
        let nominal = plant(Axis::Yaw, &f.params, &f.aero, 10.0, 0.0).unwrap();
        let s = plant(Axis::Yaw, &f.params, &f.aero, 10.0, 0.3).unwrap();
        let env = envelope_from_samples(&nominal, &[s], &FrequencyGrid::default()).unwrap();
        let w = fit_weight(&env).unwrap();
        assert_eq!(w.zero, w.pole);
        assert!((w.gain - 0.3).abs() < 1e-9);
    }

    #[test]
    fn perturbed_sample_count_and_scaling() {
        let f = fx();
        let pt = design_points()[3];
        let grid = PerturbationGrid::default_for(&pt);
        let plants = perturbed_samples(Axis::Roll, &grid, &f.params, &f.aero).unwrap();
        assert_eq!(plants.len(), 63);
        // airspeed-major: index 0 is (v0, 0.0), index 6 is (v0, 0.6)
        for chunk in plants.chunks(7) {
            let ratio = chunk[6].at(0.0).norm() / chunk[0].at(0.0).norm();
            assert!((ratio - 0.4).abs() < 1e-12);
        }
    }

    #[test]
    fn pitch_point_three_hand_cross_check() {
        // one frequency, two samples, evaluated directly from the plant formula
        let f = fx();
        let pt = design_points()[2];
        let w = 0.5;
        let nominal = plant(Axis::Pitch, &f.params, &f.aero, 4.0, 0.0).unwrap();
        let s1 = plant(Axis::Pitch, &f.params, &f.aero, 2.5, 0.0).unwrap();
        let s2 = plant(Axis::Pitch, &f.params, &f.aero, 5.5, 0.6).unwrap();
        let env =
            envelope_from_samples(&nominal, &[s1.clone(), s2.clone()], &FrequencyGrid::new(vec![w]).unwrap()).unwrap();
        let manual = |v: f64, g: f64| {
            let p = &f.params;
            let den = |v: f64| {
                let mq = crate::models::pitch_damping(p, &f.aero, v);
                let ma = crate::models::pitch_stiffness(p, &f.aero, v);
                C64::new(-p.jy * w * w - ma, -mq * w)
            };
            ((1.0 - g) * den(4.0) / den(v) - C64::new(1.0, 0.0)).norm()
        };
        let want = manual(2.5, 0.0).max(manual(5.5, 0.6));
        assert!((env.l[0] - want).abs() < 1e-12);
        let full = relative_error_envelope(Axis::Pitch, &pt, &f.params, &f.aero, &FrequencyGrid::default()).unwrap();
        assert!(full.l.iter().all(|l| *l >= 0.6 - 1e-9));
    }

    #[test]
    fn weights_cover_all_envelopes() {
        let f = fx();
        let grid = FrequencyGrid::default();
        for pt in design_points() {
            for axis in Axis::ALL {
                let u = analyze_point(axis, &pt, &f.params, &f.aero, &grid).unwrap();
                for (w, l) in grid.omegas().iter().zip(&u.envelope.l) {
                    assert!(u.weight.magnitude(*w) >= l - 1e-9, "{axis} {}", pt.index);
                }
                assert!(u.weight.zero > 0.0 && u.weight.pole > 0.0);
            }
        }
    }

    #[test]
    fn larger_sample_set_dominates() {
        let f = fx();
        let pt = design_points()[4];
        let grid = FrequencyGrid::default();
        let nominal = plant(Axis::Roll, &f.params, &f.aero, pt.v_bar, 0.0).unwrap();
        let all = perturbed_samples(Axis::Roll, &PerturbationGrid::default_for(&pt), &f.params, &f.aero).unwrap();
        let small = envelope_from_samples(&nominal, &all[..20], &grid).unwrap();
        let big = envelope_from_samples(&nominal, &all, &grid).unwrap();
        for (a, b) in small.l.iter().zip(&big.l) {
            assert!(b >= a);
        }
    }

    #[test]
    fn csv_has_header_and_rows() {
        let env = RelativeErrorEnvelope { grid: FrequencyGrid::new(vec![1.0, 2.0]).unwrap(), l: vec![0.6, 0.7] };
        let csv = envelope_csv(&env, &UncertaintyWeight::flat(0.7));
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("omega,l,W_t"));
    }
}
