use serde::{Deserialize, Serialize};

use super::poly::{self, C64};
use super::tf::RationalTF;
use crate::error::{FtcError, Result};

pub const DEFAULT_GRID_POINTS: usize = 400;
pub const DEFAULT_GRID_MIN: f64 = 1e-3;
pub const DEFAULT_GRID_MAX: f64 = 1e3;

/// Strictly increasing positive angular frequencies in rad/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    omegas: Vec<f64>,
}

impl FrequencyGrid {
    pub fn new(omegas: Vec<f64>) -> Result<Self> {
        if omegas.is_empty() {
            return Err(FtcError::InvalidGrid("empty grid".into()));
        }
        if omegas.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(FtcError::InvalidGrid("frequencies must be finite and positive".into()));
        }
        if omegas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(FtcError::InvalidGrid("frequencies must be strictly increasing".into()));
        }
        Ok(Self { omegas })
    }

    pub fn logspace(min: f64, max: f64, n: usize) -> Result<Self> {
        if !(min > 0.0 && max > min && n >= 2) {
            return Err(FtcError::InvalidGrid(format!("bad logspace({min}, {max}, {n})")));
        }
        let (a, b) = (min.log10(), max.log10());
        let step = (b - a) / (n - 1) as f64;
        let omegas = (0..n).map(|k| 10f64.powf(a + step * k as f64)).collect();
        Self::new(omegas)
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }
}

impl Default for FrequencyGrid {
    fn default() -> Self {
        Self::logspace(DEFAULT_GRID_MIN, DEFAULT_GRID_MAX, DEFAULT_GRID_POINTS).expect("default grid")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponse {
    pub grid: FrequencyGrid,
    pub values: Vec<C64>,
}

impl FrequencyResponse {
    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }
}

pub fn freq_response(tf: &RationalTF, grid: &FrequencyGrid) -> Result<FrequencyResponse> {
    let mut values = Vec::with_capacity(grid.len());
    for &w in grid.omegas() {
        let s = C64::new(0.0, w);
        let d = poly::eval(tf.den(), s);
        let scale = poly::eval_scale(tf.den(), w);
        if d.norm() < 1e-14 * scale {
            return Err(FtcError::PoleOnGrid { omega: w });
        }
        values.push(poly::eval(tf.num(), s) / d);
    }
    Ok(FrequencyResponse { grid: grid.clone(), values })
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section maximisation of `f` over `[lo, hi]` in log-frequency.
/// Returns `(omega, f(omega))`, never worse than the better endpoint.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, iters: usize) -> (f64, f64) {
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c.exp());
    let mut fd = f(d.exp());
    for _ in 0..iters {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c.exp());
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d.exp());
        }
    }
    let mut best = if fc > fd { (c.exp(), fc) } else { (d.exp(), fd) };
    for w in [lo, hi] {
        let v = f(w);
        if v > best.1 {
            best = (w, v);
        }
    }
    best
}

/// Peak of a nonnegative frequency function over `grid`, refined by golden
/// section search within one grid interval of the grid arg-max.
pub fn refined_peak<F: Fn(f64) -> f64>(f: F, grid: &FrequencyGrid) -> (f64, f64) {
    let w = grid.omegas();
    let (k, v) = w
        .iter()
        .enumerate()
        .map(|(k, &om)| (k, f(om)))
        .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    let lo = w[k.saturating_sub(1)];
    let hi = w[(k + 1).min(w.len() - 1)];
    if hi <= lo {
        return (w[k], v);
    }
    let (wr, vr) = golden_max(&f, lo, hi, 40);
    if vr > v {
        (wr, vr)
    } else {
        (w[k], v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_shape() {
        let g = FrequencyGrid::default();
        assert_eq!(g.len(), 400);
        assert!((g.omegas()[0] - 1e-3).abs() < 1e-15);
        assert!((g.omegas()[399] - 1e3).abs() < 1e-9);
    }

    #[test]
    fn grid_validation() {
        assert!(FrequencyGrid::new(vec![1.0, 1.0]).is_err());
        assert!(FrequencyGrid::new(vec![0.0, 1.0]).is_err());
        assert!(FrequencyGrid::new(vec![]).is_err());
    }

    #[test]
    fn first_order_lag_at_corner() {
        let g = RationalTF::new(vec![1.0], vec![1.0, 1.0]).unwrap();
        let r = freq_response(&g, &FrequencyGrid::new(vec![1.0]).unwrap()).unwrap();
        let v = r.values[0];
        assert!((v.norm() - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!((v.arg().to_degrees() + 45.0).abs() < 1e-10);
    }

    #[test]
    fn static_gain_and_integrator() {
        let grid = FrequencyGrid::new(vec![10.0]).unwrap();
        let k = freq_response(&RationalTF::constant(2.0), &grid).unwrap();
        assert_eq!(k.values[0], C64::new(2.0, 0.0));
        let i = freq_response(&RationalTF::integrator(), &grid).unwrap();
        assert!((i.values[0].norm() - 0.1).abs() < 1e-15);
        assert!((i.values[0].arg().to_degrees() + 90.0).abs() < 1e-12);
    }

    #[test]
    fn imaginary_axis_pole_on_grid() {
        let g = RationalTF::new(vec![1.0], vec![1.0, 0.0, 4.0]).unwrap();
        let grid = FrequencyGrid::new(vec![1.0, 2.0]).unwrap();
        assert_eq!(freq_response(&g, &grid), Err(FtcError::PoleOnGrid { omega: 2.0 }));
    }

    #[test]
    fn golden_finds_parabola_peak() {
        let (w, v) = golden_max(|w| -(w.ln() - 1.0).powi(2), 0.5, 10.0, 80);
        assert!((w - 1f64.exp()).abs() < 1e-6);
        assert!(v.abs() < 1e-12);
    }
}
