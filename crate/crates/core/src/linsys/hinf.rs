//! H-infinity norm of stable SISO transfer functions.
//!
//! A level `gamma` is exceeded by `|G(j w)|` somewhere iff the Hamiltonian
//! built from a state-space realization at that level has an eigenvalue on
//! the imaginary axis. The norm is bracketed from below by dense evaluation
//! and from above by doubling, then bisected. Whenever the Hamiltonian reports
//! crossing frequencies the lower bound is lifted by evaluating `|G|` there,
//! so a spurious eigenvalue can never move the bracket the wrong way.

use nalgebra::DMatrix;

use super::freq::{golden_max, FrequencyGrid};
use super::tf::RationalTF;
use crate::error::{FtcError, Result};

/// Relative width of the final bracket.
pub const HINF_REL_TOL: f64 = 1e-4;

struct Realization {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: f64,
}

/// Controllable canonical realization of `tf` (assumed proper, den degree >= 1).
fn realize(tf: &RationalTF) -> Realization {
    let den = tf.den();
    let n = den.len() - 1;
    let lead = den[0];
    let a_coef: Vec<f64> = den[1..].iter().map(|c| c / lead).collect();
    let mut num = vec![0.0; n + 1];
    let src = tf.num();
    for (i, c) in src.iter().enumerate() {
        num[n + 1 - src.len() + i] = c / lead;
    }
    let d = num[0];
    // strictly proper remainder r(s) = num(s) - d * den(s) / lead
    let r: Vec<f64> = (1..=n).map(|i| num[i] - d * a_coef[i - 1]).collect();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n.saturating_sub(1) {
        a[(i, i + 1)] = 1.0;
    }
    for j in 0..n {
        a[(n - 1, j)] = -a_coef[n - 1 - j];
    }
    let mut b = DMatrix::zeros(n, 1);
    b[(n - 1, 0)] = 1.0;
    let mut c = DMatrix::zeros(1, n);
    for j in 0..n {
        c[(0, j)] = r[n - 1 - j];
    }
    Realization { a, b, c, d }
}

/// Frequency rescaling `s -> w0 s` so the constant term of the monic
/// denominator is of order one. Leaves the norm unchanged.
fn rescale(tf: &RationalTF) -> (RationalTF, f64) {
    let den = tf.den();
    let n = den.len() - 1;
    let last = den[n].abs();
    let w0 = if last > 0.0 && den[0] != 0.0 { (last / den[0].abs()).powf(1.0 / n as f64) } else { 1.0 };
    let scale_poly = |p: &[f64]| -> Vec<f64> {
        let m = p.len() - 1;
        p.iter().enumerate().map(|(i, c)| c * w0.powi((m - i) as i32)).collect()
    };
    let num = scale_poly(tf.num());
    let den = scale_poly(den);
    (RationalTF::new(num, den).expect("rescaled tf"), w0)
}

/// Frequencies (>= 0) at which `gamma` is a singular value of G(j w).
fn crossing_frequencies(rz: &Realization, gamma: f64) -> Vec<f64> {
    let n = rz.a.nrows();
    let r = gamma * gamma - rz.d * rz.d;
    let a_bar = &rz.a + &rz.b * &rz.c * (rz.d / r);
    let top_right = &rz.b * rz.b.transpose() / r;
    let bottom_left = -(rz.c.transpose() * &rz.c) * (1.0 + rz.d * rz.d / r);
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(&a_bar);
    h.view_mut((0, n), (n, n)).copy_from(&top_right);
    h.view_mut((n, 0), (n, n)).copy_from(&bottom_left);
    h.view_mut((n, n), (n, n)).copy_from(&(-a_bar.transpose()));
    let scale = h.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let mut out: Vec<f64> = super::eig::eigenvalues(&h)
        .iter()
        .filter(|l| l.im >= 0.0 && l.re.abs() <= 1e-7 * scale.max(l.norm()))
        .map(|l| l.im)
        .collect();
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

/// `sup_w |tf(j w)|` for a stable proper transfer function.
pub fn hinf_norm(tf: &RationalTF) -> Result<f64> {
    if !tf.is_proper() {
        return Err(FtcError::InvalidTransferFunction("H-infinity norm of improper system".into()));
    }
    if !tf.is_stable() {
        return Err(FtcError::UnstableSystem);
    }
    if tf.is_zero() {
        return Ok(0.0);
    }
    if tf.den_degree() == 0 {
        return Ok((tf.num()[0] / tf.den()[0]).abs());
    }
    let (g, _) = rescale(tf);
    let mag = |w: f64| g.at(w).norm();

    // lower bound: DC, high frequency, a log grid, and pole frequencies
    let mut lo = g.dc_gain().max(g.hf_gain());
    let grid = FrequencyGrid::logspace(1e-4, 1e4, 400).expect("grid");
    let mut best_w = 0.0;
    for &w in grid.omegas() {
        let v = mag(w);
        if v > lo {
            lo = v;
            best_w = w;
        }
    }
    for p in g.poles()? {
        for w in [p.im.abs(), p.norm()] {
            if w > 0.0 {
                let v = mag(w);
                if v > lo {
                    lo = v;
                    best_w = w;
                }
            }
        }
    }
    if best_w > 0.0 {
        let (_, v) = golden_max(mag, best_w * 0.9, best_w * 1.1, 40);
        lo = lo.max(v);
    }
    if lo == 0.0 {
        return Ok(0.0);
    }

    let rz = realize(&g);
    let lift = |gamma: f64, lo: f64| -> Option<f64> {
        let ws = crossing_frequencies(&rz, gamma);
        if ws.is_empty() {
            return None;
        }
        let mut cand = lo;
        for &w in &ws {
            cand = cand.max(mag(w));
        }
        for pair in ws.windows(2) {
            cand = cand.max(mag(0.5 * (pair[0] + pair[1])));
        }
        Some(cand)
    };

    let mut hi = lo * (1.0 + HINF_REL_TOL);
    loop {
        match lift(hi, lo) {
            Some(v) if v > lo * (1.0 + 1e-12) => {
                lo = v;
                hi = 2.0 * hi.max(v);
            }
            _ => break,
        }
        if !hi.is_finite() {
            return Err(FtcError::UnstableSystem);
        }
    }
    for _ in 0..200 {
        if hi - lo <= HINF_REL_TOL * lo {
            break;
        }
        let mid = 0.5 * (lo + hi);
        match lift(mid, lo) {
            Some(v) if v > lo => lo = v.min(hi),
            _ => hi = mid,
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_oracle(tf: &RationalTF) -> f64 {
        let grid = FrequencyGrid::logspace(1e-4, 1e4, 100_000).unwrap();
        grid.omegas().iter().map(|w| tf.at(*w).norm()).fold(tf.dc_gain(), f64::max)
    }

    #[test]
    fn static_gain() {
        assert_eq!(hinf_norm(&RationalTF::constant(-3.0)).unwrap(), 3.0);
    }

    #[test]
    fn first_order_peak_at_dc() {
        let g = RationalTF::new(vec![1.0], vec![1.0, 1.0]).unwrap();
        let n = hinf_norm(&g).unwrap();
        assert!((n - 1.0).abs() <= 1e-4);
    }

    #[test]
    fn lightly_damped_second_order() {
        let (z, wn) = (0.1f64, 2.0f64);
        let g = RationalTF::new(vec![wn * wn], vec![1.0, 2.0 * z * wn, wn * wn]).unwrap();
        let n = hinf_norm(&g).unwrap();
        let analytic = 1.0 / (2.0 * z * (1.0 - z * z).sqrt());
        // frozen from the dense sweep: 5.025189...
        assert!((analytic - 5.025_189_8).abs() < 1e-6);
        assert!((n - analytic).abs() / analytic < 1e-4, "{n}");
        let oracle = dense_oracle(&g);
        assert!(n >= oracle * (1.0 - 1e-9) && n <= oracle * (1.0 + 1e-3));
    }

    #[test]
    fn biproper_high_frequency_limit() {
        // (2s + 1) / (s + 1): peak 2 at infinity
        let g = RationalTF::new(vec![2.0, 1.0], vec![1.0, 1.0]).unwrap();
        let n = hinf_norm(&g).unwrap();
        assert!((n - 2.0).abs() / 2.0 <= 1e-4);
    }

    #[test]
    fn unstable_rejected() {
        let g = RationalTF::new(vec![1.0], vec![1.0, -1.0]).unwrap();
        assert_eq!(hinf_norm(&g), Err(FtcError::UnstableSystem));
    }

    #[test]
    fn sharp_resonance_beats_grid() {
        let (z, wn) = (0.005f64, 37.0f64);
        let g = RationalTF::new(vec![wn * wn], vec![1.0, 2.0 * z * wn, wn * wn]).unwrap();
        let n = hinf_norm(&g).unwrap();
        let analytic = 1.0 / (2.0 * z * (1.0 - z * z).sqrt());
        assert!((n - analytic).abs() / analytic < 1e-4, "{n} vs {analytic}");
    }
}
