use serde::{Deserialize, Serialize};

use super::poly::{self, C64};
use crate::error::{FtcError, Result};

/// Real stability margin: a pole counts as stable only when its real part is
/// below `-STABILITY_EPS`.
pub const STABILITY_EPS: f64 = 1e-9;

/// Relative distance under which a numerator root and a denominator root are
/// treated as the same factor and cancelled.
pub const CANCEL_TOL: f64 = 1e-8;

/// Continuous-time SISO transfer function `num(s) / den(s)` with real
/// coefficients in descending powers of `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalTF {
    num: Vec<f64>,
    den: Vec<f64>,
}

impl RationalTF {
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        if num.iter().chain(den.iter()).any(|c| !c.is_finite()) {
            return Err(FtcError::InvalidTransferFunction("non-finite coefficient".into()));
        }
        let den = poly::trim(&den);
        if poly::is_zero(&den) {
            return Err(FtcError::InvalidTransferFunction("zero denominator".into()));
        }
        let num = poly::trim(&num);
        Ok(Self { num, den })
    }

    pub fn constant(k: f64) -> Self {
        Self { num: vec![k], den: vec![1.0] }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// `k / (s + a)`-style helpers are built with `new`; this one is `1/s`.
    pub fn integrator() -> Self {
        Self { num: vec![1.0], den: vec![1.0, 0.0] }
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }

    pub fn den(&self) -> &[f64] {
        &self.den
    }

    pub fn num_degree(&self) -> usize {
        if poly::is_zero(&self.num) {
            0
        } else {
            self.num.len() - 1
        }
    }

    pub fn den_degree(&self) -> usize {
        self.den.len() - 1
    }

    pub fn is_proper(&self) -> bool {
        poly::is_zero(&self.num) || self.num_degree() <= self.den_degree()
    }

    pub fn is_zero(&self) -> bool {
        poly::is_zero(&self.num)
    }

    pub fn eval(&self, s: C64) -> C64 {
        poly::eval(&self.num, s) / poly::eval(&self.den, s)
    }

    /// Value at `s = j omega`.
    pub fn at(&self, omega: f64) -> C64 {
        self.eval(C64::new(0.0, omega))
    }

    /// Limit of `|G(j omega)|` as omega goes to infinity (proper systems).
    pub fn hf_gain(&self) -> f64 {
        if self.is_zero() || self.num_degree() < self.den_degree() {
            0.0
        } else {
            (self.num[0] / self.den[0]).abs()
        }
    }

    /// `|G(0)|`; infinite when there is a pole at the origin.
    pub fn dc_gain(&self) -> f64 {
        let n = *self.num.last().unwrap();
        let d = *self.den.last().unwrap();
        (n / d).abs()
    }

    pub fn poles(&self) -> Result<Vec<C64>> {
        if self.den_degree() == 0 {
            return Err(FtcError::DegenerateDenominator);
        }
        Ok(poly::roots(&self.den))
    }

    pub fn zeros(&self) -> Vec<C64> {
        if self.is_zero() {
            return Vec::new();
        }
        poly::roots(&self.num)
    }

    /// True iff every pole lies strictly left of `-STABILITY_EPS`. A static
    /// gain has no poles and is stable.
    pub fn is_stable(&self) -> bool {
        if self.den_degree() == 0 {
            return true;
        }
        poly::roots(&self.den).iter().all(|p| p.re < -STABILITY_EPS)
    }

    /// Scales numerator and denominator so the denominator is monic.
    pub fn normalized(&self) -> Self {
        let lead = self.den[0];
        Self { num: poly::scale(&self.num, 1.0 / lead), den: poly::scale(&self.den, 1.0 / lead) }
    }

    /// Cancels common pole/zero factors. Exact factors of `s` are removed
    /// first, the remaining roots are paired within `CANCEL_TOL`.
    pub fn reduced(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut num = self.num.clone();
        let mut den = self.den.clone();
        while num.len() > 1 && den.len() > 1 && *num.last().unwrap() == 0.0 && *den.last().unwrap() == 0.0 {
            num.pop();
            den.pop();
        }
        if num.len() > 1 && den.len() > 1 {
            let zs = poly::roots(&num);
            let mut ps = poly::roots(&den);
            let mut common = Vec::new();
            for z in zs {
                let hit = ps
                    .iter()
                    .position(|p| (p - z).norm() <= CANCEL_TOL * z.norm().max(1.0));
                if let Some(i) = hit {
                    common.push(ps.remove(i));
                }
            }
            // keep only complete conjugate pairs so the factor stays real
            let common: Vec<C64> = common
                .iter()
                .filter(|c| {
                    c.im == 0.0
                        || common.iter().any(|d| (d.conj() - **c).norm() <= CANCEL_TOL * c.norm().max(1.0))
                })
                .copied()
                .collect();
            if !common.is_empty() {
                let factor = poly::from_roots(&common);
                num = poly::div_quotient(&num, &factor);
                den = poly::div_quotient(&den, &factor);
            }
        }
        Self { num: poly::trim(&num), den: poly::trim(&den) }
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self { num: poly::scale(&self.num, k), den: self.den.clone() }
    }

    /// Product without cancellation.
    pub fn mul_raw(&self, other: &Self) -> Self {
        Self { num: poly::mul(&self.num, &other.num), den: poly::mul(&self.den, &other.den) }
    }

    pub fn add(&self, other: &Self) -> Self {
        let num = poly::add(&poly::mul(&self.num, &other.den), &poly::mul(&other.num, &self.den));
        Self { num: poly::trim(&num), den: poly::mul(&self.den, &other.den) }.reduced()
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(-1.0))
    }

    /// `1 - G`.
    pub fn one_minus(&self) -> Self {
        Self::constant(1.0).sub(self)
    }
}

/// Cascade `a` then `b`, with common-factor cleanup.
pub fn series(a: &RationalTF, b: &RationalTF) -> RationalTF {
    a.mul_raw(b).reduced()
}

/// Unity negative feedback around `loop_tf`: `L / (1 + L)`.
pub fn feedback_unity(loop_tf: &RationalTF) -> Result<RationalTF> {
    let den = poly::add(loop_tf.den(), loop_tf.num());
    let scale = loop_tf.den().iter().chain(loop_tf.num()).fold(0.0f64, |m, c| m.max(c.abs()));
    if den.iter().all(|c| c.abs() <= 1e-14 * scale) {
        return Err(FtcError::AlgebraicLoop);
    }
    Ok(RationalTF::new(loop_tf.num().to_vec(), den)?.reduced())
}

pub fn poles(tf: &RationalTF) -> Result<Vec<C64>> {
    tf.poles()
}

pub fn is_stable(tf: &RationalTF) -> bool {
    tf.is_stable()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tf(n: &[f64], d: &[f64]) -> RationalTF {
        RationalTF::new(n.to_vec(), d.to_vec()).unwrap()
    }

    #[test]
    fn rejects_bad_coefficients() {
        assert!(RationalTF::new(vec![1.0], vec![0.0, 0.0]).is_err());
        assert!(RationalTF::new(vec![f64::NAN], vec![1.0]).is_err());
    }

    #[test]
    fn first_order_lag_poles_and_stability() {
        let g = tf(&[1.0], &[1.0, 1.0]);
        let p = g.poles().unwrap();
        assert_eq!(p.len(), 1);
        assert!((p[0].re + 1.0).abs() < 1e-15);
        assert!(g.is_stable());
        assert!(!tf(&[1.0], &[1.0, -1.0]).is_stable());
        assert!(!tf(&[1.0], &[1.0, 0.0]).is_stable());
    }

    #[test]
    fn constant_denominator_has_no_poles() {
        assert_eq!(RationalTF::constant(2.0).poles(), Err(FtcError::DegenerateDenominator));
    }

    #[test]
    fn quadratic_poles() {
        let p = tf(&[1.0], &[1.0, 2.0, 2.0]).poles().unwrap();
        for z in p {
            assert!((z.re + 1.0).abs() < 1e-12 && (z.im.abs() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn series_cancels_common_factor() {
        let g = series(&tf(&[1.0], &[1.0, 1.0]), &tf(&[1.0, 1.0], &[1.0, 2.0])).normalized();
        assert_eq!(g.den_degree(), 1);
        assert!((g.num()[0] - 1.0).abs() < 1e-12);
        assert!((g.den()[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn unity_feedback_of_integrator() {
        let k = 3.0;
        let t = feedback_unity(&tf(&[k], &[1.0, 0.0])).unwrap().normalized();
        assert_eq!(t.num(), &[k]);
        assert_eq!(t.den(), &[1.0, k]);
    }

    #[test]
    fn algebraic_loop_detected() {
        assert_eq!(feedback_unity(&RationalTF::constant(-1.0)), Err(FtcError::AlgebraicLoop));
    }

    #[test]
    fn sensitivity_plus_complementary_is_identity() {
        let l = tf(&[2.0, 3.0], &[1.0, 4.0, 1.0, 0.0]);
        let t = feedback_unity(&l).unwrap();
        let s = t.one_minus();
        let sum = s.add(&t).normalized();
        assert_eq!(sum.den_degree(), 0);
        assert!((sum.num()[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn s_factor_cancels_exactly() {
        let g = tf(&[0.4, 0.0], &[0.8, 0.0, 0.0]).reduced();
        assert_eq!(g.num(), &[0.4]);
        assert_eq!(g.den(), &[0.8, 0.0]);
    }
}
