use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{FtcError, Result};
use crate::models::{AircraftParameters, Axis};

/// Control weight of the hover baseline, the same on every axis.
pub const LQR_R: f64 = 0.5;

/// State weights on `[integral of angle error, angle error, rate]`.
pub const LQR_Q: [f64; 3] = [300.0, 100.0, 1.0];

#[derive(Debug, Clone, PartialEq)]
pub struct LqrDesign {
    pub k: DMatrix<f64>,
    pub p: DMatrix<f64>,
}

/// `||A' P + P A - P B R^-1 B' P + Q||_F`.
pub fn care_residual(a: &DMatrix<f64>, b: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>, p: &DMatrix<f64>) -> f64 {
    let r_inv = r.clone().try_inverse().expect("R invertible");
    (a.transpose() * p + p * a - p * b * r_inv * b.transpose() * p + q).norm()
}

fn hamiltonian(a: &DMatrix<f64>, g: &DMatrix<f64>, q: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(a);
    h.view_mut((0, n), (n, n)).copy_from(&(-g));
    h.view_mut((n, 0), (n, n)).copy_from(&(-q));
    h.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));
    h
}

/// Stable invariant subspace from eigenvectors of the Hamiltonian.
fn care_by_eigenvectors(h: &DMatrix<f64>, n: usize) -> Option<DMatrix<f64>> {
    let eig = crate::linsys::eig::eigenvalues(h);
    let stable: Vec<Complex<f64>> = eig.iter().copied().filter(|l| l.re < 0.0).collect();
    if stable.len() != n {
        return None;
    }
    let hc = h.map(|v| Complex::new(v, 0.0));
    let mut x = DMatrix::<Complex<f64>>::zeros(2 * n, n);
    for (j, lam) in stable.iter().enumerate() {
        let shifted = &hc - DMatrix::<Complex<f64>>::identity(2 * n, 2 * n) * *lam;
        let svd = shifted.svd(false, true);
        let vt = svd.v_t?;
        let (k, _) = svd.singular_values.iter().enumerate().fold((0, f64::INFINITY), |m, (i, s)| {
            if *s < m.1 {
                (i, *s)
            } else {
                m
            }
        });
        for i in 0..2 * n {
            x[(i, j)] = vt[(k, i)].conj();
        }
    }
    let x1 = x.view((0, 0), (n, n)).into_owned();
    let x2 = x.view((n, 0), (n, n)).into_owned();
    let x1_inv = x1.try_inverse()?;
    let p = (x2 * x1_inv).map(|c| c.re);
    let p = (&p + p.transpose()) * 0.5;
    p.iter().all(|v| v.is_finite()).then_some(p)
}

/// Matrix sign function route; copes with repeated Hamiltonian eigenvalues.
fn care_by_sign(h: &DMatrix<f64>, n: usize) -> Option<DMatrix<f64>> {
    let mut z = h.clone();
    for _ in 0..100 {
        let zi = z.clone().try_inverse()?;
        let next = (&z + zi) * 0.5;
        let diff = (&next - &z).norm();
        z = next;
        if diff <= 1e-13 * z.norm() {
            break;
        }
    }
    let eye = DMatrix::<f64>::identity(n, n);
    let w11 = z.view((0, 0), (n, n)).into_owned();
    let w12 = z.view((0, n), (n, n)).into_owned();
    let w21 = z.view((n, 0), (n, n)).into_owned();
    let w22 = z.view((n, n), (n, n)).into_owned();
    let mut lhs = DMatrix::zeros(2 * n, n);
    lhs.view_mut((0, 0), (n, n)).copy_from(&w12);
    lhs.view_mut((n, 0), (n, n)).copy_from(&(w22 + &eye));
    let mut rhs = DMatrix::zeros(2 * n, n);
    rhs.view_mut((0, 0), (n, n)).copy_from(&(-(w11 + &eye)));
    rhs.view_mut((n, 0), (n, n)).copy_from(&(-w21));
    let p = lhs.svd(true, true).solve(&rhs, 1e-14).ok()?;
    let p = (&p + p.transpose()) * 0.5;
    p.iter().all(|v| v.is_finite()).then_some(p)
}

/// Solves `A' X + X A + M = 0` through the Kronecker form.
fn lyapunov(a: &DMatrix<f64>, m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let at = a.transpose();
    let big = eye.kronecker(&at) + at.kronecker(&eye);
    let rhs = DVector::from_iterator(n * n, m.iter().map(|v| -v));
    let sol = big.lu().solve(&rhs)?;
    let x = DMatrix::from_iterator(n, n, sol.iter().copied());
    Some((&x + x.transpose()) * 0.5)
}

fn is_hurwitz(a: &DMatrix<f64>) -> bool {
    crate::linsys::eig::eigenvalues(a).iter().all(|l| l.re < 0.0)
}

/// Continuous-time LQR: `K = R^-1 B' P` with `P` the stabilising CARE
/// solution, obtained from the Hamiltonian's stable eigenvectors and polished
/// by Newton-Kleinman steps.
pub fn lqr_design(a: &DMatrix<f64>, b: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<LqrDesign> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || q.shape() != (n, n) || r.nrows() != b.ncols() || r.ncols() != b.ncols() {
        return Err(FtcError::InvalidParameter("LQR dimension mismatch".into()));
    }
    let r_inv = r
        .clone()
        .try_inverse()
        .ok_or_else(|| FtcError::InvalidParameter("R is singular".into()))?;
    let g = b * &r_inv * b.transpose();
    let h = hamiltonian(a, &g, q);
    let mut p = care_by_eigenvectors(&h, n)
        .or_else(|| care_by_sign(&h, n))
        .ok_or(FtcError::NotStabilizable)?;
    let mut res = care_residual(a, b, q, r, &p);
    for _ in 0..8 {
        let k = &r_inv * b.transpose() * &p;
        let acl = a - b * &k;
        if !is_hurwitz(&acl) {
            break;
        }
        let m = q + k.transpose() * r * &k;
        let Some(next) = lyapunov(&acl, &m) else { break };
        let next_res = care_residual(a, b, q, r, &next);
        if next_res >= res {
            break;
        }
        p = next;
        res = next_res;
    }
    let k = &r_inv * b.transpose() * &p;
    if !is_hurwitz(&(a - b * &k)) {
        return Err(FtcError::NotStabilizable);
    }
    Ok(LqrDesign { k, p })
}

/// Per-axis hover model with integral action: state
/// `[integral of (angle - ref), angle - ref, rate]`, input moment.
pub fn hover_model(p: &AircraftParameters, axis: Axis) -> (DMatrix<f64>, DMatrix<f64>) {
    let a = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
    let b = DMatrix::from_row_slice(3, 1, &[0.0, 0.0, 1.0 / p.inertia(axis)]);
    (a, b)
}

/// Constant-gain hover baseline for one axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoverLqr {
    pub axis: Axis,
    pub k: [f64; 3],
    pub residual: f64,
}

pub fn hover_lqr(p: &AircraftParameters, axis: Axis) -> Result<(HoverLqr, LqrDesign)> {
    let (a, b) = hover_model(p, axis);
    let q = DMatrix::from_diagonal(&DVector::from_row_slice(&LQR_Q));
    let r = DMatrix::from_element(1, 1, LQR_R);
    let d = lqr_design(&a, &b, &q, &r)?;
    let residual = care_residual(&a, &b, &q, &r, &d.p);
    Ok((HoverLqr { axis, k: [d.k[(0, 0)], d.k[(0, 1)], d.k[(0, 2)]], residual }, d))
}
