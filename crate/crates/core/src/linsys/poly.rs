//! Dense real polynomials stored as descending coefficient lists.

use nalgebra::{Complex, DMatrix};

pub type C64 = Complex<f64>;

/// Drops leading coefficients that are exactly zero, keeping at least one.
pub fn trim(p: &[f64]) -> Vec<f64> {
    let first = p.iter().position(|c| *c != 0.0).unwrap_or(p.len().saturating_sub(1));
    if p.is_empty() {
        return vec![0.0];
    }
    p[first..].to_vec()
}

pub fn degree(p: &[f64]) -> usize {
    trim(p).len() - 1
}

pub fn is_zero(p: &[f64]) -> bool {
    p.iter().all(|c| *c == 0.0)
}

pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    let mut out = vec![0.0; n];
    for (i, c) in a.iter().enumerate() {
        out[n - a.len() + i] += c;
    }
    for (i, c) in b.iter().enumerate() {
        out[n - b.len() + i] += c;
    }
    out
}

pub fn scale(a: &[f64], k: f64) -> Vec<f64> {
    a.iter().map(|c| c * k).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    add(a, &scale(b, -1.0))
}

/// Horner evaluation at a complex point.
pub fn eval(p: &[f64], s: C64) -> C64 {
    p.iter().fold(C64::new(0.0, 0.0), |acc, c| acc * s + c)
}

/// Horner evaluation with complex coefficients, used for root polishing.
fn eval_deriv(p: &[f64], s: C64) -> (C64, C64) {
    let mut v = C64::new(0.0, 0.0);
    let mut d = C64::new(0.0, 0.0);
    for c in p {
        d = d * s + v;
        v = v * s + c;
    }
    (v, d)
}

/// Sum of |c_i| |s|^(n-i); the natural magnitude scale of `p` at `s`.
pub fn eval_scale(p: &[f64], s_abs: f64) -> f64 {
    p.iter().fold(0.0, |acc, c| acc * s_abs + c.abs())
}

/// All complex roots, multiplicity preserved.
///
/// Exact zeros at the origin are peeled off first; the rest come from the
/// eigenvalues of the companion matrix followed by a few Newton polishing
/// steps on the original polynomial.
pub fn roots(p: &[f64]) -> Vec<C64> {
    let p = trim(p);
    let mut out = Vec::new();
    let mut end = p.len();
    while end > 1 && p[end - 1] == 0.0 {
        out.push(C64::new(0.0, 0.0));
        end -= 1;
    }
    let q = &p[..end];
    let n = q.len() - 1;
    if n == 0 {
        return out;
    }
    if n == 1 {
        out.push(C64::new(-q[1] / q[0], 0.0));
        return out;
    }
    let lead = q[0];
    let mut comp = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        comp[(0, j)] = -q[j + 1] / lead;
    }
    for i in 1..n {
        comp[(i, i - 1)] = 1.0;
    }
    let eig = super::eig::eigenvalues(&comp);
    for z in eig.iter() {
        out.push(polish(q, *z));
    }
    out
}

fn polish(p: &[f64], z0: C64) -> C64 {
    let mut z = z0;
    let mut best = eval(p, z).norm();
    for _ in 0..4 {
        let (v, d) = eval_deriv(p, z);
        if d.norm() == 0.0 {
            break;
        }
        let cand = z - v / d;
        let r = eval(p, cand).norm();
        if r.is_finite() && r < best {
            best = r;
            z = cand;
        } else {
            break;
        }
    }
    // keep real roots real
    if z0.im == 0.0 {
        z.im = 0.0;
    }
    z
}

/// Monic real polynomial with the given roots; conjugate pairs are expected
/// to appear together, any residual imaginary part is discarded.
pub fn from_roots(rs: &[C64]) -> Vec<f64> {
    let mut acc = vec![C64::new(1.0, 0.0)];
    for r in rs {
        let mut next = vec![C64::new(0.0, 0.0); acc.len() + 1];
        for (i, c) in acc.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c * r;
        }
        acc = next;
    }
    acc.iter().map(|c| c.re).collect()
}

/// Polynomial long division, returning the quotient only.
pub fn div_quotient(num: &[f64], den: &[f64]) -> Vec<f64> {
    let num = trim(num);
    let den = trim(den);
    if num.len() < den.len() {
        return vec![0.0];
    }
    let mut rem = num.clone();
    let qlen = num.len() - den.len() + 1;
    let mut q = vec![0.0; qlen];
    for i in 0..qlen {
        let c = rem[i] / den[0];
        q[i] = c;
        for (j, d) in den.iter().enumerate() {
            rem[i + j] -= c * d;
        }
    }
    q
}
