//! Integral binary forms and the linear substitution action of `SL_2(Z)`.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::GroupElement;
use crate::error::{Error, Result};

/// `a_0 x^n + a_1 x^(n-1) y + ... + a_n y^n` with exact integer coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BinaryForm {
    coeffs: Vec<BigInt>,
}

fn binomial(n: usize, k: usize) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Coefficients of `(u x + v y)^m`, in the basis `x^m, x^(m-1) y, ..., y^m`.
fn linear_power(u: &BigInt, v: &BigInt, m: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::one()];
    for _ in 0..m {
        let mut next = vec![BigInt::zero(); out.len() + 1];
        for (i, c) in out.iter().enumerate() {
            next[i] += c * u;
            next[i + 1] += c * v;
        }
        out = next;
    }
    out
}

fn poly_mul(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

impl BinaryForm {
    pub fn new(coeffs: Vec<BigInt>) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::InvalidInput("a binary form needs degree at least 1".into()));
        }
        if coeffs.iter().all(Zero::is_zero) {
            return Err(Error::InvalidInput("the zero form".into()));
        }
        Ok(BinaryForm { coeffs })
    }

    pub fn from_i64(coeffs: &[i64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    /// `(f . g)(x, y) = f(a x + b y, c x + d y)`; a right action.
    pub fn substitute(&self, g: &GroupElement) -> Result<BinaryForm> {
        if g.n() != 2 || g.p_power() != 0 {
            return Err(Error::IncompatibleGauge {
                gauge: "form substitution".into(),
                what: format!("element {g}"),
            });
        }
        let (a, b, c, d) = (g.entry(0, 0), g.entry(0, 1), g.entry(1, 0), g.entry(1, 1));
        let n = self.degree();
        let mut out = vec![BigInt::zero(); n + 1];
        for (i, coeff) in self.coeffs.iter().enumerate() {
            if coeff.is_zero() {
                continue;
            }
            let term = poly_mul(&linear_power(a, b, n - i), &linear_power(c, d, i));
            for (o, t) in out.iter_mut().zip(term) {
                *o += coeff * t;
            }
        }
        Ok(BinaryForm { coeffs: out })
    }

    /// `sum_i a_i^2 / C(n, i)`, exactly.
    pub fn norm_sq(&self) -> BigRational {
        let n = self.degree();
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| BigRational::new(a * a, binomial(n, i)))
            .fold(BigRational::zero(), |acc, x| acc + x)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().to_f64().unwrap_or(f64::INFINITY).sqrt()
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let n = self.degree() as i32;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| a.to_f64().unwrap_or(f64::NAN) * x.powi(n - i as i32) * y.powi(i as i32))
            .sum()
    }

    /// True iff `f(x, y) != 0` for every real `(x, y) != 0`: `a_0 != 0` and
    /// the dehomogenization `f(x, 1)` has no real root (Sturm count).
    pub fn is_definite(&self) -> bool {
        if self.coeffs[0].is_zero() {
            return false;
        }
        // f(x, 1) = a_0 x^n + ... + a_n, stored highest degree first
        let p: Vec<BigRational> =
            self.coeffs.iter().map(|c| BigRational::from_integer(c.clone())).collect();
        sturm_real_roots(&p) == 0
    }

    /// `min |f|` on the unit circle: a 10^4-point scan followed by
    /// golden-section refinement around the best sample.
    pub fn min_on_unit_circle(&self) -> f64 {
        const SAMPLES: usize = 10_000;
        let g = |theta: f64| self.eval(theta.cos(), theta.sin()).abs();
        let step = std::f64::consts::PI / SAMPLES as f64;
        let (best, mut min) = (0..SAMPLES)
            .map(|i| (i, g(i as f64 * step)))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        let (mut lo, mut hi) = ((best as f64 - 1.0) * step, (best as f64 + 1.0) * step);
        let ratio = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..100 {
            let m1 = hi - ratio * (hi - lo);
            let m2 = lo + ratio * (hi - lo);
            if g(m1) < g(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        min = min.min(g(0.5 * (lo + hi)));
        min
    }
}

impl fmt::Display for BinaryForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c: Vec<String> = self.coeffs.iter().map(|c| c.to_string()).collect();
        f.write_str(&c.join(","))
    }
}

fn trim(mut p: Vec<BigRational>) -> Vec<BigRational> {
    while p.len() > 1 && p[0].is_zero() {
        p.remove(0);
    }
    p
}

/// Remainder of `a / b` for polynomials stored highest degree first.
fn poly_rem(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut r = a.to_vec();
    while r.len() >= b.len() && !(r.len() == 1 && r[0].is_zero()) {
        let factor = &r[0] / &b[0];
        for (i, bc) in b.iter().enumerate() {
            r[i] = &r[i] - &factor * bc;
        }
        r.remove(0);
        r = trim(r);
        if r.iter().all(Zero::is_zero) {
            return vec![BigRational::zero()];
        }
    }
    r
}

fn sign_changes(values: impl Iterator<Item = i32>) -> usize {
    let signs: Vec<i32> = values.filter(|&s| s != 0).collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Number of distinct real roots, from the Sturm chain.
fn sturm_real_roots(p: &[BigRational]) -> usize {
    let p = trim(p.to_vec());
    let deg = p.len() - 1;
    if deg == 0 {
        return 0;
    }
    let dp: Vec<BigRational> = p[..deg]
        .iter()
        .enumerate()
        .map(|(i, c)| c * BigRational::from_integer(BigInt::from(deg - i)))
        .collect();
    let mut chain = vec![p, dp];
    loop {
        let n = chain.len();
        let r = poly_rem(&chain[n - 2], &chain[n - 1]);
        if r.iter().all(Zero::is_zero) {
            break;
        }
        chain.push(r.into_iter().map(|c| -c).collect());
    }
    let sign = |c: &BigRational| if c.is_positive() { 1 } else { -1 };
    let at_pos_inf = chain.iter().map(|q| sign(&q[0]));
    let at_neg_inf = chain.iter().map(|q| {
        let s = sign(&q[0]);
        if (q.len() - 1) % 2 == 1 {
            -s
        } else {
            s
        }
    });
    sign_changes(at_neg_inf) - sign_changes(at_pos_inf)
}
