//! Averages of observables over lattice points, `(1/|Gamma_t|) sum f(g^-1 x)`,
//! on the torus `T^n` and on the finite quotients `SL_n(Z/q)`.
//!
//! `Gamma` acts on `T^n` linearly mod 1 and on `SL_n(Z/q)` by left
//! multiplication. Characters `e(<m, y>)` are evaluated through the exact
//! integer vector `(g^-1)^T m`, so only the final phase is rounded.

use std::fmt::Write as _;

use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::ToPrimitive;

use crate::arith::{sl_mod_q, GroupElement, ResidueClass};
use crate::enumerate::{Ball, Group, MatrixPoint};
use crate::error::{Error, Result};
use crate::format::sig12;
use crate::gauges::Gauge;
use crate::haar::{fit_growth, FitModel, GrowthFit};

/// A point of the torus, in floating point or as exact rationals.
#[derive(Clone, Debug, PartialEq)]
pub enum TorusPoint {
    Float(Vec<f64>),
    Rational(Vec<Rational64>),
}

impl TorusPoint {
    /// `(sqrt 2 - 1, sqrt 3 - 1)`.
    pub fn default_2d() -> Self {
        TorusPoint::Float(vec![2f64.sqrt() - 1.0, 3f64.sqrt() - 1.0])
    }

    pub fn dim(&self) -> usize {
        match self {
            TorusPoint::Float(x) => x.len(),
            TorusPoint::Rational(x) => x.len(),
        }
    }

    /// `<v, x>` mod 1, as an angle in turns.
    fn phase(&self, v: &[i64]) -> f64 {
        match self {
            TorusPoint::Float(x) => {
                v.iter().zip(x).map(|(&vi, xi)| (vi as f64 * xi).rem_euclid(1.0)).sum::<f64>().rem_euclid(1.0)
            }
            TorusPoint::Rational(x) => {
                let s = v.iter().zip(x).fold(Rational64::from_integer(0), |acc, (&vi, xi)| acc + xi * vi);
                let frac = s - s.floor();
                frac.to_f64().unwrap_or(f64::NAN)
            }
        }
    }
}

/// Functions on the test systems.
#[derive(Clone, Debug, PartialEq)]
pub enum Observable {
    /// `y -> e(<m, y>)` on the torus; `m = 0` is the constant 1.
    Character(Vec<i64>),
    /// Indicator of one residue class.
    Coset(ResidueClass),
}

/// Where an average is evaluated.
#[derive(Clone, Debug, PartialEq)]
pub enum SystemPoint {
    Torus(TorusPoint),
    Coset(ResidueClass),
}

/// `(g^-1)^T m` for integral `g` of determinant 1.
fn inverse_transpose_times(n: usize, e: &[i64], m: &[i64]) -> Vec<i64> {
    let e: Vec<i128> = e.iter().map(|&x| x as i128).collect();
    let m: Vec<i128> = m.iter().map(|&x| x as i128).collect();
    // (g^-1)^T = cofactor matrix of g
    let cof = |i: usize, j: usize| -> i128 {
        match n {
            2 => {
                let c = e[(1 - i) * 2 + (1 - j)];
                if (i + j) % 2 == 0 { c } else { -c }
            }
            _ => {
                let (r0, r1) = ((i + 1) % 3, (i + 2) % 3);
                let (c0, c1) = ((j + 1) % 3, (j + 2) % 3);
                e[r0 * 3 + c0] * e[r1 * 3 + c1] - e[r0 * 3 + c1] * e[r1 * 3 + c0]
            }
        }
    };
    (0..n).map(|i| (0..n).map(|j| cof(i, j) * m[j]).sum::<i128>() as i64).collect()
}

fn character_value(n: usize, entries: &[i64], m: &[i64], x: &TorusPoint) -> Complex64 {
    let v = inverse_transpose_times(n, entries, m);
    let phase = x.phase(&v);
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * phase)
}

fn check_torus(n: usize, m: &[i64], x: &TorusPoint) -> Result<()> {
    if m.len() != n || x.dim() != n {
        return Err(Error::DimensionMismatch(n, if m.len() != n { m.len() } else { x.dim() }));
    }
    Ok(())
}

/// `(1/|S|) sum_{g in S} f(g^-1 x)`.
pub fn lattice_average(elements: &[GroupElement], observable: &Observable, point: &SystemPoint) -> Result<Complex64> {
    let first = elements.first().ok_or_else(|| Error::InvalidInput("empty element set".into()))?;
    let n = first.n();
    let mut sum = Complex64::new(0.0, 0.0);
    match (observable, point) {
        (Observable::Character(m), SystemPoint::Torus(x)) => {
            check_torus(n, m, x)?;
            for g in elements {
                let e = g
                    .entries_i64()
                    .filter(|_| g.p_power() == 0 && g.n() == n)
                    .ok_or_else(|| Error::InvalidInput(format!("{g} does not act on the torus")))?;
                sum += character_value(n, &e, m, x);
            }
        }
        (Observable::Coset(c), SystemPoint::Coset(x)) => {
            if c.q() != x.q() || c.n() != n || x.n() != n {
                return Err(Error::InvalidInput("class, point and elements must share n and q".into()));
            }
            for g in elements {
                if &g.inv().reduce_mod(c.q())?.mul(x)? == c {
                    sum += 1.0;
                }
            }
        }
        _ => return Err(Error::InvalidInput("observable does not live on this system".into())),
    }
    Ok(sum / elements.len() as f64)
}

/// The two test systems for deviation series.
#[derive(Clone, Debug, PartialEq)]
pub enum TestSystem {
    /// Sup over all classes of `|fraction - 1/|SL_n(Z/q)||`.
    Cosets { q: u64 },
    /// `|lambda_t f(x) - int f|` for the character `m` at `x`.
    Torus { m: Vec<i64>, x: TorusPoint },
}

impl TestSystem {
    pub fn describe(&self) -> String {
        match self {
            TestSystem::Cosets { q } => format!("cosets mod {q}"),
            TestSystem::Torus { m, x } => format!("torus character {m:?} at {x:?}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct DeviationRow {
    /// The logarithmic parameter of the threshold.
    pub t: f64,
    pub threshold: f64,
    pub deviation: f64,
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeviationSeries {
    pub system: String,
    pub rows: Vec<DeviationRow>,
}

pub const DEVIATION_CSV_HEADER: &str = "t,deviation,count";

impl DeviationSeries {
    /// The tail envelope `t -> sup_{t' >= t} deviation(t')` on the same grid.
    ///
    /// Bounds of the form `C e^(-delta t)` hold uniformly in `t`, so they
    /// constrain the envelope; the raw sup-deviation over cosets oscillates
    /// with the parity of the boundary layer and fits poorly on its own.
    pub fn envelope(&self) -> DeviationSeries {
        let mut rows = self.rows.clone();
        let mut sup = f64::NEG_INFINITY;
        for r in rows.iter_mut().rev() {
            sup = sup.max(r.deviation);
            r.deviation = sup;
        }
        DeviationSeries { system: format!("{} (envelope)", self.system), rows }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(DEVIATION_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{}", sig12(r.t), sig12(r.deviation), r.count);
        }
        out
    }
}

enum Acc {
    Cosets(Vec<Vec<u64>>),
    Torus(Vec<Complex64>, Vec<u64>),
}

/// Deviations at every threshold from one enumeration at the largest.
pub fn deviation_series(
    group: Group,
    gauge: &Gauge,
    thresholds: &[f64],
    system: &TestSystem,
    budget: u64,
) -> Result<DeviationSeries> {
    crate::enumerate::check_thresholds(thresholds)?;
    let ball = Ball::new(group, gauge, *thresholds.last().expect("nonempty"))?;
    ball.check_budget(budget)?;
    let n = group.dim();
    let nb = thresholds.len();
    let (classes, n_classes) = match system {
        TestSystem::Cosets { q } => {
            if let Some(p) = group.prime() {
                if *q % p == 0 {
                    return Err(Error::NotCoprime { p, q: *q });
                }
            }
            let size = q.checked_pow((n * n) as u32).filter(|&s| s <= 1 << 20);
            let size = size.ok_or_else(|| Error::Unsupported(format!("modulus {q} is too large")))?;
            (size as usize, sl_mod_q(n, *q)?.len() as u64)
        }
        TestSystem::Torus { m, x } => {
            check_torus(n, m, x)?;
            if group.prime().is_some() {
                return Err(Error::Unsupported("S-arithmetic groups do not act on the torus".into()));
            }
            (0, 0)
        }
    };
    let failure = std::sync::Mutex::new(None);
    let init = || match system {
        TestSystem::Cosets { .. } => Acc::Cosets(vec![vec![0; classes]; nb]),
        TestSystem::Torus { .. } => Acc::Torus(vec![Complex64::new(0.0, 0.0); nb], vec![0; nb]),
    };
    let fold = |acc: &mut Acc, pt: &MatrixPoint, v: f64| {
        let b = crate::enumerate::bucket(thresholds, v);
        if b >= nb {
            return;
        }
        match (acc, system) {
            (Acc::Cosets(h), TestSystem::Cosets { q }) => match pt.residues(group, *q) {
                Ok(r) => {
                    let idx = r.iter().rev().fold(0u64, |a, &e| a * q + e);
                    // same order as ResidueClass::dense_index
                    h[b][idx as usize] += 1;
                }
                Err(e) => {
                    failure.lock().unwrap().get_or_insert(e);
                }
            },
            (Acc::Torus(s, c), TestSystem::Torus { m, x }) => {
                s[b] += character_value(n, pt.entries(), m, x);
                c[b] += 1;
            }
            _ => unreachable!("accumulator matches the system"),
        }
    };
    let chunks = ball.fold_chunks(init, fold);
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    let mut total = init();
    for chunk in chunks {
        match (&mut total, chunk) {
            (Acc::Cosets(t), Acc::Cosets(c)) => {
                for (tb, cb) in t.iter_mut().zip(c) {
                    for (x, y) in tb.iter_mut().zip(cb) {
                        *x += y;
                    }
                }
            }
            (Acc::Torus(ts, tc), Acc::Torus(cs, cc)) => {
                for i in 0..nb {
                    ts[i] += cs[i];
                    tc[i] += cc[i];
                }
            }
            _ => unreachable!(),
        }
    }
    let mut rows = Vec::with_capacity(nb);
    match total {
        Acc::Cosets(hist) => {
            let mut running = vec![0u64; classes];
            let mut count = 0u64;
            for (i, bucket) in hist.into_iter().enumerate() {
                for (r, c) in running.iter_mut().zip(bucket) {
                    *r += c;
                    count += c;
                }
                let deviation = coset_sup_deviation(&running, count, n_classes);
                rows.push(row(gauge, thresholds[i], deviation, count));
            }
        }
        Acc::Torus(sums, counts) => {
            let TestSystem::Torus { m, .. } = system else { unreachable!() };
            let mean = if m.iter().all(|&x| x == 0) { 1.0 } else { 0.0 };
            let mut s = Complex64::new(0.0, 0.0);
            let mut count = 0u64;
            for i in 0..nb {
                s += sums[i];
                count += counts[i];
                let deviation = if count == 0 { f64::NAN } else { (s / count as f64 - mean).norm() };
                rows.push(row(gauge, thresholds[i], deviation, count));
            }
        }
    }
    Ok(DeviationSeries { system: system.describe(), rows })
}

fn row(gauge: &Gauge, threshold: f64, deviation: f64, count: u64) -> DeviationRow {
    DeviationRow { t: gauge.reporting_t(threshold), threshold, deviation, count }
}

fn coset_sup_deviation(counts: &[u64], total: u64, n_classes: u64) -> f64 {
    if total == 0 {
        return 1.0;
    }
    let target = 1.0 / n_classes as f64;
    let mut worst: f64 = 0.0;
    let mut hit = 0u64;
    for &c in counts.iter().filter(|&&c| c > 0) {
        hit += 1;
        worst = worst.max((c as f64 / total as f64 - target).abs());
    }
    if hit < n_classes {
        worst = worst.max(target);
    }
    worst
}

/// Exponential decay fit of the positive deviations against `t`.
///
/// Returns the fit and the number of rows dropped for having zero deviation.
pub fn decay_fit(series: &DeviationSeries) -> Result<(GrowthFit, usize)> {
    let samples: Vec<(f64, f64)> =
        series.rows.iter().filter(|r| r.deviation > 0.0).map(|r| (r.t, r.deviation)).collect();
    let excluded = series.rows.len() - samples.len();
    if samples.len() < 5 {
        return Err(Error::DegenerateFit(format!("{} positive deviations, need at least 5", samples.len())));
    }
    let (lo, hi) = samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), s| (l.min(s.1), h.max(s.1)));
    if lo == hi {
        return Err(Error::DegenerateFit("constant deviation series".into()));
    }
    Ok((fit_growth(&samples, FitModel::ExpDecay)?, excluded))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::{count_series, enumerate_ball, DEFAULT_BUDGET};

    fn el(e: &[i64]) -> GroupElement {
        GroupElement::from_i64(2, e).unwrap()
    }

    #[test]
    fn plus_minus_identity() {
        let set = [el(&[1, 0, 0, 1]), el(&[-1, 0, 0, -1])];
        let x = TorusPoint::default_2d();
        let m = vec![2, -1];
        let avg = lattice_average(&set, &Observable::Character(m.clone()), &SystemPoint::Torus(x.clone())).unwrap();
        let TorusPoint::Float(xs) = &x else { unreachable!() };
        let expected = (2.0 * std::f64::consts::PI * (2.0 * xs[0] - xs[1])).cos();
        assert!((avg.re - expected).abs() < 1e-12 && avg.im.abs() < 1e-12);
        let one = lattice_average(&set, &Observable::Character(vec![0, 0]), &SystemPoint::Torus(x)).unwrap();
        assert_eq!(one, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn identity_coset_fraction() {
        let set = enumerate_ball(Group::Sl2Z, &Gauge::frobenius(), 2f64.sqrt(), DEFAULT_BUDGET).unwrap();
        let id = ResidueClass::identity(2, 2);
        let avg = lattice_average(&set, &Observable::Coset(id.clone()), &SystemPoint::Coset(id)).unwrap();
        assert_eq!(avg.re, 0.5);
        assert!(lattice_average(&[], &Observable::Character(vec![1, 0]), &SystemPoint::Torus(TorusPoint::default_2d())).is_err());
    }

    #[test]
    fn rational_and_float_points_agree() {
        let set = enumerate_ball(Group::Sl2Z, &Gauge::frobenius(), 30.0, DEFAULT_BUDGET).unwrap();
        let r = TorusPoint::Rational(vec![Rational64::new(3, 7), Rational64::new(-2, 11)]);
        let f = TorusPoint::Float(vec![3.0 / 7.0, -2.0 / 11.0]);
        let obs = Observable::Character(vec![1, 3]);
        let a = lattice_average(&set, &obs, &SystemPoint::Torus(r)).unwrap();
        let b = lattice_average(&set, &obs, &SystemPoint::Torus(f)).unwrap();
        assert!((a - b).norm() < 1e-10);
        assert!(a.norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn averages_at_the_origin_are_real() {
        let set = enumerate_ball(Group::Sl2Z, &Gauge::rnorm_inf(), 9.0, DEFAULT_BUDGET).unwrap();
        let x = TorusPoint::Float(vec![0.0, 0.0]);
        let a = lattice_average(&set, &Observable::Character(vec![1, 0]), &SystemPoint::Torus(x)).unwrap();
        assert!(a.im.abs() < 1e-12);
    }

    #[test]
    fn coset_series_at_root_two() {
        let grid = [2f64.sqrt(), 2.0, 5.0, 10.0];
        let s = deviation_series(Group::Sl2Z, &Gauge::frobenius(), &grid, &TestSystem::Cosets { q: 2 }, DEFAULT_BUDGET)
            .unwrap();
        assert!((s.rows[0].deviation - 1.0 / 3.0).abs() < 1e-15);
        let counts = count_series(Group::Sl2Z, &Gauge::frobenius(), &grid, DEFAULT_BUDGET).unwrap().counts();
        assert_eq!(s.rows.iter().map(|r| r.count).collect::<Vec<_>>(), counts);
        assert!(s.to_csv().starts_with("t,deviation,count\n"));
    }

    #[test]
    fn torus_series() {
        let grid: Vec<f64> = (1..=8).map(|i| 5.0 * i as f64).collect();
        let sys = TestSystem::Torus { m: vec![0, 0], x: TorusPoint::default_2d() };
        let s = deviation_series(Group::Sl2Z, &Gauge::frobenius(), &grid, &sys, DEFAULT_BUDGET).unwrap();
        assert!(s.rows.iter().all(|r| r.deviation < 1e-12));
        let sys = TestSystem::Torus { m: vec![1, 0], x: TorusPoint::default_2d() };
        let s = deviation_series(Group::Sl2Z, &Gauge::frobenius(), &grid, &sys, DEFAULT_BUDGET).unwrap();
        assert!(s.rows.iter().all(|r| (0.0..=1.0).contains(&r.deviation)));
        assert!(s.rows.last().unwrap().deviation < 0.2);
    }

    #[test]
    fn decay_fits() {
        let rows = (0..10)
            .map(|i| {
                let t = i as f64;
                DeviationRow { t, threshold: t.exp(), deviation: (-0.5 * t).exp(), count: 1 }
            })
            .collect();
        let s = DeviationSeries { system: "synthetic".into(), rows };
        let (f, dropped) = decay_fit(&s).unwrap();
        assert_eq!(dropped, 0);
        assert!((f.a - 0.5).abs() < 1e-12 && (f.r2 - 1.0).abs() < 1e-12);
        let mut bumpy = s.clone();
        bumpy.rows[3].deviation = 2.0;
        let env = bumpy.envelope();
        assert!(env.rows[..=3].iter().all(|r| r.deviation == 2.0));
        assert_eq!(env.rows[4..], s.rows[4..]);
        let mut flat = s.clone();
        flat.rows.iter_mut().for_each(|r| r.deviation = 0.1);
        assert!(decay_fit(&flat).is_err());
    }
}
