//! Haar volumes of the domains `{|g| <= t}`.
//!
//! The internal normalization is geometric: on `PSL_2(R)` the Haar measure is
//! hyperbolic area (curvature `-1`) times the probability measure on
//! `K = PSO(2)`. In Cartan coordinates `g = k(th1) a_s k(th2)` with
//! `a_s = diag(e^s, e^-s)` this reads
//!
//! ```text
//! dm = (2 / pi) * 2 sinh(2s) ds dth1 dth2,    th1, th2 in [0, pi)
//! ```
//!
//! so the hyperbolic ball of radius `t` (`s <= t / 2`) has volume
//! `2 pi (cosh t - 1)`. Lattice counts in `SL_2(Z)` are compared with
//! `2 m(B) / covol(PSL_2(Z))`, the factor 2 accounting for `-I`.
//!
//! On `SL_3(R)` the density on the positive chamber is
//! `sinh(a1 - a2) sinh(a1 - a3) sinh(a2 - a3)` against Lebesgue measure in
//! the simple-root coordinates, with unit mass on `K`. No covolume is
//! attached, so only growth rates are meaningful there.

mod admissibility;
mod balanced;
mod fit;
mod profile;

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::enumerate::Group;
use crate::error::{Error, Result};
use crate::gauges::{Gauge, GaugeKind, NormIndex};
use crate::quad::{self, Tolerance};

pub use admissibility::{
    admissibility_estimate, product_set_check, sample_perturbation, AdmissibilityReport, AdmissibilityVerdict, LipschitzRow, ProductCheck,
};
pub use balanced::{
    balanced_volume_ratio, balanced_volume_verdict, balanced_weight_criterion, rational_rows, tensor_weights, BalanceVerdict, ProductFamily,
    VolumeRatioReport, WeightCriterion,
};
pub use fit::{fit_growth, top_half, FitModel, GrowthFit};
pub use profile::{convolve_profiles, Normalization, VolumeProfile};

/// `2 pi (cosh t - 1)`, the area of a hyperbolic disc of radius `t`.
pub fn hyperbolic_ball_area(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    // cosh t - 1 = 2 sinh^2(t/2), without cancellation for small t
    4.0 * PI * (0.5 * t).sinh().powi(2)
}

/// Covolume of `PSL_2(Z)` by quadrature of `dx dy / y^2` over the standard
/// fundamental domain `|x| <= 1/2, x^2 + y^2 >= 1`.
pub fn psl2z_covolume_quadrature() -> Result<f64> {
    let tol = Tolerance::rel(1e-13);
    quad::integrate(
        |x| {
            let y0 = (1.0 - x * x).sqrt();
            // y = y0 / u maps u in (0, 1] onto [y0, inf)
            quad::integrate(
                |u| {
                    let y = y0 / u;
                    (y0 / (u * u)) / (y * y)
                },
                0.0,
                1.0,
                tol,
            )
            .unwrap_or(f64::NAN)
        },
        -0.5,
        0.5,
        tol,
    )
}

/// Haar volume of `{|g| <= threshold}` in the geometric normalization.
pub fn volume_of_ball(group: Group, gauge: &Gauge, threshold: f64) -> Result<f64> {
    let raw = gauge.to_raw(threshold);
    match (group, gauge.kind()) {
        (Group::Sl2Z, GaugeKind::Hyperbolic) => Ok(hyperbolic_ball_area(raw)),
        (Group::Sl2Z, GaugeKind::RNorm(NormIndex::Finite(r))) if *r == 2.0 => {
            Ok(hyperbolic_ball_area(frobenius_to_distance(raw)))
        }
        (Group::Sl2Z, GaugeKind::RNorm(idx)) => Ok(kak_calibration()? * sl2_rnorm_volume(*idx, raw)?),
        (Group::Sl3Z, GaugeKind::RNorm(NormIndex::Finite(r))) if *r == 2.0 => sl3_frobenius_volume(raw),
        _ => Err(Error::Unsupported(format!("volume of `{gauge}` balls in {group}"))),
    }
}

/// Lattice count predicted by the volume: `|Z(G)| m(B) / covol`. `None` when
/// no covolume is attached to the group.
pub fn expected_count(group: Group, gauge: &Gauge, threshold: f64) -> Result<Option<f64>> {
    let Some(covol) = group.covolume() else { return Ok(None) };
    let v = volume_of_ball(group, gauge, threshold)?;
    Ok(Some(group.center_order() as f64 * v / covol))
}

/// `d(i, g.i)` for `|g|_F = frobenius`.
pub fn frobenius_to_distance(frobenius: f64) -> f64 {
    (0.5 * frobenius * frobenius).max(1.0).acosh()
}

fn entry_norm(m: &[f64; 4], idx: NormIndex) -> f64 {
    match idx {
        NormIndex::Inf => m.iter().fold(0.0f64, |a, x| a.max(x.abs())),
        NormIndex::Finite(r) if r == 1.0 => m.iter().map(|x| x.abs()).sum(),
        NormIndex::Finite(r) if r == 2.0 => m.iter().map(|x| x * x).sum::<f64>().sqrt(),
        NormIndex::Finite(r) => m.iter().map(|x| x.abs().powf(r)).sum::<f64>().powf(1.0 / r),
    }
}

/// `[cosh 2s_lo, cosh 2s_hi]` for the interval of `s >= 0` on which
/// `|k(th1) a_s k(th2)| <= t`. Every entry is `A e^s + B e^-s`, whose absolute
/// value is convex in `s`, so the norm is convex and the sublevel set is an
/// interval.
fn s_interval(idx: NormIndex, th1: f64, th2: f64, t: f64) -> Option<(f64, f64)> {
    let (c1, s1, c2, s2) = (th1.cos(), th1.sin(), th2.cos(), th2.sin());
    let big = [c1 * c2, -c1 * s2, s1 * c2, -s1 * s2];
    let small = [-s1 * s2, -s1 * c2, c1 * s2, c1 * c2];
    let norm = |s: f64| {
        let (e, f) = (s.exp(), (-s).exp());
        let m = [0, 1, 2, 3].map(|i| e * big[i] + f * small[i]);
        entry_norm(&m, idx)
    };
    let nb = entry_norm(&big, idx);
    let ns = entry_norm(&small, idx);
    let mut hi = ((t + ns) / nb).max(1.0).ln() + 1.0;
    // the minimum over s >= 0
    let (mut lo, mut up) = (0.0, hi);
    if norm(0.0) > t {
        let ratio = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..100 {
            let m1 = up - ratio * (up - lo);
            let m2 = lo + ratio * (up - lo);
            if norm(m1) < norm(m2) {
                up = m2;
            } else {
                lo = m1;
            }
        }
    }
    let s_min = if norm(0.0) <= t { 0.0 } else { 0.5 * (lo + up) };
    if norm(s_min) > t {
        return None;
    }
    let bisect = |mut inside: f64, mut outside: f64| {
        for _ in 0..200 {
            let mid = 0.5 * (inside + outside);
            if mid == inside || mid == outside {
                break;
            }
            if norm(mid) <= t {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside
    };
    while norm(hi) <= t {
        hi *= 2.0;
    }
    let s_hi = bisect(s_min, hi);
    let s_lo = if s_min == 0.0 { 0.0 } else { bisect(s_min, 0.0) };
    Some(((2.0 * s_lo).cosh(), (2.0 * s_hi).cosh()))
}

/// KAK quadrature for entrywise norms on `SL_2(R)`. Entrywise norms are
/// invariant under signed permutations of rows and columns, so both angles
/// are folded into `[0, pi/2)`.
fn sl2_rnorm_volume(idx: NormIndex, t: f64) -> Result<f64> {
    let inner_tol = Tolerance::rel(1e-10).with_abs(1e-300);
    let outer_tol = Tolerance::rel(1e-9).with_abs(1e-300);
    let half = 0.5 * PI;
    let failure = std::sync::Mutex::new(None);
    let outer = quad::integrate(
        |th1| {
            let inner = quad::integrate(
                |th2| s_interval(idx, th1, th2, t).map_or(0.0, |(lo, hi)| hi - lo),
                0.0,
                half,
                inner_tol,
            );
            inner.unwrap_or_else(|e| {
                failure.lock().unwrap().get_or_insert(e);
                0.0
            })
        },
        0.0,
        half,
        outer_tol,
    )?;
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    Ok(8.0 / PI * outer)
}

/// Ratio of the closed-form Frobenius volume to the KAK quadrature of the
/// same ball. Analytically 1; applied to every entrywise-norm quadrature.
pub fn kak_calibration() -> Result<f64> {
    static CAL: OnceLock<std::result::Result<f64, Error>> = OnceLock::new();
    CAL.get_or_init(|| {
        let t = 10.0;
        let closed = hyperbolic_ball_area(frobenius_to_distance(t));
        Ok(closed / sl2_rnorm_volume(NormIndex::Finite(2.0), t)?)
    })
    .clone()
}

/// Uncalibrated KAK quadrature of an entrywise-norm ball in `SL_2(R)`.
pub fn sl2_rnorm_volume_quadrature(gauge: &Gauge, threshold: f64) -> Result<f64> {
    match gauge.kind() {
        GaugeKind::RNorm(idx) => sl2_rnorm_volume(*idx, gauge.to_raw(threshold)),
        _ => Err(Error::Unsupported(format!("KAK quadrature for `{gauge}`"))),
    }
}

/// Frobenius ball of radius `t` in `SL_3(R)`.
///
/// With `x = a1 - a2`, `y = a2 - a3`, the norm `sum e^(2 a_i)` increases in
/// `y`, so the region is `0 <= y <= y*(x)` and the inner integral has the
/// closed form `(sinh(x + 2Y) - sinh x) / 4 - Y cosh(x) / 2` (times sinh x).
fn sl3_frobenius_volume(t: f64) -> Result<f64> {
    let norm_sq = |x: f64, y: f64| {
        let a = [(2.0 * x + y) / 3.0, (y - x) / 3.0, -(x + 2.0 * y) / 3.0];
        a.iter().map(|ai| (2.0 * ai).exp()).sum::<f64>()
    };
    let t2 = t * t;
    if t2 <= 3.0 {
        return Ok(0.0);
    }
    // largest x with y = 0 inside: e^(4x/3) + 2 e^(-2x/3) = t^2
    let mut x_max = 1.0;
    while norm_sq(x_max, 0.0) <= t2 {
        x_max *= 2.0;
    }
    let (mut lo, mut hi) = (0.0, x_max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if norm_sq(mid, 0.0) <= t2 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x_max = lo;
    let y_star = |x: f64| {
        if norm_sq(x, 0.0) > t2 {
            return 0.0;
        }
        let mut hi = 1.0;
        while norm_sq(x, hi) <= t2 {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if norm_sq(x, mid) <= t2 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    quad::integrate(
        |x| {
            let y = y_star(x);
            x.sinh() * (((x + 2.0 * y).sinh() - x.sinh()) / 4.0 - 0.5 * y * x.cosh())
        },
        0.0,
        x_max,
        Tolerance::rel(1e-8).with_abs(1e-300),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covolume() {
        let c = psl2z_covolume_quadrature().unwrap();
        assert!((c - PI / 3.0).abs() < 1e-12);
        assert!((c - crate::enumerate::PSL2Z_COVOLUME).abs() < 1e-12);
    }

    #[test]
    fn closed_forms() {
        let h = Gauge::hyperbolic();
        assert_eq!(volume_of_ball(Group::Sl2Z, &h, 0.0).unwrap(), 0.0);
        let t = 3.7;
        let v = volume_of_ball(Group::Sl2Z, &h, t).unwrap();
        let direct = quad::integrate(|s| 2.0 * PI * s.sinh(), 0.0, t, Tolerance::rel(1e-14)).unwrap();
        assert!((v / direct - 1.0).abs() < 1e-13);
        let big_t = 25.0;
        let f = volume_of_ball(Group::Sl2Z, &Gauge::frobenius(), big_t).unwrap();
        let d = frobenius_to_distance(big_t);
        assert!((f / volume_of_ball(Group::Sl2Z, &h, d).unwrap() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn calibration_is_idempotent() {
        let cal = kak_calibration().unwrap();
        assert!((cal - 1.0).abs() < 1e-8, "{cal}");
        for t in [2.5, 7.0, 40.0] {
            let q = cal * sl2_rnorm_volume_quadrature(&Gauge::frobenius(), t).unwrap();
            let closed = volume_of_ball(Group::Sl2Z, &Gauge::frobenius(), t).unwrap();
            assert!((q / closed - 1.0).abs() < 1e-6, "T = {t}");
        }
    }

    #[test]
    fn rnorm_volumes_are_monotone_and_ordered() {
        let one = Gauge::rnorm(1.0).unwrap();
        let inf = Gauge::rnorm_inf();
        let mut last = 0.0;
        for t in [3.0, 4.0, 8.0, 16.0] {
            let v1 = volume_of_ball(Group::Sl2Z, &one, t).unwrap();
            let v2 = volume_of_ball(Group::Sl2Z, &Gauge::frobenius(), t).unwrap();
            let vi = volume_of_ball(Group::Sl2Z, &inf, t).unwrap();
            // |.|_inf <= |.|_2 <= |.|_1 pointwise
            assert!(v1 < v2 && v2 < vi);
            assert!(v1 > last);
            last = v1;
        }
    }

    #[test]
    fn sup_norm_ball_against_monte_carlo() {
        use rand::{Rng, SeedableRng};
        // m({|g|_inf <= T}) in KAK coordinates, sampled uniformly in (th1, th2)
        let t = 6.0;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let n = 200_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let (a, b) = (rng.gen_range(0.0..PI), rng.gen_range(0.0..PI));
            if let Some((lo, hi)) = s_interval(NormIndex::Inf, a, b, t) {
                acc += hi - lo;
            }
        }
        let mc = 2.0 / PI * PI * PI * acc / n as f64;
        let q = volume_of_ball(Group::Sl2Z, &Gauge::rnorm_inf(), t).unwrap();
        assert!((mc / q - 1.0).abs() < 0.01, "{mc} vs {q}");
    }

    #[test]
    fn sl3_volume_grows_like_t6() {
        let v1 = volume_of_ball(Group::Sl3Z, &Gauge::frobenius(), 200.0).unwrap();
        let v2 = volume_of_ball(Group::Sl3Z, &Gauge::frobenius(), 400.0).unwrap();
        let slope = (v2 / v1).log2();
        assert!((slope - 6.0).abs() < 0.1, "{slope}");
        assert_eq!(volume_of_ball(Group::Sl3Z, &Gauge::frobenius(), 3f64.sqrt()).unwrap(), 0.0);
    }

    #[test]
    fn unsupported() {
        assert!(volume_of_ball(Group::Sl3Z, &Gauge::rnorm_inf(), 5.0).is_err());
        assert!(volume_of_ball(Group::Sl2ZInvP { p: 2 }, &Gauge::height(2).unwrap(), 5.0).is_err());
        assert_eq!(expected_count(Group::Sl3Z, &Gauge::frobenius(), 5.0).unwrap(), None);
    }

    #[test]
    fn expected_count_is_twelve_cosh() {
        let t = 150.0;
        let d = frobenius_to_distance(t);
        let e = expected_count(Group::Sl2Z, &Gauge::frobenius(), t).unwrap().unwrap();
        assert!((e / (12.0 * (d.cosh() - 1.0)) - 1.0).abs() < 1e-12);
    }
}
