//! Acceptance checks, one line per criterion.
//!
//! Run with `cargo test -p latcount --test acceptance`. Every line reads
//! `PASS` or `FAIL`, followed by the measured values and the wall time. The
//! process exits nonzero if any criterion fails.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use latcount::arith::sl_mod_q;
use latcount::enumerate::{
    count_series, enumerate_ball, orbit_forms_series, stabilizer_order, Ball, Group, DEFAULT_BUDGET,
};
use latcount::ergodic::{decay_fit, deviation_series, TestSystem, TorusPoint};
use latcount::gauges::{BinaryForm, Gauge};
use latcount::haar::{
    admissibility_estimate, balanced_volume_verdict, balanced_weight_criterion, expected_count, fit_growth,
    frobenius_to_distance, hyperbolic_ball_area, product_set_check, psl2z_covolume_quadrature, rational_rows,
    tensor_weights, volume_of_ball, BalanceVerdict, FitModel, ProductFamily, VolumeProfile,
};
use latcount::spectral::{counting_error_exponent, spectral_decay_theta, xi_decay_fit, xi_eval, SpectralParams};
use latcount::GroupElement;
use num_bigint::BigInt;
use num_rational::BigRational;

type Outcome = Result<(bool, String), String>;

fn geometric(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// All `2x2` integer matrices with entries in `[-b, b]` and determinant `det`.
fn brute_2x2(b: i64, det: i64) -> Vec<[i64; 4]> {
    let mut out = Vec::new();
    for a in -b..=b {
        for bb in -b..=b {
            for c in -b..=b {
                for d in -b..=b {
                    if a * d - bb * c == det {
                        out.push([a, bb, c, d]);
                    }
                }
            }
        }
    }
    out
}

fn brute_sl3(b: i64) -> Vec<[i64; 9]> {
    let range: Vec<i64> = (-b..=b).collect();
    let mut out = Vec::new();
    let mut e = [0i64; 9];
    fn rec(i: usize, e: &mut [i64; 9], range: &[i64], out: &mut Vec<[i64; 9]>) {
        if i == 9 {
            let det = e[0] * (e[4] * e[8] - e[5] * e[7]) - e[1] * (e[3] * e[8] - e[5] * e[6])
                + e[2] * (e[3] * e[7] - e[4] * e[6]);
            if det == 1 {
                out.push(*e);
            }
            return;
        }
        for &x in range {
            e[i] = x;
            rec(i + 1, e, range, out);
        }
    }
    rec(0, &mut e, &range, &mut out);
    out
}

/// Brute force `{g : |g| <= threshold}` for the given group and gauge.
fn brute_ball(group: Group, gauge: &Gauge, threshold: f64, b: i64) -> BTreeSet<GroupElement> {
    let keep = |g: GroupElement| (gauge.eval(&g).unwrap() <= threshold).then_some(g);
    match group {
        Group::Sl2Z => brute_2x2(b, 1).into_iter().filter_map(|e| keep(GroupElement::from_i64(2, &e).unwrap())).collect(),
        Group::Sl3Z => brute_sl3(b).into_iter().filter_map(|e| keep(GroupElement::from_i64(3, &e).unwrap())).collect(),
        Group::Sl2ZInvP { p } => {
            let mut out = BTreeSet::new();
            let mut k = 0;
            while (p as i64).pow(2 * k) <= b * b * 2 {
                let det = (p as i64).pow(2 * k);
                for e in brute_2x2(b, det) {
                    if k > 0 && e.iter().all(|x| x % p as i64 == 0) {
                        continue;
                    }
                    if let Some(g) = keep(GroupElement::scaled_i64(2, &e, k, p).unwrap()) {
                        out.insert(g);
                    }
                }
                k += 1;
            }
            out
        }
    }
}

fn criterion_1() -> Outcome {
    let quartic = Gauge::rep_form(BinaryForm::from_i64(&[1, 0, 0, 0, 1]).map_err(err)?);
    let cases: Vec<(Group, Gauge, Vec<f64>)> = vec![
        (Group::Sl2Z, Gauge::frobenius(), vec![1.4, 2f64.sqrt(), 2.0, 3.0, 4.0]),
        (Group::Sl2Z, Gauge::rnorm(1.0).map_err(err)?, vec![2.0, 3.0, 5.0, 6.0]),
        (Group::Sl2Z, Gauge::rnorm(3.0).map_err(err)?, vec![1.5, 3.0, 5.0]),
        (Group::Sl2Z, Gauge::rnorm_inf(), vec![1.0, 2.0, 4.0, 6.0]),
        (Group::Sl2Z, Gauge::hyperbolic(), vec![0.0, 1.0, 2.0, 3.0]),
        (Group::Sl2Z, quartic, vec![1.5, 5.0, 20.0, 40.0]),
        (Group::Sl3Z, Gauge::frobenius(), vec![3f64.sqrt(), 2.0, 2.3]),
        (Group::Sl3Z, Gauge::rnorm_inf(), vec![1.0, 2.0]),
        (Group::Sl2ZInvP { p: 2 }, Gauge::height(2).map_err(err)?, vec![1.5, 2.0, 4.0]),
        (Group::Sl2ZInvP { p: 3 }, Gauge::height(3).map_err(err)?, vec![2.0, 3.0]),
    ];
    let mut checked = 0;
    let mut elements = 0;
    for (group, gauge, thresholds) in cases {
        for t in thresholds {
            let bound = Ball::new(group, &gauge, t).map_err(err)?.entry_bound();
            if bound > 6 {
                return Ok((false, format!("{gauge} at {t} has entry bound {bound} > 6")));
            }
            let fast: BTreeSet<GroupElement> =
                enumerate_ball(group, &gauge, t, DEFAULT_BUDGET).map_err(err)?.into_iter().collect();
            let slow = brute_ball(group, &gauge, t, bound as i64);
            if fast != slow {
                return Ok((false, format!("{group} {gauge} at {t}: {} vs brute force {}", fast.len(), slow.len())));
            }
            checked += 1;
            elements += fast.len();
        }
    }
    Ok((true, format!("{checked} balls, {elements} elements, all equal to brute force")))
}

fn criterion_2() -> Outcome {
    let t_big = 150.0;
    let covolume = psl2z_covolume_quadrature().map_err(err)?;
    let t = frobenius_to_distance(t_big);
    let expected = 2.0 * hyperbolic_ball_area(t) / covolume;
    let count = count_series(Group::Sl2Z, &Gauge::frobenius(), &[t_big], DEFAULT_BUDGET).map_err(err)?.counts()[0];
    let dev = (count as f64 / expected - 1.0).abs();
    Ok((
        dev <= 0.03,
        format!("count {count}, expected {expected:.1} (covolume {covolume:.12}), |ratio - 1| = {dev:.5} <= 0.03"),
    ))
}

fn criterion_3() -> Outcome {
    let grid = geometric(40.0, 150.0, 40);
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, gauge) in [
        ("r=1", Gauge::rnorm(1.0).map_err(err)?),
        ("r=2", Gauge::frobenius()),
        ("r=inf", Gauge::rnorm_inf()),
    ] {
        let mut series = count_series(Group::Sl2Z, &gauge, &grid, DEFAULT_BUDGET).map_err(err)?;
        series.set_volumes(|t| expected_count(Group::Sl2Z, &gauge, t)).map_err(err)?;
        let samples: Vec<(f64, f64)> = series
            .rows
            .iter()
            .filter_map(|r| r.abs_dev().filter(|d| *d > 0.0).map(|d| (r.threshold, d)))
            .collect();
        let fit = fit_growth(&samples, FitModel::Power).map_err(err)?;
        pass &= fit.a <= -0.20;
        parts.push(format!("{name}: slope {:.3} (R2 {:.2})", fit.a, fit.r2));
    }
    Ok((pass, format!("{} <= -0.20", parts.join(", "))))
}

fn criterion_4() -> Outcome {
    let grid = geometric(2.0, 150.0, 40);
    let mut pass = true;
    let mut parts = Vec::new();
    for (q, n_q) in [(2u64, 6usize), (3, 24), (5, 120)] {
        let size = sl_mod_q(2, q).map_err(err)?.len();
        let s = deviation_series(Group::Sl2Z, &Gauge::frobenius(), &grid, &TestSystem::Cosets { q }, DEFAULT_BUDGET)
            .map_err(err)?;
        let last = s.rows.last().unwrap().deviation;
        let (raw, _) = decay_fit(&s).map_err(err)?;
        let (fit, _) = decay_fit(&s.envelope()).map_err(err)?;
        pass &= size == n_q && last <= 0.01 && fit.a > 0.0 && fit.r2 >= 0.8;
        parts.push(format!(
            "q={q}: N={size}, dev {last:.2e}, envelope rate {:.3} R2 {:.2} (raw {:.3}, R2 {:.2})",
            fit.a, fit.r2, raw.a, raw.r2
        ));
    }
    Ok((pass, parts.join("; ")))
}

fn criterion_5() -> Outcome {
    let grid = geometric(2.0, 150.0, 40);
    let sys = TestSystem::Torus { m: vec![1, 0], x: TorusPoint::default_2d() };
    let s = deviation_series(Group::Sl2Z, &Gauge::frobenius(), &grid, &sys, DEFAULT_BUDGET).map_err(err)?;
    let last = s.rows.last().unwrap().deviation;
    let (fit, _) = decay_fit(&s).map_err(err)?;
    Ok((
        last <= 0.05 && fit.a > 0.0 && fit.r2 >= 0.7,
        format!("dev {last:.2e} <= 0.05, rate {:.3} > 0, R2 {:.2} >= 0.7", fit.a, fit.r2),
    ))
}

fn criterion_6() -> Outcome {
    let fit_volume = |group: Group, grid: &[f64]| -> Result<f64, String> {
        let samples = grid
            .iter()
            .map(|&t| volume_of_ball(group, &Gauge::frobenius(), t).map(|v| (t, v)))
            .collect::<Result<Vec<_>, _>>()
            .map_err(err)?;
        Ok(fit_growth(&samples, FitModel::Power).map_err(err)?.a)
    };
    let a2 = fit_volume(Group::Sl2Z, &geometric(100.0, 1e4, 12))?;
    let start = Instant::now();
    let a3 = fit_volume(Group::Sl3Z, &geometric(100.0, 1e4, 12))?;
    let sl3_time = start.elapsed();
    Ok((
        (a2 - 2.0).abs() <= 0.05 && (a3 - 6.0).abs() <= 0.2 && sl3_time < Duration::from_secs(300),
        format!("SL2 exponent {a2:.4} (2 +- 0.05), SL3 exponent {a3:.4} (6 +- 0.2) in {:.1}s", sl3_time.as_secs_f64()),
    ))
}

fn criterion_7() -> Outcome {
    let f0 = BinaryForm::from_i64(&[1, 0, 0, 0, 1]).map_err(err)?;
    let stab = stabilizer_order(&f0).map_err(err)?;
    let grid = geometric(1e3, 1e5, 15);
    let rows = orbit_forms_series(&f0, &grid, DEFAULT_BUDGET).map_err(err)?;
    let exact = rows.iter().all(|r| r.gamma_count == r.orbit_count * stab);
    let samples: Vec<(f64, f64)> = grid.iter().zip(&rows).map(|(&t, r)| (t, r.orbit_count as f64)).collect();
    let fit = fit_growth(&samples, FitModel::Power).map_err(err)?;
    Ok((
        stab == 4 && exact && (fit.a - 0.5).abs() <= 0.15,
        format!("stabilizer {stab}, orbit-stabilizer exact: {exact}, exponent {:.3} (0.5 +- 0.15, R2 {:.3})", fit.a, fit.r2),
    ))
}

fn criterion_8() -> Outcome {
    let group = Group::Sl2ZInvP { p: 2 };
    let gauge = Gauge::height(2).map_err(err)?;
    // bijection against an independent scan of C_T
    for t in [2.0, 3.0, 5.0, 8.0] {
        let b = Ball::new(group, &gauge, t).map_err(err)?.entry_bound() as i64;
        let fast: BTreeSet<GroupElement> = enumerate_ball(group, &gauge, t, DEFAULT_BUDGET).map_err(err)?.into_iter().collect();
        if fast != brute_ball(group, &gauge, t, b) {
            return Ok((false, format!("C_T and the height ball differ at T = {t}")));
        }
    }
    let grid = geometric(50.0, 300.0, 15);
    let counts = count_series(group, &gauge, &grid, DEFAULT_BUDGET).map_err(err)?.counts();
    let samples: Vec<(f64, f64)> = grid.iter().zip(&counts).map(|(&t, &c)| (t, c as f64)).collect();
    let fit = fit_growth(&samples, FitModel::Power).map_err(err)?;
    Ok((
        (2.0..=2.3).contains(&fit.a),
        format!("bijection exact at T = 2, 3, 5, 8; growth exponent {:.3} in [2.0, 2.3] (R2 {:.4})", fit.a, fit.r2),
    ))
}

fn criterion_9() -> Outcome {
    let xi0 = xi_eval(0.0).map_err(err)?;
    let grid: Vec<f64> = (0..=30).map(|i| 5.0 + 0.5 * i as f64).collect();
    let fit = xi_decay_fit(&grid).map_err(err)?;
    let alpha = counting_error_exponent(&SpectralParams::new(1.0, None, 3.0, 2.0, 2.0).map_err(err)?);
    let theta = spectral_decay_theta(2.0, &SpectralParams::tempered(1.0, 3.0).map_err(err)?).map_err(err)?;
    Ok((
        (xi0 - 1.0).abs() <= 1e-10 && (fit.a + 1.0).abs() <= 0.05 && alpha == 0.25 && theta == 1.0,
        format!("Xi(0) - 1 = {:.1e}, decay rate {:.4}, alpha = {alpha}, theta = {theta}", xi0 - 1.0, fit.a),
    ))
}

fn criterion_10() -> Outcome {
    let one = BigRational::from_integer(BigInt::from(1));
    let split = vec![vec![0], vec![1]];
    let grid: Vec<f64> = (0..8).map(|i| 10.0 + 3.0 * i as f64).collect();
    let mut pass = true;
    let mut parts = Vec::new();
    for (l, expected) in [(2, BalanceVerdict::Balanced), (3, BalanceVerdict::NotBalanced), (4, BalanceVerdict::NotBalanced)] {
        let w = tensor_weights(l);
        let crit = balanced_weight_criterion(&w, &[one.clone(), one.clone()], &split).map_err(err)?;
        let family = ProductFamily::from_weights(&w, &split).map_err(err)?;
        let vol = balanced_volume_verdict(&family, &grid, 1.0).map_err(err)?;
        pass &= crit.verdict == expected && vol.verdict == expected;
        parts.push(format!("l={l}: {} / {}", crit.verdict, vol.verdict));
    }
    let single = balanced_weight_criterion(&rational_rows(&[vec![1], vec![-1]]), &[one], &[vec![0]]).map_err(err)?;
    pass &= single.verdict == BalanceVerdict::Balanced;
    parts.push(format!("single factor: {}", single.verdict));
    Ok((pass, parts.join("; ")))
}

fn criterion_11() -> Outcome {
    let grid: Vec<f64> = (10..=20).map(f64::from).collect();
    let report = admissibility_estimate(&VolumeProfile::hyperbolic(), &grid, &[0.001, 0.01, 0.05]).map_err(err)?;
    let (lo, hi) = report.rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), r| (l.min(r.c_hat), h.max(r.c_hat)));
    let c_hat = hi;
    let check = product_set_check(10.0, 0.05, c_hat, 10_000, 42, DEFAULT_BUDGET).map_err(err)?;
    Ok((
        (lo - 1.0).abs() <= 0.05 && (hi - 1.0).abs() <= 0.05 && check.violations == 0,
        format!(
            "c_hat in [{lo:.4}, {hi:.4}], {} violations in {} samples over {} shell points",
            check.violations, check.samples, check.shell_points
        ),
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("exact-count oracle", criterion_1),
        ("main counting law", criterion_2),
        ("error exponent", criterion_3),
        ("coset equidistribution", criterion_4),
        ("torus decay", criterion_5),
        ("volume growth", criterion_6),
        ("forms orbit growth", criterion_7),
        ("S-arithmetic counting", criterion_8),
        ("spectral consistency", criterion_9),
        ("balancedness", criterion_10),
        ("admissibility", criterion_11),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let (ok, detail) = match run() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!ok);
        println!(
            "{} {id:>2} {name}: {detail} [{:.2}s]",
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
