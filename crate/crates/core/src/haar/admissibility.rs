use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::enumerate::{Ball, Group};
use crate::error::{Error, Result};
use crate::gauges::Gauge;

use super::VolumeProfile;

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct LipschitzRow {
    pub t: f64,
    pub eps: f64,
    /// `(v(t + eps) - v(t)) / (eps v(t))`.
    pub c_hat: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum AdmissibilityVerdict {
    AdmissibleLike,
    NotAdmissible,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct AdmissibilityReport {
    pub rows: Vec<LipschitzRow>,
    /// Largest `c_hat` over the grid.
    pub sup: f64,
    /// `max / min` of `c_hat` over the top decade of `t`.
    pub variation: f64,
    pub verdict: AdmissibilityVerdict,
}

impl AdmissibilityReport {
    /// Mean of `c_hat` over rows with `t` in `[lo, hi]`.
    pub fn mean_over(&self, lo: f64, hi: f64) -> Option<f64> {
        let sel: Vec<f64> = self.rows.iter().filter(|r| r.t >= lo && r.t <= hi).map(|r| r.c_hat).collect();
        (!sel.is_empty()).then(|| sel.iter().sum::<f64>() / sel.len() as f64)
    }
}

/// Empirical log-Lipschitz constants of a volume profile.
///
/// The verdict is admissible-like when every `c_hat` is finite and, over
/// `t` in `[t_max / 10, t_max]`, the largest is less than twice the smallest.
pub fn admissibility_estimate(profile: &VolumeProfile, t_grid: &[f64], eps_grid: &[f64]) -> Result<AdmissibilityReport> {
    if t_grid.is_empty() || eps_grid.is_empty() {
        return Err(Error::InvalidInput("empty admissibility grid".into()));
    }
    if eps_grid.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidInput("eps must be positive".into()));
    }
    let mut rows = Vec::with_capacity(t_grid.len() * eps_grid.len());
    for &t in t_grid {
        let v = profile.eval(t)?;
        for &eps in eps_grid {
            let dv = profile.eval(t + eps)? - v;
            let c_hat = if v > 0.0 {
                dv / (eps * v)
            } else if dv == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            rows.push(LipschitzRow { t, eps, c_hat });
        }
    }
    let sup = rows.iter().map(|r| r.c_hat).fold(f64::NEG_INFINITY, f64::max);
    let t_max = t_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let top: Vec<f64> = rows.iter().filter(|r| r.t >= t_max / 10.0).map(|r| r.c_hat).collect();
    let (lo, hi) = top.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &c| (l.min(c), h.max(c)));
    let variation = if hi == 0.0 { 1.0 } else { hi / lo };
    let verdict = if sup.is_finite() && variation < 2.0 {
        AdmissibilityVerdict::AdmissibleLike
    } else {
        AdmissibilityVerdict::NotAdmissible
    };
    Ok(AdmissibilityReport { rows, sup, variation, verdict })
}

/// Outcome of sampling `u g u'` with `g` near the boundary of `G_t`.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ProductCheck {
    pub samples: usize,
    pub shell_points: usize,
    pub violations: usize,
    /// Largest `|u g u'| - t - c_hat eps` seen (negative when all pass).
    pub max_excess: f64,
}

/// `exp(X)` for `X = [[a, b], [c, -a]]`, using `X^2 = (a^2 + bc) I`.
fn exp_sl2(a: f64, b: f64, c: f64) -> [f64; 4] {
    let delta = a * a + b * c;
    let (ch, sh) = if delta > 0.0 {
        let r = delta.sqrt();
        (r.cosh(), r.sinh() / r)
    } else if delta < 0.0 {
        let r = (-delta).sqrt();
        (r.cos(), r.sin() / r)
    } else {
        (1.0, 1.0)
    };
    [ch + sh * a, sh * b, sh * c, ch - sh * a]
}

fn mul2(x: &[f64; 4], y: &[f64; 4]) -> [f64; 4] {
    [
        x[0] * y[0] + x[1] * y[2],
        x[0] * y[1] + x[1] * y[3],
        x[2] * y[0] + x[3] * y[2],
        x[2] * y[1] + x[3] * y[3],
    ]
}

/// A point on the boundary of `O_eps`.
///
/// `O_eps` is the `eps`-ball for the left-invariant metric given on the Lie
/// algebra by `2 sqrt(2) |X|_F`. An element `exp(X)` moves `i` by at most
/// `sqrt(2) |X|_F`, so in this normalization each side of `u g u'`
/// contributes at most `eps / 2` to the hyperbolic gauge.
pub fn sample_perturbation(eps: f64, rng: &mut impl Rng) -> [f64; 4] {
    let radius = eps / (2.0 * 2f64.sqrt());
    let w: [f64; 3] = loop {
        let w = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let n2: f64 = w.iter().map(|x| x * x).sum();
        if n2 > 1e-6 && n2 <= 1.0 {
            let n = n2.sqrt();
            break w.map(|x| x / n * radius);
        }
    };
    // |X|_F^2 = 2 a^2 + b^2 + c^2
    exp_sl2(w[0] / 2f64.sqrt(), w[1], w[2])
}

/// Samples `u g u'` with `u, u'` in `O_eps` and `g` a lattice point of
/// hyperbolic gauge in `[t - 1, t]`, counting how often the gauge exceeds
/// `t + c_hat eps`.
pub fn product_set_check(t: f64, eps: f64, c_hat: f64, samples: usize, seed: u64, budget: u64) -> Result<ProductCheck> {
    let gauge = Gauge::hyperbolic();
    let ball = Ball::new(Group::Sl2Z, &gauge, t)?;
    ball.check_budget(budget)?;
    let shell: Vec<[f64; 4]> = ball
        .points()
        .into_iter()
        .filter(|(_, v)| *v >= t - 1.0)
        .map(|(pt, _)| {
            let e = pt.entries();
            [e[0] as f64, e[1] as f64, e[2] as f64, e[3] as f64]
        })
        .collect();
    if shell.is_empty() {
        return Err(Error::InvalidInput(format!("no lattice points near the boundary at t = {t}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let limit = t + c_hat * eps;
    let mut violations = 0;
    let mut max_excess = f64::NEG_INFINITY;
    for _ in 0..samples {
        let g = &shell[rng.gen_range(0..shell.len())];
        let u = sample_perturbation(eps, &mut rng);
        let v = sample_perturbation(eps, &mut rng);
        let m = mul2(&mul2(&u, g), &v);
        let d = (0.5 * m.iter().map(|x| x * x).sum::<f64>()).max(1.0).acosh();
        let excess = d - limit;
        max_excess = max_excess.max(excess);
        if excess > 1e-9 {
            violations += 1;
        }
    }
    Ok(ProductCheck { samples, shell_points: shell.len(), violations, max_excess })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hyperbolic_constants() {
        let p = VolumeProfile::hyperbolic();
        let grid: Vec<f64> = (10..=20).map(f64::from).collect();
        let r = admissibility_estimate(&p, &grid, &[0.001]).unwrap();
        assert_eq!(r.verdict, AdmissibilityVerdict::AdmissibleLike);
        assert!((r.mean_over(10.0, 20.0).unwrap() - 1.0).abs() < 0.01);
        // c_hat ~ 2 / t near the origin
        let r = admissibility_estimate(&p, &[1e-3], &[1e-6]).unwrap();
        assert!((r.rows[0].c_hat * 1e-3 / 2.0 - 1.0).abs() < 0.01);
    }

    #[test]
    fn constant_profile() {
        let p = VolumeProfile::new(crate::gauges::Scale::Log, 0.0, |_| Ok(3.0));
        let r = admissibility_estimate(&p, &[1.0, 2.0, 5.0], &[0.1, 0.5]).unwrap();
        assert!(r.rows.iter().all(|row| row.c_hat == 0.0));
        assert_eq!(r.verdict, AdmissibilityVerdict::AdmissibleLike);
        assert!(admissibility_estimate(&p, &[], &[0.1]).is_err());
    }

    #[test]
    fn super_exponential_growth_is_flagged() {
        let p = VolumeProfile::new(crate::gauges::Scale::Log, 0.0, |t| Ok((t * t).exp()));
        let grid: Vec<f64> = (1..=20).map(f64::from).collect();
        let r = admissibility_estimate(&p, &grid, &[0.01]).unwrap();
        assert_eq!(r.verdict, AdmissibilityVerdict::NotAdmissible);
    }

    #[test]
    fn perturbations_stay_in_the_neighbourhood() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let u = sample_perturbation(0.1, &mut rng);
            assert!((u[0] * u[3] - u[1] * u[2] - 1.0).abs() < 1e-12);
            let d = (0.5 * u.iter().map(|x| x * x).sum::<f64>()).max(1.0).acosh();
            assert!(d <= 0.05 + 1e-12);
        }
    }

    #[test]
    fn no_violations_at_moderate_t() {
        let c = product_set_check(6.0, 0.05, 1.0, 2000, 7, 10_000_000).unwrap();
        assert_eq!(c.violations, 0);
        assert!(c.shell_points > 0 && c.max_excess <= 0.0);
    }
}
