//! Exact enumeration of `Gamma ∩ G_t`.
//!
//! Enumeration is algebraic: the determinant condition is solved rather than
//! searched for. In `SL_2` every first row `(a, b)` with `gcd(a, b) | det`
//! determines an arithmetic progression of second rows, which is cut down by
//! the entry bound of the gauge and then filtered exactly. `SL_3` is a pruned
//! nested search over the first two rows with the last row solved from the
//! determinant.
//!
//! Work is split into chunks keyed by `(k, a)` (the `p`-power and the first
//! entry). Chunking does not depend on the thread count, and every chunk
//! emits its points sorted, so concatenating chunk outputs in key order gives
//! the canonical global order regardless of how many workers ran.

mod orbits;
mod series;

use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use rayon::prelude::*;

use crate::arith::GroupElement;
use crate::error::{Error, Result};
use crate::gauges::{Gauge, GaugeKind, NormIndex};

pub use orbits::{orbit_forms_count, orbit_forms_series, stabilizer_order, OrbitCount};
pub use series::{coset_histogram, count_series, CosetHistogram, CountRow, CountSeries, COUNT_CSV_HEADER};
pub(crate) use series::{bucket, check_thresholds};

/// Default cap on the estimated number of enumerated elements.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// The element budget, honouring the `LATCOUNT_BUDGET` environment variable.
pub fn budget_from_env() -> u64 {
    std::env::var("LATCOUNT_BUDGET")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_BUDGET)
}

/// The supported lattices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Group {
    /// `SL_2(Z)` in `SL_2(R)`.
    Sl2Z,
    /// `SL_3(Z)` in `SL_3(R)`.
    Sl3Z,
    /// `SL_2(Z[1/p])` in `SL_2(R) x SL_2(Q_p)`.
    Sl2ZInvP { p: u64 },
}

/// Squared Haar covolume of `PSL_2(Z)` for the hyperbolic area measure,
/// `pi / 3`. Reproduced by quadrature in `haar::psl2z_covolume_quadrature`.
pub const PSL2Z_COVOLUME: f64 = 1.047_197_551_196_597_6;

impl Group {
    pub fn dim(&self) -> usize {
        match self {
            Group::Sl2Z | Group::Sl2ZInvP { .. } => 2,
            Group::Sl3Z => 3,
        }
    }

    pub fn prime(&self) -> Option<u64> {
        match self {
            Group::Sl2ZInvP { p } => Some(*p),
            _ => None,
        }
    }

    /// Order of the centre acting trivially on the symmetric space; counts
    /// in `SL_2` are compared with this multiple of the `PSL_2` volume.
    pub fn center_order(&self) -> u32 {
        match self {
            Group::Sl2Z | Group::Sl2ZInvP { .. } => 2,
            Group::Sl3Z => 1,
        }
    }

    /// Covolume of the image lattice in the geometric Haar normalization,
    /// where known.
    pub fn covolume(&self) -> Option<f64> {
        match self {
            Group::Sl2Z => Some(PSL2Z_COVOLUME),
            _ => None,
        }
    }

    /// Upper local dimension of the ambient group (its Archimedean dimension).
    pub fn local_dimension(&self) -> f64 {
        match self {
            Group::Sl2Z | Group::Sl2ZInvP { .. } => 3.0,
            Group::Sl3Z => 8.0,
        }
    }

    /// Parses `sl2z`, `sl3z` or `sl2z1p` (the last needs the prime).
    pub fn parse(name: &str, prime: Option<u64>) -> Result<Self> {
        match name {
            "sl2z" => Ok(Group::Sl2Z),
            "sl3z" => Ok(Group::Sl3Z),
            "sl2z1p" => {
                let p = prime.ok_or_else(|| Error::InvalidInput("sl2z1p needs a prime".into()))?;
                if !crate::arith::is_prime(p) {
                    return Err(Error::InvalidInput(format!("{p} is not prime")));
                }
                Ok(Group::Sl2ZInvP { p })
            }
            _ => Err(Error::Parse(format!("unknown group `{name}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Group::Sl2Z => "sl2z",
            Group::Sl3Z => "sl3z",
            Group::Sl2ZInvP { .. } => "sl2z1p",
        }
    }

    fn supports(&self, gauge: &Gauge) -> bool {
        match (self, gauge.kind()) {
            (Group::Sl2Z, GaugeKind::WeightedProduct { .. }) => false,
            (Group::Sl2Z, _) => true,
            (Group::Sl3Z, GaugeKind::RNorm(_)) => true,
            (Group::Sl2ZInvP { p }, GaugeKind::Height { p: q }) => p == q,
            _ => false,
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Group::Sl2ZInvP { p } => write!(f, "sl2z1p(p={p})"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for Group {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.strip_prefix("sl2z1p(p=").and_then(|r| r.strip_suffix(')')) {
            Some(p) => Group::parse("sl2z1p", p.parse().ok()),
            None => Group::parse(s, None),
        }
    }
}

/// A lattice point `p^-k A` with small integral part, as produced by the
/// enumerator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MatrixPoint {
    k: u32,
    n: u8,
    entries: [i64; 9],
}

impl MatrixPoint {
    fn new2(k: u32, e: [i64; 4]) -> Self {
        let mut entries = [0; 9];
        entries[..4].copy_from_slice(&e);
        MatrixPoint { k, n: 2, entries }
    }

    fn new3(e: [i64; 9]) -> Self {
        MatrixPoint { k: 0, n: 3, entries: e }
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn p_power(&self) -> u32 {
        self.k
    }

    /// Row-major entries of the integral part.
    pub fn entries(&self) -> &[i64] {
        &self.entries[..self.n() * self.n()]
    }

    pub fn to_element(&self, group: Group) -> GroupElement {
        match group.prime() {
            Some(p) => GroupElement::scaled_i64(self.n(), self.entries(), self.k, p),
            None => GroupElement::from_i64(self.n(), self.entries()),
        }
        .expect("enumerated points satisfy the determinant condition")
    }

    /// Entries reduced mod `q`, reading `p^-k` as the inverse of `p^k`.
    pub fn residues(&self, group: Group, q: u64) -> Result<Vec<u64>> {
        if self.k == 0 {
            let q = q as i64;
            return Ok(self.entries().iter().map(|&e| e.rem_euclid(q) as u64).collect());
        }
        Ok(self.to_element(group).reduce_mod(q)?.entries().to_vec())
    }
}

/// Enumeration of one `(group, gauge)` pair below a threshold.
#[derive(Clone, Debug)]
pub struct Ball {
    group: Group,
    gauge: Gauge,
    threshold: f64,
    bound: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct ChunkKey {
    k: u32,
    a: i64,
}

impl Ball {
    pub fn new(group: Group, gauge: &Gauge, threshold: f64) -> Result<Self> {
        if !group.supports(gauge) {
            return Err(Error::Unsupported(format!("gauge `{gauge}` on {group}")));
        }
        if !threshold.is_finite() {
            return Err(Error::InvalidInput(format!("threshold {threshold} is not finite")));
        }
        let bound = gauge.entry_bound(threshold)?;
        if bound > (1 << 24) {
            return Err(Error::Unsupported(format!("entry bound {bound} is beyond desk scale")));
        }
        Ok(Ball { group, gauge: gauge.clone(), threshold, bound: bound as i64 })
    }

    pub fn entry_bound(&self) -> u64 {
        self.bound as u64
    }

    /// Rough size of the output, used against the element budget.
    pub fn estimated_size(&self) -> u64 {
        let b = self.bound as f64 + 1.0;
        let est = match self.group {
            Group::Sl2Z => 10.0 * b * b,
            Group::Sl3Z => 2.0 * b.powi(6),
            Group::Sl2ZInvP { .. } => 10.0 * b * b * (self.max_k() as f64 + 1.0),
        };
        est.min(u64::MAX as f64) as u64 + 10
    }

    pub fn check_budget(&self, budget: u64) -> Result<()> {
        let estimate = self.estimated_size();
        if estimate > budget {
            return Err(Error::BudgetExceeded { estimate, budget });
        }
        Ok(())
    }

    /// Largest `k` with `p^(2k) <= T^2 / 2`, the most a determinant of an
    /// integral matrix of Frobenius norm `T` can be.
    fn max_k(&self) -> u32 {
        let Some(p) = self.group.prime() else { return 0 };
        let t = self.gauge.to_raw(self.threshold);
        let limit = t * t / 2.0;
        let mut k = 0;
        let mut m = 1.0f64;
        while m * (p * p) as f64 <= limit {
            m *= (p * p) as f64;
            k += 1;
        }
        k
    }

    fn chunks(&self) -> Vec<ChunkKey> {
        let ks = 0..=self.max_k();
        ks.flat_map(|k| (-self.bound..=self.bound).map(move |a| ChunkKey { k, a })).collect()
    }

    fn visit_chunk(&self, key: ChunkKey, out: &mut Vec<(MatrixPoint, f64)>) {
        match self.group {
            Group::Sl2Z => self.sl2_chunk(key, 1, None, out),
            Group::Sl2ZInvP { p } => {
                let m = (p as i64).pow(2 * key.k);
                self.sl2_chunk(key, m, Some(p), out)
            }
            Group::Sl3Z => self.sl3_chunk(key.a, out),
        }
    }

    /// Runs `fold` over every chunk in parallel and returns the per-chunk
    /// accumulators in canonical chunk order.
    pub fn fold_chunks<A, F>(&self, init: impl Fn() -> A + Sync, fold: F) -> Vec<A>
    where
        A: Send,
        F: Fn(&mut A, &MatrixPoint, f64) + Sync,
    {
        self.chunks()
            .into_par_iter()
            .map(|key| {
                let mut points = Vec::new();
                self.visit_chunk(key, &mut points);
                points.sort_unstable_by_key(|p| p.0);
                let mut acc = init();
                for (pt, v) in &points {
                    fold(&mut acc, pt, *v);
                }
                acc
            })
            .collect()
    }

    /// All points with their gauge values, in canonical order.
    pub fn points(&self) -> Vec<(MatrixPoint, f64)> {
        self.fold_chunks(Vec::new, |acc, pt, v| acc.push((*pt, v))).into_iter().flatten().collect()
    }

    pub fn count(&self) -> u64 {
        self.fold_chunks(|| 0u64, |acc, _, _| *acc += 1).into_iter().sum()
    }

    /// Squared Frobenius radius, for gauges whose sublevel sets are Frobenius
    /// balls on the integral part.
    fn frobenius_radius_sq(&self) -> Option<f64> {
        match self.gauge.kind() {
            GaugeKind::Hyperbolic => Some(2.0 * self.threshold.cosh()),
            GaugeKind::RNorm(NormIndex::Finite(r)) if *r == 2.0 => Some(self.gauge.to_raw(self.threshold).powi(2)),
            GaugeKind::Height { .. } => Some(self.gauge.to_raw(self.threshold).powi(2)),
            _ => None,
        }
    }

    /// Points with first row `(a, b)` and `a d - b c = m`.
    fn sl2_chunk(&self, key: ChunkKey, m: i64, prime: Option<u64>, out: &mut Vec<(MatrixPoint, f64)>) {
        let (a, bound) = (key.a, self.bound);
        let radius_sq = self.frobenius_radius_sq();
        for b in -bound..=bound {
            if a == 0 && b == 0 {
                continue;
            }
            let g = a.gcd(&b);
            if m % g != 0 {
                continue;
            }
            if let Some(r2) = radius_sq {
                if ((a * a + b * b) as f64) > r2 {
                    continue;
                }
            }
            let (sa, sb) = (a / g, b / g);
            let e = sa.extended_gcd(&sb);
            // sa * d0 - sb * c0 = 1
            let scale = m / g;
            let (c0, d0) = (-e.y * scale, e.x * scale);
            let Some((mut lo, mut hi)) = intersect(step_range(c0, sa, bound), step_range(d0, sb, bound)) else {
                continue;
            };
            if let Some(r2) = radius_sq {
                let s = (sa * sa + sb * sb) as f64;
                let dot = (c0 * sa + d0 * sb) as f64;
                let center = -dot / s;
                let base_sq = (c0 as f64).powi(2) + (d0 as f64).powi(2);
                let rem = r2 - (a * a + b * b) as f64 - (base_sq - dot * dot / s);
                if rem < -1e-6 * r2.max(1.0) {
                    continue;
                }
                let half = (rem.max(0.0) / s).sqrt();
                lo = lo.max((center - half).floor() as i64 - 1);
                hi = hi.min((center + half).ceil() as i64 + 1);
            }
            for j in lo..=hi {
                let (c, d) = (c0 + j * sa, d0 + j * sb);
                if let Some(p) = prime {
                    let p = p as i64;
                    if [a, b, c, d].iter().all(|x| x % p == 0) {
                        continue;
                    }
                }
                let entries = [a, b, c, d];
                let v = self.gauge.eval_small(2, &entries, key.k, prime);
                if v <= self.threshold {
                    out.push((MatrixPoint::new2(key.k, entries), v));
                }
            }
        }
    }

    /// Points of `SL_3(Z)` with first entry `a`.
    fn sl3_chunk(&self, a: i64, out: &mut Vec<(MatrixPoint, f64)>) {
        let bound = self.bound;
        let raw = self.gauge.to_raw(self.threshold);
        // partial power sums bound the remaining entries
        let power = match self.gauge.kind() {
            GaugeKind::RNorm(NormIndex::Finite(r)) => Some(*r),
            _ => None,
        };
        let budget = power.map(|r| raw.powf(r) * (1.0 + 1e-12));
        let cost = |x: i64| power.map_or(0.0, |r| (x.abs() as f64).powf(r));
        let mut e = [0i64; 9];
        e[0] = a;
        let range = || -bound..=bound;
        for u1 in range() {
            for u2 in range() {
                let su = cost(a) + cost(u1) + cost(u2);
                if (a, u1, u2) == (0, 0, 0) || budget.is_some_and(|b| su + 2.0 > b) {
                    continue;
                }
                for v0 in range() {
                    for v1 in range() {
                        for v2 in range() {
                            let sv = su + cost(v0) + cost(v1) + cost(v2);
                            if budget.is_some_and(|b| sv + 1.0 > b) {
                                continue;
                            }
                            // cross product: det = w . (u x v)
                            let nrm = [u1 * v2 - u2 * v1, u2 * v0 - a * v2, a * v1 - u1 * v0];
                            if nrm[0].gcd(&nrm[1]).gcd(&nrm[2]) != 1 {
                                continue;
                            }
                            let pivot = (0..3).max_by_key(|&i| nrm[i].abs()).unwrap();
                            let (i1, i2) = match pivot {
                                0 => (1, 2),
                                1 => (0, 2),
                                _ => (0, 1),
                            };
                            for w1 in range() {
                                if budget.is_some_and(|b| sv + cost(w1) > b) {
                                    continue;
                                }
                                for w2 in range() {
                                    let rest = 1 - nrm[i1] * w1 - nrm[i2] * w2;
                                    if rest % nrm[pivot] != 0 {
                                        continue;
                                    }
                                    let wp = rest / nrm[pivot];
                                    if wp.abs() > bound {
                                        continue;
                                    }
                                    let mut w = [0i64; 3];
                                    w[i1] = w1;
                                    w[i2] = w2;
                                    w[pivot] = wp;
                                    e[1..3].copy_from_slice(&[u1, u2]);
                                    e[3..6].copy_from_slice(&[v0, v1, v2]);
                                    e[6..9].copy_from_slice(&w);
                                    let v = self.gauge.eval_small(3, &e, 0, None);
                                    if v <= self.threshold {
                                        out.push((MatrixPoint::new3(e), v));
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

/// `j` with `|base + j * step| <= bound`; `None` bounds mean unconstrained.
fn step_range(base: i64, step: i64, bound: i64) -> (Option<i64>, Option<i64>, bool) {
    if step == 0 {
        return (None, None, base.abs() <= bound);
    }
    let (lo, hi) = if step > 0 {
        (Integer::div_ceil(&(-bound - base), &step), Integer::div_floor(&(bound - base), &step))
    } else {
        (Integer::div_ceil(&(bound - base), &step), Integer::div_floor(&(-bound - base), &step))
    };
    (Some(lo), Some(hi), lo <= hi)
}

fn intersect(
    x: (Option<i64>, Option<i64>, bool),
    y: (Option<i64>, Option<i64>, bool),
) -> Option<(i64, i64)> {
    if !x.2 || !y.2 {
        return None;
    }
    let lo = [x.0, y.0].into_iter().flatten().max()?;
    let hi = [x.1, y.1].into_iter().flatten().min()?;
    (lo <= hi).then_some((lo, hi))
}

/// Every lattice element with gauge at most `threshold`, each once, in
/// canonical order.
pub fn enumerate_ball(group: Group, gauge: &Gauge, threshold: f64, budget: u64) -> Result<Vec<GroupElement>> {
    let ball = Ball::new(group, gauge, threshold)?;
    ball.check_budget(budget)?;
    Ok(ball.points().into_iter().map(|(pt, _)| pt.to_element(group)).collect())
}
