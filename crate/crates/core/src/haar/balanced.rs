use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::gauges::Scale;

use super::VolumeProfile;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum BalanceVerdict {
    Balanced,
    NotBalanced,
}

impl std::fmt::Display for BalanceVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BalanceVerdict::Balanced => "BALANCED",
            BalanceVerdict::NotBalanced => "NOT BALANCED",
        })
    }
}

/// Result of the weight-polytope test.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightCriterion {
    /// Vertices of `{H >= 0 : lambda(H) <= 1 for every weight}`.
    pub vertices: Vec<Vec<BigRational>>,
    /// `max rho` over the polytope.
    pub delta: BigRational,
    /// The vertices where the maximum is attained.
    pub argmax: Vec<Vec<BigRational>>,
    pub verdict: BalanceVerdict,
}

type Row = (Vec<BigRational>, BigRational);

/// Solves the square system `rows` exactly; `None` if singular.
fn solve(rows: &[&Row]) -> Option<Vec<BigRational>> {
    let d = rows.len();
    let mut m: Vec<Vec<BigRational>> = rows
        .iter()
        .map(|(a, b)| {
            let mut r = a.clone();
            r.push(b.clone());
            r
        })
        .collect();
    for col in 0..d {
        let pivot = (col..d).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot);
        let p = m[col][col].clone();
        for x in m[col].iter_mut() {
            *x = &*x / &p;
        }
        for r in 0..d {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c in 0..=d {
                    let delta = &f * &m[col][c];
                    m[r][c] -= delta;
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[d].clone()).collect())
}

fn dot(a: &[BigRational], x: &[BigRational]) -> BigRational {
    a.iter().zip(x).fold(BigRational::zero(), |acc, (ai, xi)| acc + ai * xi)
}

/// Vertices of `{x : a.x <= b for every inequality, a.x = b for every
/// equality}` by brute force over `d`-subsets of active constraints.
fn vertices(d: usize, ineq: &[Row], eq: &[Row]) -> Vec<Vec<BigRational>> {
    let free = d - eq.len();
    let mut out: Vec<Vec<BigRational>> = Vec::new();
    let mut idx: Vec<usize> = (0..free).collect();
    if free > ineq.len() {
        return out;
    }
    loop {
        let rows: Vec<&Row> = eq.iter().chain(idx.iter().map(|&i| &ineq[i])).collect();
        if let Some(x) = solve(&rows) {
            if ineq.iter().all(|(a, b)| dot(a, &x) <= *b) && !out.contains(&x) {
                out.push(x);
            }
        }
        // next combination
        let mut i = free;
        loop {
            if i == 0 {
                out.sort();
                return out;
            }
            i -= 1;
            if idx[i] < ineq.len() - free + i {
                idx[i] += 1;
                for j in i + 1..free {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
        if free == 0 {
            out.sort();
            return out;
        }
    }
}

/// Integer weight vectors as exact rationals.
pub fn rational_rows(rows: &[Vec<i64>]) -> Vec<Vec<BigRational>> {
    rows.iter().map(|r| r.iter().map(|&x| BigRational::from_integer(BigInt::from(x))).collect()).collect()
}

/// Weights `+-h1 + (l - 1 - 2j) h2` of the tensor product of the standard
/// representation of one `SL_2` factor with the `l`-dimensional one of the
/// other.
pub fn tensor_weights(l: i64) -> Vec<Vec<BigRational>> {
    let mut rows = Vec::new();
    for sign in [1, -1] {
        for j in 0..l {
            rows.push(vec![sign, l - 1 - 2 * j]);
        }
    }
    rational_rows(&rows)
}

fn check_split(d: usize, factor_split: &[Vec<usize>]) -> Result<()> {
    let mut seen = vec![false; d];
    for &i in factor_split.iter().flatten() {
        if i >= d || std::mem::replace(&mut seen[i], true) {
            return Err(Error::InvalidInput("factor split must partition the coordinates".into()));
        }
    }
    if seen.iter().any(|s| !s) || factor_split.iter().any(Vec::is_empty) {
        return Err(Error::InvalidInput("factor split must partition the coordinates".into()));
    }
    Ok(())
}

/// Whether `max rho` over `{H in a+ : lambda(H) <= 1}` is attained at a
/// point whose every factor block is nonzero.
///
/// `a+` is the nonnegative orthant of `R^d` (`d <= 3`). All coordinates
/// of the maximizing face are nonnegative, so a block is nonzero somewhere
/// on the face iff it is nonzero at one of the maximizing vertices.
pub fn balanced_weight_criterion(
    weights: &[Vec<BigRational>],
    rho: &[BigRational],
    factor_split: &[Vec<usize>],
) -> Result<WeightCriterion> {
    let d = rho.len();
    if d == 0 || d > 3 {
        return Err(Error::Unsupported(format!("weight polytopes in dimension {d}")));
    }
    if weights.iter().any(|w| w.len() != d) {
        return Err(Error::DimensionMismatch(d, weights.iter().map(Vec::len).find(|&l| l != d).unwrap_or(d)));
    }
    check_split(d, factor_split)?;
    let unit = |i: usize, s: i64| -> Vec<BigRational> {
        (0..d).map(|j| BigRational::from_integer(BigInt::from(if i == j { s } else { 0 }))).collect()
    };
    let chamber: Vec<Row> = (0..d).map(|i| (unit(i, -1), BigRational::zero())).collect();
    // bounded iff the recession cone {H >= 0, lambda(H) <= 0} is {0}
    let mut cone = chamber.clone();
    cone.extend(weights.iter().map(|w| (w.clone(), BigRational::zero())));
    let simplex = (vec![BigRational::one(); d], BigRational::one());
    if !vertices(d, &cone, &[simplex]).is_empty() {
        return Err(Error::UnboundedPolytope);
    }
    let mut ineq = chamber;
    ineq.extend(weights.iter().map(|w| (w.clone(), BigRational::one())));
    let verts = vertices(d, &ineq, &[]);
    let values: Vec<BigRational> = verts.iter().map(|v| dot(rho, v)).collect();
    let delta = values.iter().max().cloned().expect("0 is a vertex");
    let argmax: Vec<Vec<BigRational>> =
        verts.iter().zip(&values).filter(|(_, val)| **val == delta).map(|(v, _)| v.clone()).collect();
    let balanced = factor_split
        .iter()
        .all(|block| argmax.iter().any(|v| block.iter().any(|&i| v[i].is_positive())));
    let verdict = if balanced { BalanceVerdict::Balanced } else { BalanceVerdict::NotBalanced };
    Ok(WeightCriterion { vertices: verts, delta, argmax, verdict })
}

/// Sets `{(x_1, ..., x_k) : (sum_i w_i x_i^e)^(1/e) <= t}` in a product of
/// groups, each factor measured by its own volume profile in `x_i >= 0`.
#[derive(Clone, Debug)]
pub struct ProductFamily {
    factors: Vec<VolumeProfile>,
    weights: Vec<f64>,
    exponent: f64,
    grid: usize,
}

/// `cosh(2x) - 1`: the `SL_2(R)` profile in the Cartan parameter, up to a
/// constant.
fn sl2_cartan_profile() -> VolumeProfile {
    VolumeProfile::new(Scale::Log, 0.0, |x| Ok(2.0 * x.sinh().powi(2)))
}

impl ProductFamily {
    pub fn new(factors: Vec<VolumeProfile>, weights: Vec<f64>, exponent: f64) -> Result<Self> {
        if factors.is_empty() || factors.len() != weights.len() || factors.len() > 3 {
            return Err(Error::InvalidInput("one to three factors, one weight each".into()));
        }
        if weights.iter().any(|&w| !(w > 0.0)) || !(exponent >= 1.0) {
            return Err(Error::InvalidInput("weights must be positive and exponent >= 1".into()));
        }
        if factors.iter().any(|f| f.scale() != Scale::Log) {
            return Err(Error::ScaleMismatch("factor profiles must be on the t scale".into()));
        }
        let grid = if factors.len() == 3 { 400 } else { 4000 };
        Ok(ProductFamily { factors, weights, exponent, grid })
    }

    /// Products of `SL_2` factors whose gauge is the highest weight of a
    /// representation: `|g| = lambda*(H)` where `lambda*` dominates every
    /// weight on the positive chamber.
    pub fn from_weights(weights: &[Vec<BigRational>], factor_split: &[Vec<usize>]) -> Result<Self> {
        let d = factor_split.iter().map(Vec::len).sum();
        check_split(d, factor_split)?;
        if factor_split.iter().any(|b| b.len() != 1) {
            return Err(Error::Unsupported("only products of rank-one factors".into()));
        }
        let top = weights
            .iter()
            .find(|w| weights.iter().all(|v| w.iter().zip(v).all(|(a, b)| a >= b)))
            .ok_or_else(|| Error::Unsupported("no weight dominates the others on the chamber".into()))?;
        let coeffs: Vec<f64> = factor_split.iter().map(|b| top[b[0]].to_f64().unwrap_or(f64::NAN)).collect();
        let factors = vec![sl2_cartan_profile(); coeffs.len()];
        Self::new(factors, coeffs, 1.0)
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// Mass of `{sum_{i in idx} w_i x_i^e <= budget}`, with factor `cap.0`
    /// restricted to `x <= cap.1`.
    fn mass(&self, idx: &[usize], budget: f64, cap: Option<(usize, f64)>) -> Result<f64> {
        let e = self.exponent;
        let (&j, rest) = idx.split_last().expect("nonempty");
        let mut x_max = (budget.max(0.0) / self.weights[j]).powf(1.0 / e);
        if let Some((c, q)) = cap {
            if c == j {
                x_max = x_max.min(q);
            }
        }
        let v = &self.factors[j];
        if rest.is_empty() {
            return v.eval(x_max);
        }
        let mut acc = v.eval(0.0)? * self.mass(rest, budget, cap)?;
        if x_max <= 0.0 {
            return Ok(acc);
        }
        let h = x_max / self.grid as f64;
        let mut prev = v.eval(0.0)?;
        for i in 0..self.grid {
            let next = v.eval((i + 1) as f64 * h)?;
            let mid = (i as f64 + 0.5) * h;
            acc += self.mass(rest, budget - self.weights[j] * mid.powf(e), cap)? * (next - prev);
            prev = next;
        }
        Ok(acc)
    }

    /// Volume of the set at parameter `t`.
    pub fn volume(&self, t: f64) -> Result<f64> {
        let idx: Vec<usize> = (0..self.len()).collect();
        self.mass(&idx, t.max(0.0).powf(self.exponent), None)
    }

    /// Volume of the part whose `factor` component has parameter at most `q`.
    pub fn slice_volume(&self, t: f64, factor: usize, q: f64) -> Result<f64> {
        let idx: Vec<usize> = (0..self.len()).collect();
        self.mass(&idx, t.max(0.0).powf(self.exponent), Some((factor, q)))
    }
}

/// Largest fraction of the volume whose component in a single factor stays
/// in the compact set `{x <= q}`. Zero for one factor, where no proper
/// subproduct exists.
pub fn balanced_volume_ratio(family: &ProductFamily, t: f64, q: f64) -> Result<f64> {
    if family.len() < 2 {
        return Ok(0.0);
    }
    let total = family.volume(t)?;
    if total <= 0.0 {
        return Err(Error::InvalidInput(format!("empty set at t = {t}")));
    }
    let mut worst: f64 = 0.0;
    for f in 0..family.len() {
        worst = worst.max(family.slice_volume(t, f, q)? / total);
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct VolumeRatioReport {
    pub rows: Vec<(f64, f64)>,
    /// Extrapolated `t -> inf` limit from `r = r_inf + c / t` on the top half.
    pub limit: f64,
    pub verdict: BalanceVerdict,
}

/// Ratios along `t_grid`; balanced when the extrapolated limit is below a
/// quarter of the last ratio.
pub fn balanced_volume_verdict(family: &ProductFamily, t_grid: &[f64], q: f64) -> Result<VolumeRatioReport> {
    if t_grid.len() < 4 {
        return Err(Error::InvalidInput("need at least 4 values of t".into()));
    }
    let rows = t_grid.iter().map(|&t| Ok((t, balanced_volume_ratio(family, t, q)?))).collect::<Result<Vec<_>>>()?;
    let last = rows.last().expect("nonempty").1;
    if last == 0.0 {
        return Ok(VolumeRatioReport { rows, limit: 0.0, verdict: BalanceVerdict::Balanced });
    }
    let top = &rows[rows.len() / 2..];
    let n = top.len() as f64;
    let xs: Vec<f64> = top.iter().map(|(t, _)| 1.0 / t).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = top.iter().map(|r| r.1).sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(top).map(|(x, r)| (x - mx) * (r.1 - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateFit("t grid has repeated values".into()));
    }
    let limit = my - sxy / sxx * mx;
    let verdict = if limit < 0.25 * last { BalanceVerdict::Balanced } else { BalanceVerdict::NotBalanced };
    Ok(VolumeRatioReport { rows, limit, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(x: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(x))
    }

    fn two_factors() -> Vec<Vec<usize>> {
        vec![vec![0], vec![1]]
    }

    #[test]
    fn tensor_examples() {
        let rho = vec![r(1), r(1)];
        for (l, expected) in [(2, BalanceVerdict::Balanced), (3, BalanceVerdict::NotBalanced), (4, BalanceVerdict::NotBalanced)] {
            let c = balanced_weight_criterion(&tensor_weights(l), &rho, &two_factors()).unwrap();
            assert_eq!(c.verdict, expected, "l = {l}");
            assert_eq!(c.delta, r(1));
            assert_eq!(c.vertices.len(), 3);
        }
        let c = balanced_weight_criterion(&tensor_weights(4), &rho, &two_factors()).unwrap();
        assert!(c.vertices.contains(&vec![r(0), BigRational::new(1.into(), 3.into())]));
    }

    #[test]
    fn single_factor_and_rank_three() {
        let c = balanced_weight_criterion(&rational_rows(&[vec![1], vec![-1]]), &[r(1)], &[vec![0]]).unwrap();
        assert_eq!(c.verdict, BalanceVerdict::Balanced);
        // three factors with the product weight h1 + h2 + h3: a triangle face
        let w = rational_rows(&[vec![1, 1, 1], vec![-1, 1, 1], vec![1, -1, -1]]);
        let c = balanced_weight_criterion(&w, &[r(1), r(1), r(1)], &[vec![0], vec![1], vec![2]]).unwrap();
        assert_eq!(c.verdict, BalanceVerdict::Balanced);
        assert_eq!(c.argmax.len(), 3);
    }

    #[test]
    fn invalid_inputs() {
        let w = rational_rows(&[vec![1, -1]]);
        assert_eq!(
            balanced_weight_criterion(&w, &[r(1), r(1)], &two_factors()).unwrap_err(),
            Error::UnboundedPolytope
        );
        assert!(balanced_weight_criterion(&tensor_weights(2), &[r(1), r(1)], &[vec![0]]).is_err());
        assert!(balanced_weight_criterion(&tensor_weights(2), &vec![r(1); 4], &[vec![0, 1, 2, 3]]).is_err());
    }

    #[test]
    fn volume_verdicts_match_the_criterion() {
        let grid: Vec<f64> = (0..8).map(|i| 10.0 + 3.0 * i as f64).collect();
        for l in [2, 3, 4] {
            let family = ProductFamily::from_weights(&tensor_weights(l), &two_factors()).unwrap();
            let report = balanced_volume_verdict(&family, &grid, 1.0).unwrap();
            let crit = balanced_weight_criterion(&tensor_weights(l), &[r(1), r(1)], &two_factors()).unwrap();
            assert_eq!(report.verdict, crit.verdict, "l = {l}: {report:?}");
        }
    }

    #[test]
    fn lp_gauges_decay_exponentially() {
        let fam = ProductFamily::new(vec![sl2_cartan_profile(), sl2_cartan_profile()], vec![1.0, 1.0], 2.0).unwrap();
        let r10 = balanced_volume_ratio(&fam, 10.0, 1.0).unwrap();
        let r20 = balanced_volume_ratio(&fam, 20.0, 1.0).unwrap();
        assert!(r20 < r10 * 1e-2, "{r10} {r20}");
        let sum = ProductFamily::new(vec![sl2_cartan_profile(), sl2_cartan_profile()], vec![1.0, 1.0], 1.0).unwrap();
        let s10 = balanced_volume_ratio(&sum, 10.0, 1.0).unwrap();
        let s20 = balanced_volume_ratio(&sum, 20.0, 1.0).unwrap();
        // roughly 1 / t
        assert!(s20 < s10 && s20 > 0.3 * s10, "{s10} {s20}");
        let single = ProductFamily::new(vec![sl2_cartan_profile()], vec![1.0], 1.0).unwrap();
        assert_eq!(balanced_volume_ratio(&single, 10.0, 1.0).unwrap(), 0.0);
    }
}
