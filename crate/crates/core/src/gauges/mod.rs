//! Size functionals `|g|` whose sublevel sets `{|g| <= t}` are the domains we
//! count in.
//!
//! Every gauge declares the scale its thresholds live on. Norm-type gauges are
//! natively on the raw `T` scale and may be switched to the logarithmic
//! `t = log T` scale; the hyperbolic gauge is a distance and is always on the
//! `t` scale. Conversions happen only through [`Gauge::to_raw`] and
//! [`Gauge::reporting_t`].
//!
//! The hyperbolic gauge measures `d(i, g.i)` in the upper half-plane with
//! curvature `-1`, so `cosh d(i, g.i) = |g|_F^2 / 2`.

mod forms;

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};

use crate::arith::GroupElement;
use crate::error::{Error, Result};

pub use forms::BinaryForm;

/// Which axis a threshold is measured on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Scale {
    /// The raw size `T`.
    #[serde(rename = "T")]
    Raw,
    /// The logarithmic parameter `t`.
    #[serde(rename = "t")]
    Log,
}

impl FromStr for Scale {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "T" => Ok(Scale::Raw),
            "t" => Ok(Scale::Log),
            _ => Err(Error::Parse(format!("scale must be `T` or `t`, got `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormIndex {
    Finite(f64),
    Inf,
}

#[derive(Clone, Debug, PartialEq)]
pub enum GaugeKind {
    /// `(sum |a_ij|^r)^(1/r)`, or the max entry for `r = inf`.
    RNorm(NormIndex),
    /// `d(i, g.i)` in the hyperbolic plane.
    Hyperbolic,
    /// `|f_0 . g|` in the binomially weighted coefficient norm.
    RepForm(BinaryForm),
    /// `|p^-k A|_F * |p^-k A|_p`.
    Height { p: u64 },
    /// `(sum_i w_i c_i^e)^(1/e)` over component gauges on a product group.
    WeightedProduct { components: Vec<Gauge>, weights: Vec<f64>, exponent: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gauge {
    kind: GaugeKind,
    scale: Scale,
}

/// Closed-form hyperbolic distance `arccosh(|g|_F^2 / 2)` for `g` in `SL_2(Z)`.
pub fn mobius_distance(g: &GroupElement) -> Result<f64> {
    if g.n() != 2 || g.p_power() != 0 {
        return Err(Error::IncompatibleGauge {
            gauge: "hyperbolic".into(),
            what: format!("element {g}"),
        });
    }
    let fsq = g.integral_frobenius_sq().to_f64().unwrap_or(f64::INFINITY);
    Ok((fsq / 2.0).max(1.0).acosh())
}

/// `d(i, z)` for `z = (a i + b) / (c i + d)`, evaluated through the Möbius
/// action itself.
pub fn mobius_distance_direct(g: &GroupElement) -> Result<f64> {
    let m = g.to_f64();
    if m.len() != 4 {
        return Err(Error::DimensionMismatch(2, g.n()));
    }
    let (a, b, c, d) = (m[0], m[1], m[2], m[3]);
    // (a i + b)(d - c i) / |c i + d|^2
    let den = c * c + d * d;
    let re = (b * d + a * c) / den;
    let im = (a * d - b * c) / den;
    let dist_sq = re * re + (im - 1.0) * (im - 1.0);
    Ok((1.0 + dist_sq / (2.0 * im)).acosh())
}

impl Gauge {
    pub fn new(kind: GaugeKind, scale: Scale) -> Result<Self> {
        if matches!(kind, GaugeKind::Hyperbolic) && scale == Scale::Raw {
            return Err(Error::InvalidInput("the hyperbolic gauge is a distance on the t scale".into()));
        }
        if let GaugeKind::RNorm(NormIndex::Finite(r)) = kind {
            if !(r >= 1.0 && r.is_finite()) {
                return Err(Error::InvalidInput(format!("norm index must be >= 1, got {r}")));
            }
        }
        if let GaugeKind::Height { p } = kind {
            if !crate::arith::is_prime(p) {
                return Err(Error::InvalidInput(format!("{p} is not prime")));
            }
        }
        if let GaugeKind::WeightedProduct { components, weights, exponent } = &kind {
            if components.is_empty() || components.len() != weights.len() {
                return Err(Error::InvalidInput("one positive weight per component".into()));
            }
            if weights.iter().any(|&w| !(w > 0.0)) || !(*exponent >= 1.0) {
                return Err(Error::InvalidInput("weights must be positive and exponent >= 1".into()));
            }
        }
        Ok(Gauge { kind, scale })
    }

    pub fn rnorm(r: f64) -> Result<Self> {
        Self::new(GaugeKind::RNorm(NormIndex::Finite(r)), Scale::Raw)
    }

    pub fn rnorm_inf() -> Self {
        Gauge { kind: GaugeKind::RNorm(NormIndex::Inf), scale: Scale::Raw }
    }

    pub fn frobenius() -> Self {
        Gauge { kind: GaugeKind::RNorm(NormIndex::Finite(2.0)), scale: Scale::Raw }
    }

    pub fn hyperbolic() -> Self {
        Gauge { kind: GaugeKind::Hyperbolic, scale: Scale::Log }
    }

    pub fn rep_form(f0: BinaryForm) -> Self {
        Gauge { kind: GaugeKind::RepForm(f0), scale: Scale::Raw }
    }

    pub fn height(p: u64) -> Result<Self> {
        Self::new(GaugeKind::Height { p }, Scale::Raw)
    }

    pub fn weighted_product(components: Vec<Gauge>, weights: Vec<f64>, exponent: f64) -> Result<Self> {
        Self::new(GaugeKind::WeightedProduct { components, weights, exponent }, Scale::Log)
    }

    /// The same gauge read on another scale.
    pub fn with_scale(&self, scale: Scale) -> Result<Self> {
        Self::new(self.kind.clone(), scale)
    }

    pub fn kind(&self) -> &GaugeKind {
        &self.kind
    }

    pub fn scale(&self) -> Scale {
        self.scale
    }

    /// `|g^-1| = |g|` on the given dimension.
    pub fn symmetric(&self, n: usize) -> bool {
        match &self.kind {
            GaugeKind::RNorm(_) | GaugeKind::Height { .. } => n == 2,
            GaugeKind::Hyperbolic => true,
            GaugeKind::RepForm(_) => false,
            GaugeKind::WeightedProduct { components, .. } => {
                components.iter().all(|c| c.symmetric(n))
            }
        }
    }

    pub fn bi_k_invariant(&self) -> bool {
        matches!(self.kind, GaugeKind::Hyperbolic) || self.is_frobenius()
    }

    pub fn is_frobenius(&self) -> bool {
        matches!(self.kind, GaugeKind::RNorm(NormIndex::Finite(r)) if r == 2.0)
    }

    /// Threshold on the native raw axis (`e^t` for log-scaled norm gauges).
    pub fn to_raw(&self, threshold: f64) -> f64 {
        match (&self.kind, self.scale) {
            (GaugeKind::Hyperbolic | GaugeKind::WeightedProduct { .. }, _) => threshold,
            (_, Scale::Raw) => threshold,
            (_, Scale::Log) => threshold.exp(),
        }
    }

    fn from_raw(&self, raw: f64) -> f64 {
        match (&self.kind, self.scale) {
            (GaugeKind::Hyperbolic | GaugeKind::WeightedProduct { .. }, _) => raw,
            (_, Scale::Raw) => raw,
            (_, Scale::Log) => raw.ln(),
        }
    }

    /// The logarithmic parameter `t` attached to a threshold, for reports.
    pub fn reporting_t(&self, threshold: f64) -> f64 {
        match (&self.kind, self.scale) {
            (GaugeKind::Hyperbolic | GaugeKind::WeightedProduct { .. }, _) => threshold,
            (_, Scale::Raw) => threshold.ln(),
            (_, Scale::Log) => threshold,
        }
    }

    /// Asymptotic `dt / d(log T)`, where `T` is the Frobenius size of the
    /// element: 2 for the hyperbolic distance, 1 for norm-type gauges.
    pub fn t_per_log_size(&self) -> f64 {
        match self.kind {
            GaugeKind::Hyperbolic => 2.0,
            _ => 1.0,
        }
    }

    /// Gauge value at the identity of `SL_n`.
    pub fn identity_value(&self, n: usize) -> Result<f64> {
        self.eval(&GroupElement::identity(n))
    }

    /// `|g|` on this gauge's scale.
    pub fn eval(&self, g: &GroupElement) -> Result<f64> {
        let incompatible = || Error::IncompatibleGauge { gauge: self.to_string(), what: format!("element {g}") };
        let raw = match &self.kind {
            GaugeKind::RNorm(NormIndex::Finite(r)) if *r == 2.0 => g.frobenius(),
            GaugeKind::RNorm(idx) => {
                let m = g.to_f64();
                rnorm_of(&m, *idx)
            }
            GaugeKind::Hyperbolic => mobius_distance(g).map_err(|_| incompatible())?,
            GaugeKind::RepForm(f0) => {
                if g.n() != 2 || g.p_power() != 0 {
                    return Err(incompatible());
                }
                f0.substitute(g)?.norm()
            }
            GaugeKind::Height { p } => {
                if g.p_power() > 0 && g.prime() != Some(*p) {
                    return Err(incompatible());
                }
                let padic = g.padic_abs(*p)?;
                g.frobenius() * padic.to_f64().unwrap_or(f64::NAN)
            }
            GaugeKind::WeightedProduct { .. } => return Err(incompatible()),
        };
        Ok(self.from_raw(raw))
    }

    /// Combined value on a product group, one element per component.
    pub fn eval_product(&self, parts: &[GroupElement]) -> Result<f64> {
        let GaugeKind::WeightedProduct { components, weights, exponent } = &self.kind else {
            return Err(Error::IncompatibleGauge { gauge: self.to_string(), what: "a tuple".into() });
        };
        if parts.len() != components.len() {
            return Err(Error::DimensionMismatch(components.len(), parts.len()));
        }
        let mut acc = 0.0;
        for ((c, w), g) in components.iter().zip(weights).zip(parts) {
            acc += w * c.eval(g)?.powf(*exponent);
        }
        Ok(acc.powf(1.0 / exponent))
    }

    /// Fast path used by enumeration: the gauge of `p^-k A` with `A` given as
    /// small integers. `prime` is only consulted when `k > 0`.
    pub(crate) fn eval_small(&self, n: usize, entries: &[i64], k: u32, prime: Option<u64>) -> f64 {
        let denom = prime.map_or(1.0, |p| (p as f64).powi(k as i32));
        let raw = match &self.kind {
            GaugeKind::RNorm(NormIndex::Finite(r)) if *r == 2.0 => frob_sq_i64(entries).sqrt() / denom,
            GaugeKind::RNorm(idx) => {
                let m: Vec<f64> = entries.iter().map(|&x| x as f64 / denom).collect();
                rnorm_of(&m, *idx)
            }
            GaugeKind::Hyperbolic => (frob_sq_i64(entries) / 2.0).max(1.0).acosh(),
            // canonical A has an entry prime to p, so |p^-k A|_p = p^k
            GaugeKind::Height { .. } => frob_sq_i64(entries).sqrt(),
            GaugeKind::RepForm(f0) => {
                let g = GroupElement::from_i64(n, entries).expect("enumerated elements are unimodular");
                f0.substitute(&g).expect("n = 2").norm()
            }
            GaugeKind::WeightedProduct { .. } => f64::NAN,
        };
        self.from_raw(raw)
    }

    /// A bound `B` with `|a_ij| <= B` for every integral matrix `A` of gauge
    /// at most `threshold` (for the height gauge, `A` is the integral part).
    pub fn entry_bound(&self, threshold: f64) -> Result<u64> {
        let raw = self.to_raw(threshold);
        if !raw.is_finite() {
            return Err(Error::InvalidInput(format!("threshold {threshold} is not finite")));
        }
        if raw < 0.0 {
            return Ok(0);
        }
        match &self.kind {
            GaugeKind::RNorm(_) | GaugeKind::Height { .. } => Ok(raw.floor() as u64),
            GaugeKind::Hyperbolic => {
                // |g|_F^2 = 2 cosh d
                let bound_sq = 2.0 * raw.cosh();
                let mut b = bound_sq.sqrt().floor() as u64;
                while ((b + 1) * (b + 1)) as f64 <= bound_sq {
                    b += 1;
                }
                while b > 0 && (b * b) as f64 > bound_sq {
                    b -= 1;
                }
                Ok(b)
            }
            GaugeKind::RepForm(f0) => {
                if !f0.is_definite() {
                    return Err(Error::IndefiniteForm(f0.to_string()));
                }
                let n = f0.degree() as f64;
                // |f0(u g)| >= mu |u g|^n and sup over the circle <= sqrt(n+1) |f|
                let mu = f0.min_on_unit_circle() * (1.0 - 1e-9);
                let op = ((n + 1.0).sqrt() * raw / mu).powf(1.0 / n);
                Ok(op.ceil() as u64)
            }
            GaugeKind::WeightedProduct { .. } => {
                Err(Error::Unsupported("entry bounds for product gauges".into()))
            }
        }
    }
}

fn frob_sq_i64(entries: &[i64]) -> f64 {
    entries.iter().map(|&x| (x as i128) * (x as i128)).sum::<i128>() as f64
}

fn rnorm_of(m: &[f64], idx: NormIndex) -> f64 {
    match idx {
        NormIndex::Inf => m.iter().fold(0.0f64, |acc, x| acc.max(x.abs())),
        NormIndex::Finite(r) if r == 1.0 => m.iter().map(|x| x.abs()).sum(),
        NormIndex::Finite(r) => m.iter().map(|x| x.abs().powf(r)).sum::<f64>().powf(1.0 / r),
    }
}

/// The CLI spec string: `rnorm:2`, `rnorm:inf`, `hyperbolic`,
/// `form:deg=4:coeffs=1,0,0,0,1`, `height:p=2`.
impl fmt::Display for Gauge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            GaugeKind::RNorm(NormIndex::Inf) => f.write_str("rnorm:inf"),
            GaugeKind::RNorm(NormIndex::Finite(r)) => write!(f, "rnorm:{r}"),
            GaugeKind::Hyperbolic => f.write_str("hyperbolic"),
            GaugeKind::RepForm(form) => write!(f, "form:deg={}:coeffs={form}", form.degree()),
            GaugeKind::Height { p } => write!(f, "height:p={p}"),
            GaugeKind::WeightedProduct { components, weights, exponent } => {
                let parts: Vec<String> =
                    components.iter().zip(weights).map(|(c, w)| format!("{w}*{c}")).collect();
                write!(f, "product:p={exponent}:[{}]", parts.join(";"))
            }
        }
    }
}

impl FromStr for Gauge {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("unrecognized gauge spec `{s}`"));
        let mut parts = s.trim().split(':');
        match parts.next() {
            Some("rnorm") => match parts.next() {
                Some("inf") => Ok(Gauge::rnorm_inf()),
                Some(r) => Gauge::rnorm(r.parse().map_err(|_| bad())?),
                None => Err(bad()),
            },
            Some("hyperbolic") => Ok(Gauge::hyperbolic()),
            Some("height") => {
                let p = parts.next().and_then(|x| x.strip_prefix("p=")).ok_or_else(bad)?;
                Gauge::height(p.parse().map_err(|_| bad())?)
            }
            Some("form") => {
                let deg: usize = parts
                    .next()
                    .and_then(|x| x.strip_prefix("deg="))
                    .and_then(|x| x.parse().ok())
                    .ok_or_else(bad)?;
                let coeffs = parts
                    .next()
                    .and_then(|x| x.strip_prefix("coeffs="))
                    .ok_or_else(bad)?
                    .split(',')
                    .map(|c| c.trim().parse::<BigInt>().map_err(|_| bad()))
                    .collect::<Result<Vec<_>>>()?;
                if coeffs.len() != deg + 1 {
                    return Err(Error::Parse(format!(
                        "form of degree {deg} needs {} coefficients",
                        deg + 1
                    )));
                }
                Ok(Gauge::rep_form(BinaryForm::new(coeffs)?))
            }
            _ => Err(bad()),
        }
    }
}

/// Largest absolute entry of an element, as `u64`.
#[cfg(test)]
fn max_abs_entry(g: &GroupElement) -> u64 {
    g.entries().iter().map(|e| e.abs().to_u64().unwrap_or(u64::MAX)).max().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn el(e: &[i64]) -> GroupElement {
        GroupElement::from_i64(2, e).unwrap()
    }

    #[test]
    fn evaluation_examples() {
        let id = GroupElement::identity(2);
        assert_eq!(Gauge::frobenius().eval(&id).unwrap(), 2f64.sqrt());
        assert_eq!(Gauge::hyperbolic().eval(&id).unwrap(), 0.0);
        assert_eq!(Gauge::rnorm_inf().eval(&el(&[2, 1, 1, 1])).unwrap(), 2.0);
        assert_eq!(Gauge::rnorm(1.0).unwrap().eval(&el(&[2, -1, -1, 1])).unwrap(), 5.0);
        let log = Gauge::frobenius().with_scale(Scale::Log).unwrap();
        assert!((log.eval(&id).unwrap() - 0.5 * 2f64.ln()).abs() < 1e-15);
        // 2^-1 [[2,1],[0,2]] has det 1, |A|_F = 3 and |.|_2 = 2
        let a = GroupElement::scaled_i64(2, &[2, 1, 0, 2], 1, 2).unwrap();
        let h = Gauge::height(2).unwrap();
        assert!((h.eval(&a).unwrap() - 3.0).abs() < 1e-15);
        assert!((h.eval(&el(&[1, 2, 2, 5])).unwrap() - 34f64.sqrt()).abs() < 1e-14);
        assert!(Gauge::height(3).unwrap().eval(&a).is_err());
        assert!(Gauge::hyperbolic().eval(&a).is_err());
        assert!(Gauge::hyperbolic().with_scale(Scale::Raw).is_err());
    }

    #[test]
    fn hyperbolic_gauge_of_diagonal() {
        // diag(e^(1/2), e^(-1/2)) moves i to e i, at distance 1
        let m = [0.5f64.exp(), 0.0, 0.0, (-0.5f64).exp()];
        let fsq: f64 = m.iter().map(|x| x * x).sum();
        assert!(((fsq / 2.0).acosh() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mobius_examples() {
        assert_eq!(mobius_distance(&GroupElement::identity(2)).unwrap(), 0.0);
        assert_eq!(mobius_distance(&el(&[0, 1, -1, 0])).unwrap(), 0.0);
        let t = el(&[1, 1, 0, 1]);
        let expected = 1.5f64.acosh();
        assert!((mobius_distance(&t).unwrap() - expected).abs() < 1e-15);
        assert!((mobius_distance_direct(&t).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.9624236501192069).abs() < 1e-15);
    }

    #[test]
    fn mobius_formulas_agree_on_random_elements() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0;
        while checked < 10_000 {
            let (a, b): (i64, i64) = (rng.gen_range(-100..=100), rng.gen_range(-100..=100));
            let e = num_integer::Integer::extended_gcd(&a, &b);
            if e.gcd != 1 {
                continue;
            }
            // a x + b y = 1 -> [[a, b], [-y, x]]
            let (c0, d0) = (-e.y, e.x);
            let k: i64 = rng.gen_range(-3..=3);
            let (c, d) = (c0 + k * a, d0 + k * b);
            if c.abs() > 100 || d.abs() > 100 {
                continue;
            }
            let g = el(&[a, b, c, d]);
            let fast = mobius_distance(&g).unwrap();
            let direct = mobius_distance_direct(&g).unwrap();
            assert!((fast - direct).abs() <= 1e-12, "{g}: {fast} vs {direct}");
            let inv = mobius_distance_direct(&g.inv()).unwrap();
            assert!((direct - inv).abs() <= 1e-12);
            checked += 1;
        }
    }

    #[test]
    fn frobenius_is_invariant_under_the_integral_rotation() {
        let k = el(&[0, 1, -1, 0]);
        let g = el(&[5, 3, 3, 2]);
        let kg = k.mul(&g).unwrap().mul(&k).unwrap();
        assert_eq!(kg.integral_frobenius_sq(), g.integral_frobenius_sq());
    }

    #[test]
    fn entry_bound_examples() {
        assert_eq!(Gauge::frobenius().entry_bound(7.9).unwrap(), 7);
        assert_eq!(Gauge::frobenius().entry_bound(2.0).unwrap(), 2);
        for t in [0.5, 1.0, 3.0, 7.25] {
            let expected = (2.0 * f64::cosh(t)).sqrt().floor() as u64;
            assert_eq!(Gauge::hyperbolic().entry_bound(t).unwrap(), expected);
        }
        let quartic = Gauge::rep_form(BinaryForm::from_i64(&[1, 0, 0, 0, 1]).unwrap());
        for t in [3.3, 100.7, 12345.6] {
            let expected = (5f64.sqrt() * t / 0.5).powf(0.25).ceil() as u64;
            assert_eq!(quartic.entry_bound(t).unwrap(), expected);
        }
        let indefinite = Gauge::rep_form(BinaryForm::from_i64(&[1, 0, 0, 0, -1]).unwrap());
        assert!(matches!(indefinite.entry_bound(10.0), Err(Error::IndefiniteForm(_))));
    }

    #[test]
    fn spec_strings_round_trip() {
        for s in ["rnorm:2", "rnorm:inf", "rnorm:1", "hyperbolic", "form:deg=4:coeffs=1,0,0,0,1", "height:p=2"] {
            assert_eq!(s.parse::<Gauge>().unwrap().to_string(), s);
        }
        for s in ["rnorm", "rnorm:0.5", "height:p=4", "form:deg=3:coeffs=1,0", "torus"] {
            assert!(s.parse::<Gauge>().is_err(), "{s}");
        }
    }

    #[test]
    fn product_gauge() {
        let g = Gauge::weighted_product(vec![Gauge::hyperbolic(), Gauge::hyperbolic()], vec![1.0, 2.0], 2.0)
            .unwrap();
        let t = el(&[1, 1, 0, 1]);
        let d = 1.5f64.acosh();
        let v = g.eval_product(&[t.clone(), t.clone()]).unwrap();
        assert!((v - (3.0f64).sqrt() * d).abs() < 1e-14);
        assert!(g.eval(&t).is_err());
        assert!(g.eval_product(&[t]).is_err());
    }

    /// Brute force over a box twice as wide as the bound.
    fn brute_entry_bound_holds(gauge: &Gauge, threshold: f64, search: i64) -> bool {
        let bound = gauge.entry_bound(threshold).unwrap() as i64;
        for a in -search..=search {
            for b in -search..=search {
                for c in -search..=search {
                    for d in -search..=search {
                        if a * d - b * c != 1 {
                            continue;
                        }
                        let g = el(&[a, b, c, d]);
                        if gauge.eval(&g).unwrap() <= threshold && max_abs_entry(&g) as i64 > bound {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    #[test]
    fn entry_bounds_are_sound_at_small_thresholds() {
        assert!(brute_entry_bound_holds(&Gauge::frobenius(), 4.5, 10));
        assert!(brute_entry_bound_holds(&Gauge::rnorm(1.0).unwrap(), 5.0, 10));
        assert!(brute_entry_bound_holds(&Gauge::rnorm_inf(), 4.0, 10));
        assert!(brute_entry_bound_holds(&Gauge::hyperbolic(), 2.5, 10));
        let quartic = Gauge::rep_form(BinaryForm::from_i64(&[1, 0, 0, 0, 1]).unwrap());
        assert!(brute_entry_bound_holds(&quartic, 40.0, 6));
    }

    proptest! {
        #[test]
        fn symmetric_gauges(a in -30i64..=30, b in -30i64..=30, k in -4i64..=4) {
            let e = num_integer::Integer::extended_gcd(&a, &b);
            prop_assume!(e.gcd == 1);
            let g = el(&[a, b, -e.y + k * a, e.x + k * b]);
            let ginv = g.inv();
            for gauge in [Gauge::frobenius(), Gauge::rnorm(1.0).unwrap(), Gauge::rnorm(3.0).unwrap(), Gauge::rnorm_inf()] {
                prop_assert_eq!(gauge.eval(&g).unwrap(), gauge.eval(&ginv).unwrap());
            }
            let h = Gauge::hyperbolic();
            prop_assert!((h.eval(&g).unwrap() - h.eval(&ginv).unwrap()).abs() <= 1e-12);
            // properness floor
            prop_assert!(Gauge::frobenius().eval(&g).unwrap() >= 2f64.sqrt());
            prop_assert!(h.eval(&g).unwrap() >= 0.0);
        }
    }
}
