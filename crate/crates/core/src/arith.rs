//! Exact arithmetic on lattice elements.
//!
//! A [`GroupElement`] is an `n x n` integer matrix `A` together with a power
//! `k` of a prime `p`, standing for the rational matrix `p^-k * A`. Ordinary
//! lattice elements of `SL_n(Z)` have `k = 0`; elements of `SL_2(Z[1/p])`
//! carry the denominator explicitly. The representation is canonical: the
//! largest possible power of `p` is always pulled out of `A`, so whenever
//! `k > 0` some entry of `A` is coprime to `p`.
//!
//! Reduction modulo `q` lands in [`ResidueClass`], the finite quotient used for
//! coset equidistribution.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact unimodular matrix `p^-k * A` with `det A = p^(n k)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroupElement {
    n: usize,
    p_power: u32,
    entries: Vec<BigInt>,
    prime: Option<u64>,
}

pub(crate) fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn check_dim(n: usize, len: usize) -> Result<()> {
    if !(2..=3).contains(&n) {
        return Err(Error::InvalidElement(format!("dimension {n} not in {{2, 3}}")));
    }
    if len != n * n {
        return Err(Error::InvalidElement(format!(
            "expected {} entries for n = {n}, got {len}",
            n * n
        )));
    }
    Ok(())
}

/// Determinant of a row-major 2x2 or 3x3 matrix.
pub(crate) fn det<T>(n: usize, m: &[T]) -> T
where
    T: Clone + std::ops::Mul<Output = T> + std::ops::Sub<Output = T> + std::ops::Add<Output = T>,
{
    let e = |i: usize, j: usize| m[i * n + j].clone();
    match n {
        2 => e(0, 0) * e(1, 1) - e(0, 1) * e(1, 0),
        3 => {
            e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1))
                - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
                + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0))
        }
        _ => unreachable!("dimension checked at construction"),
    }
}

fn adjugate(n: usize, m: &[BigInt]) -> Vec<BigInt> {
    let e = |i: usize, j: usize| &m[i * n + j];
    match n {
        2 => vec![e(1, 1).clone(), -e(0, 1), -e(1, 0), e(0, 0).clone()],
        3 => {
            let mut adj = vec![BigInt::zero(); 9];
            for i in 0..3 {
                for j in 0..3 {
                    // cofactor C_ji lands at (i, j)
                    let rows: Vec<usize> = (0..3).filter(|&r| r != j).collect();
                    let cols: Vec<usize> = (0..3).filter(|&c| c != i).collect();
                    let minor = e(rows[0], cols[0]) * e(rows[1], cols[1])
                        - e(rows[0], cols[1]) * e(rows[1], cols[0]);
                    adj[i * 3 + j] = if (i + j) % 2 == 0 { minor } else { -minor };
                }
            }
            adj
        }
        _ => unreachable!("dimension checked at construction"),
    }
}

fn matmul(n: usize, a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = BigInt::zero();
            for l in 0..n {
                acc += &a[i * n + l] * &b[l * n + j];
            }
            out[i * n + j] = acc;
        }
    }
    out
}

impl GroupElement {
    /// An element of `SL_n(Z)`.
    pub fn new(n: usize, entries: Vec<BigInt>) -> Result<Self> {
        check_dim(n, entries.len())?;
        if !det(n, &entries).is_one() {
            return Err(Error::InvalidElement("determinant is not 1".into()));
        }
        Ok(GroupElement { n, p_power: 0, entries, prime: None })
    }

    pub fn from_i64(n: usize, entries: &[i64]) -> Result<Self> {
        Self::new(n, entries.iter().map(|&x| BigInt::from(x)).collect())
    }

    /// The element `p^-k * A`, put into canonical form.
    ///
    /// Requires `det A = p^(n k)`.
    pub fn scaled(n: usize, entries: Vec<BigInt>, k: u32, p: u64) -> Result<Self> {
        check_dim(n, entries.len())?;
        if !is_prime(p) {
            return Err(Error::InvalidElement(format!("{p} is not prime")));
        }
        let expected = BigInt::from(p).pow(n as u32 * k);
        if det(n, &entries) != expected {
            return Err(Error::InvalidElement(format!(
                "determinant must equal {p}^{}",
                n as u32 * k
            )));
        }
        let mut g = GroupElement { n, p_power: k, entries, prime: Some(p) };
        g.canonicalize();
        Ok(g)
    }

    pub fn scaled_i64(n: usize, entries: &[i64], k: u32, p: u64) -> Result<Self> {
        Self::scaled(n, entries.iter().map(|&x| BigInt::from(x)).collect(), k, p)
    }

    pub fn identity(n: usize) -> Self {
        let entries = (0..n * n)
            .map(|i| if i / n == i % n { BigInt::one() } else { BigInt::zero() })
            .collect();
        GroupElement { n, p_power: 0, entries, prime: None }
    }

    fn canonicalize(&mut self) {
        let Some(p) = self.prime else { return };
        let p = BigInt::from(p);
        while self.p_power > 0 && self.entries.iter().all(|e| e.is_multiple_of(&p)) {
            for e in &mut self.entries {
                *e /= &p;
            }
            self.p_power -= 1;
        }
        // integral elements carry no prime, so they compare equal across groups
        if self.p_power == 0 {
            self.prime = None;
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The exponent `k` in `p^-k * A`.
    pub fn p_power(&self) -> u32 {
        self.p_power
    }

    pub fn prime(&self) -> Option<u64> {
        self.prime
    }

    /// Row-major entries of the integral part `A`.
    pub fn entries(&self) -> &[BigInt] {
        &self.entries
    }

    pub fn entry(&self, i: usize, j: usize) -> &BigInt {
        &self.entries[i * self.n + j]
    }

    /// Entries of `A` as `i64`, if they all fit.
    pub fn entries_i64(&self) -> Option<Vec<i64>> {
        self.entries.iter().map(|e| e.to_i64()).collect()
    }

    /// Entries of the real matrix `p^-k * A`.
    pub fn to_f64(&self) -> Vec<f64> {
        let scale = self.denominator_f64();
        self.entries
            .iter()
            .map(|e| e.to_f64().unwrap_or(f64::NAN) / scale)
            .collect()
    }

    fn denominator_f64(&self) -> f64 {
        match self.prime {
            Some(p) => (p as f64).powi(self.p_power as i32),
            None => 1.0,
        }
    }

    /// `tr(A^t A)` of the integral part, exactly.
    pub fn integral_frobenius_sq(&self) -> BigInt {
        self.entries.iter().map(|e| e * e).sum()
    }

    /// Frobenius norm of the real matrix `p^-k * A`.
    pub fn frobenius(&self) -> f64 {
        self.integral_frobenius_sq().to_f64().unwrap_or(f64::INFINITY).sqrt()
            / self.denominator_f64()
    }

    fn join_prime(&self, other: &Self) -> Result<Option<u64>> {
        match (self.prime, other.prime) {
            (Some(p), Some(q)) if p != q => Err(Error::PrimeMismatch(p, q)),
            (Some(p), _) | (_, Some(p)) => Ok(Some(p)),
            (None, None) => Ok(None),
        }
    }

    /// Exact product, re-canonicalized.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(self.n, other.n));
        }
        let prime = self.join_prime(other)?;
        let mut g = GroupElement {
            n: self.n,
            p_power: self.p_power + other.p_power,
            entries: matmul(self.n, &self.entries, &other.entries),
            prime,
        };
        g.canonicalize();
        Ok(g)
    }

    /// Exact inverse through the adjugate.
    ///
    /// `(p^-k A)^-1 = p^k adj(A) / det A = p^-(n-1)k adj(A)`.
    pub fn inv(&self) -> Self {
        let mut g = GroupElement {
            n: self.n,
            p_power: (self.n as u32 - 1) * self.p_power,
            entries: adjugate(self.n, &self.entries),
            prime: self.prime,
        };
        g.canonicalize();
        g
    }

    /// `-g`; only defined for even dimension.
    pub fn negate(&self) -> Result<Self> {
        if self.n % 2 == 1 {
            return Err(Error::Unsupported(format!("-I is not in SL_{}", self.n)));
        }
        Ok(GroupElement {
            entries: self.entries.iter().map(|e| -e).collect(),
            ..self.clone()
        })
    }

    /// Entrywise reduction modulo `q`, with `p^-k` replaced by the inverse of
    /// `p^k` modulo `q`.
    pub fn reduce_mod(&self, q: u64) -> Result<ResidueClass> {
        if q < 2 {
            return Err(Error::InvalidInput(format!("modulus must be at least 2, got {q}")));
        }
        let qb = BigInt::from(q);
        let mut scale = BigInt::one();
        if self.p_power > 0 {
            let p = self.prime.expect("p_power > 0 implies a prime");
            let pk = BigInt::from(p).modpow(&BigInt::from(self.p_power), &qb);
            let ext = pk.extended_gcd(&qb);
            if !ext.gcd.is_one() {
                return Err(Error::NotCoprime { p, q });
            }
            scale = ext.x.mod_floor(&qb);
        }
        let entries = self
            .entries
            .iter()
            .map(|e| (e * &scale).mod_floor(&qb).to_u64().expect("residue fits"))
            .collect();
        Ok(ResidueClass { q, n: self.n, entries })
    }

    /// `max_ij |a_ij|_p * p^k`, the p-adic size of `p^-k * A`.
    pub fn padic_abs(&self, p: u64) -> Result<BigRational> {
        if let Some(own) = self.prime {
            if self.p_power > 0 && own != p {
                return Err(Error::PrimeMismatch(own, p));
            }
        }
        if !is_prime(p) {
            return Err(Error::InvalidInput(format!("{p} is not prime")));
        }
        let pb = BigInt::from(p);
        let min_val = self
            .entries
            .iter()
            .filter(|e| !e.is_zero())
            .map(|e| {
                let mut v = 0u32;
                let mut x = e.clone();
                while x.is_multiple_of(&pb) {
                    x /= &pb;
                    v += 1;
                }
                v
            })
            .min()
            .ok_or_else(|| Error::InvalidElement("zero matrix".into()))?;
        // |a|_p = p^-v; overall p^(k - v_min)
        let exp = self.p_power as i64 - min_val as i64;
        let num = pb.clone().pow(exp.max(0) as u32);
        let den = pb.pow((-exp).max(0) as u32);
        Ok(BigRational::new(num, den))
    }
}

impl PartialOrd for GroupElement {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Lexicographic on `(n, k, entries)`.
impl Ord for GroupElement {
    fn cmp(&self, other: &Self) -> Ordering {
        self.n
            .cmp(&other.n)
            .then(self.p_power.cmp(&other.p_power))
            .then_with(|| self.entries.cmp(&other.entries))
            .then(self.prime.cmp(&other.prime))
    }
}

/// Canonical text encoding `n;k;a11,a12,...,ann`.
impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{};{};", self.n, self.p_power)?;
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

/// Parses the canonical encoding. For `k > 0` the prime is recovered from
/// `det A = p^(n k)`.
impl FromStr for GroupElement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::Parse(format!("`{s}`: {why}"));
        let mut parts = s.trim().splitn(3, ';');
        let n: usize = parts
            .next()
            .and_then(|x| x.parse().ok())
            .ok_or_else(|| bad("missing dimension"))?;
        let k: u32 = parts
            .next()
            .and_then(|x| x.parse().ok())
            .ok_or_else(|| bad("missing p-power"))?;
        let entries = parts
            .next()
            .ok_or_else(|| bad("missing entries"))?
            .split(',')
            .map(|x| x.trim().parse::<BigInt>().map_err(|_| bad("bad entry")))
            .collect::<Result<Vec<_>>>()?;
        check_dim(n, entries.len())?;
        if k == 0 {
            return GroupElement::new(n, entries);
        }
        let d = det(n, &entries);
        if !d.is_positive() {
            return Err(bad("determinant must be a positive prime power"));
        }
        let root = d.nth_root(n as u32 * k);
        if root.clone().pow(n as u32 * k) != d {
            return Err(bad("determinant is not a perfect power"));
        }
        let p = root.to_u64().ok_or_else(|| bad("prime too large"))?;
        GroupElement::scaled(n, entries, k, p)
    }
}

/// An element of `SL_n(Z/q)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ResidueClass {
    q: u64,
    n: usize,
    entries: Vec<u64>,
}

impl ResidueClass {
    pub fn new(n: usize, q: u64, entries: Vec<u64>) -> Result<Self> {
        check_dim(n, entries.len())?;
        if q < 2 {
            return Err(Error::InvalidInput(format!("modulus must be at least 2, got {q}")));
        }
        let entries: Vec<u64> = entries.into_iter().map(|e| e % q).collect();
        let class = ResidueClass { q, n, entries };
        if class.det() != 1 % q {
            return Err(Error::InvalidElement("determinant is not 1 mod q".into()));
        }
        Ok(class)
    }

    pub fn identity(n: usize, q: u64) -> Self {
        let entries = (0..n * n).map(|i| u64::from(i / n == i % n)).collect();
        ResidueClass { q, n, entries }
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    pub fn det(&self) -> u64 {
        let q = self.q as i128;
        let m: Vec<i128> = self.entries.iter().map(|&e| e as i128).collect();
        det(self.n, &m).rem_euclid(q) as u64
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(self.n, other.n));
        }
        if self.q != other.q {
            return Err(Error::InvalidInput(format!("moduli differ: {} vs {}", self.q, other.q)));
        }
        let n = self.n;
        let q = self.q as u128;
        let mut entries = vec![0u64; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0u128;
                for l in 0..n {
                    acc += self.entries[i * n + l] as u128 * other.entries[l * n + j] as u128;
                }
                entries[i * n + j] = (acc % q) as u64;
            }
        }
        Ok(ResidueClass { q: self.q, n, entries })
    }

    /// Mixed-radix index in `[0, q^(n^2))`.
    pub fn dense_index(&self) -> u64 {
        self.entries.iter().rev().fold(0u64, |acc, &e| acc * self.q + e)
    }
}

impl fmt::Display for ResidueClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for i in 0..self.n {
            if i > 0 {
                f.write_str(",")?;
            }
            let row: Vec<String> =
                self.entries[i * self.n..(i + 1) * self.n].iter().map(|e| e.to_string()).collect();
            write!(f, "[{}]", row.join(","))?;
        }
        write!(f, "] mod {}", self.q)
    }
}

/// All of `SL_n(Z/q)`, by direct enumeration of entry tuples.
pub fn sl_mod_q(n: usize, q: u64) -> Result<Vec<ResidueClass>> {
    check_dim(n, n * n)?;
    if q < 2 {
        return Err(Error::InvalidInput(format!("modulus must be at least 2, got {q}")));
    }
    let total = q
        .checked_pow((n * n) as u32)
        .filter(|&t| t <= 50_000_000)
        .ok_or_else(|| Error::Unsupported(format!("SL_{n}(Z/{q}) is too large to list")))?;
    let mut out = Vec::new();
    let mut entries = vec![0u64; n * n];
    for idx in 0..total {
        let mut x = idx;
        for e in entries.iter_mut() {
            *e = x % q;
            x /= q;
        }
        let class = ResidueClass { q, n, entries: entries.clone() };
        if class.det() == 1 % q {
            out.push(class);
        }
    }
    out.sort();
    Ok(out)
}
