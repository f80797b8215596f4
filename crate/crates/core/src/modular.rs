//! Modular arithmetic substrate: gcd/CRT, trial-division factorization and
//! rational points of the torus with their denominators.

use std::collections::BTreeSet;
use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bounds::Bounds;
use crate::error::{Error, Result};

pub fn gcd(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

pub fn lcm(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        0
    } else {
        a / gcd(a, b) * b
    }
}

pub fn lcm_all(values: &[u64]) -> u64 {
    values.iter().fold(1, |acc, &v| lcm(acc, v))
}

pub fn gcd_i64_slice(values: &[i64]) -> u64 {
    values.iter().fold(0u64, |acc, &v| gcd(acc, v.unsigned_abs()))
}

/// `(g, x, y)` with `a*x + b*y = g = gcd(a, b)`.
pub fn extended_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i128, 0i128);
    let (mut old_t, mut t) = (0i128, 1i128);
    while r != 0 {
        let q = old_r.div_euclid(r);
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    if old_r < 0 {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

pub fn mod_inverse(a: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let (g, x, _) = extended_gcd(a as i128, m as i128);
    (g == 1).then(|| x.rem_euclid(m as i128) as u64)
}

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Residue of a signed integer in `[0, m)`.
#[inline]
pub fn reduce_i64(x: i64, m: u64) -> u64 {
    (x as i128).rem_euclid(m as i128) as u64
}

/// Sieve of Eratosthenes, primes `<= limit`.
pub fn primes_up_to(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            primes.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    primes
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = 17u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Prime factorization as strictly increasing `(prime, exponent)` pairs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factorization(Vec<(u64, u32)>);

impl Factorization {
    pub fn pairs(&self) -> &[(u64, u32)] {
        &self.0
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.0.iter().map(|&(p, _)| p)
    }

    pub fn value(&self) -> u64 {
        self.0.iter().map(|&(p, e)| p.pow(e)).product()
    }

    pub fn is_squarefree(&self) -> bool {
        self.0.iter().all(|&(_, e)| e == 1)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

const SMALL_PRIME_LIMIT: u64 = 1000;

pub fn factorize(n: u64) -> Result<Factorization> {
    factorize_bounded(n, Bounds::global().max_factor)
}

/// Trial division: first by a sieved table of small primes, then by odd
/// candidates up to the square root.
pub fn factorize_bounded(n: u64, bound: u64) -> Result<Factorization> {
    if n == 0 {
        return Err(Error::Precondition("cannot factorize 0".into()));
    }
    if n > bound {
        return Err(Error::bound("factorization input", n, bound));
    }
    let mut rest = n;
    let mut out = Vec::new();
    let mut take = |p: u64, rest: &mut u64| {
        let mut e = 0;
        while (*rest).is_multiple_of(p) {
            *rest /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
    };
    for p in primes_up_to(SMALL_PRIME_LIMIT) {
        if p * p > rest {
            break;
        }
        take(p, &mut rest);
    }
    let mut d = SMALL_PRIME_LIMIT + 1;
    while d.saturating_mul(d) <= rest {
        take(d, &mut rest);
        d += 2;
    }
    if rest > 1 {
        out.push((rest, 1));
    }
    out.sort_unstable();
    Ok(Factorization(out))
}

pub fn euler_phi(n: u64) -> u64 {
    let f = factorize_bounded(n, u64::MAX).expect("n >= 1");
    f.pairs().iter().fold(n, |acc, &(p, _)| acc / p * (p - 1))
}

/// Unique residue modulo the product of pairwise coprime moduli.
/// Returns `(residue, product)`.
pub fn crt_combine(residues: &[i64], moduli: &[u64]) -> Result<(u64, u64)> {
    if residues.len() != moduli.len() {
        return Err(Error::DimensionMismatch { expected: moduli.len(), got: residues.len() });
    }
    if let Some(&m) = moduli.iter().find(|&&m| m == 0) {
        return Err(Error::Precondition(format!("modulus {m} must be positive")));
    }
    for i in 0..moduli.len() {
        for j in i + 1..moduli.len() {
            if gcd(moduli[i], moduli[j]) != 1 {
                return Err(Error::NotCoprime(moduli[i], moduli[j]));
            }
        }
    }
    let mut acc: u128 = 0;
    let mut prod: u128 = 1;
    for (&r, &m) in residues.iter().zip(moduli) {
        let r = reduce_i64(r, m) as u128;
        let m128 = m as u128;
        // acc + prod * t ≡ r (mod m)
        let inv = mod_inverse((prod % m128) as u64, m).expect("coprime moduli") as u128;
        let diff = (r + m128 - acc % m128) % m128;
        let t = diff * inv % m128;
        acc += prod * t;
        prod *= m128;
        if prod > u64::MAX as u128 {
            return Err(Error::bound("CRT modulus product", prod, u64::MAX));
        }
    }
    Ok((acc as u64, prod as u64))
}

/// A rational point of the torus `T^d`, each coordinate a reduced fraction in `[0, 1)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TorusRational {
    coords: Vec<(u64, u64)>,
    denom: u64,
}

impl TorusRational {
    /// Reduces `(numerator, denominator)` pairs modulo 1 and to lowest terms.
    pub fn reduce(raw: &[(i64, i64)]) -> Result<Self> {
        let mut coords = Vec::with_capacity(raw.len());
        for &(p, q) in raw {
            if q == 0 {
                return Err(Error::ZeroDenominator);
            }
            let (p, q) = if q < 0 { (-(p as i128), -(q as i128)) } else { (p as i128, q as i128) };
            let p = p.rem_euclid(q);
            let g = p.gcd(&q);
            coords.push(((p / g) as u64, (q / g) as u64));
        }
        Ok(Self::from_reduced(coords))
    }

    /// Point `(j_1/g_1, ..., j_d/g_d)` of the grid `prod (1/g_i)Z / Z`.
    pub fn from_grid(numerators: &[u64], grid: &[u64]) -> Self {
        let coords = numerators
            .iter()
            .zip(grid)
            .map(|(&j, &g)| {
                let j = j % g;
                let d = gcd(j, g);
                (j / d, g / d)
            })
            .collect();
        Self::from_reduced(coords)
    }

    /// Point `(a_1/l, ..., a_d/l)` for a common denominator `l`.
    pub fn over_common(numerators: &[u64], l: u64) -> Self {
        let coords = numerators
            .iter()
            .map(|&a| {
                let a = a % l;
                let d = gcd(a, l);
                (a / d, l / d)
            })
            .collect();
        Self::from_reduced(coords)
    }

    pub fn zero(dim: usize) -> Self {
        Self::from_reduced(vec![(0, 1); dim])
    }

    fn from_reduced(coords: Vec<(u64, u64)>) -> Self {
        let denom = coords.iter().fold(1, |acc, &(_, q)| lcm(acc, q));
        TorusRational { coords, denom }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[(u64, u64)] {
        &self.coords
    }

    pub fn denom(&self) -> u64 {
        self.denom
    }

    pub fn is_zero(&self) -> bool {
        self.denom == 1
    }

    /// Numerators over the common denominator `denom()`.
    pub fn numerators_over_denom(&self) -> Vec<u64> {
        self.coords.iter().map(|&(p, q)| p * (self.denom / q)).collect()
    }

    /// `v · α mod 1` as a numerator over `denom()`.
    pub fn dot_numerator(&self, v: &[i64]) -> u64 {
        assert_eq!(v.len(), self.coords.len());
        let l = self.denom as i128;
        let mut acc: i128 = 0;
        for (&(p, q), &vi) in self.coords.iter().zip(v) {
            acc = (acc + (vi as i128).rem_euclid(l) * (p as i128 * (self.denom / q) as i128)).rem_euclid(l);
        }
        acc as u64
    }

    /// Whether `v · α = 0` in `T`.
    pub fn annihilated_by(&self, v: &[i64]) -> bool {
        self.dot_numerator(v) == 0
    }

    pub fn to_f64s(&self) -> Vec<f64> {
        self.coords.iter().map(|&(p, q)| p as f64 / q as f64).collect()
    }

    pub fn coordinate_strings(&self) -> Vec<String> {
        self.coords.iter().map(|&(p, q)| format!("{p}/{q}")).collect()
    }
}

impl fmt::Debug for TorusRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.coordinate_strings().join(", "))
    }
}

impl fmt::Display for TorusRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Serialize, Deserialize)]
struct TorusRationalRepr {
    coordinates: Vec<String>,
    denom: u64,
}

impl Serialize for TorusRational {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TorusRationalRepr { coordinates: self.coordinate_strings(), denom: self.denom }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for TorusRational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = TorusRationalRepr::deserialize(d)?;
        let mut raw = Vec::with_capacity(repr.coordinates.len());
        for c in &repr.coordinates {
            let (p, q) = c.split_once('/').ok_or_else(|| D::Error::custom(format!("`{c}` is not p/q")))?;
            let p: i64 = p.trim().parse().map_err(D::Error::custom)?;
            let q: i64 = q.trim().parse().map_err(D::Error::custom)?;
            raw.push((p, q));
        }
        let point = TorusRational::reduce(&raw).map_err(D::Error::custom)?;
        if point.denom != repr.denom {
            return Err(D::Error::custom(format!("denom {} does not match coordinates (expected {})", repr.denom, point.denom)));
        }
        Ok(point)
    }
}

/// `Rat(M)` restricted to the grid `prod (1/g_i)Z / Z`: nonzero grid points with denominator at most `m`.
pub fn enumerate_rat(m: u64, grid: &[u64]) -> Result<BTreeSet<TorusRational>> {
    if grid.contains(&0) {
        return Err(Error::Precondition("grid moduli must be positive".into()));
    }
    let total: u128 = grid.iter().map(|&g| g as u128).product();
    let bound = Bounds::global().max_enumeration as u128;
    if total > bound {
        return Err(Error::bound("grid size", total, bound));
    }
    let mut out = BTreeSet::new();
    if m <= 1 {
        return Ok(out);
    }
    let mut idx = vec![0u64; grid.len()];
    loop {
        let point = TorusRational::from_grid(&idx, grid);
        if !point.is_zero() && point.denom() <= m {
            out.insert(point);
        }
        if !advance(&mut idx, grid) {
            break;
        }
    }
    Ok(out)
}

/// Odometer increment over `prod [0, radix_i)`. Returns false after the last element.
pub(crate) fn advance(idx: &mut [u64], radix: &[u64]) -> bool {
    for i in (0..idx.len()).rev() {
        idx[i] += 1;
        if idx[i] < radix[i] {
            return true;
        }
        idx[i] = 0;
    }
    false
}
