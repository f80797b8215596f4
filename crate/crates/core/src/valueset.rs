//! Polynomial value sets modulo primes and squarefree moduli, and the
//! counterexample system whose polynomial orbits never cover a point.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, Zero};
use serde_json::{json, Value};

use crate::bitset::Bitset;
use crate::bounds::Bounds;
use crate::error::{Error, Result};
use crate::intpoly::IntPolynomialMap;
use crate::json;
use crate::modular::{factorize, gcd, is_prime, mod_inverse};

/// Direct enumeration is used as a cross-check up to this modulus.
const CROSS_CHECK_LIMIT: u64 = 10_000;

/// A set of residues modulo `q`, sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValueSet {
    modulus: u64,
    residues: Vec<u64>,
}

impl ValueSet {
    pub fn new(modulus: u64, mut residues: Vec<u64>) -> Result<Self> {
        if modulus == 0 {
            return Err(Error::Precondition("modulus must be positive".into()));
        }
        if let Some(&r) = residues.iter().find(|&&r| r >= modulus) {
            return Err(Error::Precondition(format!("residue {r} is not below {modulus}")));
        }
        residues.sort_unstable();
        residues.dedup();
        Ok(ValueSet { modulus, residues })
    }

    pub fn from_bitset(bits: &Bitset) -> Self {
        ValueSet { modulus: bits.len() as u64, residues: bits.iter().map(|i| i as u64).collect() }
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn residues(&self) -> &[u64] {
        &self.residues
    }

    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }

    pub fn contains(&self, r: u64) -> bool {
        self.residues.binary_search(&(r % self.modulus)).is_ok()
    }

    pub fn density(&self) -> BigRational {
        BigRational::new(BigInt::from(self.residues.len()), BigInt::from(self.modulus))
    }

    /// `-S = { -s mod q }`.
    pub fn negated(&self) -> ValueSet {
        let q = self.modulus;
        let mut r: Vec<u64> = self.residues.iter().map(|&s| (q - s) % q).collect();
        r.sort_unstable();
        ValueSet { modulus: q, residues: r }
    }

    pub fn to_bitset(&self) -> Bitset {
        Bitset::from_indices(self.modulus as usize, self.residues.iter().map(|&r| r as usize))
    }

    pub fn to_json(&self) -> Value {
        let as_i64: Vec<i64> = self.residues.iter().map(|&r| r as i64).collect();
        json!({ "modulus": self.modulus, "size": self.len(), "residues": json::sorted_list(&as_i64) })
    }
}

fn require_scalar_univariate(p: &IntPolynomialMap) -> Result<()> {
    if p.arity() != 1 {
        return Err(Error::ArityMismatch { expected: 1, got: p.arity() });
    }
    if p.dimension() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: p.dimension() });
    }
    Ok(())
}

fn check_modulus(q: u64) -> Result<()> {
    let bound = Bounds::global().max_modulus;
    if q > bound {
        return Err(Error::bound("modulus", q, bound));
    }
    Ok(())
}

/// Image of `Z/qZ` under `P mod q`, by enumerating `n = 0..q`.
pub fn value_set_direct(p: &IntPolynomialMap, q: u64) -> Result<ValueSet> {
    require_scalar_univariate(p)?;
    check_modulus(q)?;
    let red = p.reduce_mod(q);
    let mut bits = Bitset::new(q as usize);
    for n in 0..q {
        bits.insert(red.evaluate_scalar(n) as usize);
    }
    Ok(ValueSet::from_bitset(&bits))
}

/// `V(P, p) = { P(n) mod p }` for a prime `p`.
pub fn value_set_mod_prime(p: &IntPolynomialMap, prime: u64) -> Result<ValueSet> {
    if !is_prime(prime) {
        return Err(Error::NotPrime(prime));
    }
    value_set_direct(p, prime)
}

/// Primes with a proper value set, and the deficiency ratios they certify.
#[derive(Clone, Debug, PartialEq)]
pub struct DeficientPrimes {
    /// `1 - 1/(2 deg P)`.
    pub lambda: BigRational,
    /// `2/3`, attached for quadratics when every returned prime satisfies `|V| <= 2p/3`.
    pub quadratic_lambda: Option<BigRational>,
    pub primes: Vec<u64>,
    pub sizes: Vec<u64>,
}

impl DeficientPrimes {
    /// Smallest certified ratio.
    pub fn best_lambda(&self) -> &BigRational {
        match &self.quadratic_lambda {
            Some(q) if q < &self.lambda => q,
            _ => &self.lambda,
        }
    }
}

pub fn general_lambda(degree: u32) -> BigRational {
    BigRational::one() - BigRational::new(BigInt::one(), BigInt::from(2 * degree))
}

/// First `count` primes `p <= scan_bound` with `|V(P, p)| < p`, each checked to satisfy
/// `|V(P, p)| <= (1 - 1/(2 deg P)) p`.
pub fn find_deficient_primes(p: &IntPolynomialMap, count: usize, scan_bound: u64) -> Result<DeficientPrimes> {
    require_scalar_univariate(p)?;
    let deg = p.degree();
    if deg < 2 {
        return Err(Error::DegreeTooLow { degree: deg, required: 2 });
    }
    let lambda = general_lambda(deg);
    let mut primes = Vec::with_capacity(count);
    let mut sizes = Vec::with_capacity(count);
    let mut candidate = 2u64;
    while primes.len() < count && candidate <= scan_bound {
        if is_prime(candidate) {
            let size = value_set_mod_prime(p, candidate)?.len() as u64;
            if size < candidate {
                // |V| <= (1 - 1/(2D)) p  <=>  2D |V| <= (2D - 1) p
                let lhs = 2 * deg as u128 * size as u128;
                let rhs = (2 * deg as u128 - 1) * candidate as u128;
                if lhs > rhs {
                    return Err(Error::Invariant(format!(
                        "|V(P, {candidate})| = {size} exceeds the deficiency ratio {lambda}"
                    )));
                }
                primes.push(candidate);
                sizes.push(size);
            }
        }
        candidate += 1;
    }
    if primes.len() < count {
        return Err(Error::InsufficientPrimes { found: primes.len(), needed: count, scan_bound });
    }
    let quadratic_lambda = (deg == 2 && primes.iter().zip(&sizes).all(|(&q, &s)| 3 * s <= 2 * q))
        .then(|| BigRational::new(BigInt::from(2), BigInt::from(3)));
    Ok(DeficientPrimes { lambda, quadratic_lambda, primes, sizes })
}

/// Combines residue sets modulo pairwise coprime primes into the set modulo their product.
fn crt_product(parts: &[ValueSet]) -> Result<ValueSet> {
    let total: u128 = parts.iter().map(|v| v.len() as u128).product();
    let bound = Bounds::global().max_enumeration as u128;
    if total > bound {
        return Err(Error::bound("CRT tuple count", total, bound));
    }
    let mut modulus = 1u64;
    let mut acc: Vec<u64> = vec![0];
    for part in parts {
        let p = part.modulus();
        let inv = mod_inverse(modulus % p, p).ok_or(Error::NotCoprime(modulus, p))?;
        let mut next = Vec::with_capacity(acc.len() * part.len());
        for &s in &acc {
            for &v in part.residues() {
                // x = s + m * ((v - s) m^{-1} mod p)
                let diff = (v + p - s % p) % p;
                let t = (diff as u128 * inv as u128 % p as u128) as u64;
                next.push(s + modulus * t);
            }
        }
        modulus *= p;
        acc = next;
    }
    ValueSet::new(modulus, acc)
}

/// `S(q) = { P(n) mod q }` for squarefree `q`, assembled from the prime value sets.
pub fn value_set_mod_squarefree(p: &IntPolynomialMap, q: u64) -> Result<ValueSet> {
    require_scalar_univariate(p)?;
    check_modulus(q)?;
    let f = factorize(q)?;
    if !f.is_squarefree() {
        return Err(Error::NotSquarefree(q));
    }
    let parts = f.primes().map(|prime| value_set_mod_prime(p, prime)).collect::<Result<Vec<_>>>()?;
    let combined = if parts.is_empty() { ValueSet::new(1, vec![0])? } else { crt_product(&parts)? };
    if q <= CROSS_CHECK_LIMIT && combined != value_set_direct(p, q)? {
        return Err(Error::Invariant(format!("CRT value set mod {q} disagrees with direct enumeration")));
    }
    Ok(combined)
}

/// One level `Z/q_iZ` of the counterexample.
#[derive(Clone, Debug, PartialEq)]
pub struct BlueprintLevel {
    pub modulus: u64,
    pub primes: Vec<u64>,
    /// `S(q_i)`.
    pub value_set: ValueSet,
    /// `A_i = Z/q_iZ \ (-S(q_i))`.
    pub set: ValueSet,
    /// `A_i' = A_i + S(q_i)`, the polynomial orbit of `A_i`.
    pub orbit: ValueSet,
}

/// The system `prod Z/q_iZ` with the diagonal `Z`-action and set `A = prod A_i`,
/// whose polynomial orbit misses `0` at every level.
#[derive(Clone, Debug, PartialEq)]
pub struct CounterexampleBlueprint {
    pub polynomial: IntPolynomialMap,
    pub depth: usize,
    pub primes: Vec<u64>,
    pub levels: Vec<BlueprintLevel>,
    /// Ratio used for the level bounds.
    pub lambda: BigRational,
    pub general_lambda: BigRational,
}

impl CounterexampleBlueprint {
    pub fn moduli(&self) -> Vec<u64> {
        self.levels.iter().map(|l| l.modulus).collect()
    }

    /// `prod q_i`, the period of every return-time set.
    pub fn period(&self) -> u64 {
        self.levels.iter().map(|l| l.modulus).product()
    }

    /// `mu(A) = prod |A_i| / q_i`.
    pub fn measure(&self) -> BigRational {
        self.levels.iter().map(|l| l.set.density()).product()
    }

    pub fn to_json(&self) -> Value {
        let levels: Vec<Value> = self
            .levels
            .iter()
            .enumerate()
            .map(|(i, l)| {
                json!({
                    "level": i + 1,
                    "modulus": l.modulus,
                    "primes": l.primes,
                    "value_set": l.value_set.to_json(),
                    "set": l.set.to_json(),
                    "orbit": l.orbit.to_json(),
                    "set_density": json::rational(&l.set.density()),
                    "lower_bound": json::rational(&(BigRational::one() - Pow::pow(&self.lambda, i as u32 + 1))),
                    "orbit_contains_zero": l.orbit.contains(0),
                })
            })
            .collect();
        json!({
            "polynomial": self.polynomial.to_string(),
            "depth": self.depth,
            "primes": self.primes,
            "moduli": self.moduli(),
            "lambda": json::rational(&self.lambda),
            "general_lambda": json::rational(&self.general_lambda),
            "measure": json::rational(&self.measure()),
            "levels": levels,
        })
    }
}

/// `A + S` in `Z/qZ`.
pub fn sumset(a: &ValueSet, s: &ValueSet) -> ValueSet {
    let bits = a.to_bitset();
    let mut out = Bitset::new(a.modulus() as usize);
    for &shift in s.residues() {
        out.or_rotated(&bits, shift as usize);
    }
    ValueSet::from_bitset(&out)
}

/// Builds the depth-`I` counterexample: level `i` uses the next `i` deficient primes.
/// Every level invariant is verified before returning.
pub fn build_counterexample(p: &IntPolynomialMap, depth: usize) -> Result<CounterexampleBlueprint> {
    require_scalar_univariate(p)?;
    if depth == 0 {
        return Err(Error::Precondition("depth must be at least 1".into()));
    }
    if p.degree() < 2 {
        return Err(Error::DegreeTooLow { degree: p.degree(), required: 2 });
    }
    if !p.has_zero_constant_term() {
        return Err(Error::Precondition("polynomial must vanish at 0".into()));
    }
    let needed = depth * (depth + 1) / 2;
    let bounds = Bounds::global();
    let deficient = find_deficient_primes(p, needed, bounds.max_modulus)?;
    let lambda = deficient.best_lambda().clone();

    let mut levels = Vec::with_capacity(depth);
    let mut next = 0;
    for i in 1..=depth {
        let primes = deficient.primes[next..next + i].to_vec();
        next += i;
        let modulus = primes.iter().try_fold(1u64, |acc, &q| acc.checked_mul(q)).unwrap_or(u64::MAX);
        check_modulus(modulus)?;
        let value_set = value_set_mod_squarefree(p, modulus)?;
        let minus = value_set.negated().to_bitset();
        let set = ValueSet::from_bitset(&minus.complement());
        let orbit = sumset(&set, &value_set);
        levels.push(BlueprintLevel { modulus, primes, value_set, set, orbit });
    }
    let bp = CounterexampleBlueprint {
        polynomial: p.clone(),
        depth,
        primes: deficient.primes.clone(),
        levels,
        lambda,
        general_lambda: deficient.lambda.clone(),
    };
    verify_blueprint(&bp)?;
    Ok(bp)
}

fn verify_blueprint(bp: &CounterexampleBlueprint) -> Result<()> {
    let fail = |msg: String| Err(Error::Invariant(msg));
    for (i, a) in bp.levels.iter().enumerate() {
        for b in &bp.levels[i + 1..] {
            if gcd(a.modulus, b.modulus) != 1 {
                return Err(Error::Invariant(format!("moduli {} and {} share a factor", a.modulus, b.modulus)));
            }
        }
    }
    for (i, level) in bp.levels.iter().enumerate() {
        let power = Pow::pow(&bp.lambda, i as u32 + 1);
        let q = level.modulus;
        if level.primes.len() != i + 1 || level.primes.iter().product::<u64>() != q {
            return fail(format!("level {} does not use {} primes", i + 1, i + 1));
        }
        if !factorize(q)?.is_squarefree() {
            return fail(format!("modulus {q} is not squarefree"));
        }
        if level.value_set.density() > power {
            return fail(format!("|S({q})|/{q} exceeds lambda^{}", i + 1));
        }
        let density = level.set.density();
        if density < BigRational::one() - &power || density >= BigRational::one() {
            return fail(format!("|A_{}|/{q} = {density} outside [1 - lambda^{}, 1)", i + 1, i + 1));
        }
        if level.orbit.contains(0) {
            return fail(format!("0 lies in A_{} + S({q})", i + 1));
        }
        if level.set.residues().iter().any(|&a| level.value_set.contains((q - a) % q)) {
            return fail(format!("A_{} meets -S({q})", i + 1));
        }
    }
    Ok(())
}

/// Longest run of a `k`-step progression inside a level orbit `A_i'`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProgressionBound {
    /// 1-based level index.
    pub level: usize,
    pub modulus: u64,
    /// Largest `m` with `a, a+k, ..., a+(m-1)k` all in `A_i'` for some `a`.
    pub m: u64,
    /// A start `a` realizing `m`.
    pub start: u64,
}

/// At the first level with `gcd(k, q_i) = 1`, the longest `k`-progression inside
/// `A_i' = A_i + S(q_i)`. The pinned pattern `{k, 2k, ..., mk}` then fails from every base point.
pub fn max_progression_length(bp: &CounterexampleBlueprint, k: u64) -> Result<ProgressionBound> {
    if k == 0 {
        return Err(Error::Precondition("k must be positive".into()));
    }
    let (idx, level) = bp
        .levels
        .iter()
        .enumerate()
        .find(|(_, l)| gcd(k, l.modulus) == 1)
        .ok_or(Error::NoCoprimeLevel { k, depth: bp.depth })?;
    let q = level.modulus;
    let orbit = level.orbit.to_bitset();
    let step = k % q;
    // walk the k-cycle starting just after a non-member, so the run never wraps
    let Some(gap) = (0..q).find(|&z| !orbit.contains(z as usize)) else {
        return Err(Error::Invariant(format!("level orbit covers Z/{q}Z")));
    };
    let mut best = (0u64, 0u64);
    let mut run = 0u64;
    let mut run_start = 0u64;
    let mut z = gap;
    for _ in 0..q {
        z = (z + step) % q;
        if orbit.contains(z as usize) {
            if run == 0 {
                run_start = z;
            }
            run += 1;
            if run > best.0 {
                best = (run, run_start);
            }
        } else {
            run = 0;
        }
    }
    Ok(ProgressionBound { level: idx + 1, modulus: q, m: best.0, start: best.1 })
}

/// Default base point: the smallest element of each `A_i`.
pub fn default_base_point(bp: &CounterexampleBlueprint) -> Vec<u64> {
    bp.levels.iter().map(|l| l.set.residues()[0]).collect()
}

/// `E_x = { n in [lo, hi) : x_i + n mod q_i in A_i for every level }`.
pub fn return_time_set(bp: &CounterexampleBlueprint, base: Option<&[u64]>, lo: i64, hi: i64) -> Result<Vec<i64>> {
    let default = default_base_point(bp);
    let x = base.unwrap_or(&default);
    if x.len() != bp.levels.len() {
        return Err(Error::DimensionMismatch { expected: bp.levels.len(), got: x.len() });
    }
    if hi < lo {
        return Err(Error::Precondition(format!("empty window [{lo}, {hi})")));
    }
    let len = (hi as i128 - lo as i128) as u128;
    let bound = Bounds::global().max_window;
    if len > bound as u128 {
        return Err(Error::bound("window length", len, bound));
    }
    let sets: Vec<Bitset> = bp.levels.iter().map(|l| l.set.to_bitset()).collect();
    let mut out = Vec::new();
    for n in lo..hi {
        let inside = bp.levels.iter().zip(&sets).zip(x).all(|((l, s), &xi)| {
            let q = l.modulus as i128;
            s.contains(((xi as i128 + n as i128).rem_euclid(q)) as usize)
        });
        if inside {
            out.push(n);
        }
    }
    Ok(out)
}

/// `|S(q)| = prod |V(P, p)|` over the prime factors of `q`.
pub fn value_set_size_product(p: &IntPolynomialMap, q: u64) -> Result<BigInt> {
    let f = factorize(q)?;
    let mut acc = BigInt::one();
    for prime in f.primes() {
        acc *= BigInt::from(value_set_mod_prime(p, prime)?.len());
    }
    if acc.is_zero() {
        return Err(Error::Invariant("empty value set".into()));
    }
    Ok(acc)
}
