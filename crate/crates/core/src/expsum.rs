//! Polynomial exponential sums `e(P(n) · alpha)` at rational frequencies.
//!
//! For `alpha` with common denominator `L` the phase `P(n) · alpha mod 1` has
//! period `L`, so the Cesàro limit of the averages equals the average over one
//! period. Phases are reduced exactly as integers mod `L` before conversion.

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::bounds::Bounds;
use crate::error::{Error, Result};
use crate::intpoly::{IntPolynomialMap, ModularPolynomial};
use crate::modular::{advance, gcd, TorusRational};

#[derive(Clone, Debug, PartialEq)]
pub struct WeylAverage {
    pub alpha: TorusRational,
    /// `denom(alpha)`.
    pub period: u64,
    pub value: Complex64,
}

impl WeylAverage {
    pub fn magnitude(&self) -> f64 {
        self.value.norm()
    }
}

/// `e(r / l)` for `r` in `[0, l)`.
struct UnitRoots(Vec<Complex64>);

impl UnitRoots {
    fn new(l: u64) -> Self {
        let tau = std::f64::consts::TAU;
        UnitRoots((0..l).map(|r| Complex64::from_polar(1.0, tau * r as f64 / l as f64)).collect())
    }

    fn at(&self, r: u64) -> Complex64 {
        self.0[r as usize]
    }
}

fn require_univariate(p: &IntPolynomialMap) -> Result<()> {
    if p.arity() != 1 {
        return Err(Error::ArityMismatch { expected: 1, got: p.arity() });
    }
    Ok(())
}

fn check_work(work: u128) -> Result<()> {
    let bound = Bounds::global().max_enumeration;
    if work > bound as u128 {
        return Err(Error::bound("exponential sum terms", work, bound));
    }
    Ok(())
}

/// Numerator of `P(n) · alpha` over `l`, with `c` the numerators of `alpha` over `l`.
fn phase(reduced: &ModularPolynomial, c: &[u64], n: u64, l: u64) -> u64 {
    let values = reduced.evaluate(&[n]);
    values.iter().zip(c).fold(0u64, |acc, (&v, &ci)| ((acc as u128 + v as u128 * ci as u128) % l as u128) as u64)
}

/// `(1/N) sum_{n<N} e(P(n) · alpha)`.
pub fn weyl_partial_average(p: &IntPolynomialMap, alpha: &TorusRational, n: u64) -> Result<Complex64> {
    require_univariate(p)?;
    if alpha.dim() != p.dimension() {
        return Err(Error::DimensionMismatch { expected: p.dimension(), got: alpha.dim() });
    }
    if n == 0 {
        return Err(Error::Precondition("need at least one term".into()));
    }
    check_work(n as u128)?;
    let l = alpha.denom();
    let reduced = p.reduce_mod(l);
    let c = alpha.numerators_over_denom();
    let roots = UnitRoots::new(l);
    let sum: Complex64 = (0..n).map(|t| roots.at(phase(&reduced, &c, t % l, l))).sum();
    Ok(sum / n as f64)
}

/// The limit of the Weyl averages at `alpha`, computed over one period `L = denom(alpha)`.
pub fn weyl_average(p: &IntPolynomialMap, alpha: &TorusRational) -> Result<WeylAverage> {
    let period = alpha.denom();
    let value = weyl_partial_average(p, alpha, period)?;
    Ok(WeylAverage { alpha: alpha.clone(), period, value })
}

/// `max |weyl_average(P, alpha)|` over `alpha ∈ (1/q) Z^d` with denominator exactly `q`.
pub fn psi_empirical(p: &IntPolynomialMap, q: u64) -> Result<f64> {
    require_univariate(p)?;
    if q < 2 {
        return Err(Error::Precondition("psi is defined for denominators q >= 2".into()));
    }
    let d = p.dimension();
    let frequencies = (q as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
    check_work(frequencies.saturating_mul(q as u128))?;
    let reduced = p.reduce_mod(q);
    let values: Vec<Vec<u64>> = (0..q).map(|n| reduced.evaluate(&[n])).collect();
    let roots = UnitRoots::new(q);
    let radix = vec![q; d];
    let mut c = vec![0u64; d];
    let mut best = 0.0f64;
    loop {
        // lcm of the reduced denominators is q exactly when gcd(c, q) = 1
        if c.iter().fold(q, |g, &ci| gcd(g, ci)) == 1 {
            let sum: Complex64 = values
                .iter()
                .map(|v| {
                    let r = v.iter().zip(&c).fold(0u128, |acc, (&x, &ci)| (acc + x as u128 * ci as u128) % q as u128);
                    roots.at(r as u64)
                })
                .sum();
            best = best.max(sum.norm() / q as f64);
        }
        if !advance(&mut c, &radix) {
            return Ok(best);
        }
    }
}

pub const HUA_TOLERANCE: f64 = 1e-12;

/// Empirical tail threshold: `psi(q) < target` for every scanned `q > m`.
#[derive(Clone, Debug, PartialEq)]
pub struct HuaThreshold {
    pub target: f64,
    pub m: u64,
    pub scan_bound: u64,
    /// `(q, psi(q))` for `q = 2..=scan_bound`.
    pub profile: Vec<(u64, f64)>,
}

impl HuaThreshold {
    pub fn to_json(&self) -> Value {
        json!({
            "target": self.target,
            "M": self.m,
            "scan_bound": self.scan_bound,
            "label": "empirical: the scan stops at scan_bound and certifies nothing beyond it",
            "tolerance": HUA_TOLERANCE,
            "profile": self.profile.iter().map(|&(q, v)| json!({ "q": q, "psi": v })).collect::<Vec<_>>(),
        })
    }
}

/// `psi(q)` for `q = 2..=scan_bound`.
pub fn psi_profile(p: &IntPolynomialMap, scan_bound: u64) -> Result<Vec<(u64, f64)>> {
    (2..=scan_bound).map(|q| psi_empirical(p, q).map(|v| (q, v))).collect()
}

/// Smallest `M` with `psi(q) < target` for all `q ∈ (M, scan_bound]`. Values within
/// `HUA_TOLERANCE` of the target count as reaching it.
pub fn hua_threshold(p: &IntPolynomialMap, target: f64, scan_bound: u64) -> Result<HuaThreshold> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(Error::Precondition("target must lie in (0, 1]".into()));
    }
    if scan_bound < 2 {
        return Err(Error::Precondition("scan_bound must be at least 2".into()));
    }
    let profile = psi_profile(p, scan_bound)?;
    let m = profile.iter().filter(|&&(_, v)| v >= target - HUA_TOLERANCE).map(|&(q, _)| q).max().unwrap_or(1);
    if m == scan_bound {
        return Err(Error::NoThreshold { scan_bound });
    }
    Ok(HuaThreshold { target, m, scan_bound, profile })
}
