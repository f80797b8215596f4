use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;

use super::components::ErgodicComponent;
use super::measure::{spectral_measure, SpectralMeasureTable};
use super::system::{CyclicProductSystem, GroupSet};
use crate::bitset::Bitset;
use crate::bounds::Bounds;
use crate::error::{Error, Result};
use crate::intlinalg::Haystack;
use crate::intpoly::IntPolynomialMap;
use crate::modular::{advance, gcd, gcd_i64_slice};

/// Cyclic subgroup generated by one group element.
fn cyclic_subgroup(sys: &CyclicProductSystem, s: &[u64]) -> Bitset {
    sys.subgroup(&[s.to_vec()])
}

/// `U_v(A) = union over n of T^{n v} A = A + <sum v_j g_j>`.
pub fn directional_union(sys: &CyclicProductSystem, a: &Bitset, v: &[i64]) -> Result<Bitset> {
    let s = sys.shift_of(v)?;
    Ok(sys.sumset(a, &cyclic_subgroup(sys, &s)))
}

/// Exact measure of `union_n T^{n v} A`.
pub fn orbit_union_directional(sys: &CyclicProductSystem, a: &GroupSet, v: &[i64]) -> Result<BigRational> {
    if sys.dim() < 2 {
        return Err(Error::Precondition("directional orbits need an action of rank at least 2".into()));
    }
    if gcd_i64_slice(v) != 1 {
        return Err(Error::NotPrimitive(v.to_vec()));
    }
    let bits = a.to_bitset(sys)?;
    let u = directional_union(sys, &bits, v)?;
    Ok(BigRational::new(BigInt::from(u.count()), BigInt::from(sys.size())))
}

/// `{ sum_j P_j(n) g_j : n in Z^r }` as a subset of `X`. `P(n) mod L` is periodic with
/// period `L = lcm(q_i)` in every variable, so one period of inputs suffices.
pub fn polynomial_shift_set(sys: &CyclicProductSystem, p: &IntPolynomialMap) -> Result<Bitset> {
    if p.dimension() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), got: p.dimension() });
    }
    let l = sys.exponent();
    let count = (l as u128).checked_pow(p.arity() as u32).unwrap_or(u128::MAX);
    let bound = Bounds::global().max_enumeration;
    if count > bound as u128 {
        return Err(Error::bound("polynomial period enumeration", count, bound));
    }
    let red = p.reduce_mod(l);
    let radix = vec![l; p.arity()];
    let mut idx = vec![0u64; p.arity()];
    let mut shifts = Bitset::new(sys.size());
    loop {
        let value: Vec<i64> = red.evaluate(&idx).into_iter().map(|x| x as i64).collect();
        shifts.insert(sys.index(&sys.combine(sys.generators(), &value)));
        if !advance(&mut idx, &radix) {
            break;
        }
    }
    Ok(shifts)
}

/// `union_n T^{P(n)} A`.
pub fn polynomial_union(sys: &CyclicProductSystem, a: &Bitset, p: &IntPolynomialMap) -> Result<Bitset> {
    let shifts = polynomial_shift_set(sys, p)?;
    let work = a.count() as u128 * shifts.count() as u128;
    let bound = Bounds::global().max_tuples;
    if work > bound as u128 {
        return Err(Error::bound("sumset work", work, bound));
    }
    Ok(sys.sumset(a, &shifts))
}

/// Exact measure of `union_{n in Z^r} T^{P(n)} A`.
pub fn orbit_union_polynomial(sys: &CyclicProductSystem, a: &GroupSet, p: &IntPolynomialMap) -> Result<BigRational> {
    let bits = a.to_bitset(sys)?;
    let u = polynomial_union(sys, &bits, p)?;
    Ok(BigRational::new(BigInt::from(u.count()), BigInt::from(sys.size())))
}

/// A direction whose annihilator carries little nonzero spectral mass.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpansiveDirection {
    pub direction: Vec<i64>,
    /// Smallest `M` with `direction` in `H_M`.
    pub window: u64,
    /// `sigma(L_v^perp \ {0})`.
    pub line_mass: f64,
    /// `mu(union_n T^{n v} A)`, exact.
    pub union_measure: BigRational,
    /// `mu(A)^2 / sigma(L_v^perp)`.
    pub lower_bound: f64,
}

/// Scans the moment-curve haystack `H_M` for growing `M` until some `v` has
/// `sigma(L_v^perp \ {0}) <= gamma`, then checks `mu(U_v(A)) >= mu(A)^2 / sigma(L_v^perp)`.
pub fn find_expansive_direction(sys: &CyclicProductSystem, a: &GroupSet, gamma: f64, cap: u64) -> Result<ExpansiveDirection> {
    if sys.dim() < 2 {
        return Err(Error::Precondition("directional search needs an action of rank at least 2".into()));
    }
    if !(gamma > 0.0) {
        return Err(Error::Precondition("gamma must be positive".into()));
    }
    let sigma = spectral_measure(sys, a)?;
    let haystack = Haystack::new(sys.dim())?;
    let mut best: Option<(Vec<i64>, f64)> = None;
    for t in 1u64.. {
        if !haystack.in_window(t, cap) {
            break;
        }
        let v = haystack.vector(t);
        let mass = sigma.line_mass(&v);
        if best.as_ref().is_none_or(|(_, m)| mass < *m) {
            best = Some((v.clone(), mass));
        }
        if mass <= gamma {
            let window = window_of(sys.dim(), t);
            return certify_direction(sys, a, &sigma, v, window);
        }
    }
    let (best, best_mass) = best.unwrap_or_default();
    Err(Error::DirectionCapExceeded { cap, best, best_mass })
}

/// `d! t^{d(d-1)}`, the least `M` whose haystack window contains `v_t`.
fn window_of(d: usize, t: u64) -> u64 {
    let fact: u128 = (1..=d as u128).product();
    let v = (t as u128).saturating_pow((d * (d - 1)) as u32).saturating_mul(fact);
    v.min(u64::MAX as u128) as u64
}

fn certify_direction(
    sys: &CyclicProductSystem,
    a: &GroupSet,
    sigma: &SpectralMeasureTable,
    v: Vec<i64>,
    window: u64,
) -> Result<ExpansiveDirection> {
    let union_measure = orbit_union_directional(sys, a, &v)?;
    let mu = sigma.set_measure().to_f64().unwrap_or(0.0);
    let lower_bound = mu * mu / sigma.annihilator_mass(&v);
    if union_measure.to_f64().unwrap_or(0.0) < lower_bound - super::measure::MASS_TOLERANCE {
        return Err(Error::Invariant(format!(
            "directional orbit of measure {union_measure} falls below the spectral lower bound {lower_bound}"
        )));
    }
    Ok(ExpansiveDirection { line_mass: sigma.line_mass(&v), direction: v, window, union_measure, lower_bound })
}

/// A return time `m = j k` with `nu(A ∩ T^{m v} A) > nu(A)^2 / 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReturnTime {
    pub m: u64,
    pub multiple: u64,
    pub intersection: BigRational,
    pub threshold: BigRational,
}

/// Smallest `m` among `k, 2k, ..., floor(2/nu(A)) k` with `nu(A ∩ T^{m v} A) > nu(A)^2 / 2`,
/// where `k` is the component step. Jensen's inequality on the averages over `j <= J`
/// gives a hit once `J >= 2/nu(A) - 1`, so the scan cannot come up empty.
pub fn find_return_time(sys: &CyclicProductSystem, comp: &ErgodicComponent, a: &GroupSet, v: &[i64]) -> Result<ReturnTime> {
    let bits = a.to_bitset(sys)?;
    let mut inside = bits.clone();
    inside.intersect_with(&comp.members);
    let nu = comp.relative_measure(&bits);
    if nu == BigRational::from_integer(0.into()) {
        return Err(Error::Precondition("nu(A) must be positive".into()));
    }
    let threshold = &nu * &nu / BigRational::from_integer(2.into());
    let limit = (BigRational::from_integer(2.into()) / &nu).floor().to_integer().to_u64().unwrap_or(u64::MAX);
    let base = sys.shift_of(v)?;
    let k = comp.step as i64;
    for j in 1..=limit.max(1) {
        let shift = sys.combine(std::slice::from_ref(&base), &[j as i64 * k]);
        let moved = sys.translate(&inside, &shift);
        let intersection = comp.relative_measure(&{
            let mut x = moved;
            x.intersect_with(&inside);
            x
        });
        if intersection > threshold {
            return Ok(ReturnTime { m: j * comp.step, multiple: j, intersection, threshold });
        }
    }
    Err(Error::Invariant(format!("no return time up to {limit} k with nu(A) = {nu}")))
}

/// Lifts a vector with `gcd(v, L) = 1` to a primitive integer vector congruent mod `L`.
pub(crate) fn lift_primitive(v: &[u64], l: u64) -> Vec<i64> {
    let mut w: Vec<i64> = v.iter().map(|&x| x as i64).collect();
    if gcd_i64_slice(&w) == 1 {
        return w;
    }
    let rest = gcd_i64_slice(&w[1..]);
    // gcd(w_0 + tL, rest) = 1 for some small t because gcd(w_0, L, rest) = 1
    for t in 0..=(rest.max(1) as i64) {
        let cand = w[0] + t * l as i64;
        if gcd(cand.unsigned_abs(), rest) == 1 {
            w[0] = cand;
            return w;
        }
    }
    w[1] += l as i64;
    lift_primitive(&w.iter().map(|&x| x as u64).collect::<Vec<_>>(), l)
}

/// Direction classes `v mod L` with `gcd(v, L) = 1`, lifted to primitive vectors.
pub fn primitive_direction_classes(sys: &CyclicProductSystem) -> Result<Vec<Vec<i64>>> {
    let l = sys.exponent();
    let d = sys.dim();
    if d == 1 {
        return Ok(vec![vec![1]]);
    }
    let count = (l as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
    let bound = Bounds::global().max_enumeration;
    if count > bound as u128 {
        return Err(Error::bound("direction classes", count, bound));
    }
    let radix = vec![l; d];
    let mut idx = vec![0u64; d];
    let mut out = Vec::new();
    loop {
        if idx.iter().fold(l, |acc, &x| gcd(acc, x)) == 1 {
            out.push(lift_primitive(&idx, l));
        }
        if !advance(&mut idx, &radix) {
            break;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn directional_examples() {
        let sys = CyclicProductSystem::torus(3, 2).unwrap();
        let single = GroupSet::from_points(&sys, &[vec![0, 0]]).unwrap();
        assert_eq!(orbit_union_directional(&sys, &single, &[1, 0]).unwrap(), q(1, 3));
        assert!(orbit_union_directional(&sys, &GroupSet::full(&sys), &[1, 2]).unwrap().is_one());
        let row = GroupSet::from_points(&sys, &[vec![0, 0], vec![0, 1], vec![0, 2]]).unwrap();
        assert!(orbit_union_directional(&sys, &row, &[1, 0]).unwrap().is_one());
        assert_eq!(orbit_union_directional(&sys, &single, &[2, 4]), Err(Error::NotPrimitive(vec![2, 4])));
    }

    #[test]
    fn polynomial_examples() {
        let sq = IntPolynomialMap::parse("n^2").unwrap();
        let z3 = CyclicProductSystem::diagonal(vec![3]).unwrap();
        let a = GroupSet::from_indices(&z3, [1]).unwrap();
        assert_eq!(orbit_union_polynomial(&z3, &a, &sq).unwrap(), q(2, 3));
        assert!(orbit_union_polynomial(&z3, &GroupSet::full(&z3), &sq).unwrap().is_one());
        let lin = IntPolynomialMap::parse("n").unwrap();
        let sys = CyclicProductSystem::diagonal(vec![4, 9]).unwrap();
        let b = GroupSet::from_points(&sys, &[vec![3, 5]]).unwrap();
        assert!(orbit_union_polynomial(&sys, &b, &lin).unwrap().is_one());
    }

    #[test]
    fn direction_search_examples() {
        let sys = CyclicProductSystem::torus(3, 3).unwrap();
        let found = find_expansive_direction(&sys, &GroupSet::full(&sys), 0.1, 100).unwrap();
        assert!(found.line_mass.abs() < 1e-12);
        let t3 = CyclicProductSystem::torus(3, 2).unwrap();
        let single = GroupSet::from_points(&t3, &[vec![0, 0]]).unwrap();
        match find_expansive_direction(&t3, &single, 0.01, 200) {
            Err(Error::DirectionCapExceeded { best_mass, .. }) => assert!((best_mass - 2.0 / 81.0).abs() < 1e-12),
            other => panic!("expected cap exceeded, got {other:?}"),
        }
    }

    #[test]
    fn return_time_examples() {
        let z6 = CyclicProductSystem::diagonal(vec![6]).unwrap();
        let whole = ErgodicComponent::whole(&z6).unwrap();
        let full = GroupSet::full(&z6);
        let rt = find_return_time(&z6, &whole, &full, &[1]).unwrap();
        assert_eq!(rt.m, 1);
        assert!(rt.intersection.is_one());
        let a = GroupSet::from_indices(&z6, [0, 1, 2]).unwrap();
        let rt = find_return_time(&z6, &whole, &a, &[1]).unwrap();
        assert_eq!((rt.m, rt.intersection.clone()), (1, q(1, 3)));
        let comp = &super::super::components::ergodic_components(&z6, 2).unwrap()[0];
        let rt = find_return_time(&z6, comp, &a, &[1]).unwrap();
        assert_eq!(rt.m % 2, 0);
    }

    #[test]
    fn lifted_directions_are_primitive() {
        for l in [2u64, 6, 12, 30] {
            for a in 0..l {
                for b in 0..l {
                    if gcd(gcd(a, b), l) != 1 {
                        continue;
                    }
                    let w = lift_primitive(&[a, b], l);
                    assert_eq!(gcd_i64_slice(&w), 1);
                    assert_eq!((w[0].rem_euclid(l as i64) as u64, w[1].rem_euclid(l as i64) as u64), (a, b));
                }
            }
        }
    }
}
