//! Integer polynomial maps `Z^r -> Z^d`.

mod parse;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::intlinalg::{rational_rank_and_kernel, IntMatrix};

/// Exponent vector of a monomial `x_0^{e_0} ... x_{r-1}^{e_{r-1}}`.
///
/// Ordered graded-lexicographically: by total degree, then by exponent vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        Monomial(exponents)
    }

    pub fn constant(arity: usize) -> Self {
        Monomial(vec![0; arity])
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    fn evaluate(&self, x: &[BigInt]) -> BigInt {
        self.0.iter().zip(x).fold(BigInt::one(), |acc, (&e, xi)| acc * Pow::pow(xi, e))
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

type Component = BTreeMap<Monomial, BigInt>;

/// A polynomial map `P = (P_1, ..., P_d)` with integer coefficients in `r` variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntPolynomialMap {
    arity: usize,
    components: Vec<Component>,
}

/// Rank of the components of a polynomial map, with a kernel witness when deficient.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentRank {
    pub rank: usize,
    /// Nonzero `a` with `sum a_i P_i = 0`, primitive with positive leading entry.
    pub witness: Option<Vec<BigInt>>,
}

/// `sum alpha_i P_i = sum beta_j x_j` with `alpha != 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearCombination {
    pub alpha: Vec<BigInt>,
    pub beta: Vec<BigInt>,
}

impl IntPolynomialMap {
    /// Builds a map from per-component term lists. Repeated monomials are summed and
    /// zero coefficients dropped.
    pub fn new(arity: usize, components: Vec<Vec<(Monomial, BigInt)>>) -> Result<Self> {
        if arity == 0 {
            return Err(Error::Precondition("arity must be positive".into()));
        }
        if components.is_empty() {
            return Err(Error::Precondition("a polynomial map needs at least one component".into()));
        }
        let mut out = Vec::with_capacity(components.len());
        for terms in components {
            let mut comp = Component::new();
            for (m, c) in terms {
                if m.0.len() != arity {
                    return Err(Error::ArityMismatch { expected: arity, got: m.0.len() });
                }
                *comp.entry(m).or_insert_with(BigInt::zero) += c;
            }
            comp.retain(|_, c| !c.is_zero());
            out.push(comp);
        }
        Ok(IntPolynomialMap { arity, components: out })
    }

    /// Univariate map from `(exponent, coefficient)` lists, one list per component.
    pub fn univariate(components: &[&[(u32, i64)]]) -> Result<Self> {
        let comps = components
            .iter()
            .map(|terms| terms.iter().map(|&(e, c)| (Monomial(vec![e]), BigInt::from(c))).collect())
            .collect();
        Self::new(1, comps)
    }

    /// Parses the text format: components separated by `;`, variables `x0, x1, ...`
    /// (`n` is an alias for `x0`), terms such as `3*x0^2*x1 - x1`.
    pub fn parse(text: &str) -> Result<Self> {
        parse::parse(text, None)
    }

    /// Like [`parse`](Self::parse) but with an explicit arity, which may exceed the
    /// highest variable index used.
    pub fn parse_with_arity(text: &str, arity: usize) -> Result<Self> {
        parse::parse(text, Some(arity))
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn dimension(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, i: usize) -> &BTreeMap<Monomial, BigInt> {
        &self.components[i]
    }

    pub fn degree(&self) -> u32 {
        self.components.iter().map(component_degree).max().unwrap_or(0)
    }

    pub fn component_degree(&self, i: usize) -> u32 {
        component_degree(&self.components[i])
    }

    pub fn constant_term(&self) -> Vec<BigInt> {
        let zero = Monomial::constant(self.arity);
        self.components.iter().map(|c| c.get(&zero).cloned().unwrap_or_default()).collect()
    }

    pub fn has_zero_constant_term(&self) -> bool {
        self.constant_term().iter().all(Zero::is_zero)
    }

    /// `P - P(0)`.
    pub fn without_constant(&self) -> Self {
        let zero = Monomial::constant(self.arity);
        let components = self
            .components
            .iter()
            .map(|c| {
                let mut c = c.clone();
                c.remove(&zero);
                c
            })
            .collect();
        IntPolynomialMap { arity: self.arity, components }
    }

    pub fn evaluate(&self, x: &[BigInt]) -> Result<Vec<BigInt>> {
        if x.len() != self.arity {
            return Err(Error::ArityMismatch { expected: self.arity, got: x.len() });
        }
        Ok(self.components.iter().map(|comp| comp.iter().map(|(m, c)| c * m.evaluate(x)).sum()).collect())
    }

    pub fn evaluate_i64(&self, x: &[i64]) -> Result<Vec<BigInt>> {
        let x: Vec<BigInt> = x.iter().map(|&v| BigInt::from(v)).collect();
        self.evaluate(&x)
    }

    /// Coefficients reduced into `[0, q)` for fast repeated evaluation mod `q`.
    pub fn reduce_mod(&self, q: u64) -> ModularPolynomial {
        assert!(q > 0, "modulus must be positive");
        let qb = BigInt::from(q);
        let components = self
            .components
            .iter()
            .map(|comp| {
                comp.iter()
                    .map(|(m, c)| (m.0.clone(), c.mod_floor(&qb).to_u64().expect("reduced coefficient fits")))
                    .filter(|&(_, c)| c != 0)
                    .collect()
            })
            .collect();
        ModularPolynomial { modulus: q, arity: self.arity, degree: self.degree(), components }
    }

    /// Substitutes `x_j -> n^((D+1)^(j+1))` for `j = 0..r`, with `D = deg P`. Distinct
    /// monomials of degree at most `D` go to distinct powers of `n`, so each component
    /// keeps its coefficients.
    pub fn curry_to_single_variable(&self) -> Result<Self> {
        let base = self.degree() as u64 + 1;
        let mut weights = Vec::with_capacity(self.arity);
        let mut w: u64 = 1;
        for _ in 0..self.arity {
            w = w.checked_mul(base).ok_or_else(|| Error::bound("substituted exponent", u64::MAX, u32::MAX))?;
            weights.push(w);
        }
        let comps = self
            .components
            .iter()
            .map(|comp| {
                comp.iter()
                    .map(|(m, c)| {
                        let e: u64 = m.0.iter().zip(&weights).map(|(&ei, &wi)| ei as u64 * wi).sum();
                        let e = u32::try_from(e).map_err(|_| Error::bound("substituted exponent", e, u32::MAX))?;
                        Ok((Monomial(vec![e]), c.clone()))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(1, comps)
    }

    /// Rank of the monomial-by-component coefficient matrix, with a rational kernel
    /// witness cleared to integers when the components are dependent.
    pub fn component_rank(&self) -> ComponentRank {
        let monomials: BTreeSet<&Monomial> = self.components.iter().flat_map(|c| c.keys()).collect();
        let matrix = self.coefficient_rows(monomials.into_iter());
        let (rank, witness) = rational_rank_and_kernel(&matrix);
        ComponentRank { rank, witness }
    }

    /// Finds `alpha != 0` and `beta` with `sum alpha_i P_i = sum beta_j x_j`, if any.
    pub fn linear_degenerate_combination(&self) -> Result<Option<LinearCombination>> {
        if !self.has_zero_constant_term() {
            return Err(Error::Precondition("polynomial must have zero constant term".into()));
        }
        let high: BTreeSet<&Monomial> = self.components.iter().flat_map(|c| c.keys()).filter(|m| m.degree() >= 2).collect();
        let matrix = self.coefficient_rows(high.into_iter());
        let Some(alpha) = rational_rank_and_kernel(&matrix).1 else {
            return Ok(None);
        };
        let beta = (0..self.arity)
            .map(|j| {
                let mut e = vec![0; self.arity];
                e[j] = 1;
                let m = Monomial(e);
                alpha.iter().zip(&self.components).map(|(a, comp)| comp.get(&m).map_or_else(BigInt::zero, |c| a * c)).sum()
            })
            .collect();
        Ok(Some(LinearCombination { alpha, beta }))
    }

    /// `P(k x) / k`. Requires zero constant term, which makes the division exact.
    pub fn rescale(&self, k: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::Precondition("rescaling factor must be positive".into()));
        }
        if !self.has_zero_constant_term() {
            return Err(Error::Precondition("rescaling needs a zero constant term".into()));
        }
        let kb = BigInt::from(k);
        let components = self
            .components
            .iter()
            .map(|comp| comp.iter().map(|(m, c)| (m.clone(), c * Pow::pow(&kb, m.degree() - 1))).collect())
            .collect();
        Ok(IntPolynomialMap { arity: self.arity, components })
    }

    fn coefficient_rows<'a>(&self, monomials: impl Iterator<Item = &'a Monomial>) -> IntMatrix {
        let rows: Vec<Vec<BigInt>> =
            monomials.map(|m| self.components.iter().map(|c| c.get(m).cloned().unwrap_or_default()).collect()).collect();
        if rows.is_empty() {
            return IntMatrix::zeros(0, self.dimension());
        }
        IntMatrix::from_big_rows(rows).expect("rows share the component count")
    }
}

fn component_degree(c: &Component) -> u32 {
    c.keys().map(Monomial::degree).max().unwrap_or(0)
}

impl fmt::Display for IntPolynomialMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, comp) in self.components.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            if comp.is_empty() {
                f.write_str("0")?;
                continue;
            }
            for (t, (m, c)) in comp.iter().rev().enumerate() {
                let abs = c.abs();
                match (t, c.is_negative()) {
                    (0, true) => f.write_str("-")?,
                    (0, false) => {}
                    (_, true) => f.write_str(" - ")?,
                    (_, false) => f.write_str(" + ")?,
                }
                let vars: Vec<String> = m
                    .0
                    .iter()
                    .enumerate()
                    .filter(|(_, &e)| e > 0)
                    .map(|(j, &e)| {
                        let name = if self.arity == 1 { "n".to_string() } else { format!("x{j}") };
                        if e == 1 { name } else { format!("{name}^{e}") }
                    })
                    .collect();
                if vars.is_empty() {
                    write!(f, "{abs}")?;
                } else if abs.is_one() {
                    write!(f, "{}", vars.join("*"))?;
                } else {
                    write!(f, "{abs}*{}", vars.join("*"))?;
                }
            }
        }
        Ok(())
    }
}

/// A polynomial map with coefficients reduced modulo `q`.
#[derive(Clone, Debug)]
pub struct ModularPolynomial {
    modulus: u64,
    arity: usize,
    degree: u32,
    components: Vec<Vec<(Vec<u32>, u64)>>,
}

impl ModularPolynomial {
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn dimension(&self) -> usize {
        self.components.len()
    }

    /// `P(x) mod q`, inputs already reduced or not.
    pub fn evaluate(&self, x: &[u64]) -> Vec<u64> {
        assert_eq!(x.len(), self.arity);
        let q = self.modulus as u128;
        // powers[j][e] = x_j^e mod q
        let powers: Vec<Vec<u128>> = x
            .iter()
            .map(|&xj| {
                let xj = xj as u128 % q;
                let mut p = Vec::with_capacity(self.degree as usize + 1);
                let mut acc = 1 % q;
                for _ in 0..=self.degree {
                    p.push(acc);
                    acc = acc * xj % q;
                }
                p
            })
            .collect();
        self.components
            .iter()
            .map(|terms| {
                let mut s: u128 = 0;
                for (exps, c) in terms {
                    let mut t = *c as u128;
                    for (j, &e) in exps.iter().enumerate() {
                        t = t * powers[j][e as usize] % q;
                    }
                    s = (s + t) % q;
                }
                s as u64
            })
            .collect()
    }

    /// First component of a univariate map at `n`.
    pub fn evaluate_scalar(&self, n: u64) -> u64 {
        debug_assert_eq!(self.arity, 1);
        let q = self.modulus as u128;
        let n = n as u128 % q;
        let mut s: u128 = 0;
        for (exps, c) in &self.components[0] {
            let mut t = *c as u128;
            let mut b = n;
            let mut e = exps[0];
            while e > 0 {
                if e & 1 == 1 {
                    t = t * b % q;
                }
                b = b * b % q;
                e >>= 1;
            }
            s = (s + t) % q;
        }
        s as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(text: &str) -> IntPolynomialMap {
        IntPolynomialMap::parse(text).unwrap()
    }

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(p("n^2").evaluate_i64(&[3]).unwrap(), big(&[9]));
        assert_eq!(p("x0 + x1^2; x0^2").evaluate_i64(&[1, 2]).unwrap(), big(&[5, 1]));
        assert_eq!(p("0; 0").evaluate_i64(&[7]).unwrap(), big(&[0, 0]));
        assert_eq!(p("n^2").evaluate_i64(&[1, 2]), Err(Error::ArityMismatch { expected: 1, got: 2 }));
        let q = p("3*n^2 - 5; n + 7");
        assert_eq!(q.evaluate_i64(&[0]).unwrap(), q.constant_term());
    }

    #[test]
    fn evaluation_is_exact_for_large_inputs() {
        let v = p("n^5").evaluate_i64(&[1_000_000_007]).unwrap();
        assert_eq!(v[0], Pow::pow(BigInt::from(1_000_000_007i64), 5u32));
    }

    #[test]
    fn curry_examples() {
        let q = p("x0*x1").curry_to_single_variable().unwrap();
        assert_eq!(q, p("n^12"));
        let q = p("x0^2; x1").curry_to_single_variable().unwrap();
        assert_eq!(q, p("n^6; n^9"));
        let q = p("2*n^2 - n").curry_to_single_variable().unwrap();
        assert_eq!(q, p("2*n^6 - n^3"));
        let c = p("5").curry_to_single_variable().unwrap();
        assert_eq!(c, p("5"));
    }

    #[test]
    fn rank_examples() {
        assert_eq!(p("n; n^2").component_rank(), ComponentRank { rank: 2, witness: None });
        assert_eq!(p("n; 2*n").component_rank(), ComponentRank { rank: 1, witness: Some(big(&[2, -1])) });
        assert_eq!(p("x0 + x1; x0 - x1; x0").component_rank(), ComponentRank { rank: 2, witness: Some(big(&[1, 1, -2])) });
    }

    #[test]
    fn degenerate_examples() {
        assert_eq!(p("x0^2; x1^2").linear_degenerate_combination().unwrap(), None);
        assert_eq!(
            p("x0; x1^2").linear_degenerate_combination().unwrap(),
            Some(LinearCombination { alpha: big(&[1, 0]), beta: big(&[1, 0]) })
        );
        let two_var = IntPolynomialMap::parse_with_arity("x0 + x0^2; x0 - x0^2", 2).unwrap();
        assert_eq!(
            two_var.linear_degenerate_combination().unwrap(),
            Some(LinearCombination { alpha: big(&[1, 1]), beta: big(&[2, 0]) })
        );
        assert!(p("n^2 + 1").linear_degenerate_combination().is_err());
    }

    #[test]
    fn rescale_divides_exactly() {
        assert_eq!(p("n^2").rescale(2).unwrap(), p("2*n^2"));
        assert_eq!(p("3*n^3 + n").rescale(3).unwrap(), p("27*n^3 + n"));
        let r = p("x0*x1; x1").rescale(5).unwrap();
        assert_eq!(r.evaluate_i64(&[2, 3]).unwrap(), big(&[5 * 2 * 5 * 3 / 5, 3]));
    }

    #[test]
    fn display_roundtrip() {
        for text in ["n^2", "3*x0^2*x1 - x1", "-n^3 + 2*n - 7; 0", "x0; x1^2"] {
            let poly = p(text);
            assert_eq!(p(&poly.to_string()), poly, "{text}");
        }
        assert_eq!(p("x0*x1 + x0^2 - 4").to_string(), "x0^2 + x0*x1 - 4");
    }

    #[test]
    fn modular_evaluation_matches_exact() {
        let poly = p("3*x0^2*x1 - x1 + 7; x1^3 - 11*x0");
        for q in [1u64, 2, 7, 35, 1_000_003] {
            let red = poly.reduce_mod(q);
            for x0 in -5i64..5 {
                for x1 in -5i64..5 {
                    let exact = poly.evaluate_i64(&[x0, x1]).unwrap();
                    let expect: Vec<u64> = exact.iter().map(|v| v.mod_floor(&BigInt::from(q)).to_u64().unwrap()).collect();
                    let xs = [crate::modular::reduce_i64(x0, q), crate::modular::reduce_i64(x1, q)];
                    assert_eq!(red.evaluate(&xs), expect);
                }
            }
        }
        let sq = p("n^2 + 3*n").reduce_mod(13);
        for n in 0..40 {
            assert_eq!(sq.evaluate_scalar(n), (n * n + 3 * n) % 13);
        }
    }

    /// Brute-force oracle: does some nonzero alpha in [-3, 3]^d give a combination of degree < 2?
    fn has_small_degenerate_combination(poly: &IntPolynomialMap) -> bool {
        let d = poly.dimension();
        let radix = vec![7u64; d];
        let mut idx = vec![0u64; d];
        loop {
            let alpha: Vec<BigInt> = idx.iter().map(|&i| BigInt::from(i as i64 - 3)).collect();
            if alpha.iter().any(|a| !a.is_zero()) {
                let mut combo = Component::new();
                for (a, comp) in alpha.iter().zip(&poly.components) {
                    for (m, c) in comp {
                        *combo.entry(m.clone()).or_insert_with(BigInt::zero) += a * c;
                    }
                }
                if combo.iter().all(|(m, c)| c.is_zero() || m.degree() < 2) {
                    return true;
                }
            }
            if !crate::modular::advance(&mut idx, &radix) {
                return false;
            }
        }
    }

    fn small_poly(arity: usize, dim: usize) -> impl Strategy<Value = IntPolynomialMap> {
        let term = (proptest::collection::vec(0u32..=2, arity), -2i64..=2);
        proptest::collection::vec(proptest::collection::vec(term, 0..4), dim).prop_map(move |comps| {
            let comps = comps
                .into_iter()
                .map(|terms| {
                    // one coefficient per monomial keeps entries inside [-2, 2]
                    let unique: BTreeMap<Vec<u32>, i64> =
                        terms.into_iter().filter(|(e, _)| e.iter().any(|&x| x > 0)).collect();
                    unique.into_iter().map(|(e, c)| (Monomial(e), BigInt::from(c))).collect()
                })
                .collect();
            IntPolynomialMap::new(arity, comps).unwrap()
        })
    }

    proptest! {
        #[test]
        fn curry_matches_substitution(poly in small_poly(2, 2), n in -4i64..=4) {
            let q = poly.curry_to_single_variable().unwrap();
            let base = BigInt::from(poly.degree() + 1);
            let n_big = BigInt::from(n);
            let x: Vec<BigInt> = (1..=2u32).map(|j| Pow::pow(&n_big, Pow::pow(&base, j).to_u32().unwrap())).collect();
            prop_assert_eq!(q.evaluate(&[n_big]).unwrap(), poly.evaluate(&x).unwrap());
            for i in 0..poly.dimension() {
                let mut a: Vec<_> = poly.component(i).values().cloned().collect();
                let mut b: Vec<_> = q.component(i).values().cloned().collect();
                a.sort();
                b.sort();
                prop_assert_eq!(a, b);
            }
            if poly.component_rank().rank == poly.dimension() {
                prop_assert_eq!(q.component_rank().rank, q.dimension());
            }
        }

        #[test]
        fn degenerate_search_agrees_with_brute_force(poly in small_poly(2, 2)) {
            // coefficients in [-2, 2] with two components: any rational kernel has a
            // representative inside [-3, 3]^2 after clearing, or none exists
            let found = poly.linear_degenerate_combination().unwrap();
            prop_assert_eq!(found.is_some(), has_small_degenerate_combination(&poly));
            if let Some(LinearCombination { alpha, beta }) = found {
                for x in [[1i64, 2], [-3, 5], [4, -1]] {
                    let v = poly.evaluate_i64(&x).unwrap();
                    let lhs: BigInt = alpha.iter().zip(&v).map(|(a, b)| a * b).sum();
                    let rhs: BigInt = beta.iter().zip(&x).map(|(b, &xi)| b * xi).sum();
                    prop_assert_eq!(lhs, rhs);
                }
            }
        }
    }
}
