//! Exact integer linear algebra: Smith normal form with tracked unimodular
//! transforms, unimodular completion of primitive vectors, moment-curve
//! haystacks with their annihilators, and the multiplicative-complexity bound
//! of a univariate polynomial map.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::intpoly::IntPolynomialMap;
use crate::modular::{advance, lcm_all, TorusRational};

/// Dense integer matrix, row-major, arbitrary precision entries.
#[derive(Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    pub fn from_rows<T: Into<BigInt> + Copy>(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Parse("matrix rows have different lengths".into()));
        }
        let data = rows.iter().flat_map(|r| r.iter().map(|&x| x.into())).collect();
        Ok(IntMatrix { rows: rows.len(), cols, data })
    }

    pub fn from_big_rows(rows: Vec<Vec<BigInt>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Parse("matrix rows have different lengths".into()));
        }
        let n = rows.len();
        Ok(IntMatrix { rows: n, cols, data: rows.into_iter().flatten().collect() })
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * &other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(self.cols, v.len());
        (0..self.rows).map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    /// Determinant by fraction-free (Bareiss) elimination.
    pub fn determinant(&self) -> BigInt {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        if n == 0 {
            return BigInt::one();
        }
        let mut a = self.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a[(k, k)].is_zero() {
                let Some(swap) = (k + 1..n).find(|&i| !a[(i, k)].is_zero()) else {
                    return BigInt::zero();
                };
                for j in 0..n {
                    let tmp = a[(k, j)].clone();
                    a[(k, j)] = a[(swap, j)].clone();
                    a[(swap, j)] = tmp;
                }
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = (&a[(i, j)] * &a[(k, k)] - &a[(i, k)] * &a[(k, j)]) / &prev;
                    a[(i, j)] = v;
                }
            }
            prev = a[(k, k)].clone();
        }
        sign * &a[(n - 1, n - 1)]
    }

    pub fn rank(&self) -> usize {
        rational_rank_and_kernel(self).0
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for i in 0..self.rows {
                self.data.swap(i * self.cols + a, i * self.cols + b);
            }
        }
    }

    /// row[dst] += c * row[src]
    fn add_row(&mut self, dst: usize, src: usize, c: &BigInt) {
        for j in 0..self.cols {
            let v = &self[(src, j)] * c;
            self[(dst, j)] += v;
        }
    }

    /// col[dst] += c * col[src]
    fn add_col(&mut self, dst: usize, src: usize, c: &BigInt) {
        for i in 0..self.rows {
            let v = &self[(i, src)] * c;
            self[(i, dst)] += v;
        }
    }

    fn negate_row(&mut self, i: usize) {
        for j in 0..self.cols {
            let v = -&self[(i, j)];
            self[(i, j)] = v;
        }
    }

    fn negate_col(&mut self, j: usize) {
        for i in 0..self.rows {
            let v = -&self[(i, j)];
            self[(i, j)] = v;
        }
    }
}

impl Index<(usize, usize)> for IntMatrix {
    type Output = BigInt;
    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.to_rows().iter().map(|r| r.iter().map(ToString::to_string).collect::<Vec<_>>())).finish()
    }
}

/// JSON: row-major nested arrays. Entries that fit in an `i64` are numbers,
/// larger ones are decimal strings.
impl Serialize for IntMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<serde_json::Value>> = self
            .to_rows()
            .into_iter()
            .map(|r| r.into_iter().map(|x| big_to_json(&x)).collect())
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<serde_json::Value>> = Vec::deserialize(d)?;
        let rows = rows
            .into_iter()
            .map(|r| r.into_iter().map(|v| json_to_big(&v).ok_or_else(|| D::Error::custom(format!("`{v}` is not an integer")))).collect())
            .collect::<std::result::Result<Vec<Vec<BigInt>>, _>>()?;
        IntMatrix::from_big_rows(rows).map_err(D::Error::custom)
    }
}

pub(crate) fn big_to_json(x: &BigInt) -> serde_json::Value {
    match x.to_i64() {
        Some(v) => serde_json::Value::from(v),
        None => serde_json::Value::from(x.to_string()),
    }
}

fn json_to_big(v: &serde_json::Value) -> Option<BigInt> {
    match v {
        serde_json::Value::Number(n) => n.as_i64().map(BigInt::from),
        serde_json::Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

/// Rank over `Q`, and one nonzero kernel vector of `m` (as a map `Q^cols -> Q^rows`)
/// when the columns are dependent. The witness is integral, primitive and has
/// a positive first nonzero entry.
pub fn rational_rank_and_kernel(m: &IntMatrix) -> (usize, Option<Vec<BigInt>>) {
    let (rows, cols) = (m.nrows(), m.ncols());
    let mut a: Vec<Vec<BigRational>> =
        (0..rows).map(|i| m.row(i).iter().map(|x| BigRational::from_integer(x.clone())).collect()).collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(r, p);
        let inv = a[r][c].recip();
        for x in a[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in 0..cols {
                    let v = &a[r][j] * &f;
                    a[i][j] -= v;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    let rank = pivots.len();
    let Some(free) = (0..cols).find(|c| !pivots.contains(c)) else {
        return (rank, None);
    };
    let mut v = vec![BigRational::zero(); cols];
    v[free] = BigRational::one();
    for (row, &pc) in pivots.iter().enumerate() {
        v[pc] = -a[row][free].clone();
    }
    (rank, Some(normalize_rational_vector(&v)))
}

/// Clears denominators, divides out the content and makes the first nonzero entry positive.
pub(crate) fn normalize_rational_vector(v: &[BigRational]) -> Vec<BigInt> {
    let l = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| x.numer() * (&l / x.denom())).collect();
    normalize_int_vector(ints)
}

pub(crate) fn normalize_int_vector(mut ints: Vec<BigInt>) -> Vec<BigInt> {
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if !g.is_zero() {
        for x in ints.iter_mut() {
            *x = &*x / &g;
        }
    }
    if ints.iter().find(|x| !x.is_zero()).is_some_and(|x| x.is_negative()) {
        for x in ints.iter_mut() {
            *x = -&*x;
        }
    }
    ints
}

/// `B = L · D · R` with `L`, `R` unimodular and `D` diagonal with a divisibility chain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmithDecomposition {
    pub left: IntMatrix,
    pub diagonal: IntMatrix,
    pub right: IntMatrix,
}

impl SmithDecomposition {
    /// Nonzero diagonal entries `D_1 | D_2 | ... | D_m`.
    pub fn invariant_factors(&self) -> Vec<BigInt> {
        let n = self.diagonal.nrows().min(self.diagonal.ncols());
        (0..n).map(|i| self.diagonal[(i, i)].clone()).filter(|x| !x.is_zero()).collect()
    }

    pub fn rank(&self) -> usize {
        self.invariant_factors().len()
    }

    pub fn reconstruct(&self) -> IntMatrix {
        self.left.mul(&self.diagonal).mul(&self.right)
    }
}

/// Smith normal form by repeated gcd reduction. `L` and `R` are tracked so
/// that `L · S · R = B` holds after every elementary step.
pub fn smith_normal_form(b: &IntMatrix) -> Result<SmithDecomposition> {
    let (m, n) = (b.nrows(), b.ncols());
    if m == 0 || n == 0 {
        return Err(Error::Precondition("matrix must have nonzero dimensions".into()));
    }
    let mut s = b.clone();
    let mut left = IntMatrix::identity(m);
    let mut right = IntMatrix::identity(n);

    for t in 0..m.min(n) {
        loop {
            // smallest nonzero entry of the trailing block becomes the pivot
            let mut best: Option<(usize, usize)> = None;
            for i in t..m {
                for j in t..n {
                    if !s[(i, j)].is_zero() && best.is_none_or(|(bi, bj)| s[(i, j)].abs() < s[(bi, bj)].abs()) {
                        best = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = best else {
                return finish(s, left, right);
            };
            s.swap_rows(t, pi);
            left.swap_cols(t, pi);
            s.swap_cols(t, pj);
            right.swap_rows(t, pj);

            let mut clean = true;
            for i in t + 1..m {
                if !s[(i, t)].is_zero() {
                    let q = s[(i, t)].div_floor(&s[(t, t)]);
                    s.add_row(i, t, &-&q);
                    left.add_col(t, i, &q);
                    clean &= s[(i, t)].is_zero();
                }
            }
            for j in t + 1..n {
                if !s[(t, j)].is_zero() {
                    let q = s[(t, j)].div_floor(&s[(t, t)]);
                    s.add_col(j, t, &-&q);
                    right.add_row(t, j, &q);
                    clean &= s[(t, j)].is_zero();
                }
            }
            if !clean {
                continue;
            }
            let pivot = s[(t, t)].clone();
            let offender = (t + 1..m).find(|&i| (t + 1..n).any(|j| !s[(i, j)].is_multiple_of(&pivot)));
            if let Some(i) = offender {
                // row t += row i brings a non-multiple into the pivot row
                s.add_row(t, i, &BigInt::one());
                left.add_col(i, t, &-BigInt::one());
                continue;
            }
            break;
        }
        if s[(t, t)].is_negative() {
            s.negate_row(t);
            left.negate_col(t);
        }
    }
    finish(s, left, right)
}

fn finish(s: IntMatrix, left: IntMatrix, right: IntMatrix) -> Result<SmithDecomposition> {
    let dec = SmithDecomposition { left, diagonal: s, right };
    let factors = dec.invariant_factors();
    if factors.iter().any(Signed::is_negative) || factors.windows(2).any(|w| !w[1].is_multiple_of(&w[0])) {
        return Err(Error::Invariant("Smith form lost its divisibility chain".into()));
    }
    Ok(dec)
}

/// A `d x d` integer matrix with first row `v` and determinant exactly 1.
pub fn complete_primitive_to_unimodular(v: &[i64]) -> Result<IntMatrix> {
    let d = v.len();
    if d == 0 {
        return Err(Error::Precondition("empty vector".into()));
    }
    if crate::modular::gcd_i64_slice(v) != 1 {
        return Err(Error::NotPrimitive(v.to_vec()));
    }
    if d == 1 {
        return if v[0] == 1 {
            Ok(IntMatrix::identity(1))
        } else {
            Err(Error::Precondition("(-1) has no 1x1 completion with determinant 1".into()))
        };
    }
    // v = L D R with L = (±1) and D = (1, 0, ..., 0), so v = ±(first row of R).
    let row = IntMatrix::from_rows(&[v.to_vec()])?;
    let snf = smith_normal_form(&row)?;
    let mut m = snf.right.clone();
    if snf.left[(0, 0)].is_negative() {
        m.negate_row(0);
    }
    if m.determinant().is_negative() {
        m.negate_row(1);
    }
    let first_ok = m.row(0).iter().zip(v).all(|(a, &b)| *a == BigInt::from(b));
    if !first_ok || !m.determinant().is_one() {
        return Err(Error::Invariant(format!("unimodular completion of {v:?} failed")));
    }
    Ok(m)
}

/// The moment-curve haystack `{(1, t, ..., t^(d-1)) : t >= 1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Haystack {
    dim: usize,
}

impl Haystack {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Precondition("haystacks need dimension at least 2".into()));
        }
        Ok(Haystack { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vector(&self, t: u64) -> Vec<i64> {
        (0..self.dim as u32).map(|e| (t as i64).pow(e)).collect()
    }

    /// Whether `v_t` has sup-norm at most `(M/d!)^(1/d)`, i.e. `d! * t^(d(d-1)) <= M`.
    pub fn in_window(&self, t: u64, m: u64) -> bool {
        match t.checked_pow(self.dim as u32 - 1) {
            Some(norm) => sup_norm_within(norm, self.dim, m),
            None => false,
        }
    }

    pub fn window(&self, m: u64) -> Vec<Vec<i64>> {
        (1u64..).take_while(|&t| self.in_window(t, m)).map(|t| self.vector(t)).collect()
    }
}

/// `d! * norm^d <= M`, the integer form of `norm <= (M/d!)^(1/d)`.
fn sup_norm_within(norm: u64, d: usize, m: u64) -> bool {
    let fact: u128 = (1..=d as u128).product();
    let Some(p) = (norm as u128).checked_pow(d as u32) else { return false };
    fact.checked_mul(p).is_some_and(|x| x <= m as u128)
}

/// `H_M`: haystack vectors with sup-norm at most `(M/d!)^(1/d)`.
pub fn haystack_window(d: usize, m: u64) -> Result<Vec<Vec<i64>>> {
    if m == 0 {
        return Err(Error::Precondition("M must be positive".into()));
    }
    Ok(Haystack::new(d)?.window(m))
}

/// Joint annihilator of `vectors` on the grid `prod (1/g_i)Z / Z`. When a full
/// set of `d` vectors from `H_M` is supplied, every nonzero annihilator point
/// is confirmed to lie in `Rat(M)`.
pub fn annihilator_in_rat(vectors: &[Vec<i64>], grid: &[u64], m: u64) -> Result<Vec<TorusRational>> {
    let d = grid.len();
    if vectors.is_empty() || vectors.iter().any(|v| v.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: vectors.first().map_or(0, Vec::len) });
    }
    if grid.contains(&0) {
        return Err(Error::Precondition("grid moduli must be positive".into()));
    }
    Haystack::new(d)?;
    for v in vectors {
        let norm = v.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0);
        if !sup_norm_within(norm, d, m) {
            return Err(Error::Precondition(format!("{v:?} lies outside H_{m}")));
        }
    }
    let mat = IntMatrix::from_rows(vectors)?;
    if mat.rank() != vectors.len() {
        return Err(Error::LinearlyDependent);
    }
    let l = lcm_all(grid);
    let mut points = Vec::new();
    let mut idx = vec![0u64; d];
    loop {
        let numerators: Vec<u64> = idx.iter().zip(grid).map(|(&j, &g)| j * (l / g)).collect();
        let hit = vectors.iter().all(|v| {
            let s: i128 = v.iter().zip(&numerators).map(|(&vi, &a)| vi as i128 * a as i128).sum();
            s.rem_euclid(l as i128) == 0
        });
        if hit {
            points.push(TorusRational::over_common(&numerators, l));
        }
        if !advance(&mut idx, grid) {
            break;
        }
    }
    if vectors.len() == d {
        let det = mat.determinant().abs().to_u64().unwrap_or(u64::MAX);
        for p in points.iter().filter(|p| !p.is_zero()) {
            if p.denom() > m || det % p.denom() != 0 {
                return Err(Error::Invariant(format!("annihilator point {p} has denominator above {m}")));
            }
        }
    }
    points.sort();
    Ok(points)
}

/// Certified multiplicative-complexity bound of a univariate polynomial map.
#[derive(Clone, Debug, Serialize)]
pub struct ComplexityBound {
    /// Coefficient matrix `B` (row `j` holds the `n^(j+1)` coefficients of every component).
    pub coefficient_matrix: IntMatrix,
    pub decomposition: SmithDecomposition,
    pub invariant_factors: Vec<String>,
    /// The returned bound `Q`: the largest invariant factor.
    #[serde(serialize_with = "ser_big")]
    pub bound: BigInt,
    /// Number of random coprime `(a, q)` pairs checked against `bound`.
    pub samples_checked: usize,
    pub seed: u64,
}

fn ser_big<S: Serializer>(x: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
    big_to_json(x).serialize(s)
}

/// `D x d` matrix whose column `i` lists the coefficients of `n, n^2, ..., n^D` in `P_i`.
pub fn coefficient_matrix(p: &IntPolynomialMap) -> Result<IntMatrix> {
    if p.arity() != 1 {
        return Err(Error::ArityMismatch { expected: 1, got: p.arity() });
    }
    let deg = p.degree() as usize;
    let d = p.dimension();
    let mut b = IntMatrix::zeros(deg.max(1), d);
    for i in 0..d {
        for (mono, c) in p.component(i) {
            let e = mono.exponents()[0] as usize;
            if e >= 1 {
                b[(e - 1, i)] = c.clone();
            }
        }
    }
    Ok(b)
}

/// `gcd(b_1, ..., b_D, q)` where `b = B a`.
pub fn complexity_gcd(b: &IntMatrix, a: &[BigInt], q: &BigInt) -> BigInt {
    b.mul_vec(a).iter().fold(q.clone(), |acc, x| acc.gcd(x))
}

pub fn multiplicative_complexity_bound(p: &IntPolynomialMap, samples: usize, seed: u64) -> Result<ComplexityBound> {
    let b = coefficient_matrix(p)?;
    let d = p.dimension();
    if d as u32 > p.degree() {
        return Err(Error::Precondition(format!("dimension {d} exceeds degree {}", p.degree())));
    }
    let dec = smith_normal_form(&b)?;
    let factors = dec.invariant_factors();
    if factors.len() < d {
        return Err(Error::RankDeficient { rank: factors.len(), required: d });
    }
    let bound = factors.last().cloned().expect("rank >= 1");

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checked = 0;
    while checked < samples {
        let q = BigInt::from(rng.gen_range(2u64..=256));
        let a: Vec<BigInt> = (0..d).map(|_| BigInt::from(rng.gen_range(-64i64..=64))).collect();
        if !a.iter().fold(q.clone(), |acc, x| acc.gcd(x)).is_one() {
            continue;
        }
        let g = complexity_gcd(&b, &a, &q);
        if g > bound {
            return Err(Error::Invariant(format!("gcd {g} exceeds complexity bound {bound} at a = {a:?}, q = {q}")));
        }
        checked += 1;
    }
    Ok(ComplexityBound {
        coefficient_matrix: b,
        decomposition: dec,
        invariant_factors: factors.iter().map(ToString::to_string).collect(),
        bound,
        samples_checked: checked,
        seed,
    })
}

/// A coprime pair `(a, q)` with `gcd(Ba, q)` above the smallest invariant factor, if the
/// search box `|a_i| <= radius`, `2 <= q <= q_max` contains one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SmallestFactorCounterexample {
    pub a: Vec<i64>,
    pub q: u64,
    pub gcd: String,
    pub smallest_factor: String,
}

pub fn smallest_factor_counterexample(p: &IntPolynomialMap, radius: i64, q_max: u64) -> Result<Option<SmallestFactorCounterexample>> {
    let b = coefficient_matrix(p)?;
    let dec = smith_normal_form(&b)?;
    let Some(smallest) = dec.invariant_factors().first().cloned() else {
        return Ok(None);
    };
    let d = p.dimension();
    let width = (2 * radius + 1) as u64;
    let radix = vec![width; d];
    for q in 2..=q_max {
        let qb = BigInt::from(q);
        let mut idx = vec![0u64; d];
        loop {
            let a: Vec<i64> = idx.iter().map(|&i| i as i64 - radius).collect();
            let ab: Vec<BigInt> = a.iter().map(|&x| BigInt::from(x)).collect();
            if ab.iter().fold(qb.clone(), |acc, x| acc.gcd(x)).is_one() {
                let g = complexity_gcd(&b, &ab, &qb);
                if g > smallest {
                    return Ok(Some(SmallestFactorCounterexample { a, q, gcd: g.to_string(), smallest_factor: smallest.to_string() }));
                }
            }
            if !advance(&mut idx, &radix) {
                break;
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mat(rows: &[Vec<i64>]) -> IntMatrix {
        IntMatrix::from_rows(rows).unwrap()
    }

    fn factors(rows: &[Vec<i64>]) -> Vec<i64> {
        smith_normal_form(&mat(rows)).unwrap().invariant_factors().iter().map(|x| x.to_i64().unwrap()).collect()
    }

    fn check_decomposition(b: &IntMatrix, dec: &SmithDecomposition) {
        assert_eq!(&dec.reconstruct(), b);
        assert!(dec.left.determinant().abs().is_one());
        assert!(dec.right.determinant().abs().is_one());
        let d = &dec.diagonal;
        for i in 0..d.nrows() {
            for j in 0..d.ncols() {
                if i != j {
                    assert!(d[(i, j)].is_zero());
                }
            }
        }
        // zeros only trail the nonzero factors
        let diag: Vec<_> = (0..d.nrows().min(d.ncols())).map(|i| d[(i, i)].clone()).collect();
        let nz = diag.iter().take_while(|x| !x.is_zero()).count();
        assert!(diag[nz..].iter().all(Zero::is_zero));
    }

    #[test]
    fn snf_examples() {
        let id = IntMatrix::identity(3);
        let dec = smith_normal_form(&id).unwrap();
        assert_eq!(dec.left, id);
        assert_eq!(dec.diagonal, id);
        assert_eq!(dec.right, id);
        // diag(2,3): gcd 1, det 6
        assert_eq!(factors(&[vec![2, 0], vec![0, 3]]), vec![1, 6]);
        // gcd of entries 2, |det| = 8
        assert_eq!(factors(&[vec![2, 4], vec![6, 8]]), vec![2, 4]);
        assert_eq!(factors(&[vec![0, 0], vec![0, 0]]), Vec::<i64>::new());
        assert_eq!(factors(&[vec![6, 10, 15]]), vec![1]);
    }

    #[test]
    fn determinant_examples() {
        assert_eq!(mat(&[vec![2, 3], vec![1, 2]]).determinant(), BigInt::from(1));
        assert_eq!(mat(&[vec![0, 1], vec![1, 0]]).determinant(), BigInt::from(-1));
        assert_eq!(mat(&[vec![1, 2, 3], vec![4, 5, 6], vec![7, 8, 10]]).determinant(), BigInt::from(-3));
        // Vandermonde on t = 1, 2, 4
        let v = mat(&[vec![1, 1, 1], vec![1, 2, 4], vec![1, 4, 16]]);
        assert_eq!(v.determinant(), BigInt::from((4 - 1) * (4 - 2)));
    }

    #[test]
    fn unimodular_completion_examples() {
        assert_eq!(complete_primitive_to_unimodular(&[1, 0, 0]).unwrap().row(0), &[BigInt::from(1), BigInt::from(0), BigInt::from(0)]);
        for v in [vec![2i64, 3], vec![6, 10, 15], vec![-3, 5], vec![0, -1], vec![1]] {
            let m = complete_primitive_to_unimodular(&v).unwrap();
            assert!(m.determinant().is_one(), "{v:?}");
            assert_eq!(m.row(0), v.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>().as_slice());
        }
        assert_eq!(complete_primitive_to_unimodular(&[2, 4]), Err(Error::NotPrimitive(vec![2, 4])));
    }

    #[test]
    fn haystack_window_examples() {
        assert_eq!(haystack_window(2, 4).unwrap(), vec![vec![1, 1]]);
        assert_eq!(haystack_window(2, 18).unwrap(), vec![vec![1, 1], vec![1, 2], vec![1, 3]]);
        assert!(haystack_window(3, 5).unwrap().is_empty());
        assert_eq!(haystack_window(3, 6).unwrap(), vec![vec![1, 1, 1]]);
        assert!(haystack_window(1, 10).is_err());
    }

    #[test]
    fn haystack_vectors_independent() {
        for d in 2..=4usize {
            let h = Haystack::new(d).unwrap();
            let vs: Vec<_> = (1..=8).map(|t| h.vector(t)).collect();
            let mut idx: Vec<usize> = (0..d).collect();
            loop {
                let rows: Vec<_> = idx.iter().map(|&i| vs[i].clone()).collect();
                assert!(!mat(&rows).determinant().is_zero());
                // next combination
                let mut i = d;
                while i > 0 && idx[i - 1] == 8 - d + i - 1 {
                    i -= 1;
                }
                if i == 0 {
                    break;
                }
                idx[i - 1] += 1;
                for j in i..d {
                    idx[j] = idx[j - 1] + 1;
                }
            }
        }
    }

    #[test]
    fn annihilator_examples() {
        let joint = annihilator_in_rat(&[vec![1, 1], vec![1, 2]], &[6, 6], 8).unwrap();
        assert_eq!(joint, vec![TorusRational::zero(2)]);
        let single = annihilator_in_rat(&[vec![1, 1]], &[4, 4], 2).unwrap();
        let expected: Vec<_> = (0..4u64).map(|j| TorusRational::from_grid(&[j, (4 - j) % 4], &[4, 4])).collect();
        let mut expected = expected;
        expected.sort();
        assert_eq!(single, expected);
        assert_eq!(annihilator_in_rat(&[vec![1, 1]], &[1, 1], 2).unwrap(), vec![TorusRational::zero(2)]);
        assert_eq!(annihilator_in_rat(&[vec![1, 1], vec![1, 1]], &[4, 4], 2), Err(Error::LinearlyDependent));
        assert!(matches!(annihilator_in_rat(&[vec![1, 1], vec![1, 2]], &[6, 6], 7), Err(Error::Precondition(_))));
        // (1,1),(1,3) sit in H_18; det 2
        let pts = annihilator_in_rat(&[vec![1, 1], vec![1, 3]], &[10, 10], 18).unwrap();
        assert!(pts.iter().all(|p| p.denom() <= 2));
        assert_eq!(pts.len(), 2);
    }

    #[test]
    fn kernel_witness_normalized() {
        let (rank, w) = rational_rank_and_kernel(&mat(&[vec![1, 2], vec![0, 0]]));
        assert_eq!(rank, 1);
        assert_eq!(w.unwrap(), vec![BigInt::from(2), BigInt::from(-1)]);
    }

    fn poly(text: &str) -> IntPolynomialMap {
        IntPolynomialMap::parse(text).unwrap()
    }

    #[test]
    fn complexity_examples() {
        let b = multiplicative_complexity_bound(&poly("n; n^2"), 100, 7).unwrap();
        assert_eq!(b.bound, BigInt::from(1));
        let b = multiplicative_complexity_bound(&poly("2*n; n^2"), 100, 7).unwrap();
        assert_eq!(b.invariant_factors, vec!["1", "2"]);
        assert_eq!(b.bound, BigInt::from(2));
        // direct computation: a = (1,1), q = 4 gives b = (2,1)
        let g = complexity_gcd(&b.coefficient_matrix, &[BigInt::from(1), BigInt::from(1)], &BigInt::from(4));
        assert_eq!(g, BigInt::from(1));
        assert!(matches!(multiplicative_complexity_bound(&poly("n; 2*n"), 10, 1), Err(Error::Precondition(_))));
        assert!(matches!(multiplicative_complexity_bound(&poly("n^2; 2*n^2"), 10, 1), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn smallest_factor_reading_fails() {
        let cx = smallest_factor_counterexample(&poly("2*n; n^2"), 2, 10).unwrap().unwrap();
        assert_eq!(cx.smallest_factor, "1");
        assert!(cx.gcd.parse::<i64>().unwrap() > 1);
        assert!(smallest_factor_counterexample(&poly("n; n^2"), 2, 10).unwrap().is_none());
    }

    #[test]
    fn matrix_json() {
        let m = mat(&[vec![1, -2], vec![3, 4]]);
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(json, "[[1,-2],[3,4]]");
        assert_eq!(serde_json::from_str::<IntMatrix>(&json).unwrap(), m);
        let big: IntMatrix = serde_json::from_str(r#"[["123456789012345678901234567890"]]"#).unwrap();
        assert_eq!(serde_json::to_string(&big).unwrap(), r#"[["123456789012345678901234567890"]]"#);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn snf_roundtrip(rows in 1usize..=6, cols in 1usize..=6, entries in proptest::collection::vec(-20i64..=20, 36)) {
            let data: Vec<Vec<i64>> = (0..rows).map(|i| entries[i * 6..i * 6 + cols].to_vec()).collect();
            let b = mat(&data);
            let dec = smith_normal_form(&b).unwrap();
            check_decomposition(&b, &dec);
            prop_assert_eq!(dec.rank(), b.rank());
        }

        #[test]
        fn completion_has_unit_determinant(v in proptest::collection::vec(-30i64..=30, 2..=5)) {
            prop_assume!(crate::modular::gcd_i64_slice(&v) == 1);
            let m = complete_primitive_to_unimodular(&v).unwrap();
            prop_assert!(m.determinant().is_one());
        }
    }
}
