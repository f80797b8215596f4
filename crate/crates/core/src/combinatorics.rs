//! Windowed combinatorial verifiers on finite lattice sets.
//!
//! A window is a product of half-open integer intervals. Sets are finite, so a
//! missing point is a genuine refutation for the set at hand, while full
//! coverage is only evidence about any infinite set the window was cut from.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::bitset::Bitset;
use crate::bounds::Bounds;
use crate::error::{Error, Result};
use crate::intpoly::IntPolynomialMap;
use crate::json;
use crate::modular::advance;

/// A finite set of lattice points inside a box `prod [lo_i, hi_i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowedSet {
    window: Vec<(i64, i64)>,
    members: BTreeSet<Vec<i64>>,
}

impl WindowedSet {
    pub fn new(window: Vec<(i64, i64)>, members: impl IntoIterator<Item = Vec<i64>>) -> Result<Self> {
        if window.is_empty() {
            return Err(Error::Precondition("a window needs at least one axis".into()));
        }
        if let Some(&(lo, hi)) = window.iter().find(|(lo, hi)| hi < lo) {
            return Err(Error::Precondition(format!("empty interval [{lo}, {hi})")));
        }
        let mut set = BTreeSet::new();
        for p in members {
            if p.len() != window.len() {
                return Err(Error::DimensionMismatch { expected: window.len(), got: p.len() });
            }
            if p.iter().zip(&window).any(|(&x, &(lo, hi))| x < lo || x >= hi) {
                return Err(Error::Precondition(format!("point {p:?} lies outside the window")));
            }
            set.insert(p);
        }
        Ok(WindowedSet { window, members: set })
    }

    /// A subset of `[lo, hi)`.
    pub fn from_values(lo: i64, hi: i64, values: impl IntoIterator<Item = i64>) -> Result<Self> {
        Self::new(vec![(lo, hi)], values.into_iter().map(|v| vec![v]))
    }

    /// Every lattice point of the window.
    pub fn full(window: Vec<(i64, i64)>) -> Result<Self> {
        let size = window_size(&window);
        let bound = Bounds::global().max_enumeration;
        if size > bound as u128 {
            return Err(Error::bound("window size", size, bound));
        }
        let points = window_points(&window);
        Self::new(window, points)
    }

    pub fn dim(&self) -> usize {
        self.window.len()
    }

    pub fn window(&self) -> &[(i64, i64)] {
        &self.window
    }

    pub fn members(&self) -> &BTreeSet<Vec<i64>> {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, p: &[i64]) -> bool {
        self.members.contains(p)
    }

    /// Members of a one-dimensional set in increasing order.
    pub fn values(&self) -> Vec<i64> {
        self.members.iter().map(|p| p[0]).collect()
    }

    /// `|members| / |window|`.
    pub fn density(&self) -> BigRational {
        let size = window_size(&self.window);
        if size == 0 {
            return BigRational::zero();
        }
        BigRational::new(BigInt::from(self.len()), BigInt::from(size))
    }

    pub fn to_json(&self) -> Value {
        let members = if self.dim() == 1 {
            json::sorted_list(&self.values())
        } else if self.len() <= json::RLE_THRESHOLD {
            json!(self.members.iter().collect::<Vec<_>>())
        } else {
            // row-major offsets inside the window, run-length encoded
            let offsets: Vec<i64> = self.members.iter().map(|p| row_major_offset(&self.window, p)).collect();
            json!({ "row_major_runs": json::runs(&offsets), "count": self.len() })
        };
        json!({
            "dimension": self.dim(),
            "window": self.window.iter().map(|&(lo, hi)| [lo, hi]).collect::<Vec<_>>(),
            "count": self.len(),
            "density": json::rational(&self.density()),
            "members": members,
        })
    }
}

fn window_size(window: &[(i64, i64)]) -> u128 {
    window.iter().map(|&(lo, hi)| (hi as i128 - lo as i128) as u128).product()
}

fn window_points(window: &[(i64, i64)]) -> Vec<Vec<i64>> {
    if window.iter().any(|&(lo, hi)| hi <= lo) {
        return Vec::new();
    }
    let radix: Vec<u64> = window.iter().map(|&(lo, hi)| (hi - lo) as u64).collect();
    let mut idx = vec![0u64; window.len()];
    let mut out = Vec::new();
    loop {
        out.push(idx.iter().zip(window).map(|(&i, &(lo, _))| lo + i as i64).collect());
        if !advance(&mut idx, &radix) {
            return out;
        }
    }
}

fn row_major_offset(window: &[(i64, i64)], p: &[i64]) -> i64 {
    p.iter().zip(window).fold(0i64, |acc, (&x, &(lo, hi))| acc * (hi - lo) + (x - lo))
}

fn check_work(what: &'static str, work: u128) -> Result<()> {
    let bound = Bounds::global().max_tuples;
    if work > bound as u128 {
        return Err(Error::bound(what, work, bound));
    }
    Ok(())
}

/// `E - E`, in the window `prod (-(w_i - 1), w_i)` with `w_i = hi_i - lo_i`.
pub fn difference_set(e: &WindowedSet) -> Result<WindowedSet> {
    check_work("difference pairs", (e.len() as u128).pow(2))?;
    let window = e.window.iter().map(|&(lo, hi)| (1 - (hi - lo), (hi - lo).max(1))).collect();
    let mut out = BTreeSet::new();
    for a in &e.members {
        for b in &e.members {
            out.insert(a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>());
        }
    }
    WindowedSet::new(window, out)
}

fn evaluate_i128(p: &IntPolynomialMap, x: &[i64]) -> Result<Option<Vec<i128>>> {
    Ok(p.evaluate_i64(x)?.iter().map(ToPrimitive::to_i128).collect())
}

/// Outcome of the search for `k Z^d ⊂ (E - E) + P(E - E)` on `‖m‖∞ ≤ radius`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BogolyubovReport {
    /// Smallest passing `k`, if any `k ≤ k_max` passes.
    pub k: Option<u64>,
    pub k_max: u64,
    pub radius: u64,
    /// For each failing `k`, a point `k m` outside the sum set.
    pub uncovered: Vec<(u64, Vec<i64>)>,
    /// Distinct sum points inside the tested box.
    pub sum_points: usize,
}

impl BogolyubovReport {
    pub fn to_json(&self) -> Value {
        json!({
            "k": self.k,
            "k_max": self.k_max,
            "test_radius": self.radius,
            "status": if self.k.is_some() { "covered_in_window (evidence)" } else { "refuted_for_all_k (conclusive for this set)" },
            "uncovered": self.uncovered.iter().map(|(k, p)| json!({ "k": k, "point": p })).collect::<Vec<_>>(),
            "sum_points_in_box": self.sum_points,
        })
    }
}

/// Smallest `k ≤ k_max` such that every `k m` with `‖m‖∞ ≤ radius` lies in
/// `(E - E) + P(E - E)`, both difference sets taken from the finite set `E`.
pub fn bogolyubov_min_k(e: &WindowedSet, p: &IntPolynomialMap, k_max: u64, radius: u64) -> Result<BogolyubovReport> {
    let d = e.dim();
    if p.arity() != d || p.dimension() != d {
        return Err(Error::DimensionMismatch { expected: d, got: if p.arity() != d { p.arity() } else { p.dimension() } });
    }
    if !p.has_zero_constant_term() {
        return Err(Error::Precondition("polynomial must have zero constant term".into()));
    }
    if k_max == 0 {
        return Err(Error::Precondition("k_max must be positive".into()));
    }
    let reach = k_max as i128 * radius as i128;
    if let Some(&(lo, hi)) = e.window.iter().find(|&&(lo, hi)| reach >= (hi - lo) as i128) {
        return Err(Error::Precondition(format!(
            "test points up to {reach} reach beyond the difference window of [{lo}, {hi})"
        )));
    }
    let diff = difference_set(e)?;
    check_work("sum pairs", (diff.len() as u128).pow(2))?;
    let r = reach as i64;
    let side = (2 * r + 1) as usize;
    let total = side.checked_pow(d as u32).filter(|&t| t as u128 <= Bounds::global().max_enumeration as u128);
    let total = total.ok_or_else(|| Error::bound("test box", (side as u128).pow(d as u32), Bounds::global().max_enumeration))?;
    let box_index = |z: &[i128]| -> Option<usize> {
        let mut idx = 0usize;
        for &c in z {
            if c < -(r as i128) || c > r as i128 {
                return None;
            }
            idx = idx * side + (c + r as i128) as usize;
        }
        Some(idx)
    };
    let images: Vec<Vec<i128>> =
        diff.members.iter().filter_map(|y| evaluate_i128(p, y).transpose()).collect::<Result<_>>()?;
    let mut covered = Bitset::new(total);
    let mut z = vec![0i128; d];
    for x in &diff.members {
        for py in &images {
            for i in 0..d {
                z[i] = x[i] as i128 + py[i];
            }
            if let Some(idx) = box_index(&z) {
                covered.insert(idx);
            }
        }
    }
    let radix = vec![2 * radius + 1; d];
    let mut uncovered = Vec::new();
    for k in 1..=k_max {
        let mut m = vec![0u64; d];
        let mut miss = None;
        loop {
            let point: Vec<i64> = m.iter().map(|&c| k as i64 * (c as i64 - radius as i64)).collect();
            let wide: Vec<i128> = point.iter().map(|&c| c as i128).collect();
            if !covered.contains(box_index(&wide).expect("test point inside box")) {
                miss = Some(point);
                break;
            }
            if !advance(&mut m, &radix) {
                break;
            }
        }
        match miss {
            Some(point) => uncovered.push((k, point)),
            None => {
                return Ok(BogolyubovReport { k: Some(k), k_max, radius, uncovered, sum_points: covered.count() });
            }
        }
    }
    Ok(BogolyubovReport { k: None, k_max, radius, uncovered, sum_points: covered.count() })
}

/// `det(v_1 - v_0, ..., v_d - v_0)` for `d + 1` vertices in `Z^d`, i.e. `d!` times
/// the signed volume of the simplex.
pub fn simplex_determinant(vertices: &[Vec<i64>]) -> Result<i128> {
    let d = vertices.len().saturating_sub(1);
    if d == 0 || vertices.iter().any(|v| v.len() != d) {
        return Err(Error::Precondition("need d + 1 vertices in Z^d".into()));
    }
    let mut m: Vec<Vec<i128>> =
        vertices[1..].iter().map(|v| v.iter().zip(&vertices[0]).map(|(&a, &b)| a as i128 - b as i128).collect()).collect();
    Ok(bareiss_determinant(&mut m))
}

fn bareiss_determinant(m: &mut [Vec<i128>]) -> i128 {
    let n = m.len();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if m[k][k] == 0 {
            let Some(swap) = (k + 1..n).find(|&i| m[i][k] != 0) else {
                return 0;
            };
            m.swap(k, swap);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            }
        }
        prev = m[k][k];
    }
    sign * m[n - 1][n - 1]
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// All values `det(l_1 - l_0, ..., l_d - l_0)` over `(d + 1)`-tuples from `E`
/// (vertices may repeat). True volumes are these divided by `d!`.
pub fn volspec(e: &WindowedSet) -> Result<BTreeSet<i128>> {
    let d = e.dim();
    let n = e.len();
    check_work("simplex tuples", binomial(n as u128, d as u128 + 1))?;
    let points: Vec<&Vec<i64>> = e.members.iter().collect();
    let mut out = BTreeSet::new();
    if n > 0 {
        out.insert(0);
    }
    if n < d + 1 {
        return Ok(out);
    }
    // distinct vertices in increasing order; reorderings only flip the sign
    let mut idx: Vec<usize> = (0..=d).collect();
    loop {
        let vertices: Vec<Vec<i64>> = idx.iter().map(|&i| points[i].clone()).collect();
        let det = simplex_determinant(&vertices)?;
        out.insert(det);
        out.insert(-det);
        let mut i = d + 1;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            if idx[i] < n - (d + 1 - i) {
                idx[i] += 1;
                for j in i + 1..=d {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn factorial(d: usize) -> i128 {
    (1..=d as i128).product()
}

/// Whether every volume `k j` with `|j| ≤ bound` is attained, i.e. `d! k j ∈ volspec(E)`.
pub fn volspec_coverage(e: &WindowedSet, k: u64, bound: u64) -> Result<bool> {
    let spec = volspec(e)?;
    let scale = factorial(e.dim()) * k as i128;
    Ok((-(bound as i128)..=bound as i128).all(|j| spec.contains(&(scale * j))))
}

/// `‖x‖`, the distance from `x` to the nearest integer.
pub fn distance_to_integer(x: &BigRational) -> BigRational {
    let frac = x - x.floor();
    let other = BigRational::one() - &frac;
    if frac <= other {
        frac
    } else {
        other
    }
}

fn in_bohr(n: i64, alpha: &BigRational, eps: &BigRational) -> bool {
    distance_to_integer(&(alpha * BigInt::from(n))) < *eps
}

fn half() -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(2))
}

/// `B(alpha, eps) ∩ [lo, hi)` with `B(alpha, eps) = { n : ‖n alpha‖ < eps }`;
/// `eps ≥ 1/2` gives the whole window.
pub fn bohr_set(alpha: &BigRational, eps: &BigRational, lo: i64, hi: i64) -> Result<WindowedSet> {
    if !eps.is_positive() {
        return Err(Error::Precondition("eps must be positive".into()));
    }
    let whole = *eps >= half();
    WindowedSet::from_values(lo, hi, (lo..hi).filter(|&n| whole || in_bohr(n, alpha, eps)))
}

/// `B(alpha, eps)^d ∩ window`.
pub fn bohr_product(alpha: &BigRational, eps: &BigRational, window: &[(i64, i64)]) -> Result<WindowedSet> {
    let axes = window.iter().map(|&(lo, hi)| bohr_set(alpha, eps, lo, hi).map(|s| s.values())).collect::<Result<Vec<_>>>()?;
    let total: u128 = axes.iter().map(|a| a.len() as u128).product();
    let bound = Bounds::global().max_enumeration;
    if total > bound as u128 {
        return Err(Error::bound("Bohr product size", total, bound));
    }
    let mut points = Vec::new();
    if axes.iter().all(|a| !a.is_empty()) {
        let radix: Vec<u64> = axes.iter().map(|a| a.len() as u64).collect();
        let mut idx = vec![0u64; axes.len()];
        loop {
            points.push(idx.iter().zip(&axes).map(|(&i, a)| a[i as usize]).collect());
            if !advance(&mut idx, &radix) {
                break;
            }
        }
    }
    WindowedSet::new(window.to_vec(), points)
}

/// Result of the degenerate-polynomial obstruction check.
#[derive(Clone, Debug, PartialEq)]
pub struct DegenerateObstructionReport {
    pub alpha: Vec<BigInt>,
    pub beta: Vec<BigInt>,
    /// `2 eps sum (|alpha_i| + |beta_i|)`.
    pub fat_radius: BigRational,
    pub set_size: usize,
    /// Pairs `(x, y) ∈ (E - E)^2` whose sum `x + P(y)` was checked.
    pub sum_points_checked: u128,
    pub bogolyubov: BogolyubovReport,
}

impl DegenerateObstructionReport {
    pub fn to_json(&self) -> Value {
        json!({
            "alpha": self.alpha.iter().map(json::big).collect::<Vec<_>>(),
            "beta": self.beta.iter().map(json::big).collect::<Vec<_>>(),
            "fat_radius": json::rational(&self.fat_radius),
            "set_size": self.set_size,
            "sum_points_checked": self.sum_points_checked.to_string(),
            "all_sums_in_fat_bohr_set": true,
            "bogolyubov": self.bogolyubov.to_json(),
        })
    }
}

/// For `P` with `sum alpha_i P_i = sum beta_i x_i`: builds `E = B(a, eps)^d ∩ window`,
/// checks that every `z = x + P(y)` with `x, y ∈ E - E` has `sum alpha_i z_i` in the
/// fat Bohr set `B(a, 2 eps sum(|alpha_i| + |beta_i|))`, and runs the Bogolyubov search.
pub fn degenerate_obstruction_check(
    p: &IntPolynomialMap,
    a: &BigRational,
    eps: &BigRational,
    window: &[(i64, i64)],
    k_max: u64,
    radius: u64,
) -> Result<DegenerateObstructionReport> {
    let Some(comb) = p.linear_degenerate_combination()? else {
        return Err(Error::NotDegenerate);
    };
    let d = p.dimension();
    if p.arity() != d {
        return Err(Error::ArityMismatch { expected: d, got: p.arity() });
    }
    if window.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: window.len() });
    }
    let e = bohr_product(a, eps, window)?;
    let diff = difference_set(&e)?;
    check_work("sum pairs", (diff.len() as u128).pow(2))?;
    let weight: BigInt = comb.alpha.iter().chain(&comb.beta).map(|c| c.abs()).sum();
    let fat_radius = eps * BigRational::from_integer(BigInt::from(2) * weight);
    let dot = |c: &[BigInt], v: &[BigInt]| -> BigInt { c.iter().zip(v).map(|(x, y)| x * y).sum() };
    let big = |v: &[i64]| -> Vec<BigInt> { v.iter().map(|&c| BigInt::from(c)).collect() };
    let mut checked = 0u128;
    for y in diff.members() {
        let py = p.evaluate_i64(y)?;
        let by = dot(&comb.beta, &big(y));
        for x in diff.members() {
            let bx = big(x);
            let z: Vec<BigInt> = bx.iter().zip(&py).map(|(u, v)| u + v).collect();
            let combined = dot(&comb.alpha, &z);
            if combined != dot(&comb.alpha, &bx) + &by {
                return Err(Error::Invariant(format!("degenerate identity fails at y = {y:?}")));
            }
            if distance_to_integer(&(a * &combined)) >= fat_radius {
                return Err(Error::Invariant(format!("sum {z:?} escapes the fat Bohr set")));
            }
            checked += 1;
        }
    }
    let bogolyubov = bogolyubov_min_k(&e, p, k_max, radius)?;
    Ok(DegenerateObstructionReport { alpha: comb.alpha, beta: comb.beta, fat_radius, set_size: e.len(), sum_points_checked: checked, bogolyubov })
}

/// How the pinned refuter reads `E`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RefuterDomain {
    /// `E` is exactly the finite set given.
    Finite,
    /// `E` is periodic with this period and the window is one period `[0, L)`.
    Periodic(u64),
}

/// Why the pattern fails from base point `x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PinnedCertificate {
    pub x: i64,
    /// Some `j ≤ m` with `jk` missed for every `y` (`None` if no single `j` works).
    pub j_all: Option<u64>,
    /// Per-`y` missed multiples, used when no uniform `j` was found.
    pub per_y: Vec<(i64, u64)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefuterReport {
    pub k: u64,
    pub m: u64,
    pub domain: RefuterDomain,
    pub set_size: usize,
    /// A pair `(x, y)` realizing all of `{k, ..., mk}`, if one exists.
    pub covering: Option<(i64, i64)>,
    pub certificates: Vec<PinnedCertificate>,
    /// Largest `j` used by any certificate: `{k, ..., m' k}` fails for every pinned pair.
    pub m_certified: u64,
}

impl RefuterReport {
    pub fn refuted(&self) -> bool {
        self.covering.is_none()
    }

    /// Summary JSON; certificate lists are run-length grouped by `j`.
    pub fn to_json(&self) -> Value {
        let mut by_j: std::collections::BTreeMap<u64, Vec<i64>> = Default::default();
        let mut mixed = Vec::new();
        for c in &self.certificates {
            match c.j_all {
                Some(j) => by_j.entry(j).or_default().push(c.x),
                None => mixed.push(json!({ "x": c.x, "per_y": c.per_y.iter().map(|&(y, j)| [y, j as i64]).collect::<Vec<_>>() })),
            }
        }
        let uniform: Vec<Value> =
            by_j.iter().map(|(j, xs)| json!({ "j": j, "base_points": json::sorted_list(xs) })).collect();
        json!({
            "k": self.k,
            "m": self.m,
            "domain": match self.domain {
                RefuterDomain::Finite => json!("finite"),
                RefuterDomain::Periodic(l) => json!({ "periodic": l }),
            },
            "set_size": self.set_size,
            "pinned_pairs": (self.set_size as u128).pow(2).to_string(),
            "refuted": self.refuted(),
            "covering_pair": self.covering.map(|(x, y)| [x, y]),
            "m_certified": self.m_certified,
            "uniform_certificates": uniform,
            "per_pair_certificates": mixed,
        })
    }
}

/// Decides whether some pinned pair `(x, y) ∈ E^2` has
/// `{k, 2k, ..., mk} ⊂ (E - x) + P(E - y)`.
///
/// First each `x` is tested against `G = E + P(Z)`: if `x + jk ∉ G` the multiple `jk`
/// is missed for every `y`. Remaining base points are checked pair by pair.
pub fn pinned_delta_refuter(e: &WindowedSet, p: &IntPolynomialMap, k: u64, m: u64, domain: RefuterDomain) -> Result<RefuterReport> {
    if e.dim() != 1 || p.arity() != 1 || p.dimension() != 1 {
        return Err(Error::Precondition("the pinned refuter works with subsets of Z and P: Z -> Z".into()));
    }
    if k == 0 {
        return Err(Error::Precondition("k must be positive".into()));
    }
    let values = e.values();
    let mut report =
        RefuterReport { k, m, domain, set_size: values.len(), covering: None, certificates: Vec::new(), m_certified: 0 };
    if m == 0 {
        report.covering = values.first().map(|&x| (x, x));
        return Ok(report);
    }
    match domain {
        RefuterDomain::Finite => refute_finite(&values, p, k, m, &mut report)?,
        RefuterDomain::Periodic(l) => {
            let &(lo, hi) = &e.window()[0];
            if lo != 0 || hi != l as i64 || l == 0 {
                return Err(Error::Precondition(format!("a periodic set must be given on the window [0, {l})")));
            }
            refute_periodic(&values, p, k, m, l, &mut report)?
        }
    }
    report.m_certified = report
        .certificates
        .iter()
        .map(|c| c.j_all.unwrap_or_else(|| c.per_y.iter().map(|&(_, j)| j).max().unwrap_or(0)))
        .max()
        .unwrap_or(0);
    Ok(report)
}

/// A bitset over the integer range `[lo, lo + len)`.
struct RangeSet {
    lo: i128,
    bits: Bitset,
}

impl RangeSet {
    fn new(lo: i128, hi: i128) -> Self {
        RangeSet { lo, bits: Bitset::new((hi - lo).max(0) as usize) }
    }

    fn insert(&mut self, v: i128) {
        if v >= self.lo && v < self.lo + self.bits.len() as i128 {
            self.bits.insert((v - self.lo) as usize);
        }
    }

    fn contains(&self, v: i128) -> bool {
        v >= self.lo && v < self.lo + self.bits.len() as i128 && self.bits.contains((v - self.lo) as usize)
    }
}

fn first_missed(m: u64, mut missed: impl FnMut(u64) -> bool) -> Option<u64> {
    (1..=m).find(|&j| missed(j))
}

fn refute_finite(values: &[i64], p: &IntPolynomialMap, k: u64, m: u64, report: &mut RefuterReport) -> Result<()> {
    let Some((&min, &max)) = values.first().zip(values.last()) else {
        return Ok(());
    };
    let n = values.len() as u128;
    check_work("pinned refutation work", n * n * (m as u128 + 1))?;
    let lo = min as i128 + k as i128;
    let hi = max as i128 + (m as i128) * (k as i128) + 1;
    if hi - lo > Bounds::global().max_window as i128 {
        return Err(Error::bound("target range", (hi - lo) as u128, Bounds::global().max_window));
    }
    let eval = |t: i64| -> Result<Option<i128>> { Ok(p.evaluate_i64(&[t])?[0].to_i128()) };
    // P(E - E) ⊃ P(E - y) for every y
    let mut diffs = BTreeSet::new();
    for &a in values {
        for &b in values {
            diffs.insert(a - b);
        }
    }
    let all_images: Vec<i128> = diffs.iter().filter_map(|&t| eval(t).transpose()).collect::<Result<_>>()?;
    let mut g = RangeSet::new(lo, hi);
    for &e in values {
        for &v in &all_images {
            g.insert(e as i128 + v);
        }
    }
    let mut pending = Vec::new();
    for &x in values {
        match first_missed(m, |j| !g.contains(x as i128 + (j * k) as i128)) {
            Some(j) => report.certificates.push(PinnedCertificate { x, j_all: Some(j), per_y: Vec::new() }),
            None => pending.push(x),
        }
    }
    if pending.is_empty() {
        return Ok(());
    }
    let mut per_x: Vec<PinnedCertificate> =
        pending.iter().map(|&x| PinnedCertificate { x, j_all: None, per_y: Vec::new() }).collect();
    for &y in values {
        let mut dy = RangeSet::new(lo, hi);
        for &e2 in values {
            if let Some(v) = eval(e2 - y)? {
                for &e in values {
                    dy.insert(e as i128 + v);
                }
            }
        }
        for cert in per_x.iter_mut() {
            match first_missed(m, |j| !dy.contains(cert.x as i128 + (j * k) as i128)) {
                Some(j) => cert.per_y.push((y, j)),
                None => {
                    report.covering = Some((cert.x, y));
                    return Ok(());
                }
            }
        }
    }
    report.certificates.extend(per_x);
    report.certificates.sort_by_key(|c| c.x);
    Ok(())
}

fn refute_periodic(values: &[i64], p: &IntPolynomialMap, k: u64, m: u64, l: u64, report: &mut RefuterReport) -> Result<()> {
    let bound = Bounds::global().max_window;
    if l > bound {
        return Err(Error::bound("period", l as u128, bound));
    }
    let len = l as usize;
    let reduced = p.reduce_mod(l);
    let e_bits = Bitset::from_indices(len, values.iter().map(|&v| v as usize));
    let mut images = Bitset::new(len);
    for n in 0..l {
        images.insert(reduced.evaluate_scalar(n) as usize);
    }
    check_work("periodic sumset work", images.count() as u128 * (len as u128 / 64 + 1))?;
    let mut g = Bitset::new(len);
    for s in images.iter() {
        g.or_rotated(&e_bits, s);
    }
    let step = |x: i64, j: u64| ((x as u128 + j as u128 * k as u128) % l as u128) as usize;
    let mut pending = Vec::new();
    for &x in values {
        match first_missed(m, |j| !g.contains(step(x, j))) {
            Some(j) => report.certificates.push(PinnedCertificate { x, j_all: Some(j), per_y: Vec::new() }),
            None => pending.push(x),
        }
    }
    if pending.is_empty() {
        return Ok(());
    }
    check_work("pinned refutation work", values.len() as u128 * values.len() as u128 * (len as u128 / 64 + 1))?;
    let mut per_x: Vec<PinnedCertificate> =
        pending.iter().map(|&x| PinnedCertificate { x, j_all: None, per_y: Vec::new() }).collect();
    for &y in values {
        let mut shifts = Bitset::new(len);
        for &e2 in values {
            let t = (e2 - y).rem_euclid(l as i64) as u64;
            shifts.insert(reduced.evaluate_scalar(t) as usize);
        }
        let mut dy = Bitset::new(len);
        for s in shifts.iter() {
            dy.or_rotated(&e_bits, s);
        }
        for cert in per_x.iter_mut() {
            match first_missed(m, |j| !dy.contains(step(cert.x, j))) {
                Some(j) => cert.per_y.push((y, j)),
                None => {
                    report.covering = Some((cert.x, y));
                    return Ok(());
                }
            }
        }
    }
    report.certificates.extend(per_x);
    report.certificates.sort_by_key(|c| c.x);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn difference_set_examples() {
        let e = WindowedSet::from_values(0, 1, [0]).unwrap();
        assert_eq!(difference_set(&e).unwrap().values(), vec![0]);
        let evens = WindowedSet::from_values(0, 10, (0..10).step_by(2)).unwrap();
        let d = difference_set(&evens).unwrap();
        assert_eq!(d.window(), &[(-9, 10)]);
        assert_eq!(d.values(), (-8..=8).step_by(2).collect::<Vec<_>>());
        let e = WindowedSet::from_values(0, 5, [0, 1, 4]).unwrap();
        assert_eq!(difference_set(&e).unwrap().values(), vec![-4, -3, -1, 0, 1, 3, 4]);
    }

    #[test]
    fn bogolyubov_examples() {
        let sq = IntPolynomialMap::parse("n^2").unwrap();
        let evens = WindowedSet::from_values(0, 200, (0..200).step_by(2)).unwrap();
        let r = bogolyubov_min_k(&evens, &sq, 10, 10).unwrap();
        assert_eq!(r.k, Some(2));
        assert_eq!(r.uncovered.len(), 1);
        assert_eq!(r.uncovered[0].1[0].rem_euclid(2), 1);
        let all = WindowedSet::from_values(0, 50, 0..50).unwrap();
        assert_eq!(bogolyubov_min_k(&all, &sq, 5, 5).unwrap().k, Some(1));
        assert!(bogolyubov_min_k(&all, &sq, 10, 5).is_err());
    }

    #[test]
    fn determinant_formula() {
        assert_eq!(simplex_determinant(&[vec![0, 0], vec![1, 0], vec![0, 1]]).unwrap(), 1);
        assert_eq!(simplex_determinant(&[vec![0, 0], vec![0, 1], vec![1, 0]]).unwrap(), -1);
        assert_eq!(simplex_determinant(&[vec![1, 1], vec![4, 1], vec![1, 3]]).unwrap(), 6);
        let cube = [vec![0, 0, 0], vec![2, 0, 0], vec![0, 3, 0], vec![0, 0, 5]];
        assert_eq!(simplex_determinant(&cube).unwrap(), 30);
        assert_eq!(simplex_determinant(&[vec![3], vec![-4]]).unwrap(), -7);
    }

    #[test]
    fn volspec_examples() {
        let tri = WindowedSet::new(vec![(0, 2), (0, 2)], [vec![0, 0], vec![1, 0], vec![0, 1]]).unwrap();
        assert_eq!(volspec(&tri).unwrap().into_iter().collect::<Vec<_>>(), vec![-1, 0, 1]);
        let grid = WindowedSet::full(vec![(0, 4), (0, 4)]).unwrap();
        let spec = volspec(&grid).unwrap();
        assert!((-9..=9).all(|v| spec.contains(&v)));
        let line = WindowedSet::new(vec![(0, 10), (0, 10)], (0..10).map(|t| vec![t, t])).unwrap();
        assert_eq!(volspec(&line).unwrap().into_iter().collect::<Vec<_>>(), vec![0]);
        assert!(!volspec_coverage(&line, 1, 1).unwrap());
        assert!(volspec_coverage(&line, 1, 0).unwrap());
        let big = WindowedSet::full(vec![(0, 10), (0, 10)]).unwrap();
        assert!(volspec_coverage(&big, 1, 5).unwrap());
    }

    #[test]
    fn bohr_examples() {
        let a = rat(408, 577);
        let b = bohr_set(&a, &rat(1, 10), 0, 30).unwrap();
        assert!(b.contains(&[0]));
        for n in 0..30i64 {
            // independent float check; the rational input keeps these far from the boundary
            let x = n as f64 * 408.0 / 577.0;
            let dist = (x - x.round()).abs();
            assert_eq!(b.contains(&[n]), dist < 0.1, "n = {n}");
        }
        assert_eq!(bohr_set(&a, &rat(1, 2), -5, 5).unwrap().len(), 10);
        assert_eq!(distance_to_integer(&rat(-7, 4)), rat(1, 4));
        assert_eq!(distance_to_integer(&rat(1, 2)), rat(1, 2));
    }

    #[test]
    fn degenerate_obstruction_example() {
        let p = IntPolynomialMap::parse("x0; x1^2").unwrap();
        let r = degenerate_obstruction_check(&p, &rat(408, 577), &rat(1, 20), &[(0, 40), (0, 40)], 10, 3).unwrap();
        assert_eq!(r.bogolyubov.k, None);
        assert_eq!(r.bogolyubov.uncovered.len(), 10);
        assert_eq!(r.fat_radius, rat(1, 5));
        assert_eq!(r.alpha, vec![BigInt::from(1), BigInt::from(0)]);
        let whole = degenerate_obstruction_check(&p, &rat(408, 577), &rat(1, 2), &[(0, 12), (0, 12)], 2, 3).unwrap();
        assert_eq!(whole.bogolyubov.k, Some(1));
        let q = IntPolynomialMap::parse("x0^2; x1^2").unwrap();
        assert_eq!(degenerate_obstruction_check(&q, &rat(1, 3), &rat(1, 20), &[(0, 10), (0, 10)], 2, 2).unwrap_err(), Error::NotDegenerate);
    }

    #[test]
    fn refuter_examples() {
        let sq = IntPolynomialMap::parse("n^2").unwrap();
        let all = WindowedSet::from_values(0, 20, 0..20).unwrap();
        let r = pinned_delta_refuter(&all, &sq, 3, 1, RefuterDomain::Finite).unwrap();
        assert!(r.covering.is_some());
        let r = pinned_delta_refuter(&all, &sq, 3, 0, RefuterDomain::Finite).unwrap();
        assert!(r.covering.is_some());
        // E = {1} mod 3 and squares {0, 1}: E + S = {1, 2} misses 1 + 2
        let e = WindowedSet::from_values(0, 3, [1]).unwrap();
        let r = pinned_delta_refuter(&e, &sq, 1, 2, RefuterDomain::Periodic(3)).unwrap();
        assert!(r.refuted());
        assert_eq!(r.m_certified, 2);
    }

    /// Naive oracle: does some pair cover every `jk`?
    fn naive_cover(values: &[i64], p: &IntPolynomialMap, k: i64, m: i64) -> bool {
        let pv = |t: i64| p.evaluate_i64(&[t]).unwrap()[0].to_i64().unwrap();
        values.iter().any(|&x| {
            values.iter().any(|&y| {
                (1..=m).all(|j| values.iter().any(|&e| values.iter().any(|&f| e - x + pv(f - y) == j * k)))
            })
        })
    }

    fn naive_cover_periodic(values: &[i64], p: &IntPolynomialMap, k: i64, m: i64, l: i64) -> bool {
        let pv = |t: i64| p.evaluate_i64(&[t]).unwrap()[0].to_i64().unwrap();
        values.iter().any(|&x| {
            values.iter().any(|&y| {
                (1..=m).all(|j| {
                    values.iter().any(|&e| values.iter().any(|&f| (e - x + pv(f - y) - j * k).rem_euclid(l) == 0))
                })
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn differences_are_symmetric(values in prop::collection::btree_set(0i64..30, 0..12)) {
            let e = WindowedSet::from_values(0, 30, values.iter().copied()).unwrap();
            let d = difference_set(&e).unwrap();
            for v in d.values() {
                prop_assert!(d.contains(&[-v]));
            }
            prop_assert_eq!(d.contains(&[0]), !e.is_empty());
        }

        #[test]
        fn volspec_is_sign_closed(points in prop::collection::btree_set((0i64..6, 0i64..6), 0..8)) {
            let e = WindowedSet::new(vec![(0, 6), (0, 6)], points.iter().map(|&(a, b)| vec![a, b])).unwrap();
            let spec = volspec(&e).unwrap();
            for v in &spec {
                prop_assert!(spec.contains(&-v));
            }
        }

        #[test]
        fn bogolyubov_is_monotone(small in prop::collection::btree_set(0i64..40, 1..20), extra in prop::collection::btree_set(0i64..40, 0..20)) {
            let sq = IntPolynomialMap::parse("n^2").unwrap();
            let e = WindowedSet::from_values(0, 40, small.iter().copied()).unwrap();
            let bigger = WindowedSet::from_values(0, 40, small.union(&extra).copied()).unwrap();
            let a = bogolyubov_min_k(&e, &sq, 6, 5).unwrap();
            let b = bogolyubov_min_k(&bigger, &sq, 6, 5).unwrap();
            if let Some(ka) = a.k {
                prop_assert!(b.k.is_some_and(|kb| kb <= ka));
            }
        }

        #[test]
        fn finite_refuter_matches_oracle(values in prop::collection::btree_set(0i64..12, 1..7), k in 1u64..4, m in 1u64..4) {
            let p = IntPolynomialMap::parse("n^2").unwrap();
            let e = WindowedSet::from_values(0, 12, values.iter().copied()).unwrap();
            let r = pinned_delta_refuter(&e, &p, k, m, RefuterDomain::Finite).unwrap();
            let vals: Vec<i64> = values.into_iter().collect();
            prop_assert_eq!(r.covering.is_some(), naive_cover(&vals, &p, k as i64, m as i64));
        }

        #[test]
        fn periodic_refuter_matches_oracle(values in prop::collection::btree_set(0i64..15, 1..6), k in 1u64..5, m in 1u64..4) {
            let p = IntPolynomialMap::parse("n^2 + n").unwrap();
            let e = WindowedSet::from_values(0, 15, values.iter().copied()).unwrap();
            let r = pinned_delta_refuter(&e, &p, k, m, RefuterDomain::Periodic(15)).unwrap();
            let vals: Vec<i64> = values.into_iter().collect();
            prop_assert_eq!(r.covering.is_some(), naive_cover_periodic(&vals, &p, k as i64, m as i64, 15));
            if r.refuted() {
                prop_assert!(r.m_certified <= m);
            }
        }
    }
}
