use num_bigint::BigInt;
use num_rational::BigRational;

use crate::bitset::Bitset;
use crate::bounds::Bounds;
use crate::error::{Error, Result};
use crate::modular::{gcd, lcm, lcm_all, reduce_i64};

/// The rotation system `X = prod Z/q_iZ` with `Z^d` acting by translation:
/// the `j`-th basis vector of `Z^d` adds `g_j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CyclicProductSystem {
    moduli: Vec<u64>,
    generators: Vec<Vec<u64>>,
    strides: Vec<usize>,
    size: usize,
    ergodic: bool,
}

impl CyclicProductSystem {
    pub fn new(moduli: Vec<u64>, generators: Vec<Vec<i64>>) -> Result<Self> {
        if moduli.is_empty() || moduli.contains(&0) {
            return Err(Error::Precondition("moduli must be a nonempty list of positive integers".into()));
        }
        if generators.is_empty() {
            return Err(Error::Precondition("the action needs at least one generator".into()));
        }
        let total: u128 = moduli.iter().map(|&q| q as u128).product();
        let bound = Bounds::global().max_states;
        if total > bound as u128 {
            return Err(Error::bound("state count", total, bound));
        }
        let generators = generators
            .into_iter()
            .map(|g| {
                if g.len() != moduli.len() {
                    return Err(Error::DimensionMismatch { expected: moduli.len(), got: g.len() });
                }
                Ok(g.iter().zip(&moduli).map(|(&x, &q)| reduce_i64(x, q)).collect())
            })
            .collect::<Result<Vec<Vec<u64>>>>()?;
        let mut strides = vec![1usize; moduli.len()];
        for i in (0..moduli.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * moduli[i + 1] as usize;
        }
        let mut sys = CyclicProductSystem { moduli, generators, strides, size: total as usize, ergodic: false };
        sys.ergodic = sys.subgroup(&sys.generators.clone()).is_full();
        Ok(sys)
    }

    /// `Z` acting on `prod Z/q_iZ` by adding `(1, ..., 1)`.
    pub fn diagonal(moduli: Vec<u64>) -> Result<Self> {
        let g = vec![1i64; moduli.len()];
        Self::new(moduli, vec![g])
    }

    /// `Z^I` acting on `prod Z/q_iZ` coordinatewise.
    pub fn standard(moduli: Vec<u64>) -> Result<Self> {
        let n = moduli.len();
        let gens = (0..n).map(|j| (0..n).map(|i| i64::from(i == j)).collect()).collect();
        Self::new(moduli, gens)
    }

    /// `(Z/NZ)^d` with the standard `Z^d`-action.
    pub fn torus(n: u64, d: usize) -> Result<Self> {
        Self::standard(vec![n; d])
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    pub fn levels(&self) -> usize {
        self.moduli.len()
    }

    /// Rank `d` of the acting group `Z^d`.
    pub fn dim(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[Vec<u64>] {
        &self.generators
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn is_ergodic(&self) -> bool {
        self.ergodic
    }

    /// `lcm(q_1, ..., q_I)`, the exponent of `X`.
    pub fn exponent(&self) -> u64 {
        lcm_all(&self.moduli)
    }

    pub fn index(&self, coords: &[u64]) -> usize {
        coords.iter().zip(&self.moduli).zip(&self.strides).map(|((&c, &q), &s)| (c % q) as usize * s).sum()
    }

    pub fn coords(&self, mut index: usize) -> Vec<u64> {
        let mut out = vec![0; self.moduli.len()];
        for i in 0..self.moduli.len() {
            out[i] = (index / self.strides[i]) as u64;
            index %= self.strides[i];
        }
        out
    }

    /// Group element `sum_j v_j g_j`.
    pub fn shift_of(&self, v: &[i64]) -> Result<Vec<u64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: v.len() });
        }
        Ok(self.combine(&self.generators, v))
    }

    /// `sum_j v_j h_j` for arbitrary generators `h`.
    pub(crate) fn combine(&self, gens: &[Vec<u64>], v: &[i64]) -> Vec<u64> {
        self.moduli
            .iter()
            .enumerate()
            .map(|(i, &q)| {
                let s: i128 = gens.iter().zip(v).map(|(g, &vj)| g[i] as i128 * vj as i128).sum();
                s.rem_euclid(q as i128) as u64
            })
            .collect()
    }

    pub(crate) fn add_index(&self, index: usize, shift: &[u64]) -> usize {
        let c = self.coords(index);
        let sum: Vec<u64> = c.iter().zip(shift).zip(&self.moduli).map(|((&a, &b), &q)| (a + b) % q).collect();
        self.index(&sum)
    }

    /// `bits + shift`.
    pub fn translate(&self, bits: &Bitset, shift: &[u64]) -> Bitset {
        if self.moduli.len() == 1 {
            return bits.rotated(shift[0] as usize);
        }
        let mut out = Bitset::new(self.size);
        for i in bits.iter() {
            out.insert(self.add_index(i, shift));
        }
        out
    }

    /// Sumset `a + b` of two subsets of `X`.
    pub fn sumset(&self, a: &Bitset, b: &Bitset) -> Bitset {
        let (small, large) = if a.count() <= b.count() { (a, b) } else { (b, a) };
        let mut out = Bitset::new(self.size);
        for s in small.iter() {
            let shift = self.coords(s);
            if self.moduli.len() == 1 {
                out.or_rotated(large, shift[0] as usize);
            } else {
                out.union_with(&self.translate(large, &shift));
            }
        }
        out
    }

    /// Subgroup generated by `gens`, as a subset of `X`.
    pub fn subgroup(&self, gens: &[Vec<u64>]) -> Bitset {
        let mut members = Bitset::new(self.size);
        members.insert(0);
        let mut frontier = vec![0usize];
        while let Some(x) = frontier.pop() {
            for g in gens {
                let y = self.add_index(x, g);
                if !members.contains(y) {
                    members.insert(y);
                    frontier.push(y);
                }
            }
        }
        members
    }

    /// Order of a group element.
    pub fn order_of(&self, x: &[u64]) -> u64 {
        x.iter().zip(&self.moduli).fold(1, |acc, (&xi, &q)| lcm(acc, q / gcd(xi, q)))
    }
}

/// A subset of `X`: explicit, or a product `prod A_i` of per-level residue sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GroupSet {
    Explicit(Bitset),
    Product(Vec<Vec<u64>>),
}

impl GroupSet {
    pub fn full(sys: &CyclicProductSystem) -> Self {
        GroupSet::Explicit(Bitset::full(sys.size()))
    }

    pub fn from_indices(sys: &CyclicProductSystem, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut bits = Bitset::new(sys.size());
        for i in indices {
            if i >= sys.size() {
                return Err(Error::Precondition(format!("state {i} outside a system of {} states", sys.size())));
            }
            bits.insert(i);
        }
        Ok(GroupSet::Explicit(bits))
    }

    pub fn from_points(sys: &CyclicProductSystem, points: &[Vec<u64>]) -> Result<Self> {
        let mut bits = Bitset::new(sys.size());
        for p in points {
            if p.len() != sys.levels() {
                return Err(Error::DimensionMismatch { expected: sys.levels(), got: p.len() });
            }
            bits.insert(sys.index(p));
        }
        Ok(GroupSet::Explicit(bits))
    }

    pub fn product(sys: &CyclicProductSystem, levels: Vec<Vec<u64>>) -> Result<Self> {
        if levels.len() != sys.levels() {
            return Err(Error::DimensionMismatch { expected: sys.levels(), got: levels.len() });
        }
        let levels = levels
            .into_iter()
            .zip(sys.moduli())
            .map(|(mut set, &q)| {
                if let Some(&r) = set.iter().find(|&&r| r >= q) {
                    return Err(Error::Precondition(format!("residue {r} is not below {q}")));
                }
                set.sort_unstable();
                set.dedup();
                Ok(set)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GroupSet::Product(levels))
    }

    /// Exact measure `|A| / |X|`.
    pub fn measure(&self, sys: &CyclicProductSystem) -> BigRational {
        match self {
            GroupSet::Explicit(bits) => BigRational::new(BigInt::from(bits.count()), BigInt::from(sys.size())),
            GroupSet::Product(levels) => levels
                .iter()
                .zip(sys.moduli())
                .map(|(set, &q)| BigRational::new(BigInt::from(set.len()), BigInt::from(q)))
                .product(),
        }
    }

    pub fn to_bitset(&self, sys: &CyclicProductSystem) -> Result<Bitset> {
        match self {
            GroupSet::Explicit(bits) => {
                if bits.len() != sys.size() {
                    return Err(Error::DimensionMismatch { expected: sys.size(), got: bits.len() });
                }
                Ok(bits.clone())
            }
            GroupSet::Product(levels) => {
                if levels.len() != sys.levels() {
                    return Err(Error::DimensionMismatch { expected: sys.levels(), got: levels.len() });
                }
                let mut bits = Bitset::new(sys.size());
                if levels.iter().any(Vec::is_empty) {
                    return Ok(bits);
                }
                let mut pos = vec![0usize; levels.len()];
                loop {
                    let coords: Vec<u64> = pos.iter().zip(levels).map(|(&p, set)| set[p]).collect();
                    bits.insert(sys.index(&coords));
                    let mut i = levels.len();
                    loop {
                        if i == 0 {
                            return Ok(bits);
                        }
                        i -= 1;
                        pos[i] += 1;
                        if pos[i] < levels[i].len() {
                            break;
                        }
                        pos[i] = 0;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ergodicity_by_closure() {
        assert!(CyclicProductSystem::diagonal(vec![3, 35, 2431]).unwrap().is_ergodic());
        assert!(!CyclicProductSystem::diagonal(vec![4, 6]).unwrap().is_ergodic());
        assert!(CyclicProductSystem::torus(5, 2).unwrap().is_ergodic());
        assert!(!CyclicProductSystem::new(vec![5, 5], vec![vec![1, 1]]).unwrap().is_ergodic());
        assert!(CyclicProductSystem::new(vec![6], vec![vec![2], vec![3]]).unwrap().is_ergodic());
    }

    #[test]
    fn index_roundtrip_and_translation() {
        let sys = CyclicProductSystem::standard(vec![3, 4, 5]).unwrap();
        for i in 0..sys.size() {
            assert_eq!(sys.index(&sys.coords(i)), i);
        }
        let a = Bitset::from_indices(sys.size(), [sys.index(&[2, 3, 4])]);
        let t = sys.translate(&a, &[1, 1, 1]);
        assert_eq!(t.iter().collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn product_sets_expand_consistently() {
        let sys = CyclicProductSystem::diagonal(vec![3, 5]).unwrap();
        let a = GroupSet::product(&sys, vec![vec![1, 2], vec![0, 3, 4]]).unwrap();
        let bits = a.to_bitset(&sys).unwrap();
        assert_eq!(bits.count(), 6);
        assert_eq!(a.measure(&sys), GroupSet::Explicit(bits.clone()).measure(&sys));
        assert!(bits.contains(sys.index(&[2, 3])));
    }
}
