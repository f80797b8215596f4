use num_bigint::BigInt;
use num_rational::BigRational;

use super::system::{CyclicProductSystem, GroupSet};
use crate::bitset::Bitset;
use crate::error::{Error, Result};

/// A `T^k`-ergodic component: the coset `representative + <k g_1, ..., k g_d>`,
/// carrying the normalized restriction of the uniform measure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErgodicComponent {
    /// Smallest state index in the coset.
    pub representative: usize,
    /// `k` relative to the original action.
    pub step: u64,
    /// `k g_1, ..., k g_d`, the generators of the sub-action.
    pub generators: Vec<Vec<u64>>,
    pub members: Bitset,
}

impl ErgodicComponent {
    /// The whole system viewed as its own (`k = 1`) component.
    pub fn whole(sys: &CyclicProductSystem) -> Result<Self> {
        if !sys.is_ergodic() {
            return Err(Error::NotErgodic);
        }
        Ok(ErgodicComponent {
            representative: 0,
            step: 1,
            generators: sys.generators().to_vec(),
            members: Bitset::full(sys.size()),
        })
    }

    pub fn size(&self) -> usize {
        self.members.count()
    }

    pub fn contains(&self, state: usize) -> bool {
        self.members.contains(state)
    }

    /// `|B ∩ C| / |C|` for a subset `B` of `X`.
    pub fn relative_measure(&self, bits: &Bitset) -> BigRational {
        BigRational::new(BigInt::from(self.members.intersection_count(bits)), BigInt::from(self.size()))
    }

    /// Exponent of the subgroup generated by the component's generators.
    pub fn generator_exponent(&self, sys: &CyclicProductSystem) -> u64 {
        self.generators.iter().fold(1, |acc, g| crate::modular::lcm(acc, sys.order_of(g)))
    }
}

fn scaled(sys: &CyclicProductSystem, k: u64) -> Vec<Vec<u64>> {
    sys.generators()
        .iter()
        .map(|g| g.iter().zip(sys.moduli()).map(|(&x, &q)| ((x as u128 * k as u128) % q as u128) as u64).collect())
        .collect()
}

/// Cosets of `<k g_1, ..., k g_d>` in increasing order of representative.
pub fn ergodic_components(sys: &CyclicProductSystem, k: u64) -> Result<Vec<ErgodicComponent>> {
    if !sys.is_ergodic() {
        return Err(Error::NotErgodic);
    }
    if k == 0 {
        return Err(Error::Precondition("k must be positive".into()));
    }
    let gens = scaled(sys, k);
    let subgroup = sys.subgroup(&gens);
    let h = subgroup.count();
    let mut assigned = Bitset::new(sys.size());
    let mut out = Vec::with_capacity(sys.size() / h);
    for rep in 0..sys.size() {
        if assigned.contains(rep) {
            continue;
        }
        let members = sys.translate(&subgroup, &sys.coords(rep));
        assigned.union_with(&members);
        out.push(ErgodicComponent { representative: rep, step: k, generators: gens.clone(), members });
    }
    let n = out.len() as u128;
    let d = sys.dim() as u32;
    if (k as u128).checked_pow(d).is_some_and(|bound| n > bound) {
        return Err(Error::Invariant(format!("{n} components exceeds k^d for k = {k}")));
    }
    if out.iter().any(|c| c.size() != h) || out.len() * h != sys.size() {
        return Err(Error::Invariant("components do not partition X evenly".into()));
    }
    Ok(out)
}

/// Components of the `T^k`-action that lie inside `parent`.
pub fn components_within(sys: &CyclicProductSystem, parent: &ErgodicComponent, k: u64) -> Result<Vec<ErgodicComponent>> {
    let total = parent
        .step
        .checked_mul(k)
        .ok_or_else(|| Error::bound("component step", parent.step as u128 * k as u128, u64::MAX))?;
    Ok(ergodic_components(sys, total)?.into_iter().filter(|c| parent.contains(c.representative)).collect())
}

/// `nu(A) = mu(A ∩ C) / mu(C)`.
pub fn component_measure_of(sys: &CyclicProductSystem, a: &GroupSet, component: &ErgodicComponent) -> Result<BigRational> {
    Ok(component.relative_measure(&a.to_bitset(sys)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::{One, Zero};

    #[test]
    fn component_examples() {
        let z6 = CyclicProductSystem::diagonal(vec![6]).unwrap();
        let c = ergodic_components(&z6, 2).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].members.iter().collect::<Vec<_>>(), vec![0, 2, 4]);
        assert_eq!(ergodic_components(&z6, 5).unwrap().len(), 1);
        let t = CyclicProductSystem::torus(2, 2).unwrap();
        let c = ergodic_components(&t, 2).unwrap();
        assert_eq!(c.len(), 4);
        assert!(c.iter().all(|c| c.size() == 1));
    }

    #[test]
    fn component_measures() {
        let z6 = CyclicProductSystem::diagonal(vec![6]).unwrap();
        let comps = ergodic_components(&z6, 2).unwrap();
        let full = GroupSet::full(&z6);
        for c in &comps {
            assert!(component_measure_of(&z6, &full, c).unwrap().is_one());
        }
        let evens = GroupSet::from_indices(&z6, [0, 2, 4]).unwrap();
        assert!(component_measure_of(&z6, &evens, &comps[0]).unwrap().is_one());
        let zero = GroupSet::from_indices(&z6, [0]).unwrap();
        assert!(component_measure_of(&z6, &zero, &comps[1]).unwrap().is_zero());
    }

    #[test]
    fn nested_components() {
        let sys = CyclicProductSystem::diagonal(vec![12]).unwrap();
        let top = &ergodic_components(&sys, 2).unwrap()[1];
        let inner = components_within(&sys, top, 3).unwrap();
        assert_eq!(inner.len(), 3);
        assert!(inner.iter().all(|c| c.members.iter().all(|x| top.contains(x))));
    }

    #[test]
    fn rejects_non_ergodic() {
        let sys = CyclicProductSystem::diagonal(vec![2, 4]).unwrap();
        assert_eq!(ergodic_components(&sys, 1), Err(Error::NotErgodic));
    }
}
