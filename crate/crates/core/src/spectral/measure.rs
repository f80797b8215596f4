use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_complex::Complex;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rustfft::FftPlanner;
use serde_json::{json, Value};

use super::components::ErgodicComponent;
use super::system::{CyclicProductSystem, GroupSet};
use crate::bitset::Bitset;
use crate::error::{Error, Result};
use crate::json;
use crate::modular::TorusRational;

/// Working tolerance for floating-point spectral masses.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Spectral measure of a set: finitely many atoms at rational frequencies.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralMeasureTable {
    dim: usize,
    entries: BTreeMap<TorusRational, f64>,
    set_measure: BigRational,
}

impl SpectralMeasureTable {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// All atoms, zero masses included, ordered by frequency.
    pub fn entries(&self) -> &BTreeMap<TorusRational, f64> {
        &self.entries
    }

    /// Exact measure of the underlying set (relative to its component).
    pub fn set_measure(&self) -> &BigRational {
        &self.set_measure
    }

    pub fn mass_at(&self, alpha: &TorusRational) -> f64 {
        self.entries.get(alpha).copied().unwrap_or(0.0)
    }

    pub fn zero_mass(&self) -> f64 {
        self.mass_at(&TorusRational::zero(self.dim))
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.values().sum()
    }

    /// `sigma(Rat(M))`: nonzero frequencies with denominator at most `M`.
    pub fn rat_mass(&self, m: u64) -> f64 {
        self.entries.iter().filter(|(a, _)| !a.is_zero() && a.denom() <= m).map(|(_, &s)| s).sum()
    }

    /// Mass of `{alpha : m alpha = 0}`, the zero atom included.
    pub fn mass_killed_by(&self, m: u64) -> f64 {
        self.entries.iter().filter(|(a, _)| m.is_multiple_of(a.denom())).map(|(_, &s)| s).sum()
    }

    /// `sigma(L_v^perp)`, the zero atom included.
    pub fn annihilator_mass(&self, v: &[i64]) -> f64 {
        self.entries.iter().filter(|(a, _)| a.annihilated_by(v)).map(|(_, &s)| s).sum()
    }

    /// `sigma(L_v^perp \ {0})`.
    pub fn line_mass(&self, v: &[i64]) -> f64 {
        self.entries.iter().filter(|(a, _)| !a.is_zero() && a.annihilated_by(v)).map(|(_, &s)| s).sum()
    }

    /// `sum_alpha sigma({alpha}) e(v · alpha)` (real part; the imaginary part cancels).
    pub fn reconstruct(&self, v: &[i64]) -> f64 {
        self.entries
            .iter()
            .map(|(a, &s)| s * (TAU * a.dot_numerator(v) as f64 / a.denom() as f64).cos())
            .sum()
    }

    /// Distinct denominators of atoms with mass above `floor`, ascending.
    pub fn denominators(&self, floor: f64) -> Vec<u64> {
        let mut d: Vec<u64> = self.entries.iter().filter(|(_, &s)| s > floor).map(|(a, _)| a.denom()).collect();
        d.sort_unstable();
        d.dedup();
        d
    }

    pub fn to_json(&self) -> Value {
        let atoms: Vec<Value> = self
            .entries
            .iter()
            .filter(|(_, &s)| s > 1e-15)
            .map(|(a, &s)| json!({ "frequency": a.coordinate_strings(), "denom": a.denom(), "mass": s }))
            .collect();
        json!({
            "set_measure": json::rational(&self.set_measure),
            "total_mass": self.total_mass(),
            "zero_mass": self.zero_mass(),
            "frequencies": self.entries.len(),
            "atoms": atoms,
            "tolerance": MASS_TOLERANCE,
        })
    }
}

/// Unnormalized DFT `F(c) = sum_x f(x) e(-c · x / q)` over `X`, one axis at a time.
pub(crate) fn dft(sys: &CyclicProductSystem, bits: &Bitset) -> Vec<Complex<f64>> {
    let n = sys.size();
    let mut data: Vec<Complex<f64>> = (0..n).map(|i| Complex::new(if bits.contains(i) { 1.0 } else { 0.0 }, 0.0)).collect();
    let mut planner = FftPlanner::<f64>::new();
    let moduli = sys.moduli();
    let mut stride = n;
    for &q in moduli {
        let q = q as usize;
        stride /= q;
        if q == 1 {
            continue;
        }
        let fft = planner.plan_fft_forward(q);
        let mut line = vec![Complex::new(0.0, 0.0); q];
        let block = q * stride;
        for outer in (0..n).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + j * stride];
                }
                fft.process(&mut line);
                for (j, v) in line.iter().enumerate() {
                    data[base + j * stride] = *v;
                }
            }
        }
    }
    data
}

/// Frequency numerators over `L = lcm(q_i)` of the character `c` w.r.t. generators `h`.
fn frequency_numerators(sys: &CyclicProductSystem, gens: &[Vec<u64>], c: &[u64], l: u64) -> Vec<u64> {
    gens.iter()
        .map(|h| {
            let s: u128 = c
                .iter()
                .zip(h)
                .zip(sys.moduli())
                .map(|((&ci, &hi), &q)| ci as u128 * hi as u128 * (l / q) as u128)
                .sum();
            (s % l as u128) as u64
        })
        .collect()
}

/// Spectral measure of `A` for an ergodic system.
pub fn spectral_measure(sys: &CyclicProductSystem, a: &GroupSet) -> Result<SpectralMeasureTable> {
    let whole = ErgodicComponent::whole(sys)?;
    spectral_measure_on(sys, &whole, a)
}

/// Spectral measure of `A ∩ C` for the sub-action on a component `C`, with respect
/// to the normalized measure on `C`. Characters of `X` that agree on the component's
/// generators restrict to the same eigenfunction up to a unimodular constant; their
/// masses are averaged into one atom.
pub fn spectral_measure_on(sys: &CyclicProductSystem, comp: &ErgodicComponent, a: &GroupSet) -> Result<SpectralMeasureTable> {
    let bits = a.to_bitset(sys)?;
    let mut restricted = bits.clone();
    restricted.intersect_with(&comp.members);
    let set_measure = comp.relative_measure(&bits);
    let transform = dft(sys, &restricted);
    let l = sys.exponent();
    let c_size = comp.size() as f64;

    let mut classes: BTreeMap<Vec<u64>, (f64, u64)> = BTreeMap::new();
    for (idx, value) in transform.iter().enumerate() {
        let key = frequency_numerators(sys, &comp.generators, &sys.coords(idx), l);
        let e = classes.entry(key).or_insert((0.0, 0));
        e.0 += value.norm_sqr();
        e.1 += 1;
    }
    if classes.len() != comp.size() {
        return Err(Error::Invariant(format!(
            "{} eigenvalue classes on a component of size {}; eigenspaces are not one-dimensional",
            classes.len(),
            comp.size()
        )));
    }
    let entries: BTreeMap<TorusRational, f64> = classes
        .into_iter()
        .map(|(num, (sum, count))| (TorusRational::over_common(&num, l), sum / count as f64 / (c_size * c_size)))
        .collect();
    let table = SpectralMeasureTable { dim: comp.generators.len(), entries, set_measure };

    let mu = table.set_measure.to_f64().unwrap_or(f64::NAN);
    if (table.total_mass() - mu).abs() > MASS_TOLERANCE {
        return Err(Error::Invariant(format!("total spectral mass {} differs from measure {mu}", table.total_mass())));
    }
    if (table.zero_mass() - mu * mu).abs() > MASS_TOLERANCE {
        return Err(Error::Invariant(format!("zero atom {} differs from squared measure {}", table.zero_mass(), mu * mu)));
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modular::TorusRational;
    use num_traits::ToPrimitive;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Character-sum oracle: `|<1_A, chi_c>|^2` summed by frequency, straight from the definition.
    fn naive_table(sys: &CyclicProductSystem, bits: &Bitset) -> BTreeMap<TorusRational, f64> {
        let n = sys.size();
        let l = sys.exponent();
        let mut out = BTreeMap::new();
        for c_idx in 0..n {
            let c = sys.coords(c_idx);
            let mut acc = Complex::new(0.0, 0.0);
            for x_idx in bits.iter() {
                let x = sys.coords(x_idx);
                let phase: f64 = c.iter().zip(&x).zip(sys.moduli()).map(|((&ci, &xi), &q)| (ci * xi % q) as f64 / q as f64).sum();
                acc += Complex::from_polar(1.0, -TAU * phase);
            }
            let num = frequency_numerators(sys, sys.generators(), &c, l);
            *out.entry(TorusRational::over_common(&num, l)).or_insert(0.0) += acc.norm_sqr() / (n * n) as f64;
        }
        out
    }

    fn r(p: i64, q: i64) -> TorusRational {
        TorusRational::reduce(&[(p, q)]).unwrap()
    }

    #[test]
    fn full_set_is_a_single_atom() {
        let sys = CyclicProductSystem::torus(3, 2).unwrap();
        let t = spectral_measure(&sys, &GroupSet::full(&sys)).unwrap();
        assert!((t.zero_mass() - 1.0).abs() < 1e-12);
        assert!(t.entries().iter().filter(|(a, _)| !a.is_zero()).all(|(_, &s)| s.abs() < 1e-12));
    }

    #[test]
    fn singleton_is_uniform() {
        let q = 7;
        let sys = CyclicProductSystem::diagonal(vec![q]).unwrap();
        let t = spectral_measure(&sys, &GroupSet::from_indices(&sys, [0]).unwrap()).unwrap();
        assert_eq!(t.entries().len(), q as usize);
        for &s in t.entries().values() {
            assert!((s - 1.0 / (q * q) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn two_point_set_in_z4() {
        let sys = CyclicProductSystem::diagonal(vec![4]).unwrap();
        let t = spectral_measure(&sys, &GroupSet::from_indices(&sys, [0, 2]).unwrap()).unwrap();
        assert!((t.mass_at(&r(0, 1)) - 0.25).abs() < 1e-12);
        assert!((t.mass_at(&r(1, 2)) - 0.25).abs() < 1e-12);
        assert!(t.mass_at(&r(1, 4)).abs() < 1e-12);
        assert!(t.mass_at(&r(3, 4)).abs() < 1e-12);
        assert_eq!(t.rat_mass(1), 0.0);
        assert!((t.rat_mass(2) - 0.25).abs() < 1e-12);
        assert!((t.rat_mass(4) - (0.5 - 0.25)).abs() < 1e-12);
    }

    #[test]
    fn fft_matches_character_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let systems = [
            CyclicProductSystem::diagonal(vec![3, 5]).unwrap(),
            CyclicProductSystem::torus(4, 2).unwrap(),
            CyclicProductSystem::new(vec![6, 4], vec![vec![1, 0], vec![5, 3]]).unwrap(),
            CyclicProductSystem::new(vec![12], vec![vec![3], vec![4]]).unwrap(),
        ];
        for sys in &systems {
            assert!(sys.is_ergodic());
            let bits = Bitset::from_indices(sys.size(), (0..sys.size()).filter(|_| rng.gen_bool(0.4)));
            let fast = spectral_measure(sys, &GroupSet::Explicit(bits.clone())).unwrap();
            let slow = naive_table(sys, &bits);
            assert_eq!(fast.entries().len(), slow.len());
            for (a, s) in &slow {
                assert!((fast.mass_at(a) - s).abs() < 1e-10, "{a}");
            }
        }
    }

    #[test]
    fn component_spectrum_matches_restricted_system() {
        // Evens of Z/12 under T^2 behave like Z/6 under T
        let big = CyclicProductSystem::diagonal(vec![12]).unwrap();
        let comp = &super::super::components::ergodic_components(&big, 2).unwrap()[0];
        let a = GroupSet::from_indices(&big, [0, 2, 6, 7]).unwrap();
        let on = spectral_measure_on(&big, comp, &a).unwrap();
        let small = CyclicProductSystem::diagonal(vec![6]).unwrap();
        let b = GroupSet::from_indices(&small, [0, 1, 3]).unwrap();
        let direct = spectral_measure(&small, &b).unwrap();
        assert_eq!(on.entries().len(), direct.entries().len());
        for (alpha, s) in direct.entries() {
            assert!((on.mass_at(alpha) - s).abs() < 1e-12, "{alpha}");
        }
        assert_eq!(on.set_measure().to_f64().unwrap(), 0.5);
    }

    #[test]
    fn non_ergodic_rejected() {
        let sys = CyclicProductSystem::diagonal(vec![2, 2]).unwrap();
        assert_eq!(spectral_measure(&sys, &GroupSet::full(&sys)), Err(Error::NotErgodic));
    }
}
