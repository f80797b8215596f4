//! Fixed-length bitsets over `0..len`, with the cyclic shift-or used for
//! sumsets in `Z/qZ`.

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Bitset {
    len: usize,
    words: Vec<u64>,
}

impl Bitset {
    pub fn new(len: usize) -> Self {
        Bitset { len, words: vec![0; len.div_ceil(64)] }
    }

    pub fn full(len: usize) -> Self {
        let mut set = Bitset { len, words: vec![u64::MAX; len.div_ceil(64)] };
        set.trim();
        set
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(len: usize, indices: I) -> Self {
        let mut set = Bitset::new(len);
        for i in indices {
            set.insert(i);
        }
        set
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_full(&self) -> bool {
        self.count() == self.len
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        i < self.len && (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.words[i / 64] |= 1 << (i % 64);
    }

    #[inline]
    pub fn remove(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.words[i / 64] &= !(1 << (i % 64));
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + bit)
            })
        })
    }

    pub fn union_with(&mut self, other: &Bitset) {
        assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn intersect_with(&mut self, other: &Bitset) {
        assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn intersection_count(&self, other: &Bitset) -> usize {
        assert_eq!(self.len, other.len);
        self.words.iter().zip(&other.words).map(|(a, b)| (a & b).count_ones() as usize).sum()
    }

    pub fn complement(&self) -> Bitset {
        let mut out = Bitset { len: self.len, words: self.words.iter().map(|w| !w).collect() };
        out.trim();
        out
    }

    /// `self |= { (i + shift) mod len : i in other }`.
    pub fn or_rotated(&mut self, other: &Bitset, shift: usize) {
        assert_eq!(self.len, other.len);
        if self.len == 0 {
            return;
        }
        let shift = shift % self.len;
        // other[0 .. len-shift] lands on self[shift .. len]
        self.or_range(shift, other, 0, self.len - shift);
        // other[len-shift .. len] lands on self[0 .. shift]
        self.or_range(0, other, self.len - shift, shift);
    }

    /// Cyclic rotation by `shift` (element `i` moves to `i + shift mod len`).
    pub fn rotated(&self, shift: usize) -> Bitset {
        let mut out = Bitset::new(self.len);
        out.or_rotated(self, shift);
        out
    }

    fn or_range(&mut self, dst: usize, src: &Bitset, src_start: usize, count: usize) {
        let mut done = 0;
        while done < count {
            let d = dst + done;
            // Align writes to destination word boundaries.
            let room = 64 - d % 64;
            let take = room.min(count - done);
            let chunk = src.bits_at(src_start + done, take);
            self.words[d / 64] |= chunk << (d % 64);
            done += take;
        }
    }

    /// Up to 64 bits starting at `start`, low bit first.
    fn bits_at(&self, start: usize, count: usize) -> u64 {
        debug_assert!((1..=64).contains(&count));
        let wi = start / 64;
        let off = start % 64;
        let mut v = self.words[wi] >> off;
        if off != 0 && wi + 1 < self.words.len() {
            v |= self.words[wi + 1] << (64 - off);
        }
        if count < 64 {
            v &= (1u64 << count) - 1;
        }
        v
    }

    fn trim(&mut self) {
        let extra = self.words.len() * 64 - self.len;
        if extra > 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= u64::MAX >> extra;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn basic_membership() {
        let mut s = Bitset::new(130);
        s.insert(0);
        s.insert(64);
        s.insert(129);
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![0, 64, 129]);
        assert_eq!(s.count(), 3);
        s.remove(64);
        assert!(!s.contains(64));
        assert_eq!(Bitset::full(130).count(), 130);
        assert_eq!(s.complement().count(), 128);
    }

    proptest! {
        #[test]
        fn rotation_matches_naive(len in 1usize..300, shift in 0usize..600, bits in proptest::collection::vec(any::<bool>(), 300)) {
            let src = Bitset::from_indices(len, (0..len).filter(|&i| bits[i]));
            let fast = src.rotated(shift);
            let naive = Bitset::from_indices(len, src.iter().map(|i| (i + shift) % len));
            prop_assert_eq!(fast, naive);
        }
    }
}
