use rand::Rng;

/// Bit-packed occupation variables: bit 1 = occupied, bit 0 = empty.
///
/// Invariant: bits at positions >= n are zero, so derived equality and
/// hashing are consistent with site-wise comparison.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SpinConfig {
    n: usize,
    words: Vec<u64>,
}

fn word_count(n: usize) -> usize {
    n.div_ceil(64)
}

impl SpinConfig {
    /// All sites occupied.
    pub fn filled(n: usize) -> Self {
        let mut words = vec![u64::MAX; word_count(n)];
        Self::mask_tail(n, &mut words);
        SpinConfig { n, words }
    }

    /// All sites empty.
    pub fn vacant(n: usize) -> Self {
        SpinConfig {
            n,
            words: vec![0; word_count(n)],
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut cfg = Self::vacant(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                cfg.set(i, true);
            }
        }
        cfg
    }

    /// Each site independently empty with probability `q_empty`.
    pub fn sample<R: Rng>(n: usize, q_empty: f64, rng: &mut R) -> Self {
        let mut cfg = Self::vacant(n);
        for i in 0..n {
            if rng.gen::<f64>() >= q_empty {
                cfg.set(i, true);
            }
        }
        cfg
    }

    /// Low `n` bits of `state` as occupancies (site i = bit i). Needs n <= 64.
    pub fn from_state_index(n: usize, state: u64) -> Self {
        assert!(n <= 64);
        debug_assert!(n == 64 || state < (1u64 << n));
        SpinConfig {
            n,
            words: vec![state],
        }
    }

    /// Inverse of `from_state_index`. Needs n <= 64.
    pub fn state_index(&self) -> u64 {
        assert!(self.n <= 64);
        self.words[0]
    }

    fn mask_tail(n: usize, words: &mut [u64]) {
        let rem = n % 64;
        if rem != 0 {
            if let Some(last) = words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn occupied(&self, i: usize) -> bool {
        debug_assert!(i < self.n);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, occupied: bool) {
        debug_assert!(i < self.n);
        let (w, b) = (i / 64, i % 64);
        if occupied {
            self.words[w] |= 1u64 << b;
        } else {
            self.words[w] &= !(1u64 << b);
        }
    }

    #[inline]
    pub fn toggle(&mut self, i: usize) {
        debug_assert!(i < self.n);
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    /// Value-semantics flip: returns a copy with site `i` toggled.
    pub fn flipped(&self, i: usize) -> Self {
        let mut out = self.clone();
        out.toggle(i);
        out
    }

    pub fn count_occupied(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn count_empty(&self) -> usize {
        self.n - self.count_occupied()
    }

    pub fn is_all_occupied(&self) -> bool {
        self.count_occupied() == self.n
    }

    pub fn is_all_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// True iff every site occupied in `self` is also occupied in `other`
    /// (equivalently: self's empty set contains other's).
    pub fn occupied_subset_of(&self, other: &Self) -> bool {
        assert_eq!(self.n, other.n);
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    pub fn iter_empty(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(|&i| !self.occupied(i))
    }
}

impl std::fmt::Debug for SpinConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for i in 0..self.n {
            write!(f, "{}", if self.occupied(i) { '1' } else { '0' })?;
        }
        Ok(())
    }
}
