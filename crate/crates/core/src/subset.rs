//! Subsets of a small ground set of items, stored as bitmasks.
//!
//! Items are 0-based inside the library. Every external form (JSON, text
//! dumps, `Display`) uses sorted 1-based indices.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest ground set a [`Subset`] can address.
pub const MAX_ITEMS: usize = 64;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Subset(u64);

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    pub fn from_mask(mask: u64) -> Self {
        Subset(mask)
    }

    /// The full set `{0, .., n-1}`.
    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_ITEMS);
        if n == MAX_ITEMS {
            Subset(u64::MAX)
        } else {
            Subset((1u64 << n) - 1)
        }
    }

    pub fn singleton(item: usize) -> Self {
        Subset(1u64 << item)
    }

    pub fn from_items<I: IntoIterator<Item = usize>>(items: I) -> Self {
        Subset(items.into_iter().fold(0, |m, i| m | (1u64 << i)))
    }

    /// Builds a subset from 1-based indices, checking each against `n`.
    pub fn from_one_based(indices: &[usize], n: usize) -> Result<Self> {
        let mut mask = 0u64;
        for &i in indices {
            if i == 0 || i > n {
                return Err(Error::IndexOutOfRange { index: i, n });
            }
            mask |= 1u64 << (i - 1);
        }
        Ok(Subset(mask))
    }

    pub fn mask(self) -> u64 {
        self.0
    }

    /// Position of this subset in a dense `2^n` table.
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn contains(self, item: usize) -> bool {
        item < MAX_ITEMS && self.0 >> item & 1 == 1
    }

    pub fn insert(self, item: usize) -> Self {
        Subset(self.0 | (1u64 << item))
    }

    pub fn remove(self, item: usize) -> Self {
        Subset(self.0 & !(1u64 << item))
    }

    pub fn union(self, other: Subset) -> Self {
        Subset(self.0 | other.0)
    }

    pub fn intersection(self, other: Subset) -> Self {
        Subset(self.0 & other.0)
    }

    pub fn difference(self, other: Subset) -> Self {
        Subset(self.0 & !other.0)
    }

    pub fn symmetric_difference(self, other: Subset) -> Self {
        Subset(self.0 ^ other.0)
    }

    /// Complement within `{0, .., n-1}`.
    pub fn complement(self, n: usize) -> Self {
        Subset::full(n).difference(self)
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset_of(self, other: Subset) -> bool {
        self.0 & !other.0 == 0
    }

    /// Whether every item lies in `{0, .., n-1}`.
    pub fn within(self, n: usize) -> bool {
        self.is_subset_of(Subset::full(n))
    }

    pub fn items(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let i = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(i)
            }
        })
    }

    pub fn one_based(self) -> Vec<usize> {
        self.items().map(|i| i + 1).collect()
    }

    /// All `2^n` subsets of `{0, .., n-1}` in mask order.
    pub fn all(n: usize) -> impl Iterator<Item = Subset> {
        assert!(n < MAX_ITEMS, "cannot enumerate 2^{n} subsets");
        (0..1u64 << n).map(Subset)
    }

    /// All subsets of `{0, .., n-1}` with exactly `size` items, in mask order.
    pub fn of_size(n: usize, size: usize) -> impl Iterator<Item = Subset> {
        Subset::all(n).filter(move |s| s.len() == size)
    }

    /// `self <=_lex other`: the largest item of the symmetric difference
    /// belongs to `other` (trivially true when the sets are equal).
    ///
    /// This coincides with comparing the masks as integers.
    pub fn lex_le(self, other: Subset) -> bool {
        self.lex_cmp(other) != Ordering::Greater
    }

    pub fn lex_cmp(self, other: Subset) -> Ordering {
        self.0.cmp(&other.0)
    }
}

/// Total order by [`Subset::lex_cmp`].
impl Ord for Subset {
    fn cmp(&self, other: &Self) -> Ordering {
        self.lex_cmp(*other)
    }
}

impl PartialOrd for Subset {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, i) in self.items().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for Subset {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.one_based().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Subset {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let indices = Vec::<usize>::deserialize(d)?;
        Subset::from_one_based(&indices, MAX_ITEMS).map_err(serde::de::Error::custom)
    }
}
