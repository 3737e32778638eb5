//! Finite sets of positive integers and integer windows.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{precondition, ParseError, Result};

/// A finite strictly increasing set of positive integers.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct FinSet(Vec<u32>);

impl FinSet {
    pub fn empty() -> Self {
        FinSet(Vec::new())
    }

    /// Validates strict increase and positivity.
    pub fn new(elements: Vec<u32>) -> Result<Self> {
        if elements.first() == Some(&0) {
            return Err(precondition!("set elements must be positive"));
        }
        if elements.windows(2).any(|w| w[0] >= w[1]) {
            return Err(precondition!("set elements must strictly increase"));
        }
        Ok(FinSet(elements))
    }

    /// Sorts and deduplicates; zero is still rejected.
    pub fn from_unsorted(mut elements: Vec<u32>) -> Result<Self> {
        elements.sort_unstable();
        elements.dedup();
        Self::new(elements)
    }

    pub(crate) fn from_sorted(elements: Vec<u32>) -> Self {
        debug_assert!(elements.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(elements.first() != Some(&0));
        FinSet(elements)
    }

    /// `{a, a+1, ..., b}`; empty when `a > b`.
    pub fn interval(a: u32, b: u32) -> Self {
        FinSet((a.max(1)..=b).collect())
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<u32> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn min_elem(&self) -> Option<u32> {
        self.0.first().copied()
    }

    /// Largest element, with the convention `max {} = 0`.
    pub fn max_or_zero(&self) -> u32 {
        self.0.last().copied().unwrap_or(0)
    }

    pub fn max_elem(&self) -> Option<u32> {
        self.0.last().copied()
    }

    pub fn contains(&self, n: u32) -> bool {
        self.0.binary_search(&n).is_ok()
    }

    pub fn is_subset(&self, other: &FinSet) -> bool {
        self.0.iter().all(|&x| other.contains(x))
    }

    /// `self < other` in the block order: `max self < min other`. Empty sets
    /// precede and follow everything.
    pub fn precedes(&self, other: &FinSet) -> bool {
        match (self.max_elem(), other.min_elem()) {
            (Some(a), Some(b)) => a < b,
            _ => true,
        }
    }

    pub fn intersect(&self, other: &FinSet) -> FinSet {
        FinSet(self.0.iter().copied().filter(|&x| other.contains(x)).collect())
    }

    pub fn union(&self, other: &FinSet) -> FinSet {
        let mut v: Vec<u32> = self.0.iter().chain(other.0.iter()).copied().collect();
        v.sort_unstable();
        v.dedup();
        FinSet(v)
    }

    pub fn minus(&self, other: &FinSet) -> FinSet {
        FinSet(self.0.iter().copied().filter(|&x| !other.contains(x)).collect())
    }

    pub fn with(&self, n: u32) -> FinSet {
        self.union(&FinSet(alloc::vec![n]))
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().copied()
    }

    /// The subset selected by the bits of `mask` (bit `i` keeps the `i`-th
    /// smallest element).
    pub fn select(&self, mask: u64) -> FinSet {
        FinSet(self.0.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &x)| x).collect())
    }

    /// Every subset, visited in lexicographic order of the sorted element
    /// lists (`{}`, `{a1}`, `{a1,a2}`, ...). Stops early when `f` returns
    /// `false`.
    pub fn for_each_subset_lex(&self, mut f: impl FnMut(&FinSet) -> bool) {
        fn rec(src: &[u32], start: usize, cur: &mut FinSet, f: &mut dyn FnMut(&FinSet) -> bool) -> bool {
            if !f(cur) {
                return false;
            }
            for i in start..src.len() {
                cur.0.push(src[i]);
                let go = rec(src, i + 1, cur, f);
                cur.0.pop();
                if !go {
                    return false;
                }
            }
            true
        }
        let mut cur = FinSet::empty();
        rec(&self.0, 0, &mut cur, &mut f);
    }
}

impl fmt::Display for FinSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", x)?;
        }
        f.write_str("}")
    }
}

/// Parses the CLI form `2,3,10,11` (braces optional, empty allowed).
impl FromStr for FinSet {
    type Err = ParseError;
    fn from_str(s: &str) -> core::result::Result<Self, ParseError> {
        let bad = || ParseError::FinSet(String::from(s));
        let body = s.trim().trim_start_matches('{').trim_end_matches('}').trim();
        if body.is_empty() {
            return Ok(FinSet::empty());
        }
        let v = body
            .split(',')
            .map(|t| t.trim().parse::<u32>().map_err(|_| bad()))
            .collect::<core::result::Result<Vec<_>, _>>()?;
        FinSet::new(v).map_err(|_| bad())
    }
}

/// Integer window `[lo, hi]`, `1 <= lo <= hi`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Window {
    pub lo: u32,
    pub hi: u32,
}

impl Window {
    pub fn new(lo: u32, hi: u32) -> Result<Self> {
        if lo == 0 || lo > hi {
            return Err(precondition!("window requires 1 <= lo <= hi, got {}:{}", lo, hi));
        }
        Ok(Window { lo, hi })
    }

    pub fn width(&self) -> u32 {
        self.hi - self.lo + 1
    }

    pub fn to_set(&self) -> FinSet {
        FinSet::interval(self.lo, self.hi)
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.lo, self.hi)
    }
}

/// Parses `lo:hi`.
impl FromStr for Window {
    type Err = ParseError;
    fn from_str(s: &str) -> core::result::Result<Self, ParseError> {
        let bad = || ParseError::Window(String::from(s));
        let (a, b) = s.split_once(':').ok_or_else(bad)?;
        let lo = a.trim().parse().map_err(|_| bad())?;
        let hi = b.trim().parse().map_err(|_| bad())?;
        Window::new(lo, hi).map_err(|_| bad())
    }
}
