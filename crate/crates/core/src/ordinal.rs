//! Countable ordinals below epsilon_0 in Cantor normal form.
//!
//! An [`Ordinal`] is the sum `w^e_1*c_1 + ... + w^e_k*c_k` with strictly
//! decreasing exponents `e_1 > ... > e_k` and coefficients `c_i >= 1`. The
//! empty sum is zero. Equality of values coincides with equality of
//! representations.
//!
//! The Schreier hierarchy needs one thing beyond comparison: for every
//! ordinal `a >= 1` a sequence of successor ordinals `(a_n + 1)`. For a
//! successor `a` it is constantly `a`; for a limit `a` it is `a[n] + 1`
//! where `a[n]` is the canonical fundamental sequence
//!
//! ```text
//! (b + w^(d+1))[n] = b + w^d * n
//! (b + w^l)[n]     = b + w^(l[n])      (l a limit)
//! ```

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use crate::error::{precondition, ParseError, Result};

/// Default limit on exponent nesting accepted by the parser.
pub const DEFAULT_MAX_DEPTH: usize = 8;

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Term {
    pub exp: Ordinal,
    pub coeff: u64,
}

#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Ordinal {
    terms: Vec<Term>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Class {
    Zero,
    Successor(Ordinal),
    Limit,
}

impl Ordinal {
    pub fn zero() -> Self {
        Ordinal { terms: Vec::new() }
    }

    pub fn nat(n: u64) -> Self {
        if n == 0 {
            Self::zero()
        } else {
            Ordinal { terms: alloc::vec![Term { exp: Self::zero(), coeff: n }] }
        }
    }

    pub fn omega() -> Self {
        Self::omega_pow(Self::nat(1))
    }

    /// `w^exp`.
    pub fn omega_pow(exp: Ordinal) -> Self {
        Self::omega_pow_times(exp, 1)
    }

    /// `w^exp * coeff` (zero when `coeff == 0`).
    pub fn omega_pow_times(exp: Ordinal, coeff: u64) -> Self {
        if coeff == 0 {
            return Self::zero();
        }
        Ordinal { terms: alloc::vec![Term { exp, coeff }] }
    }

    /// Builds an ordinal from CNF terms, rejecting non-canonical input.
    pub fn from_terms(terms: Vec<Term>) -> Result<Self> {
        for w in terms.windows(2) {
            if w[0].exp <= w[1].exp {
                return Err(precondition!("CNF exponents must strictly decrease"));
            }
        }
        if terms.iter().any(|t| t.coeff == 0) {
            return Err(precondition!("CNF coefficients must be positive"));
        }
        Ok(Ordinal { terms })
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// `Some(n)` when the ordinal is finite.
    pub fn as_nat(&self) -> Option<u64> {
        match self.terms.as_slice() {
            [] => Some(0),
            [t] if t.exp.is_zero() => Some(t.coeff),
            _ => None,
        }
    }

    /// Exponent nesting depth: 0 for naturals, 1 for `w*k + n`, 2 for `w^w`.
    pub fn depth(&self) -> usize {
        self.terms.iter().map(|t| if t.exp.is_zero() { 0 } else { 1 + t.exp.depth() }).max().unwrap_or(0)
    }

    /// Ordinal sum `self + other` (left summands below the leading exponent
    /// of `other` are absorbed).
    pub fn add(&self, other: &Ordinal) -> Ordinal {
        let Some(lead) = other.terms.first() else {
            return self.clone();
        };
        let mut terms: Vec<Term> = Vec::new();
        for t in &self.terms {
            match t.exp.cmp(&lead.exp) {
                Ordering::Greater => terms.push(t.clone()),
                Ordering::Equal => {
                    terms.push(Term { exp: t.exp.clone(), coeff: t.coeff + lead.coeff });
                    terms.extend(other.terms[1..].iter().cloned());
                    return Ordinal { terms };
                }
                Ordering::Less => break,
            }
        }
        terms.extend(other.terms.iter().cloned());
        Ordinal { terms }
    }

    pub fn add_nat(&self, n: u64) -> Ordinal {
        self.add(&Ordinal::nat(n))
    }

    pub fn succ(&self) -> Ordinal {
        self.add_nat(1)
    }

    pub fn classify(&self) -> Class {
        match self.terms.last() {
            None => Class::Zero,
            Some(last) if last.exp.is_zero() => {
                let mut terms = self.terms.clone();
                let l = terms.last_mut().unwrap();
                if l.coeff == 1 {
                    terms.pop();
                } else {
                    l.coeff -= 1;
                }
                Class::Successor(Ordinal { terms })
            }
            Some(_) => Class::Limit,
        }
    }

    pub fn is_limit(&self) -> bool {
        matches!(self.classify(), Class::Limit)
    }

    /// Canonical fundamental sequence `self[n]`; `None` unless `self` is a
    /// limit.
    pub fn fundamental(&self, n: u64) -> Option<Ordinal> {
        let last = self.terms.last()?;
        if last.exp.is_zero() {
            return None;
        }
        let mut base = self.terms.clone();
        let l = base.last_mut().unwrap();
        if l.coeff == 1 {
            base.pop();
        } else {
            l.coeff -= 1;
        }
        let base = Ordinal { terms: base };
        let tail = match last.exp.classify() {
            Class::Successor(d) => Ordinal::omega_pow_times(d, n),
            Class::Limit => Ordinal::omega_pow(last.exp.fundamental(n)?),
            Class::Zero => unreachable!(),
        };
        Some(base.add(&tail))
    }

    /// The term `a_n + 1` of the associated successor sequence.
    pub fn assoc(&self, n: u64) -> Result<Ordinal> {
        if n == 0 {
            return Err(precondition!("associated sequence is indexed from 1"));
        }
        match self.classify() {
            Class::Zero => Err(precondition!("0 has no associated sequence")),
            Class::Successor(_) => Ok(self.clone()),
            Class::Limit => Ok(self.fundamental(n).unwrap().succ()),
        }
    }

    /// `a_n`, i.e. the predecessor of [`Ordinal::assoc`].
    pub fn assoc_pred(&self, n: u64) -> Result<Ordinal> {
        match self.assoc(n)?.classify() {
            Class::Successor(p) => Ok(p),
            _ => unreachable!("assoc always yields a successor"),
        }
    }

    pub fn parse_with_depth(s: &str, max_depth: usize) -> core::result::Result<Self, ParseError> {
        let bad = || ParseError::Ordinal(String::from(s));
        let mut p = Parser { src: s.as_bytes(), pos: 0 };
        p.skip_ws();
        let o = p.sum().ok_or_else(bad)?;
        p.skip_ws();
        if p.pos != p.src.len() || o.depth() > max_depth {
            return Err(bad());
        }
        Ok(o)
    }
}

impl Ord for Ordinal {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.terms.iter().zip(other.terms.iter()) {
            let c = a.exp.cmp(&b.exp).then(a.coeff.cmp(&b.coeff));
            if c != Ordering::Equal {
                return c;
            }
        }
        self.terms.len().cmp(&other.terms.len())
    }
}

impl PartialOrd for Ordinal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            if t.exp.is_zero() {
                write!(f, "{}", t.coeff)?;
                continue;
            }
            f.write_str("w")?;
            if t.exp != Ordinal::nat(1) {
                let e = t.exp.to_string();
                if e.contains(['+', '*', '^']) {
                    write!(f, "^({})", e)?;
                } else {
                    write!(f, "^{}", e)?;
                }
            }
            if t.coeff > 1 {
                write!(f, "*{}", t.coeff)?;
            }
        }
        Ok(())
    }
}

impl FromStr for Ordinal {
    type Err = ParseError;
    fn from_str(s: &str) -> core::result::Result<Self, ParseError> {
        Ordinal::parse_with_depth(s, DEFAULT_MAX_DEPTH)
    }
}

impl From<u64> for Ordinal {
    fn from(n: u64) -> Self {
        Ordinal::nat(n)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn nat(&mut self) -> Option<u64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return None;
        }
        core::str::from_utf8(&self.src[start..self.pos]).ok()?.parse().ok()
    }

    fn sum(&mut self) -> Option<Ordinal> {
        let mut acc = self.term()?;
        while self.eat(b'+') {
            acc = acc.add(&self.term()?);
        }
        Some(acc)
    }

    fn term(&mut self) -> Option<Ordinal> {
        if self.eat(b'w') {
            let exp = if self.eat(b'^') {
                if self.eat(b'(') {
                    let e = self.sum()?;
                    if !self.eat(b')') {
                        return None;
                    }
                    e
                } else if self.eat(b'w') {
                    Ordinal::omega()
                } else {
                    Ordinal::nat(self.nat()?)
                }
            } else {
                Ordinal::nat(1)
            };
            let coeff = if self.eat(b'*') { self.nat()? } else { 1 };
            Some(Ordinal::omega_pow_times(exp, coeff))
        } else {
            self.nat().map(Ordinal::nat)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn o(s: &str) -> Ordinal {
        s.parse().unwrap()
    }

    #[test]
    fn compare_examples() {
        assert_eq!(o("0").cmp(&o("1")), Ordering::Less);
        assert_eq!(o("w").cmp(&o("w")), Ordering::Equal);
        assert_eq!(o("w+3").cmp(&o("w*2")), Ordering::Less);
        assert!(o("w^w") > o("w^5*100+3"));
    }

    #[test]
    fn classify_examples() {
        assert_eq!(o("0").classify(), Class::Zero);
        assert_eq!(o("5").classify(), Class::Successor(o("4")));
        assert_eq!(o("w^2").classify(), Class::Limit);
        assert_eq!(o("w+1").classify(), Class::Successor(o("w")));
    }

    #[test]
    fn assoc_examples() {
        for n in 1..6 {
            assert_eq!(o("3").assoc(n).unwrap(), o("3"));
        }
        assert_eq!(o("w").assoc(4).unwrap(), o("5"));
        assert_eq!(o("w^2").assoc(3).unwrap(), o("w*3+1"));
        assert_eq!(o("w*2").assoc(2).unwrap(), o("w+3"));
        assert_eq!(o("w^w").assoc(2).unwrap(), o("w^2+1"));
        assert!(o("0").assoc(1).is_err());
        assert!(o("w").assoc(0).is_err());
    }

    #[test]
    fn text_syntax() {
        for s in ["0", "3", "w", "w+1", "w*2", "w^2", "w^w", "w^(w+1)*3+w*2+5", "w^(w^2)"] {
            assert_eq!(o(s).to_string(), s);
        }
        assert_eq!(o("1+w"), o("w"));
        assert_eq!(o("w + w"), o("w*2"));
        for s in ["", "w^", "w*", "(w)", "w^(w", "x", "w^w^2"] {
            assert!(s.parse::<Ordinal>().is_err(), "{s}");
        }
        assert!(Ordinal::parse_with_depth("w^(w^(w))", 2).is_err());
        assert!(Ordinal::parse_with_depth("w^(w^(w))", 3).is_ok());
    }

    pub(crate) fn arb_ordinal() -> impl Strategy<Value = Ordinal> {
        let leaf = (0u64..5).prop_map(Ordinal::nat);
        leaf.prop_recursive(2, 16, 3, |inner| {
            proptest::collection::vec((inner, 1u64..4), 1..4).prop_map(|ts| {
                ts.into_iter().fold(Ordinal::zero(), |acc, (e, c)| acc.add(&Ordinal::omega_pow_times(e, c)))
            })
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(a in arb_ordinal()) {
            prop_assert_eq!(a.to_string().parse::<Ordinal>().unwrap(), a);
        }

        #[test]
        fn successor_round_trip(a in arb_ordinal()) {
            if let Class::Successor(p) = a.classify() {
                prop_assert_eq!(p.succ(), a);
            }
        }

        #[test]
        fn assoc_is_increasing_successor_below_limit(a in arb_ordinal(), n in 1u64..6) {
            if a.is_limit() {
                let x = a.assoc(n).unwrap();
                let y = a.assoc(n + 1).unwrap();
                prop_assert!(matches!(x.classify(), Class::Successor(_)));
                prop_assert!(x < y);
                prop_assert!(x < a);
            }
        }
    }

    #[test]
    fn total_order_on_sample() {
        use proptest::strategy::ValueTree;
        use proptest::test_runner::TestRunner;
        let mut runner = TestRunner::deterministic();
        let sample: Vec<Ordinal> = (0..1000).map(|_| arb_ordinal().new_tree(&mut runner).unwrap().current()).collect();
        for a in sample.iter().take(120) {
            for b in sample.iter().take(120) {
                assert_eq!(a.cmp(b), b.cmp(a).reverse());
                assert_eq!(a.cmp(b) == Ordering::Equal, a == b);
                for c in sample.iter().take(40) {
                    if a < b && b < c {
                        assert!(a < c);
                    }
                }
            }
        }
    }
}
