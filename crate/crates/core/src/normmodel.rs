//! Schreier-space and Tsirelson-type norms on finitely supported vectors,
//! their norming points, and asymptotic-l1 checks.
//!
//! Both models are 1-unconditional, so a non-negative combination of the
//! functions `f_n = |e_n|` on the norming set `K` has the same norm as the
//! coefficient vector itself. Everything here works on absolute values.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_traits::{One, Signed, Zero};
use spin::RwLock;

use crate::budget::Budget;
use crate::error::{precondition, Error, ParseError, Result};
use crate::finset::{FinSet, Window};
use crate::ordinal::{Class, Ordinal};
use crate::rational::{parse_q, q, Q};
use crate::schreier::{self, EnumMode};

/// A finitely supported vector `sum x_i e_i`; only nonzero entries are stored.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct SuppVec(BTreeMap<u32, Q>);

impl SuppVec {
    pub fn zero() -> Self {
        SuppVec(BTreeMap::new())
    }

    /// Builds from `(index, coefficient)` pairs; zero coefficients are
    /// dropped, index 0 and repeated indices are rejected.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, Q)>) -> Result<Self> {
        let mut m = BTreeMap::new();
        for (i, c) in pairs {
            if i == 0 {
                return Err(precondition!("vector indices start at 1"));
            }
            if m.contains_key(&i) {
                return Err(precondition!("index {} given twice", i));
            }
            if !c.is_zero() {
                m.insert(i, c);
            }
        }
        Ok(SuppVec(m))
    }

    pub fn unit(n: u32) -> Self {
        let mut m = BTreeMap::new();
        m.insert(n, Q::one());
        SuppVec(m)
    }

    /// `c * 1_F`.
    pub fn indicator(f: &FinSet, c: &Q) -> Self {
        if c.is_zero() {
            return SuppVec::zero();
        }
        SuppVec(f.iter().map(|i| (i, c.clone())).collect())
    }

    pub fn get(&self, n: u32) -> Q {
        self.0.get(&n).cloned().unwrap_or_else(Q::zero)
    }

    pub fn support(&self) -> FinSet {
        FinSet::from_sorted(self.0.keys().copied().collect())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &Q)> + '_ {
        self.0.iter().map(|(&i, c)| (i, c))
    }

    pub fn min_index(&self) -> Option<u32> {
        self.0.keys().next().copied()
    }

    pub fn max_index(&self) -> Option<u32> {
        self.0.keys().next_back().copied()
    }

    /// `x | J`.
    pub fn restrict(&self, j: &FinSet) -> SuppVec {
        SuppVec(self.0.iter().filter(|(i, _)| j.contains(**i)).map(|(&i, c)| (i, c.clone())).collect())
    }

    pub fn scale(&self, c: &Q) -> SuppVec {
        if c.is_zero() {
            return SuppVec::zero();
        }
        SuppVec(self.0.iter().map(|(&i, x)| (i, x * c)).collect())
    }

    pub fn add(&self, other: &SuppVec) -> SuppVec {
        let mut m = self.0.clone();
        for (&i, c) in &other.0 {
            let v = m.remove(&i).unwrap_or_else(Q::zero) + c;
            if !v.is_zero() {
                m.insert(i, v);
            }
        }
        SuppVec(m)
    }

    pub fn abs(&self) -> SuppVec {
        SuppVec(self.0.iter().map(|(&i, c)| (i, c.abs())).collect())
    }

    pub fn is_nonneg(&self) -> bool {
        self.0.values().all(|c| !c.is_negative())
    }

    pub fn sup_norm(&self) -> Q {
        self.0.values().map(|c| c.abs()).max().unwrap_or_else(Q::zero)
    }

    pub fn l1_norm(&self) -> Q {
        self.0.values().map(|c| c.abs()).sum()
    }

    fn abs_entries(&self) -> Vec<(u32, Q)> {
        self.0.iter().map(|(&i, c)| (i, c.abs())).collect()
    }
}

impl fmt::Display for SuppVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (i, c)) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}:{}", i, c)?;
        }
        Ok(())
    }
}

/// Parses the CLI form `3:1,4:1/2,5:-1`.
impl FromStr for SuppVec {
    type Err = ParseError;
    fn from_str(s: &str) -> core::result::Result<Self, ParseError> {
        let bad = || ParseError::Vector(String::from(s));
        let s = s.trim();
        if s.is_empty() {
            return Ok(SuppVec::zero());
        }
        let mut pairs = Vec::new();
        for part in s.split(',') {
            let (i, c) = part.split_once(':').ok_or_else(bad)?;
            let i: u32 = i.trim().parse().map_err(|_| bad())?;
            pairs.push((i, parse_q(c).map_err(|_| bad())?));
        }
        SuppVec::from_pairs(pairs).map_err(|_| bad())
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum ModelKind {
    SchreierSpace { alpha: Ordinal },
    Tsirelson { theta: Q, alpha: Ordinal },
}

/// A concrete norm together with its declared asymptotic-l1 constant.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct SpaceModel {
    pub kind: ModelKind,
    /// Declared lower bound `C`; checked by searches, never assumed.
    pub a1_constant: Q,
}

impl SpaceModel {
    pub fn schreier(alpha: Ordinal) -> Self {
        SpaceModel { kind: ModelKind::SchreierSpace { alpha }, a1_constant: q(1, 2) }
    }

    pub fn tsirelson(theta: Q, alpha: Ordinal) -> Result<Self> {
        if !(theta > Q::zero() && theta < Q::one()) {
            return Err(precondition!("theta must lie in (0,1), got {}", theta));
        }
        Ok(SpaceModel { a1_constant: theta.clone(), kind: ModelKind::Tsirelson { theta, alpha } })
    }

    /// `T(1/2, S_1)`.
    pub fn tsirelson_default() -> Self {
        SpaceModel::tsirelson(q(1, 2), Ordinal::nat(1)).unwrap()
    }

    pub fn alpha(&self) -> &Ordinal {
        match &self.kind {
            ModelKind::SchreierSpace { alpha } | ModelKind::Tsirelson { alpha, .. } => alpha,
        }
    }

    pub fn is_tsirelson(&self) -> bool {
        matches!(self.kind, ModelKind::Tsirelson { .. })
    }
}

impl fmt::Display for SpaceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ModelKind::SchreierSpace { alpha } => write!(f, "schreier(alpha={})", alpha),
            ModelKind::Tsirelson { theta, alpha } => write!(f, "tsirelson(theta={}, alpha={})", theta, alpha),
        }
    }
}

/// `||x||` in the given model, exact.
pub fn norm(model: &SpaceModel, x: &SuppVec) -> Q {
    let e = x.abs_entries();
    match &model.kind {
        ModelKind::SchreierSpace { alpha } => schreier_norm(alpha, &e),
        ModelKind::Tsirelson { theta, alpha } => tsirelson_norm(theta, alpha, &e),
    }
}

// ---------------------------------------------------------------------------
// Schreier-space norm: max over F in S_alpha of sum_{i in F} |x_i|.

fn schreier_norm(alpha: &Ordinal, e: &[(u32, Q)]) -> Q {
    let mut memo = BTreeMap::new();
    sch_best(alpha, e, 0, e.len(), &mut memo)
}

/// Best `S_1` sum inside `e[i..j]`: some start `s` plus the `idx(s) - 1`
/// largest later entries. Once `idx(s) - 1` covers the whole tail the
/// suffix sum from `s` dominates every later start, so the scan stops.
fn s1_best(e: &[(u32, Q)], i: usize, j: usize) -> Q {
    let mut best = Q::zero();
    for s in i..j {
        if e[s].0 as usize > j - s - 1 {
            let v: Q = e[s..j].iter().map(|(_, c)| c).sum();
            return if v > best { v } else { best };
        }
        let mut rest: Vec<&Q> = e[s + 1..j].iter().map(|(_, c)| c).collect();
        rest.sort_unstable_by(|a, b| b.cmp(a));
        let take = (e[s].0 as usize - 1).min(rest.len());
        let v: Q = rest[..take].iter().copied().sum::<Q>() + &e[s].1;
        if v > best {
            best = v;
        }
    }
    best
}

fn sch_best(alpha: &Ordinal, e: &[(u32, Q)], i: usize, j: usize, memo: &mut BTreeMap<(Ordinal, usize, usize), Q>) -> Q {
    if i >= j {
        return Q::zero();
    }
    match alpha.as_nat() {
        Some(0) => return e[i..j].iter().map(|(_, c)| c.clone()).max().unwrap(),
        Some(1) => return s1_best(e, i, j),
        _ => {}
    }
    let key = (alpha.clone(), i, j);
    if let Some(v) = memo.get(&key) {
        return v.clone();
    }
    let res = match alpha.classify() {
        Class::Successor(z) => {
            // F = F_1 < ... < F_n with n <= min F_1: cut e[s..j] into at most
            // idx(s) consecutive groups and take the best S_z set in each.
            let mut best = Q::zero();
            for s in i..j {
                let cap = (e[s].0 as usize).min(j - s);
                // h[p] = best over e[p..j] with at most r groups
                let mut h: Vec<Q> = alloc::vec![Q::zero(); j - s + 1];
                for _ in 0..cap {
                    let mut next = h.clone();
                    for p in (s..j).rev() {
                        for qq in p + 1..=j {
                            let v = sch_best(&z, e, p, qq, memo) + &h[qq - s];
                            if v > next[p - s] {
                                next[p - s] = v;
                            }
                        }
                    }
                    h = next;
                }
                if h[0] > best {
                    best = h[0].clone();
                }
            }
            best
        }
        Class::Limit => {
            let mut best = Q::zero();
            let top = e[j - 1].0;
            let mut start = i;
            for n in 1..=top {
                while start < j && e[start].0 < n {
                    start += 1;
                }
                let level = alpha.assoc(u64::from(n)).unwrap();
                let v = sch_best(&level, e, start, j, memo);
                if v > best {
                    best = v;
                }
            }
            best
        }
        Class::Zero => unreachable!(),
    };
    memo.insert(key, res.clone());
    res
}

/// The lexicographically least `F in S_alpha`, `F` inside the support,
/// attaining the Schreier norm.
fn schreier_norming_set(alpha: &Ordinal, x: &SuppVec) -> FinSet {
    let e = x.abs_entries();
    let target = schreier_norm(alpha, &e);
    if target.is_zero() {
        return FinSet::empty();
    }
    let mut suffix = alloc::vec![Q::zero(); e.len() + 1];
    for k in (0..e.len()).rev() {
        suffix[k] = &suffix[k + 1] + &e[k].1;
    }
    fn dfs(
        alpha: &Ordinal,
        e: &[(u32, Q)],
        suffix: &[Q],
        start: usize,
        cur: &mut Vec<u32>,
        sum: &Q,
        target: &Q,
    ) -> bool {
        if sum == target {
            return true;
        }
        for k in start..e.len() {
            if &(sum + &suffix[k]) < target {
                return false;
            }
            cur.push(e[k].0);
            if schreier::member_slice(cur, alpha) && dfs(alpha, e, suffix, k + 1, cur, &(sum + &e[k].1), target) {
                return true;
            }
            cur.pop();
        }
        false
    }
    let mut cur = Vec::new();
    let found = dfs(alpha, &e, &suffix, 0, &mut cur, &Q::zero(), &target);
    debug_assert!(found);
    FinSet::from_sorted(cur)
}

// ---------------------------------------------------------------------------
// Tsirelson norm: ||x|| = max(||x||_inf, theta * max sum_j ||E_j x||).
//
// Only the entries of x matter. Admissible families can be taken to cover
// a contiguous run of support positions with group minima at support
// points: enlarging a piece never lowers its norm, and spreading the
// minima keeps the family admissible.

type TsKey = (Q, Ordinal, Vec<(u32, Q)>);

const TS_MEMO_CAP: usize = 1 << 20;

static TS_MEMO: RwLock<BTreeMap<TsKey, Q>> = RwLock::new(BTreeMap::new());

fn tsirelson_norm(theta: &Q, alpha: &Ordinal, e: &[(u32, Q)]) -> Q {
    if e.len() <= 1 {
        return e.first().map(|(_, c)| c.clone()).unwrap_or_else(Q::zero);
    }
    let key = (theta.clone(), alpha.clone(), e.to_vec());
    if let Some(v) = TS_MEMO.read().get(&key) {
        return v.clone();
    }
    let sup = e.iter().map(|(_, c)| c.clone()).max().unwrap();
    let split = ts_best_split(theta, alpha, e).map(|(v, _)| theta * v);
    let res = match split {
        Some(s) if s > sup => s,
        _ => sup,
    };
    let mut memo = TS_MEMO.write();
    if memo.len() >= TS_MEMO_CAP {
        memo.clear();
    }
    memo.insert(key, res.clone());
    res
}

/// Best admissible family with at least two pieces: `(sum of piece norms,
/// piece ranges)`. Ties keep the first family found.
fn ts_best_split(theta: &Q, alpha: &Ordinal, e: &[(u32, Q)]) -> Option<(Q, Vec<(usize, usize)>)> {
    let n = e.len();
    let piece = |a: usize, b: usize| tsirelson_norm(theta, alpha, &e[a..b]);
    let mut best: Option<(Q, Vec<(usize, usize)>)> = None;
    let offer = |v: Q, groups: Vec<(usize, usize)>, best: &mut Option<(Q, Vec<(usize, usize)>)>| {
        if best.as_ref().is_none_or(|(b, _)| &v > b) {
            *best = Some((v, groups));
        }
    };
    if alpha.as_nat() == Some(1) {
        for s in 0..n {
            let cap = (e[s].0 as usize).min(n - s);
            if cap < 2 {
                continue;
            }
            // g[r][p]: best over e[p..n] using at most r groups (r >= 1),
            // with the cut after the first group remembered.
            let w = n - s;
            let mut g: Vec<Vec<(Q, usize)>> = Vec::with_capacity(cap + 1);
            g.push(alloc::vec![(Q::zero(), n); w + 1]);
            for r in 1..=cap {
                let mut row = alloc::vec![(Q::zero(), n); w + 1];
                // p = s is never needed and would recurse on all of e
                for p in (s + 1..n).rev() {
                    let mut bv: Option<(Q, usize)> = None;
                    for qq in p + 1..=n {
                        if r == 1 && qq != n {
                            continue;
                        }
                        let v = piece(p, qq) + &g[r - 1][qq - s].0;
                        if bv.as_ref().is_none_or(|(b, _)| &v > b) {
                            bv = Some((v, qq));
                        }
                    }
                    row[p - s] = bv.unwrap();
                }
                g.push(row);
            }
            // at least two groups: first cut strictly inside
            let mut first: Option<(Q, usize)> = None;
            for qq in s + 1..n {
                let v = piece(s, qq) + &g[cap - 1][qq - s].0;
                if first.as_ref().is_none_or(|(b, _)| &v > b) {
                    first = Some((v, qq));
                }
            }
            let Some((v, c0)) = first else { continue };
            let mut groups = alloc::vec![(s, c0)];
            let (mut p, mut r) = (c0, cap - 1);
            while p < n {
                let nxt = g[r][p - s].1;
                groups.push((p, nxt));
                p = nxt;
                r -= 1;
            }
            offer(v, groups, &mut best);
        }
        return best;
    }
    // General alpha: every composition of a suffix run, pruned by heredity
    // of the minima set.
    #[allow(clippy::too_many_arguments)]
    fn rec(
        e: &[(u32, Q)],
        alpha: &Ordinal,
        p: usize,
        minima: &mut Vec<u32>,
        groups: &mut Vec<(usize, usize)>,
        sum: Q,
        piece: &dyn Fn(usize, usize) -> Q,
        out: &mut dyn FnMut(Q, Vec<(usize, usize)>),
    ) {
        let n = e.len();
        minima.push(e[p].0);
        if schreier::member_slice(minima, alpha) {
            for qq in p + 1..=n {
                groups.push((p, qq));
                let s2 = &sum + piece(p, qq);
                if qq == n {
                    if groups.len() >= 2 {
                        out(s2, groups.clone());
                    }
                } else {
                    rec(e, alpha, qq, minima, groups, s2, piece, out);
                }
                groups.pop();
            }
        }
        minima.pop();
    }
    for s in 0..n {
        let mut sink = |v: Q, g: Vec<(usize, usize)>| offer(v, g, &mut best);
        rec(e, alpha, s, &mut Vec::new(), &mut Vec::new(), Q::zero(), &piece, &mut sink);
    }
    best
}

// ---------------------------------------------------------------------------
// Norming points.

/// A functional in the Tsirelson norming set: a leaf `+-e_n^*` or
/// `theta * (sum of children)` with successive, admissible children.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Functional {
    Leaf { index: u32, negative: bool },
    Node(Vec<Functional>),
}

impl Functional {
    fn support_into(&self, out: &mut Vec<u32>) {
        match self {
            Functional::Leaf { index, .. } => out.push(*index),
            Functional::Node(ch) => ch.iter().for_each(|c| c.support_into(out)),
        }
    }

    pub fn support(&self) -> FinSet {
        let mut v = Vec::new();
        self.support_into(&mut v);
        FinSet::from_sorted(v)
    }

    pub fn depth(&self) -> usize {
        match self {
            Functional::Leaf { .. } => 0,
            Functional::Node(ch) => 1 + ch.iter().map(|c| c.depth()).max().unwrap_or(0),
        }
    }

    /// Checks successive children and `{min supp child} in S_alpha`.
    pub fn validate(&self, alpha: &Ordinal) -> Result<()> {
        match self {
            Functional::Leaf { index, .. } => {
                if *index == 0 {
                    return Err(precondition!("leaf index must be positive"));
                }
                Ok(())
            }
            Functional::Node(ch) => {
                let mut minima = Vec::with_capacity(ch.len());
                let mut prev_max = 0u32;
                for c in ch {
                    c.validate(alpha)?;
                    let s = c.support();
                    let (Some(lo), Some(hi)) = (s.min_elem(), s.max_elem()) else {
                        return Err(precondition!("node child with empty support"));
                    };
                    if lo <= prev_max {
                        return Err(precondition!("node children are not successive"));
                    }
                    prev_max = hi;
                    minima.push(lo);
                }
                if !schreier::member_slice(&minima, alpha) {
                    return Err(precondition!("children minima {:?} not admissible", minima));
                }
                Ok(())
            }
        }
    }

    /// The functional's coefficient at `n`.
    pub fn value_at(&self, theta: &Q, n: u32) -> Q {
        match self {
            Functional::Leaf { index, negative } => {
                if *index != n {
                    Q::zero()
                } else if *negative {
                    -Q::one()
                } else {
                    Q::one()
                }
            }
            Functional::Node(ch) => {
                for c in ch {
                    let s = c.support();
                    if s.contains(n) {
                        return theta * c.value_at(theta, n);
                    }
                }
                Q::zero()
            }
        }
    }

    pub fn coeffs(&self, theta: &Q) -> SuppVec {
        let s = self.support();
        SuppVec(s.iter().map(|n| (n, self.value_at(theta, n))).collect())
    }
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Functional::Leaf { index, negative } => write!(f, "{}e{}", if *negative { "-" } else { "+" }, index),
            Functional::Node(ch) => {
                f.write_str("[")?;
                for (i, c) in ch.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{}", c)?;
                }
                f.write_str("]")
            }
        }
    }
}

/// Parses the display form: `+e5`, `-e5`, `[+e2 [+e3 +e4]]`.
impl FromStr for Functional {
    type Err = ParseError;
    fn from_str(s: &str) -> core::result::Result<Self, ParseError> {
        fn parse(b: &[u8], pos: &mut usize) -> Option<Functional> {
            while b.get(*pos) == Some(&b' ') {
                *pos += 1;
            }
            match *b.get(*pos)? {
                b'[' => {
                    *pos += 1;
                    let mut ch = Vec::new();
                    loop {
                        while b.get(*pos) == Some(&b' ') {
                            *pos += 1;
                        }
                        if b.get(*pos)? == &b']' {
                            *pos += 1;
                            return Some(Functional::Node(ch));
                        }
                        ch.push(parse(b, pos)?);
                    }
                }
                sign @ (b'+' | b'-') => {
                    if b.get(*pos + 1)? != &b'e' {
                        return None;
                    }
                    *pos += 2;
                    let start = *pos;
                    while b.get(*pos).is_some_and(u8::is_ascii_digit) {
                        *pos += 1;
                    }
                    let index: u32 = core::str::from_utf8(&b[start..*pos]).ok()?.parse().ok()?;
                    (index > 0).then_some(Functional::Leaf { index, negative: sign == b'-' })
                }
                _ => None,
            }
        }
        let t = s.trim();
        let mut pos = 0;
        match parse(t.as_bytes(), &mut pos) {
            Some(f) if pos == t.len() => Ok(f),
            _ => Err(ParseError::Point(String::from(s))),
        }
    }
}

/// A point of the compact space `K` on which the `f_n` are evaluated.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum KPoint {
    /// Schreier space: the indicator functional of `F in S_alpha`.
    Set(FinSet),
    /// Tsirelson: a functional tree.
    Tree(Functional),
}

impl KPoint {
    pub fn validate(&self, model: &SpaceModel) -> Result<()> {
        match (&model.kind, self) {
            (ModelKind::SchreierSpace { alpha }, KPoint::Set(f)) => {
                if schreier::member(f, alpha) {
                    Ok(())
                } else {
                    Err(precondition!("{} is not in S_{}", f, alpha))
                }
            }
            (ModelKind::Tsirelson { alpha, .. }, KPoint::Tree(t)) => t.validate(alpha),
            _ => Err(precondition!("point kind does not match model {}", model)),
        }
    }

    /// Signed value `e_n(t)`; assumes the point is valid for the model.
    pub fn value_at(&self, model: &SpaceModel, n: u32) -> Q {
        match (&model.kind, self) {
            (_, KPoint::Set(f)) => {
                if f.contains(n) {
                    Q::one()
                } else {
                    Q::zero()
                }
            }
            (ModelKind::Tsirelson { theta, .. }, KPoint::Tree(t)) => t.value_at(theta, n),
            (ModelKind::SchreierSpace { .. }, KPoint::Tree(_)) => Q::zero(),
        }
    }

    pub fn support(&self) -> FinSet {
        match self {
            KPoint::Set(f) => f.clone(),
            KPoint::Tree(t) => t.support(),
        }
    }

    /// `f_n(t) = |e_n(t)|` for every `n` where it is nonzero.
    pub fn f_values(&self, model: &SpaceModel) -> SuppVec {
        SuppVec(
            self.support().iter().map(|n| (n, self.value_at(model, n).abs())).filter(|(_, v)| !v.is_zero()).collect(),
        )
    }
}

impl fmt::Display for KPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KPoint::Set(s) => write!(f, "{}", s),
            KPoint::Tree(t) => write!(f, "{}", t),
        }
    }
}

/// A set `{2,3}` or a functional tree.
impl FromStr for KPoint {
    type Err = ParseError;
    fn from_str(s: &str) -> core::result::Result<Self, ParseError> {
        if s.trim_start().starts_with('{') {
            s.parse().map(KPoint::Set).map_err(|_| ParseError::Point(String::from(s)))
        } else {
            s.parse().map(KPoint::Tree)
        }
    }
}

/// `f_n(t)`, after validating `t`.
pub fn eval_f(model: &SpaceModel, t: &KPoint, n: u32) -> Result<Q> {
    t.validate(model)?;
    Ok(t.value_at(model, n).abs())
}

/// `sum_n x_n f_n(t)` without re-validating `t`.
pub fn pairing(model: &SpaceModel, t: &KPoint, x: &SuppVec) -> Q {
    x.iter().map(|(n, c)| c * t.value_at(model, n).abs()).sum()
}

/// A point `t` with `sum_n |x_n| f_n(t) = ||x||`, chosen deterministically
/// (lexicographically least norming set in Schreier space, the argmax of the
/// norm recursion for Tsirelson). Leaf signs follow the signs of `x`.
pub fn norming_point(model: &SpaceModel, x: &SuppVec) -> KPoint {
    match &model.kind {
        ModelKind::SchreierSpace { alpha } => KPoint::Set(schreier_norming_set(alpha, x)),
        ModelKind::Tsirelson { theta, alpha } => {
            let e: Vec<(u32, Q, bool)> = x.iter().map(|(i, c)| (i, c.abs(), c.is_negative())).collect();
            KPoint::Tree(ts_norming_tree(theta, alpha, &e))
        }
    }
}

fn ts_norming_tree(theta: &Q, alpha: &Ordinal, e: &[(u32, Q, bool)]) -> Functional {
    if e.is_empty() {
        return Functional::Node(Vec::new());
    }
    let abs: Vec<(u32, Q)> = e.iter().map(|(i, c, _)| (*i, c.clone())).collect();
    let sup = abs.iter().map(|(_, c)| c.clone()).max().unwrap();
    if e.len() > 1 {
        if let Some((v, groups)) = ts_best_split(theta, alpha, &abs) {
            if theta * v > sup {
                return Functional::Node(
                    groups.iter().map(|&(a, b)| ts_norming_tree(theta, alpha, &e[a..b])).collect(),
                );
            }
        }
    }
    let k = e.iter().position(|(_, c, _)| *c == sup).unwrap();
    Functional::Leaf { index: e[k].0, negative: e[k].2 }
}

/// Every norming point supported in `window`: all of `S_alpha` restricted to
/// the window for Schreier space, all functional trees of depth at most
/// `depth` for Tsirelson (nodes with at least two children, leaves of both
/// signs). The order is deterministic.
pub fn kpoints(model: &SpaceModel, window: Window, depth: u32, budget: &Budget) -> Result<Vec<KPoint>> {
    if window.width() > budget.max_window {
        return Err(Error::Budget {
            what: "kpoints window",
            needed: window.width().into(),
            limit: budget.max_window.into(),
        });
    }
    match &model.kind {
        ModelKind::SchreierSpace { alpha } => {
            let mut sets = schreier::enumerate(alpha, window, EnumMode::All, budget)?;
            sets.sort();
            Ok(sets.into_iter().map(KPoint::Set).collect())
        }
        ModelKind::Tsirelson { alpha, .. } => {
            let mut level: Vec<Functional> = Vec::new();
            for n in window.lo..=window.hi {
                level.push(Functional::Leaf { index: n, negative: false });
                level.push(Functional::Leaf { index: n, negative: true });
            }
            for _ in 0..depth {
                let mut next: BTreeSet<Functional> = level.iter().cloned().collect();
                let cands: Vec<(Functional, u32, u32)> = level
                    .iter()
                    .map(|t| {
                        let s = t.support();
                        (t.clone(), s.min_elem().unwrap(), s.max_elem().unwrap())
                    })
                    .collect();
                let mut stack = Vec::new();
                let mut minima = Vec::new();
                grow_nodes(&cands, alpha, 0, &mut stack, &mut minima, &mut next, budget.max_sets)?;
                level = next.into_iter().collect();
            }
            Ok(level.into_iter().map(KPoint::Tree).collect())
        }
    }
}

fn grow_nodes(
    cands: &[(Functional, u32, u32)],
    alpha: &Ordinal,
    after: u32,
    stack: &mut Vec<Functional>,
    minima: &mut Vec<u32>,
    out: &mut BTreeSet<Functional>,
    cap: usize,
) -> Result<()> {
    for (t, lo, hi) in cands {
        if *lo <= after {
            continue;
        }
        minima.push(*lo);
        if schreier::member_slice(minima, alpha) {
            stack.push(t.clone());
            if stack.len() >= 2 {
                out.insert(Functional::Node(stack.clone()));
                if out.len() > cap {
                    return Err(Error::Budget { what: "kpoints trees", needed: out.len() as u64, limit: cap as u64 });
                }
            }
            grow_nodes(cands, alpha, *hi, stack, minima, out, cap)?;
            stack.pop();
        }
        minima.pop();
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Block sequences and the asymptotic-l1 inequality.

/// Nonzero blocks with strictly successive supports.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct BlockSeq(Vec<SuppVec>);

impl BlockSeq {
    pub fn new(blocks: Vec<SuppVec>) -> Result<Self> {
        for (k, b) in blocks.iter().enumerate() {
            if b.is_zero() {
                return Err(precondition!("block {} is zero", k + 1));
            }
            if k > 0 && blocks[k - 1].max_index() >= b.min_index() {
                return Err(precondition!("blocks {} and {} are not successive", k, k + 1));
            }
        }
        Ok(BlockSeq(blocks))
    }

    pub fn blocks(&self) -> &[SuppVec] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> SuppVec {
        self.0.iter().fold(SuppVec::zero(), |acc, b| acc.add(b))
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct A1Check {
    pub ratio: Q,
    pub pass: bool,
}

/// `||sum u_i|| / sum ||u_i||` against the model's declared constant, for
/// `m <= min supp u_1`.
pub fn check_a1(model: &SpaceModel, seq: &BlockSeq) -> Result<A1Check> {
    let first = seq.0.first().ok_or_else(|| precondition!("empty block sequence"))?;
    let m = seq.len() as u32;
    if m > first.min_index().unwrap() {
        return Err(precondition!("{} blocks but min supp u_1 = {}", m, first.min_index().unwrap()));
    }
    let total: Q = seq.0.iter().map(|b| norm(model, b)).sum();
    let ratio = norm(model, &seq.sum()) / total;
    let pass = ratio >= model.a1_constant;
    Ok(A1Check { ratio, pass })
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct A1Search {
    /// Smallest ratio seen; `None` when no admissible sequence exists.
    pub worst_ratio: Option<Q>,
    pub witness: BlockSeq,
    pub evaluated: u64,
    /// The evaluation budget ran out before the search finished.
    pub partial: bool,
}

/// Exhaustive search over block sequences `u_1 < ... < u_m`, `2 <= m <=
/// min supp u_1`, inside `window` with coefficients from `grid` (zero means
/// "not in the support" and is implicit). Sequences with one block have
/// ratio 1 and are skipped. Stops after `budget.max_evals` sequences.
pub fn a1_search(model: &SpaceModel, window: Window, grid: &[Q], budget: &Budget) -> Result<A1Search> {
    if window.width() > budget.max_window {
        return Err(Error::Budget {
            what: "a1 search window",
            needed: window.width().into(),
            limit: budget.max_window.into(),
        });
    }
    if grid.is_empty() || grid.iter().any(|c| c.is_zero()) {
        return Err(precondition!("coefficient grid must be nonempty and nonzero"));
    }
    let mut st = A1State {
        model,
        grid,
        hi: window.hi,
        limit: budget.max_evals,
        res: A1Search { worst_ratio: None, witness: BlockSeq::default(), evaluated: 0, partial: false },
        blocks: Vec::new(),
    };
    st.walk(window.lo, None);
    Ok(st.res)
}

struct A1State<'a> {
    model: &'a SpaceModel,
    grid: &'a [Q],
    hi: u32,
    limit: u64,
    res: A1Search,
    blocks: Vec<Vec<(u32, Q)>>,
}

impl A1State<'_> {
    fn cap(&self) -> usize {
        self.blocks.first().map_or(usize::MAX, |b| b[0].0 as usize)
    }

    fn walk(&mut self, p: u32, _: Option<()>) {
        if self.res.partial {
            return;
        }
        if p > self.hi {
            if self.blocks.len() >= 2 {
                self.evaluate();
            }
            return;
        }
        // skip p
        self.walk(p + 1, None);
        for c in 0..self.grid.len() {
            let coeff = self.grid[c].clone();
            // extend the open block
            if !self.blocks.is_empty() {
                self.blocks.last_mut().unwrap().push((p, coeff.clone()));
                self.walk(p + 1, None);
                self.blocks.last_mut().unwrap().pop();
            }
            // open a new block at p
            let cap = if self.blocks.is_empty() { p as usize } else { self.cap() };
            if self.blocks.len() < cap {
                self.blocks.push(alloc::vec![(p, coeff)]);
                self.walk(p + 1, None);
                self.blocks.pop();
            }
        }
    }

    fn evaluate(&mut self) {
        if self.res.evaluated >= self.limit {
            self.res.partial = true;
            return;
        }
        self.res.evaluated += 1;
        let vecs: Vec<SuppVec> = self.blocks.iter().map(|b| SuppVec(b.iter().cloned().collect())).collect();
        let total: Q = vecs.iter().map(|b| norm(self.model, b)).sum();
        let sum = vecs.iter().fold(SuppVec::zero(), |a, b| a.add(b));
        let ratio = norm(self.model, &sum) / total;
        if self.res.worst_ratio.as_ref().is_none_or(|w| &ratio < w) {
            self.res.worst_ratio = Some(ratio);
            self.res.witness = BlockSeq(vecs);
        }
    }
}

/// Signed blocks `v_i = sum_j a_j sigma_j e_j` with norming points `t_i`
/// such that `v_i(t_i) = ||u_i||`, for non-negative blocks `u_i`.
pub fn sign_transfer(model: &SpaceModel, seq: &BlockSeq) -> Result<(BlockSeq, Vec<KPoint>)> {
    if !seq.0.iter().all(|b| b.is_nonneg()) {
        return Err(precondition!("sign transfer needs non-negative blocks"));
    }
    let mut signed = Vec::with_capacity(seq.len());
    let mut points = Vec::with_capacity(seq.len());
    for u in &seq.0 {
        let t = norming_point(model, u);
        let v = SuppVec(
            u.iter()
                .map(|(j, a)| {
                    let s = t.value_at(model, j);
                    (j, if s.is_negative() { -a.clone() } else { a.clone() })
                })
                .collect(),
        );
        let at_t: Q = v.iter().map(|(j, c)| c * t.value_at(model, j)).sum();
        if at_t != norm(model, u) {
            return Err(Error::Exhausted(alloc::format!("no norming point found for block {}", u)));
        }
        signed.push(v);
        points.push(t);
    }
    let signed = BlockSeq(signed);
    if norm(model, &signed.sum()) > norm(model, &seq.sum()) {
        return Err(Error::Exhausted(String::from("signed sum exceeds the unsigned sum")));
    }
    Ok((signed, points))
}
