//! `(alpha, eps)` blocks and alpha-chains: certificates, exhaustive
//! verifiers, and the constructive searches built on them.
//!
//! Irrational parameters such as `eps^(1/2)` never get approximated in a
//! verdict. An [`Eps`] is `base^(1/2^k)` with a rational base and every
//! comparison is done after raising both sides to the power `2^k`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use num_traits::{One, Signed, Zero};

use crate::budget::Budget;
use crate::error::{precondition, Error, ParseError, Result};
use crate::finset::{FinSet, Window};
use crate::normmodel::{norm, norming_point, pairing, Functional, KPoint, ModelKind, SpaceModel, SuppVec};
use crate::ordinal::Ordinal;
use crate::rational::{exact_sqrt, int, parse_q, pow, q, sqrt_upper, Q};
use crate::schreier;

/// A parameter `base^(1/2^root)` in `(0, 1)`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Eps {
    base: Q,
    root: u32,
}

impl Eps {
    pub fn new(r: Q) -> Result<Self> {
        Eps::from_parts(r, 0)
    }

    pub fn from_parts(base: Q, root: u32) -> Result<Self> {
        if !(base > Q::zero() && base < Q::one()) {
            return Err(precondition!("eps must lie in (0,1), got {}", base));
        }
        Ok(Eps { base, root }.normalized())
    }

    fn normalized(mut self) -> Self {
        while self.root > 0 {
            match exact_sqrt(&self.base) {
                Some(r) => {
                    self.base = r;
                    self.root -= 1;
                }
                None => break,
            }
        }
        self
    }

    pub fn base(&self) -> &Q {
        &self.base
    }

    pub fn root(&self) -> u32 {
        self.root
    }

    pub fn as_rational(&self) -> Option<&Q> {
        (self.root == 0).then_some(&self.base)
    }

    pub fn sqrt(&self) -> Eps {
        Eps { base: self.base.clone(), root: self.root + 1 }.normalized()
    }

    pub fn squared(&self) -> Eps {
        if self.root > 0 {
            Eps { base: self.base.clone(), root: self.root - 1 }
        } else {
            Eps { base: &self.base * &self.base, root: 0 }
        }
    }

    /// How `x` compares with this parameter.
    pub fn cmp_q(&self, x: &Q) -> Ordering {
        if *x <= Q::zero() {
            return Ordering::Less;
        }
        pow(x, 1 << self.root).cmp(&self.base)
    }

    /// `x >= eps`.
    pub fn le_q(&self, x: &Q) -> bool {
        self.cmp_q(x) != Ordering::Less
    }

    /// `x < eps`.
    pub fn gt_q(&self, x: &Q) -> bool {
        self.cmp_q(x) == Ordering::Less
    }

    /// `x <= (1 + eps) * p` for `p >= 0`.
    pub fn within_one_plus(&self, x: &Q, p: &Q) -> bool {
        let d = x - p;
        if d <= Q::zero() {
            return true;
        }
        if p.is_zero() {
            return false;
        }
        self.cmp_q(&(d / p)) != Ordering::Greater
    }

    /// A rational `r >= eps` within `1/scale`.
    pub fn upper(&self, scale: u64) -> Q {
        let mut r = self.base.clone();
        for _ in 0..self.root {
            r = sqrt_upper(&r, scale);
        }
        r
    }
}

impl fmt::Display for Eps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for _ in 0..self.root {
            f.write_str("sqrt(")?;
        }
        write!(f, "{}", self.base)?;
        for _ in 0..self.root {
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// Parses `p/q`, `sqrt(p/q)`, `sqrt(sqrt(p/q))`, ...
impl FromStr for Eps {
    type Err = ParseError;
    fn from_str(s: &str) -> core::result::Result<Self, ParseError> {
        let mut body = s.trim();
        let mut root = 0;
        while let Some(rest) = body.strip_prefix("sqrt(") {
            body = rest.strip_suffix(')').ok_or_else(|| ParseError::Rational(String::from(s)))?;
            root += 1;
        }
        let base = parse_q(body)?;
        Eps::from_parts(base, root).map_err(|_| ParseError::Rational(String::from(s)))
    }
}

/// The sequence `(eps_n)_{n >= 1}` attached to chains.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum EpsSeq {
    /// `eps_n = 4^(-n-1)`, so `sum sqrt(eps_n) = 1/2`.
    Default,
    /// `eps_1, ..., eps_k`; later terms are undefined.
    Explicit(Vec<Q>),
}

impl EpsSeq {
    pub fn get(&self, n: u32) -> Result<Q> {
        if n == 0 {
            return Err(precondition!("eps sequences are indexed from 1"));
        }
        match self {
            EpsSeq::Default => Ok(Q::new(One::one(), num_bigint::BigInt::from(4u8).pow(n + 1))),
            EpsSeq::Explicit(v) => v
                .get(n as usize - 1)
                .cloned()
                .ok_or_else(|| precondition!("eps sequence has {} terms, term {} requested", v.len(), n)),
        }
    }

    /// Non-increasing, inside `(0,1)`, and `sum sqrt(eps_n) < 1`. Non-square
    /// terms are bounded above by rationals, so a `false` may be a failure
    /// to certify rather than a proof of divergence.
    pub fn check(&self) -> core::result::Result<(), String> {
        let v = match self {
            EpsSeq::Default => return Ok(()),
            EpsSeq::Explicit(v) => v,
        };
        if v.iter().any(|e| !(*e > Q::zero() && *e < Q::one())) {
            return Err(String::from("terms must lie in (0,1)"));
        }
        if v.windows(2).any(|w| w[1] > w[0]) {
            return Err(String::from("sequence is not decreasing"));
        }
        let s: Q = v.iter().map(|e| exact_sqrt(e).unwrap_or_else(|| sqrt_upper(e, 1_000_000))).sum();
        if s < Q::one() {
            Ok(())
        } else {
            Err(format!("sum of square roots is at least {}", s))
        }
    }
}

impl fmt::Display for EpsSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EpsSeq::Default => f.write_str("default"),
            EpsSeq::Explicit(v) => {
                for (i, e) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{}", e)?;
                }
                Ok(())
            }
        }
    }
}

/// Parses `default` or a comma list of rationals.
impl FromStr for EpsSeq {
    type Err = ParseError;
    fn from_str(s: &str) -> core::result::Result<Self, ParseError> {
        let s = s.trim();
        if s == "default" {
            return Ok(EpsSeq::Default);
        }
        s.split(',').map(parse_q).collect::<core::result::Result<Vec<_>, _>>().map(EpsSeq::Explicit)
    }
}

/// The claim that `u` is an `(alpha, eps)` block strongly normed by `t0`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct AlphaEpsCert {
    pub model: SpaceModel,
    pub u: SuppVec,
    pub alpha: Ordinal,
    pub eps: Eps,
    pub t0: KPoint,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Condition {
    One,
    Two,
    Three,
    Eps,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::One => "1",
            Condition::Two => "2",
            Condition::Three => "3",
            Condition::Eps => "eps",
        })
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Verdict {
    Pass,
    Fail { condition: Condition, witness: Option<FinSet>, detail: String },
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }

    fn fail(condition: Condition, witness: Option<FinSet>, detail: impl Into<String>) -> Verdict {
        Verdict::Fail { condition, witness, detail: detail.into() }
    }
}

fn check_block_shape(model: &SpaceModel, u: &SuppVec) -> Result<()> {
    if u.is_zero() {
        return Err(precondition!("block is zero"));
    }
    if u.iter().any(|(_, c)| *c <= Q::zero()) {
        return Err(precondition!("block coefficients must be positive"));
    }
    let n = norm(model, u);
    if !n.is_one() {
        return Err(precondition!("block is not normalized: norm {}", n));
    }
    Ok(())
}

/// Exhaustive check of both block conditions. Condition 2 (every
/// `J in S_alpha` has `||u|J|| < eps^2`) is scanned first, then condition 1
/// (every `J` with `||u|J|| >= eps` satisfies
/// `||u|J|| <= (1+eps) * sum_{i in J} u_i f_i(t0)`). Within a condition the
/// first violating `J` in lexicographic order is reported.
pub fn verify_alpha_eps(cert: &AlphaEpsCert, budget: &Budget) -> Result<Verdict> {
    let n = cert.u.len() as u32;
    if n > budget.max_support {
        return Err(Error::Budget { what: "block support", needed: n.into(), limit: budget.max_support.into() });
    }
    check_block_shape(&cert.model, &cert.u)?;
    cert.t0.validate(&cert.model)?;
    let supp = cert.u.support().into_vec();
    let eps2 = cert.eps.squared();
    if let Some(j) = cond2_violation(&cert.model, &cert.u, &cert.alpha, &eps2, &supp) {
        let v = norm(&cert.model, &cert.u.restrict(&j));
        return Ok(Verdict::fail(
            Condition::Two,
            Some(j),
            format!("restriction norm {} is not below eps^2 = {}", v, eps2),
        ));
    }
    if let Some(j) = cond1_violation(&cert.model, &cert.u, &cert.eps, &cert.t0, &supp) {
        let v = norm(&cert.model, &cert.u.restrict(&j));
        let p = pairing(&cert.model, &cert.t0, &cert.u.restrict(&j));
        return Ok(Verdict::fail(Condition::One, Some(j), format!("restriction norm {} exceeds (1+eps) * {}", v, p)));
    }
    Ok(Verdict::Pass)
}

// Both scans lean on `||x|| <= sum |x_i|` for the two models: the running
// l1 sum is a cheap upper bound, and the exact norm is only computed when
// the bound cannot settle a set.

fn cond2_violation(model: &SpaceModel, u: &SuppVec, alpha: &Ordinal, eps2: &Eps, supp: &[u32]) -> Option<FinSet> {
    struct Scan<'a> {
        model: &'a SpaceModel,
        u: &'a SuppVec,
        alpha: &'a Ordinal,
        eps2: &'a Eps,
        supp: &'a [u32],
        w: Vec<Q>,
    }
    fn rec(sc: &Scan<'_>, k: usize, cur: &mut Vec<u32>, l1: &Q) -> Option<FinSet> {
        if !sc.eps2.gt_q(l1) {
            let j = FinSet::from_sorted(cur.clone());
            if !sc.eps2.gt_q(&norm(sc.model, &sc.u.restrict(&j))) {
                return Some(j);
            }
        }
        for k2 in k..sc.supp.len() {
            cur.push(sc.supp[k2]);
            if schreier::member_slice(cur, sc.alpha) {
                if let Some(j) = rec(sc, k2 + 1, cur, &(l1 + &sc.w[k2])) {
                    return Some(j);
                }
            }
            cur.pop();
        }
        None
    }
    let w = supp.iter().map(|&i| u.get(i)).collect();
    rec(&Scan { model, u, alpha, eps2, supp, w }, 0, &mut Vec::new(), &Q::zero())
}

/// Subsets of a node's possible extensions have smaller norm, so a subtree
/// whose largest member stays below `eps` is skipped.
fn cond1_violation(model: &SpaceModel, u: &SuppVec, eps: &Eps, t0: &KPoint, supp: &[u32]) -> Option<FinSet> {
    struct Scan<'a> {
        model: &'a SpaceModel,
        u: &'a SuppVec,
        eps: &'a Eps,
        supp: &'a [u32],
        w: Vec<Q>,
        // u_i |f_i(t0)|
        p: Vec<Q>,
        // sum of w over supp[k..]
        tail: Vec<Q>,
    }
    fn rec(sc: &Scan<'_>, k: usize, cur: &mut Vec<u32>, l1: &Q, pair: &Q) -> Option<FinSet> {
        if sc.eps.gt_q(&(l1 + &sc.tail[k])) {
            return None;
        }
        if sc.eps.le_q(l1) && !sc.eps.within_one_plus(l1, pair) {
            let j = FinSet::from_sorted(cur.clone());
            let v = norm(sc.model, &sc.u.restrict(&j));
            if sc.eps.le_q(&v) && !sc.eps.within_one_plus(&v, pair) {
                return Some(j);
            }
        }
        for k2 in k..sc.supp.len() {
            cur.push(sc.supp[k2]);
            if let Some(j) = rec(sc, k2 + 1, cur, &(l1 + &sc.w[k2]), &(pair + &sc.p[k2])) {
                return Some(j);
            }
            cur.pop();
        }
        None
    }
    let w: Vec<Q> = supp.iter().map(|&i| u.get(i)).collect();
    let p = supp.iter().zip(&w).map(|(&i, c)| c * t0.value_at(model, i).abs()).collect();
    let mut tail = alloc::vec![Q::zero(); supp.len() + 1];
    for k in (0..supp.len()).rev() {
        tail[k] = &tail[k + 1] + &w[k];
    }
    rec(&Scan { model, u, eps, supp, w, p, tail }, 0, &mut Vec::new(), &Q::zero(), &Q::zero())
}

/// Condition 1 without the subtree cut, for cross-checking the pruning.
pub fn cond1_violation_unpruned(cert: &AlphaEpsCert) -> Option<FinSet> {
    let supp = cert.u.support();
    let mut found = None;
    supp.for_each_subset_lex(|j| {
        let uj = cert.u.restrict(j);
        let v = norm(&cert.model, &uj);
        if cert.eps.le_q(&v) && !cert.eps.within_one_plus(&v, &pairing(&cert.model, &cert.t0, &uj)) {
            found = Some(j.clone());
            return false;
        }
        true
    });
    found
}

/// `(u|I0) / ||u|I0||` as an `(alpha, eps^(1/2))` block with the same `t0`.
/// Requires `||u|I0|| >= eps^(1/2)`.
pub fn restrict_cert(cert: &AlphaEpsCert, i0: &FinSet) -> Result<AlphaEpsCert> {
    if i0.is_empty() || !i0.is_subset(&cert.u.support()) {
        return Err(precondition!("I0 = {} must be a nonempty subset of supp u", i0));
    }
    let ui = cert.u.restrict(i0);
    let x = norm(&cert.model, &ui);
    let root = cert.eps.sqrt();
    if !root.le_q(&x) {
        return Err(precondition!("||u|I0|| = {} is below eps^(1/2) = {}", x, root));
    }
    Ok(AlphaEpsCert {
        model: cert.model.clone(),
        u: ui.scale(&(Q::one() / x)),
        alpha: cert.alpha.clone(),
        eps: root,
        t0: cert.t0.clone(),
    })
}

// ---------------------------------------------------------------------------
// The modulus tau and the (0, eps) block construction.

/// A lower bound for `tau` witnessed by `L = (l_1 < ... < l_{l_1})` with
/// `||sum_{i <= l_1} f_{l_i}|| >= lower * l_1`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TauEstimate {
    pub lower: Q,
    pub witness: Option<FinSet>,
    pub pool: FinSet,
    pub evaluated: u64,
    /// No witness, or the budget ran out before the scan finished.
    pub partial: bool,
}

impl TauEstimate {
    /// Recomputes the witness inequality from scratch.
    pub fn recheck(&self, model: &SpaceModel) -> bool {
        match &self.witness {
            None => self.lower == model.a1_constant,
            Some(l) => {
                let l1 = l.min_elem().unwrap();
                l.len() == l1 as usize
                    && l.is_subset(&self.pool)
                    && norm(model, &SuppVec::indicator(l, &Q::one())) >= &self.lower * int(i64::from(l1))
            }
        }
    }
}

/// Calls `f` on every `L` inside `pool` with `|L| = min L`, ordered by
/// `min L` and then lexicographically, while `f` returns `true`. Only sets
/// with `min L >= from` are produced.
fn for_each_prefix(pool: &[u32], from: u32, f: &mut dyn FnMut(&[u32]) -> bool) {
    fn pick(rest: &[u32], need: usize, cur: &mut Vec<u32>, f: &mut dyn FnMut(&[u32]) -> bool) -> bool {
        if need == 0 {
            return f(cur);
        }
        for k in 0..rest.len() {
            if rest.len() - k < need {
                break;
            }
            cur.push(rest[k]);
            let go = pick(&rest[k + 1..], need - 1, cur, f);
            cur.pop();
            if !go {
                return false;
            }
        }
        true
    }
    for (k, &l1) in pool.iter().enumerate() {
        if l1 < from {
            continue;
        }
        let need = l1 as usize - 1;
        if pool.len() - k - 1 < need {
            continue;
        }
        let mut cur = alloc::vec![l1];
        if !pick(&pool[k + 1..], need, &mut cur, f) {
            return;
        }
    }
}

pub fn tau_estimate(model: &SpaceModel, window: Window, budget: &Budget) -> Result<TauEstimate> {
    tau_estimate_in(model, &window.to_set(), budget)
}

/// Best witnessed ratio `||1_L|| / l_1` over prefixes `L` inside `pool`,
/// falling back to the declared constant when nothing is evaluated.
pub fn tau_estimate_in(model: &SpaceModel, pool: &FinSet, budget: &Budget) -> Result<TauEstimate> {
    if pool.is_empty() {
        return Err(precondition!("empty window"));
    }
    let mut best: Option<(Q, FinSet)> = None;
    let mut evaluated = 0u64;
    let mut partial = false;
    for_each_prefix(pool.as_slice(), 1, &mut |l| {
        if evaluated >= budget.max_evals {
            partial = true;
            return false;
        }
        evaluated += 1;
        let set = FinSet::from_sorted(l.to_vec());
        let r = norm(model, &SuppVec::indicator(&set, &Q::one())) / int(i64::from(l[0]));
        if best.as_ref().is_none_or(|(b, _)| &r > b) {
            best = Some((r.clone(), set));
        }
        !r.is_one()
    });
    Ok(match best {
        Some((lower, w)) => TauEstimate { lower, witness: Some(w), pool: pool.clone(), evaluated, partial },
        None => TauEstimate {
            lower: model.a1_constant.clone(),
            witness: None,
            pool: pool.clone(),
            evaluated,
            partial: true,
        },
    })
}

fn claim_hypothesis(m: u32, tau: &Q, delta: &Q) -> bool {
    let m = int(i64::from(m));
    (&m - int(1)) * (tau + delta * int(2)) > m * (tau + delta)
}

/// `|{n in window : n > m, f_n(t) >= tau + 2 delta}|`.
pub fn claim1_count(model: &SpaceModel, m: u32, t: &KPoint, tau: &Q, delta: &Q, window: Window) -> Result<u32> {
    if !claim_hypothesis(m, tau, delta) {
        return Err(precondition!("(m-1)(tau+2delta) > m(tau+delta) fails for m = {}", m));
    }
    t.validate(model)?;
    let thr = tau + delta * int(2);
    Ok((window.lo.max(m + 1)..=window.hi).filter(|&n| t.value_at(model, n).abs() >= thr).count() as u32)
}

fn empty_point(model: &SpaceModel) -> KPoint {
    match model.kind {
        ModelKind::SchreierSpace { .. } => KPoint::Set(FinSet::empty()),
        ModelKind::Tsirelson { .. } => KPoint::Tree(Functional::Node(Vec::new())),
    }
}

/// `m` indices `n_1 < ... < n_m` in `pool`, all `> m`, and a point `t1`
/// with `f_{n_i}(t1) >= tau - 2 delta`. Candidates `t1` are norming points
/// of `sum_{i <= l_1} f_{l_i}` for prefixes `L` above `m`.
pub fn claim2_witness(
    model: &SpaceModel,
    m: u32,
    pool: &FinSet,
    tau: &Q,
    delta: &Q,
    budget: &Budget,
) -> Result<(KPoint, FinSet)> {
    if m == 0 {
        return Ok((empty_point(model), FinSet::empty()));
    }
    let thr = tau - delta * int(2);
    let above: Vec<u32> = pool.iter().filter(|&n| n > m).collect();
    let mut evaluated = 0u64;
    let mut found = None;
    for_each_prefix(&above, m, &mut |l| {
        if evaluated >= budget.max_evals {
            return false;
        }
        evaluated += 1;
        let t1 = norming_point(model, &SuppVec::indicator(&FinSet::from_sorted(l.to_vec()), &Q::one()));
        let ns: Vec<u32> =
            above.iter().copied().filter(|&n| t1.value_at(model, n).abs() >= thr).take(m as usize).collect();
        if ns.len() == m as usize {
            found = Some((t1, FinSet::from_sorted(ns)));
            return false;
        }
        true
    });
    found.ok_or_else(|| Error::Exhausted(format!("no Claim 2 witness for m = {} after {} candidates", m, evaluated)))
}

/// Parameters chosen while building a `(0, eps)` block.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ZeroBlockRun {
    pub cert: AlphaEpsCert,
    pub tau: TauEstimate,
    pub delta: Q,
    pub eps0: Q,
    pub m: u32,
    /// The `m0` the counting argument asks for: least with `m < C eps0^2 m0`.
    pub proof_m0: u64,
    /// The number of averaged functions actually used.
    pub m0: u32,
}

/// `(tau + 2 delta) / ((1 - eps0)(tau - 2 delta)) < 1 + eps`.
fn l0_inequality(tau: &Q, delta: &Q, eps0: &Q, eps: &Q) -> bool {
    let two_d = delta * int(2);
    let den = (Q::one() - eps0) * (tau - &two_d);
    den > Q::zero() && (tau + &two_d) / den < Q::one() + eps
}

/// Builds a `(0, eps)` block on `pool` the way the `tau` argument does:
/// estimate `tau`, pick `delta = tau/2^k` and `eps0 = eps/2^j` meeting the
/// displayed inequality, take `m` from the Claim 1 hypothesis, then average
/// `m0` functions from a Claim 2 witness and normalize, with `t0 = t1`.
///
/// `m0` is scanned upward and the first candidate that passes the
/// exhaustive verifier is returned; the counting bound `proof_m0` is
/// reported alongside and quoted when the scan fails.
pub fn find_zero_eps_block(model: &SpaceModel, pool: &FinSet, eps: &Q, budget: &Budget) -> Result<ZeroBlockRun> {
    let e = Eps::new(eps.clone())?;
    let tau = tau_estimate_in(model, pool, budget)?;
    let t = tau.lower.clone();
    let mut choice = None;
    'outer: for k in 2..=16u32 {
        let delta = &t / int(1i64 << k);
        for j in 1..=16u32 {
            let eps0 = eps / int(1i64 << j);
            if l0_inequality(&t, &delta, &eps0, eps) {
                choice = Some((delta, eps0));
                break 'outer;
            }
        }
    }
    let (delta, eps0) =
        choice.ok_or_else(|| precondition!("no (delta, eps0) meets the parameter inequality for tau = {}", t))?;
    let mut m = 1u32;
    while !claim_hypothesis(m, &t, &delta) {
        m += 1;
    }
    let c = &model.a1_constant;
    let proof_m0 = {
        let need = int(i64::from(m)) / (c * &eps0 * &eps0);
        (need.floor().to_integer() + 1u8).try_into().unwrap_or(u64::MAX)
    };
    let mut tried = 0;
    for m0 in 1..=budget.max_support {
        let Ok((t1, ns)) = claim2_witness(model, m0, pool, &t, &delta, budget) else {
            break;
        };
        tried = m0;
        let raw = SuppVec::indicator(&ns, &Q::one());
        let u = raw.scale(&(Q::one() / norm(model, &raw)));
        let cert = AlphaEpsCert { model: model.clone(), u, alpha: Ordinal::zero(), eps: e.clone(), t0: t1 };
        if verify_alpha_eps(&cert, budget)?.is_pass() {
            return Ok(ZeroBlockRun { cert, tau, delta, eps0, m, proof_m0, m0 });
        }
    }
    Err(Error::Exhausted(format!(
        "no (0, {}) block found with m0 <= {} inside {}; the counting bound asks for m0 >= {}",
        eps, tried, pool, proof_m0
    )))
}

// ---------------------------------------------------------------------------
// Chains.

/// An alpha-chain `u_1 < ... < u_m` with certificates for `u_2, ..., u_m`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ChainCert {
    pub model: SpaceModel,
    pub alpha: Ordinal,
    pub eps_seq: EpsSeq,
    pub blocks: Vec<SuppVec>,
    pub sub_certs: Vec<AlphaEpsCert>,
}

impl ChainCert {
    /// `d_i = max supp u_i`.
    pub fn d(&self) -> Vec<u32> {
        self.blocks.iter().map(|b| b.max_index().unwrap_or(0)).collect()
    }

    pub fn sum(&self) -> SuppVec {
        self.blocks.iter().fold(SuppVec::zero(), |a, b| a.add(b))
    }
}

/// Checks the chain conditions: (1) `m = min supp u_1 >= 2` with
/// successive normalized positive blocks; (eps) the sequence is decreasing
/// with `sum sqrt(eps_n) < 1`; (2) each `u_i`, `i >= 2`, is an
/// `(alpha_{d_{i-1}}, eps_{d_{i-1}})` block; (3) inside `supp u_i`, members
/// of `S_{alpha_j}` for `j <= d_{i-1}` lie in `S_{alpha_{d_{i-1}}}`.
pub fn verify_chain(cert: &ChainCert, budget: &Budget) -> Result<Verdict> {
    let m = cert.blocks.len();
    let Some(first) = cert.blocks.first() else {
        return Ok(Verdict::fail(Condition::One, None, "empty chain"));
    };
    let min1 = first.min_index().unwrap_or(0) as usize;
    if m < 2 || m != min1 {
        return Ok(Verdict::fail(
            Condition::One,
            Some(first.support()),
            format!("{} blocks but min supp u_1 = {}", m, min1),
        ));
    }
    for (i, b) in cert.blocks.iter().enumerate() {
        if let Err(e) = check_block_shape(&cert.model, b) {
            return Ok(Verdict::fail(Condition::One, Some(b.support()), format!("u_{}: {}", i + 1, e)));
        }
        if i > 0 && cert.blocks[i - 1].max_index() >= b.min_index() {
            return Ok(Verdict::fail(
                Condition::One,
                Some(b.support()),
                format!("u_{} and u_{} are not successive", i, i + 1),
            ));
        }
    }
    if let Err(why) = cert.eps_seq.check() {
        return Ok(Verdict::fail(Condition::Eps, None, why));
    }
    if cert.sub_certs.len() != m - 1 {
        return Ok(Verdict::fail(
            Condition::Two,
            None,
            format!("{} sub-certificates for {} blocks", cert.sub_certs.len(), m),
        ));
    }
    let d = cert.d();
    for i in 1..m {
        let sub = &cert.sub_certs[i - 1];
        let level = cert.alpha.assoc_pred(u64::from(d[i - 1]))?;
        let eps = match cert.eps_seq.get(d[i - 1]).and_then(Eps::new) {
            Ok(e) => e,
            Err(e) => return Ok(Verdict::fail(Condition::Eps, None, e.to_string())),
        };
        if sub.u != cert.blocks[i] || sub.alpha != level || sub.eps != eps || sub.model != cert.model {
            return Ok(Verdict::fail(
                Condition::Two,
                Some(cert.blocks[i].support()),
                format!("sub-certificate {} does not certify u_{} as a ({}, {}) block", i, i + 1, level, eps),
            ));
        }
        if let Verdict::Fail { witness, detail, .. } = verify_alpha_eps(sub, budget)? {
            return Ok(Verdict::fail(Condition::Two, witness, format!("u_{}: {}", i + 1, detail)));
        }
        let pool = cert.blocks[i].support();
        let mut seen: Vec<Ordinal> = Vec::new();
        for j in 1..=d[i - 1] {
            let lj = cert.alpha.assoc_pred(u64::from(j))?;
            if seen.contains(&lj) {
                continue;
            }
            for f in schreier::members_within(&lj, &pool, budget.max_sets)? {
                if !schreier::member(&f, &level) {
                    return Ok(Verdict::fail(
                        Condition::Three,
                        Some(f),
                        format!("set in S_{} inside supp u_{} is not in S_{}", lj, i + 1, level),
                    ));
                }
            }
            seen.push(lj);
        }
    }
    Ok(Verdict::Pass)
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct L3Check {
    pub lhs: Q,
    pub rhs: Q,
    pub holds: bool,
}

/// Both sides of `||u|J|| <= delta + (tau + 2 delta) sum_{i >= 2}
/// (u|J cap supp u_i)(t_i)` with `u = sum u_i / ||sum u_i||`; `points` are
/// `t_2, ..., t_n`.
pub fn chain_inequality_check(cert: &ChainCert, points: &[KPoint], tau: &Q, delta: &Q, j: &FinSet) -> Result<L3Check> {
    if points.len() + 1 != cert.blocks.len() {
        return Err(precondition!("expected {} points, got {}", cert.blocks.len() - 1, points.len()));
    }
    let total = cert.sum();
    if !j.is_subset(&total.support()) {
        return Err(precondition!("J = {} is not inside the chain support", j));
    }
    for t in points {
        t.validate(&cert.model)?;
    }
    let u = total.scale(&(Q::one() / norm(&cert.model, &total)));
    let lhs = norm(&cert.model, &u.restrict(j));
    let mut s = Q::zero();
    for (b, t) in cert.blocks[1..].iter().zip(points) {
        s += pairing(&cert.model, t, &u.restrict(&j.intersect(&b.support())));
    }
    let rhs = delta + (tau + delta * int(2)) * s;
    Ok(L3Check { holds: lhs <= rhs, lhs, rhs })
}

/// A verified chain with a point `t0` dominating the strong norming points
/// `t_2, ..., t_n` of its blocks.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ChainSearch {
    pub cert: ChainCert,
    pub t0: KPoint,
    pub points: Vec<KPoint>,
    pub tau: Q,
    pub delta: Q,
}

fn dominates(model: &SpaceModel, t0: &KPoint, blocks: &[SuppVec], points: &[KPoint], factor: &Q) -> bool {
    blocks
        .iter()
        .zip(points)
        .all(|(b, t)| b.iter().all(|(j, _)| t0.value_at(model, j).abs() >= factor * t.value_at(model, j).abs()))
}

/// Builds a chain of length `n` on `pool`: `u_1 = f_n`, then for each later
/// block a `(alpha_{d}, eps_d)` block after the previous one, and finally a
/// point `t0` with `f_j(t0) >= (tau - 2 delta) f_j(t_i)` on every
/// `supp u_i`. Only level-0 sub-blocks are searched.
pub fn dominated_chain_search(
    model: &SpaceModel,
    alpha: &Ordinal,
    pool: &FinSet,
    delta: &Q,
    n: u32,
    eps_seq: &EpsSeq,
    budget: &Budget,
) -> Result<ChainSearch> {
    if n < 2 {
        return Err(precondition!("a chain needs at least two blocks"));
    }
    if !pool.contains(n) {
        return Err(precondition!("the first block f_{} must lie in the window", n));
    }
    let tau = tau_estimate_in(model, pool, budget)?.lower;
    if !(*delta > Q::zero() && delta * int(2) < tau) {
        return Err(precondition!("need 0 < delta < tau/2 with tau = {}", tau));
    }
    let mut blocks = alloc::vec![SuppVec::unit(n)];
    let mut subs: Vec<AlphaEpsCert> = Vec::new();
    for i in 2..=n {
        let d = blocks.last().unwrap().max_index().unwrap();
        let level = alpha.assoc_pred(u64::from(d))?;
        if !level.is_zero() {
            return Err(Error::Exhausted(format!("block {} needs level {} > 0, which is not searched", i, level)));
        }
        let eps = eps_seq.get(d)?;
        let rest = FinSet::from_sorted(pool.iter().filter(|&k| k > d).collect());
        let run = find_zero_eps_block(model, &rest, &eps, budget)
            .map_err(|e| Error::Exhausted(format!("chain stopped after {} blocks: {}", i - 1, e)))?;
        blocks.push(run.cert.u.clone());
        subs.push(run.cert);
    }
    let points: Vec<KPoint> = subs.iter().map(|c| c.t0.clone()).collect();
    let cert =
        ChainCert { model: model.clone(), alpha: alpha.clone(), eps_seq: eps_seq.clone(), blocks, sub_certs: subs };
    if let Verdict::Fail { condition, detail, .. } = verify_chain(&cert, budget)? {
        return Err(Error::Exhausted(format!("constructed chain fails condition {}: {}", condition, detail)));
    }
    let factor = &tau - delta * int(2);
    let later = &cert.blocks[1..];
    let mut cands = alloc::vec![norming_point(model, &later.iter().fold(SuppVec::zero(), |a, b| a.add(b)))];
    cands.extend(points.iter().cloned());
    match &model.kind {
        ModelKind::SchreierSpace { .. } => {
            let all = points.iter().fold(FinSet::empty(), |a, t| a.union(&t.support()));
            cands.push(KPoint::Set(all));
        }
        ModelKind::Tsirelson { .. } => {
            let trees: Vec<Functional> =
                points.iter().filter_map(|t| if let KPoint::Tree(f) = t { Some(f.clone()) } else { None }).collect();
            cands.push(KPoint::Tree(Functional::Node(trees)));
        }
    }
    let t0 = cands
        .into_iter()
        .find(|t| t.validate(model).is_ok() && dominates(model, t, later, &points, &factor))
        .ok_or_else(|| Error::Exhausted(String::from("no candidate t0 dominates the block norming points")))?;
    Ok(ChainSearch { cert, t0, points, tau, delta: delta.clone() })
}

/// The normalized sum of a chain, offered as an `(alpha, eps)` block
/// strongly normed by the chain's `t0`, with its exhaustive verdict.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Assembly {
    pub cert: AlphaEpsCert,
    pub eps0: Q,
    pub verdict: Verdict,
}

/// Picks `eps0 = eps/2^j` with `delta < eps0^2` and `(tau + 2 delta) /
/// ((1 - eps0)(tau - 2 delta)) < 1 + eps`, then verifies the normalized sum.
pub fn assemble_block(chain: &ChainSearch, eps: &Q, budget: &Budget) -> Result<Assembly> {
    let e = Eps::new(eps.clone())?;
    if !verify_chain(&chain.cert, budget)?.is_pass() {
        return Err(precondition!("chain fails verification"));
    }
    let eps0 = (1..=24u32)
        .map(|j| eps / int(1i64 << j))
        .find(|e0| chain.delta < e0 * e0 && l0_inequality(&chain.tau, &chain.delta, e0, eps))
        .ok_or_else(|| precondition!("no eps0 with delta < eps0^2 meets the parameter inequality"))?;
    let model = &chain.cert.model;
    let total = chain.cert.sum();
    let u = total.scale(&(Q::one() / norm(model, &total)));
    let cert = AlphaEpsCert { model: model.clone(), u, alpha: chain.cert.alpha.clone(), eps: e, t0: chain.t0.clone() };
    let verdict = verify_alpha_eps(&cert, budget)?;
    Ok(Assembly { cert, eps0, verdict })
}

/// The `(0, 1/2)`-type block `(1/k) 1_A` with `A = {k, ..., 2k-1}` and
/// `t0 = A` in Schreier space.
pub fn schreier_average_cert(alpha: &Ordinal, k: u32, eps: &Q) -> Result<AlphaEpsCert> {
    let a = FinSet::interval(k, 2 * k - 1);
    let model = SpaceModel::schreier(Ordinal::nat(1));
    Ok(AlphaEpsCert {
        u: SuppVec::indicator(&a, &q(1, i64::from(k))),
        model,
        alpha: alpha.clone(),
        eps: Eps::new(eps.clone())?,
        t0: KPoint::Set(a),
    })
}
