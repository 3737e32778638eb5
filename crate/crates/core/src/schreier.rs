//! The Schreier families `S_alpha`.
//!
//! `S_0` holds the empty set and the singletons, `S_1` the sets with
//! `|F| <= min F`. A successor level `S_(z+1)` consists of unions
//! `F_1 < ... < F_n` of members of `S_z` with `n <= min F_1`, and a limit
//! level `S_l` is the union over `n` of `{F in S_(l_n + 1) : n <= min F}`
//! taken along [`Ordinal::assoc`]. Every level contains the empty set.
//!
//! Membership results are cached in a process-wide table keyed by
//! `(alpha, F)`. The table is read-mostly; inserts are idempotent because a
//! key always maps to the same answer.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use spin::RwLock;

use crate::budget::Budget;
use crate::error::{precondition, Error, Result};
use crate::finset::{FinSet, Window};
use crate::ordinal::{Class, Ordinal};

const MEMO_CAP: usize = 1 << 21;

static MEMO: RwLock<BTreeMap<(Ordinal, Vec<u32>), bool>> = RwLock::new(BTreeMap::new());

/// `F in S_alpha`.
pub fn member(f: &FinSet, alpha: &Ordinal) -> bool {
    member_slice(f.as_slice(), alpha)
}

pub(crate) fn member_slice(f: &[u32], alpha: &Ordinal) -> bool {
    let Some(&min) = f.first() else {
        return true;
    };
    match alpha.as_nat() {
        Some(0) => return f.len() <= 1,
        Some(1) => return f.len() as u64 <= u64::from(min),
        _ => {}
    }
    if f.len() == 1 {
        return true;
    }
    let key = (alpha.clone(), f.to_vec());
    if let Some(&hit) = MEMO.read().get(&key) {
        return hit;
    }
    let res = match alpha.classify() {
        Class::Successor(z) => successor_member(f, &z),
        Class::Limit => (1..=u64::from(min)).any(|n| {
            let level = alpha.assoc(n).expect("limit ordinals have associated sequences");
            member_slice(f, &level)
        }),
        Class::Zero => unreachable!(),
    };
    let mut memo = MEMO.write();
    if memo.len() >= MEMO_CAP {
        memo.clear();
    }
    memo.insert(key, res);
    res
}

/// Decides `f in S_(z+1)`: greedy longest valid prefixes first, then an
/// exact minimum-piece split if greedy needs too many pieces.
fn successor_member(f: &[u32], z: &Ordinal) -> bool {
    let limit = f[0] as usize;
    if let Some(count) = greedy_pieces(f, z, limit) {
        if count <= limit {
            return true;
        }
    }
    min_pieces(f, z) <= limit
}

/// Number of greedy pieces, or `None` once it exceeds `limit`.
fn greedy_pieces(f: &[u32], z: &Ordinal, limit: usize) -> Option<usize> {
    let mut start = 0;
    let mut count = 0;
    while start < f.len() {
        count += 1;
        if count > limit {
            return None;
        }
        let mut end = start + 1;
        while end < f.len() && member_slice(&f[start..=end], z) {
            end += 1;
        }
        start = end;
    }
    Some(count)
}

fn min_pieces(f: &[u32], z: &Ordinal) -> usize {
    let n = f.len();
    let mut best = alloc::vec![usize::MAX; n + 1];
    best[0] = 0;
    for j in 1..=n {
        for i in 0..j {
            if best[i] != usize::MAX && best[i] + 1 < best[j] && member_slice(&f[i..j], z) {
                best[j] = best[i] + 1;
            }
        }
    }
    best[n]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Maximality {
    Maximal,
    NotMaximal,
    NotMember,
}

/// Whether `F` is a maximal member of `S_alpha`. Membership of `F u {k}`
/// does not depend on which `k > max F` is added, so `k = max F + 1` is the
/// only extension tested.
pub fn is_maximal(f: &FinSet, alpha: &Ordinal) -> Result<Maximality> {
    let Some(max) = f.max_elem() else {
        return Err(precondition!("maximality is defined for nonempty sets"));
    };
    if !member(f, alpha) {
        return Ok(Maximality::NotMember);
    }
    Ok(if member(&f.with(max + 1), alpha) { Maximality::NotMaximal } else { Maximality::Maximal })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnumMode {
    All,
    MaximalInWindow,
}

/// All members of `S_alpha` inside `pool`, in lexicographic order. The walk
/// only extends members, which is complete because the families are
/// hereditary.
pub fn members_within(alpha: &Ordinal, pool: &FinSet, max_sets: usize) -> Result<Vec<FinSet>> {
    fn rec(
        alpha: &Ordinal,
        pool: &[u32],
        start: usize,
        cur: &mut Vec<u32>,
        out: &mut Vec<FinSet>,
        max_sets: usize,
    ) -> Result<()> {
        if out.len() >= max_sets {
            return Err(Error::Budget {
                what: "enumerated sets",
                needed: out.len() as u64 + 1,
                limit: max_sets as u64,
            });
        }
        out.push(FinSet::from_sorted(cur.clone()));
        for i in start..pool.len() {
            cur.push(pool[i]);
            if member_slice(cur, alpha) {
                rec(alpha, pool, i + 1, cur, out, max_sets)?;
            }
            cur.pop();
        }
        Ok(())
    }
    let mut out = Vec::new();
    rec(alpha, pool.as_slice(), 0, &mut Vec::new(), &mut out, max_sets)?;
    Ok(out)
}

pub fn enumerate(alpha: &Ordinal, window: Window, mode: EnumMode, budget: &Budget) -> Result<Vec<FinSet>> {
    if window.width() > budget.max_window {
        return Err(Error::Budget {
            what: "enumeration window",
            needed: window.width().into(),
            limit: budget.max_window.into(),
        });
    }
    let pool = window.to_set();
    let all = members_within(alpha, &pool, budget.max_sets)?;
    Ok(match mode {
        EnumMode::All => all,
        EnumMode::MaximalInWindow => {
            all.into_iter().filter(|g| pool.iter().all(|x| g.contains(x) || !member(&g.with(x), alpha))).collect()
        }
    })
}

/// A family of finite sets: a Schreier level, optionally confined to a
/// window, or an explicit hereditary list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Family {
    Schreier { alpha: Ordinal, window: Option<Window> },
    Explicit(Vec<FinSet>),
}

impl Family {
    /// Explicit family closed under subsets, sorted and deduplicated.
    pub fn explicit_closure(sets: &[FinSet]) -> Family {
        let mut all = Vec::new();
        for s in sets {
            s.for_each_subset_lex(|g| {
                all.push(g.clone());
                true
            });
        }
        if all.is_empty() {
            all.push(FinSet::empty());
        }
        all.sort();
        all.dedup();
        Family::Explicit(all)
    }

    /// Materialized members (bounded families only).
    pub fn members(&self, budget: &Budget) -> Result<Vec<FinSet>> {
        match self {
            Family::Explicit(v) => Ok(v.clone()),
            Family::Schreier { alpha, window: Some(w) } => enumerate(alpha, *w, EnumMode::All, budget),
            Family::Schreier { window: None, .. } => {
                Err(precondition!("a Schreier family needs a window to be materialized"))
            }
        }
    }

    pub fn is_hereditary(&self, budget: &Budget) -> Result<bool> {
        let members = self.members(budget)?;
        let mut ok = true;
        for m in &members {
            m.for_each_subset_lex(|g| {
                ok = members.binary_search(g).is_ok();
                ok
            });
            if !ok {
                break;
            }
        }
        Ok(ok)
    }
}

/// `F[M] = {F n M : F in F}` as an explicit family.
pub fn restrict(fam: &Family, m: &FinSet, budget: &Budget) -> Result<Family> {
    let mut out: Vec<FinSet> = fam.members(budget)?.iter().map(|f| f.intersect(m)).collect();
    out.sort();
    out.dedup();
    if out.is_empty() {
        out.push(FinSet::empty());
    }
    Ok(Family::Explicit(out))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Threshold {
    pub n: u32,
    pub verified_up_to: u32,
}

/// Least `n` such that every member of `S_xi` inside `[n, n + width]` is a
/// member of `S_eta`. Only certified inside that window.
pub fn threshold(xi: &Ordinal, eta: &Ordinal, width: u32, budget: &Budget) -> Result<Threshold> {
    if xi >= eta {
        return Err(precondition!("threshold needs xi < eta, got {} >= {}", xi, eta));
    }
    if width + 1 > budget.max_window {
        return Err(Error::Budget {
            what: "threshold window",
            needed: u64::from(width) + 1,
            limit: budget.max_window.into(),
        });
    }
    let max_start = budget.max_window.max(64);
    for n in 1..=max_start {
        let pool = FinSet::interval(n, n + width);
        let ok = members_within(xi, &pool, budget.max_sets)?.iter().all(|f| member(f, eta));
        if ok {
            return Ok(Threshold { n, verified_up_to: n + width });
        }
    }
    Err(Error::Exhausted(alloc::format!("no threshold n <= {} for {} into {}", max_start, xi, eta)))
}
