//! Independent brute-force oracles shared by integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use asyml1_core::ordinal::{Class, Ordinal};

/// Schreier membership straight from the recursive definition: every
/// decomposition into successive runs is tried, no greedy shortcut.
#[derive(Default)]
pub struct SplitOracle {
    memo: HashMap<(Ordinal, Vec<u32>), bool>,
}

impl SplitOracle {
    pub fn member(&mut self, f: &[u32], alpha: &Ordinal) -> bool {
        if f.is_empty() {
            return true;
        }
        let key = (alpha.clone(), f.to_vec());
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let min = f[0] as usize;
        let res = match alpha.classify() {
            Class::Zero => f.len() == 1,
            Class::Successor(z) => {
                if z.is_zero() {
                    f.len() <= min
                } else {
                    self.splits(f, &z, min)
                }
            }
            Class::Limit => (1..=min as u64).any(|n| {
                let lvl = alpha.fundamental(n).unwrap().succ();
                self.member(f, &lvl)
            }),
        };
        self.memo.insert(key, res);
        res
    }

    /// Can `f` be cut into at most `pieces` successive runs, each in `S_z`?
    fn splits(&mut self, f: &[u32], z: &Ordinal, pieces: usize) -> bool {
        if f.is_empty() {
            return true;
        }
        if pieces == 0 {
            return false;
        }
        for end in 1..=f.len() {
            if self.member(&f[..end], z) && self.splits(&f[end..], z, pieces - 1) {
                return true;
            }
        }
        false
    }
}

/// All subsets of `[1, n]` as sorted vectors.
pub fn power_set(n: u32) -> Vec<Vec<u32>> {
    (0u64..1 << n).map(|mask| (1..=n).filter(|i| mask >> (i - 1) & 1 == 1).collect()).collect()
}

pub fn alpha_set() -> Vec<Ordinal> {
    ["0", "1", "2", "3", "w", "w+1", "w*2", "w^2"].iter().map(|s| s.parse().unwrap()).collect()
}

use asyml1_core::Q;
use num_traits::Zero;

/// Tsirelson norm straight from the implicit equation.
///
/// An interval `E` acts on `x` only through the run of support points it
/// covers, and an admissible family is best served by letting `E_1` start at
/// its first support point. So every family of disjoint, successive runs of
/// support points (gaps anywhere) with `k <= first point` is tried. Families
/// whose single piece is all of `x` are skipped; they contribute at most
/// `theta * ||x|| < ||x||`. The table only caches this oracle's own answers.
#[derive(Default)]
pub struct TsirelsonOracle {
    memo: HashMap<Vec<(u32, Q)>, Q>,
}

impl TsirelsonOracle {
    pub fn norm(&mut self, theta: &Q, x: &[(u32, Q)]) -> Q {
        let x: Vec<(u32, Q)> = x.iter().filter(|(_, c)| !c.is_zero()).map(|(i, c)| (*i, abs(c))).collect();
        let sup = x.iter().map(|(_, c)| c.clone()).max().unwrap_or_else(Q::zero);
        if x.len() <= 1 {
            return sup;
        }
        if let Some(v) = self.memo.get(&x) {
            return v.clone();
        }
        let mut fams = Vec::new();
        runs(0, &x, &mut Vec::new(), &mut |fam: &[(usize, usize)]| {
            if !(fam.len() == 1 && fam[0] == (0, x.len())) {
                fams.push(fam.to_vec());
            }
        });
        let mut best = sup;
        for fam in fams {
            let s: Q = fam.iter().map(|&(a, b)| self.norm(theta, &x[a..b])).sum();
            let v = theta * s;
            if v > best {
                best = v;
            }
        }
        self.memo.insert(x, best.clone());
        best
    }
}

pub fn tsirelson_oracle(theta: &Q, x: &[(u32, Q)]) -> Q {
    TsirelsonOracle::default().norm(theta, x)
}

/// Calls `f` on every family of successive runs of positions of `x` with at
/// most `first point` members.
type Pieces = [(usize, usize)];

fn runs(from: usize, x: &[(u32, Q)], fam: &mut Vec<(usize, usize)>, f: &mut dyn FnMut(&Pieces)) {
    for a in from..x.len() {
        if fam.len() >= fam.first().map_or(x[a].0, |p| x[p.0].0) as usize {
            return;
        }
        for b in a + 1..=x.len() {
            fam.push((a, b));
            f(fam);
            runs(b, x, fam, f);
            fam.pop();
        }
    }
}

fn abs(c: &Q) -> Q {
    if c < &Q::zero() {
        -c.clone()
    } else {
        c.clone()
    }
}

/// Schreier-space norm by scanning every subset of the support.
pub fn schreier_norm_oracle(oracle: &mut SplitOracle, alpha: &Ordinal, x: &[(u32, Q)]) -> Q {
    let mut best = Q::zero();
    for mask in 0u64..1 << x.len() {
        let f: Vec<u32> = (0..x.len()).filter(|k| mask >> k & 1 == 1).map(|k| x[k].0).collect();
        if oracle.member(&f, alpha) {
            let s: Q = (0..x.len()).filter(|k| mask >> k & 1 == 1).map(|k| abs(&x[k].1)).sum();
            if s > best {
                best = s;
            }
        }
    }
    best
}
