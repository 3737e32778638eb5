//! Finitely supported measures on norming points, the even-part and splice
//! notation for index sets, goodness and admissibility on finite windows,
//! and the measure-separation run with a fully re-derivable transcript.
//!
//! Basis functions act on points through `f_n(t) = |e_n(t)|`, so every
//! integral below is of a non-negative function.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use num_traits::{One, Signed, Zero};

use crate::blockcert::{
    assemble_block, dominated_chain_search, find_zero_eps_block, verify_alpha_eps, AlphaEpsCert, EpsSeq, Verdict,
};
use crate::budget::Budget;
use crate::error::{precondition, Error, Result};
use crate::finset::{FinSet, Window};
use crate::normmodel::{norm, KPoint, SpaceModel, SuppVec};
use crate::ordinal::Ordinal;
use crate::rational::{int, Q};
use crate::schreier;

fn f_at(model: &SpaceModel, t: &KPoint, n: u32) -> Q {
    t.value_at(model, n).abs()
}

/// Non-negative weights on finitely many points, total mass at most 1.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Measure {
    model: SpaceModel,
    weights: Vec<(KPoint, Q)>,
}

impl Measure {
    pub fn new(model: &SpaceModel, weights: Vec<(KPoint, Q)>) -> Result<Self> {
        let mut total = Q::zero();
        for (t, w) in &weights {
            if w.is_negative() {
                return Err(precondition!("negative weight {} at {}", w, t));
            }
            t.validate(model)?;
            total += w;
        }
        if total > Q::one() {
            return Err(precondition!("total mass {} exceeds 1", total));
        }
        Ok(Measure { model: model.clone(), weights })
    }

    pub fn point(model: &SpaceModel, t: KPoint) -> Result<Self> {
        Measure::new(model, alloc::vec![(t, Q::one())])
    }

    pub fn zero(model: &SpaceModel) -> Self {
        Measure { model: model.clone(), weights: Vec::new() }
    }

    pub fn model(&self) -> &SpaceModel {
        &self.model
    }

    pub fn weights(&self) -> &[(KPoint, Q)] {
        &self.weights
    }

    pub fn total(&self) -> Q {
        self.weights.iter().map(|(_, w)| w).sum()
    }

    /// `mu({t : pred(t)})`.
    pub fn mass_where(&self, mut pred: impl FnMut(&KPoint) -> bool) -> Q {
        self.weights.iter().filter(|(t, _)| pred(t)).map(|(_, w)| w).sum()
    }

    /// `mu([f_n >= c])`.
    pub fn level_mass(&self, n: u32, c: &Q) -> Q {
        self.mass_where(|t| f_at(&self.model, t, n) >= *c)
    }

    /// `int f_n dmu`.
    pub fn integral(&self, n: u32) -> Q {
        self.weights.iter().map(|(t, w)| w * f_at(&self.model, t, n)).sum()
    }

    /// `int sum_n x_n f_n dmu` for a non-negative `x`.
    pub fn pair(&self, x: &SuppVec) -> Q {
        self.weights.iter().map(|(t, w)| w * x.iter().map(|(n, c)| c * f_at(&self.model, t, n)).sum::<Q>()).sum()
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (t, w)) in self.weights.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}: {}", t, w)?;
        }
        f.write_str("}")
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MeasureFamily {
    members: Vec<Measure>,
}

impl MeasureFamily {
    pub fn new(members: Vec<Measure>) -> Result<Self> {
        let Some(first) = members.first() else {
            return Err(precondition!("a measure family needs at least one member"));
        };
        if members.iter().any(|m| m.model != first.model) {
            return Err(precondition!("all measures of a family must live on the same model"));
        }
        Ok(MeasureFamily { members })
    }

    /// Point masses at the maximal members of `S_alpha` inside `window`.
    pub fn maximal_point_masses(model: &SpaceModel, alpha: &Ordinal, window: Window, budget: &Budget) -> Result<Self> {
        let sets = schreier::enumerate(alpha, window, schreier::EnumMode::MaximalInWindow, budget)?;
        let members = sets.into_iter().map(|s| Measure::point(model, KPoint::Set(s))).collect::<Result<Vec<_>>>()?;
        MeasureFamily::new(members)
    }

    pub fn members(&self) -> &[Measure] {
        &self.members
    }

    pub fn model(&self) -> &SpaceModel {
        &self.members[0].model
    }
}

// ---------------------------------------------------------------------------
// Index-set notation.

/// `A^(2) = {m_2, m_4, ...}` together with `m_{2i} -> m_{2i-1}`.
pub fn even_part(a: &FinSet) -> Result<(FinSet, BTreeMap<u32, u32>)> {
    if !a.len().is_multiple_of(2) {
        return Err(precondition!("{} has odd cardinality", a));
    }
    let s = a.as_slice();
    let pred: BTreeMap<u32, u32> = s.chunks(2).map(|p| (p[1], p[0])).collect();
    Ok((FinSet::from_unsorted(pred.keys().copied().collect())?, pred))
}

/// `(F, A) u L = F u F^- u {l_j : j >= 3}` with `L` given by a finite
/// prefix. `core` is `F u F^-`; `tail` holds the available `l_j`, `j >= 3`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Splice {
    pub core: FinSet,
    pub tail: FinSet,
}

impl Splice {
    pub fn to_set(&self) -> FinSet {
        self.core.union(&self.tail)
    }
}

pub fn splice(f: &FinSet, a: &FinSet, l: &FinSet) -> Result<Splice> {
    let (a2, pred) = even_part(a)?;
    if !f.is_subset(&a2) {
        return Err(precondition!("F = {} is not inside A^(2) = {}", f, a2));
    }
    if let (Some(ma), Some(l1)) = (a.max_elem(), l.min_elem()) {
        if ma >= l1 {
            return Err(precondition!("max A = {} is not below l_1 = {}", ma, l1));
        }
    }
    let minus = FinSet::from_unsorted(f.iter().map(|m| pred[&m]).collect())?;
    Ok(Splice { core: f.union(&minus), tail: FinSet::from_unsorted(l.iter().skip(2).collect())? })
}

/// `F_2` has even cardinality and `F_1 ⊆ F_2^(2)`.
pub fn is_appropriate(f1: &FinSet, f2: &FinSet) -> bool {
    even_part(f2).is_ok_and(|(a2, _)| f1.is_subset(&a2))
}

/// `mu([f_{l_{2i}} >= eps_{l_{2i-1}}]) >= rho` for every `i <= n`.
pub fn is_good(mu: &Measure, l: &FinSet, n: usize, rho: &Q, eps_seq: &EpsSeq) -> Result<bool> {
    if l.len() < 2 * n {
        return Err(precondition!("prefix {} is shorter than 2n = {}", l, 2 * n));
    }
    let s = l.as_slice();
    for i in 0..n {
        if mu.level_mass(s[2 * i + 1], &eps_seq.get(s[2 * i])?) < *rho {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Finite-window admissibility of `(F1, F2)`: every `mu` in the family that
/// is `((F1,F2) u L, n)`-good for some `n <= n_max` has a partner `nu` in
/// the family, good for the same data, with `nu(f_m) < delta_{m^-}` for all
/// `m in F2^(2) \ F1` and `nu(f_{l_2}) < delta_{l_1}`. Values of `n` beyond
/// the available prefix are skipped.
#[allow(clippy::too_many_arguments)]
pub fn admissible_window(
    fam: &MeasureFamily,
    f1: &FinSet,
    f2: &FinSet,
    l: &FinSet,
    n_max: usize,
    rho: &Q,
    eps_seq: &EpsSeq,
    delta_seq: &EpsSeq,
) -> Result<bool> {
    if !is_appropriate(f1, f2) {
        return Err(precondition!("({}, {}) is not appropriate", f1, f2));
    }
    if l.len() < 2 {
        return Err(precondition!("L needs at least two terms"));
    }
    let s = splice(f1, f2, l)?.to_set();
    let (a2, pred) = even_part(f2)?;
    let small: Vec<(u32, Q)> = a2.minus(f1).iter().map(|m| Ok((m, delta_seq.get(pred[&m])?))).collect::<Result<_>>()?;
    let (l1, l2) = (l.as_slice()[0], l.as_slice()[1]);
    let d_l1 = delta_seq.get(l1)?;
    for n in 0..=n_max.min(s.len() / 2) {
        for mu in fam.members() {
            if !is_good(mu, &s, n, rho, eps_seq)? {
                continue;
            }
            let mut ok = false;
            for nu in fam.members() {
                if is_good(nu, &s, n, rho, eps_seq)?
                    && small.iter().all(|(m, d)| nu.integral(*m) < *d)
                    && nu.integral(l2) < d_l1
                {
                    ok = true;
                    break;
                }
            }
            if !ok {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Norming checks.

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RhoCheck {
    pub pass: bool,
    pub worst: Q,
    pub witness: Option<SuppVec>,
    pub checked: u64,
}

/// For every non-zero vector on `window` with coordinates in
/// `grid u {0}`, the best ratio `mu(x) / ||x||` over the family; the check
/// passes when the worst of these is at least `rho`. This certifies nothing
/// outside the grid.
pub fn rho_norms_check(fam: &MeasureFamily, window: &FinSet, grid: &[Q], rho: &Q, budget: &Budget) -> Result<RhoCheck> {
    if grid.is_empty() {
        return Err(precondition!("empty coefficient grid"));
    }
    if grid.iter().any(|c| !c.is_positive()) {
        return Err(precondition!("grid coefficients must be positive"));
    }
    let base = grid.len() as u64 + 1;
    let total = u32::try_from(window.len()).ok().and_then(|k| base.checked_pow(k)).map(|t| t - 1);
    match total {
        Some(t) if t <= budget.max_evals => {}
        _ => {
            return Err(Error::Budget {
                what: "norming grid",
                needed: total.unwrap_or(u64::MAX),
                limit: budget.max_evals,
            })
        }
    }
    let model = fam.model();
    let idx = window.as_slice();
    let mut digits = alloc::vec![0usize; idx.len()];
    let mut worst: Option<(Q, SuppVec)> = None;
    let mut checked = 0;
    loop {
        let mut k = 0;
        while k < digits.len() && digits[k] == grid.len() {
            digits[k] = 0;
            k += 1;
        }
        if k == digits.len() {
            break;
        }
        digits[k] += 1;
        let x = SuppVec::from_pairs(
            idx.iter().zip(&digits).filter(|(_, &d)| d > 0).map(|(&n, &d)| (n, grid[d - 1].clone())),
        )?;
        let nx = norm(model, &x);
        let best = fam.members().iter().map(|m| m.pair(&x)).max().unwrap() / nx;
        checked += 1;
        if worst.as_ref().is_none_or(|(w, _)| best < *w) {
            worst = Some((best, x));
        }
    }
    let (worst, witness) = match worst {
        Some((w, x)) => (w, Some(x)),
        None => (Q::zero(), None),
    };
    Ok(RhoCheck { pass: witness.is_some() && worst >= *rho, worst, witness, checked })
}

/// `mu([f_n >= D delta])`; `None` when `delta = 0`, where the index is
/// dropped instead.
pub fn chebyshev_mass(mu: &Measure, n: u32, d: &Q, delta: &Q) -> Result<Option<Q>> {
    if !d.is_positive() {
        return Err(precondition!("D must be positive, got {}", d));
    }
    if delta.is_zero() {
        return Ok(None);
    }
    Ok(Some(mu.level_mass(n, &(d * delta))))
}

// ---------------------------------------------------------------------------
// The measure-separation run.

/// The least-denominator `eps in (0, rho/2)` with
/// `((rho - 2 eps)/(2 + eps))^2 > eps^2 + rho^2/5`, numerators increasing
/// within each denominator.
pub fn feasible_eps(rho: &Q, max_den: i64) -> Result<Q> {
    if !(rho.is_positive() && *rho <= Q::one()) {
        return Err(precondition!("rho must lie in (0,1], got {}", rho));
    }
    let half = rho / int(2);
    for den in 2..=max_den {
        for num in 1..den {
            let e = Q::new(num.into(), den.into());
            if e >= half {
                break;
            }
            if *e.numer() != num.into() {
                continue;
            }
            if eps_display(rho, &e) {
                return Ok(e);
            }
        }
    }
    Err(precondition!("no eps with denominator at most {} meets the feasibility inequality for rho = {}", max_den, rho))
}

fn eps_target(rho: &Q, eps: &Q) -> Q {
    let r = (rho - eps * int(2)) / (eps + int(2));
    &r * &r
}

fn eps_display(rho: &Q, eps: &Q) -> bool {
    eps_target(rho, eps) > eps * eps + rho * rho / int(5)
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Relation {
    Le,
    Lt,
    Eq,
    Ge,
    Gt,
}

impl Relation {
    fn holds(self, a: &Q, b: &Q) -> bool {
        match self {
            Relation::Le => a <= b,
            Relation::Lt => a < b,
            Relation::Eq => a == b,
            Relation::Ge => a >= b,
            Relation::Gt => a > b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Lt => "<",
            Relation::Eq => "=",
            Relation::Ge => ">=",
            Relation::Gt => ">",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        Some(match s {
            "<=" => Relation::Le,
            "<" => Relation::Lt,
            "=" => Relation::Eq,
            ">=" => Relation::Ge,
            ">" => Relation::Gt,
            _ => return None,
        })
    }
}

/// `chain[0] rel chain[1] rel chain[2] ...`, evaluated exactly.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Step {
    pub name: String,
    pub relation: Relation,
    pub chain: Vec<Q>,
    pub holds: bool,
}

impl Step {
    fn new(name: impl Into<String>, relation: Relation, chain: Vec<Q>) -> Step {
        let holds = chain.windows(2).all(|w| relation.holds(&w[0], &w[1]));
        Step { name: name.into(), relation, chain, holds }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.name)?;
        for (i, v) in self.chain.iter().enumerate() {
            if i > 0 {
                write!(f, " {} ", self.relation.symbol())?;
            }
            write!(f, "{}", v)?;
        }
        f.write_str(if self.holds { " (holds)" } else { " (fails)" })
    }
}

/// Per-index data of a run; `i` counts pairs `(n_{2i-1}, n_{2i})` from 1.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct IndexRow {
    pub i: u32,
    pub n_odd: u32,
    pub n_even: u32,
    /// `a_i`, the block coefficient on `n_{2i}`.
    pub coeff: Q,
    /// `delta_i = int f_{n_{2i}} dmu`.
    pub delta: Q,
    /// `mu([f_{n_{2i}} >= D delta_i])`, absent when `delta_i = 0`.
    pub phi_mass: Option<Q>,
    /// `mu([f_{n_{2i}} >= eps_{n_{2i-1}}])`.
    pub level_mass: Q,
}

/// Everything a measure-separation run computed, re-derivable from the
/// chosen measure, the block and the parameters.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MpTranscript {
    pub alpha: Ordinal,
    pub rho: Q,
    pub eps: Q,
    pub d: Q,
    pub eps_seq: EpsSeq,
    pub window: FinSet,
    pub block: AlphaEpsCert,
    pub mu_index: usize,
    pub mu: Measure,
    pub rows: Vec<IndexRow>,
    pub steps: Vec<Step>,
    /// `{i : mu([f_{n_{2i}} >= eps_{n_{2i-1}}]) >= rho^2/5}`.
    pub i_set: FinSet,
    /// `{n_{2i} : i in I}`.
    pub image: FinSet,
    /// `member(image, alpha)`; the conclusion asks for `false`.
    pub image_in_family: bool,
    /// The norming hypothesis was only checked on this grid description.
    pub norming_grid: String,
}

impl MpTranscript {
    pub fn all_hold(&self) -> bool {
        self.steps.iter().all(|s| s.holds) && !self.image_in_family
    }

    pub fn first_failure(&self) -> Option<&Step> {
        self.steps.iter().find(|s| !s.holds)
    }

    /// Recomputes every field from the stored measure, block and parameters.
    pub fn recompute(&self) -> Result<MpTranscript> {
        let run = MpRun {
            alpha: &self.alpha,
            rho: &self.rho,
            eps: &self.eps,
            eps_seq: &self.eps_seq,
            window: &self.window,
            norming_grid: &self.norming_grid,
        };
        run.transcript(&self.block, self.mu_index, &self.mu)
    }
}

/// Inputs of a measure-separation run. `window` is `N = (n_1 < ... <
/// n_{2k})`; the block lives on `N^(2)`.
#[derive(Clone, Debug)]
pub struct MpInput<'a> {
    pub family: &'a MeasureFamily,
    pub alpha: Ordinal,
    pub rho: Q,
    pub eps_seq: EpsSeq,
    pub window: FinSet,
}

struct MpRun<'a> {
    alpha: &'a Ordinal,
    rho: &'a Q,
    eps: &'a Q,
    eps_seq: &'a EpsSeq,
    window: &'a FinSet,
    norming_grid: &'a str,
}

fn failed(step: &str, detail: impl Into<String>) -> Error {
    Error::Failed { step: String::from(step), detail: detail.into() }
}

impl MpRun<'_> {
    fn transcript(&self, block: &AlphaEpsCert, mu_index: usize, mu: &Measure) -> Result<MpTranscript> {
        let model = mu.model();
        let (rho, eps) = (self.rho, self.eps);
        let two = int(2);
        let d = (eps + &two) / (rho - eps * &two);
        let pairs: Vec<(u32, u32)> = self.window.as_slice().chunks(2).map(|p| (p[0], p[1])).collect();
        let a: Vec<Q> = pairs.iter().map(|&(_, ne)| block.u.get(ne)).collect();
        let mut rows = Vec::new();
        for (k, &(no, ne)) in pairs.iter().enumerate() {
            let delta = mu.integral(ne);
            let phi_mass = chebyshev_mass(mu, ne, &d, &delta)?;
            let level_mass = mu.level_mass(ne, &self.eps_seq.get(no)?);
            rows.push(IndexRow {
                i: k as u32 + 1,
                n_odd: no,
                n_even: ne,
                coeff: a[k].clone(),
                delta,
                phi_mass,
                level_mass,
            });
        }
        let in_i0 = |r: &IndexRow| r.delta.is_positive();
        let phi = |r: &IndexRow, t: &KPoint| in_i0(r) && f_at(model, t, r.n_even) >= &d * &r.delta;

        let mut steps = Vec::new();
        let target = eps_target(rho, eps);
        steps.push(Step::new(
            "eps-feasibility",
            Relation::Gt,
            alloc::vec![target.clone(), eps * eps + rho * rho / int(5)],
        ));
        steps.push(Step::new("D", Relation::Eq, alloc::vec![d.clone(), (eps + &two) / (rho - eps * &two)]));
        let odd_tail: Q = pairs.iter().map(|&(no, _)| self.eps_seq.get(no)).sum::<Result<Q>>()?;
        steps.push(Step::new("odd-tail", Relation::Lt, alloc::vec![odd_tail, eps.clone()]));

        let int_u = mu.pair(&block.u);
        steps.push(Step::new("EmP1", Relation::Ge, alloc::vec![int_u.clone(), rho.clone()]));
        for r in rows.iter().filter(|r| in_i0(r)) {
            let m = r.phi_mass.clone().unwrap();
            steps.push(Step::new(format!("EmP2[{}]", r.i), Relation::Le, alloc::vec![m, Q::one() / &d]));
        }

        // A = int sum a_i f_i phi_i dmu, B = sum a_i int_{[f_i < D delta_i]} f_i dmu
        let mut big_a = Q::zero();
        let mut big_b = Q::zero();
        // G(t) = ||sum_{I0} a_i phi_i(t) e_{n_2i}||
        let mut phi_int = Q::zero();
        let mut k1_int = Q::zero();
        let mut mid4 = Q::zero();
        for (t, w) in mu.weights() {
            let mut j = Vec::new();
            for r in rows.iter().filter(|r| in_i0(r)) {
                let f = f_at(model, t, r.n_even);
                if phi(r, t) {
                    big_a += w * &r.coeff * &f;
                    j.push(r.n_even);
                } else {
                    big_b += w * &r.coeff * &f;
                }
            }
            let j = FinSet::from_unsorted(j)?;
            let g = norm(model, &block.u.restrict(&j));
            phi_int += w * &g;
            if g >= *eps {
                k1_int += w * &g;
                mid4 += w * j.iter().map(|n| block.u.get(n) * f_at(model, &block.t0, n)).sum::<Q>();
            }
        }
        let one_eps = Q::one() + eps;
        mid4 *= &one_eps;
        let sum_adl: Q = rows.iter().filter(|r| in_i0(r)).map(|r| &r.coeff * &r.delta * &r.level_mass).sum();
        steps.push(Step::new("EmP3-split", Relation::Eq, alloc::vec![int_u.clone(), &big_a + &big_b]));
        steps.push(Step::new("EmP3", Relation::Le, alloc::vec![big_a, phi_int.clone()]));
        steps.push(Step::new("EmP4", Relation::Le, alloc::vec![k1_int, mid4, &one_eps / &d]));
        steps.push(Step::new("EmP5", Relation::Le, alloc::vec![phi_int, eps + &one_eps / &d]));
        let odd_weighted: Q =
            rows.iter().filter(|r| in_i0(r)).map(|r| Ok(&r.coeff * self.eps_seq.get(r.n_odd)?)).sum::<Result<Q>>()?;
        let base = eps + &one_eps / &d;
        steps.push(Step::new(
            "EmP6",
            Relation::Le,
            alloc::vec![
                rho.clone(),
                int_u,
                &base + &big_b,
                &base + &d * &sum_adl + odd_weighted,
                &base + eps + &d * &sum_adl,
            ],
        ));
        steps.push(Step::new(
            "EmP6-identity",
            Relation::Eq,
            alloc::vec![(rho - eps * &two - &one_eps / &d) / &d, target.clone()],
        ));
        steps.push(Step::new("EmP7", Relation::Ge, alloc::vec![sum_adl, target]));

        let cut = rho * rho / int(5);
        let chosen: Vec<&IndexRow> = rows.iter().filter(|r| r.level_mass >= cut).collect();
        let i_set = FinSet::from_unsorted(chosen.iter().map(|r| r.i).collect())?;
        let image = FinSet::from_unsorted(chosen.iter().map(|r| r.n_even).collect())?;
        let image_in_family = schreier::member(&image, self.alpha);
        Ok(MpTranscript {
            alpha: self.alpha.clone(),
            rho: rho.clone(),
            eps: eps.clone(),
            d,
            eps_seq: self.eps_seq.clone(),
            window: self.window.clone(),
            block: block.clone(),
            mu_index,
            mu: mu.clone(),
            rows,
            steps,
            i_set,
            image,
            image_in_family,
            norming_grid: String::from(self.norming_grid),
        })
    }
}

/// Evaluates every step for a given block and family member without
/// verifying the block or aborting, for diagnosis and for re-derivation.
pub fn evaluate_transcript(
    input: &MpInput<'_>,
    eps: &Q,
    block: &AlphaEpsCert,
    mu_index: usize,
) -> Result<MpTranscript> {
    let mu = input.family.members().get(mu_index).ok_or_else(|| precondition!("no family member {}", mu_index))?;
    even_part(&input.window)?;
    let run = MpRun {
        alpha: &input.alpha,
        rho: &input.rho,
        eps,
        eps_seq: &input.eps_seq,
        window: &input.window,
        norming_grid: "not checked",
    };
    run.transcript(block, mu_index, mu)
}

/// Denominator cap for the eps scan.
pub const EPS_MAX_DEN: i64 = 1000;

fn run_prelude(input: &MpInput<'_>, budget: &Budget) -> Result<(Q, FinSet, String)> {
    let (pool, _) = even_part(&input.window)?;
    if pool.is_empty() {
        return Err(precondition!("the window must contain at least one pair"));
    }
    let grid = [Q::one()];
    let check = rho_norms_check(input.family, &input.window, &grid, &input.rho, budget)?;
    let desc = format!("0/1 vectors on {} ({} checked, worst ratio {})", input.window, check.checked, check.worst);
    if !check.pass {
        let w = check.witness.map(|x| x.to_string()).unwrap_or_default();
        return Err(failed(
            "norming",
            format!("family does not {}-norm the grid: ratio {} at {}", input.rho, check.worst, w),
        ));
    }
    let eps = feasible_eps(&input.rho, EPS_MAX_DEN)?;
    let odd: Q = input.window.as_slice().chunks(2).map(|p| input.eps_seq.get(p[0])).sum::<Result<Q>>()?;
    if odd >= eps {
        return Err(precondition!("sum of eps over odd positions is {}, not below eps = {}", odd, eps));
    }
    Ok((eps, pool, desc))
}

fn finish(input: &MpInput<'_>, eps: &Q, desc: &str, block: &AlphaEpsCert) -> Result<MpTranscript> {
    let (mu_index, mu) = input
        .family
        .members()
        .iter()
        .enumerate()
        .find(|(_, m)| m.pair(&block.u) >= input.rho)
        .ok_or_else(|| failed("norming", format!("no measure pairs with the block to at least {}", input.rho)))?;
    let run = MpRun {
        alpha: &input.alpha,
        rho: &input.rho,
        eps,
        eps_seq: &input.eps_seq,
        window: &input.window,
        norming_grid: desc,
    };
    let t = run.transcript(block, mu_index, mu)?;
    if let Some(s) = t.first_failure() {
        return Err(failed(&s.name, s.to_string()));
    }
    if t.image_in_family {
        return Err(failed("separation", format!("{} lies in S_{}", t.image, t.alpha)));
    }
    Ok(t)
}

/// Runs the measure-separation argument: check the norming hypothesis on a
/// 0/1 grid, pick `eps`, find an `(alpha, eps)` block on `N^(2)`, select
/// the first measure pairing with it to at least `rho`, and evaluate every
/// step. The run aborts with the first failing step.
pub fn prop_mp_run(input: &MpInput<'_>, budget: &Budget) -> Result<MpTranscript> {
    let (eps, pool, desc) = run_prelude(input, budget)?;
    let block = search_block(input.family.model(), &input.alpha, &pool, &eps, &input.eps_seq, budget)?;
    finish(input, &eps, &desc, &block)
}

/// The same run with a supplied block, which must verify as an
/// `(alpha, eps')` block on `N^(2)` with `eps' <= eps`.
pub fn prop_mp_run_with_block(input: &MpInput<'_>, block: &AlphaEpsCert, budget: &Budget) -> Result<MpTranscript> {
    let (eps, pool, desc) = run_prelude(input, budget)?;
    if block.alpha != input.alpha || block.model != *input.family.model() {
        return Err(precondition!(
            "block is for S_{} on {}, run needs S_{} on {}",
            block.alpha,
            block.model,
            input.alpha,
            input.family.model()
        ));
    }
    if !block.u.support().is_subset(&pool) {
        return Err(precondition!("block support {} is not inside N^(2) = {}", block.u.support(), pool));
    }
    if !block.eps.le_q(&eps) {
        return Err(precondition!("block eps {} exceeds the run's eps {}", block.eps, eps));
    }
    if let Verdict::Fail { condition, detail, .. } = verify_alpha_eps(block, budget)? {
        return Err(failed("block", format!("condition {}: {}", condition, detail)));
    }
    finish(input, &eps, &desc, block)
}

fn search_block(
    model: &SpaceModel,
    alpha: &Ordinal,
    pool: &FinSet,
    eps: &Q,
    eps_seq: &EpsSeq,
    budget: &Budget,
) -> Result<AlphaEpsCert> {
    let wrap = |e: Error| match e {
        Error::Budget { .. } => e,
        other => failed("block", other.to_string()),
    };
    if alpha.is_zero() {
        return find_zero_eps_block(model, pool, eps, budget).map(|r| r.cert).map_err(wrap);
    }
    let n = pool.min_elem().unwrap();
    let delta = eps * eps / int(64);
    let chain = dominated_chain_search(model, alpha, pool, &delta, n, eps_seq, budget).map_err(wrap)?;
    let asm = assemble_block(&chain, eps, budget).map_err(wrap)?;
    match asm.verdict {
        Verdict::Pass => Ok(asm.cert),
        Verdict::Fail { condition, detail, .. } => {
            Err(failed("block", format!("assembled block fails condition {}: {}", condition, detail)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockcert::Eps;
    use crate::rational::q;
    use alloc::vec;

    fn sch1() -> SpaceModel {
        SpaceModel::schreier(Ordinal::nat(1))
    }

    fn set(s: &str) -> FinSet {
        s.parse().unwrap()
    }

    #[test]
    fn notation_examples() {
        let (a2, pred) = even_part(&set("2,5,7,9")).unwrap();
        assert_eq!(a2, set("5,9"));
        assert_eq!((pred[&5], pred[&9]), (2, 7));
        assert!(even_part(&FinSet::empty()).unwrap().0.is_empty());
        assert_eq!(even_part(&set("1,2")).unwrap().0, set("2"));
        assert!(even_part(&set("1,2,3")).is_err());

        let l = FinSet::interval(10, 20);
        let s = splice(&set("5"), &set("2,5,7,9"), &l).unwrap();
        assert_eq!(s.core, set("2,5"));
        assert_eq!(s.tail.min_elem(), Some(12));
        let s = splice(&FinSet::empty(), &FinSet::empty(), &FinSet::interval(4, 9)).unwrap();
        assert_eq!(s.to_set(), FinSet::interval(6, 9));
        assert!(splice(&set("9"), &set("2,5,7,9"), &FinSet::interval(8, 12)).is_err());

        assert!(is_appropriate(&set("5"), &set("2,5,7,9")));
        assert!(!is_appropriate(&set("2"), &set("2,5,7,9")));
        assert!(is_appropriate(&FinSet::empty(), &FinSet::empty()));
    }

    #[test]
    fn goodness_examples() {
        let m = sch1();
        let mu = Measure::point(&m, KPoint::Set(set("3,4,5"))).unwrap();
        let l = set("2,4");
        assert!(is_good(&mu, &l, 1, &q(1, 1), &EpsSeq::Default).unwrap());
        assert!(!is_good(&Measure::zero(&m), &l, 1, &q(1, 2), &EpsSeq::Default).unwrap());
        assert!(is_good(&Measure::zero(&m), &l, 0, &q(1, 2), &EpsSeq::Default).unwrap());
        assert!(is_good(&mu, &l, 2, &q(1, 2), &EpsSeq::Default).is_err());
        assert!(Measure::new(&m, vec![(KPoint::Set(set("3")), q(2, 3)), (KPoint::Set(set("4")), q(1, 2))]).is_err());
    }

    #[test]
    fn admissibility_examples() {
        let m = sch1();
        let eps = EpsSeq::Default;
        let delta = EpsSeq::Explicit(vec![q(1, 2); 20]);
        let l = FinSet::interval(10, 15);
        let (f1, f2) = (FinSet::empty(), set("2,5"));
        let zero = MeasureFamily::new(vec![Measure::zero(&m)]).unwrap();
        assert!(admissible_window(&zero, &f1, &f2, &l, 2, &q(1, 2), &eps, &delta).unwrap());

        // mu is good on the spliced set {12,...,15}; nu avoids f_5 and f_11
        let good = Measure::point(&m, KPoint::Set(set("13,15"))).unwrap();
        let avoid = Measure::point(&m, KPoint::Set(set("12,13,14,15"))).unwrap();
        let fam = MeasureFamily::new(vec![good.clone(), avoid]).unwrap();
        assert!(admissible_window(&fam, &f1, &f2, &l, 2, &q(1, 2), &eps, &delta).unwrap());

        let heavy = Measure::point(&m, KPoint::Set(set("5,11,13,15"))).unwrap();
        let fam = MeasureFamily::new(vec![heavy]).unwrap();
        assert!(!admissible_window(&fam, &f1, &f2, &l, 2, &q(1, 2), &eps, &delta).unwrap());
        assert!(admissible_window(&fam, &set("2"), &f2, &l, 2, &q(1, 2), &eps, &delta).is_err());
    }

    #[test]
    fn rho_norming_examples() {
        let m = sch1();
        let b = Budget::default();
        let w = Window::new(2, 7).unwrap();
        let fam = MeasureFamily::maximal_point_masses(&m, &Ordinal::nat(1), w, &b).unwrap();
        let c = rho_norms_check(&fam, &w.to_set(), &[q(1, 2), q(1, 1)], &q(1, 1), &b).unwrap();
        assert!(c.pass);
        assert_eq!(c.worst, q(1, 1));
        let zero = MeasureFamily::new(vec![Measure::zero(&m)]).unwrap();
        let c = rho_norms_check(&zero, &w.to_set(), &[q(1, 1)], &q(1, 1), &b).unwrap();
        assert!(!c.pass);
        assert_eq!(c.worst, Q::zero());
        let one = MeasureFamily::new(vec![Measure::point(&m, KPoint::Set(set("4,5"))).unwrap()]).unwrap();
        let c = rho_norms_check(&one, &set("4"), &[q(1, 1)], &q(1, 1), &b).unwrap();
        assert_eq!((c.worst, c.checked), (q(1, 1), 1));
        assert!(rho_norms_check(&one, &set("4"), &[], &q(1, 1), &b).is_err());
    }

    #[test]
    fn chebyshev_examples() {
        let m = sch1();
        let mu = Measure::point(&m, KPoint::Set(set("3"))).unwrap();
        assert_eq!(chebyshev_mass(&mu, 3, &q(2, 1), &mu.integral(3)).unwrap(), Some(Q::zero()));
        let two = Measure::new(&m, vec![(KPoint::Set(set("3")), q(1, 2)), (KPoint::Set(set("4")), q(1, 2))]).unwrap();
        let d = two.integral(3);
        assert_eq!(d, q(1, 2));
        assert_eq!(chebyshev_mass(&two, 3, &q(2, 1), &d).unwrap(), Some(q(1, 2)));
        assert_eq!(chebyshev_mass(&two, 9, &q(2, 1), &Q::zero()).unwrap(), None);
        assert!(chebyshev_mass(&two, 3, &Q::zero(), &d).is_err());
    }

    #[test]
    fn eps_scan() {
        assert_eq!(feasible_eps(&q(1, 1), EPS_MAX_DEN).unwrap(), q(1, 25));
        assert!(!eps_display(&q(1, 1), &q(1, 20)));
        assert!(feasible_eps(&q(1, 1), 10).is_err());
    }

    #[test]
    fn transcript_recomputes_and_names_failures() {
        let m = sch1();
        let b = Budget::default();
        let w = Window::new(2, 9).unwrap();
        let fam = MeasureFamily::maximal_point_masses(&m, &Ordinal::nat(1), w, &b).unwrap();
        let window = w.to_set();
        let input = MpInput { family: &fam, alpha: Ordinal::zero(), rho: q(1, 1), eps_seq: EpsSeq::Default, window };
        // the only blocks that fit are far too coarse for eps = 1/25
        let block = AlphaEpsCert {
            model: m.clone(),
            u: SuppVec::indicator(&set("5,7,9"), &q(1, 3)),
            alpha: Ordinal::zero(),
            eps: Eps::new(q(1, 50)).unwrap(),
            t0: KPoint::Set(set("5,7,9")),
        };
        let err = prop_mp_run_with_block(&input, &block, &b).unwrap_err();
        assert!(matches!(err, Error::Failed { ref step, .. } if step == "block"), "{err}");

        let mu = &fam.members()[0];
        let run = MpRun {
            alpha: &input.alpha,
            rho: &input.rho,
            eps: &q(1, 25),
            eps_seq: &input.eps_seq,
            window: &input.window,
            norming_grid: "",
        };
        let t = run.transcript(&block, 0, mu).unwrap();
        assert_eq!(t.recompute().unwrap(), t);
        assert!(t.steps.iter().find(|s| s.name == "EmP6-identity").unwrap().holds);
        assert!(t.steps.iter().find(|s| s.name == "D").unwrap().holds);
        assert_eq!(t.d, q(51, 23));

        let err = prop_mp_run(&input, &b).unwrap_err();
        assert!(matches!(err, Error::Failed { ref step, .. } if step == "block"), "{err}");
    }
}
