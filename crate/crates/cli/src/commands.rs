use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use asyml1_core::blockcert::{
    assemble_block, chain_inequality_check, dominated_chain_search, find_zero_eps_block, restrict_cert, tau_estimate,
    verify_alpha_eps, verify_chain, EpsSeq,
};
use asyml1_core::budget::Budget;
use asyml1_core::finset::Window;
use asyml1_core::goodness::{is_good, prop_mp_run, prop_mp_run_with_block, rho_norms_check, MeasureFamily, MpInput};
use asyml1_core::normmodel::{a1_search, kpoints, norm, norming_point, SpaceModel, SuppVec};
use asyml1_core::ordinal::Class;
use asyml1_core::rational::parse_q;
use asyml1_core::schreier::{self, EnumMode, Family, Maximality};
use asyml1_core::{FinSet, Ordinal, Q};
use clap::Subcommand;
use num_traits::{One, Signed};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::json as j;
use crate::{Command, ModelArgs, Outcome, Status};

pub fn dispatch(cmd: &Command, cfg: &RunConfig) -> Result<Outcome> {
    let b = &cfg.budget;
    match cmd {
        Command::Schreier(c) => schreier_cmd(c, b),
        Command::Norm(c) => norm_cmd(c, b),
        Command::Block(c) => block_cmd(c, b),
        Command::Chain(c) => chain_cmd(c, b),
        Command::Msep(c) => msep_cmd(c, b),
        Command::Ordinal(c) => ordinal_cmd(c),
    }
}

fn ord(s: &str) -> Result<Ordinal> {
    s.parse().with_context(|| format!("ordinal `{s}`"))
}

fn rat(s: &str) -> Result<Q> {
    parse_q(s).with_context(|| format!("rational `{s}`"))
}

fn set(s: &str) -> Result<FinSet> {
    s.parse().with_context(|| format!("set `{s}`"))
}

fn window(s: &str) -> Result<Window> {
    s.parse().with_context(|| format!("window `{s}`"))
}

fn grid(s: &str) -> Result<Vec<Q>> {
    s.split(',').map(|c| rat(c.trim())).collect()
}

fn eps_seq(s: &str) -> Result<EpsSeq> {
    s.parse().with_context(|| format!("eps sequence `{s}`"))
}

fn model(m: &ModelArgs) -> Result<SpaceModel> {
    let alpha = ord(&m.alpha)?;
    match m.model.as_str() {
        "schreier" => Ok(SpaceModel::schreier(alpha)),
        "tsirelson" => Ok(SpaceModel::tsirelson(rat(&m.theta)?, alpha)?),
        other => Err(anyhow!("unknown model `{other}` (expected schreier or tsirelson)")),
    }
}

/// Reads a JSON file. Artifacts written by this tool are unwrapped to their
/// `result`, and `key` is followed when present, so the output of one
/// command can be fed to the next.
fn load(path: &Path, key: &str) -> Result<Value> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut v: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if v.get("schema_version").is_some() {
        if let Some(r) = v.get_mut("result") {
            v = r.take();
        }
    }
    if let Some(inner) = v.get_mut(key) {
        v = inner.take();
    }
    Ok(v)
}

// ---------------------------------------------------------------------------

#[derive(Subcommand, Debug)]
pub enum SchreierCmd {
    /// Membership of a set in S_alpha.
    Member {
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        set: String,
    },
    /// All members of S_alpha inside a window.
    Enum {
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        window: String,
        /// Keep only sets that cannot be extended inside the window.
        #[arg(long)]
        maximal: bool,
    },
    /// Least n with S_from inside [n, n + width] contained in S_to.
    Threshold {
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long, default_value_t = 12)]
        width: u32,
    },
    /// The trace {F n M} of S_alpha on a window.
    Restrict {
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        window: String,
        #[arg(long)]
        to: String,
    },
}

impl SchreierCmd {
    pub fn name(&self) -> &'static str {
        match self {
            SchreierCmd::Member { .. } => "member",
            SchreierCmd::Enum { .. } => "enum",
            SchreierCmd::Threshold { .. } => "threshold",
            SchreierCmd::Restrict { .. } => "restrict",
        }
    }
}

fn schreier_cmd(c: &SchreierCmd, b: &Budget) -> Result<Outcome> {
    match c {
        SchreierCmd::Member { alpha, set: s } => {
            let (a, f) = (ord(alpha)?, set(s)?);
            let maximal =
                if f.is_empty() { Value::Null } else { json!(schreier::is_maximal(&f, &a)? == Maximality::Maximal) };
            Ok(Outcome::pass(
                json!({"alpha": j::text(&a), "set": j::set(&f), "member": schreier::member(&f, &a), "maximal": maximal}),
            ))
        }
        SchreierCmd::Enum { alpha, window: w, maximal } => {
            let (a, w) = (ord(alpha)?, window(w)?);
            let mode = if *maximal { EnumMode::MaximalInWindow } else { EnumMode::All };
            let sets = schreier::enumerate(&a, w, mode, b)?;
            Ok(Outcome::pass(json!({
                "alpha": j::text(&a),
                "window": j::text(&w),
                "maximal": maximal,
                "count": sets.len(),
                "sets": sets.iter().map(j::set).collect::<Vec<_>>(),
            })))
        }
        SchreierCmd::Threshold { from, to, width } => {
            let t = schreier::threshold(&ord(from)?, &ord(to)?, *width, b)?;
            Ok(Outcome::pass(json!({"n": t.n, "verified_up_to": t.verified_up_to})))
        }
        SchreierCmd::Restrict { alpha, window: w, to } => {
            let fam = Family::Schreier { alpha: ord(alpha)?, window: Some(window(w)?) };
            let r = schreier::restrict(&fam, &set(to)?, b)?;
            let members = r.members(b)?;
            Ok(Outcome::pass(json!({
                "hereditary": r.is_hereditary(b)?,
                "count": members.len(),
                "members": members.iter().map(j::set).collect::<Vec<_>>(),
            })))
        }
    }
}

// ---------------------------------------------------------------------------

#[derive(Subcommand, Debug)]
pub enum NormCmd {
    /// Exact norm of a finitely supported vector, with a norming point.
    Eval {
        #[command(flatten)]
        model: ModelArgs,
        /// Coefficients as `3:1,4:1/2`.
        #[arg(long)]
        vec: String,
    },
    /// Worst ratio ||sum u_i|| / sum ||u_i|| over grid block sequences.
    A1Search {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        window: String,
        #[arg(long, default_value = "1/2,1")]
        grid: String,
    },
    /// Points of the norming set supported in a window.
    Kpoints {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        window: String,
        /// Tree depth for Tsirelson functionals.
        #[arg(long, default_value_t = 1)]
        depth: u32,
    },
}

impl NormCmd {
    pub fn name(&self) -> &'static str {
        match self {
            NormCmd::Eval { .. } => "eval",
            NormCmd::A1Search { .. } => "a1-search",
            NormCmd::Kpoints { .. } => "kpoints",
        }
    }
}

fn norm_cmd(c: &NormCmd, b: &Budget) -> Result<Outcome> {
    match c {
        NormCmd::Eval { model: m, vec } => {
            let m = model(m)?;
            let x: SuppVec = vec.parse().with_context(|| format!("vector `{vec}`"))?;
            Ok(Outcome::pass(json!({
                "model": j::model(&m),
                "vec": j::vector(&x),
                "norm": j::q(&norm(&m, &x)),
                "norming_point": j::text(&norming_point(&m, &x)),
            })))
        }
        NormCmd::A1Search { model: m, window: w, grid: g } => {
            let m = model(m)?;
            let r = a1_search(&m, window(w)?, &grid(g)?, b)?;
            let violated = r.worst_ratio.as_ref().is_some_and(|w| *w < m.a1_constant);
            let result = json!({
                "model": j::model(&m),
                "worst_ratio": r.worst_ratio.as_ref().map(j::q),
                "witness": r.witness.blocks().iter().map(j::vector).collect::<Vec<_>>(),
                "evaluated": r.evaluated,
                "partial": r.partial,
                "violated": violated,
            });
            // a violation is a failure even when the scan was cut short
            let status = match (violated, r.partial) {
                (true, _) => Status::Fail,
                (false, true) => Status::Resource,
                (false, false) => Status::Pass,
            };
            Ok(Outcome { status, result })
        }
        NormCmd::Kpoints { model: m, window: w, depth } => {
            let m = model(m)?;
            let pts = kpoints(&m, window(w)?, *depth, b)?;
            Ok(Outcome::pass(json!({
                "model": j::model(&m),
                "count": pts.len(),
                "points": pts.iter().map(j::text).collect::<Vec<_>>(),
            })))
        }
    }
}

// ---------------------------------------------------------------------------

#[derive(Subcommand, Debug)]
pub enum BlockCmd {
    /// Builds a (0, eps) block from the modulus tau and verifies it.
    Find0 {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        window: String,
        #[arg(long)]
        eps: String,
    },
    /// Exhaustively verifies a stored certificate.
    Verify { cert: PathBuf },
    /// Restricts a certificate to a subset of its support.
    Restrict {
        cert: PathBuf,
        #[arg(long)]
        to: String,
    },
    /// Lower bound for the modulus tau on a window.
    Tau {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        window: String,
    },
}

impl BlockCmd {
    pub fn name(&self) -> &'static str {
        match self {
            BlockCmd::Find0 { .. } => "find0",
            BlockCmd::Verify { .. } => "verify",
            BlockCmd::Restrict { .. } => "restrict",
            BlockCmd::Tau { .. } => "tau",
        }
    }
}

fn block_cmd(c: &BlockCmd, b: &Budget) -> Result<Outcome> {
    match c {
        BlockCmd::Find0 { model: m, window: w, eps } => {
            let m = model(m)?;
            let run = find_zero_eps_block(&m, &window(w)?.to_set(), &rat(eps)?, b)?;
            // searches never certify themselves
            let v = verify_alpha_eps(&run.cert, b)?;
            Ok(Outcome::check(
                v.is_pass(),
                json!({
                    "cert": j::verified_cert(&run.cert, &v),
                    "verdict": j::verdict(&v),
                    "tau": j::tau(&run.tau),
                    "delta": j::q(&run.delta),
                    "eps0": j::q(&run.eps0),
                    "m": run.m,
                    "m0": run.m0,
                    "proof_m0": run.proof_m0,
                }),
            ))
        }
        BlockCmd::Verify { cert } => {
            let c = j::read_cert(&load(cert, "cert")?)?;
            let v = verify_alpha_eps(&c, b)?;
            Ok(Outcome::check(v.is_pass(), json!({"cert": j::verified_cert(&c, &v), "verdict": j::verdict(&v)})))
        }
        BlockCmd::Restrict { cert, to } => {
            let c = j::read_cert(&load(cert, "cert")?)?;
            let r = restrict_cert(&c, &set(to)?)?;
            let v = verify_alpha_eps(&r, b)?;
            Ok(Outcome::check(v.is_pass(), json!({"cert": j::verified_cert(&r, &v), "verdict": j::verdict(&v)})))
        }
        BlockCmd::Tau { model: m, window: w } => {
            let m = model(m)?;
            let t = tau_estimate(&m, window(w)?, b)?;
            let ok = t.recheck(&m) && m.a1_constant <= t.lower && t.lower <= Q::one();
            Ok(Outcome::check(ok, json!({"model": j::model(&m), "tau": j::tau(&t), "rechecked": ok})))
        }
    }
}

// ---------------------------------------------------------------------------

#[derive(Subcommand, Debug)]
pub enum ChainCmd {
    /// Searches a chain with a dominating point t0.
    Search {
        #[command(flatten)]
        model: ModelArgs,
        /// Level of the chain.
        #[arg(long, default_value = "1")]
        level: String,
        #[arg(long, default_value = "2:40")]
        window: String,
        #[arg(long, default_value_t = 2)]
        len: u32,
        #[arg(long)]
        delta: String,
        #[arg(long, default_value = "default")]
        eps_seq: String,
        /// Also assemble the normalized sum as an (alpha, eps) block.
        #[arg(long)]
        assemble: Option<String>,
    },
    /// Verifies a stored chain.
    Verify { chain: PathBuf },
    /// Both sides of the domination inequality for a subset J of the chain.
    CheckL3 {
        chain: PathBuf,
        #[arg(long)]
        set: String,
    },
    /// Rechecks f_j(t0) >= (tau - 2 delta) f_j(t_i) on every later block.
    CheckL4 { chain: PathBuf },
}

impl ChainCmd {
    pub fn name(&self) -> &'static str {
        match self {
            ChainCmd::Search { .. } => "search",
            ChainCmd::Verify { .. } => "verify",
            ChainCmd::CheckL3 { .. } => "check-l3",
            ChainCmd::CheckL4 { .. } => "check-l4",
        }
    }
}

fn chain_cmd(c: &ChainCmd, b: &Budget) -> Result<Outcome> {
    match c {
        ChainCmd::Search { model: m, level, window: w, len, delta, eps_seq: e, assemble } => {
            let m = model(m)?;
            let s =
                dominated_chain_search(&m, &ord(level)?, &window(w)?.to_set(), &rat(delta)?, *len, &eps_seq(e)?, b)?;
            let v = verify_chain(&s.cert, b)?;
            let mut result = json!({"search": j::chain_search(&s), "verdict": j::verdict(&v)});
            let mut ok = v.is_pass();
            if let Some(eps) = assemble {
                let a = assemble_block(&s, &rat(eps)?, b)?;
                ok &= a.verdict.is_pass();
                result["assembly"] = json!({
                    "cert": j::verified_cert(&a.cert, &a.verdict),
                    "eps0": j::q(&a.eps0),
                    "verdict": j::verdict(&a.verdict),
                });
            }
            Ok(Outcome::check(ok, result))
        }
        ChainCmd::Verify { chain } => {
            let v = load(chain, "search")?;
            let cert = j::read_chain_cert(v.get("chain").unwrap_or(&v))?;
            let verdict = verify_chain(&cert, b)?;
            Ok(Outcome::check(verdict.is_pass(), json!({"verdict": j::verdict(&verdict)})))
        }
        ChainCmd::CheckL3 { chain, set: s } => {
            let cs = j::read_chain_search(&load(chain, "search")?)?;
            let jset = set(s)?;
            let r = chain_inequality_check(&cs.cert, &cs.points, &cs.tau, &cs.delta, &jset)?;
            Ok(Outcome::check(
                r.holds,
                json!({"J": j::set(&jset), "lhs": j::q(&r.lhs), "rhs": j::q(&r.rhs), "holds": r.holds}),
            ))
        }
        ChainCmd::CheckL4 { chain } => {
            let cs = j::read_chain_search(&load(chain, "search")?)?;
            if cs.points.len() + 1 != cs.cert.blocks.len() {
                return Err(asyml1_core::Error::Precondition(format!(
                    "expected {} points, got {}",
                    cs.cert.blocks.len() - 1,
                    cs.points.len()
                ))
                .into());
            }
            let m = &cs.cert.model;
            cs.t0.validate(m)?;
            let factor = &cs.tau - &cs.delta * Q::from_integer(2.into());
            let mut violation = Value::Null;
            'outer: for (i, (u, t)) in cs.cert.blocks[1..].iter().zip(&cs.points).enumerate() {
                t.validate(m)?;
                for jj in u.support().iter() {
                    let lhs = cs.t0.value_at(m, jj).abs();
                    let rhs = &factor * t.value_at(m, jj).abs();
                    if lhs < rhs {
                        violation = json!({"block": i + 2, "j": jj, "lhs": j::q(&lhs), "rhs": j::q(&rhs)});
                        break 'outer;
                    }
                }
            }
            let ok = violation.is_null();
            Ok(Outcome::check(ok, json!({"factor": j::q(&factor), "holds": ok, "violation": violation})))
        }
    }
}

// ---------------------------------------------------------------------------

#[derive(Subcommand, Debug)]
pub enum MsepCmd {
    /// Runs the separation argument and emits its transcript.
    Run {
        #[arg(long)]
        family: PathBuf,
        /// Level of the block and of the target family.
        #[arg(long, default_value = "1")]
        alpha: String,
        #[arg(long, default_value = "1")]
        rho: String,
        #[arg(long)]
        window: String,
        #[arg(long, default_value = "default")]
        eps_seq: String,
        /// Use this certificate instead of searching for a block.
        #[arg(long)]
        block: Option<PathBuf>,
    },
    /// Grid check that sup over the family of |mu(x)| is at least rho ||x||.
    CheckNorming {
        family: PathBuf,
        #[arg(long, default_value = "2:7")]
        window: String,
        #[arg(long, default_value = "1/2,1")]
        grid: String,
        #[arg(long, default_value = "1")]
        rho: String,
    },
    /// Whether a family member is (L, n)-good.
    Good {
        #[arg(long)]
        family: PathBuf,
        /// Index of the member in the family.
        #[arg(long)]
        mu: usize,
        #[arg(long)]
        set: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "1")]
        rho: String,
        #[arg(long, default_value = "default")]
        eps_seq: String,
    },
    /// Point masses at the maximal S_alpha sets of a window.
    Family {
        #[command(flatten)]
        model: ModelArgs,
        /// Level of the supporting sets.
        #[arg(long, default_value = "1")]
        level: String,
        #[arg(long)]
        window: String,
    },
}

impl MsepCmd {
    pub fn name(&self) -> &'static str {
        match self {
            MsepCmd::Run { .. } => "run",
            MsepCmd::CheckNorming { .. } => "check-norming",
            MsepCmd::Good { .. } => "good",
            MsepCmd::Family { .. } => "family",
        }
    }
}

fn load_family(path: &Path) -> Result<MeasureFamily> {
    j::read_family(&load(path, "family")?)
}

fn msep_cmd(c: &MsepCmd, b: &Budget) -> Result<Outcome> {
    match c {
        MsepCmd::Run { family, alpha, rho, window: w, eps_seq: e, block } => {
            let fam = load_family(family)?;
            let input = MpInput {
                family: &fam,
                alpha: ord(alpha)?,
                rho: rat(rho)?,
                eps_seq: eps_seq(e)?,
                window: window(w)?.to_set(),
            };
            let t = match block {
                Some(p) => prop_mp_run_with_block(&input, &j::read_cert(&load(p, "cert")?)?, b)?,
                None => prop_mp_run(&input, b)?,
            };
            let ok = t.all_hold() && !t.image_in_family;
            let mut result = json!({"transcript": j::transcript(&t), "all_hold": t.all_hold()});
            if let Some(s) = t.first_failure() {
                result["first_failure"] = json!(s.name);
            }
            Ok(Outcome::check(ok, result))
        }
        MsepCmd::CheckNorming { family, window: w, grid: g, rho } => {
            let fam = load_family(family)?;
            let r = rho_norms_check(&fam, &window(w)?.to_set(), &grid(g)?, &rat(rho)?, b)?;
            Ok(Outcome::check(r.pass, j::rho_check(&r)))
        }
        MsepCmd::Good { family, mu, set: s, n, rho, eps_seq: e } => {
            let fam = load_family(family)?;
            let m = fam.members().get(*mu).ok_or_else(|| {
                asyml1_core::Error::Precondition(format!("family has {} members, no index {mu}", fam.members().len()))
            })?;
            let good = is_good(m, &set(s)?, *n, &rat(rho)?, &eps_seq(e)?)?;
            Ok(Outcome::pass(json!({"good": good})))
        }
        MsepCmd::Family { model: m, level, window: w } => {
            let fam = MeasureFamily::maximal_point_masses(&model(m)?, &ord(level)?, window(w)?, b)?;
            Ok(Outcome::pass(json!({"family": j::family(&fam), "count": fam.members().len()})))
        }
    }
}

// ---------------------------------------------------------------------------

#[derive(Subcommand, Debug)]
pub enum OrdinalCmd {
    /// Zero, successor or limit, with the predecessor or a fundamental sequence prefix.
    Classify { ordinal: String },
    /// The associated ordinals alpha_n and alpha_n^- used by S_alpha.
    Assoc {
        ordinal: String,
        #[arg(long)]
        n: u64,
    },
    /// Order comparison.
    Compare { a: String, b: String },
}

impl OrdinalCmd {
    pub fn name(&self) -> &'static str {
        match self {
            OrdinalCmd::Classify { .. } => "classify",
            OrdinalCmd::Assoc { .. } => "assoc",
            OrdinalCmd::Compare { .. } => "compare",
        }
    }
}

fn ordinal_cmd(c: &OrdinalCmd) -> Result<Outcome> {
    match c {
        OrdinalCmd::Classify { ordinal } => {
            let a = ord(ordinal)?;
            let result = match a.classify() {
                Class::Zero => json!({"class": "zero"}),
                Class::Successor(p) => json!({"class": "successor", "pred": j::text(&p)}),
                Class::Limit => json!({
                    "class": "limit",
                    "fundamental": (1..=4).filter_map(|n| a.fundamental(n)).map(|o| j::text(&o)).collect::<Vec<_>>(),
                }),
            };
            Ok(Outcome::pass(result))
        }
        OrdinalCmd::Assoc { ordinal, n } => {
            let a = ord(ordinal)?;
            Ok(Outcome::pass(json!({"assoc": j::text(&a.assoc(*n)?), "assoc_pred": j::text(&a.assoc_pred(*n)?)})))
        }
        OrdinalCmd::Compare { a, b } => {
            let (x, y) = (ord(a)?, ord(b)?);
            let rel = match x.cmp(&y) {
                std::cmp::Ordering::Less => "<",
                std::cmp::Ordering::Equal => "=",
                std::cmp::Ordering::Greater => ">",
            };
            Ok(Outcome::pass(json!({"relation": rel})))
        }
    }
}
