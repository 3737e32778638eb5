//! One PASS/FAIL line per acceptance criterion. Runs as a plain binary
//! (`harness = false`) and exits nonzero on any failure that is not a
//! documented known failure.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use asyml1::json::read_family;
use asyml1_core::blockcert::{
    find_zero_eps_block, restrict_cert, schreier_average_cert, tau_estimate, verify_alpha_eps, AlphaEpsCert, EpsSeq,
};
use asyml1_core::budget::Budget;
use asyml1_core::finset::Window;
use asyml1_core::goodness::{prop_mp_run, MpInput};
use asyml1_core::normmodel::{a1_search, norm, SpaceModel, SuppVec};
use asyml1_core::rational::{int, q};
use asyml1_core::{schreier, Error, FinSet, Ordinal, Q};
use common::{alpha_set, power_set, SplitOracle, TsirelsonOracle};
use num_traits::One;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

/// Criteria shown to be unattainable. They still run and print FAIL; only
/// failures outside this list, or a listed criterion passing, fail the
/// target. Criterion 7: point masses at S_1 sets put every level set inside
/// the supporting set, so the image set is in S_1 by heredity, and
/// SchreierSpace(1) has no (1, eps) block for the run to start from.
const KNOWN_FAILURES: [usize; 1] = [7];

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn set(v: &[u32]) -> FinSet {
    FinSet::new(v.to_vec()).unwrap()
}

fn within(limit: Duration, start: Instant, detail: String) -> Outcome {
    if start.elapsed() <= limit {
        Ok(detail)
    } else {
        Err(format!("{detail}, but took longer than {}s", limit.as_secs()))
    }
}

fn schreier_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut oracle = SplitOracle::default();
    let sets = power_set(14);
    for alpha in alpha_set() {
        for f in &sets {
            if schreier::member(&set(f), &alpha) != oracle.member(f, &alpha) {
                return Err(format!("alpha {alpha}, F = {f:?}"));
            }
        }
    }
    within(Duration::from_secs(60), start, format!("{} sets x 8 levels agree", sets.len()))
}

/// Every subset of a member is a member, and so is every single-element
/// increment inside [1,12]; spreads are chains of such increments.
fn hereditary_and_spreading() -> Outcome {
    let mut checked = 0u64;
    for alpha in alpha_set() {
        for f in power_set(12) {
            let fs = set(&f);
            if !schreier::member(&fs, &alpha) {
                continue;
            }
            for i in 0..f.len() {
                let mut sub = f.clone();
                sub.remove(i);
                checked += 1;
                if !schreier::member(&set(&sub), &alpha) {
                    return Err(format!("alpha {alpha}: {sub:?} drops out of {f:?}"));
                }
                let next = f[i] + 1;
                if next <= 12 && f.get(i + 1) != Some(&next) {
                    let mut g = f.clone();
                    g[i] = next;
                    checked += 1;
                    if !schreier::member(&set(&g), &alpha) {
                        return Err(format!("alpha {alpha}: spread {g:?} of {f:?}"));
                    }
                }
            }
        }
    }
    Ok(format!("{checked} one-step subsets and spreads, zero violations"))
}

fn tsirelson_closed_form() -> Outcome {
    let start = Instant::now();
    let model = SpaceModel::tsirelson_default();
    for n in 2..=8u32 {
        let x = SuppVec::indicator(&FinSet::interval(n, 2 * n - 1), &int(1));
        let v = norm(&model, &x);
        if v != q(i64::from(n), 2) {
            return Err(format!("n = {n}: norm {v}"));
        }
    }
    let mut oracle = TsirelsonOracle::default();
    for mask in 0u32..1 << 8 {
        let x = SuppVec::from_pairs((1..=8).filter(|i| mask >> (i - 1) & 1 == 1).map(|i| (i, int(1)))).unwrap();
        let entries: Vec<(u32, Q)> = x.iter().map(|(i, c)| (i, c.clone())).collect();
        if norm(&model, &x) != oracle.norm(&q(1, 2), &entries) {
            return Err(format!("0/1 vector {x}"));
        }
    }
    within(Duration::from_secs(120), start, "n/2 for n = 2..8, 256 vectors match the oracle".into())
}

fn asymptotic_l1_floor() -> Outcome {
    let model = SpaceModel::tsirelson_default();
    let budget = Budget::default().with_evals(u64::MAX);
    let r = a1_search(&model, Window::new(2, 10).unwrap(), &[q(1, 2), q(1, 1)], &budget).map_err(|e| e.to_string())?;
    match r.worst_ratio {
        _ if r.partial => Err(format!("scan stopped after {} sequences", r.evaluated)),
        Some(w) if w >= q(1, 2) => Ok(format!("worst ratio {w} over {} sequences", r.evaluated)),
        Some(w) => Err(format!("ratio {w} below 1/2 at {:?}", r.witness)),
        None => Err("no block sequence evaluated".into()),
    }
}

fn zero_block_end_to_end() -> Outcome {
    let start = Instant::now();
    let b = Budget::default();
    let model = SpaceModel::schreier(Ordinal::nat(1));
    let run =
        find_zero_eps_block(&model, &Window::new(3, 60).unwrap().to_set(), &q(1, 2), &b).map_err(|e| e.to_string())?;
    let v = verify_alpha_eps(&run.cert, &b).map_err(|e| e.to_string())?;
    if !v.is_pass() {
        return Err(format!("{:?}", v));
    }
    within(Duration::from_secs(120), start, format!("u = {} with t0 = {}, m0 = {}", run.cert.u, run.cert.t0, run.m0))
}

fn stored_certs(b: &Budget) -> Result<Vec<AlphaEpsCert>, Error> {
    let sch = SpaceModel::schreier(Ordinal::nat(1));
    let ts = SpaceModel::tsirelson_default();
    let pool = |lo, hi| Window::new(lo, hi).unwrap().to_set();
    Ok(vec![
        schreier_average_cert(&Ordinal::zero(), 5, &q(1, 2))?,
        schreier_average_cert(&Ordinal::zero(), 6, &q(1, 2))?,
        find_zero_eps_block(&sch, &pool(3, 60), &q(1, 2), b)?.cert,
        find_zero_eps_block(&sch, &pool(3, 60), &q(2, 3), b)?.cert,
        find_zero_eps_block(&ts, &pool(3, 40), &q(1, 2), &b.with_evals(5000))?.cert,
    ])
}

fn restriction_property() -> Outcome {
    let b = Budget::default();
    let mut restricted = 0;
    let mut failure = None;
    for cert in stored_certs(&b).map_err(|e| e.to_string())? {
        if !verify_alpha_eps(&cert, &b).map_err(|e| e.to_string())?.is_pass() || cert.u.len() > 12 {
            continue;
        }
        let root = cert.eps.sqrt();
        cert.u.support().for_each_subset_lex(|i0| {
            if i0.is_empty() || !root.le_q(&norm(&cert.model, &cert.u.restrict(i0))) {
                return true;
            }
            restricted += 1;
            let ok = restrict_cert(&cert, i0).and_then(|r| verify_alpha_eps(&r, &b)).is_ok_and(|v| v.is_pass());
            if !ok {
                failure = Some(format!("{} restricted to {}", cert.u, i0));
            }
            ok
        });
    }
    match failure {
        Some(f) => Err(f),
        None => Ok(format!("{restricted} restrictions re-verified")),
    }
}

fn separation_transcript() -> Outcome {
    let start = Instant::now();
    let text = std::fs::read_to_string(fixture("family_s1_2_13.json")).map_err(|e| e.to_string())?;
    let fam = read_family(&serde_json::from_str(&text).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let input = MpInput {
        family: &fam,
        alpha: Ordinal::nat(1),
        rho: q(1, 1),
        eps_seq: EpsSeq::Default,
        window: Window::new(2, 13).unwrap().to_set(),
    };
    let t = prop_mp_run(&input, &Budget::default()).map_err(|e| e.to_string())?;
    if let Some(s) = t.first_failure() {
        return Err(format!("step {s} does not hold"));
    }
    if t.image_in_family {
        return Err(format!("image {} is in S_1", t.image));
    }
    within(Duration::from_secs(120), start, format!("all steps hold, image {} not in S_1", t.image))
}

fn tau_bounds() -> Outcome {
    let b = Budget::default().with_evals(4000);
    let models = [
        SpaceModel::schreier(Ordinal::nat(1)),
        SpaceModel::schreier(Ordinal::nat(2)),
        SpaceModel::tsirelson_default(),
        SpaceModel::tsirelson(q(2, 3), Ordinal::nat(1)).unwrap(),
    ];
    let mut runs = 0;
    for model in &models {
        for (lo, hi) in [(1, 6), (3, 12), (3, 20), (5, 9)] {
            let t = tau_estimate(model, Window::new(lo, hi).unwrap(), &b).map_err(|e| e.to_string())?;
            if !(model.a1_constant <= t.lower && t.lower <= Q::one() && t.recheck(model)) {
                return Err(format!("{model} on [{lo},{hi}]: lower {}", t.lower));
            }
            runs += 1;
        }
    }
    let t = tau_estimate(&models[0], Window::new(3, 20).unwrap(), &b).map_err(|e| e.to_string())?;
    if t.lower != Q::one() {
        return Err(format!("Schreier(1) on [3,20] gives {}", t.lower));
    }
    Ok(format!("{runs} runs in bounds, Schreier(1) on [3,20] reaches 1"))
}

fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().join("artifact.json");
    let f = |name: &str| fixture(name).display().to_string();
    let cases: Vec<Vec<String>> = vec![
        vec!["block".into(), "verify".into(), f("bad_cert.json")],
        vec!["block".into(), "verify".into(), f("avg_cert.json")],
        vec!["block".into(), "restrict".into(), f("avg_cert.json"), "--to".into(), "5,6,7,8".into()],
        vec!["msep".into(), "check-norming".into(), f("family_s1_2_13.json")],
        vec![
            "msep".into(),
            "run".into(),
            "--family".into(),
            f("family_s1_2_13.json"),
            "--window".into(),
            "2:13".into(),
        ],
        vec![
            "msep".into(),
            "good".into(),
            "--family".into(),
            f("family_s1_2_13.json"),
            "--mu".into(),
            "0".into(),
            "--set".into(),
            "2,3".into(),
            "--n".into(),
            "1".into(),
        ],
    ];
    for case in &cases {
        let mut bytes = Vec::new();
        for _ in 0..2 {
            Command::new(env!("CARGO_BIN_EXE_asyml1"))
                .args(case)
                .arg("--out")
                .arg(&out)
                .output()
                .map_err(|e| e.to_string())?;
            bytes.push(std::fs::read(&out).map_err(|e| format!("{case:?}: {e}"))?);
        }
        if bytes[0] != bytes[1] {
            return Err(format!("{case:?} differs between runs"));
        }
    }
    Ok(format!("{} fixture commands byte-identical", cases.len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("Schreier oracle equivalence", schreier_oracle_equivalence),
        ("hereditarity and spreading", hereditary_and_spreading),
        ("Tsirelson closed form", tsirelson_closed_form),
        ("asymptotic-l1 floor", asymptotic_l1_floor),
        ("(0, eps) block end to end", zero_block_end_to_end),
        ("restriction keeps blocks", restriction_property),
        ("separation transcript", separation_transcript),
        ("tau bounds", tau_bounds),
        ("CLI determinism", cli_determinism),
    ];
    let (mut passed, mut unexpected) = (0, 0);
    for (k, (name, check)) in criteria.iter().enumerate() {
        let id = k + 1;
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        let known = KNOWN_FAILURES.contains(&id);
        match outcome {
            Ok(detail) => {
                passed += 1;
                println!("PASS {id} {name} ({secs:.1}s): {detail}");
                if known {
                    println!("     criterion {id} is listed as unattainable but passed; update the list");
                    unexpected += 1;
                }
            }
            Err(detail) => {
                println!("FAIL {id} {name} ({secs:.1}s): {detail}");
                if known {
                    println!("     known failure, see the README");
                } else {
                    unexpected += 1;
                }
            }
        }
    }
    println!("{passed} of {} criteria pass, {unexpected} unexpected", criteria.len());
    if unexpected > 0 {
        std::process::exit(1);
    }
}
