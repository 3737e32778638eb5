//! JSON forms of the core types. Rationals are lowest-terms `"p/q"` strings
//! (integers without a denominator), ordinals use the ordinal text syntax,
//! vectors are `{"coeffs": {"3": "1", "4": "1/2"}}` and points their display
//! form, which spells out the whole functional tree.

use anyhow::{anyhow, bail, Context, Result};
use asyml1_core::blockcert::{AlphaEpsCert, ChainCert, ChainSearch, Eps, EpsSeq, TauEstimate, Verdict};
use asyml1_core::goodness::{Measure, MeasureFamily, MpTranscript, RhoCheck, Step};
use asyml1_core::normmodel::{KPoint, ModelKind, SpaceModel, SuppVec};
use asyml1_core::rational::{fmt_q, parse_q};
use asyml1_core::{FinSet, Ordinal, Q, VERIFIER_VERSION};
use serde_json::{json, Map, Value};

pub fn q(x: &Q) -> Value {
    Value::String(fmt_q(x))
}

pub fn qs(xs: &[Q]) -> Value {
    Value::Array(xs.iter().map(q).collect())
}

pub fn set(s: &FinSet) -> Value {
    json!(s.as_slice())
}

pub fn text<T: std::fmt::Display>(x: &T) -> Value {
    Value::String(x.to_string())
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| anyhow!("missing field `{key}`"))
}

fn str_field<'a>(v: &'a Value, key: &str) -> Result<&'a str> {
    field(v, key)?.as_str().ok_or_else(|| anyhow!("field `{key}` must be a string"))
}

fn array_field<'a>(v: &'a Value, key: &str) -> Result<&'a Vec<Value>> {
    field(v, key)?.as_array().ok_or_else(|| anyhow!("field `{key}` must be an array"))
}

pub fn read_q(v: &Value, key: &str) -> Result<Q> {
    Ok(parse_q(str_field(v, key)?)?)
}

fn parse_text<T: std::str::FromStr>(v: &Value, key: &str) -> Result<T>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    str_field(v, key)?.parse().with_context(|| format!("field `{key}`"))
}

pub fn vector(x: &SuppVec) -> Value {
    let coeffs: Map<String, Value> = x.iter().map(|(i, c)| (i.to_string(), q(c))).collect();
    json!({ "coeffs": coeffs })
}

pub fn read_vector(v: &Value) -> Result<SuppVec> {
    let coeffs = field(v, "coeffs")?.as_object().ok_or_else(|| anyhow!("`coeffs` must be an object"))?;
    let pairs = coeffs
        .iter()
        .map(|(i, c)| {
            let i: u32 = i.parse().with_context(|| format!("coefficient index `{i}`"))?;
            let c = c.as_str().ok_or_else(|| anyhow!("coefficient {i} must be a string"))?;
            Ok((i, parse_q(c)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SuppVec::from_pairs(pairs)?)
}

pub fn read_set(v: &Value, key: &str) -> Result<FinSet> {
    let elems = array_field(v, key)?
        .iter()
        .map(|x| {
            x.as_u64().and_then(|n| u32::try_from(n).ok()).ok_or_else(|| anyhow!("`{key}` must hold positive integers"))
        })
        .collect::<Result<Vec<u32>>>()?;
    Ok(FinSet::new(elems)?)
}

pub fn model(m: &SpaceModel) -> Value {
    match &m.kind {
        ModelKind::SchreierSpace { alpha } => {
            json!({"kind": "schreier", "alpha": text(alpha), "a1_constant": q(&m.a1_constant)})
        }
        ModelKind::Tsirelson { theta, alpha } => {
            json!({"kind": "tsirelson", "theta": q(theta), "alpha": text(alpha), "a1_constant": q(&m.a1_constant)})
        }
    }
}

pub fn read_model(v: &Value) -> Result<SpaceModel> {
    let alpha: Ordinal = parse_text(v, "alpha")?;
    let m = match str_field(v, "kind")? {
        "schreier" => SpaceModel::schreier(alpha),
        "tsirelson" => SpaceModel::tsirelson(read_q(v, "theta")?, alpha)?,
        other => bail!("unknown model kind `{other}`"),
    };
    if v.get("a1_constant").is_some() && read_q(v, "a1_constant")? != m.a1_constant {
        bail!("a1_constant does not match the model's declared constant {}", fmt_q(&m.a1_constant));
    }
    Ok(m)
}

pub fn cert(c: &AlphaEpsCert) -> Value {
    json!({
        "type": "alpha_eps",
        "model": model(&c.model),
        "u": vector(&c.u),
        "alpha": text(&c.alpha),
        "eps": text(&c.eps),
        "t0": text(&c.t0),
        "verifier_version": VERIFIER_VERSION,
    })
}

/// A certificate together with the verdict the exhaustive verifier gave it.
pub fn verified_cert(c: &AlphaEpsCert, verdict: &Verdict) -> Value {
    let mut v = cert(c);
    v["verified"] = json!(verdict.is_pass());
    v
}

/// Reads a certificate. A stored `verified` flag is ignored: certificates
/// are always re-verified.
pub fn read_cert(v: &Value) -> Result<AlphaEpsCert> {
    Ok(AlphaEpsCert {
        model: read_model(field(v, "model")?)?,
        u: read_vector(field(v, "u")?)?,
        alpha: parse_text(v, "alpha")?,
        eps: parse_text::<Eps>(v, "eps")?,
        t0: parse_text::<KPoint>(v, "t0")?,
    })
}

pub fn verdict(v: &Verdict) -> Value {
    match v {
        Verdict::Pass => json!({"pass": true}),
        Verdict::Fail { condition, witness, detail } => json!({
            "pass": false,
            "condition": condition.to_string(),
            "witness": witness.as_ref().map(set),
            "detail": detail,
        }),
    }
}

pub fn chain_cert(c: &ChainCert) -> Value {
    json!({
        "model": model(&c.model),
        "alpha": text(&c.alpha),
        "eps_seq": text(&c.eps_seq),
        "blocks": c.blocks.iter().map(vector).collect::<Vec<_>>(),
        "d": c.d(),
        "sub_certs": c.sub_certs.iter().map(cert).collect::<Vec<_>>(),
    })
}

pub fn read_chain_cert(v: &Value) -> Result<ChainCert> {
    let c = ChainCert {
        model: read_model(field(v, "model")?)?,
        alpha: parse_text(v, "alpha")?,
        eps_seq: parse_text::<EpsSeq>(v, "eps_seq")?,
        blocks: array_field(v, "blocks")?.iter().map(read_vector).collect::<Result<_>>()?,
        sub_certs: array_field(v, "sub_certs")?.iter().map(read_cert).collect::<Result<_>>()?,
    };
    Ok(c)
}

pub fn chain_search(c: &ChainSearch) -> Value {
    json!({
        "chain": chain_cert(&c.cert),
        "t0": text(&c.t0),
        "points": c.points.iter().map(text).collect::<Vec<_>>(),
        "tau": q(&c.tau),
        "delta": q(&c.delta),
    })
}

pub fn read_chain_search(v: &Value) -> Result<ChainSearch> {
    Ok(ChainSearch {
        cert: read_chain_cert(field(v, "chain")?)?,
        t0: parse_text(v, "t0")?,
        points: array_field(v, "points")?
            .iter()
            .map(|p| Ok(p.as_str().ok_or_else(|| anyhow!("points must be strings"))?.parse::<KPoint>()?))
            .collect::<Result<_>>()?,
        tau: read_q(v, "tau")?,
        delta: read_q(v, "delta")?,
    })
}

pub fn tau(t: &TauEstimate) -> Value {
    json!({
        "lower": q(&t.lower),
        "witness": t.witness.as_ref().map(set),
        "pool": set(&t.pool),
        "evaluated": t.evaluated,
        "partial": t.partial,
    })
}

pub fn measure(m: &Measure) -> Value {
    json!({"weights": m.weights().iter().map(|(t, w)| json!({"point": text(t), "mass": q(w)})).collect::<Vec<_>>()})
}

pub fn read_measure(v: &Value, model: &SpaceModel) -> Result<Measure> {
    let weights = array_field(v, "weights")?
        .iter()
        .map(|w| Ok((parse_text::<KPoint>(w, "point")?, read_q(w, "mass")?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Measure::new(model, weights)?)
}

pub fn family(f: &MeasureFamily) -> Value {
    json!({"model": model(f.model()), "members": f.members().iter().map(measure).collect::<Vec<_>>()})
}

pub fn read_family(v: &Value) -> Result<MeasureFamily> {
    let m = read_model(field(v, "model")?)?;
    let members = array_field(v, "members")?.iter().map(|x| read_measure(x, &m)).collect::<Result<Vec<_>>>()?;
    Ok(MeasureFamily::new(members)?)
}

pub fn rho_check(c: &RhoCheck) -> Value {
    json!({
        "pass": c.pass,
        "worst": q(&c.worst),
        "witness": c.witness.as_ref().map(vector),
        "checked": c.checked,
        "soundness": "grid only: vectors outside the coefficient grid are not covered",
    })
}

fn step(s: &Step) -> Value {
    json!({"name": s.name, "relation": s.relation.symbol(), "chain": qs(&s.chain), "holds": s.holds})
}

pub fn transcript(t: &MpTranscript) -> Value {
    let rows: Vec<Value> = t
        .rows
        .iter()
        .map(|r| {
            json!({
                "i": r.i,
                "n_odd": r.n_odd,
                "n_even": r.n_even,
                "coeff": q(&r.coeff),
                "delta": q(&r.delta),
                "phi_mass": r.phi_mass.as_ref().map(q),
                "level_mass": q(&r.level_mass),
            })
        })
        .collect();
    let mut m = Map::new();
    m.insert("alpha".into(), text(&t.alpha));
    m.insert("rho".into(), q(&t.rho));
    m.insert("eps".into(), q(&t.eps));
    m.insert("D".into(), q(&t.d));
    m.insert("eps_seq".into(), text(&t.eps_seq));
    m.insert("window".into(), set(&t.window));
    m.insert("block".into(), cert(&t.block));
    m.insert("mu_index".into(), json!(t.mu_index));
    m.insert("mu".into(), measure(&t.mu));
    m.insert("rows".into(), Value::Array(rows));
    m.insert("steps".into(), Value::Array(t.steps.iter().map(step).collect()));
    m.insert("I".into(), set(&t.i_set));
    m.insert("image".into(), set(&t.image));
    m.insert("image_in_family".into(), json!(t.image_in_family));
    m.insert("norming_grid".into(), json!(t.norming_grid));
    Value::Object(m)
}
