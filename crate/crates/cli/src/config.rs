use std::path::PathBuf;

use anyhow::{anyhow, bail, Result};
use asyml1_core::budget::Budget;
use serde_json::{json, Value};

/// Parses `default` or a comma list of `window=`, `support=`, `evals=` and
/// `sets=` overrides on top of the defaults.
pub fn parse_budget(s: &str) -> Result<Budget> {
    let mut b = Budget::default();
    if s.trim() == "default" {
        return Ok(b);
    }
    for part in s.split(',') {
        let (k, v) = part.split_once('=').ok_or_else(|| anyhow!("budget entry `{part}` is not key=value"))?;
        let v: u64 = v.trim().parse().map_err(|_| anyhow!("budget value `{v}` is not an integer"))?;
        let small = || u32::try_from(v).map_err(|_| anyhow!("budget value {v} is too large for `{k}`"));
        match k.trim() {
            "window" => b.max_window = small()?,
            "support" => b.max_support = small()?,
            "evals" => b.max_evals = v,
            "sets" => b.max_sets = usize::try_from(v)?,
            other => bail!("unknown budget key `{other}` (expected window, support, evals or sets)"),
        }
    }
    Ok(b)
}

pub fn budget_json(b: &Budget) -> Value {
    json!({
        "window": b.max_window,
        "support": b.max_support,
        "evals": b.max_evals,
        "sets": b.max_sets,
    })
}

/// Everything that determines an artifact. Two runs with equal configs
/// write identical bytes.
#[derive(Clone, Debug)]
pub struct RunConfig {
    /// Arguments after the program name, verbatim.
    pub argv: Vec<String>,
    pub command: String,
    pub budget: Budget,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn to_json(&self) -> Value {
        json!({
            "argv": self.argv,
            "command": self.command,
            "budget": budget_json(&self.budget),
            "seed": self.seed,
            "out": self.out.as_ref().map(|p| p.display().to_string()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_overrides() {
        assert_eq!(parse_budget("default").unwrap(), Budget::default());
        let b = parse_budget("support=12, evals=5000").unwrap();
        assert_eq!((b.max_support, b.max_evals, b.max_window), (12, 5000, 64));
        assert!(parse_budget("speed=3").is_err());
        assert!(parse_budget("window").is_err());
        assert!(parse_budget("window=99999999999").is_err());
    }
}
