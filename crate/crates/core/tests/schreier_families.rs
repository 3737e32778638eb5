mod common;

use asyml1_core::budget::Budget;
use asyml1_core::finset::Window;
use asyml1_core::schreier::{self, EnumMode};
use asyml1_core::{FinSet, Ordinal};
use common::{alpha_set, power_set, SplitOracle};

fn set(v: &[u32]) -> FinSet {
    FinSet::new(v.to_vec()).unwrap()
}

#[test]
fn member_matches_split_oracle_up_to_12() {
    let mut oracle = SplitOracle::default();
    for alpha in alpha_set() {
        for f in power_set(12) {
            assert_eq!(schreier::member(&set(&f), &alpha), oracle.member(&f, &alpha), "alpha={alpha} F={f:?}");
        }
    }
}

#[test]
fn hereditary_and_spreading() {
    for alpha in alpha_set() {
        let members: Vec<Vec<u32>> = power_set(10).into_iter().filter(|f| schreier::member(&set(f), &alpha)).collect();
        for f in &members {
            let fs = set(f);
            fs.for_each_subset_lex(|g| {
                assert!(schreier::member(g, &alpha), "{alpha}: {g} subset of {fs}");
                true
            });
            // shift every element from position i on by one: a spread
            for i in 0..f.len() {
                let mut g = f.clone();
                for x in &mut g[i..] {
                    *x += 1;
                }
                assert!(schreier::member(&set(&g), &alpha), "{alpha}: spread {g:?} of {f:?}");
            }
        }
    }
}

#[test]
fn successor_contains_level() {
    for alpha in alpha_set() {
        let next = alpha.succ();
        for f in power_set(11) {
            let f = set(&f);
            if schreier::member(&f, &alpha) {
                assert!(schreier::member(&f, &next));
            }
        }
    }
}

#[test]
fn enumerate_equals_filtered_power_set() {
    let b = Budget::default();
    for alpha in alpha_set() {
        let w = Window::new(3, 12).unwrap();
        let mut got = schreier::enumerate(&alpha, w, EnumMode::All, &b).unwrap();
        got.sort();
        let mut want: Vec<FinSet> =
            (0u64..1 << 10).map(|m| w.to_set().select(m)).filter(|f| schreier::member(f, &alpha)).collect();
        want.sort();
        assert_eq!(got, want, "{alpha}");
    }
}

#[test]
fn threshold_is_sound_inside_window() {
    let b = Budget::default();
    let xi: Ordinal = "2".parse().unwrap();
    let eta: Ordinal = "w".parse().unwrap();
    let t = schreier::threshold(&xi, &eta, 10, &b).unwrap();
    let w = Window::new(t.n, t.verified_up_to).unwrap();
    for f in schreier::enumerate(&xi, w, EnumMode::All, &b).unwrap() {
        assert!(schreier::member(&f, &eta));
    }
}
