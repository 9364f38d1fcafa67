//! Baseline constitutions against their verbatim published listings, and the
//! shipped constitution files against the built-in baselines.

use std::path::PathBuf;

use society_core::constitution::{baseline, parse, serialize, BASELINE_NAMES};

fn dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(name)
}

/// (name, priority, guidance) triples from a `Rule N: "Name" (Priority N)` listing.
fn parse_listing(text: &str) -> Vec<(String, u32, String)> {
    let mut out = Vec::new();
    for block in text.split("\n\n").map(str::trim).filter(|b| !b.is_empty()) {
        let mut lines = block.lines();
        let head = lines.next().unwrap();
        let name = head.split('"').nth(1).unwrap().to_string();
        let priority = head.rsplit("(Priority ").next().unwrap().trim_end_matches(')').parse().unwrap();
        let body = lines.map(str::trim).collect::<Vec<_>>().join(" ");
        out.push((name, priority, body.trim_matches('"').to_string()));
    }
    out
}

#[test]
fn baselines_match_published_listings() {
    for name in BASELINE_NAMES {
        let text = std::fs::read_to_string(dir("tests/golden").join(format!("{name}.txt"))).unwrap();
        let expected = parse_listing(&text);
        let c = baseline(name);
        let actual: Vec<(String, u32, String)> =
            c.rules.iter().map(|r| (r.name.clone(), r.priority, r.guidance.clone())).collect();
        assert_eq!(actual, expected, "{name}");
    }
}

#[test]
fn listing_rule_counts() {
    let counts: Vec<usize> = BASELINE_NAMES.iter().map(|&n| baseline(n).rules.len()).collect();
    assert_eq!(counts, [3, 3, 5, 7]);
}

/// Set `BLESS=1` to regenerate the shipped files.
#[test]
fn shipped_constitution_files_match_baselines() {
    for name in BASELINE_NAMES {
        let path = dir("constitutions").join(format!("{name}.toml"));
        let c = baseline(name);
        if std::env::var_os("BLESS").is_some() {
            std::fs::create_dir_all(path.parent().unwrap()).unwrap();
            std::fs::write(&path, serialize(&c)).unwrap();
        }
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(parse(&text).unwrap(), c, "{name}");
    }
}
