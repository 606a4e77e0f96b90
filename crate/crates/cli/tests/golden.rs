//! Golden reports for every [checks] entry of the built-in corpus.
//! Set `BVCOV_BLESS=1` to rewrite the expected files.

use std::path::PathBuf;

use bvcov::syntax::parse;
use bvcov_cli::{run, CORPUS};

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn render(corpus: &str, check: &str, sub: &str) -> String {
    let out = run(["bvcov", sub, corpus, "--check", check]);
    format!("{}exit: {}\n", out.output, out.code)
}

#[test]
fn golden_reports() {
    let bless = std::env::var_os("BVCOV_BLESS").is_some();
    let mut mismatches = Vec::new();
    for (name, src) in CORPUS {
        let file = parse(src).unwrap();
        for (check, args) in &file.checks {
            let got = render(name, check, &args[0]);
            let path = golden_dir().join(format!("{name}__{check}.out"));
            if bless {
                std::fs::write(&path, &got).unwrap();
                continue;
            }
            let want = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing {}", path.display()));
            if got != want {
                mismatches.push(format!("{}:\n--- want\n{want}--- got\n{got}", path.display()));
            }
        }
    }
    assert!(mismatches.is_empty(), "{}", mismatches.join("\n"));
}

#[test]
fn reports_are_deterministic() {
    for (name, src) in CORPUS {
        let file = parse(src).unwrap();
        for (check, args) in &file.checks {
            assert_eq!(render(name, check, &args[0]), render(name, check, &args[0]), "{name} {check}");
        }
    }
}

#[test]
fn corpus_round_trips() {
    for (name, src) in CORPUS {
        let once = parse(src).unwrap().to_string();
        let twice = parse(&once).unwrap().to_string();
        assert_eq!(once, twice, "{name}");
        for (e, v) in &parse(src).unwrap().expressions {
            let back = bvcov::syntax::parse_expr(&v.to_string(), &parse(src).unwrap().theory).unwrap();
            assert_eq!(&back, v, "{name}: {e}");
        }
    }
}

#[test]
fn exit_codes() {
    assert_eq!(run(["bvcov", "check-mc", "particle_flat"]).code, 0);
    assert_eq!(run(["bvcov", "tw-check", "cylinder_flux"]).code, 0);
    assert_eq!(run(["bvcov", "tw-check", "cylinder_broken"]).code, 1);
    assert_eq!(run(["bvcov", "check-mc", "particle_flat", "--check", "nope"]).code, 2);
    assert_eq!(run(["bvcov", "frobnicate"]).code, 2);
    assert_eq!(run(["bvcov", "check-mc", "no_such_file"]).code, 2);
    // psi generates e^{-τ}-type flows: the bare series is cut off.
    let t = run(["bvcov", "flow", "particle_flat", "psi", "--gauge", "S", "--max-order", "3"]);
    assert_eq!(t.code, 3, "{}", t.output);
    assert!(t.output.contains("TRUNCATED"));
}

#[test]
fn models_by_name() {
    for m in bvcov::models::MODEL_NAMES {
        let out = run(["bvcov", "build-aksz", m, "--metric", "-1,1"]);
        assert_eq!(out.code, 0, "{m}: {}", out.output);
    }
    let out = run(["bvcov", "couple-gravity", "flat-particle", "--metric", "-1"]);
    assert_eq!(out.code, 0, "{}", out.output);
}

#[test]
fn syntax_error_has_position() {
    let dir = std::env::temp_dir().join("bvcov-syntax-test.bv");
    std::fs::write(&dir, "[fields]\nx 0 even\n[expressions]\nS = x*d(\n").unwrap();
    let out = run(["bvcov", "normalize", dir.to_str().unwrap(), "S"]);
    assert_eq!(out.code, 2);
    assert!(out.output.contains("4:9"), "{}", out.output);
}
