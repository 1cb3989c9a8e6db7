use std::process::{Command, Output};

use permdiv::counting::size_e;

fn permdiv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_permdiv")).args(args).env_remove("PERMDIV_THREADS").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8 output")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

/// Data rows of the TSV section whose title line is `# <title>`.
fn section(text: &str, title: &str) -> Vec<Vec<String>> {
    let mut lines = text.lines().skip_while(|l| *l != format!("# {title}")).skip(1);
    let mut rows = Vec::new();
    let mut header_seen = false;
    for l in lines.by_ref() {
        if l.is_empty() {
            break;
        }
        if l.starts_with('#') {
            continue;
        }
        if !header_seen {
            header_seen = true;
            continue;
        }
        rows.push(l.split('\t').map(String::from).collect());
    }
    rows
}

#[test]
fn count_formula_matches_enumeration() {
    let o = permdiv(&["count", "--n", "4..7", "--all-k"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    for q in ["derangements", "menage", "size_H", "size_N_H", "size_E"] {
        let rows = section(&text, &format!("quantity={q}"));
        assert!(!rows.is_empty(), "{q}");
        assert!(rows.iter().all(|r| r[4] == "yes"), "{q}: {rows:?}");
    }
    assert_eq!(section(&text, "quantity=size_E").len(), 1 + 2 + 3 + 4);
}

#[test]
fn count_large_n_skips_enumeration() {
    let o = permdiv(&["count", "--n", "30", "--k", "15"]);
    assert_eq!(code(&o), 0);
    let rows = section(&stdout(&o), "quantity=size_E");
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][2], size_e(30, 15).unwrap().to_string());
    assert_eq!(rows[0][3], "-");
}

#[test]
fn count_rejects_k_out_of_range() {
    assert_eq!(code(&permdiv(&["count", "--n", "5", "--k", "9"])), 2);
    assert_eq!(code(&permdiv(&["count", "--n", "4..x"])), 2);
}

#[test]
fn verify_default_suite_passes() {
    let o = permdiv(&["verify"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = section(&stdout(&o), "section=checks");
    assert!(rows.len() > 20);
    assert!(rows.iter().all(|r| r[3] == "pass"));
}

#[test]
fn verify_fault_injection_fails_with_counterexample() {
    let o = permdiv(&["verify", "--module", "family", "--n-max", "4", "--inject-fault"]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("flipped") && err.contains("disjoint pair"), "{err}");
    let rows = section(&stdout(&o), "section=checks");
    assert_eq!(rows.iter().filter(|r| r[3] == "FAIL").count(), 1);
}

#[test]
fn verify_module_filter() {
    let o = permdiv(&["verify", "--module", "hitting", "--t", "5"]);
    assert_eq!(code(&o), 0);
    let rows = section(&stdout(&o), "section=checks");
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r[0] == "hitting"));
    assert!(rows.iter().any(|r| r[2] == "t=5"));
}

#[test]
fn spread_decompose_postconditions_hold() {
    let o = permdiv(&["spread", "decompose", "--family", "E:5:2", "--tau", "3/2", "--q", "3"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let rows = section(&text, "section=postconditions");
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r[1] == "yes"));
    assert!(text.contains("# decomposition={"));
}

#[test]
fn spread_decompose_rejects_small_tau() {
    assert_eq!(code(&permdiv(&["spread", "decompose", "--family", "E:5:2", "--tau", "1", "--q", "3"])), 2);
    assert_eq!(code(&permdiv(&["spread", "decompose", "--family", "E:5:2", "--tau", "1/0", "--q", "3"])), 2);
}

#[test]
fn spread_mc_is_deterministic_across_thread_counts() {
    let args = [
        "spread",
        "mc",
        "--preset",
        "singletons",
        "--g",
        "64",
        "--m",
        "7",
        "--delta",
        "0.0714",
        "--trials",
        "20000",
        "--seed",
        "42",
    ];
    let a = permdiv(&args);
    let b = permdiv(&args);
    let c = Command::new(env!("CARGO_BIN_EXE_permdiv")).args(args).env("PERMDIV_THREADS", "1").output().unwrap();
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    let text = stdout(&a);
    assert!(text.contains("# seed=42"));
    assert!(text.contains("closed_form:formula"));
    assert!(text.contains("empirical:monte-carlo"));
}

#[test]
fn spread_mc_agrees_with_closed_form_on_a_sensitive_preset() {
    let o = permdiv(&[
        "spread",
        "mc",
        "--preset",
        "singletons",
        "--g",
        "8",
        "--m",
        "2",
        "--delta",
        "0.05",
        "--trials",
        "20000",
        "--seed",
        "7",
    ]);
    assert_eq!(code(&o), 0);
    let rows = section(&stdout(&o), "section=spread_lemma");
    let empirical: f64 = rows[0][2].parse().unwrap();
    let closed: f64 = rows[0][4].parse().unwrap();
    let se: f64 = rows[0][3].parse().unwrap();
    assert!((empirical - closed).abs() <= 3.0 * se, "{empirical} vs {closed}");
}

#[test]
fn spread_mc_rejects_oversized_m_delta_without_clamp() {
    let base = ["spread", "mc", "--preset", "singletons", "--m", "7", "--delta", "0.2"];
    assert_eq!(code(&permdiv(&base)), 2);
    let mut clamped = base.to_vec();
    clamped.push("--clamp");
    let o = permdiv(&clamped);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("\"delta_requested\":0.2"));
}

#[test]
fn search_n4_frontier() {
    let o = permdiv(&["search", "--n", "4"]);
    assert_eq!(code(&o), 0);
    let rows = section(&stdout(&o), "section=frontier");
    assert_eq!(rows[0][0..2], ["0", "6"]);
    assert_eq!(rows[1][0..4], ["1", "4", "1", "E_2"]);
    assert!(rows.iter().all(|r| r[4] == "yes"));
}

#[test]
fn search_budget_flags_inexact_rows() {
    let o = permdiv(&["search", "--n", "5", "--budget", "1e3"]);
    assert_eq!(code(&o), 0);
    let rows = section(&stdout(&o), "section=frontier");
    assert!(rows.iter().any(|r| r[4] == "no"));
}

#[test]
fn search_rejects_large_n_and_bad_budget() {
    assert_eq!(code(&permdiv(&["search", "--n", "6"])), 2);
    assert_eq!(code(&permdiv(&["search", "--n", "4", "--budget", "1.5e2"])), 2);
}

#[test]
fn construct_file_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    for (format, name) in [("text", "e.txt"), ("binary", "e.bin")] {
        let path = dir.path().join(name);
        let p = path.to_str().unwrap();
        let a = permdiv(&["construct", "--family", "E:6:3", "--out", p, "--format", format]);
        assert_eq!(code(&a), 0);
        let lit = format!("file:{p}");
        let b = permdiv(&["construct", "--family", &lit]);
        assert_eq!(code(&b), 0);
        assert_eq!(section(&stdout(&a), "section=stats"), section(&stdout(&b), "section=stats"));
    }
    assert_eq!(code(&permdiv(&["construct", "--family", "file:/nonexistent/f"])), 2);
}

#[test]
fn hitting_bound_and_precondition() {
    let o = permdiv(&["hitting", "--family", "H:7:5", "--t", "5"]);
    assert_eq!(code(&o), 0);
    let rows = section(&stdout(&o), "section=verdicts");
    assert!(rows.iter().all(|r| r[1] == "yes"));
    assert_eq!(code(&permdiv(&["hitting", "--family", "E:5:2", "--t", "4"])), 2);
}

#[test]
fn json_output_embeds_config_and_version() {
    let o = permdiv(&["--json", "count", "--n", "5", "--k", "2"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["tool"], "permdiv");
    assert_eq!(v["config"]["n"], "5");
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    let e = v["sections"].as_array().unwrap().iter().find(|s| s["title"] == "quantity=size_E").unwrap();
    assert_eq!(e["rows"][0]["formula_value"], "14");
    assert_eq!(e["provenance"]["enumeration_value"], "enumeration");
}
