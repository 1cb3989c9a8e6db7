use clap::Args;
use permdiv::counting::{
    asymptotic_estimate, derangement_inclusion_exclusion, derangement_number, factorial, menage_number, size_e,
    size_n_h, Estimate,
};
use permdiv::family::{build_e, build_h, neighborhood_n, MAX_FAMILY_N};
use permdiv::{ExactCount, PermFamily};
use serde_json::json;

use super::{opt, yes_no};
use crate::args::Span;
use crate::fail::Failure;
use crate::report::{Provenance, Report, Section};
use crate::Run;

const MAX_COUNT_N: usize = 500;

#[derive(Args)]
pub struct CountArgs {
    /// Values of n, as `a..b` (inclusive) or a single value.
    #[arg(long)]
    pub n: Span,
    /// Values of k; every k must lie in [2, n-2] for every n.
    #[arg(long, conflicts_with = "all_k")]
    pub k: Option<Span>,
    /// Use every k in [2, n-2] (the default when --k is absent).
    #[arg(long)]
    pub all_k: bool,
    /// Largest n for which families are enumerated.
    #[arg(long, default_value_t = 7)]
    pub enum_cap: usize,
}

fn comparison(title: &str) -> Section {
    Section::new(
        format!("quantity={title}"),
        &[
            ("n", None),
            ("k", None),
            ("formula_value", Some(Provenance::Formula)),
            ("enumeration_value", Some(Provenance::Enumeration)),
            ("match", None),
        ],
    )
}

/// Appends a comparison row and records any disagreement.
fn compare(
    s: &mut Section,
    n: usize,
    k: Option<usize>,
    formula: ExactCount,
    counted: Option<usize>,
    bad: &mut Vec<String>,
) {
    let agree = counted.map(|c| formula == ExactCount::from(c));
    if agree == Some(false) {
        bad.push(format!("{} n={n} k={}: formula {formula} vs enumeration {}", s.title, opt(k), opt(counted)));
    }
    s.push(vec![n.to_string(), opt(k), formula.to_string(), opt(counted), agree.map_or("-".into(), yes_no)]);
}

fn ks_for(args: &CountArgs, n: usize) -> Vec<usize> {
    match args.k {
        Some(k) => k.iter().collect(),
        None => (2..=n.saturating_sub(2)).collect(),
    }
}

fn count_where(n: usize, keep: impl Fn(&[u8]) -> bool + Sync) -> Result<usize, Failure> {
    Ok(PermFamily::from_predicate(n, keep)?.len())
}

pub fn run(args: &CountArgs) -> Result<Run, Failure> {
    if args.n.hi > MAX_COUNT_N {
        return Err(Failure::Config(format!("n = {} exceeds the cap of {MAX_COUNT_N}", args.n.hi)));
    }
    if args.enum_cap > MAX_FAMILY_N {
        return Err(Failure::Config(format!("--enum-cap {} exceeds {MAX_FAMILY_N}", args.enum_cap)));
    }
    if let Some(k) = args.k {
        for n in args.n.iter() {
            if k.lo < 2 || k.hi + 2 > n {
                return Err(Failure::Config(format!("k = {k} is not within [2, n-2] for n = {n}")));
            }
        }
    }
    let enumerate = |n: usize| (1..=args.enum_cap).contains(&n);
    let config = json!({
        "n": args.n,
        "k": args.k.map_or_else(|| "2..n-2".to_string(), |k| k.to_string()),
        "enum_cap": args.enum_cap,
    });
    let mut report = Report::new("count", config, None);
    let mut bad = Vec::new();

    let mut der = comparison("derangements");
    let mut men = comparison("menage");
    for n in args.n.iter() {
        let d = derangement_number(n);
        if d != derangement_inclusion_exclusion(n) {
            return Err(Failure::Mismatch(format!("derangement evaluators disagree at n={n}")));
        }
        let counted = if enumerate(n) {
            Some(count_where(n, |m| m.iter().enumerate().all(|(i, &v)| v as usize != i + 1))?)
        } else {
            None
        };
        compare(&mut der, n, None, d, counted, &mut bad);
        if n >= 3 {
            let counted = if enumerate(n) {
                Some(count_where(n, |m| {
                    m.iter().enumerate().all(|(i, &v)| v as usize != i + 1 && v as usize != (i + 1) % n + 1)
                })?)
            } else {
                None
            };
            compare(&mut men, n, None, menage_number(n)?, counted, &mut bad);
        }
    }
    report.section(der);
    report.section(men);

    let mut sh = comparison("size_H");
    let mut snh = comparison("size_N_H");
    let mut se = comparison("size_E");
    let mut asym = Section::new(
        "quantity=asymptotics",
        &[
            ("n", None),
            ("k", None),
            ("estimate", None),
            ("exact_normalized", Some(Provenance::Formula)),
            ("estimate_normalized", Some(Provenance::Formula)),
            ("relative_error", Some(Provenance::Formula)),
            ("claimed_error_order", None),
        ],
    );
    for n in args.n.iter() {
        for k in ks_for(args, n) {
            let h = factorial(k) - factorial(k - 1);
            let nh = size_n_h(n, k)?;
            let e = size_e(n, k)?;
            let (ch, cnh, ce) = if enumerate(n) {
                let hf = build_h(n, k)?;
                (Some(hf.len()), Some(neighborhood_n(n, &hf)?.len()), Some(build_e(n, k)?.len()))
            } else {
                (None, None, None)
            };
            compare(&mut sh, n, Some(k), h, ch, &mut bad);
            compare(&mut snh, n, Some(k), nh, cnh, &mut bad);
            compare(&mut se, n, Some(k), e, ce, &mut bad);
            for (name, which) in [("near_top", Estimate::NearTop), ("exponential", Estimate::Exponential)] {
                let r = asymptotic_estimate(n, k, which)?;
                asym.push(vec![
                    n.to_string(),
                    k.to_string(),
                    name.into(),
                    format!("{:.12e}", r.exact_normalized),
                    format!("{:.12e}", r.estimate_normalized),
                    format!("{:.6e}", r.relative_error),
                    r.claimed_error_order.into(),
                ]);
            }
        }
    }
    for s in [sh, snh, se, asym] {
        report.section(s);
    }
    let verdict = if bad.is_empty() { Ok(()) } else { Err(Failure::Mismatch(bad.join("; "))) };
    Ok(Run { report, verdict })
}
