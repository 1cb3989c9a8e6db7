use clap::Args;
use permdiv::hitting::{fragments, hitting_bound_check};
use serde_json::json;

use super::yes_no;
use crate::args::FamilyLiteral;
use crate::fail::Failure;
use crate::report::{Provenance, Report, Section};
use crate::Run;

#[derive(Args)]
pub struct HittingArgs {
    /// Family whose traces on [2,t]^2 are hit.
    #[arg(long)]
    pub family: FamilyLiteral,
    /// Window size t (at least 3).
    #[arg(long)]
    pub t: usize,
    /// List every minimal hitting set.
    #[arg(long)]
    pub sets: bool,
}

pub fn run(args: &HittingArgs) -> Result<Run, Failure> {
    let fam = args.family.build()?;
    if args.t > fam.n() {
        return Err(Failure::Config(format!("t = {} exceeds n = {}", args.t, fam.n())));
    }
    let frags = fragments(&fam, args.t)?;
    let check = hitting_bound_check(&frags, args.t)?;
    let t = args.t;
    let config = json!({ "family": args.family, "t": t, "sets": args.sets });
    let mut report = Report::new("hitting", config, None);

    let mut f = Section::new("section=fragments", &[("index", None), ("fragment", None)]);
    for (i, x) in frags.iter().enumerate() {
        f.push(vec![i.to_string(), format!("{{{x}}}")]);
    }
    report.section(f);

    let mut c = Section::new(
        "section=counts",
        &[
            ("i", None),
            ("count", Some(Provenance::Enumeration)),
            ("bound", Some(Provenance::Formula)),
            ("within_bound", None),
        ],
    );
    for i in 1..t {
        let count = check.report.count(i);
        let bound = (t as u128 - 2).saturating_pow(i as u32);
        c.push(vec![i.to_string(), count.to_string(), bound.to_string(), yes_no(count as u128 <= bound)]);
    }
    report.section(c);

    let mut d = Section::new(
        "section=search_nodes",
        &[("depth", None), ("nodes", Some(Provenance::Enumeration)), ("bound", Some(Provenance::Formula))],
    );
    for (depth, &nodes) in check.report.nodes_by_depth.iter().enumerate() {
        let bound = (t as u128 - 2).saturating_pow(depth as u32);
        d.push(vec![depth.to_string(), nodes.to_string(), bound.to_string()]);
    }
    report.section(d);

    let mut v = Section::new("section=verdicts", &[("check", None), ("holds", None)]);
    v.push(vec!["count_within_bound".into(), yes_no(check.holds)]);
    v.push(vec!["no_single_point_hits".into(), yes_no(check.no_one_hitting_sets)]);
    v.push(vec!["nodes_within_bound".into(), yes_no(check.nodes_within_bound)]);
    report.section(v);

    if args.sets {
        let mut s = Section::new("section=minimal_hitting_sets", &[("size", None), ("set", None)]);
        for set in check.report.sets() {
            let pts: Vec<String> = set.iter().map(ToString::to_string).collect();
            s.push(vec![set.len().to_string(), format!("{{{}}}", pts.join(","))]);
        }
        report.section(s);
    }
    report.block("hitting", check.report.to_json(t));

    let verdict = if check.holds {
        Ok(())
    } else {
        let over: Vec<String> = (2..t)
            .filter(|&i| check.report.count(i) as u128 > (t as u128 - 2).pow(i as u32))
            .map(|i| format!("count({i}) = {}", check.report.count(i)))
            .collect();
        Err(Failure::Invariant(format!("hitting-set bound exceeded: {}", over.join(", "))))
    };
    Ok(Run { report, verdict })
}
