use clap::Args;
use permdiv::extremal::{frontier, MAX_SEARCH_N};
use serde_json::json;

use super::{opt, yes_no};
use crate::args::Budget;
use crate::fail::Failure;
use crate::report::{Provenance, Report, Section};
use crate::Run;

#[derive(Args)]
pub struct SearchArgs {
    /// Ground size, at most 5.
    #[arg(long)]
    pub n: usize,
    /// Search-node budget per threshold, e.g. 1e8.
    #[arg(long, default_value = "1e8")]
    pub budget: Budget,
}

pub fn run(args: &SearchArgs) -> Result<Run, Failure> {
    if !(1..=MAX_SEARCH_N).contains(&args.n) {
        return Err(Failure::Config(format!("search needs 1 <= n <= {MAX_SEARCH_N}, got {}", args.n)));
    }
    let rep = frontier(args.n, args.budget.0)?;
    let config = json!({ "n": args.n, "budget": args.budget.0 });
    let mut report = Report::new("search", config, None);

    let mut s = Section::new(
        "section=frontier",
        &[
            ("min_diversity", None),
            ("max_size", Some(Provenance::Enumeration)),
            ("witness_diversity", Some(Provenance::Enumeration)),
            ("isomorphic_to", None),
            ("exact", None),
            ("nodes", None),
            ("witness_ranks", None),
        ],
    );
    for e in &rep.frontier {
        let ranks = e.witness.as_ref().map(|w| w.ranks().map(|r| r.to_string()).collect::<Vec<_>>().join(","));
        s.push(vec![
            e.min_diversity.to_string(),
            opt(e.max_size),
            opt(e.witness_diversity),
            opt(e.isomorphic_to_e.map(|k| format!("E_{k}"))),
            yes_no(e.exact),
            e.nodes.to_string(),
            opt(ranks),
        ]);
    }
    report.section(s);

    let mut m = Section::new("section=reference", &[("quantity", None), ("value", Some(Provenance::Formula))]);
    m.push(vec!["ekr_max".into(), rep.ekr_max.to_string()]);
    m.push(vec!["diversity_ceiling".into(), rep.diversity_ceiling.to_string()]);
    report.section(m);
    let mut a = Section::new("section=observed", &[("quantity", None), ("value", Some(Provenance::Enumeration))]);
    a.push(vec!["max_achieved_diversity".into(), opt(rep.max_achieved_diversity)]);
    report.section(a);
    Ok(report.into())
}
