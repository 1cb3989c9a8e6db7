use std::path::PathBuf;

use clap::{Args, ValueEnum};
use permdiv::family::{first_disjoint_pair, is_intersecting, stats};
use serde::Serialize;
use serde_json::json;

use super::{opt, yes_no};
use crate::args::FamilyLiteral;
use crate::fail::Failure;
use crate::report::{Provenance, Report, Section};
use crate::Run;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FileFormat {
    Text,
    Binary,
}

#[derive(Args)]
pub struct ConstructArgs {
    /// Family literal: E:n:k, H:n:k, star:n:r:c or file:path.
    #[arg(long)]
    pub family: FamilyLiteral,
    /// List every member with its rank.
    #[arg(long)]
    pub members: bool,
    /// Also write the family to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Format used for --out.
    #[arg(long, value_enum, default_value_t = FileFormat::Text)]
    pub format: FileFormat,
}

pub fn run(args: &ConstructArgs) -> Result<Run, Failure> {
    let fam = args.family.build()?;
    let config = json!({
        "family": args.family,
        "members": args.members,
        "out": args.out.as_ref().map(|p| p.display().to_string()),
        "format": args.format,
    });
    let mut report = Report::new("construct", config, None);
    let st = stats(&fam);
    let mut s = Section::new("section=stats", &[("statistic", None), ("value", Some(Provenance::Enumeration))]);
    let disjoint = first_disjoint_pair(&fam);
    for (k, v) in [
        ("n", fam.n().to_string()),
        ("size", st.size.to_string()),
        ("max_degree", st.max_degree.to_string()),
        ("max_degree_point", opt(st.max_degree_point)),
        ("diversity", st.diversity.to_string()),
        ("common_intersection", opt(st.common_intersection.map(|c| format!("{{{c}}}")))),
        ("intersecting", yes_no(is_intersecting(&fam))),
        ("disjoint_pair", opt(disjoint.map(|(a, b)| format!("[{a}] [{b}]")))),
    ] {
        s.push(vec![k.into(), v]);
    }
    report.section(s);
    if args.members {
        let mut m = Section::new("section=members", &[("rank", None), ("permutation", None)]);
        for p in fam.iter() {
            m.push(vec![p.rank().to_string(), p.to_string()]);
        }
        report.section(m);
    }
    if let Some(path) = &args.out {
        let bytes = match args.format {
            FileFormat::Text => fam.to_text().into_bytes(),
            FileFormat::Binary => fam.to_bytes(),
        };
        std::fs::write(path, bytes).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    }
    Ok(report.into())
}
