use clap::{Args, Subcommand, ValueEnum};
use permdiv::spread::{spread_approximate, spread_lemma_trial, Sampling, TrialConfig};
use permdiv::{AmbientSpace, PartialPermutation, SetFamily};
use serde::Serialize;
use serde_json::{json, Value};

use super::{opt, yes_no};
use crate::args::{FamilyLiteral, Rational};
use crate::fail::Failure;
use crate::report::{Provenance, Report, Section};
use crate::Run;

#[derive(Subcommand)]
pub enum SpreadCommand {
    /// Peel a family into homogeneous covers plus a residual.
    Decompose(DecomposeArgs),
    /// Monte-Carlo trials of the spread lemma.
    Mc(McArgs),
}

#[derive(Args)]
pub struct DecomposeArgs {
    /// Family literal: E:n:k, H:n:k, star:n:r:c or file:path.
    #[arg(long)]
    pub family: FamilyLiteral,
    /// Homogeneity parameter p/q, greater than 1.
    #[arg(long)]
    pub tau: Rational,
    /// Largest cover size.
    #[arg(long)]
    pub q: usize,
    /// Ambient base as `r->c,r->c`; empty means the whole symmetric group.
    #[arg(long, default_value = "")]
    pub base: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Singletons,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingArg {
    Independent,
    UnionOfRounds,
}

#[derive(Args)]
pub struct McArgs {
    /// Built-in family: the g singletons of a g-element ground set.
    #[arg(long, value_enum, conflicts_with = "family", required_unless_present = "family")]
    pub preset: Option<Preset>,
    /// Permutation family viewed as sets of cells of the n×n grid.
    #[arg(long)]
    pub family: Option<FamilyLiteral>,
    /// Ground size for the singletons preset.
    #[arg(long, default_value_t = 64)]
    pub g: usize,
    /// Spread constant p/q; defaults to g for the singletons preset.
    #[arg(long)]
    pub r: Option<Rational>,
    /// Number of rounds m (may be fractional).
    #[arg(long)]
    pub m: f64,
    /// Per-round inclusion probability.
    #[arg(long)]
    pub delta: f64,
    #[arg(long, default_value_t = 20_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = SamplingArg::Independent)]
    pub sampling: SamplingArg,
    /// Lower delta to 1/m when m·delta exceeds 1 instead of failing.
    #[arg(long)]
    pub clamp: bool,
}

pub fn run(cmd: &SpreadCommand) -> Result<Run, Failure> {
    match cmd {
        SpreadCommand::Decompose(a) => decompose(a),
        SpreadCommand::Mc(a) => monte_carlo(a),
    }
}

fn decompose(args: &DecomposeArgs) -> Result<Run, Failure> {
    let fam = args.family.build()?;
    let base = PartialPermutation::parse(fam.n(), &args.base)?;
    let ambient = if base.is_empty() { AmbientSpace::Sym { n: fam.n() } } else { AmbientSpace::Containing { base } };
    let dec = spread_approximate(&fam, &ambient, &args.tau.0, args.q)?;
    let post = dec.verify(&fam)?;
    let config = json!({ "family": args.family, "tau": args.tau, "q": args.q, "base": args.base });
    let mut report = Report::new("spread decompose", config, None);

    let mut c = Section::new(
        "section=covers",
        &[("index", None), ("S", None), ("|S|", None), ("size", Some(Provenance::Enumeration))],
    );
    for (i, cov) in dec.covers.iter().enumerate() {
        c.push(vec![
            i.to_string(),
            format!("{{{}}}", cov.set),
            cov.set.len().to_string(),
            cov.family.len().to_string(),
        ]);
    }
    report.section(c);

    let mut r = Section::new("section=residual", &[("quantity", None), ("value", None)]);
    r.push(vec!["residual_size".into(), dec.residual.len().to_string()]);
    r.push(vec!["residual_bound".into(), dec.residual_bound().to_string()]);
    r.push(vec!["stopped_on".into(), opt(dec.stopped_on.as_ref().map(|s| format!("{{{s}}}")))]);
    report.section(r);

    let mut p = Section::new("section=postconditions", &[("check", None), ("holds", None)]);
    for (name, ok) in [
        ("partition_exact", post.partition_exact),
        ("covers_contained", post.covers_contained),
        ("cover_sizes_within_q", post.cover_sizes_within_q),
        ("homogeneous", post.homogeneous),
        ("residual_within_bound", post.residual_within_bound),
    ] {
        p.push(vec![name.into(), yes_no(ok)]);
    }
    report.section(p);
    report.block("decomposition", dec.to_json(post.homogeneous));

    let verdict = if post.all() {
        Ok(())
    } else {
        Err(Failure::Invariant(format!("decomposition postconditions failed: {post:?}")))
    };
    Ok(Run { report, verdict })
}

fn monte_carlo(args: &McArgs) -> Result<Run, Failure> {
    if !(args.m > 0.0 && args.m.is_finite()) || !(args.delta > 0.0 && args.delta <= 1.0) {
        return Err(Failure::Config("need m > 0 and 0 < delta <= 1".into()));
    }
    let delta = if args.m * args.delta > 1.0 {
        if !args.clamp {
            return Err(Failure::Config(format!(
                "m·delta = {} exceeds 1; pass --clamp to lower delta to 1/m",
                args.m * args.delta
            )));
        }
        1.0 / args.m
    } else {
        args.delta
    };
    let (family, r) = match (&args.preset, &args.family) {
        (Some(Preset::Singletons), _) => {
            let r = args.r.clone().map_or_else(|| num_rational::BigRational::from_integer(args.g.into()), |r| r.0);
            (SetFamily::singletons(args.g)?, r)
        }
        (None, Some(lit)) => {
            let r = args.r.clone().ok_or_else(|| Failure::Config("--r is required with --family".into()))?;
            (SetFamily::from_perm_family(&lit.build()?)?, r.0)
        }
        (None, None) => return Err(Failure::Config("pass --preset or --family".into())),
    };
    let sampling = match args.sampling {
        SamplingArg::Independent => Sampling::Independent,
        SamplingArg::UnionOfRounds => Sampling::UnionOfRounds,
    };
    let cfg = TrialConfig { r: r.clone(), m: args.m, delta, trials: args.trials, seed: args.seed, sampling };
    let rep = spread_lemma_trial(&family, &cfg)?;

    let source: Value = match (&args.preset, &args.family) {
        (Some(p), _) => json!({ "preset": p, "g": args.g }),
        (None, f) => json!({ "family": f }),
    };
    let config = json!({
        "source": source,
        "r": r.to_string(),
        "m": args.m,
        "delta": delta,
        "delta_requested": args.delta,
        "trials": args.trials,
        "seed": args.seed,
        "sampling": args.sampling,
        "generator": rep.generator,
    });
    let mut report = Report::new("spread mc", config, Some(args.seed));
    let mut s = Section::new(
        "section=spread_lemma",
        &[
            ("trials", None),
            ("hits", Some(Provenance::MonteCarlo)),
            ("empirical", Some(Provenance::MonteCarlo)),
            ("standard_error", Some(Provenance::MonteCarlo)),
            ("closed_form", Some(Provenance::Formula)),
            ("bound", Some(Provenance::Formula)),
            ("bound_raw", Some(Provenance::Formula)),
        ],
    );
    s.push(vec![
        rep.trials.to_string(),
        rep.hits.to_string(),
        rep.empirical.to_string(),
        rep.standard_error.to_string(),
        opt(rep.exact),
        rep.bound.to_string(),
        opt(rep.bound_raw),
    ]);
    report.section(s);
    let mut v = Section::new("section=verdicts", &[("check", None), ("holds", None)]);
    v.push(vec!["above_bound_minus_3se".into(), yes_no(rep.above_bound)]);
    v.push(vec!["matches_closed_form_within_3se".into(), opt(rep.matches_exact.map(yes_no))]);
    report.section(v);

    let verdict = if !rep.above_bound {
        Err(Failure::Invariant(format!(
            "empirical {} below bound {} by more than 3 standard errors",
            rep.empirical, rep.bound
        )))
    } else if rep.matches_exact == Some(false) {
        Err(Failure::Invariant(format!(
            "empirical {} differs from closed form {} by more than 3 standard errors",
            rep.empirical,
            opt(rep.exact)
        )))
    } else {
        Ok(())
    };
    Ok(Run { report, verdict })
}
