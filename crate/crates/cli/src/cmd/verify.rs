use clap::{Args, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use permdiv::counting::{
    derangement_inclusion_exclusion, derangement_number, endpoint_size, factorial, is_nearest_to_factorial_over_e,
    menage_lower_envelope_holds, menage_number, permanent01, size_e, size_n_h,
};
use permdiv::extremal::{max_intersecting, IntersectionGraph};
use permdiv::family::{
    build_e, build_h, first_disjoint_pair, is_intersecting, neighborhood_n, neighborhood_of_h_by_fixed_points, star,
    stats,
};
use permdiv::hitting::{fragments, hitting_bound_check};
use permdiv::perm::factorial_u64;
use permdiv::spread::{is_rq_spread, spread_approximate};
use permdiv::{AmbientSpace, BinaryMatrix, ExactCount, PartialPermutation, Permutation, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::fail::Failure;
use crate::report::{Report, Section};
use crate::Run;

const MAX_VERIFY_N: usize = 7;
const MAX_VERIFY_T: usize = 8;
const LATTICE_T: usize = 5;
const RANDOM_HITTING_INSTANCES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Module {
    All,
    Perm,
    Family,
    Counting,
    Hitting,
    Spread,
    Extremal,
}

#[derive(Args)]
pub struct VerifyArgs {
    /// Restrict the suite to one module.
    #[arg(long, value_enum, default_value_t = Module::All)]
    pub module: Module,
    /// Largest n for enumerative checks (at most 7).
    #[arg(long, default_value_t = 6)]
    pub n_max: usize,
    /// Largest window for hitting-set checks (3 to 8).
    #[arg(long, default_value_t = 5)]
    pub t: usize,
    /// Seed for randomly generated instances.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Flip one bit of the first constructed E_k before checking it.
    #[arg(long)]
    pub inject_fault: bool,
}

type Check = Result<String, String>;

struct Suite {
    rows: Section,
    failures: Vec<String>,
}

impl Suite {
    fn record(&mut self, module: &str, check: &str, scope: String, outcome: Check) {
        let (status, detail) = match outcome {
            Ok(d) => ("pass", d),
            Err(d) => {
                self.failures.push(format!("{module}/{check} [{scope}]: {d}"));
                ("FAIL", d)
            }
        };
        self.rows.push(vec![module.into(), check.into(), scope, status.into(), detail]);
    }
}

fn core<T>(r: permdiv::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn rat(p: usize, q: usize) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

pub fn run(args: &VerifyArgs) -> Result<Run, Failure> {
    if !(4..=MAX_VERIFY_N).contains(&args.n_max) {
        return Err(Failure::Config(format!("--n-max must lie in [4, {MAX_VERIFY_N}]")));
    }
    if !(3..=MAX_VERIFY_T).contains(&args.t) {
        return Err(Failure::Config(format!("--t must lie in [3, {MAX_VERIFY_T}]")));
    }
    let config = json!({
        "module": args.module,
        "n_max": args.n_max,
        "t": args.t,
        "seed": args.seed,
        "inject_fault": args.inject_fault,
    });
    let mut suite = Suite {
        rows: Section::new(
            "section=checks",
            &[("module", None), ("check", None), ("scope", None), ("status", None), ("detail", None)],
        ),
        failures: Vec::new(),
    };
    let on = |m: Module| args.module == Module::All || args.module == m;
    if on(Module::Perm) {
        perm_suite(&mut suite, args.n_max);
    }
    if on(Module::Family) {
        family_suite(&mut suite, args.n_max, args.inject_fault);
    }
    if on(Module::Counting) {
        counting_suite(&mut suite);
    }
    if on(Module::Hitting) {
        hitting_suite(&mut suite, args.t, args.seed);
    }
    if on(Module::Spread) {
        spread_suite(&mut suite, args.n_max.min(6));
    }
    if on(Module::Extremal) {
        extremal_suite(&mut suite);
    }
    let mut report = Report::new("verify", config, Some(args.seed));
    let failures = suite.failures;
    report.section(suite.rows);
    let verdict = if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Invariant(format!("{} check(s) failed: {}", failures.len(), failures.join("; "))))
    };
    Ok(Run { report, verdict })
}

fn perm_suite(s: &mut Suite, n_max: usize) {
    for n in 1..=n_max {
        let outcome = (|| {
            for (expected, p) in Permutation::all(n).enumerate() {
                let r = p.rank();
                if r != expected as u64 || core(Permutation::unrank(n, r))? != p {
                    return Err(format!("rank mismatch at [{p}]: rank {r}, position {expected}"));
                }
                let id = Permutation::identity(n);
                if core(p.compose(&p.inverse()))? != id || core(p.inverse().compose(&p))? != id {
                    return Err(format!("[{p}] composed with its inverse is not the identity"));
                }
            }
            Ok(format!("{} permutations", factorial_u64(n)))
        })();
        s.record("perm", "rank_unrank_inverse", format!("n={n}"), outcome);
    }
}

fn family_suite(s: &mut Suite, n_max: usize, inject_fault: bool) {
    let mut fault_pending = inject_fault;
    for n in 4..=n_max {
        for k in 2..=n - 2 {
            let scope = format!("n={n} k={k}");
            let h_size = factorial(k) - factorial(k - 1);
            s.record(
                "family",
                "size_H",
                scope.clone(),
                (|| {
                    let h = core(build_h(n, k))?;
                    if ExactCount::from(h.len()) != h_size {
                        return Err(format!("|H| = {}, expected {h_size}", h.len()));
                    }
                    Ok(format!("|H| = {}", h.len()))
                })(),
            );
            s.record(
                "family",
                "neighborhood_characterization",
                scope.clone(),
                (|| {
                    let by_filter = core(neighborhood_n(n, &core(build_h(n, k))?))?;
                    let by_points = core(neighborhood_of_h_by_fixed_points(n, k))?;
                    if by_filter != by_points {
                        let diff = core(by_filter.union(&by_points))?;
                        let odd = diff.iter().find(|p| by_filter.contains(p) != by_points.contains(p));
                        return Err(format!(
                            "descriptions differ at [{}]",
                            odd.map(|p| p.to_string()).unwrap_or_default()
                        ));
                    }
                    Ok(format!("|N(H)| = {}", by_filter.len()))
                })(),
            );
            let flip = std::mem::take(&mut fault_pending);
            s.record(
                "family",
                "E_intersecting_and_sized",
                scope,
                (|| {
                    let mut e = core(build_e(n, k))?;
                    let mut note = String::new();
                    if flip {
                        let rank = factorial_u64(n) - 1;
                        e = core(e.toggled(rank))?;
                        note = format!(" (bit {rank} flipped)");
                    }
                    let expected = core(size_e(n, k))?;
                    if ExactCount::from(e.len()) != expected {
                        let pair = first_disjoint_pair(&e).map(|(a, b)| format!("; disjoint pair [{a}] [{b}]"));
                        return Err(format!(
                            "|E| = {}, expected {expected}{note}{}",
                            e.len(),
                            pair.unwrap_or_default()
                        ));
                    }
                    if let Some((a, b)) = first_disjoint_pair(&e) {
                        return Err(format!("disjoint pair [{a}] [{b}]{note}"));
                    }
                    let st = stats(&e);
                    if ExactCount::from(st.diversity) != h_size {
                        return Err(format!("diversity {} differs from |H| = {h_size}{note}", st.diversity));
                    }
                    Ok(format!("|E| = {}, diversity {}", e.len(), st.diversity))
                })(),
            );
        }
        s.record(
            "family",
            "star",
            format!("n={n}"),
            (|| {
                let f = core(star(n, Point::new(1, 1)))?;
                let st = stats(&f);
                if f.len() as u64 != factorial_u64(n - 1) || st.diversity != 0 || !is_intersecting(&f) {
                    return Err(format!("star has size {} and diversity {}", f.len(), st.diversity));
                }
                Ok(format!("size {}", f.len()))
            })(),
        );
    }
}

fn counting_suite(s: &mut Suite) {
    s.record(
        "counting",
        "derangements",
        "n=0..30".into(),
        (|| {
            for n in 0..=30 {
                let d = derangement_number(n);
                if d != derangement_inclusion_exclusion(n) {
                    return Err(format!("n={n}: recurrence and inclusion-exclusion differ"));
                }
                if n >= 1 && !is_nearest_to_factorial_over_e(n, &d) {
                    return Err(format!("n={n}: d_n = {d} is not the integer nearest n!/e"));
                }
            }
            Ok("recurrence, inclusion-exclusion and n!/e agree".into())
        })(),
    );
    s.record(
        "counting",
        "size_N_H_evaluators",
        "n=4..30".into(),
        (|| {
            let mut pairs = 0;
            for n in 4..=30 {
                for k in 2..=n - 2 {
                    core(size_n_h(n, k))?;
                    pairs += 1;
                }
            }
            Ok(format!("{pairs} (n,k) pairs agree"))
        })(),
    );
    s.record(
        "counting",
        "endpoint_identity",
        "n=5..30".into(),
        (|| {
            for n in 5..=30 {
                let ep = endpoint_size(n);
                if core(size_e(n, n - 3))? != ep || core(size_e(n, n - 2))? != ep {
                    return Err(format!("n={n}: endpoint sizes differ from {ep}"));
                }
            }
            Ok("|E_(n-3)| = |E_(n-2)| = 3(n-2)! - 2(n-3)!".into())
        })(),
    );
    s.record(
        "counting",
        "menage_permanent",
        "n=3..12".into(),
        (|| {
            for n in 3..=12 {
                let u = core(menage_number(n))?;
                let p = core(permanent01(&BinaryMatrix::menage_matrix(n)))?;
                if u != p {
                    return Err(format!("n={n}: Touchard {u} vs permanent {p}"));
                }
            }
            Ok("Touchard sum equals the permanent".into())
        })(),
    );
    s.record(
        "counting",
        "menage_lower_envelope",
        "n=10..20".into(),
        (|| {
            for n in 10..=20 {
                if !core(menage_lower_envelope_holds(n))? {
                    return Err(format!("n={n}: envelope fails"));
                }
            }
            Ok("U_n >= (n!/e^2)(n-2)/(n-1)".into())
        })(),
    );
}

/// Minimal transversals by scanning subsets of `[2,t]^2`, as counts per size.
fn lattice_counts(members: &[PartialPermutation], t: usize) -> Vec<usize> {
    let side = t - 1;
    let cell = |p: &Point| (p.row as usize - 2) * side + (p.col as usize - 2);
    let masks: Vec<u32> = members.iter().map(|m| m.points().iter().fold(0u32, |a, p| a | 1 << cell(p))).collect();
    let hits = |s: u32| masks.iter().all(|&m| m & s != 0);
    let mut counts = vec![0; t];
    for s in 0u32..1 << (side * side) {
        let size = s.count_ones() as usize;
        if size >= t || !hits(s) {
            continue;
        }
        let minimal = (0..side * side).filter(|&b| s >> b & 1 == 1).all(|b| !hits(s & !(1 << b)));
        if minimal {
            counts[size] += 1;
        }
    }
    counts
}

fn check_hitting(members: &[PartialPermutation], t: usize) -> Check {
    let bc = core(hitting_bound_check(members, t))?;
    if !bc.holds {
        let counts: Vec<String> = (1..t).map(|i| format!("{i}:{}", bc.report.count(i))).collect();
        let fam: Vec<String> = members.iter().map(|m| format!("{{{m}}}")).collect();
        return Err(format!("counts {} exceed (t-2)^i for family {}", counts.join(","), fam.join(" ")));
    }
    for set in bc.report.sets() {
        let hit = |pts: &[Point]| members.iter().all(|m| pts.iter().any(|&p| m.contains(p)));
        if !hit(set) {
            return Err(format!("reported set {set:?} misses a member"));
        }
        for i in 0..set.len() {
            let mut smaller = set.clone();
            smaller.remove(i);
            if hit(&smaller) {
                return Err(format!("reported set {set:?} is not minimal"));
            }
        }
    }
    if t <= LATTICE_T {
        let oracle = lattice_counts(members, t);
        let found: Vec<usize> = (0..t).map(|i| bc.report.count(i)).collect();
        if oracle != found {
            return Err(format!("counts {found:?} differ from lattice oracle {oracle:?}"));
        }
    }
    Ok(format!("{} minimal sets of size below t", bc.report.sets().count()))
}

fn random_fragment_family(rng: &mut ChaCha8Rng, t: usize) -> PartialPermutation {
    let size = rng.random_range(1..=t - 2);
    let mut rows: Vec<u8> = (2..=t as u8).collect();
    let mut cols = rows.clone();
    let mut pts = Vec::with_capacity(size);
    for _ in 0..size {
        let r = rows.swap_remove(rng.random_range(0..rows.len()));
        let c = cols.swap_remove(rng.random_range(0..cols.len()));
        pts.push(Point::new(r, c));
    }
    PartialPermutation::new(t, pts).expect("distinct rows and columns")
}

fn hitting_suite(s: &mut Suite, t_max: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in 3..=t_max {
        let n = t + 2;
        s.record(
            "hitting",
            "fragments_of_H",
            format!("n={n} t={t}"),
            (|| {
                let h = core(build_h(n, t))?;
                check_hitting(&core(fragments(&h, t))?, t)
            })(),
        );
        let outcome = (0..RANDOM_HITTING_INSTANCES)
            .map(|_| {
                let members: Vec<PartialPermutation> =
                    (0..rng.random_range(1..=6)).map(|_| random_fragment_family(&mut rng, t)).collect();
                check_hitting(&members, t)
            })
            .find(Result::is_err)
            .unwrap_or_else(|| Ok(format!("{RANDOM_HITTING_INSTANCES} seeded instances")));
        s.record("hitting", "random_families", format!("t={t}"), outcome);
    }
}

fn spread_suite(s: &mut Suite, n_max: usize) {
    let taus = [rat(3, 2), rat(2, 1), rat(3, 1)];
    for n in 4..=n_max {
        for k in 2..=n - 2 {
            for tau in &taus {
                s.record(
                    "spread",
                    "decomposition_postconditions",
                    format!("E:{n}:{k} tau={tau} q=3"),
                    (|| {
                        let e = core(build_e(n, k))?;
                        let dec = core(spread_approximate(&e, &AmbientSpace::Sym { n }, tau, 3))?;
                        let post = core(dec.verify(&e))?;
                        if !post.all() {
                            return Err(format!("{post:?}"));
                        }
                        Ok(format!("{} covers, residual {}", dec.covers.len(), dec.residual.len()))
                    })(),
                );
            }
        }
        let r = rat(n, 4);
        s.record(
            "spread",
            "symmetric_group_rq_spread",
            format!("n={n} r={r} q={}", n / 4),
            (|| {
                let check = core(is_rq_spread(&AmbientSpace::Sym { n }, &r, n / 4))?;
                match check.witness {
                    Some((q, x)) => Err(format!("quotient {{{q}}} violated by {{{x}}}")),
                    None => Ok(format!("{} quotients", check.quotients_checked)),
                }
            })(),
        );
    }
}

fn extremal_suite(s: &mut Suite) {
    s.record(
        "extremal",
        "n4_ground_truth",
        "n=4".into(),
        (|| {
            let g = core(IntersectionGraph::new(4))?;
            let e0 = core(max_intersecting(&g, 0, u64::MAX))?;
            let e1 = core(max_intersecting(&g, 1, u64::MAX))?;
            if e0.max_size != Some(6) {
                return Err(format!("max at diversity 0 is {:?}, expected 6", e0.max_size));
            }
            if e1.max_size != Some(4) || e1.isomorphic_to_e != Some(2) {
                return Err(format!(
                    "max at diversity 1 is {:?} (isomorphic to E_{:?})",
                    e1.max_size, e1.isomorphic_to_e
                ));
            }
            Ok("6 at diversity 0; 4 at diversity 1, witness isomorphic to E_2".into())
        })(),
    );
}
