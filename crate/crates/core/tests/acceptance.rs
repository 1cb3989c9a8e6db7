//! Acceptance suite: one line per criterion, nonzero exit on any failure.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use permdiv::counting::{
    asymptotic_estimate, derangement_inclusion_exclusion, derangements_upto, double_avoid_count,
    double_avoid_lower_bound, endpoint_size, factorial, is_nearest_to_factorial_over_e, menage_lower_envelope_holds,
    menage_number, permanent01, size_e, size_n_h_by_derangements, size_n_h_by_inclusion_exclusion, BinaryMatrix,
    Estimate,
};
use permdiv::extremal::{frontier, max_intersecting, IntersectionGraph, DEFAULT_BUDGET};
use permdiv::family::{are_isomorphic, build_e, build_h, hilton_milner, maximal_closure, neighborhood_n, star, stats};
use permdiv::hitting::{fragments, minimal_hitting_sets};
use permdiv::spread::{
    is_rq_spread, spread_approximate, spread_lemma_trial, AmbientSpace, Sampling, SetFamily, TrialConfig,
};
use permdiv::{PartialPermutation, PermFamily, Permutation, Point};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn big(x: usize) -> BigUint {
    BigUint::from(x)
}

fn rational(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

fn formula_vs_enumeration() -> Outcome {
    let mut pairs = 0;
    for n in 4..=7 {
        for k in 2..=n - 2 {
            let h = build_h(n, k).map_err(|e| e.to_string())?;
            let want_h = factorial(k) - factorial(k - 1);
            ensure(big(h.len()) == want_h, || format!("|H| at n={n} k={k}: {} vs {want_h}", h.len()))?;
            let nh = neighborhood_n(n, &h).map_err(|e| e.to_string())?;
            let eq2 = size_n_h_by_derangements(n, k).map_err(|e| e.to_string())?;
            let eq6 = size_n_h_by_inclusion_exclusion(n, k).map_err(|e| e.to_string())?;
            ensure(big(nh.len()) == eq2 && eq2 == eq6, || {
                format!("|N(H)| at n={n} k={k}: enumeration {} vs {eq2} vs {eq6}", nh.len())
            })?;
            let e = build_e(n, k).map_err(|e| e.to_string())?;
            let eq3 = size_e(n, k).map_err(|e| e.to_string())?;
            ensure(big(e.len()) == eq3, || format!("|E| at n={n} k={k}: {} vs {eq3}", e.len()))?;
            pairs += 1;
        }
    }
    Ok(format!("{pairs} (n,k) pairs for n in 4..=7"))
}

fn endpoint_identity() -> Outcome {
    for n in 5..=30 {
        let a = size_e(n, n - 3).map_err(|e| e.to_string())?;
        let b = size_e(n, n - 2).map_err(|e| e.to_string())?;
        let c = endpoint_size(n);
        ensure(a == c && b == c, || format!("n={n}: {a}, {b}, {c}"))?;
    }
    Ok("n in 5..=30".into())
}

fn gap_inequality() -> Outcome {
    let mut pairs = 0;
    let mut violations = Vec::new();
    let mut decreasing = 0;
    let mut reversed_failures = Vec::new();
    for n in 6..=30 {
        let d = derangements_upto(n);
        for k in 3..=n - 3 {
            let hi = size_e(n, k).map_err(|e| e.to_string())?;
            let lo = size_e(n, k - 1).map_err(|e| e.to_string())?;
            pairs += 1;
            if hi < &lo + &d[n - 2] {
                violations.push((n, k));
            }
            if hi < lo {
                decreasing += 1;
                if &lo - &hi < d[n - 2] {
                    reversed_failures.push(format!("n={n} k={k}: {} < {}", &lo - &hi, d[n - 2]));
                }
            }
        }
    }
    if let Some(&(n, k)) = violations.first() {
        return Err(format!(
            "|E_k| - |E_(k-1)| >= d_(n-2) fails on {}/{pairs} pairs, first n={n} k={k}; \
             |E_k| < |E_(k-1)| on {decreasing}/{pairs} pairs; \
             |E_(k-1)| - |E_k| >= d_(n-2) fails on [{}]",
            violations.len(),
            reversed_failures.join(", ")
        ));
    }
    Ok(format!("{pairs} (n,k) pairs for n in 6..=30"))
}

fn derangement_menage_stack() -> Outcome {
    let d = derangements_upto(30);
    for (n, dn) in d.iter().enumerate() {
        ensure(*dn == derangement_inclusion_exclusion(n), || format!("d_{n}: recurrence vs alternating sum"))?;
        // d_0 = 1 by convention while 0!/e rounds to 0
        if n >= 1 {
            ensure(is_nearest_to_factorial_over_e(n, dn), || format!("d_{n} is not nearest to {n}!/e"))?;
        }
    }
    for n in 3..=12 {
        let u = menage_number(n).map_err(|e| e.to_string())?;
        let p = permanent01(&BinaryMatrix::menage_matrix(n)).map_err(|e| e.to_string())?;
        ensure(u == p, || format!("U_{n}: Touchard {u} vs permanent {p}"))?;
    }
    for n in 10..=20 {
        ensure(menage_lower_envelope_holds(n).map_err(|e| e.to_string())?, || {
            format!("U_{n} below (n!/e^2)(n-2)/(n-1)")
        })?;
    }
    Ok("d_n for n<=30 (nearest to n!/e for n>=1), U_n for n<=12, envelope for 10<=n<=20".into())
}

fn random_instance(rng: &mut ChaCha8Rng, n: usize) -> (PartialPermutation, PartialPermutation, Point, Point) {
    let shuffled = |rng: &mut ChaCha8Rng| {
        let mut v: Vec<u8> = (1..=n as u8).collect();
        v.shuffle(rng);
        Permutation::from_map(v).expect("shuffle is a permutation").to_partial()
    };
    let sigma = shuffled(rng);
    let pi = shuffled(rng);
    loop {
        let p1 = Point::new(rng.random_range(1..=n as u8), rng.random_range(1..=n as u8));
        let p2 = Point::new(rng.random_range(1..=n as u8), rng.random_range(1..=n as u8));
        let free = |p: Point| !sigma.contains(p) && !pi.contains(p);
        if p1.row != p2.row && p1.col != p2.col && free(p1) && free(p2) {
            return (sigma, pi, p1, p2);
        }
    }
}

fn double_avoid_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let n = 8;
    for _ in 0..3 {
        let (sigma, pi, p1, p2) = random_instance(&mut rng, n);
        let brute = Permutation::all(n)
            .filter(|p| p.contains_point(p1) && p.contains_point(p2))
            .filter(|p| !p.points().any(|q| sigma.contains(q) || pi.contains(q)))
            .count();
        let perm = double_avoid_count(n, &sigma, &pi, p1, p2).map_err(|e| e.to_string())?;
        ensure(perm == big(brute), || format!("n=8: permanent {perm} vs brute force {brute}"))?;
    }
    let mut minima = Vec::new();
    for n in 9..=11 {
        let bound = double_avoid_lower_bound(n);
        let mut min: Option<BigUint> = None;
        for _ in 0..100 {
            let (sigma, pi, p1, p2) = random_instance(&mut rng, n);
            let c = double_avoid_count(n, &sigma, &pi, p1, p2).map_err(|e| e.to_string())?;
            ensure(BigRational::from_integer(BigInt::from(c.clone())) >= bound, || {
                format!("n={n}: count {c} below bound, instance {sigma} / {pi} / {p1} {p2}")
            })?;
            min = Some(min.map_or(c.clone(), |m| m.min(c)));
        }
        minima.push(format!("n={n} min={}", min.expect("100 instances")));
    }
    Ok(format!("3 brute-force checks at n=8; 100 instances each, {}", minima.join(", ")))
}

/// Minimal transversals by scanning every subset of `[2,t]²`.
fn lattice(family: &[PartialPermutation], t: usize) -> BTreeMap<usize, Vec<Vec<Point>>> {
    let cells: Vec<Point> = (2..=t as u8).flat_map(|r| (2..=t as u8).map(move |c| Point::new(r, c))).collect();
    let member_masks: Vec<u32> = family
        .iter()
        .map(|m| cells.iter().enumerate().filter(|(_, &c)| m.contains(c)).fold(0u32, |acc, (i, _)| acc | 1 << i))
        .collect();
    let hits = |s: u32| member_masks.iter().all(|&m| m & s != 0);
    let mut out: BTreeMap<usize, Vec<Vec<Point>>> = BTreeMap::new();
    for s in 1u32..1 << cells.len() {
        let size = s.count_ones() as usize;
        if size >= t || !hits(s) {
            continue;
        }
        if (0..cells.len()).filter(|&i| s >> i & 1 == 1).all(|i| !hits(s & !(1 << i))) {
            let pts = (0..cells.len()).filter(|&i| s >> i & 1 == 1).map(|i| cells[i]).collect();
            out.entry(size).or_default().push(pts);
        }
    }
    for v in out.values_mut() {
        v.sort();
    }
    out
}

fn random_family(rng: &mut ChaCha8Rng, t: usize, max_len: usize) -> Vec<PartialPermutation> {
    let count = rng.random_range(1..=6);
    (0..count)
        .map(|_| {
            let mut rows: Vec<u8> = (2..=t as u8).collect();
            let mut cols = rows.clone();
            rows.shuffle(rng);
            cols.shuffle(rng);
            let len = rng.random_range(1..=max_len);
            let pts = rows.iter().zip(&cols).take(len).map(|(&r, &c)| Point::new(r, c)).collect();
            PartialPermutation::new(t, pts).expect("distinct rows and columns")
        })
        .collect()
}

fn hitting_sets() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut suites: Vec<(usize, Vec<PartialPermutation>)> = Vec::new();
    let h = build_h(5, 3).map_err(|e| e.to_string())?;
    suites.push((5, fragments(&h, 5).map_err(|e| e.to_string())?));
    for t in 3..=5 {
        for _ in 0..200 {
            suites.push((t, random_family(&mut rng, t, t - 1)));
        }
    }
    let mut bounded = 0;
    for (t, fam) in &suites {
        let t = *t;
        let r = minimal_hitting_sets(fam, t - 1).map_err(|e| e.to_string())?;
        ensure(r.by_size == lattice(fam, t), || format!("t={t}: mismatch on {fam:?}"))?;
        let small = fam.iter().all(|m| m.len() <= t - 2);
        let common_empty = fam.iter().skip(1).fold(fam[0].clone(), |acc, m| acc.intersection(m)).is_empty();
        if small && common_empty {
            bounded += 1;
            for i in 2..t {
                let bound = (t - 2).pow(i as u32);
                ensure(r.count(i) <= bound, || format!("t={t} i={i}: {} > {bound} on {fam:?}", r.count(i)))?;
            }
        }
    }
    Ok(format!("{} instances match the lattice oracle; bound checked on {bounded}", suites.len()))
}

type Instance = (String, PermFamily, AmbientSpace, BigRational, usize);

fn battery() -> Result<Vec<Instance>, String> {
    let e = |r: permdiv::Result<PermFamily>| r.map_err(|e| e.to_string());
    let sym = |n| AmbientSpace::Sym { n };
    let fixed = |n| AmbientSpace::Containing { base: PartialPermutation::alpha(1, 1, n).expect("valid") };
    let cycle5 = Permutation::from_map(vec![2, 3, 4, 5, 1]).map_err(|e| e.to_string())?;
    let nh52 = e(neighborhood_n(5, &e(build_h(5, 2))?))?;
    let nh63 = e(neighborhood_n(6, &e(build_h(6, 3))?))?;
    let nh64 = e(neighborhood_n(6, &e(build_h(6, 4))?))?;
    let cases = vec![
        ("Sym5", e(PermFamily::full(5))?, sym(5), rational(101, 100), 3),
        ("Sym4", e(PermFamily::full(4))?, sym(4), rational(2, 1), 1),
        ("E(5,2)", e(build_e(5, 2))?, sym(5), rational(3, 2), 3),
        ("E(5,2)", e(build_e(5, 2))?, sym(5), rational(2, 1), 1),
        ("E(5,3)", e(build_e(5, 3))?, sym(5), rational(5, 4), 2),
        ("E(5,3)", e(build_e(5, 3))?, sym(5), rational(3, 1), 0),
        ("H(5,3)", e(build_h(5, 3))?, sym(5), rational(3, 2), 2),
        ("star(5,1,1)", e(star(5, Point::new(1, 1)))?, sym(5), rational(2, 1), 3),
        ("star(5,1,1)", e(star(5, Point::new(1, 1)))?, sym(5), rational(6, 1), 1),
        ("N(H(5,2))", nh52.clone(), fixed(5), rational(3, 2), 2),
        ("N(H(5,2))", nh52, sym(5), rational(5, 4), 1),
        ("HM(5)", e(hilton_milner(&cycle5))?, sym(5), rational(3, 2), 2),
        ("E(6,2)", e(build_e(6, 2))?, sym(6), rational(3, 2), 2),
        ("E(6,3)", e(build_e(6, 3))?, sym(6), rational(2, 1), 3),
        ("E(6,4)", e(build_e(6, 4))?, sym(6), rational(5, 4), 1),
        ("H(6,4)", e(build_h(6, 4))?, sym(6), rational(2, 1), 4),
        ("N(H(6,3))", nh63, fixed(6), rational(3, 2), 2),
        ("N(H(6,4))", nh64, fixed(6), rational(101, 100), 1),
        ("closure(H(6,3))", e(maximal_closure(&e(build_h(6, 3))?))?, sym(6), rational(2, 1), 2),
        ("star(6,2,3)", e(star(6, Point::new(2, 3)))?, sym(6), rational(7, 2), 2),
    ];
    Ok(cases.into_iter().map(|(a, b, c, d, q)| (a.to_string(), b, c, d, q)).collect())
}

fn spread_postconditions() -> Outcome {
    let cases = battery()?;
    let mut covers = 0;
    for (name, f, a, tau, q) in &cases {
        let d = spread_approximate(f, a, tau, *q).map_err(|e| format!("{name}: {e}"))?;
        let post = d.verify(f).map_err(|e| format!("{name}: {e}"))?;
        ensure(post.all(), || format!("{name} tau={tau} q={q}: {post:?}"))?;
        covers += d.covers.len();
    }
    Ok(format!("{} instances, {covers} covers, all postconditions hold", cases.len()))
}

fn spread_lemma_mc() -> Outcome {
    let presets = [(100usize, 1.0, 0.05), (64, 7.0, 0.0714)];
    let mut parts = Vec::new();
    for (g, m, delta) in presets {
        let f = SetFamily::singletons(g).map_err(|e| e.to_string())?;
        let cfg = TrialConfig {
            r: rational(g as i64, 1),
            m,
            delta,
            trials: 20_000,
            seed: 42,
            sampling: Sampling::Independent,
        };
        let rep = spread_lemma_trial(&f, &cfg).map_err(|e| e.to_string())?;
        ensure(rep.matches_exact == Some(true), || format!("g={g}: {rep:?}"))?;
        ensure(rep.above_bound, || format!("g={g}: below bound {rep:?}"))?;
        parts.push(format!(
            "g={g}: empirical {:.4} exact {:.4} bound {:.4}",
            rep.empirical,
            rep.exact.unwrap_or(f64::NAN),
            rep.bound
        ));
    }
    Ok(parts.join("; "))
}

fn sym_rq_spread() -> Outcome {
    let mut checked = 0;
    for n in 4..=7 {
        let r = is_rq_spread(&AmbientSpace::Sym { n }, &rational(n as i64, 4), n / 4).map_err(|e| e.to_string())?;
        ensure(r.holds, || format!("n={n}: {:?}", r.witness))?;
        checked += r.quotients_checked;
    }
    Ok(format!("n in 4..=7, {checked} quotients enumerated"))
}

/// Every intersecting 6-subset of `Σ_4`, by direct subset enumeration.
fn all_maximum_families_n4() -> Vec<Vec<usize>> {
    let perms: Vec<Permutation> = Permutation::all(4).collect();
    let meets = |a: &Permutation, b: &Permutation| a.map().iter().zip(b.map()).any(|(x, y)| x == y);
    let mut out = Vec::new();
    let mut pick = Vec::new();
    fn go(
        start: usize,
        pick: &mut Vec<usize>,
        perms: &[Permutation],
        meets: &dyn Fn(&Permutation, &Permutation) -> bool,
        out: &mut Vec<Vec<usize>>,
    ) {
        if pick.len() == 6 {
            out.push(pick.clone());
            return;
        }
        for v in start..perms.len() {
            if pick.iter().all(|&u| meets(&perms[u], &perms[v])) {
                pick.push(v);
                go(v + 1, pick, perms, meets, out);
                pick.pop();
            }
        }
    }
    go(0, &mut pick, &perms, &meets, &mut out);
    out
}

fn extremal_ground_truth() -> Outcome {
    let g = IntersectionGraph::new(4).map_err(|e| e.to_string())?;
    let e0 = max_intersecting(&g, 0, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    ensure(e0.exact && e0.max_size == Some(6), || format!("n=4 gamma>=0: {:?}", e0.max_size))?;
    let all = all_maximum_families_n4();
    ensure(all.len() == 16, || format!("{} intersecting 6-families, expected the 16 stars", all.len()))?;
    for fam in &all {
        let f = PermFamily::from_ranks(4, fam.iter().map(|&v| v as u64)).map_err(|e| e.to_string())?;
        ensure(stats(&f).diversity == 0, || format!("non-star maximum family {fam:?}"))?;
    }
    let e1 = max_intersecting(&g, 1, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    let want = size_e(4, 2).map_err(|e| e.to_string())?;
    ensure(e1.exact && e1.max_size.map(big) == Some(want.clone()), || {
        format!("n=4 gamma>=1: {:?} vs {want}", e1.max_size)
    })?;
    let w = e1.witness.ok_or("no witness")?;
    let iso = are_isomorphic(&w, &build_e(4, 2).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    ensure(iso.is_some(), || "witness not isomorphic to E_2".into())?;

    let r5 = frontier(5, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    let rows: Vec<String> = r5
        .frontier
        .iter()
        .map(|e| {
            let size = e.max_size.map_or("-".into(), |s| s.to_string());
            let iso = e.isomorphic_to_e.map_or(String::new(), |k| format!("~E_{k}"));
            let flag = if e.exact { "" } else { "?" };
            format!("{}:{size}{iso}{flag}", e.min_diversity)
        })
        .collect();
    Ok(format!("n=4 max 6 (16 star witnesses), gamma>=1 max 4 ~ E_2; n=5 frontier [{}]", rows.join(" ")))
}

fn asymptotic_decay() -> Outcome {
    let ladder = [40usize, 80, 160, 320];
    let mut parts = Vec::new();
    for which in [Estimate::NearTop, Estimate::Exponential] {
        let errors: Vec<f64> = ladder
            .iter()
            .map(|&n| {
                let k = if which == Estimate::NearTop { n - 4 } else { 10 };
                asymptotic_estimate(n, k, which).map(|r| r.relative_error)
            })
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        for (w, n) in errors.windows(2).zip(&ladder[1..]) {
            let ratio = w[1] / w[0];
            ensure(ratio <= 0.7, || format!("{which:?} at n={n}: ratio {ratio:.3} ({errors:?})"))?;
        }
        parts.push(format!("{which:?} errors {:?}", errors.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>()));
    }
    Ok(parts.join("; "))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("formula-enumeration equality", formula_vs_enumeration),
        ("endpoint identity", endpoint_identity),
        ("gap inequality", gap_inequality),
        ("derangement and menage stack", derangement_menage_stack),
        ("double-avoidance lower bound", double_avoid_bound),
        ("minimal hitting sets", hitting_sets),
        ("spread decomposition postconditions", spread_postconditions),
        ("spread lemma Monte-Carlo", spread_lemma_mc),
        ("(n/4, n/4)-spreadness of the symmetric group", sym_rq_spread),
        ("extremal ground truth", extremal_ground_truth),
        ("asymptotic error decay", asymptotic_decay),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {:>2} {name}: {detail} ({secs:.2}s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {:>2} {name}: {why} ({secs:.2}s)", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
