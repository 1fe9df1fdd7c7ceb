//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::collections::HashMap;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use wqo_cwlab::bounds::{
    check_lemma2, check_lemma3_exhaustive, check_lemma4, check_theorem2_sampled, theorem2_threshold,
};
use wqo_cwlab::graph::{check_diffq, check_maxone, check_maxpower, power, Factor, Label, PowerGraph};
use wqo_cwlab::oracle::{antichain_search, induced_embeds_labels, verify_embedding, SearchBudget, Verdict};
use wqo_cwlab::order::{
    build_embedding_phi, classify_factor, intiso_failure, leq_c, leq_c_matrices, long_factor_embedding,
    FactorMatrix,
};
use wqo_cwlab::report::LemmaReport;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn from_reports(reports: &[LemmaReport]) -> Outcome {
    let checked: u64 = reports.iter().map(|r| r.checked).sum();
    let violations: u64 = reports.iter().map(|r| r.violation_count).sum();
    let first = reports.iter().find(|r| !r.passed()).map(|r| format!("; {r}")).unwrap_or_default();
    outcome(violations == 0, format!("{checked} instances, {violations} violations{first}"))
}

fn pg(labels: &[Label]) -> PowerGraph {
    PowerGraph::from_labels(labels.iter().copied()).unwrap()
}

fn subsets(n: u64) -> impl Iterator<Item = PowerGraph> {
    (0u64..1 << n).map(move |mask| PowerGraph::from_labels((1..=n).filter(|&l| mask >> (l - 1) & 1 == 1)).unwrap())
}

fn trial_division_power(mut i: u64) -> u64 {
    let mut p = 1;
    while i.is_multiple_of(2) {
        i /= 2;
        p *= 2;
    }
    p
}

fn power_function() -> Outcome {
    let concrete = [(5, 1), (6, 2), (8, 8), (12, 4)].iter().all(|&(i, q)| power(i).unwrap() == q);
    let mismatches = (1..=1_000_000u64).filter(|&i| power(i).unwrap() != trial_division_power(i)).count();
    outcome(concrete && mismatches == 0, format!("q(5,6,8,12) = 1,2,8,4: {concrete}; {mismatches} mismatches up to 10^6"))
}

fn d16_structure() -> Outcome {
    let g = PowerGraph::dn(16).unwrap();
    let cliques: Vec<Vec<Label>> = g.power_cliques().into_values().filter(|c| c.len() > 1).collect();
    let expected = vec![(1..=15).step_by(2).collect::<Vec<_>>(), vec![2, 6, 10, 14], vec![4, 12]];
    let brute = (1..=16u64)
        .flat_map(|a| (a + 1..=16).map(move |b| (a, b)))
        .filter(|&(a, b)| b - a == 1 || trial_division_power(a) == trial_division_power(b))
        .count();
    let pass = cliques == expected && g.edge_count() == 50 && brute == 50;
    outcome(pass, format!("cliques of size > 1: {cliques:?}; {} edges (brute force {brute})", g.edge_count()))
}

fn component_bound() -> Outcome {
    let reports: Vec<LemmaReport> = (1..=16).into_par_iter().map(|n| check_lemma2(n, 16).unwrap()).collect();
    from_reports(&reports)
}

fn split_bound() -> Outcome {
    let reports: Vec<LemmaReport> =
        (1..=16).into_par_iter().map(|n| check_lemma3_exhaustive(n, 16).unwrap()).collect();
    from_reports(&reports)
}

fn window_cover() -> Outcome {
    let reports: Vec<LemmaReport> = (1..=5).map(|c| check_lemma4(c, 4096).unwrap()).collect();
    from_reports(&reports)
}

fn threshold_sample() -> Outcome {
    let n = theorem2_threshold(2).unwrap();
    let r = check_theorem2_sampled(2, 10_000, 20_240_601).unwrap();
    let mut o = from_reports(&[r]);
    o.pass &= n == 108;
    o.detail = format!("n = {n}; {}", o.detail);
    o
}

fn interval_lemmas() -> Outcome {
    from_reports(&[check_maxone(4096, 64), check_diffq(4096, 64), check_maxpower(4096, 64)])
}

fn random_factor(rng: &mut ChaCha8Rng, len: u64) -> Factor {
    let start = rng.gen_range(1..=100_000 - len + 1);
    Factor::new(start, start + len - 1).unwrap()
}

fn intiso() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut checked, mut violations) = (0u32, 0u32);
    while checked < 10_000 {
        let len = rng.gen_range(1..=16);
        let f1 = random_factor(&mut rng, len);
        let t = classify_factor(&f1).1;
        let f2 = (0..10_000).map(|_| random_factor(&mut rng, len)).find(|f| classify_factor(f).1 == t);
        let Some(f2) = f2 else { continue };
        checked += 1;
        if intiso_failure(&f1, &f2).is_some() {
            violations += 1;
        }
    }
    outcome(violations == 0, format!("{checked} random t-equivalent pairs, {violations} violations"))
}

#[derive(Default)]
struct SoundnessTally {
    classes: usize,
    members: usize,
    iso_failures: usize,
    leq_pairs: usize,
    unsound: usize,
    phi_failures: usize,
    inconclusive: usize,
}

/// Criteria 9 and 10 share the scan over bounded subgraphs of `D_12`.
fn leq_c_soundness(c: u64, budget: SearchBudget) -> SoundnessTally {
    let mut classes: HashMap<FactorMatrix, Vec<PowerGraph>> = HashMap::new();
    for g in subsets(12) {
        if let Ok(m) = FactorMatrix::new(&g, c) {
            classes.entry(m).or_default().push(g);
        }
    }
    let mut classes: Vec<(FactorMatrix, Vec<PowerGraph>)> = classes.into_iter().collect();
    classes.sort_by(|a, b| a.1[0].labels().cmp(b.1[0].labels()));
    let mut tally = SoundnessTally { classes: classes.len(), ..Default::default() };
    tally.members = classes.iter().map(|c| c.1.len()).sum();

    // Equal matrices must mean isomorphic graphs, so one representative per
    // class stands for every member.
    tally.iso_failures = classes
        .par_iter()
        .map(|(_, members)| {
            members[1..]
                .iter()
                .filter(|g| {
                    !induced_embeds_labels(&members[0], g, budget).embeds()
                        || !induced_embeds_labels(g, &members[0], budget).embeds()
                })
                .count()
        })
        .sum();

    let rows: Vec<SoundnessTally> = classes
        .par_iter()
        .map(|(mg, gs)| {
            let mut t = SoundnessTally::default();
            let g = &gs[0];
            for (mh, hs) in &classes {
                let h = &hs[0];
                let Some(w) = leq_c_matrices(mg, mh).unwrap() else { continue };
                t.leq_pairs += 1;
                match build_embedding_phi(g, h, c, &w) {
                    Ok(map) if verify_embedding(&map, g, h).unwrap() => {}
                    _ => t.phi_failures += 1,
                }
                match induced_embeds_labels(g, h, budget) {
                    Verdict::Embeds(_) => {}
                    Verdict::NotEmbeds => t.unsound += 1,
                    Verdict::Inconclusive => t.inconclusive += 1,
                }
            }
            t
        })
        .collect();
    for r in rows {
        tally.leq_pairs += r.leq_pairs;
        tally.unsound += r.unsound;
        tally.phi_failures += r.phi_failures;
        tally.inconclusive += r.inconclusive;
    }
    tally
}

fn soundness(tallies: &[(u64, SoundnessTally)]) -> Outcome {
    let counterexample = leq_c(&pg(&[2]), &pg(&[1]), 1).unwrap().is_none()
        && induced_embeds_labels(&pg(&[2]), &pg(&[1]), SearchBudget::default()).embeds();
    let mut pass = counterexample;
    let mut parts = Vec::new();
    for (c, t) in tallies {
        pass &= t.iso_failures == 0 && t.unsound == 0 && t.inconclusive == 0;
        parts.push(format!(
            "c={c}: {} graphs in {} matrix classes, {} iso failures, {} leq_c pairs, {} unsound, {} inconclusive",
            t.members, t.classes, t.iso_failures, t.leq_pairs, t.unsound, t.inconclusive
        ));
    }
    outcome(pass, format!("{}; {{2}} vs {{1}} incomparable under leq_c yet embeds: {counterexample}", parts.join("; ")))
}

struct LongFactorTally {
    hosts: usize,
    failures: Vec<String>,
}

fn long_factor_hosts(n: u64) -> Vec<PowerGraph> {
    let len = 5 * n;
    let mut rng = ChaCha8Rng::seed_from_u64(n);
    let mut hosts = Vec::new();
    for start in [1, 2, 3, 7, 100, 1000, 4093] {
        hosts.push(PowerGraph::from_labels(start..start + len).unwrap());
    }
    for _ in 0..20 {
        let start = rng.gen_range(2..50_000);
        let mut labels: Vec<Label> = (start..start + len + rng.gen_range(0..n)).collect();
        labels.extend((0..10).map(|_| rng.gen_range(60_000..70_000)));
        hosts.push(PowerGraph::from_labels(labels).unwrap());
    }
    hosts
}

fn long_factor_check(budget: SearchBudget) -> LongFactorTally {
    let mut tally = LongFactorTally { hosts: 0, failures: Vec::new() };
    for n in 3..=12u64 {
        let g = PowerGraph::dn(n).unwrap();
        for host in long_factor_hosts(n) {
            tally.hosts += 1;
            let map = match long_factor_embedding(&g, &host) {
                Ok(Some(map)) => map,
                Ok(None) => {
                    tally.failures.push(format!("n={n}: no map into host starting at {:?}", host.labels().first()));
                    continue;
                }
                Err(e) => {
                    tally.failures.push(format!("n={n}: {e}"));
                    continue;
                }
            };
            let shift_ok = map.pairs().iter().all(|&(z, y)| power(y).unwrap() == power(z).unwrap());
            let sub = host.induced(map.pairs().iter().map(|p| p.1)).unwrap();
            let oracle_ok = verify_embedding(&map, &g, &host).unwrap()
                && induced_embeds_labels(&g, &sub, budget).embeds();
            if !shift_ok || !oracle_ok {
                tally.failures.push(format!("n={n}: shift_ok {shift_ok}, oracle_ok {oracle_ok}"));
            }
        }
    }
    tally
}

fn brute_embeds(g: &[Label], h: &[Label]) -> bool {
    fn extend(g: &[Label], h: &[Label], used: &mut Vec<bool>, image: &mut Vec<Label>) -> bool {
        let k = image.len();
        if k == g.len() {
            return true;
        }
        for j in 0..h.len() {
            if used[j] {
                continue;
            }
            let ok = (0..k).all(|i| {
                wqo_cwlab::graph::labels_adjacent(g[i], g[k]) == wqo_cwlab::graph::labels_adjacent(image[i], h[j])
            });
            if ok {
                used[j] = true;
                image.push(h[j]);
                if extend(g, h, used, image) {
                    return true;
                }
                image.pop();
                used[j] = false;
            }
        }
        false
    }
    g.len() <= h.len() && extend(g, h, &mut vec![false; h.len()], &mut Vec::new())
}

fn antichain() -> Outcome {
    let all: Vec<PowerGraph> = subsets(4).collect();
    let k = all.len();
    let comparable: Vec<Vec<bool>> = (0..k)
        .map(|i| {
            (0..k).map(|j| brute_embeds(all[i].labels(), all[j].labels()) || brute_embeds(all[j].labels(), all[i].labels())).collect()
        })
        .collect();
    let mut best = 0;
    for family in 0u32..1 << k {
        let members: Vec<usize> = (0..k).filter(|&i| family >> i & 1 == 1).collect();
        if members.len() > best && members.iter().enumerate().all(|(a, &i)| members[a + 1..].iter().all(|&j| !comparable[i][j])) {
            best = members.len();
        }
    }
    const FROZEN_D4_ANTICHAIN: usize = 3;
    let report = antichain_search(4, usize::MAX, SearchBudget::default()).unwrap();
    let certified = report.family.iter().enumerate().all(|(a, f)| {
        report.family[a + 1..].iter().all(|e| !brute_embeds(f, e) && !brute_embeds(e, f))
    });
    let pass = best == FROZEN_D4_ANTICHAIN && report.family.len() == best && report.complete && certified;
    outcome(pass, format!("brute-force maximum {best}; search found {:?}", report.family))
}

fn run_cli(args: &[&str], dir: &std::path::Path) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_wqo-cwlab")).args(args).current_dir(dir).output().unwrap();
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("wqo-cwlab-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let labels = (1..=108).map(|l| l.to_string()).collect::<Vec<_>>().join(" ");
    std::fs::write(dir.join("d108.txt"), labels + "\n").unwrap();
    let commands: [&[&str]; 5] = [
        &["mu", "d108.txt", "--mode", "sampled", "--samples", "2000", "--seed", "11"],
        &["verify", "--lemma", "theorem2", "--c", "2", "--samples", "500", "--seed", "3", "--json"],
        &["experiment", "--count", "1000", "--host-n", "512", "--c", "8", "--seed", "42"],
        &["experiment", "--count", "50", "--host-n", "64", "--c", "2", "--seed", "9", "--oracle-budget", "100000"],
        &["antichain", "--n", "5"],
    ];
    let mut failures = Vec::new();
    for args in commands {
        let (c1, o1) = run_cli(args, &dir);
        let (c2, o2) = run_cli(args, &dir);
        let json_ok = serde_json::from_slice::<serde_json::Value>(&o1).is_ok();
        if c1 != 0 || c1 != c2 || o1 != o2 || !json_ok {
            failures.push(args[0..2].join(" "));
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    outcome(failures.is_empty(), format!("{} seeded commands run twice, mismatches: {failures:?}", commands.len()))
}

fn main() {
    let budget = SearchBudget::new(1_000_000).unwrap();
    let mut failed = 0;
    let mut report = |id: u32, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {verdict} {name} [{:.2}s]: {}", t.elapsed().as_secs_f64(), o.detail);
        if !o.pass {
            failed += 1;
        }
    };
    report(1, "power function", &mut power_function);
    report(2, "D_16 structure", &mut d16_structure);
    report(3, "component-count bound, n <= 16", &mut component_bound);
    report(4, "split power cliques bound, n <= 16", &mut split_bound);
    report(5, "windows meet power cliques, c <= 5", &mut window_cover);
    report(6, "sampled threshold bound at c = 2", &mut threshold_sample);
    report(7, "unique maximal vertex and power differences", &mut interval_lemmas);
    report(8, "index map between t-equivalent factors", &mut intiso);

    let started = Instant::now();
    let tallies: Vec<(u64, SoundnessTally)> = (1..=3).map(|c| (c, leq_c_soundness(c, budget))).collect();
    let secs = started.elapsed().as_secs_f64();
    report(9, "leq_c soundness against the oracle on D_12", &mut || {
        let mut o = soundness(&tallies);
        o.detail = format!("{} (scan {secs:.2}s)", o.detail);
        o
    });
    let long = long_factor_check(budget);
    report(10, "constructed embeddings verify", &mut || {
        let phi_failures: usize = tallies.iter().map(|t| t.1.phi_failures).sum();
        let phi_total: usize = tallies.iter().map(|t| t.1.leq_pairs).sum();
        outcome(
            phi_failures == 0 && long.failures.is_empty(),
            format!(
                "{phi_total} phi maps with {phi_failures} failures; {} long-factor maps with {} failures",
                long.hosts,
                long.failures.len()
            ),
        )
    });
    report(11, "long-factor shift for D_3..D_12", &mut || {
        outcome(long.failures.is_empty(), format!("{} hosts; failures: {:?}", long.hosts, long.failures))
    });
    report(12, "antichain probe on D_4", &mut antichain);
    report(13, "seeded CLI runs are byte-identical", &mut determinism);

    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 13 acceptance criteria passed");
}
