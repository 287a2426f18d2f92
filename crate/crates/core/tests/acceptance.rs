//! Acceptance criteria, one test each. Every test also writes a one-line
//! verdict to stderr so the plain `cargo test` log doubles as a report.

mod common;

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::{linear_mothers, oracle_children, oracle_components, oracle_preorder, report};
use poisson_forest::experiments::{run_experiment, Experiment, ExperimentConfig, ExperimentReport, Verdict};
use poisson_forest::fixtures::{f1, f2, id};
use poisson_forest::forest::Forest;
use poisson_forest::point_process::{palm_version, replica_seed, rng_from_seed, sample_poisson, Boundary, PointId, Window};
use poisson_forest::succession::{
    check_pointshift_identity, enumerate_line, predecessor, preorder_oracle, successor, Status,
};
use poisson_forest::walks::{eta_slice, meeting_time, trajectory, Founder, SiteKey};
use rand::Rng;

fn failing_checks(rep: &ExperimentReport) -> String {
    let bad: Vec<String> = rep
        .checks()
        .filter(|r| r.verdict != Verdict::Pass)
        .map(|r| format!("{} {}={} ({})", r.cell, r.statistic, r.value, r.verdict.as_str()))
        .collect();
    if bad.is_empty() {
        "all checks pass".into()
    } else {
        bad.join("; ")
    }
}

fn value(rep: &ExperimentReport, cell: &str, stat: &str) -> f64 {
    rep.find(cell, stat).unwrap_or_else(|| panic!("row {cell} {stat} missing")).value
}

#[test]
fn criterion_01_mother_map_matches_linear_scan() {
    let start = Instant::now();
    let mut points = 0;
    let mut mismatches = 0;
    for i in 0..50u64 {
        let d = 2 + (i % 3) as usize;
        let boundary = if i % 2 == 0 { Boundary::Periodic } else { Boundary::Open };
        let (side, t) = match d {
            2 => (30.0, 80.0),
            3 => (8.0, 40.0),
            _ => (6.0, 12.0),
        };
        let w = Window::cube(d, side, 0.0, t, boundary).unwrap();
        let sample = sample_poisson(1.0, &w, replica_seed(11, i)).unwrap();
        assert!(sample.len() <= 10_000);
        let forest = Forest::build(sample.clone()).unwrap();
        let oracle = linear_mothers(&sample);
        for (&pid, &m) in &oracle {
            points += 1;
            if forest.mother(pid).unwrap() != m {
                mismatches += 1;
            }
        }
        let comps = oracle_components(&sample);
        for a in sample.points.iter().step_by(7) {
            for b in sample.points.iter().step_by(13) {
                let same = comps[&a.id] == comps[&b.id];
                if same != (forest.component_of(a.id).unwrap() == forest.component_of(b.id).unwrap()) {
                    mismatches += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = mismatches == 0 && elapsed < Duration::from_secs(60);
    report(1, "mother map vs linear scan", ok, &format!("{points} points, {mismatches} mismatches, {elapsed:.1?}"));
    assert_eq!(mismatches, 0);
    assert!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
}

#[test]
fn criterion_02_fixtures_exact() {
    let mut errors = Vec::new();
    let mut expect = |what: &str, ok: bool| {
        if !ok {
            errors.push(what.to_string());
        }
    };
    let g = f1();
    let (a, b, c, e) = (id("a"), id("b"), id("c"), id("e"));
    let hit = g.index().mother(&[0.0], 0.0).unwrap().unwrap();
    expect("mother(a) = b", g.id(hit.slot) == b && hit.tau == 1.0);
    let hit = g.index().mother(&[0.5], 1.0).unwrap().unwrap();
    expect("mother(b) = c", g.id(hit.slot) == c && hit.tau == 2.0);
    expect("mother(e) unresolved", g.index().mother(&[3.0], 0.5).unwrap().is_none());
    expect("roots {c, e}", g.roots().into_iter().collect::<BTreeSet<_>>() == BTreeSet::from([c, e]));
    let comp = |x| g.component_of(x).unwrap();
    expect("components {a,b,c} {e}", comp(a) == comp(b) && comp(b) == comp(c) && comp(a) != comp(e));
    let summary = g.components();
    let mut sizes = summary.sizes.clone();
    sizes.sort_unstable();
    expect("2 components sized 1 and 3", summary.count == 2 && sizes == vec![1, 3]);
    expect("ancestor(a, 2) = c", g.ancestor(a, 2).unwrap() == Some(c));
    expect("ancestor(e, 1) unresolved", g.ancestor(e, 1).unwrap().is_none());
    let br = g.branch(c).unwrap();
    expect("branch(c)", br.members == vec![(c, 0), (b, 1), (a, 2)]);
    expect("successor(a) unresolved", successor(&g, a).unwrap().status == Status::UnresolvedAtBoundary);
    expect("predecessor(a) = b", predecessor(&g, a).unwrap().found() == Some(b));
    expect("predecessor(b) = c", predecessor(&g, b).unwrap().found() == Some(c));
    expect("preorder from c", preorder_oracle(&g, c).unwrap() == vec![c, b, a]);
    let tr = trajectory(&g, a, 2.5).unwrap();
    expect("trajectory(a) jump times", tr.jump_times == vec![1.0, 2.0]);
    expect("trajectory(a) positions", tr.positions == vec![vec![0.5], vec![1.2]]);
    let tr = trajectory(&g, e, 2.5).unwrap();
    expect("trajectory(e) no jumps", tr.jumps() == 0 && tr.horizon == 2.5);
    let eta = eta_slice(&g, 2.0).unwrap();
    let lineage = eta.lineage();
    expect(
        "eta at 2.0",
        lineage.len() == 2
            && lineage.get(&SiteKey::Point(c)).map(|f| f.to_vec())
                == Some(vec![Founder::Point(a), Founder::Point(b), Founder::Point(c)])
            && lineage.get(&SiteKey::Point(e)).map(|f| f.to_vec()) == Some(vec![Founder::Point(e)]),
    );
    expect("occupied {1.2, 3.0}", eta.occupied() == vec![&[1.2][..], &[3.0][..]]);
    expect("meeting_time(a, b) = 2.0", meeting_time(&g, a, b).unwrap() == Some(2.0));
    expect("meeting_time(a, e) none", meeting_time(&g, a, e).unwrap().is_none());

    let h = f2();
    let (m, p, q) = (id("m"), id("p"), id("q"));
    expect("mother(p) = mother(q) = m", h.mother(p).unwrap() == Some(m) && h.mother(q).unwrap() == Some(m));
    expect("sister ranks", h.sister_rank(p).unwrap() == 1 && h.sister_rank(q).unwrap() == 2);
    expect("successor(m) = p", successor(&h, m).unwrap().found() == Some(p));
    expect("successor(p) = q", successor(&h, p).unwrap().found() == Some(q));
    expect("predecessor(q) = p", predecessor(&h, q).unwrap().found() == Some(p));
    expect("predecessor(p) = m", predecessor(&h, p).unwrap().found() == Some(m));
    let labels = enumerate_line(&h, m, 0, 2).unwrap();
    expect("labels from m", labels.labels.iter().map(|(&k, &v)| (k, v)).eq([(0, m), (1, p), (2, q)]));
    expect("preorder from m", preorder_oracle(&h, m).unwrap() == vec![m, p, q]);
    expect("point-shift identity at m", check_pointshift_identity(&h, m, 1).unwrap());

    let ok = errors.is_empty();
    report(2, "fixture exactness", ok, &if ok { "every value reproduced".into() } else { errors.join(", ") });
    assert!(ok, "{errors:?}");
}

#[test]
fn criterion_03_successor_chain_is_preorder() {
    let mut branches = 0;
    let mut chain_errors = 0;
    let mut checked_pairs = 0;
    let mut inverse_errors = 0;
    let mut rng = rng_from_seed(3);
    let mut f = 0u64;
    while branches < 200 {
        let d = 2 + (f % 2) as usize;
        let boundary = if f % 4 < 2 { Boundary::Periodic } else { Boundary::Open };
        let w = match d {
            2 => Window::cube(2, 20.0, 0.0, 40.0, boundary).unwrap(),
            _ => Window::cube(3, 6.0, 0.0, 20.0, boundary).unwrap(),
        };
        let sample = sample_poisson(1.0, &w, replica_seed(5, f)).unwrap();
        f += 1;
        let forest = Forest::build(sample.clone()).unwrap();
        let children = oracle_children(&sample);

        let candidates: Vec<usize> = (0..forest.len())
            .filter(|&s| {
                let (size, truncated) = forest.branch_size_slot(s);
                size >= 2 && !truncated
            })
            .collect();
        for _ in 0..20 {
            if candidates.is_empty() || branches == 200 {
                break;
            }
            let root = forest.id(candidates[rng.random_range(0..candidates.len())]);
            let expected = oracle_preorder(&children, root);
            let mut chain = vec![root];
            while chain.len() < expected.len() {
                match successor(&forest, *chain.last().unwrap()).unwrap().found() {
                    Some(next) => chain.push(next),
                    None => break,
                }
            }
            if chain != expected || preorder_oracle(&forest, root).unwrap() != expected {
                chain_errors += 1;
            }
            branches += 1;
        }
        for s in 0..forest.len() {
            let v = forest.id(s);
            if let Some(next) = successor(&forest, v).unwrap().found() {
                checked_pairs += 1;
                if predecessor(&forest, next).unwrap().found() != Some(v) {
                    inverse_errors += 1;
                }
            }
        }
    }
    let ok = chain_errors == 0 && inverse_errors == 0;
    report(
        3,
        "successor chain equals preorder",
        ok,
        &format!("{branches} branches ({chain_errors} wrong), {checked_pairs} inverse pairs ({inverse_errors} wrong)"),
    );
    assert!(ok);
}

#[test]
fn criterion_04_point_shift_identity() {
    let w = Window::cube(2, 20.0, -20.0, 20.0, Boundary::Periodic).unwrap();
    let mut resolved = 0;
    let mut failures = 0;
    for i in 0..100u64 {
        let palm = palm_version(&sample_poisson(1.0, &w, replica_seed(21, i)).unwrap()).unwrap();
        let forest = Forest::build(palm).unwrap();
        let mut anchors = vec![PointId(0)];
        anchors.extend((1..=3).map(|j| forest.id((i as usize * 31 + j * 97) % forest.len())));
        for anchor in anchors {
            for n in (-20i64..=20).filter(|&n| n != 0) {
                if let Ok(ok) = check_pointshift_identity(&forest, anchor, n) {
                    resolved += 1;
                    if !ok {
                        failures += 1;
                    }
                }
            }
        }
    }
    let ok = failures == 0 && resolved > 0;
    report(4, "point-shift identity", ok, &format!("{resolved} resolved pairs, {failures} failures"));
    assert!(ok);
}

#[test]
fn criterion_05_connectivity_trend() {
    let start = Instant::now();
    let r2 = run_experiment(Experiment::Connectivity, &ExperimentConfig::defaults(Experiment::Connectivity, 2)).unwrap();
    let r3 = run_experiment(Experiment::Connectivity, &ExperimentConfig::defaults(Experiment::Connectivity, 3)).unwrap();
    let elapsed = start.elapsed();
    let f2 = value(&r2, "T=1000", "largest_fraction_mean");
    let f3 = value(&r3, "T=1000", "largest_fraction_mean");
    let ok = r2.overall() == Verdict::Pass && r3.overall() == Verdict::Pass && elapsed < Duration::from_secs(600);
    report(
        5,
        "connectivity trend",
        ok,
        &format!(
            "d=2 fraction {f2:.4} at T=1000 ({}), d=3 fraction {f3:.4} ({}), {elapsed:.1?}",
            failing_checks(&r2),
            failing_checks(&r3)
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_06_forest_regime() {
    let cfg = ExperimentConfig::defaults(Experiment::Connectivity, 4);
    let rep = run_experiment(Experiment::Connectivity, &cfg).unwrap();
    let counts: Vec<String> =
        cfg.times.iter().map(|t| format!("{:.2}", value(&rep, &format!("T={t}"), "components_mean"))).collect();
    let ok = rep.overall() == Verdict::Pass;
    report(6, "forest regime d=4", ok, &format!("components {} ({})", counts.join(" -> "), failing_checks(&rep)));
    assert!(ok);
}

#[test]
fn criterion_07_marginal_dynamics() {
    let mut details = Vec::new();
    let mut ok = true;
    for d in [2, 3] {
        let rep =
            run_experiment(Experiment::MarginalDynamics, &ExperimentConfig::defaults(Experiment::MarginalDynamics, d))
                .unwrap();
        let events = rep.find("all", "events>=10000").map(|r| r.n).unwrap_or(0);
        ok &= rep.overall() == Verdict::Pass && events >= 10_000;
        details.push(format!(
            "d={d}: {events} events, waiting p={:.3} ({})",
            value(&rep, "waiting", "ks_p_exponential"),
            failing_checks(&rep)
        ));
    }
    report(7, "marginal dynamics", ok, &details.join("; "));
    assert!(ok);
}

#[test]
fn criterion_08_exponential_ergodicity() {
    let rep = run_experiment(Experiment::Ergodicity, &ExperimentConfig::defaults(Experiment::Ergodicity, 2)).unwrap();
    let p: Vec<String> = [1, 2, 4, 8].iter().map(|t| format!("{:.3}", value(&rep, &format!("t={t}"), "p_hat"))).collect();
    let ok = rep.overall() == Verdict::Pass;
    report(8, "exponential ergodicity", ok, &format!("p(t) {} ({})", p.join(" "), failing_checks(&rep)));
    assert!(ok);
}

#[test]
fn criterion_09_meeting_bound() {
    let cfg = ExperimentConfig::defaults(Experiment::MeetingBound, 4);
    assert!(cfg.replicas >= 10_000);
    let rep = run_experiment(Experiment::MeetingBound, &cfg).unwrap();
    let cells: Vec<String> = cfg
        .separations
        .iter()
        .map(|d| {
            let cell = format!("D={d}");
            format!(
                "D={d}: freq {:.4}, ci99 upper {:.4} vs bound {:.4}",
                value(&rep, &cell, "meeting_frequency"),
                value(&rep, &cell, "ci99_upper<=bound"),
                value(&rep, &cell, "bound")
            )
        })
        .collect();
    let ok = rep.overall() == Verdict::Pass;
    report(9, "meeting bound d=4", ok, &cells.join("; "));
    assert!(ok, "{}", failing_checks(&rep));
}

#[test]
fn criterion_10_palm_invariance() {
    let rep =
        run_experiment(Experiment::PalmInvariance, &ExperimentConfig::defaults(Experiment::PalmInvariance, 2)).unwrap();
    let min_p = rep
        .checks()
        .filter(|r| r.statistic.starts_with("ks_p"))
        .map(|r| r.value)
        .fold(f64::INFINITY, f64::min);
    let exclusion = rep.checks().find(|r| r.statistic.starts_with("exclusion")).unwrap().value;
    let ok = rep.overall() == Verdict::Pass;
    report(
        10,
        "palm invariance",
        ok,
        &format!("smallest KS p {min_p:.4}, exclusion {exclusion:.3} ({})", failing_checks(&rep)),
    );
    assert!(ok);
}

fn run_cli(dir: &Path, args: &[&str]) {
    let status = Command::new(env!("CARGO_BIN_EXE_poisson-forest"))
        .args(args)
        .current_dir(dir)
        .status()
        .expect("binary runs");
    assert!(status.success(), "{args:?} exited with {status}");
}

#[test]
fn criterion_11_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let commands: Vec<(Vec<&str>, Vec<&str>)> = vec![
        (
            vec!["sample", "--d", "3", "--rate", "1", "--space", "6", "--time", "0:20", "--seed", "9", "-o", "{}points.txt"],
            vec!["points.txt"],
        ),
        (vec!["forest", "-i", "w1points.txt", "-o", "{}forest.txt"], vec!["forest.txt"]),
        (
            vec!["succession", "-i", "w1forest.txt", "--anchor", "5", "--back", "10", "--forward", "10", "-o", "{}line.txt"],
            vec!["line.txt"],
        ),
        (vec!["walk", "-i", "w1points.txt", "--slice", "15", "-o", "{}slice.txt"], vec!["slice.txt"]),
        (
            vec![
                "experiment", "palm-invariance", "--replicas", "60", "--space", "10", "--times", "10", "-o",
                "{}palm.csv", "--jsonl", "{}palm.jsonl",
            ],
            vec!["palm.csv", "palm.jsonl"],
        ),
        (
            vec!["experiment", "ergodicity", "--replicas", "40", "-o", "{}ergo.csv"],
            vec!["ergo.csv"],
        ),
    ];
    let mut compared = 0;
    let mut differing = Vec::new();
    for (args, outputs) in &commands {
        for run in ["w1", "w1again", "w3"] {
            let workers = if run == "w3" { "3" } else { "1" };
            let mut full: Vec<String> = args.iter().map(|a| a.replace("{}", run)).collect();
            full.extend(["--workers".to_string(), workers.to_string()]);
            let refs: Vec<&str> = full.iter().map(String::as_str).collect();
            run_cli(d, &refs);
        }
        for out in outputs {
            let reference = std::fs::read(d.join(format!("w1{out}"))).unwrap();
            for run in ["w1again", "w3"] {
                compared += 1;
                if std::fs::read(d.join(format!("{run}{out}"))).unwrap() != reference {
                    differing.push(format!("{run}{out}"));
                }
            }
        }
    }
    let ok = differing.is_empty();
    report(
        11,
        "bit-identical reruns",
        ok,
        &format!("{compared} output comparisons, differing: {}", if ok { "none".into() } else { differing.join(", ") }),
    );
    assert!(ok);
}
