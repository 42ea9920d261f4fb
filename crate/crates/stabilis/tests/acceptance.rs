//! Acceptance suite. Every criterion prints one `PASS`/`FAIL` line.

use std::io::Write;
use std::process::Command;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use stabilis_core::algorithm::{apply_step, is_legitimate, is_terminal};
use stabilis_core::checker::{check_network, explore, worst_case_steps, CheckOutcome, Limits};
use stabilis_core::potentials::{bottom_of, d_le, k_star, ns_set, step_smooth, top_of};
use stabilis_core::topology::{enumerate_networks, generate, Shape};
use stabilis_core::{Configuration, Edge, EdgeSet, Network, NodeId, StepGraph};

/// Written to the raw stderr handle so the line survives libtest's output
/// capture.
fn report(id: u32, ok: bool, what: &str) {
    let line = format!("{} criterion {id}: {what}\n", if ok { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
}

struct Sweep {
    nets: Vec<Network>,
    results: Vec<Result<(StepGraph, CheckOutcome), String>>,
}

/// Every network with at most four nodes, every initial configuration with
/// `d ≤ 4`, explored once and shared by criteria 1, 2 and 4.
fn sweep() -> &'static Sweep {
    static SWEEP: OnceLock<Sweep> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let nets = enumerate_networks(4);
        let results = nets
            .par_iter()
            .map(|net| check_network(net, 4, Limits::for_instance(net, 4)).map_err(|e| e.to_string()))
            .collect();
        Sweep { nets, results }
    })
}

#[test]
fn criterion_1_exhaustive_convergence() {
    let s = sweep();
    let mut states = 0;
    let mut failures = Vec::new();
    for (net, r) in s.nets.iter().zip(&s.results) {
        match r {
            Ok((_, o)) if o.convergence.acyclic && o.convergence.all_sinks_legitimate => states += o.states,
            Ok((_, o)) => failures.push(format!("{:?}: {:?}", net.edges(), o.convergence)),
            Err(e) => failures.push(format!("{:?}: {e}", net.edges())),
        }
    }
    let ok = s.nets.len() == 44 && failures.is_empty();
    report(1, ok, &format!("{} networks, {states} states, acyclic, all sinks legitimate, no limit breach", s.nets.len()));
    assert!(ok, "{failures:?}");
}

#[test]
fn criterion_2_monitors_clean() {
    let s = sweep();
    let mut steps = 0;
    let mut violations = 0;
    let mut first = None;
    for r in &s.results {
        let (_, o) = r.as_ref().expect("exploration succeeded");
        steps += o.monitors.steps;
        violations += o.monitors.total_violations();
        if first.is_none() {
            first = o.monitors.iter().find(|(_, t)| t.violations > 0).map(|(c, _)| c.name());
        }
        for (c, t) in o.monitors.iter() {
            assert!(t.violations == 0, "{} violated", c.name());
        }
    }
    report(2, violations == 0, &format!("{steps} steps monitored, {violations} violations"));
    assert_eq!(violations, 0, "first violated check: {first:?}");
}

#[test]
fn criterion_3_bounds_properties_fuzzed() {
    const CASES: usize = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let shapes = [Shape::Path, Shape::Cycle, Shape::Star, Shape::Complete];
    let mut violations = 0;
    for i in 0..CASES {
        let n = rng.gen_range(1..=8);
        let shape = if i % 2 == 0 { Shape::Random { seed: rng.gen() } } else { shapes[rng.gen_range(0..4)] };
        let net = generate(shape, n).unwrap();
        let g1 = Configuration::random(&net, 10, &mut rng);
        let g2 = g1.with_d_values(g1.d_values().map(|d| (d + rng.gen_range(0..=3)).min(10)));
        let (b1, t1) = (bottom_of(&g1), top_of(&net, &g1));
        let (b2, t2) = (bottom_of(&g2), top_of(&net, &g2));
        let checks = [
            d_le(&b1, &g1) && d_le(&g1, &t1),
            bottom_of(&b1) == b1 && top_of(&net, &t1) == t1,
            d_le(&g1, &g2) && d_le(&b1, &b2) && d_le(&t1, &t2),
        ];
        violations += checks.iter().filter(|ok| !**ok).count();
    }
    report(3, violations == 0, &format!("{CASES} fuzzed configurations, sandwich/idempotence/monotonicity, {violations} violations"));
    assert_eq!(violations, 0);
}

#[test]
fn criterion_4_oracle_equivalence() {
    let net = generate(Shape::Path, 2).unwrap();
    let start = Configuration::with_first_parents(&net, &[2, 2]).unwrap();
    let g = explore(&net, [start], Limits::for_instance(&net, 2)).unwrap();
    let worst = worst_case_steps(&g).unwrap();

    // Longest path by hand: (2,2) → (2,3) → (0,3) → (0,1).
    let by_hand = [[2, 2], [2, 3], [0, 3], [0, 1]];
    let index = |d: [u64; 2]| g.vertices().iter().position(|c| c.d_values().eq(d)).unwrap() as u32;
    let path_in_graph = by_hand
        .windows(2)
        .all(|w| g.out_edges(index(w[0])).iter().any(|e| e.target == index(w[1])));

    let s = sweep();
    let mut checked = 0;
    let mut mismatches = 0;
    for (net, r) in s.nets.iter().zip(&s.results) {
        let (g, _) = r.as_ref().expect("exploration succeeded");
        for c in g.vertices() {
            checked += 1;
            mismatches += usize::from(is_terminal(net, c) != is_legitimate(net, c));
        }
    }
    let ok = worst == 3 && path_in_graph && mismatches == 0;
    report(4, ok, &format!("P2 (2,2) worst case {worst} (by hand 3); terminal<=>legitimate on {checked} configurations, {mismatches} mismatches"));
    assert!(ok);
}

#[test]
fn criterion_5_reference_values() {
    let e = |a, b| Edge::new(NodeId(a), NodeId(b));
    // Root 0 and p1..p7 as nodes 1..7.
    let net = Network::from_edges(8, NodeId(0), &[(0, 1), (1, 2), (2, 3), (2, 6), (3, 4), (3, 7), (4, 5), (5, 6)]).unwrap();
    let g1 = Configuration::with_first_parents(&net, &[10, 9, 9, 8, 10, 9, 8, 10]).unwrap();
    let g2 = apply_step(&net, &g1, &[NodeId(1), NodeId(6)]).unwrap();
    let g3 = apply_step(&net, &g2, &[NodeId(3), NodeId(4)]).unwrap();
    let fixture = g1.d(NodeId(0)) == 10
        && g1.d(NodeId(1)) == 9
        && g2.d(NodeId(1)) == 10
        && step_smooth(&net, &g1, &g2) == Ok(true)
        && step_smooth(&net, &g2, &g3) == Ok(false)
        && k_star(&net, &g2, &g3) == Ok((8, e(3, 4)))
        && ns_set(&net, &g2, 8) == EdgeSet::from_edges(vec![e(3, 7), e(3, 4)])
        && ns_set(&net, &g3, 8).is_empty()
        && (0..8).all(|k| ns_set(&net, &g2, k).is_empty() && ns_set(&net, &g3, k).is_empty());

    let p3 = generate(Shape::Path, 3).unwrap();
    let c = |d: [u64; 3]| Configuration::with_first_parents(&p3, &d).unwrap();
    let small = k_star(&p3, &c([0, 5, 1]), &c([0, 5, 6])) == Ok((1, e(1, 2)))
        && k_star(&p3, &c([0, 5, 1]), &c([0, 1, 1])) == Ok((0, e(0, 1)));

    let ok = fixture && small;
    report(5, ok, "constructed eight-node fixture gives k*=8, NS_8={(p3,p4),(p3,p7)} then empty; small k* examples agree");
    assert!(ok);
}

fn run_bin(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_stabilis")).args(args).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

#[test]
fn criterion_6_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let mut same = true;
    for round in ["a", "b"] {
        let check = [
            "check", "--all-graphs", "3", "--dmax", "2", "--out", &path(&format!("check-{round}.json")),
            "--jobs", if round == "a" { "1" } else { "4" },
        ];
        let sims = [
            ["simulate", "--gen", "random:7:11", "--init", "random:5", "--strategy", "random_subset:0.4", "--seed", "9"],
            ["simulate", "--gen", "cycle:5", "--init", "random:3", "--strategy", "central_random", "--seed", "4"],
        ];
        let stdout = run_bin(&check);
        std::fs::write(path(&format!("check-stdout-{round}")), stdout).unwrap();
        for (i, sim) in sims.iter().enumerate() {
            let out = path(&format!("sim{i}-{round}.json"));
            let mut args = sim.to_vec();
            args.extend(["--out", &out]);
            let stdout = run_bin(&args);
            std::fs::write(path(&format!("sim{i}-stdout-{round}")), stdout).unwrap();
        }
    }
    for name in ["check-{}.json", "check-stdout-{}", "sim0-{}.json", "sim0-stdout-{}", "sim1-{}.json", "sim1-stdout-{}"] {
        let a = std::fs::read(path(&name.replace("{}", "a"))).unwrap();
        let b = std::fs::read(path(&name.replace("{}", "b"))).unwrap();
        same &= !a.is_empty() && a == b;
    }
    report(6, same, "repeated check and simulate runs produce byte-identical files and output");
    assert!(same);
}

#[test]
fn criterion_7_complexity_signal() {
    let net = generate(Shape::Path, 4).unwrap();
    let series: Vec<u64> = (0..=8)
        .map(|d_max| {
            let (_, o) = check_network(&net, d_max, Limits::for_instance(&net, d_max)).unwrap();
            o.worst_case_steps.unwrap()
        })
        .collect();
    let increments: Vec<i64> = series.windows(2).map(|w| w[1] as i64 - w[0] as i64).collect();
    // Super-linear growth means the increments eventually keep growing.
    let tail = &increments[1..];
    let super_linear = tail.windows(2).all(|w| w[1] >= w[0]) && tail.last() > tail.first();
    report(
        7,
        super_linear,
        &format!("P4 worst_case_steps for d_max=0..8: {series:?}, increments {increments:?}"),
    );
    assert!(series.windows(2).all(|w| w[0] <= w[1]));
    assert!(super_linear, "growth in d_max is not super-linear: {series:?}");
}
