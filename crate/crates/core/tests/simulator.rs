use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use nanoguard::par::Executor;
use nanoguard::sim::{
    simulate, simulate_run, sweep, EventKind, GridRange, ScenarioConfig, ScenarioGrid, SimulationRun,
};

fn scenario() -> impl Strategy<Value = ScenarioConfig> {
    (0u32..120, 0u32..400, 1u32..20, 0.3f64..1.0, any::<u64>()).prop_map(|(l, m, cluster, p, seed)| {
        ScenarioConfig {
            cluster_size: cluster,
            n_fragments: cluster,
            conj_success_p: p,
            ..ScenarioConfig::new(l, m, seed)
        }
    })
}

/// Replays the log and checks that no slot ever hosts two conjugations.
fn slots_are_exclusive(run: &SimulationRun) -> bool {
    let mut busy: BTreeMap<u32, u32> = BTreeMap::new();
    for e in &run.log {
        match e.kind {
            EventKind::ConjStart { slot } => {
                if busy.insert(slot, e.agent).is_some() {
                    return false;
                }
            }
            EventKind::ConjEnd { slot, .. } if busy.remove(&slot) != Some(e.agent) => return false,
            _ => {}
        }
    }
    true
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn event_log_invariants(cfg in scenario()) {
        let run = simulate_run(&cfg).unwrap();
        prop_assert!(slots_are_exclusive(&run));

        // conservation: every legitimate agent delivered at most once
        let mut delivered = BTreeSet::new();
        for e in &run.log {
            if let EventKind::Deliver { .. } = e.kind {
                prop_assert!(e.agent < cfg.n_legit);
                prop_assert!(delivered.insert(e.agent));
            }
        }
        prop_assert_eq!(delivered.len() as u32, run.summary.delivered_total);
        prop_assert!(run.summary.delivered_total <= cfg.n_legit);

        // the trace bins exactly the deliveries
        let trace = run.trace();
        prop_assert_eq!(trace.bins.len(), cfg.n_bins());
        prop_assert_eq!(trace.total(), run.summary.delivered_total as u64);

        // an attacker conjugates successfully at most once and never starts again afterwards
        let mut done: BTreeSet<u32> = BTreeSet::new();
        let mut successes = 0u32;
        for e in run.log.iter().filter(|e| e.agent >= cfg.n_legit) {
            match e.kind {
                EventKind::ConjStart { .. } => prop_assert!(!done.contains(&e.agent)),
                EventKind::ConjEnd { success: true, .. } => {
                    prop_assert!(done.insert(e.agent));
                    successes += 1;
                }
                _ => {}
            }
        }
        prop_assert_eq!(successes, run.summary.malicious_conjugations);

        let s = &run.summary;
        prop_assert!((0.0..=1.0).contains(&s.retrieved_fraction));
        prop_assert!(s.retrieved_fraction <= (s.delivered_total as f64 / cfg.n_fragments as f64).min(1.0) + 1e-12);
        if s.retrieval_time < cfg.sim_limit as f64 {
            prop_assert_eq!(s.retrieved_fraction, 1.0);
        }
        if s.retrieved_fraction < 1.0 {
            prop_assert_eq!(s.retrieval_time, cfg.sim_limit as f64);
        }
    }

    #[test]
    fn deterministic_in_config(cfg in scenario()) {
        prop_assert_eq!(simulate_run(&cfg).unwrap(), simulate_run(&cfg).unwrap());
    }
}

#[test]
fn ten_retrievers_bound_the_fraction() {
    for seed in 0..10 {
        let run = simulate_run(&ScenarioConfig::new(10, 300, seed)).unwrap();
        // brute force over the log: distinct delivered fragments
        let fragments: BTreeSet<u32> = run
            .log
            .iter()
            .filter_map(|e| match e.kind {
                EventKind::Deliver { fragment } => Some(fragment),
                _ => None,
            })
            .collect();
        assert!(run.summary.retrieved_fraction <= 10.0 / 50.0);
        assert_eq!(run.summary.retrieved_fraction, fragments.len() as f64 / 50.0);
    }
}

#[test]
fn no_agents_means_nothing_retrieved() {
    let (trace, summary) = simulate(&ScenarioConfig::new(0, 0, 1)).unwrap();
    assert!(trace.bins.iter().all(|&b| b == 0));
    assert_eq!(summary.retrieved_fraction, 0.0);
    assert_eq!(summary.retrieval_time, 7200.0);
}

#[test]
fn sweep_is_sorted_and_executor_independent() {
    let grid = ScenarioGrid::new(GridRange::new(50, 150, 50).unwrap(), GridRange::new(0, 400, 200).unwrap());
    let seeds = [3, 1, 2];
    let seq = sweep(&grid, &seeds, &Executor::sequential()).unwrap();
    let par = sweep(&grid, &seeds, &Executor::new(4)).unwrap();
    assert_eq!(seq, par);
    assert_eq!(seq.len(), 3 * 3 * 3);
    let keys: Vec<_> = seq
        .iter()
        .map(|r| (r.config.n_legit, r.config.n_malicious, r.config.rng_seed))
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

#[test]
fn attackers_slow_retrieval() {
    let mean_time = |m: u32| {
        (0..8)
            .map(|s| simulate(&ScenarioConfig::new(150, m, s)).unwrap().1.retrieval_time)
            .sum::<f64>()
            / 8.0
    };
    let t0 = mean_time(0);
    let t1 = mean_time(800);
    let t2 = mean_time(1900);
    assert!(t0 < t1 && t1 < t2, "{t0} {t1} {t2}");
}
