//! Discrete-event model of the archive read path.
//!
//! Legitimate retrievers and attacker bacteria swim to a cluster of
//! motility-restricted data bacteria, contend for conjugation slots and, for
//! legitimate bacteria, carry the acquired fragment to the target. The spatial
//! system is reduced to three stochastic stages: travel, contended service and
//! a second travel leg.

mod sweep;

pub use sweep::{sweep, GridRange, ScenarioGrid, SweepResult};

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Travel-time mean in seconds, fixed by calibration so that 150 retrievers
/// average about 40 min with no attackers and about 95 min against 1900
/// attackers over seeds 0..20. Rerun with `cargo run --release --example calibrate`.
pub const DEFAULT_TRAVEL_MEAN: f64 = 1037.6;
/// 15% of the travel mean.
pub const DEFAULT_TRAVEL_SD: f64 = 155.64;
/// Conjugation duration mean in seconds, fixed by the same calibration.
pub const DEFAULT_CONJ_MEAN: f64 = 123.2;
/// 20% of the conjugation mean.
pub const DEFAULT_CONJ_SD: f64 = 24.64;

/// Lower truncation point for sampled durations.
const MIN_DURATION: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid scenario config: {0}")]
    InvalidConfig(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

/// One simulated experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_legit: u32,
    pub n_malicious: u32,
    pub cluster_size: u32,
    pub n_fragments: u32,
    /// Virtual seconds.
    pub sim_limit: u32,
    /// Seconds per trace bin.
    pub sampling_period: u32,
    pub travel_mean: f64,
    pub travel_sd: f64,
    pub conj_duration_mean: f64,
    pub conj_duration_sd: f64,
    pub conj_success_p: f64,
    pub rng_seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_legit: 0,
            n_malicious: 0,
            cluster_size: 50,
            n_fragments: 50,
            sim_limit: 7200,
            sampling_period: 10,
            travel_mean: DEFAULT_TRAVEL_MEAN,
            travel_sd: DEFAULT_TRAVEL_SD,
            conj_duration_mean: DEFAULT_CONJ_MEAN,
            conj_duration_sd: DEFAULT_CONJ_SD,
            conj_success_p: 1.0,
            rng_seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn new(n_legit: u32, n_malicious: u32, rng_seed: u64) -> Self {
        Self {
            n_legit,
            n_malicious,
            rng_seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let fail = |msg: &str| Err(SimError::InvalidConfig(msg.to_string()));
        if self.cluster_size < 1 {
            return fail("cluster_size must be >= 1");
        }
        if self.n_fragments < 1 {
            return fail("n_fragments must be >= 1");
        }
        if self.n_fragments > self.cluster_size {
            return fail("n_fragments must be <= cluster_size");
        }
        if self.sim_limit == 0 {
            return fail("sim_limit must be > 0");
        }
        if self.sampling_period == 0 {
            return fail("sampling_period must be > 0");
        }
        if !self.sim_limit.is_multiple_of(self.sampling_period) {
            return fail("sim_limit must be divisible by sampling_period");
        }
        if !(self.conj_success_p > 0.0 && self.conj_success_p <= 1.0) {
            return fail("conj_success_p must lie in (0, 1]");
        }
        if !(self.travel_mean > 0.0 && self.travel_mean.is_finite()) {
            return fail("travel_mean must be > 0");
        }
        if !(self.conj_duration_mean > 0.0 && self.conj_duration_mean.is_finite()) {
            return fail("conj_duration_mean must be > 0");
        }
        if !(self.travel_sd >= 0.0 && self.travel_sd.is_finite()) {
            return fail("travel_sd must be >= 0");
        }
        if !(self.conj_duration_sd >= 0.0 && self.conj_duration_sd.is_finite()) {
            return fail("conj_duration_sd must be >= 0");
        }
        Ok(())
    }

    pub fn n_bins(&self) -> usize {
        (self.sim_limit / self.sampling_period) as usize
    }
}

/// Per-bin counts of legitimate deliveries at the target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrivalTrace {
    pub bins: Vec<u32>,
    pub sampling_period: u32,
    pub n_legit: u32,
}

impl ArrivalTrace {
    pub fn new(bins: Vec<u32>, sampling_period: u32, n_legit: u32) -> Self {
        Self {
            bins,
            sampling_period,
            n_legit,
        }
    }

    /// Bins sorted delivery times (seconds) into `sim_limit / period` bins.
    /// Times at or past `sim_limit` are dropped.
    pub fn from_deliveries(times: &[f64], period: u32, sim_limit: u32, n_legit: u32) -> Self {
        let n_bins = (sim_limit / period) as usize;
        let mut bins = vec![0u32; n_bins];
        for &t in times {
            if t < 0.0 || t >= sim_limit as f64 {
                continue;
            }
            let idx = ((t / period as f64).floor() as usize).min(n_bins - 1);
            bins[idx] += 1;
        }
        Self::new(bins, period, n_legit)
    }

    pub fn total(&self) -> u64 {
        self.bins.iter().map(|&b| b as u64).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub retrieved_fraction: f64,
    /// Seconds until every fragment was delivered, or `sim_limit`.
    pub retrieval_time: f64,
    pub delivered_total: u32,
    pub malicious_conjugations: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AgentKind {
    Legit,
    Malicious,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EventKind {
    /// Agent reached the cluster (first approach or retry).
    Arrive,
    ConjStart { slot: u32 },
    ConjEnd { slot: u32, success: bool },
    /// Legitimate agent delivered `fragment` to the target.
    Deliver { fragment: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoggedEvent {
    pub time: f64,
    pub agent: u32,
    pub kind: EventKind,
}

/// Full output of one run: the summary, raw delivery times and the event log.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRun {
    pub config: ScenarioConfig,
    pub summary: SimulationSummary,
    /// Delivery times in event order (non-decreasing).
    pub delivery_times: Vec<f64>,
    pub log: Vec<LoggedEvent>,
}

impl SimulationRun {
    pub fn trace(&self) -> ArrivalTrace {
        self.trace_with_period(self.config.sampling_period)
    }

    /// Re-bins the same run at another sampling period.
    pub fn trace_with_period(&self, period: u32) -> ArrivalTrace {
        ArrivalTrace::from_deliveries(
            &self.delivery_times,
            period,
            self.config.sim_limit,
            self.config.n_legit,
        )
    }
}

pub fn simulate(config: &ScenarioConfig) -> Result<(ArrivalTrace, SimulationSummary), SimError> {
    let run = simulate_run(config)?;
    Ok((run.trace(), run.summary))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Pending {
    Arrive,
    ConjEnd { slot: u32 },
    Deliver { fragment: u32 },
}

#[derive(Debug, Clone, Copy)]
struct Scheduled {
    time: f64,
    agent: u32,
    what: Pending,
}

// Min-heap order on (time, agent).
impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.agent.cmp(&self.agent))
    }
}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scheduled {}

struct Durations {
    travel: Option<Normal<f64>>,
    travel_mean: f64,
    conj: Option<Normal<f64>>,
    conj_mean: f64,
}

impl Durations {
    fn new(config: &ScenarioConfig) -> Self {
        let normal = |mean: f64, sd: f64| (sd > 0.0).then(|| Normal::new(mean, sd).expect("sd > 0"));
        Self {
            travel: normal(config.travel_mean, config.travel_sd),
            travel_mean: config.travel_mean,
            conj: normal(config.conj_duration_mean, config.conj_duration_sd),
            conj_mean: config.conj_duration_mean,
        }
    }

    fn travel(&self, rng: &mut ChaCha8Rng) -> f64 {
        truncated(self.travel.as_ref(), self.travel_mean, rng)
    }

    fn conjugation(&self, rng: &mut ChaCha8Rng) -> f64 {
        truncated(self.conj.as_ref(), self.conj_mean, rng)
    }
}

/// Normal draw truncated below at `MIN_DURATION` by rejection.
fn truncated(dist: Option<&Normal<f64>>, mean: f64, rng: &mut ChaCha8Rng) -> f64 {
    let Some(dist) = dist else {
        return mean.max(MIN_DURATION);
    };
    for _ in 0..64 {
        let x = dist.sample(rng);
        if x >= MIN_DURATION {
            return x;
        }
    }
    MIN_DURATION
}

struct Agent {
    kind: AgentKind,
    /// Addressed fragment for legitimate agents.
    fragment: u32,
}

/// Runs one scenario to `sim_limit` or until every fragment has been delivered.
///
/// Agents `0..n_legit` are legitimate, the rest are attackers. Legitimate
/// agents are addressed to fragment `index % n_fragments` and wait for a free
/// cluster bacterium holding it; attackers take any free cluster bacterium.
/// Waiting agents are served first-come-first-served.
pub fn simulate_run(config: &ScenarioConfig) -> Result<SimulationRun, SimError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let durations = Durations::new(config);
    let limit = config.sim_limit as f64;
    let n_fragments = config.n_fragments;

    let agents: Vec<Agent> = (0..config.n_legit)
        .map(|i| Agent {
            kind: AgentKind::Legit,
            fragment: i % n_fragments,
        })
        .chain((0..config.n_malicious).map(|_| Agent {
            kind: AgentKind::Malicious,
            fragment: 0,
        }))
        .collect();

    // Cluster bacterium `s` holds fragment `s % n_fragments`.
    let slot_fragment = |slot: u32| slot % n_fragments;
    let mut slot_busy = vec![false; config.cluster_size as usize];

    let mut queue = BinaryHeap::with_capacity(agents.len());
    for (idx, _) in agents.iter().enumerate() {
        let t = durations.travel(&mut rng);
        queue.push(Scheduled {
            time: t,
            agent: idx as u32,
            what: Pending::Arrive,
        });
    }

    let mut waiting: VecDeque<u32> = VecDeque::new();
    let mut log = Vec::with_capacity(agents.len() * 4);
    let mut delivery_times = Vec::with_capacity(config.n_legit as usize);
    let mut fragment_seen = vec![false; n_fragments as usize];
    let mut distinct = 0u32;
    let mut retrieval_time = limit;
    let mut malicious_conjugations = 0u32;
    let mut free_scratch: Vec<u32> = Vec::with_capacity(config.cluster_size as usize);

    while let Some(ev) = queue.pop() {
        if ev.time >= limit {
            break;
        }
        match ev.what {
            Pending::Arrive => {
                log.push(LoggedEvent {
                    time: ev.time,
                    agent: ev.agent,
                    kind: EventKind::Arrive,
                });
                let agent = &agents[ev.agent as usize];
                free_scratch.clear();
                free_scratch.extend(
                    (0..config.cluster_size)
                        .filter(|&s| !slot_busy[s as usize])
                        .filter(|&s| {
                            agent.kind == AgentKind::Malicious || slot_fragment(s) == agent.fragment
                        }),
                );
                if free_scratch.is_empty() {
                    waiting.push_back(ev.agent);
                } else {
                    let slot = if free_scratch.len() == 1 {
                        free_scratch[0]
                    } else {
                        free_scratch[rng.random_range(0..free_scratch.len())]
                    };
                    start_conjugation(
                        slot,
                        ev.agent,
                        ev.time,
                        &mut slot_busy,
                        &durations,
                        &mut rng,
                        &mut queue,
                        &mut log,
                    );
                }
            }
            Pending::ConjEnd { slot } => {
                let success = config.conj_success_p >= 1.0 || rng.random::<f64>() < config.conj_success_p;
                log.push(LoggedEvent {
                    time: ev.time,
                    agent: ev.agent,
                    kind: EventKind::ConjEnd { slot, success },
                });
                slot_busy[slot as usize] = false;
                let agent = &agents[ev.agent as usize];
                match (agent.kind, success) {
                    (AgentKind::Legit, true) => {
                        let t = ev.time + durations.travel(&mut rng);
                        queue.push(Scheduled {
                            time: t,
                            agent: ev.agent,
                            what: Pending::Deliver {
                                fragment: slot_fragment(slot),
                            },
                        });
                    }
                    (AgentKind::Malicious, true) => malicious_conjugations += 1,
                    (_, false) => {
                        let t = ev.time + durations.travel(&mut rng);
                        queue.push(Scheduled {
                            time: t,
                            agent: ev.agent,
                            what: Pending::Arrive,
                        });
                    }
                }
                // Hand the freed slot to the earliest compatible waiter.
                let fragment = slot_fragment(slot);
                if let Some(pos) = waiting.iter().position(|&a| {
                    let w = &agents[a as usize];
                    w.kind == AgentKind::Malicious || w.fragment == fragment
                }) {
                    let next = waiting.remove(pos).expect("position is in range");
                    start_conjugation(
                        slot,
                        next,
                        ev.time,
                        &mut slot_busy,
                        &durations,
                        &mut rng,
                        &mut queue,
                        &mut log,
                    );
                }
            }
            Pending::Deliver { fragment } => {
                log.push(LoggedEvent {
                    time: ev.time,
                    agent: ev.agent,
                    kind: EventKind::Deliver { fragment },
                });
                delivery_times.push(ev.time);
                if !fragment_seen[fragment as usize] {
                    fragment_seen[fragment as usize] = true;
                    distinct += 1;
                    if distinct == n_fragments {
                        retrieval_time = ev.time;
                        break;
                    }
                }
            }
        }
    }

    let summary = SimulationSummary {
        retrieved_fraction: distinct as f64 / n_fragments as f64,
        retrieval_time,
        delivered_total: delivery_times.len() as u32,
        malicious_conjugations,
    };
    Ok(SimulationRun {
        config: config.clone(),
        summary,
        delivery_times,
        log,
    })
}

#[allow(clippy::too_many_arguments)]
fn start_conjugation(
    slot: u32,
    agent: u32,
    now: f64,
    slot_busy: &mut [bool],
    durations: &Durations,
    rng: &mut ChaCha8Rng,
    queue: &mut BinaryHeap<Scheduled>,
    log: &mut Vec<LoggedEvent>,
) {
    debug_assert!(!slot_busy[slot as usize]);
    slot_busy[slot as usize] = true;
    log.push(LoggedEvent {
        time: now,
        agent,
        kind: EventKind::ConjStart { slot },
    });
    queue.push(Scheduled {
        time: now + durations.conjugation(rng),
        agent,
        what: Pending::ConjEnd { slot },
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn small(n_legit: u32, n_malicious: u32, seed: u64) -> ScenarioConfig {
        ScenarioConfig::new(n_legit, n_malicious, seed)
    }

    #[test]
    fn empty_scenario_has_no_arrivals() {
        let (trace, summary) = simulate(&small(0, 0, 1)).unwrap();
        assert_eq!(trace.bins.len(), 720);
        assert!(trace.bins.iter().all(|&b| b == 0));
        assert_eq!(summary.retrieved_fraction, 0.0);
        assert_eq!(summary.retrieval_time, 7200.0);
        assert_eq!(summary.delivered_total, 0);
    }

    #[test]
    fn validation_names_the_invariant() {
        let mut cfg = small(10, 0, 0);
        cfg.sampling_period = 7;
        let err = simulate(&cfg).unwrap_err();
        assert!(err.to_string().contains("divisible"), "{err}");

        let mut cfg = small(10, 0, 0);
        cfg.n_fragments = 51;
        assert!(simulate(&cfg).unwrap_err().to_string().contains("n_fragments"));

        let mut cfg = small(10, 0, 0);
        cfg.conj_success_p = 0.0;
        assert!(simulate(&cfg).unwrap_err().to_string().contains("conj_success_p"));

        let mut cfg = small(10, 0, 0);
        cfg.cluster_size = 0;
        assert!(simulate(&cfg).unwrap_err().to_string().contains("cluster_size"));
    }

    #[test]
    fn same_seed_same_output() {
        let cfg = small(60, 300, 42);
        let a = simulate_run(&cfg).unwrap();
        let b = simulate_run(&cfg).unwrap();
        assert_eq!(a, b);
        let c = simulate_run(&small(60, 300, 43)).unwrap();
        assert_ne!(a.delivery_times, c.delivery_times);
    }

    #[test]
    fn ten_retrievers_cannot_fetch_more_than_ten_fragments() {
        for seed in 0..10 {
            let run = simulate_run(&small(10, 100, seed)).unwrap();
            assert!(run.summary.retrieved_fraction <= 10.0 / 50.0);
            // brute force over the log: distinct delivered fragments
            let mut frags: Vec<u32> = run
                .log
                .iter()
                .filter_map(|e| match e.kind {
                    EventKind::Deliver { fragment } => Some(fragment),
                    _ => None,
                })
                .collect();
            frags.sort_unstable();
            frags.dedup();
            assert_eq!(frags.len() as f64 / 50.0, run.summary.retrieved_fraction);
            assert!(frags.len() <= 10);
        }
    }

    #[test]
    fn slots_host_one_conjugation_at_a_time() {
        let mut cfg = small(150, 900, 5);
        cfg.conj_success_p = 0.7;
        let run = simulate_run(&cfg).unwrap();
        let mut occupant: HashMap<u32, u32> = HashMap::new();
        for e in &run.log {
            match e.kind {
                EventKind::ConjStart { slot } => {
                    assert!(occupant.insert(slot, e.agent).is_none(), "slot {slot} double-booked");
                }
                EventKind::ConjEnd { slot, .. } => {
                    assert_eq!(occupant.remove(&slot), Some(e.agent));
                }
                _ => {}
            }
        }
    }

    #[test]
    fn legit_agents_are_conserved() {
        let mut cfg = small(120, 500, 9);
        cfg.conj_success_p = 0.6;
        let run = simulate_run(&cfg).unwrap();
        let mut delivered = vec![false; cfg.n_legit as usize];
        for e in &run.log {
            if let EventKind::Deliver { .. } = e.kind {
                assert!(!delivered[e.agent as usize], "agent delivered twice");
                delivered[e.agent as usize] = true;
            }
        }
        let n_delivered = delivered.iter().filter(|&&d| d).count() as u32;
        let in_flight_or_failed = cfg.n_legit - n_delivered;
        assert_eq!(run.summary.delivered_total + in_flight_or_failed, cfg.n_legit);
        assert_eq!(run.summary.delivered_total, n_delivered);
    }

    #[test]
    fn malicious_agents_conjugate_at_most_once() {
        let run = simulate_run(&small(50, 400, 3)).unwrap();
        let mut counts: HashMap<u32, u32> = HashMap::new();
        for e in &run.log {
            if let EventKind::ConjEnd { success: true, .. } = e.kind {
                if e.agent >= 50 {
                    *counts.entry(e.agent).or_default() += 1;
                }
            }
        }
        assert!(counts.values().all(|&c| c == 1));
        assert_eq!(counts.len() as u32, run.summary.malicious_conjugations);
    }

    #[test]
    fn summary_invariants_hold() {
        for (l, m) in [(10, 0), (50, 0), (150, 0), (150, 1900), (30, 1000)] {
            let run = simulate_run(&small(l, m, 11)).unwrap();
            let s = &run.summary;
            assert!((0.0..=1.0).contains(&s.retrieved_fraction));
            if s.retrieval_time < 7200.0 {
                assert_eq!(s.retrieved_fraction, 1.0);
            }
            if s.retrieved_fraction < 1.0 {
                assert_eq!(s.retrieval_time, 7200.0);
            }
            let bound = (s.delivered_total as f64 / 50.0).min(1.0);
            assert!(s.retrieved_fraction <= bound + 1e-12);
            let trace = run.trace();
            assert!(trace.total() <= l as u64);
            assert_eq!(trace.total(), s.delivered_total as u64);
        }
    }

    #[test]
    fn rebinning_preserves_total() {
        let run = simulate_run(&small(150, 600, 2)).unwrap();
        let total = run.trace().total();
        for p in [10, 20, 30, 60, 120, 240] {
            let t = run.trace_with_period(p);
            assert_eq!(t.bins.len(), 7200 / p as usize);
            assert_eq!(t.total(), total);
        }
    }

    #[test]
    fn deterministic_tie_break_with_zero_variance() {
        let mut cfg = small(4, 4, 0);
        cfg.travel_sd = 0.0;
        cfg.conj_duration_sd = 0.0;
        cfg.cluster_size = 2;
        cfg.n_fragments = 2;
        let run = simulate_run(&cfg).unwrap();
        let arrivals: Vec<u32> = run
            .log
            .iter()
            .filter(|e| matches!(e.kind, EventKind::Arrive))
            .map(|e| e.agent)
            .take(8)
            .collect();
        assert_eq!(arrivals, (0..8).collect::<Vec<_>>());
    }
}
