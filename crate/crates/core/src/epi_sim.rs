//! Event-driven simulation of the finite-population epidemic with tracing.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{DelayCoupling, ModelParams};
use crate::rng::{replicate_rng, with_thread_cap};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Susceptible,
    Latent,
    Infective,
    Removed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EventKind {
    LatencyEnd,
    NaturalRemoval,
    TraceArrival,
    Contact,
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    seq: u64,
    kind: EventKind,
    who: u32,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // Reversed so the max-heap pops the earliest event, ties by insertion order.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

const NONE: u32 = u32::MAX;

/// Counters collected over one run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStats {
    pub final_size: u64,
    pub natural_removals: u64,
    pub traced_removals: u64,
    /// Trace arrivals that found the target already removed.
    pub stale_traces: u64,
    pub infections: u64,
}

struct Epidemic<'a, R: Rng> {
    params: &'a ModelParams,
    rng: &'a mut R,
    status: Vec<Status>,
    // Infectees of each individual as an intrusive singly linked list.
    first_child: Vec<u32>,
    next_sibling: Vec<u32>,
    queue: BinaryHeap<Event>,
    seq: u64,
    counts: [u64; 4],
    contact_rate: f64,
    stats: RunStats,
}

impl<'a, R: Rng> Epidemic<'a, R> {
    fn new(params: &'a ModelParams, rng: &'a mut R) -> Self {
        let total = (params.population + params.initial_infectives) as usize;
        let others = (total - 1) as f64;
        Epidemic {
            params,
            rng,
            status: vec![Status::Susceptible; total],
            first_child: vec![NONE; total],
            next_sibling: vec![NONE; total],
            queue: BinaryHeap::new(),
            seq: 0,
            counts: [total as u64, 0, 0, 0],
            contact_rate: params.contact_rate * others / params.population as f64,
            stats: RunStats::default(),
        }
    }

    fn push(&mut self, time: f64, kind: EventKind, who: u32) {
        self.seq += 1;
        self.queue.push(Event {
            time,
            seq: self.seq,
            kind,
            who,
        });
    }

    fn set_status(&mut self, who: u32, to: Status) {
        let from = self.status[who as usize];
        self.counts[from as usize] -= 1;
        self.counts[to as usize] += 1;
        self.status[who as usize] = to;
        debug_assert_eq!(self.counts.iter().sum::<u64>() as usize, self.status.len());
    }

    fn schedule_contact(&mut self, now: f64, who: u32) {
        if self.contact_rate > 0.0 {
            let gap: f64 = Exp1.sample(self.rng);
            self.push(now + gap / self.contact_rate, EventKind::Contact, who);
        }
    }

    fn become_infective(&mut self, now: f64, who: u32) {
        self.set_status(who, Status::Infective);
        let period = self.params.infectious.sample(self.rng);
        self.push(now + period, EventKind::NaturalRemoval, who);
        self.schedule_contact(now, who);
    }

    fn remove(&mut self, now: f64, who: u32, traced: bool) {
        self.set_status(who, Status::Removed);
        let interview = if traced {
            self.stats.traced_removals += 1;
            self.params.interview_traced
        } else {
            self.stats.natural_removals += 1;
            self.params.interview_natural
        };
        if self.rng.random::<f64>() >= interview {
            return;
        }
        let mut shared = None;
        let mut child = self.first_child[who as usize];
        while child != NONE {
            if self.rng.random::<f64>() < self.params.naming_prob && self.status[child as usize] != Status::Removed {
                let delay = match (self.params.delay_coupling, shared) {
                    (DelayCoupling::Mutual, Some(d)) => d,
                    (DelayCoupling::Mutual, None) => {
                        let d = self.params.delay.sample(self.rng);
                        shared = Some(d);
                        d
                    }
                    (DelayCoupling::Independent, _) => self.params.delay.sample(self.rng),
                };
                self.push(now + delay, EventKind::TraceArrival, child);
            }
            child = self.next_sibling[child as usize];
        }
    }

    fn contact(&mut self, now: f64, who: u32) {
        let total = self.status.len() as u32;
        // Uniform over everyone except the contactor.
        let mut target = self.rng.random_range(0..total - 1);
        if target >= who {
            target += 1;
        }
        if self.status[target as usize] == Status::Susceptible {
            self.stats.infections += 1;
            self.set_status(target, Status::Latent);
            self.next_sibling[target as usize] = self.first_child[who as usize];
            self.first_child[who as usize] = target;
            let latent = self.params.latent.sample(self.rng);
            self.push(now + latent, EventKind::LatencyEnd, target);
        }
        self.schedule_contact(now, who);
    }

    fn run(mut self) -> RunStats {
        let m = self.params.initial_infectives as u32;
        let n = self.params.population as u32;
        for who in n..n + m {
            self.become_infective(0.0, who);
        }
        while self.counts[Status::Latent as usize] + self.counts[Status::Infective as usize] > 0 {
            let Some(ev) = self.queue.pop() else {
                break;
            };
            let state = self.status[ev.who as usize];
            match ev.kind {
                EventKind::LatencyEnd if state == Status::Latent => self.become_infective(ev.time, ev.who),
                EventKind::NaturalRemoval if state == Status::Infective => self.remove(ev.time, ev.who, false),
                EventKind::Contact if state == Status::Infective => self.contact(ev.time, ev.who),
                EventKind::TraceArrival => match state {
                    Status::Latent | Status::Infective => self.remove(ev.time, ev.who, true),
                    Status::Removed => self.stats.stale_traces += 1,
                    Status::Susceptible => unreachable!("only infectees are named"),
                },
                _ => {}
            }
        }
        self.stats.final_size = self.counts[Status::Removed as usize];
        self.stats
    }
}

/// One epidemic to absorption; returns the run counters.
pub fn run_epidemic_stats<R: Rng>(params: &ModelParams, rng: &mut R) -> RunStats {
    Epidemic::new(params, rng).run()
}

/// Total number removed (including the initial infectives) at absorption.
pub fn run_epidemic<R: Rng>(params: &ModelParams, rng: &mut R) -> u64 {
    run_epidemic_stats(params, rng).final_size
}

/// Frequencies of final sizes over replicate runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalSizeHistogram {
    /// `counts[k]` is the number of runs with final size `k`.
    pub counts: Vec<u64>,
    pub n: u64,
    pub population: u64,
    pub initial_infectives: u64,
}

/// Minor-outbreak proportion with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinorOutbreakEstimate {
    pub cutoff: u64,
    pub p_minor: f64,
    pub se: f64,
    pub n: u64,
}

impl FinalSizeHistogram {
    pub fn from_sizes(sizes: &[u64], population: u64, initial_infectives: u64) -> Self {
        let mut counts = vec![0u64; (population + initial_infectives + 1) as usize];
        for &s in sizes {
            counts[s as usize] += 1;
        }
        FinalSizeHistogram {
            counts,
            n: sizes.len() as u64,
            population,
            initial_infectives,
        }
    }

    /// Centered moving average of half-width 2 over the attainable sizes
    /// (bins below the initial infectives are left at zero).
    pub fn smoothed(&self) -> Vec<f64> {
        let len = self.counts.len();
        let start = self.initial_infectives as usize;
        (0..len)
            .map(|k| {
                if k < start {
                    return 0.0;
                }
                let lo = k.saturating_sub(2).max(start);
                let hi = (k + 2).min(len - 1);
                self.counts[lo..=hi].iter().sum::<u64>() as f64 / (hi - lo + 1) as f64
            })
            .collect()
    }

    /// Size separating minor from major outbreaks: the deepest interior valley
    /// of the smoothed histogram.
    ///
    /// A valley qualifies only if at least 1% of runs lie beyond it and its
    /// depth exceeds three Poisson standard deviations of the smoothed count.
    pub fn auto_cutoff(&self) -> Result<u64> {
        let s = self.smoothed();
        let start = self.initial_infectives as usize;
        let len = s.len();
        if len < start + 3 {
            return Err(Error::DegenerateHistogram);
        }
        let mut left_max = vec![0.0; len];
        let mut run = f64::MIN;
        for k in start..len {
            run = run.max(s[k]);
            left_max[k] = run;
        }
        let mut right_max = vec![0.0; len];
        run = f64::MIN;
        for k in (start..len).rev() {
            run = run.max(s[k]);
            right_max[k] = run;
        }
        let mut beyond = vec![0u64; len + 1];
        for k in (0..len).rev() {
            beyond[k] = beyond[k + 1] + self.counts[k];
        }
        let min_mass = (self.n as f64 * 0.01).ceil() as u64;
        let mut best: Option<(f64, usize, usize)> = None;
        for k in start + 1..len - 1 {
            let depth = left_max[k - 1].min(right_max[k + 1]) - s[k];
            if depth <= 0.0 || beyond[k + 1] < min_mass.max(1) {
                continue;
            }
            // The smoothed count averages five bins.
            let noise = 3.0 * (left_max[k - 1].min(right_max[k + 1]) / 5.0).sqrt();
            if depth <= noise {
                continue;
            }
            match best {
                Some((d, _, _)) if depth < d => {}
                Some((d, first, _)) if depth == d => best = Some((d, first, k)),
                _ => best = Some((depth, k, k)),
            }
        }
        match best {
            // Middle of the first run of equally deep bins.
            Some((_, first, last)) => {
                let mut end = first;
                while end < last && s[end + 1] == s[first] {
                    end += 1;
                }
                Ok(((first + end) / 2) as u64)
            }
            None => Err(Error::DegenerateHistogram),
        }
    }

    /// Proportion of runs with final size at most `cutoff`.
    pub fn minor_outbreaks(&self, cutoff: u64) -> MinorOutbreakEstimate {
        let upto = (cutoff as usize).min(self.counts.len() - 1);
        let minor: u64 = self.counts[..=upto].iter().sum();
        let p = minor as f64 / self.n as f64;
        MinorOutbreakEstimate {
            cutoff,
            p_minor: p,
            se: (p * (1.0 - p) / self.n as f64).sqrt(),
            n: self.n,
        }
    }

    /// Minor-outbreak estimate using `cutoff` if given, else the automatic one.
    pub fn classify(&self, cutoff: Option<u64>) -> Result<MinorOutbreakEstimate> {
        let c = match cutoff {
            Some(c) => c,
            None => self.auto_cutoff()?,
        };
        Ok(self.minor_outbreaks(c))
    }
}

/// Final sizes of `n` independent runs; run `i` uses stream `i` of `seed`.
pub fn final_sizes(params: &ModelParams, n: usize, seed: u64) -> Result<Vec<u64>> {
    params.validate()?;
    if params.population + params.initial_infectives > u32::MAX as u64 {
        return Err(Error::InvalidConfig("population too large".into()));
    }
    Ok(with_thread_cap(|| {
        (0..n as u64)
            .into_par_iter()
            .map(|i| run_epidemic(params, &mut replicate_rng(seed, i)))
            .collect()
    }))
}

pub fn final_size_distribution(params: &ModelParams, n: usize, seed: u64) -> Result<FinalSizeHistogram> {
    if n == 0 {
        return Err(Error::InvalidConfig("need at least one replicate".into()));
    }
    let sizes = final_sizes(params, n, seed)?;
    Ok(FinalSizeHistogram::from_sizes(
        &sizes,
        params.population,
        params.initial_infectives,
    ))
}

/// One row of the minor-outbreak table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationRow {
    pub population: u64,
    pub estimate: MinorOutbreakEstimate,
}

/// Minor-outbreak proportion for each population size in `grid`.
///
/// Each size uses its own seed stream, derived from `seed` and the size.
pub fn estimate_pe_vs_n(
    params: &ModelParams,
    grid: &[u64],
    n: usize,
    seed: u64,
    cutoff: Option<u64>,
) -> Result<Vec<PopulationRow>> {
    grid.iter()
        .map(|&pop| {
            if pop < 20 {
                return Err(Error::InvalidConfig(format!("population {pop} below 20")));
            }
            let p = ModelParams {
                population: pop,
                ..*params
            };
            let hist = final_size_distribution(&p, n, seed ^ pop.wrapping_mul(0x9E37_79B9_7F4A_7C15))?;
            Ok(PopulationRow {
                population: pop,
                estimate: hist.classify(cutoff)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::DistributionSpec;

    fn fig4(pop: u64) -> ModelParams {
        ModelParams {
            contact_rate: 2.0,
            naming_prob: 0.5,
            interview_natural: 0.8,
            interview_traced: 0.8,
            infectious: DistributionSpec::exponential(1.0),
            latent: DistributionSpec::exponential(1.0),
            delay: DistributionSpec::exponential(1.0),
            population: pop,
            initial_infectives: 1,
            ..Default::default()
        }
    }

    #[test]
    fn no_contacts_means_only_initials() {
        let p = ModelParams {
            contact_rate: 0.0,
            initial_infectives: 3,
            ..fig4(50)
        };
        let sizes = final_sizes(&p, 200, 1).unwrap();
        assert!(sizes.iter().all(|&s| s == 3));
    }

    #[test]
    fn single_susceptible_is_almost_surely_infected() {
        let p = ModelParams {
            contact_rate: 1e3,
            naming_prob: 0.0,
            ..fig4(1)
        };
        let sizes = final_sizes(&p, 1000, 2).unwrap();
        assert!(sizes.iter().all(|&s| s == 2));
    }

    #[test]
    fn counters_are_consistent() {
        let p = fig4(200);
        for i in 0..300 {
            let s = run_epidemic_stats(&p, &mut replicate_rng(4, i));
            assert_eq!(s.final_size, s.natural_removals + s.traced_removals);
            assert_eq!(s.final_size, s.infections + 1);
            assert!(s.final_size >= 1 && s.final_size <= 201);
        }
    }

    #[test]
    fn tracing_removes_latent_individuals() {
        // Immediate tracing and long latency: every named infectee is caught while latent.
        let p = ModelParams {
            contact_rate: 3.0,
            naming_prob: 1.0,
            interview_natural: 1.0,
            interview_traced: 1.0,
            infectious: DistributionSpec::constant(1.0),
            latent: DistributionSpec::constant(5.0),
            delay: DistributionSpec::Zero,
            ..fig4(100)
        };
        for i in 0..100 {
            let s = run_epidemic_stats(&p, &mut replicate_rng(8, i));
            assert_eq!(s.traced_removals, s.infections);
            assert_eq!(s.natural_removals, 1);
        }
    }

    #[test]
    fn same_seed_same_sizes() {
        let p = fig4(100);
        assert_eq!(final_sizes(&p, 500, 11).unwrap(), final_sizes(&p, 500, 11).unwrap());
    }

    #[test]
    fn subcritical_has_no_cutoff() {
        let p = ModelParams {
            contact_rate: 0.5,
            naming_prob: 0.0,
            ..fig4(200)
        };
        let h = final_size_distribution(&p, 20_000, 3).unwrap();
        assert_eq!(h.auto_cutoff(), Err(Error::DegenerateHistogram));
        let e = h.classify(Some(50)).unwrap();
        assert!(e.p_minor > 0.99);
    }

    #[test]
    fn bimodal_cutoff_separates_modes() {
        let h = final_size_distribution(&fig4(200), 20_000, 5).unwrap();
        let c = h.auto_cutoff().unwrap();
        assert!(c > 10 && c < 150, "cutoff {c}");
        let e = h.minor_outbreaks(c);
        assert!(e.p_minor > 0.4 && e.p_minor < 0.9);
    }

    #[test]
    fn synthetic_valley() {
        let mut sizes = vec![];
        for k in 1..10u64 {
            sizes.extend(std::iter::repeat_n(k, (1000 / k) as usize));
        }
        for k in 60..80u64 {
            sizes.extend(std::iter::repeat_n(k, 100));
        }
        let h = FinalSizeHistogram::from_sizes(&sizes, 99, 1);
        let c = h.auto_cutoff().unwrap();
        assert!((12..58).contains(&c), "{c}");
        let e = h.minor_outbreaks(c);
        let minor: usize = (1..10).map(|k| 1000 / k).sum();
        assert!((e.p_minor - minor as f64 / sizes.len() as f64).abs() < 1e-12);
    }
}
