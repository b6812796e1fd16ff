//! Monte Carlo for the branching approximation with tracing.
//!
//! One replicate follows an unnamed individual and the cluster of named
//! individuals hanging off it, and counts the unnamed individuals the
//! cluster produces. That count is the offspring variable of the embedded
//! process of unnamed individuals; its empirical generating function gives
//! the extinction probability.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{DelayCoupling, ModelParams};
use crate::rng::{replicate_rng, with_thread_cap};

/// Offspring count of one cluster; `None` means the cluster was declared infinite.
pub type RDraw = Option<u64>;

/// Simulation controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BpConfig {
    /// Declare a cluster infinite once this many unnamed offspring are seen.
    /// `None` disables the cut, as needed for estimating means.
    pub inf_threshold: Option<u64>,
    /// Safety cap on cluster members processed; exceeding it counts as infinite.
    pub max_cluster: u64,
}

impl Default for BpConfig {
    fn default() -> Self {
        BpConfig {
            inf_threshold: Some(100),
            max_cluster: 50_000_000,
        }
    }
}

impl BpConfig {
    pub fn untruncated() -> Self {
        BpConfig {
            inf_threshold: None,
            ..Default::default()
        }
    }
}

/// A cluster member once its fate is known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Member {
    /// Time spent infective.
    pub active: f64,
    pub traced: bool,
    pub interviewed: bool,
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    match Poisson::new(mean) {
        Ok(d) => d.sample(rng) as u64,
        Err(_) => u64::MAX,
    }
}

/// An unnamed individual: natural removal, interviewed with the natural probability.
pub fn unnamed_member<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> Member {
    let active = params.infectious.sample(rng);
    Member {
        active,
        traced: false,
        interviewed: rng.random::<f64>() < params.interview_natural,
    }
}

/// A named individual, named `since_naming` time units after its birth and
/// traced one delay later.
pub fn named_member<R: Rng + ?Sized>(params: &ModelParams, since_naming: f64, delay: f64, rng: &mut R) -> Member {
    let latent = params.latent.sample(rng);
    let infectious = params.infectious.sample(rng);
    let until_trace = (since_naming + delay - latent).max(0.0);
    if until_trace < infectious {
        Member {
            active: until_trace,
            traced: true,
            interviewed: rng.random::<f64>() < params.interview_traced,
        }
    } else {
        Member {
            active: infectious,
            traced: false,
            interviewed: rng.random::<f64>() < params.interview_natural,
        }
    }
}

/// Offspring of `parent`: the number left unnamed and the named ones.
///
/// Offspring are born uniformly over the active period and named, if at all,
/// at its end.
pub fn offspring<R: Rng + ?Sized>(
    params: &ModelParams,
    parent: &Member,
    rng: &mut R,
    named_out: &mut Vec<Member>,
) -> u64 {
    let mean = params.contact_rate * parent.active;
    if !parent.interviewed || params.naming_prob == 0.0 {
        return poisson(mean, rng);
    }
    let unnamed = poisson(mean * (1.0 - params.naming_prob), rng);
    let named = poisson(mean * params.naming_prob, rng);
    let shared = match params.delay_coupling {
        DelayCoupling::Mutual if named > 0 => Some(params.delay.sample(rng)),
        _ => None,
    };
    for _ in 0..named {
        let since_naming = parent.active * rng.random::<f64>();
        let delay = shared.unwrap_or_else(|| params.delay.sample(rng));
        named_out.push(named_member(params, since_naming, delay, rng));
    }
    unnamed
}

/// Unnamed offspring of one unnamed individual's cluster.
pub fn sample_r<R: Rng + ?Sized>(params: &ModelParams, config: &BpConfig, rng: &mut R) -> RDraw {
    let limit = config.inf_threshold.unwrap_or(u64::MAX);
    let mut queue = vec![unnamed_member(params, rng)];
    let mut total = 0u64;
    let mut processed = 0u64;
    while let Some(member) = queue.pop() {
        processed += 1;
        if processed > config.max_cluster {
            return None;
        }
        total = total.saturating_add(offspring(params, &member, rng, &mut queue));
        if total >= limit {
            return None;
        }
    }
    Some(total)
}

/// Empirical distribution of cluster offspring counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RSampleSet {
    pub samples: Vec<RDraw>,
    pub inf_threshold: Option<u64>,
}

/// Summary of the sample mean of finite draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    /// `+inf` when any draw was infinite.
    pub mean: f64,
    pub se: f64,
    pub p_inf: f64,
}

/// Extinction probability estimated from the empirical generating function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionEstimate {
    /// Root of the empirical generating-function equation (one initial case).
    pub q: f64,
    /// Extinction probability for all initial infectives.
    pub p_ext: f64,
    pub se: f64,
    pub p_inf: f64,
    pub n: usize,
}

impl RSampleSet {
    pub fn n(&self) -> usize {
        self.samples.len()
    }

    pub fn inf_count(&self) -> usize {
        self.samples.iter().filter(|s| s.is_none()).count()
    }

    pub fn mean(&self) -> MeanEstimate {
        let n = self.n() as f64;
        let p_inf = self.inf_count() as f64 / n;
        if p_inf > 0.0 {
            return MeanEstimate {
                mean: f64::INFINITY,
                se: f64::NAN,
                p_inf,
            };
        }
        let xs = self.samples.iter().map(|s| s.unwrap_or(0) as f64);
        let mean = xs.clone().sum::<f64>() / n;
        let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0);
        MeanEstimate {
            mean,
            se: (var / n).sqrt(),
            p_inf,
        }
    }

    fn histogram(&self) -> BTreeMap<u64, u64> {
        let mut h = BTreeMap::new();
        for r in self.samples.iter().flatten() {
            *h.entry(*r).or_insert(0) += 1;
        }
        h
    }

    /// `(1/n) sum s^R`, with infinite draws contributing zero.
    pub fn empirical_pgf(&self, s: f64) -> f64 {
        pgf_from(&self.histogram(), self.n(), s).0
    }

    /// Smallest root in (0, 1] of the empirical generating-function equation.
    pub fn extinction(&self, initial_infectives: u64) -> Result<ExtinctionEstimate> {
        const TOL: f64 = 1e-10;
        const MAX_ITER: usize = 10_000_000;
        let n = self.n();
        if n == 0 {
            return Err(Error::InvalidConfig("no samples".into()));
        }
        let hist = self.histogram();
        let p_inf = self.inf_count() as f64 / n as f64;
        let finite_mean = hist.iter().map(|(k, c)| *k as f64 * *c as f64).sum::<f64>() / n as f64;
        let q = if p_inf == 0.0 && finite_mean <= 1.0 {
            1.0
        } else {
            let mut q = 0.0;
            let mut converged = false;
            for _ in 0..MAX_ITER {
                let next = pgf_from(&hist, n, q).0;
                let step = (next - q).abs();
                q = next;
                if step < TOL {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::NoConvergence { iterations: MAX_ITER });
            }
            q
        };
        let m = initial_infectives as f64;
        let p_ext = q.powf(m);
        let se = if q >= 1.0 {
            0.0
        } else {
            // Delta method: q solves H(q) = q with H estimated by a sample mean of q^R.
            let (h, slope) = pgf_from(&hist, n, q);
            let second: f64 = hist.iter().map(|(k, c)| *c as f64 * q.powf(2.0 * *k as f64)).sum::<f64>() / n as f64;
            let var = (second - h * h).max(0.0);
            let se_q = (var / n as f64).sqrt() / (1.0 - slope).abs();
            m * q.powf(m - 1.0) * se_q
        };
        Ok(ExtinctionEstimate {
            q,
            p_ext,
            se,
            p_inf,
            n,
        })
    }
}

// Empirical generating function and its derivative at `s`.
fn pgf_from(hist: &BTreeMap<u64, u64>, n: usize, s: f64) -> (f64, f64) {
    let mut value = 0.0;
    let mut slope = 0.0;
    for (&k, &c) in hist {
        let c = c as f64;
        if k == 0 {
            value += c;
        } else {
            let pk = s.powf(k as f64 - 1.0);
            value += c * pk * s;
            slope += c * k as f64 * pk;
        }
    }
    (value / n as f64, slope / n as f64)
}

/// Draw `n` replicates; replicate `i` uses stream `i` of `seed`.
pub fn sample_r_set(params: &ModelParams, config: &BpConfig, n: usize, seed: u64) -> Result<RSampleSet> {
    params.validate()?;
    let samples = with_thread_cap(|| {
        (0..n as u64)
            .into_par_iter()
            .map(|i| sample_r(params, config, &mut replicate_rng(seed, i)))
            .collect()
    });
    Ok(RSampleSet {
        samples,
        inf_threshold: config.inf_threshold,
    })
}

/// Extinction probability of the whole outbreak from `n` simulated clusters.
pub fn estimate_extinction(params: &ModelParams, config: &BpConfig, n: usize, seed: u64) -> Result<ExtinctionEstimate> {
    sample_r_set(params, config, n, seed)?.extinction(params.initial_infectives)
}

/// Mean cluster offspring count, without the infinity cut.
pub fn estimate_ru(params: &ModelParams, n: usize, seed: u64) -> Result<MeanEstimate> {
    Ok(sample_r_set(params, &BpConfig::untruncated(), n, seed)?.mean())
}
