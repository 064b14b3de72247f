//! Degree-preserving null models.
//!
//! Dependency edges are randomised with directed double-edge swaps
//! `(a→b, c→d) ⇒ (a→d, c→b)`, which keep every package's number of
//! dependencies and dependants. Conflicts are never touched.

use rayon::prelude::*;
use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use crate::community::louvain;
use crate::error::{Error, Result};
use crate::graph::{symmetrized_view_with, DependencyGraph, Edge, NodeScope, ReciprocalWeight};
use crate::seed;

pub const DEFAULT_SWAPS_PER_EDGE: usize = 10;

/// Attempts allowed per requested swap before giving up on graphs where few
/// or no swaps are legal.
const MAX_ATTEMPTS_PER_SWAP: usize = 100;

#[derive(Debug, Clone)]
pub struct RewireOutcome {
    pub graph: DependencyGraph,
    pub swaps: usize,
    pub attempts: usize,
}

fn key(e: Edge) -> u64 {
    (u64::from(e.0 .0) << 32) | u64::from(e.1 .0)
}

/// Perform up to `swaps` successful double-edge swaps.
///
/// Swaps that would create a self-loop or a duplicate edge are rejected and
/// do not count. Gives up after `100 × swaps` attempts, so graphs admitting no
/// legal swap come back unchanged.
pub fn rewire_swaps(graph: &DependencyGraph, swaps: usize, seed: u64) -> Result<RewireOutcome> {
    use rand::Rng as _;

    let mut edges: Vec<Edge> = graph.dep_edges().to_vec();
    let m = edges.len();
    if m < 2 {
        return Err(Error::CannotRewire { edges: m });
    }
    let mut present: FxHashSet<u64> = edges.iter().map(|&e| key(e)).collect();
    let mut rng = seed::rng(seed);
    let max_attempts = swaps.saturating_mul(MAX_ATTEMPTS_PER_SWAP).max(1000);
    let mut done = 0;
    let mut attempts = 0;
    while done < swaps && attempts < max_attempts {
        attempts += 1;
        let i = rng.random_range(0..m);
        let mut j = rng.random_range(0..m - 1);
        if j >= i {
            j += 1;
        }
        let (a, b) = edges[i];
        let (c, d) = edges[j];
        if a == d || c == b {
            continue;
        }
        let (ad, cb) = ((a, d), (c, b));
        if present.contains(&key(ad)) || present.contains(&key(cb)) {
            continue;
        }
        present.remove(&key((a, b)));
        present.remove(&key((c, d)));
        present.insert(key(ad));
        present.insert(key(cb));
        edges[i] = ad;
        edges[j] = cb;
        done += 1;
    }
    Ok(RewireOutcome {
        graph: graph.with_dep_edges(edges),
        swaps: done,
        attempts,
    })
}

/// Randomise dependencies with `swaps_per_edge × |dep_edges|` swaps.
pub fn rewire(graph: &DependencyGraph, swaps_per_edge: usize, seed: u64) -> Result<DependencyGraph> {
    if swaps_per_edge == 0 {
        return Err(Error::InvalidArgument("swaps_per_edge must be >= 1".into()));
    }
    let target = swaps_per_edge.saturating_mul(graph.dep_edges().len());
    Ok(rewire_swaps(graph, target, seed)?.graph)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    #[default]
    Upper,
    Lower,
}

/// Fraction of samples at least as extreme as `observed` in the given tail.
pub fn empirical_pvalue(observed: f64, samples: &[f64], tail: Tail) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let hits = samples
        .iter()
        .filter(|&&s| match tail {
            Tail::Upper => s >= observed,
            Tail::Lower => s <= observed,
        })
        .count();
    Ok(hits as f64 / samples.len() as f64)
}

/// Observed value against a null ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub observed: f64,
    pub null_mean: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub null_std: f64,
    /// `None` when the null ensemble has zero spread.
    pub z: Option<f64>,
    pub p: f64,
    pub tail: Tail,
    pub n_samples: usize,
}

impl EnsembleStats {
    pub fn from_samples(observed: f64, samples: &[f64], tail: Tail) -> Result<Self> {
        let p = empirical_pvalue(observed, samples, tail)?;
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = if samples.len() > 1 {
            samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let std = var.sqrt();
        Ok(EnsembleStats {
            observed,
            null_mean: mean,
            null_std: std,
            z: (std > 0.0).then(|| (observed - mean) / std),
            p,
            tail,
            n_samples: samples.len(),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub stats: EnsembleStats,
    pub samples: Vec<f64>,
}

/// Statistic evaluated on the observed graph and on each rewired member.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Statistic {
    /// Best-of-`restarts` Louvain modularity of the dependency projection.
    LouvainQ {
        restarts: usize,
        weighting: ReciprocalWeight,
    },
    /// Mean installed fraction over `replicates` installation runs.
    MeanInstalledFraction {
        replicates: usize,
        conflicts: crate::install::ConflictMode,
    },
}

impl Statistic {
    pub fn evaluate(&self, graph: &DependencyGraph, seed: u64) -> Result<f64> {
        match *self {
            Statistic::LouvainQ { restarts, weighting } => {
                let view = symmetrized_view_with(graph, weighting, NodeScope::Interacting);
                Ok(louvain(&view, restarts, seed)?.q)
            }
            Statistic::MeanInstalledFraction {
                replicates,
                conflicts,
            } => Ok(crate::install::run_replicates_with(graph, replicates, seed, conflicts)?
                .stats
                .mean),
        }
    }
}

/// Evaluate `statistic` on `graph` and on `n_networks` rewired copies.
pub fn ensemble(
    graph: &DependencyGraph,
    n_networks: usize,
    statistic: Statistic,
    swaps_per_edge: usize,
    seed: u64,
) -> Result<EnsembleResult> {
    ensemble_with(graph, n_networks, swaps_per_edge, seed, Tail::Upper, |g, s| {
        statistic.evaluate(g, s)
    })
}

/// [`ensemble`] for an arbitrary statistic `f(graph, seed)`.
///
/// Member `i` is rewired with seed `derive(seed, "rewire", i)` and evaluated
/// with `derive(seed, "statistic", i)`; the observed graph uses
/// `derive(seed, "observed", 0)`. Members run in parallel but the result is
/// independent of scheduling.
pub fn ensemble_with<F>(
    graph: &DependencyGraph,
    n_networks: usize,
    swaps_per_edge: usize,
    seed: u64,
    tail: Tail,
    statistic: F,
) -> Result<EnsembleResult>
where
    F: Fn(&DependencyGraph, u64) -> Result<f64> + Sync,
{
    if n_networks < 2 {
        return Err(Error::InvalidArgument("an ensemble needs at least 2 networks".into()));
    }
    if graph.dep_edges().len() < 2 {
        return Err(Error::CannotRewire {
            edges: graph.dep_edges().len(),
        });
    }
    let observed = statistic(graph, seed::derive(seed, "observed", 0))?;
    let samples: Vec<f64> = (0..n_networks)
        .into_par_iter()
        .map(|i| {
            let i64 = i as u64;
            let wrap = |e: Error| Error::Ensemble {
                index: i,
                source: Box::new(e),
            };
            let null = rewire(graph, swaps_per_edge, seed::derive(seed, "rewire", i64)).map_err(wrap)?;
            statistic(&null, seed::derive(seed, "statistic", i64)).map_err(wrap)
        })
        .collect::<Result<_>>()?;
    Ok(EnsembleResult {
        stats: EnsembleStats::from_samples(observed, &samples, tail)?,
        samples,
    })
}
