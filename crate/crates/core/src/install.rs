//! Random local installation process.
//!
//! Starting from an empty machine, packages are drawn uniformly at random
//! from those still available and either installed together with their whole
//! dependency closure or discarded:
//!
//! 1. a candidate with a conflict toward an installed package is discarded;
//! 2. a candidate whose closure contains a discarded package, or a package
//!    with a conflict toward an installed one, is discarded;
//! 3. if the packages to install contain a reciprocally conflicting pair, a
//!    fair coin keeps one and permanently discards the other. The requirement
//!    on the loser counts as met only for dependants that also depend directly
//!    on the winner; any other dependant of the loser sinks the candidate;
//! 4. otherwise the candidate and its closure are installed atomically.
//!
//! Only packages with at least one dependency or conflict take part. The
//! process ends when nothing remains, and its outcome is the installed
//! fraction `|installed| / (|installed| + |discarded|)`.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DependencyGraph, NodeId};
use crate::null_model::{ensemble_with, EnsembleResult, Tail};
use crate::seed;

/// Whether a conflict `i -> j` blocks only `i` (as declared) or both ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConflictMode {
    #[default]
    AsDeclared,
    Symmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// Not part of the process (no interactions).
    Excluded,
    Remaining,
    Installed,
    Discarded,
}

/// Installed / discarded / remaining partition of the interacting packages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstallState {
    status: Vec<Status>,
}

impl InstallState {
    /// Every interacting package remaining, nothing installed.
    pub fn new(graph: &DependencyGraph) -> Self {
        let status = graph
            .nodes()
            .map(|n| {
                if graph.is_interacting(n) {
                    Status::Remaining
                } else {
                    Status::Excluded
                }
            })
            .collect();
        InstallState { status }
    }

    /// A state with `installed` already on the machine.
    pub fn with_installed<'a>(
        graph: &DependencyGraph,
        installed: impl IntoIterator<Item = &'a str>,
    ) -> Result<Self> {
        let mut state = Self::new(graph);
        for name in installed {
            let n = graph.node(name)?;
            if state.status[n.index()] == Status::Excluded {
                return Err(Error::State(format!("{name:?} has no interactions")));
            }
            state.status[n.index()] = Status::Installed;
        }
        Ok(state)
    }

    pub fn status(&self, node: NodeId) -> Status {
        self.status[node.index()]
    }

    fn with_status(&self, s: Status) -> Vec<NodeId> {
        self.status
            .iter()
            .enumerate()
            .filter(|(_, &x)| x == s)
            .map(|(i, _)| NodeId(i as u32))
            .collect()
    }

    pub fn installed(&self) -> Vec<NodeId> {
        self.with_status(Status::Installed)
    }

    pub fn discarded(&self) -> Vec<NodeId> {
        self.with_status(Status::Discarded)
    }

    pub fn remaining(&self) -> Vec<NodeId> {
        self.with_status(Status::Remaining)
    }

    pub fn is_finished(&self) -> bool {
        !self.status.contains(&Status::Remaining)
    }

    fn counts(&self) -> (usize, usize) {
        let mut inst = 0;
        let mut disc = 0;
        for s in &self.status {
            match s {
                Status::Installed => inst += 1,
                Status::Discarded => disc += 1,
                _ => {}
            }
        }
        (inst, disc)
    }

    /// `|installed| / (|installed| + |discarded|)`; 0 before anything happened.
    pub fn fraction(&self) -> f64 {
        let (inst, disc) = self.counts();
        if inst + disc == 0 {
            0.0
        } else {
            inst as f64 / (inst + disc) as f64
        }
    }

    /// Commit `decision` for candidate `pkg`.
    pub fn apply(&mut self, pkg: NodeId, decision: &Decision) {
        for &l in decision.losers() {
            self.status[l.index()] = Status::Discarded;
        }
        match decision {
            Decision::Install { nodes, .. } => {
                for &n in nodes {
                    self.status[n.index()] = Status::Installed;
                }
            }
            Decision::Discard { .. } => self.status[pkg.index()] = Status::Discarded,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", content = "node", rename_all = "snake_case")]
pub enum DiscardReason {
    /// The candidate conflicts with an installed package.
    ConflictWithInstalled,
    /// A package in the closure was discarded earlier.
    DependencyDiscarded(NodeId),
    /// A package in the closure conflicts with an installed package.
    DependencyConflicts(NodeId),
    /// A coin-flip loser is still required by a package that does not also
    /// depend on the winner (or the candidate itself lost).
    RequirementLost(NodeId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    /// Install `nodes` (candidate plus the not-yet-installed closure), sorted.
    Install { nodes: Vec<NodeId>, losers: Vec<NodeId> },
    Discard {
        reason: DiscardReason,
        losers: Vec<NodeId>,
    },
}

impl Decision {
    /// Packages discarded by reciprocal-conflict coin flips.
    pub fn losers(&self) -> &[NodeId] {
        match self {
            Decision::Install { losers, .. } | Decision::Discard { losers, .. } => losers,
        }
    }
}

/// Reusable evaluator for one graph; keeps scratch space between candidates.
pub struct Installer<'g> {
    graph: &'g DependencyGraph,
    mode: ConflictMode,
    mark: Vec<u32>,
    stamp: u32,
    /// for coin-flip losers: the winner of their pair, by node index
    winner_of: Vec<Option<NodeId>>,
    stack: Vec<NodeId>,
}

impl<'g> Installer<'g> {
    pub fn new(graph: &'g DependencyGraph, mode: ConflictMode) -> Self {
        Installer {
            graph,
            mode,
            mark: vec![0; graph.node_count()],
            stamp: 0,
            winner_of: vec![None; graph.node_count()],
            stack: Vec::new(),
        }
    }

    pub fn graph(&self) -> &'g DependencyGraph {
        self.graph
    }

    fn next_stamp(&mut self) -> u32 {
        self.stamp = self.stamp.wrapping_add(1);
        if self.stamp == 0 {
            self.mark.fill(0);
            self.stamp = 1;
        }
        self.stamp
    }

    /// True when `node` may not be installed next to what is installed.
    fn blocked(&self, state: &InstallState, node: NodeId) -> bool {
        let hits = |list: &[NodeId]| list.iter().any(|&c| state.status(c) == Status::Installed);
        match self.mode {
            ConflictMode::AsDeclared => hits(self.graph.conflicts(node)),
            ConflictMode::Symmetric => {
                hits(self.graph.conflicts(node)) || hits(self.graph.conflicted_by(node))
            }
        }
    }

    fn reciprocal(&self, a: NodeId, b: NodeId) -> bool {
        let g = self.graph;
        let ab = g.conflicts(a).binary_search(&b).is_ok();
        let ba = g.conflicts(b).binary_search(&a).is_ok();
        match self.mode {
            ConflictMode::AsDeclared => ab && ba,
            ConflictMode::Symmetric => ab || ba,
        }
    }

    /// Nodes reachable from `pkg` via dependencies, `pkg` included, never
    /// entering nodes for which `skip` holds. Sorted.
    fn reach(&mut self, pkg: NodeId, skip: impl Fn(NodeId) -> bool) -> Vec<NodeId> {
        let stamp = self.next_stamp();
        let mut out = vec![pkg];
        self.mark[pkg.index()] = stamp;
        self.stack.clear();
        self.stack.push(pkg);
        while let Some(u) = self.stack.pop() {
            for &v in self.graph.dependencies(u) {
                if self.mark[v.index()] != stamp && !skip(v) {
                    self.mark[v.index()] = stamp;
                    out.push(v);
                    self.stack.push(v);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Decide the fate of candidate `pkg` without modifying `state`. Coin
    /// flips draw from `rng`.
    pub fn evaluate_candidate(
        &mut self,
        state: &InstallState,
        pkg: NodeId,
        rng: &mut seed::Rng,
    ) -> Result<Decision> {
        if pkg.index() >= state.status.len() || state.status(pkg) != Status::Remaining {
            return Err(Error::State(format!(
                "candidate {:?} is not among the remaining packages",
                self.graph.name(pkg)
            )));
        }
        let discard = |reason| Decision::Discard {
            reason,
            losers: Vec::new(),
        };
        if self.blocked(state, pkg) {
            return Ok(discard(DiscardReason::ConflictWithInstalled));
        }

        let closure = self.reach(pkg, |_| false);
        let mut to_install = Vec::with_capacity(closure.len());
        for &v in &closure {
            match state.status(v) {
                Status::Installed => continue,
                Status::Discarded => return Ok(discard(DiscardReason::DependencyDiscarded(v))),
                _ => {}
            }
            if v != pkg && self.blocked(state, v) {
                return Ok(discard(DiscardReason::DependencyConflicts(v)));
            }
            to_install.push(v);
        }

        // reciprocal pairs among the packages about to be installed, in order
        let mut pairs = Vec::new();
        for &a in &to_install {
            let partners = self
                .graph
                .conflicts(a)
                .iter()
                .chain(match self.mode {
                    ConflictMode::AsDeclared => [].iter(),
                    ConflictMode::Symmetric => self.graph.conflicted_by(a).iter(),
                });
            for &b in partners {
                if a < b && to_install.binary_search(&b).is_ok() && self.reciprocal(a, b) {
                    pairs.push((a, b));
                }
            }
        }
        if pairs.is_empty() {
            return Ok(Decision::Install {
                nodes: to_install,
                losers: Vec::new(),
            });
        }
        pairs.sort_unstable();
        pairs.dedup();

        let mut losers: Vec<NodeId> = Vec::new();
        for (a, b) in pairs {
            if losers.contains(&a) || losers.contains(&b) {
                continue;
            }
            let (keep, lose) = if rng.random_bool(0.5) { (a, b) } else { (b, a) };
            losers.push(lose);
            self.winner_of[lose.index()] = Some(keep);
        }
        let decision = self.settle(state, pkg, &losers);
        for &l in &losers {
            self.winner_of[l.index()] = None;
        }
        Ok(decision)
    }

    fn settle(&mut self, state: &InstallState, pkg: NodeId, losers: &[NodeId]) -> Decision {
        let lost = |reason| Decision::Discard {
            reason,
            losers: losers.to_vec(),
        };
        if losers.contains(&pkg) {
            return lost(DiscardReason::RequirementLost(pkg));
        }
        let is_loser = |n: NodeId| losers.contains(&n);
        let kept = self.reach(pkg, is_loser);
        for &u in &kept {
            for &t in self.graph.dependencies(u) {
                if !is_loser(t) {
                    continue;
                }
                let covered = self.winner_of[t.index()]
                    .is_some_and(|w| !is_loser(w) && self.graph.dependencies(u).binary_search(&w).is_ok());
                if !covered {
                    return lost(DiscardReason::RequirementLost(t));
                }
            }
        }
        Decision::Install {
            nodes: kept
                .into_iter()
                .filter(|&n| state.status(n) != Status::Installed)
                .collect(),
            losers: losers.to_vec(),
        }
    }

    /// Run the process from `state` until nothing remains.
    pub fn run(&mut self, mut state: InstallState, seed: u64) -> Result<InstallOutcome> {
        let mut rng = seed::rng(seed);
        let mut order = state.remaining();
        order.shuffle(&mut rng);
        // the first still-remaining entry of a uniform permutation is a
        // uniform draw from the remaining set
        for pkg in order {
            if state.status(pkg) != Status::Remaining {
                continue;
            }
            let decision = self.evaluate_candidate(&state, pkg, &mut rng)?;
            state.apply(pkg, &decision);
        }
        Ok(InstallOutcome::from_state(&state))
    }
}

/// Free-function form of [`Installer::evaluate_candidate`].
pub fn evaluate_candidate(
    graph: &DependencyGraph,
    state: &InstallState,
    pkg: NodeId,
    mode: ConflictMode,
    rng: &mut seed::Rng,
) -> Result<Decision> {
    Installer::new(graph, mode).evaluate_candidate(state, pkg, rng)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstallOutcome {
    pub installed: Vec<NodeId>,
    pub discarded: Vec<NodeId>,
    pub fraction: f64,
}

impl InstallOutcome {
    fn from_state(state: &InstallState) -> Self {
        InstallOutcome {
            installed: state.installed(),
            discarded: state.discarded(),
            fraction: state.fraction(),
        }
    }
}

/// One replicate on an initially empty machine (as-declared conflicts).
pub fn run_replicate(graph: &DependencyGraph, seed: u64) -> Result<InstallOutcome> {
    run_replicate_with(graph, seed, ConflictMode::AsDeclared)
}

pub fn run_replicate_with(graph: &DependencyGraph, seed: u64, mode: ConflictMode) -> Result<InstallOutcome> {
    let state = InstallState::new(graph);
    if state.is_finished() {
        return Err(Error::NoInteractingNodes);
    }
    Installer::new(graph, mode).run(state, seed)
}

/// Continue the process from an existing state (e.g. a preinstalled base).
pub fn run_from_state(
    graph: &DependencyGraph,
    state: InstallState,
    seed: u64,
    mode: ConflictMode,
) -> Result<InstallOutcome> {
    Installer::new(graph, mode).run(state, seed)
}

pub const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionStats {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single replicate.
    pub std: f64,
    pub min: f64,
    pub max: f64,
    /// Counts over `HISTOGRAM_BINS` equal-width bins on [0, 1].
    pub histogram: Vec<usize>,
    /// Running sample variance after `k` replicates, at doubling checkpoints
    /// and at `n`.
    pub variance_trace: Vec<(usize, f64)>,
}

impl FractionStats {
    pub fn from_fractions(fractions: &[f64]) -> Self {
        let n = fractions.len();
        let mut histogram = vec![0; HISTOGRAM_BINS];
        let mut trace = Vec::new();
        let (mut mean, mut m2) = (0.0, 0.0);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let mut next_checkpoint = 2;
        for (i, &f) in fractions.iter().enumerate() {
            let k = (i + 1) as f64;
            let delta = f - mean;
            mean += delta / k;
            m2 += delta * (f - mean);
            lo = lo.min(f);
            hi = hi.max(f);
            let bin = ((f * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
            histogram[bin] += 1;
            if i + 1 == next_checkpoint || i + 1 == n {
                if i + 1 >= 2 {
                    trace.push((i + 1, m2 / (k - 1.0)));
                }
                if i + 1 == next_checkpoint {
                    next_checkpoint *= 2;
                }
            }
        }
        let std = if n > 1 { (m2 / (n as f64 - 1.0)).sqrt() } else { 0.0 };
        FractionStats {
            n,
            mean: if n == 0 { f64::NAN } else { mean },
            std,
            min: lo,
            max: hi,
            histogram,
            variance_trace: trace,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub fraction: f64,
    pub installed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRun {
    pub stats: FractionStats,
    pub records: Vec<ReplicateRecord>,
}

/// `n` independent replicates; replicate `i` uses seed
/// `derive(seed, "replicate", i)`.
pub fn run_replicates(graph: &DependencyGraph, n: usize, seed: u64) -> Result<ReplicateRun> {
    run_replicates_with(graph, n, seed, ConflictMode::AsDeclared)
}

pub fn run_replicates_with(
    graph: &DependencyGraph,
    n: usize,
    seed: u64,
    mode: ConflictMode,
) -> Result<ReplicateRun> {
    if n == 0 {
        return Err(Error::InvalidArgument("replicates must be >= 1".into()));
    }
    let start = InstallState::new(graph);
    if start.is_finished() {
        return Err(Error::NoInteractingNodes);
    }
    let records: Vec<ReplicateRecord> = (0..n)
        .into_par_iter()
        .map_init(
            || Installer::new(graph, mode),
            |inst, i| {
                let out = inst.run(start.clone(), seed::derive(seed, "replicate", i as u64))?;
                Ok(ReplicateRecord {
                    replicate: i,
                    fraction: out.fraction,
                    installed: out.installed.len(),
                })
            },
        )
        .collect::<Result<_>>()?;
    let fractions: Vec<f64> = records.iter().map(|r| r.fraction).collect();
    Ok(ReplicateRun {
        stats: FractionStats::from_fractions(&fractions),
        records,
    })
}

/// Effect of modular dependency structure on installability: the mean
/// installed fraction on `graph` against the same quantity on
/// `n_networks` degree-preserving rewirings (conflicts unchanged). The
/// p-value is the share of rewired networks doing at least as well.
pub fn modularity_effect(
    graph: &DependencyGraph,
    n_networks: usize,
    n_replicates: usize,
    swaps_per_edge: usize,
    seed: u64,
    mode: ConflictMode,
) -> Result<EnsembleResult> {
    ensemble_with(graph, n_networks, swaps_per_edge, seed, Tail::Upper, |g, s| {
        Ok(run_replicates_with(g, n_replicates, s, mode)?.stats.mean)
    })
}
