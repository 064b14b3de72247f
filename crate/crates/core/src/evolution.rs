//! Cross-release statistics: package turnover, per-release network metrics
//! and trend regressions over each metric series.

use std::collections::BTreeSet;

use chrono::NaiveDate;
use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::community::{louvain, summarize};
use crate::degree_stats::{ols, FitResult, Model};
use crate::error::{Error, Result};
use crate::graph::{symmetrized_view_with, DependencyGraph, NodeScope, ReciprocalWeight};
use crate::install::{modularity_effect, run_replicates_with, ConflictMode};
use crate::null_model::{ensemble, Statistic, DEFAULT_SWAPS_PER_EDGE};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReleaseDiff {
    pub deprecated: BTreeSet<String>,
    pub kept: BTreeSet<String>,
    pub new: BTreeSet<String>,
    /// Kept packages whose version string differs between the releases.
    pub kept_version_changed: usize,
}

/// Name-keyed turnover between consecutive releases.
pub fn release_diff(prev: &DependencyGraph, next: &DependencyGraph) -> ReleaseDiff {
    let mut diff = ReleaseDiff {
        deprecated: BTreeSet::new(),
        kept: BTreeSet::new(),
        new: BTreeSet::new(),
        kept_version_changed: 0,
    };
    for n in prev.nodes() {
        let name = prev.name(n);
        match next.node(name) {
            Ok(m) => {
                if prev.version(n) != next.version(m) {
                    diff.kept_version_changed += 1;
                }
                diff.kept.insert(name.to_owned());
            }
            Err(_) => {
                diff.deprecated.insert(name.to_owned());
            }
        }
    }
    for n in next.nodes() {
        let name = next.name(n);
        if !prev.contains(name) {
            diff.new.insert(name.to_owned());
        }
    }
    diff
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendModel {
    /// `y = a + b x`
    Linear,
    /// `ln y = ln a + b x`; `slope` is the growth rate.
    Exponential,
}

/// Least-squares trend of `series` (pairs of `(x, y)`).
pub fn regress(series: &[(f64, f64)], model: TrendModel) -> Result<FitResult> {
    let xs: Vec<f64> = series.iter().map(|p| p.0).collect();
    match model {
        TrendModel::Linear => {
            let ys: Vec<f64> = series.iter().map(|p| p.1).collect();
            ols(Model::Linear, &xs, &ys)
        }
        TrendModel::Exponential => {
            if let Some(&(x, y)) = series.iter().find(|p| !(p.1 > 0.0)) {
                return Err(Error::Domain(format!(
                    "exponential trend needs y > 0, got {y} at x = {x}"
                )));
            }
            let ys: Vec<f64> = series.iter().map(|p| p.1.ln()).collect();
            ols(Model::Exponential, &xs, &ys)
        }
    }
}

#[derive(Debug, Clone)]
pub struct Release {
    pub label: String,
    pub date: Option<NaiveDate>,
    pub graph: DependencyGraph,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XAxis {
    /// Release position 1..n.
    #[default]
    Ordinal,
    /// Release date in years since the first release.
    Date,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionConfig {
    pub x_axis: XAxis,
    /// Also fit every trend without the last release.
    pub drop_last_release: bool,
    pub louvain_restarts: usize,
    pub weighting: ReciprocalWeight,
    pub major_threshold: f64,
    /// Run the rewiring ensembles behind the two z-scores.
    pub ensembles: bool,
    pub modularity_randomizations: usize,
    pub install_networks: usize,
    pub install_replicates: usize,
    pub swaps_per_edge: usize,
    pub conflicts: ConflictMode,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            x_axis: XAxis::Ordinal,
            drop_last_release: true,
            louvain_restarts: 10,
            weighting: ReciprocalWeight::Count,
            major_threshold: 0.05,
            ensembles: true,
            modularity_randomizations: 1000,
            install_networks: 100,
            install_replicates: 1000,
            swaps_per_edge: DEFAULT_SWAPS_PER_EDGE,
            conflicts: ConflictMode::AsDeclared,
        }
    }
}

/// One metric value for one release.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Value(f64),
    /// The computation failed; the trend over this metric is not fitted.
    Failed { error: String },
    /// Not defined for this release (e.g. no conflicts); left out of trends.
    Missing { reason: String },
}

impl Cell {
    fn missing(reason: &str) -> Self {
        Cell::Missing {
            reason: reason.to_owned(),
        }
    }

    fn from_result(r: Result<f64>) -> Self {
        match r {
            Ok(v) => Cell::Value(v),
            Err(e) => Cell::Failed { error: e.to_string() },
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Cell::Value(v) => Some(*v),
            _ => None,
        }
    }
}

/// Metric names in report order, with the trend model fitted to each.
pub const METRICS: &[(&str, TrendModel)] = &[
    ("packages", TrendModel::Exponential),
    ("interacting_packages", TrendModel::Exponential),
    ("dep_edges", TrendModel::Exponential),
    ("con_edges", TrendModel::Exponential),
    ("dep_con_ratio", TrendModel::Linear),
    ("non_interacting_fraction", TrendModel::Linear),
    ("deprecated", TrendModel::Exponential),
    ("kept", TrendModel::Exponential),
    ("kept_version_changed", TrendModel::Exponential),
    ("new", TrendModel::Exponential),
    ("louvain_q", TrendModel::Linear),
    ("modularity_z", TrendModel::Linear),
    ("major_modules", TrendModel::Exponential),
    ("dep_within_fraction", TrendModel::Linear),
    ("con_within_fraction", TrendModel::Linear),
    ("mean_installed_fraction", TrendModel::Linear),
    ("installation_z", TrendModel::Linear),
];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReleaseRow {
    pub label: String,
    pub ordinal: usize,
    pub date: Option<NaiveDate>,
    pub x: f64,
    pub metrics: IndexMap<String, Cell>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    AllReleases,
    DropLastRelease,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TrendOutcome {
    Fitted { fit: FitResult },
    Skipped { reason: String },
    Failed { error: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrendTest {
    pub metric: String,
    pub model: TrendModel,
    pub variant: Variant,
    pub n: usize,
    pub outcome: TrendOutcome,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvolutionReport {
    pub releases: Vec<ReleaseRow>,
    pub trends: Vec<TrendTest>,
}

fn x_values(releases: &[Release], axis: XAxis) -> Result<Vec<f64>> {
    match axis {
        XAxis::Ordinal => Ok((1..=releases.len()).map(|i| i as f64).collect()),
        XAxis::Date => {
            let dates = releases
                .iter()
                .map(|r| {
                    r.date.ok_or_else(|| {
                        Error::InvalidArgument(format!("release {:?} has no date", r.label))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if dates.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidArgument("release dates must be strictly increasing".into()));
            }
            let first = dates[0];
            Ok(dates
                .iter()
                .map(|d| (*d - first).num_days() as f64 / 365.25)
                .collect())
        }
    }
}

fn per_release(graph: &DependencyGraph, config: &EvolutionConfig, seed: u64) -> IndexMap<String, Cell> {
    let mut m: IndexMap<String, Cell> = IndexMap::new();
    let s = graph.summary();
    m.insert("packages".into(), Cell::Value(s.nodes as f64));
    m.insert("interacting_packages".into(), Cell::Value(s.interacting_nodes as f64));
    m.insert("dep_edges".into(), Cell::Value(s.dep_edges as f64));
    m.insert("con_edges".into(), Cell::Value(s.con_edges as f64));
    m.insert(
        "dep_con_ratio".into(),
        if s.con_edges == 0 {
            Cell::missing("no conflict edges")
        } else {
            Cell::Value(s.dep_edges as f64 / s.con_edges as f64)
        },
    );
    m.insert(
        "non_interacting_fraction".into(),
        if s.nodes == 0 {
            Cell::missing("empty release")
        } else {
            Cell::Value(s.isolated_nodes as f64 / s.nodes as f64)
        },
    );

    // the observed runs reuse the seeds the ensembles use for the real graph,
    // so the reported q and fraction are exactly the ensembles' observed values
    let q_seed = seed::derive(seed, "modularity", 0);
    let view = symmetrized_view_with(graph, config.weighting, NodeScope::Interacting);
    match louvain(&view, config.louvain_restarts, seed::derive(q_seed, "observed", 0))
        .and_then(|p| summarize(graph, &p, config.major_threshold))
    {
        Ok(sum) => {
            let opt = |v: Option<f64>, why: &str| v.map_or_else(|| Cell::missing(why), Cell::Value);
            m.insert("louvain_q".into(), Cell::Value(sum.q));
            m.insert("major_modules".into(), Cell::Value(sum.major_modules as f64));
            m.insert("dep_within_fraction".into(), opt(sum.dep_within_fraction, "no dependency edges"));
            m.insert("con_within_fraction".into(), opt(sum.con_within_fraction, "no conflict edges"));
        }
        Err(e) => {
            for k in ["louvain_q", "major_modules", "dep_within_fraction", "con_within_fraction"] {
                m.insert(k.into(), Cell::Failed { error: e.to_string() });
            }
        }
    }
    let z_cell = |r: Result<crate::null_model::EnsembleResult>| match r {
        Ok(r) => r.stats.z.map_or_else(|| Cell::missing("null ensemble has zero spread"), Cell::Value),
        Err(e) => Cell::Failed { error: e.to_string() },
    };
    m.insert(
        "modularity_z".into(),
        if config.ensembles {
            let stat = Statistic::LouvainQ {
                restarts: config.louvain_restarts,
                weighting: config.weighting,
            };
            z_cell(ensemble(graph, config.modularity_randomizations, stat, config.swaps_per_edge, q_seed))
        } else {
            Cell::missing("ensembles disabled")
        },
    );

    let i_seed = seed::derive(seed, "installation", 0);
    m.insert(
        "mean_installed_fraction".into(),
        Cell::from_result(
            run_replicates_with(
                graph,
                config.install_replicates,
                seed::derive(i_seed, "observed", 0),
                config.conflicts,
            )
            .map(|r| r.stats.mean),
        ),
    );
    m.insert(
        "installation_z".into(),
        if config.ensembles {
            z_cell(modularity_effect(
                graph,
                config.install_networks,
                config.install_replicates,
                config.swaps_per_edge,
                i_seed,
                config.conflicts,
            ))
        } else {
            Cell::missing("ensembles disabled")
        },
    );
    m
}

fn fit_trend(metric: &str, model: TrendModel, variant: Variant, rows: &[ReleaseRow]) -> TrendTest {
    let rows = match variant {
        Variant::AllReleases => rows,
        Variant::DropLastRelease => &rows[..rows.len() - 1],
    };
    let mut series = Vec::with_capacity(rows.len());
    let mut failed = Vec::new();
    for r in rows {
        match &r.metrics[metric] {
            Cell::Value(v) => series.push((r.x, *v)),
            Cell::Failed { .. } => failed.push(r.label.as_str()),
            Cell::Missing { .. } => {}
        }
    }
    let n = series.len();
    let outcome = if !failed.is_empty() {
        TrendOutcome::Failed {
            error: format!("metric failed for release(s) {}", failed.join(", ")),
        }
    } else if n < 3 {
        TrendOutcome::Skipped {
            reason: format!("{n} point(s); a trend needs at least 3"),
        }
    } else {
        match regress(&series, model) {
            Ok(fit) => TrendOutcome::Fitted { fit },
            Err(e) => TrendOutcome::Failed { error: e.to_string() },
        }
    };
    TrendTest {
        metric: metric.to_owned(),
        model,
        variant,
        n,
        outcome,
    }
}

/// Metrics for every release plus a trend test per metric series.
///
/// Per-release work runs in parallel; release `i` draws its seeds from
/// `derive(seed, "release", i)`, so the report depends only on the inputs.
pub fn evolution_report(releases: &[Release], config: &EvolutionConfig, seed: u64) -> Result<EvolutionReport> {
    if releases.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: releases.len(),
        });
    }
    let xs = x_values(releases, config.x_axis)?;
    let mut metrics: Vec<IndexMap<String, Cell>> = releases
        .par_iter()
        .enumerate()
        .map(|(i, r)| per_release(&r.graph, config, seed::derive(seed, "release", i as u64)))
        .collect();

    for (i, m) in metrics.iter_mut().enumerate() {
        let turnover = if i == 0 {
            None
        } else {
            Some(release_diff(&releases[i - 1].graph, &releases[i].graph))
        };
        let cells: [(&str, Option<usize>); 4] = match &turnover {
            None => [("deprecated", None), ("kept", None), ("kept_version_changed", None), ("new", None)],
            Some(d) => [
                ("deprecated", Some(d.deprecated.len())),
                ("kept", Some(d.kept.len())),
                ("kept_version_changed", Some(d.kept_version_changed)),
                ("new", Some(d.new.len())),
            ],
        };
        for (k, v) in cells {
            m.insert(
                k.into(),
                v.map_or_else(|| Cell::missing("first release"), |v| Cell::Value(v as f64)),
            );
        }
        m.sort_by_cached_key(|k, _| METRICS.iter().position(|(name, _)| name == k));
    }

    let rows: Vec<ReleaseRow> = releases
        .iter()
        .zip(metrics)
        .zip(xs)
        .enumerate()
        .map(|(i, ((r, metrics), x))| ReleaseRow {
            label: r.label.clone(),
            ordinal: i + 1,
            date: r.date,
            x,
            metrics,
        })
        .collect();

    let mut variants = vec![Variant::AllReleases];
    if config.drop_last_release {
        variants.push(Variant::DropLastRelease);
    }
    let trends = METRICS
        .iter()
        .flat_map(|&(metric, model)| {
            let rows = &rows;
            variants.iter().map(move |&v| fit_trend(metric, model, v, rows))
        })
        .collect();
    Ok(EvolutionReport { releases: rows, trends })
}
