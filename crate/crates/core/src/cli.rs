//! The `pkgnet` command line.
//!
//! Exit codes: 0 success, 1 usage, 2 unreadable or malformed input,
//! 3 failure of the analysis itself.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::community::{louvain, summarize};
use crate::config::{InputFormat, InputSpec, RunConfig};
use crate::control::{build_graph, parse_packages_index, Warning};
use crate::degree_stats::degree_report;
use crate::error::{Error, Result};
use crate::evolution::{evolution_report, Cell, EvolutionReport, Release, TrendOutcome};
use crate::graph::{read_edge_list, symmetrized_view_with, DependencyGraph, Direction, EdgeKind, NodeScope};
use crate::install::{modularity_effect, run_replicates_with};
use crate::null_model::{ensemble, Statistic};
use crate::output::{csv_document, fmt_f64, json_document, write_atomic, Header};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_COMPUTATION: i32 = 3;

/// Parse a flag value with the same spelling the config file uses.
fn serde_value<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_owned())).map_err(|e| e.to_string())
}

#[derive(Parser, Debug)]
#[command(name = "pkgnet", version, about = "Dependency/conflict network analysis of package archives")]
struct Cli {
    /// TOML run configuration; flags override its fields.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads (results do not depend on it).
    #[arg(long, short = 'j', global = true, env = "PKGNET_JOBS")]
    jobs: Option<usize>,
    /// Master seed; required by stochastic commands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Log more (repeat for debug output).
    #[arg(long, short = 'v', global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct InputArgs {
    /// Input file: a Packages index or an edge list.
    #[arg(long = "graph", visible_alias = "packages", value_name = "FILE")]
    inputs: Vec<PathBuf>,
    /// auto | packages | edges
    #[arg(long, value_parser = serde_value::<InputFormat>)]
    format: Option<InputFormat>,
    /// first_listed | all_alternatives
    #[arg(long, value_parser = serde_value::<crate::control::AlternativePolicy>)]
    alternatives: Option<crate::control::AlternativePolicy>,
    /// first_provider | all_providers | drop
    #[arg(long, value_parser = serde_value::<crate::control::VirtualPolicy>)]
    virtuals: Option<crate::control::VirtualPolicy>,
    /// Keep Pre-Depends as dependencies.
    #[arg(long)]
    pre_depends: Option<bool>,
    /// as_declared | symmetrized
    #[arg(long, value_parser = serde_value::<crate::control::ConflictDirection>)]
    conflict_direction: Option<crate::control::ConflictDirection>,
}

#[derive(Args, Debug, Default)]
struct CommunityArgs {
    /// Louvain restarts; the best partition is kept.
    #[arg(long)]
    restarts: Option<usize>,
    /// count | collapse
    #[arg(long, value_parser = serde_value::<crate::graph::ReciprocalWeight>)]
    weighting: Option<crate::graph::ReciprocalWeight>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Convert a Packages index to an edge list plus a JSON summary.
    Ingest {
        #[command(flatten)]
        input: InputArgs,
        /// Edge-list output (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON summary output (default: `<out>.summary.json`).
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Degree distributions and best fits.
    Stats {
        #[command(flatten)]
        input: InputArgs,
        /// binned | raw
        #[arg(long, value_parser = serde_value::<crate::degree_stats::FitMode>)]
        mode: Option<crate::degree_stats::FitMode>,
        /// Logarithmic bin base.
        #[arg(long)]
        base: Option<f64>,
        /// JSON output (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Louvain modules of the dependency projection.
    Community {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        louvain: CommunityArgs,
        /// Module size fraction that counts as major.
        #[arg(long)]
        threshold: Option<f64>,
        /// JSON output (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// CSV of package,module.
        #[arg(long)]
        partition_out: Option<PathBuf>,
    },
    /// Compare a statistic against degree-preserving rewired networks.
    Nullmodel {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        louvain: CommunityArgs,
        /// modularity | installation
        #[arg(long, default_value = "modularity")]
        statistic: String,
        /// Rewired networks in the ensemble.
        #[arg(long)]
        randomizations: Option<usize>,
        /// Installation replicates per network.
        #[arg(long)]
        replicates: Option<usize>,
        /// Edge swaps per edge when rewiring.
        #[arg(long)]
        swaps_per_edge: Option<usize>,
        /// as_declared | symmetric
        #[arg(long, value_parser = serde_value::<crate::install::ConflictMode>)]
        conflicts: Option<crate::install::ConflictMode>,
        /// JSON output (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// CSV of per-network statistic values.
        #[arg(long)]
        samples_out: Option<PathBuf>,
    },
    /// Random local installation replicates.
    Simulate {
        #[command(flatten)]
        input: InputArgs,
        /// Installation replicates.
        #[arg(long)]
        replicates: Option<usize>,
        /// as_declared | symmetric
        #[arg(long, value_parser = serde_value::<crate::install::ConflictMode>)]
        conflicts: Option<crate::install::ConflictMode>,
        /// Also compare against this many rewired networks.
        #[arg(long)]
        networks: Option<usize>,
        /// Edge swaps per edge when rewiring.
        #[arg(long)]
        swaps_per_edge: Option<usize>,
        /// JSON output (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// CSV of replicate,fraction,installed.
        #[arg(long)]
        replicates_out: Option<PathBuf>,
    },
    /// Per-release metrics and trend tests across releases.
    Evolve {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        louvain: CommunityArgs,
        /// Directory for report.json, metrics.csv and trends.csv.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// ordinal | date
        #[arg(long, value_parser = serde_value::<crate::evolution::XAxis>)]
        x_axis: Option<crate::evolution::XAxis>,
        /// Also fit trends without the newest release.
        #[arg(long)]
        drop_last_release: Option<bool>,
        /// Run the rewiring ensembles behind the z-scores.
        #[arg(long)]
        ensembles: Option<bool>,
        /// Rewired networks for the modularity z-score.
        #[arg(long)]
        randomizations: Option<usize>,
        /// Rewired networks for the installation z-score.
        #[arg(long)]
        networks: Option<usize>,
        /// Installation replicates per network.
        #[arg(long)]
        replicates: Option<usize>,
        /// Edge swaps per edge when rewiring.
        #[arg(long)]
        swaps_per_edge: Option<usize>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Ingest { .. } => "ingest",
            Command::Stats { .. } => "stats",
            Command::Community { .. } => "community",
            Command::Nullmodel { .. } => "nullmodel",
            Command::Simulate { .. } => "simulate",
            Command::Evolve { .. } => "evolve",
        }
    }

    fn stochastic(&self) -> bool {
        !matches!(self, Command::Ingest { .. } | Command::Stats { .. })
    }

    fn input(&self) -> &InputArgs {
        match self {
            Command::Ingest { input, .. }
            | Command::Stats { input, .. }
            | Command::Community { input, .. }
            | Command::Nullmodel { input, .. }
            | Command::Simulate { input, .. }
            | Command::Evolve { input, .. } => input,
        }
    }
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

macro_rules! set {
    ($cfg:expr, $field:ident, $value:expr) => {
        if let Some(v) = $value {
            $cfg.$field = v;
        }
    };
}

fn apply_overrides(cli: &Cli, cfg: &mut RunConfig) {
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.jobs.is_some() {
        cfg.jobs = cli.jobs;
    }
    let input = cli.command.input();
    if !input.inputs.is_empty() {
        cfg.inputs = input.inputs.iter().map(InputSpec::new).collect();
    }
    set!(cfg, format, input.format);
    set!(cfg.policy, alternatives, input.alternatives);
    set!(cfg.policy, virtuals, input.virtuals);
    set!(cfg.policy, include_pre_depends, input.pre_depends);
    set!(cfg.policy, conflict_direction, input.conflict_direction);
    let louvain_args = |cfg: &mut RunConfig, a: &CommunityArgs| {
        set!(cfg, louvain_restarts, a.restarts);
        set!(cfg, weighting, a.weighting);
    };
    match &cli.command {
        Command::Ingest { .. } => {}
        Command::Stats { mode, base, .. } => {
            set!(cfg, fit_mode, *mode);
            set!(cfg, bin_base, *base);
        }
        Command::Community { louvain, threshold, .. } => {
            louvain_args(cfg, louvain);
            set!(cfg, major_threshold, *threshold);
        }
        Command::Nullmodel {
            louvain,
            randomizations,
            replicates,
            swaps_per_edge,
            conflicts,
            ..
        } => {
            louvain_args(cfg, louvain);
            set!(cfg, modularity_randomizations, *randomizations);
            set!(cfg, install_replicates, *replicates);
            set!(cfg, swaps_per_edge, *swaps_per_edge);
            set!(cfg, conflicts, *conflicts);
        }
        Command::Simulate {
            replicates,
            conflicts,
            networks,
            swaps_per_edge,
            ..
        } => {
            set!(cfg, install_replicates, *replicates);
            set!(cfg, conflicts, *conflicts);
            set!(cfg, install_networks, *networks);
            set!(cfg, swaps_per_edge, *swaps_per_edge);
        }
        Command::Evolve {
            louvain,
            out_dir,
            x_axis,
            drop_last_release,
            ensembles,
            randomizations,
            networks,
            replicates,
            swaps_per_edge,
            ..
        } => {
            louvain_args(cfg, louvain);
            if out_dir.is_some() {
                cfg.output_dir = out_dir.clone();
            }
            set!(cfg, x_axis, *x_axis);
            set!(cfg, drop_last_release, *drop_last_release);
            set!(cfg, ensembles, *ensembles);
            set!(cfg, modularity_randomizations, *randomizations);
            set!(cfg, install_networks, *networks);
            set!(cfg, install_replicates, *replicates);
            set!(cfg, swaps_per_edge, *swaps_per_edge);
        }
    }
}

/// A loaded input with the SHA-256 of its bytes.
struct Loaded {
    graph: DependencyGraph,
    warnings: Vec<Warning>,
    format: InputFormat,
    sha256: String,
}

fn detect_format(text: &str) -> InputFormat {
    for line in text.lines() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let word = t.split_whitespace().next().unwrap_or("");
        return if matches!(word, "DEP" | "CON" | "NODE") {
            InputFormat::Edges
        } else {
            InputFormat::Packages
        };
    }
    InputFormat::Edges
}

fn load(spec: &InputSpec, cfg: &RunConfig) -> Result<Loaded> {
    let path = spec.path.display().to_string();
    let bytes = std::fs::read(&spec.path).map_err(|e| Error::io(&path, e))?;
    let sha256 = hex::encode(Sha256::digest(&bytes));
    let format = match cfg.format {
        InputFormat::Auto => detect_format(&String::from_utf8_lossy(&bytes)),
        f => f,
    };
    let with_path = |e: Error| match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{path}: {message}"),
        },
        other => other,
    };
    let (graph, warnings) = match format {
        InputFormat::Edges => {
            let text = std::str::from_utf8(&bytes).map_err(|e| Error::Parse {
                line: 0,
                message: format!("{path}: not UTF-8: {e}"),
            })?;
            (read_edge_list(text).map_err(with_path)?, Vec::new())
        }
        _ => {
            let index = parse_packages_index(&bytes).map_err(with_path)?;
            let built = build_graph(&index.records, &cfg.policy);
            let mut warnings = index.warnings;
            warnings.extend(built.warnings);
            (built.graph, warnings)
        }
    };
    if !warnings.is_empty() {
        log::warn!("{path}: {} warning(s)", warnings.len());
        for w in &warnings {
            log::debug!("{path}: {w:?}");
        }
    }
    Ok(Loaded {
        graph,
        warnings,
        format,
        sha256,
    })
}

struct Ctx {
    cfg: RunConfig,
    command: &'static str,
}

impl Ctx {
    fn header(&self, digests: &[String]) -> Header {
        Header::new(self.command, self.cfg.digest(self.command, digests), self.cfg.seed)
    }

    fn seed(&self) -> u64 {
        self.cfg.seed.expect("checked before dispatch")
    }

    fn single(&self) -> CliResult<Loaded> {
        match self.cfg.inputs.as_slice() {
            [one] => Ok(load(one, &self.cfg)?),
            [] => Err(Failure::Usage(format!("{}: an input is required (--graph FILE)", self.command))),
            _ => Err(Failure::Usage(format!("{}: expects exactly one input", self.command))),
        }
    }
}

/// Write `bytes` to `path`, or to stdout when no path was given.
fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, bytes),
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

/// One-line summary: stdout when the artifact went to a file, else stderr.
fn report(to_file: bool, line: String) {
    if to_file {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

#[derive(Serialize)]
struct IngestSummary<'a> {
    format: InputFormat,
    policy: crate::control::ResolutionPolicy,
    summary: crate::graph::GraphSummary,
    warnings: &'a [Warning],
}

fn run_ingest(ctx: &Ctx, out: Option<&Path>, summary: Option<&Path>) -> CliResult<()> {
    let l = ctx.single()?;
    let header = ctx.header(std::slice::from_ref(&l.sha256));
    emit(out, l.graph.to_edge_list().as_bytes())?;
    let s = l.graph.summary();
    let summary_path = summary
        .map(Path::to_path_buf)
        .or_else(|| out.map(|o| PathBuf::from(format!("{}.summary.json", o.display()))));
    if let Some(p) = &summary_path {
        let doc = IngestSummary {
            format: l.format,
            policy: ctx.cfg.policy,
            summary: s,
            warnings: &l.warnings,
        };
        write_atomic(p, &json_document(&header, &doc))?;
    }
    report(
        out.is_some(),
        format!(
            "ingest: {} packages, {} dependencies, {} conflicts, {} warnings",
            s.nodes,
            s.dep_edges,
            s.con_edges,
            l.warnings.len()
        ),
    );
    Ok(())
}

fn run_stats(ctx: &Ctx, out: Option<&Path>) -> CliResult<()> {
    let l = ctx.single()?;
    let header = ctx.header(std::slice::from_ref(&l.sha256));
    let mut reports = Vec::new();
    let mut best = Vec::new();
    for kind in [EdgeKind::Dependency, EdgeKind::Conflict] {
        for dir in [Direction::In, Direction::Out] {
            match degree_report(&l.graph, kind, dir, ctx.cfg.fit_mode, ctx.cfg.bin_base) {
                Ok(r) => {
                    if let Some(f) = &r.fit {
                        best.push(format!("{kind}-{dir}={}", variant_name(&f.best.model)));
                    }
                    reports.push(serde_json::to_value(&r).expect("json"));
                }
                Err(e @ Error::EmptyDistribution) => reports.push(serde_json::json!({
                    "kind": kind, "direction": dir, "error": e.to_string(),
                })),
                Err(e) => return Err(e.into()),
            }
        }
    }
    let doc = serde_json::json!({ "summary": l.graph.summary(), "degrees": reports });
    emit(out, &json_document(&header, &doc))?;
    let fits = if best.is_empty() { "none (too few degree values)".to_owned() } else { best.join(" ") };
    report(out.is_some(), format!("stats: best fits {fits}"));
    Ok(())
}

fn run_community(ctx: &Ctx, out: Option<&Path>, partition_out: Option<&Path>) -> CliResult<()> {
    let l = ctx.single()?;
    let header = ctx.header(std::slice::from_ref(&l.sha256));
    let view = symmetrized_view_with(&l.graph, ctx.cfg.weighting, NodeScope::Interacting);
    let partition = louvain(&view, ctx.cfg.louvain_restarts, ctx.seed())?;
    let summary = summarize(&l.graph, &partition, ctx.cfg.major_threshold)?;
    emit(out, &json_document(&header, &summary))?;
    if let Some(p) = partition_out {
        let rows = partition
            .nodes
            .iter()
            .zip(&partition.assignment)
            .map(|(&n, &m)| vec![l.graph.name(n).to_owned(), m.to_string()]);
        write_atomic(p, &csv_document(&header, &["package", "module"], rows))?;
    }
    report(
        out.is_some(),
        format!(
            "community: q = {:.6}, {} modules ({} major)",
            summary.q, summary.modules, summary.major_modules
        ),
    );
    Ok(())
}

fn samples_csv(header: &Header, samples: &[f64]) -> Vec<u8> {
    let rows = samples
        .iter()
        .enumerate()
        .map(|(i, &v)| vec![i.to_string(), fmt_f64(v)]);
    csv_document(header, &["network", "value"], rows)
}

fn fmt_z(z: Option<f64>) -> String {
    z.map_or_else(|| "undefined".to_owned(), |z| format!("{z:.3}"))
}

fn run_nullmodel(ctx: &Ctx, statistic: &str, out: Option<&Path>, samples_out: Option<&Path>) -> CliResult<()> {
    let stat = match statistic {
        "modularity" => Statistic::LouvainQ {
            restarts: ctx.cfg.louvain_restarts,
            weighting: ctx.cfg.weighting,
        },
        "installation" => Statistic::MeanInstalledFraction {
            replicates: ctx.cfg.install_replicates,
            conflicts: ctx.cfg.conflicts,
        },
        other => {
            return Err(Failure::Usage(format!(
                "unknown statistic {other:?} (expected modularity or installation)"
            )))
        }
    };
    let l = ctx.single()?;
    let header = ctx.header(std::slice::from_ref(&l.sha256));
    let r = ensemble(
        &l.graph,
        ctx.cfg.modularity_randomizations,
        stat,
        ctx.cfg.swaps_per_edge,
        ctx.seed(),
    )?;
    let doc = serde_json::json!({ "statistic": stat, "stats": r.stats });
    emit(out, &json_document(&header, &doc))?;
    if let Some(p) = samples_out {
        write_atomic(p, &samples_csv(&header, &r.samples))?;
    }
    report(
        out.is_some(),
        format!(
            "nullmodel: observed {:.6}, null {:.6} ± {:.6}, z {}, p {}",
            r.stats.observed,
            r.stats.null_mean,
            r.stats.null_std,
            fmt_z(r.stats.z),
            r.stats.p
        ),
    );
    Ok(())
}

fn run_simulate(ctx: &Ctx, effect: bool, out: Option<&Path>, replicates_out: Option<&Path>) -> CliResult<()> {
    let l = ctx.single()?;
    let header = ctx.header(std::slice::from_ref(&l.sha256));
    let run = run_replicates_with(&l.graph, ctx.cfg.install_replicates, ctx.seed(), ctx.cfg.conflicts)?;
    let effect = if effect {
        Some(modularity_effect(
            &l.graph,
            ctx.cfg.install_networks,
            ctx.cfg.install_replicates,
            ctx.cfg.swaps_per_edge,
            ctx.seed(),
            ctx.cfg.conflicts,
        )?)
    } else {
        None
    };
    let doc = serde_json::json!({
        "conflicts": ctx.cfg.conflicts,
        "fraction": run.stats,
        "effect": effect.as_ref().map(|e| &e.stats),
    });
    emit(out, &json_document(&header, &doc))?;
    if let Some(p) = replicates_out {
        let rows = run.records.iter().map(|r| {
            vec![r.replicate.to_string(), fmt_f64(r.fraction), r.installed.to_string()]
        });
        write_atomic(p, &csv_document(&header, &["replicate", "fraction", "installed"], rows))?;
    }
    let mut line = format!(
        "simulate: mean fraction {:.6} (std {:.6}) over {} replicates",
        run.stats.mean, run.stats.std, run.stats.n
    );
    if let Some(e) = &effect {
        line += &format!(", rewired z {} p {}", fmt_z(e.stats.z), e.stats.p);
    }
    report(out.is_some(), line);
    Ok(())
}

fn metrics_csv(header: &Header, rep: &EvolutionReport) -> Vec<u8> {
    let rows = rep.releases.iter().flat_map(|r| {
        r.metrics.iter().map(move |(name, cell)| {
            let (value, status, note) = match cell {
                Cell::Value(v) => (fmt_f64(*v), "ok", String::new()),
                Cell::Failed { error } => (String::new(), "failed", error.clone()),
                Cell::Missing { reason } => (String::new(), "missing", reason.clone()),
            };
            vec![
                r.label.clone(),
                r.ordinal.to_string(),
                fmt_f64(r.x),
                name.clone(),
                value,
                status.to_owned(),
                note,
            ]
        })
    });
    csv_document(header, &["release", "ordinal", "x", "metric", "value", "status", "note"], rows)
}

fn trends_csv(header: &Header, rep: &EvolutionReport) -> Vec<u8> {
    let rows = rep.trends.iter().map(|t| {
        let mut row = vec![t.metric.clone(), variant_name(&t.model), variant_name(&t.variant), t.n.to_string()];
        match &t.outcome {
            TrendOutcome::Fitted { fit } => {
                row.push("fitted".into());
                row.extend(
                    [fit.slope, fit.intercept, fit.r_squared, fit.f_stat]
                        .into_iter()
                        .map(fmt_f64),
                );
                row.push(fit.df.1.to_string());
                row.push(fmt_f64(fit.p_value));
                row.push(String::new());
            }
            TrendOutcome::Skipped { reason } => {
                row.push("skipped".into());
                row.extend(std::iter::repeat_n(String::new(), 6));
                row.push(reason.clone());
            }
            TrendOutcome::Failed { error } => {
                row.push("failed".into());
                row.extend(std::iter::repeat_n(String::new(), 6));
                row.push(error.clone());
            }
        }
        row
    });
    csv_document(
        header,
        &[
            "metric", "model", "variant", "n", "status", "slope", "intercept", "r_squared", "f_stat", "df2",
            "p_value", "note",
        ],
        rows,
    )
}

/// snake_case name of a unit enum variant, via serde.
fn variant_name<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        other => format!("{other:?}"),
    }
}

fn run_evolve(ctx: &Ctx) -> CliResult<()> {
    let Some(dir) = ctx.cfg.output_dir.clone() else {
        return Err(Failure::Usage("evolve: --out-dir (or output_dir in the config) is required".into()));
    };
    if ctx.cfg.inputs.len() < 2 {
        return Err(Failure::Usage("evolve: at least two releases are required".into()));
    }
    let mut releases = Vec::with_capacity(ctx.cfg.inputs.len());
    let mut digests = Vec::with_capacity(ctx.cfg.inputs.len());
    for spec in &ctx.cfg.inputs {
        let l = load(spec, &ctx.cfg)?;
        digests.push(l.sha256);
        releases.push(Release {
            label: spec.label(),
            date: spec.date,
            graph: l.graph,
        });
    }
    let header = ctx.header(&digests);
    let rep = evolution_report(&releases, &ctx.cfg.evolution(), ctx.seed())?;
    write_atomic(&dir.join("report.json"), &json_document(&header, &rep))?;
    write_atomic(&dir.join("metrics.csv"), &metrics_csv(&header, &rep))?;
    write_atomic(&dir.join("trends.csv"), &trends_csv(&header, &rep))?;
    let fitted = rep
        .trends
        .iter()
        .filter(|t| matches!(t.outcome, TrendOutcome::Fitted { .. }))
        .count();
    report(
        true,
        format!(
            "evolve: {} releases, {fitted}/{} trend tests fitted, written to {}",
            rep.releases.len(),
            rep.trends.len(),
            dir.display()
        ),
    );
    Ok(())
}

fn dispatch(cli: &Cli, cfg: RunConfig) -> CliResult<()> {
    let ctx = Ctx {
        cfg,
        command: cli.command.name(),
    };
    match &cli.command {
        Command::Ingest { out, summary, .. } => run_ingest(&ctx, out.as_deref(), summary.as_deref()),
        Command::Stats { out, .. } => run_stats(&ctx, out.as_deref()),
        Command::Community { out, partition_out, .. } => {
            run_community(&ctx, out.as_deref(), partition_out.as_deref())
        }
        Command::Nullmodel {
            statistic,
            out,
            samples_out,
            ..
        } => run_nullmodel(&ctx, statistic, out.as_deref(), samples_out.as_deref()),
        Command::Simulate {
            networks,
            out,
            replicates_out,
            ..
        } => run_simulate(&ctx, networks.is_some(), out.as_deref(), replicates_out.as_deref()),
        Command::Evolve { .. } => run_evolve(&ctx),
    }
}

fn exit_code(e: &Error) -> i32 {
    if e.is_input_error() {
        EXIT_INPUT
    } else {
        EXIT_COMPUTATION
    }
}

/// Run the CLI on `args` (program name first) and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();

    let mut cfg = match &cli.config {
        Some(p) => match RunConfig::load(p) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("pkgnet: {e}");
                return exit_code(&e);
            }
        },
        None => RunConfig::default(),
    };
    apply_overrides(&cli, &mut cfg);
    if let Err(e) = cfg.validate() {
        eprintln!("pkgnet: {e}");
        return EXIT_USAGE;
    }
    if cli.command.stochastic() && cfg.seed.is_none() {
        eprintln!(
            "pkgnet: {} is stochastic; pass --seed (or set seed in the config)",
            cli.command.name()
        );
        return EXIT_USAGE;
    }

    let result = match cfg.jobs {
        Some(j) => match rayon::ThreadPoolBuilder::new().num_threads(j).build() {
            Ok(pool) => pool.install(|| dispatch(&cli, cfg)),
            Err(e) => {
                eprintln!("pkgnet: cannot start {j} worker threads: {e}");
                return EXIT_COMPUTATION;
            }
        },
        None => dispatch(&cli, cfg),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("pkgnet: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Run(e)) => {
            let mut msg = e.to_string();
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                msg += &format!(": {s}");
                src = s.source();
            }
            eprintln!("pkgnet: {msg}");
            exit_code(&e)
        }
    }
}
