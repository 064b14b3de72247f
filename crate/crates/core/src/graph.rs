//! Directed two-relation package graph.
//!
//! A [`DependencyGraph`] holds one node per package and two independent
//! directed edge sets: dependencies (`i -> j`: `j` must be installed for `i`
//! to work) and conflicts (`i -> j`: `i` cannot be installed once `j` is).
//! Graphs are immutable once built; use [`GraphBuilder`] to construct them.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Interned package identifier, dense in `0..graph.node_count()`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    #[serde(rename = "dep")]
    Dependency,
    #[serde(rename = "con")]
    Conflict,
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeKind::Dependency => "dep",
            EdgeKind::Conflict => "con",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    In,
    Out,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::In => "in",
            Direction::Out => "out",
        })
    }
}

pub type Edge = (NodeId, NodeId);

/// Compressed adjacency: neighbours of node `i` are `targets[offsets[i]..offsets[i+1]]`.
#[derive(Debug, Clone, Default)]
struct Adjacency {
    offsets: Vec<u32>,
    targets: Vec<NodeId>,
}

impl Adjacency {
    fn build(n: usize, pairs: impl Iterator<Item = (NodeId, NodeId)>) -> Self {
        let mut buckets: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        for (from, to) in pairs {
            buckets[from.index()].push(to);
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for mut b in buckets {
            b.sort_unstable();
            targets.extend(b);
            offsets.push(targets.len() as u32);
        }
        Adjacency { offsets, targets }
    }

    #[inline]
    fn of(&self, node: NodeId) -> &[NodeId] {
        let i = node.index();
        &self.targets[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }
}

#[derive(Debug, Clone)]
pub struct DependencyGraph {
    names: Vec<String>,
    versions: Vec<Option<String>>,
    index: HashMap<String, NodeId>,
    dep_edges: Vec<Edge>,
    con_edges: Vec<Edge>,
    dep_out: Adjacency,
    dep_in: Adjacency,
    con_out: Adjacency,
    con_in: Adjacency,
}

impl PartialEq for DependencyGraph {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names
            && self.versions == other.versions
            && self.dep_edges == other.dep_edges
            && self.con_edges == other.con_edges
    }
}

impl DependencyGraph {
    fn assemble(
        names: Vec<String>,
        versions: Vec<Option<String>>,
        index: HashMap<String, NodeId>,
        mut dep_edges: Vec<Edge>,
        mut con_edges: Vec<Edge>,
    ) -> Self {
        dep_edges.sort_unstable();
        dep_edges.dedup();
        con_edges.sort_unstable();
        con_edges.dedup();
        let n = names.len();
        let dep_out = Adjacency::build(n, dep_edges.iter().copied());
        let dep_in = Adjacency::build(n, dep_edges.iter().map(|&(a, b)| (b, a)));
        let con_out = Adjacency::build(n, con_edges.iter().copied());
        let con_in = Adjacency::build(n, con_edges.iter().map(|&(a, b)| (b, a)));
        DependencyGraph {
            names,
            versions,
            index,
            dep_edges,
            con_edges,
            dep_out,
            dep_in,
            con_out,
            con_in,
        }
    }

    /// Same nodes and conflicts, new dependency edge set.
    pub(crate) fn with_dep_edges(&self, dep_edges: Vec<Edge>) -> Self {
        Self::assemble(
            self.names.clone(),
            self.versions.clone(),
            self.index.clone(),
            dep_edges,
            self.con_edges.clone(),
        )
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = NodeId> + '_ {
        (0..self.names.len() as u32).map(NodeId)
    }

    pub fn name(&self, node: NodeId) -> &str {
        &self.names[node.index()]
    }

    pub fn version(&self, node: NodeId) -> Option<&str> {
        self.versions[node.index()].as_deref()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn node(&self, name: &str) -> Result<NodeId> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownNode(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    /// Dependency edges, sorted by (from, to).
    pub fn dep_edges(&self) -> &[Edge] {
        &self.dep_edges
    }

    /// Conflict edges, sorted by (from, to).
    pub fn con_edges(&self) -> &[Edge] {
        &self.con_edges
    }

    pub fn edges(&self, kind: EdgeKind) -> &[Edge] {
        match kind {
            EdgeKind::Dependency => &self.dep_edges,
            EdgeKind::Conflict => &self.con_edges,
        }
    }

    /// Neighbours of `node` along edges of `kind` in `direction`, sorted.
    pub fn neighbors(&self, node: NodeId, kind: EdgeKind, direction: Direction) -> &[NodeId] {
        match (kind, direction) {
            (EdgeKind::Dependency, Direction::Out) => self.dep_out.of(node),
            (EdgeKind::Dependency, Direction::In) => self.dep_in.of(node),
            (EdgeKind::Conflict, Direction::Out) => self.con_out.of(node),
            (EdgeKind::Conflict, Direction::In) => self.con_in.of(node),
        }
    }

    /// Packages `node` depends on directly.
    #[inline]
    pub fn dependencies(&self, node: NodeId) -> &[NodeId] {
        self.dep_out.of(node)
    }

    /// Packages `node` declares a conflict with.
    #[inline]
    pub fn conflicts(&self, node: NodeId) -> &[NodeId] {
        self.con_out.of(node)
    }

    /// Packages declaring a conflict with `node`.
    #[inline]
    pub fn conflicted_by(&self, node: NodeId) -> &[NodeId] {
        self.con_in.of(node)
    }

    pub fn has_edge(&self, kind: EdgeKind, from: NodeId, to: NodeId) -> bool {
        self.neighbors(from, kind, Direction::Out)
            .binary_search(&to)
            .is_ok()
    }

    pub fn degree_of(&self, node: NodeId, kind: EdgeKind, direction: Direction) -> usize {
        self.neighbors(node, kind, direction).len()
    }

    /// Degree of the package called `name`.
    pub fn degree(&self, name: &str, kind: EdgeKind, direction: Direction) -> Result<usize> {
        Ok(self.degree_of(self.node(name)?, kind, direction))
    }

    /// True when the node has at least one dependency or conflict edge.
    pub fn is_interacting(&self, node: NodeId) -> bool {
        !(self.dep_out.of(node).is_empty()
            && self.dep_in.of(node).is_empty()
            && self.con_out.of(node).is_empty()
            && self.con_in.of(node).is_empty())
    }

    pub fn interacting_nodes(&self) -> Vec<NodeId> {
        self.nodes().filter(|&n| self.is_interacting(n)).collect()
    }

    /// Every node reachable from `node` through dependency edges, excluding
    /// `node` itself.
    pub fn dependency_closure_of(&self, node: NodeId) -> BTreeSet<NodeId> {
        let mut seen = vec![false; self.node_count()];
        seen[node.index()] = true;
        let mut stack = vec![node];
        let mut out = BTreeSet::new();
        while let Some(u) = stack.pop() {
            for &v in self.dependencies(u) {
                if !seen[v.index()] {
                    seen[v.index()] = true;
                    out.insert(v);
                    stack.push(v);
                }
            }
        }
        out
    }

    /// Names in the dependency closure of the package called `name`.
    pub fn dependency_closure(&self, name: &str) -> Result<BTreeSet<String>> {
        let node = self.node(name)?;
        Ok(self
            .dependency_closure_of(node)
            .into_iter()
            .map(|n| self.name(n).to_string())
            .collect())
    }

    pub fn summary(&self) -> GraphSummary {
        let interacting = self.nodes().filter(|&n| self.is_interacting(n)).count();
        GraphSummary {
            nodes: self.node_count(),
            dep_edges: self.dep_edges.len(),
            con_edges: self.con_edges.len(),
            interacting_nodes: interacting,
            isolated_nodes: self.node_count() - interacting,
        }
    }

    /// Serialize to the edge-list interchange format. Packages with no edges
    /// are written as `NODE` lines so the node set survives a round trip.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for n in self.nodes().filter(|&n| !self.is_interacting(n)) {
            let _ = writeln!(out, "NODE {}", self.name(n));
        }
        for &(a, b) in &self.dep_edges {
            let _ = writeln!(out, "DEP {} {}", self.name(a), self.name(b));
        }
        for &(a, b) in &self.con_edges {
            let _ = writeln!(out, "CON {} {}", self.name(a), self.name(b));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub nodes: usize,
    pub dep_edges: usize,
    pub con_edges: usize,
    pub interacting_nodes: usize,
    pub isolated_nodes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Insert {
    Added,
    Duplicate,
    SelfLoop,
}

/// Incremental constructor for [`DependencyGraph`]. Self-loops are refused
/// and duplicate edges collapse.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    names: Vec<String>,
    versions: Vec<Option<String>>,
    index: HashMap<String, NodeId>,
    dep: HashSet<Edge>,
    con: HashSet<Edge>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Intern `name`, returning the existing id if already present.
    pub fn add_node(&mut self, name: &str) -> NodeId {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = NodeId(self.names.len() as u32);
        self.names.push(name.to_string());
        self.versions.push(None);
        self.index.insert(name.to_string(), id);
        id
    }

    pub fn set_version(&mut self, node: NodeId, version: Option<String>) {
        self.versions[node.index()] = version;
    }

    pub fn node(&self, name: &str) -> Option<NodeId> {
        self.index.get(name).copied()
    }

    pub fn add_edge(&mut self, kind: EdgeKind, from: NodeId, to: NodeId) -> Insert {
        if from == to {
            return Insert::SelfLoop;
        }
        let set = match kind {
            EdgeKind::Dependency => &mut self.dep,
            EdgeKind::Conflict => &mut self.con,
        };
        if set.insert((from, to)) {
            Insert::Added
        } else {
            Insert::Duplicate
        }
    }

    pub fn build(self) -> DependencyGraph {
        DependencyGraph::assemble(
            self.names,
            self.versions,
            self.index,
            self.dep.into_iter().collect(),
            self.con.into_iter().collect(),
        )
    }
}

/// Parse the edge-list interchange format: `DEP <from> <to>`, `CON <from> <to>`
/// and `NODE <name>` lines, with `#` comments.
pub fn read_edge_list(text: &str) -> Result<DependencyGraph> {
    let mut builder = GraphBuilder::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            [] => {}
            ["NODE", name] => {
                builder.add_node(name);
            }
            [kind @ ("DEP" | "CON"), from, to] => {
                if from == to {
                    return Err(Error::SelfLoop {
                        line: line_no,
                        name: from.to_string(),
                    });
                }
                let kind = if *kind == "DEP" {
                    EdgeKind::Dependency
                } else {
                    EdgeKind::Conflict
                };
                let a = builder.add_node(from);
                let b = builder.add_node(to);
                builder.add_edge(kind, a, b);
            }
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!(
                        "expected `DEP <from> <to>`, `CON <from> <to>` or `NODE <name>`, got {:?}",
                        raw.trim()
                    ),
                })
            }
        }
    }
    Ok(builder.build())
}

/// How reciprocal dependencies `i -> j`, `j -> i` are weighted in the
/// undirected projection.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReciprocalWeight {
    /// Weight equals the number of directed edges (1 or 2).
    #[default]
    Count,
    /// Every connected pair has weight 1.
    Collapse,
}

/// Which nodes appear in the undirected projection.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeScope {
    #[default]
    All,
    /// Only nodes with at least one dependency or conflict edge.
    Interacting,
}

/// Undirected weighted projection of the dependency relation.
///
/// Local node `i` corresponds to graph node `origin[i]`. Edges are stored
/// once with `a < b`.
#[derive(Debug, Clone, PartialEq)]
pub struct UndirectedWeightedGraph {
    origin: Vec<NodeId>,
    edges: Vec<(u32, u32, u32)>,
}

impl UndirectedWeightedGraph {
    /// Build directly from local edges. Duplicate pairs accumulate weight.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (u32, u32, u32)>) -> Result<Self> {
        let mut acc: HashMap<(u32, u32), u32> = HashMap::new();
        for (a, b, w) in edges {
            if a as usize >= n || b as usize >= n {
                return Err(Error::InvalidArgument(format!(
                    "edge ({a}, {b}) out of range for {n} nodes"
                )));
            }
            if a == b || w == 0 {
                return Err(Error::InvalidArgument(format!(
                    "edge ({a}, {b}, {w}) must join distinct nodes with positive weight"
                )));
            }
            *acc.entry((a.min(b), a.max(b))).or_default() += w;
        }
        let mut edges: Vec<_> = acc.into_iter().map(|((a, b), w)| (a, b, w)).collect();
        edges.sort_unstable();
        Ok(UndirectedWeightedGraph {
            origin: (0..n as u32).map(NodeId).collect(),
            edges,
        })
    }

    pub fn node_count(&self) -> usize {
        self.origin.len()
    }

    pub fn origin(&self) -> &[NodeId] {
        &self.origin
    }

    pub fn edges(&self) -> &[(u32, u32, u32)] {
        &self.edges
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.iter().map(|e| u64::from(e.2)).sum()
    }

    /// Weighted degree (strength) of each local node.
    pub fn strengths(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.node_count()];
        for &(a, b, w) in &self.edges {
            s[a as usize] += f64::from(w);
            s[b as usize] += f64::from(w);
        }
        s
    }
}

/// Undirected projection of all dependency edges, conflicts excluded, with
/// reciprocal pairs weighted 2.
pub fn symmetrized_dependency_view(graph: &DependencyGraph) -> UndirectedWeightedGraph {
    symmetrized_view_with(graph, ReciprocalWeight::Count, NodeScope::All)
}

pub fn symmetrized_view_with(
    graph: &DependencyGraph,
    weighting: ReciprocalWeight,
    scope: NodeScope,
) -> UndirectedWeightedGraph {
    let origin: Vec<NodeId> = match scope {
        NodeScope::All => graph.nodes().collect(),
        NodeScope::Interacting => graph.interacting_nodes(),
    };
    let mut local = vec![u32::MAX; graph.node_count()];
    for (i, n) in origin.iter().enumerate() {
        local[n.index()] = i as u32;
    }
    let mut acc: HashMap<(u32, u32), u32> = HashMap::new();
    for &(a, b) in graph.dep_edges() {
        let (la, lb) = (local[a.index()], local[b.index()]);
        let w = acc.entry((la.min(lb), la.max(lb))).or_default();
        *w = match weighting {
            ReciprocalWeight::Count => *w + 1,
            ReciprocalWeight::Collapse => 1,
        };
    }
    let mut edges: Vec<_> = acc.into_iter().map(|((a, b), w)| (a, b, w)).collect();
    edges.sort_unstable();
    UndirectedWeightedGraph { origin, edges }
}
