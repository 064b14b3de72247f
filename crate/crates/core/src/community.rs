//! Modularity and Louvain community detection on the undirected dependency
//! projection.
//!
//! Modularity is the weighted Newman–Girvan quality
//! `Q = Σ_c [ e_c / m − (a_c / 2m)² ]`, where `m` is the total edge weight,
//! `e_c` the weight inside module `c` and `a_c` the summed strength of its
//! nodes. Resolution is fixed at 1.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DependencyGraph, EdgeKind, NodeId, UndirectedWeightedGraph};
use crate::seed;

/// Assignment of one Louvain aggregation level, expressed on the original
/// nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub assignment: Vec<usize>,
    pub q: f64,
}

/// Node-to-module assignment over the nodes of an undirected view.
///
/// `assignment[i]` is the module of local node `i`, which is graph node
/// `nodes[i]`. Module ids are dense and numbered by first appearance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub nodes: Vec<NodeId>,
    pub assignment: Vec<usize>,
    pub q: f64,
    pub levels: Vec<Level>,
}

impl Partition {
    pub fn module_count(&self) -> usize {
        self.assignment.iter().max().map_or(0, |m| m + 1)
    }

    pub fn module_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.module_count()];
        for &m in &self.assignment {
            sizes[m] += 1;
        }
        sizes
    }

    /// Module of each graph node, `None` for nodes outside the partition.
    pub fn module_by_node(&self, node_count: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; node_count];
        for (&n, &m) in self.nodes.iter().zip(&self.assignment) {
            if n.index() < node_count {
                out[n.index()] = Some(m);
            }
        }
        out
    }
}

/// Renumber module ids densely by order of first appearance.
pub fn canonical_labels(assignment: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    assignment
        .iter()
        .map(|&m| {
            let next = map.len();
            *map.entry(m).or_insert(next)
        })
        .collect()
}

/// Weighted modularity of `assignment` (one module id per node of `ugraph`).
pub fn modularity(ugraph: &UndirectedWeightedGraph, assignment: &[usize]) -> Result<f64> {
    if assignment.len() != ugraph.node_count() {
        return Err(Error::Coverage(format!(
            "{} nodes with an assignment of length {}",
            ugraph.node_count(),
            assignment.len()
        )));
    }
    let m = ugraph.total_weight() as f64;
    if m == 0.0 {
        return Err(Error::EmptyGraph);
    }
    let labels = canonical_labels(assignment);
    let k = labels.iter().max().map_or(0, |x| x + 1);
    let mut inside = vec![0.0; k];
    let mut total = vec![0.0; k];
    for &(a, b, w) in ugraph.edges() {
        let (ca, cb) = (labels[a as usize], labels[b as usize]);
        let w = f64::from(w);
        if ca == cb {
            inside[ca] += w;
        }
        total[ca] += w;
        total[cb] += w;
    }
    Ok(inside
        .iter()
        .zip(&total)
        .map(|(e, a)| e / m - (a / (2.0 * m)).powi(2))
        .sum())
}

/// Working graph for one Louvain level; may carry self-loops after
/// aggregation.
struct LevelGraph {
    adj: Vec<Vec<(usize, f64)>>,
    self_loop: Vec<f64>,
    strength: Vec<f64>,
    /// total weight m (each edge once, self-loops once)
    m: f64,
}

impl LevelGraph {
    fn from_undirected(g: &UndirectedWeightedGraph) -> Self {
        let n = g.node_count();
        let mut adj = vec![Vec::new(); n];
        for &(a, b, w) in g.edges() {
            let w = f64::from(w);
            adj[a as usize].push((b as usize, w));
            adj[b as usize].push((a as usize, w));
        }
        Self::finish(adj, vec![0.0; n])
    }

    fn finish(adj: Vec<Vec<(usize, f64)>>, self_loop: Vec<f64>) -> Self {
        let strength: Vec<f64> = adj
            .iter()
            .zip(&self_loop)
            .map(|(nbrs, s)| nbrs.iter().map(|e| e.1).sum::<f64>() + 2.0 * s)
            .collect();
        let m = strength.iter().sum::<f64>() / 2.0;
        LevelGraph {
            adj,
            self_loop,
            strength,
            m,
        }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    /// Greedy local moving. Returns the community of each node and whether
    /// any node moved.
    fn local_moves(&self, rng: &mut seed::Rng) -> (Vec<usize>, bool) {
        use rand::seq::SliceRandom;

        let n = self.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut rank = vec![0usize; n];
        for (r, &v) in order.iter().enumerate() {
            rank[v] = r;
        }
        // neighbours scanned in visit order so ties go to the first one met
        let adj: Vec<Vec<(usize, f64)>> = self
            .adj
            .iter()
            .map(|nbrs| {
                let mut v = nbrs.clone();
                v.sort_by_key(|&(j, _)| rank[j]);
                v
            })
            .collect();

        let mut comm: Vec<usize> = (0..n).collect();
        let mut tot = self.strength.clone();
        let mut link = vec![0.0f64; n];
        let mut seen = vec![false; n];
        let mut touched: Vec<usize> = Vec::new();
        let two_m = 2.0 * self.m;
        let mut any = false;

        loop {
            let mut moved = false;
            for &i in &order {
                let ci = comm[i];
                let ki = self.strength[i];
                tot[ci] -= ki;

                touched.clear();
                touched.push(ci);
                seen[ci] = true;
                for &(j, w) in &adj[i] {
                    let cj = comm[j];
                    if !seen[cj] {
                        seen[cj] = true;
                        touched.push(cj);
                    }
                    link[cj] += w;
                }

                // gain scaled by 2m²: 2m·k_{i,C} − Σ_tot(C)·k_i
                let gain = |c: usize| two_m * link[c] - tot[c] * ki;
                let mut best = ci;
                let mut best_gain = gain(ci);
                for &c in &touched[1..] {
                    let g = gain(c);
                    if g > best_gain {
                        best = c;
                        best_gain = g;
                    }
                }
                for &c in &touched {
                    link[c] = 0.0;
                    seen[c] = false;
                }
                tot[best] += ki;
                if best != ci {
                    comm[i] = best;
                    moved = true;
                    any = true;
                }
            }
            if !moved {
                break;
            }
        }
        (comm, any)
    }

    /// Collapse each community into one node. `labels` must be dense.
    fn aggregate(&self, labels: &[usize], k: usize) -> LevelGraph {
        let mut self_loop = vec![0.0; k];
        let mut acc: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); k];
        for (i, nbrs) in self.adj.iter().enumerate() {
            let ci = labels[i];
            self_loop[ci] += self.self_loop[i];
            for &(j, w) in nbrs {
                let cj = labels[j];
                if ci == cj {
                    // each internal edge is seen from both ends
                    self_loop[ci] += w / 2.0;
                } else {
                    *acc[ci].entry(cj).or_insert(0.0) += w;
                }
            }
        }
        let adj = acc.into_iter().map(|m| m.into_iter().collect()).collect();
        Self::finish(adj, self_loop)
    }
}

/// One Louvain run with a fixed seed.
fn louvain_once(ugraph: &UndirectedWeightedGraph, seed: u64) -> Result<Partition> {
    let mut rng = seed::rng(seed);
    let n = ugraph.node_count();
    let mut graph = LevelGraph::from_undirected(ugraph);
    let mut membership: Vec<usize> = (0..n).collect();
    let mut levels = Vec::new();

    loop {
        let (comm, moved) = graph.local_moves(&mut rng);
        if !moved {
            break;
        }
        let labels = canonical_labels(&comm);
        let k = labels.iter().max().map_or(0, |x| x + 1);
        for m in membership.iter_mut() {
            *m = labels[*m];
        }
        let membership_canon = canonical_labels(&membership);
        let q = modularity(ugraph, &membership_canon)?;
        levels.push(Level {
            assignment: membership_canon,
            q,
        });
        if k == graph.len() {
            break;
        }
        graph = graph.aggregate(&labels, k);
    }

    let mut assignment = canonical_labels(&membership);
    let mut q = modularity(ugraph, &assignment)?;
    if q < 0.0 {
        // never worse than the trivial one-module partition
        assignment = vec![0; n];
        q = 0.0;
    }
    Ok(Partition {
        nodes: ugraph.origin().to_vec(),
        assignment,
        q,
        levels,
    })
}

/// Louvain with `restarts` independently seeded runs; the partition with the
/// highest Q is returned (earliest restart on ties).
pub fn louvain(ugraph: &UndirectedWeightedGraph, restarts: usize, seed: u64) -> Result<Partition> {
    if ugraph.total_weight() == 0 {
        return Err(Error::EmptyGraph);
    }
    if restarts == 0 {
        return Err(Error::InvalidArgument("restarts must be >= 1".into()));
    }
    let runs: Vec<Partition> = (0..restarts)
        .into_par_iter()
        .map(|r| louvain_once(ugraph, seed::derive(seed, "louvain", r as u64)))
        .collect::<Result<_>>()?;
    let mut best: Option<Partition> = None;
    for p in runs {
        if best.as_ref().is_none_or(|b| p.q > b.q) {
            best = Some(p);
        }
    }
    Ok(best.unwrap())
}

/// Number of modules holding at least `threshold` of the partition's nodes.
pub fn major_module_count(partition: &Partition, threshold: f64) -> Result<usize> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "threshold must lie in (0, 1), got {threshold}"
        )));
    }
    let cutoff = threshold * partition.assignment.len() as f64;
    Ok(partition
        .module_sizes()
        .into_iter()
        .filter(|&s| s as f64 >= cutoff)
        .count())
}

/// Fraction of `kind` edges whose endpoints share a module; `None` when the
/// graph has no edges of that kind.
pub fn within_module_fraction(
    graph: &DependencyGraph,
    partition: &Partition,
    kind: EdgeKind,
) -> Result<Option<f64>> {
    let edges = graph.edges(kind);
    if edges.is_empty() {
        return Ok(None);
    }
    let module = partition.module_by_node(graph.node_count());
    let mut inside = 0usize;
    for &(a, b) in edges {
        let lookup = |n: NodeId| {
            module[n.index()].ok_or_else(|| {
                Error::Coverage(format!("{kind} edge endpoint {:?}", graph.name(n)))
            })
        };
        if lookup(a)? == lookup(b)? {
            inside += 1;
        }
    }
    Ok(Some(inside as f64 / edges.len() as f64))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModuleSummary {
    pub q: f64,
    pub modules: usize,
    pub major_modules: usize,
    pub major_threshold: f64,
    /// Module sizes, largest first.
    pub sizes: Vec<usize>,
    pub dep_within_fraction: Option<f64>,
    pub con_within_fraction: Option<f64>,
    pub levels: Vec<f64>,
}

pub fn summarize(
    graph: &DependencyGraph,
    partition: &Partition,
    major_threshold: f64,
) -> Result<ModuleSummary> {
    let mut sizes = partition.module_sizes();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    Ok(ModuleSummary {
        q: partition.q,
        modules: partition.module_count(),
        major_modules: major_module_count(partition, major_threshold)?,
        major_threshold,
        sizes,
        dep_within_fraction: within_module_fraction(graph, partition, EdgeKind::Dependency)?,
        con_within_fraction: within_module_fraction(graph, partition, EdgeKind::Conflict)?,
        levels: partition.levels.iter().map(|l| l.q).collect(),
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::graph::{read_edge_list, symmetrized_dependency_view};
    use proptest::prelude::*;

    /// Best modularity over every set partition (restricted growth strings).
    pub(crate) fn exhaustive_optimum(g: &UndirectedWeightedGraph) -> f64 {
        let n = g.node_count();
        let mut best = f64::NEG_INFINITY;
        let mut rgs = vec![0usize; n];
        fn rec(i: usize, max: usize, rgs: &mut Vec<usize>, g: &UndirectedWeightedGraph, best: &mut f64) {
            if i == rgs.len() {
                let q = modularity(g, rgs).unwrap();
                if q > *best {
                    *best = q;
                }
                return;
            }
            for label in 0..=max + 1 {
                rgs[i] = label;
                rec(i + 1, max.max(label), rgs, g, best);
            }
        }
        if n == 0 {
            return 0.0;
        }
        rec(1, 0, &mut rgs, g, &mut best);
        best
    }

    pub(crate) fn undirected(n: usize, edges: &[(u32, u32)]) -> UndirectedWeightedGraph {
        UndirectedWeightedGraph::from_edges(n, edges.iter().map(|&(a, b)| (a, b, 1))).unwrap()
    }

    fn clique_edges(offset: u32, size: u32) -> Vec<(u32, u32)> {
        let mut e = Vec::new();
        for i in 0..size {
            for j in i + 1..size {
                e.push((offset + i, offset + j));
            }
        }
        e
    }

    #[test]
    fn single_module_has_zero_q() {
        let g = undirected(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert!(modularity(&g, &[0, 0, 0, 0]).unwrap().abs() < 1e-15);
    }

    #[test]
    fn two_disconnected_cliques_have_half() {
        let mut e = clique_edges(0, 4);
        e.extend(clique_edges(4, 4));
        let g = undirected(8, &e);
        // oracle: each module holds half the weight and half the strength,
        // so Q = 2 * (0.5 - 0.25)
        let q = modularity(&g, &[0, 0, 0, 0, 1, 1, 1, 1]).unwrap();
        assert!((q - 0.5).abs() < 1e-15);
    }

    #[test]
    fn modularity_errors() {
        let g = undirected(3, &[(0, 1)]);
        assert!(matches!(modularity(&g, &[0, 0]), Err(Error::Coverage(_))));
        let empty = undirected(2, &[]);
        assert!(matches!(modularity(&empty, &[0, 1]), Err(Error::EmptyGraph)));
        assert!(matches!(louvain(&empty, 1, 0), Err(Error::EmptyGraph)));
        assert!(matches!(louvain(&g, 0, 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn two_triangles() {
        let g = undirected(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]);
        let oracle = exhaustive_optimum(&g);
        assert!((oracle - 0.5).abs() < 1e-12);
        let p = louvain(&g, 10, 1).unwrap();
        assert_eq!(p.module_count(), 2);
        assert!((p.q - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ring_of_cliques_recovered() {
        let mut e = Vec::new();
        for c in 0..4 {
            e.extend(clique_edges(c * 8, 8));
            e.push((c * 8, ((c + 1) % 4) * 8 + 1));
        }
        let g = undirected(32, &e);
        let planted: Vec<usize> = (0..32).map(|i| i / 8).collect();
        let planted_q = modularity(&g, &planted).unwrap();
        let p = louvain(&g, 10, 7).unwrap();
        assert_eq!(p.module_count(), 4);
        assert_eq!(canonical_labels(&p.assignment), planted);
        assert!((p.q - planted_q).abs() < 1e-12);
    }

    #[test]
    fn complete_graph_has_no_structure() {
        let g = undirected(6, &clique_edges(0, 6));
        let p = louvain(&g, 10, 3).unwrap();
        assert!(p.q >= -1e-12);
        assert!(p.q <= 1e-12);
    }

    #[test]
    fn levels_are_monotone_and_q_recomputes() {
        let mut e = Vec::new();
        for c in 0..6u32 {
            e.extend(clique_edges(c * 5, 5));
            e.push((c * 5, ((c + 1) % 6) * 5 + 2));
        }
        let g = undirected(30, &e);
        for seed in 0..5 {
            let p = louvain(&g, 1, seed).unwrap();
            for w in p.levels.windows(2) {
                assert!(w[1].q >= w[0].q - 1e-12);
            }
            assert!((modularity(&g, &p.assignment).unwrap() - p.q).abs() < 1e-12);
        }
    }

    #[test]
    fn louvain_is_seed_deterministic() {
        let g = undirected(8, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (7, 0), (0, 4)]);
        assert_eq!(louvain(&g, 4, 9).unwrap(), louvain(&g, 4, 9).unwrap());
    }

    #[test]
    fn major_modules() {
        let mk = |assignment: Vec<usize>| Partition {
            nodes: (0..assignment.len() as u32).map(NodeId).collect(),
            assignment,
            q: 0.0,
            levels: vec![],
        };
        let p = mk((0..10).map(|i| i / 5).collect());
        assert_eq!(major_module_count(&p, 0.05).unwrap(), 2);
        let mut a = vec![0; 96];
        a.extend([1, 2, 3, 4]);
        assert_eq!(major_module_count(&mk(a), 0.05).unwrap(), 1);
        assert!(major_module_count(&p, 1.0).is_err());
        assert!(major_module_count(&p, 0.0).is_err());
    }

    #[test]
    fn within_fractions() {
        let g = read_edge_list("DEP a b\nDEP c d\nCON a b\nCON c d\nCON a c").unwrap();
        let view = symmetrized_dependency_view(&g);
        let p = Partition {
            nodes: view.origin().to_vec(),
            assignment: vec![0, 0, 1, 1],
            q: 0.0,
            levels: vec![],
        };
        assert_eq!(within_module_fraction(&g, &p, EdgeKind::Dependency).unwrap(), Some(1.0));
        let f = within_module_fraction(&g, &p, EdgeKind::Conflict).unwrap().unwrap();
        assert!((f - 2.0 / 3.0).abs() < 1e-15);

        let all_inside = Partition { assignment: vec![0, 0, 0, 0], ..p.clone() };
        assert_eq!(within_module_fraction(&g, &all_inside, EdgeKind::Conflict).unwrap(), Some(1.0));
        let g2 = read_edge_list("DEP a b\nCON a c\nCON b d\nDEP c d").unwrap();
        let p2 = Partition {
            nodes: symmetrized_dependency_view(&g2).origin().to_vec(),
            assignment: vec![0, 0, 1, 1],
            q: 0.0,
            levels: vec![],
        };
        assert_eq!(within_module_fraction(&g2, &p2, EdgeKind::Conflict).unwrap(), Some(0.0));

        let no_con = read_edge_list("DEP a b").unwrap();
        let p3 = Partition {
            nodes: vec![NodeId(0), NodeId(1)],
            assignment: vec![0, 0],
            q: 0.0,
            levels: vec![],
        };
        assert_eq!(within_module_fraction(&no_con, &p3, EdgeKind::Conflict).unwrap(), None);

        let partial = Partition { nodes: vec![NodeId(0)], assignment: vec![0], q: 0.0, levels: vec![] };
        assert!(matches!(
            within_module_fraction(&no_con, &partial, EdgeKind::Dependency),
            Err(Error::Coverage(_))
        ));
    }

    fn small_graph() -> impl Strategy<Value = UndirectedWeightedGraph> {
        (3usize..9).prop_flat_map(|n| {
            proptest::collection::vec((0..n as u32, 0..n as u32, 1u32..3), 1..20).prop_filter_map(
                "needs an edge",
                move |raw| {
                    let edges: Vec<_> = raw.into_iter().filter(|(a, b, _)| a != b).collect();
                    if edges.is_empty() {
                        None
                    } else {
                        UndirectedWeightedGraph::from_edges(n, edges).ok()
                    }
                },
            )
        })
    }

    proptest! {
        #[test]
        fn q_is_bounded_and_label_invariant(g in small_graph(), raw in proptest::collection::vec(0usize..4, 9)) {
            let assignment: Vec<usize> = raw[..g.node_count()].to_vec();
            let q = modularity(&g, &assignment).unwrap();
            prop_assert!((-1.0..=1.0).contains(&q));
            let relabeled: Vec<usize> = assignment.iter().map(|m| 10 + 3 * m).collect();
            prop_assert!((modularity(&g, &relabeled).unwrap() - q).abs() < 1e-15);
        }

        #[test]
        fn louvain_never_below_single_module(g in small_graph(), seed in any::<u64>()) {
            let p = louvain(&g, 2, seed).unwrap();
            prop_assert!(p.q >= -1e-12);
            prop_assert!(p.q <= exhaustive_optimum(&g) + 1e-12);
        }
    }
}
