//! Brute-force oracles and fixture graphs shared by the integration tests.
//!
//! Everything here works on its own parse of the edge-list text so the
//! oracles do not share code with the library.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

/// Minimal directed two-relation graph parsed straight from edge-list text.
#[derive(Debug, Clone)]
pub struct Net {
    pub names: Vec<String>,
    pub deps: Vec<BTreeSet<usize>>,
    pub cons: Vec<BTreeSet<usize>>,
}

impl Net {
    pub fn parse(text: &str) -> Net {
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut net = Net {
            names: Vec::new(),
            deps: Vec::new(),
            cons: Vec::new(),
        };
        let mut id = |net: &mut Net, name: &str| -> usize {
            *index.entry(name.to_owned()).or_insert_with(|| {
                net.names.push(name.to_owned());
                net.deps.push(BTreeSet::new());
                net.cons.push(BTreeSet::new());
                net.names.len() - 1
            })
        };
        for line in text.lines() {
            let words: Vec<&str> = line.split('#').next().unwrap().split_whitespace().collect();
            match words.as_slice() {
                [] => {}
                ["NODE", a] => {
                    id(&mut net, a);
                }
                [kind @ ("DEP" | "CON"), a, b] => {
                    let (a, b) = (id(&mut net, a), id(&mut net, b));
                    if *kind == "DEP" {
                        net.deps[a].insert(b);
                    } else {
                        net.cons[a].insert(b);
                    }
                }
                other => panic!("bad fixture line {other:?}"),
            }
        }
        net
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn interacting(&self) -> Vec<bool> {
        let mut on = vec![false; self.len()];
        for a in 0..self.len() {
            for &b in self.deps[a].iter().chain(&self.cons[a]) {
                on[a] = true;
                on[b] = true;
            }
        }
        on
    }
}

const EXCLUDED: u8 = 0;
const REMAINING: u8 = 1;
const INSTALLED: u8 = 2;
const DISCARDED: u8 = 3;

/// Exact distribution of the number of installed packages at the end of the
/// installation process, by recursion over every draw order and every coin
/// flip. `symmetric` makes a conflict block in both directions.
pub struct InstallOracle<'a> {
    net: &'a Net,
    symmetric: bool,
    memo: HashMap<Vec<u8>, BTreeMap<usize, f64>>,
}

impl<'a> InstallOracle<'a> {
    pub fn new(net: &'a Net, symmetric: bool) -> Self {
        InstallOracle {
            net,
            symmetric,
            memo: HashMap::new(),
        }
    }

    pub fn initial(&self) -> Vec<u8> {
        self.net
            .interacting()
            .into_iter()
            .map(|on| if on { REMAINING } else { EXCLUDED })
            .collect()
    }

    /// State with `installed` (by name) preinstalled.
    pub fn with_installed(&self, installed: &[&str]) -> Vec<u8> {
        let mut s = self.initial();
        for name in installed {
            let i = self.net.names.iter().position(|n| n == name).unwrap();
            s[i] = INSTALLED;
        }
        s
    }

    pub fn distribution(&mut self, state: Vec<u8>) -> BTreeMap<usize, f64> {
        if let Some(d) = self.memo.get(&state) {
            return d.clone();
        }
        let remaining: Vec<usize> = (0..state.len()).filter(|&i| state[i] == REMAINING).collect();
        let mut out = BTreeMap::new();
        if remaining.is_empty() {
            out.insert(state.iter().filter(|&&s| s == INSTALLED).count(), 1.0);
        } else {
            let pick = 1.0 / remaining.len() as f64;
            for &p in &remaining {
                for (prob, next) in self.step(&state, p) {
                    for (k, q) in self.distribution(next) {
                        *out.entry(k).or_insert(0.0) += pick * prob * q;
                    }
                }
            }
        }
        self.memo.insert(state, out.clone());
        out
    }

    fn blocked(&self, state: &[u8], x: usize) -> bool {
        let n = self.net;
        if n.cons[x].iter().any(|&y| state[y] == INSTALLED) {
            return true;
        }
        self.symmetric && (0..n.len()).any(|y| state[y] == INSTALLED && n.cons[y].contains(&x))
    }

    fn reciprocal(&self, a: usize, b: usize) -> bool {
        let (ab, ba) = (self.net.cons[a].contains(&b), self.net.cons[b].contains(&a));
        if self.symmetric {
            ab || ba
        } else {
            ab && ba
        }
    }

    fn reach(&self, p: usize, avoid: &BTreeSet<usize>) -> BTreeSet<usize> {
        let mut seen = BTreeSet::from([p]);
        let mut stack = vec![p];
        while let Some(u) = stack.pop() {
            for &v in &self.net.deps[u] {
                if !avoid.contains(&v) && seen.insert(v) {
                    stack.push(v);
                }
            }
        }
        seen
    }

    /// Every `(probability, next state)` after evaluating candidate `p`.
    fn step(&self, state: &[u8], p: usize) -> Vec<(f64, Vec<u8>)> {
        let discard = |extra: &[usize]| {
            let mut s = state.to_vec();
            s[p] = DISCARDED;
            for &x in extra {
                s[x] = DISCARDED;
            }
            s
        };
        if self.blocked(state, p) {
            return vec![(1.0, discard(&[]))];
        }
        let closure = self.reach(p, &BTreeSet::new());
        if closure.iter().any(|&c| state[c] == DISCARDED)
            || closure
                .iter()
                .any(|&c| c != p && state[c] != INSTALLED && self.blocked(state, c))
        {
            return vec![(1.0, discard(&[]))];
        }
        let todo: Vec<usize> = closure.iter().copied().filter(|&c| state[c] != INSTALLED).collect();
        let mut pairs = Vec::new();
        for (i, &a) in todo.iter().enumerate() {
            for &b in &todo[i + 1..] {
                if self.reciprocal(a, b) {
                    pairs.push((a, b));
                }
            }
        }

        // all coin-flip outcomes: (probability, loser -> winner)
        let mut outcomes: Vec<(f64, BTreeMap<usize, usize>)> = vec![(1.0, BTreeMap::new())];
        for &(a, b) in &pairs {
            let mut next = Vec::new();
            for (prob, lost) in outcomes {
                if lost.contains_key(&a) || lost.contains_key(&b) {
                    next.push((prob, lost));
                    continue;
                }
                for (w, l) in [(a, b), (b, a)] {
                    let mut m = lost.clone();
                    m.insert(l, w);
                    next.push((prob * 0.5, m));
                }
            }
            outcomes = next;
        }

        outcomes
            .into_iter()
            .map(|(prob, lost)| {
                let losers: Vec<usize> = lost.keys().copied().collect();
                if lost.contains_key(&p) {
                    return (prob, discard(&losers));
                }
                let avoid: BTreeSet<usize> = losers.iter().copied().collect();
                let kept = self.reach(p, &avoid);
                let broken = kept.iter().any(|&u| {
                    self.net.deps[u].iter().any(|t| {
                        lost.get(t)
                            .is_some_and(|w| !(self.net.deps[u].contains(w) && !lost.contains_key(w)))
                    })
                });
                if broken {
                    return (prob, discard(&losers));
                }
                let mut s = state.to_vec();
                for &x in &losers {
                    s[x] = DISCARDED;
                }
                for &k in &kept {
                    s[k] = INSTALLED;
                }
                (prob, s)
            })
            .collect()
    }
}

/// Best Newman–Girvan modularity of the undirected dependency projection
/// over interacting nodes, by exhaustive search over set partitions.
/// `None` when there are no dependency edges.
pub fn modularity_optimum(net: &Net) -> Option<f64> {
    let on = net.interacting();
    let nodes: Vec<usize> = (0..net.len()).filter(|&i| on[i]).collect();
    let local: HashMap<usize, usize> = nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let n = nodes.len();
    let mut w = vec![vec![0.0f64; n]; n];
    for a in 0..net.len() {
        for &b in &net.deps[a] {
            let (i, j) = (local[&a], local[&b]);
            w[i][j] += 1.0;
            w[j][i] += 1.0;
        }
    }
    let strength: Vec<f64> = w.iter().map(|r| r.iter().sum()).collect();
    let two_m: f64 = strength.iter().sum();
    if two_m == 0.0 {
        return None;
    }
    let q_of = |labels: &[usize]| {
        let mut q = 0.0;
        for i in 0..n {
            for j in 0..n {
                if labels[i] == labels[j] {
                    q += w[i][j] - strength[i] * strength[j] / two_m;
                }
            }
        }
        q / two_m
    };
    // restricted growth strings enumerate every set partition once
    let mut labels = vec![0usize; n];
    let mut best = f64::NEG_INFINITY;
    fn rec(i: usize, max: usize, labels: &mut Vec<usize>, best: &mut f64, q_of: &dyn Fn(&[usize]) -> f64) {
        if i == labels.len() {
            *best = best.max(q_of(labels));
            return;
        }
        for l in 0..=max + 1 {
            labels[i] = l;
            rec(i + 1, max.max(l), labels, best, q_of);
        }
    }
    if n == 1 {
        return Some(q_of(&labels));
    }
    labels[0] = 0;
    rec(1, 0, &mut labels, &mut best, &q_of);
    Some(best)
}

/// Crafted graphs with at most six interacting packages.
pub const INSTALL_CORPUS: &[(&str, &str)] = &[
    ("mutual_pair", "CON a b\nCON b a"),
    ("one_way_conflict", "CON a b"),
    ("chain", "DEP a b\nDEP b c"),
    ("cycle3", "DEP a b\nDEP b c\nDEP c a"),
    ("cycle_conflicted_from_outside", "DEP a b\nDEP b c\nDEP c a\nCON d a"),
    ("needs_mutual_pair", "DEP p x\nDEP p y\nCON x y\nCON y x"),
    ("survivor_needs_loser", "DEP p x\nDEP p y\nDEP x y\nCON x y\nCON y x"),
    ("conflict_into_closure", "DEP a b\nCON c b"),
    ("conflict_from_closure", "DEP a b\nCON b c"),
    ("libraries_in_conflict", "DEP a l\nDEP b m\nCON l m\nCON m l"),
    ("diamond_one_way", "DEP a b\nDEP a c\nDEP b d\nDEP c e\nCON d e"),
    ("diamond_mutual", "DEP a b\nDEP a c\nDEP b d\nDEP c e\nCON d e\nCON e d"),
    ("two_pairs", "CON a b\nCON b a\nCON c d\nCON d c\nDEP e a\nDEP f c"),
    ("conflict_triangle", "CON a b\nCON b c\nCON c a"),
    ("mutual_triangle", "CON a b\nCON b a\nCON b c\nCON c b\nCON a c\nCON c a"),
    ("two_cycle_then_conflict", "DEP a b\nDEP b a\nCON b c\nDEP d c"),
    ("hub_in_mutual_conflict", "DEP a h\nDEP b h\nDEP c h\nCON d h\nCON h d"),
    ("indirect_pair", "DEP p a\nDEP a b\nCON a b\nCON b a"),
    ("asymmetric_loop", "DEP a b\nCON b c\nDEP c d\nCON d a"),
    ("long_chain", "DEP a b\nDEP b c\nDEP c d\nDEP d e\nCON e f"),
    ("pair_with_dependants", "CON x y\nCON y x\nDEP a x\nDEP b y\nDEP c x\nDEP d y"),
    ("crossed_requirements", "DEP a c\nDEP b d\nDEP a d\nCON c d\nCON d c"),
    ("cycle_with_side_pair", "DEP a b\nDEP b c\nDEP c a\nCON a d\nCON d e\nCON e d"),
    ("shared_pair", "DEP p x\nDEP p y\nDEP q x\nDEP q y\nCON x y\nCON y x"),
    ("dependent_mutual_pair", "NODE z\nDEP a b\nCON a b\nCON b a\nDEP c a"),
];

/// Extra modularity fixtures (at most ten nodes each).
pub const MODULARITY_CORPUS: &[(&str, &str)] = &[
    ("two_triangles", "DEP a b\nDEP b c\nDEP c a\nDEP d e\nDEP e f\nDEP f d"),
    ("two_k4", "DEP a b\nDEP a c\nDEP a d\nDEP b c\nDEP b d\nDEP c d\nDEP e f\nDEP e g\nDEP e h\nDEP f g\nDEP f h\nDEP g h"),
    ("two_k5", "DEP a b\nDEP a c\nDEP a d\nDEP a e\nDEP b c\nDEP b d\nDEP b e\nDEP c d\nDEP c e\nDEP d e\n\
                DEP f g\nDEP f h\nDEP f i\nDEP f j\nDEP g h\nDEP g i\nDEP g j\nDEP h i\nDEP h j\nDEP i j"),
    ("barbell", "DEP a b\nDEP b c\nDEP c a\nDEP c d\nDEP d e\nDEP e f\nDEP f d"),
    ("ring10", "DEP a b\nDEP b c\nDEP c d\nDEP d e\nDEP e f\nDEP f g\nDEP g h\nDEP h i\nDEP i j\nDEP j a"),
    ("star", "DEP a h\nDEP b h\nDEP c h\nDEP d h\nDEP e h"),
    ("path10", "DEP a b\nDEP b c\nDEP c d\nDEP d e\nDEP e f\nDEP f g\nDEP g h\nDEP h i\nDEP i j"),
    ("reciprocal_weights", "DEP a b\nDEP b a\nDEP b c\nDEP c d\nDEP d c\nDEP d e\nDEP e f\nDEP f e\nDEP a f"),
    ("three_clusters", "DEP a b\nDEP b c\nDEP c a\nDEP d e\nDEP e f\nDEP f d\nDEP g h\nDEP h i\nDEP i g\nDEP a d\nDEP e g\nDEP i j"),
    ("dense_mixed", "DEP a b\nDEP a c\nDEP b c\nDEP c d\nDEP d e\nDEP e a\nDEP b f\nDEP f g\nDEP g h\nDEP h f\nDEP g i\nDEP i j\nDEP j h\nDEP e j"),
    ("with_conflict_only_nodes", "DEP a b\nDEP b c\nDEP c a\nDEP d e\nCON f a\nCON g d"),
];

/// Ten packages: #1–#4 installed (#2, #3 need #1; #4 needs #3), #5 needs #1,
/// #6 needs #3 but conflicts with #2, #7–#10 depend on #6 directly or
/// through each other.
pub const TEN_PACKAGES: &str = "DEP 2 1\nDEP 3 1\nDEP 4 3\nDEP 5 1\nDEP 6 3\nCON 6 2\n\
                        DEP 7 6\nDEP 8 7\nDEP 9 6\nDEP 10 9\nDEP 10 4";
pub const TEN_PACKAGES_INSTALLED: &[&str] = &["1", "2", "3", "4"];

/// Two dependency modules. Module A holds every conflict: libraries `x1`
/// and `x2` conflict with each other and each is required by ten leaf
/// packages. Module B is conflict-free: ten mid-level packages need `r` and
/// each has three leaf dependants.
pub fn two_module_graph() -> String {
    let mut s = String::from("CON x1 x2\nCON x2 x1\n");
    for i in 0..20 {
        s += &format!("DEP a{i} x{}\n", 1 + i / 10);
    }
    for m in 0..10 {
        s += &format!("DEP m{m} r\n");
        for l in 0..3 {
            s += &format!("DEP l{m}_{l} m{m}\n");
        }
    }
    s
}
