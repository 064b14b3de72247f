//! Debian `Packages` index parsing and relation resolution.
//!
//! Stanzas are blank-line separated blocks of `Key: value` fields with
//! indented continuation lines. Only `Package`, `Version`, `Depends`,
//! `Pre-Depends`, `Conflicts` and `Provides` are retained; everything else
//! (including `Breaks`, `Replaces`, `Recommends`, `Suggests`) is ignored.
//! Version constraints are kept for round-tripping but never influence edges.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DependencyGraph, EdgeKind, GraphBuilder, NodeId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alternative {
    pub name: String,
    /// Operator and version, e.g. `>= 2.0`, whitespace-normalised.
    pub constraint: Option<String>,
}

pub type AlternativeGroup = Vec<Alternative>;

/// A parsed relation field: comma-separated groups of `|`-separated
/// alternatives.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationList {
    pub groups: Vec<AlternativeGroup>,
}

impl RelationList {
    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Target names in group order, alternatives flattened.
    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.groups.iter().flatten().map(|a| a.name.as_str())
    }
}

impl fmt::Display for Alternative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.constraint {
            Some(c) => write!(f, "{} ({})", self.name, c),
            None => f.write_str(&self.name),
        }
    }
}

impl fmt::Display for RelationList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, group) in self.groups.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            for (j, alt) in group.iter().enumerate() {
                if j > 0 {
                    f.write_str(" | ")?;
                }
                write!(f, "{alt}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackageRecord {
    pub name: String,
    pub version: String,
    pub depends: RelationList,
    pub pre_depends: RelationList,
    pub conflicts: RelationList,
    pub provides: Vec<String>,
}

impl PackageRecord {
    pub fn new(name: impl Into<String>) -> Self {
        PackageRecord {
            name: name.into(),
            version: String::new(),
            depends: RelationList::default(),
            pre_depends: RelationList::default(),
            conflicts: RelationList::default(),
            provides: Vec::new(),
        }
    }
}

/// Non-fatal oddities found while parsing or resolving.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    DuplicatePackage { name: String, line: usize },
    StanzaWithoutPackage { line: usize },
    UnresolvedTarget {
        package: String,
        field: String,
        target: String,
    },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::DuplicatePackage { name, line } => {
                write!(f, "line {line}: duplicate package {name:?}, later stanza wins")
            }
            Warning::StanzaWithoutPackage { line } => {
                write!(f, "line {line}: stanza has no Package field, skipped")
            }
            Warning::UnresolvedTarget {
                package,
                field,
                target,
            } => write!(f, "{package}: {field} target {target:?} not in archive, dropped"),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct PackagesIndex {
    pub records: Vec<PackageRecord>,
    pub warnings: Vec<Warning>,
}

fn is_token(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(char::is_whitespace)
}

/// Remove every `[...]` / `<...>` span outside parentheses; these carry
/// architecture and build-profile qualifiers.
fn strip_qualifiers(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut parens = 0usize;
    let mut closing: Option<char> = None;
    for c in text.chars() {
        if let Some(end) = closing {
            if c == end {
                closing = None;
            }
            continue;
        }
        match c {
            '(' => parens += 1,
            ')' => parens = parens.saturating_sub(1),
            '[' if parens == 0 => {
                closing = Some(']');
                continue;
            }
            '<' if parens == 0 => {
                closing = Some('>');
                continue;
            }
            _ => {}
        }
        out.push(c);
    }
    out
}

fn parse_alternative(text: &str, group: usize, whole: &str) -> Result<Alternative> {
    let err = |message: String| Error::Relation {
        group,
        text: whole.trim().to_string(),
        message,
    };
    let text = strip_qualifiers(text);
    let text = text.as_str();
    let opens = text.matches('(').count();
    let closes = text.matches(')').count();
    if opens != closes || opens > 1 {
        return Err(err("unbalanced parentheses".into()));
    }
    let (head, constraint) = match text.find('(') {
        Some(open) => {
            let close = text.find(')').unwrap();
            if close < open || !text[close + 1..].trim().is_empty() {
                return Err(err("unbalanced parentheses".into()));
            }
            let inner = text[open + 1..close].split_whitespace().collect::<Vec<_>>();
            if inner.is_empty() {
                return Err(err("empty version constraint".into()));
            }
            (&text[..open], Some(normalise_constraint(&inner.join(" "))))
        }
        None => (text, None),
    };
    let mut name = head.trim();
    if let Some(colon) = name.find(':') {
        // multi-arch qualifier, e.g. `perl:any`
        name = &name[..colon];
    }
    if name.is_empty() {
        return Err(err("empty package name".into()));
    }
    if !is_token(name) {
        return Err(err(format!("unexpected whitespace in package name {name:?}")));
    }
    Ok(Alternative {
        name: name.to_string(),
        constraint,
    })
}

/// `>=2.0` and `>= 2.0` denote the same constraint; canonicalise to the
/// spaced form.
fn normalise_constraint(raw: &str) -> String {
    let op_len = raw
        .chars()
        .take_while(|c| matches!(c, '<' | '>' | '='))
        .count();
    let (op, rest) = raw.split_at(op_len);
    let rest = rest.trim();
    match (op.is_empty(), rest.is_empty()) {
        (true, _) => rest.to_string(),
        (false, true) => op.to_string(),
        (false, false) => format!("{op} {rest}"),
    }
}

/// Parse a relation field such as `libc6 (>= 2.3), mta | exim, foo [i386]`.
///
/// Whitespace-only groups (e.g. a trailing comma) are skipped.
pub fn parse_relation_field(text: &str) -> Result<RelationList> {
    let mut groups = Vec::new();
    for (gi, raw_group) in split_groups(text).into_iter().enumerate() {
        if raw_group.trim().is_empty() {
            continue;
        }
        let mut group = Vec::new();
        for alt in raw_group.split('|') {
            group.push(parse_alternative(alt, gi + 1, raw_group)?);
        }
        groups.push(group);
    }
    Ok(RelationList { groups })
}

/// Split on commas that are not inside parentheses, so a stray comma in a
/// version string does not break a group.
fn split_groups(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth <= 0 => {
                out.push(&text[start..i]);
                start = i + 1;
                depth = 0;
            }
            _ => {}
        }
    }
    out.push(&text[start..]);
    out
}

#[derive(Default)]
struct Stanza {
    start_line: usize,
    fields: Vec<(String, String, usize)>,
}

impl Stanza {
    fn field(&self, key: &str) -> Option<&(String, String, usize)> {
        self.fields
            .iter()
            .rev()
            .find(|(k, _, _)| k.eq_ignore_ascii_case(key))
    }
}

fn stanza_to_record(stanza: &Stanza) -> Result<Option<PackageRecord>> {
    let Some((_, name, line)) = stanza.field("Package") else {
        return Ok(None);
    };
    let name = name.trim();
    if !is_token(name) {
        return Err(Error::Parse {
            line: *line,
            message: format!("invalid package name {name:?}"),
        });
    }
    let relation = |key: &str| -> Result<RelationList> {
        match stanza.field(key) {
            Some((_, value, line)) => parse_relation_field(value).map_err(|e| Error::Parse {
                line: *line,
                message: format!("{key}: {e}"),
            }),
            None => Ok(RelationList::default()),
        }
    };
    let mut record = PackageRecord::new(name);
    record.version = stanza
        .field("Version")
        .map(|(_, v, _)| v.trim().to_string())
        .unwrap_or_default();
    record.depends = relation("Depends")?;
    record.pre_depends = relation("Pre-Depends")?;
    record.conflicts = relation("Conflicts")?;
    record.provides = relation("Provides")?.names().map(str::to_string).collect();
    Ok(Some(record))
}

/// Parse a `Packages` index. Duplicate package names keep the position of the
/// first stanza but the content of the last one.
pub fn parse_packages_index(input: &[u8]) -> Result<PackagesIndex> {
    let text = String::from_utf8_lossy(input);
    let mut stanzas: Vec<Stanza> = Vec::new();
    let mut current = Stanza::default();

    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            if !current.fields.is_empty() {
                stanzas.push(std::mem::take(&mut current));
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        if line.starts_with([' ', '\t']) {
            match current.fields.last_mut() {
                Some((_, value, _)) => {
                    value.push('\n');
                    value.push_str(line.trim());
                }
                None => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "continuation line outside of a field".into(),
                    })
                }
            }
            continue;
        }
        let Some(colon) = line.find(':') else {
            return Err(Error::Parse {
                line: line_no,
                message: format!("field line has no colon: {:?}", line),
            });
        };
        if current.fields.is_empty() {
            current.start_line = line_no;
        }
        let key = line[..colon].trim().to_string();
        let value = line[colon + 1..].trim().to_string();
        current.fields.push((key, value, line_no));
    }
    if !current.fields.is_empty() {
        stanzas.push(current);
    }

    let mut warnings = Vec::new();
    let mut by_name: IndexMap<String, PackageRecord> = IndexMap::new();
    for stanza in &stanzas {
        match stanza_to_record(stanza)? {
            Some(record) => {
                if by_name.contains_key(&record.name) {
                    warnings.push(Warning::DuplicatePackage {
                        name: record.name.clone(),
                        line: stanza.start_line,
                    });
                }
                by_name.insert(record.name.clone(), record);
            }
            None => warnings.push(Warning::StanzaWithoutPackage {
                line: stanza.start_line,
            }),
        }
    }
    Ok(PackagesIndex {
        records: by_name.into_values().collect(),
        warnings,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlternativePolicy {
    /// One edge per group: the first alternative that resolves.
    #[default]
    FirstListed,
    /// An edge to every resolvable alternative.
    AllAlternatives,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VirtualPolicy {
    /// Alphabetically first package providing the name.
    #[default]
    FirstProvider,
    AllProviders,
    Drop,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConflictDirection {
    #[default]
    AsDeclared,
    /// Every conflict `i -> j` also yields `j -> i`.
    Symmetrized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResolutionPolicy {
    pub alternatives: AlternativePolicy,
    pub virtuals: VirtualPolicy,
    pub include_pre_depends: bool,
    pub conflict_direction: ConflictDirection,
}

impl Default for ResolutionPolicy {
    fn default() -> Self {
        ResolutionPolicy {
            alternatives: AlternativePolicy::FirstListed,
            virtuals: VirtualPolicy::FirstProvider,
            include_pre_depends: true,
            conflict_direction: ConflictDirection::AsDeclared,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GraphBuild {
    pub graph: DependencyGraph,
    pub warnings: Vec<Warning>,
}

struct Resolver<'a> {
    builder: &'a GraphBuilder,
    providers: BTreeMap<&'a str, BTreeSet<&'a str>>,
    virtuals: VirtualPolicy,
}

impl Resolver<'_> {
    fn resolve(&self, target: &str) -> Vec<NodeId> {
        if let Some(id) = self.builder.node(target) {
            return vec![id];
        }
        let Some(providers) = self.providers.get(target) else {
            return Vec::new();
        };
        let ids = providers.iter().filter_map(|p| self.builder.node(p));
        match self.virtuals {
            VirtualPolicy::FirstProvider => ids.take(1).collect(),
            VirtualPolicy::AllProviders => ids.collect(),
            VirtualPolicy::Drop => Vec::new(),
        }
    }
}

/// Resolve relation fields of `records` into a package-level graph.
pub fn build_graph(records: &[PackageRecord], policy: &ResolutionPolicy) -> GraphBuild {
    let mut builder = GraphBuilder::new();
    for r in records {
        let id = builder.add_node(&r.name);
        builder.set_version(id, (!r.version.is_empty()).then(|| r.version.clone()));
    }
    let mut providers: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for r in records {
        for p in &r.provides {
            providers.entry(p.as_str()).or_default().insert(r.name.as_str());
        }
    }

    let mut warnings = Vec::new();
    let mut dep_edges = Vec::new();
    let mut con_edges = Vec::new();
    {
        let resolver = Resolver {
            builder: &builder,
            providers,
            virtuals: policy.virtuals,
        };
        let unresolved = |field: &str, pkg: &str, target: &str| Warning::UnresolvedTarget {
            package: pkg.to_string(),
            field: field.to_string(),
            target: target.to_string(),
        };
        for r in records {
            let from = resolver.builder.node(&r.name).unwrap();
            let mut fields = vec![("Depends", &r.depends)];
            if policy.include_pre_depends {
                fields.push(("Pre-Depends", &r.pre_depends));
            }
            for (field, list) in fields {
                for group in &list.groups {
                    match policy.alternatives {
                        AlternativePolicy::FirstListed => {
                            let hit = group
                                .iter()
                                .map(|alt| resolver.resolve(&alt.name))
                                .find(|ids| !ids.is_empty());
                            match hit {
                                Some(ids) => dep_edges.extend(ids.into_iter().map(|t| (from, t))),
                                None => {
                                    let target = group
                                        .iter()
                                        .map(|a| a.name.as_str())
                                        .collect::<Vec<_>>()
                                        .join(" | ");
                                    warnings.push(unresolved(field, &r.name, &target));
                                }
                            }
                        }
                        AlternativePolicy::AllAlternatives => {
                            for alt in group {
                                let ids = resolver.resolve(&alt.name);
                                if ids.is_empty() {
                                    warnings.push(unresolved(field, &r.name, &alt.name));
                                }
                                dep_edges.extend(ids.into_iter().map(|t| (from, t)));
                            }
                        }
                    }
                }
            }
            for alt in r.conflicts.groups.iter().flatten() {
                let ids = resolver.resolve(&alt.name);
                if ids.is_empty() {
                    warnings.push(unresolved("Conflicts", &r.name, &alt.name));
                }
                for t in ids {
                    con_edges.push((from, t));
                    if policy.conflict_direction == ConflictDirection::Symmetrized {
                        con_edges.push((t, from));
                    }
                }
            }
        }
    }
    for (a, b) in dep_edges {
        builder.add_edge(EdgeKind::Dependency, a, b);
    }
    for (a, b) in con_edges {
        builder.add_edge(EdgeKind::Conflict, a, b);
    }
    GraphBuild {
        graph: builder.build(),
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn alt(name: &str, c: Option<&str>) -> Alternative {
        Alternative {
            name: name.into(),
            constraint: c.map(Into::into),
        }
    }

    #[test]
    fn minimal_stanza() {
        let idx = parse_packages_index(b"Package: a\nVersion: 1.0\nDepends: b, c\n").unwrap();
        assert_eq!(idx.records.len(), 1);
        let a = &idx.records[0];
        assert_eq!(a.name, "a");
        assert_eq!(a.version, "1.0");
        assert_eq!(
            a.depends.groups,
            vec![vec![alt("b", None)], vec![alt("c", None)]]
        );
    }

    #[test]
    fn alternatives_with_constraint() {
        let idx = parse_packages_index(b"Package: a\nDepends: x | y (>= 2.0)\n").unwrap();
        assert_eq!(
            idx.records[0].depends.groups,
            vec![vec![alt("x", None), alt("y", Some(">= 2.0"))]]
        );
    }

    #[test]
    fn relation_field_examples() {
        assert_eq!(
            parse_relation_field("libc6 (>= 2.3), perl").unwrap().groups,
            vec![vec![alt("libc6", Some(">= 2.3"))], vec![alt("perl", None)]]
        );
        assert!(parse_relation_field("").unwrap().is_empty());
        assert_eq!(
            parse_relation_field("mta | exim, foo [i386]").unwrap().groups,
            vec![vec![alt("mta", None), alt("exim", None)], vec![alt("foo", None)]]
        );
        assert_eq!(
            parse_relation_field("perl:any, bar (<< 1.0) [!amd64] <!nocheck>, baz (<=3)")
                .unwrap()
                .groups,
            vec![
                vec![alt("perl", None)],
                vec![alt("bar", Some("<< 1.0"))],
                vec![alt("baz", Some("<= 3"))]
            ]
        );
    }

    #[test]
    fn unbalanced_parentheses_name_the_group() {
        match parse_relation_field("a, b (>= 1.0, c") {
            Err(Error::Relation { group, .. }) => assert_eq!(group, 2),
            other => panic!("expected relation error, got {other:?}"),
        }
        match parse_relation_field("a, b >= 1.0)") {
            Err(Error::Relation { group, .. }) => assert_eq!(group, 2),
            other => panic!("expected relation error, got {other:?}"),
        }
    }

    #[test]
    fn empty_alternative_rejected() {
        assert!(parse_relation_field("a | , b").is_err());
        // a trailing comma is tolerated
        assert_eq!(parse_relation_field("a, b,").unwrap().groups.len(), 2);
    }

    #[test]
    fn continuation_and_unknown_fields() {
        let text = b"Package: a\nDescription: short\n long text here\n .\nDepends: b,\n c\nX-Custom: y\n\n\nPackage: b\n\nPackage: c\n";
        let idx = parse_packages_index(text).unwrap();
        assert_eq!(idx.records.len(), 3);
        assert_eq!(idx.records[0].depends.names().collect::<Vec<_>>(), ["b", "c"]);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        match parse_packages_index(b"Package: a\nDepends b\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_input_is_empty() {
        assert!(parse_packages_index(b"").unwrap().records.is_empty());
        assert!(parse_packages_index(b"\n\n  \n").unwrap().records.is_empty());
    }

    #[test]
    fn duplicate_last_wins() {
        let idx =
            parse_packages_index(b"Package: a\nVersion: 1\n\nPackage: b\n\nPackage: a\nVersion: 2\n")
                .unwrap();
        assert_eq!(idx.records.len(), 2);
        assert_eq!(idx.records[0].version, "2");
        assert!(matches!(idx.warnings[0], Warning::DuplicatePackage { .. }));
    }

    #[test]
    fn stanza_without_package_is_skipped() {
        let idx = parse_packages_index(b"Version: 1\n\nPackage: a\n").unwrap();
        assert_eq!(idx.records.len(), 1);
        assert_eq!(idx.warnings, vec![Warning::StanzaWithoutPackage { line: 1 }]);
    }

    fn records(text: &str) -> Vec<PackageRecord> {
        parse_packages_index(text.as_bytes()).unwrap().records
    }

    fn edges(g: &DependencyGraph, kind: EdgeKind) -> Vec<(String, String)> {
        g.edges(kind)
            .iter()
            .map(|&(a, b)| (g.name(a).to_string(), g.name(b).to_string()))
            .collect()
    }

    fn pair(a: &str, b: &str) -> (String, String) {
        (a.into(), b.into())
    }

    #[test]
    fn single_dependency() {
        let b = build_graph(&records("Package: a\nDepends: b\n\nPackage: b\n"), &Default::default());
        assert_eq!(edges(&b.graph, EdgeKind::Dependency), vec![pair("a", "b")]);
        assert!(b.warnings.is_empty());
    }

    #[test]
    fn conflicts_are_directional() {
        let recs = records("Package: a\nConflicts: b\n\nPackage: b\n");
        let g = build_graph(&recs, &Default::default()).graph;
        assert_eq!(edges(&g, EdgeKind::Conflict), vec![pair("a", "b")]);

        let policy = ResolutionPolicy {
            conflict_direction: ConflictDirection::Symmetrized,
            ..Default::default()
        };
        let g = build_graph(&recs, &policy).graph;
        assert_eq!(
            edges(&g, EdgeKind::Conflict),
            vec![pair("a", "b"), pair("b", "a")]
        );
    }

    #[test]
    fn unresolved_targets_dropped_with_warning() {
        let b = build_graph(&records("Package: a\nDepends: ghost, b\n\nPackage: b\n"), &Default::default());
        assert_eq!(edges(&b.graph, EdgeKind::Dependency), vec![pair("a", "b")]);
        assert_eq!(b.warnings.len(), 1);
    }

    #[test]
    fn self_and_duplicate_edges_removed() {
        let b = build_graph(
            &records("Package: a\nDepends: a, b, b (>= 1)\nProvides: v\nConflicts: v\n\nPackage: b\n"),
            &Default::default(),
        );
        assert_eq!(edges(&b.graph, EdgeKind::Dependency), vec![pair("a", "b")]);
        assert!(b.graph.con_edges().is_empty());
    }

    #[test]
    fn first_listed_takes_first_resolvable() {
        let recs = records("Package: a\nDepends: ghost | c | b\n\nPackage: b\n\nPackage: c\n");
        let g = build_graph(&recs, &Default::default()).graph;
        assert_eq!(edges(&g, EdgeKind::Dependency), vec![pair("a", "c")]);
        let policy = ResolutionPolicy {
            alternatives: AlternativePolicy::AllAlternatives,
            ..Default::default()
        };
        let g = build_graph(&recs, &policy).graph;
        assert_eq!(
            edges(&g, EdgeKind::Dependency),
            vec![pair("a", "b"), pair("a", "c")]
        );
    }

    #[test]
    fn virtual_packages() {
        let recs = records(
            "Package: mutt\nDepends: mail-transport-agent\nConflicts: mail-transport-agent\n\n\
             Package: sendmail\nProvides: mail-transport-agent\n\n\
             Package: exim\nProvides: mail-transport-agent\n",
        );
        let g = build_graph(&recs, &Default::default()).graph;
        assert_eq!(edges(&g, EdgeKind::Dependency), vec![pair("mutt", "exim")]);
        assert_eq!(edges(&g, EdgeKind::Conflict), vec![pair("mutt", "exim")]);

        let all = ResolutionPolicy {
            virtuals: VirtualPolicy::AllProviders,
            ..Default::default()
        };
        let g = build_graph(&recs, &all).graph;
        assert_eq!(
            edges(&g, EdgeKind::Conflict),
            vec![pair("mutt", "sendmail"), pair("mutt", "exim")]
        );

        let drop = ResolutionPolicy {
            virtuals: VirtualPolicy::Drop,
            ..Default::default()
        };
        let b = build_graph(&recs, &drop);
        assert!(b.graph.dep_edges().is_empty());
        assert!(b.graph.con_edges().is_empty());
        assert_eq!(b.warnings.len(), 2);
    }

    #[test]
    fn pre_depends_toggle() {
        let recs = records("Package: a\nPre-Depends: b\n\nPackage: b\n");
        assert_eq!(build_graph(&recs, &Default::default()).graph.dep_edges().len(), 1);
        let policy = ResolutionPolicy {
            include_pre_depends: false,
            ..Default::default()
        };
        assert!(build_graph(&recs, &policy).graph.dep_edges().is_empty());
    }

    #[test]
    fn ignored_relation_fields() {
        let recs = records("Package: a\nRecommends: b\nSuggests: b\nBreaks: b\nReplaces: b\n\nPackage: b\n");
        let g = build_graph(&recs, &Default::default()).graph;
        assert!(g.dep_edges().is_empty() && g.con_edges().is_empty());
    }

    fn name_strategy() -> impl Strategy<Value = String> {
        "[a-z][a-z0-9+.-]{0,8}"
    }

    fn relation_strategy() -> impl Strategy<Value = String> {
        let alt = (name_strategy(), proptest::option::of(("(<<|<=|=|>=|>>)", "[0-9][0-9a-z.~+-]{0,5}")))
            .prop_map(|(n, c)| match c {
                Some((op, v)) => format!("{n} ({op}{v})"),
                None => n,
            });
        proptest::collection::vec(proptest::collection::vec(alt, 1..4), 0..5).prop_map(|groups| {
            groups
                .into_iter()
                .map(|g| g.join("|"))
                .collect::<Vec<_>>()
                .join(" ,  ")
        })
    }

    proptest! {
        #[test]
        fn relation_round_trip(text in relation_strategy()) {
            let parsed = parse_relation_field(&text).unwrap();
            let again = parse_relation_field(&parsed.to_string()).unwrap();
            prop_assert_eq!(parsed, again);
        }

        #[test]
        fn build_is_deterministic_and_alternatives_superset(
            deps in proptest::collection::vec((0usize..6, proptest::collection::vec(0usize..8, 1..3)), 0..12)
        ) {
            let mut text = String::new();
            for i in 0..6 {
                let groups: Vec<String> = deps
                    .iter()
                    .filter(|(from, _)| *from == i)
                    .map(|(_, alts)| alts.iter().map(|a| format!("p{a}")).collect::<Vec<_>>().join(" | "))
                    .collect();
                text.push_str(&format!("Package: p{i}\nDepends: {}\n\n", groups.join(", ")));
            }
            let recs = records(&text);
            let first = build_graph(&recs, &Default::default()).graph;
            let again = build_graph(&recs, &Default::default()).graph;
            prop_assert_eq!(&first, &again);
            let all = build_graph(&recs, &ResolutionPolicy {
                alternatives: AlternativePolicy::AllAlternatives,
                ..Default::default()
            }).graph;
            for e in first.dep_edges() {
                prop_assert!(all.dep_edges().contains(e));
            }
            for &(a, b) in all.dep_edges() {
                prop_assert!(a != b);
            }
        }
    }
}
