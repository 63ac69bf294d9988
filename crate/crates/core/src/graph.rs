//! Acyclic directed mixed graphs with selection and discrepancy vertices.
//!
//! Graphs are immutable values. Every mutilation returns a fresh graph, so a
//! derivation step can refer to the exact subgraph its premise was checked in.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// An ordered set of vertex names. Iteration is lexicographic.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexSet(BTreeSet<String>);

impl VertexSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_names<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        VertexSet(names.into_iter().map(Into::into).collect())
    }

    /// Parses `"A,B , C"`; empty segments are ignored.
    pub fn parse_list(text: &str) -> Self {
        Self::from_names(text.split(',').map(str::trim).filter(|s| !s.is_empty()))
    }

    pub fn singleton(name: &str) -> Self {
        Self::from_names([name])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains(name)
    }

    pub fn insert(&mut self, name: impl Into<String>) -> bool {
        self.0.insert(name.into())
    }

    pub fn remove(&mut self, name: &str) -> bool {
        self.0.remove(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &String> + '_ {
        self.0.iter()
    }

    pub fn as_set(&self) -> &BTreeSet<String> {
        &self.0
    }

    pub fn union(&self, other: &VertexSet) -> VertexSet {
        VertexSet(self.0.union(&other.0).cloned().collect())
    }

    pub fn intersection(&self, other: &VertexSet) -> VertexSet {
        VertexSet(self.0.intersection(&other.0).cloned().collect())
    }

    pub fn difference(&self, other: &VertexSet) -> VertexSet {
        VertexSet(self.0.difference(&other.0).cloned().collect())
    }

    pub fn is_subset(&self, other: &VertexSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn is_disjoint(&self, other: &VertexSet) -> bool {
        self.0.is_disjoint(&other.0)
    }

    /// All subsets, ordered by size and then lexicographically.
    pub fn subsets(&self, max_size: usize) -> Vec<VertexSet> {
        let items: Vec<&String> = self.0.iter().collect();
        let mut out = Vec::new();
        for k in 0..=max_size.min(items.len()) {
            combinations(&items, k, &mut |c| out.push(VertexSet::from_names(c.iter().map(|s| s.as_str()))));
        }
        out
    }
}

fn combinations<'a>(items: &[&'a String], k: usize, f: &mut dyn FnMut(&[&'a String])) {
    fn go<'a>(items: &[&'a String], k: usize, start: usize, cur: &mut Vec<&'a String>, f: &mut dyn FnMut(&[&'a String])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..items.len() {
            if items.len() - i < k - cur.len() {
                break;
            }
            cur.push(items[i]);
            go(items, k, i + 1, cur, f);
            cur.pop();
        }
    }
    go(items, k, 0, &mut Vec::with_capacity(k), f);
}

impl fmt::Display for VertexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "}}")
    }
}

impl FromIterator<String> for VertexSet {
    fn from_iter<T: IntoIterator<Item = String>>(iter: T) -> Self {
        VertexSet(iter.into_iter().collect())
    }
}

impl<'a> FromIterator<&'a str> for VertexSet {
    fn from_iter<T: IntoIterator<Item = &'a str>>(iter: T) -> Self {
        VertexSet(iter.into_iter().map(str::to_string).collect())
    }
}

impl IntoIterator for VertexSet {
    type Item = String;
    type IntoIter = std::collections::btree_set::IntoIter<String>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

impl<'a> IntoIterator for &'a VertexSet {
    type Item = &'a String;
    type IntoIter = std::collections::btree_set::Iter<'a, String>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum VertexKind {
    Endogenous,
    /// Sample-inclusion indicator; only receives arrows.
    Selection,
    /// Marks a mechanism that may differ between the target and a source.
    /// `domains` lists the sources it applies to; empty means all of them.
    Discrepancy {
        domains: BTreeSet<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vertex {
    pub name: String,
    #[serde(flatten)]
    pub kind: VertexKind,
}

/// Unvalidated graph description, as read from a file or built by hand.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawGraph {
    pub vertices: Vec<Vertex>,
    pub directed: Vec<(String, String)>,
    pub bidirected: Vec<(String, String)>,
}

impl RawGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn vertex(mut self, name: &str) -> Self {
        self.vertices.push(Vertex { name: name.into(), kind: VertexKind::Endogenous });
        self
    }

    pub fn selection(mut self, name: &str) -> Self {
        self.vertices.push(Vertex { name: name.into(), kind: VertexKind::Selection });
        self
    }

    pub fn discrepancy(mut self, name: &str, domains: &[&str]) -> Self {
        self.vertices
            .push(Vertex { name: name.into(), kind: VertexKind::Discrepancy { domains: domains.iter().map(|s| s.to_string()).collect() } });
        self
    }

    pub fn edge(mut self, from: &str, to: &str) -> Self {
        self.directed.push((from.into(), to.into()));
        self
    }

    pub fn bi(mut self, a: &str, b: &str) -> Self {
        self.bidirected.push((a.into(), b.into()));
        self
    }

    /// Declares any endpoint not yet declared as an endogenous vertex.
    pub fn with_implicit_vertices(mut self) -> Self {
        let mut known: BTreeSet<String> = self.vertices.iter().map(|v| v.name.clone()).collect();
        let ends: Vec<String> = self.directed.iter().chain(self.bidirected.iter()).flat_map(|(a, b)| [a.clone(), b.clone()]).collect();
        for e in ends {
            if known.insert(e.clone()) {
                self.vertices.push(Vertex { name: e, kind: VertexKind::Endogenous });
            }
        }
        self
    }

    pub fn validate(self) -> Result<Graph, ValidationReport> {
        validate(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("cycle detected: {}", .0.join(" -> "))]
    CycleDetected(Vec<String>),
    #[error("selection vertex {vertex}: {reason}")]
    BadSelectionVertex { vertex: String, reason: String },
    #[error("discrepancy vertex {vertex}: {reason}")]
    BadDiscrepancyVertex { vertex: String, reason: String },
    #[error("edge {from} {arrow} {to}: unknown endpoint {missing}")]
    UnknownEndpoint { from: String, to: String, arrow: &'static str, missing: String },
    #[error("edge {from} {arrow} {to} is a self-loop")]
    SelfLoop { from: String, to: String, arrow: &'static str },
    #[error("duplicate edge {from} {arrow} {to}")]
    DuplicateEdge { from: String, to: String, arrow: &'static str },
    #[error("duplicate vertex {0}")]
    DuplicateVertex(String),
    #[error("vertex with empty name")]
    EmptyName,
    #[error("unknown vertex {0}")]
    UnknownVertex(String),
}

/// Every violation found by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid graph: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
pub struct ValidationReport(pub Vec<GraphError>);

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Graph {
    kinds: BTreeMap<String, VertexKind>,
    directed: BTreeSet<(String, String)>,
    /// Stored with the smaller name first.
    bidirected: BTreeSet<(String, String)>,
}

fn ordered(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

/// Checks every vertex and edge invariant, collecting all violations.
pub fn validate(raw: RawGraph) -> Result<Graph, ValidationReport> {
    let mut errors = Vec::new();
    let mut kinds = BTreeMap::new();
    for v in &raw.vertices {
        if v.name.trim().is_empty() {
            errors.push(GraphError::EmptyName);
            continue;
        }
        if kinds.insert(v.name.clone(), v.kind.clone()).is_some() {
            errors.push(GraphError::DuplicateVertex(v.name.clone()));
        }
    }

    let mut directed = BTreeSet::new();
    for (a, b) in &raw.directed {
        let mut ok = true;
        for end in [a, b] {
            if !kinds.contains_key(end) {
                errors.push(GraphError::UnknownEndpoint { from: a.clone(), to: b.clone(), arrow: "->", missing: end.clone() });
                ok = false;
                break;
            }
        }
        if !ok {
            continue;
        }
        if a == b {
            errors.push(GraphError::SelfLoop { from: a.clone(), to: b.clone(), arrow: "->" });
        } else if !directed.insert((a.clone(), b.clone())) {
            errors.push(GraphError::DuplicateEdge { from: a.clone(), to: b.clone(), arrow: "->" });
        }
    }

    let mut bidirected = BTreeSet::new();
    for (a, b) in &raw.bidirected {
        let mut ok = true;
        for end in [a, b] {
            if !kinds.contains_key(end) {
                errors.push(GraphError::UnknownEndpoint { from: a.clone(), to: b.clone(), arrow: "<->", missing: end.clone() });
                ok = false;
                break;
            }
        }
        if !ok {
            continue;
        }
        if a == b {
            errors.push(GraphError::SelfLoop { from: a.clone(), to: b.clone(), arrow: "<->" });
        } else if !bidirected.insert(ordered(a, b)) {
            errors.push(GraphError::DuplicateEdge { from: a.clone(), to: b.clone(), arrow: "<->" });
        }
    }

    for (name, kind) in &kinds {
        match kind {
            VertexKind::Endogenous => {}
            VertexKind::Selection => {
                if let Some((_, to)) = directed.iter().find(|(f, _)| f == name) {
                    errors.push(GraphError::BadSelectionVertex { vertex: name.clone(), reason: format!("emits a directed edge to {to}") });
                }
            }
            VertexKind::Discrepancy { .. } => {
                if let Some((from, _)) = directed.iter().find(|(_, t)| t == name) {
                    errors.push(GraphError::BadDiscrepancyVertex {
                        vertex: name.clone(),
                        reason: format!("receives a directed edge from {from}"),
                    });
                }
                if let Some((a, b)) = bidirected.iter().find(|(a, b)| a == name || b == name) {
                    errors.push(GraphError::BadDiscrepancyVertex {
                        vertex: name.clone(),
                        reason: format!("touches bidirected edge {a} <-> {b}"),
                    });
                }
                if let Some((_, to)) = directed.iter().find(|(f, t)| f == name && !matches!(kinds.get(t), Some(VertexKind::Endogenous))) {
                    errors.push(GraphError::BadDiscrepancyVertex {
                        vertex: name.clone(),
                        reason: format!("points at non-endogenous vertex {to}"),
                    });
                }
            }
        }
    }

    let graph = Graph { kinds, directed, bidirected };
    if let Some(cycle) = graph.find_cycle() {
        errors.push(GraphError::CycleDetected(cycle));
    }
    if errors.is_empty() {
        Ok(graph)
    } else {
        Err(ValidationReport(errors))
    }
}

impl Graph {
    pub fn vertex_names(&self) -> impl Iterator<Item = &String> + '_ {
        self.kinds.keys()
    }

    pub fn vertices(&self) -> VertexSet {
        self.kinds.keys().cloned().collect()
    }

    pub fn kind(&self, v: &str) -> Option<&VertexKind> {
        self.kinds.get(v)
    }

    pub fn has_vertex(&self, v: &str) -> bool {
        self.kinds.contains_key(v)
    }

    pub fn is_endogenous(&self, v: &str) -> bool {
        matches!(self.kinds.get(v), Some(VertexKind::Endogenous))
    }

    pub fn is_selection(&self, v: &str) -> bool {
        matches!(self.kinds.get(v), Some(VertexKind::Selection))
    }

    pub fn is_discrepancy(&self, v: &str) -> bool {
        matches!(self.kinds.get(v), Some(VertexKind::Discrepancy { .. }))
    }

    fn of_kind(&self, pred: impl Fn(&VertexKind) -> bool) -> VertexSet {
        self.kinds.iter().filter(|(_, k)| pred(k)).map(|(n, _)| n.clone()).collect()
    }

    pub fn endogenous(&self) -> VertexSet {
        self.of_kind(|k| matches!(k, VertexKind::Endogenous))
    }

    pub fn selection_vertices(&self) -> VertexSet {
        self.of_kind(|k| matches!(k, VertexKind::Selection))
    }

    pub fn discrepancy_vertices(&self) -> VertexSet {
        self.of_kind(|k| matches!(k, VertexKind::Discrepancy { .. }))
    }

    /// Discrepancy vertices marking where source `domain` differs from the target.
    pub fn discrepancies_for(&self, domain: &str) -> VertexSet {
        self.of_kind(|k| match k {
            VertexKind::Discrepancy { domains } => domains.is_empty() || domains.contains(domain),
            _ => false,
        })
    }

    pub fn directed_edges(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        self.directed.iter().map(|(a, b)| (a.as_str(), b.as_str()))
    }

    pub fn bidirected_edges(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        self.bidirected.iter().map(|(a, b)| (a.as_str(), b.as_str()))
    }

    pub fn has_edge(&self, a: &str, b: &str) -> bool {
        self.directed.contains(&(a.to_string(), b.to_string()))
    }

    pub fn has_bidirected(&self, a: &str, b: &str) -> bool {
        self.bidirected.contains(&ordered(a, b))
    }

    pub fn parents(&self, v: &str) -> VertexSet {
        self.directed.iter().filter(|(_, t)| t == v).map(|(f, _)| f.clone()).collect()
    }

    pub fn children(&self, v: &str) -> VertexSet {
        self.directed.iter().filter(|(f, _)| f == v).map(|(_, t)| t.clone()).collect()
    }

    pub fn spouses(&self, v: &str) -> VertexSet {
        self.bidirected
            .iter()
            .filter_map(|(a, b)| {
                if a == v {
                    Some(b.clone())
                } else if b == v {
                    Some(a.clone())
                } else {
                    None
                }
            })
            .collect()
    }

    /// Vertices adjacent to `v` by any edge.
    pub fn neighbours(&self, v: &str) -> VertexSet {
        self.parents(v).union(&self.children(v)).union(&self.spouses(v))
    }

    pub fn check_known(&self, s: &VertexSet) -> Result<(), GraphError> {
        match s.iter().find(|v| !self.has_vertex(v)) {
            Some(v) => Err(GraphError::UnknownVertex(v.clone())),
            None => Ok(()),
        }
    }

    /// Removes edges with an arrowhead at `cut_incoming` (directed edges into
    /// it and every bidirected edge touching it) and directed edges out of
    /// `cut_outgoing`.
    pub fn mutilate(&self, cut_incoming: &VertexSet, cut_outgoing: &VertexSet) -> Result<Graph, GraphError> {
        self.check_known(cut_incoming)?;
        self.check_known(cut_outgoing)?;
        Ok(Graph {
            kinds: self.kinds.clone(),
            directed: self.directed.iter().filter(|(a, b)| !cut_incoming.contains(b) && !cut_outgoing.contains(a)).cloned().collect(),
            bidirected: self.bidirected.iter().filter(|(a, b)| !cut_incoming.contains(a) && !cut_incoming.contains(b)).cloned().collect(),
        })
    }

    /// Drops the given vertices and every edge touching them.
    pub fn without_vertices(&self, drop: &VertexSet) -> Graph {
        Graph {
            kinds: self.kinds.iter().filter(|(n, _)| !drop.contains(n)).map(|(n, k)| (n.clone(), k.clone())).collect(),
            directed: self.directed.iter().filter(|(a, b)| !drop.contains(a) && !drop.contains(b)).cloned().collect(),
            bidirected: self.bidirected.iter().filter(|(a, b)| !drop.contains(a) && !drop.contains(b)).cloned().collect(),
        }
    }

    /// Same vertices, directed edges flipped; bidirected edges kept.
    pub fn reversed(&self) -> Graph {
        Graph {
            kinds: self.kinds.clone(),
            directed: self.directed.iter().map(|(a, b)| (b.clone(), a.clone())).collect(),
            bidirected: self.bidirected.clone(),
        }
    }

    fn closure(&self, s: &VertexSet, up: bool) -> Result<VertexSet, GraphError> {
        self.check_known(s)?;
        let mut seen: BTreeSet<String> = s.as_set().clone();
        let mut stack: Vec<String> = s.iter().cloned().collect();
        while let Some(v) = stack.pop() {
            for (a, b) in &self.directed {
                let next = if up && b == &v {
                    a
                } else if !up && a == &v {
                    b
                } else {
                    continue;
                };
                if seen.insert(next.clone()) {
                    stack.push(next.clone());
                }
            }
        }
        Ok(VertexSet(seen))
    }

    /// Reflexive ancestors along directed edges.
    pub fn ancestors(&self, s: &VertexSet) -> Result<VertexSet, GraphError> {
        self.closure(s, true)
    }

    /// Reflexive descendants along directed edges.
    pub fn descendants(&self, s: &VertexSet) -> Result<VertexSet, GraphError> {
        self.closure(s, false)
    }

    /// Kahn's algorithm with a lexicographically ordered ready set.
    pub fn topological_order(&self) -> Vec<String> {
        let mut indeg: BTreeMap<&str, usize> = self.kinds.keys().map(|k| (k.as_str(), 0)).collect();
        for (_, b) in &self.directed {
            *indeg.get_mut(b.as_str()).expect("validated endpoint") += 1;
        }
        let mut ready: BTreeSet<&str> = indeg.iter().filter(|(_, d)| **d == 0).map(|(k, _)| *k).collect();
        let mut out = Vec::with_capacity(self.kinds.len());
        while let Some(v) = ready.pop_first() {
            out.push(v.to_string());
            for (a, b) in &self.directed {
                if a == v {
                    let d = indeg.get_mut(b.as_str()).expect("validated endpoint");
                    *d -= 1;
                    if *d == 0 {
                        ready.insert(b.as_str());
                    }
                }
            }
        }
        out
    }

    fn find_cycle(&self) -> Option<Vec<String>> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state: BTreeMap<&str, u8> = self.kinds.keys().map(|k| (k.as_str(), 0)).collect();
        let mut path: Vec<&str> = Vec::new();

        fn dfs<'a>(g: &'a Graph, v: &'a str, state: &mut BTreeMap<&'a str, u8>, path: &mut Vec<&'a str>) -> Option<Vec<String>> {
            state.insert(v, 1);
            path.push(v);
            for (a, b) in &g.directed {
                if a != v {
                    continue;
                }
                match state.get(b.as_str()).copied().unwrap_or(2) {
                    1 => {
                        let start = path.iter().position(|p| *p == b).expect("on stack");
                        let mut cycle: Vec<String> = path[start..].iter().map(|s| s.to_string()).collect();
                        cycle.push(b.clone());
                        return Some(cycle);
                    }
                    0 => {
                        if let Some(c) = dfs(g, b, state, path) {
                            return Some(c);
                        }
                    }
                    _ => {}
                }
            }
            path.pop();
            state.insert(v, 2);
            None
        }

        let names: Vec<&str> = self.kinds.keys().map(|k| k.as_str()).collect();
        for v in names {
            if state[v] == 0 {
                if let Some(c) = dfs(self, v, &mut state, &mut path) {
                    return Some(c);
                }
            }
        }
        None
    }

    /// Back to an editable description, e.g. for perturbation in tests.
    pub fn to_raw(&self) -> RawGraph {
        RawGraph {
            vertices: self.kinds.iter().map(|(n, k)| Vertex { name: n.clone(), kind: k.clone() }).collect(),
            directed: self.directed.iter().cloned().collect(),
            bidirected: self.bidirected.iter().cloned().collect(),
        }
    }

    /// Shortest undirected distances (all edge kinds) from `from`.
    pub fn distances(&self, from: &VertexSet) -> BTreeMap<String, usize> {
        let mut dist: BTreeMap<String, usize> = from.iter().map(|v| (v.clone(), 0)).collect();
        let mut frontier: Vec<String> = from.iter().cloned().collect();
        let mut d = 0;
        while !frontier.is_empty() {
            d += 1;
            let mut next = Vec::new();
            for v in &frontier {
                for n in self.neighbours(v) {
                    if !dist.contains_key(&n) {
                        dist.insert(n.clone(), d);
                        next.push(n);
                    }
                }
            }
            frontier = next;
        }
        dist
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vs(names: &[&str]) -> VertexSet {
        VertexSet::from_names(names.iter().copied())
    }

    fn five_vertex() -> Graph {
        RawGraph::new().edge("A", "D").edge("B", "C").edge("B", "D").edge("D", "E").with_implicit_vertices().validate().unwrap()
    }

    #[test]
    fn smallest_graph_validates() {
        assert!(RawGraph::new().edge("X", "Y").with_implicit_vertices().validate().is_ok());
    }

    #[test]
    fn two_cycle_is_named() {
        let err = RawGraph::new().edge("X", "Y").edge("Y", "X").with_implicit_vertices().validate().unwrap_err();
        assert_eq!(err.0, vec![GraphError::CycleDetected(vec!["X".into(), "Y".into(), "X".into()])]);
    }

    #[test]
    fn selection_vertex_cannot_emit() {
        let err = RawGraph::new()
            .vertex("X")
            .vertex("Y")
            .vertex("Z")
            .selection("S")
            .edge("X", "Y")
            .edge("Z", "X")
            .edge("Z", "Y")
            .edge("Z", "S")
            .bi("Y", "S")
            .edge("S", "Y")
            .validate()
            .unwrap_err();
        assert!(matches!(&err.0[..], [GraphError::BadSelectionVertex { vertex, .. }] if vertex == "S"));
    }

    #[test]
    fn discrepancy_vertex_cannot_receive() {
        let err = RawGraph::new().vertex("X").discrepancy("S", &[]).edge("X", "S").validate().unwrap_err();
        assert!(matches!(&err.0[..], [GraphError::BadDiscrepancyVertex { .. }]));
    }

    #[test]
    fn unknown_endpoint_and_duplicates_reported() {
        let err = RawGraph::new().vertex("X").edge("X", "Y").bi("X", "X").validate().unwrap_err();
        assert_eq!(err.0.len(), 2);
        let err = RawGraph::new().vertex("X").vertex("Y").edge("X", "Y").edge("X", "Y").bi("X", "Y").bi("Y", "X").validate().unwrap_err();
        assert_eq!(err.0.len(), 2);
    }

    #[test]
    fn kinship_closures() {
        let g = five_vertex();
        assert_eq!(g.ancestors(&vs(&["E"])).unwrap(), vs(&["A", "B", "D", "E"]));
        assert_eq!(g.descendants(&vs(&["C"])).unwrap(), vs(&["C"]));
        let xy = RawGraph::new().edge("X", "Y").with_implicit_vertices().validate().unwrap();
        assert_eq!(xy.descendants(&vs(&["X"])).unwrap(), vs(&["X", "Y"]));
        assert!(matches!(g.ancestors(&vs(&["Q"])), Err(GraphError::UnknownVertex(_))));
    }

    #[test]
    fn topological_order_ties_are_lexicographic() {
        assert_eq!(five_vertex().topological_order(), vec!["A", "B", "C", "D", "E"]);
        let chain = RawGraph::new().edge("X", "Y").edge("Y", "Z").with_implicit_vertices().validate().unwrap();
        assert_eq!(chain.topological_order(), vec!["X", "Y", "Z"]);
        let iso = RawGraph::new().vertex("B").vertex("A").validate().unwrap();
        assert_eq!(iso.topological_order(), vec!["A", "B"]);
    }

    #[test]
    fn mutilation_removes_arrowheads() {
        let g = RawGraph::new().edge("X", "Y").edge("Z", "X").bi("X", "Y").with_implicit_vertices().validate().unwrap();
        let cut = g.mutilate(&vs(&["X"]), &VertexSet::new()).unwrap();
        assert!(!cut.has_edge("Z", "X"));
        assert!(!cut.has_bidirected("X", "Y"));
        assert!(cut.has_edge("X", "Y"));
        let out = g.mutilate(&VertexSet::new(), &vs(&["X"])).unwrap();
        assert!(!out.has_edge("X", "Y"));
        assert!(out.has_bidirected("X", "Y"));
        assert_eq!(g.mutilate(&VertexSet::new(), &VertexSet::new()).unwrap(), g);
        assert!(g.mutilate(&vs(&["Q"]), &VertexSet::new()).is_err());
    }

    #[test]
    fn subsets_are_size_then_lex_ordered() {
        let s = vs(&["A", "B", "C"]);
        let subs: Vec<String> = s.subsets(2).iter().map(|x| x.to_string()).collect();
        assert_eq!(subs, vec!["{}", "{A}", "{B}", "{C}", "{A,B}", "{A,C}", "{B,C}"]);
    }
}
