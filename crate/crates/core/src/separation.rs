//! d-separation by reachability, and the independence lists it implies.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, VertexSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeparationError {
    #[error("sets overlap on {0}")]
    OverlappingSets(String),
    #[error("unknown vertex {0}")]
    UnknownVertex(String),
    #[error("graph has {0} vertices; at most 128 are supported")]
    TooManyVertices(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct IndependenceStatement {
    pub left: VertexSet,
    pub right: VertexSet,
    pub given: VertexSet,
}

impl fmt::Display for IndependenceStatement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |s: &VertexSet| s.iter().cloned().collect::<Vec<_>>().join(",");
        write!(f, "{} ⫫ {}", join(&self.left), join(&self.right))?;
        if !self.given.is_empty() {
            write!(f, " | {}", join(&self.given))?;
        }
        Ok(())
    }
}

pub type Mask = u128;

/// Index-based adjacency for repeated queries against one graph.
#[derive(Debug, Clone)]
pub struct CompiledGraph {
    names: Vec<String>,
    index: BTreeMap<String, usize>,
    parents: Vec<Mask>,
    children: Vec<Mask>,
    spouses: Vec<Mask>,
}

impl CompiledGraph {
    pub fn new(g: &Graph) -> Result<Self, SeparationError> {
        let names: Vec<String> = g.vertex_names().cloned().collect();
        if names.len() > 128 {
            return Err(SeparationError::TooManyVertices(names.len()));
        }
        let index: BTreeMap<String, usize> = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        let n = names.len();
        let mut parents = vec![0; n];
        let mut children = vec![0; n];
        let mut spouses = vec![0; n];
        for (a, b) in g.directed_edges() {
            let (i, j) = (index[a], index[b]);
            children[i] |= 1 << j;
            parents[j] |= 1 << i;
        }
        for (a, b) in g.bidirected_edges() {
            let (i, j) = (index[a], index[b]);
            spouses[i] |= 1 << j;
            spouses[j] |= 1 << i;
        }
        Ok(CompiledGraph { names, index, parents, children, spouses })
    }

    pub fn mask(&self, s: &VertexSet) -> Result<Mask, SeparationError> {
        let mut m = 0;
        for v in s {
            let i = self.index.get(v).ok_or_else(|| SeparationError::UnknownVertex(v.clone()))?;
            m |= 1 << i;
        }
        Ok(m)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    fn ancestors(&self, s: Mask) -> Mask {
        let mut seen = s;
        let mut frontier = s;
        while frontier != 0 {
            let i = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let new = self.parents[i] & !seen;
            seen |= new;
            frontier |= new;
        }
        seen
    }

    /// True iff no active path connects `x` and `y` given `z`.
    ///
    /// A walk state is (vertex, arrived-with-arrowhead). Leaving a vertex
    /// through an edge with an arrowhead there, after arriving on one, makes
    /// it a collider: passable iff it is an ancestor of `z`. Any other
    /// transit is passable iff the vertex is not in `z`.
    pub fn separated(&self, x: Mask, y: Mask, z: Mask) -> bool {
        let an_z = self.ancestors(z);
        let n = self.names.len();
        let mut visited = vec![[false; 2]; n];
        let mut stack: Vec<(usize, bool, bool)> = Vec::new();
        let mut xs = x;
        while xs != 0 {
            let i = xs.trailing_zeros() as usize;
            xs &= xs - 1;
            stack.push((i, false, true));
        }
        while let Some((v, head_in, start)) = stack.pop() {
            if !start {
                if y >> v & 1 == 1 {
                    return false;
                }
                if visited[v][head_in as usize] {
                    continue;
                }
                visited[v][head_in as usize] = true;
            }
            let in_z = z >> v & 1 == 1;
            let collider_ok = an_z >> v & 1 == 1;
            // leaving through a tail at v: never a collider here
            let tail_ok = start || !in_z;
            // leaving through an arrowhead at v
            let head_ok = start || if head_in { collider_ok } else { !in_z };
            if tail_ok {
                let mut c = self.children[v];
                while c != 0 {
                    let j = c.trailing_zeros() as usize;
                    c &= c - 1;
                    stack.push((j, true, false));
                }
            }
            if head_ok {
                let mut p = self.parents[v];
                while p != 0 {
                    let j = p.trailing_zeros() as usize;
                    p &= p - 1;
                    stack.push((j, false, false));
                }
                let mut s = self.spouses[v];
                while s != 0 {
                    let j = s.trailing_zeros() as usize;
                    s &= s - 1;
                    stack.push((j, true, false));
                }
            }
        }
        true
    }
}

fn check_disjoint(sets: [&VertexSet; 3]) -> Result<(), SeparationError> {
    for i in 0..3 {
        for j in i + 1..3 {
            if let Some(v) = sets[i].intersection(sets[j]).iter().next() {
                return Err(SeparationError::OverlappingSets(v.clone()));
            }
        }
    }
    Ok(())
}

/// Is `x` d-separated from `y` by `z` in `g`?
pub fn d_separated(g: &Graph, x: &VertexSet, y: &VertexSet, z: &VertexSet) -> Result<bool, SeparationError> {
    check_disjoint([x, y, z])?;
    let c = CompiledGraph::new(g)?;
    Ok(c.separated(c.mask(x)?, c.mask(y)?, c.mask(z)?))
}

/// Singleton independencies between endogenous vertices with given-sets of
/// size at most `max_given`. A given-set is listed only when it separates and
/// none of its proper subsets does.
pub fn implied_independencies(g: &Graph, max_given: usize) -> Vec<IndependenceStatement> {
    let c = CompiledGraph::new(g).expect("graph too large for separation queries");
    let endo = g.endogenous();
    let names: Vec<&String> = endo.iter().collect();
    let mut out = Vec::new();
    for (i, a) in names.iter().enumerate() {
        for b in &names[i + 1..] {
            let pair = VertexSet::from_names([a.as_str(), b.as_str()]);
            let rest = endo.difference(&pair);
            let ma = c.mask(&VertexSet::singleton(a)).unwrap();
            let mb = c.mask(&VertexSet::singleton(b)).unwrap();
            let mut found: Vec<Mask> = Vec::new();
            for given in rest.subsets(max_given) {
                let mz = c.mask(&given).unwrap();
                if found.iter().any(|f| f & mz == *f) {
                    continue;
                }
                if c.separated(ma, mb, mz) {
                    found.push(mz);
                    out.push(IndependenceStatement { left: VertexSet::singleton(a), right: VertexSet::singleton(b), given });
                }
            }
        }
    }
    out.sort();
    out
}

/// Lexicographically first minimum-size subset of `candidates` separating
/// `x` from `y`, if one of size at most `max_size` exists.
pub fn find_separator(
    g: &Graph,
    x: &VertexSet,
    y: &VertexSet,
    candidates: &VertexSet,
    max_size: usize,
) -> Result<Option<VertexSet>, SeparationError> {
    check_disjoint([x, y, candidates])?;
    let c = CompiledGraph::new(g)?;
    let (mx, my) = (c.mask(x)?, c.mask(y)?);
    c.mask(candidates)?;
    for s in candidates.subsets(max_size) {
        if c.separated(mx, my, c.mask(&s)?) {
            return Ok(Some(s));
        }
    }
    Ok(None)
}
