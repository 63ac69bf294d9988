//! Best-first derivation search over canonical expressions.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::sync::RwLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::derivation::{Builder, Derivation};
use super::rules::{premise_base, premise_holds, rewrite, Params, Premise, RewriteError, Rule};
use crate::estimand::{canonicalize, Domain, Estimand, EstimandError, ProbTerm, Query, SourceCatalog, SourceKind};
use crate::graph::{Graph, VertexSet};
use crate::separation::d_separated;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBudget {
    /// Longest derivation considered.
    pub max_steps: usize,
    /// Most symbols allowed in one term.
    pub max_term_width: usize,
    /// Most expressions expanded.
    pub max_states: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget { max_steps: 12, max_term_width: 8, max_states: 200_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum Outcome {
    Derived { derivation: Derivation },
    NotDerivedWithinBudget { expanded: usize },
    ProvablyNot { reason: String },
}

impl Outcome {
    pub fn derivation(&self) -> Option<&Derivation> {
        match self {
            Outcome::Derived { derivation } => Some(derivation),
            _ => None,
        }
    }

    pub fn status(&self) -> &'static str {
        match self {
            Outcome::Derived { .. } => "derived",
            Outcome::NotDerivedWithinBudget { .. } => "not_derived_within_budget",
            Outcome::ProvablyNot { .. } => "provably_not",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("the source catalogue is empty")]
    EmptyCatalog,
    #[error("invalid budget: every bound must be positive")]
    InvalidBudget,
    #[error(transparent)]
    Estimand(#[from] EstimandError),
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
}

pub fn check_query(q: &Query, g: &Graph) -> Result<(), EngineError> {
    let t = &q.term;
    t.check().map_err(|e| EngineError::InvalidQuery(e.to_string()))?;
    if !t.domain.is_target() {
        return Err(EngineError::InvalidQuery("the query must refer to the target domain".into()));
    }
    if let Some(v) = t.vars().iter().find(|v| !g.is_endogenous(v)) {
        return Err(EngineError::InvalidQuery(format!("{v} is not an endogenous vertex")));
    }
    if t.symbols().iter().any(|s| s.prime != 0) {
        return Err(EngineError::InvalidQuery("query symbols must be unprimed".into()));
    }
    Ok(())
}

/// Shared, thread-safe premise memo.
struct PremiseCache<'g> {
    g: &'g Graph,
    memo: RwLock<HashMap<Premise, bool>>,
}

impl<'g> PremiseCache<'g> {
    fn holds(&self, p: &Premise) -> bool {
        if let Some(v) = self.memo.read().expect("premise memo").get(p) {
            return *v;
        }
        let v = premise_holds(self.g, p);
        self.memo.write().expect("premise memo").insert(p.clone(), v);
        v
    }
}

struct Context<'a> {
    g: &'a Graph,
    query: &'a Query,
    cat: &'a SourceCatalog,
    budget: SearchBudget,
    measured: VertexSet,
    intervened: VertexSet,
    source_domains: Vec<Domain>,
    has_target: bool,
    selection: bool,
    distance_graph: Graph,
    cache: PremiseCache<'a>,
}

type Move = (Rule, Vec<usize>, Params);

fn vs1(v: &str) -> VertexSet {
    VertexSet::singleton(v)
}

impl<'a> Context<'a> {
    fn term_moves(&self, path: &[usize], t: &ProbTerm, out: &mut Vec<Move>) {
        let p = path.to_vec();
        let cvars = t.condition_vars();
        // only interventional terms about the queried outcome are expanded by conditioning
        let about_query = !t.outcome_vars().is_disjoint(&self.query.term.outcome_vars());
        let dvars = t.do_vars();
        let near = self.distance_graph.distances(&t.vars());
        let candidates: Vec<String> = near
            .iter()
            .filter(|(v, d)| **d <= 2 && self.g.is_endogenous(v) && !t.vars().contains(v.as_str()) && self.measured.contains(v))
            .map(|(v, _)| v.clone())
            .collect();
        let candidates = VertexSet::from_names(candidates);

        for c in &cvars {
            out.push((Rule::Rule1, p.clone(), Params::Observe { insert: false, vars: vs1(c) }));
        }
        for c in &candidates {
            out.push((Rule::Rule1, p.clone(), Params::Observe { insert: true, vars: vs1(c) }));
        }
        if self.selection {
            out.push((Rule::SelectionAttach, p.clone(), Params::Select { attach: !t.selected }));
        }
        for d in &dvars {
            out.push((Rule::Rule2, p.clone(), Params::Exchange { promote: false, vars: vs1(d) }));
            out.push((Rule::Rule3, p.clone(), Params::Act { insert: false, vars: vs1(d) }));
        }
        if dvars.len() > 1 {
            out.push((Rule::Rule2, p.clone(), Params::Exchange { promote: false, vars: dvars.clone() }));
            out.push((Rule::Rule3, p.clone(), Params::Act { insert: false, vars: dvars.clone() }));
        }
        // promotion pays off when the action can be deleted or is measured experimentally
        let promotable = if about_query && !dvars.is_empty() { cvars.clone() } else { cvars.intersection(&self.intervened) };
        for c in promotable.iter() {
            out.push((Rule::Rule2, p.clone(), Params::Exchange { promote: true, vars: vs1(c) }));
        }
        if dvars.is_subset(&self.query.term.do_vars()) {
            for v in self.intervened.difference(&t.vars()).iter() {
                out.push((Rule::Rule3, p.clone(), Params::Act { insert: true, vars: vs1(v) }));
            }
        }
        let conditionable = if dvars.is_empty() || !about_query { Vec::new() } else { candidates.subsets(3) };
        for s in conditionable.into_iter().skip(1) {
            out.push((Rule::Condition, p.clone(), Params::Condition { vars: s }));
        }
        let ovars = t.outcome_vars();
        if ovars.len() > 1 {
            for s in ovars.subsets(ovars.len() - 1).into_iter().skip(1) {
                out.push((Rule::ChainSplit, p.clone(), Params::Split { vars: s }));
            }
        }
        match &t.domain {
            Domain::Target => {
                for d in &self.source_domains {
                    out.push((Rule::DomainExchange, p.clone(), Params::Relabel { to: d.clone() }));
                }
            }
            Domain::Source(_) if self.has_target => {
                out.push((Rule::DomainExchange, p.clone(), Params::Relabel { to: Domain::Target }));
            }
            Domain::Source(_) => {}
        }
    }

    fn structural_moves(&self, e: &Estimand, path: &mut Vec<usize>, out: &mut Vec<Move>) {
        match e {
            Estimand::Term(_) => {}
            Estimand::Sum(b, body) => {
                for s in b {
                    out.push((Rule::Marginalize, path.clone(), Params::SumOut { symbol: s.clone() }));
                }
                path.push(0);
                self.structural_moves(body, path, out);
                path.pop();
            }
            Estimand::Product(fs) => {
                for i in 0..fs.len() {
                    for j in 0..fs.len() {
                        if i != j && matches!((&fs[i], &fs[j]), (Estimand::Term(_), Estimand::Term(_))) {
                            out.push((Rule::ChainSplit, path.clone(), Params::Merge { first: i, second: j }));
                        }
                    }
                }
                for (i, f) in fs.iter().enumerate() {
                    path.push(i);
                    self.structural_moves(f, path, out);
                    path.pop();
                }
            }
            Estimand::Quotient(n, d) => {
                out.push((Rule::CancelQuotient, path.clone(), Params::Cancel));
                path.push(0);
                self.structural_moves(n, path, out);
                path.pop();
                path.push(1);
                self.structural_moves(d, path, out);
                path.pop();
            }
        }
    }

    fn moves(&self, e: &Estimand) -> Vec<Move> {
        let mut out = Vec::new();
        for (path, t) in e.terms() {
            if !self.cat.term_estimable(&t) {
                self.term_moves(&path, &t, &mut out);
            }
        }
        self.structural_moves(e, &mut Vec::new(), &mut out);
        out
    }

    /// Applies `m`, then every available marginalization (a binder that
    /// only names the outcome of one factor sums that factor out).
    fn successor(&self, e: &Estimand, m: &Move) -> Option<(Estimand, Vec<Move>)> {
        let mut cur = self.single(e, m)?;
        let mut applied = vec![m.clone()];
        'outer: for _ in 0..16 {
            let mut sums = Vec::new();
            self.structural_moves(&cur, &mut Vec::new(), &mut sums);
            for s in sums.into_iter().filter(|s| s.0 == Rule::Marginalize) {
                if let Some(next) = self.single(&cur, &s) {
                    cur = next;
                    applied.push(s);
                    continue 'outer;
                }
            }
            break;
        }
        Some((cur, applied))
    }

    fn single(&self, e: &Estimand, m: &Move) -> Option<Estimand> {
        let (raw, premise) = rewrite(e, self.g, m.0, &m.1, &m.2).ok()?;
        if let Some(p) = &premise {
            if !self.cache.holds(p) {
                return None;
            }
        }
        if raw.terms().iter().any(|(_, t)| t.width() > self.budget.max_term_width) {
            return None;
        }
        canonicalize(&raw).ok()
    }

    fn unestimable(&self, e: &Estimand) -> usize {
        e.terms().iter().filter(|(_, t)| !self.cat.term_estimable(t)).count()
    }
}

struct Node {
    parent: Option<usize>,
    via: Vec<Move>,
    depth: usize,
    expr: Estimand,
}

/// Exact negative: a do-free query against selected-only data is
/// recoverable iff the outcomes are separated from S given the conditions.
fn selection_verdict(q: &Query, g: &Graph, cat: &SourceCatalog) -> Option<String> {
    let t = &q.term;
    let s = g.selection_vertices().iter().next()?.clone();
    let only_selected =
        cat.sources.iter().all(|src| src.selected && src.domain == Domain::Target && matches!(src.kind, SourceKind::Observational));
    if !t.do_set.is_empty() || t.selected || !only_selected {
        return None;
    }
    let base = premise_base(g, &None);
    let sep = d_separated(&base, &t.outcome_vars(), &VertexSet::singleton(&s), &t.condition_vars()).ok()?;
    (!sep).then(|| {
        format!(
            "{} is not separated from {} given {}: a conditional distribution is recoverable from selected data only under that separation",
            t.outcome_vars(),
            s,
            t.condition_vars()
        )
    })
}

/// Searches for a derivation turning the query into an expression whose
/// every term some source provides.
pub fn derive(q: &Query, g: &Graph, cat: &SourceCatalog, budget: &SearchBudget) -> Result<Outcome, EngineError> {
    check_query(q, g)?;
    if cat.is_empty() {
        return Err(EngineError::EmptyCatalog);
    }
    if budget.max_steps == 0 || budget.max_term_width == 0 || budget.max_states == 0 {
        return Err(EngineError::InvalidBudget);
    }
    if let Some(reason) = selection_verdict(q, g, cat) {
        return Ok(Outcome::ProvablyNot { reason });
    }
    let ctx = Context {
        g,
        query: q,
        cat,
        budget: *budget,
        measured: cat.measured().intersection(&g.endogenous()),
        intervened: cat.intervened(),
        source_domains: cat.domains().into_iter().filter(|d| !d.is_target()).collect(),
        has_target: cat.domains().contains(&Domain::Target),
        selection: !g.selection_vertices().is_empty() && cat.has_selected(),
        distance_graph: premise_base(g, &None),
        cache: PremiseCache { g, memo: RwLock::new(HashMap::new()) },
    };

    let start = canonicalize(&q.estimand())?;
    let mut nodes = vec![Node { parent: None, via: Vec::new(), depth: 0, expr: start.clone() }];
    let mut index: HashMap<Estimand, usize> = HashMap::from([(start.clone(), 0)]);
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((ctx.unestimable(&start), start.size(), start, 0usize)));
    let mut expanded = 0;

    while let Some(Reverse((unest, _, _, id))) = heap.pop() {
        if unest == 0 {
            return Ok(Outcome::Derived { derivation: replay(q, g, &nodes, id)? });
        }
        if expanded >= budget.max_states {
            break;
        }
        expanded += 1;
        if nodes[id].depth >= budget.max_steps {
            continue;
        }
        let expr = nodes[id].expr.clone();
        let moves = ctx.moves(&expr);
        let results: Vec<Option<(Estimand, Vec<Move>)>> = moves.par_iter().map(|m| ctx.successor(&expr, m)).collect();
        for (next, via) in results.into_iter().flatten() {
            if index.contains_key(&next) {
                continue;
            }
            let nid = nodes.len();
            index.insert(next.clone(), nid);
            heap.push(Reverse((ctx.unestimable(&next), next.size(), next.clone(), nid)));
            nodes.push(Node { parent: Some(id), via, depth: nodes[id].depth + 1, expr: next });
        }
    }
    Ok(Outcome::NotDerivedWithinBudget { expanded })
}

fn replay(q: &Query, g: &Graph, nodes: &[Node], goal: usize) -> Result<Derivation, EngineError> {
    let mut chain = Vec::new();
    let mut cur = goal;
    while let Some(p) = nodes[cur].parent {
        chain.extend(nodes[cur].via.iter().rev().cloned());
        cur = p;
    }
    chain.reverse();
    let mut b = Builder::new(g, q)?;
    for (rule, focus, params) in chain {
        b.step(rule, &focus, params)?;
    }
    Ok(b.finish())
}
