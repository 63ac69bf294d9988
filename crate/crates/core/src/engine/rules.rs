//! Rewrite rules and the d-separation premises that license them.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimand::{canonicalize, fresh_symbol, Domain, Estimand, EstimandError, ProbTerm, Symbol};
use crate::graph::{Graph, VertexSet};
use crate::separation::d_separated;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Rule {
    Rule1,
    Rule2,
    Rule3,
    Condition,
    Marginalize,
    ChainSplit,
    CancelQuotient,
    DomainExchange,
    SelectionAttach,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Rule arguments. Variables are vertex names; symbols are chosen by the
/// rule itself so that replay is deterministic.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Params {
    /// Rule 1: add or drop observations.
    Observe { insert: bool, vars: VertexSet },
    /// Rule 2: `promote` turns observations into actions, otherwise actions
    /// into observations.
    Exchange { promote: bool, vars: VertexSet },
    /// Rule 3: add or drop actions.
    Act { insert: bool, vars: VertexSet },
    /// P(a|c) = Σ_v P(a|v,c) P(v|c).
    Condition { vars: VertexSet },
    /// Σ_v P(v,a|c) = P(a|c) for a binder of the focused sum.
    SumOut { symbol: Symbol },
    /// P(a|c) = Σ_v P(a,v|c).
    Expand { var: String },
    /// P(a,b|c) = P(a|b,c) P(b|c) with `vars` = b.
    Split { vars: VertexSet },
    /// Factors `first` = P(a|b,c) and `second` = P(b|c) of the focused product merge.
    Merge { first: usize, second: usize },
    /// P(a,b|c) / P(b|c) = P(a|b,c).
    Cancel,
    /// Re-tag the focused term's population.
    Relabel { to: Domain },
    /// Add or drop the S=1 condition.
    Select { attach: bool },
}

/// Which graph a premise is checked in.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Mutilation {
    pub cut_incoming: VertexSet,
    pub cut_outgoing: VertexSet,
    /// `None`: the causal diagram without discrepancy vertices. `Some(l)`:
    /// the selection diagram keeping only the discrepancy vertices of source `l`.
    pub domain: Option<String>,
}

/// The statement (x ⫫ y | z) in the mutilated graph.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Premise {
    pub x: VertexSet,
    pub y: VertexSet,
    pub z: VertexSet,
    pub mutilation: Mutilation,
}

impl fmt::Display for Premise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} ⫫ {} | {}) in G", self.x, self.y, self.z)?;
        let m = &self.mutilation;
        if let Some(d) = &m.domain {
            write!(f, "^({d})")?;
        }
        if !m.cut_incoming.is_empty() {
            write!(f, " cut-in {}", m.cut_incoming)?;
        }
        if !m.cut_outgoing.is_empty() {
            write!(f, " cut-out {}", m.cut_outgoing)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RewriteError {
    #[error("rule {rule} does not take parameters {params}")]
    ParamsMismatch { rule: Rule, params: String },
    #[error("focus {0:?} does not name a suitable subterm")]
    BadFocus(Vec<usize>),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("premise fails: {0}")]
    PremiseFails(Box<Premise>),
    #[error(transparent)]
    Estimand(#[from] EstimandError),
}

/// Base graph for a premise before mutilation.
pub fn premise_base(g: &Graph, domain: &Option<String>) -> Graph {
    let all = g.discrepancy_vertices();
    match domain {
        None => g.without_vertices(&all),
        Some(l) => g.without_vertices(&all.difference(&g.discrepancies_for(l))),
    }
}

pub fn premise_graph(g: &Graph, m: &Mutilation) -> Graph {
    premise_base(g, &m.domain).mutilate(&m.cut_incoming, &m.cut_outgoing).expect("premise sets come from the graph")
}

/// Fresh d-separation check of a premise.
pub fn premise_holds(g: &Graph, p: &Premise) -> bool {
    let graph = premise_graph(g, &p.mutilation);
    if [&p.x, &p.y, &p.z].iter().any(|s| graph.check_known(s).is_err()) {
        return false;
    }
    d_separated(&graph, &p.x, &p.y, &p.z).unwrap_or(false)
}

fn selection_vertex(g: &Graph) -> Option<String> {
    g.selection_vertices().iter().next().cloned()
}

/// Conditioning set of a term, with the selection vertex when selected.
fn given(t: &ProbTerm, g: &Graph) -> VertexSet {
    let mut w = t.condition_vars();
    if t.selected {
        if let Some(s) = selection_vertex(g) {
            w.insert(s);
        }
    }
    w
}

fn causal(cut_incoming: VertexSet, cut_outgoing: VertexSet) -> Mutilation {
    Mutilation { cut_incoming, cut_outgoing, domain: None }
}

/// Rule 1 premise (Y ⫫ Z | X, W) in G_{X̄}, where W excludes `z`.
pub fn rule1_premise(t: &ProbTerm, g: &Graph, z: &VertexSet) -> Premise {
    Premise {
        x: t.outcome_vars(),
        y: z.clone(),
        z: t.do_vars().union(&given(t, g).difference(z)),
        mutilation: causal(t.do_vars(), VertexSet::new()),
    }
}

/// Rule 2 premise (Y ⫫ Z | X, W) in G_{X̄ Z̲}, where X excludes `z`.
pub fn rule2_premise(t: &ProbTerm, g: &Graph, z: &VertexSet) -> Premise {
    let x = t.do_vars().difference(z);
    Premise { x: t.outcome_vars(), y: z.clone(), z: x.union(&given(t, g).difference(z)), mutilation: causal(x, z.clone()) }
}

/// Rule 3 premise (Y ⫫ Z | X, W) in G_{X̄, Z(W)̄}, where Z(W) holds the
/// z-vertices that are not ancestors of any W-vertex in G_{X̄}.
pub fn rule3_premise(t: &ProbTerm, g: &Graph, z: &VertexSet) -> Premise {
    let x = t.do_vars().difference(z);
    let w = given(t, g);
    let base = premise_base(g, &None);
    let gx = base.mutilate(&x, &VertexSet::new()).expect("term vertices come from the graph");
    let an_w = gx.ancestors(&w).unwrap_or_default();
    let z_w = z.difference(&an_w);
    Premise { x: t.outcome_vars(), y: z.clone(), z: x.union(&w), mutilation: causal(x.union(&z_w), VertexSet::new()) }
}

/// Premise for adding or removing S=1: (Y ⫫ S | X, W) in G_{X̄}.
pub fn selection_premise(t: &ProbTerm, g: &Graph) -> Option<Premise> {
    let s = selection_vertex(g)?;
    Some(Premise {
        x: t.outcome_vars(),
        y: VertexSet::singleton(&s),
        z: t.do_vars().union(&t.condition_vars()),
        mutilation: causal(t.do_vars(), VertexSet::new()),
    })
}

/// Premise for moving a term between the target and source `label`: the
/// source's discrepancy vertices are separated from the outcomes given the
/// actions and observations, in the selection diagram cut at the actions.
pub fn exchange_premise(t: &ProbTerm, g: &Graph, label: &str) -> Premise {
    Premise {
        x: g.discrepancies_for(label),
        y: t.outcome_vars(),
        z: t.do_vars().union(&given(t, g)),
        mutilation: Mutilation { cut_incoming: t.do_vars(), cut_outgoing: VertexSet::new(), domain: Some(label.to_string()) },
    }
}

pub fn applicable_rule1(t: &ProbTerm, g: &Graph, z: &VertexSet) -> bool {
    z.is_disjoint(&t.outcome_vars()) && premise_holds(g, &rule1_premise(t, g, z))
}

pub fn applicable_rule2(t: &ProbTerm, g: &Graph, z: &VertexSet) -> bool {
    let inside = z.is_subset(&t.do_vars()) || z.is_subset(&t.condition_vars());
    inside && !z.is_empty() && premise_holds(g, &rule2_premise(t, g, z))
}

pub fn applicable_rule3(t: &ProbTerm, g: &Graph, z: &VertexSet) -> bool {
    let ok = z.is_subset(&t.do_vars()) || z.is_disjoint(&t.vars());
    ok && !z.is_empty() && premise_holds(g, &rule3_premise(t, g, z))
}

/// Symbol for a variable newly inserted into the term at `path`: the
/// innermost enclosing binder of that variable, else the plain symbol.
fn insertion_symbol(e: &Estimand, path: &[usize], var: &str) -> Symbol {
    e.enclosing_binders(path).iter().rev().find_map(|b| b.iter().find(|s| s.var == var).cloned()).unwrap_or_else(|| Symbol::new(var))
}

fn term_at(e: &Estimand, path: &[usize]) -> Result<ProbTerm, RewriteError> {
    match e.get(path) {
        Some(Estimand::Term(t)) => Ok(t.clone()),
        _ => Err(RewriteError::BadFocus(path.to_vec())),
    }
}

fn na<T>(msg: impl Into<String>) -> Result<T, RewriteError> {
    Err(RewriteError::NotApplicable(msg.into()))
}

fn take_vars(set: &mut BTreeSet<Symbol>, vars: &VertexSet) -> BTreeSet<Symbol> {
    let taken: BTreeSet<Symbol> = set.iter().filter(|s| vars.contains(&s.var)).cloned().collect();
    for s in &taken {
        set.remove(s);
    }
    taken
}

/// Outcome of applying one rule: the canonical result and the premise the
/// rule requires (not yet checked).
pub struct Applied {
    pub result: Estimand,
    pub premise: Option<Premise>,
}

/// Applies `rule` at `focus` without checking the premise.
pub fn apply_unchecked(e: &Estimand, g: &Graph, rule: Rule, focus: &[usize], params: &Params) -> Result<Applied, RewriteError> {
    let (whole, premise) = rewrite(e, g, rule, focus, params)?;
    Ok(Applied { result: canonicalize(&whole)?, premise })
}

/// The raw (not yet canonical) rewrite and its premise.
pub fn rewrite(e: &Estimand, g: &Graph, rule: Rule, focus: &[usize], params: &Params) -> Result<(Estimand, Option<Premise>), RewriteError> {
    let mismatch = || RewriteError::ParamsMismatch { rule, params: format!("{params:?}") };
    let known = |vars: &VertexSet| -> Result<(), RewriteError> {
        match vars.iter().find(|v| !g.is_endogenous(v)) {
            Some(v) => na(format!("{v} is not an endogenous vertex")),
            None if vars.is_empty() => na("empty variable set"),
            None => Ok(()),
        }
    };
    let (replacement, premise) = match (rule, params) {
        (Rule::Rule1, Params::Observe { insert, vars }) => {
            // the selection vertex may be observed like any other vertex
            let sel = selection_vertex(g).filter(|s| vars.contains(s));
            let plain = match &sel {
                Some(s) => vars.difference(&VertexSet::singleton(s)),
                None => vars.clone(),
            };
            if !plain.is_empty() || sel.is_none() {
                known(&plain)?;
            }
            let mut t = term_at(e, focus)?;
            if *insert {
                if !plain.is_disjoint(&t.vars()) || (sel.is_some() && t.selected) {
                    return na("inserted observation already in the term");
                }
                let p = rule1_premise(&t, g, vars);
                t.conditions.extend(plain.iter().map(|v| insertion_symbol(e, focus, v)));
                t.selected |= sel.is_some();
                (Estimand::Term(t), Some(p))
            } else {
                if !plain.is_subset(&t.condition_vars()) || (sel.is_some() && !t.selected) {
                    return na("deleted observation not in the term");
                }
                let p = rule1_premise(&t, g, vars);
                take_vars(&mut t.conditions, &plain);
                if sel.is_some() {
                    t.selected = false;
                }
                (Estimand::Term(t), Some(p))
            }
        }
        (Rule::Rule2, Params::Exchange { promote, vars }) => {
            known(vars)?;
            let mut t = term_at(e, focus)?;
            if *promote {
                if !vars.is_subset(&t.condition_vars()) {
                    return na("promoted observation not in the term");
                }
                let p = rule2_premise(&t, g, vars);
                let moved = take_vars(&mut t.conditions, vars);
                t.do_set.extend(moved);
                (Estimand::Term(t), Some(p))
            } else {
                if !vars.is_subset(&t.do_vars()) {
                    return na("demoted action not in the term");
                }
                let p = rule2_premise(&t, g, vars);
                let moved = take_vars(&mut t.do_set, vars);
                t.conditions.extend(moved);
                (Estimand::Term(t), Some(p))
            }
        }
        (Rule::Rule3, Params::Act { insert, vars }) => {
            known(vars)?;
            let mut t = term_at(e, focus)?;
            if *insert {
                if !vars.is_disjoint(&t.vars()) {
                    return na("inserted action already in the term");
                }
                let mut with = t.clone();
                with.do_set.extend(vars.iter().map(|v| insertion_symbol(e, focus, v)));
                let p = rule3_premise(&with, g, vars);
                (Estimand::Term(with), Some(p))
            } else {
                if !vars.is_subset(&t.do_vars()) {
                    return na("deleted action not in the term");
                }
                let p = rule3_premise(&t, g, vars);
                take_vars(&mut t.do_set, vars);
                (Estimand::Term(t), Some(p))
            }
        }
        (Rule::SelectionAttach, Params::Select { attach }) => {
            let mut t = term_at(e, focus)?;
            if t.selected == *attach {
                return na("selection flag already in that state");
            }
            let Some(p) = selection_premise(&t, g) else {
                return na("graph has no selection vertex");
            };
            t.selected = *attach;
            (Estimand::Term(t), Some(p))
        }
        (Rule::DomainExchange, Params::Relabel { to }) => {
            let mut t = term_at(e, focus)?;
            let label = match (&t.domain, to) {
                (Domain::Target, Domain::Source(l)) | (Domain::Source(l), Domain::Target) => l.clone(),
                _ => return na("exchange must be between the target and one source"),
            };
            let p = exchange_premise(&t, g, &label);
            t.domain = to.clone();
            (Estimand::Term(t), Some(p))
        }
        (Rule::Condition, Params::Condition { vars }) => {
            known(vars)?;
            let t = term_at(e, focus)?;
            if !vars.is_disjoint(&t.vars()) {
                return na("conditioning variable already in the term");
            }
            let mut avoid = e.all_symbols();
            let mut fresh = BTreeSet::new();
            for v in vars {
                let s = fresh_symbol(v, &avoid);
                avoid.insert(s.clone());
                fresh.insert(s);
            }
            let mut first = t.clone();
            first.conditions.extend(fresh.iter().cloned());
            let second = ProbTerm { outcomes: fresh.clone(), ..t };
            (Estimand::Sum(fresh, Box::new(Estimand::Product(vec![first.into(), second.into()]))), None)
        }
        (Rule::Marginalize, Params::SumOut { symbol }) => {
            let Some(Estimand::Sum(binders, body)) = e.get(focus) else {
                return Err(RewriteError::BadFocus(focus.to_vec()));
            };
            if !binders.contains(symbol) {
                return na("symbol is not bound here");
            }
            let factors: Vec<Estimand> = match &**body {
                Estimand::Product(fs) => fs.clone(),
                other => vec![other.clone()],
            };
            let hits: Vec<usize> = (0..factors.len()).filter(|&i| factors[i].all_symbols().contains(symbol)).collect();
            let [i] = hits.as_slice() else {
                return na("symbol occurs in more than one factor");
            };
            let Estimand::Term(t) = &factors[*i] else {
                return na("symbol occurs inside a compound factor");
            };
            if !t.outcomes.contains(symbol) {
                return na("symbol is not an outcome of its factor");
            }
            let mut fs = factors.clone();
            if t.outcomes.len() == 1 {
                fs.remove(*i);
            } else {
                let mut t = t.clone();
                t.outcomes.remove(symbol);
                fs[*i] = t.into();
            }
            let mut b = binders.clone();
            b.remove(symbol);
            (Estimand::Sum(b, Box::new(Estimand::Product(fs))), None)
        }
        (Rule::Marginalize, Params::Expand { var }) => {
            known(&VertexSet::singleton(var))?;
            let mut t = term_at(e, focus)?;
            if t.vars().contains(var) {
                return na("variable already in the term");
            }
            let s = fresh_symbol(var, &e.all_symbols());
            t.outcomes.insert(s.clone());
            (Estimand::Sum([s].into(), Box::new(t.into())), None)
        }
        (Rule::ChainSplit, Params::Split { vars }) => {
            let t = term_at(e, focus)?;
            if vars.is_empty() || !vars.is_subset(&t.outcome_vars()) || *vars == t.outcome_vars() {
                return na("split must be a nonempty proper subset of the outcomes");
            }
            let mut first = t.clone();
            let moved = take_vars(&mut first.outcomes, vars);
            first.conditions.extend(moved.iter().cloned());
            let second = ProbTerm { outcomes: moved, ..t };
            (Estimand::Product(vec![first.into(), second.into()]), None)
        }
        (Rule::ChainSplit, Params::Merge { first, second }) => {
            let Some(Estimand::Product(fs)) = e.get(focus) else {
                return Err(RewriteError::BadFocus(focus.to_vec()));
            };
            let (Some(Estimand::Term(a)), Some(Estimand::Term(b))) = (fs.get(*first), fs.get(*second)) else {
                return na("merge needs two atomic factors");
            };
            if first == second || !mergeable(a, b) {
                return na("factors do not chain");
            }
            let mut merged = a.clone();
            for s in &b.outcomes {
                merged.conditions.remove(s);
                merged.outcomes.insert(s.clone());
            }
            let mut out = fs.clone();
            out[*first] = merged.into();
            out.remove(*second);
            (Estimand::Product(out), None)
        }
        (Rule::CancelQuotient, Params::Cancel) => {
            let Some(Estimand::Quotient(n, d)) = e.get(focus) else {
                return Err(RewriteError::BadFocus(focus.to_vec()));
            };
            let (Estimand::Term(a), Estimand::Term(b)) = (&**n, &**d) else {
                return na("cancellation needs atomic numerator and denominator");
            };
            let same_context = a.do_set == b.do_set && a.selected == b.selected && a.domain == b.domain && a.conditions == b.conditions;
            if !same_context || !b.outcomes.is_subset(&a.outcomes) || b.outcomes == a.outcomes {
                return na("denominator is not a marginal of the numerator");
            }
            let mut t = a.clone();
            for s in &b.outcomes {
                t.outcomes.remove(s);
                t.conditions.insert(s.clone());
            }
            (Estimand::Term(t), None)
        }
        _ => return Err(mismatch()),
    };
    Ok((e.replace_at(focus, replacement)?, premise))
}

/// `a` = P(o|b,c) and `b` = P(b|c) in the same context.
fn mergeable(a: &ProbTerm, b: &ProbTerm) -> bool {
    a.do_set == b.do_set
        && a.selected == b.selected
        && a.domain == b.domain
        && b.outcomes.is_subset(&a.conditions)
        && a.conditions.difference(&b.outcomes).cloned().collect::<BTreeSet<_>>() == b.conditions
}

/// Applies a rule and checks its premise.
pub fn apply(e: &Estimand, g: &Graph, rule: Rule, focus: &[usize], params: &Params) -> Result<Applied, RewriteError> {
    let a = apply_unchecked(e, g, rule, focus, params)?;
    if let Some(p) = &a.premise {
        if !premise_holds(g, p) {
            return Err(RewriteError::PremiseFails(Box::new(p.clone())));
        }
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimand::{parse, render, Format};
    use crate::graph::RawGraph;

    fn vs(names: &[&str]) -> VertexSet {
        VertexSet::from_names(names.iter().copied())
    }

    fn small_backdoor() -> Graph {
        RawGraph::new()
            .edge("C", "Y")
            .edge("C", "W")
            .edge("W", "H")
            .edge("W", "Y")
            .edge("H", "Y")
            .edge("E", "C")
            .edge("E", "Y")
            .bi("W", "Y")
            .bi("C", "E")
            .with_implicit_vertices()
            .validate()
            .unwrap()
    }

    fn term(text: &str, g: &Graph) -> ProbTerm {
        match parse(text, g).unwrap() {
            Estimand::Term(t) => t,
            _ => panic!(),
        }
    }

    #[test]
    fn rule1_needs_separation_in_cut_graph() {
        let g = small_backdoor();
        assert!(!applicable_rule1(&term("P(y|do(c),e)", &g), &g, &vs(&["E"])));
        let iso = RawGraph::new().edge("X", "Y").vertex("V").with_implicit_vertices().validate().unwrap();
        assert!(applicable_rule1(&term("P(y|do(x))", &iso), &iso, &vs(&["V"])));
    }

    #[test]
    fn rule2_and_rule3_on_small_backdoor() {
        let g = small_backdoor();
        assert!(applicable_rule2(&term("P(y|do(c),e)", &g), &g, &vs(&["C"])));
        assert!(applicable_rule3(&term("P(e|do(c))", &g), &g, &vs(&["C"])));
        let xy = RawGraph::new().edge("X", "Y").bi("X", "Y").with_implicit_vertices().validate().unwrap();
        assert!(!applicable_rule2(&term("P(y|do(x))", &xy), &xy, &vs(&["X"])));
        let plain = RawGraph::new().edge("X", "Y").with_implicit_vertices().validate().unwrap();
        assert!(!applicable_rule3(&term("P(y|do(x))", &plain), &plain, &vs(&["X"])));
    }

    #[test]
    fn condition_then_rules_reach_adjustment() {
        let g = small_backdoor();
        let e = parse("P(y|do(c))", &g).unwrap();
        let a = apply(&e, &g, Rule::Condition, &[], &Params::Condition { vars: vs(&["E"]) }).unwrap();
        assert_eq!(render(&a.result, Format::Text), "Σ_e P(y|do(c),e) P(e|do(c))");
        let b = apply(&a.result, &g, Rule::Rule2, &[0, 0], &Params::Exchange { promote: false, vars: vs(&["C"]) }).unwrap();
        let c = apply(&b.result, &g, Rule::Rule3, &[0, 1], &Params::Act { insert: false, vars: vs(&["C"]) }).unwrap();
        assert_eq!(render(&c.result, Format::Text), "Σ_e P(y|c,e) P(e)");
    }

    #[test]
    fn unused_binder_blocks_deletion() {
        let g = RawGraph::new().edge("X", "Y").vertex("V").with_implicit_vertices().validate().unwrap();
        let e = parse("Σ_v P(y|do(x),v) P(v)", &g).unwrap();
        let e = canonicalize(&e).unwrap();
        // dropping v from the first factor is fine, the binder still occurs
        assert!(apply(&e, &g, Rule::Rule1, &[0, 0], &Params::Observe { insert: false, vars: vs(&["V"]) }).is_ok());
        let single = canonicalize(&parse("Σ_v P(y|do(x),v)", &g).unwrap()).unwrap();
        assert!(apply(&single, &g, Rule::Rule1, &[0], &Params::Observe { insert: false, vars: vs(&["V"]) }).is_err());
    }

    #[test]
    fn marginalize_split_merge_cancel() {
        let g = small_backdoor();
        let e = canonicalize(&parse("Σ_h P(y,h|c)", &g).unwrap()).unwrap();
        let m = apply(&e, &g, Rule::Marginalize, &[], &Params::SumOut { symbol: Symbol::new("H") }).unwrap();
        assert_eq!(render(&m.result, Format::Text), "P(y|c)");
        let t = parse("P(y,h|c)", &g).unwrap();
        let s = apply(&t, &g, Rule::ChainSplit, &[], &Params::Split { vars: vs(&["H"]) }).unwrap();
        assert_eq!(render(&s.result, Format::Text), "P(y|c,h) P(h|c)");
        let back = apply(&s.result, &g, Rule::ChainSplit, &[], &Params::Merge { first: 0, second: 1 }).unwrap();
        assert_eq!(back.result, canonicalize(&t).unwrap());
        let q = parse("P(y,h|c) / P(h|c)", &g).unwrap();
        let c = apply(&q, &g, Rule::CancelQuotient, &[], &Params::Cancel).unwrap();
        assert_eq!(render(&c.result, Format::Text), "P(y|c,h)");
    }
}
