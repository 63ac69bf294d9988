//! Graphical shortcut criteria: each returns a verdict and a ready-made estimand.
//!
//! A negative verdict only means the shortcut does not apply.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::rules::premise_base;
use crate::engine::templates;
use crate::engine::{derive, Derivation, Outcome, SearchBudget};
use crate::estimand::{canonicalize, product, sum_symbols, Domain, Estimand, ProbTerm, Query, Source, SourceCatalog, Symbol};
use crate::graph::{Graph, VertexSet};
use crate::separation::{d_separated, SeparationError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CriteriaError {
    #[error("sets overlap on {0}")]
    OverlappingSets(String),
    #[error("unknown vertex {0}")]
    UnknownVertex(String),
    #[error("not admissible: {0}")]
    NotAdmissible(String),
    #[error("the graph has no selection vertex")]
    NoSelectionVertex,
    #[error("the graph has no discrepancy vertex")]
    NoDiscrepancyVertex,
}

impl From<SeparationError> for CriteriaError {
    fn from(e: SeparationError) -> Self {
        match e {
            SeparationError::OverlappingSets(v) => CriteriaError::OverlappingSets(v),
            SeparationError::UnknownVertex(v) => CriteriaError::UnknownVertex(v),
            SeparationError::TooManyVertices(n) => CriteriaError::NotAdmissible(format!("graph too large ({n} vertices)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Backdoor,
    Frontdoor,
    SBackdoor,
    SAdmissible,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjustmentReport {
    pub admissible_sets: Vec<VertexSet>,
    pub minimal_sets: Vec<VertexSet>,
    pub criterion: Criterion,
}

fn disjoint(sets: &[&VertexSet]) -> Result<(), CriteriaError> {
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            if let Some(v) = sets[i].intersection(sets[j]).iter().next() {
                return Err(CriteriaError::OverlappingSets(v.clone()));
            }
        }
    }
    Ok(())
}

fn known(g: &Graph, sets: &[&VertexSet]) -> Result<(), CriteriaError> {
    for s in sets {
        if let Some(v) = s.iter().find(|v| !g.has_vertex(v)) {
            return Err(CriteriaError::UnknownVertex(v.clone()));
        }
    }
    Ok(())
}

/// The causal diagram without discrepancy vertices.
fn causal(g: &Graph) -> Graph {
    premise_base(g, &None)
}

fn cut(g: &Graph, incoming: &VertexSet, outgoing: &VertexSet) -> Graph {
    g.mutilate(incoming, outgoing).expect("sets checked against the graph")
}

fn descendants(g: &Graph, s: &VertexSet) -> VertexSet {
    g.descendants(s).expect("sets checked against the graph")
}

fn syms(vars: &VertexSet) -> Vec<Symbol> {
    vars.iter().map(|v| Symbol::new(v)).collect()
}

fn term(outcomes: &VertexSet, conditions: &VertexSet) -> ProbTerm {
    ProbTerm { outcomes: syms(outcomes).into_iter().collect(), conditions: syms(conditions).into_iter().collect(), ..ProbTerm::new(&[]) }
}

fn summed(binders: &VertexSet, body: Estimand) -> Estimand {
    if binders.is_empty() {
        body
    } else {
        sum_symbols(syms(binders).into_iter().collect(), body)
    }
}

fn canonical(e: Estimand) -> Estimand {
    canonicalize(&e).expect("criterion estimands are well scoped")
}

/// `z` has no descendant of `x` and blocks every path between `x` and `y`
/// once the edges leaving `x` are removed.
pub fn backdoor_admissible(g: &Graph, x: &VertexSet, y: &VertexSet, z: &VertexSet) -> Result<bool, CriteriaError> {
    known(g, &[x, y, z])?;
    disjoint(&[x, y, z])?;
    let c = causal(g);
    if !z.is_disjoint(&descendants(&c, x)) {
        return Ok(false);
    }
    Ok(d_separated(&cut(&c, &VertexSet::new(), x), x, y, z)?)
}

fn minimal(sets: &[VertexSet]) -> Vec<VertexSet> {
    sets.iter().filter(|s| !sets.iter().any(|o| o != *s && o.is_subset(s))).cloned().collect()
}

/// Every admissible subset of `universe`, smallest first.
pub fn enumerate_backdoor_sets(g: &Graph, x: &VertexSet, y: &VertexSet, universe: &VertexSet) -> Result<AdjustmentReport, CriteriaError> {
    known(g, &[x, y, universe])?;
    disjoint(&[x, y])?;
    disjoint(&[&x.union(y), universe])?;
    let subsets = universe.subsets(universe.len());
    let verdicts: Vec<Result<bool, CriteriaError>> = subsets.par_iter().map(|z| backdoor_admissible(g, x, y, z)).collect();
    let mut admissible_sets = Vec::new();
    for (z, v) in subsets.into_iter().zip(verdicts) {
        if v? {
            admissible_sets.push(z);
        }
    }
    let minimal_sets = minimal(&admissible_sets);
    Ok(AdjustmentReport { admissible_sets, minimal_sets, criterion: Criterion::Backdoor })
}

/// Σ_z P(y|x,z) P(z).
pub fn backdoor_estimand(g: &Graph, x: &VertexSet, y: &VertexSet, z: &VertexSet) -> Result<Estimand, CriteriaError> {
    if !backdoor_admissible(g, x, y, z)? {
        return Err(CriteriaError::NotAdmissible(format!("{z} is not backdoor admissible for ({x}, {y})")));
    }
    let body = if z.is_empty() {
        Estimand::Term(term(y, x))
    } else {
        product(vec![term(y, &x.union(z)).into(), term(z, &VertexSet::new()).into()])
    };
    Ok(canonical(summed(z, body)))
}

/// `z` intercepts every directed path from `x` to `y`; given `w` nothing
/// leaks from `x` into `z` through the back door, and `x ∪ w` blocks every
/// backdoor path from `z` to `y`.
pub fn frontdoor_admissible(g: &Graph, x: &VertexSet, y: &VertexSet, z: &VertexSet, w: &VertexSet) -> Result<bool, CriteriaError> {
    known(g, &[x, y, z, w])?;
    disjoint(&[x, y, z, w])?;
    if z.is_empty() {
        return Ok(false);
    }
    let c = causal(g);
    let bypass = c.without_vertices(z);
    if !descendants(&bypass, x).is_disjoint(y) {
        return Ok(false);
    }
    let none = VertexSet::new();
    Ok(d_separated(&cut(&c, &none, x), x, z, w)? && d_separated(&cut(&c, &none, z), z, y, &x.union(w))?)
}

/// Σ_{z,w} P(z|w,x) P(w) Σ_{x'} P(y|w,z,x') P(x'|w).
pub fn frontdoor_estimand(g: &Graph, x: &VertexSet, y: &VertexSet, z: &VertexSet, w: &VertexSet) -> Result<Estimand, CriteriaError> {
    if !frontdoor_admissible(g, x, y, z, w)? {
        return Err(CriteriaError::NotAdmissible(format!("({z}, {w}) is not frontdoor admissible for ({x}, {y})")));
    }
    let xp: BTreeSet<Symbol> = x.iter().map(|v| Symbol::primed(v, 1)).collect();
    let plain = |s: &VertexSet| syms(s).into_iter().collect::<BTreeSet<_>>();
    let inner_y = ProbTerm { outcomes: plain(y), conditions: plain(&w.union(z)).union(&xp).cloned().collect(), ..ProbTerm::new(&[]) };
    let inner_x = ProbTerm { outcomes: xp.clone(), conditions: plain(w), ..ProbTerm::new(&[]) };
    let inner = sum_symbols(xp, product(vec![inner_y.into(), inner_x.into()]));
    let mut factors = vec![term(z, &w.union(x)).into()];
    if !w.is_empty() {
        factors.push(term(w, &VertexSet::new()).into());
    }
    factors.push(inner);
    Ok(canonical(summed(&z.union(w), product(factors))))
}

/// Which admissible covariate set `find_frontdoor` prefers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Covariates {
    Fewest,
    Most,
}

/// First frontdoor pair (mediators, covariates): smallest mediator sets
/// (at most `max_size`) drawn from the vertices between `x` and `y`, and for
/// each the preferred admissible covariate set of non-descendants of `x`.
pub fn find_frontdoor(g: &Graph, x: &VertexSet, y: &VertexSet, max_size: usize, prefer: Covariates) -> Option<(VertexSet, VertexSet)> {
    let c = causal(g);
    let dx = c.descendants(x).ok()?;
    let ay = c.ancestors(y).ok()?;
    let xy = x.union(y);
    let mediators = dx.intersection(&ay).difference(&xy);
    let others = c.endogenous().difference(&dx).difference(&xy);
    let mut covariates = others.subsets(others.len());
    if prefer == Covariates::Most {
        covariates.reverse();
    }
    for z in mediators.subsets(max_size).into_iter().skip(1) {
        for w in &covariates {
            if frontdoor_admissible(g, x, y, &z, w).unwrap_or(false) {
                return Some((z, w.clone()));
            }
        }
    }
    None
}

/// Sufficient test for identification with surrogate
/// experiments on subsets of `z_exp`. Tries, in order: observational
/// backdoor and frontdoor shortcuts; for each nonempty Z' ⊆ z_exp through
/// which `x` intercepts every directed path to `y`, backdoor and frontdoor
/// shortcuts in the graph with edges into Z' removed, lifted by inserting
/// do(Z'); finally the derivation search with P(v) and P(v|do(Z')) for
/// every Z' ⊆ z_exp.
pub fn zid_sufficient(g: &Graph, x: &VertexSet, y: &VertexSet, z_exp: &VertexSet) -> Option<Derivation> {
    known(g, &[x, y, z_exp]).ok()?;
    disjoint(&[x, y, z_exp]).ok()?;
    let q = effect_query(x, y);
    if let Some(d) = observational_shortcut(g, x, y, &q) {
        return Some(d);
    }
    if let Some((_, d)) = surrogate_shortcut(g, x, y, z_exp, |_| true) {
        return Some(d);
    }
    let mut cat = SourceCatalog::observational(g);
    for zp in z_exp.subsets(z_exp.len()).into_iter().skip(1) {
        cat.push(Source::experimental(Domain::Target, zp, g.endogenous()));
    }
    match derive(&q, g, &cat, &SearchBudget::default()) {
        Ok(Outcome::Derived { derivation }) => Some(derivation),
        _ => None,
    }
}

/// Backdoor or frontdoor shortcut in the graph with edges into some
/// nonempty Z' ⊆ `z_exp` removed, lifted by inserting do(Z'). Only Z'
/// through which `x` intercepts every directed path to `y` qualify; `accept`
/// filters candidate derivations.
pub fn surrogate_shortcut(
    g: &Graph,
    x: &VertexSet,
    y: &VertexSet,
    z_exp: &VertexSet,
    accept: impl Fn(&Derivation) -> bool,
) -> Option<(VertexSet, Derivation)> {
    let q = effect_query(x, y);
    let c = causal(g);
    for zp in z_exp.subsets(z_exp.len()).into_iter().skip(1) {
        let reach = descendants(&c.without_vertices(x), &zp);
        if !reach.is_disjoint(y) {
            continue;
        }
        let gz = cut(&c, &zp, &VertexSet::new());
        let universe = c.endogenous().difference(&x.union(y).union(&zp));
        if let Ok(r) = enumerate_backdoor_sets(&gz, x, y, &universe) {
            for z in &r.minimal_sets {
                if let Ok(d) = templates::lifted(g, &q, &zp, |b| templates::backdoor_steps(b, x, y, z)) {
                    if accept(&d) {
                        return Some((zp, d));
                    }
                }
            }
        }
        if let Some((m, w)) = find_frontdoor(&gz.without_vertices(&zp), x, y, 3, Covariates::Fewest) {
            if let Ok(d) = templates::lifted(g, &q, &zp, |b| templates::frontdoor_steps(b, x, y, &m, &w)) {
                if accept(&d) {
                    return Some((zp, d));
                }
            }
        }
    }
    None
}

pub(crate) fn effect_query(x: &VertexSet, y: &VertexSet) -> Query {
    Query::new(ProbTerm { outcomes: syms(y).into_iter().collect(), do_set: syms(x).into_iter().collect(), ..ProbTerm::new(&[]) })
}

fn observational_shortcut(g: &Graph, x: &VertexSet, y: &VertexSet, q: &Query) -> Option<Derivation> {
    let c = causal(g);
    let universe = c.endogenous().difference(&x.union(y));
    let r = enumerate_backdoor_sets(g, x, y, &universe).ok()?;
    if let Some(z) = r.minimal_sets.first() {
        if let Ok(d) = templates::backdoor(g, q, z) {
            return Some(d);
        }
    }
    let (m, w) = find_frontdoor(g, x, y, 3, Covariates::Most)?;
    templates::frontdoor(g, q, &m, &w).ok()
}

fn only_selection(g: &Graph) -> Result<String, CriteriaError> {
    let s = g.selection_vertices();
    match s.len() {
        0 => Err(CriteriaError::NoSelectionVertex),
        1 => Ok(s.iter().next().cloned().unwrap()),
        _ => Err(CriteriaError::NotAdmissible("more than one selection vertex".into())),
    }
}

/// Splits `z` into (non-descendants, descendants) of `x`.
pub fn split_by_treatment(g: &Graph, x: &VertexSet, z: &VertexSet) -> (VertexSet, VertexSet) {
    let dx = descendants(&causal(g), x);
    (z.difference(&dx), z.intersection(&dx))
}

/// Selection backdoor conditions (i)–(iii); measurement availability is
/// left to the data catalogue.
pub fn s_backdoor_admissible(g: &Graph, x: &VertexSet, y: &VertexSet, z: &VertexSet) -> Result<bool, CriteriaError> {
    let s = only_selection(g)?;
    known(g, &[x, y, z])?;
    disjoint(&[x, y, z])?;
    let c = causal(g);
    let (zp, zm) = split_by_treatment(g, x, z);
    let none = VertexSet::new();
    let i = d_separated(&cut(&c, &none, x), x, y, &zp)?;
    let ii = zm.is_empty() || d_separated(&c, &zm, y, &x.union(&zp))?;
    let iii = d_separated(&c, y, &VertexSet::singleton(&s), &x.union(z))?;
    Ok(i && ii && iii)
}

/// Σ_z P(y|x,z,S=1) P(z), with P(z) from unbiased data.
pub fn s_backdoor_estimand(g: &Graph, x: &VertexSet, y: &VertexSet, z: &VertexSet) -> Result<Estimand, CriteriaError> {
    if !s_backdoor_admissible(g, x, y, z)? {
        return Err(CriteriaError::NotAdmissible(format!("{z} is not s-backdoor admissible for ({x}, {y})")));
    }
    let mut first = term(y, &x.union(z));
    first.selected = true;
    let body = if z.is_empty() { Estimand::Term(first) } else { product(vec![first.into(), term(z, &VertexSet::new()).into()]) };
    Ok(canonical(summed(z, body)))
}

pub fn enumerate_s_backdoor_sets(g: &Graph, x: &VertexSet, y: &VertexSet, universe: &VertexSet) -> Result<AdjustmentReport, CriteriaError> {
    only_selection(g)?;
    known(g, &[x, y, universe])?;
    disjoint(&[&x.union(y), universe])?;
    let mut admissible_sets = Vec::new();
    for z in universe.subsets(universe.len()) {
        if s_backdoor_admissible(g, x, y, &z)? {
            admissible_sets.push(z);
        }
    }
    let minimal_sets = minimal(&admissible_sets);
    Ok(AdjustmentReport { admissible_sets, minimal_sets, criterion: Criterion::SBackdoor })
}

/// The discrepancy vertices are separated from `y` given `t ∪ x` once the
/// edges into `x` are removed.
pub fn s_admissible(d: &Graph, x: &VertexSet, y: &VertexSet, t: &VertexSet) -> Result<bool, CriteriaError> {
    let ds = d.discrepancy_vertices();
    if ds.is_empty() {
        return Err(CriteriaError::NoDiscrepancyVertex);
    }
    known(d, &[x, y, t])?;
    disjoint(&[x, y, t])?;
    let dx = cut(d, x, &VertexSet::new());
    Ok(d_separated(&dx, &ds, y, &t.union(x))?)
}

/// Σ_t P(y|do(x),t) P*(t) for an s-admissible set of pre-treatment covariates.
pub fn transport_estimand(d: &Graph, x: &VertexSet, y: &VertexSet, t: &VertexSet) -> Result<Estimand, CriteriaError> {
    if !s_admissible(d, x, y, t)? {
        return Err(CriteriaError::NotAdmissible(format!("{t} is not s-admissible for ({x}, {y})")));
    }
    let (_, post) = split_by_treatment(d, x, t);
    if !post.is_empty() {
        return Err(CriteriaError::NotAdmissible(format!("{post} are post-treatment; the derivation search handles this case")));
    }
    let mut first = term(y, t);
    first.do_set = syms(x).into_iter().collect();
    first.domain = Domain::source("");
    let body = if t.is_empty() { Estimand::Term(first) } else { product(vec![first.into(), term(t, &VertexSet::new()).into()]) };
    Ok(canonical(summed(t, body)))
}

pub fn enumerate_s_admissible_sets(
    d: &Graph,
    x: &VertexSet,
    y: &VertexSet,
    universe: &VertexSet,
) -> Result<AdjustmentReport, CriteriaError> {
    let mut admissible_sets = Vec::new();
    for t in universe.subsets(universe.len()) {
        if s_admissible(d, x, y, &t)? {
            admissible_sets.push(t);
        }
    }
    let minimal_sets = minimal(&admissible_sets);
    Ok(AdjustmentReport { admissible_sets, minimal_sets, criterion: Criterion::SAdmissible })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimand::{parse, render, Format};
    use crate::fixtures::by_name;

    fn vs(names: &[&str]) -> VertexSet {
        VertexSet::from_names(names.iter().copied())
    }

    fn fx(name: &str) -> Graph {
        by_name(name).unwrap().graph()
    }

    fn same(e: &Estimand, text: &str, g: &Graph) {
        let want = canonicalize(&parse(text, g).unwrap()).unwrap();
        assert_eq!(render(e, Format::Text), render(&want, Format::Text));
    }

    #[test]
    fn backdoor_on_small_model() {
        let g = fx("backdoor_small");
        assert!(backdoor_admissible(&g, &vs(&["C"]), &vs(&["Y"]), &vs(&["E"])).unwrap());
        // W is a descendant of C
        assert!(!backdoor_admissible(&g, &vs(&["C"]), &vs(&["Y"]), &vs(&["E", "W"])).unwrap());
        let r = enumerate_backdoor_sets(&g, &vs(&["C"]), &vs(&["Y"]), &vs(&["E", "W", "H"])).unwrap();
        assert_eq!(r.admissible_sets, vec![vs(&["E"])]);
        same(&backdoor_estimand(&g, &vs(&["C"]), &vs(&["Y"]), &vs(&["E"])).unwrap(), "Σ_e P(y|c,e) P(e)", &g);
        assert!(matches!(backdoor_estimand(&g, &vs(&["C"]), &vs(&["Y"]), &vs(&["W"])), Err(CriteriaError::NotAdmissible(_))));
        assert_eq!(backdoor_admissible(&g, &vs(&["C"]), &vs(&["C"]), &vs(&[])), Err(CriteriaError::OverlappingSets("C".into())));
    }

    #[test]
    fn conditioning_on_the_collider_is_a_mistake() {
        let g = fx("backdoor_large");
        assert!(!backdoor_admissible(&g, &vs(&["X"]), &vs(&["Y"]), &vs(&["W1"])).unwrap());
    }

    #[test]
    fn trivial_adjustment() {
        let g = crate::text::parse_graph("var X Y\nX -> Y\n").unwrap();
        let r = enumerate_backdoor_sets(&g, &vs(&["X"]), &vs(&["Y"]), &vs(&[])).unwrap();
        assert_eq!(r.admissible_sets, vec![VertexSet::new()]);
        same(&backdoor_estimand(&g, &vs(&["X"]), &vs(&["Y"]), &vs(&[])).unwrap(), "P(y|x)", &g);
    }

    #[test]
    fn frontdoor_needs_covariates() {
        let g = fx("frontdoor_conditional");
        let (x, y, m) = (vs(&["X"]), vs(&["Y"]), vs(&["M"]));
        assert!(frontdoor_admissible(&g, &x, &y, &m, &vs(&["W1", "W2", "W3"])).unwrap());
        assert!(!frontdoor_admissible(&g, &x, &y, &m, &vs(&[])).unwrap());
        let chain = crate::text::parse_graph("var X M Y\nX -> M\nM -> Y\n").unwrap();
        assert!(frontdoor_admissible(&chain, &x, &y, &m, &vs(&[])).unwrap());
        same(&frontdoor_estimand(&chain, &x, &y, &m, &vs(&[])).unwrap(), "Σ_m P(m|x) Σ_{x'} P(y|m,x') P(x')", &chain);
        assert_eq!(find_frontdoor(&g, &x, &y, 3, Covariates::Most), Some((m.clone(), vs(&["W1", "W2", "W3"]))));
        assert_eq!(find_frontdoor(&g, &x, &y, 3, Covariates::Fewest), Some((m, vs(&["W2", "W3"]))));
    }

    #[test]
    fn selection_backdoor_examples() {
        let g = fx("selection_backdoor");
        let (x, y) = (vs(&["X"]), vs(&["Y"]));
        assert!(s_backdoor_admissible(&g, &x, &y, &vs(&["Z", "W"])).unwrap());
        same(&s_backdoor_estimand(&g, &x, &y, &vs(&["Z", "W"])).unwrap(), "Σ_{z,w} P(y|x,z,w,S=1) P(z,w)", &g);
        assert!(!s_backdoor_admissible(&fx("outcome_selection"), &x, &y, &vs(&["Z"])).unwrap());
        let simple = fx("simple_selection");
        assert!(s_backdoor_admissible(&simple, &x, &y, &vs(&[])).unwrap());
        same(&s_backdoor_estimand(&simple, &x, &y, &vs(&[])).unwrap(), "P(y|x,S=1)", &simple);
        assert_eq!(s_backdoor_admissible(&fx("backdoor_small"), &vs(&["C"]), &y, &vs(&[])), Err(CriteriaError::NoSelectionVertex));
    }

    #[test]
    fn s_admissibility_examples() {
        let (x, y) = (vs(&["X"]), vs(&["Y"]));
        let a = fx("transport_admissible");
        assert!(s_admissible(&a, &x, &y, &vs(&["Z"])).unwrap());
        same(&transport_estimand(&a, &x, &y, &vs(&["Z"])).unwrap(), "Σ_z P(y|do(x),z) P*(z)", &a);
        assert!(!s_admissible(&fx("transport_blocked"), &x, &y, &vs(&["Z"])).unwrap());
        let direct = fx("transport_direct");
        assert!(s_admissible(&direct, &x, &y, &vs(&[])).unwrap());
        same(&transport_estimand(&direct, &x, &y, &vs(&[])).unwrap(), "P(y|do(x))", &direct);
        assert_eq!(s_admissible(&fx("backdoor_small"), &vs(&["C"]), &y, &vs(&[])), Err(CriteriaError::NoDiscrepancyVertex));
    }

    #[test]
    fn surrogate_experiments() {
        let (x, y, z) = (vs(&["X"]), vs(&["Y"]), vs(&["Z"]));
        let g = fx("surrogate_experiment");
        let d = zid_sufficient(&g, &x, &y, &z).expect("identifiable with do(z)");
        same(&d.final_estimand(&g).unwrap(), "Σ_{w1,w2} P(y|do(z),x,w1,w2) P(w1,w2|do(z))", &g);
        assert!(crate::engine::verify(&d, &g).ok);
        assert!(zid_sufficient(&fx("instrumental_variable"), &x, &y, &z).is_none());
        let g4 = fx("surrogate_frontdoor");
        let d4 = zid_sufficient(&g4, &x, &y, &z).expect("identifiable with do(z)");
        same(&d4.final_estimand(&g4).unwrap(), "Σ_{w2} P(w2|x,do(z)) Σ_{x'} P(y|w2,x',do(z)) P(x'|do(z))", &g4);
    }
}
