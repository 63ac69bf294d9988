//! Task entry points: try the graphical shortcuts whose output the data can
//! estimate, then fall back to the derivation search.

use serde::{Deserialize, Serialize};

use super::derivation::Derivation;
use super::search::{check_query, derive, EngineError, Outcome, SearchBudget};
use super::templates;
use crate::criteria::{
    enumerate_backdoor_sets, enumerate_s_admissible_sets, enumerate_s_backdoor_sets, find_frontdoor, split_by_treatment,
    surrogate_shortcut, Covariates,
};
use crate::estimand::{estimable, Domain, Query, SourceCatalog, SourceKind};
use crate::graph::{Graph, VertexSet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    Backdoor { covariates: VertexSet },
    Frontdoor { mediators: VertexSet, covariates: VertexSet },
    SurrogateExperiment { intervened: VertexSet },
    SelectionBackdoor { covariates: VertexSet },
    Transport { covariates: VertexSet, source: String },
    Search,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub method: Method,
    pub outcome: Outcome,
}

impl Report {
    fn shortcut(method: Method, derivation: Derivation) -> Self {
        Report { method, outcome: Outcome::Derived { derivation } }
    }
}

/// A plain effect query P(y|do(x)) with x, y nonempty.
fn effect(q: &Query) -> Option<(VertexSet, VertexSet)> {
    let t = &q.term;
    let plain = t.conditions.is_empty() && !t.selected && !t.do_set.is_empty();
    plain.then(|| (t.do_vars(), t.outcome_vars()))
}

fn usable(d: &Derivation, g: &Graph, cat: &SourceCatalog) -> bool {
    d.final_estimand(g).map(|e| estimable(&e, cat).estimable).unwrap_or(false)
}

fn prepare(q: &Query, g: &Graph, cat: &SourceCatalog) -> Result<(), EngineError> {
    check_query(q, g)?;
    if cat.is_empty() {
        return Err(EngineError::EmptyCatalog);
    }
    Ok(())
}

fn search(q: &Query, g: &Graph, cat: &SourceCatalog, budget: &SearchBudget) -> Result<Report, EngineError> {
    Ok(Report { method: Method::Search, outcome: derive(q, g, cat, budget)? })
}

/// Identification from target-population data: backdoor, then frontdoor,
/// then surrogate experiments, then search.
pub fn identify(q: &Query, g: &Graph, cat: &SourceCatalog, budget: &SearchBudget) -> Result<Report, EngineError> {
    prepare(q, g, cat)?;
    if let Some((x, y)) = effect(q) {
        let universe = cat.measured().intersection(&g.endogenous()).difference(&x.union(&y));
        if let Ok(r) = enumerate_backdoor_sets(g, &x, &y, &universe) {
            for z in r.minimal_sets {
                if let Ok(d) = templates::backdoor(g, q, &z) {
                    if usable(&d, g, cat) {
                        return Ok(Report::shortcut(Method::Backdoor { covariates: z }, d));
                    }
                }
            }
        }
        if let Some((m, w)) = find_frontdoor(g, &x, &y, 3, Covariates::Most) {
            if let Ok(d) = templates::frontdoor(g, q, &m, &w) {
                if usable(&d, g, cat) {
                    return Ok(Report::shortcut(Method::Frontdoor { mediators: m, covariates: w }, d));
                }
            }
        }
        let experiments = cat
            .sources
            .iter()
            .filter(|s| s.domain.is_target() && matches!(s.kind, SourceKind::Experimental { .. }))
            .fold(VertexSet::new(), |acc, s| acc.union(&s.intervened()))
            .difference(&x.union(&y));
        if !experiments.is_empty() {
            if let Some((zp, d)) = surrogate_shortcut(g, &x, &y, &experiments, |d| usable(d, g, cat)) {
                return Ok(Report::shortcut(Method::SurrogateExperiment { intervened: zp }, d));
            }
        }
    }
    search(q, g, cat, budget)
}

/// Recovery from selection-biased data: selection backdoor, then search.
pub fn recover(q: &Query, g: &Graph, cat: &SourceCatalog, budget: &SearchBudget) -> Result<Report, EngineError> {
    prepare(q, g, cat)?;
    if let (Some((x, y)), true) = (effect(q), cat.has_selected()) {
        let universe = cat.measured().intersection(&g.endogenous()).difference(&x.union(&y));
        if let Ok(r) = enumerate_s_backdoor_sets(g, &x, &y, &universe) {
            for z in r.admissible_sets {
                if let Ok(d) = templates::s_backdoor(g, q, &z) {
                    if usable(&d, g, cat) {
                        return Ok(Report::shortcut(Method::SelectionBackdoor { covariates: z }, d));
                    }
                }
            }
        }
    }
    search(q, g, cat, budget)
}

/// Transport of an experimental finding: s-admissible pre-treatment
/// covariates, then search.
pub fn transport(q: &Query, g: &Graph, cat: &SourceCatalog, budget: &SearchBudget) -> Result<Report, EngineError> {
    prepare(q, g, cat)?;
    if let Some((x, y)) = effect(q) {
        let (pre, _) = split_by_treatment(g, &x, &g.endogenous());
        let universe = cat.measured().intersection(&pre).difference(&x.union(&y));
        let labels: Vec<String> = cat
            .domains()
            .into_iter()
            .filter_map(|d| match d {
                Domain::Source(l) => Some(l),
                Domain::Target => None,
            })
            .collect();
        if let Ok(r) = enumerate_s_admissible_sets(g, &x, &y, &universe) {
            for t in r.admissible_sets {
                for l in &labels {
                    if let Ok(d) = templates::transport(g, q, &t, l) {
                        if usable(&d, g, cat) {
                            return Ok(Report::shortcut(Method::Transport { covariates: t, source: l.clone() }, d));
                        }
                    }
                }
            }
        }
    }
    search(q, g, cat, budget)
}
