//! Fixed rule sequences that derive the classical adjustment formulas.
//!
//! Each `*_steps` function rewrites the builder's current expression in
//! place; the premises are checked step by step, so a template either
//! yields a verified derivation or fails with the premise that broke.

use super::derivation::{Builder, Derivation};
use super::rules::{Params, RewriteError, Rule};
use crate::criteria::split_by_treatment;
use crate::estimand::{Domain, ProbTerm, Query};
use crate::graph::{Graph, VertexSet};

fn locate(b: &Builder, what: &str, pred: impl Fn(&ProbTerm) -> bool) -> Result<Vec<usize>, RewriteError> {
    b.find(pred).ok_or_else(|| RewriteError::NotApplicable(format!("no term {what}")))
}

fn effect_term(b: &Builder, x: &VertexSet, y: &VertexSet) -> Result<Vec<usize>, RewriteError> {
    locate(b, "for the effect", |t| y.is_subset(&t.outcome_vars()) && x.is_subset(&t.do_vars()))
}

fn outcome_term(b: &Builder, y: &VertexSet) -> Result<Vec<usize>, RewriteError> {
    locate(b, "for the outcome", |t| y.is_subset(&t.outcome_vars()))
}

/// Σ_z P(y|x,z) P(z) from P(y|do(x)): condition on z, exchange the action
/// on x for an observation, then drop it from P(z|do(x)).
pub fn backdoor_steps(b: &mut Builder, x: &VertexSet, y: &VertexSet, z: &VertexSet) -> Result<(), RewriteError> {
    if !z.is_empty() {
        let f = effect_term(b, x, y)?;
        b.step(Rule::Condition, &f, Params::Condition { vars: z.clone() })?;
    }
    let f = effect_term(b, x, y)?;
    b.step(Rule::Rule2, &f, Params::Exchange { promote: false, vars: x.clone() })?;
    if !z.is_empty() {
        let f = locate(b, "for the covariates", |t| t.outcome_vars() == *z && x.is_subset(&t.do_vars()))?;
        b.step(Rule::Rule3, &f, Params::Act { insert: false, vars: x.clone() })?;
    }
    Ok(())
}

/// Conditional front door through mediators `m` given covariates `w`.
pub fn frontdoor_steps(b: &mut Builder, x: &VertexSet, y: &VertexSet, m: &VertexSet, w: &VertexSet) -> Result<(), RewriteError> {
    let act = |insert, vars: &VertexSet| Params::Act { insert, vars: vars.clone() };
    let exchange = |promote, vars: &VertexSet| Params::Exchange { promote, vars: vars.clone() };
    if !w.is_empty() {
        let f = effect_term(b, x, y)?;
        b.step(Rule::Condition, &f, Params::Condition { vars: w.clone() })?;
        let f = locate(b, "for the covariates", |t| t.outcome_vars() == *w && x.is_subset(&t.do_vars()))?;
        b.step(Rule::Rule3, &f, act(false, x))?;
    }
    let f = effect_term(b, x, y)?;
    b.step(Rule::Condition, &f, Params::Condition { vars: m.clone() })?;
    let f = locate(b, "for the mediators", |t| t.outcome_vars() == *m && x.is_subset(&t.do_vars()))?;
    b.step(Rule::Rule2, &f, exchange(false, x))?;
    let f = effect_term(b, x, y)?;
    b.step(Rule::Rule2, &f, exchange(true, m))?;
    let f = effect_term(b, x, y)?;
    b.step(Rule::Rule3, &f, act(false, x))?;
    let f = effect_term(b, m, y)?;
    b.step(Rule::Condition, &f, Params::Condition { vars: x.clone() })?;
    let f = effect_term(b, m, y)?;
    b.step(Rule::Rule2, &f, exchange(false, m))?;
    let f = locate(b, "for the treatment", |t| t.outcome_vars() == *x && m.is_subset(&t.do_vars()))?;
    b.step(Rule::Rule3, &f, act(false, m))?;
    Ok(())
}

fn effect_parts(q: &Query) -> (VertexSet, VertexSet) {
    (q.term.do_vars(), q.term.outcome_vars())
}

fn run(g: &Graph, q: &Query, f: impl FnOnce(&mut Builder) -> Result<(), RewriteError>) -> Result<Derivation, RewriteError> {
    let mut b = Builder::new(g, q)?;
    f(&mut b)?;
    Ok(b.finish())
}

pub fn backdoor(g: &Graph, q: &Query, z: &VertexSet) -> Result<Derivation, RewriteError> {
    let (x, y) = effect_parts(q);
    run(g, q, |b| backdoor_steps(b, &x, &y, z))
}

pub fn frontdoor(g: &Graph, q: &Query, m: &VertexSet, w: &VertexSet) -> Result<Derivation, RewriteError> {
    let (x, y) = effect_parts(q);
    run(g, q, |b| frontdoor_steps(b, &x, &y, m, w))
}

/// Inserts the surrogate action do(zp) into the query, then runs `f`.
pub fn lifted(
    g: &Graph,
    q: &Query,
    zp: &VertexSet,
    f: impl FnOnce(&mut Builder) -> Result<(), RewriteError>,
) -> Result<Derivation, RewriteError> {
    run(g, q, |b| {
        b.step(Rule::Rule3, &[], Params::Act { insert: true, vars: zp.clone() })?;
        f(b)
    })
}

/// Σ_z P(y|x,z,S=1) P(z). Covariates downstream of the treatment enter the
/// outcome term by an observation insertion after the covariate marginal
/// has been expanded to include them.
pub fn s_backdoor(g: &Graph, q: &Query, z: &VertexSet) -> Result<Derivation, RewriteError> {
    let (x, y) = effect_parts(q);
    let (pre, post) = split_by_treatment(g, &x, z);
    if pre.is_empty() && !post.is_empty() {
        return Err(RewriteError::NotApplicable("no pre-treatment covariate to expand".into()));
    }
    run(g, q, |b| {
        backdoor_steps(b, &x, &y, &pre)?;
        for v in post.iter() {
            let f = locate(b, "for the covariate marginal", |t| {
                t.condition_vars().is_empty() && t.do_vars().is_empty() && t.outcome_vars().is_subset(z) && t.outcome_vars().is_disjoint(&y)
            })?;
            b.step(Rule::Marginalize, &f, Params::Expand { var: v.clone() })?;
        }
        if !post.is_empty() {
            let f = outcome_term(b, &y)?;
            b.step(Rule::Rule1, &f, Params::Observe { insert: true, vars: post.clone() })?;
        }
        let f = outcome_term(b, &y)?;
        b.step(Rule::SelectionAttach, &f, Params::Select { attach: true })?;
        Ok(())
    })
}

/// Σ_t P_source(y|do(x),t) P*(t) for pre-treatment `t`.
pub fn transport(g: &Graph, q: &Query, t: &VertexSet, label: &str) -> Result<Derivation, RewriteError> {
    let (x, y) = effect_parts(q);
    run(g, q, |b| {
        if !t.is_empty() {
            let f = effect_term(b, &x, &y)?;
            b.step(Rule::Condition, &f, Params::Condition { vars: t.clone() })?;
            let f = locate(b, "for the covariates", |u| u.outcome_vars() == *t && x.is_subset(&u.do_vars()))?;
            b.step(Rule::Rule3, &f, Params::Act { insert: false, vars: x.clone() })?;
        }
        let f = effect_term(b, &x, &y)?;
        b.step(Rule::DomainExchange, &f, Params::Relabel { to: Domain::source(label) })?;
        Ok(())
    })
}
