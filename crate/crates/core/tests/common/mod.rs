#![allow(dead_code)]

use std::collections::BTreeMap;

use dofusion_core::engine::{Builder, Derivation, Params, Rule};
use dofusion_core::estimand::{canonicalize, parse, Domain, Estimand};
use dofusion_core::fixtures::{by_name, Fixture};
use dofusion_core::graph::{Graph, VertexSet};
use dofusion_core::oracle::{evaluate, random_scm, target_table, OracleError, Scm, Sizes, Worlds};

pub const SEEDS: u64 = 100;
pub const TOL: f64 = 1e-9;

pub fn vs(names: &[&str]) -> VertexSet {
    VertexSet::from_names(names.iter().copied())
}

/// Target model plus one variant per source population named in the
/// fixture's catalogue.
pub fn worlds(f: &Fixture, seed: u64) -> Worlds {
    let g = f.graph();
    let target = random_scm(&g, &Sizes::default(), seed);
    let mut w = BTreeMap::from([(Domain::Target, target.clone())]);
    for d in f.catalog().domains() {
        if let Domain::Source(l) = &d {
            let targets = Scm::discrepancy_targets(&g, Some(l));
            let offset = l.bytes().fold(1u64, |h, b| h.wrapping_mul(31).wrapping_add(b as u64));
            w.insert(d.clone(), target.domain_variant(&targets, seed.wrapping_mul(7919).wrapping_add(offset)).unwrap());
        }
    }
    w
}

/// |value(e) − truth| for one seed.
pub fn error(f: &Fixture, e: &Estimand, seed: u64) -> Result<f64, OracleError> {
    let w = worlds(f, seed);
    let truth = target_table(&f.query(), &w[&Domain::Target])?;
    Ok(evaluate(e, &w)?.max_abs_diff(&truth))
}

pub fn max_error(f: &Fixture, e: &Estimand) -> f64 {
    (0..SEEDS).map(|s| error(f, e, s).unwrap_or(f64::INFINITY)).fold(0.0, f64::max)
}

/// Largest change in value across any single step, over all seeds.
pub fn max_step_drift(f: &Fixture, d: &Derivation) -> f64 {
    let g = f.graph();
    let read = |t: &str| canonicalize(&parse(t, &g).unwrap()).unwrap();
    let pairs: Vec<(Estimand, Estimand)> = d.steps.iter().map(|s| (read(&s.before), read(&s.after))).collect();
    let mut worst: f64 = 0.0;
    for seed in 0..SEEDS {
        let w = worlds(f, seed);
        for (a, b) in &pairs {
            let drift = match (evaluate(a, &w), evaluate(b, &w)) {
                (Ok(x), Ok(y)) => x.max_abs_diff(&y),
                _ => f64::INFINITY,
            };
            worst = worst.max(drift);
        }
    }
    worst
}

fn first(b: &Builder, pred: impl Fn(&dofusion_core::estimand::ProbTerm) -> bool) -> Vec<usize> {
    b.find(pred).expect("term present")
}

/// Conditioning on E, then exchanging and deleting the action on C.
pub fn backdoor_derivation() -> (Graph, Derivation) {
    let f = by_name("backdoor_small").unwrap();
    let g = f.graph();
    let mut b = Builder::new(&g, &f.query()).unwrap();
    b.step(Rule::Condition, &[], Params::Condition { vars: vs(&["E"]) }).unwrap();
    let p = first(&b, |t| t.outcome_vars() == vs(&["Y"]));
    b.step(Rule::Rule2, &p, Params::Exchange { promote: false, vars: vs(&["C"]) }).unwrap();
    let p = first(&b, |t| t.outcome_vars() == vs(&["E"]));
    b.step(Rule::Rule3, &p, Params::Act { insert: false, vars: vs(&["C"]) }).unwrap();
    let d = b.finish();
    (g, d)
}

/// Observing W and S, conditioning on Z, exchanging the action on X and
/// deleting it from the covariate term.
pub fn selection_derivation() -> (Graph, Derivation) {
    let f = by_name("selection_do_calculus").unwrap();
    let g = f.graph();
    let mut b = Builder::new(&g, &f.query()).unwrap();
    b.step(Rule::Rule1, &[], Params::Observe { insert: true, vars: vs(&["W", "S"]) }).unwrap();
    b.step(Rule::Condition, &[], Params::Condition { vars: vs(&["Z"]) }).unwrap();
    let p = first(&b, |t| t.outcome_vars() == vs(&["Y"]));
    b.step(Rule::Rule2, &p, Params::Exchange { promote: false, vars: vs(&["X"]) }).unwrap();
    let p = first(&b, |t| t.outcome_vars() == vs(&["Z"]));
    b.step(Rule::Rule3, &p, Params::Act { insert: false, vars: vs(&["X"]) }).unwrap();
    let d = b.finish();
    (g, d)
}

/// Conditioning on Z, promoting it to an action, and borrowing each factor
/// from the source population where it is invariant.
pub fn meta_derivation() -> (Graph, Derivation) {
    let f = by_name("meta_transport").unwrap();
    let g = f.graph();
    let mut b = Builder::new(&g, &f.query()).unwrap();
    b.step(Rule::Condition, &[], Params::Condition { vars: vs(&["Z"]) }).unwrap();
    let p = first(&b, |t| t.outcome_vars() == vs(&["Y"]));
    b.step(Rule::Rule2, &p, Params::Exchange { promote: true, vars: vs(&["Z"]) }).unwrap();
    let p = first(&b, |t| t.outcome_vars() == vs(&["Z"]));
    b.step(Rule::DomainExchange, &p, Params::Relabel { to: Domain::source("a") }).unwrap();
    let p = first(&b, |t| t.outcome_vars() == vs(&["Y"]));
    b.step(Rule::DomainExchange, &p, Params::Relabel { to: Domain::source("b") }).unwrap();
    let d = b.finish();
    (g, d)
}

pub fn worked() -> Vec<(&'static str, Graph, Derivation)> {
    let (g1, d1) = backdoor_derivation();
    let (g2, d2) = selection_derivation();
    let (g3, d3) = meta_derivation();
    vec![("backdoor_small", g1, d1), ("selection_do_calculus", g2, d2), ("meta_transport", g3, d3)]
}

/// Every premise-bearing step with its premise altered: (step, derivation).
pub fn premise_perturbations(d: &Derivation, g: &Graph) -> Vec<(usize, Derivation)> {
    let mut out = Vec::new();
    for (i, s) in d.steps.iter().enumerate() {
        let Some(p) = &s.premise else { continue };
        let mut q = p.clone();
        // move one conditioning vertex in or out
        let spare = g.endogenous().difference(&q.x.union(&q.y).union(&q.z));
        let (held, free) = (q.z.iter().next().cloned(), spare.iter().next().cloned());
        match (held, free) {
            (Some(v), _) => {
                q.z.remove(&v);
            }
            (None, Some(v)) => {
                q.z.insert(v);
            }
            (None, None) => q.mutilation.cut_incoming = VertexSet::new(),
        }
        if q == *p {
            q.mutilation.domain = Some("perturbed".into());
        }
        let mut bad = d.clone();
        bad.steps[i].premise = Some(q);
        out.push((i, bad));
    }
    out
}
