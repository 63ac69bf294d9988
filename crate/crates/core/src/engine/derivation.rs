//! Derivations: replayable rewrite sequences and their independent checker.

use serde::{Deserialize, Serialize};

use super::rules::{apply_unchecked, premise_holds, Params, Premise, RewriteError, Rule};
use crate::estimand::{canonicalize, parse, render_in, Estimand, EstimandError, Format, Query};
use crate::graph::Graph;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewriteStep {
    pub rule: Rule,
    /// Child indices from the root of `before`; a sum's body is child 0.
    pub focus: Vec<usize>,
    pub params: Params,
    pub premise: Option<Premise>,
    pub before: String,
    pub after: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Derivation {
    pub query: Query,
    pub steps: Vec<RewriteStep>,
    #[serde(rename = "final")]
    pub final_text: String,
    #[serde(skip)]
    pub final_estimand: Option<Estimand>,
}

impl Derivation {
    /// The final estimand, re-parsed when the derivation came from JSON.
    pub fn final_estimand(&self, g: &Graph) -> Result<Estimand, EstimandError> {
        match &self.final_estimand {
            Some(e) => Ok(e.clone()),
            None => canonicalize(&parse(&self.final_text, g)?),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("derivations serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Builds a derivation step by step, checking each premise as it goes.
#[derive(Debug, Clone)]
pub struct Builder<'g> {
    g: &'g Graph,
    query: Query,
    current: Estimand,
    steps: Vec<RewriteStep>,
}

impl<'g> Builder<'g> {
    pub fn new(g: &'g Graph, query: &Query) -> Result<Self, EstimandError> {
        Ok(Builder { g, query: query.clone(), current: canonicalize(&query.estimand())?, steps: Vec::new() })
    }

    pub fn current(&self) -> &Estimand {
        &self.current
    }

    pub fn step(&mut self, rule: Rule, focus: &[usize], params: Params) -> Result<&mut Self, RewriteError> {
        let applied = apply_unchecked(&self.current, self.g, rule, focus, &params)?;
        if let Some(p) = &applied.premise {
            if !premise_holds(self.g, p) {
                return Err(RewriteError::PremiseFails(Box::new(p.clone())));
            }
        }
        self.steps.push(RewriteStep {
            rule,
            focus: focus.to_vec(),
            params,
            premise: applied.premise,
            before: render_in(&self.current, Format::Text, self.g),
            after: render_in(&applied.result, Format::Text, self.g),
        });
        self.current = applied.result;
        Ok(self)
    }

    /// Path of the first atomic term satisfying `pred`.
    pub fn find(&self, pred: impl Fn(&crate::estimand::ProbTerm) -> bool) -> Option<Vec<usize>> {
        self.current.terms().into_iter().find(|(_, t)| pred(t)).map(|(p, _)| p)
    }

    pub fn finish(self) -> Derivation {
        Derivation {
            query: self.query,
            steps: self.steps,
            final_text: render_in(&self.current, Format::Text, self.g),
            final_estimand: Some(self.current),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub ok: bool,
    /// Index of the first failing step; equal to the step count when only
    /// the final estimand disagrees.
    pub failed_step: Option<usize>,
    pub reason: Option<String>,
}

impl VerifyReport {
    fn fail(step: usize, reason: impl Into<String>) -> Self {
        VerifyReport { ok: false, failed_step: Some(step), reason: Some(reason.into()) }
    }
}

/// Replays every step from the query, recomputing each required premise
/// and re-checking it by a fresh d-separation test.
pub fn verify(d: &Derivation, g: &Graph) -> VerifyReport {
    let read = |text: &str| parse(text, g).and_then(|e| canonicalize(&e));
    let mut cur = match canonicalize(&d.query.estimand()) {
        Ok(e) => e,
        Err(e) => return VerifyReport::fail(0, format!("query: {e}")),
    };
    for (i, s) in d.steps.iter().enumerate() {
        match read(&s.before) {
            Ok(b) if b == cur => {}
            Ok(_) => return VerifyReport::fail(i, "recorded input differs from the replayed expression"),
            Err(e) => return VerifyReport::fail(i, format!("recorded input: {e}")),
        }
        let applied = match apply_unchecked(&cur, g, s.rule, &s.focus, &s.params) {
            Ok(a) => a,
            Err(e) => return VerifyReport::fail(i, format!("rule does not apply: {e}")),
        };
        if applied.premise != s.premise {
            return VerifyReport::fail(i, "recorded premise is not the one the rule requires");
        }
        if let Some(p) = &applied.premise {
            if !premise_holds(g, p) {
                return VerifyReport::fail(i, format!("premise does not hold: {p}"));
            }
        }
        match read(&s.after) {
            Ok(a) if a == applied.result => {}
            Ok(_) => return VerifyReport::fail(i, "recorded output differs from the replayed rewrite"),
            Err(e) => return VerifyReport::fail(i, format!("recorded output: {e}")),
        }
        cur = applied.result;
    }
    match read(&d.final_text) {
        Ok(f) if f == cur => VerifyReport { ok: true, failed_step: None, reason: None },
        Ok(_) => VerifyReport::fail(d.steps.len(), "final estimand differs from the replay"),
        Err(e) => VerifyReport::fail(d.steps.len(), format!("final estimand: {e}")),
    }
}
