//! Symbolic probability expressions.
//!
//! Symbols name a value of a vertex; `x'` is a second value of `X`. A term
//! `P(y|do(x),z,S=1)` is a conditional distribution in one domain. Sums bind
//! symbols; products and quotients combine factors.
//!
//! The canonical form is prenex: sums are hoisted as far out as scoping
//! allows, products are flattened and sorted, bound symbols are renamed to
//! the smallest free prime, and identical factors above and below a
//! quotient bar cancel.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, VertexSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EstimandError {
    #[error("symbol {0} is bound twice in nested scopes")]
    CaptureDetected(Symbol),
    #[error("bound symbol {0} does not occur in its body")]
    UnusedBinder(Symbol),
    #[error("malformed term {term}: {reason}")]
    MalformedTerm { term: String, reason: String },
    #[error("parse error at offset {pos}: {reason}")]
    Parse { pos: usize, reason: String },
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("no subterm at path {0:?}")]
    BadPath(Vec<usize>),
}

/// A value of vertex `var`; primes distinguish several values of one vertex.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Symbol {
    pub var: String,
    pub prime: u8,
}

impl Symbol {
    pub fn new(var: &str) -> Self {
        Symbol { var: var.to_string(), prime: 0 }
    }

    pub fn primed(var: &str, prime: u8) -> Self {
        Symbol { var: var.to_string(), prime }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.var.to_lowercase(), "'".repeat(self.prime as usize))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Target,
    /// A source population; the empty label is the unnamed single source.
    Source(String),
}

impl Domain {
    pub fn source(label: &str) -> Self {
        Domain::Source(label.to_string())
    }

    pub fn is_target(&self) -> bool {
        matches!(self, Domain::Target)
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Target => write!(f, "*"),
            Domain::Source(l) if l.is_empty() => write!(f, "source"),
            Domain::Source(l) => write!(f, "{l}"),
        }
    }
}

fn vars_of(s: &BTreeSet<Symbol>) -> VertexSet {
    s.iter().map(|x| x.var.clone()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ProbTerm {
    pub outcomes: BTreeSet<Symbol>,
    pub conditions: BTreeSet<Symbol>,
    pub do_set: BTreeSet<Symbol>,
    /// Conditions additionally on sample inclusion, S=1.
    pub selected: bool,
    pub domain: Domain,
}

impl ProbTerm {
    pub fn new(outcomes: &[&str]) -> Self {
        ProbTerm {
            outcomes: outcomes.iter().map(|v| Symbol::new(v)).collect(),
            conditions: BTreeSet::new(),
            do_set: BTreeSet::new(),
            selected: false,
            domain: Domain::Target,
        }
    }

    pub fn given(mut self, vars: &[&str]) -> Self {
        self.conditions.extend(vars.iter().map(|v| Symbol::new(v)));
        self
    }

    pub fn doing(mut self, vars: &[&str]) -> Self {
        self.do_set.extend(vars.iter().map(|v| Symbol::new(v)));
        self
    }

    pub fn select(mut self) -> Self {
        self.selected = true;
        self
    }

    pub fn in_domain(mut self, d: Domain) -> Self {
        self.domain = d;
        self
    }

    pub fn outcome_vars(&self) -> VertexSet {
        vars_of(&self.outcomes)
    }

    pub fn condition_vars(&self) -> VertexSet {
        vars_of(&self.conditions)
    }

    pub fn do_vars(&self) -> VertexSet {
        vars_of(&self.do_set)
    }

    pub fn vars(&self) -> VertexSet {
        self.outcome_vars().union(&self.condition_vars()).union(&self.do_vars())
    }

    pub fn symbols(&self) -> BTreeSet<Symbol> {
        self.outcomes.iter().chain(&self.conditions).chain(&self.do_set).cloned().collect()
    }

    pub fn width(&self) -> usize {
        self.outcomes.len() + self.conditions.len() + self.do_set.len()
    }

    /// Symbol used for `var` in this term, if any.
    pub fn symbol_of(&self, var: &str) -> Option<&Symbol> {
        self.outcomes.iter().chain(&self.conditions).chain(&self.do_set).find(|s| s.var == var)
    }

    pub fn check(&self) -> Result<(), EstimandError> {
        let bad = |reason: &str| EstimandError::MalformedTerm { term: render_term(self, Format::Text, true), reason: reason.into() };
        if self.outcomes.is_empty() {
            return Err(bad("no outcomes"));
        }
        let all: Vec<&Symbol> = self.outcomes.iter().chain(&self.conditions).chain(&self.do_set).collect();
        let vars: BTreeSet<&str> = all.iter().map(|s| s.var.as_str()).collect();
        if vars.len() != all.len() {
            return Err(bad("a variable appears twice"));
        }
        Ok(())
    }

    fn subst(&mut self, from: &Symbol, to: &Symbol) {
        for set in [&mut self.outcomes, &mut self.conditions, &mut self.do_set] {
            if set.remove(from) {
                set.insert(to.clone());
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimand {
    Term(ProbTerm),
    Sum(BTreeSet<Symbol>, Box<Estimand>),
    Product(Vec<Estimand>),
    Quotient(Box<Estimand>, Box<Estimand>),
}

impl From<ProbTerm> for Estimand {
    fn from(t: ProbTerm) -> Self {
        Estimand::Term(t)
    }
}

pub fn sum(vars: &[&str], body: Estimand) -> Estimand {
    Estimand::Sum(vars.iter().map(|v| Symbol::new(v)).collect(), Box::new(body))
}

pub fn sum_symbols(vars: BTreeSet<Symbol>, body: Estimand) -> Estimand {
    Estimand::Sum(vars, Box::new(body))
}

pub fn product(factors: Vec<Estimand>) -> Estimand {
    Estimand::Product(factors)
}

pub fn quotient(num: Estimand, den: Estimand) -> Estimand {
    Estimand::Quotient(Box::new(num), Box::new(den))
}

impl Estimand {
    pub fn one() -> Self {
        Estimand::Product(Vec::new())
    }

    pub fn free_symbols(&self) -> BTreeSet<Symbol> {
        match self {
            Estimand::Term(t) => t.symbols(),
            Estimand::Sum(b, body) => body.free_symbols().difference(b).cloned().collect(),
            Estimand::Product(fs) => fs.iter().flat_map(|f| f.free_symbols()).collect(),
            Estimand::Quotient(n, d) => n.free_symbols().union(&d.free_symbols()).cloned().collect(),
        }
    }

    pub fn all_symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.visit_terms(&mut |_, t| out.extend(t.symbols()));
        self.visit_sums(&mut |b| out.extend(b.iter().cloned()));
        out
    }

    fn visit_sums(&self, f: &mut dyn FnMut(&BTreeSet<Symbol>)) {
        match self {
            Estimand::Term(_) => {}
            Estimand::Sum(b, body) => {
                f(b);
                body.visit_sums(f);
            }
            Estimand::Product(fs) => fs.iter().for_each(|x| x.visit_sums(f)),
            Estimand::Quotient(n, d) => {
                n.visit_sums(f);
                d.visit_sums(f);
            }
        }
    }

    fn visit_terms_at(&self, path: &mut Vec<usize>, f: &mut dyn FnMut(&[usize], &ProbTerm)) {
        match self {
            Estimand::Term(t) => f(path, t),
            Estimand::Sum(_, body) => {
                path.push(0);
                body.visit_terms_at(path, f);
                path.pop();
            }
            Estimand::Product(fs) => {
                for (i, x) in fs.iter().enumerate() {
                    path.push(i);
                    x.visit_terms_at(path, f);
                    path.pop();
                }
            }
            Estimand::Quotient(n, d) => {
                path.push(0);
                n.visit_terms_at(path, f);
                path.pop();
                path.push(1);
                d.visit_terms_at(path, f);
                path.pop();
            }
        }
    }

    pub fn visit_terms(&self, f: &mut dyn FnMut(&[usize], &ProbTerm)) {
        self.visit_terms_at(&mut Vec::new(), f)
    }

    /// Every atomic term with its path.
    pub fn terms(&self) -> Vec<(Vec<usize>, ProbTerm)> {
        let mut out = Vec::new();
        self.visit_terms(&mut |p, t| out.push((p.to_vec(), t.clone())));
        out
    }

    pub fn has_source_terms(&self) -> bool {
        let mut any = false;
        self.visit_terms(&mut |_, t| any |= !t.domain.is_target());
        any
    }

    pub fn get(&self, path: &[usize]) -> Option<&Estimand> {
        let Some((&i, rest)) = path.split_first() else {
            return Some(self);
        };
        match (self, i) {
            (Estimand::Sum(_, body), 0) => body.get(rest),
            (Estimand::Product(fs), i) => fs.get(i)?.get(rest),
            (Estimand::Quotient(n, _), 0) => n.get(rest),
            (Estimand::Quotient(_, d), 1) => d.get(rest),
            _ => None,
        }
    }

    fn get_mut(&mut self, path: &[usize]) -> Option<&mut Estimand> {
        let Some((&i, rest)) = path.split_first() else {
            return Some(self);
        };
        match (self, i) {
            (Estimand::Sum(_, body), 0) => body.get_mut(rest),
            (Estimand::Product(fs), i) => fs.get_mut(i)?.get_mut(rest),
            (Estimand::Quotient(n, _), 0) => n.get_mut(rest),
            (Estimand::Quotient(_, d), 1) => d.get_mut(rest),
            _ => None,
        }
    }

    pub fn replace_at(&self, path: &[usize], new: Estimand) -> Result<Estimand, EstimandError> {
        let mut out = self.clone();
        *out.get_mut(path).ok_or_else(|| EstimandError::BadPath(path.to_vec()))? = new;
        Ok(out)
    }

    /// Binders of the sums enclosing `path`, outermost first.
    pub fn enclosing_binders(&self, path: &[usize]) -> Vec<BTreeSet<Symbol>> {
        let mut out = Vec::new();
        let mut cur = self;
        for &i in path {
            if let Estimand::Sum(b, _) = cur {
                out.push(b.clone());
            }
            match cur.get(&[i]) {
                Some(next) => cur = next,
                None => break,
            }
        }
        out
    }

    /// Node count plus symbol occurrences.
    pub fn size(&self) -> usize {
        match self {
            Estimand::Term(t) => 1 + t.width() + t.selected as usize,
            Estimand::Sum(b, body) => 1 + b.len() + body.size(),
            Estimand::Product(fs) => fs.iter().map(|f| f.size()).sum::<usize>(),
            Estimand::Quotient(n, d) => 1 + n.size() + d.size(),
        }
    }

    fn symbol_count(&self) -> usize {
        match self {
            Estimand::Term(t) => t.width(),
            _ => self.all_symbols().len(),
        }
    }

    /// Rejects malformed terms, re-binding of a symbol already bound in an
    /// enclosing sum, and binders that do not occur in their body.
    pub fn check_scoping(&self) -> Result<(), EstimandError> {
        fn go(e: &Estimand, bound: &mut Vec<Symbol>) -> Result<(), EstimandError> {
            match e {
                Estimand::Term(t) => t.check(),
                Estimand::Sum(b, body) => {
                    let free = body.free_symbols();
                    for s in b {
                        if bound.contains(s) {
                            return Err(EstimandError::CaptureDetected(s.clone()));
                        }
                        if !free.contains(s) {
                            return Err(EstimandError::UnusedBinder(s.clone()));
                        }
                    }
                    let n = bound.len();
                    bound.extend(b.iter().cloned());
                    let r = go(body, bound);
                    bound.truncate(n);
                    r
                }
                Estimand::Product(fs) => fs.iter().try_for_each(|f| go(f, bound)),
                Estimand::Quotient(n, d) => {
                    go(n, bound)?;
                    go(d, bound)
                }
            }
        }
        go(self, &mut Vec::new())
    }

    fn subst(&mut self, from: &Symbol, to: &Symbol) {
        match self {
            Estimand::Term(t) => t.subst(from, to),
            Estimand::Sum(b, body) => {
                if !b.contains(from) {
                    body.subst(from, to);
                }
            }
            Estimand::Product(fs) => fs.iter_mut().for_each(|f| f.subst(from, to)),
            Estimand::Quotient(n, d) => {
                n.subst(from, to);
                d.subst(from, to);
            }
        }
    }
}

/// Smallest-prime symbol for `var` not in `avoid`.
pub fn fresh_symbol(var: &str, avoid: &BTreeSet<Symbol>) -> Symbol {
    let mut p = 0u8;
    loop {
        let s = Symbol::primed(var, p);
        if !avoid.contains(&s) {
            return s;
        }
        p += 1;
    }
}

/// Prenex pieces: Σ_binders (num / den).
struct Normal {
    binders: BTreeSet<Symbol>,
    num: Vec<Estimand>,
    den: Vec<Estimand>,
}

fn free_of_factors(fs: &[Estimand]) -> BTreeSet<Symbol> {
    fs.iter().flat_map(|f| f.free_symbols()).collect()
}

fn rename_normal(n: &mut Normal, from: &Symbol, to: &Symbol) {
    n.binders.remove(from);
    n.binders.insert(to.clone());
    for f in n.num.iter_mut().chain(n.den.iter_mut()) {
        f.subst(from, to);
    }
}

fn normalize(e: &Estimand) -> Normal {
    match e {
        Estimand::Term(_) => Normal { binders: BTreeSet::new(), num: vec![e.clone()], den: vec![] },
        Estimand::Sum(b, body) => {
            let mut inner = normalize(body);
            let den_free = free_of_factors(&inner.den);
            if b.iter().any(|s| den_free.contains(s)) {
                // cannot move the sum past a denominator mentioning it
                let atom = Estimand::Sum(b.clone(), Box::new(rebuild(inner)));
                return Normal { binders: BTreeSet::new(), num: vec![atom], den: vec![] };
            }
            inner.binders.extend(b.iter().cloned());
            inner
        }
        Estimand::Product(fs) => {
            let parts: Vec<Normal> = fs.iter().map(normalize).collect();
            combine(parts)
        }
        Estimand::Quotient(n, d) => {
            let num = normalize(n);
            let den = normalize(d);
            let den_parts = if den.binders.is_empty() {
                Normal { binders: BTreeSet::new(), num: den.den, den: den.num }
            } else {
                Normal { binders: BTreeSet::new(), num: vec![], den: vec![rebuild(den)] }
            };
            let mut out = combine(vec![num, den_parts]);
            cancel(&mut out.num, &mut out.den);
            out
        }
    }
}

/// Multiplies prenex parts, renaming binders that would capture a symbol
/// free in a sibling or collide with another hoisted binder.
fn combine(mut parts: Vec<Normal>) -> Normal {
    let everything: BTreeSet<Symbol> =
        parts.iter().flat_map(|p| p.binders.iter().cloned().chain(p.num.iter().chain(&p.den).flat_map(|f| f.all_symbols()))).collect();
    let mut avoid = everything;
    let mut binders = BTreeSet::new();
    for i in 0..parts.len() {
        let others_free: BTreeSet<Symbol> = parts
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .flat_map(|(_, p)| {
                let mut f = free_of_factors(&p.num);
                f.extend(free_of_factors(&p.den));
                f.retain(|s| !p.binders.contains(s));
                f
            })
            .collect();
        let clashing: Vec<Symbol> = parts[i].binders.iter().filter(|b| others_free.contains(b) || binders.contains(*b)).cloned().collect();
        for b in clashing {
            let to = fresh_symbol(&b.var, &avoid);
            avoid.insert(to.clone());
            rename_normal(&mut parts[i], &b, &to);
        }
        binders.extend(parts[i].binders.iter().cloned());
    }
    let mut num = Vec::new();
    let mut den = Vec::new();
    for p in parts {
        num.extend(p.num);
        den.extend(p.den);
    }
    Normal { binders, num, den }
}

fn cancel(num: &mut Vec<Estimand>, den: &mut Vec<Estimand>) {
    let mut i = 0;
    while i < den.len() {
        if let Some(j) = num.iter().position(|n| *n == den[i]) {
            num.remove(j);
            den.remove(i);
        } else {
            i += 1;
        }
    }
}

fn sort_factors(fs: &mut [Estimand]) {
    fs.sort_by(|a, b| (Reverse(a.symbol_count()), a).cmp(&(Reverse(b.symbol_count()), b)));
}

fn product_of(mut fs: Vec<Estimand>) -> Estimand {
    sort_factors(&mut fs);
    if fs.len() == 1 {
        fs.pop().unwrap()
    } else {
        Estimand::Product(fs)
    }
}

fn rebuild(n: Normal) -> Estimand {
    let body =
        if n.den.is_empty() { product_of(n.num) } else { Estimand::Quotient(Box::new(product_of(n.num)), Box::new(product_of(n.den))) };
    if n.binders.is_empty() {
        body
    } else {
        Estimand::Sum(n.binders, Box::new(body))
    }
}

/// Renames every binder to the smallest primes not otherwise used, keeping
/// the relative order of several binders of one variable.
fn rename_bound(e: &Estimand) -> Estimand {
    match e {
        Estimand::Term(_) => e.clone(),
        Estimand::Sum(b, body) => {
            let mut body = (**body).clone();
            let mut avoid: BTreeSet<Symbol> = body.all_symbols().difference(b).cloned().collect();
            let mut by_var: BTreeMap<&str, Vec<&Symbol>> = BTreeMap::new();
            for s in b {
                by_var.entry(s.var.as_str()).or_default().push(s);
            }
            // two passes through temporaries so chains like x'->x, x->x' cannot collide
            let mut plan = Vec::new();
            for (var, syms) in by_var {
                for s in syms {
                    let to = fresh_symbol(var, &avoid);
                    avoid.insert(to.clone());
                    plan.push((s.clone(), to));
                }
            }
            let temp_base = 200u8;
            let mut new_b = BTreeSet::new();
            for (k, (from, _)) in plan.iter().enumerate() {
                body.subst(from, &Symbol::primed(&format!("\u{0}{}", from.var), temp_base.wrapping_add(k as u8)));
            }
            for (k, (from, to)) in plan.iter().enumerate() {
                body.subst(&Symbol::primed(&format!("\u{0}{}", from.var), temp_base.wrapping_add(k as u8)), to);
                new_b.insert(to.clone());
            }
            Estimand::Sum(new_b, Box::new(rename_bound(&body)))
        }
        Estimand::Product(fs) => Estimand::Product(fs.iter().map(rename_bound).collect()),
        Estimand::Quotient(n, d) => Estimand::Quotient(Box::new(rename_bound(n)), Box::new(rename_bound(d))),
    }
}

fn sort_all(e: &Estimand) -> Estimand {
    match e {
        Estimand::Term(_) => e.clone(),
        Estimand::Sum(b, body) => Estimand::Sum(b.clone(), Box::new(sort_all(body))),
        Estimand::Product(fs) => {
            let mut fs: Vec<Estimand> = fs.iter().map(sort_all).collect();
            sort_factors(&mut fs);
            Estimand::Product(fs)
        }
        Estimand::Quotient(n, d) => Estimand::Quotient(Box::new(sort_all(n)), Box::new(sort_all(d))),
    }
}

/// Deterministic normal form; idempotent.
pub fn canonicalize(e: &Estimand) -> Result<Estimand, EstimandError> {
    e.check_scoping()?;
    let mut cur = e.clone();
    for _ in 0..8 {
        let next = sort_all(&rename_bound(&rebuild(normalize(&cur))));
        next.check_scoping()?;
        if next == cur {
            break;
        }
        cur = next;
    }
    Ok(cur)
}

// ---------------------------------------------------------------- rendering

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Text,
    Latex,
}

fn latex_symbol(s: &Symbol) -> String {
    let lower = s.var.to_lowercase();
    let split = lower.find(|c: char| c.is_ascii_digit()).filter(|&i| i > 0);
    let base = match split {
        Some(i) => format!("{}_{{{}}}", &lower[..i], &lower[i..]),
        None => lower,
    };
    format!("{base}{}", "'".repeat(s.prime as usize))
}

fn sym(s: &Symbol, fmt: Format) -> String {
    match fmt {
        Format::Text => s.to_string(),
        Format::Latex => latex_symbol(s),
    }
}

fn render_term(t: &ProbTerm, fmt: Format, star_target: bool) -> String {
    let head = match (&t.domain, fmt) {
        (Domain::Target, Format::Text) if star_target => "P*".to_string(),
        (Domain::Target, Format::Latex) if star_target => "P^{*}".to_string(),
        (Domain::Target, _) => "P".to_string(),
        (Domain::Source(l), _) if l.is_empty() => "P".to_string(),
        (Domain::Source(l), _) => format!("P^{{({l})}}"),
    };
    let outs: Vec<String> = t.outcomes.iter().map(|s| sym(s, fmt)).collect();
    let mut conds: Vec<String> = t.do_set.iter().map(|s| format!("do({})", sym(s, fmt))).collect();
    conds.extend(t.conditions.iter().map(|s| sym(s, fmt)));
    if t.selected {
        conds.push("S=1".into());
    }
    let (bar, sep) = match fmt {
        Format::Text => ("|", ","),
        Format::Latex => (" \\mid ", ", "),
    };
    if conds.is_empty() {
        format!("{head}({})", outs.join(sep))
    } else {
        format!("{head}({}{bar}{})", outs.join(sep), conds.join(sep))
    }
}

fn render_binders(b: &BTreeSet<Symbol>, fmt: Format) -> String {
    let names: Vec<String> = b.iter().map(|s| sym(s, fmt)).collect();
    match fmt {
        Format::Text if names.len() == 1 => format!("Σ_{}", names[0]),
        Format::Text => format!("Σ_{{{}}}", names.join(",")),
        Format::Latex => format!("\\sum_{{{}}}", names.join(", ")),
    }
}

fn render_node(e: &Estimand, fmt: Format, star: bool) -> String {
    match e {
        Estimand::Term(t) => render_term(t, fmt, star),
        Estimand::Sum(b, body) => {
            let inner = match (&**body, fmt) {
                (Estimand::Quotient(..), Format::Text) => format!("({})", render_node(body, fmt, star)),
                _ => render_node(body, fmt, star),
            };
            format!("{} {}", render_binders(b, fmt), inner)
        }
        Estimand::Product(fs) if fs.is_empty() => "1".into(),
        Estimand::Product(fs) => fs
            .iter()
            .map(|f| match f {
                Estimand::Sum(..) | Estimand::Quotient(..) if fmt == Format::Text => format!("({})", render_node(f, fmt, star)),
                Estimand::Sum(..) => format!("\\left({}\\right)", render_node(f, fmt, star)),
                _ => render_node(f, fmt, star),
            })
            .collect::<Vec<_>>()
            .join(" "),
        Estimand::Quotient(n, d) => match fmt {
            Format::Latex => format!("\\frac{{{}}}{{{}}}", render_node(n, fmt, star), render_node(d, fmt, star)),
            Format::Text => {
                let wrap = |x: &Estimand| match x {
                    Estimand::Term(_) => render_node(x, fmt, star),
                    Estimand::Product(fs) if fs.is_empty() => "1".into(),
                    _ => format!("({})", render_node(x, fmt, star)),
                };
                format!("{} / {}", wrap(n), wrap(d))
            }
        },
    }
}

/// Renders with the target shown as `P*` only when source terms are present.
pub fn render(e: &Estimand, fmt: Format) -> String {
    render_node(e, fmt, e.has_source_terms())
}

/// Renders in the notation of `g`: in a diagram with discrepancy vertices
/// the target is always starred and an unlabelled `P` is the source.
pub fn render_in(e: &Estimand, fmt: Format, g: &Graph) -> String {
    render_node(e, fmt, e.has_source_terms() || !g.discrepancy_vertices().is_empty())
}

impl fmt::Display for Estimand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", render(self, Format::Text))
    }
}

impl fmt::Display for ProbTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", render_term(self, Format::Text, !self.domain.is_target()))
    }
}

// ------------------------------------------------------------------ parsing

enum Mark {
    Plain,
    Star,
    Label(String),
}

struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    graph: &'a Graph,
    plain_is_source: bool,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, reason: impl Into<String>) -> Result<T, EstimandError> {
        Err(EstimandError::Parse { pos: self.pos, reason: reason.into() })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn peek_raw(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), EstimandError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected '{c}'"))
        }
    }

    fn ident(&mut self) -> Result<String, EstimandError> {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.peek_raw() {
            if c.is_alphanumeric() || c == '_' {
                self.pos += 1;
            } else {
                break;
            }
        }
        if start == self.pos || !self.chars[start].is_alphabetic() {
            self.pos = start;
            return self.err("expected identifier");
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }

    fn starts_with_word(&mut self, w: &str) -> bool {
        self.skip_ws();
        let n = w.chars().count();
        if self.pos + n > self.chars.len() {
            return false;
        }
        let s: String = self.chars[self.pos..self.pos + n].iter().collect();
        let next_ok = self.chars.get(self.pos + n).is_none_or(|c| !(c.is_alphanumeric() || *c == '_'));
        s == w && next_ok
    }

    fn at_sum_keyword(&mut self) -> bool {
        self.skip_ws();
        let rest: String = self.chars[self.pos..].iter().take(4).collect();
        rest == "sum_"
    }

    fn resolve(&self, name: &str) -> Result<String, EstimandError> {
        if self.graph.has_vertex(name) {
            return Ok(name.to_string());
        }
        let hits: Vec<&String> = self.graph.vertex_names().filter(|v| v.eq_ignore_ascii_case(name)).collect();
        match hits.as_slice() {
            [one] => Ok((*one).clone()),
            _ => Err(EstimandError::UnknownVariable(name.to_string())),
        }
    }

    fn symbol(&mut self) -> Result<Symbol, EstimandError> {
        let name = self.ident()?;
        let var = self.resolve(&name)?;
        let mut prime = 0u8;
        while self.peek_raw() == Some('\'') {
            self.pos += 1;
            prime += 1;
        }
        Ok(Symbol { var, prime })
    }

    fn symbol_list(&mut self) -> Result<Vec<Symbol>, EstimandError> {
        let mut out = vec![self.symbol()?];
        while self.eat(',') {
            out.push(self.symbol()?);
        }
        Ok(out)
    }

    fn expr(&mut self) -> Result<Estimand, EstimandError> {
        let mut left = self.product()?;
        while self.eat('/') {
            let right = self.product()?;
            left = quotient(left, right);
        }
        Ok(left)
    }

    fn starts_unit(&mut self) -> bool {
        match self.peek() {
            Some('(') | Some('Σ') | Some('∑') | Some('P') | Some('1') => true,
            _ => self.at_sum_keyword(),
        }
    }

    fn product(&mut self) -> Result<Estimand, EstimandError> {
        let mut fs = vec![self.unit()?];
        loop {
            if self.eat('*') || self.starts_unit() {
                fs.push(self.unit()?);
            } else {
                break;
            }
        }
        Ok(if fs.len() == 1 { fs.pop().unwrap() } else { Estimand::Product(fs) })
    }

    fn unit(&mut self) -> Result<Estimand, EstimandError> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some('1') => {
                self.pos += 1;
                Ok(Estimand::one())
            }
            Some('Σ') | Some('∑') => {
                self.pos += 1;
                self.sum_rest()
            }
            Some('P') => {
                self.pos += 1;
                self.term()
            }
            _ if self.at_sum_keyword() => {
                self.pos += 3;
                self.sum_rest()
            }
            _ => self.err("expected a term, a sum or '('"),
        }
    }

    fn sum_rest(&mut self) -> Result<Estimand, EstimandError> {
        self.expect('_')?;
        let binders = if self.eat('{') {
            let l = self.symbol_list()?;
            self.expect('}')?;
            l
        } else {
            vec![self.symbol()?]
        };
        let body = self.product()?;
        Ok(Estimand::Sum(binders.into_iter().collect(), Box::new(body)))
    }

    fn mark(&mut self) -> Result<Mark, EstimandError> {
        // the mark must follow P directly
        match self.peek_raw() {
            Some('*') => {
                self.pos += 1;
                Ok(Mark::Star)
            }
            Some('^') => {
                self.pos += 1;
                let braced = self.eat('{');
                let m = if self.eat('*') {
                    Mark::Star
                } else if self.eat('(') {
                    let l = self.ident()?;
                    self.expect(')')?;
                    Mark::Label(l)
                } else {
                    Mark::Label(self.ident()?)
                };
                if braced {
                    self.expect('}')?;
                }
                Ok(m)
            }
            _ => Ok(Mark::Plain),
        }
    }

    fn term(&mut self) -> Result<Estimand, EstimandError> {
        let mark = self.mark()?;
        self.expect('(')?;
        let outcomes = self.symbol_list()?;
        let mut t = ProbTerm {
            outcomes: outcomes.into_iter().collect(),
            conditions: BTreeSet::new(),
            do_set: BTreeSet::new(),
            selected: false,
            domain: match mark {
                Mark::Star => Domain::Target,
                Mark::Label(l) => Domain::Source(l),
                Mark::Plain if self.plain_is_source => Domain::Source(String::new()),
                Mark::Plain => Domain::Target,
            },
        };
        if self.eat('|') {
            loop {
                self.skip_ws();
                if self.starts_with_word("do") {
                    self.pos += 2;
                    self.expect('(')?;
                    t.do_set.extend(self.symbol_list()?);
                    self.expect(')')?;
                } else {
                    let save = self.pos;
                    let name = self.ident()?;
                    if self.eat('=') {
                        let is_sel = name == "S" || self.resolve(&name).map(|v| self.graph.is_selection(&v)).unwrap_or(false);
                        if !is_sel || !self.eat('1') {
                            self.pos = save;
                            return self.err("only the selection indicator may be fixed, as S=1");
                        }
                        t.selected = true;
                    } else {
                        self.pos = save;
                        t.conditions.insert(self.symbol()?);
                    }
                }
                if !self.eat(',') {
                    break;
                }
            }
        }
        self.expect(')')?;
        t.check()?;
        Ok(Estimand::Term(t))
    }
}

/// Parses the text grammar; variable names resolve case-insensitively
/// against `g`. An unmarked `P` denotes the unnamed source when `g` has
/// discrepancy vertices or the text stars the target; otherwise the target.
pub fn parse(text: &str, g: &Graph) -> Result<Estimand, EstimandError> {
    let plain_is_source = !g.discrepancy_vertices().is_empty() || text.contains("P*") || text.contains("P^*") || text.contains("P^{*}");
    let mut p = Parser { chars: text.chars().collect(), pos: 0, graph: g, plain_is_source };
    let e = p.expr()?;
    if p.peek().is_some() {
        return p.err("trailing input");
    }
    e.check_scoping()?;
    Ok(e)
}

// ------------------------------------------------------------- estimability

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SourceKind {
    Observational,
    /// A randomized study on exactly `intervened`. With `all_subsets` the
    /// study family also offers every sub-intervention.
    Experimental {
        intervened: VertexSet,
        #[serde(default)]
        all_subsets: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Source {
    pub domain: Domain,
    pub kind: SourceKind,
    pub selected: bool,
    pub measured: VertexSet,
}

impl Source {
    pub fn observational(domain: Domain, measured: VertexSet) -> Self {
        Source { domain, kind: SourceKind::Observational, selected: false, measured }
    }

    pub fn experimental(domain: Domain, intervened: VertexSet, measured: VertexSet) -> Self {
        Source { domain, kind: SourceKind::Experimental { intervened, all_subsets: false }, selected: false, measured }
    }

    pub fn selected(mut self) -> Self {
        self.selected = true;
        self
    }

    pub fn intervened(&self) -> VertexSet {
        match &self.kind {
            SourceKind::Observational => VertexSet::new(),
            SourceKind::Experimental { intervened, .. } => intervened.clone(),
        }
    }

    pub fn provides(&self, t: &ProbTerm) -> bool {
        if t.domain != self.domain || t.selected != self.selected || !t.vars().is_subset(&self.measured.union(&self.intervened())) {
            return false;
        }
        let dv = t.do_vars();
        match &self.kind {
            SourceKind::Observational => dv.is_empty(),
            SourceKind::Experimental { intervened, all_subsets } => {
                if !t.outcome_vars().union(&t.condition_vars()).is_subset(&self.measured) {
                    return false;
                }
                if *all_subsets {
                    dv.is_subset(intervened)
                } else {
                    dv == *intervened
                }
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SourceCatalog {
    pub sources: Vec<Source>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermReport {
    pub term: String,
    /// Index of the first source providing the term.
    pub source: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimabilityReport {
    pub estimable: bool,
    pub terms: Vec<TermReport>,
}

impl SourceCatalog {
    pub fn new(sources: Vec<Source>) -> Self {
        SourceCatalog { sources }
    }

    pub fn push(&mut self, s: Source) {
        self.sources.push(s);
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    pub fn provider(&self, t: &ProbTerm) -> Option<usize> {
        self.sources.iter().position(|s| s.provides(t))
    }

    pub fn term_estimable(&self, t: &ProbTerm) -> bool {
        self.provider(t).is_some()
    }

    pub fn domains(&self) -> BTreeSet<Domain> {
        self.sources.iter().map(|s| s.domain.clone()).collect()
    }

    /// Every vertex measured by some source.
    pub fn measured(&self) -> VertexSet {
        self.sources.iter().fold(VertexSet::new(), |acc, s| acc.union(&s.measured))
    }

    pub fn intervened(&self) -> VertexSet {
        self.sources.iter().fold(VertexSet::new(), |acc, s| acc.union(&s.intervened()))
    }

    pub fn has_selected(&self) -> bool {
        self.sources.iter().any(|s| s.selected)
    }

    /// The single observational target source measuring everything.
    pub fn observational(g: &Graph) -> Self {
        SourceCatalog::new(vec![Source::observational(Domain::Target, g.endogenous())])
    }
}

/// Does every atomic term match some source?
pub fn estimable(e: &Estimand, cat: &SourceCatalog) -> EstimabilityReport {
    let mut terms = Vec::new();
    e.visit_terms(&mut |_, t| terms.push(TermReport { term: t.to_string(), source: cat.provider(t) }));
    EstimabilityReport { estimable: terms.iter().all(|t| t.source.is_some()), terms }
}

/// A causal query: one target-domain term.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Query {
    pub term: ProbTerm,
}

impl Query {
    pub fn new(term: ProbTerm) -> Self {
        Query { term }
    }

    /// P(y|do(x)) for singleton names.
    pub fn effect(y: &[&str], x: &[&str]) -> Self {
        Query { term: ProbTerm::new(y).doing(x) }
    }

    pub fn estimand(&self) -> Estimand {
        Estimand::Term(self.term.clone())
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.term)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::RawGraph;

    fn g() -> Graph {
        RawGraph::new()
            .edge("X", "Y")
            .edge("Z", "X")
            .edge("Z", "Y")
            .edge("W1", "Y")
            .with_implicit_vertices()
            .selection("S")
            .edge("Z", "S")
            .validate()
            .unwrap()
    }

    fn t(o: &[&str], c: &[&str]) -> Estimand {
        ProbTerm::new(o).given(c).into()
    }

    #[test]
    fn empty_sum_collapses() {
        let e = Estimand::Sum(BTreeSet::new(), Box::new(t(&["Y"], &["X"])));
        assert_eq!(canonicalize(&e).unwrap(), t(&["Y"], &["X"]));
    }

    #[test]
    fn product_order_is_irrelevant() {
        let a = product(vec![t(&["Z"], &[]), t(&["Y"], &["X", "Z"])]);
        let b = product(vec![t(&["Y"], &["X", "Z"]), t(&["Z"], &[])]);
        assert_eq!(canonicalize(&a).unwrap(), canonicalize(&b).unwrap());
        assert_eq!(render(&canonicalize(&a).unwrap(), Format::Text), "P(y|x,z) P(z)");
    }

    #[test]
    fn adjustment_renders() {
        let e = sum(&["Z"], product(vec![t(&["Z"], &[]), t(&["Y"], &["X", "Z"])]));
        assert_eq!(render(&canonicalize(&e).unwrap(), Format::Text), "Σ_z P(y|x,z) P(z)");
        assert_eq!(render(&canonicalize(&e).unwrap(), Format::Latex), "\\sum_{z} P(y \\mid x, z) P(z)");
    }

    #[test]
    fn nested_sums_hoist_and_rename() {
        // P(x) Σ_x P(y|x): the inner x must not capture the outer free x
        let e = product(vec![t(&["X"], &[]), sum(&["X"], t(&["Y"], &["X"]))]);
        let c = canonicalize(&e).unwrap();
        assert_eq!(render(&c, Format::Text), "Σ_x' P(y|x') P(x)");
        assert_eq!(canonicalize(&c).unwrap(), c);
    }

    #[test]
    fn bound_names_normalize() {
        let a = sum_symbols(
            [Symbol::primed("Z", 3)].into(),
            Estimand::Term(ProbTerm { outcomes: [Symbol::primed("Z", 3)].into(), ..ProbTerm::new(&["Z"]) }),
        );
        assert_eq!(render(&canonicalize(&a).unwrap(), Format::Text), "Σ_z P(z)");
    }

    #[test]
    fn capture_and_unused_binders_rejected() {
        let e = sum(&["Z"], product(vec![t(&["Z"], &[]), sum(&["Z"], t(&["Y"], &["Z"]))]));
        assert!(matches!(canonicalize(&e), Err(EstimandError::CaptureDetected(_))));
        let u = sum(&["W"], t(&["Y"], &[]));
        assert!(matches!(canonicalize(&u), Err(EstimandError::UnusedBinder(_))));
    }

    #[test]
    fn quotient_cancels_identical_factors() {
        let e = quotient(product(vec![t(&["Y"], &["X"]), t(&["X"], &[])]), t(&["X"], &[]));
        assert_eq!(canonicalize(&e).unwrap(), t(&["Y"], &["X"]));
        let keep = quotient(t(&["X", "Y"], &[]), t(&["X"], &[]));
        assert_eq!(render(&canonicalize(&keep).unwrap(), Format::Text), "P(x,y) / P(x)");
    }

    #[test]
    fn parse_accepts_variants() {
        let g = g();
        let a = parse("sum_{z} P(Y | x, Z) * P(z)", &g).unwrap();
        let b = parse("Σ_z P(z) P(y|x,z)", &g).unwrap();
        assert_eq!(canonicalize(&a).unwrap(), canonicalize(&b).unwrap());
        let s = parse("P(y|do(x),w1,S=1)", &g).unwrap();
        match s {
            Estimand::Term(t) => {
                assert!(t.selected);
                assert_eq!(t.do_vars(), VertexSet::singleton("X"));
                assert_eq!(t.condition_vars(), VertexSet::singleton("W1"));
            }
            _ => panic!(),
        }
        let m = parse("P^{(b)}(y|do(x),do(z)) P^a(z|do(x)) P*(x)", &g).unwrap();
        assert_eq!(render(&canonicalize(&m).unwrap(), Format::Text), "P^{(b)}(y|do(x),do(z)) P^{(a)}(z|do(x)) P*(x)");
        assert!(matches!(parse("P(q)", &g), Err(EstimandError::UnknownVariable(_))));
        assert!(parse("P(y|x", &g).is_err());
    }

    #[test]
    fn round_trip_through_text() {
        let g = g();
        for text in
            ["Σ_z P(y|x,z) P(z)", "P(y|x,S=1)", "Σ_{x',z} P(y|x',z) P(x'|z) P(z|x)", "(P(x,y) / P(x)) P(z)", "P(y) / (Σ_z P(y|z) P(z))"]
        {
            let e = canonicalize(&parse(text, &g).unwrap()).unwrap();
            let again = canonicalize(&parse(&render(&e, Format::Text), &g).unwrap()).unwrap();
            assert_eq!(e, again, "{text}");
        }
    }

    #[test]
    fn estimability_rules() {
        let g = g();
        let mut cat = SourceCatalog::new(vec![Source::observational(Domain::Target, g.endogenous()).selected()]);
        let sel = parse("P(y|x,S=1)", &g).unwrap();
        assert!(estimable(&sel, &cat).estimable);
        let adj = parse("Σ_{z,w1} P(y|x,z,w1,S=1) P(z,w1)", &g).unwrap();
        let r = estimable(&adj, &cat);
        assert!(!r.estimable);
        assert_eq!(r.terms.iter().filter(|t| t.source.is_none()).count(), 1);
        cat.push(Source::observational(Domain::Target, VertexSet::from_names(["Z", "W1"])));
        assert!(estimable(&adj, &cat).estimable);
        let q = parse("P(y|do(x))", &g).unwrap();
        assert!(!estimable(&q, &SourceCatalog::observational(&g)).estimable);
        let exp = SourceCatalog::new(vec![Source::experimental(Domain::Target, VertexSet::singleton("X"), g.endogenous())]);
        assert!(estimable(&q, &exp).estimable);
        assert!(!estimable(&parse("P(y|do(x),do(z))", &g).unwrap(), &exp).estimable);
    }
}
