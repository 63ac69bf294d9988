//! Ground truth by exact enumeration over small discrete structural models.
//!
//! Every bidirected edge is realized as its own exogenous block shared by
//! both endpoints; every vertex also owns one private block. Selection
//! vertices are ordinary binary variables; discrepancy vertices are not
//! variables at all — they only mark where `domain_variant` may differ.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimand::{Domain, Estimand, ProbTerm, Symbol};
use crate::graph::{Graph, VertexSet};

/// Largest table (exogenous configurations × joint states) enumerated.
pub const ENUMERATION_LIMIT: f64 = 1e7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("enumeration of {0:.0} states exceeds the limit")]
    TooLarge(f64),
    #[error("unknown vertex {0}")]
    UnknownVertex(String),
    #[error("value {value} out of range for {var}")]
    ValueOutOfDomain { var: String, value: usize },
    #[error("the selected sample has zero probability")]
    ZeroSelectionMass,
    #[error("no model for domain {0}")]
    NotEstimable(String),
    #[error("division of positive mass by zero in {0}")]
    ZeroDenominator(String),
    #[error("the model has no selection vertex")]
    NoSelectionVertex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExoBlock {
    pub name: String,
    pub probs: Vec<f64>,
}

impl ExoBlock {
    pub fn card(&self) -> usize {
        self.probs.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mechanism {
    pub vertex: String,
    pub parents: Vec<String>,
    /// Exogenous block indices: shared blocks first, the private block last.
    pub exo: Vec<usize>,
    /// Value for every (parent values, exogenous values) in mixed radix,
    /// last index fastest.
    pub table: Vec<usize>,
    /// Set by an intervention; overrides the table.
    pub constant: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scm {
    pub graph: Graph,
    /// Variables in topological order.
    pub order: Vec<String>,
    pub cards: BTreeMap<String, usize>,
    pub exo: Vec<ExoBlock>,
    /// Parallel to `order`.
    pub mechanisms: Vec<Mechanism>,
}

/// Per-vertex domain sizes; unlisted vertices get `default`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sizes {
    pub default: usize,
    pub overrides: BTreeMap<String, usize>,
}

impl Default for Sizes {
    fn default() -> Self {
        Sizes { default: 2, overrides: BTreeMap::new() }
    }
}

impl Sizes {
    pub fn uniform(n: usize) -> Self {
        Sizes { default: n, overrides: BTreeMap::new() }
    }

    fn of(&self, v: &str) -> usize {
        self.overrides.get(v).copied().unwrap_or(self.default).max(2)
    }
}

const EXO_CARD: usize = 4;

fn dirichlet(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    Dirichlet::new(&vec![1.0; k]).expect("k ≥ 2").sample(rng)
}

fn radix_product(cards: impl IntoIterator<Item = usize>) -> usize {
    cards.into_iter().product()
}

/// One row per (parents, shared exogenous) configuration; within a row the
/// private block hits every value, so every value has positive probability
/// under every parent configuration.
fn surjective_table(rng: &mut ChaCha8Rng, rows: usize, own: usize, card: usize) -> Vec<usize> {
    let mut table = Vec::with_capacity(rows * own);
    for _ in 0..rows {
        let mut row: Vec<usize> = (0..own).map(|i| if i < card { i } else { rng.gen_range(0..card) }).collect();
        row.shuffle(rng);
        table.extend(row);
    }
    table
}

pub fn random_scm(g: &Graph, sizes: &Sizes, seed: u64) -> Scm {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order: Vec<String> = g.topological_order().into_iter().filter(|v| !g.is_discrepancy(v)).collect();
    let cards: BTreeMap<String, usize> = order.iter().map(|v| (v.clone(), if g.is_selection(v) { 2 } else { sizes.of(v) })).collect();
    let mut exo = Vec::new();
    let mut shared: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (a, b) in g.bidirected_edges() {
        if g.is_discrepancy(a) || g.is_discrepancy(b) {
            continue;
        }
        shared.entry(a.to_string()).or_default().push(exo.len());
        shared.entry(b.to_string()).or_default().push(exo.len());
        exo.push(ExoBlock { name: format!("U_{a}{b}"), probs: dirichlet(&mut rng, EXO_CARD) });
    }
    let mut mechanisms = Vec::new();
    for v in &order {
        let own = EXO_CARD.max(cards[v]);
        let private = exo.len();
        exo.push(ExoBlock { name: format!("U_{v}"), probs: dirichlet(&mut rng, own) });
        let parents: Vec<String> = g.parents(v).iter().filter(|p| !g.is_discrepancy(p)).cloned().collect();
        let mut blocks = shared.get(v).cloned().unwrap_or_default();
        blocks.push(private);
        let rows =
            radix_product(parents.iter().map(|p| cards[p])) * radix_product(blocks[..blocks.len() - 1].iter().map(|&b| exo[b].card()));
        let table = surjective_table(&mut rng, rows, own, cards[v]);
        mechanisms.push(Mechanism { vertex: v.clone(), parents, exo: blocks, table, constant: None });
    }
    Scm { graph: g.clone(), order, cards, exo, mechanisms }
}

/// Dense distribution over named variables, first variable slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dist {
    pub vars: Vec<String>,
    pub cards: Vec<usize>,
    pub probs: Vec<f64>,
}

fn decode(mut index: usize, cards: &[usize], out: &mut [usize]) {
    for i in (0..cards.len()).rev() {
        out[i] = index % cards[i];
        index /= cards[i];
    }
}

fn encode(values: impl Iterator<Item = usize>, cards: &[usize]) -> usize {
    values.zip(cards).fold(0, |acc, (v, c)| acc * c + v)
}

impl Dist {
    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    fn position(&self, v: &str) -> Option<usize> {
        self.vars.iter().position(|x| x == v)
    }

    pub fn marginal(&self, keep: &[String]) -> Result<Dist, OracleError> {
        let pos: Vec<usize> =
            keep.iter().map(|v| self.position(v).ok_or_else(|| OracleError::UnknownVertex(v.clone()))).collect::<Result<_, _>>()?;
        let cards: Vec<usize> = pos.iter().map(|&p| self.cards[p]).collect();
        let mut probs = vec![0.0; radix_product(cards.iter().copied())];
        let mut vals = vec![0; self.vars.len()];
        for (i, p) in self.probs.iter().enumerate() {
            decode(i, &self.cards, &mut vals);
            probs[encode(pos.iter().map(|&q| vals[q]), &cards)] += p;
        }
        Ok(Dist { vars: keep.to_vec(), cards, probs })
    }

    /// Conditions on `var = value`, keeping the variable.
    pub fn condition_on(&self, var: &str, value: usize) -> Result<Dist, OracleError> {
        let p = self.position(var).ok_or_else(|| OracleError::UnknownVertex(var.to_string()))?;
        let mut vals = vec![0; self.vars.len()];
        let mut probs = self.probs.clone();
        for (i, x) in probs.iter_mut().enumerate() {
            decode(i, &self.cards, &mut vals);
            if vals[p] != value {
                *x = 0.0;
            }
        }
        let mass: f64 = probs.iter().sum();
        if mass <= 0.0 {
            return Err(OracleError::ZeroSelectionMass);
        }
        probs.iter_mut().for_each(|x| *x /= mass);
        Ok(Dist { vars: self.vars.clone(), cards: self.cards.clone(), probs })
    }

    pub fn prob(&self, assignment: &BTreeMap<String, usize>) -> f64 {
        let mut vals = vec![0; self.vars.len()];
        self.probs
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                decode(*i, &self.cards, &mut vals);
                self.vars.iter().zip(&vals).all(|(v, x)| assignment.get(v).is_none_or(|a| a == x))
            })
            .map(|(_, p)| p)
            .sum()
    }

    /// Largest |P(x,y,z)P(z) − P(x,z)P(y,z)| over all values.
    pub fn independence_gap(&self, x: &VertexSet, y: &VertexSet, z: &VertexSet) -> Result<f64, OracleError> {
        let names = |s: &VertexSet| s.iter().cloned().collect::<Vec<_>>();
        let all: Vec<String> = names(x).into_iter().chain(names(y)).chain(names(z)).collect();
        let m = self.marginal(&all)?;
        let xz = self.marginal(&names(x).into_iter().chain(names(z)).collect::<Vec<_>>())?;
        let yz = self.marginal(&names(y).into_iter().chain(names(z)).collect::<Vec<_>>())?;
        let zz = self.marginal(&names(z))?;
        let (nx, ny) = (x.len(), y.len());
        let mut vals = vec![0; all.len()];
        let mut gap: f64 = 0.0;
        for i in 0..m.probs.len() {
            decode(i, &m.cards, &mut vals);
            let (vx, rest) = vals.split_at(nx);
            let (vy, vz) = rest.split_at(ny);
            let pz = zz.probs[encode(vz.iter().copied(), &zz.cards)];
            let pxz = xz.probs[encode(vx.iter().chain(vz).copied(), &xz.cards)];
            let pyz = yz.probs[encode(vy.iter().chain(vz).copied(), &yz.cards)];
            gap = gap.max((m.probs[i] * pz - pxz * pyz).abs());
        }
        Ok(gap)
    }
}

impl Scm {
    fn index(&self, v: &str) -> Result<usize, OracleError> {
        self.order.iter().position(|x| x == v).ok_or_else(|| OracleError::UnknownVertex(v.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("models serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Replaces the mechanisms of the assigned vertices by constants.
    pub fn intervene(&self, assignment: &BTreeMap<String, usize>) -> Result<Scm, OracleError> {
        let mut m = self.clone();
        for (v, &value) in assignment {
            let i = self.index(v)?;
            if value >= self.cards[v] {
                return Err(OracleError::ValueOutOfDomain { var: v.clone(), value });
            }
            m.mechanisms[i].constant = Some(value);
        }
        let cut: VertexSet = assignment.keys().cloned().collect();
        m.graph = self.graph.mutilate(&cut, &VertexSet::new()).map_err(|e| OracleError::UnknownVertex(e.to_string()))?;
        Ok(m)
    }

    fn shared_blocks(&self) -> Vec<usize> {
        let private: BTreeSet<usize> = self.mechanisms.iter().map(|m| *m.exo.last().expect("private block")).collect();
        (0..self.exo.len()).filter(|b| !private.contains(b)).collect()
    }

    /// P(v | parents, shared exogenous values), private block summed out.
    fn conditional(&self, m: &Mechanism, vals: &[usize], shared: &[usize]) -> Vec<f64> {
        let card = self.cards[&m.vertex];
        let mut out = vec![0.0; card];
        if let Some(c) = m.constant {
            out[c] = 1.0;
            return out;
        }
        let own = &self.exo[*m.exo.last().unwrap()];
        let mut row = 0;
        for p in &m.parents {
            let i = self.order.iter().position(|x| x == p).unwrap();
            row = row * self.cards[p] + vals[i];
        }
        for &b in &m.exo[..m.exo.len() - 1] {
            row = row * self.exo[b].card() + shared[b];
        }
        for (u, p) in own.probs.iter().enumerate() {
            out[m.table[row * own.card() + u]] += p;
        }
        out
    }

    /// Exact joint over all variables.
    pub fn joint(&self) -> Result<Dist, OracleError> {
        let blocks = self.shared_blocks();
        let cards: Vec<usize> = self.order.iter().map(|v| self.cards[v]).collect();
        let states = radix_product(cards.iter().copied());
        let configs = radix_product(blocks.iter().map(|&b| self.exo[b].card()));
        let size = states as f64 * configs as f64;
        if size > ENUMERATION_LIMIT {
            return Err(OracleError::TooLarge(size));
        }
        let mut probs = vec![0.0; states];
        let block_cards: Vec<usize> = blocks.iter().map(|&b| self.exo[b].card()).collect();
        let mut bvals = vec![0; blocks.len()];
        let mut shared = vec![0; self.exo.len()];
        let mut vals = vec![0; cards.len()];
        for c in 0..configs {
            decode(c, &block_cards, &mut bvals);
            let mut pu = 1.0;
            for (k, &b) in blocks.iter().enumerate() {
                shared[b] = bvals[k];
                pu *= self.exo[b].probs[bvals[k]];
            }
            if pu == 0.0 {
                continue;
            }
            self.accumulate(0, pu, &mut vals, &shared, &cards, &mut probs);
        }
        Ok(Dist { vars: self.order.clone(), cards, probs })
    }

    // depth-first over the topological order, skipping zero-mass branches
    fn accumulate(&self, i: usize, p: f64, vals: &mut Vec<usize>, shared: &[usize], cards: &[usize], probs: &mut [f64]) {
        if i == self.order.len() {
            probs[encode(vals.iter().copied(), cards)] += p;
            return;
        }
        let cond = self.conditional(&self.mechanisms[i], vals, shared);
        for (v, q) in cond.into_iter().enumerate() {
            if q > 0.0 {
                vals[i] = v;
                self.accumulate(i + 1, p * q, vals, shared, cards, probs);
            }
        }
        vals[i] = 0;
    }

    /// Values of every variable for one full exogenous configuration.
    fn solve(&self, u: &[usize]) -> Vec<usize> {
        let mut vals = vec![0; self.order.len()];
        for (i, m) in self.mechanisms.iter().enumerate() {
            vals[i] = match m.constant {
                Some(c) => c,
                None => {
                    let mut idx = 0;
                    for p in &m.parents {
                        let j = self.order.iter().position(|x| x == p).unwrap();
                        idx = idx * self.cards[p] + vals[j];
                    }
                    for &b in &m.exo {
                        idx = idx * self.exo[b].card() + u[b];
                    }
                    m.table[idx]
                }
            };
        }
        vals
    }

    /// Monte-Carlo draws of the variables, in `order`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<Vec<usize>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cdfs: Vec<Vec<f64>> = self
            .exo
            .iter()
            .map(|b| {
                b.probs
                    .iter()
                    .scan(0.0, |acc, p| {
                        *acc += p;
                        Some(*acc)
                    })
                    .collect()
            })
            .collect();
        let mut u = vec![0; self.exo.len()];
        (0..n)
            .map(|_| {
                for (k, cdf) in cdfs.iter().enumerate() {
                    let r: f64 = rng.gen();
                    u[k] = cdf.iter().position(|&c| r < c).unwrap_or(cdf.len() - 1);
                }
                self.solve(&u)
            })
            .collect()
    }

    /// Joint of every remaining variable under do(x) for each value of x,
    /// keyed by the x-values in the order of `x`.
    pub fn post_intervention_dist(&self, x: &VertexSet) -> Result<Vec<(Vec<usize>, Dist)>, OracleError> {
        let names: Vec<String> = x.iter().cloned().collect();
        for v in &names {
            self.index(v)?;
        }
        let cards: Vec<usize> = names.iter().map(|v| self.cards[v]).collect();
        let mut vals = vec![0; names.len()];
        let mut out = Vec::new();
        for i in 0..radix_product(cards.iter().copied()) {
            decode(i, &cards, &mut vals);
            let assignment: BTreeMap<String, usize> = names.iter().cloned().zip(vals.iter().copied()).collect();
            let joint = self.intervene(&assignment)?.joint()?;
            let rest: Vec<String> = self.order.iter().filter(|v| !x.contains(v)).cloned().collect();
            out.push((vals.clone(), joint.marginal(&rest)?));
        }
        Ok(out)
    }

    /// The same model with mechanisms and private exogenous tables redrawn
    /// at `targets`.
    pub fn domain_variant(&self, targets: &VertexSet, seed: u64) -> Result<Scm, OracleError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = self.clone();
        for v in targets.iter() {
            let i = self.index(v)?;
            let mech = &mut m.mechanisms[i];
            let private = *mech.exo.last().unwrap();
            let own = m.exo[private].card();
            m.exo[private].probs = dirichlet(&mut rng, own);
            let rows = mech.table.len() / own;
            mech.table = surjective_table(&mut rng, rows, own, m.cards[v]);
        }
        Ok(m)
    }

    /// Children of the discrepancy vertices attached to `domain` (all of
    /// them when `domain` is None).
    pub fn discrepancy_targets(g: &Graph, domain: Option<&str>) -> VertexSet {
        let ds = match domain {
            Some(l) => g.discrepancies_for(l),
            None => g.discrepancy_vertices(),
        };
        ds.iter().fold(VertexSet::new(), |acc, d| acc.union(&g.children(d)))
    }

    /// Joint over (Y_{x=v} for each v in `x_values`, X, covariates): each
    /// exogenous configuration drives the factual model and every submodel.
    pub fn counterfactual_joint(&self, x: &str, y: &str, x_values: &[usize], covariates: &[String]) -> Result<Dist, OracleError> {
        let (xi, yi) = (self.index(x)?, self.index(y)?);
        let cov: Vec<usize> = covariates.iter().map(|c| self.index(c)).collect::<Result<_, _>>()?;
        let subs: Vec<Scm> = x_values.iter().map(|&v| self.intervene(&BTreeMap::from([(x.to_string(), v)]))).collect::<Result<_, _>>()?;
        let ucards: Vec<usize> = self.exo.iter().map(|b| b.card()).collect();
        let configs = radix_product(ucards.iter().copied());
        if configs as f64 > ENUMERATION_LIMIT {
            return Err(OracleError::TooLarge(configs as f64));
        }
        let mut vars: Vec<String> = x_values.iter().map(|v| format!("{y}[{x}={v}]")).collect();
        vars.push(x.to_string());
        vars.extend(covariates.iter().cloned());
        let mut cards = vec![self.cards[y]; x_values.len()];
        cards.push(self.cards[x]);
        cards.extend(covariates.iter().map(|c| self.cards[c]));
        let mut probs = vec![0.0; radix_product(cards.iter().copied())];
        let mut u = vec![0; ucards.len()];
        for c in 0..configs {
            decode(c, &ucards, &mut u);
            let pu: f64 = u.iter().enumerate().map(|(k, &v)| self.exo[k].probs[v]).product();
            let factual = self.solve(&u);
            let mut key: Vec<usize> = subs.iter().map(|s| s.solve(&u)[yi]).collect();
            key.push(factual[xi]);
            key.extend(cov.iter().map(|&i| factual[i]));
            probs[encode(key.into_iter(), &cards)] += pu;
        }
        Ok(Dist { vars, cards, probs })
    }
}

/// A function of the free symbols of an estimand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub vars: Vec<Symbol>,
    pub cards: Vec<usize>,
    pub data: Vec<f64>,
}

impl Table {
    fn scalar(x: f64) -> Self {
        Table { vars: Vec::new(), cards: Vec::new(), data: vec![x] }
    }

    fn over(vars: Vec<Symbol>, cards: Vec<usize>, f: impl Fn(&[usize]) -> f64) -> Self {
        let mut vals = vec![0; vars.len()];
        let data = (0..radix_product(cards.iter().copied()))
            .map(|i| {
                decode(i, &cards, &mut vals);
                f(&vals)
            })
            .collect();
        Table { vars, cards, data }
    }

    fn at(&self, assignment: &BTreeMap<&Symbol, usize>) -> f64 {
        self.data[encode(self.vars.iter().map(|s| assignment[s]), &self.cards)]
    }

    fn scope(parts: &[&Table]) -> (Vec<Symbol>, Vec<usize>) {
        let mut m: BTreeMap<Symbol, usize> = BTreeMap::new();
        for t in parts {
            for (s, c) in t.vars.iter().zip(&t.cards) {
                m.insert(s.clone(), *c);
            }
        }
        m.into_iter().unzip()
    }

    fn combine(parts: &[&Table], f: impl Fn(&[f64]) -> f64) -> Table {
        let (vars, cards) = Table::scope(parts);
        Table::over(vars.clone(), cards, |vals| {
            let a: BTreeMap<&Symbol, usize> = vars.iter().zip(vals.iter().copied()).collect();
            f(&parts.iter().map(|t| t.at(&a)).collect::<Vec<_>>())
        })
    }

    fn sum_out(&self, binders: &BTreeSet<Symbol>) -> Table {
        let keep: Vec<usize> = (0..self.vars.len()).filter(|&i| !binders.contains(&self.vars[i])).collect();
        let cards: Vec<usize> = keep.iter().map(|&i| self.cards[i]).collect();
        let mut data = vec![0.0; radix_product(cards.iter().copied())];
        let mut vals = vec![0; self.vars.len()];
        for (i, x) in self.data.iter().enumerate() {
            decode(i, &self.cards, &mut vals);
            data[encode(keep.iter().map(|&k| vals[k]), &cards)] += x;
        }
        Table { vars: keep.iter().map(|&i| self.vars[i].clone()).collect(), cards, data }
    }

    /// Largest pointwise difference, broadcasting the table with the
    /// smaller scope; infinite when neither scope contains the other.
    pub fn max_abs_diff(&self, other: &Table) -> f64 {
        let (a, b): (BTreeSet<&Symbol>, BTreeSet<&Symbol>) = (self.vars.iter().collect(), other.vars.iter().collect());
        if !a.is_subset(&b) && !b.is_subset(&a) {
            return f64::INFINITY;
        }
        Table::combine(&[self, other], |v| (v[0] - v[1]).abs()).data.into_iter().fold(0.0, f64::max)
    }
}

/// Models for each population the estimand may refer to.
pub type Worlds = BTreeMap<Domain, Scm>;

/// Exact value of `e` as a table over its free symbols. Quotients define
/// 0/0 as 0.
pub fn evaluate(e: &Estimand, worlds: &Worlds) -> Result<Table, OracleError> {
    Evaluator { worlds, cache: RefCell::new(HashMap::new()) }.eval(e)
}

type CacheKey = (Domain, bool, BTreeMap<String, usize>);

struct Evaluator<'w> {
    worlds: &'w Worlds,
    cache: RefCell<HashMap<CacheKey, Dist>>,
}

impl Evaluator<'_> {
    fn eval(&self, e: &Estimand) -> Result<Table, OracleError> {
        match e {
            Estimand::Term(t) => self.term(t),
            Estimand::Sum(binders, body) => Ok(self.eval(body)?.sum_out(binders)),
            Estimand::Product(fs) => {
                let parts: Vec<Table> = fs.iter().map(|f| self.eval(f)).collect::<Result<_, _>>()?;
                let refs: Vec<&Table> = parts.iter().collect();
                Ok(if refs.is_empty() { Table::scalar(1.0) } else { Table::combine(&refs, |v| v.iter().product()) })
            }
            Estimand::Quotient(n, d) => {
                let (n, d) = (self.eval(n)?, self.eval(d)?);
                let bad = std::cell::Cell::new(false);
                let t = Table::combine(&[&n, &d], |v| {
                    if v[1] == 0.0 {
                        bad.set(bad.get() || v[0] > 0.0);
                        0.0
                    } else {
                        v[0] / v[1]
                    }
                });
                if bad.get() {
                    return Err(OracleError::ZeroDenominator(e.to_string()));
                }
                Ok(t)
            }
        }
    }

    fn dist(&self, domain: &Domain, selected: bool, assignment: BTreeMap<String, usize>) -> Result<Dist, OracleError> {
        let key = (domain.clone(), selected, assignment);
        if let Some(d) = self.cache.borrow().get(&key) {
            return Ok(d.clone());
        }
        let m = self.worlds.get(domain).ok_or_else(|| OracleError::NotEstimable(domain.to_string()))?;
        let mut d = m.intervene(&key.2)?.joint()?;
        if selected {
            let s = m.graph.selection_vertices().iter().next().cloned().ok_or(OracleError::NoSelectionVertex)?;
            d = d.condition_on(&s, 1)?;
        }
        self.cache.borrow_mut().insert(key, d.clone());
        Ok(d)
    }

    fn term(&self, t: &ProbTerm) -> Result<Table, OracleError> {
        let m = self.worlds.get(&t.domain).ok_or_else(|| OracleError::NotEstimable(t.domain.to_string()))?;
        let card = |s: &Symbol| m.cards.get(&s.var).copied().ok_or_else(|| OracleError::UnknownVertex(s.var.clone()));
        let names = |set: &BTreeSet<Symbol>| set.iter().map(|s| s.var.clone()).collect::<Vec<_>>();
        let (outs, conds) = (names(&t.outcomes), names(&t.conditions));
        let both: Vec<String> = outs.iter().chain(&conds).cloned().collect();
        let do_syms: Vec<Symbol> = t.do_set.iter().cloned().collect();
        let do_cards: Vec<usize> = do_syms.iter().map(card).collect::<Result<_, _>>()?;
        // P(o|c) for each do-assignment
        let mut pieces = Vec::new();
        let mut vals = vec![0; do_syms.len()];
        for i in 0..radix_product(do_cards.iter().copied()) {
            decode(i, &do_cards, &mut vals);
            let a: BTreeMap<String, usize> = do_syms.iter().map(|s| s.var.clone()).zip(vals.iter().copied()).collect();
            let d = self.dist(&t.domain, t.selected, a)?;
            pieces.push((d.marginal(&both)?, d.marginal(&conds)?));
        }
        let vars: Vec<Symbol> = t.outcomes.iter().chain(&t.conditions).chain(&t.do_set).cloned().collect();
        let cards: Vec<usize> = vars.iter().map(card).collect::<Result<_, _>>()?;
        let (no, nc) = (outs.len(), conds.len());
        Ok(Table::over(vars, cards.clone(), |v| {
            let di = encode(v[no + nc..].iter().copied(), &cards[no + nc..]);
            let (joint, marg) = &pieces[di];
            let num = joint.probs[encode(v[..no + nc].iter().copied(), &cards[..no + nc])];
            let den = marg.probs[encode(v[no..no + nc].iter().copied(), &cards[no..no + nc])];
            if den == 0.0 {
                0.0
            } else {
                num / den
            }
        }))
    }
}

/// A target model for `seed` plus, for every labelled source in `domains`,
/// a variant redrawn at that source's discrepancy targets.
pub fn seeded_worlds(g: &Graph, domains: &BTreeSet<Domain>, seed: u64) -> Result<Worlds, OracleError> {
    let target = random_scm(g, &Sizes::default(), seed);
    let mut w = BTreeMap::new();
    for d in domains {
        if let Domain::Source(l) = d {
            let salt = l.bytes().fold(0x9e37_79b9_u64, |h, b| h.rotate_left(5) ^ b as u64);
            w.insert(d.clone(), target.domain_variant(&Scm::discrepancy_targets(g, Some(l)), seed ^ salt)?);
        }
    }
    w.insert(Domain::Target, target);
    Ok(w)
}

/// Largest |e − truth| over `seeds`, each seed drawing fresh worlds.
pub fn max_abs_error(
    e: &Estimand,
    q: &crate::estimand::Query,
    g: &Graph,
    domains: &BTreeSet<Domain>,
    seeds: std::ops::Range<u64>,
) -> Result<f64, OracleError> {
    let errors: Vec<Result<f64, OracleError>> = seeds
        .into_par_iter()
        .map(|s| {
            let w = seeded_worlds(g, domains, s)?;
            Ok(evaluate(e, &w)?.max_abs_diff(&target_table(q, &w[&Domain::Target])?))
        })
        .collect();
    errors.into_iter().try_fold(0.0, |acc, r| r.map(|x| f64::max(acc, x)))
}

/// Ground truth for the target-domain query term.
pub fn target_table(q: &crate::estimand::Query, target: &Scm) -> Result<Table, OracleError> {
    evaluate(&q.estimand(), &BTreeMap::from([(Domain::Target, target.clone())]))
}

/// Fraction of seeds for which `gap(seed)` is at least `threshold`;
/// seeds run in parallel and errors count as no gap.
pub fn generic_gap_rate(seeds: std::ops::Range<u64>, threshold: f64, gap: impl Fn(u64) -> Result<f64, OracleError> + Sync) -> f64 {
    let n = seeds.end.saturating_sub(seeds.start).max(1) as f64;
    let hits: Vec<bool> = seeds.into_par_iter().map(|s| gap(s).is_ok_and(|g| g >= threshold)).collect();
    hits.into_iter().filter(|&h| h).count() as f64 / n
}
