//! Worked example models shipped with the crate: graph, data catalogue,
//! query and expected estimand for each.

use crate::estimand::{canonicalize, parse, Estimand, EstimandError, Query, SourceCatalog};
use crate::graph::Graph;
use crate::text::{parse_graph, parse_sources};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Identify,
    Recover,
    Transport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expect {
    Derived,
    NotDerived,
}

#[derive(Debug, Clone, Copy)]
pub struct Fixture {
    pub name: &'static str,
    pub graph: &'static str,
    pub sources: &'static str,
    pub query: &'static str,
    pub task: Task,
    pub expect: Expect,
    /// Expected estimand, compared after canonicalization.
    pub golden: Option<&'static str>,
}

impl Fixture {
    pub fn graph(&self) -> Graph {
        parse_graph(self.graph).unwrap_or_else(|e| panic!("fixture {}: {e}", self.name))
    }

    pub fn catalog(&self) -> SourceCatalog {
        parse_sources(self.sources, &self.graph()).unwrap_or_else(|e| panic!("fixture {}: {e}", self.name))
    }

    pub fn query(&self) -> Query {
        match parse(self.query, &self.graph()) {
            Ok(Estimand::Term(mut t)) => {
                t.domain = crate::estimand::Domain::Target;
                Query::new(t)
            }
            other => panic!("fixture {}: bad query {other:?}", self.name),
        }
    }

    pub fn golden(&self) -> Option<Result<Estimand, EstimandError>> {
        self.golden.map(|t| parse(t, &self.graph()).and_then(|e| canonicalize(&e)))
    }
}

macro_rules! graph_file {
    ($name:literal) => {
        include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/", $name, ".graph"))
    };
}

pub const D_SEPARATION_EXAMPLE: &str = graph_file!("d_separation_example");

pub const ALL: &[Fixture] = &[
    Fixture {
        name: "backdoor_small",
        graph: graph_file!("backdoor_small"),
        sources: "obs\n",
        query: "P(y|do(c))",
        task: Task::Identify,
        expect: Expect::Derived,
        golden: Some("Σ_e P(y|c,e) P(e)"),
    },
    Fixture {
        name: "backdoor_large",
        graph: graph_file!("backdoor_large"),
        sources: "obs\n",
        query: "P(y|do(x))",
        task: Task::Identify,
        expect: Expect::Derived,
        golden: None,
    },
    Fixture {
        name: "frontdoor_conditional",
        graph: graph_file!("frontdoor_conditional"),
        sources: "obs\n",
        query: "P(y|do(x))",
        task: Task::Identify,
        expect: Expect::Derived,
        golden: Some("Σ_{m,w1,w2,w3} P(m|w1,w2,w3,x) P(w1,w2,w3) Σ_{x'} P(y|w1,w2,w3,m,x') P(x'|w1,w2,w3)"),
    },
    Fixture {
        name: "surrogate_experiment",
        graph: graph_file!("surrogate_experiment"),
        sources: "obs\nexp Z\n",
        query: "P(y|do(x))",
        task: Task::Identify,
        expect: Expect::Derived,
        golden: Some("Σ_{w1,w2} P(y|do(z),x,w1,w2) P(w1,w2|do(z))"),
    },
    Fixture {
        name: "instrumental_variable",
        graph: graph_file!("instrumental_variable"),
        sources: "obs\nexp Z\n",
        query: "P(y|do(x))",
        task: Task::Identify,
        expect: Expect::NotDerived,
        golden: None,
    },
    Fixture {
        name: "surrogate_frontdoor",
        graph: graph_file!("surrogate_frontdoor"),
        sources: "obs\nexp Z\n",
        query: "P(y|do(x))",
        task: Task::Identify,
        expect: Expect::Derived,
        golden: Some("Σ_{w2} P(w2|x,do(z)) Σ_{x'} P(y|w2,x',do(z)) P(x'|do(z))"),
    },
    Fixture {
        name: "outcome_selection",
        graph: graph_file!("outcome_selection"),
        sources: "obs selected\n",
        query: "P(y|do(x))",
        task: Task::Recover,
        expect: Expect::NotDerived,
        golden: None,
    },
    Fixture {
        name: "simple_selection",
        graph: graph_file!("simple_selection"),
        sources: "obs selected\n",
        query: "P(y|do(x))",
        task: Task::Recover,
        expect: Expect::Derived,
        golden: Some("P(y|x,S=1)"),
    },
    Fixture {
        name: "selection_adjustment",
        graph: graph_file!("selection_adjustment"),
        sources: "obs selected\n",
        query: "P(y|do(x))",
        task: Task::Recover,
        expect: Expect::Derived,
        golden: Some("Σ_z P(y|x,z,S=1) P(z|S=1)"),
    },
    Fixture {
        name: "selection_do_calculus",
        graph: graph_file!("selection_do_calculus"),
        sources: "obs selected\n",
        query: "P(y|do(x))",
        task: Task::Recover,
        expect: Expect::Derived,
        golden: Some("Σ_z P(y|x,z,w,S=1) P(z|w,S=1)"),
    },
    Fixture {
        name: "selection_backdoor",
        graph: graph_file!("selection_backdoor"),
        sources: "obs selected\nmarginal Z,W\n",
        query: "P(y|do(x))",
        task: Task::Recover,
        expect: Expect::Derived,
        golden: Some("Σ_{z,w} P(y|x,z,w,S=1) P(z,w)"),
    },
    Fixture {
        name: "transport_admissible",
        graph: graph_file!("transport_admissible"),
        sources: "exp X source\nobs\n",
        query: "P(y|do(x))",
        task: Task::Transport,
        expect: Expect::Derived,
        golden: Some("Σ_z P(y|do(x),z) P*(z)"),
    },
    Fixture {
        name: "transport_direct",
        graph: graph_file!("transport_direct"),
        sources: "exp X source\nobs\n",
        query: "P(y|do(x))",
        task: Task::Transport,
        expect: Expect::Derived,
        golden: Some("P(y|do(x))"),
    },
    Fixture {
        name: "transport_blocked",
        graph: graph_file!("transport_blocked"),
        sources: "exp X source\nobs\n",
        query: "P(y|do(x))",
        task: Task::Transport,
        expect: Expect::NotDerived,
        golden: None,
    },
    Fixture {
        name: "transport_post_treatment",
        graph: graph_file!("transport_post_treatment"),
        sources: "exp X source\nobs\n",
        query: "P(y|do(x))",
        task: Task::Transport,
        expect: Expect::Derived,
        golden: Some("Σ_z P(y|do(x),z) P*(z|x)"),
    },
    Fixture {
        name: "transport_complex",
        graph: graph_file!("transport_complex"),
        sources: "exp X source\nobs\n",
        query: "P(y|do(x))",
        task: Task::Transport,
        expect: Expect::Derived,
        golden: Some("Σ_{z,w2,w3} P(y|do(x),z,w2,w3) P(z|do(x),w2,w3) P*(w2,w3)"),
    },
    Fixture {
        name: "meta_transport",
        graph: graph_file!("meta_transport"),
        sources: "exp X domain=a\nexp X,Z domain=b\n",
        query: "P(y|do(x))",
        task: Task::Transport,
        expect: Expect::Derived,
        golden: Some("Σ_z P^{(b)}(y|do(x),do(z)) P^{(a)}(z|do(x))"),
    },
];

pub fn by_name(name: &str) -> Option<&'static Fixture> {
    ALL.iter().find(|f| f.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::print_graph;

    #[test]
    fn every_fixture_loads_and_round_trips() {
        for f in ALL {
            let g = f.graph();
            assert_eq!(parse_graph(&print_graph(&g)).unwrap(), g, "{}", f.name);
            assert!(!f.catalog().is_empty());
            f.query();
            if let Some(gold) = f.golden() {
                gold.unwrap_or_else(|e| panic!("{}: {e}", f.name));
            }
        }
        parse_graph(D_SEPARATION_EXAMPLE).unwrap();
    }
}
