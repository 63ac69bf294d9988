//! Line-oriented graph and data-source formats.
//!
//! Graph files:
//!
//! ```text
//! # comment
//! var X Y Z
//! select S
//! snode T for a,b   # discrepancy vertex for sources a and b; omit `for` for all
//! Z -> X
//! X -> Y
//! X <-> Y
//! W -> S
//! T -> Z
//! ```
//!
//! Source files hold one distribution per line:
//!
//! ```text
//! obs [selected] [source | domain=a] [measured=V1,V2]
//! exp Z1,Z2 [selected] [source | domain=b] [measured=...] [all-subsets]
//! marginal Z,W
//! ```
//!
//! Without `source` or `domain=` a line describes the target population;
//! `source` names the single unlabelled source population.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::estimand::{Domain, Source, SourceCatalog, SourceKind};
use crate::graph::{Graph, GraphError, RawGraph, ValidationReport, Vertex, VertexKind, VertexSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TextError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Invalid(#[from] ValidationReport),
}

fn perr(line: usize, reason: impl Into<String>) -> TextError {
    TextError::Parse { line, reason: reason.into() }
}

fn strip_comment(l: &str) -> &str {
    l.split('#').next().unwrap_or("").trim()
}

fn is_name(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_alphabetic() || c == '_') && cs.all(|c| c.is_alphanumeric() || c == '_' || c == '\'')
}

fn names(line: usize, parts: &[&str]) -> Result<Vec<String>, TextError> {
    let mut out = Vec::new();
    for p in parts.iter().flat_map(|p| p.split(',')).filter(|p| !p.is_empty()) {
        if !is_name(p) {
            return Err(perr(line, format!("bad vertex name `{p}`")));
        }
        out.push(p.to_string());
    }
    Ok(out)
}

pub fn parse_graph(text: &str) -> Result<Graph, TextError> {
    let mut raw = RawGraph::new();
    let mut declared: BTreeSet<String> = BTreeSet::new();
    let mut declare = |raw: &mut RawGraph, line: usize, v: Vertex| -> Result<(), TextError> {
        if !declared.insert(v.name.clone()) {
            return Err(perr(line, format!("vertex {} declared twice", v.name)));
        }
        raw.vertices.push(v);
        Ok(())
    };
    let mut edges: Vec<(usize, String, String, bool)> = Vec::new();
    for (i, l) in text.lines().enumerate() {
        let line = i + 1;
        let l = strip_comment(l);
        if l.is_empty() {
            continue;
        }
        let parts: Vec<&str> = l.split_whitespace().collect();
        match parts[0] {
            "var" => {
                for n in names(line, &parts[1..])? {
                    declare(&mut raw, line, Vertex { name: n, kind: VertexKind::Endogenous })?;
                }
            }
            "select" => {
                for n in names(line, &parts[1..])? {
                    declare(&mut raw, line, Vertex { name: n, kind: VertexKind::Selection })?;
                }
            }
            "snode" => {
                let (vs, domains) = match parts.iter().position(|p| *p == "for") {
                    Some(k) => (&parts[1..k], names(line, &parts[k + 1..])?),
                    None => (&parts[1..], Vec::new()),
                };
                let vs = names(line, vs)?;
                if vs.is_empty() {
                    return Err(perr(line, "snode needs a name"));
                }
                for n in vs {
                    let kind = VertexKind::Discrepancy { domains: domains.iter().cloned().collect() };
                    declare(&mut raw, line, Vertex { name: n, kind })?;
                }
            }
            _ => {
                let (arrow, bi) = match parts.get(1) {
                    Some(&"->") => ("->", false),
                    Some(&"<->") => ("<->", true),
                    _ => return Err(perr(line, format!("expected a declaration or an edge, found `{l}`"))),
                };
                if parts.len() != 3 {
                    return Err(perr(line, format!("an edge is `A {arrow} B`")));
                }
                let ns = names(line, &[parts[0], parts[2]])?;
                edges.push((line, ns[0].clone(), ns[1].clone(), bi));
            }
        }
    }
    for (line, a, b, bi) in &edges {
        for v in [a, b] {
            if !declared.contains(v) {
                return Err(perr(*line, format!("undeclared vertex {v}")));
            }
        }
        raw = if *bi { raw.bi(a, b) } else { raw.edge(a, b) };
    }
    let g = raw.validate()?;
    let idle: Vec<GraphError> = g
        .discrepancy_vertices()
        .iter()
        .filter(|v| g.children(v).is_empty())
        .map(|v| GraphError::BadDiscrepancyVertex { vertex: v.clone(), reason: "needs at least one outgoing edge".into() })
        .collect();
    if !idle.is_empty() {
        return Err(ValidationReport(idle).into());
    }
    Ok(g)
}

fn join(s: &VertexSet) -> String {
    s.iter().cloned().collect::<Vec<_>>().join(",")
}

/// Canonical text form; `parse_graph` reads it back to an equal graph.
pub fn print_graph(g: &Graph) -> String {
    let mut out = String::new();
    let endo = g.endogenous();
    if !endo.is_empty() {
        let _ = writeln!(out, "var {}", endo.iter().cloned().collect::<Vec<_>>().join(" "));
    }
    for s in &g.selection_vertices() {
        let _ = writeln!(out, "select {s}");
    }
    for d in &g.discrepancy_vertices() {
        match g.kind(d) {
            Some(VertexKind::Discrepancy { domains }) if !domains.is_empty() => {
                let _ = writeln!(out, "snode {d} for {}", domains.iter().cloned().collect::<Vec<_>>().join(","));
            }
            _ => {
                let _ = writeln!(out, "snode {d}");
            }
        }
    }
    for (a, b) in g.directed_edges() {
        let _ = writeln!(out, "{a} -> {b}");
    }
    for (a, b) in g.bidirected_edges() {
        let _ = writeln!(out, "{a} <-> {b}");
    }
    out
}

/// Reads a source file. `measured` defaults to every endogenous vertex.
pub fn parse_sources(text: &str, g: &Graph) -> Result<SourceCatalog, TextError> {
    let mut cat = SourceCatalog::default();
    for (i, l) in text.lines().enumerate() {
        let line = i + 1;
        let l = strip_comment(l);
        if l.is_empty() {
            continue;
        }
        let parts: Vec<&str> = l.split_whitespace().collect();
        let known = |line: usize, vs: Vec<String>| -> Result<VertexSet, TextError> {
            match vs.iter().find(|v| !g.is_endogenous(v)) {
                Some(v) => Err(perr(line, format!("{v} is not an endogenous vertex"))),
                None => Ok(VertexSet::from_names(vs)),
            }
        };
        let (mut src, rest) = match parts[0] {
            "obs" => (Source::observational(Domain::Target, g.endogenous()), &parts[1..]),
            "exp" => {
                let Some(list) = parts.get(1) else { return Err(perr(line, "exp needs the intervened variables")) };
                let iv = known(line, names(line, &[list])?)?;
                (Source::experimental(Domain::Target, iv, g.endogenous()), &parts[2..])
            }
            "marginal" => {
                let Some(list) = parts.get(1) else { return Err(perr(line, "marginal needs variables")) };
                let m = known(line, names(line, &[list])?)?;
                (Source::observational(Domain::Target, m), &parts[2..])
            }
            other => return Err(perr(line, format!("unknown source kind `{other}`"))),
        };
        for opt in rest {
            if *opt == "selected" {
                src.selected = true;
            } else if *opt == "source" {
                src.domain = Domain::source("");
            } else if *opt == "all-subsets" {
                match &mut src.kind {
                    SourceKind::Experimental { all_subsets, .. } => *all_subsets = true,
                    SourceKind::Observational => return Err(perr(line, "all-subsets applies to experiments only")),
                }
            } else if let Some(d) = opt.strip_prefix("domain=") {
                if d.is_empty() || !is_name(d) {
                    return Err(perr(line, format!("bad domain label `{d}`")));
                }
                src.domain = if d == "target" { Domain::Target } else { Domain::source(d) };
            } else if let Some(m) = opt.strip_prefix("measured=") {
                if parts[0] == "marginal" {
                    return Err(perr(line, "a marginal lists its variables directly"));
                }
                src.measured = known(line, names(line, &[m])?)?;
            } else {
                return Err(perr(line, format!("unknown option `{opt}`")));
            }
        }
        cat.push(src);
    }
    if cat.is_empty() {
        return Err(perr(0, "no sources declared"));
    }
    Ok(cat)
}

pub fn print_sources(cat: &SourceCatalog, g: &Graph) -> String {
    let mut out = String::new();
    for s in &cat.sources {
        let mut words: Vec<String> = Vec::new();
        let full = s.measured == g.endogenous();
        match &s.kind {
            SourceKind::Observational if !full && !s.selected && s.domain.is_target() => {
                words.push(format!("marginal {}", join(&s.measured)));
            }
            SourceKind::Observational => words.push("obs".into()),
            SourceKind::Experimental { intervened, .. } => words.push(format!("exp {}", join(intervened))),
        }
        if s.selected {
            words.push("selected".into());
        }
        match &s.domain {
            Domain::Target => {}
            Domain::Source(l) if l.is_empty() => words.push("source".into()),
            Domain::Source(l) => words.push(format!("domain={l}")),
        }
        let marginal = words[0].starts_with("marginal");
        if !full && !marginal {
            words.push(format!("measured={}", join(&s.measured)));
        }
        if matches!(s.kind, SourceKind::Experimental { all_subsets: true, .. }) {
            words.push("all-subsets".into());
        }
        let _ = writeln!(out, "{}", words.join(" "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_line_selection_graph() {
        let text = "# X causes Y; X drives selection\nvar X Y\nselect S\nX -> Y\nX -> S\n\n";
        let g = parse_graph(text).unwrap();
        let want = RawGraph::new().vertex("X").vertex("Y").selection("S").edge("X", "Y").edge("X", "S").validate().unwrap();
        assert_eq!(g, want);
        assert_eq!(parse_graph(&print_graph(&g)).unwrap(), g);
    }

    #[test]
    fn undeclared_endpoint_has_line_number() {
        let err = parse_graph("var B\nA -> B\n").unwrap_err();
        assert_eq!(err, TextError::Parse { line: 2, reason: "undeclared vertex A".into() });
        assert!(matches!(parse_graph("var A\nA => B"), Err(TextError::Parse { line: 2, .. })));
    }

    #[test]
    fn validation_errors_pass_through() {
        assert!(matches!(parse_graph("var X Y\nX -> Y\nY -> X\n"), Err(TextError::Invalid(_))));
        assert!(matches!(parse_graph("var X\nsnode T\n"), Err(TextError::Invalid(_))));
        assert!(matches!(parse_graph("var X Y\nselect S\nX -> Y\nS -> Y\n"), Err(TextError::Invalid(_))));
    }

    #[test]
    fn per_source_discrepancy_vertices() {
        let g = parse_graph("var X Y Z\nsnode T for a,b\nsnode U\nT -> X\nU -> Z\nX -> Y\n").unwrap();
        assert_eq!(g.discrepancies_for("a"), VertexSet::from_names(["T", "U"]));
        assert_eq!(g.discrepancies_for("c"), VertexSet::from_names(["U"]));
        assert_eq!(parse_graph(&print_graph(&g)).unwrap(), g);
    }

    #[test]
    fn source_lines() {
        let g = parse_graph("var X Y Z W\nselect S\nX -> Y\nZ -> S\n").unwrap();
        let cat = parse_sources("obs selected\nmarginal Z,W\nexp X domain=b measured=Y\nexp X,Z source all-subsets\n", &g).unwrap();
        assert_eq!(cat.sources.len(), 4);
        assert!(cat.sources[0].selected);
        assert_eq!(cat.sources[1].measured, VertexSet::from_names(["W", "Z"]));
        assert_eq!(cat.sources[2].domain, Domain::source("b"));
        assert_eq!(cat.sources[3].domain, Domain::source(""));
        assert_eq!(parse_sources(&print_sources(&cat, &g), &g).unwrap(), cat);
        assert!(matches!(parse_sources("exp Q\n", &g), Err(TextError::Parse { line: 1, .. })));
        assert!(matches!(parse_sources("obs bogus\n", &g), Err(TextError::Parse { line: 1, .. })));
    }
}
