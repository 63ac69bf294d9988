use criterion::{black_box, criterion_group, criterion_main, Criterion};

use dofusion_bench::solve;
use dofusion_core::engine::{derive, SearchBudget};
use dofusion_core::fixtures::{by_name, D_SEPARATION_EXAMPLE};
use dofusion_core::graph::VertexSet;
use dofusion_core::oracle::{random_scm, Sizes};
use dofusion_core::separation::{d_separated, implied_independencies};
use dofusion_core::text::parse_graph;

fn separation(c: &mut Criterion) {
    let g = by_name("backdoor_large").unwrap().graph();
    let (x, y) = (VertexSet::singleton("X"), VertexSet::singleton("Y"));
    let z = VertexSet::from_names(["W2", "W3"]);
    c.bench_function("d_separated/backdoor_large", |b| b.iter(|| d_separated(black_box(&g), &x, &y, &z).unwrap()));
    let small = parse_graph(D_SEPARATION_EXAMPLE).unwrap();
    c.bench_function("implied_independencies/collider", |b| b.iter(|| implied_independencies(black_box(&small), 2)));
}

fn facades(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    for name in ["backdoor_small", "frontdoor_conditional", "surrogate_frontdoor", "selection_do_calculus", "meta_transport"] {
        let f = by_name(name).unwrap();
        group.bench_function(name, |b| b.iter(|| solve(black_box(f))));
    }
    group.finish();
}

fn search(c: &mut Criterion) {
    let f = by_name("meta_transport").unwrap();
    let (g, q, cat) = (f.graph(), f.query(), f.catalog());
    let mut group = c.benchmark_group("search");
    group.sample_size(10);
    group.bench_function("meta_transport", |b| b.iter(|| derive(&q, &g, &cat, &SearchBudget::default()).unwrap()));
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let g = by_name("frontdoor_conditional").unwrap().graph();
    let m = random_scm(&g, &Sizes::default(), 1);
    c.bench_function("joint/frontdoor_conditional", |b| b.iter(|| black_box(&m).joint().unwrap()));
    c.bench_function("random_scm/frontdoor_conditional", |b| b.iter(|| random_scm(black_box(&g), &Sizes::default(), 1)));
}

criterion_group!(benches, separation, facades, search, oracle);
criterion_main!(benches);
