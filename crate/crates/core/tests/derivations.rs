//! Engine output over the fixture set: every derivation replays, survives
//! serialization, is estimable from its catalogue and is exact on the oracle.

mod common;

use common::{max_error, premise_perturbations, worked, TOL};
use dofusion_core::engine::{derive, identify, recover, transport, verify, Derivation, EngineError, Outcome, Report, SearchBudget};
use dofusion_core::estimand::estimable;
use dofusion_core::fixtures::{by_name, Expect, Fixture, Task, ALL};

fn run(f: &Fixture) -> Report {
    let (g, q, cat) = (f.graph(), f.query(), f.catalog());
    let budget = SearchBudget::default();
    match f.task {
        Task::Identify => identify(&q, &g, &cat, &budget),
        Task::Recover => recover(&q, &g, &cat, &budget),
        Task::Transport => transport(&q, &g, &cat, &budget),
    }
    .unwrap()
}

#[test]
fn fixture_derivations_are_sound() {
    for f in ALL {
        let r = run(f);
        let g = f.graph();
        match (f.expect, r.outcome.derivation()) {
            (Expect::NotDerived, None) => continue,
            (Expect::Derived, Some(d)) => {
                assert!(verify(d, &g).ok, "{}: {:?}", f.name, verify(d, &g));
                let e = d.final_estimand(&g).unwrap();
                assert!(estimable(&e, &f.catalog()).estimable, "{}", f.name);
                let err = max_error(f, &e);
                assert!(err < TOL, "{}: error {err:.3e}", f.name);
            }
            (want, got) => panic!("{}: expected {want:?}, got {got:?}", f.name),
        }
    }
}

#[test]
fn derivations_round_trip_through_json() {
    for f in ALL {
        let Some(d) = run(f).outcome.derivation().cloned() else { continue };
        let back = Derivation::from_json(&d.to_json()).unwrap();
        assert_eq!(back.to_json(), d.to_json(), "{}", f.name);
        let g = f.graph();
        assert!(verify(&back, &g).ok, "{}", f.name);
        assert_eq!(back.final_estimand(&g).unwrap(), d.final_estimand(&g).unwrap());
    }
}

#[test]
fn shorter_transport_formula_equals_the_longer_one() {
    let f = by_name("transport_complex").unwrap();
    let g = f.graph();
    let ours = run(f).outcome.derivation().unwrap().final_estimand(&g).unwrap();
    assert!(max_error(f, &ours) < TOL);
    assert!(max_error(f, &f.golden().unwrap().unwrap()) < TOL);
}

#[test]
fn worked_derivations_verify_and_reject_perturbations() {
    for (name, g, d) in worked() {
        assert!(verify(&d, &g).ok, "{name}");
        let perturbed = premise_perturbations(&d, &g);
        assert!(!perturbed.is_empty(), "{name}");
        for (i, bad) in perturbed {
            let r = verify(&bad, &g);
            assert!(!r.ok, "{name}: step {i} accepted");
            assert_eq!(r.failed_step, Some(i), "{name}: {:?}", r.reason);
        }
    }
}

#[test]
fn tampered_records_are_caught() {
    let (_, g, d) = worked().into_iter().next().unwrap();
    let mut bad = d.clone();
    bad.steps[1].before = bad.steps[0].before.clone();
    assert_eq!(verify(&bad, &g).failed_step, Some(1));
    let mut bad = d.clone();
    bad.final_text = d.steps[0].before.clone();
    assert_eq!(verify(&bad, &g).failed_step, Some(d.steps.len()));
}

#[test]
fn search_alone_finds_adjustment() {
    let f = by_name("backdoor_small").unwrap();
    let g = f.graph();
    let outcome = derive(&f.query(), &g, &f.catalog(), &SearchBudget::default()).unwrap();
    let d = outcome.derivation().expect("derived");
    assert!(verify(d, &g).ok);
    assert!(max_error(f, &d.final_estimand(&g).unwrap()) < TOL);
}

#[test]
fn budgets_bound_the_search() {
    let f = by_name("meta_transport").unwrap();
    let tight = SearchBudget { max_states: 1, ..SearchBudget::default() };
    assert!(matches!(derive(&f.query(), &f.graph(), &f.catalog(), &tight).unwrap(), Outcome::NotDerivedWithinBudget { .. }));
    let zero = SearchBudget { max_steps: 0, ..SearchBudget::default() };
    assert_eq!(derive(&f.query(), &f.graph(), &f.catalog(), &zero), Err(EngineError::InvalidBudget));
}
