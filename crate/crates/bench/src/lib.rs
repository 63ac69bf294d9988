//! Shared setup for the benchmarks.

use dofusion_core::engine::{identify, recover, transport, Report, SearchBudget};
use dofusion_core::fixtures::{Fixture, Task};

/// Runs a bundled example through the entry point its task names.
pub fn solve(f: &Fixture) -> Report {
    let (g, q, cat) = (f.graph(), f.query(), f.catalog());
    let budget = SearchBudget::default();
    match f.task {
        Task::Identify => identify(&q, &g, &cat, &budget),
        Task::Recover => recover(&q, &g, &cat, &budget),
        Task::Transport => transport(&q, &g, &cat, &budget),
    }
    .expect("bundled examples are well formed")
}
