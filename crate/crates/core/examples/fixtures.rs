//! Runs every bundled example model through its task and prints the result.
//!
//!     cargo run --release --example fixtures [name]

use std::time::Instant;

use dofusion_core::engine::{identify, recover, transport, SearchBudget};
use dofusion_core::estimand::{render_in, Format};
use dofusion_core::fixtures::{Task, ALL};

fn main() {
    let only = std::env::args().nth(1);
    for f in ALL.iter().filter(|f| only.as_deref().is_none_or(|o| o == f.name)) {
        let (g, q, cat) = (f.graph(), f.query(), f.catalog());
        let budget = SearchBudget::default();
        let start = Instant::now();
        let report = match f.task {
            Task::Identify => identify(&q, &g, &cat, &budget),
            Task::Recover => recover(&q, &g, &cat, &budget),
            Task::Transport => transport(&q, &g, &cat, &budget),
        };
        let secs = start.elapsed().as_secs_f64();
        match report {
            Ok(r) => {
                let result = match r.outcome.derivation().and_then(|d| d.final_estimand(&g).ok()) {
                    Some(e) => render_in(&e, Format::Text, &g),
                    None => r.outcome.status().to_string(),
                };
                println!("{:26} {:7.2}s {:?}\n    {}", f.name, secs, r.method, result);
            }
            Err(e) => println!("{:26} error: {e}", f.name),
        }
    }
}
