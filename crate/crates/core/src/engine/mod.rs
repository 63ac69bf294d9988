//! Derivation search, rewrite rules, proof objects and front doors.
pub mod derivation;
pub mod facade;
pub mod rules;
pub mod search;
pub mod templates;

pub use derivation::{verify, Builder, Derivation, RewriteStep, VerifyReport};
pub use facade::{identify, recover, transport, Method, Report};
pub use rules::{applicable_rule1, applicable_rule2, applicable_rule3, apply, Mutilation, Params, Premise, RewriteError, Rule};
pub use search::{derive, EngineError, Outcome, SearchBudget};
