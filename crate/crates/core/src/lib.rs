pub mod criteria;
pub mod engine;
pub mod estimand;
pub mod fixtures;
pub mod graph;
pub mod oracle;
pub mod separation;
pub mod text;

pub use criteria::CriteriaError;
pub use engine::{derive, Derivation, EngineError, Outcome, SearchBudget};
pub use estimand::{Domain, Estimand, ProbTerm, Query, Source, SourceCatalog, Symbol};
pub use graph::{Graph, RawGraph, VertexSet};
