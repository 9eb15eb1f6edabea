//! Weighted answer set programs: parsing, grounding, exact inference and compilation
//! into ASP with weak constraints or Markov logic.

pub mod asp;
pub mod engine;
pub mod frontends;
pub mod ground;
pub mod inference;
pub mod mln;
pub mod model;
pub mod parser;

use thiserror::Error;

pub use asp::AspError;
pub use engine::{Engine, EngineError, HardMode};
pub use frontends::FrontendError;
pub use ground::{ground, GroundError, GroundProgram};
pub use inference::{Distribution, Reasoner, WeightMode};
pub use mln::MlnError;
pub use model::{Atom, Interpretation, Literal, Negation, Program, Rule, Term, Weight};
pub use parser::{parse_evidence, parse_program, ParseError};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Ground(#[from] GroundError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Asp(#[from] AspError),
    #[error(transparent)]
    Mln(#[from] MlnError),
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error("no probabilistic stable models")]
    NoStableModels,
    #[error("evidence is inconsistent with the program")]
    InconsistentEvidence,
    #[error("evidence must not contain weighted rules")]
    WeightedEvidence,
}
