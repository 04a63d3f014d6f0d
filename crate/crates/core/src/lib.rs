//! Sequent calculi for contraction-free substructural logics, a bounded
//! prover, translations between the calculi, and encodings into counter
//! machines with branching.

pub mod abvass;
pub mod calculi;
pub mod corpus;
pub mod crosscheck;
pub mod encoders;
pub mod formulas;
pub mod prover;
pub mod translate;
