//! Loop invariant inference from sampled program states.

pub mod frontend;
pub mod ir;
pub mod sexp;
pub mod smt;
pub mod learner;
pub mod relinfer;
pub mod sampler;
pub mod trace;
pub mod orchestrator;
