//! Typed block programs for evolutionary algorithms.

pub mod block;
pub mod codegen;
pub mod datalog;
pub mod ea;
pub mod examples;
pub mod fitness;
pub mod interp;
pub mod numfmt;
pub mod rng;
pub mod runner;
