//! Constrained quadratic models, penalty compilation to QUBO/Ising form,
//! annealing-style solvers and a hybrid decompose-sample-merge orchestrator.

pub mod bench;
pub mod compile;
mod continuous;
pub mod error;
pub mod hybrid;
pub mod model;
pub mod problems;
pub mod solvers;
pub mod topology;

pub use error::{Error, Result};

#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/models.md")]
    pub mod models {}
    #[doc = include_str!("../../../book/src/compiling.md")]
    pub mod compiling {}
    #[doc = include_str!("../../../book/src/solvers.md")]
    pub mod solvers {}
    #[doc = include_str!("../../../book/src/hybrid.md")]
    pub mod hybrid {}
    #[doc = include_str!("../../../book/src/problems.md")]
    pub mod problems {}
    #[doc = include_str!("../../../book/src/topology.md")]
    pub mod topology {}
    #[doc = include_str!("../../../book/src/benchmarks.md")]
    pub mod benchmarks {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
