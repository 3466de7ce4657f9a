//! Seeded generators and exact oracles for the benchmark families: linear
//! objective under a cardinality constraint (with optional extra
//! constraints or a quadratic constraint), dense quadratic objective under
//! a cardinality constraint, and unit commitment.
//!
//! Every generator is a pure function of its spec and certifies at
//! generation time that the model has a feasible point.

mod blp;
mod bqp;
mod random;
mod uc;

pub use blp::{
    blp_oracle, blp_quadratic_oracle, blp_var, blp_weights, gen_blp, gen_blp_quadratic_constraint, BlpSpec,
    MAX_EXTRA_CONSTRAINTS,
};
pub use bqp::{bqp_oracle, bqp_weights, gen_bqp, BqpSpec};
pub use random::{ferromagnetic_chain, random_qubo, random_spin_glass};
pub use uc::{
    evaluate_commitment, gen_unit_commitment, uc_commit, uc_oracle, uc_power, uc_startup, Generator,
    InitialState, UcSchedule, UcSpec, DEFAULT_PRIOR_DOWNTIME, UC_ORACLE_MAX_GENERATORS,
    UC_ORACLE_MAX_PERIODS,
};
