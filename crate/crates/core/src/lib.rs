//! Finite-truncation solvers for Ramsey's theorem on the full binary tree.
//!
//! The crate is organised bottom-up:
//!
//! * [`tree`] holds nodes of `2^{<N}`, chains of comparable nodes and
//!   order-preserving embeddings of finite full binary trees.
//! * [`coloring`] holds chain colorings and the induced single-node coloring
//!   used by the exponent-reduction step, together with its value codes.
//! * [`reduction`] performs one exponent-reduction step.
//! * [`solver`] iterates reductions, solves the single-node base case and
//!   pulls the witness back to the original tree.
//! * [`bridge`] solves the classical Ramsey problem through the tree solver.
//! * [`jump`] is a step-bounded oracle register machine with stage
//!   approximations of iterated jumps.

pub mod bridge;
pub mod coloring;
mod error;
pub mod jump;
pub mod mix;
pub mod reduction;
pub mod solver;
pub mod tree;

pub use bridge::{
    brute_force_rt, extract_homogeneous_set, lift_length_coloring, rt_solve, IntTupleColoring,
    RtSolution,
};
pub use coloring::{
    code_less, induced_value, AncestorRecord, ChainColoring, ColoringSource, FinsetCode,
};
pub use error::{Error, Exhaustion, Result};
pub use jump::{
    check_reduction_certificate, iter_jump_stage, jump_stage, ledger_jump_cost, pair, step_run,
    unpair, CertificateVerdict, Instruction, JumpStageSet, MachineProgram, OracleApprox, RunOutcome,
};
pub use reduction::{
    reduce_step, select_color_and_root, standard_subtree_successors, ReduceOutput, ReducePolicy,
    ReductionLedger, Region, StageChoice, QuantifierClass,
};
pub use solver::{
    brute_force_tt, tt1_solve, tt_solve, verify_monochromatic, SolveConfig, SolveResult,
    StageDepthPolicy,
};
pub use tree::{
    compose_embeddings, enumerate_chains, verify_embedding, BitString, Chain, Embedding,
    TruncatedTree,
};
