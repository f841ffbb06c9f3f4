//! Modeling toolkit for multi-stage stochastic programs.
//!
//! A model is written once, free of any stage or scenario indexing, and the
//! stage structure is attached separately through `deterministic`/`stochastic`
//! annotations. Pairing an annotated model with a scenario tree yields a
//! deterministic-equivalent LP which the built-in simplex solver handles at
//! desk scale.
//!
//! The pipeline is:
//!
//! 1. [`dsl`]: tokenize, parse, and pretty-print model text (`.msm` files),
//!    or construct models programmatically with [`builder::ModelBuilder`].
//! 2. [`validate`]: resolve stage annotations against a horizon and check
//!    the model is well-formed.
//! 3. [`tree`]: load and query scenario trees (`.tree` files).
//! 4. [`expand`]: expand a validated model over a tree into an LP, either
//!    node-indexed or scenario-indexed.
//! 5. [`lp`]: solve the LP, verify solutions, and export LP text files.
//!
//! [`oracle`] holds independent brute-force checks (a dynamic-programming
//! value recursion for the purchase model family and exhaustive vertex
//! enumeration for tiny LPs) used to validate the main pipeline.

pub mod builder;
pub mod dsl;
pub mod expand;
pub mod lp;
pub mod oracle;
pub mod stage;
pub mod tree;
pub mod validate;

pub use dsl::ast::{LinExpr, MetaModel, Relop, StageSetExpr};
pub use expand::{expand_node_form, expand_scenario_form, ExpandedModel};
pub use lp::{check_solution, solve, LpProblem, LpSolution, Status};
pub use stage::StageSet;
pub use tree::ScenarioTree;
pub use validate::{validate_model, ValidatedModel};
