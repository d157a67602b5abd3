//! Discrete probabilistic programming over binary decision diagrams.
//!
//! Integers are represented bit by bit as formulas over weighted Boolean
//! variables. Inference is weighted model counting on the resulting ROBDD.

pub mod arith;
pub mod bdd;
pub mod corpus;
pub mod encoding;
pub mod error;
pub mod fuzz;
pub mod inference;
pub mod lang;
pub mod oracle;

pub use bdd::{Manager, Node, NodeRef, WeightedVar};
pub use encoding::{bitwise_int, categ_int, const_int, uniform_int, ProbInt, ProbVector};
pub use error::{Error, Result};
pub use inference::{expectation, marginal_distribution, prob, Distribution, Evidence};
pub use lang::{compile, parse, run_program, Answer, Encoding};
