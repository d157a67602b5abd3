//! A small probabilistic language over random unsigned integers.
//!
//! ```text
//! program  := stmt* "return" expr ("," expr)*
//! stmt     := "let" ID "=" expr | "let" ID "~" "Beta" "(" INT "," INT ")"
//!           | ID "=" expr | "observe" "(" expr ")"
//!           | "if" expr block ("else" (block | if-stmt))?
//!           | "for" ID "in" INT ".." INT block
//! expr     := flip(p) | discrete([p, ...]) | uniform(lo, hi) | beta_flip(ID)
//!           | "if" expr "then" expr "else" expr | [expr, ...] | ID[static]
//!           | int(expr, W) | expr op expr | "!" expr | INT | true | false | ID
//! op       := || && == != < <= > >= + - * / %     (loosest to tightest)
//! ```
//!
//! Probabilities may be written as fractions such as `0.2/0.9`. Integers are
//! unsigned; `+` widens by one bit, `*` to the sum of the widths, `-` wraps at
//! the wider operand, and `/` and `%` keep the dividend's width with `x / 0 = 0`
//! and `x % 0 = x`.

pub mod ast;
pub mod compile;
pub mod lexer;
pub mod parser;
pub mod query;
pub mod unroll;

pub use ast::Program;
pub use compile::{compile, compile_in, Compiled, Encoding, Output, MAX_WIDTH};
pub use parser::parse;
pub use query::{query, run_program, Answer, RunResult};
pub use unroll::unroll;
