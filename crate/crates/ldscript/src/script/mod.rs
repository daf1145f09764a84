//! The scripting language: syntax, static checking, and inference.

pub mod ast;
pub mod check;
pub mod infer;
mod lex;
pub mod parse;
pub mod print;

pub use ast::{Expr, ExprKind, Filter, FilterKind, GraphBlock, Query, Script, Span};
pub use check::check_script;
pub use infer::infer_select_types;
pub use parse::parse_script;
pub use print::print_script;
