//! The SELECT subset used to express alignment needs: unary and binary
//! questions over a basic graph pattern.

mod eval;
mod query;

pub use eval::{evaluate, AnswerSet};
pub use query::{parse_query, AlignmentQuery, Arity, PatternTerm, QueryError, TriplePattern};
pub(crate) use query::patterns_by_var;
