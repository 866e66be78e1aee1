//! Energy-aware program transformation.
//!
//! A typed program is turned once into combinator terms, one (V, Σ, E) triple
//! per function, that are later evaluated against any hardware model set and
//! timing table. Recursive calls stay symbolic: a call site holds a `Subst`
//! node that unfolds the callee's judgment one step each time it is reached.

mod build;
mod eval;
mod print;
mod term;

pub use build::*;
pub use eval::*;
pub use print::print_symbolic;
pub use term::*;
