//! Parsing, type checking and exact energy analysis of ECA programs against
//! finite-state hardware component models.
//!
//! A program is analyzed two ways: [`interp`] interprets it directly while
//! accumulating energy, and [`transform`] compiles it into value, state and
//! energy terms that are then evaluated. The two must agree exactly.

pub mod hw;
pub mod interp;
pub mod quantity;
pub mod runtime;
pub mod scenario;
pub mod syntax;
pub mod timing;
pub mod transform;
pub mod types;
pub mod value;
