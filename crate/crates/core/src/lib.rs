//! Multi-step deductive reasoning by translating natural-language facts and
//! rules into Datalog programs, repairing them through semantic and syntax
//! feedback loops, and executing them on an embedded engine.

pub mod bench;
pub mod cwa;
pub mod dsl;
pub mod llm;
pub mod logic;
pub mod nl;
pub mod prompt;
pub mod pipeline;
