//! Grammar-driven mutational fuzzing for compiler optimizations.
//!
//! Programs are parsed with a runtime grammar, translated into construct
//! trees via annotations, mined for composition styles, and rebuilt inside
//! other programs by style-aware mutators.

pub mod builtin;
pub mod campaign;
pub mod cli;
pub mod constructs;
pub mod grammar;
pub mod mutators;
pub mod program;
pub mod styles;
