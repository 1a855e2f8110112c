//! Subcommand implementations.

pub mod ablate;
pub mod eval;
pub mod extract;
pub mod train;
pub mod verify;
