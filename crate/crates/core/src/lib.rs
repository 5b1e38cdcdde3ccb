//! Evolutionary generation of diverse, behavior-preserving variants of small
//! programs written in a toy x86-flavored assembly dialect.
//!
//! The pipeline: parse a seed ([`asm`]), rewrite it with semantics-preserving
//! transforms ([`transforms`]), score populations by statement-set similarity
//! ([`similarity`]), evolve them ([`evolve`]), measure evasion against
//! simulated signature scanners ([`scanner`]) and test the resulting
//! distributions ([`stats`]).

pub mod asm;
pub mod cli;
pub mod evolve;
pub mod experiment;
pub mod scanner;
pub mod similarity;
pub mod stats;
pub mod transforms;
