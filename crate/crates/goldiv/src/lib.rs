//! Bit-exact workbench for Goldschmidt division.
//!
//! Three things live here, all built on exact arithmetic:
//!
//! * a simulator for the multiplicative division iteration under arbitrary
//!   per-stage wordlength and truncation choices, which records every
//!   truncation residue into an exact error ledger ([`engine`]);
//! * the parametric error model that splits the final error into an
//!   accumulative part (residue-driven, non-converging) and a convergent
//!   part (`-Q eps'^2`), with approximate and rigorous interval bounds per
//!   readout stage ([`bounds`]);
//! * verification machinery: bipartite reciprocal tables measured by
//!   exhaustive traversal ([`recip`]), an exact rational oracle with the
//!   strict correct-rounding margin `|error| < 2^-(n+1)` ([`oracle`]), and
//!   deterministic random/adversarial/exhaustive campaigns ([`campaign`]).
//!
//! Start from the runnable examples (`cargo run --release --example
//! single_division`) or the shipped configurations in [`presets`].

pub mod bounds;
pub mod campaign;
pub mod config;
pub mod engine;
pub mod exact;
pub mod fixedpoint;
pub mod oracle;
pub mod presets;
pub mod recip;
