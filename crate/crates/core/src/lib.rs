//! Ramification data of wild automorphisms of local fields of
//! characteristic `p`.
//!
//! A continuous automorphism σ of `k((t))` that fixes the residue field
//! `k` and satisfies `v(σ(t) − t) ≥ 2` is *wild*.  Its ramification data
//! is the sequence `i_n(σ) = v(σ^{pⁿ}(t) − t) − 1`, the break structure
//! of the closed subgroup it generates, and the asymptotic growth rate
//! (the *height*) of `i_n`.  This crate computes such data three ways:
//!
//! * directly, by composing truncated power series ([`nottingham`]);
//! * exactly, from break sequences and Hasse–Herbrand functions
//!   ([`breaks`], [`exactmath`]);
//! * in closed form, for the families of automorphisms built by
//!   [`constructions`].
//!
//! The [`heights`] module estimates growth rates from finite data, and
//! [`oracle`] cross-validates the three routes against each other on
//! randomized inputs.

pub mod breaks;
pub mod constructions;
pub mod exactmath;
pub mod heights;
pub mod nottingham;
pub mod oracle;

pub use breaks::{IndexFunction, LowerBreaks, NuSequence, UpperBreaks};
pub use constructions::ConstructionReport;
pub use exactmath::{BigInt, BigRational, CertifiedReal, Interval};
pub use heights::HeightReport;
pub use nottingham::{FieldElement, FieldSpec, RamResult, UnitSeries, WildSeries};
