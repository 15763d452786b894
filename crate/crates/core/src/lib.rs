//! Exact computations on model Fano families over a curve.
//!
//! The models are blow-ups `X = Bl_{C_1..C_k} P(V) → P¹` of a split projective
//! bundle along disjoint sections. Everything here is exact rational
//! arithmetic; the only floating-point output is the normal-approximation
//! estimate in [`hn`], which is labeled as approximate.
//!
//! Module map:
//! - [`numeric`]: rationals, interpolation, binomial-transform solving
//! - [`family`]: family descriptors and divisor classes
//! - [`intersect`]: top intersection numbers, CM degree, nef witnesses
//! - [`sections`]: monomial section counts, Hilbert data, volume, Knudsen–Mumford data
//! - [`hn`]: Harder–Narasimhan slope spectra of tensor and symmetric powers
//! - [`delta`]: delta/alpha invariants on projective spaces and threshold arithmetic
//! - [`acceptance`]: the end-to-end check suite behind `reproduce-paper`

pub mod acceptance;
pub mod delta;
pub mod error;
pub mod family;
pub mod hn;
pub mod intersect;
pub mod numeric;
pub mod sections;

pub use error::{Error, Result};
pub use numeric::{Polynomial, Rational};
