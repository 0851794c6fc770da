//! Dyadic and singular-integral operators on weighted `L²`.
//!
//! Operators are dense matrices in the orthonormal basis of finest cells of a
//! truncation window. Weights act by conjugation `λ^{1/2} T μ^{-1/2}`, so every
//! Schatten quantity is computed on unweighted `L²`.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dyadic;
pub mod error;
pub mod quadrature;
pub mod weights;
pub mod symbols;
pub mod besov;
pub mod format;
pub mod operators;
pub mod schatten;
pub mod lab;
