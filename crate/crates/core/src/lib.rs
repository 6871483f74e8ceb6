//! Band projections on spaces of regular operators over finite atomic
//! lattices.
//!
//! The underlying lattice is `R^n` with the coordinatewise order, so a
//! regular operator is any `n × n` matrix and the operator order is entrywise.
//! The crate builds inner band projections `𝒫_Γ` from disjoint coordinate
//! blocks and a relation `Γ` between them ([`inner`]), decides whether an
//! arbitrary linear map on matrices is a band projection and recovers its
//! relation ([`detect`]), and classifies multiplication operators
//! `T ↦ ATB` ([`mult`]). [`dyadic`] simulates non-atomic behaviour by dyadic
//! refinement and [`fuzz`] runs every algebraic law as a seeded property
//! check.
//!
//! All decision procedures are exact over [`Rational`]; [`Float`] is
//! available for cross-checks.

pub mod detect;
pub mod dyadic;
pub mod error;
pub mod fuzz;
pub mod inner;
pub mod io;
pub mod lattice;
pub mod mult;
pub mod operator;
pub mod rng;
pub mod scalar;

pub use detect::{detect_band_projection, is_positive_super, super_apply, Detection, Stage, SuperOperator};
pub use error::{Error, Result};
pub use inner::{BlockFamily, IndexRelation, InnerProjection, Label};
pub use lattice::{is_band_projection_x, BandProjectionX, LatticeVector};
pub use mult::{brute_force_mult_band_check, classify, mult_apply, MultClassification, SignCase};
pub use operator::{
    elementary, is_atom_dominated, op_abs, op_join, op_meet, regular_norm, rk_oracle_meet, ElementaryOperator, Norm,
    RegularOperator,
};
pub use scalar::{q, Float, Rational, Scalar, ScalarMode};
