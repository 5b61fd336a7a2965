//! Additive Steiner 2-designs over finite fields.
//!
//! The crate builds the designs that come out of zero-sum difference families
//! in multiplicative subgroups of GF(q), verifies them (pair coverage,
//! additivity, resolutions, p-ranks, isomorphism), and runs the two
//! independent searches showing that the binary 2-analog of a (9,3,1)-design
//! admits no Singer cycle: a Kramer-Mesner exact-cover count and a search
//! for perfect covers by Fano-subplane orbits in the cyclic model of PG(2,8).

pub mod cover;
pub mod design;
pub mod family;
pub mod field;
pub mod pg28;
pub mod subspace;

pub use field::{roots_of_unity, FieldElement, FieldError, FieldSpec, FieldTable, UnityRoots};
pub use design::{verify_design, Design, DesignError, VerificationReport};
