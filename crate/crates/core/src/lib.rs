//! Exact-arithmetic engine for moment and differential invariants of planar
//! and volumetric densities under affine maps, plus a numerical lab that
//! verifies the invariance laws and screens candidates for projective
//! invariance.
//!
//! The pipeline: a [`generators::PISpec`] names a product of generating
//! functions over indexed points; [`generators`] expands it into an exact
//! coordinate polynomial; [`translator`] turns the expansion into a moment
//! expression and, symbol for symbol, into the matching differential one;
//! [`momentlab`] and [`difflab`] evaluate both sides on concrete images and
//! fields; [`verifier`] samples transform groups and reports whether the
//! claimed invariance law holds.

pub mod algebra;
pub mod catalog;
pub mod difflab;
pub mod generators;
pub mod maps;
pub mod momentlab;
pub mod translator;
pub mod verifier;

pub use algebra::{CoordMonomial, CoordPolynomial, Rational};
pub use difflab::{JetPoint, ScalarField};
pub use generators::{GenFactor, PISpec};
pub use maps::{AffineMap, ProjectiveMap, RationalAffineMap};
pub use momentlab::{PointMass, PointMassImage};
pub use translator::{ExprForm, InvariantExpr};
pub use verifier::{TransformGroup, VerificationReport, Verdict, VerifyConfig};
