//! Construction, verification and tracing of Beltrami fields, i.e. vector
//! fields parallel to their own curl.
//!
//! Fields are closed-form expression trees ([`expr`]) with exact
//! differentiation. [`frames`] turns orthogonal coordinate triples with two
//! equal scale factors into Beltrami fields, [`verify`] checks the
//! eigenvalue relation and its invariants, and [`flow`] integrates
//! streamlines while monitoring the two conserved quantities.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod expr;
pub mod fields;
pub mod flow;
pub mod frames;
pub mod guard;
pub mod output;
pub mod quad;
pub mod sampling;
pub mod spec;
pub mod vec3;
pub mod verify;

pub use expr::{ScalarExpr, Var};
pub use vec3::{Aabb, Vec3};
