//! quadlab: an executable verification lab for the area identities of
//! cyclic quadrilaterals.
//!
//! The library represents (possibly degenerate) cyclic quads in arc
//! coordinates, implements the two shape-preserving moves — morphing and
//! recutting — certifies the fiber polynomial identities A ∝ xy and
//! B² ∝ (xy)² in exact rational arithmetic, and runs the constructive
//! reduction joining any cyclic quad to a square while checking the
//! quantitative growth of the diagonal potential φ along the way.
//!
//! Modules
//! - [`scalar`]: dual-mode numbers (f64 / exact rational).
//! - [`geom`]: points, lines, signed distance, signed area.
//! - [`quad`]: arc-coordinate cyclic quads and derived metrics.
//! - [`transforms`]: morph, recut, opposite-angle perturbation.
//! - [`interp`]: exact and least-squares bivariate polynomial fitting.
//! - [`fiber`]: the four-line configuration space L(ρ,σ) and its certificates.
//! - [`reduction`]: the morph/recut reduction to a square, with traces.
//! - [`svg`]: minimal renderer for trace frames.
//! - [`cli`]: the `quadlab` command-line surface.

pub mod cli;
pub mod fiber;
pub mod geom;
pub mod interp;
pub mod quad;
pub mod reduction;
pub mod scalar;
pub mod svg;
pub mod tol;
pub mod transforms;

pub use fiber::{Fiber, FiberPoint, FiberReport, FiberSlopes, SignedSides};
pub use geom::{line_intersection, signed_area, signed_distance, Dir2, Line, PlanarQuad, Point2};
pub use quad::{snap_arc, CircleQuad, QuadMetrics};
pub use reduction::{phi, reduce_to_square, ReductionTrace};
pub use scalar::{Mode, Scalar};
pub use transforms::{morph, recut, DiagonalChoice, MorphParams, OppositePair};
