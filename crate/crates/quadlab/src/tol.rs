//! Central registry of numerical tolerances.
//!
//! Every threshold used by the library and the CLI lives here, so a sweep can
//! override one by name and the test suite pins the same values the runtime
//! uses. Exact-mode checks never consult these; they compare rationals.

/// Relative tolerance for generic approximate-mode comparisons.
pub const REL_TOL: f64 = 1e-12;

/// Absolute floor under which relative comparisons switch to absolute.
pub const ABS_FLOOR: f64 = 1e-15;

/// Normalized cross product below which two directions count as parallel.
pub const PARALLEL_TOL: f64 = 1e-12;

/// Allowed deviation of a "unit" direction from length one.
pub const UNIT_NORM_TOL: f64 = 1e-14;

/// Allowed deviation of an arc 4-tuple from summing to 2π before rejection.
pub const ARC_SUM_TOL: f64 = 1e-10;

/// Slack allowed on a morph parameter before it is rejected as infeasible.
pub const MORPH_SLACK: f64 = 1e-12;

/// Default tolerance for square detection (max per-arc deviation from π/2).
pub const SQUARE_TOL: f64 = 1e-9;

/// Tolerance on angle sums for the cyclicity certificate.
pub const CYCLIC_CERT_TOL: f64 = 1e-9;

/// Required closeness of the diagonal angle to π/2 for the perpendicular check.
pub const PERP_PRE_TOL: f64 = 1e-9;

/// Pass threshold for the perpendicular-diagonal identity residual.
pub const PERP_RESIDUAL_TOL: f64 = 1e-10;

/// Pass threshold for |C - 1| on random convex quads.
pub const C_IDENTITY_TOL: f64 = 1e-10;

/// Pass threshold for C preservation across a recut.
pub const RECUT_C_TOL: f64 = 1e-12;

/// Pass threshold for C preservation across a morph.
pub const MORPH_C_TOL: f64 = 1e-10;

/// Pass threshold for the triangle-degeneration identity (relative).
pub const HERON_TOL: f64 = 1e-10;

/// Pass threshold for chord-length consistency between arcs and embedding.
pub const CHORD_TOL: f64 = 1e-12;

/// Slack subtracted from the 3/2 growth-factor assertion on φ ratios.
pub const PHI_RATIO_SLACK: f64 = 1e-9;

/// Approximate-mode fiber fits: off-diagonal coefficients must stay below
/// this fraction of |κ| (resp. |μ|).
pub const FIBER_OFFDIAG_REL: f64 = 1e-9;

/// Vertex-wise tolerance (relative to scale) for fiber round trips.
pub const ROUNDTRIP_TOL: f64 = 1e-9;

/// Slope magnitudes outside [MIN, MAX] count as degenerate after rotation.
pub const SLOPE_MIN: f64 = 1e-12;
/// See [`SLOPE_MIN`].
pub const SLOPE_MAX: f64 = 1e12;

/// Guard denominator when normalizing by B² near zero.
pub const B2_GUARD: f64 = 1e-300;

/// Names accepted by `--tol name=value` overrides, with their defaults.
pub const OVERRIDABLE: &[(&str, f64)] = &[
    ("brahmagupta_c", C_IDENTITY_TOL),
    ("recut_c", RECUT_C_TOL),
    ("morph_c", MORPH_C_TOL),
    ("heron", HERON_TOL),
    ("chord", CHORD_TOL),
    ("square", SQUARE_TOL),
    ("perp_residual", PERP_RESIDUAL_TOL),
    ("phi_ratio_slack", PHI_RATIO_SLACK),
    ("fiber_offdiag", FIBER_OFFDIAG_REL),
];

/// Default tolerance for a named check, if it is overridable.
pub fn default_for(name: &str) -> Option<f64> {
    OVERRIDABLE
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, v)| *v)
}

/// `|a - b| <= rel * max(|a|, |b|)`, with an absolute floor for tiny values.
pub fn approx_eq(a: f64, b: f64, rel: f64) -> bool {
    let diff = (a - b).abs();
    diff <= ABS_FLOOR || diff <= rel * a.abs().max(b.abs())
}
