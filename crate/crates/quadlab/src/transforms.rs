//! The two fundamental moves: morphing (same angles, new shape/size) and
//! recutting (cut along a diagonal, reverse one triangle), plus the
//! recut-morph-recut composition that perturbs one pair of opposite angles.
//!
//! In arc coordinates a morph is the shift (s₁+t, s₂−t, s₃+t, s₄−t) and a
//! recut is an adjacent-arc swap, so both are exact grid arithmetic. Morphs
//! leave every adjacent pair sum — hence every interior angle — bit-identical.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quad::{snap_arc, CircleQuad};
use crate::tol;

/// Which diagonal to cut along: P₁P₃ or P₂P₄.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiagonalChoice {
    D13,
    D24,
}

/// Which pair of opposite interior angles to perturb.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OppositePair {
    P1P3,
    P2P4,
}

/// Arc shift and diameter multiplier for one morph.
#[derive(Clone, Copy, Debug)]
pub struct MorphParams {
    pub t: f64,
    pub scale: f64,
}

impl MorphParams {
    /// Pure arc shift, no rescaling.
    pub fn shift(t: f64) -> Self {
        MorphParams { t, scale: 1.0 }
    }
}

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("morph parameter {t} outside feasible interval [{lo}, {hi}]")]
    InfeasibleMorph { t: f64, lo: f64, hi: f64 },
    #[error("chosen diagonal has zero length")]
    DegenerateDiagonal,
    #[error("morph scale must be positive and finite, got {0}")]
    InvalidScale(f64),
}

/// Feasible interval for the morph parameter: t ∈ [max(−s₁,−s₃), min(s₂,s₄)].
/// Endpoints produce marked triangles.
pub fn feasible_interval(q: &CircleQuad) -> (f64, f64) {
    let s = q.arcs();
    ((-s[0]).max(-s[2]), s[1].min(s[3]))
}

/// Replace the quad by one with the same interior angles: arcs become
/// (s₁+t, s₂−t, s₃+t, s₄−t) and the diameter is multiplied by `scale`.
///
/// `t` is snapped to the arc grid and clamped to the exact feasible
/// endpoints; values beyond the interval by more than [`tol::MORPH_SLACK`]
/// are rejected.
pub fn morph(q: &CircleQuad, params: &MorphParams) -> Result<CircleQuad, TransformError> {
    if params.scale <= 0.0 || !params.scale.is_finite() {
        return Err(TransformError::InvalidScale(params.scale));
    }
    let (lo, hi) = feasible_interval(q);
    if params.t < lo - tol::MORPH_SLACK || params.t > hi + tol::MORPH_SLACK {
        return Err(TransformError::InfeasibleMorph {
            t: params.t,
            lo,
            hi,
        });
    }
    let t = snap_arc(params.t).clamp(lo, hi);
    let s = q.arcs();
    let arcs = [s[0] + t, s[1] - t, s[2] + t, s[3] - t];
    CircleQuad::new(q.diameter() * params.scale, q.base_angle(), arcs)
        .map_err(|_| TransformError::InfeasibleMorph { t, lo, hi })
}

/// Cut along a diagonal and reverse one triangle. D13 reflects P₂ (swapping
/// arcs s₁, s₂); D24 reflects P₃ (swapping s₂, s₃). Reflecting the other
/// triangle would give a congruent, relabeled quad. Side lengths are
/// permuted as a multiset; |A|, B², C, D and the circle are preserved.
pub fn recut(q: &CircleQuad, diag: DiagonalChoice) -> Result<CircleQuad, TransformError> {
    let s = q.arcs();
    let subtended = match diag {
        DiagonalChoice::D13 => s[0] + s[1],
        DiagonalChoice::D24 => s[1] + s[2],
    };
    // Unreachable for valid quads (it would need two zero arcs), but the
    // contract names it.
    if subtended == 0.0 || subtended == TAU {
        return Err(TransformError::DegenerateDiagonal);
    }
    let arcs = match diag {
        DiagonalChoice::D13 => [s[1], s[0], s[2], s[3]],
        DiagonalChoice::D24 => [s[0], s[2], s[1], s[3]],
    };
    Ok(CircleQuad::new(q.diameter(), q.base_angle(), arcs)
        .expect("swapping arcs preserves validity"))
}

/// Morph so the diagonal intersection angle gets as close to π/2 as the
/// feasible interval allows. Returns the morphed quad and the applied t.
/// A clamped result is a marked triangle.
pub fn morph_to_max_diag_angle(q: &CircleQuad) -> (CircleQuad, f64) {
    let s = q.arcs();
    let (lo, hi) = feasible_interval(q);
    let target = (PI - s[0] - s[2]) / 2.0;
    let t = snap_arc(target).clamp(lo, hi);
    let morphed = morph(q, &MorphParams::shift(t)).expect("clamped parameter is always feasible");
    (morphed, t)
}

/// Recut, morph by δ, recut again along the same diagonal. For `P1P3` the
/// net arc change is (−δ, +δ, +δ, −δ): the angles at P₁ and P₃ move by
/// (+δ, −δ) while the other pair is untouched (bit-exactly, since their
/// pair sums are not involved). `P2P4` nets (+δ, +δ, −δ, −δ).
pub fn perturb_opposite_angles(
    q: &CircleQuad,
    pair: OppositePair,
    delta: f64,
) -> Result<CircleQuad, TransformError> {
    let diag = match pair {
        OppositePair::P1P3 => DiagonalChoice::D13,
        OppositePair::P2P4 => DiagonalChoice::D24,
    };
    let cut = recut(q, diag)?;
    let morphed = morph(&cut, &MorphParams::shift(delta))?;
    recut(&morphed, diag)
}
