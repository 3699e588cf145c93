//! The constructive reduction: morph so the diagonals get as perpendicular
//! as feasibility allows, recut along the longest diagonal, repeat until the
//! quad is a square. Every step is recorded in a trace together with the
//! diagonal potential φ = (d₁² + d₂²)/D², whose growth by a factor ≥ 3/2
//! per round (while φ ≤ 1) is the quantitative claim the trace checker
//! verifies. The Doyle perpendicular-diagonal identity check lives here too.

use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quad::CircleQuad;
use crate::tol;
use crate::transforms::{morph_to_max_diag_angle, recut, DiagonalChoice};

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error("no square reached within {rounds} rounds")]
    RoundLimitExceeded {
        rounds: u32,
        trace: Box<ReductionTrace>,
    },
    #[error("diagonals are not perpendicular: diag angle {0} differs from π/2 beyond tolerance")]
    NotPerpendicular(f64),
}

/// φ = sin²((s₁+s₂)/2) + sin²((s₂+s₃)/2): the squared diagonals over the
/// squared diameter, computed scale-free from the arcs alone.
pub fn phi(q: &CircleQuad) -> f64 {
    let s = q.arcs();
    let h1 = (s[0] + s[1]) / 2.0;
    let h2 = (s[1] + s[2]) / 2.0;
    h1.sin().powi(2) + h2.sin().powi(2)
}

/// D13 if d₁ ≥ d₂ (ties break to D13 for determinism), else D24.
pub fn longest_diagonal(q: &CircleQuad) -> DiagonalChoice {
    let s = q.arcs();
    let d1 = ((s[0] + s[1]) / 2.0).sin();
    let d2 = ((s[1] + s[2]) / 2.0).sin();
    if d1 >= d2 {
        DiagonalChoice::D13
    } else {
        DiagonalChoice::D24
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Morph,
    Recut,
}

/// One recorded step. φ and the diagonal angle are stored redundantly so a
/// reader can audit them against the quad.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReductionStep {
    pub kind: StepKind,
    #[serde(rename = "t", skip_serializing_if = "Option::is_none", default)]
    pub morph_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub diagonal: Option<DiagonalChoice>,
    pub quad: CircleQuad,
    pub phi: f64,
    pub diag_angle: f64,
    pub marked_triangle: bool,
}

impl ReductionStep {
    fn morph(t: f64, quad: &CircleQuad) -> Self {
        ReductionStep {
            kind: StepKind::Morph,
            morph_t: Some(t),
            diagonal: None,
            phi: phi(quad),
            diag_angle: diag_angle(quad),
            marked_triangle: quad.is_marked_triangle(),
            quad: quad.clone(),
        }
    }

    fn recut(diag: DiagonalChoice, quad: &CircleQuad) -> Self {
        ReductionStep {
            kind: StepKind::Recut,
            morph_t: None,
            diagonal: Some(diag),
            phi: phi(quad),
            diag_angle: diag_angle(quad),
            marked_triangle: quad.is_marked_triangle(),
            quad: quad.clone(),
        }
    }
}

fn diag_angle(q: &CircleQuad) -> f64 {
    let s = q.arcs();
    (s[0] + s[2]) / 2.0
}

/// Full record of one reduction run. All quads carry diameter 1: φ and the
/// square criterion are scale-invariant, so the diameter is normalized away
/// at the start.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReductionTrace {
    pub start: CircleQuad,
    pub steps: Vec<ReductionStep>,
    pub phi_ratios: Vec<f64>,
    pub terminated: bool,
}

impl ReductionTrace {
    /// Number of completed morph+recut rounds (a terminal morph that lands
    /// on the square does not count).
    pub fn completed_rounds(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| s.kind == StepKind::Recut)
            .count()
    }

    pub fn final_quad(&self) -> &CircleQuad {
        self.steps.last().map(|s| &s.quad).unwrap_or(&self.start)
    }
}

/// Iterate rounds of (morph to max diagonal angle, recut along the longest
/// diagonal) until the quad is a square within `square_tol`, recording every
/// step and the per-round φ ratios.
pub fn reduce_to_square(
    start: &CircleQuad,
    max_rounds: u32,
    square_tol: f64,
) -> Result<ReductionTrace, ReductionError> {
    let mut q = CircleQuad::new(1.0, start.base_angle(), start.arcs())
        .expect("renormalizing the diameter preserves validity");
    let start_quad = q.clone();
    let mut steps = Vec::new();
    let mut phi_ratios = Vec::new();
    let mut prev_phi = phi(&q);
    let mut terminated = q.is_square(square_tol);
    let mut round = 0;
    while !terminated && round < max_rounds {
        round += 1;
        let (morphed, t) = morph_to_max_diag_angle(&q);
        steps.push(ReductionStep::morph(t, &morphed));
        q = morphed;
        if q.is_square(square_tol) {
            terminated = true;
            break;
        }
        let diag = longest_diagonal(&q);
        let cut = recut(&q, diag).expect("valid quads have non-degenerate diagonals");
        steps.push(ReductionStep::recut(diag, &cut));
        q = cut;
        let now = phi(&q);
        phi_ratios.push(now / prev_phi);
        prev_phi = now;
        if q.is_square(square_tol) {
            terminated = true;
        }
    }
    let trace = ReductionTrace {
        start: start_quad,
        steps,
        phi_ratios,
        terminated,
    };
    if terminated {
        Ok(trace)
    } else {
        Err(ReductionError::RoundLimitExceeded {
            rounds: max_rounds,
            trace: Box::new(trace),
        })
    }
}

/// Quantitative audit of a trace against the claimed growth and tail shape.
#[derive(Clone, Debug, Serialize)]
pub struct TraceCheck {
    pub terminated: bool,
    pub ends_square: bool,
    pub completed_rounds: usize,
    /// Smallest ratio among rounds that began at φ ≤ 1 (None if no such round).
    pub min_low_phi_ratio: Option<f64>,
    /// Every round beginning at φ ≤ 1 grew φ by ≥ 3/2 (within slack).
    pub growth_ok: bool,
    /// φ never decreased across a round (at 1e-12 resolution).
    pub monotone_ok: bool,
    /// Morph results after the first perpendicular one, all perpendicular,
    /// at most two, the last a square.
    pub tail_ok: bool,
    /// ceil(log(1/φ₀)/log(3/2)) + 2.
    pub round_bound: usize,
    pub round_bound_ok: bool,
}

/// Verify the growth, monotonicity and tail-shape claims on a trace.
pub fn check_trace(trace: &ReductionTrace, square_tol: f64) -> TraceCheck {
    let ends_square = trace.final_quad().is_square(square_tol);
    let phi0 = phi(&trace.start);

    // Round-start φ values: φ₀, then the stored φ after each recut. Using
    // the recorded values (not a ratio product) keeps the φ ≤ 1
    // classification consistent with the ratios themselves.
    let recut_phis: Vec<f64> = trace
        .steps
        .iter()
        .filter(|s| s.kind == StepKind::Recut)
        .map(|s| s.phi)
        .collect();
    let mut growth_ok = true;
    let mut monotone_ok = true;
    let mut min_low_phi_ratio: Option<f64> = None;
    for (k, ratio) in trace.phi_ratios.iter().enumerate() {
        let round_start = if k == 0 { phi0 } else { recut_phis[k - 1] };
        if round_start <= 1.0 {
            if *ratio < 1.5 - tol::PHI_RATIO_SLACK {
                growth_ok = false;
            }
            min_low_phi_ratio = Some(min_low_phi_ratio.map_or(*ratio, |m: f64| m.min(*ratio)));
        }
        if *ratio <= 1.0 - 1e-12 {
            monotone_ok = false;
        }
    }

    // Tail: after the first perpendicular morph result, at most two more
    // morph results, each perpendicular, the last quad a square.
    let morph_steps: Vec<&ReductionStep> = trace
        .steps
        .iter()
        .filter(|s| s.kind == StepKind::Morph)
        .collect();
    let is_perp = |s: &ReductionStep| (s.diag_angle - FRAC_PI_2).abs() <= tol::PERP_PRE_TOL;
    let tail_ok = match morph_steps.iter().position(|s| is_perp(s)) {
        Some(first) => {
            let after = &morph_steps[first + 1..];
            after.len() <= 2 && after.iter().all(|s| is_perp(s)) && ends_square
        }
        // No perpendicular morph at all: only legal for a trivial trace
        // that started at a square.
        None => trace.steps.is_empty() && ends_square,
    };

    let round_bound = if phi0 >= 1.0 {
        2
    } else {
        ((1.0 / phi0).ln() / 1.5f64.ln()).ceil() as usize + 2
    };
    let completed_rounds = trace.completed_rounds();
    TraceCheck {
        terminated: trace.terminated,
        ends_square,
        completed_rounds,
        min_low_phi_ratio,
        growth_ok,
        monotone_ok,
        tail_ok,
        round_bound,
        round_bound_ok: completed_rounds <= round_bound,
    }
}

/// Residuals of the perpendicular-diagonal identity check.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PerpendicularCheck {
    /// |A² − B²| / max(B², guard).
    pub identity_residual: f64,
    /// |A − d₁d₂/2| relative to the larger of the two.
    pub area_diagonal_residual: f64,
}

/// For a quad with perpendicular diagonals (s₁ + s₃ = π within tolerance),
/// measure |A² − B²| relative to B² and cross-check A = ½·d₁·d₂.
pub fn perpendicular_check(q: &CircleQuad) -> Result<PerpendicularCheck, ReductionError> {
    let m = q.metrics();
    if (m.diag_angle - FRAC_PI_2).abs() > tol::PERP_PRE_TOL {
        return Err(ReductionError::NotPerpendicular(m.diag_angle));
    }
    let a2 = m.area * m.area;
    let identity_residual = (a2 - m.brahmagupta_sq).abs() / m.brahmagupta_sq.max(tol::B2_GUARD);
    let half_product = 0.5 * m.diagonals.0 * m.diagonals.1;
    let area_diagonal_residual =
        (m.area - half_product).abs() / m.area.abs().max(half_product.abs()).max(tol::B2_GUARD);
    Ok(PerpendicularCheck {
        identity_residual,
        area_diagonal_residual,
    })
}

/// Deterministic quad with perpendicular diagonals: s₁ + s₃ = π = s₂ + s₄,
/// with every arc at least `margin` away from the degenerate endpoints.
pub fn random_perpendicular(seed: u64, margin: f64) -> CircleQuad {
    use std::f64::consts::PI;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s1 = rng.random_range(margin..PI - margin);
    let s2 = rng.random_range(margin..PI - margin);
    CircleQuad::new(1.0, 0.0, [s1, s2, PI - s1, PI - s2]).expect("perpendicular arcs are valid")
}
