//! Cyclic quadrilaterals in arc coordinates, and their derived metrics.
//!
//! A quad is a circle diameter, a base rotation, and four non-negative arcs
//! summing to 2π; vertex i sits at angle θ₀ + Σ_{j<i} sⱼ on the circle
//! centered at the origin. Degenerate quads with exactly one zero arc
//! (triangles with a doubled vertex) are first-class values; two zero arcs
//! are rejected.
//!
//! Arcs are stored on a fixed dyadic grid (integer multiples of 2⁻⁵⁰ rad).
//! Sums and differences of grid values up to 2π are exact in f64, so arc
//! bookkeeping — pair sums, shifts, swaps, the 2π total — never rounds.
//! Interior angles are half pair sums and inherit that exactness.

use std::f64::consts::{FRAC_PI_2, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::geom::{signed_area, Point2};
use crate::scalar::parse_rational;
use crate::tol;

/// Spacing of the arc grid: 2⁻⁵⁰ rad. Every f64 in [4, 8) — 2π included —
/// is a multiple of it, and grid sums below 8 are exactly representable.
pub const ARC_GRID: f64 = 1.0 / 1125899906842624.0;
const ARC_SCALE: f64 = 1125899906842624.0; // 2^50

/// Round to the nearest arc-grid point. Multiplying by a power of two is
/// exact, so this is plain integer rounding in disguise.
pub fn snap_arc(x: f64) -> f64 {
    let snapped = (x * ARC_SCALE).round() * ARC_GRID;
    if snapped == 0.0 {
        0.0 // normalize -0.0
    } else {
        snapped
    }
}

#[derive(Debug, Error)]
pub enum QuadError {
    #[error("bad arcs: {0}")]
    BadArcs(String),
    #[error("diameter must be positive and finite, got {0}")]
    BadDiameter(f64),
    #[error("vertices are not concyclic (relative radius spread {0:.3e})")]
    NotConcyclic(f64),
}

/// A (possibly degenerate) cyclic quadrilateral in arc coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct CircleQuad {
    diameter: f64,
    base_angle: f64,
    arcs: [f64; 4],
}

/// Everything the identities need, derived from one quad.
#[derive(Clone, Debug)]
pub struct QuadMetrics {
    /// Side lengths a, b, c, d (chords of the four arcs).
    pub sides: [f64; 4],
    /// s = (a + b + c + d) / 2.
    pub semiperimeter: f64,
    /// Signed area of the vertex cycle (positive: arcs traverse CCW).
    pub area: f64,
    /// (s-a)(s-b)(s-c)(s-d).
    pub brahmagupta_sq: f64,
    /// area² / brahmagupta_sq, or `None` when the denominator is zero.
    pub ratio_c: Option<f64>,
    /// Diagonal lengths |P₁P₃| and |P₂P₄|.
    pub diagonals: (f64, f64),
    /// Angle between the diagonals: half the sum of arcs s₁ and s₃.
    pub diag_angle: f64,
    /// (d₁² + d₂²) / D², computed scale-free from the arcs.
    pub phi: f64,
}

impl CircleQuad {
    /// Validating constructor. Arcs are snapped to the grid, must be
    /// non-negative, must sum to 2π within [`tol::ARC_SUM_TOL`] (the largest
    /// arc is then adjusted so the sum is exactly 2π), and at most one may
    /// be zero.
    pub fn new(diameter: f64, base_angle: f64, arcs: [f64; 4]) -> Result<Self, QuadError> {
        if diameter <= 0.0 || !diameter.is_finite() {
            return Err(QuadError::BadDiameter(diameter));
        }
        if !base_angle.is_finite() {
            return Err(QuadError::BadArcs(format!(
                "base angle {base_angle} is not finite"
            )));
        }
        let mut snapped = [0.0f64; 4];
        for (slot, &raw) in snapped.iter_mut().zip(arcs.iter()) {
            if !raw.is_finite() || raw < 0.0 {
                return Err(QuadError::BadArcs(format!("arc {raw} is negative")));
            }
            *slot = snap_arc(raw);
        }
        // Grid values ≤ 2π+ε sum exactly.
        let sum = snapped[0] + snapped[1] + snapped[2] + snapped[3];
        if (sum - TAU).abs() > tol::ARC_SUM_TOL {
            return Err(QuadError::BadArcs(format!(
                "arcs sum to {sum}, expected 2π within {}",
                tol::ARC_SUM_TOL
            )));
        }
        // Renormalize by adjusting only the largest arc, keeping zeros exact.
        let largest = (0..4)
            .max_by(|&i, &j| snapped[i].partial_cmp(&snapped[j]).unwrap())
            .unwrap();
        snapped[largest] += TAU - sum;
        if snapped[largest] <= 0.0 {
            return Err(QuadError::BadArcs("renormalization emptied an arc".into()));
        }
        let zeros = snapped.iter().filter(|a| **a == 0.0).count();
        if zeros >= 2 {
            return Err(QuadError::BadArcs(format!("{zeros} zero arcs")));
        }
        debug_assert_eq!(snapped[0] + snapped[1] + snapped[2] + snapped[3], TAU);
        Ok(CircleQuad {
            diameter,
            base_angle,
            arcs: snapped,
        })
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn base_angle(&self) -> f64 {
        self.base_angle
    }

    pub fn arcs(&self) -> [f64; 4] {
        self.arcs
    }

    /// Exactly one zero arc: a triangle with one doubled ("marked") vertex.
    pub fn is_marked_triangle(&self) -> bool {
        self.arcs.iter().filter(|a| **a == 0.0).count() == 1
    }

    /// Vertex angles θᵢ = θ₀ + Σ_{j<i} sⱼ.
    pub fn vertex_angles(&self) -> [f64; 4] {
        [
            self.base_angle,
            self.base_angle + self.arcs[0],
            self.base_angle + (self.arcs[0] + self.arcs[1]),
            self.base_angle + (self.arcs[0] + self.arcs[1] + self.arcs[2]),
        ]
    }

    /// Planar embedding on the circle of diameter D centered at the origin.
    pub fn vertices(&self) -> [Point2; 4] {
        let r = self.diameter / 2.0;
        self.vertex_angles()
            .map(|theta| Point2::approx(r * theta.cos(), r * theta.sin()))
    }

    /// Interior angles at P₁..P₄: each is half the sum of the two arcs not
    /// adjacent to the vertex. Opposite pairs sum to π by construction.
    pub fn interior_angles(&self) -> [f64; 4] {
        let s = &self.arcs;
        [
            (s[1] + s[2]) / 2.0,
            (s[2] + s[3]) / 2.0,
            (s[3] + s[0]) / 2.0,
            (s[0] + s[1]) / 2.0,
        ]
    }

    /// True iff every arc is within `tol` of π/2.
    pub fn is_square(&self, tol: f64) -> bool {
        self.arcs.iter().all(|s| (s - FRAC_PI_2).abs() <= tol)
    }

    /// All per-quad derived quantities.
    pub fn metrics(&self) -> QuadMetrics {
        let d = self.diameter;
        let s = &self.arcs;
        let sides = [
            d * (s[0] / 2.0).sin(),
            d * (s[1] / 2.0).sin(),
            d * (s[2] / 2.0).sin(),
            d * (s[3] / 2.0).sin(),
        ];
        let semiperimeter = (sides[0] + sides[1] + sides[2] + sides[3]) / 2.0;
        let area = signed_area(&self.vertices()).to_f64();
        let brahmagupta_sq = (semiperimeter - sides[0])
            * (semiperimeter - sides[1])
            * (semiperimeter - sides[2])
            * (semiperimeter - sides[3]);
        let ratio_c = if brahmagupta_sq == 0.0 {
            None
        } else {
            Some(area * area / brahmagupta_sq)
        };
        let half_d1 = (s[0] + s[1]) / 2.0;
        let half_d2 = (s[1] + s[2]) / 2.0;
        let diagonals = (d * half_d1.sin(), d * half_d2.sin());
        let phi = half_d1.sin().powi(2) + half_d2.sin().powi(2);
        QuadMetrics {
            sides,
            semiperimeter,
            area,
            brahmagupta_sq,
            ratio_c,
            diagonals,
            diag_angle: (s[0] + s[2]) / 2.0,
            phi,
        }
    }

    /// Deterministic convex quad for a seed: arcs all ≥ `min_arc`, diameter
    /// uniform in [0.5, 2]. The draw order (D, θ₀, four weights) is fixed.
    pub fn random_convex(seed: u64, min_arc: f64) -> CircleQuad {
        assert!(
            min_arc > 0.0 && min_arc < FRAC_PI_2,
            "min_arc must lie in (0, π/2)"
        );
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let diameter = rng.random_range(0.5..=2.0);
        let base_angle = rng.random_range(0.0..TAU);
        // Grid-align the floor upward so snapping cannot dip below min_arc.
        let mut floor = snap_arc(min_arc);
        if floor < min_arc {
            floor += ARC_GRID;
        }
        let span = TAU - 4.0 * floor;
        let weights: [f64; 4] = std::array::from_fn(|_| rng.random_range(1e-6..1.0));
        let total: f64 = weights.iter().sum();
        let arcs = weights.map(|w| floor + span * (w / total));
        CircleQuad::new(diameter, base_angle, arcs).expect("sampled arcs are valid")
    }

    /// Rebuild the arc representation from four concyclic points in CCW
    /// order. Fails if the points are not concyclic within `rel_tol` of the
    /// radius or if the traversal is not a single positive loop.
    pub fn circumscribe(points: &[Point2; 4], rel_tol: f64) -> Result<CircleQuad, QuadError> {
        let p: Vec<(f64, f64)> = points
            .iter()
            .map(|v| (v.x.to_f64(), v.y.to_f64()))
            .collect();
        let (cx, cy) = circumcenter(p[0], p[1], p[2])
            .ok_or_else(|| QuadError::BadArcs("first three vertices are collinear".to_string()))?;
        let radii: Vec<f64> = p.iter().map(|&(x, y)| (x - cx).hypot(y - cy)).collect();
        let r = radii[0];
        let spread = radii.iter().map(|ri| (ri - r).abs()).fold(0.0f64, f64::max);
        if spread > rel_tol * r.abs().max(1.0) {
            return Err(QuadError::NotConcyclic(spread / r.abs().max(1.0)));
        }
        let angles: Vec<f64> = p.iter().map(|&(x, y)| (y - cy).atan2(x - cx)).collect();
        let arcs: [f64; 4] =
            std::array::from_fn(|i| (angles[(i + 1) % 4] - angles[i]).rem_euclid(TAU));
        CircleQuad::new(2.0 * r, angles[0], arcs)
    }
}

fn circumcenter(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> Option<(f64, f64)> {
    let (ax, ay) = a;
    let (bx, by) = b;
    let (cx, cy) = c;
    let d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by));
    if d == 0.0 {
        return None;
    }
    let a2 = ax * ax + ay * ay;
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    Some((
        (a2 * (by - cy) + b2 * (cy - ay) + c2 * (ay - by)) / d,
        (a2 * (cx - bx) + b2 * (ax - cx) + c2 * (bx - ax)) / d,
    ))
}

impl Serialize for CircleQuad {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("CircleQuad", 3)?;
        st.serialize_field("D", &self.diameter)?;
        st.serialize_field("theta0", &self.base_angle)?;
        st.serialize_field("arcs", &self.arcs)?;
        st.end()
    }
}

#[derive(Deserialize)]
struct QuadWire {
    #[serde(rename = "D")]
    d: DiameterWire,
    theta0: f64,
    arcs: [f64; 4],
}

/// The diameter may arrive as a JSON number or as an exact "p/q" string.
#[derive(Deserialize)]
#[serde(untagged)]
enum DiameterWire {
    Number(f64),
    Ratio(String),
}

impl<'de> Deserialize<'de> for CircleQuad {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = QuadWire::deserialize(deserializer)?;
        let d = match wire.d {
            DiameterWire::Number(v) => v,
            DiameterWire::Ratio(s) => parse_rational(&s)
                .and_then(|r| num_traits::ToPrimitive::to_f64(&r))
                .ok_or_else(|| D::Error::custom(format!("bad rational diameter {s:?}")))?,
        };
        CircleQuad::new(d, wire.theta0, wire.arcs).map_err(D::Error::custom)
    }
}
