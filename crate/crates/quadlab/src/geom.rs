//! Plane primitives: points, unit directions, lines, signed distance and
//! signed (winding-weighted) polygon area.
//!
//! Everything here is a pure function of immutable values and works in both
//! scalar modes. Exact mode can only normalize directions whose squared
//! length is a perfect rational square; anything else is an error rather
//! than a silent approximation.

use thiserror::Error;

use crate::scalar::{Mode, Scalar, ScalarError};
use crate::tol;

#[derive(Debug, Error)]
pub enum GeomError {
    #[error("lines are parallel or nearly so (normalized cross product {cross})")]
    ParallelLines { cross: f64 },
    #[error("direction ({dx}, {dy}) has no exact unit normalization: {source}")]
    NonPythagoreanDirection {
        dx: String,
        dy: String,
        source: ScalarError,
    },
    #[error("zero direction vector")]
    ZeroDirection,
    #[error("consecutive vertices {0} and {1} coincide")]
    CoincidentVertices(usize, usize),
}

/// A point of the plane.
#[derive(Clone, Debug, PartialEq)]
pub struct Point2 {
    pub x: Scalar,
    pub y: Scalar,
}

impl Point2 {
    pub fn new(x: Scalar, y: Scalar) -> Self {
        debug_assert_eq!(x.mode(), y.mode(), "point coordinates must share a mode");
        Point2 { x, y }
    }

    pub fn approx(x: f64, y: f64) -> Self {
        Point2::new(Scalar::approx(x), Scalar::approx(y))
    }

    pub fn exact(x: (i64, i64), y: (i64, i64)) -> Self {
        Point2::new(Scalar::exact_ratio(x.0, x.1), Scalar::exact_ratio(y.0, y.1))
    }

    pub fn mode(&self) -> Mode {
        self.x.mode()
    }

    /// Euclidean distance to `other` (approximate mode only is guaranteed;
    /// exact mode requires a Pythagorean displacement).
    pub fn dist(&self, other: &Point2) -> Result<Scalar, ScalarError> {
        let dx = &self.x - &other.x;
        let dy = &self.y - &other.y;
        (&dx * &dx + &dy * &dy).sqrt()
    }
}

/// A unit direction. Exact mode requires dx² + dy² to be a perfect square.
#[derive(Clone, Debug, PartialEq)]
pub struct Dir2 {
    dx: Scalar,
    dy: Scalar,
}

impl Dir2 {
    pub fn new(dx: Scalar, dy: Scalar) -> Result<Self, GeomError> {
        if dx.is_zero() && dy.is_zero() {
            return Err(GeomError::ZeroDirection);
        }
        let norm_sq = &dx * &dx + &dy * &dy;
        let norm = norm_sq
            .sqrt()
            .map_err(|source| GeomError::NonPythagoreanDirection {
                dx: dx.to_string(),
                dy: dy.to_string(),
                source,
            })?;
        Ok(Dir2 {
            dx: &dx / &norm,
            dy: &dy / &norm,
        })
    }

    pub fn dx(&self) -> &Scalar {
        &self.dx
    }

    pub fn dy(&self) -> &Scalar {
        &self.dy
    }

    pub fn flipped(&self) -> Dir2 {
        Dir2 {
            dx: -&self.dx,
            dy: -&self.dy,
        }
    }

    fn check_unit(&self) {
        if let (Scalar::Approx(dx), Scalar::Approx(dy)) = (&self.dx, &self.dy) {
            debug_assert!(
                (dx * dx + dy * dy - 1.0).abs() <= tol::UNIT_NORM_TOL,
                "direction drifted off unit length"
            );
        }
    }
}

/// A line stored as anchor + direction. The direction is unit length in
/// approximate mode; exact mode keeps it unnormalized so non-Pythagorean
/// slopes stay representable.
#[derive(Clone, Debug)]
pub struct Line {
    pub anchor: Point2,
    dx: Scalar,
    dy: Scalar,
}

impl Line {
    pub fn new(anchor: Point2, dx: Scalar, dy: Scalar) -> Result<Self, GeomError> {
        if dx.is_zero() && dy.is_zero() {
            return Err(GeomError::ZeroDirection);
        }
        match anchor.mode() {
            Mode::Approx => {
                let (dxf, dyf) = (dx.to_f64(), dy.to_f64());
                let n = dxf.hypot(dyf);
                Ok(Line {
                    anchor,
                    dx: Scalar::approx(dxf / n),
                    dy: Scalar::approx(dyf / n),
                })
            }
            Mode::Exact => Ok(Line { anchor, dx, dy }),
        }
    }

    /// Line through `anchor` with the given slope (direction (1, slope)).
    pub fn with_slope(anchor: Point2, slope: Scalar) -> Result<Self, GeomError> {
        let one = Scalar::one(anchor.mode());
        Line::new(anchor, one, slope)
    }

    pub fn direction(&self) -> (&Scalar, &Scalar) {
        (&self.dx, &self.dy)
    }
}

/// Intersection point of two non-parallel lines.
///
/// Approximate mode rejects pairs whose normalized direction cross product is
/// below [`tol::PARALLEL_TOL`]; exact mode rejects exact parallels only.
pub fn line_intersection(l1: &Line, l2: &Line) -> Result<Point2, GeomError> {
    let cross = &l1.dx * &l2.dy - &l1.dy * &l2.dx;
    match l1.anchor.mode() {
        Mode::Approx => {
            // Directions are stored normalized, so `cross` already is the
            // sine of the angle between them.
            let c = cross.to_f64();
            if c.abs() <= tol::PARALLEL_TOL {
                return Err(GeomError::ParallelLines { cross: c });
            }
        }
        Mode::Exact => {
            if cross.is_zero() {
                return Err(GeomError::ParallelLines { cross: 0.0 });
            }
        }
    }
    // Solve anchor1 + t*d1 = anchor2 + s*d2 for t by Cramer's rule.
    let rx = &l2.anchor.x - &l1.anchor.x;
    let ry = &l2.anchor.y - &l1.anchor.y;
    let t = &(&rx * &l2.dy - &ry * &l2.dx) / &cross;
    Ok(Point2::new(
        &l1.anchor.x + &(&t * &l1.dx),
        &l1.anchor.y + &(&t * &l1.dy),
    ))
}

/// Signed distance (p - q)·u for points p, q on a common line parallel to u.
///
/// Antisymmetric in p, q; negated under u → -u. Callers guarantee the
/// collinearity precondition.
pub fn signed_distance(p: &Point2, q: &Point2, u: &Dir2) -> Scalar {
    u.check_unit();
    &(&(&p.x - &q.x) * u.dx()) + &(&(&p.y - &q.y) * u.dy())
}

/// Winding-weighted polygon area: ½ Σ (xᵢ yᵢ₊₁ − xᵢ₊₁ yᵢ), indices cyclic.
/// Positive for a counterclockwise convex traversal. Needs ≥ 3 points.
pub fn signed_area(poly: &[Point2]) -> Scalar {
    assert!(poly.len() >= 3, "signed_area needs at least 3 points");
    let mode = poly[0].mode();
    let mut twice = Scalar::zero(mode);
    for (i, p) in poly.iter().enumerate() {
        let q = &poly[(i + 1) % poly.len()];
        twice = &twice + &(&(&p.x * &q.y) - &(&q.x * &p.y));
    }
    let two = &Scalar::one(mode) + &Scalar::one(mode);
    &twice / &two
}

/// Four vertices in cyclic traversal order; no two consecutive may coincide.
#[derive(Clone, Debug)]
pub struct PlanarQuad {
    vertices: [Point2; 4],
}

impl PlanarQuad {
    pub fn new(vertices: [Point2; 4]) -> Result<Self, GeomError> {
        for i in 0..4 {
            let j = (i + 1) % 4;
            if vertices[i] == vertices[j] {
                return Err(GeomError::CoincidentVertices(i, j));
            }
        }
        Ok(PlanarQuad { vertices })
    }

    pub fn vertices(&self) -> &[Point2; 4] {
        &self.vertices
    }

    pub fn mode(&self) -> Mode {
        self.vertices[0].mode()
    }

    pub fn area(&self) -> Scalar {
        signed_area(&self.vertices)
    }
}
