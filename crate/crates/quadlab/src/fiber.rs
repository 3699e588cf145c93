//! Four-line configuration spaces and their polynomial certificates.
//!
//! For slopes ρ, σ > 0 (ρ ≠ σ), the space of line quadruples with slopes
//! ρ, σ, −ρ, −σ where the ±ρ pair meets at the origin is a plane,
//! parametrized by the intersection (x, y) of the ±σ pair. Each point
//! carries a quadrilateral (the four pairwise intersections taken in cyclic
//! order), a vector of signed side lengths, and a signed area — all linear
//! resp. quadratic in (x, y).
//!
//! The certification at the core of this module fits the signed area A and
//! the product B² = (s−a)(s−b)(s−c)(s−d) on polynomial bases over a grid and
//! checks that A is a pure xy multiple and B² a pure (xy)² multiple with the
//! leading coefficients related by κ² = μ. In exact mode (Pythagorean
//! slopes, so all unit vectors are rational) every one of those statements
//! is checked by exact rational arithmetic, with zero tolerance.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::geom::{
    line_intersection, signed_area, signed_distance, Dir2, GeomError, Line, PlanarQuad, Point2,
};
use crate::interp::{self, InterpError};
use crate::scalar::{rational_sqrt, Mode, Scalar};
use crate::tol;

#[derive(Debug, Error)]
pub enum FiberError {
    #[error("slope {0} must be positive")]
    NonPositiveSlope(String),
    #[error("slopes ρ and σ must differ")]
    EqualSlopes,
    #[error("exact mode requires Pythagorean slopes: 1 + ({slope})² is not a rational square")]
    NonPythagoreanExact { slope: String },
    #[error("slopes and coordinates must share one scalar mode")]
    MixedModes,
    #[error("quad is not cyclic: side-direction certificate residual {0:.3e} rad")]
    NotCyclic(f64),
    #[error("a pair of opposite sides is parallel; the fiber map needs a generic quad")]
    NonGeneric,
    #[error("side slope {0:.3e} after rotation is out of range; fiber coordinates need finite nonzero slopes")]
    DegenerateSlope(f64),
    #[error("degenerate configuration: {0}")]
    Degenerate(#[from] GeomError),
    #[error(transparent)]
    Fit(#[from] InterpError),
    #[error("no convex reference configuration found for these slopes")]
    NoConvexReference,
}

/// Validated slope pair. Exact mode additionally requires both slopes
/// Pythagorean (1 + slope² a rational square) so side lengths stay rational.
#[derive(Clone, Debug)]
pub struct FiberSlopes {
    rho: Scalar,
    sigma: Scalar,
}

impl FiberSlopes {
    pub fn new(rho: Scalar, sigma: Scalar) -> Result<Self, FiberError> {
        if rho.mode() != sigma.mode() {
            return Err(FiberError::MixedModes);
        }
        for s in [&rho, &sigma] {
            if s.signum() != 1 {
                return Err(FiberError::NonPositiveSlope(s.to_string()));
            }
        }
        if rho == sigma {
            return Err(FiberError::EqualSlopes);
        }
        if rho.mode() == Mode::Exact {
            for s in [&rho, &sigma] {
                let r = s.as_rational().unwrap();
                let one_plus_sq = BigRational::from_integer(1.into()) + r * r;
                if rational_sqrt(&one_plus_sq).is_none() {
                    return Err(FiberError::NonPythagoreanExact {
                        slope: s.to_string(),
                    });
                }
            }
        }
        Ok(FiberSlopes { rho, sigma })
    }

    pub fn exact(rho: (i64, i64), sigma: (i64, i64)) -> Result<Self, FiberError> {
        FiberSlopes::new(
            Scalar::exact_ratio(rho.0, rho.1),
            Scalar::exact_ratio(sigma.0, sigma.1),
        )
    }

    pub fn approx(rho: f64, sigma: f64) -> Result<Self, FiberError> {
        FiberSlopes::new(Scalar::approx(rho), Scalar::approx(sigma))
    }

    pub fn rho(&self) -> &Scalar {
        &self.rho
    }

    pub fn sigma(&self) -> &Scalar {
        &self.sigma
    }

    pub fn mode(&self) -> Mode {
        self.rho.mode()
    }
}

/// A point of one fiber plane: slopes plus the (x, y) coordinate. Every
/// (x, y) is legal, including the butterfly axes xy = 0.
#[derive(Clone, Debug)]
pub struct FiberPoint {
    pub slopes: FiberSlopes,
    pub x: Scalar,
    pub y: Scalar,
}

impl FiberPoint {
    pub fn new(slopes: FiberSlopes, x: Scalar, y: Scalar) -> Result<Self, FiberError> {
        if x.mode() != slopes.mode() || y.mode() != slopes.mode() {
            return Err(FiberError::MixedModes);
        }
        Ok(FiberPoint { slopes, x, y })
    }
}

/// Signed side lengths and signed area at one fiber point, with the signs
/// fixed so all five are positive on the convex reference configuration.
#[derive(Clone, Debug)]
pub struct SignedSides {
    pub a: Scalar,
    pub b: Scalar,
    pub c: Scalar,
    pub d: Scalar,
    pub area: Scalar,
}

impl SignedSides {
    /// s = (a + b + c + d) / 2.
    pub fn semiperimeter(&self) -> Scalar {
        let sum = &(&(&self.a + &self.b) + &self.c) + &self.d;
        let two = &Scalar::one(sum.mode()) + &Scalar::one(sum.mode());
        &sum / &two
    }

    /// (s − a)(s − b)(s − c)(s − d).
    pub fn brahmagupta_sq(&self) -> Scalar {
        let s = self.semiperimeter();
        &(&(&(&s - &self.a) * &(&s - &self.b)) * &(&s - &self.c)) * &(&s - &self.d)
    }

    /// area² / B², or `None` on the vanishing locus of B².
    pub fn ratio_c(&self) -> Option<Scalar> {
        let b2 = self.brahmagupta_sq();
        if b2.is_zero() {
            None
        } else {
            Some(&(&self.area * &self.area) / &b2)
        }
    }
}

/// One fiber plane with its sign convention resolved.
#[derive(Clone, Debug)]
pub struct Fiber {
    slopes: FiberSlopes,
    dirs: [Dir2; 4],
    orientation: i8,
    reference: (Scalar, Scalar),
}

impl Fiber {
    /// Build the fiber and fix the sign convention: scan candidate (x, y)
    /// in the open first quadrant for a convex configuration (uniform
    /// cross-product sign), then flip each per-side unit vector and the
    /// area orientation so a, b, c, d, A > 0 there. The candidate list ends
    /// with (2, ρ+σ), which always lies inside the convex cone, so the scan
    /// cannot fail.
    pub fn new(slopes: FiberSlopes) -> Result<Self, FiberError> {
        let candidates = convex_candidates(&slopes);
        for (x, y) in candidates {
            let verts = raw_vertices(&slopes, &x, &y)?;
            if !is_convex(&verts) {
                continue;
            }
            return Fiber::with_reference(slopes, (x, y), &verts);
        }
        Err(FiberError::NoConvexReference)
    }

    /// Pin the sign convention at a specific convex configuration. Exposed
    /// so tests can verify the convention does not depend on the choice.
    pub fn with_reference_point(
        slopes: FiberSlopes,
        x: Scalar,
        y: Scalar,
    ) -> Result<Self, FiberError> {
        let verts = raw_vertices(&slopes, &x, &y)?;
        if !is_convex(&verts) {
            return Err(FiberError::NoConvexReference);
        }
        Fiber::with_reference(slopes, (x, y), &verts)
    }

    fn with_reference(
        slopes: FiberSlopes,
        reference: (Scalar, Scalar),
        verts: &[Point2; 4],
    ) -> Result<Self, FiberError> {
        let mode = slopes.mode();
        let one = Scalar::one(mode);
        let base = [
            Dir2::new(one.clone(), slopes.rho.clone()),
            Dir2::new(one.clone(), slopes.sigma.clone()),
            Dir2::new(one.clone(), -&slopes.rho),
            Dir2::new(one.clone(), -&slopes.sigma),
        ];
        let mut dirs = Vec::with_capacity(4);
        for d in base {
            dirs.push(d.map_err(FiberError::Degenerate)?);
        }
        // Flip each unit vector so the side comes out positive here.
        let mut fixed = Vec::with_capacity(4);
        for (i, dir) in dirs.into_iter().enumerate() {
            let raw = signed_distance(&verts[(i + 1) % 4], &verts[i], &dir);
            match raw.signum() {
                1 => fixed.push(dir),
                -1 => fixed.push(dir.flipped()),
                _ => return Err(FiberError::NoConvexReference),
            }
        }
        let area = signed_area(verts);
        let orientation = match area.signum() {
            1 => 1,
            -1 => -1,
            _ => return Err(FiberError::NoConvexReference),
        };
        Ok(Fiber {
            slopes,
            dirs: [
                fixed.remove(0),
                fixed.remove(0),
                fixed.remove(0),
                fixed.remove(0),
            ],
            orientation,
            reference,
        })
    }

    pub fn slopes(&self) -> &FiberSlopes {
        &self.slopes
    }

    /// The convex configuration the sign convention was pinned at.
    pub fn reference(&self) -> (&Scalar, &Scalar) {
        (&self.reference.0, &self.reference.1)
    }

    /// Per-side unit vectors after sign normalization.
    pub fn side_dirs(&self) -> &[Dir2; 4] {
        &self.dirs
    }

    pub fn orientation(&self) -> i8 {
        self.orientation
    }

    /// Vertices at (x, y): (ℓ_d∩ℓ_a, ℓ_a∩ℓ_b, ℓ_b∩ℓ_c, ℓ_c∩ℓ_d).
    pub fn vertices(&self, x: &Scalar, y: &Scalar) -> Result<[Point2; 4], FiberError> {
        raw_vertices(&self.slopes, x, y)
    }

    /// Signed sides and signed area at (x, y). Defined for every (x, y);
    /// degenerate configurations simply have vanishing entries.
    pub fn signed_sides(&self, x: &Scalar, y: &Scalar) -> Result<SignedSides, FiberError> {
        let v = self.vertices(x, y)?;
        let a = signed_distance(&v[1], &v[0], &self.dirs[0]);
        let b = signed_distance(&v[2], &v[1], &self.dirs[1]);
        let c = signed_distance(&v[3], &v[2], &self.dirs[2]);
        let d = signed_distance(&v[0], &v[3], &self.dirs[3]);
        let mut area = signed_area(&v);
        if self.orientation < 0 {
            area = -&area;
        }
        Ok(SignedSides { a, b, c, d, area })
    }

    /// Fit A on the degree-2 basis and B² on the degree-4 basis over the
    /// integer grid {−r..r}² and report the coefficients, κ = A-coefficient
    /// of xy, μ = B²-coefficient of x²y², the largest off-target
    /// coefficient magnitudes, and κ² − μ.
    pub fn certify(&self, grid_radius: u32) -> Result<FiberReport, FiberError> {
        let r = grid_radius as i64;
        match self.slopes.mode() {
            Mode::Exact => {
                let mut area_samples = Vec::new();
                let mut b2_samples = Vec::new();
                for i in -r..=r {
                    for j in -r..=r {
                        let x = Scalar::exact_int(i);
                        let y = Scalar::exact_int(j);
                        let sides = self.signed_sides(&x, &y)?;
                        let xr = x.as_rational().unwrap().clone();
                        let yr = y.as_rational().unwrap().clone();
                        area_samples.push((
                            xr.clone(),
                            yr.clone(),
                            sides.area.as_rational().unwrap().clone(),
                        ));
                        b2_samples.push((
                            xr,
                            yr,
                            sides.brahmagupta_sq().as_rational().unwrap().clone(),
                        ));
                    }
                }
                let coeffs_area = interp::fit_exact(&area_samples, 2)?;
                let coeffs_b2 = interp::fit_exact(&b2_samples, 4)?;
                Ok(FiberReport::from_exact(
                    &self.slopes,
                    grid_radius,
                    coeffs_area,
                    coeffs_b2,
                ))
            }
            Mode::Approx => {
                let mut area_samples = Vec::new();
                let mut b2_samples = Vec::new();
                for i in -r..=r {
                    for j in -r..=r {
                        let x = Scalar::approx(i as f64);
                        let y = Scalar::approx(j as f64);
                        let sides = self.signed_sides(&x, &y)?;
                        area_samples.push((i as f64, j as f64, sides.area.to_f64()));
                        b2_samples.push((i as f64, j as f64, sides.brahmagupta_sq().to_f64()));
                    }
                }
                let coeffs_area = interp::fit_least_squares(&area_samples, 2)?;
                let coeffs_b2 = interp::fit_least_squares(&b2_samples, 4)?;
                Ok(FiberReport::from_approx(
                    &self.slopes,
                    grid_radius,
                    coeffs_area,
                    coeffs_b2,
                ))
            }
        }
    }
}

/// Same slopes, new (x, y): the in-plane move whose invariance of C the
/// certificates establish.
pub fn morph_in_fiber(fp: &FiberPoint, x: Scalar, y: Scalar) -> Result<FiberPoint, FiberError> {
    FiberPoint::new(fp.slopes.clone(), x, y)
}

/// The quadrilateral carried by a fiber point. Errors if consecutive
/// vertices coincide (on the lines y = ±σx through the origin, and at the
/// origin itself, the configuration degenerates).
pub fn quad_from_fiber(fp: &FiberPoint) -> Result<PlanarQuad, FiberError> {
    let verts = raw_vertices(&fp.slopes, &fp.x, &fp.y)?;
    PlanarQuad::new(verts).map_err(FiberError::Degenerate)
}

/// Signed sides and area at a fiber point under the fiber's sign convention.
pub fn signed_sides_and_area(fp: &FiberPoint) -> Result<SignedSides, FiberError> {
    let fiber = Fiber::new(fp.slopes.clone())?;
    fiber.signed_sides(&fp.x, &fp.y)
}

/// One-shot convenience: build the fiber for `slopes` and certify it.
pub fn interpolate_fiber_polynomials(
    slopes: FiberSlopes,
    grid_radius: u32,
) -> Result<FiberReport, FiberError> {
    Fiber::new(slopes)?.certify(grid_radius)
}

fn raw_vertices(slopes: &FiberSlopes, x: &Scalar, y: &Scalar) -> Result<[Point2; 4], FiberError> {
    let mode = slopes.mode();
    if x.mode() != mode || y.mode() != mode {
        return Err(FiberError::MixedModes);
    }
    let origin = Point2::new(Scalar::zero(mode), Scalar::zero(mode));
    let apex = Point2::new(x.clone(), y.clone());
    let la =
        Line::with_slope(origin.clone(), slopes.rho.clone()).map_err(FiberError::Degenerate)?;
    let lc = Line::with_slope(origin, -&slopes.rho).map_err(FiberError::Degenerate)?;
    let lb =
        Line::with_slope(apex.clone(), slopes.sigma.clone()).map_err(FiberError::Degenerate)?;
    let ld = Line::with_slope(apex, -&slopes.sigma).map_err(FiberError::Degenerate)?;
    Ok([
        line_intersection(&ld, &la).map_err(FiberError::Degenerate)?,
        line_intersection(&la, &lb).map_err(FiberError::Degenerate)?,
        line_intersection(&lb, &lc).map_err(FiberError::Degenerate)?,
        line_intersection(&lc, &ld).map_err(FiberError::Degenerate)?,
    ])
}

fn is_convex(verts: &[Point2; 4]) -> bool {
    let mut sign = 0i8;
    for i in 0..4 {
        let a = &verts[i];
        let b = &verts[(i + 1) % 4];
        let c = &verts[(i + 2) % 4];
        let e1x = &b.x - &a.x;
        let e1y = &b.y - &a.y;
        let e2x = &c.x - &b.x;
        let e2y = &c.y - &b.y;
        let cross = &(&e1x * &e2y) - &(&e1y * &e2x);
        let s = cross.signum();
        if s == 0 {
            return false;
        }
        if sign == 0 {
            sign = s;
        } else if s != sign {
            return false;
        }
    }
    true
}

fn convex_candidates(slopes: &FiberSlopes) -> Vec<(Scalar, Scalar)> {
    let mode = slopes.mode();
    let mut out: Vec<(Scalar, Scalar)> = COARSE_GRID
        .iter()
        .map(|&(i, j)| match mode {
            Mode::Approx => (Scalar::approx(i as f64), Scalar::approx(j as f64)),
            Mode::Exact => (Scalar::exact_int(i), Scalar::exact_int(j)),
        })
        .collect();
    // Guaranteed interior point of the convex cone {min(ρ,σ)·x < y < max(ρ,σ)·x}.
    let two = &Scalar::one(mode) + &Scalar::one(mode);
    out.push((two, &slopes.rho + &slopes.sigma));
    out
}

/// First-quadrant scan order for the convex reference configuration.
const COARSE_GRID: &[(i64, i64)] = &[
    (1, 1),
    (1, 2),
    (2, 1),
    (1, 3),
    (3, 1),
    (2, 3),
    (3, 2),
    (1, 4),
    (4, 1),
    (3, 4),
    (4, 3),
    (2, 5),
    (5, 2),
    (1, 5),
    (5, 1),
    (4, 5),
    (5, 4),
    (3, 5),
    (5, 3),
];

/// Interpolation certificate for one fiber.
#[derive(Clone, Debug)]
pub struct FiberReport {
    pub rho: Scalar,
    pub sigma: Scalar,
    pub exact: bool,
    pub grid_radius: u32,
    pub coeffs_area: BTreeMap<(u32, u32), Scalar>,
    pub coeffs_b2: BTreeMap<(u32, u32), Scalar>,
    pub kappa: Scalar,
    pub mu: Scalar,
    pub max_offdiag_area: Scalar,
    pub max_offdiag_b2: Scalar,
    pub kappa_sq_minus_mu: Scalar,
}

impl FiberReport {
    fn from_exact(
        slopes: &FiberSlopes,
        grid_radius: u32,
        area: BTreeMap<(u32, u32), BigRational>,
        b2: BTreeMap<(u32, u32), BigRational>,
    ) -> Self {
        let kappa = area.get(&(1, 1)).cloned().unwrap_or_else(BigRational::zero);
        let mu = b2.get(&(2, 2)).cloned().unwrap_or_else(BigRational::zero);
        let max_off = |m: &BTreeMap<(u32, u32), BigRational>, skip: (u32, u32)| {
            m.iter()
                .filter(|(k, _)| **k != skip)
                .map(|(_, v)| v.clone().abs())
                .max()
                .unwrap_or_else(BigRational::zero)
        };
        FiberReport {
            rho: slopes.rho.clone(),
            sigma: slopes.sigma.clone(),
            exact: true,
            grid_radius,
            max_offdiag_area: Scalar::from_rational(max_off(&area, (1, 1))),
            max_offdiag_b2: Scalar::from_rational(max_off(&b2, (2, 2))),
            kappa_sq_minus_mu: Scalar::from_rational(&kappa * &kappa - &mu),
            kappa: Scalar::from_rational(kappa),
            mu: Scalar::from_rational(mu),
            coeffs_area: area
                .into_iter()
                .map(|(k, v)| (k, Scalar::from_rational(v)))
                .collect(),
            coeffs_b2: b2
                .into_iter()
                .map(|(k, v)| (k, Scalar::from_rational(v)))
                .collect(),
        }
    }

    fn from_approx(
        slopes: &FiberSlopes,
        grid_radius: u32,
        area: BTreeMap<(u32, u32), f64>,
        b2: BTreeMap<(u32, u32), f64>,
    ) -> Self {
        let kappa = area.get(&(1, 1)).copied().unwrap_or(0.0);
        let mu = b2.get(&(2, 2)).copied().unwrap_or(0.0);
        let max_off = |m: &BTreeMap<(u32, u32), f64>, skip: (u32, u32)| {
            m.iter()
                .filter(|(k, _)| **k != skip)
                .map(|(_, v)| v.abs())
                .fold(0.0f64, f64::max)
        };
        FiberReport {
            rho: slopes.rho.clone(),
            sigma: slopes.sigma.clone(),
            exact: false,
            grid_radius,
            max_offdiag_area: Scalar::approx(max_off(&area, (1, 1))),
            max_offdiag_b2: Scalar::approx(max_off(&b2, (2, 2))),
            kappa_sq_minus_mu: Scalar::approx(kappa * kappa - mu),
            kappa: Scalar::approx(kappa),
            mu: Scalar::approx(mu),
            coeffs_area: area
                .into_iter()
                .map(|(k, v)| (k, Scalar::approx(v)))
                .collect(),
            coeffs_b2: b2
                .into_iter()
                .map(|(k, v)| (k, Scalar::approx(v)))
                .collect(),
        }
    }

    /// Certificate verdict. Exact reports demand literal zeros; approximate
    /// reports compare against `offdiag_rel` times the leading coefficients.
    pub fn passes(&self, offdiag_rel: f64) -> bool {
        if self.exact {
            self.max_offdiag_area.is_zero()
                && self.max_offdiag_b2.is_zero()
                && self.kappa_sq_minus_mu.is_zero()
                && !self.kappa.is_zero()
        } else {
            let kappa = self.kappa.to_f64().abs();
            let mu = self.mu.to_f64().abs();
            self.max_offdiag_area.to_f64() <= offdiag_rel * kappa
                && self.max_offdiag_b2.to_f64() <= offdiag_rel * mu
                && self.kappa_sq_minus_mu.to_f64().abs() <= offdiag_rel * mu
        }
    }

    pub fn to_json(&self) -> Value {
        let table = |m: &BTreeMap<(u32, u32), Scalar>| {
            let mut obj = serde_json::Map::new();
            for ((i, j), v) in m {
                obj.insert(format!("{i},{j}"), v.to_json());
            }
            Value::Object(obj)
        };
        json!({
            "rho": self.rho.to_json(),
            "sigma": self.sigma.to_json(),
            "exact": self.exact,
            "grid_radius": self.grid_radius,
            "kappa": self.kappa.to_json(),
            "mu": self.mu.to_json(),
            "offdiag_max_A": self.max_offdiag_area.to_json(),
            "offdiag_max_B2": self.max_offdiag_b2.to_json(),
            "kappa_sq_minus_mu": self.kappa_sq_minus_mu.to_json(),
            "coeffs_A": table(&self.coeffs_area),
            "coeffs_B2": table(&self.coeffs_b2),
        })
    }
}

/// The rigid motion that carries a planar quad onto its fiber configuration.
#[derive(Clone, Debug)]
pub struct FiberEmbedding {
    pub point: FiberPoint,
    /// Rotation applied to the input, radians CCW.
    pub rotation: f64,
    /// Translation applied after the rotation.
    pub translation: (f64, f64),
    /// True when the input traversal had to be reversed to match the fiber
    /// labeling: the reconstructed vertices then correspond to input order
    /// (v₂, v₁, v₄, v₃).
    pub reversed: bool,
}

impl FiberEmbedding {
    /// Index map from reconstructed vertices back to input vertices.
    pub fn vertex_relabeling(&self) -> [usize; 4] {
        if self.reversed {
            [1, 0, 3, 2]
        } else {
            [0, 1, 2, 3]
        }
    }

    /// Apply the rotation-then-translation to a point.
    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        let (s, c) = self.rotation.sin_cos();
        (
            c * x - s * y + self.translation.0,
            s * x + c * y + self.translation.1,
        )
    }
}

/// Rotate and translate a generic cyclic quad so it becomes a fiber
/// configuration, and read off (ρ, σ, x, y).
///
/// The cyclicity certificate is that the side direction angles satisfy
/// φ_a + φ_c ≡ φ_b + φ_d (mod π); the rotation −(φ_a+φ_c)/2 (branch chosen
/// so side 1 gets a positive slope) makes sides 1, 3 carry slopes ±ρ.
/// Side 1 of the input anchors ℓ_a; if side 2 then carries a negative
/// slope the traversal is reversed (see [`FiberEmbedding::reversed`]).
pub fn fiber_from_quad(pq: &PlanarQuad) -> Result<FiberEmbedding, FiberError> {
    let v: Vec<(f64, f64)> = pq
        .vertices()
        .iter()
        .map(|p| (p.x.to_f64(), p.y.to_f64()))
        .collect();
    let side = |i: usize| -> (f64, f64) {
        let (x0, y0) = v[i];
        let (x1, y1) = v[(i + 1) % 4];
        (x1 - x0, y1 - y0)
    };
    let dirs: Vec<(f64, f64)> = (0..4).map(side).collect();
    let angles: Vec<f64> = dirs
        .iter()
        .map(|&(dx, dy)| dy.atan2(dx).rem_euclid(PI))
        .collect();

    // Genericity: neither pair of opposite sides may be parallel.
    for (i, j) in [(0usize, 2usize), (1, 3)] {
        let (ax, ay) = dirs[i];
        let (bx, by) = dirs[j];
        let cross = (ax * by - ay * bx) / (ax.hypot(ay) * bx.hypot(by));
        if cross.abs() <= tol::PARALLEL_TOL {
            return Err(FiberError::NonGeneric);
        }
    }

    // Cyclicity certificate.
    let residual = wrap_mod_pi((angles[0] + angles[2]) - (angles[1] + angles[3]));
    if residual.abs() > tol::CYCLIC_CERT_TOL {
        return Err(FiberError::NotCyclic(residual.abs()));
    }

    // Rotation making sides 1 and 3 carry slopes ±ρ, with ρ > 0.
    let mut psi = -(angles[0] + angles[2]) / 2.0;
    let slope_after = |psi: f64, i: usize| -> Result<f64, FiberError> {
        let (dx, dy) = dirs[i];
        let (s, c) = psi.sin_cos();
        let (rx, ry) = (c * dx - s * dy, s * dx + c * dy);
        if rx.abs() <= tol::SLOPE_MIN * ry.abs().max(rx.abs()) {
            return Err(FiberError::DegenerateSlope(f64::INFINITY));
        }
        let slope = ry / rx;
        if slope.abs() <= tol::SLOPE_MIN || slope.abs() >= tol::SLOPE_MAX {
            return Err(FiberError::DegenerateSlope(slope));
        }
        Ok(slope)
    };
    if slope_after(psi, 0)? < 0.0 {
        psi += PI / 2.0;
    }
    let s1 = slope_after(psi, 0)?;
    let s2 = slope_after(psi, 1)?;
    let s3 = slope_after(psi, 2)?;
    let s4 = slope_after(psi, 3)?;
    let rho = (s1 - s3) / 2.0;
    let sigma = (s2.abs() + s4.abs()) / 2.0;
    let reversed = s2 < 0.0;

    // Rotate the vertices, then translate ℓ_a∩ℓ_c to the origin.
    let (sn, cs) = psi.sin_cos();
    let rot: Vec<Point2> = v
        .iter()
        .map(|&(x, y)| Point2::approx(cs * x - sn * y, cs * y + sn * x))
        .collect();
    let line_through = |i: usize, slope: f64| -> Result<Line, FiberError> {
        Line::with_slope(rot[i].clone(), Scalar::approx(slope)).map_err(FiberError::Degenerate)
    };
    let la = line_through(0, s1)?;
    let lc = line_through(2, s3)?;
    let center = line_intersection(&la, &lc).map_err(FiberError::Degenerate)?;
    let (ox, oy) = (center.x.to_f64(), center.y.to_f64());

    let lb = line_through(1, s2)?;
    let ld = line_through(3, s4)?;
    let apex = line_intersection(&lb, &ld).map_err(FiberError::Degenerate)?;
    let (x, y) = (apex.x.to_f64() - ox, apex.y.to_f64() - oy);

    let slopes = FiberSlopes::approx(rho, sigma).map_err(|e| match e {
        // Equal magnitudes mean a collinear vertex triple; treat as non-generic.
        FiberError::EqualSlopes => FiberError::NonGeneric,
        other => other,
    })?;
    let point = FiberPoint::new(slopes, Scalar::approx(x), Scalar::approx(y))?;
    Ok(FiberEmbedding {
        point,
        rotation: psi,
        translation: (-ox, -oy),
        reversed,
    })
}

/// Map an angle difference into (−π/2, π/2] by reducing mod π.
fn wrap_mod_pi(x: f64) -> f64 {
    let r = x.rem_euclid(PI);
    if r > PI / 2.0 {
        r - PI
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::CircleQuad;
    use crate::tol::approx_eq;
    use num_bigint::BigInt;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn exact_point(slopes: &FiberSlopes, x: (i64, i64), y: (i64, i64)) -> FiberPoint {
        FiberPoint::new(
            slopes.clone(),
            Scalar::exact_ratio(x.0, x.1),
            Scalar::exact_ratio(y.0, y.1),
        )
        .unwrap()
    }

    #[test]
    fn slope_validation() {
        assert!(FiberSlopes::exact((3, 4), (4, 3)).is_ok());
        assert!(matches!(
            FiberSlopes::exact((3, 4), (3, 4)),
            Err(FiberError::EqualSlopes)
        ));
        assert!(matches!(
            FiberSlopes::exact((-3, 4), (4, 3)),
            Err(FiberError::NonPositiveSlope(_))
        ));
        // 1 + (1/2)² = 5/4 is not a rational square.
        assert!(matches!(
            FiberSlopes::exact((1, 2), (5, 12)),
            Err(FiberError::NonPythagoreanExact { .. })
        ));
        // Approximate mode has no Pythagorean restriction.
        assert!(FiberSlopes::approx(0.5, 0.4167).is_ok());
    }

    #[test]
    fn vertices_match_linear_solve_oracle() {
        // Oracle values computed by four independent 2×2 Cramer solves.
        let slopes = FiberSlopes::exact((3, 4), (4, 3)).unwrap();
        let fp = exact_point(&slopes, (1, 1), (0, 1));
        let quad = quad_from_fiber(&fp).unwrap();
        let expect = [
            ((16, 25), (12, 25)),
            ((16, 7), (12, 7)),
            ((16, 25), (-12, 25)),
            ((16, 7), (-12, 7)),
        ];
        for (v, (ex, ey)) in quad.vertices().iter().zip(expect) {
            assert_eq!(v.x, Scalar::exact_ratio(ex.0, ex.1));
            assert_eq!(v.y, Scalar::exact_ratio(ey.0, ey.1));
        }
        // Butterfly on the x-axis: signed area vanishes exactly.
        assert!(quad.area().is_zero());
    }

    #[test]
    fn butterfly_side_magnitudes() {
        let slopes = FiberSlopes::exact((3, 4), (4, 3)).unwrap();
        let fiber = Fiber::new(slopes).unwrap();
        let sides = fiber
            .signed_sides(&Scalar::exact_int(1), &Scalar::exact_int(0))
            .unwrap();
        // |a| = |c| = 72/35 from the oracle vertex distances.
        assert_eq!(sides.a.abs(), Scalar::from_rational(rat(72, 35)));
        assert_eq!(sides.c.abs(), Scalar::from_rational(rat(72, 35)));
        assert_eq!(sides.b.abs(), sides.d.abs());
        assert!(sides.area.is_zero());
        // ab = −cd.
        assert_eq!(&sides.a * &sides.b, -&(&sides.c * &sides.d));
    }

    #[test]
    fn convex_reference_is_positive_everywhere() {
        for (r, s) in [
            ((3i64, 4i64), (4i64, 3i64)),
            ((3, 4), (5, 12)),
            ((5, 12), (8, 15)),
        ] {
            let fiber = Fiber::new(FiberSlopes::exact(r, s).unwrap()).unwrap();
            let (x, y) = fiber.reference();
            let sides = fiber.signed_sides(&x.clone(), &y.clone()).unwrap();
            assert_eq!(sides.a.signum(), 1);
            assert_eq!(sides.b.signum(), 1);
            assert_eq!(sides.c.signum(), 1);
            assert_eq!(sides.d.signum(), 1);
            assert_eq!(sides.area.signum(), 1);
        }
    }

    #[test]
    fn sign_convention_is_independent_of_the_convex_point() {
        // Pin the convention at every convex coarse-grid candidate and at the
        // analytic midline point; all must agree with the scan result.
        let slopes = FiberSlopes::exact((3, 4), (4, 3)).unwrap();
        let canonical = Fiber::new(slopes.clone()).unwrap();
        let mut tested = 0;
        let mut candidates = COARSE_GRID
            .iter()
            .map(|&(i, j)| (Scalar::exact_int(i), Scalar::exact_int(j)))
            .collect::<Vec<_>>();
        candidates.push((
            Scalar::exact_int(2),
            &Scalar::exact_ratio(3, 4) + &Scalar::exact_ratio(4, 3),
        ));
        for (x, y) in candidates {
            if let Ok(pinned) = Fiber::with_reference_point(slopes.clone(), x, y) {
                assert_eq!(pinned.side_dirs(), canonical.side_dirs());
                assert_eq!(pinned.orientation(), canonical.orientation());
                tested += 1;
            }
        }
        assert!(tested >= 2, "expected several convex candidates");
    }

    #[test]
    fn vertex_coordinates_are_linear_with_zero_constant() {
        let slopes = FiberSlopes::exact((3, 4), (5, 12)).unwrap();
        let fiber = Fiber::new(slopes).unwrap();
        // Second differences along a rational line must vanish exactly.
        let at = |t: i64| {
            let x = Scalar::exact_ratio(2 * t + 1, 3);
            let y = Scalar::exact_ratio(-5 * t + 2, 7);
            fiber.signed_sides(&x, &y).unwrap()
        };
        let (s0, s1, s2) = (at(0), at(1), at(2));
        for f in [
            |s: &SignedSides| s.a.clone(),
            |s: &SignedSides| s.b.clone(),
            |s: &SignedSides| s.c.clone(),
            |s: &SignedSides| s.d.clone(),
        ] {
            let second_diff = &(&f(&s0) + &f(&s2)) - &(&f(&s1) + &f(&s1));
            assert!(second_diff.is_zero(), "side is not affine in (x, y)");
        }
        // Zero constant term: everything vanishes at the origin.
        let zero = fiber
            .signed_sides(&Scalar::exact_int(0), &Scalar::exact_int(0))
            .unwrap();
        assert!(zero.a.is_zero() && zero.c.is_zero());
        assert!(zero.b.is_zero() && zero.d.is_zero());
    }

    #[test]
    fn exact_certification_for_the_reference_slope_pairs() {
        for (r, s) in [
            ((3i64, 4i64), (5i64, 12i64)),
            ((3, 4), (8, 15)),
            ((5, 12), (8, 15)),
            ((3, 4), (4, 3)),
        ] {
            let report =
                interpolate_fiber_polynomials(FiberSlopes::exact(r, s).unwrap(), 2).unwrap();
            assert!(report.exact);
            assert!(
                report.max_offdiag_area.is_zero(),
                "A has stray coefficients"
            );
            assert!(report.max_offdiag_b2.is_zero(), "B² has stray coefficients");
            assert!(report.kappa_sq_minus_mu.is_zero(), "κ² ≠ μ");
            assert!(report.passes(tol::FIBER_OFFDIAG_REL));
        }
    }

    #[test]
    fn certified_polynomials_predict_off_grid_points() {
        let slopes = FiberSlopes::exact((3, 4), (5, 12)).unwrap();
        let fiber = Fiber::new(slopes).unwrap();
        let report = fiber.certify(2).unwrap();
        // Cross-check at an off-grid rational point.
        let (x, y) = (Scalar::exact_ratio(7, 3), Scalar::exact_ratio(-5, 2));
        let sides = fiber.signed_sides(&x, &y).unwrap();
        let xy = &x * &y;
        let predicted_area = &report.kappa * &xy;
        assert_eq!(sides.area, predicted_area);
        let predicted_b2 = &report.mu * &(&xy * &xy);
        assert_eq!(sides.brahmagupta_sq(), predicted_b2);
    }

    #[test]
    fn approximate_certification_with_uneven_slopes() {
        let report =
            interpolate_fiber_polynomials(FiberSlopes::approx(0.37, 2.1).unwrap(), 3).unwrap();
        assert!(!report.exact);
        assert!(report.passes(tol::FIBER_OFFDIAG_REL));
    }

    #[test]
    fn c_is_constant_across_a_fiber() {
        let slopes = FiberSlopes::exact((3, 4), (4, 3)).unwrap();
        let fiber = Fiber::new(slopes.clone()).unwrap();
        let c_at = |x: Scalar, y: Scalar| {
            fiber
                .signed_sides(&x, &y)
                .unwrap()
                .ratio_c()
                .map(|c| c.to_f64())
        };
        let c1 = c_at(Scalar::exact_int(1), Scalar::exact_int(1)).unwrap();
        let c2 = c_at(Scalar::exact_int(2), Scalar::exact_int(3)).unwrap();
        assert_eq!(c1, 1.0);
        assert_eq!(c2, 1.0);
        // Butterfly target: C undefined, comparison skipped.
        assert!(c_at(Scalar::exact_int(2), Scalar::exact_int(0)).is_none());
        // morph_in_fiber carries the slopes over unchanged.
        let fp = exact_point(&slopes, (1, 1), (1, 1));
        let moved = morph_in_fiber(&fp, Scalar::exact_int(2), Scalar::exact_int(3)).unwrap();
        assert_eq!(moved.slopes.rho(), fp.slopes.rho());
    }

    #[test]
    fn quad_from_fiber_rejects_fully_degenerate_points() {
        let slopes = FiberSlopes::exact((3, 4), (4, 3)).unwrap();
        let fp = exact_point(&slopes, (0, 1), (0, 1));
        assert!(matches!(
            quad_from_fiber(&fp),
            Err(FiberError::Degenerate(_))
        ));
    }

    #[test]
    fn roundtrip_recovers_fiber_coordinates() {
        let slopes = FiberSlopes::approx(0.75, 4.0 / 3.0).unwrap();
        let fp = FiberPoint::new(slopes, Scalar::approx(2.0), Scalar::approx(1.0)).unwrap();
        let quad = quad_from_fiber(&fp).unwrap();
        let emb = fiber_from_quad(&quad).unwrap();
        assert!(approx_eq(emb.point.slopes.rho().to_f64(), 0.75, 1e-9));
        assert!(approx_eq(
            emb.point.slopes.sigma().to_f64(),
            4.0 / 3.0,
            1e-9
        ));
        assert!(approx_eq(emb.point.x.to_f64(), 2.0, 1e-9));
        assert!(approx_eq(emb.point.y.to_f64(), 1.0, 1e-9));

        // The same quad pre-rotated by 17 degrees gives the same coordinates.
        let th = 17.0f64.to_radians();
        let (s, c) = th.sin_cos();
        let rotated: Vec<Point2> = quad
            .vertices()
            .iter()
            .map(|p| {
                let (x, y) = (p.x.to_f64(), p.y.to_f64());
                Point2::approx(c * x - s * y, s * x + c * y)
            })
            .collect();
        let rq = PlanarQuad::new([
            rotated[0].clone(),
            rotated[1].clone(),
            rotated[2].clone(),
            rotated[3].clone(),
        ])
        .unwrap();
        let emb2 = fiber_from_quad(&rq).unwrap();
        assert!(approx_eq(emb2.point.slopes.rho().to_f64(), 0.75, 1e-9));
        assert!(approx_eq(
            emb2.point.slopes.sigma().to_f64(),
            4.0 / 3.0,
            1e-9
        ));
        assert!(approx_eq(emb2.point.x.to_f64(), 2.0, 1e-9));
        assert!(approx_eq(emb2.point.y.to_f64(), 1.0, 1e-9));
    }

    #[test]
    fn trapezoid_is_non_generic() {
        // Arcs with s₂ = s₄ make sides 1 and 3 parallel.
        let q = CircleQuad::new(2.0, 0.3, [1.0, 1.2, 2.0 * PI - 2.2 - 1.2, 1.2]).unwrap();
        let v = q.vertices();
        let pq = PlanarQuad::new(v).unwrap();
        assert!(matches!(fiber_from_quad(&pq), Err(FiberError::NonGeneric)));
    }

    #[test]
    fn non_cyclic_quad_is_rejected() {
        let pq = PlanarQuad::new([
            Point2::approx(0.0, 0.0),
            Point2::approx(2.0, 0.1),
            Point2::approx(2.3, 1.9),
            Point2::approx(-0.4, 1.4),
        ])
        .unwrap();
        assert!(matches!(
            fiber_from_quad(&pq),
            Err(FiberError::NotCyclic(_))
        ));
    }

    #[test]
    fn consistency_with_circle_quad_metrics() {
        // Convex fiber quads re-circumscribed as CircleQuads must agree on
        // side and area magnitudes, across the cone and across slope pairs.
        for (rho, sigma) in [(0.75, 4.0 / 3.0), (0.75, 5.0 / 12.0), (1.9, 0.31)] {
            let fiber = Fiber::new(FiberSlopes::approx(rho, sigma).unwrap()).unwrap();
            let mid = rho + sigma;
            for (scale, spread) in [(0.5, 0.0), (1.0, 0.2), (2.3, -0.3), (4.0, 0.45)] {
                // Walk along and around the cone midline y = (ρ+σ)/2·x.
                let x = 2.0 * scale;
                let y = scale * mid * (1.0 + spread * 0.5);
                let (xs, ys) = (Scalar::approx(x), Scalar::approx(y));
                let verts = fiber.vertices(&xs, &ys).unwrap();
                let mut pts = verts.clone();
                if signed_area(&pts).to_f64() < 0.0 {
                    pts.reverse();
                }
                let cq = match CircleQuad::circumscribe(&pts, 1e-9) {
                    Ok(cq) => cq,
                    // Off-midline samples may leave the convex cone; the
                    // consistency claim only covers convex configurations.
                    Err(_) => continue,
                };
                let sides = fiber.signed_sides(&xs, &ys).unwrap();
                let m = cq.metrics();
                let mut fiber_sides = [
                    sides.a.to_f64().abs(),
                    sides.b.to_f64().abs(),
                    sides.c.to_f64().abs(),
                    sides.d.to_f64().abs(),
                ];
                let mut circle_sides = m.sides;
                fiber_sides.sort_by(|p, q| p.partial_cmp(q).unwrap());
                circle_sides.sort_by(|p, q| p.partial_cmp(q).unwrap());
                for (f, c) in fiber_sides.iter().zip(circle_sides.iter()) {
                    assert!(approx_eq(*f, *c, 1e-10));
                }
                assert!(approx_eq(sides.area.to_f64().abs(), m.area.abs(), 1e-10));
            }
        }
    }

    #[test]
    fn c_constancy_sweep_in_approximate_mode() {
        // 10³ random points per slope pair, axes excluded: C stays within
        // 1e-10 of 1 wherever B² does not vanish.
        for (rho, sigma) in [
            (0.75, 5.0 / 12.0),
            (0.75, 8.0 / 15.0),
            (5.0 / 12.0, 8.0 / 15.0),
            (0.75, 4.0 / 3.0),
        ] {
            let fiber = Fiber::new(FiberSlopes::approx(rho, sigma).unwrap()).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(0xc0);
            let mut worst = 0.0f64;
            for _ in 0..1000 {
                let draw = |rng: &mut ChaCha8Rng| {
                    let v: f64 = rng.random_range(0.25..5.0);
                    if rng.random_range(0..2) == 0 {
                        v
                    } else {
                        -v
                    }
                };
                let (x, y) = (draw(&mut rng), draw(&mut rng));
                let sides = fiber
                    .signed_sides(&Scalar::approx(x), &Scalar::approx(y))
                    .unwrap();
                if let Some(c) = sides.ratio_c() {
                    worst = worst.max((c.to_f64() - 1.0).abs());
                }
            }
            assert!(
                worst <= tol::C_IDENTITY_TOL,
                "slopes ({rho}, {sigma}): max |C-1| = {worst:e}"
            );
        }
    }

    proptest! {
        #[test]
        fn butterfly_facts_hold_exactly_on_the_axes(k in 1i64..6, on_x in proptest::bool::ANY) {
            let slopes = FiberSlopes::exact((3, 4), (5, 12)).unwrap();
            let fiber = Fiber::new(slopes).unwrap();
            let (x, y) = if on_x {
                (Scalar::exact_int(k), Scalar::exact_int(0))
            } else {
                (Scalar::exact_int(0), Scalar::exact_int(-k))
            };
            let s = fiber.signed_sides(&x, &y).unwrap();
            prop_assert!(s.area.is_zero());
            prop_assert_eq!(s.a.abs(), s.c.abs());
            prop_assert_eq!(s.b.abs(), s.d.abs());
            prop_assert_eq!(&s.a * &s.b, -&(&s.c * &s.d));
        }

        #[test]
        fn c_equals_one_at_random_rational_points(
            xn in -40i64..40,
            yn in -40i64..40,
            xd in 1i64..7,
            yd in 1i64..7,
        ) {
            prop_assume!(xn != 0 && yn != 0);
            let slopes = FiberSlopes::exact((3, 4), (8, 15)).unwrap();
            let fiber = Fiber::new(slopes).unwrap();
            let sides = fiber
                .signed_sides(&Scalar::exact_ratio(xn, xd), &Scalar::exact_ratio(yn, yd))
                .unwrap();
            if let Some(c) = sides.ratio_c() {
                prop_assert_eq!(c, Scalar::exact_int(1));
            }
        }

        #[test]
        fn approx_and_exact_sides_agree(xn in -20i64..20, yn in -20i64..20) {
            // 3/4 and 15/8 are Pythagorean and exactly representable in f64,
            // so both modes see identical inputs.
            let ex = Fiber::new(FiberSlopes::exact((3, 4), (15, 8)).unwrap()).unwrap();
            let ap = Fiber::new(FiberSlopes::approx(0.75, 1.875).unwrap()).unwrap();
            let se = ex
                .signed_sides(&Scalar::exact_int(xn), &Scalar::exact_int(yn))
                .unwrap();
            let sa = ap
                .signed_sides(&Scalar::approx(xn as f64), &Scalar::approx(yn as f64))
                .unwrap();
            // Values that vanish exactly (degenerate lines through lattice
            // points) come back as rounding dust in f64, so compare against
            // the configuration scale rather than the value itself.
            let scale = 1.0f64
                .max(xn.unsigned_abs() as f64)
                .max(yn.unsigned_abs() as f64)
                * 10.0;
            for (e, a) in [
                (&se.a, &sa.a),
                (&se.b, &sa.b),
                (&se.c, &sa.c),
                (&se.d, &sa.d),
                (&se.area, &sa.area),
            ] {
                prop_assert!((e.to_f64() - a.to_f64()).abs() <= tol::REL_TOL * scale);
            }
        }
    }
}
