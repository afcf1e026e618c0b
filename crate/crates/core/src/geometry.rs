//! Edge-diffraction geometry: diffraction points, path lengths, and the
//! Keller-cone law for a horizontal half-plane edge.
//!
//! The scene convention is fixed: the wall lies in the plane `Y = 0`,
//! anchors sit outside at `y < 0`, nodes inside at `y > 0`, and the
//! diffracting window edges run parallel to the X-axis at height `z_e`.
//! A ray from an anchor diffracts at a point `Q` on the edge and continues
//! to the node; `Q` is located by Fermat's principle — it is the stationary
//! point of the total path length, which is equivalent to the diffraction
//! law: the diffracted ray leaves on the Keller cone, making the same angle
//! with the edge as the incident ray.
//!
//! The stationary point is the root of a quadratic in the convex weight λ
//! along the edge. This module solves that quadratic, selects the physical
//! root by its diffraction-law residual, polishes it with a few Newton steps
//! on the stationarity function (which is strictly monotone in the
//! diffraction-point coordinate), and reports the split into outside and
//! inside path lengths.
//!
//! # Example
//!
//! ```
//! use edgeloc_core::geometry::{build_edge_frame, solve_diffraction_point, EdgeKind, Point3};
//!
//! // X-symmetric scene: anchor and node share x = 0, so the diffraction
//! // point must sit at x = 0 on the edge.
//! let edge = build_edge_frame(EdgeKind::Upper, -10.0, 10.0, 10.0).unwrap();
//! let anchor = Point3::new(0.0, -10.0, 0.0);
//! let node = Point3::new(0.0, 10.0, 9.0);
//! let sol = solve_diffraction_point(anchor, node, &edge).unwrap();
//!
//! assert!(sol.q.x.abs() < 1e-12);
//! assert!((sol.opl - 200f64.sqrt()).abs() < 1e-12);
//! assert!((sol.ipl - 101f64.sqrt()).abs() < 1e-12);
//! ```

use crate::error::{Error, Result};
use crate::tolerances::{self, Tolerances};

// ---------------------------------------------------------------------------
// Basic linear algebra types
// ---------------------------------------------------------------------------

/// A position in 3D space. Coordinates in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3 {
    /// X coordinate (meters), along the wall.
    pub x: f64,
    /// Y coordinate (meters), through the wall; negative outside, positive inside.
    pub y: f64,
    /// Z coordinate (meters), up.
    pub z: f64,
}

/// A direction or displacement in 3D space. Components are dimensionless
/// for unit directions, meters for displacements.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    /// X component.
    pub x: f64,
    /// Y component.
    pub y: f64,
    /// Z component.
    pub z: f64,
}

impl Point3 {
    /// Creates a point from its coordinates (meters).
    #[must_use]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    /// Euclidean distance to another point (meters).
    #[must_use]
    pub fn distance_to(&self, other: Point3) -> f64 {
        (*self - other).norm()
    }

    /// True when all three coordinates are finite.
    #[must_use]
    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Vec3 {
    /// Creates a vector from its components.
    #[must_use]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    /// Dot product.
    #[must_use]
    pub fn dot(&self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// Cross product.
    #[must_use]
    pub fn cross(&self, other: Vec3) -> Vec3 {
        Vec3 {
            x: self.y * other.z - self.z * other.y,
            y: self.z * other.x - self.x * other.z,
            z: self.x * other.y - self.y * other.x,
        }
    }

    /// Euclidean norm.
    #[must_use]
    pub fn norm(&self) -> f64 {
        self.dot(*self).sqrt()
    }

    /// Returns the unit vector in this direction, or `None` for the zero
    /// vector (norm below `1e-300`).
    #[must_use]
    pub fn normalized(&self) -> Option<Vec3> {
        let n = self.norm();
        if n < 1e-300 {
            None
        } else {
            Some(*self * (1.0 / n))
        }
    }

    /// True when the norm is within [`tolerances::UNIT_NORM_TOL`] of one.
    #[must_use]
    pub fn is_unit(&self) -> bool {
        (self.norm() - 1.0).abs() <= tolerances::UNIT_NORM_TOL
    }
}

impl std::ops::Sub for Point3 {
    type Output = Vec3;
    fn sub(self, rhs: Point3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl std::ops::Add<Vec3> for Point3 {
    type Output = Point3;
    fn add(self, rhs: Vec3) -> Point3 {
        Point3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl std::ops::Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl std::ops::Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl std::ops::Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, rhs: f64) -> Vec3 {
        Vec3::new(self.x * rhs, self.y * rhs, self.z * rhs)
    }
}

impl std::ops::Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

// ---------------------------------------------------------------------------
// Edges
// ---------------------------------------------------------------------------

/// Which window edge a horizontal diffracting edge represents.
///
/// The two edges carry opposite edge-fixed frames so that the half plane
/// (the wall above or below the window opening) is always on the same side
/// of the frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    /// Top edge of the window opening; half plane extends upward.
    Upper,
    /// Bottom edge of the window opening; half plane extends downward.
    Lower,
}

/// Orthonormal edge-fixed frame: edge direction `ê`, half-plane normal
/// `n̂₀`, and in-plane tangent `t̂₀`, satisfying `t̂₀ = n̂₀ × ê` exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeFrame {
    /// Unit vector along the edge.
    pub e: Vec3,
    /// Unit normal of the half plane.
    pub n0: Vec3,
    /// Unit tangent in the half plane, perpendicular to the edge.
    pub t0: Vec3,
}

/// A horizontal diffracting edge in the wall plane `Y = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffractingEdge {
    /// X coordinate of the first endpoint (meters).
    pub x1: f64,
    /// X coordinate of the second endpoint (meters).
    pub x2: f64,
    /// Edge height (meters).
    pub z_e: f64,
    /// Upper or lower window edge.
    pub kind: EdgeKind,
    /// Edge-fixed orthonormal frame for this edge kind.
    pub frame: EdgeFrame,
}

impl DiffractingEdge {
    /// First endpoint as a point (meters).
    #[must_use]
    pub fn endpoint1(&self) -> Point3 {
        Point3::new(self.x1, 0.0, self.z_e)
    }

    /// Second endpoint as a point (meters).
    #[must_use]
    pub fn endpoint2(&self) -> Point3 {
        Point3::new(self.x2, 0.0, self.z_e)
    }
}

/// Builds a horizontal diffracting edge with the canonical frame for its
/// kind: the lower edge carries `ê = −x̂`, `n̂₀ = −ŷ`, `t̂₀ = −ẑ`; the upper
/// edge carries `ê = x̂`, `n̂₀ = −ŷ`, `t̂₀ = ẑ`. Both satisfy `t̂₀ = n̂₀ × ê`
/// exactly in double precision (the components are ±1 and 0).
///
/// # Errors
///
/// [`Error::DegenerateEdge`] when `x1 == x2`; [`Error::InvalidGeometry`]
/// when any argument is non-finite.
pub fn build_edge_frame(kind: EdgeKind, x1: f64, x2: f64, z_e: f64) -> Result<DiffractingEdge> {
    if !(x1.is_finite() && x2.is_finite() && z_e.is_finite()) {
        return Err(Error::invalid("edge parameters must be finite"));
    }
    if x1 == x2 {
        return Err(Error::DegenerateEdge);
    }
    let frame = match kind {
        EdgeKind::Lower => EdgeFrame {
            e: Vec3::new(-1.0, 0.0, 0.0),
            n0: Vec3::new(0.0, -1.0, 0.0),
            t0: Vec3::new(0.0, 0.0, -1.0),
        },
        EdgeKind::Upper => EdgeFrame {
            e: Vec3::new(1.0, 0.0, 0.0),
            n0: Vec3::new(0.0, -1.0, 0.0),
            t0: Vec3::new(0.0, 0.0, 1.0),
        },
    };
    Ok(DiffractingEdge {
        x1,
        x2,
        z_e,
        kind,
        frame,
    })
}

// ---------------------------------------------------------------------------
// Diffraction-point solutions
// ---------------------------------------------------------------------------

/// A solved diffraction geometry for one anchor–edge–node triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffractionSolution {
    /// Diffraction point on the edge (meters).
    pub q: Point3,
    /// Convex weight: `q = λ·X₁ + (1−λ)·X₂` with `λ ∈ [0, 1]`.
    pub lambda: f64,
    /// Outside path length: anchor → `q` (meters).
    pub opl: f64,
    /// Inside path length: `q` → node (meters).
    pub ipl: f64,
    /// Total path length `opl + ipl` (meters).
    pub path_length: f64,
    /// Keller-cone half-angle `γ₀ = arccos(|ŝ′·ê|)` (radians, in `[0, π/2]`).
    pub gamma0: f64,
}

impl DiffractionSolution {
    /// Unit direction of the incident ray, anchor → diffraction point.
    #[must_use]
    pub fn incident_direction(&self, anchor: Point3) -> Vec3 {
        (self.q - anchor) * (1.0 / self.opl)
    }

    /// Unit direction of the diffracted ray, diffraction point → node.
    #[must_use]
    pub fn diffracted_direction(&self, node: Point3) -> Vec3 {
        (node - self.q) * (1.0 / self.ipl)
    }
}

/// Extra algebraic context kept alongside a solution so that closed-form
/// differentiation can reuse the solver's quadratic and branch choice.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SolveDetail {
    pub solution: DiffractionSolution,
    /// Quadratic coefficients of `aλ² + bλ + c = 0`.
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Discriminant clamped at zero, and its magnitude scale `max(b², |4ac|)`.
    pub disc: f64,
    pub scale: f64,
    /// True when the accepted root is `λ = (−b + √disc)/(2a)`.
    pub branch_plus: bool,
    /// True when the quadratic degenerated (|a| below tolerance) and a
    /// linear or symmetric fallback produced the starting candidate.
    pub degenerate: bool,
}

/// Stationarity function of the total path length with respect to the
/// diffraction-point x-coordinate, and the two path segments at that point:
/// `F(q_x) = (q_x − xₐ)/OPL − (xₙ − q_x)/IPL`.
///
/// `F` is also exactly the signed diffraction-law residual `ŝ′·x̂ − ŝ·x̂`,
/// so driving it to zero enforces the Keller-cone law. Its derivative
/// `F′ = ρₐ²/OPL³ + ρₙ²/IPL³` is strictly positive whenever the anchor and
/// node are off the edge line, which makes Newton iteration safe.
fn stationarity(q_x: f64, xa: f64, ra2: f64, xn: f64, rn2: f64) -> (f64, f64, f64) {
    let opl = ((q_x - xa) * (q_x - xa) + ra2).sqrt();
    let ipl = ((xn - q_x) * (xn - q_x) + rn2).sqrt();
    ((q_x - xa) / opl - (xn - q_x) / ipl, opl, ipl)
}

fn stationarity_slope(ra2: f64, rn2: f64, opl: f64, ipl: f64) -> f64 {
    ra2 / (opl * opl * opl) + rn2 / (ipl * ipl * ipl)
}

/// Solves for the diffraction point of the anchor→edge→node path using the
/// default [`Tolerances`].
///
/// The accepted solution satisfies the diffraction law with residual
/// `|ŝ′·ê − ŝ·ê| ≤` [`tolerances::LAW_RESIDUAL_TOL`], has `λ ∈ [0, 1]`, and
/// splits the total length into `opl` (anchor side) and `ipl` (node side).
///
/// # Errors
///
/// - [`Error::InvalidGeometry`] unless `anchor.y < 0 < node.y` (the scene
///   convention; coplanar points with `y = 0` are rejected) and all
///   coordinates are finite.
/// - [`Error::CornerDiffraction`] when the stationary point lies beyond the
///   edge endpoints (`λ ∉ [0, 1]` after the clamp slack).
/// - [`Error::NoSolution`] when the quadratic has no real root or no root
///   reproduces the diffraction law.
pub fn solve_diffraction_point(
    anchor: Point3,
    node: Point3,
    edge: &DiffractingEdge,
) -> Result<DiffractionSolution> {
    solve_diffraction_point_with(anchor, node, edge, &Tolerances::default())
}

/// [`solve_diffraction_point`] with an explicit tolerance bundle.
pub fn solve_diffraction_point_with(
    anchor: Point3,
    node: Point3,
    edge: &DiffractingEdge,
    tol: &Tolerances,
) -> Result<DiffractionSolution> {
    solve_detail(anchor, node, edge, tol).map(|d| d.solution)
}

pub(crate) fn solve_detail(
    anchor: Point3,
    node: Point3,
    edge: &DiffractingEdge,
    tol: &Tolerances,
) -> Result<SolveDetail> {
    if !anchor.is_finite() || !node.is_finite() {
        return Err(Error::invalid("anchor and node coordinates must be finite"));
    }
    if !(anchor.y < 0.0) {
        return Err(Error::invalid(
            "anchor must lie strictly outside the wall (y < 0)",
        ));
    }
    if !(node.y > 0.0) {
        return Err(Error::invalid(
            "node must lie strictly inside the wall (y > 0)",
        ));
    }

    let (x1, x2, ze) = (edge.x1, edge.x2, edge.z_e);
    let (xa, ya, za) = (anchor.x, anchor.y, anchor.z);
    let (xn, yn, zn) = (node.x, node.y, node.z);

    // Squared radial distances from the edge line (y and z offsets only).
    let ra2 = ya * ya + (ze - za) * (ze - za);
    let rn2 = yn * yn + (ze - zn) * (ze - zn);

    // Quadratic aλ² + bλ + c = 0 for the convex weight λ along the edge.
    let dx12 = x1 - x2;
    let a = dx12 * dx12 * (rn2 - ra2);
    let b = 2.0 * dx12 * ((x2 - xa) * rn2 - (x2 - xn) * ra2);
    let c = (x2 - xa) * (x2 - xa) * rn2 - (x2 - xn) * (x2 - xn) * ra2;

    // Collect starting candidates for q_x. Each is Newton-polished before
    // the diffraction-law residual decides between them, so candidates only
    // need to be near the stationary point, not exact.
    let mut candidates: [f64; 2] = [f64::NAN; 2];
    let mut n_cand = 0;
    let mut disc = 0.0;
    let mut scale = 0.0;
    // `<=` so the fully symmetric scene (a = b = c = 0 exactly, threshold 0)
    // also lands here instead of producing 0/0 roots.
    let degenerate = a.abs() <= tol.quad_degeneracy * b.abs().max(c.abs());
    if degenerate {
        if b.abs() <= tol.quad_degeneracy * c.abs().max(1.0) {
            // a ≈ b ≈ 0 happens only in the fully symmetric configuration
            // (equal radial distances and xₐ = xₙ); the stationary point is
            // midway by symmetry.
            candidates[0] = 0.5 * (xa + xn);
        } else {
            let lam = -c / b;
            candidates[0] = x2 + lam * dx12;
        }
        n_cand = 1;
    } else {
        scale = (b * b).max((4.0 * a * c).abs());
        let raw_disc = b * b - 4.0 * a * c;
        if raw_disc < -tol.discriminant_rel * scale {
            return Err(Error::NoSolution);
        }
        disc = raw_disc.max(0.0);
        let sq = disc.sqrt();
        for lam in [(-b + sq) / (2.0 * a), (-b - sq) / (2.0 * a)] {
            candidates[n_cand] = x2 + lam * dx12;
            n_cand += 1;
        }
    }

    // Polish each candidate with a few Newton steps on the stationarity
    // function (strictly monotone, slope > 0), then keep the candidate with
    // the smallest diffraction-law residual; ties go to the shorter path.
    // Squaring during the quadratic derivation introduces one spurious root
    // whose residual is ≈ 2·cos γ₀, so the residual separates the roots
    // except near perpendicular incidence, where both polish to the same
    // stationary point anyway.
    let mut best: Option<(f64, f64, f64, f64, f64)> = None; // (|F|, p, q_x, opl, ipl)
    for &start in candidates.iter().take(n_cand) {
        let mut q_x = start;
        if !q_x.is_finite() {
            continue;
        }
        let (mut f, mut opl, mut ipl) = stationarity(q_x, xa, ra2, xn, rn2);
        for _ in 0..tolerances::NEWTON_POLISH_ITERS {
            if f == 0.0 {
                break;
            }
            let slope = stationarity_slope(ra2, rn2, opl, ipl);
            q_x -= f / slope;
            let next = stationarity(q_x, xa, ra2, xn, rn2);
            f = next.0;
            opl = next.1;
            ipl = next.2;
        }
        let p = opl + ipl;
        let better = match best {
            None => true,
            Some((bf, bp, ..)) => {
                f.abs() < bf || (f.abs() <= tol.law_residual && bf <= tol.law_residual && p < bp)
            }
        };
        if better {
            best = Some((f.abs(), p, q_x, opl, ipl));
        }
    }

    let (residual, _, q_x, _, _) = best.ok_or(Error::NoSolution)?;
    if residual > tol.law_residual {
        return Err(Error::NoSolution);
    }

    // Gate the convex weight, clamp the slack onto [0, 1], and re-evaluate
    // the segments at the clamped point. The clamp moves q_x by at most
    // lambda_clamp·|x₁−x₂|, a second-order (≤ F′·Δq²/2) path-length change.
    let lambda_raw = (q_x - x2) / dx12;
    if lambda_raw < -tol.lambda_clamp || lambda_raw > 1.0 + tol.lambda_clamp {
        return Err(Error::CornerDiffraction { lambda: lambda_raw });
    }
    let lambda = lambda_raw.clamp(0.0, 1.0);
    let q_x = x2 + lambda * dx12;
    let (_, opl, ipl) = stationarity(q_x, xa, ra2, xn, rn2);

    let q = Point3::new(q_x, 0.0, ze);
    let s_in = (q - anchor) * (1.0 / opl);
    let cos_g = s_in.dot(edge.frame.e).abs().clamp(0.0, 1.0);
    let solution = DiffractionSolution {
        q,
        lambda,
        opl,
        ipl,
        path_length: opl + ipl,
        gamma0: cos_g.acos(),
    };

    // Record which algebraic branch the accepted root came from so that
    // closed-form differentiation can use the matching ± sign.
    let branch_plus = if degenerate {
        false
    } else {
        let sq = disc.sqrt();
        let lam_plus = (-b + sq) / (2.0 * a);
        let lam_minus = (-b - sq) / (2.0 * a);
        (lambda - lam_plus).abs() <= (lambda - lam_minus).abs()
    };

    Ok(SolveDetail {
        solution,
        a,
        b,
        c,
        disc,
        scale,
        branch_plus,
        degenerate,
    })
}

// ---------------------------------------------------------------------------
// Building model
// ---------------------------------------------------------------------------

/// Solves the through-window diffraction path in the simplified building
/// model, where the window edge tracks the node's floor height: the upper
/// edge sits at `z_e = zₙ + w/2` and the lower at `z_e = zₙ − w/2` for
/// window height `w`.
///
/// The returned inside path length therefore always equals
/// `√((xₙ−q_x)² + yₙ² + (w/2)²)`.
///
/// # Errors
///
/// [`Error::InvalidGeometry`] for `window_w ≤ 0` or wall-side violations;
/// otherwise propagates [`solve_diffraction_point`] errors.
pub fn building_path_length(
    anchor: Point3,
    node: Point3,
    window_w: f64,
    edge_kind: EdgeKind,
    x1: f64,
    x2: f64,
) -> Result<DiffractionSolution> {
    building_detail(anchor, node, window_w, edge_kind, x1, x2, &Tolerances::default())
        .map(|d| d.solution)
}

pub(crate) fn building_detail(
    anchor: Point3,
    node: Point3,
    window_w: f64,
    edge_kind: EdgeKind,
    x1: f64,
    x2: f64,
    tol: &Tolerances,
) -> Result<SolveDetail> {
    if !(window_w > 0.0) || !window_w.is_finite() {
        return Err(Error::invalid("window height must be positive and finite"));
    }
    let z_e = match edge_kind {
        EdgeKind::Upper => node.z + 0.5 * window_w,
        EdgeKind::Lower => node.z - 0.5 * window_w,
    };
    let edge = build_edge_frame(edge_kind, x1, x2, z_e)?;
    solve_detail(anchor, node, &edge, tol)
}

// ---------------------------------------------------------------------------
// Keller cone
// ---------------------------------------------------------------------------

/// Half-angle of the Keller cone: `γ₀ = arccos(|ŝ′·ê|) ∈ [0, π/2]`.
///
/// # Errors
///
/// [`Error::InvalidVector`] unless both arguments are unit-norm within
/// [`tolerances::UNIT_NORM_TOL`].
pub fn keller_cone_angle(incident: Vec3, edge: Vec3) -> Result<f64> {
    if !incident.is_unit() || !edge.is_unit() {
        return Err(Error::InvalidVector);
    }
    Ok(incident.dot(edge).abs().clamp(0.0, 1.0).acos())
}
