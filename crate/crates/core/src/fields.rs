//! Diffracted-field evaluation: edge-fixed ray frames, soft/hard Keller
//! coefficients (exact and small-angle approximations), and the
//! upper/lower-edge power ratio.
//!
//! A diffracted ray is described in two orthonormal frames tied to the edge
//! direction `ê`: the incident pair `(φ̂′, β̂₀′, ŝ′)` and the diffracted pair
//! `(φ̂, β̂₀, ŝ)`. The incident field is decomposed onto `β̂₀′` (soft) and
//! `φ̂′` (hard) components, each is scaled by the corresponding complex
//! Keller coefficient, and the result propagates to the observation point
//! with cylindrical-wave spreading `1/√|s|` after the spherical `1/|s′|`
//! spreading of the incident leg.
//!
//! Angles `ψ′` and `ψ` measure the incident and diffracted directions
//! around the half plane, in the plane perpendicular to the edge; the
//! coefficients diverge on shadow boundaries (`cos((ψ±ψ′)/2) → 0`), which
//! this module reports as an error rather than regularizing.
//!
//! # Example
//!
//! ```
//! use edgeloc_core::fields::power_ratio;
//!
//! // At 60° elevation the upper-edge path carries 3× the lower-edge power.
//! let r = power_ratio(60f64.to_radians()).unwrap();
//! assert!((r - 3.0).abs() < 1e-12);
//! ```

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{
    building_path_length, DiffractingEdge, EdgeKind, Point3, Vec3,
};
use crate::tolerances;

// ---------------------------------------------------------------------------
// Complex vectors and fields
// ---------------------------------------------------------------------------

/// A complex-valued 3D field vector (V/m per component).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComplexVec3 {
    /// X component.
    pub x: Complex64,
    /// Y component.
    pub y: Complex64,
    /// Z component.
    pub z: Complex64,
}

impl ComplexVec3 {
    /// Creates a complex vector from its components.
    #[must_use]
    pub const fn new(x: Complex64, y: Complex64, z: Complex64) -> Self {
        ComplexVec3 { x, y, z }
    }

    /// Embeds a real vector.
    #[must_use]
    pub fn from_real(v: Vec3) -> Self {
        ComplexVec3 {
            x: Complex64::new(v.x, 0.0),
            y: Complex64::new(v.y, 0.0),
            z: Complex64::new(v.z, 0.0),
        }
    }

    /// Projection onto a real direction: `Σ component · direction`.
    #[must_use]
    pub fn dot_real(&self, dir: Vec3) -> Complex64 {
        self.x * dir.x + self.y * dir.y + self.z * dir.z
    }

    /// Squared field magnitude `Σ |component|²` (proportional to power).
    #[must_use]
    pub fn norm_sqr(&self) -> f64 {
        self.x.norm_sqr() + self.y.norm_sqr() + self.z.norm_sqr()
    }

    fn scaled(self, s: Complex64) -> Self {
        ComplexVec3 {
            x: self.x * s,
            y: self.y * s,
            z: self.z * s,
        }
    }

    fn plus(self, other: Self) -> Self {
        ComplexVec3 {
            x: self.x + other.x,
            y: self.y + other.y,
            z: self.z + other.z,
        }
    }
}

/// The pair of edge-fixed ray frames for one diffraction event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayFrame {
    /// Incident transverse unit vector `φ̂′ = (−ê×ŝ′)/‖ê×ŝ′‖`.
    pub phi_p: Vec3,
    /// Incident polarization unit vector `β̂₀′ = φ̂′×ŝ′`.
    pub beta0_p: Vec3,
    /// Diffracted transverse unit vector `φ̂ = (ê×ŝ)/‖ê×ŝ‖`.
    pub phi: Vec3,
    /// Diffracted polarization unit vector `β̂₀ = φ̂×ŝ`.
    pub beta0: Vec3,
    /// Incident ray direction `ŝ′` (unit).
    pub s_p: Vec3,
    /// Diffracted ray direction `ŝ` (unit).
    pub s: Vec3,
}

/// Soft and hard Keller diffraction coefficients with the angles they were
/// evaluated at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffractionCoefficients {
    /// Soft (polarization along `β̂₀′`) coefficient (units m^½).
    pub d_s: Complex64,
    /// Hard (polarization along `φ̂′`) coefficient (units m^½).
    pub d_h: Complex64,
    /// Diffracted-side angle ψ around the half plane (radians).
    pub psi: f64,
    /// Incident-side angle ψ′ around the half plane (radians).
    pub psi_p: f64,
    /// Keller-cone half-angle γ₀ (radians).
    pub gamma0: f64,
}

/// The total diffracted electric field at an observation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffractedField {
    /// Complex field vector (V/m).
    pub e: ComplexVec3,
}

// ---------------------------------------------------------------------------
// Frames and angles
// ---------------------------------------------------------------------------

/// Builds the incident and diffracted edge-fixed ray frames:
/// `φ̂′ = (−ê×ŝ′)/‖ê×ŝ′‖`, `β̂₀′ = φ̂′×ŝ′`, `φ̂ = (ê×ŝ)/‖ê×ŝ‖`, `β̂₀ = φ̂×ŝ`.
///
/// # Errors
///
/// [`Error::InvalidVector`] for non-unit inputs; [`Error::GrazingRay`] when
/// either ray is within [`tolerances::GRAZING_CROSS_TOL`] of parallel to
/// the edge.
pub fn ray_frames(s_p: Vec3, s: Vec3, e: Vec3) -> Result<RayFrame> {
    if !s_p.is_unit() || !s.is_unit() || !e.is_unit() {
        return Err(Error::InvalidVector);
    }
    let cross_in = e.cross(s_p);
    let cross_out = e.cross(s);
    if cross_in.norm() <= tolerances::GRAZING_CROSS_TOL
        || cross_out.norm() <= tolerances::GRAZING_CROSS_TOL
    {
        return Err(Error::GrazingRay);
    }
    let phi_p = (-cross_in).normalized().ok_or(Error::GrazingRay)?;
    let phi = cross_out.normalized().ok_or(Error::GrazingRay)?;
    Ok(RayFrame {
        phi_p,
        beta0_p: phi_p.cross(s_p),
        phi,
        beta0: phi.cross(s),
        s_p,
        s,
    })
}

/// Sign convention used by the angle unwrapping: non-negative maps to +1.
fn sgn(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Measures the incident and diffracted angles `(ψ′, ψ)` around the half
/// plane, in the plane perpendicular to the edge.
///
/// The ray directions are first projected off the edge axis,
/// `ŝ_t = (ŝ − (ŝ·ê)ê)/‖·‖`, then unwrapped against the edge frame:
/// `ψ′ = π − (π − arccos(−ŝ_t′·t̂₀))·sgn(−ŝ_t′·n̂₀)` and
/// `ψ = π − (π − arccos(ŝ_t·t̂₀))·sgn(ŝ_t·n̂₀)`, which places both angles in
/// `[0, 2π)` measured from the half plane.
///
/// # Errors
///
/// [`Error::GrazingRay`] when a projected direction vanishes.
pub fn psi_angles(frame: &RayFrame, edge: &DiffractingEdge) -> Result<(f64, f64)> {
    let e = edge.frame.e;
    let n0 = edge.frame.n0;
    let t0 = edge.frame.t0;

    let project = |dir: Vec3| -> Result<Vec3> {
        let t = dir - e * dir.dot(e);
        if t.norm() <= tolerances::GRAZING_CROSS_TOL {
            return Err(Error::GrazingRay);
        }
        t.normalized().ok_or(Error::GrazingRay)
    };
    let st_p = project(frame.s_p)?;
    let st = project(frame.s)?;

    let psi_p = std::f64::consts::PI
        - (std::f64::consts::PI - (-st_p.dot(t0)).clamp(-1.0, 1.0).acos())
            * sgn(-st_p.dot(n0));
    let psi = std::f64::consts::PI
        - (std::f64::consts::PI - st.dot(t0).clamp(-1.0, 1.0).acos()) * sgn(st.dot(n0));
    Ok((psi_p, psi))
}

// ---------------------------------------------------------------------------
// Diffraction coefficients
// ---------------------------------------------------------------------------

/// The common complex prefactor of the Keller coefficients:
/// `A = −e^(−jπ/4) / (2√(2πk)·sin γ₀)` for wavenumber `k` (1/m).
///
/// # Errors
///
/// [`Error::GrazingRay`] when `sin γ₀ <` [`tolerances::GRAZING_SIN_TOL`];
/// [`Error::InvalidGeometry`] for a non-positive wavenumber.
pub fn keller_prefactor(gamma0: f64, wavenumber: f64) -> Result<Complex64> {
    if !(wavenumber > 0.0) {
        return Err(Error::invalid("wavenumber must be positive"));
    }
    let sin_g = gamma0.sin();
    if sin_g < tolerances::GRAZING_SIN_TOL {
        return Err(Error::GrazingRay);
    }
    let magnitude = 1.0 / (2.0 * (2.0 * std::f64::consts::PI * wavenumber).sqrt() * sin_g);
    Ok(-Complex64::from_polar(
        magnitude,
        -std::f64::consts::FRAC_PI_4,
    ))
}

/// Evaluates the soft and hard Keller coefficients for a thin half plane:
/// `D_{s,h} = A·[1/cos((ψ−ψ′)/2) ∓ 1/cos((ψ+ψ′)/2)]` with the soft
/// coefficient taking the minus sign and `A` from [`keller_prefactor`].
///
/// # Errors
///
/// [`Error::ShadowBoundary`] when either half-angle cosine is within
/// [`tolerances::SHADOW_COS_TOL`] of zero (the coefficients diverge there
/// and uniform-theory corrections are out of scope); [`Error::GrazingRay`]
/// at grazing cone angles.
pub fn keller_coefficients(
    psi_p: f64,
    psi: f64,
    gamma0: f64,
    wavenumber: f64,
) -> Result<DiffractionCoefficients> {
    let prefactor = keller_prefactor(gamma0, wavenumber)?;
    let cos_minus = ((psi - psi_p) / 2.0).cos();
    let cos_plus = ((psi + psi_p) / 2.0).cos();
    if cos_minus.abs() < tolerances::SHADOW_COS_TOL || cos_plus.abs() < tolerances::SHADOW_COS_TOL
    {
        return Err(Error::ShadowBoundary);
    }
    let term_minus = 1.0 / cos_minus;
    let term_plus = 1.0 / cos_plus;
    Ok(DiffractionCoefficients {
        d_s: prefactor * (term_minus - term_plus),
        d_h: prefactor * (term_minus + term_plus),
        psi,
        psi_p,
        gamma0,
    })
}

/// Small-opening approximations of the four edge coefficients at elevation
/// angle `θ`, as closed forms in `cos θ` times a caller-supplied prefactor
/// `A` (normally [`keller_prefactor`]):
///
/// - lower soft: `A·(−2√(1−cosθ)/cosθ)`
/// - upper soft: `A·( 2√(1+cosθ)/cosθ)`
/// - lower hard: `A·( 2√(1+cosθ)/cosθ)`
/// - upper hard: `A·(−2√(1−cosθ)/cosθ)`
///
/// Returned in the order `(ds_lower, ds_upper, dh_lower, dh_upper)`. The
/// soft-coefficient magnitude ratio reproduces [`power_ratio`]:
/// `|ds_upper/ds_lower|² = (1+cosθ)/(1−cosθ)`.
///
/// # Errors
///
/// [`Error::InvalidGeometry`] outside `0 < θ < π/2`;
/// [`Error::ShadowBoundary`] when `cos θ` is within
/// [`tolerances::SHADOW_COS_TOL`] of zero.
#[allow(clippy::type_complexity)]
pub fn approx_coefficients(
    theta: f64,
    prefactor_a: Complex64,
) -> Result<(Complex64, Complex64, Complex64, Complex64)> {
    if !(theta > 0.0 && theta < std::f64::consts::FRAC_PI_2) {
        return Err(Error::invalid("elevation angle must lie in (0, π/2)"));
    }
    let cos_t = theta.cos();
    if cos_t.abs() < tolerances::SHADOW_COS_TOL {
        return Err(Error::ShadowBoundary);
    }
    let minus_branch = -2.0 * (1.0 - cos_t).sqrt() / cos_t;
    let plus_branch = 2.0 * (1.0 + cos_t).sqrt() / cos_t;
    Ok((
        prefactor_a * minus_branch,
        prefactor_a * plus_branch,
        prefactor_a * plus_branch,
        prefactor_a * minus_branch,
    ))
}

// ---------------------------------------------------------------------------
// Field evaluation
// ---------------------------------------------------------------------------

/// Propagates an incident field through one diffraction event.
///
/// The incident field arrives at the edge with spherical spreading and
/// phase `e^(−jk|s′|)/|s′|`, is decomposed into soft (`β̂₀′`) and hard
/// (`φ̂′`) components, and leaves along the diffracted frame with edge
/// spreading `e^(−jk|s|)/√|s|`:
///
/// `E_d = [(−D_s)(E₀·β̂₀′)·β̂₀ + (−D_h)(E₀·φ̂′)·φ̂] · e^(−jk|s′|)/|s′| · e^(−jk|s|)/√|s|`
///
/// For an x-polarized incident field on the building edges the hard term
/// vanishes identically because `φ̂′` has no x-component there.
///
/// # Errors
///
/// [`Error::InvalidGeometry`] for non-positive path segments or wavenumber.
pub fn diffracted_field(
    e0: ComplexVec3,
    frame: &RayFrame,
    coeffs: &DiffractionCoefficients,
    s_p_len: f64,
    s_len: f64,
    wavenumber: f64,
) -> Result<DiffractedField> {
    if !(s_p_len > 0.0) || !(s_len > 0.0) {
        return Err(Error::invalid("path segment lengths must be positive"));
    }
    if !(wavenumber > 0.0) {
        return Err(Error::invalid("wavenumber must be positive"));
    }
    let spread_in = Complex64::from_polar(1.0 / s_p_len, -wavenumber * s_p_len);
    let e_soft = e0.dot_real(frame.beta0_p) * spread_in;
    let e_hard = e0.dot_real(frame.phi_p) * spread_in;
    let spread_out = Complex64::from_polar(1.0 / s_len.sqrt(), -wavenumber * s_len);
    let e = ComplexVec3::from_real(frame.beta0)
        .scaled(-coeffs.d_s * e_soft)
        .plus(ComplexVec3::from_real(frame.phi).scaled(-coeffs.d_h * e_hard))
        .scaled(spread_out);
    Ok(DiffractedField { e })
}

/// Full-field evaluation of one building diffraction path: solves the
/// geometry for the requested edge, builds frames and coefficients, and
/// propagates an incident field `e0` radiated from the anchor.
///
/// # Errors
///
/// Propagates geometry errors, [`Error::GrazingRay`], and
/// [`Error::ShadowBoundary`].
// Eight parameters: every one is an independent physical input of the
// scene, and bundling them would just add a throwaway struct at each call.
#[allow(clippy::too_many_arguments)]
pub fn building_diffracted_field(
    anchor: Point3,
    node: Point3,
    window_w: f64,
    edge_kind: EdgeKind,
    x1: f64,
    x2: f64,
    e0: ComplexVec3,
    wavenumber: f64,
) -> Result<DiffractedField> {
    let sol = building_path_length(anchor, node, window_w, edge_kind, x1, x2)?;
    let z_e = match edge_kind {
        EdgeKind::Upper => node.z + 0.5 * window_w,
        EdgeKind::Lower => node.z - 0.5 * window_w,
    };
    let edge = crate::geometry::build_edge_frame(edge_kind, x1, x2, z_e)?;
    let frame = ray_frames(
        sol.incident_direction(anchor),
        sol.diffracted_direction(node),
        edge.frame.e,
    )?;
    let (psi_p, psi) = psi_angles(&frame, &edge)?;
    let coeffs = keller_coefficients(psi_p, psi, sol.gamma0, wavenumber)?;
    diffracted_field(e0, &frame, &coeffs, sol.opl, sol.ipl, wavenumber)
}

/// Exact upper-to-lower diffracted power ratio in dB for an x-polarized
/// unit field: `10·log10(|E_upper|²/|E_lower|²)` with both edges evaluated
/// through the full field pipeline.
///
/// # Errors
///
/// Propagates [`building_diffracted_field`] errors from either edge.
pub fn exact_power_ratio_db(
    anchor: Point3,
    node: Point3,
    window_w: f64,
    x1: f64,
    x2: f64,
    wavenumber: f64,
) -> Result<f64> {
    let e0 = ComplexVec3::from_real(Vec3::new(1.0, 0.0, 0.0));
    let upper = building_diffracted_field(
        anchor,
        node,
        window_w,
        EdgeKind::Upper,
        x1,
        x2,
        e0,
        wavenumber,
    )?;
    let lower = building_diffracted_field(
        anchor,
        node,
        window_w,
        EdgeKind::Lower,
        x1,
        x2,
        e0,
        wavenumber,
    )?;
    Ok(10.0 * (upper.e.norm_sqr() / lower.e.norm_sqr()).log10())
}

// ---------------------------------------------------------------------------
// Power ratio
// ---------------------------------------------------------------------------

/// Upper-to-lower diffracted power ratio approximation at elevation angle
/// `θ` (radians): `(1 + cos θ)/(1 − cos θ)`.
///
/// Valid on `(0, π/2]`; the ratio is strictly decreasing in θ and reaches
/// 1 (0 dB) at θ = π/2, up to one floating-point rounding step.
///
/// # Errors
///
/// [`Error::Divergent`] for `θ ≤ 0` (the ratio grows without bound as the
/// elevation approaches zero); [`Error::InvalidGeometry`] for `θ > π/2`.
pub fn power_ratio(theta: f64) -> Result<f64> {
    if !(theta > 0.0) {
        return Err(Error::Divergent);
    }
    if theta > std::f64::consts::FRAC_PI_2 {
        return Err(Error::invalid("elevation angle must not exceed π/2"));
    }
    let cos_t = theta.cos();
    Ok((1.0 + cos_t) / (1.0 - cos_t))
}
