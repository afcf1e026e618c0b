//! Centralized numerical tolerances.
//!
//! Every threshold the library applies is named here, documented with its
//! justification, and used nowhere else as a bare literal. Tests reference
//! these constants so that tightening a tolerance is a one-line change, and
//! the geometry solver additionally accepts an explicit [`Tolerances`]
//! bundle for callers that need stricter gates.

/// Maximum accepted diffraction-law residual `|ŝ′·ê − ŝ·ê|` on a solution.
///
/// The residual equals the absolute slope of the path length with respect to
/// the diffraction-point coordinate, so this bounds the distance from true
/// stationarity. `1e-9` keeps solutions at double precision while leaving
/// two orders of headroom over accumulated rounding at building scale.
pub const LAW_RESIDUAL_TOL: f64 = 1e-9;

/// Maximum deviation from unit norm accepted for direction vectors.
///
/// Unit vectors produced by normalizing double-precision inputs carry
/// relative error of a few ULP; `1e-12` admits them while rejecting
/// unnormalized inputs.
pub const UNIT_NORM_TOL: f64 = 1e-12;

/// Slack applied when testing the convex weight against `[0, 1]`.
///
/// Solutions with `lambda` within this margin outside the interval are
/// clamped onto it; beyond the margin the geometry is a corner case.
pub const LAMBDA_CLAMP_TOL: f64 = 1e-9;

/// Relative threshold below which the quadratic's leading coefficient is
/// treated as zero: `|a| < QUAD_DEGENERACY_TOL · max(|b|, |c|)`.
///
/// The leading coefficient vanishes exactly when the anchor and node are
/// equidistant (in the squared radial sense) from the edge line; at double
/// precision the comparison must be relative to the surviving coefficients.
pub const QUAD_DEGENERACY_TOL: f64 = 1e-12;

/// Relative threshold for declaring the discriminant negative:
/// `disc < −DISCRIMINANT_REL_TOL · max(b², |4ac|)` reports no real root.
///
/// The discriminant scales like the fourth power of scene coordinates, so an
/// absolute test would misclassify legitimate double roots whose rounding
/// noise is many orders above 1e-12; smaller negative values are clamped to
/// zero instead.
pub const DISCRIMINANT_REL_TOL: f64 = 1e-12;

/// Relative discriminant size below which the two quadratic roots are
/// treated as coincident and gradient evaluation switches from the explicit
/// root-branch formula (which divides by `√disc`) to implicit
/// differentiation of the stationarity condition.
pub const DOUBLE_ROOT_REL_TOL: f64 = 1e-9;

/// Newton polish iterations applied to the selected quadratic root.
///
/// The stationarity function is strictly monotone in the diffraction-point
/// coordinate, so a handful of guarded Newton steps restores full double
/// precision after cancellation in the quadratic formula.
pub const NEWTON_POLISH_ITERS: usize = 3;

/// Minimum `|cos((ψ±ψ′)/2)|` before the Keller coefficients are declared to
/// be on a shadow boundary.
pub const SHADOW_COS_TOL: f64 = 1e-6;

/// Minimum `sin γ₀` for diffraction-coefficient evaluation; below this the
/// incidence is grazing and the edge-fixed frame degenerates.
pub const GRAZING_SIN_TOL: f64 = 1e-9;

/// Minimum cross-product norm `‖ê×ŝ‖` for ray-frame construction.
pub const GRAZING_CROSS_TOL: f64 = 1e-12;

/// Convex-weight distance from an endpoint below which the path length is
/// reported non-differentiable.
pub const ENDPOINT_TOL: f64 = 1e-12;

/// Rank test on singular values: `σᵢ < RANK_SV_REL_TOL · σ₁` counts as zero.
pub const RANK_SV_REL_TOL: f64 = 1e-9;

/// Condition number of the Fisher information above which reports carry the
/// ill-conditioned warning flag (bounds still emitted).
pub const ILL_CONDITIONED_KAPPA: f64 = 1e12;

/// Nonlinear-least-squares convergence: step length below this (meters)
/// terminates the iteration.
pub const NLS_STEP_TOL: f64 = 1e-8;

/// Nonlinear-least-squares convergence: weighted-gradient norm below this
/// terminates the iteration.
pub const NLS_GRAD_TOL: f64 = 1e-10;

/// Iteration cap for the nonlinear least-squares solver.
pub const NLS_MAX_ITERS: usize = 100;

/// Tolerance bundle for the diffraction-point solver.
///
/// [`Tolerances::default`] mirrors the module constants; construct a custom
/// bundle to tighten individual gates in tests or calibration runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// See [`LAW_RESIDUAL_TOL`].
    pub law_residual: f64,
    /// See [`LAMBDA_CLAMP_TOL`].
    pub lambda_clamp: f64,
    /// See [`QUAD_DEGENERACY_TOL`].
    pub quad_degeneracy: f64,
    /// See [`DISCRIMINANT_REL_TOL`].
    pub discriminant_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            law_residual: LAW_RESIDUAL_TOL,
            lambda_clamp: LAMBDA_CLAMP_TOL,
            quad_degeneracy: QUAD_DEGENERACY_TOL,
            discriminant_rel: DISCRIMINANT_REL_TOL,
        }
    }
}
