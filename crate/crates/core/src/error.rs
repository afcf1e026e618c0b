//! Unified error type for the geometry, field, bound, and estimator layers.
//!
//! Every fallible operation in this crate returns [`Result`]. Variants are
//! deliberately specific: callers routinely need to distinguish "the
//! diffraction point fell off the edge" (a per-sample condition that Monte
//! Carlo drivers count and skip) from "the inputs are malformed" (a caller
//! bug).

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors reported by geometry solvers, field evaluation, Fisher analysis,
/// and estimators.
#[derive(Debug, Clone, PartialEq, Error)]
#[non_exhaustive]
pub enum Error {
    /// Edge endpoints coincide (`x1 == x2`); the edge direction is undefined.
    #[error("degenerate edge: endpoints coincide (x1 == x2)")]
    DegenerateEdge,

    /// The stationary path point lies beyond the edge endpoints
    /// (convex weight outside `[0, 1]`); the path would diffract at a
    /// corner, which this model signals but never computes.
    #[error("diffraction point beyond edge endpoints (lambda = {lambda})")]
    CornerDiffraction {
        /// Convex weight of the out-of-range stationary point.
        lambda: f64,
    },

    /// The path-length quadratic has no real root (discriminant
    /// significantly negative).
    #[error("path-length quadratic has no real root")]
    NoSolution,

    /// A vector argument required to be unit-norm was not.
    #[error("vector argument is not unit-norm")]
    InvalidVector,

    /// Ray direction (anti-)parallel to the edge: the edge-fixed frame and
    /// diffraction coefficients are undefined at grazing incidence.
    #[error("grazing incidence: ray is parallel to the edge")]
    GrazingRay,

    /// Angles fall on (or numerically too near) a shadow boundary where
    /// the Keller coefficients diverge; uniform-theory corrections are out
    /// of scope.
    #[error("shadow boundary: diffraction coefficients diverge at these angles")]
    ShadowBoundary,

    /// A quantity diverges at the requested evaluation point
    /// (e.g. the power ratio as the elevation angle approaches zero).
    #[error("quantity diverges at the requested evaluation point")]
    Divergent,

    /// Inputs violate a documented geometric precondition (sides of the
    /// wall, positive lengths, finite coordinates, matching array lengths).
    #[error("invalid geometry: {reason}")]
    InvalidGeometry {
        /// Human-readable description of the violated precondition.
        reason: String,
    },

    /// The path length is not differentiable at the solution (convex weight
    /// pinned at an edge endpoint).
    #[error("path length not differentiable: diffraction point at an edge endpoint")]
    NonDifferentiable,

    /// The Fisher information matrix is rank-deficient; the 3D position is
    /// not identifiable from these measurements.
    #[error("position not identifiable: Fisher information rank {rank} < 3")]
    NotIdentifiable {
        /// Numerical rank of the ranging Jacobian.
        rank: usize,
    },

    /// The linear least-squares system is singular.
    #[error("degenerate geometry: linear system is singular")]
    DegenerateGeometry,
}

impl Error {
    /// Convenience constructor for [`Error::InvalidGeometry`].
    pub fn invalid(reason: impl Into<String>) -> Self {
        Error::InvalidGeometry {
            reason: reason.into(),
        }
    }
}
