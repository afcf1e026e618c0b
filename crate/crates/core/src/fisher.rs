//! Ranging bounds: delay CRLB, closed-form path-length Jacobian, Fisher
//! information, identifiability, and position error bounds.
//!
//! A node at `α = (xₙ, yₙ, zₙ)` is ranged by M anchors through the
//! upper-window-edge diffraction path (the dominating component under
//! x-polarized transmission). Each measured path length carries Gaussian
//! delay noise bounded below by the CRLB `1/(8π²β²·SNR)`, so the position
//! information is `J_α = (1/c²)·J·diag(8π²β²·SNR_j)·Jᵀ` where column `j` of
//! the 3×M Jacobian `J` is the gradient `∂p_j/∂α` — equivalently
//! `Σ_j g_j g_jᵀ / σ_j²` with the range noise floor `σ_j = c·√CRLB_j`.
//!
//! The gradient is evaluated in closed form by differentiating the
//! diffraction-point quadratic along the accepted root branch, with an
//! implicit-differentiation fallback where the two roots coincide (the
//! branch formula divides by the discriminant's square root, which vanishes
//! exactly in laterally symmetric scenes).
//!
//! # Example
//!
//! ```
//! use edgeloc_core::fisher::{build_fim, RangingModel};
//! use edgeloc_core::geometry::Point3;
//!
//! let anchors = [
//!     Point3::new(-10.0, -20.0, -10.0),
//!     Point3::new(0.0, -7.0, -20.0),
//!     Point3::new(10.0, -20.0, -10.0),
//! ];
//! let node = Point3::new(0.0, 10.0, 22.0);
//! let model = RangingModel::uniform(1.0e8, 10f64.powf(1.5), 3).unwrap();
//! let report = build_fim(&anchors, node, 2.0, -10.0, 10.0, &model).unwrap();
//!
//! assert_eq!(report.rank, 3);
//! assert!(report.peb_z <= report.peb_3d);
//! ```

use nalgebra::{Matrix3, Matrix3xX, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{building_detail, EdgeKind, Point3, Vec3};
use crate::tolerances::{self, Tolerances};
use crate::SPEED_OF_LIGHT;

// ---------------------------------------------------------------------------
// Ranging model
// ---------------------------------------------------------------------------

/// Signal model for time-of-flight ranging: effective bandwidth and
/// per-anchor SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct RangingModel {
    /// Effective (RMS) signal bandwidth β (Hz).
    pub bandwidth_beta: f64,
    /// Linear (not dB) post-processing SNR per anchor; `+∞` models
    /// noiseless ranging.
    pub snr_linear: Vec<f64>,
    /// Propagation speed (m/s); [`SPEED_OF_LIGHT`].
    pub c: f64,
}

impl RangingModel {
    /// Builds a model with one SNR entry per anchor.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidGeometry`] unless `bandwidth_beta > 0` is finite and
    /// every SNR is positive (`+∞` allowed, NaN rejected).
    pub fn new(bandwidth_beta: f64, snr_linear: Vec<f64>) -> Result<Self> {
        if !(bandwidth_beta > 0.0) || !bandwidth_beta.is_finite() {
            return Err(Error::invalid("bandwidth must be positive and finite"));
        }
        if snr_linear.is_empty() {
            return Err(Error::invalid("at least one SNR entry is required"));
        }
        if snr_linear.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::invalid("every SNR must be positive"));
        }
        Ok(RangingModel {
            bandwidth_beta,
            snr_linear,
            c: SPEED_OF_LIGHT,
        })
    }

    /// Builds a model with the same SNR for all `m` anchors.
    ///
    /// # Errors
    ///
    /// As [`RangingModel::new`].
    pub fn uniform(bandwidth_beta: f64, snr_linear: f64, m: usize) -> Result<Self> {
        RangingModel::new(bandwidth_beta, vec![snr_linear; m])
    }
}

/// Cramér–Rao lower bound on the delay estimate for anchor `anchor_index`:
/// `1/(8π²β²·SNR_j)` (seconds²). Returns 0 for infinite SNR.
///
/// # Panics
///
/// Panics when `anchor_index` is out of bounds.
#[must_use]
pub fn delay_crlb(model: &RangingModel, anchor_index: usize) -> f64 {
    let beta = model.bandwidth_beta;
    let snr = model.snr_linear[anchor_index];
    1.0 / (8.0 * std::f64::consts::PI.powi(2) * beta * beta * snr)
}

/// Range-domain noise floor for anchor `anchor_index`:
/// `σ_j = c·√CRLB_j` (meters).
///
/// # Panics
///
/// Panics when `anchor_index` is out of bounds.
#[must_use]
pub fn range_sigma(model: &RangingModel, anchor_index: usize) -> f64 {
    model.c * delay_crlb(model, anchor_index).sqrt()
}

// ---------------------------------------------------------------------------
// Path-length gradient
// ---------------------------------------------------------------------------

/// Closed-form gradient `(∂p/∂xₙ, ∂p/∂yₙ, ∂p/∂zₙ)` of the upper-edge
/// diffraction path length with respect to the node position
/// (dimensionless: meters per meter).
///
/// See [`path_gradient_edge`] for the lower-edge variant.
///
/// # Errors
///
/// Propagates geometry errors; [`Error::NonDifferentiable`] when the
/// diffraction point sits at an edge endpoint.
pub fn path_gradient(anchor: Point3, node: Point3, window_w: f64, x1: f64, x2: f64) -> Result<Vec3> {
    path_gradient_edge(anchor, node, window_w, EdgeKind::Upper, x1, x2)
}

/// [`path_gradient`] generalized to either window edge (the lower edge is
/// useful for sensitivity studies; bounds default to the dominating upper
/// edge).
///
/// The diffraction point `q_x(α)` is differentiated through the quadratic
/// root on the branch the solver accepted. Where the discriminant is too
/// small for the branch formula (double root), the gradient falls back to
/// implicit differentiation of the stationarity condition `F(q_x, α) = 0`,
/// which stays finite because `∂F/∂q_x > 0` strictly.
pub fn path_gradient_edge(
    anchor: Point3,
    node: Point3,
    window_w: f64,
    edge_kind: EdgeKind,
    x1: f64,
    x2: f64,
) -> Result<Vec3> {
    let tol = Tolerances::default();
    let detail = building_detail(anchor, node, window_w, edge_kind, x1, x2, &tol)?;
    let sol = detail.solution;
    if sol.lambda <= tolerances::ENDPOINT_TOL || sol.lambda >= 1.0 - tolerances::ENDPOINT_TOL {
        return Err(Error::NonDifferentiable);
    }

    let z_e = match edge_kind {
        EdgeKind::Upper => node.z + 0.5 * window_w,
        EdgeKind::Lower => node.z - 0.5 * window_w,
    };
    let (xa, ya, za) = (anchor.x, anchor.y, anchor.z);
    let (xn, yn) = (node.x, node.y);
    let dz = z_e - za;
    // The edge height tracks the node's z, so ρₐ² varies with zₙ while the
    // node-side offset is the constant w/2.
    let ra2 = ya * ya + dz * dz;
    let rn2 = yn * yn + 0.25 * window_w * window_w;
    let (q_x, opl, ipl) = (sol.q.x, sol.opl, sol.ipl);
    let dx12 = x1 - x2;

    // ∂q_x/∂(xₙ, yₙ, zₙ)
    let dq: [f64; 3] = if detail.degenerate
        || detail.disc < tolerances::DOUBLE_ROOT_REL_TOL * detail.scale
    {
        // Implicit differentiation of F(q_x, α) = 0 where
        // F = (q_x−xₐ)/OPL − (xₙ−q_x)/IPL.
        let opl3 = opl * opl * opl;
        let ipl3 = ipl * ipl * ipl;
        let df_dq = ra2 / opl3 + rn2 / ipl3;
        let df_dxn = -rn2 / ipl3;
        let df_dyn = (xn - q_x) * yn / ipl3;
        let df_dzn = -(q_x - xa) * dz / opl3;
        [-df_dxn / df_dq, -df_dyn / df_dq, -df_dzn / df_dq]
    } else {
        // Differentiate λ = (−b ± √(b²−4ac))/(2a) along the accepted branch.
        let (a, b, c) = (detail.a, detail.b, detail.c);
        let sq = detail.disc.sqrt();
        let sign = if detail.branch_plus { 1.0 } else { -1.0 };
        let lam = sol.lambda;
        let da = [0.0, 2.0 * yn * dx12 * dx12, -2.0 * dx12 * dx12 * dz];
        let db = [
            2.0 * dx12 * ra2,
            4.0 * yn * dx12 * (x2 - xa),
            -4.0 * dx12 * (x2 - xn) * dz,
        ];
        let dc = [
            2.0 * (x2 - xn) * ra2,
            2.0 * yn * (x2 - xa) * (x2 - xa),
            -2.0 * (x2 - xn) * (x2 - xn) * dz,
        ];
        let mut dq = [0.0; 3];
        for i in 0..3 {
            let dlam = (-db[i] + sign * (b * db[i] - 2.0 * c * da[i] - 2.0 * a * dc[i]) / sq)
                / (2.0 * a)
                - (lam / a) * da[i];
            dq[i] = dx12 * dlam;
        }
        dq
    };

    // Chain rule through q_x plus the direct terms. OPL carries a direct
    // zₙ-dependence through the edge height; IPL carries the direct xₙ and
    // yₙ dependences.
    let gx = (q_x - xa) * dq[0] / opl + (xn - q_x) * (1.0 - dq[0]) / ipl;
    let gy = (q_x - xa) * dq[1] / opl + (yn - (xn - q_x) * dq[1]) / ipl;
    let gz = ((q_x - xa) * dq[2] + dz) / opl - (xn - q_x) * dq[2] / ipl;
    Ok(Vec3::new(gx, gy, gz))
}

// ---------------------------------------------------------------------------
// Fisher information
// ---------------------------------------------------------------------------

/// Jacobian, Fisher information, rank verdict, and position error bounds
/// for one node against a set of anchors.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherReport {
    /// 3×M path-length Jacobian; column `j` is `∂p_j/∂α` (meters/meter).
    pub jacobian: Matrix3xX<f64>,
    /// 3×3 Fisher information matrix (1/m²), symmetric positive
    /// semidefinite.
    pub fim: Matrix3<f64>,
    /// Numerical rank of the Jacobian (equals the FIM rank).
    pub rank: usize,
    /// 3D position error bound `√trace(FIM⁻¹)` (meters).
    pub peb_3d: f64,
    /// Z-axis error bound `√(FIM⁻¹)[3,3]` (meters).
    pub peb_z: f64,
    /// Warning: FIM condition number exceeds
    /// [`tolerances::ILL_CONDITIONED_KAPPA`]; bounds are still emitted.
    pub ill_conditioned: bool,
}

/// Identifiability verdict from the Jacobian rank alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdentifiabilityVerdict {
    /// Jacobian has full rank 3; the FIM is invertible for any positive
    /// weights.
    Identifiable,
    /// Jacobian rank below 3; no weighting makes the position observable.
    RankDeficient {
        /// Numerical rank found.
        rank: usize,
    },
}

fn jacobian_columns(
    anchors: &[Point3],
    node: Point3,
    window_w: f64,
    edge_kind: EdgeKind,
    x1: f64,
    x2: f64,
) -> Result<Matrix3xX<f64>> {
    if anchors.is_empty() {
        return Err(Error::invalid("at least one anchor is required"));
    }
    let mut jac = Matrix3xX::zeros(anchors.len());
    for (j, &anchor) in anchors.iter().enumerate() {
        let g = path_gradient_edge(anchor, node, window_w, edge_kind, x1, x2)?;
        jac.set_column(j, &Vector3::new(g.x, g.y, g.z));
    }
    Ok(jac)
}

/// Sorted-descending singular values and the numerical rank under
/// [`tolerances::RANK_SV_REL_TOL`].
fn rank_of(jac: &Matrix3xX<f64>) -> usize {
    let mut svals: Vec<f64> = jac.clone().svd(false, false).singular_values.iter().copied().collect();
    svals.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let smax = svals.first().copied().unwrap_or(0.0);
    if smax <= 0.0 {
        return 0;
    }
    svals
        .iter()
        .filter(|s| **s >= tolerances::RANK_SV_REL_TOL * smax)
        .count()
}

/// Builds the Fisher report for the dominating upper-edge path.
///
/// # Errors
///
/// Geometry errors propagate per anchor; [`Error::NotIdentifiable`] when
/// the Jacobian rank is below 3 (the report would have no finite bounds);
/// [`Error::InvalidGeometry`] for anchor/SNR count mismatches or
/// non-finite weights.
pub fn build_fim(
    anchors: &[Point3],
    node: Point3,
    window_w: f64,
    x1: f64,
    x2: f64,
    model: &RangingModel,
) -> Result<FisherReport> {
    build_fim_edge(anchors, node, window_w, EdgeKind::Upper, x1, x2, model)
}

/// [`build_fim`] generalized to either window edge.
pub fn build_fim_edge(
    anchors: &[Point3],
    node: Point3,
    window_w: f64,
    edge_kind: EdgeKind,
    x1: f64,
    x2: f64,
    model: &RangingModel,
) -> Result<FisherReport> {
    if anchors.len() != model.snr_linear.len() {
        return Err(Error::invalid(
            "anchor count must match the model's SNR entries",
        ));
    }
    let jacobian = jacobian_columns(anchors, node, window_w, edge_kind, x1, x2)?;
    let rank = rank_of(&jacobian);
    if rank < 3 {
        return Err(Error::NotIdentifiable { rank });
    }

    let mut fim = Matrix3::zeros();
    for j in 0..anchors.len() {
        // Weight = 1/σ_j² with σ_j = c·√CRLB_j, i.e. 8π²β²·SNR_j / c².
        let weight = 1.0 / (model.c * model.c * delay_crlb(model, j));
        if !weight.is_finite() || weight <= 0.0 {
            return Err(Error::invalid(
                "bound evaluation requires finite positive SNR",
            ));
        }
        let g = jacobian.column(j);
        // Outer product first: its (i,j) and (j,i) entries are the same
        // product g_i·g_j, so scaling afterwards keeps the accumulated FIM
        // exactly symmetric (a Cholesky-friendly property).
        fim += (g * g.transpose()) * weight;
    }

    // Invert against the identity through the symmetric factorization; fall
    // back to a singular-value inverse if rounding pushed the FIM off
    // positive definiteness.
    let mut ill_conditioned = false;
    let inverse = match fim.cholesky() {
        Some(ch) => ch.inverse(),
        None => {
            ill_conditioned = true;
            let svd = fim.svd(true, true);
            let u = svd.u.ok_or(Error::NotIdentifiable { rank })?;
            let vt = svd.v_t.ok_or(Error::NotIdentifiable { rank })?;
            let mut inv_s = Matrix3::zeros();
            for i in 0..3 {
                let s = svd.singular_values[i];
                if s <= 0.0 {
                    return Err(Error::NotIdentifiable { rank });
                }
                inv_s[(i, i)] = 1.0 / s;
            }
            vt.transpose() * inv_s * u.transpose()
        }
    };

    let svals = fim.svd(false, false).singular_values;
    let smax = svals.iter().cloned().fold(0.0_f64, f64::max);
    let smin = svals.iter().cloned().fold(f64::INFINITY, f64::min);
    if smin <= 0.0 || smax / smin > tolerances::ILL_CONDITIONED_KAPPA {
        ill_conditioned = true;
    }

    Ok(FisherReport {
        rank,
        peb_3d: inverse.trace().sqrt(),
        peb_z: inverse[(2, 2)].sqrt(),
        ill_conditioned,
        jacobian,
        fim,
    })
}

/// Rank-only identifiability verdict (weight-independent: scaling columns
/// by positive noise weights cannot change the rank).
///
/// # Errors
///
/// Propagates per-anchor geometry errors.
pub fn identifiability(
    anchors: &[Point3],
    node: Point3,
    window_w: f64,
    x1: f64,
    x2: f64,
) -> Result<IdentifiabilityVerdict> {
    let jacobian = jacobian_columns(anchors, node, window_w, EdgeKind::Upper, x1, x2)?;
    let rank = rank_of(&jacobian);
    if rank >= 3 {
        Ok(IdentifiabilityVerdict::Identifiable)
    } else {
        Ok(IdentifiabilityVerdict::RankDeficient { rank })
    }
}
