//! Range synthesis and position estimation: the diffraction-model
//! nonlinear least-squares estimator and the Euclidean linear
//! least-squares baseline.
//!
//! Measured ranges follow the diffraction model — each anchor's range is
//! the upper-edge path length, not the Euclidean distance — plus Gaussian
//! noise at the ranging noise floor `σ_j = c·√CRLB_j`. The NLS estimator
//! fits that same model with its closed-form Jacobian and therefore absorbs
//! the NLOS bias; the LLS baseline linearizes Euclidean ranges and eats the
//! bias, which is exactly the model mismatch it exists to demonstrate.
//!
//! # Example
//!
//! ```
//! use edgeloc_core::estimators::{estimate_diffraction_nls, synthesize_ranges};
//! use edgeloc_core::fisher::RangingModel;
//! use edgeloc_core::geometry::{Point3, Vec3};
//!
//! let anchors = [
//!     Point3::new(-10.0, -20.0, -10.0),
//!     Point3::new(0.0, -7.0, -20.0),
//!     Point3::new(10.0, -20.0, -10.0),
//! ];
//! let truth = Point3::new(2.0, 12.0, 20.0);
//! // Infinite SNR → zero noise floor → exact ranges.
//! let model = RangingModel::uniform(1.0e8, f64::INFINITY, 3).unwrap();
//! let meas = synthesize_ranges(truth, &anchors, 2.0, -10.0, 10.0, &model, 7).unwrap();
//!
//! let init = truth + Vec3::new(1.0, -1.0, 1.0);
//! let est = estimate_diffraction_nls(&meas, 2.0, -10.0, 10.0, init).unwrap();
//! assert!(est.converged);
//! assert!(est.alpha_hat.distance_to(truth) < 1e-6);
//! ```

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::fisher::{path_gradient, range_sigma, RangingModel};
use crate::geometry::{building_path_length, EdgeKind, Point3, Vec3};
use crate::tolerances;

// ---------------------------------------------------------------------------
// Measurements
// ---------------------------------------------------------------------------

/// A set of noisy range measurements against known anchors.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeMeasurementSet {
    /// Measured ranges (meters), one per anchor.
    pub ranges: Vec<f64>,
    /// Per-anchor noise standard deviation (meters); zero means noiseless.
    pub sigma: Vec<f64>,
    /// Anchor positions the ranges were measured against.
    pub anchors: Vec<Point3>,
    /// RNG seed the noise was drawn with (for reproduction).
    pub seed: u64,
}

/// A position estimate with solver diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionEstimate {
    /// Estimated node position (meters).
    pub alpha_hat: Point3,
    /// Solver iterations performed (1 for the linear baseline).
    pub iterations: usize,
    /// True when a convergence criterion was met; false reports the best
    /// iterate reached at the iteration cap or a stall.
    pub converged: bool,
    /// Unweighted range-residual norm at the estimate (meters).
    pub residual_norm: f64,
}

/// Synthesizes ranges from the upper-edge diffraction model: each range is
/// the true path length plus Gaussian noise with standard deviation
/// `σ_j = c·√CRLB_j` from the ranging model. Deterministic under `seed`
/// (one standard-normal draw per anchor, in anchor order).
///
/// # Errors
///
/// [`Error::InvalidGeometry`] for count mismatches; geometry errors
/// propagate from the path solver.
pub fn synthesize_ranges(
    truth: Point3,
    anchors: &[Point3],
    window_w: f64,
    x1: f64,
    x2: f64,
    model: &RangingModel,
    seed: u64,
) -> Result<RangeMeasurementSet> {
    if anchors.is_empty() {
        return Err(Error::invalid("at least one anchor is required"));
    }
    if anchors.len() != model.snr_linear.len() {
        return Err(Error::invalid(
            "anchor count must match the model's SNR entries",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ranges = Vec::with_capacity(anchors.len());
    let mut sigma = Vec::with_capacity(anchors.len());
    for (j, &anchor) in anchors.iter().enumerate() {
        let p = building_path_length(anchor, truth, window_w, EdgeKind::Upper, x1, x2)?
            .path_length;
        let s = range_sigma(model, j);
        // Draw unconditionally so the stream position does not depend on σ.
        let n: f64 = StandardNormal.sample(&mut rng);
        ranges.push(p + s * n);
        sigma.push(s);
    }
    Ok(RangeMeasurementSet {
        ranges,
        sigma,
        anchors: anchors.to_vec(),
        seed,
    })
}

// ---------------------------------------------------------------------------
// Diffraction-model nonlinear least squares
// ---------------------------------------------------------------------------

/// One evaluation of the weighted NLS objective at a trial point.
struct Evaluation {
    cost: f64,
    /// `JᵀW r` — the (half, sign-flipped) weighted cost gradient.
    gradient: Vector3<f64>,
    /// Gauss-Newton normal matrix `JᵀWJ`.
    normal: Matrix3<f64>,
    /// Unweighted residual norm (meters).
    residual_norm: f64,
}

fn evaluate_nls(
    alpha: Point3,
    meas: &RangeMeasurementSet,
    weights: &[f64],
    window_w: f64,
    x1: f64,
    x2: f64,
) -> Option<Evaluation> {
    let mut cost = 0.0;
    let mut gradient = Vector3::zeros();
    let mut normal = Matrix3::zeros();
    let mut residual_sq = 0.0;
    for (j, &anchor) in meas.anchors.iter().enumerate() {
        let p = building_path_length(anchor, alpha, window_w, EdgeKind::Upper, x1, x2)
            .ok()?
            .path_length;
        let g = path_gradient(anchor, alpha, window_w, x1, x2).ok()?;
        let g = Vector3::new(g.x, g.y, g.z);
        let r = meas.ranges[j] - p;
        let w = weights[j];
        cost += w * r * r;
        gradient += w * r * g;
        normal += w * g * g.transpose();
        residual_sq += r * r;
    }
    Some(Evaluation {
        cost,
        gradient,
        normal,
        residual_norm: residual_sq.sqrt(),
    })
}

/// Estimates the node position by damped Gauss-Newton (Levenberg-style
/// multiplicative damping, start 1e-3, factor 10) on the weighted
/// diffraction-model objective `Σ_j (range_j − p_j(α))²/σ_j²`, using the
/// closed-form path gradient. Unit weights are substituted when any σ is
/// zero (noiseless sets).
///
/// Convergence: accepted step below [`tolerances::NLS_STEP_TOL`] meters or
/// weighted-gradient norm below [`tolerances::NLS_GRAD_TOL`]. Iterates that
/// leave the model's valid region (corner diffraction, wall crossing) are
/// recovered by halving the step; a stall or the iteration cap returns the
/// best iterate with `converged = false`.
///
/// # Errors
///
/// [`Error::InvalidGeometry`] for fewer than 3 anchors, count mismatches,
/// or an initialization at which the model cannot be evaluated.
pub fn estimate_diffraction_nls(
    meas: &RangeMeasurementSet,
    window_w: f64,
    x1: f64,
    x2: f64,
    init: Point3,
) -> Result<PositionEstimate> {
    let m = meas.ranges.len();
    if m < 3 {
        return Err(Error::invalid("at least three anchors are required"));
    }
    if meas.anchors.len() != m || meas.sigma.len() != m {
        return Err(Error::invalid(
            "ranges, sigma, and anchors must have matching lengths",
        ));
    }
    // Zero noise floor → unweighted fit.
    let weights: Vec<f64> = if meas.sigma.iter().any(|s| !(*s > 0.0)) {
        vec![1.0; m]
    } else {
        meas.sigma.iter().map(|s| 1.0 / (s * s)).collect()
    };

    let mut alpha = init;
    let mut state = evaluate_nls(alpha, meas, &weights, window_w, x1, x2)
        .ok_or_else(|| Error::invalid("initialization point is outside the model's valid region"))?;

    let mut damping = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    'outer: for _ in 0..tolerances::NLS_MAX_ITERS {
        iterations += 1;
        if state.gradient.norm() < tolerances::NLS_GRAD_TOL {
            converged = true;
            break;
        }
        // Grow damping until a cost-decreasing, evaluable step appears.
        for _ in 0..25 {
            let mut damped = state.normal;
            for i in 0..3 {
                damped[(i, i)] += damping * state.normal[(i, i)].max(1e-12);
            }
            let Some(chol) = damped.cholesky() else {
                damping = (damping * 10.0).min(1e14);
                continue;
            };
            let delta = chol.solve(&state.gradient);

            // Backtrack along the step until the model is evaluable again.
            let mut step = delta;
            let mut trial = None;
            for _ in 0..=8 {
                let candidate = alpha + Vec3::new(step.x, step.y, step.z);
                if let Some(eval) = evaluate_nls(candidate, meas, &weights, window_w, x1, x2) {
                    trial = Some((candidate, eval, step.norm()));
                    break;
                }
                step *= 0.5;
            }
            let Some((candidate, eval, step_norm)) = trial else {
                damping = (damping * 10.0).min(1e14);
                continue;
            };

            if eval.cost <= state.cost {
                alpha = candidate;
                state = eval;
                damping = (damping / 10.0).max(1e-12);
                if step_norm < tolerances::NLS_STEP_TOL {
                    converged = true;
                    break 'outer;
                }
                continue 'outer;
            }
            damping = (damping * 10.0).min(1e14);
        }
        // No acceptable step at maximum damping: stalled.
        break;
    }

    Ok(PositionEstimate {
        alpha_hat: alpha,
        iterations,
        converged,
        residual_norm: state.residual_norm,
    })
}

// ---------------------------------------------------------------------------
// Linear least-squares baseline
// ---------------------------------------------------------------------------

/// Euclidean trilateration baseline by reference-anchor differencing:
/// subtracting the first anchor's squared-range equation from the others
/// yields the linear system `2(aⱼ−a₀)ᵀα = (r₀²−rⱼ²) + (‖aⱼ‖²−‖a₀‖²)`,
/// solved in the least-squares sense (minimum-norm at M = 3, where the
/// system has two rows). Assumes Euclidean ranges, so diffraction
/// measurements leave it with the full NLOS bias.
///
/// # Errors
///
/// [`Error::InvalidGeometry`] for fewer than 3 anchors or count
/// mismatches; [`Error::DegenerateGeometry`] when the differenced system
/// is singular.
pub fn estimate_lls_baseline(meas: &RangeMeasurementSet) -> Result<PositionEstimate> {
    let m = meas.ranges.len();
    if m < 3 {
        return Err(Error::invalid("at least three anchors are required"));
    }
    if meas.anchors.len() != m {
        return Err(Error::invalid(
            "ranges and anchors must have matching lengths",
        ));
    }

    let a0 = meas.anchors[0];
    let r0 = meas.ranges[0];
    let norm_sq = |p: Point3| p.x * p.x + p.y * p.y + p.z * p.z;
    let rows = m - 1;
    let mut a_mat = DMatrix::zeros(rows, 3);
    let mut rhs = DVector::zeros(rows);
    for j in 1..m {
        let aj = meas.anchors[j];
        let rj = meas.ranges[j];
        a_mat[(j - 1, 0)] = 2.0 * (aj.x - a0.x);
        a_mat[(j - 1, 1)] = 2.0 * (aj.y - a0.y);
        a_mat[(j - 1, 2)] = 2.0 * (aj.z - a0.z);
        rhs[j - 1] = (r0 * r0 - rj * rj) + (norm_sq(aj) - norm_sq(a0));
    }

    let svd = a_mat.svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let needed = rows.min(3);
    let rank = svd
        .singular_values
        .iter()
        .filter(|s| **s >= tolerances::RANK_SV_REL_TOL * smax)
        .count();
    if smax <= 0.0 || rank < needed {
        return Err(Error::DegenerateGeometry);
    }
    let x = svd
        .solve(&rhs, tolerances::RANK_SV_REL_TOL * smax)
        .map_err(|_| Error::DegenerateGeometry)?;
    let alpha_hat = Point3::new(x[0], x[1], x[2]);

    // Diagnostics in range space: Euclidean-model residual at the estimate.
    let residual_sq: f64 = meas
        .anchors
        .iter()
        .zip(&meas.ranges)
        .map(|(a, r)| {
            let d = a.distance_to(alpha_hat);
            (r - d) * (r - d)
        })
        .sum();

    Ok(PositionEstimate {
        alpha_hat,
        iterations: 1,
        converged: true,
        residual_norm: residual_sq.sqrt(),
    })
}
