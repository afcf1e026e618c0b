//! The three simulation runs: PEB maps, estimator Monte Carlo, and the
//! power-ratio sweep.
//!
//! Reproducibility contract: sample `i` always uses RNG stream `i` of a
//! ChaCha8 generator seeded with the master seed, so results do not depend
//! on thread count or scheduling; rows are emitted in sample order. Noise
//! seeds for range synthesis are derived per (sample, SNR) with a
//! SplitMix64 mix of the master seed, which keeps every draw independent
//! and platform-stable.

use anyhow::{ensure, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use edgeloc_core::estimators::{
    estimate_diffraction_nls, estimate_lls_baseline, synthesize_ranges, PositionEstimate,
};
use edgeloc_core::fisher::{build_fim, RangingModel};
use edgeloc_core::fields::{exact_power_ratio_db, power_ratio};
use edgeloc_core::geometry::Point3;
use edgeloc_core::SPEED_OF_LIGHT;

use crate::output::{cell, cell_bool, cell_usize, ResultTable};
use crate::scenario::Scenario;

/// Carrier frequency the sweep's wavenumber is computed at (Hz). The
/// power-ratio is frequency-independent (the prefactor cancels), but the
/// field evaluation needs a concrete wavenumber.
const SWEEP_CARRIER_HZ: f64 = 28e9;

/// NLS restart attempts after a non-converged start.
const NLS_RESTARTS: usize = 5;

/// SplitMix64 step: a platform-stable 64-bit mixer for derived seeds.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent noise seed for one (sample, SNR) cell.
fn noise_seed(master: u64, sample: usize, snr_index: usize, n_snr: usize) -> u64 {
    let pair = (sample as u64).wrapping_mul(n_snr as u64).wrapping_add(snr_index as u64);
    splitmix64(master ^ splitmix64(pair))
}

/// Per-sample RNG: stream `i` of the master-seeded generator.
fn sample_rng(master: u64, sample: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(sample as u64);
    rng
}

/// Draws a node uniformly in the building box, redrawing the (measure-zero)
/// on-wall case so the solver's strict y > 0 contract holds.
fn draw_node(rng: &mut ChaCha8Rng, scenario: &Scenario) -> Point3 {
    let lo = scenario.building_box.min;
    let hi = scenario.building_box.max;
    loop {
        let node = Point3::new(
            rng.gen_range(lo[0]..hi[0]),
            rng.gen_range(lo[1]..hi[1]),
            rng.gen_range(lo[2]..hi[2]),
        );
        if node.y > 0.0 {
            return node;
        }
    }
}

fn snr_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Type-7 (linear interpolation) percentile of pre-sorted values.
fn percentile_sorted(sorted: &[f64], pct: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (pct / 100.0) * (sorted.len() as f64 - 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

fn rmse(errors: &[f64]) -> f64 {
    if errors.is_empty() {
        return f64::NAN;
    }
    (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt()
}

/// One PEB-map sample: node plus per-SNR bounds (None = geometry failed).
struct PebSample {
    node: Point3,
    bounds: Option<Vec<(f64, f64, usize, bool)>>,
}

/// Result bundle of a run: tables keyed by file name plus the excluded
/// sample count.
pub struct RunOutput {
    /// `(file_name, table)` pairs in write order.
    pub tables: Vec<(&'static str, ResultTable)>,
    /// Samples skipped because geometry or bounds could not be evaluated.
    pub excluded: usize,
}

/// Position-error-bound map: samples nodes in the box and evaluates the
/// bound at every SNR, then summarizes each SNR's distribution as integer
/// percentiles 0..=100.
pub fn run_peb_map(scenario: &Scenario) -> Result<RunOutput> {
    let anchors = scenario.anchor_points();
    let [x1, x2] = scenario.edge_span;
    let w = scenario.window_w;
    let snrs = &scenario.snr_db_list;

    let samples: Vec<PebSample> = (0..scenario.n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(scenario.seed, i);
            let node = draw_node(&mut rng, scenario);
            let mut bounds = Vec::with_capacity(snrs.len());
            for &db in snrs {
                let model = match RangingModel::uniform(
                    scenario.bandwidth_hz,
                    snr_linear(db),
                    anchors.len(),
                ) {
                    Ok(m) => m,
                    Err(_) => return PebSample { node, bounds: None },
                };
                match build_fim(&anchors, node, w, x1, x2, &model) {
                    Ok(report) => bounds.push((
                        report.peb_3d,
                        report.peb_z,
                        report.rank,
                        report.ill_conditioned,
                    )),
                    Err(_) => return PebSample { node, bounds: None },
                }
            }
            PebSample {
                node,
                bounds: Some(bounds),
            }
        })
        .collect();

    let mut points = ResultTable::new(&[
        "sample_index",
        "node_x_m",
        "node_y_m",
        "node_z_m",
        "snr_db",
        "peb_3d_m",
        "peb_z_m",
        "rank",
        "ill_conditioned",
    ]);
    let mut excluded = 0usize;
    let mut per_snr: Vec<Vec<(f64, f64)>> = vec![Vec::new(); snrs.len()];
    for (i, sample) in samples.iter().enumerate() {
        let Some(bounds) = &sample.bounds else {
            excluded += 1;
            continue;
        };
        for (k, &(peb_3d, peb_z, rank, ill)) in bounds.iter().enumerate() {
            points.push_row(vec![
                cell_usize(i),
                cell(sample.node.x),
                cell(sample.node.y),
                cell(sample.node.z),
                cell(snrs[k]),
                cell(peb_3d),
                cell(peb_z),
                cell_usize(rank),
                cell_bool(ill),
            ]);
            per_snr[k].push((peb_3d, peb_z));
        }
    }
    ensure!(
        excluded < scenario.n_samples,
        "no sample produced a finite bound; check the scenario geometry"
    );

    let mut cdf = ResultTable::new(&["snr_db", "percentile", "peb_3d_m", "peb_z_m"]);
    for (k, pairs) in per_snr.iter().enumerate() {
        let mut p3: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let mut pz: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        p3.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pz.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for pct in 0..=100u32 {
            cdf.push_row(vec![
                cell(snrs[k]),
                cell_usize(pct as usize),
                cell(percentile_sorted(&p3, f64::from(pct))),
                cell(percentile_sorted(&pz, f64::from(pct))),
            ]);
        }
    }

    Ok(RunOutput {
        tables: vec![("peb_points.csv", points), ("peb_cdf.csv", cdf)],
        excluded,
    })
}

/// One Monte Carlo trial row (per sample and SNR).
struct McCell {
    nls: Option<PositionEstimate>,
    nls_err: f64,
    lls: Option<PositionEstimate>,
    lls_err: f64,
    peb_3d: Option<f64>,
}

struct McSample {
    node: Point3,
    cells: Option<Vec<McCell>>,
}

/// Runs the diffraction-model NLS with a box-center start plus jittered
/// restarts, keeping the first converged estimate (or the best stalled one).
fn nls_with_restarts(
    meas: &edgeloc_core::estimators::RangeMeasurementSet,
    scenario: &Scenario,
    rng: &mut ChaCha8Rng,
) -> Option<PositionEstimate> {
    let [x1, x2] = scenario.edge_span;
    let lo = scenario.building_box.min;
    let hi = scenario.building_box.max;
    let center = Point3::new(
        0.5 * (lo[0] + hi[0]),
        0.5 * (lo[1] + hi[1]).max(1e-3),
        0.5 * (lo[2] + hi[2]),
    );
    let mut best: Option<PositionEstimate> = None;
    for attempt in 0..=NLS_RESTARTS {
        let init = if attempt == 0 {
            center
        } else {
            // Jitter within half the box extents around the center.
            Point3::new(
                center.x + 0.25 * (hi[0] - lo[0]) * rng.gen_range(-1.0..1.0),
                (center.y + 0.25 * (hi[1] - lo[1]) * rng.gen_range(-1.0..1.0)).max(1e-3),
                center.z + 0.25 * (hi[2] - lo[2]) * rng.gen_range(-1.0..1.0),
            )
        };
        let Ok(est) = estimate_diffraction_nls(meas, scenario.window_w, x1, x2, init) else {
            continue;
        };
        if est.converged {
            return Some(est);
        }
        best = match best {
            Some(b) if b.residual_norm <= est.residual_norm => Some(b),
            _ => Some(est),
        };
    }
    best
}

/// Estimator Monte Carlo: synthetic diffraction ranges at every SNR, fit
/// with both estimators, with per-trial rows, per-SNR summaries, and error
/// CDFs.
pub fn run_estimator_mc(scenario: &Scenario) -> Result<RunOutput> {
    let anchors = scenario.anchor_points();
    let [x1, x2] = scenario.edge_span;
    let w = scenario.window_w;
    let snrs = &scenario.snr_db_list;
    let n_snr = snrs.len();

    let samples: Vec<McSample> = (0..scenario.n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(scenario.seed, i);
            let node = draw_node(&mut rng, scenario);
            let mut cells = Vec::with_capacity(n_snr);
            for (k, &db) in snrs.iter().enumerate() {
                let Ok(model) = RangingModel::uniform(
                    scenario.bandwidth_hz,
                    snr_linear(db),
                    anchors.len(),
                ) else {
                    return McSample { node, cells: None };
                };
                let seed = noise_seed(scenario.seed, i, k, n_snr);
                let Ok(meas) = synthesize_ranges(node, &anchors, w, x1, x2, &model, seed) else {
                    return McSample { node, cells: None };
                };
                let nls = nls_with_restarts(&meas, scenario, &mut rng);
                let lls = estimate_lls_baseline(&meas).ok();
                let peb_3d = build_fim(&anchors, node, w, x1, x2, &model)
                    .ok()
                    .map(|r| r.peb_3d);
                cells.push(McCell {
                    nls_err: nls
                        .map(|e| e.alpha_hat.distance_to(node))
                        .unwrap_or(f64::NAN),
                    nls,
                    lls_err: lls
                        .map(|e| e.alpha_hat.distance_to(node))
                        .unwrap_or(f64::NAN),
                    lls,
                    peb_3d,
                });
            }
            McSample {
                node,
                cells: Some(cells),
            }
        })
        .collect();

    let mut trials = ResultTable::new(&[
        "sample_index",
        "snr_db",
        "node_x_m",
        "node_y_m",
        "node_z_m",
        "nls_x_m",
        "nls_y_m",
        "nls_z_m",
        "nls_error_m",
        "nls_iterations",
        "nls_converged",
        "lls_x_m",
        "lls_y_m",
        "lls_z_m",
        "lls_error_m",
        "peb_3d_m",
    ]);
    let mut excluded = 0usize;
    let mut nls_errs: Vec<Vec<f64>> = vec![Vec::new(); n_snr];
    let mut lls_errs: Vec<Vec<f64>> = vec![Vec::new(); n_snr];
    let mut pebs: Vec<Vec<f64>> = vec![Vec::new(); n_snr];
    for (i, sample) in samples.iter().enumerate() {
        let Some(cells) = &sample.cells else {
            excluded += 1;
            continue;
        };
        for (k, c) in cells.iter().enumerate() {
            let (nls_cells, nls_it, nls_conv) = match &c.nls {
                Some(e) => (
                    [cell(e.alpha_hat.x), cell(e.alpha_hat.y), cell(e.alpha_hat.z)],
                    cell_usize(e.iterations),
                    cell_bool(e.converged),
                ),
                None => (
                    [String::new(), String::new(), String::new()],
                    String::new(),
                    cell_bool(false),
                ),
            };
            let lls_cells = match &c.lls {
                Some(e) => [cell(e.alpha_hat.x), cell(e.alpha_hat.y), cell(e.alpha_hat.z)],
                None => [String::new(), String::new(), String::new()],
            };
            trials.push_row(vec![
                cell_usize(i),
                cell(snrs[k]),
                cell(sample.node.x),
                cell(sample.node.y),
                cell(sample.node.z),
                nls_cells[0].clone(),
                nls_cells[1].clone(),
                nls_cells[2].clone(),
                if c.nls.is_some() { cell(c.nls_err) } else { String::new() },
                nls_it,
                nls_conv,
                lls_cells[0].clone(),
                lls_cells[1].clone(),
                lls_cells[2].clone(),
                if c.lls.is_some() { cell(c.lls_err) } else { String::new() },
                c.peb_3d.map(cell).unwrap_or_default(),
            ]);
            if c.nls.is_some() {
                nls_errs[k].push(c.nls_err);
            }
            if c.lls.is_some() {
                lls_errs[k].push(c.lls_err);
            }
            if let Some(p) = c.peb_3d {
                pebs[k].push(p);
            }
        }
    }
    ensure!(
        excluded < scenario.n_samples,
        "no Monte Carlo sample could be evaluated; check the scenario geometry"
    );

    let mut summary = ResultTable::new(&[
        "snr_db",
        "n_trials",
        "nls_rmse_m",
        "lls_rmse_m",
        "mean_peb_3d_m",
        "nls_rmse_over_mean_peb",
    ]);
    for k in 0..n_snr {
        let nls_rmse = rmse(&nls_errs[k]);
        let lls_rmse = rmse(&lls_errs[k]);
        let mean_peb = if pebs[k].is_empty() {
            f64::NAN
        } else {
            pebs[k].iter().sum::<f64>() / pebs[k].len() as f64
        };
        summary.push_row(vec![
            cell(snrs[k]),
            cell_usize(nls_errs[k].len()),
            cell(nls_rmse),
            cell(lls_rmse),
            cell(mean_peb),
            cell(nls_rmse / mean_peb),
        ]);
    }

    let mut cdf = ResultTable::new(&["snr_db", "percentile", "nls_error_m", "lls_error_m"]);
    for k in 0..n_snr {
        let mut ne = nls_errs[k].clone();
        let mut le = lls_errs[k].clone();
        ne.sort_by(|a, b| a.partial_cmp(b).unwrap());
        le.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if ne.is_empty() || le.is_empty() {
            continue;
        }
        for pct in 0..=100u32 {
            cdf.push_row(vec![
                cell(snrs[k]),
                cell_usize(pct as usize),
                cell(percentile_sorted(&ne, f64::from(pct))),
                cell(percentile_sorted(&le, f64::from(pct))),
            ]);
        }
    }

    Ok(RunOutput {
        tables: vec![
            ("mc_trials.csv", trials),
            ("mc_summary.csv", summary),
            ("mc_cdf.csv", cdf),
        ],
        excluded,
    })
}

/// Power-ratio sweep: for each elevation angle, anchors are placed at the
/// configured standoff so the lower-edge elevation is exactly θ for each
/// sampled node, and the exact field ratio is compared with the closed
/// form.
pub fn run_power_ratio_sweep(scenario: &Scenario) -> Result<RunOutput> {
    let [x1, x2] = scenario.edge_span;
    let w = scenario.window_w;
    let grid = scenario.theta_grid();
    let standoff = scenario.ratio_anchor_distance();
    let wavenumber = 2.0 * std::f64::consts::PI * SWEEP_CARRIER_HZ / SPEED_OF_LIGHT;

    // One job per (theta, sample); sample streams stay index-stable.
    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|t| (0..scenario.n_samples).map(move |i| (t, i)))
        .collect();

    struct SweepRow {
        theta_index: usize,
        sample: usize,
        node: Point3,
        /// `(exact_db, closed_form_db)`; `None` when the field was not
        /// evaluable for the drawn geometry.
        ratios: Option<(f64, f64)>,
    }

    let results: Vec<SweepRow> = jobs
        .into_par_iter()
        .map(|(t, i)| {
            // Distinct streams per theta: offset by theta index.
            let mut rng = sample_rng(scenario.seed, t * scenario.n_samples + i);
            let node = draw_node(&mut rng, scenario);
            let theta = grid[t].to_radians();
            // Lower edge sits half a window below the node; the anchor is
            // placed in the node's x-plane at the requested elevation.
            let z_el = node.z - 0.5 * w;
            let anchor = Point3::new(
                node.x,
                -standoff * theta.sin(),
                z_el - standoff * theta.cos(),
            );
            let exact = exact_power_ratio_db(anchor, node, w, x1, x2, wavenumber).ok();
            let approx = power_ratio(theta).ok().map(|r| 10.0 * r.log10());
            let ratios = match (exact, approx) {
                (Some(e), Some(a)) => Some((e, a)),
                _ => None,
            };
            SweepRow {
                theta_index: t,
                sample: i,
                node,
                ratios,
            }
        })
        .collect();

    let mut table = ResultTable::new(&[
        "theta_deg",
        "sample_index",
        "node_x_m",
        "node_y_m",
        "node_z_m",
        "exact_ratio_db",
        "approx_ratio_db",
        "abs_error_db",
    ]);
    let mut excluded = 0usize;
    for row in results {
        let Some((exact, approx)) = row.ratios else {
            excluded += 1;
            continue;
        };
        table.push_row(vec![
            cell(grid[row.theta_index]),
            cell_usize(row.sample),
            cell(row.node.x),
            cell(row.node.y),
            cell(row.node.z),
            cell(exact),
            cell(approx),
            cell((approx - exact).abs()),
        ]);
    }
    ensure!(
        !table.is_empty(),
        "no sweep sample could be evaluated; check the scenario geometry"
    );

    Ok(RunOutput {
        tables: vec![("ratio_sweep.csv", table)],
        excluded,
    })
}
