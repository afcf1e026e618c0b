//! Field-layer checks: ray-frame orthonormality, angle conventions against
//! closed trigonometric forms, pinned coefficient values, spreading-factor
//! scalings, and the exact-versus-approximate edge power ratio.

use num_complex::Complex64;

use edgeloc_core::fields::{
    approx_coefficients, building_diffracted_field, diffracted_field, exact_power_ratio_db,
    keller_coefficients, keller_prefactor, power_ratio, psi_angles, ray_frames, ComplexVec3,
};
use edgeloc_core::geometry::{
    build_edge_frame, building_path_length, solve_diffraction_point, EdgeKind, Point3, Vec3,
};
use edgeloc_core::{Error, SPEED_OF_LIGHT};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PI: f64 = std::f64::consts::PI;

/// 28 GHz wavenumber used by the pinned-value tests (1/m).
fn k28() -> f64 {
    2.0 * PI * 28e9 / SPEED_OF_LIGHT
}

fn random_geometry(rng: &mut ChaCha8Rng) -> (Point3, Point3, EdgeKind) {
    let anchor = Point3::new(
        rng.gen_range(-8.0..8.0),
        rng.gen_range(-30.0..-2.0),
        rng.gen_range(-25.0..15.0),
    );
    let node = Point3::new(
        rng.gen_range(-8.0..8.0),
        rng.gen_range(0.5..15.0),
        rng.gen_range(5.0..35.0),
    );
    let kind = if rng.gen_bool(0.5) {
        EdgeKind::Upper
    } else {
        EdgeKind::Lower
    };
    (anchor, node, kind)
}

#[test]
fn ray_frames_build_orthonormal_right_handed_triads() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let w = 2.0;
    for _ in 0..200 {
        let (anchor, node, kind) = random_geometry(&mut rng);
        let Ok(sol) = building_path_length(anchor, node, w, kind, -10.0, 10.0) else {
            continue; // corner geometries are out of scope here
        };
        let z_e = match kind {
            EdgeKind::Upper => node.z + 0.5 * w,
            EdgeKind::Lower => node.z - 0.5 * w,
        };
        let edge = build_edge_frame(kind, -10.0, 10.0, z_e).unwrap();
        let frame = ray_frames(
            sol.incident_direction(anchor),
            sol.diffracted_direction(node),
            edge.frame.e,
        )
        .unwrap();

        for v in [frame.phi_p, frame.beta0_p, frame.phi, frame.beta0] {
            assert!(v.is_unit());
        }
        // Each triad is orthogonal and β̂₀ = φ̂ × ŝ by construction.
        assert!(frame.phi_p.dot(frame.s_p).abs() < 1e-12);
        assert!(frame.beta0_p.dot(frame.s_p).abs() < 1e-12);
        assert!(frame.beta0_p.dot(frame.phi_p).abs() < 1e-12);
        assert!(frame.phi.dot(frame.s).abs() < 1e-12);
        assert!(frame.beta0.dot(frame.s).abs() < 1e-12);
        assert!(frame.beta0.dot(frame.phi).abs() < 1e-12);
        let b_in = frame.phi_p.cross(frame.s_p);
        assert!((b_in - frame.beta0_p).norm() < 1e-12);
        let b_out = frame.phi.cross(frame.s);
        assert!((b_out - frame.beta0).norm() < 1e-12);
        // Transverse vectors are perpendicular to the edge.
        assert!(frame.phi_p.dot(edge.frame.e).abs() < 1e-12);
        assert!(frame.phi.dot(edge.frame.e).abs() < 1e-12);
    }
}

#[test]
fn x_polarized_fields_have_no_hard_component() {
    // The transverse vectors φ̂′, φ̂ are built from cross products with the
    // edge direction ±x̂, so they never have an x-component: an x-polarized
    // incident field excites the soft term only.
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let w = 2.0;
    let e0 = ComplexVec3::from_real(Vec3::new(1.0, 0.0, 0.0));
    for _ in 0..100 {
        let (anchor, node, kind) = random_geometry(&mut rng);
        let Ok(sol) = building_path_length(anchor, node, w, kind, -10.0, 10.0) else {
            continue;
        };
        let z_e = match kind {
            EdgeKind::Upper => node.z + 0.5 * w,
            EdgeKind::Lower => node.z - 0.5 * w,
        };
        let edge = build_edge_frame(kind, -10.0, 10.0, z_e).unwrap();
        let frame = ray_frames(
            sol.incident_direction(anchor),
            sol.diffracted_direction(node),
            edge.frame.e,
        )
        .unwrap();
        assert!(e0.dot_real(frame.phi_p).norm() < 1e-12);

        let Ok(field) =
            building_diffracted_field(anchor, node, w, kind, -10.0, 10.0, e0, k28())
        else {
            continue; // shadow-boundary nodes are rejected, which is fine here
        };
        // The diffracted field lies along β̂₀ alone.
        let along_phi = field.e.dot_real(frame.phi);
        assert!(along_phi.norm() < 1e-12 * field.e.norm_sqr().sqrt().max(1.0));
    }
}

#[test]
fn psi_angles_match_closed_forms_in_symmetric_scenes() {
    // Symmetric scene: anchor and node share x = 0, so the diffraction
    // point is on the symmetry plane and every angle has a closed form.
    let anchor = Point3::new(0.0, -10.0, 0.0);
    let w = 2.0;
    for (yn, zn) in [(15.0, 10.0), (8.0, 14.0), (3.0, 25.0)] {
        let node = Point3::new(0.0, yn, zn);
        let rho_n = (yn * yn + 0.25 * w * w).sqrt();
        for kind in [EdgeKind::Lower, EdgeKind::Upper] {
            let z_e = match kind {
                EdgeKind::Upper => zn + 0.5 * w,
                EdgeKind::Lower => zn - 0.5 * w,
            };
            let sol = building_path_length(anchor, node, w, kind, -10.0, 10.0).unwrap();
            let edge = build_edge_frame(kind, -10.0, 10.0, z_e).unwrap();
            let frame = ray_frames(
                sol.incident_direction(anchor),
                sol.diffracted_direction(node),
                edge.frame.e,
            )
            .unwrap();
            let (psi_p, psi) = psi_angles(&frame, &edge).unwrap();

            // Diffracted side: both edges see the node just under the
            // horizon of the half plane, ψ = 3π/2 − arcsin(w/(2ρₙ)).
            let expected_psi = 1.5 * PI - (0.5 * w / rho_n).asin();
            assert!(
                (psi - expected_psi).abs() < 1e-9,
                "kind {kind:?} node ({yn},{zn}): psi {psi} vs {expected_psi}"
            );

            // Incident side: the lower edge measures the elevation angle θ
            // itself, the upper edge its supplement π − θ.
            let rho_a = (anchor.y * anchor.y + (z_e - anchor.z) * (z_e - anchor.z)).sqrt();
            let theta = ((z_e - anchor.z) / rho_a).acos();
            let expected_psi_p = match kind {
                EdgeKind::Lower => theta,
                EdgeKind::Upper => PI - theta,
            };
            assert!(
                (psi_p - expected_psi_p).abs() < 1e-9,
                "kind {kind:?} node ({yn},{zn}): psi' {psi_p} vs {expected_psi_p}"
            );
        }
    }
}

#[test]
fn pinned_psi_values_for_symmetric_nodes() {
    let anchor = Point3::new(0.0, -10.0, 0.0);
    let w = 2.0;
    let psi_for = |yn: f64| {
        let node = Point3::new(0.0, yn, 10.0);
        let sol = building_path_length(anchor, node, w, EdgeKind::Lower, -10.0, 10.0).unwrap();
        let edge = build_edge_frame(EdgeKind::Lower, -10.0, 10.0, node.z - 0.5 * w).unwrap();
        let frame = ray_frames(
            sol.incident_direction(anchor),
            sol.diffracted_direction(node),
            edge.frame.e,
        )
        .unwrap();
        psi_angles(&frame, &edge).unwrap().1
    };
    // ψ = π + arccos((w/2)/ρₙ): 4.6458… at yₙ = 15 and within 0.01 rad of
    // the deep-node limit 3π/2 by yₙ = 100.
    assert!((psi_for(15.0) - 4.645820816609).abs() < 1e-9);
    let psi_far = psi_for(100.0);
    assert!((psi_far - 4.702389313698024).abs() < 1e-9);
    assert!((1.5 * PI - psi_far - (1.0 / 10001f64.sqrt()).asin()).abs() < 1e-12);
}

#[test]
fn keller_coefficients_reject_shadow_boundary_angles() {
    // ψ′ = π/2 with ψ = 3π/2 puts the observation direction exactly on the
    // incident shadow boundary, where the half-angle cosine vanishes.
    assert!(matches!(
        keller_coefficients(0.5 * PI, 1.5 * PI, 0.5 * PI, k28()),
        Err(Error::ShadowBoundary)
    ));
}

#[test]
fn pinned_keller_coefficients_at_28_ghz() {
    let k = k28();
    assert!((k - 586.8366061464709).abs() < 1e-9);
    let coeffs = keller_coefficients(PI / 3.0, 1.5 * PI, 0.5 * PI, k).unwrap();
    let a = keller_prefactor(0.5 * PI, k).unwrap();

    assert!((coeffs.d_s.re - 0.01646840229142447).abs() < 1e-15);
    assert!((coeffs.d_s.im + 0.016468402291424468).abs() < 1e-15);
    assert!((coeffs.d_h.re - 0.028524109488230906).abs() < 1e-15);
    assert!((coeffs.d_h.im + 0.028524109488230903).abs() < 1e-15);

    // Closed-form identities at these angles.
    assert!((coeffs.d_s - a * (-2.0 * 2f64.sqrt())).norm() < 1e-16);
    assert!((coeffs.d_h - a * (-2.0 * 6f64.sqrt())).norm() < 1e-16);
    assert!((a.norm() - 0.008234201145712237).abs() < 1e-15);
    // A carries phase +3π/4: the −e^{−jπ/4} factor lands in the second
    // quadrant.
    assert!((a.arg() - 0.75 * PI).abs() < 1e-12);
    assert_eq!(coeffs.gamma0, 0.5 * PI);
}

#[test]
fn exact_and_small_opening_coefficients_agree_in_the_deep_node_limit() {
    // As the node recedes, ψ → 3π/2 exactly; there the exact soft
    // coefficients reduce to the closed forms in cos θ (the hard forms
    // match in magnitude; their printed signs differ, and only magnitudes
    // carry power).
    let k = k28();
    let a = keller_prefactor(0.5 * PI, k).unwrap();
    for theta in [0.3, 0.6, 0.9, 1.2, 1.4] {
        let (ds_l, ds_u, dh_l, dh_u) = approx_coefficients(theta, a).unwrap();
        let lower = keller_coefficients(theta, 1.5 * PI, 0.5 * PI, k).unwrap();
        let upper = keller_coefficients(PI - theta, 1.5 * PI, 0.5 * PI, k).unwrap();
        assert!((lower.d_s - ds_l).norm() < 1e-12 * ds_l.norm());
        assert!((upper.d_s - ds_u).norm() < 1e-12 * ds_u.norm());
        assert!((lower.d_h.norm() - dh_l.norm()).abs() < 1e-12 * dh_l.norm());
        assert!((upper.d_h.norm() - dh_u.norm()).abs() < 1e-12 * dh_u.norm());
    }
}

#[test]
fn soft_coefficient_ratio_reproduces_the_power_ratio() {
    let one = Complex64::new(1.0, 0.0);
    for theta in [0.2, 0.5, 0.8, 1.1, 1.4] {
        let (ds_l, ds_u, ..) = approx_coefficients(theta, one).unwrap();
        let ratio = ds_u.norm_sqr() / ds_l.norm_sqr();
        let expected = power_ratio(theta).unwrap();
        assert!((ratio - expected).abs() < 1e-12 * expected);
    }
}

#[test]
fn pinned_small_opening_coefficients_at_sixty_degrees() {
    let one = Complex64::new(1.0, 0.0);
    let (ds_l, ds_u, dh_l, dh_u) = approx_coefficients(PI / 3.0, one).unwrap();
    // cos 60° = 1/2: the four closed forms collapse to ∓2√2 and ±2√6.
    assert!((ds_l.re + 2.0 * 2f64.sqrt()).abs() < 1e-12);
    assert!((ds_u.re - 2.0 * 6f64.sqrt()).abs() < 1e-12);
    assert!((dh_l.re - 2.0 * 6f64.sqrt()).abs() < 1e-12);
    assert!((dh_u.re + 2.0 * 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn spreading_factors_scale_with_segment_lengths() {
    // Synthetic frame: edge along x, incidence in the y-z plane.
    let s_p = Vec3::new(0.0, 1.0, 0.0);
    let s = Vec3::new(0.0, 0.6, -0.8);
    let e = Vec3::new(1.0, 0.0, 0.0);
    let frame = ray_frames(s_p, s, e).unwrap();
    let coeffs = keller_coefficients(PI / 3.0, 1.4 * PI, 0.5 * PI, k28()).unwrap();
    let e0 = ComplexVec3::from_real(Vec3::new(1.0, 0.0, 0.0));

    let base = diffracted_field(e0, &frame, &coeffs, 10.0, 5.0, k28()).unwrap();
    let far_out = diffracted_field(e0, &frame, &coeffs, 10.0, 10.0, k28()).unwrap();
    let far_in = diffracted_field(e0, &frame, &coeffs, 20.0, 5.0, k28()).unwrap();

    let mag = |f: &edgeloc_core::fields::DiffractedField| f.e.norm_sqr().sqrt();
    // Edge (cylindrical) spreading on the inside leg: 1/√s.
    assert!((mag(&far_out) / mag(&base) - 1.0 / 2f64.sqrt()).abs() < 1e-12);
    // Spherical spreading on the outside leg: 1/s′.
    assert!((mag(&far_in) / mag(&base) - 0.5).abs() < 1e-12);
}

#[test]
fn power_ratio_limits_and_monotonicity() {
    // Perpendicular elevation: both paths carry equal power, up to one
    // rounding step (cos(π/2) is ~6e-17 in double precision, and the
    // denominator 1 − cos θ rounds to the float just below 1).
    assert!((power_ratio(0.5 * PI).unwrap() - 1.0).abs() <= 3e-16);
    // 60°: ratio 3 up to one rounding step in cos(π/3).
    assert!((power_ratio(PI / 3.0).unwrap() - 3.0).abs() <= 1e-12);
    // Strictly decreasing in θ.
    let mut prev = f64::INFINITY;
    for i in 1..=90 {
        let r = power_ratio(f64::from(i).to_radians()).unwrap();
        assert!(r < prev);
        assert!(r >= 1.0);
        prev = r;
    }
    assert!(matches!(power_ratio(0.0), Err(Error::Divergent)));
    assert!(matches!(power_ratio(-0.3), Err(Error::Divergent)));
    assert!(matches!(power_ratio(1.6), Err(Error::InvalidGeometry { .. })));
}

#[test]
fn pinned_exact_power_ratio_example() {
    let anchor = Point3::new(0.0, -10.0, 0.0);
    let node = Point3::new(0.0, 15.0, 10.0);
    let w = 2.0;
    let exact_db = exact_power_ratio_db(anchor, node, w, -10.0, 10.0, k28()).unwrap();
    assert!((exact_db - 3.806174980).abs() < 1e-6);

    // The closed-form approximation at the lower-edge elevation angle
    // overshoots by ≈ 3.22 dB at this fairly wide window.
    let z_el = node.z - 0.5 * w;
    let rho_a = (anchor.y * anchor.y + (z_el - anchor.z) * (z_el - anchor.z)).sqrt();
    let theta = ((z_el - anchor.z) / rho_a).acos();
    let approx_db = 10.0 * power_ratio(theta).unwrap().log10();
    assert!((approx_db - 7.025728935).abs() < 1e-6);
    assert!((approx_db - exact_db - 3.219553955).abs() < 1e-6);
}

#[test]
fn exact_and_approx_ratios_converge_as_the_window_narrows() {
    let anchor = Point3::new(0.0, -10.0, 0.0);
    let node = Point3::new(0.0, 15.0, 10.0);
    let mut prev_gap = f64::INFINITY;
    for w in [2.0, 1.0, 0.5, 0.25] {
        let exact_db = exact_power_ratio_db(anchor, node, w, -10.0, 10.0, k28()).unwrap();
        let z_el = node.z - 0.5 * w;
        let rho_a = (anchor.y * anchor.y + (z_el - anchor.z) * (z_el - anchor.z)).sqrt();
        let theta = ((z_el - anchor.z) / rho_a).acos();
        let approx_db = 10.0 * power_ratio(theta).unwrap().log10();
        let gap = (approx_db - exact_db).abs();
        assert!(gap < prev_gap, "gap must shrink with the window: {gap} at w={w}");
        prev_gap = gap;
    }
    assert!(prev_gap < 0.5, "narrow-window gap should be below 0.5 dB");
}

#[test]
fn building_field_composes_the_pipeline_stages() {
    let anchor = Point3::new(-4.0, -12.0, -3.0);
    let node = Point3::new(3.0, 8.0, 14.0);
    let w = 2.0;
    let kind = EdgeKind::Upper;
    let k = k28();
    let e0 = ComplexVec3::from_real(Vec3::new(1.0, 0.0, 0.0));

    let composed =
        building_diffracted_field(anchor, node, w, kind, -10.0, 10.0, e0, k).unwrap();

    let edge = build_edge_frame(kind, -10.0, 10.0, node.z + 0.5 * w).unwrap();
    let sol = solve_diffraction_point(anchor, node, &edge).unwrap();
    let frame = ray_frames(
        sol.incident_direction(anchor),
        sol.diffracted_direction(node),
        edge.frame.e,
    )
    .unwrap();
    let (psi_p, psi) = psi_angles(&frame, &edge).unwrap();
    let coeffs = keller_coefficients(psi_p, psi, sol.gamma0, k).unwrap();
    let manual = diffracted_field(e0, &frame, &coeffs, sol.opl, sol.ipl, k).unwrap();

    assert_eq!(composed.e, manual.e);
}

#[test]
fn ray_frames_reject_parallel_and_non_unit_inputs() {
    let e = Vec3::new(1.0, 0.0, 0.0);
    let s = Vec3::new(0.0, 0.6, -0.8);
    assert!(matches!(
        ray_frames(Vec3::new(1.0, 0.0, 0.0), s, e),
        Err(Error::GrazingRay)
    ));
    assert!(matches!(
        ray_frames(Vec3::new(0.0, 2.0, 0.0), s, e),
        Err(Error::InvalidVector)
    ));
    assert!(matches!(
        ray_frames(s, Vec3::new(0.0, 0.0, 0.0), e),
        Err(Error::InvalidVector)
    ));
}

#[test]
fn keller_prefactor_domain_errors_and_magnitude() {
    assert!(matches!(
        keller_prefactor(0.0, k28()),
        Err(Error::GrazingRay)
    ));
    assert!(matches!(
        keller_prefactor(0.5 * PI, 0.0),
        Err(Error::InvalidGeometry { .. })
    ));
    assert!(matches!(
        keller_prefactor(0.5 * PI, -5.0),
        Err(Error::InvalidGeometry { .. })
    ));
    // |A| = 1/(2·√(2πk)·sin γ₀).
    let g = 0.7;
    let a = keller_prefactor(g, k28()).unwrap();
    let expected = 1.0 / (2.0 * (2.0 * PI * k28()).sqrt() * g.sin());
    assert!((a.norm() - expected).abs() < 1e-15);
}

#[test]
fn approx_coefficients_domain_errors() {
    let one = Complex64::new(1.0, 0.0);
    assert!(matches!(
        approx_coefficients(0.0, one),
        Err(Error::InvalidGeometry { .. })
    ));
    assert!(matches!(
        approx_coefficients(0.5 * PI, one),
        Err(Error::InvalidGeometry { .. })
    ));
    assert!(matches!(
        approx_coefficients(2.0, one),
        Err(Error::InvalidGeometry { .. })
    ));
}

#[test]
fn diffracted_field_rejects_degenerate_segments() {
    let frame = ray_frames(
        Vec3::new(0.0, 1.0, 0.0),
        Vec3::new(0.0, 0.6, -0.8),
        Vec3::new(1.0, 0.0, 0.0),
    )
    .unwrap();
    let coeffs = keller_coefficients(PI / 3.0, 1.4 * PI, 0.5 * PI, k28()).unwrap();
    let e0 = ComplexVec3::from_real(Vec3::new(1.0, 0.0, 0.0));
    assert!(diffracted_field(e0, &frame, &coeffs, 0.0, 5.0, k28()).is_err());
    assert!(diffracted_field(e0, &frame, &coeffs, 10.0, -1.0, k28()).is_err());
    assert!(diffracted_field(e0, &frame, &coeffs, 10.0, 5.0, 0.0).is_err());
}
