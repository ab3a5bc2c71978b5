use super::*;
use crate::fem::{lame_from_e_nu, FESpace};
use crate::mesh::{build_background_mesh, Rect, SizeSpec, TriMesh};
use crate::pff::{init_phase_field, interface_facets, solve_pff_step, total_crack_volume, PffParams};
use std::sync::Arc;

fn strip_mesh(h: f64) -> Arc<TriMesh<f64>> {
    Arc::new(
        build_background_mesh(
            Rect::new([-0.1, -0.5], [0.1, 0.5]),
            &SizeSpec::new(h, h, vec![]),
        )
        .unwrap(),
    )
}

/// φ flat near the centerline, linear ramp to 1 at the top/bottom boundary;
/// u = c·sign(y)·e_y is exactly representable on the ramp support.
fn ramp_state(h: f64, c: f64, a: f64) -> (Field<f64>, Field<f64>) {
    let mesh = strip_mesh(h);
    let phi_space = FESpace::new(mesh.clone(), 1, 1);
    let u_space = FESpace::new(mesh.clone(), 1, 2);
    let phi = phi_space.interpolate_fn(move |p| {
        [((p[1].abs() - a) / (0.5 - a)).clamp(0.0, 1.0), 0.0]
    });
    let u = u_space.interpolate_fn(move |p| [0.0, c * p[1].signum()]);
    (u, phi)
}

#[test]
fn zero_displacement_gives_zero_cod() {
    let (mut u, phi) = ramp_state(0.02, 0.01, 0.1);
    u.coeffs.iter_mut().for_each(|v| *v = 0.0);
    let cod = cod_at(&u, &phi, [0.0, 0.0], [0.0, 1.0]).unwrap();
    assert_eq!(cod, 0.0);
}

#[test]
fn sign_jump_across_ramp_gives_twice_amplitude() {
    let c = 0.01;
    let (u, phi) = ramp_state(0.01, c, 0.1);
    let cod = cod_at(&u, &phi, [0.013, 0.0], [0.0, 1.0]).unwrap();
    assert!((cod - 2.0 * c).abs() <= 1e-4, "cod {cod} vs {}", 2.0 * c);
}

#[test]
fn constant_phi_gives_zero() {
    let (u, phi) = ramp_state(0.02, 0.01, 0.1);
    let mut flat = phi.clone();
    flat.coeffs.iter_mut().for_each(|v| *v = 0.7);
    let cod = cod_at(&u, &flat, [0.0, 0.0], [0.0, 1.0]).unwrap();
    assert!(cod.abs() <= 1e-12);
}

#[test]
fn line_outside_mesh_is_rejected() {
    let (u, phi) = ramp_state(0.02, 0.01, 0.1);
    assert!(matches!(
        cod_at(&u, &phi, [5.0, 0.0], [0.0, 1.0]),
        Err(CodError::LineOutsideMesh)
    ));
}

#[test]
fn cod_is_linear_in_displacement() {
    let (_, phi) = ramp_state(0.02, 0.01, 0.1);
    let u_space = FESpace::new(phi.space.mesh.clone(), 1, 2);
    let u1 = u_space.interpolate_fn(|p| [0.003 * p[1], 0.01 * p[1].signum()]);
    let u2 = u_space.interpolate_fn(|p| [0.0, 0.004 * (3.0 * p[1]).sin()]);
    let (alpha, beta) = (1.7, -0.6);
    let mut combo = u1.clone();
    for (i, v) in combo.coeffs.iter_mut().enumerate() {
        *v = alpha * u1.coeffs[i] + beta * u2.coeffs[i];
    }
    let line = ([0.02, 0.0], [0.0, 1.0]);
    let c1 = cod_at(&u1, &phi, line.0, line.1).unwrap();
    let c2 = cod_at(&u2, &phi, line.0, line.1).unwrap();
    let cc = cod_at(&combo, &phi, line.0, line.1).unwrap();
    assert!((cc - (alpha * c1 + beta * c2)).abs() <= 1e-13);
}

#[test]
fn segmentation_offset_changes_little() {
    let c = 0.01;
    let (u, phi) = ramp_state(0.01, c, 0.1);
    let base = cod_at_offset(&u, &phi, [0.0, 0.0], [0.0, 1.0], 0.0).unwrap();
    for off in [0.3, 0.55, 0.8] {
        let v = cod_at_offset(&u, &phi, [0.0, 0.0], [0.0, 1.0], off).unwrap();
        assert!(
            (v - base).abs() <= 1e-3 * base.abs(),
            "offset {off}: {v} vs {base}"
        );
    }
}

fn elliptic_state() -> (Field<f64>, Field<f64>) {
    let mesh = Arc::new(
        build_background_mesh(
            Rect::new([-1.0, -1.0], [1.0, 1.0]),
            &SizeSpec::new(0.02, 0.02, vec![]),
        )
        .unwrap(),
    );
    let phi_space = FESpace::new(mesh.clone(), 1, 1);
    let u_space = FESpace::new(mesh.clone(), 1, 2);
    let (w0, l, delta) = (0.01, 0.5, 0.1);
    let ramp = move |y: f64| (y.abs() / delta).min(1.0);
    let width = move |x: f64| {
        if x.abs() < l {
            w0 * (1.0 - x * x / (l * l)).sqrt()
        } else {
            0.0
        }
    };
    let phi = phi_space.interpolate_fn(move |p| [ramp(p[1]), 0.0]);
    let u = u_space
        .interpolate_fn(move |p| [0.0, 0.5 * width(p[0]) * p[1].signum() * ramp(p[1])]);
    (u, phi)
}

#[test]
fn profile_requires_enough_stations() {
    let (u, phi) = elliptic_state();
    assert!(matches!(
        cod_profile(&u, &phi, [-0.5, 0.0], [0.5, 0.0], 7),
        Err(CodError::InvalidInput(_))
    ));
}

#[test]
fn zero_displacement_profile_is_flat() {
    let (mut u, phi) = elliptic_state();
    u.coeffs.iter_mut().for_each(|v| *v = 0.0);
    let p = cod_profile(&u, &phi, [-0.5, 0.0], [0.5, 0.0], 16).unwrap();
    assert!(p.widths.iter().all(|v| v.abs() < 1e-14));
    assert!(p.stations.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn doubling_stations_barely_moves_the_integral() {
    let (u, phi) = elliptic_state();
    let p1 = cod_profile(&u, &phi, [-0.5, 0.0], [0.5, 0.0], 60).unwrap();
    let p2 = cod_profile(&u, &phi, [-0.5, 0.0], [0.5, 0.0], 120).unwrap();
    let (v1, v2) = (profile_volume(&p1), profile_volume(&p2));
    assert!((v1 - v2).abs() <= 0.005 * v2.abs(), "{v1} vs {v2}");
}

#[test]
fn exact_quadratic_is_reproduced() {
    let n = 41;
    let poly = |s: f64| 0.02 - 0.5 * (s - 0.1) * (s - 0.1);
    let stations: Vec<f64> = (0..n).map(|i| -0.3 + 0.6 * i as f64 / (n - 1) as f64).collect();
    let widths: Vec<f64> = stations.iter().map(|&s| poly(s)).collect();
    let profile = CodProfile {
        origin: [-0.3, 0.0],
        dir: [1.0, 0.0],
        smoothed_widths: widths.clone(),
        stations,
        widths,
        fit_coeffs: Vec::new(),
        fit_degree: 0,
        tips: [0.0, 0.0],
        tips_fallback: true,
        fit_residual: 0.0,
    };
    let out = smooth_cod(&profile, 2).unwrap();
    for (s, w) in out.stations.iter().zip(&out.smoothed_widths) {
        assert!((w - poly(*s).max(0.0)).abs() <= 1e-10);
    }
    // roots of 0.02 - 0.5 (s-0.1)^2: s = 0.1 ± 0.2
    assert!(!out.tips_fallback);
    assert!((out.tips[0] - (-0.1)).abs() <= 1e-8, "tips {:?}", out.tips);
    assert!((out.tips[1] - 0.3).abs() <= 1e-8, "tips {:?}", out.tips);
    assert!(out.fit_residual <= 1e-10);
}

#[test]
fn noisy_ellipse_is_smoothed_and_tips_recovered() {
    let n = 161;
    let (w0, l) = (0.02, 0.5);
    // near-elliptic aperture with blunted tips, as the diffuse band produces
    let ellipse = |s: f64| w0 * (1.0 - s * s / (l * l)).max(0.0).powf(1.5);
    let stations: Vec<f64> = (0..n).map(|i| -0.6 + 1.2 * i as f64 / (n - 1) as f64).collect();
    let mut noise_norm = 0.0f64;
    let widths: Vec<f64> = stations
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let mut v = ellipse(s);
            if s.abs() > 0.3 {
                let saw = ((i % 4) as f64 - 1.5) / 1.5;
                let d = 0.05 * w0 * saw;
                v += d;
                noise_norm += d * d;
            }
            v
        })
        .collect();
    let noise_norm = noise_norm.sqrt();
    let profile = CodProfile {
        origin: [-0.6, 0.0],
        dir: [1.0, 0.0],
        smoothed_widths: widths.clone(),
        stations,
        widths,
        fit_coeffs: Vec::new(),
        fit_degree: 0,
        tips: [0.0, 0.0],
        tips_fallback: true,
        fit_residual: 0.0,
    };
    let out = smooth_cod(&profile, 6).unwrap();
    assert!(!out.tips_fallback);
    // smoothing should suppress the sawtooth: deviation of the smoothed
    // profile from the clean ellipse stays well under the injected noise
    let clean_err: f64 = out
        .stations
        .iter()
        .zip(&out.smoothed_widths)
        .map(|(&s, &w)| (w - ellipse(s)) * (w - ellipse(s)))
        .sum::<f64>()
        .sqrt();
    assert!(
        clean_err <= 0.4 * noise_norm,
        "clean error {clean_err} vs 40% of noise {noise_norm}"
    );
    assert!(
        (out.tips[0] + l).abs() <= 0.02 * l,
        "left tip {} vs {}",
        out.tips[0],
        -l
    );
    assert!(
        (out.tips[1] - l).abs() <= 0.02 * l,
        "right tip {} vs {}",
        out.tips[1],
        l
    );
    assert!(out.smoothed_widths.iter().all(|&v| v >= 0.0));
}

#[test]
fn all_zero_widths_fall_back_to_flagged_tips() {
    let n = 21;
    let stations: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let widths = vec![0.0; n];
    let profile = CodProfile {
        origin: [0.0, 0.0],
        dir: [1.0, 0.0],
        smoothed_widths: widths.clone(),
        stations,
        widths,
        fit_coeffs: Vec::new(),
        fit_degree: 0,
        tips: [0.0, 0.0],
        tips_fallback: false,
        fit_residual: 0.0,
    };
    let out = smooth_cod(&profile, 6).unwrap();
    assert!(out.tips_fallback);
    assert!(out.smoothed_widths.iter().all(|&v| v.abs() <= 1e-12));
}

#[test]
fn station_count_scales_and_caps() {
    assert_eq!(station_count(0.4, 0.0128), 63);
    assert_eq!(station_count(10.0, 0.001), 400);
    assert_eq!(station_count(0.001, 1.0), 8);
}

#[test]
fn sneddon_profile_is_symmetric_and_matches_tcv() {
    let h_max = 1.28;
    let h_cr = h_max / 100.0;
    let mesh = Arc::new(
        build_background_mesh(
            Rect::new([-2.0, -2.0], [2.0, 2.0]),
            &SizeSpec::new(h_max, h_cr, vec![Rect::new([-0.2, -h_cr], [0.2, h_cr])]),
        )
        .unwrap(),
    );
    let params = PffParams {
        elastic: lame_from_e_nu(1.0, 0.3).unwrap(),
        g_c: 1.0,
        alpha_theta: 1e-5,
        alpha_b: 0.0,
        eps: 2.0 * h_cr,
        kappa_reg: 1e-10,
        gamma: 100.0 / (h_cr * h_cr),
        p0: 0.0,
        theta0: 0.0,
    };
    let init = init_phase_field(mesh.clone(), &params).unwrap();
    let p = |_: [f64; 2]| 0.04;
    let th = |_: [f64; 2]| 0.0;
    let facets = interface_facets(&mesh);
    let (state, _) = solve_pff_step(&init, &p, &th, &params, &facets).unwrap();

    let n = station_count(0.4, h_cr);
    let raw = cod_profile(&state.u, &state.phi, [-0.2, 0.0], [0.2, 0.0], n).unwrap();
    let out = smooth_cod(&raw, 6).unwrap();

    let wmax = out
        .smoothed_widths
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(wmax > 0.0);
    let m = out.smoothed_widths.len();
    for i in 0..m {
        let a = out.smoothed_widths[i];
        let b = out.smoothed_widths[m - 1 - i];
        assert!((a - b).abs() <= 0.01 * wmax, "asymmetry at {i}: {a} vs {b}");
    }

    let tcv = total_crack_volume(&state.u, &state.phi);
    let vol = profile_volume(&out);
    assert!(
        (vol - tcv).abs() <= 0.05 * tcv.abs(),
        "profile volume {vol} vs tcv {tcv}"
    );
}
