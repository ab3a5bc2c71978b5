use super::*;
use std::sync::OnceLock;

fn elliptic_profile(w0: f64, l: f64) -> CodProfile<f64> {
    let n = 81;
    let stations: Vec<f64> = (0..n)
        .map(|i| -0.24 + 0.48 * i as f64 / (n - 1) as f64)
        .collect();
    let widths: Vec<f64> = stations
        .iter()
        .map(|&s| w0 * (1.0 - s * s / (l * l)).max(0.0).sqrt())
        .collect();
    CodProfile {
        origin: [0.0, 0.0],
        dir: [1.0, 0.0],
        smoothed_widths: widths.clone(),
        stations,
        widths,
        fit_coeffs: Vec::new(),
        fit_degree: 6,
        tips: [-l, l],
        tips_fallback: false,
        fit_residual: 0.0,
    }
}

struct Capture {
    init_tcv: f64,
    records: Vec<IterationRecord<f64>>,
    final_phi: Field<f64>,
}

fn run_sneddon(n_iterations: usize) -> Capture {
    let mut cfg = preset::<f64>("sneddon-convergence").unwrap();
    cfg.n_iterations = n_iterations;
    let mut init_tcv = 0.0;
    let mut final_phi = None;
    let records = run_coupled_with(&cfg, &mut |stage| {
        match stage {
            Stage::Init { tcv, .. } => init_tcv = tcv,
            Stage::Iteration { state, .. } => final_phi = Some(state.phi.clone()),
        }
        Ok(())
    })
    .unwrap();
    Capture {
        init_tcv,
        records,
        final_phi: final_phi.unwrap(),
    }
}

fn fixed_point() -> &'static Capture {
    static RUN: OnceLock<Capture> = OnceLock::new();
    RUN.get_or_init(|| run_sneddon(3))
}

#[test]
fn schedule_pressure_law() {
    let s: Schedule<f64> = Schedule {
        p_base: 0.04,
        p_slope: 1e-4,
        theta: 0.0,
        use_tfsi: false,
        couple_temperature: true,
    };
    assert_eq!(s.pressure(0), 0.04);
    assert!((s.pressure(10) - 0.041).abs() <= 1e-15);
}

#[test]
fn unknown_preset_is_rejected() {
    let err = preset::<f64>("no-such-scenario").unwrap_err();
    assert_eq!(err.step, Step::Init);
    assert!(err.message.contains("no-such-scenario"));
}

#[test]
fn presets_carry_the_documented_parameters() {
    let sneddon = preset::<f64>("sneddon-convergence").unwrap();
    assert_eq!(sneddon.sizes.h_max, 1.28);
    assert_eq!(sneddon.sizes.h_cr, 0.0128);
    assert!((sneddon.pff.eps - 2.0 * 0.0128).abs() <= 1e-15);
    assert!((sneddon.pff.gamma - 100.0 / 0.0128f64.powi(2)).abs() <= 1e-6);
    assert_eq!(sneddon.schedule.p_base, 0.04);
    assert!(!sneddon.schedule.use_tfsi);

    let prop = preset::<f64>("prop-pressure").unwrap();
    assert_eq!(prop.pff.eps, 0.01);
    assert_eq!(prop.sizes.h_max, 0.5);
    assert_eq!(prop.schedule.p_slope, 1e-4);
    assert_eq!(prop.n_iterations, 100);

    let coupled = preset::<f64>("prop-coupled").unwrap();
    assert_eq!(coupled.schedule.p_slope, 5e-5);
    assert!(coupled.schedule.use_tfsi);
    assert_eq!(coupled.fluid.kappa_f, 0.005);

    let two = preset::<f64>("two-cracks").unwrap();
    assert_eq!(two.centerlines.len(), 2);
    assert_eq!(two.initial_cracks[1].0, [0.2, -0.2]);

    let stationary = preset::<f64>("coupled-stationary").unwrap();
    assert_eq!(stationary.n_iterations, 9);
    assert_eq!(stationary.fluid.f_f, [0.0, 1.0]);
}

#[test]
fn mesh_level_rescales_the_derived_quantities() {
    // levels are 1-based; level 5 is four halvings of the coarsest mesh
    let cfg = preset::<f64>("sneddon-convergence").unwrap().with_mesh_level(5);
    assert!((cfg.sizes.h_max - 0.08).abs() <= 1e-15);
    assert!((cfg.sizes.h_cr - 0.0008).abs() <= 1e-15);
    assert!((cfg.pff.eps - 0.0016).abs() <= 1e-15);
    assert!((cfg.pff.gamma - 100.0 / 0.0008f64.powi(2)).abs() <= 1e-2);
    // crack boxes follow h_cr
    assert!((cfg.sizes.crack_boxes[0].max[1] - 0.0008).abs() <= 1e-15);
    // a fixed regularization length survives refinement
    let prop = preset::<f64>("prop-pressure").unwrap().with_mesh_level(2);
    assert_eq!(prop.pff.eps, 0.01);
    assert!((prop.sizes.h_cr - 0.0025).abs() <= 1e-15);
}

#[test]
fn invalid_configs_are_rejected() {
    let mut cfg = preset::<f64>("sneddon-convergence").unwrap();
    cfg.n_iterations = 0;
    assert!(cfg.validate().is_err());

    let mut cfg = preset::<f64>("sneddon-convergence").unwrap();
    cfg.centerlines.clear();
    assert!(cfg.validate().is_err());
    let err = run_coupled(&cfg).unwrap_err();
    assert_eq!((err.step, err.iteration), (Step::Init, 0));

    let mut cfg = preset::<f64>("sneddon-convergence").unwrap();
    cfg.centerlines.push(([0.0, 0.0], [1.0, 0.0]));
    assert!(cfg.validate().is_err());
}

#[test]
fn crack_tips_of_an_elliptic_profile_sit_at_its_roots() {
    let raw = elliptic_profile(0.03, 0.2);
    let (trimmed, support) = trim_to_support(&raw, 8, 0.0).unwrap();
    let mut profile = smooth_cod(&trimmed, 6).unwrap();
    anchor_tips(&mut profile, support, None);
    assert!(!profile.tips_fallback);
    let (left, right) = crack_tips(&profile);
    assert!((left + 0.2).abs() <= 0.005, "left tip {left}");
    assert!((right - 0.2).abs() <= 0.005, "right tip {right}");
}

#[test]
fn support_trimming_keeps_the_opening_and_its_crossings() {
    let mut raw = elliptic_profile(0.03, 0.2);
    // measured profiles dip slightly negative outside the opening
    for (s, w) in raw.stations.iter().zip(raw.widths.iter_mut()) {
        if s.abs() > 0.2 {
            *w = -1e-4;
        }
    }
    let (trimmed, support) = trim_to_support(&raw, 8, 0.0).unwrap();
    assert!(trimmed.stations.len() < raw.stations.len());
    assert!(trimmed.widths.iter().cloned().fold(0.0, f64::max) > 0.02);
    assert!((support[0] + 0.2).abs() <= 0.01, "support {support:?}");
    assert!((support[1] - 0.2).abs() <= 0.01, "support {support:?}");

    let closed = CodProfile {
        widths: vec![0.0; raw.widths.len()],
        ..raw.clone()
    };
    assert!(trim_to_support(&closed, 8, 0.0).is_none());
}

#[test]
fn anchored_tips_never_retreat() {
    let raw = elliptic_profile(0.03, 0.2);
    let (trimmed, support) = trim_to_support(&raw, 8, 0.0).unwrap();
    let mut profile = smooth_cod(&trimmed, 6).unwrap();
    anchor_tips(&mut profile, support, Some([-0.22, 0.23]));
    assert!(profile.tips[0] <= -0.22);
    assert!(profile.tips[1] >= 0.23);
    // widths vanish outside the tips so the polygon stays consistent
    for (s, w) in profile.stations.iter().zip(&profile.smoothed_widths) {
        if *s <= profile.tips[0] || *s >= profile.tips[1] {
            assert_eq!(*w, 0.0);
        }
    }
}

#[test]
fn zero_profile_flags_the_tip_fallback() {
    let mut zero = elliptic_profile(0.03, 0.2);
    for w in zero.widths.iter_mut() {
        *w = 0.0;
    }
    let profile = smooth_cod(&zero, 6).unwrap();
    assert!(profile.tips_fallback);
    let (left, right) = crack_tips(&profile);
    assert!(left < right);
}

#[test]
fn one_iteration_gives_exactly_one_record() {
    let run = run_sneddon(1);
    assert_eq!(run.records.len(), 1);
    let r = &run.records[0];
    assert_eq!(r.n, 1);
    assert!(r.tcv.is_finite() && r.tcv > 0.0);
    assert!(r.center_cod > 0.0);
    assert!(r.tips.0 < r.tips.1);
    assert!(r.pff_iterations >= 1);
    assert_eq!(r.tfsi_iterations, 0);
}

#[test]
fn identical_configs_give_identical_records() {
    let a = run_sneddon(1);
    let b = run_sneddon(1);
    assert_eq!(a.init_tcv.to_bits(), b.init_tcv.to_bits());
    for (ra, rb) in a.records.iter().zip(&b.records) {
        assert_eq!(ra.tcv.to_bits(), rb.tcv.to_bits());
        assert_eq!(ra.center_cod.to_bits(), rb.center_cod.to_bits());
        assert_eq!(ra.tips.0.to_bits(), rb.tips.0.to_bits());
        assert_eq!(ra.tips.1.to_bits(), rb.tips.1.to_bits());
        assert_eq!(ra.pff_iterations, rb.pff_iterations);
    }
}

#[test]
fn constant_pressure_is_a_coupling_fixed_point() {
    let run = fixed_point();
    assert_eq!(run.records.len(), 3);
    // the sharp geometry settles within the tip resolution of this very
    // coarse mesh (h_cr = 0.0128, ε = 0.0256) ...
    for r in &run.records {
        let drift = (r.tcv - run.init_tcv).abs() / run.init_tcv;
        assert!(drift <= 0.10, "iteration {} drift {drift}", r.n);
    }
    // ... and stops moving once settled
    let (a, b) = (&run.records[1], &run.records[2]);
    assert!((b.tcv - a.tcv).abs() / run.init_tcv <= 0.005);
    assert_eq!(a.tips, b.tips);
}

#[test]
fn tips_stay_near_the_static_crack_under_constant_pressure() {
    let run = fixed_point();
    for r in &run.records {
        assert!((r.tips.0 + 0.2).abs() <= 0.05, "left {}", r.tips.0);
        assert!((r.tips.1 - 0.2).abs() <= 0.05, "right {}", r.tips.1);
    }
}

#[test]
fn isoline_tracker_agrees_with_the_polynomial_tips() {
    let run = fixed_point();
    let (left, right) =
        isoline_tips(&run.final_phi, [-0.5, 0.0], [0.5, 0.0]).expect("crack on the line");
    let r = run.records.last().unwrap();
    assert!((left - r.tips.0).abs() <= 0.1, "left {left} vs {}", r.tips.0);
    assert!((right - r.tips.1).abs() <= 0.1, "right {right} vs {}", r.tips.1);
    assert!(isoline_tips(&run.final_phi, [1.0, 1.0], [1.5, 1.0]).is_none());
}

#[test]
fn failing_step_is_identified_with_partial_records() {
    // sampling line outside the mesh fails the COD step of iteration 1
    let mut cfg = preset::<f64>("sneddon-convergence").unwrap();
    cfg.centerlines = vec![([3.0, 3.0], [4.0, 3.0])];
    let err = run_coupled(&cfg).unwrap_err();
    assert_eq!((err.step, err.iteration), (Step::Cod, 1));
    assert!(err.records.is_empty());
}

#[test]
fn sink_errors_abort_as_output_failures() {
    let cfg = preset::<f64>("sneddon-convergence").unwrap();
    let err = run_coupled_with(&cfg, &mut |_| {
        Err(std::io::Error::other("disk full"))
    })
    .unwrap_err();
    assert_eq!((err.step, err.iteration), (Step::Output, 0));
    assert!(err.message.contains("disk full"));
}

#[test]
fn coupled_iteration_runs_the_tfsi_step() {
    let mut cfg = preset::<f64>("coupled-stationary").unwrap();
    cfg.n_iterations = 1;
    let mut saw_tfsi = false;
    let records = run_coupled_with(&cfg, &mut |stage| {
        if let Stage::Iteration { tfsi, .. } = stage {
            saw_tfsi = tfsi.is_some();
        }
        Ok(())
    })
    .unwrap();
    assert!(saw_tfsi);
    let r = &records[0];
    assert!(r.tfsi_iterations >= 1);
    assert!(r.tcv.is_finite() && r.tcv > 0.0);
    assert!(r.tips.0 < r.tips.1);
}
