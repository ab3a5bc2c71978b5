use fracta::cod::cod_at;
use fracta::driver::{preset, run_coupled_with, Stage};
use std::time::Instant;

#[test]
fn probe_fitted_convergence() {
    for level in 1..=6usize {
        let clock = Instant::now();
        let config = preset::<f64>("sneddon-convergence")
            .expect("preset")
            .with_mesh_level(level);
        let mut out = None;
        let _ = run_coupled_with(&config, &mut |stage| {
            if let Stage::Iteration { record, state, .. } = stage {
                let cod = cod_at(&state.u, &state.phi, [0.0, 0.0], [0.0, 1.0]).unwrap();
                out = Some((cod, record.tcv));
            }
            Ok(())
        })
        .expect("run");
        let (cod, tcv) = out.unwrap();
        println!(
            "level {level}: fitted COD {cod:.7}, fitted TCV {tcv:.7}, {:.1}s",
            clock.elapsed().as_secs_f64()
        );
    }
}
