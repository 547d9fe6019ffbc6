use critflow::bubbles::{energy_quantum, CutoffParams};
use critflow::flow::FlowConfig;
use critflow::functional::{energy, nehari_residual};
use critflow::minimax::*;
use critflow::spectrum::weighted_eigs;
use critflow::*;

fn cfg() -> FlowConfig {
    FlowConfig {
        step: 1.0,
        max_steps: 3000,
        nehari_projection: true,
        ..FlowConfig::default()
    }
}

#[test]
fn radial_ground_state_matches_axisymmetric_one() {
    let p = ModelParams::new(5, 0.6).unwrap();
    let g = build_axisym_grid(p, 160, Grading::Uniform, 16).unwrap();
    let s = weighted_eigs(g.radial(), 0, 1).unwrap();
    let lambda = s.spectral_shift + 0.5 * s.mus[0];
    let radial = ground_state(g.radial(), lambda, &cfg()).unwrap();
    let axisym = ground_state(&g, lambda, &cfg()).unwrap();
    assert!(
        (radial.c0 - axisym.c0).abs() < 1e-8 * radial.c0,
        "{} vs {}",
        radial.c0,
        axisym.c0
    );
    assert!(radial.c0 < energy_quantum(5).unwrap());
}

#[test]
fn harvest_from_sphere_surface_contains_ground_state() {
    let p = ModelParams::new(5, 0.6).unwrap();
    let g = build_axisym_grid(p, 160, Grading::Uniform, 32).unwrap();
    let s = weighted_eigs(g.radial(), 0, 1).unwrap();
    let lambda = s.spectral_shift + 0.5 * s.mus[0];
    let opts = SphereOptions {
        n_t: 3,
        r0: Some(0.05),
        ..SphereOptions::default()
    };
    let surface = build_sphere_surface(&g, lambda, &opts).unwrap();
    let levels = refine_from_surface(&surface.samples, lambda, &cfg(), 1).unwrap();
    levels.check_thresholds(5).unwrap();
    let c0 = levels.c0.expect("a sign-definite solution is harvested");
    let gs = ground_state(&g, lambda, &cfg()).unwrap();
    assert!((c0 - gs.c0).abs() < 1e-6 * gs.c0, "{c0} vs {}", gs.c0);
    let bound = euclidean_bound(5).unwrap();
    assert!(levels.grad_sq.iter().all(|&x| x < bound));
    assert!(levels
        .solution_energies
        .iter()
        .all(|&e| e > 0.0 && e < levels.threshold_2));
}

#[test]
fn quantum_probe_approaches_one_quantum() {
    let p = ModelParams::new(5, 0.6).unwrap();
    let g = build_radial_grid(p, 1024, Grading::OriginRefined { stretch: 10.0 }).unwrap();
    let s = weighted_eigs(&g, 0, 1).unwrap();
    let lambda = s.spectral_shift + 0.5 * s.mus[0];
    let gs = ground_state(&g, lambda, &cfg()).unwrap();
    assert!(
        nehari_residual(&gs.field, lambda).unwrap().abs()
            < 1e-6 * energy(&gs.field, lambda).unwrap().grad_sq
    );
    let rows = energy_quantum_probe(
        &gs.field,
        lambda,
        &[4e-3, 1e-3, 2.5e-4],
        &CutoffParams::bump(0.54).unwrap(),
    )
    .unwrap();
    assert!(rows
        .windows(2)
        .all(|w| w[1].relative_error < w[0].relative_error));
    assert!(rows[2].relative_error < 0.01 && rows[2].resolved);
}
