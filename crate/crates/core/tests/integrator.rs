use nls_virial::integrator::{evolve, step, MonitorSet, RunStatus, StepperConfig};
use nls_virial::observables::{criticality, energy, rescale, variance};
use nls_virial::{initial, Field, Geometry, Grid};
use num_complex::Complex64;

fn soliton_grid() -> std::sync::Arc<Grid> {
    Grid::make(1, 512, 20.0, Geometry::Cartesian).unwrap()
}

#[test]
fn soliton_tracks_exact_solution() {
    let grid = soliton_grid();
    let params = criticality(1, 3).unwrap();
    let u0 = initial::soliton(grid.clone(), 3, 0.0).unwrap();
    let traj = evolve(&u0, &params, &StepperConfig::fixed(1e-3, 1.0, 100), &MonitorSet::default(), &mut [])
        .unwrap();
    assert_eq!(traj.status, RunStatus::Completed);
    assert_eq!(traj.steps, 1000);
    let exact = Field::from_fn(grid, |x, _| {
        Complex64::from_polar(2f64.sqrt() / x[0].cosh(), 1.0)
    });
    let err = traj.final_field.l2_distance(&exact).unwrap();
    let norm = 2.0; // ‖√2 sech‖₂
    assert!(err / norm < 1e-6, "relative L2 error {err}");
    assert!(traj.mass_drift() < 1e-10);
    assert!(traj.energy_drift() < 1e-8, "energy drift {}", traj.energy_drift());
}

fn gaussian_energy_drift(dt: f64) -> f64 {
    let grid = soliton_grid();
    let params = criticality(1, 3).unwrap();
    let u0 = initial::gaussian(grid, 1.0, 1.0, [0.0; 3]);
    let traj = evolve(&u0, &params, &StepperConfig::fixed(dt, 1.0, 50), &MonitorSet::default(), &mut [])
        .unwrap();
    assert!(traj.mass_drift() < 1e-10);
    let e0 = traj.records[0].conserved.energy;
    (traj.records.last().unwrap().conserved.energy - e0).abs() / e0.abs()
}

#[test]
fn energy_error_is_second_order_on_gaussian_data() {
    let drifts: Vec<f64> = [4e-3, 2e-3, 1e-3].iter().map(|&dt| gaussian_energy_drift(dt)).collect();
    for w in drifts.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((1.9..=2.1).contains(&order), "measured order {order} from {drifts:?}");
    }
}

#[test]
fn time_reversal_returns_initial_data() {
    let grid = soliton_grid();
    let params = criticality(1, 3).unwrap();
    let u0 = initial::modulated_gaussian(grid, 1.0, 1.5, [1.0, 0.0, 0.0], &[2]).unwrap();
    let mut u = u0.clone();
    for _ in 0..500 {
        u = step(&u, 1e-3, &params).unwrap();
    }
    let mut w = u.conj();
    for _ in 0..500 {
        w = step(&w, 1e-3, &params).unwrap();
    }
    let back = w.conj();
    assert!(back.l2_distance(&u0).unwrap() < 1e-8);
}

#[test]
fn flow_commutes_with_scaling() {
    let params = criticality(1, 3).unwrap();
    let lambda = 2.0;
    let grid = Grid::make(1, 256, 16.0, Geometry::Cartesian).unwrap();
    let u0 = initial::gaussian(grid, 1.2, 1.0, [0.0; 3]);
    let coarse = evolve(&u0, &params, &StepperConfig::fixed(2e-3, 0.5, 50), &MonitorSet::default(), &mut [])
        .unwrap();
    let v0 = rescale(&u0, &params, lambda).unwrap();
    let fine_cfg = StepperConfig::fixed(2e-3 / 4.0, 0.5 / 4.0, 50);
    let fine = evolve(&v0, &params, &fine_cfg, &MonitorSet::default(), &mut []).unwrap();
    assert_eq!(fine.steps, coarse.steps);
    let expected = rescale(&coarse.final_field, &params, lambda).unwrap();
    let err = fine.final_field.l2_distance(&expected).unwrap();
    assert!(err < 1e-6, "scaling mismatch {err}");
}

#[test]
fn negative_energy_quintic_blows_up_before_variance_root() {
    let grid = Grid::make(1, 4096, 10.0, Geometry::Cartesian).unwrap();
    let params = criticality(1, 5).unwrap();
    let u0 = initial::gaussian(grid, 3.0, 1.0, [0.0; 3]);
    let e0 = energy(&u0, &params).unwrap();
    assert!(e0 < 0.0);
    let v0 = variance(&u0);
    let root = (v0 / (-4.0 * e0)).sqrt();
    let c_cfl = 0.02;
    let config = StepperConfig {
        dt0: 1e-4,
        c_cfl,
        dt_min: c_cfl / (1.0 + 10f64.powi(4)),
        snapshot_stride: 1,
        t_end: 1.0,
        boundary_threshold: 1e-8,
    };
    let traj = evolve(&u0, &params, &config, &MonitorSet::default(), &mut []).unwrap();
    assert_eq!(traj.status, RunStatus::BlowupDetected);
    assert!(traj.t_final() < 1.0);
    assert!(traj.t_final() <= root);
}

#[test]
fn gaussian_near_the_edge_escapes() {
    let grid = Grid::make(1, 512, 20.0, Geometry::Cartesian).unwrap();
    let params = criticality(1, 3).unwrap();
    let u0 = initial::modulated_gaussian(grid, 1.0, 1.0, [12.0, 0.0, 0.0], &[20]).unwrap();
    let traj = evolve(&u0, &params, &StepperConfig::fixed(1e-3, 2.0, 10), &MonitorSet::default(), &mut [])
        .unwrap();
    assert_eq!(traj.status, RunStatus::DomainEscape);
    assert!(traj.t_final() < 2.0);
}

#[test]
fn radial_ground_state_scale_runs_conserve_mass() {
    let grid = Grid::make(3, 512, 20.0, Geometry::Radial3d).unwrap();
    let params = criticality(3, 3).unwrap();
    let u0 = initial::gaussian(grid, 0.5, 1.0, [0.0; 3]);
    let traj = evolve(&u0, &params, &StepperConfig::fixed(1e-3, 0.5, 50), &MonitorSet::default(), &mut [])
        .unwrap();
    assert_eq!(traj.status, RunStatus::Completed);
    assert!(traj.mass_drift() < 1e-10, "mass drift {}", traj.mass_drift());
    assert!(traj.energy_drift() < 1e-5, "energy drift {}", traj.energy_drift());
}
