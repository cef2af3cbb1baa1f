use std::sync::Arc;

use nls_virial::cutoffs::{build_virial_cutoff, pure_quadratic, CutoffProfile};
use nls_virial::integrator::{evolve, MonitorSet, StepperConfig};
use nls_virial::observables::{criticality, exterior_lq, exterior_mass, gradient_l2, virial_q};
use nls_virial::virial::{
    check_localization_bound, decompose, eval_i, eval_idoubleprime, eval_iprime,
    exterior_mass_budget, ExteriorSample,
};
use nls_virial::{initial, Field, Geometry, Grid};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sweep(grid: Arc<Grid>, p: u32, radius: f64, width: f64, seed: u64) {
    let params = criticality(grid.dim(), p).unwrap();
    let virial = build_virial_cutoff(radius, grid.clone()).unwrap();
    let quad = pure_quadratic(grid.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst_res, mut worst_r1) = (0.0f64, f64::NEG_INFINITY);
    for _ in 0..50 {
        let u = initial::random_smooth(grid.clone(), &mut rng, width, 2);
        let s = decompose(&u, &virial, &params, 0.0).unwrap();
        worst_res = worst_res.max(s.relative_residual());
        worst_r1 = worst_r1.max(s.r1);
        let s = decompose(&u, &quad, &params, 0.0).unwrap();
        worst_res = worst_res.max(s.relative_residual());
    }
    println!("{:?} N={}: residual {worst_res:.2e}, max R1 {worst_r1:.3e}", grid.spec().geometry(), grid.dim());
    assert!(worst_res <= 1e-10);
    assert!(worst_r1 <= 1e-12);
}

#[test]
fn decomposition_closes_on_random_fields() {
    sweep(Grid::make(1, 1024, 40.0, Geometry::Cartesian).unwrap(), 3, 5.0, 6.0, 1);
    sweep(Grid::make(2, 128, 20.0, Geometry::Cartesian).unwrap(), 3, 4.0, 4.0, 2);
    sweep(Grid::make(3, 1024, 40.0, Geometry::Radial3d).unwrap(), 3, 5.0, 6.0, 3);
}

#[test]
fn inner_support_sees_only_eight_q() {
    let grid = Grid::make(1, 1024, 40.0, Geometry::Cartesian).unwrap();
    let params = criticality(1, 3).unwrap();
    let profile = build_virial_cutoff(10.0, grid.clone()).unwrap();
    let u = initial::compact_bump(grid, 1.3, 9.0);
    let s = decompose(&u, &profile, &params, 0.0).unwrap();
    assert!((s.idoubleprime - 8.0 * virial_q(&u, &params).unwrap()).abs() <= 1e-10 * s.scale);
    assert!(s.r1.abs() + s.r2.abs() + s.r3.abs() <= 1e-12 * s.scale);
    let ext = exterior_lq(&u, 10.0, 2.0);
    let check = check_localization_bound(&s, ext, &params, 1.0, 6.0).unwrap();
    assert_eq!(check.exterior_l2, 0.0);
    assert!(check.excess.abs() <= 1e-10 * s.scale);
}

struct Series {
    dt: f64,
    t: Vec<f64>,
    i: Vec<f64>,
    ip: Vec<f64>,
    ipp: Vec<f64>,
}

fn virial_series(u0: &Field, profile: &CutoffProfile, dt: f64, t_end: f64) -> Series {
    let params = criticality(u0.grid().dim(), 3).unwrap();
    let mut s = Series { dt, t: vec![], i: vec![], ip: vec![], ipp: vec![] };
    let mut probe = |t: f64, u: &Field| -> nls_virial::Result<()> {
        s.t.push(t);
        s.i.push(eval_i(u, profile)?);
        s.ip.push(eval_iprime(u, profile)?);
        s.ipp.push(eval_idoubleprime(u, profile, &params)?);
        Ok(())
    };
    evolve(u0, &params, &StepperConfig::fixed(dt, t_end, 1), &MonitorSet::default(), &mut [&mut probe])
        .unwrap();
    s
}

/// Worst centered-difference mismatch of `f` against `df` over a common window.
fn fd_error(s: &Series, f: &[f64], df: &[f64], t_lo: f64, t_hi: f64) -> f64 {
    (1..s.t.len() - 1)
        .filter(|&j| s.t[j] >= t_lo && s.t[j] <= t_hi)
        .map(|j| ((f[j + 1] - f[j - 1]) / (2.0 * s.dt) - df[j]).abs())
        .fold(0.0, f64::max)
}

#[test]
fn time_derivatives_match_at_second_order() {
    let grid = Grid::make(1, 4096, 40.0, Geometry::Cartesian).unwrap();
    let profile = build_virial_cutoff(4.0, grid.clone()).unwrap();
    let u0 = initial::modulated_gaussian(grid, 1.2, 2.0, [1.0, 0.0, 0.0], &[8]).unwrap();
    let runs: Vec<Series> = [4e-3, 2e-3, 1e-3]
        .iter()
        .map(|&dt| virial_series(&u0, &profile, dt, 0.6))
        .collect();
    let e1: Vec<f64> = runs.iter().map(|s| fd_error(s, &s.i, &s.ip, 0.1, 0.5)).collect();
    let e2: Vec<f64> = runs.iter().map(|s| fd_error(s, &s.ip, &s.ipp, 0.1, 0.5)).collect();
    println!("I vs I': {e1:?}\nI' vs I'': {e2:?}");
    for e in [&e1, &e2] {
        for w in e.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((1.8..=2.2).contains(&order), "order {order} from {e:?}");
        }
    }
}

#[test]
fn exterior_mass_stays_under_budget_for_a_soliton() {
    let grid = Grid::make(1, 1024, 40.0, Geometry::Cartesian).unwrap();
    let params = criticality(1, 3).unwrap();
    let u0 = initial::soliton(grid, 3, 0.0).unwrap();
    let r = 15.0;
    let mut series = Vec::new();
    let mut probe = |t: f64, u: &Field| -> nls_virial::Result<()> {
        series.push(ExteriorSample {
            t,
            exterior_mass: exterior_mass(u, r),
            grad_l2: gradient_l2(u)?,
            q: virial_q(u, &params)?,
        });
        Ok(())
    };
    evolve(&u0, &params, &StepperConfig::fixed(1e-2, 5.0, 10), &MonitorSet::default(), &mut [&mut probe])
        .unwrap();
    let report = exterior_mass_budget(&u0, &series, r, 1.0, None).unwrap();
    assert!(report.budget.t_budget > 0.0);
    assert!(report.holds());
    for p in &report.points {
        assert!(p.exterior_mass <= p.strict_bound);
    }
}
