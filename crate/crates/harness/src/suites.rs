//! Pinned desk-scale checks behind `verify` and the acceptance test.

use std::sync::Mutex;
use std::time::Instant;

use anyhow::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use nls_virial::criteria::{boost, evaluate, glassey_bound, monitor_persistence, BoostSpec, DualVerdict, Regime};
use nls_virial::cutoffs::{build_exterior_cutoff, build_virial_cutoff};
use nls_virial::groundstate::{gn_constant, scaled_ground_state, solve_ground_state, GnNorms};
use nls_virial::integrator::{evolve, MonitorSet, RunStatus, StepperConfig};
use nls_virial::observables::{
    criticality, energy, exterior_mass, gradient_l2, hs_seminorm, mass, momentum, rescale,
    variance, virial_q,
};
use nls_virial::virial::{decompose, exterior_mass_budget, ExteriorSample};
use nls_virial::{initial, Field, Geometry, Grid};
use num_complex::Complex64;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub criterion: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

pub const SUITES: [&str; 6] = ["conservation", "virial", "cutoffs", "groundstate", "criteria", "all"];

/// Criterion numbers run by a named suite.
pub fn suite_criteria(name: &str) -> Option<Vec<u8>> {
    Some(match name {
        "conservation" => vec![1, 10],
        "virial" => vec![2, 3, 4, 6],
        "cutoffs" => vec![5],
        "groundstate" => vec![7],
        "criteria" => vec![8, 9],
        "all" => (1..=10).collect(),
        _ => return None,
    })
}

pub fn criterion_name(n: u8) -> &'static str {
    match n {
        1 => "conservation",
        2 => "pure-quadratic virial",
        3 => "variance parabola (mass-critical)",
        4 => "localized decomposition",
        5 => "cutoff certification",
        6 => "exterior-mass budget",
        7 => "ground state",
        8 => "Galilean reduction",
        9 => "dual threshold pipeline",
        10 => "scaling symmetry",
        _ => "unknown",
    }
}

pub fn run_criterion(n: u8) -> Check {
    let started = Instant::now();
    let outcome = match n {
        1 => conservation(),
        2 => quadratic_virial(),
        3 => variance_parabola(),
        4 => decomposition(),
        5 => cutoff_certification(),
        6 => exterior_budget(),
        7 => ground_state(),
        8 => galilean_reduction(),
        9 => dual_threshold(),
        10 => scaling(),
        _ => Err(anyhow::anyhow!("no criterion {n}")),
    };
    let (passed, detail) = match outcome {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e:#}")),
    };
    Check {
        criterion: n,
        name: criterion_name(n),
        passed,
        detail,
        seconds: started.elapsed().as_secs_f64(),
    }
}

/// Thread cap from `VIRIAL_NLS_THREADS`, else the machine's parallelism.
pub fn thread_cap() -> usize {
    std::env::var("VIRIAL_NLS_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs the criteria concurrently on at most `threads` workers; results in input order.
pub fn run_criteria(list: &[u8], threads: usize) -> Vec<Check> {
    let queue = Mutex::new(list.iter().copied().enumerate());
    let results = Mutex::new(Vec::with_capacity(list.len()));
    std::thread::scope(|s| {
        for _ in 0..threads.max(1).min(list.len().max(1)) {
            s.spawn(|| loop {
                let next = queue.lock().unwrap().next();
                let Some((i, n)) = next else { break };
                let check = run_criterion(n);
                results.lock().unwrap().push((i, check));
            });
        }
    });
    let mut out = results.into_inner().unwrap();
    out.sort_by_key(|(i, _)| *i);
    out.into_iter().map(|(_, c)| c).collect()
}

type Outcome = Result<(bool, String)>;

fn conservation() -> Outcome {
    let started = Instant::now();
    let grid = Grid::make(1, 512, 20.0, Geometry::Cartesian)?;
    let params = criticality(1, 3)?;
    let u0 = initial::soliton(grid.clone(), 3, 0.0)?;
    let traj = evolve(&u0, &params, &StepperConfig::fixed(1e-3, 1.0, 100), &MonitorSet::default(), &mut [])?;
    let secs = started.elapsed().as_secs_f64();
    let (dm, de) = (traj.mass_drift(), traj.energy_drift());
    let exact = Field::from_fn(grid, |x, _| Complex64::from_polar(2f64.sqrt() / x[0].cosh(), 1.0));
    let err = traj.final_field.l2_distance(&exact)? / 2.0;
    let ok = traj.status == RunStatus::Completed && dm <= 1e-10 && de <= 1e-8 && secs < 30.0;
    Ok((ok, format!("mass drift {dm:.2e} (<= 1e-10), energy drift {de:.2e} (<= 1e-8), relative L2 error vs exact soliton {err:.2e}, {secs:.2}s")))
}

/// Worst `|V'' − 8Q| / max|8Q|` with `V''` from centered differences.
fn quadratic_mismatch(dt: f64) -> Result<f64> {
    let grid = Grid::make(1, 512, 20.0, Geometry::Cartesian)?;
    let params = criticality(1, 3)?;
    let u0 = initial::gaussian(grid, 1.5, 1.0, [0.0; 3]);
    let mut series: Vec<(f64, f64, f64)> = Vec::new();
    let mut probe = |t: f64, u: &Field| -> nls_virial::Result<()> {
        series.push((t, variance(u), virial_q(u, &params)?));
        Ok(())
    };
    evolve(&u0, &params, &StepperConfig::fixed(dt, 1.0, 1), &MonitorSet::default(), &mut [&mut probe])?;
    let scale = series.iter().map(|s| (8.0 * s.2).abs()).fold(0.0, f64::max);
    Ok(series
        .windows(3)
        .filter(|w| ((w[2].0 - w[1].0) - dt).abs() <= 1e-9 * dt && ((w[1].0 - w[0].0) - dt).abs() <= 1e-9 * dt)
        .map(|w| ((w[2].1 - 2.0 * w[1].1 + w[0].1) / (dt * dt) - 8.0 * w[1].2).abs() / scale)
        .fold(0.0, f64::max))
}

fn quadratic_virial() -> Outcome {
    let errs: Vec<f64> = [2e-3, 1e-3, 5e-4].iter().map(|&dt| quadratic_mismatch(dt)).collect::<Result<_>>()?;
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let ok = errs[1] <= 1e-3 && orders.iter().all(|o| (1.8..=2.2).contains(o));
    Ok((ok, format!("relative error at dt=1e-3 {:.3e} (<= 1e-3); errors {:?} give orders {orders:.3?}", errs[1], errs.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>())))
}

fn variance_parabola() -> Outcome {
    let started = Instant::now();
    let grid = Grid::make(1, 4096, 10.0, Geometry::Cartesian)?;
    let params = criticality(1, 5)?;
    let u0 = initial::gaussian(grid, 3.0, 1.0, [0.0; 3]);
    let bound = glassey_bound(&u0, &params)?;
    let c_cfl = 0.02;
    let config = StepperConfig {
        dt0: 1e-4,
        c_cfl,
        dt_min: c_cfl / (1.0 + 10f64.powi(4)),
        snapshot_stride: 1,
        t_end: 1.0,
        boundary_threshold: 1e-8,
    };
    let mut worst = 0.0f64;
    let mut probe = |t: f64, u: &Field| -> nls_virial::Result<()> {
        worst = worst.max((variance(u) - bound.parabola(t)).abs() / bound.v0);
        Ok(())
    };
    let traj = evolve(&u0, &params, &config, &MonitorSet::default(), &mut [&mut probe])?;
    let secs = started.elapsed().as_secs_f64();
    let t_det = traj.t_final();
    let ok = traj.status == RunStatus::BlowupDetected && t_det <= bound.t_root && worst <= 1e-6 && secs < 120.0;
    Ok((ok, format!(
        "status {:?} at t = {t_det:.5} <= variance root {:.5}; max |V - parabola| / V(0) = {worst:.2e} (<= 1e-6); {secs:.2}s",
        traj.status, bound.t_root
    )))
}

fn decomposition() -> Outcome {
    let mut worst_res = 0.0f64;
    let mut worst_r1 = f64::NEG_INFINITY;
    let mut parts = Vec::new();
    for (dim, geom, n, l, r, seed) in [
        (1usize, Geometry::Cartesian, 1024usize, 40.0, 5.0, 41u64),
        (3, Geometry::Radial3d, 1024, 40.0, 5.0, 43),
    ] {
        let grid = Grid::make(dim, n, l, geom)?;
        let params = criticality(dim, 3)?;
        let profile = build_virial_cutoff(r, grid.clone())?;
        if !profile.report().passed() {
            return Ok((false, format!("virial profile R={r} not certified")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..50 {
            let u = initial::random_smooth(grid.clone(), &mut rng, 6.0, 2);
            let s = decompose(&u, &profile, &params, 0.0)?;
            worst_res = worst_res.max(s.relative_residual());
            worst_r1 = worst_r1.max(s.r1);
        }
        parts.push(format!("{geom:?}"));
    }
    let ok = worst_res <= 1e-10 && worst_r1 <= 1e-12;
    Ok((ok, format!("50 random fields on each of {}: max relative residual {worst_res:.2e} (<= 1e-10), max R1 {worst_r1:.3e} (<= 1e-12)", parts.join(", "))))
}

fn cutoff_certification() -> Outcome {
    let grid = Grid::make(1, 1024, 40.0, Geometry::Cartesian)?;
    let mut ok = true;
    let mut lines = Vec::new();
    for r in [5.0, 10.0, 15.0] {
        let t0 = Instant::now();
        let ext = build_exterior_cutoff(r, grid.clone())?;
        let t_ext = t0.elapsed().as_secs_f64();
        let t0 = Instant::now();
        let vir = build_virial_cutoff(r, grid.clone())?;
        let t_vir = t0.elapsed().as_secs_f64();
        let slope = ext.report().margin("dphi_le_4_over_r").map_or(f64::NAN, |m| m.margin);
        let slope_ok = (slope - 1.0 / (4.0 * r)).abs() <= 1e-12;
        let names = ["phi_r2_inner", "phi_zero_outer", "phi_nonneg", "phi_le_r2", "d2phi_le_2", "d4phi_le_4_over_r2", "dphi_le_2r"];
        let all_present = names.iter().all(|n| vir.report().margin(n).is_some());
        let pass = ext.report().passed() && vir.report().passed() && slope_ok && all_present && t_ext < 1.0 && t_vir < 1.0;
        ok &= pass;
        let d2 = vir.report().margin("d2phi_le_2").map_or(f64::NAN, |m| m.margin);
        let d4 = vir.report().margin("d4phi_le_4_over_r2").map_or(f64::NAN, |m| m.margin);
        lines.push(format!(
            "R={r}: phi' margin {slope:.6e} vs 1/(4R) {:.6e}, virial d2 margin {d2:.1e}, d4 margin {d4:.3e}, support {:.2}, max|phi''''| {:.3e}, {:.0}/{:.0} ms",
            1.0 / (4.0 * r),
            vir.support(),
            vir.report().max_abs_d4,
            t_ext * 1e3,
            t_vir * 1e3
        ));
    }
    Ok((ok, lines.join("; ")))
}

fn exterior_budget() -> Outcome {
    let grid = Grid::make(1, 2048, 80.0, Geometry::Cartesian)?;
    let params = criticality(1, 3)?;
    let r = 15.0;
    let u0 = initial::compact_bump(grid, 1.0, 6.0);
    let mut series = Vec::new();
    let mut probe = |t: f64, u: &Field| -> nls_virial::Result<()> {
        series.push(ExteriorSample { t, exterior_mass: exterior_mass(u, r), grad_l2: gradient_l2(u)?, q: virial_q(u, &params)? });
        Ok(())
    };
    let traj = evolve(&u0, &params, &StepperConfig::fixed(1e-3, 3.0, 10), &MonitorSet::default(), &mut [&mut probe])?;
    let report = exterior_mass_budget(&u0, &series, r, 1.0, None)?;
    let strict = report.points.iter().all(|p| p.exterior_mass <= p.strict_bound);
    let peak = report.points.iter().map(|p| p.exterior_mass).fold(0.0, f64::max);
    let ok = traj.status == RunStatus::Completed && report.holds() && !report.points.is_empty();
    let violations = report.points.iter().filter(|p| !p.holds).count();
    Ok((ok, format!(
        "{:?} to t = {:.2}; {violations} violations over {} snapshots with t <= T_budget = {:.3}: max exterior mass {peak:.3e}, min margin {:.3e}; bound with rate 2 max(phi') m0 C0 also holds: {strict}",
        traj.status,
        traj.t_final(),
        report.points.len(),
        report.budget.t_budget,
        report.min_margin()
    )))
}

fn ground_state() -> Outcome {
    let grid1 = Grid::make(1, 1024, 30.0, Geometry::Cartesian)?;
    let mut worst_sech = 0.0f64;
    let mut worst_poho = 0.0f64;
    for p in [3, 5, 7] {
        let gs = solve_ground_state(1, p, grid1.clone())?;
        worst_poho = worst_poho.max(gs.pohozaev_defect());
        for &(r, q) in &gs.radial {
            worst_sech = worst_sech.max((q - initial::sech_profile(p, r)).abs());
        }
    }
    let gs = solve_ground_state(1, 3, grid1)?;
    let c = gn_constant(&gs);
    let c_err = (c - 1.0 / 3f64.sqrt()).abs();
    let mut worst_ratio = 0.0f64;
    let mut equality = 0.0f64;
    for (dim, geom, n, l) in [(1usize, Geometry::Cartesian, 1024usize, 30.0), (3, Geometry::Radial3d, 2048, 30.0)] {
        let grid = Grid::make(dim, n, l, geom)?;
        let gs = solve_ground_state(dim, 3, grid.clone())?;
        worst_poho = worst_poho.max(gs.pohozaev_defect());
        let c = gn_constant(&gs);
        let mut rng = ChaCha8Rng::seed_from_u64(70 + dim as u64);
        for _ in 0..100 {
            let u = initial::random_smooth(grid.clone(), &mut rng, 2.0, 3);
            worst_ratio = worst_ratio.max(GnNorms::of(&u, &gs.params)?.gn_quotient(&gs.params) / c);
        }
        let at_q = GnNorms::of(&gs.field, &gs.params)?.gn_quotient(&gs.params);
        equality = equality.max((at_q / c - 1.0).abs());
    }
    let ok = worst_sech <= 1e-6 && c_err <= 1e-6 && worst_poho <= 1e-8 && worst_ratio <= 1.0 && equality <= 1e-8;
    Ok((ok, format!(
        "max |Q - sech family| {worst_sech:.2e} (<= 1e-6); C_GN(1,3) = {c:.10} (err {c_err:.1e}); Pohozaev defect {worst_poho:.1e} (<= 1e-8); 100 random fields per case reach {worst_ratio:.4} of C_GN, equality at Q to {equality:.1e}"
    )))
}

fn galilean_reduction() -> Outcome {
    let mut worst = 0.0f64;
    for (dim, n, modes) in [(1usize, 512usize, vec![5i64]), (1, 512, vec![-9]), (2, 128, vec![3, -2])] {
        let grid = Grid::make(dim, n, 16.0, Geometry::Cartesian)?;
        let params = criticality(dim, 3)?;
        let u0 = initial::modulated_gaussian(grid, 1.1, 1.5, [0.7, -0.4, 0.0], &modes)?;
        let spec = BoostSpec::removing_momentum(&u0)?;
        if spec.rounding_error > 1e-12 {
            return Ok((false, format!("-P/M off the lattice by {:.1e}", spec.rounding_error)));
        }
        let v = boost(&u0, &spec.xi, 0.0)?;
        let m = mass(&u0)?;
        let p2: f64 = momentum(&u0)?.iter().map(|x| x * x).sum();
        worst = worst.max((energy(&v, &params)? - (energy(&u0, &params)? - p2 / m)).abs());
    }
    Ok((worst <= 1e-10, format!("max |E(boost) - (E - P^2/M)| = {worst:.2e} (<= 1e-10) over 3 lattice-compatible data sets")))
}

fn dual_threshold() -> Outcome {
    let params = criticality(3, 3)?;
    let c_cfl = 0.02;

    let started = Instant::now();
    let grid = Grid::make(3, 8192, 40.0, Geometry::Radial3d)?;
    let gs = solve_ground_state(3, 3, grid)?;
    let u_up = scaled_ground_state(&gs, 1.2);
    let report = evaluate(&u_up, &params, Some(&gs))?;
    let dual = report.dual.expect("intercritical");
    let config = StepperConfig {
        dt0: 1e-3,
        c_cfl,
        dt_min: c_cfl / (1.0 + (10.0 * gs.peak).powi(2)),
        snapshot_stride: 10,
        t_end: 5.0,
        boundary_threshold: 1e-8,
    };
    let traj = evolve(&u_up, &params, &config, &MonitorSet::default(), &mut [])?;
    let pers = monitor_persistence(&traj.records, &gs, &params)?;
    let up_secs = started.elapsed().as_secs_f64();
    let up_ok = dual.verdict == DualVerdict::Holds
        && traj.status == RunStatus::BlowupDetected
        && pers.regime == Regime::BlowupBranch
        && pers.passed
        && pers.delta0 > 0.0
        && up_secs < 300.0;

    let started = Instant::now();
    let grid = Grid::make(3, 16384, 200.0, Geometry::Radial3d)?;
    let gs_wide = solve_ground_state(3, 3, grid)?;
    let u_down = scaled_ground_state(&gs_wide, 0.5);
    let config = StepperConfig { t_end: 5.0, snapshot_stride: 50, ..config };
    let down = evolve(&u_down, &params, &config, &MonitorSet::default(), &mut [])?;
    let pers_down = monitor_persistence(&down.records, &gs_wide, &params)?;
    let sup_linf = down.records.iter().map(|r| r.linf).fold(0.0, f64::max);
    let down_secs = started.elapsed().as_secs_f64();
    let down_ok = down.status == RunStatus::Completed
        && pers_down.regime == Regime::Complementary
        && pers_down.passed
        && down_secs < 300.0;

    Ok((up_ok && down_ok, format!(
        "1.2Q: ME {:.4} < {:.4}, MG {:.4} > {:.4}; {:?} at t = {:.4}; monitors held over {} snapshots, eps0 {:.3}, delta0 {:.4}, beta0 {:.3}; {up_secs:.1}s. 0.5Q: {:?} to t = {:.1}, sup |u| {sup_linf:.3} (|u0| {:.3}), gradient side stayed below threshold: {}; {down_secs:.1}s",
        dual.mass_energy.unwrap_or(f64::NAN),
        dual.mass_energy_threshold,
        dual.mass_gradient,
        dual.mass_gradient_threshold,
        traj.status,
        traj.t_final(),
        pers.points.len(),
        pers.epsilon0,
        pers.delta0,
        pers.beta0,
        down.status,
        down.t_final(),
        u_down.max_abs(),
        pers_down.passed,
    )))
}

fn scaling() -> Outcome {
    let lambda = 2.0;
    let mut hs_worst = 0.0f64;
    let cases = [
        (1usize, 7u32, Geometry::Cartesian, 1024usize, 32.0),
        (3, 3, Geometry::Radial3d, 2048, 40.0),
    ];
    for (dim, p, geom, n, l) in cases {
        let grid = Grid::make(dim, n, l, geom)?;
        let params = criticality(dim, p)?;
        let u = initial::gaussian(grid, 1.0, 1.5, [0.0; 3]);
        let v = rescale(&u, &params, lambda)?;
        let a = hs_seminorm(&u, params.s_c)?;
        hs_worst = hs_worst.max((hs_seminorm(&v, params.s_c)? - a).abs() / a);
    }
    let params = criticality(1, 3)?;
    let grid = Grid::make(1, 256, 16.0, Geometry::Cartesian)?;
    let u0 = initial::gaussian(grid, 1.2, 1.0, [0.0; 3]);
    let coarse = evolve(&u0, &params, &StepperConfig::fixed(2e-3, 0.5, 50), &MonitorSet::default(), &mut [])?;
    let v0 = rescale(&u0, &params, lambda)?;
    let fine = evolve(&v0, &params, &StepperConfig::fixed(2e-3 / 4.0, 0.5 / 4.0, 50), &MonitorSet::default(), &mut [])?;
    let flow = fine.final_field.l2_distance(&rescale(&coarse.final_field, &params, lambda)?)?;
    let ok = hs_worst <= 1e-8 && flow <= 1e-6;
    Ok((ok, format!("H^s_c invariance error {hs_worst:.2e} (<= 1e-8); flow covariance at lambda = 2: {flow:.2e} (<= 1e-6)")))
}
