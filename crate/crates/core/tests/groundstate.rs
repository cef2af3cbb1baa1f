use nls_virial::groundstate::{
    gn_constant, ode_residual, scaled_ground_state, solve_ground_state, thresholds, GnNorms,
    GroundStateProfile,
};
use nls_virial::observables::{criticality, rescale};
use nls_virial::{initial, Geometry, Grid};
use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Reference values from a radial shooting computation (RK45, bisection on
/// Q(0)) done before the solver existed: (N, p, Q(0), ‖Q‖², ‖∇Q‖², ∫Q^{p+1}).
const FROZEN: &[(usize, u32, f64, f64, f64, f64)] = &[
    (1, 3, 1.414213562, 4.0, 4.0 / 3.0, 16.0 / 3.0),
    (1, 5, 1.316074013, 2.720699046, 1.360349523, 4.081048570),
    (2, 3, 2.206200865, 11.70089650, 11.70089650, 23.40179290),
    (2, 5, 2.000289944, 3.983447433, 7.966894945, 11.95034242),
    (3, 3, 4.337387680, 18.89725130, 56.69175391, 75.58900521),
];

fn grid_for(dim: usize) -> std::sync::Arc<Grid> {
    match dim {
        1 => Grid::make(1, 1024, 30.0, Geometry::Cartesian).unwrap(),
        2 => Grid::make(2, 1024, 26.0, Geometry::Cartesian).unwrap(),
        _ => Grid::make(3, 2048, 30.0, Geometry::Radial3d).unwrap(),
    }
}

fn solve(dim: usize, p: u32) -> GroundStateProfile {
    static CACHE: Mutex<Vec<(usize, u32, GroundStateProfile)>> = Mutex::new(Vec::new());
    if let Some((.., gs)) = CACHE.lock().unwrap().iter().find(|e| e.0 == dim && e.1 == p) {
        return gs.clone();
    }
    let gs = solve_ground_state(dim, p, grid_for(dim)).unwrap();
    CACHE.lock().unwrap().push((dim, p, gs.clone()));
    gs
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// `Q'' + (N-1)/r Q' - Q + Q^p = 0` by RK4. Returns +1 if the orbit crosses
/// zero (peak too large), -1 if it turns back up (too small), plus samples.
fn shoot(dim: usize, p: u32, a: f64, h: f64, r_max: f64) -> (i32, Vec<(f64, f64, f64)>) {
    let f = |r: f64, q: f64, dq: f64| -> (f64, f64) {
        (dq, -(dim as f64 - 1.0) / r * dq + q - q.abs().powi(p as i32 - 1) * q)
    };
    let c = (a - a.powi(p as i32)) / dim as f64;
    let mut r = h;
    let mut q = a + c * h * h / 2.0;
    let mut dq = c * h;
    let mut out = vec![(0.0, a, 0.0), (r, q, dq)];
    while r < r_max {
        let (k1q, k1d) = f(r, q, dq);
        let (k2q, k2d) = f(r + h / 2.0, q + h / 2.0 * k1q, dq + h / 2.0 * k1d);
        let (k3q, k3d) = f(r + h / 2.0, q + h / 2.0 * k2q, dq + h / 2.0 * k2d);
        let (k4q, k4d) = f(r + h, q + h * k3q, dq + h * k3d);
        q += h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
        dq += h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
        r += h;
        if q < 0.0 {
            return (1, out);
        }
        if dq > 0.0 {
            return (-1, out);
        }
        out.push((r, q, dq));
    }
    (0, out)
}

struct Shot {
    peak: f64,
    mass: f64,
    kinetic: f64,
    potential: f64,
}

fn shooting_oracle(dim: usize, p: u32) -> Shot {
    let h = 1e-3;
    let (mut lo, mut hi) = (1.0 + 1e-9, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if shoot(dim, p, mid, h, 40.0).0 > 0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (_, samples) = shoot(dim, p, lo, h, 40.0);
    // Stop where the orbit leaves the decaying branch.
    let cut = samples
        .iter()
        .position(|&(_, q, _)| q < 1e-7)
        .unwrap_or(samples.len());
    let area = |r: f64| match dim {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI * r,
        _ => 4.0 * std::f64::consts::PI * r * r,
    };
    let trap = |g: &dyn Fn(f64, f64, f64) -> f64| -> f64 {
        samples[..cut]
            .windows(2)
            .map(|w| 0.5 * h * (g(w[0].0, w[0].1, w[0].2) + g(w[1].0, w[1].1, w[1].2)))
            .sum()
    };
    Shot {
        peak: lo,
        mass: trap(&|r, q, _| area(r) * q * q),
        kinetic: trap(&|r, _, d| area(r) * d * d),
        potential: trap(&|r, q, _| area(r) * q.powi(p as i32 + 1)),
    }
}

#[test]
fn petviashvili_matches_frozen_references() {
    for &(dim, p, peak, mass, kinetic, potential) in FROZEN {
        let gs = solve(dim, p);
        println!(
            "N={dim} p={p}: Q(0)={:.10} M={:.10} G={:.10} P={:.10} C_GN={:.10} iters={}",
            gs.peak, gs.norms.mass, gs.norms.kinetic, gs.norms.potential, gs.c_gn, gs.iterations
        );
        assert!(rel(gs.peak, peak) < 1e-8, "peak {}", gs.peak);
        assert!(rel(gs.norms.mass, mass) < 1e-8, "mass {}", gs.norms.mass);
        assert!(rel(gs.norms.kinetic, kinetic) < 1e-8, "kinetic {}", gs.norms.kinetic);
        assert!(rel(gs.norms.potential, potential) < 1e-8, "potential {}", gs.norms.potential);
        assert!(gs.shape_ok());
        assert!(gs.monotone, "residual not monotone for N={dim} p={p}");
    }
}

#[test]
fn petviashvili_agrees_with_rk_shooting() {
    for &(dim, p, ..) in FROZEN {
        let gs = solve(dim, p);
        let shot = shooting_oracle(dim, p);
        println!(
            "N={dim} p={p}: shooting Q(0)={:.10} M={:.8} G={:.8} P={:.8}",
            shot.peak, shot.mass, shot.kinetic, shot.potential
        );
        assert!(rel(gs.peak, shot.peak) < 1e-7);
        assert!(rel(gs.norms.mass, shot.mass) < 1e-5);
        assert!(rel(gs.norms.kinetic, shot.kinetic) < 1e-5);
        assert!(rel(gs.norms.potential, shot.potential) < 1e-5);
    }
}

#[test]
fn every_case_solves_the_elliptic_equation() {
    for (dim, p) in [(1, 3), (1, 5), (1, 7), (2, 3), (2, 5), (3, 3)] {
        let gs = solve(dim, p);
        let res = ode_residual(&gs, 0.9).unwrap();
        let poho = gs.pohozaev_defect();
        println!("N={dim} p={p}: residual {res:.2e}, pohozaev {poho:.2e}");
        assert!(res < 1e-8);
        assert!(poho < 1e-8);
        assert!(gs.shape_ok());
    }
}

#[test]
fn one_dimensional_profiles_are_sech_powers() {
    for p in [3, 5, 7] {
        let gs = solve(1, p);
        let worst = gs
            .radial
            .iter()
            .map(|&(r, q)| (q - initial::sech_profile(p, r)).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "p={p}: {worst}");
    }
    let gs = solve(1, 3);
    assert!((gn_constant(&gs) - 1.0 / 3f64.sqrt()).abs() < 1e-6);
}

#[test]
fn gn_inequality_is_sharp_at_the_ground_state() {
    for (dim, p) in [(1, 3), (2, 3), (3, 3)] {
        let gs = solve(dim, p);
        let c = gn_constant(&gs);
        let mut rng = ChaCha8Rng::seed_from_u64(7 + dim as u64);
        let sweep = match dim {
            2 => Grid::make(2, 128, 20.0, Geometry::Cartesian).unwrap(),
            _ => gs.field.grid().clone(),
        };
        let mut best = 0.0f64;
        for _ in 0..100 {
            let u = initial::random_smooth(sweep.clone(), &mut rng, 2.0, 3);
            let ratio = GnNorms::of(&u, &gs.params).unwrap().gn_quotient(&gs.params) / c;
            assert!(ratio <= 1.0 + 1e-10, "N={dim}: ratio {ratio}");
            best = best.max(ratio);
        }
        let at_q = GnNorms::of(&gs.field, &gs.params).unwrap().gn_quotient(&gs.params);
        assert!(rel(at_q, c) < 1e-8);
        println!("N={dim} p={p}: best random quotient {best:.4} of C_GN");
    }
}

#[test]
fn constants_are_scaling_invariant() {
    let gs = solve(3, 3);
    let t = thresholds(&gs).unwrap();
    assert!(rel(t.mass_energy, 18.89725130) < 1e-7);
    assert!(rel(t.mass_gradient, 5.721101238) < 1e-7);
    let params = criticality(3, 3).unwrap();
    let scaled = rescale(&gs.field, &params, 1.5).unwrap();
    let norms = GnNorms::of(&scaled, &params).unwrap();
    assert!(rel(norms.gn_quotient(&params), gs.c_gn) < 1e-10);
    let e = norms.kinetic - 0.5 * norms.potential;
    let s = params.s_c;
    assert!(rel(norms.mass.powf(1.0 - s) * e.powf(s), t.mass_energy) < 1e-8);
    assert!(rel(norms.mass.sqrt().powf(1.0 - s) * norms.kinetic.sqrt().powf(s), t.mass_gradient) < 1e-8);

    let gs25 = solve(2, 5);
    let t = thresholds(&gs25).unwrap();
    assert!(rel(t.mass_energy, 3.983447506) < 1e-7);
    assert!(rel(t.mass_gradient, 2.373488027) < 1e-7);
}

#[test]
fn amplified_profile_scales_norms() {
    let gs = solve(3, 3);
    let u = scaled_ground_state(&gs, 1.2);
    let norms = GnNorms::of(&u, &gs.params).unwrap();
    assert!(rel(norms.mass, 1.44 * gs.norms.mass) < 1e-12);
    let mut csv = Vec::new();
    gs.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("r,Q\n"));
    assert_eq!(text.lines().count(), gs.radial.len() + 1);
}
