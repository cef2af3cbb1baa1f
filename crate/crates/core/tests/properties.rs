use std::sync::Arc;

use nls_virial::observables::{
    criticality, e_q_identity_residual, energy_parts, hs_seminorm, mass, momentum, rescale,
};
use nls_virial::{initial, Field, Geometry, Grid};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn grids() -> Vec<Arc<Grid>> {
    vec![
        Grid::make(1, 256, 16.0, Geometry::Cartesian).unwrap(),
        Grid::make(2, 32, 8.0, Geometry::Cartesian).unwrap(),
        Grid::make(3, 512, 20.0, Geometry::Radial3d).unwrap(),
    ]
}

fn random_field(grid: &Arc<Grid>, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    initial::random_smooth(grid.clone(), &mut rng, 2.0, 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn parseval_and_round_trip(seed in any::<u64>(), which in 0usize..3) {
        let grid = &grids()[which];
        let u = random_field(grid, seed);
        let coeffs = grid.transform(u.values()).unwrap();
        let physical = mass(&u).unwrap();
        let spectral = grid.spectral_l2_squared(&coeffs);
        prop_assert!((physical - spectral).abs() <= 1e-12 * physical);
        let back = grid.inverse_transform(&coeffs).unwrap();
        let err = back.iter().zip(u.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-12 * u.max_abs());
    }

    #[test]
    fn hs_seminorm_is_scaling_invariant(seed in any::<u64>(), p in prop::sample::select(vec![3u32, 5, 7])) {
        let grid = Grid::make(1, 512, 32.0, Geometry::Cartesian).unwrap();
        let params = criticality(1, p).unwrap();
        let u = random_field(&grid, seed);
        let v = rescale(&u, &params, 2.0).unwrap();
        prop_assume!(params.s_c >= 0.0);
        let a = hs_seminorm(&u, params.s_c).unwrap();
        let b = hs_seminorm(&v, params.s_c).unwrap();
        prop_assert!((a - b).abs() <= 1e-8 * a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn energy_and_virial_q_identity(seed in any::<u64>(), which in 0usize..3, p in prop::sample::select(vec![3u32, 5])) {
        let grid = &grids()[which];
        let params = criticality(grid.dim(), p).unwrap();
        let u = random_field(grid, seed);
        let parts = energy_parts(&u, &params).unwrap();
        let res = e_q_identity_residual(&u, &params).unwrap();
        prop_assert!(res.abs() <= 1e-12 * (parts.kinetic + parts.potential));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn lattice_modulation_shifts_momentum(seed in any::<u64>(), m in -6i64..=6) {
        let grid = Grid::make(1, 256, 16.0, Geometry::Cartesian).unwrap();
        let params = criticality(1, 3).unwrap();
        let u = random_field(&grid, seed);
        let xi = initial::lattice_vector(&grid, &[m])[0];
        let v = u.with_values(
            u.values().iter().zip(grid.positions()).map(|(c, x)| c * Complex64::from_polar(1.0, xi * x[0])).collect(),
        ).unwrap();
        let (mu, pu) = (mass(&u).unwrap(), momentum(&u).unwrap()[0]);
        let pv = momentum(&v).unwrap()[0];
        prop_assert!((pv - (pu + xi * mu)).abs() <= 1e-10 * (1.0 + pu.abs() + mu));
        let eu = energy_parts(&u, &params).unwrap().energy(&params);
        let ev = energy_parts(&v, &params).unwrap().energy(&params);
        prop_assert!((ev - (eu + 2.0 * xi * pu + xi * xi * mu)).abs() <= 1e-10 * (1.0 + eu.abs() + xi * xi * mu));
    }
}
