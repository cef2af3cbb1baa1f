use nls_virial::cutoffs::{build_virial_cutoff, CutoffFamily};
use nls_virial::{Geometry, Grid};
use std::time::Instant;

fn grid() -> std::sync::Arc<Grid> {
    Grid::make(1, 1024, 40.0, Geometry::Cartesian).unwrap()
}

#[test]
fn virial_profiles_certify_for_several_radii() {
    for r in [5.0, 10.0, 15.0] {
        let start = Instant::now();
        let profile = build_virial_cutoff(r, grid()).unwrap();
        let elapsed = start.elapsed();
        let report = profile.report();
        for m in &report.margins {
            println!("R={r} {:<22} margin {:+.3e} at {:.4}", m.name, m.margin, m.at);
        }
        println!("R={r} support {:.4} max|d4| R^2 = {:.4} in {elapsed:?}", report.support, report.max_abs_d4 * r * r);
        assert!(report.passed());
        assert_eq!(profile.family(), CutoffFamily::Virial);
        assert!(elapsed.as_secs_f64() < 1.0);
        assert!(report.margin("d4phi_le_4_over_r2").unwrap().margin > 0.0);
        assert!((report.max_d2 - 2.0).abs() < 1e-12);
    }
}
