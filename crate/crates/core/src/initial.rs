//! Closed-form initial data sampled on a grid.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{NlsError, Result};
use crate::field::Field;
use crate::grid::Grid;

fn shifted(x: &[f64; 3], center: &[f64; 3], dim: usize) -> f64 {
    (0..dim).map(|a| (x[a] - center[a]).powi(2)).sum::<f64>()
}

/// `A exp(-|x - c|² / (2 w²))`.
pub fn gaussian(grid: Arc<Grid>, amplitude: f64, width: f64, center: [f64; 3]) -> Field {
    let dim = grid.dim();
    let radial = grid.is_radial();
    Field::from_fn(grid, |x, r| {
        let d2 = if radial { r * r } else { shifted(x, &center, dim) };
        Complex64::new(amplitude * (-d2 / (2.0 * width * width)).exp(), 0.0)
    })
}

/// Lattice wavevector `m π / L` for integer modes `m`.
pub fn lattice_vector(grid: &Grid, modes: &[i64]) -> Vec<f64> {
    let dk = grid.spec().dk();
    modes.iter().map(|&m| m as f64 * dk).collect()
}

/// Gaussian multiplied by the plane wave `exp(i k·x)` with `k = m π / L`.
pub fn modulated_gaussian(
    grid: Arc<Grid>,
    amplitude: f64,
    width: f64,
    center: [f64; 3],
    modes: &[i64],
) -> Result<Field> {
    if grid.is_radial() {
        return Err(NlsError::Precondition(
            "modulated data is not radial; use a cartesian grid".into(),
        ));
    }
    if modes.len() != grid.dim() {
        return Err(NlsError::Precondition(format!(
            "expected {} modulation modes, got {}",
            grid.dim(),
            modes.len()
        )));
    }
    let k = lattice_vector(&grid, modes);
    let dim = grid.dim();
    Ok(Field::from_fn(grid, |x, _| {
        let phase: f64 = (0..dim).map(|a| k[a] * x[a]).sum();
        let env = amplitude * (-shifted(x, &center, dim) / (2.0 * width * width)).exp();
        Complex64::from_polar(env, phase)
    }))
}

/// One-dimensional ground state `((p+1)/2)^{1/(p-1)} sech^{2/(p-1)}((p-1)x/2)`.
pub fn sech_profile(p: u32, x: f64) -> f64 {
    let pm1 = p as f64 - 1.0;
    let peak = ((p as f64 + 1.0) / 2.0).powf(1.0 / pm1);
    peak * (1.0 / (pm1 * x / 2.0).cosh()).powf(2.0 / pm1)
}

/// Standing soliton of the 1D equation centered at `center`.
pub fn soliton(grid: Arc<Grid>, p: u32, center: f64) -> Result<Field> {
    if grid.dim() != 1 {
        return Err(NlsError::Precondition(
            "closed-form solitons exist only for N = 1; use scaled_ground_state".into(),
        ));
    }
    Ok(Field::from_fn(grid, |x, _| {
        Complex64::new(sech_profile(p, x[0] - center), 0.0)
    }))
}

/// `A exp(1 - 1/(1 - (r/a)²))` for `r < a`, zero outside.
pub fn compact_bump(grid: Arc<Grid>, amplitude: f64, support: f64) -> Field {
    Field::from_fn(grid, |_, r| {
        let s = r / support;
        if s < 1.0 {
            Complex64::new(amplitude * (1.0 - 1.0 / (1.0 - s * s)).exp(), 0.0)
        } else {
            Complex64::default()
        }
    })
}

fn normal_complex(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// A smooth random field: a Gaussian envelope of width `width` times a
/// random combination of low lattice modes (cartesian), or a random sum of
/// radial Gaussians with widths in `[width/2, width]` (ray).
pub fn random_smooth(grid: Arc<Grid>, rng: &mut impl Rng, width: f64, max_mode: i64) -> Field {
    if grid.is_radial() {
        let terms: Vec<(Complex64, f64)> = (0..4)
            .map(|_| {
                let c = normal_complex(rng);
                (c, width * rng.gen_range(0.5..=1.0))
            })
            .collect();
        return Field::from_fn(grid, |_, r| {
            terms
                .iter()
                .map(|(c, w)| c * (-r * r / (2.0 * w * w)).exp())
                .sum()
        });
    }
    let dim = grid.dim();
    let dk = grid.spec().dk();
    let count = (2 * max_mode + 1).pow(dim as u32) as usize;
    let mut modes = Vec::new();
    for idx in 0..count {
        let mut rest = idx;
        let mut k = [0.0; 3];
        for slot in k.iter_mut().take(dim) {
            let m = (rest % (2 * max_mode as usize + 1)) as i64 - max_mode;
            rest /= 2 * max_mode as usize + 1;
            *slot = m as f64 * dk;
        }
        let c = normal_complex(rng);
        modes.push((k, c));
    }
    let shift: [f64; 3] = [
        rng.gen_range(-0.5..0.5) * width,
        rng.gen_range(-0.5..0.5) * width,
        rng.gen_range(-0.5..0.5) * width,
    ];
    let norm = 1.0 / (count as f64).sqrt();
    Field::from_fn(grid, |x, _| {
        let env = (-shifted(x, &shift, dim) / (2.0 * width * width)).exp();
        let wave: Complex64 = modes
            .iter()
            .map(|(k, c)| {
                let phase: f64 = (0..dim).map(|a| k[a] * x[a]).sum();
                c * Complex64::from_polar(1.0, phase)
            })
            .sum();
        wave * env * norm
    })
}

/// Samples the radial function `f(|x|)`.
pub fn radial_function(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Field {
    Field::from_fn(grid, |_, r| Complex64::new(f(r), 0.0))
}

/// Mass of [`gaussian`] over ℝ^N.
pub fn gaussian_mass(amplitude: f64, width: f64, dim: usize) -> f64 {
    amplitude * amplitude * (PI * width * width).powf(dim as f64 / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Geometry;
    use crate::observables::{mass, momentum};

    #[test]
    fn gaussian_mass_matches_closed_form() {
        let grid = Grid::make(2, 128, 10.0, Geometry::Cartesian).unwrap();
        let u = gaussian(grid, 1.5, 1.2, [0.0; 3]);
        assert!((mass(&u).unwrap() - gaussian_mass(1.5, 1.2, 2)).abs() < 1e-10);
    }

    #[test]
    fn modulated_gaussian_carries_momentum() {
        let grid = Grid::make(1, 256, 10.0, Geometry::Cartesian).unwrap();
        let u = modulated_gaussian(grid.clone(), 1.0, 1.0, [0.0; 3], &[3]).unwrap();
        let k = 3.0 * PI / 10.0;
        let m = mass(&u).unwrap();
        assert!((momentum(&u).unwrap()[0] - k * m).abs() < 1e-10);
        assert!(modulated_gaussian(grid, 1.0, 1.0, [0.0; 3], &[1, 2]).is_err());
    }

    #[test]
    fn sech_profile_peaks() {
        assert!((sech_profile(3, 0.0) - 2f64.sqrt()).abs() < 1e-15);
        assert!((sech_profile(5, 0.0) - 3f64.powf(0.25)).abs() < 1e-15);
    }

    #[test]
    fn compact_bump_vanishes_outside_support() {
        let grid = Grid::make(1, 128, 10.0, Geometry::Cartesian).unwrap();
        let u = compact_bump(grid, 2.0, 3.0);
        for (x, v) in u.grid().positions().iter().zip(u.values()) {
            if x[0].abs() >= 3.0 {
                assert_eq!(v.norm(), 0.0);
            }
        }
        assert!((u.max_abs() - 2.0).abs() < 1e-15);
    }
}
