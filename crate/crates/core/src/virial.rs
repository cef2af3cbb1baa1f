//! Localized virial functionals `I`, `I'`, `I''` and the decomposition
//! `I'' = 8Q + R₁ + R₂ + R₃`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cutoffs::{CutoffProfile, PieceKind};
use crate::error::{NlsError, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::observables::{self, EquationParams};

/// Radial weights of the virial identities, one entry per grid sample.
#[derive(Debug, Clone)]
pub struct VirialWeights {
    pub phi: Vec<f64>,
    /// `φ'/r`, the isotropic Hessian part and the `I'` weight.
    pub slope: Vec<f64>,
    /// `(φ'' − φ'/r)/r²`, the coefficient of `x_j x_k` in the Hessian.
    pub aniso: Vec<f64>,
    /// `Δφ`.
    pub lap: Vec<f64>,
    /// `Δ²φ`.
    pub bilap: Vec<f64>,
}

impl VirialWeights {
    pub fn new(profile: &CutoffProfile) -> Self {
        let grid = profile.grid();
        let n = grid.dim() as f64;
        let poly = profile.polynomial();
        let d: Vec<&[f64]> = (0..=4).map(|k| profile.derivative(k)).collect();
        let len = grid.len();
        let mut w = Self {
            phi: vec![0.0; len],
            slope: vec![0.0; len],
            aniso: vec![0.0; len],
            lap: vec![0.0; len],
            bilap: vec![0.0; len],
        };
        for (i, &r) in grid.radius().iter().enumerate() {
            match poly.piece_at(r).kind {
                PieceKind::Zero => {}
                PieceKind::One => w.phi[i] = 1.0,
                PieceKind::Quadratic => {
                    w.phi[i] = r * r;
                    w.slope[i] = 2.0;
                    w.lap[i] = 2.0 * n;
                }
                PieceKind::General => {
                    let (p1, p2, p3, p4) = (d[1][i], d[2][i], d[3][i], d[4][i]);
                    w.phi[i] = d[0][i];
                    w.slope[i] = p1 / r;
                    w.aniso[i] = (p2 - p1 / r) / (r * r);
                    w.lap[i] = p2 + (n - 1.0) * p1 / r;
                    w.bilap[i] = p4
                        + 2.0 * (n - 1.0) * p3 / r
                        + (n - 1.0) * (n - 3.0) * (p2 / (r * r) - p1 / (r * r * r));
                }
            }
        }
        w
    }
}

/// Spectral derivative data shared by the functionals.
struct Derivatives {
    /// `|∇u|²`
    grad2: Vec<f64>,
    /// `x·∇u`
    radial: Vec<Complex64>,
}

fn derivatives(grid: &Grid, u: &[Complex64]) -> Derivatives {
    let grad = grid.gradient(u);
    let len = u.len();
    let mut grad2 = vec![0.0; len];
    let mut radial = vec![Complex64::default(); len];
    if grid.is_radial() {
        for i in 0..len {
            grad2[i] = grad[0][i].norm_sqr();
            radial[i] = grad[0][i] * grid.radius()[i];
        }
    } else {
        for (i, x) in grid.positions().iter().enumerate() {
            for (a, g) in grad.iter().enumerate() {
                grad2[i] += g[i].norm_sqr();
                radial[i] += g[i] * x[a];
            }
        }
    }
    Derivatives { grad2, radial }
}

fn check_grid(field: &Field, profile: &CutoffProfile) -> Result<()> {
    if **field.grid() != **profile.grid() {
        return Err(NlsError::GridMismatch);
    }
    Ok(())
}

/// `I = ∫ φ |u|²`.
pub fn eval_i(field: &Field, profile: &CutoffProfile) -> Result<f64> {
    check_grid(field, profile)?;
    field.ensure_finite()?;
    Ok(field.grid().integrate(
        field
            .values()
            .iter()
            .zip(profile.derivative(0))
            .map(|(v, &phi)| phi * v.norm_sqr()),
    ))
}

/// `I' = 2 Im ∫ (φ'/r) (x·∇u) ū`.
pub fn eval_iprime(field: &Field, profile: &CutoffProfile) -> Result<f64> {
    check_grid(field, profile)?;
    field.ensure_finite()?;
    let w = VirialWeights::new(profile);
    let d = derivatives(field.grid(), field.values());
    Ok(iprime_from(field, &w, &d))
}

fn iprime_from(field: &Field, w: &VirialWeights, d: &Derivatives) -> f64 {
    2.0 * field.grid().integrate(
        (0..field.len()).map(|i| w.slope[i] * (d.radial[i] * field.values()[i].conj()).im),
    )
}

/// `I'' = 4 Re ∑ ∫ ∂_jk φ ∂_j u ∂_k ū − 2(p−1)/(p+1) ∫ Δφ |u|^{p+1} − ∫ Δ²φ |u|²`.
pub fn eval_idoubleprime(field: &Field, profile: &CutoffProfile, params: &EquationParams) -> Result<f64> {
    Ok(decompose(field, profile, params, 0.0)?.idoubleprime)
}

/// One time-stamped set of virial quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirialSample {
    pub t: f64,
    pub i: f64,
    pub iprime: f64,
    pub idoubleprime: f64,
    pub q: f64,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    /// `I'' − (8Q + R₁ + R₂ + R₃)`.
    pub residual: f64,
    /// `|I''| + 8|Q| + ∑|R_i|`, the scale of the residual.
    pub scale: f64,
}

impl VirialSample {
    pub fn relative_residual(&self) -> f64 {
        if self.scale == 0.0 {
            0.0
        } else {
            self.residual.abs() / self.scale
        }
    }
}

/// Evaluates every virial quantity with one shared quadrature.
pub fn decompose(field: &Field, profile: &CutoffProfile, params: &EquationParams, t: f64) -> Result<VirialSample> {
    check_grid(field, profile)?;
    field.ensure_finite()?;
    let grid = field.grid();
    let n = grid.dim() as f64;
    let p = params.p as f64;
    let w = VirialWeights::new(profile);
    let d = derivatives(grid, field.values());
    let u = field.values();
    let pot: Vec<f64> = u.iter().map(|v| v.norm_sqr().powi(params.p as i32 / 2 + 1)).collect();
    let mass: Vec<f64> = u.iter().map(|v| v.norm_sqr()).collect();
    let c = 2.0 * (p - 1.0) / (p + 1.0);
    let idx = 0..field.len();

    let hessian = 4.0 * grid.integrate(idx.clone().map(|i| w.slope[i] * d.grad2[i] + w.aniso[i] * d.radial[i].norm_sqr()));
    let idoubleprime = hessian
        - c * grid.integrate(idx.clone().map(|i| w.lap[i] * pot[i]))
        - grid.integrate(idx.clone().map(|i| w.bilap[i] * mass[i]));

    let kinetic = grid.integrate(d.grad2.iter().copied());
    let potential = grid.integrate(pot.iter().copied());
    let q = kinetic - params.virial_coefficient() * potential;
    let r1 = 4.0
        * grid.integrate(idx.clone().map(|i| (w.slope[i] - 2.0) * d.grad2[i] + w.aniso[i] * d.radial[i].norm_sqr()));
    let r2 = -c * grid.integrate(idx.clone().map(|i| (w.lap[i] - 2.0 * n) * pot[i]));
    let r3 = -grid.integrate(idx.map(|i| w.bilap[i] * mass[i]));
    let residual = idoubleprime - (8.0 * q + r1 + r2 + r3);
    Ok(VirialSample {
        t,
        i: grid.integrate(w.phi.iter().zip(&mass).map(|(a, b)| a * b)),
        iprime: iprime_from(field, &w, &d),
        idoubleprime,
        q,
        r1,
        r2,
        r3,
        residual,
        scale: idoubleprime.abs() + 8.0 * q.abs() + r1.abs() + r2.abs() + r3.abs(),
    })
}

/// Interpolation exponent with `1/(p+1) = (1−θ)/q + θ/2`.
pub fn interpolation_exponent(p: u32, q: f64) -> Result<f64> {
    let a = 1.0 / (p as f64 + 1.0);
    let inv_q = if q.is_infinite() { 0.0 } else { 1.0 / q };
    if !(inv_q < a) {
        return Err(NlsError::Precondition(format!(
            "interpolation needs q > p + 1 = {}, got {q}",
            p + 1
        )));
    }
    Ok((a - inv_q) / (0.5 - inv_q))
}

/// Outcome of testing `I'' ≤ 8Q + C̃ ‖u‖^θ_{L²(|x|>R)}` on one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizationCheck {
    pub theta: f64,
    pub exterior_l2: f64,
    /// `C₀`, the running sup of `‖u‖_{L^q}` supplied by the caller.
    pub c0: f64,
    /// `I'' − 8Q`.
    pub excess: f64,
    /// Smallest `C̃` that makes this sample satisfy the bound (zero when
    /// the excess is nonpositive, infinite when it is positive with no
    /// exterior mass).
    pub required_c_tilde: f64,
}

impl LocalizationCheck {
    /// `8Q + C̃ ‖u‖^θ − I''` for a given `C̃`.
    pub fn margin(&self, c_tilde: f64) -> f64 {
        c_tilde * self.exterior_l2.powf(self.theta) - self.excess
    }
}

pub fn check_localization_bound(
    sample: &VirialSample,
    exterior_l2: f64,
    params: &EquationParams,
    c0: f64,
    q: f64,
) -> Result<LocalizationCheck> {
    let theta = interpolation_exponent(params.p, q)?;
    let excess = sample.idoubleprime - 8.0 * sample.q;
    let ext = exterior_l2.powf(theta);
    let required_c_tilde = if excess <= 0.0 {
        0.0
    } else if ext > 0.0 {
        excess / ext
    } else {
        f64::INFINITY
    };
    Ok(LocalizationCheck {
        theta,
        exterior_l2,
        c0,
        excess,
        required_c_tilde,
    })
}

/// Snapshot data consumed by [`exterior_mass_budget`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExteriorSample {
    pub t: f64,
    /// `∫_{|x|≥R} |u|²`
    pub exterior_mass: f64,
    pub grad_l2: f64,
    pub q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExteriorMassBudget {
    pub radius: f64,
    pub eta0: f64,
    /// `‖u₀‖_{L²}`
    pub m0: f64,
    /// Largest `‖∇u‖_{L²}` over the supplied series.
    pub c0_bar: f64,
    /// `η₀ R / (4 m₀ C̄₀)`
    pub t_budget: f64,
    /// `sup Q` over the series.
    pub beta0: f64,
    pub theta_q: Option<f64>,
    pub c_tilde: Option<f64>,
    /// `β₀ η₀² / (4 m₀ C̄₀)²`
    pub alpha0: f64,
    /// `∫_{|x|≥R/2} |u₀|²`
    pub initial_half_mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetPoint {
    pub t: f64,
    pub exterior_mass: f64,
    /// `∫_{|x|≥R/2}|u₀|² + 4 m₀ C̄₀ t / R`
    pub bound: f64,
    /// Same with the rate `2 max φ' m₀ C̄₀` that follows from `I' = 2 Im ∫ …`.
    pub strict_bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub budget: ExteriorMassBudget,
    pub points: Vec<BudgetPoint>,
}

impl BudgetReport {
    pub fn holds(&self) -> bool {
        self.points.iter().all(|p| p.holds)
    }

    /// Smallest `bound − exterior_mass` over the checked points.
    pub fn min_margin(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.bound - p.exterior_mass)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Checks the exterior-mass inequality at every snapshot with `t ≤ T_budget`.
pub fn exterior_mass_budget(
    initial: &Field,
    series: &[ExteriorSample],
    radius: f64,
    eta0: f64,
    localization: Option<(f64, f64)>,
) -> Result<BudgetReport> {
    if series.is_empty() {
        return Err(NlsError::Precondition("empty trajectory".into()));
    }
    if !(eta0 > 0.0 && radius > 0.0) {
        return Err(NlsError::Precondition("need eta0 > 0 and R > 0".into()));
    }
    let m0 = observables::mass(initial)?.sqrt();
    let c0_bar = series.iter().map(|s| s.grad_l2).fold(0.0, f64::max);
    let beta0 = series.iter().map(|s| s.q).fold(f64::NEG_INFINITY, f64::max);
    let initial_half_mass = observables::exterior_mass(initial, radius / 2.0);
    let t_budget = eta0 * radius / (4.0 * m0 * c0_bar);
    let slope = crate::cutoffs::exterior_max_slope(radius);
    let points = series
        .iter()
        .filter(|s| s.t <= t_budget)
        .map(|s| {
            let bound = initial_half_mass + 4.0 * m0 * c0_bar * s.t / radius;
            BudgetPoint {
                t: s.t,
                exterior_mass: s.exterior_mass,
                bound,
                strict_bound: initial_half_mass + 2.0 * slope * m0 * c0_bar * s.t,
                holds: s.exterior_mass <= bound,
            }
        })
        .collect();
    Ok(BudgetReport {
        budget: ExteriorMassBudget {
            radius,
            eta0,
            m0,
            c0_bar,
            t_budget,
            beta0,
            theta_q: localization.map(|l| l.0),
            c_tilde: localization.map(|l| l.1),
            alpha0: beta0 * eta0 * eta0 / (4.0 * m0 * c0_bar).powi(2),
            initial_half_mass,
        },
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutoffs::{build_exterior_cutoff, build_virial_cutoff, pure_quadratic};
    use crate::grid::Geometry;
    use crate::initial;
    use crate::observables::criticality;
    use std::f64::consts::PI;

    #[test]
    fn quadratic_variance_of_gaussian() {
        let grid = Grid::make(1, 512, 20.0, Geometry::Cartesian).unwrap();
        let u = initial::gaussian(grid.clone(), 1.0, 1.0, [0.0; 3]);
        let phi = pure_quadratic(grid);
        assert!((eval_i(&u, &phi).unwrap() - PI.sqrt() / 2.0).abs() < 1e-12);
        assert!(eval_iprime(&u, &phi).unwrap().abs() < 1e-14);
    }

    #[test]
    fn quadratic_weight_gives_eight_q() {
        let grid = Grid::make(2, 64, 8.0, Geometry::Cartesian).unwrap();
        let params = criticality(2, 3).unwrap();
        let u = initial::modulated_gaussian(grid.clone(), 0.8, 1.2, [0.3, -0.2, 0.0], &[1, 2]).unwrap();
        let s = decompose(&u, &pure_quadratic(grid), &params, 0.0).unwrap();
        assert!((s.idoubleprime - 8.0 * s.q).abs() < 1e-12 * s.scale);
        assert_eq!((s.r1, s.r2, s.r3), (0.0, 0.0, 0.0));
    }

    #[test]
    fn zero_field_and_disjoint_support() {
        let grid = Grid::make(1, 512, 20.0, Geometry::Cartesian).unwrap();
        let params = criticality(1, 3).unwrap();
        let ext = build_exterior_cutoff(8.0, grid.clone()).unwrap();
        let bump = initial::compact_bump(grid.clone(), 1.0, 4.0);
        assert_eq!(eval_i(&bump, &ext).unwrap(), 0.0);
        let vir = build_virial_cutoff(8.0, grid.clone()).unwrap();
        assert_eq!(eval_idoubleprime(&Field::zeros(grid), &vir, &params).unwrap(), 0.0);
    }

    #[test]
    fn theta_examples() {
        assert!((interpolation_exponent(3, 6.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((interpolation_exponent(3, f64::INFINITY).unwrap() - 0.5).abs() < 1e-15);
        assert!(interpolation_exponent(3, 4.0).is_err());
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let g1 = Grid::make(1, 128, 20.0, Geometry::Cartesian).unwrap();
        let g2 = Grid::make(1, 256, 20.0, Geometry::Cartesian).unwrap();
        let u = initial::gaussian(g1, 1.0, 1.0, [0.0; 3]);
        assert_eq!(eval_i(&u, &pure_quadratic(g2)), Err(NlsError::GridMismatch));
    }
}
