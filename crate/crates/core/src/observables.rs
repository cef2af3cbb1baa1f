//! Scalar functionals of the wave function: conservation laws, the virial
//! functional `Q(u)`, Lebesgue norms and homogeneous Sobolev seminorms.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{NlsError, Result};
use crate::field::Field;
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criticality {
    MassSubcritical,
    MassCritical,
    Intercritical,
    EnergyCritical,
    EnergySupercritical,
}

impl fmt::Display for Criticality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Criticality::MassSubcritical => "mass-subcritical",
            Criticality::MassCritical => "mass-critical",
            Criticality::Intercritical => "intercritical",
            Criticality::EnergyCritical => "energy-critical",
            Criticality::EnergySupercritical => "energy-supercritical",
        };
        f.write_str(s)
    }
}

/// Dimension, odd power and the derived critical regularity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquationParams {
    pub dim: usize,
    pub p: u32,
    pub s_c: f64,
    pub class: Criticality,
}

/// Classifies `i u_t + Δu + |u|^{p-1} u = 0` in dimension `dim`.
pub fn criticality(dim: usize, p: u32) -> Result<EquationParams> {
    if dim == 0 {
        return Err(NlsError::InvalidParams("dimension must be >= 1".into()));
    }
    if p < 3 || p % 2 == 0 {
        return Err(NlsError::InvalidParams(format!(
            "power p must be an odd integer >= 3, got {p}"
        )));
    }
    let n = dim as i64;
    let pm1 = p as i64 - 1;
    let mass = pm1 * n - 4;
    let class = if mass < 0 {
        Criticality::MassSubcritical
    } else if mass == 0 {
        Criticality::MassCritical
    } else if n <= 2 {
        Criticality::Intercritical
    } else {
        match (pm1 * (n - 2) - 4).signum() {
            -1 => Criticality::Intercritical,
            0 => Criticality::EnergyCritical,
            _ => Criticality::EnergySupercritical,
        }
    };
    Ok(EquationParams {
        dim,
        p,
        s_c: critical_index(dim, p),
        class,
    })
}

fn critical_index(dim: usize, p: u32) -> f64 {
    dim as f64 / 2.0 - 2.0 / (p as f64 - 1.0)
}

impl EquationParams {
    pub fn new(dim: usize, p: u32) -> Result<Self> {
        criticality(dim, p)
    }

    /// `N(p-1) / (2(p+1))`, the potential coefficient in `Q(u)`.
    pub fn virial_coefficient(&self) -> f64 {
        let p = self.p as f64;
        self.dim as f64 * (p - 1.0) / (2.0 * (p + 1.0))
    }

    /// `N(p-1)/4`, the ratio linking `Q` and `E`.
    pub fn qe_ratio(&self) -> f64 {
        self.dim as f64 * (self.p as f64 - 1.0) / 4.0
    }

    /// Scaling exponent `2/(p-1)` of `u_λ = λ^{2/(p-1)} u(λ x)`.
    pub fn scaling_exponent(&self) -> f64 {
        2.0 / (self.p as f64 - 1.0)
    }

    pub fn is_consistent(&self) -> bool {
        self.s_c == critical_index(self.dim, self.p)
    }

    pub fn is_intercritical(&self) -> bool {
        self.s_c > 0.0 && self.s_c < 1.0
    }
}

/// Mass, momentum and energy of a field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConservedSet {
    pub mass: f64,
    pub momentum: Vec<f64>,
    pub energy: f64,
}

/// Gradient and potential integrals shared by the energy-type functionals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParts {
    /// `‖∇u‖²_{L²}`
    pub kinetic: f64,
    /// `∫ |u|^{p+1}`
    pub potential: f64,
}

impl EnergyParts {
    pub fn energy(&self, params: &EquationParams) -> f64 {
        self.kinetic - 2.0 / (params.p as f64 + 1.0) * self.potential
    }

    pub fn virial_q(&self, params: &EquationParams) -> f64 {
        self.kinetic - params.virial_coefficient() * self.potential
    }
}

pub fn energy_parts(field: &Field, params: &EquationParams) -> Result<EnergyParts> {
    field.ensure_finite()?;
    let grid = field.grid();
    let grad = grid.gradient(field.values());
    let kinetic = grid.integrate(
        (0..field.len()).map(|i| grad.iter().map(|g| g[i].norm_sqr()).sum::<f64>()),
    );
    Ok(EnergyParts {
        kinetic,
        potential: potential_integral(field, params.p + 1),
    })
}

fn potential_integral(field: &Field, power: u32) -> f64 {
    field
        .grid()
        .integrate(field.values().iter().map(|v| v.norm_sqr().powi(power as i32 / 2)))
}

pub fn mass(field: &Field) -> Result<f64> {
    field.ensure_finite()?;
    Ok(field.grid().integrate(field.values().iter().map(|v| v.norm_sqr())))
}

/// `Im ∫ ū ∇u`; identically zero on the radial ray.
pub fn momentum(field: &Field) -> Result<Vec<f64>> {
    field.ensure_finite()?;
    let grid = field.grid();
    if grid.is_radial() {
        return Ok(vec![0.0; 3]);
    }
    let grad = grid.gradient(field.values());
    Ok(grad
        .iter()
        .map(|g| {
            grid.integrate(
                field
                    .values()
                    .iter()
                    .zip(g)
                    .map(|(u, du)| (u.conj() * du).im),
            )
        })
        .collect())
}

pub fn energy(field: &Field, params: &EquationParams) -> Result<f64> {
    Ok(energy_parts(field, params)?.energy(params))
}

pub fn conserved(field: &Field, params: &EquationParams) -> Result<ConservedSet> {
    Ok(ConservedSet {
        mass: mass(field)?,
        momentum: momentum(field)?,
        energy: energy(field, params)?,
    })
}

/// `Q(u) = ‖∇u‖² − N(p−1)/(2(p+1)) ∫|u|^{p+1}`.
pub fn virial_q(field: &Field, params: &EquationParams) -> Result<f64> {
    Ok(energy_parts(field, params)?.virial_q(params))
}

pub fn gradient_l2(field: &Field) -> Result<f64> {
    field.ensure_finite()?;
    let grid = field.grid();
    let grad = grid.gradient(field.values());
    Ok(grid
        .integrate((0..field.len()).map(|i| grad.iter().map(|g| g[i].norm_sqr()).sum::<f64>()))
        .sqrt())
}

/// `‖u‖_{L^q}` by quadrature; `q = ∞` is the sample maximum.
pub fn lq_norm(field: &Field, q: f64) -> Result<f64> {
    field.ensure_finite()?;
    if q.is_infinite() {
        return Ok(field.max_abs());
    }
    if !(q >= 1.0) {
        return Err(NlsError::Precondition(format!("L^q needs q >= 1, got {q}")));
    }
    let s = field
        .grid()
        .integrate(field.values().iter().map(|v| v.norm().powf(q)));
    Ok(s.powf(1.0 / q))
}

/// `‖|∇|^s u‖_{L²}` by the spectral multiplier `|k|^s`.
pub fn hs_seminorm(field: &Field, s: f64) -> Result<f64> {
    field.ensure_finite()?;
    if !(s >= 0.0) {
        return Err(NlsError::Precondition(format!("seminorm order must be >= 0, got {s}")));
    }
    field.grid().hs_seminorm(field.values(), s)
}

/// `Q(u) − [N(p−1)/4 · E(u) − (N(p−1)/4 − 1) ‖∇u‖²]`, zero up to round-off.
pub fn e_q_identity_residual(field: &Field, params: &EquationParams) -> Result<f64> {
    let parts = energy_parts(field, params)?;
    let a = params.qe_ratio();
    Ok(parts.virial_q(params) - (a * parts.energy(params) - (a - 1.0) * parts.kinetic))
}

/// Mass in `|x| >= radius` with a sharp indicator.
pub fn exterior_mass(field: &Field, radius: f64) -> f64 {
    let grid = field.grid();
    grid.integrate(
        field
            .values()
            .iter()
            .zip(grid.radius())
            .map(|(v, &r)| if r >= radius { v.norm_sqr() } else { 0.0 }),
    )
}

/// `‖u‖_{L^q(|x| > radius)}`.
pub fn exterior_lq(field: &Field, radius: f64, q: f64) -> f64 {
    let grid = field.grid();
    grid.integrate(
        field
            .values()
            .iter()
            .zip(grid.radius())
            .map(|(v, &r)| if r > radius { v.norm().powf(q) } else { 0.0 }),
    )
    .powf(1.0 / q)
}

/// Fraction of the mass sitting in the outer `fraction` of the box.
pub fn boundary_mass_fraction(field: &Field, fraction: f64) -> f64 {
    let grid = field.grid();
    let total: f64 = grid.integrate(field.values().iter().map(|v| v.norm_sqr()));
    if total == 0.0 {
        return 0.0;
    }
    let edge: f64 = grid.integrate(field.values().iter().enumerate().map(|(i, v)| {
        if grid.is_boundary_sample(i, fraction) {
            v.norm_sqr()
        } else {
            0.0
        }
    }));
    edge / total
}

/// `∫ |x|² |u|²`.
pub fn variance(field: &Field) -> f64 {
    let grid = field.grid();
    grid.integrate(
        field
            .values()
            .iter()
            .zip(grid.radius())
            .map(|(v, &r)| r * r * v.norm_sqr()),
    )
}

/// The scaling image `λ^{2/(p-1)} u(λ x)`, sampled on the grid with half
/// width `L/λ` and the same point count, where it has identical samples up
/// to the amplitude factor.
pub fn rescale(field: &Field, params: &EquationParams, lambda: f64) -> Result<Field> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(NlsError::Precondition(format!("scale must be positive, got {lambda}")));
    }
    let spec = field.grid().spec();
    let grid = Grid::make(
        spec.dim(),
        spec.points_per_axis(),
        spec.half_width() / lambda,
        spec.geometry(),
    )?;
    let a = lambda.powf(params.scaling_exponent());
    Field::new(grid, field.values().iter().map(|v| v * a).collect())
}
