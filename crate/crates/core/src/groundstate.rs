//! Ground state `−Q + ΔQ + Q^p = 0` by Petviashvili iteration, and the
//! sharp Gagliardo–Nirenberg constant and thresholds derived from it.

use std::io::{self, Write};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{NlsError, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::observables::{self, EquationParams};

/// Iteration controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Amplitude and width of the Gaussian initial guess.
    pub guess_amplitude: f64,
    pub guess_width: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            max_iterations: 10_000,
            guess_amplitude: 1.5,
            guess_width: 1.5,
        }
    }
}

/// Norms of a field entering the Gagliardo–Nirenberg quotient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GnNorms {
    /// `‖u‖²_{L²}`
    pub mass: f64,
    /// `‖∇u‖²_{L²}`
    pub kinetic: f64,
    /// `‖u‖^{p+1}_{L^{p+1}}`
    pub potential: f64,
}

impl GnNorms {
    pub fn of(field: &Field, params: &EquationParams) -> Result<Self> {
        let parts = observables::energy_parts(field, params)?;
        Ok(Self {
            mass: observables::mass(field)?,
            kinetic: parts.kinetic,
            potential: parts.potential,
        })
    }

    /// `‖∇u‖^{N(p−1)/2} ‖u‖^{2−(N−2)(p−1)/2}`.
    pub fn gn_denominator(&self, params: &EquationParams) -> f64 {
        let (n, p) = (params.dim as f64, params.p as f64);
        let a = n * (p - 1.0) / 2.0;
        let b = 2.0 - (n - 2.0) * (p - 1.0) / 2.0;
        self.kinetic.sqrt().powf(a) * self.mass.sqrt().powf(b)
    }

    pub fn gn_quotient(&self, params: &EquationParams) -> f64 {
        self.potential / self.gn_denominator(params)
    }
}

/// Converged ground state and the constants derived from it.
#[derive(Debug, Clone)]
pub struct GroundStateProfile {
    pub params: EquationParams,
    pub field: Field,
    /// `(r, Q(r))` along the positive first axis (or the ray).
    pub radial: Vec<(f64, f64)>,
    pub norms: GnNorms,
    pub l2: f64,
    pub grad_l2: f64,
    pub energy: f64,
    pub c_gn: f64,
    pub peak: f64,
    pub iterations: usize,
    pub final_change: f64,
    /// Stabilizing factor `⟨(1−Δ)Q,Q⟩ / ⟨Q^p,Q⟩`, which tends to 1.
    pub stabilizer: f64,
    /// Whether the change decreased monotonically after the first 10 steps.
    pub monotone: bool,
}

fn radial_samples(field: &Field) -> Vec<(f64, f64)> {
    let grid = field.grid();
    if grid.is_radial() {
        return grid
            .radius()
            .iter()
            .zip(field.values())
            .map(|(&r, v)| (r, v.re))
            .collect();
    }
    grid.positions()
        .iter()
        .zip(field.values())
        .filter(|(x, _)| x[0] >= 0.0 && x[1] == 0.0 && x[2] == 0.0)
        .map(|(x, v)| (x[0], v.re))
        .collect()
}

/// `⟨(1−Δ)f, f⟩` evaluated spectrally.
fn resolvent_form(grid: &Grid, f: &[Complex64]) -> Result<f64> {
    let coeffs = grid.transform(f)?;
    let weighted: Vec<Complex64> = coeffs
        .iter()
        .zip(grid.wavenumbers().k2())
        .map(|(c, &k2)| c * (1.0 + k2).sqrt())
        .collect();
    Ok(grid.spectral_l2_squared(&weighted))
}

pub fn solve_ground_state(dim: usize, p: u32, grid: Arc<Grid>) -> Result<GroundStateProfile> {
    solve_ground_state_with(dim, p, grid, &SolverOptions::default())
}

pub fn solve_ground_state_with(
    dim: usize,
    p: u32,
    grid: Arc<Grid>,
    options: &SolverOptions,
) -> Result<GroundStateProfile> {
    let params = EquationParams::new(dim, p)?;
    if grid.dim() != dim {
        return Err(NlsError::InvalidParams(format!(
            "grid has N = {} but N = {dim} was requested",
            grid.dim()
        )));
    }
    if params.s_c >= 1.0 {
        return Err(NlsError::InvalidParams(format!(
            "no H¹ ground state for N = {dim}, p = {p}: need p < 1 + 4/(N-2)"
        )));
    }
    let sigma = p as f64 / (p as f64 - 1.0);
    let w = options.guess_width;
    let mut q: Vec<Complex64> = grid
        .radius()
        .iter()
        .map(|&r| Complex64::new(options.guess_amplitude * (-r * r / (2.0 * w * w)).exp(), 0.0))
        .collect();
    let k2 = grid.wavenumbers().k2().to_vec();
    let mut changes: Vec<f64> = Vec::new();
    for it in 1..=options.max_iterations {
        let qp: Vec<Complex64> = q
            .iter()
            .map(|v| Complex64::new(v.re.abs().powi(p as i32), 0.0))
            .collect();
        let num = resolvent_form(&grid, &q)?;
        let den = grid.integrate(q.iter().zip(&qp).map(|(a, b)| a.re * b.re));
        if !(den > 0.0) || !num.is_finite() {
            return Err(NlsError::CollapsedToZero);
        }
        let stabilizer = num / den;
        let factor = stabilizer.powf(sigma);
        let next: Vec<Complex64> = grid
            .apply_multiplier(&qp, |i| Complex64::new(1.0 / (1.0 + k2[i]), 0.0))
            .into_iter()
            .map(|v| Complex64::new((factor * v.re).abs(), 0.0))
            .collect();
        let norm = grid.integrate(next.iter().map(|v| v.norm_sqr())).sqrt();
        if !(norm > 1e-10) {
            return Err(NlsError::CollapsedToZero);
        }
        let diff = grid
            .integrate(next.iter().zip(&q).map(|(a, b)| (a - b).norm_sqr()))
            .sqrt();
        let change = diff / norm;
        q = next;
        changes.push(change);
        if !change.is_finite() {
            return Err(NlsError::NonConvergence {
                iterations: it,
                change,
            });
        }
        if change < options.tolerance {
            let field = Field::new(grid.clone(), q)?;
            let monotone = changes.windows(2).skip(10).all(|w| w[1] <= w[0] * (1.0 + 1e-6))
                || changes.len() <= 11;
            return finish(params, field, it, change, stabilizer, monotone);
        }
    }
    Err(NlsError::NonConvergence {
        iterations: options.max_iterations,
        change: changes.last().copied().unwrap_or(f64::NAN),
    })
}

fn finish(
    params: EquationParams,
    field: Field,
    iterations: usize,
    final_change: f64,
    stabilizer: f64,
    monotone: bool,
) -> Result<GroundStateProfile> {
    let norms = GnNorms::of(&field, &params)?;
    let energy = norms.kinetic - 2.0 / (params.p as f64 + 1.0) * norms.potential;
    Ok(GroundStateProfile {
        radial: radial_samples(&field),
        c_gn: norms.gn_quotient(&params),
        peak: field.max_abs(),
        l2: norms.mass.sqrt(),
        grad_l2: norms.kinetic.sqrt(),
        params,
        field,
        norms,
        energy,
        iterations,
        final_change,
        stabilizer,
        monotone,
    })
}

/// Sharp Gagliardo–Nirenberg constant `‖Q‖^{p+1}_{p+1} / (‖∇Q‖^{N(p−1)/2} ‖Q‖^{2−(N−2)(p−1)/2})`.
pub fn gn_constant(profile: &GroundStateProfile) -> f64 {
    profile.c_gn
}

/// The two threshold levels of the dichotomy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub s_c: f64,
    /// `M(Q)^{1−s_c} E(Q)^{s_c}`
    pub mass_energy: f64,
    /// `‖Q‖^{1−s_c} ‖∇Q‖^{s_c}`
    pub mass_gradient: f64,
}

pub fn thresholds(profile: &GroundStateProfile) -> Result<Thresholds> {
    let s = profile.params.s_c;
    if !(s > 0.0 && s < 1.0) {
        return Err(NlsError::Precondition(format!(
            "thresholds need 0 < s_c < 1, got s_c = {s}"
        )));
    }
    if !(profile.energy > 0.0) {
        return Err(NlsError::Precondition(format!(
            "ground state energy {} is not positive; the solver failed",
            profile.energy
        )));
    }
    Ok(Thresholds {
        s_c: s,
        mass_energy: profile.norms.mass.powf(1.0 - s) * profile.energy.powf(s),
        mass_gradient: profile.l2.powf(1.0 - s) * profile.grad_l2.powf(s),
    })
}

/// Pointwise `−Q + ΔQ + Q^p`, scaled by `‖Q‖∞`, worst over `r ≤ fraction·L`.
pub fn ode_residual(profile: &GroundStateProfile, fraction: f64) -> Result<f64> {
    let field = &profile.field;
    let grid = field.grid();
    let lap = grid.laplacian(field.values())?;
    let peak = profile.peak;
    let p = profile.params.p as i32;
    Ok(field
        .values()
        .iter()
        .zip(&lap)
        .enumerate()
        .filter(|(i, _)| !grid.is_boundary_sample(*i, 1.0 - fraction))
        .map(|(_, (q, l))| (-q + l + q.powi(p)).norm() / peak)
        .fold(0.0, f64::max))
}

/// `a·Q` on the profile's grid.
pub fn scaled_ground_state(profile: &GroundStateProfile, amplitude: f64) -> Field {
    profile.field.scaled(amplitude)
}

impl GroundStateProfile {
    /// `r,Q` CSV of [`GroundStateProfile::radial`].
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "r,Q")?;
        for (r, q) in &self.radial {
            writeln!(out, "{r:.16e},{q:.16e}")?;
        }
        Ok(())
    }

    /// Whether the radial samples are positive and strictly decreasing down
    /// to `1e-12 ‖Q‖∞`, and decay below `1e-10` before the edge.
    pub fn shape_ok(&self) -> bool {
        let floor = 1e-12 * self.peak;
        let decreasing = self
            .radial
            .windows(2)
            .take_while(|w| w[1].1 > floor)
            .all(|w| w[1].1 < w[0].1);
        let positive = self.radial.iter().all(|&(_, q)| q >= 0.0);
        let tail = self.radial.last().map_or(f64::INFINITY, |&(_, q)| q);
        decreasing && positive && tail < 1e-10
    }

    /// `Q(u)` of the profile relative to `‖∇Q‖²`.
    pub fn pohozaev_defect(&self) -> f64 {
        (self.norms.kinetic - self.params.virial_coefficient() * self.norms.potential).abs()
            / self.norms.kinetic
    }
}
