//! Blow-up criteria on initial data: negative energy, the Galilean-reduced
//! condition `E < P²/M`, and the intercritical dual threshold condition.
//! Also the persistence monitors along a trajectory and the variance bound.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{NlsError, Result};
use crate::field::Field;
use crate::groundstate::{thresholds, GroundStateProfile, Thresholds};
use crate::integrator::TrajectoryRecord;
use crate::observables::{self, EquationParams};

/// Relative tolerance for calling data "at" the threshold.
pub const THRESHOLD_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DualVerdict {
    /// Both strict inequalities hold: blow-up branch.
    Holds,
    /// Energy below threshold but `‖u‖^{1−s_c}‖∇u‖^{s_c}` below as well.
    BelowThreshold,
    /// Energy side fails.
    EnergyAboveThreshold,
    /// Within [`THRESHOLD_TOLERANCE`] of the ground state levels.
    BoundaryCase,
    /// `E(u₀) ≤ 0`, so `E^{s_c}` is undefined; negative energy decides instead.
    VacuousNegativeEnergy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualCondition {
    pub s_c: f64,
    /// `M(u₀)^{1−s_c} E(u₀)^{s_c}`, absent when `E ≤ 0`.
    pub mass_energy: Option<f64>,
    pub mass_energy_threshold: f64,
    /// `‖u₀‖^{1−s_c} ‖∇u₀‖^{s_c}`
    pub mass_gradient: f64,
    pub mass_gradient_threshold: f64,
    pub verdict: DualVerdict,
}

impl DualCondition {
    pub fn new(mass: f64, energy: f64, grad_l2: f64, t: &Thresholds) -> Self {
        let s = t.s_c;
        let mg = mass.sqrt().powf(1.0 - s) * grad_l2.powf(s);
        let me = (energy > 0.0).then(|| mass.powf(1.0 - s) * energy.powf(s));
        let near = |a: f64, b: f64| (a - b).abs() <= THRESHOLD_TOLERANCE * b.abs();
        let verdict = match me {
            None => DualVerdict::VacuousNegativeEnergy,
            Some(me) if near(me, t.mass_energy) && near(mg, t.mass_gradient) => {
                DualVerdict::BoundaryCase
            }
            Some(me) if me >= t.mass_energy => DualVerdict::EnergyAboveThreshold,
            Some(_) if mg > t.mass_gradient => DualVerdict::Holds,
            Some(_) => DualVerdict::BelowThreshold,
        };
        Self {
            s_c: s,
            mass_energy: me,
            mass_energy_threshold: t.mass_energy,
            mass_gradient: mg,
            mass_gradient_threshold: t.mass_gradient,
            verdict,
        }
    }

    /// The joint verdict of the two strict inequalities.
    pub fn holds(&self) -> bool {
        self.verdict == DualVerdict::Holds
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub dim: usize,
    pub p: u32,
    pub energy: f64,
    pub mass: f64,
    pub momentum: Vec<f64>,
    /// `E − |P|²/M`
    pub boosted_energy: f64,
    /// `E(u₀) < 0`
    pub negative_energy: bool,
    /// `E(u₀) < |P|²/M`
    pub reduced_negative_energy: bool,
    /// Present for intercritical `(N, p)`.
    pub dual: Option<DualCondition>,
    /// `Q(u₀)`; a trajectory's ceiling comes from [`monitor_persistence`].
    pub beta0: f64,
    /// `−Q(u₀)/‖∇u₀‖²`.
    pub delta0: f64,
    /// `‖∇u₀‖`.
    pub epsilon0: f64,
}

pub fn evaluate(
    u0: &Field,
    params: &EquationParams,
    profile: Option<&GroundStateProfile>,
) -> Result<CriterionReport> {
    u0.ensure_finite()?;
    let parts = observables::energy_parts(u0, params)?;
    let mass = observables::mass(u0)?;
    let momentum = observables::momentum(u0)?;
    let energy = parts.energy(params);
    let p2: f64 = momentum.iter().map(|p| p * p).sum();
    let boosted_energy = if mass > 0.0 { energy - p2 / mass } else { energy };
    let dual = if params.is_intercritical() {
        let gs = profile.ok_or_else(|| {
            NlsError::Precondition(format!(
                "s_c = {} lies in (0,1): the dual condition needs a ground-state profile",
                params.s_c
            ))
        })?;
        if gs.params.dim != params.dim || gs.params.p != params.p {
            return Err(NlsError::InvalidParams(format!(
                "profile is for N = {}, p = {}",
                gs.params.dim, gs.params.p
            )));
        }
        Some(DualCondition::new(mass, energy, parts.kinetic.sqrt(), &thresholds(gs)?))
    } else {
        None
    };
    let q = parts.virial_q(params);
    Ok(CriterionReport {
        dim: params.dim,
        p: params.p,
        energy,
        mass,
        momentum,
        boosted_energy,
        negative_energy: energy < 0.0,
        reduced_negative_energy: boosted_energy < 0.0,
        dual,
        beta0: q,
        delta0: if parts.kinetic > 0.0 { -q / parts.kinetic } else { 0.0 },
        epsilon0: parts.kinetic.sqrt(),
    })
}

/// A lattice velocity for the Galilean transformation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostSpec {
    pub xi: Vec<f64>,
    /// `|ξ₀ − (−P/M)|`, zero when the data was built lattice-exact.
    pub rounding_error: f64,
}

impl BoostSpec {
    /// Rejects any component that is not a multiple of `π/L`.
    pub fn new(field: &Field, xi: &[f64]) -> Result<Self> {
        let grid = field.grid();
        if grid.is_radial() && xi.iter().any(|&x| x != 0.0) {
            return Err(NlsError::Precondition("radial fields admit only ξ₀ = 0".into()));
        }
        if !grid.is_radial() && xi.len() != grid.dim() {
            return Err(NlsError::SizeMismatch {
                expected: grid.dim(),
                actual: xi.len(),
            });
        }
        if !xi.iter().all(|&k| grid.is_lattice_wavenumber(k)) {
            return Err(NlsError::NonLatticeBoost(xi.to_vec()));
        }
        Ok(Self {
            xi: xi.to_vec(),
            rounding_error: 0.0,
        })
    }

    /// `ξ₀ = −P/M` rounded to the lattice.
    pub fn removing_momentum(field: &Field) -> Result<Self> {
        let grid = field.grid();
        let mass = observables::mass(field)?;
        let p = observables::momentum(field)?;
        let dk = grid.spec().dk();
        let exact: Vec<f64> = p.iter().take(grid.dim()).map(|p| -p / mass).collect();
        let xi: Vec<f64> = if grid.is_radial() {
            vec![0.0]
        } else {
            exact.iter().map(|x| (x / dk).round() * dk).collect()
        };
        let rounding_error = xi
            .iter()
            .zip(&exact)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        Ok(Self { xi, rounding_error })
    }
}

/// `e^{ix·ξ₀} e^{−it|ξ₀|²} u(x − 2ξ₀t)`, the translation done spectrally.
pub fn boost(field: &Field, xi: &[f64], t: f64) -> Result<Field> {
    let spec = BoostSpec::new(field, xi)?;
    let grid = field.grid();
    if grid.is_radial() {
        return Ok(field.clone());
    }
    let dim = grid.dim();
    let shift: Vec<f64> = spec.xi.iter().map(|x| 2.0 * x * t).collect();
    let moved = if shift.iter().any(|&a| a != 0.0) {
        grid.apply_multiplier(field.values(), |i| {
            let k = grid.wavevector(i);
            let phase: f64 = (0..dim).map(|a| k[a] * shift[a]).sum();
            Complex64::from_polar(1.0, -phase)
        })
    } else {
        field.values().to_vec()
    };
    let xi2: f64 = spec.xi.iter().map(|x| x * x).sum();
    let values = moved
        .iter()
        .zip(grid.positions())
        .map(|(u, x)| {
            let phase: f64 = (0..dim).map(|a| x[a] * spec.xi[a]).sum::<f64>() - t * xi2;
            u * Complex64::from_polar(1.0, phase)
        })
        .collect();
    field.with_values(values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Initial data satisfies the dual condition; all monitors must hold.
    BlowupBranch,
    /// Below both thresholds; the gradient side must stay below.
    Complementary,
    /// At the ground state itself; nothing to monitor.
    BoundaryCase,
    /// Energy side fails or energy is non-positive.
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersistencePoint {
    pub t: f64,
    pub mass_gradient: f64,
    pub grad_l2: f64,
    pub q: f64,
    /// Whether every monitor of the regime held at this snapshot.
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistenceReport {
    pub regime: Regime,
    pub initial: DualCondition,
    pub points: Vec<PersistencePoint>,
    /// Observed `inf ‖∇u‖`.
    pub epsilon0: f64,
    /// Largest `δ₀` with `Q(u) ≤ −δ₀‖∇u‖²` at every snapshot.
    pub delta0: f64,
    /// Observed `sup Q(u)`.
    pub beta0: f64,
    pub passed: bool,
}

pub fn monitor_persistence(
    records: &[TrajectoryRecord],
    profile: &GroundStateProfile,
    params: &EquationParams,
) -> Result<PersistenceReport> {
    let first = records
        .first()
        .ok_or_else(|| NlsError::Precondition("empty trajectory".into()))?;
    if !params.is_intercritical() {
        return Err(NlsError::Precondition(format!(
            "persistence monitors need 0 < s_c < 1, got {}",
            params.s_c
        )));
    }
    let t = thresholds(profile)?;
    let s = t.s_c;
    let initial = DualCondition::new(
        first.conserved.mass,
        first.conserved.energy,
        first.grad_l2,
        &t,
    );
    let regime = match initial.verdict {
        DualVerdict::Holds => Regime::BlowupBranch,
        DualVerdict::BelowThreshold => Regime::Complementary,
        DualVerdict::BoundaryCase => Regime::BoundaryCase,
        _ => Regime::NotApplicable,
    };
    let points: Vec<PersistencePoint> = records
        .iter()
        .map(|r| {
            let mg = r.conserved.mass.sqrt().powf(1.0 - s) * r.grad_l2.powf(s);
            let holds = match regime {
                Regime::BlowupBranch => mg > t.mass_gradient && r.grad_l2 > 0.0 && r.q < 0.0,
                Regime::Complementary => mg < t.mass_gradient,
                _ => true,
            };
            PersistencePoint {
                t: r.t,
                mass_gradient: mg,
                grad_l2: r.grad_l2,
                q: r.q,
                holds,
            }
        })
        .collect();
    let epsilon0 = points.iter().map(|p| p.grad_l2).fold(f64::INFINITY, f64::min);
    let delta0 = points
        .iter()
        .map(|p| -p.q / (p.grad_l2 * p.grad_l2))
        .fold(f64::INFINITY, f64::min);
    let beta0 = points.iter().map(|p| p.q).fold(f64::NEG_INFINITY, f64::max);
    let passed = points.iter().all(|p| p.holds)
        && (regime != Regime::BlowupBranch || (delta0 > 0.0 && epsilon0 > 0.0));
    Ok(PersistenceReport {
        regime,
        initial,
        points,
        epsilon0,
        delta0,
        beta0,
        passed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlasseyBound {
    /// `∫|x|²|u₀|²`
    pub v0: f64,
    /// `4 Im ∫ ū₀ x·∇u₀`
    pub v1: f64,
    pub energy: f64,
    /// Smaller positive root of `V₀ + V₁t + 4Et²`.
    pub t_root: f64,
    /// The parabola is the exact variance in the mass-critical case.
    pub exact: bool,
}

impl GlasseyBound {
    pub fn parabola(&self, t: f64) -> f64 {
        self.v0 + self.v1 * t + 4.0 * self.energy * t * t
    }
}

/// `4 Im ∫ ū x·∇u`.
pub fn variance_rate(field: &Field) -> f64 {
    let grid = field.grid();
    let grad = grid.gradient(field.values());
    let u = field.values();
    let radial = grid.is_radial();
    grid.integrate((0..u.len()).map(|i| {
        let x_grad: Complex64 = if radial {
            grad[0][i] * grid.radius()[i]
        } else {
            grad.iter()
                .enumerate()
                .map(|(a, g)| g[i] * grid.positions()[i][a])
                .sum()
        };
        4.0 * (u[i].conj() * x_grad).im
    }))
}

pub fn glassey_bound(u0: &Field, params: &EquationParams) -> Result<GlasseyBound> {
    let energy = observables::energy(u0, params)?;
    if !(energy < 0.0) {
        return Err(NlsError::Precondition(format!(
            "variance bound needs E(u0) < 0, got {energy}"
        )));
    }
    let ratio = params.qe_ratio();
    if ratio < 1.0 {
        return Err(NlsError::Precondition(format!(
            "Q <= E fails for mass-subcritical N = {}, p = {}",
            params.dim, params.p
        )));
    }
    let v0 = observables::variance(u0);
    let v1 = variance_rate(u0);
    let disc = v1 * v1 - 16.0 * energy * v0;
    let t_root = (-v1 - disc.sqrt()) / (8.0 * energy);
    Ok(GlasseyBound {
        v0,
        v1,
        energy,
        t_root,
        exact: ratio == 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Geometry, Grid};
    use crate::initial;

    #[test]
    fn zero_boost_is_identity() {
        let grid = Grid::make(1, 128, 10.0, Geometry::Cartesian).unwrap();
        let u = initial::modulated_gaussian(grid, 1.0, 1.0, [0.5, 0.0, 0.0], &[3]).unwrap();
        let v = boost(&u, &[0.0], 0.7).unwrap();
        assert!(v.l2_distance(&u).unwrap() < 1e-13);
    }

    #[test]
    fn off_lattice_boost_is_rejected() {
        let grid = Grid::make(1, 128, 10.0, Geometry::Cartesian).unwrap();
        let u = initial::gaussian(grid, 1.0, 1.0, [0.0; 3]);
        assert!(matches!(boost(&u, &[0.1], 0.0), Err(NlsError::NonLatticeBoost(_))));
    }

    #[test]
    fn real_data_has_no_momentum_gain() {
        let grid = Grid::make(1, 1024, 10.0, Geometry::Cartesian).unwrap();
        let params = EquationParams::new(1, 5).unwrap();
        let u = initial::gaussian(grid, 3.0, 1.0, [0.0; 3]);
        let r = evaluate(&u, &params, None).unwrap();
        assert!(r.negative_energy && r.reduced_negative_energy);
        assert_eq!(r.boosted_energy, r.energy);
        assert!(r.dual.is_none());
    }

    #[test]
    fn glassey_needs_negative_energy() {
        let grid = Grid::make(1, 1024, 10.0, Geometry::Cartesian).unwrap();
        let params = EquationParams::new(1, 5).unwrap();
        let u = initial::gaussian(grid, 0.5, 1.0, [0.0; 3]);
        assert!(glassey_bound(&u, &params).is_err());
    }

    #[test]
    fn intercritical_evaluation_needs_a_profile() {
        let grid = Grid::make(3, 256, 20.0, Geometry::Radial3d).unwrap();
        let params = EquationParams::new(3, 3).unwrap();
        let u = initial::gaussian(grid, 1.0, 1.0, [0.0; 3]);
        assert!(evaluate(&u, &params, None).is_err());
    }

    #[test]
    fn negative_energy_makes_the_dual_condition_vacuous() {
        let t = Thresholds {
            s_c: 0.5,
            mass_energy: 1.0,
            mass_gradient: 1.0,
        };
        let d = DualCondition::new(1.0, -0.5, 2.0, &t);
        assert_eq!(d.verdict, DualVerdict::VacuousNegativeEnergy);
        assert!(d.mass_energy.is_none());
    }
}
