//! Strang split-step time integration with an amplitude-controlled step.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{NlsError, Result};
use crate::field::Field;
use crate::observables::{self, ConservedSet, EquationParams};

/// Time-stepping controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepperConfig {
    /// Base (largest) step.
    pub dt0: f64,
    pub c_cfl: f64,
    /// Smallest admissible step. Falling below it ends the run as a
    /// suspected blow-up.
    pub dt_min: f64,
    /// Emits a record every `snapshot_stride` steps.
    pub snapshot_stride: usize,
    pub t_end: f64,
    /// Largest tolerated fraction of the mass in the outer tenth of the box.
    #[serde(default = "default_boundary_threshold")]
    pub boundary_threshold: f64,
}

fn default_boundary_threshold() -> f64 {
    1e-8
}

/// Fraction of the half-width treated as the boundary layer.
pub const BOUNDARY_LAYER: f64 = 0.1;

impl StepperConfig {
    /// Fixed-step configuration (the amplitude rule never binds).
    pub fn fixed(dt: f64, t_end: f64, snapshot_stride: usize) -> Self {
        Self {
            dt0: dt,
            c_cfl: f64::MAX,
            dt_min: dt * 1e-6,
            snapshot_stride,
            t_end,
            boundary_threshold: default_boundary_threshold(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(NlsError::InvalidParams(m));
        if !(self.dt0.is_finite() && self.dt_min > 0.0 && self.dt_min < self.dt0) {
            return bad(format!(
                "need 0 < dt_min < dt0, got dt_min = {}, dt0 = {}",
                self.dt_min, self.dt0
            ));
        }
        if !(self.c_cfl > 0.0) {
            return bad(format!("c_cfl must be positive, got {}", self.c_cfl));
        }
        if self.snapshot_stride == 0 {
            return bad("snapshot_stride must be >= 1".into());
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if !(self.boundary_threshold > 0.0) {
            return bad("boundary_threshold must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    BlowupDetected,
    DomainEscape,
}

/// Which extra norms every record carries.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MonitorSet {
    pub lq: Vec<f64>,
    pub hs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub conserved: ConservedSet,
    pub q: f64,
    pub grad_l2: f64,
    pub linf: f64,
    /// `‖u‖_{L^q}` in [`MonitorSet::lq`] order.
    pub lq: Vec<f64>,
    /// `‖u‖_{Ḣ^s}` in [`MonitorSet::hs`] order.
    pub hs: Vec<f64>,
    /// Step about to be taken (the last step for the final record).
    pub dt: f64,
}

impl TrajectoryRecord {
    pub fn measure(
        field: &Field,
        params: &EquationParams,
        monitors: &MonitorSet,
        t: f64,
        dt: f64,
    ) -> Result<Self> {
        let parts = observables::energy_parts(field, params)?;
        let lq = monitors
            .lq
            .iter()
            .map(|&q| observables::lq_norm(field, q))
            .collect::<Result<Vec<_>>>()?;
        let hs = monitors
            .hs
            .iter()
            .map(|&s| observables::hs_seminorm(field, s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            t,
            conserved: ConservedSet {
                mass: observables::mass(field)?,
                momentum: observables::momentum(field)?,
                energy: parts.energy(params),
            },
            q: parts.virial_q(params),
            grad_l2: parts.kinetic.sqrt(),
            linf: field.max_abs(),
            lq,
            hs,
            dt,
        })
    }
}

/// Callback invoked on every snapshot, after the record is measured.
pub trait Probe {
    fn sample(&mut self, t: f64, field: &Field) -> Result<()>;
}

impl<F: FnMut(f64, &Field) -> Result<()>> Probe for F {
    fn sample(&mut self, t: f64, field: &Field) -> Result<()> {
        self(t, field)
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
    pub status: RunStatus,
    /// Why the run stopped early, if it did.
    pub detail: Option<String>,
    pub steps: usize,
    pub final_field: Field,
}

impl Trajectory {
    pub fn t_final(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.t)
    }

    pub fn mass_drift(&self) -> f64 {
        self.relative_drift(|r| r.conserved.mass)
    }

    pub fn energy_drift(&self) -> f64 {
        self.relative_drift(|r| r.conserved.energy)
    }

    fn relative_drift(&self, f: impl Fn(&TrajectoryRecord) -> f64) -> f64 {
        let Some(first) = self.records.first() else {
            return 0.0;
        };
        let base = f(first).abs().max(f64::MIN_POSITIVE);
        self.records
            .iter()
            .map(|r| (f(r) - f(first)).abs() / base)
            .fold(0.0, f64::max)
    }
}

fn nonlinear_phase(values: &mut [Complex64], tau: f64, p: u32) {
    let half = (p - 1) / 2;
    for v in values.iter_mut() {
        let rate = v.norm_sqr().powi(half as i32);
        *v *= Complex64::from_polar(1.0, tau * rate);
    }
}

/// One Strang step: half nonlinear phase, exact linear flow, half phase.
pub fn step(field: &Field, dt: f64, params: &EquationParams) -> Result<Field> {
    if !(dt > 0.0) {
        return Err(NlsError::Precondition(format!("dt must be positive, got {dt}")));
    }
    let mut values = field.values().to_vec();
    nonlinear_phase(&mut values, dt / 2.0, params.p);
    let mut values = field.grid().free_propagate(&values, dt);
    nonlinear_phase(&mut values, dt / 2.0, params.p);
    let out = field.with_values(values)?;
    out.ensure_finite()?;
    Ok(out)
}

/// `min(dt0, c_cfl / (1 + ‖u‖∞^{p-1}))`, floored at `dt_min`.
pub fn adapt_dt(field: &Field, config: &StepperConfig, params: &EquationParams) -> f64 {
    adaptive_bound(field.max_abs(), config, params).max(config.dt_min)
}

/// The unfloored step rule.
pub fn adaptive_bound(linf: f64, config: &StepperConfig, params: &EquationParams) -> f64 {
    let stiff = 1.0 + linf.powi(params.p as i32 - 1);
    config.dt0.min(config.c_cfl / stiff)
}

/// Integrates from `t = 0` to `config.t_end` or an early stop.
pub fn evolve(
    initial: &Field,
    params: &EquationParams,
    config: &StepperConfig,
    monitors: &MonitorSet,
    probes: &mut [&mut dyn Probe],
) -> Result<Trajectory> {
    config.validate()?;
    initial.ensure_finite()?;
    if initial.grid().dim() != params.dim {
        return Err(NlsError::InvalidParams(format!(
            "grid has N = {} but the equation has N = {}",
            initial.grid().dim(),
            params.dim
        )));
    }
    let mut u = initial.clone();
    let mut t = 0.0;
    let mut steps = 0usize;
    let mut records = Vec::new();
    let mut dt = adaptive_bound(u.max_abs(), config, params).min(config.t_end);

    let snapshot = |u: &Field, t: f64, dt: f64, records: &mut Vec<TrajectoryRecord>, probes: &mut [&mut dyn Probe]| -> Result<()> {
        records.push(TrajectoryRecord::measure(u, params, monitors, t, dt)?);
        for probe in probes.iter_mut() {
            probe.sample(t, u)?;
        }
        Ok(())
    };

    let finish = |status, detail: Option<String>, records, steps, u| {
        Ok(Trajectory {
            records,
            status,
            detail,
            steps,
            final_field: u,
        })
    };

    if observables::boundary_mass_fraction(&u, BOUNDARY_LAYER) > config.boundary_threshold {
        snapshot(&u, t, dt, &mut records, probes)?;
        return finish(
            RunStatus::DomainEscape,
            Some("initial data already reaches the boundary layer".into()),
            records,
            steps,
            u,
        );
    }
    snapshot(&u, t, dt, &mut records, probes)?;

    loop {
        let bound = adaptive_bound(u.max_abs(), config, params);
        if bound < config.dt_min {
            let detail = format!(
                "step bound {bound:.3e} below dt_min at t = {t:.6e}, |u|∞ = {:.3e}",
                u.max_abs()
            );
            if records.last().map(|r| r.t) != Some(t) {
                snapshot(&u, t, bound, &mut records, probes)?;
            }
            return finish(RunStatus::BlowupDetected, Some(detail), records, steps, u);
        }
        dt = bound;
        let remaining = config.t_end - t;
        let last = dt >= remaining * (1.0 - 1e-12);
        if last {
            dt = remaining;
        }
        let next = match step(&u, dt, params) {
            Ok(v) => v,
            Err(NlsError::NonFinite { .. }) => {
                if records.last().map(|r| r.t) != Some(t) {
                    snapshot(&u, t, dt, &mut records, probes)?;
                }
                return finish(
                    RunStatus::BlowupDetected,
                    Some(format!("non-finite samples after the step from t = {t:.6e}")),
                    records,
                    steps,
                    u,
                );
            }
            Err(e) => return Err(e),
        };
        u = next;
        steps += 1;
        t = if last { config.t_end } else { t + dt };

        let escaped =
            observables::boundary_mass_fraction(&u, BOUNDARY_LAYER) > config.boundary_threshold;
        if last || escaped || steps % config.snapshot_stride == 0 {
            snapshot(&u, t, dt, &mut records, probes)?;
        }
        if escaped {
            return finish(
                RunStatus::DomainEscape,
                Some(format!("boundary-layer mass above threshold at t = {t:.6e}")),
                records,
                steps,
                u,
            );
        }
        if last {
            return finish(RunStatus::Completed, None, records, steps, u);
        }
    }
}
