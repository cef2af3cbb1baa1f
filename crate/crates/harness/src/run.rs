//! Runs a scenario and collects every output file in memory.

use std::time::Instant;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use nls_virial::criteria::{self, CriterionReport, GlasseyBound, PersistenceReport};
use nls_virial::cutoffs::{build_exterior_cutoff, build_virial_cutoff, pure_quadratic, CutoffProfile};
use nls_virial::groundstate::{self, GroundStateProfile, Thresholds};
use nls_virial::integrator::{evolve, RunStatus, Trajectory};
use nls_virial::observables::exterior_mass;
use nls_virial::virial::{decompose, exterior_mass_budget, BudgetReport, ExteriorSample, VirialSample};
use nls_virial::{Field, NlsError};

use crate::config::{InitialData, ScenarioConfig};
use crate::output::{CsvTable, OutputSet};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub status: RunStatus,
    pub detail: Option<String>,
    pub t_final: f64,
    pub steps: usize,
    pub snapshots: usize,
    pub mass_drift: f64,
    pub energy_drift: f64,
    pub wall_seconds: f64,
}

/// Everything a finished run produced.
pub struct RunOutput {
    pub summary: RunSummary,
    pub trajectory: Trajectory,
    pub initial: Field,
    pub criteria: CriterionReport,
    pub glassey: Option<GlasseyBound>,
    pub persistence: Option<PersistenceReport>,
    pub virial: Vec<(String, Vec<VirialSample>)>,
    pub budgets: Vec<BudgetReport>,
    pub files: OutputSet,
}

/// Criteria JSON: the report plus the variance parabola when it applies.
#[derive(Debug, Serialize)]
struct CriteriaFile<'a> {
    report: &'a CriterionReport,
    thresholds: Option<Thresholds>,
    glassey: Option<&'a GlasseyBound>,
}

fn label(r: f64) -> String {
    format!("{r}")
}

/// Solves the ground state on the run grid when the scenario needs it.
fn ground_state_for(cfg: &ScenarioConfig, field_grid: std::sync::Arc<nls_virial::Grid>) -> Result<Option<GroundStateProfile>> {
    let params = cfg.params()?;
    let needed = params.is_intercritical() || matches!(cfg.initial, InitialData::ScaledGroundState { .. });
    if !needed {
        return Ok(None);
    }
    Ok(Some(groundstate::solve_ground_state(params.dim, params.p, field_grid)?))
}

/// Initial data plus the ground state when the scenario needs one.
pub fn prepare(cfg: &ScenarioConfig) -> Result<(Field, Option<GroundStateProfile>)> {
    let grid = cfg.grid()?;
    let profile = ground_state_for(cfg, grid.clone())?;
    let u0 = match cfg.build_initial(grid)? {
        Some(u) => u,
        None => {
            let InitialData::ScaledGroundState { amplitude } = cfg.initial else { unreachable!() };
            groundstate::scaled_ground_state(profile.as_ref().expect("solved above"), amplitude)
        }
    };
    u0.ensure_finite()?;
    Ok((u0, profile))
}

pub fn simulate(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let started = Instant::now();
    let params = cfg.params()?;
    let grid = cfg.grid()?;
    let (u0, profile) = prepare(cfg)?;

    let mut profiles: Vec<(String, CutoffProfile)> = Vec::new();
    for &r in &cfg.probes.virial_radii {
        profiles.push((label(r), build_virial_cutoff(r, grid.clone())?));
    }
    if cfg.probes.pure_quadratic {
        profiles.push(("quadratic".into(), pure_quadratic(grid.clone())));
    }
    let exterior: Vec<(f64, CutoffProfile)> = cfg
        .probes
        .exterior_radii
        .iter()
        .map(|&r| Ok((r, build_exterior_cutoff(r, grid.clone())?)))
        .collect::<nls_virial::Result<_>>()?;

    let mut virial_rows: Vec<Vec<VirialSample>> = vec![Vec::new(); profiles.len()];
    let mut ext_rows: Vec<Vec<f64>> = vec![Vec::new(); exterior.len()];
    let mut probe = |t: f64, u: &Field| -> nls_virial::Result<()> {
        for (rows, (_, prof)) in virial_rows.iter_mut().zip(&profiles) {
            rows.push(decompose(u, prof, &params, t)?);
        }
        for (rows, (r, _)) in ext_rows.iter_mut().zip(&exterior) {
            rows.push(exterior_mass(u, *r));
        }
        Ok(())
    };
    let monitors = cfg.monitors();
    let trajectory = evolve(&u0, &params, &cfg.stepper, &monitors, &mut [&mut probe])?;

    let report = criteria::evaluate(&u0, &params, profile.as_ref())?;
    let glassey = if report.negative_energy && params.qe_ratio() >= 1.0 {
        Some(criteria::glassey_bound(&u0, &params)?)
    } else {
        None
    };
    let persistence = match &profile {
        Some(gs) if params.is_intercritical() => {
            Some(criteria::monitor_persistence(&trajectory.records, gs, &params)?)
        }
        _ => None,
    };
    let budgets = exterior
        .iter()
        .zip(&ext_rows)
        .map(|((r, _), masses)| {
            let series: Vec<ExteriorSample> = trajectory
                .records
                .iter()
                .zip(masses)
                .map(|(rec, &m)| ExteriorSample {
                    t: rec.t,
                    exterior_mass: m,
                    grad_l2: rec.grad_l2,
                    q: rec.q,
                })
                .collect();
            exterior_mass_budget(&u0, &series, *r, 1.0, None)
        })
        .collect::<nls_virial::Result<Vec<_>>>()?;

    let mut files = OutputSet::new();
    files.add("trajectory.csv", trajectory_csv(cfg, &trajectory, &profiles, &virial_rows, &exterior, &ext_rows));
    for ((name, prof), rows) in profiles.iter().zip(&virial_rows) {
        files.add(format!("virial_{name}.csv"), virial_csv(rows));
        let mut csv = Vec::new();
        prof.write_csv(&mut csv)?;
        files.add(format!("cutoff_{}_{name}.csv", prof.family()), csv);
    }
    for ((r, prof), budget) in exterior.iter().zip(&budgets) {
        let mut csv = Vec::new();
        prof.write_csv(&mut csv)?;
        files.add(format!("cutoff_{}_{}.csv", prof.family(), label(*r)), csv);
        files.add_json(format!("exterior_budget_{}.json", label(*r)), budget)?;
    }
    let thresholds = match &profile {
        Some(gs) if params.is_intercritical() => Some(groundstate::thresholds(gs)?),
        _ => None,
    };
    if let Some(gs) = &profile {
        let mut csv = Vec::new();
        gs.write_csv(&mut csv)?;
        files.add("ground_state.csv", csv);
    }
    files.add_json(
        "criteria.json",
        &CriteriaFile { report: &report, thresholds, glassey: glassey.as_ref() },
    )?;
    if let Some(p) = &persistence {
        files.add_json("persistence.json", p)?;
    }
    let summary = RunSummary {
        status: trajectory.status,
        detail: trajectory.detail.clone(),
        t_final: trajectory.t_final(),
        steps: trajectory.steps,
        snapshots: trajectory.records.len(),
        mass_drift: trajectory.mass_drift(),
        energy_drift: trajectory.energy_drift(),
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    // Wall-clock time stays out of the checksummed files so reruns match.
    let mut stable = summary.clone();
    stable.wall_seconds = 0.0;
    files.add_json("summary.json", &stable)?;

    Ok(RunOutput {
        summary,
        trajectory,
        initial: u0,
        criteria: report,
        glassey,
        persistence,
        virial: profiles.into_iter().map(|(n, _)| n).zip(virial_rows).collect(),
        budgets,
        files,
    })
}

fn trajectory_csv(
    cfg: &ScenarioConfig,
    traj: &Trajectory,
    profiles: &[(String, CutoffProfile)],
    virial_rows: &[Vec<VirialSample>],
    exterior: &[(f64, CutoffProfile)],
    ext_rows: &[Vec<f64>],
) -> String {
    let dim = cfg.equation.dim;
    let mut header: Vec<String> = vec!["t".into(), "M".into()];
    header.extend((1..=dim).map(|a| format!("P{a}")));
    header.extend(["E", "Q", "grad_l2", "linf"].map(String::from));
    header.extend(cfg.probes.lq.iter().map(|q| format!("lq_{q}")));
    header.extend(cfg.probes.hs.iter().map(|s| format!("hs_{s}")));
    for (name, _) in profiles {
        for col in ["I", "Iprime", "Idoubleprime", "R1", "R2", "R3"] {
            header.push(format!("{col}_{name}"));
        }
    }
    header.extend(exterior.iter().map(|(r, _)| format!("ext_mass_{}", label(*r))));
    header.push("dt".into());
    let mut table = CsvTable::new(header);
    for (j, rec) in traj.records.iter().enumerate() {
        let mut row = vec![rec.t, rec.conserved.mass];
        row.extend(rec.conserved.momentum.iter().take(dim));
        row.extend([rec.conserved.energy, rec.q, rec.grad_l2, rec.linf]);
        row.extend(&rec.lq);
        row.extend(&rec.hs);
        for rows in virial_rows {
            let s = &rows[j];
            row.extend([s.i, s.iprime, s.idoubleprime, s.r1, s.r2, s.r3]);
        }
        row.extend(ext_rows.iter().map(|m| m[j]));
        row.push(rec.dt);
        table.row(&row);
    }
    table.finish()
}

fn virial_csv(rows: &[VirialSample]) -> String {
    let header = ["t", "I", "Iprime", "Idoubleprime", "Q", "R1", "R2", "R3", "residual"];
    let mut table = CsvTable::new(header.map(String::from).to_vec());
    for s in rows {
        table.row(&[s.t, s.i, s.iprime, s.idoubleprime, s.q, s.r1, s.r2, s.r3, s.residual]);
    }
    table.finish()
}

/// Exit code for a library error reached before or during a run.
pub fn error_exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<NlsError>() {
        Some(NlsError::NonConvergence { .. } | NlsError::CollapsedToZero) => 4,
        Some(NlsError::DomainEscape(_)) => 3,
        _ => 1,
    }
}

pub fn status_exit_code(status: RunStatus) -> i32 {
    match status {
        RunStatus::Completed => 0,
        RunStatus::BlowupDetected => 2,
        RunStatus::DomainEscape => 3,
    }
}

/// Runs and writes outputs into the configured directory.
pub fn simulate_to_disk(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let out = simulate(cfg)?;
    out.files
        .write_to(&cfg.output.dir)
        .with_context(|| format!("writing outputs to {}", cfg.output.dir.display()))?;
    Ok(out)
}
