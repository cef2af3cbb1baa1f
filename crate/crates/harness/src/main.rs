use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use nls_harness::config::{write_field_csv, ScenarioConfig};
use nls_harness::output::OutputSet;
use nls_harness::run::{error_exit_code, prepare, simulate, status_exit_code};
use nls_harness::suites::{run_criteria, suite_criteria, thread_cap, SUITES};
use nls_virial::criteria::{self, BoostSpec};
use nls_virial::groundstate::{self, gn_constant, solve_ground_state};
use nls_virial::observables::{energy, mass, momentum};
use nls_virial::{criticality, Geometry, Grid};

const EXIT_MISMATCH: u8 = 5;

#[derive(Parser)]
#[command(name = "virial-nls", version, about = "Spectral NLS simulator with virial diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its outputs and manifest.
    Simulate {
        config: PathBuf,
        /// Output directory; overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Recompute and compare against the existing manifest instead of writing.
        #[arg(long)]
        check: bool,
    },
    /// Solve for the ground state and write the profile and thresholds.
    GroundState {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        p: u32,
        /// Radial grid (dim 3 only).
        #[arg(long)]
        radial: bool,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        half_width: Option<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Print the criterion report for a scenario's initial data.
    Criteria { config: PathBuf },
    /// Boost the initial data to zero momentum and print the result.
    Boost {
        config: PathBuf,
        /// Evolution time of the boost map.
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        /// Also write the boosted field as `re,im` CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a pinned check suite.
    Verify {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(SUITES))]
        suite: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(error_exit_code(&err) as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<u8> {
    match command {
        Command::Simulate { config, out, check } => {
            let mut cfg = ScenarioConfig::load(&config)?;
            if let Some(dir) = out {
                cfg.output.dir = dir;
            }
            let run = simulate(&cfg)?;
            let s = &run.summary;
            println!(
                "{:?} at t = {:.6} after {} steps; mass drift {:.2e}, energy drift {:.2e}",
                s.status, s.t_final, s.steps, s.mass_drift, s.energy_drift
            );
            if check {
                let bad = run.files.check_against(&cfg.output.dir)?;
                if !bad.is_empty() {
                    eprintln!("mismatch against manifest: {}", bad.join(", "));
                    return Ok(EXIT_MISMATCH);
                }
                println!("outputs match {}", cfg.output.dir.display());
            } else {
                run.files
                    .write_to(&cfg.output.dir)
                    .with_context(|| format!("writing {}", cfg.output.dir.display()))?;
            }
            Ok(status_exit_code(s.status) as u8)
        }
        Command::GroundState { dim, p, radial, n, half_width, out } => {
            let params = criticality(dim, p)?;
            if params.s_c >= 1.0 {
                bail!(
                    "N = {dim}, p = {p} has s_c = {:.3} >= 1; ground-state thresholds need 1 + 4/N < p < 1 + 4/(N-2)",
                    params.s_c
                );
            }
            let geometry = if radial { Geometry::Radial3d } else { Geometry::Cartesian };
            let n = n.unwrap_or(if radial { 2048 } else if dim == 1 { 1024 } else { 256 });
            let grid = Grid::make(dim, n, half_width.unwrap_or(30.0), geometry)?;
            let gs = solve_ground_state(dim, p, grid)?;
            let thresholds = if params.is_intercritical() { Some(groundstate::thresholds(&gs)?) } else { None };
            let mut files = OutputSet::new();
            let mut csv = Vec::new();
            gs.write_csv(&mut csv)?;
            files.add("ground_state.csv", csv);
            let doc = json!({
                "dim": dim,
                "p": p,
                "s_c": params.s_c,
                "peak": gs.peak,
                "mass": gs.norms.mass,
                "kinetic": gs.norms.kinetic,
                "potential": gs.norms.potential,
                "energy": gs.energy,
                "c_gn": gn_constant(&gs),
                "iterations": gs.iterations,
                "final_change": gs.final_change,
                "pohozaev_defect": gs.pohozaev_defect(),
                "thresholds": thresholds,
            });
            files.add_json("thresholds.json", &doc)?;
            files.write_to(&out)?;
            println!("{}", serde_json::to_string_pretty(&doc)?);
            Ok(0)
        }
        Command::Criteria { config } => {
            let cfg = ScenarioConfig::load(&config)?;
            let params = cfg.params()?;
            let (u0, profile) = prepare(&cfg)?;
            let report = criteria::evaluate(&u0, &params, profile.as_ref())?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(0)
        }
        Command::Boost { config, t, out } => {
            let cfg = ScenarioConfig::load(&config)?;
            let params = cfg.params()?;
            let (u0, _) = prepare(&cfg)?;
            let spec = BoostSpec::removing_momentum(&u0)?;
            let v = criteria::boost(&u0, &spec.xi, t)?;
            let doc = json!({
                "xi": spec.xi,
                "rounding_error": spec.rounding_error,
                "mass": mass(&u0)?,
                "momentum_before": momentum(&u0)?,
                "momentum_after": momentum(&v)?,
                "energy_before": energy(&u0, &params)?,
                "energy_after": energy(&v, &params)?,
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
            if let Some(path) = out {
                nls_harness::output::write_atomic(&path, write_field_csv(&v).as_bytes())?;
            }
            Ok(0)
        }
        Command::Verify { suite } => {
            let list = suite_criteria(&suite).expect("validated by clap");
            let checks = run_criteria(&list, thread_cap());
            for c in &checks {
                let verdict = if c.passed { "PASS" } else { "FAIL" };
                println!("criterion {} ({}): {verdict}: {} [{:.1}s]", c.criterion, c.name, c.detail, c.seconds);
            }
            Ok(if checks.iter().all(|c| c.passed) { 0 } else { EXIT_MISMATCH })
        }
    }
}
