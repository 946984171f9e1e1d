//! Command-line front end: `run`, `fit` and `verify`.
//!
//! Exit codes: 0 all checks passed, 2 invalid configuration or input, 3
//! numerical failure, 4 a check failed, 5 I/O failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::asymptotics::{self, SummaryOptions};
use crate::checks::{self, CheckOutcome};
use crate::config::{RunConfig, Spacing};
use crate::diagnostics::{self, DiagnosticRecord};
use crate::error::{Error, Result};
use crate::integrate::{self, Trajectory};
use crate::model::ParticleState;
use crate::output::{self, RunSummary};
use crate::scenarios;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_CHECK_FAILED: i32 = 4;
pub const EXIT_IO: i32 = 5;

/// Relative output prefixes are placed under this directory when set.
pub const OUT_DIR_ENV: &str = "REPULSE_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "repulse", version, about = "Repulsive Coulomb n-body simulator and verifier")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate a scenario and write trajectory, diagnostics and summary.
    Run(RunArgs),
    /// Recompute the asymptotic summary from a trajectory CSV.
    Fit(FitArgs),
    /// Run the full check battery and print a pass/fail table.
    Verify(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML run configuration; defaults apply to everything not given.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output path prefix.
    #[arg(long)]
    pub prefix: Option<String>,
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Random-cloud seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub quiet: bool,
    #[arg(long, env = OUT_DIR_ENV, hide_env_values = true)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Trajectory CSV written by `run`.
    pub csv: PathBuf,
    /// Write `<prefix>.fit.json` instead of printing to stdout.
    #[arg(long)]
    pub prefix: Option<String>,
    #[arg(long, default_value_t = asymptotics::DEFAULT_TAIL_FRACTION)]
    pub tail_fraction: f64,
    #[arg(long)]
    pub quiet: bool,
    #[arg(long, env = OUT_DIR_ENV, hide_env_values = true)]
    pub out_dir: Option<PathBuf>,
}

pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::InvalidConfig(_)
        | Error::Parse { .. }
        | Error::InvalidState(_)
        | Error::InfeasibleSpec { .. }
        | Error::NonMonotoneTimes
        | Error::Domain(_) => EXIT_INVALID,
        Error::Io { .. } => EXIT_IO,
        Error::DegenerateConfiguration { .. }
        | Error::UndefinedAtTime { .. }
        | Error::NotApplicable(_)
        | Error::NotInDiagnosticWindow { .. }
        | Error::NumericalBlowup { .. }
        | Error::StepUnderflow { .. }
        | Error::InsufficientHorizon(_)
        | Error::Fit(_) => EXIT_NUMERICAL,
    }
}

/// Loads the configuration and applies command-line overrides.
pub fn resolve_config(args: &RunArgs) -> Result<RunConfig> {
    let mut config = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(p) = &args.prefix {
        config.output.prefix = p.clone();
    }
    if let Some(t) = args.t_end {
        config.t_end = t;
    }
    if let Some(s) = args.seed {
        config.scenario.seed = s;
    }
    if let Some(r) = args.rel_tol {
        config.stepper.rel_tol = r;
    }
    config.validate()?;
    Ok(config)
}

/// A finished run with everything written by `run`.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub initial: ParticleState,
    pub trajectory: Trajectory,
    pub records: Vec<DiagnosticRecord>,
    pub summary: RunSummary,
}

impl Simulation {
    pub fn trajectory_csv(&self, precision: u32) -> Vec<u8> {
        let mut buf = Vec::new();
        output::write_trajectory_csv(&mut buf, &self.trajectory, precision).expect("writing to memory");
        buf
    }

    pub fn diagnostics_csv(&self, precision: u32) -> Vec<u8> {
        let mut buf = Vec::new();
        output::write_diagnostics_csv(&mut buf, &self.trajectory, &self.records, precision)
            .expect("writing to memory");
        buf
    }
}

fn keep_enabled(config: &RunConfig, checks: Vec<CheckOutcome>) -> Vec<CheckOutcome> {
    if !config.checks.enabled {
        return Vec::new();
    }
    checks
        .into_iter()
        .filter(|c| !config.checks.skip.iter().any(|s| s == &c.name))
        .collect()
}

/// Builds the scenario, integrates it and evaluates diagnostics, summary and
/// the single-run checks.
pub fn simulate(config: &RunConfig) -> Result<Simulation> {
    config.validate()?;
    let initial = scenarios::build(&config.scenario)?;
    let trajectory = integrate::integrate(&initial, config.t_end, &config.stepper, &config.output_times(initial.t()))?;
    let records = diagnostics::evaluate(&trajectory)?;
    let asymptotics = asymptotics::summarize(&trajectory, &SummaryOptions::for_horizon(config.t_end))?;
    let checks = keep_enabled(
        config,
        checks::run_checks(&trajectory, &records, config.per_decade(), &config.checks.tolerances)?,
    );
    let summary = RunSummary {
        scenario: config.scenario,
        n: initial.len(),
        t_end: config.t_end,
        e0: trajectory.first().report.e_total,
        c_constant: records.iter().find_map(|r| r.c_constant),
        steps: trajectory.stats.into(),
        asymptotics,
        all_passed: checks::all_passed(&checks),
        checks,
    };
    Ok(Simulation {
        initial,
        trajectory,
        records,
        summary,
    })
}

#[cfg(feature = "parallel")]
fn join<A: Send, B: Send>(a: impl FnOnce() -> A + Send, b: impl FnOnce() -> B + Send) -> (A, B) {
    rayon::join(a, b)
}

#[cfg(not(feature = "parallel"))]
fn join<A, B>(a: impl FnOnce() -> A, b: impl FnOnce() -> B) -> (A, B) {
    (a(), b())
}

/// Runs `simulate` and writes the three output files.
pub fn cmd_run(config: &RunConfig, out_dir: Option<&Path>, quiet: bool) -> Result<Simulation> {
    let sim = simulate(config)?;
    let p = config.output.precision;
    let prefix = &config.output.prefix;
    let files = [
        (".traj.csv", sim.trajectory_csv(p)),
        (".diag.csv", sim.diagnostics_csv(p)),
        (".summary.json", output::to_json(&sim.summary).into_bytes()),
    ];
    for (suffix, bytes) in &files {
        output::write_file(&output::output_path(prefix, suffix, out_dir), bytes)?;
    }
    if !quiet {
        for (suffix, _) in &files {
            println!("wrote {}", output::output_path(prefix, suffix, out_dir).display());
        }
        print_overview(&sim.summary);
        if !sim.summary.checks.is_empty() {
            print!("{}", checks::render_table(&sim.summary.checks));
        }
    }
    Ok(sim)
}

fn print_overview(s: &RunSummary) {
    println!(
        "n = {}, T = {}, E(0) = {:.6e}, C = {}, steps = {} accepted / {} rejected",
        s.n,
        s.t_end,
        s.e0,
        s.c_constant.map_or("-".into(), |c| format!("{c:.6e}")),
        s.steps.accepted,
        s.steps.rejected
    );
    if let (Some(c1), Some(c2)) = (s.asymptotics.c1, s.asymptotics.c2) {
        println!("growth envelope c1 = {c1:.6}, c2 = {c2:.6}");
    }
}

/// Recomputes the asymptotic summary from a trajectory CSV.
pub fn cmd_fit(path: &Path, tail_fraction: f64) -> Result<asymptotics::AsymptoticSummary> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let trajectory = Trajectory::from_states(output::parse_trajectory_csv(&text)?)?;
    let mut options = SummaryOptions::for_horizon(trajectory.last().t());
    options.tail_fraction = tail_fraction;
    asymptotics::summarize(&trajectory, &options)
}

/// The full battery: single-run checks plus sampling refinement, the
/// scaling law, time reversal and determinism. The independent runs execute
/// concurrently.
pub fn cmd_verify(config: &RunConfig) -> Result<Vec<CheckOutcome>> {
    let tol = config.checks.tolerances;
    let refined = || -> Result<Option<Simulation>> {
        match config.output.spacing {
            Spacing::Geometric { per_decade } => {
                let mut c = config.clone();
                c.output.spacing = Spacing::Geometric {
                    per_decade: 2 * per_decade,
                };
                simulate(&c).map(Some)
            }
            Spacing::Fixed { .. } => Ok(None),
        }
    };
    let symmetry = || -> Result<(f64, f64)> {
        let initial = scenarios::build(&config.scenario)?;
        let (scaling, reversal) = join(
            || {
                checks::scaling_mismatch(
                    &initial,
                    config.t_end,
                    &config.stepper,
                    &config.output_times(initial.t()),
                    4.0,
                )
            },
            || checks::reversal_mismatch(&initial, config.t_end.min(10.0), &config.stepper),
        );
        Ok((scaling?, reversal?))
    };
    let ((main, again), (fine, sym)) = join(|| join(|| simulate(config), || simulate(config)), || join(refined, symmetry));
    let (main, again, fine, (scaling, reversal)) = (main?, again?, fine?, sym?);

    let mut out = main.summary.checks.clone();
    match &fine {
        Some(f) => {
            let per = config.per_decade().expect("geometric spacing");
            out.extend(checks::order_checks(&main.trajectory, &f.trajectory, per, &tol));
        }
        None => {
            out.push(CheckOutcome::not_applicable("theorem-a-order", "fixed output spacing"));
            out.push(CheckOutcome::not_applicable("virial-order", "fixed output spacing"));
        }
    }
    out.push(CheckOutcome::at_most("scaling", scaling, tol.scaling).with_note("lambda = 4"));
    out.push(CheckOutcome::at_most("reversal", reversal, tol.reversal));
    let p = config.output.precision;
    let identical = main.trajectory_csv(p) == again.trajectory_csv(p)
        && main.diagnostics_csv(p) == again.diagnostics_csv(p)
        && output::to_json(&main.summary) == output::to_json(&again.summary);
    out.push(CheckOutcome::at_least("determinism", if identical { 1.0 } else { 0.0 }, 1.0)
        .with_note("rerun gives byte-identical outputs"));
    Ok(keep_enabled(config, out))
}

fn report(error: &Error) -> i32 {
    eprintln!("error: {error}");
    exit_code(error)
}

/// Parses arguments, dispatches, and returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Run(args) => {
            let result = resolve_config(&args).and_then(|c| cmd_run(&c, args.out_dir.as_deref(), args.quiet));
            match result {
                Ok(sim) if sim.summary.all_passed => EXIT_OK,
                Ok(_) => EXIT_CHECK_FAILED,
                Err(e) => report(&e),
            }
        }
        Command::Fit(args) => {
            let summary = match cmd_fit(&args.csv, args.tail_fraction) {
                Ok(s) => s,
                Err(e) => return report(&e),
            };
            let json = output::to_json(&summary);
            match &args.prefix {
                Some(prefix) => {
                    let path = output::output_path(prefix, ".fit.json", args.out_dir.as_deref());
                    if let Err(e) = output::write_file(&path, json.as_bytes()) {
                        return report(&e);
                    }
                    if !args.quiet {
                        println!("wrote {}", path.display());
                    }
                }
                None => print!("{json}"),
            }
            EXIT_OK
        }
        Command::Verify(args) => {
            let checks = match resolve_config(&args).and_then(|c| cmd_verify(&c)) {
                Ok(c) => c,
                Err(e) => return report(&e),
            };
            if !args.quiet {
                print!("{}", checks::render_table(&checks));
            }
            if checks::all_passed(&checks) {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            }
        }
    }
}
