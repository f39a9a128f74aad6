//! Batch front end for `ri-core`: reads JSON instance files, runs one
//! command, writes a JSON report and prints a table derived from it.

pub mod report;
mod table;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use ndarray::Array2;
use ri_core::bridge::{sinkhorn_solve, BridgeSolution, SinkhornOptions};
use ri_core::diagnostics::{diagnose, DiagnosticsReport, Thresholds as CoreThresholds};
use ri_core::model::{expected_utility, kappa_cost, kl_divergence, mutual_information};
use ri_core::optimizer::{brute_force_oracle, OracleOptions, OuterOptions};
use ri_core::random::{random_instance, InstanceSpec};
use ri_core::restrictions::{entry_report, EntryPair};
use ri_core::{full_solve, Coupling, MarginalX, ProblemInstance, RawInstance, Solution, SolveOptions};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub use report::{from_json, to_json, RunReport};
use report::*;
pub use table::render;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] ri_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(ri_core::Error::NotConverged { .. }) => EXIT_NOT_CONVERGED,
            _ => EXIT_INPUT,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "ri", version, about = "Rational inattention solver with KL-plus-mutual-information cost")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Write the JSON report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-10)]
    pub outer_tol: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub inner_tol: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Add wall-clock timings to the report (makes it non-reproducible).
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the optimal policy and run every diagnostic on it.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Solve the inner bridge problem for a fixed characteristic marginal.
    Bridge {
        #[arg(long)]
        instance: PathBuf,
        /// JSON array, `{"nu": [...]}`, or a solve report.
        #[arg(long)]
        nu: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Solve a base market and an entrant market and test the entry restrictions.
    Entry {
        #[arg(long, alias = "instance")]
        base: PathBuf,
        #[arg(long)]
        entrant: PathBuf,
        /// Tolerance for ratio constancy and for the spread of alpha estimates.
        #[arg(long, default_value_t = 1e-6)]
        entry_tol: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Compare the solver with a brute-force maximizer (n*m <= 12).
    Oracle {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run the diagnostics on a coupling file, or on the solver output.
    Diagnose {
        #[arg(long)]
        instance: PathBuf,
        /// JSON matrix, `{"coupling": [[...]]}`, or a solve report.
        #[arg(long)]
        coupling: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Write a seeded random instance file.
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0.0)]
        umin: f64,
        #[arg(long, default_value_t = 1.0)]
        umax: f64,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// Output path; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// What a command produced: the report (if any), the text for standard
/// output and the process exit code.
#[derive(Debug)]
pub struct Outcome {
    pub report: Option<RunReport>,
    pub stdout: String,
    pub exit_code: i32,
}

fn read(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path, bytes: &[u8]) -> CliResult<T> {
    serde_json::from_slice(bytes).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Reads and validates an instance file.
pub fn parse_instance(path: &Path) -> CliResult<(ProblemInstance, InstanceEcho)> {
    let bytes = read(path)?;
    let raw: RawInstance = parse_json(path, &bytes)?;
    let inst = raw
        .validate()
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let echo = InstanceEcho {
        sha256: hex::encode(Sha256::digest(&bytes)),
        characteristics: inst.characteristic_labels().to_vec(),
        states: inst.state_labels().to_vec(),
        alpha: raw.alpha,
        lambda: raw.lambda,
    };
    Ok((inst, echo))
}

/// Seeded random instance in file form.
pub fn gen_instance(seed: u64, n: usize, m: usize, umin: f64, umax: f64, alpha: f64, lambda: f64) -> CliResult<RawInstance> {
    if n == 0 || m == 0 {
        return Err(CliError::Input("n and m must be at least 1".into()));
    }
    if !(umin.is_finite() && umax.is_finite() && umin <= umax) {
        return Err(CliError::Input(format!("utility range [{umin}, {umax}] is not valid")));
    }
    let raw = random_instance(&InstanceSpec {
        seed,
        n,
        m,
        utility_min: umin,
        utility_max: umax,
        alpha,
        lambda,
    });
    raw.validate()?;
    Ok(raw)
}

fn settings(common: &Common) -> CliResult<Settings> {
    for (name, v) in [("outer-tol", common.outer_tol), ("inner-tol", common.inner_tol)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(CliError::Input(format!("--{name} must be a positive number, got {v}")));
        }
    }
    if common.max_iter == 0 {
        return Err(CliError::Input("--max-iter must be at least 1".into()));
    }
    Ok(Settings {
        outer_tol: common.outer_tol,
        inner_tol: common.inner_tol,
        max_iter: common.max_iter,
        seed: common.seed,
    })
}

fn solve_options(s: &Settings) -> SolveOptions {
    SolveOptions {
        outer: OuterOptions {
            tol: s.outer_tol,
            max_iter: s.max_iter,
            ..OuterOptions::default()
        },
        inner: inner_options(s),
        ..SolveOptions::default()
    }
}

fn inner_options(s: &Settings) -> SinkhornOptions {
    SinkhornOptions {
        tol: s.inner_tol,
        max_iter: s.max_iter,
    }
}

fn rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn kappa_parts(p: &Coupling, inst: &ProblemInstance) -> CliResult<Kappa> {
    let lambda = inst.lambda();
    Ok(Kappa {
        total: kappa_cost(p, inst)?,
        vertical: inst.alpha() * lambda * kl_divergence(&p.row_marginal(), inst.phi())?,
        mutual_information: lambda * mutual_information(p),
    })
}

fn solution_report(s: &Solution, inst: &ProblemInstance) -> CliResult<SolutionReport> {
    Ok(SolutionReport {
        nu_star: s.nu_star.weights().to_vec(),
        ccp: rows(&s.ccp),
        coupling: rows(s.coupling.joint()),
        u_star: s.u_star,
        f_star: s.f_star,
        expected_utility: expected_utility(&s.coupling, inst)?,
        kappa: kappa_parts(&s.coupling, inst)?,
        foc_residual: s.foc_residual,
        consistency_residual: s.consistency_residual,
        outer_iterations: s.outer_iterations,
        converged: s.converged,
    })
}

fn bridge_report(b: &BridgeSolution, inst: &ProblemInstance) -> BridgeReport {
    BridgeReport {
        nu: b.nu.weights().to_vec(),
        a: b.potentials.standard_a(&b.nu, inst),
        b: b.potentials.b.clone(),
        value_v: b.value_v,
        marginal_residual: b.marginal_residual,
        duality_gap: b.duality_gap,
        iterations: b.iterations,
        converged: b.converged,
    }
}

fn diagnostics_section(d: &DiagnosticsReport) -> DiagnosticsSection {
    let t = &d.thresholds;
    DiagnosticsSection {
        gibbs_deviation: d.gibbs_deviation,
        fso_slopes: d.fso_slopes.iter().map(|&(e, s)| [e, s]).collect(),
        directional_eps: d.directional_eps,
        directional_derivative_error: d.directional_derivative_error,
        jensen_gap: d.jensen_gap,
        density_min: d.density_bounds.0,
        density_max: d.density_bounds.1,
        mnl_residual: d.mnl_residual,
        thresholds: Thresholds {
            gibbs: t.gibbs,
            fso_decay: t.fso_decay,
            fso_floor: t.fso_floor,
            directional: t.directional,
            jensen: t.jensen,
            mnl: t.mnl,
            density_min: t.density_min,
        },
        passes: Passes {
            gibbs: d.passes.gibbs,
            fso: d.passes.fso,
            directional: d.passes.directional,
            jensen: d.passes.jensen,
            mnl: d.passes.mnl,
            density: d.passes.density,
            all: d.passes.all(),
        },
    }
}

fn product(inst: &ProblemInstance) -> CliResult<Coupling> {
    Ok(Coupling::product(inst.phi(), inst.mu())?)
}

fn base_report(command: &str, settings: Settings) -> RunReport {
    RunReport {
        command: command.into(),
        version: VERSION.into(),
        settings,
        instance: None,
        entrant: None,
        solution: None,
        entrant_solution: None,
        bridge: None,
        diagnostics: None,
        entry: None,
        oracle: None,
        timings: None,
        status: Status {
            converged: true,
            checks_passed: None,
            exit_code: EXIT_OK,
            message: None,
        },
    }
}

fn finish(mut report: RunReport, converged: bool, checks: Option<bool>, message: Option<String>) -> RunReport {
    let ok = converged && checks.unwrap_or(true);
    report.status = Status {
        converged,
        checks_passed: checks,
        exit_code: if ok { EXIT_OK } else { EXIT_NOT_CONVERGED },
        message,
    };
    report
}

fn cmd_solve(instance: &Path, settings: Settings) -> CliResult<RunReport> {
    let (inst, echo) = parse_instance(instance)?;
    let sol = full_solve(&inst, &solve_options(&settings))?;
    let bridge = sinkhorn_solve(&inst, &sol.nu_star, &inner_options(&settings))?;
    let diag = diagnose(&sol.coupling, &product(&inst)?, &inst, &CoreThresholds::default())?;
    let mut report = base_report("solve", settings);
    report.instance = Some(echo);
    report.solution = Some(solution_report(&sol, &inst)?);
    report.bridge = Some(bridge_report(&bridge, &inst));
    report.diagnostics = Some(diagnostics_section(&diag));
    let converged = sol.converged && bridge.converged;
    let message = (!converged).then(|| "iteration limit reached; report holds the last iterate".to_string());
    Ok(finish(report, converged, Some(diag.passes.all()), message))
}

fn floats(value: &Value) -> Option<Vec<f64>> {
    value.as_array()?.iter().map(Value::as_f64).collect()
}

fn matrix(value: &Value) -> Option<Vec<Vec<f64>>> {
    value.as_array()?.iter().map(floats).collect()
}

/// A marginal from a bare array, `{"nu": [...]}` or a solve report.
fn parse_nu(path: &Path) -> CliResult<Vec<f64>> {
    let value: Value = parse_json(path, &read(path)?)?;
    let found = floats(&value)
        .or_else(|| value.get("nu").and_then(floats))
        .or_else(|| value.pointer("/solution/nu_star").and_then(floats));
    found.ok_or_else(|| {
        CliError::Input(format!(
            "{}: expected a JSON array, an object with \"nu\", or a solve report",
            path.display()
        ))
    })
}

fn parse_coupling(path: &Path) -> CliResult<Coupling> {
    let value: Value = parse_json(path, &read(path)?)?;
    let found = matrix(&value)
        .or_else(|| value.get("coupling").and_then(matrix))
        .or_else(|| value.pointer("/solution/coupling").and_then(matrix));
    let rows = found.ok_or_else(|| {
        CliError::Input(format!(
            "{}: expected a JSON matrix, an object with \"coupling\", or a solve report",
            path.display()
        ))
    })?;
    Coupling::from_rows(&rows).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn cmd_bridge(instance: &Path, nu_path: &Path, settings: Settings) -> CliResult<RunReport> {
    let (inst, echo) = parse_instance(instance)?;
    let nu = MarginalX::new(parse_nu(nu_path)?).map_err(|e| CliError::Input(format!("{}: {e}", nu_path.display())))?;
    if nu.len() != inst.n() {
        return Err(CliError::Input(format!(
            "{}: marginal has {} entries but the instance has {} characteristics",
            nu_path.display(),
            nu.len(),
            inst.n()
        )));
    }
    let sol = sinkhorn_solve(&inst, &nu, &inner_options(&settings))?;
    let mut report = base_report("bridge", settings);
    report.instance = Some(echo);
    report.bridge = Some(bridge_report(&sol, &inst));
    let message = (!sol.converged).then(|| "iteration limit reached; report holds the last iterate".to_string());
    Ok(finish(report, sol.converged, None, message))
}

fn cmd_entry(base: &Path, entrant: &Path, tol: f64, settings: Settings) -> CliResult<RunReport> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(CliError::Input(format!("--entry-tol must be positive, got {tol}")));
    }
    let (b, echo_b) = parse_instance(base)?;
    let (e, echo_e) = parse_instance(entrant)?;
    let options = solve_options(&settings);
    let pair = match EntryPair::solve(b, e, &options) {
        Ok(p) => p,
        Err(ri_core::Error::SharedFieldMismatch(what)) => {
            return Err(CliError::Input(format!(
                "{} and {} differ in {what}; only the characteristic prior may change",
                base.display(),
                entrant.display()
            )))
        }
        Err(err) => return Err(err.into()),
    };
    let er = entry_report(&pair, tol)?;
    let labels = pair.base.characteristic_labels();
    let entry = EntrySection {
        tol,
        alpha_hat: er.alpha_hat,
        alpha_spread: er.alpha_spread,
        passed: er.passed,
        pairs: er
            .pairs
            .iter()
            .map(|p| EntryPairRow {
                first: labels[p.first].clone(),
                second: labels[p.second].clone(),
                ratios: p.ratios.clone(),
                deviation: p.constancy.deviation,
                constant: p.constancy.passed,
                alpha: p.alpha.and_then(|a| a.value()),
            })
            .collect(),
    };
    let mut report = base_report("entry", settings);
    report.instance = Some(echo_b);
    report.entrant = Some(echo_e);
    report.solution = Some(solution_report(&pair.base_solution, &pair.base)?);
    report.entrant_solution = Some(solution_report(&pair.entrant_solution, &pair.entrant)?);
    report.entry = Some(entry);
    Ok(finish(report, true, Some(er.passed), None))
}

fn cmd_oracle(instance: &Path, settings: Settings) -> CliResult<RunReport> {
    let (inst, echo) = parse_instance(instance)?;
    let oracle = brute_force_oracle(
        &inst,
        &OracleOptions {
            seed: settings.seed,
            ..OracleOptions::default()
        },
    )
    .map_err(|e| match e {
        ri_core::Error::TooLarge { .. } => CliError::Input(format!("{}: {e}", instance.display())),
        other => other.into(),
    })?;
    let sol = full_solve(&inst, &solve_options(&settings))?;
    let oracle_marginal = oracle.coupling.row_marginal();
    let marginal_gap = oracle_marginal
        .iter()
        .zip(sol.nu_star.weights())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let mut report = base_report("oracle", settings);
    report.instance = Some(echo);
    report.oracle = Some(OracleSection {
        u_oracle: oracle.u_best,
        u_solver: sol.u_star,
        difference: sol.u_star - oracle.u_best,
        oracle_marginal,
        marginal_gap,
        start_values: oracle.start_values.clone(),
        gradient_check_error: oracle.gradient_check_error,
    });
    let converged = sol.converged;
    report.solution = Some(solution_report(&sol, &inst)?);
    Ok(finish(report, converged, None, None))
}

fn cmd_diagnose(instance: &Path, coupling: Option<&Path>, settings: Settings) -> CliResult<RunReport> {
    let (inst, echo) = parse_instance(instance)?;
    let mut report = base_report("diagnose", settings);
    let mut converged = true;
    let p = match coupling {
        Some(path) => {
            let p = parse_coupling(path)?;
            if p.shape() != (inst.n(), inst.m()) {
                return Err(CliError::Input(format!(
                    "{}: coupling is {:?} but the instance is {:?}",
                    path.display(),
                    p.shape(),
                    (inst.n(), inst.m())
                )));
            }
            p
        }
        None => {
            let sol = full_solve(&inst, &solve_options(&report.settings))?;
            converged = sol.converged;
            report.solution = Some(solution_report(&sol, &inst)?);
            sol.coupling
        }
    };
    let diag = diagnose(&p, &product(&inst)?, &inst, &CoreThresholds::default()).map_err(|e| match e {
        ri_core::Error::NotBayesPlausible { .. }
        | ri_core::Error::ZeroMass { .. }
        | ri_core::Error::UndefinedSurprisal { .. } => CliError::Input(format!("coupling rejected: {e}")),
        other => other.into(),
    })?;
    report.instance = Some(echo);
    report.diagnostics = Some(diagnostics_section(&diag));
    Ok(finish(report, converged, Some(diag.passes.all()), None))
}

fn with_report(common: &Common, run: impl FnOnce(Settings) -> CliResult<RunReport>) -> CliResult<Outcome> {
    let start = Instant::now();
    let mut report = run(settings(common)?)?;
    if common.timings {
        report.timings = Some(Timings {
            total_seconds: start.elapsed().as_secs_f64(),
        });
    }
    if let Some(path) = &common.report {
        write(path, &to_json(&report))?;
    }
    Ok(Outcome {
        stdout: render(&report),
        exit_code: report.status.exit_code,
        report: Some(report),
    })
}

pub fn run(cli: Cli) -> CliResult<Outcome> {
    match cli.command {
        Command::Solve { instance, common } => with_report(&common, |s| cmd_solve(&instance, s)),
        Command::Bridge { instance, nu, common } => with_report(&common, |s| cmd_bridge(&instance, &nu, s)),
        Command::Entry {
            base,
            entrant,
            entry_tol,
            common,
        } => with_report(&common, |s| cmd_entry(&base, &entrant, entry_tol, s)),
        Command::Oracle { instance, common } => with_report(&common, |s| cmd_oracle(&instance, s)),
        Command::Diagnose {
            instance,
            coupling,
            common,
        } => with_report(&common, |s| cmd_diagnose(&instance, coupling.as_deref(), s)),
        Command::Gen {
            seed,
            n,
            m,
            umin,
            umax,
            alpha,
            lambda,
            out,
        } => {
            let raw = gen_instance(seed, n, m, umin, umax, alpha, lambda)?;
            let text = to_json(&raw);
            let stdout = match out {
                Some(path) => {
                    write(&path, &text)?;
                    format!("wrote {}\n", path.display())
                }
                None => text,
            };
            Ok(Outcome {
                report: None,
                stdout,
                exit_code: EXIT_OK,
            })
        }
    }
}
