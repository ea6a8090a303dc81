//! Command-line front end: reads a problem file, runs one command, writes
//! its artifact to stdout (and optionally to a file), and reports the
//! outcome in the exit code.
//!
//! Exit codes: 0 on success, 2 when certification ran but every criterion
//! was inapplicable, 1 on any error.

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use oscillint::criteria::{cert_witness_u, certify_all, summarize, Certificate, Verdict};
use oscillint::equation::EquationSpec;
use oscillint::floquet::classify;
use oscillint::fundamental::solve_ivp;
use oscillint::oracle::{
    companion_identity_discrepancy, empirical_decay_rate, positivity_scan,
    potential_response_range,
};
use oscillint::problem::{parse_problem, ProblemFile, SweepAxis};
use oscillint::report::{
    certify_json, floquet_json, oracle_json, render_json, simulate_csv, sweep_row, OracleSummary,
    SWEEP_HEADER,
};
use rayon::prelude::*;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "oscillint", version, about = "Certify nonoscillation and exponential \
stability of x'' + a(t) x' + b(t) x = f(t)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every certificate and summarize the strongest claim.
    Certify {
        file: PathBuf,
        /// Also write the report to this path.
        #[arg(long, value_name = "OUT")]
        json: Option<PathBuf>,
    },
    /// Monodromy, multipliers and classification for a periodic equation.
    Floquet { file: PathBuf },
    /// Integrate from given initial conditions and print the trajectory.
    Simulate {
        file: PathBuf,
        /// Initial position x(t_start).
        #[arg(long, allow_negative_numbers = true)]
        x0: f64,
        /// Initial velocity x'(t_start).
        #[arg(long, allow_negative_numbers = true)]
        v0: f64,
        /// Length of the integration span.
        #[arg(long = "T")]
        t: f64,
    },
    /// Measure decay rate, kernel positivity, the unit-forcing response and
    /// the companion-kernel identities.
    Oracle { file: PathBuf },
    /// Re-certify across a parameter range and print chart data.
    Sweep {
        file: PathBuf,
        /// Name of the swept constant; falls back to the file's sweep block.
        #[arg(long)]
        param: Option<String>,
        #[arg(long, allow_negative_numbers = true)]
        from: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        to: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
    },
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        return 1;
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let informational =
                matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if informational { 0 } else { 1 };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

/// Honor OSCILLINT_THREADS before any parallel section spins up the default
/// pool.
fn init_threads() -> Result<(), String> {
    let raw = match std::env::var("OSCILLINT_THREADS") {
        Ok(raw) => raw,
        Err(std::env::VarError::NotPresent) => return Ok(()),
        Err(e) => return Err(format!("OSCILLINT_THREADS: {e}")),
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| format!("OSCILLINT_THREADS must be a positive integer, got {raw:?}"))?;
    if n == 0 {
        return Err("OSCILLINT_THREADS must be a positive integer, got \"0\"".into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn dispatch(command: Command) -> Result<i32, String> {
    match command {
        Command::Certify { file, json } => cmd_certify(&file, json.as_deref()),
        Command::Floquet { file } => cmd_floquet(&file),
        Command::Simulate { file, x0, v0, t } => cmd_simulate(&file, x0, v0, t),
        Command::Oracle { file } => cmd_oracle(&file),
        Command::Sweep {
            file,
            param,
            from,
            to,
            steps,
        } => cmd_sweep(&file, param, from, to, steps),
    }
}

/// Write an artifact to stdout. A closed pipe (e.g. piping into `head`) is
/// not an error; everything else is.
fn emit(text: &str) -> Result<(), String> {
    match std::io::stdout().write_all(text.as_bytes()) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        Err(e) => Err(format!("stdout: {e}")),
    }
}

fn load(file: &Path) -> Result<ProblemFile, String> {
    parse_problem(file).map_err(|e| format!("{}: {e}", file.display()))
}

fn label_for(problem: &ProblemFile, file: &Path) -> String {
    if problem.equation.label.is_empty() {
        file.file_stem()
            .map_or_else(|| file.display().to_string(), |s| s.to_string_lossy().into())
    } else {
        problem.equation.label.clone()
    }
}

fn run_certificates(problem: &ProblemFile) -> Result<Vec<Certificate>, String> {
    let cfg = problem.config.certify();
    let mut certs = certify_all(&problem.equation, &cfg).map_err(|e| e.to_string())?;
    if let Some(u) = &problem.witness_u {
        certs.push(
            cert_witness_u(&problem.equation, u, cfg.horizon, &cfg).map_err(|e| e.to_string())?,
        );
    }
    Ok(certs)
}

fn all_inapplicable(certs: &[Certificate]) -> bool {
    certs.iter().all(|c| c.verdict == Verdict::Inapplicable)
}

fn cmd_certify(file: &Path, json_out: Option<&Path>) -> Result<i32, String> {
    let problem = load(file)?;
    let certs = run_certificates(&problem)?;
    let doc = certify_json(&label_for(&problem, file), summarize(&certs), &certs);
    let text = render_json(&doc);
    emit(&text)?;
    if let Some(path) = json_out {
        std::fs::write(path, &text).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(if all_inapplicable(&certs) { 2 } else { 0 })
}

fn cmd_floquet(file: &Path) -> Result<i32, String> {
    let problem = load(file)?;
    let result = classify(&problem.equation, problem.config.horizon, problem.config.tol)
        .map_err(|e| e.to_string())?;
    emit(&render_json(&floquet_json(&result)))?;
    Ok(0)
}

fn cmd_simulate(file: &Path, x0: f64, v0: f64, span: f64) -> Result<i32, String> {
    if !(span.is_finite() && span > 0.0) {
        return Err(format!("--T must be a positive span, got {span}"));
    }
    if !(x0.is_finite() && v0.is_finite()) {
        return Err("--x0 and --v0 must be finite".into());
    }
    let problem = load(file)?;
    let t0 = problem.equation.t_start;
    let traj = solve_ivp(&problem.equation, t0, x0, v0, t0 + span, problem.config.tol)
        .map_err(|e| e.to_string())?;
    emit(&simulate_csv(&traj, 2000))?;
    Ok(0)
}

fn cmd_oracle(file: &Path) -> Result<i32, String> {
    let problem = load(file)?;
    let eq = &problem.equation;
    let grid = problem.config.grid;
    let t_scan = eq.t_start + problem.config.horizon.min(50.0);
    let decay =
        empirical_decay_rate(eq, problem.config.horizon).map_err(|e| e.to_string())?;
    let positivity = positivity_scan(eq, t_scan, grid).map_err(|e| e.to_string())?;
    let response_range = if positivity {
        Some(potential_response_range(eq, t_scan, grid).map_err(|e| e.to_string())?)
    } else {
        None
    };
    let identity_discrepancy =
        companion_identity_discrepancy(eq, t_scan, grid).map_err(|e| e.to_string())?;
    let summary = OracleSummary {
        decay,
        positivity,
        response_range,
        identity_discrepancy,
    };
    emit(&render_json(&oracle_json(&summary)))?;
    Ok(0)
}

fn cmd_sweep(
    file: &Path,
    param: Option<String>,
    from: Option<f64>,
    to: Option<f64>,
    steps: Option<usize>,
) -> Result<i32, String> {
    let problem = load(file)?;
    let axis = resolve_axis(&problem, param, from, to, steps)?;
    let points = axis.values();
    let rows: Vec<Result<(String, bool), String>> = points
        .par_iter()
        .enumerate()
        .map(|(index, &value)| sweep_point(&problem, &axis.param, index, value))
        .collect();
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    let mut every_cell_inapplicable = true;
    for row in rows {
        let (line, inapplicable) = row?;
        out.push_str(&line);
        out.push('\n');
        every_cell_inapplicable &= inapplicable;
    }
    emit(&out)?;
    Ok(if every_cell_inapplicable { 2 } else { 0 })
}

fn resolve_axis(
    problem: &ProblemFile,
    param: Option<String>,
    from: Option<f64>,
    to: Option<f64>,
    steps: Option<usize>,
) -> Result<SweepAxis, String> {
    let file_axis = problem.sweep.clone();
    let param = param
        .or_else(|| file_axis.as_ref().map(|a| a.param.clone()))
        .ok_or("sweep needs --param (or a sweep block in the file)")?;
    let from = from
        .or(file_axis.as_ref().map(|a| a.from))
        .ok_or("sweep needs --from (or a sweep block in the file)")?;
    let to = to
        .or(file_axis.as_ref().map(|a| a.to))
        .ok_or("sweep needs --to (or a sweep block in the file)")?;
    let steps = steps
        .or(file_axis.as_ref().map(|a| a.steps))
        .ok_or("sweep needs --steps (or a sweep block in the file)")?;
    if !(from.is_finite() && to.is_finite()) {
        return Err("sweep range must be finite".into());
    }
    if !(2..=100_000).contains(&steps) {
        return Err(format!("--steps must lie in [2, 100000], got {steps}"));
    }
    if problem.equation.named_const_count(&param) == 0 {
        return Err(format!("no constant named {param:?} in the equation"));
    }
    Ok(SweepAxis {
        param,
        from,
        to,
        steps,
    })
}

/// Certify one parameter point and fit its decay rate. Returns the CSV line
/// and whether every verdict on it was INAPPLICABLE.
fn sweep_point(
    problem: &ProblemFile,
    param: &str,
    index: usize,
    value: f64,
) -> Result<(String, bool), String> {
    let eq: EquationSpec = problem.equation.substitute_named(param, value);
    eq.validate(problem.config.horizon)
        .map_err(|e| format!("{param} = {value}: {e}"))?;
    let cfg = problem.config.certify();
    let certs = certify_all(&eq, &cfg).map_err(|e| format!("{param} = {value}: {e}"))?;
    let decay = empirical_decay_rate(&eq, cfg.horizon)
        .map_err(|e| format!("{param} = {value}: {e}"))?;
    let line = sweep_row(index, value, &certs, summarize(&certs), decay.lambda_fit);
    Ok((line, all_inapplicable(&certs)))
}
