mod config;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use solitary_core::postprocess::{
    rate_fit, reconstruct_eta, system_residual, unscale, write_profile_csv, write_sweep_csv,
    RateStudy, SweepRow,
};
use solitary_core::solver::{
    cold_start_sweep, continuation_sweep, kdv_profile, newton_solve, SolveResult,
};
use solitary_core::{check_assumptions, symbol_from_str, Error, SolveConfig, SystemSpec};

use config::{Format, RunConfig};

#[derive(Parser)]
#[command(
    name = "solitary",
    version,
    about = "Small-amplitude solitary waves of Boussinesq-type systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the structural hypotheses for a model and print the report.
    Check(RunArgs),
    /// Solve for a single eps.
    Solve(RunArgs),
    /// Continue a solution over a list of eps and fit the convergence rate.
    Sweep(RunArgs),
    /// Evaluate a symbol expression in `k` at one frequency.
    SymbolEval { expr: String, xi: f64 },
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failure mapped to its exit code.
enum Failure {
    Config(Value),
    Numerical(Value),
}

impl Failure {
    fn config(kind: &str, message: impl Into<String>) -> Failure {
        Failure::Config(json!({ "error": kind, "message": message.into() }))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let mut obj = json!({ "error": e.kind(), "message": e.to_string() });
        match &e {
            Error::NewtonDiverged {
                iterations,
                last_norm,
            } => {
                obj["iterations"] = json!(iterations);
                obj["last_norm"] = json!(last_norm);
            }
            Error::SpectrumCollision { xi } => obj["xi"] = json!(xi),
            Error::AbcdConditionViolated { which } => obj["which"] = json!(which),
            Error::GridUnderResolved { tail, tol } => {
                obj["tail"] = json!(tail);
                obj["tol"] = json!(tol);
            }
            _ => {}
        }
        match e {
            Error::InvalidConfig(_)
            | Error::BadGrid(_)
            | Error::Parse(_)
            | Error::UnknownModel(_)
            | Error::InsufficientData(_) => Failure::Config(obj),
            _ => Failure::Numerical(obj),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Failure {
        Failure::Numerical(json!({ "error": "Io", "message": e.to_string() }))
    }
}

type CmdResult = Result<ExitCode, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Check(args) => load(&args).and_then(|(cfg, _)| cmd_check(&cfg)),
        Command::Solve(args) => load(&args).and_then(|(cfg, out)| cmd_solve(&cfg, &out)),
        Command::Sweep(args) => load(&args).and_then(|(cfg, out)| cmd_sweep(&cfg, &out)),
        Command::SymbolEval { expr, xi } => cmd_symbol_eval(&expr, xi),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Config(v)) => {
            eprintln!("{v}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(v)) => {
            eprintln!("{v}");
            ExitCode::from(1)
        }
    }
}

fn load(args: &RunArgs) -> Result<(RunConfig, PathBuf), Failure> {
    let text = fs::read_to_string(&args.config).map_err(|e| {
        Failure::config(
            "ConfigUnreadable",
            format!("{}: {e}", args.config.display()),
        )
    })?;
    let cfg = RunConfig::parse(&text).map_err(|e| Failure::config("ParseError", e.to_string()))?;
    let out = args.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    Ok((cfg, out))
}

fn print_json<T: Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("serializable")
    );
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()
}

fn create(path: &Path) -> io::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn cmd_check(cfg: &RunConfig) -> CmdResult {
    let checked = cfg.build_model_for_check()?;
    let mut report = check_assumptions(&checked.spec, checked.spec.xi1, cfg.scan())?;
    if let Some(v) = &checked.violation {
        if let Error::AbcdConditionViolated { which } = v {
            report
                .notes
                .push(format!("AbcdConditionViolated{{{which}}}: {v}"));
        }
        report.all_pass = false;
    }
    print_json(&report);
    Ok(if report.all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

#[derive(Serialize)]
struct SolveSummary<'a> {
    model: &'a str,
    eps: f64,
    omega: f64,
    iterations: usize,
    phi_norm: f64,
    deviation: f64,
    jacobian_condition: f64,
    r1: Option<f64>,
    r2: Option<f64>,
}

/// Physical profile, `eta` and the two system residuals when the model
/// came from a two-equation system.
fn physical(
    spec: &SystemSpec,
    r: &SolveResult,
    s: f64,
) -> Result<
    (
        solitary_core::Field,
        Option<solitary_core::Field>,
        Option<(f64, f64)>,
    ),
    Error,
> {
    let v = unscale(&r.profile, r.eps)?;
    match &spec.operators {
        Some(ops) => {
            let eta = reconstruct_eta(&ops.kc, &ops.kd, &v, r.omega)?;
            let res = system_residual(&ops.ka, &ops.kb, &ops.kc, &ops.kd, &eta, &v, r.omega, s)?;
            Ok((v, Some(eta), Some(res)))
        }
        None => Ok((v, None, None)),
    }
}

fn eps_tag(eps: f64) -> String {
    format!("{eps}")
}

/// Writes the profile files of one solve and returns its summary row.
fn emit_solve(
    cfg: &RunConfig,
    spec: &SystemSpec,
    r: &SolveResult,
    dir: &Path,
    suffix: &str,
) -> Result<SweepRow, Failure> {
    let (v, eta, res) = physical(spec, r, cfg.solve.s)?;
    if cfg.wants(Format::Csv) {
        write_profile_csv(
            create(&dir.join(format!("profile{suffix}.csv")))?,
            &v,
            eta.as_ref(),
        )?;
        r.profile
            .write_csv(create(&dir.join(format!("profile_rescaled{suffix}.csv")))?)?;
        r.profile
            .write_coeffs_csv(create(&dir.join(format!("coeffs{suffix}.csv")))?)?;
    }
    Ok(SweepRow {
        eps: r.eps,
        omega: r.omega,
        iterations: r.iterations,
        phi_norm: r.phi_norm,
        deviation: r.deviation,
        r1: res.map(|x| x.0),
        r2: res.map(|x| x.1),
    })
}

fn check_eps(eps: f64) -> Result<(), Failure> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Failure::config(
            "InvalidConfig",
            format!("eps must lie in (0, 1), got {eps}"),
        ))
    }
}

fn cmd_solve(cfg: &RunConfig, dir: &Path) -> CmdResult {
    let eps = cfg
        .solve
        .eps
        .ok_or_else(|| Failure::config("InvalidConfig", "solve needs `solve.eps`"))?;
    check_eps(eps)?;
    let solve_cfg = cfg.solve_config()?;
    let spec = cfg.build_model()?;
    let grid = solve_cfg.grid()?;
    let sigma = kdv_profile(spec.gamma, &grid)?;
    let result = newton_solve(&spec, eps, &sigma, &solve_cfg)?;
    fs::create_dir_all(dir)?;
    let row = emit_solve(cfg, &spec, &result, dir, "")?;
    let summary = SolveSummary {
        model: &spec.name,
        eps: row.eps,
        omega: row.omega,
        iterations: row.iterations,
        phi_norm: row.phi_norm,
        deviation: row.deviation,
        jacobian_condition: result.jacobian_condition,
        r1: row.r1,
        r2: row.r2,
    };
    if cfg.wants(Format::Json) {
        write_json(&dir.join("result.json"), &summary)?;
    }
    print_json(&summary);
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct RateReport<'a> {
    model: &'a str,
    #[serde(flatten)]
    study: &'a RateStudy,
    pass: bool,
}

fn run_sweep(
    spec: &SystemSpec,
    eps: &[f64],
    solve_cfg: &SolveConfig,
    cold: bool,
) -> Result<(Vec<SolveResult>, Option<Error>), Error> {
    if cold {
        let mut results = Vec::new();
        for r in cold_start_sweep(spec, eps, solve_cfg)? {
            match r {
                Ok(r) => results.push(r),
                Err(e) => return Ok((results, Some(e))),
            }
        }
        Ok((results, None))
    } else {
        let out = continuation_sweep(spec, eps, solve_cfg)?;
        Ok((out.results, out.failure.map(|(_, e)| e)))
    }
}

fn cmd_sweep(cfg: &RunConfig, dir: &Path) -> CmdResult {
    let eps = cfg
        .solve
        .eps_list
        .clone()
        .ok_or_else(|| Failure::config("InvalidConfig", "sweep needs `solve.eps_list`"))?;
    for &e in &eps {
        check_eps(e)?;
    }
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Failure::config(
            "InvalidConfig",
            "eps_list must be strictly descending",
        ));
    }
    if eps.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "a rate fit needs at least 3 eps values, got {}",
            eps.len()
        ))
        .into());
    }
    let solve_cfg = cfg.solve_config()?;
    let spec = cfg.build_model()?;
    let report = check_assumptions(&spec, spec.xi1, cfg.scan())?;
    let (results, failure) = run_sweep(&spec, &eps, &solve_cfg, cfg.solve.cold_start)?;

    fs::create_dir_all(dir)?;
    let mut rows = Vec::with_capacity(results.len());
    for r in &results {
        rows.push(emit_solve(
            cfg,
            &spec,
            r,
            dir,
            &format!("_eps{}", eps_tag(r.eps)),
        )?);
    }
    if cfg.wants(Format::Csv) {
        write_sweep_csv(create(&dir.join("sweep.csv"))?, &rows)?;
    }
    if let Some(e) = failure {
        return Err(e.into());
    }

    let grid = solve_cfg.grid()?;
    let sigma = kdv_profile(spec.gamma, &grid)?;
    let study = rate_fit(&results, &sigma, solve_cfg.s, &report)?;
    let pass = study.fitted_slope >= 1.0;
    let rate = RateReport {
        model: &spec.name,
        study: &study,
        pass,
    };
    if cfg.wants(Format::Json) {
        write_json(&dir.join("rate.json"), &rate)?;
    }
    print_json(&rate);
    Ok(if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_symbol_eval(expr: &str, xi: f64) -> CmdResult {
    let sym = symbol_from_str(expr).map_err(Error::from)?;
    let value = sym.eval(xi)?;
    print_json(&json!({ "expr": expr, "xi": xi, "value": value }));
    Ok(ExitCode::SUCCESS)
}
