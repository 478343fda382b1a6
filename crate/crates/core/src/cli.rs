//! Command-line interface.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::blockdata::{Ehlcp2Problem, EhlcpProblem};
use crate::convergence::suggest_omega;
use crate::linalg::NormTag;
use crate::problems::{alternating, gen_example51, gen_example52, gen_example53, gen_example55, Prescribed};
use crate::repro::{bound_row, table_csv};
use crate::schema::ProblemFile;
use crate::solvers::{method31, method32, method33, IterationConfig, KTag, ProjectionParams, SolveReport, SolveStatus};
use crate::wproperty::{falsify_random, has_column_w_property, DEFAULT_BUDGET};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "ehlcp", version, about = "Extended horizontal linear complementarity problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a generated test problem as JSON
    Gen(GenArgs),
    /// Run one of the iterative solvers
    Solve(SolveArgs),
    /// Residual-based error bounds at a probe vector
    Bounds(BoundsArgs),
    /// Check the column W-property
    Checkw(CheckwArgs),
    /// Regenerate a numerical table as CSV
    Repro(ReproArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// One of 5.1, 5.2, 5.3, 5.4 (same as 5.2) or 5.5
    #[arg(long)]
    pub example: String,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 0.0)]
    pub nu: f64,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MethodArg {
    Fp31,
    Omega32,
    Proj33,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long, value_enum)]
    pub method: MethodArg,
    /// Scalar step for omega32
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub eta: f64,
    /// Step taken by the projection method (its omega)
    #[arg(long, default_value_t = 0.25)]
    pub relax: f64,
    #[arg(long, default_value = "lower")]
    pub ktag: KTag,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    #[arg(long, default_value = "inf")]
    pub norm: NormTag,
    /// Record step norms in the report
    #[arg(long)]
    pub history: bool,
    /// Write the JSON report here
    #[arg(long)]
    pub report: Option<PathBuf>,
    pub file: PathBuf,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    pub file: PathBuf,
    /// JSON array holding the probe vector
    #[arg(long, conflicts_with = "pattern")]
    pub probe: Option<PathBuf>,
    /// Alternating probe `a,b` expanded to `(a, b, a, ...)`
    #[arg(long, allow_hyphen_values = true)]
    pub pattern: Option<String>,
    /// Norms to report; defaults to 1 and inf
    #[arg(long, value_delimiter = ',')]
    pub norm: Vec<NormTag>,
}

#[derive(Debug, Args)]
pub struct CheckwArgs {
    pub file: PathBuf,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: u128,
    /// Random singularity search with this many trials instead of enumeration
    #[arg(long)]
    pub falsify: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ReproArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=6))]
    pub table: u8,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Failure mapped to a process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Invalid(_)
            | Error::InvalidParams(_)
            | Error::InfeasibleTuple(_)
            | Error::NormMismatch { .. }
            | Error::NonpositiveDiagonal { .. }
            | Error::NoRuleApplies
            | Error::Json(_) => 2,
            Error::BudgetExceeded { .. } => 4,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn load(path: &Path) -> Result<(EhlcpProblem, Option<Prescribed>)> {
    let file = ProblemFile::read(path)?;
    let problem = file.to_problem()?;
    Ok((problem, file.prescribed))
}

fn two_block(problem: &EhlcpProblem, method: &str) -> Result<Ehlcp2Problem> {
    problem
        .as_two_block()
        .ok_or_else(|| Error::InvalidParams(format!("{method} needs m = 2 with M = H_2 = I")))
}

fn cmd_gen(a: &GenArgs, stdout: &mut dyn Write) -> Result<()> {
    let need = |v: Option<usize>, flag: &str| v.ok_or_else(|| Error::InvalidParams(format!("--{flag} is required")));
    let file = match a.example.as_str() {
        "5.1" => {
            let g = gen_example51(need(a.grid, "grid")?, a.mu, a.nu)?;
            ProblemFile::from_problem(&g.problem, g.prescribed)
        }
        "5.2" | "5.4" => {
            let g = gen_example52(need(a.n, "n")?)?;
            ProblemFile::from_two_block(&g.problem, Some(g.prescribed))
        }
        "5.3" => {
            let g = gen_example53(a.alpha)?;
            ProblemFile::from_problem(&g.problem, g.prescribed)
        }
        "5.5" => {
            let g = gen_example55(need(a.grid, "grid")?)?;
            ProblemFile::from_two_block(&g.problem, Some(g.prescribed))
        }
        other => return Err(Error::InvalidParams(format!("unknown example {other}"))),
    };
    let mut text = file.to_json()?;
    text.push('\n');
    emit(a.out.as_deref(), &text, stdout)
}

fn run_solver(a: &SolveArgs, problem: &EhlcpProblem) -> Result<SolveReport> {
    let cfg = IterationConfig { tol: a.tol, max_iter: a.max_iter, norm: a.norm, record_history: a.history };
    let n = problem.order();
    let zero = vec![0.0; n];
    match a.method {
        MethodArg::Fp31 => method31(problem, &zero, &cfg),
        MethodArg::Omega32 => {
            let p2 = two_block(problem, "omega32")?;
            let omega = match a.omega {
                Some(w) => vec![w; n],
                None => suggest_omega(&p2.h1)?.omega.to_vec(n),
            };
            method32(&p2, &omega, &zero, &cfg)
        }
        MethodArg::Proj33 => {
            let p2 = two_block(problem, "proj33")?;
            let params = ProjectionParams::new(n, a.eta, a.relax, a.ktag);
            method33(&p2, &params, &zero, &cfg)
        }
    }
}

fn cmd_solve(a: &SolveArgs, stdout: &mut dyn Write) -> std::result::Result<(), Failure> {
    let (problem, _) = load(&a.file)?;
    if a.method == MethodArg::Proj33 && a.omega.is_some() {
        return Err(Error::InvalidParams("proj33 takes its step from --relax, not --omega".into()).into());
    }
    let report = run_solver(a, &problem)?;
    if let Some(p) = &a.report {
        std::fs::write(p, serde_json::to_string_pretty(&report).map_err(Error::from)?).map_err(Error::from)?;
    }
    writeln!(
        stdout,
        "{},{},{},{:.6e},{:.16e}",
        report.method,
        problem.order(),
        report.iterations,
        report.elapsed_seconds,
        report.residual_norm
    )
    .map_err(Error::from)?;
    if report.status != SolveStatus::Converged {
        return Err(Failure { code: 3, message: format!("solver stopped with status {:?}", report.status) });
    }
    Ok(())
}

fn parse_pattern(s: &str, n: usize) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || Error::InvalidParams(format!("pattern must be two numbers a,b (got {s:?})"));
    let [a, b] = parts.as_slice() else { return Err(bad()) };
    let (a, b) = (a.parse::<f64>().map_err(|_| bad())?, b.parse::<f64>().map_err(|_| bad())?);
    Ok(alternating(n, a, b))
}

fn cmd_bounds(a: &BoundsArgs, stdout: &mut dyn Write) -> std::result::Result<(), Failure> {
    let (problem, prescribed) = load(&a.file)?;
    let n = problem.order();
    let y = match (&a.probe, &a.pattern) {
        (Some(p), _) => {
            let v: Vec<f64> = serde_json::from_str(&std::fs::read_to_string(p).map_err(Error::from)?).map_err(Error::from)?;
            v
        }
        (None, Some(s)) => parse_pattern(s, n)?,
        (None, None) => return Err(Error::InvalidParams("give --probe or --pattern".into()).into()),
    };
    if y.len() != n {
        return Err(Error::InvalidParams(format!("probe has length {} but n = {n}", y.len())).into());
    }
    let ystar = match prescribed {
        Some(p) => p.y,
        None => {
            let cfg = IterationConfig { tol: 1e-12, ..IterationConfig::default() };
            let r = method31(&problem, &vec![0.0; n], &cfg)?;
            if r.status != SolveStatus::Converged {
                return Err(Failure { code: 3, message: "no prescribed solution and the fixed-point solve did not converge".into() });
            }
            r.y_final
        }
    };
    let norms = if a.norm.is_empty() { vec![NormTag::One, NormTag::Inf] } else { a.norm.clone() };
    let mut text = String::from("norm,trueError,eta,tau,conditionFlags\n");
    for norm in norms {
        let r = bound_row(&problem, &y, &ystar, norm)?;
        let flag = |ok: bool| if ok { "ok" } else { "violated" };
        text.push_str(&format!(
            "{norm},{:.16e},{:.16e},{:.16e},\"eta:{},tau:{}\"\n",
            r.true_error,
            r.eta,
            r.tau,
            flag(r.eta_condition),
            flag(r.tau_condition)
        ));
    }
    stdout.write_all(text.as_bytes()).map_err(Error::from)?;
    Ok(())
}

fn cmd_checkw(a: &CheckwArgs, stdout: &mut dyn Write) -> std::result::Result<(), Failure> {
    let (problem, _) = load(&a.file)?;
    let blocks = &problem.blocks;
    let mut text = String::new();
    if let Some(trials) = a.falsify {
        match falsify_random(blocks, trials, a.seed) {
            Some(sel) => {
                text.push_str("holds: false\n");
                text.push_str(&format!("singular selection: {}\n", serde_json::to_string(&sel.lambdas).map_err(Error::from)?));
            }
            None => text.push_str(&format!("no singular selection found in {trials} random trials (seed {})\n", a.seed)),
        }
    } else {
        let rep = match has_column_w_property(blocks, a.budget) {
            Ok(r) => r,
            Err(e @ Error::BudgetExceeded { .. }) => {
                return Err(Failure { code: 4, message: format!("{e}; try --falsify N for a randomized search") });
            }
            Err(e) => return Err(e.into()),
        };
        text.push_str(&format!("holds: {}\n", rep.holds));
        text.push_str(&format!("representatives checked: {}\n", rep.representatives_checked));
        text.push_str(&format!(
            "determinant signs: {} to {}\n",
            rep.determinant_sign_range.0, rep.determinant_sign_range.1
        ));
        if let Some(w) = &rep.witness {
            text.push_str(&format!("witness: {:?}\n", w.0));
        }
    }
    stdout.write_all(text.as_bytes()).map_err(Error::from)?;
    Ok(())
}

fn cmd_repro(a: &ReproArgs, stdout: &mut dyn Write) -> Result<()> {
    emit(a.out.as_deref(), &table_csv(a.table)?, stdout)
}

pub fn dispatch(cli: &Cli, stdout: &mut dyn Write) -> std::result::Result<(), Failure> {
    match &cli.command {
        Command::Gen(a) => Ok(cmd_gen(a, stdout)?),
        Command::Solve(a) => cmd_solve(a, stdout),
        Command::Bounds(a) => cmd_bounds(a, stdout),
        Command::Checkw(a) => cmd_checkw(a, stdout),
        Command::Repro(a) => Ok(cmd_repro(a, stdout)?),
    }
}

/// Parses `args`, runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let mut stdout = std::io::stdout().lock();
    match dispatch(&cli, &mut stdout) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(Failure::from(Error::InvalidParams("x".into())).code, 2);
        assert_eq!(Failure::from(Error::BudgetExceeded { required: 9, budget: 1 }).code, 4);
        assert_eq!(Failure::from(Error::SingularM { pivot: 0 }).code, 1);
    }

    #[test]
    fn pattern_parsing() {
        assert_eq!(parse_pattern("-0.1, 0.1", 3).unwrap(), vec![-0.1, 0.1, -0.1]);
        assert!(parse_pattern("1", 3).is_err());
        assert!(parse_pattern("a,b", 3).is_err());
    }

    #[test]
    fn parses_flags() {
        let cli = Cli::try_parse_from(["ehlcp", "solve", "--method", "proj33", "--ktag", "upper", "p.json"]).unwrap();
        let Command::Solve(a) = cli.command else { panic!() };
        assert_eq!((a.method, a.ktag, a.eta, a.relax), (MethodArg::Proj33, KTag::StrictUpper, 0.5, 0.25));
        assert!(Cli::try_parse_from(["ehlcp", "repro", "--table", "7"]).is_err());
        let cli = Cli::try_parse_from(["ehlcp", "bounds", "p.json", "--pattern", "-0.1,0.1", "--norm", "1,inf"]).unwrap();
        let Command::Bounds(a) = cli.command else { panic!() };
        assert_eq!(a.norm, vec![NormTag::One, NormTag::Inf]);
    }
}
