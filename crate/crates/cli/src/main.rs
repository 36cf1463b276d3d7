//! `monge-domp`: solve transportation problems and DOMP instances, run
//! benchmark grids and self-checks.
//!
//! Files hold costs in hundredths; output prints amounts in original units
//! with two decimals. Cells and facilities are printed one-based.
//!
//! Exit codes: 2 parse or input error, 3 unbalanced TP, 4 failed check or
//! verification mismatch, 5 enumeration cap exceeded.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use monge_domp::benders::{solve_benders, Limits, Orientation, Status};
use monge_domp::harness::{
    generate_instance, run_suite, write_csv, Grid, InstanceFile, InstanceMeta, LambdaFamily,
    Method, PRule, RunConfig,
};
use monge_domp::monge_tp::{northwest_corner, DualMethod};
use monge_domp::oracles::{domp_enumerate, DEFAULT_ENUM_CAP};
use monge_domp::tp::{is_monge, DualSolution, StaircasePath, TpFile, TpInstance};
use monge_domp::verify::{self, Suite, VerifyConfig};
use monge_domp::{Error, Money};

const ENUM_CAP_VAR: &str = "MONGE_DOMP_ENUM_CAP";

#[derive(Parser)]
#[command(
    name = "monge-domp",
    version,
    about = "Monge transportation duals and Benders cuts for ordered median location"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a balanced transportation problem by the northwest-corner rule.
    SolveTp(SolveTpArgs),
    /// Solve a DOMP instance from a file or from generator flags.
    SolveDomp(SolveDompArgs),
    /// Run a grid of generated instances and write CSV results.
    Bench(BenchArgs),
    /// Print a generated instance as JSON.
    Gen(GenArgs),
    /// Run the property suites and print a pass/fail table.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DualsArg {
    Backward,
    Forward,
    FormulaRow,
    FormulaCol,
}

impl From<DualsArg> for DualMethod {
    fn from(d: DualsArg) -> Self {
        match d {
            DualsArg::Backward => DualMethod::Backward,
            DualsArg::Forward => DualMethod::Forward,
            DualsArg::FormulaRow => DualMethod::FormulaRow,
            DualsArg::FormulaCol => DualMethod::FormulaCol,
        }
    }
}

#[derive(clap::Args)]
struct SolveTpArgs {
    /// JSON file `{p, q, s, d, cost_scaled}`.
    #[arg(long)]
    input: PathBuf,
    /// Also print a dual solution.
    #[arg(long, value_enum)]
    duals: Option<DualsArg>,
    /// Verify Monge, primal feasibility, dual feasibility, strong duality and
    /// complementary slackness.
    #[arg(long)]
    check: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum DompMethod {
    BendersB1,
    BendersB2,
    Enum,
}

#[derive(clap::Args)]
struct SolveDompArgs {
    /// Instance JSON; `--p`, `--family` and `--seed` override its fields.
    #[arg(long, conflicts_with = "n")]
    input: Option<PathBuf>,
    #[arg(long, required_unless_present = "input")]
    n: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_family)]
    family: Option<LambdaFamily>,
    #[arg(long, value_enum, default_value = "benders-b1")]
    method: DompMethod,
    /// Cut violation tolerance in original units.
    #[arg(long, default_value = "0.01", value_parser = parse_money)]
    epsilon: Money,
    #[arg(long)]
    time_limit_ms: Option<u64>,
    /// Cross-check the result against enumeration.
    #[arg(long)]
    verify: bool,
}

#[derive(clap::Args)]
struct BenchArgs {
    /// Site counts; an empty list gives an empty grid.
    #[arg(long, num_args = 0.., value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// `p` rules as divisors of `n` (4, 3, 2) or `n/4`, `n/3`, `n/2`.
    #[arg(long = "p-rule", num_args = 0.., value_delimiter = ',', value_parser = parse_p_rule)]
    p_rules: Option<Vec<PRule>>,
    #[arg(long, num_args = 0.., value_delimiter = ',', value_parser = parse_family)]
    family: Option<Vec<LambdaFamily>>,
    #[arg(long, num_args = 0.., value_delimiter = ',')]
    seed: Option<Vec<u64>>,
    #[arg(long, num_args = 0.., value_delimiter = ',', value_parser = parse_method)]
    method: Option<Vec<Method>>,
    /// Cut violation tolerance in original units.
    #[arg(long, default_value = "0.01", value_parser = parse_money)]
    epsilon: Money,
    #[arg(long)]
    time_limit_ms: Option<u64>,
    /// Write zero in the time columns so output is reproducible.
    #[arg(long)]
    no_timing: bool,
    /// CSV path; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    /// Defaults to max(1, n / 4).
    #[arg(long)]
    p: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "median", value_parser = parse_family)]
    family: LambdaFamily,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct VerifyArgs {
    /// Run one suite; all suites if omitted.
    #[arg(long, value_parser = parse_suite)]
    suite: Option<Suite>,
    #[arg(long, default_value_t = 6)]
    max_n: usize,
    #[arg(long, default_value_t = 4)]
    max_g: usize,
    #[arg(long, default_value_t = 200)]
    cases: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn parse_money(s: &str) -> Result<Money, String> {
    let m: Money = s.parse().map_err(|e| format!("{e}"))?;
    if m.is_negative() {
        return Err("must be nonnegative".into());
    }
    Ok(m)
}

fn parse_family(s: &str) -> Result<LambdaFamily, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_p_rule(s: &str) -> Result<PRule, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Error carrying the process exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        Self {
            code,
            error: error.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Unbalanced { .. } => 3,
            Error::CapExceeded { .. } => 5,
            _ => 2,
        };
        Failure::new(code, e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::new(1, e)
    }
}

type CmdResult = Result<(), Failure>;

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(|e| Failure::new(2, e))?;
    serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(|e| Failure::new(2, e))
}

fn enum_cap() -> Result<usize, Failure> {
    match std::env::var(ENUM_CAP_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .with_context(|| format!("{ENUM_CAP_VAR}={v:?} is not a count"))
            .map_err(|e| Failure::new(2, e)),
        Err(_) => Ok(DEFAULT_ENUM_CAP),
    }
}

fn money_list(xs: &[Money]) -> String {
    xs.iter()
        .map(Money::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn facility_list(open: &[usize]) -> String {
    let inner = open
        .iter()
        .map(|j| (j + 1).to_string())
        .collect::<Vec<_>>()
        .join(",");
    format!("{{{inner}}}")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::SolveTp(a) => cmd_solve_tp(a),
        Command::SolveDomp(a) => cmd_solve_domp(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn cmd_solve_tp(args: SolveTpArgs) -> CmdResult {
    let file: TpFile = read_json(&args.input)?;
    let inst = file.to_instance()?;
    let path = northwest_corner(&inst)?;
    let cells: Vec<String> = path
        .cells
        .iter()
        .map(|c| format!("({},{})", c.row + 1, c.col + 1))
        .collect();
    println!("path: {}", cells.join(" "));
    println!(
        "shipments: {}",
        path.shipments
            .iter()
            .map(u64::to_string)
            .collect::<Vec<_>>()
            .join(" ")
    );
    let primal = path.cost(&inst);
    println!("objective: {primal}");

    let duals = match args.duals {
        Some(d) => {
            let sol = DualMethod::from(d).compute(&inst, &path)?;
            println!("u=({}) v=({})", money_list(&sol.u), money_list(&sol.v));
            println!("dual objective: {}", sol.objective(&inst));
            vec![(DualMethod::from(d), sol)]
        }
        None => Vec::new(),
    };

    if args.check {
        check_tp(&inst, &path, primal, duals)?;
    }
    Ok(())
}

fn check_tp(
    inst: &TpInstance,
    path: &StaircasePath,
    primal: Money,
    duals: Vec<(DualMethod, DualSolution)>,
) -> CmdResult {
    path.validate(inst).map_err(|e| Failure::new(4, e))?;
    if !is_monge(inst.costs()) {
        eprintln!("warning: cost matrix is not Monge; optimality checks skipped");
        println!("check: primal feasible");
        return Ok(());
    }
    let duals = if duals.is_empty() {
        DualMethod::ALL
            .iter()
            .map(|&m| Ok((m, m.compute(inst, path)?)))
            .collect::<Result<Vec<_>, Error>>()?
    } else {
        duals
    };
    let mut problems = Vec::new();
    for (method, sol) in &duals {
        if let Some(cell) = sol.first_violation(inst.costs()) {
            problems.push(format!(
                "{method:?}: dual infeasible at ({},{})",
                cell.row + 1,
                cell.col + 1
            ));
        }
        let obj = sol.objective(inst);
        if obj != primal {
            problems.push(format!(
                "{method:?}: dual objective {obj} != primal {primal}"
            ));
        }
        for (cell, &x) in path.cells.iter().zip(&path.shipments) {
            if x > 0 && sol.u[cell.row] + sol.v[cell.col] != inst.cost(*cell) {
                problems.push(format!(
                    "{method:?}: complementary slackness fails at ({},{})",
                    cell.row + 1,
                    cell.col + 1
                ));
            }
        }
    }
    if problems.is_empty() {
        println!(
            "check: Monge, primal feasible, dual feasible, strong duality, complementary slackness"
        );
        Ok(())
    } else {
        Err(Failure::new(4, anyhow::anyhow!(problems.join("; "))))
    }
}

fn cmd_solve_domp(args: SolveDompArgs) -> CmdResult {
    let inst = match &args.input {
        Some(path) => {
            let file: InstanceFile = read_json(path)?;
            let mut inst = file.to_instance()?;
            if let Some(p) = args.p {
                inst = inst.with_p(p)?;
            }
            if let Some(family) = args.family {
                let seed = args
                    .seed
                    .or(file.meta.as_ref().map(|m| m.seed))
                    .unwrap_or(1);
                inst = inst.with_lambda(family.lambda(inst.n(), seed))?;
            }
            inst
        }
        None => {
            let n = args.n.expect("clap requires n without input");
            generate_instance(
                n,
                args.p.unwrap_or(PRule::Quarter.p(n)),
                args.seed.unwrap_or(1),
                args.family.unwrap_or(LambdaFamily::Median),
            )?
        }
    };
    let cap = enum_cap()?;

    let (value, open) = match args.method {
        DompMethod::Enum => {
            let (value, open) = domp_enumerate(&inst, cap)?;
            println!("method: enum");
            println!("status: optimal");
            println!("value: {value}");
            println!("open: {}", facility_list(&open));
            (value, open)
        }
        DompMethod::BendersB1 | DompMethod::BendersB2 => {
            let (orientation, tag) = match args.method {
                DompMethod::BendersB1 => (Orientation::B1, "benders-b1"),
                _ => (Orientation::B2, "benders-b2"),
            };
            let limits = Limits {
                time_limit: args.time_limit_ms.map(Duration::from_millis),
                max_iterations: None,
                enum_cap: cap,
            };
            let out = solve_benders(&inst, orientation, args.epsilon, &limits)?;
            let status = match out.log.status {
                Status::Optimal => "optimal",
                Status::Limit => "limit",
            };
            println!("method: {tag}");
            println!("status: {status}");
            println!("value: {}", out.value);
            println!("open: {}", facility_list(&out.open));
            println!("bound: {}", out.log.bound);
            println!("gap: {:.6}", out.log.gap);
            println!("iterations: {}", out.log.iterations);
            println!("cuts: {}", out.log.cuts.len());
            (out.value, out.open)
        }
    };

    if args.verify {
        let (expected, _) = domp_enumerate(&inst, cap)?;
        // A positive tolerance lets the loop stop within epsilon of optimal.
        let tolerance = match args.method {
            DompMethod::Enum => Money::ZERO,
            _ => args.epsilon,
        };
        if (value - expected).abs() > tolerance {
            return Err(Failure::new(
                4,
                anyhow::anyhow!(
                    "value {value} at {} differs from enumeration optimum {expected}",
                    facility_list(&open)
                ),
            ));
        }
        println!("verify: matches enumeration optimum {expected}");
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> CmdResult {
    let desk = Grid::desk();
    let grid = Grid {
        ns: args.n.unwrap_or(desk.ns),
        p_rules: args.p_rules.unwrap_or(desk.p_rules),
        families: args.family.unwrap_or(desk.families),
        seeds: args.seed.unwrap_or(desk.seeds),
    };
    let methods = args.method.unwrap_or_else(|| Method::ALL.to_vec());
    let config = RunConfig {
        epsilon: args.epsilon,
        limits: Limits {
            time_limit: args.time_limit_ms.map(Duration::from_millis),
            max_iterations: None,
            enum_cap: enum_cap()?,
        },
        record_timing: !args.no_timing,
    };
    let rows = run_suite(&grid, &methods, &config);
    match &args.out {
        Some(path) => {
            let file = fs::File::create(path)?;
            write_csv(&rows, io::BufWriter::new(file))?;
        }
        None => write_csv(&rows, io::stdout().lock())?,
    }
    Ok(())
}

fn cmd_gen(args: GenArgs) -> CmdResult {
    let p = args.p.unwrap_or(PRule::Quarter.p(args.n));
    let inst = generate_instance(args.n, p, args.seed, args.family)?;
    let file = InstanceFile::from_instance(
        &inst,
        Some(InstanceMeta {
            seed: args.seed,
            family: args.family.tag().to_string(),
        }),
    );
    let json = serde_json::to_string(&file).map_err(|e| Failure::new(1, e))?;
    match &args.out {
        Some(path) => fs::write(path, json + "\n")?,
        None => {
            let mut out = io::stdout().lock();
            writeln!(out, "{json}")?;
        }
    }
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> CmdResult {
    let config = VerifyConfig {
        max_n: args.max_n,
        max_g: args.max_g,
        cases: args.cases,
        seed: args.seed,
    };
    let suites = match args.suite {
        Some(s) => vec![s],
        None => Suite::ALL.to_vec(),
    };
    let mut failed = 0;
    println!("{:<12} {:>7}  result", "suite", "cases");
    for suite in suites {
        let report = verify::run_suite(suite, &config);
        let verdict = if report.passed() { "pass" } else { "FAIL" };
        println!("{:<12} {:>7}  {verdict}", suite.tag(), report.cases);
        for f in report.failures.iter().take(3) {
            println!("    {f}");
        }
        if !report.passed() {
            failed += 1;
        }
    }
    if failed > 0 {
        return Err(Failure::new(4, anyhow::anyhow!("{failed} suite(s) failed")));
    }
    Ok(())
}
