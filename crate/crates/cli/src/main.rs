use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hiersmooth::bilayer::solve_bilayer;
use hiersmooth::instgen::{figure1_instance, gen_ascending_path, gen_random_bilayer, gen_random_tree};
use hiersmooth::l1_tree::{solve_l1_abstract, solve_l1_dfs, PushStats, SolveReport};
use hiersmooth::linf::{default_tolerance, solve_linf};
use hiersmooth::oracle::solve_lp_exact;
use hiersmooth::{format_solution, is_feasible, objective, parse_instance, Assignment, Instance, Norm, Rational};

/// Instances above this size are refused by the exact oracle.
const ORACLE_NODE_LIMIT: usize = 400;

#[derive(Parser)]
#[command(name = "hiersmooth", version, about = "Sum-constrained hierarchical smoothing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance and print the assignment.
    Solve(SolveArgs),
    /// Solve an instance with the exact LP.
    Oracle(SolveArgs),
    /// Compare a solver against the exact LP.
    Verify(SolveArgs),
    /// Write a generated instance.
    Gen(GenArgs),
    /// Time the tree solver over a size ladder and print CSV.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NormArg {
    L1,
    Linf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algorithm {
    Dfs,
    Abstract,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, value_enum, default_value = "l1")]
    norm: NormArg,
    #[arg(long, value_enum, default_value = "dfs")]
    algorithm: Algorithm,
    /// Use the node weights (ℓ1 only).
    #[arg(long)]
    weighted: bool,
    /// Bisection tolerance for ℓ∞, e.g. 1/1000000.
    #[arg(long)]
    tol: Option<Rational>,
    /// Approximation factor for the bilayer solver; selects it.
    #[arg(long)]
    eps: Option<Rational>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Instance file, `-` for stdin.
    #[arg(default_value = "-")]
    file: String,
    /// Adds 1 to the first solver value before comparing. Negative control
    /// for `verify`.
    #[arg(long, hide = true)]
    inject_fault: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    Figure1,
    Tree,
    Path,
    Bilayer,
}

#[derive(Args)]
struct GenArgs {
    #[arg(value_enum)]
    family: Family,
    /// Node count; for bilayer the child-side count.
    #[arg(long, default_value_t = 12)]
    nodes: usize,
    /// Parent-side node count for bilayer.
    #[arg(long, default_value_t = 4)]
    parents: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    max_a: u64,
    /// Attach weights in `[1, max_w]` (tree only).
    #[arg(long)]
    weighted: bool,
    #[arg(long, default_value_t = 4)]
    max_w: u64,
    /// Edge probability in percent (bilayer only).
    #[arg(long, default_value_t = 50)]
    edge_prob: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BenchFamily {
    Random,
    Path,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "1000,2000,4000,8000")]
    sizes: Vec<usize>,
    #[arg(long, value_enum, default_value = "random")]
    family: BenchFamily,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Solver and oracle disagree.
#[derive(Debug)]
struct Mismatch(String);

impl std::fmt::Display for Mismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Mismatch {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Solve(args) => cmd_solve(&args),
        Command::Oracle(args) => cmd_oracle(&args),
        Command::Verify(args) => cmd_verify(&args),
        Command::Gen(args) => cmd_gen(&args),
        Command::Bench(args) => cmd_bench(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Mismatch>().is_some() {
        return 3;
    }
    match err.downcast_ref::<hiersmooth::Error>() {
        Some(hiersmooth::Error::Shape { .. }) => 2,
        _ => 1,
    }
}

fn read_instance(file: &str) -> anyhow::Result<Instance> {
    let text = if file == "-" {
        let mut text = String::new();
        io::stdin().read_to_string(&mut text).context("reading stdin")?;
        text
    } else {
        fs::read_to_string(file).with_context(|| format!("reading {file}"))?
    };
    Ok(parse_instance(&text)?)
}

fn write_output(out: Option<&PathBuf>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => io::stdout().write_all(text.as_bytes()).context("writing stdout"),
    }
}

fn norm_of(args: &SolveArgs) -> Norm {
    match args.norm {
        NormArg::L1 => Norm::L1,
        NormArg::Linf => Norm::Linf,
    }
}

fn check_flags(args: &SolveArgs) -> anyhow::Result<()> {
    if args.weighted && args.norm == NormArg::Linf {
        bail!("--weighted requires --norm=l1");
    }
    if args.eps.is_some() && args.norm == NormArg::Linf {
        bail!("--eps selects the bilayer ℓ1 solver and requires --norm=l1");
    }
    if args.eps.is_some() && args.weighted {
        bail!("the bilayer solver is unweighted");
    }
    if args.tol.is_some() && args.norm == NormArg::L1 {
        bail!("--tol applies to --norm=linf only");
    }
    if args.algorithm == Algorithm::Abstract && (args.weighted || args.norm == NormArg::Linf || args.eps.is_some()) {
        bail!("--algorithm=abstract is the unweighted ℓ1 tree solver");
    }
    Ok(())
}

struct Run {
    report: SolveReport,
    tol: Option<Rational>,
}

fn run_solver(args: &SolveArgs, inst: &Instance) -> anyhow::Result<Run> {
    let started = Instant::now();
    let mut tol = None;
    let mut report = match (args.norm, &args.eps) {
        (NormArg::L1, Some(eps)) => solve_bilayer(inst, eps)?,
        (NormArg::L1, None) => match args.algorithm {
            Algorithm::Dfs => solve_l1_dfs(inst, args.weighted)?,
            Algorithm::Abstract => solve_l1_abstract(inst)?,
        },
        (NormArg::Linf, _) => {
            let t = args.tol.clone().unwrap_or_else(|| default_tolerance(inst));
            let t = if t.is_positive() { t } else { Rational::pow2_neg(40) };
            let sol = solve_linf(inst, &t)?;
            tol = Some(t);
            SolveReport {
                objective_value: objective(inst, sol.x.as_slice(), Norm::Linf, false)?,
                x: sol.x,
                stats: PushStats::default(),
            }
        }
    };
    if args.inject_fault {
        let mut x = report.x.into_vec();
        if let Some(first) = x.first_mut() {
            *first = &*first + &Rational::one();
        }
        report.objective_value = objective(inst, &x, norm_of(args), args.weighted)?;
        report.x = Assignment::new(x);
    }
    eprintln!(
        "pushes={} visits={} seconds={:.6}",
        report.stats.pushes,
        report.stats.dfs_visits,
        started.elapsed().as_secs_f64()
    );
    Ok(Run { report, tol })
}

fn cmd_solve(args: &SolveArgs) -> anyhow::Result<()> {
    check_flags(args)?;
    let inst = read_instance(&args.file)?;
    let run = run_solver(args, &inst)?;
    write_output(
        args.out.as_ref(),
        &format_solution(run.report.x.as_slice(), &run.report.objective_value),
    )
}

fn oracle_guard(inst: &Instance) -> anyhow::Result<()> {
    if inst.len() > ORACLE_NODE_LIMIT {
        bail!(
            "instance has {} nodes, the exact oracle accepts at most {ORACLE_NODE_LIMIT}",
            inst.len()
        );
    }
    Ok(())
}

fn cmd_oracle(args: &SolveArgs) -> anyhow::Result<()> {
    if args.weighted && args.norm == NormArg::Linf {
        bail!("--weighted requires --norm=l1");
    }
    let inst = read_instance(&args.file)?;
    oracle_guard(&inst)?;
    let sol = solve_lp_exact(&inst, norm_of(args), args.weighted)?;
    write_output(args.out.as_ref(), &format_solution(sol.x.as_slice(), &sol.objective))
}

fn cmd_verify(args: &SolveArgs) -> anyhow::Result<()> {
    check_flags(args)?;
    let inst = read_instance(&args.file)?;
    oracle_guard(&inst)?;
    let run = run_solver(args, &inst)?;
    let exact = solve_lp_exact(&inst, norm_of(args), args.weighted)?;
    let solver = &run.report.objective_value;
    let oracle = &exact.objective;
    write_output(args.out.as_ref(), &format!("solver {solver}\noracle {oracle}\n"))?;

    if !is_feasible(&inst, run.report.x.as_slice())? {
        return Err(Mismatch("solver assignment is infeasible".into()).into());
    }
    let agrees = match (&run.tol, &args.eps) {
        (Some(tol), _) => &solver.abs_diff(oracle) <= tol,
        (None, Some(eps)) => solver <= &((Rational::one() + eps) * oracle),
        (None, None) => solver == oracle,
    };
    if !agrees {
        return Err(Mismatch(format!("solver objective {solver} vs oracle {oracle}")).into());
    }
    Ok(())
}

fn cmd_gen(args: &GenArgs) -> anyhow::Result<()> {
    let inst = match args.family {
        Family::Figure1 => figure1_instance(),
        Family::Tree => gen_random_tree(args.nodes, args.max_a, args.seed, args.weighted, args.max_w)?,
        Family::Path => gen_ascending_path(args.nodes, args.seed)?,
        Family::Bilayer => gen_random_bilayer(args.nodes, args.parents, args.edge_prob, args.max_a, args.seed)?,
    };
    write_output(args.out.as_ref(), &inst.to_text())
}

fn cmd_bench(args: &BenchArgs) -> anyhow::Result<()> {
    if args.sizes.is_empty() || args.sizes.contains(&0) {
        bail!("--sizes needs positive node counts");
    }
    let mut csv = String::from("n,seconds,pushes,visits\n");
    for &n in &args.sizes {
        let inst = match args.family {
            BenchFamily::Random => gen_random_tree(n, 10 * n as u64, args.seed, false, 1)?,
            BenchFamily::Path => gen_ascending_path(n, args.seed)?,
        };
        let started = Instant::now();
        let report = solve_l1_dfs(&inst, false)?;
        let seconds = started.elapsed().as_secs_f64();
        csv.push_str(&format!(
            "{n},{seconds:.6},{},{}\n",
            report.stats.pushes, report.stats.dfs_visits
        ));
    }
    write_output(args.out.as_ref(), &csv)
}
