//! `qmap`: solve, verify, emit-smt, certify, bench.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error,
//! 3 solver timeout.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qmap_core::arch::{build_grid, build_line, build_sycamore_like, parse_arch, CouplingGraph, GraphKind};
use qmap_core::bench::{self, BenchInstance, Family, Mode};
use qmap_core::encode::{build, emit_smtlib, EncodingOptions, Phase};
use qmap_core::error::Error;
use qmap_core::qprog::{parse_program, Program};
use qmap_core::solution::{fidelity, verify, MappingSolution};
use qmap_core::solve::{
    certify_depth, initial_mapping_candidates, maximize_fidelity, minimize_depth, minimize_swaps,
    portfolio_solve, Backend, DepthCertificate, Objective, SwapSearch,
};

/// Environment variable holding the default external solver command.
const SOLVER_ENV: &str = "QMAP_SOLVER";

#[derive(Parser)]
#[command(name = "qmap", version, about = "Optimal qubit mapping with SWAP absorption")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Map and schedule a program onto an architecture.
    Solve(SolveArgs),
    /// Re-check a solution file independently of the solver.
    Verify {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Solution JSON produced by `solve`.
        #[arg(long)]
        solution: PathBuf,
    },
    /// Print the SMT-LIB2 script for a fixed horizon.
    EmitSmt {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long)]
        horizon: usize,
        #[arg(long, default_value = "on")]
        absorb: Toggle,
        #[arg(long)]
        swap_budget: Option<usize>,
        /// Write to a file instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve with reductions, then certify depth optimality against the
    /// exact instance.
    Certify(SolveArgs),
    /// Generate benchmark instances, solve them in several modes, and write
    /// a report.
    Bench(BenchArgs),
}

#[derive(Args)]
struct InstanceArgs {
    /// Program JSON file.
    #[arg(long)]
    program: PathBuf,
    /// Architecture: line:N, grid:RxC, sycamore:RxC, or file:PATH.
    #[arg(long)]
    arch: String,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, value_enum, default_value_t = Obj::Depth)]
    objective: Obj,
    #[arg(long, default_value = "on")]
    absorb: Toggle,
    #[arg(long, value_enum, default_value_t = Alternating::Off)]
    alternating: Alternating,
    /// JSON array fixing the initial mapping, e.g. "[0,2,1]".
    #[arg(long)]
    initial_mapping: Option<String>,
    /// Try every documented initial-mapping candidate in parallel.
    #[arg(long)]
    portfolio: bool,
    #[arg(long, default_value_t = 0)]
    horizon_slack: usize,
    #[arg(long, value_enum, default_value_t = SwapSearchArg::Linear)]
    swap_search: SwapSearchArg,
    /// Cap for the deepening loop (default 2 * qubit count).
    #[arg(long)]
    horizon_cap: Option<usize>,
    #[arg(long, value_enum, default_value_t = BackendArg::Internal)]
    backend: BackendArg,
    /// External solver command line (default from QMAP_SOLVER).
    #[arg(long)]
    solver_cmd: Option<String>,
    /// Per-check timeout in seconds for the external backend.
    #[arg(long)]
    timeout: Option<u64>,
    #[arg(long, default_value_t = 50.0)]
    t0: f64,
    #[arg(long, default_value_t = 0.99)]
    fu: f64,
    /// Worker count for the portfolio.
    #[arg(long, default_value_t = 4)]
    jobs: usize,
    /// Downgrade inapplicable reductions to a warning instead of an error.
    #[arg(long)]
    reduce_best_effort: bool,
    /// Where to write the solution JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write metrics (and certificate, for `certify`) JSON.
    #[arg(long)]
    metrics_out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Architecture spec; defaults to line:N.
    #[arg(long)]
    arch: Option<String>,
    /// Comma-separated subset of exact,alternating,fixed-initial,absorb-off.
    #[arg(long, default_value = "exact")]
    modes: String,
    #[arg(long, value_enum, default_value_t = Obj::Swap)]
    objective: Obj,
    /// Project total fidelity for p = 1..=P iterations.
    #[arg(long, default_value_t = 3)]
    iterations: u32,
    #[arg(long, value_enum, default_value_t = BackendArg::Internal)]
    backend: BackendArg,
    #[arg(long)]
    solver_cmd: Option<String>,
    #[arg(long)]
    timeout: Option<u64>,
    #[arg(long, default_value_t = 0)]
    horizon_slack: usize,
    /// Report path prefix; writes PREFIX.csv and PREFIX.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Obj {
    Depth,
    Swap,
    Fidelity,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Alternating {
    Off,
    Auto,
    Phase0,
    Phase1,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SwapSearchArg {
    Linear,
    Binary,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendArg {
    Internal,
    External,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Qaoa3reg,
    AllToAll,
    QvLike,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Toggle {
    On,
    Off,
}

impl std::str::FromStr for Toggle {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "on" | "true" | "1" => Ok(Toggle::On),
            "off" | "false" | "0" => Ok(Toggle::Off),
            other => Err(format!("expected on/off, got '{other}'")),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::from(0),
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Invalid(_) => ExitCode::from(1),
                Error::Timeout { .. } => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Cmd::Solve(args) => cmd_solve(args, false),
        Cmd::Certify(args) => cmd_solve(args, true),
        Cmd::Verify { instance, solution } => cmd_verify(instance, solution),
        Cmd::EmitSmt { instance, horizon, absorb, swap_budget, out } => {
            cmd_emit_smt(instance, horizon, absorb, swap_budget, out)
        }
        Cmd::Bench(args) => cmd_bench(args),
    }
}

fn load_instance(a: &InstanceArgs) -> Result<(Program, CouplingGraph), Error> {
    let text = std::fs::read_to_string(&a.program)?;
    let program = parse_program(&text)?;
    let graph = resolve_arch(&a.arch)?;
    Ok((program, graph))
}

fn resolve_arch(spec: &str) -> Result<CouplingGraph, Error> {
    let (kind, rest) = spec
        .split_once(':')
        .ok_or_else(|| Error::MalformedArch(format!("bad arch spec '{spec}'")))?;
    let dims = |s: &str| -> Result<(usize, usize), Error> {
        let (r, c) = s
            .split_once('x')
            .ok_or_else(|| Error::MalformedArch(format!("expected RxC, got '{s}'")))?;
        Ok((
            r.parse().map_err(|_| Error::MalformedArch(format!("bad rows '{r}'")))?,
            c.parse().map_err(|_| Error::MalformedArch(format!("bad cols '{c}'")))?,
        ))
    };
    match kind {
        "line" => build_line(
            rest.parse().map_err(|_| Error::MalformedArch(format!("bad length '{rest}'")))?,
        ),
        "grid" => {
            let (r, c) = dims(rest)?;
            build_grid(r, c)
        }
        "sycamore" => {
            let (r, c) = dims(rest)?;
            build_sycamore_like(r, c)
        }
        "file" => parse_arch(&std::fs::read_to_string(rest)?),
        other => Err(Error::MalformedArch(format!("unknown arch kind '{other}'"))),
    }
}

fn resolve_backend(
    backend: BackendArg,
    solver_cmd: &Option<String>,
    timeout: Option<u64>,
) -> Result<Backend, Error> {
    match backend {
        BackendArg::Internal => Ok(Backend::Internal),
        BackendArg::External => {
            let command = solver_cmd
                .clone()
                .or_else(|| std::env::var(SOLVER_ENV).ok())
                .ok_or_else(|| {
                    Error::InvalidOptions(format!(
                        "external backend needs --solver-cmd or ${SOLVER_ENV}"
                    ))
                })?;
            Ok(Backend::External { command, timeout: timeout.map(Duration::from_secs) })
        }
    }
}

fn cmd_solve(args: SolveArgs, certify: bool) -> Result<(), Error> {
    let (program, graph) = load_instance(&args.instance)?;
    let backend = resolve_backend(args.backend, &args.solver_cmd, args.timeout)?;

    let mut opts = EncodingOptions::new(1);
    opts.absorption_enabled = args.absorb == Toggle::On;
    if let Some(text) = &args.initial_mapping {
        let mapping: Vec<usize> = serde_json::from_str(text)?;
        opts.initial_mapping = Some(mapping);
    }

    let forced_phase = match args.alternating {
        Alternating::Phase0 => Some(Phase::Zero),
        Alternating::Phase1 => Some(Phase::One),
        _ => None,
    };
    let is_line = graph.kind == GraphKind::Line;
    if forced_phase.is_some() && !is_line {
        if args.reduce_best_effort {
            eprintln!("warning: alternating matchings need a line architecture; reduction skipped");
        } else {
            return Err(Error::NotALine(format!("{:?}", graph.kind)));
        }
    }
    if forced_phase.is_some() && is_line {
        opts.alternating_matchings = forced_phase;
    }
    let auto_both = args.alternating == Alternating::Auto && is_line;

    let objective = match args.objective {
        Obj::Depth => Objective::Depth,
        Obj::Swap => Objective::Swaps { horizon_slack: args.horizon_slack },
        Obj::Fidelity => Objective::Fidelity { t0: args.t0, f_u: args.fu },
    };
    let strategy = match args.swap_search {
        SwapSearchArg::Linear => SwapSearch::Linear,
        SwapSearchArg::Binary => SwapSearch::Binary,
    };

    let solve_with = |opts: &EncodingOptions| -> Result<MappingSolution, Error> {
        if args.portfolio {
            let (candidates, warning) = initial_mapping_candidates(&program, &graph);
            if let Some(w) = warning {
                eprintln!("warning: {w}");
            }
            return portfolio_solve(&program, &graph, opts, &backend, objective, &candidates, args.jobs);
        }
        match objective {
            Objective::Depth => minimize_depth(&program, &graph, opts, &backend, args.horizon_cap),
            Objective::Swaps { horizon_slack } => {
                minimize_swaps(&program, &graph, opts, &backend, horizon_slack, strategy)
            }
            Objective::Fidelity { t0, f_u } => {
                maximize_fidelity(&program, &graph, opts, &backend, t0, f_u, args.horizon_cap)
                    .map(|(s, _)| s)
            }
        }
    };

    let solution = if auto_both {
        let deps = qmap_core::qprog::dependencies(&program);
        let depth_floor = qmap_core::qprog::depth_lower_bound(&deps, &program);
        let mut best: Option<MappingSolution> = None;
        for phase in [Phase::Zero, Phase::One] {
            let mut o = opts.clone();
            o.alternating_matchings = Some(phase);
            match solve_with(&o) {
                Ok(sol) => {
                    if objective == Objective::Depth && sol.horizon == depth_floor {
                        best = Some(sol);
                        break;
                    }
                    let better = best.as_ref().map_or(true, |cur| match objective {
                        Objective::Swaps { .. } => {
                            (sol.swap_count(), sol.horizon) < (cur.swap_count(), cur.horizon)
                        }
                        _ => (sol.horizon, sol.swap_count()) < (cur.horizon, cur.swap_count()),
                    });
                    if better {
                        best = Some(sol);
                    }
                }
                Err(Error::HorizonExhausted(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        best.ok_or(Error::HorizonExhausted(0))?
    } else {
        solve_with(&opts)?
    };

    let certificate: Option<DepthCertificate> = if certify {
        let (cert_sol, cert) = certify_depth(&program, &graph, &opts, &backend)?;
        // The certificate workflow may return a better exact solution.
        if cert_sol.horizon < solution.horizon {
            report(&program, &graph, &cert_sol, &args, cert.as_ref())?;
            return Ok(());
        }
        cert
    } else {
        None
    };

    report(&program, &graph, &solution, &args, certificate.as_ref())
}

fn report(
    program: &Program,
    graph: &CouplingGraph,
    solution: &MappingSolution,
    args: &SolveArgs,
    certificate: Option<&DepthCertificate>,
) -> Result<(), Error> {
    let metrics = match verify(program, graph, solution) {
        Ok(m) => m,
        Err(violations) => {
            for v in &violations {
                eprintln!("violation [{}]: {}", v.family, v.detail);
            }
            return Err(Error::Invalid(violations.len()));
        }
    };
    let f = fidelity(
        program.qubit_count,
        metrics.depth,
        metrics.gate_count,
        metrics.swap_count,
        args.t0,
        args.fu,
    )?;
    println!(
        "depth={} swaps={} absorbed={}",
        metrics.depth, metrics.swap_count, metrics.absorbed_count
    );
    println!("fidelity={f:.6}");
    if let Some(cert) = certificate {
        println!(
            "certified: no solution with depth < {} (exact instance unsat at horizon {})",
            cert.certified_floor, cert.horizon_checked
        );
    }
    if let Some(path) = &args.out {
        std::fs::write(path, solution.to_json())?;
    }
    if let Some(path) = &args.metrics_out {
        let mut doc = serde_json::json!({
            "depth": metrics.depth,
            "swaps": metrics.swap_count,
            "absorbed": metrics.absorbed_count,
            "gates": metrics.gate_count,
            "fidelity": f,
        });
        if let Some(cert) = certificate {
            doc["certificate"] = serde_json::json!({
                "certified_floor": cert.certified_floor,
                "horizon_checked": cert.horizon_checked,
            });
        }
        std::fs::write(path, serde_json::to_string_pretty(&doc)?)?;
    }
    Ok(())
}

fn cmd_verify(instance: InstanceArgs, solution_path: PathBuf) -> Result<(), Error> {
    let (program, graph) = load_instance(&instance)?;
    let solution = MappingSolution::from_json(&std::fs::read_to_string(&solution_path)?)?;
    match verify(&program, &graph, &solution) {
        Ok(metrics) => {
            println!(
                "ok: depth={} swaps={} absorbed={}",
                metrics.depth, metrics.swap_count, metrics.absorbed_count
            );
            Ok(())
        }
        Err(violations) => {
            for v in &violations {
                eprintln!("violation [{}]: {}", v.family, v.detail);
            }
            Err(Error::Invalid(violations.len()))
        }
    }
}

fn cmd_emit_smt(
    instance: InstanceArgs,
    horizon: usize,
    absorb: Toggle,
    swap_budget: Option<usize>,
    out: Option<PathBuf>,
) -> Result<(), Error> {
    let (program, graph) = load_instance(&instance)?;
    let mut opts = EncodingOptions::new(horizon);
    opts.absorption_enabled = absorb == Toggle::On;
    opts.swap_budget = swap_budget;
    let cs = build(&program, &graph, &opts)?;
    let text = emit_smtlib(&cs);
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), Error> {
    let backend = resolve_backend(args.backend, &args.solver_cmd, args.timeout)?;
    let family = match args.family {
        FamilyArg::Qaoa3reg => Family::Qaoa3Reg,
        FamilyArg::AllToAll => Family::AllToAll,
        FamilyArg::QvLike => Family::QvLike,
    };
    let graph = match &args.arch {
        Some(spec) => resolve_arch(spec)?,
        None => build_line(args.n)?,
    };
    let instance: BenchInstance = bench::make_instance(family, args.n, args.seed, graph)?;
    let modes = args
        .modes
        .split(',')
        .map(|m| match m.trim() {
            "exact" => Ok(Mode::Exact),
            "alternating" => Ok(Mode::Alternating),
            "fixed-initial" => Ok(Mode::FixedInitial),
            "absorb-off" => Ok(Mode::AbsorbOff),
            other => Err(Error::InvalidOptions(format!("unknown mode '{other}'"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let objective = match args.objective {
        Obj::Depth => Objective::Depth,
        Obj::Swap => Objective::Swaps { horizon_slack: args.horizon_slack },
        Obj::Fidelity => Objective::Fidelity { t0: bench::DEFAULT_T0, f_u: bench::DEFAULT_FU },
    };
    let report = bench::run_suite(&[instance], &modes, objective, &backend, args.iterations)?;
    print!("{}", report.to_csv());
    if let Some(prefix) = &args.out {
        let mut csv = prefix.clone();
        csv.set_extension("csv");
        std::fs::write(&csv, report.to_csv())?;
        let mut json = prefix.clone();
        json.set_extension("json");
        std::fs::write(&json, report.to_json())?;
    }
    Ok(())
}
