//! `backhaul`: generate scenarios, plan, re-tune, evaluate and validate.
//!
//! Exit codes: 0 success, 1 validation failure, 2 usage or I/O error,
//! 3 infeasible, 4 not proven.

mod table;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use backhaul_core::formulation::{build_milp, C5Direction, FormulationOptions};
use backhaul_core::io::{self, GeneratorParams, PlanDocument};
use backhaul_core::model::{capacity_matrix, sinr, validate_scenario, Plan, Scenario};
use backhaul_core::planner::{initial_point, plan_detailed, write_trace_csv, PlanOptions, PlanStatus};
use backhaul_core::retuner::{retune, RetuneOptions};
use backhaul_core::validate::{check_feasibility_with, FeasibilityReport};
use backhaul_core::{approx, Error};
use clap::{Args, Parser, Subcommand};

use table::sig6;

const EXIT_VALIDATION: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_NOT_PROVEN: u8 = 4;

#[derive(Parser)]
#[command(
    name = "backhaul",
    version,
    about = "Minimum-cost full-duplex wireless backhaul planner"
)]
struct Cli {
    /// Which links the DL delay row (C5) sums over: the node's outgoing
    /// links (`as-printed`) or its incoming links (`incoming`).
    #[arg(long, global = true, default_value = "as-printed", value_parser = parse_direction)]
    c5_dl_direction: C5Direction,
    #[command(subcommand)]
    command: Command,
}

fn parse_direction(s: &str) -> Result<C5Direction, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic scenario.
    Gen(GenArgs),
    /// Plan a minimum-cost network (links, subchannels, powers, flows).
    Plan(PlanArgs),
    /// Re-tune the powers of an existing plan on a changed scenario.
    Retune(RetuneArgs),
    /// Print per-link SINR, capacity and flow of a plan, and its cost.
    Eval(EvalArgs),
    /// Check a scenario, or a plan against a scenario.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct GenArgs {
    /// JSON file with generator parameters; flags override its fields.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    nonroot: Option<usize>,
    #[arg(long)]
    root: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    subchannels: Option<usize>,
    #[arg(long)]
    access_subchannels: Option<usize>,
    /// Side of the square deployment area in metres.
    #[arg(long)]
    area: Option<f64>,
    /// Longest candidate link in metres.
    #[arg(long)]
    max_link_distance: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PlanArgs {
    scenario: PathBuf,
    #[arg(long, default_value_t = 16)]
    segments: usize,
    #[arg(long, default_value_t = 20)]
    max_iters: usize,
    /// Relative cost change below which the outer loop stops.
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    /// Branch-and-bound node budget per MILP.
    #[arg(long)]
    max_nodes: Option<usize>,
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the first-iteration MILP in CPLEX LP format.
    #[arg(long)]
    dump_lp: Option<PathBuf>,
}

#[derive(Args)]
struct RetuneArgs {
    scenario: PathBuf,
    plan: PathBuf,
    #[arg(long, default_value_t = 32)]
    segments: usize,
    #[arg(long, default_value_t = 50)]
    max_iters: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    scenario: PathBuf,
    plan: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    scenario: PathBuf,
    plan: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Infeasible(_) => EXIT_INFEASIBLE,
            Error::NotProven(_) | Error::Solver(_) => EXIT_NOT_PROVEN,
            Error::NonIntegral { .. } => EXIT_VALIDATION,
            _ => EXIT_USAGE,
        };
        let message = match &e {
            Error::InvalidScenario(v) => {
                let lines: Vec<String> = v.iter().map(|v| format!("  {v}")).collect();
                format!("invalid scenario:\n{}", lines.join("\n"))
            }
            _ => e.to_string(),
        };
        Failure::new(code, message)
    }
}

type CliResult = Result<u8, Failure>;

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::new(EXIT_USAGE, format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, bytes).map_err(|e| Failure::new(EXIT_USAGE, format!("{}: {e}", path.display())))
}

fn load_scenario(path: &Path) -> Result<Scenario, Failure> {
    io::parse_scenario(&read(path)?).map_err(|e| {
        let f = Failure::from(e);
        Failure::new(f.code, format!("{}: {}", path.display(), f.message))
    })
}

fn load_plan(path: &Path, s: &Scenario) -> Result<Plan, Failure> {
    let plan =
        io::parse_plan(&read(path)?).map_err(|e| Failure::new(EXIT_USAGE, format!("{}: {e}", path.display())))?;
    plan.check_against(s)
        .map_err(|e| Failure::new(EXIT_USAGE, format!("plan does not match the scenario: {e}")))?;
    Ok(plan)
}

fn write_trace(path: &Path, plan: &Plan) -> Result<(), Failure> {
    let mut bytes = Vec::new();
    write_trace_csv(&plan.trace, &mut bytes)?;
    write(path, &bytes)
}

fn plan_document(plan: &Plan, report: &FeasibilityReport, dir: C5Direction) -> Vec<u8> {
    let mut doc = PlanDocument::from_plan(plan);
    doc.c5_dl_direction = Some(dir.to_string());
    doc.validation = Some(serde_json::to_value(report).expect("reports serialize"));
    doc.to_bytes()
}

fn print_cost(plan: &Plan) {
    let c = &plan.cost;
    let rows = vec![
        vec![
            "power".to_string(),
            sig6(c.power),
            format!("{} W total", sig6(plan.total_power())),
        ],
        vec![
            "links".into(),
            sig6(c.link),
            format!("{} active", plan.active_links.len()),
        ],
        vec![
            "spectrum".into(),
            sig6(c.spectrum),
            format!("{} active", plan.active_subchannels.len()),
        ],
        vec!["total".into(), sig6(c.total), String::new()],
    ];
    print!("{}", table::render(&["term", "cost", ""], &rows));
}

fn cmd_gen(a: GenArgs) -> CliResult {
    let mut params = match &a.params {
        Some(path) => serde_json::from_slice::<GeneratorParams>(&read(path)?)
            .map_err(|e| Failure::new(EXIT_USAGE, format!("{}: {e}", path.display())))?,
        None => GeneratorParams::default(),
    };
    if let Some(v) = a.nonroot {
        params.num_nonroot = v;
    }
    if let Some(v) = a.root {
        params.num_root = v;
    }
    if let Some(v) = a.seed {
        params.seed = v;
    }
    if let Some(v) = a.subchannels {
        params.num_subchannels = v;
    }
    if let Some(v) = a.access_subchannels {
        params.num_access_subchannels = v;
    }
    if let Some(v) = a.area {
        params.area_side_m = v;
    }
    if let Some(v) = a.max_link_distance {
        params.max_link_distance_m = v;
    }
    let s = io::generate_synthetic(&params)?;
    if s.links.is_empty() {
        eprintln!("warning: scenario has zero candidate links");
    }
    write(&a.out, &io::write_scenario(&s))?;
    println!(
        "{} nodes ({} root), {} links, {} subchannels ({} access)",
        s.nodes.len(),
        s.roots().count(),
        s.links.len(),
        s.num_subchannels(),
        s.spectrum.access_subchannels.len()
    );
    Ok(0)
}

fn cmd_plan(a: PlanArgs, dir: C5Direction) -> CliResult {
    let s = load_scenario(&a.scenario)?;
    let mut opts = PlanOptions {
        segments: a.segments,
        max_outer_iters: a.max_iters,
        rel_cost_tol: a.tol,
        formulation: FormulationOptions {
            c5_dl_direction: dir,
            ..Default::default()
        },
        ..Default::default()
    };
    if let Some(n) = a.max_nodes {
        opts.solver.max_nodes = n;
    }
    if let Some(path) = &a.dump_lp {
        let ap = approx::build(&s, &initial_point(&s), opts.segments)?;
        let (lp, _) = build_milp(&s, &ap, &opts.formulation)?;
        write(path, lp.to_lp_format().as_bytes())?;
    }
    let out = plan_detailed(&s, &opts)?;
    let report = check_feasibility_with(&s, &out.plan, opts.feasibility_tol, dir)?;
    if let Some(path) = &a.trace {
        write_trace(path, &out.plan)?;
    }
    if let Some(path) = &a.out {
        write(path, &plan_document(&out.plan, &report, dir))?;
    }
    print_cost(&out.plan);
    let n = out.trace.len();
    println!(
        "cost {}, {n} iteration{}, status {}",
        sig6(out.plan.cost.total),
        if n == 1 { "" } else { "s" },
        match out.status {
            PlanStatus::Optimal => "optimal",
            PlanStatus::NotProven => "not proven",
        }
    );
    if !report.feasible {
        eprintln!("{report}");
        return Err(Failure::new(EXIT_VALIDATION, "planned network failed exact validation"));
    }
    Ok(match out.status {
        PlanStatus::Optimal => 0,
        PlanStatus::NotProven => EXIT_NOT_PROVEN,
    })
}

fn cmd_retune(a: RetuneArgs, dir: C5Direction) -> CliResult {
    let s = load_scenario(&a.scenario)?;
    let current = load_plan(&a.plan, &s)?;
    let opts = RetuneOptions {
        segments: a.segments,
        max_outer_iters: a.max_iters,
        formulation: FormulationOptions {
            c5_dl_direction: dir,
            ..Default::default()
        },
        ..Default::default()
    };
    let (plan, trace) = retune(&s, &current, &opts)?;
    let report = check_feasibility_with(&s, &plan, opts.feasibility_tol, dir)?;
    if let Some(path) = &a.trace {
        write_trace(path, &plan)?;
    }
    if let Some(path) = &a.out {
        write(path, &plan_document(&plan, &report, dir))?;
    }
    print_cost(&plan);
    let (before, after) = (current.total_power(), plan.total_power());
    println!(
        "ΔΣX = {} W ({} -> {} W), {} iteration{}",
        sig6(after - before),
        sig6(before),
        sig6(after),
        trace.len(),
        if trace.len() == 1 { "" } else { "s" }
    );
    if !report.feasible {
        eprintln!("{report}");
        return Err(Failure::new(EXIT_VALIDATION, "re-tuned plan failed exact validation"));
    }
    Ok(0)
}

fn cmd_eval(a: EvalArgs) -> CliResult {
    let s = load_scenario(&a.scenario)?;
    let plan = load_plan(&a.plan, &s)?;
    let caps = capacity_matrix(&s, &plan.powers)?;
    let mut rows = Vec::new();
    for (l, link) in s.links.iter().enumerate() {
        for (f, &cap) in caps[l].iter().enumerate() {
            let x = plan.powers.get(l, f);
            if x == 0.0 && !plan.active_links.contains(&l) {
                continue;
            }
            rows.push(vec![
                l.to_string(),
                format!("{}->{}", link.from, link.to),
                f.to_string(),
                sig6(x),
                sig6(sinr(&s, &plan.powers, l, f)?),
                sig6(cap),
            ]);
        }
    }
    print!(
        "{}",
        table::render(&["link", "nodes", "subch", "power W", "SINR", "capacity bit/s"], &rows)
    );
    println!();
    let rows: Vec<Vec<String>> = s
        .links
        .iter()
        .enumerate()
        .filter(|(l, _)| plan.active_links.contains(l))
        .map(|(l, link)| {
            let total = link.wired_capacity + caps[l].iter().sum::<f64>();
            vec![
                l.to_string(),
                sig6(plan.flow_ul[l]),
                sig6(plan.flow_dl[l]),
                sig6(plan.flow_ul[l] + plan.flow_dl[l]),
                sig6(total),
            ]
        })
        .collect();
    print!(
        "{}",
        table::render(&["link", "flow UL", "flow DL", "flow total", "capacity"], &rows)
    );
    println!();
    let mut evaluated = plan.clone();
    evaluated.refresh(&s)?;
    print_cost(&evaluated);
    Ok(0)
}

fn cmd_validate(a: ValidateArgs, dir: C5Direction) -> CliResult {
    let s = load_scenario(&a.scenario)?;
    let violations = validate_scenario(&s);
    let Some(plan_path) = &a.plan else {
        if violations.is_empty() {
            println!(
                "scenario valid: {} nodes, {} links, {} subchannels",
                s.nodes.len(),
                s.links.len(),
                s.num_subchannels()
            );
            return Ok(0);
        }
        for v in &violations {
            println!("{v}");
        }
        return Ok(EXIT_VALIDATION);
    };
    let plan = load_plan(plan_path, &s)?;
    let report = check_feasibility_with(&s, &plan, a.tol, dir)?;
    println!("{report}");
    for c in report
        .families
        .iter()
        .filter(|c| c.rows > 0 && c.max_violation > report.tol)
    {
        println!(
            "{} violation: {} at {}",
            c.family,
            sig6(c.max_violation),
            c.worst_row.as_deref().unwrap_or("-")
        );
    }
    Ok(if report.feasible { 0 } else { EXIT_VALIDATION })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PLANNER_LOG", "warn")).init();
    let cli = Cli::parse();
    let dir = cli.c5_dl_direction;
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Plan(a) => cmd_plan(a, dir),
        Command::Retune(a) => cmd_retune(a, dir),
        Command::Eval(a) => cmd_eval(a),
        Command::Validate(a) => cmd_validate(a, dir),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
