mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::builder::RangedU64ValueParser;
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use evrp::exact::{self, ExactError, ExactSolver, FrontPoint, ParetoFront, SweepDirection};
use evrp::formats::{self, FormatError};
use evrp::instance::{self, LevelPowers, LoadError, Preset, Shape, VehicleParams};
use evrp::metaheuristics::{run_ga, run_pso, ConfigError, GAConfig, PSOConfig, RunOutcome};
use evrp::model::{self, RouteSolution, Weights};
use evrp::pareto::{front_compare, Point2};
use manifest::RunManifest;

const OUT_DIR_VAR: &str = "EVRP_OUT_DIR";

#[derive(Parser)]
#[command(name = "evrp", version, about = "Route and charging planner for one electric vehicle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded instance file.
    Generate(GenerateArgs),
    /// Solve an instance with an exact method, the grid oracle or a metaheuristic.
    Solve(SolveArgs),
    /// Compare two front CSV files point by point.
    Compare(CompareArgs),
    /// Evaluate one solution record against an instance.
    Evaluate(EvaluateArgs),
    /// Re-run the command recorded in a manifest.
    Replay { manifest: PathBuf },
}

fn positive() -> RangedU64ValueParser<usize> {
    RangedU64ValueParser::new().range(1..)
}

fn probability(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(p) if (0.0..=1.0).contains(&p) => Ok(p),
        _ => Err(format!("`{s}` is not a probability in [0, 1]")),
    }
}

#[derive(Args, Serialize)]
#[command(group(ArgGroup::new("shape").required(true).args(["preset", "levels"])))]
struct GenerateArgs {
    /// One of instance1..instance4.
    #[arg(long, value_parser = |s: &str| s.parse::<Preset>().map(|p| p.to_string()))]
    preset: Option<String>,
    #[arg(long, value_parser = positive(), requires_all = ["max_per_level", "p_edge"])]
    levels: Option<usize>,
    #[arg(long, value_parser = positive(), requires = "levels")]
    max_per_level: Option<usize>,
    #[arg(long, value_parser = probability, requires = "levels")]
    p_edge: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Speed v in km/h.
    #[arg(long, default_value_t = 50.0)]
    speed: f64,
    /// Battery capacity C in kWh.
    #[arg(long, default_value_t = 100.0)]
    capacity: f64,
    /// Mileage in km per kWh.
    #[arg(long, default_value_t = 6.0)]
    mileage: f64,
    /// Initial state of charge in [0, 1].
    #[arg(long, default_value_t = 1.0)]
    initial_soc: f64,
    #[arg(long, default_value_t = 7.0)]
    l1_kw: f64,
    #[arg(long, default_value_t = 22.0)]
    l2_kw: f64,
    #[arg(long, default_value_t = 50.0)]
    l3_kw: f64,
    /// Instance file to write.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
enum Method {
    ExactTime,
    ExactCost,
    EpsFront,
    Oracle,
    Ga,
    Pso,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::ExactTime => "exact-time",
            Method::ExactCost => "exact-cost",
            Method::EpsFront => "eps-front",
            Method::Oracle => "oracle",
            Method::Ga => "ga",
            Method::Pso => "pso",
        }
    }
}

#[derive(Args, Serialize)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum)]
    method: Method,
    /// Budget step for eps-front: `auto` or a positive number.
    #[arg(long, default_value = "auto")]
    delta: String,
    /// Sweep a time budget while minimizing cost.
    #[arg(long)]
    converse: bool,
    /// Grid steps per charge amount for the oracle.
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u32).range(1..))]
    grid: u32,
    #[arg(long, default_value_t = exact::DEFAULT_ORACLE_CAP)]
    oracle_cap: u128,
    #[arg(long, default_value_t = exact::DEFAULT_PATH_CAP, value_parser = positive())]
    path_cap: usize,
    #[arg(long, default_value_t = 1000, value_parser = positive())]
    pop: usize,
    #[arg(long, default_value_t = 1000)]
    epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.4, value_parser = probability)]
    pc: f64,
    #[arg(long, default_value_t = 0.4, value_parser = probability)]
    pm: f64,
    #[arg(long, default_value_t = 0.1, value_parser = probability)]
    w_start: f64,
    #[arg(long, default_value_t = 0.5, value_parser = probability)]
    w_end: f64,
    #[arg(long, default_value_t = 2.5)]
    c1: f64,
    #[arg(long, default_value_t = 2.5)]
    c2: f64,
    /// `normalized` (0.5, 0.5), `raw` (1, 1), or `TIME,COST`.
    #[arg(long, default_value = "normalized")]
    weights: String,
    /// Result CSV; metaheuristics also write `<stem>_history.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct CompareArgs {
    a: PathBuf,
    b: PathBuf,
    /// Per-point report CSV; counts go to `<stem>_summary.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct EvaluateArgs {
    #[arg(long)]
    instance: PathBuf,
    /// JSON record `{"path": [...], "charge": {"id": y}}`.
    #[arg(long)]
    solution: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Error carrying the process exit code.
struct Failure {
    code: u8,
    message: String,
}

mod code {
    pub const IO: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const VALIDATION: u8 = 3;
    pub const INFEASIBLE: u8 = 4;
    pub const RESOURCE: u8 = 5;
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        fail(code::IO, format!("i/o error: {e}"))
    }
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        let c = if matches!(e, LoadError::Io(_)) { code::IO } else { code::VALIDATION };
        fail(c, e.to_string())
    }
}

impl From<ExactError> for Failure {
    fn from(e: ExactError) -> Self {
        let c = match e {
            ExactError::Infeasible(_) => code::INFEASIBLE,
            ExactError::BadStep(_) => code::USAGE,
            ExactError::PathCap { .. } | ExactError::PathTooLong { .. } | ExactError::OracleCap { .. } => code::RESOURCE,
        };
        fail(c, e.to_string())
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        fail(code::USAGE, e.to_string())
    }
}

fn format_failure(path: &Path) -> impl Fn(FormatError) -> Failure + '_ {
    move |e| match e {
        FormatError::Io(io) => fail(code::IO, format!("{}: {io}", path.display())),
        FormatError::Parse { .. } => fail(code::VALIDATION, format!("{}: {e}", path.display())),
    }
}

fn out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_VAR).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."))
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents).map_err(|e| fail(code::IO, format!("{}: {e}", path.display())))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

/// What a command reports back for its manifest.
struct Run {
    instance: Option<PathBuf>,
    seeds: Vec<u64>,
    solver: Option<String>,
    config: serde_json::Value,
    outputs: Vec<PathBuf>,
    /// Set when outputs were written but the command still failed.
    failure: Option<Failure>,
}

fn config_of<T: Serialize>(command: &str, args: &T) -> serde_json::Value {
    serde_json::json!({ "command": command, "args": args })
}

fn generate(a: &GenerateArgs) -> Result<Run, Failure> {
    let (shape, label) = match &a.preset {
        Some(p) => (p.parse::<Preset>().map_err(|e| fail(code::USAGE, e))?.shape(), p.clone()),
        None => {
            let (l, m, p) = (a.levels.unwrap(), a.max_per_level.unwrap(), a.p_edge.unwrap());
            (Shape::new(l, m, p), format!("l{l}m{m}"))
        }
    };
    let params = VehicleParams {
        speed: a.speed,
        capacity: a.capacity,
        mileage: a.mileage,
        initial_soc: a.initial_soc,
    };
    let powers = LevelPowers {
        l1: a.l1_kw,
        l2: a.l2_kw,
        l3: a.l3_kw,
    };
    let inst = instance::generate_instance(shape, params, powers, a.seed).map_err(|e| fail(code::USAGE, e.to_string()))?;
    let out = a
        .out
        .clone()
        .unwrap_or_else(|| out_dir().join(format!("{label}_seed{}.json", a.seed)));
    write(&out, &(instance::to_json(&inst) + "\n"))?;
    let violations = inst.validate();
    if violations.is_empty() {
        println!("wrote {} ({} stations, {} levels)", out.display(), inst.node_count(), inst.graph.levels.len());
    } else {
        // Sampling can produce graphs with no S -> D path; the file is still
        // written so the draw can be inspected.
        eprintln!("warning: generated instance does not validate:");
        for v in &violations {
            eprintln!("  {v}");
        }
    }
    Ok(Run {
        instance: Some(out.clone()),
        seeds: vec![a.seed],
        solver: None,
        config: config_of("generate", a),
        outputs: vec![out],
        failure: None,
    })
}

fn parse_weights(s: &str) -> Result<Weights, Failure> {
    let w = match s {
        "normalized" => Weights::NORMALIZED,
        "raw" => Weights::RAW_SUM,
        other => {
            let bad = || fail(code::USAGE, format!("weights `{other}`: expected normalized, raw or TIME,COST"));
            let (t, c) = other.split_once(',').ok_or_else(bad)?;
            let t = t.trim().parse().map_err(|_| bad())?;
            let c = c.trim().parse().map_err(|_| bad())?;
            Weights::new(t, c).map_err(|e| fail(code::USAGE, e))?
        }
    };
    Ok(w)
}

fn parse_delta(s: &str) -> Result<Option<f64>, Failure> {
    if s == "auto" {
        return Ok(None);
    }
    match s.parse::<f64>() {
        Ok(d) if d > 0.0 && d.is_finite() => Ok(Some(d)),
        _ => Err(fail(code::USAGE, format!("delta `{s}`: expected `auto` or a positive number"))),
    }
}

fn print_front(points: &[FrontPoint]) {
    for p in points {
        println!(
            "  time {:.4} h  cost {:.4}  path {}  charge {}",
            p.objectives.time_h,
            p.objectives.cost,
            formats::format_path(&p.solution.path),
            formats::format_charge(&p.solution)
        );
    }
}

fn solve(a: &SolveArgs) -> Result<Run, Failure> {
    let inst = instance::load(&a.instance)?;
    let weights = parse_weights(&a.weights)?;
    let delta = parse_delta(&a.delta)?;
    let stem = a.instance.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "instance".into());
    let out = a
        .out
        .clone()
        .unwrap_or_else(|| out_dir().join(format!("{stem}_{}.csv", a.method.name())));
    let mut outputs = vec![out.clone()];
    let mut seeds = Vec::new();
    let mut failure = None;

    match a.method {
        Method::ExactTime | Method::ExactCost | Method::EpsFront => {
            let solver = ExactSolver::with_cap(&inst, a.path_cap)?;
            let front = match a.method {
                Method::ExactTime => ParetoFront {
                    points: vec![solver.min_time()?],
                },
                Method::ExactCost => ParetoFront {
                    points: vec![solver.min_cost()?],
                },
                _ => {
                    let dir = if a.converse { SweepDirection::CostUnderTime } else { SweepDirection::TimeUnderCost };
                    solver.epsilon_constraint(delta, dir)?
                }
            };
            write(&out, &formats::front_to_string(&front.points))?;
            println!("{}: {} point(s) over {} path(s) -> {}", a.method.name(), front.len(), solver.path_count(), out.display());
            print_front(&front.points);
        }
        Method::Oracle => {
            let front = exact::grid_oracle(&inst, a.grid, a.oracle_cap)?;
            if front.is_empty() {
                return Err(fail(code::INFEASIBLE, "no plan on the grid is feasible"));
            }
            write(&out, &formats::front_to_string(&front.points))?;
            println!("oracle (grid {}): {} point(s) -> {}", a.grid, front.len(), out.display());
            print_front(&front.points);
        }
        Method::Ga | Method::Pso => {
            seeds.push(a.seed);
            let outcome: RunOutcome = if a.method == Method::Ga {
                let cfg = GAConfig {
                    population: a.pop,
                    epochs: a.epochs,
                    p_crossover: a.pc,
                    p_mutation: a.pm,
                    seed: a.seed,
                };
                run_ga(&inst, &cfg, weights)?
            } else {
                let cfg = PSOConfig {
                    population: a.pop,
                    epochs: a.epochs,
                    seed: a.seed,
                    w_start: a.w_start,
                    w_end: a.w_end,
                    c1: a.c1,
                    c2: a.c2,
                };
                run_pso(&inst, &cfg, weights)?
            };
            let best: Vec<FrontPoint> = match (&outcome.solution, outcome.objectives) {
                (Some(s), Some(o)) => vec![FrontPoint {
                    objectives: o,
                    solution: s.clone(),
                }],
                _ => Vec::new(),
            };
            let history = sibling(&out, "_history.csv");
            write(&out, &formats::front_to_string(&best))?;
            write(&history, &formats::history_to_string(&outcome.history))?;
            outputs.push(history);
            println!("{} best fitness {} -> {}", a.method.name(), outcome.fitness, out.display());
            print_front(&best);
            if best.is_empty() {
                failure = Some(fail(code::INFEASIBLE, "search ended without a feasible plan"));
            }
        }
    }
    Ok(Run {
        instance: Some(a.instance.clone()),
        seeds,
        solver: Some(a.method.name().to_string()),
        config: config_of("solve", a),
        outputs,
        failure,
    })
}

fn read_front_file(path: &Path) -> Result<Vec<Point2>, Failure> {
    let file = fs::File::open(path).map_err(|e| fail(code::IO, format!("{}: {e}", path.display())))?;
    let points = formats::read_front(file).map_err(format_failure(path))?;
    Ok(points.into_iter().map(|p| p.objectives).collect())
}

fn compare(a: &CompareArgs) -> Result<Run, Failure> {
    let pa = read_front_file(&a.a)?;
    let pb = read_front_file(&a.b)?;
    let r = front_compare(&pa, &pb);
    let out = a.out.clone().unwrap_or_else(|| out_dir().join("compare.csv"));
    let summary = sibling(&out, "_summary.csv");

    let mut report = String::from("set,index,time_h,cost,standing\n");
    for (set, points, standing) in [("a", &pa, &r.a_standing), ("b", &pb, &r.b_standing)] {
        for (k, (p, s)) in points.iter().zip(standing).enumerate() {
            report.push_str(&format!("{set},{k},{},{},{s}\n", p.time_h, p.cost));
        }
    }
    let counts = format!(
        "a_dominated_by_b,b_dominated_by_a,mutual_nondominated\n{},{},{}\n",
        r.a_dominated_by_b, r.b_dominated_by_a, r.mutual_nondominated
    );
    write(&out, &report)?;
    write(&summary, &counts)?;
    println!(
        "a_dominated_by_b={} b_dominated_by_a={} mutual_nondominated={}",
        r.a_dominated_by_b, r.b_dominated_by_a, r.mutual_nondominated
    );
    for (set, standing) in [("a", &r.a_standing), ("b", &r.b_standing)] {
        for (k, s) in standing.iter().enumerate() {
            println!("  {set}[{k}] {s}");
        }
    }
    Ok(Run {
        instance: None,
        seeds: Vec::new(),
        solver: None,
        config: config_of("compare", a),
        outputs: vec![out, summary],
        failure: None,
    })
}

fn evaluate(a: &EvaluateArgs) -> Result<Run, Failure> {
    let inst = instance::load(&a.instance)?;
    let text = fs::read_to_string(&a.solution).map_err(|e| fail(code::IO, format!("{}: {e}", a.solution.display())))?;
    let sol: RouteSolution =
        serde_json::from_str(&text).map_err(|e| fail(code::VALIDATION, format!("{}: {e}", a.solution.display())))?;
    let record = model::evaluation_record(&inst, &sol);
    let json = serde_json::to_string_pretty(&record).expect("records serialize") + "\n";
    let out = a.out.clone().unwrap_or_else(|| out_dir().join("evaluation.json"));
    write(&out, &json)?;
    print!("{json}");
    Ok(Run {
        instance: Some(a.instance.clone()),
        seeds: Vec::new(),
        solver: None,
        config: config_of("evaluate", a),
        outputs: vec![out],
        failure: None,
    })
}

/// Runs one non-replay command and writes its manifest.
fn execute(command: &Command, args: &[String]) -> Result<(), Failure> {
    let start = Instant::now();
    let (name, run) = match command {
        Command::Generate(a) => ("generate", generate(a)?),
        Command::Solve(a) => ("solve", solve(a)?),
        Command::Compare(a) => ("compare", compare(a)?),
        Command::Evaluate(a) => ("evaluate", evaluate(a)?),
        Command::Replay { .. } => unreachable!("replay is dispatched separately"),
    };
    let m = RunManifest {
        command: name.to_string(),
        args: args.to_vec(),
        cwd: std::env::current_dir()?,
        instance: run.instance,
        seeds: run.seeds,
        solver: run.solver,
        config_digest: manifest::digest(&run.config),
        outputs: run.outputs.clone(),
        wall_clock_s: start.elapsed().as_secs_f64(),
    };
    write(&manifest::path_for(&run.outputs[0]), &m.render())?;
    match run.failure {
        Some(f) => Err(f),
        None => Ok(()),
    }
}

fn replay(path: &Path) -> Result<(), Failure> {
    let text = fs::read_to_string(path).map_err(|e| fail(code::IO, format!("{}: {e}", path.display())))?;
    let m = RunManifest::parse(&text).map_err(|e| fail(code::VALIDATION, e))?;
    let cli = Cli::try_parse_from(std::iter::once("evrp".to_string()).chain(m.args.iter().cloned()))
        .map_err(|e| fail(code::VALIDATION, format!("manifest args do not parse: {e}")))?;
    if matches!(cli.command, Command::Replay { .. }) {
        return Err(fail(code::VALIDATION, "a manifest cannot replay another manifest"));
    }
    std::env::set_current_dir(&m.cwd).map_err(|e| fail(code::IO, format!("{}: {e}", m.cwd.display())))?;
    execute(&cli.command, &m.args)
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Replay { manifest } => replay(manifest),
        other => execute(other, &args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
