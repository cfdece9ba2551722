//! `busched`: generate instances, run the two-stage solver, export the
//! exact model, and cross-check small instances against the exhaustive
//! oracle.
//!
//! Exit codes: 0 success, 2 user/input error, 3 internal invariant breach.

use anyhow::{anyhow, bail, Context, Result};
use busched_core::balancing::rebalance_passes;
use busched_core::blocking::block;
use busched_core::generator::{generate, GeneratorParams};
use busched_core::io::{load_instance, save_instance, save_schedule};
use busched_core::kpi::{compare, kpi};
use busched_core::mip::{build_mip, exact_solve_small, export_lp};
use busched_core::model::{from_minutes, hard_violations, validate_schedule, Sec};
use busched_core::{CostModel, Instance, Schedule};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

const EXIT_USER: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

/// Cap on link variables for LP export; beyond this the text file and any
/// solver loading it stop being practical on desk hardware.
const EXPORT_X_VAR_LIMIT: usize = 2_000_000;

#[derive(Parser)]
#[command(
    name = "busched",
    version,
    about = "Minimum-fleet school-bus tour schedules with duration balancing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic instance from a district profile.
    Gen(GenArgs),
    /// Run the two-stage solver: blocking, then balancing.
    Solve(SolveArgs),
    /// Export the exact mixed integer model as an LP-format file.
    ExportMip(ExportMipArgs),
    /// Exhaustively solve a small instance, proving optimality if possible.
    Oracle(OracleArgs),
    /// Solve many seeds of one profile and tabulate the KPIs as CSV.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// Large district: mean 25 min trips, range 7-84.
    Hcpss,
    /// Small district: mean 40 min trips, range 22-66.
    California,
}

impl Preset {
    fn params(self, n: Option<usize>) -> GeneratorParams {
        match self {
            Preset::Hcpss => GeneratorParams::hcpss(n.unwrap_or(994)),
            Preset::California => GeneratorParams::california(n.unwrap_or(54)),
        }
    }
}

#[derive(Args)]
struct GenArgs {
    /// District profile to calibrate against.
    #[arg(long, value_enum, default_value = "hcpss")]
    preset: Preset,
    /// Number of trips (defaults to the preset's full size).
    #[arg(short = 'n', long = "trips")]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Goal duration in minutes.
    #[arg(long)]
    goal: Option<f64>,
    #[arg(long)]
    schools: Option<usize>,
    /// Mean trip duration in minutes.
    #[arg(long)]
    mean: Option<f64>,
    /// Trip duration standard deviation in minutes.
    #[arg(long)]
    sd: Option<f64>,
    /// Minimum trip duration in minutes.
    #[arg(long)]
    min_duration: Option<f64>,
    /// Maximum trip duration in minutes.
    #[arg(long)]
    max_duration: Option<f64>,
    /// Earliest dismissal, HH:MM.
    #[arg(long)]
    bell_start: Option<String>,
    /// Latest dismissal, HH:MM.
    #[arg(long)]
    bell_end: Option<String>,
    #[arg(long)]
    plane: Option<f64>,
    /// Travel speed in distance units per minute.
    #[arg(long)]
    speed: Option<f64>,
    /// Instance file to write.
    #[arg(short = 'o', long = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    /// Instance JSON file.
    instance: PathBuf,
    /// Override the goal duration, in minutes.
    #[arg(long)]
    goal: Option<f64>,
    /// Penalty per additional bus.
    #[arg(long)]
    mbus: Option<i64>,
    /// Penalty per over-goal minute.
    #[arg(long)]
    mg: Option<i64>,
    /// Cap on trips per tour (advisory for the heuristic).
    #[arg(long)]
    max_chain: Option<usize>,
    /// Balancing passes to apply.
    #[arg(long, default_value_t = 1)]
    passes: usize,
    /// Stop after blocking.
    #[arg(long)]
    stage1_only: bool,
    /// Output directory for schedule and reports.
    #[arg(short = 'o', long = "out", default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct ExportMipArgs {
    instance: PathBuf,
    #[arg(long)]
    goal: Option<f64>,
    #[arg(long)]
    mbus: Option<i64>,
    #[arg(long)]
    mg: Option<i64>,
    #[arg(long)]
    max_chain: Option<usize>,
    /// LP file to write.
    #[arg(short = 'o', long = "out", default_value = "model.lp")]
    out: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    instance: PathBuf,
    #[arg(long, default_value_t = 10_000_000)]
    node_limit: u64,
    #[arg(long)]
    goal: Option<f64>,
    #[arg(long)]
    mbus: Option<i64>,
    #[arg(long)]
    mg: Option<i64>,
    #[arg(long)]
    max_chain: Option<usize>,
    /// Result JSON file to write.
    #[arg(short = 'o', long = "out", default_value = "oracle.json")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum, default_value = "hcpss")]
    preset: Preset,
    #[arg(short = 'n', long = "trips")]
    n: Option<usize>,
    /// Number of seeds, starting at --first-seed.
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    first_seed: u64,
    /// Worker threads for independent seeds.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    goal: Option<f64>,
    /// CSV file to write.
    #[arg(short = 'o', long = "out", default_value = "sweep.csv")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Solve(args) => cmd_solve(args),
        Command::ExportMip(args) => cmd_export_mip(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Sweep(args) => cmd_sweep(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::User(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(EXIT_USER)
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(EXIT_INTERNAL)
        }
    }
}

enum CliError {
    User(anyhow::Error),
    Internal(String),
}

impl From<anyhow::Error> for CliError {
    fn from(err: anyhow::Error) -> Self {
        CliError::User(err)
    }
}

fn parse_hhmm(text: &str) -> Result<Sec> {
    let (h, m) = text
        .split_once(':')
        .ok_or_else(|| anyhow!("expected HH:MM, got {text:?}"))?;
    let h: i64 = h.parse().context("bad hour")?;
    let m: i64 = m.parse().context("bad minute")?;
    if !(0..24).contains(&h) || !(0..60).contains(&m) {
        bail!("time {text:?} out of range");
    }
    Ok(h * 3600 + m * 60)
}

#[derive(Serialize)]
struct Provenance<'a> {
    tool: &'a str,
    version: &'a str,
    command: &'a str,
    params: &'a GeneratorParams,
}

fn write_provenance(instance_path: &Path, params: &GeneratorParams) -> Result<()> {
    let sidecar = instance_path.with_extension("provenance.json");
    let body = serde_json::to_string_pretty(&Provenance {
        tool: "busched",
        version: env!("CARGO_PKG_VERSION"),
        command: "gen",
        params,
    })?;
    fs::write(&sidecar, body + "\n")
        .with_context(|| format!("writing {}", sidecar.display()))?;
    Ok(())
}

fn cmd_gen(args: GenArgs) -> Result<(), CliError> {
    let mut params = args.preset.params(args.n);
    params.seed = args.seed;
    if let Some(goal) = args.goal {
        params.goal = goal;
    }
    if let Some(schools) = args.schools {
        params.n_schools = schools;
    }
    if let Some(mean) = args.mean {
        params.duration_mean = mean;
    }
    if let Some(sd) = args.sd {
        params.duration_sd = sd;
    }
    if let Some(lo) = args.min_duration {
        params.duration_min = lo;
    }
    if let Some(hi) = args.max_duration {
        params.duration_max = hi;
    }
    if let Some(text) = &args.bell_start {
        params.bell_earliest_s = parse_hhmm(text)?;
    }
    if let Some(text) = &args.bell_end {
        params.bell_latest_s = parse_hhmm(text)?;
    }
    if let Some(plane) = args.plane {
        params.plane_size = plane;
    }
    if let Some(speed) = args.speed {
        params.speed = speed;
    }

    let instance = generate(&params).map_err(|e| CliError::User(e.into()))?;
    save_instance(&instance, &args.out).map_err(|e| CliError::User(e.into()))?;
    write_provenance(&args.out, &params)?;
    println!(
        "wrote {} ({} trips, {} schools, seed {})",
        args.out.display(),
        instance.n(),
        params.n_schools,
        params.seed
    );
    Ok(())
}

fn load_with_overrides(
    path: &Path,
    goal: Option<f64>,
    mbus: Option<i64>,
    mg: Option<i64>,
    max_chain: Option<usize>,
) -> Result<Instance> {
    let mut instance = load_instance(path)?;
    if let Some(goal) = goal {
        instance.set_goal_s(from_minutes(goal))?;
    }
    let bus = mbus.unwrap_or(instance.bus_penalty());
    let excess = mg.unwrap_or(instance.excess_penalty());
    instance.set_penalties(bus, excess)?;
    if max_chain.is_some() {
        instance.set_max_chain(max_chain)?;
    }
    Ok(instance)
}

#[derive(Serialize)]
struct Timings {
    blocking_s: f64,
    balancing_s: f64,
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn guard_internal(schedule: &Schedule, inst: &Instance, stage: &str) -> Result<(), CliError> {
    let violations = hard_violations(schedule, inst);
    if !violations.is_empty() {
        let msgs: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(CliError::Internal(format!(
            "{stage} produced an invalid schedule: {}",
            msgs.join("; ")
        )));
    }
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> Result<(), CliError> {
    let inst = load_with_overrides(
        &args.instance,
        args.goal,
        args.mbus,
        args.mg,
        args.max_chain,
    )?;
    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))
        .map_err(CliError::User)?;

    let t_block = Instant::now();
    let stage1 = block(&inst);
    let blocking_s = secs(t_block.elapsed());
    guard_internal(&stage1, &inst, "blocking")?;
    for violation in validate_schedule(&stage1, &inst) {
        if violation.is_chain_cap() {
            eprintln!("warning: blocking ignores the chain cap: {violation}");
        }
    }

    let (final_schedule, balancing_s) = if args.stage1_only {
        (stage1.clone(), 0.0)
    } else {
        let t_bal = Instant::now();
        let balanced = rebalance_passes(&stage1, &inst, args.passes);
        let balancing_s = secs(t_bal.elapsed());
        guard_internal(&balanced, &inst, "balancing")?;
        if balanced.n_tours() != stage1.n_tours() {
            return Err(CliError::Internal(
                "balancing changed the tour count".to_string(),
            ));
        }
        let before = stage1.total_excess_s(&inst).map_err(anyhow::Error::from)?;
        let after = balanced
            .total_excess_s(&inst)
            .map_err(anyhow::Error::from)?;
        if after > before {
            return Err(CliError::Internal(
                "balancing increased the aggregate excess".to_string(),
            ));
        }
        (balanced, balancing_s)
    };

    let cost_model = CostModel::default();
    let kpi_before = kpi(&stage1, &inst, &cost_model).map_err(anyhow::Error::from)?;
    let kpi_after = kpi(&final_schedule, &inst, &cost_model).map_err(anyhow::Error::from)?;
    let comparison = compare(&kpi_before, &kpi_after);

    let schedule_path = args.out.join("schedule.json");
    save_schedule(&final_schedule, &inst, &schedule_path)
        .map_err(|e| CliError::User(e.into()))?;

    let report_json_path = args.out.join("report.json");
    let mut report: serde_json::Value =
        serde_json::from_str(&comparison.to_json()).expect("report JSON is valid");
    report["timing"] = serde_json::json!(Timings {
        blocking_s,
        balancing_s
    });
    fs::write(
        &report_json_path,
        serde_json::to_string_pretty(&report).expect("report JSON") + "\n",
    )
    .with_context(|| format!("writing {}", report_json_path.display()))
    .map_err(CliError::User)?;

    let table = comparison.render_table();
    let report_txt_path = args.out.join("report.txt");
    fs::write(&report_txt_path, &table)
        .with_context(|| format!("writing {}", report_txt_path.display()))
        .map_err(CliError::User)?;

    print!("{table}");
    println!("stage timings: blocking {blocking_s:.3}s, balancing {balancing_s:.3}s");
    println!(
        "wrote {}, {}, {}",
        schedule_path.display(),
        report_json_path.display(),
        report_txt_path.display()
    );
    Ok(())
}

fn cmd_export_mip(args: ExportMipArgs) -> Result<(), CliError> {
    let inst = load_with_overrides(
        &args.instance,
        args.goal,
        args.mbus,
        args.mg,
        args.max_chain,
    )?;
    let n = inst.n();
    let mut compatible_pairs = 0usize;
    for i in 0..n {
        for j in 0..n {
            if i != j && inst.compatible(i, j).map_err(anyhow::Error::from)? {
                compatible_pairs += 1;
            }
        }
    }
    let estimated_x = compatible_pairs * n.div_ceil(2);
    if estimated_x > EXPORT_X_VAR_LIMIT {
        return Err(CliError::User(anyhow!(
            "the model would need about {estimated_x} link variables \
             (limit {EXPORT_X_VAR_LIMIT}); export a smaller instance"
        )));
    }

    let model = build_mip(&inst).map_err(|e| CliError::User(e.into()))?;
    let text = export_lp(&model);
    fs::write(&args.out, &text)
        .with_context(|| format!("writing {}", args.out.display()))
        .map_err(CliError::User)?;
    let counts = model.counts();
    println!(
        "wrote {} (variables: x={} m={} n={} a={} b={} p={} total={}; rows={}; nonzeros={})",
        args.out.display(),
        counts.x,
        counts.m,
        counts.n,
        counts.a,
        counts.b,
        counts.p,
        counts.total(),
        model.n_rows(),
        model.n_nonzeros()
    );
    Ok(())
}

#[derive(Serialize)]
struct OracleFile {
    buses: usize,
    excess_minutes: f64,
    objective: f64,
    proven_optimal: bool,
    nodes: u64,
    tours: Vec<Vec<usize>>,
}

fn cmd_oracle(args: OracleArgs) -> Result<(), CliError> {
    let inst = load_with_overrides(
        &args.instance,
        args.goal,
        args.mbus,
        args.mg,
        args.max_chain,
    )?;
    let result = exact_solve_small(&inst, args.node_limit);
    let file = OracleFile {
        buses: result.buses,
        excess_minutes: result.excess_minutes,
        objective: result.objective,
        proven_optimal: result.proven_optimal,
        nodes: result.nodes,
        tours: result
            .schedule
            .tours()
            .iter()
            .map(|t| t.trip_ids().to_vec())
            .collect(),
    };
    fs::write(
        &args.out,
        serde_json::to_string_pretty(&file).expect("oracle JSON") + "\n",
    )
    .with_context(|| format!("writing {}", args.out.display()))
    .map_err(CliError::User)?;
    println!(
        "{}: {} buses, {:.2} excess minutes, objective {:.2} ({} nodes)",
        if result.proven_optimal {
            "proven optimal"
        } else {
            "incumbent (node limit hit)"
        },
        result.buses,
        result.excess_minutes,
        result.objective,
        result.nodes
    );
    println!("wrote {}", args.out.display());
    Ok(())
}

struct SweepRow {
    seed: u64,
    n: usize,
    tours: usize,
    sd_old: f64,
    sd_new: f64,
    exceed_old: f64,
    exceed_new: f64,
    blocking_s: f64,
    balancing_s: f64,
}

fn sweep_one(preset: Preset, n: Option<usize>, goal: Option<f64>, seed: u64) -> Result<SweepRow> {
    let mut params = preset.params(n);
    params.seed = seed;
    if let Some(goal) = goal {
        params.goal = goal;
    }
    let inst = generate(&params)?;
    let t_block = Instant::now();
    let before = block(&inst);
    let blocking_s = secs(t_block.elapsed());
    let t_bal = Instant::now();
    let after = rebalance_passes(&before, &inst, 1);
    let balancing_s = secs(t_bal.elapsed());
    let cm = CostModel::default();
    let kb = kpi(&before, &inst, &cm)?;
    let ka = kpi(&after, &inst, &cm)?;
    Ok(SweepRow {
        seed,
        n: inst.n(),
        tours: ka.n_tours,
        sd_old: kb.duration_sd,
        sd_new: ka.duration_sd,
        exceed_old: kb.exceed_minutes,
        exceed_new: ka.exceed_minutes,
        blocking_s,
        balancing_s,
    })
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    if args.jobs == 0 {
        return Err(CliError::User(anyhow!("--jobs must be at least 1")));
    }
    let seeds: Vec<u64> = (args.first_seed..args.first_seed + args.seeds).collect();
    let jobs = args.jobs.min(seeds.len().max(1));

    let mut rows: Vec<(u64, Result<SweepRow>)> = Vec::new();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for chunk in seeds.chunks(seeds.len().div_ceil(jobs).max(1)) {
            let chunk = chunk.to_vec();
            handles.push(scope.spawn(move || {
                chunk
                    .into_iter()
                    .map(|seed| (seed, sweep_one(args.preset, args.n, args.goal, seed)))
                    .collect::<Vec<_>>()
            }));
        }
        for handle in handles {
            rows.extend(handle.join().expect("sweep worker panicked"));
        }
    });
    rows.sort_by_key(|(seed, _)| *seed);

    let mut csv = String::from(
        "seed,n,tours,sd_old,sd_new,exceed_old,exceed_new,blocking_s,balancing_s\n",
    );
    for (seed, row) in rows {
        let row = row.with_context(|| format!("seed {seed}"))?;
        csv.push_str(&format!(
            "{},{},{},{:.2},{:.2},{:.2},{:.2},{:.4},{:.4}\n",
            row.seed,
            row.n,
            row.tours,
            row.sd_old,
            row.sd_new,
            row.exceed_old,
            row.exceed_new,
            row.blocking_s,
            row.balancing_s
        ));
    }
    fs::write(&args.out, csv)
        .with_context(|| format!("writing {}", args.out.display()))
        .map_err(CliError::User)?;
    println!("wrote {} ({} seeds)", args.out.display(), args.seeds);
    Ok(())
}
