//! `trilayer` command-line tool: planner benchmarks, optimizer runs, end-to-end
//! simulations and generators for primitive files and fixture maps.
//!
//! Exit codes: 0 success, 2 invalid input, 3 NO_PATH or FAILED, 4 internal error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use trilayer::fixtures;
use trilayer::harness::{self, BenchmarkRecord, HarnessError, RunMode};
use trilayer::mapio::save_map;
use trilayer::pipeline::{format_log, Outcome, PipelineConfig};
use trilayer::primitives::{generate_arc_primitives, PrimitiveConfig};

#[derive(Parser)]
#[command(name = "trilayer", version, about = "Lattice planning, local path optimization and velocity profiling")]
struct Cli {
    /// Seed for generated content (clutter maps).
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Worker threads for `suite`.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Record format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Run the global planner once and write a benchmark record.
    Plan {
        /// Map sidecar file or `fixture:<name>`.
        #[arg(long)]
        map: String,
        /// Start pose `x y theta`; defaults to the fixture's.
        #[arg(long, allow_hyphen_values = true)]
        start: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        goal: Option<String>,
        #[arg(long, value_enum, default_value_t = Switch::On)]
        pruning: Switch,
        /// `builtin` or a primitive file.
        #[arg(long, default_value = "builtin")]
        prims: String,
        /// Scenario id written into the record.
        #[arg(long)]
        id: Option<String>,
        /// Record file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the path poses (`x y theta` per line).
        #[arg(long)]
        path_out: Option<PathBuf>,
    },
    /// Optimize a chain (`x y` per line) against a map's distance grid.
    Optimize {
        #[arg(long)]
        map: String,
        #[arg(long)]
        chain: PathBuf,
        /// `key: value` configuration overrides.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Optimized chain; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-iteration CSV report.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Benchmark record file.
        #[arg(long)]
        record: Option<PathBuf>,
    },
    /// Simulate a scenario file end to end.
    Run {
        scenario: PathBuf,
        /// Trajectory log (CSV).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Benchmark record file; stdout when omitted.
        #[arg(long)]
        record: Option<PathBuf>,
        /// Execute the raw global path without local optimization.
        #[arg(long)]
        raw: bool,
        /// Run the three tasks on threads instead of the deterministic clock.
        #[arg(long)]
        threaded: bool,
        /// Simulated seconds per wall second in threaded mode.
        #[arg(long, default_value_t = 10.0)]
        speedup: f64,
    },
    /// Run every cell of a manifest and write records plus the aggregate table.
    Suite {
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a primitive file from a JSON generator config (builtin inventory by default).
    GenPrims {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        resolution: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a fixture map (`clutter` uses --seed) as PGM plus sidecar.
    GenMap {
        name: String,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Harness(HarnessError),
    Outcome(String),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        Failure::Harness(e)
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Harness(HarnessError::Input(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn render(records: &[BenchmarkRecord], format: Format) -> Result<String, Failure> {
    Ok(match format {
        Format::Csv => harness::records_to_csv(records)?,
        Format::Json => harness::records_to_json(records)? + "\n",
    })
}

fn emit(records: &[BenchmarkRecord], format: Format, out: Option<&Path>) -> Result<(), Failure> {
    let text = render(records, format)?;
    match out {
        Some(p) => write_file(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn check_outcome(record: &BenchmarkRecord, when: Option<f64>) -> Result<(), Failure> {
    match record.outcome {
        Outcome::NoPath | Outcome::Failed => Err(Failure::Outcome(match when {
            Some(t) => format!("{}: {} at t = {t:.2} s", record.scenario_id, record.outcome),
            None => format!("{}: {}", record.scenario_id, record.outcome),
        })),
        _ => Ok(()),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Plan {
            map,
            start,
            goal,
            pruning,
            prims,
            id,
            out,
            path_out,
        } => {
            let (world, fixture) = harness::load_world(&map)?;
            let pose = |given: Option<String>, default: Option<trilayer::Pose2>, what: &str| match given {
                Some(s) => harness::parse_pose(&s),
                None => default.ok_or_else(|| HarnessError::Input(format!("--{what} is required for map files"))),
            };
            let start = pose(start, fixture.as_ref().map(|f| f.start), "start")?;
            let goal = pose(goal, fixture.as_ref().map(|f| f.goal), "goal")?;
            let prims = harness::load_primitives(&prims, PipelineConfig::default().global_resolution)?;
            let mut cfg = PipelineConfig::default();
            cfg.planner.pruning = matches!(pruning, Switch::On);
            let id = id.unwrap_or_else(|| map.trim_start_matches("fixture:").to_string());
            let r = harness::cmd_plan(&id, &world, start, goal, &prims, &cfg)?;
            if let (Some(p), Some(path)) = (path_out, &r.path) {
                write_file(&p, &harness::format_path(path))?;
            }
            emit(std::slice::from_ref(&r.record), cli.format, out.as_deref())?;
            check_outcome(&r.record, None)
        }
        Command::Optimize {
            map,
            chain,
            config,
            out,
            report,
            record,
        } => {
            let (world, _) = harness::load_world(&map)?;
            let points = harness::parse_chain(&read_file(&chain)?)
                .map_err(|e| HarnessError::Input(format!("{}: {e}", chain.display())))?;
            let mut cfg = PipelineConfig::default();
            if let Some(c) = config {
                harness::parse_config_overrides(&read_file(&c)?, &mut cfg)
                    .map_err(|e| HarnessError::Input(format!("{}: {e}", c.display())))?;
            }
            let id = chain.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let r = harness::cmd_optimize(&id, &world, &points, &cfg)?;
            if !r.infeasible_vertices.is_empty() {
                eprintln!(
                    "warning: {} interior vertices start inside obstacles (first: {}); optimizing anyway",
                    r.infeasible_vertices.len(),
                    r.infeasible_vertices[0]
                );
            }
            if r.record.outcome == Outcome::NonConverged {
                eprintln!("warning: optimizer did not converge; writing the best chain found");
            }
            let text = harness::format_chain(&r.chain);
            match out {
                Some(p) => write_file(&p, &text)?,
                None => print!("{text}"),
            }
            if let Some(p) = report {
                write_file(&p, &r.report.to_csv())?;
            }
            if let Some(p) = record {
                write_file(&p, &render(std::slice::from_ref(&r.record), cli.format)?)?;
            }
            Ok(())
        }
        Command::Run {
            scenario,
            out,
            record,
            raw,
            threaded,
            speedup,
        } => {
            let mut spec = harness::load_scenario(&scenario)?;
            if raw {
                spec.config.optimize_local = false;
            }
            let mode = if threaded {
                RunMode::Threaded { speedup }
            } else {
                RunMode::Deterministic
            };
            let r = harness::cmd_run(&spec, mode)?;
            if let Some(p) = out {
                write_file(&p, &format_log(&r.result.log))?;
            }
            emit(std::slice::from_ref(&r.record), cli.format, record.as_deref())?;
            check_outcome(&r.record, r.result.failure_time)
        }
        Command::Suite { manifest, out } => {
            let text = read_file(&manifest)?;
            let m = harness::parse_manifest(&text, manifest.parent().unwrap_or(Path::new(".")))
                .map_err(|e| HarnessError::Input(format!("{}: {e}", manifest.display())))?;
            let s = harness::cmd_suite(&m, cli.threads);
            for (i, e) in &s.errors {
                eprintln!("cell {i}: {e}");
            }
            let ext = match cli.format {
                Format::Csv => "csv",
                Format::Json => "json",
            };
            write_file(&out.join(format!("records.{ext}")), &render(&s.records, cli.format)?)?;
            write_file(&out.join("aggregate.csv"), &s.aggregate.to_csv())?;
            match s.aggregate.mean_reduction_pct {
                Some(m) => println!("mean expansion reduction: {m:.2}% over {} pairs", s.aggregate.pairs.len()),
                None => println!("no complete planner pairs"),
            }
            Ok(())
        }
        Command::GenPrims { config, resolution, out } => {
            let mut cfg = match config {
                Some(p) => serde_json::from_str::<PrimitiveConfig>(&read_file(&p)?)
                    .map_err(|e| HarnessError::Input(format!("{}: {e}", p.display())))?,
                None => PrimitiveConfig::default(),
            };
            if let Some(r) = resolution {
                cfg.resolution = r;
            }
            let set = generate_arc_primitives(&cfg).map_err(HarnessError::from)?;
            write_file(&out, &set.to_text())?;
            println!("{} primitives over {} headings", set.len(), set.num_angles());
            Ok(())
        }
        Command::GenMap { name, out } => {
            let key = if name == "clutter" { format!("clutter_{}", cli.seed) } else { name };
            let f = fixtures::fixture(&key).ok_or_else(|| {
                HarnessError::Input(format!(
                    "unknown fixture `{key}`; known: {}, clutter",
                    fixtures::FIXTURE_NAMES.join(", ")
                ))
            })?;
            fs::create_dir_all(&out).map_err(|e| io_err(&out, e))?;
            let sidecar = save_map(&f.world, &out, &key).map_err(HarnessError::from)?;
            println!(
                "{} start {} {} {} goal {} {} {}",
                sidecar.display(),
                f.start.x,
                f.start.y,
                f.start.theta,
                f.goal.x,
                f.goal.y,
                f.goal.theta
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Outcome(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(3)
        }
        Err(Failure::Harness(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
