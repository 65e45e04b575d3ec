//! `attune` — artificial trust estimation over teleoperation trials.
//!
//! Subcommands wire the full pipeline: `simulate` generates synthetic
//! trials, `estimate` replays one trial into a trust trace, `rank` scores a
//! directory of trials into a ranking report, and `eval` compares two
//! rankings with Kendall tau-b.
//!
//! Exit codes: 0 success, 1 data error, 2 configuration error, 3 partial
//! success (some trials skipped).

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use attune_core::evaluation::{self, rank_agreement};
use attune_core::fusion::estimate_records;
use attune_core::memory::ProfileStore;
use attune_core::simulator::{self, Archetype};
use attune_core::telemetry::{read_trial, replay, write_trial, Pacing, TaskConfig};

const EXIT_DATA: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

/// Environment variable overriding the operator-profile directory used by
/// `rank`.
const PROFILES_DIR_ENV: &str = "ATTUNE_PROFILES_DIR";

#[derive(Parser)]
#[command(
    name = "attune",
    about = "Artificial trust estimation for teleoperated robots",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic trial for an operator archetype.
    Simulate {
        /// Task configuration JSON; defaults to the built-in 20x20 m world.
        #[arg(long)]
        task: Option<PathBuf>,
        /// Archetype name (see --archetypes for custom definitions).
        #[arg(long)]
        archetype: String,
        /// Simulation seed; the trial is a pure function of
        /// (task, archetype, seed).
        #[arg(long)]
        seed: u64,
        /// Output trial file.
        #[arg(long)]
        out: PathBuf,
        /// Override the generated operator id.
        #[arg(long)]
        operator: Option<String>,
        /// Override the generated trial id.
        #[arg(long)]
        trial_id: Option<String>,
        /// Extra archetype definitions (JSON array); names here shadow the
        /// built-ins.
        #[arg(long)]
        archetypes: Option<PathBuf>,
        /// Model-parameter override JSON merged onto the defaults.
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Replay one trial through the trust pipeline into a trace CSV.
    Estimate {
        /// Input trial file.
        #[arg(long)]
        trial: PathBuf,
        /// Output trace CSV.
        #[arg(long)]
        out: PathBuf,
        /// Also write a polyline plot of short-term trust.
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Replay paced against the wall clock at this rate (1.0 = real
        /// time). Pacing never changes the bytes written.
        #[arg(long)]
        paced: Option<f64>,
        /// Model-parameter override JSON merged onto the trial's stored
        /// parameters.
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Estimate every *.trial file in a directory and write ranking.csv,
    /// traces, and operator profiles.
    Rank {
        /// Directory of *.trial files.
        #[arg(long)]
        trials: PathBuf,
        /// Output directory for ranking.csv and per-trial traces.
        #[arg(long)]
        out: PathBuf,
        /// Model-parameter override JSON merged onto each trial's stored
        /// parameters.
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Kendall tau-b between two ranking CSVs.
    Eval {
        /// CSV with operator_id and trust_rank (or rank) columns.
        #[arg(long)]
        ranking: PathBuf,
        /// CSV with operator_id and capability_rank (or rank) columns.
        #[arg(long)]
        capability: PathBuf,
    },
}

struct Failure {
    code: u8,
    message: String,
}

fn data_error(e: impl Display) -> Failure {
    Failure {
        code: EXIT_DATA,
        message: e.to_string(),
    }
}

fn config_error(e: impl Display) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        message: e.to_string(),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Simulate {
            task,
            archetype,
            seed,
            out,
            operator,
            trial_id,
            archetypes,
            params,
        } => cmd_simulate(task, archetype, seed, out, operator, trial_id, archetypes, params),
        Command::Estimate {
            trial,
            out,
            svg,
            paced,
            params,
        } => cmd_estimate(trial, out, svg, paced, params),
        Command::Rank { trials, out, params } => cmd_rank(trials, out, params),
        Command::Eval { ranking, capability } => cmd_eval(ranking, capability),
    }
}

/// Read a parameter-override file and echo the merged parameters to stderr.
fn apply_params_override(
    base: &attune_core::ModelParams,
    path: Option<&Path>,
) -> Result<attune_core::ModelParams, Failure> {
    let Some(path) = path else {
        return Ok(base.clone());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| config_error(format!("cannot read params file {}: {e}", path.display())))?;
    let merged = base
        .with_overrides(&text)
        .map_err(|e| config_error(format!("invalid params override: {e}")))?;
    eprintln!(
        "effective parameters: {}",
        serde_json::to_string(&merged).expect("params serialize")
    );
    Ok(merged)
}

fn read_override_text(path: Option<&Path>) -> Result<Option<String>, Failure> {
    match path {
        None => Ok(None),
        Some(p) => fs::read_to_string(p)
            .map(Some)
            .map_err(|e| config_error(format!("cannot read params file {}: {e}", p.display()))),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    task_path: Option<PathBuf>,
    archetype_name: String,
    seed: u64,
    out: PathBuf,
    operator: Option<String>,
    trial_id: Option<String>,
    archetypes_path: Option<PathBuf>,
    params_path: Option<PathBuf>,
) -> Result<u8, Failure> {
    let mut task = match &task_path {
        Some(path) => TaskConfig::from_json_file(path).map_err(config_error)?,
        None => simulator::default_task(),
    };
    task.params = apply_params_override(&task.params, params_path.as_deref())?;
    task.validate().map_err(config_error)?;

    let extra = match &archetypes_path {
        Some(path) => simulator::load_archetypes(path).map_err(config_error)?,
        None => Vec::new(),
    };
    let archetype = extra
        .iter()
        .find(|a| a.name == archetype_name)
        .cloned()
        .or_else(|| Archetype::builtin(&archetype_name));
    let Some(archetype) = archetype else {
        let mut names: Vec<String> = extra.iter().map(|a| a.name.clone()).collect();
        names.extend(Archetype::builtin_names().iter().map(|s| s.to_string()));
        return Err(config_error(format!(
            "unknown archetype `{archetype_name}`; available: {}",
            names.join(", ")
        )));
    };

    let (mut meta, records) = simulator::generate_trial(&task, &archetype, seed).map_err(|e| {
        match e {
            simulator::SimulatorError::GoalInsideObstacle { .. }
            | simulator::SimulatorError::InvalidArchetype { .. }
            | simulator::SimulatorError::Task(_) => config_error(e),
            other => data_error(other),
        }
    })?;
    if let Some(operator) = operator {
        meta.operator_id = operator;
    }
    if let Some(trial_id) = trial_id {
        meta.trial_id = trial_id;
    }
    write_trial(&out, &meta, &task, &records).map_err(data_error)?;
    println!(
        "wrote {} ({} records, operator {})",
        out.display(),
        records.len(),
        meta.operator_id
    );
    Ok(0)
}

fn cmd_estimate(
    trial: PathBuf,
    out: PathBuf,
    svg: Option<PathBuf>,
    paced: Option<f64>,
    params_path: Option<PathBuf>,
) -> Result<u8, Failure> {
    if let Some(rate) = paced {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(config_error(format!(
                "--paced rate must be finite and positive, got {rate}"
            )));
        }
    }
    let (meta, task, records) = read_trial(&trial).map_err(data_error)?;
    let mut task = task;
    task.params = apply_params_override(&task.params, params_path.as_deref())?;
    task.params.validate().map_err(config_error)?;

    // Pacing sleeps between yields but cannot change the bytes written.
    let estimate = match paced {
        None => estimate_records(meta, task, records).map_err(data_error)?,
        Some(rate) => {
            let collected: Vec<_> = records
                .collect::<Result<Vec<_>, _>>()
                .map_err(data_error)?;
            let stream = replay(collected, Pacing::Paced { rate });
            estimate_records(meta, task, stream.map(Ok)).map_err(data_error)?
        }
    };

    evaluation::write_trace_csv(&out, &estimate.samples)
        .map_err(|e| data_error(format!("cannot write {}: {e}", out.display())))?;
    if let Some(svg_path) = &svg {
        evaluation::write_trace_svg(svg_path, &estimate.samples)
            .map_err(|e| data_error(format!("cannot write {}: {e}", svg_path.display())))?;
    }
    let mean = match estimate.mean_short_term_trust {
        Some(m) => m.to_string(),
        None => "absent".to_string(),
    };
    eprintln!(
        "operator={} mean_trust={} stcf={} incidents={} collisions, {} goals",
        estimate.meta.operator_id, mean, estimate.stcf, estimate.collisions, estimate.goals_inspected
    );
    Ok(0)
}

fn cmd_rank(trials: PathBuf, out: PathBuf, params_path: Option<PathBuf>) -> Result<u8, Failure> {
    let override_text = read_override_text(params_path.as_deref())?;
    if let Some(text) = &override_text {
        // Validate the override early and echo the defaults-merged view.
        let merged = attune_core::ModelParams::default()
            .with_overrides(text)
            .map_err(|e| config_error(format!("invalid params override: {e}")))?;
        eprintln!(
            "effective parameters (over defaults): {}",
            serde_json::to_string(&merged).expect("params serialize")
        );
    }
    let profiles_dir = match std::env::var_os(PROFILES_DIR_ENV) {
        Some(dir) => PathBuf::from(dir),
        None => out.join("profiles"),
    };
    let store = ProfileStore::open(&profiles_dir)
        .map_err(|e| data_error(format!("cannot open profiles dir: {e}")))?;
    let outcome =
        evaluation::report_with(&trials, &out, &store, override_text.as_deref())
            .map_err(data_error)?;
    for (path, reason) in &outcome.skipped {
        eprintln!("skipped {}: {reason}", path.display());
    }
    println!(
        "wrote {} ({} operators)",
        out.join("ranking.csv").display(),
        outcome.report.rows.len()
    );
    match outcome.report.agreement {
        Some(tau) => println!("kendall_tau_b={tau:.4}"),
        None => println!("kendall_tau_b=undefined"),
    }
    if outcome.skipped.is_empty() {
        Ok(0)
    } else {
        Ok(EXIT_PARTIAL)
    }
}

/// Parse `operator_id` plus a rank column out of a ranking CSV.
fn read_ranking_csv(path: &Path, preferred: &[&str]) -> Result<Vec<(String, f64)>, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| data_error(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| data_error(format!("{}: empty file", path.display())))?;
    let columns: Vec<&str> = header.split(',').collect();
    let id_col = columns
        .iter()
        .position(|c| *c == "operator_id")
        .ok_or_else(|| data_error(format!("{}: no operator_id column", path.display())))?;
    let rank_col = preferred
        .iter()
        .find_map(|name| columns.iter().position(|c| c == name))
        .ok_or_else(|| {
            data_error(format!(
                "{}: none of the rank columns {:?} present",
                path.display(),
                preferred
            ))
        })?;
    let mut out = Vec::new();
    for (line_no, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() {
            return Err(data_error(format!(
                "{}: line {}: expected {} fields, got {}",
                path.display(),
                line_no + 2,
                columns.len(),
                fields.len()
            )));
        }
        let rank: f64 = fields[rank_col].parse().map_err(|e| {
            data_error(format!(
                "{}: line {}: bad rank `{}`: {e}",
                path.display(),
                line_no + 2,
                fields[rank_col]
            ))
        })?;
        out.push((fields[id_col].to_string(), rank));
    }
    Ok(out)
}

fn cmd_eval(ranking: PathBuf, capability: PathBuf) -> Result<u8, Failure> {
    let first = read_ranking_csv(&ranking, &["trust_rank", "rank"])?;
    let second = read_ranking_csv(&capability, &["capability_rank", "rank"])?;
    let tau = rank_agreement(&first, &second).map_err(data_error)?;
    match tau {
        Some(tau) => println!("{tau:.4}"),
        None => println!("undefined"),
    }
    Ok(0)
}
