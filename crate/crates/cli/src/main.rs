//! `qmpc`: runs the quorum MPC simulation from a config file.
//!
//! Exit status: 0 when every run output the correct value, 1 when some run
//! failed, 2 on configuration or I/O errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use qmpc_core::experiment::{load_circuit, run_repetition, Repetition};
use qmpc_core::{Phase, RepReport, RunConfig, SweepAxis, Verdict};

#[derive(Parser)]
#[command(name = "qmpc", version, about = "Quorum-based secure multiparty computation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every repetition of one configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Vary one parameter and tabulate per-player costs.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// n, m or bad-fraction
        #[arg(long)]
        axis: SweepAxis,
        /// Comma separated values of the axis.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Base seed; repetition r uses seed + r.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides `out_dir` from the config).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Serialize)]
struct RunFile<'a> {
    config: &'a RunConfig,
    circuit: String,
    passed: bool,
    failures: usize,
    repetitions: Vec<&'a RepReport>,
}

#[derive(Serialize)]
struct SweepPoint<'a> {
    value: f64,
    config: RunConfig,
    passed: bool,
    repetitions: Vec<&'a RepReport>,
}

#[derive(Serialize)]
struct SweepFile<'a> {
    config: &'a RunConfig,
    axis: SweepAxis,
    passed: bool,
    points: Vec<SweepPoint<'a>>,
}

#[derive(Serialize)]
struct CsvRow {
    axis_value: f64,
    seed: u64,
    max_messages: Option<u64>,
    median_messages: Option<f64>,
    max_field_ops: Option<u64>,
    gate_phase_max_messages: Option<u64>,
    verdict: Verdict,
    error: String,
}

fn load(path: &Path, common: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(d) = &common.out_dir {
        cfg.out_dir = d.clone();
    }
    Ok(cfg)
}

fn run_all(cfg: &RunConfig) -> Result<(String, Vec<Repetition>)> {
    let circuit = load_circuit(cfg)?;
    let reps = (0..cfg.repetitions).map(|r| run_repetition(cfg, &circuit, r)).collect();
    Ok((circuit.to_netlist(), reps))
}

fn transcript_section(label: &str, rep: &Repetition) -> String {
    let mut s = format!("# {label} seed {} verdict {:?}", rep.report.seed, rep.report.verdict);
    match &rep.outcome {
        Some(out) => {
            s.push_str(&format!(" hash {} messages {}\n", out.transcript.hash_hex(), out.transcript.message_count()));
            s.push_str(&out.transcript.dump());
        }
        None => s.push_str(&format!(" error {}\n", rep.report.error.as_deref().unwrap_or(""))),
    }
    s
}

fn write_json(dir: &Path, value: &impl Serialize) -> Result<()> {
    let path = dir.join("metrics.json");
    fs::write(&path, serde_json::to_string_pretty(value)? + "\n").with_context(|| format!("writing {}", path.display()))
}

fn run(cfg: RunConfig) -> Result<bool> {
    let (netlist, reps) = run_all(&cfg)?;
    fs::create_dir_all(&cfg.out_dir).with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    let failures = reps.iter().filter(|r| r.report.verdict != Verdict::Correct).count();
    let passed = failures == 0;
    write_json(
        &cfg.out_dir,
        &RunFile { config: &cfg, circuit: netlist, passed, failures, repetitions: reps.iter().map(|r| &r.report).collect() },
    )?;
    let log: String = reps.iter().map(|r| transcript_section(&format!("repetition {}", r.report.repetition), r)).collect();
    fs::write(cfg.out_dir.join("transcript.log"), log)?;
    for r in &reps {
        let rep = &r.report;
        match &rep.error {
            Some(e) => println!("seed {}: aborted: {e}", rep.seed),
            None => println!(
                "seed {}: {:?}, expected {}, max messages {}",
                rep.seed,
                rep.verdict,
                rep.expected.unwrap_or_default(),
                rep.summary.as_ref().map_or(0, |s| s.max_messages)
            ),
        }
    }
    println!("{} of {} runs correct; results in {}", reps.len() - failures, reps.len(), cfg.out_dir.display());
    Ok(passed)
}

fn sweep(cfg: RunConfig, axis: SweepAxis, values: &[f64], origin: &str) -> Result<bool> {
    // every derived configuration must be valid before anything runs
    let points: Vec<(f64, RunConfig)> =
        values.iter().map(|&v| Ok((v, cfg.with_axis(axis, v, origin)?))).collect::<Result<_>>()?;
    fs::create_dir_all(&cfg.out_dir).with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    let mut results = Vec::with_capacity(points.len());
    for (v, c) in points {
        let reps = match run_all(&c) {
            Ok((_, reps)) => reps,
            Err(e) => anyhow::bail!("{axis} = {v}: {e}"),
        };
        results.push((v, c, reps));
    }

    let mut csv = csv::Writer::from_path(cfg.out_dir.join("sweep.csv"))?;
    let mut log = String::new();
    for (v, _, reps) in &results {
        for r in reps {
            let s = r.report.summary.as_ref();
            csv.serialize(CsvRow {
                axis_value: *v,
                seed: r.report.seed,
                max_messages: s.map(|s| s.max_messages),
                median_messages: s.map(|s| s.median_messages),
                max_field_ops: s.map(|s| s.max_field_ops),
                gate_phase_max_messages: r.outcome.as_ref().map(|o| o.metrics.phase_max(Phase::GateComputation)),
                verdict: r.report.verdict,
                error: r.report.error.clone().unwrap_or_default(),
            })?;
            log.push_str(&transcript_section(&format!("{axis} = {v}"), r));
        }
    }
    csv.flush()?;
    fs::write(cfg.out_dir.join("transcript.log"), log)?;

    let passed = results.iter().all(|(_, _, reps)| reps.iter().all(|r| r.report.verdict == Verdict::Correct));
    let file = SweepFile {
        config: &cfg,
        axis,
        passed,
        points: results
            .iter()
            .map(|(v, c, reps)| SweepPoint {
                value: *v,
                config: c.clone(),
                passed: reps.iter().all(|r| r.report.verdict == Verdict::Correct),
                repetitions: reps.iter().map(|r| &r.report).collect(),
            })
            .collect(),
    };
    write_json(&cfg.out_dir, &file)?;
    for p in &file.points {
        let failed = p.repetitions.iter().filter(|r| r.verdict != Verdict::Correct).count();
        println!("{axis} = {}: {} runs, {failed} failed", p.value, p.repetitions.len());
    }
    println!("results in {}", cfg.out_dir.display());
    Ok(passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, common } => load(&config, &common).and_then(run),
        Command::Sweep { config, axis, values, common } => {
            load(&config, &common).and_then(|cfg| sweep(cfg, axis, &values, &config.display().to_string()))
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
