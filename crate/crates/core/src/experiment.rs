//! Runs a [`RunConfig`]: resolves the circuit, bad set and inputs, then
//! executes every repetition.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::circuit::{parse_circuit, random_circuit, Circuit, CircuitError};
use crate::config::RunConfig;
use crate::field::Fe;
use crate::protocol::{run_protocol, ProtocolParams, RunOutcome};
use crate::simnet::{Phase, Summary};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("reading circuit {path}: {message}")]
    CircuitIo { path: String, message: String },
    #[error("circuit {path}: {source}")]
    Circuit { path: String, source: CircuitError },
    #[error("circuit has {inputs} inputs but the run has {players} players")]
    InputMismatch { inputs: usize, players: usize },
}

/// Outcome of one repetition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// Every good player output the circuit value.
    Correct,
    /// Some good player output a wrong value or nothing.
    Incorrect,
    /// The run stopped with an error.
    Aborted,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseMax {
    pub phase: &'static str,
    pub max_messages: u64,
}

/// Serializable summary of one repetition.
#[derive(Debug, Clone, Serialize)]
pub struct RepReport {
    pub repetition: usize,
    pub seed: u64,
    pub verdict: Verdict,
    pub error: Option<String>,
    pub expected: Option<u64>,
    /// Inputs the computation used; a rejected commitment becomes the default.
    pub committed_inputs: Vec<u64>,
    pub wrong_outputs: usize,
    pub invariants_hold: bool,
    pub leaves_correct: bool,
    pub bad_players: Vec<usize>,
    pub formation_attempts: usize,
    pub rounds: u64,
    pub transcript_hash: Option<String>,
    pub summary: Option<Summary>,
    pub phase_max: Vec<PhaseMax>,
}

/// One repetition with the full outcome when the run completed.
#[derive(Debug)]
pub struct Repetition {
    pub report: RepReport,
    pub outcome: Option<RunOutcome>,
}

pub fn load_circuit(cfg: &RunConfig) -> Result<Circuit, ExperimentError> {
    let circuit = match &cfg.circuit {
        Some(path) => {
            let shown = path.display().to_string();
            let text = std::fs::read_to_string(path)
                .map_err(|e| ExperimentError::CircuitIo { path: shown.clone(), message: e.to_string() })?;
            parse_circuit(&text, cfg.fan_limit).map_err(|source| ExperimentError::Circuit { path: shown, source })?
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(u64::MAX - 1);
            random_circuit(cfg.players, cfg.gates, cfg.depth, cfg.field(), &mut rng)
        }
    };
    if circuit.inputs != cfg.players {
        return Err(ExperimentError::InputMismatch { inputs: circuit.inputs, players: cfg.players });
    }
    Ok(circuit)
}

pub fn params(cfg: &RunConfig) -> ProtocolParams {
    let mut p = ProtocolParams::new(cfg.field(), cfg.quorum_size);
    p.epsilon = cfg.epsilon;
    p.formation_retries = cfg.formation_retries;
    p.default_input = cfg.default_input;
    p.dump_transcript = cfg.transcript;
    p
}

/// Runs repetition `rep` of `cfg` on `circuit`.
pub fn run_repetition(cfg: &RunConfig, circuit: &Circuit, rep: usize) -> Repetition {
    let seed = cfg.run_seed(rep);
    let inputs: Vec<Fe> = cfg.input_values(seed);
    let strategy = cfg.strategy(seed);
    let bad_players: Vec<usize> = strategy.controlled.iter().copied().collect();
    match run_protocol(&params(cfg), circuit, &inputs, strategy, seed) {
        Ok(out) => {
            let verdict = if out.correct() { Verdict::Correct } else { Verdict::Incorrect };
            let report = RepReport {
                repetition: rep,
                seed,
                verdict,
                error: None,
                expected: Some(out.expected.value()),
                committed_inputs: out.committed.iter().map(|x| x.value()).collect(),
                wrong_outputs: out.wrong_outputs(),
                invariants_hold: out.invariants_hold(),
                leaves_correct: out.leaves_correct,
                bad_players,
                formation_attempts: out.formation_attempts,
                rounds: out.rounds,
                transcript_hash: Some(out.transcript.hash_hex()),
                summary: Some(out.metrics.summary.clone()),
                phase_max: Phase::ALL
                    .into_iter()
                    .map(|p| PhaseMax { phase: p.name(), max_messages: out.metrics.phase_max(p) })
                    .collect(),
            };
            Repetition { report, outcome: Some(out) }
        }
        Err(e) => Repetition {
            report: RepReport {
                repetition: rep,
                seed,
                verdict: Verdict::Aborted,
                error: Some(e.to_string()),
                expected: None,
                committed_inputs: Vec::new(),
                wrong_outputs: cfg.players - bad_players.len(),
                invariants_hold: false,
                leaves_correct: false,
                bad_players,
                formation_attempts: 0,
                rounds: 0,
                transcript_hash: None,
                summary: None,
                phase_max: Vec::new(),
            },
            outcome: None,
        },
    }
}

/// All repetitions of a configuration.
#[derive(Debug)]
pub struct Experiment {
    pub circuit: Circuit,
    pub repetitions: Vec<Repetition>,
}

impl Experiment {
    pub fn passed(&self) -> bool {
        self.repetitions.iter().all(|r| r.report.verdict == Verdict::Correct)
    }
}

pub fn run_experiment(cfg: &RunConfig) -> Result<Experiment, ExperimentError> {
    let circuit = load_circuit(cfg)?;
    let repetitions = (0..cfg.repetitions).map(|r| run_repetition(cfg, &circuit, r)).collect();
    Ok(Experiment { circuit, repetitions })
}
