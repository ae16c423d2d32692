//! Run configuration: a flat `key = value` text file.
//!
//! ```text
//! # comment
//! players = 8
//! circuit = example.circuit    # path relative to the config file
//! prime = 101
//! bad_fraction = 0.125
//! adversary = equivocate
//! adversary.mask_generation = silent
//! ```
//!
//! Without `circuit`, a random circuit with `gates` gates and depth at most
//! `depth` is generated from the seed.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::field::{Fe, Field, MERSENNE_61};
use crate::quorum::quorum_size;
use crate::simnet::{AdversaryStrategy, Behavior, Phase, PlayerId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{path}:{line}: {message}")]
    Syntax { path: String, line: usize, message: String },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

/// How player inputs are chosen.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputSpec {
    Random,
    Values(Vec<u64>),
}

/// Fully resolved configuration; every key has a value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub players: usize,
    pub circuit: Option<PathBuf>,
    pub gates: usize,
    pub depth: usize,
    pub fan_limit: usize,
    pub prime: u64,
    pub quorum_multiplier: f64,
    /// Resolved quorum size.
    pub quorum_size: usize,
    /// Size set explicitly in the file, kept when `players` changes.
    pub quorum_size_override: Option<usize>,
    pub epsilon: f64,
    pub bad_fraction: f64,
    pub bad_players: Option<Vec<PlayerId>>,
    pub adversary: Behavior,
    pub adversary_phases: BTreeMap<Phase, Behavior>,
    pub inputs: InputSpec,
    pub default_input: u64,
    pub seed: u64,
    pub repetitions: usize,
    pub formation_retries: usize,
    pub out_dir: PathBuf,
    pub transcript: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            players: 8,
            circuit: None,
            gates: 8,
            depth: 6,
            fan_limit: crate::circuit::DEFAULT_K_MAX,
            prime: MERSENNE_61,
            quorum_multiplier: 2.0,
            quorum_size: 0,
            quorum_size_override: None,
            epsilon: 0.05,
            bad_fraction: 0.0,
            bad_players: None,
            adversary: Behavior::Honest,
            adversary_phases: BTreeMap::new(),
            inputs: InputSpec::Random,
            default_input: 0,
            seed: 1,
            repetitions: 1,
            formation_retries: 1,
            out_dir: PathBuf::from("out"),
            transcript: true,
        }
    }
}

/// Parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepAxis {
    #[serde(rename = "n")]
    Players,
    #[serde(rename = "m")]
    Gates,
    #[serde(rename = "bad-fraction")]
    BadFraction,
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::Players => "n",
            SweepAxis::Gates => "m",
            SweepAxis::BadFraction => "bad-fraction",
        })
    }
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "n" => Ok(SweepAxis::Players),
            "m" => Ok(SweepAxis::Gates),
            "bad-fraction" => Ok(SweepAxis::BadFraction),
            _ => Err(format!("unknown axis `{s}` (expected n, m or bad-fraction)")),
        }
    }
}

fn list<T: FromStr>(v: &str) -> Option<Vec<T>> {
    v.split(',').map(|s| s.trim()).filter(|s| !s.is_empty()).map(|s| s.parse().ok()).collect()
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
        let mut cfg = Self::parse(&text, &path.display().to_string())?;
        if let Some(c) = &cfg.circuit {
            if c.is_relative() {
                cfg.circuit = Some(path.parent().unwrap_or(Path::new(".")).join(c));
            }
        }
        Ok(cfg)
    }

    /// Parses and validates; `origin` names the source in errors.
    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |message: String| ConfigError::Syntax { path: origin.to_string(), line: i + 1, message };
            let (key, value) = line.split_once('=').ok_or_else(|| syntax("expected `key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| syntax(format!("`{key}` expects {what}, got `{value}`"));
            macro_rules! num {
                ($what:expr) => {
                    value.parse().map_err(|_| bad($what))?
                };
            }
            match key {
                "players" | "n" => cfg.players = num!("an integer"),
                "circuit" => cfg.circuit = Some(PathBuf::from(value)),
                "gates" | "m" => cfg.gates = num!("an integer"),
                "depth" => cfg.depth = num!("an integer"),
                "fan_limit" => cfg.fan_limit = num!("an integer"),
                "prime" | "p" => cfg.prime = num!("an integer"),
                "quorum_multiplier" => cfg.quorum_multiplier = num!("a number"),
                "quorum_size" => cfg.quorum_size_override = Some(num!("an integer")),
                "epsilon" => cfg.epsilon = num!("a number"),
                "bad_fraction" => cfg.bad_fraction = num!("a number"),
                "bad_players" => cfg.bad_players = Some(list(value).ok_or_else(|| bad("a list of player ids"))?),
                "adversary" => cfg.adversary = value.parse().map_err(|_| bad("a strategy name"))?,
                "inputs" => {
                    cfg.inputs = if value == "random" {
                        InputSpec::Random
                    } else {
                        InputSpec::Values(list(value).ok_or_else(|| bad("`random` or a list of integers"))?)
                    }
                }
                "default_input" => cfg.default_input = num!("an integer"),
                "seed" => cfg.seed = num!("an integer"),
                "repetitions" => cfg.repetitions = num!("an integer"),
                "formation_retries" => cfg.formation_retries = num!("an integer"),
                "out_dir" => cfg.out_dir = PathBuf::from(value),
                "transcript" => cfg.transcript = num!("true or false"),
                k if k.starts_with("adversary.") => {
                    let name = &k["adversary.".len()..];
                    let phase = Phase::ALL.into_iter().find(|p| p.name() == name).ok_or_else(|| syntax(format!("unknown phase `{name}`")))?;
                    cfg.adversary_phases.insert(phase, value.parse().map_err(|_| bad("a strategy name"))?);
                }
                _ => return Err(syntax(format!("unknown key `{key}`"))),
            }
        }
        cfg.resolve();
        cfg.validate(origin)?;
        Ok(cfg)
    }

    /// Recomputes derived values after a field changed.
    pub fn resolve(&mut self) {
        self.quorum_size = self.quorum_size_override.unwrap_or_else(|| quorum_size(self.players, self.quorum_multiplier));
    }

    /// Sets one sweep coordinate and re-validates.
    pub fn with_axis(&self, axis: SweepAxis, value: f64, origin: &str) -> Result<Self, ConfigError> {
        let mut c = self.clone();
        let whole = || {
            if value >= 0.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(ConfigError::Invalid { path: origin.to_string(), message: format!("{axis} needs whole values, got {value}") })
            }
        };
        match axis {
            SweepAxis::Players => c.players = whole()?,
            SweepAxis::Gates => c.gates = whole()?,
            SweepAxis::BadFraction => c.bad_fraction = value,
        }
        c.resolve();
        c.validate(origin)?;
        Ok(c)
    }

    pub fn validate(&self, origin: &str) -> Result<(), ConfigError> {
        let invalid = |message: String| Err(ConfigError::Invalid { path: origin.to_string(), message });
        if self.players < 4 {
            return invalid(format!("need at least 4 players, got {}", self.players));
        }
        if !(0.0..1.0 / 3.0).contains(&self.epsilon) {
            return invalid(format!("epsilon {} must be in [0, 1/3)", self.epsilon));
        }
        let limit = 1.0 / 3.0 - self.epsilon;
        if !(0.0..=limit + 1e-12).contains(&self.bad_fraction) {
            return invalid(format!("bad fraction {} exceeds 1/3 - epsilon = {limit:.4}", self.bad_fraction));
        }
        if self.quorum_size < 4 || self.quorum_size > self.players {
            return invalid(format!("quorum size {} must be in 4..={}", self.quorum_size, self.players));
        }
        if Field::new(self.prime).is_err() {
            return invalid(format!("{} is not a supported prime", self.prime));
        }
        if self.prime <= self.quorum_size as u64 {
            return invalid(format!("prime {} must exceed the quorum size {}", self.prime, self.quorum_size));
        }
        if let Some(bad) = &self.bad_players {
            if bad.iter().any(|&p| p >= self.players) {
                return invalid("bad player id out of range".into());
            }
            let distinct: BTreeSet<_> = bad.iter().collect();
            if distinct.len() as f64 > limit * self.players as f64 {
                return invalid(format!("{} bad players exceed 1/3 - epsilon of {}", distinct.len(), self.players));
            }
        }
        if let InputSpec::Values(v) = &self.inputs {
            if v.len() != self.players {
                return invalid(format!("{} inputs for {} players", v.len(), self.players));
            }
        }
        if self.circuit.is_none() && !crate::circuit::random_circuit_fits(self.players, self.gates, self.depth) {
            return invalid(format!(
                "{} gates do not fit depth {} over {} inputs with fan-out 2; raise depth",
                self.gates, self.depth, self.players
            ));
        }
        if self.repetitions == 0 || self.depth == 0 || self.fan_limit < 2 {
            return invalid("repetitions and depth must be positive, fan_limit at least 2".into());
        }
        Ok(())
    }

    pub fn field(&self) -> Field {
        Field::new(self.prime).expect("validated")
    }

    /// Seed of repetition `rep`.
    pub fn run_seed(&self, rep: usize) -> u64 {
        self.seed.wrapping_add(rep as u64)
    }

    fn setup_rng(seed: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(u64::MAX);
        rng
    }

    /// Bad set of a run: explicit, or `floor(bad_fraction * n)` players
    /// sampled from the seed.
    pub fn bad_set(&self, seed: u64) -> BTreeSet<PlayerId> {
        if let Some(b) = &self.bad_players {
            return b.iter().copied().collect();
        }
        let k = (self.bad_fraction * self.players as f64 + 1e-9).floor() as usize;
        sample(&mut Self::setup_rng(seed), self.players, k).into_iter().collect()
    }

    pub fn strategy(&self, seed: u64) -> AdversaryStrategy {
        let mut s = AdversaryStrategy::new(self.bad_set(seed), self.adversary, seed);
        for (&p, &b) in &self.adversary_phases {
            s = s.with_phase(p, b);
        }
        s
    }

    pub fn input_values(&self, seed: u64) -> Vec<Fe> {
        let f = self.field();
        match &self.inputs {
            InputSpec::Values(v) => v.iter().map(|&x| f.elem(x)).collect(),
            InputSpec::Random => {
                let mut rng = Self::setup_rng(seed ^ 0x5eed);
                (0..self.players).map(|_| f.sample(&mut rng)).collect()
            }
        }
    }

    /// Renders the resolved configuration back into the file format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| s.push_str(&format!("{k} = {v}\n"));
        kv("players", self.players.to_string());
        if let Some(c) = &self.circuit {
            kv("circuit", c.display().to_string());
        }
        kv("gates", self.gates.to_string());
        kv("depth", self.depth.to_string());
        kv("fan_limit", self.fan_limit.to_string());
        kv("prime", self.prime.to_string());
        kv("quorum_multiplier", self.quorum_multiplier.to_string());
        if let Some(q) = self.quorum_size_override {
            kv("quorum_size", q.to_string());
        }
        kv("epsilon", self.epsilon.to_string());
        kv("bad_fraction", self.bad_fraction.to_string());
        if let Some(b) = &self.bad_players {
            kv("bad_players", b.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(","));
        }
        kv("adversary", self.adversary.to_string());
        for (p, b) in &self.adversary_phases {
            kv(&format!("adversary.{}", p.name()), b.to_string());
        }
        kv(
            "inputs",
            match &self.inputs {
                InputSpec::Random => "random".into(),
                InputSpec::Values(v) => v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","),
            },
        );
        kv("default_input", self.default_input.to_string());
        kv("seed", self.seed.to_string());
        kv("repetitions", self.repetitions.to_string());
        kv("formation_retries", self.formation_retries.to_string());
        kv("out_dir", self.out_dir.display().to_string());
        kv("transcript", self.transcript.to_string());
        s
    }
}
