//! Scalable secure multiparty computation with quorums, simulated over a
//! synchronous lockstep network with a static Byzantine adversary.

pub mod agreement;
pub mod circuit;
pub mod config;
pub mod decode;
pub mod experiment;
pub mod field;
pub mod hw_mpc;
pub mod poly;
pub mod protocol;
pub mod quorum;
pub mod rng;
pub mod sharing;
pub mod simnet;

pub use circuit::{parse_circuit, random_circuit, Circuit, CircuitError, GateOp};
pub use config::{ConfigError, InputSpec, RunConfig, SweepAxis};
pub use experiment::{run_experiment, Experiment, ExperimentError, RepReport, Verdict};
pub use field::{Fe, Field};
pub use protocol::{run_protocol, ProtocolError, ProtocolParams, RunOutcome, Schedule};
pub use quorum::QuorumTable;
pub use simnet::{AdversaryStrategy, Behavior, Phase, PlayerId, RunMetrics, Summary, Transcript};
