//! Arithmetic circuits over a prime field.
//!
//! Netlist grammar, one statement per line, `#` starts a comment:
//!
//! ```text
//! input <i>                      declare input i (inputs are 1..n)
//! gate <id> add <src> <src> ...  sum of 2..=K sources
//! gate <id> mul <src> <src>      product of two sources
//! gate <id> cmul <c> <src>       constant c times a source
//! output <src>                   must name gate 1 (or x1 if there are no gates)
//! ```
//!
//! A source is `x<i>` for input `i` or `g<id>` for gate `id`. Gate ids are
//! `1..m` and may appear in any order; gate 1 is the output. In the node
//! numbering gates are nodes `1..m` and input `i` is node `m + i`.

mod graph;
mod parse;
mod random;

use thiserror::Error;

pub use graph::{GateGraph, Node, NodeKind};
pub use parse::parse_circuit;
pub use random::{random_circuit, random_circuit_fits};

use crate::field::{Fe, Field};

pub const DEFAULT_K_MAX: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CircuitError {
    #[error("line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("wires form a cycle through gate {0}")]
    CycleDetected(usize),
    #[error("gate {gate} has fan-in {fan_in}, limit is {limit}")]
    FanInExceeded { gate: usize, fan_in: usize, limit: usize },
    #[error("{source_name} feeds {fan_out} gates, limit is {limit}")]
    FanOutExceeded { source_name: String, fan_out: usize, limit: usize },
    #[error("circuit has {circuit} inputs but there are {players} players")]
    InputCountMismatch { circuit: usize, players: usize },
}

/// A wire source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Wire {
    /// Input `i`, 1-based.
    Input(usize),
    /// Gate `id`, 1-based.
    Gate(usize),
}

impl std::fmt::Display for Wire {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Wire::Input(i) => write!(f, "x{i}"),
            Wire::Gate(g) => write!(f, "g{g}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GateOp {
    Add,
    Mul,
    /// Multiply by a constant, stored as a canonical residue.
    CMul(u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gate {
    pub op: GateOp,
    pub sources: Vec<Wire>,
}

/// A validated circuit: `gates[id - 1]`, topological order in `order`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    pub inputs: usize,
    pub gates: Vec<Gate>,
    pub k_max: usize,
    order: Vec<usize>,
}

impl Circuit {
    /// Validates structure and fixes a topological order.
    pub fn new(inputs: usize, gates: Vec<Gate>, k_max: usize) -> Result<Self, CircuitError> {
        let m = gates.len();
        let mut fan_out_in = vec![0usize; inputs + 1];
        let mut fan_out_g = vec![0usize; m + 1];
        for (i, g) in gates.iter().enumerate() {
            let id = i + 1;
            let arity_ok = match g.op {
                GateOp::Add => g.sources.len() >= 2,
                GateOp::Mul => g.sources.len() == 2,
                GateOp::CMul(_) => g.sources.len() == 1,
            };
            if g.sources.len() > k_max {
                return Err(CircuitError::FanInExceeded { gate: id, fan_in: g.sources.len(), limit: k_max });
            }
            if !arity_ok {
                return Err(CircuitError::ParseError { line: 0, message: format!("gate {id} has the wrong number of sources") });
            }
            for s in &g.sources {
                match *s {
                    Wire::Input(x) if x >= 1 && x <= inputs => fan_out_in[x] += 1,
                    Wire::Gate(y) if y >= 1 && y <= m => fan_out_g[y] += 1,
                    w => return Err(CircuitError::ParseError { line: 0, message: format!("gate {id} uses undefined source {w}") }),
                }
            }
        }
        for (x, &c) in fan_out_in.iter().enumerate().skip(1) {
            if c > k_max {
                return Err(CircuitError::FanOutExceeded { source_name: format!("x{x}"), fan_out: c, limit: k_max });
            }
        }
        for (y, &c) in fan_out_g.iter().enumerate().skip(1) {
            if c > k_max {
                return Err(CircuitError::FanOutExceeded { source_name: format!("g{y}"), fan_out: c, limit: k_max });
            }
        }
        let order = topo_order(&gates)?;
        Ok(Circuit { inputs, gates, k_max, order })
    }

    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    /// Gate ids (1-based) with every gate after its sources.
    pub fn topological_order(&self) -> &[usize] {
        &self.order
    }

    /// Value of every node, indexed by node id - 1 (gates, then inputs).
    pub fn eval_nodes(&self, inputs: &[Fe]) -> Vec<Fe> {
        assert_eq!(inputs.len(), self.inputs, "wrong number of inputs");
        let field = inputs[0].field();
        let m = self.gates.len();
        let mut vals = vec![field.zero(); m + self.inputs];
        vals[m..].copy_from_slice(inputs);
        for &id in &self.order {
            let g = &self.gates[id - 1];
            let src = |w: &Wire| match *w {
                Wire::Input(i) => vals[m + i - 1],
                Wire::Gate(j) => vals[j - 1],
            };
            let v = match g.op {
                GateOp::Add => g.sources.iter().fold(field.zero(), |a, w| a + src(w)),
                GateOp::Mul => src(&g.sources[0]) * src(&g.sources[1]),
                GateOp::CMul(c) => field.elem(c) * src(&g.sources[0]),
            };
            vals[id - 1] = v;
        }
        vals
    }

    /// The output value: gate 1, or input 1 for a gate-less circuit.
    pub fn eval_plain(&self, inputs: &[Fe]) -> Fe {
        self.eval_nodes(inputs)[0]
    }

    /// Renders the circuit back into netlist text.
    pub fn to_netlist(&self) -> String {
        let mut s = String::new();
        for i in 1..=self.inputs {
            s.push_str(&format!("input {i}\n"));
        }
        for (i, g) in self.gates.iter().enumerate() {
            let op = match g.op {
                GateOp::Add => "add".to_string(),
                GateOp::Mul => "mul".to_string(),
                GateOp::CMul(c) => format!("cmul {c}"),
            };
            let srcs: Vec<String> = g.sources.iter().map(|w| w.to_string()).collect();
            s.push_str(&format!("gate {} {} {}\n", i + 1, op, srcs.join(" ")));
        }
        s.push_str(if self.gates.is_empty() { "output x1\n" } else { "output g1\n" });
        s
    }

    /// Checks that constants are canonical for `field`.
    pub fn fits(&self, field: Field) -> bool {
        self.gates.iter().all(|g| !matches!(g.op, GateOp::CMul(c) if c >= field.modulus()))
    }
}

fn topo_order(gates: &[Gate]) -> Result<Vec<usize>, CircuitError> {
    // 0 = unvisited, 1 = on stack, 2 = done
    let m = gates.len();
    let mut state = vec![0u8; m + 1];
    let mut order = Vec::with_capacity(m);
    for root in 1..=m {
        if state[root] != 0 {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        state[root] = 1;
        while let Some(&mut (id, ref mut next)) = stack.last_mut() {
            let srcs = &gates[id - 1].sources;
            if *next < srcs.len() {
                let w = srcs[*next];
                *next += 1;
                if let Wire::Gate(c) = w {
                    match state[c] {
                        0 => {
                            state[c] = 1;
                            stack.push((c, 0));
                        }
                        1 => return Err(CircuitError::CycleDetected(c)),
                        _ => {}
                    }
                }
            } else {
                state[id] = 2;
                order.push(id);
                stack.pop();
            }
        }
    }
    Ok(order)
}
