use std::collections::BTreeMap;

use super::{Circuit, CircuitError, Gate, GateOp, Wire};

fn err(line: usize, message: impl Into<String>) -> CircuitError {
    CircuitError::ParseError { line, message: message.into() }
}

fn parse_index(tok: &str, line: usize) -> Result<usize, CircuitError> {
    tok.parse::<usize>().ok().filter(|&v| v >= 1).ok_or_else(|| err(line, format!("expected a positive index, got `{tok}`")))
}

fn parse_wire(tok: &str, line: usize) -> Result<Wire, CircuitError> {
    if let Some(rest) = tok.strip_prefix('x') {
        return Ok(Wire::Input(parse_index(rest, line)?));
    }
    if let Some(rest) = tok.strip_prefix('g') {
        return Ok(Wire::Gate(parse_index(rest, line)?));
    }
    Err(err(line, format!("expected a source like x3 or g2, got `{tok}`")))
}

/// Parses netlist text (see the module docs) with fan-in/fan-out limit `k_max`.
pub fn parse_circuit(text: &str, k_max: usize) -> Result<Circuit, CircuitError> {
    let mut inputs: BTreeMap<usize, usize> = BTreeMap::new();
    let mut gates: BTreeMap<usize, (usize, Gate)> = BTreeMap::new();
    let mut output: Option<(usize, Wire)> = None;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let toks: Vec<&str> = body.split_whitespace().collect();
        match toks[0] {
            "input" => {
                let [_, idx] = toks[..] else { return Err(err(line, "usage: input <i>")) };
                let idx = parse_index(idx, line)?;
                if inputs.insert(idx, line).is_some() {
                    return Err(err(line, format!("input {idx} declared twice")));
                }
            }
            "gate" => {
                if toks.len() < 4 {
                    return Err(err(line, "usage: gate <id> <add|mul|cmul c> <src>..."));
                }
                let id = parse_index(toks[1], line)?;
                let (op, rest) = match toks[2] {
                    "add" => (GateOp::Add, &toks[3..]),
                    "mul" => (GateOp::Mul, &toks[3..]),
                    "cmul" => {
                        let c = toks[3].parse::<u64>().map_err(|_| err(line, format!("bad constant `{}`", toks[3])))?;
                        (GateOp::CMul(c), &toks[4..])
                    }
                    other => return Err(err(line, format!("unknown gate kind `{other}`"))),
                };
                let sources = rest.iter().map(|t| parse_wire(t, line)).collect::<Result<Vec<_>, _>>()?;
                let arity_ok = match op {
                    GateOp::Add => sources.len() >= 2,
                    GateOp::Mul => sources.len() == 2,
                    GateOp::CMul(_) => sources.len() == 1,
                };
                if !arity_ok {
                    if matches!(op, GateOp::Add) || sources.len() <= k_max {
                        return Err(err(line, format!("gate {id} has the wrong number of sources")));
                    }
                    return Err(CircuitError::FanInExceeded { gate: id, fan_in: sources.len(), limit: k_max });
                }
                if sources.len() > k_max {
                    return Err(CircuitError::FanInExceeded { gate: id, fan_in: sources.len(), limit: k_max });
                }
                if gates.insert(id, (line, Gate { op, sources })).is_some() {
                    return Err(err(line, format!("gate {id} defined twice")));
                }
            }
            "output" => {
                let [_, w] = toks[..] else { return Err(err(line, "usage: output <src>")) };
                let w = match w.parse::<usize>() {
                    Ok(g) => Wire::Gate(g),
                    Err(_) => parse_wire(w, line)?,
                };
                if output.replace((line, w)).is_some() {
                    return Err(err(line, "more than one output"));
                }
            }
            other => return Err(err(line, format!("unknown statement `{other}`"))),
        }
    }

    let n = inputs.len();
    if n == 0 {
        return Err(err(1, "circuit has no inputs"));
    }
    if let Some((&idx, &line)) = inputs.iter().enumerate().find(|(k, (&idx, _))| idx != k + 1).map(|(_, e)| e) {
        return Err(err(line, format!("inputs must be numbered 1..{n}, found {idx}")));
    }
    let m = gates.len();
    if let Some((&id, &(line, _))) = gates.iter().enumerate().find(|(k, (&id, _))| id != k + 1).map(|(_, e)| e) {
        return Err(err(line, format!("gates must be numbered 1..{m}, found {id}")));
    }
    let expected = if m == 0 { Wire::Input(1) } else { Wire::Gate(1) };
    if let Some((line, w)) = output {
        if w != expected {
            return Err(err(line, format!("output must be {expected}")));
        }
    }
    for (line, g) in gates.values() {
        for s in &g.sources {
            let ok = match *s {
                Wire::Input(x) => x <= n,
                Wire::Gate(y) => y <= m,
            };
            if !ok {
                return Err(err(*line, format!("undefined source {s}")));
            }
        }
    }
    Circuit::new(n, gates.into_values().map(|(_, g)| g).collect(), k_max)
}
