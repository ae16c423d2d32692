use super::{Circuit, CircuitError, GateOp, Wire};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKind {
    Gate(GateOp),
    /// Input `i`, 1-based; owned by player `i - 1`.
    Input(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: usize,
    pub kind: NodeKind,
    /// Source nodes in wire order; a node may repeat.
    pub children: Vec<usize>,
    /// Distinct consumers.
    pub parents: Vec<usize>,
    pub height: usize,
}

/// Communication graph: gate nodes `1..=m`, input nodes `m+1..=m+n`, with
/// an edge for every wire. Node 1 is the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateGraph {
    pub gates: usize,
    pub inputs: usize,
    nodes: Vec<Node>,
}

impl GateGraph {
    pub fn build(circuit: &Circuit, players: usize) -> Result<Self, CircuitError> {
        if circuit.inputs != players {
            return Err(CircuitError::InputCountMismatch { circuit: circuit.inputs, players });
        }
        let m = circuit.gate_count();
        let node_of = |w: &Wire| match *w {
            Wire::Input(i) => m + i,
            Wire::Gate(g) => g,
        };
        let mut nodes: Vec<Node> = circuit
            .gates
            .iter()
            .enumerate()
            .map(|(i, g)| Node {
                id: i + 1,
                kind: NodeKind::Gate(g.op.clone()),
                children: g.sources.iter().map(node_of).collect(),
                parents: Vec::new(),
                height: 0,
            })
            .collect();
        nodes.extend((1..=players).map(|i| Node {
            id: m + i,
            kind: NodeKind::Input(i),
            children: Vec::new(),
            parents: Vec::new(),
            height: 0,
        }));
        for &g in circuit.topological_order() {
            let h = 1 + nodes[g - 1].children.iter().map(|&c| nodes[c - 1].height).max().unwrap_or(0);
            nodes[g - 1].height = h;
            for c in nodes[g - 1].children.clone() {
                if !nodes[c - 1].parents.contains(&g) {
                    nodes[c - 1].parents.push(g);
                }
            }
        }
        Ok(GateGraph { gates: m, inputs: players, nodes })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Node by 1-based id.
    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id - 1]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> usize {
        1
    }

    pub fn input_node(&self, input: usize) -> usize {
        self.gates + input
    }

    pub fn root_height(&self) -> usize {
        self.nodes[0].height
    }

    pub fn is_gate(&self, id: usize) -> bool {
        id <= self.gates
    }

    /// Gate nodes of the given height, ascending id.
    pub fn gates_at_height(&self, h: usize) -> Vec<usize> {
        self.nodes[..self.gates].iter().filter(|n| n.height == h).map(|n| n.id).collect()
    }

    pub fn max_height(&self) -> usize {
        self.nodes.iter().map(|n| n.height).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse_circuit;

    #[test]
    fn single_gate_two_inputs() {
        let c = parse_circuit("input 1\ninput 2\ngate 1 add x1 x2\n", 2).unwrap();
        let g = GateGraph::build(&c, 2).unwrap();
        assert_eq!(g.len(), 3);
        assert_eq!(g.root_height(), 1);
        assert_eq!(g.node(2).parents, vec![1]);
    }

    #[test]
    fn balanced_tree_height_three() {
        let mut t = String::new();
        for i in 1..=8 {
            t.push_str(&format!("input {i}\n"));
        }
        t.push_str("gate 1 mul g2 g3\ngate 2 add g4 g5\ngate 3 add g6 g7\n");
        t.push_str("gate 4 add x1 x2\ngate 5 add x3 x4\ngate 6 add x5 x6\ngate 7 add x7 x8\n");
        let g = GateGraph::build(&parse_circuit(&t, 2).unwrap(), 8).unwrap();
        assert_eq!(g.root_height(), 3);
        assert_eq!(g.len(), 15);
        assert_eq!(g.gates_at_height(2), vec![2, 3]);
        assert_eq!(g.node(g.input_node(1)).height, 0);
    }

    #[test]
    fn shared_subexpression_has_two_parents() {
        let t = "input 1\ninput 2\ngate 1 mul g2 g3\ngate 2 add g4 x1\ngate 3 add g4 x2\ngate 4 mul x1 x2\n";
        let g = GateGraph::build(&parse_circuit(t, 2).unwrap(), 2).unwrap();
        assert_eq!(g.node(4).parents, vec![2, 3]);
        assert_eq!(g.root_height(), 3);
    }

    #[test]
    fn input_count_must_match_players() {
        let c = parse_circuit("input 1\ninput 2\ngate 1 add x1 x2\n", 2).unwrap();
        assert_eq!(GateGraph::build(&c, 3), Err(CircuitError::InputCountMismatch { circuit: 2, players: 3 }));
    }
}
