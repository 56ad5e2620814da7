//! Quantum programs as lists of two-qubit gates, plus the dependency and
//! commutation structure derived from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A two-qubit gate acting on a pair of distinct program qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub id: usize,
    /// Ordered operand pair (q, q').
    pub qubits: (usize, usize),
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<f64>,
}

/// A quantum program: an ordered gate list partitioned into commuting groups.
///
/// A group of size 1 means no commutation is exploited for that gate.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub qubit_count: usize,
    pub gates: Vec<Gate>,
    pub commuting_groups: Vec<Vec<usize>>,
}

/// Ordering constraints between gates.
///
/// `precedence` pairs (g, g') require the first gate strictly earlier;
/// `distinct_time` pairs only forbid sharing a time step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DependencyGraph {
    pub precedence: Vec<(usize, usize)>,
    pub distinct_time: Vec<(usize, usize)>,
}

#[derive(Deserialize)]
struct GateFile {
    id: usize,
    q: Vec<usize>,
    #[serde(default)]
    label: Option<String>,
    #[serde(default)]
    params: Option<Vec<f64>>,
}

#[derive(Deserialize)]
struct ProgramFile {
    qubits: usize,
    gates: Vec<GateFile>,
    #[serde(default)]
    commuting_groups: Option<Vec<Vec<usize>>>,
}

/// Parse a program from its JSON file contents.
pub fn parse_program(text: &str) -> Result<Program> {
    let file: ProgramFile =
        serde_json::from_str(text).map_err(|e| Error::MalformedProgram(e.to_string()))?;
    let mut gates = Vec::with_capacity(file.gates.len());
    for (idx, g) in file.gates.into_iter().enumerate() {
        if g.q.len() == 1 {
            return Err(Error::MalformedProgram(format!(
                "gate {} is single-qubit; only two-qubit gates take part in mapping",
                g.id
            )));
        }
        if g.q.len() != 2 {
            return Err(Error::MalformedProgram(format!(
                "gate {} has {} operands, expected 2",
                g.id,
                g.q.len()
            )));
        }
        if g.id != idx {
            return Err(Error::MalformedProgram(format!(
                "gate ids must be dense and in order: found id {} at position {}",
                g.id, idx
            )));
        }
        gates.push(Gate {
            id: g.id,
            qubits: (g.q[0], g.q[1]),
            label: g.label,
            params: g.params.unwrap_or_default(),
        });
    }
    // Default grouping: every gate in its own group (no commutation).
    let groups = file
        .commuting_groups
        .unwrap_or_else(|| (0..gates.len()).map(|i| vec![i]).collect());
    let program = Program {
        qubit_count: file.qubits,
        gates,
        commuting_groups: groups,
    };
    program.validate()?;
    Ok(program)
}

impl Program {
    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    /// Index of the commuting group a gate belongs to.
    pub fn group_of(&self, gate: usize) -> usize {
        self.commuting_groups
            .iter()
            .position(|grp| grp.contains(&gate))
            .expect("validated program covers every gate")
    }

    pub fn validate(&self) -> Result<()> {
        if self.qubit_count < 2 {
            return Err(Error::MalformedProgram(format!(
                "need at least 2 qubits, got {}",
                self.qubit_count
            )));
        }
        for g in &self.gates {
            let (a, b) = g.qubits;
            if a == b {
                return Err(Error::MalformedProgram(format!(
                    "gate {} has duplicate operand q{}",
                    g.id, a
                )));
            }
            if a >= self.qubit_count || b >= self.qubit_count {
                return Err(Error::MalformedProgram(format!(
                    "gate {} operand out of range (|Q|={})",
                    g.id, self.qubit_count
                )));
            }
        }
        // Groups must partition the gate list into contiguous, ordered regions.
        let mut next = 0usize;
        for grp in &self.commuting_groups {
            if grp.is_empty() {
                return Err(Error::MalformedProgram("empty commuting group".into()));
            }
            let mut sorted = grp.clone();
            sorted.sort_unstable();
            for id in &sorted {
                if *id != next {
                    return Err(Error::MalformedProgram(format!(
                        "commuting groups must form a contiguous partition; \
                         expected gate {next}, found {id}"
                    )));
                }
                next += 1;
            }
        }
        if next != self.gates.len() {
            return Err(Error::MalformedProgram(format!(
                "commuting groups cover {} of {} gates",
                next,
                self.gates.len()
            )));
        }
        Ok(())
    }
}

/// Derive ordering constraints from shared qubits.
///
/// Within a multi-gate commuting group, gates sharing a qubit only need
/// distinct times. Across group boundaries, every gate on a qubit precedes
/// every gate on the same qubit in the next group touching it, which chains
/// transitively through the program.
pub fn dependencies(p: &Program) -> DependencyGraph {
    let mut dep = DependencyGraph::default();
    let group_of: Vec<usize> = (0..p.gates.len()).map(|g| p.group_of(g)).collect();
    let group_size: Vec<usize> = p.commuting_groups.iter().map(|g| g.len()).collect();

    // Distinct-time pairs inside multi-gate groups.
    for grp in &p.commuting_groups {
        if grp.len() < 2 {
            continue;
        }
        for (i, &a) in grp.iter().enumerate() {
            for &b in &grp[i + 1..] {
                if shares_qubit(&p.gates[a], &p.gates[b]) {
                    let (lo, hi) = (a.min(b), a.max(b));
                    if !dep.distinct_time.contains(&(lo, hi)) {
                        dep.distinct_time.push((lo, hi));
                    }
                }
            }
        }
    }

    // Precedence between consecutive groups acting on each qubit.
    for q in 0..p.qubit_count {
        let on_q: Vec<usize> = p
            .gates
            .iter()
            .filter(|g| g.qubits.0 == q || g.qubits.1 == q)
            .map(|g| g.id)
            .collect();
        // Partition the per-qubit gate sequence by commuting group; a size-1
        // group never relaxes ordering, so each singleton is its own region.
        let mut regions: Vec<Vec<usize>> = Vec::new();
        for &g in &on_q {
            let relax = group_size[group_of[g]] > 1;
            match regions.last_mut() {
                Some(last)
                    if relax
                        && group_of[*last.last().unwrap()] == group_of[g] =>
                {
                    last.push(g)
                }
                _ => regions.push(vec![g]),
            }
        }
        for w in regions.windows(2) {
            for &a in &w[0] {
                for &b in &w[1] {
                    if !dep.precedence.contains(&(a, b)) {
                        dep.precedence.push((a, b));
                    }
                }
            }
        }
    }
    dep
}

fn shares_qubit(a: &Gate, b: &Gate) -> bool {
    let (a0, a1) = a.qubits;
    let (b0, b1) = b.qubits;
    a0 == b0 || a0 == b1 || a1 == b0 || a1 == b1
}

/// A depth value no optimal solution can beat: the longest precedence chain
/// or the busiest qubit, whichever is larger.
pub fn depth_lower_bound(d: &DependencyGraph, p: &Program) -> usize {
    let n = p.gates.len();
    if n == 0 {
        return 1;
    }
    // Longest path in the precedence DAG, counted in gates.
    let mut adj = vec![Vec::new(); n];
    let mut indeg = vec![0usize; n];
    for &(a, b) in &d.precedence {
        adj[a].push(b);
        indeg[b] += 1;
    }
    let mut depth = vec![1usize; n];
    let mut queue: Vec<usize> = (0..n).filter(|&g| indeg[g] == 0).collect();
    let mut seen = 0;
    while let Some(g) = queue.pop() {
        seen += 1;
        for &h in &adj[g] {
            depth[h] = depth[h].max(depth[g] + 1);
            indeg[h] -= 1;
            if indeg[h] == 0 {
                queue.push(h);
            }
        }
    }
    debug_assert_eq!(seen, n, "precedence graph must be acyclic");
    let chain = depth.iter().copied().max().unwrap_or(1);

    let mut per_qubit = vec![0usize; p.qubit_count];
    for g in &p.gates {
        per_qubit[g.qubits.0] += 1;
        per_qubit[g.qubits.1] += 1;
    }
    let busiest = per_qubit.into_iter().max().unwrap_or(0);
    chain.max(busiest).max(1)
}

/// The ten-gate, five-qubit all-commuting simulation program used throughout
/// the test fixtures.
pub fn chem5_program() -> Program {
    let pairs = [
        (0, 1),
        (0, 2),
        (0, 3),
        (0, 4),
        (1, 2),
        (1, 3),
        (1, 4),
        (2, 3),
        (2, 4),
        (3, 4),
    ];
    Program {
        qubit_count: 5,
        gates: pairs
            .iter()
            .enumerate()
            .map(|(id, &(a, b))| Gate {
                id,
                qubits: (a, b),
                label: Some("fSim".into()),
                params: vec![],
            })
            .collect(),
        commuting_groups: vec![(0..10).collect()],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CHEM5: &str = include_str!("../../../fixtures/chem5.json");

    #[test]
    fn parses_chem5() {
        let p = parse_program(CHEM5).unwrap();
        assert_eq!(p.qubit_count, 5);
        assert_eq!(p.gate_count(), 10);
        assert_eq!(p.commuting_groups.len(), 1);
        assert_eq!(p, chem5_program());
    }

    #[test]
    fn parses_minimal_instance() {
        let p = parse_program(r#"{"qubits":2,"gates":[{"id":0,"q":[0,1]}]}"#).unwrap();
        assert_eq!(p.qubit_count, 2);
        assert_eq!(p.commuting_groups, vec![vec![0]]);
    }

    #[test]
    fn rejects_duplicate_operands() {
        let err = parse_program(r#"{"qubits":2,"gates":[{"id":0,"q":[0,0]}]}"#).unwrap_err();
        assert!(matches!(err, Error::MalformedProgram(_)));
    }

    #[test]
    fn rejects_single_qubit_gate() {
        let err = parse_program(r#"{"qubits":2,"gates":[{"id":0,"q":[0]}]}"#).unwrap_err();
        assert!(err.to_string().contains("single-qubit"));
    }

    #[test]
    fn rejects_operand_out_of_range() {
        let err = parse_program(r#"{"qubits":2,"gates":[{"id":0,"q":[0,2]}]}"#).unwrap_err();
        assert!(matches!(err, Error::MalformedProgram(_)));
    }

    #[test]
    fn rejects_noncontiguous_groups() {
        let err = parse_program(
            r#"{"qubits":3,"gates":[{"id":0,"q":[0,1]},{"id":1,"q":[1,2]}],
                "commuting_groups":[[1],[0]]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::MalformedProgram(_)));
    }

    #[test]
    fn noncommuting_chem5_has_precedence_g0_g4() {
        let mut p = chem5_program();
        p.commuting_groups = (0..10).map(|i| vec![i]).collect();
        let d = dependencies(&p);
        assert!(d.precedence.contains(&(0, 4)));
        assert!(d.distinct_time.is_empty());
    }

    #[test]
    fn commuting_chem5_has_distinct_time_g0_g4() {
        let d = dependencies(&chem5_program());
        assert!(d.distinct_time.contains(&(0, 4)));
        assert!(d.precedence.is_empty());
    }

    #[test]
    fn disjoint_gates_are_unconstrained() {
        let p = parse_program(
            r#"{"qubits":4,"gates":[{"id":0,"q":[0,1]},{"id":1,"q":[2,3]}]}"#,
        )
        .unwrap();
        let d = dependencies(&p);
        assert!(d.precedence.is_empty());
        assert!(d.distinct_time.is_empty());
    }

    #[test]
    fn distinct_time_pairs_share_a_qubit() {
        let p = chem5_program();
        let d = dependencies(&p);
        for &(a, b) in &d.distinct_time {
            assert!(shares_qubit(&p.gates[a], &p.gates[b]));
        }
        for &pair in &d.distinct_time {
            assert!(!d.precedence.contains(&pair));
        }
    }

    #[test]
    fn lower_bound_chain_of_two() {
        let p = parse_program(
            r#"{"qubits":3,"gates":[{"id":0,"q":[0,1]},{"id":1,"q":[1,2]}]}"#,
        )
        .unwrap();
        let d = dependencies(&p);
        assert!(d.precedence.contains(&(0, 1)));
        assert_eq!(depth_lower_bound(&d, &p), 2);
    }

    #[test]
    fn lower_bound_all_to_all_five() {
        let p = chem5_program();
        let d = dependencies(&p);
        assert_eq!(depth_lower_bound(&d, &p), 4);
    }

    #[test]
    fn lower_bound_single_gate() {
        let p = parse_program(r#"{"qubits":2,"gates":[{"id":0,"q":[0,1]}]}"#).unwrap();
        let d = dependencies(&p);
        assert_eq!(depth_lower_bound(&d, &p), 1);
    }

    #[test]
    fn cross_group_ordering_chains_through_commuting_groups() {
        // Gates 0 and 1 commute on q1; gate 2 follows both.
        let p = parse_program(
            r#"{"qubits":3,"gates":[{"id":0,"q":[0,1]},{"id":1,"q":[1,2]},{"id":2,"q":[0,1]}],
                "commuting_groups":[[0,1],[2]]}"#,
        )
        .unwrap();
        let d = dependencies(&p);
        assert!(d.distinct_time.contains(&(0, 1)));
        assert!(d.precedence.contains(&(0, 2)));
        assert!(d.precedence.contains(&(1, 2)));
    }
}
