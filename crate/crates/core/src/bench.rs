//! Benchmark families, multi-iteration extension, and comparison reports.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arch::{CouplingGraph, GraphKind};
use crate::encode::{EncodingOptions, Phase};
use crate::error::{Error, Result};
use crate::qprog::{Gate, Program};
use crate::solution::{
    fidelity, multi_iteration_fidelity, verify, MappingSolution,
};
use crate::solve::{
    initial_mapping_candidates, maximize_fidelity, minimize_depth, minimize_swaps, Backend,
    Objective, SwapSearch,
};

pub const DEFAULT_T0: f64 = 50.0;
pub const DEFAULT_FU: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Qaoa3Reg,
    AllToAll,
    QvLike,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::Qaoa3Reg => "qaoa-3reg",
            Family::AllToAll => "all-to-all",
            Family::QvLike => "qv-like",
        })
    }
}

#[derive(Debug, Clone)]
pub struct BenchInstance {
    pub name: String,
    pub family: Family,
    pub n: usize,
    pub seed: u64,
    pub program: Program,
    pub graph: CouplingGraph,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Exact,
    Alternating,
    FixedInitial,
    AbsorbOff,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::Alternating => "alternating",
            Mode::FixedInitial => "fixed-initial",
            Mode::AbsorbOff => "absorb-off",
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchRow {
    pub family: String,
    pub n: usize,
    pub seed: u64,
    pub mode: String,
    pub objective: String,
    pub status: String,
    pub depth: Option<usize>,
    pub swaps: Option<usize>,
    pub absorbed: Option<usize>,
    pub fidelity: Option<f64>,
    /// Projected total fidelity for p = 1..=P iterations.
    pub iteration_fidelities: Vec<f64>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let iters = self.rows.iter().map(|r| r.iteration_fidelities.len()).max().unwrap_or(0);
        let mut out = String::from("family,n,seed,mode,objective,status,depth,swaps,absorbed,fidelity");
        for p in 1..=iters {
            out.push_str(&format!(",fidelity_p{p}"));
        }
        out.push_str(",wall_time_s\n");
        for r in &self.rows {
            let opt = |v: &Option<usize>| v.map_or(String::new(), |x| x.to_string());
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}",
                r.family,
                r.n,
                r.seed,
                r.mode,
                r.objective,
                r.status,
                opt(&r.depth),
                opt(&r.swaps),
                opt(&r.absorbed),
                r.fidelity.map_or(String::new(), |f| format!("{f:.6}")),
            ));
            for p in 0..iters {
                out.push(',');
                if let Some(f) = r.iteration_fidelities.get(p) {
                    out.push_str(&format!("{f:.6}"));
                }
            }
            out.push_str(&format!(",{:.3}\n", r.wall_time_s));
        }
        out
    }
}

/// Random simple connected degree-regular graph via the pairing model with
/// rejection. Deterministic per (n, degree, seed).
pub fn gen_regular_graph(n: usize, degree: usize, seed: u64) -> Result<CouplingGraph> {
    if n * degree % 2 != 0 {
        return Err(Error::InvalidOptions(format!(
            "no {degree}-regular graph on {n} vertices (odd degree sum)"
        )));
    }
    if n <= degree {
        return Err(Error::InvalidOptions(format!(
            "need more than {degree} vertices for a {degree}-regular graph"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..100_000 {
        let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat(v).take(degree)).collect();
        stubs.shuffle(&mut rng);
        let mut edges: Vec<(usize, usize)> = Vec::with_capacity(n * degree / 2);
        let mut ok = true;
        for pair in stubs.chunks(2) {
            let (a, b) = (pair[0], pair[1]);
            if a == b {
                ok = false;
                break;
            }
            let e = (a.min(b), a.max(b));
            if edges.contains(&e) {
                ok = false;
                break;
            }
            edges.push(e);
        }
        if !ok {
            continue;
        }
        edges.sort_unstable();
        let g = CouplingGraph { qubit_count: n, edges, kind: GraphKind::Custom };
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::InvalidOptions(format!(
        "pairing model failed to produce a graph for (n={n}, degree={degree}, seed={seed})"
    )))
}

/// QAOA phase-separation layer: one commuting gate per edge of the problem
/// graph.
pub fn qaoa_phase_program(graph: &CouplingGraph) -> Result<Program> {
    if graph.edge_count() == 0 {
        return Err(Error::MalformedProgram("problem graph has no edges".into()));
    }
    let gates: Vec<Gate> = graph
        .edges
        .iter()
        .enumerate()
        .map(|(id, &(a, b))| Gate { id, qubits: (a, b), label: None, params: vec![] })
        .collect();
    let p = Program {
        qubit_count: graph.qubit_count,
        commuting_groups: vec![(0..gates.len()).collect()],
        gates,
    };
    p.validate()?;
    Ok(p)
}

/// One commuting gate per unordered qubit pair.
pub fn all_to_all_program(n: usize) -> Result<Program> {
    if n < 2 {
        return Err(Error::MalformedProgram("all-to-all needs at least 2 qubits".into()));
    }
    let mut gates = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            gates.push(Gate { id: gates.len(), qubits: (i, j), label: None, params: vec![] });
        }
    }
    let p = Program {
        qubit_count: n,
        commuting_groups: vec![(0..gates.len()).collect()],
        gates,
    };
    p.validate()?;
    Ok(p)
}

/// Sequential layers of seeded random (near-)perfect matchings over the
/// program qubits; gates are non-commuting (size-1 groups).
pub fn qv_like_program(n: usize, layers: usize, seed: u64) -> Result<Program> {
    if n < 2 || layers < 1 {
        return Err(Error::MalformedProgram("QV-like needs n >= 2 and layers >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gates = Vec::new();
    for _ in 0..layers {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        for pair in order.chunks_exact(2) {
            gates.push(Gate {
                id: gates.len(),
                qubits: (pair[0], pair[1]),
                label: None,
                params: vec![],
            });
        }
    }
    let p = Program {
        qubit_count: n,
        commuting_groups: (0..gates.len()).map(|i| vec![i]).collect(),
        gates,
    };
    p.validate()?;
    Ok(p)
}

/// How a single-iteration solution extends to p mirrored iterations.
#[derive(Debug, Clone, Serialize)]
pub struct IterationPlan {
    pub iterations: usize,
    pub per_iteration_depth: usize,
    pub per_iteration_swaps: usize,
    pub initial_mapping: Vec<usize>,
    /// Mapping at the end of each iteration: odd iterations end at the
    /// single-iteration final mapping, even ones back at the initial one.
    pub final_mappings: Vec<Vec<usize>>,
    pub single_fidelity: f64,
    pub total_fidelity: f64,
}

/// Mapping after the last step's SWAPs have acted.
pub fn end_mapping(s: &MappingSolution, g: &CouplingGraph) -> Vec<usize> {
    let mut m = s.mapping[s.horizon - 1].clone();
    for &(e, t) in s.absorbed.iter().chain(&s.explicit) {
        if t == s.horizon - 1 {
            let (pa, pb) = g.endpoints(e);
            for entry in m.iter_mut() {
                if *entry == pa {
                    *entry = pb;
                } else if *entry == pb {
                    *entry = pa;
                }
            }
        }
    }
    m
}

/// Mirror a verified single-iteration schedule over `p_iters` iterations:
/// every other iteration runs the gates in reverse, so the mapping
/// alternates between the final and initial one while depth and SWAP count
/// per iteration stay fixed.
pub fn extend_iterations(
    s: &MappingSolution,
    p: &Program,
    g: &CouplingGraph,
    p_iters: u32,
    t0: f64,
    f_u: f64,
) -> Result<IterationPlan> {
    if p_iters < 1 {
        return Err(Error::InvalidOptions("need at least one iteration".into()));
    }
    if let Err(v) = verify(p, g, s) {
        return Err(Error::Invalid(v.len()));
    }
    let initial = s.mapping[0].clone();
    let last = end_mapping(s, g);
    let f1 = fidelity(p.qubit_count, s.horizon, p.gate_count(), s.swap_count(), t0, f_u)?;
    let final_mappings = (1..=p_iters as usize)
        .map(|i| if i % 2 == 1 { last.clone() } else { initial.clone() })
        .collect();
    Ok(IterationPlan {
        iterations: p_iters as usize,
        per_iteration_depth: s.horizon,
        per_iteration_swaps: s.swap_count(),
        initial_mapping: initial,
        final_mappings,
        single_fidelity: f1,
        total_fidelity: multi_iteration_fidelity(f1, p_iters),
    })
}

/// Solve every instance in every mode, re-verify, and tabulate metrics.
/// Timeouts become rows with status "timeout"; the suite keeps going.
pub fn run_suite(
    instances: &[BenchInstance],
    modes: &[Mode],
    objective: Objective,
    b: &Backend,
    iterations: u32,
) -> Result<BenchReport> {
    let mut report = BenchReport::default();
    for inst in instances {
        for &mode in modes {
            report.rows.push(run_row(inst, mode, objective, b, iterations)?);
        }
    }
    Ok(report)
}

fn run_row(
    inst: &BenchInstance,
    mode: Mode,
    objective: Objective,
    b: &Backend,
    iterations: u32,
) -> Result<BenchRow> {
    let objective_name = match objective {
        Objective::Depth => "depth",
        Objective::Swaps { .. } => "swap",
        Objective::Fidelity { .. } => "fidelity",
    };
    let mut row = BenchRow {
        family: inst.family.to_string(),
        n: inst.n,
        seed: inst.seed,
        mode: mode.to_string(),
        objective: objective_name.into(),
        status: "ok".into(),
        depth: None,
        swaps: None,
        absorbed: None,
        fidelity: None,
        iteration_fidelities: vec![],
        wall_time_s: 0.0,
    };
    let mut opts = EncodingOptions::new(1);
    match mode {
        Mode::Exact => {}
        Mode::AbsorbOff => opts.absorption_enabled = false,
        Mode::FixedInitial => {
            let (cands, _) = initial_mapping_candidates(&inst.program, &inst.graph);
            opts.initial_mapping = Some(cands[0].clone());
        }
        Mode::Alternating => {
            if inst.graph.kind != GraphKind::Line {
                row.status = "skipped: alternating matchings need a line".into();
                return Ok(row);
            }
        }
    }

    let start = Instant::now();
    let solved = if mode == Mode::Alternating {
        solve_both_phases(inst, &opts, objective, b)
    } else {
        solve_objective(inst, &opts, objective, b)
    };
    row.wall_time_s = start.elapsed().as_secs_f64();
    let sol = match solved {
        Ok(s) => s,
        Err(Error::Timeout { .. }) => {
            row.status = "timeout".into();
            return Ok(row);
        }
        Err(e) => return Err(e),
    };
    let metrics = verify(&inst.program, &inst.graph, &sol)
        .map_err(|v| Error::Invalid(v.len()))?;
    let f1 = fidelity(
        inst.program.qubit_count,
        metrics.depth,
        metrics.gate_count,
        metrics.swap_count,
        DEFAULT_T0,
        DEFAULT_FU,
    )?;
    row.depth = Some(metrics.depth);
    row.swaps = Some(metrics.swap_count);
    row.absorbed = Some(metrics.absorbed_count);
    row.fidelity = Some(f1);
    row.iteration_fidelities =
        (1..=iterations).map(|p| multi_iteration_fidelity(f1, p)).collect();
    Ok(row)
}

fn solve_objective(
    inst: &BenchInstance,
    opts: &EncodingOptions,
    objective: Objective,
    b: &Backend,
) -> Result<MappingSolution> {
    match objective {
        Objective::Depth => minimize_depth(&inst.program, &inst.graph, opts, b, None),
        Objective::Swaps { horizon_slack } => minimize_swaps(
            &inst.program,
            &inst.graph,
            opts,
            b,
            horizon_slack,
            SwapSearch::Linear,
        ),
        Objective::Fidelity { t0, f_u } => {
            maximize_fidelity(&inst.program, &inst.graph, opts, b, t0, f_u, None).map(|(s, _)| s)
        }
    }
}

/// Try both alternating-matchings phases and keep the better solution
/// (earlier phase wins ties).
fn solve_both_phases(
    inst: &BenchInstance,
    opts: &EncodingOptions,
    objective: Objective,
    b: &Backend,
) -> Result<MappingSolution> {
    let deps = crate::qprog::dependencies(&inst.program);
    let depth_floor = crate::qprog::depth_lower_bound(&deps, &inst.program);
    let mut best: Option<MappingSolution> = None;
    for phase in [Phase::Zero, Phase::One] {
        let mut o = opts.clone();
        o.alternating_matchings = Some(phase);
        match solve_objective(inst, &o, objective, b) {
            Ok(sol) => {
                // A phase hitting the dependency lower bound cannot be beaten.
                if objective == Objective::Depth && sol.horizon == depth_floor {
                    return Ok(sol);
                }
                let better = match &best {
                    None => true,
                    Some(cur) => match objective {
                        Objective::Swaps { .. } => {
                            (sol.swap_count(), sol.horizon) < (cur.swap_count(), cur.horizon)
                        }
                        _ => (sol.horizon, sol.swap_count()) < (cur.horizon, cur.swap_count()),
                    },
                };
                if better {
                    best = Some(sol);
                }
            }
            Err(Error::HorizonExhausted(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    best.ok_or(Error::HorizonExhausted(0))
}

/// Convenience constructors used by the CLI and tests.
pub fn make_instance(family: Family, n: usize, seed: u64, graph: CouplingGraph) -> Result<BenchInstance> {
    let program = match family {
        Family::Qaoa3Reg => qaoa_phase_program(&gen_regular_graph(n, 3, seed)?)?,
        Family::AllToAll => all_to_all_program(n)?,
        Family::QvLike => qv_like_program(n, 1, seed)?,
    };
    Ok(BenchInstance {
        name: format!("{family}-n{n}-s{seed}"),
        family,
        n,
        seed,
        program,
        graph,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::build_line;

    #[test]
    fn regular_graph_is_regular_simple_connected() {
        let g = gen_regular_graph(8, 3, 1).unwrap();
        assert_eq!(g.edge_count(), 12);
        for v in 0..8 {
            assert_eq!(g.degree(v), 3);
        }
        assert!(g.is_connected());
        let again = gen_regular_graph(8, 3, 1).unwrap();
        assert_eq!(g.edges, again.edges);
        let other = gen_regular_graph(8, 3, 2).unwrap();
        // Different seeds explore different pairings (property, not proof).
        assert!(other.is_connected());
    }

    #[test]
    fn regular_graph_on_four_vertices_is_k4() {
        let g = gen_regular_graph(4, 3, 7).unwrap();
        assert_eq!(g.edges, vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
    }

    #[test]
    fn regular_graph_parity_rejected() {
        assert!(gen_regular_graph(5, 3, 0).is_err());
        assert!(gen_regular_graph(3, 3, 0).is_err());
    }

    #[test]
    fn qaoa_program_shape() {
        let g = gen_regular_graph(8, 3, 1).unwrap();
        let p = qaoa_phase_program(&g).unwrap();
        assert_eq!(p.gate_count(), 12);
        assert_eq!(p.qubit_count, 8);
        assert_eq!(p.commuting_groups.len(), 1);
    }

    #[test]
    fn all_to_all_counts() {
        assert_eq!(all_to_all_program(5).unwrap().gate_count(), 10);
        assert_eq!(all_to_all_program(2).unwrap().gate_count(), 1);
        assert_eq!(all_to_all_program(6).unwrap().gate_count(), 15);
        assert!(all_to_all_program(1).is_err());
    }

    #[test]
    fn qv_like_shapes() {
        let p = qv_like_program(6, 1, 3).unwrap();
        assert_eq!(p.gate_count(), 3);
        let mut seen = std::collections::HashSet::new();
        for g in &p.gates {
            assert!(seen.insert(g.qubits.0));
            assert!(seen.insert(g.qubits.1));
        }
        let p2 = qv_like_program(2, 3, 0).unwrap();
        assert_eq!(p2.gate_count(), 3);
        assert!(p2.gates.iter().all(|g| g.qubits == (0, 1) || g.qubits == (1, 0)));
        // Sequential layers: singleton groups give natural precedence.
        assert_eq!(p2.commuting_groups.len(), 3);
    }

    #[test]
    fn extend_iterations_alternates_mappings() {
        let p = crate::qprog::parse_program(
            r#"{"qubits":3,
                "gates":[{"id":0,"q":[0,1]},{"id":1,"q":[1,2]},{"id":2,"q":[0,2]}],
                "commuting_groups":[[0,1,2]]}"#,
        )
        .unwrap();
        let g = build_line(3).unwrap();
        let sol = minimize_depth(&p, &g, &EncodingOptions::new(1), &Backend::Internal, None)
            .unwrap();
        let plan = extend_iterations(&sol, &p, &g, 2, DEFAULT_T0, DEFAULT_FU).unwrap();
        assert_eq!(plan.final_mappings[1], plan.initial_mapping);
        assert_eq!(plan.per_iteration_depth, sol.horizon);
        assert!((plan.total_fidelity - plan.single_fidelity.powi(2)).abs() < 1e-12);
        let p5 = extend_iterations(&sol, &p, &g, 5, DEFAULT_T0, DEFAULT_FU).unwrap();
        assert!((p5.total_fidelity - plan.single_fidelity.powi(5)).abs() < 1e-12);
    }

    #[test]
    fn suite_empty_is_empty() {
        let r = run_suite(&[], &[Mode::Exact], Objective::Depth, &Backend::Internal, 1).unwrap();
        assert!(r.rows.is_empty());
        assert!(r.to_csv().starts_with("family,"));
    }

    #[test]
    fn suite_rows_reverify_and_absorption_helps() {
        let inst = BenchInstance {
            name: "triangle".into(),
            family: Family::Qaoa3Reg,
            n: 3,
            seed: 0,
            program: crate::qprog::parse_program(
                r#"{"qubits":3,
                    "gates":[{"id":0,"q":[0,1]},{"id":1,"q":[1,2]},{"id":2,"q":[0,2]}],
                    "commuting_groups":[[0,1,2]]}"#,
            )
            .unwrap(),
            graph: build_line(3).unwrap(),
        };
        let r = run_suite(
            &[inst],
            &[Mode::Exact, Mode::AbsorbOff, Mode::Alternating],
            Objective::Swaps { horizon_slack: 0 },
            &Backend::Internal,
            3,
        )
        .unwrap();
        assert_eq!(r.rows.len(), 3);
        let exact = &r.rows[0];
        let off = &r.rows[1];
        assert!(exact.swaps.unwrap() <= off.swaps.unwrap());
        assert_eq!(exact.iteration_fidelities.len(), 3);
        let f1 = exact.fidelity.unwrap();
        assert!((exact.iteration_fidelities[2] - f1.powi(3)).abs() < 1e-12);
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.contains("fidelity_p3"));
    }
}
