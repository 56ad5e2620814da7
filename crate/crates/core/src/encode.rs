//! Constraint-system construction for the mapping problem.
//!
//! Variables follow the four-group layout: mapping pi[q][t] over physical
//! qubits, spacetime coordinates (t_g, x_g) per gate, and boolean absorbed /
//! explicit SWAP indicators per (edge, time). Total count |Q|T + 2|G| + 2|E|T.
//!
//! Clauses are kept solver-neutral as disjunctions of conjunctions over
//! equality/inequality literals, so one system serves both the internal SAT
//! backend and SMT-LIB2 emission.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::arch::{CouplingGraph, GraphKind};
use crate::error::{Error, Result};
use crate::qprog::{dependencies, Program};

/// Variable-table dimensions. Identities are implicit in the indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarTable {
    pub qubits: usize,
    pub phys: usize,
    pub gates: usize,
    pub edges: usize,
    pub horizon: usize,
}

impl VarTable {
    /// |Q|T + 2|G| + 2|E|T
    pub fn count(&self) -> usize {
        self.qubits * self.horizon + 2 * self.gates + 2 * self.edges * self.horizon
    }
}

/// One literal over the variable table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Lit {
    /// pi[q][t] == p (or != when eq is false)
    Map { q: usize, t: usize, p: usize, eq: bool },
    /// t_g == t
    Time { g: usize, t: usize, eq: bool },
    /// x_g == e
    Space { g: usize, e: usize, eq: bool },
    /// alpha[e][t] (value = polarity)
    Absorbed { e: usize, t: usize, val: bool },
    /// sigma[e][t]
    Explicit { e: usize, t: usize, val: bool },
}

/// A disjunction of conjunctions. Most clauses are flat (every term a single
/// literal); the absorption-support family needs genuine conjunction terms.
#[derive(Debug, Clone, PartialEq)]
pub struct Clause {
    pub terms: Vec<Vec<Lit>>,
}

impl Clause {
    pub fn flat(lits: Vec<Lit>) -> Self {
        Clause { terms: lits.into_iter().map(|l| vec![l]).collect() }
    }

    pub fn unit(lit: Lit) -> Self {
        Clause::flat(vec![lit])
    }
}

/// Alternating-matchings phase. Phase 0 starts with even edges at even
/// times; phase 1 starts with odd edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Zero,
    One,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EncodingOptions {
    pub horizon: usize,
    pub absorption_enabled: bool,
    pub alternating_matchings: Option<Phase>,
    /// Optional fixed assignment pi[q][0] = initial_mapping[q].
    pub initial_mapping: Option<Vec<usize>>,
    pub swap_budget: Option<usize>,
}

impl EncodingOptions {
    pub fn new(horizon: usize) -> Self {
        EncodingOptions { horizon, absorption_enabled: true, ..Default::default() }
    }
}

#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    pub vars: VarTable,
    pub clauses: Vec<Clause>,
    /// Cardinality bound sum sigma[e][t] <= k, when set.
    pub swap_budget: Option<usize>,
}

/// A full assignment to the variable table, as decoded from any backend.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// pi[q][t]
    pub pi: Vec<Vec<usize>>,
    pub tg: Vec<usize>,
    pub xg: Vec<usize>,
    /// absorbed[e][t]
    pub absorbed: Vec<Vec<bool>>,
    /// explicit[e][t]
    pub explicit: Vec<Vec<bool>>,
}

impl Assignment {
    pub fn eval(&self, lit: &Lit) -> bool {
        match *lit {
            Lit::Map { q, t, p, eq } => (self.pi[q][t] == p) == eq,
            Lit::Time { g, t, eq } => (self.tg[g] == t) == eq,
            Lit::Space { g, e, eq } => (self.xg[g] == e) == eq,
            Lit::Absorbed { e, t, val } => self.absorbed[e][t] == val,
            Lit::Explicit { e, t, val } => self.explicit[e][t] == val,
        }
    }

    pub fn satisfies(&self, clause: &Clause) -> bool {
        clause.terms.iter().any(|conj| conj.iter().all(|l| self.eval(l)))
    }

    pub fn explicit_count(&self) -> usize {
        self.explicit.iter().flatten().filter(|&&b| b).count()
    }

    /// True iff every clause and the budget hold.
    pub fn satisfies_system(&self, cs: &ConstraintSystem) -> bool {
        cs.clauses.iter().all(|c| self.satisfies(c))
            && cs.swap_budget.map_or(true, |k| self.explicit_count() <= k)
    }
}

/// Build the constraint system for program `p` on graph `g`.
pub fn build(p: &Program, g: &CouplingGraph, opts: &EncodingOptions) -> Result<ConstraintSystem> {
    if opts.horizon < 1 {
        return Err(Error::InvalidOptions("horizon must be >= 1".into()));
    }
    if !g.is_connected() {
        return Err(Error::MalformedArch("coupling graph must be connected".into()));
    }
    if p.qubit_count > g.qubit_count {
        return Err(Error::InvalidOptions(format!(
            "program needs {} qubits but architecture has {}",
            p.qubit_count, g.qubit_count
        )));
    }
    let vars = VarTable {
        qubits: p.qubit_count,
        phys: g.qubit_count,
        gates: p.gate_count(),
        edges: g.edge_count(),
        horizon: opts.horizon,
    };
    let horizon = opts.horizon;
    let mut clauses = Vec::new();

    // Domain clauses: every integer variable takes at least one value.
    // (Uniqueness is intrinsic for SMT integers and added as one-hot
    // exactly-one constraints by the SAT translation.)
    for q in 0..vars.qubits {
        for t in 0..horizon {
            clauses.push(Clause::flat(
                (0..vars.phys).map(|p_| Lit::Map { q, t, p: p_, eq: true }).collect(),
            ));
        }
    }
    for gate in 0..vars.gates {
        clauses.push(Clause::flat(
            (0..horizon).map(|t| Lit::Time { g: gate, t, eq: true }).collect(),
        ));
        clauses.push(Clause::flat(
            (0..vars.edges).map(|e| Lit::Space { g: gate, e, eq: true }).collect(),
        ));
    }

    // (a) Dependencies.
    let deps = dependencies(p);
    for &(a, b) in &deps.precedence {
        for ta in 0..horizon {
            for tb in 0..=ta {
                clauses.push(Clause::flat(vec![
                    Lit::Time { g: a, t: ta, eq: false },
                    Lit::Time { g: b, t: tb, eq: false },
                ]));
            }
        }
    }
    for &(a, b) in &deps.distinct_time {
        for t in 0..horizon {
            clauses.push(Clause::flat(vec![
                Lit::Time { g: a, t, eq: false },
                Lit::Time { g: b, t, eq: false },
            ]));
        }
    }

    // (b) Mapping implied by spacetime coordinates: a gate at (t, e) pins its
    // operands to the endpoints of e, in either order.
    for gate in 0..vars.gates {
        let (q1, q2) = p.gates[gate].qubits;
        for t in 0..horizon {
            for e in 0..vars.edges {
                let (pa, pb) = g.endpoints(e);
                let guard = [
                    Lit::Time { g: gate, t, eq: false },
                    Lit::Space { g: gate, e, eq: false },
                ];
                // (A&B)|(C&D) distributes into four binary clauses, where
                // A: q1@pa, B: q2@pb, C: q1@pb, D: q2@pa.
                let a = Lit::Map { q: q1, t, p: pa, eq: true };
                let b = Lit::Map { q: q2, t, p: pb, eq: true };
                let c = Lit::Map { q: q1, t, p: pb, eq: true };
                let d = Lit::Map { q: q2, t, p: pa, eq: true };
                for pair in [[a, c], [a, d], [b, c], [b, d]] {
                    let mut lits = guard.to_vec();
                    lits.extend(pair);
                    clauses.push(Clause::flat(lits));
                }
            }
        }
    }

    // (c) No overlaps. Explicit SWAPs exclude each other on incident edges;
    // gates exclude explicit SWAPs on incident edges, the edge itself included.
    for t in 0..horizon {
        for e in 0..vars.edges {
            for f in e + 1..vars.edges {
                if g.incident(e, f) {
                    clauses.push(Clause::flat(vec![
                        Lit::Explicit { e, t, val: false },
                        Lit::Explicit { e: f, t, val: false },
                    ]));
                }
            }
        }
    }
    for gate in 0..vars.gates {
        for t in 0..horizon {
            for e in 0..vars.edges {
                for f in 0..vars.edges {
                    if g.incident(e, f) {
                        clauses.push(Clause::flat(vec![
                            Lit::Time { g: gate, t, eq: false },
                            Lit::Space { g: gate, e, eq: false },
                            Lit::Explicit { e: f, t, val: false },
                        ]));
                    }
                }
            }
        }
    }

    // (d) Absorbed-SWAP support: alpha[e][t] needs a gate at (t, e).
    for t in 0..horizon {
        for e in 0..vars.edges {
            let mut terms = vec![vec![Lit::Absorbed { e, t, val: false }]];
            for gate in 0..vars.gates {
                terms.push(vec![
                    Lit::Time { g: gate, t, eq: true },
                    Lit::Space { g: gate, e, eq: true },
                ]);
            }
            clauses.push(Clause { terms });
        }
    }

    // (e) Mapping transformation. A SWAP (either kind) on e = (pa, pb) at t
    // moves a qubit across e; with no incident SWAP the mapping is unchanged.
    for q in 0..vars.qubits {
        for t in 0..horizon.saturating_sub(1) {
            for e in 0..vars.edges {
                let (pa, pb) = g.endpoints(e);
                for (src, dst) in [(pa, pb), (pb, pa)] {
                    for swap_lit in [
                        Lit::Explicit { e, t, val: false },
                        Lit::Absorbed { e, t, val: false },
                    ] {
                        clauses.push(Clause::flat(vec![
                            Lit::Map { q, t, p: src, eq: false },
                            swap_lit,
                            Lit::Map { q, t: t + 1, p: dst, eq: true },
                        ]));
                    }
                }
            }
            for pp in 0..vars.phys {
                let mut lits = vec![Lit::Map { q, t, p: pp, eq: false }];
                for e in g.edges_at(pp) {
                    lits.push(Lit::Explicit { e, t, val: true });
                    lits.push(Lit::Absorbed { e, t, val: true });
                }
                lits.push(Lit::Map { q, t: t + 1, p: pp, eq: true });
                clauses.push(Clause::flat(lits));
            }
        }
    }

    // (f) Injectivity of the mapping at every step; without it the
    // no-overlap constraints would not rule out aliased placements.
    for t in 0..horizon {
        for q1 in 0..vars.qubits {
            for q2 in q1 + 1..vars.qubits {
                for pp in 0..vars.phys {
                    clauses.push(Clause::flat(vec![
                        Lit::Map { q: q1, t, p: pp, eq: false },
                        Lit::Map { q: q2, t, p: pp, eq: false },
                    ]));
                }
            }
        }
    }

    // (g) Absorption toggle: with absorption off force all
    // alpha to zero.
    if !opts.absorption_enabled {
        for t in 0..horizon {
            for e in 0..vars.edges {
                clauses.push(Clause::unit(Lit::Absorbed { e, t, val: false }));
            }
        }
    }

    let mut cs = ConstraintSystem { vars, clauses, swap_budget: None };

    // (h) Optional reductions.
    if let Some(phase) = opts.alternating_matchings {
        cs = add_alternating_matchings(cs, g, phase)?;
    }
    if let Some(m) = &opts.initial_mapping {
        cs = add_initial_mapping(cs, m)?;
    }
    if let Some(k) = opts.swap_budget {
        cs = add_swap_budget(cs, k)?;
    }
    Ok(cs)
}

/// Constrain activity to the alternating-matchings pattern of a line.
///
/// For phase 0, every (t, e_k) with (t - k) odd is forbidden for explicit
/// SWAPs and gates; phase 1 forbids the complementary parity.
pub fn add_alternating_matchings(
    mut cs: ConstraintSystem,
    g: &CouplingGraph,
    phase: Phase,
) -> Result<ConstraintSystem> {
    if g.kind != GraphKind::Line {
        return Err(Error::NotALine(format!("{:?}", g.kind)));
    }
    let banned_parity = match phase {
        Phase::Zero => 1,
        Phase::One => 0,
    };
    for t in 0..cs.vars.horizon {
        for k in 0..cs.vars.edges {
            // (t - k) mod 2 has the parity of t + k.
            if (t + k) % 2 != banned_parity {
                continue;
            }
            cs.clauses.push(Clause::unit(Lit::Explicit { e: k, t, val: false }));
            for gate in 0..cs.vars.gates {
                cs.clauses.push(Clause::flat(vec![
                    Lit::Time { g: gate, t, eq: false },
                    Lit::Space { g: gate, e: k, eq: false },
                ]));
            }
        }
    }
    Ok(cs)
}

/// Fix pi[q][0] for all program qubits.
pub fn add_initial_mapping(mut cs: ConstraintSystem, m: &[usize]) -> Result<ConstraintSystem> {
    if m.len() != cs.vars.qubits {
        return Err(Error::InvalidOptions(format!(
            "initial mapping covers {} of {} qubits",
            m.len(),
            cs.vars.qubits
        )));
    }
    let mut seen = HashSet::new();
    for &p in m {
        if p >= cs.vars.phys || !seen.insert(p) {
            return Err(Error::InvalidOptions(
                "initial mapping must be injective into the physical qubits".into(),
            ));
        }
    }
    for (q, &p) in m.iter().enumerate() {
        cs.clauses.push(Clause::unit(Lit::Map { q, t: 0, p, eq: true }));
    }
    Ok(cs)
}

/// Cap the number of explicit SWAPs.
pub fn add_swap_budget(mut cs: ConstraintSystem, s_max: usize) -> Result<ConstraintSystem> {
    if s_max == 0 {
        for t in 0..cs.vars.horizon {
            for e in 0..cs.vars.edges {
                cs.clauses.push(Clause::unit(Lit::Explicit { e, t, val: false }));
            }
        }
        cs.swap_budget = Some(0);
    } else {
        cs.swap_budget = Some(match cs.swap_budget {
            Some(old) => old.min(s_max),
            None => s_max,
        });
    }
    Ok(cs)
}

// ---------------------------------------------------------------------------
// SMT-LIB2 emission

pub fn var_name(lit: &Lit) -> String {
    match *lit {
        Lit::Map { q, t, .. } => format!("pi_q{q}_t{t}"),
        Lit::Time { g, .. } => format!("tg_{g}"),
        Lit::Space { g, .. } => format!("xg_{g}"),
        Lit::Absorbed { e, t, .. } => format!("a_e{e}_t{t}"),
        Lit::Explicit { e, t, .. } => format!("s_e{e}_t{t}"),
    }
}

fn smt_lit(lit: &Lit) -> String {
    match *lit {
        Lit::Map { p, eq, .. } => {
            let atom = format!("(= {} {})", var_name(lit), p);
            if eq { atom } else { format!("(not {atom})") }
        }
        Lit::Time { t, eq, .. } => {
            let atom = format!("(= {} {})", var_name(lit), t);
            if eq { atom } else { format!("(not {atom})") }
        }
        Lit::Space { e, eq, .. } => {
            let atom = format!("(= {} {})", var_name(lit), e);
            if eq { atom } else { format!("(not {atom})") }
        }
        Lit::Absorbed { val, .. } | Lit::Explicit { val, .. } => {
            let name = var_name(lit);
            if val { name } else { format!("(not {name})") }
        }
    }
}

fn smt_term(conj: &[Lit]) -> String {
    if conj.len() == 1 {
        smt_lit(&conj[0])
    } else {
        let inner: Vec<String> = conj.iter().map(smt_lit).collect();
        format!("(and {})", inner.join(" "))
    }
}

/// Render the system as an SMT-LIB2 (v2.6) script. Output is deterministic:
/// identical systems produce byte-identical text.
pub fn emit_smtlib(cs: &ConstraintSystem) -> String {
    let v = &cs.vars;
    let mut out = String::new();
    out.push_str("(set-logic QF_LIA)\n");
    for q in 0..v.qubits {
        for t in 0..v.horizon {
            let _ = writeln!(out, "(declare-fun pi_q{q}_t{t} () Int)");
        }
    }
    for g in 0..v.gates {
        let _ = writeln!(out, "(declare-fun tg_{g} () Int)");
    }
    for g in 0..v.gates {
        let _ = writeln!(out, "(declare-fun xg_{g} () Int)");
    }
    for e in 0..v.edges {
        for t in 0..v.horizon {
            let _ = writeln!(out, "(declare-fun a_e{e}_t{t} () Bool)");
        }
    }
    for e in 0..v.edges {
        for t in 0..v.horizon {
            let _ = writeln!(out, "(declare-fun s_e{e}_t{t} () Bool)");
        }
    }
    for clause in &cs.clauses {
        let body = if clause.terms.len() == 1 {
            smt_term(&clause.terms[0])
        } else {
            let parts: Vec<String> = clause.terms.iter().map(|c| smt_term(c)).collect();
            format!("(or {})", parts.join(" "))
        };
        let _ = writeln!(out, "(assert {body})");
    }
    if let Some(k) = cs.swap_budget {
        let mut sum = String::from("(+ 0");
        for e in 0..v.edges {
            for t in 0..v.horizon {
                let _ = write!(sum, " (ite s_e{e}_t{t} 1 0)");
            }
        }
        sum.push(')');
        let _ = writeln!(out, "(assert (<= {sum} {k}))");
    }
    out.push_str("(check-sat)\n(get-model)\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::build_line;
    use crate::qprog::{chem5_program, parse_program};

    fn one_gate() -> Program {
        parse_program(r#"{"qubits":2,"gates":[{"id":0,"q":[0,1]}]}"#).unwrap()
    }

    #[test]
    fn variable_count_formula() {
        let p = chem5_program();
        let g = build_line(5).unwrap();
        let cs = build(&p, &g, &EncodingOptions::new(5)).unwrap();
        // 5*5 + 2*10 + 2*4*5 = 85
        assert_eq!(cs.vars.count(), 85);
    }

    #[test]
    fn rejects_zero_horizon() {
        let p = one_gate();
        let g = build_line(2).unwrap();
        assert!(build(&p, &g, &EncodingOptions::new(0)).is_err());
    }

    #[test]
    fn rejects_non_injective_initial_mapping() {
        let p = one_gate();
        let g = build_line(2).unwrap();
        let mut opts = EncodingOptions::new(1);
        opts.initial_mapping = Some(vec![1, 1]);
        assert!(build(&p, &g, &opts).is_err());
    }

    #[test]
    fn initial_mapping_adds_unit_clauses() {
        let p = chem5_program();
        let g = build_line(5).unwrap();
        let mut opts = EncodingOptions::new(5);
        opts.initial_mapping = Some(vec![0, 1, 2, 3, 4]);
        let with = build(&p, &g, &opts).unwrap();
        let without = build(&p, &g, &EncodingOptions::new(5)).unwrap();
        assert_eq!(with.clauses.len(), without.clauses.len() + 5);
    }

    #[test]
    fn declaration_count_matches_formula() {
        let p = chem5_program();
        let g = build_line(5).unwrap();
        let cs = build(&p, &g, &EncodingOptions::new(5)).unwrap();
        let text = emit_smtlib(&cs);
        let decls = text.lines().filter(|l| l.starts_with("(declare-")).count();
        assert_eq!(decls, cs.vars.count());
    }

    #[test]
    fn emission_is_deterministic() {
        let p = chem5_program();
        let g = build_line(5).unwrap();
        let mut opts = EncodingOptions::new(3);
        opts.swap_budget = Some(2);
        let a = emit_smtlib(&build(&p, &g, &opts).unwrap());
        let b = emit_smtlib(&build(&p, &g, &opts).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn smt_one_gate_script_shape() {
        let p = one_gate();
        let g = build_line(2).unwrap();
        let cs = build(&p, &g, &EncodingOptions::new(1)).unwrap();
        let text = emit_smtlib(&cs);
        // |Q|T + 2|G| + 2|E|T = 2 + 2 + 2 = 6 declarations
        assert_eq!(text.lines().filter(|l| l.starts_with("(declare-")).count(), 6);
        assert!(text.contains("(check-sat)"));
        assert!(text.contains("(get-model)"));
        assert!(text.contains("pi_q0_t0"));
        assert!(text.contains("tg_0"));
        assert!(text.contains("s_e0_t0"));
    }

    #[test]
    fn alternating_requires_line() {
        let p = one_gate();
        let g = crate::arch::build_grid(2, 2).unwrap();
        let cs = build(&p, &g, &EncodingOptions::new(2)).unwrap();
        assert!(add_alternating_matchings(cs, &g, Phase::Zero).is_err());
    }

    #[test]
    fn alternating_forbids_expected_cells() {
        let p = chem5_program();
        let g = build_line(5).unwrap();
        let cs = build(&p, &g, &EncodingOptions::new(5)).unwrap();
        let cs = add_alternating_matchings(cs, &g, Phase::Zero).unwrap();
        // At t=0 phase 0 bans odd edges e1, e3 for SWAPs.
        for e in [1usize, 3] {
            assert!(cs
                .clauses
                .contains(&Clause::unit(Lit::Explicit { e, t: 0, val: false })));
        }
        for e in [0usize, 2] {
            assert!(!cs
                .clauses
                .contains(&Clause::unit(Lit::Explicit { e, t: 0, val: false })));
        }
        // Phase 1 bans the even edges at t=0 instead.
        let cs1 = build(&p, &g, &EncodingOptions::new(5)).unwrap();
        let cs1 = add_alternating_matchings(cs1, &g, Phase::One).unwrap();
        for e in [0usize, 2] {
            assert!(cs1
                .clauses
                .contains(&Clause::unit(Lit::Explicit { e, t: 0, val: false })));
        }
    }

    #[test]
    fn assignment_clause_evaluation() {
        let clause = Clause {
            terms: vec![
                vec![Lit::Time { g: 0, t: 0, eq: true }, Lit::Space { g: 0, e: 1, eq: true }],
                vec![Lit::Explicit { e: 0, t: 0, val: true }],
            ],
        };
        let asg = Assignment {
            pi: vec![vec![0], vec![1]],
            tg: vec![0],
            xg: vec![1],
            absorbed: vec![vec![false], vec![false]],
            explicit: vec![vec![false], vec![false]],
        };
        assert!(asg.satisfies(&clause));
        let mut asg2 = asg.clone();
        asg2.xg = vec![0];
        assert!(!asg2.satisfies(&clause));
    }
}
