//! Translation of a constraint system to CNF and solving with the bundled
//! CDCL engine.
//!
//! Integer variables are one-hot encoded; the domain (at-least-one) clauses
//! already live in the system, and at-most-one plus the SWAP-budget counter
//! are added here. Non-flat clauses get one auxiliary literal per
//! conjunction term.

use varisat::{CnfFormula, ExtendFormula, Lit as SatLit, Solver, Var};

use crate::encode::{Assignment, Clause, ConstraintSystem, Lit};
use crate::error::{Error, Result};

pub struct CnfTranslation {
    formula: CnfFormula,
    n_qubits: usize,
    n_phys: usize,
    n_gates: usize,
    n_edges: usize,
    horizon: usize,
    /// First variable index of the boolean alpha block.
    alpha_base: usize,
    sigma_base: usize,
    next_var: usize,
}

impl CnfTranslation {
    pub fn new(cs: &ConstraintSystem) -> Self {
        let v = cs.vars;
        let pi_vars = v.qubits * v.horizon * v.phys;
        let tg_vars = v.gates * v.horizon;
        let xg_vars = v.gates * v.edges;
        let alpha_base = pi_vars + tg_vars + xg_vars;
        let sigma_base = alpha_base + v.edges * v.horizon;
        let mut tr = CnfTranslation {
            formula: CnfFormula::new(),
            n_qubits: v.qubits,
            n_phys: v.phys,
            n_gates: v.gates,
            n_edges: v.edges,
            horizon: v.horizon,
            alpha_base,
            sigma_base,
            next_var: sigma_base + v.edges * v.horizon,
        };

        // Exactly-one upper halves for the one-hot integer blocks. The
        // at-least-one side is part of the system's clause list.
        for q in 0..v.qubits {
            for t in 0..v.horizon {
                let lits: Vec<SatLit> = (0..v.phys)
                    .map(|p| tr.lit(&Lit::Map { q, t, p, eq: true }))
                    .collect();
                tr.at_most_one(&lits);
            }
        }
        for g in 0..v.gates {
            let lits: Vec<SatLit> =
                (0..v.horizon).map(|t| tr.lit(&Lit::Time { g, t, eq: true })).collect();
            tr.at_most_one(&lits);
            let lits: Vec<SatLit> =
                (0..v.edges).map(|e| tr.lit(&Lit::Space { g, e, eq: true })).collect();
            tr.at_most_one(&lits);
        }

        for clause in &cs.clauses {
            tr.add_clause(clause);
        }
        if let Some(k) = cs.swap_budget {
            let sigmas: Vec<SatLit> = (0..v.edges)
                .flat_map(|e| {
                    (0..v.horizon)
                        .map(move |t| Lit::Explicit { e, t, val: true })
                })
                .map(|l| tr.lit(&l))
                .collect();
            tr.at_most_k(&sigmas, k);
        }
        tr
    }

    fn var(&self, idx: usize) -> Var {
        Var::from_index(idx)
    }

    fn fresh(&mut self) -> SatLit {
        let v = self.var(self.next_var);
        self.next_var += 1;
        v.positive()
    }

    fn lit(&self, lit: &Lit) -> SatLit {
        let (idx, pos) = match *lit {
            Lit::Map { q, t, p, eq } => ((q * self.horizon + t) * self.n_phys + p, eq),
            Lit::Time { g, t, eq } => {
                let base = self.n_qubits * self.horizon * self.n_phys;
                (base + g * self.horizon + t, eq)
            }
            Lit::Space { g, e, eq } => {
                let base = self.n_qubits * self.horizon * self.n_phys
                    + self.n_gates * self.horizon;
                (base + g * self.n_edges + e, eq)
            }
            Lit::Absorbed { e, t, val } => (self.alpha_base + e * self.horizon + t, val),
            Lit::Explicit { e, t, val } => (self.sigma_base + e * self.horizon + t, val),
        };
        self.var(idx).lit(pos)
    }

    fn at_most_one(&mut self, lits: &[SatLit]) {
        for (i, &a) in lits.iter().enumerate() {
            for &b in &lits[i + 1..] {
                self.formula.add_clause(&[!a, !b]);
            }
        }
    }

    fn add_clause(&mut self, clause: &Clause) {
        if clause.terms.iter().all(|c| c.len() == 1) {
            let lits: Vec<SatLit> = clause.terms.iter().map(|c| self.lit(&c[0])).collect();
            self.formula.add_clause(&lits);
            return;
        }
        // Tseitin: one selector per term; selector implies each literal.
        let mut top = Vec::with_capacity(clause.terms.len());
        for conj in &clause.terms {
            if conj.len() == 1 {
                top.push(self.lit(&conj[0]));
            } else {
                let sel = self.fresh();
                for lit in conj {
                    let l = self.lit(lit);
                    self.formula.add_clause(&[!sel, l]);
                }
                top.push(sel);
            }
        }
        self.formula.add_clause(&top);
    }

    /// Sequential-counter encoding of sum(lits) <= k.
    fn at_most_k(&mut self, lits: &[SatLit], k: usize) {
        let n = lits.len();
        if k >= n {
            return;
        }
        if k == 0 {
            for &l in lits {
                self.formula.add_clause(&[!l]);
            }
            return;
        }
        // reg[i][j]: among the first i+1 literals at least j+1 are true.
        let mut prev: Vec<SatLit> = Vec::new();
        for (i, &x) in lits.iter().enumerate() {
            let width = k.min(i + 1);
            let mut cur = Vec::with_capacity(width);
            for j in 0..width {
                cur.push(self.fresh());

                let r = cur[j];
                if j == 0 {
                    // x_i -> r_{i,0}; carry r_{i-1,0} -> r_{i,0}
                    self.formula.add_clause(&[!x, r]);
                    if i > 0 {
                        self.formula.add_clause(&[!prev[0], r]);
                    }
                } else {
                    if j <= i {
                        if j < prev.len() {
                            self.formula.add_clause(&[!prev[j], r]);
                        }
                        self.formula.add_clause(&[!x, !prev[j - 1], r]);
                    }
                }
            }
            // Overflow: the (k+1)-th true literal is forbidden.
            if i >= k {
                self.formula.add_clause(&[!x, !prev[k - 1]]);
            }
            prev = cur;
        }
    }

    /// Solve and, when satisfiable, decode the primary variables.
    pub fn solve(&mut self, cs: &ConstraintSystem) -> Result<Option<Assignment>> {
        let mut solver = Solver::new();
        solver.add_formula(&self.formula);
        let sat = solver
            .solve()
            .map_err(|e| Error::Backend(format!("internal solver failed: {e}")))?;
        if !sat {
            return Ok(None);
        }
        let model = solver.model().ok_or_else(|| Error::BadModel("no model".into()))?;
        let truth = |idx: usize| -> bool {
            model
                .get(idx)
                .map(|l| l.is_positive())
                .unwrap_or(false)
        };
        let v = cs.vars;
        let pick = |lits: Vec<usize>| -> Result<usize> {
            let hits: Vec<usize> = lits
                .iter()
                .enumerate()
                .filter(|(_, &idx)| truth(idx))
                .map(|(val, _)| val)
                .collect();
            match hits.as_slice() {
                [one] => Ok(*one),
                other => Err(Error::BadModel(format!(
                    "one-hot block has {} set bits",
                    other.len()
                ))),
            }
        };
        let mut pi = vec![vec![0usize; v.horizon]; v.qubits];
        for q in 0..v.qubits {
            for t in 0..v.horizon {
                pi[q][t] = pick(
                    (0..v.phys)
                        .map(|p| self.lit(&Lit::Map { q, t, p, eq: true }).var().index())
                        .collect(),
                )?;
            }
        }
        let mut tg = vec![0usize; v.gates];
        let mut xg = vec![0usize; v.gates];
        for g in 0..v.gates {
            tg[g] = pick(
                (0..v.horizon)
                    .map(|t| self.lit(&Lit::Time { g, t, eq: true }).var().index())
                    .collect(),
            )?;
            xg[g] = pick(
                (0..v.edges)
                    .map(|e| self.lit(&Lit::Space { g, e, eq: true }).var().index())
                    .collect(),
            )?;
        }
        let mut absorbed = vec![vec![false; v.horizon]; v.edges];
        let mut explicit = vec![vec![false; v.horizon]; v.edges];
        for e in 0..v.edges {
            for t in 0..v.horizon {
                absorbed[e][t] =
                    truth(self.lit(&Lit::Absorbed { e, t, val: true }).var().index());
                explicit[e][t] =
                    truth(self.lit(&Lit::Explicit { e, t, val: true }).var().index());
            }
        }
        Ok(Some(Assignment { pi, tg, xg, absorbed, explicit }))
    }

    /// Enumerate up to `limit` distinct models (distinct over the primary
    /// variables), for exhaustive cross-checks on tiny instances.
    pub fn enumerate(&mut self, cs: &ConstraintSystem, limit: usize) -> Result<Vec<Assignment>> {
        let mut out = Vec::new();
        while out.len() < limit {
            let model = match self.solve(cs)? {
                Some(m) => m,
                None => break,
            };
            // Block this assignment of the primary variables.
            let mut block: Vec<SatLit> = Vec::new();
            let v = cs.vars;
            for q in 0..v.qubits {
                for t in 0..v.horizon {
                    block.push(!self.lit(&Lit::Map { q, t, p: model.pi[q][t], eq: true }));
                }
            }
            for g in 0..v.gates {
                block.push(!self.lit(&Lit::Time { g, t: model.tg[g], eq: true }));
                block.push(!self.lit(&Lit::Space { g, e: model.xg[g], eq: true }));
            }
            for e in 0..v.edges {
                for t in 0..v.horizon {
                    let a = self.lit(&Lit::Absorbed { e, t, val: true });
                    let s = self.lit(&Lit::Explicit { e, t, val: true });
                    block.push(if model.absorbed[e][t] { !a } else { a });
                    block.push(if model.explicit[e][t] { !s } else { s });
                }
            }
            self.formula.add_clause(&block);
            out.push(model);
        }
        Ok(out)
    }
}
