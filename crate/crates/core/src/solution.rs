//! Mapping solutions: decoding solver models, independent verification,
//! metrics and fidelity, post-processing absorption, and the structural
//! checks on optimal solutions.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::arch::{CouplingGraph, GraphKind};
use crate::encode::{Assignment, VarTable};
use crate::error::{Error, Result};
use crate::qprog::{dependencies, Program};

pub mod u4;

/// Per-gate spacetime placement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub t: usize,
    pub edge: usize,
}

/// A complete mapping solution over `horizon` time steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingSolution {
    pub horizon: usize,
    /// mapping[t][q] = physical qubit of program qubit q at time t.
    pub mapping: Vec<Vec<usize>>,
    pub placements: Vec<Placement>,
    /// (edge, t) pairs carrying an absorbed SWAP.
    pub absorbed: Vec<(usize, usize)>,
    /// (edge, t) pairs carrying an explicit SWAP.
    pub explicit: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub depth: usize,
    pub swap_count: usize,
    pub absorbed_count: usize,
    pub fidelity: f64,
    pub gate_count: usize,
}

/// One verification failure, tagged with its constraint family.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub family: &'static str,
    pub detail: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}] {}", self.family, self.detail)
    }
}

impl MappingSolution {
    pub fn swap_count(&self) -> usize {
        self.explicit.len()
    }

    pub fn depth(&self) -> usize {
        self.horizon
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Transcribe a backend model into a solution, trimming trailing time steps
/// that carry no gates or SWAPs.
pub fn decode(model: &Assignment, vt: &VarTable) -> Result<MappingSolution> {
    if model.tg.len() != vt.gates
        || model.xg.len() != vt.gates
        || model.pi.len() != vt.qubits
        || model.pi.iter().any(|row| row.len() != vt.horizon)
    {
        return Err(Error::BadModel("model does not match the variable table".into()));
    }
    for g in 0..vt.gates {
        if model.tg[g] >= vt.horizon || model.xg[g] >= vt.edges {
            return Err(Error::BadModel(format!("gate {g} placed out of range")));
        }
    }
    let mut absorbed = Vec::new();
    let mut explicit = Vec::new();
    for e in 0..vt.edges {
        for t in 0..vt.horizon {
            if model.absorbed[e][t] {
                if !(0..vt.gates).any(|g| model.tg[g] == t && model.xg[g] == e) {
                    return Err(Error::BadModel(format!(
                        "absorbed SWAP at (e{e}, t{t}) has no gate"
                    )));
                }
                absorbed.push((e, t));
            }
            if model.explicit[e][t] {
                explicit.push((e, t));
            }
        }
    }
    let last_active = (0..vt.gates)
        .map(|g| model.tg[g])
        .chain(explicit.iter().map(|&(_, t)| t))
        .chain(absorbed.iter().map(|&(_, t)| t))
        .max();
    let horizon = match last_active {
        Some(t) => t + 1,
        None => 1,
    };
    absorbed.retain(|&(_, t)| t < horizon);
    explicit.retain(|&(_, t)| t < horizon);
    let mapping = (0..horizon)
        .map(|t| (0..vt.qubits).map(|q| model.pi[q][t]).collect())
        .collect();
    Ok(MappingSolution {
        horizon,
        mapping,
        placements: (0..vt.gates)
            .map(|g| Placement { t: model.tg[g], edge: model.xg[g] })
            .collect(),
        absorbed,
        explicit,
    })
}

/// Re-execute the solution forward and check every rule independently of the
/// encoder. Returns metrics (with fidelity left at 1.0; use [`fidelity`] for
/// hardware-specific estimates) or the full violation list.
pub fn verify(
    p: &Program,
    g: &CouplingGraph,
    s: &MappingSolution,
) -> std::result::Result<Metrics, Vec<Violation>> {
    let mut errs = Vec::new();
    let mut fail = |family: &'static str, detail: String| -> () {
        // closure keeps call sites terse
        errs.push(Violation { family, detail });
    };

    if s.horizon == 0 || s.mapping.len() != s.horizon {
        fail("shape", format!("horizon {} vs {} mapping rows", s.horizon, s.mapping.len()));
        return Err(errs);
    }
    if s.placements.len() != p.gate_count() {
        fail("shape", format!(
            "{} placements for {} gates",
            s.placements.len(),
            p.gate_count()
        ));
        return Err(errs);
    }
    for (t, row) in s.mapping.iter().enumerate() {
        if row.len() != p.qubit_count {
            fail("shape", format!("mapping row {t} has {} entries", row.len()));
            return Err(errs);
        }
        if row.iter().any(|&pp| pp >= g.qubit_count) {
            fail("shape", format!("mapping row {t} out of range"));
            return Err(errs);
        }
        let distinct: BTreeSet<_> = row.iter().collect();
        if distinct.len() != row.len() {
            fail("injectivity", format!("mapping at t={t} is not injective"));
        }
    }
    for &(e, t) in s.absorbed.iter().chain(&s.explicit) {
        if e >= g.edge_count() || t >= s.horizon {
            fail("shape", format!("SWAP at (e{e}, t{t}) out of range"));
            return Err(errs);
        }
    }
    for (gate, pl) in s.placements.iter().enumerate() {
        if pl.t >= s.horizon || pl.edge >= g.edge_count() {
            fail("shape", format!("gate {gate} placed out of range"));
            return Err(errs);
        }
    }

    // Dependencies and commutation.
    let deps = dependencies(p);
    for &(a, b) in &deps.precedence {
        if s.placements[a].t >= s.placements[b].t {
            fail("dependencies", format!(
                "gate {b} must come after gate {a} (t={} vs t={})",
                s.placements[b].t, s.placements[a].t
            ));
        }
    }
    for &(a, b) in &deps.distinct_time {
        if s.placements[a].t == s.placements[b].t {
            fail("dependencies", format!(
                "commuting gates {a} and {b} share time {}",
                s.placements[a].t
            ));
        }
    }

    // Mapping implied by spacetime coordinates.
    for (gate, pl) in s.placements.iter().enumerate() {
        let (q1, q2) = p.gates[gate].qubits;
        let (pa, pb) = g.endpoints(pl.edge);
        let m1 = s.mapping[pl.t][q1];
        let m2 = s.mapping[pl.t][q2];
        if !((m1 == pa && m2 == pb) || (m1 == pb && m2 == pa)) {
            fail("mapping-implied", format!(
                "gate {gate} at (t{}, e{}) but operands map to p{m1}, p{m2}",
                pl.t, pl.edge
            ));
        }
    }

    // No overlaps.
    for (i, &(e, t)) in s.explicit.iter().enumerate() {
        for &(f, t2) in &s.explicit[i + 1..] {
            if t == t2 && g.incident(e, f) {
                fail("no-overlaps", format!("explicit SWAPs on e{e} and e{f} at t{t}"));
            }
        }
        for (gate, pl) in s.placements.iter().enumerate() {
            if pl.t == t && g.incident(pl.edge, e) {
                fail("no-overlaps", format!(
                    "gate {gate} and explicit SWAP overlap near e{e} at t{t}"
                ));
            }
        }
    }

    // Absorption support.
    for &(e, t) in &s.absorbed {
        if !s.placements.iter().any(|pl| pl.t == t && pl.edge == e) {
            fail("absorption", format!("absorbed SWAP at (e{e}, t{t}) has no gate"));
        }
    }

    // Mapping transformation, simulated forward from the first row.
    for t in 0..s.horizon - 1 {
        let mut next = s.mapping[t].clone();
        for &(e, ts) in s.absorbed.iter().chain(&s.explicit) {
            if ts != t {
                continue;
            }
            let (pa, pb) = g.endpoints(e);
            for entry in next.iter_mut() {
                if *entry == pa {
                    *entry = pb;
                } else if *entry == pb {
                    *entry = pa;
                }
            }
        }
        if next != s.mapping[t + 1] {
            fail("mapping-transformation", format!(
                "mapping at t={} does not follow from SWAPs at t={t}",
                t + 1
            ));
        }
    }

    if errs.is_empty() {
        Ok(Metrics {
            depth: s.horizon,
            swap_count: s.explicit.len(),
            absorbed_count: s.absorbed.len(),
            fidelity: 1.0,
            gate_count: p.gate_count(),
        })
    } else {
        Err(errs)
    }
}

/// Fidelity estimate: decoherence over idle slots times per-gate fidelity,
/// f = exp(-(|Q| T - 2(|G|+S)) / (|Q| T0)) * fU^(|G|+S).
pub fn fidelity(
    qubits: usize,
    depth: usize,
    gates: usize,
    swaps: usize,
    t0: f64,
    f_u: f64,
) -> Result<f64> {
    if !(t0 > 0.0) {
        return Err(Error::InvalidMetrics("T0 must be positive".into()));
    }
    if !(f_u > 0.0 && f_u <= 1.0) {
        return Err(Error::InvalidMetrics("fU must be in (0, 1]".into()));
    }
    let slots = qubits * depth;
    let busy = 2 * (gates + swaps);
    if slots < busy {
        return Err(Error::InvalidMetrics(format!(
            "over-packed schedule: {slots} qubit-slots for {busy} gate-slots"
        )));
    }
    let idle = (slots - busy) as f64;
    Ok((-idle / (qubits as f64 * t0)).exp() * f_u.powi((gates + swaps) as i32))
}

/// Total fidelity of p iterations of the same schedule.
pub fn multi_iteration_fidelity(f_single: f64, p_iters: u32) -> f64 {
    f_single.powi(p_iters as i32)
}

/// Greedy post-processing: absorb explicit SWAPs into gates adjacent in time
/// on the same edge, then compact gates to earlier steps. Every candidate
/// change is validated by the verifier before it is kept.
pub fn postprocess_absorb(
    s: &MappingSolution,
    p: &Program,
    g: &CouplingGraph,
) -> Result<MappingSolution> {
    if let Err(v) = verify(p, g, s) {
        return Err(Error::Invalid(v.len()));
    }
    let mut cur = s.clone();
    let mut changed = true;
    while changed {
        changed = false;
        // Absorb an explicit SWAP into a gate one step away on the same edge.
        'outer: for (i, &(e, t)) in cur.explicit.iter().enumerate() {
            for dt in [-1isize, 1] {
                let gt = t as isize + dt;
                if gt < 0 || gt as usize >= cur.horizon {
                    continue;
                }
                let gt = gt as usize;
                let has_gate = cur.placements.iter().any(|pl| pl.t == gt && pl.edge == e);
                let already = cur.absorbed.iter().any(|&(ae, at)| ae == e && at == gt);
                if !has_gate || already {
                    continue;
                }
                let mut cand = cur.clone();
                cand.explicit.remove(i);
                cand.absorbed.push((e, gt));
                cand.absorbed.sort_unstable();
                // Moving the SWAP in time shifts when the exchange happens;
                // recompute the affected mapping rows.
                let lo = t.min(gt);
                let (pa, pb) = g.endpoints(e);
                let row = &mut cand.mapping[lo + 1];
                for entry in row.iter_mut() {
                    if *entry == pa {
                        *entry = pb;
                    } else if *entry == pb {
                        *entry = pa;
                    }
                }
                if verify(p, g, &cand).is_ok() {
                    cur = cand;
                    changed = true;
                    break 'outer;
                }
            }
        }
        if changed {
            continue;
        }
        // Compact: try moving each gate (with its absorbed SWAP) one step
        // earlier.
        'compact: for gate in 0..cur.placements.len() {
            let pl = cur.placements[gate];
            if pl.t == 0 {
                continue;
            }
            let mut cand = cur.clone();
            cand.placements[gate].t = pl.t - 1;
            if let Some(pos) =
                cand.absorbed.iter().position(|&(e, t)| e == pl.edge && t == pl.t)
            {
                cand.absorbed[pos].1 = pl.t - 1;
                let (pa, pb) = g.endpoints(pl.edge);
                let row = &mut cand.mapping[pl.t];
                for entry in row.iter_mut() {
                    if *entry == pa {
                        *entry = pb;
                    } else if *entry == pb {
                        *entry = pa;
                    }
                }
            }
            if verify(p, g, &cand).is_ok() {
                cur = cand;
                changed = true;
                break 'compact;
            }
        }
    }
    // Drop trailing steps with no activity.
    let last_active = cur
        .placements
        .iter()
        .map(|pl| pl.t)
        .chain(cur.absorbed.iter().map(|&(_, t)| t))
        .chain(cur.explicit.iter().map(|&(_, t)| t))
        .max()
        .unwrap_or(0);
    cur.horizon = last_active + 1;
    cur.mapping.truncate(cur.horizon);
    debug_assert!(verify(p, g, &cur).is_ok());
    Ok(cur)
}

/// Return every time step t where the union of gate matchings at t and t+1
/// is itself a matching (both steps nonempty). Empty for depth-optimal
/// solutions.
pub fn check_theorem1(s: &MappingSolution, g: &CouplingGraph) -> Vec<usize> {
    let mut flagged = Vec::new();
    for t in 0..s.horizon.saturating_sub(1) {
        let m_t: Vec<usize> =
            s.placements.iter().filter(|pl| pl.t == t).map(|pl| pl.edge).collect();
        let m_next: Vec<usize> =
            s.placements.iter().filter(|pl| pl.t == t + 1).map(|pl| pl.edge).collect();
        if m_t.is_empty() || m_next.is_empty() {
            continue;
        }
        let union: Vec<usize> = m_t.iter().chain(&m_next).copied().collect();
        if crate::arch::is_matching(g, &union).unwrap_or(false) {
            flagged.push(t);
        }
    }
    flagged
}

/// True iff some phase makes all activity (gates and explicit SWAPs) at each
/// step use a single parity class of the line's edges.
pub fn alternating_pattern_holds(s: &MappingSolution, g: &CouplingGraph) -> Result<bool> {
    if g.kind != GraphKind::Line {
        return Err(Error::NotALine(format!("{:?}", g.kind)));
    }
    let activity = |t: usize| -> Vec<usize> {
        s.placements
            .iter()
            .filter(|pl| pl.t == t)
            .map(|pl| pl.edge)
            .chain(s.explicit.iter().filter(|&&(_, ts)| ts == t).map(|&(e, _)| e))
            .collect()
    };
    'phase: for phase in 0..2usize {
        for t in 0..s.horizon {
            for e in activity(t) {
                if e % 2 != (t + phase) % 2 {
                    continue 'phase;
                }
            }
        }
        return Ok(true);
    }
    Ok(false)
}
