//! External SMT solver integration.
//!
//! The configured command is spawned, the SMT-LIB2 script is written to its
//! standard input, and `sat`/`unsat` plus a `(define-fun ...)` model are read
//! back. The command string is split on whitespace; quoting is not
//! interpreted.

use std::io::{Read, Write};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use regex::Regex;

use crate::encode::{emit_smtlib, Assignment, ConstraintSystem};
use crate::error::{Error, Result};
use crate::solve::{SolveOutcome, Status};

pub fn check_external(
    cs: &ConstraintSystem,
    command: &str,
    timeout: Option<Duration>,
) -> Result<SolveOutcome> {
    let start = Instant::now();
    let script = emit_smtlib(cs);
    let mut parts = command.split_whitespace();
    let program = parts
        .next()
        .ok_or_else(|| Error::Backend("empty solver command".into()))?;
    let mut child = Command::new(program)
        .args(parts)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| Error::Backend(format!("failed to launch '{command}': {e}")))?;
    child
        .stdin
        .take()
        .ok_or_else(|| Error::Backend("solver stdin unavailable".into()))?
        .write_all(script.as_bytes())
        .map_err(|e| Error::Backend(format!("failed to write script: {e}")))?;

    let output = match read_with_timeout(&mut child, timeout)? {
        Some(text) => text,
        None => {
            let _ = child.kill();
            let _ = child.wait();
            return Ok(SolveOutcome {
                status: Status::Timeout,
                model: None,
                wall_time: start.elapsed(),
            });
        }
    };

    let verdict = output
        .lines()
        .map(str::trim)
        .find(|l| matches!(*l, "sat" | "unsat" | "unknown"))
        .ok_or_else(|| Error::Backend(format!("no sat/unsat verdict in solver output: {output:?}")))?;
    match verdict {
        "unsat" => Ok(SolveOutcome {
            status: Status::Unsat,
            model: None,
            wall_time: start.elapsed(),
        }),
        "unknown" => Ok(SolveOutcome {
            status: Status::Timeout,
            model: None,
            wall_time: start.elapsed(),
        }),
        _ => {
            let model = parse_model(&output, cs)?;
            Ok(SolveOutcome {
                status: Status::Sat,
                model: Some(model),
                wall_time: start.elapsed(),
            })
        }
    }
}

/// Drain the child's stdout on a helper thread so a per-check timeout can be
/// enforced without OS-specific process APIs.
fn read_with_timeout(child: &mut Child, timeout: Option<Duration>) -> Result<Option<String>> {
    let mut stdout = child
        .stdout
        .take()
        .ok_or_else(|| Error::Backend("solver stdout unavailable".into()))?;
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        let mut buf = String::new();
        let res = stdout.read_to_string(&mut buf).map(|_| buf);
        let _ = tx.send(res);
    });
    let received = match timeout {
        Some(limit) => match rx.recv_timeout(limit) {
            Ok(r) => r,
            Err(mpsc::RecvTimeoutError::Timeout) => return Ok(None),
            Err(mpsc::RecvTimeoutError::Disconnected) => {
                return Err(Error::Backend("solver output channel closed".into()))
            }
        },
        None => rx
            .recv()
            .map_err(|_| Error::Backend("solver output channel closed".into()))?,
    };
    let text = received.map_err(|e| Error::Backend(format!("failed to read solver output: {e}")))?;
    let _ = child.wait();
    Ok(Some(text))
}

/// Recover an assignment from `(define-fun name () Int v)` and
/// `(define-fun name () Bool b)` entries, using the stable naming scheme.
fn parse_model(output: &str, cs: &ConstraintSystem) -> Result<Assignment> {
    let v = cs.vars;
    let int_re = Regex::new(
        r"\(define-fun\s+([A-Za-z0-9_]+)\s*\(\)\s*Int\s+(\(-\s*\d+\)|-?\d+)\s*\)",
    )
    .expect("static regex");
    let bool_re =
        Regex::new(r"\(define-fun\s+([A-Za-z0-9_]+)\s*\(\)\s*Bool\s+(true|false)\s*\)")
            .expect("static regex");
    let pi_re = Regex::new(r"^pi_q(\d+)_t(\d+)$").expect("static regex");
    let tg_re = Regex::new(r"^tg_(\d+)$").expect("static regex");
    let xg_re = Regex::new(r"^xg_(\d+)$").expect("static regex");
    let a_re = Regex::new(r"^a_e(\d+)_t(\d+)$").expect("static regex");
    let s_re = Regex::new(r"^s_e(\d+)_t(\d+)$").expect("static regex");

    let mut pi = vec![vec![None::<usize>; v.horizon]; v.qubits];
    let mut tg = vec![None::<usize>; v.gates];
    let mut xg = vec![None::<usize>; v.gates];
    let mut absorbed = vec![vec![false; v.horizon]; v.edges];
    let mut explicit = vec![vec![false; v.horizon]; v.edges];

    for cap in int_re.captures_iter(output) {
        let name = &cap[1];
        let raw = cap[2].trim();
        let value: i64 = if let Some(inner) = raw.strip_prefix("(-") {
            let inner = inner.trim_end_matches(')').trim();
            -inner.parse::<i64>().map_err(|_| bad(name, raw))?
        } else {
            raw.parse().map_err(|_| bad(name, raw))?
        };
        if value < 0 {
            return Err(bad(name, raw));
        }
        let value = value as usize;
        if let Some(m) = pi_re.captures(name) {
            let (q, t) = (idx(&m[1])?, idx(&m[2])?);
            if q < v.qubits && t < v.horizon && value < v.phys {
                pi[q][t] = Some(value);
            } else {
                return Err(bad(name, raw));
            }
        } else if let Some(m) = tg_re.captures(name) {
            let g = idx(&m[1])?;
            if g < v.gates && value < v.horizon {
                tg[g] = Some(value);
            } else {
                return Err(bad(name, raw));
            }
        } else if let Some(m) = xg_re.captures(name) {
            let g = idx(&m[1])?;
            if g < v.gates && value < v.edges {
                xg[g] = Some(value);
            } else {
                return Err(bad(name, raw));
            }
        }
    }
    for cap in bool_re.captures_iter(output) {
        let name = &cap[1];
        let value = &cap[2] == "true";
        if let Some(m) = a_re.captures(name) {
            let (e, t) = (idx(&m[1])?, idx(&m[2])?);
            if e < v.edges && t < v.horizon {
                absorbed[e][t] = value;
            }
        } else if let Some(m) = s_re.captures(name) {
            let (e, t) = (idx(&m[1])?, idx(&m[2])?);
            if e < v.edges && t < v.horizon {
                explicit[e][t] = value;
            }
        }
    }

    let pi = pi
        .into_iter()
        .enumerate()
        .map(|(q, row)| {
            row.into_iter()
                .enumerate()
                .map(|(t, val)| val.ok_or_else(|| Error::BadModel(format!("pi_q{q}_t{t} missing"))))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let tg = tg
        .into_iter()
        .enumerate()
        .map(|(g, val)| val.ok_or_else(|| Error::BadModel(format!("tg_{g} missing"))))
        .collect::<Result<Vec<_>>>()?;
    let xg = xg
        .into_iter()
        .enumerate()
        .map(|(g, val)| val.ok_or_else(|| Error::BadModel(format!("xg_{g} missing"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(Assignment { pi, tg, xg, absorbed, explicit })
}

fn idx(s: &str) -> Result<usize> {
    s.parse().map_err(|_| Error::BadModel(format!("bad index '{s}'")))
}

fn bad(name: &str, raw: &str) -> Error {
    Error::BadModel(format!("value {raw} out of range for {name}"))
}
