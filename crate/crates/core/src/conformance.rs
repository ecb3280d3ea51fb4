//! The cioco conformance relation, its bounded oracle, and trace inclusion.
//!
//! `iut cioco spec` holds when, after every trace `tr` of the specification and for every
//! input `i` the specification accepts after `tr`, every output the implementation may
//! produce is one the specification allows:
//!
//! ```text
//! Out(iut after (tr, i)) ⊆ Out(spec after (tr, i))   whenever Out(spec after (tr, i)) ≠ ∅
//! ```
//!
//! Inputs the specification leaves unspecified after `tr` do not constrain the
//! implementation. For an input-enabled specification this is exactly trace inclusion.
//!
//! The exact check explores pairs of state sets `(Q_iut, Q_spec)` reached by common
//! traces, breadth first with labels in lexicographic order, so the reported witness is
//! the shortest failing trace and the lexicographically least among those.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsm::{is_input_enabled, Component, Guard, IoPair, Label, Lts, StateSet, Trace};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    /// A trace of both the specification and the implementation.
    pub witness: Trace,
    pub input: Label,
    pub offending_output: Label,
    pub iut_outputs: BTreeSet<Label>,
    pub spec_outputs: BTreeSet<Label>,
}

impl Counterexample {
    /// `witness · ⟨input|offending_output⟩`
    pub fn full_trace(&self) -> Trace {
        self.witness
            .extended(IoPair::new(self.input.clone(), self.offending_output.clone()))
    }
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "after {} on input {}: implementation may output {}, specification allows {{{}}}",
            self.witness,
            self.input,
            self.offending_output,
            self.spec_outputs
                .iter()
                .map(Label::as_str)
                .collect::<Vec<_>>()
                .join(", ")
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    /// No violation up to the bound of a bounded check.
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exact,
    Bounded(usize),
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Exact => f.write_str("exact"),
            Method::Bounded(k) => write!(f, "bounded({k})"),
        }
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Stats {
    /// State-set pairs (exact) or traces (bounded) examined.
    pub explored: usize,
    pub max_depth: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub result: Outcome,
    pub counterexample: Option<Counterexample>,
    pub method: Method,
    pub stats: Stats,
    pub warnings: Vec<String>,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.result == Outcome::Pass
    }

    pub fn failed(&self) -> bool {
        self.result == Outcome::Fail
    }

    pub fn to_json(&self) -> serde_json::Value {
        let ce = self.counterexample.as_ref();
        serde_json::json!({
            "result": self.result,
            "method": self.method,
            "witness": ce.map(|c| &c.witness),
            "input": ce.map(|c| &c.input),
            "offending_output": ce.map(|c| &c.offending_output),
            "iut_outputs": ce.map(|c| &c.iut_outputs),
            "spec_outputs": ce.map(|c| &c.spec_outputs),
            "stats": self.stats,
            "warnings": self.warnings,
        })
    }
}

impl Serialize for Verdict {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.result, &self.counterexample) {
            (Outcome::Fail, Some(ce)) => write!(f, "fail ({}): {ce}", self.method),
            (Outcome::Inconclusive, _) => write!(f, "no violation up to depth {} ({})", self.stats.max_depth, self.method),
            (r, _) => write!(f, "{} ({})", format!("{r:?}").to_lowercase(), self.method),
        }
    }
}

fn require_same_signature(a: &Component, b: &Component) -> Result<()> {
    if a.same_signature(b) {
        return Ok(());
    }
    let diff = |x: &BTreeSet<Label>, y: &BTreeSet<Label>| -> String {
        x.symmetric_difference(y)
            .map(Label::as_str)
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut detail = Vec::new();
    if a.inputs != b.inputs {
        detail.push(format!("inputs differ on {{{}}}", diff(&a.inputs, &b.inputs)));
    }
    if a.outputs != b.outputs {
        detail.push(format!("outputs differ on {{{}}}", diff(&a.outputs, &b.outputs)));
    }
    Err(Error::SignatureMismatch {
        left: a.name.clone(),
        right: b.name.clone(),
        detail: detail.join("; "),
    })
}

struct Node {
    pair: (StateSet, StateSet),
    depth: usize,
    parent: Option<(usize, IoPair)>,
}

fn path_to(nodes: &[Node], mut idx: usize) -> Trace {
    let mut steps = Vec::new();
    while let Some((p, step)) = &nodes[idx].parent {
        steps.push(step.clone());
        idx = *p;
    }
    steps.reverse();
    Trace(steps)
}

/// Breadth-first exploration of state-set pairs. `violation` inspects a pair and may
/// report `(input, offending output, left outputs, right outputs)`; successors follow
/// every step both sides can take.
fn explore<'a>(
    left: &Lts<'a>,
    right: &Lts<'a>,
    mut violation: impl FnMut(&[usize], &[usize]) -> Option<(Label, Label, BTreeSet<Label>, BTreeSet<Label>)>,
) -> (Option<Counterexample>, Stats) {
    let start = (left.start(), right.start());
    let mut nodes = vec![Node {
        pair: start.clone(),
        depth: 0,
        parent: None,
    }];
    let mut seen = HashSet::from([start]);
    let mut queue = VecDeque::from([0usize]);
    let mut stats = Stats::default();

    while let Some(idx) = queue.pop_front() {
        stats.explored += 1;
        stats.max_depth = stats.max_depth.max(nodes[idx].depth);
        let (ql, qr) = nodes[idx].pair.clone();
        if let Some((input, offending_output, iut_outputs, spec_outputs)) = violation(&ql, &qr) {
            let ce = Counterexample {
                witness: path_to(&nodes, idx),
                input,
                offending_output,
                iut_outputs,
                spec_outputs,
            };
            return (Some(ce), stats);
        }
        let rmoves = right.moves(&qr);
        for ((i, o), lnext) in left.moves(&ql) {
            let Some(rnext) = rmoves.get(&(i, o)) else {
                continue;
            };
            let pair = (lnext, rnext.clone());
            if seen.insert(pair.clone()) {
                nodes.push(Node {
                    pair,
                    depth: nodes[idx].depth + 1,
                    parent: Some((idx, IoPair::new(i.clone(), o.clone()))),
                });
                queue.push_back(nodes.len() - 1);
            }
        }
    }
    (None, stats)
}

fn owned(set: BTreeSet<&Label>) -> BTreeSet<Label> {
    set.into_iter().cloned().collect()
}

/// Decides `iut cioco spec` exactly.
pub fn check_cioco_exact(iut: &Component, spec: &Component) -> Result<Verdict> {
    require_same_signature(iut, spec)?;
    let mut warnings = Vec::new();
    if !is_input_enabled(iut) {
        warnings.push(format!("implementation {} is not input-enabled", iut.name));
    }
    let li = Lts::new(iut);
    let ls = Lts::new(spec);
    let (ce, stats) = explore(&li, &ls, |qi, qs| {
        for input in &spec.inputs {
            let allowed = ls.outputs(qs, input.as_str());
            if allowed.is_empty() {
                continue;
            }
            let produced = li.outputs(qi, input.as_str());
            if let Some(bad) = produced.iter().find(|o| !allowed.contains(*o)) {
                return Some((input.clone(), (*bad).clone(), owned(produced.clone()), owned(allowed)));
            }
        }
        None
    });
    Ok(Verdict {
        result: if ce.is_some() { Outcome::Fail } else { Outcome::Pass },
        counterexample: ce,
        method: Method::Exact,
        stats,
        warnings,
    })
}

/// Checks the cioco condition directly on every trace of length at most `k` that both
/// components can perform, shortest traces first. A clean run is reported as
/// [`Outcome::Inconclusive`], never as a pass.
pub fn check_cioco_bounded(iut: &Component, spec: &Component, k: usize, guard: Guard) -> Result<Verdict> {
    require_same_signature(iut, spec)?;
    let mut warnings = Vec::new();
    if !is_input_enabled(iut) {
        warnings.push(format!("implementation {} is not input-enabled", iut.name));
    }
    let li = Lts::new(iut);
    let ls = Lts::new(spec);
    let out_after = |lts: &Lts, tr: &Trace, i: &Label| -> BTreeSet<Label> {
        let set = lts.after(tr);
        owned(lts.outputs(&set, i.as_str()))
    };

    let mut stats = Stats::default();
    let mut level = vec![Trace::empty()];
    for depth in 0..=k {
        let mut next = Vec::new();
        for tr in &level {
            stats.explored += 1;
            stats.max_depth = depth;
            if stats.explored > guard.0 {
                return Err(Error::TraceLimit { limit: guard.0 });
            }
            for input in &spec.inputs {
                let allowed = out_after(&ls, tr, input);
                if allowed.is_empty() {
                    continue;
                }
                let produced = out_after(&li, tr, input);
                if let Some(bad) = produced.iter().find(|o| !allowed.contains(*o)) {
                    let ce = Counterexample {
                        witness: tr.clone(),
                        input: input.clone(),
                        offending_output: bad.clone(),
                        iut_outputs: produced.clone(),
                        spec_outputs: allowed,
                    };
                    return Ok(Verdict {
                        result: Outcome::Fail,
                        counterexample: Some(ce),
                        method: Method::Bounded(k),
                        stats,
                        warnings,
                    });
                }
                if depth < k {
                    for o in produced.intersection(&allowed) {
                        next.push(tr.extended(IoPair::new(input.clone(), o.clone())));
                    }
                }
            }
        }
        // Inputs are visited in order, so `next` is already lexicographically sorted.
        level = next;
        if level.is_empty() {
            break;
        }
    }
    Ok(Verdict {
        result: Outcome::Inconclusive,
        counterexample: None,
        method: Method::Bounded(k),
        stats,
        warnings,
    })
}

/// Decides `Trace(c1) ⊆ Trace(c2)`. A failure carries the shortest trace of `c1` that
/// `c2` cannot perform as `witness · ⟨input|offending_output⟩`.
pub fn check_trace_inclusion(c1: &Component, c2: &Component) -> Result<Verdict> {
    require_same_signature(c1, c2)?;
    let l1 = Lts::new(c1);
    let l2 = Lts::new(c2);
    let (ce, stats) = explore(&l1, &l2, |q1, q2| {
        let m2 = l2.moves(q2);
        l1.moves(q1).into_keys().find(|k| !m2.contains_key(k)).map(|(i, o)| {
            (
                i.clone(),
                o.clone(),
                owned(l1.outputs(q1, i.as_str())),
                owned(l2.outputs(q2, i.as_str())),
            )
        })
    });
    Ok(Verdict {
        result: if ce.is_some() { Outcome::Fail } else { Outcome::Pass },
        counterexample: ce,
        method: Method::Exact,
        stats,
        warnings: Vec::new(),
    })
}
