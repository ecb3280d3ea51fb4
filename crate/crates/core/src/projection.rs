//! Projection of system behaviour onto one of its basic components.
//!
//! A composed step contributes to a leaf according to the rule that produced it: a step
//! the leaf took alone contributes its own `i|o`; a synchronised step contributes the
//! leaf's half (`i|o'` for the producer, `o'|o` for the consumer); a step the leaf did not
//! take contributes nothing. Projections are computed per run and collected, so a
//! nondeterministic step can project onto several leaf steps.
//!
//! The component in context `S↓C` has exactly the projections of the traces of `S` as its
//! traces. [`component_in_context`] builds it finitely by relabelling the composed machine
//! and removing the silent steps; [`component_in_context_tree`] builds the history tree
//! literally up to a depth and serves as its oracle.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt::Write;

use serde::{Serialize, Serializer};

use crate::composition::{adjacency, build_composed, Composed, SystemExpr};
use crate::error::{Error, Result};
use crate::fsm::{Component, Guard, IoPair, Trace, Transition};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProjectedTraceSet {
    pub target: String,
    pub traces: BTreeSet<Trace>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContextProvenance {
    /// Relabel-and-close construction over the composed machine.
    Finite,
    /// Literal history tree truncated at the given depth.
    Tree(usize),
}

impl Serialize for ContextProvenance {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ContextProvenance::Finite => s.serialize_str("finite"),
            ContextProvenance::Tree(k) => s.collect_str(&format_args!("tree({k})")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextComponent {
    pub component: Component,
    pub provenance: ContextProvenance,
}

impl ContextComponent {
    /// Canonical component JSON plus a `provenance` sidecar field.
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = crate::format::to_json_value(&self.component);
        v["provenance"] = serde_json::to_value(self.provenance).unwrap();
        v
    }
}

fn target_check(composed: &Composed, target: &str) -> Result<()> {
    if composed.leaves.iter().any(|l| l == target) {
        Ok(())
    } else {
        Err(Error::UnknownTarget(target.to_string()))
    }
}

/// Per-run projections of `tr` onto every leaf at once. Empty iff `tr` is not a trace.
pub fn project_runs_in(composed: &Composed, tr: &Trace) -> BTreeSet<BTreeMap<String, Trace>> {
    let adj = adjacency(&composed.component);
    let blank: BTreeMap<String, Trace> = composed
        .leaves
        .iter()
        .map(|l| (l.clone(), Trace::empty()))
        .collect();
    let mut current: BTreeSet<(&str, BTreeMap<String, Trace>)> =
        BTreeSet::from([(composed.component.initial.as_str(), blank)]);
    for step in tr.steps() {
        let mut next = BTreeSet::new();
        for (state, proj) in &current {
            for t in adj.get(state).into_iter().flatten() {
                if t.input != step.input || t.output != step.output {
                    continue;
                }
                for j in composed.justifications(t) {
                    let mut p = proj.clone();
                    for (leaf, io) in &j.steps {
                        p.get_mut(leaf).expect("leaf").0.push(io.clone());
                    }
                    next.insert((t.to.as_str(), p));
                }
            }
        }
        current = next;
        if current.is_empty() {
            break;
        }
    }
    current.into_iter().map(|(_, p)| p).collect()
}

/// Per-run joint projections of `tr`, one map leaf → trace per distinct run outcome.
pub fn project_runs(expr: &SystemExpr, tr: &Trace) -> Result<BTreeSet<BTreeMap<String, Trace>>> {
    let composed = build_composed(expr, true)?;
    let runs = project_runs_in(&composed, tr);
    if runs.is_empty() {
        return Err(Error::NotATrace(tr.clone()));
    }
    Ok(runs)
}

/// `tr↓target`: every sequence of target steps some run of the system along `tr` exercises.
pub fn project_trace(expr: &SystemExpr, tr: &Trace, target: &str) -> Result<ProjectedTraceSet> {
    let composed = build_composed(expr, true)?;
    target_check(&composed, target)?;
    let runs = project_runs_in(&composed, tr);
    if runs.is_empty() {
        return Err(Error::NotATrace(tr.clone()));
    }
    Ok(ProjectedTraceSet {
        target: target.to_string(),
        traces: runs.into_iter().map(|mut p| p.remove(target).unwrap()).collect(),
    })
}

/// Composed transitions relabelled by the target's contribution; `None` is a silent step.
fn relabelled<'a>(composed: &'a Composed, target: &str) -> HashMap<&'a str, BTreeSet<(Option<IoPair>, &'a str)>> {
    let mut edges: HashMap<&str, BTreeSet<(Option<IoPair>, &str)>> = HashMap::new();
    for t in &composed.component.transitions {
        for j in composed.justifications(t) {
            edges
                .entry(t.from.as_str())
                .or_default()
                .insert((j.steps.get(target).cloned(), t.to.as_str()));
        }
    }
    edges
}

fn leaf_of<'a>(expr: &'a SystemExpr, target: &str) -> Result<&'a Component> {
    expr.leaf_component(target)
        .ok_or_else(|| Error::UnknownTarget(target.to_string()))
}

/// `S↓C` by relabelling and forward ε-closure. States are the composed states reachable
/// in the closed machine.
pub fn component_in_context(expr: &SystemExpr, target: &str) -> Result<ContextComponent> {
    let leaf = leaf_of(expr, target)?;
    let composed = build_composed(expr, true)?;
    Ok(context_of(&composed, leaf, target))
}

pub(crate) fn context_of(composed: &Composed, leaf: &Component, target: &str) -> ContextComponent {
    let edges = relabelled(composed, target);
    let closure = |s: &str| -> BTreeSet<String> {
        let mut seen = BTreeSet::from([s.to_string()]);
        let mut stack = vec![s.to_string()];
        while let Some(u) = stack.pop() {
            for (label, v) in edges.get(u.as_str()).into_iter().flatten() {
                if label.is_none() && seen.insert(v.to_string()) {
                    stack.push(v.to_string());
                }
            }
        }
        seen
    };

    let initial = composed.component.initial.clone();
    let mut states = BTreeSet::from([initial.clone()]);
    let mut transitions = BTreeSet::new();
    let mut queue = VecDeque::from([initial.clone()]);
    while let Some(s) = queue.pop_front() {
        for u in closure(&s) {
            for (label, v) in edges.get(u.as_str()).into_iter().flatten() {
                let Some(io) = label else { continue };
                transitions.insert(Transition::new(s.clone(), io.input.clone(), io.output.clone(), *v));
                if states.insert(v.to_string()) {
                    queue.push_back(v.to_string());
                }
            }
        }
    }

    ContextComponent {
        component: Component {
            name: format!("{target}@{}", composed.component.name),
            states,
            initial,
            inputs: leaf.inputs.clone(),
            outputs: leaf.outputs.clone(),
            transitions,
        },
        provenance: ContextProvenance::Finite,
    }
}

fn history_name(h: &Trace) -> String {
    let mut s = String::from("<");
    for (n, step) in h.steps().iter().enumerate() {
        if n > 0 {
            s.push(',');
        }
        write!(s, "{step}").unwrap();
    }
    s.push('>');
    s
}

/// `S↓C` built literally: states are projected histories of length at most `k`, and `h`
/// steps to `h·⟨i|o⟩` whenever some run of the system projects onto `h·⟨i|o⟩`.
pub fn component_in_context_tree(expr: &SystemExpr, target: &str, k: usize, guard: Guard) -> Result<ContextComponent> {
    let leaf = leaf_of(expr, target)?;
    let composed = build_composed(expr, true)?;
    let adj = adjacency(&composed.component);

    // Every (composed state, history) pair some run reaches.
    let start = (composed.component.initial.as_str(), Trace::empty());
    let mut seen: HashSet<(&str, Trace)> = HashSet::from([start.clone()]);
    let mut stack = vec![start];
    let mut edges: BTreeSet<(Trace, IoPair)> = BTreeSet::new();
    while let Some((state, hist)) = stack.pop() {
        for t in adj.get(state).into_iter().flatten() {
            for j in composed.justifications(t) {
                let next = match j.steps.get(target) {
                    None => hist.clone(),
                    Some(_) if hist.len() >= k => continue,
                    Some(io) => {
                        edges.insert((hist.clone(), io.clone()));
                        hist.extended(io.clone())
                    }
                };
                if seen.insert((t.to.as_str(), next.clone())) {
                    if seen.len() > guard.0 {
                        return Err(Error::TraceLimit { limit: guard.0 });
                    }
                    stack.push((t.to.as_str(), next));
                }
            }
        }
    }

    let histories: BTreeSet<Trace> = seen.into_iter().map(|(_, h)| h).collect();
    let mut names: BTreeMap<&Trace, String> = BTreeMap::new();
    let mut taken = HashSet::new();
    for h in &histories {
        let mut n = history_name(h);
        while !taken.insert(n.clone()) {
            n.push('\'');
        }
        names.insert(h, n);
    }
    let transitions = edges
        .into_iter()
        .map(|(h, io)| {
            let to = names[&h.extended(io.clone())].clone();
            Transition::new(names[&h].clone(), io.input, io.output, to)
        })
        .collect();

    Ok(ContextComponent {
        component: Component {
            name: format!("{target}@{}/tree{k}", composed.component.name),
            states: names.values().cloned().collect(),
            initial: names[&Trace::empty()].clone(),
            inputs: leaf.inputs.clone(),
            outputs: leaf.outputs.clone(),
            transitions,
        },
        provenance: ContextProvenance::Tree(k),
    })
}
