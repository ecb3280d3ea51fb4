//! The synchronous parallel operator `⊙` and systems built from it.
//!
//! `⊙(C1, C2)` has inputs `(I1 ∪ I2) \ (O1 ∪ O2)`, outputs `O1 ∪ O2`, and a transition
//! relation closed under four rules:
//!
//! 1. `C1` reacts alone: `s1 —i|o→ s1'` with `o ∉ I2`.
//! 2. `C2` reacts alone (symmetric).
//! 3. `C1` reacts with `i|o'` and `C2` consumes `o'` in the same step, emitting `o`.
//! 4. Symmetric to 3 with `C2` producing the intermediate output.
//!
//! Triggers must lie in the composed input alphabet. Synchronisation is single-hop: an
//! output produced by the consuming side is never fed back within the same step.
//! Only product states reachable from the initial pair are materialized.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsm::{Component, IoPair, Label, Transition};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SystemExpr {
    Leaf { name: String, component: Component },
    Node {
        left: Box<SystemExpr>,
        right: Box<SystemExpr>,
    },
}

impl SystemExpr {
    /// A leaf named after the component.
    pub fn leaf(component: Component) -> Self {
        SystemExpr::Leaf {
            name: component.name.clone(),
            component,
        }
    }

    pub fn par(left: SystemExpr, right: SystemExpr) -> Self {
        SystemExpr::Node {
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    /// Leaves in left-to-right order.
    pub fn leaves(&self) -> Vec<(&str, &Component)> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<(&'a str, &'a Component)>) {
        match self {
            SystemExpr::Leaf { name, component } => out.push((name, component)),
            SystemExpr::Node { left, right } => {
                left.collect_leaves(out);
                right.collect_leaves(out);
            }
        }
    }

    pub fn leaf_component(&self, name: &str) -> Option<&Component> {
        self.leaves()
            .into_iter()
            .find(|(n, _)| *n == name)
            .map(|(_, c)| c)
    }

    /// Parses `M` or `(par L R)`, resolving names through `lookup`.
    pub fn parse(src: &str, lookup: &BTreeMap<String, Component>) -> Result<SystemExpr> {
        let tokens = tokenize(src);
        let mut pos = 0;
        let expr = parse_expr(&tokens, &mut pos, lookup)?;
        if pos != tokens.len() {
            return Err(sexpr_error(format!("trailing input after expression: {}", tokens[pos..].join(" "))));
        }
        Ok(expr)
    }
}

impl fmt::Display for SystemExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SystemExpr::Leaf { name, .. } => f.write_str(name),
            SystemExpr::Node { left, right } => write!(f, "(par {left} {right})"),
        }
    }
}

fn sexpr_error(message: String) -> Error {
    Error::Parse { line: 1, message }
}

fn tokenize(src: &str) -> Vec<String> {
    src.replace('(', " ( ")
        .replace(')', " ) ")
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

fn parse_expr(
    tokens: &[String],
    pos: &mut usize,
    lookup: &BTreeMap<String, Component>,
) -> Result<SystemExpr> {
    let tok = tokens
        .get(*pos)
        .ok_or_else(|| sexpr_error("unexpected end of expression".into()))?;
    *pos += 1;
    match tok.as_str() {
        "(" => {
            match tokens.get(*pos).map(String::as_str) {
                Some("par") => *pos += 1,
                other => return Err(sexpr_error(format!("expected `par`, found {other:?}"))),
            }
            let left = parse_expr(tokens, pos, lookup)?;
            let right = parse_expr(tokens, pos, lookup)?;
            match tokens.get(*pos).map(String::as_str) {
                Some(")") => *pos += 1,
                other => return Err(sexpr_error(format!("expected `)`, found {other:?}"))),
            }
            Ok(SystemExpr::par(left, right))
        }
        ")" => Err(sexpr_error("unexpected `)`".into())),
        name => {
            let component = lookup
                .get(name)
                .ok_or_else(|| sexpr_error(format!("unknown component `{name}`")))?;
            Ok(SystemExpr::Leaf {
                name: name.to_string(),
                component: component.clone(),
            })
        }
    }
}

/// Sub(S): the names of the basic components a system is built from.
pub fn subcomponents(expr: &SystemExpr) -> BTreeSet<String> {
    match expr {
        SystemExpr::Leaf { name, .. } => BTreeSet::from([name.clone()]),
        SystemExpr::Node { left, right } => {
            let mut s = subcomponents(left);
            s.extend(subcomponents(right));
            s
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositionReport {
    pub o1_cap_i2: BTreeSet<Label>,
    pub o2_cap_i1: BTreeSet<Label>,
    pub i1_cap_i2: BTreeSet<Label>,
    pub o1_cap_o2: BTreeSet<Label>,
    /// Both synchronisation directions are non-empty.
    pub def3_applicable: bool,
    /// `I1 ∩ I2 = O1 ∩ O2 = ∅`, required by both compositional theorems.
    pub theorem_constraints_hold: bool,
}

pub fn signature_check(c1: &Component, c2: &Component) -> CompositionReport {
    let cap = |a: &BTreeSet<Label>, b: &BTreeSet<Label>| -> BTreeSet<Label> {
        a.intersection(b).cloned().collect()
    };
    let o1_cap_i2 = cap(&c1.outputs, &c2.inputs);
    let o2_cap_i1 = cap(&c2.outputs, &c1.inputs);
    let i1_cap_i2 = cap(&c1.inputs, &c2.inputs);
    let o1_cap_o2 = cap(&c1.outputs, &c2.outputs);
    CompositionReport {
        def3_applicable: !o1_cap_i2.is_empty() && !o2_cap_i1.is_empty(),
        theorem_constraints_hold: i1_cap_i2.is_empty() && o1_cap_o2.is_empty(),
        o1_cap_i2,
        o2_cap_i1,
        i1_cap_i2,
        o1_cap_o2,
    }
}

/// Which inference rule produced a composed transition. `Leaf` marks the transitions of
/// a basic component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Rule {
    Leaf,
    LeftOnly,
    RightOnly,
    LeftToRight,
    RightToLeft,
}

impl Rule {
    /// Rule number 1–4, 0 for leaves.
    pub fn number(self) -> u8 {
        match self {
            Rule::Leaf => 0,
            Rule::LeftOnly => 1,
            Rule::RightOnly => 2,
            Rule::LeftToRight => 3,
            Rule::RightToLeft => 4,
        }
    }
}

/// One derivation of a composed transition: the rule applied at the top node and the
/// step every participating leaf took. Leaves absent from `steps` stayed idle.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Justification {
    pub rule: Rule,
    pub steps: BTreeMap<String, IoPair>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NodeReport {
    pub path: String,
    pub expr: String,
    pub report: CompositionReport,
    /// Composed although one synchronisation direction is empty.
    pub relaxed: bool,
}

/// A built system together with rule provenance for every transition.
#[derive(Debug, Clone)]
pub struct Composed {
    pub component: Component,
    pub leaves: Vec<String>,
    pub provenance: BTreeMap<Transition, BTreeSet<Justification>>,
    pub reports: Vec<NodeReport>,
}

impl Composed {
    fn leaf(name: &str, c: &Component) -> Self {
        let provenance = c
            .transitions
            .iter()
            .map(|t| {
                let j = Justification {
                    rule: Rule::Leaf,
                    steps: BTreeMap::from([(name.to_string(), t.io())]),
                };
                (t.clone(), BTreeSet::from([j]))
            })
            .collect();
        Composed {
            component: c.clone(),
            leaves: vec![name.to_string()],
            provenance,
            reports: Vec::new(),
        }
    }

    pub fn justifications(&self, t: &Transition) -> impl Iterator<Item = &Justification> {
        self.provenance.get(t).into_iter().flatten()
    }
}

/// `⊙(c1, c2)`. With `relax = false` the operands must synchronise in both directions.
pub fn synchronous_parallel(c1: &Component, c2: &Component, relax: bool) -> Result<Component> {
    let left = Composed::leaf("left", c1);
    let right = Composed::leaf("right", c2);
    Ok(par(&left, &right, relax, "root", &format!("(par {} {})", c1.name, c2.name))?.component)
}

/// Folds `⊙` over the expression tree bottom-up.
pub fn build_system(expr: &SystemExpr, relax: bool) -> Result<Component> {
    Ok(build_composed(expr, relax)?.component)
}

/// Like [`build_system`], keeping per-transition rule provenance and per-node reports.
pub fn build_composed(expr: &SystemExpr, relax: bool) -> Result<Composed> {
    let mut seen = BTreeSet::new();
    for (name, _) in expr.leaves() {
        if !seen.insert(name) {
            return Err(Error::DuplicateLeaf(name.to_string()));
        }
    }
    build_at(expr, relax, "root")
}

fn build_at(expr: &SystemExpr, relax: bool, path: &str) -> Result<Composed> {
    match expr {
        SystemExpr::Leaf { name, component } => Ok(Composed::leaf(name, component)),
        SystemExpr::Node { left, right } => {
            let l = build_at(left, relax, &format!("{path}/left"))?;
            let r = build_at(right, relax, &format!("{path}/right"))?;
            par(&l, &r, relax, path, &expr.to_string())
        }
    }
}

pub(crate) type Adjacency<'a> = HashMap<&'a str, Vec<&'a Transition>>;

pub(crate) fn adjacency(c: &Component) -> Adjacency<'_> {
    let mut adj: Adjacency = HashMap::new();
    for t in &c.transitions {
        adj.entry(t.from.as_str()).or_default().push(t);
    }
    adj
}

fn merge(rule: Rule, a: &Justification, b: Option<&Justification>) -> Justification {
    let mut steps = a.steps.clone();
    if let Some(b) = b {
        steps.extend(b.steps.iter().map(|(k, v)| (k.clone(), v.clone())));
    }
    Justification { rule, steps }
}

/// A candidate composed step: input, output, target pair and its derivations.
type Step<'a> = (&'a Label, &'a Label, (&'a str, &'a str), Vec<Justification>);

fn par(l: &Composed, r: &Composed, relax: bool, path: &str, expr: &str) -> Result<Composed> {
    let (c1, c2) = (&l.component, &r.component);
    let report = signature_check(c1, c2);
    if !report.def3_applicable && !relax {
        return Err(Error::NotComposable {
            path: format!("{path} {expr}"),
            reason: format!(
                "O1∩I2 = {{{}}}, O2∩I1 = {{{}}}; both must be non-empty (use relax to compose anyway)",
                join(&report.o1_cap_i2),
                join(&report.o2_cap_i1)
            ),
        });
    }

    let outputs: BTreeSet<Label> = c1.outputs.union(&c2.outputs).cloned().collect();
    let inputs: BTreeSet<Label> = c1
        .inputs
        .union(&c2.inputs)
        .filter(|i| !outputs.contains(*i))
        .cloned()
        .collect();

    let adj1 = adjacency(c1);
    let adj2 = adjacency(c2);
    let empty = Vec::new();

    let mut names: HashMap<(&str, &str), String> = HashMap::new();
    let mut taken: HashSet<String> = HashSet::new();
    let mut name_of = |a, b| pair_name(a, b, &mut names, &mut taken);

    let start = (c1.initial.as_str(), c2.initial.as_str());
    let initial = name_of(start.0, start.1);
    let mut states = BTreeSet::from([initial.clone()]);
    let mut visited: HashSet<(&str, &str)> = HashSet::from([start]);
    let mut queue = VecDeque::from([start]);
    let mut provenance: BTreeMap<Transition, BTreeSet<Justification>> = BTreeMap::new();

    let jl = |t: &Transition| l.provenance.get(t).cloned().unwrap_or_default();
    let jr = |t: &Transition| r.provenance.get(t).cloned().unwrap_or_default();

    while let Some((s1, s2)) = queue.pop_front() {
        let src = name_of(s1, s2);
        let mut found: Vec<Step> = Vec::new();

        for t1 in adj1.get(s1).unwrap_or(&empty) {
            if !inputs.contains(&t1.input) {
                continue;
            }
            if !c2.inputs.contains(&t1.output) {
                let js = jl(t1).iter().map(|j| merge(Rule::LeftOnly, j, None)).collect();
                found.push((&t1.input, &t1.output, (t1.to.as_str(), s2), js));
            }
            for t2 in adj2.get(s2).unwrap_or(&empty) {
                if t2.input != t1.output {
                    continue;
                }
                let mut js = Vec::new();
                for a in jl(t1) {
                    for b in jr(t2) {
                        js.push(merge(Rule::LeftToRight, &a, Some(&b)));
                    }
                }
                found.push((&t1.input, &t2.output, (t1.to.as_str(), t2.to.as_str()), js));
            }
        }
        for t2 in adj2.get(s2).unwrap_or(&empty) {
            if !inputs.contains(&t2.input) {
                continue;
            }
            if !c1.inputs.contains(&t2.output) {
                let js = jr(t2).iter().map(|j| merge(Rule::RightOnly, j, None)).collect();
                found.push((&t2.input, &t2.output, (s1, t2.to.as_str()), js));
            }
            for t1 in adj1.get(s1).unwrap_or(&empty) {
                if t1.input != t2.output {
                    continue;
                }
                let mut js = Vec::new();
                for b in jr(t2) {
                    for a in jl(t1) {
                        js.push(merge(Rule::RightToLeft, &b, Some(&a)));
                    }
                }
                found.push((&t2.input, &t1.output, (t1.to.as_str(), t2.to.as_str()), js));
            }
        }

        for (i, o, target, js) in found {
            let dst = name_of(target.0, target.1);
            if visited.insert(target) {
                states.insert(dst.clone());
                queue.push_back(target);
            }
            let t = Transition::new(src.clone(), i.clone(), o.clone(), dst);
            provenance.entry(t).or_default().extend(js);
        }
    }

    let component = Component {
        name: format!("par({},{})", c1.name, c2.name),
        states,
        initial,
        inputs,
        outputs,
        transitions: provenance.keys().cloned().collect(),
    };
    let mut reports = l.reports.clone();
    reports.extend(r.reports.iter().cloned());
    reports.push(NodeReport {
        path: path.to_string(),
        expr: expr.to_string(),
        relaxed: !report.def3_applicable,
        report,
    });
    Ok(Composed {
        component,
        leaves: l.leaves.iter().chain(&r.leaves).cloned().collect(),
        provenance,
        reports,
    })
}

fn pair_name<'a>(a: &'a str, b: &'a str, names: &mut HashMap<(&'a str, &'a str), String>, taken: &mut HashSet<String>) -> String {
    names
        .entry((a, b))
        .or_insert_with(|| {
            let mut n = format!("({a},{b})");
            while !taken.insert(n.clone()) {
                n.push('\'');
            }
            n
        })
        .clone()
}

fn join(labels: &BTreeSet<Label>) -> String {
    labels
        .iter()
        .map(Label::as_str)
        .collect::<Vec<_>>()
        .join(", ")
}
