//! Components (nondeterministic input/output machines) and their finite-trace semantics.
//!
//! A [`Component`] is a tuple `(S, s0, I, O, R)` with `R ⊆ S × I × O × S`. Its traces are
//! the finite sequences of `input|output` pairs that label some run from the initial state.
//! Trace sets of cyclic machines are infinite, so every decision procedure in this crate
//! works on sets of states reached after a trace; [`traces_up_to`] exists for bounded
//! enumeration and oracles.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cardinality guard for extensional trace sets.
pub const DEFAULT_GUARD: usize = 1_000_000;

/// Upper bound on the number of traces (or trace-tree nodes) an operation may materialize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Guard(pub usize);

impl Default for Guard {
    fn default() -> Self {
        Guard(DEFAULT_GUARD)
    }
}

/// An input or output action name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Label(String);

impl Label {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if name.is_empty() || name.contains(['|', '#']) || name.chars().any(char::is_whitespace) {
            return Err(Error::InvalidLabel(name));
        }
        Ok(Label(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Label {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        Label::new(value)
    }
}

impl TryFrom<&str> for Label {
    type Error = Error;

    fn try_from(value: &str) -> Result<Self> {
        Label::new(value)
    }
}

impl From<Label> for String {
    fn from(l: Label) -> String {
        l.0
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Label::new(s)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::borrow::Borrow<str> for Label {
    fn borrow(&self) -> &str {
        &self.0
    }
}

/// One observable step `input|output`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct IoPair {
    pub input: Label,
    pub output: Label,
}

impl IoPair {
    pub fn new(input: Label, output: Label) -> Self {
        IoPair { input, output }
    }
}

impl fmt::Display for IoPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", self.input, self.output)
    }
}

impl FromStr for IoPair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (i, o) = s
            .split_once('|')
            .ok_or_else(|| Error::InvalidLabel(s.to_string()))?;
        Ok(IoPair::new(Label::new(i)?, Label::new(o)?))
    }
}

/// A finite sequence of steps. Ordering is lexicographic by step labels with prefixes first.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Trace(pub Vec<IoPair>);

impl Trace {
    pub fn empty() -> Self {
        Trace(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn steps(&self) -> &[IoPair] {
        &self.0
    }

    /// `self · ⟨step⟩`
    pub fn extended(&self, step: IoPair) -> Trace {
        let mut steps = self.0.clone();
        steps.push(step);
        Trace(steps)
    }

    pub fn prefix(&self, len: usize) -> Trace {
        Trace(self.0[..len].to_vec())
    }

    /// Parses `a|x, b|y` (commas and/or whitespace separate steps, optional `<` `>` delimiters).
    pub fn parse(s: &str) -> Result<Trace> {
        let body = s
            .trim()
            .trim_start_matches(['<', '⟨'])
            .trim_end_matches(['>', '⟩']);
        body.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(IoPair::from_str)
            .collect::<Result<Vec<_>>>()
            .map(Trace)
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("<")?;
        for (n, step) in self.0.iter().enumerate() {
            if n > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{step}")?;
        }
        f.write_str(">")
    }
}

impl FromIterator<IoPair> for Trace {
    fn from_iter<T: IntoIterator<Item = IoPair>>(iter: T) -> Self {
        Trace(iter.into_iter().collect())
    }
}

/// An element `(from, input, output, to)` of the transition relation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Transition {
    pub from: String,
    pub input: Label,
    pub output: Label,
    pub to: String,
}

impl Transition {
    pub fn new(from: impl Into<String>, input: Label, output: Label, to: impl Into<String>) -> Self {
        Transition {
            from: from.into(),
            input,
            output,
            to: to.into(),
        }
    }

    pub fn io(&self) -> IoPair {
        IoPair::new(self.input.clone(), self.output.clone())
    }
}

/// A finite, possibly nondeterministic, input/output state machine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub name: String,
    pub states: BTreeSet<String>,
    pub initial: String,
    pub inputs: BTreeSet<Label>,
    pub outputs: BTreeSet<Label>,
    pub transitions: BTreeSet<Transition>,
}

impl Component {
    pub fn builder(name: impl Into<String>) -> ComponentBuilder {
        ComponentBuilder {
            name: name.into(),
            states: Vec::new(),
            initial: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            transitions: Vec::new(),
        }
    }

    /// Same signature `(I, O)`.
    pub fn same_signature(&self, other: &Component) -> bool {
        self.inputs == other.inputs && self.outputs == other.outputs
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Component {
        self.name = name.into();
        self
    }
}

/// Builds a component from string labels. Only label and state syntax is checked here;
/// structural problems are left for [`validate_component`] to report.
#[derive(Debug, Clone)]
pub struct ComponentBuilder {
    name: String,
    states: Vec<String>,
    initial: Option<String>,
    inputs: Vec<String>,
    outputs: Vec<String>,
    transitions: Vec<(String, String, String, String)>,
}

impl ComponentBuilder {
    pub fn inputs<I, S>(mut self, labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.inputs.extend(labels.into_iter().map(Into::into));
        self
    }

    pub fn outputs<I, S>(mut self, labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.outputs.extend(labels.into_iter().map(Into::into));
        self
    }

    /// Declares states explicitly. States mentioned by `initial` or a transition are
    /// always added as well.
    pub fn states<I, S>(mut self, states: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.states.extend(states.into_iter().map(Into::into));
        self
    }

    pub fn initial(mut self, state: impl Into<String>) -> Self {
        self.initial = Some(state.into());
        self
    }

    pub fn trans(
        mut self,
        from: impl Into<String>,
        input: impl Into<String>,
        output: impl Into<String>,
        to: impl Into<String>,
    ) -> Self {
        self.transitions
            .push((from.into(), input.into(), output.into(), to.into()));
        self
    }

    pub fn build(self) -> Result<Component> {
        let initial = self.initial.unwrap_or_else(|| "s0".to_string());
        let mut states: BTreeSet<String> = self.states.into_iter().collect();
        states.insert(initial.clone());
        let mut transitions = BTreeSet::new();
        for (from, i, o, to) in self.transitions {
            states.insert(from.clone());
            states.insert(to.clone());
            transitions.insert(Transition::new(from, Label::new(i)?, Label::new(o)?, to));
        }
        for s in &states {
            check_state_id(s)?;
        }
        Ok(Component {
            name: self.name,
            states,
            initial,
            inputs: self
                .inputs
                .into_iter()
                .map(Label::new)
                .collect::<Result<_>>()?,
            outputs: self
                .outputs
                .into_iter()
                .map(Label::new)
                .collect::<Result<_>>()?,
            transitions,
        })
    }
}

pub(crate) fn check_state_id(s: &str) -> Result<()> {
    if s.is_empty() || s.contains('#') || s.chars().any(char::is_whitespace) {
        return Err(Error::InvalidState(s.to_string()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub severity: Severity,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn errors(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Warning)
    }
}

/// Reports every violated structural invariant of a component, plus warnings for
/// unreachable states, states without outgoing transitions, empty alphabets and
/// overlapping input/output alphabets.
pub fn validate_component(c: &Component) -> ValidationReport {
    let mut issues = Vec::new();
    let mut error = |message: String| {
        issues.push(Issue {
            severity: Severity::Error,
            message,
        })
    };

    if !c.states.contains(&c.initial) {
        error(format!("initial not in states: {}", c.initial));
    }
    for t in &c.transitions {
        if !c.states.contains(&t.from) {
            error(format!("transition source not in states: {} in {}", t.from, fmt_transition(t)));
        }
        if !c.states.contains(&t.to) {
            error(format!("transition target not in states: {} in {}", t.to, fmt_transition(t)));
        }
        if !c.inputs.contains(&t.input) {
            error(format!("transition input not in I: {} in {}", t.input, fmt_transition(t)));
        }
        if !c.outputs.contains(&t.output) {
            error(format!("transition output not in O: {} in {}", t.output, fmt_transition(t)));
        }
    }

    let mut warn = |message: String| {
        issues.push(Issue {
            severity: Severity::Warning,
            message,
        })
    };
    if c.inputs.is_empty() {
        warn("input alphabet is empty".to_string());
    }
    if c.outputs.is_empty() {
        warn("output alphabet is empty".to_string());
    }
    let overlap: Vec<&str> = c.inputs.intersection(&c.outputs).map(Label::as_str).collect();
    if !overlap.is_empty() {
        warn(format!("labels used as both input and output: {}", overlap.join(" ")));
    }

    let reachable = reachable_states(c);
    for s in &c.states {
        if !reachable.contains(s.as_str()) {
            warn(format!("state {s} is unreachable from {}", c.initial));
        }
        if !c.transitions.iter().any(|t| &t.from == s) {
            warn(format!("state {s} has no outgoing transitions"));
        }
    }

    let ok = !issues.iter().any(|i| i.severity == Severity::Error);
    ValidationReport { ok, issues }
}

fn fmt_transition(t: &Transition) -> String {
    format!("({}, {}|{}, {})", t.from, t.input, t.output, t.to)
}

fn reachable_states(c: &Component) -> BTreeSet<&str> {
    let mut seen = BTreeSet::from([c.initial.as_str()]);
    let mut stack = vec![c.initial.as_str()];
    while let Some(s) = stack.pop() {
        for t in c.transitions.iter().filter(|t| t.from == s) {
            if seen.insert(t.to.as_str()) {
                stack.push(t.to.as_str());
            }
        }
    }
    seen
}

/// A sorted, duplicate-free set of state indices.
pub(crate) type StateSet = Vec<usize>;

/// Index-based view of a component used by the exploration algorithms.
pub(crate) struct Lts<'a> {
    pub names: Vec<&'a str>,
    pub initial: usize,
    /// Outgoing `(input, output, target)` per state, sorted.
    pub succ: Vec<Vec<(&'a Label, &'a Label, usize)>>,
}

impl<'a> Lts<'a> {
    pub fn new(c: &'a Component) -> Self {
        let mut index: HashMap<&str, usize> = HashMap::new();
        let mut names = Vec::new();
        let mut intern = |s: &'a str, names: &mut Vec<&'a str>| -> usize {
            *index.entry(s).or_insert_with(|| {
                names.push(s);
                names.len() - 1
            })
        };
        for s in &c.states {
            intern(s, &mut names);
        }
        let initial = intern(&c.initial, &mut names);
        let mut edges = Vec::with_capacity(c.transitions.len());
        for t in &c.transitions {
            let from = intern(&t.from, &mut names);
            let to = intern(&t.to, &mut names);
            edges.push((from, &t.input, &t.output, to));
        }
        let mut succ = vec![Vec::new(); names.len()];
        for (from, i, o, to) in edges {
            succ[from].push((i, o, to));
        }
        for s in &mut succ {
            s.sort();
        }
        Lts {
            names,
            initial,
            succ,
        }
    }

    pub fn start(&self) -> StateSet {
        vec![self.initial]
    }

    pub fn step(&self, set: &[usize], input: &str, output: &str) -> StateSet {
        let mut next: StateSet = set
            .iter()
            .flat_map(|&s| self.succ[s].iter())
            .filter(|(i, o, _)| i.as_str() == input && o.as_str() == output)
            .map(|&(_, _, t)| t)
            .collect();
        next.sort_unstable();
        next.dedup();
        next
    }

    pub fn after(&self, tr: &Trace) -> StateSet {
        let mut set = self.start();
        for step in tr.steps() {
            if set.is_empty() {
                break;
            }
            set = self.step(&set, step.input.as_str(), step.output.as_str());
        }
        set
    }

    pub fn outputs(&self, set: &[usize], input: &str) -> BTreeSet<&'a Label> {
        set.iter()
            .flat_map(|&s| self.succ[s].iter())
            .filter(|(i, _, _)| i.as_str() == input)
            .map(|&(_, o, _)| o)
            .collect()
    }

    /// All `(input, output)` pairs enabled from some state of `set`, with their successor sets.
    pub fn moves(&self, set: &[usize]) -> BTreeMap<(&'a Label, &'a Label), StateSet> {
        let mut moves: BTreeMap<(&Label, &Label), StateSet> = BTreeMap::new();
        for &s in set {
            for &(i, o, t) in &self.succ[s] {
                moves.entry((i, o)).or_default().push(t);
            }
        }
        for targets in moves.values_mut() {
            targets.sort_unstable();
            targets.dedup();
        }
        moves
    }
}

/// States reachable from the initial state along `tr`; empty iff `tr` is not a trace.
pub fn states_after(c: &Component, tr: &Trace) -> BTreeSet<String> {
    let lts = Lts::new(c);
    lts.after(tr)
        .into_iter()
        .map(|s| lts.names[s].to_string())
        .collect()
}

pub fn has_trace(c: &Component, tr: &Trace) -> bool {
    !Lts::new(c).after(tr).is_empty()
}

/// Every trace of `c` of length at most `k`.
pub fn traces_up_to(c: &Component, k: usize, guard: Guard) -> Result<BTreeSet<Trace>> {
    let lts = Lts::new(c);
    let mut out = BTreeSet::from([Trace::empty()]);
    let mut frontier = vec![(Trace::empty(), lts.start())];
    for _ in 0..k {
        let mut next = Vec::new();
        for (tr, set) in &frontier {
            for ((i, o), succ) in lts.moves(set) {
                let ext = tr.extended(IoPair::new(i.clone(), o.clone()));
                out.insert(ext.clone());
                if out.len() > guard.0 {
                    return Err(Error::TraceLimit { limit: guard.0 });
                }
                next.push((ext, succ));
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(out)
}

/// `Out(c after (tr, i)) = { o | tr·⟨i|o⟩ ∈ Trace(c) }`.
///
/// Fails with [`Error::InputNotInAlphabet`] when `i ∉ I`, which callers must not confuse
/// with an empty result (input known, no continuation).
pub fn out_after(c: &Component, tr: &Trace, input: &Label) -> Result<BTreeSet<Label>> {
    if !c.inputs.contains(input) {
        return Err(Error::InputNotInAlphabet {
            component: c.name.clone(),
            input: input.clone(),
        });
    }
    let lts = Lts::new(c);
    let set = lts.after(tr);
    Ok(lts
        .outputs(&set, input.as_str())
        .into_iter()
        .cloned()
        .collect())
}

/// Every state has at least one transition for every input.
pub fn is_input_enabled(c: &Component) -> bool {
    missing_inputs(c).is_empty()
}

/// `(state, input)` pairs without any outgoing transition.
pub fn missing_inputs(c: &Component) -> Vec<(String, Label)> {
    let defined: BTreeSet<(&str, &Label)> = c
        .transitions
        .iter()
        .map(|t| (t.from.as_str(), &t.input))
        .collect();
    c.states
        .iter()
        .flat_map(|s| c.inputs.iter().map(move |i| (s, i)))
        .filter(|(s, i)| !defined.contains(&(s.as_str(), *i)))
        .map(|(s, i)| (s.clone(), i.clone()))
        .collect()
}

/// Shortest trace after which some input admits more than one output, with that input
/// and its outputs. `None` means the observable behaviour is output-deterministic.
pub fn output_choice(c: &Component) -> Option<(Trace, Label, BTreeSet<Label>)> {
    let lts = Lts::new(c);
    let mut seen = HashSet::from([lts.start()]);
    let mut queue = VecDeque::from([(Trace::empty(), lts.start())]);
    while let Some((tr, set)) = queue.pop_front() {
        for i in &c.inputs {
            let outs = lts.outputs(&set, i.as_str());
            if outs.len() > 1 {
                return Some((tr, i.clone(), outs.into_iter().cloned().collect()));
            }
        }
        for ((i, o), next) in lts.moves(&set) {
            if seen.insert(next.clone()) {
                queue.push_back((tr.extended(IoPair::new(i.clone(), o.clone())), next));
            }
        }
    }
    None
}

pub fn is_output_deterministic(c: &Component) -> bool {
    output_choice(c).is_none()
}

/// Label used by [`complete`] when the caller has no preference.
pub const DEFAULT_COMPLETION_LABEL: &str = "abs";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CompletionPolicy {
    /// Every undefined `(s, i)` gets `s —i|o*→ s`.
    SelfLoop(Label),
    /// Every undefined `(s, i)` gets `s —i|o*→ sink`; the sink loops on every input.
    Sink(Label),
}

impl CompletionPolicy {
    pub fn label(&self) -> &Label {
        match self {
            CompletionPolicy::SelfLoop(l) | CompletionPolicy::Sink(l) => l,
        }
    }
}

/// Makes `c` input-enabled without removing any of its traces.
pub fn complete(c: &Component, policy: &CompletionPolicy) -> Component {
    let mut out = c.clone();
    let label = policy.label().clone();
    let missing = missing_inputs(c);
    if missing.is_empty() {
        return out;
    }
    out.outputs.insert(label.clone());
    match policy {
        CompletionPolicy::SelfLoop(_) => {
            for (s, i) in missing {
                out.transitions
                    .insert(Transition::new(s.clone(), i, label.clone(), s));
            }
        }
        CompletionPolicy::Sink(_) => {
            let sink = fresh_state(&out.states, "sink");
            out.states.insert(sink.clone());
            for (s, i) in missing {
                out.transitions
                    .insert(Transition::new(s, i, label.clone(), sink.clone()));
            }
            for i in &c.inputs {
                out.transitions.insert(Transition::new(
                    sink.clone(),
                    i.clone(),
                    label.clone(),
                    sink.clone(),
                ));
            }
        }
    }
    out
}

pub(crate) fn fresh_state(states: &BTreeSet<String>, base: &str) -> String {
    if !states.contains(base) {
        return base.to_string();
    }
    (1..)
        .map(|n| format!("{base}_{n}"))
        .find(|s| !states.contains(s))
        .expect("unbounded")
}

#[cfg(test)]
pub(crate) fn lbl(s: &str) -> Label {
    Label::new(s).unwrap()
}
