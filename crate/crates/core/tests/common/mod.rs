//! Independent oracles and the seeded property suites shared by the integration tests and
//! the acceptance run.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use cioco_core::composition::{build_composed, synchronous_parallel};
use cioco_core::compositional::{check_theorem1, check_theorem2};
use cioco_core::format::{parse_component, parse_text, render_json, render_text};
use cioco_core::fsm::{
    complete, has_trace, is_input_enabled, is_output_deterministic, traces_up_to, CompletionPolicy,
};
use cioco_core::generate::{self, rng, GenConfig};
use cioco_core::projection::{component_in_context, component_in_context_tree, project_runs_in};
use cioco_core::{
    check_cioco_bounded, check_cioco_exact, check_trace_inclusion, Component, Guard, IoPair, Label, Outcome,
    SystemExpr, Trace,
};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn g() -> Guard {
    Guard::default()
}

pub fn trace(s: &str) -> Trace {
    Trace::parse(s).unwrap()
}

pub fn label(s: &str) -> Label {
    Label::new(s).unwrap()
}

fn composed_inputs(c1: &Component, c2: &Component) -> BTreeSet<Label> {
    c1.inputs
        .union(&c2.inputs)
        .filter(|i| !c1.outputs.contains(*i) && !c2.outputs.contains(*i))
        .cloned()
        .collect()
}

/// Steps of the product directly from the two operands' transition lists.
fn product_steps<'a>(c1: &'a Component, c2: &'a Component, s1: &str, s2: &str) -> Vec<(IoPair, String, String)> {
    let inputs = composed_inputs(c1, c2);
    let mut out = Vec::new();
    for t1 in c1.transitions.iter().filter(|t| t.from == s1 && inputs.contains(&t.input)) {
        if !c2.inputs.contains(&t1.output) {
            out.push((t1.io(), t1.to.clone(), s2.to_string()));
        }
        for t2 in c2.transitions.iter().filter(|t| t.from == s2 && t.input == t1.output) {
            out.push((IoPair::new(t1.input.clone(), t2.output.clone()), t1.to.clone(), t2.to.clone()));
        }
    }
    for t2 in c2.transitions.iter().filter(|t| t.from == s2 && inputs.contains(&t.input)) {
        if !c1.inputs.contains(&t2.output) {
            out.push((t2.io(), s1.to_string(), t2.to.clone()));
        }
        for t1 in c1.transitions.iter().filter(|t| t.from == s1 && t.input == t2.output) {
            out.push((IoPair::new(t2.input.clone(), t1.output.clone()), t1.to.clone(), t2.to.clone()));
        }
    }
    out
}

/// Traces of `⊙(c1, c2)` up to length `k`, by depth-first enumeration of product runs.
pub fn product_traces(c1: &Component, c2: &Component, k: usize) -> BTreeSet<Trace> {
    fn go(c1: &Component, c2: &Component, s1: &str, s2: &str, tr: &Trace, k: usize, out: &mut BTreeSet<Trace>) {
        out.insert(tr.clone());
        if tr.len() == k {
            return;
        }
        for (io, n1, n2) in product_steps(c1, c2, s1, s2) {
            go(c1, c2, &n1, &n2, &tr.extended(io), k, out);
        }
    }
    let mut out = BTreeSet::new();
    go(c1, c2, &c1.initial, &c2.initial, &Trace::empty(), k, &mut out);
    out
}

/// System traces that interleave `tr1` and `tr2` step by step as the composition rules
/// allow, looking only at the alphabets.
pub fn reassemble(c1: &Component, c2: &Component, tr1: &Trace, tr2: &Trace) -> BTreeSet<Trace> {
    let inputs = composed_inputs(c1, c2);
    let (a, b) = (tr1.steps(), tr2.steps());
    let mut out = BTreeSet::new();
    let mut stack = vec![(0usize, 0usize, Trace::empty())];
    while let Some((p, q, tr)) = stack.pop() {
        if p == a.len() && q == b.len() {
            out.insert(tr);
            continue;
        }
        if let Some(x) = a.get(p).filter(|x| inputs.contains(&x.input)) {
            if !c2.inputs.contains(&x.output) {
                stack.push((p + 1, q, tr.extended(x.clone())));
            }
            if let Some(y) = b.get(q).filter(|y| y.input == x.output) {
                stack.push((p + 1, q + 1, tr.extended(IoPair::new(x.input.clone(), y.output.clone()))));
            }
        }
        if let Some(y) = b.get(q).filter(|y| inputs.contains(&y.input)) {
            if !c1.inputs.contains(&y.output) {
                stack.push((p, q + 1, tr.extended(y.clone())));
            }
            if let Some(x) = a.get(p).filter(|x| x.input == y.output) {
                stack.push((p + 1, q + 1, tr.extended(IoPair::new(y.input.clone(), x.output.clone()))));
            }
        }
    }
    out
}

#[derive(Debug, Default)]
pub struct Suite {
    pub instances: usize,
    pub seeds_tried: u64,
    pub violations: usize,
    pub examples: Vec<String>,
}

impl Suite {
    pub fn ok(&self) -> bool {
        self.violations == 0
    }

    fn violation(&mut self, msg: String) {
        self.violations += 1;
        if self.examples.len() < 5 {
            self.examples.push(msg);
        }
    }

    pub fn summary(&self) -> String {
        let head = format!(
            "{} instances, {} violations ({} seeds)",
            self.instances, self.violations, self.seeds_tried
        );
        match self.examples.first() {
            None => head,
            Some(first) => format!("{head}; first: {first}"),
        }
    }
}

const SEED_LIMIT: u64 = 200_000;

/// Per-component strategy: input-enabled specs, both local checks pass ⇒ the composed
/// implementation conforms to the composed spec.
pub fn theorem1_suite(base: u64, n: usize) -> Suite {
    let cfg = GenConfig::default();
    let mut s = Suite::default();
    for seed in base.. {
        if s.instances >= n || seed - base >= SEED_LIMIT {
            break;
        }
        s.seeds_tried += 1;
        let q = generate::theorem1_candidate(seed, &cfg);
        let r = check_theorem1(&q.iut1, &q.spec1, &q.iut2, &q.spec2).unwrap();
        if !r.assumptions_hold() || !r.local_verdicts.values().all(|v| v.passed()) {
            continue;
        }
        s.instances += 1;
        let global = check_cioco_exact(
            &synchronous_parallel(&q.iut1, &q.iut2, false).unwrap(),
            &synchronous_parallel(&q.spec1, &q.spec2, false).unwrap(),
        )
        .unwrap();
        if !global.passed() {
            s.violation(format!("seed {seed}: {global}"));
        }
    }
    s
}

/// In-context strategy: both context checks pass ⇒ the composed implementation conforms.
/// With `output_deterministic`, only instances whose specs are output-deterministic count.
pub fn theorem2_suite(base: u64, n: usize, output_deterministic: bool) -> Suite {
    let cfg = GenConfig::default();
    let mut s = Suite::default();
    for seed in base.. {
        if s.instances >= n || seed - base >= SEED_LIMIT {
            break;
        }
        s.seeds_tried += 1;
        let q = generate::theorem2_candidate(seed, &cfg);
        if output_deterministic && !(is_output_deterministic(&q.spec1) && is_output_deterministic(&q.spec2)) {
            continue;
        }
        let r = check_theorem2(&q.iut1, &q.iut2, &q.spec1, &q.spec2).unwrap();
        if !r.local_verdicts.values().all(|v| v.passed()) {
            continue;
        }
        s.instances += 1;
        let global = check_cioco_exact(
            &synchronous_parallel(&q.iut1, &q.iut2, false).unwrap(),
            &synchronous_parallel(&q.spec1, &q.spec2, false).unwrap(),
        )
        .unwrap();
        if !global.passed() {
            s.violation(format!("seed {seed}: {global}"));
        }
    }
    s
}

/// The built composition has exactly the traces of the rule-by-rule product.
pub fn composition_suite(base: u64, n: usize, depth: usize) -> Suite {
    let cfg = GenConfig::default();
    let mut s = Suite::default();
    for seed in base..base + n as u64 {
        s.seeds_tried += 1;
        s.instances += 1;
        let (c1, c2) = generate::random_pair(seed, &cfg);
        let built = synchronous_parallel(&c1, &c2, false).unwrap();
        let got = traces_up_to(&built, depth, g()).unwrap();
        let want = product_traces(&c1, &c2, depth);
        if got != want {
            let diff: Vec<_> = got.symmetric_difference(&want).take(2).collect();
            s.violation(format!("seed {seed}: trace sets differ, e.g. {diff:?}"));
        }
    }
    s
}

/// Forward: every per-run projection of a system trace is a trace of its component and
/// reassembles into that system trace. Backward: every rule-respecting interleaving of a
/// trace of each component is a trace of the system and projects back onto the pair.
pub fn projection_suite(base: u64, n: usize, depth: usize) -> Suite {
    let cfg = GenConfig::default();
    let mut s = Suite::default();
    for seed in base..base + n as u64 {
        s.seeds_tried += 1;
        s.instances += 1;
        let (c1, c2) = generate::random_pair(seed, &cfg);
        let expr = SystemExpr::par(SystemExpr::leaf(c1.clone()), SystemExpr::leaf(c2.clone()));
        let composed = build_composed(&expr, false).unwrap();
        let system = &composed.component;
        for tr in traces_up_to(system, depth, g()).unwrap() {
            let runs = project_runs_in(&composed, &tr);
            if runs.is_empty() {
                s.violation(format!("seed {seed}: {tr} has no projection"));
            }
            for run in &runs {
                let (p1, p2) = (&run["C1"], &run["C2"]);
                if !has_trace(&c1, p1) || !has_trace(&c2, p2) {
                    s.violation(format!("seed {seed}: {tr} projects to non-traces {p1} / {p2}"));
                }
                if !reassemble(&c1, &c2, p1, p2).contains(&tr) {
                    s.violation(format!("seed {seed}: {p1} / {p2} does not reassemble into {tr}"));
                }
            }
        }

        let t1: Vec<Trace> = traces_up_to(&c1, 3, g()).unwrap().into_iter().collect();
        let t2: Vec<Trace> = traces_up_to(&c2, 3, g()).unwrap().into_iter().collect();
        let mut r = rng(seed);
        for _ in 0..40 {
            let (p1, p2) = (t1.choose(&mut r).unwrap(), t2.choose(&mut r).unwrap());
            for tr in reassemble(&c1, &c2, p1, p2) {
                if tr.len() > depth {
                    continue;
                }
                if !has_trace(system, &tr) {
                    s.violation(format!("seed {seed}: {p1} / {p2} reassembles into non-trace {tr}"));
                    continue;
                }
                let back = project_runs_in(&composed, &tr);
                let pair = BTreeMap::from([("C1".to_string(), p1.clone()), ("C2".to_string(), p2.clone())]);
                if !back.contains(&pair) {
                    s.violation(format!("seed {seed}: {tr} does not project back onto {p1} / {p2}"));
                }
            }
        }
    }
    s
}

/// Trace inclusion implies cioco.
pub fn inclusion_suite(base: u64, n: usize) -> Suite {
    let cfg = GenConfig::default();
    let mut s = Suite::default();
    for seed in base.. {
        if s.instances >= n || seed - base >= SEED_LIMIT {
            break;
        }
        s.seeds_tried += 1;
        let (iut, spec) = generate::random_iut_spec(seed, &cfg);
        if !check_trace_inclusion(&iut, &spec).unwrap().passed() {
            continue;
        }
        s.instances += 1;
        let v = check_cioco_exact(&iut, &spec).unwrap();
        if !v.passed() {
            s.violation(format!("seed {seed}: included but {v}"));
        }
    }
    s
}

/// cioco against an input-enabled spec implies trace inclusion.
pub fn enabled_spec_suite(base: u64, n: usize) -> Suite {
    let cfg = GenConfig::default();
    let mut s = Suite::default();
    for seed in base.. {
        if s.instances >= n || seed - base >= SEED_LIMIT {
            break;
        }
        s.seeds_tried += 1;
        let (iut, spec) = generate::random_iut_spec(seed, &cfg);
        let label = spec.outputs.iter().next().unwrap().clone();
        let spec = complete(&spec, &CompletionPolicy::Sink(label));
        assert!(is_input_enabled(&spec));
        if !check_cioco_exact(&iut, &spec).unwrap().passed() {
            continue;
        }
        s.instances += 1;
        let v = check_trace_inclusion(&iut, &spec).unwrap();
        if !v.passed() {
            s.violation(format!("seed {seed}: cioco holds but {v}"));
        }
    }
    s
}

/// Exact and bounded cioco agree: a pass is inconclusive at every bound, a failure with
/// a witness of length `w` is reproduced exactly at bound `w` and unseen at `w - 1`.
pub fn bounded_agreement_suite(base: u64, n: usize, pass_bound: usize) -> Suite {
    let cfg = GenConfig::default();
    let mut s = Suite::default();
    let (mut passes, mut fails) = (0, 0);
    for seed in base..base + n as u64 {
        s.seeds_tried += 1;
        s.instances += 1;
        let (iut, spec) = generate::random_iut_spec(seed, &cfg);
        let exact = check_cioco_exact(&iut, &spec).unwrap();
        match &exact.counterexample {
            None => {
                passes += 1;
                let b = check_cioco_bounded(&iut, &spec, pass_bound, g()).unwrap();
                if b.result != Outcome::Inconclusive {
                    s.violation(format!("seed {seed}: exact pass, bounded {b}"));
                }
            }
            Some(ce) => {
                fails += 1;
                let w = ce.witness.len();
                let b = check_cioco_bounded(&iut, &spec, w, g()).unwrap();
                if b.counterexample.as_ref() != Some(ce) {
                    s.violation(format!("seed {seed}: exact {exact}, bounded({w}) {b}"));
                }
                if w > 0 {
                    let below = check_cioco_bounded(&iut, &spec, w - 1, g()).unwrap();
                    if below.result != Outcome::Inconclusive {
                        s.violation(format!("seed {seed}: violation below the exact witness: {below}"));
                    }
                }
            }
        }
    }
    if passes == 0 || fails == 0 {
        s.violation(format!("degenerate sample: {passes} passes, {fails} failures"));
    }
    s
}

/// The finite component in context and the literal history tree have the same traces
/// at every depth up to `depth`.
pub fn tree_agreement_suite(base: u64, n: usize, depth: usize) -> Suite {
    let cfg = GenConfig::default();
    let mut s = Suite::default();
    for seed in base..base + n as u64 {
        s.seeds_tried += 1;
        s.instances += 1;
        let (c1, c2) = generate::random_pair(seed, &cfg);
        let expr = SystemExpr::par(SystemExpr::leaf(c1), SystemExpr::leaf(c2));
        for target in ["C1", "C2"] {
            let finite = component_in_context(&expr, target).unwrap().component;
            let tree = component_in_context_tree(&expr, target, depth, g()).unwrap().component;
            for k in 0..=depth {
                let a = traces_up_to(&finite, k, g()).unwrap();
                let b = traces_up_to(&tree, k, g()).unwrap();
                if a != b {
                    s.violation(format!("seed {seed}: {target} differs at depth {k}"));
                    break;
                }
            }
        }
    }
    s
}

const NAME_CHARS: &[char] = &['a', 'b', 'z', 'Q', '0', '7', '_', '-', '.', '(', ')', ',', '<', '>', '\'', '@', 'é', 'λ', '→'];

fn random_name(r: &mut impl Rng) -> String {
    let len = r.gen_range(1..=6);
    (0..len).map(|_| *NAME_CHARS.choose(r).unwrap()).collect()
}

/// A component with arbitrary names, possibly unreachable or isolated states, possibly
/// empty alphabets.
pub fn random_wild_component(seed: u64) -> Component {
    let mut r = rng(seed);
    let pool = |r: &mut rand_chacha::ChaCha8Rng, n: usize| -> Vec<Label> {
        let set: BTreeSet<String> = (0..n).map(|_| random_name(r)).collect();
        set.into_iter().map(|s| Label::new(s).unwrap()).collect()
    };
    let ni = r.gen_range(0..=4);
    let no = r.gen_range(0..=4);
    let inputs = pool(&mut r, ni);
    let outputs = pool(&mut r, no);
    let name = random_name(&mut r);
    let mut c = generate::random_component(&mut r, &name, &inputs, &outputs, &GenConfig::default());
    for _ in 0..r.gen_range(0..=2) {
        c.states.insert(random_name(&mut r));
    }
    c
}

pub fn roundtrip_suite(base: u64, n: usize) -> Suite {
    let mut s = Suite::default();
    for seed in base..base + n as u64 {
        s.seeds_tried += 1;
        s.instances += 1;
        let c = random_wild_component(seed);
        match parse_text(&render_text(&c)) {
            Ok(back) if back == c => {}
            other => s.violation(format!("seed {seed}: text round trip gave {other:?}")),
        }
        match parse_component(&render_json(&c)) {
            Ok(back) if back == c => {}
            other => s.violation(format!("seed {seed}: json round trip gave {other:?}")),
        }
    }
    s
}
