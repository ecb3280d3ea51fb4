//! Seeded random components for property tests and the CLI's `--random` mode.
//!
//! Everything is a function of a `u64` seed, so a reported instance can be regenerated.

use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::fsm::{complete, CompletionPolicy, Component, Label, Transition};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub states: RangeInclusive<usize>,
    /// Probability that a given `(state, input)` pair gets a transition.
    pub density: RangeInclusive<f64>,
    /// Probability of a second transition on a defined `(state, input)` pair.
    pub nondeterminism: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            states: 2..=5,
            density: 0.3..=0.8,
            nondeterminism: 0.25,
        }
    }
}

impl GenConfig {
    /// No two transitions share a `(state, input)` pair.
    pub fn deterministic() -> Self {
        GenConfig {
            nondeterminism: 0.0,
            ..GenConfig::default()
        }
    }
}

fn labels(prefix: &str, n: usize) -> Vec<Label> {
    (1..=n)
        .map(|k| Label::new(format!("{prefix}{k}")).unwrap())
        .collect()
}

/// A random component over the given alphabets. States are `s0..s{n-1}`, `s0` initial;
/// the result may have unreachable states.
pub fn random_component(rng: &mut impl Rng, name: &str, inputs: &[Label], outputs: &[Label], cfg: &GenConfig) -> Component {
    let n = rng.gen_range(cfg.states.clone());
    let density = rng.gen_range(cfg.density.clone());
    let states: Vec<String> = (0..n).map(|k| format!("s{k}")).collect();
    let mut transitions = BTreeSet::new();
    if !outputs.is_empty() {
        for s in &states {
            for i in inputs {
                if !rng.gen_bool(density) {
                    continue;
                }
                let mut extra = 1;
                while rng.gen_bool(cfg.nondeterminism) && extra < 3 {
                    extra += 1;
                }
                for _ in 0..extra {
                    let o = outputs.choose(rng).unwrap().clone();
                    let t = states.choose(rng).unwrap().clone();
                    transitions.insert(Transition::new(s.clone(), i.clone(), o, t));
                }
            }
        }
    }
    Component {
        name: name.to_string(),
        states: states.into_iter().collect(),
        initial: "s0".into(),
        inputs: inputs.iter().cloned().collect(),
        outputs: outputs.iter().cloned().collect(),
        transitions,
    }
}

/// Drops, adds and redirects transitions of `c` to get a plausible implementation.
pub fn mutate(rng: &mut impl Rng, c: &Component, name: &str) -> Component {
    let mut out = c.clone().with_name(name);
    let states: Vec<String> = c.states.iter().cloned().collect();
    let inputs: Vec<Label> = c.inputs.iter().cloned().collect();
    let outputs: Vec<Label> = c.outputs.iter().cloned().collect();
    out.transitions.retain(|_| rng.gen_bool(0.85));
    if inputs.is_empty() || outputs.is_empty() {
        return out;
    }
    for _ in 0..rng.gen_range(0..=2) {
        out.transitions.insert(Transition::new(
            states.choose(rng).unwrap().clone(),
            inputs.choose(rng).unwrap().clone(),
            outputs.choose(rng).unwrap().clone(),
            states.choose(rng).unwrap().clone(),
        ));
    }
    out
}

/// Alphabets for two components that synchronise in both directions and share no
/// inputs and no outputs. `m*` flow from the first to the second, `n*` back; `a*`, `b*`
/// are environment inputs and `x*`, `y*` environment outputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairAlphabet {
    pub inputs1: Vec<Label>,
    pub outputs1: Vec<Label>,
    pub inputs2: Vec<Label>,
    pub outputs2: Vec<Label>,
}

pub fn pair_alphabet(rng: &mut impl Rng) -> PairAlphabet {
    let km = rng.gen_range(1..=2);
    let kn = rng.gen_range(1..=2);
    let m = labels("m", km);
    let n = labels("n", kn);
    let side = |rng: &mut dyn rand::RngCore, ext_in: &str, ext_out: &str, recv: &[Label], send: &[Label]| {
        let ki = rng.gen_range(2usize.saturating_sub(recv.len()).max(1)..=3 - recv.len());
        let ko = rng.gen_range(2usize.saturating_sub(send.len())..=3 - send.len());
        let mut ins = labels(ext_in, ki);
        ins.extend_from_slice(recv);
        let mut outs = labels(ext_out, ko);
        outs.extend_from_slice(send);
        (ins, outs)
    };
    let (inputs1, outputs1) = side(rng, "a", "x", &n, &m);
    let (inputs2, outputs2) = side(rng, "b", "y", &m, &n);
    PairAlphabet {
        inputs1,
        outputs1,
        inputs2,
        outputs2,
    }
}

/// Two components with composable alphabets.
pub fn random_pair(seed: u64, cfg: &GenConfig) -> (Component, Component) {
    let mut r = rng(seed);
    let a = pair_alphabet(&mut r);
    let c1 = random_component(&mut r, "C1", &a.inputs1, &a.outputs1, cfg);
    let c2 = random_component(&mut r, "C2", &a.inputs2, &a.outputs2, cfg);
    (c1, c2)
}

/// An implementation and a specification over one alphabet. Half of the time the
/// implementation is a mutant of the specification, otherwise unrelated.
pub fn random_iut_spec(seed: u64, cfg: &GenConfig) -> (Component, Component) {
    let mut r = rng(seed);
    let inputs = labels("a", r.gen_range(1..=3));
    let outputs = labels("x", r.gen_range(1..=3));
    let spec = random_component(&mut r, "spec", &inputs, &outputs, cfg);
    let iut = if r.gen_bool(0.5) {
        mutate(&mut r, &spec, "iut")
    } else {
        random_component(&mut r, "iut", &inputs, &outputs, cfg)
    };
    (iut, spec)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quadruple {
    pub iut1: Component,
    pub spec1: Component,
    pub iut2: Component,
    pub spec2: Component,
}

fn quadruple(seed: u64, cfg: &GenConfig, input_enabled: bool) -> Quadruple {
    let mut r = rng(seed);
    let a = pair_alphabet(&mut r);
    let mut spec1 = random_component(&mut r, "spec1", &a.inputs1, &a.outputs1, cfg);
    let mut spec2 = random_component(&mut r, "spec2", &a.inputs2, &a.outputs2, cfg);
    if input_enabled {
        for (spec, outs) in [(&mut spec1, &a.outputs1), (&mut spec2, &a.outputs2)] {
            let label = outs.choose(&mut r).unwrap().clone();
            let policy = if r.gen_bool(0.5) {
                CompletionPolicy::SelfLoop(label)
            } else {
                CompletionPolicy::Sink(label)
            };
            *spec = complete(spec, &policy);
        }
    }
    let iut1 = mutate(&mut r, &spec1, "iut1");
    let iut2 = mutate(&mut r, &spec2, "iut2");
    Quadruple {
        iut1,
        spec1,
        iut2,
        spec2,
    }
}

/// Candidate for the per-component strategy: input-enabled specifications.
pub fn theorem1_candidate(seed: u64, cfg: &GenConfig) -> Quadruple {
    quadruple(seed, cfg, true)
}

/// Candidate for the in-context strategy: specifications as generated.
pub fn theorem2_candidate(seed: u64, cfg: &GenConfig) -> Quadruple {
    quadruple(seed, cfg, false)
}
