//! Compositional conformance: conclude the verdict for `⊙(iut1, iut2)` from checks on the
//! components alone, and trace a global failure back to the components responsible.
//!
//! Two strategies:
//!
//! * [`check_theorem1`] compares each implementation with its own specification. Sound
//!   when both specifications are input-enabled and the two components share no inputs
//!   and no outputs.
//! * [`check_theorem2`] compares each implementation with its specification in the
//!   context of the other one, `⊙(spec1, spec2)↓Ci`. Same alphabet conditions, and the
//!   specifications must be output-deterministic: after any trace, an input has at most
//!   one specified output.
//!
//! Without output determinism the context check can pass while the system fails. Take
//! `spec1` answering `a` with `m1` or `m2` and then accepting `c` only after `m1`, and an
//! `iut1` that always picks `m2` and then answers `c`. A partner that maps both `m1` and
//! `m2` to the same `y` hides which branch was taken, so after `⟨a|y⟩` the system spec
//! expects `c` to be answered as after `m1` while `iut1` answers as it likes. Locally the
//! `c` after `m2` is unspecified and passes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::composition::{build_composed, signature_check, SystemExpr};
use crate::conformance::{check_cioco_exact, Counterexample, Outcome, Verdict};
use crate::error::{Error, Result};
use crate::fsm::{has_trace, is_input_enabled, missing_inputs, out_after, output_choice, Component, Label};
use crate::projection::{context_of, project_runs_in};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Conclusion {
    SoundPass,
    SoundFail,
    NotApplicable,
}

impl fmt::Display for Conclusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Conclusion::SoundPass => "sound-pass",
            Conclusion::SoundFail => "sound-fail",
            Conclusion::NotApplicable => "not-applicable",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Assumption {
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositionalReport {
    pub theorem: u8,
    pub assumptions: Vec<Assumption>,
    /// Keyed by implementation name.
    pub local_verdicts: BTreeMap<String, Verdict>,
    pub global_conclusion: Conclusion,
    pub notes: Vec<String>,
}

impl CompositionalReport {
    pub fn assumptions_hold(&self) -> bool {
        self.assumptions.iter().all(|a| a.holds)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

impl fmt::Display for CompositionalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "strategy {}: {}", self.theorem, self.global_conclusion)?;
        for a in &self.assumptions {
            let mark = if a.holds { "ok  " } else { "FAIL" };
            writeln!(f, "  [{mark}] {}: {}", a.name, a.detail)?;
        }
        for (name, v) in &self.local_verdicts {
            writeln!(f, "  local {name}: {v}")?;
        }
        for n in &self.notes {
            writeln!(f, "  note: {n}")?;
        }
        Ok(())
    }
}

fn names(labels: &BTreeSet<Label>) -> String {
    let v: Vec<&str> = labels.iter().map(Label::as_str).collect();
    format!("{{{}}}", v.join(", "))
}

fn same_signature(iut: &Component, spec: &Component) -> Result<()> {
    if iut.same_signature(spec) {
        return Ok(());
    }
    Err(Error::SignatureMismatch {
        left: iut.name.clone(),
        right: spec.name.clone(),
        detail: format!(
            "inputs {} vs {}, outputs {} vs {}",
            names(&iut.inputs),
            names(&spec.inputs),
            names(&iut.outputs),
            names(&spec.outputs)
        ),
    })
}

fn disjointness(spec1: &Component, spec2: &Component) -> Vec<Assumption> {
    let r = signature_check(spec1, spec2);
    vec![
        Assumption {
            name: "I1∩I2=∅".into(),
            holds: r.i1_cap_i2.is_empty(),
            detail: format!("I1∩I2 = {}", names(&r.i1_cap_i2)),
        },
        Assumption {
            name: "O1∩O2=∅".into(),
            holds: r.o1_cap_o2.is_empty(),
            detail: format!("O1∩O2 = {}", names(&r.o1_cap_o2)),
        },
    ]
}

fn input_enabled(spec: &Component) -> Assumption {
    let missing = missing_inputs(spec);
    Assumption {
        name: format!("{} input-enabled", spec.name),
        holds: is_input_enabled(spec),
        detail: match missing.first() {
            None => "every state accepts every input".into(),
            Some((s, i)) => format!("{} undefined (state, input) pairs, e.g. ({s}, {i})", missing.len()),
        },
    }
}

fn output_deterministic(spec: &Component) -> Assumption {
    let choice = output_choice(spec);
    Assumption {
        name: format!("{} output-deterministic", spec.name),
        holds: choice.is_none(),
        detail: match choice {
            None => "every input has at most one output after any trace".into(),
            Some((tr, i, outs)) => format!("after {tr} input {i} allows {}", names(&outs)),
        },
    }
}

fn verdict_keys(iut1: &Component, iut2: &Component) -> (String, String) {
    if iut1.name == iut2.name {
        (format!("{}#1", iut1.name), format!("{}#2", iut2.name))
    } else {
        (iut1.name.clone(), iut2.name.clone())
    }
}

fn conclude(assumptions: &[Assumption], v1: &Verdict, v2: &Verdict) -> Conclusion {
    if v1.result == Outcome::Fail || v2.result == Outcome::Fail {
        Conclusion::SoundFail
    } else if assumptions.iter().all(|a| a.holds) {
        Conclusion::SoundPass
    } else {
        Conclusion::NotApplicable
    }
}

fn applicability_note(spec1: &Component, spec2: &Component) -> Option<String> {
    let r = signature_check(spec1, spec2);
    (!r.def3_applicable).then(|| {
        format!(
            "{} and {} do not synchronise in both directions (O1∩I2 = {}, O2∩I1 = {}); composed anyway",
            spec1.name,
            spec2.name,
            names(&r.o1_cap_i2),
            names(&r.o2_cap_i1)
        )
    })
}

/// Checks `iut1 cioco spec1` and `iut2 cioco spec2`.
pub fn check_theorem1(iut1: &Component, spec1: &Component, iut2: &Component, spec2: &Component) -> Result<CompositionalReport> {
    same_signature(iut1, spec1)?;
    same_signature(iut2, spec2)?;
    let mut assumptions = disjointness(spec1, spec2);
    assumptions.push(input_enabled(spec1));
    assumptions.push(input_enabled(spec2));

    let v1 = check_cioco_exact(iut1, spec1)?;
    let v2 = check_cioco_exact(iut2, spec2)?;
    let global_conclusion = conclude(&assumptions, &v1, &v2);
    let (k1, k2) = verdict_keys(iut1, iut2);
    Ok(CompositionalReport {
        theorem: 1,
        assumptions,
        local_verdicts: BTreeMap::from([(k1, v1), (k2, v2)]),
        global_conclusion,
        notes: applicability_note(spec1, spec2).into_iter().collect(),
    })
}

/// Checks `iut1 cioco ⊙(spec1, spec2)↓C1` and `iut2 cioco ⊙(spec1, spec2)↓C2`.
pub fn check_theorem2(iut1: &Component, iut2: &Component, spec1: &Component, spec2: &Component) -> Result<CompositionalReport> {
    same_signature(iut1, spec1)?;
    same_signature(iut2, spec2)?;
    let mut assumptions = disjointness(spec1, spec2);
    assumptions.push(output_deterministic(spec1));
    assumptions.push(output_deterministic(spec2));

    let (l1, l2) = ("C1", "C2");
    let expr = SystemExpr::par(
        SystemExpr::Leaf {
            name: l1.into(),
            component: spec1.clone(),
        },
        SystemExpr::Leaf {
            name: l2.into(),
            component: spec2.clone(),
        },
    );
    let composed = build_composed(&expr, true)?;
    let p1 = context_of(&composed, spec1, l1).component;
    let p2 = context_of(&composed, spec2, l2).component;

    let v1 = check_cioco_exact(iut1, &p1)?;
    let v2 = check_cioco_exact(iut2, &p2)?;
    let global_conclusion = conclude(&assumptions, &v1, &v2);
    let (k1, k2) = verdict_keys(iut1, iut2);
    let mut notes: Vec<String> = applicability_note(spec1, spec2).into_iter().collect();
    notes.push(format!(
        "contexts have {} and {} states",
        p1.states.len(),
        p2.states.len()
    ));
    Ok(CompositionalReport {
        theorem: 2,
        assumptions,
        local_verdicts: BTreeMap::from([(k1, v1), (k2, v2)]),
        global_conclusion,
        notes,
    })
}

fn same_shape(a: &SystemExpr, b: &SystemExpr) -> bool {
    match (a, b) {
        (SystemExpr::Leaf { .. }, SystemExpr::Leaf { .. }) => true,
        (SystemExpr::Node { left: l1, right: r1 }, SystemExpr::Node { left: l2, right: r2 }) => {
            same_shape(l1, l2) && same_shape(r1, r2)
        }
        _ => false,
    }
}

/// Given a failing global verdict for `expr_iut` against `expr_spec`, reports for every
/// implementation leaf whether its share of the failing trace leaves the behaviour its
/// specification allows in context, and where.
///
/// The expressions must have the same shape; leaves are paired by position. Each run of
/// the implementation system along the failing trace is projected onto every leaf, and a
/// leaf is implicated at the first step of its projection that the corresponding
/// specification in context cannot take. Passing verdicts implicate nobody.
pub fn localize_fault(
    expr_iut: &SystemExpr,
    expr_spec: &SystemExpr,
    verdict: &Verdict,
) -> Result<BTreeMap<String, Option<Counterexample>>> {
    if !same_shape(expr_iut, expr_spec) {
        return Err(Error::ShapeMismatch(format!("{expr_iut} vs {expr_spec}")));
    }
    let pairs: Vec<_> = expr_iut.leaves().into_iter().zip(expr_spec.leaves()).collect();
    for ((_, iut), (_, spec)) in &pairs {
        same_signature(iut, spec)?;
    }
    let Some(ce) = verdict.counterexample.as_ref().filter(|_| verdict.failed()) else {
        return Ok(BTreeMap::new());
    };

    let full = ce.full_trace();
    let iut_sys = build_composed(expr_iut, true)?;
    let runs = project_runs_in(&iut_sys, &full);
    if runs.is_empty() {
        return Err(Error::NotATrace(full));
    }
    let spec_sys = build_composed(expr_spec, true)?;

    let mut out = BTreeMap::new();
    for ((iut_name, iut), (spec_name, spec)) in pairs {
        let context = context_of(&spec_sys, spec, spec_name).component;
        let mut best: Option<Counterexample> = None;
        for run in &runs {
            let local = &run[iut_name];
            let Some(n) = (1..=local.len()).find(|&n| !has_trace(&context, &local.prefix(n))) else {
                continue;
            };
            let witness = local.prefix(n - 1);
            let step = &local.steps()[n - 1];
            let candidate = Counterexample {
                iut_outputs: out_after(iut, &witness, &step.input)?,
                spec_outputs: out_after(&context, &witness, &step.input)?,
                witness,
                input: step.input.clone(),
                offending_output: step.output.clone(),
            };
            let better = best.as_ref().is_none_or(|b| {
                (candidate.witness.len(), &candidate.full_trace()) < (b.witness.len(), &b.full_trace())
            });
            if better {
                best = Some(candidate);
            }
        }
        out.insert(iut_name.to_string(), best);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composition::synchronous_parallel;
    use crate::fsm::{lbl, Trace};

    fn comp(name: &str, ins: &[&str], outs: &[&str], trans: &[(&str, &str, &str, &str)]) -> Component {
        let mut b = Component::builder(name)
            .inputs(ins.iter().copied())
            .outputs(outs.iter().copied());
        if let Some((s, ..)) = trans.first() {
            b = b.initial(*s);
        }
        for (s, i, o, t) in trans {
            b = b.trans(*s, *i, *o, *t);
        }
        b.build().unwrap()
    }

    /// The branching example from the module docs.
    fn hidden_branch() -> (Component, Component, Component, Component) {
        let (i1, o1) = (["a", "c", "w"], ["m1", "m2", "x", "z"]);
        let spec1 = comp(
            "spec1",
            &i1,
            &o1,
            &[("s0", "a", "m1", "s1"), ("s0", "a", "m2", "s2"), ("s1", "c", "x", "s1")],
        );
        let iut1 = comp("iut1", &i1, &o1, &[("s0", "a", "m2", "s2"), ("s2", "c", "z", "s2")]);
        let spec2 = comp(
            "spec2",
            &["m1", "m2"],
            &["y", "w"],
            &[("t0", "m1", "y", "t0"), ("t0", "m2", "y", "t0")],
        );
        let iut2 = spec2.clone().with_name("iut2");
        (iut1, spec1, iut2, spec2)
    }

    #[test]
    fn hidden_branch_passes_locally_and_fails_globally() {
        let (iut1, spec1, iut2, spec2) = hidden_branch();
        let report = check_theorem2(&iut1, &iut2, &spec1, &spec2).unwrap();
        assert!(report.local_verdicts.values().all(Verdict::passed));
        assert_eq!(report.global_conclusion, Conclusion::NotApplicable);
        let failed: Vec<_> = report.assumptions.iter().filter(|a| !a.holds).collect();
        assert_eq!(failed.len(), 1);
        assert_eq!(failed[0].name, "spec1 output-deterministic");

        let global = check_cioco_exact(
            &synchronous_parallel(&iut1, &iut2, false).unwrap(),
            &synchronous_parallel(&spec1, &spec2, false).unwrap(),
        )
        .unwrap();
        let ce = global.counterexample.unwrap();
        assert_eq!(ce.witness, Trace::parse("a|y").unwrap());
        assert_eq!(ce.input, lbl("c"));
        assert_eq!(ce.offending_output, lbl("z"));
    }

    #[test]
    fn theorem1_needs_input_enabled_specs() {
        let (iut1, spec1, iut2, spec2) = hidden_branch();
        let report = check_theorem1(&iut1, &spec1, &iut2, &spec2).unwrap();
        assert_eq!(report.global_conclusion, Conclusion::NotApplicable);
        assert!(report.assumptions.iter().any(|a| a.name == "spec1 input-enabled" && !a.holds));
        assert_eq!(report.local_verdicts.len(), 2);
    }

    #[test]
    fn local_failure_is_sound_fail() {
        let (_, spec1, iut2, spec2) = hidden_branch();
        let bad = comp(
            "iut1",
            &["a", "c", "w"],
            &["m1", "m2", "x", "z"],
            &[("s0", "a", "x", "s0")],
        );
        let report = check_theorem2(&bad, &iut2, &spec1, &spec2).unwrap();
        assert_eq!(report.global_conclusion, Conclusion::SoundFail);
        assert!(report.local_verdicts["iut1"].failed());
        assert!(report.local_verdicts["iut2"].passed());
    }

    #[test]
    fn signature_mismatch_is_an_error() {
        let (iut1, spec1, iut2, spec2) = hidden_branch();
        assert!(matches!(
            check_theorem1(&iut2, &spec1, &iut1, &spec2),
            Err(Error::SignatureMismatch { .. })
        ));
    }

    #[test]
    fn localization_points_at_the_deviating_leaf() {
        let (iut1, spec1, iut2, spec2) = hidden_branch();
        let iut_expr = SystemExpr::par(SystemExpr::leaf(iut1.clone()), SystemExpr::leaf(iut2.clone()));
        let spec_expr = SystemExpr::par(SystemExpr::leaf(spec1.clone()), SystemExpr::leaf(spec2.clone()));
        let global = check_cioco_exact(
            &synchronous_parallel(&iut1, &iut2, false).unwrap(),
            &synchronous_parallel(&spec1, &spec2, false).unwrap(),
        )
        .unwrap();
        let blame = localize_fault(&iut_expr, &spec_expr, &global).unwrap();
        assert_eq!(blame.len(), 2);
        assert!(blame["iut2"].is_none());
        let ce = blame["iut1"].as_ref().unwrap();
        assert_eq!(ce.witness, Trace::parse("a|m2").unwrap());
        assert_eq!(ce.input, lbl("c"));
        assert_eq!(ce.offending_output, lbl("z"));
        assert!(ce.spec_outputs.is_empty());
    }

    #[test]
    fn localization_of_a_pass_is_empty_and_shapes_must_match() {
        let (iut1, spec1, _, spec2) = hidden_branch();
        let spec_expr = SystemExpr::par(SystemExpr::leaf(spec1), SystemExpr::leaf(spec2));
        let sys = build_composed(&spec_expr, false).unwrap().component;
        let pass = check_cioco_exact(&sys, &sys).unwrap();
        assert!(localize_fault(&spec_expr, &spec_expr, &pass).unwrap().is_empty());
        let flat = SystemExpr::leaf(iut1);
        assert!(matches!(
            localize_fault(&flat, &spec_expr, &pass),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn report_json_shape() {
        let (iut1, spec1, iut2, spec2) = hidden_branch();
        let j = check_theorem2(&iut1, &iut2, &spec1, &spec2).unwrap().to_json();
        assert_eq!(j["theorem"], 2);
        assert_eq!(j["global_conclusion"], "not-applicable");
        assert_eq!(j["local_verdicts"]["iut1"]["result"], "pass");
        assert_eq!(j["assumptions"].as_array().unwrap().len(), 4);
    }
}
