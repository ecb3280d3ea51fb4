//! Text, JSON and DOT renderings of components.
//!
//! Text format, one directive per line, `#` starts a comment:
//!
//! ```text
//! component M
//! inputs coinC coinT error
//! outputs makeC makeT refund
//! states m0            # optional; states named by initial/trans are implied
//! initial m0
//! trans m0 coinC|makeC m0
//! ```

use std::collections::BTreeSet;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsm::{check_state_id, Component, Label, Transition};

pub fn render_text(c: &Component) -> String {
    let mut out = String::new();
    let join = |labels: &BTreeSet<Label>| {
        labels
            .iter()
            .map(Label::as_str)
            .collect::<Vec<_>>()
            .join(" ")
    };
    writeln!(out, "component {}", c.name).unwrap();
    writeln!(out, "inputs {}", join(&c.inputs)).unwrap();
    writeln!(out, "outputs {}", join(&c.outputs)).unwrap();
    let states: Vec<&str> = c.states.iter().map(String::as_str).collect();
    writeln!(out, "states {}", states.join(" ")).unwrap();
    writeln!(out, "initial {}", c.initial).unwrap();
    for t in &c.transitions {
        writeln!(out, "trans {} {}|{} {}", t.from, t.input, t.output, t.to).unwrap();
    }
    out
}

pub fn parse_text(src: &str) -> Result<Component> {
    let mut name = None;
    let mut initial: Option<String> = None;
    let mut states = BTreeSet::new();
    let mut inputs = BTreeSet::new();
    let mut outputs = BTreeSet::new();
    let mut transitions = BTreeSet::new();

    for (n, raw) in src.lines().enumerate() {
        let line_no = n + 1;
        let err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut words = line.split_whitespace();
        let directive = words.next().unwrap();
        let args: Vec<&str> = words.collect();
        let labels = |args: &[&str]| -> Result<Vec<Label>> {
            args.iter()
                .map(|a| Label::new(*a).map_err(|e| err(e.to_string())))
                .collect()
        };
        match directive {
            "component" => {
                if args.len() != 1 {
                    return Err(err("expected `component <name>`".into()));
                }
                if name.is_some() {
                    return Err(err("duplicate component directive".into()));
                }
                name = Some(args[0].to_string());
            }
            "inputs" => inputs.extend(labels(&args)?),
            "outputs" => outputs.extend(labels(&args)?),
            "states" => states.extend(args.iter().map(|s| s.to_string())),
            "initial" => {
                if args.len() != 1 {
                    return Err(err("expected `initial <state>`".into()));
                }
                if initial.is_some() {
                    return Err(err("duplicate initial directive".into()));
                }
                initial = Some(args[0].to_string());
            }
            "trans" => {
                if args.len() != 3 {
                    return Err(err("expected `trans <state> <input>|<output> <state>`".into()));
                }
                let (i, o) = args[1]
                    .split_once('|')
                    .ok_or_else(|| err(format!("expected <input>|<output>, found {}", args[1])))?;
                let input = Label::new(i).map_err(|e| err(e.to_string()))?;
                let output = Label::new(o).map_err(|e| err(e.to_string()))?;
                transitions.insert(Transition::new(args[0], input, output, args[2]));
            }
            other => return Err(err(format!("unknown directive `{other}`"))),
        }
    }

    let name = name.ok_or(Error::Parse {
        line: 0,
        message: "missing `component` directive".into(),
    })?;
    let initial = initial.ok_or(Error::Parse {
        line: 0,
        message: "missing `initial` directive".into(),
    })?;
    // Without an explicit `states` line the state set is whatever the file mentions.
    if states.is_empty() {
        states.insert(initial.clone());
        for t in &transitions {
            states.insert(t.from.clone());
            states.insert(t.to.clone());
        }
    }
    Ok(Component {
        name,
        states,
        initial,
        inputs,
        outputs,
        transitions,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct ComponentJson {
    name: String,
    inputs: Vec<Label>,
    outputs: Vec<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    states: Option<Vec<String>>,
    initial: String,
    transitions: Vec<Transition>,
}

impl From<&Component> for ComponentJson {
    fn from(c: &Component) -> Self {
        ComponentJson {
            name: c.name.clone(),
            inputs: c.inputs.iter().cloned().collect(),
            outputs: c.outputs.iter().cloned().collect(),
            states: Some(c.states.iter().cloned().collect()),
            initial: c.initial.clone(),
            transitions: c.transitions.iter().cloned().collect(),
        }
    }
}

impl TryFrom<ComponentJson> for Component {
    type Error = Error;

    fn try_from(j: ComponentJson) -> Result<Component> {
        let mut states: BTreeSet<String> = j.states.unwrap_or_default().into_iter().collect();
        if states.is_empty() {
            states.insert(j.initial.clone());
            for t in &j.transitions {
                states.insert(t.from.clone());
                states.insert(t.to.clone());
            }
        }
        for s in &states {
            check_state_id(s)?;
        }
        Ok(Component {
            name: j.name,
            states,
            initial: j.initial,
            inputs: j.inputs.into_iter().collect(),
            outputs: j.outputs.into_iter().collect(),
            transitions: j.transitions.into_iter().collect(),
        })
    }
}

pub fn to_json_value(c: &Component) -> serde_json::Value {
    serde_json::to_value(ComponentJson::from(c)).expect("component serializes")
}

pub fn render_json(c: &Component) -> String {
    serde_json::to_string_pretty(&ComponentJson::from(c)).expect("component serializes")
}

pub fn parse_json(src: &str) -> Result<Component> {
    let j: ComponentJson = serde_json::from_str(src)?;
    j.try_into()
}

/// Picks the JSON parser when the document starts with `{`, the text parser otherwise.
pub fn parse_component(src: &str) -> Result<Component> {
    if src.trim_start().starts_with('{') {
        parse_json(src)
    } else {
        parse_text(src)
    }
}

/// One digraph per component, edges labelled `i|o`.
pub fn render_dot(c: &Component) -> String {
    let mut out = String::new();
    writeln!(out, "digraph {:?} {{", c.name).unwrap();
    writeln!(out, "  rankdir=LR;").unwrap();
    writeln!(out, "  __start [shape=point];").unwrap();
    writeln!(out, "  __start -> {:?};", c.initial).unwrap();
    for s in &c.states {
        writeln!(out, "  {s:?};").unwrap();
    }
    for t in &c.transitions {
        writeln!(out, "  {:?} -> {:?} [label={:?}];", t.from, t.to, format!("{}|{}", t.input, t.output)).unwrap();
    }
    out.push_str("}\n");
    out
}
