//! Synchronous composition and compositional conformance checking for nondeterministic
//! input/output state machines.

pub mod composition;
pub mod compositional;
pub mod conformance;
pub mod error;
pub mod fixtures;
pub mod format;
pub mod fsm;
pub mod generate;
pub mod projection;

pub use composition::{build_composed, build_system, signature_check, synchronous_parallel, SystemExpr};
pub use compositional::{check_theorem1, check_theorem2, localize_fault, CompositionalReport, Conclusion};
pub use conformance::{check_cioco_bounded, check_cioco_exact, check_trace_inclusion, Counterexample, Outcome, Verdict};
pub use error::{Error, Result};
pub use fsm::{Component, Guard, IoPair, Label, Trace, Transition};
pub use projection::{component_in_context, component_in_context_tree, project_trace, ContextComponent};
