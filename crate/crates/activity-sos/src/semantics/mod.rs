//! Rule application and the transition closure.
//!
//! [`applicable`] enumerates every rule instance enabled in a state; each
//! instance carries the successor state it produces. [`transitions`]
//! chains micro-steps and closes them with a macro-step to obtain the
//! transitions of the reduced state space.

pub mod catalog;
mod closure;
mod rules;
pub mod transfer;

pub use catalog::{invocation_rules, reference_rules, LabelKind, RuleId, StepKind};
pub use closure::{is_visible, transitions, Transition};

use crate::state::{ExecState, Program, StepLabel};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// How micro-steps interleave with macro-steps inside a transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClosurePolicy {
    /// Macro-steps may close a transition at any intermediate state.
    #[default]
    Standard,
    /// Micro-steps are applied until none is enabled before any
    /// macro-step may fire.
    EagerTransfer,
}

/// Token-consumption variants: tokens travel along edges as separate
/// micro-steps, and nodes consume from their own pins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variation {
    /// Edges transfer eagerly (maximally) before any node may fire.
    Eager,
    /// Edge transfers interleave freely with node execution.
    Lazy,
}

/// A set of rules together with the premises and closure policy that
/// govern how they combine.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticsProfile {
    pub name: String,
    pub rules: BTreeSet<RuleId>,
    pub closure: ClosurePolicy,
    /// Invocation rules additionally require that no other node occupies
    /// the (single) processor.
    pub single_core: bool,
    /// Execution time per action id; enables clocks when present.
    pub timing: Option<BTreeMap<String, u32>>,
    pub consumption: Option<Variation>,
    /// Bound on the number of intermediate states explored while closing
    /// one transition.
    pub max_micro_states: usize,
}

impl SemanticsProfile {
    pub fn has(&self, r: RuleId) -> bool {
        self.rules.contains(&r)
    }

    pub fn with_clocks(&self) -> bool {
        self.timing.is_some()
    }

    /// Nodes consume only tokens already stored on their own pins.
    pub fn consume_from_pins(&self) -> bool {
        self.consumption.is_some()
    }

    /// Execution time of a node instance (looked up by its model id).
    pub fn time_of(&self, p: &Program, n: usize) -> u32 {
        let id = p.nodes[n].label.rsplit('/').next().unwrap_or_default();
        self.timing.as_ref().and_then(|t| t.get(id).copied()).unwrap_or(0)
    }
}

/// One enabled application of a rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleInstance {
    pub rule: RuleId,
    pub node: Option<usize>,
    pub act: Option<usize>,
    pub edge: Option<usize>,
    /// Human-readable description of the chosen bindings.
    pub detail: String,
    pub label: StepLabel,
    pub kind: StepKind,
    pub next: ExecState,
}

#[derive(Debug, Error, PartialEq)]
pub enum SemanticsError {
    #[error("rule instance {0} is not enabled in the given state")]
    StaleInstance(String),
    #[error("closing a transition from state {fingerprint} visited more than {bound} intermediate states")]
    MicroDivergence { bound: usize, fingerprint: String },
    #[error("execution time missing for action(s): {0}")]
    MissingTiming(String),
}

/// Every rule instance enabled in `s`, in catalog order.
pub fn applicable(p: &Program, prof: &SemanticsProfile, s: &ExecState) -> Vec<RuleInstance> {
    rules::enabled(p, prof, s)
}

/// Apply a previously enumerated instance to `s`. Fails if the instance
/// is not enabled in `s` (e.g. it was computed for another state).
pub fn fire(p: &Program, prof: &SemanticsProfile, s: &ExecState, inst: &RuleInstance) -> Result<ExecState, SemanticsError> {
    if applicable(p, prof, s).iter().any(|i| i == inst) {
        Ok(inst.next.clone())
    } else {
        Err(SemanticsError::StaleInstance(format!("{}[{}]", inst.rule, inst.detail)))
    }
}
