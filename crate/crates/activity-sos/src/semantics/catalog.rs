//! The rule catalog: identifiers, step kinds and label shapes.

use std::fmt;

/// Whether a step changes some node's status (macro) or only moves
/// tokens (micro).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StepKind {
    Micro,
    Macro,
}

/// Shape of the label a rule produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LabelKind {
    Invoke,
    Terminate,
    Tau,
    ExeTime,
    /// Micro-steps are unlabeled in the reduced space; in the complete
    /// space they show as a transfer `r(src-dst)` when bound to one edge
    /// and as `τ` otherwise.
    Hidden,
}

macro_rules! rules {
    ($($id:ident => $name:literal, $kind:ident, $label:ident, $doc:literal;)*) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum RuleId { $($id),* }

        impl RuleId {
            pub const ALL: &'static [RuleId] = &[$(RuleId::$id),*];

            pub fn name(self) -> &'static str {
                match self { $(RuleId::$id => $name),* }
            }

            pub fn kind(self) -> StepKind {
                match self { $(RuleId::$id => StepKind::$kind),* }
            }

            pub fn label_kind(self) -> LabelKind {
                match self { $(RuleId::$id => LabelKind::$label),* }
            }

            pub fn description(self) -> &'static str {
                match self { $(RuleId::$id => $doc),* }
            }
        }
    };
}

rules! {
    A1 => "action-invoke", Macro, Invoke, "consume offered inputs and start an action";
    A2 => "action-terminate", Macro, Terminate, "finish an action and offer its outputs";
    I1 => "initial-terminate", Macro, Terminate, "initial node offers a control token";
    F1 => "fork-consume", Micro, Hidden, "fork accepts tokens that pass at least one outgoing guard";
    F2 => "fork-offer", Micro, Hidden, "fork copies tokens to every output whose guard passes";
    J1 => "join-invoke", Micro, Hidden, "join consumes offered inputs when its specification holds";
    J2 => "join-order-add", Macro, Tau, "join records an input that started offering data";
    J3 => "join-order-remove", Macro, Tau, "join forgets an input that stopped offering data";
    J4 => "join-terminate", Micro, Hidden, "join offers the combined tokens on its output";
    M1 => "merge-transfer", Micro, Hidden, "merge passes offered tokens to its output";
    D1 => "decision-invoke", Micro, Hidden, "decision consumes offered inputs";
    D2 => "decision-terminate", Micro, Hidden, "decision finishes once its inputs are empty";
    D3 => "decision-eval-input", Micro, Hidden, "route the head input token by its own value";
    D4 => "decision-eval-dflow", Micro, Hidden, "route the head input token by the decision-flow value";
    D5 => "decision-eval-dbehavior", Micro, Hidden, "route the head input token by the decision behavior result";
    D6 => "decision-invoke-dbehavior", Micro, Hidden, "pass the head input token to the decision behavior";
    D7 => "decision-dbehavior-terminate", Macro, Terminate, "finish the decision behavior, keeping its result";
    FF1 => "flowfinal-invoke", Macro, Invoke, "flow final consumes an offered token";
    FF2 => "flowfinal-terminate", Macro, Terminate, "flow final finishes";
    AF1 => "final-async", Macro, Invoke, "activity final ends an asynchronously started activation";
    AF2 => "final-sync", Macro, Invoke, "activity final ends a synchronously called activation";
    AE1 => "accept-invoke", Macro, Invoke, "accept event action with inputs starts waiting";
    AE2 => "accept-receive-terminate", Macro, Terminate, "receive an event and finish";
    AE3 => "accept-receive-persistent", Macro, Terminate, "receive an event and keep waiting";
    S1 => "send-invoke", Macro, Invoke, "consume inputs and post a signal";
    S2 => "send-terminate", Macro, Terminate, "finish a send signal action";
    C1 => "call-invoke-mixed", Macro, Invoke, "call behavior with a non-streaming parameter set";
    C2 => "call-invoke-streaming-only", Macro, Invoke, "call behavior whose inputs are all streaming";
    C3 => "call-stream-in", Macro, Tau, "pass streaming inputs to a running callee";
    C4 => "call-stream-out", Micro, Hidden, "pass streaming outputs back to the call node";
    V1 => "activity-invoke", Macro, Tau, "start an activation whose parameters received tokens";
    V2 => "activity-terminate-sync", Macro, Terminate, "finish a synchronous activation and return its outputs";
    V3 => "out-param-transfer", Micro, Hidden, "move tokens onto an output parameter";
    X1 => "exception-throw", Micro, Hidden, "an exception parameter received a token";
    X2 => "handler-invoke", Micro, Hidden, "hand the exception value to a matching handler";
    X3 => "exception-propagate", Micro, Hidden, "propagate an unhandled exception to the caller";
    X4 => "exception-async-drop", Micro, Hidden, "drop an exception of an asynchronous activation";
    X5 => "handler-result", Micro, Hidden, "return a handler's results through the call node";
    // Extension rules; not part of the reference catalog.
    EdgeTransfer => "edge-transfer", Micro, Hidden, "move tokens along an edge without consuming them";
    ExeTime => "exe-time", Macro, ExeTime, "an action's execution time has elapsed";
    Tick => "clock-tick", Micro, Hidden, "advance every running clock by one unit";
}

/// The 38 entries of the reference catalog.
pub fn reference_rules() -> Vec<RuleId> {
    use RuleId::*;
    RuleId::ALL.iter().copied().filter(|r| !matches!(r, EdgeTransfer | ExeTime | Tick)).collect()
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self)
    }
}

/// Rules labeled `i(n)`; extra invocation premises attach to these.
pub fn invocation_rules() -> Vec<RuleId> {
    RuleId::ALL.iter().copied().filter(|r| r.label_kind() == LabelKind::Invoke).collect()
}
