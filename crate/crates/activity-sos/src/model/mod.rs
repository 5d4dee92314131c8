//! Static structure of activity diagrams: types, document parsing,
//! well-formedness validation, guards, token ordering and behaviors.

mod behavior;
mod document;
mod guard;
mod validate;

pub use behavior::{Behavior, BehaviorError, BehaviorRow};
pub use document::{emit_model, parse_model, ParseError};
pub use guard::{eval_guard, Guard, GuardError, Literal};
pub use validate::{validate_model, ValidationReport, Violation};

use crate::state::TokenValue;
use std::collections::BTreeMap;

/// Value type of a token holder. Declared data types behave like `Any`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ValueType {
    Control,
    Int,
    Bool,
    Str,
    Any,
    Named(String),
}

impl ValueType {
    pub fn parse(s: &str) -> ValueType {
        match s {
            "ControlToken" | "Control" | "control" => ValueType::Control,
            "Int" => ValueType::Int,
            "Bool" => ValueType::Bool,
            "Str" | "String" => ValueType::Str,
            "any" | "Any" => ValueType::Any,
            other => ValueType::Named(other.to_string()),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            ValueType::Control => "ControlToken",
            ValueType::Int => "Int",
            ValueType::Bool => "Bool",
            ValueType::Str => "Str",
            ValueType::Any => "any",
            ValueType::Named(n) => n,
        }
    }

    /// Whether a value may be stored in a holder of this type.
    /// `Null` is admitted everywhere since it fills unset outputs.
    pub fn admits(&self, v: &TokenValue) -> bool {
        match (self, v) {
            (_, TokenValue::Null) => true,
            (ValueType::Any | ValueType::Named(_), _) => true,
            (ValueType::Control, TokenValue::Control) => true,
            (ValueType::Int, TokenValue::Int(_)) => true,
            (ValueType::Bool, TokenValue::Bool(_)) => true,
            (ValueType::Str, TokenValue::Str(_)) => true,
            _ => false,
        }
    }
}

/// A bound that is either a finite count or unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bound {
    Finite(u32),
    Unbounded,
}

impl Bound {
    pub fn as_usize(self) -> usize {
        match self {
            Bound::Finite(n) => n as usize,
            Bound::Unbounded => usize::MAX,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    In,
    Out,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Ordering {
    #[default]
    Fifo,
    Lifo,
    Unordered,
}

/// Insert `incoming` into an existing holder sequence according to the
/// holder's ordering discipline. Consumption always takes from the front.
pub fn store_tokens(o: Ordering, existing: &[TokenValue], incoming: &[TokenValue]) -> Vec<TokenValue> {
    match o {
        Ordering::Fifo => existing.iter().chain(incoming).cloned().collect(),
        Ordering::Lifo => incoming.iter().rev().chain(existing).cloned().collect(),
        Ordering::Unordered => {
            let mut v: Vec<TokenValue> = existing.iter().chain(incoming).cloned().collect();
            v.sort();
            v
        }
    }
}

/// Reorder a token sequence per an ordering discipline.
pub fn order_tokens(o: Ordering, s: &[TokenValue]) -> Vec<TokenValue> {
    store_tokens(o, &[], s)
}

/// A typed token holder attached to a node.
#[derive(Debug, Clone, PartialEq)]
pub struct Pin {
    pub id: String,
    pub direction: Direction,
    pub value_type: ValueType,
    pub upper_bound: Bound,
    pub upper: Bound,
    pub lower: u32,
    pub ordering: Ordering,
}

impl Pin {
    pub fn new(id: impl Into<String>, direction: Direction, value_type: ValueType) -> Pin {
        Pin {
            id: id.into(),
            direction,
            value_type,
            upper_bound: Bound::Unbounded,
            upper: Bound::Finite(1),
            lower: 1,
            ordering: Ordering::Fifo,
        }
    }
}

/// An activity parameter node: a pin on the activity boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Apn {
    pub pin: Pin,
    pub streaming: bool,
    pub exception: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKindTag {
    Action,
    CallBehaviorAction,
    Fork,
    Join,
    Merge,
    Decision,
    InitialNode,
    FlowFinalNode,
    ActivityFinalNode,
    AcceptEventAction,
    SendSignalAction,
}

impl NodeKindTag {
    pub fn is_switch(self) -> bool {
        matches!(self, NodeKindTag::Fork | NodeKindTag::Join | NodeKindTag::Merge | NodeKindTag::Decision)
    }

    pub fn keyword(self) -> &'static str {
        match self {
            NodeKindTag::Action => "action",
            NodeKindTag::CallBehaviorAction => "call",
            NodeKindTag::Fork => "fork",
            NodeKindTag::Join => "join",
            NodeKindTag::Merge => "merge",
            NodeKindTag::Decision => "decision",
            NodeKindTag::InitialNode => "initial",
            NodeKindTag::FlowFinalNode => "flow_final",
            NodeKindTag::ActivityFinalNode => "activity_final",
            NodeKindTag::AcceptEventAction => "accept_event",
            NodeKindTag::SendSignalAction => "send_signal",
        }
    }

    pub fn from_keyword(s: &str) -> Option<NodeKindTag> {
        use NodeKindTag::*;
        [
            Action,
            CallBehaviorAction,
            Fork,
            Join,
            Merge,
            Decision,
            InitialNode,
            FlowFinalNode,
            ActivityFinalNode,
            AcceptEventAction,
            SendSignalAction,
        ]
        .into_iter()
        .find(|k| k.keyword() == s)
    }
}

/// Boolean condition over a Join's input pins.
#[derive(Debug, Clone, PartialEq)]
pub enum JoinSpec {
    /// All inputs must offer (the default).
    All,
    Pin(String),
    And(Box<JoinSpec>, Box<JoinSpec>),
    Or(Box<JoinSpec>, Box<JoinSpec>),
    Not(Box<JoinSpec>),
}

impl JoinSpec {
    pub fn eval(&self, offering: &dyn Fn(&str) -> bool, all_pins: &[String]) -> bool {
        match self {
            JoinSpec::All => all_pins.iter().all(|p| offering(p)),
            JoinSpec::Pin(p) => offering(p),
            JoinSpec::And(a, b) => a.eval(offering, all_pins) && b.eval(offering, all_pins),
            JoinSpec::Or(a, b) => a.eval(offering, all_pins) || b.eval(offering, all_pins),
            JoinSpec::Not(a) => !a.eval(offering, all_pins),
        }
    }

    pub fn pins(&self, out: &mut Vec<String>) {
        match self {
            JoinSpec::All => {}
            JoinSpec::Pin(p) => out.push(p.clone()),
            JoinSpec::And(a, b) | JoinSpec::Or(a, b) => {
                a.pins(out);
                b.pins(out);
            }
            JoinSpec::Not(a) => a.pins(out),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Action { behavior: Option<String> },
    CallBehaviorAction { behavior: String, synchronous: bool },
    Fork,
    Join { join_spec: JoinSpec },
    Merge,
    Decision { d_flow: Option<String>, d_behavior: Option<String> },
    InitialNode,
    FlowFinalNode,
    ActivityFinalNode,
    AcceptEventAction { event: String, result: String, pool: String },
    SendSignalAction { event: String, pool: String },
}

impl NodeKind {
    pub fn tag(&self) -> NodeKindTag {
        match self {
            NodeKind::Action { .. } => NodeKindTag::Action,
            NodeKind::CallBehaviorAction { .. } => NodeKindTag::CallBehaviorAction,
            NodeKind::Fork => NodeKindTag::Fork,
            NodeKind::Join { .. } => NodeKindTag::Join,
            NodeKind::Merge => NodeKindTag::Merge,
            NodeKind::Decision { .. } => NodeKindTag::Decision,
            NodeKind::InitialNode => NodeKindTag::InitialNode,
            NodeKind::FlowFinalNode => NodeKindTag::FlowFinalNode,
            NodeKind::ActivityFinalNode => NodeKindTag::ActivityFinalNode,
            NodeKind::AcceptEventAction { .. } => NodeKindTag::AcceptEventAction,
            NodeKind::SendSignalAction { .. } => NodeKindTag::SendSignalAction,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
    pub in_pins: Vec<Pin>,
    pub out_pins: Vec<Pin>,
}

impl Node {
    pub fn pin(&self, id: &str) -> Option<&Pin> {
        self.in_pins.iter().chain(&self.out_pins).find(|p| p.id == id)
    }
}

/// Edge weight: a minimum token count, or all guard-passing tokens at once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Weight {
    Count(u32),
    All,
}

/// Endpoint of an edge: a node pin or an activity parameter node.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HolderRef {
    Pin { node: String, pin: String },
    Apn(String),
}

impl HolderRef {
    pub fn node(&self) -> Option<&str> {
        match self {
            HolderRef::Pin { node, .. } => Some(node),
            HolderRef::Apn(_) => None,
        }
    }
}

impl std::fmt::Display for HolderRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HolderRef::Pin { node, pin } => write!(f, "{node}.{pin}"),
            HolderRef::Apn(a) => write!(f, "{a}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub source: HolderRef,
    pub target: HolderRef,
    pub guard: Guard,
    pub weight: Weight,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HandlerBinding {
    pub node: String,
    pub exception_type: ValueType,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Activity {
    pub name: String,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub apns: Vec<Apn>,
    pub parameter_sets: Vec<Vec<String>>,
    pub handlers: Vec<HandlerBinding>,
}

impl Activity {
    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn apn(&self, id: &str) -> Option<&Apn> {
        self.apns.iter().find(|a| a.pin.id == id)
    }

    pub fn holder(&self, h: &HolderRef) -> Option<&Pin> {
        match h {
            HolderRef::Pin { node, pin } => self.node(node)?.pin(pin),
            HolderRef::Apn(a) => self.apn(a).map(|a| &a.pin),
        }
    }

    pub fn input_apns(&self) -> impl Iterator<Item = &Apn> {
        self.apns.iter().filter(|a| a.pin.direction == Direction::In)
    }

    /// Non-exception output APNs, in declaration order.
    pub fn output_apns(&self) -> impl Iterator<Item = &Apn> {
        self.apns.iter().filter(|a| a.pin.direction == Direction::Out && !a.exception)
    }
}

/// A complete model: activities, event names, data types and event pools.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub activities: Vec<Activity>,
    pub event_names: Vec<String>,
    pub data_types: Vec<String>,
    pub event_pools: Vec<String>,
    pub root: String,
    pub behaviors: BTreeMap<String, Behavior>,
}

pub const DEFAULT_POOL: &str = "default";

impl Model {
    pub fn activity(&self, name: &str) -> Option<&Activity> {
        self.activities.iter().find(|a| a.name == name)
    }
}
