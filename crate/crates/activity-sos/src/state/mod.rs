//! Execution states: token values, node/activity statuses, the state
//! tuple, its canonical serialization and fingerprint, and the macro view.

mod program;

pub use program::{ActInst, EdgeInst, HolderInst, NodeInst, Program, ProgramError};

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use std::fmt;

/// A token travelling through an activity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TokenValue {
    Control,
    Null,
    Int(i64),
    Bool(bool),
    Str(String),
    /// An occurred event: its name and the data that was sent with it.
    EventPayload(String, Vec<TokenValue>),
}

impl TokenValue {
    pub fn is_control(&self) -> bool {
        matches!(self, TokenValue::Control)
    }
}

impl fmt::Display for TokenValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenValue::Control => write!(f, "CT"),
            TokenValue::Null => write!(f, "null"),
            TokenValue::Int(i) => write!(f, "{i}"),
            TokenValue::Bool(b) => write!(f, "{b}"),
            TokenValue::Str(s) => write!(f, "{s:?}"),
            TokenValue::EventPayload(e, v) => {
                write!(f, "{e}(")?;
                for (i, t) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Consumed input tokens, keyed by input-pin index of the node, in the
/// order they were recorded.
pub type FIn = Vec<(usize, Vec<TokenValue>)>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeStatus {
    Idle,
    /// Join only: input pins (by index) in the order they were offered data.
    IdleOrdered(Vec<usize>),
    Executing(FIn),
    /// Execution time elapsed; only with the execution-time extension.
    Ready(FIn),
}

impl NodeStatus {
    pub fn is_idle(&self) -> bool {
        matches!(self, NodeStatus::Idle | NodeStatus::IdleOrdered(_))
    }

    pub fn is_running(&self) -> bool {
        matches!(self, NodeStatus::Executing(_) | NodeStatus::Ready(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActivityStatus {
    Idle,
    /// Chosen parameter set (index) and output APNs (indices) still to be set.
    Executing { ps: usize, pending: Vec<usize> },
    Exception(TokenValue),
}

impl ActivityStatus {
    pub fn is_executing(&self) -> bool {
        matches!(self, ActivityStatus::Executing { .. })
    }
}

/// The full state tuple. Vectors are indexed by the instance ids of a
/// [`Program`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExecState {
    pub nodes: Vec<NodeStatus>,
    pub activities: Vec<ActivityStatus>,
    pub holders: Vec<Vec<TokenValue>>,
    /// One sorted multiset of event payloads per pool.
    pub events: Vec<Vec<TokenValue>>,
    /// Per node instance: elapsed time, or `None` when stopped.
    pub clocks: Option<Vec<Option<u32>>>,
}

/// Hex SHA-256 digest of a state's canonical serialization.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fingerprint(pub String);

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Labels of steps and transitions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StepLabel {
    Invoke(String),
    Terminate(String),
    Tau,
    /// Token transfer between two elements, named `src-dst`.
    Transfer(String, String),
    ExeTime(String),
}

impl StepLabel {
    pub fn is_internal(&self) -> bool {
        matches!(self, StepLabel::Tau | StepLabel::Transfer(..) | StepLabel::ExeTime(_))
    }

    pub fn parse(s: &str) -> Option<StepLabel> {
        if s == "τ" || s == "tau" {
            return Some(StepLabel::Tau);
        }
        let (head, rest) = s.split_once('(')?;
        let arg = rest.strip_suffix(')')?;
        match head {
            "i" => Some(StepLabel::Invoke(arg.to_string())),
            "t" => Some(StepLabel::Terminate(arg.to_string())),
            "exeTime" => Some(StepLabel::ExeTime(arg.to_string())),
            "r" => {
                let (a, b) = arg.split_once('-')?;
                Some(StepLabel::Transfer(a.to_string(), b.to_string()))
            }
            _ => None,
        }
    }
}

impl fmt::Display for StepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepLabel::Invoke(n) => write!(f, "i({n})"),
            StepLabel::Terminate(n) => write!(f, "t({n})"),
            StepLabel::Tau => write!(f, "τ"),
            StepLabel::Transfer(a, b) => write!(f, "r({a}-{b})"),
            StepLabel::ExeTime(n) => write!(f, "exeTime({n})"),
        }
    }
}

fn tokens_json(v: &[TokenValue]) -> Value {
    Value::Array(v.iter().map(|t| json!(t.to_string())).collect())
}

fn fin_json(p: &Program, node: usize, f: &FIn) -> Value {
    let n = &p.nodes[node];
    let mut m = Map::new();
    for (pin, toks) in f {
        m.insert(p.holders[n.in_holders[*pin]].pin.id.clone(), tokens_json(toks));
    }
    Value::Object(m)
}

fn node_status_json(p: &Program, node: usize, s: &NodeStatus) -> Value {
    match s {
        NodeStatus::Idle => json!("idle"),
        NodeStatus::IdleOrdered(order) => {
            let n = &p.nodes[node];
            json!({"idle": order.iter().map(|i| p.holders[n.in_holders[*i]].pin.id.clone()).collect::<Vec<_>>()})
        }
        NodeStatus::Executing(f) => json!({"executing": fin_json(p, node, f)}),
        NodeStatus::Ready(f) => json!({"ready": fin_json(p, node, f)}),
    }
}

impl ExecState {
    /// Canonical serialization: a JSON object with keys `activities`,
    /// `clocks`, `events`, `holders`, `nodes`, each mapping instance paths
    /// to values. Keys are sorted; empty holders and empty pools are
    /// omitted; tokens are rendered with their display form.
    pub fn canonical(&self, p: &Program) -> Value {
        let nodes: Map<String, Value> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, s)| (p.nodes[i].path.clone(), node_status_json(p, i, s)))
            .collect();
        let acts: Map<String, Value> = self
            .activities
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let v = match s {
                    ActivityStatus::Idle => json!("idle"),
                    ActivityStatus::Executing { ps, pending } => {
                        let act = p.activity_of(i);
                        json!({"executing": {
                            "ps": ps,
                            "pending": pending.iter().map(|a| act.apns[*a].pin.id.clone()).collect::<Vec<_>>(),
                        }})
                    }
                    ActivityStatus::Exception(v) => json!({"exception": v.to_string()}),
                };
                (p.activities[i].path.clone(), v)
            })
            .collect();
        let holders: Map<String, Value> = self
            .holders
            .iter()
            .enumerate()
            .filter(|(_, h)| !h.is_empty())
            .map(|(i, h)| (p.holders[i].path.clone(), tokens_json(h)))
            .collect();
        let events: Map<String, Value> = self
            .events
            .iter()
            .enumerate()
            .filter(|(_, e)| !e.is_empty())
            .map(|(i, e)| (p.pools[i].clone(), tokens_json(e)))
            .collect();
        let mut top = Map::new();
        top.insert("activities".into(), Value::Object(acts));
        if let Some(clocks) = &self.clocks {
            let c: Map<String, Value> = clocks
                .iter()
                .enumerate()
                .filter_map(|(i, c)| c.map(|c| (p.nodes[i].path.clone(), json!(c))))
                .collect();
            top.insert("clocks".into(), Value::Object(c));
        }
        top.insert("events".into(), Value::Object(events));
        top.insert("holders".into(), Value::Object(holders));
        top.insert("nodes".into(), Value::Object(nodes));
        Value::Object(top)
    }

    pub fn canonical_string(&self, p: &Program) -> String {
        // serde_json maps are BTreeMap-backed here, so key order is sorted.
        serde_json::to_string(&self.canonical(p)).expect("state serializes")
    }

    pub fn fingerprint(&self, p: &Program) -> Fingerprint {
        let digest = Sha256::digest(self.canonical_string(p).as_bytes());
        Fingerprint(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn macro_view(&self, p: &Program) -> MacroView {
        MacroView {
            nodes: self.nodes.clone(),
            activities: self.activities.clone(),
            holders: self
                .holders
                .iter()
                .enumerate()
                .map(|(i, h)| if p.holders[i].on_switch { Vec::new() } else { h.clone() })
                .collect(),
            events: self.events.clone(),
        }
    }
}

/// Free function form of [`ExecState::fingerprint`].
pub fn fingerprint(s: &ExecState, p: &Program) -> Fingerprint {
    s.fingerprint(p)
}

/// Projection of a state onto execution-relevant information: statuses,
/// event pools and the contents of holders not owned by switch nodes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MacroView {
    pub nodes: Vec<NodeStatus>,
    pub activities: Vec<ActivityStatus>,
    pub holders: Vec<Vec<TokenValue>>,
    pub events: Vec<Vec<TokenValue>>,
}

impl MacroView {
    /// Atomic propositions derivable from the view alone (`terminated`
    /// and `deadlock` need the successor relation and are added by the
    /// explorer).
    pub fn propositions(&self, p: &Program) -> Vec<String> {
        let mut props = Vec::new();
        for (i, s) in self.nodes.iter().enumerate() {
            let n = &p.nodes[i];
            if n.kind.tag().is_switch() {
                continue;
            }
            if s.is_running() {
                props.push(format!("executing({})", n.label));
            } else {
                props.push(format!("idle({})", n.label));
            }
        }
        for (i, s) in self.activities.iter().enumerate() {
            if matches!(s, ActivityStatus::Exception(_)) {
                props.push(format!("exception({})", p.activities[i].path));
            }
        }
        props
    }
}

/// Build the initial state of a program: the root activity executing with
/// its first parameter set, its initial nodes and parameterless accept
/// event actions executing, and everything else idle and empty.
pub fn initial_state(p: &Program, with_clocks: bool) -> ExecState {
    let mut s = p.empty_state(with_clocks);
    p.start_activity(&mut s, p.root, 0);
    s
}
