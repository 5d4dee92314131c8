//! State-space exploration into a labeled Kripke structure, plus DOT and
//! JSON emitters and random simulation.

use crate::semantics::{applicable, transitions, SemanticsError, SemanticsProfile};
use crate::state::{initial_state, ActivityStatus, ExecState, Fingerprint, NodeStatus, Program, StepLabel};
use crate::model::NodeKindTag;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use thiserror::Error;

/// Which transition relation to explore.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Closed transitions between visible states, labeled `i(n)`, `t(n)`,
    /// `τ` or `exeTime(n)`.
    #[default]
    Reduced,
    /// Every single rule application, micro-steps included.
    Complete,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Mode, String> {
        match s {
            "reduced" => Ok(Mode::Reduced),
            "complete" => Ok(Mode::Complete),
            other => Err(format!("unknown mode `{other}` (expected reduced or complete)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExploreOptions {
    pub mode: Mode,
    /// Stop expanding once this many states are known.
    pub max_states: Option<usize>,
    /// Worker threads for successor computation (0 = rayon default).
    pub jobs: usize,
    /// Drop `τ` self-loops from the output.
    pub collapse_tau_loops: bool,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions { mode: Mode::Reduced, max_states: None, jobs: 1, collapse_tau_loops: false }
    }
}

#[derive(Debug, Clone)]
pub struct StateInfo {
    pub state: ExecState,
    pub fingerprint: Fingerprint,
    pub props: Vec<String>,
    /// Successors were computed (false only for states cut off by the
    /// state bound).
    pub expanded: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Edge {
    pub src: usize,
    pub label: StepLabel,
    pub dst: usize,
}

/// A labeled Kripke structure. State 0 is the initial state; the other
/// states are ordered by fingerprint; edges by (src, label, dst).
#[derive(Debug, Clone)]
pub struct Kripke {
    pub profile: String,
    pub mode: Mode,
    pub states: Vec<StateInfo>,
    pub transitions: Vec<Edge>,
    pub initial: usize,
    pub truncated: bool,
    /// Node labels of the program; labels of compared structures must
    /// range over the same names.
    pub alphabet: BTreeSet<String>,
}

#[derive(Debug, Error, PartialEq)]
pub enum ExploreError {
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error("could not start worker pool: {0}")]
    Pool(String),
}

fn successors(p: &Program, prof: &SemanticsProfile, mode: Mode, s: &ExecState) -> Result<Vec<(StepLabel, ExecState)>, SemanticsError> {
    Ok(match mode {
        Mode::Reduced => transitions(p, prof, s)?.into_iter().map(|t| (t.label, t.target)).collect(),
        Mode::Complete => {
            let mut v: Vec<(StepLabel, ExecState)> = applicable(p, prof, s).into_iter().map(|i| (i.label, i.next)).collect();
            v.sort();
            v.dedup();
            v
        }
    })
}

/// Whether the run has ended normally: the root activation finished, or
/// every node is idle (waiting accept event actions without inputs
/// excepted).
pub fn is_finished(p: &Program, s: &ExecState) -> bool {
    s.activities[p.root] == ActivityStatus::Idle
        || p.nodes.iter().enumerate().all(|(n, ni)| {
            s.nodes[n].is_idle() || (ni.kind.tag() == NodeKindTag::AcceptEventAction && ni.in_holders.is_empty())
        })
}

/// Propositions of a state; `has_successors` is `None` when unknown.
pub fn propositions(p: &Program, s: &ExecState, has_successors: Option<bool>) -> Vec<String> {
    let mut props = s.macro_view(p).propositions(p);
    if has_successors == Some(false) {
        let exception = s.activities.iter().any(|a| matches!(a, ActivityStatus::Exception(_)));
        if is_finished(p, s) {
            props.push("terminated".into());
        } else if !exception {
            props.push("deadlock".into());
        }
    }
    props.sort();
    props
}

/// Explore the state space reachable from the initial state.
pub fn explore(p: &Program, prof: &SemanticsProfile, opts: &ExploreOptions) -> Result<Kripke, ExploreError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(opts.jobs).build().map_err(|e| ExploreError::Pool(e.to_string()))?;
    let init = initial_state(p, prof.with_clocks());
    let mut index: HashMap<ExecState, usize> = HashMap::new();
    let mut states: Vec<ExecState> = vec![init.clone()];
    let mut expanded: Vec<bool> = vec![false];
    let mut has_succ: Vec<bool> = vec![false];
    index.insert(init, 0);
    let mut raw: Vec<(usize, StepLabel, usize)> = Vec::new();
    let mut frontier: Vec<usize> = vec![0];
    let mut truncated = false;
    while !frontier.is_empty() {
        let batch: Vec<Result<Vec<(StepLabel, ExecState)>, SemanticsError>> =
            pool.install(|| frontier.par_iter().map(|&i| successors(p, prof, opts.mode, &states[i])).collect());
        let mut next_frontier = Vec::new();
        for (&src, succ) in frontier.iter().zip(batch) {
            let succ = succ?;
            expanded[src] = true;
            has_succ[src] = !succ.is_empty();
            for (label, t) in succ {
                let dst = match index.get(&t) {
                    Some(&d) => d,
                    None => {
                        if opts.max_states.is_some_and(|m| states.len() >= m) {
                            truncated = true;
                            continue;
                        }
                        let d = states.len();
                        index.insert(t.clone(), d);
                        states.push(t);
                        expanded.push(false);
                        has_succ.push(false);
                        next_frontier.push(d);
                        d
                    }
                };
                raw.push((src, label, dst));
            }
        }
        frontier = next_frontier;
    }

    // Canonical numbering: initial first, the rest by fingerprint.
    let fps: Vec<Fingerprint> = pool.install(|| states.par_iter().map(|s| s.fingerprint(p)).collect());
    let mut order: Vec<usize> = (1..states.len()).collect();
    order.sort_by(|&a, &b| fps[a].cmp(&fps[b]));
    order.insert(0, 0);
    let mut renum = vec![0; states.len()];
    for (new, &old) in order.iter().enumerate() {
        renum[old] = new;
    }
    let infos: Vec<StateInfo> = order
        .iter()
        .map(|&old| StateInfo {
            props: propositions(p, &states[old], expanded[old].then_some(has_succ[old])),
            state: states[old].clone(),
            fingerprint: fps[old].clone(),
            expanded: expanded[old],
        })
        .collect();
    let mut edges: Vec<Edge> = raw
        .into_iter()
        .map(|(s, label, d)| Edge { src: renum[s], label, dst: renum[d] })
        .filter(|e| !(opts.collapse_tau_loops && e.src == e.dst && e.label == StepLabel::Tau))
        .collect();
    edges.sort();
    edges.dedup();
    Ok(Kripke {
        profile: prof.name.clone(),
        mode: opts.mode,
        states: infos,
        transitions: edges,
        initial: 0,
        truncated,
        alphabet: p.nodes.iter().map(|n| n.label.clone()).collect(),
    })
}

impl Kripke {
    /// Expanded states without outgoing transitions.
    pub fn terminal_states(&self) -> Vec<usize> {
        let mut has_out = vec![false; self.states.len()];
        for e in &self.transitions {
            has_out[e.src] = true;
        }
        (0..self.states.len()).filter(|&i| self.states[i].expanded && !has_out[i]).collect()
    }

    pub fn successors(&self, i: usize) -> impl Iterator<Item = &Edge> {
        let start = self.transitions.partition_point(|e| e.src < i);
        self.transitions[start..].iter().take_while(move |e| e.src == i)
    }

    pub fn labels(&self) -> BTreeSet<StepLabel> {
        self.transitions.iter().map(|e| e.label.clone()).collect()
    }

    pub fn to_json(&self, p: Option<&Program>) -> Value {
        let states: Vec<Value> = self
            .states
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let mut v = json!({"id": i, "fingerprint": s.fingerprint.0, "props": s.props});
                if let Some(p) = p {
                    v["state"] = s.state.canonical(p);
                }
                v
            })
            .collect();
        let transitions: Vec<Value> =
            self.transitions.iter().map(|e| json!({"src": e.src, "label": e.label.to_string(), "dst": e.dst})).collect();
        json!({
            "profile": self.profile,
            "states": states,
            "transitions": transitions,
            "initial": self.initial,
            "truncated": self.truncated,
        })
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph kripke {\n  rankdir=TB;\n  node [shape=box, fontsize=10];\n");
        let _ = writeln!(out, "  init [shape=point];\n  init -> s{};", self.initial);
        for (i, s) in self.states.iter().enumerate() {
            let props: Vec<&str> =
                s.props.iter().map(String::as_str).filter(|p| !p.starts_with("idle(")).collect();
            let _ = writeln!(out, "  s{i} [label=\"s{i}\\n{}\"];", escape(&props.join("\\n")));
        }
        for e in &self.transitions {
            let _ = writeln!(out, "  s{} -> s{} [label=\"{}\"];", e.src, e.dst, escape(&e.label.to_string()));
        }
        out.push_str("}\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('"', "\\\"")
}

/// One randomly chosen run of at most `max_len` reduced transitions. The
/// same seed always yields the same run.
pub fn random_trace(
    p: &Program,
    prof: &SemanticsProfile,
    seed: u64,
    max_len: usize,
) -> Result<Vec<(StepLabel, ExecState)>, SemanticsError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = initial_state(p, prof.with_clocks());
    let mut out = Vec::new();
    for _ in 0..max_len {
        let ts = transitions(p, prof, &s)?;
        let Some(t) = ts.choose(&mut rng) else { break };
        s = t.target.clone();
        out.push((t.label.clone(), s.clone()));
    }
    Ok(out)
}

/// Number of nodes occupying the processor: executing (or ready) nodes
/// other than switch nodes and waiting nodes.
pub fn running_nodes(p: &Program, s: &ExecState) -> usize {
    s.nodes
        .iter()
        .enumerate()
        .filter(|(n, st)| p.uses_core(*n) && matches!(st, NodeStatus::Executing(_) | NodeStatus::Ready(_)))
        .count()
}
