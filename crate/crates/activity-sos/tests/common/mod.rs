//! Shared helpers for the integration tests: fixture loading, a random
//! model generator and an independent reference enumerator for
//! control-flow-only models.

#![allow(dead_code)]

use activity_sos::explorer::{propositions, Edge, Kripke, Mode, StateInfo};
use activity_sos::model::{parse_model, Bound, Guard, NodeKindTag, ValueType, Weight};
use activity_sos::state::{initial_state, ActivityStatus, ExecState, NodeStatus, Program, StepLabel, TokenValue};
use serde_json::{json, Value};
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::path::PathBuf;

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture(name: &str) -> String {
    let path = fixture_dir().join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn program(doc: &str) -> Program {
    Program::new(&parse_model(doc).expect("model parses")).expect("model is well-formed")
}

/// Every model fixture (timing tables excluded), sorted by name.
pub fn model_fixtures() -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = std::fs::read_dir(fixture_dir())
        .expect("fixture directory")
        .filter_map(|e| {
            let name = e.ok()?.file_name().into_string().ok()?;
            (name.ends_with(".json") && !name.starts_with("timing")).then_some(name)
        })
        .map(|name| {
            let doc = fixture(&name);
            (name, doc)
        })
        .collect();
    out.sort();
    out
}

// ---- random models ----

/// Decode a byte string into a small, well-formed, acyclic control-flow
/// model with at most `max_nodes` nodes (initial nodes included).
///
/// Every byte sequence decodes to some model, so the generator can be fed
/// by proptest (which then shrinks the bytes) or by a seeded RNG.
pub fn decode_model(genome: &[u8], max_nodes: usize) -> String {
    let mut pos = 0;
    let mut next = move || {
        let b = genome.get(pos).copied().unwrap_or(0);
        pos += 1;
        b as usize
    };
    let inits = 1 + next() % 2;
    let others = 1 + next() % (max_nodes - inits).max(1);
    let mut nodes: Vec<Value> = Vec::new();
    let mut edges: Vec<Value> = Vec::new();
    // Endpoints that can feed an edge.
    let mut producers: Vec<String> = Vec::new();
    for i in 0..inits {
        nodes.push(json!({"id": format!("I{i}"), "kind": "initial"}));
        producers.push(format!("I{i}"));
    }
    let bounds = [json!(1), json!(2), json!("*")];
    let pick = |next: &mut dyn FnMut() -> usize, producers: &[String]| producers[next() % producers.len()].clone();
    for k in 0..others {
        let kind = match next() % 10 {
            0..=3 | 9 => "action",
            4 => "fork",
            5 => "join",
            6 => "merge",
            7 => "flow_final",
            _ => "activity_final",
        };
        let id = format!("{}{k}", &kind[..1].to_uppercase());
        let sources = 1 + usize::from(next() % 3 == 0);
        match kind {
            "action" => {
                let ins = 1 + next() % 2;
                let outs = next() % 3;
                let pin = |name: String, next: &mut dyn FnMut() -> usize| {
                    let mut p = json!({"id": name, "type": "Control", "upper_bound": bounds[next() % 3].clone()});
                    if next() % 4 == 0 {
                        p["upper"] = json!(2);
                    }
                    p
                };
                let in_pins: Vec<Value> = (0..ins).map(|i| pin(format!("i{i}"), &mut next)).collect();
                let out_pins: Vec<Value> = (0..outs).map(|o| pin(format!("o{o}"), &mut next)).collect();
                for i in 0..ins {
                    for _ in 0..sources {
                        let src = pick(&mut next, &producers);
                        edges.push(json!({"from": src, "to": format!("{id}.i{i}")}));
                    }
                }
                nodes.push(json!({"id": id, "kind": "action", "in": in_pins, "out": out_pins}));
                producers.extend((0..outs).map(|o| format!("{id}.o{o}")));
            }
            _ => {
                let n_in = if kind == "join" || kind == "merge" { sources } else { 1 };
                for _ in 0..n_in {
                    let src = pick(&mut next, &producers);
                    edges.push(json!({"from": src, "to": id}));
                }
                nodes.push(json!({"id": id, "kind": kind}));
                if matches!(kind, "fork" | "join" | "merge") {
                    producers.push(id.clone());
                    if kind == "fork" {
                        // A fork needs at least two consumers to be interesting;
                        // register it twice so later nodes are likely to pick it.
                        producers.push(id);
                    }
                }
            }
        }
    }
    json!({"activities": [{"name": "generated", "nodes": nodes, "edges": edges}]}).to_string()
}

/// A deterministic corpus of `n` random models.
pub fn corpus(n: usize, max_nodes: usize) -> Vec<String> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand::rngs::StdRng::seed_from_u64(0x5eed);
    (0..n)
        .map(|_| {
            let len = rng.gen_range(8..40);
            let genome: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
            decode_model(&genome, max_nodes)
        })
        .collect()
}

// ---- independent enumerator ----

/// A straightforward token-game interpreter for single-activity models
/// built from initial, action, fork, join, merge and final nodes carrying
/// control tokens only. It shares no code with the engine's rules or
/// closure: every step is recomputed from the flattened graph.
pub struct Oracle<'a> {
    pub p: &'a Program,
}

#[derive(Debug, Clone)]
struct Move {
    visible_step: bool,
    label: StepLabel,
    next: ExecState,
}

/// One way to feed an input pin: the holder drawn from, the edge (if
/// not the pin itself) and the number of tokens.
#[derive(Debug, Clone, Copy)]
struct Feed {
    from: usize,
    edge: Option<usize>,
    k: usize,
}

impl<'a> Oracle<'a> {
    /// Whether the model is inside the fragment this interpreter handles.
    pub fn supports(p: &Program) -> bool {
        use NodeKindTag::*;
        p.activities.len() == 1
            && p.nodes.iter().all(|n| {
                matches!(n.kind.tag(), InitialNode | Action | Fork | Join | Merge | FlowFinalNode | ActivityFinalNode)
                    && !matches!(&n.kind, activity_sos::model::NodeKind::Action { behavior: Some(_) })
                    && !matches!(&n.kind, activity_sos::model::NodeKind::Join { join_spec } if *join_spec != activity_sos::model::JoinSpec::All)
            })
            && p.edges.iter().all(|e| e.guard == Guard::True && e.weight == Weight::Count(1))
            && p.holders.iter().all(|h| {
                h.node.is_some() && h.pin.lower == 1 && matches!(h.pin.value_type, ValueType::Control | ValueType::Any)
            })
    }

    fn switch_holder(&self, h: usize) -> bool {
        let n = self.p.holders[h].node.expect("node pin");
        matches!(self.p.nodes[n].kind.tag(), NodeKindTag::Fork | NodeKindTag::Join | NodeKindTag::Merge)
    }

    fn cap(b: Bound) -> usize {
        match b {
            Bound::Finite(n) => n as usize,
            Bound::Unbounded => usize::MAX,
        }
    }

    fn owner(&self, h: usize) -> String {
        self.p.nodes[self.p.holders[h].node.expect("node pin")].label.clone()
    }

    /// Sizes that may move along edge `e` into its target pin.
    fn sizes(&self, s: &ExecState, e: usize) -> Vec<usize> {
        let edge = &self.p.edges[e];
        let have = s.holders[edge.source].len();
        let pin = &self.p.holders[edge.target].pin;
        let room = Self::cap(pin.upper_bound).saturating_sub(s.holders[edge.target].len());
        let lo = (pin.lower as usize).max(1);
        let hi = have.min(Self::cap(pin.upper)).min(room);
        if have < lo {
            return vec![];
        }
        if self.switch_holder(edge.target) {
            (lo..=hi).collect()
        } else if hi >= lo {
            vec![hi]
        } else {
            vec![]
        }
    }

    /// All feeds for input pin `h`: along each incoming edge, or from the
    /// pin's own tokens.
    fn feeds(&self, s: &ExecState, h: usize) -> Vec<Feed> {
        let mut out = Vec::new();
        for &e in &self.p.incoming[h] {
            for k in self.sizes(s, e) {
                out.push(Feed { from: self.p.edges[e].source, edge: Some(e), k });
            }
        }
        let held = s.holders[h].len();
        let pin = &self.p.holders[h].pin;
        let lo = (pin.lower as usize).max(1);
        let hi = held.min(Self::cap(pin.upper));
        if hi >= lo {
            if self.switch_holder(h) {
                out.extend((lo..=hi).map(|k| Feed { from: h, edge: None, k }));
            } else {
                out.push(Feed { from: h, edge: None, k: hi });
            }
        }
        out
    }

    /// Combinations feeding every pin, each from a different holder.
    fn combos(&self, s: &ExecState, pins: &[usize]) -> Vec<Vec<Feed>> {
        let mut acc: Vec<Vec<Feed>> = vec![vec![]];
        for &h in pins {
            let fs = self.feeds(s, h);
            let mut grown = Vec::new();
            for partial in &acc {
                for f in &fs {
                    if partial.iter().all(|g| g.from != f.from) {
                        let mut v = partial.clone();
                        v.push(*f);
                        grown.push(v);
                    }
                }
            }
            acc = grown;
        }
        acc
    }

    fn take(s: &mut ExecState, h: usize, k: usize) {
        s.holders[h].drain(..k);
    }

    fn give(s: &mut ExecState, h: usize, k: usize) {
        s.holders[h].extend(std::iter::repeat(TokenValue::Control).take(k));
    }

    fn has_room(&self, s: &ExecState, h: usize, k: usize) -> bool {
        s.holders[h].len() + k <= Self::cap(self.p.holders[h].pin.upper_bound)
    }

    fn controls(k: usize) -> Vec<TokenValue> {
        vec![TokenValue::Control; k]
    }

    fn moves(&self, s: &ExecState) -> Vec<Move> {
        let p = self.p;
        let mut out = Vec::new();
        if !matches!(s.activities[p.root], ActivityStatus::Executing { .. }) {
            return out;
        }
        let mut push = |visible_step: bool, label: StepLabel, next: ExecState| out.push(Move { visible_step, label, next });
        for (n, node) in p.nodes.iter().enumerate() {
            let name = node.label.clone();
            let st = &s.nodes[n];
            match node.kind.tag() {
                NodeKindTag::InitialNode => {
                    if matches!(st, NodeStatus::Executing(_)) {
                        let mut t = s.clone();
                        for &h in &node.out_holders {
                            t.holders[h] = vec![TokenValue::Control];
                        }
                        t.nodes[n] = NodeStatus::Idle;
                        push(true, StepLabel::Terminate(name), t);
                    }
                }
                NodeKindTag::Action => match st {
                    NodeStatus::Idle => {
                        for combo in self.combos(s, &node.in_holders) {
                            let mut t = s.clone();
                            let mut consumed = Vec::new();
                            for (i, f) in combo.iter().enumerate() {
                                Self::take(&mut t, f.from, f.k);
                                consumed.push((i, Self::controls(f.k)));
                            }
                            t.nodes[n] = NodeStatus::Executing(consumed);
                            push(true, StepLabel::Invoke(name.clone()), t);
                        }
                    }
                    NodeStatus::Executing(_) => {
                        if node.out_holders.iter().all(|&q| self.has_room(s, q, 1)) {
                            let mut t = s.clone();
                            for &q in &node.out_holders {
                                Self::give(&mut t, q, 1);
                            }
                            t.nodes[n] = NodeStatus::Idle;
                            push(true, StepLabel::Terminate(name), t);
                        }
                    }
                    _ => {}
                },
                NodeKindTag::Fork => {
                    let h = node.in_holders[0];
                    match st {
                        // A fork only accepts tokens it can pass on.
                        NodeStatus::Idle if node.out_holders.iter().any(|&q| !p.outgoing[q].is_empty()) => {
                            for f in self.feeds(s, h) {
                                let mut t = s.clone();
                                let label = match f.edge {
                                    Some(_) => {
                                        Self::take(&mut t, f.from, f.k);
                                        Self::give(&mut t, h, f.k);
                                        StepLabel::Transfer(self.owner(f.from), name.clone())
                                    }
                                    None => StepLabel::Tau,
                                };
                                t.nodes[n] = NodeStatus::Executing(vec![(0, Self::controls(f.k))]);
                                push(false, label, t);
                            }
                        }
                        NodeStatus::Executing(f) => {
                            let k: usize = f.iter().map(|(_, v)| v.len()).sum();
                            if node.out_holders.iter().all(|&q| self.has_room(s, q, k)) {
                                let mut t = s.clone();
                                for &q in &node.out_holders {
                                    Self::give(&mut t, q, k);
                                }
                                Self::take(&mut t, h, k);
                                t.nodes[n] = NodeStatus::Idle;
                                push(false, StepLabel::Tau, t);
                            }
                        }
                        _ => {}
                    }
                }
                NodeKindTag::Join => match st {
                    NodeStatus::IdleOrdered(order) if order.is_empty() => {
                        for combo in self.combos(s, &node.in_holders) {
                            let mut t = s.clone();
                            let mut consumed = Vec::new();
                            for (i, f) in combo.iter().enumerate() {
                                Self::take(&mut t, f.from, f.k);
                                Self::give(&mut t, node.in_holders[i], 1);
                                consumed.push((i, Self::controls(1)));
                            }
                            let label = match combo.as_slice() {
                                [Feed { edge: Some(_), from, .. }] => StepLabel::Transfer(self.owner(*from), name.clone()),
                                _ => StepLabel::Tau,
                            };
                            t.nodes[n] = NodeStatus::Executing(consumed);
                            push(false, label, t);
                        }
                    }
                    NodeStatus::Executing(f) => {
                        if node.out_holders.iter().all(|&q| self.has_room(s, q, 1)) {
                            let mut t = s.clone();
                            for &q in &node.out_holders {
                                Self::give(&mut t, q, 1);
                            }
                            for (i, _) in f {
                                Self::take(&mut t, node.in_holders[*i], 1);
                            }
                            t.nodes[n] = NodeStatus::IdleOrdered(vec![]);
                            push(false, StepLabel::Tau, t);
                        }
                    }
                    _ => {}
                },
                NodeKindTag::Merge => {
                    for &h in &node.in_holders {
                        for f in self.feeds(s, h) {
                            for &q in &node.out_holders {
                                if !self.has_room(s, q, f.k) {
                                    continue;
                                }
                                let mut t = s.clone();
                                Self::take(&mut t, f.from, f.k);
                                Self::give(&mut t, q, f.k);
                                let label = match f.edge {
                                    Some(_) => StepLabel::Transfer(self.owner(f.from), name.clone()),
                                    None => StepLabel::Tau,
                                };
                                push(false, label, t);
                            }
                        }
                    }
                }
                NodeKindTag::FlowFinalNode => match st {
                    NodeStatus::Idle => {
                        for (i, &h) in node.in_holders.iter().enumerate() {
                            for f in self.feeds(s, h) {
                                let mut t = s.clone();
                                Self::take(&mut t, f.from, f.k);
                                t.nodes[n] = NodeStatus::Executing(vec![(i, Self::controls(f.k))]);
                                push(true, StepLabel::Invoke(name.clone()), t);
                            }
                        }
                    }
                    NodeStatus::Executing(_) => {
                        let mut t = s.clone();
                        t.nodes[n] = NodeStatus::Idle;
                        push(true, StepLabel::Terminate(name), t);
                    }
                    _ => {}
                },
                NodeKindTag::ActivityFinalNode => {
                    if *st == NodeStatus::Idle {
                        for &h in &node.in_holders {
                            for _ in self.feeds(s, h) {
                                let mut t = p.empty_state(s.clocks.is_some());
                                t.events = s.events.clone();
                                push(true, StepLabel::Invoke(name.clone()), t);
                            }
                        }
                    }
                }
                other => panic!("unsupported node kind {other:?}"),
            }
        }
        out
    }

    /// The switch-node conditions a state must meet to end a transition.
    pub fn visible(&self, s: &ExecState) -> bool {
        self.p.nodes.iter().enumerate().all(|(n, node)| {
            let tag = node.kind.tag();
            if !matches!(tag, NodeKindTag::Fork | NodeKindTag::Join | NodeKindTag::Merge) {
                return true;
            }
            let idle = matches!(s.nodes[n], NodeStatus::Idle | NodeStatus::IdleOrdered(_));
            let inputs_empty = node.in_holders.iter().all(|&h| s.holders[h].is_empty());
            let outputs_ok = if tag == NodeKindTag::Fork {
                node.out_holders.is_empty() || node.out_holders.iter().any(|&h| s.holders[h].is_empty())
            } else {
                node.out_holders.iter().all(|&h| s.holders[h].is_empty())
            };
            idle && inputs_empty && outputs_ok
        })
    }

    /// Closed transitions: every micro-step path from `s` (including the
    /// empty one) followed by one macro-step into a visible state.
    pub fn transitions(&self, s: &ExecState) -> BTreeSet<(StepLabel, ExecState)> {
        let mut seen: BTreeSet<ExecState> = BTreeSet::from([s.clone()]);
        let mut queue = VecDeque::from([s.clone()]);
        let mut out = BTreeSet::new();
        while let Some(cur) = queue.pop_front() {
            for m in self.moves(&cur) {
                if m.visible_step {
                    if self.visible(&m.next) {
                        out.insert((m.label, m.next));
                    }
                } else if seen.insert(m.next.clone()) {
                    queue.push_back(m.next);
                }
            }
        }
        out
    }

    fn step_relation(&self, s: &ExecState, mode: Mode) -> Vec<(StepLabel, ExecState)> {
        match mode {
            Mode::Reduced => self.transitions(s).into_iter().collect(),
            Mode::Complete => {
                let set: BTreeSet<(StepLabel, ExecState)> = self.moves(s).into_iter().map(|m| (m.label, m.next)).collect();
                set.into_iter().collect()
            }
        }
    }

    /// Explore the whole state space into a Kripke structure numbered like
    /// the engine's: initial state first, the rest by fingerprint.
    pub fn explore(&self, mode: Mode, profile: &str) -> Kripke {
        let p = self.p;
        let init = initial_state(p, false);
        let mut index: HashMap<ExecState, usize> = HashMap::from([(init.clone(), 0)]);
        let mut states = vec![init];
        let mut raw = Vec::new();
        let mut i = 0;
        while i < states.len() {
            for (label, t) in self.step_relation(&states[i].clone(), mode) {
                let d = *index.entry(t.clone()).or_insert_with(|| {
                    states.push(t);
                    states.len() - 1
                });
                raw.push((i, label, d));
            }
            i += 1;
        }
        let fps: Vec<_> = states.iter().map(|s| s.fingerprint(p)).collect();
        let mut order: Vec<usize> = (1..states.len()).collect();
        order.sort_by(|&a, &b| fps[a].cmp(&fps[b]));
        order.insert(0, 0);
        let mut renum = vec![0; states.len()];
        for (new, &old) in order.iter().enumerate() {
            renum[old] = new;
        }
        let mut has_out = vec![false; states.len()];
        for (s, _, _) in &raw {
            has_out[*s] = true;
        }
        let infos = order
            .iter()
            .map(|&old| StateInfo {
                state: states[old].clone(),
                fingerprint: fps[old].clone(),
                props: propositions(p, &states[old], Some(has_out[old])),
                expanded: true,
            })
            .collect();
        let mut transitions: Vec<Edge> =
            raw.into_iter().map(|(s, label, d)| Edge { src: renum[s], label, dst: renum[d] }).collect();
        transitions.sort();
        transitions.dedup();
        Kripke {
            profile: profile.to_string(),
            mode,
            states: infos,
            transitions,
            initial: 0,
            truncated: false,
            alphabet: p.nodes.iter().map(|n| n.label.clone()).collect(),
        }
    }
}

/// `(label, fingerprint)` pairs, the comparison key between the engine and
/// the oracle.
pub fn keyed(p: &Program, it: impl IntoIterator<Item = (StepLabel, ExecState)>) -> BTreeSet<(String, String)> {
    it.into_iter().map(|(l, s)| (l.to_string(), s.fingerprint(p).0)).collect()
}

/// Number of non-control nodes (actions) and initial nodes of a program.
pub fn size_class(p: &Program) -> (usize, usize) {
    let actions = p.nodes.iter().filter(|n| n.kind.tag() == NodeKindTag::Action).count();
    let inits = p.nodes.iter().filter(|n| n.kind.tag() == NodeKindTag::InitialNode).count();
    (actions, inits)
}

/// States reachable from `from` by following `labels` exactly.
pub fn follow(k: &Kripke, labels: &[StepLabel]) -> BTreeSet<usize> {
    let mut cur = BTreeSet::from([k.initial]);
    for l in labels {
        cur = cur.iter().flat_map(|&s| k.successors(s).filter(|e| &e.label == l).map(|e| e.dst)).collect();
    }
    cur
}

/// Whether every state has at most one successor per label.
pub fn label_deterministic(k: &Kripke) -> bool {
    let mut seen: BTreeMap<(usize, &StepLabel), usize> = BTreeMap::new();
    k.transitions.iter().all(|e| *seen.entry((e.src, &e.label)).or_insert(e.dst) == e.dst)
}
