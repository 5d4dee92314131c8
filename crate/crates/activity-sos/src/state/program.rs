//! The instance universe of a model: every activity activation reachable
//! through calls, with its nodes, holders and edges flattened into
//! index-addressed tables.
//!
//! Instance paths: the root activity's nodes are named by their model id;
//! an activity started by call node `C` prefixes its elements with `C/`
//! (nesting accumulates). APNs are written `@id`.

use super::{ActivityStatus, ExecState, NodeStatus};
use crate::model::*;
use std::collections::BTreeMap;
use thiserror::Error;

const MAX_CALL_DEPTH: usize = 16;

#[derive(Debug, Error, PartialEq)]
pub enum ProgramError {
    #[error("model is not well-formed:\n{0}")]
    Invalid(ValidationReport),
    #[error("call nesting exceeds {MAX_CALL_DEPTH} levels at `{0}`")]
    TooDeep(String),
}

#[derive(Debug, Clone)]
pub struct ActInst {
    pub path: String,
    pub prefix: String,
    /// Index into `Model::activities`.
    pub activity: usize,
    /// Calling node instance, if not the root.
    pub caller: Option<usize>,
    /// Whether the caller waits for this activation.
    pub synchronous: bool,
    pub nodes: Vec<usize>,
    /// All holders owned by this activation: node pins and APNs.
    pub holders: Vec<usize>,
    /// APN holders in declaration order.
    pub apn_holders: Vec<usize>,
    pub edges: Vec<usize>,
    /// Child activations started by calls of this activation.
    pub children: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct NodeInst {
    pub path: String,
    /// Name used in labels and propositions.
    pub label: String,
    pub act: usize,
    pub kind: NodeKind,
    pub in_holders: Vec<usize>,
    pub out_holders: Vec<usize>,
    /// Activation invoked by this node (call or decision behavior).
    pub callee: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct HolderInst {
    pub path: String,
    pub act: usize,
    pub node: Option<usize>,
    /// Index of the APN within its activity, for parameter nodes.
    pub apn: Option<usize>,
    pub pin: Pin,
    pub streaming: bool,
    pub exception: bool,
    /// Owned by a switch node.
    pub on_switch: bool,
}

#[derive(Debug, Clone)]
pub struct EdgeInst {
    pub act: usize,
    pub source: usize,
    pub target: usize,
    pub guard: Guard,
    pub weight: Weight,
}

#[derive(Debug, Clone)]
pub struct Program {
    pub model: Model,
    pub root: usize,
    pub activities: Vec<ActInst>,
    pub nodes: Vec<NodeInst>,
    pub holders: Vec<HolderInst>,
    pub edges: Vec<EdgeInst>,
    pub incoming: Vec<Vec<usize>>,
    pub outgoing: Vec<Vec<usize>>,
    pub pools: Vec<String>,
}

impl Program {
    /// Validate the model and expand its instance universe.
    pub fn new(model: &Model) -> Result<Program, ProgramError> {
        let report = validate_model(model);
        if !report.is_clean() {
            return Err(ProgramError::Invalid(report));
        }
        let mut p = Program {
            model: model.clone(),
            root: 0,
            activities: Vec::new(),
            nodes: Vec::new(),
            holders: Vec::new(),
            edges: Vec::new(),
            incoming: Vec::new(),
            outgoing: Vec::new(),
            pools: model.event_pools.clone(),
        };
        let root = model.activities.iter().position(|a| a.name == model.root).expect("validated root");
        p.root = p.instantiate(root, String::new(), None, true, 0)?;
        p.incoming = vec![Vec::new(); p.holders.len()];
        p.outgoing = vec![Vec::new(); p.holders.len()];
        for (i, e) in p.edges.iter().enumerate() {
            p.incoming[e.target].push(i);
            p.outgoing[e.source].push(i);
        }
        Ok(p)
    }

    fn instantiate(
        &mut self,
        activity: usize,
        prefix: String,
        caller: Option<usize>,
        synchronous: bool,
        depth: usize,
    ) -> Result<usize, ProgramError> {
        if depth > MAX_CALL_DEPTH {
            return Err(ProgramError::TooDeep(prefix));
        }
        let a = self.model.activities[activity].clone();
        let id = self.activities.len();
        let path = if prefix.is_empty() { a.name.clone() } else { format!("{prefix}{}", a.name) };
        self.activities.push(ActInst {
            path,
            prefix: prefix.clone(),
            activity,
            caller,
            synchronous,
            nodes: Vec::new(),
            holders: Vec::new(),
            apn_holders: Vec::new(),
            edges: Vec::new(),
            children: Vec::new(),
        });
        let mut index: BTreeMap<HolderRef, usize> = BTreeMap::new();
        for (ai, apn) in a.apns.iter().enumerate() {
            let h = self.holders.len();
            self.holders.push(HolderInst {
                path: format!("{prefix}@{}", apn.pin.id),
                act: id,
                node: None,
                apn: Some(ai),
                pin: apn.pin.clone(),
                streaming: apn.streaming,
                exception: apn.exception,
                on_switch: false,
            });
            index.insert(HolderRef::Apn(apn.pin.id.clone()), h);
            self.activities[id].holders.push(h);
            self.activities[id].apn_holders.push(h);
        }
        for n in &a.nodes {
            let nid = self.nodes.len();
            let label = format!("{prefix}{}", n.id);
            let mut ins = Vec::new();
            let mut outs = Vec::new();
            for (list, pins) in [(&mut ins, &n.in_pins), (&mut outs, &n.out_pins)] {
                for pin in pins {
                    let h = self.holders.len();
                    self.holders.push(HolderInst {
                        path: format!("{label}.{}", pin.id),
                        act: id,
                        node: Some(nid),
                        apn: None,
                        pin: pin.clone(),
                        streaming: false,
                        exception: false,
                        on_switch: n.kind.tag().is_switch(),
                    });
                    index.insert(HolderRef::Pin { node: n.id.clone(), pin: pin.id.clone() }, h);
                    self.activities[id].holders.push(h);
                    list.push(h);
                }
            }
            self.nodes.push(NodeInst {
                path: label.clone(),
                label,
                act: id,
                kind: n.kind.clone(),
                in_holders: ins,
                out_holders: outs,
                callee: None,
            });
            self.activities[id].nodes.push(nid);
        }
        for e in &a.edges {
            let eid = self.edges.len();
            self.edges.push(EdgeInst {
                act: id,
                source: index[&e.source],
                target: index[&e.target],
                guard: e.guard.clone(),
                weight: e.weight,
            });
            self.activities[id].edges.push(eid);
        }
        let node_ids = self.activities[id].nodes.clone();
        for nid in node_ids {
            let (callee, sync) = match &self.nodes[nid].kind {
                NodeKind::CallBehaviorAction { behavior, synchronous } => (Some(behavior.clone()), *synchronous),
                NodeKind::Decision { d_behavior: Some(b), .. } => (Some(b.clone()), true),
                _ => (None, true),
            };
            if let Some(b) = callee {
                let target = self.model.activities.iter().position(|x| x.name == b).expect("validated callee");
                let child_prefix = format!("{}/", self.nodes[nid].label);
                let child = self.instantiate(target, child_prefix, Some(nid), sync, depth + 1)?;
                self.nodes[nid].callee = Some(child);
                self.activities[id].children.push(child);
            }
        }
        Ok(id)
    }

    pub fn activity_of(&self, inst: usize) -> &Activity {
        &self.model.activities[self.activities[inst].activity]
    }

    /// Node instance whose label is `label`.
    pub fn node_by_label(&self, label: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.label == label)
    }

    pub fn holder_by_path(&self, path: &str) -> Option<usize> {
        self.holders.iter().position(|h| h.path == path)
    }

    pub fn pool_index(&self, pool: &str) -> usize {
        self.pools.iter().position(|p| p == pool).expect("validated pool")
    }

    /// Display name of a holder's owner, used in transfer labels.
    pub fn holder_owner(&self, h: usize) -> String {
        let hi = &self.holders[h];
        match hi.node {
            Some(n) => self.nodes[n].label.clone(),
            None => format!("{}@{}", self.activities[hi.act].prefix, hi.pin.id),
        }
    }

    /// Activation plus every activation it transitively waits on
    /// (synchronous descendants), in discovery order.
    pub fn sync_closure(&self, act: usize) -> Vec<usize> {
        let mut out = vec![act];
        let mut i = 0;
        while i < out.len() {
            for &c in &self.activities[out[i]].children {
                if self.activities[c].synchronous {
                    out.push(c);
                }
            }
            i += 1;
        }
        out
    }

    pub fn empty_state(&self, with_clocks: bool) -> ExecState {
        ExecState {
            nodes: self
                .nodes
                .iter()
                .map(|n| if matches!(n.kind, NodeKind::Join { .. }) { NodeStatus::IdleOrdered(vec![]) } else { NodeStatus::Idle })
                .collect(),
            activities: vec![ActivityStatus::Idle; self.activities.len()],
            holders: vec![Vec::new(); self.holders.len()],
            events: vec![Vec::new(); self.pools.len()],
            clocks: with_clocks.then(|| vec![None; self.nodes.len()]),
        }
    }

    /// Output APNs (activity-local indices) that must be set before the
    /// activation may finish: non-streaming, non-exception outputs of the
    /// parameter set.
    pub fn pending_outputs(&self, inst: usize, ps: usize) -> Vec<usize> {
        let act = self.activity_of(inst);
        let Some(set) = act.parameter_sets.get(ps) else { return Vec::new() };
        let mut v: Vec<usize> = act
            .apns
            .iter()
            .enumerate()
            .filter(|(_, a)| a.pin.direction == Direction::Out && !a.exception && !a.streaming && set.contains(&a.pin.id))
            .map(|(i, _)| i)
            .collect();
        v.sort();
        v
    }

    /// Mark an activation executing with parameter set `ps` and start its
    /// initial nodes and parameterless accept event actions.
    pub fn start_activity(&self, s: &mut ExecState, inst: usize, ps: usize) {
        s.activities[inst] = ActivityStatus::Executing { ps, pending: self.pending_outputs(inst, ps) };
        for &n in &self.activities[inst].nodes {
            let ni = &self.nodes[n];
            let starts = match ni.kind {
                NodeKind::InitialNode => true,
                NodeKind::AcceptEventAction { .. } => ni.in_holders.is_empty(),
                _ => false,
            };
            if starts {
                s.nodes[n] = NodeStatus::Executing(vec![]);
            }
        }
    }

    /// Whether a node belongs to the switch-node family.
    pub fn is_switch(&self, n: usize) -> bool {
        self.nodes[n].kind.tag().is_switch()
    }

    /// Whether the node occupies the processor while running: switch
    /// nodes, call nodes and accept event actions without inputs only wait.
    pub fn uses_core(&self, n: usize) -> bool {
        let ni = &self.nodes[n];
        match ni.kind.tag() {
            t if t.is_switch() => false,
            NodeKindTag::CallBehaviorAction => false,
            NodeKindTag::AcceptEventAction => !ni.in_holders.is_empty(),
            _ => true,
        }
    }

    /// Whether the holder belongs to a switch node (edges into it use the
    /// nondeterministic sequence-size branch of `transfer`).
    pub fn holder_is_switch(&self, h: usize) -> bool {
        self.holders[h].on_switch
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_calls_get_prefixed_paths() {
        let m = parse_model(
            r#"{"activities":[
                {"name":"main","nodes":[{"id":"c","kind":"call","behavior":"sub"}]},
                {"name":"sub","apns":[{"id":"x","direction":"in"}],"nodes":[{"id":"A","kind":"action","in":[{"id":"i"}]}],
                 "edges":[{"from":"x","to":"A.i"}]}]}"#,
        )
        .unwrap();
        let p = Program::new(&m).unwrap();
        assert_eq!(p.activities.len(), 2);
        assert!(p.node_by_label("c/A").is_some());
        assert!(p.holder_by_path("c/@x").is_some());
        assert_eq!(p.activities[1].caller, p.node_by_label("c"));
        assert_eq!(p.sync_closure(p.root), vec![0, 1]);
    }

    #[test]
    fn invalid_model_is_rejected() {
        let m = parse_model(r#"{"activities":[{"name":"a","nodes":[{"id":"F","kind":"fork"}]}]}"#).unwrap();
        assert!(matches!(Program::new(&m), Err(ProgramError::Invalid(_))));
    }
}
