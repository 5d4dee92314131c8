//! Well-formedness checks. Each violation code corresponds to one
//! structural invariant of the model types.

use super::*;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub code: &'static str,
    pub element: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn codes(&self) -> Vec<&'static str> {
        self.violations.iter().map(|v| v.code).collect()
    }

    fn push(&mut self, code: &'static str, element: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation { code, element: element.into(), message: message.into() });
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for v in &self.violations {
            writeln!(f, "{}: {} ({})", v.code, v.element, v.message)?;
        }
        Ok(())
    }
}

/// Check every structural invariant; an empty report means well-formed.
pub fn validate_model(m: &Model) -> ValidationReport {
    let mut r = ValidationReport::default();
    if m.activity(&m.root).is_none() {
        r.push("root-missing", &m.root, "root does not name an activity");
    }
    for a in &m.activities {
        validate_activity(m, a, &mut r);
    }
    check_sync_recursion(m, &mut r);
    r
}

fn validate_activity(m: &Model, a: &Activity, r: &mut ValidationReport) {
    let apn_ids: BTreeSet<&str> = a.apns.iter().map(|x| x.pin.id.as_str()).collect();
    for ps in &a.parameter_sets {
        for id in ps {
            if !apn_ids.contains(id.as_str()) {
                r.push("parameter-set-member", format!("{}/{id}", a.name), "parameter set names an unknown APN");
            }
        }
    }
    for apn in &a.apns {
        let el = format!("{}/{}", a.name, apn.pin.id);
        if !a.parameter_sets.iter().any(|ps| ps.contains(&apn.pin.id)) {
            r.push("apn-uncovered", &el, "APN belongs to no parameter set");
        }
        if apn.exception && apn.pin.direction != Direction::Out {
            r.push("exception-apn-output", &el, "exception APN must be an output");
        }
        if apn.exception && apn.streaming {
            r.push("apn-streaming-exception", &el, "APN cannot be both streaming and exception");
        }
        check_pin(a, "", &apn.pin, r);
    }
    for n in &a.nodes {
        validate_node(m, a, n, r);
    }
    let mut else_count: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, e) in a.edges.iter().enumerate() {
        let el = format!("{}/edge[{i}] {}->{}", a.name, e.source, e.target);
        let src = a.holder(&e.source);
        let tgt = a.holder(&e.target);
        match (src, tgt) {
            (Some(s), Some(_)) => {
                if let Some(err) = e.guard.type_errors(&s.value_type) {
                    r.push("guard-type", &el, err.to_string());
                }
            }
            _ => r.push("edge-endpoint", &el, "edge endpoint is not a pin or APN of this activity"),
        }
        if e.guard.is_else() {
            let from_decision = e
                .source
                .node()
                .and_then(|n| a.node(n))
                .is_some_and(|n| n.kind.tag() == NodeKindTag::Decision);
            if from_decision {
                *else_count.entry(e.source.node().unwrap()).or_default() += 1;
            } else {
                r.push("else-outside-decision", &el, "`else` guard on an edge not leaving a decision");
            }
        }
    }
    for (d, count) in else_count {
        if count > 1 {
            r.push("else-multiple", format!("{}/{d}", a.name), "decision has more than one `else` edge");
        }
    }
    for h in &a.handlers {
        if a.node(&h.node).is_none_or(|n| n.in_pins.len() != 1) {
            r.push("handler-node", format!("{}/{}", a.name, h.node), "handler must be a node of this activity with one input pin");
        }
    }
}

fn check_pin(a: &Activity, node: &str, p: &Pin, r: &mut ValidationReport) {
    if (p.lower as usize) > p.upper.as_usize() {
        r.push("pin-lower-upper", format!("{}/{node}{}", a.name, p.id), "lower exceeds upper");
    }
}

fn validate_node(m: &Model, a: &Activity, n: &Node, r: &mut ValidationReport) {
    let el = format!("{}/{}", a.name, n.id);
    for p in n.in_pins.iter().chain(&n.out_pins) {
        check_pin(a, &format!("{}.", n.id), p, r);
    }
    match &n.kind {
        NodeKind::Fork if n.in_pins.len() != 1 => r.push("fork-single-input", &el, "fork must have exactly one input"),
        NodeKind::InitialNode => {
            if !n.in_pins.is_empty() {
                r.push("initial-no-inputs", &el, "initial node cannot have inputs");
            }
            if n.out_pins.iter().any(|p| p.value_type != ValueType::Control) {
                r.push("control-pin-type", &el, "initial node pins carry control tokens only");
            }
        }
        NodeKind::FlowFinalNode | NodeKind::ActivityFinalNode if !n.out_pins.is_empty() => {
            r.push("final-no-outputs", &el, "final nodes cannot have outputs")
        }
        NodeKind::AcceptEventAction { event, result, pool } => {
            if !n.out_pins.iter().any(|p| &p.id == result) {
                r.push("accept-result-pin", &el, "result pin must be an output pin");
            }
            check_event(m, &el, event, pool, r);
        }
        NodeKind::SendSignalAction { event, pool } => check_event(m, &el, event, pool, r),
        NodeKind::Decision { d_flow, d_behavior } => {
            if let Some(df) = d_flow {
                if !n.in_pins.iter().any(|p| &p.id == df) {
                    r.push("decision-dflow-pin", &el, "decision flow must be an input pin");
                }
            }
            if let Some(b) = d_behavior {
                if m.activity(b).is_none() {
                    r.push("call-target-missing", &el, format!("decision behavior `{b}` is not an activity"));
                }
            }
        }
        NodeKind::Action { behavior: Some(b) } if !m.behaviors.contains_key(b) => {
            r.push("behavior-missing", &el, format!("behavior `{b}` is not defined"))
        }
        NodeKind::CallBehaviorAction { behavior, .. } => match m.activity(behavior) {
            None => r.push("call-target-missing", &el, format!("called behavior `{behavior}` is not an activity")),
            Some(callee) => {
                if n.in_pins.len() > callee.input_apns().count() || n.out_pins.len() > callee.output_apns().count() {
                    r.push("call-arity", &el, "call pins exceed the callee's parameters");
                }
            }
        },
        NodeKind::Join { join_spec } => {
            let mut pins = Vec::new();
            join_spec.pins(&mut pins);
            for p in pins {
                if !n.in_pins.iter().any(|q| q.id == p) {
                    r.push("join-spec-pin", &el, format!("join specification names unknown input `{p}`"));
                }
            }
        }
        _ => {}
    }
}

fn check_event(m: &Model, el: &str, event: &str, pool: &str, r: &mut ValidationReport) {
    if !m.event_names.iter().any(|e| e == event) {
        r.push("unknown-event", el, format!("event `{event}` is not declared"));
    }
    if !m.event_pools.iter().any(|p| p == pool) {
        r.push("unknown-pool", el, format!("event pool `{pool}` is not declared"));
    }
}

/// Calls that block their caller: synchronous calls and decision behaviors.
fn sync_callees(a: &Activity) -> impl Iterator<Item = &str> {
    a.nodes.iter().filter_map(|n| match &n.kind {
        NodeKind::CallBehaviorAction { behavior, synchronous: true } => Some(behavior.as_str()),
        NodeKind::Decision { d_behavior: Some(b), .. } => Some(b.as_str()),
        _ => None,
    })
}

fn check_sync_recursion(m: &Model, r: &mut ValidationReport) {
    // Three-colour DFS over the synchronous call graph.
    fn visit<'a>(m: &'a Model, name: &'a str, colour: &mut BTreeMap<&'a str, u8>, cyclic: &mut BTreeSet<&'a str>) {
        colour.insert(name, 1);
        if let Some(a) = m.activity(name) {
            for callee in sync_callees(a) {
                match colour.get(callee).copied().unwrap_or(0) {
                    0 => visit(m, callee, colour, cyclic),
                    1 => {
                        cyclic.insert(callee);
                    }
                    _ => {}
                }
            }
        }
        colour.insert(name, 2);
    }
    let mut colour = BTreeMap::new();
    let mut cyclic = BTreeSet::new();
    for a in &m.activities {
        if !colour.contains_key(a.name.as_str()) {
            visit(m, &a.name, &mut colour, &mut cyclic);
        }
    }
    for c in cyclic {
        r.push("sync-recursion", c, "activity is part of a synchronous call cycle");
    }
}
