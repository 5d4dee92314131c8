//! The JSON model document format (see `docs/model-format.md`).
//!
//! Parsing resolves edge endpoints and synthesizes pins for control
//! flows, but performs no semantic validation.

use super::*;
use crate::state::TokenValue;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {column}: {msg}")]
    Syntax { line: usize, column: usize, msg: String },
    #[error("duplicate identifier `{id}` in {scope}")]
    Duplicate { id: String, scope: String },
    #[error("unknown node kind `{kind}` for node `{node}`")]
    UnknownKind { node: String, kind: String },
    #[error("invalid value at {path}: {msg}")]
    Invalid { path: String, msg: String },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    #[serde(default)]
    events: Vec<String>,
    #[serde(default)]
    datatypes: Vec<String>,
    #[serde(default)]
    pools: Vec<String>,
    #[serde(default)]
    root: Option<String>,
    activities: Vec<RawActivity>,
    #[serde(default)]
    behaviors: Map<String, Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawActivity {
    name: String,
    #[serde(default)]
    nodes: Vec<RawNode>,
    #[serde(default)]
    edges: Vec<RawEdge>,
    #[serde(default)]
    apns: Vec<RawApn>,
    #[serde(default)]
    parameter_sets: Option<Vec<Vec<String>>>,
    #[serde(default)]
    handlers: Vec<RawHandler>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    id: String,
    kind: String,
    #[serde(default, rename = "in")]
    in_pins: Vec<RawPin>,
    #[serde(default, rename = "out")]
    out_pins: Vec<RawPin>,
    behavior: Option<String>,
    synchronous: Option<bool>,
    join_spec: Option<String>,
    d_flow: Option<String>,
    d_behavior: Option<String>,
    event: Option<String>,
    result: Option<String>,
    pool: Option<String>,
}

#[derive(Deserialize, Serialize, Default)]
#[serde(deny_unknown_fields)]
struct RawPin {
    id: String,
    #[serde(rename = "type")]
    value_type: Option<String>,
    upper_bound: Option<Value>,
    upper: Option<Value>,
    lower: Option<u32>,
    ordering: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawApn {
    id: String,
    direction: String,
    #[serde(rename = "type")]
    value_type: Option<String>,
    upper_bound: Option<Value>,
    upper: Option<Value>,
    lower: Option<u32>,
    ordering: Option<String>,
    #[serde(default)]
    streaming: bool,
    #[serde(default)]
    exception: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEdge {
    from: String,
    to: String,
    guard: Option<String>,
    weight: Option<Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHandler {
    node: String,
    exception_type: String,
}

fn invalid(path: impl Into<String>, msg: impl Into<String>) -> ParseError {
    ParseError::Invalid { path: path.into(), msg: msg.into() }
}

fn parse_bound(v: &Option<Value>, default: Bound, path: &str) -> Result<Bound, ParseError> {
    match v {
        None => Ok(default),
        Some(Value::String(s)) if s == "*" || s == "unbounded" => Ok(Bound::Unbounded),
        Some(Value::Number(n)) => n
            .as_u64()
            .filter(|n| *n > 0 && *n <= u32::MAX as u64)
            .map(|n| Bound::Finite(n as u32))
            .ok_or_else(|| invalid(path, "bound must be a positive integer or \"*\"")),
        Some(_) => Err(invalid(path, "bound must be a positive integer or \"*\"")),
    }
}

fn parse_ordering(v: &Option<String>, path: &str) -> Result<Ordering, ParseError> {
    match v.as_deref() {
        None | Some("fifo") | Some("FIFO") => Ok(Ordering::Fifo),
        Some("lifo") | Some("LIFO") => Ok(Ordering::Lifo),
        Some("unordered") => Ok(Ordering::Unordered),
        Some(o) => Err(invalid(path, format!("unknown ordering `{o}`"))),
    }
}

#[allow(clippy::too_many_arguments)]
fn build_pin(
    id: &str,
    dir: Direction,
    ty: &Option<String>,
    ub: &Option<Value>,
    upper: &Option<Value>,
    lower: Option<u32>,
    ordering: &Option<String>,
    path: &str,
) -> Result<Pin, ParseError> {
    Ok(Pin {
        id: id.to_string(),
        direction: dir,
        value_type: ty.as_deref().map(ValueType::parse).unwrap_or(ValueType::Any),
        upper_bound: parse_bound(ub, Bound::Unbounded, &format!("{path}.upper_bound"))?,
        upper: parse_bound(upper, Bound::Finite(1), &format!("{path}.upper"))?,
        lower: lower.unwrap_or(1),
        ordering: parse_ordering(ordering, path)?,
    })
}

fn parse_literal(v: &Value, path: &str) -> Result<TokenValue, ParseError> {
    match v {
        Value::Null => Ok(TokenValue::Null),
        Value::Bool(b) => Ok(TokenValue::Bool(*b)),
        Value::Number(n) => n.as_i64().map(TokenValue::Int).ok_or_else(|| invalid(path, "integer expected")),
        Value::String(s) => Ok(TokenValue::Str(s.clone())),
        _ => Err(invalid(path, "token literal must be null, bool, integer or string")),
    }
}

fn literal_json(v: &TokenValue) -> Value {
    match v {
        TokenValue::Null => Value::Null,
        TokenValue::Bool(b) => json!(b),
        TokenValue::Int(i) => json!(i),
        TokenValue::Str(s) => json!(s),
        other => json!(other.to_string()),
    }
}

fn parse_behavior(name: &str, v: &Value) -> Result<Behavior, ParseError> {
    let path = format!("behaviors.{name}");
    match v {
        Value::String(s) => {
            Behavior::parse_builtin(s).ok_or_else(|| invalid(&path, format!("unknown builtin `{s}`")))
        }
        Value::Object(o) => {
            let rows = o.get("rows").and_then(Value::as_array).ok_or_else(|| invalid(&path, "expected `rows`"))?;
            let mut out = Vec::new();
            for (i, row) in rows.iter().enumerate() {
                let rp = format!("{path}.rows[{i}]");
                let side = |key: &str| -> Result<BTreeMap<String, Vec<TokenValue>>, ParseError> {
                    let mut m = BTreeMap::new();
                    if let Some(obj) = row.get(key) {
                        let obj = obj.as_object().ok_or_else(|| invalid(&rp, "row side must be an object"))?;
                        for (pin, seq) in obj {
                            let seq = seq.as_array().ok_or_else(|| invalid(&rp, "token sequence expected"))?;
                            let toks = seq.iter().map(|t| parse_literal(t, &rp)).collect::<Result<_, _>>()?;
                            m.insert(pin.clone(), toks);
                        }
                    }
                    Ok(m)
                };
                out.push(BehaviorRow { inputs: side("in")?, outputs: side("out")? });
            }
            Ok(Behavior::Rows(out))
        }
        _ => Err(invalid(&path, "behavior must be a builtin name or a rows table")),
    }
}

fn check_unique<'a>(ids: impl Iterator<Item = &'a str>, scope: &str) -> Result<(), ParseError> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(ParseError::Duplicate { id: id.to_string(), scope: scope.to_string() });
        }
    }
    Ok(())
}

fn fresh_pin_id(node: &Node, prefix: &str) -> String {
    (0..)
        .map(|k| format!("{prefix}{k}"))
        .find(|id| node.pin(id).is_none())
        .expect("unbounded id space")
}

fn synth_pin(node: &mut Node, dir: Direction) -> String {
    let (prefix, switch) = (if dir == Direction::In { "_i" } else { "_o" }, node.kind.tag().is_switch());
    let id = fresh_pin_id(node, prefix);
    let mut pin = if switch {
        let mut p = Pin::new(&id, dir, ValueType::Any);
        p.upper = Bound::Unbounded;
        p
    } else {
        Pin::new(&id, dir, ValueType::Control)
    };
    pin.lower = 1;
    match dir {
        Direction::In => node.in_pins.push(pin),
        Direction::Out => node.out_pins.push(pin),
    }
    id
}

fn build_node(raw: &RawNode, path: &str) -> Result<Node, ParseError> {
    let tag = NodeKindTag::from_keyword(&raw.kind)
        .ok_or_else(|| ParseError::UnknownKind { node: raw.id.clone(), kind: raw.kind.clone() })?;
    let need = |field: &Option<String>, name: &str| {
        field.clone().ok_or_else(|| invalid(path, format!("`{}` node requires `{name}`", raw.kind)))
    };
    let pool = raw.pool.clone().unwrap_or_else(|| DEFAULT_POOL.to_string());
    let kind = match tag {
        NodeKindTag::Action => NodeKind::Action { behavior: raw.behavior.clone() },
        NodeKindTag::CallBehaviorAction => NodeKind::CallBehaviorAction {
            behavior: need(&raw.behavior, "behavior")?,
            synchronous: raw.synchronous.unwrap_or(true),
        },
        NodeKindTag::Fork => NodeKind::Fork,
        NodeKindTag::Join => NodeKind::Join {
            join_spec: match &raw.join_spec {
                None => JoinSpec::All,
                Some(s) => parse_join_spec(s).map_err(|m| invalid(format!("{path}.join_spec"), m))?,
            },
        },
        NodeKindTag::Merge => NodeKind::Merge,
        NodeKindTag::Decision => {
            NodeKind::Decision { d_flow: raw.d_flow.clone(), d_behavior: raw.d_behavior.clone() }
        }
        NodeKindTag::InitialNode => NodeKind::InitialNode,
        NodeKindTag::FlowFinalNode => NodeKind::FlowFinalNode,
        NodeKindTag::ActivityFinalNode => NodeKind::ActivityFinalNode,
        NodeKindTag::AcceptEventAction => {
            NodeKind::AcceptEventAction { event: need(&raw.event, "event")?, result: need(&raw.result, "result")?, pool }
        }
        NodeKindTag::SendSignalAction => NodeKind::SendSignalAction { event: need(&raw.event, "event")?, pool },
    };
    let pins = |list: &[RawPin], dir: Direction| -> Result<Vec<Pin>, ParseError> {
        list.iter()
            .map(|p| {
                build_pin(&p.id, dir, &p.value_type, &p.upper_bound, &p.upper, p.lower, &p.ordering, &format!("{path}.{}", p.id))
            })
            .collect()
    };
    let node = Node { id: raw.id.clone(), kind, in_pins: pins(&raw.in_pins, Direction::In)?, out_pins: pins(&raw.out_pins, Direction::Out)? };
    check_unique(node.in_pins.iter().chain(&node.out_pins).map(|p| p.id.as_str()), &format!("pins of node `{}`", node.id))?;
    Ok(node)
}

/// Parse a join specification: pin names combined with `&&`, `||`, `!`
/// and parentheses; the keyword `all` means every input.
pub(crate) fn parse_join_spec(s: &str) -> Result<JoinSpec, String> {
    let toks: Vec<String> = {
        let mut out = Vec::new();
        let chars: Vec<char> = s.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            if c.is_whitespace() {
                i += 1;
            } else if c == '&' || c == '|' {
                if chars.get(i + 1) != Some(&c) {
                    return Err(format!("expected `{c}{c}`"));
                }
                out.push(format!("{c}{c}"));
                i += 2;
            } else if c == '!' || c == '(' || c == ')' {
                out.push(c.to_string());
                i += 1;
            } else {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                if start == i {
                    return Err(format!("unexpected character `{c}`"));
                }
                out.push(chars[start..i].iter().collect());
            }
        }
        out
    };
    fn or(t: &[String], i: &mut usize) -> Result<JoinSpec, String> {
        let mut l = and(t, i)?;
        while t.get(*i).map(String::as_str) == Some("||") {
            *i += 1;
            l = JoinSpec::Or(Box::new(l), Box::new(and(t, i)?));
        }
        Ok(l)
    }
    fn and(t: &[String], i: &mut usize) -> Result<JoinSpec, String> {
        let mut l = un(t, i)?;
        while t.get(*i).map(String::as_str) == Some("&&") {
            *i += 1;
            l = JoinSpec::And(Box::new(l), Box::new(un(t, i)?));
        }
        Ok(l)
    }
    fn un(t: &[String], i: &mut usize) -> Result<JoinSpec, String> {
        match t.get(*i).map(String::as_str) {
            Some("!") => {
                *i += 1;
                Ok(JoinSpec::Not(Box::new(un(t, i)?)))
            }
            Some("(") => {
                *i += 1;
                let e = or(t, i)?;
                if t.get(*i).map(String::as_str) != Some(")") {
                    return Err("expected `)`".into());
                }
                *i += 1;
                Ok(e)
            }
            Some("all") => {
                *i += 1;
                Ok(JoinSpec::All)
            }
            Some(w) if !["&&", "||", ")"].contains(&w) => {
                *i += 1;
                Ok(JoinSpec::Pin(w.to_string()))
            }
            _ => Err("expected pin name".into()),
        }
    }
    let mut i = 0;
    let e = or(&toks, &mut i)?;
    if i != toks.len() {
        return Err("trailing input".into());
    }
    Ok(e)
}

fn join_spec_text(j: &JoinSpec) -> String {
    match j {
        JoinSpec::All => "all".into(),
        JoinSpec::Pin(p) => p.clone(),
        JoinSpec::And(a, b) => format!("({}) && ({})", join_spec_text(a), join_spec_text(b)),
        JoinSpec::Or(a, b) => format!("({}) || ({})", join_spec_text(a), join_spec_text(b)),
        JoinSpec::Not(a) => format!("!({})", join_spec_text(a)),
    }
}

fn build_activity(raw: &RawActivity, ai: usize) -> Result<Activity, ParseError> {
    let apath = format!("activities[{ai}]");
    let mut nodes = raw
        .nodes
        .iter()
        .enumerate()
        .map(|(ni, n)| build_node(n, &format!("{apath}.nodes[{ni}]")))
        .collect::<Result<Vec<_>, _>>()?;
    let apns = raw
        .apns
        .iter()
        .map(|a| {
            let dir = match a.direction.as_str() {
                "in" => Direction::In,
                "out" => Direction::Out,
                d => return Err(invalid(format!("{apath}.apns.{}", a.id), format!("unknown direction `{d}`"))),
            };
            let pin = build_pin(&a.id, dir, &a.value_type, &a.upper_bound, &a.upper, a.lower, &a.ordering, &format!("{apath}.apns.{}", a.id))?;
            Ok(Apn { pin, streaming: a.streaming, exception: a.exception })
        })
        .collect::<Result<Vec<_>, _>>()?;
    check_unique(nodes.iter().map(|n| n.id.as_str()).chain(apns.iter().map(|a| a.pin.id.as_str())), &format!("activity `{}`", raw.name))?;

    let mut edges = Vec::new();
    for (ei, e) in raw.edges.iter().enumerate() {
        let epath = format!("{apath}.edges[{ei}]");
        let mut resolve = |s: &str, dir: Direction| -> HolderRef {
            if let Some((node, pin)) = s.split_once('.') {
                return HolderRef::Pin { node: node.to_string(), pin: pin.to_string() };
            }
            if apns.iter().any(|a| a.pin.id == s) {
                return HolderRef::Apn(s.to_string());
            }
            match nodes.iter_mut().find(|n| n.id == s) {
                Some(n) => HolderRef::Pin { node: s.to_string(), pin: synth_pin(n, dir) },
                None => HolderRef::Apn(s.to_string()),
            }
        };
        let source = resolve(&e.from, Direction::Out);
        let target = resolve(&e.to, Direction::In);
        let guard = match &e.guard {
            None => Guard::True,
            Some(g) => Guard::parse(g).map_err(|err| invalid(format!("{epath}.guard"), err.to_string()))?,
        };
        let weight = match &e.weight {
            None => Weight::Count(1),
            Some(Value::String(s)) if s == "*" => Weight::All,
            Some(Value::Number(n)) => n
                .as_u64()
                .filter(|n| *n > 0 && *n <= u32::MAX as u64)
                .map(|n| Weight::Count(n as u32))
                .ok_or_else(|| invalid(format!("{epath}.weight"), "weight must be a positive integer or \"*\""))?,
            Some(_) => return Err(invalid(format!("{epath}.weight"), "weight must be a positive integer or \"*\"")),
        };
        edges.push(Edge { source, target, guard, weight });
    }
    for n in nodes.iter_mut() {
        if n.kind.tag() == NodeKindTag::InitialNode && n.out_pins.is_empty() {
            synth_pin(n, Direction::Out);
        }
    }

    let mut parameter_sets = raw
        .parameter_sets
        .clone()
        .unwrap_or_else(|| if apns.is_empty() { vec![] } else { vec![apns.iter().map(|a| a.pin.id.clone()).collect()] });
    for a in &apns {
        if !parameter_sets.iter().any(|ps| ps.contains(&a.pin.id)) {
            parameter_sets.push(vec![a.pin.id.clone()]);
        }
    }
    let handlers = raw
        .handlers
        .iter()
        .map(|h| HandlerBinding { node: h.node.clone(), exception_type: ValueType::parse(&h.exception_type) })
        .collect();
    Ok(Activity { name: raw.name.clone(), nodes, edges, apns, parameter_sets, handlers })
}

/// Parse a model document.
pub fn parse_model(text: &str) -> Result<Model, ParseError> {
    let raw: RawModel = serde_json::from_str(text)
        .map_err(|e| ParseError::Syntax { line: e.line(), column: e.column(), msg: e.to_string() })?;
    check_unique(raw.activities.iter().map(|a| a.name.as_str()), "activities")?;
    check_unique(raw.events.iter().map(String::as_str), "events")?;
    let activities =
        raw.activities.iter().enumerate().map(|(i, a)| build_activity(a, i)).collect::<Result<Vec<_>, _>>()?;
    let behaviors =
        raw.behaviors.iter().map(|(k, v)| Ok((k.clone(), parse_behavior(k, v)?))).collect::<Result<_, ParseError>>()?;
    let root = raw
        .root
        .or_else(|| activities.first().map(|a| a.name.clone()))
        .ok_or_else(|| invalid("activities", "at least one activity is required"))?;
    let event_pools = if raw.pools.is_empty() { vec![DEFAULT_POOL.to_string()] } else { raw.pools };
    Ok(Model { activities, event_names: raw.events, data_types: raw.datatypes, event_pools, root, behaviors })
}

fn bound_json(b: Bound) -> Value {
    match b {
        Bound::Finite(n) => json!(n),
        Bound::Unbounded => json!("*"),
    }
}

fn ordering_text(o: Ordering) -> &'static str {
    match o {
        Ordering::Fifo => "fifo",
        Ordering::Lifo => "lifo",
        Ordering::Unordered => "unordered",
    }
}

fn pin_json(p: &Pin) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("id".into(), json!(p.id));
    m.insert("type".into(), json!(p.value_type.name()));
    m.insert("upper_bound".into(), bound_json(p.upper_bound));
    m.insert("upper".into(), bound_json(p.upper));
    m.insert("lower".into(), json!(p.lower));
    m.insert("ordering".into(), json!(ordering_text(p.ordering)));
    m
}

fn holder_text(h: &HolderRef) -> String {
    h.to_string()
}

/// Serialize a model back into the document format, with every pin
/// explicit so that parsing the result yields an equal model.
pub fn emit_model(m: &Model) -> String {
    let activities: Vec<Value> = m
        .activities
        .iter()
        .map(|a| {
            let nodes: Vec<Value> = a
                .nodes
                .iter()
                .map(|n| {
                    let mut o = Map::new();
                    o.insert("id".into(), json!(n.id));
                    o.insert("kind".into(), json!(n.kind.tag().keyword()));
                    o.insert("in".into(), Value::Array(n.in_pins.iter().map(|p| Value::Object(pin_json(p))).collect()));
                    o.insert("out".into(), Value::Array(n.out_pins.iter().map(|p| Value::Object(pin_json(p))).collect()));
                    match &n.kind {
                        NodeKind::Action { behavior: Some(b) } => {
                            o.insert("behavior".into(), json!(b));
                        }
                        NodeKind::CallBehaviorAction { behavior, synchronous } => {
                            o.insert("behavior".into(), json!(behavior));
                            o.insert("synchronous".into(), json!(synchronous));
                        }
                        NodeKind::Join { join_spec } if *join_spec != JoinSpec::All => {
                            o.insert("join_spec".into(), json!(join_spec_text(join_spec)));
                        }
                        NodeKind::Decision { d_flow, d_behavior } => {
                            if let Some(d) = d_flow {
                                o.insert("d_flow".into(), json!(d));
                            }
                            if let Some(d) = d_behavior {
                                o.insert("d_behavior".into(), json!(d));
                            }
                        }
                        NodeKind::AcceptEventAction { event, result, pool } => {
                            o.insert("event".into(), json!(event));
                            o.insert("result".into(), json!(result));
                            o.insert("pool".into(), json!(pool));
                        }
                        NodeKind::SendSignalAction { event, pool } => {
                            o.insert("event".into(), json!(event));
                            o.insert("pool".into(), json!(pool));
                        }
                        _ => {}
                    }
                    Value::Object(o)
                })
                .collect();
            let edges: Vec<Value> = a
                .edges
                .iter()
                .map(|e| {
                    json!({
                        "from": holder_text(&e.source),
                        "to": holder_text(&e.target),
                        "guard": e.guard.to_string(),
                        "weight": match e.weight { Weight::Count(n) => json!(n), Weight::All => json!("*") },
                    })
                })
                .collect();
            let apns: Vec<Value> = a
                .apns
                .iter()
                .map(|ap| {
                    let mut o = pin_json(&ap.pin);
                    o.insert("direction".into(), json!(if ap.pin.direction == Direction::In { "in" } else { "out" }));
                    o.insert("streaming".into(), json!(ap.streaming));
                    o.insert("exception".into(), json!(ap.exception));
                    Value::Object(o)
                })
                .collect();
            let handlers: Vec<Value> = a
                .handlers
                .iter()
                .map(|h| json!({"node": h.node, "exception_type": h.exception_type.name()}))
                .collect();
            json!({
                "name": a.name,
                "nodes": nodes,
                "edges": edges,
                "apns": apns,
                "parameter_sets": a.parameter_sets,
                "handlers": handlers,
            })
        })
        .collect();
    let behaviors: Map<String, Value> = m
        .behaviors
        .iter()
        .map(|(k, b)| {
            let v = match b.builtin_name() {
                Some(name) => json!(name),
                None => {
                    let Behavior::Rows(rows) = b else { unreachable!() };
                    let side = |s: &BTreeMap<String, Vec<TokenValue>>| -> Value {
                        Value::Object(s.iter().map(|(p, t)| (p.clone(), Value::Array(t.iter().map(literal_json).collect()))).collect())
                    };
                    json!({"rows": rows.iter().map(|r| json!({"in": side(&r.inputs), "out": side(&r.outputs)})).collect::<Vec<_>>()})
                }
            };
            (k.clone(), v)
        })
        .collect();
    let doc = json!({
        "events": m.event_names,
        "datatypes": m.data_types,
        "pools": m.event_pools,
        "root": m.root,
        "activities": activities,
        "behaviors": behaviors,
    });
    serde_json::to_string_pretty(&doc).expect("model serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document() {
        let m = parse_model(r#"{"activities":[{"name":"a","nodes":[{"id":"i","kind":"initial"}]}]}"#).unwrap();
        assert_eq!(m.activities[0].nodes.len(), 1);
        assert_eq!(m.root, "a");
        assert_eq!(m.event_pools, vec![DEFAULT_POOL.to_string()]);
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_model("{\n  \"activities\": [,]\n}").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn duplicate_node_rejected() {
        let err = parse_model(
            r#"{"activities":[{"name":"a","nodes":[{"id":"x","kind":"initial"},{"id":"x","kind":"fork"}]}]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, ParseError::Duplicate { .. }));
    }

    #[test]
    fn unknown_kind_rejected() {
        let err = parse_model(r#"{"activities":[{"name":"a","nodes":[{"id":"x","kind":"teleport"}]}]}"#).unwrap_err();
        assert_eq!(err, ParseError::UnknownKind { node: "x".into(), kind: "teleport".into() });
    }

    #[test]
    fn control_edges_synthesize_pins() {
        let m = parse_model(
            r#"{"activities":[{"name":"a","nodes":[{"id":"i","kind":"initial"},{"id":"A","kind":"action"},{"id":"F","kind":"fork"}],
                "edges":[{"from":"i","to":"A"},{"from":"A","to":"F"}]}]}"#,
        )
        .unwrap();
        let a = &m.activities[0];
        let act = a.node("A").unwrap();
        assert_eq!(act.in_pins[0].value_type, ValueType::Control);
        assert_eq!((act.in_pins[0].lower, act.in_pins[0].upper), (1, Bound::Finite(1)));
        let fork = a.node("F").unwrap();
        assert_eq!(fork.in_pins[0].value_type, ValueType::Any);
        assert_eq!(fork.in_pins[0].upper, Bound::Unbounded);
        assert_eq!(a.node("i").unwrap().out_pins.len(), 1);
    }

    #[test]
    fn join_spec_grammar() {
        assert_eq!(parse_join_spec("a && (b || !c)").unwrap().to_owned(), {
            JoinSpec::And(
                Box::new(JoinSpec::Pin("a".into())),
                Box::new(JoinSpec::Or(
                    Box::new(JoinSpec::Pin("b".into())),
                    Box::new(JoinSpec::Not(Box::new(JoinSpec::Pin("c".into())))),
                )),
            )
        });
        assert!(parse_join_spec("a &").is_err());
    }

    #[test]
    fn missing_parameter_sets_are_synthesized() {
        let m = parse_model(
            r#"{"activities":[{"name":"a","apns":[{"id":"x","direction":"in"},{"id":"y","direction":"out"}],
                "parameter_sets":[["x"]]}]}"#,
        )
        .unwrap();
        assert_eq!(m.activities[0].parameter_sets, vec![vec!["x".to_string()], vec!["y".to_string()]]);
    }
}
