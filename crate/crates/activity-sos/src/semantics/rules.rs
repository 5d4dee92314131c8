//! Premises and effects of every catalog rule.

use super::catalog::{LabelKind, RuleId};
use super::transfer::{input_assignments, offers, product, remove_tokens, transfer, InputAssignment, Offer, Source};
use super::{RuleInstance, SemanticsProfile};
use crate::model::{order_tokens, store_tokens, Behavior, Direction, NodeKind, NodeKindTag};
use crate::state::{ActivityStatus, ExecState, FIn, NodeStatus, Program, StepLabel, TokenValue};

pub(super) fn enabled(p: &Program, prof: &SemanticsProfile, s: &ExecState) -> Vec<RuleInstance> {
    let mut cx = Cx { p, prof, s, out: Vec::new() };
    for &r in RuleId::ALL {
        if prof.has(r) {
            cx.rule(r);
        }
    }
    cx.out
}

struct Cx<'a> {
    p: &'a Program,
    prof: &'a SemanticsProfile,
    s: &'a ExecState,
    out: Vec<RuleInstance>,
}

// ---- state editing helpers ----

fn take(p: &Program, s: &mut ExecState, o: &Offer) {
    let h = o.source.holder(p);
    s.holders[h] = remove_tokens(&s.holders[h], &o.tokens);
}

fn put(p: &Program, s: &mut ExecState, h: usize, toks: &[TokenValue]) {
    s.holders[h] = store_tokens(p.holders[h].pin.ordering, &s.holders[h], toks);
}

fn fits(p: &Program, s: &ExecState, h: usize, n: usize) -> bool {
    s.holders[h].len() + n <= p.holders[h].pin.upper_bound.as_usize()
}

fn fresh_status(p: &Program, n: usize) -> NodeStatus {
    if p.nodes[n].kind.tag() == NodeKindTag::Join {
        NodeStatus::IdleOrdered(vec![])
    } else {
        NodeStatus::Idle
    }
}

/// Return activations to idle with all their nodes idle and holders empty.
fn reset(p: &Program, s: &mut ExecState, acts: &[usize]) {
    for &a in acts {
        for &n in &p.activities[a].nodes {
            s.nodes[n] = fresh_status(p, n);
            if let Some(c) = s.clocks.as_mut() {
                c[n] = None;
            }
        }
        for &h in &p.activities[a].holders {
            s.holders[h].clear();
        }
        s.activities[a] = ActivityStatus::Idle;
    }
}

fn data_of(toks: &[TokenValue]) -> Vec<TokenValue> {
    toks.iter().filter(|t| !t.is_control()).cloned().collect()
}

/// Consumed inputs recorded per pin, ordered by each pin's ordering.
fn f_in(p: &Program, n: usize, asg: &InputAssignment) -> FIn {
    asg.iter()
        .enumerate()
        .filter_map(|(k, o)| {
            o.as_ref().map(|o| (k, order_tokens(p.holders[p.nodes[n].in_holders[k]].pin.ordering, &o.tokens)))
        })
        .collect()
}

fn describe(asg: &InputAssignment) -> String {
    asg.iter()
        .map(|o| match o {
            None => "-".to_string(),
            Some(Offer { source: Source::Edge(e), tokens }) => format!("e{e}x{}", tokens.len()),
            Some(Offer { source: Source::Pin(h), tokens }) => format!("h{h}x{}", tokens.len()),
        })
        .collect::<Vec<_>>()
        .join(",")
}

/// The single edge an assignment draws from, if exactly one pin is fed
/// along an edge and no pin is fed otherwise.
fn single_edge(asg: &InputAssignment) -> Option<usize> {
    let fed: Vec<&Offer> = asg.iter().flatten().collect();
    match fed.as_slice() {
        [Offer { source: Source::Edge(e), .. }] => Some(*e),
        _ => None,
    }
}

impl<'a> Cx<'a> {
    fn emit(&mut self, rule: RuleId, node: Option<usize>, act: Option<usize>, edge: Option<usize>, detail: String, next: ExecState) {
        let p = self.p;
        let name = || node.map(|n| p.nodes[n].label.clone()).unwrap_or_default();
        let label = match rule.label_kind() {
            LabelKind::Invoke => StepLabel::Invoke(name()),
            LabelKind::Terminate => StepLabel::Terminate(name()),
            LabelKind::ExeTime => StepLabel::ExeTime(name()),
            LabelKind::Tau => StepLabel::Tau,
            LabelKind::Hidden => match edge {
                Some(e) => StepLabel::Transfer(p.holder_owner(p.edges[e].source), p.holder_owner(p.edges[e].target)),
                None => StepLabel::Tau,
            },
        };
        self.out.push(RuleInstance { rule, node, act, edge, detail, label, kind: rule.kind(), next });
    }

    fn pins_only(&self) -> bool {
        self.prof.consume_from_pins()
    }

    fn act_exec(&self, n: usize) -> bool {
        self.s.activities[self.p.nodes[n].act].is_executing()
    }

    fn nodes_of(&self, tag: NodeKindTag) -> Vec<usize> {
        (0..self.p.nodes.len()).filter(|&n| self.p.nodes[n].kind.tag() == tag).collect()
    }

    /// Extra invocation premise of the single-core extension.
    fn core_free(&self, n: usize) -> bool {
        !self.prof.single_core
            || !(0..self.p.nodes.len()).any(|m| m != n && self.p.uses_core(m) && self.s.nodes[m].is_running())
    }

    fn assignments(&self, n: usize) -> Vec<InputAssignment> {
        input_assignments(self.p, self.s, n, self.pins_only())
    }

    fn offers(&self, h: usize) -> Vec<Offer> {
        offers(self.p, self.s, h, self.pins_only())
    }

    /// Nodes of an activation are all idle (waiting accept event actions
    /// without inputs excepted) and every holder other than the output
    /// parameters is empty.
    fn quiescent(&self, b: usize) -> bool {
        let p = self.p;
        let nodes_idle = p.activities[b].nodes.iter().all(|&n| {
            let ni = &p.nodes[n];
            self.s.nodes[n].is_idle() || (ni.kind.tag() == NodeKindTag::AcceptEventAction && ni.in_holders.is_empty())
        });
        let holders_empty = p.activities[b].holders.iter().all(|&h| {
            let hi = &p.holders[h];
            self.s.holders[h].is_empty() || (hi.apn.is_some() && hi.pin.direction == Direction::Out && !hi.exception)
        });
        nodes_idle && holders_empty
    }

    /// Output APN holders (non-exception) of an activation, in order.
    fn output_apns(&self, b: usize) -> Vec<usize> {
        self.p.activities[b]
            .apn_holders
            .iter()
            .copied()
            .filter(|&h| self.p.holders[h].pin.direction == Direction::Out && !self.p.holders[h].exception)
            .collect()
    }

    fn input_apns(&self, b: usize) -> Vec<usize> {
        self.p.activities[b].apn_holders.iter().copied().filter(|&h| self.p.holders[h].pin.direction == Direction::In).collect()
    }

    /// Set a finished activation idle; waiting accept event actions stop.
    fn finish(&self, s: &mut ExecState, b: usize) {
        s.activities[b] = ActivityStatus::Idle;
        for &n in &self.p.activities[b].nodes {
            if s.nodes[n].is_running() {
                s.nodes[n] = fresh_status(self.p, n);
            }
        }
    }

    fn rule(&mut self, r: RuleId) {
        use RuleId::*;
        match r {
            A1 => self.a1(),
            A2 => self.a2(),
            I1 => self.i1(),
            F1 => self.f1(),
            F2 => self.f2(),
            J1 => self.j1(),
            J2 => self.j2(),
            J3 => self.j3(),
            J4 => self.j4(),
            M1 => self.m1(),
            D1 => self.d1(),
            D2 => self.d2(),
            D3 | D4 | D5 => self.d_route(r),
            D6 => self.d6(),
            D7 => self.d7(),
            FF1 => self.ff1(),
            FF2 => self.ff2(),
            AF1 | AF2 => self.af(r),
            AE1 => self.ae1(),
            AE2 | AE3 => self.ae_receive(r),
            S1 => self.s1(),
            S2 => self.s2(),
            C1 | C2 => self.call_invoke(r),
            C3 => self.c3(),
            C4 => self.c4(),
            V1 => self.v1(),
            V2 => self.v2(),
            V3 => self.v3(),
            X1 => self.x1(),
            X2 => self.x2(),
            X3 => self.x3(),
            X4 => self.x4(),
            X5 => self.x5(),
            EdgeTransfer => self.edge_transfer(),
            ExeTime => self.exe_time(),
            Tick => self.tick(),
        }
    }

    // ---- actions ----

    fn a1(&mut self) {
        for n in self.nodes_of(NodeKindTag::Action) {
            if self.s.nodes[n] != NodeStatus::Idle || !self.act_exec(n) || !self.core_free(n) {
                continue;
            }
            for asg in self.assignments(n) {
                let mut next = self.s.clone();
                for o in asg.iter().flatten() {
                    take(self.p, &mut next, o);
                }
                next.nodes[n] = NodeStatus::Executing(f_in(self.p, n, &asg));
                if let Some(c) = next.clocks.as_mut() {
                    c[n] = Some(0);
                }
                self.emit(RuleId::A1, Some(n), None, None, describe(&asg), next);
            }
        }
    }

    fn a2(&mut self) {
        let p = self.p;
        for n in self.nodes_of(NodeKindTag::Action) {
            let f = match (&self.s.nodes[n], self.prof.with_clocks()) {
                (NodeStatus::Executing(f), false) | (NodeStatus::Ready(f), true) => f.clone(),
                _ => continue,
            };
            if !self.act_exec(n) {
                continue;
            }
            let ni = &p.nodes[n];
            let behavior = match &ni.kind {
                NodeKind::Action { behavior: Some(b) } => p.model.behaviors.get(b).cloned().unwrap_or(Behavior::Identity),
                _ => Behavior::Identity,
            };
            let in_pins: Vec<_> = ni.in_holders.iter().map(|&h| p.holders[h].pin.clone()).collect();
            let out_pins: Vec<_> = ni.out_holders.iter().map(|&h| p.holders[h].pin.clone()).collect();
            let mut per_pin = vec![Vec::new(); in_pins.len()];
            for (k, t) in &f {
                per_pin[*k] = t.clone();
            }
            let Ok(outs) = behavior.apply(&in_pins, &out_pins, &per_pin) else { continue };
            let mut next = self.s.clone();
            let mut ok = true;
            for (k, &h) in ni.out_holders.iter().enumerate() {
                let pin = &p.holders[h].pin;
                let v = order_tokens(pin.ordering, &outs[k]);
                if !fits(p, &next, h, v.len()) || v.len() < pin.lower as usize {
                    ok = false;
                    break;
                }
                put(p, &mut next, h, &v);
            }
            if !ok {
                continue;
            }
            next.nodes[n] = NodeStatus::Idle;
            if let Some(c) = next.clocks.as_mut() {
                c[n] = None;
            }
            self.emit(RuleId::A2, Some(n), None, None, String::new(), next);
        }
    }

    fn i1(&mut self) {
        for n in self.nodes_of(NodeKindTag::InitialNode) {
            if !self.s.nodes[n].is_running() || !self.act_exec(n) {
                continue;
            }
            let mut next = self.s.clone();
            for &h in &self.p.nodes[n].out_holders {
                next.holders[h] = vec![TokenValue::Control];
            }
            next.nodes[n] = NodeStatus::Idle;
            self.emit(RuleId::I1, Some(n), None, None, String::new(), next);
        }
    }

    // ---- fork / join / merge ----

    fn f1(&mut self) {
        let p = self.p;
        for n in self.nodes_of(NodeKindTag::Fork) {
            if self.s.nodes[n] != NodeStatus::Idle || !self.act_exec(n) {
                continue;
            }
            let Some(&h) = p.nodes[n].in_holders.first() else { continue };
            let out_edges: Vec<usize> = p.nodes[n].out_holders.iter().flat_map(|&q| p.outgoing[q].clone()).collect();
            for o in self.offers(h) {
                let vc: Vec<TokenValue> = o
                    .tokens
                    .iter()
                    .filter(|v| out_edges.iter().any(|&e| super::transfer::accepts(p, e, v)))
                    .cloned()
                    .collect();
                if vc.is_empty() {
                    continue;
                }
                let mut next = self.s.clone();
                let edge = match o.source {
                    Source::Edge(e) => {
                        take(p, &mut next, &Offer { source: o.source, tokens: vc.clone() });
                        put(p, &mut next, h, &vc);
                        Some(e)
                    }
                    Source::Pin(_) => None,
                };
                next.nodes[n] = NodeStatus::Executing(vec![(0, vc.clone())]);
                self.emit(RuleId::F1, Some(n), None, edge, format!("{:?}x{}", o.source, vc.len()), next);
            }
        }
    }

    fn f2(&mut self) {
        let p = self.p;
        for n in self.nodes_of(NodeKindTag::Fork) {
            let NodeStatus::Executing(f) = &self.s.nodes[n] else { continue };
            if !self.act_exec(n) {
                continue;
            }
            let vo: Vec<TokenValue> = f.iter().flat_map(|(_, t)| t.clone()).collect();
            let mut next = self.s.clone();
            let mut ok = true;
            for &q in &p.nodes[n].out_holders {
                let pass: Vec<TokenValue> =
                    vo.iter().filter(|v| p.outgoing[q].iter().any(|&e| super::transfer::accepts(p, e, v))).cloned().collect();
                if !fits(p, &next, q, pass.len()) {
                    ok = false;
                    break;
                }
                put(p, &mut next, q, &pass);
            }
            if !ok {
                continue;
            }
            let h = p.nodes[n].in_holders[0];
            next.holders[h] = remove_tokens(&next.holders[h], &vo);
            next.nodes[n] = NodeStatus::Idle;
            self.emit(RuleId::F2, Some(n), None, None, String::new(), next);
        }
    }

    fn offers_data(&self, h: usize) -> bool {
        self.offers(h).iter().any(|o| o.tokens.iter().any(|t| !t.is_control()))
    }

    fn j2(&mut self) {
        for n in self.nodes_of(NodeKindTag::Join) {
            let NodeStatus::IdleOrdered(order) = &self.s.nodes[n] else { continue };
            if !self.act_exec(n) {
                continue;
            }
            for (k, &h) in self.p.nodes[n].in_holders.iter().enumerate() {
                if !order.contains(&k) && self.offers_data(h) {
                    let mut next = self.s.clone();
                    let mut o = order.clone();
                    o.push(k);
                    next.nodes[n] = NodeStatus::IdleOrdered(o);
                    self.emit(RuleId::J2, Some(n), None, None, format!("+{k}"), next);
                }
            }
        }
    }

    fn j3(&mut self) {
        for n in self.nodes_of(NodeKindTag::Join) {
            let NodeStatus::IdleOrdered(order) = &self.s.nodes[n] else { continue };
            if !self.act_exec(n) {
                continue;
            }
            for &k in order {
                let h = self.p.nodes[n].in_holders[k];
                if self.offers(h).is_empty() {
                    let mut next = self.s.clone();
                    next.nodes[n] = NodeStatus::IdleOrdered(order.iter().copied().filter(|&x| x != k).collect());
                    self.emit(RuleId::J3, Some(n), None, None, format!("-{k}"), next);
                }
            }
        }
    }

    fn j1(&mut self) {
        let p = self.p;
        for n in self.nodes_of(NodeKindTag::Join) {
            let NodeStatus::IdleOrdered(order) = &self.s.nodes[n] else { continue };
            if !self.act_exec(n) {
                continue;
            }
            let NodeKind::Join { join_spec } = &p.nodes[n].kind else { continue };
            let ins = &p.nodes[n].in_holders;
            let ids: Vec<String> = ins.iter().map(|&h| p.holders[h].pin.id.clone()).collect();
            let options: Vec<Vec<Option<Offer>>> = ins
                .iter()
                .map(|&h| {
                    let o: Vec<Option<Offer>> = self.offers(h).into_iter().map(Some).collect();
                    if o.is_empty() {
                        vec![None]
                    } else {
                        o
                    }
                })
                .collect();
            for asg in product(p, options) {
                if asg.iter().all(Option::is_none) {
                    continue;
                }
                let fed = |id: &str| ids.iter().position(|x| x == id).is_some_and(|k| asg[k].is_some());
                if !join_spec.eval(&fed, &ids) {
                    continue;
                }
                let data_ok = asg.iter().enumerate().all(|(k, o)| match o {
                    Some(o) if o.tokens.iter().any(|t| !t.is_control()) => order.contains(&k),
                    _ => true,
                });
                if !data_ok {
                    continue;
                }
                let mut next = self.s.clone();
                let mut combined: Vec<Option<Vec<TokenValue>>> = vec![None; ins.len()];
                for (k, o) in asg.iter().enumerate() {
                    let Some(o) = o else { continue };
                    let data = data_of(&o.tokens);
                    let c = if data.is_empty() { vec![TokenValue::Control] } else { data };
                    take(p, &mut next, o);
                    put(p, &mut next, ins[k], &c);
                    combined[k] = Some(c);
                }
                let mut f: FIn = Vec::new();
                for &k in order {
                    if let Some(c) = &combined[k] {
                        f.push((k, c.clone()));
                    }
                }
                for (k, c) in combined.iter().enumerate() {
                    if let Some(c) = c {
                        if !order.contains(&k) {
                            f.push((k, c.clone()));
                        }
                    }
                }
                next.nodes[n] = NodeStatus::Executing(f);
                self.emit(RuleId::J1, Some(n), None, single_edge(&asg), describe(&asg), next);
            }
        }
    }

    fn j4(&mut self) {
        let p = self.p;
        for n in self.nodes_of(NodeKindTag::Join) {
            let NodeStatus::Executing(f) = &self.s.nodes[n] else { continue };
            if !self.act_exec(n) {
                continue;
            }
            let data: Vec<TokenValue> = f.iter().flat_map(|(_, t)| data_of(t)).collect();
            let out = if data.is_empty() { vec![TokenValue::Control] } else { data };
            let mut next = self.s.clone();
            if !p.nodes[n].out_holders.iter().all(|&q| fits(p, &next, q, out.len())) {
                continue;
            }
            for &q in &p.nodes[n].out_holders {
                put(p, &mut next, q, &out);
            }
            for (k, t) in f {
                let h = p.nodes[n].in_holders[*k];
                next.holders[h] = remove_tokens(&next.holders[h], t);
            }
            next.nodes[n] = NodeStatus::IdleOrdered(vec![]);
            self.emit(RuleId::J4, Some(n), None, None, String::new(), next);
        }
    }

    fn m1(&mut self) {
        let p = self.p;
        for n in self.nodes_of(NodeKindTag::Merge) {
            if !self.act_exec(n) {
                continue;
            }
            for &h in &p.nodes[n].in_holders {
                for o in self.offers(h) {
                    for &q in &p.nodes[n].out_holders {
                        if !fits(p, self.s, q, o.tokens.len()) {
                            continue;
                        }
                        let mut next = self.s.clone();
                        take(p, &mut next, &o);
                        put(p, &mut next, q, &o.tokens);
                        let edge = match o.source {
                            Source::Edge(e) => Some(e),
                            Source::Pin(_) => None,
                        };
                        self.emit(RuleId::M1, Some(n), None, edge, format!("{:?}x{}->{q}", o.source, o.tokens.len()), next);
                    }
                }
            }
        }
    }

    // ---- decisions ----

    fn decision_pins(&self, n: usize) -> (Option<usize>, Option<usize>) {
        let p = self.p;
        let NodeKind::Decision { d_flow, .. } = &p.nodes[n].kind else { return (None, None) };
        let ins = &p.nodes[n].in_holders;
        let dflow = d_flow.as_ref().and_then(|id| ins.iter().copied().find(|&h| &p.holders[h].pin.id == id));
        let data = ins.iter().copied().find(|&h| Some(h) != dflow);
        (data, dflow)
    }

    fn d1(&mut self) {
        let p = self.p;
        for n in self.nodes_of(NodeKindTag::Decision) {
            if self.s.nodes[n] != NodeStatus::Idle || !self.act_exec(n) {
                continue;
            }
            for asg in self.assignments(n) {
                let sizes: Vec<usize> = asg.iter().flatten().map(|o| o.tokens.len()).collect();
                if sizes.windows(2).any(|w| w[0] != w[1]) {
                    continue;
                }
                let mut next = self.s.clone();
                for (k, o) in asg.iter().enumerate() {
                    let Some(o) = o else { continue };
                    if let Source::Edge(_) = o.source {
                        take(p, &mut next, o);
                        put(p, &mut next, p.nodes[n].in_holders[k], &o.tokens);
                    }
                }
                next.nodes[n] = NodeStatus::Executing(f_in(p, n, &asg));
                self.emit(RuleId::D1, Some(n), None, single_edge(&asg), describe(&asg), next);
            }
        }
    }

    fn d2(&mut self) {
        let p = self.p;
        for n in self.nodes_of(NodeKindTag::Decision) {
            if !self.s.nodes[n].is_running() || !self.act_exec(n) {
                continue;
            }
            if p.nodes[n].in_holders.iter().any(|&h| !self.s.holders[h].is_empty()) {
                continue;
            }
            if let Some(b) = p.nodes[n].callee {
                if self.s.activities[b] != ActivityStatus::Idle {
                    continue;
                }
            }
            let mut next = self.s.clone();
            next.nodes[n] = NodeStatus::Idle;
            self.emit(RuleId::D2, Some(n), None, None, String::new(), next);
        }
    }

    /// D3 (route by the token itself), D4 (by the decision-flow token) and
    /// D5 (by the decision behavior's result).
    fn d_route(&mut self, r: RuleId) {
        let p = self.p;
        for n in self.nodes_of(NodeKindTag::Decision) {
            if !self.s.nodes[n].is_running() || !self.act_exec(n) {
                continue;
            }
            let NodeKind::Decision { d_flow, d_behavior } = &p.nodes[n].kind else { continue };
            let (Some(dp), dflow) = self.decision_pins(n) else { continue };
            let Some(head) = self.s.holders[dp].first().cloned() else { continue };
            // Holder supplying the deciding value, if different from `dp`.
            let decider = match (r, d_flow.is_some(), d_behavior.is_some()) {
                (RuleId::D3, false, false) => None,
                (RuleId::D4, true, false) => match dflow {
                    Some(h) => Some(h),
                    None => continue,
                },
                (RuleId::D5, _, true) => {
                    let Some(b) = p.nodes[n].callee else { continue };
                    if self.s.activities[b] != ActivityStatus::Idle {
                        continue;
                    }
                    match self.output_apns(b).first() {
                        Some(&h) => Some(h),
                        None => continue,
                    }
                }
                _ => continue,
            };
            let w = match decider {
                None => head.clone(),
                Some(h) => match self.s.holders[h].first() {
                    Some(w) => w.clone(),
                    None => continue,
                },
            };
            for &q in &p.nodes[n].out_holders {
                if !p.outgoing[q].iter().any(|&e| super::transfer::accepts(p, e, &w)) || !fits(p, self.s, q, 1) {
                    continue;
                }
                let mut next = self.s.clone();
                next.holders[dp].remove(0);
                if let Some(h) = decider {
                    next.holders[h].remove(0);
                }
                put(p, &mut next, q, std::slice::from_ref(&head));
                self.emit(r, Some(n), None, None, format!("->{q}"), next);
            }
        }
    }

    fn d6(&mut self) {
        let p = self.p;
        for n in self.nodes_of(NodeKindTag::Decision) {
            if !self.s.nodes[n].is_running() || !self.act_exec(n) {
                continue;
            }
            let Some(b) = p.nodes[n].callee else { continue };
            if self.s.activities[b] != ActivityStatus::Idle
                || p.activities[b].apn_holders.iter().any(|&h| !self.s.holders[h].is_empty())
            {
                continue;
            }
            let (Some(dp), _) = self.decision_pins(n) else { continue };
            let Some(head) = self.s.holders[dp].first().cloned() else { continue };
            let Some(&apn) = self.input_apns(b).first() else { continue };
            let mut next = self.s.clone();
            put(p, &mut next, apn, &[head]);
            self.emit(RuleId::D6, Some(n), Some(b), None, String::new(), next);
        }
    }

    fn d7(&mut self) {
        let p = self.p;
        for n in self.nodes_of(NodeKindTag::Decision) {
            if !self.s.nodes[n].is_running() || !self.act_exec(n) {
                continue;
            }
            let Some(b) = p.nodes[n].callee else { continue };
            let ActivityStatus::Executing { pending, .. } = &self.s.activities[b] else { continue };
            if !pending.is_empty() || !self.quiescent(b) {
                continue;
            }
            let mut next = self.s.clone();
            self.finish(&mut next, b);
            self.emit(RuleId::D7, Some(n), Some(b), None, String::new(), next);
        }
    }

    // ---- final nodes ----

    fn ff1(&mut self) {
        let p = self.p;
        for n in self.nodes_of(NodeKindTag::FlowFinalNode) {
            if self.s.nodes[n] != NodeStatus::Idle || !self.act_exec(n) || !self.core_free(n) {
                continue;
            }
            for (k, &h) in p.nodes[n].in_holders.iter().enumerate() {
                for o in self.offers(h) {
                    let mut next = self.s.clone();
                    take(p, &mut next, &o);
                    next.nodes[n] = NodeStatus::Executing(vec![(k, o.tokens.clone())]);
                    self.emit(RuleId::FF1, Some(n), None, None, format!("{:?}x{}", o.source, o.tokens.len()), next);
                }
            }
        }
    }

    fn ff2(&mut self) {
        for n in self.nodes_of(NodeKindTag::FlowFinalNode) {
            if !self.s.nodes[n].is_running() || !self.act_exec(n) {
                continue;
            }
            let mut next = self.s.clone();
            next.nodes[n] = NodeStatus::Idle;
            self.emit(RuleId::FF2, Some(n), None, None, String::new(), next);
        }
    }

    /// AF1: the activation has no waiting caller (root or asynchronous);
    /// AF2: a synchronous caller receives the outputs.
    fn af(&mut self, r: RuleId) {
        let p = self.p;
        for n in self.nodes_of(NodeKindTag::ActivityFinalNode) {
            if self.s.nodes[n] != NodeStatus::Idle || !self.act_exec(n) || !self.core_free(n) {
                continue;
            }
            let a = p.nodes[n].act;
            let inst = &p.activities[a];
            let sync_caller = inst.caller.filter(|_| inst.synchronous);
            if (r == RuleId::AF2) != sync_caller.is_some() {
                continue;
            }
            for &h in &p.nodes[n].in_holders {
                for o in self.offers(h) {
                    let mut next = self.s.clone();
                    take(p, &mut next, &o);
                    let detail = format!("{:?}x{}", o.source, o.tokens.len());
                    match (inst.caller, sync_caller) {
                        (None, _) => {
                            let all: Vec<usize> = (0..p.activities.len()).collect();
                            reset(p, &mut next, &all);
                        }
                        (Some(_), None) => reset(p, &mut next, &p.sync_closure(a)),
                        (_, Some(m)) => {
                            let outs = self.output_apns(a);
                            let vals: Vec<Vec<TokenValue>> = outs.iter().map(|&q| next.holders[q].clone()).collect();
                            reset(p, &mut next, &p.sync_closure(a));
                            if p.nodes[m].kind.tag() == NodeKindTag::CallBehaviorAction {
                                let mut ok = true;
                                for (k, &q) in p.nodes[m].out_holders.iter().enumerate() {
                                    let v = match vals.get(k) {
                                        Some(v) if !v.is_empty() => v.clone(),
                                        _ => vec![TokenValue::Null],
                                    };
                                    if !fits(p, &next, q, v.len()) {
                                        ok = false;
                                        break;
                                    }
                                    put(p, &mut next, q, &v);
                                }
                                if !ok {
                                    continue;
                                }
                                next.nodes[m] = NodeStatus::Idle;
                            } else {
                                // A decision behavior keeps its result for routing.
                                for (q, v) in outs.iter().zip(vals) {
                                    next.holders[*q] = v;
                                }
                            }
                        }
                    }
                    self.emit(r, Some(n), Some(a), None, detail, next);
                }
            }
        }
    }

    // ---- events ----

    fn ae1(&mut self) {
        for n in self.nodes_of(NodeKindTag::AcceptEventAction) {
            if self.p.nodes[n].in_holders.is_empty()
                || self.s.nodes[n] != NodeStatus::Idle
                || !self.act_exec(n)
                || !self.core_free(n)
            {
                continue;
            }
            for asg in self.assignments(n) {
                let mut next = self.s.clone();
                for o in asg.iter().flatten() {
                    take(self.p, &mut next, o);
                }
                next.nodes[n] = NodeStatus::Executing(f_in(self.p, n, &asg));
                self.emit(RuleId::AE1, Some(n), None, None, describe(&asg), next);
            }
        }
    }

    /// AE2 (with inputs: receive and finish) and AE3 (without inputs:
    /// receive and keep waiting).
    fn ae_receive(&mut self, r: RuleId) {
        let p = self.p;
        for n in self.nodes_of(NodeKindTag::AcceptEventAction) {
            let persistent = p.nodes[n].in_holders.is_empty();
            if persistent != (r == RuleId::AE3) || !self.s.nodes[n].is_running() || !self.act_exec(n) {
                continue;
            }
            let NodeKind::AcceptEventAction { event, result, pool } = &p.nodes[n].kind else { continue };
            let pi = p.pool_index(pool);
            let mut seen: Vec<&TokenValue> = Vec::new();
            for v in &self.s.events[pi] {
                if !matches!(v, TokenValue::EventPayload(name, _) if name == event) || seen.contains(&v) {
                    continue;
                }
                seen.push(v);
                let mut next = self.s.clone();
                let at = next.events[pi].iter().position(|x| x == v).expect("present");
                next.events[pi].remove(at);
                let mut ok = true;
                for &q in &p.nodes[n].out_holders {
                    let tok = if &p.holders[q].pin.id == result { v.clone() } else { TokenValue::Control };
                    if !fits(p, &next, q, 1) {
                        ok = false;
                        break;
                    }
                    put(p, &mut next, q, &[tok]);
                }
                if !ok {
                    continue;
                }
                if !persistent {
                    next.nodes[n] = NodeStatus::Idle;
                }
                self.emit(r, Some(n), None, None, v.to_string(), next);
            }
        }
    }

    fn s1(&mut self) {
        let p = self.p;
        for n in self.nodes_of(NodeKindTag::SendSignalAction) {
            if self.s.nodes[n] != NodeStatus::Idle || !self.act_exec(n) || !self.core_free(n) {
                continue;
            }
            let NodeKind::SendSignalAction { event, pool } = &p.nodes[n].kind else { continue };
            let pi = p.pool_index(pool);
            for asg in self.assignments(n) {
                let mut next = self.s.clone();
                for o in asg.iter().flatten() {
                    take(p, &mut next, o);
                }
                let f = f_in(p, n, &asg);
                let payload = f.iter().flat_map(|(_, t)| data_of(t)).collect();
                next.events[pi].push(TokenValue::EventPayload(event.clone(), payload));
                next.events[pi].sort();
                next.nodes[n] = NodeStatus::Executing(f);
                self.emit(RuleId::S1, Some(n), None, None, describe(&asg), next);
            }
        }
    }

    fn s2(&mut self) {
        let p = self.p;
        for n in self.nodes_of(NodeKindTag::SendSignalAction) {
            if !self.s.nodes[n].is_running() || !self.act_exec(n) {
                continue;
            }
            if !p.nodes[n].out_holders.iter().all(|&q| fits(p, self.s, q, 1)) {
                continue;
            }
            let mut next = self.s.clone();
            for &q in &p.nodes[n].out_holders {
                put(p, &mut next, q, &[TokenValue::Control]);
            }
            next.nodes[n] = NodeStatus::Idle;
            self.emit(RuleId::S2, Some(n), None, None, String::new(), next);
        }
    }

    // ---- calls and activations ----

    /// C1 (parameter set with a non-streaming input, or none at all) and
    /// C2 (all inputs streaming).
    fn call_invoke(&mut self, r: RuleId) {
        let p = self.p;
        for n in self.nodes_of(NodeKindTag::CallBehaviorAction) {
            if self.s.nodes[n] != NodeStatus::Idle || !self.act_exec(n) || !self.core_free(n) {
                continue;
            }
            let Some(b) = p.nodes[n].callee else { continue };
            if self.s.activities[b] != ActivityStatus::Idle {
                continue;
            }
            let sync = p.activities[b].synchronous;
            let apns_in = self.input_apns(b);
            let act_b = p.activity_of(b);
            let ins = &p.nodes[n].in_holders;
            for (psi, set) in act_b.parameter_sets.iter().enumerate() {
                let mapped: Vec<(usize, usize)> = (0..ins.len().min(apns_in.len()))
                    .filter(|&k| set.contains(&p.holders[apns_in[k]].pin.id))
                    .map(|k| (k, apns_in[k]))
                    .collect();
                let all_streaming = !mapped.is_empty() && mapped.iter().all(|&(_, a)| p.holders[a].streaming);
                if (r == RuleId::C2) != all_streaming {
                    continue;
                }
                let mut options = Vec::new();
                let mut blocked = false;
                for &(k, a) in &mapped {
                    let o: Vec<Option<Offer>> = self.offers(ins[k]).into_iter().map(Some).collect();
                    if o.is_empty() {
                        if !p.holders[a].streaming {
                            blocked = true;
                            break;
                        }
                        options.push(vec![None]);
                    } else {
                        options.push(o);
                    }
                }
                if blocked {
                    continue;
                }
                for asg in product(p, options) {
                    if r == RuleId::C2 && asg.iter().all(Option::is_none) {
                        continue;
                    }
                    let mut next = self.s.clone();
                    let mut ok = true;
                    for (i, o) in asg.iter().enumerate() {
                        let Some(o) = o else { continue };
                        let a = mapped[i].1;
                        take(p, &mut next, o);
                        if !fits(p, &next, a, o.tokens.len()) {
                            ok = false;
                            break;
                        }
                        put(p, &mut next, a, &o.tokens);
                    }
                    if !ok {
                        continue;
                    }
                    if sync {
                        next.nodes[n] = NodeStatus::Executing(vec![]);
                    } else if mapped.is_empty() {
                        // Nothing will arrive on the callee's parameters, so start it now.
                        p.start_activity(&mut next, b, psi);
                    }
                    self.emit(r, Some(n), Some(b), None, format!("ps{psi}:{}", describe(&asg)), next);
                }
            }
        }
    }

    fn c3(&mut self) {
        let p = self.p;
        for n in self.nodes_of(NodeKindTag::CallBehaviorAction) {
            if !self.s.nodes[n].is_running() || !self.act_exec(n) {
                continue;
            }
            let Some(b) = p.nodes[n].callee else { continue };
            let ActivityStatus::Executing { ps, .. } = &self.s.activities[b] else { continue };
            let set = &p.activity_of(b).parameter_sets[*ps];
            let apns_in = self.input_apns(b);
            let ins = &p.nodes[n].in_holders;
            let mapped: Vec<(usize, usize)> = (0..ins.len().min(apns_in.len()))
                .filter(|&k| p.holders[apns_in[k]].streaming && set.contains(&p.holders[apns_in[k]].pin.id))
                .map(|k| (k, apns_in[k]))
                .collect();
            let options: Vec<Vec<Option<Offer>>> = mapped
                .iter()
                .map(|&(k, _)| {
                    let mut o: Vec<Option<Offer>> = self.offers(ins[k]).into_iter().map(Some).collect();
                    if o.is_empty() {
                        o.push(None);
                    }
                    o
                })
                .collect();
            for asg in product(p, options) {
                if asg.iter().all(Option::is_none) {
                    continue;
                }
                let mut next = self.s.clone();
                let mut ok = true;
                for (i, o) in asg.iter().enumerate() {
                    let Some(o) = o else { continue };
                    let a = mapped[i].1;
                    take(p, &mut next, o);
                    if !fits(p, &next, a, o.tokens.len()) {
                        ok = false;
                        break;
                    }
                    put(p, &mut next, a, &o.tokens);
                }
                if ok {
                    self.emit(RuleId::C3, Some(n), Some(b), None, describe(&asg), next);
                }
            }
        }
    }

    fn c4(&mut self) {
        let p = self.p;
        for n in self.nodes_of(NodeKindTag::CallBehaviorAction) {
            if !self.s.nodes[n].is_running() || !self.act_exec(n) {
                continue;
            }
            let Some(b) = p.nodes[n].callee else { continue };
            if !self.s.activities[b].is_executing() {
                continue;
            }
            for (k, a) in self.output_apns(b).into_iter().enumerate() {
                let Some(&q) = p.nodes[n].out_holders.get(k) else { continue };
                let v = self.s.holders[a].clone();
                if !p.holders[a].streaming || v.is_empty() || !fits(p, self.s, q, v.len()) {
                    continue;
                }
                let mut next = self.s.clone();
                next.holders[a].clear();
                put(p, &mut next, q, &v);
                self.emit(RuleId::C4, Some(n), Some(b), None, format!("out{k}"), next);
            }
        }
    }

    fn v1(&mut self) {
        let p = self.p;
        for b in 0..p.activities.len() {
            if self.s.activities[b] != ActivityStatus::Idle {
                continue;
            }
            let occupied: Vec<String> = self
                .input_apns(b)
                .into_iter()
                .filter(|&h| !self.s.holders[h].is_empty())
                .map(|h| p.holders[h].pin.id.clone())
                .collect();
            let waiting_caller = p.activities[b].caller.is_some_and(|m| {
                p.nodes[m].kind.tag() == NodeKindTag::CallBehaviorAction
                    && p.activities[b].synchronous
                    && self.s.nodes[m].is_running()
            });
            if occupied.is_empty() && !waiting_caller {
                continue;
            }
            for (psi, set) in p.activity_of(b).parameter_sets.iter().enumerate() {
                if !occupied.iter().all(|id| set.contains(id)) {
                    continue;
                }
                let mut next = self.s.clone();
                p.start_activity(&mut next, b, psi);
                self.emit(RuleId::V1, None, Some(b), None, format!("ps{psi}"), next);
            }
        }
    }

    fn v2(&mut self) {
        let p = self.p;
        for n in self.nodes_of(NodeKindTag::CallBehaviorAction) {
            if !self.s.nodes[n].is_running() || !self.act_exec(n) {
                continue;
            }
            let Some(b) = p.nodes[n].callee else { continue };
            let ActivityStatus::Executing { ps, pending } = &self.s.activities[b] else { continue };
            if !pending.is_empty() || !self.quiescent(b) {
                continue;
            }
            let set = &p.activity_of(b).parameter_sets[*ps];
            let outs = self.output_apns(b);
            let in_set = |h: usize| set.contains(&p.holders[h].pin.id);
            if outs.iter().any(|&h| !self.s.holders[h].is_empty() && !in_set(h)) {
                continue;
            }
            let mut next = self.s.clone();
            let mut ok = true;
            for (k, &a) in outs.iter().enumerate() {
                let Some(&q) = p.nodes[n].out_holders.get(k) else { continue };
                if !in_set(a) {
                    continue;
                }
                let v = if self.s.holders[a].is_empty() { vec![TokenValue::Null] } else { self.s.holders[a].clone() };
                if !fits(p, &next, q, v.len()) {
                    ok = false;
                    break;
                }
                put(p, &mut next, q, &v);
                next.holders[a].clear();
            }
            if !ok {
                continue;
            }
            self.finish(&mut next, b);
            next.nodes[n] = NodeStatus::Idle;
            self.emit(RuleId::V2, Some(n), Some(b), None, String::new(), next);
        }
    }

    fn v3(&mut self) {
        let p = self.p;
        for (e, edge) in p.edges.iter().enumerate() {
            let t = &p.holders[edge.target];
            if t.apn.is_none() || t.pin.direction != Direction::Out || t.exception || !self.s.activities[edge.act].is_executing() {
                continue;
            }
            for c in transfer(p, self.s, e) {
                let mut next = self.s.clone();
                take(p, &mut next, &Offer { source: Source::Edge(e), tokens: c.tokens.clone() });
                put(p, &mut next, edge.target, &c.tokens);
                if let ActivityStatus::Executing { pending, .. } = &mut next.activities[edge.act] {
                    let idx = t.apn.expect("apn");
                    pending.retain(|&x| x != idx);
                }
                self.emit(RuleId::V3, None, Some(edge.act), Some(e), format!("x{}", c.tokens.len()), next);
            }
        }
    }

    // ---- exceptions ----

    fn x1(&mut self) {
        let p = self.p;
        for (e, edge) in p.edges.iter().enumerate() {
            if !p.holders[edge.target].exception || !self.s.activities[edge.act].is_executing() {
                continue;
            }
            for c in transfer(p, self.s, e) {
                let mut next = self.s.clone();
                reset(p, &mut next, &p.sync_closure(edge.act));
                next.activities[edge.act] = ActivityStatus::Exception(c.tokens[0].clone());
                self.emit(RuleId::X1, None, Some(edge.act), Some(e), format!("x{}", c.tokens.len()), next);
            }
        }
    }

    /// Handler node instances in the caller's activity matching `v`.
    fn handlers_for(&self, m: usize, v: &TokenValue) -> Vec<usize> {
        let p = self.p;
        let a = p.nodes[m].act;
        let prefix = &p.activities[a].prefix;
        p.activity_of(a)
            .handlers
            .iter()
            .filter(|hb| hb.exception_type.admits(v))
            .filter_map(|hb| p.node_by_label(&format!("{prefix}{}", hb.node)))
            .collect()
    }

    /// Synchronous calls whose callee raised: `(call node, callee, value)`.
    fn raised(&self) -> Vec<(usize, usize, TokenValue)> {
        let p = self.p;
        (0..p.nodes.len())
            .filter_map(|m| {
                let b = p.nodes[m].callee?;
                let ActivityStatus::Exception(v) = &self.s.activities[b] else { return None };
                (p.activities[b].synchronous && self.act_exec(m) && self.s.nodes[m].is_running()).then(|| (m, b, v.clone()))
            })
            .collect()
    }

    fn x2(&mut self) {
        let p = self.p;
        for (m, b, v) in self.raised() {
            if p.nodes[m].kind.tag() != NodeKindTag::CallBehaviorAction {
                continue;
            }
            for h in self.handlers_for(m, &v) {
                let hn = &p.nodes[h];
                let clean = self.s.nodes[h].is_idle()
                    && hn.in_holders.iter().chain(&hn.out_holders).all(|&x| self.s.holders[x].is_empty());
                let Some(&pin) = hn.in_holders.first() else { continue };
                if !clean {
                    continue;
                }
                let mut next = self.s.clone();
                put(p, &mut next, pin, std::slice::from_ref(&v));
                self.emit(RuleId::X2, Some(h), Some(b), None, format!("{m}"), next);
            }
        }
    }

    fn x3(&mut self) {
        let p = self.p;
        for (m, _b, v) in self.raised() {
            let handled = p.nodes[m].kind.tag() == NodeKindTag::CallBehaviorAction && !self.handlers_for(m, &v).is_empty();
            if handled {
                continue;
            }
            let a = p.nodes[m].act;
            let mut next = self.s.clone();
            reset(p, &mut next, &p.sync_closure(a));
            next.activities[a] = ActivityStatus::Exception(v.clone());
            self.emit(RuleId::X3, Some(m), Some(a), None, String::new(), next);
        }
    }

    fn x4(&mut self) {
        for b in 0..self.p.activities.len() {
            let inst = &self.p.activities[b];
            if inst.caller.is_none() || inst.synchronous || !matches!(self.s.activities[b], ActivityStatus::Exception(_)) {
                continue;
            }
            let mut next = self.s.clone();
            next.activities[b] = ActivityStatus::Idle;
            self.emit(RuleId::X4, None, Some(b), None, String::new(), next);
        }
    }

    fn x5(&mut self) {
        let p = self.p;
        for (m, b, v) in self.raised() {
            if p.nodes[m].kind.tag() != NodeKindTag::CallBehaviorAction {
                continue;
            }
            for h in self.handlers_for(m, &v) {
                let hn = &p.nodes[h];
                if !self.s.nodes[h].is_idle() || hn.out_holders.iter().all(|&x| self.s.holders[x].is_empty()) {
                    continue;
                }
                let mut next = self.s.clone();
                let mut ok = true;
                for (k, &q) in p.nodes[m].out_holders.iter().enumerate() {
                    let v = match hn.out_holders.get(k) {
                        Some(&hq) => self.s.holders[hq].clone(),
                        None => vec![TokenValue::Control],
                    };
                    if !fits(p, &next, q, v.len()) {
                        ok = false;
                        break;
                    }
                    put(p, &mut next, q, &v);
                }
                if !ok {
                    continue;
                }
                for &hq in &hn.out_holders {
                    next.holders[hq].clear();
                }
                next.activities[b] = ActivityStatus::Idle;
                next.nodes[m] = NodeStatus::Idle;
                self.emit(RuleId::X5, Some(h), Some(b), None, format!("{m}"), next);
            }
        }
    }

    // ---- extensions ----

    fn edge_transfer(&mut self) {
        let p = self.p;
        for (e, edge) in p.edges.iter().enumerate() {
            if p.holders[edge.target].node.is_none() || !self.s.activities[edge.act].is_executing() {
                continue;
            }
            for c in transfer(p, self.s, e) {
                let mut next = self.s.clone();
                take(p, &mut next, &Offer { source: Source::Edge(e), tokens: c.tokens.clone() });
                put(p, &mut next, edge.target, &c.tokens);
                self.emit(RuleId::EdgeTransfer, None, Some(edge.act), Some(e), format!("x{}", c.tokens.len()), next);
            }
        }
    }

    fn exe_time(&mut self) {
        let Some(clocks) = &self.s.clocks else { return };
        for n in self.nodes_of(NodeKindTag::Action) {
            let (NodeStatus::Executing(f), Some(c)) = (&self.s.nodes[n], clocks[n]) else { continue };
            if c < self.prof.time_of(self.p, n) {
                continue;
            }
            let mut next = self.s.clone();
            next.nodes[n] = NodeStatus::Ready(f.clone());
            next.clocks.as_mut().expect("clocks")[n] = None;
            self.emit(RuleId::ExeTime, Some(n), None, None, String::new(), next);
        }
    }

    fn tick(&mut self) {
        let Some(clocks) = &self.s.clocks else { return };
        let limit = |n: usize| self.prof.time_of(self.p, n);
        if !clocks.iter().enumerate().any(|(n, c)| c.is_some_and(|c| c < limit(n))) {
            return;
        }
        let mut next = self.s.clone();
        for (n, c) in next.clocks.as_mut().expect("clocks").iter_mut().enumerate() {
            if let Some(v) = c {
                *v = (*v + 1).min(limit(n));
            }
        }
        self.emit(RuleId::Tick, None, None, None, String::new(), next);
    }
}
