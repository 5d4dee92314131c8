//! Token transfer along edges, guard acceptance and input assignments.

use crate::model::{eval_guard, Guard, NodeKindTag, Weight};
use crate::state::{ExecState, Program, TokenValue};

/// One admissible token sequence to move across an edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransferChoice {
    pub edge: usize,
    pub tokens: Vec<TokenValue>,
}

/// Where an input pin takes its tokens from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Source {
    /// Along an incoming edge, directly from the edge's source holder.
    Edge(usize),
    /// From tokens already stored on the pin itself.
    Pin(usize),
}

impl Source {
    pub fn holder(self, p: &Program) -> usize {
        match self {
            Source::Edge(e) => p.edges[e].source,
            Source::Pin(h) => h,
        }
    }
}

/// A concrete offer to an input pin: a source and the tokens to take.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Offer {
    pub source: Source,
    pub tokens: Vec<TokenValue>,
}

/// One offer per input pin (`None` where a pin is left unfed).
pub type InputAssignment = Vec<Option<Offer>>;

/// Whether edge `e` lets token `v` pass. An `else` guard passes exactly
/// when no other guard leaving the same decision accepts `v`.
pub fn accepts(p: &Program, e: usize, v: &TokenValue) -> bool {
    let edge = &p.edges[e];
    if !edge.guard.is_else() {
        return eval_guard(&edge.guard, v).unwrap_or(false);
    }
    let Some(node) = p.holders[edge.source].node else { return false };
    if p.nodes[node].kind.tag() != NodeKindTag::Decision {
        return false;
    }
    !p.nodes[node]
        .out_holders
        .iter()
        .flat_map(|&h| &p.outgoing[h])
        .filter(|&&other| other != e)
        .any(|&other| !matches!(p.edges[other].guard, Guard::Else) && eval_guard(&p.edges[other].guard, v).unwrap_or(false))
}

/// All admissible transfers over edge `e` in state `s`.
///
/// The result is empty when fewer guard-passing tokens exist than the
/// target's lower bound or the edge weight requires (either threshold
/// suffices to block). Targets not owned by a switch node receive the
/// single maximal sequence; switch-node targets receive one choice per
/// admissible sequence size.
pub fn transfer(p: &Program, s: &ExecState, e: usize) -> Vec<TransferChoice> {
    let edge = &p.edges[e];
    let vo: Vec<TokenValue> = s.holders[edge.source].iter().filter(|v| accepts(p, e, v)).cloned().collect();
    let target = &p.holders[edge.target];
    let lower = target.pin.lower as usize;
    let room = target.pin.upper_bound.as_usize().saturating_sub(s.holders[edge.target].len());
    let max = vo.len().min(target.pin.upper.as_usize()).min(room);
    let (min_k, all) = match edge.weight {
        Weight::Count(w) => (lower.max(w as usize).max(1), false),
        Weight::All => (lower.max(vo.len()).max(1), true),
    };
    if vo.len() < min_k {
        return Vec::new();
    }
    let choice = |k: usize| TransferChoice { edge: e, tokens: vo[..k].to_vec() };
    if all {
        return if max == vo.len() { vec![choice(max)] } else { Vec::new() };
    }
    if !p.holder_is_switch(edge.target) {
        return if max >= min_k { vec![choice(max)] } else { Vec::new() };
    }
    (min_k..=max).map(choice).collect()
}

/// Offers from tokens stored on the pin itself: the maximal sequence for
/// non-switch pins, every admissible size for switch pins.
pub fn pin_offers(p: &Program, s: &ExecState, h: usize) -> Vec<Offer> {
    let held = &s.holders[h];
    let pin = &p.holders[h].pin;
    let min_k = (pin.lower as usize).max(1);
    let max = held.len().min(pin.upper.as_usize());
    if max < min_k {
        return Vec::new();
    }
    let offer = |k: usize| Offer { source: Source::Pin(h), tokens: held[..k].to_vec() };
    if p.holder_is_switch(h) {
        (min_k..=max).map(offer).collect()
    } else {
        vec![offer(max)]
    }
}

/// All ways pin `h` can be fed. With `from_pins_only`, only tokens
/// already on the pin count; otherwise incoming edges offer directly
/// from their sources and tokens placed on the pin count as well.
pub fn offers(p: &Program, s: &ExecState, h: usize, from_pins_only: bool) -> Vec<Offer> {
    let mut out = Vec::new();
    if !from_pins_only {
        for &e in &p.incoming[h] {
            out.extend(transfer(p, s, e).into_iter().map(|c| Offer { source: Source::Edge(e), tokens: c.tokens }));
        }
    }
    out.extend(pin_offers(p, s, h));
    out
}

/// Cartesian product of per-pin options, keeping only assignments that
/// draw from pairwise distinct source holders.
pub fn product(p: &Program, options: Vec<Vec<Option<Offer>>>) -> Vec<InputAssignment> {
    let mut acc: Vec<InputAssignment> = vec![Vec::new()];
    for opts in options {
        let mut next = Vec::new();
        for partial in &acc {
            for o in &opts {
                if let Some(o) = o {
                    let h = o.source.holder(p);
                    if partial.iter().flatten().any(|q| q.source.holder(p) == h) {
                        continue;
                    }
                }
                let mut v = partial.clone();
                v.push(o.clone());
                next.push(v);
            }
        }
        acc = next;
    }
    acc
}

/// Every injective assignment feeding all input pins of node `n`.
pub fn input_assignments(p: &Program, s: &ExecState, n: usize, from_pins_only: bool) -> Vec<InputAssignment> {
    let options: Vec<Vec<Option<Offer>>> = p.nodes[n]
        .in_holders
        .iter()
        .map(|&h| offers(p, s, h, from_pins_only).into_iter().map(Some).collect())
        .collect();
    if options.iter().any(Vec::is_empty) {
        return Vec::new();
    }
    product(p, options)
}

/// Remove the given tokens (first occurrences, in order) from a sequence.
pub fn remove_tokens(seq: &[TokenValue], taken: &[TokenValue]) -> Vec<TokenValue> {
    let mut out = seq.to_vec();
    for t in taken {
        if let Some(i) = out.iter().position(|x| x == t) {
            out.remove(i);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;

    fn program(doc: &str) -> Program {
        Program::new(&parse_model(doc).unwrap()).unwrap()
    }

    const TWO_ACTIONS: &str = r#"{"activities":[{"name":"a","nodes":[
        {"id":"A","kind":"action","out":[{"id":"o","type":"Int"}]},
        {"id":"B","kind":"action","in":[{"id":"i","type":"Int"}]},
        {"id":"F","kind":"fork"}],
        "edges":[{"from":"A.o","to":"B.i"},{"from":"A.o","to":"F"},{"from":"F","to":"B"}]}]}"#;

    #[test]
    fn forced_maximal_choice_for_plain_target() {
        let p = program(TWO_ACTIONS);
        let mut s = p.empty_state(false);
        let o = p.holder_by_path("A.o").unwrap();
        s.holders[o] = vec![TokenValue::Int(1)];
        assert_eq!(transfer(&p, &s, 0), vec![TransferChoice { edge: 0, tokens: vec![TokenValue::Int(1)] }]);
    }

    #[test]
    fn empty_source_gives_nothing() {
        let p = program(TWO_ACTIONS);
        let s = p.empty_state(false);
        assert!(transfer(&p, &s, 0).is_empty());
    }

    #[test]
    fn switch_target_enumerates_sizes() {
        let p = program(TWO_ACTIONS);
        let mut s = p.empty_state(false);
        let o = p.holder_by_path("A.o").unwrap();
        s.holders[o] = vec![TokenValue::Int(1), TokenValue::Int(2), TokenValue::Int(3)];
        let sizes: Vec<usize> = transfer(&p, &s, 1).iter().map(|c| c.tokens.len()).collect();
        assert_eq!(sizes, vec![1, 2, 3]);
    }

    #[test]
    fn two_incoming_edges_give_two_assignments() {
        let p = program(
            r#"{"activities":[{"name":"a","nodes":[
                {"id":"A","kind":"action","out":[{"id":"o"}]},{"id":"C","kind":"action","out":[{"id":"o"}]},
                {"id":"B","kind":"action","in":[{"id":"i"}]}],
                "edges":[{"from":"A.o","to":"B.i"},{"from":"C.o","to":"B.i"}]}]}"#,
        );
        let mut s = p.empty_state(false);
        s.holders[p.holder_by_path("A.o").unwrap()] = vec![TokenValue::Int(1)];
        s.holders[p.holder_by_path("C.o").unwrap()] = vec![TokenValue::Int(2)];
        let b = p.node_by_label("B").unwrap();
        assert_eq!(input_assignments(&p, &s, b, false).len(), 2);
        let empty = p.empty_state(false);
        assert!(input_assignments(&p, &empty, b, false).is_empty());
    }

    #[test]
    fn lower_or_weight_blocks() {
        let p = program(
            r#"{"activities":[{"name":"a","nodes":[
                {"id":"A","kind":"action","out":[{"id":"o"}]},
                {"id":"B","kind":"action","in":[{"id":"i","lower":1,"upper":"*"}]}],
                "edges":[{"from":"A.o","to":"B.i","weight":2}]}]}"#,
        );
        let mut s = p.empty_state(false);
        let o = p.holder_by_path("A.o").unwrap();
        s.holders[o] = vec![TokenValue::Int(1)];
        assert!(transfer(&p, &s, 0).is_empty(), "weight unmet although lower is met");
        s.holders[o] = vec![TokenValue::Int(1), TokenValue::Int(2)];
        assert_eq!(transfer(&p, &s, 0)[0].tokens.len(), 2);
    }

    #[test]
    fn weight_all_moves_everything_or_nothing() {
        let p = program(
            r#"{"activities":[{"name":"a","nodes":[
                {"id":"A","kind":"action","out":[{"id":"o"}]},
                {"id":"B","kind":"action","in":[{"id":"i","upper":2}]}],
                "edges":[{"from":"A.o","to":"B.i","weight":"*"}]}]}"#,
        );
        let mut s = p.empty_state(false);
        let o = p.holder_by_path("A.o").unwrap();
        s.holders[o] = vec![TokenValue::Int(1), TokenValue::Int(2)];
        assert_eq!(transfer(&p, &s, 0)[0].tokens.len(), 2);
        s.holders[o].push(TokenValue::Int(3));
        assert!(transfer(&p, &s, 0).is_empty());
    }

    #[test]
    fn remove_first_occurrences() {
        let seq = [TokenValue::Int(1), TokenValue::Int(2), TokenValue::Int(1)];
        assert_eq!(remove_tokens(&seq, &[TokenValue::Int(1)]), vec![TokenValue::Int(2), TokenValue::Int(1)]);
    }
}
