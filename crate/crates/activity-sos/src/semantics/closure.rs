use super::{applicable, ClosurePolicy, RuleId, SemanticsError, SemanticsProfile, StepKind};
use crate::model::NodeKindTag;
use crate::state::{ActivityStatus, ExecState, Program, StepLabel};
use std::collections::{BTreeMap, HashSet};

/// A transition of the reduced state space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub label: StepLabel,
    pub target: ExecState,
    /// The macro rule that closed the transition (`None` for settling
    /// into an exception state).
    pub rule: Option<RuleId>,
}

/// Whether `s` may end a transition: switch nodes are idle, hold nothing
/// on their inputs, and only forks may keep offering on outputs, each
/// with at least one output already drained.
pub fn is_visible(p: &Program, s: &ExecState) -> bool {
    for (n, ni) in p.nodes.iter().enumerate() {
        let tag = ni.kind.tag();
        if !tag.is_switch() {
            continue;
        }
        if !s.nodes[n].is_idle() {
            return false;
        }
        if ni.in_holders.iter().any(|&h| !s.holders[h].is_empty()) {
            return false;
        }
        if tag == NodeKindTag::Fork {
            if !ni.out_holders.is_empty() && ni.out_holders.iter().all(|&h| !s.holders[h].is_empty()) {
                return false;
            }
        } else if ni.out_holders.iter().any(|&h| !s.holders[h].is_empty()) {
            return false;
        }
    }
    true
}

/// Transitions from `s`: any sequence of micro-steps followed by one
/// macro-step whose result is visible. Under [`ClosurePolicy::EagerTransfer`]
/// macro-steps fire only where no micro-step is enabled. A non-empty
/// micro-sequence that gets stuck in an exception state yields a `τ`
/// transition into that state.
pub fn transitions(p: &Program, prof: &SemanticsProfile, s: &ExecState) -> Result<Vec<Transition>, SemanticsError> {
    let mut visited: HashSet<ExecState> = HashSet::new();
    visited.insert(s.clone());
    let mut stack = vec![s.clone()];
    let mut found: BTreeMap<(StepLabel, ExecState), Option<RuleId>> = BTreeMap::new();
    while let Some(cur) = stack.pop() {
        let insts = applicable(p, prof, &cur);
        let stuck = !insts.iter().any(|i| i.kind == StepKind::Micro);
        let macros_allowed = prof.closure == ClosurePolicy::Standard || stuck;
        for inst in insts {
            match inst.kind {
                StepKind::Macro => {
                    if macros_allowed && is_visible(p, &inst.next) {
                        found.entry((inst.label, inst.next)).or_insert(Some(inst.rule));
                    }
                }
                StepKind::Micro => {
                    if !visited.contains(&inst.next) {
                        if visited.len() >= prof.max_micro_states {
                            return Err(SemanticsError::MicroDivergence {
                                bound: prof.max_micro_states,
                                fingerprint: s.fingerprint(p).0,
                            });
                        }
                        visited.insert(inst.next.clone());
                        stack.push(inst.next);
                    }
                }
            }
        }
        if stuck
            && &cur != s
            && cur.activities.iter().any(|a| matches!(a, ActivityStatus::Exception(_)))
            && is_visible(p, &cur)
        {
            found.entry((StepLabel::Tau, cur)).or_insert(None);
        }
    }
    Ok(found.into_iter().map(|((label, target), rule)| Transition { label, target, rule }).collect())
}
