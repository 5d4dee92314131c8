//! Simulation preorder between two explored state spaces.
//!
//! `abstract` simulates `concrete` when every labeled step of the
//! concrete structure can be matched by an equally labeled step of the
//! abstract one, ending again in related states. Only transition labels
//! are compared. With internal labels hidden, internal steps (`τ`,
//! transfers, `exeTime`) are matched by zero or more internal steps and a
//! visible step by a visible step surrounded by internal ones.

use crate::explorer::Kripke;
use crate::state::StepLabel;
use serde_json::{json, Value};
use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConformanceError {
    #[error("structures range over different node names (only in abstract: {only_abstract:?}; only in concrete: {only_concrete:?})")]
    AlphabetMismatch { only_abstract: Vec<String>, only_concrete: Vec<String> },
    #[error("the {0} structure was truncated; simulation is undecided")]
    Truncated(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub holds: bool,
    pub hide_internal: bool,
    /// Number of related state pairs in the greatest simulation.
    pub relation_size: usize,
    /// Concrete labels leading to a step the abstract side cannot match;
    /// the last label is the unmatched step.
    pub counterexample: Option<Vec<StepLabel>>,
}

impl Verdict {
    pub fn to_json(&self) -> Value {
        json!({
            "holds": self.holds,
            "hide_internal": self.hide_internal,
            "relation_size": self.relation_size,
            "counterexample": self.counterexample.as_ref().map(|c| c.iter().map(|l| l.to_string()).collect::<Vec<_>>()),
        })
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.holds {
            write!(f, "simulation holds ({} related pairs)", self.relation_size)
        } else {
            write!(f, "simulation fails")?;
            if let Some(c) = &self.counterexample {
                let t: Vec<String> = c.iter().map(|l| l.to_string()).collect();
                write!(f, "; counterexample: {}", t.join(" "))?;
            }
            Ok(())
        }
    }
}

/// Per-state successor lists keyed by label, optionally saturated with
/// internal steps.
struct Moves {
    /// `steps[i]`: (label, target) pairs, labels normalized when hiding.
    steps: Vec<Vec<(StepLabel, usize)>>,
}

fn normalize(l: &StepLabel, hide: bool) -> StepLabel {
    if hide && l.is_internal() {
        StepLabel::Tau
    } else {
        l.clone()
    }
}

impl Moves {
    fn strong(k: &Kripke, hide: bool) -> Moves {
        let mut steps = vec![Vec::new(); k.states.len()];
        for e in &k.transitions {
            steps[e.src].push((normalize(&e.label, hide), e.dst));
        }
        Moves { steps }
    }

    /// Weak moves: `τ` reaches the internal closure (including staying
    /// put); a visible label `a` reaches `τ* a τ*`.
    fn weak(k: &Kripke) -> Moves {
        let n = k.states.len();
        let strong = Moves::strong(k, true);
        let closure: Vec<BTreeSet<usize>> = (0..n)
            .map(|i| {
                let mut seen = BTreeSet::from([i]);
                let mut q = VecDeque::from([i]);
                while let Some(x) = q.pop_front() {
                    for (l, y) in &strong.steps[x] {
                        if *l == StepLabel::Tau && seen.insert(*y) {
                            q.push_back(*y);
                        }
                    }
                }
                seen
            })
            .collect();
        let steps = (0..n)
            .map(|i| {
                let mut out: BTreeSet<(StepLabel, usize)> = closure[i].iter().map(|&j| (StepLabel::Tau, j)).collect();
                for &j in &closure[i] {
                    for (l, y) in &strong.steps[j] {
                        if *l != StepLabel::Tau {
                            for &z in &closure[*y] {
                                out.insert((l.clone(), z));
                            }
                        }
                    }
                }
                out.into_iter().collect()
            })
            .collect();
        Moves { steps }
    }
}

/// Decide whether `abs` simulates `conc`.
pub fn simulates(abs: &Kripke, conc: &Kripke, hide_internal: bool) -> Result<Verdict, ConformanceError> {
    if abs.alphabet != conc.alphabet {
        return Err(ConformanceError::AlphabetMismatch {
            only_abstract: abs.alphabet.difference(&conc.alphabet).cloned().collect(),
            only_concrete: conc.alphabet.difference(&abs.alphabet).cloned().collect(),
        });
    }
    if abs.truncated {
        return Err(ConformanceError::Truncated("abstract"));
    }
    if conc.truncated {
        return Err(ConformanceError::Truncated("concrete"));
    }
    let cm = Moves::strong(conc, hide_internal);
    let am = if hide_internal { Moves::weak(abs) } else { Moves::strong(abs, false) };
    let am_by_label: Vec<HashMap<&StepLabel, Vec<usize>>> = am
        .steps
        .iter()
        .map(|v| {
            let mut m: HashMap<&StepLabel, Vec<usize>> = HashMap::new();
            for (l, t) in v {
                m.entry(l).or_default().push(*t);
            }
            m
        })
        .collect();
    let (nc, na) = (conc.states.len(), abs.states.len());
    // Removal round per pair (0 = still related).
    let mut removed = vec![0usize; nc * na];
    let idx = |c: usize, a: usize| c * na + a;
    let mut round = 0;
    loop {
        round += 1;
        let mut drop = Vec::new();
        for c in 0..nc {
            for a in 0..na {
                if removed[idx(c, a)] != 0 {
                    continue;
                }
                let ok = cm.steps[c].iter().all(|(l, c2)| {
                    am_by_label[a].get(l).is_some_and(|ts| ts.iter().any(|&a2| removed[idx(*c2, a2)] == 0))
                });
                if !ok {
                    drop.push(idx(c, a));
                }
            }
        }
        if drop.is_empty() {
            break;
        }
        for d in drop {
            removed[d] = round;
        }
    }
    let relation_size = removed.iter().filter(|&&r| r == 0).count();
    let holds = removed[idx(conc.initial, abs.initial)] == 0;
    let counterexample = (!holds).then(|| {
        // Descend along removal rounds: at a pair removed in round r some
        // concrete step has all its matches removed before round r.
        let mut trace = Vec::new();
        let (mut c, mut a) = (conc.initial, abs.initial);
        loop {
            let r = removed[idx(c, a)];
            let mut best: Option<(usize, &StepLabel, usize, Option<usize>)> = None;
            for (l, c2) in &cm.steps[c] {
                let matches = am_by_label[a].get(l).cloned().unwrap_or_default();
                if matches.iter().any(|&a2| removed[idx(*c2, a2)] == 0 || removed[idx(*c2, a2)] >= r) {
                    continue;
                }
                // The abstract side picks its strongest reply.
                let reply = matches.iter().copied().max_by_key(|&a2| removed[idx(*c2, a2)]);
                let depth = reply.map_or(0, |a2| removed[idx(*c2, a2)]);
                if best.is_none_or(|(d, ..)| depth < d) {
                    best = Some((depth, l, *c2, reply));
                }
            }
            let Some((_, l, c2, reply)) = best else { break };
            trace.push(l.clone());
            match reply {
                None => break,
                Some(a2) => {
                    c = c2;
                    a = a2;
                }
            }
        }
        trace
    });
    Ok(Verdict { holds, hide_internal, relation_size, counterexample })
}
