//! Behavior of the single-core and execution-time extensions.

mod common;

use activity_sos::explorer::{explore, running_nodes, ExploreOptions, Kripke, Mode};
use activity_sos::extensions::{extend_execution_time, extend_single_core, profile_reference};
use activity_sos::model::NodeKindTag;
use activity_sos::semantics::SemanticsProfile;
use activity_sos::state::{NodeStatus, Program, StepLabel};
use common::*;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

fn timing(name: &str) -> BTreeMap<String, u32> {
    serde_json::from_str(&fixture(name)).unwrap()
}

fn run(p: &Program, prof: &SemanticsProfile, mode: Mode) -> Kripke {
    let k = explore(p, prof, &ExploreOptions { mode, ..Default::default() }).unwrap();
    assert!(!k.truncated);
    k
}

/// Transitions as (source fingerprint, label, target fingerprint).
fn edges(k: &Kripke) -> BTreeSet<(String, String, String)> {
    k.transitions
        .iter()
        .map(|e| (k.states[e.src].fingerprint.0.clone(), e.label.to_string(), k.states[e.dst].fingerprint.0.clone()))
        .collect()
}

fn single_initial(p: &Program) -> bool {
    p.nodes.iter().filter(|n| n.kind.tag() == NodeKindTag::InitialNode).count() == 1
}

#[test]
fn single_core_runs_one_node_at_a_time() {
    let mut checked = 0;
    for (name, doc) in model_fixtures() {
        let p = program(&doc);
        if !single_initial(&p) {
            continue;
        }
        let sc = extend_single_core(&profile_reference());
        for mode in [Mode::Reduced, Mode::Complete] {
            let k = run(&p, &sc, mode);
            for info in &k.states {
                assert!(running_nodes(&p, &info.state) <= 1, "{name}: {}", info.state.canonical_string(&p));
            }
        }
        checked += 1;
    }
    assert!(checked >= 4);
}

#[test]
fn single_core_only_removes_behavior() {
    for (name, doc) in model_fixtures() {
        let p = program(&doc);
        let reference = run(&p, &profile_reference(), Mode::Reduced);
        let sc = run(&p, &extend_single_core(&profile_reference()), Mode::Reduced);
        let ref_states: BTreeSet<_> = reference.states.iter().map(|s| &s.fingerprint).collect();
        assert!(sc.states.iter().all(|s| ref_states.contains(&s.fingerprint)), "{name}");
        assert!(edges(&sc).is_subset(&edges(&reference)), "{name}");
        assert!(sc.states.len() <= reference.states.len());
    }
}

#[test]
fn single_core_interleaves_the_parallel_branches() {
    let p = program(&fixture("parallel2.json"));
    let sc = run(&p, &extend_single_core(&profile_reference()), Mode::Reduced);
    let labels: BTreeSet<String> = sc.labels().iter().map(|l| l.to_string()).collect();
    assert!(labels.contains("i(A)") && labels.contains("i(B)"));
    // Neither branch can start while the other runs.
    for e in &sc.transitions {
        let s = &sc.states[e.src].state;
        if let StepLabel::Invoke(n) = &e.label {
            let other = if n == "A" { "B" } else { "A" };
            if let Some(o) = p.node_by_label(other) {
                assert!(!s.nodes[o].is_running(), "{n} invoked while {other} runs");
            }
        }
    }
}

#[test]
fn single_core_and_execution_time_compose_in_either_order() {
    let p = program(&fixture("parallel2.json"));
    let t = timing("timing_parallel.json");
    let r = profile_reference();
    let sc_then_time = extend_execution_time(&extend_single_core(&r), &p, &t).unwrap();
    let time_then_sc = extend_single_core(&extend_execution_time(&r, &p, &t).unwrap());
    for mode in [Mode::Reduced, Mode::Complete] {
        let a = run(&p, &sc_then_time, mode);
        let b = run(&p, &time_then_sc, mode);
        assert_eq!(edges(&a), edges(&b));
        for info in &a.states {
            assert!(running_nodes(&p, &info.state) <= 1);
        }
        assert!(a.labels().contains(&StepLabel::ExeTime("B".into())));
        assert!(!a.terminal_states().is_empty());
    }
}

/// Fewest internal steps from `from` to a state where `label` fires.
fn internal_steps_before(k: &Kripke, from: usize, label: &StepLabel) -> Option<usize> {
    let mut dist = vec![usize::MAX; k.states.len()];
    dist[from] = 0;
    let mut q = VecDeque::from([from]);
    while let Some(x) = q.pop_front() {
        if k.successors(x).any(|e| &e.label == label) {
            return Some(dist[x]);
        }
        for e in k.successors(x) {
            if e.label == StepLabel::Tau && dist[e.dst] == usize::MAX {
                dist[e.dst] = dist[x] + 1;
                q.push_back(e.dst);
            }
        }
    }
    None
}

fn after_invoke(k: &Kripke, node: &str) -> usize {
    k.transitions.iter().find(|e| e.label == StepLabel::Invoke(node.into())).expect("node is invoked").dst
}

#[test]
fn execution_time_zero_elapses_immediately() {
    let p = program(&fixture("single_action.json"));
    let t = BTreeMap::from([("A".to_string(), 0)]);
    let prof = extend_execution_time(&profile_reference(), &p, &t).unwrap();
    let k = run(&p, &prof, Mode::Complete);
    let s = after_invoke(&k, "A");
    assert_eq!(internal_steps_before(&k, s, &StepLabel::ExeTime("A".into())), Some(0));
    let red = run(&p, &prof, Mode::Reduced);
    let labels: Vec<String> = red.transitions.iter().map(|e| e.label.to_string()).collect();
    assert!(labels.contains(&"exeTime(A)".to_string()));
}

#[test]
fn execution_time_takes_that_many_ticks() {
    let p = program(&fixture("single_action.json"));
    for d in [1u32, 2, 3] {
        let t = if d == 2 { timing("timing_a2.json") } else { BTreeMap::from([("A".to_string(), d)]) };
        let prof = extend_execution_time(&profile_reference(), &p, &t).unwrap();
        let k = run(&p, &prof, Mode::Complete);
        let s = after_invoke(&k, "A");
        assert_eq!(internal_steps_before(&k, s, &StepLabel::ExeTime("A".into())), Some(d as usize));
        // Termination waits for the elapsed execution time.
        assert_eq!(internal_steps_before(&k, s, &StepLabel::Terminate("A".into())), None);
    }
}

#[test]
fn clocks_run_exactly_while_actions_execute() {
    for (model, table) in [("parallel2.json", "timing_parallel.json"), ("single_action.json", "timing_a2.json")] {
        let p = program(&fixture(model));
        let prof = extend_execution_time(&profile_reference(), &p, &timing(table)).unwrap();
        let k = run(&p, &prof, Mode::Complete);
        for info in &k.states {
            let clocks = info.state.clocks.as_ref().expect("timed states carry clocks");
            for (n, node) in p.nodes.iter().enumerate() {
                let executing = matches!(info.state.nodes[n], NodeStatus::Executing(_));
                if node.kind.tag() == NodeKindTag::Action {
                    assert_eq!(clocks[n].is_some(), executing, "{model}: clock of {}", node.label);
                } else {
                    assert!(clocks[n].is_none());
                }
                if let Some(c) = clocks[n] {
                    assert!(c <= prof.time_of(&p, n));
                }
            }
        }
    }
}

#[test]
fn timed_actions_terminate_only_when_ready() {
    let p = program(&fixture("parallel2.json"));
    let prof = extend_execution_time(&profile_reference(), &p, &timing("timing_parallel.json")).unwrap();
    for mode in [Mode::Reduced, Mode::Complete] {
        let k = run(&p, &prof, mode);
        let mut seen = 0;
        for e in &k.transitions {
            if let StepLabel::Terminate(n) = &e.label {
                let id = p.node_by_label(n).unwrap();
                if p.nodes[id].kind.tag() == NodeKindTag::Action {
                    assert!(matches!(k.states[e.src].state.nodes[id], NodeStatus::Ready(_)), "t({n}) from a non-ready state");
                    seen += 1;
                }
            }
        }
        assert!(seen > 0);
    }
}
