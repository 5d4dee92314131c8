//! Semantics profiles: the reference profile and the extensions that
//! derive new profiles from an existing one.

use crate::semantics::{reference_rules, ClosurePolicy, RuleId, SemanticsError, SemanticsProfile, Variation};
use crate::state::Program;
use std::collections::BTreeMap;
use thiserror::Error;

pub const DEFAULT_MAX_MICRO_STATES: usize = 200_000;

/// The 38-rule reference semantics.
pub fn profile_reference() -> SemanticsProfile {
    SemanticsProfile {
        name: "reference".into(),
        rules: reference_rules().into_iter().collect(),
        closure: ClosurePolicy::Standard,
        single_core: false,
        timing: None,
        consumption: None,
        max_micro_states: DEFAULT_MAX_MICRO_STATES,
    }
}

/// Execution-time extension: actions take `timing[id]` time units between
/// invocation and termination. A global clock tick is a micro-step;
/// elapsing the execution time is the macro-step `exeTime(n)`.
///
/// Every action of the program must have an entry.
pub fn extend_execution_time(
    base: &SemanticsProfile,
    p: &Program,
    timing: &BTreeMap<String, u32>,
) -> Result<SemanticsProfile, SemanticsError> {
    let mut missing: Vec<String> = p
        .nodes
        .iter()
        .filter(|n| matches!(n.kind, crate::model::NodeKind::Action { .. }))
        .map(|n| n.label.rsplit('/').next().unwrap_or_default().to_string())
        .filter(|id| !timing.contains_key(id))
        .collect();
    missing.sort();
    missing.dedup();
    if !missing.is_empty() {
        return Err(SemanticsError::MissingTiming(missing.join(", ")));
    }
    let mut prof = base.clone();
    prof.rules.insert(RuleId::ExeTime);
    prof.rules.insert(RuleId::Tick);
    prof.timing = Some(timing.clone());
    prof.name = format!("{}+time", base.name);
    Ok(prof)
}

/// Single-core extension: no node may be invoked while another node that
/// occupies the processor is running. Idempotent.
pub fn extend_single_core(base: &SemanticsProfile) -> SemanticsProfile {
    let mut prof = base.clone();
    if !prof.single_core {
        prof.single_core = true;
        prof.name = format!("{}+single-core", base.name);
    }
    prof
}

/// Consumption extension: edges move tokens onto input pins as separate
/// micro-steps and nodes consume from their own pins. [`Variation::Eager`]
/// additionally forces all enabled transfers before any macro-step.
pub fn extend_consumption(base: &SemanticsProfile, v: Variation) -> SemanticsProfile {
    let mut prof = base.clone();
    prof.rules.insert(RuleId::EdgeTransfer);
    prof.consumption = Some(v);
    prof.closure = match v {
        Variation::Eager => ClosurePolicy::EagerTransfer,
        Variation::Lazy => ClosurePolicy::Standard,
    };
    prof.name = format!("{}+{}", base.name, variation_name(v));
    prof
}

fn variation_name(v: Variation) -> &'static str {
    match v {
        Variation::Eager => "var1",
        Variation::Lazy => "var2",
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ProfileError {
    #[error("unknown profile component `{0}` (expected reference, time, single-core, var1, var2)")]
    Unknown(String),
    #[error("profile component `time` needs a timing table")]
    NoTiming,
    #[error("profiles var1 and var2 cannot be combined")]
    Conflict,
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
}

/// Build a profile from a description listing components separated by
/// `+` or `,`, such as `reference+single-core+time` or `var1,exec-time`.
pub fn parse_profile(
    spec: &str,
    p: &Program,
    timing: Option<&BTreeMap<String, u32>>,
) -> Result<SemanticsProfile, ProfileError> {
    let mut prof = profile_reference();
    let mut want_time = false;
    for part in spec.split(['+', ',']).map(str::trim).filter(|s| !s.is_empty()) {
        match part {
            "reference" | "ref" => {}
            "single-core" | "single_core" | "sc" => prof = extend_single_core(&prof),
            "time" | "exec-time" | "execution-time" => want_time = true,
            "var1" | "var2" => {
                if prof.consumption.is_some() {
                    return Err(ProfileError::Conflict);
                }
                let v = if part == "var1" { Variation::Eager } else { Variation::Lazy };
                prof = extend_consumption(&prof, v);
            }
            other => return Err(ProfileError::Unknown(other.to_string())),
        }
    }
    if want_time {
        let t = timing.ok_or(ProfileError::NoTiming)?;
        prof = extend_execution_time(&prof, p, t)?;
    }
    Ok(prof)
}
