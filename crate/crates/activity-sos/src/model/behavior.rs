//! Behavior bindings (`m_io`): map consumed inputs to produced outputs.
//!
//! Control pins are handled uniformly: a control output always receives a
//! single control token and control inputs never influence the result.

use super::{Pin, ValueType};
use crate::state::TokenValue;
use std::collections::BTreeMap;
use thiserror::Error;

/// One row of a tabular behavior; only data pins are listed.
#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorRow {
    pub inputs: BTreeMap<String, Vec<TokenValue>>,
    pub outputs: BTreeMap<String, Vec<TokenValue>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Behavior {
    Identity,
    Const(TokenValue),
    Add,
    Negate,
    Rows(Vec<BehaviorRow>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BehaviorError {
    #[error("no behavior row matches the consumed inputs")]
    NoRow,
    #[error("builtin `{0}` found no applicable input token")]
    NoOperand(&'static str),
}

impl Behavior {
    pub fn parse_builtin(s: &str) -> Option<Behavior> {
        match s {
            "identity" => Some(Behavior::Identity),
            "add" => Some(Behavior::Add),
            "negate" => Some(Behavior::Negate),
            _ => {
                let lit = s.strip_prefix("const:")?;
                Some(Behavior::Const(parse_const(lit)))
            }
        }
    }

    pub fn builtin_name(&self) -> Option<String> {
        match self {
            Behavior::Identity => Some("identity".into()),
            Behavior::Add => Some("add".into()),
            Behavior::Negate => Some("negate".into()),
            Behavior::Const(v) => Some(format!("const:{}", const_text(v))),
            Behavior::Rows(_) => None,
        }
    }

    /// Compute output sequences (one per out pin) from the consumed
    /// input sequences (one per in pin).
    pub fn apply(
        &self,
        in_pins: &[Pin],
        out_pins: &[Pin],
        f_in: &[Vec<TokenValue>],
    ) -> Result<Vec<Vec<TokenValue>>, BehaviorError> {
        let data_inputs: Vec<&TokenValue> =
            f_in.iter().flatten().filter(|v| !matches!(v, TokenValue::Control)).collect();
        let fill = |data: &dyn Fn(usize, &Pin) -> Result<Vec<TokenValue>, BehaviorError>| {
            out_pins
                .iter()
                .enumerate()
                .map(|(k, q)| {
                    if q.value_type == ValueType::Control {
                        Ok(vec![TokenValue::Control])
                    } else {
                        data(k, q)
                    }
                })
                .collect::<Result<Vec<_>, _>>()
        };
        match self {
            Behavior::Identity => fill(&|k, _| {
                let data: Vec<TokenValue> = f_in
                    .get(k)
                    .map(|s| s.iter().filter(|v| !matches!(v, TokenValue::Control)).cloned().collect())
                    .unwrap_or_default();
                Ok(if data.is_empty() { vec![TokenValue::Null] } else { data })
            }),
            Behavior::Const(v) => fill(&|_, _| Ok(vec![v.clone()])),
            Behavior::Add => {
                let sum: i64 = data_inputs
                    .iter()
                    .filter_map(|v| if let TokenValue::Int(i) = v { Some(*i) } else { None })
                    .sum();
                fill(&|_, _| Ok(vec![TokenValue::Int(sum)]))
            }
            Behavior::Negate => {
                let r = match data_inputs.first() {
                    Some(TokenValue::Int(i)) => TokenValue::Int(-i),
                    Some(TokenValue::Bool(b)) => TokenValue::Bool(!b),
                    _ => return Err(BehaviorError::NoOperand("negate")),
                };
                fill(&|_, _| Ok(vec![r.clone()]))
            }
            Behavior::Rows(rows) => {
                let matches = |row: &BehaviorRow| {
                    in_pins.iter().zip(f_in).all(|(p, vals)| {
                        if p.value_type == ValueType::Control {
                            return true;
                        }
                        let want = row.inputs.get(&p.id).map(Vec::as_slice).unwrap_or(&[]);
                        want == vals.as_slice()
                    })
                };
                let row = rows.iter().find(|r| matches(r)).ok_or(BehaviorError::NoRow)?;
                fill(&|_, q| Ok(row.outputs.get(&q.id).cloned().unwrap_or_default()))
            }
        }
    }
}

fn parse_const(lit: &str) -> TokenValue {
    match lit {
        "true" => TokenValue::Bool(true),
        "false" => TokenValue::Bool(false),
        "null" => TokenValue::Null,
        _ => lit.parse().map(TokenValue::Int).unwrap_or_else(|_| TokenValue::Str(lit.to_string())),
    }
}

fn const_text(v: &TokenValue) -> String {
    match v {
        TokenValue::Int(i) => i.to_string(),
        TokenValue::Bool(b) => b.to_string(),
        TokenValue::Null => "null".into(),
        TokenValue::Str(s) => s.clone(),
        other => other.to_string(),
    }
}
