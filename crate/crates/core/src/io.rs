//! JSON shapes for instances, kernels, PL tables and games.
//!
//! Every map is a `BTreeMap`, so serializing a parsed file in the canonical
//! layout ([`to_canonical_json`]) is deterministic and idempotent.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consistency::PlFunction;
use crate::infograph::InfoGraph;
use crate::model::{KernelError, Model, SignalKernel};
use crate::rational::Rational;

/// `state -> player -> (belief | null)`; a belief lists only the states it
/// charges.
pub type RawJointBelief = BTreeMap<String, BTreeMap<String, Option<BTreeMap<String, Rational>>>>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawInstance {
    pub states: Vec<String>,
    pub prior: BTreeMap<String, Rational>,
    pub players: BTreeMap<String, Vec<Vec<String>>>,
    pub mediator: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint_belief: Option<RawJointBelief>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawKernel {
    pub signals: Vec<String>,
    /// `signal -> state -> τ(signal | state)`.
    pub table: BTreeMap<String, BTreeMap<String, Rational>>,
}

/// `"ω|ω′" -> φ(ω, ω′)`.
pub type RawPlTable = BTreeMap<String, Rational>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGame {
    pub players: Vec<String>,
    pub actions: BTreeMap<String, Vec<String>>,
    /// Profile key is the comma-joined actions in `players` order.
    pub payoffs: BTreeMap<String, BTreeMap<String, Rational>>,
}

/// Pretty JSON with a trailing newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

pub fn parse_instance(text: &str) -> Result<RawInstance, serde_json::Error> {
    serde_json::from_str(text)
}

/// Accepts either a bare joint-belief map or an object with a
/// `joint_belief` field (such as a full instance).
pub fn parse_joint_belief(text: &str) -> Result<RawJointBelief, serde_json::Error> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    match value.get("joint_belief") {
        Some(inner) => serde_json::from_value(inner.clone()),
        None => serde_json::from_value(value),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TableError {
    #[error("malformed edge key {0:?}, expected \"state|state\"")]
    MalformedKey(String),
    #[error("unknown state {0:?}")]
    UnknownState(String),
    #[error("({0}, {1}) is not an edge of the information graph")]
    NotAnEdge(String, String),
    #[error("phi({0}, {1}) must be positive")]
    NonPositive(String, String),
    #[error("no value for edge ({0}, {1})")]
    MissingEdge(String, String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Builds a PL function from a table keyed `"ω|ω′"`. A direction left out is
/// filled with the reciprocal of the other; when both are present they are
/// kept as given so reciprocity can be checked separately.
pub fn pl_from_table(model: &Model, graph: &InfoGraph, table: &RawPlTable) -> Result<PlFunction, TableError> {
    let mut phi = PlFunction::new();
    for (key, value) in table {
        let (a, b) = key
            .split_once('|')
            .ok_or_else(|| TableError::MalformedKey(key.clone()))?;
        let sa = model
            .state(a)
            .ok_or_else(|| TableError::UnknownState(a.to_string()))?;
        let sb = model
            .state(b)
            .ok_or_else(|| TableError::UnknownState(b.to_string()))?;
        if !graph.has_edge(sa, sb) {
            return Err(TableError::NotAnEdge(a.to_string(), b.to_string()));
        }
        if !value.is_positive() {
            return Err(TableError::NonPositive(a.to_string(), b.to_string()));
        }
        phi.insert(sa, sb, value.clone());
    }
    for (a, b, _) in graph.edges() {
        match (phi.get(a, b).cloned(), phi.get(b, a).cloned()) {
            (Some(_), Some(_)) => {}
            (Some(v), None) => phi.insert(b, a, v.recip().expect("positive")),
            (None, Some(v)) => phi.insert(a, b, v.recip().expect("positive")),
            (None, None) => {
                return Err(TableError::MissingEdge(
                    model.state_name(a).to_string(),
                    model.state_name(b).to_string(),
                ))
            }
        }
    }
    Ok(phi)
}

/// Both directions of every edge, keyed `"ω|ω′"`.
pub fn pl_to_table(model: &Model, graph: &InfoGraph, phi: &PlFunction) -> RawPlTable {
    let mut out = BTreeMap::new();
    for (a, b, _) in graph.edges() {
        for (x, y) in [(a, b), (b, a)] {
            if let Some(v) = phi.get(x, y) {
                out.insert(
                    format!("{}|{}", model.state_name(x), model.state_name(y)),
                    v.clone(),
                );
            }
        }
    }
    out
}

pub fn kernel_from_raw(model: &Model, raw: &RawKernel) -> Result<SignalKernel, KernelError> {
    let n = model.num_states();
    let mut table = Vec::with_capacity(raw.signals.len());
    for sig in &raw.signals {
        let row_map = raw
            .table
            .get(sig)
            .ok_or_else(|| KernelError::ShapeMismatch(sig.clone()))?;
        let mut row = vec![None; n];
        for (state, p) in row_map {
            let s = model
                .state(state)
                .ok_or_else(|| KernelError::UnknownState(state.clone()))?;
            row[s] = Some(p.clone());
        }
        let row = row
            .into_iter()
            .map(|p| p.ok_or_else(|| KernelError::ShapeMismatch(sig.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        table.push(row);
    }
    if let Some(extra) = raw.table.keys().find(|k| !raw.signals.contains(k)) {
        return Err(KernelError::UnknownSignal(extra.clone()));
    }
    SignalKernel::new(model, raw.signals.clone(), table)
}

pub fn kernel_to_raw(model: &Model, kernel: &SignalKernel) -> RawKernel {
    let table = kernel
        .signals()
        .iter()
        .enumerate()
        .map(|(i, sig)| {
            let row = kernel
                .row(i)
                .iter()
                .enumerate()
                .map(|(s, p)| (model.state_name(s).to_string(), p.clone()))
                .collect();
            (sig.clone(), row)
        })
        .collect();
    RawKernel {
        signals: kernel.signals().to_vec(),
        table,
    }
}
