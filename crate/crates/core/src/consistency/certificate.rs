use std::collections::VecDeque;

use thiserror::Error;

use crate::infograph::{ckcs, InfoGraph};
use crate::model::{Partition, State};
use crate::rational::Rational;

use super::PlFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateKind {
    FCycleViolation,
    FLoopViolation,
}

/// An explicit witness that no F-measurable labeling exists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Certificate {
    /// `ω₁, …, ω_{n+1}`: consecutive states are adjacent and `ω_{n+1}`
    /// shares an F-cell with `ω₁`. Product of `φ` along the path.
    FCycle { path: Vec<State>, product: Rational },
    /// Pairs `(ωᵢ, ω̄ᵢ)` in one component each, with `ω̄ᵢ` in the F-cell of
    /// `ω_{i+1}` but a different component (indices cyclic). Product of the
    /// extended `φ(ωᵢ, ω̄ᵢ)`.
    FLoop { pairs: Vec<(State, State)>, product: Rational },
}

impl Certificate {
    pub fn kind(&self) -> CertificateKind {
        match self {
            Certificate::FCycle { .. } => CertificateKind::FCycleViolation,
            Certificate::FLoop { .. } => CertificateKind::FLoopViolation,
        }
    }

    pub fn product(&self) -> &Rational {
        match self {
            Certificate::FCycle { product, .. } | Certificate::FLoop { product, .. } => product,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MalformedCertificate {
    #[error("path too short")]
    TooShort,
    #[error("state {0} is not a vertex of the graph")]
    NotAVertex(State),
    #[error("({0}, {1}) is not an edge")]
    NotAnEdge(State, State),
    #[error("phi undefined on ({0}, {1})")]
    MissingValue(State, State),
    #[error("{0} and {1} do not share an F-cell")]
    NotSameFCell(State, State),
    #[error("{0} and {1} are not in one component")]
    NotSameComponent(State, State),
    #[error("{0} and {1} should be in different components")]
    SameComponent(State, State),
}

/// Checks the structure of `cert` and recomputes its product from `phi`.
/// Loop pairs are bridged by a shortest path inside their component.
pub fn evaluate_certificate(
    graph: &InfoGraph,
    mediator: &Partition,
    phi: &PlFunction,
    cert: &Certificate,
) -> Result<Rational, MalformedCertificate> {
    use MalformedCertificate as M;
    let vertex = |s: State| {
        if s < graph.num_states() && graph.contains(s) {
            Ok(())
        } else {
            Err(M::NotAVertex(s))
        }
    };
    let step = |a: State, b: State| -> Result<&Rational, M> {
        if !graph.has_edge(a, b) {
            return Err(M::NotAnEdge(a, b));
        }
        phi.get(a, b).ok_or(M::MissingValue(a, b))
    };
    match cert {
        Certificate::FCycle { path, .. } => {
            if path.len() < 2 {
                return Err(M::TooShort);
            }
            for &s in path {
                vertex(s)?;
            }
            let (first, last) = (path[0], path[path.len() - 1]);
            if !mediator.same_cell(first, last) {
                return Err(M::NotSameFCell(first, last));
            }
            let mut product = Rational::one();
            for w in path.windows(2) {
                product *= step(w[0], w[1])?;
            }
            Ok(product)
        }
        Certificate::FLoop { pairs, .. } => {
            if pairs.len() < 2 {
                return Err(M::TooShort);
            }
            let comps = ckcs(graph);
            let mut product = Rational::one();
            for (i, &(enter, exit)) in pairs.iter().enumerate() {
                vertex(enter)?;
                vertex(exit)?;
                if !comps.same_component(enter, exit) {
                    return Err(M::NotSameComponent(enter, exit));
                }
                let next = pairs[(i + 1) % pairs.len()].0;
                vertex(next)?;
                if comps.same_component(exit, next) {
                    return Err(M::SameComponent(exit, next));
                }
                if !mediator.same_cell(exit, next) {
                    return Err(M::NotSameFCell(exit, next));
                }
                let path = shortest_path(graph, enter, exit).ok_or(M::NotSameComponent(enter, exit))?;
                for w in path.windows(2) {
                    product *= step(w[0], w[1])?;
                }
            }
            Ok(product)
        }
    }
}

fn shortest_path(graph: &InfoGraph, from: State, to: State) -> Option<Vec<State>> {
    let mut prev = vec![None; graph.num_states()];
    let mut queue = VecDeque::from([from]);
    prev[from] = Some(from);
    while let Some(u) = queue.pop_front() {
        if u == to {
            let mut path = vec![to];
            let mut c = to;
            while c != from {
                c = prev[c]?;
                path.push(c);
            }
            path.reverse();
            return Some(path);
        }
        for &v in graph.neighbors(u) {
            if prev[v].is_none() {
                prev[v] = Some(u);
                queue.push_back(v);
            }
        }
    }
    None
}
