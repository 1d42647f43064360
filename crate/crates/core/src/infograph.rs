//! The graph of information, its connected components (the common-knowledge
//! components) and the graph linking components through mediator cells.

use std::collections::{BTreeMap, VecDeque};

use crate::model::{Model, Partition, PlayerIx, State};

pub use crate::model::restrict_players;

/// Undirected graph on a subset of the states. An edge joins two distinct
/// states that some player cannot tell apart.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfoGraph {
    active: Vec<bool>,
    edges: BTreeMap<(State, State), Vec<PlayerIx>>,
    adjacency: Vec<Vec<State>>,
}

impl InfoGraph {
    fn from_edges(active: Vec<bool>, edges: BTreeMap<(State, State), Vec<PlayerIx>>) -> Self {
        let mut adjacency = vec![Vec::new(); active.len()];
        for &(a, b) in edges.keys() {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        InfoGraph {
            active,
            edges,
            adjacency,
        }
    }

    /// Size of the ambient state space (not the vertex count).
    pub fn num_states(&self) -> usize {
        self.active.len()
    }

    pub fn contains(&self, s: State) -> bool {
        self.active[s]
    }

    pub fn vertices(&self) -> impl Iterator<Item = State> + '_ {
        (0..self.active.len()).filter(|&s| self.active[s])
    }

    pub fn vertex_mask(&self) -> &[bool] {
        &self.active
    }

    pub fn has_edge(&self, a: State, b: State) -> bool {
        a != b && self.edges.contains_key(&(a.min(b), a.max(b)))
    }

    /// Players whose cell contains both endpoints.
    pub fn edge_players(&self, a: State, b: State) -> Option<&[PlayerIx]> {
        self.edges.get(&(a.min(b), a.max(b))).map(Vec::as_slice)
    }

    /// Each undirected edge once, as `(a, b, players)` with `a < b`.
    pub fn edges(&self) -> impl Iterator<Item = (State, State, &[PlayerIx])> + '_ {
        self.edges.iter().map(|(&(a, b), p)| (a, b, p.as_slice()))
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, s: State) -> &[State] {
        &self.adjacency[s]
    }

    /// Induced subgraph on the states flagged in `keep`.
    pub fn restrict_states(&self, keep: &[bool]) -> InfoGraph {
        let active: Vec<bool> = self.active.iter().zip(keep).map(|(&a, &k)| a && k).collect();
        let edges = self
            .edges
            .iter()
            .filter(|(&(a, b), _)| active[a] && active[b])
            .map(|(&k, v)| (k, v.clone()))
            .collect();
        InfoGraph::from_edges(active, edges)
    }
}

pub fn build_graph(model: &Model) -> InfoGraph {
    let mut edges: BTreeMap<(State, State), Vec<PlayerIx>> = BTreeMap::new();
    for p in 0..model.num_players() {
        for cell in model.partition(p).cells() {
            for (i, &a) in cell.iter().enumerate() {
                for &b in &cell[i + 1..] {
                    edges.entry((a.min(b), a.max(b))).or_default().push(p);
                }
            }
        }
    }
    InfoGraph::from_edges(vec![true; model.num_states()], edges)
}

/// See [`InfoGraph::restrict_states`].
pub fn restrict_states(graph: &InfoGraph, keep: &[bool]) -> InfoGraph {
    graph.restrict_states(keep)
}

/// Connected components of an [`InfoGraph`], numbered by smallest member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CkcPartition {
    components: Vec<Vec<State>>,
    component_of: Vec<Option<usize>>,
}

impl CkcPartition {
    pub fn components(&self) -> &[Vec<State>] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// `None` for states outside the graph.
    pub fn component_of(&self, s: State) -> Option<usize> {
        self.component_of[s]
    }

    pub fn same_component(&self, a: State, b: State) -> bool {
        matches!((self.component_of[a], self.component_of[b]), (Some(x), Some(y)) if x == y)
    }
}

pub fn ckcs(graph: &InfoGraph) -> CkcPartition {
    let mut component_of = vec![None; graph.num_states()];
    let mut components = Vec::new();
    for start in graph.vertices() {
        if component_of[start].is_some() {
            continue;
        }
        let id = components.len();
        let mut members = vec![start];
        component_of[start] = Some(id);
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in graph.neighbors(u) {
                if component_of[v].is_none() {
                    component_of[v] = Some(id);
                    members.push(v);
                    queue.push_back(v);
                }
            }
        }
        members.sort_unstable();
        components.push(members);
    }
    CkcPartition {
        components,
        component_of,
    }
}

/// Components joined by mediator cells. Edge keys are `(C, C′)` with
/// `C < C′`; values list every F-cell index that touches both.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentGraph {
    num_components: usize,
    edges: BTreeMap<(usize, usize), Vec<usize>>,
}

impl ComponentGraph {
    pub fn num_components(&self) -> usize {
        self.num_components
    }

    pub fn edges(&self) -> &BTreeMap<(usize, usize), Vec<usize>> {
        &self.edges
    }

    pub fn witnesses(&self, a: usize, b: usize) -> Option<&[usize]> {
        self.edges.get(&(a.min(b), a.max(b))).map(Vec::as_slice)
    }
}

/// Only states that are vertices of `graph` take part, so a graph restricted
/// to Ω₊ sees F restricted to Ω₊.
pub fn component_graph(graph: &InfoGraph, ckcs: &CkcPartition, mediator: &Partition) -> ComponentGraph {
    let mut edges: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (f_ix, cell) in mediator.cells().iter().enumerate() {
        let mut touched: Vec<usize> = cell
            .iter()
            .filter(|&&s| graph.contains(s))
            .filter_map(|&s| ckcs.component_of(s))
            .collect();
        touched.sort_unstable();
        touched.dedup();
        for (i, &a) in touched.iter().enumerate() {
            for &b in &touched[i + 1..] {
                edges.entry((a, b)).or_default().push(f_ix);
            }
        }
    }
    ComponentGraph {
        num_components: ckcs.len(),
        edges,
    }
}
