//! Posterior-likelihood (PL) functions and the two product conditions on
//! them: internal consistency along F-cycles and external consistency along
//! F-loops. When both hold, [`solve_f`] returns an F-measurable positive `f`
//! with `φ(ω, ω′) = f(ω) / f(ω′)` on every edge.

mod brute;
mod certificate;
mod ratio_dsu;

use std::collections::{HashMap, VecDeque};

use thiserror::Error;

use crate::infograph::{ckcs, CkcPartition, InfoGraph};
use crate::model::{Distribution, Partition, State};
use crate::rational::Rational;

pub use brute::brute_force_check;
pub use certificate::{evaluate_certificate, Certificate, CertificateKind, MalformedCertificate};
use ratio_dsu::{Merge, RatioUnionFind};

/// Values on directed edges; `get(a, b)` is `φ(a, b)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PlFunction {
    values: HashMap<(State, State), Rational>,
}

impl PlFunction {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, a: State, b: State, value: Rational) {
        self.values.insert((a, b), value);
    }

    /// Sets `φ(a, b) = value` and `φ(b, a) = 1 / value`.
    pub fn insert_pair(&mut self, a: State, b: State, value: Rational) {
        let back = value.recip().expect("PL values are positive");
        self.values.insert((a, b), value);
        self.values.insert((b, a), back);
    }

    pub fn get(&self, a: State, b: State) -> Option<&Rational> {
        self.values.get(&(a, b))
    }

    pub(crate) fn at(&self, a: State, b: State) -> &Rational {
        self.values
            .get(&(a, b))
            .unwrap_or_else(|| panic!("PL function undefined on ({a}, {b})"))
    }

    /// `φ(a, b) = f(a) / f(b)` on every edge of `graph`.
    pub fn from_labeling(graph: &InfoGraph, f: &[Rational]) -> Self {
        let mut phi = PlFunction::new();
        for (a, b, _) in graph.edges() {
            phi.insert_pair(a, b, f[a].checked_div(&f[b]).expect("positive labeling"));
        }
        phi
    }

    /// Product of `φ` along consecutive states of `path`.
    pub fn path_product(&self, path: &[State]) -> Rational {
        path.windows(2).map(|w| self.at(w[0], w[1])).product()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlError {
    #[error("phi undefined on edge ({0}, {1})")]
    MissingValue(State, State),
    #[error("phi({0}, {1}) = {2} is not positive")]
    NonPositive(State, State, Rational),
    #[error("phi({0}, {1}) * phi({1}, {0}) = {2}, not 1")]
    ReciprocityViolation(State, State, Rational),
}

/// Checks presence, positivity and `φ(ω, ω′) φ(ω′, ω) = 1` on every edge.
pub fn check_reciprocity(graph: &InfoGraph, phi: &PlFunction) -> Result<(), PlError> {
    for (a, b, _) in graph.edges() {
        let ab = phi.get(a, b).ok_or(PlError::MissingValue(a, b))?;
        let ba = phi.get(b, a).ok_or(PlError::MissingValue(b, a))?;
        for (x, y, v) in [(a, b, ab), (b, a, ba)] {
            if !v.is_positive() {
                return Err(PlError::NonPositive(x, y, v.clone()));
            }
        }
        let product = ab * ba;
        if !product.is_one() {
            return Err(PlError::ReciprocityViolation(a, b, product));
        }
    }
    Ok(())
}

/// Per-component labels `g` with `φ(ω, ω′) = g(ω) / g(ω′)` inside each
/// component, anchored at `g = 1` on the component's smallest state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtendedPl {
    ckcs: CkcPartition,
    g: Vec<Rational>,
    parent: Vec<Option<State>>,
    depth: Vec<usize>,
}

impl ExtendedPl {
    pub fn ckcs(&self) -> &CkcPartition {
        &self.ckcs
    }

    /// Zero for states outside the graph.
    pub fn g(&self, s: State) -> &Rational {
        &self.g[s]
    }

    /// Path between two states of one component along the BFS tree.
    pub fn tree_path(&self, from: State, to: State) -> Vec<State> {
        let (mut a, mut b) = (from, to);
        let mut up = vec![a];
        let mut down = vec![b];
        while self.depth[a] > self.depth[b] {
            a = self.parent[a].expect("non-root has a parent");
            up.push(a);
        }
        while self.depth[b] > self.depth[a] {
            b = self.parent[b].expect("non-root has a parent");
            down.push(b);
        }
        while a != b {
            a = self.parent[a].expect("same component");
            b = self.parent[b].expect("same component");
            up.push(a);
            down.push(b);
        }
        down.pop();
        up.extend(down.into_iter().rev());
        up
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtendError {
    #[error("states {0} and {1} are in different components")]
    NotSameComponent(State, State),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0} is not a component index")]
pub struct NotAComponent(pub usize);

fn rotate_cycle(closed: Vec<State>) -> Vec<State> {
    let body = &closed[..closed.len() - 1];
    let start = (0..body.len()).min_by_key(|&i| body[i]).unwrap_or(0);
    let mut out: Vec<State> = body[start..].iter().chain(&body[..start]).copied().collect();
    out.push(out[0]);
    out
}

/// Internal consistency. Builds a BFS tree per component from its smallest
/// state, then checks every non-tree edge and every pair of same-component
/// states sharing an F-cell. A failure comes back as an F-cycle.
pub fn check_inc(graph: &InfoGraph, mediator: &Partition, phi: &PlFunction) -> Result<ExtendedPl, Certificate> {
    let ckcs = ckcs(graph);
    let n = graph.num_states();
    let mut g = vec![Rational::zero(); n];
    let mut parent = vec![None; n];
    let mut depth = vec![0usize; n];
    let mut seen = vec![false; n];
    for comp in ckcs.components() {
        let root = comp[0];
        g[root] = Rational::one();
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &v in graph.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    g[v] = &g[u] * phi.at(v, u);
                    parent[v] = Some(u);
                    depth[v] = depth[u] + 1;
                    queue.push_back(v);
                }
            }
        }
    }
    let ext = ExtendedPl {
        ckcs,
        g,
        parent,
        depth,
    };

    for (u, v, _) in graph.edges() {
        if ext.parent[v] == Some(u) || ext.parent[u] == Some(v) {
            continue;
        }
        let expected = ext.g[u].checked_div(&ext.g[v]).expect("positive labels");
        if phi.at(u, v) != &expected {
            let mut closed = vec![u];
            closed.extend(ext.tree_path(v, u));
            let path = rotate_cycle(closed);
            let product = phi.path_product(&path);
            return Err(Certificate::FCycle { path, product });
        }
    }

    for cell in mediator.cells() {
        let mut first_in: HashMap<usize, State> = HashMap::new();
        for &s in cell.iter().filter(|&&s| graph.contains(s)) {
            let c = ext.ckcs.component_of(s).expect("vertex has a component");
            match first_in.get(&c) {
                None => {
                    first_in.insert(c, s);
                }
                Some(&first) if ext.g[first] != ext.g[s] => {
                    let path = ext.tree_path(first, s);
                    let product = phi.path_product(&path);
                    return Err(Certificate::FCycle { path, product });
                }
                Some(_) => {}
            }
        }
    }
    Ok(ext)
}

/// `φ` extended to any two states of one component: `g(a) / g(b)`.
pub fn extend_pl(ext: &ExtendedPl, a: State, b: State) -> Result<Rational, ExtendError> {
    if !ext.ckcs.same_component(a, b) {
        return Err(ExtendError::NotSameComponent(a, b));
    }
    Ok(ext.g[a].checked_div(&ext.g[b]).expect("positive labels"))
}

/// Relative scale of each component, one per component index. Within each
/// group of components linked by F-cells the smallest component has scale 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentScales(pub Vec<Rational>);

/// External consistency. Components are merged through shared F-cells with
/// the constraint `scale(C) g(ω) = scale(C′) g(ω′)`; a merge that contradicts
/// an earlier one is turned into an F-loop through the merge forest.
pub fn check_exc(graph: &InfoGraph, mediator: &Partition, ext: &ExtendedPl) -> Result<ComponentScales, Certificate> {
    let k = ext.ckcs.len();
    let mut uf = RatioUnionFind::new(k);
    // forest[c] = (neighbour component, state in c, state in neighbour)
    let mut forest: Vec<Vec<(usize, State, State)>> = vec![Vec::new(); k];
    for cell in mediator.cells() {
        let members: Vec<State> = cell.iter().copied().filter(|&s| graph.contains(s)).collect();
        let Some(&a) = members.first() else { continue };
        let ca = ext.ckcs.component_of(a).expect("vertex");
        for &b in &members[1..] {
            let cb = ext.ckcs.component_of(b).expect("vertex");
            if ca == cb {
                continue;
            }
            let want = ext.g[b].checked_div(&ext.g[a]).expect("positive labels");
            match uf.relate(ca, cb, &want) {
                Merge::Joined => {
                    forest[ca].push((cb, a, b));
                    forest[cb].push((ca, b, a));
                }
                Merge::Consistent => {}
                Merge::Conflict(_) => {
                    let pairs = loop_through_forest(&forest, ext, a, b);
                    let product = pairs
                        .iter()
                        .map(|&(x, y)| extend_pl(ext, x, y).expect("pair inside a component"))
                        .product();
                    return Err(Certificate::FLoop { pairs, product });
                }
            }
        }
    }

    let mut anchor_of_root: HashMap<usize, Rational> = HashMap::new();
    let mut scales = Vec::with_capacity(k);
    for c in 0..k {
        let (root, x) = uf.find(c);
        let anchor = anchor_of_root.entry(root).or_insert_with(|| x.clone());
        scales.push(x.checked_div(anchor).expect("positive scales"));
    }
    Ok(ComponentScales(scales))
}

/// F-loop closing the conflicting step `a -> b` with the forest path from
/// `C(b)` back to `C(a)`, rotated so the smallest pair comes first.
fn loop_through_forest(forest: &[Vec<(usize, State, State)>], ext: &ExtendedPl, a: State, b: State) -> Vec<(State, State)> {
    let ca = ext.ckcs.component_of(a).expect("vertex");
    let cb = ext.ckcs.component_of(b).expect("vertex");
    let mut came_from: HashMap<usize, (usize, State, State)> = HashMap::new();
    let mut queue = VecDeque::from([cb]);
    came_from.insert(cb, (cb, b, b));
    while let Some(c) = queue.pop_front() {
        if c == ca {
            break;
        }
        for &(next, here, there) in &forest[c] {
            if let std::collections::hash_map::Entry::Vacant(e) = came_from.entry(next) {
                e.insert((c, here, there));
                queue.push_back(next);
            }
        }
    }
    // steps from C(b) to C(a): (exit state, entry state)
    let mut steps = Vec::new();
    let mut c = ca;
    while c != cb {
        let (prev, exit, entry) = came_from[&c];
        steps.push((exit, entry));
        c = prev;
    }
    steps.reverse();

    let mut pairs = Vec::with_capacity(steps.len() + 1);
    let mut enter = b;
    for (exit, entry) in steps {
        pairs.push((enter, exit));
        enter = entry;
    }
    pairs.push((enter, a));
    let start = (0..pairs.len()).min_by_key(|&i| pairs[i]).unwrap_or(0);
    pairs.rotate_left(start);
    pairs
}

/// A strictly positive F-measurable labeling of the graph's vertices; zero
/// on states outside the graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FLabeling(pub Vec<Rational>);

impl FLabeling {
    pub fn values(&self) -> &[Rational] {
        &self.0
    }

    pub fn max(&self) -> Rational {
        self.0.iter().max().cloned().unwrap_or_else(Rational::zero)
    }

    /// Rescaled so the largest value is 1.
    pub fn canonical(&self) -> FLabeling {
        let m = self.max();
        if m.is_zero() {
            return self.clone();
        }
        FLabeling(self.0.iter().map(|v| v.checked_div(&m).unwrap()).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConsistencyFailure {
    #[error(transparent)]
    Invalid(#[from] PlError),
    #[error("consistency violated, product {}", .0.product())]
    Violation(Certificate),
}

impl From<Certificate> for ConsistencyFailure {
    fn from(c: Certificate) -> Self {
        ConsistencyFailure::Violation(c)
    }
}

/// Both checks, then `f(ω) = scale(C(ω)) g(ω)`.
pub fn solve_f(graph: &InfoGraph, mediator: &Partition, phi: &PlFunction) -> Result<FLabeling, ConsistencyFailure> {
    check_reciprocity(graph, phi)?;
    let ext = check_inc(graph, mediator, phi)?;
    let scales = check_exc(graph, mediator, &ext)?;
    let mut f = vec![Rational::zero(); graph.num_states()];
    for s in graph.vertices() {
        let c = ext.ckcs.component_of(s).expect("vertex");
        f[s] = &scales.0[c] * &ext.g[s];
    }
    for cell in mediator.cells() {
        let mut inside = cell.iter().filter(|&&s| graph.contains(s));
        if let Some(&first) = inside.next() {
            assert!(inside.all(|&s| f[s] == f[first]), "f not constant on an F-cell");
        }
    }
    for (a, b, _) in graph.edges() {
        assert_eq!(phi.at(a, b) * &f[b], f[a], "edge identity fails on ({a}, {b})");
    }
    Ok(FLabeling(f))
}

/// `μ_φ(· | C)`: the labels of component `c`, normalized.
pub fn induced_component_distribution(ext: &ExtendedPl, c: usize) -> Result<Distribution, NotAComponent> {
    let comp = ext.ckcs.components().get(c).ok_or(NotAComponent(c))?;
    induced_with_anchor(ext, c, comp[0])
}

/// Same as [`induced_component_distribution`], computed relative to an
/// explicit anchor in the component.
pub fn induced_with_anchor(ext: &ExtendedPl, c: usize, anchor: State) -> Result<Distribution, NotAComponent> {
    let comp = ext.ckcs.components().get(c).ok_or(NotAComponent(c))?;
    if ext.ckcs.component_of(anchor) != Some(c) {
        return Err(NotAComponent(c));
    }
    let weights: Vec<(State, Rational)> = comp
        .iter()
        .map(|&w| (w, extend_pl(ext, w, anchor).expect("same component")))
        .collect();
    let total: Rational = weights.iter().map(|(_, v)| v).sum();
    let mut d = Distribution::zeros(ext.g.len());
    for (w, v) in weights {
        d.set(w, v.checked_div(&total).expect("positive total"));
    }
    Ok(d)
}
