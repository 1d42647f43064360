//! Additive cycle consistency on directed graphs and exact potentials of
//! finite strategic games through their unilateral-deviation graph.

use std::collections::{HashMap, VecDeque};

use thiserror::Error;

use crate::io::RawGame;
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategicGame {
    players: Vec<String>,
    /// Sorted per player.
    actions: Vec<Vec<String>>,
    /// `payoffs[profile][player]`, profiles in mixed radix with the first
    /// player most significant.
    payoffs: Vec<Vec<Rational>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("a game needs at least one player")]
    NoPlayers,
    #[error("player {0:?} listed more than once")]
    DuplicatePlayer(String),
    #[error("player {0:?} has no actions")]
    NoActions(String),
    #[error("player {player:?} lists action {action:?} twice")]
    DuplicateAction { player: String, action: String },
    #[error("actions given for unknown player {0:?}")]
    UnknownPlayer(String),
    #[error("malformed profile key {0:?}")]
    BadProfile(String),
    #[error("no payoff for player {player:?} at profile {profile:?}")]
    MissingPayoff { profile: String, player: String },
    #[error("payoff table has {got} profiles, expected {expected}")]
    WrongShape { expected: usize, got: usize },
}

impl StrategicGame {
    /// `payoffs[profile][player]` in the canonical profile order.
    pub fn new(players: Vec<String>, actions: Vec<Vec<String>>, payoffs: Vec<Vec<Rational>>) -> Result<Self, GameError> {
        if players.is_empty() {
            return Err(GameError::NoPlayers);
        }
        for (i, p) in players.iter().enumerate() {
            if players[..i].contains(p) {
                return Err(GameError::DuplicatePlayer(p.clone()));
            }
        }
        let mut sorted = Vec::with_capacity(actions.len());
        for (p, acts) in players.iter().zip(&actions) {
            if acts.is_empty() {
                return Err(GameError::NoActions(p.clone()));
            }
            let mut a = acts.clone();
            a.sort();
            if let Some(w) = a.windows(2).find(|w| w[0] == w[1]) {
                return Err(GameError::DuplicateAction {
                    player: p.clone(),
                    action: w[0].clone(),
                });
            }
            sorted.push(a);
        }
        if sorted.len() != players.len() {
            return Err(GameError::NoActions(players[sorted.len()].clone()));
        }
        let expected: usize = sorted.iter().map(Vec::len).product();
        if payoffs.len() != expected || payoffs.iter().any(|row| row.len() != players.len()) {
            return Err(GameError::WrongShape {
                expected,
                got: payoffs.len(),
            });
        }
        Ok(StrategicGame {
            players,
            actions: sorted,
            payoffs,
        })
    }

    pub fn from_raw(raw: &RawGame) -> Result<Self, GameError> {
        if let Some(extra) = raw.actions.keys().find(|k| !raw.players.contains(k)) {
            return Err(GameError::UnknownPlayer(extra.clone()));
        }
        let actions: Vec<Vec<String>> = raw
            .players
            .iter()
            .map(|p| raw.actions.get(p).cloned().unwrap_or_default())
            .collect();
        let total: usize = actions.iter().map(Vec::len).product();
        let skeleton = StrategicGame::new(
            raw.players.clone(),
            actions,
            vec![vec![Rational::zero(); raw.players.len()]; total],
        )?;
        let mut payoffs = vec![Vec::new(); total];
        for (idx, row) in payoffs.iter_mut().enumerate() {
            let key = skeleton.profile_key(idx);
            let entry = raw.payoffs.get(&key).ok_or_else(|| GameError::MissingPayoff {
                profile: key.clone(),
                player: raw.players[0].clone(),
            })?;
            for p in &raw.players {
                let v = entry.get(p).ok_or_else(|| GameError::MissingPayoff {
                    profile: key.clone(),
                    player: p.clone(),
                })?;
                row.push(v.clone());
            }
        }
        if let Some(bad) = raw.payoffs.keys().find(|k| skeleton.profile_index(k).is_none()) {
            return Err(GameError::BadProfile(bad.clone()));
        }
        StrategicGame::new(raw.players.clone(), skeleton.actions, payoffs)
    }

    pub fn to_raw(&self) -> RawGame {
        RawGame {
            players: self.players.clone(),
            actions: self.players.iter().cloned().zip(self.actions.iter().cloned()).collect(),
            payoffs: (0..self.num_profiles())
                .map(|idx| {
                    let row = self
                        .players
                        .iter()
                        .cloned()
                        .zip(self.payoffs[idx].iter().cloned())
                        .collect();
                    (self.profile_key(idx), row)
                })
                .collect(),
        }
    }

    pub fn players(&self) -> &[String] {
        &self.players
    }

    pub fn actions(&self, player: usize) -> &[String] {
        &self.actions[player]
    }

    pub fn num_profiles(&self) -> usize {
        self.actions.iter().map(Vec::len).product()
    }

    /// Action indices of profile `idx`.
    pub fn profile(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.actions.len()];
        for p in (0..self.actions.len()).rev() {
            let k = self.actions[p].len();
            out[p] = idx % k;
            idx /= k;
        }
        out
    }

    pub fn index(&self, profile: &[usize]) -> usize {
        profile
            .iter()
            .zip(&self.actions)
            .fold(0, |acc, (&a, acts)| acc * acts.len() + a)
    }

    pub fn profile_key(&self, idx: usize) -> String {
        self.profile(idx)
            .iter()
            .zip(&self.actions)
            .map(|(&a, acts)| acts[a].as_str())
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn profile_index(&self, key: &str) -> Option<usize> {
        let parts: Vec<&str> = key.split(',').collect();
        if parts.len() != self.actions.len() {
            return None;
        }
        let prof = parts
            .iter()
            .zip(&self.actions)
            .map(|(a, acts)| acts.iter().position(|x| x == a))
            .collect::<Option<Vec<_>>>()?;
        Some(self.index(&prof))
    }

    pub fn payoff(&self, profile: usize, player: usize) -> &Rational {
        &self.payoffs[profile][player]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeviationEdge {
    pub from: usize,
    pub to: usize,
    pub player: usize,
}

/// Profiles joined when they differ in one player's action; `rho(a, a′)` is
/// that player's payoff at `a` minus at `a′`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviationGraph {
    pub num_vertices: usize,
    /// Each undirected edge once, `from < to`.
    pub edges: Vec<DeviationEdge>,
    pub rho: HashMap<(usize, usize), Rational>,
}

pub fn build_deviation_graph(game: &StrategicGame) -> DeviationGraph {
    let n = game.num_profiles();
    let mut edges = Vec::new();
    let mut rho = HashMap::new();
    for a in 0..n {
        let prof = game.profile(a);
        for p in 0..prof.len() {
            for alt in (prof[p] + 1)..game.actions[p].len() {
                let mut other = prof.clone();
                other[p] = alt;
                let b = game.index(&other);
                let d = game.payoff(a, p) - game.payoff(b, p);
                rho.insert((b, a), -&d);
                rho.insert((a, b), d);
                edges.push(DeviationEdge { from: a, to: b, player: p });
            }
        }
    }
    edges.sort_by_key(|e| (e.from, e.to));
    DeviationGraph {
        num_vertices: n,
        edges,
        rho,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdditiveError {
    #[error("rho undefined on ({0}, {1})")]
    MissingValue(usize, usize),
    #[error("rho({0}, {1}) + rho({1}, {0}) = {2}, not 0")]
    AntisymmetryViolation(usize, usize, Rational),
    #[error("cycle {cycle:?} sums to {sum}")]
    Cycle { cycle: Vec<usize>, sum: Rational },
}

/// Heights `h` with `h(a) - h(b) = rho(a, b)` on every edge, zero at the
/// smallest vertex of each component. `edges` are undirected pairs.
pub fn check_inc_add(
    num_vertices: usize,
    edges: &[(usize, usize)],
    rho: &HashMap<(usize, usize), Rational>,
) -> Result<Vec<Rational>, AdditiveError> {
    let value = |a: usize, b: usize| rho.get(&(a, b)).ok_or(AdditiveError::MissingValue(a, b));
    let mut adj = vec![Vec::new(); num_vertices];
    for &(a, b) in edges {
        let s = value(a, b)? + value(b, a)?;
        if !s.is_zero() {
            return Err(AdditiveError::AntisymmetryViolation(a, b, s));
        }
        adj[a].push(b);
        adj[b].push(a);
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    let mut h = vec![Rational::zero(); num_vertices];
    let mut parent = vec![None; num_vertices];
    let mut depth = vec![0usize; num_vertices];
    let mut seen = vec![false; num_vertices];
    for root in 0..num_vertices {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    h[v] = &h[u] - value(u, v)?;
                    parent[v] = Some(u);
                    depth[v] = depth[u] + 1;
                    queue.push_back(v);
                }
            }
        }
    }
    for &(a, b) in edges {
        if parent[b] == Some(a) || parent[a] == Some(b) {
            continue;
        }
        if &(&h[a] - &h[b]) != value(a, b)? {
            let mut cycle = vec![a];
            cycle.extend(tree_path(&parent, &depth, b, a));
            let cycle = rotate(cycle);
            let sum = cycle.windows(2).map(|w| &rho[&(w[0], w[1])]).sum();
            return Err(AdditiveError::Cycle { cycle, sum });
        }
    }
    Ok(h)
}

fn tree_path(parent: &[Option<usize>], depth: &[usize], from: usize, to: usize) -> Vec<usize> {
    let (mut a, mut b) = (from, to);
    let mut up = vec![a];
    let mut down = vec![b];
    while depth[a] > depth[b] {
        a = parent[a].unwrap();
        up.push(a);
    }
    while depth[b] > depth[a] {
        b = parent[b].unwrap();
        down.push(b);
    }
    while a != b {
        a = parent[a].unwrap();
        b = parent[b].unwrap();
        up.push(a);
        down.push(b);
    }
    down.pop();
    up.extend(down.into_iter().rev());
    up
}

fn rotate(closed: Vec<usize>) -> Vec<usize> {
    let body = &closed[..closed.len() - 1];
    let start = (0..body.len()).min_by_key(|&i| body[i]).unwrap_or(0);
    let mut out: Vec<usize> = body[start..].iter().chain(&body[..start]).copied().collect();
    out.push(out[0]);
    out
}

/// Potential anchored at zero on the first profile, or a deviation cycle
/// along which payoff differences do not cancel.
pub fn recover_potential(game: &StrategicGame) -> Result<Vec<Rational>, AdditiveError> {
    let dg = build_deviation_graph(game);
    let pairs: Vec<(usize, usize)> = dg.edges.iter().map(|e| (e.from, e.to)).collect();
    let g = check_inc_add(dg.num_vertices, &pairs, &dg.rho)?;
    verify_potential(game, &g).expect("heights satisfy every deviation edge");
    Ok(g)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("potential fails when player {player} moves from profile {from} to {to}")]
pub struct FailingEdge {
    pub from: usize,
    pub player: usize,
    pub to: usize,
}

pub fn verify_potential(game: &StrategicGame, g: &[Rational]) -> Result<(), FailingEdge> {
    for e in build_deviation_graph(game).edges {
        let du = game.payoff(e.from, e.player) - game.payoff(e.to, e.player);
        if &g[e.from] - &g[e.to] != du {
            return Err(FailingEdge {
                from: e.from,
                player: e.player,
                to: e.to,
            });
        }
    }
    Ok(())
}
