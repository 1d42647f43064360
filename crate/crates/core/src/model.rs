//! States, partitions, common prior, joint beliefs and signaling kernels.
//!
//! State identifiers are opaque strings. A validated [`Model`] stores them in
//! lexicographic order and every other structure refers to states by their
//! index in that order, so "smallest state" always means "smallest index".

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::io::{RawInstance, RawJointBelief};
use crate::rational::Rational;

/// Index of a state in [`Model::states`].
pub type State = usize;
/// Index of a player in [`Model::players`].
pub type PlayerIx = usize;

/// A partition of the state space, cells sorted by their smallest member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    cells: Vec<Vec<State>>,
    cell_of: Vec<usize>,
}

impl Partition {
    /// Builds a partition from cells already known to be disjoint, non-empty
    /// and covering `0..num_states`.
    pub fn from_cells(num_states: usize, cells: impl IntoIterator<Item = Vec<State>>) -> Self {
        let mut cells: Vec<Vec<State>> = cells
            .into_iter()
            .map(|mut c| {
                c.sort_unstable();
                c.dedup();
                c
            })
            .filter(|c| !c.is_empty())
            .collect();
        cells.sort();
        let mut cell_of = vec![usize::MAX; num_states];
        for (ix, cell) in cells.iter().enumerate() {
            for &s in cell {
                cell_of[s] = ix;
            }
        }
        debug_assert!(cell_of.iter().all(|&c| c != usize::MAX), "partition does not cover");
        Partition { cells, cell_of }
    }

    pub fn discrete(num_states: usize) -> Self {
        Self::from_cells(num_states, (0..num_states).map(|s| vec![s]))
    }

    pub fn trivial(num_states: usize) -> Self {
        Self::from_cells(num_states, [(0..num_states).collect()])
    }

    pub fn cells(&self) -> &[Vec<State>] {
        &self.cells
    }

    pub fn num_states(&self) -> usize {
        self.cell_of.len()
    }

    pub fn cell_index(&self, state: State) -> usize {
        self.cell_of[state]
    }

    pub fn cell_of(&self, state: State) -> &[State] {
        &self.cells[self.cell_of[state]]
    }

    pub fn same_cell(&self, a: State, b: State) -> bool {
        self.cell_of[a] == self.cell_of[b]
    }

    /// Returns the index of a cell that `set` splits, if any.
    pub fn split_cell(&self, set: &[bool]) -> Option<usize> {
        self.cells.iter().position(|cell| {
            let inside = cell.iter().filter(|&&s| set[s]).count();
            inside != 0 && inside != cell.len()
        })
    }
}

/// Probability vector over the whole state space, indexed by [`State`].
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Distribution(Vec<Rational>);

impl Distribution {
    pub fn new(probs: Vec<Rational>) -> Self {
        Distribution(probs)
    }

    pub fn zeros(num_states: usize) -> Self {
        Distribution(vec![Rational::zero(); num_states])
    }

    pub fn point(num_states: usize, state: State) -> Self {
        let mut d = Self::zeros(num_states);
        d.0[state] = Rational::one();
        d
    }

    pub fn probs(&self) -> &[Rational] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, state: State) -> &Rational {
        &self.0[state]
    }

    pub fn set(&mut self, state: State, value: Rational) {
        self.0[state] = value;
    }

    pub fn total(&self) -> Rational {
        self.0.iter().sum()
    }

    pub fn support(&self) -> impl Iterator<Item = State> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.is_zero())
            .map(|(s, _)| s)
    }

    /// Expectation of `payoff` (indexed by state).
    pub fn expect(&self, payoff: &[Rational]) -> Rational {
        self.0.iter().zip(payoff).map(|(p, u)| p * u).sum()
    }

    /// Rescales to total mass one; `None` when the mass is zero.
    pub fn normalized(&self) -> Option<Distribution> {
        let total = self.total();
        if total.is_zero() {
            return None;
        }
        Some(Distribution(
            self.0.iter().map(|p| p.checked_div(&total).unwrap()).collect(),
        ))
    }
}

/// One joint-belief entry: a belief, or the empty marker used when the
/// conditioning event has zero likelihood.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum BeliefEntry {
    Dist(Distribution),
    Empty,
}

impl BeliefEntry {
    /// Probability of `state`; zero for the empty marker.
    pub fn mass(&self, state: State) -> Rational {
        match self {
            BeliefEntry::Dist(d) => d.get(state).clone(),
            BeliefEntry::Empty => Rational::zero(),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, BeliefEntry::Empty)
    }

    pub fn as_dist(&self) -> Option<&Distribution> {
        match self {
            BeliefEntry::Dist(d) => Some(d),
            BeliefEntry::Empty => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    states: Vec<String>,
    state_index: HashMap<String, State>,
    players: Vec<String>,
    partitions: Vec<Partition>,
    mediator: Partition,
    prior: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PartitionOwner {
    Player(String),
    Mediator,
}

impl fmt::Display for PartitionOwner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartitionOwner::Player(p) => write!(f, "player {p}"),
            PartitionOwner::Mediator => write!(f, "mediator"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelViolation {
    #[error("state space is empty")]
    EmptyStateSpace,
    #[error("state {0:?} listed more than once")]
    DuplicateState(String),
    #[error("{owner}: unknown state {state:?}")]
    UnknownState { owner: PartitionOwner, state: String },
    #[error("{owner}: empty cell")]
    EmptyCell { owner: PartitionOwner },
    #[error("{owner}: state {state:?} lies in more than one cell")]
    OverlappingCells { owner: PartitionOwner, state: String },
    #[error("{owner}: state {state:?} is not covered")]
    UncoveredState { owner: PartitionOwner, state: String },
    #[error("prior: no probability for state {0:?}")]
    MissingPrior(String),
    #[error("prior: unknown state {0:?}")]
    UnknownPriorState(String),
    #[error("prior of state {state:?} is {value}, must be positive")]
    ZeroOrNegativePrior { state: String, value: Rational },
    #[error("prior sums to {sum}, not 1")]
    PriorNotNormalized { sum: Rational },
    #[error("{count} player(s); at least two are required")]
    FewerThanTwoPlayers { count: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid model: {}", join_errors(.0))]
pub struct InvalidModel(pub Vec<ModelViolation>);

pub(crate) fn join_errors<E: fmt::Display>(errors: &[E]) -> String {
    errors
        .iter()
        .map(|e| e.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Validates a raw instance into a [`Model`], collecting every violation.
pub fn validate_model(raw: &RawInstance) -> Result<Model, InvalidModel> {
    let mut violations = Vec::new();

    let mut names: Vec<String> = Vec::with_capacity(raw.states.len());
    let mut seen = BTreeSet::new();
    for s in &raw.states {
        if !seen.insert(s.as_str()) {
            violations.push(ModelViolation::DuplicateState(s.clone()));
        } else {
            names.push(s.clone());
        }
    }
    if names.is_empty() {
        violations.push(ModelViolation::EmptyStateSpace);
    }
    names.sort();
    let state_index: HashMap<String, State> =
        names.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
    let n = names.len();

    let mut prior = vec![Rational::zero(); n];
    for key in raw.prior.keys() {
        if !state_index.contains_key(key) {
            violations.push(ModelViolation::UnknownPriorState(key.clone()));
        }
    }
    for (s, name) in names.iter().enumerate() {
        match raw.prior.get(name) {
            None => violations.push(ModelViolation::MissingPrior(name.clone())),
            Some(p) if !p.is_positive() => violations.push(ModelViolation::ZeroOrNegativePrior {
                state: name.clone(),
                value: p.clone(),
            }),
            Some(p) => prior[s] = p.clone(),
        }
    }
    let sum: Rational = raw.prior.values().sum();
    if !sum.is_one() {
        violations.push(ModelViolation::PriorNotNormalized { sum });
    }

    if raw.players.len() < 2 {
        violations.push(ModelViolation::FewerThanTwoPlayers {
            count: raw.players.len(),
        });
    }

    let mut players = Vec::with_capacity(raw.players.len());
    let mut partitions = Vec::with_capacity(raw.players.len());
    for (id, cells) in &raw.players {
        let owner = PartitionOwner::Player(id.clone());
        if let Some(p) = check_partition(&owner, cells, &names, &state_index, &mut violations) {
            players.push(id.clone());
            partitions.push(p);
        }
    }
    let mediator = check_partition(
        &PartitionOwner::Mediator,
        &raw.mediator,
        &names,
        &state_index,
        &mut violations,
    );

    if !violations.is_empty() {
        return Err(InvalidModel(violations));
    }
    Ok(Model {
        states: names,
        state_index,
        players,
        partitions,
        mediator: mediator.expect("mediator partition validated"),
        prior,
    })
}

fn check_partition(
    owner: &PartitionOwner,
    raw_cells: &[Vec<String>],
    names: &[String],
    index: &HashMap<String, State>,
    violations: &mut Vec<ModelViolation>,
) -> Option<Partition> {
    let before = violations.len();
    let mut owner_of = vec![None::<usize>; names.len()];
    let mut cells = Vec::with_capacity(raw_cells.len());
    for (c, raw) in raw_cells.iter().enumerate() {
        if raw.is_empty() {
            violations.push(ModelViolation::EmptyCell {
                owner: owner.clone(),
            });
            continue;
        }
        let mut cell = Vec::with_capacity(raw.len());
        for name in raw {
            let Some(&s) = index.get(name) else {
                violations.push(ModelViolation::UnknownState {
                    owner: owner.clone(),
                    state: name.clone(),
                });
                continue;
            };
            match owner_of[s] {
                Some(_) => violations.push(ModelViolation::OverlappingCells {
                    owner: owner.clone(),
                    state: name.clone(),
                }),
                None => {
                    owner_of[s] = Some(c);
                    cell.push(s);
                }
            }
        }
        cells.push(cell);
    }
    for (s, o) in owner_of.iter().enumerate() {
        if o.is_none() {
            violations.push(ModelViolation::UncoveredState {
                owner: owner.clone(),
                state: names[s].clone(),
            });
        }
    }
    (violations.len() == before).then(|| Partition::from_cells(names.len(), cells))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RestrictError {
    #[error("subgroup is empty")]
    EmptySubgroup,
    #[error("unknown player {0:?}")]
    UnknownPlayer(String),
}

impl Model {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn state_name(&self, s: State) -> &str {
        &self.states[s]
    }

    pub fn state(&self, name: &str) -> Option<State> {
        self.state_index.get(name).copied()
    }

    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    pub fn players(&self) -> &[String] {
        &self.players
    }

    pub fn player(&self, name: &str) -> Option<PlayerIx> {
        self.players.iter().position(|p| p == name)
    }

    pub fn partition(&self, player: PlayerIx) -> &Partition {
        &self.partitions[player]
    }

    pub fn mediator(&self) -> &Partition {
        &self.mediator
    }

    pub fn prior(&self, s: State) -> &Rational {
        &self.prior[s]
    }

    pub fn prior_vec(&self) -> &[Rational] {
        &self.prior
    }

    pub fn prior_distribution(&self) -> Distribution {
        Distribution::new(self.prior.clone())
    }

    /// Player indices for the given names, sorted and deduplicated.
    pub fn player_indices<S: AsRef<str>>(&self, group: &[S]) -> Result<Vec<PlayerIx>, RestrictError> {
        if group.is_empty() {
            return Err(RestrictError::EmptySubgroup);
        }
        let mut ix = group
            .iter()
            .map(|p| {
                self.player(p.as_ref())
                    .ok_or_else(|| RestrictError::UnknownPlayer(p.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        ix.sort_unstable();
        ix.dedup();
        Ok(ix)
    }

    /// Same state space, prior and mediator; only the players in `group`.
    pub fn restrict_players<S: AsRef<str>>(&self, group: &[S]) -> Result<Model, RestrictError> {
        let ix = self.player_indices(group)?;
        Ok(Model {
            states: self.states.clone(),
            state_index: self.state_index.clone(),
            players: ix.iter().map(|&i| self.players[i].clone()).collect(),
            partitions: ix.iter().map(|&i| self.partitions[i].clone()).collect(),
            mediator: self.mediator.clone(),
            prior: self.prior.clone(),
        })
    }

    /// Raw form of the model, without a joint belief.
    pub fn to_raw(&self) -> RawInstance {
        let names = |cells: &[Vec<State>]| -> Vec<Vec<String>> {
            cells
                .iter()
                .map(|c| c.iter().map(|&s| self.states[s].clone()).collect())
                .collect()
        };
        RawInstance {
            states: self.states.clone(),
            prior: self
                .states
                .iter()
                .cloned()
                .zip(self.prior.iter().cloned())
                .collect(),
            players: self
                .players
                .iter()
                .cloned()
                .zip(self.partitions.iter().map(|p| names(p.cells())))
                .collect(),
            mediator: names(self.mediator.cells()),
            joint_belief: None,
        }
    }
}

/// See [`restrict_players`](Model::restrict_players).
pub fn restrict_players<S: AsRef<str>>(model: &Model, group: &[S]) -> Result<Model, RestrictError> {
    model.restrict_players(group)
}

/// Per (state, player) beliefs, stored as in a table with one row per state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointBelief {
    entries: Vec<Vec<BeliefEntry>>,
}

impl JointBelief {
    /// Unchecked constructor; `entries[state][player]`.
    pub fn from_entries(entries: Vec<Vec<BeliefEntry>>) -> Self {
        JointBelief { entries }
    }

    pub fn entry(&self, state: State, player: PlayerIx) -> &BeliefEntry {
        &self.entries[state][player]
    }

    pub fn rows(&self) -> &[Vec<BeliefEntry>] {
        &self.entries
    }

    /// `JB(ω, i)(ω)`.
    pub fn diagonal(&self, state: State, player: PlayerIx) -> Rational {
        self.entries[state][player].mass(state)
    }

    /// Keeps only the given players' columns, in the given order.
    pub fn restrict_players(&self, players: &[PlayerIx]) -> JointBelief {
        JointBelief {
            entries: self
                .entries
                .iter()
                .map(|row| players.iter().map(|&p| row[p].clone()).collect())
                .collect(),
        }
    }

    pub fn to_raw(&self, model: &Model) -> RawJointBelief {
        let mut raw = BTreeMap::new();
        for (s, row) in self.entries.iter().enumerate() {
            let mut by_player = BTreeMap::new();
            for (p, entry) in row.iter().enumerate() {
                let value = entry.as_dist().map(|d| {
                    d.support()
                        .map(|t| (model.state_name(t).to_string(), d.get(t).clone()))
                        .collect::<BTreeMap<_, _>>()
                });
                by_player.insert(model.players()[p].clone(), value);
            }
            raw.insert(model.state_name(s).to_string(), by_player);
        }
        raw
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JbViolation {
    #[error("joint belief mentions unknown state {0:?}")]
    UnknownState(String),
    #[error("joint belief mentions unknown player {0:?}")]
    UnknownPlayer(String),
    #[error("no entry for state {state:?}, player {player:?}")]
    MissingEntry { state: String, player: String },
    #[error("entry ({state:?}, {player:?}) puts mass on {outside:?}, outside the player's cell")]
    SupportOutsideCell {
        state: String,
        player: String,
        outside: String,
    },
    #[error("entry ({state:?}, {player:?}) has a negative probability")]
    NegativeProbability { state: String, player: String },
    #[error("entry ({state:?}, {player:?}) sums to {sum}, not 1")]
    NotNormalized {
        state: String,
        player: String,
        sum: Rational,
    },
    #[error("player {player:?} has different entries at {state:?} and {other:?} in the same cell")]
    CellInconsistent {
        player: String,
        state: String,
        other: String,
    },
    #[error("condition (i) fails at {state:?}: player {positive:?} has positive mass, player {zero:?} does not")]
    ConditionIViolated {
        state: String,
        positive: String,
        zero: String,
    },
    #[error("condition (ii) fails on ({state:?}, {other:?}) between players {i:?} and {j:?}")]
    ConditionIIViolated {
        state: String,
        other: String,
        i: String,
        j: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid joint belief: {}", join_errors(.0))]
pub struct InvalidJointBelief(pub Vec<JbViolation>);

/// Converts the raw map (`null` = empty marker) into a [`JointBelief`]
/// without checking the belief conditions.
pub fn joint_belief_from_raw(model: &Model, raw: &RawJointBelief) -> Result<JointBelief, InvalidJointBelief> {
    let n = model.num_states();
    let mut violations = Vec::new();
    let mut entries: Vec<Vec<Option<BeliefEntry>>> = vec![vec![None; model.num_players()]; n];
    for (state_name, row) in raw {
        let Some(s) = model.state(state_name) else {
            violations.push(JbViolation::UnknownState(state_name.clone()));
            continue;
        };
        for (player_name, value) in row {
            let Some(p) = model.player(player_name) else {
                violations.push(JbViolation::UnknownPlayer(player_name.clone()));
                continue;
            };
            let entry = match value {
                None => BeliefEntry::Empty,
                Some(map) => {
                    let mut d = Distribution::zeros(n);
                    for (t_name, prob) in map {
                        match model.state(t_name) {
                            Some(t) => d.set(t, prob.clone()),
                            None => violations.push(JbViolation::UnknownState(t_name.clone())),
                        }
                    }
                    BeliefEntry::Dist(d)
                }
            };
            entries[s][p] = Some(entry);
        }
    }
    let mut rows = Vec::with_capacity(n);
    for (s, row) in entries.into_iter().enumerate() {
        let mut out = Vec::with_capacity(row.len());
        for (p, e) in row.into_iter().enumerate() {
            match e {
                Some(e) => out.push(e),
                None => {
                    violations.push(JbViolation::MissingEntry {
                        state: model.state_name(s).to_string(),
                        player: model.players()[p].clone(),
                    });
                    out.push(BeliefEntry::Empty);
                }
            }
        }
        rows.push(out);
    }
    if violations.is_empty() {
        Ok(JointBelief::from_entries(rows))
    } else {
        Err(InvalidJointBelief(violations))
    }
}

/// Checks supports, normalization, within-cell constancy and the two
/// joint-belief conditions, exactly.
pub fn validate_joint_belief(model: &Model, jb: JointBelief) -> Result<JointBelief, InvalidJointBelief> {
    let n = model.num_states();
    let np = model.num_players();
    let name = |s: State| model.state_name(s).to_string();
    let pname = |p: PlayerIx| model.players()[p].clone();
    let mut violations = Vec::new();

    if jb.entries.len() != n || jb.entries.iter().any(|r| r.len() != np) {
        for s in 0..n {
            for p in 0..np {
                if jb.entries.get(s).and_then(|r| r.get(p)).is_none() {
                    violations.push(JbViolation::MissingEntry {
                        state: name(s),
                        player: pname(p),
                    });
                }
            }
        }
        return Err(InvalidJointBelief(violations));
    }

    for s in 0..n {
        for p in 0..np {
            let BeliefEntry::Dist(d) = &jb.entries[s][p] else {
                continue;
            };
            if d.len() != n {
                violations.push(JbViolation::MissingEntry {
                    state: name(s),
                    player: pname(p),
                });
                continue;
            }
            let partition = model.partition(p);
            for t in d.support() {
                if !partition.same_cell(s, t) {
                    violations.push(JbViolation::SupportOutsideCell {
                        state: name(s),
                        player: pname(p),
                        outside: name(t),
                    });
                }
            }
            if d.probs().iter().any(Rational::is_negative) {
                violations.push(JbViolation::NegativeProbability {
                    state: name(s),
                    player: pname(p),
                });
            }
            let sum = d.total();
            if !sum.is_one() {
                violations.push(JbViolation::NotNormalized {
                    state: name(s),
                    player: pname(p),
                    sum,
                });
            }
        }
    }

    for p in 0..np {
        for cell in model.partition(p).cells() {
            let first = cell[0];
            for &other in &cell[1..] {
                if jb.entries[first][p] != jb.entries[other][p] {
                    violations.push(JbViolation::CellInconsistent {
                        player: pname(p),
                        state: name(first),
                        other: name(other),
                    });
                }
            }
        }
    }

    // Condition (i): positivity of the diagonal is player independent.
    for s in 0..n {
        let positive = (0..np).find(|&p| jb.diagonal(s, p).is_positive());
        if let Some(i) = positive {
            for j in 0..np {
                if !jb.diagonal(s, j).is_positive() {
                    violations.push(JbViolation::ConditionIViolated {
                        state: name(s),
                        positive: pname(i),
                        zero: pname(j),
                    });
                }
            }
        }
    }

    // Condition (ii), cross-multiplied; pairs with a zero denominator on
    // either side are skipped (condition (i) already covers them).
    for s in 0..n {
        for i in 0..np {
            for j in (i + 1)..np {
                let pi = model.partition(i);
                let pj = model.partition(j);
                for &t in pi.cell_of(s) {
                    if t == s || !pj.same_cell(s, t) {
                        continue;
                    }
                    let (ai, bi) = (jb.diagonal(s, i), jb.diagonal(t, i));
                    let (aj, bj) = (jb.diagonal(s, j), jb.diagonal(t, j));
                    if bi.is_zero() || bj.is_zero() {
                        continue;
                    }
                    if &ai * &bj != &aj * &bi {
                        violations.push(JbViolation::ConditionIIViolated {
                            state: name(s),
                            other: name(t),
                            i: pname(i),
                            j: pname(j),
                        });
                    }
                }
            }
        }
    }

    if violations.is_empty() {
        Ok(jb)
    } else {
        Err(InvalidJointBelief(violations))
    }
}

/// An F-measurable stochastic kernel `τ(s | ω)` over a finite alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignalKernel {
    signals: Vec<String>,
    table: Vec<Vec<Rational>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KernelError {
    #[error("kernel has no signals")]
    NoSignals,
    #[error("signal {0:?} listed more than once")]
    DuplicateSignal(String),
    #[error("unknown signal {0:?}")]
    UnknownSignal(String),
    #[error("unknown state {0:?}")]
    UnknownState(String),
    #[error("row for signal {0:?} does not cover every state")]
    ShapeMismatch(String),
    #[error("tau({signal} | {state}) is negative")]
    NegativeProbability { signal: String, state: String },
    #[error("probabilities at state {state:?} sum to {sum}, not 1")]
    RowNotNormalized { state: String, sum: Rational },
    #[error("signal {signal:?} differs between {state:?} and {other:?}, which the mediator cannot tell apart")]
    NotMeasurable {
        signal: String,
        state: String,
        other: String,
    },
}

impl SignalKernel {
    /// `table[signal][state]`; checks stochasticity and F-measurability.
    pub fn new(model: &Model, signals: Vec<String>, table: Vec<Vec<Rational>>) -> Result<Self, KernelError> {
        if signals.is_empty() {
            return Err(KernelError::NoSignals);
        }
        let mut seen = BTreeSet::new();
        for s in &signals {
            if !seen.insert(s) {
                return Err(KernelError::DuplicateSignal(s.clone()));
            }
        }
        if table.len() != signals.len() {
            return Err(KernelError::ShapeMismatch(
                signals.get(table.len()).cloned().unwrap_or_default(),
            ));
        }
        let n = model.num_states();
        for (sig, row) in signals.iter().zip(&table) {
            if row.len() != n {
                return Err(KernelError::ShapeMismatch(sig.clone()));
            }
            if let Some(w) = row.iter().position(Rational::is_negative) {
                return Err(KernelError::NegativeProbability {
                    signal: sig.clone(),
                    state: model.state_name(w).to_string(),
                });
            }
        }
        for w in 0..n {
            let sum: Rational = table.iter().map(|row| &row[w]).sum();
            if !sum.is_one() {
                return Err(KernelError::RowNotNormalized {
                    state: model.state_name(w).to_string(),
                    sum,
                });
            }
        }
        for cell in model.mediator().cells() {
            for (sig, row) in signals.iter().zip(&table) {
                if let Some(&other) = cell.iter().find(|&&w| row[w] != row[cell[0]]) {
                    return Err(KernelError::NotMeasurable {
                        signal: sig.clone(),
                        state: model.state_name(cell[0]).to_string(),
                        other: model.state_name(other).to_string(),
                    });
                }
            }
        }
        Ok(SignalKernel { signals, table })
    }

    /// A single signal `"s"` sent in every state.
    pub fn uninformative(model: &Model) -> Self {
        SignalKernel {
            signals: vec!["s".to_string()],
            table: vec![vec![Rational::one(); model.num_states()]],
        }
    }

    pub fn signals(&self) -> &[String] {
        &self.signals
    }

    pub fn signal(&self, name: &str) -> Option<usize> {
        self.signals.iter().position(|s| s == name)
    }

    pub fn row(&self, signal: usize) -> &[Rational] {
        &self.table[signal]
    }

    pub fn prob(&self, signal: usize, state: State) -> &Rational {
        &self.table[signal][state]
    }

    /// `Pr(s) = Σ_ω μ(ω) τ(s | ω)`.
    pub fn signal_probability(&self, model: &Model, signal: usize) -> Rational {
        self.table[signal]
            .iter()
            .zip(model.prior_vec())
            .map(|(t, m)| t * m)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PosteriorError {
    #[error("unknown signal {0:?}")]
    UnknownSignal(String),
    #[error("unknown state {0:?}")]
    UnknownState(String),
    #[error("unknown player {0:?}")]
    UnknownPlayer(String),
    #[error("signal {0:?} has zero probability")]
    SignalHasZeroProbability(String),
}

/// Bayes posterior of `player` at `state` after `signal`, by index.
pub fn posterior_at(model: &Model, kernel: &SignalKernel, signal: usize, state: State, player: PlayerIx) -> BeliefEntry {
    let cell = model.partition(player).cell_of(state);
    let weight = |w: State| model.prior(w) * kernel.prob(signal, w);
    let total: Rational = cell.iter().map(|&w| weight(w)).sum();
    if total.is_zero() {
        return BeliefEntry::Empty;
    }
    let mut d = Distribution::zeros(model.num_states());
    for &w in cell {
        d.set(w, weight(w).checked_div(&total).expect("positive total"));
    }
    BeliefEntry::Dist(d)
}

/// Posterior of `player` at `state` after observing `signal`.
pub fn bayes_posterior(
    model: &Model,
    kernel: &SignalKernel,
    signal: &str,
    state: &str,
    player: &str,
) -> Result<BeliefEntry, PosteriorError> {
    let sig = kernel
        .signal(signal)
        .ok_or_else(|| PosteriorError::UnknownSignal(signal.to_string()))?;
    let s = model
        .state(state)
        .ok_or_else(|| PosteriorError::UnknownState(state.to_string()))?;
    let p = model
        .player(player)
        .ok_or_else(|| PosteriorError::UnknownPlayer(player.to_string()))?;
    Ok(posterior_at(model, kernel, sig, s, p))
}

/// The joint posterior induced by `kernel` and `signal`.
pub fn joint_posterior(model: &Model, kernel: &SignalKernel, signal: &str) -> Result<JointBelief, PosteriorError> {
    let sig = kernel
        .signal(signal)
        .ok_or_else(|| PosteriorError::UnknownSignal(signal.to_string()))?;
    if kernel.signal_probability(model, sig).is_zero() {
        return Err(PosteriorError::SignalHasZeroProbability(signal.to_string()));
    }
    let entries = (0..model.num_states())
        .map(|s| {
            (0..model.num_players())
                .map(|p| posterior_at(model, kernel, sig, s, p))
                .collect()
        })
        .collect();
    Ok(JointBelief::from_entries(entries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn r(n: i64, d: i64) -> Rational {
        Rational::frac(n, d)
    }

    #[test]
    fn paper_instances_validate() {
        let m = fixtures::negotiation_model();
        assert_eq!(m.num_states(), 4);
        assert!(m.prior_vec().iter().all(|p| *p == r(1, 4)));
        let m = fixtures::example1_model();
        assert_eq!(m.num_states(), 5);
        assert_eq!(m.partition(0).cells(), &[vec![0, 1], vec![2], vec![3, 4]]);
    }

    #[test]
    fn prior_not_normalized() {
        let mut raw = fixtures::negotiation_model().to_raw();
        raw.states = vec!["a".into(), "b".into(), "c".into()];
        raw.prior = [("a", r(1, 2)), ("b", r(1, 2)), ("c", r(1, 4))]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        let cells = vec![vec!["a".to_string(), "b".to_string(), "c".to_string()]];
        raw.players = [("1".to_string(), cells.clone()), ("2".to_string(), cells.clone())].into();
        raw.mediator = cells;
        let err = validate_model(&raw).unwrap_err();
        assert_eq!(err.0, vec![ModelViolation::PriorNotNormalized { sum: r(5, 4) }]);
    }

    #[test]
    fn partition_violations_are_reported() {
        let mut raw = fixtures::negotiation_model().to_raw();
        raw.players.get_mut("1").unwrap()[0].push("w3".into());
        raw.mediator.pop();
        raw.prior.insert("w1".into(), Rational::zero());
        raw.players.remove("2");
        let err = validate_model(&raw).unwrap_err();
        let v = &err.0;
        assert!(v.contains(&ModelViolation::ZeroOrNegativePrior {
            state: "w1".into(),
            value: Rational::zero()
        }));
        assert!(v.contains(&ModelViolation::PriorNotNormalized { sum: r(3, 4) }));
        assert!(v.contains(&ModelViolation::FewerThanTwoPlayers { count: 1 }));
        assert!(v.contains(&ModelViolation::OverlappingCells {
            owner: PartitionOwner::Player("1".into()),
            state: "w3".into()
        }));
        assert!(v.contains(&ModelViolation::UncoveredState {
            owner: PartitionOwner::Mediator,
            state: "w2".into()
        }));
    }

    #[test]
    fn tables_one_and_two_are_joint_beliefs() {
        let m = fixtures::example1_model();
        assert!(validate_joint_belief(&m, fixtures::table1(&m)).is_ok());
        let t2 = validate_joint_belief(&m, fixtures::table2(&m)).unwrap();
        // (1/3)/(2/3) for player 1 equals (1/5)/(2/5) for player 2
        assert_eq!(
            t2.diagonal(0, 0).checked_div(&t2.diagonal(1, 0)).unwrap(),
            t2.diagonal(0, 1).checked_div(&t2.diagonal(1, 1)).unwrap()
        );
    }

    #[test]
    fn support_outside_cell() {
        let m = fixtures::example1_model();
        let mut rows = fixtures::table1(&m).rows().to_vec();
        let bad = BeliefEntry::Dist(Distribution::point(5, 2));
        rows[0][0] = bad.clone();
        rows[1][0] = bad;
        let err = validate_joint_belief(&m, JointBelief::from_entries(rows)).unwrap_err();
        assert!(err.0.contains(&JbViolation::SupportOutsideCell {
            state: "w1".into(),
            player: "1".into(),
            outside: "w3".into()
        }));
    }

    #[test]
    fn cell_inconsistency_and_normalization() {
        let m = fixtures::example1_model();
        let mut rows = fixtures::table1(&m).rows().to_vec();
        rows[1][0] = BeliefEntry::Dist(Distribution::new(vec![r(1, 2), r(1, 4), r(0, 1), r(0, 1), r(0, 1)]));
        let err = validate_joint_belief(&m, JointBelief::from_entries(rows)).unwrap_err();
        assert!(err.0.contains(&JbViolation::NotNormalized {
            state: "w2".into(),
            player: "1".into(),
            sum: r(3, 4)
        }));
        assert!(err.0.iter().any(|v| matches!(v, JbViolation::CellInconsistent { .. })));
    }

    #[test]
    fn conditions_one_and_two() {
        let m = fixtures::example1_model();
        // player 1 believes (1/3, 2/3) on {w1, w2}; player 2 keeps uniform on {w1, w2, w3}
        let mut rows = fixtures::table1(&m).rows().to_vec();
        let p1 = BeliefEntry::Dist(Distribution::new(vec![r(1, 3), r(2, 3), r(0, 1), r(0, 1), r(0, 1)]));
        rows[0][0] = p1.clone();
        rows[1][0] = p1;
        let err = validate_joint_belief(&m, JointBelief::from_entries(rows)).unwrap_err();
        assert!(err.0.contains(&JbViolation::ConditionIIViolated {
            state: "w1".into(),
            other: "w2".into(),
            i: "1".into(),
            j: "2".into()
        }));

        let mut rows = fixtures::table1(&m).rows().to_vec();
        rows[2][0] = BeliefEntry::Empty;
        let err = validate_joint_belief(&m, JointBelief::from_entries(rows)).unwrap_err();
        assert!(err.0.contains(&JbViolation::ConditionIViolated {
            state: "w3".into(),
            positive: "2".into(),
            zero: "1".into()
        }));
    }

    #[test]
    fn bayes_posterior_examples() {
        let m = fixtures::example1_model();
        let k = fixtures::example1_kernel(&m);
        let post = bayes_posterior(&m, &k, "s", "w1", "1").unwrap();
        assert_eq!(
            post,
            BeliefEntry::Dist(Distribution::new(vec![r(1, 3), r(2, 3), r(0, 1), r(0, 1), r(0, 1)]))
        );
        let flat = SignalKernel::uninformative(&m);
        let post = bayes_posterior(&m, &flat, "s", "w1", "2").unwrap();
        assert_eq!(
            post,
            BeliefEntry::Dist(Distribution::new(vec![r(1, 3), r(1, 3), r(1, 3), r(0, 1), r(0, 1)]))
        );
        assert_eq!(
            bayes_posterior(&m, &flat, "x", "w1", "2"),
            Err(PosteriorError::UnknownSignal("x".into()))
        );
        assert_eq!(
            bayes_posterior(&m, &flat, "s", "w9", "2"),
            Err(PosteriorError::UnknownState("w9".into()))
        );
    }

    #[test]
    fn zero_likelihood_cell_gives_empty_marker() {
        let m = fixtures::example1_model();
        // signal "s" only in F-cell {w1, w4}
        let on = |w: State| if w == 0 || w == 3 { Rational::one() } else { Rational::zero() };
        let row: Vec<Rational> = (0..5).map(on).collect();
        let rest: Vec<Rational> = row.iter().map(|p| Rational::one() - p).collect();
        let k = SignalKernel::new(&m, vec!["s".into(), "t".into()], vec![row, rest]).unwrap();
        // player 1 at w3 observes {w3}, where s is impossible
        assert_eq!(bayes_posterior(&m, &k, "s", "w3", "1").unwrap(), BeliefEntry::Empty);
        let jb = joint_posterior(&m, &k, "s").unwrap();
        assert!(validate_joint_belief(&m, jb).is_ok());
    }

    #[test]
    fn joint_posterior_reproduces_tables() {
        let m = fixtures::example1_model();
        let k = fixtures::example1_kernel(&m);
        assert_eq!(joint_posterior(&m, &k, "s").unwrap(), fixtures::table2(&m));
        let flat = SignalKernel::uninformative(&m);
        assert_eq!(joint_posterior(&m, &flat, "s").unwrap(), fixtures::table1(&m));
    }

    #[test]
    fn zero_probability_signal() {
        let m = fixtures::example1_model();
        let k = SignalKernel::new(
            &m,
            vec!["s".into(), "never".into()],
            vec![vec![Rational::one(); 5], vec![Rational::zero(); 5]],
        )
        .unwrap();
        assert_eq!(
            joint_posterior(&m, &k, "never"),
            Err(PosteriorError::SignalHasZeroProbability("never".into()))
        );
    }

    #[test]
    fn kernel_must_be_measurable() {
        let m = fixtures::example1_model();
        let row: Vec<Rational> = vec![r(1, 2), r(1, 2), r(1, 2), r(1, 3), r(1, 2)];
        let rest: Vec<Rational> = row.iter().map(|p| Rational::one() - p).collect();
        let err = SignalKernel::new(&m, vec!["s".into(), "t".into()], vec![row, rest]).unwrap_err();
        assert_eq!(
            err,
            KernelError::NotMeasurable {
                signal: "s".into(),
                state: "w1".into(),
                other: "w4".into()
            }
        );
    }

    #[test]
    fn restrict_players_keeps_only_group() {
        let m = fixtures::example1_model();
        let only1 = m.restrict_players(&["1"]).unwrap();
        assert_eq!(only1.players(), &["1".to_string()]);
        assert_eq!(only1.partition(0), m.partition(0));
        assert_eq!(m.restrict_players::<&str>(&[]), Err(RestrictError::EmptySubgroup));
        assert_eq!(
            m.restrict_players(&["7"]),
            Err(RestrictError::UnknownPlayer("7".into()))
        );
    }
}
