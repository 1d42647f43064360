//! Random instance generators and independent oracles shared by the
//! integration tests. Nothing here calls into the code under test except
//! to build inputs.
#![allow(dead_code)]

use std::collections::BTreeMap;

use mediator::consistency::PlFunction;
use mediator::infograph::InfoGraph;
use mediator::io::{RawGame, RawInstance};
use mediator::model::{validate_model, Distribution, Model, Partition};
use mediator::Rational;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn r(n: i64, d: i64) -> Rational {
    Rational::frac(n, d)
}

// ---- instances -----------------------------------------------------------

pub fn state_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("w{i}")).collect()
}

/// Random partition of `0..n` into at most `max_cells` labelled blocks.
pub fn random_cells(rng: &mut TestRng, n: usize, max_cells: usize) -> Vec<Vec<usize>> {
    let k = rng.gen_range(1..=max_cells.max(1));
    let mut cells = vec![Vec::new(); k];
    for s in 0..n {
        cells[rng.gen_range(0..k)].push(s);
    }
    cells.retain(|c| !c.is_empty());
    cells
}

fn named(cells: &[Vec<usize>], names: &[String]) -> Vec<Vec<String>> {
    cells
        .iter()
        .map(|c| c.iter().map(|&s| names[s].clone()).collect())
        .collect()
}

/// Positive prior with small integer weights.
pub fn random_prior(rng: &mut TestRng, n: usize) -> Vec<Rational> {
    let w: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=4)).collect();
    let total: i64 = w.iter().sum();
    w.iter().map(|&x| r(x, total)).collect()
}

pub fn raw_instance(
    names: &[String],
    prior: &[Rational],
    players: &[Vec<Vec<usize>>],
    mediator: &[Vec<usize>],
) -> RawInstance {
    RawInstance {
        states: names.to_vec(),
        prior: names.iter().cloned().zip(prior.iter().cloned()).collect(),
        players: players
            .iter()
            .enumerate()
            .map(|(i, cells)| (format!("{}", i + 1), named(cells, names)))
            .collect(),
        mediator: named(mediator, names),
        joint_belief: None,
    }
}

/// Between 2 and `max_players` players, states `1..=max_states`.
pub fn random_model(rng: &mut TestRng, max_states: usize, max_players: usize) -> Model {
    let n = rng.gen_range(1..=max_states);
    let names = state_names(n);
    let k = rng.gen_range(2..=max_players.max(2));
    let players: Vec<_> = (0..k).map(|_| random_cells(rng, n, n)).collect();
    let mediator = random_cells(rng, n, n);
    let prior = random_prior(rng, n);
    validate_model(&raw_instance(&names, &prior, &players, &mediator)).expect("generated model is valid")
}

/// Positive, constant on each mediator cell, small integers.
pub fn random_f(rng: &mut TestRng, mediator: &Partition) -> Vec<Rational> {
    let mut f = vec![Rational::zero(); mediator.num_states()];
    for cell in mediator.cells() {
        let v = Rational::int(rng.gen_range(1..=5));
        for &s in cell {
            f[s] = v.clone();
        }
    }
    f
}

/// `f(a) / f(b)` on every edge.
pub fn phi_from_f(graph: &InfoGraph, f: &[Rational]) -> PlFunction {
    let mut phi = PlFunction::new();
    for (a, b, _) in graph.edges() {
        phi.insert_pair(a, b, f[a].checked_div(&f[b]).unwrap());
    }
    phi
}

/// Half the time the ratio of a measurable `f`; otherwise that ratio with
/// one or two edges rescaled (which may or may not stay consistent).
pub fn random_phi(rng: &mut TestRng, graph: &InfoGraph, mediator: &Partition, perturb: bool) -> PlFunction {
    let f = random_f(rng, mediator);
    let mut phi = phi_from_f(graph, &f);
    if perturb {
        let edges: Vec<(usize, usize)> = graph.edges().map(|(a, b, _)| (a, b)).collect();
        let factors = [r(2, 1), r(3, 2), r(1, 3), r(5, 4)];
        for _ in 0..rng.gen_range(1..=2) {
            if let Some(&(a, b)) = edges.choose(rng) {
                let v = phi.get(a, b).unwrap() * factors.choose(rng).unwrap();
                phi.insert_pair(a, b, v);
            }
        }
    }
    phi
}

// ---- distributions -------------------------------------------------------

/// A distribution on `n` points from integer weights in `0..=3`, at least
/// one positive.
pub fn random_dist(rng: &mut TestRng, n: usize, allow_zero: bool) -> Vec<Rational> {
    loop {
        let lo = if allow_zero { 0 } else { 1 };
        let w: Vec<i64> = (0..n).map(|_| rng.gen_range(lo..=3)).collect();
        let total: i64 = w.iter().sum();
        if total > 0 {
            return w.iter().map(|&x| r(x, total)).collect();
        }
    }
}

pub fn dist(v: &[Rational]) -> Distribution {
    Distribution::new(v.to_vec())
}

pub fn expect(p: &[Rational], u: &[Rational]) -> Rational {
    p.iter().zip(u).map(|(a, b)| a * b).sum()
}

// ---- LP oracle: basic solutions by exact elimination ----------------------

/// Solves `M x = rhs` for square-or-tall `M` with independent columns.
/// `None` when the columns are dependent or the system is inconsistent.
pub fn solve_exact(m: &[Vec<Rational>], rhs: &[Rational]) -> Option<Vec<Rational>> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut a: Vec<Vec<Rational>> = m
        .iter()
        .zip(rhs)
        .map(|(row, b)| row.iter().cloned().chain(std::iter::once(b.clone())).collect())
        .collect();
    let mut r = 0;
    for c in 0..cols {
        let p = (r..rows).find(|&i| !a[i][c].is_zero())?;
        a.swap(r, p);
        let pivot = a[r][c].clone();
        for v in a[r].iter_mut() {
            *v = v.checked_div(&pivot).unwrap();
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let factor = a[i][c].clone();
                let pr = a[r].clone();
                for (v, pv) in a[i].iter_mut().zip(&pr) {
                    *v = &*v - &(&factor * pv);
                }
            }
        }
        r += 1;
    }
    if a[r..].iter().any(|row| !row[cols].is_zero()) {
        return None;
    }
    Some((0..cols).map(|c| a[c][cols].clone()).collect())
}

/// Every basic feasible solution of `Σ qᵢ μᵢ = μ, q ≥ 0` (the members sum
/// to one, so the simplex row is implied).
pub fn feasible_vertices(prior: &[Rational], members: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let k = members.len();
    let n = prior.len();
    let mut out = Vec::new();
    for mask in 1u32..(1 << k) {
        let support: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        let m: Vec<Vec<Rational>> = (0..n)
            .map(|s| support.iter().map(|&i| members[i][s].clone()).collect())
            .collect();
        if let Some(q) = solve_exact(&m, prior) {
            if q.iter().all(|x| !x.is_negative()) {
                let mut full = vec![Rational::zero(); k];
                for (&i, v) in support.iter().zip(q) {
                    full[i] = v;
                }
                out.push(full);
            }
        }
    }
    out
}

/// (PP holds, SPP holds) by vertex enumeration.
pub fn pp_spp_oracle(prior: &[Rational], members: &[Vec<Rational>]) -> (bool, bool) {
    let vs = feasible_vertices(prior, members);
    let pp = !vs.is_empty();
    let spp = pp && (0..members.len()).all(|i| vs.iter().any(|v| v[i].is_positive()));
    (pp, spp)
}

// ---- games ---------------------------------------------------------------

/// Payoffs indexed `[profile][player]`, profiles mixed-radix with the first
/// player most significant.
#[derive(Debug, Clone)]
pub struct Table {
    pub sizes: Vec<usize>,
    pub payoffs: Vec<Vec<Rational>>,
}

impl Table {
    pub fn profiles(&self) -> usize {
        self.sizes.iter().product()
    }

    pub fn decode(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.sizes.len()];
        for p in (0..self.sizes.len()).rev() {
            out[p] = idx % self.sizes[p];
            idx /= self.sizes[p];
        }
        out
    }

    pub fn encode(&self, prof: &[usize]) -> usize {
        prof.iter().zip(&self.sizes).fold(0, |acc, (&a, &k)| acc * k + a)
    }

    pub fn u(&self, prof: &[usize], player: usize) -> &Rational {
        &self.payoffs[self.encode(prof)][player]
    }

    pub fn to_raw(&self) -> RawGame {
        let players: Vec<String> = (1..=self.sizes.len()).map(|i| format!("p{i}")).collect();
        let actions: BTreeMap<String, Vec<String>> = players
            .iter()
            .zip(&self.sizes)
            .map(|(p, &k)| (p.clone(), (0..k).map(|a| format!("a{a}")).collect()))
            .collect();
        let payoffs = (0..self.profiles())
            .map(|idx| {
                let prof = self.decode(idx);
                let key = prof.iter().map(|a| format!("a{a}")).collect::<Vec<_>>().join(",");
                let row = players.iter().cloned().zip(self.payoffs[idx].iter().cloned()).collect();
                (key, row)
            })
            .collect();
        RawGame {
            players,
            actions,
            payoffs,
        }
    }
}

/// Four-cycle test: for every two players, every profile and every pair of
/// alternative actions, the payoff changes around the square sum to zero.
pub fn four_cycle_oracle(t: &Table) -> bool {
    let np = t.sizes.len();
    for idx in 0..t.profiles() {
        let a = t.decode(idx);
        for i in 0..np {
            for j in (i + 1)..np {
                for bi in 0..t.sizes[i] {
                    for bj in 0..t.sizes[j] {
                        if bi == a[i] || bj == a[j] {
                            continue;
                        }
                        let mut x = a.clone();
                        x[i] = bi;
                        let mut y = x.clone();
                        y[j] = bj;
                        let mut z = a.clone();
                        z[j] = bj;
                        let sum = (t.u(&x, i) - t.u(&a, i))
                            + (t.u(&y, j) - t.u(&x, j))
                            + (t.u(&z, i) - t.u(&y, i))
                            + (t.u(&a, j) - t.u(&z, j));
                        if !sum.is_zero() {
                            return false;
                        }
                    }
                }
            }
        }
    }
    true
}

/// Direct check that `g` is an exact potential.
pub fn is_potential(t: &Table, g: &[Rational]) -> bool {
    for idx in 0..t.profiles() {
        let a = t.decode(idx);
        for p in 0..t.sizes.len() {
            for b in 0..t.sizes[p] {
                let mut x = a.clone();
                x[p] = b;
                let jdx = t.encode(&x);
                if t.u(&a, p) - t.u(&x, p) != &g[idx] - &g[jdx] {
                    return false;
                }
            }
        }
    }
    true
}

pub fn random_sizes(rng: &mut TestRng) -> Vec<usize> {
    let np = rng.gen_range(2..=3);
    (0..np).map(|_| rng.gen_range(1..=3)).collect()
}

pub fn random_table(rng: &mut TestRng, sizes: Vec<usize>) -> Table {
    let n: usize = sizes.iter().product();
    let np = sizes.len();
    let payoffs = (0..n)
        .map(|_| (0..np).map(|_| Rational::int(rng.gen_range(-3..=3))).collect())
        .collect();
    Table { sizes, payoffs }
}

/// `uᵢ(a) = P(a) + dᵢ(a₋ᵢ)`: exact potential `P` plus terms player `i`
/// cannot influence.
pub fn potential_table(rng: &mut TestRng, sizes: Vec<usize>) -> Table {
    let n: usize = sizes.iter().product();
    let np = sizes.len();
    let pot: Vec<i64> = (0..n).map(|_| rng.gen_range(-5..=5)).collect();
    let mut t = Table {
        sizes,
        payoffs: vec![vec![Rational::zero(); np]; n],
    };
    for p in 0..np {
        let mut dummy: BTreeMap<Vec<usize>, i64> = BTreeMap::new();
        for (idx, &pi) in pot.iter().enumerate() {
            let mut rest = t.decode(idx);
            rest[p] = usize::MAX;
            let d = *dummy.entry(rest).or_insert_with(|| rng.gen_range(-4..=4));
            t.payoffs[idx][p] = Rational::int(pi + d);
        }
    }
    t
}

pub fn identical_interest(rng: &mut TestRng, sizes: Vec<usize>) -> Table {
    let n: usize = sizes.iter().product();
    let np = sizes.len();
    let payoffs = (0..n)
        .map(|_| vec![Rational::int(rng.gen_range(-6..=6)); np])
        .collect();
    Table { sizes, payoffs }
}

/// Each action is a resource; a player's payoff is minus the cost of the
/// resource it picked, which depends on how many players share it.
pub fn congestion(rng: &mut TestRng, players: usize, resources: usize) -> Table {
    let cost: Vec<Vec<i64>> = (0..resources)
        .map(|_| {
            let mut c: Vec<i64> = (0..players).map(|_| rng.gen_range(0..=6)).collect();
            c.sort_unstable();
            c
        })
        .collect();
    let sizes = vec![resources; players];
    let n: usize = sizes.iter().product();
    let mut t = Table {
        sizes,
        payoffs: vec![vec![Rational::zero(); players]; n],
    };
    for idx in 0..n {
        let prof = t.decode(idx);
        for p in 0..players {
            let load = prof.iter().filter(|&&x| x == prof[p]).count();
            t.payoffs[idx][p] = Rational::int(-cost[prof[p]][load - 1]);
        }
    }
    t
}

// ---- kernels and beliefs -------------------------------------------------

/// The same model with a different mediator partition.
pub fn with_mediator(model: &Model, cells: &[Vec<usize>]) -> Model {
    let mut raw = model.to_raw();
    raw.mediator = named(cells, model.states());
    validate_model(&raw).expect("still a valid model")
}

pub fn discrete_cells(n: usize) -> Vec<Vec<usize>> {
    (0..n).map(|s| vec![s]).collect()
}

/// An F-measurable kernel with 2 or 3 signals named `s`, `s0`, `s1`; each
/// mediator cell draws its own signal distribution.
pub fn random_kernel(rng: &mut TestRng, model: &Model) -> mediator::model::SignalKernel {
    let k = rng.gen_range(2..=3);
    let n = model.num_states();
    let mut table = vec![vec![Rational::zero(); n]; k];
    for cell in model.mediator().cells() {
        let d = random_dist(rng, k, true);
        for &w in cell {
            for (row, p) in table.iter_mut().zip(&d) {
                row[w] = p.clone();
            }
        }
    }
    let signals = ["s", "s0", "s1"][..k].iter().map(|s| s.to_string()).collect();
    mediator::model::SignalKernel::new(model, signals, table).expect("measurable by construction")
}
