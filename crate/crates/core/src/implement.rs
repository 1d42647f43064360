//! Deciding whether a joint belief can be produced by one public signal of
//! the mediator, building that signal, and checking it.

use rand::distributions::{Distribution as _, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::consistency::{solve_f, Certificate, ConsistencyFailure, FLabeling, PlError, PlFunction};
use crate::infograph::{build_graph, InfoGraph};
use crate::model::{
    joint_posterior, BeliefEntry, JointBelief, Model, PlayerIx, PosteriorError, RestrictError, SignalKernel, State,
};
use crate::rational::Rational;

pub const SIGNAL: &str = "s";
pub const COMPLEMENT: &str = "s0";

/// States with positive diagonal mass, and whether they form a union of
/// mediator cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OmegaPlus {
    pub members: Vec<bool>,
    /// A mediator cell that is split by the set, when there is one.
    pub split_cell: Option<Vec<State>>,
}

impl OmegaPlus {
    pub fn measurable(&self) -> bool {
        self.split_cell.is_none()
    }

    pub fn states(&self) -> Vec<State> {
        (0..self.members.len()).filter(|&s| self.members[s]).collect()
    }
}

pub fn omega_plus(model: &Model, jb: &JointBelief) -> OmegaPlus {
    let members: Vec<bool> = (0..model.num_states())
        .map(|s| (0..model.num_players()).any(|p| jb.diagonal(s, p).is_positive()))
        .collect();
    let split_cell = model
        .mediator()
        .split_cell(&members)
        .map(|c| model.mediator().cells()[c].clone());
    OmegaPlus { members, split_cell }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PhiError {
    #[error("players disagree on phi({from}, {to}): {values:?}")]
    PhiInconsistentAcrossPlayers {
        from: State,
        to: State,
        values: Vec<(PlayerIx, Rational)>,
    },
    #[error("player {player} puts no mass on state {state}, which others treat as possible")]
    ZeroDiagonal { state: State, player: PlayerIx },
}

/// `φ_JB` on the graph restricted to Ω₊, together with that graph.
pub fn phi_from_jb(model: &Model, jb: &JointBelief) -> Result<(InfoGraph, PlFunction), PhiError> {
    let plus = omega_plus(model, jb);
    let graph = build_graph(model).restrict_states(&plus.members);
    let mut phi = PlFunction::new();
    for (a, b, players) in graph.edges() {
        let mut values = Vec::with_capacity(players.len());
        for &p in players {
            let (da, db) = (jb.diagonal(a, p), jb.diagonal(b, p));
            for (s, d) in [(a, &da), (b, &db)] {
                if !d.is_positive() {
                    return Err(PhiError::ZeroDiagonal { state: s, player: p });
                }
            }
            let v = (da * model.prior(b)).checked_div(&(db * model.prior(a))).expect("positive");
            values.push((p, v));
        }
        if values.iter().any(|(_, v)| v != &values[0].1) {
            return Err(PhiError::PhiInconsistentAcrossPlayers { from: a, to: b, values });
        }
        phi.insert_pair(a, b, values[0].1.clone());
    }
    Ok((graph, phi))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Rejection {
    #[error("no state has positive mass")]
    EmptySupport,
    #[error("positive-mass states split the mediator cell {cell:?}")]
    OmegaPlusNotMeasurable { cell: Vec<State> },
    #[error(transparent)]
    Phi(#[from] PhiError),
    #[error("entry for state {state}, player {player} cannot arise from a signal with this support")]
    OffSupportIncoherent { state: State, player: PlayerIx },
    #[error("posterior likelihoods are not well formed: {0}")]
    InvalidPl(PlError),
    #[error("consistency violated, product {}", .0.product())]
    Violation(Certificate),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Implementable {
        f: FLabeling,
        kernel: SignalKernel,
        signal: String,
    },
    Rejected(Rejection),
}

impl Verdict {
    pub fn is_implementable(&self) -> bool {
        matches!(self, Verdict::Implementable { .. })
    }

    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            Verdict::Rejected(Rejection::Violation(c)) => Some(c),
            _ => None,
        }
    }
}

/// Entries outside Ω₊ must be what Bayes' rule forces: the shared cell entry
/// if the cell meets Ω₊, the empty marker otherwise.
fn off_support_coherent(model: &Model, jb: &JointBelief, plus: &[bool]) -> Result<(), Rejection> {
    for s in (0..model.num_states()).filter(|&s| !plus[s]) {
        for p in 0..model.num_players() {
            let cell = model.partition(p).cell_of(s);
            let ok = match cell.iter().find(|&&t| plus[t]) {
                Some(&alive) => jb.entry(s, p) == jb.entry(alive, p),
                None => jb.entry(s, p).is_empty(),
            };
            if !ok {
                return Err(Rejection::OffSupportIncoherent { state: s, player: p });
            }
        }
    }
    Ok(())
}

/// Expects a validated joint belief.
pub fn decide_implementable(model: &Model, jb: &JointBelief) -> Verdict {
    match decide_inner(model, jb) {
        Ok(v) => v,
        Err(r) => Verdict::Rejected(r),
    }
}

fn decide_inner(model: &Model, jb: &JointBelief) -> Result<Verdict, Rejection> {
    let plus = omega_plus(model, jb);
    if plus.members.iter().all(|m| !m) {
        return Err(Rejection::EmptySupport);
    }
    if let Some(cell) = plus.split_cell {
        return Err(Rejection::OmegaPlusNotMeasurable { cell });
    }
    off_support_coherent(model, jb, &plus.members)?;
    let (graph, phi) = phi_from_jb(model, jb)?;
    let f = solve_f(&graph, model.mediator(), &phi).map_err(|e| match e {
        ConsistencyFailure::Invalid(e) => Rejection::InvalidPl(e),
        ConsistencyFailure::Violation(c) => Rejection::Violation(c),
    })?;
    let kernel = synthesize_tau(model, &f, &plus.members);
    Ok(Verdict::Implementable {
        f,
        kernel,
        signal: SIGNAL.to_string(),
    })
}

/// `τ(s | ω) = f(ω) / (2 max f)` on Ω₊, zero elsewhere, plus the complement.
pub fn synthesize_tau(model: &Model, f: &FLabeling, plus: &[bool]) -> SignalKernel {
    let c = (Rational::int(2) * f.max()).recip().expect("f is positive somewhere");
    synthesize_tau_scaled(model, f, plus, &c)
}

/// As [`synthesize_tau`] with an explicit scale `c ∈ (0, 1 / max f]`.
pub fn synthesize_tau_scaled(model: &Model, f: &FLabeling, plus: &[bool], c: &Rational) -> SignalKernel {
    let s: Vec<Rational> = (0..model.num_states())
        .map(|w| if plus[w] { c * &f.values()[w] } else { Rational::zero() })
        .collect();
    let s0 = s.iter().map(|p| Rational::one() - p).collect();
    SignalKernel::new(model, vec![SIGNAL.to_string(), COMPLEMENT.to_string()], vec![s, s0])
        .expect("f is F-measurable and c keeps probabilities in [0, 1]")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub state: State,
    pub player: PlayerIx,
    pub expected: BeliefEntry,
    pub got: BeliefEntry,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Posterior(#[from] PosteriorError),
    #[error("{} entries differ, first at state {}, player {}", .0.len(), .0[0].state, .0[0].player)]
    Mismatch(Vec<Mismatch>),
}

/// Compares the joint posterior of `signal` with `jb`, entry by entry.
pub fn verify_exact(model: &Model, kernel: &SignalKernel, signal: &str, jb: &JointBelief) -> Result<(), VerifyError> {
    let got = joint_posterior(model, kernel, signal)?;
    let mut mismatches = Vec::new();
    for s in 0..model.num_states() {
        for p in 0..model.num_players() {
            if got.entry(s, p) != jb.entry(s, p) {
                mismatches.push(Mismatch {
                    state: s,
                    player: p,
                    expected: jb.entry(s, p).clone(),
                    got: got.entry(s, p).clone(),
                });
            }
        }
    }
    if mismatches.is_empty() {
        Ok(())
    } else {
        Err(VerifyError::Mismatch(mismatches))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloConfig {
    pub samples: u64,
    pub seed: u64,
    /// Cells observed fewer times than this are not compared.
    pub min_hits: u64,
    pub tolerance_floor: f64,
    pub sigma_multiplier: f64,
}

impl MonteCarloConfig {
    pub fn new(samples: u64, seed: u64) -> Self {
        MonteCarloConfig {
            samples,
            seed,
            min_hits: 100,
            tolerance_floor: 0.01,
            sigma_multiplier: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEntry {
    /// Smallest state of the observed cell.
    pub cell: State,
    pub player: PlayerIx,
    pub state: State,
    pub hits: u64,
    pub expected: f64,
    pub empirical: f64,
    pub deviation: f64,
    pub tolerance: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub samples: u64,
    pub seed: u64,
    pub signal_hits: u64,
    pub compared: Vec<McEntry>,
    pub skipped_cells: usize,
    /// Cells where the belief is the empty marker but the signal was seen.
    pub unexpected_hits: usize,
    pub max_deviation: f64,
    pub low_confidence: bool,
}

impl McReport {
    pub fn passed(&self) -> bool {
        self.unexpected_hits == 0 && self.compared.iter().all(|e| !e.flagged)
    }
}

/// Samples `(ω, signal)` pairs and compares each player's empirical
/// conditional frequencies with `jb`.
pub fn verify_monte_carlo(
    model: &Model,
    kernel: &SignalKernel,
    signal: &str,
    jb: &JointBelief,
    config: &MonteCarloConfig,
) -> Result<McReport, PosteriorError> {
    let sig = kernel
        .signal(signal)
        .ok_or_else(|| PosteriorError::UnknownSignal(signal.to_string()))?;
    let n = model.num_states();
    let prior: Vec<f64> = model.prior_vec().iter().map(Rational::to_f64).collect();
    let tau: Vec<f64> = kernel.row(sig).iter().map(Rational::to_f64).collect();
    let states = WeightedIndex::new(&prior).expect("positive prior");
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut hits_at = vec![0u64; n];
    for _ in 0..config.samples {
        let w = states.sample(&mut rng);
        if rng.gen::<f64>() < tau[w] {
            hits_at[w] += 1;
        }
    }
    let signal_hits = hits_at.iter().sum();

    let mut compared = Vec::new();
    let mut skipped_cells = 0;
    let mut unexpected_hits = 0;
    for p in 0..model.num_players() {
        for cell in model.partition(p).cells() {
            let hits: u64 = cell.iter().map(|&w| hits_at[w]).sum();
            let rep = cell[0];
            let BeliefEntry::Dist(belief) = jb.entry(rep, p) else {
                if hits > 0 {
                    unexpected_hits += 1;
                }
                continue;
            };
            if hits < config.min_hits.max(1) {
                skipped_cells += 1;
                continue;
            }
            for &w in cell {
                let expected = belief.get(w).to_f64();
                let empirical = hits_at[w] as f64 / hits as f64;
                let sigma = (empirical * (1.0 - empirical) / hits as f64).sqrt();
                let tolerance = config.tolerance_floor.max(config.sigma_multiplier * sigma);
                let deviation = (empirical - expected).abs();
                compared.push(McEntry {
                    cell: rep,
                    player: p,
                    state: w,
                    hits,
                    expected,
                    empirical,
                    deviation,
                    tolerance,
                    flagged: deviation > tolerance,
                });
            }
        }
    }
    let max_deviation = compared.iter().map(|e| e.deviation).fold(0.0, f64::max);
    Ok(McReport {
        samples: config.samples,
        seed: config.seed,
        signal_hits,
        low_confidence: skipped_cells > 0 || signal_hits < config.min_hits,
        compared,
        skipped_cells,
        unexpected_hits,
        max_deviation,
    })
}

/// The same decision for the players in `group` only.
pub fn subgroup_check<S: AsRef<str>>(model: &Model, group: &[S], jb: &JointBelief) -> Result<Verdict, RestrictError> {
    let ix = model.player_indices(group)?;
    let sub = model.restrict_players(group)?;
    Ok(decide_implementable(&sub, &jb.restrict_players(&ix)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consistency::{evaluate_certificate, CertificateKind};
    use crate::fixtures;
    use crate::model::{validate_joint_belief, Distribution};

    fn r(n: i64, d: i64) -> Rational {
        Rational::frac(n, d)
    }

    #[test]
    fn omega_plus_examples() {
        let m = fixtures::example1_model();
        let plus = omega_plus(&m, &fixtures::table2(&m));
        assert_eq!(plus.states(), vec![0, 1, 2, 3, 4]);
        assert!(plus.measurable());

        let n = fixtures::negotiation_model();
        assert!(omega_plus(&n, &fixtures::negotiation_jb(&n)).measurable());

        // kill w1 only: player 1 sees {w1,w2} -> (0,1,..), player 2 at w1 empty
        let mut rows = fixtures::table2(&m).rows().to_vec();
        let p1 = BeliefEntry::Dist(Distribution::point(5, 1));
        rows[0][0] = p1.clone();
        rows[1][0] = p1;
        let p2 = BeliefEntry::Dist(Distribution::new(vec![r(0, 1), r(1, 2), r(1, 2), r(0, 1), r(0, 1)]));
        for row in rows.iter_mut().take(3) {
            row[1] = p2.clone();
        }
        let jb = validate_joint_belief(&m, JointBelief::from_entries(rows)).unwrap();
        let plus = omega_plus(&m, &jb);
        assert_eq!(plus.split_cell, Some(vec![0, 3]));
        assert_eq!(
            decide_implementable(&m, &jb),
            Verdict::Rejected(Rejection::OmegaPlusNotMeasurable { cell: vec![0, 3] })
        );
    }

    #[test]
    fn phi_values() {
        let m = fixtures::example1_model();
        let (_, phi) = phi_from_jb(&m, &fixtures::table2(&m)).unwrap();
        assert_eq!(phi.get(0, 1), Some(&r(1, 2)));
        assert_eq!(phi.get(4, 3), Some(&r(2, 1)));
        let (g, phi) = phi_from_jb(&m, &fixtures::table1(&m)).unwrap();
        for (a, b, _) in g.edges() {
            assert!(phi.get(a, b).unwrap().is_one());
        }
    }

    #[test]
    fn phi_disagreement_is_reported() {
        let m = fixtures::example1_model();
        let mut rows = fixtures::table2(&m).rows().to_vec();
        let p1 = BeliefEntry::Dist(Distribution::new(vec![r(1, 2), r(1, 2), r(0, 1), r(0, 1), r(0, 1)]));
        rows[0][0] = p1.clone();
        rows[1][0] = p1;
        let jb = JointBelief::from_entries(rows);
        assert_eq!(
            phi_from_jb(&m, &jb).unwrap_err(),
            PhiError::PhiInconsistentAcrossPlayers {
                from: 0,
                to: 1,
                values: vec![(0, r(1, 1)), (1, r(1, 2))]
            }
        );
    }

    #[test]
    fn table2_is_implementable() {
        let m = fixtures::example1_model();
        let jb = fixtures::table2(&m);
        let Verdict::Implementable { kernel, signal, .. } = decide_implementable(&m, &jb) else {
            panic!("expected implementable");
        };
        assert_eq!(kernel.row(0), &[r(1, 4), r(1, 2), r(1, 2), r(1, 4), r(1, 2)]);
        assert_eq!(kernel.row(1), &[r(3, 4), r(1, 2), r(1, 2), r(3, 4), r(1, 2)]);
        assert!(verify_exact(&m, &kernel, &signal, &jb).is_ok());
    }

    #[test]
    fn modified_table_is_rejected() {
        let m = fixtures::example1_model();
        let jb = fixtures::table2_modified(&m);
        let v = decide_implementable(&m, &jb);
        let cert = v.certificate().expect("certificate");
        assert_eq!(cert.kind(), CertificateKind::FLoopViolation);
        assert_eq!(cert.product(), &r(2, 1));
        let (g, phi) = phi_from_jb(&m, &jb).unwrap();
        assert_eq!(phi.get(0, 1), Some(&r(1, 2)));
        assert_eq!(phi.get(3, 4), Some(&r(1, 4)));
        assert_eq!(evaluate_certificate(&g, m.mediator(), &phi, cert), Ok(r(2, 1)));
    }

    #[test]
    fn negotiation_rejected_and_matched_accepted() {
        let n = fixtures::negotiation_model();
        let v = decide_implementable(&n, &fixtures::negotiation_jb(&n));
        assert_eq!(v.certificate().unwrap().product(), &r(1, 6));
        for p in [r(1, 3), r(1, 4), r(1, 2)] {
            let jb = fixtures::negotiation_matched(&n, &p);
            assert!(decide_implementable(&n, &jb).is_implementable());
        }
    }

    #[test]
    fn constant_f_gives_half() {
        let m = fixtures::example1_model();
        let f = FLabeling(vec![r(3, 1); 5]);
        let k = synthesize_tau(&m, &f, &[true; 5]);
        assert!(k.row(0).iter().all(|p| *p == r(1, 2)));
    }

    #[test]
    fn strict_support_zeroes_the_rest() {
        let m = fixtures::example1_model();
        let plus = [false, true, true, false, true];
        let f = FLabeling(vec![r(0, 1), r(1, 1), r(1, 1), r(0, 1), r(1, 1)]);
        let k = synthesize_tau(&m, &f, &plus);
        assert_eq!(k.row(0)[0], r(0, 1));
        assert_eq!(k.row(1)[3], r(1, 1));
        // the induced joint belief round-trips through the decision
        let jb = joint_posterior(&m, &k, SIGNAL).unwrap();
        let jb = validate_joint_belief(&m, jb).unwrap();
        let Verdict::Implementable { kernel, .. } = decide_implementable(&m, &jb) else {
            panic!("expected implementable");
        };
        assert!(verify_exact(&m, &kernel, SIGNAL, &jb).is_ok());
    }

    #[test]
    fn verify_exact_reports_mismatch() {
        let m = fixtures::example1_model();
        let flat = SignalKernel::uninformative(&m);
        assert!(verify_exact(&m, &flat, "s", &fixtures::table1(&m)).is_ok());
        let k = fixtures::example1_kernel(&m);
        let Err(VerifyError::Mismatch(list)) = verify_exact(&m, &k, "s", &fixtures::table1(&m)) else {
            panic!("expected mismatch");
        };
        assert_eq!((list[0].state, list[0].player), (0, 0));
    }

    #[test]
    fn scale_invariance() {
        let m = fixtures::example1_model();
        let jb = fixtures::table2(&m);
        let Verdict::Implementable { f, .. } = decide_implementable(&m, &jb) else {
            panic!()
        };
        for c in [r(1, 2), r(1, 3), r(1, 100)] {
            let k = synthesize_tau_scaled(&m, &f, &[true; 5], &c);
            assert!(verify_exact(&m, &k, SIGNAL, &jb).is_ok());
        }
    }

    #[test]
    fn monte_carlo_small_sample_is_low_confidence() {
        let m = fixtures::example1_model();
        let k = fixtures::example1_kernel(&m);
        let report = verify_monte_carlo(&m, &k, "s", &fixtures::table2(&m), &MonteCarloConfig::new(10, 7)).unwrap();
        assert!(report.low_confidence);
        assert!(report.passed());
    }

    #[test]
    fn monte_carlo_deterministic_kernel_is_exact() {
        let m = fixtures::example1_model();
        let on: Vec<Rational> = [1, 0, 0, 1, 0].iter().map(|&x| Rational::int(x)).collect();
        let off = on.iter().map(|p| Rational::one() - p).collect();
        let k = SignalKernel::new(&m, vec!["s".into(), "t".into()], vec![on, off]).unwrap();
        let jb = joint_posterior(&m, &k, "s").unwrap();
        let mut cfg = MonteCarloConfig::new(2_000, 3);
        cfg.min_hits = 1;
        let report = verify_monte_carlo(&m, &k, "s", &jb, &cfg).unwrap();
        assert!(report.passed());
        assert_eq!(report.max_deviation, 0.0);
    }

    #[test]
    fn monte_carlo_is_reproducible() {
        let m = fixtures::example1_model();
        let k = fixtures::example1_kernel(&m);
        let jb = fixtures::table2(&m);
        let cfg = MonteCarloConfig::new(5_000, 11);
        assert_eq!(
            verify_monte_carlo(&m, &k, "s", &jb, &cfg).unwrap(),
            verify_monte_carlo(&m, &k, "s", &jb, &cfg).unwrap()
        );
    }

    #[test]
    fn subgroups_of_table2() {
        let m = fixtures::example1_model();
        let jb = fixtures::table2(&m);
        assert!(subgroup_check(&m, &["1"], &jb).unwrap().is_implementable());
        assert!(subgroup_check(&m, &["1", "2"], &jb).unwrap().is_implementable());
        assert_eq!(subgroup_check::<&str>(&m, &[], &jb), Err(RestrictError::EmptySubgroup));
    }
}
