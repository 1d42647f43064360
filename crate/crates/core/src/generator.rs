//! Generating several posteriors at once: positivity preservation (PP) and
//! its strict form (SPP) as exact LP feasibility questions, and a single
//! kernel whose signals induce a whole family of joint beliefs.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::implement::{decide_implementable, Rejection, Verdict, SIGNAL};
use crate::lp::{self, LpOutcome};
use crate::model::{Distribution, JointBelief, Model, PosteriorError, SignalKernel};
use crate::rational::Rational;

/// `μ_τ(ω | s) = μ(ω) τ(s|ω) / Σ μ(ω′) τ(s|ω′)`.
pub fn posterior_over_omega(model: &Model, kernel: &SignalKernel, signal: &str) -> Result<Distribution, PosteriorError> {
    let sig = kernel
        .signal(signal)
        .ok_or_else(|| PosteriorError::UnknownSignal(signal.to_string()))?;
    let weights: Vec<Rational> = (0..model.num_states())
        .map(|w| model.prior(w) * kernel.prob(sig, w))
        .collect();
    Distribution::new(weights)
        .normalized()
        .ok_or_else(|| PosteriorError::SignalHasZeroProbability(signal.to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FamilyError {
    #[error("family is empty")]
    Empty,
    #[error("member {0} has the wrong length")]
    LengthMismatch(usize),
    #[error("member {0} is not a probability vector")]
    NotADistribution(usize),
    #[error("prior must be a strictly positive probability vector")]
    BadPrior,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PosteriorFamily {
    prior: Distribution,
    members: Vec<Distribution>,
}

impl PosteriorFamily {
    pub fn new(prior: Distribution, members: Vec<Distribution>) -> Result<Self, FamilyError> {
        if !prior.total().is_one() || prior.probs().iter().any(|p| !p.is_positive()) {
            return Err(FamilyError::BadPrior);
        }
        if members.is_empty() {
            return Err(FamilyError::Empty);
        }
        for (i, m) in members.iter().enumerate() {
            if m.len() != prior.len() {
                return Err(FamilyError::LengthMismatch(i));
            }
            if !m.total().is_one() || m.probs().iter().any(Rational::is_negative) {
                return Err(FamilyError::NotADistribution(i));
            }
        }
        Ok(PosteriorFamily { prior, members })
    }

    pub fn prior(&self) -> &Distribution {
        &self.prior
    }

    pub fn members(&self) -> &[Distribution] {
        &self.members
    }

    /// Rows are states, columns are members.
    fn matrix(&self) -> Vec<Vec<Rational>> {
        (0..self.prior.len())
            .map(|w| self.members.iter().map(|m| m.get(w).clone()).collect())
            .collect()
    }

    /// `Σ qᵢ μᵢ == μ` with `q ≥ 0`, `Σ q = 1`.
    pub fn is_combination(&self, weights: &[Rational]) -> bool {
        weights.len() == self.members.len()
            && weights.iter().all(|q| !q.is_negative())
            && weights.iter().sum::<Rational>().is_one()
            && (0..self.prior.len()).all(|w| {
                let mix: Rational = weights.iter().zip(&self.members).map(|(q, m)| q * m.get(w)).sum();
                &mix == self.prior.get(w)
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PpVerdict {
    Holds { weights: Vec<Rational> },
    /// `E_{μᵢ}[u] ≥ 0` for every member and `E_μ[u] < 0`.
    Fails { option: Vec<Rational> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SppVerdict {
    Holds { weights: Vec<Rational> },
    /// `E_μ[u] = 0`, `E_{μᵢ}[u] ≥ 0` for all members, `> 0` for `member`.
    Fails { member: usize, option: Vec<Rational> },
}

/// Integer entries with no common factor; same direction.
fn primitive(v: &[Rational]) -> Vec<Rational> {
    let denom = Rational::common_denominator(v);
    let ints: Vec<BigInt> = v
        .iter()
        .map(|x| x.numer() * (&denom / x.denom()))
        .collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() {
        return v.to_vec();
    }
    ints.into_iter().map(|x| Rational::from(x / g.abs())).collect()
}

pub fn check_pp(family: &PosteriorFamily) -> PpVerdict {
    let a = family.matrix();
    let zero_cost = vec![Rational::zero(); family.members.len()];
    match lp::solve(&a, family.prior.probs(), &zero_cost) {
        LpOutcome::Optimal { x, .. } => PpVerdict::Holds { weights: x },
        LpOutcome::Infeasible { farkas } => {
            let u: Vec<Rational> = farkas.iter().map(|y| -y).collect();
            PpVerdict::Fails { option: primitive(&u) }
        }
        LpOutcome::Unbounded => unreachable!("feasibility problem has zero cost"),
    }
}

pub fn check_spp(family: &PosteriorFamily) -> SppVerdict {
    let u = match check_pp(family) {
        PpVerdict::Holds { .. } => None,
        PpVerdict::Fails { option } => Some(option),
    };
    if let Some(u) = u {
        let mean = family.prior.expect(&u);
        let shifted: Vec<Rational> = u.iter().map(|x| x - &mean).collect();
        return SppVerdict::Fails {
            member: 0,
            option: primitive(&shifted),
        };
    }
    let a = family.matrix();
    let k = family.members.len();
    let mut vertices: Vec<Vec<Rational>> = Vec::new();
    for j in 0..k {
        let cost: Vec<Rational> = (0..k)
            .map(|i| if i == j { -Rational::one() } else { Rational::zero() })
            .collect();
        let LpOutcome::Optimal { x, dual, .. } = lp::solve(&a, family.prior.probs(), &cost) else {
            unreachable!("feasible and bounded by the simplex constraint");
        };
        if x[j].is_zero() {
            let u: Vec<Rational> = dual.iter().map(|y| -y).collect();
            return SppVerdict::Fails {
                member: j,
                option: primitive(&u),
            };
        }
        if !vertices.contains(&x) {
            vertices.push(x);
        }
    }
    let count = Rational::int(vertices.len() as i64);
    let weights = (0..k)
        .map(|i| {
            let s: Rational = vertices.iter().map(|v| &v[i]).sum();
            s.checked_div(&count).expect("at least one vertex")
        })
        .collect();
    SppVerdict::Holds { weights }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Semantics {
    /// Some signals may be dropped; every induced posterior is in the family.
    Pp,
    /// Every family member must be induced.
    Spp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiKernel {
    pub kernel: SignalKernel,
    /// Probability of each signal, in signal order.
    pub weights: Vec<Rational>,
    /// Posterior over states after each signal.
    pub posteriors: Vec<Distribution>,
    /// For each input joint belief, the signal inducing it (if kept).
    pub member_signal: Vec<Option<usize>>,
    /// True when only PP held and zero-weight members were dropped.
    pub degraded: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MultiError {
    #[error("no joint beliefs given")]
    Empty,
    #[error("member {index} is not implementable: {rejection}")]
    PerMemberRejected { index: usize, rejection: Rejection },
    #[error("the family does not preserve positivity")]
    NotPp { option: Vec<Rational> },
    #[error("the family does not strictly preserve positivity (member {member})")]
    NotSpp { member: usize, option: Vec<Rational> },
}

pub fn synthesize_multi(model: &Model, jbs: &[JointBelief], semantics: Semantics) -> Result<MultiKernel, MultiError> {
    if jbs.is_empty() {
        return Err(MultiError::Empty);
    }
    let mut unique: Vec<Distribution> = Vec::new();
    let mut member_of = Vec::with_capacity(jbs.len());
    for (index, jb) in jbs.iter().enumerate() {
        let kernel = match decide_implementable(model, jb) {
            Verdict::Implementable { kernel, .. } => kernel,
            Verdict::Rejected(rejection) => return Err(MultiError::PerMemberRejected { index, rejection }),
        };
        let mu = posterior_over_omega(model, &kernel, SIGNAL).expect("synthesized signal has positive probability");
        let pos = match unique.iter().position(|u| u == &mu) {
            Some(p) => p,
            None => {
                unique.push(mu);
                unique.len() - 1
            }
        };
        member_of.push(pos);
    }
    let family = PosteriorFamily::new(model.prior_distribution(), unique).expect("posteriors are distributions");
    let first_input = |u: usize| member_of.iter().position(|&m| m == u).unwrap_or(u);

    let (weights, degraded) = match check_spp(&family) {
        SppVerdict::Holds { weights } => (weights, false),
        SppVerdict::Fails { member, option } => match semantics {
            Semantics::Spp => {
                return Err(MultiError::NotSpp {
                    member: first_input(member),
                    option,
                })
            }
            Semantics::Pp => match check_pp(&family) {
                PpVerdict::Holds { weights } => (weights, true),
                PpVerdict::Fails { option } => return Err(MultiError::NotPp { option }),
            },
        },
    };

    let kept: Vec<usize> = (0..weights.len()).filter(|&i| weights[i].is_positive()).collect();
    let n = model.num_states();
    let table: Vec<Vec<Rational>> = kept
        .iter()
        .map(|&i| {
            (0..n)
                .map(|w| {
                    (&weights[i] * family.members[i].get(w))
                        .checked_div(model.prior(w))
                        .expect("positive prior")
                })
                .collect()
        })
        .collect();
    let signals = (1..=kept.len()).map(|k| format!("s{k}")).collect();
    let kernel = SignalKernel::new(model, signals, table).expect("rows sum to one and are F-measurable");
    let member_signal = member_of
        .iter()
        .map(|&u| kept.iter().position(|&k| k == u))
        .collect();
    Ok(MultiKernel {
        kernel,
        weights: kept.iter().map(|&i| weights[i].clone()).collect(),
        posteriors: kept.iter().map(|&i| family.members[i].clone()).collect(),
        member_signal,
        degraded,
    })
}
