//! The two worked instances (the four-state negotiation and the five-state
//! example with its two belief tables), plus a few small games.

use crate::io::{self, RawGame};
use crate::model::{
    joint_belief_from_raw, validate_joint_belief, validate_model, BeliefEntry, Distribution, JointBelief, Model,
    SignalKernel,
};
use crate::potential::StrategicGame;
use crate::rational::Rational;

pub const EXAMPLE1_TABLE1: &str = include_str!("../fixtures/example1_table1.json");
pub const EXAMPLE1_TABLE2: &str = include_str!("../fixtures/example1_table2.json");
pub const EXAMPLE1_MODIFIED: &str = include_str!("../fixtures/example1_modified.json");
pub const EXAMPLE1_KERNEL: &str = include_str!("../fixtures/example1_kernel.json");
pub const NEGOTIATION: &str = include_str!("../fixtures/negotiation.json");
pub const TWO_STATE_HIGH: &str = include_str!("../fixtures/two_state_high.json");
pub const TWO_STATE_LOW: &str = include_str!("../fixtures/two_state_low.json");
pub const PRISONERS_DILEMMA: &str = include_str!("../fixtures/prisoners_dilemma.json");
pub const MATCHING_PENNIES: &str = include_str!("../fixtures/matching_pennies.json");
pub const NEGOTIATION_W1_GAME: &str = include_str!("../fixtures/negotiation_w1_game.json");

pub const INSTANCE_FILES: [&str; 6] = [
    EXAMPLE1_TABLE1,
    EXAMPLE1_TABLE2,
    EXAMPLE1_MODIFIED,
    NEGOTIATION,
    TWO_STATE_HIGH,
    TWO_STATE_LOW,
];

fn model_of(text: &str) -> Model {
    validate_model(&io::parse_instance(text).expect("fixture parses")).expect("fixture model is valid")
}

fn jb_of(model: &Model, text: &str) -> JointBelief {
    let raw = io::parse_joint_belief(text).expect("fixture parses");
    let jb = joint_belief_from_raw(model, &raw).expect("fixture joint belief is complete");
    validate_joint_belief(model, jb).expect("fixture joint belief is valid")
}

fn game_of(text: &str) -> StrategicGame {
    let raw: RawGame = serde_json::from_str(text).expect("fixture parses");
    StrategicGame::from_raw(&raw).expect("fixture game is valid")
}

/// Four states, uniform prior, mediator cells {w1,w3} and {w2,w4}.
pub fn negotiation_model() -> Model {
    model_of(NEGOTIATION)
}

/// Player 1 believes (1/3, 2/3) on {w1, w2}; player 2 believes (3/4, 1/4)
/// on {w3, w4}. Not implementable.
pub fn negotiation_jb(model: &Model) -> JointBelief {
    jb_of(model, NEGOTIATION)
}

/// Both players hold `(p, 1 - p)` on their uninformed cell.
pub fn negotiation_matched(model: &Model, p: &Rational) -> JointBelief {
    let q = Rational::one() - p;
    let n = model.num_states();
    let rows = (0..n)
        .map(|s| {
            let p1 = if s < 2 {
                Distribution::new(vec![p.clone(), q.clone(), Rational::zero(), Rational::zero()])
            } else {
                Distribution::point(n, s)
            };
            let p2 = if s >= 2 {
                Distribution::new(vec![Rational::zero(), Rational::zero(), p.clone(), q.clone()])
            } else {
                Distribution::point(n, s)
            };
            vec![BeliefEntry::Dist(p1), BeliefEntry::Dist(p2)]
        })
        .collect();
    JointBelief::from_entries(rows)
}

/// Five states, uniform prior, mediator cells {w1,w4} and {w2,w3,w5}.
pub fn example1_model() -> Model {
    model_of(EXAMPLE1_TABLE2)
}

pub fn table1(model: &Model) -> JointBelief {
    jb_of(model, EXAMPLE1_TABLE1)
}

pub fn table2(model: &Model) -> JointBelief {
    jb_of(model, EXAMPLE1_TABLE2)
}

/// Table 2 with player 1 believing (1/5, 4/5) on {w4, w5}.
pub fn table2_modified(model: &Model) -> JointBelief {
    jb_of(model, EXAMPLE1_MODIFIED)
}

/// `τ(s | ·) = (1/5, 2/5, 2/5, 1/5, 2/5)` with complement `s0`.
pub fn example1_kernel(model: &Model) -> SignalKernel {
    let raw = serde_json::from_str(EXAMPLE1_KERNEL).expect("fixture parses");
    io::kernel_from_raw(model, &raw).expect("fixture kernel is valid")
}

/// Two states `a`, `b`, uniform prior, both players uninformed, discrete
/// mediator.
pub fn two_state_model() -> Model {
    model_of(TWO_STATE_HIGH)
}

/// Beliefs (2/3, 1/3) and (1/3, 2/3).
pub fn two_state_family(model: &Model) -> Vec<JointBelief> {
    vec![jb_of(model, TWO_STATE_HIGH), jb_of(model, TWO_STATE_LOW)]
}

pub fn prisoners_dilemma() -> StrategicGame {
    game_of(PRISONERS_DILEMMA)
}

pub fn matching_pennies() -> StrategicGame {
    game_of(MATCHING_PENNIES)
}

/// The negotiation stage game when `x = 2` and player 1 has the upper hand
/// (state w1).
pub fn negotiation_w1_game() -> StrategicGame {
    game_of(NEGOTIATION_W1_GAME)
}

/// Stage game in negotiation state `state` (0-based). The player with the
/// upper hand is 1 in w1, w3 and 2 in w2, w4; conceding to them pays `x`,
/// which is 2 in w1, w2 and 3 in w3, w4.
pub fn negotiation_stage_game(state: usize) -> StrategicGame {
    assert!(state < 4, "negotiation has four states");
    let x = Rational::int(if state < 2 { 2 } else { 3 });
    let i = Rational::int;
    // profiles (A,A), (A,C), (C,A), (C,C)
    let payoffs = if state.is_multiple_of(2) {
        vec![vec![i(2), i(-5)], vec![x, i(-4)], vec![i(-1), i(-1)], vec![i(0), i(0)]]
    } else {
        vec![vec![i(-5), i(2)], vec![i(-1), i(-1)], vec![i(-4), x], vec![i(0), i(0)]]
    };
    let acts = vec!["A".to_string(), "C".to_string()];
    StrategicGame::new(vec!["1".into(), "2".into()], vec![acts.clone(), acts], payoffs).expect("well formed")
}
