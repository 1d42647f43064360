//! Exact checks for whether a joint posterior (or a family of them) can be
//! induced by a mediator who only observes a coarse partition of the states.
//!
//! Everything is rational arithmetic. Rejections come with a cycle or loop
//! certificate that can be re-evaluated independently.

pub mod cli;
pub mod consistency;
pub mod fixtures;
pub mod generator;
pub mod implement;
pub mod infograph;
pub mod io;
pub mod lp;
pub mod model;
pub mod potential;
pub mod rational;

pub use rational::Rational;
