#![allow(clippy::needless_range_loop)]

pub mod belief;
pub mod cli;
pub mod error;
pub mod evaluate;
pub mod exec;
pub mod extreal;
pub mod fixtures;
pub mod geometry;
pub mod graph;
pub mod linalg;
pub mod lp;
pub mod model;
pub mod montecarlo;
pub mod payoff;
pub mod play;
pub mod rational;
pub mod strategy;
pub mod synthesis;

pub use error::{Error, Result};
pub use extreal::{ExtReal, ExtRealVector};
pub use model::Pomdp;
pub use rational::Rational;
