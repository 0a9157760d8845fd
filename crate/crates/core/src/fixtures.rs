//! Bundled example models and the strategies used with them.

use std::sync::Arc;

use crate::error::Result;
use crate::model::{self, Document, PayoffDecl, Unrolled};
use crate::rational::Rational;
use crate::strategy::{MemorySkeleton, PureStrategy};

pub const COMMUTE: &str = include_str!("../models/commute.json");
pub const COMMUTE40: &str = include_str!("../models/commute40.json");
pub const RUNNING: &str = include_str!("../models/running.json");
pub const TRIANGLE: &str = include_str!("../models/triangle.json");
pub const UNBOUNDED: &str = include_str!("../models/unbounded.json");
pub const COIN: &str = include_str!("../models/coin.json");
pub const DELAY: &str = include_str!("../models/delay.json");

/// `(name, text)` of every bundled model.
pub const ALL: [(&str, &str); 7] = [
    ("commute", COMMUTE),
    ("commute40", COMMUTE40),
    ("running", RUNNING),
    ("triangle", TRIANGLE),
    ("unbounded", UNBOUNDED),
    ("coin", COIN),
    ("delay", DELAY),
];

fn load(text: &str) -> Document {
    model::load_document(text).expect("bundled model parses")
}

pub fn commute() -> Document {
    load(COMMUTE)
}

pub fn running() -> Document {
    load(RUNNING)
}

pub fn triangle() -> Document {
    load(TRIANGLE)
}

pub fn unbounded() -> Document {
    load(UNBOUNDED)
}

pub fn coin() -> Document {
    load(COIN)
}

pub fn delay() -> Document {
    load(DELAY)
}

/// The commute model with travel time unrolled up to `bound`, carrying a
/// single reachability payoff for "at work within the bound".
pub fn commute_within(bound: &Rational) -> Result<(Unrolled, Document)> {
    let doc = commute();
    let m = &doc.model;
    let home = m.state_index("home")?;
    let work = m.state_set(&["work"])?;
    let u = model::unroll_cost(m, &m.weight_function("time", 0)?, &work, home, bound)?;
    let decl = PayoffDecl {
        kind: "ReachIndicator".into(),
        name: Some("on_time".into()),
        target: Some(u.within.iter().map(|&s| u.model.states[s].clone()).collect()),
        lambda: None,
        weights: None,
        component: None,
        negate: false,
    };
    let out = Document { model: u.model.clone(), payoffs: vec![decl] };
    Ok((u, out))
}

/// Memoryless: always take the train from home.
pub fn sigma_train(m: &model::Pomdp) -> Result<PureStrategy> {
    let train = m.action_index("train")?;
    let sk = Arc::new(MemorySkeleton::memoryless(m));
    Ok(PureStrategy::uniform_choice(m, sk, |_, _| train))
}

/// Train twice from home, then bike.
pub fn sigma_two_trains_then_bike(m: &model::Pomdp) -> Result<PureStrategy> {
    let (train, bike) = (m.action_index("train")?, m.action_index("bike")?);
    let home = m.observation_index("home")?;
    let sk = Arc::new(MemorySkeleton::counter(m, 2));
    Ok(PureStrategy::uniform_choice(m, sk, |mem, z| if z == home && mem == 2 { bike } else { train }))
}

/// Plays `a` for `n` rounds, then `b` forever.
pub fn a_then_b(m: &model::Pomdp, n: usize) -> Result<PureStrategy> {
    let (a, b) = (m.action_index("a")?, m.action_index("b")?);
    let sk = Arc::new(MemorySkeleton::counter(m, n));
    Ok(PureStrategy::uniform_choice(m, sk, |mem, _| if mem < n { a } else { b }))
}
