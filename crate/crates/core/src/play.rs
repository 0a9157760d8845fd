//! Finite histories and ultimately periodic plays.

use num_traits::Signed;

use crate::error::{Error, Result};
use crate::model::Pomdp;

/// `s0 a0 s1 a1 ... sn`; always one more state than actions.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct History {
    pub states: Vec<usize>,
    pub actions: Vec<usize>,
}

impl History {
    pub fn start(s: usize) -> Self {
        History { states: vec![s], actions: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn last(&self) -> usize {
        *self.states.last().unwrap()
    }

    pub fn extended(&self, a: usize, s: usize) -> Self {
        let mut h = self.clone();
        h.actions.push(a);
        h.states.push(s);
        h
    }

    /// Whether `self` starts with `other`.
    pub fn extends(&self, other: &History) -> bool {
        self.states.starts_with(&other.states) && self.actions.starts_with(&other.actions)
    }

    /// Parses whitespace-separated alternating names, e.g. `s a s a t`.
    pub fn parse(m: &Pomdp, text: &str) -> Result<Self> {
        let tokens: Vec<&str> = text.split_whitespace().collect();
        if tokens.len().is_multiple_of(2) {
            return Err(Error::MalformedHistory(format!("`{text}` must alternate states and actions")));
        }
        let mut h = History { states: Vec::new(), actions: Vec::new() };
        for (i, t) in tokens.iter().enumerate() {
            if i % 2 == 0 {
                h.states.push(m.state_index(t).map_err(|_| Error::MalformedHistory(format!("unknown state `{t}`")))?);
            } else {
                h.actions.push(m.action_index(t).map_err(|_| Error::MalformedHistory(format!("unknown action `{t}`")))?);
            }
        }
        Ok(h)
    }

    /// Every step is an enabled action with a positive-probability successor.
    pub fn check(&self, m: &Pomdp) -> Result<()> {
        if self.states.len() != self.actions.len() + 1 {
            return Err(Error::MalformedHistory("state/action counts do not alternate".into()));
        }
        for i in 0..self.actions.len() {
            let (s, a, t) = (self.states[i], self.actions[i], self.states[i + 1]);
            if s >= m.num_states() || t >= m.num_states() || a >= m.num_actions() {
                return Err(Error::MalformedHistory("index out of range".into()));
            }
            if !step_possible(m, s, a, t) {
                return Err(Error::MalformedHistory(format!(
                    "step {} {} {} has probability zero",
                    m.states[s], m.actions[a], m.states[t]
                )));
            }
        }
        Ok(())
    }

    pub fn render(&self, m: &Pomdp) -> String {
        let mut out = m.states[self.states[0]].clone();
        for (a, s) in self.actions.iter().zip(&self.states[1..]) {
            out.push(' ');
            out.push_str(&m.actions[*a]);
            out.push(' ');
            out.push_str(&m.states[*s]);
        }
        out
    }
}

fn step_possible(m: &Pomdp, s: usize, a: usize, t: usize) -> bool {
    m.dist(s, a)
        .is_some_and(|d| d.iter().any(|(u, p)| *u == t && p.is_positive()))
}

/// `prefix` followed by `cycle` repeated forever, as `(state, action)` steps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LassoPlay {
    pub prefix: Vec<(usize, usize)>,
    pub cycle: Vec<(usize, usize)>,
}

impl LassoPlay {
    /// Parses `s0 a s2 b (s3 a)`: the parenthesised part is the cycle.
    pub fn parse(m: &Pomdp, text: &str) -> Result<Self> {
        let open = text.find('(').ok_or_else(|| Error::MalformedLasso("missing `(cycle)`".into()))?;
        let close = text.rfind(')').filter(|&c| c > open).ok_or_else(|| Error::MalformedLasso("unclosed cycle".into()))?;
        if !text[close + 1..].trim().is_empty() {
            return Err(Error::MalformedLasso("text after the cycle".into()));
        }
        let steps = |part: &str| -> Result<Vec<(usize, usize)>> {
            let tokens: Vec<&str> = part.split_whitespace().collect();
            if !tokens.len().is_multiple_of(2) {
                return Err(Error::MalformedLasso(format!("`{part}` is not a list of state/action pairs")));
            }
            tokens
                .chunks(2)
                .map(|c| {
                    let s = m.state_index(c[0]).map_err(|_| Error::MalformedLasso(format!("unknown state `{}`", c[0])))?;
                    let a = m.action_index(c[1]).map_err(|_| Error::MalformedLasso(format!("unknown action `{}`", c[1])))?;
                    Ok((s, a))
                })
                .collect()
        };
        let play = LassoPlay { prefix: steps(&text[..open])?, cycle: steps(&text[open + 1..close])? };
        play.check(m)?;
        Ok(play)
    }

    pub fn check(&self, m: &Pomdp) -> Result<()> {
        if self.cycle.is_empty() {
            return Err(Error::MalformedLasso("empty cycle".into()));
        }
        let all: Vec<&(usize, usize)> = self.prefix.iter().chain(&self.cycle).collect();
        for (i, &&(s, a)) in all.iter().enumerate() {
            let next = if i + 1 < all.len() { all[i + 1].0 } else { self.cycle[0].0 };
            if s >= m.num_states() || a >= m.num_actions() || !step_possible(m, s, a, next) {
                return Err(Error::MalformedLasso(format!("step {i} is impossible")));
            }
        }
        Ok(())
    }

    /// The `i`-th step of the infinite play.
    pub fn step(&self, i: usize) -> (usize, usize) {
        if i < self.prefix.len() {
            self.prefix[i]
        } else {
            self.cycle[(i - self.prefix.len()) % self.cycle.len()]
        }
    }
}
