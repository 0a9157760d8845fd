//! Finite-memory strategies, product chains and the strategy premetric.

mod enumerate;
mod format;
mod kuhn;

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::Arc;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::model::Pomdp;
use crate::play::History;
use crate::rational::Rational;

pub use enumerate::{enumerate_pure, enumerate_pure_from, pool_size};
pub use format::{
    load_mixture, load_skeleton, load_strategy, mixture_to_json, named_skeleton, skeleton_to_json,
    strategy_to_json,
};
pub use kuhn::mixed_to_behavioural;

/// A distribution over action indices.
pub type ActionDist = Vec<(usize, Rational)>;

/// Memory states `0..size`, initial state and a total update
/// `(memory, observation, action) -> memory`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MemorySkeleton {
    pub size: usize,
    pub init: usize,
    pub num_obs: usize,
    pub num_actions: usize,
    update: Vec<usize>,
    pub label: String,
}

impl MemorySkeleton {
    pub fn new(size: usize, init: usize, num_obs: usize, num_actions: usize, label: impl Into<String>) -> Self {
        let mut update = Vec::with_capacity(size * num_obs * num_actions);
        for mem in 0..size {
            update.extend(std::iter::repeat_n(mem, num_obs * num_actions));
        }
        MemorySkeleton { size, init, num_obs, num_actions, update, label: label.into() }
    }

    pub fn memoryless(m: &Pomdp) -> Self {
        Self::new(1, 0, m.num_observations(), m.num_actions(), "memoryless")
    }

    /// Memory counts steps up to `h`: `m' = min(m + 1, h)`.
    pub fn counter(m: &Pomdp, h: usize) -> Self {
        let mut sk = Self::new(h + 1, 0, m.num_observations(), m.num_actions(), format!("counter:{h}"));
        for mem in 0..=h {
            for z in 0..sk.num_obs {
                for a in 0..sk.num_actions {
                    sk.set_next(mem, z, a, (mem + 1).min(h));
                }
            }
        }
        sk
    }

    fn slot(&self, mem: usize, z: usize, a: usize) -> usize {
        (mem * self.num_obs + z) * self.num_actions + a
    }

    pub fn next(&self, mem: usize, z: usize, a: usize) -> usize {
        self.update[self.slot(mem, z, a)]
    }

    pub fn set_next(&mut self, mem: usize, z: usize, a: usize, to: usize) {
        let i = self.slot(mem, z, a);
        self.update[i] = to;
    }

    /// Whether both skeletons fit the same model shape.
    pub fn fits(&self, m: &Pomdp) -> bool {
        self.num_obs == m.num_observations() && self.num_actions == m.num_actions()
    }
}

/// A Mealy-style behavioural strategy over a memory skeleton.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMemoryStrategy {
    pub skeleton: Arc<MemorySkeleton>,
    act: Vec<ActionDist>,
}

impl FiniteMemoryStrategy {
    /// Every `(memory, observation)` starts with an empty distribution.
    pub fn new(skeleton: Arc<MemorySkeleton>) -> Self {
        let n = skeleton.size * skeleton.num_obs;
        FiniteMemoryStrategy { skeleton, act: vec![Vec::new(); n] }
    }

    pub fn act(&self, mem: usize, z: usize) -> &ActionDist {
        &self.act[mem * self.skeleton.num_obs + z]
    }

    pub fn set_act(&mut self, mem: usize, z: usize, dist: ActionDist) {
        let i = mem * self.skeleton.num_obs + z;
        let mut dist: ActionDist = dist.into_iter().filter(|(_, p)| !p.is_zero()).collect();
        dist.sort_by_key(|e| e.0);
        self.act[i] = dist;
    }

    pub fn prob(&self, mem: usize, z: usize, a: usize) -> Rational {
        self.act(mem, z)
            .iter()
            .find(|(b, _)| *b == a)
            .map_or_else(Rational::zero, |(_, p)| p.clone())
    }

    pub fn is_pure(&self) -> bool {
        self.act.iter().all(|d| d.len() <= 1)
    }

    /// Memoryless strategy playing the named action in every state where it
    /// is enabled, and the first enabled action elsewhere.
    pub fn always(m: &Pomdp, action: usize) -> Self {
        PureStrategy::always(m, action).to_behavioural()
    }

    /// Checks that every distribution sums to one over actions enabled
    /// under its observation.
    pub fn check(&self, m: &Pomdp) -> Result<()> {
        if !self.skeleton.fits(m) {
            return Err(Error::InvalidArgument("strategy does not fit the model".into()));
        }
        for mem in 0..self.skeleton.size {
            for z in 0..m.num_observations() {
                let enabled = m.enabled_for_obs(z);
                if enabled.is_empty() {
                    continue;
                }
                let d = self.act(mem, z);
                let total = d.iter().fold(Rational::zero(), |acc, (_, p)| acc + p);
                if !total.is_one() || d.iter().any(|(_, p)| p.is_negative()) {
                    return Err(Error::InvalidArgument(format!(
                        "act({mem},{}) is not a distribution",
                        m.observations[z]
                    )));
                }
                if let Some((a, _)) = d.iter().find(|(a, _)| !enabled.contains(a)) {
                    return Err(Error::DisabledAction(m.actions[*a].clone()));
                }
            }
        }
        Ok(())
    }
}

/// A deterministic act table over a skeleton.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PureStrategy {
    pub skeleton: Arc<MemorySkeleton>,
    pub choice: Vec<usize>,
}

impl PureStrategy {
    pub fn action(&self, mem: usize, z: usize) -> usize {
        self.choice[mem * self.skeleton.num_obs + z]
    }

    pub fn set_action(&mut self, mem: usize, z: usize, a: usize) {
        let i = mem * self.skeleton.num_obs + z;
        self.choice[i] = a;
    }

    /// Memoryless: `action` wherever enabled, the first enabled action elsewhere.
    pub fn always(m: &Pomdp, action: usize) -> Self {
        let sk = Arc::new(MemorySkeleton::memoryless(m));
        Self::uniform_choice(m, sk, |_, _| action)
    }

    /// Fills every `(memory, observation)` with `pick(memory, observation)`,
    /// falling back to the first enabled action when that is disabled.
    pub fn uniform_choice(m: &Pomdp, skeleton: Arc<MemorySkeleton>, pick: impl Fn(usize, usize) -> usize) -> Self {
        let mut choice = vec![0; skeleton.size * skeleton.num_obs];
        for mem in 0..skeleton.size {
            for z in 0..skeleton.num_obs {
                let enabled = m.enabled_for_obs(z);
                let want = pick(mem, z);
                choice[mem * skeleton.num_obs + z] =
                    if enabled.contains(&want) { want } else { enabled.first().copied().unwrap_or(0) };
            }
        }
        PureStrategy { skeleton, choice }
    }

    pub fn to_behavioural(&self) -> FiniteMemoryStrategy {
        let mut s = FiniteMemoryStrategy::new(self.skeleton.clone());
        for mem in 0..self.skeleton.size {
            for z in 0..self.skeleton.num_obs {
                s.set_act(mem, z, vec![(self.action(mem, z), Rational::one())]);
            }
        }
        s
    }
}

/// A distribution over finitely many pure strategies, drawn once up front.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMixture {
    pub support: Vec<PureStrategy>,
    pub weights: Vec<Rational>,
}

impl FiniteMixture {
    /// Drops zero weights; weights must be non-negative and sum to one.
    pub fn new(support: Vec<PureStrategy>, weights: Vec<Rational>) -> Result<Self> {
        if support.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: support.len(), got: weights.len() });
        }
        if support.is_empty() {
            return Err(Error::EmptySupport);
        }
        if weights.iter().any(Signed::is_negative) {
            return Err(Error::InvalidArgument("negative mixture weight".into()));
        }
        let total = weights.iter().fold(Rational::zero(), |acc, w| acc + w);
        if !total.is_one() {
            return Err(Error::InvalidArgument(format!(
                "mixture weights sum to {}",
                crate::rational::format(&total)
            )));
        }
        let (support, weights): (Vec<_>, Vec<_>) =
            support.into_iter().zip(weights).filter(|(_, w)| !w.is_zero()).unzip();
        if support.is_empty() {
            return Err(Error::EmptySupport);
        }
        Ok(FiniteMixture { support, weights })
    }

    pub fn dirac(s: PureStrategy) -> Self {
        FiniteMixture { support: vec![s], weights: vec![Rational::one()] }
    }
}

// ---------------------------------------------------------------------------
// Product chain

#[derive(Clone, Debug, PartialEq)]
pub struct Move {
    pub action: usize,
    pub prob: Rational,
    /// Chain successors with their model transition probability.
    pub successors: Vec<(usize, Rational)>,
}

/// The finite Markov chain of a model under a finite-memory strategy,
/// restricted to pairs reachable from the initial one (index 0).
#[derive(Clone, Debug)]
pub struct MarkovChain {
    pub states: Vec<(usize, usize)>,
    pub moves: Vec<Vec<Move>>,
}

impl MarkovChain {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn model_state(&self, i: usize) -> usize {
        self.states[i].0
    }

    /// Merged transition row of chain state `i`.
    pub fn row(&self, i: usize) -> Vec<(usize, Rational)> {
        let mut acc: HashMap<usize, Rational> = HashMap::new();
        for mv in &self.moves[i] {
            for (j, p) in &mv.successors {
                *acc.entry(*j).or_insert_with(Rational::zero) += &mv.prob * p;
            }
        }
        let mut row: Vec<_> = acc.into_iter().collect();
        row.sort_by_key(|e| e.0);
        row
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        self.moves
            .iter()
            .map(|mvs| {
                let mut succ: Vec<usize> = mvs.iter().flat_map(|mv| mv.successors.iter().map(|s| s.0)).collect();
                succ.sort_unstable();
                succ.dedup();
                succ
            })
            .collect()
    }
}

pub fn product_chain(m: &Pomdp, sigma: &FiniteMemoryStrategy, s0: usize) -> Result<MarkovChain> {
    if s0 >= m.num_states() {
        return Err(Error::UnknownState(format!("#{s0}")));
    }
    if !sigma.skeleton.fits(m) {
        return Err(Error::InvalidArgument("strategy does not fit the model".into()));
    }
    let sk = &sigma.skeleton;
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut states = vec![(s0, sk.init)];
    index.insert((s0, sk.init), 0);
    let mut moves: Vec<Vec<Move>> = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let (s, q) = states[i];
        let z = m.obs[s];
        let mut out = Vec::new();
        for (a, p) in sigma.act(q, z) {
            let d = m.dist(s, *a).ok_or_else(|| Error::DisabledAction(m.actions[*a].clone()))?;
            let q2 = sk.next(q, z, *a);
            let successors = d
                .iter()
                .map(|(t, pr)| {
                    let key = (*t, q2);
                    let j = *index.entry(key).or_insert_with(|| {
                        states.push(key);
                        queue.push_back(states.len() - 1);
                        states.len() - 1
                    });
                    (j, pr.clone())
                })
                .collect();
            out.push(Move { action: *a, prob: p.clone(), successors });
        }
        if out.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "strategy has no action at memory {q}, observation `{}`",
                m.observations[z]
            )));
        }
        if moves.len() <= i {
            moves.resize(i + 1, Vec::new());
        }
        moves[i] = out;
    }
    Ok(MarkovChain { states, moves })
}

/// Probability of the cylinder of `h` under `sigma` from `s0`.
pub fn cylinder_prob(m: &Pomdp, sigma: &FiniteMemoryStrategy, s0: usize, h: &History) -> Result<Rational> {
    h.check(m)?;
    if h.states[0] != s0 {
        return Ok(Rational::zero());
    }
    let mut q = sigma.skeleton.init;
    let mut p = Rational::one();
    for i in 0..h.actions.len() {
        let (s, a, t) = (h.states[i], h.actions[i], h.states[i + 1]);
        let z = m.obs[s];
        let pa = sigma.prob(q, z, a);
        if pa.is_zero() {
            return Ok(Rational::zero());
        }
        let pt = m.dist(s, a).unwrap().iter().find(|(u, _)| *u == t).unwrap().1.clone();
        p = p * pa * pt;
        q = sigma.skeleton.next(q, z, a);
    }
    Ok(p)
}

/// All histories from `s0` with exactly `transitions` steps and positive
/// model probability.
pub fn histories(m: &Pomdp, s0: usize, transitions: usize) -> Vec<History> {
    let mut layer = vec![History::start(s0)];
    for _ in 0..transitions {
        layer = layer
            .iter()
            .flat_map(|h| {
                let s = h.last();
                m.enabled(s)
                    .into_iter()
                    .flat_map(move |a| m.dist(s, a).unwrap().iter().map(move |(t, _)| h.extended(a, *t)))
            })
            .collect();
    }
    layer
}

/// Squared Euclidean distance between two action distributions.
pub fn squared_distance(p: &ActionDist, q: &ActionDist) -> Rational {
    let mut acc: HashMap<usize, Rational> = HashMap::new();
    for (a, x) in p {
        *acc.entry(*a).or_insert_with(Rational::zero) += x;
    }
    for (a, y) in q {
        *acc.entry(*a).or_insert_with(Rational::zero) -= y;
    }
    acc.values().fold(Rational::zero(), |s, d| s + d * d)
}

/// Largest squared distance between the choices of `sigma` and `tau` over
/// all histories with at most `k` states, starting anywhere.
pub fn strategy_premetric(m: &Pomdp, sigma: &FiniteMemoryStrategy, tau: &FiniteMemoryStrategy, k: usize) -> Rational {
    let mut best = Rational::zero();
    let mut layer: HashSet<(usize, usize, usize)> =
        (0..m.num_states()).map(|s| (s, sigma.skeleton.init, tau.skeleton.init)).collect();
    for depth in 1..=k {
        for &(s, qs, qt) in &layer {
            let z = m.obs[s];
            let d = squared_distance(sigma.act(qs, z), tau.act(qt, z));
            if d > best {
                best = d;
            }
        }
        if depth == k {
            break;
        }
        let mut next = HashSet::new();
        for &(s, qs, qt) in &layer {
            let z = m.obs[s];
            for a in m.enabled(s) {
                let (qs2, qt2) = (sigma.skeleton.next(qs, z, a), tau.skeleton.next(qt, z, a));
                for (t, _) in m.dist(s, a).unwrap() {
                    next.insert((*t, qs2, qt2));
                }
            }
        }
        layer = next;
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn coin() -> Pomdp {
        let mut m = Pomdp::new(&["s", "t"], &["a", "b"]);
        m.set_transition("s", "a", &[("s", ratio(1, 2)), ("t", ratio(1, 2))]).unwrap();
        m.set_transition("s", "b", &[("s", int(1))]).unwrap();
        m.set_transition("t", "a", &[("t", int(1))]).unwrap();
        m
    }

    #[test]
    fn always_a_chain() {
        let m = coin();
        let chain = product_chain(&m, &FiniteMemoryStrategy::always(&m, 0), 0).unwrap();
        assert_eq!(chain.len(), 2);
        assert_eq!(chain.row(0), vec![(0, ratio(1, 2)), (1, ratio(1, 2))]);
        assert_eq!(chain.row(1), vec![(1, int(1))]);
    }

    #[test]
    fn cylinder_of_two_coin_flips() {
        let m = coin();
        let sigma = FiniteMemoryStrategy::always(&m, 0);
        let h = History::parse(&m, "s a s a s").unwrap();
        assert_eq!(cylinder_prob(&m, &sigma, 0, &h).unwrap(), ratio(1, 4));
        assert_eq!(cylinder_prob(&m, &sigma, 1, &h).unwrap(), int(0));
        assert_eq!(cylinder_prob(&m, &sigma, 0, &History::start(0)).unwrap(), int(1));
        assert!(History::parse(&m, "s a").is_err());
    }

    #[test]
    fn disjoint_diracs_are_at_squared_distance_two() {
        let m = coin();
        let a = FiniteMemoryStrategy::always(&m, 0);
        let b = FiniteMemoryStrategy::always(&m, 1);
        assert_eq!(strategy_premetric(&m, &a, &a, 5), int(0));
        assert_eq!(strategy_premetric(&m, &a, &b, 1), int(2));
    }

    #[test]
    fn mixture_rejects_bad_weights() {
        let m = coin();
        let s = PureStrategy::always(&m, 0);
        assert!(FiniteMixture::new(vec![s.clone()], vec![ratio(1, 2)]).is_err());
        assert!(matches!(FiniteMixture::new(vec![], vec![]), Err(Error::EmptySupport)));
        let mix = FiniteMixture::new(vec![s.clone(), s], vec![int(0), int(1)]).unwrap();
        assert_eq!(mix.support.len(), 1);
    }
}
