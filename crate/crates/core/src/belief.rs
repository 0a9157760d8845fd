//! Belief supports, universal almost-sure reachability and the reach bound.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Pomdp;
use crate::rational::{self, Rational};
use crate::strategy::{product_chain, FiniteMemoryStrategy, MemorySkeleton};

pub type BeliefSupport = BTreeSet<usize>;

fn post(m: &Pomdp, b: &BeliefSupport, a: usize) -> BeliefSupport {
    b.iter()
        .filter_map(|&s| m.dist(s, a))
        .flat_map(|d| d.iter().map(|(t, _)| *t))
        .collect()
}

fn check_enabled(m: &Pomdp, b: &BeliefSupport, a: usize) -> Result<()> {
    let &first = b
        .iter()
        .next()
        .ok_or_else(|| Error::InvalidArgument("empty belief support".into()))?;
    if m.dist(first, a).is_none() {
        return Err(Error::DisabledAction(m.actions[a].clone()));
    }
    Ok(())
}

/// States with observation `z` reachable in one `a`-step from `b`.
pub fn belief_update(m: &Pomdp, b: &BeliefSupport, a: usize, z: usize) -> Result<Option<BeliefSupport>> {
    check_enabled(m, b, a)?;
    let next: BeliefSupport = post(m, b, a).into_iter().filter(|&t| m.obs[t] == z).collect();
    Ok((!next.is_empty()).then_some(next))
}

#[derive(Clone, Debug)]
pub struct BeliefGraph {
    pub nodes: Vec<BeliefSupport>,
    /// `(from, action, observation, to)`.
    pub edges: Vec<(usize, usize, usize, usize)>,
}

/// Breadth-first closure of the belief update from `{s0}`.
pub fn belief_graph(m: &Pomdp, s0: usize) -> BeliefGraph {
    explore(m, s0, &BTreeSet::new())
}

/// Belief graph where every update drops the `removed` states.
fn explore(m: &Pomdp, s0: usize, removed: &BTreeSet<usize>) -> BeliefGraph {
    let start: BeliefSupport = BTreeSet::from([s0]);
    let mut index: HashMap<BeliefSupport, usize> = HashMap::from([(start.clone(), 0)]);
    let mut nodes = vec![start];
    let mut edges = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let b = nodes[i].clone();
        let first = *b.iter().next().unwrap();
        for a in m.enabled(first) {
            let succ = post(m, &b, a);
            let mut by_obs: HashMap<usize, BeliefSupport> = HashMap::new();
            for t in succ.into_iter().filter(|t| !removed.contains(t)) {
                by_obs.entry(m.obs[t]).or_default().insert(t);
            }
            let mut obs: Vec<usize> = by_obs.keys().copied().collect();
            obs.sort_unstable();
            for z in obs {
                let next = by_obs.remove(&z).unwrap();
                let j = *index.entry(next.clone()).or_insert_with(|| {
                    nodes.push(next);
                    queue.push_back(nodes.len() - 1);
                    nodes.len() - 1
                });
                edges.push((i, a, z, j));
            }
        }
    }
    BeliefGraph { nodes, edges }
}

pub fn to_dot(m: &Pomdp, g: &BeliefGraph) -> String {
    let mut out = String::from("digraph beliefs {\n");
    for (i, b) in g.nodes.iter().enumerate() {
        let names: Vec<&str> = b.iter().map(|&s| m.states[s].as_str()).collect();
        let _ = writeln!(out, "  n{i} [label=\"{{{}}}\"];", names.join(","));
    }
    for &(i, a, z, j) in &g.edges {
        let _ = writeln!(out, "  n{i} -> n{j} [label=\"{}/{}\"];", m.actions[a], m.observations[z]);
    }
    out.push_str("}\n");
    out
}

#[derive(Clone, Debug)]
pub struct ReachVerdict {
    /// Every strategy reaches the target almost surely from `s0`.
    pub holds: bool,
    /// When `holds` is false: a pure strategy avoiding the target forever
    /// with positive probability.
    pub avoiding: Option<FiniteMemoryStrategy>,
    /// `2^|S|`, the bound on the number of belief supports.
    pub k: BigUint,
    /// Minimum transition probability of the model.
    pub eta: Rational,
    /// Supports reachable from `{s0}` while avoiding the target.
    pub belief_count: usize,
}

/// Decides whether every strategy reaches `target` almost surely from `s0`.
///
/// Works on supports conditioned on not having visited the target. A
/// support is safe when some action keeps every successor outside the
/// target and every resulting support safe (greatest fixed point). The
/// answer is false iff a safe support is reachable.
pub fn universal_as_reach(m: &Pomdp, s0: usize, target: &BTreeSet<usize>) -> ReachVerdict {
    let k = BigUint::one() << m.num_states();
    let eta = m.min_transition_prob();
    if target.contains(&s0) {
        return ReachVerdict { holds: true, avoiding: None, k, eta, belief_count: 0 };
    }
    let g = explore(m, s0, target);
    let n = g.nodes.len();
    let mut out: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for &(i, a, _, j) in &g.edges {
        out[i].push((a, j));
    }
    let enabled: Vec<Vec<usize>> = g.nodes.iter().map(|b| m.enabled(*b.iter().next().unwrap())).collect();
    let hits_target = |i: usize, a: usize| post(m, &g.nodes[i], a).iter().any(|t| target.contains(t));

    let mut safe = vec![true; n];
    let mut safe_action: Vec<Option<usize>> = vec![None; n];
    loop {
        let mut changed = false;
        for i in 0..n {
            if !safe[i] {
                continue;
            }
            let good = enabled[i]
                .iter()
                .copied()
                .find(|&a| !hits_target(i, a) && out[i].iter().filter(|e| e.0 == a).all(|e| safe[e.1]));
            safe_action[i] = good;
            if good.is_none() {
                safe[i] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    if !safe.iter().any(|&x| x) {
        return ReachVerdict { holds: true, avoiding: None, k, eta, belief_count: n };
    }

    // Distance (in support steps) to a safe support, and the action realizing it.
    let mut dist: Vec<Option<usize>> = safe.iter().map(|&x| x.then_some(0)).collect();
    let mut step: Vec<Option<usize>> = safe_action.clone();
    loop {
        let mut changed = false;
        for i in 0..n {
            if dist[i].is_some() {
                continue;
            }
            let best = out[i]
                .iter()
                .filter_map(|&(a, j)| dist[j].map(|d| (d + 1, a)))
                .min();
            if let Some((d, a)) = best {
                dist[i] = Some(d);
                step[i] = Some(a);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let node_of: HashMap<&BeliefSupport, usize> = g.nodes.iter().enumerate().map(|(i, b)| (b, i)).collect();
    let avoiding = avoiding_strategy(m, s0, target, &node_of, &step);
    ReachVerdict { holds: false, avoiding: Some(avoiding), k, eta, belief_count: n }
}

/// Memory holds the support before the current observation (target states
/// removed); index 0 is a sink for histories the strategy never produces.
fn avoiding_strategy(
    m: &Pomdp,
    s0: usize,
    target: &BTreeSet<usize>,
    node_of: &HashMap<&BeliefSupport, usize>,
    step: &[Option<usize>],
) -> FiniteMemoryStrategy {
    let nz = m.num_observations();
    let first_enabled = |z: usize| m.enabled_for_obs(z).first().copied().unwrap_or(0);
    let mut memories: Vec<BeliefSupport> = vec![BTreeSet::new(), BTreeSet::from([s0])];
    let mut index: HashMap<BeliefSupport, usize> = HashMap::from([(BTreeSet::new(), 0), (BTreeSet::from([s0]), 1)]);
    let mut choice: HashMap<(usize, usize), usize> = HashMap::new();
    let mut updates: Vec<(usize, usize, usize, usize)> = Vec::new();
    let mut queue = VecDeque::from([1usize]);
    while let Some(p) = queue.pop_front() {
        for z in 0..nz {
            let b: BeliefSupport = memories[p].iter().copied().filter(|&s| m.obs[s] == z).collect();
            let Some(&node) = node_of.get(&b) else { continue };
            let a = step[node].unwrap_or_else(|| first_enabled(z));
            choice.insert((p, z), a);
            let next: BeliefSupport = post(m, &b, a).into_iter().filter(|t| !target.contains(t)).collect();
            let j = *index.entry(next.clone()).or_insert_with(|| {
                memories.push(next);
                queue.push_back(memories.len() - 1);
                memories.len() - 1
            });
            updates.push((p, z, a, j));
        }
    }
    let mut sk = MemorySkeleton::new(memories.len(), 1, nz, m.num_actions(), "avoid-support");
    for mem in 0..memories.len() {
        for z in 0..nz {
            for a in 0..m.num_actions() {
                sk.set_next(mem, z, a, 0);
            }
        }
    }
    for (p, z, a, j) in updates {
        sk.set_next(p, z, a, j);
    }
    let mut sigma = FiniteMemoryStrategy::new(Arc::new(sk));
    for mem in 0..memories.len() {
        for z in 0..nz {
            if m.enabled_for_obs(z).is_empty() {
                continue;
            }
            let a = choice.get(&(mem, z)).copied().unwrap_or_else(|| first_enabled(z));
            sigma.set_act(mem, z, vec![(a, Rational::one())]);
        }
    }
    sigma
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ShortestPathClass {
    UniversallySquareIntegrable,
    NotUniversallyIntegrable,
}

/// The verdict holds for shortest-path payoffs to `target` under every
/// weight function.
pub fn classify_shortest_path(m: &Pomdp, s0: usize, target: &BTreeSet<usize>) -> (ShortestPathClass, ReachVerdict) {
    let r = universal_as_reach(m, s0, target);
    let class = if r.holds {
        ShortestPathClass::UniversallySquareIntegrable
    } else {
        ShortestPathClass::NotUniversallyIntegrable
    };
    (class, r)
}

#[derive(Clone, Debug, Serialize)]
pub struct ReachBoundRow {
    pub l: usize,
    pub steps: usize,
    /// `P(Reach within l*k steps)`.
    pub exact: String,
    /// `1 - (1 - eta^k)^l`.
    pub bound: String,
    pub holds: bool,
    #[serde(skip)]
    pub exact_value: Rational,
    #[serde(skip)]
    pub bound_value: Rational,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReachBoundReport {
    pub k: usize,
    pub eta: String,
    pub rows: Vec<ReachBoundRow>,
}

/// Largest number of steps simulated exactly by [`reach_bound_check`].
pub const MAX_BOUND_STEPS: usize = 1 << 16;

/// Probability of having visited the target within `n` steps, for each
/// `n` in `0..=max_steps`.
pub fn reach_within(m: &Pomdp, sigma: &FiniteMemoryStrategy, s0: usize, target: &BTreeSet<usize>, max_steps: usize) -> Result<Vec<Rational>> {
    let chain = product_chain(m, sigma, s0)?;
    let absorbed: Vec<bool> = (0..chain.len()).map(|i| target.contains(&chain.model_state(i))).collect();
    let rows: Vec<Vec<(usize, Rational)>> = (0..chain.len()).map(|i| chain.row(i)).collect();
    let mut mass = vec![Rational::zero(); chain.len()];
    mass[0] = Rational::one();
    let mut out = Vec::with_capacity(max_steps + 1);
    let mut done = Rational::zero();
    for n in 0..=max_steps {
        for i in 0..chain.len() {
            if absorbed[i] && !mass[i].is_zero() {
                done += std::mem::take(&mut mass[i]);
            }
        }
        out.push(done.clone());
        if n == max_steps {
            break;
        }
        let mut next = vec![Rational::zero(); chain.len()];
        for (i, p) in mass.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            for (j, q) in &rows[i] {
                next[*j] += p * q;
            }
        }
        mass = next;
    }
    Ok(out)
}

pub fn reach_bound_check(
    m: &Pomdp,
    sigma: &FiniteMemoryStrategy,
    s0: usize,
    target: &BTreeSet<usize>,
    l_max: usize,
) -> Result<ReachBoundReport> {
    let verdict = universal_as_reach(m, s0, target);
    if !verdict.holds {
        return Err(Error::PreconditionViolated("the target is not reached almost surely under every strategy".into()));
    }
    let k: usize = usize::try_from(&verdict.k)
        .ok()
        .filter(|&k| k.saturating_mul(l_max) <= MAX_BOUND_STEPS)
        .ok_or_else(|| Error::InvalidArgument(format!("k * l = 2^{} * {l_max} steps is too many", m.num_states())))?;
    let within = reach_within(m, sigma, s0, target, k * l_max)?;
    let eta_k = rational::pow(&verdict.eta, k);
    let miss = Rational::one() - eta_k;
    let rows = (0..=l_max)
        .map(|l| {
            let exact = within[l * k].clone();
            let bound = Rational::one() - rational::pow(&miss, l);
            ReachBoundRow {
                l,
                steps: l * k,
                exact: rational::format(&exact),
                bound: rational::format(&bound),
                holds: exact >= bound,
                exact_value: exact,
                bound_value: bound,
            }
        })
        .collect();
    Ok(ReachBoundReport { k, eta: rational::format(&verdict.eta), rows })
}
