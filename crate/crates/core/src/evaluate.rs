//! Exact expected payoffs on product chains and integrability verdicts.

use std::collections::{BTreeSet, HashMap};

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::belief;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::extreal::{convex_combination, ExtReal, ExtRealVector};
use crate::graph;
use crate::linalg::{self, Matrix};
use crate::model::{Pomdp, WeightFunction};
use crate::payoff::{MultiPayoff, PayoffKind, PayoffSpec};
use crate::rational::Rational;
use crate::strategy::{
    enumerate_pure_from, product_chain, FiniteMemoryStrategy, FiniteMixture, MarkovChain, MemorySkeleton, PureStrategy,
};

/// Default cap on the number of act tables enumerated for a pool.
pub const DEFAULT_POOL_CAP: u128 = 1 << 16;

fn target_mask(chain: &MarkovChain, target: &BTreeSet<usize>) -> Vec<bool> {
    (0..chain.len()).map(|i| target.contains(&chain.model_state(i))).collect()
}

/// Expected one-step weight in each chain state.
fn step_rewards(chain: &MarkovChain, w: &WeightFunction) -> Vec<Rational> {
    chain
        .moves
        .iter()
        .enumerate()
        .map(|(i, mvs)| {
            let s = chain.model_state(i);
            mvs.iter().fold(Rational::zero(), |acc, mv| acc + &mv.prob * w.get(s, mv.action))
        })
        .collect()
}

/// Solves `x_i = rhs_i + factor * sum_{j in vars} P_ij x_j` for `i in vars`.
fn solve_on(chain: &MarkovChain, vars: &[usize], rhs: &[Rational], factor: &Rational) -> Result<HashMap<usize, Rational>> {
    let pos: HashMap<usize, usize> = vars.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let n = vars.len();
    let mut a: Matrix = linalg::identity(n);
    for (k, &i) in vars.iter().enumerate() {
        for (j, p) in chain.row(i) {
            if let Some(&l) = pos.get(&j) {
                a[k][l] -= factor * p;
            }
        }
    }
    let x = linalg::solve(a, rhs.to_vec())?;
    Ok(vars.iter().copied().zip(x).collect())
}

/// Probability of eventually visiting a masked chain state, per chain state.
pub fn reach_probabilities(chain: &MarkovChain, target: &[bool]) -> Result<Vec<Rational>> {
    let can = graph::backward_reachable(&chain.adjacency(), target);
    let vars: Vec<usize> = (0..chain.len()).filter(|&i| can[i] && !target[i]).collect();
    let rhs: Vec<Rational> = vars
        .iter()
        .map(|&i| {
            chain
                .row(i)
                .into_iter()
                .filter(|(j, _)| target[*j])
                .fold(Rational::zero(), |acc, (_, p)| acc + p)
        })
        .collect();
    let sol = solve_on(chain, &vars, &rhs, &Rational::one())?;
    Ok((0..chain.len())
        .map(|i| {
            if target[i] {
                Rational::one()
            } else {
                sol.get(&i).cloned().unwrap_or_else(Rational::zero)
            }
        })
        .collect())
}

fn discounted_values(chain: &MarkovChain, lambda: &Rational, w: &WeightFunction) -> Result<Vec<Rational>> {
    let r = step_rewards(chain, w);
    let vars: Vec<usize> = (0..chain.len()).collect();
    let sol = solve_on(chain, &vars, &r, lambda)?;
    Ok(vars.iter().map(|i| sol[i].clone()).collect())
}

fn bottom_components(chain: &MarkovChain) -> Vec<Vec<usize>> {
    graph::bottom_sccs(&chain.adjacency())
}

/// Raw value of one payoff dimension from the chain's initial state.
pub fn evaluate_chain(chain: &MarkovChain, kind: &PayoffKind) -> Result<ExtReal> {
    let v = match kind {
        PayoffKind::ReachIndicator { target } => {
            ExtReal::Finite(reach_probabilities(chain, &target_mask(chain, target))?[0].clone())
        }
        PayoffKind::BuchiIndicator { target } => {
            let mut good = vec![false; chain.len()];
            for comp in bottom_components(chain) {
                if comp.iter().any(|&i| target.contains(&chain.model_state(i))) {
                    comp.iter().for_each(|&i| good[i] = true);
                }
            }
            ExtReal::Finite(reach_probabilities(chain, &good)?[0].clone())
        }
        PayoffKind::DiscountedSum { lambda, weights } => {
            ExtReal::Finite(discounted_values(chain, lambda, weights)?[0].clone())
        }
        PayoffKind::ReachGatedDiscountedSum { target, lambda, weights } => {
            let mask = target_mask(chain, target);
            let total = discounted_values(chain, lambda, weights)?[0].clone();
            if mask[0] {
                ExtReal::Finite(total)
            } else {
                let reach = reach_probabilities(chain, &mask)?;
                let never: Vec<Rational> = reach.iter().map(|p| Rational::one() - p).collect();
                let vars: Vec<usize> = (0..chain.len()).filter(|&i| !mask[i]).collect();
                let rhs: Vec<Rational> = vars
                    .iter()
                    .map(|&i| {
                        let s = chain.model_state(i);
                        chain.moves[i].iter().fold(Rational::zero(), |acc, mv| {
                            let survive = mv
                                .successors
                                .iter()
                                .filter(|(j, _)| !mask[*j])
                                .fold(Rational::zero(), |a, (j, p)| a + p * &never[*j]);
                            acc + &mv.prob * weights.get(s, mv.action) * survive
                        })
                    })
                    .collect();
                let y = solve_on(chain, &vars, &rhs, lambda)?;
                ExtReal::Finite(total - &y[&0])
            }
        }
        PayoffKind::TotalRewardNonNeg { weights } => {
            let r = step_rewards(chain, weights);
            let bottoms = bottom_components(chain);
            if bottoms.iter().flatten().any(|&i| r[i].is_positive()) {
                ExtReal::PosInf
            } else {
                let recurrent: BTreeSet<usize> = bottoms.into_iter().flatten().collect();
                let vars: Vec<usize> = (0..chain.len()).filter(|i| !recurrent.contains(i)).collect();
                let rhs: Vec<Rational> = vars.iter().map(|&i| r[i].clone()).collect();
                let sol = solve_on(chain, &vars, &rhs, &Rational::one())?;
                ExtReal::Finite(sol.get(&0).cloned().unwrap_or_else(Rational::zero))
            }
        }
        PayoffKind::ShortestPath { target, weights } => {
            let mask = target_mask(chain, target);
            if mask[0] {
                ExtReal::zero()
            } else if !reach_probabilities(chain, &mask)?[0].is_one() {
                ExtReal::PosInf
            } else {
                // States met before the first target visit.
                let avoid_adj: Vec<Vec<usize>> = chain
                    .adjacency()
                    .into_iter()
                    .enumerate()
                    .map(|(i, succ)| if mask[i] { Vec::new() } else { succ })
                    .collect();
                let seen = graph::forward_reachable(&avoid_adj, &[0]);
                let vars: Vec<usize> = (0..chain.len()).filter(|&i| seen[i] && !mask[i]).collect();
                let r = step_rewards(chain, weights);
                let rhs: Vec<Rational> = vars.iter().map(|&i| r[i].clone()).collect();
                let sol = solve_on(chain, &vars, &rhs, &Rational::one())?;
                ExtReal::Finite(sol[&0].clone())
            }
        }
    };
    Ok(v)
}

pub fn evaluate_spec(chain: &MarkovChain, p: &PayoffSpec) -> Result<ExtReal> {
    evaluate_chain(chain, &p.kind).map(|v| p.orient(v))
}

pub fn expected_payoff(m: &Pomdp, sigma: &FiniteMemoryStrategy, s0: usize, f: &MultiPayoff) -> Result<ExtRealVector> {
    let chain = product_chain(m, sigma, s0)?;
    f.dims
        .iter()
        .map(|p| evaluate_spec(&chain, p))
        .collect::<Result<_>>()
        .map(ExtRealVector)
}

pub fn pure_expected_payoff(m: &Pomdp, sigma: &PureStrategy, s0: usize, f: &MultiPayoff) -> Result<ExtRealVector> {
    expected_payoff(m, &sigma.to_behavioural(), s0, f)
}

/// Expected payoffs of every pure strategy over the skeleton, in
/// enumeration order; duplicates are kept.
pub fn pure_payoff_set(
    m: &Pomdp,
    s0: usize,
    f: &MultiPayoff,
    skeleton: &MemorySkeleton,
    cap: u128,
    exec: Execution,
) -> Result<Vec<(PureStrategy, ExtRealVector)>> {
    let pool = enumerate_pure_from(m, skeleton, s0, cap)?;
    evaluate_pool(m, s0, f, pool, exec)
}

pub fn evaluate_pool(
    m: &Pomdp,
    s0: usize,
    f: &MultiPayoff,
    pool: Vec<PureStrategy>,
    exec: Execution,
) -> Result<Vec<(PureStrategy, ExtRealVector)>> {
    let values = exec.map(&pool, |s| pure_expected_payoff(m, s, s0, f));
    pool.into_iter().zip(values).map(|(s, v)| v.map(|v| (s, v))).collect()
}

/// `sum_i mu_i * E[sigma_i]` with `0 * inf = 0`.
pub fn mixed_expected_payoff(m: &Pomdp, mu: &FiniteMixture, s0: usize, f: &MultiPayoff) -> Result<ExtRealVector> {
    let vectors = mu
        .support
        .iter()
        .map(|s| pure_expected_payoff(m, s, s0, f))
        .collect::<Result<Vec<_>>>()?;
    convex_combination(&mu.weights, &vectors.iter().collect::<Vec<_>>())
}

// ---------------------------------------------------------------------------
// Integrability

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum IntegrabilityVerdict {
    UniversallyIntegrable,
    UniversallyUnambiguouslyIntegrableOnly,
    NotUnambiguous,
    Unknown,
}

#[derive(Clone, Debug)]
pub enum Witness {
    None,
    /// A strategy under which the expectation is infinite.
    Strategy(FiniteMemoryStrategy),
    /// States of an end component carrying a positive weight.
    EndComponent(Vec<usize>),
    Note(String),
}

#[derive(Clone, Debug)]
pub struct DimensionVerdict {
    pub label: String,
    pub verdict: IntegrabilityVerdict,
    pub witness: Witness,
}

/// States of an end component with its `(state, action)` pairs.
pub type EndComponent = (Vec<usize>, Vec<(usize, usize)>);

/// Maximal end components among `allowed` states: state sets with an
/// action set closed under transitions and strongly connected.
pub fn maximal_end_components(m: &Pomdp, allowed: &[bool]) -> Vec<EndComponent> {
    let n = m.num_states();
    let mut acts: Vec<Vec<usize>> = (0..n)
        .map(|s| if allowed[s] { m.enabled(s) } else { Vec::new() })
        .collect();
    loop {
        let adj: Vec<Vec<usize>> = (0..n)
            .map(|s| {
                let mut v: Vec<usize> = acts[s]
                    .iter()
                    .flat_map(|&a| m.dist(s, a).unwrap().iter().map(|(t, _)| *t))
                    .collect();
                v.sort_unstable();
                v.dedup();
                v
            })
            .collect();
        let comps = graph::scc(&adj);
        let mut comp_of = vec![usize::MAX; n];
        for (c, members) in comps.iter().enumerate() {
            for &s in members {
                comp_of[s] = c;
            }
        }
        let alive: Vec<bool> = acts.iter().map(|a| !a.is_empty()).collect();
        let mut changed = false;
        for s in 0..n {
            let before = acts[s].len();
            acts[s].retain(|&a| m.dist(s, a).unwrap().iter().all(|(t, _)| comp_of[*t] == comp_of[s] && alive[*t]));
            changed |= acts[s].len() != before;
        }
        if !changed {
            return comps
                .into_iter()
                .filter(|c| c.iter().all(|&s| !acts[s].is_empty()))
                .map(|c| {
                    let pairs = c.iter().flat_map(|&s| acts[s].iter().map(move |&a| (s, a))).collect();
                    (c, pairs)
                })
                .collect();
        }
    }
}

fn classify_total_reward(m: &Pomdp, w: &WeightFunction, s0: usize) -> (IntegrabilityVerdict, Witness) {
    let reach = graph::forward_reachable(&m.adjacency(), &[s0]);
    let positive = maximal_end_components(m, &reach)
        .into_iter()
        .find(|(_, pairs)| pairs.iter().any(|&(s, a)| w.get(s, a).is_positive()));
    match positive {
        None => (IntegrabilityVerdict::UniversallyIntegrable, Witness::None),
        Some((states, _)) if m.is_mdp() => {
            (IntegrabilityVerdict::UniversallyUnambiguouslyIntegrableOnly, Witness::EndComponent(states))
        }
        Some((states, _)) => (
            IntegrabilityVerdict::Unknown,
            Witness::Note(format!(
                "end component {:?} carries positive weight; whether an observation-based strategy can stay in it is not decided",
                states.iter().map(|&s| m.states[s].as_str()).collect::<Vec<_>>()
            )),
        ),
    }
}

pub fn classify_integrability(m: &Pomdp, f: &MultiPayoff, s0: usize) -> Result<Vec<DimensionVerdict>> {
    if s0 >= m.num_states() {
        return Err(Error::UnknownState(format!("#{s0}")));
    }
    Ok(f.dims
        .iter()
        .map(|p| {
            let (verdict, witness) = match &p.kind {
                PayoffKind::ReachIndicator { .. }
                | PayoffKind::BuchiIndicator { .. }
                | PayoffKind::DiscountedSum { .. }
                | PayoffKind::ReachGatedDiscountedSum { .. } => (IntegrabilityVerdict::UniversallyIntegrable, Witness::None),
                PayoffKind::ShortestPath { target, .. } => {
                    let r = belief::universal_as_reach(m, s0, target);
                    match r.avoiding {
                        None => (IntegrabilityVerdict::UniversallyIntegrable, Witness::None),
                        Some(sigma) => (IntegrabilityVerdict::UniversallyUnambiguouslyIntegrableOnly, Witness::Strategy(sigma)),
                    }
                }
                PayoffKind::TotalRewardNonNeg { weights } => classify_total_reward(m, weights, s0),
            };
            DimensionVerdict { label: p.label.clone(), verdict, witness }
        })
        .collect())
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
    fn coin_shortest_path_is_two() {
        let m = coin();
        let f = MultiPayoff::new(vec![PayoffSpec::shortest_path(
            BTreeSet::from([1]),
            WeightFunction::constant(&m, int(1)),
        )]);
        let v = expected_payoff(&m, &FiniteMemoryStrategy::always(&m, 0), 0, &f).unwrap();
        assert_eq!(v.0[0], ExtReal::Finite(int(2)));
        let v = expected_payoff(&m, &FiniteMemoryStrategy::always(&m, 1), 0, &f).unwrap();
        assert_eq!(v.0[0], ExtReal::PosInf);
    }

    #[test]
    fn end_components_of_coin() {
        let m = coin();
        let mecs = maximal_end_components(&m, &[true, true]);
        let mut states: Vec<Vec<usize>> = mecs.into_iter().map(|c| c.0).collect();
        states.sort();
        assert_eq!(states, vec![vec![0], vec![1]]);
    }
}
