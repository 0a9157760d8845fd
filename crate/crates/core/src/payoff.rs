//! Payoff catalog, evaluation on single plays, and continuity checks.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::extreal::{ExtReal, ExtRealVector};
use crate::model::{PayoffDecl, Pomdp, WeightFunction};
use crate::play::{History, LassoPlay};
use crate::rational::{self, Rational};

#[derive(Clone, Debug, PartialEq)]
pub enum PayoffKind {
    ReachIndicator { target: BTreeSet<usize> },
    BuchiIndicator { target: BTreeSet<usize> },
    DiscountedSum { lambda: Rational, weights: WeightFunction },
    ReachGatedDiscountedSum { target: BTreeSet<usize>, lambda: Rational, weights: WeightFunction },
    TotalRewardNonNeg { weights: WeightFunction },
    ShortestPath { target: BTreeSet<usize>, weights: WeightFunction },
}

impl PayoffKind {
    pub fn name(&self) -> &'static str {
        match self {
            PayoffKind::ReachIndicator { .. } => "ReachIndicator",
            PayoffKind::BuchiIndicator { .. } => "BuchiIndicator",
            PayoffKind::DiscountedSum { .. } => "DiscountedSum",
            PayoffKind::ReachGatedDiscountedSum { .. } => "ReachGatedDiscountedSum",
            PayoffKind::TotalRewardNonNeg { .. } => "TotalRewardNonNeg",
            PayoffKind::ShortestPath { .. } => "ShortestPath",
        }
    }

    pub fn weights(&self) -> Option<&WeightFunction> {
        match self {
            PayoffKind::DiscountedSum { weights, .. }
            | PayoffKind::ReachGatedDiscountedSum { weights, .. }
            | PayoffKind::TotalRewardNonNeg { weights }
            | PayoffKind::ShortestPath { weights, .. } => Some(weights),
            _ => None,
        }
    }

    pub fn target(&self) -> Option<&BTreeSet<usize>> {
        match self {
            PayoffKind::ReachIndicator { target }
            | PayoffKind::BuchiIndicator { target }
            | PayoffKind::ReachGatedDiscountedSum { target, .. }
            | PayoffKind::ShortestPath { target, .. } => Some(target),
            _ => None,
        }
    }

    /// Bounded kinds have finite values on every play.
    pub fn is_bounded(&self) -> bool {
        !matches!(self, PayoffKind::TotalRewardNonNeg { .. } | PayoffKind::ShortestPath { .. })
    }
}

/// One payoff dimension. With `negate` the value is multiplied by -1, which
/// turns a cost into something to maximize.
#[derive(Clone, Debug, PartialEq)]
pub struct PayoffSpec {
    pub kind: PayoffKind,
    pub negate: bool,
    pub label: String,
}

impl PayoffSpec {
    pub fn new(kind: PayoffKind) -> Self {
        let label = kind.name().to_string();
        PayoffSpec { kind, negate: false, label }
    }

    pub fn negated(mut self) -> Self {
        self.negate = !self.negate;
        self.label = format!("-{}", self.label);
        self
    }

    pub fn reach(target: BTreeSet<usize>) -> Self {
        Self::new(PayoffKind::ReachIndicator { target })
    }

    pub fn discounted(lambda: Rational, weights: WeightFunction) -> Self {
        Self::new(PayoffKind::DiscountedSum { lambda, weights })
    }

    pub fn shortest_path(target: BTreeSet<usize>, weights: WeightFunction) -> Self {
        Self::new(PayoffKind::ShortestPath { target, weights })
    }

    pub fn total_reward(weights: WeightFunction) -> Self {
        Self::new(PayoffKind::TotalRewardNonNeg { weights })
    }

    /// Applies the sign convention to a raw value.
    pub fn orient(&self, v: ExtReal) -> ExtReal {
        if self.negate {
            v.neg()
        } else {
            v
        }
    }

    pub fn resolve(m: &Pomdp, decl: &PayoffDecl) -> Result<Self> {
        let key: String = decl.kind.to_lowercase().chars().filter(|c| c.is_alphanumeric()).collect();
        let target = || -> Result<BTreeSet<usize>> {
            let names = decl
                .target
                .as_ref()
                .ok_or_else(|| Error::Schema(format!("payoff `{}` needs `target`", decl.kind)))?;
            names
                .iter()
                .map(|n| m.state_index(n).map_err(|_| Error::Schema(format!("target names unknown state `{n}`"))))
                .collect()
        };
        let weights = || -> Result<WeightFunction> {
            let name = decl
                .weights
                .as_ref()
                .ok_or_else(|| Error::Schema(format!("payoff `{}` needs `weights`", decl.kind)))?;
            m.weight_function(name, decl.component.unwrap_or(0))
        };
        let lambda = || -> Result<Rational> {
            let text = decl
                .lambda
                .as_ref()
                .ok_or_else(|| Error::Schema(format!("payoff `{}` needs `lambda`", decl.kind)))?;
            let l = rational::parse(text)?;
            if l.is_negative() || l >= Rational::one() {
                return Err(Error::Schema(format!("discount {text} is outside [0,1)")));
            }
            Ok(l)
        };
        let kind = match key.as_str() {
            "reachindicator" | "reach" => PayoffKind::ReachIndicator { target: target()? },
            "buchiindicator" | "buchi" => PayoffKind::BuchiIndicator { target: target()? },
            "discountedsum" | "discounted" => PayoffKind::DiscountedSum { lambda: lambda()?, weights: weights()? },
            "reachgateddiscountedsum" | "gateddiscounted" => PayoffKind::ReachGatedDiscountedSum {
                target: target()?,
                lambda: lambda()?,
                weights: weights()?,
            },
            "totalrewardnonneg" | "totalreward" => {
                let w = weights()?;
                if !w.is_non_negative() {
                    return Err(Error::Schema("total reward needs non-negative weights".into()));
                }
                PayoffKind::TotalRewardNonNeg { weights: w }
            }
            "shortestpath" | "spath" => PayoffKind::ShortestPath { target: target()?, weights: weights()? },
            _ => return Err(Error::Schema(format!("unknown payoff kind `{}`", decl.kind))),
        };
        let mut spec = PayoffSpec::new(kind);
        if let Some(n) = &decl.name {
            spec.label = n.clone();
        }
        spec.negate = decl.negate;
        Ok(spec)
    }
}

/// An ordered list of payoff dimensions over one model.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiPayoff {
    pub dims: Vec<PayoffSpec>,
}

impl MultiPayoff {
    pub fn new(dims: Vec<PayoffSpec>) -> Self {
        MultiPayoff { dims }
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn resolve(m: &Pomdp, decls: &[PayoffDecl]) -> Result<Self> {
        if decls.is_empty() {
            return Err(Error::Schema("no payoffs declared".into()));
        }
        decls.iter().map(|d| PayoffSpec::resolve(m, d)).collect::<Result<_>>().map(|dims| MultiPayoff { dims })
    }

    /// Keeps the listed dimensions, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        indices
            .iter()
            .map(|&i| {
                self.dims
                    .get(i)
                    .cloned()
                    .ok_or(Error::DimensionMismatch { expected: self.dims.len(), got: i + 1 })
            })
            .collect::<Result<_>>()
            .map(|dims| MultiPayoff { dims })
    }
}

// ---------------------------------------------------------------------------
// Plays

fn discounted_lasso(play: &LassoPlay, lambda: &Rational, w: &WeightFunction) -> Rational {
    let mut factor = Rational::one();
    let mut prefix_sum = Rational::zero();
    for &(s, a) in &play.prefix {
        prefix_sum += &factor * w.get(s, a);
        factor *= lambda;
    }
    let mut cycle_sum = Rational::zero();
    let mut cycle_factor = Rational::one();
    for &(s, a) in &play.cycle {
        cycle_sum += &cycle_factor * w.get(s, a);
        cycle_factor *= lambda;
    }
    prefix_sum + factor * cycle_sum / (Rational::one() - cycle_factor)
}

fn visits(play: &LassoPlay, target: &BTreeSet<usize>) -> bool {
    play.prefix.iter().chain(&play.cycle).any(|(s, _)| target.contains(s))
}

fn indicator(b: bool) -> ExtReal {
    ExtReal::Finite(if b { Rational::one() } else { Rational::zero() })
}

pub fn eval_play(m: &Pomdp, p: &PayoffSpec, play: &LassoPlay) -> Result<ExtReal> {
    play.check(m)?;
    let v = match &p.kind {
        PayoffKind::ReachIndicator { target } => indicator(visits(play, target)),
        PayoffKind::BuchiIndicator { target } => indicator(play.cycle.iter().any(|(s, _)| target.contains(s))),
        PayoffKind::DiscountedSum { lambda, weights } => ExtReal::Finite(discounted_lasso(play, lambda, weights)),
        PayoffKind::ReachGatedDiscountedSum { target, lambda, weights } => {
            if visits(play, target) {
                ExtReal::Finite(discounted_lasso(play, lambda, weights))
            } else {
                ExtReal::zero()
            }
        }
        PayoffKind::TotalRewardNonNeg { weights } => {
            if play.cycle.iter().any(|&(s, a)| weights.get(s, a).is_positive()) {
                ExtReal::PosInf
            } else {
                ExtReal::Finite(play.prefix.iter().fold(Rational::zero(), |acc, &(s, a)| acc + weights.get(s, a)))
            }
        }
        PayoffKind::ShortestPath { target, weights } => {
            let mut cost = Rational::zero();
            let mut reached = None;
            for &(s, a) in play.prefix.iter().chain(&play.cycle) {
                if target.contains(&s) {
                    reached = Some(cost.clone());
                    break;
                }
                cost += weights.get(s, a);
            }
            reached.map_or(ExtReal::PosInf, ExtReal::Finite)
        }
    };
    Ok(p.orient(v))
}

pub fn eval_play_multi(m: &Pomdp, f: &MultiPayoff, play: &LassoPlay) -> Result<ExtRealVector> {
    f.dims.iter().map(|p| eval_play(m, p, play)).collect::<Result<_>>().map(ExtRealVector)
}

// ---------------------------------------------------------------------------
// Generalised discounting

/// Discount factors and weights that may depend on the last `depth` states
/// and the current action. Unlisted keys use the defaults.
#[derive(Clone, Debug)]
pub struct GeneralizedDiscounted {
    pub depth: usize,
    pub lambda: HashMap<(Vec<usize>, usize), Rational>,
    pub weight: HashMap<(Vec<usize>, usize), Rational>,
    pub default_lambda: Rational,
    pub default_weight: Rational,
    /// Upper bound on every discount factor, below 1.
    pub lambda_star: Rational,
    /// Upper bound on every absolute weight.
    pub weight_bound: Rational,
}

impl GeneralizedDiscounted {
    pub fn constant(lambda: Rational, weight: Rational) -> Self {
        GeneralizedDiscounted {
            depth: 1,
            lambda: HashMap::new(),
            weight: HashMap::new(),
            weight_bound: weight.abs(),
            lambda_star: lambda.clone(),
            default_lambda: lambda,
            default_weight: weight,
        }
    }

    fn window(&self, states: &[usize], i: usize) -> Vec<usize> {
        let lo = (i + 1).saturating_sub(self.depth);
        states[lo..=i].to_vec()
    }
}

/// Interval containing the payoff of every continuation of the first `N`
/// steps, where `steps` is `[(state, action); N]`.
pub fn eval_play_truncated(g: &GeneralizedDiscounted, steps: &[(usize, usize)]) -> (Rational, Rational) {
    let states: Vec<usize> = steps.iter().map(|s| s.0).collect();
    let mut factor = Rational::one();
    let mut sum = Rational::zero();
    for (i, &(_, a)) in steps.iter().enumerate() {
        let key = (g.window(&states, i), a);
        let w = g.weight.get(&key).unwrap_or(&g.default_weight);
        let l = g.lambda.get(&key).unwrap_or(&g.default_lambda);
        sum += &factor * w;
        factor *= l;
    }
    let n = steps.len();
    let radius = if g.weight_bound.is_zero() {
        Rational::zero()
    } else {
        Rational::from_integer(2.into()) * &g.weight_bound * rational::pow(&g.lambda_star, n)
            / (Rational::one() - &g.lambda_star)
    };
    (&sum - &radius, sum + radius)
}

// ---------------------------------------------------------------------------
// Cylinders and prefix-independent payoffs

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClopenReport {
    pub clopen: bool,
    /// Membership depends only on this many first transitions.
    pub horizon: usize,
    pub normalized: Vec<History>,
}

/// A finite union of cylinders is clopen; normalization drops every
/// cylinder contained in another one.
pub fn is_clopen_objective(m: &Pomdp, histories: &[History]) -> Result<ClopenReport> {
    for h in histories {
        h.check(m)?;
    }
    let mut sorted: Vec<History> = histories.to_vec();
    sorted.sort_by_key(|h| h.len());
    sorted.dedup();
    let mut kept: Vec<History> = Vec::new();
    for h in sorted {
        if !kept.iter().any(|k| h.extends(k)) {
            kept.push(h);
        }
    }
    kept.sort();
    let horizon = kept.iter().map(History::len).max().unwrap_or(0);
    Ok(ClopenReport { clopen: true, horizon, normalized: kept })
}

/// `f = sum_i coeffs[C_i] * 1[Buchi(C_i)]` is continuous iff coefficients
/// agree along the reachability order of the components.
pub fn check_prefix_independent_continuity(m: &Pomdp, coeffs: &BTreeMap<usize, ExtReal>) -> Result<bool> {
    let dec = crate::model::scc_decompose(m);
    let count = dec.components.len();
    if let Some(&bad) = coeffs.keys().find(|&&k| k >= count) {
        return Err(Error::UnknownScc(bad));
    }
    if let Some(missing) = (0..count).find(|c| !coeffs.contains_key(c)) {
        return Err(Error::UnknownScc(missing));
    }
    Ok((0..count).all(|c| (0..count).all(|d| !dec.reach[c][d] || coeffs[&c] == coeffs[&d])))
}
