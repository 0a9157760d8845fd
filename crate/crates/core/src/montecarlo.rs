//! Seeded sampling of plays, Monte-Carlo estimates of expected payoffs, and
//! convergence tables for strategy families. Floating point is confined to
//! this module.

use num_traits::{One, Signed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::evaluate::expected_payoff;
use crate::exec::Execution;
use crate::extreal::ExtRealVector;
use crate::graph;
use crate::model::Pomdp;
use crate::payoff::{MultiPayoff, PayoffKind, PayoffSpec};
use crate::play::History;
use crate::rational::{self, Rational};
use crate::strategy::{strategy_premetric, FiniteMemoryStrategy, FiniteMixture};

#[derive(Clone, Copy, Debug)]
pub struct SampleConfig {
    pub samples: usize,
    /// Number of transitions per sampled play.
    pub horizon: usize,
    pub seed: u64,
    pub exec: Execution,
}

impl SampleConfig {
    pub fn new(samples: usize, horizon: usize, seed: u64) -> Self {
        SampleConfig { samples, horizon, seed, exec: Execution::default() }
    }
}

#[derive(Clone, Copy, Debug)]
pub enum Sampler<'a> {
    Behavioural(&'a FiniteMemoryStrategy),
    /// One support member is drawn per play, then followed.
    Mixture(&'a FiniteMixture),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n: usize,
    /// Bound on `|E[truncated] - E[payoff]|` where one is known.
    pub bias_bound: Vec<Option<Rational>>,
    /// Fraction of plays whose value is undetermined within the horizon;
    /// `mean` and `stderr` are over the other plays.
    pub censored: Vec<f64>,
    pub seed: u64,
}

impl Estimate {
    /// `3 * stderr + bias`, with unknown bias counted as zero.
    pub fn tolerance(&self, dim: usize) -> f64 {
        3.0 * self.stderr[dim] + self.bias_bound[dim].as_ref().map_or(0.0, rational::to_f64)
    }

    pub fn to_csv(&self, label: &str) -> String {
        let mut out = String::new();
        for j in 0..self.mean.len() {
            let bias = self.bias_bound[j].as_ref().map_or(String::new(), rational::format);
            out.push_str(&format!(
                "{label},{},{},{},{bias},{},{}\n",
                j + 1,
                self.mean[j],
                self.stderr[j],
                self.censored[j],
                self.seed
            ));
        }
        out
    }
}

pub const ESTIMATE_CSV_HEADER: &str = "strategy,dimension,mean,stderr,bias_bound,censored_fraction,seed\n";

/// The generator for play number `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A distribution prepared for sampling: cumulative weights in `f64`.
#[derive(Clone, Debug)]
struct Table {
    cum: Vec<f64>,
    out: Vec<usize>,
}

impl Table {
    fn new(dist: &[(usize, Rational)]) -> Self {
        let mut acc = 0.0;
        let (out, cum) = dist
            .iter()
            .map(|(x, p)| {
                acc += rational::to_f64(p);
                (*x, acc)
            })
            .unzip();
        Table { cum, out }
    }

    /// Single-outcome tables consume no randomness.
    fn draw<R: Rng>(&self, rng: &mut R) -> usize {
        if self.out.len() == 1 {
            return self.out[0];
        }
        let u: f64 = rng.gen();
        let k = self.cum.iter().position(|&c| u < c).unwrap_or(self.out.len() - 1);
        self.out[k]
    }
}

struct CompiledStrategy<'a> {
    sigma: &'a FiniteMemoryStrategy,
    act: Vec<Option<Table>>,
}

impl<'a> CompiledStrategy<'a> {
    fn new(sigma: &'a FiniteMemoryStrategy) -> Self {
        let sk = &sigma.skeleton;
        let act = (0..sk.size * sk.num_obs)
            .map(|i| {
                let d = sigma.act(i / sk.num_obs, i % sk.num_obs);
                (!d.is_empty()).then(|| Table::new(d))
            })
            .collect();
        CompiledStrategy { sigma, act }
    }
}

/// Model and strategy tables shared by every sampled play.
struct Compiled<'a> {
    m: &'a Pomdp,
    trans: Vec<Option<Table>>,
    pick: Option<Table>,
    strategies: Vec<CompiledStrategy<'a>>,
}

impl<'a> Compiled<'a> {
    fn new(m: &'a Pomdp, sampler: Sampler<'a>, owned: &'a [FiniteMemoryStrategy]) -> Self {
        let na = m.num_actions();
        let trans = (0..m.num_states() * na).map(|i| m.dist(i / na, i % na).map(|d| Table::new(d))).collect();
        let (pick, strategies) = match sampler {
            Sampler::Behavioural(s) => (None, vec![CompiledStrategy::new(s)]),
            Sampler::Mixture(mu) => (
                Some(Table::new(&mu.weights.iter().cloned().enumerate().collect::<Vec<_>>())),
                owned.iter().map(CompiledStrategy::new).collect(),
            ),
        };
        Compiled { m, trans, pick, strategies }
    }

    /// Plays up to `horizon` transitions, stopping once `obs` is settled.
    fn play<R: Rng>(&self, s0: usize, horizon: usize, rng: &mut R, obs: &mut impl Observer) -> Result<usize> {
        let cs = match &self.pick {
            Some(t) => &self.strategies[t.draw(rng)],
            None => &self.strategies[0],
        };
        let sk = &cs.sigma.skeleton;
        let na = self.m.num_actions();
        let (mut s, mut mem) = (s0, sk.init);
        for _ in 0..horizon {
            if obs.arrive(s) {
                return Ok(s);
            }
            let z = self.m.obs[s];
            let a = cs.act[mem * sk.num_obs + z]
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument(format!("strategy has no action at `{}`", self.m.states[s])))?
                .draw(rng);
            let t = self.trans[s * na + a]
                .as_ref()
                .ok_or_else(|| Error::DisabledAction(format!("`{}` at `{}`", self.m.actions[a], self.m.states[s])))?
                .draw(rng);
            obs.step(s, a);
            mem = sk.next(mem, z, a);
            s = t;
        }
        obs.arrive(s);
        Ok(s)
    }
}

trait Observer {
    /// Called on entering `s`; true once nothing more needs sampling.
    fn arrive(&mut self, s: usize) -> bool;
    fn step(&mut self, s: usize, a: usize);
}

struct Recorder {
    history: History,
    pending: Option<usize>,
}

impl Observer for Recorder {
    fn arrive(&mut self, s: usize) -> bool {
        if let Some(a) = self.pending.take() {
            self.history.actions.push(a);
            self.history.states.push(s);
        }
        false
    }

    fn step(&mut self, _: usize, a: usize) {
        self.pending = Some(a);
    }
}

struct Tally<'p> {
    plans: &'p [DimPlan],
    accs: Vec<Acc>,
    na: usize,
}

impl Observer for Tally<'_> {
    fn arrive(&mut self, s: usize) -> bool {
        let mut settled = true;
        for (p, acc) in self.plans.iter().zip(&mut self.accs) {
            settled &= p.arrive(acc, s);
        }
        settled
    }

    fn step(&mut self, s: usize, a: usize) {
        for (p, acc) in self.plans.iter().zip(&mut self.accs) {
            p.step(acc, s * self.na + a);
        }
    }
}

fn behavioural_support(sampler: Sampler<'_>) -> Vec<FiniteMemoryStrategy> {
    match sampler {
        Sampler::Mixture(mu) => mu.support.iter().map(|p| p.to_behavioural()).collect(),
        Sampler::Behavioural(_) => Vec::new(),
    }
}

/// A play prefix with `horizon` transitions.
pub fn sample_play<R: Rng>(m: &Pomdp, sampler: Sampler<'_>, s0: usize, horizon: usize, rng: &mut R) -> Result<History> {
    let owned = behavioural_support(sampler);
    let compiled = Compiled::new(m, sampler, &owned);
    let mut rec = Recorder { history: History::start(s0), pending: None };
    compiled.play(s0, horizon, rng, &mut rec)?;
    Ok(rec.history)
}

/// Per-dimension accumulator for one sampled play.
#[derive(Clone)]
enum Acc {
    Reach { hit: bool },
    Discounted { sum: f64, factor: f64 },
    Gated { hit: bool, sum: f64, factor: f64 },
    Path { done: bool, cost: f64 },
}

struct DimPlan {
    target: Vec<bool>,
    /// States from which the target is still reachable.
    live: Vec<bool>,
    lambda: f64,
    weights: Vec<f64>,
    negate: bool,
    init: Acc,
}

fn plan(m: &Pomdp, spec: &PayoffSpec) -> Result<DimPlan> {
    let na = m.num_actions();
    let mask = |t: Option<&std::collections::BTreeSet<usize>>| -> Vec<bool> {
        (0..m.num_states()).map(|s| t.is_some_and(|t| t.contains(&s))).collect()
    };
    let weights = spec.kind.weights().map_or_else(Vec::new, |w| {
        (0..m.num_states() * na).map(|i| rational::to_f64(w.get(i / na, i % na))).collect()
    });
    let (lambda, init) = match &spec.kind {
        PayoffKind::ReachIndicator { .. } => (0.0, Acc::Reach { hit: false }),
        PayoffKind::DiscountedSum { lambda, .. } => (rational::to_f64(lambda), Acc::Discounted { sum: 0.0, factor: 1.0 }),
        PayoffKind::ReachGatedDiscountedSum { lambda, .. } => {
            (rational::to_f64(lambda), Acc::Gated { hit: false, sum: 0.0, factor: 1.0 })
        }
        PayoffKind::ShortestPath { .. } => (0.0, Acc::Path { done: false, cost: 0.0 }),
        PayoffKind::BuchiIndicator { .. } | PayoffKind::TotalRewardNonNeg { .. } => {
            return Err(Error::UnsupportedKind(format!("{} has no finite-horizon estimator", spec.kind.name())))
        }
    };
    let target = mask(spec.kind.target());
    let live = graph::backward_reachable(&m.adjacency(), &target);
    Ok(DimPlan { target, live, lambda, weights, negate: spec.negate, init })
}

impl DimPlan {
    /// Records arrival in `s`; true once the value is settled.
    fn arrive(&self, acc: &mut Acc, s: usize) -> bool {
        match acc {
            Acc::Reach { hit } => {
                *hit |= self.target[s];
                *hit || !self.live[s]
            }
            Acc::Gated { hit, .. } => {
                *hit |= self.target[s];
                false
            }
            Acc::Path { done, .. } => {
                *done |= self.target[s];
                *done || !self.live[s]
            }
            Acc::Discounted { .. } => false,
        }
    }

    fn step(&self, acc: &mut Acc, i: usize) {
        match acc {
            Acc::Discounted { sum, factor } | Acc::Gated { sum, factor, .. } => {
                *sum += *factor * self.weights[i];
                *factor *= self.lambda;
            }
            Acc::Path { done: false, cost } => *cost += self.weights[i],
            _ => {}
        }
    }

    fn value(&self, acc: &Acc) -> Option<f64> {
        let v = match acc {
            Acc::Reach { hit } => f64::from(u8::from(*hit)),
            Acc::Discounted { sum, .. } => *sum,
            Acc::Gated { hit, sum, .. } => {
                if *hit {
                    *sum
                } else {
                    0.0
                }
            }
            Acc::Path { done: true, cost } => *cost,
            Acc::Path { done: false, .. } => return None,
        };
        Some(if self.negate { -v } else { v })
    }
}

fn bias_bound(spec: &PayoffSpec, horizon: usize) -> Option<Rational> {
    match &spec.kind {
        PayoffKind::DiscountedSum { lambda, weights } => {
            Some(weights.max_abs() * rational::pow(lambda, horizon) / (Rational::one() - lambda))
        }
        _ => None,
    }
}

/// Pairwise sum in index order, so the result does not depend on threads.
fn tree_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => tree_sum(&xs[..n / 2]) + tree_sum(&xs[n / 2..]),
    }
}

pub fn estimate_expectation(
    m: &Pomdp,
    sampler: Sampler<'_>,
    s0: usize,
    f: &MultiPayoff,
    cfg: &SampleConfig,
) -> Result<Estimate> {
    if cfg.samples == 0 || cfg.horizon == 0 {
        return Err(Error::InvalidArgument("samples and horizon must be positive".into()));
    }
    let plans = f.dims.iter().map(|p| plan(m, p)).collect::<Result<Vec<_>>>()?;
    let owned = behavioural_support(sampler);
    let compiled = Compiled::new(m, sampler, &owned);
    let base = ChaCha8Rng::seed_from_u64(cfg.seed);

    let per_sample: Vec<Result<Vec<Option<f64>>>> = cfg.exec.map_range(cfg.samples, |i| {
        let mut rng = base.clone();
        rng.set_stream(i as u64);
        let mut tally = Tally { plans: &plans, accs: plans.iter().map(|p| p.init.clone()).collect(), na: m.num_actions() };
        compiled.play(s0, cfg.horizon, &mut rng, &mut tally)?;
        Ok(plans.iter().zip(&tally.accs).map(|(p, acc)| p.value(acc)).collect())
    });
    let per_sample: Vec<Vec<Option<f64>>> = per_sample.into_iter().collect::<Result<_>>()?;

    let d = f.dim();
    let mut est = Estimate {
        mean: vec![0.0; d],
        stderr: vec![0.0; d],
        n: cfg.samples,
        bias_bound: f.dims.iter().map(|p| bias_bound(p, cfg.horizon)).collect(),
        censored: vec![0.0; d],
        seed: cfg.seed,
    };
    for j in 0..d {
        let values: Vec<f64> = per_sample.iter().filter_map(|v| v[j]).collect();
        let k = values.len();
        est.censored[j] = (cfg.samples - k) as f64 / cfg.samples as f64;
        if k == 0 {
            est.mean[j] = f64::NAN;
            est.stderr[j] = f64::NAN;
            continue;
        }
        let mean = tree_sum(&values) / k as f64;
        let sq: Vec<f64> = values.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = if k > 1 { tree_sum(&sq) / (k - 1) as f64 } else { 0.0 };
        est.mean[j] = mean;
        est.stderr[j] = (var / k as f64).sqrt();
    }
    Ok(est)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeRow {
    pub index: usize,
    pub vector: ExtRealVector,
    /// Premetric distance to the limit strategy.
    pub distance: Rational,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeTable {
    pub limit: ExtRealVector,
    pub rows: Vec<ProbeRow>,
}

impl ProbeTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,vector,distance\n");
        for r in &self.rows {
            out.push_str(&format!("{},\"{}\",{}\n", r.index, r.vector, rational::format(&r.distance)));
        }
        out.push_str(&format!("limit,\"{}\",0\n", self.limit));
        out
    }
}

/// Exact payoffs of `family(n)` for each index, with the premetric
/// distance (histories of at most `depth` states) to `limit`.
pub fn convergence_probe(
    m: &Pomdp,
    family: impl Fn(usize) -> Result<FiniteMemoryStrategy> + Sync,
    limit: &FiniteMemoryStrategy,
    s0: usize,
    f: &MultiPayoff,
    indices: &[usize],
    depth: usize,
) -> Result<ProbeTable> {
    let rows = indices
        .iter()
        .map(|&n| {
            let sigma = family(n)?;
            Ok(ProbeRow {
                index: n,
                vector: expected_payoff(m, &sigma, s0, f)?,
                distance: strategy_premetric(m, &sigma, limit, depth),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProbeTable { limit: expected_payoff(m, limit, s0, f)?, rows })
}

/// Whether successive finite differences to the limit shrink by at least
/// `ratio` in every finite dimension.
pub fn differences_shrink(table: &ProbeTable, ratio: &Rational) -> bool {
    let gaps: Vec<Vec<Option<Rational>>> = table
        .rows
        .iter()
        .map(|r| {
            r.vector
                .0
                .iter()
                .zip(&table.limit.0)
                .map(|(x, l)| match (x.finite(), l.finite()) {
                    (Some(x), Some(l)) => Some((x - l).abs()),
                    _ => None,
                })
                .collect()
        })
        .collect();
    gaps.windows(2).all(|w| {
        w[0].iter().zip(&w[1]).all(|(a, b)| match (a, b) {
            (Some(a), Some(b)) => *b <= a * ratio || (!a.is_positive() && !b.is_positive()),
            _ => false,
        })
    })
}
