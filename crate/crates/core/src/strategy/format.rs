//! JSON form of skeletons, strategies and mixtures.
//!
//! ```json
//! { "memory": 2, "init": 0,
//!   "update": { "0,home,train": 1 },
//!   "act": { "0,home": "train", "1,home": { "train": "1/2", "bike": "1/2" } } }
//! ```
//!
//! `"skeleton": "memoryless"` or `"counter:H"` may replace `memory`, `init`
//! and `update`. Missing update entries keep the memory unchanged.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::Pomdp;
use crate::rational::{self, Rational};

use super::{ActionDist, FiniteMemoryStrategy, FiniteMixture, MemorySkeleton, PureStrategy};

#[derive(Serialize, Deserialize, Default)]
struct RawStrategy {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    skeleton: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    memory: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    init: Option<usize>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    update: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    act: BTreeMap<String, Value>,
}

#[derive(Serialize, Deserialize)]
struct RawMixture {
    support: Vec<RawStrategy>,
    weights: Vec<String>,
}

/// Parses `memoryless` or `counter:H`.
pub fn named_skeleton(m: &Pomdp, spec: &str) -> Result<MemorySkeleton> {
    match spec.trim() {
        "memoryless" => Ok(MemorySkeleton::memoryless(m)),
        other => {
            let h = other
                .strip_prefix("counter:")
                .and_then(|h| h.parse::<usize>().ok())
                .ok_or_else(|| Error::InvalidArgument(format!("unknown skeleton `{other}`")))?;
            Ok(MemorySkeleton::counter(m, h))
        }
    }
}

fn skeleton_from_raw(m: &Pomdp, raw: &RawStrategy) -> Result<MemorySkeleton> {
    if let Some(spec) = &raw.skeleton {
        return named_skeleton(m, spec);
    }
    let size = raw.memory.unwrap_or(1);
    let init = raw.init.unwrap_or(0);
    if size == 0 || init >= size {
        return Err(Error::Schema(format!("memory {size} with initial state {init}")));
    }
    let mut sk = MemorySkeleton::new(size, init, m.num_observations(), m.num_actions(), "file");
    for (key, &to) in &raw.update {
        let parts: Vec<&str> = key.split(',').map(str::trim).collect();
        let [mem, z, a] = parts[..] else {
            return Err(Error::Schema(format!("update key `{key}` is not `m,z,a`")));
        };
        let mem: usize = mem.parse().map_err(|_| Error::Schema(format!("bad memory in `{key}`")))?;
        if mem >= size || to >= size {
            return Err(Error::Schema(format!("update `{key}` leaves the memory range")));
        }
        sk.set_next(mem, m.observation_index(z)?, m.action_index(a)?, to);
    }
    Ok(sk)
}

fn parse_act(m: &Pomdp, value: &Value) -> Result<ActionDist> {
    match value {
        Value::String(a) => Ok(vec![(m.action_index(a)?, Rational::from_integer(1.into()))]),
        Value::Object(map) => map
            .iter()
            .map(|(a, p)| {
                let p = match p {
                    Value::String(s) => rational::parse(s)?,
                    Value::Number(n) => rational::parse(&n.to_string())?,
                    _ => return Err(Error::Schema(format!("probability of `{a}` is not a rational"))),
                };
                Ok((m.action_index(a)?, p))
            })
            .collect(),
        _ => Err(Error::Schema("act entry must be an action or a distribution".into())),
    }
}

fn strategy_from_raw(m: &Pomdp, raw: &RawStrategy) -> Result<FiniteMemoryStrategy> {
    let sk = Arc::new(skeleton_from_raw(m, raw)?);
    let mut sigma = FiniteMemoryStrategy::new(sk.clone());
    for (key, value) in &raw.act {
        let (mem, z) = key
            .split_once(',')
            .ok_or_else(|| Error::Schema(format!("act key `{key}` is not `m,z`")))?;
        let mem: usize = mem.trim().parse().map_err(|_| Error::Schema(format!("bad memory in `{key}`")))?;
        if mem >= sk.size {
            return Err(Error::Schema(format!("act key `{key}` leaves the memory range")));
        }
        sigma.set_act(mem, m.observation_index(z.trim())?, parse_act(m, value)?);
    }
    for mem in 0..sk.size {
        for z in 0..m.num_observations() {
            if sigma.act(mem, z).is_empty() && !m.enabled_for_obs(z).is_empty() {
                return Err(Error::Schema(format!("no act entry for `{mem},{}`", m.observations[z])));
            }
        }
    }
    sigma.check(m)?;
    Ok(sigma)
}

fn to_pure(sigma: &FiniteMemoryStrategy) -> Result<PureStrategy> {
    let sk = sigma.skeleton.clone();
    let mut choice = vec![0; sk.size * sk.num_obs];
    for mem in 0..sk.size {
        for z in 0..sk.num_obs {
            match sigma.act(mem, z).as_slice() {
                [] => {}
                [(a, _)] => choice[mem * sk.num_obs + z] = *a,
                _ => return Err(Error::Schema("mixture support must be pure".into())),
            }
        }
    }
    Ok(PureStrategy { skeleton: sk, choice })
}

pub fn load_skeleton(m: &Pomdp, text: &str) -> Result<MemorySkeleton> {
    let raw: RawStrategy = serde_json::from_str(text)?;
    skeleton_from_raw(m, &raw)
}

pub fn load_strategy(m: &Pomdp, text: &str) -> Result<FiniteMemoryStrategy> {
    let raw: RawStrategy = serde_json::from_str(text)?;
    strategy_from_raw(m, &raw)
}

pub fn load_mixture(m: &Pomdp, text: &str) -> Result<FiniteMixture> {
    let raw: RawMixture = serde_json::from_str(text)?;
    let support = raw
        .support
        .iter()
        .map(|r| strategy_from_raw(m, r).and_then(|s| to_pure(&s)))
        .collect::<Result<Vec<_>>>()?;
    let weights = raw.weights.iter().map(|w| rational::parse(w)).collect::<Result<Vec<_>>>()?;
    FiniteMixture::new(support, weights)
}

fn skeleton_raw(m: &Pomdp, sk: &MemorySkeleton) -> RawStrategy {
    if *sk == MemorySkeleton::memoryless(m) {
        return RawStrategy { skeleton: Some("memoryless".into()), ..Default::default() };
    }
    if sk.size >= 1 {
        let mut counter = MemorySkeleton::counter(m, sk.size - 1);
        counter.label = sk.label.clone();
        if counter == *sk {
            return RawStrategy { skeleton: Some(format!("counter:{}", sk.size - 1)), ..Default::default() };
        }
    }
    let mut update = BTreeMap::new();
    for mem in 0..sk.size {
        for z in 0..m.num_observations() {
            for a in m.enabled_for_obs(z) {
                let to = sk.next(mem, z, a);
                if to != mem {
                    update.insert(format!("{mem},{},{}", m.observations[z], m.actions[a]), to);
                }
            }
        }
    }
    RawStrategy { memory: Some(sk.size), init: Some(sk.init), update, ..Default::default() }
}

fn strategy_raw(m: &Pomdp, sigma: &FiniteMemoryStrategy) -> RawStrategy {
    let mut raw = skeleton_raw(m, &sigma.skeleton);
    for mem in 0..sigma.skeleton.size {
        for z in 0..m.num_observations() {
            if m.enabled_for_obs(z).is_empty() {
                continue;
            }
            let d = sigma.act(mem, z);
            let value = match d.as_slice() {
                [(a, _)] => Value::String(m.actions[*a].clone()),
                _ => Value::Object(
                    d.iter()
                        .map(|(a, p)| (m.actions[*a].clone(), Value::String(rational::format(p))))
                        .collect(),
                ),
            };
            raw.act.insert(format!("{mem},{}", m.observations[z]), value);
        }
    }
    raw
}

pub fn skeleton_to_json(m: &Pomdp, sk: &MemorySkeleton) -> String {
    serde_json::to_string_pretty(&skeleton_raw(m, sk)).expect("skeleton serializes")
}

pub fn strategy_to_json(m: &Pomdp, sigma: &FiniteMemoryStrategy) -> String {
    serde_json::to_string_pretty(&strategy_raw(m, sigma)).expect("strategy serializes")
}

pub fn mixture_to_json(m: &Pomdp, mu: &FiniteMixture) -> String {
    let raw = RawMixture {
        support: mu.support.iter().map(|s| strategy_raw(m, &s.to_behavioural())).collect(),
        weights: mu.weights.iter().map(rational::format).collect(),
    };
    serde_json::to_string_pretty(&raw).expect("mixture serializes")
}
