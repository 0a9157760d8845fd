use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::model::Pomdp;
use crate::rational::{int, Rational};

use super::{FiniteMemoryStrategy, FiniteMixture, MemorySkeleton};

/// Memory of the behavioural form: each support member's memory and whether
/// it is still consistent with the observed actions. Inconsistent members
/// carry memory 0 so equal histories share one key.
type Key = (Vec<usize>, Vec<bool>);

/// An outcome-equivalent behavioural strategy for a finite mixture.
///
/// After a history, the action law is the posterior over the support
/// members that would have produced the same actions. Where no member is
/// consistent the strategy plays uniformly over enabled actions.
pub fn mixed_to_behavioural(m: &Pomdp, mu: &FiniteMixture) -> Result<FiniteMemoryStrategy> {
    if mu.support.is_empty() {
        return Err(Error::EmptySupport);
    }
    let (nz, na) = (m.num_observations(), m.num_actions());
    if mu.support.iter().any(|s| !s.skeleton.fits(m)) {
        return Err(Error::InvalidArgument("support strategy does not fit the model".into()));
    }
    let enabled: Vec<Vec<usize>> = (0..nz).map(|z| m.enabled_for_obs(z)).collect();

    let init: Key = (mu.support.iter().map(|s| s.skeleton.init).collect(), vec![true; mu.support.len()]);
    let mut index: HashMap<Key, usize> = HashMap::from([(init.clone(), 0)]);
    let mut keys = vec![init];
    let mut transitions: Vec<(usize, usize, usize, usize)> = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let (mems, alive) = keys[i].clone();
        for z in 0..nz {
            for &a in &enabled[z] {
                let mut next_mem = vec![0; mems.len()];
                let mut next_alive = vec![false; mems.len()];
                for (k, s) in mu.support.iter().enumerate() {
                    if alive[k] && s.action(mems[k], z) == a {
                        next_alive[k] = true;
                        next_mem[k] = s.skeleton.next(mems[k], z, a);
                    }
                }
                let key = (next_mem, next_alive);
                let j = *index.entry(key.clone()).or_insert_with(|| {
                    keys.push(key);
                    queue.push_back(keys.len() - 1);
                    keys.len() - 1
                });
                transitions.push((i, z, a, j));
            }
        }
    }

    let mut sk = MemorySkeleton::new(keys.len(), 0, nz, na, format!("mixture-posterior:{}", keys.len()));
    for (i, z, a, j) in transitions {
        sk.set_next(i, z, a, j);
    }
    let mut sigma = FiniteMemoryStrategy::new(Arc::new(sk));
    for (i, (mems, alive)) in keys.iter().enumerate() {
        for z in 0..nz {
            if enabled[z].is_empty() {
                continue;
            }
            let mut mass: HashMap<usize, Rational> = HashMap::new();
            let mut total = Rational::zero();
            for (k, s) in mu.support.iter().enumerate() {
                if alive[k] {
                    *mass.entry(s.action(mems[k], z)).or_insert_with(Rational::zero) += &mu.weights[k];
                    total += &mu.weights[k];
                }
            }
            let dist = if total.is_zero() {
                let n = int(enabled[z].len() as i64);
                enabled[z].iter().map(|&a| (a, int(1) / &n)).collect()
            } else {
                mass.into_iter().map(|(a, w)| (a, w / &total)).collect()
            };
            sigma.set_act(i, z, dist);
        }
    }
    Ok(sigma)
}
