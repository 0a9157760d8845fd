use std::collections::{BTreeSet, HashSet, VecDeque};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::Pomdp;

use super::{MemorySkeleton, PureStrategy};

/// `(memory, observation)` pairs with at least two enabled actions.
fn choice_points(m: &Pomdp, sk: &MemorySkeleton, only: Option<&BTreeSet<(usize, usize)>>) -> Vec<((usize, usize), Vec<usize>)> {
    let mut out = Vec::new();
    for mem in 0..sk.size {
        for z in 0..sk.num_obs {
            if only.is_some_and(|set| !set.contains(&(mem, z))) {
                continue;
            }
            let enabled = m.enabled_for_obs(z);
            if enabled.len() >= 2 {
                out.push(((mem, z), enabled));
            }
        }
    }
    out
}

/// `(memory, observation)` pairs met from `(s0, init)` under any actions.
fn reachable_points(m: &Pomdp, sk: &MemorySkeleton, s0: usize) -> BTreeSet<(usize, usize)> {
    let mut seen = HashSet::from([(s0, sk.init)]);
    let mut queue = VecDeque::from([(s0, sk.init)]);
    let mut points = BTreeSet::new();
    while let Some((s, q)) = queue.pop_front() {
        let z = m.obs[s];
        points.insert((q, z));
        for a in m.enabled(s) {
            let q2 = sk.next(q, z, a);
            for (t, _) in m.dist(s, a).unwrap() {
                if seen.insert((*t, q2)) {
                    queue.push_back((*t, q2));
                }
            }
        }
    }
    points
}

fn count(points: &[((usize, usize), Vec<usize>)]) -> u128 {
    points
        .iter()
        .fold(1u128, |acc, (_, opts)| acc.saturating_mul(opts.len() as u128))
}

/// Number of act tables over the skeleton (saturating).
pub fn pool_size(m: &Pomdp, sk: &MemorySkeleton) -> u128 {
    count(&choice_points(m, sk, None))
}

fn tables(m: &Pomdp, sk: MemorySkeleton, points: Vec<((usize, usize), Vec<usize>)>, cap: u128) -> Result<Vec<PureStrategy>> {
    let total = count(&points);
    if total > cap {
        return Err(Error::PoolTooLarge { count: total, cap });
    }
    let sk = Arc::new(sk);
    let base = PureStrategy::uniform_choice(m, sk.clone(), |_, _| usize::MAX);
    let mut out = Vec::with_capacity(total as usize);
    let mut digits = vec![0usize; points.len()];
    loop {
        let mut s = base.clone();
        for (((mem, z), opts), &d) in points.iter().zip(&digits) {
            s.set_action(*mem, *z, opts[d]);
        }
        out.push(s);
        // Odometer: the last choice point turns fastest.
        let mut i = points.len();
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < points[i].1.len() {
                break;
            }
            digits[i] = 0;
        }
    }
}

/// Every deterministic act table over the skeleton, in lexicographic order
/// of the choice points `(memory, observation)`.
pub fn enumerate_pure(m: &Pomdp, sk: &MemorySkeleton, cap: u128) -> Result<Vec<PureStrategy>> {
    tables(m, sk.clone(), choice_points(m, sk, None), cap)
}

/// Like [`enumerate_pure`] but only branches on choice points that can
/// occur from `s0`; the others keep their first enabled action.
pub fn enumerate_pure_from(m: &Pomdp, sk: &MemorySkeleton, s0: usize, cap: u128) -> Result<Vec<PureStrategy>> {
    let reach = reachable_points(m, sk, s0);
    tables(m, sk.clone(), choice_points(m, sk, Some(&reach)), cap)
}
