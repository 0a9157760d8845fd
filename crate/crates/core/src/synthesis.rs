//! Finite-support mixtures realizing, dominating or approximating targets,
//! lexicographic optimization and support reduction over pure pools.

use std::cmp::Ordering;

use num_traits::{One, Signed, Zero};
use serde_json::json;

use crate::error::{Error, Result};
use crate::evaluate::{mixed_expected_payoff, pure_payoff_set};
use crate::exec::Execution;
use crate::extreal::{convex_combination, ExtReal, ExtRealVector};
use crate::geometry::{self, Decomposition, Point};
use crate::lp::{LinearProgram, Relation};
use crate::model::Pomdp;
use crate::payoff::MultiPayoff;
use crate::rational::{self, Rational};
use crate::strategy::{mixture_to_json, FiniteMixture, MemorySkeleton, PureStrategy};

/// Pure strategies standing in for "all strategies", with their payoffs.
#[derive(Clone, Debug)]
pub struct Pool {
    /// Skeleton label, e.g. `counter:4`.
    pub label: String,
    pub cap: u128,
    pub members: Vec<(PureStrategy, ExtRealVector)>,
}

impl Pool {
    pub fn enumerate(
        m: &Pomdp,
        s0: usize,
        f: &MultiPayoff,
        skeleton: &MemorySkeleton,
        cap: u128,
        exec: Execution,
    ) -> Result<Self> {
        let members = pure_payoff_set(m, s0, f, skeleton, cap, exec)?;
        Ok(Pool { label: skeleton.label.clone(), cap, members })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn vectors(&self) -> Vec<ExtRealVector> {
        self.members.iter().map(|(_, v)| v.clone()).collect()
    }

    /// Indices of members whose payoff is finite in every dimension.
    fn finite(&self) -> (Vec<usize>, Vec<Point>) {
        self.members
            .iter()
            .enumerate()
            .filter_map(|(i, (_, v))| v.to_rationals().map(|p| (i, p)))
            .unzip()
    }

    fn describe(&self) -> serde_json::Value {
        json!({ "skeleton": self.label, "cap": self.cap.to_string(), "size": self.members.len() })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Equals,
    Dominates,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CertRelation {
    Equals,
    Dominates,
    Approximates { eps: Rational, big_m: Rational },
}

#[derive(Clone, Debug)]
pub struct MixtureCertificate {
    pub mixture: FiniteMixture,
    /// Pool index of each support member.
    pub members: Vec<usize>,
    pub target: ExtRealVector,
    pub realized: ExtRealVector,
    pub relation: CertRelation,
    pub pool_label: String,
    pub pool_cap: u128,
    pub pool_size: usize,
}

impl MixtureCertificate {
    pub fn support(&self) -> usize {
        self.mixture.support.len()
    }

    /// Whether `realized` stands in the recorded relation to `target`.
    pub fn holds(&self) -> bool {
        relation_holds(&self.relation, &self.target, &self.realized)
    }

    pub fn to_json(&self, m: &Pomdp) -> serde_json::Value {
        let mixture: serde_json::Value =
            serde_json::from_str(&mixture_to_json(m, &self.mixture)).expect("mixture json is valid");
        let relation = match &self.relation {
            CertRelation::Equals => json!({ "kind": "equals" }),
            CertRelation::Dominates => json!({ "kind": "dominates" }),
            CertRelation::Approximates { eps, big_m } => {
                json!({ "kind": "approximates", "eps": rational::format(eps), "bigM": rational::format(big_m) })
            }
        };
        json!({
            "mixture": mixture,
            "members": self.members,
            "target": self.target,
            "realized": self.realized,
            "relation": relation,
            "holds": self.holds(),
            "pool": { "skeleton": self.pool_label, "cap": self.pool_cap.to_string(), "size": self.pool_size },
        })
    }
}

fn relation_holds(rel: &CertRelation, target: &ExtRealVector, realized: &ExtRealVector) -> bool {
    match rel {
        CertRelation::Equals => realized == target,
        CertRelation::Dominates => realized.dominates(target),
        CertRelation::Approximates { eps, big_m } => {
            target.dim() == realized.dim()
                && target.0.iter().zip(&realized.0).all(|(t, r)| match (t, r) {
                    (ExtReal::PosInf, r) => *r >= ExtReal::Finite(big_m.clone()),
                    (ExtReal::NegInf, r) => *r <= ExtReal::Finite(-big_m.clone()),
                    (ExtReal::Finite(t), ExtReal::Finite(r)) => (r - t).abs() <= *eps,
                    _ => false,
                })
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn certify(
    m: &Pomdp,
    s0: usize,
    f: &MultiPayoff,
    pool: &Pool,
    members: Vec<usize>,
    weights: Vec<Rational>,
    target: &ExtRealVector,
    relation: CertRelation,
) -> Result<MixtureCertificate> {
    let (members, weights): (Vec<usize>, Vec<Rational>) =
        members.into_iter().zip(weights).filter(|(_, w)| w.is_positive()).unzip();
    let support = members.iter().map(|&i| pool.members[i].0.clone()).collect();
    let mixture = FiniteMixture::new(support, weights)?;
    let realized = mixed_expected_payoff(m, &mixture, s0, f)?;
    let cert = MixtureCertificate {
        mixture,
        members,
        target: target.clone(),
        realized,
        relation,
        pool_label: pool.label.clone(),
        pool_cap: pool.cap,
        pool_size: pool.len(),
    };
    if !cert.holds() {
        return Err(Error::PreconditionViolated("pool payoffs disagree with re-evaluation".into()));
    }
    Ok(cert)
}

fn from_decomposition(dec: &Decomposition, finite_idx: &[usize]) -> (Vec<usize>, Vec<Rational>) {
    (dec.indices.iter().map(|&i| finite_idx[i]).collect(), dec.coefficients.clone())
}

/// A mixture of at most `d + 1` pool members matching `target` exactly, or
/// of at most `d` members dominating it.
pub fn achieve(
    m: &Pomdp,
    s0: usize,
    f: &MultiPayoff,
    target: &ExtRealVector,
    pool: &Pool,
    mode: Mode,
) -> Result<MixtureCertificate> {
    let q = target
        .to_rationals()
        .ok_or_else(|| Error::InvalidArgument("achieve needs a finite target; use approximate".into()))?;
    if q.len() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: q.len() });
    }
    let (idx, points) = pool.finite();
    let dec = match mode {
        Mode::Equals => geometry::caratheodory(&q, &points),
        Mode::Dominates => geometry::dominating_face_decomposition(&q, &points, true),
    }
    .map_err(|_| Error::NotAchievable)?;
    let (members, weights) = from_decomposition(&dec, &idx);
    let relation = match mode {
        Mode::Equals => CertRelation::Equals,
        Mode::Dominates => CertRelation::Dominates,
    };
    certify(m, s0, f, pool, members, weights, target, relation)
}

/// Weights over `points` meeting, per dimension, `None` (free),
/// `Some((lo, hi))` bounds (either side optional).
fn bounded_weights(points: &[Point], bounds: &[(Option<Rational>, Option<Rational>)]) -> Option<Vec<Rational>> {
    let n = points.len();
    if n == 0 {
        return None;
    }
    let mut lp = LinearProgram::new(n);
    lp.constrain(vec![Rational::one(); n], Relation::Eq, Rational::one());
    for (j, (lo, hi)) in bounds.iter().enumerate() {
        let row: Vec<Rational> = points.iter().map(|p| p[j].clone()).collect();
        match (lo, hi) {
            (Some(lo), Some(hi)) if lo == hi => {
                lp.constrain(row, Relation::Eq, lo.clone());
            }
            _ => {
                if let Some(lo) = lo {
                    lp.constrain(row.clone(), Relation::Ge, lo.clone());
                }
                if let Some(hi) = hi {
                    lp.constrain(row, Relation::Le, hi.clone());
                }
            }
        }
    }
    lp.solve().solution().map(<[Rational]>::to_vec)
}

/// Reduces an LP solution to at most `d + 1` points with the same
/// recombination.
fn sparsify(points: &[Point], alpha: &[Rational]) -> Decomposition {
    let x = Decomposition { indices: (0..points.len()).collect(), coefficients: alpha.to_vec(), dominating: false }
        .recombine(points);
    geometry::caratheodory(&x, points).expect("recombination lies in the hull")
}

/// A mixture whose payoff is at least `big_m` on `+inf` target components,
/// at most `-big_m` on `-inf` ones and within `eps` elsewhere.
///
/// Mixtures of finite-valued members are tried first (exact match on finite
/// components, then within `eps`). Otherwise one witness per infinite
/// component gets total weight `eta = 1/2^k` and the finite components are
/// solved to `eps/3` on the rest.
#[allow(clippy::too_many_arguments)]
pub fn approximate(
    m: &Pomdp,
    s0: usize,
    f: &MultiPayoff,
    target: &ExtRealVector,
    eps: &Rational,
    big_m: &Rational,
    pool: &Pool,
) -> Result<MixtureCertificate> {
    if !eps.is_positive() {
        return Err(Error::InvalidArgument("eps must be positive".into()));
    }
    let d = f.dim();
    if target.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: target.dim() });
    }
    let relation = CertRelation::Approximates { eps: eps.clone(), big_m: big_m.clone() };
    let (idx, points) = pool.finite();

    let bounds_with = |tol: &Rational, infinite_free: bool| -> Vec<(Option<Rational>, Option<Rational>)> {
        target
            .0
            .iter()
            .map(|t| match t {
                ExtReal::PosInf if !infinite_free => (Some(big_m.clone()), None),
                ExtReal::NegInf if !infinite_free => (None, Some(-big_m.clone())),
                ExtReal::Finite(t) => (Some(t - tol), Some(t + tol)),
                _ => (None, None),
            })
            .collect()
    };

    for tol in [Rational::zero(), eps.clone()] {
        if let Some(alpha) = bounded_weights(&points, &bounds_with(&tol, false)) {
            let dec = sparsify(&points, &alpha);
            let (members, weights) = from_decomposition(&dec, &idx);
            return certify(m, s0, f, pool, members, weights, target, relation);
        }
    }

    let infinite_dims: Vec<usize> = (0..d).filter(|&j| !target.0[j].is_finite()).collect();
    if infinite_dims.is_empty() {
        return Err(infeasible(pool, "no mixture of finite pool members is within eps"));
    }
    let mut witnesses: Vec<usize> = Vec::new();
    for &j in &infinite_dims {
        let found = pool.members.iter().position(|(_, v)| {
            v.0[j] == target.0[j]
                && v.0.iter().zip(&target.0).all(|(x, t)| x.is_finite() || x == t)
        });
        match found {
            Some(w) if !witnesses.contains(&w) => witnesses.push(w),
            Some(_) => {}
            None => return Err(infeasible(pool, &format!("no pool member attains {} in dimension {}", target.0[j], j + 1))),
        }
    }
    // Finite components to eps/3 over members that are finite there and
    // never contradict an infinite target component.
    let finite_dims: Vec<usize> = (0..d).filter(|&j| target.0[j].is_finite()).collect();
    let eligible: Vec<usize> = (0..pool.len())
        .filter(|&i| {
            let v = &pool.members[i].1;
            v.0.iter().zip(&target.0).all(|(x, t)| x.is_finite() || x == t)
        })
        .collect();
    let project = |i: usize| -> Point {
        finite_dims.iter().map(|&j| pool.members[i].1 .0[j].finite().cloned().expect("eligible")).collect()
    };
    let points: Vec<Point> = eligible.iter().map(|&i| project(i)).collect();
    let third = eps / Rational::from_integer(3.into());
    let bounds: Vec<(Option<Rational>, Option<Rational>)> = finite_dims
        .iter()
        .map(|&j| {
            let t = target.0[j].finite().expect("finite component");
            (Some(t - &third), Some(t + &third))
        })
        .collect();
    let alpha = bounded_weights(&points, &bounds)
        .ok_or_else(|| infeasible(pool, "finite components cannot be matched within eps/3"))?;
    let dec = sparsify(&points, &alpha);
    let x = dec.recombine(&points);

    // Largest eta = 1/2^k (k >= 1) keeping the witnesses' shift on finite
    // components within 2 eps / 3.
    let r = Rational::from_integer((witnesses.len() as i64).into());
    let mut shift = Rational::zero();
    for (k, _) in finite_dims.iter().enumerate() {
        let mean: Rational = witnesses.iter().map(|&w| project(w)[k].clone()).sum::<Rational>() / &r;
        shift = shift.max((mean - &x[k]).abs());
    }
    let budget = &third * Rational::from_integer(2.into());
    let mut eta = Rational::new(1.into(), 2.into());
    while &eta * &shift > budget {
        eta /= Rational::from_integer(2.into());
    }

    let rest = Rational::one() - &eta;
    let (mut members, mut weights): (Vec<usize>, Vec<Rational>) =
        dec.indices.iter().zip(&dec.coefficients).map(|(&k, c)| (eligible[k], c * &rest)).unzip();
    for &w in &witnesses {
        let share = &eta / &r;
        match members.iter().position(|&i| i == w) {
            Some(k) => weights[k] += share,
            None => {
                members.push(w);
                weights.push(share);
            }
        }
    }
    certify(m, s0, f, pool, members, weights, target, relation)
}

fn infeasible(pool: &Pool, why: &str) -> Error {
    Error::InfeasibleApproximation(format!("{why} (pool {})", pool.describe()))
}

#[derive(Clone, Debug)]
pub struct LexResult {
    /// Pool index of the winner.
    pub index: usize,
    pub winner: PureStrategy,
    pub vector: ExtRealVector,
    /// Every pool member is lexicographically at most `vector`.
    pub certified: bool,
}

/// Index of the lexicographic maximum, filtering one dimension at a time
/// with exact ties; the earliest index wins among equal vectors.
pub fn lex_max_index(vectors: &[ExtRealVector]) -> Option<usize> {
    let mut alive: Vec<usize> = (0..vectors.len()).collect();
    let d = vectors.first()?.dim();
    for j in 0..d {
        let best = alive.iter().map(|&i| &vectors[i].0[j]).max()?.clone();
        alive.retain(|&i| vectors[i].0[j] == best);
    }
    alive.first().copied()
}

pub fn lex_optimize(pool: &Pool) -> Result<LexResult> {
    let vectors = pool.vectors();
    let index = lex_max_index(&vectors).ok_or_else(|| Error::InvalidArgument("empty pool".into()))?;
    let vector = vectors[index].clone();
    let certified = vectors.iter().all(|v| v.lex_cmp(&vector) != Ordering::Greater);
    Ok(LexResult { index, winner: pool.members[index].0.clone(), vector, certified })
}

/// A pool member whose payoff is lexicographically at least `v`.
pub fn check_pure_dominates_lex(v: &ExtRealVector, pool: &Pool) -> Option<usize> {
    let vectors = pool.vectors();
    lex_max_index(&vectors).filter(|&i| vectors[i].lex_cmp(v) != Ordering::Less)
}

/// A mixture with at most `d + 1` support members and exactly the same
/// payoff, `vectors[i]` being the payoff of `mu.support[i]`.
///
/// One member is kept per infinite component; the others are reduced by
/// Carathéodory on the finite components after renormalization.
pub fn reduce_support(mu: &FiniteMixture, vectors: &[ExtRealVector]) -> Result<FiniteMixture> {
    if vectors.len() != mu.support.len() {
        return Err(Error::DimensionMismatch { expected: mu.support.len(), got: vectors.len() });
    }
    let live: Vec<usize> = (0..vectors.len()).filter(|&i| mu.weights[i].is_positive()).collect();
    let d = vectors.first().map_or(0, ExtRealVector::dim);
    let original = convex_combination(
        &live.iter().map(|&i| mu.weights[i].clone()).collect::<Vec<_>>(),
        &live.iter().map(|&i| &vectors[i]).collect::<Vec<_>>(),
    )
    .map_err(|e| Error::UndefinedExpectation(e.to_string()))?;

    let mut fixed: Vec<usize> = Vec::new();
    for j in 0..d {
        if original.0[j].is_finite() {
            continue;
        }
        if !fixed.iter().any(|&i| vectors[i].0[j] == original.0[j]) {
            let pick = live.iter().copied().find(|&i| vectors[i].0[j] == original.0[j]).expect("infinite sum has a witness");
            fixed.push(pick);
        }
    }
    let finite_dims: Vec<usize> = (0..d).filter(|&j| original.0[j].is_finite()).collect();
    let rest: Vec<usize> = live.iter().copied().filter(|i| !fixed.contains(i)).collect();

    let mut support: Vec<PureStrategy> = fixed.iter().map(|&i| mu.support[i].clone()).collect();
    let mut weights: Vec<Rational> = fixed.iter().map(|&i| mu.weights[i].clone()).collect();
    if !rest.is_empty() {
        let mass: Rational = rest.iter().map(|&i| &mu.weights[i]).sum();
        let points: Vec<Point> = rest
            .iter()
            .map(|&i| finite_dims.iter().map(|&j| vectors[i].0[j].finite().cloned().expect("finite component")).collect())
            .collect();
        let alpha: Vec<Rational> = rest.iter().map(|&i| &mu.weights[i] / &mass).collect();
        let dec = sparsify(&points, &alpha);
        for (&k, c) in dec.indices.iter().zip(&dec.coefficients) {
            support.push(mu.support[rest[k]].clone());
            weights.push(c * &mass);
        }
    }
    let reduced = FiniteMixture::new(support, weights)?;
    debug_assert!({
        let vs: Vec<&ExtRealVector> = reduced
            .support
            .iter()
            .map(|s| &vectors[mu.support.iter().position(|t| t == s).expect("support member")])
            .collect();
        convex_combination(&reduced.weights, &vs).ok() == Some(original)
    });
    Ok(reduced)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rational::{int, ratio};

    fn v(xs: &[ExtReal]) -> ExtRealVector {
        ExtRealVector(xs.to_vec())
    }

    fn fin(x: Rational) -> ExtReal {
        ExtReal::Finite(x)
    }

    fn pool_of(doc: &crate::model::Document, skeleton: &str) -> (Pool, MultiPayoff, usize) {
        let m = &doc.model;
        let f = MultiPayoff::resolve(m, &doc.payoffs).unwrap();
        let sk = crate::strategy::named_skeleton(m, skeleton).unwrap();
        let s0 = 0;
        (Pool::enumerate(m, s0, &f, &sk, 1 << 16, Execution::default()).unwrap(), f, s0)
    }

    #[test]
    fn delay_target_on_face() {
        let doc = fixtures::delay();
        let (pool, f, s0) = pool_of(&doc, "counter:4");
        let target = ExtRealVector::from_rationals([int(2), int(2)]);
        let cert = achieve(&doc.model, s0, &f, &target, &pool, Mode::Equals).unwrap();
        assert_eq!(cert.support(), 2);
        assert_eq!(cert.realized, target);
        let dom = achieve(&doc.model, s0, &f, &target, &pool, Mode::Dominates).unwrap();
        assert!(dom.support() <= 2 && dom.realized.dominates(&target));
        let high = ExtRealVector::from_rationals([int(3), int(3)]);
        assert!(matches!(achieve(&doc.model, s0, &f, &high, &pool, Mode::Equals), Err(Error::NotAchievable)));
    }

    #[test]
    fn pure_target_gives_dirac() {
        let doc = fixtures::triangle();
        let (pool, f, s0) = pool_of(&doc, "memoryless");
        let target = pool.members[0].1.clone();
        let cert = achieve(&doc.model, s0, &f, &target, &pool, Mode::Equals).unwrap();
        assert_eq!(cert.support(), 1);
    }

    #[test]
    fn lexicographic_on_triangle() {
        let doc = fixtures::triangle();
        let (pool, _, _) = pool_of(&doc, "memoryless");
        let lex = lex_optimize(&pool).unwrap();
        assert_eq!(lex.vector, ExtRealVector::from_rationals([int(1), int(0)]));
        assert!(lex.certified);
        let a = doc.model.action_index("a").unwrap();
        assert_eq!(lex.winner.action(0, 0), a);
    }

    #[test]
    fn unbounded_lex_and_approx() {
        let doc = fixtures::unbounded();
        let (pool, f, s0) = pool_of(&doc, "counter:8");
        let lex = lex_optimize(&pool).unwrap();
        assert_eq!(lex.vector, ExtRealVector::from_rationals([int(1), int(8)]));
        let target = v(&[fin(int(1)), ExtReal::PosInf]);
        assert!(check_pure_dominates_lex(&target, &pool).is_none());
        let cert = approximate(&doc.model, s0, &f, &target, &ratio(1, 10), &int(5), &pool).unwrap();
        assert!(cert.holds());
        assert_eq!(cert.realized.0[0], fin(int(1)));
    }

    #[test]
    fn approximation_with_infinite_witness() {
        let doc = fixtures::unbounded();
        let (pool, f, s0) = pool_of(&doc, "counter:2");
        let target = v(&[fin(ratio(9, 10)), ExtReal::PosInf]);
        let cert = approximate(&doc.model, s0, &f, &target, &ratio(1, 5), &int(100), &pool).unwrap();
        assert!(cert.holds());
        assert_eq!(cert.realized.0[1], ExtReal::PosInf);
        let both = v(&[ExtReal::PosInf, ExtReal::NegInf]);
        assert!(matches!(
            approximate(&doc.model, s0, &f, &both, &ratio(1, 5), &int(1), &pool),
            Err(Error::InfeasibleApproximation(_))
        ));
    }

    #[test]
    fn reduce_support_handles_infinity() {
        let doc = fixtures::unbounded();
        let (pool, _, _) = pool_of(&doc, "counter:3");
        let mut chosen: Vec<usize> = Vec::new();
        let mut seen: Vec<ExtRealVector> = Vec::new();
        for (i, (_, vec)) in pool.members.iter().enumerate() {
            if !seen.contains(vec) {
                seen.push(vec.clone());
                chosen.push(i);
            }
        }
        assert_eq!(chosen.len(), 5);
        let weights = vec![ratio(1, 5); 5];
        let mu = FiniteMixture::new(chosen.iter().map(|&i| pool.members[i].0.clone()).collect(), weights.clone()).unwrap();
        let vectors: Vec<ExtRealVector> = chosen.iter().map(|&i| pool.members[i].1.clone()).collect();
        let reduced = reduce_support(&mu, &vectors).unwrap();
        assert!(reduced.support.len() <= 3);
        let lookup = |s: &PureStrategy| vectors[mu.support.iter().position(|t| t == s).unwrap()].clone();
        let after: Vec<ExtRealVector> = reduced.support.iter().map(lookup).collect();
        let refs: Vec<&ExtRealVector> = after.iter().collect();
        let before: Vec<&ExtRealVector> = vectors.iter().collect();
        assert_eq!(
            convex_combination(&reduced.weights, &refs).unwrap(),
            convex_combination(&weights, &before).unwrap()
        );
    }

    #[test]
    fn relation_check_is_literal() {
        let rel = CertRelation::Approximates { eps: ratio(1, 10), big_m: int(10) };
        let t = v(&[fin(int(1)), ExtReal::PosInf]);
        assert!(relation_holds(&rel, &t, &v(&[fin(ratio(11, 10)), fin(int(10))])));
        assert!(!relation_holds(&rel, &t, &v(&[fin(ratio(6, 5)), fin(int(10))])));
        assert!(!relation_holds(&rel, &t, &v(&[fin(int(1)), fin(int(9))])));
    }
}
