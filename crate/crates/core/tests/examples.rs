use payset::evaluate::{expected_payoff, mixed_expected_payoff, pure_payoff_set, DEFAULT_POOL_CAP};
use payset::exec::Execution;
use payset::extreal::convex_combination;
use payset::payoff::MultiPayoff;
use payset::rational::{int, pow, ratio};
use payset::strategy::{FiniteMemoryStrategy, FiniteMixture, MemorySkeleton};
use payset::{fixtures, Error, ExtReal, ExtRealVector};

fn v(xs: &[(i64, i64)]) -> ExtRealVector {
    ExtRealVector::from_rationals(xs.iter().map(|&(n, d)| ratio(n, d)))
}

#[test]
fn running_counter_three() {
    let doc = fixtures::running();
    let m = &doc.model;
    let f = MultiPayoff::resolve(m, &doc.payoffs).unwrap();
    let set: Vec<ExtRealVector> = pure_payoff_set(m, 0, &f, &MemorySkeleton::counter(m, 3), DEFAULT_POOL_CAP, Execution::Sequential)
        .unwrap()
        .into_iter()
        .map(|(_, v)| v)
        .collect();
    for want in [v(&[(5, 1), (0, 1)]), v(&[(4, 1), (1, 1)]), v(&[(13, 4), (3, 2)]), v(&[(43, 16), (7, 4)]), v(&[(1, 1), (2, 1)]), v(&[(0, 1), (2, 1)])] {
        assert!(set.contains(&want), "missing {want}");
    }
}

#[test]
fn coin_always_a_costs_two() {
    let doc = fixtures::coin();
    let m = &doc.model;
    let f = MultiPayoff::resolve(m, &doc.payoffs).unwrap();
    assert_eq!(expected_payoff(m, &FiniteMemoryStrategy::always(m, 0), 0, &f).unwrap(), v(&[(2, 1)]));
}

#[test]
fn unbounded_truncated_mixture() {
    let doc = fixtures::unbounded();
    let m = &doc.model;
    let f = MultiPayoff::resolve(m, &doc.payoffs).unwrap();
    let support = (0..4).map(|r| fixtures::a_then_b(m, 1 << r).unwrap()).collect();
    let weights = (0..4).map(|r| pow(&ratio(1, 2), r + 1) * ratio(16, 15)).collect();
    let mu = FiniteMixture::new(support, weights).unwrap();
    assert_eq!(mixed_expected_payoff(m, &mu, 0, &f).unwrap(), v(&[(1, 1), (32, 15)]));
}

#[test]
fn opposite_infinities_do_not_mix() {
    let up = ExtRealVector(vec![ExtReal::PosInf]);
    let down = ExtRealVector(vec![ExtReal::NegInf]);
    let half = [ratio(1, 2), ratio(1, 2)];
    assert!(matches!(convex_combination(&half, &[&up, &down]), Err(Error::UndefinedExpectation(_))));
    let zero = [int(1), int(0)];
    assert_eq!(convex_combination(&zero, &[&up, &down]).unwrap(), up);
}
