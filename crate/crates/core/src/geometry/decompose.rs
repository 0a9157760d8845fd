use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::extreal::{ExtReal, ExtRealVector};
use crate::linalg;
use crate::lp::{LinearProgram, Relation};
use crate::rational::Rational;

use super::{check_dims, hull_weights, Decomposition, Point};

/// An exact convex combination of at most `d + 1` affinely independent
/// points equal to `q`.
pub fn caratheodory(q: &[Rational], points: &[Point]) -> Result<Decomposition> {
    check_dims(points, q.len())?;
    let alpha = hull_weights(q, points).ok_or(Error::NotInHull)?;
    let (indices, coefficients) = eliminate_dependencies(points, &alpha);
    Ok(Decomposition { indices, coefficients, dominating: false })
}

/// Shrinks the support of `alpha` along affine dependencies until the
/// remaining points are affinely independent; the recombination is kept.
fn eliminate_dependencies(points: &[Point], alpha: &[Rational]) -> (Vec<usize>, Vec<Rational>) {
    let mut idx: Vec<usize> = (0..alpha.len()).filter(|&i| alpha[i].is_positive()).collect();
    let mut coef: Vec<Rational> = idx.iter().map(|&i| alpha[i].clone()).collect();
    let d = points.first().map_or(0, Vec::len);
    loop {
        let mut rows: Vec<Vec<Rational>> = (0..d).map(|j| idx.iter().map(|&i| points[i][j].clone()).collect()).collect();
        rows.push(vec![Rational::one(); idx.len()]);
        let null = linalg::null_space(&rows, idx.len());
        let Some(mut lambda) = null.into_iter().next() else {
            return (idx, coef);
        };
        if !lambda.iter().any(|l| l.is_positive()) {
            lambda = lambda.iter().map(|l| -l).collect();
        }
        let mut best: Option<(usize, Rational)> = None;
        for (k, l) in lambda.iter().enumerate() {
            if l.is_positive() {
                let t = &coef[k] / l;
                if best.as_ref().is_none_or(|(_, b)| t < *b) {
                    best = Some((k, t));
                }
            }
        }
        let (drop, t) = best.expect("affine dependency has a positive entry");
        for (c, l) in coef.iter_mut().zip(&lambda) {
            *c -= &t * l;
        }
        coef[drop] = Rational::zero();
        let keep: Vec<usize> = (0..idx.len()).filter(|&k| coef[k].is_positive()).collect();
        idx = keep.iter().map(|&k| idx[k]).collect();
        coef = keep.iter().map(|&k| coef[k].clone()).collect();
    }
}

/// A combination of at most `d` points whose recombination dominates `q`.
///
/// `q` is pushed along the all-ones direction as far as the hull allows,
/// which lands on a proper face. With `below` set, `q` only needs to be
/// dominated by some hull point.
pub fn dominating_face_decomposition(q: &[Rational], points: &[Point], below: bool) -> Result<Decomposition> {
    check_dims(points, q.len())?;
    if points.is_empty() {
        return Err(Error::NotDominated);
    }
    let (n, d) = (points.len(), q.len());
    let start: Point = if below {
        let alpha = dominating_weights(q, points).ok_or(Error::NotDominated)?;
        recombine(points, &alpha)
    } else {
        q.to_vec()
    };
    // Variables: weights, then gamma.
    let mut lp = LinearProgram::new(n + 1);
    let mut ones = vec![Rational::one(); n];
    ones.push(Rational::zero());
    lp.constrain(ones, Relation::Eq, Rational::one());
    for j in 0..d {
        let mut row: Vec<Rational> = points.iter().map(|p| p[j].clone()).collect();
        row.push(-Rational::one());
        lp.constrain(row, Relation::Eq, start[j].clone());
    }
    let mut obj = vec![Rational::zero(); n + 1];
    obj[n] = Rational::one();
    lp.maximize(obj);
    let outcome = lp.solve();
    let x = outcome.solution().ok_or(Error::NotDominated)?;
    let (indices, coefficients) = eliminate_dependencies(points, &x[..n]);
    let mut dec = Decomposition { indices, coefficients, dominating: true };
    dec.dominating = dec.recombine(points) != q;
    Ok(dec)
}

fn recombine(points: &[Point], alpha: &[Rational]) -> Point {
    let mut acc = vec![Rational::zero(); points[0].len()];
    for (p, a) in points.iter().zip(alpha) {
        for (x, y) in acc.iter_mut().zip(p) {
            *x += a * y;
        }
    }
    acc
}

/// Weights with `sum alpha_i p_i >= q`; `None` rows are unconstrained.
fn dominating_weights_ext(q: &[Option<Rational>], points: &[Point]) -> Option<Vec<Rational>> {
    let n = points.len();
    let mut lp = LinearProgram::new(n);
    lp.constrain(vec![Rational::one(); n], Relation::Eq, Rational::one());
    for (j, qj) in q.iter().enumerate() {
        if let Some(qj) = qj {
            lp.constrain(points.iter().map(|p| p[j].clone()).collect(), Relation::Ge, qj.clone());
        }
    }
    lp.solve().solution().map(<[Rational]>::to_vec)
}

fn dominating_weights(q: &[Rational], points: &[Point]) -> Option<Vec<Rational>> {
    dominating_weights_ext(&q.iter().cloned().map(Some).collect::<Vec<_>>(), points)
}

/// Whether some convex combination of `points` dominates `q`; on success the
/// combination uses at most `d` points. `-inf` components of `q` are free
/// and `+inf` components are never met.
pub fn achievability_lp(q: &ExtRealVector, points: &[Point]) -> Option<Decomposition> {
    if points.is_empty() || points.iter().any(|p| p.len() != q.dim()) {
        return None;
    }
    let mut bounds = Vec::with_capacity(q.dim());
    for x in &q.0 {
        match x {
            ExtReal::PosInf => return None,
            ExtReal::NegInf => bounds.push(None),
            ExtReal::Finite(r) => bounds.push(Some(r.clone())),
        }
    }
    let alpha = dominating_weights_ext(&bounds, points)?;
    let start = recombine(points, &alpha);
    let dec = dominating_face_decomposition(&start, points, false).ok()?;
    let exact = bounds.iter().zip(dec.recombine(points)).all(|(b, r)| b.as_ref() == Some(&r));
    Some(Decomposition { dominating: !exact, ..dec })
}
