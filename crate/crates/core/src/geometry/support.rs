use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::linalg;
use crate::rational::Rational;

use super::hull::combinations;
use super::{check_dims, direction_basis, distinct, hull_weights, in_relative_interior, l1_normalize, LinearMap, Point};

/// A lexicographic supporting map at `q`: `L(q)` is the lexicographic
/// maximum of `L` over the hull and `q` is relatively interior to the face
/// `L^-1(L(q))`.
///
/// Each row is the extreme ray of the current face's normal cone at `q`
/// with the lexicographically smallest L1-normalized normal.
pub fn supporting_map(q: &[Rational], points: &[Point]) -> Result<LinearMap> {
    check_dims(points, q.len())?;
    if hull_weights(q, points).is_none() {
        return Err(Error::NotInHull);
    }
    let (mut face, _) = distinct(points);
    let mut map = LinearMap::default();
    while !in_relative_interior(q, &face) {
        let row = support_row(q, &face).ok_or(Error::NotInHull)?;
        let level = linalg::dot(&row, q);
        face.retain(|p| linalg::dot(&row, p) == level);
        map.rows.push(row);
    }
    Ok(map)
}

fn support_row(q: &[Rational], face: &[Point]) -> Option<Vec<Rational>> {
    let (basis, _) = direction_basis(face, q);
    let k = basis.len();
    // The normal is sum_j c_j basis_j; each face point gives c . cons <= 0.
    let cons: Vec<Vec<Rational>> = face
        .iter()
        .map(|p| {
            let v = linalg::sub(p, q);
            basis.iter().map(|b| linalg::dot(b, &v)).collect::<Vec<_>>()
        })
        .filter(|row| row.iter().any(|x| !x.is_zero()))
        .collect();
    let mut best: Option<Vec<Rational>> = None;
    for subset in combinations(cons.len(), k.saturating_sub(1)) {
        let tight: Vec<Vec<Rational>> = subset.iter().map(|&i| cons[i].clone()).collect();
        let null = linalg::null_space(&tight, k);
        if null.len() != 1 {
            continue;
        }
        for ray in [null[0].clone(), null[0].iter().map(|x| -x).collect()] {
            if cons.iter().any(|row| linalg::dot(row, &ray).is_positive()) {
                continue;
            }
            let mut normal = vec![Rational::zero(); q.len()];
            for (c, b) in ray.iter().zip(&basis) {
                for (n, x) in normal.iter_mut().zip(b) {
                    *n += c * x;
                }
            }
            let normal = l1_normalize(&normal);
            if best.as_ref().is_none_or(|b| normal < *b) {
                best = Some(normal);
            }
        }
    }
    best
}
