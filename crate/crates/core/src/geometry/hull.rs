use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::linalg;
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::rational::Rational;

use super::{check_dims, direction_basis, distinct, hull_weights, l1_normalize, Hull, Hyperplane, Point};

/// Indices whose point is not a convex combination of the other distinct
/// points. Repeated copies of a vertex are all reported.
pub fn extreme_points(points: &[Point]) -> Vec<usize> {
    let (reps, class) = distinct(points);
    let extreme = extreme_reps(&reps);
    (0..points.len()).filter(|&i| extreme[class[i]]).collect()
}

fn extreme_reps(reps: &[Point]) -> Vec<bool> {
    (0..reps.len())
        .map(|k| {
            let others: Vec<Point> = reps.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, p)| p.clone()).collect();
            hull_weights(&reps[k], &others).is_none()
        })
        .collect()
}

pub fn convex_hull(points: &[Point]) -> Result<Hull> {
    let Some(first) = points.first() else {
        return Err(Error::InvalidArgument("convex hull of no points".into()));
    };
    let d = first.len();
    if d == 0 {
        return Err(Error::InvalidArgument("points of dimension 0".into()));
    }
    check_dims(points, d)?;

    let (reps, class) = distinct(points);
    let extreme = extreme_reps(&reps);
    let vertices: Vec<usize> = (0..points.len()).filter(|&i| extreme[class[i]]).collect();

    let base = reps[0].clone();
    let (basis, pivots) = direction_basis(&reps, &base);
    let k = basis.len();
    let equalities = linalg::null_space(&basis, d)
        .into_iter()
        .map(|n| {
            let offset = linalg::dot(&n, &base);
            Hyperplane { normal: n, offset }
        })
        .collect();

    let reduced: Vec<Point> = reps
        .iter()
        .zip(&extreme)
        .filter(|(_, &e)| e)
        .map(|(p, _)| pivots.iter().map(|&c| &p[c] - &base[c]).collect())
        .collect();
    let mut facets_red: Vec<(Vec<Rational>, Rational)> = Vec::new();
    if k > 0 {
        for subset in combinations(reduced.len(), k) {
            let y0 = &reduced[subset[0]];
            let diffs: Vec<Vec<Rational>> = subset[1..].iter().map(|&i| linalg::sub(&reduced[i], y0)).collect();
            let null = linalg::null_space(&diffs, k);
            if null.len() != 1 {
                continue;
            }
            let mut n = l1_normalize(&null[0]);
            let mut c = linalg::dot(&n, y0);
            let values: Vec<Rational> = reduced.iter().map(|y| linalg::dot(&n, y)).collect();
            if !values.iter().all(|v| v <= &c) {
                if !values.iter().all(|v| v >= &c) {
                    continue;
                }
                n = n.iter().map(|x| -x).collect();
                c = -c;
            }
            if !facets_red.iter().any(|(m, e)| m == &n && e == &c) {
                facets_red.push((n, c));
            }
        }
    }
    let facets = facets_red
        .into_iter()
        .map(|(n, c)| {
            let mut normal = vec![Rational::zero(); d];
            for (j, &col) in pivots.iter().enumerate() {
                normal[col] = n[j].clone();
            }
            let offset = c + linalg::dot(&normal, &base);
            Hyperplane { normal, offset }
        })
        .collect();

    Ok(Hull { points: points.to_vec(), vertices, dim: k, equalities, facets })
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// A hyperplane with `q` strictly outside and every point inside, or `None`
/// when `q` lies in the hull. Normals are confined to `[-1, 1]^d`.
pub fn separate(q: &[Rational], points: &[Point]) -> Option<Hyperplane> {
    let d = q.len();
    if points.is_empty() {
        let mut normal = vec![Rational::zero(); d];
        normal[0] = Rational::one();
        return Some(Hyperplane { offset: &q[0] - Rational::one(), normal });
    }
    // Variables: normal (d, free), offset (free). Maximize n.q - c.
    let mut lp = LinearProgram::new(d + 1);
    for j in 0..=d {
        lp.set_free(j);
    }
    let mut obj = q.to_vec();
    obj.push(-Rational::one());
    lp.maximize(obj);
    for p in points {
        let mut row = p.clone();
        row.push(-Rational::one());
        lp.constrain(row, Relation::Le, Rational::zero());
    }
    for j in 0..d {
        let mut row = vec![Rational::zero(); d + 1];
        row[j] = Rational::one();
        lp.constrain(row.clone(), Relation::Le, Rational::one());
        lp.constrain(row, Relation::Ge, -Rational::one());
    }
    match lp.solve() {
        LpOutcome::Optimal { x, value } if value.is_positive() => {
            let normal = x[..d].to_vec();
            let max = points.iter().map(|p| linalg::dot(&normal, p)).max().expect("non-empty");
            let offset = (&max + linalg::dot(&normal, q)) / Rational::from_integer(2.into());
            Some(Hyperplane { normal, offset })
        }
        _ => None,
    }
}
