//! Exact convex geometry over rational points in small dimension.

mod decompose;
mod hull;
mod support;

use num_traits::{One, Signed, Zero};
use serde_json::json;

use crate::error::{Error, Result};
use crate::extreal::ExtRealVector;
use crate::linalg;
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::rational::{self, Rational};

pub use decompose::{achievability_lp, caratheodory, dominating_face_decomposition};
pub use hull::{convex_hull, extreme_points, separate};
pub use support::supporting_map;

pub type Point = Vec<Rational>;

/// `{x : normal . x <= offset}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hyperplane {
    pub normal: Vec<Rational>,
    pub offset: Rational,
}

impl Hyperplane {
    pub fn value(&self, x: &[Rational]) -> Rational {
        linalg::dot(&self.normal, x)
    }

    pub fn contains(&self, x: &[Rational]) -> bool {
        self.value(x) <= self.offset
    }
}

#[derive(Clone, Debug)]
pub struct Hull {
    pub points: Vec<Point>,
    /// Indices of extreme input points; duplicates of a vertex are all listed.
    pub vertices: Vec<usize>,
    /// Affine dimension of the hull.
    pub dim: usize,
    /// Equations `n . x = c` of the affine span.
    pub equalities: Vec<Hyperplane>,
    /// Facet inequalities relative to the affine span.
    pub facets: Vec<Hyperplane>,
}

impl Hull {
    pub fn contains(&self, x: &[Rational]) -> bool {
        self.equalities.iter().all(|h| h.value(x) == h.offset) && self.facets.iter().all(|h| h.contains(x))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let vec = |v: &[Rational]| v.iter().map(rational::format).collect::<Vec<_>>();
        let plane = |h: &Hyperplane| json!({ "normal": vec(&h.normal), "offset": rational::format(&h.offset) });
        json!({
            "dim": self.dim,
            "points": self.points.iter().map(|p| vec(p)).collect::<Vec<_>>(),
            "vertices": self.vertices,
            "equalities": self.equalities.iter().map(plane).collect::<Vec<_>>(),
            "facets": self.facets.iter().map(plane).collect::<Vec<_>>(),
        })
    }

    /// One CSV row per vertex.
    pub fn vertices_csv(&self) -> String {
        points_csv(self.vertices.iter().map(|&i| (i, &self.points[i])))
    }
}

pub(crate) fn points_csv<'a>(rows: impl Iterator<Item = (usize, &'a Point)>) -> String {
    let mut out = String::new();
    for (i, p) in rows {
        let cells: Vec<String> = p.iter().map(rational::format).collect();
        out.push_str(&format!("{i},{}\n", cells.join(",")));
    }
    out
}

/// Ordered linear forms; the first row dominates the lexicographic order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LinearMap {
    pub rows: Vec<Vec<Rational>>,
}

impl LinearMap {
    pub fn apply(&self, x: &[Rational]) -> Vec<Rational> {
        self.rows.iter().map(|r| linalg::dot(r, x)).collect()
    }
}

/// A convex combination of input points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub indices: Vec<usize>,
    pub coefficients: Vec<Rational>,
    /// The recombination is only guaranteed to dominate the target.
    pub dominating: bool,
}

impl Decomposition {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn recombine(&self, points: &[Point]) -> Point {
        let d = points.first().map_or(0, Vec::len);
        let mut acc = vec![Rational::zero(); d];
        for (&i, c) in self.indices.iter().zip(&self.coefficients) {
            for (a, x) in acc.iter_mut().zip(&points[i]) {
                *a += c * x;
            }
        }
        acc
    }

    /// Coefficients form a distribution and recombine to (or above) `q`.
    pub fn verify(&self, q: &[Rational], points: &[Point]) -> bool {
        let sum: Rational = self.coefficients.iter().sum();
        if !sum.is_one() || self.coefficients.iter().any(|c| c.is_negative()) {
            return false;
        }
        let r = self.recombine(points);
        if self.dominating {
            r.iter().zip(q).all(|(a, b)| a >= b)
        } else {
            r == q
        }
    }
}

/// Indices of points not strictly dominated by another point; equal
/// points are all kept.
pub fn pareto_frontier(points: &[ExtRealVector]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| !points.iter().any(|p| p.strictly_dominates(&points[i])))
        .collect()
}

pub(crate) fn check_dims(points: &[Point], d: usize) -> Result<()> {
    match points.iter().find(|p| p.len() != d) {
        Some(p) => Err(Error::DimensionMismatch { expected: d, got: p.len() }),
        None => Ok(()),
    }
}

/// Distinct points, in first-occurrence order, and the class of each input.
pub(crate) fn distinct(points: &[Point]) -> (Vec<Point>, Vec<usize>) {
    let mut reps: Vec<Point> = Vec::new();
    let mut class = Vec::with_capacity(points.len());
    for p in points {
        match reps.iter().position(|r| r == p) {
            Some(k) => class.push(k),
            None => {
                class.push(reps.len());
                reps.push(p.clone());
            }
        }
    }
    (reps, class)
}

/// Some convex combination of `points` equal to `q`.
pub(crate) fn hull_weights(q: &[Rational], points: &[Point]) -> Option<Vec<Rational>> {
    let n = points.len();
    if n == 0 {
        return None;
    }
    let mut lp = LinearProgram::new(n);
    lp.constrain(vec![Rational::one(); n], Relation::Eq, Rational::one());
    for (j, qj) in q.iter().enumerate() {
        lp.constrain(points.iter().map(|p| p[j].clone()).collect(), Relation::Eq, qj.clone());
    }
    lp.solve().solution().map(<[Rational]>::to_vec)
}

/// Whether `q` is a strictly positive combination of every point, i.e. lies
/// in the relative interior of their hull.
pub(crate) fn in_relative_interior(q: &[Rational], points: &[Point]) -> bool {
    let n = points.len();
    // Variables: weights, then the common lower bound t (objective).
    let mut lp = LinearProgram::new(n + 1);
    let mut ones = vec![Rational::one(); n];
    ones.push(Rational::zero());
    lp.constrain(ones, Relation::Eq, Rational::one());
    for (j, qj) in q.iter().enumerate() {
        let mut row: Vec<Rational> = points.iter().map(|p| p[j].clone()).collect();
        row.push(Rational::zero());
        lp.constrain(row, Relation::Eq, qj.clone());
    }
    for i in 0..n {
        let mut row = vec![Rational::zero(); n + 1];
        row[i] = Rational::one();
        row[n] = -Rational::one();
        lp.constrain(row, Relation::Ge, Rational::zero());
    }
    let mut obj = vec![Rational::zero(); n + 1];
    obj[n] = Rational::one();
    lp.maximize(obj);
    match lp.solve() {
        LpOutcome::Optimal { value, .. } => value.is_positive(),
        _ => false,
    }
}

/// Row basis (reduced echelon) of `{p - base}` and its pivot columns.
pub(crate) fn direction_basis(points: &[Point], base: &[Rational]) -> (Vec<Vec<Rational>>, Vec<usize>) {
    let mut rows: Vec<Vec<Rational>> = points.iter().map(|p| linalg::sub(p, base)).collect();
    if rows.is_empty() {
        return (rows, Vec::new());
    }
    let pivots = linalg::rref(&mut rows);
    rows.truncate(pivots.len());
    (rows, pivots)
}

/// Scales a non-zero vector to unit L1 norm.
pub(crate) fn l1_normalize(v: &[Rational]) -> Vec<Rational> {
    let norm: Rational = v.iter().map(|x| x.abs()).sum();
    v.iter().map(|x| x / &norm).collect()
}
