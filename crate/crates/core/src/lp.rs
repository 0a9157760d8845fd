//! Exact two-phase simplex on a dense rational tableau.
//!
//! Pivoting follows Bland's rule, so the method terminates on degenerate
//! problems without any tolerance.

use num_traits::{One, Signed, Zero};

use crate::rational::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<Rational>,
    pub relation: Relation,
    pub rhs: Rational,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<Rational>, value: Rational },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn solution(&self) -> Option<&[Rational]> {
        match self {
            LpOutcome::Optimal { x, .. } => Some(x),
            _ => None,
        }
    }
}

/// `maximize objective . x` subject to the constraints, with every variable
/// non-negative unless marked free.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    num_vars: usize,
    objective: Vec<Rational>,
    constraints: Vec<Constraint>,
    free: Vec<bool>,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            num_vars,
            objective: vec![Rational::zero(); num_vars],
            constraints: Vec::new(),
            free: vec![false; num_vars],
        }
    }

    pub fn set_free(&mut self, var: usize) -> &mut Self {
        self.free[var] = true;
        self
    }

    pub fn maximize(&mut self, objective: Vec<Rational>) -> &mut Self {
        assert_eq!(objective.len(), self.num_vars);
        self.objective = objective;
        self
    }

    pub fn constrain(&mut self, coeffs: Vec<Rational>, relation: Relation, rhs: Rational) -> &mut Self {
        assert_eq!(coeffs.len(), self.num_vars);
        self.constraints.push(Constraint { coeffs, relation, rhs });
        self
    }

    pub fn solve(&self) -> LpOutcome {
        // Structural columns: one per non-negative variable, two per free one.
        let mut col_of = Vec::with_capacity(self.num_vars);
        let mut ncols = 0;
        for &f in &self.free {
            col_of.push(ncols);
            ncols += if f { 2 } else { 1 };
        }
        let structural = ncols;

        let mut rows: Vec<(Vec<Rational>, Relation, Rational)> = Vec::new();
        for c in &self.constraints {
            let mut row = vec![Rational::zero(); structural];
            for (v, a) in c.coeffs.iter().enumerate() {
                row[col_of[v]] = a.clone();
                if self.free[v] {
                    row[col_of[v] + 1] = -a.clone();
                }
            }
            let (mut rel, mut rhs) = (c.relation, c.rhs.clone());
            if rhs.is_negative() {
                row.iter_mut().for_each(|x| *x = -x.clone());
                rhs = -rhs;
                rel = match rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
            rows.push((row, rel, rhs));
        }

        let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
        let total = structural + n_slack + n_art;
        let art_start = structural + n_slack;
        let m = rows.len();

        let mut tab = vec![vec![Rational::zero(); total + 1]; m];
        let mut basis = vec![0usize; m];
        let (mut s_idx, mut a_idx) = (structural, art_start);
        for (i, (row, rel, rhs)) in rows.into_iter().enumerate() {
            for (j, x) in row.into_iter().enumerate() {
                tab[i][j] = x;
            }
            tab[i][total] = rhs;
            match rel {
                Relation::Le => {
                    tab[i][s_idx] = Rational::one();
                    basis[i] = s_idx;
                    s_idx += 1;
                }
                Relation::Ge => {
                    tab[i][s_idx] = -Rational::one();
                    s_idx += 1;
                    tab[i][a_idx] = Rational::one();
                    basis[i] = a_idx;
                    a_idx += 1;
                }
                Relation::Eq => {
                    tab[i][a_idx] = Rational::one();
                    basis[i] = a_idx;
                    a_idx += 1;
                }
            }
        }

        let mut t = Tableau { rows: tab, basis, width: total };

        if n_art > 0 {
            let mut phase1 = vec![Rational::zero(); total];
            for c in phase1.iter_mut().skip(art_start) {
                *c = -Rational::one();
            }
            let limit = total;
            if !t.optimize(&phase1, limit) {
                unreachable!("phase one is bounded");
            }
            let value = t.objective_value(&phase1);
            if !value.is_zero() {
                return LpOutcome::Infeasible;
            }
            t.drive_out_artificials(art_start);
        }

        let mut cost = vec![Rational::zero(); total];
        for (v, c) in self.objective.iter().enumerate() {
            cost[col_of[v]] = c.clone();
            if self.free[v] {
                cost[col_of[v] + 1] = -c.clone();
            }
        }
        if !t.optimize(&cost, art_start) {
            return LpOutcome::Unbounded;
        }
        let values = t.column_values();
        let x: Vec<Rational> = (0..self.num_vars)
            .map(|v| {
                let pos = values[col_of[v]].clone();
                if self.free[v] {
                    pos - &values[col_of[v] + 1]
                } else {
                    pos
                }
            })
            .collect();
        let value = crate::linalg::dot(&self.objective, &x);
        LpOutcome::Optimal { x, value }
    }
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> &Rational {
        &self.rows[i][self.width]
    }

    fn objective_value(&self, cost: &[Rational]) -> Rational {
        self.basis
            .iter()
            .enumerate()
            .fold(Rational::zero(), |acc, (i, &b)| acc + &cost[b] * self.rhs(i))
    }

    fn reduced_cost(&self, cost: &[Rational], j: usize) -> Rational {
        let mut r = cost[j].clone();
        for (i, &b) in self.basis.iter().enumerate() {
            if !cost[b].is_zero() && !self.rows[i][j].is_zero() {
                r -= &cost[b] * &self.rows[i][j];
            }
        }
        r
    }

    /// Maximizes over columns `< limit`; returns false when unbounded.
    fn optimize(&mut self, cost: &[Rational], limit: usize) -> bool {
        loop {
            let entering = (0..limit)
                .filter(|j| !self.basis.contains(j))
                .find(|&j| self.reduced_cost(cost, j).is_positive());
            let Some(j) = entering else {
                return true;
            };
            let mut leave: Option<(usize, Rational)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][j];
                if !a.is_positive() {
                    continue;
                }
                let ratio = self.rhs(i) / a;
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((i, _)) = leave else {
                return false;
            };
            self.pivot(i, j);
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let inv = self.rows[row][col].recip();
        for x in self.rows[row].iter_mut() {
            *x *= &inv;
        }
        let pivot_row = self.rows[row].clone();
        for (i, r) in self.rows.iter_mut().enumerate() {
            if i == row || r[col].is_zero() {
                continue;
            }
            let factor = r[col].clone();
            for (x, p) in r.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *x -= &factor * p;
                }
            }
        }
        self.basis[row] = col;
    }

    /// After a feasible phase one, pivots remaining artificial basics out
    /// or drops their (redundant) rows, then forbids artificial columns.
    fn drive_out_artificials(&mut self, art_start: usize) {
        let mut i = 0;
        while i < self.rows.len() {
            if self.basis[i] < art_start {
                i += 1;
                continue;
            }
            match (0..art_start).find(|&j| !self.rows[i][j].is_zero()) {
                Some(j) => {
                    self.pivot(i, j);
                    i += 1;
                }
                None => {
                    self.rows.remove(i);
                    self.basis.remove(i);
                }
            }
        }
    }

    fn column_values(&self) -> Vec<Rational> {
        let mut v = vec![Rational::zero(); self.width];
        for (i, &b) in self.basis.iter().enumerate() {
            v[b] = self.rhs(i).clone();
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn textbook_maximum() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let mut lp = LinearProgram::new(2);
        lp.maximize(vec![int(3), int(5)])
            .constrain(vec![int(1), int(0)], Relation::Le, int(4))
            .constrain(vec![int(0), int(2)], Relation::Le, int(12))
            .constrain(vec![int(3), int(2)], Relation::Le, int(18));
        assert_eq!(
            lp.solve(),
            LpOutcome::Optimal { x: vec![int(2), int(6)], value: int(36) }
        );
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(1);
        lp.constrain(vec![int(1)], Relation::Ge, int(2))
            .constrain(vec![int(1)], Relation::Le, int(1));
        assert_eq!(lp.solve(), LpOutcome::Infeasible);

        let mut lp = LinearProgram::new(1);
        lp.maximize(vec![int(1)]).constrain(vec![int(1)], Relation::Ge, int(1));
        assert_eq!(lp.solve(), LpOutcome::Unbounded);
    }

    #[test]
    fn free_variables_go_negative() {
        let mut lp = LinearProgram::new(1);
        lp.set_free(0)
            .maximize(vec![int(-1)])
            .constrain(vec![int(2)], Relation::Ge, int(-3));
        assert_eq!(lp.solve(), LpOutcome::Optimal { x: vec![ratio(-3, 2)], value: ratio(3, 2) });
    }

    #[test]
    fn redundant_equalities_are_tolerated() {
        let mut lp = LinearProgram::new(2);
        lp.maximize(vec![int(1), int(0)])
            .constrain(vec![int(1), int(1)], Relation::Eq, int(1))
            .constrain(vec![int(2), int(2)], Relation::Eq, int(2));
        assert_eq!(lp.solve().solution().unwrap(), &[int(1), int(0)]);
    }
}
