//! Two-phase primal simplex over exact rationals with Bland's rule, for
//! `min c·x  s.t.  A x = b, x ≥ 0`. Sizes here are a handful of rows and
//! columns, so a dense tableau is fine.

use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal {
        x: Vec<Rational>,
        value: Rational,
        /// `y` with `yᵀA ≤ c` and `yᵀb = value`.
        dual: Vec<Rational>,
    },
    /// `y` with `yᵀA ≤ 0` and `yᵀb > 0`.
    Infeasible { farkas: Vec<Rational> },
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    n: usize,
    m: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> &Rational {
        &self.rows[i][self.n + self.m]
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let p = self.rows[r][col].clone();
        for v in self.rows[r].iter_mut() {
            *v = v.checked_div(&p).expect("nonzero pivot");
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[col].is_zero() {
                continue;
            }
            let factor = row[col].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                *v -= &factor * pv;
            }
        }
        self.basis[r] = col;
    }

    fn reduced_cost(&self, cost: &[Rational], col: usize) -> Rational {
        let mut d = cost[col].clone();
        for (i, &b) in self.basis.iter().enumerate() {
            d -= &cost[b] * &self.rows[i][col];
        }
        d
    }

    /// Runs to optimality over columns `0..allowed`. Returns false when
    /// unbounded.
    fn optimize(&mut self, cost: &[Rational], allowed: usize) -> bool {
        loop {
            let entering = (0..allowed)
                .filter(|j| !self.basis.contains(j))
                .find(|&j| self.reduced_cost(cost, j).is_negative());
            let Some(col) = entering else { return true };
            let mut best: Option<(Rational, usize, usize)> = None;
            for i in 0..self.m {
                let a = &self.rows[i][col];
                if !a.is_positive() {
                    continue;
                }
                let ratio = self.rhs(i).checked_div(a).expect("positive");
                let better = match &best {
                    None => true,
                    Some((r, _, b)) => ratio < *r || (ratio == *r && self.basis[i] < *b),
                };
                if better {
                    best = Some((ratio, i, self.basis[i]));
                }
            }
            let Some((_, r, _)) = best else { return false };
            self.pivot(r, col);
        }
    }

    /// `c_Bᵀ B⁻¹`, read off the artificial columns.
    fn dual(&self, cost: &[Rational]) -> Vec<Rational> {
        (0..self.m)
            .map(|k| {
                self.basis
                    .iter()
                    .enumerate()
                    .map(|(i, &b)| &cost[b] * &self.rows[i][self.n + k])
                    .sum()
            })
            .collect()
    }
}

pub fn solve(a: &[Vec<Rational>], b: &[Rational], c: &[Rational]) -> LpOutcome {
    let m = a.len();
    let n = c.len();
    assert_eq!(b.len(), m, "one right-hand side per row");
    let flip: Vec<bool> = b.iter().map(Rational::is_negative).collect();
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        assert_eq!(a[i].len(), n, "row {i} has the wrong width");
        let sign = if flip[i] { -Rational::one() } else { Rational::one() };
        let mut row: Vec<Rational> = a[i].iter().map(|v| &sign * v).collect();
        row.extend((0..m).map(|k| if k == i { Rational::one() } else { Rational::zero() }));
        row.push(&sign * &b[i]);
        rows.push(row);
    }
    let mut t = Tableau {
        rows,
        basis: (n..n + m).collect(),
        n,
        m,
    };
    let unflip = |y: Vec<Rational>| -> Vec<Rational> {
        y.into_iter()
            .zip(&flip)
            .map(|(v, &f)| if f { -v } else { v })
            .collect()
    };

    let phase1: Vec<Rational> = (0..n + m)
        .map(|j| if j < n { Rational::zero() } else { Rational::one() })
        .collect();
    assert!(t.optimize(&phase1, n + m), "phase one is bounded below");
    let infeasibility: Rational = (0..m).map(|i| &phase1[t.basis[i]] * t.rhs(i)).sum();
    if infeasibility.is_positive() {
        return LpOutcome::Infeasible {
            farkas: unflip(t.dual(&phase1)),
        };
    }

    // Drive zero-level artificials out where the row allows it; what stays
    // sits on a redundant row and never moves.
    for i in 0..m {
        if t.basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| !t.rows[i][j].is_zero() && !t.basis.contains(&j)) {
                t.pivot(i, j);
            }
        }
    }

    let phase2: Vec<Rational> = c.iter().cloned().chain((0..m).map(|_| Rational::zero())).collect();
    if !t.optimize(&phase2, n) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![Rational::zero(); n];
    for (i, &bcol) in t.basis.iter().enumerate() {
        if bcol < n {
            x[bcol] = t.rhs(i).clone();
        }
    }
    let value = x.iter().zip(c).map(|(xi, ci)| xi * ci).sum();
    LpOutcome::Optimal {
        x,
        value,
        dual: unflip(t.dual(&phase2)),
    }
}
