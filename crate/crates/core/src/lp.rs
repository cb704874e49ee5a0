//! Dense two-phase simplex over exact rationals.
//!
//! Problems are in standard form: minimize `c·x` subject to `A x = b`,
//! `x ≥ 0`. Pivoting follows Bland's least-index rule, so the method
//! terminates on degenerate problems. Tableaux here are small (a few hundred
//! columns) and exactness matters more than speed.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::exact_num::ExactRational;

#[derive(Debug, Clone)]
pub struct LinearProgram {
    /// Row-major constraint matrix, `rows × cols`.
    pub a: Vec<Vec<ExactRational>>,
    pub b: Vec<ExactRational>,
    pub c: Vec<ExactRational>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal {
        x: Vec<ExactRational>,
        objective: ExactRational,
        /// Multipliers `y` with `c - Aᵀy ≥ 0` and `b·y = objective`.
        duals: Vec<ExactRational>,
    },
    /// `y` with `Aᵀy ≤ 0` and `b·y > 0`, which rules out every `x ≥ 0`.
    Infeasible { farkas: Vec<ExactRational> },
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<BigRational>>,
    rhs: Vec<BigRational>,
    basis: Vec<usize>,
    /// Columns `n..n+m` are the artificials.
    n: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, col: usize) {
        let inv = self.rows[r][col].recip();
        for v in self.rows[r].iter_mut() {
            if !v.is_zero() {
                *v *= &inv;
            }
        }
        self.rhs[r] *= &inv;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let factor = self.rows[i][col].clone();
            if factor.is_zero() {
                continue;
            }
            for (v, p) in self.rows[i].iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *v -= &factor * p;
                }
            }
            self.rhs[i] -= &factor * &pivot_rhs;
        }
        self.basis[r] = col;
    }

    fn reduced_costs(&self, cost: &[BigRational], allowed: usize) -> Vec<BigRational> {
        let mut d: Vec<BigRational> = cost[..allowed].to_vec();
        for (i, &bv) in self.basis.iter().enumerate() {
            let cb = &cost[bv];
            if cb.is_zero() {
                continue;
            }
            for (j, dj) in d.iter_mut().enumerate() {
                let t = &self.rows[i][j];
                if !t.is_zero() {
                    *dj -= cb * t;
                }
            }
        }
        d
    }

    /// Runs Bland pivots on columns `0..allowed`. Returns false if unbounded.
    fn optimize(&mut self, cost: &[BigRational], allowed: usize) -> bool {
        loop {
            let d = self.reduced_costs(cost, allowed);
            let Some(enter) = (0..allowed).find(|&j| d[j].is_negative()) else {
                return true;
            };
            let mut leave: Option<(usize, BigRational)> = None;
            for i in 0..self.rows.len() {
                let t = &self.rows[i][enter];
                if !t.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / t;
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => {
                        ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, enter),
                None => return false,
            }
        }
    }

    /// `y = c_B B⁻¹`, read from the artificial columns.
    fn multipliers(&self, cost: &[BigRational]) -> Vec<BigRational> {
        let m = self.rows.len();
        (0..m)
            .map(|k| {
                let mut y = BigRational::zero();
                for (i, &bv) in self.basis.iter().enumerate() {
                    let t = &self.rows[i][self.n + k];
                    if !t.is_zero() && !cost[bv].is_zero() {
                        y += &cost[bv] * t;
                    }
                }
                y
            })
            .collect()
    }
}

impl LinearProgram {
    pub fn rows(&self) -> usize {
        self.a.len()
    }

    pub fn cols(&self) -> usize {
        self.c.len()
    }

    pub fn solve(&self) -> LpOutcome {
        let m = self.rows();
        let n = self.cols();
        assert_eq!(self.b.len(), m, "rhs length");
        assert!(self.a.iter().all(|r| r.len() == n), "ragged constraint matrix");

        // Flip rows so the rhs is nonnegative; artificials start as the basis.
        let mut signs = Vec::with_capacity(m);
        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        for (i, row) in self.a.iter().enumerate() {
            let flip = self.b[i].is_negative();
            signs.push(flip);
            let mut r: Vec<BigRational> = row
                .iter()
                .map(|v| {
                    let v = v.as_big_rational().clone();
                    if flip {
                        -v
                    } else {
                        v
                    }
                })
                .collect();
            r.extend((0..m).map(|k| if k == i { BigRational::one() } else { BigRational::zero() }));
            rows.push(r);
            let b = self.b[i].as_big_rational().clone();
            rhs.push(if flip { -b } else { b });
        }
        let mut t = Tableau {
            rows,
            rhs,
            basis: (n..n + m).collect(),
            n,
        };

        let mut phase1_cost = vec![BigRational::zero(); n + m];
        for c in &mut phase1_cost[n..] {
            *c = BigRational::one();
        }
        // Phase one is bounded below by zero.
        t.optimize(&phase1_cost, n);
        let infeasibility: BigRational = t
            .basis
            .iter()
            .zip(&t.rhs)
            .filter(|(&bv, _)| bv >= n)
            .map(|(_, v)| v.clone())
            .sum();
        let unflip = |y: Vec<BigRational>| -> Vec<ExactRational> {
            y.into_iter()
                .zip(&signs)
                .map(|(v, &flip)| ExactRational::from(if flip { -v } else { v }))
                .collect()
        };
        if infeasibility.is_positive() {
            // Phase-one duals y satisfy Aᵀy ≤ 0 and b·y = infeasibility > 0.
            let y = t.multipliers(&phase1_cost);
            return LpOutcome::Infeasible { farkas: unflip(y) };
        }

        // Drive zero-level artificials out where possible; rows where that
        // fails are redundant and stay inert.
        for r in 0..m {
            if t.basis[r] >= n {
                if let Some(col) = (0..n).find(|&j| !t.rows[r][j].is_zero()) {
                    t.pivot(r, col);
                }
            }
        }

        let mut cost: Vec<BigRational> =
            self.c.iter().map(|v| v.as_big_rational().clone()).collect();
        cost.extend((0..m).map(|_| BigRational::zero()));
        if !t.optimize(&cost, n) {
            return LpOutcome::Unbounded;
        }
        let mut x = vec![ExactRational::zero(); n];
        for (i, &bv) in t.basis.iter().enumerate() {
            if bv < n {
                x[bv] = ExactRational::from(t.rhs[i].clone());
            }
        }
        let objective: ExactRational = self.c.iter().zip(&x).map(|(c, x)| c * x).sum();
        let duals = unflip(t.multipliers(&cost));
        LpOutcome::Optimal {
            x,
            objective,
            duals,
        }
    }
}
