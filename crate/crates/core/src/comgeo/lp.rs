//! Dense two-phase simplex for `min cᵀx` subject to `Ax = b`, `x ≥ 0`.
//!
//! Instances here are tiny (a few hundred columns at most), so the tableau is
//! stored in full and Bland's rule is used throughout. Dual values are
//! returned with the optimum so callers can turn them into separating
//! hyperplanes.

use crate::error::{shape, Error, Result};

/// Smallest magnitude accepted as a pivot element.
pub const PIVOT_TOL: f64 = 1e-11;
/// Smallest constraint coefficient allowed to leave the basis; tiny pivots
/// let the explicit tableau drift away from `Ax = b`.
const RATIO_PIVOT_TOL: f64 = 1e-9;
const RHS_SNAP: f64 = 1e-12;
/// Phase-one objective above which the system is declared infeasible.
const FEASIBILITY_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 100_000;

/// Standard-form linear program.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    /// Row-major constraint matrix, `rows x cols`.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Optimal dual vector `y` with `Aᵀy ≤ c` and `bᵀy` equal to the objective.
    pub duals: Vec<f64>,
}

#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

struct Tableau {
    /// `m` constraint rows followed by the objective row; the last column is the RHS.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    m: usize,
    width: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.t[i][self.width]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.t[row][col];
        for v in self.t[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[row].clone();
        for (i, r) in self.t.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let f = r[col];
            if f != 0.0 {
                for (v, pv) in r.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                r[col] = 0.0;
            }
        }
        self.basis[row] = col;
        // Round-off on degenerate rows would otherwise produce negative ratios
        // and break the anti-cycling guarantee.
        for r in &mut self.t[..self.m] {
            if r[self.width] < 0.0 && r[self.width] > -RHS_SNAP {
                r[self.width] = 0.0;
            }
        }
    }

    /// Loads the reduced-cost row for `cost` given the current basis.
    fn set_objective(&mut self, cost: &[f64]) {
        let mut row: Vec<f64> = cost.to_vec();
        row.push(0.0);
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for (v, tv) in row.iter_mut().zip(&self.t[i]) {
                    *v -= cb * tv;
                }
            }
        }
        self.t[self.m] = row;
    }

    /// Runs simplex iterations with Bland's rule over columns `< allowed`.
    fn optimize(&mut self, allowed: usize) -> Result<bool> {
        for _ in 0..MAX_PIVOTS {
            let obj = &self.t[self.m];
            let Some(col) = (0..allowed).find(|&j| obj[j] < -PIVOT_TOL) else {
                return Ok(true);
            };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = self.t[i][col];
                if a > RATIO_PIVOT_TOL {
                    let ratio = self.rhs(i).max(0.0) / a;
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br || (ratio == br && self.basis[i] < self.basis[bi]) {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            match best {
                None => return Ok(false),
                Some((row, _)) => self.pivot(row, col),
            }
        }
        Err(Error::Numerical(format!("simplex exceeded {MAX_PIVOTS} pivots")))
    }
}

impl LinearProgram {
    pub fn new(a: Vec<Vec<f64>>, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(shape(format!(
                "{} constraint rows but {} right-hand sides",
                a.len(),
                b.len()
            )));
        }
        if let Some(r) = a.iter().find(|r| r.len() != c.len()) {
            return Err(shape(format!(
                "constraint row has {} entries, cost has {}",
                r.len(),
                c.len()
            )));
        }
        Ok(LinearProgram { a, b, c })
    }

    pub fn solve(&self) -> Result<LpOutcome> {
        let m = self.a.len();
        let n = self.c.len();
        let width = n + m;
        // Rows with negative right-hand side are negated so artificials start feasible.
        let signs: Vec<f64> = self.b.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
        let mut t = Vec::with_capacity(m + 1);
        for i in 0..m {
            let mut row = vec![0.0; width + 1];
            for j in 0..n {
                row[j] = signs[i] * self.a[i][j];
            }
            row[n + i] = 1.0;
            row[width] = signs[i] * self.b[i];
            t.push(row);
        }
        t.push(vec![0.0; width + 1]);
        let mut tab = Tableau {
            t,
            basis: (n..n + m).collect(),
            m,
            width,
        };

        let mut phase_one_cost = vec![0.0; width];
        for v in &mut phase_one_cost[n..] {
            *v = 1.0;
        }
        tab.set_objective(&phase_one_cost);
        tab.optimize(width)?;
        let infeasibility: f64 = (0..m).filter(|&i| tab.basis[i] >= n).map(|i| tab.rhs(i)).sum();
        if infeasibility > FEASIBILITY_TOL * (1.0 + self.b.iter().map(|v| v.abs()).fold(0.0, f64::max)) {
            return Ok(LpOutcome::Infeasible);
        }

        // Drive zero-level artificials out of the basis; rows where that is
        // impossible are linearly dependent and stay inert.
        for i in 0..m {
            if tab.basis[i] >= n {
                let best = (0..n).max_by(|&j, &k| tab.t[i][j].abs().total_cmp(&tab.t[i][k].abs()));
                if let Some(j) = best.filter(|&j| tab.t[i][j].abs() > 1e-9) {
                    tab.pivot(i, j);
                }
            }
        }

        let mut cost = self.c.clone();
        cost.extend(std::iter::repeat_n(0.0, m));
        tab.set_objective(&cost);
        if !tab.optimize(n)? {
            return Ok(LpOutcome::Unbounded);
        }

        let mut x = vec![0.0; n];
        for i in 0..m {
            if tab.basis[i] < n {
                x[tab.basis[i]] = tab.rhs(i).max(0.0);
            }
        }
        let scale = 1.0 + self.b.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let drift = self
            .a
            .iter()
            .zip(&self.b)
            .map(|(row, b)| (row.iter().zip(&x).map(|(a, x)| a * x).sum::<f64>() - b).abs())
            .fold(0.0, f64::max);
        if drift > 1e-7 * scale {
            return Err(Error::Numerical(format!(
                "simplex lost primal feasibility (residual {drift:e})"
            )));
        }
        let objective = self.c.iter().zip(&x).map(|(c, x)| c * x).sum();
        // y' = c_Bᵀ B⁻¹ where B⁻¹ occupies the artificial columns; undo the row negations.
        let duals = (0..m)
            .map(|r| {
                let y: f64 = (0..m).map(|i| cost[tab.basis[i]] * tab.t[i][n + r]).sum();
                y * signs[r]
            })
            .collect();
        Ok(LpOutcome::Optimal(LpSolution { x, objective, duals }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn optimal(lp: &LinearProgram) -> LpSolution {
        match lp.solve().unwrap() {
            LpOutcome::Optimal(s) => s,
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn small_textbook_problem() {
        // min -x - y  s.t. x + 2y + s1 = 4, 3x + y + s2 = 6
        let lp = LinearProgram::new(
            vec![vec![1.0, 2.0, 1.0, 0.0], vec![3.0, 1.0, 0.0, 1.0]],
            vec![4.0, 6.0],
            vec![-1.0, -1.0, 0.0, 0.0],
        )
        .unwrap();
        let s = optimal(&lp);
        assert!((s.x[0] - 1.6).abs() < 1e-12 && (s.x[1] - 1.2).abs() < 1e-12);
        assert!((s.objective + 2.8).abs() < 1e-12);
        // Strong duality.
        let dual_obj: f64 = s.duals.iter().zip(&lp.b).map(|(y, b)| y * b).sum();
        assert!((dual_obj - s.objective).abs() < 1e-12);
    }

    #[test]
    fn negative_rhs_and_duals() {
        // min x0 + 2 x1  s.t. -x0 - x1 = -3
        let lp = LinearProgram::new(vec![vec![-1.0, -1.0]], vec![-3.0], vec![1.0, 2.0]).unwrap();
        let s = optimal(&lp);
        assert!((s.x[0] - 3.0).abs() < 1e-12);
        assert!((s.duals[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let lp = LinearProgram::new(vec![vec![1.0, 1.0]], vec![-1.0], vec![0.0, 0.0]).unwrap();
        assert!(matches!(lp.solve().unwrap(), LpOutcome::Infeasible));
        let lp = LinearProgram::new(vec![vec![1.0, -1.0]], vec![1.0], vec![0.0, -1.0]).unwrap();
        assert!(matches!(lp.solve().unwrap(), LpOutcome::Unbounded));
    }

    #[test]
    fn redundant_rows_are_tolerated() {
        let lp = LinearProgram::new(
            vec![vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 0.0], vec![0.0, 1.0, 1.0]],
            vec![1.0, 2.0, 1.0],
            vec![1.0, 0.0, 0.0],
        )
        .unwrap();
        let s = optimal(&lp);
        assert!(s.objective.abs() < 1e-12);
        assert!((s.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shape_checks() {
        assert!(LinearProgram::new(vec![vec![1.0]], vec![1.0, 2.0], vec![1.0]).is_err());
        assert!(LinearProgram::new(vec![vec![1.0, 2.0]], vec![1.0], vec![1.0]).is_err());
    }
}
