//! Two-phase revised simplex with column generation.
//!
//! Constraints are `A x = b`, `x >= 0`, `b >= 0`, where the columns of `A`
//! are produced on demand by a [`ColumnOracle`]. The basis inverse is kept
//! dense and updated by elementary row operations, with periodic
//! refactorisation from the stored basis columns.

use crate::error::{Error, Result};

/// A sparse column of `A` with its objective coefficient.
#[derive(Clone, Debug)]
pub(crate) struct Column {
    pub entries: Vec<(usize, f64)>,
    pub cost: f64,
    /// Caller-side identifier, e.g. a support tuple.
    pub key: Vec<u32>,
}

pub(crate) trait ColumnOracle {
    /// Returns a column minimising `phase_cost(col) - duals . col`, where the
    /// phase cost is zero in phase one and `col.cost` in phase two, together
    /// with that reduced cost.
    fn price(&mut self, duals: &[f64], phase_one: bool) -> Result<Option<(Column, f64)>>;
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Var {
    Artificial(usize),
    Column(usize),
}

pub(crate) struct Solution {
    /// Basic columns with their values (zeros included).
    pub columns: Vec<(Column, f64)>,
    pub objective: f64,
    pub pivots: usize,
    /// Artificial mass left after phase one. Phase two only runs when this
    /// is within the feasibility tolerance.
    pub infeasibility: f64,
}

impl Solution {
    pub fn feasible(&self, feas_tol: f64) -> bool {
        self.infeasibility <= feas_tol
    }
}

const REFACTOR_EVERY: usize = 100;
const PIVOT_TOL: f64 = 1e-11;

struct Tableau {
    rows: usize,
    rhs: Vec<f64>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    basis: Vec<Var>,
    columns: Vec<Column>,
}

impl Tableau {
    fn duals(&self, phase_one: bool) -> Vec<f64> {
        let r = self.rows;
        let mut y = vec![0.0; r];
        for (i, v) in self.basis.iter().enumerate() {
            let c = match *v {
                Var::Artificial(_) => {
                    if phase_one {
                        1.0
                    } else {
                        0.0
                    }
                }
                Var::Column(k) => {
                    if phase_one {
                        0.0
                    } else {
                        self.columns[k].cost
                    }
                }
            };
            if c != 0.0 {
                let row = &self.binv[i * r..(i + 1) * r];
                for (yj, bj) in y.iter_mut().zip(row) {
                    *yj += c * bj;
                }
            }
        }
        y
    }

    fn ftran(&self, col: &Column) -> Vec<f64> {
        let r = self.rows;
        (0..r)
            .map(|i| col.entries.iter().map(|&(k, v)| self.binv[i * r + k] * v).sum())
            .collect()
    }

    fn pivot(&mut self, leave: usize, d: &[f64], var: Var) {
        let r = self.rows;
        let theta = self.xb[leave] / d[leave];
        for i in 0..r {
            if i != leave && d[i] != 0.0 {
                self.xb[i] = (self.xb[i] - theta * d[i]).max(0.0);
            }
        }
        self.xb[leave] = theta.max(0.0);
        let inv = 1.0 / d[leave];
        let (before, rest) = self.binv.split_at_mut(leave * r);
        let (pivot_row, after) = rest.split_at_mut(r);
        pivot_row.iter_mut().for_each(|x| *x *= inv);
        for (i, row) in before.chunks_mut(r).chain(after.chunks_mut(r)).enumerate() {
            let di = d[if i < leave { i } else { i + 1 }];
            if di != 0.0 {
                for (x, p) in row.iter_mut().zip(pivot_row.iter()) {
                    *x -= di * p;
                }
            }
        }
        self.basis[leave] = var;
    }

    /// Rebuilds the inverse from scratch with Gauss-Jordan elimination.
    fn refactor(&mut self) -> Result<()> {
        let r = self.rows;
        let mut a = vec![0.0; r * r];
        for (j, v) in self.basis.iter().enumerate() {
            match *v {
                Var::Artificial(k) => a[k * r + j] = 1.0,
                Var::Column(c) => {
                    for &(k, val) in &self.columns[c].entries {
                        a[k * r + j] += val;
                    }
                }
            }
        }
        let mut inv = vec![0.0; r * r];
        for i in 0..r {
            inv[i * r + i] = 1.0;
        }
        for col in 0..r {
            let piv = (col..r)
                .max_by(|&x, &y| a[x * r + col].abs().total_cmp(&a[y * r + col].abs()))
                .unwrap();
            if a[piv * r + col].abs() < 1e-13 {
                return Err(Error::Solver("singular basis during refactorisation".into()));
            }
            if piv != col {
                for k in 0..r {
                    a.swap(piv * r + k, col * r + k);
                    inv.swap(piv * r + k, col * r + k);
                }
            }
            let s = 1.0 / a[col * r + col];
            for k in 0..r {
                a[col * r + k] *= s;
                inv[col * r + k] *= s;
            }
            for i in 0..r {
                let f = a[i * r + col];
                if i != col && f != 0.0 {
                    for k in 0..r {
                        a[i * r + k] -= f * a[col * r + k];
                        inv[i * r + k] -= f * inv[col * r + k];
                    }
                }
            }
        }
        self.binv = inv;
        self.xb = (0..r)
            .map(|i| (0..r).map(|k| self.binv[i * r + k] * self.rhs[k]).sum::<f64>().max(0.0))
            .collect();
        Ok(())
    }

    /// Ratio test. Ties are broken lexicographically on the rows of
    /// `B^{-1} / d_i`, which rules out cycling on degenerate vertices.
    fn leaving_row(&self, d: &[f64], phase_one: bool) -> Option<usize> {
        let mut ratios = Vec::new();
        for i in 0..self.rows {
            let artificial = matches!(self.basis[i], Var::Artificial(_));
            if !phase_one && artificial && d[i].abs() > PIVOT_TOL {
                // a zero-level artificial must leave before it can move
                return Some(i);
            }
            if d[i] > PIVOT_TOL {
                ratios.push((i, self.xb[i] / d[i]));
            }
        }
        let min = ratios.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
        if !min.is_finite() {
            return None;
        }
        let slack = 1e-13 * min.max(1e-3);
        let r = self.rows;
        let row = |i: usize| (0..r).map(move |k| self.binv[i * r + k] / d[i]);
        ratios
            .into_iter()
            .filter(|&(_, q)| q <= min + slack)
            .map(|(i, _)| i)
            .reduce(|a, b| {
                for (x, y) in row(a).zip(row(b)) {
                    if x < y - 1e-12 {
                        return a;
                    }
                    if y < x - 1e-12 {
                        return b;
                    }
                }
                if d[b] > d[a] {
                    b
                } else {
                    a
                }
            })
    }

    fn run_phase(&mut self, oracle: &mut dyn ColumnOracle, phase_one: bool, tol: f64, pivots: &mut usize, cap: usize) -> Result<()> {
        loop {
            let y = self.duals(phase_one);
            let Some((col, rc)) = oracle.price(&y, phase_one)? else { return Ok(()) };
            if rc >= -tol {
                return Ok(());
            }
            let d = self.ftran(&col);
            let Some(leave) = self.leaving_row(&d, phase_one) else {
                return Err(Error::Solver("unbounded direction in a bounded program".into()));
            };
            self.columns.push(col);
            let var = Var::Column(self.columns.len() - 1);
            self.pivot(leave, &d, var);
            *pivots += 1;
            if (*pivots).is_multiple_of(REFACTOR_EVERY) {
                self.refactor()?;
            }
            if *pivots > cap {
                return Err(Error::Solver(format!("simplex exceeded {cap} pivots")));
            }
        }
    }
}

/// Minimises the oracle's column costs subject to `A x = rhs`.
///
/// `tol` is the reduced-cost optimality tolerance; phase one must reach an
/// objective below `feas_tol` for the program to count as feasible. An
/// oracle may return `None` in phase two when there is nothing to optimise.
pub(crate) fn solve(rhs: Vec<f64>, oracle: &mut dyn ColumnOracle, tol: f64, feas_tol: f64) -> Result<Solution> {
    let rows = rhs.len();
    let mut binv = vec![0.0; rows * rows];
    for i in 0..rows {
        binv[i * rows + i] = 1.0;
    }
    let mut t = Tableau {
        rows,
        xb: rhs.clone(),
        rhs,
        binv,
        basis: (0..rows).map(Var::Artificial).collect(),
        columns: Vec::new(),
    };
    let cap = 200 * rows + 10_000;
    let mut pivots = 0;
    t.run_phase(oracle, true, tol, &mut pivots, cap)?;
    t.refactor()?;
    let infeasibility: f64 = t.basis.iter().zip(&t.xb).filter(|(v, _)| matches!(v, Var::Artificial(_))).map(|(_, x)| x).sum::<f64>().max(0.0);
    if infeasibility <= feas_tol {
        t.run_phase(oracle, false, tol, &mut pivots, cap)?;
        t.refactor()?;
    }

    let mut objective = 0.0;
    let mut columns = Vec::new();
    for (v, &x) in t.basis.iter().zip(&t.xb) {
        if let Var::Column(k) = *v {
            objective += t.columns[k].cost * x;
            columns.push((t.columns[k].clone(), x));
        }
    }
    Ok(Solution { columns, objective, pivots, infeasibility })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Explicit columns; prices by scanning all of them.
    struct Fixed(Vec<Column>);

    impl ColumnOracle for Fixed {
        fn price(&mut self, y: &[f64], phase_one: bool) -> Result<Option<(Column, f64)>> {
            Ok(self
                .0
                .iter()
                .map(|c| {
                    let base = if phase_one { 0.0 } else { c.cost };
                    (c.clone(), base - c.entries.iter().map(|&(k, v)| y[k] * v).sum::<f64>())
                })
                .min_by(|a, b| a.1.total_cmp(&b.1)))
        }
    }

    #[test]
    fn small_transport_lp() {
        // 2x2 transport written explicitly: rows a0, a1, b0 (b1 redundant).
        let cost = [1.0, 3.0, 2.0, 0.5];
        let cols = (0..4)
            .map(|e| {
                let (i, j) = (e / 2, e % 2);
                let mut entries = vec![(i, 1.0)];
                if j == 0 {
                    entries.push((2, 1.0));
                }
                Column { entries, cost: cost[e], key: vec![i as u32, j as u32] }
            })
            .collect();
        let sol = solve(vec![0.4, 0.6, 0.5], &mut Fixed(cols), 1e-12, 1e-12).unwrap();
        // optimum: x00 = 0.4, x10 = 0.1, x11 = 0.5
        assert!((sol.objective - (0.4 + 0.2 + 0.25)).abs() < 1e-14);
    }

    #[test]
    fn diet_style_lp() {
        // min x + 2y + 3z  s.t. x + y + z = 1, y + 2z = 0.8
        let cols = vec![
            Column { entries: vec![(0, 1.0)], cost: 1.0, key: vec![0] },
            Column { entries: vec![(0, 1.0), (1, 1.0)], cost: 2.0, key: vec![1] },
            Column { entries: vec![(0, 1.0), (1, 2.0)], cost: 3.0, key: vec![2] },
        ];
        let sol = solve(vec![1.0, 0.8], &mut Fixed(cols), 1e-12, 1e-12).unwrap();
        // z = 0.4, x = 0.6 gives 1.8, y = 0.8, x = 0.2 gives 1.8 too
        assert!((sol.objective - 1.8).abs() < 1e-13);
    }

    #[test]
    fn infeasible_program_detected() {
        let cols = vec![Column { entries: vec![(0, 1.0), (1, 1.0)], cost: 1.0, key: vec![] }];
        let sol = solve(vec![1.0, 0.5], &mut Fixed(cols), 1e-12, 1e-12).unwrap();
        assert!(!sol.feasible(1e-12));
        assert!((sol.infeasibility - 0.5).abs() < 1e-14);
    }
}
