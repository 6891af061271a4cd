//! Dense two-phase tableau simplex for small-row linear programs in
//! standard form: maximize `c.x` subject to `A x = b`, `x >= 0`.
//!
//! Pricing is Dantzig's most-negative reduced cost; after a run of
//! degenerate pivots the solver switches to Bland's smallest-index rule,
//! which cannot cycle.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-11;
const DEGENERATE_SWITCH: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    /// Farkas certificate `y` with `y.A_j <= 0` for every column and `y.b > 0`.
    Infeasible { farkas: Vec<f64> },
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct StandardLp {
    pub rows: usize,
    pub cols: usize,
    /// Row-major `rows x cols` constraint matrix.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

struct Tableau {
    m: usize,
    width: usize,
    n_orig: usize,
    t: Vec<f64>,
    cost: Vec<f64>,
    basis: Vec<usize>,
    degenerate_run: usize,
    pivots: usize,
    max_pivots: usize,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.width - 1)
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let w = self.width;
        let p = self.t[r * w + e];
        for j in 0..w {
            self.t[r * w + j] /= p;
        }
        let (before, rest) = self.t.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for row in before.chunks_mut(w).chain(after.chunks_mut(w)) {
            let f = row[e];
            if f != 0.0 {
                for (x, &pv) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * pv;
                }
            }
        }
        let f = self.cost[e];
        if f != 0.0 {
            for (x, &pv) in self.cost.iter_mut().zip(prow.iter()) {
                *x -= f * pv;
            }
        }
        self.basis[r] = e;
        self.pivots += 1;
    }

    /// Minimizes the current cost row over the allowed entering columns.
    /// Returns `false` when unbounded.
    fn run(&mut self, allowed: usize) -> Result<bool> {
        loop {
            if self.pivots > self.max_pivots {
                return Err(Error::SolverFailure("pivot limit exceeded".into()));
            }
            let bland = self.degenerate_run >= DEGENERATE_SWITCH;
            let mut enter = None;
            let mut best = -PIVOT_TOL;
            for j in 0..allowed {
                let d = self.cost[j];
                if d < best || (bland && d < -PIVOT_TOL) {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(e) = enter else { return Ok(true) };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = self.at(i, e);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-14
                                || ((ratio - lr).abs() <= 1e-14 && self.basis[i] < self.basis[li])
                            {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((r, ratio)) = leave else { return Ok(false) };
            if ratio.abs() <= 1e-14 {
                self.degenerate_run += 1;
            } else {
                self.degenerate_run = 0;
            }
            self.pivot(r, e);
        }
    }
}

impl StandardLp {
    pub fn solve(&self) -> Result<LpOutcome> {
        let (m, n) = (self.rows, self.cols);
        if self.a.len() != m * n || self.b.len() != m || self.c.len() != n {
            return Err(Error::InvalidArgument("LP dimensions are inconsistent".into()));
        }
        let width = n + m + 1;
        let mut t = vec![0.0; m * width];
        let mut sign = vec![1.0; m];
        for i in 0..m {
            if self.b[i] < 0.0 {
                sign[i] = -1.0;
            }
            for j in 0..n {
                t[i * width + j] = sign[i] * self.a[i * n + j];
            }
            t[i * width + n + i] = 1.0;
            t[i * width + width - 1] = sign[i] * self.b[i];
        }
        // phase-1 reduced costs: minimize the sum of artificials
        let mut cost = vec![0.0; width];
        for i in 0..m {
            for j in 0..n {
                cost[j] -= t[i * width + j];
            }
            cost[width - 1] -= t[i * width + width - 1];
        }
        let mut tab = Tableau {
            m,
            width,
            n_orig: n,
            t,
            cost,
            basis: (n..n + m).collect(),
            degenerate_run: 0,
            pivots: 0,
            max_pivots: 50 * (m + n) + 1000,
        };
        tab.run(n)?;
        let infeasibility = -tab.cost[width - 1];
        let scale = 1.0 + self.b.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if infeasibility > 1e-9 * scale {
            // duals of the artificial columns: pi_k = 1 - d_k
            let farkas = (0..m).map(|k| sign[k] * (1.0 - tab.cost[n + k])).collect();
            return Ok(LpOutcome::Infeasible { farkas });
        }
        // drive zero-level artificials out where possible
        for r in 0..m {
            if tab.basis[r] >= n {
                if let Some(j) = (0..n).find(|&j| tab.at(r, j).abs() > 1e-9) {
                    tab.pivot(r, j);
                }
            }
        }
        // phase 2: minimize -c.x
        let mut cost = vec![0.0; width];
        for j in 0..n {
            cost[j] = -self.c[j];
        }
        for j in n..n + m {
            cost[j] = 0.0;
        }
        for r in 0..m {
            let bj = tab.basis[r];
            let cb = if bj < n { -self.c[bj] } else { 0.0 };
            if cb != 0.0 {
                for j in 0..width {
                    cost[j] -= cb * tab.at(r, j);
                }
            }
        }
        tab.cost = cost;
        tab.degenerate_run = 0;
        if !tab.run(tab.n_orig)? {
            return Ok(LpOutcome::Unbounded);
        }
        let mut x = vec![0.0; n];
        for r in 0..m {
            if tab.basis[r] < n {
                x[tab.basis[r]] = tab.rhs(r).max(0.0);
            }
        }
        let objective = x.iter().zip(&self.c).map(|(a, b)| a * b).sum();
        Ok(LpOutcome::Optimal { x, objective })
    }
}

/// Maximizes `c.x` over `{x : G x <= h}` with free `x`, assuming `h >= 0`
/// (so the origin is feasible). Returns `None` when unbounded.
pub fn maximize_over_halfspaces(normals: &[Vec<f64>], offsets: &[f64], c: &[f64]) -> Result<Option<Vec<f64>>> {
    let n = c.len();
    let m = normals.len();
    let cols = 2 * n + m;
    let mut a = vec![0.0; m * cols];
    for (i, g) in normals.iter().enumerate() {
        for k in 0..n {
            a[i * cols + k] = g[k];
            a[i * cols + n + k] = -g[k];
        }
        a[i * cols + 2 * n + i] = 1.0;
    }
    let mut cc = vec![0.0; cols];
    for k in 0..n {
        cc[k] = c[k];
        cc[n + k] = -c[k];
    }
    let lp = StandardLp { rows: m, cols, a, b: offsets.to_vec(), c: cc };
    match lp.solve()? {
        LpOutcome::Optimal { x, .. } => Ok(Some((0..n).map(|k| x[k] - x[n + k]).collect())),
        LpOutcome::Unbounded => Ok(None),
        LpOutcome::Infeasible { .. } => Err(Error::DegenerateBody("half-space system is infeasible".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_maximization() {
        // max x + y s.t. x + 2y + s1 = 4, 3x + y + s2 = 6
        let lp = StandardLp {
            rows: 2,
            cols: 4,
            a: vec![1.0, 2.0, 1.0, 0.0, 3.0, 1.0, 0.0, 1.0],
            b: vec![4.0, 6.0],
            c: vec![1.0, 1.0, 0.0, 0.0],
        };
        match lp.solve().unwrap() {
            LpOutcome::Optimal { objective, x } => {
                assert!((objective - 2.8).abs() < 1e-12);
                assert!((x[0] - 1.6).abs() < 1e-12 && (x[1] - 1.2).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_has_certificate() {
        // x1 + x2 = -1 with x >= 0
        let lp = StandardLp { rows: 1, cols: 2, a: vec![1.0, 1.0], b: vec![-1.0], c: vec![0.0, 0.0] };
        match lp.solve().unwrap() {
            LpOutcome::Infeasible { farkas } => {
                assert!(farkas[0] * 1.0 <= 1e-12);
                assert!(farkas[0] * -1.0 > 0.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unbounded_detected() {
        let lp = StandardLp { rows: 1, cols: 2, a: vec![1.0, -1.0], b: vec![1.0], c: vec![1.0, 0.0] };
        assert_eq!(lp.solve().unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn box_extent_from_halfspaces() {
        let normals = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0], vec![1.0, 1.0]];
        let offsets = vec![2.0, 1.0, 3.0, 1.0, 4.0];
        let x = maximize_over_halfspaces(&normals, &offsets, &[1.0, 0.0]).unwrap().unwrap();
        assert!((x[0] - 2.0).abs() < 1e-12);
        let y = maximize_over_halfspaces(&normals, &offsets, &[1.0, 1.0]).unwrap().unwrap();
        assert!((y[0] + y[1] - 4.0).abs() < 1e-12);
        assert!(maximize_over_halfspaces(&normals[..2], &offsets[..2], &[0.0, 1.0]).unwrap().is_none());
    }
}
