//! Dense two-phase tableau simplex for `min c·x  s.t.  A x = b, x ≥ 0`.
//!
//! Used wherever the problem has no transportation structure: multimarginal
//! transport, the Lipschitz-potential programs behind `d_KR` and the dual
//! form of `d_K`, and coupling-to-polytope distances. Sizes are small, so a
//! dense tableau is fine.
//!
//! Entering variable: most negative reduced cost, falling back to Bland's
//! lowest-index rule after a run of degenerate pivots. Leaving variable:
//! minimum ratio, ties broken by lowest basic index.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Matrix, Result};

const OPT_TOL: f64 = 1e-11;
const PIVOT_TOL: f64 = 1e-11;
const DEGENERATE_STREAK: usize = 30;

#[derive(Debug, Clone)]
pub struct LinearProgram {
    a: Matrix,
    b: Vec<f64>,
    c: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    /// Multipliers `y` of the equality rows: `Aᵀy ≤ c` and `b·y = value` at
    /// optimality.
    pub duals: Vec<f64>,
    pub pivots: usize,
}

impl LinearProgram {
    pub fn new(a: Matrix, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        if b.len() != a.rows() {
            return Err(Error::DimensionMismatch { expected: a.rows(), found: b.len() });
        }
        if c.len() != a.cols() {
            return Err(Error::DimensionMismatch { expected: a.cols(), found: c.len() });
        }
        if a.as_slice().iter().chain(&b).chain(&c).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("linear program data"));
        }
        Ok(LinearProgram { a, b, c })
    }

    pub fn rows(&self) -> usize {
        self.a.rows()
    }

    pub fn cols(&self) -> usize {
        self.a.cols()
    }

    pub fn solve(&self) -> Result<LpSolution> {
        let (m, n) = self.a.shape();
        let width = n + m + 1;
        let rhs = n + m;
        let mut sign = vec![1.0; m];
        let mut t = vec![0.0; m * width];
        for i in 0..m {
            let s = if self.b[i] < 0.0 { -1.0 } else { 1.0 };
            sign[i] = s;
            let row = &mut t[i * width..(i + 1) * width];
            for (j, v) in self.a.row(i).iter().enumerate() {
                row[j] = s * v;
            }
            row[n + i] = 1.0;
            row[rhs] = s * self.b[i];
        }
        let mut tab = Tableau { t, width, m, n, basis: (n..n + m).collect(), reduced: vec![0.0; n + m], pivots: 0 };
        let cap = 100 * (m + n) + 1000;

        // phase 1: minimize the sum of artificials
        let mut phase1 = vec![0.0; n + m];
        phase1[n..].iter_mut().for_each(|x| *x = 1.0);
        tab.price(&phase1);
        tab.run(cap)?;
        let infeas: f64 = (0..m).filter(|&i| tab.basis[i] >= n).map(|i| tab.at(i, rhs)).sum();
        let scale = 1.0 + self.b.iter().map(|x| x.abs()).sum::<f64>();
        if infeas > 1e-9 * scale {
            return Err(Error::Infeasible);
        }
        // drive remaining artificials out of the basis; rows where that is
        // impossible are redundant and keep a zero artificial
        for r in 0..m {
            if tab.basis[r] < n {
                continue;
            }
            let best = (0..n)
                .filter(|&j| tab.at(r, j).abs() > 1e-9)
                .max_by(|&a, &b| tab.at(r, a).abs().total_cmp(&tab.at(r, b).abs()));
            if let Some(j) = best {
                tab.pivot(r, j);
            }
        }

        // phase 2
        let mut cost = self.c.clone();
        cost.extend(std::iter::repeat_n(0.0, m));
        tab.price(&cost);
        tab.run(cap)?;

        let mut x = vec![0.0; n];
        for r in 0..m {
            let j = tab.basis[r];
            if j < n {
                x[j] = tab.at(r, rhs).max(0.0);
            }
        }
        let value = x.iter().zip(&self.c).map(|(a, b)| a * b).sum();
        let duals = (0..m)
            .map(|i| {
                let y: f64 = (0..m).map(|r| cost[tab.basis[r]] * tab.at(r, n + i)).sum();
                sign[i] * y
            })
            .collect();
        Ok(LpSolution { x, value, duals, pivots: tab.pivots })
    }
}

struct Tableau {
    t: Vec<f64>,
    width: usize,
    m: usize,
    n: usize,
    basis: Vec<usize>,
    reduced: Vec<f64>,
    pivots: usize,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.width + j]
    }

    fn price(&mut self, cost: &[f64]) {
        for j in 0..self.n + self.m {
            let mut r = cost[j];
            for i in 0..self.m {
                r -= cost[self.basis[i]] * self.at(i, j);
            }
            self.reduced[j] = r;
        }
    }

    fn run(&mut self, cap: usize) -> Result<()> {
        let rhs = self.n + self.m;
        let mut streak = 0;
        loop {
            let entering = if streak < DEGENERATE_STREAK {
                (0..self.n)
                    .filter(|&j| self.reduced[j] < -OPT_TOL)
                    .min_by(|&a, &b| self.reduced[a].total_cmp(&self.reduced[b]))
            } else {
                (0..self.n).find(|&j| self.reduced[j] < -OPT_TOL)
            };
            let Some(j) = entering else { return Ok(()) };

            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = self.at(i, j);
                if a > PIVOT_TOL {
                    let ratio = self.at(i, rhs).max(0.0) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((k, best)) => {
                            if ratio < best - 1e-14 || (ratio <= best + 1e-14 && self.basis[i] < self.basis[k]) {
                                Some((i, ratio.min(best)))
                            } else {
                                Some((k, best))
                            }
                        }
                    };
                }
            }
            let Some((r, ratio)) = leave else { return Err(Error::Unbounded) };
            streak = if ratio <= 1e-14 { streak + 1 } else { 0 };
            self.pivot(r, j);
            if self.pivots > cap {
                return Err(Error::IterationLimit { pivots: self.pivots });
            }
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let w = self.width;
        let p = self.at(r, j);
        for k in 0..w {
            self.t[r * w + k] /= p;
        }
        self.t[r * w + j] = 1.0;
        let (before, rest) = self.t.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for row in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = row[j];
            if f != 0.0 {
                for (x, y) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * y;
                }
                row[j] = 0.0;
            }
        }
        let f = self.reduced[j];
        if f != 0.0 {
            for k in 0..self.n + self.m {
                self.reduced[k] -= f * prow[k];
            }
            self.reduced[j] = 0.0;
        }
        let rhs = self.n + self.m;
        for i in 0..self.m {
            let v = &mut self.t[i * w + rhs];
            if *v < 0.0 && *v > -1e-13 {
                *v = 0.0;
            }
        }
        self.basis[r] = j;
        self.pivots += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_program() {
        // min -x - y  s.t. x + 2y + s1 = 4, 3x + y + s2 = 6
        let a = Matrix::from_rows(&[vec![1.0, 2.0, 1.0, 0.0], vec![3.0, 1.0, 0.0, 1.0]]).unwrap();
        let lp = LinearProgram::new(a, vec![4.0, 6.0], vec![-1.0, -1.0, 0.0, 0.0]).unwrap();
        let s = lp.solve().unwrap();
        assert!((s.value + 2.8).abs() < 1e-12);
        assert!((s.x[0] - 1.6).abs() < 1e-12 && (s.x[1] - 1.2).abs() < 1e-12);
        let by: f64 = s.duals.iter().zip([4.0, 6.0]).map(|(y, b)| y * b).sum();
        assert!((by - s.value).abs() < 1e-12);
    }

    #[test]
    fn redundant_rows_and_negative_rhs() {
        // x + y = 1, -x - y = -1 (redundant), min x
        let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![-1.0, -1.0]]).unwrap();
        let s = LinearProgram::new(a, vec![1.0, -1.0], vec![1.0, 0.0]).unwrap().solve().unwrap();
        assert!(s.value.abs() < 1e-12);
        assert!((s.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let a = Matrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        let lp = LinearProgram::new(a, vec![1.0, 2.0], vec![0.0]).unwrap();
        assert_eq!(lp.solve().unwrap_err(), Error::Infeasible);
        let a = Matrix::from_rows(&[vec![1.0, -1.0]]).unwrap();
        let lp = LinearProgram::new(a, vec![0.0], vec![0.0, -1.0]).unwrap();
        assert_eq!(lp.solve().unwrap_err(), Error::Unbounded);
    }
}
