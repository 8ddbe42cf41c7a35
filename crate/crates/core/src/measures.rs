//! Finitely supported probability measures, cost tabulation and couplings.
//!
//! A [`DiscreteMeasure`] lives on a finite set of points of `R^d`. Duplicate
//! atoms (sup-norm distance below [`MERGE_TOL`]) are merged on construction,
//! weights below [`DROP_TOL`] are dropped and the rest renormalized, so two
//! measures built from the same atoms compare equal field by field.
//!
//! A [`Coupling`] is a nonnegative `m × n` matrix whose row and column sums
//! reproduce two measures within [`MARGINAL_TOL`]; [`MultiCoupling`] is the
//! `k`-marginal version stored as a flat row-major array.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;

use crate::math::{powf, sqrt};
use crate::{Error, Matrix, Result};

/// Atoms closer than this in sup-norm are the same atom.
pub const MERGE_TOL: f64 = 1e-12;
/// Normalized weights below this are removed.
pub const DROP_TOL: f64 = 1e-14;
/// Allowed deviation of coupling marginals from the prescribed weights.
pub const MARGINAL_TOL: f64 = 1e-9;

/// A point of `R^d` with finite coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidInput("point must have at least one coordinate".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("point coordinates"));
        }
        Ok(Point(coords))
    }

    /// One-dimensional point. Panics on a non-finite coordinate.
    pub fn scalar(x: f64) -> Self {
        assert!(x.is_finite(), "non-finite coordinate");
        Point(vec![x])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn euclidean(&self, other: &Point) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        sqrt(self.0.iter().zip(&other.0).map(|(a, b)| (a - b) * (a - b)).sum())
    }

    pub fn sup_distance(&self, other: &Point) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn is_close(&self, other: &Point) -> bool {
        self.dim() == other.dim() && self.sup_distance(other) < MERGE_TOL
    }

    /// Concatenation `(x, y)` used for atoms of product spaces.
    pub fn concat(&self, other: &Point) -> Point {
        let mut c = self.0.clone();
        c.extend_from_slice(&other.0);
        Point(c)
    }

    pub fn translated(&self, shift: &[f64]) -> Result<Point> {
        if shift.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: shift.len() });
        }
        Point::new(self.0.iter().zip(shift).map(|(a, b)| a + b).collect())
    }
}

/// Probability measure with finitely many atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    points: Vec<Point>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Validates, merges duplicate atoms and normalizes.
    ///
    /// Weights in `[-1e-14, 0)` are treated as zero; anything more negative is
    /// rejected. Merged atoms keep the position of their first occurrence.
    pub fn new(points: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: points.len(), found: weights.len() });
        }
        if points.is_empty() {
            return Err(Error::ZeroMass);
        }
        let dim = points[0].dim();
        if let Some(p) = points.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: p.dim() });
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("weights"));
        }
        if let Some(w) = weights.iter().find(|&&w| w < -1e-14) {
            return Err(Error::InvalidInput(format!("negative weight {w}")));
        }

        let mut merged_pts: Vec<Point> = Vec::with_capacity(points.len());
        let mut merged_w: Vec<f64> = Vec::with_capacity(points.len());
        for (p, w) in points.into_iter().zip(weights) {
            let w = w.max(0.0);
            match merged_pts.iter().position(|q| q.is_close(&p)) {
                Some(k) => merged_w[k] += w,
                None => {
                    merged_pts.push(p);
                    merged_w.push(w);
                }
            }
        }

        let total: f64 = merged_w.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroMass);
        }
        // already normalized input is kept bit for bit
        let settled = (total - 1.0).abs() <= settle_tol(merged_w.len());
        let scale = if settled { 1.0 } else { total };
        let (mut pts, mut ws) = (Vec::new(), Vec::new());
        for (p, w) in merged_pts.into_iter().zip(merged_w) {
            let w = w / scale;
            if w >= DROP_TOL {
                pts.push(p);
                ws.push(w);
            }
        }
        let total: f64 = ws.iter().sum();
        if (total - 1.0).abs() > settle_tol(ws.len()) {
            ws.iter_mut().for_each(|w| *w /= total);
            normalize_exactly(&mut ws);
        }
        Ok(DiscreteMeasure { points: pts, weights: ws })
    }

    pub fn dirac(p: Point) -> Self {
        DiscreteMeasure { points: vec![p], weights: vec![1.0] }
    }

    /// Equal weights on the given points (after merging).
    pub fn uniform(points: Vec<Point>) -> Result<Self> {
        let w = vec![1.0; points.len()];
        Self::new(points, w)
    }

    /// Midpoint discretization of the uniform distribution on `[a, b]`.
    pub fn uniform_grid(n: usize, a: f64, b: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("grid needs at least one atom".into()));
        }
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::NonFinite("grid interval"));
        }
        if a >= b {
            return Err(Error::InvalidInput(format!("empty interval [{a}, {b}]")));
        }
        let h = (b - a) / n as f64;
        let points = (0..n).map(|i| Point(vec![a + (i as f64 + 0.5) * h])).collect();
        Self::new(points, vec![1.0; n])
    }

    /// Random measure: `n` atoms uniform in `[0,1)^dim`, weights uniform in
    /// `[0.1, 1)` then normalized.
    ///
    /// The generator is PCG-64 (`rand_pcg::Pcg64`, XSL-RR 128/64) seeded
    /// with `seed_from_u64(seed)`; equal seeds give bit-identical measures.
    pub fn random(n: usize, dim: usize, seed: u64) -> Result<Self> {
        let mut rng = Pcg64::seed_from_u64(seed);
        Self::random_with(&mut rng, n, dim)
    }

    pub fn random_with<R: Rng + ?Sized>(rng: &mut R, n: usize, dim: usize) -> Result<Self> {
        if n == 0 || dim == 0 {
            return Err(Error::InvalidInput("random measure needs n >= 1 and dim >= 1".into()));
        }
        let mut points = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for _ in 0..n {
            points.push(Point((0..dim).map(|_| rng.gen::<f64>()).collect()));
            weights.push(rng.gen_range(0.1..1.0));
        }
        Self::new(points, weights)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn index_of(&self, p: &Point) -> Option<usize> {
        self.points.iter().position(|q| q.is_close(p))
    }

    /// Same atoms in the same order.
    pub fn same_support(&self, other: &DiscreteMeasure) -> bool {
        self.len() == other.len() && self.points.iter().zip(&other.points).all(|(a, b)| a.is_close(b))
    }

    /// Same atoms, and weights within `tol`.
    pub fn approx_eq(&self, other: &DiscreteMeasure, tol: f64) -> bool {
        self.same_support(other) && self.weights.iter().zip(&other.weights).all(|(a, b)| (a - b).abs() <= tol)
    }

    /// Every atom shifted by `shift`.
    pub fn translated(&self, shift: &[f64]) -> Result<Self> {
        let points = self.points.iter().map(|p| p.translated(shift)).collect::<Result<Vec<_>>>()?;
        Self::new(points, self.weights.clone())
    }

    /// Same atoms with new weights.
    pub fn reweighted(&self, weights: Vec<f64>) -> Result<Self> {
        Self::new(self.points.clone(), weights)
    }
}

fn settle_tol(n: usize) -> f64 {
    4.0 * (n.max(1) as f64) * f64::EPSILON
}

// Nudge the largest weight so that the left-to-right sum is exactly 1.0 when
// possible.
fn normalize_exactly(ws: &mut [f64]) {
    for _ in 0..4 {
        let s: f64 = ws.iter().sum();
        if s == 1.0 {
            return;
        }
        let k = ws.iter().enumerate().fold(0, |best, (i, w)| if *w > ws[best] { i } else { best });
        ws[k] += 1.0 - s;
    }
}

/// Map applied inside the squared-shift cost `t·|y − f(x)|²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftMap {
    Identity,
    /// `x ↦ 1 − x` coordinatewise.
    Reflection,
}

impl ShiftMap {
    pub fn apply(self, x: &Point) -> Point {
        match self {
            ShiftMap::Identity => x.clone(),
            ShiftMap::Reflection => Point(x.coords().iter().map(|c| 1.0 - c).collect()),
        }
    }
}

/// A cost function `h(x, y) ≥ 0`, either tabulated or built in.
#[derive(Debug, Clone, PartialEq)]
pub enum CostSpec {
    /// Explicit `m × n` table.
    Matrix(Matrix),
    /// `|x − y|`.
    Euclidean,
    /// `min(|x − y|, 1)`.
    Truncated,
    /// `|x − y|^p`, `p ≥ 1`.
    Power(f64),
    /// `scale · |y − f(x)|²`.
    SquaredShift { scale: f64, map: ShiftMap },
    /// One-dimensional two-branch family:
    /// `min(|x−y|, |x+y−1| + t)` for `t ≥ 0`,
    /// `min(|x−y| − t, |x+y−1|)` for `t < 0`.
    DiagonalSwitch { t: f64 },
}

impl CostSpec {
    /// Evaluates a builtin cost at one pair. `None` for `Matrix`.
    pub fn eval_pair(&self, x: &Point, y: &Point) -> Option<f64> {
        let v = match self {
            CostSpec::Matrix(_) => return None,
            CostSpec::Euclidean => x.euclidean(y),
            CostSpec::Truncated => x.euclidean(y).min(1.0),
            CostSpec::Power(p) => powf(x.euclidean(y), *p),
            CostSpec::SquaredShift { scale, map } => {
                let fx = map.apply(x);
                let d = fx.euclidean(y);
                scale * d * d
            }
            CostSpec::DiagonalSwitch { t } => {
                let (a, b) = (x.coords()[0], y.coords()[0]);
                let diag = (a - b).abs();
                let anti = (a + b - 1.0).abs();
                if *t >= 0.0 {
                    diag.min(anti + t)
                } else {
                    (diag - t).min(anti)
                }
            }
        };
        Some(v)
    }

    /// Tabulates `h(x_i, y_j)` over the supports of `mu` and `nu`.
    pub fn eval(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<Matrix> {
        let (m, n) = (mu.len(), nu.len());
        let table = match self {
            CostSpec::Matrix(c) => {
                if c.shape() != (m, n) {
                    return Err(Error::InvalidInput(format!(
                        "cost matrix is {}x{}, supports are {m}x{n}",
                        c.rows(),
                        c.cols()
                    )));
                }
                c.clone()
            }
            CostSpec::Power(p) if !(*p >= 1.0) => {
                return Err(Error::InvalidInput(format!("power cost needs p >= 1, got {p}")));
            }
            CostSpec::SquaredShift { scale, .. } if !scale.is_finite() || *scale < 0.0 => {
                return Err(Error::InvalidInput(format!("squared-shift scale must be >= 0, got {scale}")));
            }
            builtin => {
                if mu.dim() != nu.dim() {
                    return Err(Error::DimensionMismatch { expected: mu.dim(), found: nu.dim() });
                }
                if matches!(builtin, CostSpec::DiagonalSwitch { .. }) && mu.dim() != 1 {
                    return Err(Error::DimensionMismatch { expected: 1, found: mu.dim() });
                }
                Matrix::from_fn(m, n, |i, j| builtin.eval_pair(&mu.points()[i], &nu.points()[j]).unwrap())
            }
        };
        if table.as_slice().iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("cost"));
        }
        if let Some(c) = table.as_slice().iter().find(|&&c| c < 0.0) {
            return Err(Error::InvalidInput(format!("negative cost {c}")));
        }
        Ok(table)
    }
}

/// `σ ∈ Π(μ, ν)`: nonnegative mass matrix with prescribed marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    row: DiscreteMeasure,
    col: DiscreteMeasure,
    mass: Matrix,
}

impl Coupling {
    /// Checks shape, sign and both marginals (within [`MARGINAL_TOL`]).
    /// Entries in `[-1e-12, 0)` are clamped to zero.
    pub fn new(row: DiscreteMeasure, col: DiscreteMeasure, mut mass: Matrix) -> Result<Self> {
        if mass.shape() != (row.len(), col.len()) {
            return Err(Error::InvalidInput(format!(
                "mass is {}x{}, marginals have {} and {} atoms",
                mass.rows(),
                mass.cols(),
                row.len(),
                col.len()
            )));
        }
        for i in 0..mass.rows() {
            for j in 0..mass.cols() {
                let x = mass[(i, j)];
                if !x.is_finite() {
                    return Err(Error::NonFinite("coupling mass"));
                }
                if x < -1e-12 {
                    return Err(Error::InvalidInput(format!("negative mass {x} at ({i}, {j})")));
                }
                if x < 0.0 {
                    mass[(i, j)] = 0.0;
                }
            }
        }
        let c = Coupling { row, col, mass };
        let (er, ec) = c.marginal_errors();
        if er > MARGINAL_TOL || ec > MARGINAL_TOL {
            return Err(Error::MarginalMismatch(format!("row error {er:e}, column error {ec:e}")));
        }
        Ok(c)
    }

    /// Independent coupling `μ ⊗ ν`.
    pub fn product(row: &DiscreteMeasure, col: &DiscreteMeasure) -> Self {
        let mass = Matrix::from_fn(row.len(), col.len(), |i, j| row.weights()[i] * col.weights()[j]);
        Coupling { row: row.clone(), col: col.clone(), mass }
    }

    /// Coupling of `μ` with itself concentrated on the diagonal.
    pub fn diagonal(mu: &DiscreteMeasure) -> Self {
        let n = mu.len();
        let mass = Matrix::from_fn(n, n, |i, j| if i == j { mu.weights()[i] } else { 0.0 });
        Coupling { row: mu.clone(), col: mu.clone(), mass }
    }

    pub fn row_measure(&self) -> &DiscreteMeasure {
        &self.row
    }

    pub fn col_measure(&self) -> &DiscreteMeasure {
        &self.col
    }

    pub fn mass(&self) -> &Matrix {
        &self.mass
    }

    pub fn shape(&self) -> (usize, usize) {
        self.mass.shape()
    }

    /// Max absolute deviation of row sums and of column sums from the weights.
    pub fn marginal_errors(&self) -> (f64, f64) {
        let er = self.mass.row_sums().iter().zip(self.row.weights()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let ec = self.mass.col_sums().iter().zip(self.col.weights()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        (er, ec)
    }

    pub fn transpose(&self) -> Coupling {
        Coupling { row: self.col.clone(), col: self.row.clone(), mass: self.mass.transpose() }
    }

    /// `∫ c dσ` for a cost table over the two supports.
    pub fn cost(&self, c: &Matrix) -> f64 {
        self.mass.dot(c)
    }

    /// `(1 − λ)·self + λ·other`; both must couple the same measures.
    pub fn mix(&self, other: &Coupling, lambda: f64) -> Result<Coupling> {
        if !(self.row.approx_eq(&other.row, MARGINAL_TOL) && self.col.approx_eq(&other.col, MARGINAL_TOL)) {
            return Err(Error::MarginalMismatch("mixing couplings of different measures".into()));
        }
        let (m, n) = self.shape();
        let mass = Matrix::from_fn(m, n, |i, j| (1.0 - lambda) * self.mass[(i, j)] + lambda * other.mass[(i, j)]);
        Coupling::new(self.row.clone(), self.col.clone(), mass)
    }

    /// Indices `(i, j)` of cells carrying positive mass, row-major.
    pub fn support_cells(&self) -> Vec<(usize, usize)> {
        self.mass.iter().filter(|&(_, _, x)| x > 0.0).map(|(i, j, _)| (i, j)).collect()
    }

    /// The coupling as a measure on `X × Y` with atoms `(x_i, y_j)`.
    pub fn as_measure(&self) -> DiscreteMeasure {
        let mut pts = Vec::new();
        let mut ws = Vec::new();
        for (i, j, x) in self.mass.iter() {
            if x > 0.0 {
                pts.push(self.row.points()[i].concat(&self.col.points()[j]));
                ws.push(x);
            }
        }
        DiscreteMeasure::new(pts, ws).expect("coupling has positive mass")
    }
}

/// `k`-marginal coupling stored flat in row-major order (last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct MultiCoupling {
    marginals: Vec<DiscreteMeasure>,
    shape: Vec<usize>,
    mass: Vec<f64>,
}

impl MultiCoupling {
    pub fn new(marginals: Vec<DiscreteMeasure>, mass: Vec<f64>) -> Result<Self> {
        if marginals.is_empty() {
            return Err(Error::InvalidInput("multi-coupling needs at least one marginal".into()));
        }
        let shape: Vec<usize> = marginals.iter().map(DiscreteMeasure::len).collect();
        let cells: usize = shape.iter().product();
        if mass.len() != cells {
            return Err(Error::DimensionMismatch { expected: cells, found: mass.len() });
        }
        if mass.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("multi-coupling mass"));
        }
        if let Some(x) = mass.iter().find(|&&x| x < -1e-12) {
            return Err(Error::InvalidInput(format!("negative mass {x}")));
        }
        let mass = mass.into_iter().map(|x| x.max(0.0)).collect();
        let c = MultiCoupling { marginals, shape, mass };
        for axis in 0..c.arity() {
            let got = c.axis_marginal(axis);
            let err = got.iter().zip(c.marginals[axis].weights()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if err > MARGINAL_TOL {
                return Err(Error::MarginalMismatch(format!("axis {axis} error {err:e}")));
            }
        }
        Ok(c)
    }

    /// Product measure of all marginals.
    pub fn product(marginals: Vec<DiscreteMeasure>) -> Self {
        let shape: Vec<usize> = marginals.iter().map(DiscreteMeasure::len).collect();
        let cells: usize = shape.iter().product();
        let mut mass = Vec::with_capacity(cells);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..cells {
            mass.push(idx.iter().enumerate().map(|(a, &i)| marginals[a].weights()[i]).product());
            advance(&mut idx, &shape);
        }
        MultiCoupling { marginals, shape, mass }
    }

    pub fn from_coupling(c: &Coupling) -> Self {
        MultiCoupling {
            marginals: vec![c.row.clone(), c.col.clone()],
            shape: vec![c.row.len(), c.col.len()],
            mass: c.mass.as_slice().to_vec(),
        }
    }

    pub fn arity(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn marginals(&self) -> &[DiscreteMeasure] {
        &self.marginals
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Multi-index of flat cell `k`.
    pub fn unravel(&self, k: usize) -> Vec<usize> {
        unravel(k, &self.shape)
    }

    /// Sums out every axis not in `axes`. `axes` must be strictly ascending.
    /// Cells are visited in ascending flat order, so the summation order is
    /// fixed.
    pub fn project(&self, axes: &[usize]) -> Result<MultiCoupling> {
        if axes.is_empty() {
            return Err(Error::InvalidInput("projection needs at least one axis".into()));
        }
        if axes.windows(2).any(|w| w[0] >= w[1]) || *axes.last().unwrap() >= self.arity() {
            return Err(Error::InvalidInput(format!("bad projection axes {axes:?}")));
        }
        let out_shape: Vec<usize> = axes.iter().map(|&a| self.shape[a]).collect();
        let mut out = vec![0.0; out_shape.iter().product()];
        let mut idx = vec![0usize; self.arity()];
        for &x in &self.mass {
            let mut k = 0;
            for &a in axes {
                k = k * self.shape[a] + idx[a];
            }
            out[k] += x;
            advance(&mut idx, &self.shape);
        }
        Ok(MultiCoupling {
            marginals: axes.iter().map(|&a| self.marginals[a].clone()).collect(),
            shape: out_shape,
            mass: out,
        })
    }

    /// Projection onto two axes as a validated [`Coupling`].
    pub fn project_pair(&self, a: usize, b: usize) -> Result<Coupling> {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let p = self.project(&[lo, hi])?;
        let c = p.into_coupling()?;
        Ok(if a < b { c } else { c.transpose() })
    }

    /// Masses of the projection onto one axis.
    pub fn axis_marginal(&self, axis: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.shape[axis]];
        let mut idx = vec![0usize; self.arity()];
        for &x in &self.mass {
            out[idx[axis]] += x;
            advance(&mut idx, &self.shape);
        }
        out
    }

    /// Two-axis multi-coupling as a [`Coupling`].
    pub fn into_coupling(self) -> Result<Coupling> {
        if self.arity() != 2 {
            return Err(Error::InvalidInput(format!("arity {} is not 2", self.arity())));
        }
        let mass = Matrix::from_vec(self.shape[0], self.shape[1], self.mass);
        let mut it = self.marginals.into_iter();
        Coupling::new(it.next().unwrap(), it.next().unwrap(), mass)
    }

    /// The coupling as a measure on the product space (concatenated atoms).
    pub fn as_measure(&self) -> DiscreteMeasure {
        let mut pts = Vec::new();
        let mut ws = Vec::new();
        for (k, &x) in self.mass.iter().enumerate() {
            if x > 0.0 {
                let idx = self.unravel(k);
                let mut p = self.marginals[0].points()[idx[0]].clone();
                for a in 1..self.arity() {
                    p = p.concat(&self.marginals[a].points()[idx[a]]);
                }
                pts.push(p);
                ws.push(x);
            }
        }
        DiscreteMeasure::new(pts, ws).expect("multi-coupling has positive mass")
    }

    /// Max absolute deviation of any axis marginal from its measure.
    pub fn marginal_error(&self) -> f64 {
        (0..self.arity())
            .map(|a| {
                self.axis_marginal(a)
                    .iter()
                    .zip(self.marginals[a].weights())
                    .map(|(x, w)| (x - w).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
impl MultiCoupling {
    fn from_parts_unchecked(marginals: Vec<DiscreteMeasure>, mass: Vec<f64>) -> Self {
        let shape = marginals.iter().map(DiscreteMeasure::len).collect();
        MultiCoupling { marginals, shape, mass }
    }
}

pub(crate) fn advance(idx: &mut [usize], shape: &[usize]) {
    for a in (0..shape.len()).rev() {
        idx[a] += 1;
        if idx[a] < shape[a] {
            return;
        }
        idx[a] = 0;
    }
}

pub(crate) fn unravel(mut k: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for a in (0..shape.len()).rev() {
        idx[a] = k % shape[a];
        k /= shape[a];
    }
    idx
}

/// Boxed point-wise function, used for envelopes and maps.
pub type PointFn = Box<dyn Fn(f64, &Point) -> f64 + Send + Sync>;

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(x: f64) -> Point {
        Point::scalar(x)
    }

    #[test]
    fn single_atom_is_dirac() {
        let m = DiscreteMeasure::new(vec![p(0.3)], vec![1.0]).unwrap();
        assert_eq!(m, DiscreteMeasure::dirac(p(0.3)));
    }

    #[test]
    fn duplicates_merge() {
        let m = DiscreteMeasure::new(vec![p(0.3), p(0.3)], vec![0.5, 0.5]).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.weights(), &[1.0]);
    }

    #[test]
    fn weights_normalize() {
        let m = DiscreteMeasure::new(vec![p(0.0), p(1.0)], vec![2.0, 2.0]).unwrap();
        assert_eq!(m.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(DiscreteMeasure::new(vec![p(0.0)], vec![1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
        assert_eq!(DiscreteMeasure::new(vec![p(0.0), p(1.0)], vec![0.0, 0.0]), Err(Error::ZeroMass));
        assert!(matches!(DiscreteMeasure::new(vec![p(0.0)], vec![f64::NAN]), Err(Error::NonFinite(_))));
        assert!(Point::new(vec![f64::INFINITY]).is_err());
        let q = Point::new(vec![0.0, 1.0]).unwrap();
        assert!(matches!(DiscreteMeasure::new(vec![p(0.0), q], vec![1.0, 1.0]), Err(Error::DimensionMismatch { .. })));
        // tiny negatives are clamped, larger ones rejected
        let m = DiscreteMeasure::new(vec![p(0.0), p(1.0)], vec![1.0, -1e-15]).unwrap();
        assert_eq!(m.len(), 1);
        assert!(DiscreteMeasure::new(vec![p(0.0), p(1.0)], vec![1.0, -1e-3]).is_err());
    }

    #[test]
    fn grids() {
        let g = DiscreteMeasure::uniform_grid(1, 0.0, 1.0).unwrap();
        assert_eq!(g.points(), &[p(0.5)]);
        assert_eq!(g.weights(), &[1.0]);
        let g = DiscreteMeasure::uniform_grid(2, 0.0, 1.0).unwrap();
        assert_eq!(g.points(), &[p(0.25), p(0.75)]);
        assert_eq!(g.weights(), &[0.5, 0.5]);
        let g = DiscreteMeasure::uniform_grid(4, 0.0, 1.0).unwrap();
        assert_eq!(g.points(), &[p(0.125), p(0.375), p(0.625), p(0.875)]);
        assert!(DiscreteMeasure::uniform_grid(0, 0.0, 1.0).is_err());
        assert!(DiscreteMeasure::uniform_grid(3, 1.0, 1.0).is_err());
    }

    #[test]
    fn random_is_reproducible() {
        let a = DiscreteMeasure::random(5, 2, 42).unwrap();
        let b = DiscreteMeasure::random(5, 2, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, DiscreteMeasure::random(5, 2, 43).unwrap());
    }

    #[test]
    fn builtin_costs() {
        let a = DiscreteMeasure::dirac(p(0.0));
        let b = DiscreteMeasure::dirac(p(3.0));
        assert_eq!(CostSpec::Euclidean.eval(&a, &b).unwrap()[(0, 0)], 3.0);
        assert_eq!(CostSpec::Truncated.eval(&a, &b).unwrap()[(0, 0)], 1.0);
        assert_eq!(CostSpec::Power(2.0).eval(&a, &b).unwrap()[(0, 0)], 9.0);
        let x = DiscreteMeasure::dirac(p(0.2));
        let h = CostSpec::DiagonalSwitch { t: 0.25 }.eval(&x, &x).unwrap();
        assert_eq!(h[(0, 0)], 0.0);
        // negative branch: min(|x-y| - t, |x+y-1|)
        let y = DiscreteMeasure::dirac(p(0.8));
        let h = CostSpec::DiagonalSwitch { t: -0.25 }.eval(&x, &y).unwrap();
        assert!((h[(0, 0)] - 0.0).abs() < 1e-15);
        let h = CostSpec::DiagonalSwitch { t: -0.25 }.eval(&x, &x).unwrap();
        assert!((h[(0, 0)] - 0.25).abs() < 1e-15);
        let s = CostSpec::SquaredShift { scale: 0.5, map: ShiftMap::Reflection };
        assert!((s.eval(&x, &x).unwrap()[(0, 0)] - 0.5 * 0.36).abs() < 1e-15);
    }

    #[test]
    fn cost_errors() {
        let a = DiscreteMeasure::dirac(p(0.0));
        let m = CostSpec::Matrix(Matrix::from_rows(&[vec![-1.0]]).unwrap());
        assert!(m.eval(&a, &a).is_err());
        let m = CostSpec::Matrix(Matrix::zeros(2, 1));
        assert!(m.eval(&a, &a).is_err());
        let q = DiscreteMeasure::dirac(Point::new(vec![0.0, 0.0]).unwrap());
        assert!(matches!(CostSpec::Euclidean.eval(&a, &q), Err(Error::DimensionMismatch { .. })));
        assert!(CostSpec::Power(0.5).eval(&a, &a).is_err());
    }

    #[test]
    fn coupling_validation() {
        let mu = DiscreteMeasure::uniform_grid(2, 0.0, 1.0).unwrap();
        let ok = Matrix::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert!(Coupling::new(mu.clone(), mu.clone(), ok).is_ok());
        let bad = Matrix::from_rows(&[vec![0.5, 0.1], vec![0.0, 0.4]]).unwrap();
        assert!(matches!(Coupling::new(mu.clone(), mu.clone(), bad), Err(Error::MarginalMismatch(_))));
        let neg = Matrix::from_rows(&[vec![0.6, -0.1], vec![-0.1, 0.6]]).unwrap();
        assert!(Coupling::new(mu.clone(), mu, neg).is_err());
    }

    #[test]
    fn projections() {
        let g = DiscreteMeasure::uniform_grid(2, 0.0, 1.0).unwrap();
        let c = MultiCoupling::product(vec![g.clone(), g.clone(), g.clone()]);
        assert!(c.mass().iter().all(|&x| x == 0.125));
        let p = c.project_pair(0, 1).unwrap();
        assert!(p.mass().as_slice().iter().all(|&x| x == 0.25));
        assert_eq!(c.axis_marginal(2), vec![0.5, 0.5]);

        let s = Coupling::product(&g, &DiscreteMeasure::uniform_grid(3, 0.0, 1.0).unwrap());
        let mc = MultiCoupling::from_coupling(&s);
        let r = mc.project(&[0]).unwrap();
        assert_eq!(r.mass(), s.row_measure().weights());
        assert!(c.project(&[]).is_err());
        assert!(c.project(&[1, 0]).is_err());
        assert!(c.project(&[3]).is_err());
    }

    proptest! {
        #[test]
        fn construction_is_idempotent(
            xs in proptest::collection::vec(-5.0f64..5.0, 1..8),
            ws in proptest::collection::vec(0.0f64..3.0, 8),
        ) {
            let pts: Vec<Point> = xs.iter().map(|&x| p(x)).collect();
            let w = ws[..pts.len()].to_vec();
            prop_assume!(w.iter().sum::<f64>() > 0.0);
            let m = DiscreteMeasure::new(pts, w).unwrap();
            let again = DiscreteMeasure::new(m.points().to_vec(), m.weights().to_vec()).unwrap();
            prop_assert_eq!(&m, &again);
            prop_assert!((m.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }

        // Dyadic masses make every partial sum exact, so both routes agree bit for bit.
        #[test]
        fn projection_commutes(cells in proptest::collection::vec(1u32..64, 24)) {
            let total: u32 = cells.iter().sum();
            let shape = [2usize, 3, 4];
            let marg: Vec<DiscreteMeasure> = shape
                .iter()
                .map(|&n| DiscreteMeasure::uniform_grid(n, 0.0, 1.0).unwrap())
                .collect();
            let scale = 1.0 / 1024.0;
            let mass: Vec<f64> = cells.iter().map(|&c| c as f64 * scale).collect();
            let c = MultiCoupling::from_parts_unchecked(marg, mass);
            let direct = c.project(&[2]).unwrap();
            let staged = c.project(&[1, 2]).unwrap().project(&[1]).unwrap();
            prop_assert_eq!(direct.mass(), staged.mass());
            let direct = c.project(&[0, 2]).unwrap();
            let staged = c.project(&[0, 1, 2]).unwrap().project(&[0, 2]).unwrap();
            prop_assert_eq!(direct.mass(), staged.mass());
            prop_assert_eq!(c.axis_marginal(0).iter().sum::<f64>(), total as f64 * scale);
        }
    }
}
