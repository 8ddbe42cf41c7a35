//! Distances between discrete measures.
//!
//! * `d_K`: transport cost with the ground distance as cost.
//! * `d_KR`: `sup ∫ f d(μ − ν)` over `|f| ≤ 1`, `Lip(f) ≤ 1`.
//! * `W_p`: `(transport cost under d^p)^{1/p}`.
//!
//! The two Lipschitz-potential programs are solved with the dense simplex in
//! their flow form (one equality row per atom, one column per ordered pair);
//! the row multipliers of that program are the optimal potential `f`.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use crate::lp::LinearProgram;
use crate::math::powf;
use crate::measures::Point;
use crate::solver::solve_kantorovich;
use crate::{DiscreteMeasure, Error, Matrix, Result};

/// Ground cost on `R^d`; `DirectSum` acts on concatenated coordinates
/// `(x, y)` with `x` taking the first `split` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum GroundCost {
    Euclidean,
    /// `min(d, 1)`.
    Truncated,
    /// `d^p`. Not a metric for `p > 1`.
    Power(f64),
    /// `α((x,y),(x',y')) = left(x,x') + right(y,y')`.
    DirectSum {
        left: Box<GroundCost>,
        right: Box<GroundCost>,
        split: usize,
    },
}

impl GroundCost {
    pub fn direct_sum(left: GroundCost, right: GroundCost, split: usize) -> Self {
        GroundCost::DirectSum { left: Box::new(left), right: Box::new(right), split }
    }

    /// Euclidean on each factor, summed: the product metric on `X × Y`.
    pub fn product_metric(split: usize) -> Self {
        Self::direct_sum(GroundCost::Euclidean, GroundCost::Euclidean, split)
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            GroundCost::Euclidean => euclid(x, y),
            GroundCost::Truncated => euclid(x, y).min(1.0),
            GroundCost::Power(p) => powf(euclid(x, y), *p),
            GroundCost::DirectSum { left, right, split } => {
                left.eval(&x[..*split], &y[..*split]) + right.eval(&x[*split..], &y[*split..])
            }
        }
    }

    pub fn eval_points(&self, x: &Point, y: &Point) -> f64 {
        self.eval(x.coords(), y.coords())
    }

    /// True when the cost satisfies the triangle inequality.
    pub fn is_metric(&self) -> bool {
        match self {
            GroundCost::Euclidean | GroundCost::Truncated => true,
            GroundCost::Power(p) => *p == 1.0,
            GroundCost::DirectSum { left, right, .. } => left.is_metric() && right.is_metric(),
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        match self {
            GroundCost::Power(p) if !(*p >= 1.0) => {
                Err(Error::InvalidInput(format!("power ground cost needs p >= 1, got {p}")))
            }
            GroundCost::DirectSum { left, right, split } => {
                if *split == 0 || *split >= dim {
                    return Err(Error::InvalidInput(format!("direct-sum split {split} invalid for dimension {dim}")));
                }
                left.validate(*split)?;
                right.validate(dim - split)
            }
            _ => Ok(()),
        }
    }

    /// `α(x_i, y_j)` over the two supports.
    pub fn matrix(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<Matrix> {
        if mu.dim() != nu.dim() {
            return Err(Error::DimensionMismatch { expected: mu.dim(), found: nu.dim() });
        }
        self.validate(mu.dim())?;
        Ok(Matrix::from_fn(mu.len(), nu.len(), |i, j| self.eval_points(&mu.points()[i], &nu.points()[j])))
    }
}

fn euclid(x: &[f64], y: &[f64]) -> f64 {
    crate::math::sqrt(x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum())
}

/// `K_α(μ, ν)`; equals `d_K` for a metric `α`.
pub fn d_kantorovich(mu: &DiscreteMeasure, nu: &DiscreteMeasure, ground: &GroundCost) -> Result<f64> {
    let c = ground.matrix(mu, nu)?;
    Ok(solve_kantorovich(mu, nu, &c)?.value)
}

/// `W_p` with the euclidean ground distance.
pub fn w_p(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Result<f64> {
    w_p_ground(mu, nu, &GroundCost::Euclidean, p)
}

/// `W_p` over an arbitrary ground metric: `K_{d^p}^{1/p}`.
pub fn w_p_ground(mu: &DiscreteMeasure, nu: &DiscreteMeasure, ground: &GroundCost, p: f64) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidInput(format!("W_p needs finite p >= 1, got {p}")));
    }
    let c = ground.matrix(mu, nu)?;
    let cp = Matrix::from_fn(c.rows(), c.cols(), |i, j| powf(c[(i, j)], p));
    let v = solve_kantorovich(mu, nu, &cp)?.value;
    Ok(powf(v, 1.0 / p))
}

/// Optimal potential of a Lipschitz dual program.
#[derive(Debug, Clone)]
pub struct Potential {
    /// Union of the two supports; `μ`'s atoms first.
    pub points: Vec<Point>,
    /// `f` at each point.
    pub values: Vec<f64>,
    /// `Σ f(z) (μ − ν)(z)`.
    pub value: f64,
}

/// Union of supports and the signed mass `μ − ν` on it.
pub fn signed_difference(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<(Vec<Point>, Vec<f64>)> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), found: nu.dim() });
    }
    let mut pts: Vec<Point> = mu.points().to_vec();
    let mut g: Vec<f64> = mu.weights().to_vec();
    for (p, w) in nu.points().iter().zip(nu.weights()) {
        match pts.iter().position(|q| q.is_close(p)) {
            Some(k) => g[k] -= w,
            None => {
                pts.push(p.clone());
                g.push(-w);
            }
        }
    }
    Ok((pts, g))
}

/// `d_KR(μ, ν)`.
pub fn d_kr(mu: &DiscreteMeasure, nu: &DiscreteMeasure, ground: &GroundCost) -> Result<f64> {
    Ok(d_kr_potential(mu, nu, ground)?.value)
}

/// `d_KR(μ, ν)` with its optimal potential.
///
/// Solves `max Σ f(z)(μ−ν)(z)` subject to `|f(z)| ≤ 1` and
/// `f(z) − f(z') ≤ α(z, z')` for every ordered pair of atoms in the union of
/// supports. The simplex runs on the equivalent flow program
/// `min Σ α y + Σ (p + q)` with conservation `div y + p − q = μ − ν`.
pub fn d_kr_potential(mu: &DiscreteMeasure, nu: &DiscreteMeasure, ground: &GroundCost) -> Result<Potential> {
    ground.validate(mu.dim())?;
    let (points, g) = signed_difference(mu, nu)?;
    lipschitz_program(points, g, ground, true, None)
}

/// `d_K` from the unbounded Lipschitz program with `f(z₀) = 0` at the first
/// atom of `μ`. Independent of the transportation simplex; equal to
/// [`d_kantorovich`] by duality.
pub fn d_kantorovich_dual(mu: &DiscreteMeasure, nu: &DiscreteMeasure, ground: &GroundCost) -> Result<Potential> {
    ground.validate(mu.dim())?;
    let (points, g) = signed_difference(mu, nu)?;
    lipschitz_program(points, g, ground, false, Some(0))
}

fn lipschitz_program(
    points: Vec<Point>,
    g: Vec<f64>,
    ground: &GroundCost,
    bounded: bool,
    anchor: Option<usize>,
) -> Result<Potential> {
    let n = points.len();
    if n == 1 {
        return Ok(Potential { points, values: alloc::vec![0.0], value: 0.0 });
    }
    let pairs = n * (n - 1);
    let cols = pairs + if bounded { 2 * n } else { 0 };
    // conservation rows; the anchored atom's row is dropped
    let row_of = |z: usize| -> Option<usize> {
        match anchor {
            Some(a) if z == a => None,
            Some(a) if z > a => Some(z - 1),
            _ => Some(z),
        }
    };
    let rows = n - usize::from(anchor.is_some());
    let mut a = Matrix::zeros(rows, cols);
    let mut c = Vec::with_capacity(cols);
    let mut k = 0;
    for z in 0..n {
        for w in 0..n {
            if z == w {
                continue;
            }
            // y_{zw} pairs with the constraint f(z) − f(w) ≤ α(z, w)
            if let Some(r) = row_of(z) {
                a[(r, k)] += 1.0;
            }
            if let Some(r) = row_of(w) {
                a[(r, k)] -= 1.0;
            }
            c.push(ground.eval_points(&points[z], &points[w]));
            k += 1;
        }
    }
    if bounded {
        for z in 0..n {
            a[(z, pairs + 2 * z)] = 1.0;
            a[(z, pairs + 2 * z + 1)] = -1.0;
            c.push(1.0);
            c.push(1.0);
        }
    }
    let b: Vec<f64> = (0..n).filter(|&z| row_of(z).is_some()).map(|z| g[z]).collect();
    let sol = LinearProgram::new(a, b, c)?.solve()?;
    let mut values = alloc::vec![0.0; n];
    for z in 0..n {
        if let Some(r) = row_of(z) {
            values[z] = sol.duals[r];
        }
    }
    Ok(Potential { points, values, value: sol.value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Point;

    fn dirac(x: f64) -> DiscreteMeasure {
        DiscreteMeasure::dirac(Point::scalar(x))
    }

    #[test]
    fn identical_measures_have_zero_distance() {
        let mu = DiscreteMeasure::random(4, 2, 3).unwrap();
        assert_eq!(d_kantorovich(&mu, &mu, &GroundCost::Euclidean).unwrap(), 0.0);
        assert!(d_kr(&mu, &mu, &GroundCost::Euclidean).unwrap().abs() < 1e-12);
        assert_eq!(w_p(&mu, &mu, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn diracs() {
        assert_eq!(d_kantorovich(&dirac(0.0), &dirac(0.7), &GroundCost::Euclidean).unwrap(), 0.7);
        assert!((d_kr(&dirac(0.0), &dirac(0.7), &GroundCost::Euclidean).unwrap() - 0.7).abs() < 1e-12);
        // |f| ≤ 1 caps the KR distance at 2
        assert!((d_kr(&dirac(0.0), &dirac(5.0), &GroundCost::Euclidean).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(w_p(&dirac(0.0), &dirac(1.0), 2.0).unwrap(), 1.0);
    }

    #[test]
    fn w1_is_d_k() {
        let mu = DiscreteMeasure::random(3, 1, 11).unwrap();
        let nu = DiscreteMeasure::random(4, 1, 12).unwrap();
        let dk = d_kantorovich(&mu, &nu, &GroundCost::Euclidean).unwrap();
        assert_eq!(w_p(&mu, &nu, 1.0).unwrap(), dk);
        assert!(w_p(&mu, &nu, 0.5).is_err());
    }

    #[test]
    fn potentials_are_feasible() {
        let mu = DiscreteMeasure::random(4, 2, 21).unwrap();
        let nu = DiscreteMeasure::random(3, 2, 22).unwrap();
        let g = GroundCost::Euclidean;
        let kr = d_kr_potential(&mu, &nu, &g).unwrap();
        let (_, diff) = signed_difference(&mu, &nu).unwrap();
        let objective: f64 = kr.values.iter().zip(&diff).map(|(f, d)| f * d).sum();
        assert!((objective - kr.value).abs() < 1e-10);
        for (a, f) in kr.values.iter().enumerate() {
            assert!(f.abs() <= 1.0 + 1e-10);
            for (b, h) in kr.values.iter().enumerate() {
                assert!(f - h <= g.eval_points(&kr.points[a], &kr.points[b]) + 1e-10);
            }
        }
        let dual = d_kantorovich_dual(&mu, &nu, &g).unwrap();
        assert_eq!(dual.values[0], 0.0);
        let primal = d_kantorovich(&mu, &nu, &g).unwrap();
        assert!((dual.value - primal).abs() < 1e-8);
    }

    #[test]
    fn direct_sum_evaluates_componentwise() {
        let g = GroundCost::product_metric(1);
        assert_eq!(g.eval(&[0.0, 0.0], &[3.0, 4.0]), 7.0);
        let bad = GroundCost::product_metric(2);
        let mu = DiscreteMeasure::random(2, 2, 1).unwrap();
        assert!(bad.matrix(&mu, &mu).is_err());
        assert!(!GroundCost::Power(2.0).is_metric());
    }
}
