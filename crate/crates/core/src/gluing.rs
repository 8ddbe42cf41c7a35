//! Gluing of couplings and the plan-carrying constructions built on it.
//!
//! Given `σ₁ ∈ Π(μ₁, ν)` and a new first marginal `μ₂`, [`carry_plan`] takes an
//! optimal `η ∈ Π(μ₁, μ₂)` for the ground cost `α`, glues `η` and `σ₁` along
//! their shared `X₁` marginal into `λ` on `X₂ × X₁ × Y`, and returns the
//! `(X₂, Y)` projection `σ₂ ∈ Π(μ₂, ν)`. The map `(x₁, x₂, y) ↦ ((x₁,y), (x₂,y))`
//! pushes `λ` to a coupling of `σ₁` and `σ₂` whose `α⊕β` cost is exactly
//! `∫α dη`, which gives the certified bound
//! `K_{α⊕β}(σ₁, σ₂) ≤ K_α(μ₁, μ₂)`.
//!
//! Every carry function evaluates both sides of its bound and returns
//! [`Error::BoundViolation`] if the inequality fails beyond tolerance.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::math::powf;
use crate::measures::{advance, MARGINAL_TOL};
use crate::metrics::GroundCost;
use crate::solver::{solve_kantorovich, solve_transport, DEFAULT_CELL_CAP};
use crate::{Coupling, DiscreteMeasure, Error, Matrix, MultiCoupling, Result};

/// Middle-marginal atoms at or below this mass contribute nothing.
pub const ZERO_MASS: f64 = 1e-14;
/// Tolerance on the two-marginal carry bounds.
pub const BOUND_TOL: f64 = 1e-8;
/// Tolerance on the `n`-marginal carry bound.
pub const MULTI_BOUND_TOL: f64 = 1e-7;

/// Result of carrying a plan: the new plan and both sides of its bound.
#[derive(Debug, Clone)]
pub struct Carry {
    pub plan: Coupling,
    pub lhs: f64,
    pub rhs: f64,
}

impl Carry {
    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }
}

/// `n`-marginal counterpart of [`Carry`].
#[derive(Debug, Clone)]
pub struct MultiCarry {
    pub plan: MultiCoupling,
    pub lhs: f64,
    pub rhs: f64,
}

fn ensure(what: &'static str, lhs: f64, rhs: f64, tol: f64) -> Result<()> {
    if lhs <= rhs + tol {
        Ok(())
    } else {
        Err(Error::BoundViolation { what, lhs, rhs })
    }
}

/// Glues `c12` on `X₁×X₂` and `c23` on `X₂×X₃` into
/// `λ(i,j,k) = c12(i,j)·c23(j,k) / m₂(j)` where `m₂` is the row marginal of
/// `c23`.
pub fn glue(c12: &Coupling, c23: &Coupling) -> Result<MultiCoupling> {
    if !c12.col_measure().same_support(c23.row_measure()) {
        return Err(Error::MarginalMismatch("middle supports differ".into()));
    }
    let left = c12.mass().col_sums();
    let middle = c23.mass().row_sums();
    let gap = left.iter().zip(&middle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if gap > MARGINAL_TOL {
        return Err(Error::MarginalMismatch(format!("middle marginals differ by {gap:e}")));
    }
    let (m1, m2) = c12.shape();
    let m3 = c23.shape().1;
    let mut mass = Vec::with_capacity(m1 * m2 * m3);
    for i in 0..m1 {
        for j in 0..m2 {
            let w = middle[j];
            for k in 0..m3 {
                mass.push(if w > ZERO_MASS { c12.mass()[(i, j)] * c23.mass()[(j, k)] / w } else { 0.0 });
            }
        }
    }
    MultiCoupling::new(vec![c12.row_measure().clone(), c12.col_measure().clone(), c23.col_measure().clone()], mass)
}

/// Carries `σ₁ ∈ Π(μ₁, ν)` to `Π(μ₂, ν)` through a given `η ∈ Π(μ₁, μ₂)`.
pub fn carry_with(sigma1: &Coupling, eta: &Coupling) -> Result<Coupling> {
    let lambda = glue(&eta.transpose(), sigma1)?;
    lambda.project_pair(0, 2)
}

/// `K_{(α⊕β)^p}(σ₁, σ₂)`: transport between two couplings viewed as measures
/// on the product space, over their positive cells.
pub fn coupling_transport(s1: &Coupling, s2: &Coupling, alpha: &GroundCost, beta: &GroundCost, p: f64) -> Result<f64> {
    let am = alpha.matrix(s1.row_measure(), s2.row_measure())?;
    let bm = beta.matrix(s1.col_measure(), s2.col_measure())?;
    let c1 = s1.support_cells();
    let c2 = s2.support_cells();
    if c1.len() * c2.len() > DEFAULT_CELL_CAP {
        return Err(Error::SizeGuard {
            what: "coupling transport cells",
            size: c1.len() * c2.len(),
            limit: DEFAULT_CELL_CAP,
        });
    }
    let a: Vec<f64> = c1.iter().map(|&c| s1.mass()[c]).collect();
    let b: Vec<f64> = c2.iter().map(|&c| s2.mass()[c]).collect();
    let cost = Matrix::from_fn(c1.len(), c2.len(), |k, l| {
        let ((i, j), (i2, j2)) = (c1[k], c2[l]);
        powf(am[(i, i2)] + bm[(j, j2)], p)
    });
    Ok(solve_transport(&a, &b, &cost)?.value)
}

/// One-sided carry: `σ₂ ∈ Π(μ₂, ν)` with `K_{α⊕β}(σ₁,σ₂) ≤ K_α(μ₁,μ₂)`.
pub fn carry_plan(sigma1: &Coupling, mu2: &DiscreteMeasure, alpha: &GroundCost, beta: &GroundCost) -> Result<Carry> {
    let mu1 = sigma1.row_measure();
    let eta = solve_kantorovich(mu1, mu2, &alpha.matrix(mu1, mu2)?)?;
    let plan = carry_with(sigma1, &eta.plan)?;
    let lhs = coupling_transport(sigma1, &plan, alpha, beta, 1.0)?;
    ensure("one-sided carry", lhs, eta.value, BOUND_TOL)?;
    Ok(Carry { plan, lhs, rhs: eta.value })
}

/// Two-sided carry for metrics `α, β`: carry along `X`, then along `Y`;
/// `d_{K,α⊕β}(σ₁,σ₃) ≤ d_{K,α}(μ₁,μ₂) + d_{K,β}(ν₁,ν₂)`.
pub fn carry_plan_both(
    sigma1: &Coupling,
    mu2: &DiscreteMeasure,
    nu2: &DiscreteMeasure,
    alpha: &GroundCost,
    beta: &GroundCost,
) -> Result<Carry> {
    if !(alpha.is_metric() && beta.is_metric()) {
        return Err(Error::InvalidInput("two-sided carry needs metric ground costs".into()));
    }
    let first = carry_plan(sigma1, mu2, alpha, beta)?;
    let second = carry_plan(&first.plan.transpose(), nu2, beta, alpha)?;
    let plan = second.plan.transpose();
    let lhs = coupling_transport(sigma1, &plan, alpha, beta, 1.0)?;
    let rhs = first.rhs + second.rhs;
    ensure("two-sided carry", lhs, rhs, BOUND_TOL)?;
    Ok(Carry { plan, lhs, rhs })
}

/// `W_p` version with euclidean factors and the sum metric on `X × Y`:
/// `W_p(σ₁,σ₃) ≤ W_p(μ₁,μ₂) + W_p(ν₁,ν₂)`.
pub fn carry_plan_wp(sigma1: &Coupling, mu2: &DiscreteMeasure, nu2: &DiscreteMeasure, p: f64) -> Result<Carry> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidInput(format!("W_p carry needs finite p >= 1, got {p}")));
    }
    let power = GroundCost::Power(p);
    let (mu1, nu1) = (sigma1.row_measure(), sigma1.col_measure());
    let eta_x = solve_kantorovich(mu1, mu2, &power.matrix(mu1, mu2)?)?;
    let mid = carry_with(sigma1, &eta_x.plan)?;
    let eta_y = solve_kantorovich(nu1, nu2, &power.matrix(nu1, nu2)?)?;
    let plan = carry_with(&mid.transpose(), &eta_y.plan)?.transpose();
    let e = GroundCost::Euclidean;
    let lhs = powf(coupling_transport(sigma1, &plan, &e, &e, p)?, 1.0 / p);
    let rhs = powf(eta_x.value, 1.0 / p) + powf(eta_y.value, 1.0 / p);
    ensure("W_p carry", lhs, rhs, BOUND_TOL)?;
    Ok(Carry { plan, lhs, rhs })
}

/// Outcome of [`carry_plan_eps`].
#[derive(Debug, Clone)]
pub struct EpsCarry {
    pub plan: Coupling,
    pub lhs: f64,
    /// `K_α(μ₁, μ₂) + ε`.
    pub rhs_plus_eps: f64,
}

/// Carry through a supplied `ε`-optimal `η ∈ Π(μ₁, μ₂)`:
/// `K_{α⊕β}(σ₁, σ₂) ≤ K_α(μ₁, μ₂) + ε`. Rejects `η` that is not `ε`-optimal.
pub fn carry_plan_eps(
    sigma1: &Coupling,
    mu2: &DiscreteMeasure,
    alpha: &GroundCost,
    beta: &GroundCost,
    eps: f64,
    eta: &Coupling,
) -> Result<EpsCarry> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    let mu1 = sigma1.row_measure();
    if !eta.row_measure().approx_eq(mu1, MARGINAL_TOL) || !eta.col_measure().approx_eq(mu2, MARGINAL_TOL) {
        return Err(Error::MarginalMismatch("eta must couple mu1 with mu2".into()));
    }
    let am = alpha.matrix(mu1, mu2)?;
    let k = solve_kantorovich(mu1, mu2, &am)?.value;
    let excess = eta.cost(&am) - k;
    if excess > eps + 1e-12 {
        return Err(Error::NotEpsOptimal { excess, eps });
    }
    let plan = carry_with(sigma1, eta)?;
    let lhs = coupling_transport(sigma1, &plan, alpha, beta, 1.0)?;
    ensure("eps carry", lhs, k + eps, BOUND_TOL)?;
    Ok(EpsCarry { plan, lhs, rhs_plus_eps: k + eps })
}

/// `n`-marginal carry, replacing marginals in ascending axis order.
pub fn carry_plan_multi(
    sigma: &MultiCoupling,
    new_marginals: &[DiscreteMeasure],
    alphas: &[GroundCost],
) -> Result<MultiCarry> {
    let order: Vec<usize> = (0..sigma.arity()).collect();
    carry_plan_multi_ordered(sigma, new_marginals, alphas, &order)
}

/// `n`-marginal carry with an explicit replacement order (a permutation of
/// the axes). Each step treats the remaining axes as one block and carries
/// along a single axis; the bound does not depend on the order, the plan may.
pub fn carry_plan_multi_ordered(
    sigma: &MultiCoupling,
    new_marginals: &[DiscreteMeasure],
    alphas: &[GroundCost],
    order: &[usize],
) -> Result<MultiCarry> {
    let k = sigma.arity();
    if k > 4 {
        return Err(Error::SizeGuard { what: "multi carry arity", size: k, limit: 4 });
    }
    if new_marginals.len() != k || alphas.len() != k {
        return Err(Error::DimensionMismatch { expected: k, found: new_marginals.len().min(alphas.len()) });
    }
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..k).collect::<Vec<_>>() {
        return Err(Error::InvalidInput(format!("order {order:?} is not a permutation of the axes")));
    }
    let new_cells: usize = new_marginals.iter().map(DiscreteMeasure::len).product();
    if sigma.mass().len() * new_cells > DEFAULT_CELL_CAP {
        return Err(Error::SizeGuard {
            what: "multi carry cells",
            size: sigma.mass().len() * new_cells,
            limit: DEFAULT_CELL_CAP,
        });
    }

    let mut current = sigma.clone();
    let mut rhs = 0.0;
    let mut alpha_mats = vec![Matrix::zeros(0, 0); k];
    for a in 0..k {
        alpha_mats[a] = alphas[a].matrix(&sigma.marginals()[a], &new_marginals[a])?;
    }
    for &axis in order {
        let old = &sigma.marginals()[axis];
        let eta = solve_kantorovich(old, &new_marginals[axis], &alpha_mats[axis])?;
        rhs += eta.value;
        current = carry_axis(&current, axis, &eta.plan)?;
    }

    // transport between σ and π over positive cells, cost Σ α_a
    let src: Vec<usize> = (0..sigma.mass().len()).filter(|&c| sigma.mass()[c] > 0.0).collect();
    let dst: Vec<usize> = (0..current.mass().len()).filter(|&c| current.mass()[c] > 0.0).collect();
    let src_idx: Vec<Vec<usize>> = src.iter().map(|&c| sigma.unravel(c)).collect();
    let dst_idx: Vec<Vec<usize>> = dst.iter().map(|&c| current.unravel(c)).collect();
    let cost = Matrix::from_fn(src.len(), dst.len(), |s, d| {
        (0..k).map(|a| alpha_mats[a][(src_idx[s][a], dst_idx[d][a])]).sum()
    });
    let a: Vec<f64> = src.iter().map(|&c| sigma.mass()[c]).collect();
    let b: Vec<f64> = dst.iter().map(|&c| current.mass()[c]).collect();
    let lhs = solve_transport(&a, &b, &cost)?.value;
    ensure("n-marginal carry", lhs, rhs, MULTI_BOUND_TOL)?;
    Ok(MultiCarry { plan: current, lhs, rhs })
}

// Replace the marginal on `axis` through `eta` (old atoms × new atoms):
// new[.., j, ..] = Σ_i eta(i, j) · cur[.., i, ..] / m(i), m = current axis
// marginal. This is glue-then-project with the other axes as one block.
fn carry_axis(cur: &MultiCoupling, axis: usize, eta: &Coupling) -> Result<MultiCoupling> {
    let shape = cur.shape().to_vec();
    let m = cur.axis_marginal(axis);
    let new_len = eta.shape().1;
    let mut new_shape = shape.clone();
    new_shape[axis] = new_len;
    let mut out = vec![0.0; new_shape.iter().product()];
    let mut idx = vec![0usize; shape.len()];
    for &x in cur.mass() {
        let i = idx[axis];
        if m[i] > ZERO_MASS && x > 0.0 {
            for j in 0..new_len {
                let mut flat = 0;
                for a in 0..shape.len() {
                    flat = flat * new_shape[a] + if a == axis { j } else { idx[a] };
                }
                out[flat] += eta.mass()[(i, j)] * x / m[i];
            }
        }
        advance(&mut idx, &shape);
    }
    let mut marginals = cur.marginals().to_vec();
    marginals[axis] = eta.col_measure().clone();
    MultiCoupling::new(marginals, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Point;
    use rand::{Rng, SeedableRng};
    use rand_pcg::Pcg64;

    fn random_coupling(rng: &mut Pcg64, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Coupling {
        let c = Matrix::from_fn(mu.len(), nu.len(), |_, _| rng.gen::<f64>());
        let opt = solve_kantorovich(mu, nu, &c).unwrap().plan;
        opt.mix(&Coupling::product(mu, nu), rng.gen::<f64>()).unwrap()
    }

    #[test]
    fn glue_with_identity_relabels() {
        let mut rng = Pcg64::seed_from_u64(1);
        let m1 = DiscreteMeasure::random_with(&mut rng, 3, 1).unwrap();
        let m2 = DiscreteMeasure::random_with(&mut rng, 2, 1).unwrap();
        let c12 = random_coupling(&mut rng, &m1, &m2);
        let lam = glue(&c12, &Coupling::diagonal(&m2)).unwrap();
        let p13 = lam.project_pair(0, 2).unwrap();
        assert!(p13.mass().max_abs_diff(c12.mass()) <= 1e-15);
    }

    #[test]
    fn glue_products_gives_triple_product() {
        let a = DiscreteMeasure::random(2, 1, 2).unwrap();
        let b = DiscreteMeasure::random(3, 1, 3).unwrap();
        let c = DiscreteMeasure::random(2, 1, 4).unwrap();
        let lam = glue(&Coupling::product(&a, &b), &Coupling::product(&b, &c)).unwrap();
        let prod = MultiCoupling::product(vec![a, b, c]);
        for (x, y) in lam.mass().iter().zip(prod.mass()) {
            assert!((x - y).abs() <= 1e-15);
        }
    }

    #[test]
    fn glue_projections_seed_5() {
        let mut rng = Pcg64::seed_from_u64(5);
        let m1 = DiscreteMeasure::random_with(&mut rng, 2, 1).unwrap();
        let m2 = DiscreteMeasure::random_with(&mut rng, 2, 1).unwrap();
        let m3 = DiscreteMeasure::random_with(&mut rng, 2, 1).unwrap();
        let c12 = random_coupling(&mut rng, &m1, &m2);
        let c23 = random_coupling(&mut rng, &m2, &m3);
        let lam = glue(&c12, &c23).unwrap();
        assert!(lam.project_pair(0, 1).unwrap().mass().max_abs_diff(c12.mass()) <= 1e-10);
        assert!(lam.project_pair(1, 2).unwrap().mass().max_abs_diff(c23.mass()) <= 1e-10);
    }

    #[test]
    fn glue_rejects_mismatched_middle() {
        let a = DiscreteMeasure::random(2, 1, 2).unwrap();
        let b = DiscreteMeasure::random(2, 1, 3).unwrap();
        let c = DiscreteMeasure::random(2, 1, 4).unwrap();
        let r = glue(&Coupling::product(&a, &b), &Coupling::product(&c, &a));
        assert!(matches!(r, Err(Error::MarginalMismatch(_))));
    }

    #[test]
    fn carry_to_same_marginal_is_identity() {
        let mut rng = Pcg64::seed_from_u64(8);
        let mu = DiscreteMeasure::random_with(&mut rng, 3, 1).unwrap();
        let nu = DiscreteMeasure::random_with(&mut rng, 4, 1).unwrap();
        let s = random_coupling(&mut rng, &mu, &nu);
        let e = GroundCost::Euclidean;
        let c = carry_plan(&s, &mu, &e, &e).unwrap();
        assert!(c.plan.mass().max_abs_diff(s.mass()) <= 1e-15);
        assert!(c.lhs <= 1e-15 && c.rhs == 0.0);
        let b = carry_plan_both(&s, &mu, &nu, &e, &e).unwrap();
        assert!(b.plan.mass().max_abs_diff(s.mass()) <= 1e-15);
        assert!(b.lhs <= 1e-15 && b.rhs == 0.0);
        let w = carry_plan_wp(&s, &mu, &nu, 2.0).unwrap();
        assert!(w.lhs <= 1e-7 && w.rhs == 0.0);
    }

    #[test]
    fn carry_single_atom() {
        let nu = DiscreteMeasure::random(3, 1, 9).unwrap();
        let (a, b) = (Point::scalar(0.1), Point::scalar(0.6));
        let s = Coupling::product(&DiscreteMeasure::dirac(a), &nu);
        let mu2 = DiscreteMeasure::dirac(b);
        let e = GroundCost::Euclidean;
        let c = carry_plan(&s, &mu2, &e, &e).unwrap();
        assert_eq!(c.plan, Coupling::product(&mu2, &nu));
        assert!((c.lhs - 0.5).abs() < 1e-15 && (c.rhs - 0.5).abs() < 1e-15);
    }

    #[test]
    fn carry_keeps_second_marginal() {
        let mut rng = Pcg64::seed_from_u64(17);
        let mu1 = DiscreteMeasure::random_with(&mut rng, 3, 1).unwrap();
        let nu = DiscreteMeasure::random_with(&mut rng, 3, 1).unwrap();
        let mu2 = DiscreteMeasure::random_with(&mut rng, 3, 1).unwrap();
        let s = random_coupling(&mut rng, &mu1, &nu);
        let e = GroundCost::Euclidean;
        let c = carry_plan(&s, &mu2, &e, &e).unwrap();
        let got = c.plan.mass().col_sums();
        let want = s.mass().col_sums();
        assert!(got.iter().zip(&want).all(|(a, b)| (a - b).abs() <= 1e-10));
        assert!(c.lhs <= c.rhs + BOUND_TOL);
    }

    #[test]
    fn second_step_with_same_nu_is_one_sided_carry() {
        let mut rng = Pcg64::seed_from_u64(19);
        let mu1 = DiscreteMeasure::random_with(&mut rng, 3, 1).unwrap();
        let nu = DiscreteMeasure::random_with(&mut rng, 3, 1).unwrap();
        let mu2 = DiscreteMeasure::random_with(&mut rng, 3, 1).unwrap();
        let s = random_coupling(&mut rng, &mu1, &nu);
        let e = GroundCost::Euclidean;
        let one = carry_plan(&s, &mu2, &e, &e).unwrap();
        let both = carry_plan_both(&s, &mu2, &nu, &e, &e).unwrap();
        assert!(one.plan.mass().max_abs_diff(both.plan.mass()) <= 1e-15);
        assert_eq!(one.rhs, both.rhs);
    }

    #[test]
    fn wp_with_p_one_matches_two_sided() {
        let mut rng = Pcg64::seed_from_u64(23);
        let mu1 = DiscreteMeasure::random_with(&mut rng, 2, 1).unwrap();
        let nu1 = DiscreteMeasure::random_with(&mut rng, 2, 1).unwrap();
        let mu2 = DiscreteMeasure::random_with(&mut rng, 2, 1).unwrap();
        let nu2 = DiscreteMeasure::random_with(&mut rng, 2, 1).unwrap();
        let s = random_coupling(&mut rng, &mu1, &nu1);
        let e = GroundCost::Euclidean;
        let both = carry_plan_both(&s, &mu2, &nu2, &e, &e).unwrap();
        let w1 = carry_plan_wp(&s, &mu2, &nu2, 1.0).unwrap();
        assert!((both.lhs - w1.lhs).abs() <= 1e-9 && (both.rhs - w1.rhs).abs() <= 1e-9);
        assert!(both.plan.mass().max_abs_diff(w1.plan.mass()) <= 1e-12);
        assert!(carry_plan_wp(&s, &mu2, &nu2, 0.9).is_err());
    }

    #[test]
    fn multi_with_two_axes_matches_two_sided() {
        let mut rng = Pcg64::seed_from_u64(29);
        let mu1 = DiscreteMeasure::random_with(&mut rng, 3, 1).unwrap();
        let nu1 = DiscreteMeasure::random_with(&mut rng, 2, 1).unwrap();
        let mu2 = DiscreteMeasure::random_with(&mut rng, 2, 1).unwrap();
        let nu2 = DiscreteMeasure::random_with(&mut rng, 3, 1).unwrap();
        let s = random_coupling(&mut rng, &mu1, &nu1);
        let e = GroundCost::Euclidean;
        let both = carry_plan_both(&s, &mu2, &nu2, &e, &e).unwrap();
        let multi = carry_plan_multi(&MultiCoupling::from_coupling(&s), &[mu2, nu2], &[e.clone(), e]).unwrap();
        assert!((multi.lhs - both.lhs).abs() <= 1e-12 && (multi.rhs - both.rhs).abs() <= 1e-12);
        for (x, y) in multi.plan.mass().iter().zip(both.plan.mass().as_slice()) {
            assert!((x - y).abs() <= 1e-15);
        }
    }

    #[test]
    fn multi_identity_and_order() {
        let ms: Vec<DiscreteMeasure> = (0..3).map(|s| DiscreteMeasure::random(2, 1, 100 + s).unwrap()).collect();
        let news: Vec<DiscreteMeasure> = (0..3).map(|s| DiscreteMeasure::random(2, 1, 200 + s).unwrap()).collect();
        let sigma = MultiCoupling::product(ms.clone());
        let e = vec![GroundCost::Euclidean; 3];
        let same = carry_plan_multi(&sigma, &ms, &e).unwrap();
        assert!(same.lhs <= 1e-15 && same.rhs == 0.0);
        let fwd = carry_plan_multi(&sigma, &news, &e).unwrap();
        let rev = carry_plan_multi_ordered(&sigma, &news, &e, &[2, 1, 0]).unwrap();
        assert!((fwd.rhs - rev.rhs).abs() <= 1e-15);
        assert!(fwd.lhs <= fwd.rhs + MULTI_BOUND_TOL && rev.lhs <= rev.rhs + MULTI_BOUND_TOL);
        assert!(carry_plan_multi_ordered(&sigma, &news, &e, &[0, 0, 1]).is_err());
    }

    #[test]
    fn eps_carry() {
        let mut rng = Pcg64::seed_from_u64(31);
        let mu1 = DiscreteMeasure::random_with(&mut rng, 3, 2).unwrap();
        let nu = DiscreteMeasure::random_with(&mut rng, 3, 2).unwrap();
        let mu2 = DiscreteMeasure::random_with(&mut rng, 3, 2).unwrap();
        let s = random_coupling(&mut rng, &mu1, &nu);
        let e = GroundCost::Euclidean;
        let am = e.matrix(&mu1, &mu2).unwrap();
        let opt = solve_kantorovich(&mu1, &mu2, &am).unwrap();

        // exact optimum: same plan as the plain carry
        let exact = carry_plan_eps(&s, &mu2, &e, &e, 0.1, &opt.plan).unwrap();
        let plain = carry_plan(&s, &mu2, &e, &e).unwrap();
        assert!(exact.plan.mass().max_abs_diff(plain.plan.mass()) <= 1e-15);

        // product coupling with eps equal to its excess
        let prod = Coupling::product(&mu1, &mu2);
        let excess = prod.cost(&am) - opt.value;
        assert!(excess > 1e-3);
        let r = carry_plan_eps(&s, &mu2, &e, &e, excess, &prod).unwrap();
        assert!(r.lhs <= opt.value + excess + BOUND_TOL);
        assert!(matches!(carry_plan_eps(&s, &mu2, &e, &e, excess / 2.0, &prod), Err(Error::NotEpsOptimal { .. })));
        assert!(carry_plan_eps(&s, &mu2, &e, &e, 10.0, &prod).is_ok());
        assert!(carry_plan_eps(&s, &mu2, &e, &e, 0.0, &prod).is_err());
    }
}
