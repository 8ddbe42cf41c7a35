//! Seeded invariant suites over random instances.
//!
//! Each instance draws from its own generator, seeded from the suite seed and
//! the instance index, so instances can run in any order or in parallel and
//! still aggregate to the same summary.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;

use crate::gluing::{carry_plan, carry_plan_both, carry_plan_multi, carry_plan_wp, glue, BOUND_TOL, MULTI_BOUND_TOL};
use crate::hausdorff::{dist_to_polytope, hausdorff_exact};
use crate::metrics::{d_kantorovich, d_kantorovich_dual, d_kr, w_p, GroundCost};
use crate::solver::{enumerate_vertices, solve_kantorovich};
use crate::{Coupling, DiscreteMeasure, Error, Matrix, MultiCoupling, Point, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    /// Carry bounds: one-sided, two-sided, `W_p` for `p ∈ {1, 2}`, 3-marginal.
    Theorem1,
    /// Exact Hausdorff distance below the marginal-distance bound.
    Hausdorff,
    /// Convexity of the polytope distance along mixtures.
    Convexity,
    /// Metric axioms, the truncated-metric sandwich, primal/dual agreement.
    Metrics,
    /// Simplex against vertex enumeration, duality gap.
    Solver,
    /// Projections of glued couplings, preserved marginal of carried plans.
    Gluing,
}

impl Suite {
    pub const ALL: [Suite; 6] =
        [Suite::Theorem1, Suite::Hausdorff, Suite::Convexity, Suite::Metrics, Suite::Solver, Suite::Gluing];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Theorem1 => "theorem1",
            Suite::Hausdorff => "hausdorff",
            Suite::Convexity => "convexity",
            Suite::Metrics => "metrics",
            Suite::Solver => "solver",
            Suite::Gluing => "gluing",
        }
    }

    pub fn from_name(name: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|s| s.name() == name)
    }
}

/// One inequality `lhs ≤ rhs + tol`.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub tol: f64,
}

impl Check {
    pub fn new(name: &'static str, lhs: f64, rhs: f64, tol: f64) -> Self {
        Check { name, lhs, rhs, tol }
    }

    pub fn passed(&self) -> bool {
        self.lhs <= self.rhs + self.tol
    }

    pub fn excess(&self) -> f64 {
        self.lhs - self.rhs
    }
}

/// Aggregate for one check name.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckSummary {
    pub name: &'static str,
    pub count: usize,
    pub violations: usize,
    pub max_excess: f64,
    /// First violating instance, if any.
    pub first_violation: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteSummary {
    pub suite: Suite,
    pub seed: u64,
    pub instances: usize,
    pub checks: Vec<CheckSummary>,
}

impl SuiteSummary {
    pub fn violations(&self) -> usize {
        self.checks.iter().map(|c| c.violations).sum()
    }

    pub fn total_checks(&self) -> usize {
        self.checks.iter().map(|c| c.count).sum()
    }

    pub fn summary_line(&self) -> String {
        format!(
            "suite={} seed={} instances={} checks={} violations={}",
            self.suite.name(),
            self.seed,
            self.instances,
            self.total_checks(),
            self.violations()
        )
    }
}

/// Generator for instance `index` of a suite run with `seed`.
pub fn instance_rng(seed: u64, index: usize) -> Pcg64 {
    Pcg64::seed_from_u64(seed ^ (index as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Checks of one instance, in a fixed order.
pub fn run_instance(suite: Suite, seed: u64, index: usize) -> Result<Vec<Check>> {
    let mut rng = instance_rng(seed, index);
    match suite {
        Suite::Theorem1 => theorem1(&mut rng),
        Suite::Hausdorff => hausdorff(&mut rng),
        Suite::Convexity => convexity(&mut rng),
        Suite::Metrics => metrics(&mut rng),
        Suite::Solver => solver(&mut rng),
        Suite::Gluing => gluing(&mut rng),
    }
}

/// Aggregates per-instance checks given in instance order.
pub fn summarize(suite: Suite, seed: u64, per_instance: &[Vec<Check>]) -> SuiteSummary {
    let mut checks: Vec<CheckSummary> = Vec::new();
    for (idx, inst) in per_instance.iter().enumerate() {
        for c in inst {
            let pos = match checks.iter().position(|s| s.name == c.name) {
                Some(p) => p,
                None => {
                    checks.push(CheckSummary {
                        name: c.name,
                        count: 0,
                        violations: 0,
                        max_excess: f64::NEG_INFINITY,
                        first_violation: None,
                    });
                    checks.len() - 1
                }
            };
            let s = &mut checks[pos];
            s.count += 1;
            s.max_excess = s.max_excess.max(c.excess());
            if !c.passed() {
                s.violations += 1;
                s.first_violation.get_or_insert(idx);
            }
        }
    }
    SuiteSummary { suite, seed, instances: per_instance.len(), checks }
}

/// Runs `instances` instances sequentially.
pub fn run_suite(suite: Suite, seed: u64, instances: usize) -> Result<SuiteSummary> {
    let all = (0..instances).map(|i| run_instance(suite, seed, i)).collect::<Result<Vec<_>>>()?;
    Ok(summarize(suite, seed, &all))
}

// bound violations become failed checks; anything else is a real error
fn bound_check<T>(name: &'static str, tol: f64, r: Result<T>, sides: impl Fn(&T) -> (f64, f64)) -> Result<Check> {
    match r {
        Ok(v) => {
            let (lhs, rhs) = sides(&v);
            Ok(Check::new(name, lhs, rhs, tol))
        }
        Err(Error::BoundViolation { lhs, rhs, .. }) => Ok(Check::new(name, lhs, rhs, tol)),
        Err(e) => Err(e),
    }
}

fn measure(rng: &mut Pcg64, max_atoms: usize, dim: usize, scale: f64) -> Result<DiscreteMeasure> {
    let n = rng.gen_range(1..=max_atoms);
    let pts =
        (0..n).map(|_| Point::new((0..dim).map(|_| scale * rng.gen::<f64>()).collect())).collect::<Result<Vec<_>>>()?;
    let ws = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    DiscreteMeasure::new(pts, ws)
}

fn sized(rng: &mut Pcg64, n: usize, dim: usize) -> Result<DiscreteMeasure> {
    DiscreteMeasure::random_with(rng, n, dim)
}

// a mixture of an optimal vertex for a random cost and the product coupling
fn coupling(rng: &mut Pcg64, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<Coupling> {
    let c = Matrix::from_fn(mu.len(), nu.len(), |_, _| rng.gen::<f64>());
    let vertex = solve_kantorovich(mu, nu, &c)?.plan;
    let lambda = if rng.gen_bool(0.3) { 0.0 } else { rng.gen::<f64>() };
    vertex.mix(&Coupling::product(mu, nu), lambda)
}

fn theorem1(rng: &mut Pcg64) -> Result<Vec<Check>> {
    let dim = rng.gen_range(1..=2);
    let mu1 = measure(rng, 5, dim, 1.0)?;
    let nu1 = measure(rng, 5, dim, 1.0)?;
    let mu2 = measure(rng, 5, dim, 1.0)?;
    let nu2 = measure(rng, 5, dim, 1.0)?;
    let sigma = coupling(rng, &mu1, &nu1)?;
    let e = GroundCost::Euclidean;
    let side = |c: &crate::gluing::Carry| (c.lhs, c.rhs);
    let mut out = vec![
        bound_check("carry_plan", BOUND_TOL, carry_plan(&sigma, &mu2, &e, &e), side)?,
        bound_check("carry_plan_both", BOUND_TOL, carry_plan_both(&sigma, &mu2, &nu2, &e, &e), side)?,
        bound_check("carry_plan_wp_p1", BOUND_TOL, carry_plan_wp(&sigma, &mu2, &nu2, 1.0), side)?,
        bound_check("carry_plan_wp_p2", BOUND_TOL, carry_plan_wp(&sigma, &mu2, &nu2, 2.0), side)?,
    ];
    let olds: Vec<DiscreteMeasure> = (0..3).map(|_| measure(rng, 3, dim, 1.0)).collect::<Result<_>>()?;
    let news: Vec<DiscreteMeasure> = (0..3).map(|_| measure(rng, 3, dim, 1.0)).collect::<Result<_>>()?;
    let c01 = coupling(rng, &olds[0], &olds[1])?;
    let c12 = coupling(rng, &olds[1], &olds[2])?;
    let multi = glue(&c01, &c12)?;
    let r = carry_plan_multi(&multi, &news, &[e.clone(), e.clone(), e]);
    out.push(bound_check("carry_plan_multi_n3", MULTI_BOUND_TOL.min(BOUND_TOL), r, |c| (c.lhs, c.rhs))?);
    Ok(out)
}

fn hausdorff(rng: &mut Pcg64) -> Result<Vec<Check>> {
    let ms: Vec<DiscreteMeasure> = (0..4).map(|_| sized(rng, 2, 1)).collect::<Result<_>>()?;
    let e = GroundCost::Euclidean;
    let r = hausdorff_exact(&ms[0], &ms[1], &ms[2], &ms[3], &e, &e)?;
    Ok(vec![Check::new("hausdorff_exact_le_upper", r.exact.unwrap_or(0.0), r.upper_bound, 1e-8)])
}

fn convexity(rng: &mut Pcg64) -> Result<Vec<Check>> {
    let mu1 = measure(rng, 3, 1, 1.0)?;
    let nu1 = measure(rng, 3, 1, 1.0)?;
    let mu2 = measure(rng, 3, 1, 1.0)?;
    let nu2 = measure(rng, 3, 1, 1.0)?;
    let s = coupling(rng, &mu1, &nu1)?;
    let s2 = coupling(rng, &mu1, &nu1)?;
    let lambda = rng.gen::<f64>();
    let e = GroundCost::Euclidean;
    let d = |c: &Coupling| dist_to_polytope(c, &mu2, &nu2, &e, &e);
    let lhs = d(&s.mix(&s2, lambda)?)?;
    let rhs = (1.0 - lambda) * d(&s)? + lambda * d(&s2)?;
    Ok(vec![Check::new("polytope_distance_convex", lhs, rhs, 1e-9)])
}

fn metrics(rng: &mut Pcg64) -> Result<Vec<Check>> {
    let dim = rng.gen_range(1..=2);
    let scale = if rng.gen_bool(0.5) { 1.0 } else { 3.0 };
    let a = measure(rng, 4, dim, scale)?;
    let b = measure(rng, 4, dim, scale)?;
    let c = measure(rng, 4, dim, scale)?;
    let e = GroundCost::Euclidean;
    let tol = 1e-9;
    let mut out = Vec::new();

    type Dist<'a> = &'a dyn Fn(&DiscreteMeasure, &DiscreteMeasure) -> Result<f64>;
    let dk = |x: &DiscreteMeasure, y: &DiscreteMeasure| d_kantorovich(x, y, &e);
    let dkr = |x: &DiscreteMeasure, y: &DiscreteMeasure| d_kr(x, y, &e);
    let w1 = |x: &DiscreteMeasure, y: &DiscreteMeasure| w_p(x, y, 1.0);
    let w2 = |x: &DiscreteMeasure, y: &DiscreteMeasure| w_p(x, y, 2.0);
    let named: [(&'static str, &'static str, &'static str, &'static str, Dist); 4] = [
        ("d_k_identity", "d_k_symmetry", "d_k_triangle", "d_k_nonnegative", &dk),
        ("d_kr_identity", "d_kr_symmetry", "d_kr_triangle", "d_kr_nonnegative", &dkr),
        ("w1_identity", "w1_symmetry", "w1_triangle", "w1_nonnegative", &w1),
        ("w2_identity", "w2_symmetry", "w2_triangle", "w2_nonnegative", &w2),
    ];
    for (id, sym, tri, nonneg, d) in named {
        let (ab, ba, bc, ac) = (d(&a, &b)?, d(&b, &a)?, d(&b, &c)?, d(&a, &c)?);
        out.push(Check::new(id, d(&a, &a)?.abs(), 0.0, tol));
        out.push(Check::new(sym, (ab - ba).abs(), 0.0, tol));
        out.push(Check::new(tri, ac, ab + bc, tol));
        out.push(Check::new(nonneg, -ab, 0.0, tol));
    }

    let truncated = d_kantorovich(&a, &b, &GroundCost::Truncated)?;
    let kr = d_kr(&a, &b, &e)?;
    out.push(Check::new("sandwich_lower", 0.5 * truncated, kr, tol));
    out.push(Check::new("sandwich_upper", kr, 2.0 * truncated, tol));

    let primal = d_kantorovich(&a, &b, &e)?;
    let dual = d_kantorovich_dual(&a, &b, &e)?.value;
    out.push(Check::new("d_k_primal_dual", (primal - dual).abs(), 0.0, 1e-8));
    Ok(out)
}

fn solver(rng: &mut Pcg64) -> Result<Vec<Check>> {
    let mu = measure(rng, 4, 1, 1.0)?;
    let nu = measure(rng, 4, 1, 1.0)?;
    let cost = if rng.gen_bool(0.5) {
        Matrix::from_fn(mu.len(), nu.len(), |_, _| rng.gen::<f64>())
    } else {
        // integer costs produce degenerate ties
        Matrix::from_fn(mu.len(), nu.len(), |_, _| rng.gen_range(0..3) as f64)
    };
    let r = solve_kantorovich(&mu, &nu, &cost)?;
    let oracle = enumerate_vertices(&mu, &nu)?.min_cost(&cost);
    let (feas, _) = r.dual_residuals(&cost);
    Ok(vec![
        Check::new("simplex_vs_vertices", (r.value - oracle).abs(), 0.0, 1e-9),
        Check::new("duality_gap", (r.value - r.dual_value()).abs(), 0.0, 1e-8),
        Check::new("dual_feasibility", feas, 0.0, 1e-8),
    ])
}

fn gluing(rng: &mut Pcg64) -> Result<Vec<Check>> {
    let dim = rng.gen_range(1..=2);
    let m1 = measure(rng, 4, dim, 1.0)?;
    let m2 = measure(rng, 4, dim, 1.0)?;
    let m3 = measure(rng, 4, dim, 1.0)?;
    let c12 = coupling(rng, &m1, &m2)?;
    let c23 = coupling(rng, &m2, &m3)?;
    let lam: MultiCoupling = glue(&c12, &c23)?;
    let r12 = lam.project_pair(0, 1)?.mass().max_abs_diff(c12.mass());
    let r23 = lam.project_pair(1, 2)?.mass().max_abs_diff(c23.mass());

    let mu2 = measure(rng, 4, dim, 1.0)?;
    let e = GroundCost::Euclidean;
    let carried = carry_plan(&c12, &mu2, &e, &e)?;
    let before = c12.mass().col_sums();
    let after = carried.plan.mass().col_sums();
    let drift = before.iter().zip(&after).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    Ok(vec![
        Check::new("glue_projection_12", r12, 0.0, 1e-10),
        Check::new("glue_projection_23", r23, 0.0, 1e-10),
        Check::new("carry_second_marginal", drift, 0.0, 1e-10),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(Suite::from_name(s.name()), Some(s));
        }
        assert_eq!(Suite::from_name("nope"), None);
    }

    #[test]
    fn instances_are_reproducible() {
        for s in Suite::ALL {
            assert_eq!(run_instance(s, 9, 3).unwrap(), run_instance(s, 9, 3).unwrap());
        }
    }

    #[test]
    fn small_runs_pass() {
        for s in Suite::ALL {
            let sum = run_suite(s, 1, 10).unwrap();
            assert_eq!(sum.violations(), 0, "{}", sum.summary_line());
            assert!(sum.total_checks() >= 10);
        }
    }

    #[test]
    fn summary_counts_violations() {
        let inst = vec![vec![Check::new("a", 1.0, 0.0, 0.5)], vec![Check::new("a", 0.0, 0.0, 0.0)]];
        let s = summarize(Suite::Solver, 0, &inst);
        assert_eq!(s.violations(), 1);
        assert_eq!(s.checks[0].first_violation, Some(0));
        assert_eq!(s.checks[0].max_excess, 1.0);
    }
}
