//! Parameter-dependent transport problems `t ↦ (μ_t, ν_t, h_t)`.
//!
//! [`sweep_value`] solves every grid point and records the value, the solver
//! plan and the `d_KR` jump between consecutive plans (plans are measures on
//! `X × Y` with the sum of the factor metrics). [`select_eps_optimal_path`]
//! builds a path of `ε`-optimal plans by carrying the previous plan to the
//! new marginals and mixing in as little of the exact optimum as needed.
//!
//! The path selection is a heuristic: it always returns `ε`-optimal plans,
//! but continuity of the path is only observed, not guaranteed.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::gluing::carry_plan_both;
use crate::measures::{Point, PointFn, ShiftMap};
use crate::metrics::{d_kr, GroundCost};
use crate::solver::{optimum_is_unique, solve_kantorovich};
use crate::{CostSpec, Coupling, DiscreteMeasure, Error, Matrix, Result, TransportResult};

pub type MeasureFn = Box<dyn Fn(f64) -> Result<DiscreteMeasure> + Send + Sync>;
pub type CostFn = Box<dyn Fn(f64) -> CostSpec + Send + Sync>;

/// Bisection steps used to find the smallest admissible mixing weight.
pub const MIX_BISECTIONS: usize = 40;
/// Slack allowed on `ε`-optimality of path plans.
pub const EPS_TOL: f64 = 1e-9;

/// Pointwise domination `h_t(x, y) ≤ a_t(x) + b_t(y)`.
pub enum Envelope {
    Functions {
        a: PointFn,
        b: PointFn,
    },
    /// `a_t = b_t = max h_t` over the supports at `t`.
    AutoBounded,
}

pub struct ParamFamily {
    t_grid: Vec<f64>,
    mu: MeasureFn,
    nu: MeasureFn,
    cost: CostFn,
    envelope: Option<Envelope>,
}

impl core::fmt::Debug for ParamFamily {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ParamFamily").field("t_grid", &self.t_grid).finish_non_exhaustive()
    }
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::InvalidInput("parameter grid is empty".into()));
    }
    if t_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite("parameter grid"));
    }
    if t_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("parameter grid must be strictly increasing".into()));
    }
    Ok(())
}

impl ParamFamily {
    pub fn new(t_grid: Vec<f64>, mu: MeasureFn, nu: MeasureFn, cost: CostFn) -> Result<Self> {
        check_grid(&t_grid)?;
        Ok(ParamFamily { t_grid, mu, nu, cost, envelope: None })
    }

    /// Family with `t`-independent marginals.
    pub fn fixed_marginals(t_grid: Vec<f64>, mu: DiscreteMeasure, nu: DiscreteMeasure, cost: CostFn) -> Result<Self> {
        Self::new(t_grid, Box::new(move |_| Ok(mu.clone())), Box::new(move |_| Ok(nu.clone())), cost)
    }

    pub fn with_envelope(mut self, envelope: Envelope) -> Self {
        self.envelope = Some(envelope);
        self
    }

    pub fn with_grid(mut self, t_grid: Vec<f64>) -> Result<Self> {
        check_grid(&t_grid)?;
        self.t_grid = t_grid;
        Ok(self)
    }

    pub fn t_grid(&self) -> &[f64] {
        &self.t_grid
    }

    pub fn envelope(&self) -> Option<&Envelope> {
        self.envelope.as_ref()
    }

    pub fn measures_at(&self, t: f64) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
        Ok(((self.mu)(t)?, (self.nu)(t)?))
    }

    pub fn cost_at(&self, t: f64) -> CostSpec {
        (self.cost)(t)
    }

    /// Solves the problem at `t`.
    pub fn solve_at(&self, t: f64) -> Result<SolvedPoint> {
        let (mu, nu) = self.measures_at(t)?;
        let cost = self.cost_at(t).eval(&mu, &nu)?;
        let result = solve_kantorovich(&mu, &nu, &cost)?;
        Ok(SolvedPoint { t, cost, result })
    }
}

/// Solver output at one parameter value.
#[derive(Debug, Clone)]
pub struct SolvedPoint {
    pub t: f64,
    pub cost: Matrix,
    pub result: TransportResult,
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub t: f64,
    pub value: f64,
    pub plan: Coupling,
    /// `d_KR` to the previous row's plan; `0` on the first row.
    pub plan_jump_prev: f64,
    /// Cost of the recorded plan minus the optimal value.
    pub eps_slack: f64,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    /// Assembles a report from solved points in grid order.
    pub fn from_points(points: Vec<SolvedPoint>) -> Result<Self> {
        let mut rows: Vec<SweepRow> = Vec::with_capacity(points.len());
        for p in points {
            let plan_jump_prev = match rows.last() {
                Some(prev) => plan_distance(&prev.plan, &p.result.plan)?,
                None => 0.0,
            };
            let eps_slack = (p.result.plan.cost(&p.cost) - p.result.value).max(0.0);
            rows.push(SweepRow { t: p.t, value: p.result.value, plan: p.result.plan, plan_jump_prev, eps_slack });
        }
        Ok(SweepReport { rows })
    }

    pub fn max_value_jump(&self) -> f64 {
        self.rows.windows(2).map(|w| (w[1].value - w[0].value).abs()).fold(0.0, f64::max)
    }

    pub fn max_plan_jump(&self) -> f64 {
        self.rows.iter().map(|r| r.plan_jump_prev).fold(0.0, f64::max)
    }
}

/// `d_KR` between two plans as measures on `X × Y` with metric
/// `|x − x'| + |y − y'|`.
pub fn plan_distance(a: &Coupling, b: &Coupling) -> Result<f64> {
    let split = a.row_measure().dim();
    if b.row_measure().dim() != split || a.col_measure().dim() != b.col_measure().dim() {
        return Err(Error::DimensionMismatch { expected: split, found: b.row_measure().dim() });
    }
    d_kr(&a.as_measure(), &b.as_measure(), &GroundCost::product_metric(split))
}

/// Solves every grid point in order.
pub fn sweep_value(family: &ParamFamily) -> Result<SweepReport> {
    let points = family.t_grid.iter().map(|&t| family.solve_at(t)).collect::<Result<Vec<_>>>()?;
    SweepReport::from_points(points)
}

/// Envelope domination failure at one support pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DominationViolation {
    pub t: f64,
    pub i: usize,
    pub j: usize,
    pub cost: f64,
    pub bound: f64,
}

#[derive(Debug, Clone)]
pub struct IntegrabilityReport {
    /// `(R, sup_t ∫_{a_t ≥ R} a_t dμ_t + ∫_{b_t ≥ R} b_t dν_t)`.
    pub tails: Vec<(f64, f64)>,
    /// Tail at the largest `R` is at most the threshold.
    pub vanishes: bool,
    pub violations: Vec<DominationViolation>,
}

/// Tail table of the envelope over `r_grid`, plus a domination check
/// `h_t ≤ a_t + b_t` on all support pairs of every grid point.
pub fn check_uniform_integrability(
    family: &ParamFamily,
    r_grid: &[f64],
    threshold: f64,
) -> Result<IntegrabilityReport> {
    let env = family.envelope.as_ref().ok_or_else(|| Error::InvalidInput("family has no envelope".into()))?;
    if r_grid.is_empty() {
        return Err(Error::InvalidInput("empty R grid".into()));
    }
    let mut tails: Vec<(f64, f64)> = r_grid.iter().map(|&r| (r, 0.0)).collect();
    let mut violations = Vec::new();
    for &t in &family.t_grid {
        let (mu, nu) = family.measures_at(t)?;
        let h = family.cost_at(t).eval(&mu, &nu)?;
        let (a, b): (Vec<f64>, Vec<f64>) = match env {
            Envelope::Functions { a, b } => {
                (mu.points().iter().map(|x| a(t, x)).collect(), nu.points().iter().map(|y| b(t, y)).collect())
            }
            Envelope::AutoBounded => {
                let top = h.max_abs();
                (alloc::vec![top; mu.len()], alloc::vec![top; nu.len()])
            }
        };
        if a.iter().chain(&b).any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput(format!("envelope at t = {t} must be finite and nonnegative")));
        }
        for (i, j, c) in h.iter() {
            let bound = a[i] + b[j];
            if c > bound + 1e-12 {
                violations.push(DominationViolation { t, i, j, cost: c, bound });
            }
        }
        for (r, sup) in tails.iter_mut() {
            let tail = tail_mass(&a, mu.weights(), *r) + tail_mass(&b, nu.weights(), *r);
            *sup = sup.max(tail);
        }
    }
    let vanishes = tails.last().is_none_or(|&(_, v)| v <= threshold);
    Ok(IntegrabilityReport { tails, vanishes, violations })
}

fn tail_mass(f: &[f64], w: &[f64], r: f64) -> f64 {
    f.iter().zip(w).filter(|(v, _)| **v >= r).map(|(v, w)| v * w).sum()
}

/// Side from which grid points approach `t_star`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Approach {
    Left,
    Right,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Distances are nonincreasing and end below the tolerance.
    Consistent,
    NonConvergent,
    /// The limit optimum is not unique or uniqueness could not be probed.
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct PlanConvergence {
    /// `(t, d_KR(σ_t, σ_{t*}))`, farthest point first.
    pub distances: Vec<(f64, f64)>,
    pub unique_at_limit: Option<bool>,
    pub verdict: Verdict,
}

/// Distances from solver plans along the grid to the plan at `t_star`.
pub fn check_plan_convergence(
    family: &ParamFamily,
    t_star: f64,
    approach: Approach,
    tol: f64,
) -> Result<PlanConvergence> {
    let (lo, hi) = (family.t_grid[0], *family.t_grid.last().unwrap());
    if !(t_star >= lo && t_star <= hi) {
        return Err(Error::InvalidInput(format!("t_star {t_star} outside [{lo}, {hi}]")));
    }
    let limit = family.solve_at(t_star)?;
    let (mu, nu) = family.measures_at(t_star)?;
    let unique_at_limit = optimum_is_unique(&mu, &nu, &limit.cost)?;

    let mut ts: Vec<f64> = family
        .t_grid
        .iter()
        .copied()
        .filter(|&t| match approach {
            Approach::Left => t < t_star,
            Approach::Right => t > t_star,
            Approach::Both => t != t_star,
        })
        .collect();
    ts.sort_by(|a, b| (b - t_star).abs().total_cmp(&(a - t_star).abs()));
    let mut distances = Vec::with_capacity(ts.len());
    for t in ts {
        let p = family.solve_at(t)?;
        distances.push((t, plan_distance(&p.result.plan, &limit.result.plan)?));
    }

    let verdict = if unique_at_limit != Some(true) {
        Verdict::Inconclusive
    } else {
        let monotone = distances.windows(2).all(|w| w[1].1 <= w[0].1 + tol);
        let last = distances.last().map_or(0.0, |d| d.1);
        if monotone && last <= tol {
            Verdict::Consistent
        } else {
            Verdict::NonConvergent
        }
    };
    Ok(PlanConvergence { distances, unique_at_limit, verdict })
}

#[derive(Debug, Clone)]
pub struct PathRow {
    pub t: f64,
    pub value: f64,
    pub plan: Coupling,
    /// Weight of the exact optimum in the mixture.
    pub lambda: f64,
    /// Plan cost minus the optimal value; at most `ε`.
    pub excess: f64,
    pub plan_jump_prev: f64,
}

#[derive(Debug, Clone)]
pub struct EpsPath {
    pub eps: f64,
    pub rows: Vec<PathRow>,
}

impl EpsPath {
    pub fn max_plan_jump(&self) -> f64 {
        self.rows.iter().map(|r| r.plan_jump_prev).fold(0.0, f64::max)
    }
}

/// Path of `ε`-optimal plans: start at the solver optimum, then at each grid
/// point carry the previous plan to the new marginals (euclidean grounds on
/// both factors) and mix with the solver optimum using the smallest weight
/// that keeps the mixture `ε`-optimal.
pub fn select_eps_optimal_path(family: &ParamFamily, eps: f64) -> Result<EpsPath> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    let e = GroundCost::Euclidean;
    let mut rows: Vec<PathRow> = Vec::with_capacity(family.t_grid.len());
    for &t in &family.t_grid {
        let p = family.solve_at(t)?;
        let k = p.result.value;
        let (plan, lambda) = match rows.last() {
            None => (p.result.plan.clone(), 1.0),
            Some(prev) => {
                let (mu, nu) = (p.result.plan.row_measure(), p.result.plan.col_measure());
                let carried = carry_plan_both(&prev.plan, mu, nu, &e, &e)?.plan;
                let ok = |lam: f64| -> Result<Option<Coupling>> {
                    let m = carried.mix(&p.result.plan, lam)?;
                    Ok((m.cost(&p.cost) <= k + eps).then_some(m))
                };
                if let Some(m) = ok(0.0)? {
                    (m, 0.0)
                } else {
                    let (mut lo, mut hi) = (0.0, 1.0);
                    for _ in 0..MIX_BISECTIONS {
                        let mid = 0.5 * (lo + hi);
                        if ok(mid)?.is_some() {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                    (carried.mix(&p.result.plan, hi)?, hi)
                }
            }
        };
        let excess = plan.cost(&p.cost) - k;
        if excess > eps + EPS_TOL {
            return Err(Error::BoundViolation { what: "eps-optimal path", lhs: excess, rhs: eps });
        }
        let plan_jump_prev = match rows.last() {
            Some(prev) => plan_distance(&prev.plan, &plan)?,
            None => 0.0,
        };
        rows.push(PathRow { t, value: k, plan, lambda, excess: excess.max(0.0), plan_jump_prev });
    }
    Ok(EpsPath { eps, rows })
}

/// Names accepted by [`gallery`].
pub const GALLERY: [&str; 2] = ["example-fg", "example-A"];

/// Number of `1/k` points in the `example-fg` grid.
pub const FG_TERMS: usize = 16;

/// Built-in families on `uniform_grid(n, 0, 1)` marginals.
///
/// * `example-fg`: `t ∈ {0} ∪ {1/k : k = 1..16}`, cost `t·|y − x|²` when
///   `round(1/t)` is odd and `t·|y − (1 − x)|²` when it is even (zero at
///   `t = 0`). The unique optimum alternates between the diagonal and the
///   anti-diagonal coupling, so plans do not converge as `t → 0`.
/// * `example-A`: `t ∈ {−0.5, −0.49, …, 0.5}`, cost
///   [`CostSpec::DiagonalSwitch`]. The value is `0` for every `t`, the optimum
///   is the diagonal for `t > 0`, the anti-diagonal for `t < 0` and not unique
///   at `t = 0`.
///
/// Both costs are bounded by `1`, so the envelope is `a_t = 1, b_t = 0`.
pub fn gallery(name: &str, n: usize) -> Result<ParamFamily> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("gallery grid needs n >= 2, got {n}")));
    }
    let grid = DiscreteMeasure::uniform_grid(n, 0.0, 1.0)?;
    let (t_grid, cost): (Vec<f64>, CostFn) = match name {
        "example-fg" => {
            let mut ts: Vec<f64> = (1..=FG_TERMS).rev().map(|k| 1.0 / k as f64).collect();
            ts.insert(0, 0.0);
            (ts, Box::new(fg_cost))
        }
        "example-A" => {
            let ts = (0..=100).map(|i| (i as f64 - 50.0) / 100.0).collect();
            (ts, Box::new(|t| CostSpec::DiagonalSwitch { t }))
        }
        other => {
            return Err(Error::InvalidInput(format!("unknown gallery family {other:?}; expected one of {GALLERY:?}")));
        }
    };
    let env = Envelope::Functions { a: Box::new(|_, _: &Point| 1.0), b: Box::new(|_, _: &Point| 0.0) };
    Ok(ParamFamily::fixed_marginals(t_grid, grid.clone(), grid, cost)?.with_envelope(env))
}

fn fg_cost(t: f64) -> CostSpec {
    if t <= 0.0 {
        return CostSpec::SquaredShift { scale: 0.0, map: ShiftMap::Identity };
    }
    let k = libm::round(1.0 / t) as u64;
    let map = if k % 2 == 1 { ShiftMap::Identity } else { ShiftMap::Reflection };
    CostSpec::SquaredShift { scale: t, map }
}

/// Uniform grid of `points` values from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return alloc::vec![lo];
    }
    let half = (points - 1) as f64;
    (0..points).map(|i| lo + (hi - lo) * (i as f64) / half).collect()
}

/// Verdict name used in reports.
pub fn verdict_name(v: Verdict) -> String {
    match v {
        Verdict::Consistent => "consistent with weak convergence".into(),
        Verdict::NonConvergent => "non-convergent".into(),
        Verdict::Inconclusive => "inconclusive (non-unique optimum)".into(),
    }
}
