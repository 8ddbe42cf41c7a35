//! Monge maps between discrete measures.
//!
//! On a finite space every map is continuous, so these checks only test the
//! conclusions of convergence statements (deviation masses, total
//! variation), never the measure-theoretic machinery behind them.

use alloc::format;
use alloc::vec::Vec;

use crate::metrics::signed_difference;
use crate::solver::solve_kantorovich;
use crate::{CostSpec, Coupling, DiscreteMeasure, Error, Matrix, Point, Result};

/// Tolerance on the `K ≤ M` check.
pub const MONGE_TOL: f64 = 1e-10;
/// Cumulative-mass tolerance for monotone alignment.
pub const ALIGN_TOL: f64 = 1e-12;

/// A map given on finitely many source atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct MongeMap {
    sources: Vec<Point>,
    images: Vec<Point>,
}

impl MongeMap {
    pub fn new(sources: Vec<Point>, images: Vec<Point>) -> Result<Self> {
        if sources.len() != images.len() {
            return Err(Error::DimensionMismatch { expected: sources.len(), found: images.len() });
        }
        Ok(MongeMap { sources, images })
    }

    pub fn from_fn(mu: &DiscreteMeasure, f: impl FnMut(&Point) -> Point) -> Self {
        let sources = mu.points().to_vec();
        let images = sources.iter().map(f).collect();
        MongeMap { sources, images }
    }

    pub fn identity(mu: &DiscreteMeasure) -> Self {
        Self::from_fn(mu, Point::clone)
    }

    pub fn sources(&self) -> &[Point] {
        &self.sources
    }

    pub fn images(&self) -> &[Point] {
        &self.images
    }

    pub fn lookup(&self, x: &Point) -> Option<&Point> {
        self.sources.iter().position(|s| s.is_close(x)).map(|k| &self.images[k])
    }

    fn images_of(&self, mu: &DiscreteMeasure) -> Result<Vec<Point>> {
        mu.points().iter().enumerate().map(|(i, x)| self.lookup(x).cloned().ok_or(Error::UndefinedAtom(i))).collect()
    }
}

/// `μ∘T⁻¹`: distinct images with summed preimage masses.
pub fn pushforward(mu: &DiscreteMeasure, map: &MongeMap) -> Result<DiscreteMeasure> {
    DiscreteMeasure::new(map.images_of(mu)?, mu.weights().to_vec())
}

/// The coupling putting mass `μ_i` at `(x_i, T(x_i))`.
pub fn induced_coupling(mu: &DiscreteMeasure, map: &MongeMap) -> Result<Coupling> {
    let images = map.images_of(mu)?;
    let target = DiscreteMeasure::new(images.clone(), mu.weights().to_vec())?;
    let mut mass = Matrix::zeros(mu.len(), target.len());
    for (i, y) in images.iter().enumerate() {
        let j = target.index_of(y).ok_or_else(|| Error::InvariantViolation("image missing from pushforward".into()))?;
        mass[(i, j)] += mu.weights()[i];
    }
    Coupling::new(mu.clone(), target, mass)
}

/// `Σ μ_i h(x_i, T(x_i))`, checked against `K_h(μ, T_*μ)`.
pub fn monge_cost(mu: &DiscreteMeasure, map: &MongeMap, cost: &CostSpec) -> Result<f64> {
    let plan = induced_coupling(mu, map)?;
    let c = cost.eval(plan.row_measure(), plan.col_measure())?;
    let m = plan.cost(&c);
    let k = solve_kantorovich(plan.row_measure(), plan.col_measure(), &c)?.value;
    if m < k - MONGE_TOL {
        return Err(Error::BoundViolation { what: "Kantorovich <= Monge", lhs: k, rhs: m });
    }
    Ok(m)
}

/// Nondecreasing rearrangement of `μ` onto `ν` on the line. `None` when some
/// atom of `μ` would have to split its mass between atoms of `ν`.
pub fn monotone_map_1d(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<Option<MongeMap>> {
    for d in [mu.dim(), nu.dim()] {
        if d != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: d });
        }
    }
    let order = |m: &DiscreteMeasure| {
        let mut idx: Vec<usize> = (0..m.len()).collect();
        idx.sort_by(|&a, &b| m.points()[a].coords()[0].total_cmp(&m.points()[b].coords()[0]));
        idx
    };
    let (om, on) = (order(mu), order(nu));
    let mut images = alloc::vec![Point::scalar(0.0); mu.len()];
    let (mut fm, mut gn, mut j) = (0.0, nu.weights()[on[0]], 0);
    for &i in &om {
        let start = fm;
        fm += mu.weights()[i];
        while start >= gn - ALIGN_TOL && j + 1 < on.len() {
            j += 1;
            gn += nu.weights()[on[j]];
        }
        if fm > gn + ALIGN_TOL {
            return Ok(None);
        }
        images[i] = nu.points()[on[j]].clone();
    }
    Ok(Some(MongeMap { sources: mu.points().to_vec(), images }))
}

/// `½ Σ |μ − ν|` over the union of supports.
pub fn total_variation(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    let (_, g) = signed_difference(mu, nu)?;
    Ok(0.5 * g.iter().map(|x| x.abs()).sum::<f64>())
}

#[derive(Debug, Clone)]
pub struct DeviationRow {
    /// 1-based index into the map sequence.
    pub n: usize,
    pub delta: f64,
    pub mass: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceTable {
    pub rows: Vec<DeviationRow>,
    /// Per `δ`: masses are nonincreasing in `n` and the last one is `0`.
    pub verdicts: Vec<(f64, bool)>,
}

/// `μ₀(x : |T_n(x) − T₀(x)| ≥ δ)` for every map and every `δ`.
pub fn convergence_in_measure(
    mu0: &DiscreteMeasure,
    maps: &[MongeMap],
    t0: &MongeMap,
    delta_grid: &[f64],
) -> Result<ConvergenceTable> {
    if delta_grid.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::InvalidInput("deltas must be positive".into()));
    }
    let base = t0.images_of(mu0)?;
    let mut dev = Vec::with_capacity(maps.len());
    for m in maps {
        let im = m.images_of(mu0)?;
        dev.push(im.iter().zip(&base).map(|(a, b)| a.euclidean(b)).collect::<Vec<_>>());
    }
    let mut rows = Vec::new();
    let mut verdicts = Vec::new();
    for &delta in delta_grid {
        let masses: Vec<f64> = dev
            .iter()
            .map(|d| d.iter().zip(mu0.weights()).filter(|(x, _)| **x >= delta).map(|(_, w)| w).sum())
            .collect();
        let ok = masses.windows(2).all(|w| w[1] <= w[0]) && masses.last().is_none_or(|&m| m == 0.0);
        verdicts.push((delta, ok));
        rows.extend(masses.into_iter().enumerate().map(|(k, mass)| DeviationRow { n: k + 1, delta, mass }));
    }
    Ok(ConvergenceTable { rows, verdicts })
}

/// A perturbed sequence `μ_n → μ₀`, `ν_n → ν₀` with monotone optimal maps.
#[derive(Debug, Clone)]
pub struct MongeScenario {
    pub mu0: DiscreteMeasure,
    pub t0: MongeMap,
    pub maps: Vec<MongeMap>,
    /// `TV(μ_n, μ₀)` for `n = 1..`.
    pub tv: Vec<f64>,
}

/// `μ₀ = uniform_grid(atoms)`, `μ_n` the grid reweighted by
/// `(1 + ψ_i / n) / atoms` with `ψ_i = ±½` centered, `ν_n` the image of
/// `μ_n` under `x ↦ x + ½ + 0.3 x² / n`. Each `T_n` is the monotone map from
/// `μ_n` to `ν_n`, checked optimal for the cost `(1 + 1/n)|x − y|²`.
pub fn shifted_grid_scenario(atoms: usize, n_max: usize) -> Result<MongeScenario> {
    if atoms < 2 || n_max == 0 {
        return Err(Error::InvalidInput(format!("scenario needs atoms >= 2 and n_max >= 1, got {atoms}, {n_max}")));
    }
    let mu0 = DiscreteMeasure::uniform_grid(atoms, 0.0, 1.0)?;
    let t0 = MongeMap::from_fn(&mu0, |x| Point::scalar(x.coords()[0] + 0.5));
    let psi: Vec<f64> = (0..atoms).map(|i| if i % 2 == 0 { 0.5 } else { -0.5 }).collect();
    let psi_sum: f64 = psi.iter().sum();
    let mut maps = Vec::with_capacity(n_max);
    let mut tv = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let nf = n as f64;
        let w: Vec<f64> = psi.iter().map(|p| (1.0 + (p - psi_sum / atoms as f64) / nf) / atoms as f64).collect();
        let mu_n = mu0.reweighted(w)?;
        tv.push(total_variation(&mu_n, &mu0)?);
        let s_n = MongeMap::from_fn(&mu_n, |x| {
            let v = x.coords()[0];
            Point::scalar(v + 0.5 + 0.3 * v * v / nf)
        });
        let nu_n = pushforward(&mu_n, &s_n)?;
        let t_n = monotone_map_1d(&mu_n, &nu_n)?
            .ok_or_else(|| Error::InvariantViolation("monotone map does not exist".into()))?;
        let cost = CostSpec::SquaredShift { scale: 1.0 + 1.0 / nf, map: crate::ShiftMap::Identity };
        let plan = induced_coupling(&mu_n, &t_n)?;
        let c = cost.eval(plan.row_measure(), plan.col_measure())?;
        let k = solve_kantorovich(plan.row_measure(), plan.col_measure(), &c)?.value;
        if plan.cost(&c) > k + 1e-9 {
            return Err(Error::InvariantViolation(format!("monotone map not optimal at n = {n}")));
        }
        maps.push(t_n);
    }
    Ok(MongeScenario { mu0, t0, maps, tv })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::optimum_is_unique;

    fn pts(xs: &[f64]) -> Vec<Point> {
        xs.iter().map(|&x| Point::scalar(x)).collect()
    }

    #[test]
    fn pushforward_basics() {
        let mu = DiscreteMeasure::uniform(pts(&[0.0, 1.0])).unwrap();
        assert_eq!(pushforward(&mu, &MongeMap::identity(&mu)).unwrap(), mu);
        let c = MongeMap::from_fn(&mu, |_| Point::scalar(0.3));
        assert_eq!(pushforward(&mu, &c).unwrap(), DiscreteMeasure::dirac(Point::scalar(0.3)));
        let r = MongeMap::from_fn(&mu, |x| Point::scalar(1.0 - x.coords()[0]));
        let p = pushforward(&mu, &r).unwrap();
        assert!(p.same_support(&DiscreteMeasure::uniform(pts(&[1.0, 0.0])).unwrap()));
        let other = DiscreteMeasure::uniform(pts(&[0.5])).unwrap();
        assert_eq!(pushforward(&other, &r), Err(Error::UndefinedAtom(0)));
    }

    #[test]
    fn induced_couplings() {
        let g = DiscreteMeasure::uniform_grid(4, 0.0, 1.0).unwrap();
        assert_eq!(induced_coupling(&g, &MongeMap::identity(&g)).unwrap(), Coupling::diagonal(&g));
        let r = MongeMap::from_fn(&g, |x| Point::scalar(1.0 - x.coords()[0]));
        let c = induced_coupling(&g, &r).unwrap();
        for i in 0..4 {
            assert_eq!(c.mass()[(i, i)], 0.25);
        }
        let cost = monge_cost(&g, &r, &CostSpec::Euclidean).unwrap();
        assert!((cost - 0.5).abs() <= 1e-15);
        assert_eq!(monge_cost(&g, &MongeMap::identity(&g), &CostSpec::Euclidean).unwrap(), 0.0);
    }

    #[test]
    fn random_map_seed_43() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_pcg::Pcg64::seed_from_u64(43);
        let mu = DiscreteMeasure::random_with(&mut rng, 6, 2).unwrap();
        let targets = DiscreteMeasure::random_with(&mut rng, 3, 2).unwrap();
        let map = MongeMap::from_fn(&mu, |_| targets.points()[rng.gen_range(0..3)].clone());
        let c = induced_coupling(&mu, &map).unwrap();
        let (r, s) = c.marginal_errors();
        assert!(r <= 1e-15 && s <= 1e-15);
        assert_eq!(c.col_measure(), &pushforward(&mu, &map).unwrap());
        for cost in [CostSpec::Euclidean, CostSpec::Power(2.0), CostSpec::Truncated] {
            assert!(monge_cost(&mu, &map, &cost).is_ok());
        }
    }

    #[test]
    fn monotone_maps() {
        let mu = DiscreteMeasure::random(5, 1, 3).unwrap();
        let id = monotone_map_1d(&mu, &mu).unwrap().unwrap();
        assert_eq!(id, MongeMap::identity(&mu));

        let a = DiscreteMeasure::uniform(pts(&[1.0, 0.0])).unwrap();
        let b = DiscreteMeasure::uniform(pts(&[3.0, 2.0])).unwrap();
        let m = monotone_map_1d(&a, &b).unwrap().unwrap();
        assert_eq!(m.lookup(&Point::scalar(0.0)), Some(&Point::scalar(2.0)));
        assert_eq!(m.lookup(&Point::scalar(1.0)), Some(&Point::scalar(3.0)));

        let split = DiscreteMeasure::new(pts(&[0.0, 1.0]), vec![0.3, 0.7]).unwrap();
        assert_eq!(monotone_map_1d(&a, &split).unwrap(), None);
        let one = DiscreteMeasure::dirac(Point::scalar(5.0));
        assert!(monotone_map_1d(&a, &one).unwrap().is_some());
        assert!(monotone_map_1d(&DiscreteMeasure::random(2, 2, 1).unwrap(), &a).is_err());
    }

    #[test]
    fn monotone_map_is_unique_optimum() {
        let mu = DiscreteMeasure::uniform(pts(&[0.1, 0.35, 0.5, 0.9])).unwrap();
        let nu = DiscreteMeasure::uniform(pts(&[0.0, 0.4, 0.7, 1.2])).unwrap();
        let t = monotone_map_1d(&mu, &nu).unwrap().unwrap();
        let plan = induced_coupling(&mu, &t).unwrap();
        let c = CostSpec::Power(2.0).eval(&mu, plan.col_measure()).unwrap();
        let k = solve_kantorovich(&mu, plan.col_measure(), &c).unwrap().value;
        assert!((plan.cost(&c) - k).abs() <= 1e-9);
        assert_eq!(optimum_is_unique(&mu, plan.col_measure(), &c).unwrap(), Some(true));
    }

    #[test]
    fn deviation_masses() {
        let g = DiscreteMeasure::uniform_grid(4, 0.0, 1.0).unwrap();
        let t0 = MongeMap::identity(&g);
        let same = convergence_in_measure(&g, &[t0.clone(), t0.clone()], &t0, &[0.1]).unwrap();
        assert!(same.rows.iter().all(|r| r.mass == 0.0) && same.verdicts[0].1);

        let shifts: Vec<MongeMap> =
            (1..=5).map(|n| MongeMap::from_fn(&g, |x| Point::scalar(x.coords()[0] + 1.0 / n as f64))).collect();
        let t = convergence_in_measure(&g, &shifts, &t0, &[0.5]).unwrap();
        assert_eq!(t.rows[0].mass, 1.0);
        assert!(t.rows[2..].iter().all(|r| r.mass == 0.0));
        assert!(t.verdicts[0].1);
    }

    #[test]
    fn total_variation_values() {
        let a = DiscreteMeasure::uniform(pts(&[0.0, 1.0])).unwrap();
        let b = DiscreteMeasure::uniform(pts(&[1.0, 2.0])).unwrap();
        assert_eq!(total_variation(&a, &a).unwrap(), 0.0);
        assert_eq!(total_variation(&a, &b).unwrap(), 0.5);
    }

    #[test]
    fn scenario_converges() {
        let s = shifted_grid_scenario(16, 64).unwrap();
        assert!(s.tv.iter().enumerate().all(|(k, tv)| *tv <= 1.0 / (k + 1) as f64));
        let t = convergence_in_measure(&s.mu0, &s.maps, &s.t0, &[0.05, 0.1, 0.2]).unwrap();
        assert!(t.verdicts.iter().all(|v| v.1));
        assert!(t.rows.iter().any(|r| r.mass > 0.0));
    }
}
