use kantorovich::gluing::{carry_plan, carry_plan_both, coupling_transport};
use kantorovich::metrics::{d_kantorovich, d_kr, GroundCost};
use kantorovich::monge::{monge_cost, MongeMap};
use kantorovich::parametric::{linear_grid, sweep_value, ParamFamily};
use kantorovich::solver::{enumerate_vertices, solve_kantorovich};
use kantorovich::{CostSpec, Coupling, DiscreteMeasure, Matrix, Point, ShiftMap};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;

fn arb_measure(max_atoms: usize, dim: usize) -> impl Strategy<Value = DiscreteMeasure> {
    (1..=max_atoms).prop_flat_map(move |n| {
        (prop::collection::vec(prop::collection::vec(0.0f64..1.0, dim), n), prop::collection::vec(0.05f64..1.0, n))
            .prop_map(|(pts, ws)| {
                let pts = pts.into_iter().map(|c| Point::new(c).unwrap()).collect();
                DiscreteMeasure::new(pts, ws).unwrap()
            })
    })
}

fn random_coupling(seed: u64, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Coupling {
    let mut rng = Pcg64::seed_from_u64(seed);
    let c = Matrix::from_fn(mu.len(), nu.len(), |_, _| rng.gen::<f64>());
    let v = solve_kantorovich(mu, nu, &c).unwrap().plan;
    v.mix(&Coupling::product(mu, nu), rng.gen::<f64>()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn simplex_matches_vertex_minimum(mu in arb_measure(4, 1), nu in arb_measure(4, 1), seed in any::<u64>()) {
        let mut rng = Pcg64::seed_from_u64(seed);
        let c = Matrix::from_fn(mu.len(), nu.len(), |_, _| rng.gen::<f64>());
        let r = solve_kantorovich(&mu, &nu, &c).unwrap();
        let oracle = enumerate_vertices(&mu, &nu).unwrap().min_cost(&c);
        prop_assert!((r.value - oracle).abs() <= 1e-9);
        prop_assert!((r.value - r.dual_value()).abs() <= 1e-8);
    }

    #[test]
    fn kantorovich_below_monge(mu in arb_measure(5, 2), seed in any::<u64>()) {
        let mut rng = Pcg64::seed_from_u64(seed);
        let targets = DiscreteMeasure::random_with(&mut rng, 3, 2).unwrap();
        let map = MongeMap::from_fn(&mu, |_| targets.points()[rng.gen_range(0..targets.len())].clone());
        for cost in [CostSpec::Euclidean, CostSpec::Power(2.0), CostSpec::Truncated] {
            prop_assert!(monge_cost(&mu, &map, &cost).is_ok());
        }
    }

    #[test]
    fn d_kr_is_truncated_transport(mu in arb_measure(4, 1), nu in arb_measure(4, 1)) {
        // |f| ≤ 1 with Lip ≤ 1 is the 1-Lipschitz class of min(d, 2)
        let e = GroundCost::Euclidean;
        let kr = d_kr(&mu, &nu, &e).unwrap();
        let c = Matrix::from_fn(mu.len(), nu.len(), |i, j| mu.points()[i].euclidean(&nu.points()[j]).min(2.0));
        let oracle = solve_kantorovich(&mu, &nu, &c).unwrap().value;
        prop_assert!((kr - oracle).abs() <= 1e-9, "{} {}", kr, oracle);
    }

    #[test]
    fn carried_plan_moves_at_most_marginal_distance(
        mu1 in arb_measure(4, 1), nu in arb_measure(4, 1), mu2 in arb_measure(4, 1), seed in any::<u64>()
    ) {
        let s = random_coupling(seed, &mu1, &nu);
        let e = GroundCost::Euclidean;
        let c = carry_plan(&s, &mu2, &e, &e).unwrap();
        let independent = coupling_transport(&s, &c.plan, &e, &e, 1.0).unwrap();
        prop_assert!(independent <= d_kantorovich(&mu1, &mu2, &e).unwrap() + 1e-8);
        let drift = s.mass().col_sums().iter().zip(c.plan.mass().col_sums()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(drift <= 1e-10);
    }

    #[test]
    fn value_drift_bounded_by_marginal_drift(
        mu1 in arb_measure(4, 1), nu1 in arb_measure(4, 1), mu2 in arb_measure(4, 1), nu2 in arb_measure(4, 1)
    ) {
        // h = |x − y| is 1-Lipschitz in each argument
        let e = GroundCost::Euclidean;
        let k1 = d_kantorovich(&mu1, &nu1, &e).unwrap();
        let k2 = d_kantorovich(&mu2, &nu2, &e).unwrap();
        let drift = d_kantorovich(&mu1, &mu2, &e).unwrap() + d_kantorovich(&nu1, &nu2, &e).unwrap();
        prop_assert!((k1 - k2).abs() <= drift + 1e-8);

        let s = solve_kantorovich(&mu1, &nu1, &e.matrix(&mu1, &nu1).unwrap()).unwrap().plan;
        let carried = carry_plan_both(&s, &mu2, &nu2, &e, &e).unwrap();
        let cost2 = carried.plan.cost(&e.matrix(&mu2, &nu2).unwrap());
        prop_assert!(cost2 <= k1 + drift + 1e-8);
    }
}

#[test]
fn value_is_lipschitz_in_scale() {
    let mu = DiscreteMeasure::random(5, 1, 61).unwrap();
    let nu = DiscreteMeasure::random(5, 1, 67).unwrap();
    let lip = CostSpec::Power(2.0).eval(&mu, &nu).unwrap().max_abs();
    let f = ParamFamily::fixed_marginals(
        linear_grid(0.0, 1.0, 41),
        mu,
        nu,
        Box::new(|t| CostSpec::SquaredShift { scale: t, map: ShiftMap::Identity }),
    )
    .unwrap();
    let rows = sweep_value(&f).unwrap().rows;
    for a in &rows {
        for b in &rows {
            assert!((a.value - b.value).abs() <= lip * (a.t - b.t).abs() + 1e-9);
        }
    }
}
