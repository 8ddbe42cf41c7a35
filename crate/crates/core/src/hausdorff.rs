//! Hausdorff distances between transportation polytopes under `d_{K,α⊕β}`.
//!
//! The distance from a coupling `σ` to `Π(μ₂, ν₂)` is a single LP over
//! `γ ≥ 0` on `supp σ × (X₂ × Y₂)`: the first marginal of `γ` is `σ`, and the
//! second is only constrained through its two projections `μ₂` and `ν₂`.
//! Its optimal value is convex in `σ` (an LP value is convex in the
//! right-hand side), so the supremum over a polytope is attained at a vertex
//! and the exact Hausdorff distance follows from vertex enumeration.

use alloc::vec;
use alloc::vec::Vec;

use crate::lp::LinearProgram;
use crate::metrics::{d_kantorovich, GroundCost};
use crate::solver::{enumerate_vertices, DEFAULT_CELL_CAP};
use crate::{Coupling, DiscreteMeasure, Error, Matrix, Result};

/// Largest `m·n` on either side accepted by [`hausdorff_exact`].
pub const HAUSDORFF_GUARD: usize = 16;

#[derive(Debug, Clone)]
pub struct HausdorffReport {
    pub exact: Option<f64>,
    pub upper_bound: f64,
    /// Vertex attaining the max and its nearest point in the other polytope.
    pub witness_pair: Option<(Coupling, Coupling)>,
}

/// Distance from `σ` to the polytope, with the nearest coupling.
#[derive(Debug, Clone)]
pub struct PolytopeDistance {
    pub value: f64,
    pub nearest: Coupling,
}

/// `min_{ζ ∈ Π(μ₂,ν₂)} d_{K,α⊕β}(σ, ζ)`.
pub fn dist_to_polytope(
    sigma: &Coupling,
    mu2: &DiscreteMeasure,
    nu2: &DiscreteMeasure,
    alpha: &GroundCost,
    beta: &GroundCost,
) -> Result<f64> {
    Ok(dist_to_polytope_with_witness(sigma, mu2, nu2, alpha, beta)?.value)
}

pub fn dist_to_polytope_with_witness(
    sigma: &Coupling,
    mu2: &DiscreteMeasure,
    nu2: &DiscreteMeasure,
    alpha: &GroundCost,
    beta: &GroundCost,
) -> Result<PolytopeDistance> {
    let am = alpha.matrix(sigma.row_measure(), mu2)?;
    let bm = beta.matrix(sigma.col_measure(), nu2)?;
    let src = sigma.support_cells();
    let (m2, n2) = (mu2.len(), nu2.len());
    let targets = m2 * n2;
    let cols = src.len() * targets;
    if cols > DEFAULT_CELL_CAP {
        return Err(Error::SizeGuard { what: "polytope distance cells", size: cols, limit: DEFAULT_CELL_CAP });
    }
    let rows = src.len() + m2 + n2;
    let mut a = Matrix::zeros(rows, cols);
    let mut c = Vec::with_capacity(cols);
    for (s, &(i, j)) in src.iter().enumerate() {
        for i2 in 0..m2 {
            for j2 in 0..n2 {
                let k = s * targets + i2 * n2 + j2;
                a[(s, k)] = 1.0;
                a[(src.len() + i2, k)] = 1.0;
                a[(src.len() + m2 + j2, k)] = 1.0;
                c.push(am[(i, i2)] + bm[(j, j2)]);
            }
        }
    }
    let mut b: Vec<f64> = src.iter().map(|&cell| sigma.mass()[cell]).collect();
    b.extend_from_slice(mu2.weights());
    b.extend_from_slice(nu2.weights());
    let sol = LinearProgram::new(a, b, c)?.solve()?;

    let mut zeta = vec![0.0; targets];
    for s in 0..src.len() {
        for t in 0..targets {
            zeta[t] += sol.x[s * targets + t];
        }
    }
    let nearest = Coupling::new(mu2.clone(), nu2.clone(), Matrix::from_vec(m2, n2, zeta))?;
    Ok(PolytopeDistance { value: sol.value.max(0.0), nearest })
}

/// `d_{K,α}(μ₁,μ₂) + d_{K,β}(ν₁,ν₂)`.
pub fn hausdorff_upper(
    mu1: &DiscreteMeasure,
    nu1: &DiscreteMeasure,
    mu2: &DiscreteMeasure,
    nu2: &DiscreteMeasure,
    alpha: &GroundCost,
    beta: &GroundCost,
) -> Result<f64> {
    Ok(d_kantorovich(mu1, mu2, alpha)? + d_kantorovich(nu1, nu2, beta)?)
}

/// Exact `H_{K,α⊕β}(Π(μ₁,ν₁), Π(μ₂,ν₂))` by maximizing the polytope distance
/// over the vertices of each side, plus the constructive upper bound.
pub fn hausdorff_exact(
    mu1: &DiscreteMeasure,
    nu1: &DiscreteMeasure,
    mu2: &DiscreteMeasure,
    nu2: &DiscreteMeasure,
    alpha: &GroundCost,
    beta: &GroundCost,
) -> Result<HausdorffReport> {
    for size in [mu1.len() * nu1.len(), mu2.len() * nu2.len()] {
        if size > HAUSDORFF_GUARD {
            return Err(Error::SizeGuard { what: "hausdorff polytope m*n", size, limit: HAUSDORFF_GUARD });
        }
    }
    let upper_bound = hausdorff_upper(mu1, nu1, mu2, nu2, alpha, beta)?;
    let mut best: Option<(f64, Coupling, Coupling)> = None;
    let sides = [(mu1, nu1, mu2, nu2), (mu2, nu2, mu1, nu1)];
    for (a, b, c, d) in sides {
        for v in enumerate_vertices(a, b)?.vertices {
            let pd = dist_to_polytope_with_witness(&v, c, d, alpha, beta)?;
            if best.as_ref().is_none_or(|(x, _, _)| pd.value > *x) {
                best = Some((pd.value, v, pd.nearest));
            }
        }
    }
    let (exact, w1, w2) = best.expect("polytopes are nonempty");
    Ok(HausdorffReport { exact: Some(exact), upper_bound, witness_pair: Some((w1, w2)) })
}
