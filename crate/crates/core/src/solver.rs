//! Exact discrete Kantorovich solvers.
//!
//! [`solve_transport`] is the transportation simplex: northwest-corner start,
//! spanning-tree basis, Bland's rule for both the entering cell (first
//! eligible cell in row-major order) and the leaving cell (lowest cell index
//! among ties). It returns the plan together with dual potentials `u, v` read
//! off the final basis.
//!
//! [`enumerate_vertices`] lists every basic feasible solution of `Π(μ, ν)`
//! without touching the simplex code and serves as the brute-force oracle.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::lp::LinearProgram;
use crate::measures::advance;
use crate::{Coupling, DiscreteMeasure, Error, Matrix, MultiCoupling, Result};

/// Default cap on the number of cells of a multimarginal problem.
pub const DEFAULT_CELL_CAP: usize = 1_000_000;
/// Largest `m·n` accepted by [`enumerate_vertices`].
pub const VERTEX_GUARD: usize = 36;
/// Gap above the optimum that the runner-up vertex must exceed for the
/// optimum to count as unique.
pub const UNIQUENESS_GAP: f64 = 1e-7;

/// Optimal plan, its value and a dual certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportResult {
    pub plan: Coupling,
    pub value: f64,
    pub dual_u: Vec<f64>,
    pub dual_v: Vec<f64>,
}

impl TransportResult {
    /// `Σ u_i μ_i + Σ v_j ν_j`.
    pub fn dual_value(&self) -> f64 {
        let a: f64 = self.dual_u.iter().zip(self.plan.row_measure().weights()).map(|(u, w)| u * w).sum();
        let b: f64 = self.dual_v.iter().zip(self.plan.col_measure().weights()).map(|(v, w)| v * w).sum();
        a + b
    }

    /// Largest violation of `u_i + v_j ≤ c_ij`, and of complementary slackness
    /// on cells with mass above `1e-10`.
    pub fn dual_residuals(&self, cost: &Matrix) -> (f64, f64) {
        let mut feas: f64 = 0.0;
        let mut slack: f64 = 0.0;
        for (i, j, x) in self.plan.mass().iter() {
            let r = self.dual_u[i] + self.dual_v[j] - cost[(i, j)];
            feas = feas.max(r);
            if x > 1e-10 {
                slack = slack.max(r.abs());
            }
        }
        (feas, slack)
    }
}

/// Raw output of [`solve_transport`].
#[derive(Debug, Clone)]
pub struct RawTransport {
    pub plan: Matrix,
    pub value: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub pivots: usize,
}

/// Transportation simplex on raw marginals `a` (rows) and `b` (columns).
///
/// `a` and `b` must be nonnegative with equal totals (up to rounding).
/// Exceeding `50·(m+n)·m·n` pivots returns [`Error::IterationLimit`].
pub fn solve_transport(a: &[f64], b: &[f64], cost: &Matrix) -> Result<RawTransport> {
    let (m, n) = (a.len(), b.len());
    if m == 0 || n == 0 {
        return Err(Error::InvalidInput("empty marginal".into()));
    }
    if cost.shape() != (m, n) {
        return Err(Error::InvalidInput(format!("cost is {}x{}, marginals are {m}x{n}", cost.rows(), cost.cols())));
    }
    if cost.as_slice().iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("cost"));
    }
    let ta: f64 = a.iter().sum();
    let tb: f64 = b.iter().sum();
    if a.iter().chain(b).any(|&w| w < 0.0) || (ta - tb).abs() > 1e-9 * ta.max(tb).max(1.0) {
        return Err(Error::MarginalMismatch(format!("row total {ta}, column total {tb}")));
    }

    let mut flow = Matrix::zeros(m, n);
    let mut basic = vec![false; m * n];
    let mut row_adj: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut col_adj: Vec<Vec<usize>> = vec![Vec::new(); n];

    // northwest corner: exactly m + n - 1 basic cells forming a spanning tree
    let (mut ra, mut rb) = (a.to_vec(), b.to_vec());
    let (mut i, mut j) = (0, 0);
    loop {
        let q = ra[i].min(rb[j]);
        flow[(i, j)] = q;
        ra[i] -= q;
        rb[j] -= q;
        basic[i * n + j] = true;
        row_adj[i].push(j);
        col_adj[j].push(i);
        if i == m - 1 && j == n - 1 {
            break;
        }
        if i == m - 1 {
            j += 1;
        } else if j == n - 1 || ra[i] <= rb[j] {
            i += 1;
        } else {
            j += 1;
        }
    }

    let cmax = cost.max_abs().max(1.0);
    let tol = 1e-11 * cmax;
    let cap = 50 * (m + n) * m * n;
    let mut u = vec![0.0; m];
    let mut v = vec![0.0; n];
    let mut pivots = 0;
    // scratch for tree searches: node ids are rows 0..m, columns m..m+n
    let mut parent = vec![usize::MAX; m + n];
    let mut queue = Vec::with_capacity(m + n);

    loop {
        potentials(cost, &row_adj, &col_adj, &mut u, &mut v, &mut parent, &mut queue);

        let mut entering = None;
        'scan: for i in 0..m {
            for j in 0..n {
                if !basic[i * n + j] && cost[(i, j)] - u[i] - v[j] < -tol {
                    entering = Some((i, j));
                    break 'scan;
                }
            }
        }
        let Some((ei, ej)) = entering else { break };

        // path in the tree from row ei to column ej
        parent.iter_mut().for_each(|p| *p = usize::MAX);
        queue.clear();
        parent[ei] = ei;
        queue.push(ei);
        let target = m + ej;
        let mut head = 0;
        while head < queue.len() && parent[target] == usize::MAX {
            let node = queue[head];
            head += 1;
            let nbrs: &[usize] = if node < m { &row_adj[node] } else { &col_adj[node - m] };
            for &k in nbrs {
                let other = if node < m { m + k } else { k };
                if parent[other] == usize::MAX {
                    parent[other] = node;
                    queue.push(other);
                }
            }
        }
        // cells along the path, starting next to the target column
        let mut cycle: Vec<(usize, usize)> = Vec::new();
        let mut node = target;
        while node != ei {
            let p = parent[node];
            let cell = if node < m { (node, p - m) } else { (p, node - m) };
            cycle.push(cell);
            node = p;
        }
        cycle.reverse();
        // cycle[0] touches row ei and loses flow; signs alternate from there
        let mut theta = f64::INFINITY;
        for &(ci, cj) in cycle.iter().step_by(2) {
            theta = theta.min(flow[(ci, cj)]);
        }
        let leaving = cycle
            .iter()
            .step_by(2)
            .filter(|&&(ci, cj)| flow[(ci, cj)] <= theta)
            .min_by_key(|&&(ci, cj)| ci * n + cj)
            .copied()
            .expect("cycle has a decreasing cell");
        for (k, &(ci, cj)) in cycle.iter().enumerate() {
            if k % 2 == 0 {
                flow[(ci, cj)] -= theta;
            } else {
                flow[(ci, cj)] += theta;
            }
        }
        flow[(ei, ej)] = theta;
        flow[leaving] = 0.0;

        let (li, lj) = leaving;
        basic[li * n + lj] = false;
        row_adj[li].retain(|&c| c != lj);
        col_adj[lj].retain(|&r| r != li);
        basic[ei * n + ej] = true;
        row_adj[ei].push(ej);
        col_adj[ej].push(ei);

        pivots += 1;
        if pivots > cap {
            return Err(Error::IterationLimit { pivots });
        }
    }

    let value = flow.dot(cost);
    Ok(RawTransport { plan: flow, value, u, v, pivots })
}

fn potentials(
    cost: &Matrix,
    row_adj: &[Vec<usize>],
    col_adj: &[Vec<usize>],
    u: &mut [f64],
    v: &mut [f64],
    seen: &mut [usize],
    queue: &mut Vec<usize>,
) {
    let m = row_adj.len();
    seen.iter_mut().for_each(|s| *s = usize::MAX);
    queue.clear();
    u[0] = 0.0;
    seen[0] = 0;
    queue.push(0);
    let mut head = 0;
    while head < queue.len() {
        let node = queue[head];
        head += 1;
        if node < m {
            for &j in &row_adj[node] {
                if seen[m + j] == usize::MAX {
                    seen[m + j] = node;
                    v[j] = cost[(node, j)] - u[node];
                    queue.push(m + j);
                }
            }
        } else {
            let j = node - m;
            for &i in &col_adj[j] {
                if seen[i] == usize::MAX {
                    seen[i] = node;
                    u[i] = cost[(i, j)] - v[j];
                    queue.push(i);
                }
            }
        }
    }
}

/// `K_h(μ, ν)` with an optimal plan and dual potentials.
pub fn solve_kantorovich(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: &Matrix) -> Result<TransportResult> {
    if let Some(c) = cost.as_slice().iter().find(|&&c| c < 0.0) {
        return Err(Error::InvalidInput(format!("negative cost {c}")));
    }
    let raw = solve_transport(mu.weights(), nu.weights(), cost)?;
    let plan = Coupling::new(mu.clone(), nu.clone(), raw.plan)?;
    Ok(TransportResult { plan, value: raw.value, dual_u: raw.u, dual_v: raw.v })
}

/// Multimarginal Kantorovich problem over a dense cost array (row-major,
/// last axis fastest), solved as a generic LP with one constraint block per
/// marginal.
pub fn solve_multimarginal(
    marginals: &[DiscreteMeasure],
    cost: &[f64],
    cell_cap: usize,
) -> Result<(MultiCoupling, f64)> {
    if marginals.len() < 2 {
        return Err(Error::InvalidInput("multimarginal problem needs k >= 2".into()));
    }
    let shape: Vec<usize> = marginals.iter().map(DiscreteMeasure::len).collect();
    let cells = shape.iter().try_fold(1usize, |acc, &s| acc.checked_mul(s)).unwrap_or(usize::MAX);
    if cells > cell_cap {
        return Err(Error::SizeGuard { what: "multimarginal cells", size: cells, limit: cell_cap });
    }
    if cost.len() != cells {
        return Err(Error::DimensionMismatch { expected: cells, found: cost.len() });
    }
    if cost.iter().any(|c| !c.is_finite() || *c < 0.0) {
        return Err(Error::InvalidInput("cost must be finite and nonnegative".into()));
    }
    let offsets: Vec<usize> = shape
        .iter()
        .scan(0, |acc, &s| {
            let o = *acc;
            *acc += s;
            Some(o)
        })
        .collect();
    let rows: usize = shape.iter().sum();
    let mut a = Matrix::zeros(rows, cells);
    let mut idx = vec![0usize; shape.len()];
    for k in 0..cells {
        for (ax, &i) in idx.iter().enumerate() {
            a[(offsets[ax] + i, k)] = 1.0;
        }
        advance(&mut idx, &shape);
    }
    let b: Vec<f64> = marginals.iter().flat_map(|m| m.weights().iter().copied()).collect();
    let sol = LinearProgram::new(a, b, cost.to_vec())?.solve()?;
    let coupling = MultiCoupling::new(marginals.to_vec(), sol.x)?;
    Ok((coupling, sol.value))
}

/// All vertices of the transportation polytope `Π(μ, ν)`.
#[derive(Debug, Clone)]
pub struct PolytopeVertices {
    pub vertices: Vec<Coupling>,
}

impl PolytopeVertices {
    /// Minimum of `Σ c·x` over the vertices.
    pub fn min_cost(&self, cost: &Matrix) -> f64 {
        self.vertices.iter().map(|v| v.cost(cost)).fold(f64::INFINITY, f64::min)
    }

    /// Vertex costs sorted ascending.
    pub fn sorted_costs(&self, cost: &Matrix) -> Vec<f64> {
        let mut c: Vec<f64> = self.vertices.iter().map(|v| v.cost(cost)).collect();
        c.sort_by(f64::total_cmp);
        c
    }
}

/// Enumerates the basic feasible solutions of `Π(μ, ν)` (requires `m·n ≤ 36`).
///
/// Every basis is a spanning tree of the bipartite graph and every tree has
/// a leaf line whose single cell carries that line's whole remaining mass.
/// Repeatedly choosing a cell `(i, j)`, assigning `min(a_i, b_j)` and deleting
/// the exhausted line therefore reaches every vertex; infeasible trees never
/// get built. Results are deduplicated at sup-norm `1e-9`.
pub fn enumerate_vertices(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<PolytopeVertices> {
    let (m, n) = (mu.len(), nu.len());
    if m * n > VERTEX_GUARD {
        return Err(Error::SizeGuard { what: "vertex enumeration m*n", size: m * n, limit: VERTEX_GUARD });
    }
    let mut memo = BTreeMap::new();
    let state =
        State { rows: (1u64 << m) - 1, cols: (1u64 << n) - 1, ra: mu.weights().to_vec(), rb: nu.weights().to_vec() };
    let partials = vertex_rec(&state, n, &mut memo);

    let mut found: Vec<Vec<f64>> = Vec::new();
    for cells in partials.iter() {
        let mut x = vec![0.0; m * n];
        for &(k, val) in cells {
            x[k] = val;
        }
        let dup = found.iter().any(|y| x.iter().zip(y).all(|(a, b)| (a - b).abs() <= 1e-9));
        if !dup {
            found.push(x);
        }
    }
    let vertices = found
        .into_iter()
        .map(|x| Coupling::new(mu.clone(), nu.clone(), Matrix::from_vec(m, n, x)))
        .collect::<Result<Vec<_>>>()?;
    Ok(PolytopeVertices { vertices })
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
struct StateKey(u64, u64, Vec<u64>, Vec<u64>);

struct State {
    rows: u64,
    cols: u64,
    ra: Vec<f64>,
    rb: Vec<f64>,
}

impl State {
    fn key(&self) -> StateKey {
        StateKey(
            self.rows,
            self.cols,
            self.ra.iter().map(|x| x.to_bits()).collect(),
            self.rb.iter().map(|x| x.to_bits()).collect(),
        )
    }
}

type Partial = Vec<(usize, f64)>;

const LEAF_TOL: f64 = 1e-12;

fn vertex_rec(s: &State, n: usize, memo: &mut BTreeMap<StateKey, Vec<Partial>>) -> Vec<Partial> {
    let key = s.key();
    if let Some(hit) = memo.get(&key) {
        return hit.clone();
    }
    let alive_rows: Vec<usize> = (0..s.ra.len()).filter(|&i| s.rows >> i & 1 == 1).collect();
    let alive_cols: Vec<usize> = (0..n).filter(|&j| s.cols >> j & 1 == 1).collect();
    let mut out: Vec<Partial> = Vec::new();

    if alive_rows.is_empty() || alive_cols.is_empty() {
        let leftover = alive_rows.iter().map(|&i| s.ra[i]).chain(alive_cols.iter().map(|&j| s.rb[j]));
        if leftover.fold(0.0, f64::max) <= LEAF_TOL {
            out.push(Vec::new());
        }
    } else if alive_rows.len() == 1 || alive_cols.len() == 1 {
        // a single remaining line is forced to feed every remaining cross line
        let mut cells = Vec::new();
        let ok = if alive_rows.len() == 1 {
            let i = alive_rows[0];
            let total: f64 = alive_cols.iter().map(|&j| s.rb[j]).sum();
            alive_cols.iter().for_each(|&j| cells.push((i * n + j, s.rb[j])));
            (total - s.ra[i]).abs() <= 1e-10
        } else {
            let j = alive_cols[0];
            let total: f64 = alive_rows.iter().map(|&i| s.ra[i]).sum();
            alive_rows.iter().for_each(|&i| cells.push((i * n + j, s.ra[i])));
            (total - s.rb[j]).abs() <= 1e-10
        };
        if ok {
            out.push(cells);
        }
    } else {
        for &i in &alive_rows {
            for &j in &alive_cols {
                let (a, b) = (s.ra[i], s.rb[j]);
                // row i is a leaf attached to column j
                if a <= b + LEAF_TOL {
                    let mut rb = s.rb.clone();
                    rb[j] = clamp_residual(b - a);
                    let next = State { rows: s.rows & !(1 << i), cols: s.cols, ra: s.ra.clone(), rb };
                    for mut p in vertex_rec(&next, n, memo) {
                        p.push((i * n + j, a));
                        out.push(p);
                    }
                }
                // column j is a leaf attached to row i
                if b <= a + LEAF_TOL {
                    let mut ra = s.ra.clone();
                    ra[i] = clamp_residual(a - b);
                    let next = State { rows: s.rows, cols: s.cols & !(1 << j), ra, rb: s.rb.clone() };
                    for mut p in vertex_rec(&next, n, memo) {
                        p.push((i * n + j, b));
                        out.push(p);
                    }
                }
            }
        }
        dedupe_partials(&mut out);
    }
    memo.insert(key, out.clone());
    out
}

fn clamp_residual(x: f64) -> f64 {
    if x <= LEAF_TOL {
        0.0
    } else {
        x
    }
}

fn dedupe_partials(out: &mut Vec<Partial>) {
    for p in out.iter_mut() {
        p.retain(|&(_, v)| v > 0.0);
        p.sort_by_key(|&(k, _)| k);
    }
    let mut kept: Vec<Partial> = Vec::with_capacity(out.len());
    for p in out.drain(..) {
        let dup = kept
            .iter()
            .any(|q| q.len() == p.len() && q.iter().zip(&p).all(|(a, b)| a.0 == b.0 && (a.1 - b.1).abs() <= 1e-12));
        if !dup {
            kept.push(p);
        }
    }
    *out = kept;
}

/// True iff `plan` costs at most the optimum plus `tol`.
pub fn is_optimal(plan: &Coupling, cost: &Matrix, tol: f64) -> Result<bool> {
    let opt = solve_kantorovich(plan.row_measure(), plan.col_measure(), cost)?;
    Ok(plan.cost(cost) <= opt.value + tol)
}

/// Vertex-gap uniqueness probe: `Some(true)` if the second-best vertex costs
/// more than the optimum plus [`UNIQUENESS_GAP`], `None` when the polytope is
/// too large to enumerate.
pub fn optimum_is_unique(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: &Matrix) -> Result<Option<bool>> {
    if mu.len() * nu.len() > VERTEX_GUARD {
        return Ok(None);
    }
    let verts = enumerate_vertices(mu, nu)?;
    let costs = verts.sorted_costs(cost);
    Ok(Some(costs.len() < 2 || costs[1] > costs[0] + UNIQUENESS_GAP))
}

/// Max row/column residual of a raw plan, used by the invariant checks.
pub fn plan_marginal_error(plan: &Matrix, a: &[f64], b: &[f64]) -> f64 {
    let r = plan.row_sums().iter().zip(a).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let c = plan.col_sums().iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    r.max(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Point;
    use crate::CostSpec;
    use rand::{Rng, SeedableRng};
    use rand_pcg::Pcg64;

    fn grid(n: usize) -> DiscreteMeasure {
        DiscreteMeasure::uniform_grid(n, 0.0, 1.0).unwrap()
    }

    #[test]
    fn dirac_to_dirac() {
        let d = DiscreteMeasure::dirac(Point::scalar(0.0));
        let c = Matrix::from_rows(&[vec![2.5]]).unwrap();
        let r = solve_kantorovich(&d, &d, &c).unwrap();
        assert_eq!(r.value, 2.5);
        assert_eq!(r.plan.mass().as_slice(), &[1.0]);
    }

    #[test]
    fn zero_cost() {
        let mu = DiscreteMeasure::random(3, 1, 1).unwrap();
        let nu = DiscreteMeasure::random(4, 1, 2).unwrap();
        let r = solve_kantorovich(&mu, &nu, &Matrix::zeros(3, 4)).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn diagonal_switch_family_on_grid() {
        let g = grid(4);
        let c = CostSpec::DiagonalSwitch { t: 0.25 }.eval(&g, &g).unwrap();
        let r = solve_kantorovich(&g, &g, &c).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.plan, Coupling::diagonal(&g));
    }

    #[test]
    fn random_instance_matches_vertex_oracle() {
        let mut rng = Pcg64::seed_from_u64(7);
        let mu = DiscreteMeasure::random_with(&mut rng, 3, 1).unwrap();
        let nu = DiscreteMeasure::random_with(&mut rng, 3, 1).unwrap();
        let c = Matrix::from_fn(3, 3, |_, _| rng.gen::<f64>());
        let r = solve_kantorovich(&mu, &nu, &c).unwrap();
        let oracle = enumerate_vertices(&mu, &nu).unwrap().min_cost(&c);
        assert!((r.value - oracle).abs() <= 1e-9, "{} vs {}", r.value, oracle);
        let (feas, slack) = r.dual_residuals(&c);
        assert!(feas <= 1e-8 && slack <= 1e-8);
        assert!((r.dual_value() - r.value).abs() <= 1e-8);
    }

    #[test]
    fn vertex_counts() {
        let one = grid(1);
        let v = enumerate_vertices(&one, &one).unwrap();
        assert_eq!(v.vertices.len(), 1);
        assert_eq!(v.vertices[0].mass().as_slice(), &[1.0]);

        let v = enumerate_vertices(&grid(2), &grid(2)).unwrap();
        assert_eq!(v.vertices.len(), 2);
        for x in &v.vertices {
            let s = x.mass().as_slice();
            assert!(s == [0.5, 0.0, 0.0, 0.5] || s == [0.0, 0.5, 0.5, 0.0]);
        }
        // uniform marginals on 3 atoms: the 3! permutation matrices scaled by 1/3
        let v = enumerate_vertices(&grid(3), &grid(3)).unwrap();
        assert_eq!(v.vertices.len(), 6);
        for x in &v.vertices {
            assert!(x.mass().as_slice().iter().all(|&e| e == 0.0 || (e - 1.0 / 3.0).abs() < 1e-15));
        }
        let v = enumerate_vertices(&grid(4), &grid(4)).unwrap();
        assert_eq!(v.vertices.len(), 24);
    }

    #[test]
    fn vertices_are_sparse_and_distinct() {
        let mu = DiscreteMeasure::random(4, 1, 3).unwrap();
        let nu = DiscreteMeasure::random(3, 1, 4).unwrap();
        let v = enumerate_vertices(&mu, &nu).unwrap();
        // generic 4x3: every spanning tree that is feasible gives a distinct vertex
        assert!(v.vertices.len() > 4);
        for x in &v.vertices {
            assert!(x.mass().as_slice().iter().filter(|&&e| e > 1e-10).count() < 4 + 3);
        }
        for (a, x) in v.vertices.iter().enumerate() {
            for y in &v.vertices[a + 1..] {
                assert!(x.mass().max_abs_diff(y.mass()) > 1e-9);
            }
        }
    }

    #[test]
    fn vertex_guard() {
        let g = grid(7);
        assert!(matches!(enumerate_vertices(&g, &g), Err(Error::SizeGuard { .. })));
    }

    #[test]
    fn optimality_checks() {
        let g = grid(4);
        let c = CostSpec::DiagonalSwitch { t: 0.25 }.eval(&g, &g).unwrap();
        let opt = solve_kantorovich(&g, &g, &c).unwrap();
        assert!(is_optimal(&opt.plan, &c, 1e-9).unwrap());
        assert!(!is_optimal(&Coupling::product(&g, &g), &c, 1e-3).unwrap());
        assert!(is_optimal(&Coupling::product(&g, &g), &Matrix::zeros(4, 4), 0.0).unwrap());
    }

    #[test]
    fn multimarginal_reduces_to_two() {
        let mu = DiscreteMeasure::random(3, 1, 5).unwrap();
        let nu = DiscreteMeasure::random(4, 1, 6).unwrap();
        let c = CostSpec::Euclidean.eval(&mu, &nu).unwrap();
        let (mc, val) = solve_multimarginal(&[mu.clone(), nu.clone()], c.as_slice(), DEFAULT_CELL_CAP).unwrap();
        let two = solve_kantorovich(&mu, &nu, &c).unwrap();
        assert!((val - two.value).abs() <= 1e-9);
        assert!(mc.marginal_error() <= 1e-9);

        let d = DiscreteMeasure::dirac(Point::scalar(1.0));
        let (_, v) = solve_multimarginal(&[d.clone(), d.clone(), d], &[0.75], DEFAULT_CELL_CAP).unwrap();
        assert_eq!(v, 0.75);

        let g = grid(10);
        let big = solve_multimarginal(&[g.clone(), g.clone(), g], &[0.0; 1000], 999);
        assert!(matches!(big, Err(Error::SizeGuard { .. })));
    }

    #[test]
    fn iteration_cap_formula_is_generous() {
        let mu = DiscreteMeasure::random(12, 2, 9).unwrap();
        let nu = DiscreteMeasure::random(15, 2, 10).unwrap();
        let c = CostSpec::Power(2.0).eval(&mu, &nu).unwrap();
        let r = solve_transport(mu.weights(), nu.weights(), &c).unwrap();
        assert!(r.pivots < 50 * 27 * 12 * 15);
    }
}
