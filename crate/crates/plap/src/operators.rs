//! Residual evaluation for the four discrete operators and the two discrete
//! energies, plus construction of the epsilon-ball graph and the two-radius
//! hypergraph stencil.

use crate::geometry::{NeighborIndex, PointCloud};
use crate::kernels::{eta_chi, Kernel};

#[derive(Clone, Debug, thiserror::Error, PartialEq)]
pub enum OperatorError {
    #[error("no neighbors at node {0}")]
    NoNeighbors(usize),
    #[error("field value at node {0} is not finite")]
    NonFiniteValue(usize),
    #[error("field length {got} does not match node count {want}")]
    LengthMismatch { got: usize, want: usize },
    #[error("invalid stencil: {0}")]
    InvalidStencil(String),
}

/// A real value per node.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    values: Vec<f64>,
}

impl Field {
    pub fn new(values: Vec<f64>) -> Result<Self, OperatorError> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(OperatorError::NonFiniteValue(i));
        }
        Ok(Field { values })
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Field { values: vec![c; n] }
    }

    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        Field { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
}

impl std::ops::Index<usize> for Field {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

/// Symmetric epsilon-ball graph with kernel edge weights
/// `w_ij = eta_chi(|x_i - x_j|)`; self-loops excluded.
#[derive(Clone, Debug)]
pub struct WeightedGraph {
    neighbors: Vec<Vec<usize>>,
    weights: Vec<Vec<f64>>,
    eps: f64,
    isolated: Vec<usize>,
}

impl WeightedGraph {
    pub fn n(&self) -> usize {
        self.neighbors.len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn weights(&self, i: usize) -> &[f64] {
        &self.weights[i]
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Nodes with an empty neighbor list, recorded as a warning at build time.
    pub fn isolated_nodes(&self) -> &[usize] {
        &self.isolated
    }

    /// Weighted degree `d_n(x_i)`.
    pub fn degree(&self, i: usize) -> f64 {
        self.weights[i].iter().sum()
    }

    /// True when every weight at node `i` equals the first one.
    pub(crate) fn uniform_weights(&self, i: usize) -> bool {
        let w = &self.weights[i];
        w.windows(2).all(|p| p[0] == p[1])
    }
}

/// Per-node epsilon-ball (outer) and k*epsilon-ball (inner) neighbor lists,
/// both self-inclusive.
#[derive(Clone, Debug)]
pub struct HypergraphStencil {
    outer: Vec<Vec<usize>>,
    inner: Vec<Vec<usize>>,
    eps: f64,
    k: f64,
}

impl HypergraphStencil {
    /// Assembles a stencil from explicit lists, checking self-inclusion.
    pub fn from_parts(
        outer: Vec<Vec<usize>>,
        inner: Vec<Vec<usize>>,
        eps: f64,
        k: f64,
    ) -> Result<Self, OperatorError> {
        if outer.len() != inner.len() {
            return Err(OperatorError::InvalidStencil(
                "outer/inner node counts differ".into(),
            ));
        }
        for (i, list) in outer.iter().enumerate() {
            if !list.contains(&i) {
                return Err(OperatorError::InvalidStencil(format!(
                    "outer list of node {i} must contain the node itself"
                )));
            }
        }
        for (i, list) in inner.iter().enumerate() {
            if !list.contains(&i) {
                return Err(OperatorError::InvalidStencil(format!(
                    "inner list of node {i} must contain the node itself"
                )));
            }
        }
        Ok(HypergraphStencil { outer, inner, eps, k })
    }

    pub fn n(&self) -> usize {
        self.outer.len()
    }

    pub fn outer(&self, i: usize) -> &[usize] {
        &self.outer[i]
    }

    pub fn inner(&self, i: usize) -> &[usize] {
        &self.inner[i]
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// `M^{k eps} u (x_j)`: maximum of `u` over the inner ball of `j`.
    pub fn local_max(&self, u: &Field, j: usize) -> f64 {
        self.inner[j]
            .iter()
            .map(|&l| u[l])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `M_{k eps} u (x_j)`: minimum of `u` over the inner ball of `j`.
    pub fn local_min(&self, u: &Field, j: usize) -> f64 {
        self.inner[j].iter().map(|&l| u[l]).fold(f64::INFINITY, f64::min)
    }
}

/// Builds the epsilon-ball graph: edges exactly the pairs with
/// `|x_i - x_j| <= eps`, `i != j`, weighted by `eta_chi`.
pub fn build_graph(
    cloud: &PointCloud,
    index: &NeighborIndex,
    eps: f64,
    kernel: &Kernel,
) -> WeightedGraph {
    let n = cloud.n();
    let d = cloud.dim();
    let mut neighbors = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut isolated = Vec::new();
    for i in 0..n {
        let ball = index.radius_neighbors(cloud, i, eps);
        let mut nbr = Vec::with_capacity(ball.len().saturating_sub(1));
        let mut w = Vec::with_capacity(ball.len().saturating_sub(1));
        for j in ball {
            if j == i {
                continue;
            }
            let weight = eta_chi(kernel, eps, cloud.distance(i, j), d);
            if weight > 0.0 {
                nbr.push(j);
                w.push(weight);
            }
        }
        if nbr.is_empty() {
            isolated.push(i);
        }
        neighbors.push(nbr);
        weights.push(w);
    }
    WeightedGraph { neighbors, weights, eps, isolated }
}

/// Builds the two-radius stencil: `outer(i)` the closed eps-ball,
/// `inner(i)` the closed k*eps-ball, both containing `i`.
pub fn build_stencil(
    cloud: &PointCloud,
    index: &NeighborIndex,
    eps: f64,
    k: f64,
) -> HypergraphStencil {
    debug_assert!(eps > 0.0 && k >= 0.0);
    let n = cloud.n();
    let mut outer = Vec::with_capacity(n);
    let mut inner = Vec::with_capacity(n);
    for i in 0..n {
        outer.push(index.radius_neighbors(cloud, i, eps));
        inner.push(if k == 0.0 {
            vec![i]
        } else {
            index.radius_neighbors(cloud, i, k * eps)
        });
    }
    HypergraphStencil { outer, inner, eps, k }
}

/// `|t|^(p-2) t` with the continuous extension to 0 at `t = 0` for all
/// `p > 1` (avoids NaN from `0^negative`).
#[inline]
pub fn signed_pow(t: f64, p: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    if p == 2.0 {
        t
    } else if p == 4.0 {
        t * t * t
    } else if p == 3.0 {
        t.abs() * t
    } else {
        t.abs().powf(p - 2.0) * t
    }
}

/// Graph p-Laplacian residual
/// `sum_j w_ij |u_j - u_i|^(p-2) (u_j - u_i)` over the neighbors of `i`.
pub fn graph_p_residual(g: &WeightedGraph, u: &Field, i: usize, p: f64) -> f64 {
    debug_assert!(p > 1.0);
    let ui = u[i];
    let mut acc = 0.0;
    for (&j, &w) in g.neighbors[i].iter().zip(&g.weights[i]) {
        acc += w * signed_pow(u[j] - ui, p);
    }
    acc
}

/// Graph infinity-Laplacian residual
/// `max_j w_ij (u_j - u_i) + min_j w_ij (u_j - u_i)`.
pub fn graph_inf_residual(g: &WeightedGraph, u: &Field, i: usize) -> Result<f64, OperatorError> {
    if g.neighbors[i].is_empty() {
        return Err(OperatorError::NoNeighbors(i));
    }
    let ui = u[i];
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    for (&j, &w) in g.neighbors[i].iter().zip(&g.weights[i]) {
        let v = w * (u[j] - ui);
        hi = hi.max(v);
        lo = lo.min(v);
    }
    Ok(hi + lo)
}

/// Game-theoretic residual
/// `(1/d_n(x_i)) * graph_2_residual + lambda (p-2) * graph_inf_residual`.
pub fn game_residual(
    g: &WeightedGraph,
    u: &Field,
    i: usize,
    p: f64,
    lambda: f64,
) -> Result<f64, OperatorError> {
    debug_assert!(p >= 2.0 && lambda > 0.0);
    let deg = g.degree(i);
    if !(deg > 0.0) {
        return Err(OperatorError::NoNeighbors(i));
    }
    let diffusive = graph_p_residual(g, u, i, 2.0) / deg;
    let inf = graph_inf_residual(g, u, i)?;
    Ok(diffusive + lambda * (p - 2.0) * inf)
}

/// Hypergraph p-Laplacian residual of `u` at node `i`:
///
/// ```text
/// 1/(2 n eps^2) * sum_{j in outer(i)} eta_chi(|x_i - x_j|)
///                 * (M^{k eps} u(x_j) + M_{k eps} u(x_j) - 2 u_i)
/// ```
pub fn hyper_residual(
    st: &HypergraphStencil,
    u: &Field,
    i: usize,
    kernel: &Kernel,
    cloud: &PointCloud,
) -> f64 {
    debug_assert_eq!(st.n(), cloud.n());
    let n = cloud.n();
    let d = cloud.dim();
    let eps = st.eps;
    let ui = u[i];
    let mut acc = 0.0;
    for &j in &st.outer[i] {
        let w = eta_chi(kernel, eps, cloud.distance(i, j), d);
        acc += w * (st.local_max(u, j) + st.local_min(u, j) - 2.0 * ui);
    }
    acc / (2.0 * n as f64 * eps * eps)
}

/// Graph p-Dirichlet energy `sum_{i,j} w_ij |u_i - u_j|^p` over ordered
/// pairs, so every edge is counted twice.
pub fn energy_graph_p(g: &WeightedGraph, u: &Field, p: f64) -> f64 {
    debug_assert!(p > 1.0);
    let mut acc = 0.0;
    for i in 0..g.n() {
        for (&j, &w) in g.neighbors[i].iter().zip(&g.weights[i]) {
            acc += w * (u[i] - u[j]).abs().powf(p);
        }
    }
    acc
}

/// Hypergraph p-energy `sum_k (max_{e_k} u - min_{e_k} u)^p` over the
/// epsilon-ball hyperedges `e_k = outer(k)`.
pub fn energy_hyper(st: &HypergraphStencil, u: &Field, p: f64) -> f64 {
    debug_assert!(p >= 1.0);
    let mut acc = 0.0;
    for k in 0..st.n() {
        let mut hi = f64::NEG_INFINITY;
        let mut lo = f64::INFINITY;
        for &j in &st.outer[k] {
            hi = hi.max(u[j]);
            lo = lo.min(u[j]);
        }
        acc += (hi - lo).powf(p);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_index, sample_cloud, DensityModel, Domain};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud_1d(xs: &[f64]) -> PointCloud {
        PointCloud::from_coords(1, xs.to_vec(), 0).unwrap()
    }

    fn random_cloud(n: usize, d: usize, seed: u64) -> PointCloud {
        let domain = Domain::unit_box(d).unwrap();
        sample_cloud(n, &domain, &DensityModel::uniform(&domain), seed).unwrap()
    }

    fn random_field(n: usize, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Field::new((0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()).unwrap()
    }

    #[test]
    fn build_graph_no_edges_beyond_eps() {
        let cloud = cloud_1d(&[0.0, 1.0]);
        let index = build_index(&cloud, 0.5).unwrap();
        let g = build_graph(&cloud, &index, 0.5, &Kernel::Constant);
        assert!(g.neighbors(0).is_empty() && g.neighbors(1).is_empty());
        assert_eq!(g.isolated_nodes(), &[0, 1]);
    }

    #[test]
    fn build_graph_path_weights() {
        let cloud = cloud_1d(&[0.0, 0.4, 0.8]);
        let index = build_index(&cloud, 0.5).unwrap();
        let g = build_graph(&cloud, &index, 0.5, &Kernel::Constant);
        assert_eq!(g.neighbors(0), &[1]);
        assert_eq!(g.neighbors(1), &[0, 2]);
        assert_eq!(g.neighbors(2), &[1]);
        for i in 0..3 {
            for &w in g.weights(i) {
                assert!((w - 2.0).abs() < 1e-15, "constant kernel weight is 1/eps");
            }
        }
        assert!(g.isolated_nodes().is_empty());
    }

    #[test]
    fn build_graph_matches_brute_force_adjacency() {
        let cloud = random_cloud(100, 2, 21);
        let index = build_index(&cloud, 0.2).unwrap();
        let eps = 0.2;
        let g = build_graph(&cloud, &index, eps, &Kernel::Constant);
        for i in 0..100 {
            let want: Vec<usize> = (0..100)
                .filter(|&j| j != i && cloud.distance_sq(i, j) <= eps * eps)
                .collect();
            assert_eq!(g.neighbors(i), want.as_slice(), "node {i}");
            // Symmetry of membership and weights.
            for (&j, &w) in g.neighbors(i).iter().zip(g.weights(i)) {
                let pos = g.neighbors(j).iter().position(|&l| l == i).unwrap();
                assert_eq!(g.weights(j)[pos], w);
            }
        }
    }

    #[test]
    fn build_stencil_k_zero_inner_is_self() {
        let cloud = random_cloud(50, 1, 2);
        let index = build_index(&cloud, 0.2).unwrap();
        let st = build_stencil(&cloud, &index, 0.2, 0.0);
        for i in 0..50 {
            assert_eq!(st.inner(i), &[i]);
        }
    }

    #[test]
    fn build_stencil_distance_table() {
        let cloud = cloud_1d(&[0.0, 0.5, 1.0]);
        let index = build_index(&cloud, 0.6).unwrap();
        let st = build_stencil(&cloud, &index, 0.6, 1.0);
        assert_eq!(st.outer(1), &[0, 1, 2]);
        assert_eq!(st.inner(0), &[0, 1]);
        // Outer lists delegate to radius_neighbors.
        for i in 0..3 {
            assert_eq!(st.outer(i), index.radius_neighbors(&cloud, i, 0.6).as_slice());
        }
    }

    #[test]
    fn graph_p_residual_examples() {
        // Star: center node 0 valued 0, leaves valued 1 and 2, unit weights.
        let cloud = cloud_1d(&[0.5, 0.0, 1.0]);
        let index = build_index(&cloud, 0.5).unwrap();
        // eps = 0.5 so the center connects to both leaves, leaves only to center.
        let g = build_graph(&cloud, &index, 0.5, &Kernel::Constant);
        // Constant kernel gives uniform weight 2; divide out to unit weights
        // by scaling the expectation.
        let u = Field::new(vec![0.0, 1.0, 2.0]).unwrap();
        let r = graph_p_residual(&g, &u, 0, 3.0);
        assert!((r - 2.0 * 5.0).abs() < 1e-12, "weights 2 scale the star value 5");

        let constant = Field::constant(3, 0.7);
        assert_eq!(graph_p_residual(&g, &constant, 0, 3.0), 0.0);

        // Path 0 - 1/2 - 1 with linear values has zero residual at the middle.
        let path = cloud_1d(&[0.0, 0.5, 1.0]);
        let pindex = build_index(&path, 0.5).unwrap();
        let pg = build_graph(&path, &pindex, 0.5, &Kernel::Constant);
        let lin = Field::new(vec![0.0, 0.5, 1.0]).unwrap();
        for p in [2.0, 2.7, 3.0, 4.0, 7.5] {
            assert!(graph_p_residual(&pg, &lin, 1, p).abs() < 1e-15);
        }
    }

    #[test]
    fn signed_pow_continuous_extension() {
        assert_eq!(signed_pow(0.0, 1.5), 0.0);
        assert_eq!(signed_pow(0.0, 2.0), 0.0);
        assert!((signed_pow(-2.0, 3.0) + 4.0).abs() < 1e-15);
        assert!((signed_pow(2.0, 1.5) - 2.0f64.sqrt()).abs() < 1e-15);
        assert!(signed_pow(1e-300, 1.2).is_finite());
    }

    #[test]
    fn graph_inf_residual_examples() {
        let cloud = cloud_1d(&[0.5, 0.0, 1.0]);
        let index = build_index(&cloud, 0.5).unwrap();
        let g = build_graph(&cloud, &index, 0.5, &Kernel::Constant);
        let u = Field::new(vec![0.0, -0.5, 1.5]).unwrap();
        // w = 2: contributions {-1, 3} at the center.
        assert!((graph_inf_residual(&g, &u, 0).unwrap() - 2.0).abs() < 1e-15);
        // Single neighbor: max = min, residual 2t.
        let t = 2.0 * (u[0] - u[1]);
        assert!((graph_inf_residual(&g, &u, 1).unwrap() - 2.0 * t).abs() < 1e-15);
        let constant = Field::constant(3, 3.0);
        assert_eq!(graph_inf_residual(&g, &constant, 0).unwrap(), 0.0);

        let lonely = cloud_1d(&[0.0, 1.0]);
        let li = build_index(&lonely, 0.3).unwrap();
        let lg = build_graph(&lonely, &li, 0.3, &Kernel::Constant);
        assert!(matches!(
            graph_inf_residual(&lg, &Field::constant(2, 0.0), 0),
            Err(OperatorError::NoNeighbors(0))
        ));
    }

    #[test]
    fn game_residual_examples() {
        let cloud = cloud_1d(&[0.5, 0.0, 1.0]);
        let index = build_index(&cloud, 0.5).unwrap();
        let g = build_graph(&cloud, &index, 0.5, &Kernel::Constant);
        let u = Field::new(vec![0.0, 1.0, 2.0]).unwrap();
        // Normalized diffusion term is weight-invariant: (1 + 2)/2 = 1.5.
        // Inf term with w = 2: max 4 + min 2 = 6.
        let r = game_residual(&g, &u, 0, 3.0, 1.0).unwrap();
        assert!((r - (1.5 + 6.0)).abs() < 1e-12);
        // p = 2 drops the inf term.
        let r2 = game_residual(&g, &u, 0, 2.0, 1.0).unwrap();
        let want = graph_p_residual(&g, &u, 0, 2.0) / g.degree(0);
        assert!((r2 - want).abs() < 1e-15);
        let constant = Field::constant(3, -1.0);
        assert_eq!(game_residual(&g, &constant, 0, 3.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn hyper_residual_hand_example() {
        let cloud = cloud_1d(&[0.0, 0.5, 1.0]);
        let index = build_index(&cloud, 0.6).unwrap();
        let st = build_stencil(&cloud, &index, 0.6, 1.0);
        let u = Field::new(vec![0.0, 0.0, 1.0]).unwrap();
        // Inner maxima (0, 1, 1), minima (0, 0, 0); weights 1/0.6;
        // prefactor 1/(2*3*0.36).
        let want = (1.0 / 0.6) * (0.0 + 1.0 + 1.0) / (2.0 * 3.0 * 0.36);
        let got = hyper_residual(&st, &u, 1, &Kernel::Constant, &cloud);
        assert!((got - want).abs() < 1e-12);
        assert!((got - 1.5432098765432098).abs() < 1e-12);

        let constant = Field::constant(3, 5.0);
        assert_eq!(hyper_residual(&st, &constant, 1, &Kernel::Constant, &cloud), 0.0);
    }

    #[test]
    fn hyper_residual_k_zero_reduces_to_graph_2() {
        for seed in 0..50 {
            let cloud = random_cloud(100, 2, seed);
            let index = build_index(&cloud, 0.25).unwrap();
            let eps = 0.25;
            let st = build_stencil(&cloud, &index, eps, 0.0);
            let g = build_graph(&cloud, &index, eps, &Kernel::Constant);
            let u = random_field(100, seed ^ 0xabcd);
            let scale = 1.0 / (100.0 * eps * eps);
            for i in (0..100).step_by(13) {
                let h = hyper_residual(&st, &u, i, &Kernel::Constant, &cloud);
                let g2 = graph_p_residual(&g, &u, i, 2.0) * scale;
                assert!((h - g2).abs() <= 1e-12, "seed {seed} node {i}: {h} vs {g2}");
            }
        }
    }

    #[test]
    fn hyper_residual_is_monotone() {
        let cloud = random_cloud(60, 1, 5);
        let index = build_index(&cloud, 0.2).unwrap();
        let st = build_stencil(&cloud, &index, 0.2, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..20 {
            let u = random_field(60, rng.random());
            let mut v_vals = u.as_slice().to_vec();
            let i = rng.random_range(0..60);
            for (l, v) in v_vals.iter_mut().enumerate() {
                if l != i {
                    *v += rng.random::<f64>();
                }
            }
            let v = Field::new(v_vals).unwrap();
            let ru = hyper_residual(&st, &u, i, &Kernel::Constant, &cloud);
            let rv = hyper_residual(&st, &v, i, &Kernel::Constant, &cloud);
            assert!(ru <= rv + 1e-12, "monotonicity violated at node {i}");
        }
    }

    #[test]
    fn residuals_are_translation_invariant() {
        let cloud = random_cloud(40, 2, 3);
        let index = build_index(&cloud, 0.4).unwrap();
        let g = build_graph(&cloud, &index, 0.4, &Kernel::Constant);
        let st = build_stencil(&cloud, &index, 0.4, 0.7);
        let u = random_field(40, 1);
        let shifted =
            Field::new(u.as_slice().iter().map(|v| v + 3.25).collect()).unwrap();
        for i in [0, 7, 19, 39] {
            assert!(
                (graph_p_residual(&g, &u, i, 3.0) - graph_p_residual(&g, &shifted, i, 3.0))
                    .abs()
                    < 1e-9
            );
            assert!(
                (graph_inf_residual(&g, &u, i).unwrap()
                    - graph_inf_residual(&g, &shifted, i).unwrap())
                .abs()
                    < 1e-9
            );
            assert!(
                (game_residual(&g, &u, i, 4.0, 0.5).unwrap()
                    - game_residual(&g, &shifted, i, 4.0, 0.5).unwrap())
                .abs()
                    < 1e-9
            );
            assert!(
                (hyper_residual(&st, &u, i, &Kernel::Constant, &cloud)
                    - hyper_residual(&st, &shifted, i, &Kernel::Constant, &cloud))
                .abs()
                    < 1e-9
            );
        }
    }

    #[test]
    fn energy_graph_p_examples() {
        // Single edge, weight 1 via a tabulated unit profile and eps = 1.
        let cloud = cloud_1d(&[0.0, 1.0]);
        let index = build_index(&cloud, 1.0).unwrap();
        let g = build_graph(&cloud, &index, 1.0, &Kernel::Constant);
        let u = Field::new(vec![0.0, 1.0]).unwrap();
        // eps = 1 so the constant-kernel weight is exactly 1; ordered pairs
        // count the edge twice.
        assert!((energy_graph_p(&g, &u, 4.0) - 2.0).abs() < 1e-15);
        assert_eq!(energy_graph_p(&g, &Field::constant(2, 9.0), 4.0), 0.0);
        assert!(energy_graph_p(&g, &u, 2.5) > 0.0);
    }

    #[test]
    fn energy_gradient_matches_residual() {
        // residual_i = -1/(2p) dE/du_i (ordered-pair double counting).
        let cloud = random_cloud(10, 2, 17);
        let index = build_index(&cloud, 0.8).unwrap();
        let g = build_graph(&cloud, &index, 0.8, &Kernel::Constant);
        let u = random_field(10, 4);
        let h = 1e-6;
        for p in [2.0, 3.0, 4.0] {
            for i in 0..10 {
                let mut up = u.as_slice().to_vec();
                let mut dn = u.as_slice().to_vec();
                up[i] += h;
                dn[i] -= h;
                let de = (energy_graph_p(&g, &Field::new(up).unwrap(), p)
                    - energy_graph_p(&g, &Field::new(dn).unwrap(), p))
                    / (2.0 * h);
                let want = -de / (2.0 * p);
                let got = graph_p_residual(&g, &u, i, p);
                let denom = want.abs().max(1e-3);
                assert!(
                    (got - want).abs() / denom < 1e-6,
                    "p={p} i={i}: residual {got} vs gradient {want}"
                );
            }
        }
    }

    #[test]
    fn energy_hyper_examples() {
        // One genuine hyperedge {0,1,2} plus two singleton hyperedges.
        let st = HypergraphStencil::from_parts(
            vec![vec![0, 1, 2], vec![1], vec![2]],
            vec![vec![0], vec![1], vec![2]],
            1.0,
            0.0,
        )
        .unwrap();
        let u = Field::new(vec![0.0, 5.0, 1.0]).unwrap();
        assert!((energy_hyper(&st, &u, 2.0) - 25.0).abs() < 1e-15);
        assert_eq!(energy_hyper(&st, &Field::constant(3, 2.0), 2.0), 0.0);
    }

    #[test]
    fn energy_hyper_monotone_under_contraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        for _ in 0..25 {
            let cloud = random_cloud(5, 1, rng.random());
            let index = build_index(&cloud, 0.5).unwrap();
            let st = build_stencil(&cloud, &index, 0.5, 1.0);
            let u = random_field(5, rng.random());
            let mean = u.as_slice().iter().sum::<f64>() / 5.0;
            let p = 1.0 + 3.0 * rng.random::<f64>();
            let mut last = 0.0;
            for step in 0..=10 {
                let t = step as f64 / 10.0;
                let v = Field::new(
                    u.as_slice().iter().map(|x| mean + t * (x - mean)).collect(),
                )
                .unwrap();
                let e = energy_hyper(&st, &v, p);
                assert!(e >= last - 1e-12, "energy must grow away from the mean");
                last = e;
            }
        }
    }

    #[test]
    fn stencil_from_parts_requires_self_inclusion() {
        assert!(HypergraphStencil::from_parts(
            vec![vec![1], vec![1]],
            vec![vec![0], vec![1]],
            1.0,
            0.0
        )
        .is_err());
    }

    #[test]
    fn field_validation() {
        assert!(Field::new(vec![0.0, f64::INFINITY]).is_err());
        assert!(Field::new(vec![0.0, 1.0]).is_ok());
    }
}
