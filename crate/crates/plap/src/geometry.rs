//! Point-cloud generation, spatial indexing with exact closed-ball radius
//! queries, and the epsilon/delta schedules tying sample size to stencil
//! radius.
//!
//! All radius queries use the closed-ball convention `|x_i - x_j| <= r`.

use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug, thiserror::Error, PartialEq)]
pub enum GeometryError {
    #[error("dimension must be at least 1, got {0}")]
    InvalidDimension(usize),
    #[error("point cloud needs at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("coordinate {index} is not finite")]
    NonFiniteCoordinate { index: usize },
    #[error("point {index} lies outside the domain")]
    PointOutsideDomain { index: usize },
    #[error("density upper bound too loose (acceptance rate {rate:.2e} after warm-up)")]
    RejectionStalled { rate: f64 },
    #[error("density upper bound must be finite and positive")]
    InvalidUpperBound,
    #[error("cell size must be positive, got {0}")]
    InvalidCellSize(f64),
    #[error("delta schedule undefined below d=2 (got d={0})")]
    DeltaUndefined(usize),
    #[error("epsilon exceeds domain (epsilon={eps}, diameter={diameter})")]
    EpsilonExceedsDomain { eps: f64, diameter: f64 },
    #[error("epsilon schedule exponent must lie in (0, 0.5), got {0}")]
    InvalidExponent(f64),
    #[error("epsilon schedule amplitude must be positive, got {0}")]
    InvalidAmplitude(f64),
    #[error("invalid label set: {0}")]
    InvalidLabels(String),
}

/// Bounded convex sample domains.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DomainKind {
    /// The unit box `[0,1]^d`.
    UnitBox,
    /// The closed unit ball `{ x : |x| <= 1 }`.
    UnitBall,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Domain {
    pub kind: DomainKind,
    pub dim: usize,
}

impl Domain {
    pub fn unit_box(dim: usize) -> Result<Self, GeometryError> {
        if dim < 1 {
            return Err(GeometryError::InvalidDimension(dim));
        }
        Ok(Domain { kind: DomainKind::UnitBox, dim })
    }

    pub fn unit_ball(dim: usize) -> Result<Self, GeometryError> {
        if dim < 1 {
            return Err(GeometryError::InvalidDimension(dim));
        }
        Ok(Domain { kind: DomainKind::UnitBall, dim })
    }

    /// Closed-domain membership test.
    pub fn contains(&self, x: &[f64]) -> bool {
        debug_assert_eq!(x.len(), self.dim);
        match self.kind {
            DomainKind::UnitBox => x.iter().all(|&c| (0.0..=1.0).contains(&c)),
            DomainKind::UnitBall => x.iter().map(|c| c * c).sum::<f64>() <= 1.0,
        }
    }

    pub fn diameter(&self) -> f64 {
        match self.kind {
            DomainKind::UnitBox => (self.dim as f64).sqrt(),
            DomainKind::UnitBall => 2.0,
        }
    }

    /// Axis-aligned bounding box, as `(lo, hi)` per coordinate.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match self.kind {
            DomainKind::UnitBox => (vec![0.0; self.dim], vec![1.0; self.dim]),
            DomainKind::UnitBall => (vec![-1.0; self.dim], vec![1.0; self.dim]),
        }
    }

    pub fn center(&self) -> Vec<f64> {
        match self.kind {
            DomainKind::UnitBox => vec![0.5; self.dim],
            DomainKind::UnitBall => vec![0.0; self.dim],
        }
    }

    /// Distance from `x` to the boundary (nonnegative inside the domain).
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        match self.kind {
            DomainKind::UnitBox => x
                .iter()
                .map(|&c| c.min(1.0 - c))
                .fold(f64::INFINITY, f64::min),
            DomainKind::UnitBall => {
                1.0 - x.iter().map(|c| c * c).sum::<f64>().sqrt()
            }
        }
    }

    pub fn volume(&self) -> f64 {
        match self.kind {
            DomainKind::UnitBox => 1.0,
            DomainKind::UnitBall => unit_ball_volume(self.dim),
        }
    }
}

/// Volume of the d-dimensional unit ball, `pi^(d/2) / Gamma(d/2 + 1)`.
pub fn unit_ball_volume(dim: usize) -> f64 {
    std::f64::consts::PI.powf(dim as f64 / 2.0) / crate::kernels::gamma_half(dim + 2)
}

/// A sample set with its dimension and the seed it was drawn from.
///
/// Coordinates are stored flat, node `i` occupying `coords[i*dim..(i+1)*dim]`.
#[derive(Clone, Debug)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
    seed: u64,
}

impl PointCloud {
    pub fn from_coords(dim: usize, coords: Vec<f64>, seed: u64) -> Result<Self, GeometryError> {
        if dim < 1 {
            return Err(GeometryError::InvalidDimension(dim));
        }
        if coords.is_empty() || coords.len() % dim != 0 {
            return Err(GeometryError::TooFewPoints { need: 1, got: coords.len() / dim });
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(GeometryError::NonFiniteCoordinate { index: i / dim });
        }
        Ok(PointCloud { dim, coords, seed })
    }

    pub fn n(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.distance_sq(i, j).sqrt()
    }

    pub fn distance_sq(&self, i: usize, j: usize) -> f64 {
        let a = self.point(i);
        let b = self.point(j);
        let mut s = 0.0;
        for k in 0..self.dim {
            let d = a[k] - b[k];
            s += d * d;
        }
        s
    }
}

/// Observed `(node, value)` pairs; the Dirichlet constraint of every equation.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelSet {
    entries: Vec<(usize, f64)>,
}

impl LabelSet {
    /// Validates against a cloud of `n_total` nodes: indices distinct and in
    /// range, values finite, `1 <= N < n_total`.
    pub fn new(mut entries: Vec<(usize, f64)>, n_total: usize) -> Result<Self, GeometryError> {
        if entries.is_empty() {
            return Err(GeometryError::InvalidLabels("label set is empty".into()));
        }
        if entries.len() >= n_total {
            return Err(GeometryError::InvalidLabels(format!(
                "need N < n, got N={} with n={}",
                entries.len(),
                n_total
            )));
        }
        entries.sort_by_key(|e| e.0);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(GeometryError::InvalidLabels(format!(
                    "duplicate node index {}",
                    w[0].0
                )));
            }
        }
        for &(i, v) in &entries {
            if i >= n_total {
                return Err(GeometryError::InvalidLabels(format!(
                    "node index {i} out of range (n={n_total})"
                )));
            }
            if !v.is_finite() {
                return Err(GeometryError::InvalidLabels(format!(
                    "value at node {i} is not finite"
                )));
            }
        }
        Ok(LabelSet { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(usize, f64)> {
        self.entries.iter()
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn min_value(&self) -> f64 {
        self.entries.iter().map(|e| e.1).fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.entries.iter().map(|e| e.1).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean_value(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum::<f64>() / self.entries.len() as f64
    }

    /// Per-node labeled mask over `n` nodes.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &(i, _) in &self.entries {
            m[i] = true;
        }
        m
    }
}

type DensityFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradientFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// A probability density on the domain together with its gradient and an
/// upper bound used by rejection sampling.
#[derive(Clone)]
pub struct DensityModel {
    rho: Arc<DensityFn>,
    grad_rho: Arc<GradientFn>,
    upper_bound: f64,
}

impl DensityModel {
    pub fn new(
        rho: Arc<DensityFn>,
        grad_rho: Arc<GradientFn>,
        upper_bound: f64,
    ) -> Result<Self, GeometryError> {
        if !upper_bound.is_finite() || upper_bound <= 0.0 {
            return Err(GeometryError::InvalidUpperBound);
        }
        Ok(DensityModel { rho, grad_rho, upper_bound })
    }

    /// The uniform density `1/|Omega|` on the given domain.
    pub fn uniform(domain: &Domain) -> Self {
        let v = domain.volume();
        let dim = domain.dim;
        DensityModel {
            rho: Arc::new(move |_| 1.0 / v),
            grad_rho: Arc::new(move |_| vec![0.0; dim]),
            upper_bound: 1.0 / v,
        }
    }

    /// The normalized 1D ramp `rho(x) = (2/3)(1 + x)` on `[0,1]`.
    pub fn ramp_1d() -> Self {
        DensityModel {
            rho: Arc::new(|x| 2.0 / 3.0 * (1.0 + x[0])),
            grad_rho: Arc::new(|_| vec![2.0 / 3.0]),
            upper_bound: 4.0 / 3.0,
        }
    }

    pub fn rho(&self, x: &[f64]) -> f64 {
        (self.rho)(x)
    }

    pub fn grad_rho(&self, x: &[f64]) -> Vec<f64> {
        (self.grad_rho)(x)
    }

    pub fn upper_bound(&self) -> f64 {
        self.upper_bound
    }
}

/// Draws `n` i.i.d. samples from `density` by rejection against the uniform
/// proposal on the domain. Bit-identical output for equal seeds.
pub fn sample_cloud(
    n: usize,
    domain: &Domain,
    density: &DensityModel,
    seed: u64,
) -> Result<PointCloud, GeometryError> {
    if n < 2 {
        return Err(GeometryError::TooFewPoints { need: 2, got: n });
    }
    if !density.upper_bound.is_finite() {
        return Err(GeometryError::InvalidUpperBound);
    }
    let d = domain.dim;
    let (lo, hi) = domain.bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords = Vec::with_capacity(n * d);
    let mut x = vec![0.0; d];
    let mut proposals: u64 = 0;
    let mut accepted: u64 = 0;
    const WARM_UP: u64 = 1_000;
    while accepted < n as u64 {
        // Uniform proposal on the domain: draw in the bounding box, keep
        // points inside (only matters for the ball).
        loop {
            for k in 0..d {
                x[k] = lo[k] + (hi[k] - lo[k]) * rng.random::<f64>();
            }
            if domain.contains(&x) {
                break;
            }
        }
        proposals += 1;
        let r = density.rho(&x);
        if r > density.upper_bound * (1.0 + 1e-12) {
            return Err(GeometryError::InvalidUpperBound);
        }
        if rng.random::<f64>() * density.upper_bound <= r {
            coords.extend_from_slice(&x);
            accepted += 1;
        } else if proposals >= WARM_UP {
            let rate = accepted as f64 / proposals as f64;
            if rate < 1e-3 {
                return Err(GeometryError::RejectionStalled { rate });
            }
        }
    }
    PointCloud::from_coords(d, coords, seed)
}

/// Uniform-grid bucket index over the cloud; immutable once built.
///
/// Node `i` lives in the bucket `floor(x_i / cell_size)` taken componentwise,
/// so a radius query with `r <= cell_size` inspects at most `3^d` buckets.
#[derive(Clone, Debug)]
pub struct NeighborIndex {
    cell_size: f64,
    buckets: HashMap<Vec<i64>, Vec<usize>>,
}

pub fn build_index(cloud: &PointCloud, cell_size: f64) -> Result<NeighborIndex, GeometryError> {
    if !(cell_size > 0.0) || !cell_size.is_finite() {
        return Err(GeometryError::InvalidCellSize(cell_size));
    }
    let d = cloud.dim();
    let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    let mut key = vec![0i64; d];
    for i in 0..cloud.n() {
        let p = cloud.point(i);
        for k in 0..d {
            key[k] = (p[k] / cell_size).floor() as i64;
        }
        if let Some(bucket) = buckets.get_mut(key.as_slice()) {
            bucket.push(i);
        } else {
            buckets.insert(key.clone(), vec![i]);
        }
    }
    Ok(NeighborIndex { cell_size, buckets })
}

impl NeighborIndex {
    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn bucket_count(&self) -> usize {
        self.buckets.len()
    }

    pub fn bucket_sizes(&self) -> impl Iterator<Item = usize> + '_ {
        self.buckets.values().map(|b| b.len())
    }

    /// Calls `f` for every node inside the closed ball `B(x, r)`, self
    /// included when `x` is a node position. Visit order is unspecified.
    pub fn for_each_in_ball<F: FnMut(usize)>(
        &self,
        cloud: &PointCloud,
        x: &[f64],
        r: f64,
        mut f: F,
    ) {
        let d = cloud.dim();
        let r2 = r * r;
        let mut lo = vec![0i64; d];
        let mut hi = vec![0i64; d];
        for k in 0..d {
            lo[k] = ((x[k] - r) / self.cell_size).floor() as i64;
            hi[k] = ((x[k] + r) / self.cell_size).floor() as i64;
        }
        let mut cell = lo.clone();
        loop {
            if let Some(bucket) = self.buckets.get(cell.as_slice()) {
                for &j in bucket {
                    let p = cloud.point(j);
                    let mut s = 0.0;
                    for k in 0..d {
                        let t = p[k] - x[k];
                        s += t * t;
                    }
                    if s <= r2 {
                        f(j);
                    }
                }
            }
            // Odometer walk over the cell range.
            let mut k = 0;
            loop {
                if k == d {
                    return;
                }
                cell[k] += 1;
                if cell[k] <= hi[k] {
                    break;
                }
                cell[k] = lo[k];
                k += 1;
            }
        }
    }

    /// Exactly `{ j : |x_i - x_j| <= r }` (closed ball, includes `i`),
    /// sorted ascending.
    pub fn radius_neighbors(&self, cloud: &PointCloud, i: usize, r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_in_ball(cloud, cloud.point(i), r, |j| out.push(j));
        out.sort_unstable();
        out
    }
}

/// The transport-scale schedule `delta_n`:
/// `(ln n)^{3/4}/sqrt(n)` for `d = 2`, `(ln n / n)^{1/d}` for `d >= 3`.
pub fn delta_n(n: usize, d: usize) -> Result<f64, GeometryError> {
    if d < 2 {
        return Err(GeometryError::DeltaUndefined(d));
    }
    if n < 3 {
        return Err(GeometryError::TooFewPoints { need: 3, got: n });
    }
    let nf = n as f64;
    Ok(if d == 2 {
        nf.ln().powf(0.75) / nf.sqrt()
    } else {
        (nf.ln() / nf).powf(1.0 / d as f64)
    })
}

/// `delta_n` with the documented `d = 1` extrapolation: reuse the `d = 2`
/// formula for one-dimensional experiments.
pub fn delta_n_extrapolated(n: usize, d: usize) -> Result<f64, GeometryError> {
    delta_n(n, d.max(2))
}

/// The stencil radius schedule `amplitude * delta_n^exponent`. Requires
/// `0 < exponent < 0.5` so that `epsilon_n >> sqrt(delta_n)` asymptotically;
/// rejects results at or above the domain diameter.
pub fn epsilon_schedule(
    n: usize,
    d: usize,
    amplitude: f64,
    exponent: f64,
    domain: &Domain,
) -> Result<f64, GeometryError> {
    if !(amplitude > 0.0) {
        return Err(GeometryError::InvalidAmplitude(amplitude));
    }
    if !(exponent > 0.0 && exponent < 0.5) {
        return Err(GeometryError::InvalidExponent(exponent));
    }
    let delta = delta_n_extrapolated(n, d)?;
    let eps = amplitude * delta.powf(exponent);
    let diameter = domain.diameter();
    if eps >= diameter {
        return Err(GeometryError::EpsilonExceedsDomain { eps, diameter });
    }
    Ok(eps)
}
