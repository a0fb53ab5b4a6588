//! Constrained solvers for the four discrete equations: a monotone
//! fixed-point sweep for the hypergraph p-Laplacian and node-wise
//! root-finding sweeps for the graph equations, plus the connectivity
//! preflight and comparison/maximum-principle guards.
//!
//! Labeled nodes are hard constraints: they are set to their values once and
//! never updated. Convergence is declared on the sup norm of a sweep's
//! update, not on the residual, because the residual scale varies with `n`
//! and `eps`.

use std::time::Instant;

use rayon::prelude::*;

use crate::geometry::{GeometryError, LabelSet, PointCloud};
use crate::kernels::{eta_chi, Kernel};
use crate::operators::{signed_pow, Field, HypergraphStencil, OperatorError, WeightedGraph};

#[derive(Clone, Debug, thiserror::Error, PartialEq)]
pub enum SolveError {
    #[error("hypergraph not connected")]
    HypergraphNotConnected,
    #[error("graph not connected")]
    GraphNotConnected,
    #[error("exponent must satisfy p >= 2, got {0}")]
    InvalidExponent(f64),
    #[error("lambda must be positive, got {0}")]
    InvalidLambda(f64),
    #[error("invalid solver config: {0}")]
    InvalidConfig(String),
    #[error("label index {0} out of range")]
    LabelOutOfRange(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sweep {
    Jacobi,
    GaussSeidel,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Init {
    /// Mean of the label values; lies inside the maximum-principle interval.
    LabelMean,
    Zeros,
    Given(Field),
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// Sup-norm tolerance on the per-sweep update.
    pub tol: f64,
    pub max_iter: usize,
    pub sweep: Sweep,
    /// Damping in (0, 1]; 1 is the undamped update.
    pub damping: f64,
    pub init: Init,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-8,
            max_iter: 200_000,
            sweep: Sweep::GaussSeidel,
            damping: 1.0,
            init: Init::LabelMean,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<(), SolveError> {
        if !(self.tol > 0.0) {
            return Err(SolveError::InvalidConfig(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter < 1 {
            return Err(SolveError::InvalidConfig("max_iter must be at least 1".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(SolveError::InvalidConfig(format!(
                "damping must lie in (0,1], got {}",
                self.damping
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_update: f64,
    pub converged: bool,
    pub wall_seconds: f64,
}

/// Breadth-first search over the outer-neighbor lists; true iff the
/// epsilon-ball hypergraph has one component.
pub fn check_connected(st: &HypergraphStencil) -> bool {
    connected_via(st.n(), |i| st.outer(i))
}

/// Connectivity of the weighted graph via its neighbor lists.
pub fn graph_connected(g: &WeightedGraph) -> bool {
    connected_via(g.n(), |i| g.neighbors(i))
}

fn connected_via<'a, F: Fn(usize) -> &'a [usize]>(n: usize, neighbors: F) -> bool {
    if n == 0 {
        return true;
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1usize;
    while let Some(i) = stack.pop() {
        for &j in neighbors(i) {
            if !seen[j] {
                seen[j] = true;
                count += 1;
                stack.push(j);
            }
        }
    }
    count == n
}

fn init_field(n: usize, labels: &LabelSet, init: &Init) -> Result<Vec<f64>, SolveError> {
    let mut u = match init {
        Init::LabelMean => vec![labels.mean_value(); n],
        Init::Zeros => vec![0.0; n],
        Init::Given(f) => {
            if f.len() != n {
                return Err(SolveError::InvalidConfig(format!(
                    "given init has length {}, expected {n}",
                    f.len()
                )));
            }
            f.as_slice().to_vec()
        }
    };
    for &(i, y) in labels.iter() {
        if i >= n {
            return Err(SolveError::LabelOutOfRange(i));
        }
        u[i] = y;
    }
    Ok(u)
}

/// Precomputed outer-ball weights for the hypergraph sweep.
struct HyperWeights {
    w: Vec<Vec<f64>>,
    wsum: Vec<f64>,
    /// Per-node flag: all outer weights equal (constant kernel), which lets
    /// the update skip the weighted sum.
    uniform: Vec<bool>,
}

fn hyper_weights(st: &HypergraphStencil, kernel: &Kernel, cloud: &PointCloud) -> HyperWeights {
    let n = st.n();
    let d = cloud.dim();
    let eps = st.eps();
    let mut w = Vec::with_capacity(n);
    let mut wsum = Vec::with_capacity(n);
    let mut uniform = Vec::with_capacity(n);
    for i in 0..n {
        let row: Vec<f64> = st
            .outer(i)
            .iter()
            .map(|&j| eta_chi(kernel, eps, cloud.distance(i, j), d))
            .collect();
        wsum.push(row.iter().sum());
        uniform.push(row.windows(2).all(|p| p[0] == p[1]));
        w.push(row);
    }
    HyperWeights { w, wsum, uniform }
}

fn hyper_update(
    st: &HypergraphStencil,
    hw: &HyperWeights,
    maxs: &[f64],
    mins: &[f64],
    i: usize,
) -> f64 {
    let outer = st.outer(i);
    if hw.uniform[i] {
        let mut s = 0.0;
        for &j in outer {
            s += maxs[j] + mins[j];
        }
        s / (2.0 * outer.len() as f64)
    } else {
        let mut s = 0.0;
        for (&j, &wij) in outer.iter().zip(&hw.w[i]) {
            s += wij * (maxs[j] + mins[j]);
        }
        s / (2.0 * hw.wsum[i])
    }
}

fn local_extrema(st: &HypergraphStencil, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = st.n();
    let compute = |j: usize| {
        let mut hi = f64::NEG_INFINITY;
        let mut lo = f64::INFINITY;
        for &l in st.inner(j) {
            hi = hi.max(u[l]);
            lo = lo.min(u[l]);
        }
        (hi, lo)
    };
    if n >= 4096 {
        (0..n).into_par_iter().map(compute).unzip()
    } else {
        (0..n).map(compute).unzip()
    }
}

/// One undamped Jacobi application of the hypergraph fixed-point map `T`:
/// labeled nodes reset to their values, every other node replaced by the
/// kernel-weighted average of `(M^{k eps} u + M_{k eps} u) / 2` over its
/// outer ball.
pub fn jacobi_step_hypergraph(
    st: &HypergraphStencil,
    labels: &LabelSet,
    kernel: &Kernel,
    cloud: &PointCloud,
    u: &Field,
) -> Field {
    let hw = hyper_weights(st, kernel, cloud);
    let labeled = labels.mask(st.n());
    let mut values = u.as_slice().to_vec();
    for &(i, y) in labels.iter() {
        values[i] = y;
    }
    let (maxs, mins) = local_extrema(st, &values);
    let out: Vec<f64> = (0..st.n())
        .map(|i| {
            if labeled[i] {
                values[i]
            } else {
                hyper_update(st, &hw, &maxs, &mins, i)
            }
        })
        .collect();
    Field::from_raw(out)
}

/// Solves the hypergraph p-Laplacian equation by the monotone fixed-point
/// sweep. Unlabeled node update:
/// `u_i <- (1-damping) u_i + damping * sum_j w_ij (M_j + m_j) / (2 sum_j w_ij)`.
pub fn solve_hypergraph(
    st: &HypergraphStencil,
    labels: &LabelSet,
    kernel: &Kernel,
    cloud: &PointCloud,
    cfg: &SolverConfig,
) -> Result<(Field, SolveReport), SolveError> {
    cfg.validate()?;
    let n = st.n();
    if cloud.n() != n {
        return Err(SolveError::InvalidConfig(format!(
            "stencil has {n} nodes, cloud has {}",
            cloud.n()
        )));
    }
    if !check_connected(st) {
        return Err(SolveError::HypergraphNotConnected);
    }
    let start = Instant::now();
    let hw = hyper_weights(st, kernel, cloud);
    let labeled = labels.mask(n);
    let mut u = init_field(n, labels, &cfg.init)?;
    let theta = cfg.damping;

    let mut iterations = 0;
    let mut final_update = f64::INFINITY;
    let mut converged = false;

    match cfg.sweep {
        Sweep::Jacobi => {
            let mut next = u.clone();
            while iterations < cfg.max_iter {
                iterations += 1;
                let (maxs, mins) = local_extrema(st, &u);
                let apply = |i: usize| -> f64 {
                    if labeled[i] {
                        u[i]
                    } else {
                        let t = hyper_update(st, &hw, &maxs, &mins, i);
                        u[i] + theta * (t - u[i])
                    }
                };
                if n >= 4096 {
                    next.par_iter_mut()
                        .enumerate()
                        .for_each(|(i, slot)| *slot = apply(i));
                } else {
                    for (i, slot) in next.iter_mut().enumerate() {
                        *slot = apply(i);
                    }
                }
                let mut sup = 0.0f64;
                for i in 0..n {
                    sup = sup.max((next[i] - u[i]).abs());
                }
                std::mem::swap(&mut u, &mut next);
                final_update = sup;
                if sup <= cfg.tol {
                    converged = true;
                    break;
                }
            }
        }
        Sweep::GaussSeidel => {
            // Incrementally maintained inner-ball extrema with witnesses.
            let (mut maxs, mut mins) = local_extrema(st, &u);
            let mut amax = vec![0usize; n];
            let mut amin = vec![0usize; n];
            for j in 0..n {
                for &l in st.inner(j) {
                    if u[l] == maxs[j] {
                        amax[j] = l;
                        break;
                    }
                }
                for &l in st.inner(j) {
                    if u[l] == mins[j] {
                        amin[j] = l;
                        break;
                    }
                }
            }
            while iterations < cfg.max_iter {
                iterations += 1;
                let mut sup = 0.0f64;
                for i in 0..n {
                    if labeled[i] {
                        continue;
                    }
                    let t = hyper_update(st, &hw, &maxs, &mins, i);
                    let new = u[i] + theta * (t - u[i]);
                    let delta = (new - u[i]).abs();
                    if delta == 0.0 {
                        continue;
                    }
                    sup = sup.max(delta);
                    u[i] = new;
                    // i belongs to inner(j) exactly for j in inner(i).
                    for &j in st.inner(i) {
                        if new >= maxs[j] {
                            maxs[j] = new;
                            amax[j] = i;
                        } else if amax[j] == i {
                            let mut hi = f64::NEG_INFINITY;
                            let mut arg = i;
                            for &l in st.inner(j) {
                                if u[l] > hi {
                                    hi = u[l];
                                    arg = l;
                                }
                            }
                            maxs[j] = hi;
                            amax[j] = arg;
                        }
                        if new <= mins[j] {
                            mins[j] = new;
                            amin[j] = i;
                        } else if amin[j] == i {
                            let mut lo = f64::INFINITY;
                            let mut arg = i;
                            for &l in st.inner(j) {
                                if u[l] < lo {
                                    lo = u[l];
                                    arg = l;
                                }
                            }
                            mins[j] = lo;
                            amin[j] = arg;
                        }
                    }
                }
                final_update = sup;
                if sup <= cfg.tol {
                    converged = true;
                    break;
                }
            }
        }
    }

    let report = SolveReport {
        iterations,
        final_update,
        converged,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    Ok((Field::from_raw(u), report))
}

/// Bisection for a strictly decreasing `f` on `[lo, hi]` with
/// `f(lo) >= 0 >= f(hi)`, run until the bracket is no wider than `width`.
fn bisect_decreasing<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, width: f64) -> f64 {
    if hi - lo <= width {
        return 0.5 * (lo + hi);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= width {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Shared sweep driver for the node-wise graph solvers. `node_update`
/// computes the exact per-node solve given the current field.
fn run_graph_sweeps<F>(
    g: &WeightedGraph,
    labels: &LabelSet,
    cfg: &SolverConfig,
    node_update: F,
) -> Result<(Field, SolveReport), SolveError>
where
    F: Fn(&[f64], usize) -> f64,
{
    cfg.validate()?;
    if !graph_connected(g) {
        return Err(SolveError::GraphNotConnected);
    }
    let n = g.n();
    let start = Instant::now();
    let labeled = labels.mask(n);
    let mut u = init_field(n, labels, &cfg.init)?;
    let theta = cfg.damping;

    let mut iterations = 0;
    let mut final_update = f64::INFINITY;
    let mut converged = false;
    let mut next = u.clone();
    while iterations < cfg.max_iter {
        iterations += 1;
        let mut sup = 0.0f64;
        match cfg.sweep {
            Sweep::GaussSeidel => {
                for i in 0..n {
                    if labeled[i] {
                        continue;
                    }
                    let t = node_update(&u, i);
                    let new = u[i] + theta * (t - u[i]);
                    sup = sup.max((new - u[i]).abs());
                    u[i] = new;
                }
            }
            Sweep::Jacobi => {
                for i in 0..n {
                    next[i] = if labeled[i] {
                        u[i]
                    } else {
                        let t = node_update(&u, i);
                        u[i] + theta * (t - u[i])
                    };
                    sup = sup.max((next[i] - u[i]).abs());
                }
                std::mem::swap(&mut u, &mut next);
            }
        }
        final_update = sup;
        if sup <= cfg.tol {
            converged = true;
            break;
        }
    }
    let report = SolveReport {
        iterations,
        final_update,
        converged,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    Ok((Field::from_raw(u), report))
}

fn neighbor_range(g: &WeightedGraph, u: &[f64], i: usize) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &j in g.neighbors(i) {
        lo = lo.min(u[j]);
        hi = hi.max(u[j]);
    }
    (lo, hi)
}

/// Solves the constrained graph p-Laplacian. Per-node update: the root in
/// `t` of `sum_j w_ij |u_j - t|^(p-2) (u_j - t)`, found by bisection on
/// `[min_j u_j, max_j u_j]` to tolerance `tol/10`; `p = 2` short-circuits to
/// the weighted average.
pub fn solve_graph_p(
    g: &WeightedGraph,
    labels: &LabelSet,
    p: f64,
    cfg: &SolverConfig,
) -> Result<(Field, SolveReport), SolveError> {
    if !(p >= 2.0) {
        return Err(SolveError::InvalidExponent(p));
    }
    let width = cfg.tol / 10.0;
    run_graph_sweeps(g, labels, cfg, move |u, i| {
        let nbrs = g.neighbors(i);
        let wts = g.weights(i);
        if p == 2.0 {
            let mut num = 0.0;
            let mut den = 0.0;
            for (&j, &w) in nbrs.iter().zip(wts) {
                num += w * u[j];
                den += w;
            }
            return num / den;
        }
        let (lo, hi) = neighbor_range(g, u, i);
        if lo == hi {
            return lo;
        }
        if p == 4.0 && g.uniform_weights(i) {
            // sum (u_j - t)^3 expands to cubic power sums, making each
            // bisection step O(1).
            let (mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0);
            for &j in nbrs {
                let v = u[j];
                s1 += v;
                s2 += v * v;
                s3 += v * v * v;
            }
            let s0 = nbrs.len() as f64;
            return bisect_decreasing(
                |t| s3 - 3.0 * t * s2 + 3.0 * t * t * s1 - t * t * t * s0,
                lo,
                hi,
                width,
            );
        }
        bisect_decreasing(
            |t| {
                let mut acc = 0.0;
                for (&j, &w) in nbrs.iter().zip(wts) {
                    acc += w * signed_pow(u[j] - t, p);
                }
                acc
            },
            lo,
            hi,
            width,
        )
    })
}

/// Solves the constrained graph infinity-Laplace equation. Per-node update:
/// the root of `t -> max_j w_ij (u_j - t) + min_j w_ij (u_j - t)`; uniform
/// weights reduce to the midpoint `(max_j u_j + min_j u_j) / 2`.
pub fn solve_graph_inf(
    g: &WeightedGraph,
    labels: &LabelSet,
    cfg: &SolverConfig,
) -> Result<(Field, SolveReport), SolveError> {
    let width = cfg.tol / 10.0;
    run_graph_sweeps(g, labels, cfg, move |u, i| {
        let (lo, hi) = neighbor_range(g, u, i);
        if lo == hi {
            return lo;
        }
        if g.uniform_weights(i) {
            return 0.5 * (lo + hi);
        }
        let nbrs = g.neighbors(i);
        let wts = g.weights(i);
        bisect_decreasing(
            |t| {
                let mut max = f64::NEG_INFINITY;
                let mut min = f64::INFINITY;
                for (&j, &w) in nbrs.iter().zip(wts) {
                    let v = w * (u[j] - t);
                    max = max.max(v);
                    min = min.min(v);
                }
                max + min
            },
            lo,
            hi,
            width,
        )
    })
}

/// Solves the constrained game-theoretic p-Laplacian. Per-node update: the
/// root of the strictly decreasing scalar map obtained by substituting `t`
/// for `u_i` in the residual; with uniform weights the map is linear and the
/// root is taken in closed form.
pub fn solve_game(
    g: &WeightedGraph,
    labels: &LabelSet,
    p: f64,
    lambda: f64,
    cfg: &SolverConfig,
) -> Result<(Field, SolveReport), SolveError> {
    if !(p >= 2.0) {
        return Err(SolveError::InvalidExponent(p));
    }
    if !(lambda > 0.0) {
        return Err(SolveError::InvalidLambda(lambda));
    }
    let width = cfg.tol / 10.0;
    run_graph_sweeps(g, labels, cfg, move |u, i| {
        let nbrs = g.neighbors(i);
        let wts = g.weights(i);
        let (lo, hi) = neighbor_range(g, u, i);
        if lo == hi {
            return lo;
        }
        if g.uniform_weights(i) {
            // (mean - t) + lambda (p-2) w ((max + min) - 2t) = 0.
            let w = wts[0];
            let mean = nbrs.iter().map(|&j| u[j]).sum::<f64>() / nbrs.len() as f64;
            let c = lambda * (p - 2.0) * w;
            return (mean + c * (hi + lo)) / (1.0 + 2.0 * c);
        }
        let deg: f64 = wts.iter().sum();
        bisect_decreasing(
            |t| {
                let mut diff = 0.0;
                let mut max = f64::NEG_INFINITY;
                let mut min = f64::INFINITY;
                for (&j, &w) in nbrs.iter().zip(wts) {
                    let v = w * (u[j] - t);
                    diff += v;
                    max = max.max(v);
                    min = min.min(v);
                }
                diff / deg + lambda * (p - 2.0) * (max + min)
            },
            lo,
            hi,
            width,
        )
    })
}

/// Comparison-principle guard: returns whether ordered labels imply ordered
/// solutions, `labels_u <= labels_v` pointwise on the shared index set
/// implying `u <= v + 10 tol` pointwise. Vacuously true when the labels are
/// not ordered. A test harness guard, not a proof.
pub fn verify_comparison(
    u: &Field,
    v: &Field,
    labels_u: &LabelSet,
    labels_v: &LabelSet,
    tol: f64,
) -> bool {
    debug_assert_eq!(u.len(), v.len());
    let idx_u: Vec<usize> = labels_u.iter().map(|e| e.0).collect();
    let idx_v: Vec<usize> = labels_v.iter().map(|e| e.0).collect();
    debug_assert_eq!(idx_u, idx_v, "label sets must share one index set");
    let ordered = labels_u
        .iter()
        .zip(labels_v.iter())
        .all(|(&(_, a), &(_, b))| a <= b);
    if !ordered {
        return true;
    }
    let slack = 10.0 * tol;
    u.as_slice()
        .iter()
        .zip(v.as_slice())
        .all(|(&a, &b)| a <= b + slack)
}
