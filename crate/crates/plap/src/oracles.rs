//! Continuum ground truths and diagnostics: pointwise evaluation of the
//! weighted p-Laplacian, discrete-to-continuum consistency errors, the
//! closed-form 1D solution, the Hoelder-ratio statistic, and the spike
//! index quantifying degenerate near-constant solutions.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::geometry::{DensityModel, Domain, GeometryError, LabelSet, NeighborIndex, PointCloud};
use crate::kernels::{eta_chi, Kernel, KernelMoments};
use crate::operators::Field;

#[derive(Clone, Debug, thiserror::Error, PartialEq)]
pub enum OracleError {
    #[error("degenerate gradient at probe point")]
    DegenerateGradient,
    #[error("epsilon too large for domain (no interior probe nodes)")]
    EpsilonTooLarge,
    #[error("coincident labels")]
    CoincidentLabels,
    #[error("exponent must satisfy p > 1, got {0}")]
    InvalidExponent(f64),
    #[error("alpha must lie in (0,1), got {0}")]
    InvalidAlpha(f64),
    #[error("need at least 4 unlabeled nodes, got {0}")]
    TooFewUnlabeled(usize),
    #[error("zero label range")]
    ZeroLabelRange,
    #[error("derivatives inconsistent with value: {0}")]
    InconsistentDerivatives(String),
    #[error("invalid knot: {0}")]
    InvalidKnot(String),
    #[error("evaluation grid must have at least 2 points, got {0}")]
    InvalidGrid(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type VectorFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// A smooth test function with explicit gradient and Hessian (row-major).
#[derive(Clone)]
pub struct AnalyticFunction {
    value: Arc<ValueFn>,
    gradient: Arc<VectorFn>,
    hessian: Arc<VectorFn>,
}

impl AnalyticFunction {
    pub fn new(value: Arc<ValueFn>, gradient: Arc<VectorFn>, hessian: Arc<VectorFn>) -> Self {
        AnalyticFunction { value, gradient, hessian }
    }

    /// Checks gradient and Hessian against central finite differences of the
    /// value (step `1e-5`, relative error `1e-4`) at the given probe points.
    pub fn validate(&self, probes: &[Vec<f64>]) -> Result<(), OracleError> {
        let h = 1e-5;
        for x in probes {
            let d = x.len();
            let g = self.gradient(x);
            let hess = self.hessian(x);
            let mut xp = x.clone();
            for k in 0..d {
                xp[k] = x[k] + h;
                let fp = self.value(&xp);
                xp[k] = x[k] - h;
                let fm = self.value(&xp);
                xp[k] = x[k];
                let fd = (fp - fm) / (2.0 * h);
                if (fd - g[k]).abs() > 1e-4 * g[k].abs().max(1.0) {
                    return Err(OracleError::InconsistentDerivatives(format!(
                        "gradient[{k}] = {} vs finite difference {fd}",
                        g[k]
                    )));
                }
            }
            for k in 0..d {
                for l in 0..d {
                    let probe = |sk: f64, sl: f64| {
                        let mut y = x.clone();
                        y[k] += sk * h;
                        y[l] += sl * h;
                        self.value(&y)
                    };
                    let fd = (probe(1.0, 1.0) - probe(1.0, -1.0) - probe(-1.0, 1.0)
                        + probe(-1.0, -1.0))
                        / (4.0 * h * h);
                    let a = hess[k * d + l];
                    if (fd - a).abs() > 1e-4 * a.abs().max(1.0) {
                        return Err(OracleError::InconsistentDerivatives(format!(
                            "hessian[{k},{l}] = {a} vs finite difference {fd}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (self.gradient)(x)
    }

    pub fn hessian(&self, x: &[f64]) -> Vec<f64> {
        (self.hessian)(x)
    }

    /// `a . x + b`.
    pub fn linear(a: Vec<f64>, b: f64) -> Self {
        let d = a.len();
        let a2 = a.clone();
        AnalyticFunction {
            value: Arc::new(move |x| {
                a.iter().zip(x).map(|(ai, xi)| ai * xi).sum::<f64>() + b
            }),
            gradient: Arc::new(move |_| a2.clone()),
            hessian: Arc::new(move |_| vec![0.0; d * d]),
        }
    }

    /// `|x - c|^2 / 2`.
    pub fn quadratic_radial(c: Vec<f64>) -> Self {
        let d = c.len();
        let c2 = c.clone();
        AnalyticFunction {
            value: Arc::new(move |x| {
                x.iter().zip(&c).map(|(xi, ci)| (xi - ci) * (xi - ci)).sum::<f64>() / 2.0
            }),
            gradient: Arc::new(move |x| x.iter().zip(&c2).map(|(xi, ci)| xi - ci).collect()),
            hessian: Arc::new(move |_| {
                let mut h = vec![0.0; d * d];
                for k in 0..d {
                    h[k * d + k] = 1.0;
                }
                h
            }),
        }
    }

    /// `1/2 sum_k diag_k x_k^2 + b . x`.
    pub fn quadratic_diagonal(diag: Vec<f64>, b: Vec<f64>) -> Self {
        let d = diag.len();
        assert_eq!(b.len(), d);
        let diag2 = diag.clone();
        let diag3 = diag.clone();
        let b2 = b.clone();
        AnalyticFunction {
            value: Arc::new(move |x| {
                let mut s = 0.0;
                for k in 0..d {
                    s += 0.5 * diag[k] * x[k] * x[k] + b[k] * x[k];
                }
                s
            }),
            gradient: Arc::new(move |x| {
                (0..d).map(|k| diag2[k] * x[k] + b2[k]).collect()
            }),
            hessian: Arc::new(move |_| {
                let mut h = vec![0.0; d * d];
                for k in 0..d {
                    h[k * d + k] = diag3[k];
                }
                h
            }),
        }
    }
}

/// Pointwise continuum operator
/// `L_p phi = sigma1 (Delta^rho phi + (p-2) Delta_inf^rho phi)` with
/// `Delta^rho phi = rho Lap(phi) + 2 grad(rho) . grad(phi)` and
/// `Delta_inf^rho phi = rho (grad^T H grad) / |grad|^2`.
pub fn lp_exact(
    phi: &AnalyticFunction,
    rho: &DensityModel,
    x: &[f64],
    p: f64,
    m: &KernelMoments,
) -> Result<f64, OracleError> {
    let d = x.len();
    let g = phi.gradient(x);
    let gnorm2: f64 = g.iter().map(|v| v * v).sum();
    if gnorm2.sqrt() <= 1e-12 {
        return Err(OracleError::DegenerateGradient);
    }
    let h = phi.hessian(x);
    let mut lap = 0.0;
    for k in 0..d {
        lap += h[k * d + k];
    }
    let mut ghg = 0.0;
    for k in 0..d {
        for l in 0..d {
            ghg += g[k] * h[k * d + l] * g[l];
        }
    }
    let r = rho.rho(x);
    let gr = rho.grad_rho(x);
    let drho = r * lap + 2.0 * gr.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>();
    let dinf = r * ghg / gnorm2;
    Ok(m.sigma1 * (drho + (p - 2.0) * dinf))
}

/// Probe nodes admissible for interior consistency: distance to the boundary
/// above `(k+1) eps` and non-vanishing gradient. Returns up to `limit` nodes
/// nearest the domain center, in ascending index order.
pub fn interior_probes(
    cloud: &PointCloud,
    domain: &Domain,
    eps: f64,
    k: f64,
    phi: &AnalyticFunction,
    limit: usize,
) -> Vec<usize> {
    let margin = (k + 1.0) * eps;
    let center = domain.center();
    let n = cloud.n();
    let eligible: Vec<(f64, usize)> = (0..n)
        .into_par_iter()
        .filter_map(|i| {
            let x = cloud.point(i);
            if domain.boundary_distance(x) <= margin {
                return None;
            }
            let g = phi.gradient(x);
            if g.iter().map(|v| v * v).sum::<f64>().sqrt() <= 1e-6 {
                return None;
            }
            let dist2: f64 = x.iter().zip(&center).map(|(a, b)| (a - b) * (a - b)).sum();
            Some((dist2, i))
        })
        .collect();
    let mut eligible = eligible;
    eligible.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out: Vec<usize> = eligible.into_iter().take(limit).map(|e| e.1).collect();
    out.sort_unstable();
    out
}

/// Pointwise consistency error of the discrete hypergraph operator against
/// [`lp_exact`] at the given probe nodes: the test function is sampled on the
/// cloud and the residual uses the standard `1/(2 n eps^2)` prefactor, whose
/// node sum is the Monte-Carlo form of the density-weighted nonlocal
/// integral. Returns the max error and the per-node error field (zero off
/// the probes).
#[allow(clippy::too_many_arguments)]
pub fn consistency_error(
    cloud: &PointCloud,
    index: &NeighborIndex,
    eps: f64,
    k: f64,
    kernel: &Kernel,
    phi: &AnalyticFunction,
    rho: &DensityModel,
    p: f64,
    m: &KernelMoments,
    probes: &[usize],
) -> Result<(f64, Field), OracleError> {
    if probes.is_empty() {
        return Err(OracleError::EpsilonTooLarge);
    }
    let n = cloud.n();
    let d = cloud.dim();
    let phi_vals: Vec<f64> = if n >= 65_536 {
        (0..n).into_par_iter().map(|i| phi.value(cloud.point(i))).collect()
    } else {
        (0..n).map(|i| phi.value(cloud.point(i))).collect()
    };
    let inner_r = k * eps;
    let mut extrema: HashMap<usize, (f64, f64)> = HashMap::new();
    let mut per_node = vec![0.0; n];
    let mut max_err = 0.0f64;
    let prefactor = 1.0 / (2.0 * n as f64 * eps * eps);
    for &i in probes {
        let xi = cloud.point(i);
        let target = lp_exact(phi, rho, xi, p, m)?;
        let center_val = phi_vals[i];
        let mut acc = 0.0;
        let mut pending: Vec<usize> = Vec::new();
        index.for_each_in_ball(cloud, xi, eps, |j| pending.push(j));
        for j in pending {
            let (hi, lo) = if k == 0.0 {
                (phi_vals[j], phi_vals[j])
            } else if let Some(&mm) = extrema.get(&j) {
                mm
            } else {
                let mut hi = f64::NEG_INFINITY;
                let mut lo = f64::INFINITY;
                index.for_each_in_ball(cloud, cloud.point(j), inner_r, |l| {
                    hi = hi.max(phi_vals[l]);
                    lo = lo.min(phi_vals[l]);
                });
                extrema.insert(j, (hi, lo));
                (hi, lo)
            };
            let mut dist2 = 0.0;
            let xj = cloud.point(j);
            for t in 0..d {
                let v = xj[t] - xi[t];
                dist2 += v * v;
            }
            let w = eta_chi(kernel, eps, dist2.sqrt(), d);
            acc += w * (hi + lo - 2.0 * center_val);
        }
        let err = (acc * prefactor - target).abs();
        per_node[i] = err;
        max_err = max_err.max(err);
    }
    Ok((max_err, Field::from_raw(per_node)))
}

fn composite_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, subintervals: usize) -> f64 {
    if a == b {
        return 0.0;
    }
    let n = subintervals.max(2).next_multiple_of(2);
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 0 { 2.0 } else { 4.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Closed-form solution of the 1D continuum equation between labeled
/// positions: the flux `rho^2 |u'|^(p-2) u'` is constant per segment, so
/// `u' = c rho^(-2/(p-1))` and
/// `u(x) = y_s + (y_{s+1} - y_s) W_s(x) / W_s(a_{s+1})` with
/// `W_s(x) = integral_{a_s}^{x} rho^(-2/(p-1))`. Constant extension outside
/// the outermost labels enforces the zero-flux boundary condition.
#[derive(Clone)]
pub struct ContinuumSolution1D {
    knots: Vec<(f64, f64)>,
    density: DensityModel,
    exponent: f64,
    grid: usize,
    denominators: Vec<f64>,
}

pub fn continuum_1d(
    knots: &[(f64, f64)],
    density: &DensityModel,
    p: f64,
    grid: usize,
) -> Result<ContinuumSolution1D, OracleError> {
    if !(p > 1.0) {
        return Err(OracleError::InvalidExponent(p));
    }
    if grid < 2 {
        return Err(OracleError::InvalidGrid(grid));
    }
    if knots.is_empty() {
        return Err(OracleError::InvalidKnot("need at least one label".into()));
    }
    let mut knots = knots.to_vec();
    knots.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for &(a, y) in &knots {
        if !(a > 0.0 && a < 1.0) {
            return Err(OracleError::InvalidKnot(format!(
                "position {a} must be strictly interior to (0,1)"
            )));
        }
        if !y.is_finite() {
            return Err(OracleError::InvalidKnot(format!("value at {a} is not finite")));
        }
    }
    if knots.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(OracleError::CoincidentLabels);
    }
    let exponent = -2.0 / (p - 1.0);
    let sol = ContinuumSolution1D {
        knots: knots.clone(),
        density: density.clone(),
        exponent,
        grid,
        denominators: Vec::new(),
    };
    let denominators: Vec<f64> = knots
        .windows(2)
        .map(|w| sol.weight_integral(w[0].0, w[1].0))
        .collect();
    Ok(ContinuumSolution1D { denominators, ..sol })
}

impl ContinuumSolution1D {
    fn weight_integral(&self, a: f64, b: f64) -> f64 {
        let subintervals =
            ((self.grid as f64 * (b - a)).ceil() as usize).max(2);
        let density = &self.density;
        let e = self.exponent;
        composite_simpson(&|t: f64| density.rho(&[t]).powf(e), a, b, subintervals)
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn eval(&self, x: f64) -> f64 {
        let first = self.knots[0];
        let last = self.knots[self.knots.len() - 1];
        if x <= first.0 {
            return first.1;
        }
        if x >= last.0 {
            return last.1;
        }
        // Segment lookup; knot positions return their values exactly.
        let mut s = 0;
        while self.knots[s + 1].0 < x {
            s += 1;
        }
        let (a0, y0) = self.knots[s];
        let (a1, y1) = self.knots[s + 1];
        if x == a0 {
            return y0;
        }
        if x == a1 {
            return y1;
        }
        let w = self.weight_integral(a0, x);
        y0 + (y1 - y0) * (w / self.denominators[s])
    }
}

/// Max Hoelder ratio `|u_i - u_j| / (|x_i - x_j|^alpha + eps^alpha)` over
/// node pairs: exhaustive for `n <= 5000`, otherwise over a fixed seeded
/// 5000-pair subsample. The flag reports whether the scan was exhaustive.
pub fn holder_ratio(
    cloud: &PointCloud,
    u: &Field,
    alpha: f64,
    eps: f64,
) -> Result<(f64, bool), OracleError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(OracleError::InvalidAlpha(alpha));
    }
    let n = cloud.n();
    let eps_term = if eps > 0.0 { eps.powf(alpha) } else { 0.0 };
    let pair_ratio = |i: usize, j: usize| -> f64 {
        let num = (u[i] - u[j]).abs();
        let den = cloud.distance(i, j).powf(alpha) + eps_term;
        if den == 0.0 {
            if num == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            num / den
        }
    };
    if n <= 5000 {
        let best = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut local = 0.0f64;
                for j in (i + 1)..n {
                    local = local.max(pair_ratio(i, j));
                }
                local
            })
            .reduce(|| 0.0, f64::max);
        Ok((best, true))
    } else {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x9e37_79b9_7f4a_7c15);
        let mut best = 0.0f64;
        let mut count = 0;
        while count < 5000 {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            if i == j {
                continue;
            }
            best = best.max(pair_ratio(i, j));
            count += 1;
        }
        Ok((best, false))
    }
}

/// Interquartile range of `u` on unlabeled nodes, normalized by the label
/// range. Near 0 signals the degenerate near-constant solution, order 1
/// genuine interpolation. Quartiles use linear interpolation between order
/// statistics.
pub fn spike_index(u: &Field, labels: &LabelSet) -> Result<f64, OracleError> {
    let range = labels.max_value() - labels.min_value();
    if range == 0.0 {
        return Err(OracleError::ZeroLabelRange);
    }
    let mask = labels.mask(u.len());
    let mut vals: Vec<f64> = (0..u.len()).filter(|&i| !mask[i]).map(|i| u[i]).collect();
    if vals.len() < 4 {
        return Err(OracleError::TooFewUnlabeled(vals.len()));
    }
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let quantile = |t: f64| -> f64 {
        let h = (vals.len() - 1) as f64 * t;
        let lo = h.floor() as usize;
        let frac = h - lo as f64;
        if lo + 1 < vals.len() {
            vals[lo] + frac * (vals[lo + 1] - vals[lo])
        } else {
            vals[lo]
        }
    };
    Ok((quantile(0.75) - quantile(0.25)) / range)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_index, sample_cloud, Domain};
    use crate::kernels::moments;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform_density_const(c: f64, d: usize) -> DensityModel {
        DensityModel::new(
            Arc::new(move |_: &[f64]| c),
            Arc::new(move |_: &[f64]| vec![0.0; d]),
            c,
        )
        .unwrap()
    }

    #[test]
    fn analytic_function_validation() {
        let phi = AnalyticFunction::quadratic_diagonal(vec![1.0, 2.0], vec![0.3, -0.1]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let probes: Vec<Vec<f64>> =
            (0..20).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
        phi.validate(&probes).unwrap();

        // A deliberately wrong gradient is caught.
        let bad = AnalyticFunction::new(
            Arc::new(|x: &[f64]| x[0] * x[0]),
            Arc::new(|x: &[f64]| vec![3.0 * x[0]]),
            Arc::new(|_: &[f64]| vec![2.0]),
        );
        assert!(bad.validate(&[vec![0.7]]).is_err());
    }

    #[test]
    fn lp_exact_linear_is_zero() {
        let phi = AnalyticFunction::linear(vec![1.0, -2.0], 0.5);
        let rho = uniform_density_const(1.0, 2);
        let m = moments(&Kernel::Constant, 2).unwrap();
        let v = lp_exact(&phi, &rho, &[0.3, 0.4], 3.0, &m).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn lp_exact_radial_quadratic() {
        // phi = |x|^2/2, rho = c: sigma1 * c * (d + p - 2).
        let d = 2;
        let c = 1.7;
        let phi = AnalyticFunction::quadratic_radial(vec![0.0, 0.0]);
        let rho = uniform_density_const(c, d);
        let m = moments(&Kernel::Constant, d).unwrap();
        for p in [2.0, 3.0, 6.0] {
            let v = lp_exact(&phi, &rho, &[0.5, -0.2], p, &m).unwrap();
            let want = m.sigma1 * c * (d as f64 + p - 2.0);
            assert!((v - want).abs() < 1e-12, "p={p}: {v} vs {want}");
        }
        assert_eq!(
            lp_exact(&phi, &rho, &[0.0, 0.0], 3.0, &m),
            Err(OracleError::DegenerateGradient)
        );
    }

    /// Fully finite-difference evaluation of
    /// `sigma1 |grad|^{2-p} div(rho^2 |grad phi|^{p-2} grad phi) / rho`,
    /// using only point values of `phi` and `rho`.
    fn lp_finite_difference(
        phi: &AnalyticFunction,
        rho: &DensityModel,
        x: &[f64],
        p: f64,
        sigma1: f64,
    ) -> f64 {
        let d = x.len();
        let h = 1e-4;
        let grad = |y: &[f64]| -> Vec<f64> {
            let mut g = vec![0.0; d];
            let mut yy = y.to_vec();
            for k in 0..d {
                yy[k] = y[k] + h;
                let fp = phi.value(&yy);
                yy[k] = y[k] - h;
                let fm = phi.value(&yy);
                yy[k] = y[k];
                g[k] = (fp - fm) / (2.0 * h);
            }
            g
        };
        let flux = |y: &[f64], k: usize| -> f64 {
            let g = grad(y);
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            let r = rho.rho(y);
            r * r * norm.powf(p - 2.0) * g[k]
        };
        let mut div = 0.0;
        let mut y = x.to_vec();
        for k in 0..d {
            y[k] = x[k] + h;
            let fp = flux(&y, k);
            y[k] = x[k] - h;
            let fm = flux(&y, k);
            y[k] = x[k];
            div += (fp - fm) / (2.0 * h);
        }
        let g0 = grad(x);
        let norm0 = g0.iter().map(|v| v * v).sum::<f64>().sqrt();
        sigma1 * norm0.powf(2.0 - p) * div / rho.rho(x)
    }

    #[test]
    fn lp_exact_matches_full_finite_difference_form() {
        let phi = AnalyticFunction::quadratic_diagonal(vec![1.0, 2.5], vec![1.0, 0.5]);
        let d = 2;
        let rho = DensityModel::new(
            Arc::new(|x: &[f64]| 1.0 + 0.4 * x[0] + 0.2 * x[1]),
            Arc::new(|_: &[f64]| vec![0.4, 0.2]),
            2.0,
        )
        .unwrap();
        let m = moments(&Kernel::Constant, d).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for p in [2.0, 3.0, 5.0] {
            for _ in 0..6 {
                let x = vec![rng.random::<f64>(), rng.random::<f64>()];
                let g = phi.gradient(&x);
                if g.iter().map(|v| v * v).sum::<f64>().sqrt() < 0.1 {
                    continue;
                }
                let a = lp_exact(&phi, &rho, &x, p, &m).unwrap();
                let b = lp_finite_difference(&phi, &rho, &x, p, m.sigma1);
                assert!(
                    (a - b).abs() / a.abs().max(1e-6) < 1e-3,
                    "p={p} x={x:?}: exact {a} vs finite difference {b}"
                );
            }
        }
    }

    #[test]
    fn continuum_1d_uniform_is_clamped_ramp() {
        let domain = Domain::unit_box(1).unwrap();
        let rho = DensityModel::uniform(&domain);
        for p in [2.0, 3.0, 5.0] {
            let sol = continuum_1d(&[(0.25, 0.0), (0.75, 1.0)], &rho, p, 400).unwrap();
            for x in [0.0f64, 0.1, 0.25, 0.3, 0.5, 0.75, 0.9, 1.0] {
                let want = ((x - 0.25) / 0.5).clamp(0.0, 1.0);
                assert!((sol.eval(x) - want).abs() < 1e-10, "p={p} x={x}");
            }
            assert_eq!(sol.eval(0.25), 0.0, "knot values are exact");
            assert_eq!(sol.eval(0.75), 1.0);
        }
    }

    #[test]
    fn continuum_1d_single_label_is_constant() {
        let domain = Domain::unit_box(1).unwrap();
        let rho = DensityModel::uniform(&domain);
        let sol = continuum_1d(&[(0.4, 2.5)], &rho, 3.0, 100).unwrap();
        for x in [0.0, 0.2, 0.4, 0.7, 1.0] {
            assert_eq!(sol.eval(x), 2.5);
        }
    }

    #[test]
    fn continuum_1d_ramp_density_matches_log_form() {
        // rho proportional to 1 + x with p = 3: u is an affine image of
        // ln(1 + x). Frozen values from the symbolic antiderivative.
        let rho = DensityModel::ramp_1d();
        let sol = continuum_1d(&[(0.25, 0.0), (0.75, 1.0)], &rho, 3.0, 2000).unwrap();
        let cases = [
            (0.4, 0.33681437269543285),
            (0.5, 0.5418621120862491),
            (0.6, 0.7336714624970117),
            (0.1, 0.0),
            (0.9, 1.0),
        ];
        for (x, want) in cases {
            assert!(
                (sol.eval(x) - want).abs() < 1e-6,
                "x={x}: {} vs {want}",
                sol.eval(x)
            );
        }
    }

    #[test]
    fn continuum_1d_flux_is_segmentwise_constant() {
        let rho = DensityModel::ramp_1d();
        let p = 3.0;
        let sol = continuum_1d(&[(0.25, 0.0), (0.6, 1.0), (0.75, 0.3)], &rho, p, 2000).unwrap();
        let h = 1e-4;
        let flux = |x: f64| {
            let du = (sol.eval(x + h) - sol.eval(x - h)) / (2.0 * h);
            let r = rho.rho(&[x]);
            r * r * du.abs().powf(p - 2.0) * du
        };
        for seg in [(0.25, 0.6), (0.6, 0.75)] {
            let xs: Vec<f64> = (1..20)
                .map(|i| seg.0 + (seg.1 - seg.0) * (0.05 + 0.9 * i as f64 / 20.0))
                .filter(|x| x - 2.0 * h > seg.0 && x + 2.0 * h < seg.1)
                .collect();
            for w in xs.windows(3) {
                let second = flux(w[0]) - 2.0 * flux(w[1]) + flux(w[2]);
                assert!(second.abs() <= 1e-6, "flux second difference {second}");
            }
        }
    }

    #[test]
    fn continuum_1d_rejects_bad_knots() {
        let domain = Domain::unit_box(1).unwrap();
        let rho = DensityModel::uniform(&domain);
        assert!(matches!(
            continuum_1d(&[(0.3, 0.0), (0.3, 1.0)], &rho, 2.0, 100),
            Err(OracleError::CoincidentLabels)
        ));
        assert!(continuum_1d(&[(0.0, 0.0)], &rho, 2.0, 100).is_err());
        assert!(continuum_1d(&[(0.5, 0.0)], &rho, 1.0, 100).is_err());
    }

    #[test]
    fn holder_ratio_examples() {
        let cloud = PointCloud::from_coords(1, vec![0.0, 1.0], 0).unwrap();
        let constant = Field::constant(2, 3.0);
        assert_eq!(holder_ratio(&cloud, &constant, 0.5, 0.1).unwrap().0, 0.0);
        let u = Field::new(vec![0.0, 1.0]).unwrap();
        let (r, exhaustive) = holder_ratio(&cloud, &u, 0.5, 0.0).unwrap();
        assert!((r - 1.0).abs() < 1e-15);
        assert!(exhaustive);
        assert!(holder_ratio(&cloud, &u, 1.0, 0.0).is_err());
    }

    #[test]
    fn holder_ratio_shift_and_scale() {
        let domain = Domain::unit_box(2).unwrap();
        let cloud =
            sample_cloud(60, &domain, &DensityModel::uniform(&domain), 12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = Field::new((0..60).map(|_| rng.random::<f64>()).collect()).unwrap();
        let (base, _) = holder_ratio(&cloud, &u, 0.5, 0.05).unwrap();
        let shifted =
            Field::new(u.as_slice().iter().map(|v| v + 4.0).collect()).unwrap();
        let (s, _) = holder_ratio(&cloud, &shifted, 0.5, 0.05).unwrap();
        assert!((s - base).abs() < 1e-12);
        let scaled =
            Field::new(u.as_slice().iter().map(|v| 3.0 * v).collect()).unwrap();
        let (sc, _) = holder_ratio(&cloud, &scaled, 0.5, 0.05).unwrap();
        assert!((sc - 3.0 * base).abs() < 1e-9);
    }

    #[test]
    fn spike_index_examples() {
        let labels = LabelSet::new(vec![(0, 0.0), (1, 1.0)], 12).unwrap();
        let constant = Field::constant(12, 0.5);
        assert_eq!(spike_index(&constant, &labels).unwrap(), 0.0);

        // Uniform ramp over the 10 unlabeled nodes: IQR = 0.5.
        let mut vals = vec![0.0, 1.0];
        for i in 0..10 {
            vals.push(i as f64 / 9.0);
        }
        let ramp = Field::new(vals).unwrap();
        let idx = spike_index(&ramp, &labels).unwrap();
        assert!((idx - 0.5).abs() < 1e-12, "got {idx}");

        let equal = LabelSet::new(vec![(0, 1.0), (1, 1.0)], 12).unwrap();
        assert_eq!(spike_index(&constant, &equal).unwrap_err(), OracleError::ZeroLabelRange);
        let tiny = LabelSet::new(vec![(0, 0.0), (1, 1.0)], 4).unwrap();
        let small = Field::constant(4, 0.0);
        assert!(matches!(
            spike_index(&small, &tiny),
            Err(OracleError::TooFewUnlabeled(2))
        ));
    }

    #[test]
    fn spike_index_affine_invariance() {
        let labels = LabelSet::new(vec![(0, 0.0), (5, 1.0)], 30).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = Field::new((0..30).map(|_| rng.random::<f64>()).collect()).unwrap();
        let base = spike_index(&u, &labels).unwrap();
        let (a, b) = (2.5, -1.0);
        let labels2 = LabelSet::new(
            labels.iter().map(|&(i, y)| (i, a * y + b)).collect(),
            30,
        )
        .unwrap();
        let v = Field::new(u.as_slice().iter().map(|x| a * x + b).collect()).unwrap();
        let transformed = spike_index(&v, &labels2).unwrap();
        assert!((transformed - base).abs() < 1e-12);
    }

    #[test]
    fn interior_probes_respects_margin_and_gradient() {
        let domain = Domain::unit_box(2).unwrap();
        let cloud =
            sample_cloud(400, &domain, &DensityModel::uniform(&domain), 77).unwrap();
        let phi = AnalyticFunction::quadratic_radial(vec![2.0, 0.0]);
        let probes = interior_probes(&cloud, &domain, 0.1, 1.0, &phi, usize::MAX);
        assert!(!probes.is_empty());
        for &i in &probes {
            assert!(domain.boundary_distance(cloud.point(i)) > 0.2);
        }
        // Constant test function: gradient filter rejects everything.
        let constant = AnalyticFunction::linear(vec![0.0, 0.0], 1.0);
        assert!(interior_probes(&cloud, &domain, 0.1, 1.0, &constant, usize::MAX).is_empty());
        let limited = interior_probes(&cloud, &domain, 0.1, 1.0, &phi, 5);
        assert_eq!(limited.len(), 5);
    }

    #[test]
    fn consistency_error_requires_probes() {
        let domain = Domain::unit_box(2).unwrap();
        let cloud =
            sample_cloud(50, &domain, &DensityModel::uniform(&domain), 1).unwrap();
        let index = build_index(&cloud, 0.3).unwrap();
        let phi = AnalyticFunction::quadratic_radial(vec![2.0, 0.0]);
        let rho = DensityModel::uniform(&domain);
        let m = moments(&Kernel::Constant, 2).unwrap();
        let err = consistency_error(
            &cloud, &index, 0.3, 1.0, &Kernel::Constant, &phi, &rho, 6.0, &m, &[],
        )
        .unwrap_err();
        assert_eq!(err, OracleError::EpsilonTooLarge);
    }
}
