//! Kernel profiles, their moments over the unit ball, and the calibration
//! between the inner-radius factor `k` and the exponent `p`.
//!
//! A kernel is a nonincreasing profile `eta` supported on `[0,1]`. Its mass
//! and second moment,
//!
//! ```text
//! sigma2 = 1/2 * integral over B(0,1) of eta(|y|) dy
//! sigma1 = 1/2 * integral over B(0,1) of eta(|y|) |y_1|^2 dy
//! ```
//!
//! drive the calibration `k(p) = sqrt((p - 2) * sigma1 / sigma2)` and its
//! inverse `p(k) = k^2 * sigma2 / sigma1 + 2`.

#[derive(Clone, Debug, thiserror::Error, PartialEq)]
pub enum KernelError {
    #[error("kernel scale must be positive, got {0}")]
    InvalidSigma(f64),
    #[error("tabulated kernel invalid: {0}")]
    InvalidTable(String),
    #[error("kernel not admissible: {0}")]
    NotAdmissible(String),
    #[error("moment quadrature stalled")]
    QuadratureStalled,
    #[error("exponent below 2 unsupported (p = {0})")]
    ExponentBelowTwo(f64),
    #[error("dimension must be at least 1, got {0}")]
    InvalidDimension(usize),
}

/// Admissible kernel profiles on `[0,1]`; `eta(s)` is treated as 0 for `s > 1`.
#[derive(Clone, Debug, PartialEq)]
pub enum Kernel {
    /// `eta(s) = 1`.
    Constant,
    /// `eta(s) = exp(-s^2 / sigma^2)`, truncated to `[0,1]`.
    Gaussian { sigma: f64 },
    /// Monotone piecewise-linear interpolation of `(s, eta(s))` samples.
    Tabulated { s: Vec<f64>, eta: Vec<f64> },
}

impl Kernel {
    pub fn constant() -> Self {
        Kernel::Constant
    }

    pub fn gaussian(sigma: f64) -> Result<Self, KernelError> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(KernelError::InvalidSigma(sigma));
        }
        Ok(Kernel::Gaussian { sigma })
    }

    /// Builds a tabulated kernel from `(s, eta)` samples covering `[0,1]`.
    ///
    /// Validates strict monotonicity of the abscissae, nonincreasing values,
    /// and the admissibility bounds `eta(0) <= 2`, `eta(1) >= 1`.
    pub fn tabulated(samples: &[(f64, f64)]) -> Result<Self, KernelError> {
        if samples.len() < 2 {
            return Err(KernelError::InvalidTable("need at least two samples".into()));
        }
        let s: Vec<f64> = samples.iter().map(|p| p.0).collect();
        let eta: Vec<f64> = samples.iter().map(|p| p.1).collect();
        if s[0] != 0.0 || *s.last().unwrap() != 1.0 {
            return Err(KernelError::InvalidTable("abscissae must span [0,1]".into()));
        }
        for w in s.windows(2) {
            if !(w[1] > w[0]) {
                return Err(KernelError::InvalidTable(
                    "abscissae must be strictly increasing".into(),
                ));
            }
        }
        for w in eta.windows(2) {
            if w[1] > w[0] {
                return Err(KernelError::NotAdmissible(
                    "profile must be nonincreasing on [0,1]".into(),
                ));
            }
        }
        if eta.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(KernelError::InvalidTable("values must be finite and nonnegative".into()));
        }
        if eta[0] > 2.0 {
            return Err(KernelError::NotAdmissible(format!(
                "eta(0) = {} exceeds 2",
                eta[0]
            )));
        }
        if *eta.last().unwrap() < 1.0 {
            return Err(KernelError::NotAdmissible(format!(
                "eta(1) = {} is below 1",
                eta.last().unwrap()
            )));
        }
        Ok(Kernel::Tabulated { s, eta })
    }

    /// Evaluates the profile at `s >= 0`; zero outside the support `[0,1]`.
    pub fn eval(&self, s: f64) -> f64 {
        if s > 1.0 {
            return 0.0;
        }
        match self {
            Kernel::Constant => 1.0,
            Kernel::Gaussian { sigma } => (-(s * s) / (sigma * sigma)).exp(),
            Kernel::Tabulated { s: xs, eta } => {
                // Binary search for the bracketing segment.
                let mut lo = 0;
                let mut hi = xs.len() - 1;
                while hi - lo > 1 {
                    let mid = (lo + hi) / 2;
                    if xs[mid] <= s {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let t = (s - xs[lo]) / (xs[hi] - xs[lo]);
                eta[lo] + t * (eta[hi] - eta[lo])
            }
        }
    }
}

/// Cached kernel moments for one dimension.
///
/// `ratio` holds `sigma2/sigma1`; for the constant kernel it is `d + 2`
/// exactly, so the `k <-> p` calibration round-trips without quadrature noise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelMoments {
    pub sigma1: f64,
    pub sigma2: f64,
    pub dim: usize,
    ratio: f64,
}

impl KernelMoments {
    /// `sigma2 / sigma1`.
    pub fn ratio(&self) -> f64 {
        self.ratio
    }
}

/// `Gamma(m/2)` for positive integer `m`, built from `Gamma(1/2) = sqrt(pi)`
/// and `Gamma(1) = 1` by the recurrence.
pub(crate) fn gamma_half(m: usize) -> f64 {
    debug_assert!(m >= 1);
    let mut value = if m % 2 == 0 { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut two_t = if m % 2 == 0 { 2 } else { 1 };
    while two_t < m {
        value *= two_t as f64 / 2.0;
        two_t += 2;
    }
    value
}

/// Adaptive Simpson quadrature to a relative tolerance, with a refinement
/// depth cap.
fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    rel_tol: f64,
    max_depth: usize,
) -> Result<f64, KernelError> {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        abs_tol: f64,
        depth: usize,
    ) -> Result<f64, KernelError> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * abs_tol {
            return Ok(left + right + delta / 15.0);
        }
        if depth == 0 {
            return Err(KernelError::QuadratureStalled);
        }
        let l = recurse(f, a, m, fa, flm, fm, left, 0.5 * abs_tol, depth - 1)?;
        let r = recurse(f, m, b, fm, frm, fb, right, 0.5 * abs_tol, depth - 1)?;
        Ok(l + r)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(fa, fm, fb, b - a);
    let scale = whole.abs().max(1e-300);
    recurse(f, a, b, fa, fm, fb, whole, rel_tol * scale, max_depth)
}

fn check_admissible(kernel: &Kernel) -> Result<(), KernelError> {
    match kernel {
        Kernel::Constant => Ok(()),
        // The Gaussian never satisfies eta(1) >= 1; it is admitted with the
        // relaxed bound eta > 0 on [0,1], which keeps every weight positive.
        Kernel::Gaussian { sigma } => {
            if !(sigma > &0.0) {
                return Err(KernelError::InvalidSigma(*sigma));
            }
            if kernel.eval(0.0) > 2.0 {
                return Err(KernelError::NotAdmissible("eta(0) exceeds 2".into()));
            }
            Ok(())
        }
        // Tabulated kernels are validated at construction.
        Kernel::Tabulated { .. } => Ok(()),
    }
}

/// Computes the moments by the Gamma-function reduction of the ball integrals
/// to one-dimensional radial integrals (change of variable `t = r^2`), using
/// adaptive Simpson quadrature at relative tolerance `1e-10`:
///
/// ```text
/// sigma2 = pi^(d/2) /      Gamma(d/2)      * integral_0^1 eta(r) r^(d-1) dr
/// sigma1 = pi^(d/2) / (2 * Gamma(d/2 + 1)) * integral_0^1 eta(r) r^(d+1) dr
/// ```
pub fn moments_quadrature(kernel: &Kernel, d: usize) -> Result<KernelMoments, KernelError> {
    if d < 1 {
        return Err(KernelError::InvalidDimension(d));
    }
    check_admissible(kernel)?;
    let pi_pow = std::f64::consts::PI.powf(d as f64 / 2.0);
    let radial = |a: f64| {
        adaptive_simpson(&|r: f64| kernel.eval(r) * r.powf(a), 0.0, 1.0, 1e-10, 60)
    };
    let sigma2 = pi_pow / gamma_half(d) * radial((d - 1) as f64)?;
    let sigma1 = pi_pow / (2.0 * gamma_half(d + 2)) * radial((d + 1) as f64)?;
    Ok(KernelMoments { sigma1, sigma2, dim: d, ratio: sigma2 / sigma1 })
}

/// Kernel moments for dimension `d`. The constant kernel uses the closed
/// forms `sigma2 = vol(B_d)/2`, `sigma1 = sigma2/(d+2)`; everything else goes
/// through [`moments_quadrature`].
pub fn moments(kernel: &Kernel, d: usize) -> Result<KernelMoments, KernelError> {
    if d < 1 {
        return Err(KernelError::InvalidDimension(d));
    }
    check_admissible(kernel)?;
    match kernel {
        Kernel::Constant => {
            let sigma2 = crate::geometry::unit_ball_volume(d) / 2.0;
            let ratio = (d + 2) as f64;
            Ok(KernelMoments { sigma1: sigma2 / ratio, sigma2, dim: d, ratio })
        }
        _ => moments_quadrature(kernel, d),
    }
}

/// The rescaling parameter `k(p) = sqrt((p - 2) * sigma1 / sigma2)`.
pub fn k_of_p(p: f64, m: &KernelMoments) -> Result<f64, KernelError> {
    if !(p >= 2.0) {
        return Err(KernelError::ExponentBelowTwo(p));
    }
    Ok(((p - 2.0) / m.ratio).sqrt())
}

/// Inverse calibration `p = k^2 * sigma2 / sigma1 + 2`.
pub fn p_of_k(k: f64, m: &KernelMoments) -> f64 {
    debug_assert!(k >= 0.0);
    k * k * m.ratio + 2.0
}

/// The rescaled, truncated kernel weight
/// `eta_chi(s) = eps^-d * eta(s/eps)` for `s <= eps`, zero beyond
/// (closed-ball convention).
pub fn eta_chi(kernel: &Kernel, eps: f64, s: f64, d: usize) -> f64 {
    debug_assert!(eps > 0.0 && s >= 0.0);
    if s > eps {
        return 0.0;
    }
    eps.powi(-(d as i32)) * kernel.eval(s / eps)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PI: f64 = std::f64::consts::PI;

    fn ramp() -> Kernel {
        Kernel::tabulated(&[(0.0, 2.0), (1.0, 1.0)]).unwrap()
    }

    #[test]
    fn gamma_half_values() {
        assert!((gamma_half(1) - PI.sqrt()).abs() < 1e-15);
        assert_eq!(gamma_half(2), 1.0);
        assert!((gamma_half(3) - PI.sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(gamma_half(4), 1.0);
        assert!((gamma_half(5) - 0.75 * PI.sqrt()).abs() < 1e-15);
        assert_eq!(gamma_half(8), 6.0);
    }

    #[test]
    fn constant_moments_closed_forms() {
        let m2 = moments(&Kernel::Constant, 2).unwrap();
        assert!((m2.sigma2 - PI / 2.0).abs() < 1e-15);
        assert!((m2.sigma1 - PI / 8.0).abs() < 1e-15);
        assert_eq!(m2.ratio(), 4.0);

        let m1 = moments(&Kernel::Constant, 1).unwrap();
        assert!((m1.sigma2 - 1.0).abs() < 1e-15);
        assert!((m1.sigma1 - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn constant_moments_quadrature_matches_closed_forms() {
        for d in 1..=5 {
            let closed = moments(&Kernel::Constant, d).unwrap();
            let quad = moments_quadrature(&Kernel::Constant, d).unwrap();
            assert!(
                (quad.sigma2 - closed.sigma2).abs() / closed.sigma2 < 1e-9,
                "sigma2 mismatch at d={d}"
            );
            assert!(
                (quad.sigma1 - closed.sigma1).abs() / closed.sigma1 < 1e-9,
                "sigma1 mismatch at d={d}"
            );
            let want = (d + 2) as f64;
            assert!((quad.ratio() - want).abs() / want < 1e-9);
        }
    }

    #[test]
    fn gaussian_moments_match_frozen_values() {
        // Frozen from independent quadrature of the radial integrals.
        let m = moments(&Kernel::gaussian(1.0).unwrap(), 2).unwrap();
        assert!((m.sigma2 - 0.9929326518994357).abs() < 1e-10);
        assert!((m.sigma1 - 0.2075344885019874).abs() < 1e-10);
        assert!(m.ratio() > 2.0, "sigma2/sigma1 must exceed 2/sigma^2 = 2");

        let m = moments(&Kernel::gaussian(0.5).unwrap(), 3).unwrap();
        assert!((m.sigma2 - 0.33200748299127375).abs() < 1e-10);
        assert!((m.sigma1 - 0.03670591232568832).abs() < 1e-10);
        // Lower bound 2/sigma^2 from the integration-by-parts estimate.
        assert!(m.ratio() > 2.0 / 0.25);
    }

    #[test]
    fn ramp_moments_match_frozen_values() {
        let m = moments(&ramp(), 2).unwrap();
        assert!((m.sigma2 - 2.0943951023931957).abs() < 1e-10);
        assert!((m.sigma1 - 0.47123889803846897).abs() < 1e-10);
    }

    #[test]
    fn sigma1_strictly_below_sigma2() {
        let mut kernels = vec![Kernel::Constant, ramp()];
        for sigma in [0.5, 1.0, 2.0] {
            kernels.push(Kernel::gaussian(sigma).unwrap());
        }
        for kernel in &kernels {
            for d in 1..=3 {
                let m = moments(kernel, d).unwrap();
                assert!(m.sigma1 > 0.0 && m.sigma1 < m.sigma2, "{kernel:?} d={d}");
            }
        }
    }

    #[test]
    fn k_of_p_examples() {
        let m = moments(&Kernel::Constant, 2).unwrap();
        assert_eq!(k_of_p(2.0, &m).unwrap(), 0.0);
        assert_eq!(k_of_p(6.0, &m).unwrap(), 1.0, "p = d+4 must give k = 1");
        assert!(matches!(k_of_p(1.5, &m), Err(KernelError::ExponentBelowTwo(_))));
    }

    #[test]
    fn p_of_k_examples() {
        for d in 1..=5 {
            let m = moments(&Kernel::Constant, d).unwrap();
            assert_eq!(p_of_k(0.0, &m), 2.0);
            assert_eq!(p_of_k(1.0, &m), (d + 4) as f64, "k=1 with constant kernel");
        }
        // Gaussian: p > 2 l^2 / sigma^2 + 2.
        let m = moments(&Kernel::gaussian(1.0).unwrap(), 2).unwrap();
        for l in [0.5, 1.0, 2.0] {
            assert!(p_of_k(l, &m) > 2.0 * l * l + 2.0);
        }
    }

    #[test]
    fn calibration_round_trips() {
        let mut kernels = vec![Kernel::Constant, ramp()];
        kernels.push(Kernel::gaussian(0.5).unwrap());
        kernels.push(Kernel::gaussian(1.0).unwrap());
        kernels.push(Kernel::gaussian(2.0).unwrap());
        for kernel in &kernels {
            let m = moments(kernel, 2).unwrap();
            for k in [0.0, 0.5, 1.0, 2.0] {
                let p = p_of_k(k, &m);
                let back = k_of_p(p, &m).unwrap();
                assert!((back - k).abs() < 1e-12, "{kernel:?} k={k} -> p={p} -> {back}");
            }
        }
    }

    #[test]
    fn eta_chi_examples() {
        assert!((eta_chi(&Kernel::Constant, 0.5, 0.25, 1) - 2.0).abs() < 1e-15);
        assert_eq!(eta_chi(&Kernel::Constant, 0.5, 0.505, 1), 0.0);
        let g = Kernel::gaussian(1.0).unwrap();
        assert_eq!(eta_chi(&g, 1.0, 0.0, 2), 1.0);
        assert_eq!(eta_chi(&g, 0.2, 0.202, 2), 0.0);
        // Closed ball: the boundary point is inside the support.
        assert!(eta_chi(&g, 0.2, 0.2, 2) > 0.0);
    }

    #[test]
    fn tabulated_validation() {
        assert!(Kernel::tabulated(&[(0.0, 2.0)]).is_err());
        assert!(Kernel::tabulated(&[(0.1, 2.0), (1.0, 1.0)]).is_err());
        assert!(Kernel::tabulated(&[(0.0, 1.0), (1.0, 2.0)]).is_err(), "increasing profile");
        assert!(Kernel::tabulated(&[(0.0, 3.0), (1.0, 1.0)]).is_err(), "eta(0) > 2");
        assert!(Kernel::tabulated(&[(0.0, 1.0), (1.0, 0.5)]).is_err(), "eta(1) < 1");
        let k = Kernel::tabulated(&[(0.0, 2.0), (0.5, 1.5), (1.0, 1.0)]).unwrap();
        assert!((k.eval(0.25) - 1.75).abs() < 1e-15);
        assert_eq!(k.eval(1.2), 0.0);
    }

    #[test]
    fn gaussian_validation() {
        assert!(Kernel::gaussian(0.0).is_err());
        assert!(Kernel::gaussian(-1.0).is_err());
        assert!(Kernel::gaussian(f64::NAN).is_err());
    }
}
