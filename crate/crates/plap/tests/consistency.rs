//! Grid-based consistency checks beyond the acceptance rate test: the exact
//! cancellation for linear test functions and the error halving under radius
//! refinement on a fixed grid.

use plap::geometry::{build_index, DensityModel, Domain, PointCloud};
use plap::kernels::{moments, p_of_k, Kernel};
use plap::oracles::{consistency_error, interior_probes, AnalyticFunction};

fn grid_ball(m_side: usize) -> PointCloud {
    let mut coords = Vec::new();
    for iy in 0..m_side {
        let y = -1.0 + 2.0 * iy as f64 / (m_side - 1) as f64;
        for ix in 0..m_side {
            let x = -1.0 + 2.0 * ix as f64 / (m_side - 1) as f64;
            if x * x + y * y <= 1.0 {
                coords.push(x);
                coords.push(y);
            }
        }
    }
    PointCloud::from_coords(2, coords, 0).unwrap()
}

#[test]
fn linear_test_function_cancels_to_rounding_noise() {
    // For linear phi on a symmetric grid the inner extrema average to the
    // node value and the outer sum telescopes; the continuum operator is 0,
    // so the error is pure floating-point cancellation noise.
    let domain = Domain::unit_ball(2).unwrap();
    let rho = DensityModel::uniform(&domain);
    let kernel = Kernel::Constant;
    let m = moments(&kernel, 2).unwrap();
    let k = 1.0;
    let p = p_of_k(k, &m);
    let phi = AnalyticFunction::linear(vec![1.0, -0.5], 0.2);
    let cloud = grid_ball(257);
    let index = build_index(&cloud, 0.4).unwrap();
    for eps in [0.4f64, 0.2] {
        let probes = interior_probes(&cloud, &domain, eps, k, &phi, 20);
        assert!(!probes.is_empty());
        let (max_err, _) =
            consistency_error(&cloud, &index, eps, k, &kernel, &phi, &rho, p, &m, &probes)
                .unwrap();
        // Summation floor: ~ eps_machine * max|phi| / eps^2 per term bundle,
        // an order-of-magnitude envelope for the rounding noise.
        let floor = f64::EPSILON * 2.0 / (eps * eps);
        assert!(
            max_err < 10.0 * floor.max(1e-13),
            "eps={eps}: error {max_err} above the rounding floor {floor}"
        );
    }
}

#[test]
fn halving_epsilon_on_a_fixed_grid_reduces_error() {
    let domain = Domain::unit_ball(2).unwrap();
    let rho = DensityModel::uniform(&domain);
    let kernel = Kernel::Constant;
    let m = moments(&kernel, 2).unwrap();
    let k = 1.0;
    let p = p_of_k(k, &m);
    let phi = AnalyticFunction::quadratic_diagonal(vec![1.0, 2.5], vec![1.0, 0.5]);
    // Fixed fine dyadic grid: spacing 2/256 <= (0.2)^2/4, valid for both radii.
    let cloud = grid_ball(257);
    let index = build_index(&cloud, 0.2).unwrap();
    let mut errs = Vec::new();
    for eps in [0.4f64, 0.2] {
        let probes = interior_probes(&cloud, &domain, eps, k, &phi, 20);
        let (max_err, _) =
            consistency_error(&cloud, &index, eps, k, &kernel, &phi, &rho, p, &m, &probes)
                .unwrap();
        errs.push(max_err);
    }
    assert!(
        errs[0] / errs[1] >= 1.7,
        "halving eps must reduce the error by at least 1.7x: {errs:?}"
    );
}
