//! Analytic fields for primitive shapes, a finite-difference differentiator,
//! and the identity battery that turns the field's defining equations into
//! executable checks.

mod fd;
mod primitive;
mod spectral;

pub use fd::{finite_difference_jet, DEFAULT_FD_STEP};
pub use primitive::{Primitive, PrimitiveShape};
pub use spectral::{check_spectral_identity, sym_eigen, SpectralReport};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::field::{det_shifted, Jet2};
use crate::geometry::Point;

/// Worst-case identity residuals over a batch of probe points.
#[derive(Clone, Copy, Debug)]
pub struct IdentityStats {
    pub n_points: usize,
    /// max |‖∇t‖² - 4kt| / max(4kt, 1e-12): the gradient-magnitude identity.
    pub max_grad_identity_rel: f64,
    /// max |det(H - 2k I)|: the Monge-Ampere residual, absolute.
    pub max_det_residual: f64,
    /// max over points of the spectral eigen gap.
    pub max_eigen_gap: f64,
    /// min over points of the spectral alignment.
    pub min_alignment: f64,
    /// max relative gradient error against finite differences.
    pub max_fd_grad_rel: f64,
    /// max relative (Frobenius) Hessian error against finite differences.
    pub max_fd_hess_rel: f64,
}

/// Residuals of the two field identities at a single jet.
pub fn identity_residuals<const D: usize>(jet: &Jet2<D>, k: f64) -> (f64, f64) {
    let grad_sq = jet.grad.norm_sq();
    let target = 4.0 * k * jet.val;
    let grad_rel = (grad_sq - target).abs() / target.max(1e-12);
    let det_abs = det_shifted(&jet.hess, 2.0 * k).abs();
    (grad_rel, det_abs)
}

/// Draws `n` off-surface probe points for `prim` inside the evaluation
/// domain, clear of cut loci and Hessian seams, and evaluates every identity
/// plus a finite-difference cross-check at each.
pub fn verify_primitive_identities<const D: usize>(
    prim: &Primitive<D>,
    n: usize,
    seed: u64,
) -> Result<IdentityStats> {
    // Near a cut locus the field's higher derivatives grow like inverse
    // powers of the clearance, which poisons the finite-difference stencils
    // long before the jet formulas themselves degrade. A tenth of a unit
    // keeps the fourth-order Taylor term well inside the FD tolerances; the
    // distance floor keeps gradients large enough for relative comparisons.
    let seam_margin = 0.1;
    let min_distance = 0.05;
    let h = DEFAULT_FD_STEP;

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut stats = IdentityStats {
        n_points: 0,
        max_grad_identity_rel: 0.0,
        max_det_residual: 0.0,
        max_eigen_gap: 0.0,
        min_alignment: 1.0,
        max_fd_grad_rel: 0.0,
        max_fd_hess_rel: 0.0,
    };

    let mut attempts = 0usize;
    while stats.n_points < n {
        attempts += 1;
        if attempts > 1000 * n.max(16) {
            return Err(Error::DegenerateInput(
                "could not find enough differentiable probe points".into(),
            ));
        }
        let mut x = Point::ZERO;
        for d in 0..D {
            x[d] = rng.gen_range(-1.03..1.03);
        }
        if !prim.differentiable_at(x, seam_margin) || prim.distance(x) < min_distance {
            continue;
        }
        let jet = prim.jet(x)?;

        let (grad_rel, det_abs) = identity_residuals(&jet, prim.k);
        stats.max_grad_identity_rel = stats.max_grad_identity_rel.max(grad_rel);
        stats.max_det_residual = stats.max_det_residual.max(det_abs);

        let report = check_spectral_identity(&jet, prim.k, 1e-9, None);
        stats.max_eigen_gap = stats.max_eigen_gap.max(report.eigen_gap);
        stats.min_alignment = stats.min_alignment.min(report.alignment);

        let fd = finite_difference_jet(|p| prim.value(p), x, h);
        let grad_err = (fd.grad - jet.grad).norm() / jet.grad.norm().max(1.0);
        stats.max_fd_grad_rel = stats.max_fd_grad_rel.max(grad_err);
        let mut diff_sq = 0.0;
        let mut ref_sq = 0.0;
        for i in 0..D {
            for j in 0..D {
                diff_sq += (fd.hess[i][j] - jet.hess[i][j]).powi(2);
                ref_sq += jet.hess[i][j].powi(2);
            }
        }
        let hess_err = diff_sq.sqrt() / ref_sq.sqrt().max(1.0);
        stats.max_fd_hess_rel = stats.max_fd_hess_rel.max(hess_err);

        stats.n_points += 1;
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const K: f64 = 1000.0;

    fn assert_identities(stats: &IdentityStats) {
        assert!(stats.max_grad_identity_rel < 1e-9, "grad identity {}", stats.max_grad_identity_rel);
        // Determinant residual budget scales with (2k)^D.
        assert!(stats.max_det_residual < 1e-6 * (2.0 * K).powi(3), "det {}", stats.max_det_residual);
        assert!(stats.max_eigen_gap < 1e-9, "eigen gap {}", stats.max_eigen_gap);
        assert!(stats.min_alignment > 1.0 - 1e-9, "alignment {}", stats.min_alignment);
        assert!(stats.max_fd_grad_rel < 1e-6, "fd grad {}", stats.max_fd_grad_rel);
        assert!(stats.max_fd_hess_rel < 1e-4, "fd hess {}", stats.max_fd_hess_rel);
    }

    #[test]
    fn sphere_jet_matches_hand_values() {
        let prim = Primitive::sphere(Point([0.0, 0.0, 0.0]), 0.5, K).unwrap();
        let jet = prim.jet(Point([1.0, 0.0, 0.0])).unwrap();
        assert_relative_eq!(jet.val, 250.0, epsilon = 1e-9);
        assert_relative_eq!(jet.grad[0], 1000.0, epsilon = 1e-9);
        assert_relative_eq!(jet.grad[1], 0.0);
        assert_relative_eq!(jet.grad[2], 0.0);
        // Radial eigenvalue 2k with eigenvector along x.
        let eig = sym_eigen(&jet.hess);
        let (l, v) = eig
            .iter()
            .min_by(|a, b| {
                (a.0 - 2000.0).abs().partial_cmp(&(b.0 - 2000.0).abs()).unwrap()
            })
            .unwrap();
        assert_relative_eq!(*l, 2000.0, epsilon = 1e-9);
        assert!(v[0].abs() > 1.0 - 1e-12);
    }

    #[test]
    fn surface_points_have_zero_value_and_gradient() {
        let prim = Primitive::sphere(Point([0.1, -0.2, 0.3]), 0.4, K).unwrap();
        let x = Point([0.5, -0.2, 0.3]);
        let jet = prim.jet(x).unwrap();
        assert!(jet.val.abs() < 1e-20);
        assert!(jet.grad.norm() < 1e-9);

        let plane = Primitive::plane(Point([0.0, 0.0]), Point([0.0, 3.0]), K).unwrap();
        let jet = plane.jet(Point([0.7, 0.0])).unwrap();
        assert_eq!(jet.val, 0.0);
        assert_eq!(jet.grad.norm(), 0.0);
    }

    #[test]
    fn sphere_center_is_rejected_as_cut_locus() {
        let prim = Primitive::sphere(Point([0.0, 0.0, 0.0]), 0.5, K).unwrap();
        assert!(matches!(
            prim.jet(Point([0.0, 0.0, 0.0])),
            Err(Error::NonDifferentiable(_))
        ));
        assert!(!prim.differentiable_at(Point([1e-12, 0.0, 0.0]), 1e-9));
    }

    #[test]
    fn segment_seam_is_rejected() {
        let prim = Primitive::segment(Point([0.0, 0.0]), Point([1.0, 0.0]), K).unwrap();
        // Directly above an endpoint: one-sided Hessians disagree.
        assert!(!prim.differentiable_at(Point([0.0, 0.3]), 1e-6));
        assert!(prim.differentiable_at(Point([0.5, 0.3]), 1e-3));
        assert!(prim.jet(Point([0.0, 0.25])).is_err());
    }

    #[test]
    fn identity_battery_sphere_3d() {
        let prim = Primitive::sphere(Point([0.05, -0.1, 0.0]), 0.5, K).unwrap();
        assert_identities(&verify_primitive_identities(&prim, 1000, 1).unwrap());
    }

    #[test]
    fn identity_battery_plane_3d() {
        let n = Point([1.0, 2.0, -0.5]);
        let prim = Primitive::plane(Point([0.1, 0.0, -0.2]), n, K).unwrap();
        assert_identities(&verify_primitive_identities(&prim, 1000, 2).unwrap());
    }

    #[test]
    fn identity_battery_circle_2d() {
        let prim = Primitive::sphere(Point([0.0, 0.1]), 0.5, K).unwrap();
        let stats = verify_primitive_identities(&prim, 1000, 3).unwrap();
        assert!(stats.max_grad_identity_rel < 1e-9);
        assert!(stats.max_det_residual < 1e-6 * (2.0 * K).powi(2));
        assert!(stats.max_eigen_gap < 1e-9);
        assert!(stats.min_alignment > 1.0 - 1e-9);
        assert!(stats.max_fd_grad_rel < 1e-6);
        assert!(stats.max_fd_hess_rel < 1e-4);
    }

    #[test]
    fn identity_battery_segment_2d_and_3d() {
        let prim = Primitive::segment(Point([-0.4, -0.2]), Point([0.5, 0.3]), K).unwrap();
        let stats = verify_primitive_identities(&prim, 1000, 4).unwrap();
        assert!(stats.max_eigen_gap < 1e-9);
        assert!(stats.min_alignment > 1.0 - 1e-9);
        assert!(stats.max_fd_hess_rel < 1e-4);

        let prim3 =
            Primitive::segment(Point([-0.4, -0.2, 0.1]), Point([0.5, 0.3, -0.3]), K).unwrap();
        assert_identities(&verify_primitive_identities(&prim3, 1000, 5).unwrap());
    }

    #[test]
    fn identity_battery_arc_2d() {
        let prim = Primitive::arc(
            Point([0.0, 0.0]),
            0.5,
            -std::f64::consts::FRAC_PI_2,
            std::f64::consts::FRAC_PI_2,
            K,
        )
        .unwrap();
        let stats = verify_primitive_identities(&prim, 1000, 6).unwrap();
        assert!(stats.max_grad_identity_rel < 1e-9);
        assert!(stats.max_eigen_gap < 1e-9);
        assert!(stats.min_alignment > 1.0 - 1e-9);
        assert!(stats.max_fd_grad_rel < 1e-6);
        assert!(stats.max_fd_hess_rel < 1e-4);
    }

    #[test]
    fn arc_cut_locus_between_endpoints_is_detected() {
        // Half circle opening left: endpoints at (0, +-0.5); their bisector
        // is the x-axis in the left half-plane.
        let prim = Primitive::arc(
            Point([0.0, 0.0]),
            0.5,
            -std::f64::consts::FRAC_PI_2,
            std::f64::consts::FRAC_PI_2,
            K,
        )
        .unwrap();
        assert!(!prim.differentiable_at(Point([-0.6, 0.0]), 1e-3));
        assert!(prim.differentiable_at(Point([-0.6, 0.2]), 1e-3));
    }

    #[test]
    fn arc_distance_beyond_endpoint_uses_endpoint() {
        let prim = Primitive::arc(
            Point([0.0, 0.0]),
            0.5,
            -std::f64::consts::FRAC_PI_2,
            std::f64::consts::FRAC_PI_2,
            K,
        )
        .unwrap();
        // Straight above the top endpoint (0, 0.5).
        assert_relative_eq!(prim.distance(Point([0.0, 0.8])), 0.3, epsilon = 1e-12);
        // In the angular range: plain circle distance.
        assert_relative_eq!(prim.distance(Point([0.8, 0.0])), 0.3, epsilon = 1e-12);
    }

    #[test]
    fn invalid_primitives_are_rejected() {
        assert!(Primitive::<3>::sphere(Point::ZERO, 0.0, K).is_err());
        assert!(Primitive::<2>::plane(Point::ZERO, Point::ZERO, K).is_err());
        assert!(Primitive::<2>::segment(Point([0.1, 0.1]), Point([0.1, 0.1]), K).is_err());
        assert!(Primitive::arc(Point([0.0, 0.0]), 0.5, 0.0, 0.0, K).is_err());
        assert!(Primitive::arc(Point([0.0, 0.0]), 0.5, 0.0, 7.0, K).is_err());
        assert!(Primitive::<2>::sphere(Point::ZERO, 0.5, -1.0).is_err());
    }
}
