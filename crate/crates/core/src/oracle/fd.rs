//! Finite-difference jet measurement for arbitrary scalar fields.

use crate::field::Jet2;
use crate::geometry::Point;

/// Default step in normalized units; balances truncation against roundoff
/// for double precision.
pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// Measures a second-order jet of `field` at `x` by central differences:
/// gradient from two-point stencils, diagonal Hessian terms from three-point
/// stencils, mixed terms from the four-point stencil. The result is
/// symmetric by construction.
pub fn finite_difference_jet<const D: usize>(
    field: impl Fn(Point<D>) -> f64,
    x: Point<D>,
    h: f64,
) -> Jet2<D> {
    assert!(h > 0.0, "finite-difference step must be positive");
    let shift = |base: Point<D>, d: usize, amount: f64| {
        let mut p = base;
        p[d] += amount;
        p
    };

    let f0 = field(x);
    let mut grad = Point::ZERO;
    let mut hess = [[0.0; D]; D];
    for i in 0..D {
        let fp = field(shift(x, i, h));
        let fm = field(shift(x, i, -h));
        grad[i] = (fp - fm) / (2.0 * h);
        hess[i][i] = (fp - 2.0 * f0 + fm) / (h * h);
        for j in (i + 1)..D {
            let fpp = field(shift(shift(x, i, h), j, h));
            let fpm = field(shift(shift(x, i, h), j, -h));
            let fmp = field(shift(shift(x, i, -h), j, h));
            let fmm = field(shift(shift(x, i, -h), j, -h));
            let mixed = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
            hess[i][j] = mixed;
            hess[j][i] = mixed;
        }
    }
    Jet2 { val: f0, grad, hess }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn quadratic_forms_are_recovered_exactly_up_to_roundoff() {
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        for _ in 0..20 {
            let mut a = [[0.0f64; 3]; 3];
            for i in 0..3 {
                for j in i..3 {
                    let v = rng.gen_range(-2.0..2.0);
                    a[i][j] = v;
                    a[j][i] = v;
                }
            }
            let field = |p: Point<3>| {
                let mut acc = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        acc += p[i] * a[i][j] * p[j];
                    }
                }
                acc
            };
            let x = Point([
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ]);
            let jet = finite_difference_jet(field, x, 1e-4);
            // Central differences are exact on quadratics, so everything
            // left is roundoff: ~4 eps |f| / h^2, about 1e-7 at these
            // operand scales.
            for i in 0..3 {
                for j in 0..3 {
                    assert!(
                        (jet.hess[i][j] - 2.0 * a[i][j]).abs() < 1e-6,
                        "hess[{}][{}] = {}, want {}",
                        i,
                        j,
                        jet.hess[i][j],
                        2.0 * a[i][j]
                    );
                }
            }
        }
    }

    #[test]
    fn constant_field_has_zero_derivatives() {
        let jet = finite_difference_jet(|_: Point<2>| 3.75, Point([0.3, -0.8]), 1e-4);
        assert_eq!(jet.val, 3.75);
        assert_eq!(jet.grad, Point([0.0, 0.0]));
        assert!(jet.hess.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn sine_gradient_matches_analytic() {
        let field = |p: Point<2>| (5.0 * p[0]).sin();
        let x = Point([0.37, 0.0]);
        let jet = finite_difference_jet(field, x, 1e-4);
        let expect = 5.0 * (5.0 * x[0]).cos();
        assert!((jet.grad[0] - expect).abs() / expect.abs() < 1e-6);
        assert!(jet.grad[1].abs() < 1e-9);
    }

    #[test]
    fn hessian_is_symmetric_for_asymmetric_sampling_noise() {
        let field = |p: Point<3>| (3.0 * p[0]).sin() * (2.0 * p[1]).cos() + p[2] * p[0];
        let jet = finite_difference_jet(field, Point([0.2, -0.4, 0.9]), 1e-4);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(jet.hess[i][j], jet.hess[j][i]);
            }
        }
    }
}
