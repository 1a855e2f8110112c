//! Second-order jets: value, gradient, and Hessian of a scalar field at a
//! point, propagated or measured by the surrounding modules.

use crate::geometry::Point;

/// Value, gradient, and (symmetric) Hessian of a scalar field at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2<const D: usize> {
    pub val: f64,
    pub grad: Point<D>,
    /// Row-major; kept exactly symmetric by every producer in this crate.
    pub hess: [[f64; D]; D],
}

impl<const D: usize> Jet2<D> {
    pub const ZERO: Self = Jet2 {
        val: 0.0,
        grad: Point([0.0; D]),
        hess: [[0.0; D]; D],
    };

    pub fn is_finite(&self) -> bool {
        self.val.is_finite()
            && self.grad.is_finite()
            && self.hess.iter().flatten().all(|v| v.is_finite())
    }

    /// Hessian-vector product.
    pub fn hess_mul(&self, v: Point<D>) -> Point<D> {
        let mut out = Point::ZERO;
        for i in 0..D {
            for j in 0..D {
                out[i] += self.hess[i][j] * v[j];
            }
        }
        out
    }
}

/// Cofactor matrix of `H - shift * I`, i.e. the entrywise derivative of
/// `det_shifted` treating all entries as independent, for D in {1, 2, 3}.
pub fn cofactor_shifted<const D: usize>(hess: &[[f64; D]; D], shift: f64) -> [[f64; D]; D] {
    let mut m = *hess;
    for d in 0..D {
        m[d][d] -= shift;
    }
    let mut c = [[0.0; D]; D];
    match D {
        1 => c[0][0] = 1.0,
        2 => {
            c[0][0] = m[1][1];
            c[0][1] = -m[1][0];
            c[1][0] = -m[0][1];
            c[1][1] = m[0][0];
        }
        3 => {
            for r in 0..3 {
                for s in 0..3 {
                    let (r1, r2) = ((r + 1) % 3, (r + 2) % 3);
                    let (s1, s2) = ((s + 1) % 3, (s + 2) % 3);
                    // 2x2 minor with rows/cols cyclically ordered keeps the
                    // (-1)^(r+s) sign folded in.
                    c[r][s] = m[r1][s1] * m[r2][s2] - m[r1][s2] * m[r2][s1];
                }
            }
        }
        _ => unreachable!("dimension {} not supported", D),
    }
    c
}

/// Determinant of `H - shift * I` in closed form for D in {1, 2, 3}.
pub fn det_shifted<const D: usize>(hess: &[[f64; D]; D], shift: f64) -> f64 {
    match D {
        1 => hess[0][0] - shift,
        2 => {
            let a = hess[0][0] - shift;
            let d = hess[1][1] - shift;
            a * d - hess[0][1] * hess[1][0]
        }
        3 => {
            let a = hess[0][0] - shift;
            let e = hess[1][1] - shift;
            let i = hess[2][2] - shift;
            let (b, c) = (hess[0][1], hess[0][2]);
            let (d, f) = (hess[1][0], hess[1][2]);
            let (g, h) = (hess[2][0], hess[2][1]);
            a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)
        }
        _ => unreachable!("dimension {} not supported", D),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn det_of_diagonal_shift() {
        let h = [[3.0, 0.0], [0.0, 5.0]];
        assert_relative_eq!(det_shifted(&h, 1.0), 8.0);
    }

    #[test]
    fn det_matches_cofactor_expansion_3d() {
        let h = [
            [2.0, -1.0, 0.5],
            [-1.0, 4.0, 1.5],
            [0.5, 1.5, -3.0],
        ];
        // Straight Laplace expansion of (H - I) computed by hand.
        let s = 1.0;
        let m = [
            [h[0][0] - s, h[0][1], h[0][2]],
            [h[1][0], h[1][1] - s, h[1][2]],
            [h[2][0], h[2][1], h[2][2] - s],
        ];
        let expect = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        assert_relative_eq!(det_shifted(&h, s), expect);
    }

    #[test]
    fn cofactor_is_entrywise_determinant_derivative() {
        let h = [
            [2.0, -1.0, 0.5],
            [-1.0, 4.0, 1.5],
            [0.5, 1.5, -3.0],
        ];
        let shift = 0.7;
        let c = cofactor_shifted(&h, shift);
        let step = 1e-6;
        for r in 0..3 {
            for s in 0..3 {
                let mut hp = h;
                let mut hm = h;
                hp[r][s] += step;
                hm[r][s] -= step;
                let fd = (det_shifted(&hp, shift) - det_shifted(&hm, shift)) / (2.0 * step);
                assert_relative_eq!(c[r][s], fd, max_relative = 1e-7, epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn cofactor_2d_and_1d_closed_forms() {
        let h2 = [[3.0, 1.0], [1.0, 5.0]];
        let c2 = cofactor_shifted(&h2, 1.0);
        assert_eq!(c2, [[4.0, -1.0], [-1.0, 2.0]]);
        let c1 = cofactor_shifted(&[[9.0]], 4.0);
        assert_eq!(c1, [[1.0]]);
    }

    #[test]
    fn hess_mul_applies_symmetric_matrix() {
        let j = Jet2 {
            val: 0.0,
            grad: Point([0.0, 0.0]),
            hess: [[2.0, 1.0], [1.0, 3.0]],
        };
        assert_eq!(j.hess_mul(Point([1.0, -1.0])), Point([1.0, -2.0]));
    }
}
