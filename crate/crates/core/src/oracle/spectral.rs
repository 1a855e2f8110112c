//! Closed-form symmetric eigendecomposition (2x2, 3x3) and the spectral
//! check used to validate learned and analytic fields: away from the
//! surface the Hessian of a scaled squared distance field carries an
//! eigenvalue `2k` whose eigenvector lines up with the gradient; on the
//! surface it lines up with the surface normal.

use crate::field::Jet2;
use crate::geometry::Point;

/// Eigenvalues with orthonormal eigenvectors, sorted descending by value.
pub fn sym_eigen<const D: usize>(m: &[[f64; D]; D]) -> Vec<(f64, Point<D>)> {
    // Defensive symmetrization; producers keep Hessians symmetric already.
    let mut s = [[0.0; D]; D];
    for i in 0..D {
        for j in 0..D {
            s[i][j] = 0.5 * (m[i][j] + m[j][i]);
        }
    }
    match D {
        2 => eigen2(&s),
        3 => eigen3(&s),
        _ => unreachable!("dimension {} not supported", D),
    }
}

fn eigen2<const D: usize>(m: &[[f64; D]; D]) -> Vec<(f64, Point<D>)> {
    let (a, b, c) = (m[0][0], m[0][1], m[1][1]);
    let mean = 0.5 * (a + c);
    let half_diff = 0.5 * (a - c);
    let r = (half_diff * half_diff + b * b).sqrt();
    let (l1, l2) = (mean + r, mean - r);

    let scale = a.abs().max(b.abs()).max(c.abs()).max(1e-300);
    let vec_for = |l: f64, fallback_axis: usize| -> Point<D> {
        // Null vector of (M - l I): orthogonal to either row, whichever is
        // better conditioned.
        let c1 = [b, l - a];
        let c2 = [l - c, b];
        let n1 = (c1[0] * c1[0] + c1[1] * c1[1]).sqrt();
        let n2 = (c2[0] * c2[0] + c2[1] * c2[1]).sqrt();
        let mut v = Point::ZERO;
        if n1.max(n2) < 1e-12 * scale {
            // Matrix is (near) a multiple of the identity.
            v[fallback_axis] = 1.0;
        } else if n1 >= n2 {
            v[0] = c1[0] / n1;
            v[1] = c1[1] / n1;
        } else {
            v[0] = c2[0] / n2;
            v[1] = c2[1] / n2;
        }
        v
    };
    vec![(l1, vec_for(l1, 0)), (l2, vec_for(l2, 1))]
}

fn eigen3<const D: usize>(m: &[[f64; D]; D]) -> Vec<(f64, Point<D>)> {
    let off_sq = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
    let scale = m
        .iter()
        .flatten()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(1e-300);

    let mut eigs: [f64; 3];
    if off_sq <= (1e-14 * scale) * (1e-14 * scale) * 3.0 {
        eigs = [m[0][0], m[1][1], m[2][2]];
    } else {
        // Trigonometric solution of the characteristic cubic.
        let q = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
        let p2 = (m[0][0] - q).powi(2) + (m[1][1] - q).powi(2) + (m[2][2] - q).powi(2)
            + 2.0 * off_sq;
        let p = (p2 / 6.0).sqrt();
        let mut b = [[0.0f64; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                b[i][j] = (m[i][j] - if i == j { q } else { 0.0 }) / p;
            }
        }
        let det_b = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1])
            - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
            + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
        let r = (det_b / 2.0).clamp(-1.0, 1.0);
        let phi = r.acos() / 3.0;
        let l_max = q + 2.0 * p * phi.cos();
        let l_min = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
        eigs = [l_max, 3.0 * q - l_max - l_min, l_min];

        // The trigonometric solution decays to ~1e-8 relative accuracy near
        // repeated roots. Polish the best-isolated root by Newton on the
        // characteristic polynomial, then recover the remaining pair exactly
        // from the trace and second invariant.
        let tr = m[0][0] + m[1][1] + m[2][2];
        let m2 = m[0][0] * m[1][1] - m[0][1] * m[1][0]
            + m[0][0] * m[2][2] - m[0][2] * m[2][0]
            + m[1][1] * m[2][2] - m[1][2] * m[2][1];
        let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        let poly = |l: f64| ((-l + tr) * l - m2) * l + det;
        let dpoly = |l: f64| (-3.0 * l + 2.0 * tr) * l - m2;

        let iso_gap = |i: usize| {
            (0..3)
                .filter(|&j| j != i)
                .map(|j| (eigs[i] - eigs[j]).abs())
                .fold(f64::INFINITY, f64::min)
        };
        let iso = (0..3).max_by(|&a, &b| iso_gap(a).partial_cmp(&iso_gap(b)).unwrap()).unwrap();
        let mut c = eigs[iso];
        for _ in 0..3 {
            let d = dpoly(c);
            if d.abs() < 1e-30 {
                break;
            }
            let step = poly(c) / d;
            if !step.is_finite() {
                break;
            }
            c -= step;
        }
        let pair_sum = tr - c;
        let pair_prod = m2 - c * pair_sum;
        let disc = (pair_sum * pair_sum - 4.0 * pair_prod).max(0.0).sqrt();
        eigs = [c, 0.5 * (pair_sum + disc), 0.5 * (pair_sum - disc)];
    }
    eigs.sort_by(|x, y| y.partial_cmp(x).unwrap());

    let row = |mm: &[[f64; D]; D], l: f64, i: usize| -> [f64; 3] {
        [
            mm[i][0] - if i == 0 { l } else { 0.0 },
            mm[i][1] - if i == 1 { l } else { 0.0 },
            mm[i][2] - if i == 2 { l } else { 0.0 },
        ]
    };
    let cross = |a: [f64; 3], b: [f64; 3]| {
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    };
    let norm = |v: [f64; 3]| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();

    // Null vector of (M - l I) from the best-conditioned pair of rows.
    // Returns None when the null space has dimension >= 2.
    let null_vec = |l: f64| -> Option<Point<D>> {
        let rows = [row(m, l, 0), row(m, l, 1), row(m, l, 2)];
        let candidates = [
            cross(rows[0], rows[1]),
            cross(rows[0], rows[2]),
            cross(rows[1], rows[2]),
        ];
        let best = candidates
            .into_iter()
            .max_by(|a, b| norm(*a).partial_cmp(&norm(*b)).unwrap())
            .unwrap();
        let n = norm(best);
        if n > 1e-9 * scale * scale {
            let mut v = Point::ZERO;
            for d in 0..3 {
                v[d] = best[d] / n;
            }
            Some(v)
        } else {
            None
        }
    };

    // Resolve the most isolated eigenvalue first; a degenerate pair then
    // spans the orthogonal complement.
    let isolation = |i: usize| -> f64 {
        (0..3)
            .filter(|&j| j != i)
            .map(|j| (eigs[i] - eigs[j]).abs())
            .fold(f64::INFINITY, f64::min)
    };
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| isolation(b).partial_cmp(&isolation(a)).unwrap());

    let mut vecs: [Option<Point<D>>; 3] = [None, None, None];
    for &i in &order {
        if vecs[i].is_some() {
            continue;
        }
        match null_vec(eigs[i]) {
            Some(v) => vecs[i] = Some(v),
            None => {
                // Multiplicity >= 2: fill this eigenvalue's cluster with an
                // orthonormal basis of the complement of what's known.
                let known: Vec<Point<D>> = vecs.iter().flatten().copied().collect();
                let basis = orthonormal_complement::<D>(&known);
                let mut bi = 0;
                for j in 0..3 {
                    if vecs[j].is_none() {
                        vecs[j] = Some(basis[bi.min(basis.len() - 1)]);
                        bi += 1;
                    }
                }
            }
        }
    }

    (0..3).map(|i| (eigs[i], vecs[i].unwrap())).collect()
}

/// Orthonormal vectors spanning the complement of `known` (3D).
fn orthonormal_complement<const D: usize>(known: &[Point<D>]) -> Vec<Point<D>> {
    let mut basis: Vec<Point<D>> = known.to_vec();
    let mut out = Vec::new();
    for axis in 0..D {
        let mut e = Point::ZERO;
        e[axis] = 1.0;
        for b in &basis {
            e = e - *b * e.dot(*b);
        }
        if let Some(u) = e.normalized(1e-6) {
            basis.push(u);
            out.push(u);
        }
    }
    out
}

/// Numbers behind the spectral identity; the caller asserts.
#[derive(Clone, Copy, Debug)]
pub struct SpectralReport {
    /// min over eigenvalues of |lambda - 2k| / 2k.
    pub eigen_gap: f64,
    /// |cos| between the matching eigenspace and the gradient (or the
    /// supplied surface normal when the gradient vanishes). NaN when neither
    /// direction is available.
    pub alignment: f64,
}

/// Checks the Hessian of a jet for the `2k` eigenvalue and measures how well
/// the matching eigenspace lines up with the gradient. Near the zero-level
/// set (gradient below `tol`) the caller supplies the surface normal.
pub fn check_spectral_identity<const D: usize>(
    jet: &Jet2<D>,
    k: f64,
    tol: f64,
    surface_normal: Option<Point<D>>,
) -> SpectralReport {
    let target = 2.0 * k;
    let eig = sym_eigen(&jet.hess);
    let eigen_gap = eig
        .iter()
        .map(|(l, _)| (l - target).abs() / target)
        .fold(f64::INFINITY, f64::min);

    let direction = if jet.grad.norm() > tol {
        jet.grad.normalized(1e-300)
    } else {
        surface_normal.and_then(|n| n.normalized(1e-300))
    };
    let alignment = match direction {
        None => f64::NAN,
        Some(w) => {
            let best = eig
                .iter()
                .map(|(l, _)| (l - target).abs())
                .fold(f64::INFINITY, f64::min);
            // Project onto the whole cluster nearest the target so repeated
            // eigenvalues (flat directions of tubes) are handled.
            let cluster_tol = best + 1e-6 * target;
            let mut proj_sq = 0.0;
            for (l, v) in &eig {
                if (l - target).abs() <= cluster_tol {
                    let c = v.dot(w);
                    proj_sq += c * c;
                }
            }
            proj_sq.sqrt().min(1.0)
        }
    };
    SpectralReport { eigen_gap, alignment }
}
