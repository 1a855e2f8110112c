//! `verify`: run the analytic identity batteries and report a check table.

use clap::Args;
use s2df_core::error::{Error, Result};
use s2df_core::loss::DEFAULT_K;
use s2df_core::oracle::{verify_primitive_identities, IdentityStats, Primitive};
use s2df_core::Point;

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Which primitive to check: sphere, plane, circle, segment, arc, all.
    #[arg(long, default_value = "all")]
    pub primitive: String,
    /// Distance-scaling constant of the checked fields.
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: f64,
    /// Probe points per primitive.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Probe sampling seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

struct Check {
    name: &'static str,
    value: f64,
    bound: f64,
    /// Larger is better (alignment) instead of smaller.
    lower_is_pass: bool,
}

fn checks_for(stats: &IdentityStats, k: f64, dim: usize) -> Vec<Check> {
    vec![
        Check {
            name: "gradient-square identity",
            value: stats.max_grad_identity_rel,
            bound: 1e-9,
            lower_is_pass: true,
        },
        Check {
            name: "determinant residual",
            value: stats.max_det_residual,
            bound: 1e-6 * (2.0 * k).powi(dim as i32),
            lower_is_pass: true,
        },
        Check {
            name: "hessian eigenvalue gap",
            value: stats.max_eigen_gap,
            bound: 1e-9,
            lower_is_pass: true,
        },
        Check {
            name: "eigenvector alignment",
            value: stats.min_alignment,
            bound: 1.0 - 1e-9,
            lower_is_pass: false,
        },
        Check {
            name: "finite-difference gradient",
            value: stats.max_fd_grad_rel,
            bound: 1e-6,
            lower_is_pass: true,
        },
        Check {
            name: "finite-difference hessian",
            value: stats.max_fd_hess_rel,
            bound: 1e-4,
            lower_is_pass: true,
        },
    ]
}

fn run_battery(
    label: &str,
    dim: usize,
    stats: IdentityStats,
    k: f64,
    failures: &mut usize,
) {
    for check in checks_for(&stats, k, dim) {
        let pass = if check.lower_is_pass {
            check.value < check.bound
        } else {
            check.value > check.bound
        };
        if !pass {
            *failures += 1;
        }
        println!(
            "{label:<12} {:<26} {:>12.4e} (bound {:.4e})  {}",
            check.name,
            check.value,
            check.bound,
            if pass { "PASS" } else { "FAIL" }
        );
    }
}

pub fn run(args: &VerifyArgs) -> Result<i32> {
    let k = args.k;
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidConfig(format!("k must be positive, got {k}")));
    }
    let wanted = |name: &str| args.primitive == "all" || args.primitive == name;
    let mut failures = 0usize;
    let mut ran = 0usize;

    if wanted("sphere") {
        let prim = Primitive::sphere(Point([0.05, -0.1, 0.0]), 0.5, k)?;
        run_battery(
            "sphere",
            3,
            verify_primitive_identities(&prim, args.n, args.seed)?,
            k,
            &mut failures,
        );
        ran += 1;
    }
    if wanted("plane") {
        let prim = Primitive::plane(Point([0.1, 0.0, -0.2]), Point([1.0, 2.0, -0.5]), k)?;
        run_battery(
            "plane",
            3,
            verify_primitive_identities(&prim, args.n, args.seed.wrapping_add(1))?,
            k,
            &mut failures,
        );
        ran += 1;
    }
    if wanted("circle") {
        let prim = Primitive::<2>::sphere(Point([0.0, 0.1]), 0.5, k)?;
        run_battery(
            "circle",
            2,
            verify_primitive_identities(&prim, args.n, args.seed.wrapping_add(2))?,
            k,
            &mut failures,
        );
        ran += 1;
    }
    if wanted("segment") {
        let prim = Primitive::segment(Point([-0.4, -0.2]), Point([0.5, 0.3]), k)?;
        run_battery(
            "segment",
            2,
            verify_primitive_identities(&prim, args.n, args.seed.wrapping_add(3))?,
            k,
            &mut failures,
        );
        ran += 1;
    }
    if wanted("arc") {
        let prim = Primitive::arc(
            Point([0.0, 0.0]),
            0.5,
            -std::f64::consts::FRAC_PI_2,
            std::f64::consts::FRAC_PI_2,
            k,
        )?;
        run_battery(
            "arc",
            2,
            verify_primitive_identities(&prim, args.n, args.seed.wrapping_add(4))?,
            k,
            &mut failures,
        );
        ran += 1;
    }

    if ran == 0 {
        return Err(Error::InvalidConfig(format!(
            "unknown primitive `{}` (expected sphere, plane, circle, segment, arc, or all)",
            args.primitive
        )));
    }
    if failures > 0 {
        eprintln!("{failures} check(s) failed");
        return Ok(1);
    }
    println!("all checks passed");
    Ok(0)
}
