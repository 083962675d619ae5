// Weighted Poincaré inequalities, the Lyapunov function and the CV bound.

use fprna::inequalities::{
    check_cv_bound, lyapunov_lu, lyapunov_u, poincare_gap_gamma, poincare_gap_invgamma, run_suite,
    Suite, TestFunction,
};
use fprna::sweep::log_space;
use fprna::ModelParams;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for u in [
        TestFunction::power(1.0),
        TestFunction::log(),
        TestFunction::sin(),
    ] {
        let g = poincare_gap_gamma(3.0, 2.0, &u)?;
        let ig = poincare_gap_invgamma(5.0, 1.0, &u)?;
        println!(
            "{:<8} gamma(3,2): {:.6} <= {:.6}   inverse gamma(5,1): {:.6} <= {:.6}",
            u.name(),
            g.lhs,
            g.rhs,
            ig.lhs,
            ig.rhs
        );
    }

    let params = ModelParams::new(1.0, 1.0, 0.5, 1.0, 1.0, 1.0, 1.0)?;
    for k in 0..4 {
        let r = 10f64.powi(k);
        println!(
            "U({r}, {r}) = {:.4}, LU = {:.4}",
            lyapunov_u(1.0, 1.0, r, r),
            lyapunov_lu(&params, 1.0, 1.0, r, r)?
        );
    }

    let grid = log_space(1e-2, 1e2, 6)?;
    let cb = check_cv_bound(3.0, &grid, &grid)?;
    println!(
        "C_3 = {:.6}, largest CV - C_3 = {:.3e}",
        cb.bound, cb.max_violation
    );

    print!("{}", run_suite(Suite::Lyapunov));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
