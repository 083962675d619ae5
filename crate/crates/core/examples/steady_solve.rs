// Two-dimensional stationary solve on the standard grid and comparison of
// the r marginal with the closed forms.

use fprna::fv::{compare_marginal, conditional_mean_mu, solve_steady, Grid2D};
use fprna::DimensionlessParams;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let grid = Grid2D::reference();
    println!("grid: {} x {} cells", grid.n_r(), grid.n_mu());
    println!(
        "{:>5} {:>5} {:>10} {:>10} {:>10}",
        "gamma", "p", "CV/CV0", "fast/CV0", "L1 fast"
    );
    for (gamma, p) in [(0.0, 1.0), (0.5, 0.5), (1.0, 1.0), (2.0, 2.0)] {
        let dp = DimensionlessParams::quadratic(8.0, gamma, p, 1.0, 1.0)?;
        let field = solve_steady(&dp, &grid)?;
        let c = compare_marginal(&dp, &field, 1e-10)?;
        println!(
            "{gamma:>5} {p:>5} {:>10.6} {:>10.6} {:>10.6}",
            c.relative_cv(),
            c.cv_rhofast / c.cv_rho0,
            c.l1_rhofast
        );
        assert!((field.mass() - 1.0).abs() < 1e-10 && field.min() >= -1e-12);
    }

    // Fast µRNA: E[µ | r] approaches 1/(1 + γ r) in scaled units.
    let dp = DimensionlessParams::quadratic(8.0, 1.0, 0.5, 20.0, 20.0)?;
    let field = solve_steady(&dp, &grid)?;
    let j = conditional_mean_mu(&field);
    for i in [10, 20, 40] {
        let r = grid.r(i);
        println!(
            "r = {r:.3}: E[mu|r] = {:.4}, 1/(1+r) = {:.4}",
            j[i],
            1.0 / (1.0 + r)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
