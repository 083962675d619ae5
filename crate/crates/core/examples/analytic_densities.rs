// Closed-form stationary densities for a set of rate constants.
//
// Run with `cargo run --example analytic_densities`.

use fprna::distributions::{c_delta_bound, cv_rho0, ln_rhofast_shape, rho0};
use fprna::quadrature::ln_normalization_constant;
use fprna::sweep::{fast_cv, relative_cv};
use fprna::{ModelParams, NoiseLaw};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    // c_r, c_mu, c, k_r, k_mu, sigma_r, sigma_mu
    let params = ModelParams::new(10.0, 5.0, 0.2, 1.0, 2.0, 0.125, 0.25)?;
    let dp = params.nondimensionalize(NoiseLaw::Quadratic);
    let (r_bar, mu_bar) = params.characteristic_values();
    println!("r_bar = {r_bar}, mu_bar = {mu_bar}");
    println!(
        "delta = {}, gamma = {}, p = {}, kappa = {}, nu = {}",
        dp.strength(),
        dp.gamma(),
        dp.p(),
        dp.kappa(),
        dp.nu()
    );

    let ln_c = ln_normalization_constant(&dp, 1e-10)?;
    println!("{:>6} {:>12} {:>12}", "r", "rho0", "rhofast");
    for k in 1..=10 {
        let r = 0.25 * k as f64;
        let fast = (ln_rhofast_shape(&dp, r) + ln_c).exp();
        println!("{r:>6.2} {:>12.6} {:>12.6}", rho0(&dp, r)?, fast);
    }

    let (cv0, cv) = (cv_rho0(&dp)?, fast_cv(&dp, 1e-10)?);
    let rel = relative_cv(&dp, 1e-10)?;
    let bound = c_delta_bound(dp.strength())?;
    println!("CV(rho0) = {cv0:.6}, CV(rhofast) = {cv:.6}, ratio = {rel:.6}, C_delta = {bound:.6}");
    assert!(rel < 1.0 && cv <= bound);

    // Linear noise: same rates, different dimensionless strength.
    let lin = params.nondimensionalize(NoiseLaw::Linear);
    println!(
        "linear noise: eta = {}, relative CV = {:.6}",
        lin.strength(),
        relative_cv(&lin, 1e-10)?
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
