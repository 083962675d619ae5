// Generalized Gauss-Laguerre rules and the moments they produce.

use fprna::quadrature::{cv_from_moments, laguerre_rule, moments_quadrature};
use fprna::special::ln_gamma;
use fprna::DimensionlessParams;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let rule = laguerre_rule(8, 1.5)?;
    println!("8-point rule for x^1.5 e^-x");
    for (x, w) in rule.nodes().iter().zip(rule.weights()) {
        println!("  x = {x:>22.16e}  w = {w:>22.16e}");
    }
    // ∫ x^3 · x^1.5 e^-x dx = Γ(5.5); exact for an 8-point rule.
    let got = rule.integrate(|x| x.powi(3));
    let exact = ln_gamma(5.5).exp();
    println!("integral of x^3: {got:.15} (exact {exact:.15})");
    assert!((got / exact - 1.0).abs() < 1e-13);

    let big = laguerre_rule(1024, 0.0)?;
    let sum: f64 = big.weights().iter().sum();
    println!("1024-point weights sum to {sum:.16} (exact 1)");

    let dp = DimensionlessParams::quadratic(8.0, 1.0, 1.0, 1.0, 1.0)?;
    let m = moments_quadrature(&dp, 1e-12)?;
    println!(
        "moments of rho_fast: ln m0 = {:.12}, mean = {:.12}",
        m.ln_m0(),
        m.mean()
    );
    println!("CV = {:.12}", cv_from_moments(&m)?);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
