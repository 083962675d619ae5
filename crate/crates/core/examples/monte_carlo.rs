// SDE ensembles under both noise laws against their stationary densities.

use fprna::sde::{compare_to_density, simulate, unbound_density, Histogram1D, SimConfig};
use fprna::{ModelParams, NoiseLaw};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for (law, sigma_r) in [(NoiseLaw::Quadratic, 1.0), (NoiseLaw::Linear, 2.0)] {
        let params = ModelParams::new(8.0, 8.0, 0.0, 8.0, 8.0, sigma_r, 1.0)?;
        let config = SimConfig {
            n_paths: 100,
            ..SimConfig::new(params, law)
        };
        let ens = simulate(&config)?;
        let hist = Histogram1D::from_samples(ens.r_samples(), 50, (0.0, 5.0))?;
        let density = unbound_density(&params, law).expect("no binding");
        let (mean, se) = ens.sample_mean_r();
        println!(
            "{law}: {} samples, mean r = {mean:.4} +- {se:.4}, TV distance = {:.4}",
            ens.sample_count(),
            compare_to_density(&hist, &density)
        );
    }

    // With binding the mean drops below c_r/k_r.
    let params = ModelParams::new(8.0, 8.0, 1.0, 8.0, 8.0, 1.0, 1.0)?;
    let config = SimConfig {
        n_paths: 50,
        ..SimConfig::new(params, NoiseLaw::Quadratic)
    };
    let (mean, se) = simulate(&config)?.sample_mean_r();
    println!("with binding c = 1: mean r = {mean:.4} +- {se:.4}");
    assert!(mean < 1.0);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
