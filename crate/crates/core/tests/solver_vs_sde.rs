// The 2D solver and the SDE ensemble approximate the same stationary law once
// binding is switched on. Both are restricted to the solver window and
// compared cell by cell.

use fprna::fv::{marginal_r, solve_steady, Grid2D};
use fprna::sde::{simulate, Histogram1D, SimConfig};
use fprna::{ModelParams, NoiseLaw};

#[test]
fn binding_marginal_matches_simulation() {
    let params = ModelParams::new(8.0, 8.0, 8.0, 8.0, 8.0, 1.0, 1.0).unwrap();
    let dp = params.nondimensionalize(NoiseLaw::Quadratic);
    assert_eq!(params.characteristic_values(), (1.0, 1.0));

    let grid = Grid2D::reference();
    let rho = marginal_r(&solve_steady(&dp, &grid).unwrap());
    let solver: Vec<f64> = rho.values().iter().map(|v| v * grid.dr()).collect();
    let solver_mass: f64 = solver.iter().sum();

    let mut cfg = SimConfig::new(params, NoiseLaw::Quadratic);
    cfg.n_paths = 200;
    let ens = simulate(&cfg).unwrap();
    let (lo, hi) = grid.r_bounds();
    let hist = Histogram1D::from_samples(ens.r_samples(), grid.n_r(), (lo, hi)).unwrap();
    let inside: f64 = hist.masses().iter().sum();
    assert!(inside > 0.99, "window holds {inside}");

    let tv = 0.5
        * hist
            .masses()
            .iter()
            .zip(&solver)
            .map(|(h, s)| (h / inside - s / solver_mass).abs())
            .sum::<f64>();
    eprintln!("solver vs SDE total variation {tv:.4e}");
    assert!(tv < 0.05, "total variation {tv}");
}
