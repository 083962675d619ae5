// A small relative-CV surface, written as CSV to the temp directory.

use fprna::csvio::write_numeric;
use fprna::sweep::{sweep, SweepGrid};
use fprna::NoiseLaw;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let grid = SweepGrid {
        n_gamma: 9,
        n_p: 9,
        ..SweepGrid::default()
    };
    for delta in [2.0, 20.0] {
        let res = sweep(NoiseLaw::Quadratic, delta, &grid, 1e-10)?;
        let (lo, hi) = (res.min().unwrap(), res.max().unwrap());
        println!(
            "delta = {delta}: relative CV in [{:.6}, {:.6}], {} failed cells",
            lo.2,
            hi.2,
            res.missing()
        );
        assert!(hi.2 <= 1.0 + 1e-9);

        let path = std::env::temp_dir().join(format!("fprna_sweep_delta{delta}.csv"));
        write_numeric(
            &path,
            &["gamma", "p", "relative_cv"],
            res.rows().map(|(g, p, v)| vec![g, p, v]),
        )?;
        println!("  written to {}", path.display());
    }

    // Under linear noise the same quantity crosses one.
    let res = sweep(NoiseLaw::Linear, 1.0, &grid, 1e-10)?;
    println!(
        "linear, eta = 1: relative CV in [{:.6}, {:.6}]",
        res.min().unwrap().2,
        res.max().unwrap().2
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
