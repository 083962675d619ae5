mod analytic_densities {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/analytic_densities.rs"
    ));
}

mod laguerre_rules {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/laguerre_rules.rs"
    ));
}

mod cv_sweep {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/cv_sweep.rs"));
}

mod steady_solve {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/steady_solve.rs"
    ));
}

mod monte_carlo {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/monte_carlo.rs"
    ));
}

mod inequality_report {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/inequality_report.rs"
    ));
}

#[test]
fn analytic_densities_runs() {
    analytic_densities::run_example().expect("analytic densities example should run");
}

#[test]
fn laguerre_rules_runs() {
    laguerre_rules::run_example().expect("laguerre rules example should run");
}

#[test]
fn cv_sweep_runs() {
    cv_sweep::run_example().expect("sweep example should run");
}

#[test]
fn steady_solve_runs() {
    steady_solve::run_example().expect("solver example should run");
}

#[test]
fn monte_carlo_runs() {
    monte_carlo::run_example().expect("Monte-Carlo example should run");
}

#[test]
fn inequality_report_runs() {
    inequality_report::run_example().expect("inequality example should run");
}
