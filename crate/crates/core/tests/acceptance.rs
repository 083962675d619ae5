// Exit criteria. Each test writes one `PASS`/`FAIL` line to stderr through
// an unbuffered handle so the verdicts show up without `--nocapture`.

use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use fprna::distributions::{gamma_pdf, invgamma_pdf, GammaParams};
use fprna::fv::{compare_marginal, h1, h2, solve_steady, Grid2D};
use fprna::inequalities::{check_cv_bound, run_suite, Status, Suite};
use fprna::quadrature::{cv_from_moments, moments_quadrature};
use fprna::sde::{compare_to_density, simulate, Histogram1D, SimConfig};
use fprna::sweep::{log_space, relative_cv, sweep, SweepGrid};
use fprna::{DimensionlessParams, ModelParams, NoiseLaw};

fn verdict(id: &str, ok: bool, detail: impl AsRef<str>) {
    let tag = if ok { "PASS" } else { "FAIL" };
    let line = format!("{tag} {id} {}\n", detail.as_ref());
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(ok, "{id} failed: {}", detail.as_ref());
}

fn quad(delta: f64, gamma: f64, p: f64) -> DimensionlessParams {
    DimensionlessParams::quadratic(delta, gamma, p, 1.0, 1.0).unwrap()
}

fn full_grid() -> SweepGrid {
    SweepGrid {
        gamma_range: (1e-2, 1e2),
        p_range: (1e-2, 1e2),
        n_gamma: 40,
        n_p: 40,
    }
}

#[test]
fn a01_free_cv_by_quadrature() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for delta in [2.0, 8.0, 20.0] {
        let dp = quad(delta, 0.0, 1.0);
        let cv = cv_from_moments(&moments_quadrature(&dp, 1e-12).unwrap()).unwrap();
        let closed = 1.0 / (delta - 1.0f64).sqrt();
        worst = worst.max((cv / closed - 1.0).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        "A1",
        worst < 1e-8 && secs < 1.0,
        format!("max relative error {worst:.3e} in {secs:.2}s"),
    );
}

#[test]
fn a02_limits() {
    let start = Instant::now();
    let cases = [
        ((8.0, 1e-6, 1.0), 1e-3),
        ((8.0, 1.0, 1e-6), 1e-3),
        ((8.0, 1e6, 0.5), 1e-2),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for ((d, g, p), tol) in cases {
        let v = relative_cv(&quad(d, g, p), 1e-10).unwrap();
        ok &= (v - 1.0).abs() < tol;
        parts.push(format!("({d},{g:e},{p})->{v:.8}"));
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        "A2",
        ok && secs < 10.0,
        format!("{} in {secs:.2}s", parts.join(" ")),
    );
}

#[test]
fn a03_reduction_surface() {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for delta in [2.0, 20.0] {
        let s = sweep(NoiseLaw::Quadratic, delta, &full_grid(), 1e-10).unwrap();
        let (g, p, max) = s.max().unwrap();
        ok &= s.missing() == 0 && max <= 1.0 + 1e-9;
        parts.push(format!(
            "delta={delta}: max {max:.12} at gamma={g:.3e} p={p:.3e}, {} missing",
            s.missing()
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        "A3",
        ok && secs < 300.0,
        format!("{} in {secs:.1}s", parts.join("; ")),
    );
}

#[test]
fn a04_cv_bound() {
    let axis = log_space(1e-2, 1e2, 40).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for delta in [2.5, 3.0, 8.0] {
        let cb = check_cv_bound(delta, &axis, &axis).unwrap();
        ok &= cb.failures.is_empty() && cb.max_violation <= 1e-6;
        parts.push(format!(
            "delta={delta}: C={:.8} max excess {:.3e}, {} failed cells",
            cb.bound,
            cb.max_violation,
            cb.failures.len()
        ));
    }
    verdict("A4", ok, parts.join("; "));
}

#[test]
fn a05_exact_without_binding() {
    let grid = Grid2D::reference();
    let dp = quad(8.0, 0.0, 1.0);
    let f = solve_steady(&dp, &grid).unwrap();

    let mut product = Vec::with_capacity(grid.cells());
    for i in 0..grid.n_r() {
        for j in 0..grid.n_mu() {
            let (r, mu) = (grid.r(i), grid.mu(j));
            product.push((h1(&dp, r, mu).unwrap() + h2(&dp, r, mu).unwrap()).exp());
        }
    }
    let mass: f64 = product.iter().sum::<f64>() * grid.dr() * grid.dmu();
    product.iter_mut().for_each(|v| *v /= mass);

    let top = product.iter().copied().fold(0.0, f64::max);
    let err = f
        .values()
        .iter()
        .zip(&product)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / top;
    let mass_err = (f.mass() - 1.0).abs();
    verdict(
        "A5",
        err < 1e-8 && mass_err < 1e-10 && f.min() >= -1e-12,
        format!(
            "relative Linf {err:.3e}, |mass-1| {mass_err:.3e}, min {:.3e}",
            f.min()
        ),
    );
}

#[test]
fn a06_full_model_reduces_cv() {
    let grid = Grid2D::reference();
    let mut ok = true;
    let mut parts = Vec::new();
    let mut slowest = 0.0f64;
    for gamma in [0.5, 1.0, 2.0] {
        for p in [0.5, 1.0, 2.0] {
            let start = Instant::now();
            let dp = quad(8.0, gamma, p);
            let f = solve_steady(&dp, &grid).unwrap();
            slowest = slowest.max(start.elapsed().as_secs_f64());
            let v = compare_marginal(&dp, &f, 1e-10).unwrap().relative_cv();
            ok &= v < 1.0;
            parts.push(format!("({gamma},{p})->{v:.4}"));
        }
    }
    verdict(
        "A6",
        ok && slowest < 120.0,
        format!("{} slowest solve {slowest:.2}s", parts.join(" ")),
    );
}

#[test]
fn a07_fast_limit() {
    let dp = DimensionlessParams::quadratic(8.0, 1.0, 0.5, 20.0, 20.0).unwrap();
    let f = solve_steady(&dp, &Grid2D::reference()).unwrap();
    let c = compare_marginal(&dp, &f, 1e-10).unwrap();
    verdict(
        "A7",
        c.l1_rhofast < 0.05,
        format!("L1 to fast density {:.4e}", c.l1_rhofast),
    );
}

#[test]
fn a08_linear_noise_both_sides_of_one() {
    let s = sweep(NoiseLaw::Linear, 1.0, &full_grid(), 1e-10).unwrap();
    let (gmin, pmin, min) = s.min().unwrap();
    let (gmax, pmax, max) = s.max().unwrap();
    verdict(
        "A8",
        max > 1.02 && min < 0.98,
        format!(
            "min {min:.8} at gamma={gmin:.3e} p={pmin:.3e}; max {max:.6} at gamma={gmax:.3e} p={pmax:.3e}; need >1.02 and <0.98"
        ),
    );
}

#[test]
fn a09_monte_carlo_matches_free_law() {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();

    let quadratic = ModelParams::new(8.0, 8.0, 0.0, 8.0, 8.0, 1.0, 1.0).unwrap();
    let invgamma = GammaParams::new(9.0, 8.0).unwrap();
    let linear = ModelParams::new(8.0, 8.0, 0.0, 8.0, 8.0, 2.0, 1.0).unwrap();
    let gamma = GammaParams::new(4.0, 4.0).unwrap();
    type Case = (ModelParams, NoiseLaw, Box<dyn Fn(f64) -> f64>);
    let cases: [Case; 2] = [
        (
            quadratic,
            NoiseLaw::Quadratic,
            Box::new(move |y| invgamma_pdf(invgamma, y).unwrap()),
        ),
        (
            linear,
            NoiseLaw::Linear,
            Box::new(move |x| gamma_pdf(gamma, x).unwrap()),
        ),
    ];
    for (params, law, density) in cases {
        let mut cfg = SimConfig::new(params, law);
        cfg.n_paths = 200;
        let ens = simulate(&cfg).unwrap();
        let hist = Histogram1D::from_samples(ens.r_samples(), 50, (0.0, 5.0)).unwrap();
        let tv = compare_to_density(&hist, &|x: f64| density(x));
        ok &= tv < 0.05 && ens.sample_count() >= 100_000;
        parts.push(format!(
            "{law} TV {tv:.4e} from {} samples",
            ens.sample_count()
        ));
    }

    let secs = start.elapsed().as_secs_f64();
    verdict(
        "A9",
        ok && secs < 60.0,
        format!("{} in {secs:.1}s", parts.join(", ")),
    );
}

#[test]
fn a10_poincare_suite() {
    let report = run_suite(Suite::Poincare);
    let count = |prefix: &str, status: &Status| {
        report
            .checks
            .iter()
            .filter(|c| c.name.contains(prefix) && &c.status == status)
            .count()
    };
    let equality = count("equality", &Status::Pass);
    let duality = count("duality", &Status::Pass);
    let detail = format!(
        "{} checks, {} failed, {} skipped; {equality} sharpness and {duality} duality checks passed",
        report.checks.len(),
        report.failures(),
        report.skipped()
    );
    for c in report.checks.iter().filter(|c| c.status == Status::Fail) {
        let _ = writeln!(std::io::stderr(), "  failed: {} {}", c.name, c.detail);
    }
    verdict(
        "A10",
        report.passed() && equality == 6 && duality > 0,
        detail,
    );
}

fn run_cli(args: &[&str]) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = fprna::cli::run(args.iter().copied(), &mut out, &mut err);
    assert_eq!(code, 0, "{}", String::from_utf8_lossy(&err));
}

fn bytes(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap()
}

#[test]
fn a11_cli_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let mut identical = Vec::new();
    for run in ["a", "b"] {
        let mc = path(&format!("mc_{run}.csv"));
        let sw = path(&format!("sweep_{run}.csv"));
        let field = path(&format!("field_{run}.csv"));
        let marginal = path(&format!("marginal_{run}.csv"));
        let summary = path(&format!("summary_{run}.csv"));
        run_cli(&[
            "fprna", "mc", "--paths", "40", "--seed", "7", "--t-end", "2", "--out", &mc,
        ]);
        run_cli(&[
            "fprna",
            "cv-sweep",
            "--delta",
            "8",
            "--n-gamma",
            "6",
            "--n-p",
            "5",
            "--out",
            &sw,
        ]);
        run_cli(&[
            "fprna",
            "solve",
            "--nr",
            "20",
            "--nmu",
            "30",
            "--field",
            &field,
            "--marginal",
            &marginal,
            "--summary",
            &summary,
        ]);
        identical.push([mc, sw, field, marginal, summary]);
    }
    let same = identical[0]
        .iter()
        .zip(&identical[1])
        .all(|(a, b)| bytes(Path::new(a)) == bytes(Path::new(b)));
    verdict(
        "A11",
        same,
        "mc, cv-sweep and solve outputs compared byte for byte",
    );
}
