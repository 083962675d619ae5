//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage or input errors, 2 when a numerical
//! method fails or a check does not pass.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::csvio::{format_number, write_numeric, write_rows, write_summary, write_text};
use crate::distributions::{ln_rhofast_shape, rho0};
use crate::error::{Error, Result};
use crate::fv::{compare_marginal, solve_steady, Grid2D};
use crate::inequalities::{run_suite, Suite};
use crate::params::{DimensionlessParams, ModelParams, NoiseLaw};
use crate::quadrature::ln_normalization_constant;
use crate::sde::{compare_to_density, simulate, unbound_density, Histogram1D, SimConfig};
use crate::sweep::{sweep, SweepGrid};

#[derive(Debug, Parser)]
#[command(
    name = "fprna",
    version,
    about = "Stationary mRNA/microRNA densities, CV sweeps, 2D solves and Monte-Carlo checks",
    args_override_self = true
)]
pub struct Cli {
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// File of `flag = value` lines supplying defaults for any flag.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate the free and fast-µRNA densities.
    Analytic(AnalyticArgs),
    /// Relative CV of the fast-µRNA density over a (γ, p) grid.
    CvSweep(SweepArgs),
    /// Solve the two-dimensional stationary equation.
    Solve(SolveArgs),
    /// Simulate the SDE and histogram r.
    Mc(McArgs),
    /// Run the inequality verification suite.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LawArg {
    Quadratic,
    Linear,
}

impl From<LawArg> for NoiseLaw {
    fn from(l: LawArg) -> Self {
        match l {
            LawArg::Quadratic => NoiseLaw::Quadratic,
            LawArg::Linear => NoiseLaw::Linear,
        }
    }
}

#[derive(Debug, Args)]
struct LawChoice {
    #[arg(long, value_enum, default_value = "quadratic")]
    law: LawArg,
    /// k_r/σ_r, for quadratic noise.
    #[arg(long, conflicts_with = "eta")]
    delta: Option<f64>,
    /// c_r/σ_r, for linear noise.
    #[arg(long)]
    eta: Option<f64>,
}

impl LawChoice {
    fn resolve(&self) -> Result<(NoiseLaw, f64)> {
        match (self.law, self.delta, self.eta) {
            (LawArg::Quadratic, Some(d), None) => Ok((NoiseLaw::Quadratic, d)),
            (LawArg::Linear, None, Some(e)) => Ok((NoiseLaw::Linear, e)),
            (LawArg::Quadratic, _, _) => Err(Error::invalid(
                "delta",
                "quadratic noise needs --delta and no --eta",
            )),
            (LawArg::Linear, _, _) => Err(Error::invalid(
                "eta",
                "linear noise needs --eta and no --delta",
            )),
        }
    }
}

#[derive(Debug, Args)]
struct AnalyticArgs {
    #[command(flatten)]
    law: LawChoice,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    /// Smallest r; defaults to r_max/n.
    #[arg(long)]
    r_min: Option<f64>,
    #[arg(long, default_value_t = 5.0)]
    r_max: f64,
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    law: LawChoice,
    #[arg(long, default_value_t = 1e-2)]
    gamma_min: f64,
    #[arg(long, default_value_t = 1e2)]
    gamma_max: f64,
    #[arg(long, default_value_t = 1e-2)]
    p_min: f64,
    #[arg(long, default_value_t = 1e2)]
    p_max: f64,
    #[arg(long, default_value_t = 40)]
    n_gamma: usize,
    #[arg(long, default_value_t = 40)]
    n_p: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long, default_value_t = 8.0)]
    delta: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
    #[arg(long, default_value_t = 0.06)]
    r_min: f64,
    #[arg(long, default_value_t = 5.0)]
    r_max: f64,
    #[arg(long, default_value_t = 0.05)]
    mu_min: f64,
    #[arg(long, default_value_t = 5.0)]
    mu_max: f64,
    #[arg(long, default_value_t = 70)]
    nr: usize,
    #[arg(long, default_value_t = 200)]
    nmu: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Cell values, columns r,mu,f.
    #[arg(long)]
    field: Option<PathBuf>,
    /// r marginal next to ρ₀ and ρ_fast, columns r,rho,rho0,rhofast.
    #[arg(long)]
    marginal: Option<PathBuf>,
    /// key,value summary.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct McArgs {
    #[arg(long, value_enum, default_value = "quadratic")]
    law: LawArg,
    #[arg(long, default_value_t = 8.0)]
    c_r: f64,
    #[arg(long, default_value_t = 8.0)]
    c_mu: f64,
    #[arg(long, default_value_t = 0.0)]
    c: f64,
    #[arg(long, default_value_t = 8.0)]
    k_r: f64,
    #[arg(long, default_value_t = 8.0)]
    k_mu: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma_r: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma_mu: f64,
    /// Time step; defaults to 1e-3/k_r.
    #[arg(long)]
    dt: Option<f64>,
    /// Horizon; defaults to 50/k_r.
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    burn_in: f64,
    #[arg(long, default_value_t = 1000)]
    paths: usize,
    #[arg(long, default_value_t = 10)]
    thin: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    bins: usize,
    #[arg(long, default_value_t = 0.0)]
    lo: f64,
    #[arg(long, default_value_t = 5.0)]
    hi: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SuiteArg {
    All,
    Poincare,
    Lyapunov,
    CvBound,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(long, value_enum, default_value = "all")]
    suite: SuiteArg,
    /// Also write the report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

const SUBCOMMANDS: [&str; 5] = ["analytic", "cv-sweep", "solve", "mc", "check"];

/// Reads `key = value` lines; `#` starts a comment.
pub fn read_config(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut pairs = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::invalid(
                "config",
                format!("{}:{}: expected `key = value`", path.display(), k + 1),
            )
        })?;
        let key = key.trim().trim_start_matches("--");
        if key.is_empty() {
            return Err(Error::invalid(
                "config",
                format!("{}:{}: empty key", path.display(), k + 1),
            ));
        }
        pairs.push((key.to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

/// Splices the config file into `args` right after the subcommand, so flags
/// given on the command line come later and win.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut path = None;
    for (k, a) in args.iter().enumerate() {
        let Some(s) = a.to_str() else { continue };
        if s == "--config" {
            path = args.get(k + 1).map(PathBuf::from);
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        }
    }
    let Some(path) = path else { return Ok(args) };
    let pairs = read_config(&path)?;
    let Some(at) = args
        .iter()
        .position(|a| a.to_str().is_some_and(|s| SUBCOMMANDS.contains(&s)))
    else {
        return Ok(args);
    };
    let injected = pairs
        .into_iter()
        .filter(|(k, _)| k != "config")
        .map(|(k, v)| OsString::from(format!("--{k}={v}")));
    let mut out: Vec<OsString> = args[..=at].to_vec();
    out.extend(injected);
    out.extend_from_slice(&args[at + 1..]);
    Ok(out)
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 1;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                1
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: cannot start worker threads: {e}");
            return 1;
        }
    };
    let (mut o, mut w) = (Vec::new(), Vec::new());
    let result = pool.install(|| execute(&cli.command, &mut o, &mut w));
    let _ = out.write_all(&o);
    let _ = err.write_all(&w);
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}

fn execute(cmd: &Command, out: &mut Vec<u8>, err: &mut Vec<u8>) -> Result<i32> {
    match cmd {
        Command::Analytic(a) => analytic(a, out, err),
        Command::CvSweep(a) => cv_sweep(a, out, err),
        Command::Solve(a) => solve(a, out, err),
        Command::Mc(a) => mc(a, out, err),
        Command::Check(a) => check(a, out),
    }
}

fn io(e: std::io::Error) -> Error {
    Error::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    }
}

fn analytic(a: &AnalyticArgs, out: &mut Vec<u8>, err: &mut Vec<u8>) -> Result<i32> {
    let (law, strength) = a.law.resolve()?;
    let dp = DimensionlessParams::with_law(law, strength, a.gamma, a.p)?;
    if a.n < 2 {
        return Err(Error::invalid("n", "need at least 2 points"));
    }
    let r_min = a.r_min.unwrap_or(a.r_max / a.n as f64);
    if !(r_min > 0.0 && a.r_max > r_min) {
        return Err(Error::invalid(
            "r_min",
            format!("need 0 < r_min < r_max, got {r_min}, {}", a.r_max),
        ));
    }
    let ln_c = ln_normalization_constant(&dp, a.tol)?;
    let h = (a.r_max - r_min) / (a.n - 1) as f64;
    let rows: Vec<Vec<f64>> = (0..a.n)
        .map(|k| {
            let r = if k == a.n - 1 {
                a.r_max
            } else {
                r_min + h * k as f64
            };
            Ok(vec![
                r,
                rho0(&dp, r)?,
                (ln_rhofast_shape(&dp, r) + ln_c).exp(),
            ])
        })
        .collect::<Result<_>>()?;
    // Trapezoid mass of ρ₀ on the table, to flag windows that cut the tail.
    let covered: f64 = rows
        .windows(2)
        .map(|w| 0.5 * (w[0][1] + w[1][1]) * (w[1][0] - w[0][0]))
        .sum();
    if covered < 0.99 {
        writeln!(
            err,
            "warning: [{r_min}, {}] holds only {:.3} of the mass of rho0; raise --r-max to see the tail",
            a.r_max, covered
        )
        .map_err(io)?;
    }
    write_numeric(&a.out, &["r", "rho0", "rhofast"], rows)?;
    writeln!(out, "wrote {} rows to {}", a.n, a.out.display()).map_err(io)?;
    Ok(0)
}

fn cv_sweep(a: &SweepArgs, out: &mut Vec<u8>, err: &mut Vec<u8>) -> Result<i32> {
    let (law, strength) = a.law.resolve()?;
    let grid = SweepGrid {
        gamma_range: (a.gamma_min, a.gamma_max),
        p_range: (a.p_min, a.p_max),
        n_gamma: a.n_gamma,
        n_p: a.n_p,
    };
    let res = sweep(law, strength, &grid, a.tol)?;
    write_numeric(
        &a.out,
        &["gamma", "p", "relative_cv"],
        res.rows().map(|(g, p, v)| vec![g, p, v]),
    )?;
    if res.missing() > 0 {
        writeln!(
            err,
            "warning: {} cells failed to converge and are written as nan",
            res.missing()
        )
        .map_err(io)?;
    }
    writeln!(
        out,
        "wrote {} rows to {}",
        a.n_gamma * a.n_p,
        a.out.display()
    )
    .map_err(io)?;
    if let (Some(lo), Some(hi)) = (res.min(), res.max()) {
        writeln!(
            out,
            "min relative CV {} at gamma={} p={}",
            format_number(lo.2),
            lo.0,
            lo.1
        )
        .map_err(io)?;
        writeln!(
            out,
            "max relative CV {} at gamma={} p={}",
            format_number(hi.2),
            hi.0,
            hi.1
        )
        .map_err(io)?;
    }
    Ok(0)
}

/// Tail mass allowed beyond the upper edges of the solver window.
const TAIL_BUDGET: f64 = 1e-8;

fn solve(a: &SolveArgs, out: &mut Vec<u8>, err: &mut Vec<u8>) -> Result<i32> {
    let dp = DimensionlessParams::quadratic(a.delta, a.gamma, a.p, a.kappa, a.nu)?;
    let grid = Grid2D::new(a.r_min, a.r_max, a.mu_min, a.mu_max, a.nr, a.nmu)?;
    let r_tail = a.r_max.powf(-a.delta);
    if r_tail > TAIL_BUDGET {
        writeln!(
            err,
            "warning: r_max^-delta = {r_tail:.3e} exceeds {TAIL_BUDGET:e}; the r tail is truncated"
        )
        .map_err(io)?;
    }
    let mu_tail = a.mu_max.powf(-a.delta * a.kappa / a.nu);
    if mu_tail > TAIL_BUDGET {
        writeln!(err, "warning: mu_max^-(delta kappa/nu) = {mu_tail:.3e} exceeds {TAIL_BUDGET:e}; the mu tail is truncated").map_err(io)?;
    }
    let field = solve_steady(&dp, &grid)?;
    let cmp = compare_marginal(&dp, &field, a.tol)?;

    if let Some(path) = &a.field {
        write_numeric(
            path,
            &["r", "mu", "f"],
            field.cells().map(|(r, mu, f)| vec![r, mu, f]),
        )?;
    }
    if let Some(path) = &a.marginal {
        let rows = (0..cmp.rho.len()).map(|i| {
            vec![
                cmp.rho.grid()[i],
                cmp.rho.values()[i],
                cmp.rho0.values()[i],
                cmp.rhofast.values()[i],
            ]
        });
        write_numeric(path, &["r", "rho", "rho0", "rhofast"], rows)?;
    }
    let pairs = [
        ("delta", a.delta),
        ("gamma", a.gamma),
        ("p", a.p),
        ("kappa", a.kappa),
        ("nu", a.nu),
        ("nr", a.nr as f64),
        ("nmu", a.nmu as f64),
        ("mass", field.mass()),
        ("min_f", field.min()),
        ("cv_solver", cmp.cv_solver),
        ("cv_rho0", cmp.cv_rho0),
        ("cv_rho0_window", cmp.cv_rho0_window),
        ("cv_rhofast", cmp.cv_rhofast),
        ("relative_cv", cmp.relative_cv()),
        ("relative_cv_fast", cmp.cv_rhofast / cmp.cv_rho0),
        ("l1_rho0", cmp.l1_rho0),
        ("l1_rhofast", cmp.l1_rhofast),
    ];
    if let Some(path) = &a.summary {
        write_summary(path, &pairs)?;
    }
    for (k, v) in pairs {
        writeln!(out, "{k} = {}", format_number(v)).map_err(io)?;
    }
    Ok(0)
}

fn mc(a: &McArgs, out: &mut Vec<u8>, err: &mut Vec<u8>) -> Result<i32> {
    let params = ModelParams::new(a.c_r, a.c_mu, a.c, a.k_r, a.k_mu, a.sigma_r, a.sigma_mu)?;
    let law = NoiseLaw::from(a.law);
    let base = SimConfig::new(params, law);
    let config = SimConfig {
        dt: a.dt.unwrap_or(base.dt),
        t_end: a.t_end.unwrap_or(base.t_end),
        burn_in: a.burn_in,
        n_paths: a.paths,
        thin: a.thin,
        seed: a.seed,
        ..base
    };
    let ens = simulate(&config)?;
    let hist = Histogram1D::from_samples(ens.r_samples(), a.bins, (a.lo, a.hi))?;
    write_rows(
        &a.out,
        &["bin_lo", "bin_hi", "mass"],
        hist.bins().map(|(l, h, m)| [l, h, m].map(format_number)),
    )?;
    writeln!(out, "samples = {}", ens.sample_count()).map_err(io)?;
    writeln!(out, "out_of_range = {}", format_number(hist.out_of_range())).map_err(io)?;
    let (mean, se) = ens.sample_mean_r();
    writeln!(
        out,
        "mean_r = {} +- {}",
        format_number(mean),
        format_number(se)
    )
    .map_err(io)?;
    match unbound_density(&params, law) {
        Some(f) => writeln!(
            out,
            "tv_unbound = {}",
            format_number(compare_to_density(&hist, &f))
        )
        .map_err(io)?,
        None => writeln!(
            err,
            "note: c > 0, no closed-form density to compare against"
        )
        .map_err(io)?,
    }
    Ok(0)
}

fn check(a: &CheckArgs, out: &mut Vec<u8>) -> Result<i32> {
    let suite = match a.suite {
        SuiteArg::All => Suite::All,
        SuiteArg::Poincare => Suite::Poincare,
        SuiteArg::Lyapunov => Suite::Lyapunov,
        SuiteArg::CvBound => Suite::CvBound,
    };
    let report = run_suite(suite);
    let text = report.to_string();
    out.extend_from_slice(text.as_bytes());
    if let Some(path) = &a.out {
        write_text(path, &text)?;
    }
    Ok(if report.passed() { 0 } else { 2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run(
            std::iter::once("fprna").chain(args.iter().copied()),
            &mut o,
            &mut e,
        );
        (
            code,
            String::from_utf8(o).unwrap(),
            String::from_utf8(e).unwrap(),
        )
    }

    #[test]
    fn usage_errors_exit_one() {
        let (code, _, err) = run_capture(&["analytic", "--bogus"]);
        assert_eq!(code, 1);
        assert!(err.contains("--bogus"));
        assert_eq!(run_capture(&[]).0, 1);
        let (code, _, err) =
            run_capture(&["analytic", "--delta", "8", "--eta", "1", "--out", "x.csv"]);
        assert_eq!(code, 1, "{err}");
        let (code, _, err) = run_capture(&[
            "analytic", "--law", "linear", "--delta", "8", "--out", "x.csv",
        ]);
        assert_eq!(code, 1);
        assert!(err.contains("--eta"), "{err}");
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run_capture(&["--help"]);
        assert_eq!(code, 0);
        for sub in SUBCOMMANDS {
            assert!(out.contains(sub), "{sub}");
        }
    }

    #[test]
    fn config_file_supplies_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        let out = dir.path().join("a.csv");
        std::fs::write(
            &cfg,
            format!(
                "# defaults\ndelta = 8\nn = 7  # rows\nout = {}\n",
                out.display()
            ),
        )
        .unwrap();
        let (code, _, err) =
            run_capture(&["analytic", "--config", cfg.to_str().unwrap(), "--n", "9"]);
        assert_eq!(code, 0, "{err}");
        let text = std::fs::read_to_string(&out).unwrap();
        assert_eq!(text.lines().count(), 10);

        let pairs = read_config(&cfg).unwrap();
        assert_eq!(pairs[1], ("n".to_string(), "7".to_string()));
        std::fs::write(&cfg, "delta 8\n").unwrap();
        assert_eq!(
            run_capture(&["analytic", "--config", cfg.to_str().unwrap()]).0,
            1
        );
    }

    #[test]
    fn numerical_failure_exits_two() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("h.csv");
        let (code, _, err) = run_capture(&[
            "mc",
            "--k-r",
            "50",
            "--dt",
            "1",
            "--t-end",
            "1000",
            "--paths",
            "2",
            "--law",
            "linear",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 2, "{err}");
        assert!(!out.exists());
    }
}
