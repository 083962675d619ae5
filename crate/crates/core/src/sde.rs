//! Monte-Carlo integration of the coupled SDE system.
//!
//! Quadratic noise is stepped in log coordinates, so paths stay positive
//! without clamping. Linear noise is stepped explicitly and reflected at a
//! small floor. Each path owns a ChaCha8 stream selected by its index, so
//! results do not depend on how rayon schedules the work.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::distributions::{Density1D, GammaParams};
use crate::error::{Error, Result};
use crate::params::{ModelParams, NoiseLaw};

/// Reflection floor for linear-noise paths.
pub const REFLECTION_FLOOR: f64 = 1e-12;

/// Settings for an ensemble of independent paths.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub params: ModelParams,
    pub law: NoiseLaw,
    pub dt: f64,
    pub t_end: f64,
    /// Fraction of the horizon discarded before sampling.
    pub burn_in: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub r0: f64,
    pub mu0: f64,
    /// Keep every `thin`-th post-burn-in step.
    pub thin: usize,
    /// Multiplies both noise intensities. Zero gives the deterministic
    /// rate equations, which `ModelParams` cannot express directly.
    pub noise_scale: f64,
}

impl SimConfig {
    /// Defaults scaled by the relaxation time `1/k_r`, started at the
    /// unbound steady state.
    pub fn new(params: ModelParams, law: NoiseLaw) -> Self {
        let tau = 1.0 / params.k_r();
        let (r0, mu0) = params.characteristic_values();
        Self {
            params,
            law,
            dt: 1e-3 * tau,
            t_end: 50.0 * tau,
            burn_in: 0.5,
            n_paths: 1000,
            seed: 42,
            r0,
            mu0,
            thin: 10,
            noise_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, name: &'static str, reason: String| {
            if ok {
                Ok(())
            } else {
                Err(Error::invalid(name, reason))
            }
        };
        check(
            self.dt.is_finite() && self.dt > 0.0,
            "dt",
            format!("must be > 0, got {}", self.dt),
        )?;
        check(
            self.t_end.is_finite() && self.t_end > self.dt,
            "t_end",
            format!("must exceed dt = {}, got {}", self.dt, self.t_end),
        )?;
        check(
            (0.0..1.0).contains(&self.burn_in),
            "burn_in",
            format!("must lie in [0, 1), got {}", self.burn_in),
        )?;
        check(self.n_paths >= 1, "n_paths", "must be at least 1".into())?;
        check(self.thin >= 1, "thin", "must be at least 1".into())?;
        check(
            self.r0.is_finite() && self.r0 > 0.0,
            "r0",
            format!("must be > 0, got {}", self.r0),
        )?;
        check(
            self.mu0.is_finite() && self.mu0 > 0.0,
            "mu0",
            format!("must be > 0, got {}", self.mu0),
        )?;
        check(
            self.noise_scale.is_finite() && self.noise_scale >= 0.0,
            "noise_scale",
            format!("must be >= 0, got {}", self.noise_scale),
        )
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).ceil() as usize
    }

    /// Index of the first step eligible for sampling.
    fn first_sample(&self) -> usize {
        (self.burn_in * self.n_steps() as f64).ceil() as usize
    }
}

/// One simulated path.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    /// `(r, µ)` at `t_end`.
    pub terminal: (f64, f64),
    /// Thinned post-burn-in samples of r.
    pub r: Vec<f64>,
    pub mu: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub paths: Vec<Path>,
}

impl Ensemble {
    pub fn r_samples(&self) -> impl Iterator<Item = f64> + '_ {
        self.paths.iter().flat_map(|p| p.r.iter().copied())
    }

    pub fn mu_samples(&self) -> impl Iterator<Item = f64> + '_ {
        self.paths.iter().flat_map(|p| p.mu.iter().copied())
    }

    pub fn sample_count(&self) -> usize {
        self.paths.iter().map(|p| p.r.len()).sum()
    }

    /// Mean of the terminal r over paths with its standard error.
    pub fn terminal_mean_r(&self) -> (f64, f64) {
        mean_and_se(self.paths.iter().map(|p| p.terminal.0))
    }

    /// Mean of r over all retained samples, with a standard error built
    /// from per-path time averages (which are independent).
    pub fn sample_mean_r(&self) -> (f64, f64) {
        mean_and_se(
            self.paths
                .iter()
                .filter(|p| !p.r.is_empty())
                .map(|p| p.r.iter().sum::<f64>() / p.r.len() as f64),
        )
    }
}

fn mean_and_se(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    let xs: Vec<f64> = xs.collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs every path of the ensemble.
pub fn simulate(config: &SimConfig) -> Result<Ensemble> {
    config.validate()?;
    let paths = (0..config.n_paths)
        .into_par_iter()
        .map(|i| simulate_path(config, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(Ensemble { paths })
}

fn simulate_path(cfg: &SimConfig, index: usize) -> Result<Path> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);

    let m = &cfg.params;
    let (sr, smu) = (
        cfg.noise_scale * m.sigma_r(),
        cfg.noise_scale * m.sigma_mu(),
    );
    let (c, c_r, c_mu, k_r, k_mu) = (m.c(), m.c_r(), m.c_mu(), m.k_r(), m.k_mu());
    let dt = cfg.dt;
    let sqdt = dt.sqrt();
    let (n_steps, first) = (cfg.n_steps(), cfg.first_sample());
    let keep = n_steps.saturating_sub(first).div_ceil(cfg.thin);
    let (mut rs, mut mus) = (Vec::with_capacity(keep), Vec::with_capacity(keep));

    let (mut r, mut mu) = (cfg.r0, cfg.mu0);
    let (mut x, mut y) = (r.ln(), mu.ln());
    let (amp_r, amp_mu) = ((2.0 * sr).sqrt() * sqdt, (2.0 * smu).sqrt() * sqdt);

    for step in 1..=n_steps {
        let z1: f64 = StandardNormal.sample(&mut rng);
        let z2: f64 = StandardNormal.sample(&mut rng);
        let bind = c * r * mu;
        match cfg.law {
            NoiseLaw::Quadratic => {
                x += ((c_r - bind - k_r * r) / r - sr) * dt + amp_r * z1;
                y += ((c_mu - bind - k_mu * mu) / mu - smu) * dt + amp_mu * z2;
                r = x.exp();
                mu = y.exp();
            }
            NoiseLaw::Linear => {
                let r_new = r + (c_r - bind - k_r * r) * dt + amp_r * r.sqrt() * z1;
                let mu_new = mu + (c_mu - bind - k_mu * mu) * dt + amp_mu * mu.sqrt() * z2;
                r = r_new.abs().max(REFLECTION_FLOOR);
                mu = mu_new.abs().max(REFLECTION_FLOOR);
            }
        }
        if !(r.is_finite() && mu.is_finite() && r > 0.0 && mu > 0.0) {
            return Err(Error::BlowUp {
                path: index,
                time: step as f64 * dt,
            });
        }
        if step >= first && (step - first) % cfg.thin == 0 {
            rs.push(r);
            mus.push(mu);
        }
    }
    Ok(Path {
        terminal: (r, mu),
        r: rs,
        mu: mus,
    })
}

/// Stationary density of r, in molecules, when `c = 0`: inverse-gamma
/// `(1 + k_r/σ_r, c_r/σ_r)` under quadratic noise and gamma
/// `(c_r/σ_r, k_r/σ_r)` under linear noise. `None` when binding is on.
pub fn unbound_density(
    params: &ModelParams,
    law: NoiseLaw,
) -> Option<impl Fn(f64) -> f64 + Send + Sync> {
    if params.c() > 0.0 {
        return None;
    }
    let (c_r, k_r, s) = (params.c_r(), params.k_r(), params.sigma_r());
    let g = match law {
        NoiseLaw::Quadratic => GammaParams::new(1.0 + k_r / s, c_r / s),
        NoiseLaw::Linear => GammaParams::new(c_r / s, k_r / s),
    }
    .ok()?;
    Some(move |r: f64| {
        if r <= 0.0 {
            0.0
        } else {
            match law {
                NoiseLaw::Quadratic => g.ln_invgamma_pdf(r).exp(),
                NoiseLaw::Linear => g.ln_gamma_pdf(r).exp(),
            }
        }
    })
}

/// Equal-width histogram; mass outside the edges is kept separately.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram1D {
    edges: Vec<f64>,
    masses: Vec<f64>,
    outside: f64,
}

impl Histogram1D {
    pub fn new(edges: Vec<f64>, masses: Vec<f64>, outside: f64) -> Result<Self> {
        if edges.len() < 3 || masses.len() + 1 != edges.len() {
            return Err(Error::invalid(
                "edges",
                "need at least two bins and one mass per bin",
            ));
        }
        if edges.windows(2).any(|w| !(w[1] > w[0])) || edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::invalid(
                "edges",
                "must be finite and strictly increasing",
            ));
        }
        if masses
            .iter()
            .chain([&outside])
            .any(|m| !(m.is_finite() && *m >= 0.0))
        {
            return Err(Error::invalid("masses", "must be finite and nonnegative"));
        }
        if masses.iter().sum::<f64>() > 1.0 + 1e-12 {
            return Err(Error::invalid("masses", "sum exceeds one"));
        }
        Ok(Self {
            edges,
            masses,
            outside,
        })
    }

    /// Bins `samples` into `bins` equal bins on `[lo, hi]`.
    pub fn from_samples(
        samples: impl IntoIterator<Item = f64>,
        bins: usize,
        (lo, hi): (f64, f64),
    ) -> Result<Self> {
        if bins < 2 {
            return Err(Error::invalid(
                "bins",
                format!("need at least 2, got {bins}"),
            ));
        }
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::invalid(
                "range",
                format!("need lo < hi, got [{lo}, {hi}]"),
            ));
        }
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0u64; bins];
        let (mut total, mut out) = (0u64, 0u64);
        for s in samples {
            total += 1;
            if (lo..=hi).contains(&s) {
                counts[(((s - lo) / width) as usize).min(bins - 1)] += 1;
            } else {
                out += 1;
            }
        }
        if total == 0 {
            return Err(Error::EmptySample);
        }
        let n = total as f64;
        let edges = (0..=bins)
            .map(|k| if k == bins { hi } else { lo + width * k as f64 })
            .collect();
        Ok(Self {
            edges,
            masses: counts.iter().map(|&k| k as f64 / n).collect(),
            outside: out as f64 / n,
        })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn out_of_range(&self) -> f64 {
        self.outside
    }

    pub fn bins(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.edges
            .windows(2)
            .zip(&self.masses)
            .map(|(e, &m)| (e[0], e[1], m))
    }
}

/// Simulates and histograms the retained r samples.
pub fn stationary_histogram(
    config: &SimConfig,
    bins: usize,
    range: (f64, f64),
) -> Result<Histogram1D> {
    Histogram1D::from_samples(simulate(config)?.r_samples(), bins, range)
}

/// Sub-intervals per bin for the midpoint rule.
const MIDPOINTS: usize = 64;

/// Something that can report its mass inside each histogram bin.
pub trait BinnedMass {
    fn bin_masses(&self, edges: &[f64]) -> Vec<f64>;
}

fn midpoint_masses(edges: &[f64], f: impl Fn(f64) -> f64) -> Vec<f64> {
    edges
        .windows(2)
        .map(|e| {
            let h = (e[1] - e[0]) / MIDPOINTS as f64;
            (0..MIDPOINTS)
                .map(|k| f(e[0] + (k as f64 + 0.5) * h))
                .sum::<f64>()
                * h
        })
        .collect()
}

impl<F: Fn(f64) -> f64> BinnedMass for F {
    fn bin_masses(&self, edges: &[f64]) -> Vec<f64> {
        midpoint_masses(edges, self)
    }
}

/// Piecewise-linear in the sampled values, zero outside the grid.
impl BinnedMass for Density1D {
    fn bin_masses(&self, edges: &[f64]) -> Vec<f64> {
        let (x, v) = (self.grid(), self.values());
        midpoint_masses(edges, |t| {
            if x.is_empty() || t < x[0] || t > x[x.len() - 1] {
                return 0.0;
            }
            let k = x.partition_point(|&g| g <= t).clamp(1, x.len().max(2) - 1);
            if x.len() == 1 {
                return v[0];
            }
            let w = (t - x[k - 1]) / (x[k] - x[k - 1]);
            v[k - 1] + w * (v[k] - v[k - 1])
        })
    }
}

/// Total-variation distance `½ Σ |hist − density|` over the bins.
pub fn compare_to_density(hist: &Histogram1D, density: &impl BinnedMass) -> f64 {
    let binned = density.bin_masses(hist.edges());
    0.5 * hist
        .masses()
        .iter()
        .zip(&binned)
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{gamma_pdf, invgamma_pdf, GammaParams};

    fn free(c_r: f64, k_r: f64, sigma_r: f64) -> ModelParams {
        ModelParams::new(c_r, 3.0, 0.0, k_r, 2.0, sigma_r, 1.0).unwrap()
    }

    fn short(params: ModelParams, law: NoiseLaw, n_paths: usize) -> SimConfig {
        SimConfig {
            n_paths,
            ..SimConfig::new(params, law)
        }
    }

    #[test]
    fn deterministic_limit_reaches_fixed_point() {
        let params = ModelParams::new(6.0, 3.0, 0.0, 2.0, 1.5, 1.0, 1.0).unwrap();
        for law in [NoiseLaw::Quadratic, NoiseLaw::Linear] {
            let cfg = SimConfig {
                noise_scale: 0.0,
                n_paths: 1,
                r0: 0.2,
                mu0: 9.0,
                t_end: 20.0,
                ..SimConfig::new(params, law)
            };
            let (r, mu) = simulate(&cfg).unwrap().paths[0].terminal;
            assert!((r - 3.0).abs() < 1e-6, "{law}: {r}");
            assert!((mu - 2.0).abs() < 1e-6, "{law}: {mu}");
        }
    }

    #[test]
    fn terminal_mean_is_the_unbound_steady_state() {
        let cfg = short(free(8.0, 8.0, 1.0), NoiseLaw::Quadratic, 2000);
        let (mean, se) = simulate(&cfg).unwrap().terminal_mean_r();
        assert!((mean - 1.0).abs() < 4.0 * se, "{mean} ± {se}");
    }

    #[test]
    fn same_seed_same_output() {
        let cfg = SimConfig {
            t_end: 2.0,
            n_paths: 16,
            ..SimConfig::new(free(8.0, 8.0, 1.0), NoiseLaw::Linear)
        };
        let a = simulate(&cfg).unwrap();
        assert_eq!(a, simulate(&cfg).unwrap());
        let b = simulate(&SimConfig {
            seed: 7,
            ..cfg.clone()
        })
        .unwrap();
        assert_ne!(a, b);
        // Streams are tied to the path index, not to the schedule.
        let one = simulate(&SimConfig { n_paths: 3, ..cfg }).unwrap();
        assert_eq!(one.paths[..], a.paths[..3]);
    }

    #[test]
    fn quadratic_matches_inverse_gamma() {
        let cfg = short(free(8.0, 8.0, 1.0), NoiseLaw::Quadratic, 200);
        let ens = simulate(&cfg).unwrap();
        assert!(ens.sample_count() >= 100_000);
        assert!(ens.r_samples().all(|r| r > 0.0));
        let hist = Histogram1D::from_samples(ens.r_samples(), 50, (0.0, 5.0)).unwrap();
        let law = GammaParams::new(9.0, 8.0).unwrap();
        let tv = compare_to_density(&hist, &|y: f64| invgamma_pdf(law, y).unwrap_or(0.0));
        assert!(tv < 0.05, "{tv}");
    }

    #[test]
    fn linear_matches_gamma() {
        let cfg = short(free(8.0, 8.0, 2.0), NoiseLaw::Linear, 200);
        let hist = stationary_histogram(&cfg, 50, (0.0, 5.0)).unwrap();
        let law = GammaParams::new(4.0, 4.0).unwrap();
        let tv = compare_to_density(&hist, &|x: f64| gamma_pdf(law, x).unwrap_or(0.0));
        assert!(tv < 0.05, "{tv}");
    }

    #[test]
    fn mean_does_not_depend_on_noise_law() {
        let quad = simulate(&short(free(8.0, 8.0, 1.0), NoiseLaw::Quadratic, 300)).unwrap();
        let lin = simulate(&short(free(8.0, 8.0, 2.0), NoiseLaw::Linear, 300)).unwrap();
        let ((a, sa), (b, sb)) = (quad.sample_mean_r(), lin.sample_mean_r());
        assert!(
            (a - b).abs() < 3.0 * sa.hypot(sb),
            "{a} ± {sa} vs {b} ± {sb}"
        );
    }

    #[test]
    fn unbound_density_laws() {
        let q = unbound_density(&free(8.0, 8.0, 1.0), NoiseLaw::Quadratic).unwrap();
        let l = unbound_density(&free(8.0, 8.0, 2.0), NoiseLaw::Linear).unwrap();
        let (ig, g) = (
            GammaParams::new(9.0, 8.0).unwrap(),
            GammaParams::new(4.0, 4.0).unwrap(),
        );
        for r in [0.3, 1.0, 2.7] {
            assert!((q(r) - invgamma_pdf(ig, r).unwrap()).abs() < 1e-14);
            assert!((l(r) - gamma_pdf(g, r).unwrap()).abs() < 1e-14);
        }
        let bound = ModelParams::new(8.0, 3.0, 0.1, 8.0, 2.0, 1.0, 1.0).unwrap();
        assert!(unbound_density(&bound, NoiseLaw::Quadratic).is_none());
    }

    #[test]
    fn range_without_samples() {
        let h = Histogram1D::from_samples([1.0, 2.0, 3.0], 4, (10.0, 20.0)).unwrap();
        assert!(h.masses().iter().all(|&m| m == 0.0));
        assert_eq!(h.out_of_range(), 1.0);
        assert!(matches!(
            Histogram1D::from_samples(std::iter::empty(), 4, (0.0, 1.0)),
            Err(Error::EmptySample)
        ));
        assert!(Histogram1D::from_samples([1.0], 1, (0.0, 1.0)).is_err());
    }

    #[test]
    fn tv_distance_examples() {
        let edges: Vec<f64> = (0..=4).map(f64::from).collect();
        let h = Histogram1D::new(edges.clone(), vec![0.25; 4], 0.0).unwrap();
        assert!(compare_to_density(&h, &|_: f64| 0.25) < 1e-15);
        let left = Histogram1D::new(edges.clone(), vec![0.5, 0.5, 0.0, 0.0], 0.0).unwrap();
        let right = |x: f64| if x >= 2.0 { 0.5 } else { 0.0 };
        assert!((compare_to_density(&left, &right) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exact_bin_masses_give_zero_distance() {
        let law = GammaParams::new(9.0, 8.0).unwrap();
        let f = |y: f64| invgamma_pdf(law, y).unwrap_or(0.0);
        let edges: Vec<f64> = (0..=50).map(|k| 0.1 * k as f64).collect();
        let masses = f.bin_masses(&edges);
        let h = Histogram1D::new(edges, masses, 0.0).unwrap();
        assert_eq!(compare_to_density(&h, &f), 0.0);
    }

    #[test]
    fn sampled_density_bins_like_the_function() {
        let law = GammaParams::new(4.0, 4.0).unwrap();
        let f = |x: f64| gamma_pdf(law, x).unwrap_or(0.0);
        let grid: Vec<f64> = (0..=2000).map(|k| k as f64 * 0.0025).collect();
        let d = Density1D::sample(grid, f).unwrap();
        let edges: Vec<f64> = (0..=10).map(|k| 0.5 * k as f64).collect();
        let masses = f.bin_masses(&edges);
        let h = Histogram1D::new(edges, masses, 0.0).unwrap();
        assert!(compare_to_density(&h, &d) < 1e-5);
    }

    #[test]
    fn invalid_configs() {
        let base = SimConfig::new(free(1.0, 1.0, 1.0), NoiseLaw::Quadratic);
        for bad in [
            SimConfig {
                dt: 0.0,
                ..base.clone()
            },
            SimConfig {
                t_end: base.dt,
                ..base.clone()
            },
            SimConfig {
                burn_in: 1.0,
                ..base.clone()
            },
            SimConfig {
                n_paths: 0,
                ..base.clone()
            },
            SimConfig {
                r0: 0.0,
                ..base.clone()
            },
            SimConfig {
                thin: 0,
                ..base.clone()
            },
        ] {
            assert!(simulate(&bad).is_err());
        }
    }

    #[test]
    fn blow_up_names_the_path() {
        let cfg = SimConfig {
            dt: 1.0,
            t_end: 1000.0,
            n_paths: 4,
            ..SimConfig::new(
                ModelParams::new(1.0, 1.0, 0.0, 50.0, 1.0, 1.0, 1.0).unwrap(),
                NoiseLaw::Linear,
            )
        };
        // Explicit stepping with k_r dt = 50 oscillates with growing amplitude.
        assert!(matches!(simulate(&cfg), Err(Error::BlowUp { .. })));
    }
}
