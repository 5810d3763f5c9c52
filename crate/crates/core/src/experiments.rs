//! Monte Carlo drivers for the scaling exponents.
//!
//! Every driver draws replica `i` from the stream `(master_seed, tag, i)`
//! (see [`crate::rng`]) and aggregates in replica order, so results do not
//! depend on the number of worker threads.

use std::f64::consts::{SQRT_2, TAU};
use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use crate::chaos::{build_measure, ChaosMeasure, ChaosMode};
use crate::clark::{log_abs_from_parts, DiscPoint, InnerFunctionEval};
use crate::error::{Error, Result};
use crate::field::{CanonicalSampler, ExactScalingSampler, GridSpec};
use crate::rng::{self, replica_rng};
use crate::stats::{fit_slope, jackknife_mean, jackknife_se, leave_one_out_means, median, SlopeFit};
use crate::zeros::{beta_sum_within, locate_zeros, DEFAULT_BUDGET};

/// Parameters shared by all experiments. Fields an experiment does not use
/// are ignored by it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub gamma: f64,
    /// Truncation levels; single-truncation experiments use the largest.
    pub n_schedule: Vec<usize>,
    /// Circle grid size.
    pub m: usize,
    pub replicas: usize,
    pub master_seed: u64,
    /// Radii `r` in the disc, or scales `ε`, depending on the experiment.
    pub radii: Vec<f64>,
    pub p: f64,
    pub beta_list: Vec<f64>,
    pub s_list: Vec<f64>,
    pub delta: f64,
    pub workers: usize,
    /// Equispaced angles averaged per replica in the disc experiments.
    pub angles: usize,
    /// Grid size of the exact-scaling field in the mass-scaling experiment.
    pub exact_grid: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            gamma: 1.0,
            n_schedule: vec![1024],
            m: 4096,
            replicas: 200,
            master_seed: 20_241_018,
            radii: dyadic_radii(3..=7),
            p: 0.5,
            beta_list: vec![0.8, 0.95, 1.0],
            s_list: vec![0.0, 1.1, 1.4],
            delta: 0.1,
            workers: 1,
            angles: 16,
            exact_grid: 1024,
        }
    }
}

/// `1 - 2^{-k}` for each `k`.
pub fn dyadic_radii(ks: impl IntoIterator<Item = i32>) -> Vec<f64> {
    ks.into_iter().map(|k| 1.0 - 2f64.powi(-k)).collect()
}

/// `2^{-k}` for each `k`.
pub fn dyadic_scales(ks: impl IntoIterator<Item = i32>) -> Vec<f64> {
    ks.into_iter().map(|k| 2f64.powi(-k)).collect()
}

/// The available experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    XMoment,
    LogPhi,
    ZeroDensity,
    Seiberg,
    Multifractal,
    MassScaling,
    ImagBound,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::XMoment,
        ExperimentKind::LogPhi,
        ExperimentKind::ZeroDensity,
        ExperimentKind::Seiberg,
        ExperimentKind::Multifractal,
        ExperimentKind::MassScaling,
        ExperimentKind::ImagBound,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::XMoment => "x-moment",
            ExperimentKind::LogPhi => "log-phi",
            ExperimentKind::ZeroDensity => "zero-density",
            ExperimentKind::Seiberg => "seiberg",
            ExperimentKind::Multifractal => "multifractal",
            ExperimentKind::MassScaling => "mass-scaling",
            ExperimentKind::ImagBound => "imag-bound",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Desk-scale defaults (a few seconds to a few minutes on one core).
    pub fn default_config(self) -> ExperimentConfig {
        let base = ExperimentConfig::default();
        match self {
            ExperimentKind::XMoment | ExperimentKind::LogPhi => {
                ExperimentConfig { n_schedule: vec![1024], m: 4096, replicas: 400, radii: dyadic_radii(3..=7), ..base }
            }
            ExperimentKind::ZeroDensity => ExperimentConfig {
                n_schedule: vec![1024],
                m: 4096,
                replicas: 40,
                radii: dyadic_radii(4..=7),
                beta_list: vec![0.8, 0.95, 1.0],
                ..base
            },
            ExperimentKind::Seiberg => ExperimentConfig {
                n_schedule: vec![256, 512, 1024, 2048, 4096],
                m: 16384,
                replicas: 200,
                s_list: vec![0.0, 1.1, 1.4],
                ..base
            },
            ExperimentKind::Multifractal => {
                ExperimentConfig { n_schedule: vec![2048], m: 8192, replicas: 100, radii: dyadic_scales(4..=9), ..base }
            }
            ExperimentKind::MassScaling => ExperimentConfig {
                n_schedule: vec![1024],
                m: 4096,
                replicas: 400,
                radii: dyadic_scales(3..=7),
                s_list: vec![0.0, 1.0],
                exact_grid: 1024,
                ..base
            },
            ExperimentKind::ImagBound => ExperimentConfig {
                n_schedule: vec![8192],
                m: 32768,
                replicas: 200,
                radii: vec![0.9, 0.99, 0.999],
                ..base
            },
        }
    }
}

/// One line of an experiment table.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    /// Named coordinates of the parameter point, in column order.
    pub parameters: Vec<(String, f64)>,
    pub estimate: f64,
    pub se: f64,
    pub replicas: usize,
    pub seed: u64,
    /// Seconds spent on the whole experiment.
    pub wall_time: f64,
}

impl Serialize for ResultRow {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.parameters.len() + 6))?;
        map.serialize_entry("experiment", &self.experiment)?;
        for (k, v) in &self.parameters {
            map.serialize_entry(k, v)?;
        }
        map.serialize_entry("estimate", &self.estimate)?;
        map.serialize_entry("se", &self.se)?;
        map.serialize_entry("replicas", &self.replicas)?;
        map.serialize_entry("seed", &self.seed)?;
        map.serialize_entry("wall_time", &self.wall_time)?;
        map.end()
    }
}

/// Rows plus named summary statistics (fitted slopes, ratios, verdicts as 0/1).
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub experiment: String,
    pub rows: Vec<ResultRow>,
    pub summary: Vec<(String, f64)>,
}

impl ExperimentReport {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.summary.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    /// Row estimate at the parameter point matching every given coordinate.
    pub fn estimate_at(&self, point: &[(&str, f64)]) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| {
                point.iter().all(|(k, v)| {
                    r.parameters.iter().any(|(rk, rv)| rk == k && (rv - v).abs() <= 1e-12 * v.abs().max(1.0))
                })
            })
            .map(|r| r.estimate)
    }
}

/// Weighted least-squares slope through `(log x, log y ± se)` points.
pub fn fit_log_slope(points: &[(f64, f64, f64)]) -> Result<SlopeFit> {
    fit_slope(points)
}

/// Runs an experiment by kind.
pub fn run(kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    match kind {
        ExperimentKind::XMoment => exp_x_moment(cfg),
        ExperimentKind::LogPhi => exp_log_phi(cfg),
        ExperimentKind::ZeroDensity => exp_zero_density(cfg),
        ExperimentKind::Seiberg => exp_seiberg(cfg),
        ExperimentKind::Multifractal => exp_multifractal(cfg),
        ExperimentKind::MassScaling => exp_mass_scaling(cfg),
        ExperimentKind::ImagBound => exp_imag_bound(cfg),
    }
}

impl ExperimentConfig {
    fn max_truncation(&self) -> Result<usize> {
        self.n_schedule
            .iter()
            .copied()
            .max()
            .filter(|n| *n > 0)
            .ok_or_else(|| Error::Parameter("n_schedule must contain a positive truncation".into()))
    }

    fn mode(&self) -> ChaosMode {
        ChaosMode::for_gamma(self.gamma)
    }

    /// Checks the invariants shared by all experiments.
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= SQRT_2 + 1e-12) {
            return Err(Error::Parameter(format!("gamma = {} is outside (0, sqrt 2]", self.gamma)));
        }
        let n = self.max_truncation()?;
        GridSpec::circle(self.m)?;
        if self.m < 4 * n {
            return Err(Error::Parameter(format!(
                "grid size {} must be at least 4 times the largest truncation {n}",
                self.m
            )));
        }
        if self.replicas < 2 {
            return Err(Error::Parameter("at least 2 replicas are required".into()));
        }
        if self.workers == 0 {
            return Err(Error::Parameter("workers must be at least 1".into()));
        }
        if self.radii.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
            return Err(Error::Parameter("radii must lie in (0, 1)".into()));
        }
        if self.angles == 0 {
            return Err(Error::Parameter("angles must be at least 1".into()));
        }
        Ok(())
    }

    fn check_moment(&self) -> Result<()> {
        if self.p >= 2.0 / (self.gamma * self.gamma) {
            return Err(Error::MomentUndefined { p: self.p, gamma: self.gamma });
        }
        Ok(())
    }

    fn need_radii(&self, min: usize) -> Result<()> {
        if self.radii.len() < min {
            return Err(Error::Parameter(format!("this experiment needs at least {min} radii")));
        }
        Ok(())
    }
}

/// Evaluates `job` for every replica on a pool of `cfg.workers` threads.
fn replicate<T, F>(cfg: &ExperimentConfig, name: &str, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> Result<T> + Sync,
{
    let tag = rng::tag(name);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Parameter(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        (0..cfg.replicas).into_par_iter().map(|i| job(&mut replica_rng(cfg.master_seed, tag, i as u64))).collect()
    })
}

fn canonical_measure(sampler: &CanonicalSampler, cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<ChaosMeasure> {
    build_measure(&sampler.sample(rng), cfg.gamma, cfg.mode())
}

fn canonical_sampler(cfg: &ExperimentConfig) -> Result<CanonicalSampler> {
    CanonicalSampler::new(cfg.max_truncation()?, GridSpec::circle(cfg.m)?)
}

fn row(name: &str, cfg: &ExperimentConfig, parameters: Vec<(&str, f64)>, estimate: f64, se: f64) -> ResultRow {
    ResultRow {
        experiment: name.to_string(),
        parameters: parameters.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        estimate,
        se,
        replicas: cfg.replicas,
        seed: cfg.master_seed,
        wall_time: 0.0,
    }
}

fn finish(name: &str, mut rows: Vec<ResultRow>, summary: Vec<(String, f64)>, start: Instant) -> ExperimentReport {
    let wall = start.elapsed().as_secs_f64();
    for r in &mut rows {
        r.wall_time = wall;
    }
    ExperimentReport { experiment: name.to_string(), rows, summary }
}

// Slope of log(column mean) against the given abscissas, with a jackknife
// error over replicas. Returns (column means, column standard errors, fit).
fn slope_of_means(table: &[Vec<f64>], xs: &[f64]) -> Result<(Vec<f64>, Vec<f64>, SlopeFit)> {
    let (means, loo) = leave_one_out_means(table);
    let ses: Vec<f64> =
        (0..xs.len()).map(|k| jackknife_mean(&table.iter().map(|r| r[k]).collect::<Vec<_>>()).se).collect();
    let fit_of = |ms: &[f64]| -> Result<SlopeFit> {
        let pts: Vec<(f64, f64, f64)> = xs.iter().zip(ms).map(|(x, m)| (*x, m.ln(), 0.0)).collect();
        fit_slope(&pts)
    };
    let mut fit = fit_of(&means)?;
    let loo_slopes: Vec<f64> = loo.iter().map(|ms| fit_of(ms).map(|f| f.slope)).collect::<Result<_>>()?;
    fit.slope_se = jackknife_se(fit.slope, &loo_slopes).se;
    Ok((means, ses, fit))
}

fn angle_points(r: f64, angles: usize) -> Result<Vec<DiscPoint>> {
    (0..angles).map(|a| DiscPoint::polar(r, TAU * a as f64 / angles as f64)).collect()
}

fn disc_moment_experiment(
    cfg: &ExperimentConfig,
    name: &str,
    expected: f64,
    per_point: impl Fn(&InnerFunctionEval, DiscPoint) -> f64 + Sync,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    cfg.validate()?;
    cfg.need_radii(3)?;
    let sampler = canonical_sampler(cfg)?;
    let points: Vec<Vec<DiscPoint>> = cfg.radii.iter().map(|&r| angle_points(r, cfg.angles)).collect::<Result<_>>()?;
    let table = replicate(cfg, name, |rng| {
        let f = InnerFunctionEval::from_measure(&canonical_measure(&sampler, cfg, rng)?)?;
        Ok(points
            .iter()
            .map(|pts| pts.iter().map(|z| per_point(&f, *z)).sum::<f64>() / pts.len() as f64)
            .collect::<Vec<f64>>())
    })?;
    let xs: Vec<f64> = cfg.radii.iter().map(|r| (1.0 - r).ln()).collect();
    let (means, ses, fit) = slope_of_means(&table, &xs)?;
    let rows = cfg
        .radii
        .iter()
        .zip(means.iter().zip(&ses))
        .map(|(r, (m, s))| row(name, cfg, vec![("r", *r)], *m, *s))
        .collect();
    let summary = vec![
        ("slope".to_string(), fit.slope),
        ("slope_se".to_string(), fit.slope_se),
        ("expected".to_string(), expected),
    ];
    Ok(finish(name, rows, summary, start))
}

/// Slope of `log E[x(r)^p]` against `log(1 - r)`, where `x` is the Poisson
/// integral of the chaos; the predicted exponent is `p(1-p)γ²/2`.
pub fn exp_x_moment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.check_moment()?;
    let p = cfg.p;
    disc_moment_experiment(
        cfg,
        ExperimentKind::XMoment.name(),
        p * (1.0 - p) * cfg.gamma * cfg.gamma / 2.0,
        move |f, z| f.poisson_x(z).powf(p),
    )
}

/// Slope of `log E[log(1/|φ(r)|)]` against `log(1 - r)`; predicted `γ²/8`.
pub fn exp_log_phi(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    disc_moment_experiment(cfg, ExperimentKind::LogPhi.name(), cfg.gamma * cfg.gamma / 8.0, |f, z| {
        -log_abs_from_parts(f.parts(z))
    })
}

/// Rough standard error of a sample median from the order statistics
/// bracketing it (a 68% binomial interval).
fn median_se(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let half = 0.5 * n.sqrt();
    let lo = ((0.5 * n - half).floor().max(0.0) as usize).min(v.len() - 1);
    let hi = ((0.5 * n + half).ceil() as usize).min(v.len() - 1);
    0.5 * (v[hi] - v[lo])
}

/// Median over replicas of `S_β(r) = Σ_{|z_k| ≤ r} (1 - |z_k|)^β` for each
/// `β` and search radius `r`.
pub fn exp_zero_density(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let name = ExperimentKind::ZeroDensity.name();
    cfg.validate()?;
    cfg.need_radii(2)?;
    if cfg.beta_list.iter().any(|b| !(*b > 0.0 && *b <= 1.0)) {
        return Err(Error::Parameter("beta values must lie in (0, 1]".into()));
    }
    let sampler = canonical_sampler(cfg)?;
    let r_top = cfg.radii.iter().copied().fold(0.0, f64::max);
    let partial = std::sync::atomic::AtomicUsize::new(0);
    let table = replicate(cfg, name, |rng| {
        let f = InnerFunctionEval::from_measure(&canonical_measure(&sampler, cfg, rng)?)?;
        let zs = locate_zeros(&f, r_top, DEFAULT_BUDGET)?;
        if zs.is_partial() {
            partial.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        }
        Ok(cfg
            .beta_list
            .iter()
            .flat_map(|&b| cfg.radii.iter().map(move |&r| (b, r)))
            .map(|(b, r)| beta_sum_within(&zs, b, r))
            .collect::<Vec<f64>>())
    })?;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let nr = cfg.radii.len();
    for (bi, &beta) in cfg.beta_list.iter().enumerate() {
        let medians: Vec<f64> =
            (0..nr).map(|ri| median(&table.iter().map(|t| t[bi * nr + ri]).collect::<Vec<_>>())).collect();
        for (ri, &r) in cfg.radii.iter().enumerate() {
            let col: Vec<f64> = table.iter().map(|t| t[bi * nr + ri]).collect();
            let k = -(1.0 - r).log2();
            rows.push(row(name, cfg, vec![("beta", beta), ("r_max", r), ("k", k)], medians[ri], median_se(&col)));
        }
        let ratios: Vec<f64> = medians.windows(2).map(|w| w[1] / w[0]).collect();
        summary.push((format!("beta={beta}:max_ratio"), ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max)));
        summary.push((format!("beta={beta}:min_ratio"), ratios.iter().copied().fold(f64::INFINITY, f64::min)));
        summary.push((format!("beta={beta}:last_ratio"), *ratios.last().unwrap_or(&f64::NAN)));
    }
    summary.push(("critical_beta".to_string(), 1.0 - cfg.gamma * cfg.gamma / 8.0));
    summary.push(("partial_replicas".to_string(), partial.into_inner() as f64));
    Ok(finish(name, rows, summary, start))
}

/// `E[(∫ max(|1 - e^{iθ}|, 1/N)^{-s} dμ_N)^p]` across the truncation
/// schedule, from nested truncations of the same random series.
pub fn exp_seiberg(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let name = ExperimentKind::Seiberg.name();
    cfg.validate()?;
    cfg.check_moment()?;
    let mut schedule = cfg.n_schedule.clone();
    schedule.sort_unstable();
    schedule.dedup();
    if schedule.len() < 2 {
        return Err(Error::Parameter("the truncation schedule needs at least two levels".into()));
    }
    let sampler = canonical_sampler(cfg)?;
    let grid = sampler.grid();
    let chord: Vec<f64> = (0..grid.size()).map(|j| 2.0 * (0.5 * grid.point(j)).sin().abs()).collect();
    let table = replicate(cfg, name, |rng| {
        let modes = sampler.draw_modes(rng);
        let mut out = Vec::with_capacity(schedule.len() * cfg.s_list.len());
        for &s in &cfg.s_list {
            for &n in &schedule {
                let mu = build_measure(&sampler.synthesize(&modes[..n])?, cfg.gamma, cfg.mode())?;
                let floor = 1.0 / n as f64;
                let integral: f64 = mu.weights().iter().zip(&chord).map(|(w, d)| w * d.max(floor).powf(-s)).sum();
                out.push(integral.powf(cfg.p));
            }
        }
        Ok(out)
    })?;
    let (means, _) = leave_one_out_means(&table);
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let ns = schedule.len();
    for (si, &s) in cfg.s_list.iter().enumerate() {
        let est = &means[si * ns..(si + 1) * ns];
        for (ni, &n) in schedule.iter().enumerate() {
            let col: Vec<f64> = table.iter().map(|t| t[si * ns + ni]).collect();
            rows.push(row(name, cfg, vec![("s", s), ("n", n as f64)], est[ni], jackknife_mean(&col).se));
        }
        let ratios: Vec<f64> = est.windows(2).map(|w| w[1] / w[0]).collect();
        let last_change = (ratios[ratios.len() - 1] - 1.0).abs();
        let min_growth = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        summary.push((format!("s={s}:last_change"), last_change));
        summary.push((format!("s={s}:min_growth"), min_growth));
        summary.push((format!("s={s}:stabilizes"), f64::from(u8::from(last_change < 0.10))));
        summary.push((format!("s={s}:grows"), f64::from(u8::from(min_growth >= 1.25))));
    }
    summary.push(("threshold".to_string(), 1.0 + cfg.gamma * cfg.gamma * (1.0 - cfg.p) / 2.0));
    Ok(finish(name, rows, summary, start))
}

/// Number of points `θ_i = iε` whose chaos average lies in
/// `(ε^δ, ε^{-δ})`, and the slope of its logarithm against `log(1/ε)`.
pub fn exp_multifractal(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let name = ExperimentKind::Multifractal.name();
    cfg.validate()?;
    cfg.need_radii(3)?;
    if !(cfg.delta > 0.0) {
        return Err(Error::Parameter("delta must be positive".into()));
    }
    let sampler = canonical_sampler(cfg)?;
    let spacing = sampler.grid().spacing();
    if let Some(e) = cfg.radii.iter().find(|e| **e < spacing) {
        return Err(Error::Resolution { scale: *e, spacing });
    }
    let table = replicate(cfg, name, |rng| {
        let mu = canonical_measure(&sampler, cfg, rng)?;
        cfg.radii
            .iter()
            .map(|&eps| {
                let (lo, hi) = (eps.powf(cfg.delta), eps.powf(-cfg.delta));
                let n = (TAU / eps).floor() as usize;
                let mut count = 0usize;
                for i in 0..n {
                    let a = mu.average(i as f64 * eps, eps)?;
                    if a > lo && a < hi {
                        count += 1;
                    }
                }
                Ok(count as f64)
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    let xs: Vec<f64> = cfg.radii.iter().map(|e| (1.0 / e).ln()).collect();
    let (means, ses, fit) = slope_of_means(&table, &xs)?;
    let rows = cfg
        .radii
        .iter()
        .zip(means.iter().zip(&ses))
        .map(|(e, (m, s))| row(name, cfg, vec![("eps", *e)], *m, *s))
        .collect();
    let summary = vec![
        ("slope".to_string(), fit.slope),
        ("slope_se".to_string(), fit.slope_se),
        ("expected".to_string(), 1.0 - cfg.gamma * cfg.gamma / 8.0),
    ];
    Ok(finish(name, rows, summary, start))
}

/// Half-width of the outermost ring in the dyadic-ratio check.
const RING_OUTER: f64 = 0.25;

/// Mass-moment scaling of the canonical chaos plus the dyadic-ratio law for
/// the exact-scaling field.
///
/// The first part fits `log E[μ(-ε, ε]^p]` against `log ε` (predicted slope
/// `p(1 + γ²(1-p)/2)`). The second compares
/// `E[(∫_{R_{k+1}} |θ|^{-s} dμ)^p]` with the same quantity on `R_k`, where
/// `R_k = {2^{-k-1} L < |θ| ≤ 2^{-k} L}`; the predicted ratio is
/// `2^{sp - p(1+γ²/2) + p²γ²/2}`.
pub fn exp_mass_scaling(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let name = ExperimentKind::MassScaling.name();
    cfg.validate()?;
    cfg.check_moment()?;
    cfg.need_radii(3)?;
    let (g, p) = (cfg.gamma, cfg.p);
    let sampler = canonical_sampler(cfg)?;
    let spacing = sampler.grid().spacing();
    if let Some(e) = cfg.radii.iter().find(|e| **e < spacing || **e > std::f64::consts::PI) {
        return Err(Error::Resolution { scale: *e, spacing });
    }
    let table = replicate(cfg, name, |rng| {
        let mu = canonical_measure(&sampler, cfg, rng)?;
        Ok(cfg.radii.iter().map(|&e| mu.interval_mass(-e, e).powf(p)).collect::<Vec<f64>>())
    })?;
    let xs: Vec<f64> = cfg.radii.iter().map(|e| e.ln()).collect();
    let (means, ses, fit) = slope_of_means(&table, &xs)?;
    let mut rows: Vec<ResultRow> = cfg
        .radii
        .iter()
        .zip(means.iter().zip(&ses))
        .map(|(e, (m, s))| row(name, cfg, vec![("part", 0.0), ("eps", *e)], *m, *s))
        .collect();
    let mut summary = vec![
        ("slope".to_string(), fit.slope),
        ("slope_se".to_string(), fit.slope_se),
        ("expected".to_string(), p * (1.0 + g * g * (1.0 - p) / 2.0)),
    ];

    let exact_grid = GridSpec::interval(cfg.exact_grid)?;
    let eps = 2.0 * exact_grid.spacing();
    let exact = ExactScalingSampler::new(eps, exact_grid)?;
    // Rings stay at least eight mollification scales away from the origin.
    let rings = (0..).take_while(|k| RING_OUTER * 2f64.powi(-k - 1) >= 8.0 * eps).count();
    if rings < 2 {
        return Err(Error::Resolution { scale: eps, spacing: exact_grid.spacing() });
    }
    let thetas = exact_grid.points();
    let exact_cfg = ExperimentConfig { master_seed: cfg.master_seed ^ 0x5ca1e, ..cfg.clone() };
    let exact_table = replicate(&exact_cfg, "mass-scaling-exact", |rng| {
        let mu = build_measure(&exact.sample(rng), g, cfg.mode())?;
        let mut out = Vec::with_capacity(cfg.s_list.len() * rings);
        for &s in &cfg.s_list {
            for k in 0..rings {
                let outer = RING_OUTER * 2f64.powi(-(k as i32));
                let inner = 0.5 * outer;
                let total: f64 = thetas
                    .iter()
                    .zip(mu.weights())
                    .filter(|(t, _)| t.abs() > inner && t.abs() <= outer)
                    .map(|(t, w)| w * t.abs().powf(-s))
                    .sum();
                out.push(total.powf(p));
            }
        }
        Ok(out)
    })?;
    let (exact_means, exact_loo) = leave_one_out_means(&exact_table);
    for (si, &s) in cfg.s_list.iter().enumerate() {
        let block = |ms: &[f64]| -> f64 {
            let m = &ms[si * rings..(si + 1) * rings];
            // Geometric mean of the successive ratios.
            (m[rings - 1] / m[0]).powf(1.0 / (rings - 1) as f64)
        };
        let ratio = block(&exact_means);
        let loo: Vec<f64> = exact_loo.iter().map(|ms| block(ms)).collect();
        let se = jackknife_se(ratio, &loo).se;
        let expected = 2f64.powf(s * p - p * (1.0 + g * g / 2.0) + p * p * g * g / 2.0);
        rows.push(row(name, cfg, vec![("part", 1.0), ("s", s)], ratio, se));
        summary.push((format!("s={s}:dyadic_ratio"), ratio));
        summary.push((format!("s={s}:dyadic_ratio_se"), se));
        summary.push((format!("s={s}:expected_ratio"), expected));
    }
    Ok(finish(name, rows, summary, start))
}

/// `(1/A) Σ_a |Im h(r e^{iα_a})|^{-p}` over `A` equispaced angles.
pub fn imag_h_moment(f: &InnerFunctionEval, r: f64, p: f64, angles: usize) -> Result<f64> {
    let pts = angle_points(r, angles)?;
    Ok(pts.iter().map(|z| f.conj_poisson_y(*z).abs().powf(-p)).sum::<f64>() / pts.len() as f64)
}

/// `E[|Im h(r)|^{-p}]` across radii; bounded in `r` for the canonical chaos.
pub fn exp_imag_bound(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let name = ExperimentKind::ImagBound.name();
    cfg.validate()?;
    cfg.need_radii(1)?;
    let sampler = canonical_sampler(cfg)?;
    let table = replicate(cfg, name, |rng| {
        let f = InnerFunctionEval::from_measure(&canonical_measure(&sampler, cfg, rng)?)?;
        cfg.radii.iter().map(|&r| imag_h_moment(&f, r, cfg.p, cfg.angles)).collect::<Result<Vec<f64>>>()
    })?;
    let (means, _) = leave_one_out_means(&table);
    let rows = cfg
        .radii
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let col: Vec<f64> = table.iter().map(|t| t[k]).collect();
            row(name, cfg, vec![("r", *r)], means[k], jackknife_mean(&col).se)
        })
        .collect();
    let max = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = means.iter().copied().fold(f64::INFINITY, f64::min);
    let summary = vec![("max_over_min".to_string(), max / min)];
    Ok(finish(name, rows, summary, start))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for k in ExperimentKind::ALL {
            assert_eq!(ExperimentKind::from_name(k.name()), Some(k));
        }
        assert_eq!(ExperimentKind::from_name("nope"), None);
    }

    #[test]
    fn defaults_validate() {
        for k in ExperimentKind::ALL {
            k.default_config().validate().unwrap();
        }
    }

    #[test]
    fn config_rejects_coarse_grid() {
        let cfg = ExperimentConfig { n_schedule: vec![2048], m: 4096, ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn median_error_is_positive_for_spread_data() {
        let xs: Vec<f64> = (0..50).map(f64::from).collect();
        assert!(median_se(&xs) > 0.0);
    }
}
