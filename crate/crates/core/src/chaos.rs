//! Atomic approximation of Gaussian multiplicative chaos.
//!
//! Atom `j` sits at the grid point `θ_j` with mass
//! `exp(γ X_j - γ² σ_j² / 2) · Δ`, where `Δ` is the grid spacing. At the
//! critical value `γ = √2` every atom is further multiplied by `σ_j`, the
//! truncation stand-in for `√(-log ε)`.

use std::f64::consts::{SQRT_2, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{CanonicalSampler, Domain, FieldSample, GridSpec};
use crate::rng::{self, replica_rng};
use crate::stats::{jackknife_mean, Estimate};

/// Normalization regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChaosMode {
    Subcritical,
    Critical,
}

impl ChaosMode {
    /// The regime appropriate for `gamma`.
    pub fn for_gamma(gamma: f64) -> ChaosMode {
        if (gamma - SQRT_2).abs() <= 1e-12 {
            ChaosMode::Critical
        } else {
            ChaosMode::Subcritical
        }
    }
}

fn check_gamma(gamma: f64, mode: ChaosMode) -> Result<()> {
    if !(gamma > 0.0 && gamma <= SQRT_2 + 1e-12) {
        return Err(Error::Parameter(format!(
            "gamma = {gamma} is outside (0, sqrt 2]; the chaos is degenerate for gamma^2 >= 2"
        )));
    }
    match mode {
        ChaosMode::Critical if (gamma - SQRT_2).abs() > 1e-12 => {
            Err(Error::Parameter(format!("critical normalization requires gamma = sqrt 2, got {gamma}")))
        }
        ChaosMode::Subcritical if gamma >= SQRT_2 => {
            Err(Error::Parameter("gamma = sqrt 2 requires the critical normalization".into()))
        }
        _ => Ok(()),
    }
}

/// Nonnegative atoms on a uniform grid, with prefix sums for arc queries.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaosMeasure {
    grid: GridSpec,
    weights: Vec<f64>,
    prefix: Vec<f64>,
    gamma: f64,
    mode: ChaosMode,
    truncation: usize,
}

impl ChaosMeasure {
    /// Wraps precomputed weights (all finite, nonnegative, positive total).
    pub fn from_weights(
        grid: GridSpec,
        weights: Vec<f64>,
        gamma: f64,
        mode: ChaosMode,
        truncation: usize,
    ) -> Result<Self> {
        check_gamma(gamma, mode)?;
        if weights.len() != grid.size() {
            return Err(Error::InvalidGrid(format!("{} weights for a grid of {} points", weights.len(), grid.size())));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Parameter("chaos weights must be finite and nonnegative".into()));
        }
        let mut prefix = Vec::with_capacity(weights.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for w in &weights {
            acc += w;
            prefix.push(acc);
        }
        if acc <= 0.0 {
            return Err(Error::Parameter("chaos measure has zero total mass".into()));
        }
        Ok(ChaosMeasure { grid, weights, prefix, gamma, mode, truncation })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn mode(&self) -> ChaosMode {
        self.mode
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn total_mass(&self) -> f64 {
        self.prefix[self.weights.len()]
    }

    /// Atoms as `(θ_j, w_j)` pairs.
    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.weights.iter().enumerate().map(|(j, w)| (self.grid.point(j), *w))
    }

    /// Largest atom as a fraction of the total mass.
    pub fn max_atom_fraction(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max) / self.total_mass()
    }

    // Sum of weights with index in the half-open integer range (lo, hi],
    // indices taken modulo M.
    fn cyclic_sum(&self, lo: i64, hi: i64) -> f64 {
        let m = self.weights.len() as i64;
        let count = hi - lo;
        if count <= 0 {
            return 0.0;
        }
        if count >= m {
            return self.total_mass();
        }
        let start = (lo + 1).rem_euclid(m) as usize;
        let end = start + count as usize;
        if end <= m as usize {
            self.prefix[end] - self.prefix[start]
        } else {
            (self.prefix[m as usize] - self.prefix[start]) + self.prefix[end - m as usize]
        }
    }

    /// Mass of atoms with `θ_j ∈ (a, b]` (on the circle the arc may wrap).
    pub fn interval_mass(&self, a: f64, b: f64) -> f64 {
        if !(b > a) {
            return 0.0;
        }
        match self.grid.domain() {
            Domain::Circle => {
                let idx = |x: f64| -> i64 {
                    let turns = (x / TAU).floor();
                    let rest = x - turns * TAU;
                    let m = self.weights.len() as i64;
                    let i = ((rest / self.grid.spacing()).floor() as i64).clamp(0, m - 1);
                    turns as i64 * m + i
                };
                self.cyclic_sum(idx(a), idx(b))
            }
            Domain::Interval => {
                // θ_j = -1/2 + (j + 1/2)h, so θ_j ≤ x  ⇔  j ≤ (x + 1/2)/h - 1/2.
                let m = self.weights.len() as i64;
                let last =
                    |x: f64| -> i64 { (((x + 0.5) / self.grid.spacing() - 0.5).floor() as i64).clamp(-1, m - 1) };
                let (lo, hi) = (last(a), last(b));
                if hi <= lo {
                    0.0
                } else {
                    self.prefix[(hi + 1) as usize] - self.prefix[(lo + 1) as usize]
                }
            }
        }
    }

    /// Average density `μ(θ - ε, θ + ε] / (2ε)`.
    pub fn average(&self, theta: f64, eps: f64) -> Result<f64> {
        if !(eps >= self.grid.spacing() * (1.0 - 1e-12)) {
            return Err(Error::Resolution { scale: eps, spacing: self.grid.spacing() });
        }
        Ok(self.interval_mass(theta - eps, theta + eps) / (2.0 * eps))
    }
}

/// Exponentiates a field into chaos weights.
pub fn build_measure(field: &FieldSample, gamma: f64, mode: ChaosMode) -> Result<ChaosMeasure> {
    check_gamma(gamma, mode)?;
    let grid = field.grid();
    let h = grid.spacing();
    let half = 0.5 * gamma * gamma;
    let weights = field
        .values()
        .iter()
        .enumerate()
        .map(|(j, x)| {
            let var = field.variance().at(j);
            let w = (gamma * x - half * var).exp() * h;
            match mode {
                ChaosMode::Subcritical => w,
                ChaosMode::Critical => w * var.max(0.0).sqrt(),
            }
        })
        .collect();
    ChaosMeasure::from_weights(grid, weights, gamma, mode, field.truncation())
}

/// Grid size used by the moment drivers: four points per finest oscillation.
pub fn default_grid_size(truncation: usize) -> usize {
    (4 * truncation).next_power_of_two().max(8)
}

/// Monte Carlo estimates of `E[μ(-ε, ε]^p]` for several `(p, ε)` pairs from
/// the same replicas; the result is indexed `[p][ε]`.
pub fn mass_moments_mc(
    gamma: f64,
    ps: &[f64],
    epss: &[f64],
    truncation: usize,
    replicas: usize,
    seed: u64,
) -> Result<Vec<Vec<Estimate>>> {
    let mode = ChaosMode::for_gamma(gamma);
    check_gamma(gamma, mode)?;
    for &p in ps {
        if p >= 2.0 / (gamma * gamma) {
            return Err(Error::MomentUndefined { p, gamma });
        }
    }
    if replicas < 100 {
        return Err(Error::Parameter(format!("moment estimates need at least 100 replicas, got {replicas}")));
    }
    let grid = GridSpec::circle(default_grid_size(truncation))?;
    for &eps in epss {
        if !(eps >= grid.spacing() && eps <= std::f64::consts::PI) {
            return Err(Error::Resolution { scale: eps, spacing: grid.spacing() });
        }
    }
    let sampler = CanonicalSampler::new(truncation, grid)?;
    let tag = rng::tag("mass-moment");
    let masses: Vec<Vec<f64>> = (0..replicas)
        .into_par_iter()
        .map(|i| {
            let mut r = replica_rng(seed, tag, i as u64);
            let mu = build_measure(&sampler.sample(&mut r), gamma, mode).expect("validated gamma");
            epss.iter().map(|&e| mu.interval_mass(-e, e)).collect()
        })
        .collect();
    Ok(ps
        .iter()
        .map(|&p| {
            (0..epss.len())
                .map(|k| {
                    if p == 0.0 {
                        return Estimate::exact(1.0);
                    }
                    let xs: Vec<f64> = masses.iter().map(|row| row[k].powf(p)).collect();
                    jackknife_mean(&xs)
                })
                .collect()
        })
        .collect())
}

/// Monte Carlo estimate of `E[μ(-ε, ε]^p]` for the canonical chaos with
/// jackknife standard error.
pub fn mass_moment_mc(gamma: f64, p: f64, eps: f64, truncation: usize, replicas: usize, seed: u64) -> Result<Estimate> {
    Ok(mass_moments_mc(gamma, &[p], &[eps], truncation, replicas, seed)?[0][0])
}
