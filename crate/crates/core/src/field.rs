//! Log-correlated Gaussian fields on a uniform grid.
//!
//! The canonical field on the circle is the random Fourier series
//! `Σ n^{-1/2} (A_n cos nθ + B_n sin nθ)` truncated at `N` modes; its
//! covariance is `Σ_{n≤N} cos(nΔ)/n`, which tends to `-log|e^{iΔ} - 1|`.
//! Perturbed kernels `C_N + g` and the mollified exact-scaling kernel on
//! `[-1/2, 1/2]` are sampled from a dense eigendecomposition of the grid
//! covariance.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ClipPolicy, PsdFactor};
use crate::trig::{self, TrigKernel};

/// Where the grid lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// `θ_j = 2πj/M` on the circle.
    Circle,
    /// Cell midpoints `θ_j = -1/2 + (j + 1/2)/M` of `[-1/2, 1/2]`.
    Interval,
}

/// Uniform grid with a power-of-two number of points (at least 8).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridSpec {
    size: usize,
    domain: Domain,
}

impl GridSpec {
    pub fn new(size: usize, domain: Domain) -> Result<Self> {
        if size < 8 || !size.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("grid size must be a power of two and at least 8, got {size}")));
        }
        Ok(GridSpec { size, domain })
    }

    pub fn circle(size: usize) -> Result<Self> {
        Self::new(size, Domain::Circle)
    }

    pub fn interval(size: usize) -> Result<Self> {
        Self::new(size, Domain::Interval)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// Distance between neighbouring points (also the Lebesgue weight of an atom).
    pub fn spacing(&self) -> f64 {
        match self.domain {
            Domain::Circle => TAU / self.size as f64,
            Domain::Interval => 1.0 / self.size as f64,
        }
    }

    pub fn point(&self, j: usize) -> f64 {
        match self.domain {
            Domain::Circle => j as f64 * self.spacing(),
            Domain::Interval => -0.5 + (j as f64 + 0.5) * self.spacing(),
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.size).map(|j| self.point(j)).collect()
    }
}

/// Number of Fourier modes kept, or the untruncated kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truncation {
    Finite(usize),
    Infinite,
}

/// Covariance of the canonical field at angular separation `delta`.
pub fn covariance_canonical(delta: f64, truncation: Truncation) -> Result<f64> {
    match truncation {
        Truncation::Finite(n) => Ok((1..=n).map(|k| (k as f64 * delta).cos() / k as f64).sum()),
        Truncation::Infinite => {
            let half = (0.5 * delta).sin().abs();
            // sin(π) rounds to about 1.2e-16, so multiples of 2π land here too.
            if half < 1e-15 {
                return Err(Error::Singularity);
            }
            Ok(-(2.0 * half).ln())
        }
    }
}

/// Harmonic number `Σ_{n≤N} 1/n`, the exact pointwise variance of the
/// canonical field truncated at `N`.
pub fn harmonic(n: usize) -> f64 {
    (1..=n).map(|k| 1.0 / k as f64).sum()
}

/// Covariance model used to produce a sample.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    Canonical,
    Perturbed(TrigKernel),
    ExactScaling,
}

impl KernelSpec {
    pub fn kind(&self) -> KernelKind {
        match self {
            KernelSpec::Canonical => KernelKind::Canonical,
            KernelSpec::Perturbed(_) => KernelKind::Perturbed,
            KernelSpec::ExactScaling => KernelKind::ExactScaling,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Canonical,
    Perturbed,
    ExactScaling,
    Residual,
}

impl KernelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            KernelKind::Canonical => "canonical",
            KernelKind::Perturbed => "perturbed",
            KernelKind::ExactScaling => "exact_scaling",
            KernelKind::Residual => "residual",
        }
    }
}

/// Pointwise variance `E[X(θ_j)^2]`.
#[derive(Debug, Clone, PartialEq)]
pub enum Variance {
    Uniform(f64),
    PerPoint(Vec<f64>),
}

impl Variance {
    pub fn at(&self, j: usize) -> f64 {
        match self {
            Variance::Uniform(v) => *v,
            Variance::PerPoint(v) => v[j],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModeKind {
    Sin,
    Cos,
}

/// One Fourier mode of the canonical series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Mode {
    pub frequency: usize,
    pub kind: ModeKind,
}

impl Mode {
    pub fn sin(frequency: usize) -> Self {
        Mode { frequency, kind: ModeKind::Sin }
    }

    pub fn cos(frequency: usize) -> Self {
        Mode { frequency, kind: ModeKind::Cos }
    }

    fn eval(self, theta: f64) -> f64 {
        let x = self.frequency as f64 * theta;
        match self.kind {
            ModeKind::Sin => x.sin(),
            ModeKind::Cos => x.cos(),
        }
    }

    fn slot(self) -> usize {
        match self.kind {
            ModeKind::Cos => 0,
            ModeKind::Sin => 1,
        }
    }
}

/// Field values on a grid together with their exact pointwise variance.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    grid: GridSpec,
    values: Vec<f64>,
    truncation: usize,
    variance: Variance,
    kernel: KernelKind,
    /// `(A_n, B_n)` for canonical samples, so nested truncations and mode
    /// extraction reuse the same randomness.
    modes: Option<Vec<[f64; 2]>>,
    removed: Vec<Mode>,
}

impl FieldSample {
    /// Field identically zero with zero variance (the `N = 0` edge case).
    pub fn zero(grid: GridSpec) -> Self {
        FieldSample {
            grid,
            values: vec![0.0; grid.size()],
            truncation: 0,
            variance: Variance::Uniform(0.0),
            kernel: KernelKind::Canonical,
            modes: Some(Vec::new()),
            removed: Vec::new(),
        }
    }

    /// Wraps externally produced values.
    pub fn from_values(
        grid: GridSpec,
        values: Vec<f64>,
        truncation: usize,
        variance: Variance,
        kernel: KernelKind,
    ) -> Result<Self> {
        if values.len() != grid.size() {
            return Err(Error::InvalidGrid(format!("{} values for a grid of {} points", values.len(), grid.size())));
        }
        if let Variance::PerPoint(v) = &variance {
            if v.len() != grid.size() {
                return Err(Error::InvalidGrid("variance length differs from grid size".into()));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("field values must be finite".into()));
        }
        Ok(FieldSample { grid, values, truncation, variance, kernel, modes: None, removed: Vec::new() })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn variance(&self) -> &Variance {
        &self.variance
    }

    pub fn kernel(&self) -> KernelKind {
        self.kernel
    }

    /// Gaussian coefficients `(A_n, B_n)`, present for canonical samples.
    pub fn modes(&self) -> Option<&[[f64; 2]]> {
        self.modes.as_deref()
    }

    /// Debug serialization: grid size, truncation, kernel id, then the values.
    pub fn to_text_row(&self) -> String {
        let mut s = format!("{},{},{}", self.grid.size(), self.truncation, self.kernel.as_str());
        for v in &self.values {
            let _ = write!(s, ",{v}");
        }
        s
    }

    /// Re-inserts a mode previously removed by [`split_mode`] with the given
    /// coefficient.
    pub fn with_mode(&self, mode: Mode, coefficient: f64) -> Result<FieldSample> {
        let pos = self
            .removed
            .iter()
            .position(|m| *m == mode)
            .ok_or_else(|| Error::Parameter(format!("mode {mode:?} was not split off this sample")))?;
        let mut out = self.clone();
        out.removed.remove(pos);
        let amp = (mode.frequency as f64).sqrt().recip();
        let mut var = self.per_point_variance();
        for (j, (v, s)) in out.values.iter_mut().zip(var.iter_mut()).enumerate() {
            let b = mode.eval(self.grid.point(j));
            *v += amp * coefficient * b;
            *s += b * b / mode.frequency as f64;
        }
        out.variance = Variance::PerPoint(var);
        if let Some(modes) = out.modes.as_mut() {
            modes[mode.frequency - 1][mode.slot()] = coefficient;
        }
        Ok(out)
    }

    fn per_point_variance(&self) -> Vec<f64> {
        (0..self.grid.size()).map(|j| self.variance.at(j)).collect()
    }
}

/// Reusable sampler for the truncated canonical field.
#[derive(Clone)]
pub struct CanonicalSampler {
    grid: GridSpec,
    truncation: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for CanonicalSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CanonicalSampler").field("grid", &self.grid).field("truncation", &self.truncation).finish()
    }
}

impl CanonicalSampler {
    pub fn new(truncation: usize, grid: GridSpec) -> Result<Self> {
        if grid.domain() != Domain::Circle {
            return Err(Error::InvalidGrid("the canonical field lives on the circle".into()));
        }
        if truncation == 0 {
            return Err(Error::Parameter("truncation must be at least 1".into()));
        }
        let limit = grid.size() / 2;
        if truncation > limit {
            return Err(Error::Aliasing { truncation, limit });
        }
        let fft = FftPlanner::new().plan_fft_inverse(grid.size());
        Ok(CanonicalSampler { grid, truncation, fft })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    /// Draws `(A_n, B_n)` for `n = 1..=N`, in the order `A_1, B_1, A_2, ...`.
    pub fn draw_modes<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<[f64; 2]> {
        (0..self.truncation)
            .map(|_| {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                [a, b]
            })
            .collect()
    }

    /// Synthesizes the series from the given modes; the truncation of the
    /// result is `modes.len()`, which may be smaller than the sampler's.
    pub fn synthesize(&self, modes: &[[f64; 2]]) -> Result<FieldSample> {
        let m = self.grid.size();
        if modes.len() > m / 2 {
            return Err(Error::Aliasing { truncation: modes.len(), limit: m / 2 });
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for (k, [a, b]) in modes.iter().enumerate() {
            let n = k + 1;
            buf[n] = Complex64::new(*a, -*b) / (n as f64).sqrt();
        }
        self.fft.process(&mut buf);
        Ok(FieldSample {
            grid: self.grid,
            values: buf.iter().map(|c| c.re).collect(),
            truncation: modes.len(),
            variance: Variance::Uniform(harmonic(modes.len())),
            kernel: KernelKind::Canonical,
            modes: Some(modes.to_vec()),
            removed: Vec::new(),
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldSample {
        let modes = self.draw_modes(rng);
        self.synthesize(&modes).expect("truncation validated at construction")
    }
}

/// Samples the canonical field truncated at `truncation` modes.
pub fn sample_canonical<R: Rng + ?Sized>(truncation: usize, grid: GridSpec, rng: &mut R) -> Result<FieldSample> {
    Ok(CanonicalSampler::new(truncation, grid)?.sample(rng))
}

/// Grid covariance matrix `Σ_{n≤N} cos(n(θ_i - θ_j))/n` of the canonical field.
pub fn canonical_grid_covariance(grid: GridSpec, truncation: usize) -> DMatrix<f64> {
    let m = grid.size();
    let lags: Vec<f64> = (0..m)
        .map(|k| covariance_canonical(grid.point(k), Truncation::Finite(truncation)).expect("finite truncation"))
        .collect();
    DMatrix::from_fn(m, m, |i, j| lags[(i + m - j) % m])
}

/// Sampler for covariance `C_N + g` built from a dense eigendecomposition.
#[derive(Debug, Clone)]
pub struct PerturbedSampler {
    grid: GridSpec,
    truncation: usize,
    factor: PsdFactor,
}

impl PerturbedSampler {
    pub fn new(kernel: &KernelSpec, truncation: usize, grid: GridSpec) -> Result<Self> {
        let KernelSpec::Perturbed(g) = kernel else {
            return Err(Error::Parameter("perturbed sampling needs a perturbed kernel".into()));
        };
        if grid.domain() != Domain::Circle {
            return Err(Error::InvalidGrid("perturbed fields live on the circle".into()));
        }
        let limit = grid.size() / 2;
        if truncation > limit || g.degree() > limit {
            return Err(Error::Aliasing { truncation: truncation.max(g.degree()), limit });
        }
        let mut cov = canonical_grid_covariance(grid, truncation);
        add_kernel_on_grid(&mut cov, g, grid);
        let factor = PsdFactor::new(cov, ClipPolicy::Strict)?;
        Ok(PerturbedSampler { grid, truncation, factor })
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.factor.min_eigenvalue()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldSample {
        FieldSample {
            grid: self.grid,
            values: self.factor.sample(rng),
            truncation: self.truncation,
            variance: Variance::PerPoint(self.factor.variances().to_vec()),
            kernel: KernelKind::Perturbed,
            modes: None,
            removed: Vec::new(),
        }
    }
}

/// Adds `g(θ_i, θ_j)` to a grid covariance matrix.
pub fn add_kernel_on_grid(cov: &mut DMatrix<f64>, g: &TrigKernel, grid: GridSpec) {
    let d = g.coeffs().nrows();
    let m = grid.size();
    let mut buf = Vec::with_capacity(d);
    let mut basis = DMatrix::zeros(d, m);
    for j in 0..m {
        trig::basis_values(d, grid.point(j), &mut buf);
        for (a, v) in buf.iter().enumerate() {
            basis[(a, j)] = *v;
        }
    }
    *cov += basis.transpose() * g.coeffs() * &basis;
}

/// Samples the field with covariance `C_N + g`.
pub fn sample_perturbed<R: Rng + ?Sized>(
    kernel: &KernelSpec,
    truncation: usize,
    grid: GridSpec,
    rng: &mut R,
) -> Result<FieldSample> {
    Ok(PerturbedSampler::new(kernel, truncation, grid)?.sample(rng))
}

/// Covariance of the exact-scaling field at separation `d` and scale `eps`:
/// `log(1/d)` for `d ≥ eps` and `log(1/eps) + 1 - d/eps` below. This is the
/// cone construction (white noise over `{(y, t): |y - x| ≤ t/2, t ≥ eps}`
/// with intensity `dt dy / t²`, cone widths capped at 1), so it is positive
/// definite and `K_{r eps}(r d) = K_eps(d) + log(1/r)` holds exactly. The
/// plain cutoff `log(1/max(d, eps))` is not a covariance: its grid matrices
/// carry eigenvalues near -0.45 at every resolution.
pub fn exact_scaling_covariance(d: f64, eps: f64) -> f64 {
    let d = d.abs();
    if d >= eps {
        -d.ln()
    } else {
        -eps.ln() + 1.0 - d / eps
    }
}

/// Sampler for the exact-scaling field on `[-1/2, 1/2]` with covariance
/// [`exact_scaling_covariance`].
#[derive(Debug, Clone)]
pub struct ExactScalingSampler {
    grid: GridSpec,
    eps: f64,
    factor: PsdFactor,
}

impl ExactScalingSampler {
    pub fn new(eps: f64, grid: GridSpec) -> Result<Self> {
        if grid.domain() != Domain::Interval {
            return Err(Error::InvalidGrid("the exact-scaling field lives on [-1/2, 1/2]".into()));
        }
        if !(eps >= grid.spacing() * (1.0 - 1e-12)) {
            return Err(Error::Resolution { scale: eps, spacing: grid.spacing() });
        }
        if eps > 1.0 {
            return Err(Error::Parameter(format!("exact-scaling eps = {eps} exceeds the window length 1")));
        }
        let m = grid.size();
        let cov = DMatrix::from_fn(m, m, |i, j| exact_scaling_covariance((i as f64 - j as f64) * grid.spacing(), eps));
        let factor = PsdFactor::new(cov, ClipPolicy::Strict)?;
        Ok(ExactScalingSampler { grid, eps, factor })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.factor.min_eigenvalue()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldSample {
        FieldSample {
            grid: self.grid,
            values: self.factor.sample(rng),
            truncation: (1.0 / self.eps).round() as usize,
            variance: Variance::PerPoint(self.factor.variances().to_vec()),
            kernel: KernelKind::ExactScaling,
            modes: None,
            removed: Vec::new(),
        }
    }
}

/// Samples the exact-scaling field at mollification scale `eps`.
pub fn sample_exact_scaling<R: Rng + ?Sized>(eps: f64, grid: GridSpec, rng: &mut R) -> Result<FieldSample> {
    Ok(ExactScalingSampler::new(eps, grid)?.sample(rng))
}

/// Removes one Fourier mode from a canonical sample, returning its Gaussian
/// coefficient and the residual field.
pub fn split_mode(sample: &FieldSample, mode: Mode) -> Result<(f64, FieldSample)> {
    let Some(modes) = sample.modes.as_ref() else {
        return Err(Error::Parameter("mode extraction needs a canonical sample".into()));
    };
    if mode.frequency == 0 || mode.frequency > sample.truncation {
        return Err(Error::ModeOutOfRange { frequency: mode.frequency, truncation: sample.truncation });
    }
    if sample.removed.contains(&mode) {
        return Err(Error::Parameter(format!("mode {mode:?} was already split off")));
    }
    let coefficient = modes[mode.frequency - 1][mode.slot()];
    let amp = (mode.frequency as f64).sqrt().recip();
    let mut out = sample.clone();
    let mut var = sample.per_point_variance();
    for (j, (v, s)) in out.values.iter_mut().zip(var.iter_mut()).enumerate() {
        let b = mode.eval(sample.grid.point(j));
        *v -= amp * coefficient * b;
        *s -= b * b / mode.frequency as f64;
    }
    out.variance = Variance::PerPoint(var);
    if let Some(m) = out.modes.as_mut() {
        m[mode.frequency - 1][mode.slot()] = 0.0;
    }
    out.removed.push(mode);
    Ok((coefficient, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use std::f64::consts::PI;

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(GridSpec::circle(4).is_err());
        assert!(GridSpec::circle(24).is_err());
        assert!(GridSpec::interval(16).is_ok());
    }

    #[test]
    fn infinite_covariance_reference_values() {
        let c = covariance_canonical(PI, Truncation::Infinite).unwrap();
        assert!((c + 2f64.ln()).abs() < 1e-14);
        let c = covariance_canonical(PI / 3.0, Truncation::Infinite).unwrap();
        assert!(c.abs() < 1e-14);
        assert_eq!(covariance_canonical(0.0, Truncation::Infinite), Err(Error::Singularity));
        assert_eq!(covariance_canonical(TAU, Truncation::Infinite), Err(Error::Singularity));
    }

    #[test]
    fn single_mode_sample_is_explicit() {
        let grid = GridSpec::circle(32).unwrap();
        let s = sample_canonical(1, grid, &mut seeded(5)).unwrap();
        let [a, b] = s.modes().unwrap()[0];
        for (j, v) in s.values().iter().enumerate() {
            let t = grid.point(j);
            assert!((v - (a * t.cos() + b * t.sin())).abs() < 1e-12);
        }
    }

    #[test]
    fn nyquist_mode_keeps_cosine_part_only() {
        let grid = GridSpec::circle(8).unwrap();
        let sampler = CanonicalSampler::new(4, grid).unwrap();
        let modes = [[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [1.0, 1.0]];
        let s = sampler.synthesize(&modes).unwrap();
        for (j, v) in s.values().iter().enumerate() {
            let expect = 0.5 * (4.0 * grid.point(j)).cos();
            assert!((v - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn aliasing_is_rejected() {
        let grid = GridSpec::circle(16).unwrap();
        assert_eq!(CanonicalSampler::new(9, grid).unwrap_err(), Error::Aliasing { truncation: 9, limit: 8 });
    }

    #[test]
    fn split_of_single_mode_leaves_cosine() {
        let grid = GridSpec::circle(16).unwrap();
        let s = sample_canonical(1, grid, &mut seeded(1)).unwrap();
        let [a, b] = s.modes().unwrap()[0];
        let (coef, res) = split_mode(&s, Mode::sin(1)).unwrap();
        assert_eq!(coef, b);
        for (j, v) in res.values().iter().enumerate() {
            assert!((v - a * grid.point(j).cos()).abs() < 1e-12);
        }
        assert!(matches!(split_mode(&s, Mode::cos(2)), Err(Error::ModeOutOfRange { .. })));
    }

    #[test]
    fn exact_scaling_requires_resolution() {
        let grid = GridSpec::interval(64).unwrap();
        assert!(matches!(sample_exact_scaling(1e-3, grid, &mut seeded(0)), Err(Error::Resolution { .. })));
        assert!(sample_exact_scaling(1.0 / 64.0, GridSpec::circle(64).unwrap(), &mut seeded(0)).is_err());
    }

    #[test]
    fn exact_scaling_at_unit_scale_is_a_tent() {
        // eps = 1 leaves only the linear part 1 - |x| of the kernel.
        let grid = GridSpec::interval(32).unwrap();
        let s = sample_exact_scaling(1.0, grid, &mut seeded(0)).unwrap();
        assert!((0..32).all(|j| (s.variance().at(j) - 1.0).abs() < 1e-9));
    }

    #[test]
    fn text_row_layout() {
        let grid = GridSpec::circle(8).unwrap();
        let row = FieldSample::zero(grid).to_text_row();
        assert_eq!(row, "8,0,canonical,0,0,0,0,0,0,0,0");
    }
}
