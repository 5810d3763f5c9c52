//! Rank-two splitting of a perturbed log-correlated covariance.
//!
//! In the basis `e_0 = 1, e_{2j-1} = sin jθ, e_{2j} = cos jθ` the canonical
//! kernel is the diagonal operator `C = diag(0, 1, 1, 1/2, 1/2, ...)` and a
//! perturbation `g` is a symmetric matrix `A`. With `C1 = C + e_0 ⊗ e_0` the
//! operator `T = C1^{-1/2} A C1^{-1/2}` has eigenvalues at least `-1`; its
//! eigenvectors at `-1` give the constraints `⟨f, ψ_j⟩ = 0` that trig
//! polynomials `f1, f2` must satisfy so that
//! `C + A - (ε1/2) f1 ⊗ f1 - (ε2/2) f2 ⊗ f2` stays positive semidefinite.
//! The field then splits as `V1 f̂1 + V2 f̂2 + X̃` with `f̂i = √(εi/2) fi`.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::chaos::ChaosMeasure;
use crate::clark::DiscPoint;
use crate::error::{Error, Result};
use crate::field::{add_kernel_on_grid, canonical_grid_covariance, FieldSample, GridSpec, KernelKind, Variance};
use crate::linalg::{min_eigenvalue, null_space, psd_tolerance, ClipPolicy, PsdFactor};
use crate::trig::{self, TrigKernel, TrigPoly};

/// Default relative width of the window around `-1` that defines the deficiency.
pub const DEFAULT_TOL_EIG: f64 = 1e-6;

/// Dense grid used to compute the infimum of `f1² + f2²`.
const DENSE_GRID: usize = 1 << 14;

/// The operators `C`, `C1`, `A` and `T` truncated at degree `D`.
#[derive(Debug, Clone)]
pub struct OperatorGrid {
    cutoff: usize,
    c: DVector<f64>,
    c1: DVector<f64>,
    a: DMatrix<f64>,
    t: DMatrix<f64>,
    t_eigen: SymmetricEigen<f64, nalgebra::Dyn>,
    kernel_eigen: SymmetricEigen<f64, nalgebra::Dyn>,
    min_eig_c_plus_a: f64,
    warnings: Vec<String>,
}

/// Diagonal of `C` up to degree `cutoff`.
pub fn canonical_diagonal(cutoff: usize) -> DVector<f64> {
    DVector::from_fn(trig::dimension(cutoff), |i, _| if i == 0 { 0.0 } else { 1.0 / trig::frequency(i) as f64 })
}

/// Assembles the truncated operators for the perturbation `g`.
pub fn build_operators(g: &TrigKernel, cutoff: usize) -> Result<OperatorGrid> {
    if cutoff < g.degree() + 2 {
        return Err(Error::Parameter(format!(
            "cutoff {cutoff} must exceed the kernel degree {} by at least 2",
            g.degree()
        )));
    }
    let dim = trig::dimension(cutoff);
    let c = canonical_diagonal(cutoff);
    let mut c1 = c.clone();
    c1[0] = 1.0;
    let a = g.embedded(dim);
    let c_plus_a = DMatrix::from_diagonal(&c) + &a;
    let eig = SymmetricEigen::new(c_plus_a.clone());
    let tol = psd_tolerance(eig.eigenvalues.max());
    let min_eig = eig.eigenvalues.min();
    if min_eig < -tol {
        return Err(Error::InvalidKernel { min_eigenvalue: min_eig, tolerance: tol });
    }
    let s = c1.map(|v| 1.0 / v.sqrt());
    let mut t = DMatrix::from_fn(dim, dim, |i, j| a[(i, j)] * s[i] * s[j]);
    t = (&t + t.transpose()) * 0.5;
    // C + A = C1^{1/2} (I + T - e0 ⊗ e0) C1^{1/2}, so the kernel of C + A
    // corresponds to eigenvalue -1 of T - e0 ⊗ e0.
    let mut tp = t.clone();
    tp[(0, 0)] -= 1.0;
    let mut warnings = Vec::new();
    let top = g.top_shell_fraction();
    if g.degree() > 0 && top > 0.5 {
        warnings.push(format!(
            "the top frequency shell carries {:.0}% of the weighted Sobolev norm of g; its coefficients show no decay",
            100.0 * top
        ));
    }
    Ok(OperatorGrid {
        cutoff,
        c,
        c1,
        a,
        t_eigen: SymmetricEigen::new(t.clone()),
        t,
        kernel_eigen: SymmetricEigen::new(tp),
        min_eig_c_plus_a: min_eig,
        warnings,
    })
}

impl OperatorGrid {
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dimension(&self) -> usize {
        self.c.len()
    }

    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn c1(&self) -> &DVector<f64> {
        &self.c1
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn t(&self) -> &DMatrix<f64> {
        &self.t
    }

    /// Eigenvalues of `T` in ascending order.
    pub fn t_eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.t_eigen.eigenvalues.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn min_eig_c_plus_a(&self) -> f64 {
        self.min_eig_c_plus_a
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// `C + A` as a dense matrix.
    pub fn c_plus_a(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.c) + &self.a
    }

    /// Number of eigenvalues of `T` inside the deficiency window.
    pub fn deficiency(&self, tol_eig: f64) -> Result<usize> {
        Ok(deficiency_constraints(self, tol_eig)?.len())
    }

    fn minus_one_vectors(&self, eigen: &SymmetricEigen<f64, nalgebra::Dyn>, tol_eig: f64) -> Result<Vec<DVector<f64>>> {
        let scale = eigen.eigenvalues.amax().max(1.0);
        let tol = tol_eig * scale;
        let mut out = Vec::new();
        for (k, lambda) in eigen.eigenvalues.iter().enumerate() {
            let gap = (lambda + 1.0).abs();
            if gap <= tol {
                let phi = eigen.eigenvectors.column(k);
                out.push(DVector::from_fn(phi.len(), |i, _| phi[i] / self.c1[i].sqrt()));
            } else if gap < 10.0 * tol {
                return Err(Error::AmbiguousDeficiency { eigenvalue: *lambda, tolerance: tol });
            }
        }
        Ok(out)
    }
}

/// Constraint vectors `ψ_j = C1^{-1/2} φ_j` for the eigenvectors `φ_j` of
/// `T` with eigenvalue within `tol_eig` (relative) of `-1`.
pub fn deficiency_constraints(op: &OperatorGrid, tol_eig: f64) -> Result<Vec<DVector<f64>>> {
    op.minus_one_vectors(&op.t_eigen, tol_eig)
}

/// Output of the rank-two construction.
#[derive(Debug, Clone)]
pub struct PerturbFunctions {
    pub f1: TrigPoly,
    pub f2: TrigPoly,
    pub eps1: f64,
    pub eps2: f64,
    /// `min_θ f1(θ)² + f2(θ)²` for the unit-norm polynomials.
    pub a_inf: f64,
    /// `C + A - (ε1/2) f1 ⊗ f1 - (ε2/2) f2 ⊗ f2` in coefficient space.
    pub residual: Option<DMatrix<f64>>,
    pub residual_min_eigenvalue: f64,
    /// Largest `|⟨f_i, ψ_j⟩|` over the supplied constraints.
    pub constraint_defect: f64,
}

impl PerturbFunctions {
    /// Wraps given polynomials without running the construction.
    pub fn from_modes(f1: TrigPoly, f2: TrigPoly, eps1: f64, eps2: f64) -> Self {
        let a_inf = infimum_of_squares(&f1, &f2);
        PerturbFunctions {
            f1,
            f2,
            eps1,
            eps2,
            a_inf,
            residual: None,
            residual_min_eigenvalue: f64::NAN,
            constraint_defect: 0.0,
        }
    }

    /// Mode functions `√(εi/2) fi` carried by the extracted Gaussians.
    pub fn modes(&self) -> (TrigPoly, TrigPoly) {
        (self.f1.scaled((0.5 * self.eps1).sqrt()), self.f2.scaled((0.5 * self.eps2).sqrt()))
    }

    /// `κ = γ² min(f̂1² + f̂2²)` for the scaled modes.
    pub fn kappa(&self, gamma: f64) -> f64 {
        let (m1, m2) = self.modes();
        gamma * gamma * infimum_of_squares(&m1, &m2)
    }

    /// `K = γ max √(f̂1² + f̂2²)` for the scaled modes.
    pub fn gradient_bound(&self, gamma: f64) -> f64 {
        let (m1, m2) = self.modes();
        let ts: Vec<f64> = (0..DENSE_GRID).map(|k| TAU * k as f64 / DENSE_GRID as f64).collect();
        let (v1, v2) = (m1.eval_many(&ts), m2.eval_many(&ts));
        let max = v1.iter().zip(&v2).map(|(a, b)| a * a + b * b).fold(0.0, f64::max);
        // Pad the grid maximum by the largest change possible between nodes.
        let lip = (m1.coeffs().iter().map(|c| c.abs()).sum::<f64>() + m2.coeffs().iter().map(|c| c.abs()).sum::<f64>())
            * (m1.degree().max(m2.degree()) as f64)
            * (TAU / DENSE_GRID as f64);
        gamma * (max.sqrt() + lip)
    }
}

/// `min_θ f1(θ)² + f2(θ)²`: dense grid scan plus golden-section refinement.
pub fn infimum_of_squares(f1: &TrigPoly, f2: &TrigPoly) -> f64 {
    let obj = |t: f64| f1.eval(t).powi(2) + f2.eval(t).powi(2);
    let h = TAU / DENSE_GRID as f64;
    let ts: Vec<f64> = (0..DENSE_GRID).map(|k| h * k as f64).collect();
    let (v1, v2) = (f1.eval_many(&ts), f2.eval_many(&ts));
    let (best, _) = v1
        .iter()
        .zip(&v2)
        .map(|(a, b)| a * a + b * b)
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (k, v)| if v < acc.1 { (k, v) } else { acc });
    golden_min(obj, ts[best] - h, ts[best] + h)
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    fc.min(fd).min(f(0.5 * (a + b)))
}

// Largest ε with C + A - ε f ⊗ f still PSD (to tolerance).
fn max_rank_one_step(c_plus_a: &DMatrix<f64>, f: &DVector<f64>, tol: f64) -> Result<f64> {
    let ok = |eps: f64| min_eigenvalue(&(c_plus_a - eps * f * f.transpose())) >= -tol;
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut doublings = 0;
    while ok(hi) {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 200 {
            return Err(Error::Consistency("rank-one step is unbounded".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    if !(lo > 0.0) {
        return Err(Error::Consistency("no positive step keeps the residual kernel PSD".into()));
    }
    Ok(lo)
}

/// Builds `f1`, `f2` of degree at most `degree` orthogonal to the constraints
/// (and to the kernel of `C + A`), with `f2` chosen to maximize the grid
/// minimum of `f1² + f2²`, and the largest admissible `ε1`, `ε2`.
pub fn find_f1_f2(
    op: &OperatorGrid,
    constraints: &[DVector<f64>],
    degree: usize,
    grid_size: usize,
) -> Result<PerturbFunctions> {
    if degree > op.cutoff() {
        return Err(Error::Parameter(format!("degree {degree} exceeds the operator cutoff {}", op.cutoff())));
    }
    if degree < constraints.len() + 2 {
        return Err(Error::DegreeTooSmall { degree, constraints: constraints.len() });
    }
    let d = trig::dimension(degree);
    let mut all: Vec<DVector<f64>> = constraints.to_vec();
    all.extend(op.minus_one_vectors(&op.kernel_eigen, DEFAULT_TOL_EIG)?);
    let basis = null_space(&all, d);
    let k = basis.ncols();
    if k == 0 {
        return Err(Error::DegreeTooSmall { degree, constraints: constraints.len() });
    }

    let project = |index: usize| -> DVector<f64> {
        let e = DVector::from_fn(d, |i, _| if i == index { 1.0 } else { 0.0 });
        basis.transpose() * e
    };
    let order: Vec<usize> = (1..d).chain(std::iter::once(0)).collect();
    let a1 = order
        .iter()
        .map(|&i| project(i))
        .find(|v| v.norm() > 1e-6)
        .ok_or(Error::DegreeTooSmall { degree, constraints: constraints.len() })?;
    let f1c = &basis * (&a1 / a1.norm());

    // Grid values of the null-space basis and of f1.
    let grid_size = grid_size.max(64);
    let mut buf = Vec::with_capacity(d);
    let mut values = DMatrix::zeros(k, grid_size);
    let mut f1_grid = vec![0.0; grid_size];
    for (j, f1_value) in f1_grid.iter_mut().enumerate() {
        trig::basis_values(d, TAU * j as f64 / grid_size as f64, &mut buf);
        let e = DVector::from_column_slice(&buf);
        let col = basis.transpose() * &e;
        values.set_column(j, &col);
        *f1_value = f1c.dot(&e);
    }
    let objective = |a: &DVector<f64>| -> f64 {
        let n = a.norm();
        if n == 0.0 {
            return f64::NEG_INFINITY;
        }
        let f2 = values.transpose() * a / n;
        f1_grid.iter().zip(f2.iter()).map(|(x, y)| x * x + y * y).fold(f64::INFINITY, f64::min)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_f1f2);
    let mut starts = Vec::with_capacity(8);
    let cos1 = project(2.min(d - 1));
    starts.push(if cos1.norm() > 1e-6 { cos1 } else { DVector::from_element(k, 1.0) });
    while starts.len() < 8 {
        starts.push(DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal)));
    }
    let mut best = (f64::NEG_INFINITY, starts[0].clone());
    for start in starts {
        let (value, a) = coordinate_ascent(start, &objective);
        if value > best.0 {
            best = (value, a);
        }
    }
    let a2 = &best.1 / best.1.norm();
    let f2c = &basis * a2;

    let f1 = TrigPoly::new(f1c.iter().copied().collect())?;
    let f2 = TrigPoly::new(f2c.iter().copied().collect())?;
    let a_inf = infimum_of_squares(&f1, &f2);
    if a_inf <= 1e-8 {
        return Err(Error::CommonZero { a_inf });
    }

    let dim = op.dimension();
    let embed = |v: &DVector<f64>| DVector::from_fn(dim, |i, _| if i < v.len() { v[i] } else { 0.0 });
    let (g1, g2) = (embed(&f1c), embed(&f2c));
    let c_plus_a = op.c_plus_a();
    let tol = psd_tolerance(SymmetricEigen::new(c_plus_a.clone()).eigenvalues.max());
    let eps1 = max_rank_one_step(&c_plus_a, &g1, tol)?;
    let eps2 = max_rank_one_step(&c_plus_a, &g2, tol)?;
    let residual = &c_plus_a - 0.5 * eps1 * &g1 * g1.transpose() - 0.5 * eps2 * &g2 * g2.transpose();
    let residual_min = min_eigenvalue(&residual);
    if residual_min < -tol {
        return Err(Error::Consistency(format!("residual kernel has eigenvalue {residual_min:e}")));
    }
    let defect = constraints
        .iter()
        .flat_map(|psi| [f1.dot(psi.as_slice()), f2.dot(psi.as_slice())])
        .map(f64::abs)
        .fold(0.0, f64::max);
    Ok(PerturbFunctions {
        f1,
        f2,
        eps1,
        eps2,
        a_inf,
        residual: Some(residual),
        residual_min_eigenvalue: residual_min,
        constraint_defect: defect,
    })
}

fn coordinate_ascent(start: DVector<f64>, objective: &impl Fn(&DVector<f64>) -> f64) -> (f64, DVector<f64>) {
    let mut a = &start / start.norm();
    let mut value = objective(&a);
    let mut step = 0.5;
    let mut iterations = 0;
    while step > 1e-7 && iterations < 5000 {
        iterations += 1;
        let mut improved = false;
        for i in 0..a.len() {
            for sign in [1.0, -1.0] {
                let mut trial = a.clone();
                trial[i] += sign * step;
                let n = trial.norm();
                if n == 0.0 {
                    continue;
                }
                trial /= n;
                let v = objective(&trial);
                if v > value + 1e-15 {
                    a = trial;
                    value = v;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (value, a)
}

/// Samples `V1 f̂1 + V2 f̂2 + X̃` with `X̃` drawn from the residual covariance
/// `C_N + g - (ε1/2) f1 ⊗ f1 - (ε2/2) f2 ⊗ f2` on the grid.
#[derive(Debug, Clone)]
pub struct DecompositionSampler {
    grid: GridSpec,
    truncation: usize,
    mode1: Vec<f64>,
    mode2: Vec<f64>,
    residual: PsdFactor,
}

impl DecompositionSampler {
    pub fn new(pf: &PerturbFunctions, g: &TrigKernel, truncation: usize, grid: GridSpec) -> Result<Self> {
        let degree = pf.f1.degree().max(pf.f2.degree());
        if truncation < degree {
            return Err(Error::Parameter(format!(
                "truncation {truncation} must reach the degree {degree} of the mode functions"
            )));
        }
        let thetas = grid.points();
        let (m1, m2) = pf.modes();
        let mode1 = m1.eval_many(&thetas);
        let mode2 = m2.eval_many(&thetas);
        let mut cov = canonical_grid_covariance(grid, truncation);
        add_kernel_on_grid(&mut cov, g, grid);
        let n = grid.size();
        for i in 0..n {
            for j in 0..n {
                cov[(i, j)] -= mode1[i] * mode1[j] + mode2[i] * mode2[j];
            }
        }
        let residual = PsdFactor::new(cov, ClipPolicy::Strict)?;
        Ok(DecompositionSampler { grid, truncation, mode1, mode2, residual })
    }

    /// Returns `(V1, V2, X̃)`.
    pub fn sample_parts<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(f64, f64, FieldSample)> {
        let v1: f64 = rng.sample(StandardNormal);
        let v2: f64 = rng.sample(StandardNormal);
        let values = self.residual.sample(rng);
        let residual = FieldSample::from_values(
            self.grid,
            values,
            self.truncation,
            Variance::PerPoint(self.residual.variances().to_vec()),
            KernelKind::Residual,
        )?;
        Ok((v1, v2, residual))
    }

    /// The recombined field.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<FieldSample> {
        let (v1, v2, res) = self.sample_parts(rng)?;
        let values: Vec<f64> =
            res.values().iter().enumerate().map(|(j, x)| x + v1 * self.mode1[j] + v2 * self.mode2[j]).collect();
        let variance =
            (0..values.len()).map(|j| res.variance().at(j) + self.mode1[j].powi(2) + self.mode2[j].powi(2)).collect();
        FieldSample::from_values(
            self.grid,
            values,
            self.truncation,
            Variance::PerPoint(variance),
            KernelKind::Perturbed,
        )
    }
}

/// Value, gradient and Hessian of `u` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UDerivatives {
    pub value: f64,
    pub gradient: [f64; 2],
    pub hessian: [[f64; 2]; 2],
}

/// `u(y1, y2) = Σ_j c_j exp(a_j y1 + b_j y2)` with
/// `a_j = γ f̂1(θ_j)`, `b_j = γ f̂2(θ_j)` and
/// `c_j = exp(-(γ²/2)(f̂1² + f̂2²)) P_z(θ_j) w_j`.
#[derive(Debug, Clone)]
pub struct UFunction {
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl UFunction {
    pub fn value(&self, y1: f64, y2: f64) -> f64 {
        self.a.iter().zip(&self.b).zip(&self.c).map(|((a, b), c)| c * (a * y1 + b * y2).exp()).sum()
    }

    pub fn derivatives(&self, y1: f64, y2: f64) -> UDerivatives {
        let mut d = UDerivatives { value: 0.0, gradient: [0.0; 2], hessian: [[0.0; 2]; 2] };
        for ((a, b), c) in self.a.iter().zip(&self.b).zip(&self.c) {
            let t = c * (a * y1 + b * y2).exp();
            d.value += t;
            d.gradient[0] += a * t;
            d.gradient[1] += b * t;
            d.hessian[0][0] += a * a * t;
            d.hessian[0][1] += a * b * t;
            d.hessian[1][1] += b * b * t;
        }
        d.hessian[1][0] = d.hessian[0][1];
        d
    }
}

/// Builds `u` from residual atoms `(θ_j, w_j)`, a disc point and the modes.
pub fn build_u(atoms: &[(f64, f64)], z: DiscPoint, pf: &PerturbFunctions, gamma: f64) -> Result<UFunction> {
    if atoms.iter().any(|(_, w)| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::Parameter("residual weights must be finite and nonnegative".into()));
    }
    let (m1, m2) = pf.modes();
    let z = z.z();
    let r2 = z.norm_sqr();
    let mut u = UFunction { a: Vec::with_capacity(atoms.len()), b: Vec::new(), c: Vec::new() };
    for &(theta, w) in atoms {
        let (p, q) = (m1.eval(theta), m2.eval(theta));
        let poisson = (1.0 - r2) / (z - num_complex::Complex64::from_polar(1.0, theta)).norm_sqr();
        u.a.push(gamma * p);
        u.b.push(gamma * q);
        u.c.push((-0.5 * gamma * gamma * (p * p + q * q)).exp() * poisson * w);
    }
    Ok(u)
}

/// [`build_u`] for the atoms of a chaos measure.
pub fn build_u_from_measure(mu: &ChaosMeasure, z: DiscPoint, pf: &PerturbFunctions, gamma: f64) -> Result<UFunction> {
    let atoms: Vec<(f64, f64)> = mu.atoms().collect();
    build_u(&atoms, z, pf, gamma)
}

/// Which inequality a hypothesis violation concerns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    Convexity,
    LaplacianLowerBound,
    GradientBound,
    BallInequality,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub hypothesis: Hypothesis,
    pub point: [f64; 2],
    pub radius: Option<f64>,
    /// Amount (relative to `u`) by which the inequality fails.
    pub margin: f64,
}

/// Outcome of [`check_hypotheses`]; margins are relative to `u` and
/// nonnegative when the inequality holds.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub violations: Vec<Violation>,
    pub min_convexity_margin: f64,
    pub min_laplacian_margin: f64,
    pub min_gradient_margin: f64,
    pub min_ball_margin: f64,
    pub points: usize,
    pub balls: usize,
}

impl HypothesisReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Slack allowed for rounding in the hypothesis checks.
pub const HYPOTHESIS_SLACK: f64 = 1e-8;

const CHECK_GRID: usize = 25;
const BALLS: usize = 50;

/// Checks convexity, `Δu ≥ κu`, `|∇u| ≤ Ku` on a grid over
/// `[-half_width, half_width]²` and `max_B u ≥ (1 + κr²/4) min_B u` on
/// random balls.
pub fn check_hypotheses(u: &UFunction, kappa: f64, k_bound: f64, half_width: f64, seed: u64) -> HypothesisReport {
    let mut report = HypothesisReport {
        violations: Vec::new(),
        min_convexity_margin: f64::INFINITY,
        min_laplacian_margin: f64::INFINITY,
        min_gradient_margin: f64::INFINITY,
        min_ball_margin: f64::INFINITY,
        points: 0,
        balls: 0,
    };
    let record = |report: &mut HypothesisReport, h: Hypothesis, point: [f64; 2], radius: Option<f64>, margin: f64| {
        let slot = match h {
            Hypothesis::Convexity => &mut report.min_convexity_margin,
            Hypothesis::LaplacianLowerBound => &mut report.min_laplacian_margin,
            Hypothesis::GradientBound => &mut report.min_gradient_margin,
            Hypothesis::BallInequality => &mut report.min_ball_margin,
        };
        *slot = slot.min(margin);
        if margin < -HYPOTHESIS_SLACK || margin.is_nan() {
            report.violations.push(Violation { hypothesis: h, point, radius, margin });
        }
    };
    for i in 0..CHECK_GRID {
        for j in 0..CHECK_GRID {
            let y1 = -half_width + 2.0 * half_width * i as f64 / (CHECK_GRID - 1) as f64;
            let y2 = -half_width + 2.0 * half_width * j as f64 / (CHECK_GRID - 1) as f64;
            let d = u.derivatives(y1, y2);
            let h = d.hessian;
            let trace = h[0][0] + h[1][1];
            let disc = ((h[0][0] - h[1][1]).powi(2) + 4.0 * h[0][1] * h[0][1]).sqrt();
            let lambda_min = 0.5 * (trace - disc);
            let scale = d.value.max(f64::MIN_POSITIVE);
            record(
                &mut report,
                Hypothesis::Convexity,
                [y1, y2],
                None,
                (lambda_min + HYPOTHESIS_SLACK * trace.abs()) / scale.max(trace.abs()),
            );
            record(&mut report, Hypothesis::LaplacianLowerBound, [y1, y2], None, (trace - kappa * d.value) / scale);
            let grad = d.gradient[0].hypot(d.gradient[1]);
            record(&mut report, Hypothesis::GradientBound, [y1, y2], None, (k_bound * d.value - grad) / scale);
            report.points += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..BALLS {
        let c = [rng.random_range(-half_width..half_width), rng.random_range(-half_width..half_width)];
        let r: f64 = 1.0 - rng.random::<f64>();
        let (m, big) = ball_extremes(u, c, r);
        let margin = (big - (1.0 + kappa * r * r / 4.0) * m) / big.max(f64::MIN_POSITIVE);
        record(&mut report, Hypothesis::BallInequality, c, Some(r), margin);
        report.balls += 1;
    }
    report
}

// (min, max) of a convex function over the closed ball B(c, r). The maximum
// is attained on the boundary; the minimum either at the unconstrained
// minimizer (when it lies inside) or on the boundary.
fn ball_extremes(u: &UFunction, c: [f64; 2], r: f64) -> (f64, f64) {
    let on_circle = |t: f64| u.value(c[0] + r * t.cos(), c[1] + r * t.sin());
    let n = 256;
    let h = TAU / n as f64;
    let samples: Vec<f64> = (0..n).map(|k| on_circle(h * k as f64)).collect();
    let (imin, _) = samples.iter().enumerate().fold((0, f64::INFINITY), |a, (k, v)| if *v < a.1 { (k, *v) } else { a });
    let (imax, _) =
        samples.iter().enumerate().fold((0, f64::NEG_INFINITY), |a, (k, v)| if *v > a.1 { (k, *v) } else { a });
    let t_min = h * imin as f64;
    let t_max = h * imax as f64;
    let boundary_min = golden_min(on_circle, t_min - h, t_min + h).min(samples[imin]);
    let boundary_max = -golden_min(|t| -on_circle(t), t_max - h, t_max + h);
    let boundary_max = boundary_max.max(samples[imax]);

    let mut y = c;
    let mut interior = None;
    for _ in 0..100 {
        let d = u.derivatives(y[0], y[1]);
        let hm = d.hessian;
        let det = hm[0][0] * hm[1][1] - hm[0][1] * hm[1][0];
        let step = if det > 1e-300 * (hm[0][0] + hm[1][1]).powi(2) && det > 0.0 {
            [
                -(hm[1][1] * d.gradient[0] - hm[0][1] * d.gradient[1]) / det,
                -(hm[0][0] * d.gradient[1] - hm[1][0] * d.gradient[0]) / det,
            ]
        } else {
            [-d.gradient[0], -d.gradient[1]]
        };
        let mut t = 1.0;
        let mut next = [y[0] + step[0], y[1] + step[1]];
        while u.value(next[0], next[1]) > d.value && t > 1e-12 {
            t *= 0.5;
            next = [y[0] + t * step[0], y[1] + t * step[1]];
        }
        let moved = (t * step[0]).hypot(t * step[1]);
        y = next;
        if (y[0] - c[0]).hypot(y[1] - c[1]) > r {
            break;
        }
        if moved <= 1e-13 * (1.0 + y[0].hypot(y[1])) {
            interior = Some(u.value(y[0], y[1]));
            break;
        }
    }
    let min = interior.map_or(boundary_min, |v| v.min(boundary_min));
    (min, boundary_max)
}

/// `(1/2π) ∫∫_{[-L, L]²} log(1 + 4u/(u - 1)²) e^{-γ²|y|²/2} dy` by the
/// midpoint rule with `n` cells per side.
pub fn singular_integral(u: &UFunction, gamma: f64, half_width: f64, n: usize) -> Result<f64> {
    let h = 2.0 * half_width / n as f64;
    let mut total = 0.0;
    for i in 0..n {
        let y1 = -half_width + (i as f64 + 0.5) * h;
        for j in 0..n {
            let y2 = -half_width + (j as f64 + 0.5) * h;
            let v = u.value(y1, y2);
            let inner = (4.0 * v / (v - 1.0).powi(2)).ln_1p();
            total += inner * (-0.5 * gamma * gamma * (y1 * y1 + y2 * y2)).exp();
        }
    }
    let out = total * h * h / TAU;
    if !out.is_finite() {
        return Err(Error::Quadrature("singular integral is not finite".into()));
    }
    Ok(out)
}
