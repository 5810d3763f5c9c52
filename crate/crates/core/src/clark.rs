//! The inner function whose Clark measure at `α = 1` is a given positive
//! atomic measure.
//!
//! With `h(z) = Σ m_k (e_k + z)/(e_k - z)` (the Herglotz transform, `e_k =
//! e^{iθ_k}`), the function `φ = (h - 1)/(h + 1)` maps the disc into itself.
//! Writing `h = x + iy`, the modulus satisfies
//! `log|φ| = -½ log(1 + 4x/((x - 1)² + y²))`, which stays accurate when
//! `|φ|` is close to one.

use num_complex::Complex64;

use crate::chaos::ChaosMeasure;
use crate::error::{Error, Result};
use crate::field::Domain;

/// Largest modulus at which evaluations are trusted.
pub const GUARD_RADIUS: f64 = 1.0 - 1e-12;

/// A point of the open disc inside the evaluation guard.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscPoint(Complex64);

impl DiscPoint {
    pub fn new(z: Complex64) -> Result<Self> {
        if !(z.norm() <= GUARD_RADIUS) {
            return Err(Error::Parameter(format!("point {z} is outside the disc |z| <= 1 - 1e-12")));
        }
        Ok(DiscPoint(z))
    }

    pub fn polar(r: f64, angle: f64) -> Result<Self> {
        Self::new(Complex64::from_polar(r, angle))
    }

    pub fn z(self) -> Complex64 {
        self.0
    }
}

/// Analytic self-map of the disc that the zero finder can work with.
///
/// Methods take raw complex numbers; callers keep `|z|` below
/// [`DiscFunction::search_limit`].
pub trait DiscFunction: Sync {
    fn value(&self, z: Complex64) -> Complex64;

    fn derivative(&self, z: Complex64) -> Complex64;

    fn value_and_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        (self.value(z), self.derivative(z))
    }

    /// `log|f(z)|`, possibly `-∞` at an exact zero.
    fn log_abs(&self, z: Complex64) -> f64 {
        self.value(z).norm().ln()
    }

    /// Radius beyond which zeros are not meaningful for this function.
    fn search_limit(&self) -> f64 {
        GUARD_RADIUS
    }
}

/// One atom `m δ_θ` of an explicit measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub theta: f64,
    pub mass: f64,
}

/// Evaluator for `h`, `φ` and related quantities of an atomic measure.
#[derive(Debug, Clone)]
pub struct InnerFunctionEval {
    cos: Vec<f64>,
    sin: Vec<f64>,
    mass: Vec<f64>,
    total: f64,
    limit: f64,
}

/// `h` split into the Poisson and conjugate Poisson parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HerglotzParts {
    pub x: f64,
    pub y: f64,
}

impl InnerFunctionEval {
    pub fn from_atoms(atoms: &[Atom]) -> Result<Self> {
        if atoms.iter().any(|a| !(a.mass >= 0.0) || !a.mass.is_finite() || !a.theta.is_finite()) {
            return Err(Error::Parameter("atom masses must be finite and nonnegative".into()));
        }
        let kept: Vec<&Atom> = atoms.iter().filter(|a| a.mass > 0.0).collect();
        let total: f64 = kept.iter().map(|a| a.mass).sum();
        if !(total > 0.0) {
            return Err(Error::Parameter("measure has zero total mass".into()));
        }
        Ok(InnerFunctionEval {
            cos: kept.iter().map(|a| a.theta.cos()).collect(),
            sin: kept.iter().map(|a| a.theta.sin()).collect(),
            mass: kept.iter().map(|a| a.mass).collect(),
            total,
            limit: GUARD_RADIUS,
        })
    }

    /// Evaluator for a chaos measure on the circle. Zero searches are capped
    /// four grid spacings away from the boundary.
    pub fn from_measure(mu: &ChaosMeasure) -> Result<Self> {
        if mu.grid().domain() != Domain::Circle {
            return Err(Error::InvalidGrid("the Herglotz transform needs a measure on the circle".into()));
        }
        let atoms: Vec<Atom> = mu.atoms().map(|(theta, mass)| Atom { theta, mass }).collect();
        let mut f = Self::from_atoms(&atoms)?;
        f.limit = 1.0 - 4.0 * mu.grid().spacing();
        Ok(f)
    }

    /// `n` atoms of mass `1/n` at the `n`-th roots of unity; `φ(z) = zⁿ`.
    pub fn roots_of_unity(n: usize) -> Result<Self> {
        let atoms: Vec<Atom> =
            (0..n).map(|k| Atom { theta: std::f64::consts::TAU * k as f64 / n as f64, mass: 1.0 / n as f64 }).collect();
        Self::from_atoms(&atoms)
    }

    pub fn total_mass(&self) -> f64 {
        self.total
    }

    pub fn atom_count(&self) -> usize {
        self.mass.len()
    }

    // Σ m_k / (1 - z ē_k), the sum shared by h and h'.
    fn kernel_sums(&self, z: Complex64, with_derivative: bool) -> (Complex64, Complex64) {
        let (mut s_re, mut s_im, mut d_re, mut d_im) = (0.0, 0.0, 0.0, 0.0);
        for k in 0..self.mass.len() {
            let (c, s, m) = (self.cos[k], self.sin[k], self.mass[k]);
            // w = 1 - z ē
            let w_re = 1.0 - (z.re * c + z.im * s);
            let w_im = -(z.im * c - z.re * s);
            let inv_abs2 = 1.0 / (w_re * w_re + w_im * w_im);
            let (q_re, q_im) = (w_re * inv_abs2, -w_im * inv_abs2);
            s_re += m * q_re;
            s_im += m * q_im;
            if with_derivative {
                // ē / w²
                let (q2_re, q2_im) = (q_re * q_re - q_im * q_im, 2.0 * q_re * q_im);
                d_re += m * (c * q2_re + s * q2_im);
                d_im += m * (c * q2_im - s * q2_re);
            }
        }
        (Complex64::new(s_re, s_im), Complex64::new(d_re, d_im))
    }

    fn h_raw(&self, z: Complex64) -> Complex64 {
        let (s, _) = self.kernel_sums(z, false);
        2.0 * s - self.total
    }

    fn h_and_derivative_raw(&self, z: Complex64) -> (Complex64, Complex64) {
        let (s, d) = self.kernel_sums(z, true);
        (2.0 * s - self.total, 2.0 * d)
    }

    fn parts_raw(&self, z: Complex64) -> HerglotzParts {
        let r2 = z.norm_sqr();
        let (mut x, mut y) = (0.0, 0.0);
        for k in 0..self.mass.len() {
            let (c, s, m) = (self.cos[k], self.sin[k], self.mass[k]);
            let inv = m / ((z.re - c).powi(2) + (z.im - s).powi(2));
            x += inv;
            // -2|z| sin(θ - arg z) = -2 (sin θ Re z - cos θ Im z)
            y += inv * (-2.0 * (s * z.re - c * z.im));
        }
        HerglotzParts { x: x * (1.0 - r2), y }
    }

    /// Herglotz transform `h(z)`.
    pub fn herglotz(&self, z: DiscPoint) -> Complex64 {
        self.h_raw(z.0)
    }

    /// `φ(z) = (h - 1)/(h + 1)`.
    pub fn phi(&self, z: DiscPoint) -> Complex64 {
        let h = self.h_raw(z.0);
        (h - 1.0) / (h + 1.0)
    }

    /// Poisson integral `x(z) = Re h(z)`.
    pub fn poisson_x(&self, z: DiscPoint) -> f64 {
        self.parts_raw(z.0).x
    }

    /// Conjugate Poisson integral `y(z) = Im h(z)`.
    pub fn conj_poisson_y(&self, z: DiscPoint) -> f64 {
        self.parts_raw(z.0).y
    }

    /// Both parts of `h` from the real kernels.
    pub fn parts(&self, z: DiscPoint) -> HerglotzParts {
        self.parts_raw(z.0)
    }

    /// `log|φ(z)|` via the Poisson parts; `-∞` at an exact zero.
    pub fn log_abs_phi(&self, z: DiscPoint) -> f64 {
        log_abs_from_parts(self.parts_raw(z.0))
    }

    /// `φ'(z) = 2h'(z)/(h(z) + 1)²`.
    pub fn phi_derivative(&self, z: DiscPoint) -> Complex64 {
        let (h, dh) = self.h_and_derivative_raw(z.0);
        2.0 * dh / ((h + 1.0) * (h + 1.0))
    }
}

/// `log|φ|` from `h = x + iy`, stable when `|φ|` is near one.
pub fn log_abs_from_parts(p: HerglotzParts) -> f64 {
    let den = (p.x - 1.0).powi(2) + p.y * p.y;
    if den == 0.0 {
        return f64::NEG_INFINITY;
    }
    -0.5 * (4.0 * p.x / den).ln_1p()
}

impl DiscFunction for InnerFunctionEval {
    fn value(&self, z: Complex64) -> Complex64 {
        let h = self.h_raw(z);
        (h - 1.0) / (h + 1.0)
    }

    fn derivative(&self, z: Complex64) -> Complex64 {
        let (h, dh) = self.h_and_derivative_raw(z);
        2.0 * dh / ((h + 1.0) * (h + 1.0))
    }

    fn value_and_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let (h, dh) = self.h_and_derivative_raw(z);
        let hp = h + 1.0;
        ((h - 1.0) / hp, 2.0 * dh / (hp * hp))
    }

    fn log_abs(&self, z: Complex64) -> f64 {
        log_abs_from_parts(self.parts_raw(z))
    }

    fn search_limit(&self) -> f64 {
        self.limit
    }
}
