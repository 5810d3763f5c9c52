use num_complex::Complex64;

use crate::clark::{DiscFunction, GUARD_RADIUS};
use crate::error::{Error, Result};

/// Finite Blaschke product with prescribed zeros, normalized so that each
/// factor is `z` for a zero at the origin and `(ā/|a|)(a - z)/(1 - āz)`
/// otherwise. Used as an oracle for the zero finder.
#[derive(Debug, Clone, PartialEq)]
pub struct BlaschkeProduct {
    zeros: Vec<Complex64>,
}

impl BlaschkeProduct {
    pub fn zeros(&self) -> &[Complex64] {
        &self.zeros
    }

    pub fn degree(&self) -> usize {
        self.zeros.len()
    }
}

/// Builds the Blaschke product with the given zeros (all strictly inside the disc).
pub fn make_blaschke(zeros: &[Complex64]) -> Result<BlaschkeProduct> {
    if let Some(z) = zeros.iter().find(|z| !(z.norm() < 1.0)) {
        return Err(Error::Parameter(format!("Blaschke zero {z} is not inside the unit disc")));
    }
    Ok(BlaschkeProduct { zeros: zeros.to_vec() })
}

// One factor and its derivative.
fn factor(a: Complex64, z: Complex64) -> (Complex64, Complex64) {
    if a == Complex64::new(0.0, 0.0) {
        return (z, Complex64::new(1.0, 0.0));
    }
    let unit = a.conj() / a.norm();
    let den = 1.0 - a.conj() * z;
    (unit * (a - z) / den, unit * (a.norm_sqr() - 1.0) / (den * den))
}

impl DiscFunction for BlaschkeProduct {
    fn value(&self, z: Complex64) -> Complex64 {
        self.zeros.iter().map(|a| factor(*a, z).0).product()
    }

    fn derivative(&self, z: Complex64) -> Complex64 {
        self.value_and_derivative(z).1
    }

    fn value_and_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut value = Complex64::new(1.0, 0.0);
        let mut deriv = Complex64::new(0.0, 0.0);
        for a in &self.zeros {
            let (b, db) = factor(*a, z);
            deriv = deriv * b + value * db;
            value *= b;
        }
        (value, deriv)
    }

    fn log_abs(&self, z: Complex64) -> f64 {
        // 1 - |b|² = (1 - |z|²)(1 - |a|²)/|1 - āz|² avoids cancellation near |b| = 1.
        let r2 = 1.0 - z.norm_sqr();
        let mut total = 0.0;
        for a in &self.zeros {
            let d = (a - z).norm_sqr();
            if d == 0.0 {
                return f64::NEG_INFINITY;
            }
            let t = r2 * (1.0 - a.norm_sqr()) / (1.0 - a.conj() * z).norm_sqr();
            total += if t < 0.5 { 0.5 * (-t).ln_1p() } else { 0.5 * (d / (1.0 - a.conj() * z).norm_sqr()).ln() };
        }
        total
    }

    fn search_limit(&self) -> f64 {
        GUARD_RADIUS
    }
}
