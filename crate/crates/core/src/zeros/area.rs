//! The weighted area integral `∫_{|z|≤R} (1 - |z|²)^{β-2} log(1/|φ(z)|) dA(z)`.
//!
//! Polar cells are integrated with a tensor Gauss-Legendre rule. In cells
//! that contain a zero `z_k` the logarithmic singularity is subtracted; the
//! remainder is smooth, and each subtracted `log(1/|z - z_k|)` term is
//! integrated with a Duffy transform around `z_k`.

use std::collections::HashMap;
use std::f64::consts::TAU;

use num_complex::Complex64;

use super::{locate_zeros, Zero, DEFAULT_BUDGET};
use crate::clark::DiscFunction;
use crate::error::{Error, Result};
use crate::quad::Rule;

const CELL_NODES: usize = 8;
const DUFFY_NODES: usize = 16;

/// Closed form of the integral for a constant `φ ≡ c` with `log(1/|c|) = 1`.
pub fn constant_area_integral(beta: f64, r_max: f64) -> f64 {
    TAU * (1.0 - (1.0 - r_max * r_max).powf(beta - 1.0)) / (2.0 * (beta - 1.0))
}

fn radial_breaks(r_max: f64) -> Vec<f64> {
    let mut breaks = vec![0.0];
    let mut cur: f64 = 0.0;
    loop {
        let next = if cur < 0.5 { cur + 0.25 } else { 1.0 - 0.5 * (1.0 - cur) };
        if next >= r_max {
            let width = breaks.len().checked_sub(2).map(|i| cur - breaks[i]);
            if width.is_some_and(|w| r_max - cur < 0.25 * w) {
                breaks.pop();
            }
            breaks.push(r_max);
            return breaks;
        }
        breaks.push(next);
        cur = next;
    }
}

fn check_args(beta: f64, r_max: f64) -> Result<()> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Parameter(format!("beta must lie in (0, 1), got {beta}")));
    }
    if !(r_max > 0.0 && r_max < 1.0) {
        return Err(Error::Parameter(format!("r_max must lie in (0, 1), got {r_max}")));
    }
    Ok(())
}

/// Locates the zeros of `f` and integrates the weighted area functional.
pub fn area_functional<F: DiscFunction + ?Sized>(f: &F, beta: f64, r_max: f64) -> Result<f64> {
    check_args(beta, r_max)?;
    if r_max > f.search_limit() {
        return Err(Error::Resolution { scale: 1.0 - r_max, spacing: 1.0 - f.search_limit() });
    }
    let zs = locate_zeros(f, r_max, DEFAULT_BUDGET)?;
    if zs.is_partial() {
        return Err(Error::Quadrature("zero search ran out of budget".into()));
    }
    area_functional_with_zeros(f, beta, r_max, zs.zeros())
}

struct Integrand {
    beta: f64,
}

impl Integrand {
    // Radial weight times the polar Jacobian.
    fn weight(&self, rho: f64) -> f64 {
        (1.0 - rho * rho).powf(self.beta - 2.0) * rho
    }
}

/// The area functional given the zeros of `f` inside the disc.
pub fn area_functional_with_zeros<F: DiscFunction + ?Sized>(
    f: &F,
    beta: f64,
    r_max: f64,
    zeros: &[Zero],
) -> Result<f64> {
    check_args(beta, r_max)?;
    let breaks = radial_breaks(r_max);
    let cells_per_panel: Vec<usize> =
        breaks.windows(2).map(|w| ((TAU * w[1] / (w[1] - w[0])).ceil() as usize).max(8)).collect();

    let mut singular: HashMap<(usize, usize), Vec<&Zero>> = HashMap::new();
    for z in zeros {
        let rho = z.z().norm();
        if rho > r_max || rho < 1e-12 {
            continue;
        }
        let panel = breaks.partition_point(|b| *b <= rho).saturating_sub(1).min(breaks.len() - 2);
        let n = cells_per_panel[panel];
        let theta = z.z().arg().rem_euclid(TAU);
        let cell = ((theta / (TAU / n as f64)) as usize).min(n - 1);
        singular.entry((panel, cell)).or_default().push(z);
    }

    let g = Integrand { beta };
    let rule = Rule::new(CELL_NODES);
    let duffy = Rule::new(DUFFY_NODES);
    let mut total = 0.0;
    for (p, w) in breaks.windows(2).enumerate() {
        let (ra, rb) = (w[0], w[1]);
        let n = cells_per_panel[p];
        let dt = TAU / n as f64;
        for c in 0..n {
            let (ta, tb) = (c as f64 * dt, (c + 1) as f64 * dt);
            let zs = singular.get(&(p, c)).map(Vec::as_slice).unwrap_or(&[]);
            let mut cell = 0.0;
            for (rho, wr) in rule.on(ra, rb) {
                let weight = g.weight(rho);
                for (theta, wt) in rule.on(ta, tb) {
                    let z = Complex64::from_polar(rho, theta);
                    let mut l = -f.log_abs(z);
                    for zk in zs {
                        l -= zk.multiplicity as f64 * -(z - zk.z()).norm().ln();
                    }
                    cell += wr * wt * weight * l;
                }
            }
            for zk in zs {
                let z0 = zk.z();
                let log_term = |rho: f64, theta: f64| -> f64 {
                    g.weight(rho) * -(Complex64::from_polar(rho, theta) - z0).norm().ln()
                };
                let corner = (z0.norm(), z0.arg().rem_euclid(TAU).clamp(ta, tb));
                cell += zk.multiplicity as f64 * duffy_rect(&duffy, (ra, rb), (ta, tb), corner, log_term);
            }
            if !cell.is_finite() {
                return Err(Error::Quadrature(format!("cell [{ra}, {rb}] x [{ta}, {tb}] evaluated to {cell}")));
            }
            total += cell;
        }
    }
    Ok(total)
}

// Integral over a rectangle of a function singular at the interior point
// `corner`: the rectangle is cut into four pieces meeting at the point and
// each piece is integrated with the Duffy map (u, v) -> (u, uv) / (uv, u).
fn duffy_rect(
    rule: &Rule,
    (xa, xb): (f64, f64),
    (ya, yb): (f64, f64),
    (x0, y0): (f64, f64),
    g: impl Fn(f64, f64) -> f64,
) -> f64 {
    let mut total = 0.0;
    for x1 in [xa, xb] {
        for y1 in [ya, yb] {
            let (dx, dy) = (x1 - x0, y1 - y0);
            if dx == 0.0 || dy == 0.0 {
                continue;
            }
            let jac = (dx * dy).abs();
            let mut piece = 0.0;
            // u = s³ flattens the u·log u behaviour at the corner.
            for (s, ws) in rule.on(0.0, 1.0) {
                let u = s * s * s;
                let wu = ws * 3.0 * s * s;
                for (v, wv) in rule.on(0.0, 1.0) {
                    let a = g(x0 + dx * u, y0 + dy * u * v);
                    let b = g(x0 + dx * u * v, y0 + dy * u);
                    piece += wu * wv * u * (a + b);
                }
            }
            total += jac * piece;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn breaks_are_increasing_and_end_at_radius() {
        for &r in &[0.3, 0.5, 0.9, 0.99, 0.999] {
            let b = radial_breaks(r);
            assert_eq!(*b.last().unwrap(), r);
            assert!(b.windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn duffy_integrates_planar_log() {
        // Over the unit square, ∫∫ log(x² + y²) = log 2 - 3 + π/2.
        let rule = Rule::new(16);
        let v = duffy_rect(&rule, (-1.0, 1.0), (-1.0, 1.0), (0.0, 0.0), |x, y| (x * x + y * y).ln());
        let exact = 4.0 * (2f64.ln() - 3.0 + std::f64::consts::FRAC_PI_2);
        assert!((v - exact).abs() < 1e-10, "{v} vs {exact}");
    }
}
