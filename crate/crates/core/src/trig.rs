//! Real trigonometric basis on the circle.
//!
//! Index 0 is the constant function, index `2j-1` is `sin(jθ)` and index `2j`
//! is `cos(jθ)`. A polynomial of degree `D` has `2D + 1` coefficients.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Frequency `j` of basis function `index`.
pub fn frequency(index: usize) -> usize {
    index.div_ceil(2)
}

/// Number of basis functions up to degree `degree`.
pub fn dimension(degree: usize) -> usize {
    2 * degree + 1
}

/// Value of basis function `index` at `theta`.
pub fn basis(index: usize, theta: f64) -> f64 {
    if index == 0 {
        return 1.0;
    }
    let j = frequency(index) as f64;
    if index % 2 == 1 {
        (j * theta).sin()
    } else {
        (j * theta).cos()
    }
}

/// All basis values up to `dim` at `theta`, computed by the angle-addition
/// recurrence.
pub fn basis_values(dim: usize, theta: f64, out: &mut Vec<f64>) {
    out.clear();
    out.push(1.0);
    let (s1, c1) = theta.sin_cos();
    let (mut s, mut c) = (s1, c1);
    while out.len() < dim {
        out.push(s);
        if out.len() < dim {
            out.push(c);
        }
        let next_s = s * c1 + c * s1;
        c = c * c1 - s * s1;
        s = next_s;
    }
}

/// Trigonometric polynomial in the real basis.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPoly {
    coeffs: Vec<f64>,
}

impl TrigPoly {
    /// Builds a polynomial; the coefficient count must be odd.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len().is_multiple_of(2) {
            return Err(Error::Parameter(format!(
                "trigonometric polynomial needs an odd number of coefficients, got {}",
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Parameter("non-finite trigonometric coefficient".into()));
        }
        Ok(TrigPoly { coeffs })
    }

    pub fn zero(degree: usize) -> Self {
        TrigPoly { coeffs: vec![0.0; dimension(degree)] }
    }

    /// The single basis function `index`, padded to `degree`.
    pub fn basis_function(index: usize, degree: usize) -> Self {
        let mut p = Self::zero(degree.max(frequency(index)));
        p.coeffs[index] = 1.0;
        p
    }

    pub fn degree(&self) -> usize {
        (self.coeffs.len() - 1) / 2
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.coeffs.iter().enumerate().map(|(i, c)| c * basis(i, theta)).sum()
    }

    pub fn eval_many(&self, thetas: &[f64]) -> Vec<f64> {
        let mut buf = Vec::with_capacity(self.coeffs.len());
        thetas
            .iter()
            .map(|&t| {
                basis_values(self.coeffs.len(), t, &mut buf);
                buf.iter().zip(&self.coeffs).map(|(b, c)| b * c).sum()
            })
            .collect()
    }

    /// Euclidean norm of the coefficient vector.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        TrigPoly { coeffs: self.coeffs.iter().map(|c| c * factor).collect() }
    }

    /// Coefficient inner product.
    pub fn dot(&self, other: &[f64]) -> f64 {
        self.coeffs.iter().zip(other).map(|(a, b)| a * b).sum()
    }
}

/// Symmetric kernel `g(θ, θ') = Σ G_ab e_a(θ) e_b(θ')` with a finite
/// coefficient matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigKernel {
    coeffs: DMatrix<f64>,
}

impl TrigKernel {
    /// Validates squareness, odd size and symmetry (to 1e-12 relative).
    pub fn new(coeffs: DMatrix<f64>) -> Result<Self> {
        let n = coeffs.nrows();
        if n != coeffs.ncols() || n.is_multiple_of(2) {
            return Err(Error::Parameter(format!(
                "kernel coefficient matrix must be square of odd size, got {}x{}",
                coeffs.nrows(),
                coeffs.ncols()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Parameter("non-finite kernel coefficient".into()));
        }
        let scale = coeffs.amax().max(1.0);
        let asym = (&coeffs - coeffs.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(Error::Parameter(format!("kernel coefficients are not symmetric (defect {asym:e})")));
        }
        let sym = (&coeffs + coeffs.transpose()) * 0.5;
        Ok(TrigKernel { coeffs: sym })
    }

    pub fn zero(degree: usize) -> Self {
        let d = dimension(degree);
        TrigKernel { coeffs: DMatrix::zeros(d, d) }
    }

    /// `weight · e_index ⊗ e_index`.
    pub fn rank_one(index: usize, weight: f64) -> Self {
        let d = dimension(frequency(index));
        let mut m = DMatrix::zeros(d, d);
        m[(index, index)] = weight;
        TrigKernel { coeffs: m }
    }

    /// Constant kernel `g ≡ c`.
    pub fn constant(c: f64) -> Self {
        TrigKernel { coeffs: DMatrix::from_element(1, 1, c) }
    }

    /// Parses the plain-text format: a `degree D` line followed by
    /// `i j value` entries (mirrored across the diagonal). `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut degree = None;
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = || Error::Parameter(format!("kernel file line {}: cannot parse {raw:?}", lineno + 1));
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields.as_slice() {
                ["degree", d] => degree = Some(d.parse::<usize>().map_err(|_| bad())?),
                [i, j, v] => entries.push((
                    i.parse::<usize>().map_err(|_| bad())?,
                    j.parse::<usize>().map_err(|_| bad())?,
                    v.parse::<f64>().map_err(|_| bad())?,
                )),
                _ => return Err(bad()),
            }
        }
        let degree = degree.ok_or_else(|| Error::Parameter("kernel file lacks a `degree` line".into()))?;
        let d = dimension(degree);
        let mut m = DMatrix::zeros(d, d);
        for (i, j, v) in entries {
            if i >= d || j >= d {
                return Err(Error::Parameter(format!("kernel entry ({i},{j}) exceeds degree {degree}")));
            }
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        Self::new(m)
    }

    pub fn degree(&self) -> usize {
        (self.coeffs.nrows() - 1) / 2
    }

    pub fn coeffs(&self) -> &DMatrix<f64> {
        &self.coeffs
    }

    pub fn eval(&self, theta: f64, theta2: f64) -> f64 {
        let d = self.coeffs.nrows();
        let mut a = Vec::with_capacity(d);
        let mut b = Vec::with_capacity(d);
        basis_values(d, theta, &mut a);
        basis_values(d, theta2, &mut b);
        let (a, b) = (DVector::from_vec(a), DVector::from_vec(b));
        a.dot(&(&self.coeffs * b))
    }

    /// Coefficient matrix embedded into a larger basis of dimension `dim`.
    pub fn embedded(&self, dim: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(dim, dim);
        let d = self.coeffs.nrows().min(dim);
        m.view_mut((0, 0), (d, d)).copy_from(&self.coeffs.view((0, 0), (d, d)));
        m
    }

    /// Share of the weighted Sobolev norm `Σ (1+j_a²)(1+j_b²) G_ab²` carried
    /// by the top frequency shell. Values near 1 mean the coefficients show no
    /// decay, so the truncated kernel says little about the full one.
    pub fn top_shell_fraction(&self) -> f64 {
        let d = self.coeffs.nrows();
        let top = self.degree();
        let (mut total, mut shell) = (0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                let (fi, fj) = (frequency(i), frequency(j));
                let w = (1.0 + (fi * fi) as f64) * (1.0 + (fj * fj) as f64) * self.coeffs[(i, j)].powi(2);
                total += w;
                if fi == top || fj == top {
                    shell += w;
                }
            }
        }
        if total == 0.0 {
            0.0
        } else {
            shell / total
        }
    }
}
