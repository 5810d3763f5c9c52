//! Phase tracking along piecewise contours (circular arcs and radial segments).

use std::f64::consts::{FRAC_PI_4, TAU};

use num_complex::Complex64;

use crate::clark::DiscFunction;

/// Smallest `|f|` tolerated on a contour before it counts as passing through
/// a zero. It is tiny so that contours around high-order zeros stay usable;
/// contours merely close to a zero show up as unresolved phase instead.
pub const MIN_CONTOUR_MODULUS: f64 = 1e-200;

const MAX_DEPTH: u32 = 48;
// Per-edge floor on the initial samples; fewer lets a winding of exactly one
// turn per step alias to zero.
const MIN_SAMPLES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Edge {
    /// Arc of radius `r` from angle `from` to angle `to`.
    Arc { r: f64, from: f64, to: f64 },
    /// Radial segment at `angle` from radius `from` to radius `to`.
    Ray { angle: f64, from: f64, to: f64 },
}

impl Edge {
    fn at(self, t: f64) -> Complex64 {
        match self {
            Edge::Arc { r, from, to } => Complex64::from_polar(r, from + t * (to - from)),
            Edge::Ray { angle, from, to } => Complex64::from_polar(from + t * (to - from), angle),
        }
    }

    fn length(self) -> f64 {
        match self {
            Edge::Arc { r, from, to } => r * (to - from).abs(),
            Edge::Ray { from, to, .. } => (to - from).abs(),
        }
    }

    fn outer_radius(self) -> f64 {
        match self {
            Edge::Arc { r, .. } => r,
            Edge::Ray { from, to, .. } => from.max(to),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum TrackError {
    /// The contour passes too close to a zero.
    Degenerate,
    /// Phase increments could not be resolved.
    Precision,
    /// The evaluation budget ran out.
    Budget,
}

/// Counts evaluations and turns phase increments into winding numbers.
pub(crate) struct Tracker<'a, F: DiscFunction + ?Sized> {
    pub f: &'a F,
    pub evaluations: usize,
    pub budget: usize,
}

impl<'a, F: DiscFunction + ?Sized> Tracker<'a, F> {
    pub fn new(f: &'a F, budget: usize) -> Self {
        Tracker { f, evaluations: 0, budget }
    }

    pub fn charge(&mut self, n: usize) -> Result<(), TrackError> {
        self.evaluations += n;
        if self.evaluations > self.budget {
            Err(TrackError::Budget)
        } else {
            Ok(())
        }
    }

    fn eval(&mut self, z: Complex64) -> Result<Complex64, TrackError> {
        self.charge(1)?;
        let v = self.f.value(z);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(TrackError::Precision);
        }
        if v.norm() < MIN_CONTOUR_MODULUS {
            return Err(TrackError::Degenerate);
        }
        Ok(v)
    }

    fn segment(
        &mut self,
        edge: Edge,
        (t0, v0): (f64, Complex64),
        (t1, v1): (f64, Complex64),
        depth: u32,
    ) -> Result<f64, TrackError> {
        let d = (v1 / v0).arg();
        if d.abs() < FRAC_PI_4 {
            return Ok(d);
        }
        if depth >= MAX_DEPTH {
            return Err(TrackError::Precision);
        }
        let tm = 0.5 * (t0 + t1);
        let vm = self.eval(edge.at(tm))?;
        Ok(self.segment(edge, (t0, v0), (tm, vm), depth + 1)? + self.segment(edge, (tm, vm), (t1, v1), depth + 1)?)
    }

    /// Total change of `arg f` along one edge.
    pub fn phase_change(&mut self, edge: Edge) -> Result<f64, TrackError> {
        let len = edge.length();
        if len == 0.0 {
            return Ok(0.0);
        }
        let step = 0.5 * (1.0 - edge.outer_radius()).max(1e-9);
        let n = ((len / step).ceil() as usize).clamp(MIN_SAMPLES, 1 << 22);
        let mut total = 0.0;
        let mut prev = (0.0, self.eval(edge.at(0.0))?);
        for k in 1..=n {
            let t = k as f64 / n as f64;
            let cur = (t, self.eval(edge.at(t))?);
            total += self.segment(edge, prev, cur, 0)?;
            prev = cur;
        }
        Ok(total)
    }

    /// Winding number of `f` around a closed chain of edges.
    pub fn winding(&mut self, edges: &[Edge]) -> Result<i64, TrackError> {
        let mut total = 0.0;
        for e in edges {
            total += self.phase_change(*e)?;
        }
        let w = total / TAU;
        let k = w.round();
        if (w - k).abs() > 0.25 {
            return Err(TrackError::Precision);
        }
        Ok(k as i64)
    }
}

/// Edges of the circle `|z| = r`, traversed counterclockwise.
pub(crate) fn circle(r: f64) -> [Edge; 1] {
    [Edge::Arc { r, from: 0.0, to: TAU }]
}

/// Edges of the polar rectangle `[r0, r1] x [a0, a1]`, counterclockwise.
pub(crate) fn sector(r0: f64, r1: f64, a0: f64, a1: f64) -> [Edge; 4] {
    [
        Edge::Arc { r: r1, from: a0, to: a1 },
        Edge::Ray { angle: a1, from: r1, to: r0 },
        Edge::Arc { r: r0, from: a1, to: a0 },
        Edge::Ray { angle: a0, from: r0, to: r1 },
    ]
}
