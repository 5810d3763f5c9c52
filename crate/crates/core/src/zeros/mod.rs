//! Zeros of analytic self-maps of the disc.
//!
//! Zeros are counted with the argument principle along adaptively sampled
//! contours, isolated by recursive subdivision into discs, rings and polar
//! rectangles, and polished by Newton's method. Multiplicities come from the
//! contour count of the final cell.

mod area;
mod blaschke;
mod contour;

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::clark::DiscFunction;
use crate::error::{Error, Result};

pub use area::{area_functional, area_functional_with_zeros, constant_area_integral};
pub use blaschke::{make_blaschke, BlaschkeProduct};
pub use contour::MIN_CONTOUR_MODULUS;

use contour::{circle, sector, TrackError, Tracker};

/// Default cap on function evaluations for one zero search.
pub const DEFAULT_BUDGET: usize = 20_000_000;

/// Cells smaller than this are not split further.
const MIN_CELL_DIAMETER: f64 = 1e-6;
/// Cells at most this wide whose zeros cannot be separated numerically are
/// recorded as one zero of the cell's total multiplicity.
const CLUSTER_DIAMETER: f64 = 2e-2;
/// Distances below this identify two located zeros.
const MERGE_DISTANCE: f64 = 1e-8;
/// Radius offsets tried when a circle passes too close to a zero.
const NUDGES: [f64; 9] = [0.0, 1e-4, -1e-4, 2e-4, -2e-4, 3e-4, -3e-4, 4e-4, -4e-4];
/// Split positions tried when a child contour passes too close to a zero.
const SPLIT_FRACTIONS: [f64; 8] = [0.5, 0.45, 0.55, 0.4, 0.6, 0.35, 0.65, 0.3];

/// A located zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Zero {
    pub re: f64,
    pub im: f64,
    pub multiplicity: usize,
}

impl Zero {
    pub fn z(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn one_minus_abs(&self) -> f64 {
        1.0 - self.z().norm()
    }
}

/// Zeros found inside `|z| <= r_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroSet {
    zeros: Vec<Zero>,
    r_max: f64,
    annulus_counts: Vec<(u32, usize)>,
    partial: bool,
    evaluations: usize,
}

/// Dyadic annulus index `k` with `1 - |z| ∈ (2^{-k-1}, 2^{-k}]`.
pub fn annulus_index(z: Complex64) -> u32 {
    let gap = 1.0 - z.norm();
    if gap >= 1.0 {
        return 0;
    }
    let mut k = (-gap.log2()).floor() as i64;
    // Guard the floor against rounding at exact powers of two.
    while k > 0 && gap > 2f64.powi(-(k as i32)) {
        k -= 1;
    }
    while gap <= 2f64.powi(-(k as i32) - 1) {
        k += 1;
    }
    k.max(0) as u32
}

impl ZeroSet {
    fn new(mut zeros: Vec<Zero>, r_max: f64, partial: bool, evaluations: usize) -> Self {
        zeros.sort_by(|a, b| a.z().norm().total_cmp(&b.z().norm()).then(a.re.total_cmp(&b.re)));
        let mut counts = BTreeMap::new();
        for z in &zeros {
            *counts.entry(annulus_index(z.z())).or_insert(0) += z.multiplicity;
        }
        ZeroSet { zeros, r_max, annulus_counts: counts.into_iter().collect(), partial, evaluations }
    }

    pub fn zeros(&self) -> &[Zero] {
        &self.zeros
    }

    /// Search radius actually used (the requested one, possibly nudged off a zero).
    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn annulus_counts(&self) -> &[(u32, usize)] {
        &self.annulus_counts
    }

    /// True when the evaluation budget ran out before every zero was isolated.
    pub fn is_partial(&self) -> bool {
        self.partial
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    pub fn total_multiplicity(&self) -> usize {
        self.zeros.iter().map(|z| z.multiplicity).sum()
    }

    /// Zeros with `|z| <= r`.
    pub fn within(&self, r: f64) -> impl Iterator<Item = &Zero> + '_ {
        self.zeros.iter().filter(move |z| z.z().norm() <= r)
    }
}

/// `Σ multiplicity · (1 - |z|)^β` over the recorded zeros.
pub fn beta_sum(zs: &ZeroSet, beta: f64) -> f64 {
    beta_sum_within(zs, beta, f64::INFINITY)
}

/// [`beta_sum`] restricted to zeros with `|z| <= r`.
pub fn beta_sum_within(zs: &ZeroSet, beta: f64, r: f64) -> f64 {
    zs.within(r).map(|z| z.multiplicity as f64 * z.one_minus_abs().powf(beta)).sum()
}

fn track_error(e: TrackError, radius: f64) -> Error {
    match e {
        TrackError::Degenerate => Error::ContourDegenerate { radius },
        TrackError::Precision => Error::Precision(format!("winding number not resolved near radius {radius}")),
        TrackError::Budget => Error::Precision("evaluation budget exhausted".into()),
    }
}

fn check_radius<F: DiscFunction + ?Sized>(f: &F, r: f64) -> Result<()> {
    if !(r > 0.0) {
        return Err(Error::Parameter(format!("search radius must be positive, got {r}")));
    }
    if r > f.search_limit() {
        return Err(Error::Resolution { scale: 1.0 - r, spacing: 1.0 - f.search_limit() });
    }
    Ok(())
}

// Winding number on |z| = r, nudging the radius off nearby zeros.
fn circle_count<F: DiscFunction + ?Sized>(
    tracker: &mut Tracker<'_, F>,
    r: f64,
) -> std::result::Result<(usize, f64), TrackError> {
    let limit = tracker.f.search_limit();
    let mut last = TrackError::Degenerate;
    for nudge in NUDGES {
        let radius = r + nudge;
        if radius <= 0.0 || radius > limit {
            continue;
        }
        match tracker.winding(&circle(radius)) {
            Ok(w) if w >= 0 => return Ok((w as usize, radius)),
            Ok(_) => return Err(TrackError::Precision),
            Err(e @ (TrackError::Degenerate | TrackError::Precision)) => last = e,
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

/// Number of zeros (with multiplicity) inside `|z| < r`.
pub fn count_zeros<F: DiscFunction + ?Sized>(f: &F, r: f64) -> Result<usize> {
    check_radius(f, r)?;
    let mut tracker = Tracker::new(f, DEFAULT_BUDGET);
    circle_count(&mut tracker, r).map(|(n, _)| n).map_err(|e| track_error(e, r))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Cell {
    Disc { r: f64 },
    Sector { r0: f64, r1: f64, a0: f64, a1: f64 },
}

impl Cell {
    fn diameter(self) -> f64 {
        match self {
            Cell::Disc { r } => 2.0 * r,
            Cell::Sector { r0, r1, a0, a1 } => {
                let span = a1 - a0;
                if span >= PI {
                    2.0 * r1
                } else {
                    let p = |r: f64, a: f64| Complex64::from_polar(r, a);
                    let chord = (p(r1, a0) - p(r1, a1)).norm();
                    let diag = (p(r1, a0) - p(r0, a1)).norm();
                    chord.max(diag).max(r1 - r0)
                }
            }
        }
    }

    fn center(self) -> Complex64 {
        match self {
            Cell::Disc { .. } => Complex64::new(0.0, 0.0),
            Cell::Sector { r0, r1, a0, a1 } => Complex64::from_polar(0.5 * (r0 + r1), 0.5 * (a0 + a1)),
        }
    }

    fn contains(self, z: Complex64, slack: f64) -> bool {
        let r = z.norm();
        match self {
            Cell::Disc { r: rd } => r <= rd + slack,
            Cell::Sector { r0, r1, a0, a1 } => {
                if r < r0 - slack || r > r1 + slack {
                    return false;
                }
                let full = a1 - a0;
                if full >= TAU {
                    return true;
                }
                let rel = (z.arg() - a0).rem_euclid(TAU);
                let angular_slack = slack / r.max(1e-300);
                rel <= full + angular_slack || rel >= TAU - angular_slack
            }
        }
    }
}

struct Finder<'a, F: DiscFunction + ?Sized> {
    tracker: Tracker<'a, F>,
    found: Vec<Zero>,
}

impl<F: DiscFunction + ?Sized> Finder<'_, F> {
    fn cell_count(&mut self, cell: Cell) -> std::result::Result<i64, TrackError> {
        match cell {
            Cell::Disc { r } => self.tracker.winding(&circle(r)),
            Cell::Sector { r0, r1, a0, a1 } => self.tracker.winding(&sector(r0, r1, a0, a1)),
        }
    }

    // Splits a cell into two children, the first of which is counted by its
    // contour and the second by subtraction.
    fn split(&mut self, cell: Cell, count: usize) -> std::result::Result<[(Cell, usize); 2], Stop> {
        let mut last_radius = 0.0;
        let mut last = TrackError::Degenerate;
        for frac in SPLIT_FRACTIONS {
            let (first, second) = match cell {
                Cell::Disc { r } => {
                    (Cell::Disc { r: r * frac }, Cell::Sector { r0: r * frac, r1: r, a0: 0.0, a1: TAU })
                }
                Cell::Sector { r0, r1, a0, a1 } if a1 - a0 >= TAU => {
                    let a = a0 + (frac - 0.5) * PI;
                    (Cell::Sector { r0, r1, a0: a, a1: a + PI }, Cell::Sector { r0, r1, a0: a + PI, a1: a + TAU })
                }
                Cell::Sector { r0, r1, a0, a1 } => {
                    if 0.5 * (r0 + r1) * (a1 - a0) > r1 - r0 {
                        let a = a0 + frac * (a1 - a0);
                        (Cell::Sector { r0, r1, a0, a1: a }, Cell::Sector { r0, r1, a0: a, a1 })
                    } else {
                        let r = r0 + frac * (r1 - r0);
                        (Cell::Sector { r0, r1: r, a0, a1 }, Cell::Sector { r0: r, r1, a0, a1 })
                    }
                }
            };
            last_radius = first.center().norm();
            match self.cell_count(first) {
                Ok(n) if n >= 0 && n as usize <= count => {
                    return Ok([(first, n as usize), (second, count - n as usize)])
                }
                Ok(n) => {
                    return Err(Stop::Failed(Error::Consistency(format!(
                        "child cell count {n} is incompatible with parent count {count}"
                    ))))
                }
                Err(TrackError::Budget) => return Err(Stop::Budget),
                Err(e) => last = e,
            }
        }
        Err(Stop::Failed(track_error(last, last_radius)))
    }

    fn newton(&mut self, start: Complex64) -> Option<Complex64> {
        let limit = self.tracker.f.search_limit();
        let mut z = start;
        for _ in 0..80 {
            if self.tracker.charge(2).is_err() {
                return None;
            }
            let (v, d) = self.tracker.f.value_and_derivative(z);
            if v.norm() == 0.0 {
                return Some(z);
            }
            if !(d.norm() > 0.0) || !d.re.is_finite() || !d.im.is_finite() {
                return None;
            }
            let step = v / d;
            z -= step;
            if !(z.norm() < limit) {
                return None;
            }
            if step.norm() <= 1e-15 * z.norm().max(1e-3) {
                let v = self.tracker.f.value(z).norm();
                return (v < 1e-10).then_some(z);
            }
        }
        None
    }

    fn run(&mut self, root: Cell, total: usize) -> Result<bool> {
        let mut stack = vec![(root, total)];
        while let Some((cell, count)) = stack.pop() {
            if count == 0 {
                continue;
            }
            if count == 1 {
                if let Some(z) = self.newton(cell.center()) {
                    if cell.contains(z, 1e-10) {
                        self.found.push(Zero { re: z.re, im: z.im, multiplicity: 1 });
                        continue;
                    }
                }
            }
            if cell.diameter() <= MIN_CELL_DIAMETER {
                let c = cell.center();
                let z = match self.newton(c) {
                    Some(z) if (z - c).norm() <= MIN_CELL_DIAMETER => z,
                    _ => c,
                };
                self.found.push(Zero { re: z.re, im: z.im, multiplicity: count });
                continue;
            }
            if self.tracker.evaluations > self.tracker.budget {
                return Ok(true);
            }
            match self.split(cell, count) {
                Ok(children) => stack.extend(children),
                Err(Stop::Budget) => return Ok(true),
                // A small cell whose contours sit at the roundoff floor of f
                // holds an unresolvable cluster, typically a multiple zero.
                Err(Stop::Failed(Error::Precision(_) | Error::ContourDegenerate { .. }))
                    if count > 1 && cell.diameter() <= CLUSTER_DIAMETER =>
                {
                    let c = cell.center();
                    self.found.push(Zero { re: c.re, im: c.im, multiplicity: count });
                }
                Err(Stop::Failed(e)) => return Err(e),
            }
        }
        Ok(false)
    }
}

enum Stop {
    Budget,
    Failed(Error),
}

fn merge_duplicates(mut zeros: Vec<Zero>) -> Vec<Zero> {
    zeros.sort_by(|a, b| a.re.total_cmp(&b.re));
    let mut out: Vec<Zero> = Vec::with_capacity(zeros.len());
    for z in zeros {
        if let Some(prev) = out
            .iter_mut()
            .rev()
            .take_while(|p| z.re - p.re <= MERGE_DISTANCE)
            .find(|p| (p.z() - z.z()).norm() <= MERGE_DISTANCE)
        {
            prev.multiplicity += z.multiplicity;
        } else {
            out.push(z);
        }
    }
    out
}

/// Locates every zero inside `|z| <= r_max` using at most `budget`
/// function evaluations.
pub fn locate_zeros<F: DiscFunction + ?Sized>(f: &F, r_max: f64, budget: usize) -> Result<ZeroSet> {
    check_radius(f, r_max)?;
    let mut finder = Finder { tracker: Tracker::new(f, budget), found: Vec::new() };
    let (total, radius) = match circle_count(&mut finder.tracker, r_max) {
        Ok(v) => v,
        Err(TrackError::Budget) => return Ok(ZeroSet::new(Vec::new(), r_max, true, finder.tracker.evaluations)),
        Err(e) => return Err(track_error(e, r_max)),
    };
    let partial = finder.run(Cell::Disc { r: radius }, total)?;
    let zeros = merge_duplicates(finder.found);
    let set = ZeroSet::new(zeros, radius, partial, finder.tracker.evaluations);
    if !partial && set.total_multiplicity() != total {
        return Err(Error::Consistency(format!(
            "located multiplicity {} differs from the contour count {total}",
            set.total_multiplicity()
        )));
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clark::InnerFunctionEval;

    #[test]
    fn annulus_index_boundaries() {
        assert_eq!(annulus_index(Complex64::new(0.0, 0.0)), 0);
        assert_eq!(annulus_index(Complex64::new(0.5, 0.0)), 1);
        assert_eq!(annulus_index(Complex64::new(0.75, 0.0)), 2);
        assert_eq!(annulus_index(Complex64::new(0.7, 0.0)), 1);
        assert_eq!(annulus_index(Complex64::new(0.3, 0.0)), 0);
    }

    #[test]
    fn beta_sum_arithmetic() {
        let zs = ZeroSet::new(
            vec![Zero { re: 0.5, im: 0.0, multiplicity: 1 }, Zero { re: 0.0, im: 0.75, multiplicity: 1 }],
            0.9,
            false,
            0,
        );
        assert!((beta_sum(&zs, 1.0) - 0.75).abs() < 1e-15);
        assert_eq!(zs.annulus_counts(), &[(1, 1), (2, 1)]);
    }

    #[test]
    fn single_atom_has_one_zero() {
        let f = InnerFunctionEval::roots_of_unity(1).unwrap();
        assert_eq!(count_zeros(&f, 0.5).unwrap(), 1);
    }

    #[test]
    fn blaschke_count() {
        let b =
            make_blaschke(&[Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.3), Complex64::new(-0.7, 0.0)]).unwrap();
        assert_eq!(count_zeros(&b, 0.9).unwrap(), 3);
        assert_eq!(count_zeros(&b, 0.4).unwrap(), 1);
    }

    #[test]
    fn power_has_multiple_zero_at_origin() {
        for n in 2..=6 {
            let f = InnerFunctionEval::roots_of_unity(n).unwrap();
            let zs = locate_zeros(&f, 0.9, DEFAULT_BUDGET).unwrap_or_else(|e| panic!("n = {n}: {e:?}"));
            assert_eq!(zs.zeros().len(), 1, "n = {n}");
            assert_eq!(zs.zeros()[0].multiplicity, n);
            assert!(zs.zeros()[0].z().norm() < 1e-6, "n = {n}: {:?}", zs.zeros());
        }
    }
}
