//! Piecewise-geodesic paths on dyadic grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{Point, Space};

/// Largest supported dyadic level; times `k / 2^n` stay exact in `f64`.
pub const MAX_LEVEL: u32 = 40;

/// The dyadic grid `{k / 2^m : k = 0..=2^m}` of `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicGrid {
    pub level: u32,
}

impl DyadicGrid {
    pub fn new(level: u32) -> Self {
        DyadicGrid { level }
    }

    /// Number of cells, `2^m`.
    pub fn cells(&self) -> usize {
        1usize << self.level
    }

    pub fn mesh(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.mesh()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.cells()).map(|k| self.time(k)).collect()
    }

    /// Whether `t` is a grid point.
    pub fn contains(&self, t: f64) -> bool {
        let x = t * self.cells() as f64;
        (0.0..=1.0).contains(&t) && x == x.floor()
    }
}

/// A continuous path on `[0, 1]` that is a constant-speed geodesic on every
/// cell of the level-`n` dyadic grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseGeodesicPath {
    space: Space,
    level: u32,
    breakpoints: Vec<Point>,
}

impl PiecewiseGeodesicPath {
    /// `breakpoints` must have `2^level + 1` entries; they are canonicalised.
    pub fn new(space: Space, level: u32, breakpoints: Vec<Point>) -> Result<Self> {
        if level > MAX_LEVEL {
            return Err(Error::InvalidParameter(format!("path level {level} exceeds {MAX_LEVEL}")));
        }
        let expected = (1usize << level) + 1;
        if breakpoints.len() != expected {
            return Err(Error::InvalidParameter(format!(
                "level {level} needs {expected} breakpoints, got {}",
                breakpoints.len()
            )));
        }
        for b in &breakpoints {
            space.validate_point(b)?;
        }
        let breakpoints = breakpoints.iter().map(|b| space.canonical(b)).collect();
        Ok(PiecewiseGeodesicPath { space, level, breakpoints })
    }

    /// Samples `f` on the level-`n` grid.
    pub fn from_fn(space: Space, level: u32, f: impl Fn(f64) -> Point) -> Result<Self> {
        let grid = DyadicGrid::new(level);
        Self::new(space, level, grid.times().into_iter().map(f).collect())
    }

    /// The single geodesic from `x` to `y` over `[0, 1]`.
    pub fn geodesic_segment(space: Space, x: Point, y: Point) -> Result<Self> {
        Self::new(space, 0, vec![x, y])
    }

    pub fn constant(space: Space, x: Point) -> Result<Self> {
        Self::new(space, 0, vec![x.clone(), x])
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn grid(&self) -> DyadicGrid {
        DyadicGrid::new(self.level)
    }

    pub fn breakpoints(&self) -> &[Point] {
        &self.breakpoints
    }

    pub fn segments(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn start(&self) -> &Point {
        &self.breakpoints[0]
    }

    pub fn end(&self) -> &Point {
        self.breakpoints.last().unwrap()
    }

    /// Length of segment `i`.
    pub fn segment_length(&self, i: usize) -> f64 {
        self.space.distance(&self.breakpoints[i], &self.breakpoints[i + 1])
    }

    /// Position at time `t`, clamped to `[0, 1]`. Grid times return the stored
    /// breakpoint exactly.
    pub fn eval(&self, t: f64) -> Point {
        let cells = self.segments();
        let x = t.clamp(0.0, 1.0) * cells as f64;
        let i = (x.floor() as usize).min(cells - 1);
        let s = x - i as f64;
        if s == 0.0 {
            return self.breakpoints[i].clone();
        }
        self.space.geodesic_point(&self.breakpoints[i], &self.breakpoints[i + 1], s)
    }

    /// The same trajectory described at a finer level.
    pub fn refine(&self, level: u32) -> Result<Self> {
        if level < self.level {
            return Err(Error::InvalidParameter("refinement must not lower the level".into()));
        }
        Self::from_fn(self.space, level, |t| self.eval(t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_segment() {
        let p = PiecewiseGeodesicPath::geodesic_segment(Space::real_line(), 0.0.into(), 1.0.into()).unwrap();
        assert_eq!(p.breakpoints(), &[Point::scalar(0.0), Point::scalar(1.0)]);
        assert_eq!(p.eval(0.0), Point::scalar(0.0));
        assert_eq!(p.eval(1.0), Point::scalar(1.0));
        assert_eq!(p.eval(0.25), Point::scalar(0.25));
    }

    #[test]
    fn circle_segment_speed() {
        let p = PiecewiseGeodesicPath::geodesic_segment(Space::circle(), 0.0.into(), 0.5.into()).unwrap();
        let sp = Space::circle();
        for (s, t) in [(0.0, 0.3), (0.2, 0.9), (0.5, 1.0)] {
            let d = sp.distance(&p.eval(s), &p.eval(t));
            assert!((d - 0.5 * (t - s)).abs() < 1e-14);
        }
    }

    #[test]
    fn breakpoints_round_trip() {
        let p = PiecewiseGeodesicPath::from_fn(Space::euclidean(2), 3, |t| Point::new(vec![t * t, t.sin()])).unwrap();
        for (k, t) in p.grid().times().into_iter().enumerate() {
            assert_eq!(p.eval(t), p.breakpoints()[k]);
        }
        let r = p.refine(5).unwrap();
        assert_eq!(r.eval(0.375), p.eval(0.375));
    }

    #[test]
    fn wrong_breakpoint_count() {
        let err = PiecewiseGeodesicPath::new(Space::real_line(), 1, vec![0.0.into(), 1.0.into()]);
        assert!(matches!(err, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn grids_are_nested() {
        for m in 0..6 {
            let coarse = DyadicGrid::new(m);
            let fine = DyadicGrid::new(m + 1);
            assert!(coarse.times().iter().all(|&t| fine.contains(t)));
        }
        assert!(!DyadicGrid::new(2).contains(0.125));
    }
}
