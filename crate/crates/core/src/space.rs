//! Concrete geodesic metric spaces: Euclidean space, the circle and the
//! cylinder over the circle, each with a deterministic geodesic selection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn default_perimeter() -> f64 {
    2.0
}

/// A metric space the library can transport mass on.
///
/// Circle points carry a single arc-length coordinate in `[0, perimeter)`.
/// Cylinder points are `(arc, height)` with the intrinsic product metric.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Space {
    Euclidean {
        #[serde(rename = "d")]
        dim: usize,
    },
    Circle {
        #[serde(default = "default_perimeter")]
        perimeter: f64,
    },
    Cylinder {
        #[serde(default = "default_perimeter")]
        perimeter: f64,
    },
}

/// A point of a [`Space`], stored as raw coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn new(coords: impl Into<Vec<f64>>) -> Self {
        Point(coords.into())
    }

    pub fn scalar(x: f64) -> Self {
        Point(vec![x])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl From<f64> for Point {
    fn from(x: f64) -> Self {
        Point::scalar(x)
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

impl<const N: usize> From<[f64; N]> for Point {
    fn from(v: [f64; N]) -> Self {
        Point(v.to_vec())
    }
}

/// Reduces `x` into `[0, perimeter)`.
fn wrap(x: f64, perimeter: f64) -> f64 {
    let r = x.rem_euclid(perimeter);
    // rem_euclid rounds tiny negative inputs up to exactly `perimeter`
    if r >= perimeter {
        0.0
    } else {
        r + 0.0
    }
}

/// Shortest signed arc displacement from `a` to `b`. Antipodal pairs resolve
/// to the positive orientation.
fn arc_displacement(a: f64, b: f64, perimeter: f64) -> f64 {
    let forward = wrap(b - a, perimeter);
    if forward <= 0.5 * perimeter {
        forward
    } else {
        forward - perimeter
    }
}

fn arc_distance(a: f64, b: f64, perimeter: f64) -> f64 {
    let forward = wrap(b - a, perimeter);
    forward.min(perimeter - forward)
}

impl Space {
    pub fn euclidean(dim: usize) -> Self {
        Space::Euclidean { dim }
    }

    pub fn real_line() -> Self {
        Space::Euclidean { dim: 1 }
    }

    pub fn circle() -> Self {
        Space::Circle { perimeter: 2.0 }
    }

    pub fn cylinder() -> Self {
        Space::Cylinder { perimeter: 2.0 }
    }

    pub fn point_dim(&self) -> usize {
        match *self {
            Space::Euclidean { dim } => dim,
            Space::Circle { .. } => 1,
            Space::Cylinder { .. } => 2,
        }
    }

    fn perimeter(&self) -> Option<f64> {
        match *self {
            Space::Euclidean { .. } => None,
            Space::Circle { perimeter } | Space::Cylinder { perimeter } => Some(perimeter),
        }
    }

    /// Checks the space parameters themselves.
    pub fn validate(&self) -> Result<()> {
        match *self {
            Space::Euclidean { dim: 0 } => {
                Err(Error::InvalidParameter("euclidean dimension must be >= 1".into()))
            }
            Space::Circle { perimeter } | Space::Cylinder { perimeter }
                if !(perimeter.is_finite() && perimeter > 0.0) =>
            {
                Err(Error::InvalidParameter(format!(
                    "perimeter must be positive, got {perimeter}"
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn validate_point(&self, x: &Point) -> Result<()> {
        if x.dim() != self.point_dim() {
            return Err(Error::InvalidPoint(format!(
                "expected {} coordinates, got {}",
                self.point_dim(),
                x.dim()
            )));
        }
        if x.0.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidPoint("non-finite coordinate".into()));
        }
        Ok(())
    }

    /// Canonical representative: arc coordinates reduced modulo the perimeter
    /// and negative zeros cleared, so equal points compare equal bitwise.
    pub fn canonical(&self, x: &Point) -> Point {
        let mut c = x.0.clone();
        if let Some(per) = self.perimeter() {
            c[0] = wrap(c[0], per);
        }
        for v in &mut c {
            *v += 0.0;
        }
        Point(c)
    }

    /// Distance between two points. Assumes both are valid for this space;
    /// use [`Space::checked_distance`] on untrusted input.
    pub fn distance(&self, x: &Point, y: &Point) -> f64 {
        let (a, b) = (&x.0, &y.0);
        match *self {
            Space::Euclidean { dim } => {
                if dim == 1 {
                    (a[0] - b[0]).abs()
                } else {
                    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
                }
            }
            Space::Circle { perimeter } => arc_distance(a[0], b[0], perimeter),
            Space::Cylinder { perimeter } => {
                let arc = arc_distance(a[0], b[0], perimeter);
                arc.hypot(a[1] - b[1])
            }
        }
    }

    pub fn checked_distance(&self, x: &Point, y: &Point) -> Result<f64> {
        self.validate_point(x)?;
        self.validate_point(y)?;
        Ok(self.distance(x, y))
    }

    /// Point at time `t` on the selected constant-speed geodesic from `x` to
    /// `y`. Returns `x` and `y` exactly at the endpoints.
    pub fn geodesic_point(&self, x: &Point, y: &Point, t: f64) -> Point {
        if t == 0.0 {
            return x.clone();
        }
        if t == 1.0 {
            return y.clone();
        }
        let (a, b) = (&x.0, &y.0);
        match *self {
            Space::Euclidean { .. } => {
                Point(a.iter().zip(b).map(|(u, v)| u + t * (v - u)).collect())
            }
            Space::Circle { perimeter } => {
                let delta = arc_displacement(a[0], b[0], perimeter);
                Point(vec![wrap(a[0] + t * delta, perimeter)])
            }
            Space::Cylinder { perimeter } => {
                let delta = arc_displacement(a[0], b[0], perimeter);
                Point(vec![
                    wrap(a[0] + t * delta, perimeter),
                    a[1] + t * (b[1] - a[1]),
                ])
            }
        }
    }

    pub fn checked_geodesic_point(&self, x: &Point, y: &Point, t: f64) -> Result<Point> {
        self.validate_point(x)?;
        self.validate_point(y)?;
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidParameter(format!("geodesic time {t} outside [0, 1]")));
        }
        Ok(self.geodesic_point(x, y, t))
    }
}
