//! Finitely supported probability measures.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{Point, Space};

/// Weight-sum deviation accepted by [`DiscreteMeasure::new`] before
/// renormalising.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// A probability measure with finitely many atoms.
///
/// Atoms are stored in canonical form and are pairwise distinct; weights are
/// positive and sum to one up to rounding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure", into = "RawMeasure")]
pub struct DiscreteMeasure {
    space: Space,
    atoms: Vec<Point>,
    weights: Vec<f64>,
}

#[derive(Clone, Serialize, Deserialize)]
struct RawMeasure {
    space: Space,
    atoms: Vec<Point>,
    weights: Vec<f64>,
}

impl TryFrom<RawMeasure> for DiscreteMeasure {
    type Error = Error;

    fn try_from(raw: RawMeasure) -> Result<Self> {
        DiscreteMeasure::new(raw.space, raw.atoms, raw.weights)
    }
}

impl From<DiscreteMeasure> for RawMeasure {
    fn from(m: DiscreteMeasure) -> Self {
        RawMeasure { space: m.space, atoms: m.atoms, weights: m.weights }
    }
}

fn atom_key(p: &Point) -> Vec<u64> {
    p.0.iter().map(|c| c.to_bits()).collect()
}

impl DiscreteMeasure {
    /// Validates, canonicalises and merges duplicate atoms (summing their
    /// weights). Weights must be positive and sum to one within
    /// [`WEIGHT_SUM_TOLERANCE`]; they are renormalised exactly afterwards.
    pub fn new(space: Space, atoms: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        space.validate()?;
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("empty support".into()));
        }
        if atoms.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidMeasure(format!("weights must be positive, got {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}, expected 1")));
        }
        for a in &atoms {
            space.validate_point(a)?;
        }
        Ok(Self::merge(space, atoms, weights, total))
    }

    /// Builds a measure from weights that are positive but may not be
    /// normalised (e.g. aggregated path weights). Zero weights are dropped.
    pub fn from_unnormalized(space: Space, atoms: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        let (atoms, weights): (Vec<_>, Vec<_>) =
            atoms.into_iter().zip(weights).filter(|(_, w)| *w > 0.0).unzip();
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("empty support".into()));
        }
        let total: f64 = weights.iter().sum();
        Ok(Self::merge(space, atoms, weights, total))
    }

    fn merge(space: Space, atoms: Vec<Point>, weights: Vec<f64>, total: f64) -> Self {
        let mut index: HashMap<Vec<u64>, usize> = HashMap::with_capacity(atoms.len());
        let mut merged_atoms: Vec<Point> = Vec::with_capacity(atoms.len());
        let mut merged_weights: Vec<f64> = Vec::with_capacity(atoms.len());
        for (a, w) in atoms.into_iter().zip(weights) {
            let a = space.canonical(&a);
            match index.get(&atom_key(&a)) {
                Some(&k) => merged_weights[k] += w,
                None => {
                    index.insert(atom_key(&a), merged_atoms.len());
                    merged_atoms.push(a);
                    merged_weights.push(w);
                }
            }
        }
        for w in &mut merged_weights {
            *w /= total;
        }
        DiscreteMeasure { space, atoms: merged_atoms, weights: merged_weights }
    }

    pub fn dirac(space: Space, x: Point) -> Result<Self> {
        Self::new(space, vec![x], vec![1.0])
    }

    /// Equal weights on the given atoms.
    pub fn uniform(space: Space, atoms: Vec<Point>) -> Result<Self> {
        let n = atoms.len().max(1);
        Self::new(space, atoms, vec![1.0 / n as f64; n])
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn atoms(&self) -> &[Point] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, f64)> {
        self.atoms.iter().zip(self.weights.iter().copied())
    }

    /// `sum_i w_i d(base, x_i)^p`.
    pub fn p_moment(&self, base: &Point, p: f64) -> f64 {
        self.iter().map(|(x, w)| w * self.space.distance(base, x).powf(p)).sum()
    }

    pub fn checked_p_moment(&self, base: &Point, p: f64) -> Result<f64> {
        self.space.validate_point(base)?;
        if !(p >= 1.0) {
            return Err(Error::InvalidParameter(format!("moment order must be >= 1, got {p}")));
        }
        Ok(self.p_moment(base, p))
    }

    /// Total variation style comparison used by tests: same support (as a
    /// set) and weights within `tol`.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        if self.space != other.space || self.len() != other.len() {
            return false;
        }
        let index: HashMap<Vec<u64>, f64> =
            other.iter().map(|(a, w)| (atom_key(a), w)).collect();
        self.iter().all(|(a, w)| index.get(&atom_key(a)).is_some_and(|v| (v - w).abs() <= tol))
    }
}
