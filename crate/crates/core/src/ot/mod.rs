//! Exact discrete optimal transport and coupling gluing.

pub(crate) mod transport;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::space::Space;

/// Marginal mismatch tolerated when validating couplings.
pub const MARGINAL_TOLERANCE: f64 = 1e-10;

/// Default cap on the number of support tuples a multi-coupling may hold.
pub const DEFAULT_BUDGET: u64 = 1_000_000;

/// Reads the support budget from `WLIFT_BUDGET`, falling back to
/// [`DEFAULT_BUDGET`].
pub fn budget_from_env() -> u64 {
    std::env::var("WLIFT_BUDGET")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_BUDGET)
}

fn same_space(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<Space> {
    if mu.space() != nu.space() {
        return Err(Error::SpaceMismatch);
    }
    Ok(mu.space())
}

fn check_order(p: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("transport order p must be >= 1, got {p}")));
    }
    Ok(())
}

/// Row-major matrix of `d(x_i, y_j)^p`.
pub fn cost_matrix(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Vec<f64> {
    let space = mu.space();
    let mut c = Vec::with_capacity(mu.len() * nu.len());
    for x in mu.atoms() {
        for y in nu.atoms() {
            c.push(space.distance(x, y).powf(p));
        }
    }
    c
}

/// A joint measure with prescribed marginals, stored densely.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    row_measure: DiscreteMeasure,
    col_measure: DiscreteMeasure,
    /// Row-major, `row_measure.len() x col_measure.len()`.
    weights: Vec<f64>,
}

impl Coupling {
    /// Validates shape, nonnegativity and both marginals.
    pub fn new(row_measure: DiscreteMeasure, col_measure: DiscreteMeasure, weights: Vec<f64>) -> Result<Self> {
        same_space(&row_measure, &col_measure)?;
        if weights.len() != row_measure.len() * col_measure.len() {
            return Err(Error::InvalidMeasure("coupling matrix has the wrong shape".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidMeasure("coupling weights must be nonnegative".into()));
        }
        let c = Coupling { row_measure, col_measure, weights };
        let err = c.marginal_error();
        if err > MARGINAL_TOLERANCE {
            return Err(Error::InvalidMeasure(format!("coupling marginals off by {err:e}")));
        }
        Ok(c)
    }

    /// The independent coupling `mu x nu`.
    pub fn product(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<Self> {
        same_space(mu, nu)?;
        let weights = mu
            .weights()
            .iter()
            .flat_map(|a| nu.weights().iter().map(move |b| a * b))
            .collect();
        Ok(Coupling { row_measure: mu.clone(), col_measure: nu.clone(), weights })
    }

    pub fn row_measure(&self) -> &DiscreteMeasure {
        &self.row_measure
    }

    pub fn col_measure(&self) -> &DiscreteMeasure {
        &self.col_measure
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.row_measure.len(), self.col_measure.len())
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.col_measure.len() + j]
    }

    /// Nonzero entries `(i, j, w)` in row-major order.
    pub fn support(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.col_measure.len();
        self.weights.iter().enumerate().filter(|(_, w)| **w > 0.0).map(move |(e, &w)| (e / n, e % n, w))
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.weights.chunks(self.col_measure.len()).map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let n = self.col_measure.len();
        let mut s = vec![0.0; n];
        for (e, w) in self.weights.iter().enumerate() {
            s[e % n] += w;
        }
        s
    }

    /// Largest absolute deviation of either marginal from its measure.
    pub fn marginal_error(&self) -> f64 {
        let r = self.row_sums().iter().zip(self.row_measure.weights()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let c = self.col_sums().iter().zip(self.col_measure.weights()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        r.max(c)
    }

    /// `sum_ij w_ij d(x_i, y_j)^p`.
    pub fn cost(&self, p: f64) -> f64 {
        let space = self.row_measure.space();
        self.support()
            .map(|(i, j, w)| w * space.distance(&self.row_measure.atoms()[i], &self.col_measure.atoms()[j]).powf(p))
            .sum()
    }

    pub fn transpose(&self) -> Coupling {
        let (m, n) = self.shape();
        let mut weights = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                weights[j * m + i] = self.weights[i * n + j];
            }
        }
        Coupling { row_measure: self.col_measure.clone(), col_measure: self.row_measure.clone(), weights }
    }
}

/// An optimal coupling of `mu` and `nu` for the cost `d^p`, with its cost.
pub fn optimal_coupling(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Result<(Coupling, f64)> {
    same_space(mu, nu)?;
    check_order(p)?;
    let cost = cost_matrix(mu, nu, p);
    let weights = transport::solve(mu.weights(), nu.weights(), &cost)?;
    let value = weights.iter().zip(&cost).map(|(w, c)| w * c).sum();
    Ok((Coupling { row_measure: mu.clone(), col_measure: nu.clone(), weights }, value))
}

/// `W_p(mu, nu)`.
pub fn wasserstein_distance(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Result<f64> {
    Ok(wasserstein_cost(mu, nu, p)?.powf(1.0 / p))
}

/// `W_p(mu, nu)^p`. Identical measures short-circuit to zero.
pub fn wasserstein_cost(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Result<f64> {
    same_space(mu, nu)?;
    check_order(p)?;
    if mu == nu {
        return Ok(0.0);
    }
    Ok(optimal_coupling(mu, nu, p)?.1)
}

/// One support tuple of a multi-coupling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportEntry {
    /// Atom index into each marginal.
    pub indices: Vec<u32>,
    pub weight: f64,
}

/// A sparse joint measure on the product of finitely many supports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiCoupling {
    marginals: Vec<DiscreteMeasure>,
    /// Optional tag per marginal, typically its time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<f64>>,
    entries: Vec<SupportEntry>,
}

impl MultiCoupling {
    /// Builds from sparse entries. Entries are not merged; zero weights are
    /// dropped.
    pub fn new(marginals: Vec<DiscreteMeasure>, entries: Vec<SupportEntry>) -> Result<Self> {
        if marginals.is_empty() {
            return Err(Error::InvalidMeasure("multi-coupling needs at least one marginal".into()));
        }
        let space = marginals[0].space();
        if marginals.iter().any(|m| m.space() != space) {
            return Err(Error::SpaceMismatch);
        }
        for e in &entries {
            if e.indices.len() != marginals.len()
                || e.indices.iter().zip(&marginals).any(|(&i, m)| i as usize >= m.len())
            {
                return Err(Error::InvalidMeasure("support tuple out of range".into()));
            }
            if !(e.weight >= 0.0) {
                return Err(Error::InvalidMeasure("multi-coupling weights must be nonnegative".into()));
            }
        }
        let entries = entries.into_iter().filter(|e| e.weight > 0.0).collect();
        Ok(MultiCoupling { marginals, labels: None, entries })
    }

    pub fn with_labels(mut self, labels: Vec<f64>) -> Self {
        assert_eq!(labels.len(), self.marginals.len());
        self.labels = Some(labels);
        self
    }

    pub fn marginals(&self) -> &[DiscreteMeasure] {
        &self.marginals
    }

    pub fn labels(&self) -> Option<&[f64]> {
        self.labels.as_deref()
    }

    pub fn entries(&self) -> &[SupportEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.marginals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marginals.is_empty()
    }

    pub fn space(&self) -> Space {
        self.marginals[0].space()
    }

    /// Weights of the `i`-th one-dimensional projection.
    pub fn marginal_weights(&self, i: usize) -> Vec<f64> {
        let mut w = vec![0.0; self.marginals[i].len()];
        for e in &self.entries {
            w[e.indices[i] as usize] += e.weight;
        }
        w
    }

    /// Largest deviation of any projection from its declared marginal.
    pub fn marginal_error(&self) -> f64 {
        (0..self.len())
            .map(|i| {
                self.marginal_weights(i)
                    .iter()
                    .zip(self.marginals[i].weights())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// The two-dimensional projection onto coordinates `(i, j)`.
    pub fn pair_marginal(&self, i: usize, j: usize) -> Coupling {
        let n = self.marginals[j].len();
        let mut weights = vec![0.0; self.marginals[i].len() * n];
        for e in &self.entries {
            weights[e.indices[i] as usize * n + e.indices[j] as usize] += e.weight;
        }
        Coupling { row_measure: self.marginals[i].clone(), col_measure: self.marginals[j].clone(), weights }
    }

    /// `sum w d(x_i, x_j)^p` without forming the dense projection.
    pub fn pair_cost(&self, i: usize, j: usize, p: f64) -> f64 {
        let space = self.space();
        let (ai, aj) = (self.marginals[i].atoms(), self.marginals[j].atoms());
        self.entries
            .iter()
            .map(|e| e.weight * space.distance(&ai[e.indices[i] as usize], &aj[e.indices[j] as usize]).powf(p))
            .sum()
    }
}

/// Glues consecutive couplings into one multi-coupling by Markov
/// disintegration through the shared marginals, within [`budget_from_env`].
pub fn glue_chain(couplings: &[Coupling]) -> Result<MultiCoupling> {
    glue_chain_with_budget(couplings, budget_from_env())
}

/// [`glue_chain`] with an explicit cap on the number of support tuples.
pub fn glue_chain_with_budget(couplings: &[Coupling], budget: u64) -> Result<MultiCoupling> {
    let Some(first) = couplings.first() else {
        return Err(Error::InvalidMeasure("empty coupling chain".into()));
    };
    for k in 0..couplings.len() - 1 {
        if !couplings[k].col_measure.approx_eq(&couplings[k + 1].row_measure, 1e-12) {
            return Err(Error::ChainMismatch(k));
        }
    }

    let mut entries: Vec<SupportEntry> = first
        .support()
        .map(|(i, j, w)| SupportEntry { indices: vec![i as u32, j as u32], weight: w })
        .collect();
    for c in &couplings[1..] {
        let shared = c.row_sums();
        let n = c.col_measure.len();
        let mut next = Vec::with_capacity(entries.len());
        for e in &entries {
            let j = *e.indices.last().unwrap() as usize;
            for l in 0..n {
                let w = c.weights[j * n + l];
                if w > 0.0 {
                    let mut indices = Vec::with_capacity(e.indices.len() + 1);
                    indices.extend_from_slice(&e.indices);
                    indices.push(l as u32);
                    next.push(SupportEntry { indices, weight: e.weight * (w / shared[j]) });
                }
            }
            if next.len() as u64 > budget {
                return Err(Error::BudgetExceeded { size: next.len() as u128, budget });
            }
        }
        entries = next;
    }

    let mut marginals = vec![first.row_measure.clone()];
    marginals.extend(couplings.iter().map(|c| c.col_measure.clone()));
    Ok(MultiCoupling { marginals, labels: None, entries })
}
