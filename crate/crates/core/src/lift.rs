//! Lifts of Wasserstein curves to weighted bundles of piecewise-geodesic
//! paths, their energies and the diagnostics comparing them with the curve.

use serde::{Deserialize, Serialize};

use crate::compat::{self, CompatibilityReport};
use crate::error::{Error, ErrorClass, Result};
use crate::exec::{ordered_sum, Execution};
use crate::measure::DiscreteMeasure;
use crate::norms::{self, BesovSeries, MetricCurve, Quadrature, VariationMode};
use crate::ot::{self, Coupling, MultiCoupling};
use crate::path::{DyadicGrid, PiecewiseGeodesicPath};
use crate::space::{Point, Space};

/// A curve `t -> mu_t` of discrete probability measures on `[0, 1]`.
pub trait WassersteinCurve: Sync {
    fn space(&self) -> Space;

    fn measure_at(&self, t: f64) -> Result<DiscreteMeasure>;

    /// A level `L` such that the curve is a constant-speed Wasserstein
    /// geodesic on every level-`L` dyadic cell, if known.
    fn breakpoint_level(&self) -> Option<u32> {
        None
    }

    /// Whether `W_p(mu_s, mu_{s+h})` depends on `h` only, for dyadic `s`, `h`.
    fn stationary_increments(&self) -> bool {
        false
    }

    /// `W_p^p(mu_s, mu_t)` given both measures. Families with a known
    /// decomposition of the optimal plan may split the solve.
    fn transport_cost(&self, _s: f64, mu_s: &DiscreteMeasure, _t: f64, mu_t: &DiscreteMeasure, p: f64) -> Result<f64> {
        ot::wasserstein_cost(mu_s, mu_t, p)
    }
}

impl<C: WassersteinCurve + ?Sized> WassersteinCurve for Box<C> {
    fn space(&self) -> Space {
        (**self).space()
    }

    fn measure_at(&self, t: f64) -> Result<DiscreteMeasure> {
        (**self).measure_at(t)
    }

    fn breakpoint_level(&self) -> Option<u32> {
        (**self).breakpoint_level()
    }

    fn stationary_increments(&self) -> bool {
        (**self).stationary_increments()
    }

    fn transport_cost(&self, s: f64, mu_s: &DiscreteMeasure, t: f64, mu_t: &DiscreteMeasure, p: f64) -> Result<f64> {
        (**self).transport_cost(s, mu_s, t, mu_t, p)
    }
}

/// Views a Wasserstein curve as a metric curve under `W_p`. Values carry
/// their time so [`WassersteinCurve::transport_cost`] can use it.
pub struct WassersteinMetric<'a, C: ?Sized> {
    pub curve: &'a C,
    pub p: f64,
}

impl<C: WassersteinCurve + ?Sized> MetricCurve for WassersteinMetric<'_, C> {
    type Value = (f64, DiscreteMeasure);

    fn value_at(&self, t: f64) -> Result<(f64, DiscreteMeasure)> {
        Ok((t, self.curve.measure_at(t)?))
    }

    fn distance(&self, a: &(f64, DiscreteMeasure), b: &(f64, DiscreteMeasure)) -> Result<f64> {
        Ok(self.curve.transport_cost(a.0, &a.1, b.0, &b.1, self.p)?.max(0.0).powf(1.0 / self.p))
    }

    fn geodesic_level(&self) -> Option<u32> {
        self.curve.breakpoint_level()
    }

    fn stationary_increments(&self) -> bool {
        self.curve.stationary_increments()
    }
}

/// `mu_t = sum_i w_i delta_{gamma_i(t)}` for finitely many paths.
#[derive(Clone, Debug)]
pub struct ParticleCurve {
    space: Space,
    paths: Vec<PiecewiseGeodesicPath>,
    weights: Vec<f64>,
    breakpoint_level: Option<u32>,
    stationary: bool,
}

impl ParticleCurve {
    pub fn new(space: Space, paths: Vec<PiecewiseGeodesicPath>, weights: Vec<f64>) -> Result<Self> {
        if paths.is_empty() || paths.len() != weights.len() {
            return Err(Error::InvalidMeasure("particle curve needs one weight per path".into()));
        }
        if paths.iter().any(|p| p.space() != space) {
            return Err(Error::SpaceMismatch);
        }
        Ok(ParticleCurve { space, paths, weights, breakpoint_level: None, stationary: false })
    }

    /// Declares the measure-level geodesic structure.
    pub fn with_breakpoint_level(mut self, level: u32) -> Self {
        self.breakpoint_level = Some(level);
        self
    }

    pub fn with_stationary_increments(mut self) -> Self {
        self.stationary = true;
        self
    }

    pub fn paths(&self) -> &[PiecewiseGeodesicPath] {
        &self.paths
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The bundle of trajectories as a lift sampled on the level-`n` grid.
    pub fn as_lift(&self, level: u32) -> Result<Lift> {
        let paths = self
            .paths
            .iter()
            .map(|p| PiecewiseGeodesicPath::from_fn(self.space, level, |t| p.eval(t)))
            .collect::<Result<_>>()?;
        Lift::new(self.space, level, paths, self.weights.clone())
    }
}

impl WassersteinCurve for ParticleCurve {
    fn space(&self) -> Space {
        self.space
    }

    fn measure_at(&self, t: f64) -> Result<DiscreteMeasure> {
        DiscreteMeasure::new(self.space, self.paths.iter().map(|p| p.eval(t)).collect(), self.weights.clone())
    }

    fn breakpoint_level(&self) -> Option<u32> {
        self.breakpoint_level
    }

    fn stationary_increments(&self) -> bool {
        self.stationary
    }
}

/// The displacement interpolation `((1 - t) x + t y)_# pi` of an optimal
/// coupling, a constant-speed Wasserstein geodesic.
#[derive(Clone, Debug)]
pub struct WassersteinGeodesic {
    coupling: Coupling,
}

impl WassersteinGeodesic {
    pub fn between(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Result<Self> {
        Ok(WassersteinGeodesic { coupling: ot::optimal_coupling(mu, nu, p)?.0 })
    }

    pub fn coupling(&self) -> &Coupling {
        &self.coupling
    }
}

impl WassersteinCurve for WassersteinGeodesic {
    fn space(&self) -> Space {
        self.coupling.row_measure().space()
    }

    fn measure_at(&self, t: f64) -> Result<DiscreteMeasure> {
        let sp = self.space();
        let (xs, ys) = (self.coupling.row_measure().atoms(), self.coupling.col_measure().atoms());
        let (atoms, weights): (Vec<Point>, Vec<f64>) =
            self.coupling.support().map(|(i, j, w)| (sp.geodesic_point(&xs[i], &ys[j], t), w)).unzip();
        DiscreteMeasure::new(sp, atoms, weights)
    }

    fn breakpoint_level(&self) -> Option<u32> {
        Some(0)
    }
}

/// A finite weighted bundle of piecewise-geodesic paths sharing a level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLift", into = "RawLift")]
pub struct Lift {
    space: Space,
    level: u32,
    paths: Vec<PiecewiseGeodesicPath>,
    weights: Vec<f64>,
}

#[derive(Clone, Serialize, Deserialize)]
struct RawPath {
    breakpoints: Vec<Point>,
}

#[derive(Clone, Serialize, Deserialize)]
struct RawLift {
    space: Space,
    level: u32,
    paths: Vec<RawPath>,
    weights: Vec<f64>,
}

impl TryFrom<RawLift> for Lift {
    type Error = Error;

    fn try_from(raw: RawLift) -> Result<Self> {
        let paths = raw
            .paths
            .into_iter()
            .map(|p| PiecewiseGeodesicPath::new(raw.space, raw.level, p.breakpoints))
            .collect::<Result<_>>()?;
        Lift::new(raw.space, raw.level, paths, raw.weights)
    }
}

impl From<Lift> for RawLift {
    fn from(l: Lift) -> Self {
        RawLift {
            space: l.space,
            level: l.level,
            paths: l.paths.into_iter().map(|p| RawPath { breakpoints: p.breakpoints().to_vec() }).collect(),
            weights: l.weights,
        }
    }
}

impl Lift {
    pub fn new(space: Space, level: u32, paths: Vec<PiecewiseGeodesicPath>, weights: Vec<f64>) -> Result<Self> {
        if paths.is_empty() || paths.len() != weights.len() {
            return Err(Error::InvalidMeasure("lift needs one positive weight per path".into()));
        }
        if paths.iter().any(|p| p.space() != space) {
            return Err(Error::SpaceMismatch);
        }
        if paths.iter().any(|p| p.level() != level) {
            return Err(Error::InvalidParameter("lift paths must share the lift level".into()));
        }
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidMeasure("lift weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > crate::measure::WEIGHT_SUM_TOLERANCE {
            return Err(Error::InvalidMeasure(format!("lift weights sum to {total}")));
        }
        let weights = weights.iter().map(|w| w / total).collect();
        Ok(Lift { space, level, paths, weights })
    }

    /// Pushes a multi-coupling over the level-`n` grid through geodesic
    /// interpolation: each support tuple becomes one path.
    pub fn from_multicoupling(mc: &MultiCoupling, level: u32) -> Result<Self> {
        if mc.len() != (1usize << level) + 1 {
            return Err(Error::InvalidParameter(format!(
                "a level-{level} lift needs {} marginals, got {}",
                (1usize << level) + 1,
                mc.len()
            )));
        }
        let space = mc.space();
        let mut paths = Vec::with_capacity(mc.entries().len());
        let mut weights = Vec::with_capacity(mc.entries().len());
        for e in mc.entries() {
            let pts = e.indices.iter().zip(mc.marginals()).map(|(&a, m)| m.atoms()[a as usize].clone()).collect();
            paths.push(PiecewiseGeodesicPath::new(space, level, pts)?);
            weights.push(e.weight);
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Lift::new(space, level, paths, weights)
    }

    /// One geodesic per support cell of `coupling`.
    pub fn from_coupling(coupling: &Coupling) -> Result<Self> {
        let sp = coupling.row_measure().space();
        let (xs, ys) = (coupling.row_measure().atoms(), coupling.col_measure().atoms());
        let mut paths = Vec::new();
        let mut weights = Vec::new();
        for (i, j, w) in coupling.support() {
            paths.push(PiecewiseGeodesicPath::geodesic_segment(sp, xs[i].clone(), ys[j].clone())?);
            weights.push(w);
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Lift::new(sp, 0, paths, weights)
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn paths(&self) -> &[PiecewiseGeodesicPath] {
        &self.paths
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// `(e_t)_# pi`.
    pub fn marginal_at(&self, t: f64) -> Result<DiscreteMeasure> {
        DiscreteMeasure::from_unnormalized(self.space, self.paths.iter().map(|p| p.eval(t)).collect(), self.weights.clone())
    }

    /// `sum_i w_i d(gamma_i(s), gamma_i(t))^p`.
    pub fn pair_cost(&self, s: f64, t: f64, p: f64) -> f64 {
        self.paths.iter().zip(&self.weights).map(|(g, w)| w * self.space.distance(&g.eval(s), &g.eval(t)).powf(p)).sum()
    }
}

/// The path functional `Psi` integrated by [`lift_energy`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Functional {
    Besov { alpha: f64, p: f64 },
    FracSobolev { alpha: f64, p: f64 },
    W1p { p: f64 },
    Holder { gamma: f64, p: f64 },
    Variation { q: f64, p: f64 },
    Modulus { delta: f64, p: f64 },
}

impl Functional {
    pub fn p(&self) -> f64 {
        match *self {
            Functional::Besov { p, .. }
            | Functional::FracSobolev { p, .. }
            | Functional::W1p { p }
            | Functional::Holder { p, .. }
            | Functional::Variation { p, .. }
            | Functional::Modulus { p, .. } => p,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Functional::Besov { .. } => "besov",
            Functional::FracSobolev { .. } => "frac_sobolev",
            Functional::W1p { .. } => "w1p",
            Functional::Holder { .. } => "holder",
            Functional::Variation { .. } => "variation",
            Functional::Modulus { .. } => "modulus",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.p();
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
        }
        match *self {
            Functional::Besov { alpha, p } | Functional::FracSobolev { alpha, p } => norms::check_alpha_p(alpha, p),
            Functional::W1p { .. } => Ok(()),
            Functional::Holder { gamma, .. } => norms::check_gamma(gamma),
            Functional::Variation { q, .. } => norms::check_q(q),
            Functional::Modulus { delta, .. } => norms::check_delta(delta),
        }
    }
}

/// `Psi(gamma) = d(gamma_0, base)^p + |gamma|^p` for one of the functionals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergySpec {
    pub functional: Functional,
    /// Adds `d(gamma_0, base)^p` when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_point: Option<Point>,
    /// Grid level for the dyadic functionals (Hölder, variation, modulus) and
    /// the curve side of [`energy_vs_curve_gap`]. Defaults to the lift level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_level: Option<u32>,
}

impl EnergySpec {
    pub fn new(functional: Functional) -> Self {
        EnergySpec { functional, base_point: None, grid_level: None }
    }

    pub fn besov(alpha: f64, p: f64) -> Self {
        Self::new(Functional::Besov { alpha, p })
    }

    pub fn with_base_point(mut self, x: Point) -> Self {
        self.base_point = Some(x);
        self
    }

    pub fn with_grid_level(mut self, level: u32) -> Self {
        self.grid_level = Some(level);
        self
    }
}

/// `|gamma|^p` for the chosen functional. Dyadic functionals are evaluated
/// on the grid of level `max(grid, path level)`.
pub fn path_energy(path: &PiecewiseGeodesicPath, functional: Functional, grid: u32) -> Result<f64> {
    let grid = grid.max(path.level());
    let p = functional.p();
    Ok(match functional {
        Functional::Besov { alpha, p } => norms::besov_energy_pg(path, alpha, p)?,
        Functional::FracSobolev { alpha, p } => norms::frac_sobolev_energy_quadrature(path, alpha, p, Quadrature::default())?,
        Functional::W1p { p } => norms::w1p_norm_pg(path, p)?.powf(p),
        Functional::Holder { gamma, .. } => norms::holder_norm_dyadic_with(path, gamma, grid, Execution::Sequential)?.powf(p),
        Functional::Variation { q, .. } => {
            let mode = match path.space() {
                Space::Euclidean { .. } => VariationMode::VertexDp,
                _ => VariationMode::Dyadic(grid),
            };
            norms::p_variation(path, q, mode)?.powf(p)
        }
        Functional::Modulus { delta, .. } => norms::modulus_of_continuity(path, delta, grid)?.powf(p),
    })
}

/// `int Psi d pi`.
pub fn lift_energy(lift: &Lift, spec: &EnergySpec) -> Result<f64> {
    lift_energy_with(lift, spec, Execution::default())
}

pub fn lift_energy_with(lift: &Lift, spec: &EnergySpec, exec: Execution) -> Result<f64> {
    spec.functional.validate()?;
    if let Some(b) = &spec.base_point {
        lift.space.validate_point(b)?;
    }
    let grid = spec.grid_level.unwrap_or(lift.level);
    let p = spec.functional.p();
    let terms: Vec<f64> = exec
        .map_range(lift.len(), |i| {
            let path = &lift.paths[i];
            let base = spec.base_point.as_ref().map_or(0.0, |b| lift.space.distance(path.start(), b).powf(p));
            path_energy(path, spec.functional, grid).map(|e| lift.weights[i] * (base + e))
        })
        .into_iter()
        .collect::<Result<_>>()?;
    Ok(ordered_sum(&terms))
}

/// The dyadic Besov series of `t -> mu_t` under `W_p`; its value is the
/// p-th power of the curve norm.
pub fn curve_besov_norm<C: WassersteinCurve + ?Sized>(curve: &C, alpha: f64, p: f64, truncation: u32) -> Result<BesovSeries> {
    norms::besov_sum(&WassersteinMetric { curve, p }, alpha, p, truncation, Execution::default())
}

/// `|mu|^p` for the chosen functional, on the level-`grid` dyadic grid for
/// the sampled functionals.
pub fn curve_energy<C: WassersteinCurve + ?Sized>(curve: &C, functional: Functional, grid: u32) -> Result<f64> {
    functional.validate()?;
    let p = functional.p();
    let w = WassersteinMetric { curve, p };
    Ok(match functional {
        Functional::Besov { alpha, p } => norms::besov_sum(&w, alpha, p, grid.max(curve.breakpoint_level().unwrap_or(0)), Execution::default())?.value(),
        Functional::W1p { p } => {
            let level = curve.breakpoint_level().map_or(grid, |l| l.max(grid));
            let s = norms::limsup_variation_dyadic(&w, p, &[level])?[0];
            // sum_k dt (W_k / dt)^p = dt^{1-p} sum_k W_k^p
            s * DyadicGrid::new(level).mesh().powf(1.0 - p)
        }
        Functional::Holder { gamma, .. } => norms::holder_norm_dyadic(&w, gamma, grid)?.powf(p),
        Functional::Variation { q, .. } => norms::p_variation_dyadic(&w, q, grid)?.powf(p),
        Functional::Modulus { delta, .. } => norms::modulus_of_continuity(&w, delta, grid)?.powf(p),
        Functional::FracSobolev { .. } => {
            return Err(Error::InvalidParameter("the fractional Sobolev curve energy is not computed; use besov".into()))
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyGap {
    pub lift_energy: f64,
    /// p-th power of the curve norm.
    pub curve_norm: f64,
    pub gap: f64,
}

/// Lift energy against the curve's own seminorm. The gap is nonnegative for
/// every lift; a vanishing gap marks a realizing lift.
pub fn energy_vs_curve_gap<C: WassersteinCurve + ?Sized>(lift: &Lift, curve: &C, spec: &EnergySpec, truncation: u32) -> Result<EnergyGap> {
    // both sides are sampled on the same grid
    let grid = spec.grid_level.unwrap_or(truncation);
    let le = lift_energy(lift, &EnergySpec { base_point: None, grid_level: Some(grid), ..spec.clone() })?;
    let cn = curve_energy(curve, spec.functional, grid)?;
    Ok(EnergyGap { lift_energy: le, curve_norm: cn, gap: le - cn })
}

fn dyadic_measures<C: WassersteinCurve + ?Sized>(curve: &C, level: u32, exec: Execution) -> Result<Vec<DiscreteMeasure>> {
    let grid = DyadicGrid::new(level);
    exec.map_range(grid.cells() + 1, |k| curve.measure_at(grid.time(k))).into_iter().collect()
}

/// Construction A: glue optimal couplings of consecutive level-`n` measures
/// left to right and interpolate each glued tuple by geodesics.
pub fn construct_lift_a<C: WassersteinCurve + ?Sized>(curve: &C, level: u32, p: f64) -> Result<Lift> {
    construct_lift_a_with(curve, level, p, Execution::default())
}

pub fn construct_lift_a_with<C: WassersteinCurve + ?Sized>(curve: &C, level: u32, p: f64, exec: Execution) -> Result<Lift> {
    let ms = dyadic_measures(curve, level, exec)?;
    let idx: Vec<usize> = (0..ms.len() - 1).collect();
    let couplings: Vec<Coupling> = exec
        .map_slice(&idx, |&k| ot::optimal_coupling(&ms[k], &ms[k + 1], p).map(|c| c.0))
        .into_iter()
        .collect::<Result<_>>()?;
    let mc = ot::glue_chain(&couplings)?;
    Lift::from_multicoupling(&mc, level)
}

/// Construction B: a multi-coupling of the level-`n` measures that is optimal
/// on the dyadic pattern, pushed through geodesic interpolation. Returns the
/// compatibility report next to the lift.
pub fn construct_lift_b_with_report<C: WassersteinCurve + ?Sized>(
    curve: &C,
    level: u32,
    p: f64,
    exec: Execution,
) -> Result<(Lift, CompatibilityReport)> {
    let ms = dyadic_measures(curve, level, exec)?;
    let pattern = compat::pairs::dyadic_pattern(level);
    let report = compat::compatibility_multicoupling_with(&ms, p, &pattern, ot::budget_from_env(), exec)?;
    let Some(cert) = &report.certificate else {
        return Err(Error::Incompatible(Box::new(report)));
    };
    let lift = Lift::from_multicoupling(cert, level)?;
    Ok((lift, report))
}

pub fn construct_lift_b<C: WassersteinCurve + ?Sized>(curve: &C, level: u32, p: f64) -> Result<Lift> {
    Ok(construct_lift_b_with_report(curve, level, p, Execution::default())?.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalReport {
    /// `(t, W_p((e_t)_# pi, mu_t))`.
    pub distances: Vec<(f64, f64)>,
    pub max_distance: f64,
    pub pass: bool,
}

pub fn marginal_check<C: WassersteinCurve + ?Sized>(lift: &Lift, curve: &C, times: &[f64], p: f64, tol: f64) -> Result<MarginalReport> {
    let distances: Vec<(f64, f64)> = Execution::default()
        .map_slice(times, |&t| -> Result<(f64, f64)> {
            Ok((t, ot::wasserstein_distance(&lift.marginal_at(t)?, &curve.measure_at(t)?, p)?))
        })
        .into_iter()
        .collect::<Result<_>>()?;
    let max_distance = distances.iter().map(|d| d.1).fold(0.0, f64::max);
    Ok(MarginalReport { distances, max_distance, pass: max_distance <= tol })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairOptimality {
    pub s: f64,
    pub t: f64,
    pub lift_cost: f64,
    pub optimal_cost: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseReport {
    pub pairs: Vec<PairOptimality>,
    pub max_gap: f64,
    pub pass: bool,
}

/// Compares `sum w d(gamma_s, gamma_t)^p` with `W_p^p(mu_s, mu_t)` for each
/// time pair.
pub fn pairwise_optimality_check<C: WassersteinCurve + ?Sized>(
    lift: &Lift,
    curve: &C,
    pairs: &[(f64, f64)],
    p: f64,
    tol: f64,
) -> Result<PairwiseReport> {
    let rows: Vec<PairOptimality> = Execution::default()
        .map_slice(pairs, |&(s, t)| -> Result<PairOptimality> {
            let lift_cost = lift.pair_cost(s, t, p);
            let optimal_cost = curve.transport_cost(s, &curve.measure_at(s)?, t, &curve.measure_at(t)?, p)?;
            Ok(PairOptimality { s, t, lift_cost, optimal_cost, gap: lift_cost - optimal_cost })
        })
        .into_iter()
        .collect::<Result<_>>()?;
    let max_gap = rows.iter().map(|r| r.gap).fold(0.0, f64::max);
    Ok(PairwiseReport { pairs: rows, max_gap, pass: max_gap <= tol })
}

/// The dyadic-pattern time pairs at level `n`.
pub fn dyadic_pattern_times(level: u32) -> Vec<(f64, f64)> {
    let g = DyadicGrid::new(level);
    compat::pairs::dyadic_pattern(level).into_iter().map(|(i, j)| (g.time(i), g.time(j))).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Construction {
    A,
    B,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub level: u32,
    /// Besov energy of the lift; `NaN` when the construction failed.
    pub energy: f64,
    pub max_marginal_err: f64,
    pub max_pair_gap: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_class: Option<ErrorClass>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub rows: Vec<DiagnosticRow>,
    /// `|mu|^p_b / (1 - 2^{-(p - alpha p)})`, the uniform energy bound.
    pub energy_bound: f64,
    pub curve_norm: f64,
}

impl Diagnostics {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("level,energy,max_marginal_err,max_pair_gap\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{},{}\n", r.level, r.energy, r.max_marginal_err, r.max_pair_gap));
        }
        s
    }
}

/// Non-dyadic probe times for marginal errors.
pub const PROBE_TIMES: [f64; 4] = [0.1, 1.0 / 3.0, 0.6, 0.9];

/// Builds a lift per level and records its Besov energy, the marginal error
/// at [`PROBE_TIMES`] and the worst dyadic-pattern optimality gap. Per-level
/// failures are recorded in the row.
pub fn convergence_diagnostics<C: WassersteinCurve + ?Sized>(
    curve: &C,
    p: f64,
    alpha: f64,
    levels: &[u32],
    construction: Construction,
    curve_truncation: u32,
) -> Result<Diagnostics> {
    norms::check_alpha_p(alpha, p)?;
    let series = curve_besov_norm(curve, alpha, p, curve_truncation)?;
    let curve_norm = series.value();
    let energy_bound = curve_norm / norms::geodesic_factor(alpha, p);
    let spec = EnergySpec::besov(alpha, p);
    let mut rows = Vec::with_capacity(levels.len());
    for &n in levels {
        let built = match construction {
            Construction::A => construct_lift_a(curve, n, p),
            Construction::B => construct_lift_b(curve, n, p),
        };
        let row = built.and_then(|lift| {
            let energy = lift_energy(&lift, &spec)?;
            let m = marginal_check(&lift, curve, &PROBE_TIMES, p, f64::INFINITY)?;
            let g = pairwise_optimality_check(&lift, curve, &dyadic_pattern_times(n), p, f64::INFINITY)?;
            Ok(DiagnosticRow { level: n, energy, max_marginal_err: m.max_distance, max_pair_gap: g.max_gap, error: None, error_class: None })
        });
        rows.push(row.unwrap_or_else(|e| DiagnosticRow {
            level: n,
            energy: f64::NAN,
            max_marginal_err: f64::NAN,
            max_pair_gap: f64::NAN,
            error: Some(e.to_string()),
            error_class: Some(e.class()),
        }));
    }
    Ok(Diagnostics { rows, energy_bound, curve_norm })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenamouBrenierReport {
    pub wasserstein_cost: f64,
    /// Besov energy of the geodesic lift of the coupling.
    pub energy: f64,
    /// `(1 - 2^{-(p - alpha p)})` times the energy.
    pub scaled_energy: f64,
    /// `scaled_energy - wasserstein_cost`.
    pub excess: f64,
    pub per_path_energy: Vec<f64>,
    pub paths_geodesic: bool,
}

/// Evaluates the dynamic identity for the geodesic lift of `coupling`.
pub fn benamou_brenier_for_coupling(coupling: &Coupling, alpha: f64, p: f64) -> Result<BenamouBrenierReport> {
    norms::check_alpha_p(alpha, p)?;
    let lift = Lift::from_coupling(coupling)?;
    let per_path_energy: Vec<f64> =
        lift.paths.iter().map(|g| norms::besov_energy_pg(g, alpha, p)).collect::<Result<_>>()?;
    let energy: f64 = per_path_energy.iter().zip(&lift.weights).map(|(e, w)| e * w).sum();
    let scaled_energy = norms::geodesic_factor(alpha, p) * energy;
    let wasserstein_cost = ot::wasserstein_cost(coupling.row_measure(), coupling.col_measure(), p)?;
    let paths_geodesic = lift
        .paths
        .iter()
        .map(|g| norms::geodesic_characterization_check(g, alpha, p, 1e-12).map(|c| c.is_geodesic))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .all(|b| b);
    Ok(BenamouBrenierReport { wasserstein_cost, energy, scaled_energy, excess: scaled_energy - wasserstein_cost, per_path_energy, paths_geodesic })
}

/// The dynamic identity for an optimal coupling of `mu` and `nu`.
pub fn benamou_brenier_check(mu: &DiscreteMeasure, nu: &DiscreteMeasure, alpha: f64, p: f64) -> Result<BenamouBrenierReport> {
    let (c, _) = ot::optimal_coupling(mu, nu, p)?;
    benamou_brenier_for_coupling(&c, alpha, p)
}
