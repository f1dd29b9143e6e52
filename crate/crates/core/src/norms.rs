//! Path-regularity functionals: dyadic Besov sums, fractional Sobolev
//! double integrals, Hölder, variation and modulus seminorms.
//!
//! Everything here works on a [`MetricCurve`], i.e. anything that can be
//! evaluated at a time and measured with a distance. Exact closed forms are
//! used for [`PiecewiseGeodesicPath`]s; general curves are sampled on a
//! dyadic grid of declared level.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{ordered_sum, Execution};
use crate::path::{DyadicGrid, PiecewiseGeodesicPath};
use crate::space::{Point, Space};

/// Deepest grid that is sampled point by point.
pub const SAMPLING_CAP: u32 = 22;

/// A curve `t -> X_t` on `[0, 1]` in some metric space.
pub trait MetricCurve: Sync {
    type Value: Send + Sync;

    fn value_at(&self, t: f64) -> Result<Self::Value>;

    fn distance(&self, a: &Self::Value, b: &Self::Value) -> Result<f64>;

    /// A level `L` such that the curve is a constant-speed geodesic on every
    /// level-`L` dyadic cell, if known.
    fn geodesic_level(&self) -> Option<u32> {
        None
    }

    /// Whether `d(X_s, X_{s+h})` depends on `h` only, for dyadic `s`, `h`.
    fn stationary_increments(&self) -> bool {
        false
    }
}

impl MetricCurve for PiecewiseGeodesicPath {
    type Value = Point;

    fn value_at(&self, t: f64) -> Result<Point> {
        Ok(self.eval(t))
    }

    fn distance(&self, a: &Point, b: &Point) -> Result<f64> {
        Ok(self.space().distance(a, b))
    }

    fn geodesic_level(&self) -> Option<u32> {
        Some(self.level())
    }
}

/// A point-valued curve given by a closure.
pub struct PointCurve<F> {
    space: Space,
    f: F,
    geodesic_level: Option<u32>,
}

impl<F: Fn(f64) -> Point + Sync> PointCurve<F> {
    pub fn new(space: Space, f: F) -> Self {
        PointCurve { space, f, geodesic_level: None }
    }

    /// Declares the curve piecewise geodesic on level-`level` cells.
    pub fn with_geodesic_level(mut self, level: u32) -> Self {
        self.geodesic_level = Some(level);
        self
    }
}

impl<F: Fn(f64) -> Point + Sync> MetricCurve for PointCurve<F> {
    type Value = Point;

    fn value_at(&self, t: f64) -> Result<Point> {
        let x = (self.f)(t);
        self.space.validate_point(&x)?;
        Ok(x)
    }

    fn distance(&self, a: &Point, b: &Point) -> Result<f64> {
        Ok(self.space.distance(a, b))
    }

    fn geodesic_level(&self) -> Option<u32> {
        self.geodesic_level
    }
}

/// Parameters shared by the functionals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub alpha: f64,
    pub p: f64,
    /// Truncation level `M` of dyadic sums and grids.
    pub truncation: u32,
    /// Hölder exponent.
    pub gamma: f64,
    /// Variation exponent.
    pub q: f64,
    /// Modulus window.
    pub delta: f64,
}

impl Default for NormParams {
    fn default() -> Self {
        NormParams { alpha: 0.75, p: 2.0, truncation: 10, gamma: 1.0, q: 2.0, delta: 1.0 }
    }
}

impl NormParams {
    /// Checks every range; with `continuity` also demands `alpha * p > 1`.
    pub fn validate(&self, continuity: bool) -> Result<()> {
        check_alpha_p(self.alpha, self.p)?;
        if continuity && self.alpha * self.p <= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "alpha * p = {} must exceed 1 for continuous paths",
                self.alpha * self.p
            )));
        }
        check_gamma(self.gamma)?;
        check_q(self.q)?;
        check_delta(self.delta)?;
        Ok(())
    }
}

pub(crate) fn check_alpha_p(alpha: f64, p: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("p must lie in (1, inf), got {p}")));
    }
    Ok(())
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidParameter(format!("Hölder exponent must lie in (0, 1], got {gamma}")));
    }
    Ok(())
}

pub(crate) fn check_q(q: f64) -> Result<()> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("variation exponent must be >= 1, got {q}")));
    }
    Ok(())
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter(format!("modulus window must lie in (0, 1], got {delta}")));
    }
    Ok(())
}

fn check_sampling(level: u32) -> Result<()> {
    if level > SAMPLING_CAP {
        return Err(Error::InvalidParameter(format!(
            "grid level {level} exceeds the sampling cap {SAMPLING_CAP} for curves without declared structure"
        )));
    }
    Ok(())
}

/// Curve values on the level-`m` grid.
pub fn grid_values<C: MetricCurve>(curve: &C, level: u32, exec: Execution) -> Result<Vec<C::Value>> {
    let grid = DyadicGrid::new(level);
    exec.map_range(grid.cells() + 1, |k| curve.value_at(grid.time(k))).into_iter().collect()
}

/// `sum_k d(X_{t_k}, X_{t_{k+1}})^q` over the level-`m` grid for each
/// requested level, reusing the structure hints.
fn increment_sums<C: MetricCurve>(curve: &C, q: f64, levels: &[u32], exec: Execution) -> Result<Vec<f64>> {
    let Some(&top) = levels.iter().max() else { return Ok(Vec::new()) };
    let hint = curve.geodesic_level();
    let sample_level = hint.map_or(top, |l| l.min(top));

    if curve.stationary_increments() {
        let x0 = curve.value_at(0.0)?;
        let single = |m: u32| -> Result<f64> {
            let g = DyadicGrid::new(m);
            Ok(g.cells() as f64 * curve.distance(&x0, &curve.value_at(g.mesh())?)?.powf(q))
        };
        let base = |m: u32| -> Result<f64> {
            match hint {
                Some(l) if m > l => Ok(single(l)? * ((m - l) as f64 * (1.0 - q)).exp2()),
                _ => single(m),
            }
        };
        return levels.iter().map(|&m| base(m)).collect();
    }

    check_sampling(sample_level)?;
    let values = grid_values(curve, sample_level, exec)?;
    let at_level = |m: u32| -> Result<f64> {
        let stride = 1usize << (sample_level - m);
        let cells = 1usize << m;
        let d: Vec<f64> = exec
            .map_range(cells, |k| curve.distance(&values[k * stride], &values[(k + 1) * stride]).map(|d| d.powf(q)))
            .into_iter()
            .collect::<Result<_>>()?;
        Ok(ordered_sum(&d))
    };
    let mut cache = std::collections::HashMap::new();
    let mut out = Vec::with_capacity(levels.len());
    for &m in levels {
        let v = if m <= sample_level {
            at_level(m)?
        } else {
            // m > sample_level only happens with a geodesic hint
            let base = match cache.get(&sample_level) {
                Some(&b) => b,
                None => {
                    let b = at_level(sample_level)?;
                    cache.insert(sample_level, b);
                    b
                }
            };
            base * ((m - sample_level) as f64 * (1.0 - q)).exp2()
        };
        out.push(v);
    }
    Ok(out)
}

/// Partial sums of the dyadic Besov series `sum_m 2^{m(alpha p - 1)} S_m`
/// with `S_m = sum_k d(X_{t_k}, X_{t_{k+1}})^p` on the level-`m` grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovSeries {
    pub alpha: f64,
    pub p: f64,
    pub level_sums: Vec<f64>,
    pub increments: Vec<f64>,
    /// `sum_{m <= M}` of the increments.
    pub partial_sum: f64,
    /// Exact remainder `sum_{m > M}` when the curve is declared piecewise
    /// geodesic on a level not above `M`.
    pub tail: Option<f64>,
}

impl BesovSeries {
    pub fn truncation_level(&self) -> u32 {
        self.increments.len() as u32 - 1
    }

    pub fn last_increment(&self) -> f64 {
        *self.increments.last().unwrap()
    }

    /// Partial sum plus the exact tail when available.
    pub fn value(&self) -> f64 {
        self.partial_sum + self.tail.unwrap_or(0.0)
    }

    /// Whether the last increments are not decaying, the signature of a
    /// non-summable series.
    pub fn growing(&self) -> bool {
        let n = self.increments.len();
        n >= 2 && self.increments[n - 1] >= self.increments[n - 2] && self.increments[n - 1] > 0.0
    }
}

/// Ratio of consecutive increments beyond a geodesic level.
pub fn besov_tail_ratio(alpha: f64, p: f64) -> f64 {
    (alpha * p - p).exp2()
}

pub fn besov_sum<C: MetricCurve>(curve: &C, alpha: f64, p: f64, truncation: u32, exec: Execution) -> Result<BesovSeries> {
    check_alpha_p(alpha, p)?;
    if truncation > crate::path::MAX_LEVEL {
        return Err(Error::InvalidParameter(format!("truncation {truncation} exceeds {}", crate::path::MAX_LEVEL)));
    }
    let levels: Vec<u32> = (0..=truncation).collect();
    let level_sums = increment_sums(curve, p, &levels, exec)?;
    let increments: Vec<f64> =
        level_sums.iter().enumerate().map(|(m, s)| (m as f64 * (alpha * p - 1.0)).exp2() * s).collect();
    let partial_sum = ordered_sum(&increments);
    let tail = curve.geodesic_level().filter(|&l| l <= truncation).map(|_| {
        let r = besov_tail_ratio(alpha, p);
        increments[truncation as usize] * r / (1.0 - r)
    });
    Ok(BesovSeries { alpha, p, level_sums, increments, partial_sum, tail })
}

/// `(partial sum up to M, increment at M)`; the partial sum is the p-th
/// power of the truncated norm.
pub fn besov_norm_truncated<C: MetricCurve>(curve: &C, alpha: f64, p: f64, truncation: u32) -> Result<(f64, f64)> {
    let s = besov_sum(curve, alpha, p, truncation, Execution::default())?;
    Ok((s.partial_sum, s.last_increment()))
}

/// Exact `|X|^p_{b^{alpha,p}}` of a piecewise geodesic: the coarse levels
/// `m <= n` summed directly plus the closed-form geometric tail
/// `2^{n(alpha p - 1)} / (2^{p - alpha p} - 1) sum_i d(x_i, x_{i+1})^p`.
pub fn besov_energy_pg(path: &PiecewiseGeodesicPath, alpha: f64, p: f64) -> Result<f64> {
    check_alpha_p(alpha, p)?;
    let n = path.level();
    let sp = path.space();
    let x = path.breakpoints();
    let mut total = 0.0;
    let mut finest = 0.0;
    for m in 0..=n {
        let stride = 1usize << (n - m);
        let s: f64 = (0..1usize << m).map(|k| sp.distance(&x[k * stride], &x[(k + 1) * stride]).powf(p)).sum();
        total += (m as f64 * (alpha * p - 1.0)).exp2() * s;
        if m == n {
            finest = s;
        }
    }
    Ok(total + (n as f64 * (alpha * p - 1.0)).exp2() / ((p - alpha * p).exp2() - 1.0) * finest)
}

pub fn besov_norm_pg(path: &PiecewiseGeodesicPath, alpha: f64, p: f64) -> Result<f64> {
    Ok(besov_energy_pg(path, alpha, p)?.powf(1.0 / p))
}

/// `(Σ_i Δt (d_i / Δt)^p)^{1/p}`, exact for piecewise geodesics.
pub fn w1p_norm_pg(path: &PiecewiseGeodesicPath, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
    }
    let dt = path.grid().mesh();
    let s: f64 = (0..path.segments()).map(|i| dt * (path.segment_length(i) / dt).powf(p)).sum();
    Ok(s.powf(1.0 / p))
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Quadrature resolution for the fractional Sobolev integral.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    /// Cells per axis of `[0, 1]^2`, rounded up to a multiple of the segment
    /// count so that cells never straddle a breakpoint.
    pub cells_per_side: usize,
    /// Gauss–Legendre order per cell direction.
    pub order: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature { cells_per_side: 64, order: 8 }
    }
}

/// `∬_{[a,b]^2} d(γ_s, γ_t)^p / |t - s|^{1 + alpha p} ds dt` by cellwise
/// quadrature. Cells lie inside geodesic segments; the diagonal cells are
/// integrated in closed form and the touching cells by a Duffy split that
/// absorbs the `|t - s|^{p - 1 - alpha p}` corner singularity.
fn frac_sobolev_on(path: &PiecewiseGeodesicPath, alpha: f64, p: f64, a: f64, b: f64, cells_per_piece: usize, order: usize) -> f64 {
    let sp = path.space();
    let seg = path.segments();
    let mut knots = vec![a];
    for i in 1..seg {
        let t = i as f64 / seg as f64;
        if t > a && t < b {
            knots.push(t);
        }
    }
    knots.push(b);
    let mut cells: Vec<(f64, f64, f64)> = Vec::new(); // (left, right, speed)
    for w in knots.windows(2) {
        let (l, r) = (w[0], w[1]);
        let mid = 0.5 * (l + r);
        let i = ((mid * seg as f64).floor() as usize).min(seg - 1);
        let speed = path.segment_length(i) * seg as f64;
        let h = (r - l) / cells_per_piece as f64;
        for c in 0..cells_per_piece {
            let cl = l + c as f64 * h;
            let cr = if c + 1 == cells_per_piece { r } else { cl + h };
            cells.push((cl, cr, speed));
        }
    }
    let beta = p - 1.0 - alpha * p;
    let e = 1.0 + alpha * p;
    let (gx, gw) = gauss_legendre(order);
    let vals: Vec<Vec<Point>> =
        cells.iter().map(|&(l, r, _)| gx.iter().map(|&x| path.eval(l + x * (r - l))).collect()).collect();

    let mut total = 0.0;
    for (ci, &(l, r, v)) in cells.iter().enumerate() {
        let h = r - l;
        total += v.powf(p) * 2.0 * h.powf(beta + 2.0) / ((beta + 1.0) * (beta + 2.0));
        for (cj, &(l2, r2, _)) in cells.iter().enumerate().skip(ci + 1) {
            let h2 = r2 - l2;
            let off = if cj == ci + 1 {
                duffy_adjacent(path, sp, r, h, h2, alpha, p, &gx, &gw)
            } else {
                let mut s = 0.0;
                for (ia, &xa) in gx.iter().enumerate() {
                    let s_t = l + xa * h;
                    for (ib, &xb) in gx.iter().enumerate() {
                        let t_t = l2 + xb * h2;
                        let d = sp.distance(&vals[ci][ia], &vals[cj][ib]);
                        if d > 0.0 {
                            s += gw[ia] * gw[ib] * d.powf(p) / (t_t - s_t).powf(e);
                        }
                    }
                }
                s * h * h2
            };
            total += 2.0 * off;
        }
    }
    total
}

/// Integral over `[c - h1, c] x [c, c + h2]` of `d^p / (t - s)^{1 + alpha p}`.
#[allow(clippy::too_many_arguments)]
fn duffy_adjacent(
    path: &PiecewiseGeodesicPath,
    sp: Space,
    c: f64,
    h1: f64,
    h2: f64,
    alpha: f64,
    p: f64,
    gx: &[f64],
    gw: &[f64],
) -> f64 {
    let beta = p - 1.0 - alpha * p;
    let e = 1.0 + alpha * p;
    let mut s = 0.0;
    // u = h1 x, w = h2 y; triangle x >= y: x = r, y = r eta; triangle y > x: y = r, x = r eta
    for (isg, &sg) in gx.iter().enumerate() {
        let r = sg.powf(1.0 / (beta + 2.0));
        for (ie, &eta) in gx.iter().enumerate() {
            for swap in [false, true] {
                let (x, y) = if swap { (r * eta, r) } else { (r, r * eta) };
                let d = sp.distance(&path.eval(c - h1 * x), &path.eval(c + h2 * y));
                let lin = if swap { h1 * eta + h2 } else { h1 + h2 * eta };
                let g = (d / r).powf(p) / lin.powf(e);
                s += gw[isg] * gw[ie] * g;
            }
        }
    }
    h1 * h2 * s / (beta + 2.0)
}

/// `∬ d(γ_s, γ_t)^p / |t - s|^{1 + alpha p}` over `[0, 1]^2`.
pub fn frac_sobolev_energy_quadrature(path: &PiecewiseGeodesicPath, alpha: f64, p: f64, quad: Quadrature) -> Result<f64> {
    check_alpha_p(alpha, p)?;
    if quad.cells_per_side == 0 || quad.order == 0 {
        return Err(Error::InvalidParameter("quadrature needs at least one cell and node".into()));
    }
    let seg = path.segments();
    let per = quad.cells_per_side.div_ceil(seg);
    Ok(frac_sobolev_on(path, alpha, p, 0.0, 1.0, per, quad.order))
}

pub fn frac_sobolev_norm_quadrature(path: &PiecewiseGeodesicPath, alpha: f64, p: f64, quad: Quadrature) -> Result<f64> {
    Ok(frac_sobolev_energy_quadrature(path, alpha, p, quad)?.powf(1.0 / p))
}

/// `sup d(X_s, X_t) / |t - s|^gamma` over pairs of the level-`M` grid.
pub fn holder_norm_dyadic<C: MetricCurve>(curve: &C, gamma: f64, level: u32) -> Result<f64> {
    holder_norm_dyadic_with(curve, gamma, level, Execution::default())
}

pub fn holder_norm_dyadic_with<C: MetricCurve>(curve: &C, gamma: f64, level: u32, exec: Execution) -> Result<f64> {
    check_gamma(gamma)?;
    check_sampling(level)?;
    let v = grid_values(curve, level, exec)?;
    let h = DyadicGrid::new(level).mesh();
    let rows: Vec<f64> = exec
        .map_range(v.len(), |i| -> Result<f64> {
            let mut best = 0.0f64;
            for j in i + 1..v.len() {
                let d = curve.distance(&v[i], &v[j])?;
                best = best.max(d / ((j - i) as f64 * h).powf(gamma));
            }
            Ok(best)
        })
        .into_iter()
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().fold(0.0, f64::max))
}

/// `sup d(X_s, X_t)` over level-`M` pairs with `|t - s| <= delta`.
pub fn modulus_of_continuity<C: MetricCurve>(curve: &C, delta: f64, level: u32) -> Result<f64> {
    check_delta(delta)?;
    check_sampling(level)?;
    let exec = Execution::default();
    let v = grid_values(curve, level, exec)?;
    let cells = DyadicGrid::new(level).cells();
    let width = ((delta * cells as f64 + 1e-9).floor() as usize).min(cells);
    let rows: Vec<f64> = exec
        .map_range(v.len(), |i| -> Result<f64> {
            let mut best = 0.0f64;
            for j in i + 1..=(i + width).min(cells) {
                best = best.max(curve.distance(&v[i], &v[j])?);
            }
            Ok(best)
        })
        .into_iter()
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().fold(0.0, f64::max))
}

/// How the supremum over partitions is searched.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariationMode {
    /// Partitions with points on the level-`M` grid.
    Dyadic(u32),
    /// Partitions with points among the breakpoints. This is the exact
    /// supremum for piecewise geodesics in Euclidean space, where
    /// `d(x, .)^q` is convex along every segment.
    VertexDp,
}

/// `max_partition sum d(x_{i_k}, x_{i_{k+1}})^q` over subsequences of `points`.
fn variation_dp(n: usize, q: f64, dist: impl Fn(usize, usize) -> Result<f64>) -> Result<f64> {
    let mut best = vec![0.0f64; n];
    for j in 1..n {
        let mut b = f64::NEG_INFINITY;
        for i in 0..j {
            b = b.max(best[i] + dist(i, j)?.powf(q));
        }
        best[j] = b;
    }
    Ok(best[n - 1])
}

/// q-th power of the q-variation restricted to the level-`M` grid.
pub fn p_variation_dyadic_power<C: MetricCurve>(curve: &C, q: f64, level: u32) -> Result<f64> {
    check_q(q)?;
    check_sampling(level)?;
    let v = grid_values(curve, level, Execution::default())?;
    variation_dp(v.len(), q, |i, j| curve.distance(&v[i], &v[j]))
}

pub fn p_variation_dyadic<C: MetricCurve>(curve: &C, q: f64, level: u32) -> Result<f64> {
    Ok(p_variation_dyadic_power(curve, q, level)?.powf(1.0 / q))
}

/// `|γ|_{q-var}` of a piecewise geodesic.
pub fn p_variation(path: &PiecewiseGeodesicPath, q: f64, mode: VariationMode) -> Result<f64> {
    match mode {
        VariationMode::Dyadic(m) => p_variation_dyadic(path, q, m),
        VariationMode::VertexDp => {
            check_q(q)?;
            let x = path.breakpoints();
            let sp = path.space();
            Ok(variation_dp(x.len(), q, |i, j| Ok(sp.distance(&x[i], &x[j])))?.powf(1.0 / q))
        }
    }
}

/// `sum_k d(X_{t_k}, X_{t_{k+1}})^q` on the level-`m` grid, for each
/// requested level.
pub fn limsup_variation_dyadic<C: MetricCurve>(curve: &C, q: f64, levels: &[u32]) -> Result<Vec<f64>> {
    check_q(q)?;
    increment_sums(curve, q, levels, Execution::default())
}

/// The constant `(32 (alpha p + 1) / (alpha p - 1))^{1/p}`.
pub fn grr_constant(alpha: f64, p: f64) -> f64 {
    (32.0 * (alpha * p + 1.0) / (alpha * p - 1.0)).powf(1.0 / p)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrrReport {
    /// Largest `d(γ_s, γ_t) / (cbar |t - s|^{alpha - 1/p} |γ|_{W^{alpha,p}; [s, t]})`.
    pub max_ratio: f64,
    pub cbar: f64,
    pub pairs_checked: usize,
    /// Pairs with `d(γ_s, γ_t) = 0`, which cannot violate the bound.
    pub pairs_skipped: usize,
}

/// Samples the Garsia–Rodemich–Rumsey bound on all pairs of the level-`m`
/// grid.
pub fn grr_check(path: &PiecewiseGeodesicPath, alpha: f64, p: f64, level: u32) -> Result<GrrReport> {
    check_alpha_p(alpha, p)?;
    if alpha * p <= 1.0 {
        return Err(Error::InvalidParameter("the GRR bound needs alpha * p > 1".into()));
    }
    check_sampling(level)?;
    let cbar = grr_constant(alpha, p);
    let grid = DyadicGrid::new(level);
    let times = grid.times();
    let pairs: Vec<(f64, f64)> =
        (0..times.len()).flat_map(|i| (i + 1..times.len()).map(move |j| (i, j))).map(|(i, j)| (times[i], times[j])).collect();
    let ratios: Vec<Option<f64>> = Execution::default().map_slice(&pairs, |&(s, t)| {
        let d = path.space().distance(&path.eval(s), &path.eval(t));
        if d == 0.0 {
            return None;
        }
        let local = frac_sobolev_on(path, alpha, p, s, t, 2, 6).powf(1.0 / p);
        Some(d / (cbar * (t - s).powf(alpha - 1.0 / p) * local))
    });
    let skipped = ratios.iter().filter(|r| r.is_none()).count();
    let max_ratio = ratios.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
    Ok(GrrReport { max_ratio, cbar, pairs_checked: pairs.len() - skipped, pairs_skipped: skipped })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicCheck {
    /// `d(γ_0, γ_1)^p`.
    pub endpoint_cost: f64,
    /// `(1 - 2^{-(p - alpha p)}) |γ|^p_{b^{alpha,p}}`.
    pub scaled_energy: f64,
    pub is_geodesic: bool,
}

/// `(1 - 2^{-(p - alpha p)})`, the factor in the endpoint bound.
pub fn geodesic_factor(alpha: f64, p: f64) -> f64 {
    1.0 - (-(p - alpha * p)).exp2()
}

/// Compares the endpoint cost against the scaled Besov energy; equality holds
/// exactly for constant-speed geodesics.
pub fn geodesic_characterization_check(path: &PiecewiseGeodesicPath, alpha: f64, p: f64, tol: f64) -> Result<GeodesicCheck> {
    let energy = besov_energy_pg(path, alpha, p)?;
    let endpoint_cost = path.space().distance(path.start(), path.end()).powf(p);
    let scaled_energy = geodesic_factor(alpha, p) * energy;
    let is_geodesic = (endpoint_cost - scaled_energy).abs() <= tol * energy.max(f64::MIN_POSITIVE) || energy == 0.0;
    Ok(GeodesicCheck { endpoint_cost, scaled_energy, is_geodesic })
}

/// Upper bound on `|γ|^p_b` from a dyadic Hölder seminorm with exponent
/// `upsilon > alpha`.
pub fn holder_besov_bound(holder: f64, upsilon: f64, alpha: f64, p: f64) -> f64 {
    holder.powf(p) / (1.0 - (-(upsilon * p - alpha * p)).exp2())
}

/// Serializable summary of one functional evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub norm: String,
    pub params: serde_json::Value,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_level: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_estimate: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    fn line_path(level: u32, xs: &[f64]) -> PiecewiseGeodesicPath {
        PiecewiseGeodesicPath::new(Space::real_line(), level, xs.iter().map(|&x| Point::scalar(x)).collect()).unwrap()
    }

    fn unit() -> PiecewiseGeodesicPath {
        line_path(0, &[0.0, 1.0])
    }

    fn tent() -> PiecewiseGeodesicPath {
        line_path(1, &[0.0, 1.0, 0.0])
    }

    /// The upper path of the two-tent example, `3 - |2t - 1|`.
    fn upper_tent() -> PiecewiseGeodesicPath {
        line_path(1, &[2.0, 3.0, 2.0])
    }

    #[test]
    fn constant_path_is_flat() {
        let c = line_path(2, &[0.5; 5]);
        assert_eq!(besov_energy_pg(&c, 0.75, 2.0).unwrap(), 0.0);
        assert_eq!(besov_sum(&c, 0.75, 2.0, 12, Execution::Sequential).unwrap().value(), 0.0);
        assert_eq!(frac_sobolev_energy_quadrature(&c, 0.75, 2.0, Quadrature::default()).unwrap(), 0.0);
    }

    #[test]
    fn geodesic_besov_closed_form() {
        assert_abs_diff_eq!(besov_energy_pg(&unit(), 0.75, 2.0).unwrap(), 2.0 + SQRT2, epsilon = 1e-12);
        let (partial, last) = besov_norm_truncated(&unit(), 0.75, 2.0, 40).unwrap();
        assert!((partial - (2.0 + SQRT2)).abs() < 1e-5);
        assert!(last > 0.0 && last < 1e-5);
    }

    #[test]
    fn tent_against_brute_force_double_sum() {
        let exact = besov_energy_pg(&tent(), 0.75, 2.0).unwrap();
        assert_abs_diff_eq!(exact, 4.0 + 4.0 * SQRT2, epsilon = 1e-12);
        // brute force on the closed-form tent function, then bound the rest
        let f = |t: f64| 1.0 - (2.0 * t - 1.0).abs();
        let top = 20;
        let mut partial = 0.0;
        let mut last = 0.0;
        for m in 0..=top {
            let cells = 1u64 << m;
            let h = 1.0 / cells as f64;
            let s: f64 = (0..cells).map(|k| (f((k + 1) as f64 * h) - f(k as f64 * h)).powi(2)).sum();
            last = (m as f64 * 0.5).exp2() * s;
            partial += last;
        }
        let r = besov_tail_ratio(0.75, 2.0);
        assert!(partial <= exact + 1e-12);
        assert!(exact <= partial + last * r / (1.0 - r) + 1e-9);
        // the structured series reproduces the same partial sum
        let s = besov_sum(&tent(), 0.75, 2.0, top, Execution::Sequential).unwrap();
        assert_abs_diff_eq!(s.partial_sum, partial, epsilon = 1e-9);
        assert_abs_diff_eq!(s.value(), exact, epsilon = 1e-9);
    }

    #[test]
    fn truncated_sums_are_monotone() {
        let p = line_path(2, &[0.0, 0.7, -0.2, 1.4, 1.0]);
        let mut prev = 0.0;
        for m in 0..16 {
            let (v, _) = besov_norm_truncated(&p, 0.6, 3.0, m).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn unstructured_curve_sampling() {
        let c = PointCurve::new(Space::real_line(), |t: f64| Point::scalar(t));
        let s = besov_sum(&c, 0.75, 2.0, 12, Execution::Parallel).unwrap();
        assert!(s.tail.is_none());
        let exact = 2.0 + SQRT2;
        assert!(s.partial_sum < exact && exact - s.partial_sum < 0.05);
        assert!(matches!(besov_sum(&c, 0.75, 2.0, 30, Execution::Sequential), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn parameter_ranges() {
        assert!(besov_energy_pg(&unit(), 1.0, 2.0).is_err());
        assert!(besov_energy_pg(&unit(), 0.5, 1.0).is_err());
        let bad = NormParams { alpha: 0.4, p: 2.0, ..NormParams::default() };
        assert!(bad.validate(false).is_ok());
        assert!(bad.validate(true).is_err());
        assert!(holder_norm_dyadic(&unit(), 1.5, 3).is_err());
    }

    #[test]
    fn frac_sobolev_geodesic() {
        let v = frac_sobolev_energy_quadrature(&unit(), 0.75, 2.0, Quadrature::default()).unwrap();
        assert!((v - 8.0 / 3.0).abs() < 1e-6, "{v}");
    }

    #[test]
    fn frac_sobolev_tent_converges() {
        // tent: split the square by the breakpoint; closed form via the same
        // kernel integrated on each quadrant
        let coarse = frac_sobolev_energy_quadrature(&tent(), 0.75, 2.0, Quadrature { cells_per_side: 16, order: 8 }).unwrap();
        let fine = frac_sobolev_energy_quadrature(&tent(), 0.75, 2.0, Quadrature { cells_per_side: 128, order: 8 }).unwrap();
        assert!((coarse - fine).abs() < 1e-4 * fine);
    }

    #[test]
    fn holder_examples() {
        assert_abs_diff_eq!(holder_norm_dyadic(&unit(), 1.0, 6).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(holder_norm_dyadic(&upper_tent(), 1.0, 6).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn variation_examples() {
        for q in [1.0, 2.0, 3.5] {
            assert_abs_diff_eq!(p_variation(&unit(), q, VariationMode::VertexDp).unwrap(), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(p_variation(&unit(), q, VariationMode::Dyadic(5)).unwrap(), 1.0, epsilon = 1e-12);
        }
        let v = p_variation(&upper_tent(), 2.0, VariationMode::VertexDp).unwrap();
        assert_abs_diff_eq!(v * v, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn vertex_dp_matches_exhaustive_partitions() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let sp = Space::euclidean(2);
            let pts: Vec<Point> = (0..9).map(|_| Point::new(vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])).collect();
            let path = PiecewiseGeodesicPath::new(sp, 3, pts.clone()).unwrap();
            let q = rng.gen_range(1.0..4.0);
            // every subset of interior breakpoints
            let mut best = 0.0f64;
            for mask in 0u32..128 {
                let mut idx = vec![0usize];
                idx.extend((1..8).filter(|i| mask & (1 << (i - 1)) != 0));
                idx.push(8);
                let s: f64 = idx.windows(2).map(|w| sp.distance(&pts[w[0]], &pts[w[1]]).powf(q)).sum();
                best = best.max(s);
            }
            let v = p_variation(&path, q, VariationMode::VertexDp).unwrap();
            assert_abs_diff_eq!(v.powf(q), best, epsilon = 1e-12);
            let d = p_variation(&path, q, VariationMode::Dyadic(5)).unwrap();
            assert_abs_diff_eq!(d, v, epsilon = 1e-10);
        }
    }

    #[test]
    fn variation_decreases_in_q() {
        let p = line_path(3, &[0.0, 0.4, -0.3, 0.9, 0.2, 0.25, -1.0, 0.1, 0.6]);
        let mut prev = f64::INFINITY;
        for q in [1.0, 1.5, 2.0, 3.0, 5.0] {
            let v = p_variation(&p, q, VariationMode::VertexDp).unwrap();
            assert!(v <= prev + 1e-12);
            prev = v;
        }
    }

    #[test]
    fn limsup_variation_of_bounded_variation_path() {
        let v = limsup_variation_dyadic(&tent(), 2.0, &[2, 4, 8, 16, 20]).unwrap();
        assert!(v.windows(2).all(|w| w[1] < w[0]));
        assert!(v[4] < 1e-5);
        let c = line_path(0, &[1.0, 1.0]);
        assert!(limsup_variation_dyadic(&c, 2.0, &[1, 5, 9]).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn w1p_examples() {
        assert_abs_diff_eq!(w1p_norm_pg(&unit(), 2.0).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(w1p_norm_pg(&tent(), 2.0).unwrap(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn modulus_examples() {
        assert_abs_diff_eq!(modulus_of_continuity(&unit(), 1.0, 6).unwrap(), 1.0);
        assert_abs_diff_eq!(modulus_of_continuity(&upper_tent(), 1.0, 6).unwrap(), 1.0);
        for delta in [0.5, 0.25, 0.125, 1.0 / 64.0] {
            assert!(modulus_of_continuity(&tent(), delta, 8).unwrap() <= 2.0 * delta + 1e-12);
        }
    }

    #[test]
    fn grr_examples() {
        let r = grr_check(&unit(), 0.75, 2.0, 3).unwrap();
        assert!(r.max_ratio <= 1.0 && r.max_ratio > 0.0);
        assert_abs_diff_eq!(r.cbar, 160f64.sqrt(), epsilon = 1e-12);
        let c = grr_check(&line_path(1, &[0.0; 3]), 0.75, 2.0, 2).unwrap();
        assert_eq!(c.pairs_checked, 0);
        assert_eq!(c.max_ratio, 0.0);
    }

    #[test]
    fn geodesic_characterization() {
        assert!(geodesic_characterization_check(&unit(), 0.75, 2.0, 1e-12).unwrap().is_geodesic);
        let t = geodesic_characterization_check(&tent(), 0.75, 2.0, 1e-12).unwrap();
        assert!(!t.is_geodesic);
        assert_eq!(t.endpoint_cost, 0.0);
        // same endpoints, speed 0.5 then 1.5
        let uneven = line_path(1, &[0.0, 0.25, 1.0]);
        let u = geodesic_characterization_check(&uneven, 0.75, 2.0, 1e-9).unwrap();
        assert!(!u.is_geodesic);
        assert!(u.endpoint_cost < u.scaled_energy);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        for k in 0..16 {
            let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
            assert_abs_diff_eq!(v, 1.0 / (k as f64 + 1.0), epsilon = 1e-14);
        }
    }
}
