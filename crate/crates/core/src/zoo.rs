//! Example curve families with closed-form reference values.
//!
//! Infinite families are truncated at `J`; truncated weights are divided by
//! `wbar_J^{-1} = sum_{j <= J} w_j` so they sum to one, and every reference
//! formula carries that factor.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lift::{ParticleCurve, WassersteinCurve};
use crate::measure::DiscreteMeasure;
use crate::ot;
use crate::path::PiecewiseGeodesicPath;
use crate::space::{Point, Space};

fn default_p() -> f64 {
    2.0
}

/// Family name plus parameters, loadable from JSON such as
/// `{"name": "oscillating_tents", "p": 2, "upsilon": 0.8, "a": 2, "J": 10}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    /// `mu_t = (1 - t) delta_0 + t delta_1` on the line.
    Jump {
        #[serde(default = "default_p")]
        p: f64,
    },
    /// `1/2 delta_t + 1/2 delta_{3 - |2t - 1|}` on the line.
    TwoTent {
        #[serde(default = "default_p")]
        p: f64,
    },
    /// Particles `(j a, y^j_t)` in the plane, `y^j` made of `2^j` unit tents,
    /// weights proportional to `2^{-j p upsilon}`.
    OscillatingTents {
        #[serde(default = "default_p")]
        p: f64,
        upsilon: f64,
        a: f64,
        #[serde(rename = "J")]
        truncation: u32,
    },
    /// `2^{j+1}` equally spaced atoms rotating at unit speed on the circle of
    /// perimeter 2.
    CircleSplitting {
        #[serde(default = "default_p")]
        p: f64,
        j: u32,
    },
    /// Circles at heights `j a` on the cylinder, circle `j` carrying `2^{j+1}`
    /// atoms at speed `2^{j+1}` and mass proportional to `2^{-j p alpha}`.
    CylinderFamily {
        #[serde(default = "default_p")]
        p: f64,
        alpha: f64,
        a: f64,
        #[serde(rename = "J")]
        truncation: u32,
    },
}

/// Largest truncation accepted for the plane family.
pub const MAX_TENT_TRUNCATION: u32 = 16;
/// Largest truncation accepted for the cylinder family (`2^{J+2}` atoms).
pub const MAX_CYLINDER_TRUNCATION: u32 = 12;
pub const MAX_SPLITTING_INDEX: u32 = 16;

impl FamilySpec {
    pub fn name(&self) -> &'static str {
        match self {
            FamilySpec::Jump { .. } => "jump",
            FamilySpec::TwoTent { .. } => "two_tent",
            FamilySpec::OscillatingTents { .. } => "oscillating_tents",
            FamilySpec::CircleSplitting { .. } => "circle_splitting",
            FamilySpec::CylinderFamily { .. } => "cylinder_family",
        }
    }

    pub fn p(&self) -> f64 {
        match *self {
            FamilySpec::Jump { p }
            | FamilySpec::TwoTent { p }
            | FamilySpec::OscillatingTents { p, .. }
            | FamilySpec::CircleSplitting { p, .. }
            | FamilySpec::CylinderFamily { p, .. } => p,
        }
    }

    pub fn space(&self) -> Space {
        match self {
            FamilySpec::Jump { .. } | FamilySpec::TwoTent { .. } => Space::real_line(),
            FamilySpec::OscillatingTents { .. } => Space::euclidean(2),
            FamilySpec::CircleSplitting { .. } => Space::circle(),
            FamilySpec::CylinderFamily { .. } => Space::cylinder(),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: FamilySpec = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.p();
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
        }
        let open_unit = |name: &str, v: f64| {
            if v > 1.0 / p && v < 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must lie in (1/p, 1) = ({}, 1), got {v}", 1.0 / p)))
            }
        };
        match *self {
            FamilySpec::Jump { .. } | FamilySpec::TwoTent { .. } => Ok(()),
            FamilySpec::OscillatingTents { upsilon, a, truncation, .. } => {
                open_unit("upsilon", upsilon)?;
                if !(a > 1.0 && a.is_finite()) {
                    return Err(Error::InvalidParameter(format!("tent spacing a must exceed 1, got {a}")));
                }
                if truncation > MAX_TENT_TRUNCATION {
                    return Err(Error::InvalidParameter(format!("J must be at most {MAX_TENT_TRUNCATION}")));
                }
                Ok(())
            }
            FamilySpec::CircleSplitting { j, .. } => {
                if j > MAX_SPLITTING_INDEX {
                    return Err(Error::InvalidParameter(format!("j must be at most {MAX_SPLITTING_INDEX}")));
                }
                Ok(())
            }
            FamilySpec::CylinderFamily { alpha, a, truncation, .. } => {
                open_unit("alpha", alpha)?;
                if !(a > 2.0 && a.is_finite()) {
                    return Err(Error::InvalidParameter(format!("circle spacing a must exceed 2, got {a}")));
                }
                if truncation > MAX_CYLINDER_TRUNCATION {
                    return Err(Error::InvalidParameter(format!("J must be at most {MAX_CYLINDER_TRUNCATION}")));
                }
                Ok(())
            }
        }
    }

    /// Normalised truncated weights `wbar_J 2^{-j p s}`.
    pub fn weights(&self) -> Vec<f64> {
        match *self {
            FamilySpec::OscillatingTents { p, upsilon, truncation, .. } => truncated_weights(p * upsilon, truncation),
            FamilySpec::CylinderFamily { p, alpha, truncation, .. } => truncated_weights(p * alpha, truncation),
            _ => vec![1.0],
        }
    }

    /// `wbar_J`.
    pub fn weight_normalizer(&self) -> f64 {
        match *self {
            FamilySpec::OscillatingTents { p, upsilon, truncation, .. } => 1.0 / raw_weight_sum(p * upsilon, truncation),
            FamilySpec::CylinderFamily { p, alpha, truncation, .. } => 1.0 / raw_weight_sum(p * alpha, truncation),
            _ => 1.0,
        }
    }
}

fn raw_weight_sum(exponent: f64, truncation: u32) -> f64 {
    (0..=truncation).map(|j| (-(j as f64) * exponent).exp2()).sum()
}

fn truncated_weights(exponent: f64, truncation: u32) -> Vec<f64> {
    let total = raw_weight_sum(exponent, truncation);
    (0..=truncation).map(|j| (-(j as f64) * exponent).exp2() / total).collect()
}

/// `(1 - t) delta_0 + t delta_1`.
#[derive(Clone, Copy, Debug, Default)]
pub struct JumpCurve;

impl WassersteinCurve for JumpCurve {
    fn space(&self) -> Space {
        Space::real_line()
    }

    fn measure_at(&self, t: f64) -> Result<DiscreteMeasure> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidParameter(format!("time {t} outside [0, 1]")));
        }
        let (atoms, weights): (Vec<Point>, Vec<f64>) =
            [(Point::scalar(0.0), 1.0 - t), (Point::scalar(1.0), t)].into_iter().filter(|(_, w)| *w > 0.0).unzip();
        DiscreteMeasure::new(Space::real_line(), atoms, weights)
    }

    fn stationary_increments(&self) -> bool {
        true
    }
}

/// The cylinder family: circles far enough apart that optimal plans never
/// move mass between circles, so transport splits per circle.
#[derive(Clone, Debug)]
pub struct CylinderCurve {
    particles: ParticleCurve,
    perimeter: f64,
}

impl CylinderCurve {
    pub fn particles(&self) -> &ParticleCurve {
        &self.particles
    }

    fn by_height(mu: &DiscreteMeasure) -> BTreeMap<u64, (f64, Vec<Point>, Vec<f64>)> {
        let mut groups: BTreeMap<u64, (f64, Vec<Point>, Vec<f64>)> = BTreeMap::new();
        for (x, w) in mu.iter() {
            let g = groups.entry(x.0[1].to_bits()).or_default();
            g.0 += w;
            g.1.push(Point::scalar(x.0[0]));
            g.2.push(w);
        }
        groups
    }
}

impl WassersteinCurve for CylinderCurve {
    fn space(&self) -> Space {
        self.particles.space()
    }

    fn measure_at(&self, t: f64) -> Result<DiscreteMeasure> {
        self.particles.measure_at(t)
    }

    fn breakpoint_level(&self) -> Option<u32> {
        self.particles.breakpoint_level()
    }

    fn stationary_increments(&self) -> bool {
        true
    }

    fn transport_cost(&self, _s: f64, mu_s: &DiscreteMeasure, _t: f64, mu_t: &DiscreteMeasure, p: f64) -> Result<f64> {
        let (gs, gt) = (Self::by_height(mu_s), Self::by_height(mu_t));
        let matched = gs.len() == gt.len()
            && gs.iter().zip(&gt).all(|((hs, a), (ht, b))| hs == ht && (a.0 - b.0).abs() <= 1e-12);
        if !matched {
            return ot::wasserstein_cost(mu_s, mu_t, p);
        }
        let circle = Space::Circle { perimeter: self.perimeter };
        let mut total = 0.0;
        for ((_, (mass, xs, ws)), (_, (_, ys, vs))) in gs.into_iter().zip(gt) {
            let a = DiscreteMeasure::from_unnormalized(circle, xs, ws)?;
            let b = DiscreteMeasure::from_unnormalized(circle, ys, vs)?;
            total += mass * ot::wasserstein_cost(&a, &b, p)?;
        }
        Ok(total)
    }
}

fn tent_path(j: u32, a: f64) -> Result<PiecewiseGeodesicPath> {
    let n = (1usize << (j + 1)) + 1;
    let x = j as f64 * a;
    let pts = (0..n).map(|k| Point::new([x, (k % 2) as f64])).collect();
    PiecewiseGeodesicPath::new(Space::euclidean(2), j + 1, pts)
}

fn two_tent_particles() -> Result<ParticleCurve> {
    let line = Space::real_line();
    let g1 = PiecewiseGeodesicPath::geodesic_segment(line, 0.0.into(), 1.0.into())?;
    let g2 = PiecewiseGeodesicPath::new(line, 1, vec![2.0.into(), 3.0.into(), 2.0.into()])?;
    Ok(ParticleCurve::new(line, vec![g1, g2], vec![0.5, 0.5])?.with_breakpoint_level(1))
}

fn tent_particles(upsilon: f64, p: f64, a: f64, truncation: u32) -> Result<ParticleCurve> {
    let paths = (0..=truncation).map(|j| tent_path(j, a)).collect::<Result<_>>()?;
    Ok(ParticleCurve::new(Space::euclidean(2), paths, truncated_weights(p * upsilon, truncation))?
        .with_breakpoint_level(truncation + 1)
        .with_stationary_increments())
}

fn splitting_particles(j: u32) -> Result<ParticleCurve> {
    let circle = Space::circle();
    let count = 1usize << (j + 1);
    let spacing = 2.0 / count as f64;
    let paths = (0..count)
        .map(|k| {
            let x = k as f64 * spacing;
            PiecewiseGeodesicPath::new(circle, 1, vec![x.into(), (x + 0.5).into(), (x + 1.0).into()])
        })
        .collect::<Result<_>>()?;
    Ok(ParticleCurve::new(circle, paths, vec![1.0 / count as f64; count])?
        .with_breakpoint_level(j + 1)
        .with_stationary_increments())
}

fn cylinder_particles(alpha: f64, p: f64, a: f64, truncation: u32) -> Result<ParticleCurve> {
    let cyl = Space::cylinder();
    let circle_mass = truncated_weights(p * alpha, truncation);
    let mut paths = Vec::new();
    let mut weights = Vec::new();
    for j in 0..=truncation {
        let count = 1usize << (j + 1);
        let spacing = 2.0 / count as f64;
        let speed = count as f64;
        let h = j as f64 * a;
        for k in 0..count {
            let x = k as f64 * spacing;
            // level j + 2 keeps every cell displacement at 1/2
            paths.push(PiecewiseGeodesicPath::from_fn(cyl, j + 2, |t| Point::new([x + speed * t, h]))?);
            weights.push(circle_mass[j as usize] / count as f64);
        }
    }
    Ok(ParticleCurve::new(cyl, paths, weights)?.with_breakpoint_level(2 * truncation + 2).with_stationary_increments())
}

/// The measure curve of a family.
pub fn make_curve(spec: &FamilySpec) -> Result<Box<dyn WassersteinCurve>> {
    spec.validate()?;
    Ok(match *spec {
        FamilySpec::Jump { .. } => Box::new(JumpCurve),
        FamilySpec::TwoTent { .. } => Box::new(two_tent_particles()?),
        FamilySpec::OscillatingTents { p, upsilon, a, truncation } => Box::new(tent_particles(upsilon, p, a, truncation)?),
        FamilySpec::CircleSplitting { j, .. } => Box::new(splitting_particles(j)?),
        FamilySpec::CylinderFamily { p, alpha, a, truncation } => Box::new(CylinderCurve {
            particles: cylinder_particles(alpha, p, a, truncation)?,
            perimeter: 2.0,
        }),
    })
}

/// The particle-trajectory lift of a family; each family except `jump` has
/// exactly one lift on continuous paths.
pub fn known_lift(spec: &FamilySpec) -> Result<ParticleCurve> {
    spec.validate()?;
    match *spec {
        FamilySpec::Jump { .. } => Err(Error::NoContinuousLift("jump")),
        FamilySpec::TwoTent { .. } => two_tent_particles(),
        FamilySpec::OscillatingTents { p, upsilon, a, truncation } => tent_particles(upsilon, p, a, truncation),
        FamilySpec::CircleSplitting { j, .. } => splitting_particles(j),
        FamilySpec::CylinderFamily { p, alpha, a, truncation } => cylinder_particles(alpha, p, a, truncation),
    }
}

/// Quantities with closed forms. All costs are `W_p^p` with the family's `p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Quantity {
    /// `W_p^p(mu_s, mu_t)`.
    TransportCost { s: f64, t: f64 },
    /// `W_p^p(mu_{k 2^{-m}}, mu_{(k+1) 2^{-m}})`, the same for every `k`.
    DyadicIncrementCost { level: u32 },
    /// `sum_k W_p(mu_{t_k}, mu_{t_{k+1}})^q` over the level-`m` grid.
    DyadicVariation { q: f64, level: u32 },
    /// The same sum for the known lift, `sum_j w_j sum_k |Delta gamma^j|^q`.
    LiftDyadicVariation { q: f64, level: u32 },
    /// `|mu|^p` in the dyadic Besov seminorm.
    CurveBesov { alpha: f64 },
    /// Besov `|mu^j|^p` of the unit-mass circle-`j` component.
    CurveBesovComponent { alpha: f64, j: u32 },
    /// Besov energy of the known lift.
    LiftBesovEnergy { alpha: f64 },
    /// Besov energy of the level-`n` Construction A lift.
    ConstructionAEnergy { alpha: f64, level: u32 },
}

impl Quantity {
    pub fn name(&self) -> &'static str {
        match self {
            Quantity::TransportCost { .. } => "transport_cost",
            Quantity::DyadicIncrementCost { .. } => "dyadic_increment_cost",
            Quantity::DyadicVariation { .. } => "dyadic_variation",
            Quantity::LiftDyadicVariation { .. } => "lift_dyadic_variation",
            Quantity::CurveBesov { .. } => "curve_besov",
            Quantity::CurveBesovComponent { .. } => "curve_besov_component",
            Quantity::LiftBesovEnergy { .. } => "lift_besov_energy",
            Quantity::ConstructionAEnergy { .. } => "construction_a_energy",
        }
    }
}

/// Shortest rotation between two configurations of equally spaced atoms.
fn rotation_gap(shift: f64, spacing: f64) -> f64 {
    let h = shift.abs().rem_euclid(spacing);
    h.min(spacing - h)
}

/// `sum_{m >= 0} 2^{m(alpha p - p)}`.
fn geodesic_series(alpha: f64, p: f64) -> f64 {
    1.0 / (1.0 - (alpha * p - p).exp2())
}

fn check_alpha(alpha: f64, p: f64) -> Result<()> {
    crate::norms::check_alpha_p(alpha, p)
}

pub fn reference_value(spec: &FamilySpec, quantity: Quantity) -> Result<f64> {
    spec.validate()?;
    let unsupported = || Error::UnsupportedQuantity { family: spec.name(), quantity: quantity.name().to_string() };
    let p = spec.p();
    if let Quantity::TransportCost { s, t } = quantity {
        if !((0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&t)) {
            return Err(Error::InvalidParameter("times must lie in [0, 1]".into()));
        }
    }
    if let Quantity::CurveBesov { alpha }
    | Quantity::CurveBesovComponent { alpha, .. }
    | Quantity::LiftBesovEnergy { alpha }
    | Quantity::ConstructionAEnergy { alpha, .. } = quantity
    {
        check_alpha(alpha, p)?;
    }
    if let Quantity::DyadicVariation { q, .. } | Quantity::LiftDyadicVariation { q, .. } = quantity {
        crate::norms::check_q(q)?;
    }
    let tent_rise = |s: f64, t: f64| {
        let y = |u: f64| 3.0 - (2.0 * u - 1.0).abs();
        (y(t) - y(s)).abs()
    };
    match (*spec, quantity) {
        (FamilySpec::Jump { .. }, Quantity::TransportCost { s, t }) => Ok((t - s).abs()),
        (FamilySpec::Jump { .. }, Quantity::DyadicIncrementCost { level }) => Ok((-(level as f64)).exp2()),
        (FamilySpec::Jump { p }, Quantity::DyadicVariation { q, level }) => {
            let m = level as f64;
            Ok(m.exp2() * (-m * q / p).exp2())
        }
        (FamilySpec::Jump { p }, Quantity::ConstructionAEnergy { alpha, level }) => {
            // every glued path jumps across exactly one level-n cell
            let beta = alpha * p - 1.0;
            let n = level as f64;
            Ok((((n + 1.0) * beta).exp2() - 1.0) / (beta.exp2() - 1.0) + (n * beta).exp2() / ((p - alpha * p).exp2() - 1.0))
        }

        (FamilySpec::TwoTent { p }, Quantity::TransportCost { s, t }) => {
            Ok(0.5 * (t - s).abs().powf(p) + 0.5 * tent_rise(s, t).powf(p))
        }
        (FamilySpec::TwoTent { p }, Quantity::CurveBesov { alpha }) => {
            let r = (alpha * p - p).exp2();
            Ok(0.5 * (1.0 + p.exp2() * r) / (1.0 - r))
        }
        (FamilySpec::TwoTent { p }, Quantity::LiftBesovEnergy { alpha }) => {
            let r = (alpha * p - p).exp2();
            Ok(0.5 / (1.0 - r) + 0.5 * p.exp2() * r / (1.0 - r))
        }

        (FamilySpec::OscillatingTents { p, upsilon, truncation, .. }, q) => {
            let wbar = spec.weight_normalizer();
            let w = |j: u32| wbar * (-(j as f64) * p * upsilon).exp2();
            let increment = |m: u32| -> f64 {
                (0..m.min(truncation + 1)).map(|j| w(j) * ((j as f64 + 1.0 - m as f64) * p).exp2()).sum()
            };
            match q {
                Quantity::DyadicIncrementCost { level } => Ok(increment(level)),
                Quantity::DyadicVariation { q, level } => Ok((level as f64).exp2() * increment(level).powf(q / p)),
                Quantity::LiftDyadicVariation { q, level } => {
                    // tent j gains 2^{j+1-m} per level-m cell once m > j
                    let m = level as f64;
                    Ok((0..truncation.saturating_add(1).min(level))
                        .map(|j| w(j) * m.exp2() * ((j as f64 + 1.0 - m) * q).exp2())
                        .sum())
                }
                Quantity::CurveBesov { alpha } | Quantity::LiftBesovEnergy { alpha } => {
                    let scale = wbar / ((-alpha * p).exp2() - (-p).exp2());
                    Ok(scale * (0..=truncation).map(|j| (j as f64 * (alpha * p - upsilon * p)).exp2()).sum::<f64>())
                }
                _ => Err(unsupported()),
            }
        }

        (FamilySpec::CircleSplitting { p, j }, q) => {
            let spacing = (-(j as f64)).exp2();
            match q {
                Quantity::TransportCost { s, t } => Ok(rotation_gap(t - s, spacing).powf(p)),
                Quantity::DyadicIncrementCost { level } => Ok(rotation_gap((-(level as f64)).exp2(), spacing).powf(p)),
                Quantity::CurveBesov { alpha } => {
                    let c = (p - alpha * p).exp2() / ((p - alpha * p).exp2() - 1.0);
                    Ok(c * (-((j + 1) as f64) * p * (1.0 - alpha)).exp2())
                }
                Quantity::LiftBesovEnergy { alpha } => Ok(geodesic_series(alpha, p)),
                _ => Err(unsupported()),
            }
        }

        (FamilySpec::CylinderFamily { p, truncation, .. }, q) => {
            let masses = spec.weights();
            let component = |alpha: f64, j: u32| {
                (2.0 * alpha * p - p).exp2() * geodesic_series(alpha, p) * (j as f64 * (2.0 * alpha * p - p)).exp2()
            };
            match q {
                Quantity::TransportCost { s, t } => Ok((0..=truncation)
                    .map(|j| {
                        let count = (j + 1) as f64;
                        masses[j as usize] * rotation_gap(count.exp2() * (t - s), 2.0 / count.exp2()).powf(p)
                    })
                    .sum()),
                Quantity::CurveBesovComponent { alpha, j } => Ok(component(alpha, j)),
                Quantity::CurveBesov { alpha } => {
                    Ok((0..=truncation).map(|j| masses[j as usize] * component(alpha, j)).sum())
                }
                Quantity::LiftBesovEnergy { alpha } => Ok((0..=truncation)
                    .map(|j| masses[j as usize] * (((j + 1) as f64) * alpha * p).exp2() * geodesic_series(alpha, p))
                    .sum()),
                _ => Err(unsupported()),
            }
        }

        _ => Err(unsupported()),
    }
}
