//! One function per subcommand. Each returns the process exit code.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use wlift::compat::{self, pairs};
use wlift::lift::{self, Construction, Functional, WassersteinMetric};
use wlift::norms::{self, NormParams, Quadrature, VariationMode};
use wlift::ot::{self, Coupling};
use wlift::zoo::{self, Quantity};
use wlift::{DiscreteMeasure, DyadicGrid, Lift, PiecewiseGeodesicPath, Point, Space, WassersteinCurve};

use crate::input::{self, class_code, emit, family_spec, parse_levels, parse_space, parse_times, pretty, CliError, CliResult};
use crate::{Common, Format};

const DEFAULT_P: f64 = 2.0;
const DEFAULT_TRUNCATION: u32 = 10;
const DEFAULT_GRID: u32 = 8;

fn csv_quantities(rows: &[(&str, f64)]) -> String {
    let mut s = String::from("quantity,value\n");
    for (k, v) in rows {
        s.push_str(&format!("{k},{v}\n"));
    }
    s
}

#[derive(Args)]
pub struct OtArgs {
    /// Measure JSON files; ignored with --family.
    pub mu: Option<PathBuf>,
    pub nu: Option<PathBuf>,
    /// Two times `s,t` at which to sample --family (default `0,1`).
    #[arg(long)]
    pub times: Option<String>,
    /// Also print the optimal coupling.
    #[arg(long)]
    pub coupling: bool,
    #[command(flatten)]
    pub common: Common,
}

pub fn ot(a: OtArgs) -> CliResult<u8> {
    let (mu, nu, p) = if a.common.family.is_some() {
        let spec = family_spec(&a.common)?;
        let times = a.times.as_deref().map(parse_times).transpose()?.unwrap_or_else(|| vec![0.0, 1.0]);
        let [s, t] = times[..] else {
            return Err(CliError::Input(format!("--times needs two values, got {}", times.len())));
        };
        let curve = zoo::make_curve(&spec)?;
        (curve.measure_at(s)?, curve.measure_at(t)?, spec.p())
    } else {
        let (Some(m), Some(n)) = (&a.mu, &a.nu) else {
            return Err(CliError::Input("give two measure files or --family".into()));
        };
        (input::read_measure(m)?, input::read_measure(n)?, a.common.p.unwrap_or(DEFAULT_P))
    };
    let (coupling, cost) = ot::optimal_coupling(&mu, &nu, p)?;
    let distance = cost.powf(1.0 / p);
    let text = match a.common.format.unwrap_or(Format::Json) {
        Format::Json => {
            let mut v = json!({ "p": p, "distance": distance, "cost": cost });
            if a.coupling {
                v["coupling"] = serde_json::to_value(&coupling).expect("serialisable");
            }
            pretty(&v)
        }
        Format::Csv if a.coupling => {
            let mut s = String::from("i,j,weight\n");
            for (i, j, w) in coupling.support() {
                s.push_str(&format!("{i},{j},{w}\n"));
            }
            s
        }
        Format::Csv => csv_quantities(&[("p", p), ("distance", distance), ("cost", cost)]),
    };
    emit(&a.common.out, &text)?;
    Ok(0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PairSet {
    All,
    Consecutive,
    /// The dyadic pattern; needs `2^n + 1` measures.
    Dyadic,
}

#[derive(Args)]
pub struct CompatArgs {
    /// Files holding one measure or an array of measures, concatenated.
    pub measures: Vec<PathBuf>,
    /// Times at which to sample --family.
    #[arg(long)]
    pub times: Option<String>,
    #[arg(long, value_enum, default_value = "all")]
    pub pairs: PairSet,
    /// Write the certificate multi-coupling here when feasible.
    #[arg(long)]
    pub certificate: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

pub fn compat(a: CompatArgs) -> CliResult<u8> {
    let (measures, p) = if a.common.family.is_some() {
        let spec = family_spec(&a.common)?;
        let times = match (&a.times, a.common.level) {
            (Some(t), _) => parse_times(t)?,
            (None, Some(level)) => DyadicGrid::new(level).times(),
            (None, None) => return Err(CliError::Input("--family needs --times or --level".into())),
        };
        let curve = zoo::make_curve(&spec)?;
        let ms = times.iter().map(|&t| curve.measure_at(t)).collect::<wlift::Result<Vec<_>>>()?;
        (ms, spec.p())
    } else {
        let mut ms = Vec::new();
        for f in &a.measures {
            ms.extend(input::read_measures(f)?);
        }
        (ms, a.common.p.unwrap_or(DEFAULT_P))
    };
    if measures.is_empty() {
        return Err(CliError::Input("no measures given".into()));
    }
    let n = measures.len();
    let pair_list = match a.pairs {
        PairSet::All => pairs::all(n),
        PairSet::Consecutive => pairs::consecutive(n),
        PairSet::Dyadic => {
            if n < 2 || !(n - 1).is_power_of_two() {
                return Err(CliError::Input(format!("the dyadic pattern needs 2^n + 1 measures, got {n}")));
            }
            pairs::dyadic_pattern((n - 1).trailing_zeros())
        }
    };
    let report = compat::compatibility_multicoupling(&measures, p, &pair_list, ot::budget_from_env())?;
    if let (Some(path), Some(cert)) = (&a.certificate, &report.certificate) {
        input::write_file(path, &pretty(cert))?;
    }
    let verdict = if report.feasible { "feasible" } else { "infeasible" };
    let text = match a.common.format.unwrap_or(Format::Json) {
        Format::Json => {
            let mut v = serde_json::to_value(&report).expect("serialisable");
            if let Value::Object(m) = &mut v {
                m.remove("certificate");
                m.insert("verdict".into(), verdict.into());
            }
            pretty(&v)
        }
        Format::Csv => {
            let mut s = String::from("i,j,optimal_cost,achieved_cost,gap\n");
            for g in &report.pair_gaps {
                s.push_str(&format!("{},{},{},{},{}\n", g.i, g.j, g.optimal_cost, g.achieved_cost, g.gap));
            }
            s
        }
    };
    emit(&a.common.out, &text)?;
    eprintln!("{verdict}: phase-1 gap {:.3e}, least total excess {:.3e}", report.phase_one_gap, report.max_pair_gap);
    Ok(if report.feasible { 0 } else { 1 })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ConstructionArg {
    #[value(name = "A", alias = "a")]
    A,
    #[value(name = "B", alias = "b")]
    B,
}

#[derive(Args)]
pub struct LiftArgs {
    #[arg(long, value_enum, default_value = "B")]
    pub construction: ConstructionArg,
    /// Write the lift at the finest level as JSON.
    #[arg(long)]
    pub lift_out: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

pub fn lift(a: LiftArgs) -> CliResult<u8> {
    let c = &a.common;
    let spec = family_spec(c)?;
    let p = spec.p();
    let levels = match (&c.levels, c.level) {
        (Some(s), _) => parse_levels(s)?,
        (None, Some(l)) => vec![l],
        (None, None) => (1..=5).collect(),
    };
    let construction = match a.construction {
        ConstructionArg::A => Construction::A,
        ConstructionArg::B => Construction::B,
    };
    let curve = zoo::make_curve(&spec)?;
    let truncation = c.truncation.unwrap_or(DEFAULT_TRUNCATION);
    let diag = lift::convergence_diagnostics(&*curve, p, c.alpha, &levels, construction, truncation)?;
    let text = match c.format.unwrap_or(Format::Csv) {
        Format::Csv => diag.to_csv(),
        Format::Json => pretty(&diag),
    };
    emit(&c.out, &text)?;

    let mut code = 0;
    for r in &diag.rows {
        if let Some(msg) = &r.error {
            eprintln!("level {}: {msg}", r.level);
            code = code.max(r.error_class.map_or(2, class_code));
        }
    }
    if let Some(path) = &a.lift_out {
        let n = *levels.iter().max().expect("nonempty");
        let built: wlift::Result<Lift> = match construction {
            Construction::A => lift::construct_lift_a(&*curve, n, p),
            Construction::B => lift::construct_lift_b(&*curve, n, p),
        };
        match built {
            Ok(l) => input::write_file(path, &pretty(&l))?,
            Err(e) => eprintln!("no lift written: {e}"),
        }
    }
    Ok(code)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum NormKind {
    Besov,
    FracSobolev,
    Holder,
    Variation,
    Modulus,
    W1p,
    Grr,
    All,
}

#[derive(Args)]
pub struct NormsArgs {
    #[arg(long, value_enum, default_value = "besov")]
    pub norm: NormKind,
    /// A piecewise geodesic path as JSON `{space, level, breakpoints}`.
    #[arg(long)]
    pub path: Option<PathBuf>,
    /// Require `alpha * p > 1`.
    #[arg(long)]
    pub continuity: bool,
    #[command(flatten)]
    pub common: Common,
}

enum Source {
    Path(PiecewiseGeodesicPath),
    Curve(Box<dyn WassersteinCurve>, f64),
}

struct Row {
    norm: &'static str,
    value: f64,
    /// p-th power, when the functional has one.
    power: Option<f64>,
    truncation_level: Option<u32>,
    last_increment: Option<f64>,
}

impl Row {
    fn from_power(norm: &'static str, power: f64, p: f64) -> Self {
        Row { norm, value: power.powf(1.0 / p), power: Some(power), truncation_level: None, last_increment: None }
    }
}

fn unit_geodesic(space: Space) -> CliResult<PiecewiseGeodesicPath> {
    let dim = space.point_dim();
    let mut end = vec![0.0; dim];
    end[0] = 1.0;
    Ok(PiecewiseGeodesicPath::geodesic_segment(space, Point::new(vec![0.0; dim]), Point::new(end))?)
}

fn path_norm(kind: NormKind, path: &PiecewiseGeodesicPath, np: &NormParams, grid: u32) -> CliResult<Row> {
    let p = np.p;
    let grid = grid.max(path.level());
    Ok(match kind {
        NormKind::Besov => Row::from_power("besov", norms::besov_energy_pg(path, np.alpha, p)?, p),
        NormKind::FracSobolev => Row::from_power(
            "frac_sobolev",
            norms::frac_sobolev_energy_quadrature(path, np.alpha, p, Quadrature::default())?,
            p,
        ),
        NormKind::Holder => Row::from_power("holder", norms::holder_norm_dyadic(path, np.gamma, grid)?.powf(p), p),
        NormKind::Variation => {
            let mode = match path.space() {
                Space::Euclidean { .. } => VariationMode::VertexDp,
                _ => VariationMode::Dyadic(grid),
            };
            Row::from_power("variation", norms::p_variation(path, np.q, mode)?.powf(p), p)
        }
        NormKind::Modulus => Row::from_power("modulus", norms::modulus_of_continuity(path, np.delta, grid)?.powf(p), p),
        NormKind::W1p => Row::from_power("w1p", norms::w1p_norm_pg(path, p)?.powf(p), p),
        NormKind::Grr => {
            let r = norms::grr_check(path, np.alpha, p, grid.min(6))?;
            Row { norm: "grr", value: r.max_ratio, power: None, truncation_level: None, last_increment: None }
        }
        NormKind::All => unreachable!("expanded by the caller"),
    })
}

fn curve_norm(kind: NormKind, curve: &dyn WassersteinCurve, np: &NormParams, grid: u32) -> CliResult<Row> {
    let p = np.p;
    let energy = |f: Functional| lift::curve_energy(curve, f, grid);
    Ok(match kind {
        NormKind::Besov => {
            let s = norms::besov_sum(&WassersteinMetric { curve, p }, np.alpha, p, np.truncation, wlift::Execution::default())?;
            Row {
                norm: "besov",
                value: s.value().powf(1.0 / p),
                power: Some(s.value()),
                truncation_level: Some(s.truncation_level()),
                last_increment: Some(s.last_increment()),
            }
        }
        NormKind::Holder => Row::from_power("holder", energy(Functional::Holder { gamma: np.gamma, p })?, p),
        NormKind::Variation => Row::from_power("variation", energy(Functional::Variation { q: np.q, p })?, p),
        NormKind::Modulus => Row::from_power("modulus", energy(Functional::Modulus { delta: np.delta, p })?, p),
        NormKind::W1p => Row::from_power("w1p", energy(Functional::W1p { p })?, p),
        NormKind::FracSobolev | NormKind::Grr => {
            return Err(CliError::Input(format!("{kind:?} is only available for single paths (--path or geodesic)")))
        }
        NormKind::All => unreachable!("expanded by the caller"),
    })
}

pub fn norms(a: NormsArgs) -> CliResult<u8> {
    let c = &a.common;
    let source = if let Some(path) = &a.path {
        let v = input::read_json(path)?;
        let g: PiecewiseGeodesicPath =
            serde_json::from_value(v).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        Source::Path(g)
    } else if c.family.as_deref() == Some("geodesic") {
        let space = c.space.as_deref().map(parse_space).transpose()?.unwrap_or(Space::real_line());
        Source::Path(unit_geodesic(space)?)
    } else {
        let spec = family_spec(c)?;
        Source::Curve(zoo::make_curve(&spec)?, spec.p())
    };
    let p = match &source {
        Source::Path(_) => c.p.unwrap_or(DEFAULT_P),
        Source::Curve(_, p) => *p,
    };
    let np = NormParams {
        alpha: c.alpha,
        p,
        truncation: c.truncation.unwrap_or(DEFAULT_TRUNCATION),
        gamma: c.gamma,
        q: c.q.unwrap_or(p),
        delta: c.delta,
    };
    np.validate(a.continuity)?;
    let grid = c.level.unwrap_or(DEFAULT_GRID);

    let kinds: Vec<NormKind> = match (a.norm, &source) {
        (NormKind::All, Source::Path(_)) => vec![
            NormKind::Besov,
            NormKind::FracSobolev,
            NormKind::Holder,
            NormKind::Variation,
            NormKind::Modulus,
            NormKind::W1p,
            NormKind::Grr,
        ],
        (NormKind::All, Source::Curve(..)) => {
            vec![NormKind::Besov, NormKind::Holder, NormKind::Variation, NormKind::Modulus, NormKind::W1p]
        }
        (k, _) => vec![k],
    };
    let rows: Vec<Row> = kinds
        .iter()
        .map(|&k| match &source {
            Source::Path(g) => path_norm(k, g, &np, grid),
            Source::Curve(curve, _) => curve_norm(k, &**curve, &np, grid),
        })
        .collect::<CliResult<_>>()?;

    let text = match c.format.unwrap_or(Format::Json) {
        Format::Json => {
            let items: Vec<Value> = rows
                .iter()
                .map(|r| {
                    let mut v = json!({ "norm": r.norm, "value": r.value });
                    if let Some(x) = r.power {
                        v["power"] = x.into();
                    }
                    if let Some(x) = r.truncation_level {
                        v["truncation_level"] = x.into();
                    }
                    if let Some(x) = r.last_increment {
                        v["last_increment"] = x.into();
                    }
                    v
                })
                .collect();
            pretty(&json!({ "params": np, "norms": items }))
        }
        Format::Csv => {
            let mut s = String::from("norm,value,power\n");
            for r in &rows {
                let power = r.power.map_or(String::new(), |x| x.to_string());
                s.push_str(&format!("{},{},{power}\n", r.norm, r.value));
            }
            s
        }
    };
    emit(&c.out, &text)?;
    Ok(0)
}

#[derive(Args)]
pub struct BbArgs {
    pub mu: Option<PathBuf>,
    pub nu: Option<PathBuf>,
    /// Draw both measures at random with this seed instead of reading files.
    #[arg(long)]
    pub random: Option<u64>,
    /// Atoms per random measure.
    #[arg(long, default_value_t = 4)]
    pub atoms: usize,
    /// Use the independent coupling instead of an optimal one.
    #[arg(long)]
    pub product: bool,
    /// Write per-path energies as CSV for plotting.
    #[arg(long)]
    pub plot: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

fn random_measure(rng: &mut ChaCha8Rng, space: Space, atoms: usize) -> CliResult<DiscreteMeasure> {
    let pts: Vec<Point> = (0..atoms)
        .map(|_| match space {
            Space::Circle { perimeter } => Point::scalar(rng.gen_range(0.0..perimeter)),
            Space::Cylinder { perimeter } => Point::new([rng.gen_range(0.0..perimeter), rng.gen_range(-2.0..2.0)]),
            Space::Euclidean { dim } => Point::new((0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect::<Vec<_>>()),
        })
        .collect();
    let raw: Vec<f64> = (0..atoms).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    Ok(DiscreteMeasure::new(space, pts, raw.iter().map(|w| w / total).collect())?)
}

pub fn bb(a: BbArgs) -> CliResult<u8> {
    let c = &a.common;
    let p = c.p.unwrap_or(DEFAULT_P);
    let (mu, nu) = match (a.random, &a.mu, &a.nu) {
        (Some(seed), _, _) => {
            if a.atoms == 0 {
                return Err(CliError::Input("--atoms must be positive".into()));
            }
            let space = c.space.as_deref().map(parse_space).transpose()?.unwrap_or(Space::euclidean(2));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (random_measure(&mut rng, space, a.atoms)?, random_measure(&mut rng, space, a.atoms)?)
        }
        (None, Some(m), Some(n)) => (input::read_measure(m)?, input::read_measure(n)?),
        _ => return Err(CliError::Input("give two measure files or --random SEED".into())),
    };
    let coupling = if a.product { Coupling::product(&mu, &nu)? } else { ot::optimal_coupling(&mu, &nu, p)?.0 };
    let report = lift::benamou_brenier_for_coupling(&coupling, c.alpha, p)?;
    let holds = report.excess.abs() <= c.tol * report.wasserstein_cost.max(f64::MIN_POSITIVE);

    if let Some(path) = &a.plot {
        let l = Lift::from_coupling(&coupling)?;
        let mut s = String::from("path,weight,energy,endpoint_cost,geodesic\n");
        for (k, (g, w)) in l.paths().iter().zip(l.weights()).enumerate() {
            let chk = norms::geodesic_characterization_check(g, c.alpha, p, 1e-12)?;
            s.push_str(&format!("{k},{w},{},{},{}\n", report.per_path_energy[k], chk.endpoint_cost, chk.is_geodesic));
        }
        input::write_file(path, &s)?;
    }

    let text = match c.format.unwrap_or(Format::Json) {
        Format::Json => {
            let mut v = serde_json::to_value(&report).expect("serialisable");
            v["identity_holds"] = holds.into();
            v["coupling_cost"] = coupling.cost(p).into();
            pretty(&v)
        }
        Format::Csv => csv_quantities(&[
            ("wasserstein_cost", report.wasserstein_cost),
            ("coupling_cost", coupling.cost(p)),
            ("energy", report.energy),
            ("scaled_energy", report.scaled_energy),
            ("excess", report.excess),
        ]),
    };
    emit(&c.out, &text)?;
    Ok(0)
}

#[derive(Args)]
pub struct ExampleArgs {
    /// Family name: jump, two_tent, oscillating_tents, circle_splitting,
    /// cylinder_family.
    pub name: String,
    /// Sampling times; defaults to the dyadic grid of --level (default 2).
    #[arg(long)]
    pub times: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

pub fn example(a: ExampleArgs) -> CliResult<u8> {
    let c = &a.common;
    let spec = input::family_spec_named(&a.name, c)?;
    let level = c.level.unwrap_or(2);
    let times = match &a.times {
        Some(t) => parse_times(t)?,
        None => DyadicGrid::new(level).times(),
    };
    let curve = zoo::make_curve(&spec)?;
    let measures = times.iter().map(|&t| curve.measure_at(t)).collect::<wlift::Result<Vec<_>>>()?;

    let mut quantities = vec![
        Quantity::TransportCost { s: 0.0, t: 1.0 },
        Quantity::DyadicIncrementCost { level },
        Quantity::CurveBesov { alpha: c.alpha },
        Quantity::LiftBesovEnergy { alpha: c.alpha },
        Quantity::ConstructionAEnergy { alpha: c.alpha, level },
    ];
    if let Some(q) = c.q {
        quantities.push(Quantity::DyadicVariation { q, level });
        quantities.push(Quantity::LiftDyadicVariation { q, level });
    }
    // families support different quantities; report those that exist
    let reference: Vec<Value> = quantities
        .iter()
        .filter_map(|q| zoo::reference_value(&spec, *q).ok().map(|v| json!({ "quantity": q, "value": v })))
        .collect();

    let text = match c.format.unwrap_or(Format::Json) {
        Format::Json => pretty(&json!({
            "family": spec,
            "space": spec.space(),
            "times": times,
            "measures": measures,
            "reference": reference,
        })),
        Format::Csv => {
            let dim = spec.space().point_dim();
            let coords = ["x", "y", "z"];
            let mut s = String::from("t,weight");
            for k in 0..dim {
                s.push(',');
                s.push_str(coords.get(k).copied().unwrap_or("c"));
            }
            s.push('\n');
            for (t, m) in times.iter().zip(&measures) {
                for (x, w) in m.iter() {
                    s.push_str(&format!("{t},{w}"));
                    for v in x.coords() {
                        s.push_str(&format!(",{v}"));
                    }
                    s.push('\n');
                }
            }
            s
        }
    };
    emit(&c.out, &text)?;
    Ok(0)
}
