//! Argument parsing helpers, input files and output sinks.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};
use wlift::{DiscreteMeasure, ErrorClass, FamilySpec, Space};

use crate::Common;

#[derive(Debug)]
pub enum CliError {
    Lib(wlift::Error),
    Input(String),
    Io(PathBuf, std::io::Error),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Lib(e) => class_code(e.class()),
            CliError::Input(_) | CliError::Io(..) => 2,
        }
    }
}

pub fn class_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Negative => 1,
        ErrorClass::Input => 2,
        ErrorClass::Resource => 3,
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Input(s) => write!(f, "{s}"),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

impl From<wlift::Error> for CliError {
    fn from(e: wlift::Error) -> Self {
        CliError::Lib(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn read_json(path: &Path) -> CliResult<Value> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: malformed JSON: {e}", path.display())))
}

fn measure_from_value(v: Value, path: &Path) -> CliResult<DiscreteMeasure> {
    serde_json::from_value::<DiscreteMeasure>(v).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// A file holding one measure.
pub fn read_measure(path: &Path) -> CliResult<DiscreteMeasure> {
    measure_from_value(read_json(path)?, path)
}

/// A file holding a measure or an array of measures.
pub fn read_measures(path: &Path) -> CliResult<Vec<DiscreteMeasure>> {
    match read_json(path)? {
        Value::Array(items) => items.into_iter().map(|v| measure_from_value(v, path)).collect(),
        v => Ok(vec![measure_from_value(v, path)?]),
    }
}

pub fn parse_space(s: &str) -> CliResult<Space> {
    let space = match s {
        "line" => Space::real_line(),
        "plane" => Space::euclidean(2),
        "circle" => Space::circle(),
        "cylinder" => Space::cylinder(),
        _ if s.starts_with("euclidean:") => {
            let d = s["euclidean:".len()..].parse().map_err(|_| CliError::Input(format!("bad dimension in `{s}`")))?;
            Space::euclidean(d)
        }
        _ => serde_json::from_str(s).map_err(|_| CliError::Input(format!("unknown space `{s}`")))?,
    };
    space.validate()?;
    Ok(space)
}

pub fn parse_times(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|t| {
            let t: f64 = t.trim().parse().map_err(|_| CliError::Input(format!("bad time `{t}`")))?;
            if !(0.0..=1.0).contains(&t) {
                return Err(CliError::Input(format!("time {t} outside [0, 1]")));
            }
            Ok(t)
        })
        .collect()
}

pub fn parse_levels(s: &str) -> CliResult<Vec<u32>> {
    let bad = || CliError::Input(format!("bad level range `{s}`"));
    let levels: Vec<u32> = if let Some((a, b)) = s.split_once("..") {
        let a: u32 = a.trim().parse().map_err(|_| bad())?;
        let b: u32 = b.trim_start_matches('=').trim().parse().map_err(|_| bad())?;
        (a..=b).collect()
    } else {
        s.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect::<CliResult<_>>()?
    };
    if levels.is_empty() {
        return Err(bad());
    }
    Ok(levels)
}

/// Family from `--family` (a name or a JSON file) and `--param` overrides.
/// Unset parameters of the infinite families get small defaults.
pub fn family_spec(common: &Common) -> CliResult<FamilySpec> {
    let name = common.family.as_deref().ok_or_else(|| CliError::Input("--family is required".into()))?;
    family_spec_named(name, common)
}

pub fn family_spec_named(name: &str, common: &Common) -> CliResult<FamilySpec> {
    let mut obj = if Path::new(name).extension().is_some_and(|e| e == "json") {
        match read_json(Path::new(name))? {
            Value::Object(m) => m,
            _ => return Err(CliError::Input(format!("{name}: expected a JSON object"))),
        }
    } else {
        let mut m = Map::new();
        m.insert("name".into(), name.into());
        match name {
            "oscillating_tents" => {
                m.insert("upsilon".into(), 0.8.into());
                m.insert("a".into(), 2.0.into());
                m.insert("J".into(), 6.into());
            }
            "circle_splitting" => {
                m.insert("j".into(), 0.into());
            }
            "cylinder_family" => {
                m.insert("alpha".into(), common.alpha.into());
                m.insert("a".into(), 3.0.into());
                m.insert("J".into(), 4.into());
            }
            _ => {}
        }
        m
    };
    if let Some(p) = common.p {
        obj.insert("p".into(), p.into());
    }
    for kv in &common.params {
        let (k, v) = kv.split_once('=').ok_or_else(|| CliError::Input(format!("--param expects key=value, got `{kv}`")))?;
        let v = serde_json::from_str(v.trim()).unwrap_or_else(|_| Value::String(v.trim().into()));
        obj.insert(k.trim().into(), v);
    }
    FamilySpec::from_json(&Value::Object(obj).to_string()).map_err(|e| match e {
        wlift::Error::Json(j) => CliError::Input(format!("family spec: {j}")),
        e => CliError::Lib(e),
    })
}

pub fn emit(out: &Option<PathBuf>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Io(path.clone(), e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn write_file(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

pub fn pretty(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::Parser;

    #[derive(Parser)]
    struct T {
        #[command(flatten)]
        common: Common,
    }

    fn common(args: &[&str]) -> Common {
        T::parse_from(std::iter::once("t").chain(args.iter().copied())).common
    }

    #[test]
    fn level_ranges() {
        assert_eq!(parse_levels("1..5").unwrap(), vec![1, 2, 3, 4, 5]);
        assert_eq!(parse_levels("2..=3").unwrap(), vec![2, 3]);
        assert_eq!(parse_levels("4, 6").unwrap(), vec![4, 6]);
        assert!(parse_levels("5..1").is_err());
        assert!(parse_levels("x").is_err());
    }

    #[test]
    fn spaces_and_times() {
        assert_eq!(parse_space("euclidean:3").unwrap(), Space::euclidean(3));
        assert_eq!(parse_space(r#"{"kind":"circle","perimeter":4.0}"#).unwrap(), Space::Circle { perimeter: 4.0 });
        assert!(parse_space("torus").is_err());
        assert!(parse_times("0,1.5").is_err());
    }

    #[test]
    fn family_params_keep_integer_types() {
        let c = common(&["--family", "oscillating_tents", "--param", "J=3", "--param", "upsilon=0.7"]);
        assert_eq!(
            family_spec(&c).unwrap(),
            FamilySpec::OscillatingTents { p: 2.0, upsilon: 0.7, a: 2.0, truncation: 3 }
        );
        let c = common(&["--family", "jump", "--p", "3", "--param", "j=1"]);
        assert!(matches!(family_spec(&c), Err(CliError::Input(_))));
    }
}
