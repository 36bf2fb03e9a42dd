//! Sectioned `key = value` run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rdsat::design::{parse_poles, C64};
use rdsat::io::read_sampled;
use rdsat::lmi::Mat;
use rdsat::spectral::{InputShape, DEFAULT_GRID_POINTS, DEFAULT_ORDER};

use crate::CliError;

/// One `key = value` entry with its source line.
#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

/// Raw sections keyed by lower-cased name.
#[derive(Debug, Default)]
pub struct Ini {
    sections: BTreeMap<String, BTreeMap<String, Entry>>,
}

impl Ini {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut ini = Ini::default();
        let mut current: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split(['#', ';']).next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| CliError::config(line, "unterminated section header"))?
                    .trim()
                    .to_ascii_lowercase();
                if name.is_empty() {
                    return Err(CliError::config(line, "empty section name"));
                }
                ini.sections.entry(name.clone()).or_default();
                current = Some(name);
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(CliError::config(
                    line,
                    format!("expected 'key = value', got '{content}'"),
                ));
            };
            let section = current
                .as_ref()
                .ok_or_else(|| CliError::config(line, "entry before the first [section]"))?;
            let key = key.trim().to_ascii_lowercase();
            if key.is_empty() {
                return Err(CliError::config(line, "empty key"));
            }
            let map = ini.sections.get_mut(section).expect("section exists");
            if map.contains_key(&key) {
                return Err(CliError::config(line, format!("duplicate key '{key}' in [{section}]")));
            }
            map.insert(
                key,
                Entry {
                    value: value.trim().to_string(),
                    line,
                },
            );
        }
        Ok(ini)
    }

    pub fn has(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    fn entry(&self, section: &str, key: &str) -> Option<&Entry> {
        self.sections.get(section)?.get(key)
    }

    fn keys(&self, section: &str) -> Vec<(&str, &Entry)> {
        self.sections
            .get(section)
            .map(|m| m.iter().map(|(k, v)| (k.as_str(), v)).collect())
            .unwrap_or_default()
    }

    fn check_keys(&self, section: &str, allowed: &[&str]) -> Result<(), CliError> {
        for (k, e) in self.keys(section) {
            let ok = allowed.iter().any(|a| {
                a.strip_suffix('*').map_or(*a == k, |prefix| {
                    k.starts_with(prefix) && k[prefix.len()..].parse::<usize>().is_ok()
                })
            });
            if !ok {
                return Err(CliError::config(e.line, format!("unknown key '{k}' in [{section}]")));
            }
        }
        Ok(())
    }

    fn get<T>(
        &self,
        section: &str,
        key: &str,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Result<Option<T>, CliError> {
        match self.entry(section, key) {
            None => Ok(None),
            Some(e) => parse(&e.value)
                .map(Some)
                .map_err(|msg| CliError::config(e.line, format!("[{section}] {key}: {msg}"))),
        }
    }

    fn require<T>(&self, section: &str, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> Result<T, CliError> {
        self.get(section, key, parse)?
            .ok_or_else(|| CliError::config(0, format!("missing required key '{key}' in [{section}]")))
    }

    fn line(&self, section: &str, key: &str) -> usize {
        self.entry(section, key).map_or(0, |e| e.line)
    }
}

fn num(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("'{}' is not a number", s.trim()))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("'{}' is not finite", s.trim()))
    }
}

fn count(s: &str) -> Result<usize, String> {
    s.trim()
        .parse()
        .map_err(|_| format!("'{}' is not a nonnegative integer", s.trim()))
}

fn boolean(s: &str) -> Result<bool, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => Err(format!("'{other}' is not a boolean")),
    }
}

fn list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(num).collect()
}

fn pair(s: &str) -> Result<(f64, f64), String> {
    match list(s)?.as_slice() {
        [a, b] if a < b => Ok((*a, *b)),
        [_, _] => Err("range must be increasing".into()),
        _ => Err("expected 'lo, hi'".into()),
    }
}

/// Rows separated by `|`, entries by `,`.
fn matrix(s: &str) -> Result<Mat, String> {
    let rows: Vec<Vec<f64>> = s.split('|').map(list).collect::<Result<_, _>>()?;
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err("matrix rows have different lengths".into());
    }
    Ok(Mat::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

/// `j:v, j:v` with 1-based mode indices.
fn mode_terms(s: &str) -> Result<Vec<(usize, f64)>, String> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (j, v) = p
                .split_once(':')
                .ok_or_else(|| format!("expected 'mode:value', got '{}'", p.trim()))?;
            let j = count(j)?;
            if j == 0 {
                return Err("mode indices start at 1".into());
            }
            Ok((j, num(v)?))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub enum ReactionConfig {
    Constant(f64),
    File(PathBuf),
}

#[derive(Debug, Clone)]
pub enum InputConfig {
    Modes(Vec<(usize, f64)>),
    File(PathBuf),
}

#[derive(Debug, Clone)]
pub struct ProblemConfig {
    pub length: f64,
    pub reaction: ReactionConfig,
    pub inputs: Vec<InputConfig>,
    pub level: f64,
    pub order: usize,
    pub grid_points: usize,
    pub numeric: bool,
    pub beta: f64,
}

#[derive(Debug, Clone)]
pub enum DesignConfig {
    Poles(Vec<C64>),
    Gain(Mat),
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub margin: Option<f64>,
    pub max_newton: usize,
    pub try_global: bool,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub t_end: f64,
    pub dt: Option<f64>,
    pub z0: Option<Vec<f64>>,
    pub tail: Vec<(usize, f64)>,
    pub modes: Option<usize>,
    pub nx: usize,
    pub ny: usize,
    pub x_range: Option<(f64, f64)>,
    pub y_range: Option<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct ControllerConfig {
    pub a1: Mat,
    pub a2: Mat,
    pub k2: Option<Mat>,
}

#[derive(Debug, Clone)]
pub struct BoundaryConfig {
    pub a_d: Mat,
    pub b_d: Mat,
    pub c_d: Mat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Format {
    Csv,
    Svg,
    Json,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "svg" => Ok(Format::Svg),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format '{other}' (csv, svg or json)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub design: Option<DesignConfig>,
    pub solver: SolverConfig,
    pub sim: SimConfig,
    pub controller: Option<ControllerConfig>,
    pub boundary: Option<BoundaryConfig>,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(0, format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base)
    }

    /// Relative file names are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let ini = Ini::parse(text)?;
        for name in ini.sections.keys() {
            if !["problem", "design", "solver", "sim", "controller", "boundary", "output"].contains(&name.as_str()) {
                let line = ini.sections[name].values().map(|e| e.line).min().unwrap_or(0);
                return Err(CliError::config(line, format!("unknown section [{name}]")));
            }
        }
        ini.check_keys(
            "problem",
            &[
                "length",
                "reaction",
                "reaction_file",
                "input",
                "input*",
                "level",
                "order",
                "grid_points",
                "method",
                "beta",
            ],
        )?;
        ini.check_keys("design", &["poles", "gain"])?;
        ini.check_keys("solver", &["margin", "max_newton", "try_global"])?;
        ini.check_keys(
            "sim",
            &["t_end", "dt", "z0", "tail", "modes", "nx", "ny", "x_range", "y_range"],
        )?;
        ini.check_keys("controller", &["a1", "a2", "k2"])?;
        ini.check_keys("boundary", &["a_d", "b_d", "c_d"])?;
        ini.check_keys("output", &["dir", "formats"])?;

        let resolve = |s: &str| -> Result<PathBuf, String> {
            let p = base.join(s.trim());
            if p.is_file() {
                Ok(p)
            } else {
                Err(format!("file '{}' not found", p.display()))
            }
        };

        let length = ini.require("problem", "length", num)?;
        let reaction = match (
            ini.get("problem", "reaction", num)?,
            ini.get("problem", "reaction_file", resolve)?,
        ) {
            (Some(c), None) => ReactionConfig::Constant(c),
            (None, Some(p)) => ReactionConfig::File(p),
            (Some(_), Some(_)) => {
                return Err(CliError::config(
                    ini.line("problem", "reaction_file"),
                    "give either reaction or reaction_file, not both",
                ))
            }
            (None, None) => {
                return Err(CliError::config(
                    0,
                    "missing 'reaction' or 'reaction_file' in [problem]",
                ))
            }
        };
        let parse_input = |s: &str| -> Result<InputConfig, String> {
            let s = s.trim();
            if let Some(rest) = s.strip_prefix("modes") {
                Ok(InputConfig::Modes(mode_terms(rest)?))
            } else if let Some(rest) = s.strip_prefix("file") {
                Ok(InputConfig::File(resolve(rest)?))
            } else {
                Err(format!("expected 'modes j:v, ...' or 'file PATH', got '{s}'"))
            }
        };
        let mut input_keys: Vec<(usize, &str)> = ini
            .keys("problem")
            .into_iter()
            .filter_map(|(k, _)| {
                if k == "input" {
                    Some((1, k))
                } else {
                    k.strip_prefix("input").and_then(|r| r.parse().ok()).map(|i| (i, k))
                }
            })
            .collect();
        input_keys.sort();
        let mut inputs = Vec::new();
        for (idx, (i, key)) in input_keys.iter().enumerate() {
            if *i != idx + 1 {
                return Err(CliError::config(
                    ini.line("problem", key),
                    "inputs must be numbered input1, input2, ...",
                ));
            }
            inputs.push(ini.require("problem", key, parse_input)?);
        }
        let numeric = match ini.get("problem", "method", |s| match s.trim() {
            "analytic" => Ok(false),
            "numeric" => Ok(true),
            other => Err(format!("unknown method '{other}' (analytic or numeric)")),
        })? {
            Some(v) => v,
            None => matches!(reaction, ReactionConfig::File(_)),
        };
        let problem = ProblemConfig {
            length,
            reaction,
            inputs,
            level: ini.require("problem", "level", num)?,
            order: ini.get("problem", "order", count)?.unwrap_or(DEFAULT_ORDER),
            grid_points: ini.get("problem", "grid_points", count)?.unwrap_or(DEFAULT_GRID_POINTS),
            numeric,
            beta: ini.get("problem", "beta", num)?.unwrap_or(0.0),
        };

        let design = match (
            ini.get("design", "poles", |s| parse_poles(s).map_err(|e| e.to_string()))?,
            ini.get("design", "gain", matrix)?,
        ) {
            (Some(p), None) => Some(DesignConfig::Poles(p)),
            (None, Some(k)) => Some(DesignConfig::Gain(k)),
            (None, None) => None,
            (Some(_), Some(_)) => {
                return Err(CliError::config(
                    ini.line("design", "gain"),
                    "give either poles or gain, not both",
                ))
            }
        };

        let solver = SolverConfig {
            margin: ini.get("solver", "margin", num)?,
            max_newton: ini.get("solver", "max_newton", count)?.unwrap_or(2000),
            try_global: ini.get("solver", "try_global", boolean)?.unwrap_or(true),
        };

        let sim = SimConfig {
            t_end: ini.get("sim", "t_end", num)?.unwrap_or(10.0),
            dt: ini.get("sim", "dt", num)?,
            z0: ini.get("sim", "z0", list)?,
            tail: ini.get("sim", "tail", mode_terms)?.unwrap_or_default(),
            modes: ini.get("sim", "modes", count)?,
            nx: ini.get("sim", "nx", count)?.unwrap_or(31),
            ny: ini.get("sim", "ny", count)?.unwrap_or(31),
            x_range: ini.get("sim", "x_range", pair)?,
            y_range: ini.get("sim", "y_range", pair)?,
        };

        let controller = if ini.has("controller") {
            Some(ControllerConfig {
                a1: ini.require("controller", "a1", matrix)?,
                a2: ini.require("controller", "a2", matrix)?,
                k2: ini.get("controller", "k2", matrix)?,
            })
        } else {
            None
        };
        let boundary = if ini.has("boundary") {
            Some(BoundaryConfig {
                a_d: ini.require("boundary", "a_d", matrix)?,
                b_d: ini.require("boundary", "b_d", matrix)?,
                c_d: ini.require("boundary", "c_d", matrix)?,
            })
        } else {
            None
        };

        let output = OutputConfig {
            dir: ini
                .get("output", "dir", |s| Ok(base.join(s.trim())))?
                .unwrap_or_else(|| base.join("out")),
            formats: ini
                .get("output", "formats", |s| {
                    s.split(',').map(Format::parse).collect::<Result<Vec<_>, _>>()
                })?
                .unwrap_or_else(|| vec![Format::Csv, Format::Svg, Format::Json]),
        };

        if problem.inputs.is_empty() && boundary.is_none() {
            return Err(CliError::config(
                0,
                "[problem] needs at least one input (input1 = modes 1:1, ...)",
            ));
        }
        Ok(RunConfig {
            problem,
            design,
            solver,
            sim,
            controller,
            boundary,
            output,
        })
    }

    /// Input shapes, reading sampled files.
    pub fn input_shapes(&self) -> Result<Vec<InputShape>, CliError> {
        self.problem
            .inputs
            .iter()
            .map(|i| match i {
                InputConfig::Modes(t) => Ok(InputShape::Modes(t.clone())),
                InputConfig::File(p) => Ok(InputShape::Sampled(read_sampled(p)?.1)),
            })
            .collect()
    }
}
