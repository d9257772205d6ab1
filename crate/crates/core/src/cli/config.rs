//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Lists are comma
//! separated; shells are written `inner:outer`. Unknown or repeated keys are
//! errors.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wells::{parse_well, PotentialWell};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    HarmonicBaseline,
    TwoSidedSweep,
    HausdorffPair,
    TorusReduction,
    DecayAudit,
    StabilitySweep,
    ShellCollapse,
    CircleNoncollapse,
    FullSuite,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::HarmonicBaseline,
        Experiment::TwoSidedSweep,
        Experiment::HausdorffPair,
        Experiment::TorusReduction,
        Experiment::DecayAudit,
        Experiment::StabilitySweep,
        Experiment::ShellCollapse,
        Experiment::CircleNoncollapse,
        Experiment::FullSuite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::HarmonicBaseline => "harmonic-baseline",
            Experiment::TwoSidedSweep => "two-sided-sweep",
            Experiment::HausdorffPair => "hausdorff-pair",
            Experiment::TorusReduction => "torus-reduction",
            Experiment::DecayAudit => "decay-audit",
            Experiment::StabilitySweep => "stability-sweep",
            Experiment::ShellCollapse => "shell-collapse",
            Experiment::CircleNoncollapse => "circle-noncollapse",
            Experiment::FullSuite => "full-suite",
        }
    }

    /// Whether the experiment lives in ℝ³ regardless of `dimension`.
    fn fixed_dimension(self) -> Option<usize> {
        match self {
            Experiment::HarmonicBaseline | Experiment::HausdorffPair | Experiment::FullSuite => {
                None
            }
            _ => Some(3),
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment {s:?}")))
    }
}

/// A parsed run configuration. Unset optional keys fall back to
/// experiment-specific defaults at run time.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub experiment: Option<Experiment>,
    pub dimension: Option<usize>,
    pub radii: Option<Vec<f64>>,
    pub levels: Option<usize>,
    pub well: Option<String>,
    pub well_a: Option<String>,
    pub well_b: Option<String>,
    pub torus_radii: Option<Vec<f64>>,
    pub outer_radius: Option<f64>,
    pub shells: Option<Vec<(f64, f64)>>,
    pub tail_tol: Option<f64>,
    pub ratio_floor: Option<f64>,
    pub half_width: Option<f64>,
    pub cells: Option<usize>,
    pub coarse_cells: Option<usize>,
    pub k: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub strict: Option<bool>,
    pub out: Option<PathBuf>,
}

pub const KEYS: [&str; 20] = [
    "experiment",
    "dimension",
    "radii",
    "levels",
    "well",
    "well_a",
    "well_b",
    "torus_radii",
    "outer_radius",
    "shells",
    "tail_tol",
    "ratio_floor",
    "half_width",
    "cells",
    "coarse_cells",
    "k",
    "tol",
    "seed",
    "strict",
    "out",
];

fn bad(key: &str, value: &str) -> Error {
    Error::Config(format!("invalid value {value:?} for key {key:?}"))
}

fn scalar<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| bad(key, value))
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    let items: Vec<&str> = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if items.is_empty() {
        return Err(bad(key, value));
    }
    items.into_iter().map(|s| scalar(key, s)).collect()
}

fn shells(key: &str, value: &str) -> Result<Vec<(f64, f64)>> {
    let items: Vec<&str> = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if items.is_empty() {
        return Err(bad(key, value));
    }
    items
        .into_iter()
        .map(|s| {
            let (a, b) = s.split_once(':').ok_or_else(|| bad(key, value))?;
            Ok((scalar(key, a)?, scalar(key, b)?))
        })
        .collect()
}

fn join<T: fmt::Display>(v: &[T]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

impl RunConfig {
    /// Parses configuration text. Values are checked for syntax only;
    /// see [`RunConfig::validate`].
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            let key = key.trim();
            if seen.insert(key.to_string(), ()).is_some() {
                return Err(Error::Config(format!("key {key:?} given twice")));
            }
            cfg.set(key, value.trim())?;
        }
        Ok(cfg)
    }

    /// Sets one key from its textual value, replacing any previous value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "experiment" => self.experiment = Some(value.parse()?),
            "dimension" => self.dimension = Some(scalar(key, value)?),
            "radii" => self.radii = Some(list(key, value)?),
            "levels" => self.levels = Some(scalar(key, value)?),
            "well" => self.well = Some(value.to_string()),
            "well_a" => self.well_a = Some(value.to_string()),
            "well_b" => self.well_b = Some(value.to_string()),
            "torus_radii" => self.torus_radii = Some(list(key, value)?),
            "outer_radius" => self.outer_radius = Some(scalar(key, value)?),
            "shells" => self.shells = Some(shells(key, value)?),
            "tail_tol" => self.tail_tol = Some(scalar(key, value)?),
            "ratio_floor" => self.ratio_floor = Some(scalar(key, value)?),
            "half_width" => self.half_width = Some(scalar(key, value)?),
            "cells" => self.cells = Some(scalar(key, value)?),
            "coarse_cells" => self.coarse_cells = Some(scalar(key, value)?),
            "k" => self.k = Some(scalar(key, value)?),
            "tol" => self.tol = Some(scalar(key, value)?),
            "seed" => self.seed = Some(scalar(key, value)?),
            "strict" => self.strict = Some(scalar(key, value)?),
            "out" => self.out = Some(PathBuf::from(value)),
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, item: &str) -> Result<()> {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {item:?} is not key=value")))?;
        self.set(key.trim(), value.trim())
    }

    pub fn experiment(&self) -> Result<Experiment> {
        self.experiment
            .ok_or_else(|| Error::Config("missing required key \"experiment\"".into()))
    }

    pub fn dimension(&self) -> usize {
        self.dimension
            .or_else(|| self.experiment.and_then(Experiment::fixed_dimension))
            .unwrap_or(1)
    }

    pub fn strict(&self) -> bool {
        self.strict.unwrap_or(false)
    }

    /// Checks completeness and ranges before any computation.
    pub fn validate(&self) -> Result<()> {
        let exp = self.experiment()?;
        let dim = self.dimension();
        if !(1..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if let Some(fixed) = exp.fixed_dimension() {
            if dim != fixed {
                return Err(Error::Config(format!(
                    "experiment {exp} runs in dimension {fixed}, got {dim}"
                )));
            }
        }
        let positive = |name: &str, v: Option<f64>| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => {
                Err(Error::Config(format!("{name} must be positive, got {x}")))
            }
            _ => Ok(()),
        };
        positive("half_width", self.half_width)?;
        positive("tol", self.tol)?;
        positive("outer_radius", self.outer_radius)?;
        positive("ratio_floor", self.ratio_floor)?;
        if let Some(t) = self.tail_tol {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::Config(format!(
                    "tail_tol must lie in (0, 1), got {t}"
                )));
            }
        }
        for (name, v) in [("levels", self.levels), ("k", self.k)] {
            if v == Some(0) {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if let (Some(f), Some(c)) = (self.cells, self.coarse_cells) {
            if c >= f {
                return Err(Error::Config(format!(
                    "coarse_cells ({c}) must be below cells ({f})"
                )));
            }
        }
        for (name, v) in [("radii", &self.radii), ("torus_radii", &self.torus_radii)] {
            if let Some(list) = v {
                positive(
                    name,
                    list.iter().copied().find(|r| !(*r > 0.0 && r.is_finite())),
                )?;
            }
        }
        for (name, text) in [
            ("well", &self.well),
            ("well_a", &self.well_a),
            ("well_b", &self.well_b),
        ] {
            if let Some(t) = text {
                parse_well(t, dim).map_err(|e| Error::Config(format!("{name}: {e}")))?;
            }
        }
        match exp {
            Experiment::HausdorffPair => {
                if self.well_a.is_none() || self.well_b.is_none() {
                    return Err(Error::Config(
                        "hausdorff-pair needs both well_a and well_b".into(),
                    ));
                }
            }
            Experiment::DecayAudit => {
                if self.well.is_none() {
                    return Err(Error::Config("decay-audit needs a well".into()));
                }
            }
            Experiment::TorusReduction => {
                let outer = self.outer_radius.unwrap_or(1.0);
                for &r in self.torus_radii.as_deref().unwrap_or(&[]) {
                    PotentialWell::torus(r, outer)?;
                }
            }
            Experiment::CircleNoncollapse => {
                if let Some(radii) = &self.radii {
                    if radii.len() < 3 || radii.iter().any(|&r| r < 2.0) {
                        return Err(Error::Config(
                            "circle-noncollapse needs at least 3 radii, each at least 2".into(),
                        ));
                    }
                }
            }
            Experiment::ShellCollapse => {
                for &(d, r) in self.shells.as_deref().unwrap_or(&[]) {
                    PotentialWell::shell(3, d, r)?;
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Canonical text form: one `key = value` line per set key, sorted by
    /// key. Parsing the echo gives back an equal configuration.
    pub fn echo(&self) -> String {
        let mut entries: BTreeMap<&str, String> = BTreeMap::new();
        let mut put = |k: &'static str, v: Option<String>| {
            if let Some(v) = v {
                entries.insert(k, v);
            }
        };
        put("experiment", self.experiment.map(|e| e.to_string()));
        put("dimension", self.dimension.map(|v| v.to_string()));
        put("radii", self.radii.as_deref().map(join));
        put("levels", self.levels.map(|v| v.to_string()));
        put("well", self.well.clone());
        put("well_a", self.well_a.clone());
        put("well_b", self.well_b.clone());
        put("torus_radii", self.torus_radii.as_deref().map(join));
        put("outer_radius", self.outer_radius.map(|v| v.to_string()));
        put(
            "shells",
            self.shells.as_ref().map(|s| {
                s.iter()
                    .map(|(a, b)| format!("{a}:{b}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            }),
        );
        put("tail_tol", self.tail_tol.map(|v| v.to_string()));
        put("ratio_floor", self.ratio_floor.map(|v| v.to_string()));
        put("half_width", self.half_width.map(|v| v.to_string()));
        put("cells", self.cells.map(|v| v.to_string()));
        put("coarse_cells", self.coarse_cells.map(|v| v.to_string()));
        put("k", self.k.map(|v| v.to_string()));
        put("tol", self.tol.map(|v| v.to_string()));
        put("seed", self.seed.map(|v| v.to_string()));
        put("strict", self.strict.map(|v| v.to_string()));
        put("out", self.out.as_ref().map(|p| p.display().to_string()));
        entries
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_echoes() {
        let text = "# pair\nexperiment = hausdorff-pair\ndimension = 3\nwell_a = circle:1\n\
                    well_b = circle:1.1\nlevels = 3\ntol = 1e-9\nshells = 1:5, 1:9\nstrict = true\n";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.experiment, Some(Experiment::HausdorffPair));
        assert_eq!(cfg.shells, Some(vec![(1.0, 5.0), (1.0, 9.0)]));
        assert_eq!(cfg.tol, Some(1e-9));
        cfg.validate().unwrap();
        let echo = cfg.echo();
        assert_eq!(RunConfig::parse(&echo).unwrap(), cfg);
        let lines: Vec<&str> = echo.lines().collect();
        let mut sorted = lines.clone();
        sorted.sort();
        assert_eq!(lines, sorted);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RunConfig::parse("nonsense").is_err());
        assert!(RunConfig::parse("colour = red").is_err());
        assert!(RunConfig::parse("k = 1\nk = 2").is_err());
        assert!(RunConfig::parse("k = two").is_err());
        assert!(RunConfig::parse("experiment = warp").is_err());
        let missing = RunConfig::parse("experiment = hausdorff-pair\nwell_a = circle").unwrap();
        assert!(missing.validate().is_err());
        let no_exp = RunConfig::parse("k = 3").unwrap();
        assert!(no_exp.validate().is_err());
        let wrong_dim = RunConfig::parse("experiment = shell-collapse\ndimension = 2").unwrap();
        assert!(wrong_dim.validate().is_err());
        let bad_torus =
            RunConfig::parse("experiment = torus-reduction\ntorus_radii = 0.6").unwrap();
        assert!(bad_torus.validate().is_err());
    }

    #[test]
    fn overrides_replace_values() {
        let mut cfg = RunConfig::parse("experiment = harmonic-baseline\ncells = 400").unwrap();
        cfg.apply_override("cells=800").unwrap();
        cfg.apply_override("radii = 0.5,1").unwrap();
        assert_eq!(cfg.cells, Some(800));
        assert_eq!(cfg.radii, Some(vec![0.5, 1.0]));
        assert!(cfg.apply_override("cells").is_err());
        assert_eq!(cfg.dimension(), 1);
        let shell = RunConfig::parse("experiment = shell-collapse").unwrap();
        assert_eq!(shell.dimension(), 3);
    }
}
