//! Run reports and their JSON / CSV serialisation.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds::{BoundReport, ConstantsTable, EnvelopeSample, TailSample, Verdict};
use crate::error::Result;

/// Report schema version, bumped on incompatible changes.
pub const REPORT_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub label: String,
    pub dim: usize,
    pub half_width: f64,
    pub cells: usize,
    pub coarse_cells: usize,
    pub spacing: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueRow {
    pub label: String,
    pub n: usize,
    pub fine: f64,
    pub coarse: f64,
    pub extrapolated: f64,
    pub eps_disc: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub radius: f64,
    pub dist_l2: f64,
    pub dist_weighted: f64,
    pub dist_over_sqrt_r: f64,
    pub eps_l2: f64,
    pub eps_weighted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveTiming {
    pub label: String,
    pub seconds: f64,
    pub iterations: usize,
    pub matvecs: usize,
}

/// Wall-clock data, the only part of a report that varies between
/// identical runs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Timing {
    pub total_seconds: f64,
    pub solves: Vec<SolveTiming>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    BoundFailure,
    NotConverged,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Ok => 0,
            RunStatus::BoundFailure => 1,
            RunStatus::NotConverged => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub version: String,
    pub experiment: String,
    pub config_echo: String,
    pub strict: bool,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub grids: Vec<GridInfo>,
    pub constants: Vec<ConstantsTable>,
    pub eigenvalues: Vec<EigenvalueRow>,
    pub checks: Vec<BoundReport>,
    pub decay_profile: Vec<TailSample>,
    pub envelope: Vec<EnvelopeSample>,
    pub stability: Vec<StabilityRow>,
    pub timing: Timing,
}

impl RunReport {
    pub fn new(experiment: &str, config_echo: String, strict: bool) -> Self {
        RunReport {
            schema: REPORT_SCHEMA,
            version: env!("CARGO_PKG_VERSION").to_string(),
            experiment: experiment.to_string(),
            config_echo,
            strict,
            status: RunStatus::Ok,
            error: None,
            grids: Vec::new(),
            constants: Vec::new(),
            eigenvalues: Vec::new(),
            checks: Vec::new(),
            decay_profile: Vec::new(),
            envelope: Vec::new(),
            stability: Vec::new(),
            timing: Timing::default(),
        }
    }

    pub fn check(&self, name: &str) -> Option<&BoundReport> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Checks whose name starts with `prefix`.
    pub fn checks_named<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a BoundReport> {
        self.checks
            .iter()
            .filter(move |c| c.name.starts_with(prefix))
    }

    pub fn failures(&self) -> Vec<&BoundReport> {
        self.checks
            .iter()
            .filter(|c| c.verdict.is_failure(self.strict))
            .collect()
    }

    pub fn count(&self, verdict: Verdict) -> usize {
        self.checks.iter().filter(|c| c.verdict == verdict).count()
    }

    /// Settles the status from the checks unless the run already failed.
    pub fn finalize(&mut self) {
        if self.status == RunStatus::Ok && !self.failures().is_empty() {
            self.status = RunStatus::BoundFailure;
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, FullPrecision::default());
        self.serialize(&mut ser).map_err(io::Error::from)?;
        buf.push(b'\n');
        Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
    }

    /// Writes `report.json` and the CSV side files into `dir`, returning the
    /// paths written.
    pub fn emit(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut put = |name: &str, body: String| -> Result<()> {
            let path = dir.join(name);
            fs::write(&path, body)?;
            written.push(path);
            Ok(())
        };
        put("report.json", self.to_json()?)?;
        put("eigenvalues.csv", self.eigenvalues_csv())?;
        put("decay_profile.csv", self.decay_csv())?;
        put("envelope.csv", self.envelope_csv())?;
        put("stability.csv", self.stability_csv())?;
        Ok(written)
    }

    pub fn eigenvalues_csv(&self) -> String {
        let mut s = String::from("label,n,fine,coarse,extrapolated,eps_disc,residual\n");
        for r in &self.eigenvalues {
            s += &format!(
                "{},{},{},{},{},{},{}\n",
                r.label,
                r.n,
                num(r.fine),
                num(r.coarse),
                num(r.extrapolated),
                num(r.eps_disc),
                num(r.residual)
            );
        }
        s
    }

    pub fn decay_csv(&self) -> String {
        let mut s = String::from("rho,tail_mass,bound_C1_alpha\n");
        for r in &self.decay_profile {
            s += &format!("{},{},{}\n", num(r.rho), num(r.tail_mass), num(r.bound));
        }
        s
    }

    pub fn envelope_csv(&self) -> String {
        let mut s = String::from("radius,sup_abs,bound_C2_alpha\n");
        for r in &self.envelope {
            s += &format!("{},{},{}\n", num(r.radius), num(r.sup), num(r.bound));
        }
        s
    }

    pub fn stability_csv(&self) -> String {
        let mut s = String::from("R,dist_l2,dist_weighted,dist_over_sqrtR\n");
        for r in &self.stability {
            s += &format!(
                "{},{},{},{}\n",
                num(r.radius),
                num(r.dist_l2),
                num(r.dist_weighted),
                num(r.dist_over_sqrt_r)
            );
        }
        s
    }
}

/// 17 significant digits.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// JSON formatter printing every float with 17 significant digits.
#[derive(Debug, Default)]
struct FullPrecision(serde_json::ser::PrettyFormatter<'static>);

impl serde_json::ser::Formatter for FullPrecision {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_uses_full_precision() {
        let mut r = RunReport::new(
            "harmonic-baseline",
            "experiment = harmonic-baseline\n".into(),
            false,
        );
        r.eigenvalues.push(EigenvalueRow {
            label: "point".into(),
            n: 1,
            fine: 0.1,
            coarse: 1.0 / 3.0,
            extrapolated: f64::NAN,
            eps_disc: 0.0,
            residual: 1e-300,
        });
        let json = r.to_json().unwrap();
        assert!(json.contains("1.0000000000000001e-1"));
        assert!(json.contains("3.3333333333333331e-1"));
        assert!(json.contains("null"));
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        let fine = v["eigenvalues"][0]["fine"].as_f64().unwrap();
        assert_eq!(fine, 0.1);
    }

    #[test]
    fn empty_report_gives_header_only_csvs() {
        let r = RunReport::new("x", String::new(), false);
        let dir = tempfile::tempdir().unwrap();
        let files = r.emit(dir.path()).unwrap();
        assert_eq!(files.len(), 5);
        let decay = std::fs::read_to_string(dir.path().join("decay_profile.csv")).unwrap();
        assert_eq!(decay, "rho,tail_mass,bound_C1_alpha\n");
        let stab = std::fs::read_to_string(dir.path().join("stability.csv")).unwrap();
        assert_eq!(stab, "R,dist_l2,dist_weighted,dist_over_sqrtR\n");
    }

    #[test]
    fn status_from_checks() {
        let mut r = RunReport::new("x", String::new(), false);
        r.checks.push(BoundReport::new("a", 1.05, 1.0, 0.1, "c"));
        r.finalize();
        assert_eq!(r.status, RunStatus::Ok);
        let mut strict = r.clone();
        strict.strict = true;
        strict.finalize();
        assert_eq!(strict.status, RunStatus::BoundFailure);
        assert_eq!(strict.status.exit_code(), 1);
    }
}
