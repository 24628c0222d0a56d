//! Experiment configs (one TOML file per run), evaluation, artifacts and the
//! built-in suites.

mod scenarios;

pub use scenarios::{full_suite, smoke_suite};

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::events::EventSpec;
use crate::kernels::{grid_points, index_points, CovarianceModel};
use crate::mc::{self, ConstantMode, Functional, InequalityReport, IntegrationBox, TheoremId, Verdict};
use crate::measures::lattice_ball;
use crate::sampler::snapshot::{self, SnapshotHeader, SNAPSHOT_FORMAT};
use crate::sampler::{CirculantPlan, DensePlan, GaussianField, Grid, SamplerPlan};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "SPRINKLE_OUTPUT_DIR";
const FALLBACK_OUTPUT_DIR: &str = "sprinkle-out";

/// Where the field lives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    /// Row-major grid; site `(x_0, …, x_{d-1})` sits at `spacing · x`.
    Grid { shape: Vec<usize>, spacing: f64 },
    /// Integer points of closed Euclidean balls, ball by ball.
    Balls { centers: Vec<Vec<i64>>, radius: f64 },
    /// Points `0..len` for matrix and i.i.d. models.
    Index { len: usize },
}

impl Domain {
    pub fn points(&self) -> Vec<Vec<f64>> {
        match self {
            Self::Grid { shape, spacing } => grid_points(shape, *spacing),
            Self::Balls { centers, radius } => centers.iter().flat_map(|c| lattice_ball(c, *radius)).collect(),
            Self::Index { len } => index_points(*len),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Grid { shape, .. } => shape.iter().product(),
            Self::Balls { centers, radius } => centers.iter().map(|c| lattice_ball(c, *radius).len()).sum(),
            Self::Index { len } => *len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Which inequality to check and its constants. Fields a verifier does not use
/// are ignored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremSpec {
    pub id: TheoremId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant_mode: Option<ConstantMode>,
    /// sprinkling on the first event (or the only one)
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// sprinkling on the second event; defaults to `eps`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta2: Option<f64>,
    /// finite-range cut-off
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_nodes: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub functionals: Vec<Functional>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<IntegrationBox>,
}

impl TheoremSpec {
    pub fn new(id: TheoremId) -> Self {
        Self {
            id,
            constant_mode: None,
            eps: None,
            eps2: None,
            delta1: None,
            delta2: None,
            radius: None,
            t_nodes: None,
            functionals: Vec::new(),
            window: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub replicates: u64,
    pub seed: u64,
    /// rayon pool size; the global pool when absent
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    /// also store replicate 0 of the field
    #[serde(default)]
    pub snapshot: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub model: CovarianceModel,
    pub domain: Domain,
    #[serde(default)]
    pub events: Vec<EventSpec>,
    pub theorem: TheoremSpec,
    pub run: RunSpec,
}

impl FromStr for ExperimentConfig {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        fs::read_to_string(path)?.parse()
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of the serialized config with the worker count and output
    /// directory cleared, so neither changes the provenance of a result.
    pub fn hash(&self) -> Result<String> {
        let mut c = self.clone();
        c.run.workers = None;
        c.run.output_dir = None;
        let digest = Sha256::digest(c.to_toml()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::Config(format!("config name {:?} must be a nonempty file stem", self.name)));
        }
        if self.run.seed > i64::MAX as u64 {
            return Err(Error::Config("seed must fit in a signed 64-bit integer".into()));
        }
        if self.run.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        self.model.validate()?;
        let need = match self.theorem.id {
            TheoremId::Isoperimetric => 1,
            TheoremId::Interpolation => 0,
            _ => 2,
        };
        if self.events.len() != need {
            return Err(Error::Config(format!(
                "{} needs {need} event(s), config has {}",
                self.theorem.id,
                self.events.len()
            )));
        }
        if self.theorem.id == TheoremId::Interpolation && self.theorem.functionals.len() != 2 {
            return Err(Error::Config("interpolation needs exactly two functionals".into()));
        }
        Ok(())
    }

    /// Circulant embedding for stationary continuum models on a grid, a dense
    /// factor otherwise.
    pub fn plan(&self) -> Result<SamplerPlan> {
        let seed = self.run.seed;
        if let Domain::Grid { shape, spacing } = &self.domain {
            if circulant_friendly(&self.model) {
                return Ok(SamplerPlan::Circulant(CirculantPlan::new(&self.model, &Grid::new(shape.clone(), *spacing)?, seed)?));
            }
        }
        Ok(SamplerPlan::Dense(DensePlan::from_model(&self.model, &self.domain.points(), seed)?))
    }
}

fn circulant_friendly(model: &CovarianceModel) -> bool {
    matches!(
        model,
        CovarianceModel::BargmannFock
            | CovarianceModel::Cauchy { .. }
            | CovarianceModel::MonochromaticWave { .. }
            | CovarianceModel::PolylogDecay { .. }
    )
}

fn need(v: Option<f64>, what: &str, id: TheoremId) -> Result<f64> {
    v.ok_or_else(|| Error::Config(format!("{id} needs theorem.{what}")))
}

/// Run the selected verifier in a pool of the configured size. The report
/// carries the config hash.
pub fn evaluate(config: &ExperimentConfig) -> Result<InequalityReport> {
    config.validate()?;
    let go = || evaluate_inner(config);
    let mut report = match config.run.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {w} workers: {e}")))?
            .install(go)?,
        None => go()?,
    };
    report.config_hash = Some(config.hash()?);
    Ok(report)
}

fn evaluate_inner(config: &ExperimentConfig) -> Result<InequalityReport> {
    let t = &config.theorem;
    let n = config.run.replicates;
    let ev = &config.events;
    if t.id == TheoremId::FiniteRange {
        let Domain::Grid { shape, spacing } = &config.domain else {
            return Err(Error::Config("prop1.8 needs a grid domain".into()));
        };
        let grid = Grid::new(shape.clone(), *spacing)?;
        let radius = need(t.radius, "radius", t.id)?;
        let eps = need(t.eps, "eps", t.id)?;
        return mc::verify_finite_range(&config.model, &grid, radius, &ev[0], &ev[1], eps, n, config.run.seed);
    }
    let plan = config.plan()?;
    match t.id {
        TheoremId::Sprinkled => {
            let eps = need(t.eps, "eps", t.id)?;
            let mode = t.constant_mode.unwrap_or(ConstantMode::Proof36);
            mc::verify_sprinkled(&plan, &ev[0], &ev[1], eps, t.eps2.unwrap_or(eps), n, mode)
        }
        TheoremId::OneSided => mc::verify_sdi2(&plan, &ev[0], &ev[1], need(t.eps, "eps", t.id)?, n),
        TheoremId::Errorless => mc::verify_sdi3(
            &plan,
            &ev[0],
            &ev[1],
            need(t.delta1, "delta1", t.id)?,
            need(t.delta2, "delta2", t.id)?,
            n,
        ),
        TheoremId::ThresholdCov => mc::verify_threshold_cov(&plan, &ev[0], &ev[1], n),
        TheoremId::Isoperimetric => mc::verify_isoperimetric(&plan, &ev[0], need(t.eps, "eps", t.id)?, n),
        TheoremId::NoiseStability => mc::verify_noise_stability(&plan, &ev[0], &ev[1], n),
        TheoremId::Hoeffding => mc::verify_hoeffding(&plan, &ev[0], &ev[1], n, t.window),
        TheoremId::PositiveAssociation => mc::verify_positive_association(&plan, &ev[0], &ev[1], n),
        TheoremId::Interpolation => {
            mc::verify_interp_formula(&plan, t.functionals[0], t.functionals[1], n, t.t_nodes.unwrap_or(32))
        }
        TheoremId::FiniteRange => unreachable!("handled above"),
    }
}

/// `0` unless some verdict is a failure, then `2`.
pub fn exit_code<'a>(verdicts: impl IntoIterator<Item = &'a Verdict>) -> i32 {
    if verdicts.into_iter().any(|v| v.is_fail()) {
        2
    } else {
        0
    }
}

/// The config's directory, else `$SPRINKLE_OUTPUT_DIR`, else `sprinkle-out`.
pub fn output_dir(config_dir: Option<&str>) -> PathBuf {
    match config_dir {
        Some(d) => PathBuf::from(d),
        None => std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(FALLBACK_OUTPUT_DIR)),
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub report: InequalityReport,
    pub files: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        exit_code([&self.report.verdict])
    }
}

/// Evaluate and write `<name>.json` (plus `<name>.field` when snapshots are
/// on) into the output directory.
pub fn run(config: &ExperimentConfig) -> Result<RunOutcome> {
    let report = evaluate(config)?;
    let dir = output_dir(config.run.output_dir.as_deref());
    fs::create_dir_all(&dir)?;
    let mut files = vec![write_report(&dir, &config.name, &report)?];
    if config.run.snapshot {
        files.push(write_field(&dir, config)?);
    }
    Ok(RunOutcome { report, files })
}

pub fn write_report(dir: &Path, name: &str, report: &InequalityReport) -> Result<PathBuf> {
    let path = dir.join(format!("{name}.json"));
    fs::write(&path, serde_json::to_string_pretty(report)? + "\n")?;
    Ok(path)
}

fn write_field(dir: &Path, config: &ExperimentConfig) -> Result<PathBuf> {
    let plan = config.plan()?;
    let values = plan.draw(0);
    let (shape, spacing) = match &config.domain {
        Domain::Grid { shape, spacing } => (shape.clone(), *spacing),
        _ => (vec![values.len()], 1.0),
    };
    let header = SnapshotHeader {
        format: SNAPSHOT_FORMAT.into(),
        family: config.model.name().into(),
        shape,
        spacing,
        seed: config.run.seed,
        replicate: 0,
        len: values.len(),
    };
    let path = dir.join(format!("{}.field", config.name));
    snapshot::save(&path, &header, &values)?;
    Ok(path)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SuiteId {
    Smoke,
    Full,
}

impl FromStr for SuiteId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smoke" => Ok(Self::Smoke),
            "full" => Ok(Self::Full),
            _ => Err(Error::Config(format!("unknown suite {s:?}; valid: smoke, full"))),
        }
    }
}

impl SuiteId {
    pub fn configs(self) -> Vec<ExperimentConfig> {
        match self {
            Self::Smoke => smoke_suite(),
            Self::Full => full_suite(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub name: String,
    pub theorem: TheoremId,
    pub slack: Option<f64>,
    pub se: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug)]
pub struct SuiteOutcome {
    pub configs: Vec<ExperimentConfig>,
    pub reports: Vec<InequalityReport>,
    pub wall_time_s: f64,
}

impl SuiteOutcome {
    pub fn rows(&self) -> Vec<SummaryRow> {
        self.configs
            .iter()
            .zip(&self.reports)
            .map(|(c, r)| SummaryRow { name: c.name.clone(), theorem: r.theorem, slack: r.slack, se: r.se, verdict: r.verdict })
            .collect()
    }

    /// `name,theorem,slack,se,verdict`, full-precision numbers.
    pub fn summary_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in self.rows() {
            w.serialize(row).map_err(|e| Error::Config(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn exit_code(&self) -> i32 {
        exit_code(self.reports.iter().map(|r| &r.verdict))
    }

    /// `summary.csv` and one JSON report per config.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut files = Vec::new();
        for (c, r) in self.configs.iter().zip(&self.reports) {
            files.push(write_report(dir, &c.name, r)?);
        }
        let summary = dir.join("summary.csv");
        fs::write(&summary, self.summary_csv()?)?;
        files.push(summary);
        Ok(files)
    }
}

/// Evaluate every config of a suite in order, optionally overriding the
/// worker count.
pub fn run_suite(id: SuiteId, workers: Option<usize>) -> Result<SuiteOutcome> {
    let started = Instant::now();
    let mut configs = id.configs();
    let mut reports = Vec::with_capacity(configs.len());
    for c in &mut configs {
        if workers.is_some() {
            c.run.workers = workers;
        }
        reports.push(evaluate(c)?);
    }
    Ok(SuiteOutcome { configs, reports, wall_time_s: started.elapsed().as_secs_f64() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_round_trips_through_toml() {
        for c in full_suite().into_iter().chain(smoke_suite()) {
            let text = c.to_toml().unwrap();
            let back: ExperimentConfig = text.parse().unwrap();
            assert_eq!(back, c, "{}", c.name);
            c.validate().unwrap();
        }
    }

    #[test]
    fn hash_ignores_workers_and_output() {
        let mut c = smoke_suite().remove(0);
        let h = c.hash().unwrap();
        assert_eq!(h.len(), 64);
        c.run.workers = Some(3);
        c.run.output_dir = Some("elsewhere".into());
        assert_eq!(c.hash().unwrap(), h);
        c.run.seed += 1;
        assert_ne!(c.hash().unwrap(), h);
    }

    #[test]
    fn unknown_theorem_lists_valid_ids() {
        let mut text = smoke_suite().remove(0).to_toml().unwrap();
        text = text.replace("id = \"thm1.1\"", "id = \"thm9.9\"");
        let err = text.parse::<ExperimentConfig>().unwrap_err().to_string();
        assert!(err.contains("thm1.1") && err.contains("cor2.7"), "{err}");
    }

    #[test]
    fn suites_cover_every_theorem() {
        let smoke = smoke_suite();
        assert_eq!(smoke.len(), TheoremId::ALL.len());
        for id in TheoremId::ALL {
            assert_eq!(smoke.iter().filter(|c| c.theorem.id == id).count(), 1, "{id}");
            assert!(full_suite().iter().filter(|c| c.theorem.id == id).count() >= 2, "{id}");
        }
        assert!(smoke.iter().all(|c| c.run.replicates == 10_000));
    }

    #[test]
    fn event_count_is_checked() {
        let mut c = smoke_suite().remove(0);
        c.events.pop();
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }
}
