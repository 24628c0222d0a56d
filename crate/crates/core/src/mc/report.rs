use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Multiple of the standard error tolerated before a check fails.
pub const NOISE_MULTIPLIER: f64 = 3.0;
/// Absolute slack absorbed as rounding.
const NUMERIC_FLOOR: f64 = 1e-12;

/// The inequalities this crate can check by simulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TheoremId {
    /// two-sided sprinkled decoupling with the `‖K₁₂‖∞/ε²` error
    #[serde(rename = "thm1.1")]
    Sprinkled,
    /// one-sided sprinkling with Gaussian error in `ε/ρ`
    #[serde(rename = "thm1.7")]
    OneSided,
    /// errorless decoupling once `ε` exceeds `κ‖K‖∞ρ`
    #[serde(rename = "thm1.10")]
    Errorless,
    /// decoupling through a finite-range moving-average split
    #[serde(rename = "prop1.8")]
    FiniteRange,
    /// covariance of thresholds between `min K₁₂` and `‖K₁₂‖∞`
    #[serde(rename = "prop2.2")]
    ThresholdCov,
    /// isoperimetric lower bound on the sprinkled probability
    #[serde(rename = "cor2.6")]
    Isoperimetric,
    /// joint probability below the bivariate normal at the marginals
    #[serde(rename = "cor2.7")]
    NoiseStability,
    /// covariance as the double integral of the joint-minus-product cdf
    #[serde(rename = "hoeffding")]
    Hoeffding,
    /// local positive association under sign-definite cross covariance
    #[serde(rename = "positive-association")]
    PositiveAssociation,
    /// covariance through the Ornstein–Uhlenbeck interpolation
    #[serde(rename = "interpolation")]
    Interpolation,
}

impl TheoremId {
    pub const ALL: [TheoremId; 10] = [
        Self::Sprinkled,
        Self::OneSided,
        Self::Errorless,
        Self::FiniteRange,
        Self::ThresholdCov,
        Self::Isoperimetric,
        Self::NoiseStability,
        Self::Hoeffding,
        Self::PositiveAssociation,
        Self::Interpolation,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Self::Sprinkled => "thm1.1",
            Self::OneSided => "thm1.7",
            Self::Errorless => "thm1.10",
            Self::FiniteRange => "prop1.8",
            Self::ThresholdCov => "prop2.2",
            Self::Isoperimetric => "cor2.6",
            Self::NoiseStability => "cor2.7",
            Self::Hoeffding => "hoeffding",
            Self::PositiveAssociation => "positive-association",
            Self::Interpolation => "interpolation",
        }
    }

    /// Human-readable name carried in reports.
    pub fn anchor(self) -> &'static str {
        match self {
            Self::Sprinkled => "sprinkled decoupling inequality",
            Self::OneSided => "one-sided sprinkled decoupling with Gaussian error",
            Self::Errorless => "errorless sprinkled decoupling",
            Self::FiniteRange => "finite-range sprinkled decoupling",
            Self::ThresholdCov => "covariance bounds for thresholds",
            Self::Isoperimetric => "Gaussian isoperimetric sprinkling bound",
            Self::NoiseStability => "bivariate noise-stability bound",
            Self::Hoeffding => "Hoeffding covariance formula",
            Self::PositiveAssociation => "local positive association",
            Self::Interpolation => "Gaussian interpolation covariance formula",
        }
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for TheoremId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|t| t.id() == s).ok_or_else(|| {
            let valid: Vec<_> = Self::ALL.iter().map(|t| t.id()).collect();
            Error::Config(format!("unknown theorem id {s:?}; valid ids: {}", valid.join(", ")))
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    PassWithinNoise,
    /// hypotheses of the statement are not met; never counts as a failure
    NotApplicable,
    Fail,
}

impl Verdict {
    /// Classify `slack = bound - lhs` given the standard error of `lhs` and a
    /// deterministic numerical budget.
    pub fn classify(slack: f64, se: f64, budget: f64) -> Self {
        if slack.is_nan() {
            Self::Fail
        } else if slack >= -budget {
            Self::Pass
        } else if slack >= -(budget + NOISE_MULTIPLIER * se + NUMERIC_FLOOR) {
            Self::PassWithinNoise
        } else {
            Self::Fail
        }
    }

    pub fn is_fail(self) -> bool {
        self == Self::Fail
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Pass => "pass",
            Self::PassWithinNoise => "pass-within-noise",
            Self::NotApplicable => "not-applicable",
            Self::Fail => "fail",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
    pub replicates: u64,
}

/// One side of an inequality: `lhs ≤ bound`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub lhs: f64,
    pub bound: f64,
    /// standard error of `lhs`
    pub se: f64,
    /// deterministic numerical allowance (quadrature, truncation)
    pub budget: f64,
    pub slack: f64,
    pub verdict: Verdict,
}

impl BoundCheck {
    pub fn new(name: &str, lhs: f64, se: f64, bound: f64, budget: f64) -> Self {
        let slack = bound - lhs;
        Self { name: name.into(), lhs, bound, se, budget, slack, verdict: Verdict::classify(slack, se, budget) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub theorem: TheoremId,
    pub anchor: String,
    pub terms: BTreeMap<String, Estimate>,
    pub constants: BTreeMap<String, f64>,
    pub checks: Vec<BoundCheck>,
    /// smallest slack over the checks (`null` when none ran)
    pub slack: Option<f64>,
    /// standard error attached to the smallest slack
    pub se: Option<f64>,
    pub verdict: Verdict,
    pub seed: u64,
    pub replicates: u64,
    pub notes: Vec<String>,
    pub config_hash: Option<String>,
    /// excluded from canonical comparisons
    pub wall_time_s: f64,
}

impl InequalityReport {
    pub(crate) fn new(theorem: TheoremId, seed: u64, replicates: u64) -> Self {
        Self {
            theorem,
            anchor: theorem.anchor().into(),
            terms: BTreeMap::new(),
            constants: BTreeMap::new(),
            checks: Vec::new(),
            slack: None,
            se: None,
            verdict: Verdict::NotApplicable,
            seed,
            replicates,
            notes: Vec::new(),
            config_hash: None,
            wall_time_s: 0.0,
        }
    }

    pub(crate) fn term(&mut self, name: &str, e: Estimate) {
        self.terms.insert(name.into(), e);
    }

    pub(crate) fn constant(&mut self, name: &str, v: f64) {
        self.constants.insert(name.into(), v);
    }

    pub(crate) fn check(&mut self, c: BoundCheck) {
        self.checks.push(c);
    }

    pub(crate) fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    /// Compute the overall verdict and stamp the wall time.
    pub(crate) fn finish(mut self, started: Instant) -> Self {
        self.verdict = if self.checks.is_empty() {
            Verdict::NotApplicable
        } else {
            self.checks.iter().map(|c| c.verdict).max().unwrap()
        };
        if let Some(worst) = self.checks.iter().min_by(|a, b| a.slack.total_cmp(&b.slack)) {
            self.slack = Some(worst.slack);
            self.se = Some(worst.se);
        }
        self.wall_time_s = started.elapsed().as_secs_f64();
        self
    }

    /// JSON with the wall time removed, for reproducibility comparisons.
    pub fn canonical_json(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        if let Some(m) = v.as_object_mut() {
            m.remove("wall_time_s");
        }
        Ok(serde_json::to_string_pretty(&v)?)
    }
}
