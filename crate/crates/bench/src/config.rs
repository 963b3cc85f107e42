//! Experiment configuration, read from JSON.

use std::fmt;
use std::path::{Path, PathBuf};

use prodgraph::{ProductKind, SolverOptions};
use serde::{Deserialize, Serialize};

use crate::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    AccuracyVsSize,
    AccuracyVsSamples,
    BaselineModels,
}

/// Estimators known to the runner. The discriminant is a stable registry id
/// used in seed derivation, independent of the order in a config.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    St = 1,
    Kst = 2,
    Sepkst = 3,
}

impl Method {
    pub fn id(self) -> u64 {
        self as u64
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::St => "st",
            Method::Kst => "kst",
            Method::Sepkst => "sepkst",
        }
    }

    /// Whether the method consumes the full `PQ×PQ` covariance.
    pub fn needs_full(self) -> bool {
        matches!(self, Method::St | Method::Kst)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "st" => Ok(Method::St),
            "kst" => Ok(Method::Kst),
            "sepkst" => Ok(Method::Sepkst),
            other => Err(format!("unknown method {other:?} (expected st, kst or sepkst)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    Assumption1,
    Mrf,
    Poly,
}

/// Number of observations, or `"analytic"` for exact covariances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleCount {
    Samples(usize),
    Analytic,
}

impl Serialize for SampleCount {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            SampleCount::Samples(r) => s.serialize_u64(*r as u64),
            SampleCount::Analytic => s.serialize_str("analytic"),
        }
    }
}

impl<'de> Deserialize<'de> for SampleCount {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(usize),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(r) => Ok(SampleCount::Samples(r)),
            Repr::Text(t) if t == "analytic" => Ok(SampleCount::Analytic),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("sample count {t:?} is neither an integer nor \"analytic\""))),
        }
    }
}

impl fmt::Display for SampleCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SampleCount::Samples(r) => write!(f, "{r}"),
            SampleCount::Analytic => f.write_str("analytic"),
        }
    }
}

fn default_sample_counts() -> Vec<SampleCount> {
    vec![SampleCount::Analytic]
}
fn default_trials() -> usize {
    100
}
fn default_er_p() -> f64 {
    0.3
}
fn default_filter_len() -> usize {
    3
}
fn default_tau() -> f64 {
    prodgraph::eval::DEFAULT_TAU
}
fn default_sample_eps() -> f64 {
    0.05
}
fn default_true() -> bool {
    true
}
fn default_generator() -> GeneratorKind {
    GeneratorKind::Assumption1
}
fn default_product() -> ProductKind {
    ProductKind::Kronecker
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// `(P, Q)` factor sizes.
    pub sizes: Vec<(usize, usize)>,
    #[serde(default = "default_sample_counts")]
    pub sample_counts: Vec<SampleCount>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_er_p")]
    pub er_p: f64,
    #[serde(rename = "filter_L", default = "default_filter_len")]
    pub filter_len: usize,
    pub methods: Vec<Method>,
    #[serde(default = "default_generator")]
    pub generator: GeneratorKind,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default)]
    pub master_seed: u64,
    pub output_dir: PathBuf,
    /// Product used for the ground-truth graph and, for the MRF and
    /// polynomial generators, for the joint shift operator.
    #[serde(default = "default_product")]
    pub product: ProductKind,
    /// `epsilon_rel` applied when the covariances are estimated from samples.
    #[serde(default = "default_sample_eps")]
    pub sample_epsilon_rel: f64,
    /// When false, wall times are written as 0 and no timestamp is stamped,
    /// making repeated runs byte-identical.
    #[serde(default = "default_true")]
    pub record_timing: bool,
    /// Worker threads; `PRODGRAPH_WORKERS` takes precedence.
    #[serde(default)]
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        serde_json::from_str(text).map_err(|e| BenchError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |msg: String| Err(BenchError::Config(msg));
        if self.sizes.is_empty() {
            return bad("sizes must not be empty".into());
        }
        if let Some(&(p, q)) = self.sizes.iter().find(|&&(p, q)| p < 2 || q < 2) {
            return bad(format!("size ({p}, {q}): factors need at least 2 nodes"));
        }
        if self.methods.is_empty() {
            return bad("methods must not be empty".into());
        }
        if self.sample_counts.is_empty() {
            return bad("sample_counts must not be empty".into());
        }
        if self.sample_counts.contains(&SampleCount::Samples(0)) {
            return bad("sample counts must be positive".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.er_p) {
            return bad(format!("er_p = {} is not a probability", self.er_p));
        }
        if self.filter_len == 0 {
            return bad("filter_L must be at least 1".into());
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return bad(format!("tau = {} must lie in (0, 1)", self.tau));
        }
        if !(self.sample_epsilon_rel >= 0.0) {
            return bad("sample_epsilon_rel must be nonnegative".into());
        }
        if self.workers == Some(0) {
            return bad("workers must be positive".into());
        }
        if has_duplicates(&self.sizes) || has_duplicates(&self.sample_counts) || has_duplicates(&self.methods) {
            return bad("sizes, sample_counts and methods must not repeat".into());
        }
        if self.experiment == Experiment::BaselineModels && self.generator == GeneratorKind::Assumption1 {
            return bad("baseline_models needs generator mrf or poly".into());
        }
        self.solver.validate().map_err(|e| BenchError::Config(e.to_string()))
    }
}

fn has_duplicates<T: PartialEq>(v: &[T]) -> bool {
    v.iter().enumerate().any(|(i, a)| v[..i].contains(a))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"experiment": "accuracy_vs_size", "sizes": [[4, 4]], "methods": ["sepkst"], "output_dir": "out"}"#;

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.trials, 100);
        assert_eq!(c.er_p, 0.3);
        assert_eq!(c.filter_len, 3);
        assert_eq!(c.sample_counts, vec![SampleCount::Analytic]);
        assert_eq!(c.tau, 0.1);
        assert!(c.record_timing);
        c.validate().unwrap();
    }

    #[test]
    fn sample_counts_mix_numbers_and_sentinel() {
        let text = MINIMAL.replace("\"output_dir\"", "\"sample_counts\": [\"analytic\", 200, 1000], \"output_dir\"");
        let c = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(c.sample_counts, vec![SampleCount::Analytic, SampleCount::Samples(200), SampleCount::Samples(1000)]);
        let back = serde_json::to_string(&c.sample_counts).unwrap();
        assert_eq!(back, r#"["analytic",200,1000]"#);
        assert!(ExperimentConfig::from_json(&MINIMAL.replace("\"output_dir\"", "\"sample_counts\": [\"lots\"], \"output_dir\"")).is_err());
    }

    #[test]
    fn rejects_unknown_fields_and_bad_values() {
        assert!(ExperimentConfig::from_json(&MINIMAL.replace("\"sizes\"", "\"sizez\"")).is_err());
        let mut c = ExperimentConfig::from_json(MINIMAL).unwrap();
        c.er_p = 1.5;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::from_json(MINIMAL).unwrap();
        c.methods.clear();
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::from_json(MINIMAL).unwrap();
        c.trials = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn method_ids_are_stable() {
        assert_eq!((Method::St.id(), Method::Kst.id(), Method::Sepkst.id()), (1, 2, 3));
    }
}
