//! JSON scenario configs.
//!
//! A config is one object tagged by `"command"`. Every struct rejects unknown
//! fields, and omitted fields take the defaults below.

use std::path::PathBuf;

use ensemble_core::classification::MarginModel;
use ensemble_core::distributions::Distribution;
use ensemble_core::ensembles::EnsembleSpec;
use ensemble_core::losses::{LossFunction, Target};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum ScenarioConfig {
    Curve(CurveScenario),
    Delta(DeltaScenario),
    Tails(TailsScenario),
    Margins(MarginsScenario),
    Counterexamples(CounterexamplesScenario),
    SyntheticSplit(SyntheticScenario),
}

/// Which estimator produces a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveMethod {
    /// Exact when a closed form, quadrature or enumeration applies, else MC.
    #[default]
    Auto,
    Exact,
    Mc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveScenario {
    pub loss: LossFunction,
    pub ensemble: EnsembleSpec,
    #[serde(default = "default_kmax")]
    pub kmax: usize,
    #[serde(default)]
    pub method: CurveMethod,
    #[serde(default = "default_reps")]
    pub reps: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub svg: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaScenario {
    pub loss: LossFunction,
    pub distribution: Distribution,
    #[serde(default = "default_delta_kmin")]
    pub kmin: usize,
    #[serde(default = "default_delta_kmax")]
    pub kmax: usize,
    /// Points at which to classify the Hessian; the mean when empty.
    #[serde(default)]
    pub y_inf: Vec<Vec<f64>>,
    /// Eigenvalues within this of zero count as zero.
    #[serde(default)]
    pub tol: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub svg: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailsScenario {
    pub distribution: Distribution,
    /// Distance of the threshold above the mean (above 0 if there is no mean).
    pub epsilon: f64,
    #[serde(default = "default_nmax")]
    pub nmax: usize,
    /// Use P(X̄ₙ > c) instead of P(X̄ₙ ≥ c).
    #[serde(default)]
    pub strict: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub svg: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarginsScenario {
    pub model: MarginModel,
    #[serde(default = "default_kmax")]
    pub kmax: usize,
    #[serde(default)]
    pub method: CurveMethod,
    #[serde(default = "default_reps")]
    pub reps: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub svg: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexamplesScenario {
    #[serde(default = "default_condorcet_p")]
    pub condorcet_p: f64,
    /// Majority threshold minus p.
    #[serde(default = "default_condorcet_eps")]
    pub condorcet_epsilon: f64,
    #[serde(default = "default_condorcet_nmax")]
    pub condorcet_nmax: usize,
    #[serde(default = "default_mass_mu")]
    pub mass_mu: f64,
    #[serde(default = "default_mass_eps")]
    pub mass_epsilon: f64,
    #[serde(default = "default_mass_nmax")]
    pub mass_nmax: usize,
    #[serde(default = "default_stable_eps")]
    pub stable_epsilon: f64,
    #[serde(default = "default_stable_nmax")]
    pub stable_nmax: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub svg: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticScenario {
    #[serde(default)]
    pub items: ItemSource,
    #[serde(default = "default_kmax")]
    pub kmax: usize,
    /// Replicates per item for the cross-entropy curves.
    #[serde(default = "default_item_reps")]
    pub reps: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub svg: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ItemSource {
    /// Explicit per-item score models.
    List(Vec<MarginModel>),
    Generate(GenerateItems),
}

impl Default for ItemSource {
    fn default() -> Self {
        ItemSource::Generate(GenerateItems::default())
    }
}

/// Random Gaussian score models: `correct` items favour the true class, the
/// rest favour every other class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateItems {
    #[serde(default = "default_item_count")]
    pub count: usize,
    #[serde(default = "default_item_correct")]
    pub correct: usize,
    #[serde(default = "default_item_classes")]
    pub classes: usize,
    /// Range of |expected margin|.
    #[serde(default = "default_margin_range")]
    pub margin: [f64; 2],
    /// Range of the per-class score standard deviation.
    #[serde(default = "default_sd_range")]
    pub sd: [f64; 2],
    /// Seed of the generator; the scenario seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for GenerateItems {
    fn default() -> Self {
        GenerateItems {
            count: default_item_count(),
            correct: default_item_correct(),
            classes: default_item_classes(),
            margin: default_margin_range(),
            sd: default_sd_range(),
            seed: None,
        }
    }
}

fn default_kmax() -> usize {
    20
}
fn default_reps() -> u64 {
    100_000
}
fn default_delta_kmin() -> usize {
    10
}
fn default_delta_kmax() -> usize {
    200
}
fn default_nmax() -> usize {
    400
}
fn default_condorcet_p() -> f64 {
    0.35
}
fn default_condorcet_eps() -> f64 {
    0.15
}
fn default_condorcet_nmax() -> usize {
    201
}
fn default_mass_mu() -> f64 {
    0.55
}
fn default_mass_eps() -> f64 {
    0.1
}
fn default_mass_nmax() -> usize {
    2000
}
fn default_stable_eps() -> f64 {
    1.0
}
fn default_stable_nmax() -> usize {
    50
}
fn default_item_reps() -> u64 {
    20_000
}
fn default_item_count() -> usize {
    100
}
fn default_item_correct() -> usize {
    80
}
fn default_item_classes() -> usize {
    3
}
fn default_margin_range() -> [f64; 2] {
    [0.2, 1.0]
}
fn default_sd_range() -> [f64; 2] {
    [0.5, 1.5]
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub reps: Option<u64>,
    /// K_max for curves, nmax for tail sequences.
    pub kmax: Option<usize>,
    pub out: Option<PathBuf>,
    pub svg: bool,
}

impl ScenarioConfig {
    pub fn command(&self) -> &'static str {
        match self {
            ScenarioConfig::Curve(_) => "curve",
            ScenarioConfig::Delta(_) => "delta",
            ScenarioConfig::Tails(_) => "tails",
            ScenarioConfig::Margins(_) => "margins",
            ScenarioConfig::Counterexamples(_) => "counterexamples",
            ScenarioConfig::SyntheticSplit(_) => "synthetic-split",
        }
    }

    /// Built-in scenario for each subcommand, used without `--config`.
    pub fn default_for(command: &str) -> Result<Self, CliError> {
        let gaussian = Distribution::gaussian(0.3, 0.01);
        Ok(match command {
            "curve" => ScenarioConfig::Curve(CurveScenario {
                loss: LossFunction::Squared { y: Target::Scalar(0.0) },
                ensemble: EnsembleSpec::iid(Distribution::gaussian(0.0, 1.0), 1),
                kmax: 100,
                method: CurveMethod::Auto,
                reps: default_reps(),
                seed: 0,
                out: None,
                svg: false,
            }),
            "delta" => ScenarioConfig::Delta(DeltaScenario {
                loss: LossFunction::Sigmoid { label: 0, scale: 0.1 },
                distribution: gaussian,
                kmin: default_delta_kmin(),
                kmax: default_delta_kmax(),
                y_inf: Vec::new(),
                tol: 0.0,
                seed: 0,
                out: None,
                svg: false,
            }),
            "tails" => ScenarioConfig::Tails(TailsScenario {
                distribution: Distribution::Bernoulli { p: 0.35 },
                epsilon: 0.15,
                nmax: default_nmax(),
                strict: false,
                seed: 0,
                out: None,
                svg: false,
            }),
            "margins" => ScenarioConfig::Margins(MarginsScenario {
                model: MarginModel::binary_gaussian(0.5, 1.0).map_err(|e| CliError::Config(e.to_string()))?,
                kmax: default_kmax(),
                method: CurveMethod::Auto,
                reps: default_reps(),
                seed: 0,
                out: None,
                svg: false,
            }),
            "counterexamples" => ScenarioConfig::Counterexamples(CounterexamplesScenario {
                condorcet_p: default_condorcet_p(),
                condorcet_epsilon: default_condorcet_eps(),
                condorcet_nmax: default_condorcet_nmax(),
                mass_mu: default_mass_mu(),
                mass_epsilon: default_mass_eps(),
                mass_nmax: default_mass_nmax(),
                stable_epsilon: default_stable_eps(),
                stable_nmax: default_stable_nmax(),
                seed: 0,
                out: None,
                svg: false,
            }),
            "synthetic-split" => ScenarioConfig::SyntheticSplit(SyntheticScenario {
                items: ItemSource::default(),
                kmax: default_kmax(),
                reps: default_item_reps(),
                seed: 0,
                out: None,
                svg: false,
            }),
            other => return Err(CliError::Config(format!("unknown command {other:?}"))),
        })
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs always serialize")
    }

    pub fn apply(&mut self, o: &Overrides) {
        macro_rules! common {
            ($s:expr) => {{
                if let Some(seed) = o.seed {
                    $s.seed = seed;
                }
                if o.out.is_some() {
                    $s.out = o.out.clone();
                }
                $s.svg |= o.svg;
            }};
        }
        match self {
            ScenarioConfig::Curve(s) => {
                common!(s);
                s.reps = o.reps.unwrap_or(s.reps);
                s.kmax = o.kmax.unwrap_or(s.kmax);
            }
            ScenarioConfig::Delta(s) => {
                common!(s);
                s.kmax = o.kmax.unwrap_or(s.kmax);
            }
            ScenarioConfig::Tails(s) => {
                common!(s);
                s.nmax = o.kmax.unwrap_or(s.nmax);
            }
            ScenarioConfig::Margins(s) => {
                common!(s);
                s.reps = o.reps.unwrap_or(s.reps);
                s.kmax = o.kmax.unwrap_or(s.kmax);
            }
            ScenarioConfig::Counterexamples(s) => {
                common!(s);
                if let Some(n) = o.kmax {
                    s.condorcet_nmax = n;
                    s.mass_nmax = n;
                    s.stable_nmax = n;
                }
            }
            ScenarioConfig::SyntheticSplit(s) => {
                common!(s);
                s.reps = o.reps.unwrap_or(s.reps);
                s.kmax = o.kmax.unwrap_or(s.kmax);
            }
        }
    }

    pub fn out(&self) -> Option<&PathBuf> {
        match self {
            ScenarioConfig::Curve(s) => s.out.as_ref(),
            ScenarioConfig::Delta(s) => s.out.as_ref(),
            ScenarioConfig::Tails(s) => s.out.as_ref(),
            ScenarioConfig::Margins(s) => s.out.as_ref(),
            ScenarioConfig::Counterexamples(s) => s.out.as_ref(),
            ScenarioConfig::SyntheticSplit(s) => s.out.as_ref(),
        }
    }

    /// The same scenario with its output directory removed, so summaries do
    /// not depend on where they are written.
    pub fn without_out(&self) -> Self {
        let mut c = self.clone();
        match &mut c {
            ScenarioConfig::Curve(s) => s.out = None,
            ScenarioConfig::Delta(s) => s.out = None,
            ScenarioConfig::Tails(s) => s.out = None,
            ScenarioConfig::Margins(s) => s.out = None,
            ScenarioConfig::Counterexamples(s) => s.out = None,
            ScenarioConfig::SyntheticSplit(s) => s.out = None,
        }
        c
    }

    pub fn svg(&self) -> bool {
        match self {
            ScenarioConfig::Curve(s) => s.svg,
            ScenarioConfig::Delta(s) => s.svg,
            ScenarioConfig::Tails(s) => s.svg,
            ScenarioConfig::Margins(s) => s.svg,
            ScenarioConfig::Counterexamples(s) => s.svg,
            ScenarioConfig::SyntheticSplit(s) => s.svg,
        }
    }
}
