//! Experiment description shared by all subcommands, read from JSON and
//! overridden by flags.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use phaseline_core::synth::{self, SynthConfig, FIVE_SOURCE_ANGLE_PI, FIVE_SOURCE_SAMPLES_PER_LINE};
use phaseline_core::{SparseSignal, StructureKernel};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalSpec {
    Preset(String),
    Path(PathBuf),
    Inline(SparseSignal),
    Random(SynthConfig),
}

/// Which lines are sampled beyond the axes (or, in generic mode, instead of them).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionSpec {
    /// Chosen by the seeded random search.
    #[default]
    Adaptive,
    /// The coordinate axes only; enough for univariate signals.
    Axes,
    Vectors(Vec<Vec<f64>>),
    /// Planar directions `(cos πa, sin πa)`, given as `a`.
    AnglesPi(Vec<f64>),
}

/// Sampling step: a number, or `"auto"` for `π / (2 · diameter)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub enum StepSpec {
    #[default]
    Auto,
    Value(f64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum StepRepr {
    Word(String),
    Value(f64),
}

impl Serialize for StepSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            StepSpec::Auto => StepRepr::Word("auto".into()),
            StepSpec::Value(h) => StepRepr::Value(*h),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for StepSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match StepRepr::deserialize(d)? {
            StepRepr::Word(w) if w == "auto" => Ok(StepSpec::Auto),
            StepRepr::Word(w) => Err(serde::de::Error::custom(format!(
                "step must be \"auto\" or a number, got {w:?}"
            ))),
            StepRepr::Value(h) => Ok(StepSpec::Value(h)),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub circle: Option<f64>,
    pub amp_threshold: Option<f64>,
    pub match_tol: Option<f64>,
    pub outer_tie_rel: Option<f64>,
    pub modulus_rel: Option<f64>,
    pub snap_rel: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub signal: Option<SignalSpec>,
    /// Stored samples to solve from instead of sampling the signal.
    pub samples: Option<PathBuf>,
    pub directions: DirectionSpec,
    pub step: StepSpec,
    /// Largest sample index `M` on every line.
    pub m: Option<usize>,
    pub seed: u64,
    /// Three fixed planar directions instead of axes plus adaptive directions.
    pub generic: bool,
    pub threads: usize,
    pub tolerances: Tolerances,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = read(path)?;
        let mut config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let Some(SignalSpec::Path(p)) = &mut config.signal {
            *p = base.join(&*p);
        }
        if let Some(p) = &mut config.samples {
            *p = base.join(&*p);
        }
        Ok(config)
    }

    /// Settings of the five-source Gaussian example: third line at 0.143π,
    /// `M = 99`, automatic step.
    pub fn apply_preset(&mut self, name: &str) -> Result<(), CliError> {
        if synth::preset(name).is_none() {
            return Err(CliError::Validation(format!("unknown preset {name:?}")));
        }
        self.signal = Some(SignalSpec::Preset(name.to_string()));
        if name == "paper-table1" {
            self.directions = DirectionSpec::AnglesPi(vec![FIVE_SOURCE_ANGLE_PI]);
            self.m = Some(FIVE_SOURCE_SAMPLES_PER_LINE - 1);
            self.step = StepSpec::Auto;
        }
        Ok(())
    }

    pub fn threads(&self) -> usize {
        self.threads.max(1)
    }

    pub fn load_signal(&self) -> Result<Option<SparseSignal>, CliError> {
        let Some(spec) = &self.signal else {
            return Ok(None);
        };
        let signal = match spec {
            SignalSpec::Preset(name) => synth::preset(name)
                .ok_or_else(|| CliError::Validation(format!("unknown preset {name:?}")))?,
            SignalSpec::Path(path) => read_signal(path)?,
            SignalSpec::Inline(s) => s.clone(),
            SignalSpec::Random(c) => synth::synthesize_seeded(c, self.seed)?,
        };
        Ok(Some(signal))
    }
}

/// Parses the `--directions` flag: `adaptive`, `axes`, planar angles in
/// units of π (`0.143,0.6`), or vectors with `:`-separated components
/// (`0.6:0.8,1:0`).
pub fn parse_directions(arg: &str) -> Result<DirectionSpec, CliError> {
    match arg.trim() {
        "adaptive" => return Ok(DirectionSpec::Adaptive),
        "axes" => return Ok(DirectionSpec::Axes),
        _ => {}
    }
    let bad = |item: &str| CliError::Validation(format!("cannot parse direction {item:?}"));
    let items: Vec<&str> = arg.split(',').map(str::trim).collect();
    if items.iter().any(|i| i.contains(':')) {
        let vectors = items
            .iter()
            .map(|item| {
                item.split(':')
                    .map(|x| x.trim().parse::<f64>().map_err(|_| bad(item)))
                    .collect::<Result<Vec<f64>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(DirectionSpec::Vectors(vectors))
    } else {
        let angles = items
            .iter()
            .map(|item| item.parse::<f64>().map_err(|_| bad(item)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(DirectionSpec::AnglesPi(angles))
    }
}

impl DirectionSpec {
    /// Explicit directions, normalized; `None` for `adaptive` and `axes`.
    pub fn explicit(&self, dim: usize) -> Result<Option<Vec<Vec<f64>>>, CliError> {
        let vectors = match self {
            DirectionSpec::Adaptive | DirectionSpec::Axes => return Ok(None),
            DirectionSpec::Vectors(v) => v.clone(),
            DirectionSpec::AnglesPi(a) => {
                if dim != 2 {
                    return Err(CliError::Validation(format!(
                        "angles describe planar directions, the signal has dimension {dim}"
                    )));
                }
                a.iter()
                    .map(|x| vec![(x * PI).cos(), (x * PI).sin()])
                    .collect()
            }
        };
        vectors
            .into_iter()
            .map(|v| {
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if v.len() != dim || norm.is_nan() || norm <= 0.0 || !norm.is_finite() {
                    return Err(CliError::Validation(format!(
                        "direction {v:?} is not a nonzero vector of dimension {dim}"
                    )));
                }
                Ok(v.iter().map(|x| x / norm).collect())
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }
}

/// Samples on disk, with what the solver needs to know besides the values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleFile {
    pub dim: usize,
    pub n: usize,
    pub kernel: StructureKernel,
    pub sets: Vec<phaseline_core::LineSampleSet>,
}

pub fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_signal(path: &Path) -> Result<SparseSignal, CliError> {
    serde_json::from_str(&read(path)?)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}
