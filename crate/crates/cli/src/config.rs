//! The TOML run configuration.
//!
//! ```toml
//! output = "out"
//!
//! [model]
//! alpha = 1.0
//!
//! [weight]
//! kind = "power"
//! gamma = 2.0
//!
//! [[measure]]
//! label = "gaussian"
//! kind = "density"
//! density = "exp(-r^2)/pi"
//!
//! [[measure]]
//! label = "atoms"
//! kind = "atomic"
//! atoms = [[0.0, 0.0, 1.0], [2.0, 1.0, 0.5]]
//!
//! [analysis]
//! ladder = [40, 80, 120]
//! p_list = [1.0, 2.0, 4.0]
//! ```
//!
//! Complex numbers are written `[re, im]`. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Deserialize;
use wfock::harness::{AnalysisParams, InstanceFamily, LabeledMeasure, ModelConfig};
use wfock::{Atom, Expr, MeasureSpec, Psi, QuadraturePlan, Weight};

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Output directory; `--out` overrides it.
    pub output: Option<PathBuf>,
    pub model: ModelSection,
    #[serde(default = "standard_weight")]
    pub weight: Weight,
    #[serde(rename = "measure", default)]
    pub measures: Vec<MeasureEntry>,
    #[serde(default)]
    pub analysis: AnalysisParams,
    #[serde(default)]
    pub quadrature: QuadraturePlan,
}

fn standard_weight() -> Weight {
    Weight::standard(1.0)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub alpha: f64,
    /// Degree for `kernels`; defaults to the largest ladder rung.
    pub degree: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKindName {
    Atomic,
    Density,
    /// w·dA.
    Weight,
    Pullback,
    Volterra,
}

/// One `[[measure]]` table. Which of the optional keys are required depends
/// on `kind`; keys that do not apply to it are rejected.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureEntry {
    pub label: String,
    pub kind: MeasureKindName,
    #[serde(default = "unit")]
    pub scale: f64,
    /// atomic: rows of `[re, im, mass]`.
    pub atoms: Option<Vec<[f64; 3]>>,
    /// density: expression in r, x, y, w.
    pub density: Option<String>,
    /// pullback: φ(z) = a·z + b, ψ polynomial (constant term first) or e^{cz}.
    pub a: Option<[f64; 2]>,
    pub b: Option<[f64; 2]>,
    pub psi: Option<Vec<[f64; 2]>>,
    pub psi_exp: Option<[f64; 2]>,
    /// volterra: coefficients of g, constant term first.
    pub g: Option<Vec<[f64; 2]>>,
}

fn unit() -> f64 {
    1.0
}

fn complex(v: [f64; 2]) -> Complex64 {
    Complex64::new(v[0], v[1])
}

impl MeasureEntry {
    fn present(&self) -> Vec<&'static str> {
        let mut keys = Vec::new();
        let mut note = |on: bool, k: &'static str| {
            if on {
                keys.push(k)
            }
        };
        note(self.atoms.is_some(), "atoms");
        note(self.density.is_some(), "density");
        note(self.a.is_some(), "a");
        note(self.b.is_some(), "b");
        note(self.psi.is_some(), "psi");
        note(self.psi_exp.is_some(), "psi_exp");
        note(self.g.is_some(), "g");
        keys
    }

    pub fn spec(&self) -> Result<MeasureSpec, CliError> {
        let field = |msg: String| CliError::Config(format!("measure `{}`: {msg}", self.label));
        let allowed: &[&str] = match self.kind {
            MeasureKindName::Atomic => &["atoms"],
            MeasureKindName::Density => &["density"],
            MeasureKindName::Weight => &[],
            MeasureKindName::Pullback => &["a", "b", "psi", "psi_exp"],
            MeasureKindName::Volterra => &["g"],
        };
        if let Some(k) = self.present().into_iter().find(|k| !allowed.contains(k)) {
            return Err(field(format!("key `{k}` does not apply to kind {:?}", self.kind)));
        }
        let missing = |k: &str| field(format!("kind {:?} needs `{k}`", self.kind));
        let spec = match self.kind {
            MeasureKindName::Atomic => MeasureSpec::atomic(
                self.atoms
                    .as_ref()
                    .ok_or_else(|| missing("atoms"))?
                    .iter()
                    .map(|r| Atom {
                        location: Complex64::new(r[0], r[1]),
                        mass: r[2],
                    })
                    .collect(),
            ),
            MeasureKindName::Density => {
                Expr::parse(self.density.as_ref().ok_or_else(|| missing("density"))?).map(MeasureSpec::density)
            }
            MeasureKindName::Weight => Ok(MeasureSpec::weight_measure()),
            MeasureKindName::Pullback => {
                let psi = match (&self.psi, &self.psi_exp) {
                    (Some(_), Some(_)) => return Err(field("give either `psi` or `psi_exp`, not both".into())),
                    (Some(c), None) => Psi::Polynomial {
                        coefficients: c.iter().copied().map(complex).collect(),
                    },
                    (None, Some(c)) => Psi::Exponential { c: complex(*c) },
                    (None, None) => Psi::default(),
                };
                let a = self.a.ok_or_else(|| missing("a"))?;
                MeasureSpec::pullback(complex(a), complex(self.b.unwrap_or_default()), psi)
            }
            MeasureKindName::Volterra => Ok(MeasureSpec::volterra(
                self.g
                    .as_ref()
                    .ok_or_else(|| missing("g"))?
                    .iter()
                    .copied()
                    .map(complex)
                    .collect(),
            )),
        };
        spec.and_then(|s| s.scaled(self.scale))
            .map_err(|e| field(e.to_string()))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn model(&self) -> ModelConfig {
        ModelConfig {
            alpha: self.model.alpha,
            weight: self.weight.clone(),
            plan: self.quadrature,
        }
    }

    pub fn family(&self) -> Result<InstanceFamily, CliError> {
        let measures = self
            .measures
            .iter()
            .map(|m| Ok(LabeledMeasure::new(&m.label, m.spec()?)))
            .collect::<Result<Vec<_>, CliError>>()?;
        InstanceFamily::new(self.model(), measures, self.analysis.clone()).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn kernel_degree(&self) -> usize {
        self.model
            .degree
            .unwrap_or_else(|| self.analysis.ladder.last().copied().unwrap_or(80))
    }
}
