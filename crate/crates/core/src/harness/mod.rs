//! Operator-level verifications over families of measures and the
//! structured reports they produce.
//!
//! A [`Workbench`] builds the model ladder and every instance's truncated
//! matrices once; the `verify_*` operations read from it and emit
//! [`VerificationReport`]s whose verdicts are pure functions of the numbers
//! recorded next to them (see [`VerificationReport::rederive_verdicts`]).

mod lemmas;
mod report;
pub mod rules;
mod sampling;
mod verify;

use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WfockError};
use crate::fock_model::FockModel;
use crate::measures::{MeasureContext, MeasureSpec};
use crate::quadrature::QuadraturePlan;
use crate::toeplitz_spectra::{assemble_checked, spectrum, SchattenGauge, Spectrum, ToeplitzMatrix};
use crate::weights::{Weight, WeightMassCache};

pub use lemmas::{lemma_suite, LemmaConstant, LemmaFindings, LemmaSettings};
pub use report::{InstanceRecord, Num, Ratio, ReportParams, Verdict, VerificationReport};
pub use sampling::{IntegralEstimate, SeriesEstimate};
pub use verify::{
    verify_boundedness, verify_compactness, verify_composition, verify_schatten, verify_schatten_gauge,
    verify_volterra, BoundednessFindings, CompactnessFindings, Findings, GaugeFindings, SchattenFindings,
    SecondaryRadius, VolterraFindings,
};

/// Weight, α and quadrature plan shared by every model of a family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub alpha: f64,
    pub weight: Weight,
    #[serde(default)]
    pub plan: QuadraturePlan,
}

impl ModelConfig {
    pub fn new(weight: Weight, alpha: f64) -> Self {
        ModelConfig {
            alpha,
            weight,
            plan: QuadraturePlan::default(),
        }
    }

    /// The standard Gaussian model: w = α/π.
    pub fn standard(alpha: f64) -> Self {
        Self::new(Weight::standard(alpha), alpha)
    }

    pub fn build(&self, degree: usize) -> Result<FockModel> {
        FockModel::build(self.weight.clone(), self.alpha, degree, self.plan)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledMeasure {
    pub label: String,
    pub spec: MeasureSpec,
}

impl LabeledMeasure {
    pub fn new(label: impl Into<String>, spec: MeasureSpec) -> Self {
        LabeledMeasure {
            label: label.into(),
            spec,
        }
    }
}

/// Pass thresholds; artifact conventions rather than constants from theory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Cross-criterion ratios must lie in [1/ceiling, ceiling].
    pub ceiling: f64,
    /// Ladder values must stay within this relative distance of the last rung.
    pub stability: f64,
    /// Growth per doubling that marks a series as divergent.
    pub growth: f64,
    /// A ring profile decays when its last sup is below this fraction of its largest.
    pub decay_fraction: f64,
    /// Tail eigenvalues shrink when the last rung is below this fraction of the first.
    pub shrink_fraction: f64,
    /// Minimum correlation of the logarithmic trace fit.
    pub correlation: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            ceiling: 100.0,
            stability: 0.2,
            growth: 1.5,
            decay_fraction: 0.25,
            shrink_fraction: 0.5,
            correlation: 0.99,
        }
    }
}

/// Sampling and ladder settings of a family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisParams {
    pub r: f64,
    /// Second averaging radius, run next to `r`.
    pub secondary_r: Option<f64>,
    /// Grids and criterion integrals cover |z| ≤ extent.
    pub extent: f64,
    /// Lattice step for non-radial sampling (radial profiles use a quarter of it).
    pub grid_step: f64,
    pub rings: Vec<f64>,
    pub ladder: Vec<usize>,
    pub p_list: Vec<f64>,
    pub gauges: Vec<SchattenGauge>,
    /// Label of the instance that calibrates gauge scales.
    pub calibration: Option<String>,
    pub thresholds: Thresholds,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        AnalysisParams {
            r: 0.3,
            secondary_r: Some(0.15),
            extent: 6.0,
            grid_step: 0.1,
            rings: (0..=6).map(f64::from).collect(),
            ladder: vec![40, 80, 120],
            p_list: vec![1.0, 2.0, 4.0],
            gauges: Vec::new(),
            calibration: None,
            thresholds: Thresholds::default(),
        }
    }
}

impl AnalysisParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.r) || !self.secondary_r.is_none_or(positive) {
            return Err(WfockError::invalid("averaging radii must be positive"));
        }
        if !positive(self.extent) || !positive(self.grid_step) {
            return Err(WfockError::invalid("extent and grid_step must be positive"));
        }
        if self.rings.len() < 3 || self.rings[0] < 0.0 || self.rings.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(WfockError::invalid(
                "rings need at least three nonnegative increasing radii",
            ));
        }
        if self.ladder.is_empty() || self.ladder[0] < 1 || self.ladder.windows(2).any(|p| p[1] <= p[0]) {
            return Err(WfockError::invalid(
                "the N-ladder must be nonempty and strictly increasing",
            ));
        }
        if self.p_list.iter().any(|p| !positive(*p)) {
            return Err(WfockError::invalid("Schatten exponents must be positive"));
        }
        for g in &self.gauges {
            g.validate()?;
        }
        let t = &self.thresholds;
        if !(t.ceiling >= 1.0) || !(t.stability > 0.0) || !(t.growth > 1.0) {
            return Err(WfockError::invalid(
                "thresholds need ceiling ≥ 1, stability > 0, growth > 1",
            ));
        }
        Ok(())
    }

    pub fn with_ladder(mut self, ladder: Vec<usize>) -> Self {
        self.ladder = ladder;
        self
    }

    pub fn with_r(mut self, r: f64) -> Self {
        self.r = r;
        self
    }
}

/// Model config, labeled measures and analysis parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFamily {
    pub model: ModelConfig,
    pub measures: Vec<LabeledMeasure>,
    pub analysis: AnalysisParams,
}

impl InstanceFamily {
    pub fn new(model: ModelConfig, measures: Vec<LabeledMeasure>, analysis: AnalysisParams) -> Result<Self> {
        let family = InstanceFamily {
            model,
            measures,
            analysis,
        };
        family.validate()?;
        Ok(family)
    }

    pub fn validate(&self) -> Result<()> {
        if self.measures.is_empty() {
            return Err(WfockError::invalid("a family needs at least one measure"));
        }
        for (k, m) in self.measures.iter().enumerate() {
            if m.label.trim().is_empty() {
                return Err(WfockError::invalid("measure labels must be nonempty"));
            }
            if self.measures[..k].iter().any(|o| o.label == m.label) {
                return Err(WfockError::invalid(format!("duplicate measure label `{}`", m.label)));
            }
        }
        if !(self.model.alpha > 0.0 && self.model.alpha.is_finite()) {
            return Err(WfockError::invalid("alpha must be positive"));
        }
        self.model.plan.validate()?;
        self.analysis.validate()
    }
}

/// Matrices and spectra of one instance along the ladder.
#[derive(Debug, Clone)]
pub(crate) struct Prepared {
    pub matrices: Vec<ToeplitzMatrix>,
    pub spectra: Vec<Spectrum>,
    pub criterion_unbounded: bool,
}

pub(crate) struct Instance {
    pub label: String,
    pub ctx: MeasureContext,
    pub prepared: std::result::Result<Prepared, WfockError>,
    pub seconds: f64,
}

/// A family with its model ladder and per-instance matrices computed once.
pub struct Workbench {
    family: InstanceFamily,
    models: Vec<FockModel>,
    instances: Vec<Instance>,
}

impl Workbench {
    /// Builds one model per ladder rung and, concurrently over instances,
    /// every truncated matrix and spectrum. Instance failures are kept and
    /// reported per instance; model failures abort.
    pub fn new(family: &InstanceFamily) -> Result<Self> {
        family.validate()?;
        let masses = Arc::new(WeightMassCache::new(family.model.weight.clone(), family.model.plan));
        let models = family
            .analysis
            .ladder
            .par_iter()
            .map(|&n| family.model.build(n))
            .collect::<Result<Vec<_>>>()?;
        let a = &family.analysis;
        let instances = family
            .measures
            .par_iter()
            .map(|lm| {
                let start = Instant::now();
                let ctx = MeasureContext::with_cache(lm.spec.clone(), masses.clone(), family.model.alpha);
                let prepared = prepare(&models, &ctx, a.r, a.extent);
                Instance {
                    label: lm.label.clone(),
                    ctx,
                    prepared,
                    seconds: start.elapsed().as_secs_f64(),
                }
            })
            .collect();
        Ok(Workbench {
            family: family.clone(),
            models,
            instances,
        })
    }

    pub fn family(&self) -> &InstanceFamily {
        &self.family
    }

    pub fn models(&self) -> &[FockModel] {
        &self.models
    }

    pub fn largest_model(&self) -> &FockModel {
        self.models.last().expect("ladder is nonempty")
    }

    pub fn labels(&self) -> Vec<&str> {
        self.instances.iter().map(|i| i.label.as_str()).collect()
    }

    /// Spectrum at the largest N for the labeled instance.
    pub fn spectrum(&self, label: &str) -> Result<&Spectrum> {
        let inst = self.instance(label)?;
        match &inst.prepared {
            Ok(p) => Ok(p.spectra.last().expect("ladder is nonempty")),
            Err(e) => Err(e.clone()),
        }
    }

    /// Matrix at the largest N for the labeled instance.
    pub fn matrix(&self, label: &str) -> Result<&ToeplitzMatrix> {
        let inst = self.instance(label)?;
        match &inst.prepared {
            Ok(p) => Ok(p.matrices.last().expect("ladder is nonempty")),
            Err(e) => Err(e.clone()),
        }
    }

    /// Matrices of the labeled instance, one per ladder rung.
    pub fn matrices(&self, label: &str) -> Result<&[ToeplitzMatrix]> {
        match &self.instance(label)?.prepared {
            Ok(p) => Ok(&p.matrices),
            Err(e) => Err(e.clone()),
        }
    }

    pub fn context(&self, label: &str) -> Result<&MeasureContext> {
        Ok(&self.instance(label)?.ctx)
    }

    pub(crate) fn instance(&self, label: &str) -> Result<&Instance> {
        self.instances
            .iter()
            .find(|i| i.label == label)
            .ok_or_else(|| WfockError::invalid(format!("no instance labeled `{label}`")))
    }

    pub(crate) fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn params(&self) -> ReportParams {
        ReportParams {
            alpha: self.family.model.alpha,
            weight: self.family.model.weight.clone(),
            plan: self.family.model.plan,
            analysis: self.family.analysis.clone(),
            eval_radii: self.models.iter().map(|m| m.eval_radius()).collect(),
        }
    }
}

fn prepare(models: &[FockModel], ctx: &MeasureContext, r: f64, extent: f64) -> Result<Prepared> {
    let mut matrices = Vec::with_capacity(models.len());
    let mut spectra = Vec::with_capacity(models.len());
    let mut criterion_unbounded = false;
    for (k, m) in models.iter().enumerate() {
        let t = if k == 0 {
            let t = assemble_checked(m, ctx, r, extent)?;
            criterion_unbounded = t.criterion_unbounded;
            t
        } else {
            let mut t = crate::toeplitz_spectra::assemble(m, ctx)?;
            t.criterion_unbounded = criterion_unbounded;
            t
        };
        spectra.push(spectrum(&t)?);
        matrices.push(t);
    }
    Ok(Prepared {
        matrices,
        spectra,
        criterion_unbounded,
    })
}

/// Atom sites of a measure (empty for densities).
pub(crate) fn atom_sites(spec: &MeasureSpec) -> Vec<Complex64> {
    spec.atoms()
        .map(|a| a.iter().map(|x| x.location).collect())
        .unwrap_or_default()
}
