//! Stability of the auxiliary kernel and norm constants of a model.

use std::collections::BTreeMap;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::report::{nums, InstanceRecord, Num, ReportParams, Verdict, VerificationReport};
use super::verify::Findings;
use super::{AnalysisParams, ModelConfig, Thresholds};
use crate::error::{Result, WfockError};
use crate::fock_model::{
    kernel_norm_check, local_lower_bound_scan, norm_equivalence_check, pointwise_bound_check, pointwise_upper_check,
    weak_convergence_profile, FockModel,
};

/// Points, samples and radii shared by every check of the suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LemmaSettings {
    pub r: f64,
    pub grid: Vec<Complex64>,
    /// Coefficient vectors of sample polynomials in the orthonormal basis.
    pub samples: Vec<Vec<Complex64>>,
    /// Largest |a − z| among the grid pairs of the upper-bound check.
    pub pair_distance: f64,
    /// Basis index and radii of the weak-convergence profile.
    pub basis_index: usize,
    pub weak_radii: Vec<f64>,
    /// Strictly decreasing candidate radii for the local lower bound.
    pub deltas: Vec<f64>,
    pub angles: usize,
    /// Relative change allowed between resolutions.
    pub stability: f64,
}

impl Default for LemmaSettings {
    fn default() -> Self {
        let mut grid = Vec::new();
        for i in -2..=2 {
            for j in -2..=2 {
                let z = Complex64::new(f64::from(i), f64::from(j));
                if z.norm() <= 2.0 {
                    grid.push(z);
                }
            }
        }
        let c = |v: &[(f64, f64)]| v.iter().map(|&(re, im)| Complex64::new(re, im)).collect::<Vec<_>>();
        LemmaSettings {
            r: 0.3,
            grid,
            samples: vec![
                c(&[(1.0, 0.0)]),
                c(&[(0.0, 0.0), (1.0, 0.0)]),
                c(&[(1.0, 0.0), (0.0, 0.0), (0.0, 0.5), (0.0, 0.0), (0.25, 0.0)]),
            ],
            pair_distance: 1.5,
            basis_index: 2,
            weak_radii: vec![0.5, 1.0, 1.5, 2.0],
            deltas: vec![0.5, 0.4, 0.3, 0.2, 0.1],
            angles: 8,
            stability: 0.2,
        }
    }
}

impl LemmaSettings {
    /// The same settings on a single grid point.
    pub fn single_point(z: Complex64) -> Self {
        LemmaSettings {
            grid: vec![z],
            ..Self::default()
        }
    }

    fn pairs(&self) -> Vec<(Complex64, Complex64)> {
        let mut out = Vec::new();
        for &a in &self.grid {
            for &z in &self.grid {
                if (a - z).norm() <= self.pair_distance {
                    out.push((a, z));
                }
            }
        }
        out
    }
}

/// One reported constant at each resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaConstant {
    pub name: String,
    pub values: Vec<Num>,
    /// Largest relative distance from the base value.
    pub max_change: Num,
}

impl LemmaConstant {
    fn new(name: &str, values: Vec<f64>) -> Self {
        let max_change = relative_change(&values);
        LemmaConstant {
            name: name.to_string(),
            values: nums(&values),
            max_change: Num(max_change),
        }
    }
}

fn relative_change(values: &[f64]) -> f64 {
    let base = values[0];
    values
        .iter()
        .map(|v| if *v == base { 0.0 } else { ((v - base) / base).abs() })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaFindings {
    /// Degree and quadrature plan of each resolution.
    pub resolutions: Vec<String>,
    pub constants: Vec<LemmaConstant>,
    pub stability: f64,
    /// Chosen δ of the local lower bound at each resolution.
    pub deltas: Vec<f64>,
    /// Weak-convergence profile at the base resolution.
    pub weak_profile: Vec<Num>,
}

impl LemmaFindings {
    /// PASS iff every constant is finite and moves by at most the
    /// stability bound between resolutions.
    pub fn verdict(&self, _t: &Thresholds) -> Verdict {
        let ok = self.constants.iter().all(|c| {
            let values: Vec<f64> = c.values.iter().map(|v| v.0).collect();
            values.iter().all(|v| v.is_finite()) && relative_change(&values) <= self.stability
        });
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

struct Measured {
    values: Vec<(&'static str, f64)>,
    delta: f64,
    profile: Vec<f64>,
}

fn measure(m: &FockModel, s: &LemmaSettings) -> Result<Measured> {
    let pointwise = pointwise_bound_check(m, s.r, &s.samples, &s.grid)?;
    let norms = norm_equivalence_check(m, s.r, &s.samples)?;
    let kernel = kernel_norm_check(m, s.r, &s.grid)?;
    let upper = pointwise_upper_check(m, s.r, &s.pairs())?;
    let lower = local_lower_bound_scan(m, s.r, &s.deltas, &s.grid, s.angles)?;
    let profile = weak_convergence_profile(m, s.basis_index, &s.weak_radii)?;
    let peak = profile.iter().copied().fold(0.0, f64::max);
    Ok(Measured {
        values: vec![
            ("pointwise_bound", pointwise.max),
            ("norm_equivalence_min", norms.min),
            ("norm_equivalence_max", norms.max),
            ("norm_equivalence_spread", norms.spread()),
            ("kernel_norm_min", kernel.min),
            ("kernel_norm_max", kernel.max),
            ("kernel_norm_spread", kernel.spread()),
            ("pointwise_upper_max", upper.max),
            ("local_lower_bound", lower.constant),
            ("weak_convergence_peak", peak),
        ],
        delta: lower.delta,
        profile,
    })
}

/// Runs every kernel and norm check on the model of the given degree, on
/// the same model with a refined quadrature plan and at degree + 20.
pub fn lemma_suite(model: &ModelConfig, degree: usize, settings: &LemmaSettings) -> Result<VerificationReport> {
    if settings.grid.is_empty() || settings.samples.is_empty() {
        return Err(WfockError::invalid("the lemma suite needs grid points and samples"));
    }
    let start = Instant::now();
    let base = model.build(degree)?;
    let refined = FockModel::build(model.weight.clone(), model.alpha, degree, model.plan.refined())?;
    let raised = model.build(degree + 20)?;
    let resolutions = vec![
        format!("N={degree}"),
        format!("N={degree}, refined quadrature"),
        format!("N={}", degree + 20),
    ];
    let measured = [&base, &refined, &raised]
        .iter()
        .map(|m| measure(m, settings))
        .collect::<Result<Vec<_>>>();
    let analysis = AnalysisParams {
        r: settings.r,
        secondary_r: None,
        ..AnalysisParams::default()
    }
    .with_ladder(vec![degree]);
    let params = ReportParams {
        alpha: model.alpha,
        weight: model.weight.clone(),
        plan: model.plan,
        analysis,
        eval_radii: vec![base.eval_radius()],
    };
    let findings = measured.map(|runs| {
        let constants = (0..runs[0].values.len())
            .map(|i| LemmaConstant::new(runs[0].values[i].0, runs.iter().map(|r| r.values[i].1).collect()))
            .collect();
        Findings::Lemmas(LemmaFindings {
            resolutions,
            constants,
            stability: settings.stability,
            deltas: runs.iter().map(|r| r.delta).collect(),
            weak_profile: nums(&runs[0].profile),
        })
    });
    let record = InstanceRecord::from_result("model", "lemmas", findings, &params);
    let runtimes = BTreeMap::from([(record.key(), start.elapsed().as_secs_f64())]);
    Ok(VerificationReport::assemble(params, vec![record], runtimes))
}
