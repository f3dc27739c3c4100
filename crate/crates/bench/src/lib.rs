//! Shared fixtures for the wfock benchmarks.

use num_complex::Complex64;
use wfock::harness::{AnalysisParams, InstanceFamily, LabeledMeasure, ModelConfig};
use wfock::{Atom, Expr, FockModel, MeasureContext, MeasureSpec, Psi, QuadraturePlan, Weight};

pub fn power_weight(gamma: f64) -> Weight {
    Weight::power(gamma).expect("finite exponent")
}

pub fn model(weight: Weight, degree: usize) -> FockModel {
    FockModel::build(weight, 1.0, degree, QuadraturePlan::default()).expect("model builds")
}

pub fn gaussian() -> MeasureSpec {
    MeasureSpec::density(Expr::parse("exp(-r^2)/pi").expect("valid expression"))
}

pub fn pullback_half() -> MeasureSpec {
    MeasureSpec::pullback(Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.0), Psi::default()).expect("a ≠ 0")
}

pub fn context(spec: MeasureSpec, weight: Weight) -> MeasureContext {
    MeasureContext::new(spec, weight, 1.0, QuadraturePlan::default())
}

/// Atom, Gaussian, area and pull-back instances on a power weight.
pub fn family(gamma: f64, ladder: Vec<usize>) -> InstanceFamily {
    let atom = MeasureSpec::atomic(vec![Atom {
        location: Complex64::new(2.0, 1.0),
        mass: 1.0,
    }])
    .expect("positive mass");
    InstanceFamily::new(
        ModelConfig::new(power_weight(gamma), 1.0),
        vec![
            LabeledMeasure::new("atom", atom),
            LabeledMeasure::new("gaussian", gaussian()),
            LabeledMeasure::new("area", MeasureSpec::weight_measure()),
            LabeledMeasure::new("pullback_half", pullback_half()),
        ],
        AnalysisParams::default().with_ladder(ladder),
    )
    .expect("valid family")
}
