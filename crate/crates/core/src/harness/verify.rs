use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lemmas::LemmaFindings;
use super::report::{nums, InstanceRecord, Num, Ratio, Verdict, VerificationReport};
use super::rules::{decays, divergent, ladder_stable, line_fit, shrinks};
use super::sampling::{
    doubling_extents, evaluate, extent_sups, grid, plane_integral, spectral_estimate, IntegralEstimate, SeriesEstimate,
    Support,
};
use super::{
    atom_sites, AnalysisParams, Instance, InstanceFamily, LabeledMeasure, ModelConfig, Prepared, Thresholds, Workbench,
};
use crate::error::{Result, WfockError};
use crate::fock_model::FockModel;
use crate::measures::{average_function, MeasureContext, MeasureSpec, Psi};
use crate::quadrature::adaptive_try;
use crate::toeplitz_spectra::{berezin_form, ring_sups, GaugeKind, SchattenGauge};

/// Operation-specific numbers of one record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Findings {
    Boundedness(BoundednessFindings),
    Compactness(CompactnessFindings),
    Schatten(SchattenFindings),
    Gauge(GaugeFindings),
    Volterra(VolterraFindings),
    Lemmas(LemmaFindings),
}

impl Findings {
    pub fn verdict(&self, t: &Thresholds) -> Verdict {
        match self {
            Findings::Boundedness(f) => f.verdict(t),
            Findings::Compactness(f) => f.verdict(t),
            Findings::Schatten(f) => f.verdict(t),
            Findings::Gauge(f) => f.verdict(t),
            Findings::Volterra(f) => f.verdict(t),
            Findings::Lemmas(f) => f.verdict(t),
        }
    }

    /// Headline numbers of the record, named.
    pub fn criteria(&self) -> Vec<(String, f64)> {
        let last = |v: &[Num]| v.last().map_or(f64::NAN, |x| x.0);
        let named = |pairs: &[(&str, f64)]| pairs.iter().map(|(n, v)| (n.to_string(), *v)).collect::<Vec<_>>();
        match self {
            Findings::Boundedness(f) => {
                let mut out = named(&[
                    ("norm", last(&f.norms)),
                    ("berezin_sup", last(&f.berezin_sups)),
                    ("average_sup", f.average_sup.0),
                ]);
                if let Some(s) = &f.secondary {
                    out.push(("average_sup_secondary".into(), s.average_sup.0));
                }
                out
            }
            Findings::Compactness(f) => named(&[
                ("average_ring_limsup", last(&f.average_rings)),
                ("berezin_ring_limsup", last(&f.berezin_rings)),
                ("tail_eigenvalue", last(&f.tail_values)),
            ]),
            Findings::Schatten(f) => named(&[
                ("schatten_norm", f.norms[0].0),
                ("berezin_lp_norm", f.norms[1].0),
                ("average_lp_norm", f.norms[2].0),
            ]),
            Findings::Gauge(f) => named(&[
                ("spectral_sum", f.spectral.total.0),
                ("berezin_integral", f.berezin.total.0),
                ("average_integral", f.average.total.0),
            ]),
            Findings::Volterra(f) => named(&[
                ("spectral_sum", f.spectral.total.0),
                ("criterion_integral", f.criterion.total.0),
                ("profile_integral", f.profile_integral.0),
                ("trace_slope", f.trace_fit.slope.0),
            ]),
            Findings::Lemmas(f) => f
                .constants
                .iter()
                .map(|c| (c.name.clone(), c.values.first().map_or(f64::NAN, |v| v.0)))
                .collect(),
        }
    }

    pub fn ratios(&self) -> Vec<&Ratio> {
        match self {
            Findings::Boundedness(f) => f.ratios.iter().collect(),
            Findings::Schatten(f) => f.ratios.iter().collect(),
            _ => Vec::new(),
        }
    }
}

/// sup μ̂ at the secondary averaging radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondaryRadius {
    pub r: f64,
    pub average_sup: Num,
    pub average_extent_sups: Vec<Num>,
    /// ‖T_μ‖ against this sup; recorded only, since the comparison constant
    /// depends on the radius.
    pub norm_ratio: Ratio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundednessFindings {
    pub r: f64,
    pub ladder: Vec<usize>,
    /// ‖T_μ‖ at each rung.
    pub norms: Vec<Num>,
    /// sup μ̃ over the grid points inside each rung's evaluation radius.
    pub berezin_sups: Vec<Num>,
    pub average_sup: Num,
    pub extents: Vec<f64>,
    /// sup μ̃ (largest rung) and sup μ̂ over |z| ≤ each extent.
    pub berezin_extent_sups: Vec<Num>,
    pub average_extent_sups: Vec<Num>,
    pub secondary: Option<SecondaryRadius>,
    /// Outcome of the coarse μ̂ precheck done at assembly.
    pub precheck_unbounded: bool,
    pub ratios: Vec<Ratio>,
}

impl BoundednessFindings {
    /// UNBOUNDED when every criterion diverges, PASS when none does and the
    /// ratios and ladders hold, FAIL otherwise.
    pub fn verdict(&self, t: &Thresholds) -> Verdict {
        let ladder: Vec<f64> = self.ladder.iter().map(|&n| n as f64).collect();
        let mut div = vec![
            divergent(&ladder, &self.norms, t.growth),
            divergent(&self.extents, &self.berezin_extent_sups, t.growth),
            divergent(&self.extents, &self.average_extent_sups, t.growth),
        ];
        if let Some(s) = &self.secondary {
            div.push(divergent(&self.extents, &s.average_extent_sups, t.growth));
        }
        if div.iter().all(|d| *d) {
            return Verdict::Unbounded;
        }
        let bounded = div.iter().all(|d| !*d)
            && self.ratios.iter().all(|r| r.within(t.ceiling))
            && ladder_stable(&self.norms, t.stability)
            && ladder_stable(&self.berezin_sups, t.stability);
        if bounded {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactnessFindings {
    pub r: f64,
    pub rings: Vec<f64>,
    pub average_rings: Vec<Num>,
    /// Ring sups of μ̃ over the rings inside the largest model's evaluation radius.
    pub berezin_rings: Vec<Num>,
    pub ladder: Vec<usize>,
    /// n = ⌈N/2⌉ and s_n at each rung.
    pub tail_index: Vec<usize>,
    pub tail_values: Vec<Num>,
    /// s_1 at the largest rung.
    pub top: Num,
}

impl CompactnessFindings {
    pub fn verdict(&self, t: &Thresholds) -> Verdict {
        let votes = [
            decays(&self.average_rings, t.decay_fraction),
            decays(&self.berezin_rings, t.decay_fraction),
            shrinks(&self.tail_values, self.top.0, t.shrink_fraction),
        ];
        if votes.iter().all(|v| *v) {
            Verdict::Compact
        } else if votes.iter().all(|v| !*v) {
            Verdict::NotCompact
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchattenFindings {
    pub p: f64,
    /// p < 1 lies outside the proven range; computed anyway.
    pub outside_hypothesis: bool,
    pub ladder: Vec<usize>,
    /// Σ s_n^p of each truncation.
    pub raw_sums: Vec<Num>,
    pub spectral: SeriesEstimate,
    /// ∫ μ̃^p dA and ∫ μ̂^p dA.
    pub berezin: IntegralEstimate,
    pub average: IntegralEstimate,
    /// S_p norm, ‖μ̃‖_{L^p}, ‖μ̂‖_{L^p}.
    pub norms: [Num; 3],
    pub ratios: Vec<Ratio>,
}

/// The tail-corrected sum is finite and the truncated sums do not diverge
/// along the ladder.
fn spectral_finite(estimate: &SeriesEstimate, ladder: &[usize], sums: &[Num], t: &Thresholds) -> bool {
    let xs: Vec<f64> = ladder.iter().map(|&n| n as f64).collect();
    estimate.total.is_finite() && !divergent(&xs, sums, t.growth)
}

impl SchattenFindings {
    pub fn verdict(&self, t: &Thresholds) -> Verdict {
        let finite = [
            spectral_finite(&self.spectral, &self.ladder, &self.raw_sums, t),
            self.berezin.total.is_finite(),
            self.average.total.is_finite(),
        ];
        if finite.iter().all(|f| *f) {
            if self.ratios.iter().all(|r| r.within(t.ceiling)) {
                Verdict::InClass
            } else {
                Verdict::Fail
            }
        } else if finite.iter().all(|f| !*f) {
            Verdict::NotInClass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeFindings {
    pub gauge: SchattenGauge,
    pub calibration: String,
    /// C₁, C₂, C₃ for the spectral sum and the two integrals.
    pub scales: [Num; 3],
    pub ladder: Vec<usize>,
    /// Σ h(C₁s_n) of each truncation.
    pub raw_sums: Vec<Num>,
    pub spectral: SeriesEstimate,
    pub berezin: IntegralEstimate,
    pub average: IntegralEstimate,
}

impl GaugeFindings {
    pub fn verdict(&self, t: &Thresholds) -> Verdict {
        let finite = [
            spectral_finite(&self.spectral, &self.ladder, &self.raw_sums, t),
            self.berezin.total.is_finite(),
            self.average.total.is_finite(),
        ];
        if finite.iter().all(|f| *f) {
            Verdict::InClass
        } else if finite.iter().all(|f| !*f) {
            Verdict::NotInClass
        } else {
            Verdict::Fail
        }
    }
}

/// Least-squares line of trace partial sums against log N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceFit {
    pub slope: Num,
    pub intercept: Num,
    pub correlation: Num,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolterraFindings {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub p: f64,
    pub ladder: Vec<usize>,
    /// Σ s_n^{p/2}(T_{μ_g}) of each truncation.
    pub spectral_sums: Vec<Num>,
    pub spectral: SeriesEstimate,
    /// ∫ μ̂^{p/2} dA.
    pub criterion: IntegralEstimate,
    /// ∫ (|g′|²/(1+|z|)²)^{p/2} dA, the profile μ̂ is comparable to.
    pub profile_integral: Num,
    pub traces: Vec<Num>,
    pub trace_fit: TraceFit,
    /// Every matrix entry is exactly zero.
    pub zero_operator: bool,
}

impl VolterraFindings {
    pub fn verdict(&self, t: &Thresholds) -> Verdict {
        if self.zero_operator {
            return Verdict::InClass;
        }
        let spectral = spectral_finite(&self.spectral, &self.ladder, &self.spectral_sums, t);
        let criterion = self.criterion.total.is_finite();
        if self.p <= 2.0 {
            let log_growth = self.trace_fit.slope.0 > 0.0 && self.trace_fit.correlation.0 >= t.correlation;
            if log_growth && !spectral && !criterion {
                return Verdict::NotHs;
            }
        }
        if spectral && criterion && ladder_stable(&self.spectral_sums, t.stability) {
            Verdict::InClass
        } else if !spectral && !criterion {
            Verdict::NotInClass
        } else {
            Verdict::Fail
        }
    }
}

/// μ̃ of the truncation at rung k; atoms use the kernel directly.
fn berezin_at(inst: &Instance, prepared: &Prepared, model: &FockModel, k: usize, z: Complex64) -> Result<f64> {
    if let Some(atoms) = inst.ctx.spec().atoms() {
        model.check_point(z)?;
        let diag = model.damped_kernel_diagonal(z);
        let scale = inst.ctx.spec().scale;
        let sum: f64 = atoms
            .iter()
            .map(|a| a.mass * scale * model.damped_kernel_modulus(a.location, z).powi(2))
            .sum();
        return Ok(sum / diag);
    }
    berezin_form(&prepared.matrices[k], model, z)
}

fn prepared(inst: &Instance) -> Result<&Prepared> {
    inst.prepared.as_ref().map_err(|e| e.clone())
}

fn average_support<'a>(ctx: &'a MeasureContext, r: f64) -> Support<'a> {
    if ctx.is_radial() {
        let mut bps = vec![r];
        for b in ctx.breakpoints().into_iter().chain(ctx.weight().breakpoints()) {
            bps.extend([b + r, (b - r).abs()]);
        }
        bps.retain(|b| *b > 0.0);
        bps.sort_by(f64::total_cmp);
        bps.dedup();
        Support::Radial { breakpoints: bps }
    } else if let Some(atoms) = ctx.spec().atoms() {
        Support::AtomDisks { atoms, r }
    } else {
        Support::Plane
    }
}

fn berezin_support(ctx: &MeasureContext) -> Support<'static> {
    if ctx.is_radial() {
        Support::Radial {
            breakpoints: Vec::new(),
        }
    } else {
        Support::Plane
    }
}

/// A pure criterion function with its values cached by point.
struct Memo<'a> {
    f: Box<dyn Fn(Complex64) -> Result<f64> + Sync + 'a>,
    values: Mutex<HashMap<(u64, u64), f64>>,
}

impl<'a> Memo<'a> {
    fn new(f: impl Fn(Complex64) -> Result<f64> + Sync + 'a) -> Self {
        Memo {
            f: Box::new(f),
            values: Mutex::new(HashMap::new()),
        }
    }

    fn get(&self, z: Complex64) -> Result<f64> {
        let key = (z.re.to_bits(), z.im.to_bits());
        if let Some(v) = self.values.lock().ok().and_then(|m| m.get(&key).copied()) {
            return Ok(v);
        }
        let v = (self.f)(z)?;
        if let Ok(mut m) = self.values.lock() {
            m.insert(key, v);
        }
        Ok(v)
    }
}

impl Workbench {
    fn run<F>(&self, operation: &str, f: F) -> VerificationReport
    where
        F: Fn(&Instance) -> Result<Findings> + Sync,
    {
        let params = self.params();
        let out: Vec<(InstanceRecord, f64)> = self
            .instances()
            .par_iter()
            .map(|inst| {
                let start = Instant::now();
                let rec = InstanceRecord::from_result(&inst.label, operation, f(inst), &params);
                (rec, inst.seconds + start.elapsed().as_secs_f64())
            })
            .collect();
        let runtimes: BTreeMap<String, f64> = out.iter().map(|(r, s)| (r.key(), *s)).collect();
        VerificationReport::assemble(params, out.into_iter().map(|(r, _)| r).collect(), runtimes)
    }

    fn analysis(&self) -> &AnalysisParams {
        &self.family().analysis
    }

    /// ‖T_μ‖, sup μ̃ and sup μ̂ with their pairwise ratios.
    pub fn boundedness(&self) -> VerificationReport {
        self.run("boundedness", |inst| {
            self.boundedness_of(inst).map(Findings::Boundedness)
        })
    }

    fn boundedness_of(&self, inst: &Instance) -> Result<BoundednessFindings> {
        let prep = prepared(inst)?;
        let a = self.analysis();
        let ctx = &inst.ctx;
        let points = grid(ctx.is_radial(), a.extent, a.grid_step, &atom_sites(ctx.spec()));
        let extents = doubling_extents(a.extent);
        let average = evaluate(&points, |z| average_function(ctx, a.r, z))?;
        let average_extent_sups = extent_sups(&points, &average, &extents);
        let average_sup = *average_extent_sups.last().unwrap_or(&0.0);
        let norms: Vec<f64> = prep.spectra.iter().map(|s| s.s(1)).collect();
        let norm = *norms.last().unwrap_or(&0.0);
        let secondary = match a.secondary_r {
            Some(r2) => {
                let values = evaluate(&points, |z| average_function(ctx, r2, z))?;
                let sups = extent_sups(&points, &values, &extents);
                let sup = *sups.last().unwrap_or(&0.0);
                Some(SecondaryRadius {
                    r: r2,
                    average_sup: Num(sup),
                    average_extent_sups: nums(&sups),
                    norm_ratio: Ratio::new("norm/average_sup", norm, sup),
                })
            }
            None => None,
        };
        let mut berezin_sups = Vec::new();
        let mut berezin_extent_sups = Vec::new();
        for (k, model) in self.models().iter().enumerate() {
            let inside: Vec<Complex64> = points
                .iter()
                .copied()
                .filter(|z| model.within_eval_radius(*z))
                .collect();
            let values = evaluate(&inside, |z| berezin_at(inst, prep, model, k, z))?;
            let sups = extent_sups(&inside, &values, &extents);
            berezin_sups.push(*sups.last().unwrap_or(&0.0));
            berezin_extent_sups = sups;
        }
        let berezin = *berezin_sups.last().unwrap_or(&0.0);
        let ratios = vec![
            Ratio::new("norm/berezin_sup", norm, berezin),
            Ratio::new("norm/average_sup", norm, average_sup),
            Ratio::new("berezin_sup/average_sup", berezin, average_sup),
        ];
        Ok(BoundednessFindings {
            r: a.r,
            ladder: a.ladder.clone(),
            norms: nums(&norms),
            berezin_sups: nums(&berezin_sups),
            average_sup: Num(average_sup),
            extents,
            berezin_extent_sups: nums(&berezin_extent_sups),
            average_extent_sups: nums(&average_extent_sups),
            secondary,
            precheck_unbounded: prep.criterion_unbounded,
            ratios,
        })
    }

    /// Ring decay of μ̂ and μ̃ against shrinkage of s_{⌈N/2⌉}.
    pub fn compactness(&self) -> VerificationReport {
        self.run("compactness", |inst| {
            self.compactness_of(inst).map(Findings::Compactness)
        })
    }

    fn compactness_of(&self, inst: &Instance) -> Result<CompactnessFindings> {
        let prep = prepared(inst)?;
        let a = self.analysis();
        let ctx = &inst.ctx;
        let sites = atom_sites(ctx.spec());
        let average_rings = ring_sups(&a.rings, ctx.is_radial(), &sites, |z| average_function(ctx, a.r, z))?;
        let k = self.models().len() - 1;
        let model = self.largest_model();
        let inner: Vec<f64> = a.rings.iter().copied().filter(|r| *r <= model.eval_radius()).collect();
        if inner.len() < 3 {
            return Err(WfockError::ModelResolution(format!(
                "fewer than three rings fit inside the evaluation radius {}",
                model.eval_radius()
            )));
        }
        let berezin_rings = ring_sups(&inner, ctx.is_radial(), &sites, |z| {
            if model.within_eval_radius(z) {
                berezin_at(inst, prep, model, k, z)
            } else {
                Ok(0.0)
            }
        })?;
        let tail_index: Vec<usize> = a.ladder.iter().map(|n| n.div_ceil(2).max(1)).collect();
        let tail_values: Vec<f64> = prep.spectra.iter().zip(&tail_index).map(|(s, &n)| s.s(n)).collect();
        Ok(CompactnessFindings {
            r: a.r,
            rings: a.rings.clone(),
            average_rings: nums(&average_rings),
            berezin_rings: nums(&berezin_rings),
            ladder: a.ladder.clone(),
            tail_index,
            tail_values: nums(&tail_values),
            top: Num(prep.spectra.last().map_or(0.0, |s| s.s(1))),
        })
    }

    /// S_p against ‖μ̃‖_{L^p} and ‖μ̂‖_{L^p}.
    pub fn schatten(&self, p: f64) -> Result<VerificationReport> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(WfockError::invalid("Schatten exponent must be positive"));
        }
        Ok(self.run(&format!("schatten_p={p}"), |inst| {
            self.schatten_of(inst, p).map(Findings::Schatten)
        }))
    }

    fn criterion_memos<'a>(&'a self, inst: &'a Instance, prep: &'a Prepared) -> (Memo<'a>, Memo<'a>, f64) {
        let k = self.models().len() - 1;
        let model = self.largest_model();
        let r = self.analysis().r;
        let berezin = Memo::new(move |z| berezin_at(inst, prep, model, k, z));
        let average = Memo::new(move |z| average_function(&inst.ctx, r, z));
        let radius = self.analysis().extent.min(model.eval_radius() * (1.0 - 1e-9));
        (berezin, average, radius)
    }

    fn integral(
        &self,
        what: &str,
        memo: &Memo<'_>,
        support: Support<'_>,
        radius: f64,
        h: &dyn Fn(f64) -> f64,
    ) -> Result<IntegralEstimate> {
        let peak = memo.get(Complex64::new(0.0, 0.0))?;
        plane_integral(
            what,
            |z| memo.get(z),
            h,
            support,
            radius,
            peak,
            &self.family().model.plan,
        )
    }

    fn schatten_of(&self, inst: &Instance, p: f64) -> Result<SchattenFindings> {
        let prep = prepared(inst)?;
        let h = move |t: f64| t.powf(p);
        let raw_sums: Vec<f64> = prep
            .spectra
            .iter()
            .map(|s| s.values.iter().map(|v| h(*v)).sum())
            .collect();
        let spectral = spectral_estimate(prep.spectra.last().expect("ladder is nonempty"), &h);
        let (bm, am, radius) = self.criterion_memos(inst, prep);
        let berezin = self.integral("berezin L^p integral", &bm, berezin_support(&inst.ctx), radius, &h)?;
        let average = self.integral(
            "average L^p integral",
            &am,
            average_support(&inst.ctx, self.analysis().r),
            self.analysis().extent,
            &h,
        )?;
        let root = |v: Num| Num(v.0.powf(1.0 / p));
        let norms = [root(spectral.total), root(berezin.total), root(average.total)];
        let ratios = vec![
            Ratio::new("schatten/berezin_lp", norms[0].0, norms[1].0),
            Ratio::new("schatten/average_lp", norms[0].0, norms[2].0),
            Ratio::new("berezin_lp/average_lp", norms[1].0, norms[2].0),
        ];
        Ok(SchattenFindings {
            p,
            outside_hypothesis: p < 1.0,
            ladder: self.analysis().ladder.clone(),
            raw_sums: nums(&raw_sums),
            spectral,
            berezin,
            average,
            norms,
            ratios,
        })
    }

    /// Σ h(C₁s_n), ∫ h(C₂μ̃) dA and ∫ h(C₃μ̂) dA with scales calibrated to
    /// make each quantity 1 on the calibration instance.
    pub fn schatten_gauge(&self, g: &SchattenGauge) -> Result<VerificationReport> {
        g.validate()?;
        let calibration = match &self.analysis().calibration {
            Some(label) => self.instance(label)?,
            None => self
                .instances()
                .iter()
                .find(|i| i.prepared.is_ok())
                .ok_or_else(|| WfockError::invalid("no instance can calibrate the gauge"))?,
        };
        let prep = prepared(calibration)?;
        let (bm, am, radius) = self.criterion_memos(calibration, prep);
        let r = self.analysis().r;
        let spectrum = prep.spectra.last().expect("ladder is nonempty");
        let c1 = calibrate(|c| Ok(spectral_estimate(spectrum, &|t| g.h(c * t)).total.0))?;
        let c2 = calibrate(|c| {
            Ok(self
                .integral(
                    "gauge calibration",
                    &bm,
                    berezin_support(&calibration.ctx),
                    radius,
                    &|t| g.h(c * t),
                )?
                .total
                .0)
        })?;
        let c3 = calibrate(|c| {
            Ok(self
                .integral(
                    "gauge calibration",
                    &am,
                    average_support(&calibration.ctx, r),
                    self.analysis().extent,
                    &|t| g.h(c * t),
                )?
                .total
                .0)
        })?;
        let calibration = calibration.label.clone();
        let name = format!("gauge_{}", gauge_name(g));
        Ok(self.run(&name, |inst| {
            let prep = prepared(inst)?;
            let (bm, am, radius) = self.criterion_memos(inst, prep);
            let spectral = spectral_estimate(prep.spectra.last().expect("ladder is nonempty"), &|t| g.h(c1 * t));
            let raw_sums: Vec<f64> = prep
                .spectra
                .iter()
                .map(|s| s.values.iter().map(|v| g.h(c1 * v)).sum())
                .collect();
            let berezin = self.integral("gauge integral", &bm, berezin_support(&inst.ctx), radius, &|t| {
                g.h(c2 * t)
            })?;
            let average = self.integral(
                "gauge integral",
                &am,
                average_support(&inst.ctx, r),
                self.analysis().extent,
                &|t| g.h(c3 * t),
            )?;
            Ok(Findings::Gauge(GaugeFindings {
                gauge: g.clone(),
                calibration: calibration.clone(),
                scales: [Num(c1), Num(c2), Num(c3)],
                ladder: self.analysis().ladder.clone(),
                raw_sums: nums(&raw_sums),
                spectral,
                berezin,
                average,
            }))
        }))
    }
}

/// C with q(C) = 1 by bisection in log C over [e^{−30}, e^{30}]; 1 when q
/// is not finite or never crosses 1 there.
fn calibrate<Q: Fn(f64) -> Result<f64>>(q: Q) -> Result<f64> {
    let (mut lo, mut hi) = (-30.0f64, 30.0f64);
    let qlo = q(lo.exp())?;
    let qhi = q(hi.exp())?;
    if !qlo.is_finite() || !qhi.is_finite() || qlo > 1.0 || qhi < 1.0 {
        return Ok(1.0);
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let v = q(mid.exp())?;
        if !v.is_finite() {
            return Ok(1.0);
        }
        if v < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

fn gauge_name(g: &SchattenGauge) -> String {
    match &g.kind {
        GaugeKind::Power { p } => format!("power_p={p}"),
        GaugeKind::LogDecay { gamma } => format!("log_decay_gamma={gamma}"),
        GaugeKind::Piecewise { knots } => format!("piecewise_{}", knots.len()),
    }
}

pub fn verify_boundedness(f: &InstanceFamily) -> Result<VerificationReport> {
    Ok(Workbench::new(f)?.boundedness())
}

pub fn verify_compactness(f: &InstanceFamily) -> Result<VerificationReport> {
    Ok(Workbench::new(f)?.compactness())
}

pub fn verify_schatten(f: &InstanceFamily, p: f64) -> Result<VerificationReport> {
    Workbench::new(f)?.schatten(p)
}

pub fn verify_schatten_gauge(f: &InstanceFamily, g: &SchattenGauge) -> Result<VerificationReport> {
    Workbench::new(f)?.schatten_gauge(g)
}

/// J_g for g(z) = a·z + b through T_{μ_g}: the S_{p/2} ladder, ∫ μ̂^{p/2} dA
/// and, for p = 2, the logarithmic fit of the trace partial sums.
pub fn verify_volterra(
    model: &ModelConfig,
    a: Complex64,
    b: Complex64,
    p: f64,
    analysis: &AnalysisParams,
) -> Result<VerificationReport> {
    if !(p >= 2.0 && p.is_finite()) {
        return Err(WfockError::invalid("the Volterra test needs p ≥ 2"));
    }
    let label = format!("volterra_a={a}");
    let family = InstanceFamily::new(
        model.clone(),
        vec![LabeledMeasure::new(&label, MeasureSpec::volterra(vec![b, a]))],
        analysis.clone(),
    )?;
    let wb = Workbench::new(&family)?;
    let q = p / 2.0;
    Ok(wb.run(&format!("volterra_p={p}"), |inst| {
        let prep = prepared(inst)?;
        let h = move |t: f64| t.powf(q);
        let spectral_sums: Vec<f64> = prep
            .spectra
            .iter()
            .map(|s| s.values.iter().map(|v| h(*v)).sum())
            .collect();
        let spectral = spectral_estimate(prep.spectra.last().expect("ladder is nonempty"), &h);
        let (_, am, _) = wb.criterion_memos(inst, prep);
        let criterion = wb.integral(
            "volterra criterion integral",
            &am,
            average_support(&inst.ctx, analysis.r),
            analysis.extent,
            &h,
        )?;
        let profile_integral = volterra_profile_integral(a.norm(), p, &model.plan)?;
        let traces: Vec<f64> = prep.matrices.iter().map(|m| m.trace()).collect();
        let xs: Vec<f64> = analysis.ladder.iter().map(|&n| (n as f64).ln()).collect();
        let fit = line_fit(&xs, &traces);
        Ok(Findings::Volterra(VolterraFindings {
            a: [a.re, a.im],
            b: [b.re, b.im],
            p,
            ladder: analysis.ladder.clone(),
            spectral_sums: nums(&spectral_sums),
            spectral,
            criterion,
            profile_integral: Num(profile_integral),
            traces: nums(&traces),
            trace_fit: TraceFit {
                slope: Num(fit.slope),
                intercept: Num(fit.intercept),
                correlation: Num(fit.correlation),
            },
            zero_operator: prep
                .matrices
                .iter()
                .all(|m| m.entries.iter().all(|v| *v == Complex64::new(0.0, 0.0))),
        }))
    }))
}

/// 2π∫_0^∞ ρ(|a|²/(1+ρ)²)^{p/2} dρ on the compactified variable
/// t = ρ/(1+ρ), where the integrand is |a|^p·t(1−t)^{p−3}.
fn volterra_profile_integral(a: f64, p: f64, plan: &crate::quadrature::QuadraturePlan) -> Result<f64> {
    if a == 0.0 {
        return Ok(0.0);
    }
    if p <= 2.0 {
        return Ok(f64::INFINITY);
    }
    let v = adaptive_try("volterra profile integral", 0.0, 1.0, &[], plan, |t| {
        let rho = t / (1.0 - t);
        let f = a * a / ((1.0 + rho) * (1.0 + rho));
        Ok(2.0 * std::f64::consts::PI * rho * f.powf(p / 2.0) / ((1.0 - t) * (1.0 - t)))
    })?;
    Ok(v)
}

/// W_{φ,ψ} for φ(z) = a·z + b through T_{μ_{φ,ψ}}: boundedness and
/// compactness of the pull-back criterion and S_p membership through
/// S_{p/2} of the Toeplitz operator, each cross-checked against its ladder.
pub fn verify_composition(
    model: &ModelConfig,
    a: Complex64,
    b: Complex64,
    psi: Psi,
    p: f64,
    analysis: &AnalysisParams,
) -> Result<VerificationReport> {
    if !(p >= 2.0 && p.is_finite()) {
        return Err(WfockError::invalid("the composition test needs p ≥ 2"));
    }
    let spec = MeasureSpec::pullback(a, b, psi)?;
    let family = InstanceFamily::new(
        model.clone(),
        vec![LabeledMeasure::new(format!("pullback_a={a}_b={b}"), spec)],
        analysis.clone(),
    )?;
    let wb = Workbench::new(&family)?;
    VerificationReport::merge(vec![wb.boundedness(), wb.compactness(), wb.schatten(p / 2.0)?])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::measures::Atom;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn atom(re: f64, im: f64, mass: f64) -> Atom {
        Atom {
            location: c(re, im),
            mass,
        }
    }

    fn gaussian() -> MeasureSpec {
        MeasureSpec::density(Expr::parse("exp(-r^2)/pi").unwrap())
    }

    fn family(measures: Vec<LabeledMeasure>) -> InstanceFamily {
        InstanceFamily::new(ModelConfig::standard(1.0), measures, AnalysisParams::default()).unwrap()
    }

    fn findings<'a>(report: &'a VerificationReport, label: &str, op: &str) -> &'a Findings {
        report.record(label, op).and_then(|r| r.findings.as_ref()).expect(label)
    }

    #[test]
    fn standard_corpus_verdicts() {
        let wb = Workbench::new(&family(vec![
            LabeledMeasure::new("atom0", MeasureSpec::atomic(vec![atom(0.0, 0.0, 1.0)]).unwrap()),
            LabeledMeasure::new("gauss", gaussian()),
            LabeledMeasure::new("area", MeasureSpec::weight_measure()),
        ]))
        .unwrap();
        let b = wb.boundedness();
        for label in ["atom0", "gauss", "area"] {
            assert_eq!(b.verdict(label, "boundedness"), Some(Verdict::Pass), "{label}");
        }
        let Findings::Boundedness(area) = findings(&b, "area", "boundedness") else {
            panic!()
        };
        for r in &area.ratios {
            assert!((r.value.0 - 1.0).abs() < 1e-6, "{r:?}");
        }
        let k = wb.compactness();
        assert_eq!(k.verdict("atom0", "compactness"), Some(Verdict::Compact));
        assert_eq!(k.verdict("gauss", "compactness"), Some(Verdict::Compact));
        assert_eq!(k.verdict("area", "compactness"), Some(Verdict::NotCompact));
        let s = wb.schatten(1.0).unwrap();
        assert_eq!(s.verdict("atom0", "schatten_p=1"), Some(Verdict::InClass));
        assert_eq!(s.verdict("gauss", "schatten_p=1"), Some(Verdict::InClass));
        assert_eq!(s.verdict("area", "schatten_p=1"), Some(Verdict::NotInClass));
        for label in ["atom0", "gauss"] {
            let Findings::Schatten(f) = findings(&s, label, "schatten_p=1") else {
                panic!()
            };
            assert!((f.average.total.0 - PI).abs() < 1e-4, "{label}: {}", f.average.total.0);
            assert!(
                (f.spectral.total.0 - 1.0).abs() < 1e-6,
                "{label}: {}",
                f.spectral.total.0
            );
        }
    }

    #[test]
    fn scaling_is_exact_for_atoms() {
        let atoms = vec![atom(0.0, 0.0, 1.0), atom(2.0, 1.0, 0.5)];
        let base = MeasureSpec::atomic(atoms.clone()).unwrap();
        let twice = MeasureSpec::atomic(
            atoms
                .iter()
                .map(|a| atom(a.location.re, a.location.im, 2.0 * a.mass))
                .collect(),
        )
        .unwrap();
        let analysis = AnalysisParams::default().with_ladder(vec![40, 60, 80]);
        let fam = InstanceFamily::new(
            ModelConfig::standard(1.0),
            vec![LabeledMeasure::new("one", base), LabeledMeasure::new("two", twice)],
            analysis,
        )
        .unwrap();
        let b = verify_boundedness(&fam).unwrap();
        let (Findings::Boundedness(one), Findings::Boundedness(two)) =
            (findings(&b, "one", "boundedness"), findings(&b, "two", "boundedness"))
        else {
            panic!()
        };
        for (x, y) in one.norms.iter().zip(&two.norms) {
            assert_eq!(2.0 * x.0, y.0);
        }
        assert_eq!(2.0 * one.average_sup.0, two.average_sup.0);
        for (x, y) in one.ratios.iter().zip(&two.ratios) {
            assert_eq!(x.value, y.value);
        }
    }

    #[test]
    fn pullback_and_volterra_oracles() {
        let model = ModelConfig::standard(1.0);
        let analysis = AnalysisParams::default();
        let half = verify_composition(&model, c(0.5, 0.0), c(0.0, 0.0), Psi::default(), 4.0, &analysis).unwrap();
        assert!(!half.any_failure(), "{:?}", half.verdicts);
        assert_eq!(half.verdicts.values().filter(|v| **v == Verdict::Compact).count(), 1);
        let two = verify_composition(&model, c(2.0, 0.0), c(0.0, 0.0), Psi::default(), 4.0, &analysis).unwrap();
        let rec = two.instances.iter().find(|r| r.operation == "boundedness").unwrap();
        assert_eq!(rec.verdict, Verdict::Unbounded, "{:?}", rec.error);
        assert!(matches!(
            verify_composition(&model, c(0.0, 0.0), c(1.0, 0.0), Psi::default(), 4.0, &analysis),
            Err(WfockError::DegenerateMap)
        ));

        let v4 = verify_volterra(&model, c(1.0, 0.0), c(0.0, 0.0), 4.0, &analysis).unwrap();
        let rec = &v4.instances[0];
        let Some(Findings::Volterra(f)) = &rec.findings else {
            panic!()
        };
        assert!((f.profile_integral.0 - PI / 3.0).abs() < 1e-6);
        assert_eq!(rec.verdict, Verdict::InClass);

        let hs = analysis.clone().with_ladder(vec![40, 80, 160]);
        let v2 = verify_volterra(&model, c(1.0, 0.0), c(0.0, 0.0), 2.0, &hs).unwrap();
        let Some(Findings::Volterra(f)) = &v2.instances[0].findings else {
            panic!()
        };
        assert!(f.trace_fit.correlation.0 >= 0.99, "{:?}", f.trace_fit);
        assert_eq!(v2.instances[0].verdict, Verdict::NotHs);

        let v0 = verify_volterra(&model, c(0.0, 0.0), c(3.0, 0.0), 4.0, &analysis).unwrap();
        let Some(Findings::Volterra(f)) = &v0.instances[0].findings else {
            panic!()
        };
        assert!(f.zero_operator);
    }

    #[test]
    fn reports_are_deterministic_and_round_trip() {
        let fam = InstanceFamily::new(
            ModelConfig::standard(1.0),
            vec![LabeledMeasure::new(
                "atoms",
                MeasureSpec::atomic(vec![atom(2.0, 1.0, 1.0)]).unwrap(),
            )],
            AnalysisParams::default(),
        )
        .unwrap();
        let run = || {
            let wb = Workbench::new(&fam).unwrap();
            VerificationReport::merge(vec![wb.boundedness(), wb.compactness(), wb.schatten(2.0).unwrap()]).unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.determinism_hash, b.determinism_hash);
        let back = VerificationReport::from_json(&a.to_json().unwrap()).unwrap();
        assert!(back.rederive_verdicts().is_empty());
        assert_eq!(back.verdicts, a.verdicts);
        assert_eq!(back.determinism_hash, a.determinism_hash);
    }

    #[test]
    fn lemma_suite_on_the_standard_model() {
        let report =
            super::super::lemma_suite(&ModelConfig::standard(1.0), 40, &super::super::LemmaSettings::default())
                .unwrap();
        let rec = &report.instances[0];
        assert_eq!(rec.verdict, Verdict::Pass, "{:?}", rec);
        let Some(Findings::Lemmas(f)) = &rec.findings else {
            panic!()
        };
        for name in ["kernel_norm_spread", "norm_equivalence_spread"] {
            let k = f.constants.iter().find(|k| k.name == name).unwrap();
            assert!(k.values.iter().all(|v| v.0 <= 1.1), "{k:?}");
        }
        let single = super::super::lemma_suite(
            &ModelConfig::standard(1.0),
            40,
            &super::super::LemmaSettings::single_point(c(0.5, 0.5)),
        )
        .unwrap();
        assert_eq!(single.instances[0].verdict, Verdict::Pass);
    }
}
