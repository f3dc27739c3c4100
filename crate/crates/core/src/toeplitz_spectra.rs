//! Truncated Toeplitz matrices M[j][k] = ∫ e_k conj(e_j) e^{−α|ξ|²} dμ in
//! a model's orthonormal basis, and the spectral functionals read off them.

use std::cell::Cell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{hermitian_eigen, HermitianEigen};
use crate::error::{Result, WfockError};
use crate::fock_model::FockModel;
use crate::measures::{average_function, MeasureContext};
use crate::quadrature::{composite_nodes, log_radial_integral, log_window, SCAN_LIMIT};

/// Eigenvalues below −PSD_TOLERANCE·‖M‖ abort the spectrum.
pub const PSD_TOLERANCE: f64 = 1e-10;
/// Growth factor per extent doubling that marks a sampled sup as divergent.
pub const DIVERGENCE_GROWTH: f64 = 1.5;

/// How a matrix was assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssemblyPath {
    Atomic,
    Zero,
    RadialDiagonal,
    General,
}

/// Hermitian truncation of T_μ (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzMatrix {
    pub dim: usize,
    pub entries: Vec<Complex64>,
    pub path: AssemblyPath,
    /// Set when the coarse μ̂ precheck grew geometrically along the extents.
    pub criterion_unbounded: bool,
}

/// Row-major entries as [re, im] pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixDump {
    pub dim: usize,
    pub path: AssemblyPath,
    pub criterion_unbounded: bool,
    pub entries: Vec<[f64; 2]>,
}

impl ToeplitzMatrix {
    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        self.entries[j * self.dim + k]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|j| self.get(j, j).re).sum()
    }

    /// Largest |M[j][k] − conj(M[k][j])|; zero by construction.
    pub fn hermitian_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for j in 0..self.dim {
            for k in 0..self.dim {
                d = d.max((self.get(j, k) - self.get(k, j).conj()).norm());
            }
        }
        d
    }

    /// Leading (n × n) block, the matrix of a lower-degree model with the
    /// same basis prefix.
    pub fn principal(&self, n: usize) -> ToeplitzMatrix {
        let n = n.min(self.dim);
        let mut entries = Vec::with_capacity(n * n);
        for j in 0..n {
            entries.extend_from_slice(&self.entries[j * self.dim..j * self.dim + n]);
        }
        ToeplitzMatrix {
            dim: n,
            entries,
            path: self.path,
            criterion_unbounded: self.criterion_unbounded,
        }
    }

    /// c^* M c = Σ_{j,k} conj(c_j) M[j][k] c_k.
    pub fn quadratic_form(&self, c: &[Complex64]) -> f64 {
        let n = self.dim.min(c.len());
        if matches!(self.path, AssemblyPath::RadialDiagonal | AssemblyPath::Zero) {
            return (0..n).map(|j| self.get(j, j).re * c[j].norm_sqr()).sum();
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..n {
            let row: Complex64 = (0..n).map(|k| self.get(j, k) * c[k]).sum();
            acc += c[j].conj() * row;
        }
        acc.re
    }

    pub fn dump(&self) -> MatrixDump {
        MatrixDump {
            dim: self.dim,
            path: self.path,
            criterion_unbounded: self.criterion_unbounded,
            entries: self.entries.iter().map(|v| [v.re, v.im]).collect(),
        }
    }
}

/// M[j][k] = ⟨e_k, e_j⟩_{L²_α(μ)}.
///
/// Atoms are summed exactly; a radial measure on a radial model gives a
/// diagonal matrix from one-dimensional log-space moments; anything else
/// goes through angular Fourier coefficients of the density on composite
/// Gauss radial nodes, checked against a refined layout.
pub fn assemble(m: &FockModel, ctx: &MeasureContext) -> Result<ToeplitzMatrix> {
    let n = m.dim();
    let scale = ctx.spec().scale;
    if let Some(atoms) = ctx.spec().atoms() {
        let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
        for atom in atoms {
            let e = m.damped_basis_values(atom.location);
            for j in 0..n {
                for k in 0..=j {
                    let v = e[k] * e[j].conj() * (atom.mass * scale);
                    entries[j * n + k] += v;
                    if j != k {
                        entries[k * n + j] += v.conj();
                    }
                }
            }
        }
        for j in 0..n {
            entries[j * n + j].im = 0.0;
        }
        return Ok(matrix(n, entries, AssemblyPath::Atomic));
    }
    if ctx.spec().is_zero() {
        return Ok(matrix(n, vec![Complex64::new(0.0, 0.0); n * n], AssemblyPath::Zero));
    }
    if ctx.is_radial() && m.is_radial() {
        return radial_diagonal(m, ctx);
    }
    general(m, ctx)
}

/// [`assemble`] plus the coarse precheck of μ̂_{w,r} on |z| ∈ {E/4, E/2, E}.
pub fn assemble_checked(m: &FockModel, ctx: &MeasureContext, r: f64, extent: f64) -> Result<ToeplitzMatrix> {
    let mut t = assemble(m, ctx)?;
    t.criterion_unbounded = precheck_unbounded(ctx, r, extent)?;
    Ok(t)
}

/// True when the sampled sup of μ̂_{w,r} grows by at least 1.5× at each of
/// the extents E/4, E/2, E (or is not finite).
pub fn precheck_unbounded(ctx: &MeasureContext, r: f64, extent: f64) -> Result<bool> {
    let mut sups = Vec::new();
    for radius in [extent / 4.0, extent / 2.0, extent] {
        let mut sup: f64 = 0.0;
        for k in 0..8 {
            let z = Complex64::from_polar(radius, 2.0 * PI * k as f64 / 8.0);
            sup = sup.max(average_function(ctx, r, z)?);
        }
        if !sup.is_finite() {
            return Ok(true);
        }
        sups.push(sup);
    }
    Ok(sups.windows(2).all(|p| p[0] > 0.0 && p[1] >= DIVERGENCE_GROWTH * p[0]))
}

fn matrix(dim: usize, entries: Vec<Complex64>, path: AssemblyPath) -> ToeplitzMatrix {
    ToeplitzMatrix {
        dim,
        entries,
        path,
        criterion_unbounded: false,
    }
}

fn radial_diagonal(m: &FockModel, ctx: &MeasureContext) -> Result<ToeplitzMatrix> {
    let n = m.dim();
    let alpha = m.alpha();
    let breakpoints = ctx.breakpoints();
    let plan = *ctx.plan();
    let diag = (0..n)
        .into_par_iter()
        .map(|k| {
            let what = format!("toeplitz diagonal entry {k}");
            let failure: Cell<Option<WfockError>> = Cell::new(None);
            let power = 2.0 * k as f64 + 1.0;
            let phi = |rho: f64| {
                if rho <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                match ctx.ln_density_value(Complex64::new(rho, 0.0)) {
                    Ok(v) => power * rho.ln() - alpha * rho * rho + v,
                    Err(e) => {
                        failure.set(Some(e));
                        f64::NEG_INFINITY
                    }
                }
            };
            let li = log_radial_integral(&what, phi, &breakpoints, &plan);
            if let Some(e) = failure.take() {
                return Err(e);
            }
            let li = li?;
            if li.tail_rel > plan.rel_tol {
                return Err(WfockError::TailNotCertified {
                    what,
                    tail: li.tail_rel,
                    cutoff: li.window.1,
                });
            }
            if !li.ln_value.is_finite() {
                return Ok(0.0);
            }
            Ok((li.ln_value + (2.0 * PI).ln() + 2.0 * m.log_scales()[k]).exp())
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
    for (k, v) in diag.into_iter().enumerate() {
        entries[k * n + k] = Complex64::new(v, 0.0);
    }
    Ok(matrix(n, entries, AssemblyPath::RadialDiagonal))
}

fn density_samples(ctx: &MeasureContext, radii: &[f64], angles: usize) -> Result<Vec<Vec<f64>>> {
    let h = 2.0 * PI / angles as f64;
    radii
        .par_iter()
        .map(|&r| {
            (0..angles)
                .map(|l| ctx.density_value(Complex64::from_polar(r, h * l as f64)))
                .collect::<Result<Vec<f64>>>()
        })
        .collect()
}

fn fourier_from_samples(samples: &[Vec<f64>], max_mode: usize) -> Vec<Complex64> {
    let n = max_mode + 1;
    let mut out = vec![Complex64::new(0.0, 0.0); samples.len() * n];
    for (i, row) in samples.iter().enumerate() {
        let angles = row.len();
        let h = 2.0 * PI / angles as f64;
        for m in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for (l, v) in row.iter().enumerate() {
                acc += Complex64::from_polar(*v, (m * l % angles) as f64 * h);
            }
            out[i * n + m] = acc * h;
        }
    }
    out
}

fn general(m: &FockModel, ctx: &MeasureContext) -> Result<ToeplitzMatrix> {
    let n = m.dim();
    let degree = m.degree();
    let alpha = m.alpha();
    let plan = *ctx.plan();
    let mean = |rho: f64| -> f64 {
        (0..32)
            .map(|l| {
                ctx.density_value(Complex64::from_polar(rho, 2.0 * PI * l as f64 / 32.0))
                    .unwrap_or(0.0)
            })
            .sum::<f64>()
            / 32.0
    };
    let mut hi: f64 = 0.0;
    for power in [1.0, 2.0 * degree as f64 + 1.0] {
        let phi = |rho: f64| {
            let v = mean(rho);
            if rho <= 0.0 || v <= 0.0 {
                f64::NEG_INFINITY
            } else {
                power * rho.ln() - alpha * rho * rho + v.ln()
            }
        };
        if let Some((_, _, h)) = log_window(&phi, plan.scan_step) {
            if h >= SCAN_LIMIT {
                return Err(WfockError::TailNotCertified {
                    what: "toeplitz assembly".into(),
                    tail: 1.0,
                    cutoff: SCAN_LIMIT,
                });
            }
            hi = hi.max(h);
        }
    }
    if hi == 0.0 {
        return Ok(matrix(n, vec![Complex64::new(0.0, 0.0); n * n], AssemblyPath::General));
    }
    let probe: Vec<f64> = (1..=8).map(|k| hi * k as f64 / 8.0).collect();
    let mut angles = plan.angular_min.max((2 * degree + 4).next_power_of_two());
    let mut previous = fourier_from_samples(&density_samples(ctx, &probe, angles)?, degree);
    loop {
        if angles * 2 > plan.angular_max {
            return Err(WfockError::quadrature("toeplitz angular coefficients", 0.0, 0.0));
        }
        let next = fourier_from_samples(&density_samples(ctx, &probe, angles * 2)?, degree);
        angles *= 2;
        let scale = next.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let diff = next
            .iter()
            .zip(&previous)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        if diff <= plan.rel_tol * scale {
            break;
        }
        previous = next;
    }
    let breakpoints = if ctx.pole().norm() == 0.0 {
        ctx.breakpoints()
    } else {
        Vec::new()
    };
    let coarse = monomial_matrix(m, ctx, hi, plan.panel / 4.0, angles, &breakpoints)?;
    let fine = monomial_matrix(m, ctx, hi, plan.panel / 8.0, angles * 2, &breakpoints)?;
    let size = fine.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let diff = fine
        .iter()
        .zip(&coarse)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    if diff > 1e-8 * size.max(f64::MIN_POSITIVE) {
        return Err(WfockError::quadrature("toeplitz assembly", size + diff, size));
    }
    let h = fine;
    let entries = match m.is_radial() {
        true => h,
        false => {
            let l = |j: usize, k: usize| -> Complex64 {
                let s = m.log_scales()[k];
                m.coefficient(j, k) * (-s).exp()
            };
            let mut out = vec![Complex64::new(0.0, 0.0); n * n];
            for j in 0..n {
                for k in 0..=j {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for a in 0..=j {
                        let la = l(j, a).conj();
                        for b in 0..=k {
                            acc += la * h[a * n + b] * l(k, b);
                        }
                    }
                    out[j * n + k] = acc;
                    out[k * n + j] = acc.conj();
                }
                out[j * n + j].im = 0.0;
            }
            out
        }
    };
    Ok(matrix(n, entries, AssemblyPath::General))
}

/// H[j][k] = ∫ p_k conj(p_j) e^{−α|ξ|²} dμ for the scaled monomials p_k.
fn monomial_matrix(
    m: &FockModel,
    ctx: &MeasureContext,
    hi: f64,
    panel: f64,
    angles: usize,
    breakpoints: &[f64],
) -> Result<Vec<Complex64>> {
    let n = m.dim();
    let alpha = m.alpha();
    let nodes = composite_nodes(0.0, hi, panel, breakpoints);
    let coeffs = fourier_from_samples(&density_samples(ctx, &nodes.points, angles)?, m.degree());
    let ln_r: Vec<f64> = nodes.points.iter().map(|r| r.ln()).collect();
    let base: Vec<f64> = nodes
        .points
        .iter()
        .zip(&nodes.weights)
        .map(|(r, w)| w.ln() + r.ln() - alpha * r * r)
        .collect();
    let scales = m.log_scales();
    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            (0..=j)
                .map(|k| {
                    let shift = scales[j] + scales[k];
                    let mode = j - k;
                    let mut acc = Complex64::new(0.0, 0.0);
                    for i in 0..nodes.len() {
                        let mag = (base[i] + (j + k) as f64 * ln_r[i] + shift).exp();
                        acc += coeffs[i * n + mode].conj() * mag;
                    }
                    acc
                })
                .collect()
        })
        .collect();
    let mut h = vec![Complex64::new(0.0, 0.0); n * n];
    for (j, row) in rows.into_iter().enumerate() {
        for (k, v) in row.into_iter().enumerate() {
            h[j * n + k] = v;
            h[k * n + j] = v.conj();
        }
        h[j * n + j].im = 0.0;
    }
    Ok(h)
}

/// Nonincreasing nonnegative eigenvalues s_1 ≥ s_2 ≥ … of a PSD truncation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub values: Vec<f64>,
    /// Most negative raw eigenvalue before clipping (0 when none).
    pub clipped: f64,
}

impl Spectrum {
    pub fn from_values(mut values: Vec<f64>) -> Self {
        values.sort_by(|a, b| b.total_cmp(a));
        let clipped = values.iter().copied().fold(0.0, f64::min);
        for v in values.iter_mut() {
            *v = v.max(0.0);
        }
        Spectrum { values, clipped }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// s_n with 1-based n (0 past the end).
    pub fn s(&self, n: usize) -> f64 {
        if n == 0 {
            return f64::NAN;
        }
        self.values.get(n - 1).copied().unwrap_or(0.0)
    }
}

/// Spectrum together with the eigenvectors of the matrix.
pub fn spectrum_with_vectors(t: &ToeplitzMatrix) -> Result<(Spectrum, HermitianEigen)> {
    let eig = hermitian_eigen(&t.entries, t.dim)?;
    let norm = eig.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let lowest = eig.values.last().copied().unwrap_or(0.0);
    let tolerance = PSD_TOLERANCE * norm;
    if lowest < -tolerance {
        return Err(WfockError::NotPsd {
            eigenvalue: lowest,
            tolerance,
        });
    }
    Ok((Spectrum::from_values(eig.values.clone()), eig))
}

pub fn spectrum(t: &ToeplitzMatrix) -> Result<Spectrum> {
    if t.path == AssemblyPath::RadialDiagonal || t.path == AssemblyPath::Zero {
        return Ok(Spectrum::from_values((0..t.dim).map(|j| t.get(j, j).re).collect()));
    }
    spectrum_with_vectors(t).map(|(s, _)| s)
}

/// s_1, the norm of the PSD truncation.
pub fn operator_norm(s: &Spectrum) -> f64 {
    s.values.first().copied().unwrap_or(0.0)
}

/// (Σ s_n^p)^{1/p}, flagged when p < 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchattenNorm {
    pub p: f64,
    pub value: f64,
    pub outside_hypothesis: bool,
}

pub fn schatten_norm(s: &Spectrum, p: f64) -> Result<SchattenNorm> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(WfockError::invalid("Schatten exponent must be positive"));
    }
    let top = operator_norm(s);
    let value = if top == 0.0 {
        0.0
    } else {
        top * s.values.iter().map(|v| (v / top).powf(p)).sum::<f64>().powf(1.0 / p)
    };
    Ok(SchattenNorm {
        p,
        value,
        outside_hypothesis: p < 1.0,
    })
}

/// Shape of a convex gauge h with h(0) = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GaugeKind {
    /// h(t) = t^p
    Power { p: f64 },
    /// h_η for η(t) = (1 + γ + log t)^{−γ}: exp(1 + γ − t^{−1/γ}) up to
    /// t = (1+γ)^{−γ}, then the tangent line (1/γ)(1+γ)^{1+γ} t − 1/γ.
    LogDecay { gamma: f64 },
    /// Piecewise linear through (0, 0) and the listed (t, h) knots, extended
    /// by the last slope.
    Piecewise { knots: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "GaugeTable")]
pub struct SchattenGauge {
    #[serde(flatten)]
    pub kind: GaugeKind,
    pub scale: f64,
}

/// The serialized form of a gauge, with unknown keys rejected.
#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum GaugeTable {
    Power {
        p: f64,
        #[serde(default = "unit")]
        scale: f64,
    },
    LogDecay {
        gamma: f64,
        #[serde(default = "unit")]
        scale: f64,
    },
    Piecewise {
        knots: Vec<[f64; 2]>,
        #[serde(default = "unit")]
        scale: f64,
    },
}

impl From<GaugeTable> for SchattenGauge {
    fn from(t: GaugeTable) -> Self {
        let (kind, scale) = match t {
            GaugeTable::Power { p, scale } => (GaugeKind::Power { p }, scale),
            GaugeTable::LogDecay { gamma, scale } => (GaugeKind::LogDecay { gamma }, scale),
            GaugeTable::Piecewise { knots, scale } => (GaugeKind::Piecewise { knots }, scale),
        };
        SchattenGauge { kind, scale }
    }
}

fn unit() -> f64 {
    1.0
}

/// Convexity is sampled on [0, 10] with this step.
const GAUGE_SAMPLE_STEP: f64 = 1e-3;

impl SchattenGauge {
    /// Validates the parameters and verifies convexity by sampled second
    /// differences on [0, 10].
    pub fn new(kind: GaugeKind, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(WfockError::invalid("gauge scale must be positive"));
        }
        match &kind {
            GaugeKind::Power { p } if !(*p > 0.0 && p.is_finite()) => {
                return Err(WfockError::invalid("power gauge exponent must be positive"))
            }
            GaugeKind::LogDecay { gamma } if !(*gamma > 0.0 && gamma.is_finite()) => {
                return Err(WfockError::invalid("log-decay gauge needs γ > 0"))
            }
            GaugeKind::Piecewise { knots } => {
                if knots.is_empty() {
                    return Err(WfockError::invalid("piecewise gauge needs at least one knot"));
                }
                let mut prev = [0.0, 0.0];
                for k in knots {
                    if !(k[0] > prev[0]) || !(k[1] > prev[1]) {
                        return Err(WfockError::invalid(
                            "piecewise gauge knots must increase strictly in t and h",
                        ));
                    }
                    prev = *k;
                }
            }
            _ => {}
        }
        let gauge = SchattenGauge { kind, scale };
        gauge.verify_convex()?;
        Ok(gauge)
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.kind.clone(), self.scale).map(|_| ())
    }

    fn verify_convex(&self) -> Result<()> {
        let count = (10.0 / GAUGE_SAMPLE_STEP).round() as usize;
        let h = |k: usize| self.h(k as f64 * GAUGE_SAMPLE_STEP);
        for k in 1..count {
            let second = h(k + 1) - 2.0 * h(k) + h(k - 1);
            if second < -1e-9 {
                return Err(WfockError::NonConvexGauge {
                    t: k as f64 * GAUGE_SAMPLE_STEP,
                    second_difference: second,
                });
            }
        }
        Ok(())
    }

    /// h(t) for t ≥ 0 (without the scale).
    pub fn h(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            GaugeKind::Power { p } => t.powf(*p),
            GaugeKind::LogDecay { gamma } => {
                let g = *gamma;
                let knee = (1.0 + g).powf(-g);
                if t <= knee {
                    (1.0 + g - t.powf(-1.0 / g)).exp()
                } else {
                    (1.0 + g).powf(1.0 + g) * t / g - 1.0 / g
                }
            }
            GaugeKind::Piecewise { knots } => {
                let mut prev = [0.0, 0.0];
                for k in knots {
                    if t <= k[0] {
                        return prev[1] + (k[1] - prev[1]) * (t - prev[0]) / (k[0] - prev[0]);
                    }
                    prev = *k;
                }
                let n = knots.len();
                let before = if n >= 2 { knots[n - 2] } else { [0.0, 0.0] };
                let slope = (prev[1] - before[1]) / (prev[0] - before[0]);
                prev[1] + slope * (t - prev[0])
            }
        }
    }

    /// h(C·t).
    pub fn apply(&self, t: f64) -> f64 {
        self.h(self.scale * t)
    }
}

/// η(t) = (1 + γ + log t)^{−γ} for t ≥ 1.
pub fn log_decay_eta(gamma: f64, t: f64) -> f64 {
    (1.0 + gamma + t.ln()).powf(-gamma)
}

/// Σ_n h(C·s_n).
pub fn schatten_h_sum(s: &Spectrum, g: &SchattenGauge) -> f64 {
    s.values.iter().map(|&v| g.apply(v)).sum()
}

/// Ring-wise sups of μ̂_{w,r}: the computable side of the essential norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssentialProxy {
    pub rings: Vec<f64>,
    pub ring_sups: Vec<f64>,
    /// Last ring sup.
    pub limsup: f64,
    /// Ring sups never increase over the last half of the rings.
    pub decreasing: bool,
}

/// Circles sampled inside each ring and angles per circle.
const RING_RADII: usize = 8;
const RING_ANGLES: usize = 16;

/// Sup of `f` over each ring [rings[k], rings[k+1]), sampled on equally
/// spaced circles (one point per circle when `radial`) and at the `extra`
/// points that fall in the ring.
pub fn ring_sups<F>(rings: &[f64], radial: bool, extra: &[Complex64], f: F) -> Result<Vec<f64>>
where
    F: Fn(Complex64) -> Result<f64> + Sync,
{
    if rings.windows(2).any(|p| !(p[1] > p[0])) || rings.first().is_none_or(|r| *r < 0.0) {
        return Err(WfockError::invalid("ring radii must be nonnegative and increasing"));
    }
    let angles = if radial { 1 } else { RING_ANGLES };
    rings
        .windows(2)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|p| {
            let mut sup: f64 = 0.0;
            for i in 0..RING_RADII {
                let rho = p[0] + (p[1] - p[0]) * i as f64 / RING_RADII as f64;
                for k in 0..angles {
                    sup = sup.max(f(Complex64::from_polar(rho, 2.0 * PI * k as f64 / angles as f64))?);
                }
            }
            for &z in extra {
                if z.norm() >= p[0] && z.norm() < p[1] {
                    sup = sup.max(f(z)?);
                }
            }
            Ok(sup)
        })
        .collect()
}

/// Ring-wise sups of μ̂_{w,r}; atom sites are always among the samples.
pub fn essential_norm_proxy(ctx: &MeasureContext, r: f64, rings: &[f64]) -> Result<EssentialProxy> {
    if rings.len() < 3 {
        return Err(WfockError::invalid(
            "essential-norm proxy needs at least three ring radii",
        ));
    }
    let extra: Vec<Complex64> = ctx
        .spec()
        .atoms()
        .map(|a| a.iter().map(|x| x.location).collect())
        .unwrap_or_default();
    let ring_sups = ring_sups(rings, ctx.is_radial(), &extra, |z| average_function(ctx, r, z))?;
    let half = ring_sups.len() / 2;
    let decreasing = ring_sups[half..].windows(2).all(|p| p[1] <= p[0] * (1.0 + 1e-12));
    Ok(EssentialProxy {
        rings: rings.to_vec(),
        limsup: *ring_sups.last().unwrap_or(&0.0),
        ring_sups,
        decreasing,
    })
}

/// Target decay profile η(n) for singular values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecayProfile {
    /// (1 + γ + log n)^{−γ}
    LogDecay { gamma: f64 },
    /// n^{−p}
    Power { p: f64 },
}

impl DecayProfile {
    pub fn eta(&self, n: f64) -> f64 {
        match *self {
            DecayProfile::LogDecay { gamma } => log_decay_eta(gamma, n),
            DecayProfile::Power { p } => n.powf(-p),
        }
    }
}

/// K = max_{n ≥ n_min} s_n/η(n) along a ladder of spectra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub holds: bool,
    pub k_values: Vec<f64>,
    /// Index n attaining K at each rung.
    pub argmax: Vec<usize>,
}

/// Allowed relative change of K between the last two rungs.
pub const DECAY_STABILITY: f64 = 0.2;

/// The relation s_n ≲ η(n) is accepted when K is finite, changes by at most
/// 20% between the last two rungs, and its maximizer does not sit in the
/// last tenth of the indices while K is still growing.
pub fn decay_fit(ladder: &[Spectrum], eta: DecayProfile, n_min: usize) -> Result<DecayFit> {
    if n_min < 2 {
        return Err(WfockError::invalid("decay fit needs n_min ≥ 2"));
    }
    if ladder.len() < 2 {
        return Err(WfockError::invalid("decay fit needs at least two spectra"));
    }
    let mut k_values = Vec::with_capacity(ladder.len());
    let mut argmax = Vec::with_capacity(ladder.len());
    for s in ladder {
        let mut best = 0.0;
        let mut at = n_min;
        for n in n_min..=s.len() {
            let q = s.s(n) / eta.eta(n as f64);
            if q > best {
                best = q;
                at = n;
            }
        }
        k_values.push(best);
        argmax.push(at);
    }
    let last = k_values[k_values.len() - 1];
    let prev = k_values[k_values.len() - 2];
    let len = ladder[ladder.len() - 1].len();
    let stable = if last == 0.0 && prev == 0.0 {
        true
    } else {
        prev > 0.0 && ((last / prev) - 1.0).abs() <= DECAY_STABILITY
    };
    let edge = argmax[argmax.len() - 1] as f64 > 0.9 * len as f64 && last > prev * (1.0 + 1e-9);
    Ok(DecayFit {
        holds: last.is_finite() && stable && !edge,
        k_values,
        argmax,
    })
}

/// μ̃(z) as the quadratic form of M at the coefficients of b_z.
pub fn berezin_form(t: &ToeplitzMatrix, m: &FockModel, z: Complex64) -> Result<f64> {
    m.check_point(z)?;
    Ok(t.quadratic_form(&m.normalized_kernel_coefficients(z)))
}
