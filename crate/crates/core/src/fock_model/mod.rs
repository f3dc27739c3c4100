//! Truncated models of F²_{α,w}: an orthonormal basis e_0..e_N of the
//! polynomials of degree ≤ N, the truncated reproducing kernel and the
//! kernel estimates checked against it.
//!
//! Basis functions are stored in scaled form
//! e_j(z) = Σ_k L'[j][k] · z^k · exp(s_k), with s_k = −½ ln ⟨z^k, z^k⟩, so
//! that neither the moments nor the coefficients ever leave floating-point
//! range. For radial weights L' is the identity.

mod checks;

pub use checks::{
    kernel_norm_check, local_lower_bound_scan, norm_equivalence_check, pointwise_bound_check, pointwise_upper_check,
    weak_convergence_profile, KernelSample, LowerBoundScan, NormRatio, NormRatioTable, RatioTable,
};

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WfockError};
use crate::quadrature::{self, composite_nodes, log_radial_integral, LogIntegral, QuadraturePlan, SCAN_LIMIT};
use crate::weights::Weight;

/// Threshold of the heuristic truncation-tail test that defines R_eval.
pub const EVAL_TAIL_TOLERANCE: f64 = 1e-12;
/// Diagonal regularization of the Gram factorization.
pub const GRAM_EPSILON: f64 = 1e-12;
/// Largest allowed deviation of the re-checked Gram matrix from the identity.
pub const GRAM_TOLERANCE: f64 = 1e-8;

const EVAL_SCAN_STEP: f64 = 0.01;

/// ln m_n for n = 0..=count, with m_n = 2π ∫_0^∞ r^{2n+1} e^{−αr²} w(r) dr.
///
/// Constant weights use the closed form level·π·n!/α^{n+1}.
pub fn radial_log_moments(w: &Weight, alpha: f64, count: usize, plan: &QuadraturePlan) -> Result<Vec<LogIntegral>> {
    if !w.is_radial() {
        return Err(WfockError::Unsupported(
            "radial moments need a radial weight; use gram_orthonormalize for this weight".into(),
        ));
    }
    if !(alpha > 0.0) {
        return Err(WfockError::invalid("alpha must be positive"));
    }
    if count < 1 {
        return Err(WfockError::invalid("moment count must be at least 1"));
    }
    if let Weight::Constant { level } = *w {
        let mut ln_fact = 0.0;
        return Ok((0..=count)
            .map(|n| {
                if n > 0 {
                    ln_fact += (n as f64).ln();
                }
                LogIntegral {
                    ln_value: (level * PI).ln() + ln_fact - (n as f64 + 1.0) * alpha.ln(),
                    tail_rel: 0.0,
                    window: (0.0, f64::INFINITY),
                }
            })
            .collect());
    }
    let breakpoints = w.breakpoints();
    let out = (0..=count)
        .map(|n| {
            let k = 2.0 * n as f64 + 1.0;
            let what = format!("moment m_{n}");
            let phi = |r: f64| {
                let v = w.radial_value(r);
                if r <= 0.0 || v <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    k * r.ln() - alpha * r * r + v.ln()
                }
            };
            let mut li = log_radial_integral(&what, phi, &breakpoints, plan)?;
            if !li.ln_value.is_finite() {
                return Err(WfockError::Contract(format!("{what} vanishes")));
            }
            if li.tail_rel > plan.rel_tol {
                return Err(WfockError::TailNotCertified {
                    what,
                    tail: li.tail_rel,
                    cutoff: li.window.1,
                });
            }
            li.ln_value += (2.0 * PI).ln();
            Ok(li)
        })
        .collect::<Result<Vec<_>>>()?;
    check_log_convex(out.iter().map(|l| l.ln_value))?;
    Ok(out)
}

/// m_0..=m_count; entries overflow to +∞ once n! outgrows the f64 range.
pub fn radial_moments(w: &Weight, alpha: f64, count: usize, plan: &QuadraturePlan) -> Result<Vec<f64>> {
    Ok(radial_log_moments(w, alpha, count, plan)?
        .iter()
        .map(LogIntegral::value)
        .collect())
}

fn check_log_convex(ln_m: impl Iterator<Item = f64>) -> Result<()> {
    let v: Vec<f64> = ln_m.collect();
    for n in 1..v.len().saturating_sub(1) {
        let gap = v[n - 1] + v[n + 1] - 2.0 * v[n];
        let slack = 1e-9 * (1.0 + v[n].abs());
        if gap < -slack {
            return Err(WfockError::Contract(format!(
                "moments fail log-convexity at n = {n} (gap {gap:e})"
            )));
        }
    }
    Ok(())
}

/// Value of the reproducing kernel and its normalization at a pair (a, z).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelEvaluation {
    pub value: Complex64,
    pub norm_a: f64,
    pub normalized: Complex64,
}

/// Degree-N truncation of F²_{α,w}.
#[derive(Debug, Clone)]
pub struct FockModel {
    alpha: f64,
    weight: Weight,
    degree: usize,
    plan: QuadraturePlan,
    log_scales: Vec<f64>,
    coefficients: Option<Vec<Complex64>>,
    log_moments: Option<Vec<f64>>,
    eval_radius: f64,
    gram_residual: f64,
}

/// Serializable snapshot of a model for reproducibility.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelDump {
    pub alpha: f64,
    pub weight: Weight,
    pub degree: usize,
    pub log_moments: Option<Vec<f64>>,
    pub log_scales: Vec<f64>,
    /// Row-major lower-triangular L' as [re, im]; absent for radial models.
    pub coefficients: Option<Vec<[f64; 2]>>,
    pub eval_radius: f64,
    pub gram_residual: f64,
}

impl FockModel {
    /// Radial weights go through the moment path, all others through the Gram path.
    pub fn build(weight: Weight, alpha: f64, degree: usize, plan: QuadraturePlan) -> Result<Self> {
        if weight.is_radial() {
            Self::radial(weight, alpha, degree, plan)
        } else {
            gram_orthonormalize(weight, alpha, degree, plan)
        }
    }

    /// Diagonal model e_n = z^n / √m_n.
    pub fn radial(weight: Weight, alpha: f64, degree: usize, plan: QuadraturePlan) -> Result<Self> {
        validate(alpha, degree, &plan)?;
        let ln_m: Vec<f64> = radial_log_moments(&weight, alpha, degree, &plan)?
            .iter()
            .map(|l| l.ln_value)
            .collect();
        let gram_residual = if weight.is_constant() {
            0.0
        } else {
            let refined = radial_log_moments(&weight, alpha, degree, &plan.refined())?;
            ln_m.iter()
                .zip(&refined)
                .map(|(a, b)| (b.ln_value - a).exp_m1().abs())
                .fold(0.0, f64::max)
        };
        if gram_residual > GRAM_TOLERANCE {
            return Err(WfockError::ModelResolution(format!(
                "moments move by {gram_residual:e} under quadrature refinement"
            )));
        }
        let mut model = FockModel {
            alpha,
            weight,
            degree,
            plan,
            log_scales: ln_m.iter().map(|l| -0.5 * l).collect(),
            coefficients: None,
            log_moments: Some(ln_m),
            eval_radius: 0.0,
            gram_residual,
        };
        model.eval_radius = model.scan_eval_radius();
        Ok(model)
    }

    /// Replaces the certified evaluation radius.
    pub fn with_eval_radius(mut self, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(WfockError::invalid("evaluation radius override must be positive"));
        }
        self.eval_radius = radius;
        Ok(self)
    }

    /// Same weight, α and plan at another degree.
    pub fn with_degree(&self, degree: usize) -> Result<Self> {
        Self::build(self.weight.clone(), self.alpha, degree, self.plan)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn weight(&self) -> &Weight {
        &self.weight
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.degree + 1
    }

    pub fn plan(&self) -> &QuadraturePlan {
        &self.plan
    }

    pub fn is_radial(&self) -> bool {
        self.coefficients.is_none()
    }

    pub fn eval_radius(&self) -> f64 {
        self.eval_radius
    }

    pub fn gram_residual(&self) -> f64 {
        self.gram_residual
    }

    /// ln m_n for radial models.
    pub fn log_moments(&self) -> Option<&[f64]> {
        self.log_moments.as_deref()
    }

    pub fn log_scales(&self) -> &[f64] {
        &self.log_scales
    }

    /// L[j][k], the coefficient of z^k in e_j (may overflow for large k).
    pub fn coefficient(&self, j: usize, k: usize) -> Complex64 {
        if k > j {
            return Complex64::new(0.0, 0.0);
        }
        let scale = self.log_scales[k].exp();
        match &self.coefficients {
            None if j == k => Complex64::new(scale, 0.0),
            None => Complex64::new(0.0, 0.0),
            Some(c) => c[j * self.dim() + k] * scale,
        }
    }

    /// Scaled monomials z^k·exp(s_k + shift), k = 0..=N.
    pub fn scaled_monomials(&self, z: Complex64, shift: f64) -> Vec<Complex64> {
        let rho = z.norm();
        let theta = z.arg();
        let ln_rho = rho.ln();
        (0..self.dim())
            .map(|k| {
                if rho == 0.0 {
                    return if k == 0 {
                        Complex64::new((self.log_scales[0] + shift).exp(), 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    };
                }
                let ln_mag = k as f64 * ln_rho + self.log_scales[k] + shift;
                Complex64::from_polar(ln_mag.exp(), k as f64 * theta)
            })
            .collect()
    }

    fn combine(&self, p: Vec<Complex64>) -> Vec<Complex64> {
        match &self.coefficients {
            None => p,
            Some(c) => {
                let n = self.dim();
                (0..n).map(|j| (0..=j).map(|k| c[j * n + k] * p[k]).sum()).collect()
            }
        }
    }

    /// e_0(z), …, e_N(z).
    pub fn basis_values(&self, z: Complex64) -> Vec<Complex64> {
        self.combine(self.scaled_monomials(z, 0.0))
    }

    /// e_j(z)·e^{−α|z|²/2}, bounded for every z.
    pub fn damped_basis_values(&self, z: Complex64) -> Vec<Complex64> {
        self.combine(self.scaled_monomials(z, -0.5 * self.alpha * z.norm_sqr()))
    }

    /// Monomial coefficients β with Σ_j c_j e_j = Σ_k β_k z^k e^{s_k}.
    pub fn monomial_coefficients(&self, c: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        match &self.coefficients {
            None => {
                let mut b = c.to_vec();
                b.resize(n, Complex64::new(0.0, 0.0));
                b
            }
            Some(l) => (0..n)
                .map(|k| (k..n.min(c.len())).map(|j| c[j] * l[j * n + k]).sum())
                .collect(),
        }
    }

    /// Σ_j c_j e_j(z)·e^{−α|z|²/2}.
    pub fn damped_value(&self, beta: &[Complex64], z: Complex64) -> Complex64 {
        self.scaled_monomials(z, -0.5 * self.alpha * z.norm_sqr())
            .iter()
            .zip(beta)
            .map(|(p, b)| p * b)
            .sum()
    }

    /// Heuristic truncation tail |e_N(z)|²·max(1, |z|²)·e^{−α|z|²}.
    pub fn tail_estimate(&self, z: Complex64) -> f64 {
        let e = self.damped_basis_values(z);
        e[self.degree].norm_sqr() * z.norm_sqr().max(1.0)
    }

    fn ring_tail(&self, radius: f64) -> f64 {
        if self.is_radial() {
            let ln = 2.0 * self.degree as f64 * radius.ln() + 2.0 * self.log_scales[self.degree]
                - self.alpha * radius * radius
                + (radius * radius).max(1.0).ln();
            return ln.exp();
        }
        (0..16)
            .map(|k| self.tail_estimate(Complex64::from_polar(radius, 2.0 * PI * k as f64 / 16.0)))
            .fold(0.0, f64::max)
    }

    fn scan_eval_radius(&self) -> f64 {
        let mut k = 1usize;
        loop {
            let r = k as f64 * EVAL_SCAN_STEP;
            if r > SCAN_LIMIT {
                return SCAN_LIMIT;
            }
            if self.ring_tail(r) > EVAL_TAIL_TOLERANCE {
                return (k - 1) as f64 * EVAL_SCAN_STEP;
            }
            k += 1;
        }
    }

    pub fn within_eval_radius(&self, z: Complex64) -> bool {
        z.norm() <= self.eval_radius * (1.0 + 1e-12)
    }

    /// Errors with the estimated tail when z is outside the trust region.
    pub fn check_point(&self, z: Complex64) -> Result<()> {
        if self.within_eval_radius(z) {
            Ok(())
        } else {
            Err(WfockError::TruncationUnsafe {
                point: z,
                radius: self.eval_radius,
                tail: self.tail_estimate(z),
            })
        }
    }

    /// B_a(a) = Σ_j |e_j(a)|² (no radius check).
    pub fn kernel_diagonal(&self, a: Complex64) -> f64 {
        self.basis_values(a).iter().map(|e| e.norm_sqr()).sum()
    }

    /// B_a(a)·e^{−α|a|²}, computed without overflow.
    pub fn damped_kernel_diagonal(&self, a: Complex64) -> f64 {
        self.damped_basis_values(a).iter().map(|e| e.norm_sqr()).sum()
    }

    /// B_a(z) = Σ_j e_j(z)·conj(e_j(a)) with ‖B_a‖ and b_a(z).
    pub fn kernel_eval(&self, a: Complex64, z: Complex64) -> Result<KernelEvaluation> {
        self.check_point(a)?;
        self.check_point(z)?;
        Ok(self.kernel_eval_unchecked(a, z))
    }

    pub fn kernel_eval_unchecked(&self, a: Complex64, z: Complex64) -> KernelEvaluation {
        let ea = self.basis_values(a);
        let ez = self.basis_values(z);
        let value: Complex64 = ez.iter().zip(&ea).map(|(x, y)| x * y.conj()).sum();
        let norm_a = ea.iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt();
        KernelEvaluation {
            value,
            norm_a,
            normalized: value / norm_a,
        }
    }

    /// |B_a(z)|·e^{−(α/2)(|a|²+|z|²)}, computed without overflow.
    pub fn damped_kernel_modulus(&self, a: Complex64, z: Complex64) -> f64 {
        let ea = self.damped_basis_values(a);
        let ez = self.damped_basis_values(z);
        ez.iter().zip(&ea).map(|(x, y)| x * y.conj()).sum::<Complex64>().norm()
    }

    /// Coefficients of b_z = B_z/‖B_z‖ in the orthonormal basis.
    pub fn normalized_kernel_coefficients(&self, z: Complex64) -> Vec<Complex64> {
        let e = self.damped_basis_values(z);
        let norm = e.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        e.iter().map(|v| v.conj() / norm).collect()
    }

    pub fn dump(&self) -> ModelDump {
        ModelDump {
            alpha: self.alpha,
            weight: self.weight.clone(),
            degree: self.degree,
            log_moments: self.log_moments.clone(),
            log_scales: self.log_scales.clone(),
            coefficients: self
                .coefficients
                .as_ref()
                .map(|c| c.iter().map(|v| [v.re, v.im]).collect()),
            eval_radius: self.eval_radius,
            gram_residual: self.gram_residual,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&self.dump()).map_err(|e| WfockError::Contract(e.to_string()))
    }
}

fn validate(alpha: f64, degree: usize, plan: &QuadraturePlan) -> Result<()> {
    if !(alpha > 0.0) {
        return Err(WfockError::invalid("alpha must be positive"));
    }
    if degree < 1 {
        return Err(WfockError::invalid("model degree must be at least 1"));
    }
    plan.validate()
}

/// Orthonormalizes 1, z, …, z^N under ⟨f, g⟩ = ∫ f ḡ e^{−α|z|²} w dA.
///
/// The Gram matrix is assembled from angular Fourier coefficients of w on
/// composite Gauss radial nodes, normalized to unit diagonal and factored as
/// S = C C^*; the basis coefficients are conj(C^{−1}).
pub fn gram_orthonormalize(weight: Weight, alpha: f64, degree: usize, plan: QuadraturePlan) -> Result<FockModel> {
    validate(alpha, degree, &plan)?;
    let n = degree + 1;
    let layout = GramLayout::new(&weight, alpha, degree, &plan)?;
    let (log_diag, s) = layout.assemble(&weight, alpha, degree, &plan, false)?;
    let chol = cholesky(&s, n)?;
    let inv = lower_inverse(&chol, n);
    let coeffs: Vec<Complex64> = inv.iter().map(|v| v.conj()).collect();

    let (log_diag_fine, s_fine) = layout.assemble(&weight, alpha, degree, &plan, true)?;
    let shift: Vec<f64> = log_diag_fine
        .iter()
        .zip(&log_diag)
        .map(|(f, c)| 0.5 * (f - c))
        .collect();
    let mut residual: f64 = 0.0;
    for j in 0..n {
        for k in 0..=j {
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..=j {
                for b in 0..=k {
                    let g = s_fine[a * n + b] * (shift[a] + shift[b]).exp();
                    acc += coeffs[j * n + a].conj() * g * coeffs[k * n + b];
                }
            }
            let target = if j == k { 1.0 } else { 0.0 };
            residual = residual.max((acc - target).norm());
        }
    }
    if residual > GRAM_TOLERANCE {
        return Err(WfockError::ModelResolution(format!(
            "re-checked Gram matrix deviates from the identity by {residual:e}"
        )));
    }
    let mut model = FockModel {
        alpha,
        weight,
        degree,
        plan,
        log_scales: log_diag.iter().map(|l| -0.5 * l).collect(),
        coefficients: Some(coeffs),
        log_moments: None,
        eval_radius: 0.0,
        gram_residual: residual,
    };
    model.eval_radius = model.scan_eval_radius();
    Ok(model)
}

struct GramLayout {
    hi: f64,
    angles: usize,
}

impl GramLayout {
    fn new(weight: &Weight, alpha: f64, degree: usize, plan: &QuadraturePlan) -> Result<Self> {
        let mean = |r: f64| {
            let m = 64;
            (0..m)
                .map(|k| weight.value(Complex64::from_polar(r, 2.0 * PI * k as f64 / m as f64)))
                .sum::<f64>()
                / m as f64
        };
        let top = 2.0 * degree as f64 + 1.0;
        let phi = |r: f64| {
            let v = mean(r);
            if r <= 0.0 || v <= 0.0 {
                f64::NEG_INFINITY
            } else {
                top * r.ln() - alpha * r * r + v.ln()
            }
        };
        let Some((_, _, hi)) = quadrature::log_window(&phi, plan.scan_step) else {
            return Err(WfockError::Contract("weight vanishes on every scanned circle".into()));
        };
        if hi >= SCAN_LIMIT {
            return Err(WfockError::TailNotCertified {
                what: "gram matrix".into(),
                tail: 1.0,
                cutoff: SCAN_LIMIT,
            });
        }
        let mut angles = plan.angular_min.max((2 * degree + 4).next_power_of_two());
        let probe: Vec<f64> = (1..=8).map(|k| hi * k as f64 / 8.0).collect();
        let mut previous = quadrature::angular_fourier(|z| weight.value(z), &probe, degree, angles);
        loop {
            if angles * 2 > plan.angular_max {
                return Err(WfockError::quadrature("gram angular coefficients", 0.0, 0.0));
            }
            let next = quadrature::angular_fourier(|z| weight.value(z), &probe, degree, angles * 2);
            let scale = next.iter().map(|c| c.norm()).fold(0.0, f64::max);
            let diff = next
                .iter()
                .zip(&previous)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            angles *= 2;
            if diff <= plan.rel_tol * scale {
                break;
            }
            previous = next;
        }
        Ok(GramLayout { hi, angles })
    }

    /// Returns ln G_kk and the unit-diagonal Gram S (row-major).
    fn assemble(
        &self,
        weight: &Weight,
        alpha: f64,
        degree: usize,
        plan: &QuadraturePlan,
        fine: bool,
    ) -> Result<(Vec<f64>, Vec<Complex64>)> {
        let n = degree + 1;
        let panel = if fine { plan.panel / 8.0 } else { plan.panel / 4.0 };
        let angles = if fine { self.angles * 2 } else { self.angles };
        let nodes = composite_nodes(0.0, self.hi, panel, &weight.breakpoints());
        let coeffs = quadrature::angular_fourier(|z| weight.value(z), &nodes.points, degree, angles);
        let ln_r: Vec<f64> = nodes.points.iter().map(|r| r.ln()).collect();
        let base: Vec<f64> = nodes
            .points
            .iter()
            .zip(&nodes.weights)
            .map(|(r, w)| w.ln() + r.ln() - alpha * r * r)
            .collect();
        let log_diag: Vec<f64> = (0..n)
            .map(|k| {
                let terms: Vec<f64> = (0..nodes.len())
                    .map(|i| {
                        let w0 = coeffs[i * n].re;
                        if w0 > 0.0 {
                            base[i] + 2.0 * k as f64 * ln_r[i] + w0.ln()
                        } else {
                            f64::NEG_INFINITY
                        }
                    })
                    .collect();
                quadrature::log_sum_exp(&terms)
            })
            .collect();
        if log_diag.iter().any(|v| !v.is_finite()) {
            return Err(WfockError::Contract("gram diagonal vanishes".into()));
        }
        let mut s = vec![Complex64::new(0.0, 0.0); n * n];
        for j in 0..n {
            for k in 0..=j {
                let shift = -0.5 * (log_diag[j] + log_diag[k]);
                let m = j - k;
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..nodes.len() {
                    let mag = (base[i] + (j + k) as f64 * ln_r[i] + shift).exp();
                    // G[j][k] uses Ŵ_{k−j} = conj(Ŵ_{j−k})
                    acc += coeffs[i * n + m].conj() * mag;
                }
                s[j * n + k] = acc;
                s[k * n + j] = acc.conj();
            }
            s[j * n + j] = Complex64::new(s[j * n + j].re, 0.0);
        }
        Ok((log_diag, s))
    }
}

/// Lower Cholesky factor of a Hermitian matrix with ε-regularized pivots.
fn cholesky(s: &[Complex64], n: usize) -> Result<Vec<Complex64>> {
    let mut c = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        let mut pivot = s[j * n + j].re - (0..j).map(|k| c[j * n + k].norm_sqr()).sum::<f64>();
        if pivot < GRAM_EPSILON {
            pivot += GRAM_EPSILON;
            if pivot < GRAM_EPSILON {
                return Err(WfockError::DegreeTooHigh {
                    failed_degree: j,
                    stable_degree: j.saturating_sub(1),
                });
            }
        }
        let d = pivot.sqrt();
        c[j * n + j] = Complex64::new(d, 0.0);
        for i in j + 1..n {
            let mut acc = s[i * n + j];
            for k in 0..j {
                acc -= c[i * n + k] * c[j * n + k].conj();
            }
            c[i * n + j] = acc / d;
        }
    }
    Ok(c)
}

fn lower_inverse(c: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut inv = vec![Complex64::new(0.0, 0.0); n * n];
    for col in 0..n {
        inv[col * n + col] = c[col * n + col].inv();
        for i in col + 1..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in col..i {
                acc += c[i * n + k] * inv[k * n + col];
            }
            inv[i * n + col] = -acc / c[i * n + i];
        }
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn standard(n: usize) -> FockModel {
        FockModel::build(Weight::standard(1.0), 1.0, n, QuadraturePlan::default()).unwrap()
    }

    #[test]
    fn standard_moments_are_factorials() {
        let m = radial_moments(&Weight::standard(1.0), 1.0, 3, &QuadraturePlan::default()).unwrap();
        for (got, want) in m.iter().zip([1.0, 1.0, 2.0, 6.0]) {
            assert!((got - want).abs() < 1e-12 * want);
        }
        let m0 = radial_moments(&Weight::power(0.0).unwrap(), 1.0, 1, &QuadraturePlan::default()).unwrap();
        assert!((m0[0] - PI).abs() < 1e-9 * PI);
    }

    #[test]
    fn quadrature_moments_match_gamma_integrals() {
        // level-one constant weight sent through the quadrature path via a table
        let table = Weight::radial_table(vec![[0.0, 1.0], [100.0, 1.0]]).unwrap();
        let m = radial_log_moments(&table, 1.0, 60, &QuadraturePlan::default()).unwrap();
        let mut ln_fact = PI.ln();
        for (n, li) in m.iter().enumerate() {
            if n > 0 {
                ln_fact += (n as f64).ln();
            }
            assert!((li.ln_value - ln_fact).abs() < 1e-9, "n = {n}");
        }
    }

    #[test]
    fn power_moments_are_log_convex() {
        let m = radial_log_moments(&Weight::power(2.0).unwrap(), 1.0, 40, &QuadraturePlan::default()).unwrap();
        for n in 1..40 {
            assert!(2.0 * m[n].ln_value <= m[n - 1].ln_value + m[n + 1].ln_value + 1e-12);
        }
    }

    #[test]
    fn non_radial_moments_are_unsupported() {
        let w = Weight::expression(Expr::parse("1 + x^2/(1+r^2)").unwrap()).unwrap();
        let err = radial_moments(&w, 1.0, 3, &QuadraturePlan::default()).unwrap_err();
        assert!(matches!(err, WfockError::Unsupported(_)));
    }

    #[test]
    fn standard_basis_is_normalized_monomials() {
        let m = standard(10);
        let z = c(0.7, -0.4);
        let e = m.basis_values(z);
        let mut fact = 1.0;
        for (n, v) in e.iter().enumerate() {
            if n > 0 {
                fact *= n as f64;
            }
            let want = z.powu(n as u32) / fact.sqrt();
            assert!((v - want).norm() < 1e-13 * (1.0 + want.norm()));
        }
    }

    #[test]
    fn kernel_reproduces_exponential() {
        let m = standard(80);
        let k = m.kernel_eval(c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        assert!((k.value.re - std::f64::consts::E).abs() < 1e-12);
        let a = c(1.2, -0.7);
        let z = c(-0.3, 1.9);
        let k = m.kernel_eval(a, z).unwrap();
        let want = (z * a.conj()).exp();
        assert!((k.value - want).norm() < 1e-10 * want.norm());
    }

    #[test]
    fn kernel_at_origin_is_inverse_mass() {
        let m = FockModel::build(Weight::power(2.0).unwrap(), 1.0, 60, QuadraturePlan::default()).unwrap();
        let m0 = m.log_moments().unwrap()[0].exp();
        for z in [c(0.0, 0.0), c(1.0, 1.0), c(-2.0, 0.3)] {
            let k = m.kernel_eval(c(0.0, 0.0), z).unwrap();
            assert!((k.value - c(1.0 / m0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn kernel_is_hermitian_and_diagonal_is_norm() {
        let m = FockModel::build(Weight::power(-1.0).unwrap(), 1.0, 30, QuadraturePlan::default()).unwrap();
        let a = c(0.4, 1.1);
        let z = c(-1.3, 0.2);
        let az = m.kernel_eval(a, z).unwrap();
        let za = m.kernel_eval(z, a).unwrap();
        assert_eq!(az.value, za.value.conj());
        let aa = m.kernel_eval(a, a).unwrap();
        assert_eq!(aa.value.im, 0.0);
        assert!((aa.value.re - aa.norm_a * aa.norm_a).abs() < 1e-12 * aa.value.re);
        assert!((aa.normalized.norm() - aa.norm_a).abs() < 1e-12 * aa.norm_a);
    }

    #[test]
    fn eval_radius_grows_with_degree() {
        let r40 = standard(40).eval_radius();
        let r80 = standard(80).eval_radius();
        let r120 = standard(120).eval_radius();
        assert!(r40 > 2.5 && r40 < r80 && r80 < r120, "{r40} {r80} {r120}");
        let err = standard(40).kernel_eval(c(0.0, 0.0), c(r40 + 1.0, 0.0)).unwrap_err();
        assert!(matches!(err, WfockError::TruncationUnsafe { .. }));
    }

    #[test]
    fn truncation_converges_inside_eval_radius() {
        let m60 = FockModel::build(Weight::power(2.0).unwrap(), 1.0, 60, QuadraturePlan::default()).unwrap();
        let m80 = m60.with_degree(80).unwrap();
        let a = c(1.0, 0.5);
        let z = c(-0.5, 1.5);
        let v60 = m60.kernel_eval(a, z).unwrap().value;
        let v80 = m80.kernel_eval(a, z).unwrap().value;
        assert!((v60 - v80).norm() < 1e-8 * v80.norm());
        assert!(m80.kernel_diagonal(a) >= m60.kernel_diagonal(a));
    }

    #[test]
    fn gram_path_agrees_with_moment_path() {
        let w = Weight::power(2.0).unwrap();
        let plan = QuadraturePlan::default();
        let radial = FockModel::radial(w.clone(), 1.0, 12, plan).unwrap();
        let gram = gram_orthonormalize(w, 1.0, 12, plan).unwrap();
        for n in 0..=12 {
            let l_rad = radial.coefficient(n, n).norm();
            let l_gram = gram.coefficient(n, n);
            assert!((l_gram.norm() - l_rad).abs() < 1e-8 * l_rad, "n = {n}");
            for k in 0..n {
                assert!(gram.coefficient(n, k).norm() < 1e-8 * l_rad);
            }
        }
        assert!(gram.gram_residual() < 1e-8);
    }

    #[test]
    fn gram_path_on_standard_weight() {
        let model = gram_orthonormalize(Weight::standard(1.0), 1.0, 10, QuadraturePlan::default()).unwrap();
        let z = c(0.3, 0.8);
        let e = model.basis_values(z);
        let mut fact = 1.0;
        for (n, v) in e.iter().enumerate() {
            if n > 0 {
                fact *= n as f64;
            }
            let want = z.powu(n as u32) / fact.sqrt();
            assert!((v - want).norm() < 1e-8, "n = {n}");
        }
    }

    #[test]
    fn non_radial_smoke_model() {
        let w = Weight::expression(Expr::parse("1 + x^2/(1+r^2)").unwrap()).unwrap();
        let model = FockModel::build(w.clone(), 1.0, 12, QuadraturePlan::default()).unwrap();
        assert!(!model.is_radial());
        assert!(model.gram_residual() < 1e-8);
        // orthonormality against an independent tensor rule in (ρ, θ):
        // 64 angles integrate the trigonometric degree ≤ 26 integrand exactly
        let nodes = composite_nodes(0.0, 9.0, 0.125, &[]);
        let m = 64;
        let mut ip = vec![Complex64::new(0.0, 0.0); 13 * 13];
        for (r, wr) in nodes.points.iter().zip(&nodes.weights) {
            for l in 0..m {
                let z = Complex64::from_polar(*r, 2.0 * PI * l as f64 / m as f64);
                let e = model.damped_basis_values(z);
                let f = wr * r * w.value(z) * 2.0 * PI / m as f64;
                for j in 0..13 {
                    for k in 0..13 {
                        ip[j * 13 + k] += e[j] * e[k].conj() * f;
                    }
                }
            }
        }
        for j in 0..13 {
            for k in 0..13 {
                let want = if j == k { 1.0 } else { 0.0 };
                assert!((ip[j * 13 + k] - want).norm() < 1e-8, "({j},{k}) = {}", ip[j * 13 + k]);
            }
        }
    }

    #[test]
    fn gram_failure_reports_stable_degree() {
        let s = vec![c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)];
        // a pivot of exactly zero is lifted to ε, so a singular 2×2 still factors
        let lifted = cholesky(&s, 2).unwrap();
        assert!((lifted[3].re - GRAM_EPSILON.sqrt()).abs() < 1e-12);
        let s = vec![c(1.0, 0.0), c(1.1, 0.0), c(1.1, 0.0), c(1.0, 0.0)];
        let err = cholesky(&s, 2).unwrap_err();
        assert_eq!(
            err,
            WfockError::DegreeTooHigh {
                failed_degree: 1,
                stable_degree: 0
            }
        );
    }

    #[test]
    fn dump_round_trips() {
        let m = standard(5);
        let json = m.to_json().unwrap();
        let back: ModelDump = serde_json::from_str(&json).unwrap();
        assert_eq!(back.degree, 5);
        assert_eq!(back.log_moments.unwrap().len(), 6);
    }
}
