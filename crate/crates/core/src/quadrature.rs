//! Quadrature rules shared by every module.
//!
//! Disks are integrated with polar product rules (Gauss–Legendre in the
//! radius, periodic trapezoid in the angle), squares with tensor
//! Gauss–Legendre. All rules refine adaptively until successive estimates
//! agree to the plan's relative tolerance; a rule that exhausts its budget
//! returns [`WfockError::Quadrature`] carrying the last two estimates.
//!
//! Integrals whose integrand spans hundreds of orders of magnitude (Gaussian
//! moments of high order) go through [`log_radial_integral`], which locates
//! the peak of the log-integrand and integrates the rescaled function.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WfockError};

/// Drop (in natural-log units) below the peak at which an integrand is
/// treated as negligible: e^{-80} ≈ 1.8e-35.
const LOG_DROP: f64 = 80.0;
const MAX_BISECTION_DEPTH: usize = 40;
const MAX_RECT_DEPTH: usize = 14;

/// Resolution knobs for every adaptive rule in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadraturePlan {
    /// Successive estimates must agree to this relative tolerance.
    pub rel_tol: f64,
    /// Largest radial panel before adaptive bisection starts.
    pub panel: f64,
    /// Smallest angular trapezoid count.
    pub angular_min: usize,
    /// Angular refinement budget.
    pub angular_max: usize,
    /// Step of the coarse scan that locates log-integrand peaks.
    pub scan_step: f64,
}

impl Default for QuadraturePlan {
    fn default() -> Self {
        QuadraturePlan {
            rel_tol: 1e-10,
            panel: 1.0,
            angular_min: 32,
            angular_max: 8192,
            scan_step: 0.05,
        }
    }
}

impl QuadraturePlan {
    /// The same plan with every step halved.
    pub fn refined(&self) -> Self {
        QuadraturePlan {
            rel_tol: self.rel_tol,
            panel: self.panel / 2.0,
            angular_min: self.angular_min * 2,
            angular_max: self.angular_max * 2,
            scan_step: self.scan_step / 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(WfockError::invalid("quadrature rel_tol must lie in (0, 1)"));
        }
        if !(self.panel > 0.0) || !(self.scan_step > 0.0) {
            return Err(WfockError::invalid("quadrature panel and scan_step must be positive"));
        }
        if self.angular_min < 4 || self.angular_max < self.angular_min {
            return Err(WfockError::invalid(
                "quadrature angular_min must be ≥ 4 and ≤ angular_max",
            ));
        }
        Ok(())
    }
}

/// Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    #[inline]
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

pub fn gl8() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(8))
}

pub fn gl16() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(16))
}

pub fn gl24() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(24))
}

/// A flat list of (abscissa, weight) pairs.
#[derive(Debug, Clone, Default)]
pub struct NodeSet {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl NodeSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn sum<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Composite 24-point rule on [a, b] with panels no longer than `panel`,
/// split at every breakpoint inside the interval.
pub fn composite_nodes(a: f64, b: f64, panel: f64, breakpoints: &[f64]) -> NodeSet {
    let mut set = NodeSet::default();
    if !(b > a) {
        return set;
    }
    let rule = gl24();
    for (lo, hi) in split_interval(a, b, panel, breakpoints) {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            set.points.push(mid + half * x);
            set.weights.push(w * half);
        }
    }
    set
}

fn split_interval(a: f64, b: f64, panel: f64, breakpoints: &[f64]) -> Vec<(f64, f64)> {
    let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|&x| x > a && x < b).collect();
    cuts.push(a);
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut out = Vec::new();
    for pair in cuts.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let pieces = ((hi - lo) / panel).ceil().max(1.0) as usize;
        let h = (hi - lo) / pieces as f64;
        for k in 0..pieces {
            let l = lo + h * k as f64;
            let r = if k + 1 == pieces { hi } else { lo + h * (k + 1) as f64 };
            out.push((l, r));
        }
    }
    out
}

/// Adaptive Gauss–Legendre integration of a fallible integrand over [a, b].
///
/// The interval is cut into panels (at most `plan.panel` long, split at the
/// breakpoints); each panel is bisected until the 16-point estimate on the
/// panel and on its two halves agree.
pub fn adaptive_try<F>(what: &str, a: f64, b: f64, breakpoints: &[f64], plan: &QuadraturePlan, mut f: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(b > a) {
        return Ok(0.0);
    }
    let failure: RefCell<Option<WfockError>> = RefCell::new(None);
    let mut g = |x: f64| -> f64 {
        if failure.borrow().is_some() {
            return 0.0;
        }
        match f(x) {
            Ok(v) => v,
            Err(e) => {
                *failure.borrow_mut() = Some(e);
                0.0
            }
        }
    };
    let rule = gl16();
    let panels = split_interval(a, b, plan.panel, breakpoints);
    let coarse: Vec<f64> = panels.iter().map(|&(l, r)| rule.integrate(l, r, &mut g)).collect();
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e);
    }
    let scale: f64 = panels.iter().map(|&(l, r)| rule.integrate(l, r, |x| g(x).abs())).sum();
    let total_width = b - a;
    let mut acc = 0.0;
    for (&(l, r), &whole) in panels.iter().zip(&coarse) {
        acc += bisect(what, l, r, whole, scale, total_width, plan.rel_tol, 0, rule, &mut g)?;
        if let Some(e) = failure.borrow_mut().take() {
            return Err(e);
        }
    }
    Ok(acc)
}

/// Infallible convenience wrapper over [`adaptive_try`].
pub fn adaptive<F>(what: &str, a: f64, b: f64, breakpoints: &[f64], plan: &QuadraturePlan, mut f: F) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    adaptive_try(what, a, b, breakpoints, plan, |x| Ok(f(x)))
}

#[allow(clippy::too_many_arguments)]
fn bisect<G: FnMut(f64) -> f64>(
    what: &str,
    a: f64,
    b: f64,
    whole: f64,
    scale: f64,
    total_width: f64,
    rel_tol: f64,
    depth: usize,
    rule: &GaussLegendre,
    g: &mut G,
) -> Result<f64> {
    let mid = 0.5 * (a + b);
    let left = rule.integrate(a, mid, &mut *g);
    let right = rule.integrate(mid, b, &mut *g);
    let halves = left + right;
    let allowed = rel_tol * scale * ((b - a) / total_width).max(1e-3) + f64::MIN_POSITIVE;
    let diff = (halves - whole).abs();
    if diff <= allowed {
        return Ok(halves);
    }
    if depth >= MAX_BISECTION_DEPTH || (b - a) <= 1e-14 * total_width.max(1.0) {
        return Err(WfockError::quadrature(what, halves, whole));
    }
    let l = bisect(what, a, mid, left, scale, total_width, rel_tol, depth + 1, rule, g)?;
    let r = bisect(what, mid, b, right, scale, total_width, rel_tol, depth + 1, rule, g)?;
    Ok(l + r)
}

/// Periodic trapezoid rule with `m` equispaced angles on [0, 2π).
pub fn trapezoid_angles(m: usize) -> impl Iterator<Item = f64> {
    let h = 2.0 * PI / m as f64;
    (0..m).map(move |k| h * k as f64)
}

/// ∫_0^{2π} f(θ) dθ with the angle count doubled until two successive
/// estimates agree.
pub fn angular_integral<F: FnMut(f64) -> f64>(what: &str, plan: &QuadraturePlan, mut f: F) -> Result<f64> {
    let mut m = plan.angular_min;
    let h = 2.0 * PI / m as f64;
    let mut abs_scale: f64 = 0.0;
    let mut sum: f64 = 0.0;
    for t in trapezoid_angles(m) {
        let v = f(t);
        abs_scale = abs_scale.max(v.abs());
        sum += v;
    }
    let mut est = sum * h;
    loop {
        let h_new = PI / m as f64;
        // Reuse the previous nodes; only the odd ones are new.
        for k in 0..m {
            let theta = h_new * (2 * k + 1) as f64;
            let v = f(theta);
            abs_scale = abs_scale.max(v.abs());
            sum += v;
        }
        m *= 2;
        let next = sum * h_new;
        let diff = (next - est).abs();
        if diff <= plan.rel_tol * next.abs().max(abs_scale * 2.0 * PI * 1e-6) || diff == 0.0 {
            return Ok(next);
        }
        if m >= plan.angular_max {
            return Err(WfockError::quadrature(what, next, est));
        }
        est = next;
    }
}

/// ∫_{D(center, radius)} f dA for a general integrand by the polar product
/// rule centered at the disk center.
pub fn polar_disk<F>(what: &str, center: Complex64, radius: f64, plan: &QuadraturePlan, f: F) -> Result<f64>
where
    F: Fn(Complex64) -> f64,
{
    adaptive_try(what, 0.0, radius, &[], plan, |rho| {
        if rho == 0.0 {
            return Ok(0.0);
        }
        let ring = angular_integral(what, plan, |t| f(center + Complex64::from_polar(rho, t)))?;
        Ok(rho * ring)
    })
}

/// ∫_{D(c, radius)} f(|ξ|) dA(ξ) for a radial integrand, with |c| = `center_abs`.
///
/// The angle is integrated exactly: the circle |ξ| = ρ meets the disk in an
/// arc of length 2ρ·acos((ρ² + d² − r²)/(2ρd)). The partial-arc range is
/// parametrized by ρ = m − h·cos t, which removes the square-root endpoint
/// behaviour of the arc length.
pub fn radial_disk_integral<F>(
    what: &str,
    f: F,
    center_abs: f64,
    radius: f64,
    breakpoints: &[f64],
    plan: &QuadraturePlan,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let d = center_abs;
    let r = radius;
    if d <= 1e-15 * r {
        return adaptive(what, 0.0, r, breakpoints, plan, |rho| 2.0 * PI * rho * f(rho));
    }
    let inner = (r - d).max(0.0);
    let full = if inner > 0.0 {
        adaptive(what, 0.0, inner, breakpoints, plan, |rho| 2.0 * PI * rho * f(rho))?
    } else {
        0.0
    };
    let lo = (d - r).abs();
    let hi = d + r;
    let m = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let t_breaks: Vec<f64> = breakpoints
        .iter()
        .filter(|&&b| b > lo && b < hi)
        .map(|&b| ((m - b) / h).clamp(-1.0, 1.0).acos())
        .collect();
    let partial = adaptive(what, 0.0, PI, &t_breaks, plan, |t| {
        let rho = m - h * t.cos();
        if rho <= 0.0 {
            return 0.0;
        }
        let c = ((rho * rho + d * d - r * r) / (2.0 * rho * d)).clamp(-1.0, 1.0);
        2.0 * rho * c.acos() * f(rho) * h * t.sin()
    })?;
    Ok(full + partial)
}

/// ∫_{D(center, radius)} f dA in polar coordinates about `pole`.
///
/// Meant for integrands that are smooth except for a radial kink at the
/// pole (for instance a power weight (1+|z|)^γ times an analytic factor):
/// circles about the pole cut the disk in arcs, each integrated with an
/// adaptive Gauss rule, and the radial variable is parametrized as in
/// [`radial_disk_integral`].
pub fn pole_polar_disk<F>(
    what: &str,
    f: F,
    center: Complex64,
    radius: f64,
    pole: Complex64,
    breakpoints: &[f64],
    plan: &QuadraturePlan,
) -> Result<f64>
where
    F: Fn(Complex64) -> f64,
{
    let offset = center - pole;
    let d = offset.norm();
    let r = radius;
    let full_circle = |rho: f64| -> Result<f64> {
        if rho == 0.0 {
            return Ok(0.0);
        }
        Ok(rho * angular_integral(what, plan, |t| f(pole + Complex64::from_polar(rho, t)))?)
    };
    if d <= 1e-15 * r {
        return adaptive_try(what, 0.0, r, breakpoints, plan, full_circle);
    }
    let inner = (r - d).max(0.0);
    let full = if inner > 0.0 {
        adaptive_try(what, 0.0, inner, breakpoints, plan, full_circle)?
    } else {
        0.0
    };
    let phase = offset.arg();
    let lo = (d - r).abs();
    let hi = d + r;
    let m = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let t_breaks: Vec<f64> = breakpoints
        .iter()
        .filter(|&&b| b > lo && b < hi)
        .map(|&b| ((m - b) / h).clamp(-1.0, 1.0).acos())
        .collect();
    let arc_plan = QuadraturePlan {
        panel: f64::INFINITY,
        ..*plan
    };
    let partial = adaptive_try(what, 0.0, PI, &t_breaks, plan, |t| {
        let rho = m - h * t.cos();
        if rho <= 0.0 {
            return Ok(0.0);
        }
        let c = ((rho * rho + d * d - r * r) / (2.0 * rho * d)).clamp(-1.0, 1.0);
        let beta = c.acos();
        if beta == 0.0 {
            return Ok(0.0);
        }
        let arc = adaptive(what, phase - beta, phase + beta, &[], &arc_plan, |theta| {
            f(pole + Complex64::from_polar(rho, theta))
        })?;
        Ok(rho * arc * h * t.sin())
    })?;
    Ok(full + partial)
}

/// F_m(r) = ∫_0^{2π} f(re^{iθ}) e^{imθ} dθ for m = 0..=max_mode by the
/// trapezoid rule with `angles` points, row-major per radius.
pub fn angular_fourier<F>(f: F, radii: &[f64], max_mode: usize, angles: usize) -> Vec<Complex64>
where
    F: Fn(Complex64) -> f64,
{
    let n = max_mode + 1;
    let h = 2.0 * PI / angles as f64;
    let mut out = vec![Complex64::new(0.0, 0.0); radii.len() * n];
    for (i, &r) in radii.iter().enumerate() {
        let samples: Vec<f64> = (0..angles).map(|l| f(Complex64::from_polar(r, h * l as f64))).collect();
        for m in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for (l, v) in samples.iter().enumerate() {
                acc += Complex64::from_polar(*v, (m * l % angles) as f64 * h);
            }
            out[i * n + m] = acc * h;
        }
    }
    out
}

/// ∫ f dA over an axis-parallel rectangle by adaptive tensor Gauss–Legendre
/// with quadrisection.
pub fn adaptive_rect<F>(what: &str, x0: f64, x1: f64, y0: f64, y1: f64, plan: &QuadraturePlan, f: F) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
{
    let rule = gl8();
    let tensor = |a: f64, b: f64, c: f64, d: f64| -> f64 {
        let hx = 0.5 * (b - a);
        let mx = 0.5 * (b + a);
        let hy = 0.5 * (d - c);
        let my = 0.5 * (d + c);
        let mut acc = 0.0;
        for (xi, wi) in rule.nodes.iter().zip(&rule.weights) {
            let x = mx + hx * xi;
            for (yj, wj) in rule.nodes.iter().zip(&rule.weights) {
                acc += wi * wj * f(x, my + hy * yj);
            }
        }
        acc * hx * hy
    };
    let area = (x1 - x0) * (y1 - y0);
    let whole = tensor(x0, x1, y0, y1);
    let scale = {
        let hx = 0.5 * (x1 - x0);
        let mx = 0.5 * (x1 + x0);
        let hy = 0.5 * (y1 - y0);
        let my = 0.5 * (y1 + y0);
        let mut acc = 0.0;
        for (xi, wi) in rule.nodes.iter().zip(&rule.weights) {
            for (yj, wj) in rule.nodes.iter().zip(&rule.weights) {
                acc += wi * wj * f(mx + hx * xi, my + hy * yj).abs();
            }
        }
        acc * hx * hy
    };
    #[allow(clippy::too_many_arguments)]
    fn recurse<T: Fn(f64, f64, f64, f64) -> f64>(
        what: &str,
        tensor: &T,
        a: f64,
        b: f64,
        c: f64,
        d: f64,
        whole: f64,
        allowed_per_area: f64,
        depth: usize,
    ) -> Result<f64> {
        let mx = 0.5 * (a + b);
        let my = 0.5 * (c + d);
        let q = [
            tensor(a, mx, c, my),
            tensor(mx, b, c, my),
            tensor(a, mx, my, d),
            tensor(mx, b, my, d),
        ];
        let sum: f64 = q.iter().sum();
        let area = (b - a) * (d - c);
        let diff = (sum - whole).abs();
        if diff <= allowed_per_area * area.max(1e-6) + f64::MIN_POSITIVE {
            return Ok(sum);
        }
        if depth >= MAX_RECT_DEPTH {
            return Err(WfockError::quadrature(what, sum, whole));
        }
        let boxes = [(a, mx, c, my), (mx, b, c, my), (a, mx, my, d), (mx, b, my, d)];
        let mut acc = 0.0;
        for (k, &(l, r, bo, t)) in boxes.iter().enumerate() {
            acc += recurse(what, tensor, l, r, bo, t, q[k], allowed_per_area, depth + 1)?;
        }
        Ok(acc)
    }
    let allowed_per_area = plan.rel_tol * scale / area;
    recurse(what, &tensor, x0, x1, y0, y1, whole, allowed_per_area, 0)
}

/// Result of [`log_radial_integral`]: ln ∫_0^∞ e^{φ(r)} dr together with the
/// relative size of the neglected tails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogIntegral {
    pub ln_value: f64,
    pub tail_rel: f64,
    pub window: (f64, f64),
}

impl LogIntegral {
    pub fn value(&self) -> f64 {
        self.ln_value.exp()
    }

    pub fn zero() -> Self {
        LogIntegral {
            ln_value: f64::NEG_INFINITY,
            tail_rel: 0.0,
            window: (0.0, 0.0),
        }
    }
}

/// Largest radius the peak scan will explore.
pub const SCAN_LIMIT: f64 = 400.0;

/// Locates the window [lo, hi] where φ stays within [`LOG_DROP`] of its peak.
/// Returns (peak value, lo, hi), or `None` when φ is −∞ everywhere scanned.
pub fn log_window<F: Fn(f64) -> f64>(phi: &F, step: f64) -> Option<(f64, f64, f64)> {
    let mut peak = f64::NEG_INFINITY;
    let mut first_live: Option<f64> = None;
    let mut k = 0usize;
    let mut hi = SCAN_LIMIT;
    loop {
        let r = step * k as f64;
        if r > SCAN_LIMIT {
            break;
        }
        let v = phi(r);
        if v > peak {
            peak = v;
        }
        if first_live.is_none() && v.is_finite() && v > peak - LOG_DROP {
            first_live = Some(r);
        }
        if peak.is_finite() && (v < peak - LOG_DROP || v == f64::NEG_INFINITY) && r > 0.0 {
            // Past the peak and negligible: confirm with a short look-ahead.
            let ahead = phi(r + 4.0 * step);
            if ahead < peak - LOG_DROP {
                hi = r;
                break;
            }
        }
        k += 1;
    }
    if !peak.is_finite() {
        return None;
    }
    // Re-scan from the left to find where φ first gets within the drop.
    let mut lo = 0.0;
    let mut j = 0usize;
    loop {
        let r = step * j as f64;
        if r >= hi {
            break;
        }
        if phi(r) >= peak - LOG_DROP {
            lo = (r - step).max(0.0);
            break;
        }
        j += 1;
    }
    let _ = first_live;
    Some((peak, lo, hi))
}

/// ln ∫_0^∞ exp(φ(r)) dr for log-integrands with a single dominant bump.
pub fn log_radial_integral<F>(what: &str, phi: F, breakpoints: &[f64], plan: &QuadraturePlan) -> Result<LogIntegral>
where
    F: Fn(f64) -> f64,
{
    let Some((peak, lo, hi)) = log_window(&phi, plan.scan_step) else {
        return Ok(LogIntegral::zero());
    };
    if hi >= SCAN_LIMIT {
        let edge = phi(SCAN_LIMIT);
        return Err(WfockError::TailNotCertified {
            what: what.to_string(),
            tail: (edge - peak).exp(),
            cutoff: SCAN_LIMIT,
        });
    }
    let integral = adaptive(what, lo, hi, breakpoints, plan, |r| {
        let v = phi(r) - peak;
        if v.is_finite() {
            v.exp()
        } else {
            0.0
        }
    })?;
    if !(integral > 0.0) {
        return Ok(LogIntegral::zero());
    }
    let edge_hi = (phi(hi) - peak).exp();
    let edge_lo = if lo > 0.0 { (phi(lo) - peak).exp() * lo } else { 0.0 };
    Ok(LogIntegral {
        ln_value: peak + integral.ln(),
        tail_rel: (edge_hi + edge_lo) / integral,
        window: (lo, hi),
    })
}

/// log-sum-exp of a slice; −∞ for an empty slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan() -> QuadraturePlan {
        QuadraturePlan::default()
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let rule = GaussLegendre::new(8);
        // degree 15 is the exactness limit of 8 nodes
        let v = rule.integrate(0.0, 1.0, |x| x.powi(15));
        assert!((v - 1.0 / 16.0).abs() < 1e-15);
        let total: f64 = rule.weights.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_kinks() {
        let v = adaptive("kink", -1.0, 2.0, &[], &plan(), |x: f64| x.abs()).unwrap();
        assert!((v - 2.5).abs() < 1e-10);
    }

    #[test]
    fn adaptive_reports_nonconvergence() {
        let tight = QuadraturePlan {
            rel_tol: 1e-15,
            ..plan()
        };
        let err = adaptive("1/sqrt", 0.0, 1.0, &[], &tight, |x: f64| {
            if x > 0.0 {
                x.powf(-0.999)
            } else {
                0.0
            }
        })
        .unwrap_err();
        assert!(matches!(err, WfockError::Quadrature { .. }));
    }

    #[test]
    fn radial_disk_matches_area() {
        for &(d, r) in &[(0.0, 1.0), (0.5, 1.0), (1.0, 1.0), (3.0, 2.0), (5.0, 0.3)] {
            let area = radial_disk_integral("area", |_| 1.0, d, r, &[], &plan()).unwrap();
            assert!(
                (area - PI * r * r).abs() < 1e-10 * PI * r * r,
                "d={d} r={r} area={area}"
            );
        }
    }

    #[test]
    fn radial_disk_agrees_with_polar_rule() {
        // smooth in z, so the polar rule about the center converges too
        let f = |rho: f64| (1.0 + rho * rho).powf(1.5);
        for &(d, r) in &[(0.4, 1.0), (2.5, 1.0), (1.0, 0.3)] {
            let a = radial_disk_integral("w", f, d, r, &[], &plan()).unwrap();
            let b = polar_disk("w", Complex64::new(d, 0.0), r, &plan(), |z| f(z.norm())).unwrap();
            assert!((a - b).abs() < 1e-8 * a, "d={d}: {a} vs {b}");
        }
    }

    #[test]
    fn pole_polar_handles_kink_at_pole() {
        // (1+|z|)² · (1 + x) over disks containing, touching and avoiding the origin;
        // oracle: the x-term integrates to c.re·(radial part) by symmetry only for
        // centered disks, so compare against a fine tensor rule on a split box.
        let f = |z: Complex64| (1.0 + z.norm()).powi(2) * (1.0 + 0.5 * z.re);
        for &(cx, cy, r) in &[(0.3, 0.1, 1.0), (1.0, 0.0, 1.0), (2.0, 1.0, 0.5)] {
            let c = Complex64::new(cx, cy);
            let v = pole_polar_disk("kink", f, c, r, Complex64::new(0.0, 0.0), &[], &plan()).unwrap();
            // oracle: polar about the center with a very fine angular rule and
            // a plain Gauss rule in the radius (slow but independent)
            let rule = GaussLegendre::new(200);
            let m = 4000;
            let oracle = rule.integrate(0.0, r, |rho| {
                let s: f64 = (0..m)
                    .map(|k| f(c + Complex64::from_polar(rho, 2.0 * PI * k as f64 / m as f64)))
                    .sum();
                rho * s * 2.0 * PI / m as f64
            });
            assert!((v - oracle).abs() < 1e-6 * oracle, "{cx},{cy}: {v} vs {oracle}");
        }
    }

    #[test]
    fn rect_rule_integrates_polynomial() {
        let v = adaptive_rect("xy", 0.0, 1.0, 0.0, 2.0, &plan(), |x, y| x * x * y).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn log_integral_reproduces_factorials() {
        // ∫ 2 r^{2n+1} e^{-r²} dr = n!
        for n in [0usize, 1, 5, 30, 120] {
            let li = log_radial_integral(
                "moment",
                |r: f64| 2f64.ln() + (2 * n + 1) as f64 * r.ln() - r * r,
                &[],
                &plan(),
            )
            .unwrap();
            let ln_fact: f64 = (1..=n).map(|k| (k as f64).ln()).sum();
            assert!((li.ln_value - ln_fact).abs() < 1e-10 * ln_fact.max(1.0), "n={n}");
        }
    }

    #[test]
    fn log_integral_of_zero_function() {
        let li = log_radial_integral("zero", |_| f64::NEG_INFINITY, &[], &plan()).unwrap();
        assert_eq!(li.value(), 0.0);
    }
}
