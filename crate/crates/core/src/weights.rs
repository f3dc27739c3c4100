//! Weights on the plane and the geometric quantities built from them:
//! disk and square masses, restricted A_p constants, growth constants and
//! Gaussian totals.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::RwLock;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WfockError};
use crate::expr::{Bindings, Expr, Var};
use crate::quadrature::{self, gl24, QuadraturePlan};

/// Running A_p supremum above which a weight is reported as outside the class.
pub const AP_DIVERGENCE_CEILING: f64 = 1e12;

/// A weight w ≥ 0 on ℂ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Weight {
    Constant {
        level: f64,
    },
    /// w(z) = (1 + |z|)^γ
    Power {
        gamma: f64,
    },
    /// Piecewise-linear radial profile, constant beyond the table ends.
    RadialTable {
        table: Vec<[f64; 2]>,
    },
    Expression {
        expression: Expr,
    },
}

impl Weight {
    pub fn constant(level: f64) -> Result<Self> {
        if !(level > 0.0 && level.is_finite()) {
            return Err(WfockError::invalid("constant weight level must be positive"));
        }
        Ok(Weight::Constant { level })
    }

    /// The standard Gaussian weight α/π.
    pub fn standard(alpha: f64) -> Self {
        Weight::Constant { level: alpha / PI }
    }

    pub fn power(gamma: f64) -> Result<Self> {
        if !gamma.is_finite() {
            return Err(WfockError::invalid("power weight exponent must be finite"));
        }
        Ok(Weight::Power { gamma })
    }

    pub fn radial_table(table: Vec<[f64; 2]>) -> Result<Self> {
        if table.is_empty() {
            return Err(WfockError::invalid("radial table must not be empty"));
        }
        for pair in table.windows(2) {
            if !(pair[1][0] > pair[0][0]) {
                return Err(WfockError::invalid("radial table radii must be strictly increasing"));
            }
        }
        if table.iter().any(|&[r, v]| !(r >= 0.0) || !(v >= 0.0) || !v.is_finite()) {
            return Err(WfockError::invalid(
                "radial table entries need radius ≥ 0 and finite value ≥ 0",
            ));
        }
        Ok(Weight::RadialTable { table })
    }

    pub fn expression(expression: Expr) -> Result<Self> {
        if expression.uses(Var::W) {
            return Err(WfockError::invalid(
                "a weight expression cannot refer to the weight variable `w`",
            ));
        }
        Ok(Weight::Expression { expression })
    }

    pub fn is_radial(&self) -> bool {
        match self {
            Weight::Constant { .. } | Weight::Power { .. } | Weight::RadialTable { .. } => true,
            Weight::Expression { expression } => expression.depends_only_on_modulus(),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Weight::Constant { .. })
    }

    /// Profile w(r) of a radial weight; meaningless for non-radial kinds.
    pub fn radial_value(&self, r: f64) -> f64 {
        match self {
            Weight::Constant { level } => *level,
            Weight::Power { gamma } => (1.0 + r).powf(*gamma),
            Weight::RadialTable { table } => interpolate(table, r),
            Weight::Expression { expression } => expression.eval(&Bindings {
                r,
                x: r,
                y: 0.0,
                w: f64::NAN,
            }),
        }
    }

    pub fn value(&self, z: Complex64) -> f64 {
        match self {
            Weight::Expression { expression } => expression.eval(&Bindings {
                r: z.norm(),
                x: z.re,
                y: z.im,
                w: f64::NAN,
            }),
            _ => self.radial_value(z.norm()),
        }
    }

    /// Radii where the radial profile is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Weight::RadialTable { table } => table.iter().map(|p| p[0]).collect(),
            _ => Vec::new(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Weight::Constant { level } => format!("constant {level}"),
            Weight::Power { gamma } => format!("(1+|z|)^{gamma}"),
            Weight::RadialTable { table } => format!("radial table ({} points)", table.len()),
            Weight::Expression { expression } => format!("expression {expression}"),
        }
    }
}

fn interpolate(table: &[[f64; 2]], r: f64) -> f64 {
    let first = table[0];
    let last = table[table.len() - 1];
    if r <= first[0] {
        return first[1];
    }
    if r >= last[0] {
        return last[1];
    }
    let idx = table.partition_point(|p| p[0] <= r);
    let [r0, v0] = table[idx - 1];
    let [r1, v1] = table[idx];
    v0 + (v1 - v0) * (r - r0) / (r1 - r0)
}

/// Open disk D(center, radius).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: Complex64,
    pub radius: f64,
}

impl Disk {
    pub fn new(center: Complex64, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(WfockError::invalid("disk radius must be positive"));
        }
        Ok(Disk { center, radius })
    }

    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }
}

/// Axis-parallel square Q with center and side length ℓ(Q).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Square {
    pub center: Complex64,
    pub side: f64,
}

impl Square {
    pub fn new(center: Complex64, side: f64) -> Result<Self> {
        if !(side > 0.0 && side.is_finite()) {
            return Err(WfockError::invalid("square side must be positive"));
        }
        Ok(Square { center, side })
    }

    pub fn area(&self) -> f64 {
        self.side * self.side
    }
}

fn positivity_violation(w: &Weight, z: Complex64, v: f64) -> WfockError {
    WfockError::Contract(format!(
        "weight {} is {v} at quadrature node {z}; weights must be strictly positive",
        w.describe()
    ))
}

/// w(D) = ∫_D w dA.
pub fn disk_mass(w: &Weight, d: &Disk, plan: &QuadraturePlan) -> Result<f64> {
    if let Weight::Constant { level } = w {
        return Ok(level * d.area());
    }
    let what = "weight disk mass";
    if w.is_radial() {
        check_radial_positive(w, d)?;
        return quadrature::radial_disk_integral(
            what,
            |rho| w.radial_value(rho),
            d.center.norm(),
            d.radius,
            &w.breakpoints(),
            plan,
        );
    }
    quadrature::adaptive_try(what, 0.0, d.radius, &[], plan, |rho| {
        if rho == 0.0 {
            return Ok(0.0);
        }
        let mut violation = None;
        let ring = quadrature::angular_integral(what, plan, |t| {
            let z = d.center + Complex64::from_polar(rho, t);
            let v = w.value(z);
            if !(v > 0.0) && violation.is_none() {
                violation = Some((z, v));
            }
            v
        });
        if let Some((z, v)) = violation {
            return Err(positivity_violation(w, z, v));
        }
        Ok(rho * ring?)
    })
}

/// Positivity of a radial profile over the radii a disk touches, sampled on
/// the Gauss nodes of the radial range.
fn check_radial_positive(w: &Weight, d: &Disk) -> Result<()> {
    let lo = (d.center.norm() - d.radius).max(0.0);
    let hi = d.center.norm() + d.radius;
    let rule = gl24();
    let interior = rule.nodes.iter().map(|x| 0.5 * (lo + hi) + 0.5 * (hi - lo) * x);
    for rho in interior.chain([lo, hi]) {
        let v = w.radial_value(rho);
        if !(v > 0.0) {
            return Err(positivity_violation(w, Complex64::new(rho, 0.0), v));
        }
    }
    Ok(())
}

/// w(Q) = ∫_Q w dA.
pub fn square_mass(w: &Weight, q: &Square, plan: &QuadraturePlan) -> Result<f64> {
    if let Weight::Constant { level } = w {
        return Ok(level * q.area());
    }
    let h = 0.5 * q.side;
    let (cx, cy) = (q.center.re, q.center.im);
    integrate_square(w, q, plan, |v| v).and_then(|mass| {
        if mass > 0.0 {
            Ok(mass)
        } else {
            Err(WfockError::Contract(format!(
                "weight has zero mass on the square centered at ({cx}, {cy}) with side {}",
                2.0 * h
            )))
        }
    })
}

fn integrate_square<G: Fn(f64) -> f64>(w: &Weight, q: &Square, plan: &QuadraturePlan, g: G) -> Result<f64> {
    let h = 0.5 * q.side;
    let (cx, cy) = (q.center.re, q.center.im);
    quadrature::adaptive_rect(
        "weight square integral",
        cx - h,
        cx + h,
        cy - h,
        cy + h,
        plan,
        |x, y| g(w.value(Complex64::new(x, y))),
    )
}

/// Lattice points step·ℤ² inside the closed disk of radius `extent`, in a
/// fixed row-major order.
pub fn lattice(step: f64, extent: f64) -> Vec<Complex64> {
    let k = (extent / step).floor() as i64;
    let mut out = Vec::new();
    for j in -k..=k {
        for i in -k..=k {
            let z = Complex64::new(step * i as f64, step * j as f64);
            if z.norm() <= extent * (1.0 + 1e-12) {
                out.push(z);
            }
        }
    }
    out
}

/// Outcome of a restricted A_p sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApConstant {
    pub value: f64,
    pub divergent: bool,
    pub squares: usize,
    pub argmax: Complex64,
}

/// sup over lattice squares of (avg_Q w)(avg_Q w^{-p'/p})^{p/p'} (p > 1) or
/// (avg_Q w)·max_Q(1/w) (p = 1, max over quadrature nodes: a lower estimate
/// of the essential supremum).
pub fn restricted_ap_constant(
    w: &Weight,
    p: f64,
    side: f64,
    extent: f64,
    step: f64,
    plan: &QuadraturePlan,
) -> Result<ApConstant> {
    if !(p >= 1.0) {
        return Err(WfockError::invalid("restricted A_p needs p ≥ 1"));
    }
    if !(side > 0.0 && extent > 0.0 && step > 0.0) {
        return Err(WfockError::invalid("side, extent and step must be positive"));
    }
    if step > side {
        return Err(WfockError::invalid("grid step must not exceed the square side"));
    }
    let centers = lattice(step, extent);
    let values: Vec<Result<f64>> = centers
        .par_iter()
        .map(|&c| ap_product(w, p, &Square::new(c, side)?, plan))
        .collect();
    let mut best = ApConstant {
        value: 0.0,
        divergent: false,
        squares: centers.len(),
        argmax: Complex64::new(0.0, 0.0),
    };
    for (c, v) in centers.iter().zip(values) {
        let v = v?;
        if !(v.is_finite()) || v > best.value {
            best.value = if v.is_nan() { f64::INFINITY } else { v };
            best.argmax = *c;
        }
        if !best.value.is_finite() {
            break;
        }
    }
    best.divergent = !best.value.is_finite() || best.value > AP_DIVERGENCE_CEILING;
    Ok(best)
}

fn ap_product(w: &Weight, p: f64, q: &Square, plan: &QuadraturePlan) -> Result<f64> {
    let area = q.area();
    let avg = integrate_square(w, q, plan, |v| v)? / area;
    if p == 1.0 {
        let rule = gl24();
        let h = 0.5 * q.side;
        let mut worst: f64 = 0.0;
        for x in &rule.nodes {
            for y in &rule.nodes {
                let v = w.value(q.center + Complex64::new(h * x, h * y));
                if !(v > 0.0) {
                    return Ok(f64::INFINITY);
                }
                worst = worst.max(1.0 / v);
            }
        }
        return Ok(avg * worst);
    }
    let dual_exp = -1.0 / (p - 1.0);
    let dual = integrate_square(w, q, plan, |v| if v > 0.0 { v.powf(dual_exp) } else { f64::INFINITY });
    let dual = match dual {
        Ok(d) => d / area,
        Err(_) => return Ok(f64::INFINITY),
    };
    Ok(avg * dual.powf(p - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthConstant {
    /// Smallest C with w(Q_r(ν))/w(Q_r(ν')) ≤ C^{|ν−ν'|} over the scanned pairs.
    pub c: f64,
    pub worst_pair: (Complex64, Complex64),
    pub squares: usize,
}

pub fn growth_constant(w: &Weight, r: f64, extent: f64, plan: &QuadraturePlan) -> Result<GrowthConstant> {
    if !(r > 0.0 && extent > 0.0) {
        return Err(WfockError::invalid("growth constant needs r > 0 and extent > 0"));
    }
    let centers = lattice(r, extent);
    let logs: Vec<Result<f64>> = centers
        .par_iter()
        .map(|&c| square_mass(w, &Square::new(c, r)?, plan).map(f64::ln))
        .collect();
    let logs: Vec<f64> = logs.into_iter().collect::<Result<_>>()?;
    let per_row: Vec<(f64, usize, usize)> = (0..centers.len())
        .into_par_iter()
        .map(|i| {
            let mut best = (0.0, i, i);
            for j in (i + 1)..centers.len() {
                let dist = (centers[i] - centers[j]).norm();
                let slope = (logs[i] - logs[j]).abs() / dist;
                if slope > best.0 {
                    best = (slope, i, j);
                }
            }
            best
        })
        .collect();
    let (slope, i, j) = per_row
        .into_iter()
        .fold((0.0, 0, 0), |acc, x| if x.0 > acc.0 { x } else { acc });
    let (hi, lo) = if logs[i] >= logs[j] { (i, j) } else { (j, i) };
    Ok(GrowthConstant {
        c: slope.exp(),
        worst_pair: (centers[hi], centers[lo]),
        squares: centers.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianTotal {
    pub value: f64,
    pub tail_bound: f64,
    pub cutoff: f64,
}

/// ∫_ℂ e^{−α|z|²} w dA over |z| ≤ R plus a tail bound.
///
/// Beyond R the weight is dominated by W_R·C^{|z|−R}, with W_R the largest
/// value on the circle |z| = R and C the unit-square growth constant over
/// the disk of radius R.
pub fn gaussian_total(w: &Weight, alpha: f64, plan: &QuadraturePlan) -> Result<GaussianTotal> {
    if !(alpha > 0.0) {
        return Err(WfockError::invalid("alpha must be positive"));
    }
    let what = "gaussian total";
    let scale = 1.0 / alpha.sqrt();
    let mut cutoff = 6.0 * scale;
    let max_cutoff = 64.0 * scale;
    loop {
        let value = gaussian_disk(w, alpha, cutoff, plan)?;
        let growth = if w.is_constant() {
            1.0
        } else {
            growth_constant(w, 1.0, cutoff, plan)?.c
        };
        let edge = (0..64)
            .map(|k| w.value(Complex64::from_polar(cutoff, 2.0 * PI * k as f64 / 64.0)))
            .fold(0.0, f64::max);
        let ln_g = growth.ln();
        let tail_end = cutoff + 20.0 * scale + 2.0 * ln_g / alpha;
        let tail = quadrature::adaptive(what, cutoff, tail_end, &[], plan, |r| {
            2.0 * PI * r * (ln_g * (r - cutoff) - alpha * r * r).exp()
        })? * edge;
        if tail.is_finite() && tail <= plan.rel_tol * value.abs() {
            return Ok(GaussianTotal {
                value,
                tail_bound: tail,
                cutoff,
            });
        }
        if cutoff >= max_cutoff {
            return Err(WfockError::TailNotCertified {
                what: what.into(),
                tail,
                cutoff,
            });
        }
        cutoff = (cutoff * 1.5).min(max_cutoff);
    }
}

fn gaussian_disk(w: &Weight, alpha: f64, radius: f64, plan: &QuadraturePlan) -> Result<f64> {
    let what = "gaussian total";
    if w.is_radial() {
        quadrature::adaptive(what, 0.0, radius, &w.breakpoints(), plan, |r| {
            2.0 * PI * r * (-alpha * r * r).exp() * w.radial_value(r)
        })
    } else {
        quadrature::polar_disk(what, Complex64::new(0.0, 0.0), radius, plan, |z| {
            (-alpha * z.norm_sqr()).exp() * w.value(z)
        })
    }
}

/// Memoized disk masses z ↦ w(D(z, r)), safe for concurrent readers.
///
/// For radial weights the center is canonicalized to (|z|, 0).
#[derive(Debug)]
pub struct WeightMassCache {
    weight: Weight,
    plan: QuadraturePlan,
    entries: RwLock<HashMap<(u64, u64, u64), f64>>,
}

impl WeightMassCache {
    pub fn new(weight: Weight, plan: QuadraturePlan) -> Self {
        WeightMassCache {
            weight,
            plan,
            entries: RwLock::new(HashMap::new()),
        }
    }

    pub fn weight(&self) -> &Weight {
        &self.weight
    }

    pub fn plan(&self) -> &QuadraturePlan {
        &self.plan
    }

    pub fn tolerance(&self) -> f64 {
        self.plan.rel_tol
    }

    pub fn len(&self) -> usize {
        self.entries.read().map(|m| m.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// ŵ_r(z) = w(D(z, r)).
    pub fn disk_mass(&self, center: Complex64, radius: f64) -> Result<f64> {
        if let Weight::Constant { level } = self.weight {
            return Ok(level * PI * radius * radius);
        }
        let center = if self.weight.is_radial() {
            Complex64::new(center.norm(), 0.0)
        } else {
            center
        };
        let key = (center.re.to_bits(), center.im.to_bits(), radius.to_bits());
        if let Some(v) = self.entries.read().ok().and_then(|m| m.get(&key).copied()) {
            return Ok(v);
        }
        let v = disk_mass(&self.weight, &Disk::new(center, radius)?, &self.plan)?;
        if let Ok(mut m) = self.entries.write() {
            m.insert(key, v);
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan() -> QuadraturePlan {
        QuadraturePlan::default()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn constant_disk_masses() {
        let w = Weight::standard(1.0);
        let m = disk_mass(&w, &Disk::new(c(0.0, 0.0), 1.0).unwrap(), &plan()).unwrap();
        assert!((m - 1.0).abs() < 1e-15);
        let m = disk_mass(&w, &Disk::new(c(3.0, 4.0), 2.0).unwrap(), &plan()).unwrap();
        assert!((m - 4.0).abs() < 1e-14);
    }

    #[test]
    fn power_weight_unit_disk_matches_radial_oracle() {
        // oracle: 2π∫₀¹ r(1+r)² dr by a separate 40-point rule = 17π/6
        let oracle = GaussLegendre40::integrate(0.0, 1.0, |r| 2.0 * PI * r * (1.0 + r).powi(2));
        assert!((oracle - 17.0 * PI / 6.0).abs() < 1e-12);
        let w = Weight::power(2.0).unwrap();
        let m = disk_mass(&w, &Disk::new(c(0.0, 0.0), 1.0).unwrap(), &plan()).unwrap();
        assert!((m - oracle).abs() < 1e-10 * oracle);
    }

    struct GaussLegendre40;
    impl GaussLegendre40 {
        fn integrate<F: FnMut(f64) -> f64>(a: f64, b: f64, f: F) -> f64 {
            crate::quadrature::GaussLegendre::new(40).integrate(a, b, f)
        }
    }

    #[test]
    fn square_masses() {
        let w = Weight::standard(1.0);
        let m = square_mass(&w, &Square::new(c(0.0, 0.0), 1.0).unwrap(), &plan()).unwrap();
        assert!((m - 1.0 / PI).abs() < 1e-15);
        let w0 = Weight::power(0.0).unwrap();
        let m = square_mass(&w0, &Square::new(c(5.0, 0.0), 2.0).unwrap(), &plan()).unwrap();
        assert!((m - 4.0).abs() < 1e-12);
    }

    #[test]
    fn power_square_against_split_tensor_oracle() {
        // Independent oracle: split the square at the kink (origin) and use a
        // high-order tensor rule on each quarter.
        let rule = crate::quadrature::GaussLegendre::new(60);
        let f = |x: f64, y: f64| (1.0 + (x * x + y * y).sqrt()).powi(2);
        let mut oracle = 0.0;
        for &(x0, x1) in &[(-0.5, 0.0), (0.0, 0.5)] {
            for &(y0, y1) in &[(-0.5, 0.0), (0.0, 0.5)] {
                oracle += rule.integrate(x0, x1, |x| rule.integrate(y0, y1, |y| f(x, y)));
            }
        }
        let w = Weight::power(2.0).unwrap();
        let m = square_mass(&w, &Square::new(c(0.0, 0.0), 1.0).unwrap(), &plan()).unwrap();
        assert!((m - oracle).abs() < 1e-8, "{m} vs {oracle}");
    }

    #[test]
    fn table_weight_interpolates() {
        let w = Weight::radial_table(vec![[0.0, 1.0], [1.0, 3.0], [2.0, 3.0]]).unwrap();
        assert_eq!(w.radial_value(0.5), 2.0);
        assert_eq!(w.radial_value(10.0), 3.0);
        // ∫_{D(0,1)} (1+2r) dA = 2π(1/2 + 2/3)
        let m = disk_mass(&w, &Disk::new(c(0.0, 0.0), 1.0).unwrap(), &plan()).unwrap();
        assert!((m - 2.0 * PI * (0.5 + 2.0 / 3.0)).abs() < 1e-10);
        assert!(Weight::radial_table(vec![[1.0, 1.0], [1.0, 2.0]]).is_err());
        assert!(Weight::radial_table(vec![[0.0, -1.0]]).is_err());
    }

    #[test]
    fn vanishing_weight_is_a_contract_violation() {
        let w = Weight::expression(Expr::parse("abs(x) - x").unwrap()).unwrap();
        let err = disk_mass(&w, &Disk::new(c(0.0, 0.0), 1.0).unwrap(), &plan());
        assert!(matches!(err, Err(WfockError::Contract(_))), "{err:?}");
        let w = Weight::radial_table(vec![[0.0, 0.0], [1.0, 1.0]]).unwrap();
        let err = disk_mass(&w, &Disk::new(c(0.0, 0.0), 0.5).unwrap(), &plan());
        assert!(matches!(err, Err(WfockError::Contract(_))), "{err:?}");
    }

    #[test]
    fn invalid_shapes_are_rejected() {
        assert!(Disk::new(c(0.0, 0.0), 0.0).is_err());
        assert!(Square::new(c(0.0, 0.0), -1.0).is_err());
        assert!(Weight::expression(Expr::parse("w + 1").unwrap()).is_err());
    }

    #[test]
    fn disk_mass_is_monotone_in_radius() {
        let w = Weight::power(-1.0).unwrap();
        let mut prev = 0.0;
        for k in 1..=10 {
            let m = disk_mass(&w, &Disk::new(c(1.5, -0.5), 0.25 * k as f64).unwrap(), &plan()).unwrap();
            assert!(m > prev);
            prev = m;
        }
    }

    #[test]
    fn disk_mass_converges_under_refinement() {
        let w = Weight::power(2.0).unwrap();
        let d = Disk::new(c(0.3, 0.2), 1.0).unwrap();
        let a = disk_mass(&w, &d, &plan()).unwrap();
        let b = disk_mass(&w, &d, &plan().refined()).unwrap();
        assert!((a - b).abs() <= 1e-10 * a);
    }

    #[test]
    fn nonradial_disk_mass() {
        // w = 1 + x² on D(0,1): π + π/4
        let w = Weight::expression(Expr::parse("1 + x^2").unwrap()).unwrap();
        let m = disk_mass(&w, &Disk::new(c(0.0, 0.0), 1.0).unwrap(), &plan()).unwrap();
        assert!((m - 1.25 * PI).abs() < 1e-10);
    }

    #[test]
    fn ap_constant_of_constant_weight_is_one() {
        let w = Weight::constant(2.5).unwrap();
        for p in [1.0, 1.5, 2.0, 4.0] {
            let a = restricted_ap_constant(&w, p, 1.0, 3.0, 0.5, &plan()).unwrap();
            assert!((a.value - 1.0).abs() < 1e-12, "p={p}: {}", a.value);
            assert!(!a.divergent);
        }
    }

    #[test]
    fn ap_constant_rejects_bad_grid() {
        let w = Weight::power(1.0).unwrap();
        assert!(restricted_ap_constant(&w, 2.0, 1.0, 3.0, 2.0, &plan()).is_err());
        assert!(restricted_ap_constant(&w, 0.5, 1.0, 3.0, 0.5, &plan()).is_err());
    }

    #[test]
    fn ap_constant_is_monotone_in_extent() {
        let w = Weight::power(2.0).unwrap();
        let a = restricted_ap_constant(&w, 2.0, 1.0, 4.0, 0.5, &plan()).unwrap();
        let b = restricted_ap_constant(&w, 2.0, 1.0, 8.0, 0.5, &plan()).unwrap();
        assert!(b.value >= a.value);
    }

    #[test]
    fn growth_constant_of_constant_weight() {
        let w = Weight::constant(1.0).unwrap();
        let g = growth_constant(&w, 1.0, 4.0, &plan()).unwrap();
        assert!((g.c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_totals_closed_form() {
        let t = gaussian_total(&Weight::standard(1.0), 1.0, &plan()).unwrap();
        assert!((t.value - 1.0).abs() < 1e-10);
        let t = gaussian_total(&Weight::power(0.0).unwrap(), 1.0, &plan()).unwrap();
        assert!((t.value - PI).abs() < 1e-9);
    }

    #[test]
    fn cache_matches_fresh_evaluation() {
        let w = Weight::power(2.0).unwrap();
        let cache = WeightMassCache::new(w.clone(), plan());
        let a = cache.disk_mass(c(1.0, 1.0), 0.3).unwrap();
        let b = cache.disk_mass(c(0.0, 2f64.sqrt()), 0.3).unwrap();
        assert_eq!(cache.len(), 1);
        let fresh = disk_mass(&w, &Disk::new(c(1.0, 1.0), 0.3).unwrap(), &plan()).unwrap();
        assert!((a - fresh).abs() <= cache.tolerance() * fresh);
        assert!((a - b).abs() <= cache.tolerance() * fresh);
    }
}
