//! Positive measures on ℂ and the two criterion functionals built on them:
//! the averaging function μ̂_{w,r}(z) = μ(D(z,r))/w(D(z,r)) and the Berezin
//! transform μ̃(z) = ∫ |b_z|² e^{−α|ξ|²} dμ(ξ).

use std::cell::Cell;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WfockError};
use crate::expr::{Bindings, Expr, Var};
use crate::fock_model::FockModel;
use crate::profile::LazyProfile;
use crate::quadrature::{self, log_window, QuadraturePlan, SCAN_LIMIT};
use crate::weights::{Disk, Weight, WeightMassCache};

/// Point mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: Complex64,
    pub mass: f64,
}

/// Multiplier ψ of a weighted composition operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Psi {
    /// Σ c_k z^k, constant term first.
    Polynomial { coefficients: Vec<Complex64> },
    /// e^{cz}
    Exponential { c: Complex64 },
}

impl Default for Psi {
    fn default() -> Self {
        Psi::Polynomial {
            coefficients: vec![Complex64::new(1.0, 0.0)],
        }
    }
}

impl Psi {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            Psi::Polynomial { coefficients } => horner(coefficients, z),
            Psi::Exponential { c } => (c * z).exp(),
        }
    }

    /// |ψ(z)| depends on |z| only.
    fn has_radial_modulus(&self) -> bool {
        match self {
            Psi::Polynomial { coefficients } => coefficients.iter().filter(|c| c.norm() > 0.0).count() <= 1,
            Psi::Exponential { c } => c.norm() == 0.0,
        }
    }
}

fn horner(c: &[Complex64], z: Complex64) -> Complex64 {
    c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, k| acc * z + k)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureKind {
    Atomic {
        atoms: Vec<Atom>,
    },
    /// Density against dA; the expression may use the weight value `w`.
    Density {
        density: Expr,
    },
    /// Pull-back measure of φ(z) = az + b with multiplier ψ.
    Pullback {
        a: Complex64,
        b: Complex64,
        psi: Psi,
    },
    /// Measure μ_g of the Volterra operator with polynomial symbol g
    /// (coefficients constant term first).
    Volterra {
        g: Vec<Complex64>,
    },
}

/// A positive Borel measure, scaled by a positive constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpec {
    pub kind: MeasureKind,
    pub scale: f64,
}

impl MeasureSpec {
    pub fn atomic(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(WfockError::invalid("an atomic measure needs at least one atom"));
        }
        if atoms.iter().any(|a| !(a.mass > 0.0 && a.mass.is_finite())) {
            return Err(WfockError::invalid("atom masses must be positive"));
        }
        if atoms
            .iter()
            .any(|a| !a.location.re.is_finite() || !a.location.im.is_finite())
        {
            return Err(WfockError::invalid("atom locations must be finite"));
        }
        Ok(Self::wrap(MeasureKind::Atomic { atoms }))
    }

    pub fn density(density: Expr) -> Self {
        Self::wrap(MeasureKind::Density { density })
    }

    /// The measure w·dA.
    pub fn weight_measure() -> Self {
        Self::density(Expr::parse("w").expect("literal parses"))
    }

    pub fn pullback(a: Complex64, b: Complex64, psi: Psi) -> Result<Self> {
        if a.norm() == 0.0 {
            return Err(WfockError::DegenerateMap);
        }
        Ok(Self::wrap(MeasureKind::Pullback { a, b, psi }))
    }

    pub fn volterra(g: Vec<Complex64>) -> Self {
        Self::wrap(MeasureKind::Volterra { g })
    }

    fn wrap(kind: MeasureKind) -> Self {
        MeasureSpec { kind, scale: 1.0 }
    }

    /// c·μ.
    pub fn scaled(mut self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(WfockError::invalid("measure scale must be positive"));
        }
        self.scale *= c;
        Ok(self)
    }

    pub fn atoms(&self) -> Option<&[Atom]> {
        match &self.kind {
            MeasureKind::Atomic { atoms } => Some(atoms),
            _ => None,
        }
    }

    /// Volterra symbols of degree > 1 fall outside the linear-symbol setting.
    pub fn beyond_hypothesis(&self) -> bool {
        match &self.kind {
            MeasureKind::Volterra { g } => g.iter().skip(2).any(|c| c.norm() > 0.0),
            _ => false,
        }
    }

    /// The zero measure (a Volterra symbol with g′ ≡ 0).
    pub fn is_zero(&self) -> bool {
        match &self.kind {
            MeasureKind::Volterra { g } => g.iter().skip(1).all(|c| c.norm() == 0.0),
            _ => false,
        }
    }

    /// Rotation invariance of μ given the weight.
    pub fn is_radial(&self, weight: &Weight) -> bool {
        match &self.kind {
            MeasureKind::Atomic { .. } => false,
            MeasureKind::Density { density } => {
                density.depends_only_on_modulus() && (!density.uses(Var::W) || weight.is_radial())
            }
            MeasureKind::Pullback { b, psi, .. } => b.norm() == 0.0 && psi.has_radial_modulus() && weight.is_radial(),
            MeasureKind::Volterra { g } => {
                weight.is_radial() && g.iter().skip(1).filter(|c| c.norm() > 0.0).count() <= 1
            }
        }
    }
}

/// Density of the pull-back measure of φ(z) = az + b:
/// u ↦ |ψ(v)|² e^{−α(|v|²−|u|²)} w(v)/|a|² with v = φ^{−1}(u).
#[derive(Debug, Clone)]
pub struct PullbackDensity {
    a: Complex64,
    b: Complex64,
    psi: Psi,
    weight: Weight,
    alpha: f64,
}

impl PullbackDensity {
    pub fn value(&self, u: Complex64) -> f64 {
        let v = (u - self.b) / self.a;
        let exponent = -self.alpha * (v.norm_sqr() - u.norm_sqr());
        self.psi.eval(v).norm_sqr() * exponent.exp() * self.weight.value(v) / self.a.norm_sqr()
    }

    /// ln of [`Self::value`], finite where the value itself overflows.
    pub fn ln_value(&self, u: Complex64) -> f64 {
        let v = (u - self.b) / self.a;
        let exponent = -self.alpha * (v.norm_sqr() - u.norm_sqr());
        self.psi.eval(v).norm_sqr().ln() + exponent + self.weight.value(v).ln() - self.a.norm_sqr().ln()
    }

    /// φ^{−1} of the weight's kink at the origin.
    pub fn pole(&self) -> Complex64 {
        self.b
    }
}

pub fn pullback_density(a: Complex64, b: Complex64, psi: Psi, w: &Weight, alpha: f64) -> Result<PullbackDensity> {
    if a.norm() == 0.0 {
        return Err(WfockError::DegenerateMap);
    }
    if !(alpha > 0.0) {
        return Err(WfockError::invalid("alpha must be positive"));
    }
    Ok(PullbackDensity {
        a,
        b,
        psi,
        weight: w.clone(),
        alpha,
    })
}

/// Density of μ_g: z ↦ |g′(z)|²·w(D(z,1))/(1+|z|)².
#[derive(Debug)]
pub struct VolterraDensity {
    g_prime: Vec<Complex64>,
    masses: Arc<WeightMassCache>,
    profile: Option<LazyProfile>,
}

impl VolterraDensity {
    pub fn value(&self, z: Complex64) -> Result<f64> {
        let d = horner(&self.g_prime, z).norm_sqr();
        if d == 0.0 {
            return Ok(0.0);
        }
        let w1 = match &self.profile {
            Some(p) => p.value(z.norm())?,
            None => self.masses.disk_mass(z, 1.0)?,
        };
        Ok(d * w1 / (1.0 + z.norm()).powi(2))
    }
}

/// For radial weights the factor w(D(z,1)) is tabulated lazily in |z|.
pub fn volterra_density(g: &[Complex64], masses: Arc<WeightMassCache>) -> Result<VolterraDensity> {
    let g_prime: Vec<Complex64> = g.iter().enumerate().skip(1).map(|(k, c)| c * k as f64).collect();
    let profile = if masses.weight().is_radial() && !masses.weight().is_constant() {
        let source = Arc::clone(&masses);
        Some(LazyProfile::new(0.25, move |rho| {
            source.disk_mass(Complex64::new(rho, 0.0), 1.0)
        })?)
    } else {
        None
    };
    Ok(VolterraDensity {
        g_prime,
        masses,
        profile,
    })
}

#[derive(Debug)]
enum Induced {
    Expression(Expr),
    Pullback(PullbackDensity),
    Volterra(VolterraDensity),
}

/// A measure bound to a weight, α and quadrature plan.
///
/// Induced densities are built on first use and shared afterwards.
#[derive(Debug)]
pub struct MeasureContext {
    spec: MeasureSpec,
    alpha: f64,
    masses: Arc<WeightMassCache>,
    induced: OnceLock<std::result::Result<Induced, WfockError>>,
}

impl MeasureContext {
    pub fn new(spec: MeasureSpec, weight: Weight, alpha: f64, plan: QuadraturePlan) -> Self {
        Self::with_cache(spec, Arc::new(WeightMassCache::new(weight, plan)), alpha)
    }

    pub fn with_cache(spec: MeasureSpec, masses: Arc<WeightMassCache>, alpha: f64) -> Self {
        MeasureContext {
            spec,
            alpha,
            masses,
            induced: OnceLock::new(),
        }
    }

    pub fn spec(&self) -> &MeasureSpec {
        &self.spec
    }

    pub fn weight(&self) -> &Weight {
        self.masses.weight()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn plan(&self) -> &QuadraturePlan {
        self.masses.plan()
    }

    pub fn masses(&self) -> &Arc<WeightMassCache> {
        &self.masses
    }

    pub fn is_radial(&self) -> bool {
        self.spec.is_radial(self.weight())
    }

    fn induced(&self) -> Result<Option<&Induced>> {
        if self.spec.atoms().is_some() {
            return Ok(None);
        }
        let slot = self.induced.get_or_init(|| match &self.spec.kind {
            MeasureKind::Atomic { .. } => unreachable!("atomic measures have no density"),
            MeasureKind::Density { density } => Ok(Induced::Expression(density.clone())),
            MeasureKind::Pullback { a, b, psi } => {
                pullback_density(*a, *b, psi.clone(), self.weight(), self.alpha).map(Induced::Pullback)
            }
            MeasureKind::Volterra { g } => volterra_density(g, Arc::clone(&self.masses)).map(Induced::Volterra),
        });
        match slot {
            Ok(d) => Ok(Some(d)),
            Err(e) => Err(e.clone()),
        }
    }

    /// Density of μ against dA at z; `None` for atomic measures.
    pub fn density(&self, z: Complex64) -> Result<Option<f64>> {
        let Some(induced) = self.induced()? else {
            return Ok(None);
        };
        let v = match induced {
            Induced::Expression(e) => {
                let w = if e.uses(Var::W) {
                    self.weight().value(z)
                } else {
                    f64::NAN
                };
                e.eval(&Bindings {
                    r: z.norm(),
                    x: z.re,
                    y: z.im,
                    w,
                })
            }
            Induced::Pullback(p) => p.value(z),
            Induced::Volterra(v) => v.value(z)?,
        };
        if !(v >= 0.0) || !v.is_finite() {
            return Err(WfockError::Contract(format!(
                "measure density is {v} at {z}; densities must be finite and nonnegative"
            )));
        }
        Ok(Some(v * self.spec.scale))
    }

    /// Density of a density-kind measure at z (0 for atomic measures).
    pub fn density_value(&self, z: Complex64) -> Result<f64> {
        Ok(self.density(z)?.unwrap_or(0.0))
    }

    /// ln of the density at z (−∞ where it vanishes).
    pub fn ln_density_value(&self, z: Complex64) -> Result<f64> {
        if let Some(Induced::Pullback(p)) = self.induced()? {
            let v = p.ln_value(z) + self.spec.scale.ln();
            if v.is_nan() || v == f64::INFINITY {
                return Err(WfockError::Contract(format!(
                    "measure density has logarithm {v} at {z}; densities must be finite and nonnegative"
                )));
            }
            return Ok(v);
        }
        Ok(self.density_value(z)?.ln())
    }

    /// Center of polar coordinates that keeps the density smooth in angle and
    /// puts any kink on the radial axis.
    pub fn pole(&self) -> Complex64 {
        match &self.spec.kind {
            MeasureKind::Pullback { b, .. } => *b,
            _ => Complex64::new(0.0, 0.0),
        }
    }

    /// Radii (about the pole) where the density may fail to be smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        let w = self.weight().breakpoints();
        match &self.spec.kind {
            MeasureKind::Pullback { a, .. } => w.iter().map(|r| r * a.norm()).collect(),
            MeasureKind::Volterra { .. } => {
                let mut v = w;
                v.push(1.0);
                v
            }
            _ => w,
        }
    }
}

/// μ(D); atoms count when |location − center| < radius.
pub fn measure_disk_mass(ctx: &MeasureContext, d: &Disk) -> Result<f64> {
    if let Some(atoms) = ctx.spec.atoms() {
        return Ok(ctx.spec.scale
            * atoms
                .iter()
                .filter(|a| (a.location - d.center).norm() < d.radius)
                .map(|a| a.mass)
                .sum::<f64>());
    }
    if ctx.spec.is_zero() {
        return Ok(0.0);
    }
    let what = "measure disk mass";
    let failure: Cell<Option<WfockError>> = Cell::new(None);
    let eval = |z: Complex64| match ctx.density_value(z) {
        Ok(v) => v,
        Err(e) => {
            failure.set(Some(e));
            0.0
        }
    };
    let value = if ctx.is_radial() {
        quadrature::radial_disk_integral(
            what,
            |rho| eval(Complex64::new(rho, 0.0)),
            d.center.norm(),
            d.radius,
            &ctx.breakpoints(),
            ctx.plan(),
        )
    } else {
        quadrature::pole_polar_disk(
            what,
            eval,
            d.center,
            d.radius,
            ctx.pole(),
            &ctx.breakpoints(),
            ctx.plan(),
        )
    };
    if let Some(e) = failure.take() {
        return Err(e);
    }
    value
}

/// μ̂_{w,r}(z) = μ(D(z,r))/w(D(z,r)).
pub fn average_function(ctx: &MeasureContext, r: f64, z: Complex64) -> Result<f64> {
    let disk = Disk::new(z, r)?;
    let w = ctx.masses.disk_mass(z, r)?;
    if !(w > 0.0) {
        return Err(WfockError::Contract(format!("weight mass of D({z}, {r}) is {w}")));
    }
    Ok(measure_disk_mass(ctx, &disk)? / w)
}

/// μ̃(z) by direct quadrature of |b_z(ξ)|² e^{−α|ξ|²} against μ.
///
/// Atomic measures are summed exactly; densities are integrated in polar
/// coordinates about the measure's pole out to where the integrand falls
/// below e^{−80} of its peak.
pub fn berezin_transform(m: &FockModel, ctx: &MeasureContext, z: Complex64) -> Result<f64> {
    m.check_point(z)?;
    let beta = m.monomial_coefficients(&m.normalized_kernel_coefficients(z));
    let kernel_sq = |xi: Complex64| m.damped_value(&beta, xi).norm_sqr();
    if let Some(atoms) = ctx.spec.atoms() {
        return Ok(ctx.spec.scale * atoms.iter().map(|a| a.mass * kernel_sq(a.location)).sum::<f64>());
    }
    if ctx.spec.is_zero() {
        return Ok(0.0);
    }
    let what = "berezin transform";
    let pole = ctx.pole();
    let plan = ctx.plan();
    let failure: Cell<Option<WfockError>> = Cell::new(None);
    let integrand = |xi: Complex64| match ctx.density_value(xi) {
        Ok(v) => v * kernel_sq(xi),
        Err(e) => {
            failure.set(Some(e));
            0.0
        }
    };
    let envelope = |rho: f64| {
        let best = (0..16)
            .map(|k| integrand(pole + Complex64::from_polar(rho, 2.0 * PI * k as f64 / 16.0)))
            .fold(0.0, f64::max);
        if best > 0.0 && rho > 0.0 {
            best.ln() + rho.ln()
        } else {
            f64::NEG_INFINITY
        }
    };
    let window = log_window(&envelope, plan.scan_step);
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let Some((peak, _, hi)) = window else {
        return Ok(0.0);
    };
    if hi >= SCAN_LIMIT {
        return Err(WfockError::TailNotCertified {
            what: what.into(),
            tail: (envelope(SCAN_LIMIT) - peak).exp(),
            cutoff: SCAN_LIMIT,
        });
    }
    let value = quadrature::adaptive_try(what, 0.0, hi, &ctx.breakpoints(), plan, |rho| {
        if rho == 0.0 {
            return Ok(0.0);
        }
        let ring = quadrature::angular_integral(what, plan, |t| integrand(pole + Complex64::from_polar(rho, t)))?;
        Ok(rho * ring)
    })?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ctx(spec: MeasureSpec, w: Weight) -> MeasureContext {
        MeasureContext::new(spec, w, 1.0, QuadraturePlan::default())
    }

    fn gaussian() -> MeasureSpec {
        MeasureSpec::density(Expr::parse("exp(-r^2)/pi").unwrap())
    }

    fn atom(re: f64, im: f64, mass: f64) -> MeasureSpec {
        MeasureSpec::atomic(vec![Atom {
            location: c(re, im),
            mass,
        }])
        .unwrap()
    }

    #[test]
    fn disk_masses_of_simple_measures() {
        let m = ctx(atom(0.0, 0.0, 1.0), Weight::standard(1.0));
        assert_eq!(
            measure_disk_mass(&m, &Disk::new(c(0.0, 0.0), 1.0).unwrap()).unwrap(),
            1.0
        );
        assert_eq!(
            measure_disk_mass(&m, &Disk::new(c(1.0, 0.0), 1.0).unwrap()).unwrap(),
            0.0
        );
        let m = ctx(
            MeasureSpec::density(Expr::parse("1/pi").unwrap()),
            Weight::standard(1.0),
        );
        let v = measure_disk_mass(&m, &Disk::new(c(0.0, 0.0), 1.0).unwrap()).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        let m = ctx(gaussian(), Weight::standard(1.0));
        let v = measure_disk_mass(&m, &Disk::new(c(0.0, 0.0), 0.5).unwrap()).unwrap();
        assert!((v - (1.0 - (-0.25f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn weight_measure_averages_to_one() {
        for w in [
            Weight::standard(1.0),
            Weight::power(2.0).unwrap(),
            Weight::power(-1.0).unwrap(),
        ] {
            let m = ctx(MeasureSpec::weight_measure(), w);
            for z in [c(0.0, 0.0), c(0.2, 0.1), c(3.0, -1.0)] {
                for r in [0.3, 1.0] {
                    let v = average_function(&m, r, z).unwrap();
                    assert!((v - 1.0).abs() < 1e-9, "{v}");
                }
            }
        }
    }

    #[test]
    fn atom_average_at_origin() {
        let m = ctx(atom(0.0, 0.0, 1.0), Weight::standard(1.0));
        assert!((average_function(&m, 1.0, c(0.0, 0.0)).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn volterra_average_at_origin() {
        let m = ctx(
            MeasureSpec::volterra(vec![c(0.0, 0.0), c(1.0, 0.0)]),
            Weight::standard(1.0),
        );
        let v = average_function(&m, 0.5, c(0.0, 0.0)).unwrap();
        let oracle = 2.0 * PI * (1.5f64.ln() - 1.0 / 3.0) / 0.25;
        assert!((v - oracle).abs() < 1e-10 * oracle, "{v} vs {oracle}");
        assert!((v - 1.8129).abs() < 1e-4);
    }

    #[test]
    fn volterra_densities() {
        let cache = Arc::new(WeightMassCache::new(Weight::standard(1.0), QuadraturePlan::default()));
        let d = volterra_density(&[c(5.0, 0.0)], Arc::clone(&cache)).unwrap();
        assert_eq!(d.value(c(1.0, 2.0)).unwrap(), 0.0);
        let d = volterra_density(&[c(1.0, 0.0), c(2.0, 1.0)], Arc::clone(&cache)).unwrap();
        let z = c(0.5, -1.5);
        let want = 5.0 / (1.0 + z.norm()).powi(2);
        assert!((d.value(z).unwrap() - want).abs() < 1e-14);
        let spec = MeasureSpec::volterra(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(spec.beyond_hypothesis());
        let d = volterra_density(&[c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], cache).unwrap();
        assert!((d.value(z).unwrap() - 4.0 * z.norm_sqr() / (1.0 + z.norm()).powi(2)).abs() < 1e-14);
    }

    #[test]
    fn volterra_profile_matches_direct_masses() {
        let cache = Arc::new(WeightMassCache::new(
            Weight::power(2.0).unwrap(),
            QuadraturePlan::default(),
        ));
        let d = volterra_density(&[c(0.0, 0.0), c(1.0, 0.0)], Arc::clone(&cache)).unwrap();
        for rho in [0.0, 0.3, 0.99, 1.0, 1.01, 2.7, 6.2] {
            let z = Complex64::from_polar(rho, 0.7);
            let direct = cache.disk_mass(z, 1.0).unwrap() / (1.0 + rho).powi(2);
            assert!((d.value(z).unwrap() - direct).abs() < 1e-9 * direct, "{rho}");
        }
    }

    #[test]
    fn pullback_identity_and_contraction() {
        let w = Weight::standard(1.0);
        let id = pullback_density(c(1.0, 0.0), c(0.0, 0.0), Psi::default(), &w, 1.0).unwrap();
        assert!((id.value(c(0.3, 2.0)) - 1.0 / PI).abs() < 1e-15);
        let half = pullback_density(c(0.5, 0.0), c(0.0, 0.0), Psi::default(), &w, 1.0).unwrap();
        let u = c(0.7, -0.2);
        let want = 4.0 / PI * (-3.0 * u.norm_sqr()).exp();
        assert!((half.value(u) - want).abs() < 1e-14 * want);
        let two = pullback_density(c(2.0, 0.0), c(0.0, 0.0), Psi::default(), &w, 1.0).unwrap();
        let want = (0.75 * u.norm_sqr()).exp() / (4.0 * PI);
        assert!((two.value(u) - want).abs() < 1e-14 * want);
        assert_eq!(
            pullback_density(c(0.0, 0.0), c(1.0, 0.0), Psi::default(), &w, 1.0).unwrap_err(),
            WfockError::DegenerateMap
        );
        assert_eq!(
            MeasureSpec::pullback(c(0.0, 0.0), c(0.0, 0.0), Psi::default()).unwrap_err(),
            WfockError::DegenerateMap
        );
    }

    #[test]
    fn pullback_matches_set_definition() {
        // ∫_E density dA against ∫_{φ^{-1}(E)} |ψ|² e^{−α(|z|²−|φ(z)|²)} w dA
        let w = Weight::power(2.0).unwrap();
        let plan = QuadraturePlan::default();
        let a = c(0.5, 0.5);
        let b = c(0.25, -0.5);
        let psi = Psi::Polynomial {
            coefficients: vec![c(1.0, 0.0), c(0.0, 0.5)],
        };
        let spec = MeasureSpec::pullback(a, b, psi.clone()).unwrap();
        let m = ctx(spec, w.clone());
        for (center, radius) in [(c(0.0, 0.0), 1.0), (c(1.0, 0.0), 0.5)] {
            let lhs = measure_disk_mass(&m, &Disk::new(center, radius).unwrap()).unwrap();
            // φ^{-1}(D(c, r)) = D((c − b)/a, r/|a|)
            let pre_center = (center - b) / a;
            let rhs = quadrature::pole_polar_disk(
                "oracle",
                |z| {
                    let phi = a * z + b;
                    psi.eval(z).norm_sqr() * (-(z.norm_sqr() - phi.norm_sqr())).exp() * w.value(z)
                },
                pre_center,
                radius / a.norm(),
                c(0.0, 0.0),
                &[],
                &plan,
            )
            .unwrap();
            assert!((lhs - rhs).abs() < 1e-6 * rhs, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn radial_detection() {
        let w = Weight::power(2.0).unwrap();
        assert!(gaussian().is_radial(&w));
        assert!(MeasureSpec::weight_measure().is_radial(&w));
        assert!(!MeasureSpec::density(Expr::parse("1 + x^2").unwrap()).is_radial(&w));
        assert!(MeasureSpec::volterra(vec![c(1.0, 0.0), c(2.0, 0.0)]).is_radial(&w));
        assert!(!MeasureSpec::volterra(vec![c(1.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)]).is_radial(&w));
        assert!(MeasureSpec::pullback(c(0.5, 0.0), c(0.0, 0.0), Psi::default())
            .unwrap()
            .is_radial(&w));
        assert!(!MeasureSpec::pullback(c(0.5, 0.0), c(1.0, 0.0), Psi::default())
            .unwrap()
            .is_radial(&w));
        assert!(!atom(0.0, 0.0, 1.0).is_radial(&w));
    }

    #[test]
    fn berezin_of_atom_and_weight_measure() {
        let model = FockModel::build(Weight::standard(1.0), 1.0, 60, QuadraturePlan::default()).unwrap();
        let m = ctx(atom(0.0, 0.0, 1.0), Weight::standard(1.0));
        let v = berezin_transform(&model, &m, c(1.0, 0.0)).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-12);
        let m = ctx(MeasureSpec::weight_measure(), Weight::standard(1.0));
        for z in [c(0.0, 0.0), c(1.0, 1.0)] {
            let v = berezin_transform(&model, &m, z).unwrap();
            assert!((v - 1.0).abs() < 1e-8, "{v}");
        }
    }

    #[test]
    fn berezin_of_gaussian_density() {
        let model = FockModel::build(Weight::standard(1.0), 1.0, 60, QuadraturePlan::default()).unwrap();
        let m = ctx(gaussian(), Weight::standard(1.0));
        for z in [c(0.0, 0.0), c(0.6, -0.8), c(2.0, 0.0)] {
            let v = berezin_transform(&model, &m, z).unwrap();
            let want = 0.5 * (-z.norm_sqr() / 2.0).exp();
            assert!((v - want).abs() < 1e-9, "{v} vs {want}");
        }
    }

    #[test]
    fn measures_are_linear_in_scale() {
        let w = Weight::power(2.0).unwrap();
        let z = c(0.4, 0.9);
        let base = ctx(gaussian(), w.clone());
        let triple = ctx(gaussian().scaled(3.0).unwrap(), w);
        let a = average_function(&base, 0.3, z).unwrap();
        let b = average_function(&triple, 0.3, z).unwrap();
        assert!((b - 3.0 * a).abs() < 1e-12 * b);
    }

    #[test]
    fn negative_density_is_rejected() {
        let m = ctx(MeasureSpec::density(Expr::parse("x").unwrap()), Weight::standard(1.0));
        let err = measure_disk_mass(&m, &Disk::new(c(0.0, 0.0), 1.0).unwrap()).unwrap_err();
        assert!(matches!(err, WfockError::Contract(_)));
    }
}
