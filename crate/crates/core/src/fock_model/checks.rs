use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::FockModel;
use crate::error::{Result, WfockError};
use crate::quadrature::{self, log_window, polar_disk, pole_polar_disk, SCAN_LIMIT};
use crate::weights::WeightMassCache;

/// One sampled value of a kernel quantity at a pair of points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSample {
    pub a: Complex64,
    pub z: Complex64,
    pub value: f64,
}

/// Sampled values with their extremes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioTable {
    pub samples: Vec<KernelSample>,
    pub min: f64,
    pub max: f64,
}

impl RatioTable {
    fn from_samples(samples: Vec<KernelSample>) -> Self {
        let min = samples.iter().map(|s| s.value).fold(f64::INFINITY, f64::min);
        let max = samples.iter().map(|s| s.value).fold(f64::NEG_INFINITY, f64::max);
        RatioTable { samples, min, max }
    }

    /// max/min; 1 for a single sample.
    pub fn spread(&self) -> f64 {
        self.max / self.min
    }
}

fn mass_cache(m: &FockModel) -> WeightMassCache {
    WeightMassCache::new(m.weight().clone(), *m.plan())
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(WfockError::invalid("disk radius must be positive"))
    }
}

/// B_a(a)·w(D(a, r))·e^{−α|a|²} over the grid.
pub fn kernel_norm_check(m: &FockModel, r: f64, grid: &[Complex64]) -> Result<RatioTable> {
    check_radius(r)?;
    let cache = mass_cache(m);
    let samples = grid
        .par_iter()
        .map(|&a| {
            m.check_point(a)?;
            let value = m.damped_kernel_diagonal(a) * cache.disk_mass(a, r)?;
            Ok(KernelSample { a, z: a, value })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RatioTable::from_samples(samples))
}

/// |B_a(z)|·w(D(z,r))^{1/2}·w(D(a,r))^{1/2}·e^{−(α/2)(|a|²+|z|²)} over the pairs.
pub fn pointwise_upper_check(m: &FockModel, r: f64, pairs: &[(Complex64, Complex64)]) -> Result<RatioTable> {
    check_radius(r)?;
    let cache = mass_cache(m);
    let samples = pairs
        .par_iter()
        .map(|&(a, z)| {
            m.check_point(a)?;
            m.check_point(z)?;
            let masses = (cache.disk_mass(a, r)? * cache.disk_mass(z, r)?).sqrt();
            Ok(KernelSample {
                a,
                z,
                value: m.damped_kernel_modulus(a, z) * masses,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RatioTable::from_samples(samples))
}

/// Outcome of the local lower-bound scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundScan {
    pub delta: f64,
    pub constant: f64,
    /// Minimum of the diagonal quantity (the δ → 0 limit).
    pub diagonal_min: f64,
    pub floor: f64,
    /// (δ, c(δ)) for every candidate scanned.
    pub profile: Vec<(f64, f64)>,
}

/// Relative floor below which c(δ) counts as degenerate.
pub const LOWER_BOUND_FLOOR: f64 = 1e-3;

/// For each δ, c(δ) = min over grid a and sampled z ∈ D(a, δ) of
/// |B_a(z)|·w(D(a,r))·e^{−(α/2)(|a|²+|z|²)}. The disk D(a, δ) is sampled on
/// four concentric circles with `angles` points each plus its center.
pub fn local_lower_bound_scan(
    m: &FockModel,
    r: f64,
    radii: &[f64],
    grid: &[Complex64],
    angles: usize,
) -> Result<LowerBoundScan> {
    check_radius(r)?;
    if radii.is_empty() || radii.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
        return Err(WfockError::invalid("candidate radii must lie in (0, 1)"));
    }
    if radii.windows(2).any(|p| p[1] >= p[0]) {
        return Err(WfockError::invalid("candidate radii must be strictly decreasing"));
    }
    if grid.is_empty() || angles == 0 {
        return Err(WfockError::invalid("lower-bound scan needs grid points and angles"));
    }
    let cache = mass_cache(m);
    let masses = grid
        .par_iter()
        .map(|&a| {
            m.check_point(a)?;
            cache.disk_mass(a, r)
        })
        .collect::<Result<Vec<f64>>>()?;
    let diagonal_min = grid
        .iter()
        .zip(&masses)
        .map(|(&a, w)| m.damped_kernel_diagonal(a) * w)
        .fold(f64::INFINITY, f64::min);
    let floor = LOWER_BOUND_FLOOR * diagonal_min;
    const RINGS: usize = 4;
    let mut profile = Vec::with_capacity(radii.len());
    for &delta in radii {
        let c = grid
            .par_iter()
            .zip(masses.par_iter())
            .map(|(&a, &w)| {
                let mut low = m.damped_kernel_diagonal(a) * w;
                for ring in 1..=RINGS {
                    let rho = delta * ring as f64 / RINGS as f64 * (1.0 - 1e-9);
                    for k in 0..angles {
                        let z = a + Complex64::from_polar(rho, 2.0 * PI * k as f64 / angles as f64);
                        m.check_point(z)?;
                        low = low.min(m.damped_kernel_modulus(a, z) * w);
                    }
                }
                Ok(low)
            })
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        profile.push((delta, c));
    }
    match profile.iter().find(|(_, c)| *c >= floor) {
        Some(&(delta, constant)) => Ok(LowerBoundScan {
            delta,
            constant,
            diagonal_min,
            floor,
            profile,
        }),
        None => Err(WfockError::ModelResolution(format!(
            "no candidate radius keeps the local lower bound above {floor:e}; increase the degree"
        ))),
    }
}

/// |e_k(z)|/‖B_z‖ maximized over 8 angles on each circle |z| = radius.
pub fn weak_convergence_profile(m: &FockModel, k: usize, radii: &[f64]) -> Result<Vec<f64>> {
    if k > m.degree() {
        return Err(WfockError::invalid(format!("basis index {k} exceeds the model degree")));
    }
    radii
        .iter()
        .map(|&rho| {
            let mut best: f64 = 0.0;
            for j in 0..8 {
                let z = Complex64::from_polar(rho, 2.0 * PI * j as f64 / 8.0);
                m.check_point(z)?;
                let e = m.damped_basis_values(z);
                let norm = e.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                best = best.max(e[k].norm() / norm);
            }
            Ok(best)
        })
        .collect()
}

/// Norms of one sample function under the two weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormRatio {
    pub averaged_norm_sq: f64,
    pub norm_sq: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormRatioTable {
    pub entries: Vec<NormRatio>,
    pub min: f64,
    pub max: f64,
}

impl NormRatioTable {
    pub fn spread(&self) -> f64 {
        self.max / self.min
    }
}

/// ‖f‖² under the weight ŵ_r = w(D(·, r)) against ‖f‖² under w, for sample
/// functions given by their coefficients in the orthonormal basis.
pub fn norm_equivalence_check(m: &FockModel, r: f64, samples: &[Vec<Complex64>]) -> Result<NormRatioTable> {
    check_radius(r)?;
    if samples.is_empty() {
        return Err(WfockError::invalid("norm equivalence needs at least one sample"));
    }
    let cache = mass_cache(m);
    let entries = samples
        .iter()
        .map(|c| {
            if c.len() > m.dim() {
                return Err(WfockError::invalid("sample degree exceeds the model degree"));
            }
            let norm_sq: f64 = c.iter().map(|v| v.norm_sqr()).sum();
            if !(norm_sq > 0.0) {
                return Err(WfockError::invalid("sample function is zero"));
            }
            let beta = m.monomial_coefficients(c);
            let averaged_norm_sq = averaged_norm_sq(m, &cache, r, &beta)?;
            Ok(NormRatio {
                averaged_norm_sq,
                norm_sq,
                ratio: averaged_norm_sq / norm_sq,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let min = entries.iter().map(|e| e.ratio).fold(f64::INFINITY, f64::min);
    let max = entries.iter().map(|e| e.ratio).fold(f64::NEG_INFINITY, f64::max);
    Ok(NormRatioTable { entries, min, max })
}

fn averaged_norm_sq(m: &FockModel, cache: &WeightMassCache, r: f64, beta: &[Complex64]) -> Result<f64> {
    let what = "averaged-weight norm";
    let alpha = m.alpha();
    let scales = m.log_scales();
    let live: Vec<(usize, f64)> = beta
        .iter()
        .enumerate()
        .filter(|(_, b)| b.norm_sqr() > 0.0)
        .map(|(k, b)| (k, b.norm_sqr().ln() + 2.0 * scales[k]))
        .collect();
    // ln of (1/2π)∫_0^{2π} |f|² e^{−α|z|²} dθ on the circle of radius ρ
    let ln_circle = |rho: f64| -> f64 {
        if rho <= 0.0 {
            return live
                .iter()
                .find(|(k, _)| *k == 0)
                .map(|(_, l)| *l)
                .unwrap_or(f64::NEG_INFINITY);
        }
        let terms: Vec<f64> = live
            .iter()
            .map(|(k, l)| l + 2.0 * *k as f64 * rho.ln() - alpha * rho * rho)
            .collect();
        quadrature::log_sum_exp(&terms)
    };
    if m.weight().is_radial() {
        let mass = |rho: f64| cache.disk_mass(Complex64::new(rho, 0.0), r);
        let phi = |rho: f64| {
            let w = mass(rho).unwrap_or(0.0);
            if w > 0.0 {
                ln_circle(rho) + w.ln() + rho.max(f64::MIN_POSITIVE).ln()
            } else {
                f64::NEG_INFINITY
            }
        };
        let Some((peak, _, hi)) = log_window(&phi, m.plan().scan_step) else {
            return Err(WfockError::Contract("averaged weight vanishes".into()));
        };
        if hi >= SCAN_LIMIT {
            return Err(WfockError::TailNotCertified {
                what: what.into(),
                tail: 1.0,
                cutoff: SCAN_LIMIT,
            });
        }
        let integral = quadrature::adaptive_try(what, 0.0, hi, &[], m.plan(), |rho| {
            let w = mass(rho)?;
            Ok((ln_circle(rho) - peak).exp() * w * rho)
        })?;
        return Ok(2.0 * PI * integral * peak.exp());
    }
    let envelope = |rho: f64| {
        (0..8)
            .map(|j| {
                cache
                    .disk_mass(Complex64::from_polar(rho, PI * j as f64 / 4.0), r)
                    .unwrap_or(0.0)
            })
            .fold(0.0, f64::max)
    };
    let phi = |rho: f64| {
        let w = envelope(rho);
        if w > 0.0 {
            ln_circle(rho) + w.ln() + rho.max(f64::MIN_POSITIVE).ln()
        } else {
            f64::NEG_INFINITY
        }
    };
    let Some((peak, _, hi)) = log_window(&phi, m.plan().scan_step) else {
        return Err(WfockError::Contract("averaged weight vanishes".into()));
    };
    let shift = -0.5 * peak;
    quadrature::adaptive_try(what, 0.0, hi, &[], m.plan(), |rho| {
        let mut err = None;
        let ring = quadrature::angular_integral(what, m.plan(), |t| {
            let z = Complex64::from_polar(rho, t);
            let f = m.damped_value(beta, z) * shift.exp();
            match cache.disk_mass(z, r) {
                Ok(w) => f.norm_sqr() * w,
                Err(e) => {
                    err = Some(e);
                    0.0
                }
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        Ok(ring? * rho)
    })
    .map(|v| v * peak.exp())
}

/// |f(z)|²e^{−α|z|²} against the local mean (1/w(D(z,r)))∫_{D(z,r)} |f|²e^{−α|ξ|²} w dA.
///
/// Each sample carries the largest ratio over the sample functions at that
/// grid point; `max` is the constant of the pointwise estimate.
pub fn pointwise_bound_check(
    m: &FockModel,
    r: f64,
    samples: &[Vec<Complex64>],
    grid: &[Complex64],
) -> Result<RatioTable> {
    check_radius(r)?;
    if samples.is_empty() {
        return Err(WfockError::invalid("pointwise bound needs at least one sample"));
    }
    let betas: Vec<Vec<Complex64>> = samples.iter().map(|c| m.monomial_coefficients(c)).collect();
    let cache = mass_cache(m);
    let weight = m.weight();
    let breakpoints = weight.breakpoints();
    let out = grid
        .par_iter()
        .map(|&z| {
            let mass = cache.disk_mass(z, r)?;
            let mut best: f64 = 0.0;
            for beta in &betas {
                let at = m.damped_value(beta, z).norm_sqr();
                let integrand = |xi: Complex64| m.damped_value(beta, xi).norm_sqr() * weight.value(xi);
                let what = "local mean of |f|²";
                let integral = if weight.is_radial() {
                    pole_polar_disk(what, integrand, z, r, Complex64::new(0.0, 0.0), &breakpoints, m.plan())?
                } else {
                    polar_disk(what, z, r, m.plan(), integrand)?
                };
                if integral > 0.0 {
                    best = best.max(at * mass / integral);
                }
            }
            Ok(KernelSample { a: z, z, value: best })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RatioTable::from_samples(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::QuadraturePlan;
    use crate::weights::Weight;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn model(w: Weight, n: usize) -> FockModel {
        FockModel::build(w, 1.0, n, QuadraturePlan::default()).unwrap()
    }

    fn grid(extent: f64, step: f64) -> Vec<Complex64> {
        crate::weights::lattice(step, extent)
    }

    #[test]
    fn kernel_norm_ratio_is_r_squared_for_standard_weight() {
        let m = model(Weight::standard(1.0), 80);
        let t = kernel_norm_check(&m, 1.0, &grid(3.0, 0.5)).unwrap();
        assert!(t.spread() <= 1.05);
        assert!((t.max - 1.0).abs() < 1e-8 && (t.min - 1.0).abs() < 1e-8);
    }

    #[test]
    fn kernel_norm_at_origin_is_mass_over_m0() {
        let w = Weight::power(2.0).unwrap();
        let m = model(w.clone(), 40);
        let t = kernel_norm_check(&m, 0.3, &[c(0.0, 0.0)]).unwrap();
        let mass =
            crate::weights::disk_mass(&w, &crate::weights::Disk::new(c(0.0, 0.0), 0.3).unwrap(), m.plan()).unwrap();
        let m0 = m.log_moments().unwrap()[0].exp();
        assert!((t.max - mass / m0).abs() < 1e-12 * t.max);
    }

    #[test]
    fn power_kernel_norm_spread_is_stable_in_degree() {
        let m = model(Weight::power(2.0).unwrap(), 80);
        let g = grid(3.0, 0.5);
        let a = kernel_norm_check(&m, 1.0, &g).unwrap().spread();
        let b = kernel_norm_check(&m.with_degree(100).unwrap(), 1.0, &g)
            .unwrap()
            .spread();
        assert!(a.is_finite() && (a / b - 1.0).abs() < 0.1, "{a} {b}");
    }

    #[test]
    fn upper_check_peaks_at_r_squared() {
        let m = model(Weight::standard(1.0), 80);
        let pts = grid(2.0, 1.0);
        let pairs: Vec<_> = pts.iter().flat_map(|&a| pts.iter().map(move |&z| (a, z))).collect();
        let t = pointwise_upper_check(&m, 0.5, &pairs).unwrap();
        // with w = 1/π, w(D) = r², so the bound is r² attained on the diagonal
        assert!((t.max - 0.25).abs() < 0.02 * 0.25);
    }

    #[test]
    fn lower_bound_matches_gaussian_profile() {
        let m = model(Weight::standard(1.0), 80);
        let s = local_lower_bound_scan(&m, 0.5, &[0.9, 0.5, 0.2], &grid(1.0, 0.5), 8).unwrap();
        assert_eq!(s.delta, 0.9);
        let want = (-0.81f64 / 2.0).exp() * 0.25;
        assert!((s.constant - want).abs() < 1e-6 * want, "{} vs {want}", s.constant);
    }

    #[test]
    fn lower_bound_rejects_bad_radii() {
        let m = model(Weight::standard(1.0), 20);
        assert!(local_lower_bound_scan(&m, 0.5, &[1.5], &[c(0.0, 0.0)], 8).is_err());
        assert!(local_lower_bound_scan(&m, 0.5, &[0.2, 0.5], &[c(0.0, 0.0)], 8).is_err());
    }

    #[test]
    fn weak_profile_decays_like_gaussian() {
        let m = model(Weight::standard(1.0), 80);
        let p = weak_convergence_profile(&m, 0, &[0.0, 1.0, 2.0]).unwrap();
        assert!((p[2] - (-2.0f64).exp()).abs() < 1e-10);
        let p = weak_convergence_profile(&m, 3, &[0.0]).unwrap();
        assert_eq!(p[0], 0.0);
        let m = model(Weight::power(2.0).unwrap(), 80);
        let p = weak_convergence_profile(&m, 3, &[3.0, 3.5, 4.0, 4.5, 5.0]).unwrap();
        assert!(p.windows(2).all(|w| w[1] < w[0]));
        assert!(p[4] < 1e-2);
    }

    #[test]
    fn norm_equivalence_constant_weight_is_flat() {
        let m = model(Weight::standard(1.0), 20);
        let mut e0 = vec![c(0.0, 0.0); 21];
        e0[0] = c(1.0, 0.0);
        let mut e5 = vec![c(0.0, 0.0); 21];
        e5[5] = c(1.0, 0.0);
        let mix: Vec<_> = (0..21).map(|k| c(1.0 / (1.0 + k as f64), 0.3)).collect();
        let t = norm_equivalence_check(&m, 1.0, &[e0, e5, mix]).unwrap();
        assert!((t.spread() - 1.0).abs() < 1e-8, "{}", t.spread());
        // ŵ_1 ≡ 1 = π·w, so every ratio is π
        assert!((t.max - PI).abs() < 1e-8);
    }

    #[test]
    fn norm_equivalence_power_weight_is_finite_and_refinable() {
        let w = Weight::power(2.0).unwrap();
        let m = model(w.clone(), 20);
        let mut e0 = vec![c(0.0, 0.0); 21];
        e0[0] = c(1.0, 0.0);
        let mut e5 = vec![c(0.0, 0.0); 21];
        e5[5] = c(1.0, 0.0);
        let t = norm_equivalence_check(&m, 1.0, &[e0.clone(), e5.clone()]).unwrap();
        assert!(t.spread().is_finite() && t.spread() <= 100.0);
        let fine = FockModel::build(w, 1.0, 20, QuadraturePlan::default().refined()).unwrap();
        let u = norm_equivalence_check(&fine, 1.0, &[e0, e5]).unwrap();
        assert!((t.spread() / u.spread() - 1.0).abs() < 0.1);
    }

    #[test]
    fn pointwise_bound_constant_is_finite() {
        let m = model(Weight::power(2.0).unwrap(), 20);
        let mut e3 = vec![c(0.0, 0.0); 21];
        e3[3] = c(1.0, 0.0);
        let mix: Vec<_> = (0..21).map(|k| c(0.5f64.powi(k), 0.0)).collect();
        let t = pointwise_bound_check(&m, 0.3, &[e3, mix], &grid(2.0, 1.0)).unwrap();
        assert!(t.max.is_finite() && t.max > 0.5, "{}", t.max);
    }
}
