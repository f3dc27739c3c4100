//! Grids, sups and tail-corrected sums and integrals of criterion functions.

use std::cell::Cell;
use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::Num;
use super::rules::{line_fit, NUMERICAL_FLOOR};
use crate::error::{Result, WfockError};
use crate::measures::Atom;
use crate::quadrature::{adaptive_try, gl16, polar_disk, pole_polar_disk, QuadraturePlan};
use crate::toeplitz_spectra::Spectrum;
use crate::weights::lattice;

/// Doublings covered by a tail integral, and the share of the total the
/// last doubling may still carry for the tail to count as convergent.
const TAIL_DOUBLINGS: usize = 60;
const TAIL_LAST_SHARE: f64 = 1e-2;

/// Sample points of a criterion function on |z| ≤ extent: the real axis
/// for radial functions, otherwise a square lattice plus the atom sites.
pub(crate) fn grid(radial: bool, extent: f64, step: f64, sites: &[Complex64]) -> Vec<Complex64> {
    if radial {
        let h = step / 4.0;
        let k = (extent / h).round() as usize;
        return (0..=k)
            .map(|i| Complex64::new(extent * i as f64 / k as f64, 0.0))
            .collect();
    }
    let mut points = lattice(step, extent);
    points.extend(sites.iter().filter(|z| z.norm() <= extent));
    points
}

pub(crate) fn evaluate<F>(points: &[Complex64], f: F) -> Result<Vec<f64>>
where
    F: Fn(Complex64) -> Result<f64> + Sync,
{
    points.par_iter().map(|&z| f(z)).collect()
}

/// Sup of the sampled values over |z| ≤ each extent.
pub(crate) fn extent_sups(points: &[Complex64], values: &[f64], extents: &[f64]) -> Vec<f64> {
    extents
        .iter()
        .map(|&e| {
            points
                .iter()
                .zip(values)
                .filter(|(z, _)| z.norm() <= e * (1.0 + 1e-12))
                .map(|(_, v)| *v)
                .fold(0.0, max_nan)
        })
        .collect()
}

/// max that lets NaN through, so broken values are never hidden.
pub(crate) fn max_nan(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

/// The doubling extents E/8, E/4, E/2, E.
pub(crate) fn doubling_extents(extent: f64) -> Vec<f64> {
    vec![extent / 8.0, extent / 4.0, extent / 2.0, extent]
}

/// scale·∫_0^∞ h(level·e^{−exponent·u}) e^{κu} du, integrated over
/// [`TAIL_DOUBLINGS`] doublings; +∞ when the last doubling still carries
/// more than [`TAIL_LAST_SHARE`] of the total.
pub(crate) fn tail_integral(h: &dyn Fn(f64) -> f64, level: f64, exponent: f64, kappa: f64, scale: f64) -> f64 {
    if !(level > 0.0) || h(level) == 0.0 {
        return 0.0;
    }
    if !(exponent > 0.0) {
        return f64::INFINITY;
    }
    let rule = gl16();
    let mut total = 0.0;
    let mut last = 0.0;
    for k in 0..TAIL_DOUBLINGS {
        let a = k as f64 * LN_2;
        last = rule.integrate(a, a + LN_2, |u| h(level * (-exponent * u).exp()) * (kappa * u).exp());
        total += last;
    }
    if !total.is_finite() || last > TAIL_LAST_SHARE * total {
        f64::INFINITY
    } else {
        scale * total
    }
}

/// Σ_n h(s_n) split at the anchor n = ⌊len/2⌋: exact partial sum below it,
/// and above it the power-law model s_n ≈ level·(n/anchor)^{−exponent}
/// fitted on n ∈ [len/4, len/2].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesEstimate {
    pub anchor: usize,
    pub level: Num,
    pub exponent: Num,
    pub partial: Num,
    pub tail: Num,
    pub total: Num,
}

pub(crate) fn spectral_estimate(s: &Spectrum, h: &dyn Fn(f64) -> f64) -> SeriesEstimate {
    let len = s.len();
    let anchor = (len / 2).max(1);
    let partial: f64 = (1..=anchor.min(len)).map(|n| h(s.s(n))).sum();
    let top = s.s(1);
    let lo = (len / 4).max(1);
    let window: Vec<(f64, f64)> = (lo..=anchor).map(|n| (n as f64, s.s(n))).collect();
    let floor = NUMERICAL_FLOOR * top;
    let negligible = !(top > 0.0) || s.s(anchor) <= floor || window.iter().any(|(_, v)| *v <= floor);
    let (level, exponent, tail) = if negligible || window.len() < 2 {
        (s.s(anchor).max(0.0), f64::INFINITY, 0.0)
    } else {
        let xs: Vec<f64> = window.iter().map(|(n, _)| n.ln()).collect();
        let ys: Vec<f64> = window.iter().map(|(_, v)| v.ln()).collect();
        let fit = line_fit(&xs, &ys);
        let level = (fit.intercept + fit.slope * (anchor as f64).ln()).exp();
        let exponent = -fit.slope;
        (level, exponent, tail_integral(h, level, exponent, 1.0, anchor as f64))
    };
    SeriesEstimate {
        anchor,
        level: Num(level),
        exponent: Num(exponent),
        partial: Num(partial),
        tail: Num(tail),
        total: Num(partial + tail),
    }
}

/// ∫ h(f) dA over the plane: quadrature on |z| ≤ radius plus a tail from
/// the power law through the values at radius/2 and radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralEstimate {
    pub radius: f64,
    /// Cumulative integrals over |z| ≤ each extent (radial functions only).
    pub extents: Vec<f64>,
    pub partials: Vec<Num>,
    pub edge: Num,
    pub exponent: Num,
    pub partial: Num,
    pub tail: Num,
    pub total: Num,
}

/// Shape information that selects the integration rule.
pub(crate) enum Support<'a> {
    /// f depends on |z| only; kinks at the listed radii.
    Radial {
        breakpoints: Vec<f64>,
    },
    /// f vanishes outside the disks D(a, r) and is smooth inside each.
    AtomDisks {
        atoms: &'a [Atom],
        r: f64,
    },
    Plane,
}

pub(crate) fn plane_integral<F>(
    what: &str,
    f: F,
    h: &dyn Fn(f64) -> f64,
    support: Support<'_>,
    radius: f64,
    peak: f64,
    plan: &QuadraturePlan,
) -> Result<IntegralEstimate>
where
    F: Fn(Complex64) -> Result<f64> + Sync,
{
    let failure: Cell<Option<WfockError>> = Cell::new(None);
    let guarded = |z: Complex64| -> f64 {
        match f(z) {
            Ok(v) => h(v),
            Err(e) => {
                failure.set(Some(e));
                0.0
            }
        }
    };
    let mut extents = Vec::new();
    let mut partials = Vec::new();
    let (partial, edge, exponent, tail) = match support {
        Support::AtomDisks { atoms, r } => {
            for (i, a) in atoms.iter().enumerate() {
                if atoms[..i].iter().any(|b| (b.location - a.location).norm() < 2.0 * r) {
                    return Err(WfockError::Unsupported(
                        "criterion integral over overlapping atom disks".into(),
                    ));
                }
            }
            let mut acc = 0.0;
            for a in atoms {
                acc += pole_polar_disk(what, guarded, a.location, r * (1.0 - 1e-12), a.location, &[], plan)?;
                if let Some(e) = failure.take() {
                    return Err(e);
                }
            }
            (acc, 0.0, f64::INFINITY, 0.0)
        }
        Support::Radial { breakpoints } => {
            let mut acc = 0.0;
            let mut lo = 0.0;
            for e in doubling_extents(radius) {
                acc += adaptive_try(what, lo, e, &breakpoints, plan, |rho| {
                    let v = f(Complex64::new(rho, 0.0))?;
                    Ok(2.0 * PI * rho * h(v))
                })?;
                extents.push(e);
                partials.push(Num(acc));
                lo = e;
            }
            let edge = f(Complex64::new(radius, 0.0))?;
            let half = f(Complex64::new(radius / 2.0, 0.0))?;
            let (exponent, tail) = power_tail(h, edge, half, radius, peak);
            (acc, edge, exponent, tail)
        }
        Support::Plane => {
            let acc = polar_disk(what, Complex64::new(0.0, 0.0), radius, plan, guarded)?;
            if let Some(e) = failure.take() {
                return Err(e);
            }
            extents.push(radius);
            partials.push(Num(acc));
            let circle_max = |rho: f64| -> Result<f64> {
                let mut m: f64 = 0.0;
                for k in 0..32 {
                    m = max_nan(m, f(Complex64::from_polar(rho, 2.0 * PI * k as f64 / 32.0))?);
                }
                Ok(m)
            };
            let edge = circle_max(radius)?;
            let half = circle_max(radius / 2.0)?;
            let (exponent, tail) = power_tail(h, edge, half, radius, peak);
            (acc, edge, exponent, tail)
        }
    };
    Ok(IntegralEstimate {
        radius,
        extents,
        partials,
        edge: Num(edge),
        exponent: Num(exponent),
        partial: Num(partial),
        tail: Num(tail),
        total: Num(partial + tail),
    })
}

/// (σ, tail) for f ≈ edge·(ρ/R)^{−σ} beyond R with σ = log₂(half/edge).
fn power_tail(h: &dyn Fn(f64) -> f64, edge: f64, half: f64, radius: f64, peak: f64) -> (f64, f64) {
    if !edge.is_finite() || !half.is_finite() {
        return (f64::NAN, f64::INFINITY);
    }
    if edge <= NUMERICAL_FLOOR * peak.max(half) {
        return (f64::INFINITY, 0.0);
    }
    let exponent = if half > 0.0 { (half / edge).log2() } else { 0.0 };
    let tail = tail_integral(h, edge, exponent, 2.0, 2.0 * PI * radius * radius);
    (exponent, tail)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geometric(n: usize) -> Spectrum {
        Spectrum::from_values((0..n).map(|k| 0.5f64.powi(k as i32 + 1)).collect())
    }

    #[test]
    fn tail_integral_separates_convergent_power_laws() {
        // Σ_{n>N} n^{-q} ≈ N/(q−1) for level 1 and anchor N
        let id = |t: f64| t;
        let v = tail_integral(&id, 1.0, 2.0, 1.0, 10.0);
        assert!((v - 10.0).abs() < 1e-6, "{v}");
        assert!(tail_integral(&id, 1.0, 1.0, 1.0, 10.0).is_infinite());
        assert!(tail_integral(&id, 1.0, 0.97, 1.0, 10.0).is_infinite());
        assert!(tail_integral(&id, 1.0, 0.0, 1.0, 10.0).is_infinite());
        assert_eq!(tail_integral(&id, 0.0, 0.0, 1.0, 10.0), 0.0);
        let sq = |t: f64| t * t;
        assert!(tail_integral(&sq, 1.0, 0.97, 1.0, 10.0).is_finite());
    }

    #[test]
    fn spectral_estimates() {
        let id = |t: f64| t;
        let e = spectral_estimate(&geometric(81), &id);
        assert!(e.tail.0 < 1e-10);
        assert!((e.total.0 - 1.0).abs() < 1e-6);
        let ones = Spectrum::from_values(vec![1.0; 121]);
        assert!(!spectral_estimate(&ones, &id).total.is_finite());
        let harmonic = Spectrum::from_values((1..=121).map(|n| 1.0 / n as f64).collect());
        assert!(!spectral_estimate(&harmonic, &id).total.is_finite());
        let sq = |t: f64| t * t;
        let e = spectral_estimate(&harmonic, &sq);
        let exact = PI * PI / 6.0;
        assert!((e.total.0 - exact).abs() < 0.02 * exact, "{}", e.total.0);
        let rank_one = Spectrum::from_values(vec![3.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(spectral_estimate(&rank_one, &id).total.0, 3.0);
    }

    #[test]
    fn radial_integrals_with_tails() {
        let plan = QuadraturePlan::default();
        let id = |t: f64| t;
        // ∫ ½e^{−|z|²/2} dA = π; the power-law tail overshoots the true
        // tail πe^{−18} by about its own size
        let g = |z: Complex64| Ok(0.5 * (-z.norm_sqr() / 2.0).exp());
        let e = plane_integral(
            "gauss",
            g,
            &id,
            Support::Radial { breakpoints: vec![] },
            6.0,
            0.5,
            &plan,
        )
        .unwrap();
        assert!((e.partial.0 - PI * (1.0 - (-18f64).exp())).abs() < 1e-10);
        assert!((e.total.0 - PI).abs() < 1e-7);
        assert_eq!(e.partials.len(), 4);
        // ∫ (1+|z|)^{−4} dA = π/3 needs the tail
        let v = |z: Complex64| Ok((1.0 + z.norm()).powi(-2));
        let sq = |t: f64| t * t;
        let e = plane_integral(
            "volterra",
            v,
            &sq,
            Support::Radial { breakpoints: vec![] },
            6.0,
            1.0,
            &plan,
        )
        .unwrap();
        assert!(e.tail.0 > 0.0 && e.total.is_finite());
        assert!((e.total.0 - PI / 3.0).abs() < 0.02);
        // ∫ (1+|z|)^{−2} dA diverges logarithmically
        let e = plane_integral(
            "volterra",
            v,
            &id,
            Support::Radial { breakpoints: vec![] },
            6.0,
            1.0,
            &plan,
        )
        .unwrap();
        assert!(!e.total.is_finite());
        // constant
        let one = |_z: Complex64| Ok(1.0);
        let e = plane_integral(
            "one",
            one,
            &id,
            Support::Radial { breakpoints: vec![] },
            6.0,
            1.0,
            &plan,
        )
        .unwrap();
        assert!(!e.total.is_finite());
    }

    #[test]
    fn atom_disk_and_plane_integrals() {
        let plan = QuadraturePlan::default();
        let id = |t: f64| t;
        let atoms = [Atom {
            location: Complex64::new(2.0, 1.0),
            mass: 1.0,
        }];
        let f = |_z: Complex64| Ok(2.0);
        let e = plane_integral(
            "atom",
            f,
            &id,
            Support::AtomDisks { atoms: &atoms, r: 0.5 },
            6.0,
            2.0,
            &plan,
        )
        .unwrap();
        assert!((e.total.0 - 2.0 * PI * 0.25).abs() < 1e-9);
        let g = |z: Complex64| Ok((-(z - Complex64::new(1.0, 0.5)).norm_sqr()).exp());
        let e = plane_integral("shifted", g, &id, Support::Plane, 6.0, 1.0, &plan).unwrap();
        assert!((e.total.0 - PI).abs() < 1e-8);
        let two = [
            atoms[0],
            Atom {
                location: Complex64::new(2.5, 1.0),
                mass: 1.0,
            },
        ];
        assert!(plane_integral("x", f, &id, Support::AtomDisks { atoms: &two, r: 0.5 }, 6.0, 2.0, &plan).is_err());
    }

    #[test]
    fn grids() {
        let g = grid(true, 6.0, 0.1, &[]);
        assert_eq!(g.len(), 241);
        assert_eq!(g.last().unwrap().re, 6.0);
        let sites = [Complex64::new(2.03, 1.01)];
        let g = grid(false, 3.0, 0.5, &sites);
        assert_eq!(*g.last().unwrap(), sites[0]);
        let values: Vec<f64> = g.iter().map(|z| z.norm()).collect();
        let sups = extent_sups(&g, &values, &[1.0, 3.0]);
        assert!((sups[0] - 1.0).abs() < 1e-12 && (sups[1] - 3.0).abs() < 1e-12);
    }
}
