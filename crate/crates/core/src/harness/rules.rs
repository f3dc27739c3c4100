//! Pure decision rules shared by the verifications. Every verdict in a
//! report is computed from recorded numbers through these functions.

use super::report::Num;

/// Values below this fraction of a profile's peak count as numerically zero.
pub const NUMERICAL_FLOOR: f64 = 1e-12;

/// Growth of v from x0 to x1 rescaled to one doubling of x.
pub fn growth_per_doubling(x0: f64, v0: f64, x1: f64, v1: f64) -> f64 {
    if !(v0 > 0.0) {
        return if v1 > 0.0 { f64::INFINITY } else { 1.0 };
    }
    (v1 / v0).powf(std::f64::consts::LN_2 / (x1 / x0).ln())
}

/// A series is divergent when a value is not finite, or when it grows by
/// at least `growth` per doubling of x at every step (at least two steps).
pub fn divergent(xs: &[f64], vs: &[Num], growth: f64) -> bool {
    if vs.iter().any(|v| !v.is_finite()) {
        return true;
    }
    if xs.len() != vs.len() || xs.len() < 3 {
        return false;
    }
    xs.windows(2)
        .zip(vs.windows(2))
        .all(|(x, v)| growth_per_doubling(x[0], v[0].0, x[1], v[1].0) >= growth)
}

/// Every value lies within relative distance `tol` of the last one.
pub fn ladder_stable(vs: &[Num], tol: f64) -> bool {
    let Some(last) = vs.last().map(|v| v.0) else {
        return false;
    };
    if !last.is_finite() {
        return false;
    }
    if last == 0.0 {
        return vs.iter().all(|v| v.0 == 0.0);
    }
    vs.iter().all(|v| ((v.0 - last) / last).abs() <= tol)
}

/// Ring sups trend to zero: the last is at most `fraction` of the largest
/// and the second half never increases (up to rounding and the floor).
pub fn decays(rings: &[Num], fraction: f64) -> bool {
    if rings.iter().any(|v| !v.is_finite()) || rings.len() < 2 {
        return false;
    }
    let peak = rings.iter().map(|v| v.0).fold(0.0, f64::max);
    if peak == 0.0 {
        return true;
    }
    let slack = NUMERICAL_FLOOR * peak;
    let half = rings.len() / 2;
    let monotone = rings[half..]
        .windows(2)
        .all(|p| p[1].0 <= p[0].0 * (1.0 + 1e-6) + slack);
    let last = rings[rings.len() - 1].0;
    monotone && last <= fraction * peak
}

/// The tail eigenvalue does not grow along the ladder and either shrinks
/// by `fraction` or is numerically zero.
pub fn shrinks(tail: &[Num], top: f64, fraction: f64) -> bool {
    let (Some(first), Some(last)) = (tail.first(), tail.last()) else {
        return false;
    };
    if !last.is_finite() || last.0 > first.0 {
        return false;
    }
    last.0 <= NUMERICAL_FLOOR * top || last.0 <= fraction * first.0
}

/// Least-squares line y = slope·x + intercept with Pearson correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub correlation: f64,
}

pub fn line_fit(xs: &[f64], ys: &[f64]) -> LineFit {
    let n = xs.len().min(ys.len()) as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let correlation = if syy == 0.0 { 0.0 } else { sxy / (sxx * syy).sqrt() };
    LineFit {
        slope,
        intercept: my - slope * mx,
        correlation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::report::nums;

    #[test]
    fn doubling_growth_normalizes_uneven_steps() {
        assert!((growth_per_doubling(40.0, 41.0, 80.0, 81.0) - 81.0 / 41.0).abs() < 1e-12);
        let g = growth_per_doubling(80.0, 81.0, 120.0, 121.0);
        assert!(g > 1.9 && g < 2.0);
        assert_eq!(growth_per_doubling(1.0, 0.0, 2.0, 0.0), 1.0);
        assert_eq!(growth_per_doubling(1.0, 0.0, 2.0, 1.0), f64::INFINITY);
    }

    #[test]
    fn divergence_rule() {
        let xs = [0.75, 1.5, 3.0, 6.0];
        assert!(divergent(&xs, &nums(&[1.0, 4.0, 16.0, 64.0]), 1.5));
        assert!(!divergent(&xs, &nums(&[1.0, 4.0, 5.0, 64.0]), 1.5));
        assert!(!divergent(&xs, &nums(&[1.0, 1.0, 1.0, 1.0]), 1.5));
        assert!(divergent(&xs, &nums(&[1.0, f64::INFINITY, 1.0, 1.0]), 1.5));
        assert!(!divergent(&xs[..2], &nums(&[1.0, 4.0]), 1.5));
        // the diverging identity trace along 40, 80, 120
        assert!(divergent(&[40.0, 80.0, 120.0], &nums(&[41.0, 81.0, 121.0]), 1.5));
    }

    #[test]
    fn stability_and_decay() {
        assert!(ladder_stable(&nums(&[0.9, 1.1, 1.0]), 0.2));
        assert!(!ladder_stable(&nums(&[0.7, 1.0]), 0.2));
        assert!(ladder_stable(&nums(&[0.0, 0.0]), 0.2));
        assert!(decays(&nums(&[1.0, 0.5, 0.1, 0.01]), 0.25));
        assert!(!decays(&nums(&[1.0, 1.0, 1.0]), 0.25));
        assert!(!decays(&nums(&[1.0, 0.1, 0.15, 0.2]), 0.25));
        assert!(decays(&nums(&[0.0, 0.0, 0.0]), 0.25));
        assert!(shrinks(&nums(&[2f64.powi(-20), 2f64.powi(-60)]), 0.5, 0.5));
        assert!(!shrinks(&nums(&[1.0, 1.0]), 1.0, 0.5));
        assert!(shrinks(&nums(&[0.0, 0.0]), 3.0, 0.5));
        assert!(!shrinks(&nums(&[1.0, 1e10]), 1e30, 0.5));
    }

    #[test]
    fn line_fit_recovers_logarithmic_growth() {
        let xs: Vec<f64> = [40.0f64, 80.0, 160.0].iter().map(|n| n.ln()).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 0.5 * x + 0.3).collect();
        let fit = line_fit(&xs, &ys);
        assert!((fit.slope - 0.5).abs() < 1e-12 && (fit.intercept - 0.3).abs() < 1e-12);
        assert!((fit.correlation - 1.0).abs() < 1e-12);
    }
}
