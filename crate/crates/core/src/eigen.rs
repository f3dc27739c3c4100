//! Cyclic Jacobi eigen-solver for complex Hermitian matrices.
//!
//! Each rotation first removes the phase of the pivot entry with
//! diag(1, e^{−iφ}) and then applies a real Jacobi rotation. Sweeps run in
//! a fixed (p, q) order, so the result is bit-for-bit reproducible.

use num_complex::Complex64;

use crate::error::{Result, WfockError};

const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition A = Z Λ Z^* with eigenvalues in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Column-major: vectors[k] is the eigenvector of values[k].
    pub vectors: Vec<Vec<Complex64>>,
}

/// Row-major n×n Hermitian input; only exact Hermitian symmetry is assumed.
pub fn hermitian_eigen(a: &[Complex64], n: usize) -> Result<HermitianEigen> {
    if a.len() != n * n {
        return Err(WfockError::invalid("matrix storage does not match its dimension"));
    }
    let mut m = a.to_vec();
    for i in 0..n {
        m[i * n + i] = Complex64::new(m[i * n + i].re, 0.0);
    }
    let mut z = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        z[i * n + i] = Complex64::new(1.0, 0.0);
    }
    let frob: f64 = m.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let target = f64::EPSILON * frob;
    let mut sweeps = 0;
    loop {
        let off = off_norm(&m, n);
        if off <= target || off == 0.0 {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(WfockError::EigenNonConvergence { residual: off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut m, &mut z, n, p, q);
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].re.total_cmp(&m[i * n + i].re).then(i.cmp(&j)));
    Ok(HermitianEigen {
        values: order.iter().map(|&i| m[i * n + i].re).collect(),
        vectors: order.iter().map(|&i| (0..n).map(|r| z[r * n + i]).collect()).collect(),
    })
}

fn off_norm(m: &[Complex64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m[i * n + j].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn rotate(m: &mut [Complex64], z: &mut [Complex64], n: usize, p: usize, q: usize) {
    let apq = m[p * n + q];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let app = m[p * n + p].re;
    let aqq = m[q * n + q].re;
    if mag <= 1e-300 || mag < f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
        m[p * n + q] = Complex64::new(0.0, 0.0);
        m[q * n + p] = Complex64::new(0.0, 0.0);
        return;
    }
    let e = apq / mag;
    let theta = (aqq - app) / (2.0 * mag);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let ec = e.conj();
    for k in 0..n {
        let kp = m[k * n + p];
        let kq = m[k * n + q];
        m[k * n + p] = kp * c - kq * ec * s;
        m[k * n + q] = kp * s + kq * ec * c;
    }
    for k in 0..n {
        let pk = m[p * n + k];
        let qk = m[q * n + k];
        m[p * n + k] = pk * c - qk * e * s;
        m[q * n + k] = pk * s + qk * e * c;
    }
    m[p * n + q] = Complex64::new(0.0, 0.0);
    m[q * n + p] = Complex64::new(0.0, 0.0);
    m[p * n + p] = Complex64::new(app - t * mag, 0.0);
    m[q * n + q] = Complex64::new(aqq + t * mag, 0.0);
    for k in 0..n {
        let kp = z[k * n + p];
        let kq = z[k * n + q];
        z[k * n + p] = kp * c - kq * ec * s;
        z[k * n + q] = kp * s + kq * ec * c;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn hermitian(n: usize, entries: &[(f64, f64)]) -> Vec<Complex64> {
        let mut a = vec![c(0.0, 0.0); n * n];
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                let (re, im) = entries[k % entries.len()];
                k += 1;
                if i == j {
                    a[i * n + i] = c(re, 0.0);
                } else {
                    a[i * n + j] = c(re, im);
                    a[j * n + i] = c(re, -im);
                }
            }
        }
        a
    }

    fn check_decomposition(a: &[Complex64], n: usize, e: &HermitianEigen) {
        let scale = a.iter().map(|v| v.norm()).fold(1.0, f64::max);
        for (lambda, v) in e.values.iter().zip(&e.vectors) {
            for i in 0..n {
                let av: Complex64 = (0..n).map(|j| a[i * n + j] * v[j]).sum();
                assert!((av - v[i] * lambda).norm() < 1e-12 * scale * n as f64);
            }
        }
        for i in 0..n {
            for j in 0..n {
                let ip: Complex64 = (0..n).map(|k| e.vectors[i][k].conj() * e.vectors[j][k]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ip - want).norm() < 1e-12 * n as f64);
            }
        }
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn diagonal_and_rank_one_spectra() {
        let n = 10;
        let mut a = vec![c(0.0, 0.0); n * n];
        for i in 0..n {
            a[i * n + i] = c(0.5f64.powi(i as i32 + 1), 0.0);
        }
        let e = hermitian_eigen(&a, n).unwrap();
        for (k, v) in e.values.iter().enumerate() {
            assert_eq!(*v, 0.5f64.powi(k as i32 + 1));
        }
        let mut a = vec![c(0.0, 0.0); n * n];
        a[0] = c(3.0, 0.0);
        let e = hermitian_eigen(&a, n).unwrap();
        assert_eq!(e.values[0], 3.0);
        assert!(e.values[1..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn two_by_two_complex() {
        // [[2, i], [−i, 2]] has eigenvalues 3 and 1
        let a = vec![c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)];
        let e = hermitian_eigen(&a, 2).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
        check_decomposition(&a, 2, &e);
    }

    #[test]
    fn deterministic_output() {
        let entries: Vec<(f64, f64)> = (0..50)
            .map(|k| ((k as f64 * 0.7).sin(), (k as f64 * 1.3).cos()))
            .collect();
        let a = hermitian(12, &entries);
        assert_eq!(hermitian_eigen(&a, 12).unwrap(), hermitian_eigen(&a, 12).unwrap());
    }

    proptest! {
        #[test]
        fn random_hermitian_decomposes(
            n in 1usize..9,
            entries in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 45),
        ) {
            let a = hermitian(n, &entries);
            let e = hermitian_eigen(&a, n).unwrap();
            check_decomposition(&a, n, &e);
            let trace: f64 = (0..n).map(|i| a[i * n + i].re).sum();
            let sum: f64 = e.values.iter().sum();
            prop_assert!((trace - sum).abs() < 1e-10 * (1.0 + trace.abs()));
        }
    }
}
