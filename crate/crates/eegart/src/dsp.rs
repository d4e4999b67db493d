//! Numerical kernels: radix-2 FFT and a cyclic Jacobi eigensolver for
//! symmetric matrices.
//!
//! Both are deterministic and allocation-light; the feature pipeline runs
//! them once per window per channel (FFT) and once per window (Jacobi on the
//! 22x22 correlation matrix).

use num_complex::Complex64;

use crate::{Error, Result};

/// Next power of two >= n (n >= 1).
pub fn next_pow2(n: usize) -> usize {
    let mut p = 1;
    while p < n {
        p <<= 1;
    }
    p
}

/// In-place iterative radix-2 Cooley-Tukey FFT. `buf.len()` must be a power
/// of two.
pub fn fft_in_place(buf: &mut [Complex64]) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two());
    if n <= 1 {
        return;
    }
    // bit-reversal permutation
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            buf.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = -2.0 * std::f64::consts::PI / len as f64;
        let wlen = Complex64::new(ang.cos(), ang.sin());
        for start in (0..n).step_by(len) {
            let mut w = Complex64::new(1.0, 0.0);
            for k in 0..len / 2 {
                let u = buf[start + k];
                let v = buf[start + k + len / 2] * w;
                buf[start + k] = u + v;
                buf[start + k + len / 2] = u - v;
                w *= wlen;
            }
        }
        len <<= 1;
    }
}

/// Magnitude spectrum of a real signal, zero-padded to the next power of two.
/// Returns `padded_len/2 + 1` magnitudes (bins 0..=Nyquist); bin `k` of the
/// padded transform corresponds to frequency `k * fs / padded_len`.
pub fn magnitude_spectrum(signal: &[f64]) -> Vec<f64> {
    let n = next_pow2(signal.len().max(1));
    let mut buf: Vec<Complex64> = signal
        .iter()
        .map(|&x| Complex64::new(x, 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(n)
        .collect();
    fft_in_place(&mut buf);
    buf[..n / 2 + 1].iter().map(|c| c.norm()).collect()
}

/// Result of a symmetric eigendecomposition: `values[i]` pairs with column
/// `i` of `vectors` (row-major, n x n).
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
    pub n: usize,
}

impl SymEigen {
    pub fn vector(&self, i: usize) -> Vec<f64> {
        (0..self.n).map(|r| self.vectors[r * self.n + i]).collect()
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigendecomposition of a symmetric matrix (row-major, n x n) by cyclic
/// Jacobi rotations. Eigenvalues are returned unsorted; callers sort as
/// needed. Errors if the off-diagonal norm has not converged after the sweep
/// cap, which signals numerically pathological input.
pub fn jacobi_eigen(matrix: &[f64], n: usize) -> Result<SymEigen> {
    assert_eq!(matrix.len(), n * n);
    let mut a = matrix.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    if n == 1 {
        return Ok(SymEigen { values: vec![a[0]], vectors: v, n });
    }
    // convergence threshold scaled to the matrix magnitude
    let norm: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = 1e-14 * norm.max(1.0);

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = {
            let mut s = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    s += a[p * n + q] * a[p * n + q];
                }
            }
            s.sqrt()
        };
        if off <= tol {
            let values = (0..n).map(|i| a[i * n + i]).collect();
            return Ok(SymEigen { values, vectors: v, n });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= tol / (n * n) as f64 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                // stable tangent of the rotation angle
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    Err(Error::Feature(format!(
        "Jacobi eigensolver did not converge within {JACOBI_MAX_SWEEPS} sweeps"
    )))
}

/// Eigenvalues only, sorted ascending.
pub fn sym_eigenvalues(matrix: &[f64], n: usize) -> Result<Vec<f64>> {
    let mut vals = jacobi_eigen(matrix, n)?.values;
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(vals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    /// O(n^2) DFT magnitude oracle, independent of the FFT path.
    fn naive_dft_magnitude(signal: &[f64]) -> Vec<f64> {
        let n = next_pow2(signal.len().max(1));
        let mut padded = signal.to_vec();
        padded.resize(n, 0.0);
        (0..n / 2 + 1)
            .map(|k| {
                let mut re = 0.0;
                let mut im = 0.0;
                for (t, &x) in padded.iter().enumerate() {
                    let ang = -2.0 * std::f64::consts::PI * k as f64 * t as f64 / n as f64;
                    re += x * ang.cos();
                    im += x * ang.sin();
                }
                (re * re + im * im).sqrt()
            })
            .collect()
    }

    /// Characteristic-polynomial eigenvalue oracle for n <= 4, via companion
    /// coefficients and bisection on the polynomial (symmetric => real roots).
    pub fn charpoly_eigenvalues(matrix: &[f64], n: usize) -> Vec<f64> {
        assert!(n <= 4);
        // coefficients of det(A - x I) via Faddeev-LeVerrier
        let mut coeffs = vec![0.0; n + 1]; // c[n] x^n + ... + c[0]
        coeffs[n] = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
        let mut m = vec![0.0; n * n]; // M_0 = 0
        let mut c_prev = 1.0;
        for k in 1..=n {
            // M_k = A * M_{k-1} + c_{n-k+1} I
            let mut am = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    let mut s = 0.0;
                    for l in 0..n {
                        s += matrix[i * n + l] * m[l * n + j];
                    }
                    am[i * n + j] = s;
                }
            }
            for i in 0..n {
                am[i * n + i] += c_prev;
            }
            let trace: f64 = (0..n).map(|i| {
                let mut s = 0.0;
                for l in 0..n {
                    s += matrix[i * n + l] * am[l * n + i];
                }
                s
            }).sum();
            let c = -trace / k as f64;
            coeffs[n - k] = c * coeffs[n];
            m = am;
            c_prev = c;
        }
        let p = |x: f64| -> f64 {
            let mut acc = 0.0;
            for i in (0..=n).rev() {
                acc = acc * x + coeffs[i];
            }
            acc
        };
        // bracket all real roots by scanning a wide interval
        let bound: f64 = matrix.iter().map(|x| x.abs()).sum::<f64>() + 1.0;
        let steps = 400_000;
        let mut roots = Vec::new();
        let mut x0 = -bound;
        let mut f0 = p(x0);
        for i in 1..=steps {
            let x1 = -bound + 2.0 * bound * i as f64 / steps as f64;
            let f1 = p(x1);
            if f0 == 0.0 {
                roots.push(x0);
            } else if f0 * f1 < 0.0 {
                let (mut lo, mut hi) = (x0, x1);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if p(lo) * p(mid) <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            x0 = x1;
            f0 = f1;
        }
        roots
    }

    fn random_symmetric(n: usize, rng: &mut impl Rng) -> Vec<f64> {
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let x: f64 = rng.gen_range(-1.0..1.0);
                m[i * n + j] = x;
                m[j * n + i] = x;
            }
        }
        m
    }

    #[test]
    fn fft_matches_naive_dft() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let n = rng.gen_range(4..=1024);
            let signal: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let fast = magnitude_spectrum(&signal);
            let slow = naive_dft_magnitude(&signal);
            assert_eq!(fast.len(), slow.len());
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-9, "fft mismatch: {a} vs {b}");
            }
        }
    }

    #[test]
    fn fft_pure_tone_peaks_at_bin() {
        let fs = 256.0;
        let n = 256;
        let signal: Vec<f64> = (0..n)
            .map(|t| (2.0 * std::f64::consts::PI * 10.0 * t as f64 / fs).sin())
            .collect();
        let mags = magnitude_spectrum(&signal);
        let peak = mags
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(peak, 10);
    }

    #[test]
    fn jacobi_eigenpairs_satisfy_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let n = 22;
            let m = random_symmetric(n, &mut rng);
            let eig = jacobi_eigen(&m, n).unwrap();
            for i in 0..n {
                let v = eig.vector(i);
                let lambda = eig.values[i];
                for r in 0..n {
                    let av: f64 = (0..n).map(|c| m[r * n + c] * v[c]).sum();
                    assert!(
                        (av - lambda * v[r]).abs() < 1e-8,
                        "Av != lambda v at row {r}"
                    );
                }
            }
        }
    }

    #[test]
    fn jacobi_matches_charpoly_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 2..=4usize {
            for _ in 0..5 {
                let m = random_symmetric(n, &mut rng);
                let mut fast = sym_eigenvalues(&m, n).unwrap();
                let mut slow = charpoly_eigenvalues(&m, n);
                fast.sort_by(|a, b| a.partial_cmp(b).unwrap());
                slow.sort_by(|a, b| a.partial_cmp(b).unwrap());
                assert_eq!(fast.len(), slow.len(), "root count for n={n}");
                for (a, b) in fast.iter().zip(&slow) {
                    assert!((a - b).abs() < 1e-9, "eigenvalue mismatch {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn jacobi_identity_and_diag() {
        let eig = jacobi_eigen(&[1.0, 0.0, 0.0, 1.0], 2).unwrap();
        assert!((eig.values[0] - 1.0).abs() < 1e-12);
        assert!((eig.values[1] - 1.0).abs() < 1e-12);
        let vals = sym_eigenvalues(&[3.0, 0.0, 0.0, -2.0], 2).unwrap();
        assert!((vals[0] + 2.0).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
    }
}
