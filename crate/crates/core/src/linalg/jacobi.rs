use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

const MAX_SWEEPS: usize = 100;

/// Cyclic complex Jacobi on a Hermitian matrix. Returns unsorted eigenvalues
/// and the unitary matrix whose columns are the matching eigenvectors.
///
/// Each rotation first removes the phase of the pivot `a[p][q]` with a
/// diagonal unitary, then applies a real Givens rotation to the resulting
/// real-symmetric 2x2 block.
pub fn jacobi_eigen(a: &DMatrix<Complex64>) -> (DVector<f64>, DMatrix<Complex64>) {
    let n = a.nrows();
    // column-major working copy: a[(i, j)] = w[i + j * n]
    let mut w: Vec<Complex64> = a.as_slice().to_vec();
    let mut v: Vec<Complex64> = DMatrix::<Complex64>::identity(n, n).as_slice().to_vec();

    let scale = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n < 2 || scale == 0.0 {
        let diag = DVector::from_iterator(n, (0..n).map(|i| w[i + i * n].re));
        return (diag, DMatrix::from_vec(n, n, v));
    }

    for sweep in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for j in 0..n {
            for i in 0..j {
                off += w[i + j * n].norm_sqr();
            }
        }
        if off.sqrt() <= f64::EPSILON * 1e-2 * scale {
            break;
        }
        // small off-diagonal entries are skipped during the first sweeps
        let threshold = if sweep < 3 {
            0.2 * off.sqrt() / (n * n) as f64
        } else {
            0.0
        };

        for q in 1..n {
            for p in 0..q {
                let g = w[p + q * n];
                let g_abs = g.norm();
                if g_abs == 0.0 || g_abs < threshold {
                    continue;
                }
                let app = w[p + p * n].re;
                let aqq = w[q + q * n].re;
                if sweep > 3
                    && (app.abs() + 100.0 * g_abs == app.abs())
                    && (aqq.abs() + 100.0 * g_abs == aqq.abs())
                {
                    w[p + q * n] = Complex64::new(0.0, 0.0);
                    w[q + p * n] = Complex64::new(0.0, 0.0);
                    continue;
                }
                let phase = g / g_abs; // e^{i phi}
                let theta = (aqq - app) / (2.0 * g_abs);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // J = [[c, s], [-s e^{-i phi}, c e^{-i phi}]] acting on columns (p, q)
                let ph_c = phase.conj();
                for k in 0..n {
                    let akp = w[k + p * n];
                    let akq = w[k + q * n];
                    w[k + p * n] = akp * c - akq * ph_c * s;
                    w[k + q * n] = akp * s + akq * ph_c * c;
                }
                for k in 0..n {
                    let apk = w[p + k * n];
                    let aqk = w[q + k * n];
                    w[p + k * n] = apk * c - aqk * phase * s;
                    w[q + k * n] = apk * s + aqk * phase * c;
                }
                w[p + q * n] = Complex64::new(0.0, 0.0);
                w[q + p * n] = Complex64::new(0.0, 0.0);
                w[p + p * n] = Complex64::new(app - t * g_abs, 0.0);
                w[q + q * n] = Complex64::new(aqq + t * g_abs, 0.0);
                for k in 0..n {
                    let vkp = v[k + p * n];
                    let vkq = v[k + q * n];
                    v[k + p * n] = vkp * c - vkq * ph_c * s;
                    v[k + q * n] = vkp * s + vkq * ph_c * c;
                }
            }
        }
    }
    let diag = DVector::from_iterator(n, (0..n).map(|i| w[i + i * n].re));
    (diag, DMatrix::from_vec(n, n, v))
}
