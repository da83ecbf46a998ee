//! Slow, independent reference computations.
//!
//! Nothing here shares code paths with the production solvers beyond the
//! matrix types: generalized eigenvalues come from Rayleigh quotients and
//! LU-based power iteration, the inner SDP from a primal log-barrier method,
//! and the worst-case mismatch from projected gradient over the mismatch
//! ball. Tests, the self-test harness and the acceptance suite compare the
//! fast paths against these.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{c64, pd_cholesky, BeamWeights, ComplexMatrix, ComplexVector, HermitianMatrix};
use crate::random::{complex_gaussian, random_vector, rng};

fn rayleigh(a: &HermitianMatrix, b: &HermitianMatrix, v: &ComplexVector) -> f64 {
    b.quad_form(v) / a.quad_form(v)
}

/// Power iteration on `A⁻¹B + shift·I` through an LU factorization of `A`.
/// Returns the last iterate, normalized.
fn lu_power(
    a: &HermitianMatrix,
    b: &HermitianMatrix,
    start: ComplexVector,
    shift: f64,
    max_iter: usize,
) -> ComplexVector {
    let lu = a.as_matrix().clone().lu();
    let mut v = start.normalize();
    let mut last = f64::NAN;
    for _ in 0..max_iter {
        let y = lu.solve(&(b.as_matrix() * &v)).expect("A nonsingular") + &v * c64(shift, 0.0);
        v = y.normalize();
        let r = rayleigh(a, b, &v);
        if (r - last).abs() <= 1e-16 * r.abs().max(1e-300) {
            break;
        }
        last = r;
    }
    v
}

/// `λmax(A⁻¹B)` as the best Rayleigh quotient `vᴴBv / vᴴAv` over `samples`
/// random directions, refined by power iteration.
pub fn rayleigh_max_gen_eig(
    a: &HermitianMatrix,
    b: &HermitianMatrix,
    samples: usize,
    seed: u64,
) -> f64 {
    let mut r = rng(seed);
    let n = a.dim();
    let mut best = random_vector(&mut r, n);
    let mut best_q = rayleigh(a, b, &best);
    for _ in 1..samples.max(1) {
        let v = random_vector(&mut r, n);
        let q = rayleigh(a, b, &v);
        if q > best_q {
            best_q = q;
            best = v;
        }
    }
    let shift = b.norm() / a.norm().max(1e-300);
    let v = lu_power(a, b, best, shift, 200_000);
    rayleigh(a, b, &v).max(best_q)
}

/// Top generalized eigenpair by shifted power iteration on `A⁻¹B`. Works for
/// indefinite `B`: the shift makes the algebraically largest eigenvalue the
/// dominant one. The vector is unit norm with its largest-modulus entry real
/// positive.
pub fn power_gen_eig(a: &HermitianMatrix, b: &HermitianMatrix, seed: u64) -> (f64, ComplexVector) {
    let mut r = rng(seed);
    let start = random_vector(&mut r, a.dim());
    // |λ(A⁻¹B)| ≤ ‖B‖ / λmin(A) ≤ ‖B‖_F ‖A⁻¹‖_F
    let inv = a.as_matrix().clone().try_inverse().expect("A nonsingular");
    let shift = b.norm() * inv.norm();
    let mut v = lu_power(a, b, start, shift, 2_000_000);
    let k = (0..v.len())
        .max_by(|&i, &j| v[i].norm().total_cmp(&v[j].norm()))
        .unwrap_or(0);
    let rot = v[k].conj() / v[k].norm();
    v *= rot;
    (rayleigh(a, b, &v), v)
}

/// `min_{‖Δ‖_F ≤ η} ‖(Q + Δ) w‖²` by projected gradient descent on `Δ`.
pub fn worst_case_power_pg(q: &ComplexMatrix, w: &BeamWeights, eta: f64, iters: usize) -> f64 {
    let v = w.as_vector();
    let wn2 = v.norm_squared();
    let mut d = ComplexMatrix::zeros(q.nrows(), q.ncols());
    if wn2 == 0.0 {
        return 0.0;
    }
    // gradient 2 (Q+Δ) w wᴴ is Lipschitz with constant 2‖w‖²
    let step = 1.0 / (2.0 * wn2);
    let mut best = f64::INFINITY;
    for _ in 0..iters {
        let r = (q + &d) * v;
        best = best.min(r.norm_squared());
        let grad = &r * v.adjoint() * c64(2.0, 0.0);
        d -= grad * c64(step, 0.0);
        let n = d.norm();
        if n > eta {
            d *= c64(eta / n, 0.0);
        }
    }
    best.min(((q + &d) * v).norm_squared())
}

/// Smallest `‖(Q + Δ) w‖²` over `samples` random mismatches in the ball,
/// half of them on the sphere `‖Δ‖ = η`.
pub fn worst_case_power_sampled(
    q: &ComplexMatrix,
    w: &BeamWeights,
    eta: f64,
    samples: usize,
    seed: u64,
) -> f64 {
    let mut r = rng(seed);
    let (rows, cols) = q.shape();
    let v = w.as_vector();
    let mut best = f64::INFINITY;
    for i in 0..samples {
        let mut d = ComplexMatrix::from_fn(rows, cols, |_, _| complex_gaussian(&mut r));
        let radius = if i % 2 == 0 {
            eta
        } else {
            eta * r.random::<f64>().powf(1.0 / (2 * rows * cols) as f64)
        };
        let n = d.norm();
        d *= c64(radius / n, 0.0);
        best = best.min(((q + d) * v).norm_squared());
    }
    best
}

/// Minimizer of `wᴴAw` subject to `Re(bᴴw) ≥ 1`:
/// `A⁻¹b / Re(bᴴA⁻¹b)`.
pub fn linear_constraint_min(a: &HermitianMatrix, b: &ComplexVector) -> ComplexVector {
    let x = a.as_matrix().clone().lu().solve(b).expect("A nonsingular");
    let s = b.dotc(&x).re;
    x / c64(s, 0.0)
}

/// Minimum of `f` over `n` uniformly spaced points of `[lo, hi]`, skipping
/// points where `f` errors. Returns `(argmin, min)`.
pub fn grid_min(
    lo: f64,
    hi: f64,
    n: usize,
    mut f: impl FnMut(f64) -> Result<f64>,
) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for i in 0..n {
        let x = if n == 1 {
            lo
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        };
        if let Ok(v) = f(x) {
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((x, v));
            }
        }
    }
    best
}

/// Real coordinates of Hermitian matrices: the diagonal, then scaled real and
/// imaginary parts of the strict upper triangle, orthonormal under the trace
/// inner product.
struct HermitianBasis {
    n: usize,
    // (row, col, is_imag)
    items: Vec<(usize, usize, bool)>,
}

impl HermitianBasis {
    fn new(n: usize) -> Self {
        let mut items: Vec<_> = (0..n).map(|i| (i, i, false)).collect();
        for i in 0..n {
            for j in i + 1..n {
                items.push((i, j, false));
                items.push((i, j, true));
            }
        }
        Self { n, items }
    }

    fn len(&self) -> usize {
        self.items.len()
    }

    fn to_matrix(&self, x: &DVector<f64>) -> ComplexMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut m = ComplexMatrix::zeros(self.n, self.n);
        for (k, &(i, j, imag)) in self.items.iter().enumerate() {
            if i == j {
                m[(i, i)] += c64(x[k], 0.0);
            } else if imag {
                m[(i, j)] += c64(0.0, s * x[k]);
                m[(j, i)] += c64(0.0, -s * x[k]);
            } else {
                m[(i, j)] += c64(s * x[k], 0.0);
                m[(j, i)] += c64(s * x[k], 0.0);
            }
        }
        m
    }

    /// Coordinates of `G E_k G` for Hermitian `G`. Every `E_k` is a
    /// combination of `e_i e_jᴴ` terms, so `G E_k G` is the same combination
    /// of `g_i g_jᴴ` with `g_i` the columns of `G`.
    fn congruence_coords(&self, g: &ComplexMatrix, k: usize) -> DVector<f64> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let (i, j, imag) = self.items[k];
        // entry (p, q) of g_a g_bᴴ
        let outer = |a: usize, b: usize, p: usize, q: usize| g[(p, a)] * g[(q, b)].conj();
        let entry = |p: usize, q: usize| {
            if i == j {
                outer(i, i, p, q)
            } else if imag {
                (outer(i, j, p, q) - outer(j, i, p, q)) * c64(0.0, s)
            } else {
                (outer(i, j, p, q) + outer(j, i, p, q)) * c64(s, 0.0)
            }
        };
        DVector::from_iterator(
            self.len(),
            self.items.iter().map(|&(p, q, im)| {
                if p == q {
                    entry(p, p).re
                } else if im {
                    2.0 * s * entry(p, q).im
                } else {
                    2.0 * s * entry(p, q).re
                }
            }),
        )
    }

    /// Coordinates `⟨E_k, M⟩ = tr(E_k M)` of a Hermitian matrix.
    fn coords(&self, m: &ComplexMatrix) -> DVector<f64> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        DVector::from_iterator(
            self.len(),
            self.items.iter().map(|&(i, j, imag)| {
                if i == j {
                    m[(i, i)].re
                } else if imag {
                    // E = i s (e_ij - e_ji): tr(E M) = i s (M_ji - M_ij) = 2 s Im(M_ij)
                    2.0 * s * m[(i, j)].im
                } else {
                    2.0 * s * m[(i, j)].re
                }
            }),
        )
    }
}

/// Primal solution of `min tr(AW) s.t. tr(BW) = α, tr W ≤ b, W ⪰ 0`.
#[derive(Debug, Clone)]
pub struct BarrierSolution {
    pub value: f64,
    pub w_matrix: HermitianMatrix,
    /// Bound on the suboptimality of `value`.
    pub gap_bound: f64,
}

/// Solves the trace-bounded inner SDP by a primal log-barrier method with
/// equality-constrained Newton steps over the real coordinates of `W`.
///
/// Requires a strictly feasible interior, i.e. `α < b·λmax(B)`.
pub fn barrier_inner_sdp(
    a: &HermitianMatrix,
    b_mat: &HermitianMatrix,
    alpha: f64,
    b: f64,
    rel_gap: f64,
) -> Result<BarrierSolution> {
    let n = a.dim();
    let basis = HermitianBasis::new(n);
    let dim = basis.len();
    let eig = crate::linalg::eig_hermitian_jacobi(b_mat);
    let lam_b = eig.max_eigenvalue();
    let slack = b - alpha / lam_b;
    if !(slack > 1e-12 * b.max(1.0)) || !(alpha > 0.0) {
        return Err(Error::PrimalInfeasible {
            alpha,
            reason: format!("no strictly feasible point for trace bound {b}"),
        });
    }
    let u = eig.eigenvector(n - 1);
    let tr_b = b_mat.trace();
    let y = (0.5 * slack / n as f64).min(0.5 * alpha / tr_b);
    let x0 = (alpha - y * tr_b) / lam_b;
    let w0 = &u * u.adjoint() * c64(x0, 0.0) + ComplexMatrix::identity(n, n) * c64(y, 0.0);

    let c = basis.coords(a.as_matrix());
    let e = basis.coords(b_mat.as_matrix());
    let tr = basis.coords(&ComplexMatrix::identity(n, n));
    let mut x = basis.coords(&w0);

    let m = (n + 1) as f64;
    // start roughly on the central path: assume the initial gap is of the
    // order of the initial objective
    let mut t = m / c.dot(&x).abs().max(1e-300);

    let barrier = |x: &DVector<f64>, t: f64| -> Option<f64> {
        let s = b - tr.dot(x);
        if s <= 0.0 {
            return None;
        }
        let chol = pd_cholesky(&basis.to_matrix(x))?;
        let logdet: f64 = (0..n).map(|i| 2.0 * chol.l_dirty()[(i, i)].re.ln()).sum();
        Some(t * c.dot(x) - logdet - s.ln())
    };

    for _outer in 0..60 {
        for _newton in 0..500 {
            let w = basis.to_matrix(&x);
            let g_inv = pd_cholesky(&w)
                .ok_or(Error::RecoveryFailure { residual: f64::NAN })?
                .inverse();
            let s = b - tr.dot(&x);
            // gradient: t c - coords(W⁻¹) + tr / s
            let grad = &c * t - basis.coords(&g_inv) + &tr / s;
            // Hessian: H_kl = tr(W⁻¹ E_k W⁻¹ E_l) + tr_k tr_l / s²
            let mut h = DMatrix::<f64>::zeros(dim + 1, dim + 1);
            for k in 0..dim {
                let col = basis.congruence_coords(&g_inv, k);
                for l in 0..dim {
                    h[(l, k)] = col[l] + tr[l] * tr[k] / (s * s);
                }
                h[(k, dim)] = e[k];
                h[(dim, k)] = e[k];
            }
            let mut rhs = DVector::zeros(dim + 1);
            rhs.rows_mut(0, dim).copy_from(&(-&grad));
            rhs[dim] = alpha - e.dot(&x);
            let lu = h.clone().lu();
            let mut sol = lu
                .solve(&rhs)
                .ok_or(Error::RecoveryFailure { residual: f64::NAN })?;
            // one step of iterative refinement: the system gets badly
            // conditioned as t grows
            if let Some(corr) = lu.solve(&(&rhs - &h * &sol)) {
                sol += corr;
            }
            let dx = sol.rows(0, dim).into_owned();
            let decrement = -grad.dot(&dx);
            if decrement.abs() < 1e-13 && rhs[dim].abs() < 1e-12 * alpha {
                break;
            }
            // damped Newton step of self-concordant barriers: stays interior
            // and decreases the barrier without function evaluations
            let lam = decrement.max(0.0).sqrt();
            let mut step = if lam > 0.25 { 1.0 / (1.0 + lam) } else { 1.0 };
            while barrier(&(&x + &dx * step), t).is_none() && step > 1e-14 {
                step *= 0.5;
            }
            x += &dx * step;
        }
        let value = c.dot(&x);
        if m / t <= rel_gap * value.abs().max(1e-300) {
            break;
        }
        t *= 8.0;
    }
    // remove the leftover equality residual along the coordinates of B
    let r = alpha - e.dot(&x);
    let xe = &x + &e * (r / e.norm_squared());
    if barrier(&xe, t).is_some() {
        x = xe;
    }
    let w_matrix = HermitianMatrix::new(basis.to_matrix(&x))?;
    Ok(BarrierSolution {
        value: c.dot(&x),
        w_matrix,
        gap_bound: m / t,
    })
}
