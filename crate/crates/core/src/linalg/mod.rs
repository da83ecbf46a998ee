//! Dense complex-Hermitian linear algebra sized for small arrays (M up to a
//! few dozen elements).

mod jacobi;

pub use jacobi::jacobi_eigen;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Relative tolerance on `‖A − Aᴴ‖ / ‖A‖` accepted by [`HermitianMatrix::new`].
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalues above `-PSD_CLIP_TOL·‖R‖` count as numerically nonnegative.
pub const PSD_CLIP_TOL: f64 = 1e-10;
/// Eigenvalues below `-PSD_REJECT_TOL·‖R‖` reject a matrix as not PSD.
pub const PSD_REJECT_TOL: f64 = 1e-6;

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A square complex matrix equal to its conjugate transpose.
///
/// The constructor symmetrizes the input after validating it, so every value
/// of this type is exactly Hermitian in storage.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    m: ComplexMatrix,
}

impl HermitianMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::InvalidInput(format!(
                "Hermitian matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        let norm = m.norm();
        let asym = (&m - m.adjoint()).norm();
        if asym > HERMITIAN_TOL * norm {
            return Err(Error::InvalidInput(format!(
                "matrix is not Hermitian (relative asymmetry {:e})",
                asym / norm
            )));
        }
        Ok(Self::from_raw(m))
    }

    /// Symmetrizes without validation; for values Hermitian by construction.
    pub(crate) fn from_raw(m: ComplexMatrix) -> Self {
        let m = (&m + m.adjoint()) * c64(0.5, 0.0);
        Self { m }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            m: ComplexMatrix::identity(n, n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            m: ComplexMatrix::zeros(n, n),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = ComplexMatrix::zeros(n, n);
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = c64(*d, 0.0);
        }
        Self { m }
    }

    /// `v vᴴ`
    pub fn outer(v: &ComplexVector) -> Self {
        Self::from_raw(v * v.adjoint())
    }

    /// `QᴴQ`
    pub fn gram(q: &ComplexMatrix) -> Self {
        Self::from_raw(q.adjoint() * q)
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.m
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.m.norm()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.m[(i, i)].re).sum()
    }

    /// `Re(wᴴ A w)`; the imaginary part vanishes for Hermitian `A`.
    pub fn quad_form(&self, w: &ComplexVector) -> f64 {
        w.dotc(&(&self.m * w)).re
    }

    /// `Re tr(A B)`
    pub fn trace_product(&self, other: &HermitianMatrix) -> f64 {
        // tr(AB) = Σ_ij A_ij B_ji = Σ_ij A_ij conj(B_ij) for Hermitian B
        self.m
            .iter()
            .zip(other.m.iter())
            .map(|(a, b)| (a * b.conj()).re)
            .sum()
    }

    /// `A + s·I`
    pub fn add_identity(&self, s: f64) -> Self {
        let mut m = self.m.clone();
        for i in 0..self.dim() {
            m[(i, i)].re += s;
        }
        Self { m }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            m: &self.m * c64(c, 0.0),
        }
    }

    /// `a·self + b·other`
    pub fn lin_comb(&self, a: f64, other: &HermitianMatrix, b: f64) -> Self {
        Self {
            m: &self.m * c64(a, 0.0) + &other.m * c64(b, 0.0),
        }
    }
}

/// Beamformer weight vector `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamWeights(ComplexVector);

impl BeamWeights {
    pub fn new(v: ComplexVector) -> Self {
        Self(v)
    }

    pub fn as_vector(&self) -> &ComplexVector {
        &self.0
    }

    pub fn into_vector(self) -> ComplexVector {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(&self.0 * c64(c, 0.0))
    }

    pub fn normalized(&self) -> Self {
        Self(&self.0 / c64(self.0.norm(), 0.0))
    }

    /// `Re(wᴴ A w)`
    pub fn power(&self, a: &HermitianMatrix) -> f64 {
        a.quad_form(&self.0)
    }
}

/// Eigenvalues in ascending order with their eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.dim() - 1]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn eigenvector(&self, i: usize) -> ComplexVector {
        self.eigenvectors.column(i).into_owned()
    }

    /// `V Λ Vᴴ`
    pub fn reconstruct(&self) -> ComplexMatrix {
        let lam = self.eigenvalues.map(|l| c64(l, 0.0));
        &self.eigenvectors * ComplexMatrix::from_diagonal(&lam) * self.eigenvectors.adjoint()
    }

    /// Orthonormal basis (columns) of the eigenspace of the `count` largest
    /// eigenvalues.
    pub fn top_space(&self, count: usize) -> ComplexMatrix {
        let n = self.dim();
        self.eigenvectors.columns(n - count, count).into_owned()
    }

    /// Number of eigenvalues within `tol` of the largest one.
    pub fn top_multiplicity(&self, tol: f64) -> usize {
        let top = self.max_eigenvalue();
        self.eigenvalues.iter().filter(|&&l| l >= top - tol).count()
    }

    /// Number of eigenvalues within `tol` of the smallest one.
    pub fn bottom_multiplicity(&self, tol: f64) -> usize {
        let bottom = self.min_eigenvalue();
        self.eigenvalues
            .iter()
            .filter(|&&l| l <= bottom + tol)
            .count()
    }
}

pub fn eig_hermitian(a: &HermitianMatrix) -> EigenDecomposition {
    let n = a.dim();
    if n == 0 {
        return EigenDecomposition {
            eigenvalues: DVector::zeros(0),
            eigenvectors: ComplexMatrix::zeros(0, 0),
        };
    }
    let eig = SymmetricEigen::new(a.m.clone());
    sorted(eig.eigenvalues, eig.eigenvectors)
}

fn sorted(values: DVector<f64>, vectors: ComplexMatrix) -> EigenDecomposition {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    // Equal eigenvalues keep descending column order so that the lowest
    // column index of a tie lands last (the "principal" slot).
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(j.cmp(&i)));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| values[i]));
    let eigenvectors = ComplexMatrix::from_columns(
        &order
            .iter()
            .map(|&i| vectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    EigenDecomposition {
        eigenvalues,
        eigenvectors,
    }
}

/// Eigendecomposition by the cyclic Jacobi method, sorted like
/// [`eig_hermitian`]. Slower, used as a cross-check.
pub fn eig_hermitian_jacobi(a: &HermitianMatrix) -> EigenDecomposition {
    let (values, vectors) = jacobi_eigen(&a.m);
    sorted(values, vectors)
}

/// Multiplies `v` by a unit phase so its first non-negligible entry is real
/// and positive.
pub fn fix_phase(v: &mut ComplexVector) {
    let norm = v.norm();
    if norm == 0.0 {
        return;
    }
    if let Some(z) = v.iter().copied().find(|z| z.norm() > 1e-10 * norm) {
        let rot = z.conj() / z.norm();
        v.iter_mut().for_each(|x| *x *= rot);
    }
}

/// Relative tolerance used to decide that two eigenvalues tie.
pub const TIE_TOL: f64 = 1e-12;

/// Canonical unit vector in the span of the orthonormal columns of `basis`:
/// the normalized projection of the lowest-index coordinate vector whose
/// projection is not negligible, with [`fix_phase`] applied.
///
/// For a one-dimensional span this is just the basis vector with its phase
/// fixed; for a degenerate eigenspace it makes the choice independent of the
/// basis the eigensolver happened to return.
pub fn canonical_in_span(basis: &ComplexMatrix) -> ComplexVector {
    let (n, k) = basis.shape();
    let mut v = if k == 1 {
        basis.column(0).into_owned()
    } else {
        let mut chosen = basis.column(0).into_owned();
        for i in 0..n {
            // projection of e_i: U Uᴴ e_i = U (row i of U)ᴴ
            let coeffs = basis.row(i).adjoint();
            if coeffs.norm() > 1e-6 {
                chosen = basis * coeffs;
                break;
            }
        }
        chosen
    };
    let norm = v.norm();
    v /= c64(norm, 0.0);
    fix_phase(&mut v);
    v
}

/// Unit-norm eigenvector of the largest eigenvalue.
///
/// Tie-break: when the top eigenvalue is repeated (within `1e-12` relative),
/// the result is the normalized projection of `e_1` (or the first `e_i` with
/// a non-negligible projection) onto that eigenspace. Phase: the first
/// non-negligible entry is real positive.
pub fn principal_eigvec(a: &HermitianMatrix) -> BeamWeights {
    let eig = eig_hermitian(a);
    principal_of(&eig)
}

pub(crate) fn principal_of(eig: &EigenDecomposition) -> BeamWeights {
    let scale = eig.eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let k = eig.top_multiplicity(TIE_TOL * scale.max(f64::MIN_POSITIVE));
    BeamWeights(canonical_in_span(&eig.top_space(k)))
}

/// Factor `Q = Λ^{1/2} Vᴴ` with `QᴴQ = R`. Slightly negative eigenvalues
/// (rounding in singular sample covariances) are clipped to zero.
pub fn psd_sqrt_factor(r: &HermitianMatrix) -> Result<ComplexMatrix> {
    let eig = eig_hermitian(r);
    let norm = r.norm();
    let min = eig.min_eigenvalue();
    if min < -PSD_REJECT_TOL * norm {
        return Err(Error::NotPsd { min_eig: min, norm });
    }
    let n = r.dim();
    let mut q = eig.eigenvectors.adjoint();
    for i in 0..n {
        let s = eig.eigenvalues[i].max(0.0).sqrt();
        q.row_mut(i).scale_mut(s);
    }
    Ok(q)
}

/// Cholesky whitening of a positive definite matrix `A = L Lᴴ`.
#[derive(Debug, Clone)]
pub struct Whitener {
    chol: Cholesky<Complex64, Dyn>,
}

/// Cholesky factor of a Hermitian positive definite matrix, `None` otherwise.
///
/// nalgebra's complex Cholesky takes complex square roots of the pivots and
/// so "succeeds" on indefinite input; the pivots are checked here.
pub fn pd_cholesky(m: &ComplexMatrix) -> Option<Cholesky<Complex64, Dyn>> {
    let chol = Cholesky::new(m.clone())?;
    let l = chol.l_dirty();
    (0..m.nrows())
        .all(|i| {
            let d = l[(i, i)];
            // a negative pivot shows up as a (nearly) imaginary square root
            d.re > d.im.abs() && d.re.is_finite()
        })
        .then_some(chol)
}

impl Whitener {
    pub fn new(a: &HermitianMatrix) -> Result<Self> {
        pd_cholesky(&a.m)
            .map(|chol| Self { chol })
            .ok_or_else(|| Error::InvalidInput("matrix is not positive definite".into()))
    }

    /// `L⁻¹ B L⁻ᴴ`
    pub fn congruence(&self, b: &HermitianMatrix) -> HermitianMatrix {
        let l = self.chol.l_dirty();
        let x = l.solve_lower_triangular(&b.m).expect("nonsingular factor");
        let y = l
            .solve_lower_triangular(&x.adjoint())
            .expect("nonsingular factor");
        HermitianMatrix::from_raw(y)
    }

    /// `L⁻ᴴ u`, mapping a whitened vector back.
    pub fn unwhiten(&self, u: &ComplexVector) -> ComplexVector {
        self.chol
            .l_dirty()
            .adjoint()
            .solve_upper_triangular(u)
            .expect("nonsingular factor")
    }

    /// `A⁻¹ b`
    pub fn solve(&self, b: &ComplexVector) -> ComplexVector {
        self.chol.solve(b)
    }
}

/// Largest eigenvalue of `A⁻¹B` (algebraically largest when `B` is
/// indefinite) and its eigenvector, unit norm with the [`principal_eigvec`]
/// conventions applied in the whitened coordinates.
pub fn principal_gen_eig(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<(f64, BeamWeights)> {
    check_same_dim(a, b)?;
    let wh = Whitener::new(a)?;
    let c = wh.congruence(b);
    let eig = eig_hermitian(&c);
    let u = principal_of(&eig);
    let mut v = wh.unwhiten(u.as_vector());
    let norm = v.norm();
    v /= c64(norm, 0.0);
    fix_phase(&mut v);
    Ok((eig.max_eigenvalue(), BeamWeights(v)))
}

/// `λmax{A⁻¹B}` for positive definite `A` and PSD `B`, computed by
/// Cholesky whitening and a Hermitian eigendecomposition.
pub fn max_gen_eig(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<f64> {
    check_same_dim(a, b)?;
    let wh = Whitener::new(a)?;
    let eig = eig_hermitian(&wh.congruence(b));
    Ok(eig.max_eigenvalue().max(0.0))
}

pub(crate) fn check_same_dim(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_hermitian, random_psd, rng};

    #[test]
    fn identity_eigenvalues() {
        let eig = eig_hermitian(&HermitianMatrix::identity(3));
        for l in eig.eigenvalues.iter() {
            assert!((l - 1.0).abs() < 1e-15);
        }
        let vhv = eig.eigenvectors.adjoint() * &eig.eigenvectors;
        assert!((vhv - ComplexMatrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn diagonal_eigenvalues_ascending() {
        let eig = eig_hermitian(&HermitianMatrix::from_diagonal(&[2.0, -1.0]));
        assert_eq!(eig.eigenvalues.as_slice(), &[-1.0, 2.0]);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = ComplexMatrix::identity(2, 2);
        m[(0, 1)] = c64(1.0, 0.0);
        assert!(matches!(
            HermitianMatrix::new(m),
            Err(Error::InvalidInput(_))
        ));
        assert!(HermitianMatrix::new(ComplexMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn trace_equals_eigenvalue_sum_and_reconstruction() {
        let mut r = rng(11);
        for n in 1..=12 {
            let a = random_hermitian(&mut r, n);
            let eig = eig_hermitian(&a);
            let sum: f64 = eig.eigenvalues.iter().sum();
            let tr: f64 = (0..n).map(|i| a.as_matrix()[(i, i)].re).sum();
            assert!((sum - tr).abs() <= 1e-9 * tr.abs().max(a.norm()));
            assert!((eig.reconstruct() - a.as_matrix()).norm() <= 1e-9 * a.norm());
            let vhv = eig.eigenvectors.adjoint() * &eig.eigenvectors;
            assert!((vhv - ComplexMatrix::identity(n, n)).norm() < 1e-10);
            for w in eig.eigenvalues.as_slice().windows(2) {
                assert!(w[0] <= w[1]);
            }
        }
    }

    #[test]
    fn jacobi_agrees_with_primary_route() {
        let mut r = rng(12);
        for n in [2, 5, 9, 16] {
            let a = random_hermitian(&mut r, n);
            let e1 = eig_hermitian(&a);
            let e2 = eig_hermitian_jacobi(&a);
            assert!((&e1.eigenvalues - &e2.eigenvalues).amax() < 1e-11 * a.norm());
            assert!((e2.reconstruct() - a.as_matrix()).norm() <= 1e-11 * a.norm());
        }
    }

    #[test]
    fn principal_of_diagonal() {
        let v = principal_eigvec(&HermitianMatrix::from_diagonal(&[1.0, 3.0, 2.0]));
        let expect = ComplexVector::from_vec(vec![c64(0.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)]);
        assert!((v.as_vector() - expect).norm() < 1e-12);
    }

    #[test]
    fn principal_of_identity_is_first_basis_vector() {
        for m in [2, 5, 10] {
            let v = principal_eigvec(&HermitianMatrix::identity(m));
            assert!((v.as_vector()[0] - c64(1.0, 0.0)).norm() < 1e-12, "m = {m}");
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn principal_of_rank_one_recovers_vector() {
        let mut r = rng(13);
        for n in [2, 6, 10] {
            let v = crate::random::random_vector(&mut r, n);
            let a = HermitianMatrix::outer(&v);
            let p = principal_eigvec(&a);
            let overlap = p.as_vector().dotc(&v).norm() / v.norm();
            assert!(overlap >= 1.0 - 1e-9);
            // phase convention: first entry real positive
            assert!(p.as_vector()[0].im.abs() < 1e-12 && p.as_vector()[0].re > 0.0);
        }
    }

    #[test]
    fn sqrt_factor_identity_and_rank_deficient() {
        let q = psd_sqrt_factor(&HermitianMatrix::identity(4)).unwrap();
        assert!((q.adjoint() * &q - ComplexMatrix::identity(4, 4)).norm() < 1e-12);
        let d = HermitianMatrix::from_diagonal(&[4.0, 0.0]);
        let q = psd_sqrt_factor(&d).unwrap();
        assert!((q.adjoint() * &q - d.as_matrix()).norm() < 1e-12);
    }

    #[test]
    fn sqrt_factor_rejects_indefinite() {
        let d = HermitianMatrix::from_diagonal(&[1.0, -0.5]);
        assert!(matches!(psd_sqrt_factor(&d), Err(Error::NotPsd { .. })));
        // tiny negative values are clipped instead
        let d = HermitianMatrix::from_diagonal(&[1.0, -1e-12]);
        assert!(psd_sqrt_factor(&d).is_ok());
    }

    #[test]
    fn sqrt_factor_round_trip_many() {
        let mut r = rng(14);
        for i in 0..1000 {
            let n = 2 + i % 19;
            let rank = 1 + i % n;
            let p = crate::random::random_psd_rank(&mut r, n, rank);
            let q = psd_sqrt_factor(&p).unwrap();
            let err = (q.adjoint() * &q - p.as_matrix()).norm();
            assert!(err <= 1e-9 * p.norm(), "n={n} err={err:e}");
        }
    }

    #[test]
    fn gen_eig_simple_cases() {
        let b = HermitianMatrix::from_diagonal(&[1.0, 5.0]);
        assert!((max_gen_eig(&HermitianMatrix::identity(2), &b).unwrap() - 5.0).abs() < 1e-12);
        let a = HermitianMatrix::identity(3).scaled(2.0);
        assert!((max_gen_eig(&a, &HermitianMatrix::identity(3)).unwrap() - 0.5).abs() < 1e-12);
        let not_pd = HermitianMatrix::from_diagonal(&[1.0, 0.0]);
        assert!(matches!(
            max_gen_eig(&not_pd, &b),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn gen_eig_matches_rayleigh_quotient_oracle() {
        let mut r = rng(15);
        for n in [2, 4, 7] {
            let a = random_psd(&mut r, n).add_identity(0.5);
            let b = random_psd(&mut r, n);
            let got = max_gen_eig(&a, &b).unwrap();
            let oracle = crate::oracle::rayleigh_max_gen_eig(&a, &b, 4000, 19);
            assert!(
                (got - oracle).abs() <= 1e-8 * oracle.abs(),
                "{got} vs {oracle}"
            );
            for c in [0.1, 10.0] {
                let scaled = max_gen_eig(&a, &b.scaled(c)).unwrap();
                assert!((scaled - c * got).abs() <= 1e-10 * c * got);
            }
        }
    }
}
