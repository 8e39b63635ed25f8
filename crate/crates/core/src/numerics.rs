//! Dense linear-algebra kernels.
//!
//! Everything here works on small dense matrices (a few hundred rows at most).
//! Symmetric eigendecompositions are delegated to `nalgebra` and then normalised:
//! values sorted in descending order, vector signs fixed so that the first
//! significant entry is positive. A cyclic Jacobi eigensolver is kept as an
//! independent reference for cross-checks.
//!
//! Singular values come from a one-sided Jacobi iteration instead of `nalgebra`'s
//! bidiagonal SVD, which returns wrong factors for some exactly rank-deficient
//! inputs (the 5x5 all-ones matrix among them). Jacobi is also accurate for the tiny
//! singular values that decide condition numbers.

use nalgebra::{ComplexField, DMatrix, DVector, SymmetricEigen};

use crate::error::{dim_mismatch, invalid, Error, Result};

pub type Complex64 = nalgebra::Complex<f64>;
pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Singular values below `DEFAULT_RANK_TOL * sigma_max` are treated as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

const SYMMETRY_TOL: f64 = 1e-12;

/// A real symmetric matrix. Construction validates finiteness and symmetry and
/// stores the exactly symmetrised matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RealSymMatrix(DMatrix<f64>);

impl RealSymMatrix {
    /// Accepts `m` if it is square, finite and symmetric to within `1e-12`
    /// relative to its largest entry. The stored value is `(m + m^T) / 2`.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(dim_mismatch(format!(
                "symmetric matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        check_finite(&m)?;
        let scale = m.amax().max(1.0);
        let n = m.nrows();
        for j in 0..n {
            for i in (j + 1)..n {
                let gap = (m[(i, j)] - m[(j, i)]).abs();
                if gap > SYMMETRY_TOL * scale {
                    return Err(Error::NotSymmetric {
                        row: i,
                        col: j,
                        gap,
                    });
                }
            }
        }
        Ok(Self::symmetrized(m))
    }

    /// Builds the matrix from `f(i, j)` evaluated on the lower triangle.
    pub fn from_lower_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            for i in j..n {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self(m)
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    /// `x x^T`.
    pub fn outer(x: &[f64]) -> Self {
        Self::from_lower_fn(x.len(), |i, j| x[i] * x[j])
    }

    /// Symmetrises without validation. Callers guarantee the input is square.
    pub(crate) fn symmetrized(mut m: DMatrix<f64>) -> Self {
        let n = m.nrows();
        for j in 0..n {
            for i in (j + 1)..n {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// Frobenius inner product `tr(A B)`.
    pub fn inner(&self, other: &RealSymMatrix) -> f64 {
        self.0.dot(&other.0)
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    /// `x^T A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let n = self.dim();
        assert_eq!(x.len(), n, "quadratic form dimension");
        let mut acc = 0.0;
        for j in 0..n {
            let mut col = 0.0;
            for (i, xi) in x.iter().enumerate() {
                col += self.0[(i, j)] * xi;
            }
            acc += col * x[j];
        }
        acc
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.0.diagonal().iter().copied().collect()
    }
}

impl AsRef<DMatrix<f64>> for RealSymMatrix {
    fn as_ref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Eigenpairs of a symmetric matrix, eigenvalues in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct EigDecomposition {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, matching `values`.
    pub vectors: DMatrix<f64>,
}

impl EigDecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `U diag(f(lambda)) U^T`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for (k, &lambda) in self.values.iter().enumerate() {
            let s = f(lambda);
            scaled.column_mut(k).scale_mut(s);
        }
        let mut out = DMatrix::zeros(n, n);
        out.gemm(1.0, &scaled, &self.vectors.transpose(), 0.0);
        out
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.reconstruct_with(|l| l)
    }

    pub fn min_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(f64::NAN)
    }
}

/// Symmetric eigendecomposition.
pub fn sym_eig(a: &RealSymMatrix) -> Result<EigDecomposition> {
    check_finite(a.as_matrix())?;
    let eig = SymmetricEigen::new(a.as_matrix().clone());
    let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    Ok(sorted_eig(values, eig.eigenvectors))
}

/// Cyclic Jacobi eigensolver. Slow, but shares no code with [`sym_eig`].
pub fn jacobi_eig(a: &RealSymMatrix) -> Result<EigDecomposition> {
    check_finite(a.as_matrix())?;
    let n = a.dim();
    let mut m = a.as_matrix().clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = m.norm().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for j in 0..n {
            for i in 0..j {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                // signum(0.0) == 1.0, so theta == 0 yields a 45 degree rotation.
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let values = (0..n).map(|i| m[(i, i)]).collect();
    Ok(sorted_eig(values, v))
}

fn sorted_eig(values: Vec<f64>, vectors: DMatrix<f64>) -> EigDecomposition {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort: ties keep their original index order.
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut sorted_vectors = DMatrix::zeros(vectors.nrows(), n);
    let mut sorted_values = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        sorted_values.push(values[src]);
        let mut col = vectors.column(src).into_owned();
        fix_sign_real(col.as_mut_slice());
        sorted_vectors.set_column(dst, &col);
    }
    EigDecomposition {
        values: sorted_values,
        vectors: sorted_vectors,
    }
}

/// Flips `v` so that its first significant entry is positive.
pub(crate) fn fix_sign_real(v: &mut [f64]) {
    let peak = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if peak == 0.0 {
        return;
    }
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-10 * peak) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Singular value decomposition `M = U diag(sigma) V^H`, singular values descending.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdDecomposition<T: ComplexField<RealField = f64>> {
    pub singular_values: Vec<f64>,
    /// Left singular vectors as columns (thin).
    pub u: DMatrix<T>,
    /// Conjugate transpose of the right singular vectors (thin).
    pub v_t: DMatrix<T>,
}

impl<T: ComplexField<RealField = f64>> SvdDecomposition<T> {
    pub fn reconstruct(&self) -> DMatrix<T> {
        let mut us = self.u.clone();
        for (k, &s) in self.singular_values.iter().enumerate() {
            us.column_mut(k).scale_mut(s);
        }
        us * &self.v_t
    }

    /// Number of singular values at or above `rank_tol * sigma_max`.
    pub fn numerical_rank(&self, rank_tol: f64) -> usize {
        let top = self.singular_values.first().copied().unwrap_or(0.0);
        if top == 0.0 {
            return 0;
        }
        self.singular_values
            .iter()
            .take_while(|&&s| s >= rank_tol * top)
            .count()
    }
}

/// Sweeps of the one-sided Jacobi SVD before giving up.
const SVD_MAX_SWEEPS: usize = 80;

/// Thin SVD of a real or complex matrix by one-sided (Hestenes) Jacobi rotations.
pub fn svd<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> Result<SvdDecomposition<T>> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].clone().is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    if m.nrows() < m.ncols() {
        // M^H = U S V^H  gives  M = V S U^H.
        let t = svd(&m.adjoint())?;
        return Ok(SvdDecomposition {
            singular_values: t.singular_values,
            u: t.v_t.adjoint(),
            v_t: t.u.adjoint(),
        });
    }
    let (rows, k) = (m.nrows(), m.ncols());
    if k == 0 {
        return Ok(SvdDecomposition {
            singular_values: Vec::new(),
            u: DMatrix::zeros(rows, 0),
            v_t: DMatrix::zeros(0, 0),
        });
    }
    let mut a = m.clone();
    let mut v = DMatrix::<T>::identity(k, k);
    // Pairs whose inner product is below roundoff of the whole matrix are
    // left alone, otherwise columns already reduced to noise rotate forever.
    let floor = f64::EPSILON * f64::EPSILON * m.norm_squared();
    let mut converged = false;
    for _sweep in 0..SVD_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..k {
            for q in (p + 1)..k {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dotc(&a.column(q));
                let g = gamma.clone().modulus();
                if g <= floor || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // Rotate a_p against e^{-i phi} a_q, where gamma = |gamma| e^{i phi}.
                let phase = gamma.unscale(g).conjugate();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut a, p, q, phase.clone(), c, s);
                rotate_columns(&mut v, p, q, phase, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numerical("Jacobi SVD did not converge".into()));
    }

    let norms: Vec<f64> = (0..k).map(|j| a.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let top = norms[order[0]];
    let mut u = DMatrix::<T>::zeros(rows, k);
    let mut v_sorted = DMatrix::<T>::zeros(k, k);
    let mut values = Vec::with_capacity(k);
    let mut filled = 0;
    for (dst, &src) in order.iter().enumerate() {
        let sigma = norms[src];
        values.push(sigma);
        v_sorted.set_column(dst, &v.column(src));
        // Columns with (numerically) zero norm carry no direction; they are
        // replaced by an orthonormal completion below.
        if sigma > 0.0 && sigma > top * f64::EPSILON * rows as f64 {
            u.set_column(dst, &a.column(src).unscale(sigma));
            filled = dst + 1;
        }
    }
    complete_orthonormal(&mut u, filled);
    Ok(SvdDecomposition {
        singular_values: values,
        u,
        v_t: v_sorted.adjoint(),
    })
}

/// `(x_p, x_q) <- (c x_p - s w x_q, s x_p + c w x_q)` with the unit phase `w`.
fn rotate_columns<T: ComplexField<RealField = f64>>(
    x: &mut DMatrix<T>,
    p: usize,
    q: usize,
    w: T,
    c: f64,
    s: f64,
) {
    for i in 0..x.nrows() {
        let xp = x[(i, p)].clone();
        let xq = x[(i, q)].clone() * w.clone();
        x[(i, p)] = xp.clone().scale(c) - xq.clone().scale(s);
        x[(i, q)] = xp.scale(s) + xq.scale(c);
    }
}

/// Replaces columns `filled..` of `u` by unit vectors orthogonal to all earlier
/// columns, drawn from the standard basis by Gram-Schmidt.
fn complete_orthonormal<T: ComplexField<RealField = f64>>(u: &mut DMatrix<T>, filled: usize) {
    let rows = u.nrows();
    let mut next_basis = 0;
    for col in filled..u.ncols() {
        while next_basis < rows {
            let mut e = DVector::<T>::zeros(rows);
            e[next_basis] = T::one();
            next_basis += 1;
            for _pass in 0..2 {
                for j in 0..col {
                    let proj = u.column(j).dotc(&e);
                    e -= u.column(j) * proj;
                }
            }
            let norm = e.norm();
            if norm > 1e-8 {
                u.set_column(col, &e.unscale(norm));
                break;
            }
        }
    }
}

/// Applies the truncated pseudoinverse `M^+ y`. Singular values below
/// `rank_tol * sigma_max` are discarded; the all-zero matrix maps every `y` to zero.
pub fn pseudoinverse_apply<T: ComplexField<RealField = f64>>(
    m: &DMatrix<T>,
    y: &DVector<T>,
    rank_tol: f64,
) -> Result<DVector<T>> {
    if !(rank_tol > 0.0) {
        return Err(invalid(format!(
            "rank_tol must be positive, got {rank_tol}"
        )));
    }
    if y.len() != m.nrows() {
        return Err(dim_mismatch(format!(
            "pseudoinverse: matrix has {} rows, vector has {} entries",
            m.nrows(),
            y.len()
        )));
    }
    let dec = svd(m)?;
    let rank = dec.numerical_rank(rank_tol);
    let mut x = DVector::<T>::zeros(m.ncols());
    for k in 0..rank {
        let coeff = dec.u.column(k).dotc(y).unscale(dec.singular_values[k]);
        // Rows of v_t are v_k^H, so v_k = conj(row)^T.
        for j in 0..m.ncols() {
            x[j] += dec.v_t[(k, j)].clone().conjugate() * coeff.clone();
        }
    }
    Ok(x)
}

/// How [`condition_number`] treats singular values dropped by the rank tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankMode {
    /// Any dropped singular value makes the matrix singular: returns `+inf`.
    Full,
    /// Ratio of the largest to the smallest retained (nonzero) singular value.
    Nonzero,
}

/// `sigma_max / sigma_min` over singular values at or above `rank_tol * sigma_max`.
pub fn condition_number<T: ComplexField<RealField = f64>>(
    m: &DMatrix<T>,
    rank_tol: f64,
    mode: RankMode,
) -> Result<f64> {
    if !(rank_tol > 0.0) {
        return Err(invalid(format!(
            "rank_tol must be positive, got {rank_tol}"
        )));
    }
    let dec = svd(m)?;
    let top = dec.singular_values.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let rank = dec.numerical_rank(rank_tol);
    if mode == RankMode::Full && rank < dec.singular_values.len() {
        return Ok(f64::INFINITY);
    }
    Ok(top / dec.singular_values[rank - 1])
}

pub(crate) fn check_finite(m: &DMatrix<f64>) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(n: usize, seed: u64) -> RealSymMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        RealSymMatrix::from_lower_fn(n, |_, _| rng.random_range(-1.0..1.0))
    }

    fn hadamard4() -> DMatrix<f64> {
        DMatrix::from_row_slice(
            4,
            4,
            &[
                1., 1., 1., 1., 1., -1., 1., -1., 1., 1., -1., -1., 1., -1., -1., 1.,
            ],
        )
    }

    #[test]
    fn identity_eigenvalues() {
        let eig = sym_eig(&RealSymMatrix::identity(3)).unwrap();
        assert_eq!(eig.values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn analytic_two_by_two() {
        let a = RealSymMatrix::new(DMatrix::from_row_slice(2, 2, &[2., 1., 1., 2.])).unwrap();
        for eig in [sym_eig(&a).unwrap(), jacobi_eig(&a).unwrap()] {
            assert!((eig.values[0] - 3.0).abs() < 1e-14);
            assert!((eig.values[1] - 1.0).abs() < 1e-14);
            let h = std::f64::consts::FRAC_1_SQRT_2;
            assert!((eig.vectors[(0, 0)] - h).abs() < 1e-14);
            assert!((eig.vectors[(1, 0)] - h).abs() < 1e-14);
            assert!((eig.vectors[(0, 1)] - h).abs() < 1e-14);
            assert!((eig.vectors[(1, 1)] + h).abs() < 1e-14);
        }
    }

    #[test]
    fn reconstruction_random_50() {
        let a = random_sym(50, 11);
        let eig = sym_eig(&a).unwrap();
        let err = (eig.reconstruct() - a.as_matrix()).norm() / a.frobenius_norm();
        assert!(err <= 1e-9, "relative reconstruction error {err:e}");
        let gram = eig.vectors.transpose() * &eig.vectors;
        let orth = (gram - DMatrix::identity(50, 50)).norm();
        assert!(orth <= 1e-9 * (50f64).sqrt());
        assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn jacobi_matches_library_eigenvalues() {
        let a = random_sym(30, 3);
        let lib = sym_eig(&a).unwrap();
        let jac = jacobi_eig(&a).unwrap();
        for (x, y) in lib.values.iter().zip(&jac.values) {
            assert!((x - y).abs() < 1e-10);
        }
        let err = (jac.reconstruct() - a.as_matrix()).norm() / a.frobenius_norm();
        assert!(err < 1e-12);
    }

    #[test]
    fn rejects_non_finite_and_asymmetric() {
        let mut m = DMatrix::<f64>::identity(3, 3);
        m[(1, 2)] = f64::NAN;
        assert!(matches!(
            RealSymMatrix::new(m),
            Err(Error::NonFinite { .. })
        ));
        let mut m = DMatrix::<f64>::identity(3, 3);
        m[(0, 2)] = 0.5;
        assert!(matches!(
            RealSymMatrix::new(m),
            Err(Error::NotSymmetric { .. })
        ));
        let m = DMatrix::from_element(2, 3, 1.0);
        assert!(svd(&m.map(|x: f64| x / 0.0)).is_err());
    }

    #[test]
    fn svd_identity_and_hadamard() {
        let i4 = DMatrix::<f64>::identity(4, 4);
        assert!(svd(&i4)
            .unwrap()
            .singular_values
            .iter()
            .all(|&s| (s - 1.0).abs() < 1e-14));
        let h = hadamard4();
        let dec = svd(&h).unwrap();
        assert!(dec.singular_values.iter().all(|&s| (s - 2.0).abs() < 1e-13));
        assert!(
            (condition_number(&h, DEFAULT_RANK_TOL, RankMode::Full).unwrap() - 1.0).abs() < 1e-12
        );
        assert_eq!(
            condition_number(&i4, DEFAULT_RANK_TOL, RankMode::Full).unwrap(),
            1.0
        );
    }

    #[test]
    fn svd_matches_gram_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = DMatrix::from_fn(15, 30, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 });
        let dec = svd(&m).unwrap();
        let gram = RealSymMatrix::new(&m * m.transpose()).unwrap();
        let eig = jacobi_eig(&gram).unwrap();
        for (s, l) in dec.singular_values.iter().zip(&eig.values) {
            assert!((s - l.sqrt()).abs() < 1e-8, "{s} vs {}", l.sqrt());
        }
        let err = (dec.reconstruct() - &m).norm() / m.norm();
        assert!(err < 1e-9);
    }

    #[test]
    fn complex_svd_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = ComplexMatrix::from_fn(7, 4, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let dec = svd(&m).unwrap();
        let err = (dec.reconstruct() - &m).norm() / m.norm();
        assert!(err < 1e-12);
        assert!(dec.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn rank_one_svd_is_exact() {
        for n in [5usize, 7, 22, 32] {
            let m = ComplexMatrix::from_element(n, n, Complex64::new(-1.0, 0.0));
            let dec = svd(&m).unwrap();
            assert!((dec.singular_values[0] - n as f64).abs() < 1e-10);
            assert!(dec.singular_values[1..].iter().all(|s| s.abs() < 1e-10));
            assert!((dec.reconstruct() - &m).norm() < 1e-10 * n as f64);
        }
        let wide = ComplexMatrix::from_fn(3, 6, |i, j| Complex64::new(((i * j) % 3) as f64, 0.0));
        let dec = svd(&wide).unwrap();
        assert!((dec.reconstruct() - &wide).norm() < 1e-10);
    }

    #[test]
    fn truncated_condition_number_is_infinite() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![10.0, 1.0, 1e-14]));
        assert_eq!(
            condition_number(&m, 1e-10, RankMode::Full).unwrap(),
            f64::INFINITY
        );
        assert!((condition_number(&m, 1e-10, RankMode::Nonzero).unwrap() - 10.0).abs() < 1e-12);
        assert_eq!(
            condition_number(&DMatrix::<f64>::zeros(3, 3), 1e-10, RankMode::Full),
            Err(Error::ZeroMatrix)
        );
    }

    #[test]
    fn pseudoinverse_cases() {
        let y = DVector::from_vec(vec![0.5, -2.0, 7.0]);
        let x = pseudoinverse_apply(&DMatrix::<f64>::identity(3, 3), &y, DEFAULT_RANK_TOL).unwrap();
        assert!((x - &y).norm() < 1e-14);

        let m = DMatrix::<f64>::identity(3, 3) * 2.0;
        let x = pseudoinverse_apply(&m, &DVector::from_vec(vec![2., 4., 6.]), DEFAULT_RANK_TOL)
            .unwrap();
        assert!((x - DVector::from_vec(vec![1., 2., 3.])).norm() < 1e-14);

        let zero = DMatrix::<f64>::zeros(4, 2);
        let x =
            pseudoinverse_apply(&zero, &DVector::from_element(4, 1.0), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(x, DVector::zeros(2));

        assert!(pseudoinverse_apply(&m, &y, 0.0).is_err());
    }

    #[test]
    fn pseudoinverse_recovers_full_column_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let m = DMatrix::from_fn(30, 10, |_, _| rng.random_range(-1.0..1.0));
        let x = DVector::from_fn(10, |_, _| rng.random_range(-1.0..1.0));
        let got = pseudoinverse_apply(&m, &(&m * &x), DEFAULT_RANK_TOL).unwrap();
        assert!((got - x).norm() < 1e-8);
    }
}
