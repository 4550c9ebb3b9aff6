//! Dense complex linear algebra on small matrices.
//!
//! Everything here works on [`ComplexMatrix`], a row-major dense matrix of
//! `Complex64`. Dimensions in this crate stay below a few dozen, so there is
//! no sparse path and no attempt at cache blocking. Hermitian eigensolves are
//! delegated to `nalgebra`; everything else is written out directly.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

/// Gap below which neighbouring eigenvalues are treated as one degenerate cluster.
pub const DEGENERACY_GAP: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("matrix is not positive semidefinite (minimum eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("basis is not orthonormal (max deviation {deviation:.3e})")]
    NotOrthonormal { deviation: f64 },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("matrix is singular")]
    Singular,
}

/// Numerical tolerances shared by every validation in the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceConfig {
    pub hermiticity_tol: f64,
    /// Smallest admissible eigenvalue is `-psd_tol`.
    pub psd_tol: f64,
    /// Max-abs entrywise tolerance for equality checks.
    pub equality_tol: f64,
    /// Eigenvalues below this count as kernel.
    pub support_tol: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            hermiticity_tol: 1e-9,
            psd_tol: 1e-9,
            equality_tol: 1e-10,
            support_tol: 1e-10,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<(), LinalgError> {
        let all = [self.hermiticity_tol, self.psd_tol, self.equality_tol, self.support_tol];
        if all.iter().all(|t| t.is_finite() && *t > 0.0) {
            Ok(())
        } else {
            Err(LinalgError::DimensionMismatch(
                "tolerances must be finite and strictly positive".into(),
            ))
        }
    }
}

/// Dense complex matrix stored in row-major order.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major entries, rejecting NaN/Inf.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Real matrix from nested rows. Panics on ragged input; meant for literals.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == m), "ragged rows");
        Self::from_fn(n, m, |r, c| Complex64::new(rows[r][c], 0.0))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |r, c| {
            if r == c {
                Complex64::new(diag[r], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Column vector from amplitudes.
    pub fn column(v: &[Complex64]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    /// Computational basis ket `|index⟩` in dimension `dim`.
    pub fn basis_ket(dim: usize, index: usize) -> Self {
        let mut m = Self::zeros(dim, 1);
        m[(index, 0)] = Complex64::new(1.0, 0.0);
        m
    }

    /// `|u⟩⟨v|` for column vectors `u`, `v`.
    pub fn outer(u: &ComplexMatrix, v: &ComplexMatrix) -> Self {
        debug_assert!(u.cols == 1 && v.cols == 1);
        Self::from_fn(u.rows, v.rows, |r, c| u.data[r] * v.data[c].conj())
    }

    pub fn projector(v: &ComplexMatrix) -> Self {
        Self::outer(v, v)
    }

    pub fn pauli_x() -> Self {
        Self::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    pub fn pauli_y() -> Self {
        let i = Complex64::new(0.0, 1.0);
        Self::from_fn(2, 2, |r, c| match (r, c) {
            (0, 1) => -i,
            (1, 0) => i,
            _ => Complex64::new(0.0, 0.0),
        })
    }

    pub fn pauli_z() -> Self {
        Self::from_diagonal(&[1.0, -1.0])
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_complex(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// `Re tr(self · other)`; for Hermitian arguments this is the Hilbert-Schmidt product.
    pub fn trace_product_re(&self, other: &ComplexMatrix) -> f64 {
        debug_assert_eq!(self.cols, other.rows);
        debug_assert_eq!(self.rows, other.cols);
        let mut acc = 0.0;
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                let b = other.data[k * other.cols + r];
                acc += a.re * b.re - a.im * b.im;
            }
        }
        acc
    }

    /// Hilbert-Schmidt inner product `tr(self† · other)`.
    pub fn hs_inner(&self, other: &ComplexMatrix) -> Complex64 {
        debug_assert_eq!(self.shape(), other.shape());
        self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Max-abs entrywise difference. Shapes must agree.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape(), "shape mismatch in max_abs_diff");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &ComplexMatrix, tol: f64) -> bool {
        self.shape() == other.shape() && self.max_abs_diff(other) <= tol
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut dev: f64 = 0.0;
        for r in 0..self.rows {
            for c in r..self.cols {
                dev = dev.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        dev
    }

    /// `(M + M†)/2`.
    pub fn hermitian_part(&self) -> Self {
        assert!(self.is_square());
        Self::from_fn(self.rows, self.cols, |r, c| (self[(r, c)] + self[(c, r)].conj()) * 0.5)
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "matmul shape mismatch: {}x{} · {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// `self · x · self†`.
    pub fn sandwich(&self, x: &ComplexMatrix) -> Self {
        self.matmul(x).matmul(&self.adjoint())
    }

    /// Row-major flattening into a column vector.
    pub fn vectorize(&self) -> Self {
        Self::column(&self.data)
    }

    /// Inverse of [`vectorize`](Self::vectorize).
    pub fn unvectorize(v: &ComplexMatrix, rows: usize, cols: usize) -> Result<Self, LinalgError> {
        if v.cols != 1 || v.rows != rows * cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "cannot reshape {}x{} into {rows}x{cols}",
                v.rows, v.cols
            )));
        }
        Ok(Self {
            rows,
            cols,
            data: v.data.clone(),
        })
    }

    pub fn column_vector(&self, c: usize) -> Self {
        Self::from_fn(self.rows, 1, |r, _| self[(r, c)])
    }

    pub fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<Complex64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)])
    }

    fn check_hermitian(&self, cfg: &ToleranceConfig) -> Result<(), LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::DimensionMismatch(format!(
                "expected a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        if !self.is_finite() {
            return Err(LinalgError::NonFinite);
        }
        let deviation = self.hermiticity_deviation();
        if deviation > cfg.hermiticity_tol {
            return Err(LinalgError::NotHermitian { deviation });
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.shape(), rhs.shape(), "shape mismatch in add");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.shape(), rhs.shape(), "shape mismatch in sub");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale(-1.0)
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        assert_eq!(self.shape(), rhs.shape(), "shape mismatch in add_assign");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl SubAssign<&ComplexMatrix> for ComplexMatrix {
    fn sub_assign(&mut self, rhs: &ComplexMatrix) {
        assert_eq!(self.shape(), rhs.shape(), "shape mismatch in sub_assign");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a -= b;
        }
    }
}

impl ComplexMatrix {
    /// `self += s · other`
    pub fn add_scaled(&mut self, other: &ComplexMatrix, s: Complex64) {
        assert_eq!(self.shape(), other.shape(), "shape mismatch in add_scaled");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }
}

/// Which factor of a bipartite space to keep in [`partial_trace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    ComplexMatrix::from_fn(ra * rb, ca * cb, |r, c| a[(r / rb, c / cb)] * b[(r % rb, c % cb)])
}

/// Partial trace over one factor of `ℂ^{d_a} ⊗ ℂ^{d_b}`, keeping `keep`.
pub fn partial_trace(
    m: &ComplexMatrix,
    (d_a, d_b): (usize, usize),
    keep: Subsystem,
) -> Result<ComplexMatrix, LinalgError> {
    let n = d_a * d_b;
    if m.rows() != n || m.cols() != n {
        return Err(LinalgError::DimensionMismatch(format!(
            "partial trace of a {}x{} matrix over {d_a}x{d_b}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(match keep {
        Subsystem::B => ComplexMatrix::from_fn(d_b, d_b, |i, j| (0..d_a).map(|k| m[(k * d_b + i, k * d_b + j)]).sum()),
        Subsystem::A => ComplexMatrix::from_fn(d_a, d_a, |i, j| (0..d_b).map(|k| m[(i * d_b + k, j * d_b + k)]).sum()),
    })
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Sorted in descending order.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, aligned with `eigenvalues`.
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn vector(&self, i: usize) -> ComplexMatrix {
        self.eigenvectors.column_vector(i)
    }

    /// `Σ f(λ_i) v_i v_i†`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.eigenvectors.rows();
        let mut out = ComplexMatrix::zeros(n, n);
        for (i, &lam) in self.eigenvalues.iter().enumerate() {
            let w = f(lam);
            if w == 0.0 {
                continue;
            }
            let v = self.vector(i);
            out.add_scaled(&ComplexMatrix::projector(&v), Complex64::new(w, 0.0));
        }
        out
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }
}

/// Eigenvalues only, ascending, of the Hermitian part of `m`. No validation.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    if m.rows() == 1 {
        return vec![m[(0, 0)].re];
    }
    let eig = SymmetricEigen::new(m.hermitian_part().to_nalgebra());
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Hermitian eigen-decomposition with a reproducible eigenbasis.
///
/// Eigenvalues come out in descending order. Inside each degenerate cluster
/// (neighbouring gap below [`DEGENERACY_GAP`]) the basis is rebuilt from the
/// cluster projector by pivoted Gram-Schmidt on the computational basis, so
/// the result depends only on the eigenspace and not on the solver's choice.
/// Every eigenvector is phase-fixed so that its largest-magnitude component
/// (lowest index on ties) is real positive.
pub fn eig_hermitian(m: &ComplexMatrix, cfg: &ToleranceConfig) -> Result<HermitianEigen, LinalgError> {
    m.check_hermitian(cfg)?;
    let n = m.rows();
    let eig = SymmetricEigen::new(m.hermitian_part().to_nalgebra());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let raw: Vec<ComplexMatrix> = order
        .iter()
        .map(|&i| ComplexMatrix::from_fn(n, 1, |r, _| eig.eigenvectors[(r, i)]))
        .collect();

    let mut vectors: Vec<ComplexMatrix> = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && eigenvalues[end - 1] - eigenvalues[end] < DEGENERACY_GAP {
            end += 1;
        }
        if end - start == 1 {
            vectors.push(phase_fixed(&raw[start]));
        } else {
            vectors.extend(canonical_cluster_basis(&raw[start..end]));
        }
        start = end;
    }

    let mut eigenvectors = ComplexMatrix::zeros(n, n);
    for (c, v) in vectors.iter().enumerate() {
        for r in 0..n {
            eigenvectors[(r, c)] = v[(r, 0)];
        }
    }
    Ok(HermitianEigen {
        eigenvalues,
        eigenvectors,
    })
}

fn largest_component(v: &ComplexMatrix) -> usize {
    let mut best = 0;
    let mut best_norm = -1.0;
    for r in 0..v.rows() {
        // Ties within rounding resolve to the lowest index.
        let nr = v[(r, 0)].norm();
        if nr > best_norm + 1e-12 {
            best = r;
            best_norm = nr;
        }
    }
    best
}

fn phase_fixed(v: &ComplexMatrix) -> ComplexMatrix {
    let k = largest_component(v);
    let z = v[(k, 0)];
    if z.norm() == 0.0 {
        return v.clone();
    }
    let phase = z.conj() / z.norm();
    v.scale_complex(phase)
}

fn canonical_cluster_basis(cluster: &[ComplexMatrix]) -> Vec<ComplexMatrix> {
    let n = cluster[0].rows();
    let k = cluster.len();
    let mut proj = ComplexMatrix::zeros(n, n);
    for v in cluster {
        proj += &ComplexMatrix::projector(v);
    }
    // Columns of the projector are the projected computational basis vectors.
    let mut residuals: Vec<ComplexMatrix> = (0..n).map(|i| proj.column_vector(i)).collect();
    let mut basis: Vec<ComplexMatrix> = Vec::with_capacity(k);
    for _ in 0..k {
        let mut pick = 0;
        let mut pick_norm = -1.0;
        for (i, r) in residuals.iter().enumerate() {
            let nr = r.frobenius_norm();
            if nr > pick_norm + 1e-12 {
                pick = i;
                pick_norm = nr;
            }
        }
        let q = residuals[pick].scale(1.0 / pick_norm);
        for r in residuals.iter_mut() {
            let overlap = q.hs_inner(r);
            r.add_scaled(&q, -overlap);
        }
        basis.push(q);
    }
    let mut basis: Vec<ComplexMatrix> = basis.iter().map(phase_fixed).collect();
    basis.sort_by_key(largest_component);
    basis
}

/// Hermitian PSD square root; eigenvalues are clamped at zero before the root.
pub fn sqrt_psd(m: &ComplexMatrix, cfg: &ToleranceConfig) -> Result<ComplexMatrix, LinalgError> {
    let eig = psd_eigen(m, cfg)?;
    Ok(eig.reconstruct_with(|l| l.max(0.0).sqrt()))
}

/// Moore-Penrose inverse square root: `λ^{-1/2}` on the support, zero on the kernel.
pub fn pinv_sqrt_on_support(m: &ComplexMatrix, cfg: &ToleranceConfig) -> Result<ComplexMatrix, LinalgError> {
    let eig = psd_eigen(m, cfg)?;
    let tol = cfg.support_tol;
    Ok(eig.reconstruct_with(|l| if l > tol { l.powf(-0.5) } else { 0.0 }))
}

/// Orthogonal projector onto the support of a PSD matrix.
pub fn support_projector(m: &ComplexMatrix, cfg: &ToleranceConfig) -> Result<ComplexMatrix, LinalgError> {
    let eig = psd_eigen(m, cfg)?;
    let tol = cfg.support_tol;
    Ok(eig.reconstruct_with(|l| if l > tol { 1.0 } else { 0.0 }))
}

/// Eigen-decomposition that additionally rejects matrices below `-psd_tol`.
pub fn psd_eigen(m: &ComplexMatrix, cfg: &ToleranceConfig) -> Result<HermitianEigen, LinalgError> {
    let eig = eig_hermitian(m, cfg)?;
    let min_eigenvalue = eig.min_eigenvalue();
    if min_eigenvalue < -cfg.psd_tol {
        return Err(LinalgError::NotPsd { min_eigenvalue });
    }
    Ok(eig)
}

/// Checks Hermiticity and positivity, reporting the minimum eigenvalue.
pub fn check_psd(m: &ComplexMatrix, cfg: &ToleranceConfig) -> Result<f64, LinalgError> {
    m.check_hermitian(cfg)?;
    let min_eigenvalue = hermitian_eigenvalues(m).first().copied().unwrap_or(0.0);
    if min_eigenvalue < -cfg.psd_tol {
        return Err(LinalgError::NotPsd { min_eigenvalue });
    }
    Ok(min_eigenvalue)
}

/// Transpose of `m` taken in the orthonormal basis given by the columns of `basis`.
///
/// Computes `U (U† m U)ᵀ U†`. Applying it twice returns `m`.
pub fn transpose_in_basis(m: &ComplexMatrix, basis: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    if !m.is_square() || !basis.is_square() || basis.rows() != m.rows() {
        return Err(LinalgError::DimensionMismatch(format!(
            "transpose of {}x{} in a {}x{} basis",
            m.rows(),
            m.cols(),
            basis.rows(),
            basis.cols()
        )));
    }
    let gram = basis.adjoint().matmul(basis);
    let deviation = gram.max_abs_diff(&ComplexMatrix::identity(basis.cols()));
    if deviation > 1e-9 {
        return Err(LinalgError::NotOrthonormal { deviation });
    }
    let coeffs = basis.adjoint().matmul(m).matmul(basis);
    Ok(basis.matmul(&coeffs.transpose()).matmul(&basis.adjoint()))
}

/// Inverse of a square matrix by Gaussian elimination with partial pivoting.
pub fn invert(m: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::DimensionMismatch("inverse of a non-square matrix".into()));
    }
    let lu = m.to_nalgebra().lu();
    lu.try_inverse()
        .map(|inv| ComplexMatrix::from_nalgebra(&inv))
        .ok_or(LinalgError::Singular)
}

/// Condition number in the spectral norm, from singular values.
pub fn condition_number(m: &ComplexMatrix) -> f64 {
    let sv = m.to_nalgebra().singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Lower Cholesky factor of a Hermitian positive definite matrix, if it exists.
pub fn cholesky(m: &ComplexMatrix) -> Option<ComplexMatrix> {
    let n = m.rows();
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d <= 0.0 || !d.is_finite() {
            return None;
        }
        let djj = d.sqrt();
        l[(j, j)] = Complex64::new(djj, 0.0);
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Some(l)
}

/// Inverse of a lower-triangular matrix.
pub fn invert_lower(l: &ComplexMatrix) -> ComplexMatrix {
    let n = l.rows();
    let mut inv = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        inv[(j, j)] = Complex64::new(1.0, 0.0) / l[(j, j)];
        for i in (j + 1)..n {
            let mut s = Complex64::new(0.0, 0.0);
            for k in j..i {
                s += l[(i, k)] * inv[(k, j)];
            }
            inv[(i, j)] = -s / l[(i, i)];
        }
    }
    inv
}

/// Inverse of a Hermitian positive definite matrix via Cholesky.
pub fn invert_hpd(m: &ComplexMatrix) -> Option<ComplexMatrix> {
    let l = cholesky(m)?;
    let linv = invert_lower(&l);
    Some(linv.adjoint().matmul(&linv).hermitian_part())
}

/// Orthonormal basis of the Hermitian `d×d` matrices under the trace inner product.
///
/// Order: diagonal units, then for each `p < q` the symmetric and antisymmetric
/// off-diagonal units.
pub fn hermitian_basis(d: usize) -> Vec<ComplexMatrix> {
    let mut out = Vec::with_capacity(d * d);
    for p in 0..d {
        let mut e = ComplexMatrix::zeros(d, d);
        e[(p, p)] = Complex64::new(1.0, 0.0);
        out.push(e);
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for p in 0..d {
        for q in (p + 1)..d {
            let mut s = ComplexMatrix::zeros(d, d);
            s[(p, q)] = Complex64::new(h, 0.0);
            s[(q, p)] = Complex64::new(h, 0.0);
            out.push(s);
            let mut a = ComplexMatrix::zeros(d, d);
            a[(p, q)] = Complex64::new(0.0, h);
            a[(q, p)] = Complex64::new(0.0, -h);
            out.push(a);
        }
    }
    out
}
