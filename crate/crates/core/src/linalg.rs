//! Dense real matrices and the symmetric eigen machinery behind the Fréchet
//! distance: sample statistics, cyclic Jacobi diagonalization, PSD square
//! roots, and `Tr((A B)^(1/2))` for PSD pairs.

use crate::error::{Error, Result};

/// Tolerance below zero at which an eigenvalue still counts as PSD.
pub const PSD_TOLERANCE: f64 = 1e-8;

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_REL_TOL: f64 = 1e-12;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::dims(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }
        Ok(Matrix { rows, cols, values })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, values: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.values[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::dims("ragged rows"));
        }
        Matrix::new(rows.len(), cols, rows.concat())
    }

    /// Builds without the finiteness check; for internal buffers known to be finite.
    pub(crate) fn from_raw(rows: usize, cols: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), rows * cols);
        Matrix { rows, cols, values }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.values[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.values[c * self.rows + r] = self.values[r * self.cols + c];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::dims(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        gemm(1.0, self, false, other, false, 0.0, &mut out);
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// `c = alpha * op(a) * op(b) + beta * c`, where `op` optionally transposes.
///
/// Shapes are the caller's responsibility and are checked in debug builds.
pub(crate) fn gemm(alpha: f64, a: &Matrix, a_t: bool, b: &Matrix, b_t: bool, beta: f64, c: &mut Matrix) {
    let (m, k) = if a_t { (a.cols, a.rows) } else { (a.rows, a.cols) };
    let (k2, n) = if b_t { (b.cols, b.rows) } else { (b.rows, b.cols) };
    debug_assert_eq!(k, k2);
    debug_assert_eq!((c.rows, c.cols), (m, n));
    let (rsa, csa) = if a_t { (1, a.cols as isize) } else { (a.cols as isize, 1) };
    let (rsb, csb) = if b_t { (1, b.cols as isize) } else { (b.cols as isize, 1) };
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c.values.iter_mut().for_each(|v| *v *= beta);
        return;
    }
    // SAFETY: the strides describe the row-major buffers of `a`, `b` and `c`
    // with the shapes computed above, and `c` does not alias `a` or `b`.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.values.as_ptr(),
            rsa,
            csa,
            b.values.as_ptr(),
            rsb,
            csb,
            beta,
            c.values.as_mut_ptr(),
            c.cols as isize,
            1,
        );
    }
}

/// Square symmetric matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    values: Vec<f64>,
}

impl SymMatrix {
    /// Accepts `values` when `|a_ij - a_ji| <= 1e-9 * max(1, |a_ij|)`; the
    /// stored matrix is the exact symmetrization.
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        let m = Matrix::new(dim, dim, values)?;
        for i in 0..dim {
            for j in i + 1..dim {
                let (a, b) = (m.get(i, j), m.get(j, i));
                if (a - b).abs() > 1e-9 * a.abs().max(1.0) {
                    return Err(Error::invalid(format!("matrix is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(SymMatrix::symmetrize(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = Matrix::from_rows(rows)?;
        if m.rows != m.cols {
            return Err(Error::dims("symmetric matrix must be square"));
        }
        SymMatrix::new(m.rows, m.values)
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix { dim: n, values: Matrix::identity(n).values }
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Matrix::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        SymMatrix { dim: n, values: m.values }
    }

    /// `(m + mᵀ) / 2` of a square matrix.
    pub(crate) fn symmetrize(mut m: Matrix) -> Self {
        debug_assert_eq!(m.rows, m.cols);
        let n = m.rows;
        for i in 0..n {
            for j in i + 1..n {
                let avg = 0.5 * (m.values[i * n + j] + m.values[j * n + i]);
                m.values[i * n + j] = avg;
                m.values[j * n + i] = avg;
            }
        }
        SymMatrix { dim: n, values: m.values }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.dim + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_raw(self.dim, self.dim, self.values.clone())
    }

    /// Returns `self + eps * I`.
    pub fn add_identity(&self, eps: f64) -> SymMatrix {
        let mut out = self.clone();
        for i in 0..self.dim {
            out.values[i * self.dim + i] += eps;
        }
        out
    }
}

/// Eigenvalues in descending order with eigenvectors as matching columns.
#[derive(Clone, Debug)]
pub struct EighResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Matrix,
}

impl EighResult {
    /// `V f(diag(λ)) Vᵀ`.
    pub fn recompose(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.eigenvalues.len();
        let mut scaled = self.eigenvectors.clone();
        for r in 0..n {
            for (c, &lambda) in self.eigenvalues.iter().enumerate() {
                scaled.values[r * n + c] *= f(lambda);
            }
        }
        let mut out = Matrix::zeros(n, n);
        gemm(1.0, &scaled, false, &self.eigenvectors, true, 0.0, &mut out);
        SymMatrix::symmetrize(out)
    }
}

/// Column means and sample covariance (divisor `n - 1`) of the rows of `features`.
pub fn mean_and_covariance(features: &Matrix) -> Result<(Vec<f64>, SymMatrix)> {
    let (n, d) = (features.rows, features.cols);
    if n < 2 {
        return Err(Error::invalid(format!("covariance needs at least 2 samples, got {n}")));
    }
    let mut mean = vec![0.0; d];
    for r in 0..n {
        for (m, v) in mean.iter_mut().zip(features.row(r)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let mut centered = features.clone();
    for r in 0..n {
        for (v, m) in centered.values[r * d..(r + 1) * d].iter_mut().zip(&mean) {
            *v -= m;
        }
    }
    let mut cov = Matrix::zeros(d, d);
    gemm(1.0 / (n - 1) as f64, &centered, true, &centered, false, 0.0, &mut cov);
    Ok((mean, SymMatrix::symmetrize(cov)))
}

/// Round-robin tournament pairing of `m` (even) indices for `round` in `0..m-1`;
/// every unordered pair appears exactly once per `m - 1` rounds.
fn round_robin_pairs(m: usize, round: usize, out: &mut Vec<(usize, usize)>) {
    out.clear();
    let slot = |i: usize| if i == 0 { 0 } else { 1 + (i - 1 + round) % (m - 1) };
    for i in 0..m / 2 {
        let (x, y) = (slot(i), slot(m - 1 - i));
        out.push((x.min(y), x.max(y)));
    }
}

/// Cyclic Jacobi eigendecomposition.
///
/// Each sweep visits every `(p, q)` pair once, in round-robin order so that
/// the rotations of one round are disjoint and can be applied as whole-row
/// passes. Sweeps stop once the off-diagonal Frobenius norm is below `1e-12`
/// times the Frobenius norm of the input.
pub fn jacobi_eigh(s: &SymMatrix) -> Result<EighResult> {
    let n = s.dim;
    if n == 0 {
        return Err(Error::invalid("cannot diagonalize an empty matrix"));
    }
    let mut a = s.values.clone();
    // rows of `vt` are the eigenvectors
    let mut vt = Matrix::identity(n).values;
    let total = s.values.iter().map(|v| v * v).sum::<f64>().sqrt();
    let tol = JACOBI_REL_TOL * total;
    // rotations on entries this small cannot keep the off-diagonal norm above `tol`
    let skip_below = tol / n as f64;

    let off_norm = |a: &[f64]| {
        let mut sum = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                sum += a[i * n + j] * a[i * n + j];
            }
        }
        (2.0 * sum).sqrt()
    };

    // odd sizes get a phantom index `n` whose pairs are skipped
    let m = n + n % 2;
    let mut pairs = Vec::with_capacity(m / 2);
    let mut rots: Vec<(usize, usize, f64, f64)> = Vec::with_capacity(m / 2);
    let mut converged = false;
    for _ in 0..=JACOBI_MAX_SWEEPS {
        if off_norm(&a) <= tol {
            converged = true;
            break;
        }
        for round in 0..m.saturating_sub(1) {
            round_robin_pairs(m, round, &mut pairs);
            rots.clear();
            for &(p, q) in &pairs {
                if q >= n {
                    continue;
                }
                let apq = a[p * n + q];
                if apq.abs() <= skip_below {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                rots.push((p, q, c, t * c));
            }
            if rots.is_empty() {
                continue;
            }
            // A <- A J
            for row in a.chunks_exact_mut(n) {
                for &(p, q, c, s) in &rots {
                    let (x, y) = (row[p], row[q]);
                    row[p] = c * x - s * y;
                    row[q] = s * x + c * y;
                }
            }
            // A <- Jᵀ A and Vᵀ <- Jᵀ Vᵀ
            for &(p, q, c, s) in &rots {
                for buf in [&mut a, &mut vt] {
                    let (head, tail) = buf.split_at_mut(q * n);
                    let rp = &mut head[p * n..(p + 1) * n];
                    for (x, y) in rp.iter_mut().zip(tail[..n].iter_mut()) {
                        let (xp, xq) = (*x, *y);
                        *x = c * xp - s * xq;
                        *y = s * xp + c * xq;
                    }
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps: JACOBI_MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
    let eigenvalues = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        for r in 0..n {
            vectors.values[r * n + col] = vt[i * n + r];
        }
    }
    Ok(EighResult { eigenvalues, eigenvectors: vectors })
}

/// Succeeds when `s + tol * I` admits a Cholesky factorization.
fn cholesky_shifted_ok(s: &SymMatrix, tol: f64) -> bool {
    let n = s.dim;
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = s.get(j, j) + tol;
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 0.0) {
            return false;
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let mut v = s.get(i, j);
            for k in 0..j {
                v -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = v / d;
        }
    }
    true
}

/// Errors with [`Error::NotPsd`] when the smallest eigenvalue is below `-1e-8`.
pub fn ensure_psd(s: &SymMatrix) -> Result<()> {
    if cholesky_shifted_ok(s, PSD_TOLERANCE) {
        return Ok(());
    }
    // the shifted factorization can fail by round-off; let the eigenvalues decide
    let eig = jacobi_eigh(s)?;
    let min = *eig.eigenvalues.last().expect("dim >= 1");
    if min < -PSD_TOLERANCE {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    Ok(())
}

/// Principal square root of a numerically PSD matrix.
pub fn sqrtm_psd(s: &SymMatrix) -> Result<SymMatrix> {
    let eig = jacobi_eigh(s)?;
    let min = *eig.eigenvalues.last().expect("dim >= 1");
    if min < -PSD_TOLERANCE {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    Ok(eig.recompose(|l| l.max(0.0).sqrt()))
}

/// `Tr((sr ss)^(1/2))` via the eigenvalues of the symmetric similar form
/// `sr^(1/2) ss sr^(1/2)`. Eigenvalues at or below `n * EPSILON * max`
/// are rounding noise in a null direction and count as zero, so singular
/// inputs give the same result in either argument order.
pub fn trace_sqrt_product(sr: &SymMatrix, ss: &SymMatrix) -> Result<f64> {
    if sr.dim != ss.dim {
        return Err(Error::dims(format!("covariance dimensions {} and {} differ", sr.dim, ss.dim)));
    }
    ensure_psd(ss)?;
    let root = sqrtm_psd(sr)?.to_matrix();
    let middle = ss.to_matrix();
    let n = sr.dim;
    let mut tmp = Matrix::zeros(n, n);
    gemm(1.0, &root, false, &middle, false, 0.0, &mut tmp);
    let mut prod = Matrix::zeros(n, n);
    gemm(1.0, &tmp, false, &root, false, 0.0, &mut prod);
    let eig = jacobi_eigh(&SymMatrix::symmetrize(prod))?;
    let cutoff = n as f64 * f64::EPSILON * eig.eigenvalues[0].max(0.0);
    Ok(eig.eigenvalues.iter().filter(|&&l| l > cutoff).map(|l| l.sqrt()).sum())
}
