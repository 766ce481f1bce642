//! Dense real linear algebra sized for desk-scale control problems.
//!
//! Everything is `f64`, row-major and heap-allocated. Eigenvalues are found
//! by forming the characteristic polynomial (Faddeev–LeVerrier) and running
//! a Durand–Kerner simultaneous root iteration, which is self-contained and
//! accurate to ~1e-12 for simple eigenvalues at n ≤ 20. Repeated eigenvalues
//! of non-triangular matrices are intrinsically limited to about
//! eps^(1/multiplicity) accuracy by the polynomial route; triangular inputs
//! take an exact fast path.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is numerically singular (column {column}, |pivot| = {pivot:.3e})")]
    Singular { column: usize, pivot: f64 },
    #[error("eigenvalue iteration did not meet the residual target after {iterations} sweeps")]
    NonConvergence {
        iterations: usize,
        best: Vec<Complex64>,
    },
}

/// Dense real matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "entry count must equal rows*cols");
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::new(rows, cols, vec![0.0; rows * cols])
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        Self::new(rows, cols, vec![1.0; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self::new(r, c, rows.into_iter().flatten().collect())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// n x 1 column vector.
    pub fn column(entries: &[f64]) -> Self {
        Self::new(entries.len(), 1, entries.to_vec())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix::new(
            self.rows,
            self.cols,
            self.data.iter().map(|v| c * v).collect(),
        )
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "add shape"
        );
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Matrix::new(self.rows, self.cols, data)
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "sub shape"
        );
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Matrix::new(self.rows, self.cols, data)
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul shape");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "mul_vec shape");
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// M * 1, i.e. the vector of row sums.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)]).sum())
            .collect()
    }

    pub fn min_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    /// True iff every entry is >= -tol; also returns the minimum entry
    /// (the margin). An empty matrix passes with margin +inf.
    pub fn is_nonneg(&self, tol: f64) -> (bool, f64) {
        debug_assert!(tol >= 0.0);
        let margin = self.min_entry();
        (margin >= -tol, margin)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Assemble a matrix from a grid of blocks. Each block row must have a
    /// common height and each block column a common width.
    pub fn from_blocks(blocks: &[Vec<&Matrix>]) -> Matrix {
        let block_cols = blocks.first().map_or(0, Vec::len);
        assert!(
            blocks.iter().all(|r| r.len() == block_cols),
            "ragged block grid"
        );
        let row_heights: Vec<usize> = blocks.iter().map(|r| r[0].rows()).collect();
        let col_widths: Vec<usize> = (0..block_cols).map(|j| blocks[0][j].cols()).collect();
        for (bi, row) in blocks.iter().enumerate() {
            for (bj, blk) in row.iter().enumerate() {
                assert_eq!(blk.rows(), row_heights[bi], "block height mismatch");
                assert_eq!(blk.cols(), col_widths[bj], "block width mismatch");
            }
        }
        let total_rows: usize = row_heights.iter().sum();
        let total_cols: usize = col_widths.iter().sum();
        let mut out = Matrix::zeros(total_rows, total_cols);
        let mut r0 = 0;
        for (bi, row) in blocks.iter().enumerate() {
            let mut c0 = 0;
            for (bj, blk) in row.iter().enumerate() {
                for i in 0..blk.rows() {
                    for j in 0..blk.cols() {
                        out[(r0 + i, c0 + j)] = blk[(i, j)];
                    }
                }
                c0 += col_widths[bj];
            }
            r0 += row_heights[bi];
        }
        out
    }

    /// Solve M x = b by Gaussian elimination with partial pivoting.
    /// b may have multiple right-hand-side columns.
    pub fn solve(&self, b: &Matrix) -> Result<Matrix, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::Dimension(format!(
                "solve requires a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        if b.rows != self.rows {
            return Err(LinalgError::Dimension(format!(
                "rhs has {} rows, expected {}",
                b.rows, self.rows
            )));
        }
        let n = self.rows;
        let k = b.cols;
        let mut a = self.data.clone();
        let mut x = b.data.clone();
        // Per-column singularity scale taken from the original matrix.
        let col_scale: Vec<f64> = (0..n)
            .map(|j| (0..n).fold(0.0, |m: f64, i| m.max(self[(i, j)].abs())))
            .collect();
        for col in 0..n {
            let mut piv_row = col;
            let mut piv_val = a[col * n + col].abs();
            for r in (col + 1)..n {
                let v = a[r * n + col].abs();
                if v > piv_val {
                    piv_val = v;
                    piv_row = r;
                }
            }
            if piv_val <= 1e-12 * col_scale[col] {
                return Err(LinalgError::Singular {
                    column: col,
                    pivot: piv_val,
                });
            }
            if piv_row != col {
                for j in 0..n {
                    a.swap(col * n + j, piv_row * n + j);
                }
                for j in 0..k {
                    x.swap(col * k + j, piv_row * k + j);
                }
            }
            let piv = a[col * n + col];
            for r in (col + 1)..n {
                let factor = a[r * n + col] / piv;
                if factor == 0.0 {
                    continue;
                }
                a[r * n + col] = 0.0;
                for j in (col + 1)..n {
                    a[r * n + j] -= factor * a[col * n + j];
                }
                for j in 0..k {
                    x[r * k + j] -= factor * x[col * k + j];
                }
            }
        }
        for col in (0..n).rev() {
            let piv = a[col * n + col];
            for j in 0..k {
                let mut s = x[col * k + j];
                for jj in (col + 1)..n {
                    s -= a[col * n + jj] * x[jj * k + j];
                }
                x[col * k + j] = s / piv;
            }
        }
        Ok(Matrix::new(n, k, x))
    }

    /// Eigenvalues as complex roots of the characteristic polynomial.
    ///
    /// Intended for n ≤ 20. Triangular matrices short-circuit to their
    /// diagonal. Results are sorted by (re, im) for determinism.
    pub fn eigenvalues(&self) -> Result<Vec<Complex64>, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::Dimension(format!(
                "eigenvalues require a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        if n == 0 {
            return Ok(Vec::new());
        }
        if let Some(diag) = self.triangular_diagonal() {
            let mut eig: Vec<Complex64> =
                diag.into_iter().map(|d| Complex64::new(d, 0.0)).collect();
            sort_complex(&mut eig);
            return Ok(eig);
        }
        let coeffs = self.characteristic_polynomial();
        let mut roots = durand_kerner(&coeffs)?;
        sort_complex(&mut roots);
        Ok(roots)
    }

    /// Largest eigenvalue magnitude. Zero for the empty matrix.
    pub fn spectral_radius(&self) -> Result<f64, LinalgError> {
        Ok(self
            .eigenvalues()?
            .iter()
            .fold(0.0, |m: f64, z| m.max(z.norm())))
    }

    /// Monic characteristic polynomial coefficients [1, c1, ..., cn] via the
    /// Faddeev–LeVerrier recursion.
    fn characteristic_polynomial(&self) -> Vec<f64> {
        let n = self.rows;
        let mut coeffs = Vec::with_capacity(n + 1);
        coeffs.push(1.0);
        let mut m = Matrix::zeros(n, n);
        for k in 1..=n {
            // M_k = A (M_{k-1} + c_{k-1} I)
            let mut shifted = m.clone();
            let c_prev = *coeffs.last().unwrap();
            for i in 0..n {
                shifted[(i, i)] += c_prev;
            }
            m = if k == 1 {
                self.clone()
            } else {
                self.matmul(&shifted)
            };
            let trace: f64 = (0..n).map(|i| m[(i, i)]).sum();
            coeffs.push(-trace / k as f64);
        }
        coeffs
    }

    /// Some(diagonal) when the matrix is exactly upper or lower triangular.
    fn triangular_diagonal(&self) -> Option<Vec<f64>> {
        let n = self.rows;
        let lower_zero = (0..n).all(|i| (0..i).all(|j| self[(i, j)] == 0.0));
        let upper_zero = (0..n).all(|i| ((i + 1)..n).all(|j| self[(i, j)] == 0.0));
        if lower_zero || upper_zero {
            Some((0..n).map(|i| self[(i, i)]).collect())
        } else {
            None
        }
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl std::fmt::Debug for Matrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  [")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{:.6}", self[(i, j)])?;
            }
            writeln!(f, "]")?;
        }
        write!(f, "]")
    }
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m: f64, x| m.max(x.abs()))
}

pub fn vec_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn vec_sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn sort_complex(v: &mut [Complex64]) {
    v.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
}

fn horner(coeffs: &[f64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in coeffs {
        acc = acc * z + c;
    }
    acc
}

/// Magnitude scale of the polynomial evaluated at |z|, used to make the
/// residual test relative.
fn poly_scale(coeffs: &[f64], z_abs: f64) -> f64 {
    let mut acc = 0.0;
    for &c in coeffs {
        acc = acc * z_abs + c.abs();
    }
    acc
}

/// Simultaneous root iteration on a monic polynomial given as
/// [1, c1, ..., cn]. Gauss–Seidel updates; initial guesses on a circle at
/// the Cauchy root bound with an angular offset that avoids the real axis.
fn durand_kerner(coeffs: &[f64]) -> Result<Vec<Complex64>, LinalgError> {
    let n = coeffs.len() - 1;
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![Complex64::new(-coeffs[1], 0.0)]);
    }
    let radius = 1.0 + coeffs[1..].iter().fold(0.0, |m: f64, c| m.max(c.abs()));
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            Complex64::from_polar(
                radius,
                2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4,
            )
        })
        .collect();
    let max_sweeps = 200.max(40 * n);
    let mut sweeps = 0;
    for sweep in 0..max_sweeps {
        sweeps = sweep + 1;
        let mut max_step = 0.0f64;
        for k in 0..n {
            let num = horner(coeffs, z[k]);
            let mut den = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if j != k {
                    den *= z[k] - z[j];
                }
            }
            if den.norm() < 1e-290 {
                // coincident iterates; nudge apart
                den = Complex64::new(1e-290, 0.0);
            }
            let step = num / den;
            z[k] -= step;
            max_step = max_step.max(step.norm() / (1.0 + z[k].norm()));
        }
        if max_step < 1e-14 {
            break;
        }
    }
    // Residual gate: every root must evaluate small relative to the
    // polynomial's magnitude at that radius. Repeated roots sit at the
    // noise floor |p| ~ eps*scale, which passes comfortably. The additive
    // floor covers polynomials whose low coefficients are pure rounding
    // dust (near-nilpotent matrices), where the relative scale collapses.
    let coeff_max = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    for &r in &z {
        let res = horner(coeffs, r).norm();
        let scale = poly_scale(coeffs, r.norm());
        let floor = n as f64 * 1e-14 * coeff_max.max(1e-30) * r.norm().max(1.0).powi(n as i32);
        if res > 1e-8 * scale + floor {
            return Err(LinalgError::NonConvergence {
                iterations: sweeps,
                best: z.clone(),
            });
        }
    }
    Ok(z)
}
