use crate::error::{Error, Result};

use super::DenseMatrix;

/// Compressed sparse row matrix of `f64`.
///
/// Column indices are strictly increasing within a row and no stored value
/// is zero. Both properties are established by [`SparseMatrix::from_triplets`].
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            row_offsets: vec![0; rows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        m.row_offsets.clear();
        m.row_offsets.push(0);
        for (i, &d) in diag.iter().enumerate() {
            if d != 0.0 {
                m.col_indices.push(i);
                m.values.push(d);
            }
            m.row_offsets.push(m.col_indices.len());
        }
        m
    }

    /// Builds a matrix from `(row, col, value)` triplets in any order.
    /// Duplicate positions are summed and resulting zeros dropped.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        for &(r, c, v) in &entries {
            if r >= rows || c >= cols {
                return Err(Error::InvalidInput(format!(
                    "triplet ({r}, {c}) outside a {rows}x{cols} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("non-finite value at ({r}, {c})")));
            }
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));

        let mut row_offsets = Vec::with_capacity(rows + 1);
        let mut col_indices = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        row_offsets.push(0);
        let mut current_row = 0;
        let mut iter = entries.into_iter().peekable();
        while let Some((r, c, mut v)) = iter.next() {
            while let Some(&(r2, c2, v2)) = iter.peek() {
                if (r2, c2) != (r, c) {
                    break;
                }
                v += v2;
                iter.next();
            }
            while current_row < r {
                row_offsets.push(col_indices.len());
                current_row += 1;
            }
            if v != 0.0 {
                col_indices.push(c);
                values.push(v);
            }
        }
        while current_row < rows {
            row_offsets.push(col_indices.len());
            current_row += 1;
        }
        Ok(Self {
            rows,
            cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Keeps the sparsity pattern, replacing each stored value with
    /// `f(row, col, value)`. Entries mapped to zero are removed.
    pub(crate) fn map_entries(&self, f: impl Fn(usize, usize, f64) -> f64) -> SparseMatrix {
        let triplets = self.iter().map(|(r, c, v)| (r, c, f(r, c, v)));
        SparseMatrix::from_triplets(self.rows, self.cols, triplets).expect("mapped entries stay in bounds")
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

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values stored in row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        (&self.col_indices[range.clone()], &self.values[range])
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let (cols, vals) = self.row(row);
        cols.binary_search(&col).map_or(0.0, |k| vals[k])
    }

    /// All stored entries as `(row, col, value)`, in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&c, &v)| (i, c, v))
        })
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).1.iter().sum()).collect()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for (r, c, v) in self.iter() {
            d.set(r, c, v);
        }
        d
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols && self.iter().all(|(r, c, v)| (v - self.get(c, r)).abs() <= tol)
    }

    /// `self · x` for a vector.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum()
            })
            .collect()
    }

    /// Sparse-dense product `self · b`.
    pub fn spmm(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != b.rows() {
            return Err(Error::dims("spmm", self.shape(), b.shape()));
        }
        let mut out = DenseMatrix::zeros(self.rows, b.cols());
        for i in 0..self.rows {
            let (cols, vals) = self.row(i);
            let out_row = out.row_mut(i);
            for (&c, &v) in cols.iter().zip(vals) {
                for (o, &x) in out_row.iter_mut().zip(b.row(c)) {
                    *o += v * x;
                }
            }
        }
        Ok(out)
    }

    /// `self + scale · other`, same shape required.
    pub fn add_scaled(&self, other: &SparseMatrix, scale: f64) -> Result<SparseMatrix> {
        if self.shape() != other.shape() {
            return Err(Error::dims("sparse add", self.shape(), other.shape()));
        }
        let triplets = self.iter().chain(other.iter().map(|(r, c, v)| (r, c, scale * v)));
        SparseMatrix::from_triplets(self.rows, self.cols, triplets)
    }
}

/// Options for [`conjugate_gradient_solve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    /// Relative residual target, `‖Ax − b‖ / max(‖b‖, 1)`.
    pub tol: f64,
    /// Iteration cap per column. `None` means `10 · n`.
    pub max_iter: Option<usize>,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: None,
        }
    }
}

/// Solves `a · X = b` column by column with conjugate gradients.
///
/// `a` must be square and symmetric positive definite. On success every
/// column satisfies the relative residual bound in `opts.tol`, measured on
/// the true residual rather than the recurrence.
pub fn conjugate_gradient_solve(a: &SparseMatrix, b: &DenseMatrix, opts: CgOptions) -> Result<DenseMatrix> {
    let n = a.rows();
    if a.cols() != n || b.rows() != n {
        return Err(Error::dims("conjugate_gradient_solve", a.shape(), b.shape()));
    }
    if !a.is_symmetric(1e-10) {
        return Err(Error::InvalidInput(
            "conjugate gradient needs a symmetric matrix".into(),
        ));
    }
    let max_iter = opts.max_iter.unwrap_or(10 * n.max(1));
    let mut out = DenseMatrix::zeros(n, b.cols());
    for j in 0..b.cols() {
        let rhs = b.column(j);
        let x = cg_column(a, &rhs, opts.tol, max_iter)?;
        out.set_column(j, &x);
    }
    Ok(out)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn cg_column(a: &SparseMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = b.len();
    let scale = norm(b).max(1.0);
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut residual = norm(&r) / scale;
    let mut iterations = 0;

    // Outer loop restarts from the true residual whenever the recurrence
    // claims convergence but the true residual disagrees.
    while residual > tol && iterations < max_iter {
        let mut p = r.clone();
        let mut rr = r.iter().map(|v| v * v).sum::<f64>();
        while iterations < max_iter {
            let ap = a.matvec(&p);
            let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
            if pap <= 0.0 || !pap.is_finite() {
                return Err(Error::SolverFailure { iterations, residual });
            }
            let step = rr / pap;
            for i in 0..n {
                x[i] += step * p[i];
                r[i] -= step * ap[i];
            }
            iterations += 1;
            let rr_next = r.iter().map(|v| v * v).sum::<f64>();
            if rr_next.sqrt() / scale <= tol {
                break;
            }
            let beta = rr_next / rr;
            rr = rr_next;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
        }
        let ax = a.matvec(&x);
        for i in 0..n {
            r[i] = b[i] - ax[i];
        }
        residual = norm(&r) / scale;
    }
    if residual > tol {
        return Err(Error::SolverFailure { iterations, residual });
    }
    Ok(x)
}
