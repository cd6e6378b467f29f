use nalgebra::DMatrix;

use crate::scalar::Real;

/// Compressed sparse row matrix with sorted, duplicate-free column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<S> {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<S>,
}

/// Accumulates `(row, col, value)` entries; duplicates are summed in insertion order.
#[derive(Debug, Clone)]
pub struct TripletBuilder<S> {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, S)>,
}

impl<S: Real> TripletBuilder<S> {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, value: S) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.entries.push((row, col, value));
    }

    pub fn build(mut self) -> CsrMatrix<S> {
        // Stable sort keeps the summation order of duplicates deterministic.
        self.entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::with_capacity(self.entries.len());
        let mut data: Vec<S> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                data.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..self.nrows {
            indptr[i + 1] += indptr[i];
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr,
            indices,
            data,
        }
    }
}

impl<S: Real> CsrMatrix<S> {
    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            data: vec![S::one(); n],
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: vec![],
            data: vec![],
        }
    }

    pub fn from_dense(m: &DMatrix<S>) -> Self {
        let mut b = TripletBuilder::new(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != S::zero() {
                    b.push(i, j, m[(i, j)]);
                }
            }
        }
        b.build()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[S]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.data[r])
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => S::zero(),
        }
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    /// `y = A x`
    pub fn mul_vec_into(&self, x: &[S], y: &mut [S]) {
        debug_assert_eq!(x.len(), self.ncols);
        for (i, yi) in y.iter_mut().enumerate().take(self.nrows) {
            let (cols, vals) = self.row(i);
            let mut acc = S::zero();
            for (c, v) in cols.iter().zip(vals) {
                acc += *v * x[*c];
            }
            *yi = acc;
        }
    }

    pub fn mul_vec(&self, x: &[S]) -> Vec<S> {
        let mut y = vec![S::zero(); self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `b - A x`, each entry accumulated with error-free products and sums.
    pub fn residual(&self, x: &[S], b: &[S]) -> Vec<S> {
        debug_assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| {
                let (cols, vals) = self.row(i);
                let (mut s, mut c) = (b[i], S::zero());
                for (j, v) in cols.iter().zip(vals) {
                    let p = -*v * x[*j];
                    let pe = (-*v).mul_add(x[*j], -p);
                    let t = s + p;
                    let z = t - s;
                    c += (s - (t - z)) + (p - z) + pe;
                    s = t;
                }
                s + c
            })
            .collect()
    }

    /// `y = A^T x`
    pub fn mul_transpose_vec(&self, x: &[S]) -> Vec<S> {
        let mut y = vec![S::zero(); self.ncols];
        for (i, xi) in x.iter().enumerate().take(self.nrows) {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                y[*c] += *v * *xi;
            }
        }
        y
    }

    /// `x^T A y`
    pub fn bilinear(&self, x: &[S], y: &[S]) -> S {
        let mut acc = S::zero();
        for (i, xi) in x.iter().enumerate().take(self.nrows) {
            if *xi == S::zero() {
                continue;
            }
            let (cols, vals) = self.row(i);
            let mut row = S::zero();
            for (c, v) in cols.iter().zip(vals) {
                row += *v * y[*c];
            }
            acc += *xi * row;
        }
        acc
    }

    pub fn transpose(&self) -> Self {
        let mut b = TripletBuilder::with_capacity(self.ncols, self.nrows, self.nnz());
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                b.push(*c, i, *v);
            }
        }
        b.build()
    }

    /// Principal submatrix on `idx` (rows and columns in the given order).
    pub fn principal_submatrix(&self, idx: &[usize]) -> Self {
        let mut local = vec![usize::MAX; self.ncols];
        for (k, &i) in idx.iter().enumerate() {
            local[i] = k;
        }
        let mut b = TripletBuilder::new(idx.len(), idx.len());
        for (k, &i) in idx.iter().enumerate() {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                if local[*c] != usize::MAX {
                    b.push(k, local[*c], *v);
                }
            }
        }
        b.build()
    }

    pub fn to_dense(&self) -> DMatrix<S> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                m[(i, *c)] += *v;
            }
        }
        m
    }

    pub fn max_abs(&self) -> S {
        self.data.iter().fold(S::zero(), |m, v| m.max(v.abs()))
    }

    /// `max |A - A^T|`
    pub fn asymmetry(&self) -> S {
        let mut worst = S::zero();
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                worst = worst.max((*v - self.get(*c, i)).abs());
            }
        }
        worst
    }

    /// Copies of the `bs x bs` diagonal blocks.
    pub fn diagonal_blocks(&self, bs: usize) -> Vec<DMatrix<S>> {
        (0..self.nrows / bs)
            .map(|blk| {
                let mut m = DMatrix::zeros(bs, bs);
                for a in 0..bs {
                    for b in 0..bs {
                        m[(a, b)] = self.get(blk * bs + a, blk * bs + b);
                    }
                }
                m
            })
            .collect()
    }
}
