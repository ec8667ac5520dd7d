//! Operators that act on dense density matrices from the left or right,
//! stored densely, in compressed-row form, or as dense blocks on a
//! partition of the basis, depending on their fill.

use crate::hilbert::CMat;
use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2};
use num_complex::Complex64 as C64;

/// Fill fraction below which an operator is stored sparse.
pub const SPARSE_FILL: f64 = 0.3;

#[derive(Debug, Clone)]
pub struct Csr {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<C64>,
}

impl Csr {
    pub fn from_dense(a: &CMat) -> Self {
        let n = a.nrows();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for i in 0..n {
            for j in 0..a.ncols() {
                let z = a[[i, j]];
                if z != C64::new(0.0, 0.0) {
                    indices.push(j);
                    data.push(z);
                }
            }
            indptr.push(indices.len());
        }
        Csr { n, indptr, indices, data }
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()].iter().copied().zip(self.data[r].iter().copied())
    }

    fn to_dense(&self) -> CMat {
        let mut a = Array2::zeros((self.n, self.n));
        for i in 0..self.n {
            for (j, z) in self.row(i) {
                a[[i, j]] = z;
            }
        }
        a
    }

    /// out += s · self · rho
    fn left_mul_add(&self, rho: &[C64], m: usize, s: C64, out: &mut [C64]) {
        for i in 0..self.n {
            let dst = &mut out[i * m..(i + 1) * m];
            for (j, a) in self.row(i) {
                let c = s * a;
                let src = &rho[j * m..(j + 1) * m];
                for (d, x) in dst.iter_mut().zip(src) {
                    *d += c * x;
                }
            }
        }
    }

    /// out += s · rho · self
    fn right_mul_add(&self, rho: &[C64], rows: usize, s: C64, out: &mut [C64]) {
        let n = self.n;
        for i in 0..rows {
            let dst = &mut out[i * n..(i + 1) * n];
            for k in 0..n {
                let r = rho[i * n + k];
                if r == C64::new(0.0, 0.0) {
                    continue;
                }
                let c = s * r;
                for (j, a) in self.row(k) {
                    dst[j] += c * a;
                }
            }
        }
    }
}

/// Dense blocks on a partition of the index range into contiguous segments.
#[derive(Debug, Clone)]
pub struct Blocks {
    n: usize,
    blocks: Vec<(usize, usize, usize, usize, CMat)>,
}

impl Blocks {
    /// `bounds` are the segment starts followed by n.
    pub fn from_dense(a: &CMat, bounds: &[usize]) -> Self {
        let mut blocks = Vec::new();
        for r in bounds.windows(2) {
            for c in bounds.windows(2) {
                let b = a.slice(s![r[0]..r[1], c[0]..c[1]]);
                if b.iter().any(|z| *z != C64::new(0.0, 0.0)) {
                    blocks.push((r[0], r[1], c[0], c[1], b.to_owned()));
                }
            }
        }
        Blocks { n: a.nrows(), blocks }
    }

    fn area(&self) -> usize {
        self.blocks.iter().map(|b| b.4.len()).sum()
    }

    fn to_dense(&self) -> CMat {
        let mut a = Array2::zeros((self.n, self.n));
        for (r0, r1, c0, c1, b) in &self.blocks {
            a.slice_mut(s![*r0..*r1, *c0..*c1]).assign(b);
        }
        a
    }

    fn left_mul_add(&self, rho: &CMat, s: C64, out: &mut CMat) {
        let one = C64::new(1.0, 0.0);
        for (r0, r1, c0, c1, b) in &self.blocks {
            let mut dst = out.slice_mut(s![*r0..*r1, ..]);
            general_mat_mul(s, b, &rho.slice(s![*c0..*c1, ..]), one, &mut dst);
        }
    }

    fn right_mul_add(&self, rho: &CMat, s: C64, out: &mut CMat) {
        let one = C64::new(1.0, 0.0);
        for (r0, r1, c0, c1, b) in &self.blocks {
            let mut dst = out.slice_mut(s![.., *c0..*c1]);
            general_mat_mul(s, &rho.slice(s![.., *r0..*r1]), b, one, &mut dst);
        }
    }
}

/// Block area fraction below which a partitioned operator is stored in blocks.
pub const BLOCK_FILL: f64 = 0.6;

/// A square operator, dense, sparse or block-sparse.
#[derive(Debug, Clone)]
pub enum Op {
    Dense(CMat),
    Sparse(Csr),
    Blocked(Blocks),
}

impl Op {
    /// Chooses the storage from the fill fraction.
    pub fn new(a: &CMat) -> Self {
        let n = a.nrows();
        let nnz = a.iter().filter(|z| **z != C64::new(0.0, 0.0)).count();
        if n > 0 && (nnz as f64) < SPARSE_FILL * (n * n) as f64 {
            Op::Sparse(Csr::from_dense(a))
        } else {
            Op::Dense(a.as_standard_layout().to_owned())
        }
    }

    /// Block storage on the given segment bounds when it saves enough work.
    pub fn partitioned(a: &CMat, bounds: Option<&[usize]>) -> Self {
        let n = a.nrows();
        match bounds {
            Some(b) if b.len() > 2 && b.first() == Some(&0) && b.last() == Some(&n) => {
                let blocks = Blocks::from_dense(a, b);
                if (blocks.area() as f64) < BLOCK_FILL * (n * n) as f64 {
                    Op::Blocked(blocks)
                } else {
                    Op::dense(a)
                }
            }
            _ => Op::new(a),
        }
    }

    pub fn dense(a: &CMat) -> Self {
        Op::Dense(a.as_standard_layout().to_owned())
    }

    pub fn dim(&self) -> usize {
        match self {
            Op::Dense(a) => a.nrows(),
            Op::Sparse(c) => c.n,
            Op::Blocked(b) => b.n,
        }
    }

    pub fn to_dense(&self) -> CMat {
        match self {
            Op::Dense(a) => a.clone(),
            Op::Sparse(c) => c.to_dense(),
            Op::Blocked(b) => b.to_dense(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Op::Dense(a) => a.iter().all(|z| *z == C64::new(0.0, 0.0)),
            Op::Sparse(c) => c.nnz() == 0,
            Op::Blocked(b) => b.blocks.is_empty(),
        }
    }

    /// out += s · self · rho
    pub fn left_mul_add(&self, rho: &CMat, s: C64, out: &mut CMat) {
        match self {
            Op::Dense(a) => general_mat_mul(s, a, rho, C64::new(1.0, 0.0), out),
            Op::Sparse(c) => {
                let rho = rho.as_standard_layout();
                let m = rho.ncols();
                c.left_mul_add(rho.as_slice().unwrap(), m, s, out.as_slice_mut().expect("standard layout"));
            }
            Op::Blocked(b) => b.left_mul_add(rho, s, out),
        }
    }

    /// out += s · rho · self
    pub fn right_mul_add(&self, rho: &CMat, s: C64, out: &mut CMat) {
        match self {
            Op::Dense(a) => general_mat_mul(s, rho, a, C64::new(1.0, 0.0), out),
            Op::Sparse(c) => {
                let rho = rho.as_standard_layout();
                let rows = rho.nrows();
                c.right_mul_add(rho.as_slice().unwrap(), rows, s, out.as_slice_mut().expect("standard layout"));
            }
            Op::Blocked(b) => b.right_mul_add(rho, s, out),
        }
    }

    pub fn left_mul(&self, rho: &CMat) -> CMat {
        let mut out = Array2::zeros((self.dim(), rho.ncols()));
        self.left_mul_add(rho, C64::new(1.0, 0.0), &mut out);
        out
    }

    pub fn right_mul(&self, rho: &CMat) -> CMat {
        let mut out = Array2::zeros((rho.nrows(), self.dim()));
        self.right_mul_add(rho, C64::new(1.0, 0.0), &mut out);
        out
    }
}
