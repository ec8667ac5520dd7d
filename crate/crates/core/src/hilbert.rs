//! Eigenbasis machinery: diagonalization, Bohr frequencies, basis changes and masks.

use crate::error::{Error, Result};
use ndarray::{Array1, Array2, ArrayView2, Zip};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;

pub type CMat = Array2<C64>;

pub fn zeros(n: usize) -> CMat {
    Array2::zeros((n, n))
}

pub fn identity(n: usize) -> CMat {
    Array2::eye(n)
}

pub fn dagger(a: &CMat) -> CMat {
    a.t().mapv(|z| z.conj())
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a.dot(b) - b.dot(a)
}

pub fn anticommutator(a: &CMat, b: &CMat) -> CMat {
    a.dot(b) + b.dot(a)
}

pub fn trace(a: &CMat) -> C64 {
    a.diag().sum()
}

/// max |A - A†|.
pub fn hermiticity_defect(a: ArrayView2<C64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[[i, j]] - a[[j, i]].conj()).norm());
        }
    }
    worst
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

pub fn hermitian_part(a: &CMat) -> CMat {
    (a + &dagger(a)) * C64::new(0.5, 0.0)
}

/// Frobenius norm.
pub fn frobenius(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Elementwise product.
pub fn hadamard(a: &CMat, m: &CMat) -> Result<CMat> {
    if a.dim() != m.dim() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: m.nrows() });
    }
    Ok(a * m)
}

#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub energies: Array1<f64>,
    pub basis: CMat,
    pub bohr: Array2<f64>,
}

impl EigenSystem {
    /// Eigensystem of a Hamiltonian that is already diagonal in the working basis.
    pub fn from_energies(energies: Array1<f64>) -> Self {
        let n = energies.len();
        let bohr = Array2::from_shape_fn((n, n), |(i, j)| energies[i] - energies[j]);
        EigenSystem { energies, basis: identity(n), bohr }
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Matrix with entries f(ω_nm).
    pub fn mask<F: Fn(f64) -> C64>(&self, f: F) -> CMat {
        self.bohr.mapv(f)
    }

    pub fn hamiltonian(&self) -> CMat {
        Array2::from_diag(&self.energies.mapv(|e| C64::new(e, 0.0)))
    }
}

/// Dense Hermitian eigendecomposition with ascending energies and a
/// deterministic basis: degenerate vectors are ordered by the index of their
/// dominant component, and every vector has a real positive dominant entry.
pub fn diagonalize(h: &CMat) -> Result<EigenSystem> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: h.ncols() });
    }
    let scale = max_abs(h).max(1.0);
    let defect = hermiticity_defect(h.view());
    if defect > 1e-10 * scale {
        return Err(Error::NotHermitian(defect));
    }
    let (vals, mut vecs) = h.eigh(UPLO::Lower)?;
    let dominant: Vec<usize> = (0..n)
        .map(|k| {
            let col = vecs.column(k);
            let mut best = 0;
            for i in 0..n {
                if col[i].norm() > col[best].norm() + 1e-12 {
                    best = i;
                }
            }
            best
        })
        .collect();
    for k in 0..n {
        let z = vecs[[dominant[k], k]];
        let phase = z.conj() / z.norm();
        vecs.column_mut(k).mapv_inplace(|v| v * phase);
    }
    let tol = 1e-12 * scale;
    let mut order: Vec<usize> = (0..n).collect();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && vals[end] - vals[end - 1] < tol {
            end += 1;
        }
        order[start..end].sort_by_key(|&k| dominant[k]);
        start = end;
    }
    let energies = Array1::from_iter(order.iter().map(|&k| vals[k]));
    let mut basis = zeros(n);
    for (dst, &k) in order.iter().enumerate() {
        basis.column_mut(dst).assign(&vecs.column(k));
    }
    let bohr = Array2::from_shape_fn((n, n), |(i, j)| energies[i] - energies[j]);
    Ok(EigenSystem { energies, basis, bohr })
}

/// basis† · A · basis.
pub fn to_eigenbasis(a: &CMat, es: &EigenSystem) -> Result<CMat> {
    if a.nrows() != es.basis.nrows() || a.ncols() != es.basis.nrows() {
        return Err(Error::DimensionMismatch { expected: es.basis.nrows(), got: a.nrows() });
    }
    Ok(dagger(&es.basis).dot(&a.dot(&es.basis)))
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigvalsh(a: &CMat) -> Result<Array1<f64>> {
    use ndarray_linalg::EigValsh;
    let h = hermitian_part(a);
    Ok(h.eigvalsh(UPLO::Lower)?)
}

/// Matrix exponential (Padé with scaling and squaring).
pub fn expm(a: &CMat) -> CMat {
    let n = a.nrows();
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| a[[i, j]]);
    let e = m.exp();
    Array2::from_shape_fn((n, n), |(i, j)| e[(i, j)])
}

/// A density matrix: Hermitian with unit trace.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub mat: CMat,
}

impl DensityMatrix {
    pub fn new(mat: CMat) -> Result<Self> {
        let d = hermiticity_defect(mat.view());
        if d > 1e-10 {
            return Err(Error::NotHermitian(d));
        }
        let tr = trace(&mat);
        if (tr - 1.0).norm() > 1e-9 {
            return Err(Error::InvalidArgument(format!("density matrix trace {tr} differs from 1")));
        }
        Ok(DensityMatrix { mat })
    }

    /// |ψ⟩⟨ψ| for a normalized copy of ψ.
    pub fn pure(psi: &Array1<C64>) -> Self {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let v = psi.mapv(|z| z / norm);
        let n = v.len();
        let mat = Array2::from_shape_fn((n, n), |(i, j)| v[i] * v[j].conj());
        DensityMatrix { mat }
    }

    pub fn basis_state(n: usize, k: usize) -> Self {
        let mut mat = zeros(n);
        mat[[k, k]] = C64::new(1.0, 0.0);
        DensityMatrix { mat }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }
}

/// ρ_nm → e^{±iω_nm t} ρ_nm, the interaction-picture transform for a diagonal H0.
pub fn rotate_frame(rho: &CMat, energies: &Array1<f64>, t: f64, sign: f64) -> CMat {
    let mut out = rho.clone();
    Zip::indexed(&mut out).for_each(|(i, j), z| {
        let w = energies[i] - energies[j];
        *z *= C64::from_polar(1.0, sign * w * t);
    });
    out
}
