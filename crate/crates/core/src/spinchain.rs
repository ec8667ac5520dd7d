//! Ferromagnetic Heisenberg chain with long-range dipolar coupling,
//! H0 = −J Σ S_i·S_{i+1} − ε_d Σ_{i<j} (3S_iz S_jz − S_i·S_j)/(j−i)³ − h_z S_z,
//! diagonalized sector by sector in S_z and truncated to its lowest levels.

use crate::bath::{BathKind, BathModel};
use crate::error::{Error, Result};
use crate::generators::CouplingSet;
use crate::hilbert::{dagger, diagonalize, hermitian_part, CMat, DensityMatrix, EigenSystem};
use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Dense sector blocks are used, so the site count is capped.
pub const MAX_SITES: usize = 14;

/// Splitting between |S,−S⟩ and |S,S⟩ in units of the gap Δ.
pub const DEFAULT_SPLITTING: f64 = 0.000125;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainModel {
    pub n: usize,
    pub j: f64,
    pub eps_d: f64,
    pub h_z: f64,
}

impl ChainModel {
    pub fn new(n: usize, j: f64, eps_d: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("a chain needs at least two sites, got {n}")));
        }
        if n > MAX_SITES {
            return Err(Error::TooLarge(format!("{n} sites exceeds the dense limit of {MAX_SITES}")));
        }
        if !(j > 0.0 && j.is_finite()) || !eps_d.is_finite() {
            return Err(Error::InvalidArgument(format!("need J > 0 and finite ε_d, got J={j}, ε_d={eps_d}")));
        }
        Ok(ChainModel { n, j, eps_d, h_z: 0.0 })
    }

    /// n = 8, J = 400, ε_d = 6 with the default symmetry-breaking field.
    pub fn desk() -> Result<Self> {
        ChainModel::new(8, 400.0, 6.0)?.with_default_field()
    }

    pub fn with_field(mut self, h_z: f64) -> Self {
        self.h_z = h_z;
        self
    }

    /// h_z = 0.000125·Δ/(2S), Δ taken from the zero-field spectrum.
    pub fn with_default_field(self) -> Result<Self> {
        let gap = spectrum(&self.with_field(0.0))?.gap();
        Ok(self.with_field(DEFAULT_SPLITTING * gap / self.n as f64))
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    /// Coefficients (c_zz, c_xy) of S_iz S_jz and S_ix S_jx + S_iy S_jy.
    pub fn pair_couplings(&self, i: usize, j: usize) -> (f64, f64) {
        let d = i.abs_diff(j);
        let dip = self.eps_d / (d * d * d) as f64;
        let ex = if d == 1 { self.j } else { 0.0 };
        (-ex - 2.0 * dip, -ex + dip)
    }

    /// Basis states with `ups` spins up; bit i set means site i is up.
    pub fn sector_states(&self, ups: usize) -> Vec<u32> {
        (0..self.dim() as u32).filter(|s| s.count_ones() as usize == ups).collect()
    }

    pub fn sector_hamiltonian(&self, ups: usize) -> (Vec<u32>, CMat) {
        let states = self.sector_states(ups);
        let index: std::collections::HashMap<u32, usize> = states.iter().enumerate().map(|(k, &s)| (s, k)).collect();
        let n = self.n;
        let mut h = Array2::<C64>::zeros((states.len(), states.len()));
        let mz = ups as f64 - 0.5 * n as f64;
        for (a, &s) in states.iter().enumerate() {
            let mut diag = -self.h_z * mz;
            for i in 0..n {
                for j in i + 1..n {
                    let (czz, cxy) = self.pair_couplings(i, j);
                    let (bi, bj) = ((s >> i) & 1, (s >> j) & 1);
                    diag += czz * if bi == bj { 0.25 } else { -0.25 };
                    if bi != bj {
                        let b = index[&(s ^ (1 << i) ^ (1 << j))];
                        h[[b, a]] += C64::new(0.5 * cxy, 0.0);
                    }
                }
            }
            h[[a, a]] += C64::new(diag, 0.0);
        }
        (states, h)
    }
}

#[derive(Debug, Clone)]
pub struct Level {
    pub energy: f64,
    /// Number of up spins; S_z = ups − n/2.
    pub ups: usize,
    /// Amplitudes on the sector's basis states.
    pub vector: Array1<C64>,
}

#[derive(Debug, Clone)]
pub struct ChainSpectrum {
    pub model: ChainModel,
    pub sectors: Vec<Vec<u32>>,
    /// All levels, ascending in energy.
    pub levels: Vec<Level>,
}

pub fn spectrum(model: &ChainModel) -> Result<ChainSpectrum> {
    let blocks: Vec<(Vec<u32>, EigenSystem)> = (0..=model.n)
        .into_par_iter()
        .map(|ups| {
            let (states, h) = model.sector_hamiltonian(ups);
            Ok((states, diagonalize(&h)?))
        })
        .collect::<Result<_>>()?;
    let mut levels = Vec::with_capacity(model.dim());
    let mut sectors = Vec::with_capacity(blocks.len());
    for (ups, (states, es)) in blocks.into_iter().enumerate() {
        for k in 0..es.dim() {
            levels.push(Level { energy: es.energies[k], ups, vector: es.basis.column(k).to_owned() });
        }
        sectors.push(states);
    }
    levels.sort_by(|a, b| a.energy.total_cmp(&b.energy).then(a.ups.cmp(&b.ups)));
    Ok(ChainSpectrum { model: *model, sectors, levels })
}

impl ChainSpectrum {
    pub fn energies(&self) -> Array1<f64> {
        self.levels.iter().map(|l| l.energy).collect()
    }

    /// Ascending energies of one S_z sector.
    pub fn sector_energies(&self, ups: usize) -> Vec<f64> {
        self.levels.iter().filter(|l| l.ups == ups).map(|l| l.energy).collect()
    }

    /// Gap Δ between the ground doublet and the first excitation.
    pub fn gap(&self) -> f64 {
        self.levels[2.min(self.levels.len() - 1)].energy - self.levels[0].energy
    }

    /// Keeps the lowest `keep` levels, ordered by S_z sector and then by
    /// energy so that spin operators are block-banded.
    pub fn truncate(&self, keep: usize) -> Result<TruncatedChain> {
        let dim = self.model.dim();
        if keep == 0 || keep > dim {
            return Err(Error::InvalidArgument(format!("truncation must be in 1..={dim}, got {keep}")));
        }
        let mut kept: Vec<&Level> = self.levels[..keep].iter().collect();
        kept.sort_by(|a, b| a.ups.cmp(&b.ups).then(a.energy.total_cmp(&b.energy)));
        let mut basis = Array2::<C64>::zeros((dim, keep));
        let mut sectors = vec![0];
        for (k, l) in kept.iter().enumerate() {
            if k > 0 && l.ups != kept[k - 1].ups {
                sectors.push(k);
            }
            for (a, &s) in self.sectors[l.ups].iter().enumerate() {
                basis[[s as usize, k]] = l.vector[a];
            }
        }
        sectors.push(keep);
        let energies: Array1<f64> = kept.iter().map(|l| l.energy).collect();
        Ok(TruncatedChain {
            model: self.model,
            es: EigenSystem::from_energies(energies),
            sz: kept.iter().map(|l| l.ups as f64 - 0.5 * self.model.n as f64).collect(),
            gap: self.gap(),
            basis,
            sectors,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinComponent {
    X,
    Y,
    Z,
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingBasis {
    /// S_ix, S_iy, S_iz, each with its own bath.
    Cartesian,
    /// S_i+ and S_i− at half coupling in place of S_ix, S_iy; equivalent.
    Ladder,
}

/// Lowest levels of the chain; all operators are expressed in this
/// eigenbasis.
#[derive(Debug, Clone)]
pub struct TruncatedChain {
    pub model: ChainModel,
    pub es: EigenSystem,
    /// S_z of each retained level.
    pub sz: Vec<f64>,
    /// Gap Δ of the full spectrum.
    pub gap: f64,
    /// Retained eigenvectors as columns over the 2ⁿ computational states.
    pub basis: CMat,
    /// Start of each S_z sector in the retained basis, followed by the dimension.
    pub sectors: Vec<usize>,
}

impl TruncatedChain {
    pub fn dim(&self) -> usize {
        self.es.dim()
    }

    /// Index of the lowest retained level.
    pub fn ground_index(&self) -> usize {
        let e = &self.es.energies;
        (0..e.len()).min_by(|a, b| e[*a].total_cmp(&e[*b])).unwrap_or(0)
    }

    /// T_fm = 2π/Δ.
    pub fn fmr_period(&self) -> f64 {
        2.0 * PI / self.gap
    }

    fn apply_site(&self, site: usize, c: SpinComponent, v: &CMat) -> CMat {
        let bit = 1u32 << site;
        let mut out = Array2::<C64>::zeros(v.dim());
        let half = C64::new(0.5, 0.0);
        for s in 0..v.nrows() as u32 {
            let up = s & bit != 0;
            let flipped = (s ^ bit) as usize;
            let row = s as usize;
            match c {
                SpinComponent::Z => {
                    let f = if up { 0.5 } else { -0.5 };
                    out.row_mut(row).zip_mut_with(&v.row(row), |o, x| *o = x * f);
                }
                SpinComponent::Plus if up => out.row_mut(row).assign(&v.row(flipped)),
                SpinComponent::Minus if !up => out.row_mut(row).assign(&v.row(flipped)),
                SpinComponent::X => out.row_mut(row).zip_mut_with(&v.row(flipped), |o, x| *o = x * half),
                SpinComponent::Y => {
                    // S_y = (S+ − S−)/(2i)
                    let f = if up { C64::new(0.0, -0.5) } else { C64::new(0.0, 0.5) };
                    out.row_mut(row).zip_mut_with(&v.row(flipped), |o, x| *o = x * f);
                }
                _ => {}
            }
        }
        out
    }

    /// Single-site spin component in the truncated eigenbasis.
    pub fn site_operator(&self, site: usize, c: SpinComponent) -> Result<CMat> {
        if site >= self.model.n {
            return Err(Error::InvalidArgument(format!("site {site} outside a chain of {}", self.model.n)));
        }
        let m = dagger(&self.basis).dot(&self.apply_site(site, c, &self.basis));
        Ok(match c {
            SpinComponent::Plus | SpinComponent::Minus => m,
            _ => hermitian_part(&m),
        })
    }

    pub fn total_spin(&self, c: SpinComponent) -> Result<CMat> {
        let mut acc = Array2::<C64>::zeros((self.dim(), self.dim()));
        for i in 0..self.model.n {
            acc += &self.site_operator(i, c)?;
        }
        Ok(acc)
    }

    /// Eigenvector of the truncated total S_x with the largest eigenvalue,
    /// together with that eigenvalue.
    pub fn perpendicular_state(&self) -> Result<(DensityMatrix, f64)> {
        let sx = self.total_spin(SpinComponent::X)?;
        let es = diagonalize(&sx)?;
        let k = es.dim() - 1;
        Ok((DensityMatrix::pure(&es.basis.column(k).to_owned()), es.energies[k]))
    }

    /// Bath for each of the 3n independent environments at total coupling g_tot.
    pub fn bath(&self, kind: BathKind, g_tot: f64, omega_c: f64) -> Result<BathModel> {
        BathModel::new(kind, g_tot / (3 * self.model.n) as f64, omega_c)
    }

    /// Cutoff ω_c = multiple·Δ.
    pub fn cutoff(&self, multiple: f64) -> f64 {
        multiple * self.gap
    }

    /// All 3n single-site couplings, each to its own copy of `bath`.
    pub fn coupling_set(&self, bath: BathModel, form: CouplingBasis) -> Result<CouplingSet> {
        let mut cs = CouplingSet::new();
        let half = bath.with_coupling(0.5 * bath.g);
        for i in 0..self.model.n {
            match form {
                CouplingBasis::Cartesian => {
                    cs.push(self.site_operator(i, SpinComponent::X)?, bath);
                    cs.push(self.site_operator(i, SpinComponent::Y)?, bath);
                }
                CouplingBasis::Ladder => {
                    cs.push(self.site_operator(i, SpinComponent::Plus)?, half);
                    cs.push(self.site_operator(i, SpinComponent::Minus)?, half);
                }
            }
            cs.push(self.site_operator(i, SpinComponent::Z)?, bath);
        }
        Ok(cs.with_sectors(self.sectors.clone()))
    }
}

/// Desk-scale chain: spectrum of the default model truncated to `keep` levels.
pub fn desk_chain(keep: usize) -> Result<TruncatedChain> {
    spectrum(&ChainModel::desk()?)?.truncate(keep)
}
