//! Small real density matrices and the trace distance between them.
//!
//! Every ensemble in the protocols is real, so matrices are real symmetric.
//! Dimensions are capped at 256 (eight qubits); audits enumerate exactly.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    entries: Vec<f64>,
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || !dim.is_power_of_two() || dim > MAX_DIM {
        return Err(Error::DimensionOverflow(dim));
    }
    Ok(())
}

impl DensityMatrix {
    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(DensityMatrix { dim, entries: vec![0.0; dim * dim] })
    }

    /// `I / dim`.
    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        let mut d = Self::zeros(dim)?;
        for i in 0..dim {
            d.entries[i * dim + i] = 1.0 / dim as f64;
        }
        Ok(d)
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        let mut d = Self::zeros(diag.len())?;
        for (i, v) in diag.iter().enumerate() {
            d.entries[i * diag.len() + i] = *v;
        }
        Ok(d)
    }

    /// Uniform mixture of the computational basis states at `indices`.
    pub fn uniform_over_basis_states(dim: usize, indices: &[usize]) -> Result<Self> {
        let mut d = Self::zeros(dim)?;
        if indices.is_empty() {
            return Err(Error::InvalidParameter("empty support".into()));
        }
        let w = 1.0 / indices.len() as f64;
        for &i in indices {
            if i >= dim {
                return Err(Error::InvalidParameter(format!("basis index {i} >= {dim}")));
            }
            d.entries[i * dim + i] += w;
        }
        Ok(d)
    }

    pub fn from_pure(amplitudes: &[f64]) -> Result<Self> {
        ensemble_density([(amplitudes.to_vec(), 1.0)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.dim + col]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.entries)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        SymmetricEigen::new(self.to_nalgebra()).eigenvalues.iter().copied().collect()
    }

    /// Trace one and positive semidefinite, both within `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        (self.trace() - 1.0).abs() <= tol && self.eigenvalues().iter().all(|&l| l >= -tol)
    }
}

/// Weighted average of pure-state projectors, `sum_k w_k |psi_k><psi_k|`.
///
/// Weights must sum to one. Zero amplitudes are skipped, so ensembles of
/// computational-basis states cost O(1) per member regardless of dimension.
pub fn ensemble_density<I>(members: I) -> Result<DensityMatrix>
where
    I: IntoIterator<Item = (Vec<f64>, f64)>,
{
    let mut acc: Option<DensityMatrix> = None;
    let mut total_weight = 0.0;
    let mut support: Vec<(usize, f64)> = Vec::new();
    for (amps, w) in members {
        let dm = match &mut acc {
            Some(dm) => {
                if dm.dim != amps.len() {
                    return Err(Error::LengthMismatch { expected: dm.dim, actual: amps.len() });
                }
                dm
            }
            None => acc.insert(DensityMatrix::zeros(amps.len())?),
        };
        total_weight += w;
        support.clear();
        support.extend(amps.iter().copied().enumerate().filter(|(_, a)| *a != 0.0));
        let dim = dm.dim;
        for &(i, ai) in &support {
            let row = &mut dm.entries[i * dim..(i + 1) * dim];
            let wa = w * ai;
            for &(j, aj) in &support {
                row[j] += wa * aj;
            }
        }
    }
    let dm = acc.ok_or_else(|| Error::InvalidParameter("empty ensemble".into()))?;
    if (total_weight - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("weights sum to {total_weight}, not 1")));
    }
    Ok(dm)
}

/// `1/2 * sum |eigenvalues(a - b)|`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim != b.dim {
        return Err(Error::LengthMismatch { expected: a.dim, actual: b.dim });
    }
    let diff = a.to_nalgebra() - b.to_nalgebra();
    let eig = SymmetricEigen::new(diff);
    Ok(0.5 * eig.eigenvalues.iter().map(|l| l.abs()).sum::<f64>())
}
