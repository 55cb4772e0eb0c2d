use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{herm_eig, CMat};
use crate::operators::{embed_dicke_to_product, BasisLabel};

/// Relative Hermiticity tolerance for density matrices.
pub const DENSITY_HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-9;
/// Most negative eigenvalue accepted by [`DensityMatrix::new`].
pub const PSD_TOL: f64 = 1e-8;

/// Hermitian, unit-trace matrix tagged with the basis it is written in.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(into = "DensitySerde")]
pub struct DensityMatrix {
    mat: CMat,
    basis: BasisLabel,
}

impl DensityMatrix {
    /// Validates dimension, Hermiticity, unit trace and positivity.
    pub fn new(mat: CMat, basis: BasisLabel) -> Result<Self> {
        let rho = Self::with_indefinite(mat, basis)?;
        let w = rho.min_eigenvalue()?;
        if w < -PSD_TOL {
            return Err(Error::NotPsd { eigenvalue: w });
        }
        Ok(rho)
    }

    /// Like [`DensityMatrix::new`] without the positivity check. Used for
    /// integrator output whose transient negativity is tracked rather than
    /// rejected.
    pub fn with_indefinite(mat: CMat, basis: BasisLabel) -> Result<Self> {
        if mat.dim() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                got: mat.dim(),
            });
        }
        if !mat.is_hermitian(DENSITY_HERMITIAN_TOL) {
            return Err(Error::NotHermitian {
                deviation: mat.hermitian_deviation(),
            });
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::BadTrace { trace: tr.re });
        }
        Ok(DensityMatrix { mat, basis })
    }

    /// `|ψ⟩⟨ψ|` for a normalized ket.
    pub fn pure(ket: &[C64], basis: BasisLabel) -> Result<Self> {
        Self::new(CMat::projector(ket), basis)
    }

    pub fn maximally_mixed(basis: BasisLabel) -> Self {
        let d = basis.dim();
        DensityMatrix {
            mat: CMat::identity(d).scale_real(1.0 / d as f64),
            basis,
        }
    }

    /// Basis state `|index⟩⟨index|`.
    pub fn basis_state(index: usize, basis: BasisLabel) -> Result<Self> {
        let d = basis.dim();
        if index >= d {
            return Err(Error::InvalidParameter(format!(
                "basis index {index} out of range"
            )));
        }
        let mut m = CMat::zeros(d);
        m[(index, index)] = C64::new(1.0, 0.0);
        Ok(DensityMatrix { mat: m, basis })
    }

    #[inline]
    pub fn mat(&self) -> &CMat {
        &self.mat
    }

    #[inline]
    pub fn basis(&self) -> BasisLabel {
        self.basis
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn into_mat(self) -> CMat {
        self.mat
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(herm_eig(&self.mat)?.values[0])
    }

    /// `Tr(op ρ)`
    pub fn expectation(&self, op: &CMat) -> C64 {
        let n = self.dim();
        let mut s = C64::new(0.0, 0.0);
        for i in 0..n {
            for k in 0..n {
                s += op[(i, k)] * self.mat[(k, i)];
            }
        }
        s
    }

    /// `Tr(ρ²)`
    pub fn purity(&self) -> f64 {
        self.mat.as_slice().iter().map(|z| z.norm_sqr()).sum()
    }

    /// `⟨ψ|ρ|ψ⟩`
    pub fn population(&self, ket: &[C64]) -> f64 {
        self.mat.sandwich(ket, ket).re
    }

    /// The same state in `Product4`.
    pub fn to_product(&self) -> Result<DensityMatrix> {
        match self.basis {
            BasisLabel::Product4 => Ok(self.clone()),
            BasisLabel::Dicke3 => Ok(DensityMatrix {
                mat: embed_dicke_to_product(&self.mat)?,
                basis: BasisLabel::Product4,
            }),
            BasisLabel::Qubit => Err(Error::BasisMismatch("single-atom state".into())),
            BasisLabel::CavityJoint { .. } => Err(Error::BasisMismatch(
                "trace out the cavity before converting to the product basis".into(),
            )),
        }
    }
}

#[derive(Serialize)]
struct DensitySerde {
    basis: BasisLabel,
    dim: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl From<DensityMatrix> for DensitySerde {
    fn from(rho: DensityMatrix) -> Self {
        let n = rho.dim();
        let rows = |f: fn(&C64) -> f64| -> Vec<Vec<f64>> {
            (0..n)
                .map(|i| (0..n).map(|j| f(&rho.mat[(i, j)])).collect())
                .collect()
        };
        DensitySerde {
            basis: rho.basis,
            dim: n,
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }
}
