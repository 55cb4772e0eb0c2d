//! Single-atom Pauli operators, collective two-atom operators and the bases
//! they act on.
//!
//! Single-atom basis order is `{|g⟩, |e⟩}`; the lowering operator is
//! `σ⁻ = |g⟩⟨e|`. Two-atom operators come in two representations:
//!
//! * `Product4`: `{|gg⟩, |ge⟩, |eg⟩, |ee⟩}`, atom 1 is the left tensor factor.
//! * `Dicke3`: the symmetric triplet `|1⟩ = |ee⟩`,
//!   `|2⟩ = (|ge⟩ + |eg⟩)/√2`, `|3⟩ = |gg⟩`.
//!
//! The singlet `(|ge⟩ − |eg⟩)/√2` is decoupled from every collective
//! operator, so the triplet is an invariant subspace of the collective
//! dynamics.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{kron, CMat, I, ONE, ZERO};

/// Atomic part of a basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AtomBasis {
    Dicke3,
    Product4,
}

impl AtomBasis {
    pub fn dim(self) -> usize {
        match self {
            AtomBasis::Dicke3 => 3,
            AtomBasis::Product4 => 4,
        }
    }
}

/// Which basis a matrix is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisLabel {
    /// One atom, `{|g⟩, |e⟩}`.
    Qubit,
    Dicke3,
    Product4,
    /// Atoms ⊗ cavity, atom index major and photon number `0..n_fock` minor.
    CavityJoint {
        atoms: AtomBasis,
        n_fock: usize,
    },
}

impl BasisLabel {
    pub fn dim(self) -> usize {
        match self {
            BasisLabel::Qubit => 2,
            BasisLabel::Dicke3 => 3,
            BasisLabel::Product4 => 4,
            BasisLabel::CavityJoint { atoms, n_fock } => atoms.dim() * n_fock,
        }
    }

    /// Atomic part, `None` for a single atom.
    pub fn atoms(self) -> Option<AtomBasis> {
        match self {
            BasisLabel::Qubit => None,
            BasisLabel::Dicke3 => Some(AtomBasis::Dicke3),
            BasisLabel::Product4 => Some(AtomBasis::Product4),
            BasisLabel::CavityJoint { atoms, .. } => Some(atoms),
        }
    }
}

impl From<AtomBasis> for BasisLabel {
    fn from(a: AtomBasis) -> Self {
        match a {
            AtomBasis::Dicke3 => BasisLabel::Dicke3,
            AtomBasis::Product4 => BasisLabel::Product4,
        }
    }
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `σ⁻ = |g⟩⟨e|`
pub fn sigma_minus() -> CMat {
    CMat::from_rows(&[[ZERO, ONE], [ZERO, ZERO]]).unwrap()
}

/// `σ⁺ = |e⟩⟨g|`
pub fn sigma_plus() -> CMat {
    CMat::from_rows(&[[ZERO, ZERO], [ONE, ZERO]]).unwrap()
}

pub fn sigma_x() -> CMat {
    CMat::from_rows(&[[ZERO, ONE], [ONE, ZERO]]).unwrap()
}

pub fn sigma_y() -> CMat {
    CMat::from_rows(&[[ZERO, -I], [I, ZERO]]).unwrap()
}

pub fn sigma_z() -> CMat {
    CMat::from_rows(&[[ONE, ZERO], [ZERO, -ONE]]).unwrap()
}

/// Collective operators of the two atoms.
///
/// `jx = J⁺ + J⁻` and `jy = (J⁺ − J⁻)/i`, so `J± ≠ (jx ± i jy)/2`; with these
/// definitions `[jx, jy] = 2i jz` where `jz = [J⁺, J⁻]`.
#[derive(Debug, Clone)]
pub struct CollectiveOps {
    pub jminus: CMat,
    pub jplus: CMat,
    pub jx: CMat,
    pub jy: CMat,
    pub jz: CMat,
}

pub fn collective_ops(basis: BasisLabel) -> Result<CollectiveOps> {
    let jminus = match basis {
        BasisLabel::Dicke3 => {
            let s = real(std::f64::consts::SQRT_2);
            CMat::from_rows(&[[ZERO, ZERO, ZERO], [s, ZERO, ZERO], [ZERO, s, ZERO]]).unwrap()
        }
        BasisLabel::Product4 => {
            let id = CMat::identity(2);
            &kron(&sigma_minus(), &id) + &kron(&id, &sigma_minus())
        }
        BasisLabel::Qubit => {
            return Err(Error::BasisMismatch(
                "collective operators need two atoms".into(),
            ))
        }
        BasisLabel::CavityJoint { .. } => {
            return Err(Error::BasisMismatch(
                "collective operators on the joint space are built with tensor_with_cavity".into(),
            ))
        }
    };
    Ok(CollectiveOps::from_lowering(jminus))
}

impl CollectiveOps {
    fn from_lowering(jminus: CMat) -> Self {
        let jplus = jminus.adjoint();
        let jx = &jplus + &jminus;
        let jy = (&jplus - &jminus).scale(-I);
        let jz = jplus.commutator(&jminus);
        CollectiveOps {
            jminus,
            jplus,
            jx,
            jy,
            jz,
        }
    }
}

/// Lowering operator of one atom in `Product4`; `atom` is 1 or 2.
pub fn individual_lowering(atom: usize) -> Result<CMat> {
    let id = CMat::identity(2);
    match atom {
        1 => Ok(kron(&sigma_minus(), &id)),
        2 => Ok(kron(&id, &sigma_minus())),
        _ => Err(Error::InvalidParameter(format!(
            "atom index {atom} (expected 1 or 2)"
        ))),
    }
}

/// Product-basis kets.
pub mod kets {
    use super::*;

    pub fn gg() -> Vec<C64> {
        vec![ONE, ZERO, ZERO, ZERO]
    }
    pub fn ge() -> Vec<C64> {
        vec![ZERO, ONE, ZERO, ZERO]
    }
    pub fn eg() -> Vec<C64> {
        vec![ZERO, ZERO, ONE, ZERO]
    }
    pub fn ee() -> Vec<C64> {
        vec![ZERO, ZERO, ZERO, ONE]
    }

    /// `(|ge⟩ − |eg⟩)/√2`
    pub fn singlet() -> Vec<C64> {
        let s = real(FRAC_1_SQRT_2);
        vec![ZERO, s, -s, ZERO]
    }

    /// `(|gg⟩ ± |ee⟩)/√2`
    pub fn bell_phi(sign: f64) -> Vec<C64> {
        let s = real(FRAC_1_SQRT_2);
        vec![s, ZERO, ZERO, s * sign]
    }

    /// `(|ge⟩ ± |eg⟩)/√2`
    pub fn bell_psi(sign: f64) -> Vec<C64> {
        let s = real(FRAC_1_SQRT_2);
        vec![ZERO, s, s * sign, ZERO]
    }

    /// The triplet states `|1⟩, |2⟩, |3⟩` in the product basis.
    pub fn dicke() -> [Vec<C64>; 3] {
        [ee(), bell_psi(1.0), gg()]
    }
}

/// Maps a `Dicke3` operator onto `Product4`: `V m V^H` with `V` the triplet
/// isometry. The singlet row and column of the result are zero.
pub fn embed_dicke_to_product(m: &CMat) -> Result<CMat> {
    if m.dim() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: m.dim(),
        });
    }
    let basis = kets::dicke();
    let mut out = CMat::zeros(4);
    for a in 0..3 {
        for b in 0..3 {
            let w = m[(a, b)];
            if w == ZERO {
                continue;
            }
            out += &CMat::outer(&basis[a], &basis[b]).scale(w);
        }
    }
    Ok(out)
}

/// Compresses a `Product4` operator onto the triplet: `V^H m V`.
pub fn restrict_product_to_dicke(m: &CMat) -> Result<CMat> {
    if m.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: m.dim(),
        });
    }
    let basis = kets::dicke();
    let mut out = CMat::zeros(3);
    for a in 0..3 {
        for b in 0..3 {
            out[(a, b)] = m.sandwich(&basis[a], &basis[b]);
        }
    }
    Ok(out)
}

/// Cavity annihilation operator truncated to `n_fock` levels:
/// `b|n⟩ = √n |n−1⟩`.
pub fn annihilation(n_fock: usize) -> CMat {
    let mut b = CMat::zeros(n_fock);
    for n in 1..n_fock {
        b[(n - 1, n)] = real((n as f64).sqrt());
    }
    b
}

/// `atom_op ⊗ cavity_op` in the joint ordering (atoms major).
pub fn tensor_with_cavity(atom_op: &CMat, cavity_op: &CMat) -> CMat {
    kron(atom_op, cavity_op)
}
