//! Spin-1 coherent states and the Q function `Q(θ, φ) = ⟨θ, φ|ρ|θ, φ⟩` of a
//! triplet state.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::io::{self, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::format;
use crate::generators::{feedback_drift_generator, steady_state};
use crate::operators::BasisLabel;
use crate::params::ModelParams;
use crate::state::DensityMatrix;
use num_complex::Complex64 as C64;

/// Allowed negative excursion of a Q value before it is treated as an error.
pub const Q_NEG_TOL: f64 = 1e-12;

pub const DEFAULT_N_THETA: usize = 181;
pub const DEFAULT_N_PHI: usize = 360;

/// `|θ, φ⟩` in `Dicke3` order (m = +1, 0, −1), with components
/// `√C(2, 1+m) cos^{1+m}(θ/2) sin^{1−m}(θ/2) e^{−imφ}`.
pub fn coherent_state(theta: f64, phi: f64) -> [C64; 3] {
    let (s, c) = (theta / 2.0).sin_cos();
    [
        C64::from_polar(c * c, -phi),
        C64::new(2f64.sqrt() * c * s, 0.0),
        C64::from_polar(s * s, phi),
    ]
}

pub fn q_value(rho: &DensityMatrix, theta: f64, phi: f64) -> Result<f64> {
    if rho.basis() != BasisLabel::Dicke3 {
        return Err(Error::BasisMismatch(format!(
            "Q function needs a Dicke3 state, got {:?}",
            rho.basis()
        )));
    }
    let k = coherent_state(theta, phi);
    let q = rho.mat().sandwich(&k, &k);
    if q.im.abs() > 1e-12 || q.re < -Q_NEG_TOL {
        return Err(Error::Numerical(format!(
            "Q({theta}, {phi}) = {q} is not a non-negative real"
        )));
    }
    Ok(q.re)
}

/// Q sampled on `θ_i = iπ/(n_θ − 1)` and `φ_k = 2πk/n_φ`.
#[derive(Debug, Clone)]
pub struct QGrid {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    /// Row-major, one row per θ.
    pub q: Vec<f64>,
}

pub fn q_grid(rho: &DensityMatrix, n_theta: usize, n_phi: usize) -> Result<QGrid> {
    if n_theta < 2 || n_phi < 2 {
        return Err(Error::InvalidParameter(format!(
            "Q grid needs at least 2×2 points, got {n_theta}×{n_phi}"
        )));
    }
    let theta: Vec<f64> = (0..n_theta)
        .map(|i| PI * i as f64 / (n_theta - 1) as f64)
        .collect();
    let phi: Vec<f64> = (0..n_phi)
        .map(|k| 2.0 * PI * k as f64 / n_phi as f64)
        .collect();
    let rows: Vec<Vec<f64>> = theta
        .par_iter()
        .map(|&t| phi.iter().map(|&p| q_value(rho, t, p)).collect())
        .collect::<Result<_>>()?;
    Ok(QGrid {
        theta,
        phi,
        q: rows.concat(),
    })
}

impl QGrid {
    pub fn n_theta(&self) -> usize {
        self.theta.len()
    }

    pub fn n_phi(&self) -> usize {
        self.phi.len()
    }

    pub fn at(&self, i: usize, k: usize) -> f64 {
        self.q[i * self.n_phi() + k]
    }

    /// `(3/4π) ∬ Q sin θ dθ dφ`, trapezoidal in θ and periodic in φ.
    pub fn normalization(&self) -> f64 {
        let (nt, np) = (self.n_theta(), self.n_phi());
        let dt = PI / (nt - 1) as f64;
        let dp = 2.0 * PI / np as f64;
        let mut total = 0.0;
        for i in 0..nt {
            let w = if i == 0 || i == nt - 1 { 0.5 } else { 1.0 };
            let row: f64 = self.q[i * np..(i + 1) * np].iter().sum();
            total += w * row * self.theta[i].sin();
        }
        3.0 / (4.0 * PI) * total * dt * dp
    }

    /// Normalization must be within `tol` of one.
    pub fn check_normalization(&self, tol: f64) -> Result<f64> {
        let n = self.normalization();
        if (n - 1.0).abs() > tol {
            return Err(Error::Numerical(format!("Q grid integrates to {n}")));
        }
        Ok(n)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "theta,phi,q")?;
        for (i, &t) in self.theta.iter().enumerate() {
            for (k, &p) in self.phi.iter().enumerate() {
                writeln!(w, "{}", format::row(&[t, p, self.at(i, k)]))?;
            }
        }
        Ok(())
    }
}

/// The eight states whose Q functions are compared: three symmetric Bell
/// states, the triplet identity, the two extremal states and the steady
/// states without feedback (α = 0.38) and with it (α = 0.4, λ = −0.8).
pub fn reference_states() -> Result<Vec<(&'static str, DensityMatrix)>> {
    let s = C64::new(FRAC_1_SQRT_2, 0.0);
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let basis = BasisLabel::Dicke3;
    let steady = |p: ModelParams| -> Result<DensityMatrix> {
        Ok(steady_state(&feedback_drift_generator(&p, basis)?)?.rho)
    };
    Ok(vec![
        ("phi_plus", DensityMatrix::pure(&[s, z, s], basis)?),
        ("phi_minus", DensityMatrix::pure(&[s, z, -s], basis)?),
        ("psi_plus", DensityMatrix::pure(&[z, one, z], basis)?),
        ("identity", DensityMatrix::maximally_mixed(basis)),
        ("ground", DensityMatrix::basis_state(2, basis)?),
        ("excited", DensityMatrix::basis_state(0, basis)?),
        ("steady_unmodulated", steady(ModelParams::new(0.38, 0.0))?),
        ("steady_feedback", steady(ModelParams::new(0.4, -0.8))?),
    ])
}
