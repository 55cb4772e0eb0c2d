//! Helpers shared by the integration tests.
#![allow(dead_code)]

use nalgebra::Matrix4;
use num_complex::Complex64 as C64;
use qfb::linalg::CMat;
use qfb::metrics::spin_flip;
use qfb::operators::BasisLabel;
use qfb::DensityMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn gaussian(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    CMat::from_vec(n, (0..n * n).map(|_| gaussian(rng)).collect()).unwrap()
}

/// `G G† / Tr(G G†)` with Gaussian `G`: full rank with probability one.
pub fn random_density(rng: &mut ChaCha8Rng, n: usize) -> DensityMatrix {
    let g = random_matrix(rng, n);
    let m = &g * &g.adjoint();
    let tr = m.trace().re;
    let basis = if n == 4 {
        BasisLabel::Product4
    } else {
        BasisLabel::Dicke3
    };
    DensityMatrix::new(m.scale_real(1.0 / tr).hermitian_part(), basis).unwrap()
}

pub fn to_nalgebra(m: &CMat) -> Matrix4<C64> {
    Matrix4::from_fn(|i, j| m[(i, j)])
}

/// Concurrence from the eigenvalues of the non-Hermitian product `ρ ρ̃`.
pub fn direct_concurrence(rho: &DensityMatrix) -> f64 {
    let rho = rho.to_product().unwrap();
    let prod = to_nalgebra(rho.mat()) * to_nalgebra(&spin_flip(&rho).unwrap());
    let eig = prod.schur().eigenvalues().expect("triangular Schur form");
    // Eigenvalues that are zero up to rounding would otherwise contribute
    // their square root, about 1e-8.
    let top = eig.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let mut roots: Vec<f64> = eig
        .iter()
        .map(|z| {
            if z.norm() < 1e-13 * top {
                0.0
            } else {
                z.re.max(0.0).sqrt()
            }
        })
        .collect();
    roots.sort_by(|a, b| b.total_cmp(a));
    (roots[0] - roots[1] - roots[2] - roots[3]).max(0.0)
}
