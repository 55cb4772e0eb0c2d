use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::CMat;

pub fn random_cmat<R: Rng>(rng: &mut R, n: usize) -> CMat {
    let data = (0..n * n)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    CMat::from_vec(n, data).unwrap()
}

pub fn random_hermitian<R: Rng>(rng: &mut R, n: usize) -> CMat {
    let a = random_cmat(rng, n);
    &a + &a.adjoint()
}

/// Random full-rank density matrix `A A^H / Tr(A A^H)`.
pub fn random_density<R: Rng>(rng: &mut R, n: usize) -> CMat {
    let a = random_cmat(rng, n);
    let m = &a * &a.adjoint();
    let tr = m.trace().re;
    m.scale_real(1.0 / tr)
}
