//! Entanglement and mixedness of two-atom states, and parameter sweeps of
//! the steady state over drive and feedback amplitudes.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::format;
use crate::generators::{feedback_drift_generator, steady_state};
use crate::linalg::{herm_eig, kron, CMat, PSD_CLIP};
use crate::operators::{sigma_y, BasisLabel};
use crate::params::ModelParams;
use crate::state::DensityMatrix;

/// `ρ̃ = (σ_y ⊗ σ_y) ρ* (σ_y ⊗ σ_y)`, conjugation taken in the product basis.
pub fn spin_flip(rho: &DensityMatrix) -> Result<CMat> {
    if rho.basis() != BasisLabel::Product4 {
        return Err(Error::BasisMismatch(format!(
            "spin flip is defined in Product4, got {:?}",
            rho.basis()
        )));
    }
    let yy = kron(&sigma_y(), &sigma_y());
    Ok(&(&yy * &rho.mat().conj()) * &yy)
}

/// Wootters concurrence `max(0, √λ₁ − √λ₂ − √λ₃ − √λ₄)`, `λᵢ` the
/// eigenvalues of `ρ ρ̃` in decreasing order.
///
/// `√λᵢ` are the singular values of `Z = √ρ Y √ρ*` (`Y = σ_y ⊗ σ_y`), since
/// `Z Z† = √ρ ρ̃ √ρ`. They are read off the Hermitian dilation
/// `[[0, Z], [Z†, 0]]`, whose eigenvalues are `±√λᵢ`; this avoids square
/// roots of eigenvalues that are zero up to rounding. Eigenvalues of `ρ` at
/// the rounding floor are set to zero for the same reason. `Dicke3` input is
/// embedded in the product basis first.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    let rho = rho.to_product()?;
    let eig = herm_eig(rho.mat())?;
    let top = eig.values.iter().fold(1.0f64, |m, w| m.max(w.abs()));
    let floor = 16.0 * f64::EPSILON * top;
    let mut root = CMat::zeros(4);
    for (k, &w) in eig.values.iter().enumerate() {
        if w < -PSD_CLIP {
            return Err(Error::NotPsd { eigenvalue: w });
        }
        if w > floor {
            root += &CMat::projector(&eig.vectors.column(k)).scale_real(w.sqrt());
        }
    }
    let yy = kron(&sigma_y(), &sigma_y());
    let z = &(&root * &yy) * &root.conj();
    let mut dilation = CMat::zeros(8);
    for i in 0..4 {
        for j in 0..4 {
            dilation.as_mut_slice()[i * 8 + j + 4] = z[(i, j)];
            dilation.as_mut_slice()[(j + 4) * 8 + i] = z[(i, j)].conj();
        }
    }
    let values = herm_eig(&dilation)?.values;
    // Ascending, so the top four are the singular values, largest last.
    let s: Vec<f64> = values[4..].iter().rev().map(|&x| x.max(0.0)).collect();
    let c = s[0] - s[1] - s[2] - s[3];
    Ok(c.clamp(0.0, 1.0))
}

/// `r² = (4/3)(Tr ρ² − 1/4)`: 1 for pure states, 0 for `I/4`, and at least
/// 1/9 for states supported on the triplet.
pub fn purity_r2(rho: &DensityMatrix) -> Result<f64> {
    match rho.basis() {
        BasisLabel::Dicke3 | BasisLabel::Product4 => Ok(4.0 / 3.0 * (rho.purity() - 0.25)),
        other => Err(Error::BasisMismatch(format!(
            "r² is defined for two atoms, got {other:?}"
        ))),
    }
}

/// Purity of the maximally entangled mixed state with concurrence `c`:
/// `r² = 1 − (3/4)[4g(2 − 3g) − c²]`, `g = c/2` above `c = 2/3` and `1/3`
/// otherwise.
pub fn mems_r2(c: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::InvalidParameter(format!(
            "concurrence {c} outside [0, 1]"
        )));
    }
    let g = if c > 2.0 / 3.0 { c / 2.0 } else { 1.0 / 3.0 };
    Ok(1.0 - 0.75 * (4.0 * g * (2.0 - 3.0 * g) - c * c))
}

/// Largest concurrence compatible with purity `r2` on the MEMS frontier,
/// the inverse of [`mems_r2`].
pub fn mems_concurrence(r2: f64) -> f64 {
    let r2 = r2.clamp(0.0, 1.0);
    if r2 <= 1.0 / 3.0 {
        (4.0 * r2 / 3.0).sqrt()
    } else {
        ((3.0 + (12.0 * r2 - 3.0).max(0.0).sqrt()) / 6.0).min(1.0)
    }
}

/// Uniform grid `min, min + step, …` up to `max` inclusive (within 1e-9 steps).
pub fn grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !min.is_finite() || !max.is_finite() || max < min {
        return Err(Error::InvalidParameter(format!(
            "empty grid: min = {min}, max = {max}, step = {step}"
        )));
    }
    let n = ((max - min) / step + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|i| {
            let x = min + i as f64 * step;
            if x.abs() < 1e-12 * step {
                0.0
            } else {
                x
            }
        })
        .collect())
}

/// One `(α, λ)` point of a sweep. Failed points carry NaN metrics and the
/// error message.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub lambda: f64,
    pub concurrence: f64,
    pub r2: f64,
    pub steady_residual: f64,
    pub min_eig: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SweepRow {
    pub const CSV_HEADER: &'static str = "alpha,lambda,concurrence,r2,steady_residual,min_eig";

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }

    /// `C − C_MEMS(r²)`; positive values lie above the frontier.
    pub fn mems_excess(&self) -> f64 {
        self.concurrence - mems_concurrence(self.r2)
    }

    fn csv_line(&self) -> String {
        format::row(&[
            self.alpha,
            self.lambda,
            self.concurrence,
            self.r2,
            self.steady_residual,
            self.min_eig,
        ])
    }
}

/// Steady state at one parameter point, with its concurrence and purity.
pub fn evaluate_point(p: &ModelParams) -> SweepRow {
    let basis = if p.has_individual_decay() {
        BasisLabel::Product4
    } else {
        BasisLabel::Dicke3
    };
    let result = feedback_drift_generator(p, basis)
        .and_then(|l| steady_state(&l))
        .and_then(|ss| {
            Ok(SweepRow {
                alpha: p.alpha,
                lambda: p.lambda,
                concurrence: concurrence(&ss.rho)?,
                r2: purity_r2(&ss.rho)?,
                steady_residual: ss.residual,
                min_eig: ss.min_eigenvalue,
                error: None,
            })
        });
    result.unwrap_or_else(|e| SweepRow {
        alpha: p.alpha,
        lambda: p.lambda,
        concurrence: f64::NAN,
        r2: f64::NAN,
        steady_residual: f64::NAN,
        min_eig: f64::NAN,
        error: Some(e.to_string()),
    })
}

/// Rows ordered α-major, λ-minor.
#[derive(Debug, Clone, Serialize)]
pub struct Sweep {
    pub rows: Vec<SweepRow>,
}

/// Aggregate facts about a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub points: usize,
    pub failed: usize,
    /// Row with the largest concurrence; earliest row wins ties.
    pub argmax: Option<SweepRow>,
    /// Largest `C − C_MEMS(r²)` over all rows.
    pub max_mems_excess: f64,
    /// Whether every row satisfies `C ≤ C_MEMS(r²) + 1e-9`.
    pub mems_dominated: bool,
}

pub const MEMS_SLACK: f64 = 1e-9;

/// Steady-state concurrence and purity over the grid `alphas × lambdas`.
/// Points are independent and evaluated in parallel on the current rayon
/// pool; row order does not depend on the number of workers.
pub fn sweep(alphas: &[f64], lambdas: &[f64], base: &ModelParams) -> Result<Sweep> {
    if alphas.is_empty() || lambdas.is_empty() {
        return Err(Error::InvalidParameter("sweep grid is empty".into()));
    }
    base.validate()?;
    let points: Vec<ModelParams> = alphas
        .iter()
        .flat_map(|&alpha| {
            lambdas.iter().map(move |&lambda| ModelParams {
                alpha,
                lambda,
                ..*base
            })
        })
        .collect();
    let rows = points.par_iter().map(evaluate_point).collect();
    Ok(Sweep { rows })
}

impl Sweep {
    pub fn summary(&self) -> SweepSummary {
        let ok: Vec<&SweepRow> = self.rows.iter().filter(|r| r.is_ok()).collect();
        let argmax = ok
            .iter()
            .copied()
            .fold(None::<&SweepRow>, |best, r| match best {
                Some(b) if b.concurrence >= r.concurrence => Some(b),
                _ => Some(r),
            })
            .cloned();
        let max_mems_excess = ok
            .iter()
            .map(|r| r.mems_excess())
            .fold(f64::NEG_INFINITY, f64::max);
        SweepSummary {
            points: self.rows.len(),
            failed: self.rows.len() - ok.len(),
            argmax,
            max_mems_excess,
            mems_dominated: ok.iter().all(|r| r.mems_excess() <= MEMS_SLACK),
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", SweepRow::CSV_HEADER)?;
        for r in &self.rows {
            writeln!(w, "{}", r.csv_line())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::kets;
    use crate::test_util::{random_density, random_hermitian};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn product(ket: Vec<crate::C64>) -> DensityMatrix {
        DensityMatrix::pure(&ket, BasisLabel::Product4).unwrap()
    }

    #[test]
    fn spin_flip_examples() {
        let flipped = spin_flip(&product(kets::gg())).unwrap();
        assert!((&flipped - &CMat::projector(&kets::ee())).max_abs() < 1e-15);

        let phi = product(kets::bell_phi(1.0));
        assert!((&spin_flip(&phi).unwrap() - phi.mat()).max_abs() < 1e-15);

        let dicke = DensityMatrix::maximally_mixed(BasisLabel::Dicke3);
        assert!(matches!(spin_flip(&dicke), Err(Error::BasisMismatch(_))));
    }

    #[test]
    fn spin_flip_is_an_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let rho =
                DensityMatrix::new(random_density(&mut rng, 4), BasisLabel::Product4).unwrap();
            let once = DensityMatrix::new(spin_flip(&rho).unwrap(), BasisLabel::Product4).unwrap();
            let twice = spin_flip(&once).unwrap();
            assert!((&twice - rho.mat()).max_abs() < 1e-14);
        }
    }

    #[test]
    fn concurrence_landmarks() {
        for ket in [
            kets::bell_phi(1.0),
            kets::bell_phi(-1.0),
            kets::bell_psi(1.0),
            kets::bell_psi(-1.0),
        ] {
            assert!((concurrence(&product(ket)).unwrap() - 1.0).abs() < 1e-12);
        }
        assert_eq!(concurrence(&product(kets::gg())).unwrap(), 0.0);
        let mixed = DensityMatrix::maximally_mixed(BasisLabel::Product4);
        assert_eq!(concurrence(&mixed).unwrap(), 0.0);

        let (a, b) = (0.8, 0.6);
        let ket: Vec<_> = kets::eg()
            .iter()
            .zip(kets::ge())
            .map(|(x, y)| x * a + y * b)
            .collect();
        assert!((concurrence(&product(ket)).unwrap() - 0.96).abs() < 1e-12);
    }

    #[test]
    fn purity_landmarks() {
        assert!((purity_r2(&product(kets::bell_psi(1.0))).unwrap() - 1.0).abs() < 1e-15);
        let tri = DensityMatrix::maximally_mixed(BasisLabel::Dicke3);
        assert!((purity_r2(&tri).unwrap() - 1.0 / 9.0).abs() < 1e-15);
        assert!((purity_r2(&tri.to_product().unwrap()).unwrap() - 1.0 / 9.0).abs() < 1e-15);
        let full = DensityMatrix::maximally_mixed(BasisLabel::Product4);
        assert!(purity_r2(&full).unwrap().abs() < 1e-15);
        assert!(purity_r2(&DensityMatrix::maximally_mixed(BasisLabel::Qubit)).is_err());
    }

    #[test]
    fn mems_curve() {
        assert!((mems_r2(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(mems_r2(0.0).unwrap().abs() < 1e-15);
        assert!(mems_r2(1.5).is_err());
        assert!(mems_r2(-0.1).is_err());
        // Both branches at the junction.
        let c: f64 = 2.0 / 3.0;
        let lower = 1.0 - 0.75 * (4.0 / 3.0 * (2.0 - 1.0) - c * c);
        let g = c / 2.0;
        let upper = 1.0 - 0.75 * (4.0 * g * (2.0 - 3.0 * g) - c * c);
        assert!((lower - upper).abs() <= 1e-15);
        assert!((mems_r2(c).unwrap() - lower).abs() <= 1e-15);
    }

    #[test]
    fn mems_inverse_matches_bisection() {
        let bisect = |r2: f64| {
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mems_r2(mid).unwrap() < r2 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        for i in 0..=100 {
            let r2 = i as f64 / 100.0;
            assert!((mems_concurrence(r2) - bisect(r2)).abs() < 1e-12, "{r2}");
        }
    }

    #[test]
    fn grid_construction() {
        let g = grid(-1.0, 1.0, 0.02).unwrap();
        assert_eq!(g.len(), 101);
        assert_eq!(g[50], 0.0);
        assert!((g[100] - 1.0).abs() < 1e-14);
        assert_eq!(grid(0.38, 0.38, 0.01).unwrap(), vec![0.38]);
        assert!(grid(1.0, 0.0, 0.1).is_err());
        assert!(grid(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn sweep_rejects_empty_grid() {
        assert!(sweep(&[], &[0.0], &ModelParams::default()).is_err());
        assert!(sweep(&[0.0], &[], &ModelParams::default()).is_err());
    }

    #[test]
    fn sweep_rows_and_csv() {
        let s = sweep(&[-0.4, 0.0, 0.4], &[-0.8, 0.0], &ModelParams::default()).unwrap();
        assert_eq!(s.rows.len(), 6);
        assert_eq!((s.rows[1].alpha, s.rows[1].lambda), (-0.4, 0.0));
        let summary = s.summary();
        assert_eq!(summary.failed, 0);
        assert!(summary.mems_dominated);
        let best = summary.argmax.unwrap();
        assert_eq!((best.alpha, best.lambda), (-0.4, -0.8));
        assert!((s.rows[0].concurrence - s.rows[4].concurrence).abs() < 1e-9);

        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], SweepRow::CSV_HEADER);
        assert_eq!(lines.len(), 7);
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn failed_point_is_recorded() {
        let row = evaluate_point(&ModelParams::new(0.1, 0.0).with_gamma(-1.0));
        assert!(!row.is_ok());
        assert!(row.concurrence.is_nan());
    }

    fn random_unitary(rng: &mut ChaCha8Rng) -> CMat {
        herm_eig(&random_hermitian(rng, 2)).unwrap().vectors
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn local_unitaries_preserve_concurrence(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = DensityMatrix::new(random_density(&mut rng, 4), BasisLabel::Product4).unwrap();
            let u = kron(&random_unitary(&mut rng), &random_unitary(&mut rng));
            let moved = DensityMatrix::new(
                (&(&u * rho.mat()) * &u.adjoint()).hermitian_part(),
                BasisLabel::Product4,
            )
            .unwrap();
            let (a, b) = (concurrence(&rho).unwrap(), concurrence(&moved).unwrap());
            prop_assert!((a - b).abs() < 1e-10, "{} vs {}", a, b);
        }

        #[test]
        fn purity_bounds(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let four = DensityMatrix::new(random_density(&mut rng, 4), BasisLabel::Product4).unwrap();
            let r2 = purity_r2(&four).unwrap();
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&r2));
            let three = DensityMatrix::new(random_density(&mut rng, 3), BasisLabel::Dicke3).unwrap();
            let r2 = purity_r2(&three).unwrap();
            prop_assert!(r2 >= 1.0 / 9.0 - 1e-9 && r2 <= 1.0 + 1e-12);
            let c = concurrence(&three).unwrap();
            prop_assert!((0.0..=1.0).contains(&c));
        }
    }
}
