//! Liouvillian superoperators for the two-atom model, their steady states
//! and deterministic time evolution.
//!
//! A [`Superop`] acts on column-stacked density matrices (see
//! [`crate::linalg::vec`]), so `A ρ B` is represented by `B^T ⊗ A`.

use std::ops::Add;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{herm_eig, kron, solve_linear, trace_distance, unvec, vec, CMat, I, ONE, ZERO};
use crate::operators::{
    annihilation, collective_ops, embed_dicke_to_product, individual_lowering,
    restrict_product_to_dicke, tensor_with_cavity, AtomBasis, BasisLabel,
};
use crate::params::{CavityParams, ModelParams};
use crate::state::DensityMatrix;

/// Steady-state residuals above this are reported as numerical failures.
pub const STEADY_RESIDUAL_MAX: f64 = 1e-8;

/// Relative disagreement between the two row-replacement solves above which
/// the steady state is declared non-unique.
const UNIQUENESS_TOL: f64 = 1e-8;

/// Linear map on density matrices of one basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Superop {
    basis: BasisLabel,
    matrix: CMat,
}

impl Superop {
    pub fn new(matrix: CMat, basis: BasisLabel) -> Result<Self> {
        let d = basis.dim();
        if matrix.dim() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                got: matrix.dim(),
            });
        }
        Ok(Superop { basis, matrix })
    }

    pub fn zero(basis: BasisLabel) -> Self {
        let d = basis.dim();
        Superop {
            basis,
            matrix: CMat::zeros(d * d),
        }
    }

    /// `ρ ↦ A ρ`
    pub fn left(a: &CMat, basis: BasisLabel) -> Result<Self> {
        Self::new(kron(&CMat::identity(a.dim()), a), basis)
    }

    /// `ρ ↦ ρ B`
    pub fn right(b: &CMat, basis: BasisLabel) -> Result<Self> {
        Self::new(kron(&b.transpose(), &CMat::identity(b.dim())), basis)
    }

    pub fn basis(&self) -> BasisLabel {
        self.basis
    }

    /// Hilbert-space dimension `d`; the matrix is `d² × d²`.
    pub fn hilbert_dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn apply(&self, rho: &CMat) -> CMat {
        unvec(&self.matrix.matvec(&vec(rho)), rho.dim()).expect("dimension checked by matvec")
    }

    pub fn scale(&self, s: f64) -> Self {
        Superop {
            basis: self.basis,
            matrix: self.matrix.scale_real(s),
        }
    }

    /// Composition `self ∘ other`.
    pub fn compose(&self, other: &Superop) -> Self {
        assert_eq!(self.basis, other.basis);
        Superop {
            basis: self.basis,
            matrix: &self.matrix * &other.matrix,
        }
    }

    /// `max_k |Σ_i L[ii, k]|`, zero for a trace-preserving generator.
    pub fn trace_defect(&self) -> f64 {
        let d = self.hilbert_dim();
        let n = d * d;
        (0..n)
            .map(|k| {
                (0..d)
                    .map(|i| self.matrix[(i * d + i, k)])
                    .sum::<C64>()
                    .norm()
            })
            .fold(0.0, f64::max)
    }

    /// Restricts a `Product4` generator to the triplet, provided the triplet
    /// is invariant under it.
    pub fn restrict_to_triplet(&self) -> Result<Superop> {
        if self.basis != BasisLabel::Product4 {
            return Err(Error::BasisMismatch(format!(
                "triplet restriction needs Product4, got {:?}",
                self.basis
            )));
        }
        let mut m = CMat::zeros(9);
        for b in 0..3 {
            for a in 0..3 {
                let mut unit = CMat::zeros(3);
                unit[(a, b)] = ONE;
                let out = self.apply(&embed_dicke_to_product(&unit)?);
                let restricted = restrict_product_to_dicke(&out)?;
                let leak = (&embed_dicke_to_product(&restricted)? - &out).max_abs();
                if leak > 1e-12 * self.matrix.max_abs().max(1.0) {
                    return Err(Error::BasisMismatch(format!(
                        "generator couples the triplet to the singlet (leak {leak:e})"
                    )));
                }
                let col = vec(&restricted);
                for (row, z) in col.into_iter().enumerate() {
                    m[(row, b * 3 + a)] = z;
                }
            }
        }
        Superop::new(m, BasisLabel::Dicke3)
    }
}

impl Add for Superop {
    type Output = Superop;
    fn add(self, rhs: Superop) -> Superop {
        assert_eq!(
            self.basis, rhs.basis,
            "adding superoperators on different bases"
        );
        Superop {
            basis: self.basis,
            matrix: &self.matrix + &rhs.matrix,
        }
    }
}

fn check_dim(m: &CMat, basis: BasisLabel) -> Result<()> {
    if m.dim() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            got: m.dim(),
        });
    }
    Ok(())
}

/// `D[A]ρ = AρA† − ½{A†A, ρ}` as `Ā⊗A − ½ I⊗A†A − ½ (A†A)^T⊗I`.
pub fn dissipator(a: &CMat, basis: BasisLabel) -> Result<Superop> {
    check_dim(a, basis)?;
    let ada = &a.adjoint() * a;
    let id = CMat::identity(a.dim());
    let m = &(&kron(&a.conj(), a) - &kron(&id, &ada).scale_real(0.5))
        - &kron(&ada.transpose(), &id).scale_real(0.5);
    Superop::new(m, basis)
}

/// `ρ ↦ −i[h, ρ]` for Hermitian `h`.
pub fn hamiltonian_part(h: &CMat, basis: BasisLabel) -> Result<Superop> {
    check_dim(h, basis)?;
    if !h.is_hermitian(1e-12) {
        return Err(Error::NotHermitian {
            deviation: h.hermitian_deviation(),
        });
    }
    commutator_part(h, basis)
}

/// `ρ ↦ −i[a, ρ]` without the Hermiticity requirement.
fn commutator_part(a: &CMat, basis: BasisLabel) -> Result<Superop> {
    let id = CMat::identity(a.dim());
    let m = (&kron(&id, a) - &kron(&a.transpose(), &id)).scale(-I);
    Superop::new(m, basis)
}

fn two_atom_basis(basis: BasisLabel) -> Result<()> {
    match basis {
        BasisLabel::Dicke3 | BasisLabel::Product4 => Ok(()),
        other => Err(Error::BasisMismatch(format!(
            "two-atom generator needs Dicke3 or Product4, got {other:?}"
        ))),
    }
}

fn individual_decay(p: &ModelParams, basis: BasisLabel) -> Result<Option<Superop>> {
    if !p.has_individual_decay() {
        return Ok(None);
    }
    if basis != BasisLabel::Product4 {
        return Err(Error::BasisMismatch(
            "individual decay breaks the triplet; use Product4".into(),
        ));
    }
    let d1 = dissipator(&individual_lowering(1)?, basis)?.scale(p.gamma1);
    let d2 = dissipator(&individual_lowering(2)?, basis)?.scale(p.gamma2);
    Ok(Some(d1 + d2))
}

/// Generator of the driven, collectively damped atoms without feedback:
/// `−i[α Jx, ρ] + γ D[J⁻]ρ + γ₁ D[σ₁]ρ + γ₂ D[σ₂]ρ`.
pub fn unmodulated_generator(p: &ModelParams, basis: BasisLabel) -> Result<Superop> {
    p.validate()?;
    two_atom_basis(basis)?;
    let ops = collective_ops(basis)?;
    let mut l = hamiltonian_part(&ops.jx.scale_real(p.alpha), basis)?
        + dissipator(&ops.jminus, basis)?.scale(p.gamma);
    if let Some(ind) = individual_decay(p, basis)? {
        l = l + ind;
    }
    Ok(l)
}

/// Ensemble-average generator with homodyne-mediated feedback on the drive:
///
/// `γ D[J⁻]ρ − i[α Jx, ρ] − i[F, −iJ⁻ρ + iρJ⁺] + (1/γ) D[F]ρ`, `F = λ Jx`,
///
/// plus individual decay in `Product4`. Detection efficiency does not enter.
pub fn feedback_drift_generator(p: &ModelParams, basis: BasisLabel) -> Result<Superop> {
    let mut l = unmodulated_generator(p, basis)?;
    if p.lambda == 0.0 {
        return Ok(l);
    }
    let ops = collective_ops(basis)?;
    let f = ops.jx.scale_real(p.lambda);
    let measured =
        Superop::left(&ops.jminus.scale(-I), basis)? + Superop::right(&ops.jplus.scale(I), basis)?;
    let feedback = commutator_part(&f, basis)?.compose(&measured);
    l = l + feedback + dissipator(&f, basis)?.scale(1.0 / p.gamma);
    Ok(l)
}

/// Atoms plus a truncated cavity mode in the frame displaced by the cavity's
/// coherent amplitude:
///
/// `−i(gα₀/2γ_p)[J⁺ + J⁻, ν] + γ₁D[σ₁]ν + γ₂D[σ₂]ν − i(g/2)[J⁺b + J⁻b†, ν] + γ_p D[b]ν`.
///
/// Atoms are represented in `Dicke3` when there is no individual decay and in
/// `Product4` otherwise.
pub fn cavity_generator(c: &CavityParams, n_fock: usize) -> Result<Superop> {
    c.validate()?;
    if n_fock < 4 {
        return Err(Error::InvalidParameter(format!(
            "n_fock = {n_fock} must be >= 4"
        )));
    }
    let atoms = if c.gamma1 != 0.0 || c.gamma2 != 0.0 {
        AtomBasis::Product4
    } else {
        AtomBasis::Dicke3
    };
    let atom_basis = BasisLabel::from(atoms);
    let basis = BasisLabel::CavityJoint { atoms, n_fock };
    let ops = collective_ops(atom_basis)?;
    let id_c = CMat::identity(n_fock);
    let id_a = CMat::identity(atoms.dim());
    let b = tensor_with_cavity(&id_a, &annihilation(n_fock));
    let jm = tensor_with_cavity(&ops.jminus, &id_c);
    let jp = tensor_with_cavity(&ops.jplus, &id_c);

    let drive = tensor_with_cavity(&ops.jx, &id_c).scale_real(c.effective_drive());
    let coupling = (&(&jp * &b) + &(&jm * &b.adjoint())).scale_real(0.5 * c.g);
    let mut l = hamiltonian_part(&drive, basis)?
        + hamiltonian_part(&coupling, basis)?
        + dissipator(&b, basis)?.scale(c.gamma_p);
    if atoms == AtomBasis::Product4 {
        for (atom, rate) in [(1, c.gamma1), (2, c.gamma2)] {
            let s = tensor_with_cavity(&individual_lowering(atom)?, &id_c);
            l = l + dissipator(&s, basis)?.scale(rate);
        }
    }
    Ok(l)
}

/// Result of [`steady_state`].
#[derive(Debug, Clone)]
pub struct SteadyState {
    pub rho: DensityMatrix,
    /// `max |L vec(ρ)|` after normalization.
    pub residual: f64,
    /// Reported, not clipped.
    pub min_eigenvalue: f64,
}

fn solve_with_trace_row(l: &Superop, row: usize) -> Result<Vec<C64>> {
    let d = l.hilbert_dim();
    let n = d * d;
    let mut m = l.matrix.clone();
    for k in 0..n {
        m[(row, k)] = ZERO;
    }
    for i in 0..d {
        m[(row, i * d + i)] = ONE;
    }
    let mut rhs = vec![ZERO; n];
    rhs[row] = ONE;
    solve_linear(&m, &rhs)
}

/// Unique stationary state of a trace-preserving generator.
///
/// One diagonal row of `L` is replaced by the trace functional and the
/// resulting system is solved; a second solve with a different replaced row
/// must agree. A singular replaced system or disagreement means the
/// stationary space is degenerate.
pub fn steady_state(l: &Superop) -> Result<SteadyState> {
    let d = l.hilbert_dim();
    let rows = [0, (d - 1) * (d + 1)];
    let mut solutions = Vec::with_capacity(2);
    for &row in &rows {
        match solve_with_trace_row(l, row) {
            Ok(x) => solutions.push(x),
            Err(Error::Singular { pivot, .. }) => {
                return Err(Error::NonUniqueSteadyState(format!(
                    "trace-constrained system singular (pivot {pivot:e})"
                )))
            }
            Err(e) => return Err(e),
        }
    }
    let scale = solutions[0].iter().map(|z| z.norm()).fold(0.0, f64::max);
    let disagreement = solutions[0]
        .iter()
        .zip(&solutions[1])
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    if !disagreement.is_finite() || disagreement > UNIQUENESS_TOL * (1.0 + scale) {
        return Err(Error::NonUniqueSteadyState(format!(
            "solutions disagree by {disagreement:e}"
        )));
    }

    let raw = unvec(&solutions[0], d)?.hermitian_part();
    let tr = raw.trace().re;
    if !(tr.abs() > 0.0) || !tr.is_finite() {
        return Err(Error::Numerical(format!("steady state has trace {tr}")));
    }
    let mat = raw.scale_real(1.0 / tr);

    let residual = l
        .matrix
        .matvec(&vec(&mat))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if !(residual <= STEADY_RESIDUAL_MAX) {
        return Err(Error::Numerical(format!(
            "steady-state residual {residual:e}"
        )));
    }
    let min_eigenvalue = herm_eig(&mat)?.values[0];
    let rho = DensityMatrix::with_indefinite(mat, l.basis)?;
    Ok(SteadyState {
        rho,
        residual,
        min_eigenvalue,
    })
}

/// Steady state of a `Product4` generator within the triplet sector, embedded
/// back into `Product4`. Needed when the singlet is decoupled and the full
/// stationary space is degenerate.
pub fn triplet_steady_state(l: &Superop) -> Result<SteadyState> {
    let ss = steady_state(&l.restrict_to_triplet()?)?;
    let rho = ss.rho.to_product()?;
    Ok(SteadyState { rho, ..ss })
}

/// Time series from [`propagate`].
#[derive(Debug, Clone)]
pub struct Propagation {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// Step-size advisories; never fatal.
    pub warnings: Vec<String>,
}

impl Propagation {
    pub fn last(&self) -> &DensityMatrix {
        self.states.last().expect("at least the initial state")
    }
}

/// Step size above which [`propagate`] emits a warning.
pub fn recommended_dt(l: &Superop) -> f64 {
    0.01 / l.matrix.norm_inf().max(f64::MIN_POSITIVE)
}

struct Rk4<'a> {
    l: &'a CMat,
    k: [Vec<C64>; 4],
    tmp: Vec<C64>,
}

impl<'a> Rk4<'a> {
    fn new(l: &'a CMat) -> Self {
        let n = l.dim();
        Rk4 {
            l,
            k: std::array::from_fn(|_| vec![ZERO; n]),
            tmp: vec![ZERO; n],
        }
    }

    fn deriv(l: &CMat, x: &[C64], out: &mut [C64]) {
        let n = x.len();
        let m = l.as_slice();
        for (i, o) in out.iter_mut().enumerate() {
            *o = m[i * n..(i + 1) * n]
                .iter()
                .zip(x)
                .map(|(a, b)| a * b)
                .sum();
        }
    }

    fn step(&mut self, x: &mut [C64], h: f64) {
        let [k1, k2, k3, k4] = &mut self.k;
        Self::deriv(self.l, x, k1);
        for ((t, xi), ki) in self.tmp.iter_mut().zip(x.iter()).zip(k1.iter()) {
            *t = xi + ki * (0.5 * h);
        }
        Self::deriv(self.l, &self.tmp, k2);
        for ((t, xi), ki) in self.tmp.iter_mut().zip(x.iter()).zip(k2.iter()) {
            *t = xi + ki * (0.5 * h);
        }
        Self::deriv(self.l, &self.tmp, k3);
        for ((t, xi), ki) in self.tmp.iter_mut().zip(x.iter()).zip(k3.iter()) {
            *t = xi + ki * h;
        }
        Self::deriv(self.l, &self.tmp, k4);
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (h / 6.0);
        }
    }
}

/// Number of steps and the adjusted step that lands exactly on `t_final`.
pub(crate) fn step_grid(t_final: f64, dt: f64) -> Result<(usize, f64)> {
    if !(dt > 0.0) || !(t_final >= 0.0) || !t_final.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "need dt > 0 and finite t_final >= 0 (dt = {dt}, t_final = {t_final})"
        )));
    }
    let n = (t_final / dt - 1e-9).ceil().max(0.0) as usize;
    let h = if n == 0 { dt } else { t_final / n as f64 };
    Ok((n, h))
}

/// Classical RK4 on `vec(ρ)`, recording every `every`-th step plus the final
/// state. The step is shrunk slightly if needed to land on `t_final`.
pub fn propagate_sampled(
    l: &Superop,
    rho0: &DensityMatrix,
    t_final: f64,
    dt: f64,
    every: usize,
) -> Result<Propagation> {
    if rho0.basis() != l.basis() {
        return Err(Error::BasisMismatch(format!(
            "state in {:?}, generator in {:?}",
            rho0.basis(),
            l.basis()
        )));
    }
    let every = every.max(1);
    let (n_steps, h) = step_grid(t_final, dt)?;
    let mut warnings = Vec::new();
    let rec = recommended_dt(l);
    if h > rec {
        warnings.push(format!("dt = {h:e} exceeds the recommended {rec:e}"));
    }
    let d = l.hilbert_dim();
    let mut x = vec(rho0.mat());
    let mut rk = Rk4::new(&l.matrix);
    let mut times = vec![0.0];
    let mut states = vec![rho0.clone()];
    for step in 1..=n_steps {
        rk.step(&mut x, h);
        if step % every == 0 || step == n_steps {
            let mat = unvec(&x, d)?;
            times.push(step as f64 * h);
            states.push(DensityMatrix::with_indefinite(mat, l.basis())?);
        }
    }
    Ok(Propagation {
        times,
        states,
        warnings,
    })
}

/// [`propagate_sampled`] recording every step.
pub fn propagate(l: &Superop, rho0: &DensityMatrix, t_final: f64, dt: f64) -> Result<Propagation> {
    propagate_sampled(l, rho0, t_final, dt, 1)
}

/// Reduced atomic state `Tr_cavity ν`.
pub fn partial_trace_cavity(nu: &DensityMatrix) -> Result<DensityMatrix> {
    let BasisLabel::CavityJoint { atoms, n_fock } = nu.basis() else {
        return Err(Error::BasisMismatch(format!(
            "partial trace needs a joint state, got {:?}",
            nu.basis()
        )));
    };
    let da = atoms.dim();
    let m = nu.mat();
    let mut out = CMat::zeros(da);
    for a in 0..da {
        for b in 0..da {
            out[(a, b)] = (0..n_fock)
                .map(|n| m[(a * n_fock + n, b * n_fock + n)])
                .sum();
        }
    }
    DensityMatrix::with_indefinite(out, atoms.into())
}

/// Photon-number distribution of a joint state.
pub fn photon_distribution(nu: &DensityMatrix) -> Result<Vec<f64>> {
    let BasisLabel::CavityJoint { atoms, n_fock } = nu.basis() else {
        return Err(Error::BasisMismatch(
            "photon distribution needs a joint state".into(),
        ));
    };
    let m = nu.mat();
    Ok((0..n_fock)
        .map(|n| {
            (0..atoms.dim())
                .map(|a| m[(a * n_fock + n, a * n_fock + n)].re)
                .sum()
        })
        .collect())
}

/// `⟨b†b⟩`
pub fn mean_photon_number(nu: &DensityMatrix) -> Result<f64> {
    Ok(photon_distribution(nu)?
        .iter()
        .enumerate()
        .map(|(n, p)| n as f64 * p)
        .sum())
}

/// Population of the highest retained Fock level; truncation is harmless
/// when this is tiny.
pub fn top_fock_population(nu: &DensityMatrix) -> Result<f64> {
    Ok(*photon_distribution(nu)?.last().expect("n_fock >= 1"))
}

/// Cavity model against its adiabatically eliminated reduction at one
/// `γ_p / g` ratio.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct AdiabaticRow {
    pub ratio: f64,
    /// Trace distance between the reduced cavity-model steady state and the
    /// steady state of the eliminated generator.
    pub trace_distance: f64,
    pub mean_photon_number: f64,
    pub top_fock_population: f64,
}

impl AdiabaticRow {
    pub const CSV_HEADER: &'static str =
        "ratio,trace_distance,mean_photon_number,top_fock_population";
}

/// Steady states of the cavity model with `g = 1`, `γ_p = ratio` and the drive
/// set so the eliminated model has `α = alpha` (in units of `g²/γ_p`),
/// compared with the eliminated steady state.
pub fn adiabatic_comparison(
    ratios: &[f64],
    alpha: f64,
    n_fock: usize,
) -> Result<Vec<AdiabaticRow>> {
    ratios
        .iter()
        .map(|&ratio| {
            if !(ratio > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "ratio {ratio} must be positive"
                )));
            }
            let (g, gamma_p) = (1.0, ratio);
            let c = CavityParams::with_effective_drive(g, gamma_p, alpha * g * g / gamma_p)?;
            let nu = steady_state(&cavity_generator(&c, n_fock)?)?.rho;
            let reduced = partial_trace_cavity(&nu)?;
            let eliminated =
                steady_state(&unmodulated_generator(&c.eliminated(), BasisLabel::Dicke3)?)?.rho;
            Ok(AdiabaticRow {
                ratio,
                trace_distance: trace_distance(reduced.mat(), eliminated.mat())?,
                mean_photon_number: mean_photon_number(&nu)?,
                top_fock_population: top_fock_population(&nu)?,
            })
        })
        .collect()
}

pub fn write_adiabatic_csv<W: std::io::Write>(
    rows: &[AdiabaticRow],
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "{}", AdiabaticRow::CSV_HEADER)?;
    for r in rows {
        writeln!(
            w,
            "{}",
            crate::format::row(&[
                r.ratio,
                r.trace_distance,
                r.mean_photon_number,
                r.top_fock_population
            ])
        )?;
    }
    Ok(())
}
