//! Conditioned homodyne trajectories: integration of the stochastic master
//! equation with and without photocurrent feedback, the simulated
//! photocurrent, and ensemble averages.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::format;
use crate::generators::{
    dissipator, feedback_drift_generator, hamiltonian_part, step_grid, unmodulated_generator,
    Superop,
};
use crate::linalg::{unvec, vec, CMat, I, ZERO};
use crate::operators::{collective_ops, individual_lowering, BasisLabel};
use crate::params::ModelParams;
use crate::state::DensityMatrix;
use num_complex::Complex64 as C64;

/// Largest trace correction tolerated in a single step.
pub const MAX_TRACE_CORRECTION: f64 = 0.05;
pub const DEFAULT_DT: f64 = 1e-3;
/// Trajectories per ensemble work unit. Fixed so that the summation order,
/// and therefore the result, does not depend on the number of workers.
pub const ENSEMBLE_CHUNK: usize = 16;

/// Seeded stream of standard normal samples.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

/// Wiener increment `√dt · z`.
pub fn gaussian_increment(rng: &mut RngStream, dt: f64) -> f64 {
    dt.sqrt() * rng.normal()
}

/// Which stochastic master equation is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Unravelling {
    /// Drift from the feedback generator, measurement operator
    /// `−i√γ J⁻ − iλ Jx`.
    Feedback,
    /// Drift `−i[αJx, ρ] + γD[J⁻]ρ`, measurement operator `√γ J⁻`.
    NoFeedback,
}

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// `ρ' = ρ + dt·Lρ + dW·𝓗[M]ρ`, symmetrized and renormalized.
    #[default]
    EulerMaruyama,
    /// `ρ' ∝ KρK† + dt Σ_j L_j ρ L_j†` with `K = I − (iH + ½M†M + ½Σ L_j†L_j)dt + M dY`
    /// and `dY = dW + ⟨M + M†⟩dt`. Same mean dynamics to first order; keeps
    /// pure states pure when there are no extra jump operators.
    Kraus,
}

/// Precomputed single-step map on `vec(ρ)` (column-stacked), reused across
/// steps without allocating.
#[derive(Debug, Clone)]
pub struct Stepper {
    d: usize,
    basis: BasisLabel,
    dt: f64,
    sqrt_gamma: f64,
    inv_sqrt_eta: f64,
    /// `I + dt·L`, row-major over `vec` indices.
    euler: Vec<C64>,
    scheme: Scheme,
    /// Measurement operator, row-major.
    m: Vec<C64>,
    /// `I − (iH + ½M†M + ½Σ L_j†L_j)dt`, row-major. Kraus scheme only.
    k0: Vec<C64>,
    /// `√(γ_j dt) σ_j`, row-major. Kraus scheme only.
    jumps: Vec<Vec<C64>>,
    k: Vec<C64>,
    /// `Jx`, row-major.
    jx: Vec<C64>,
    next: Vec<C64>,
    m_rho: Vec<C64>,
}

impl Stepper {
    pub fn new(p: &ModelParams, kind: Unravelling, basis: BasisLabel, dt: f64) -> Result<Self> {
        Self::with_scheme(p, kind, basis, dt, Scheme::EulerMaruyama)
    }

    /// The Kraus scheme requires the drift to be exactly
    /// `−i[H, ·] + D[M] + Σ D[L_j]`; parameter sets where the printed
    /// measurement operator and drift disagree (feedback with γ ≠ 1) are
    /// rejected.
    pub fn with_scheme(
        p: &ModelParams,
        kind: Unravelling,
        basis: BasisLabel,
        dt: f64,
        scheme: Scheme,
    ) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "dt = {dt} must be positive"
            )));
        }
        let ops = collective_ops(basis)?;
        let sg = p.gamma.sqrt();
        let (l, m) = match kind {
            Unravelling::Feedback => (
                feedback_drift_generator(p, basis)?,
                &ops.jminus.scale(-I * sg) + &ops.jx.scale(-I * p.lambda),
            ),
            Unravelling::NoFeedback => {
                (unmodulated_generator(p, basis)?, ops.jminus.scale_real(sg))
            }
        };
        let big = l.matrix().dim();
        let mut euler: Vec<C64> = l.matrix().as_slice().iter().map(|x| x * dt).collect();
        for k in 0..big {
            euler[k * big + k] += 1.0;
        }
        let d = basis.dim();
        let (k0, jumps) = match scheme {
            Scheme::EulerMaruyama => (Vec::new(), Vec::new()),
            Scheme::Kraus => kraus_parts(p, kind, basis, &l, &m, dt)?,
        };
        Ok(Self {
            d,
            basis,
            dt,
            scheme,
            k0,
            jumps,
            k: vec![ZERO; d * d],
            sqrt_gamma: sg,
            inv_sqrt_eta: 1.0 / p.eta.sqrt(),
            euler,
            m: m.as_slice().to_vec(),
            jx: ops.jx.as_slice().to_vec(),
            next: vec![ZERO; big],
            m_rho: vec![ZERO; big],
        })
    }

    pub fn basis(&self) -> BasisLabel {
        self.basis
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances `v = vec(ρ)` in place by one step with Wiener increment `dw`,
    /// returning the trace correction `|Tr ρ' − 1|` that was removed.
    pub fn step(&mut self, v: &mut [C64], dw: f64) -> Result<f64> {
        match self.scheme {
            Scheme::EulerMaruyama => self.euler_step(v, dw),
            Scheme::Kraus => self.kraus_step(v, dw),
        }
    }

    fn euler_step(&mut self, v: &mut [C64], dw: f64) -> Result<f64> {
        let d = self.d;
        let big = d * d;
        debug_assert_eq!(v.len(), big);
        for (r, out) in self.next.iter_mut().enumerate() {
            let row = &self.euler[r * big..(r + 1) * big];
            *out = row.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
        }
        // A = Mρ, stored column-major like ρ.
        let mut tr_a = 0.0;
        for j in 0..d {
            for i in 0..d {
                let mut s = ZERO;
                for k in 0..d {
                    s += self.m[i * d + k] * v[k + j * d];
                }
                self.m_rho[i + j * d] = s;
            }
            tr_a += self.m_rho[j + j * d].re;
        }
        // 𝓗[M]ρ = A + A† − 2 Re(Tr A) ρ
        for j in 0..d {
            for i in 0..d {
                let h = self.m_rho[i + j * d] + self.m_rho[j + i * d].conj()
                    - v[i + j * d] * (2.0 * tr_a);
                self.next[i + j * d] += h * dw;
            }
        }
        let mut tr = 0.0;
        for i in 0..d {
            for j in i + 1..d {
                let avg = (self.next[i + j * d] + self.next[j + i * d].conj()) * 0.5;
                self.next[i + j * d] = avg;
                self.next[j + i * d] = avg.conj();
            }
            let diag = &mut self.next[i + i * d];
            diag.im = 0.0;
            tr += diag.re;
        }
        self.finish(v, tr, 1.0)
    }

    fn kraus_step(&mut self, v: &mut [C64], dw: f64) -> Result<f64> {
        let d = self.d;
        // ⟨M + M†⟩ = 2 Re Tr(Mρ)
        let mut mean = 0.0;
        for i in 0..d {
            for k in 0..d {
                mean += 2.0 * (self.m[i * d + k] * v[k + i * d]).re;
            }
        }
        let dy = dw + mean * self.dt;
        for (k, (a, b)) in self.k.iter_mut().zip(self.k0.iter().zip(&self.m)) {
            *k = a + b * dy;
        }
        for x in self.next.iter_mut() {
            *x = ZERO;
        }
        sandwich_add(d, &self.k, v, &mut self.m_rho, &mut self.next);
        for jump in &self.jumps {
            sandwich_add(d, jump, v, &mut self.m_rho, &mut self.next);
        }
        let mut tr = 0.0;
        for i in 0..d {
            for j in i + 1..d {
                let avg = (self.next[i + j * d] + self.next[j + i * d].conj()) * 0.5;
                self.next[i + j * d] = avg;
                self.next[j + i * d] = avg.conj();
            }
            let diag = &mut self.next[i + i * d];
            diag.im = 0.0;
            tr += diag.re;
        }
        self.finish(v, tr, 1.0 + dy * mean)
    }

    /// Divides by `tr`, reporting `|tr − expected|` as the correction.
    fn finish(&mut self, v: &mut [C64], tr: f64, expected: f64) -> Result<f64> {
        let correction = (tr - expected).abs();
        if !(correction <= MAX_TRACE_CORRECTION) || !(tr > 0.0) {
            return Err(Error::StepSize {
                correction,
                dt: self.dt,
            });
        }
        let inv = 1.0 / tr;
        for (x, n) in v.iter_mut().zip(&self.next) {
            *x = n * inv;
        }
        Ok(correction)
    }

    /// `√γ ⟨Jx⟩ + (dW/dt)/√η` in the state `v = vec(ρ)`.
    pub fn photocurrent(&self, v: &[C64], dw: f64) -> f64 {
        let d = self.d;
        let mut jx = 0.0;
        for i in 0..d {
            for j in 0..d {
                jx += (self.jx[i * d + j] * v[j + i * d]).re;
            }
        }
        self.sqrt_gamma * jx + dw / self.dt * self.inv_sqrt_eta
    }
}

/// `out += A ρ A†` on column-major `ρ` with row-major `A`; `scratch` holds `Aρ`.
fn sandwich_add(d: usize, a: &[C64], v: &[C64], scratch: &mut [C64], out: &mut [C64]) {
    for j in 0..d {
        for i in 0..d {
            let mut s = ZERO;
            for k in 0..d {
                s += a[i * d + k] * v[k + j * d];
            }
            scratch[i + j * d] = s;
        }
    }
    for j in 0..d {
        for i in 0..d {
            let mut s = ZERO;
            for k in 0..d {
                s += scratch[i + k * d] * a[j * d + k].conj();
            }
            out[i + j * d] += s;
        }
    }
}

/// Tolerance for matching the Kraus decomposition against the drift generator.
const KRAUS_MATCH_TOL: f64 = 1e-12;

fn kraus_parts(
    p: &ModelParams,
    kind: Unravelling,
    basis: BasisLabel,
    drift: &Superop,
    m: &CMat,
    dt: f64,
) -> Result<(Vec<C64>, Vec<Vec<C64>>)> {
    let ops = collective_ops(basis)?;
    let mut h = ops.jx.scale_real(p.alpha);
    if kind == Unravelling::Feedback && p.lambda != 0.0 {
        // −i[F, cρ + ρc†] + D[c] + D[F] = −i[(i/2)(c†F − Fc), ·] + D[c + F]
        let f = ops.jx.scale_real(p.lambda);
        let jm = &ops.jminus;
        let jp = &ops.jplus;
        h = &h + &(&(jp * &f) - &(&f * jm)).scale(I * 0.5);
    }
    let mut jumps = Vec::new();
    if p.has_individual_decay() {
        for (atom, rate) in [(1, p.gamma1), (2, p.gamma2)] {
            if rate > 0.0 {
                jumps.push(individual_lowering(atom)?.scale_real(rate.sqrt()));
            }
        }
    }
    let mut rebuilt = hamiltonian_part(&h, basis)? + dissipator(m, basis)?;
    for j in &jumps {
        rebuilt = rebuilt + dissipator(j, basis)?;
    }
    let mismatch = (rebuilt.matrix() - drift.matrix()).max_abs();
    if mismatch > KRAUS_MATCH_TOL * drift.matrix().max_abs().max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "Kraus scheme: measurement operator does not unravel the drift (mismatch {mismatch:e})"
        )));
    }
    let d = basis.dim();
    let mut g = &h.scale(-I) - &(&m.adjoint() * m).scale_real(0.5);
    for j in &jumps {
        g = &g - &(&j.adjoint() * j).scale_real(0.5);
    }
    let k0 = &CMat::identity(d) + &g.scale_real(dt);
    let sdt = dt.sqrt();
    Ok((
        k0.as_slice().to_vec(),
        jumps
            .iter()
            .map(|j| j.scale_real(sdt).as_slice().to_vec())
            .collect(),
    ))
}

fn single_step(
    rho: &DensityMatrix,
    p: &ModelParams,
    kind: Unravelling,
    dt: f64,
    dw: f64,
) -> Result<(DensityMatrix, f64)> {
    let mut stepper = Stepper::new(p, kind, rho.basis(), dt)?;
    let mut v = vec(rho.mat());
    let corr = stepper.step(&mut v, dw)?;
    Ok((
        DensityMatrix::with_indefinite(unvec(&v, rho.dim())?, rho.basis())?,
        corr,
    ))
}

/// One Euler–Maruyama step of the feedback SME. Returns the new state and the
/// trace correction applied. Builds a [`Stepper`] per call; loops should hold
/// one instead.
pub fn sme_step_feedback(
    rho: &DensityMatrix,
    p: &ModelParams,
    dt: f64,
    dw: f64,
) -> Result<(DensityMatrix, f64)> {
    single_step(rho, p, Unravelling::Feedback, dt, dw)
}

/// One Euler–Maruyama step of the SME without feedback.
pub fn sme_step_nofeedback(
    rho: &DensityMatrix,
    p: &ModelParams,
    dt: f64,
    dw: f64,
) -> Result<(DensityMatrix, f64)> {
    single_step(rho, p, Unravelling::NoFeedback, dt, dw)
}

/// `I = √γ⟨Jx⟩ + (dW/dt)/√η`.
pub fn photocurrent_sample(rho: &DensityMatrix, p: &ModelParams, dt: f64, dw: f64) -> Result<f64> {
    let jx = collective_ops(rho.basis())?.jx;
    Ok(p.gamma.sqrt() * rho.expectation(&jx).re + dw / dt / p.eta.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TrajectoryOptions {
    pub kind: Unravelling,
    pub scheme: Scheme,
    pub t_final: f64,
    pub dt: f64,
    pub seed: u64,
    /// Steps between recorded states; the final state is always recorded.
    pub record_every: usize,
}

impl TrajectoryOptions {
    pub fn new(kind: Unravelling, t_final: f64, dt: f64, seed: u64) -> Self {
        Self {
            kind,
            scheme: Scheme::EulerMaruyama,
            t_final,
            dt,
            seed,
            record_every: 1,
        }
    }
}

/// One conditioned trajectory. Entry `k` of `photocurrent`, `dw` and
/// `norm_corrections` describes the interval from `times[k]` to
/// `times[k + 1]`: the summed Wiener increment, the mean photocurrent and the
/// largest per-step trace correction.
#[derive(Debug, Clone, Default)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub photocurrent: Vec<f64>,
    pub dw: Vec<f64>,
    pub norm_corrections: Vec<f64>,
    pub min_eigenvalue_track: Vec<f64>,
}

#[derive(Debug, thiserror::Error)]
#[error("trajectory aborted at t = {time}: {source}")]
pub struct TrajectoryFailure {
    pub time: f64,
    #[source]
    pub source: Error,
    pub partial: Box<TrajectoryRecord>,
}

impl TrajectoryRecord {
    fn push_state(&mut self, t: f64, v: &[C64], basis: BasisLabel) -> Result<()> {
        let rho = DensityMatrix::with_indefinite(unvec(v, basis.dim())?, basis)?;
        self.min_eigenvalue_track.push(rho.min_eigenvalue()?);
        self.times.push(t);
        self.states.push(rho);
        Ok(())
    }

    pub fn final_state(&self) -> Option<&DensityMatrix> {
        self.states.last()
    }

    /// One row per recorded state: `t, I, dW, trace_correction, min_eig`,
    /// where the interval columns are NaN on the last row. With
    /// `with_state`, the real and imaginary parts of every `ρ_ij` follow in
    /// row-major order.
    pub fn write_csv<W: Write>(&self, mut w: W, with_state: bool) -> io::Result<()> {
        let mut header = String::from("t,I,dW,trace_correction,min_eig");
        if with_state {
            if let Some(rho) = self.states.first() {
                let d = rho.dim();
                for i in 0..d {
                    for j in 0..d {
                        header.push_str(&format!(",rho{i}{j}_re,rho{i}{j}_im"));
                    }
                }
            }
        }
        writeln!(w, "{header}")?;
        for (k, (t, rho)) in self.times.iter().zip(&self.states).enumerate() {
            let interval = |v: &Vec<f64>| v.get(k).copied().unwrap_or(f64::NAN);
            let mut line = format::row(&[
                *t,
                interval(&self.photocurrent),
                interval(&self.dw),
                interval(&self.norm_corrections),
                self.min_eigenvalue_track[k],
            ]);
            if with_state {
                for x in rho.mat().as_slice() {
                    line.push(',');
                    line.push_str(&format::row(&[x.re, x.im]));
                }
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

/// Integrates one trajectory from `rho0`. The noise is drawn from
/// `RngStream::new(opts.seed)`, so equal seeds give identical records.
pub fn run_trajectory(
    rho0: &DensityMatrix,
    p: &ModelParams,
    opts: &TrajectoryOptions,
) -> std::result::Result<TrajectoryRecord, TrajectoryFailure> {
    let mut rec = TrajectoryRecord::default();
    let fail = |time: f64, source: Error, rec: TrajectoryRecord| TrajectoryFailure {
        time,
        source,
        partial: Box::new(rec),
    };
    let setup = || -> Result<_> {
        if opts.record_every == 0 {
            return Err(Error::InvalidParameter(
                "record_every must be at least 1".into(),
            ));
        }
        let (n, h) = step_grid(opts.t_final, opts.dt)?;
        let stepper = Stepper::with_scheme(p, opts.kind, rho0.basis(), h, opts.scheme)?;
        Ok((n, h, stepper))
    };
    let (n, h, mut stepper) = match setup() {
        Ok(s) => s,
        Err(e) => return Err(fail(0.0, e, rec)),
    };
    let basis = rho0.basis();
    let mut v = vec(rho0.mat());
    if let Err(e) = rec.push_state(0.0, &v, basis) {
        return Err(fail(0.0, e, rec));
    }
    let mut rng = RngStream::new(opts.seed);
    let (mut dw_sum, mut i_sum, mut corr_max, mut count) = (0.0, 0.0, 0.0f64, 0usize);
    for k in 0..n {
        let dw = gaussian_increment(&mut rng, h);
        i_sum += stepper.photocurrent(&v, dw);
        dw_sum += dw;
        let t = (k + 1) as f64 * h;
        match stepper.step(&mut v, dw) {
            Ok(c) => corr_max = corr_max.max(c),
            Err(e) => return Err(fail(t, e, rec)),
        }
        count += 1;
        if count == opts.record_every || k + 1 == n {
            rec.photocurrent.push(i_sum / count as f64);
            rec.dw.push(dw_sum);
            rec.norm_corrections.push(corr_max);
            if let Err(e) = rec.push_state(t, &v, basis) {
                return Err(fail(t, e, rec));
            }
            (dw_sum, i_sum, corr_max, count) = (0.0, 0.0, 0.0, 0);
        }
    }
    Ok(rec)
}

/// Ensemble-mean state over trajectories seeded `seed, seed + 1, …`.
#[derive(Debug, Clone)]
pub struct EnsembleMean {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// Trajectories that reached `t_final` and enter the mean.
    pub trajectories: usize,
    /// Seeds of trajectories aborted by a step error. They are left out of
    /// the mean at every sample time.
    pub failed_seeds: Vec<u64>,
    pub max_trace_correction: f64,
}

impl EnsembleMean {
    pub fn final_state(&self) -> &DensityMatrix {
        self.states
            .last()
            .expect("ensemble has at least one sample")
    }
}

struct ChunkSum {
    sums: Vec<Vec<C64>>,
    completed: usize,
    failed: Vec<u64>,
    max_corr: f64,
}

fn run_chunk(
    rho0: &[C64],
    stepper: &Stepper,
    n: usize,
    h: f64,
    seeds: std::ops::Range<u64>,
    samples: &[usize],
) -> ChunkSum {
    let mut stepper = stepper.clone();
    let mut sums = vec![vec![ZERO; rho0.len()]; samples.len()];
    let mut own = sums.clone();
    let mut out = ChunkSum {
        sums: Vec::new(),
        completed: 0,
        failed: Vec::new(),
        max_corr: 0.0,
    };
    let mut v = rho0.to_vec();
    'seeds: for seed in seeds {
        v.copy_from_slice(rho0);
        let mut rng = RngStream::new(seed);
        let mut next_sample = 0;
        let mut corr = 0.0f64;
        for k in 0..=n {
            if next_sample < samples.len() && samples[next_sample] == k {
                own[next_sample].copy_from_slice(&v);
                next_sample += 1;
            }
            if k < n {
                let dw = gaussian_increment(&mut rng, h);
                match stepper.step(&mut v, dw) {
                    Ok(c) => corr = corr.max(c),
                    Err(_) => {
                        out.failed.push(seed);
                        continue 'seeds;
                    }
                }
            }
        }
        for (total, x) in sums.iter_mut().zip(&own) {
            for (a, b) in total.iter_mut().zip(x) {
                *a += b;
            }
        }
        out.completed += 1;
        out.max_corr = out.max_corr.max(corr);
    }
    out.sums = sums;
    out
}

/// Mean of `n_traj` conditioned states, recorded every `opts.record_every`
/// steps and at `t_final`. Trajectories that abort are excluded and listed;
/// it is an error if none completes. Chunks of [`ENSEMBLE_CHUNK`] trajectories run on
/// the current rayon pool and are summed in index order, so the result is
/// bit-identical for any worker count.
pub fn ensemble_mean(
    rho0: &DensityMatrix,
    p: &ModelParams,
    opts: &TrajectoryOptions,
    n_traj: usize,
) -> Result<EnsembleMean> {
    if n_traj == 0 {
        return Err(Error::InvalidParameter(
            "ensemble needs at least one trajectory".into(),
        ));
    }
    if opts.record_every == 0 {
        return Err(Error::InvalidParameter(
            "record_every must be at least 1".into(),
        ));
    }
    let (n, h) = step_grid(opts.t_final, opts.dt)?;
    let stepper = Stepper::with_scheme(p, opts.kind, rho0.basis(), h, opts.scheme)?;
    let mut samples: Vec<usize> = (0..=n).step_by(opts.record_every).collect();
    if *samples.last().unwrap() != n {
        samples.push(n);
    }
    let v0 = vec(rho0.mat());
    let n_chunks = n_traj.div_ceil(ENSEMBLE_CHUNK);
    let chunks: Vec<ChunkSum> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = (c * ENSEMBLE_CHUNK) as u64;
            let hi = ((c + 1) * ENSEMBLE_CHUNK).min(n_traj) as u64;
            let seeds = opts.seed.wrapping_add(lo)..opts.seed.wrapping_add(hi);
            run_chunk(&v0, &stepper, n, h, seeds, &samples)
        })
        .collect();
    let mut total = vec![vec![ZERO; v0.len()]; samples.len()];
    let mut max_corr = 0.0f64;
    let mut completed = 0;
    let mut failed_seeds = Vec::new();
    for chunk in &chunks {
        completed += chunk.completed;
        failed_seeds.extend_from_slice(&chunk.failed);
        for (t, s) in total.iter_mut().zip(&chunk.sums) {
            for (a, b) in t.iter_mut().zip(s) {
                *a += b;
            }
        }
        max_corr = max_corr.max(chunk.max_corr);
    }
    if completed == 0 {
        return Err(Error::Numerical(format!(
            "all {n_traj} trajectories aborted, first seed {}",
            opts.seed
        )));
    }
    let d = rho0.dim();
    let states = total
        .into_iter()
        .map(|s| {
            let m: Vec<C64> = s.iter().map(|x| x / completed as f64).collect();
            DensityMatrix::with_indefinite(unvec(&m, d)?.hermitian_part(), rho0.basis())
        })
        .collect::<Result<_>>()?;
    Ok(EnsembleMean {
        times: samples.iter().map(|&k| k as f64 * h).collect(),
        states,
        trajectories: completed,
        failed_seeds,
        max_trace_correction: max_corr,
    })
}
