use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::Args;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use qfb::bloch::{self, experimental};
use qfb::generators::write_adiabatic_csv;
use qfb::metrics::grid;
use qfb::operators::kets;
use qfb::qfunc::{DEFAULT_N_PHI, DEFAULT_N_THETA};
use qfb::{
    adiabatic_comparison, collective_ops, concurrence, ensemble_mean, feedback_drift_generator,
    propagate_sampled, purity_r2, q_grid, run_trajectory, steady_state, sweep, trace_distance,
    unmodulated_generator, BasisLabel, DensityMatrix, ModelParams, Scheme, TrajectoryOptions,
    TrajectoryRecord, Unravelling, C64,
};

use crate::config::{NumList, Resolver};
use crate::{CliError, Command, Common};

#[derive(Debug, Args, Default)]
pub struct SteadyArgs {
    /// Individual decay rate of atom 1 [default: 0]
    #[arg(long)]
    gamma1: Option<f64>,
    /// Individual decay rate of atom 2 [default: 0]
    #[arg(long)]
    gamma2: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct SweepArgs {
    #[arg(long)]
    gamma1: Option<f64>,
    #[arg(long)]
    gamma2: Option<f64>,
    /// [default: -1]
    #[arg(long, allow_negative_numbers = true)]
    alpha_min: Option<f64>,
    /// [default: 1]
    #[arg(long, allow_negative_numbers = true)]
    alpha_max: Option<f64>,
    /// [default: 0.02]
    #[arg(long)]
    alpha_step: Option<f64>,
    /// [default: -1.5]
    #[arg(long, allow_negative_numbers = true)]
    lambda_min: Option<f64>,
    /// [default: 0.5]
    #[arg(long, allow_negative_numbers = true)]
    lambda_max: Option<f64>,
    /// [default: 0.02]
    #[arg(long)]
    lambda_step: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct TrajArgs {
    /// [default: 20]
    #[arg(long)]
    t_final: Option<f64>,
    /// [default: 0.001]
    #[arg(long)]
    dt: Option<f64>,
    /// Ensemble size [default: 1]
    #[arg(long)]
    trajectories: Option<usize>,
    /// Steps between samples [default: 100]
    #[arg(long)]
    record_every: Option<usize>,
    /// feedback | no-feedback [default: feedback]
    #[arg(long)]
    unravelling: Option<String>,
    /// euler | kraus [default: euler]
    #[arg(long)]
    scheme: Option<String>,
    /// gg | ee | identity | steady [default: gg]
    #[arg(long)]
    initial: Option<String>,
    /// Also write traj_<seed>.csv for every trajectory
    #[arg(long)]
    write_trajectories: Option<bool>,
}

#[derive(Debug, Args, Default)]
pub struct QfuncArgs {
    /// gg | ee | psi-plus | bell-psi-plus | phi-plus | phi-minus | identity | steady [default: steady]
    #[arg(long)]
    state: Option<String>,
    /// [default: 181]
    #[arg(long)]
    n_theta: Option<usize>,
    /// [default: 360]
    #[arg(long)]
    n_phi: Option<usize>,
    /// Allowed deviation of the normalization from 1 [default: 1e-4]
    #[arg(long)]
    norm_tol: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct ValidateArgs {
    /// Spacing of the alpha, lambda grid on [-1, 1] [default: 0.25]
    #[arg(long)]
    grid_step: Option<f64>,
    /// Cavity decay over coupling [default: 10,30,100]
    #[arg(long)]
    ratios: Option<NumList>,
    /// Fock-space truncation [default: 6]
    #[arg(long)]
    n_fock: Option<usize>,
    /// Also compare against the trial density-matrix mapping
    #[arg(long)]
    experimental_mapping: Option<bool>,
}

pub fn dispatch(cmd: Command, common: &Common, mut res: Resolver) -> Result<(), CliError> {
    match cmd {
        Command::Steady(a) => steady(a, common, &mut res),
        Command::Sweep(a) => run_sweep(a, common, &mut res),
        Command::Traj(a) => traj(a, common, &mut res),
        Command::Qfunc(a) => qfunc(a, common, &mut res),
        Command::Validate(a) => validate(a, common, &mut res),
    }
}

/// γ, η and the optional individual rates; α and λ are left at zero.
fn base_params(
    common: &Common,
    res: &mut Resolver,
    decay: Option<(Option<f64>, Option<f64>)>,
) -> Result<ModelParams, CliError> {
    let gamma = res.get("gamma", common.gamma, Some(1.0))?;
    let eta = res.get("eta", common.eta, Some(1.0))?;
    let mut p = ModelParams::new(0.0, 0.0).with_gamma(gamma).with_eta(eta);
    if let Some((g1, g2)) = decay {
        let g1 = res.get("gamma1", g1, Some(0.0))?;
        let g2 = res.get("gamma2", g2, Some(0.0))?;
        p = p.with_individual_decay(g1, g2);
    }
    Ok(p)
}

fn point_params(
    common: &Common,
    res: &mut Resolver,
    base: ModelParams,
) -> Result<ModelParams, CliError> {
    let alpha = res.get("alpha", common.alpha, Some(0.4))?;
    let lambda = res.get("lambda", common.lambda, Some(-0.8))?;
    let p = ModelParams {
        alpha,
        lambda,
        ..base
    };
    p.validate()?;
    Ok(p)
}

fn basis_for(p: &ModelParams) -> BasisLabel {
    if p.has_individual_decay() {
        BasisLabel::Product4
    } else {
        BasisLabel::Dicke3
    }
}

/// Creates the output directory and writes the config echo.
fn prepare_out(common: &Common, res: &mut Resolver) -> Result<PathBuf, CliError> {
    let out: String = res.get("out", common.out.clone(), Some("out".to_string()))?;
    let dir = PathBuf::from(out);
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("config.txt"), res.render())?;
    Ok(dir)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn or_nan(x: qfb::Result<f64>) -> f64 {
    x.unwrap_or(f64::NAN)
}

fn steady(a: SteadyArgs, common: &Common, res: &mut Resolver) -> Result<(), CliError> {
    let base = base_params(common, res, Some((a.gamma1, a.gamma2)))?;
    let p = point_params(common, res, base)?;
    let dir = prepare_out(common, res)?;
    let ss = steady_state(&feedback_drift_generator(&p, basis_for(&p))?)?;
    let c = concurrence(&ss.rho)?;
    let r2 = purity_r2(&ss.rho)?;
    write_json(
        &dir,
        "steady.json",
        &json!({
            "params": p,
            "rho": ss.rho,
            "concurrence": c,
            "r2": r2,
            "residual": ss.residual,
            "min_eig": ss.min_eigenvalue,
        }),
    )?;
    println!(
        "concurrence = {c:.6}  r2 = {r2:.6}  residual = {:.3e}",
        ss.residual
    );
    Ok(())
}

fn run_sweep(a: SweepArgs, common: &Common, res: &mut Resolver) -> Result<(), CliError> {
    let base = base_params(common, res, Some((a.gamma1, a.gamma2)))?;
    // A fixed alpha or lambda collapses that axis to one point.
    let alphas = match res.get_opt("alpha", common.alpha)? {
        Some(x) => vec![x],
        None => grid(
            res.get("alpha_min", a.alpha_min, Some(-1.0))?,
            res.get("alpha_max", a.alpha_max, Some(1.0))?,
            res.get("alpha_step", a.alpha_step, Some(0.02))?,
        )?,
    };
    let lambdas = match res.get_opt("lambda", common.lambda)? {
        Some(x) => vec![x],
        None => grid(
            res.get("lambda_min", a.lambda_min, Some(-1.5))?,
            res.get("lambda_max", a.lambda_max, Some(0.5))?,
            res.get("lambda_step", a.lambda_step, Some(0.02))?,
        )?,
    };
    base.validate()?;
    let dir = prepare_out(common, res)?;
    let s = sweep(&alphas, &lambdas, &base)?;
    let mut w = create(&dir, "sweep.csv")?;
    s.write_csv(&mut w)?;
    w.flush()?;
    let summary = s.summary();
    write_json(&dir, "summary.json", &summary)?;
    if summary.failed == summary.points {
        return Err(CliError::Numerical(format!(
            "all {} sweep points failed",
            summary.points
        )));
    }
    if let Some(best) = &summary.argmax {
        println!(
            "max concurrence {:.6} at alpha = {}, lambda = {} ({} points, {} failed)",
            best.concurrence, best.alpha, best.lambda, summary.points, summary.failed
        );
    }
    Ok(())
}

fn initial_state(
    name: &str,
    basis: BasisLabel,
    p: &ModelParams,
) -> Result<DensityMatrix, CliError> {
    let product = basis == BasisLabel::Product4;
    Ok(match name {
        "gg" if product => DensityMatrix::pure(&kets::gg(), basis)?,
        "ee" if product => DensityMatrix::pure(&kets::ee(), basis)?,
        "gg" => DensityMatrix::basis_state(2, basis)?,
        "ee" => DensityMatrix::basis_state(0, basis)?,
        "identity" => DensityMatrix::maximally_mixed(basis),
        "steady" => steady_state(&feedback_drift_generator(p, basis)?)?.rho,
        other => return Err(CliError::Usage(format!("unknown initial state '{other}'"))),
    })
}

fn jx_mean(rho: &DensityMatrix) -> qfb::Result<f64> {
    Ok(rho.expectation(&collective_ops(rho.basis())?.jx).re)
}

/// Time-averaged photocurrent over the second half of the record.
fn late_photocurrent_mean(rec: &TrajectoryRecord, t_final: f64) -> f64 {
    let start = 0.5 * t_final;
    let (mut sum, mut span) = (0.0, 0.0);
    for (k, i) in rec.photocurrent.iter().enumerate() {
        let (t0, t1) = (rec.times[k], rec.times[k + 1]);
        if t0 >= start {
            sum += i * (t1 - t0);
            span += t1 - t0;
        }
    }
    sum / span
}

fn traj(a: TrajArgs, common: &Common, res: &mut Resolver) -> Result<(), CliError> {
    let base = base_params(common, res, None)?;
    let p = point_params(common, res, base)?;
    let t_final = res.get("t_final", a.t_final, Some(20.0))?;
    let dt = res.get("dt", a.dt, Some(1e-3))?;
    let n_traj = res.get("trajectories", a.trajectories, Some(1))?;
    let every = res.get("record_every", a.record_every, Some(100))?;
    let kind = match res
        .get("unravelling", a.unravelling, Some("feedback".into()))?
        .as_str()
    {
        "feedback" => Unravelling::Feedback,
        "no-feedback" => Unravelling::NoFeedback,
        other => return Err(CliError::Usage(format!("unknown unravelling '{other}'"))),
    };
    let scheme = match res.get("scheme", a.scheme, Some("euler".into()))?.as_str() {
        "euler" => Scheme::EulerMaruyama,
        "kraus" => Scheme::Kraus,
        other => return Err(CliError::Usage(format!("unknown scheme '{other}'"))),
    };
    let initial: String = res.get("initial", a.initial, Some("gg".into()))?;
    let write_each = res.get("write_trajectories", a.write_trajectories, Some(false))?;
    let seed = res.get("seed", common.seed, Some(1))?;
    let dir = prepare_out(common, res)?;

    let basis = basis_for(&p);
    let rho0 = initial_state(&initial, basis, &p)?;
    let opts = TrajectoryOptions {
        scheme,
        record_every: every,
        ..TrajectoryOptions::new(kind, t_final, dt, seed)
    };
    let l = match kind {
        Unravelling::Feedback => feedback_drift_generator(&p, basis)?,
        Unravelling::NoFeedback => unmodulated_generator(&p, basis)?,
    };
    let ens = ensemble_mean(&rho0, &p, &opts, n_traj)?;
    let det = propagate_sampled(&l, &rho0, t_final, dt, every)?;
    let ss = steady_state(&l)?;
    if det.times.len() != ens.times.len() {
        return Err(CliError::Numerical(
            "ensemble and deterministic samples do not line up".into(),
        ));
    }

    let mut w = create(&dir, "ensemble.csv")?;
    writeln!(
        w,
        "t,trace_distance,concurrence_ensemble,concurrence_deterministic,min_eig_ensemble"
    )?;
    let mut distances = Vec::with_capacity(ens.times.len());
    for ((t, e), d) in ens.times.iter().zip(&ens.states).zip(&det.states) {
        let dist = trace_distance(e.mat(), d.mat())?;
        distances.push(dist);
        writeln!(
            w,
            "{}",
            qfb::format::row(&[
                *t,
                dist,
                or_nan(concurrence(e)),
                or_nan(concurrence(d)),
                or_nan(e.min_eigenvalue()),
            ])
        )?;
    }
    w.flush()?;

    let records: Vec<(
        u64,
        Result<TrajectoryRecord, qfb::trajectories::TrajectoryFailure>,
    )> = if write_each {
        (0..n_traj as u64)
            .into_par_iter()
            .map(|k| {
                let s = seed.wrapping_add(k);
                (
                    s,
                    run_trajectory(&rho0, &p, &TrajectoryOptions { seed: s, ..opts }),
                )
            })
            .collect()
    } else {
        vec![(seed, run_trajectory(&rho0, &p, &opts))]
    };
    for (s, r) in records.iter().filter(|_| write_each) {
        let rec = match r {
            Ok(rec) => rec,
            Err(f) => &f.partial,
        };
        let mut w = create(&dir, &format!("traj_{s}.csv"))?;
        rec.write_csv(&mut w, true)?;
        w.flush()?;
    }
    let photocurrent = match &records[0].1 {
        Ok(rec) => json!({
            "seed": seed,
            "window_start": 0.5 * t_final,
            "mean": late_photocurrent_mean(rec, t_final),
            // Shot noise of a window average: 1/sqrt(eta T).
            "standard_error": 1.0 / (p.eta * 0.5 * t_final).sqrt(),
            "expected": p.gamma.sqrt() * jx_mean(&ss.rho)?,
        }),
        Err(f) => json!({ "seed": seed, "error": f.to_string() }),
    };

    let final_ens = ens.final_state();
    let final_det = det.last();
    let c_ens = or_nan(concurrence(final_ens));
    let c_ss = concurrence(&ss.rho)?;
    write_json(
        &dir,
        "summary.json",
        &json!({
            "params": p,
            "options": opts,
            "initial": initial,
            "trajectories_requested": n_traj,
            "trajectories_completed": ens.trajectories,
            "failed_seeds": ens.failed_seeds,
            "max_trace_correction": ens.max_trace_correction,
            "final_trace_distance": distances.last(),
            "max_trace_distance": distances.iter().cloned().fold(0.0, f64::max),
            "final_concurrence_ensemble": c_ens,
            "final_concurrence_deterministic": or_nan(concurrence(final_det)),
            "steady_concurrence": c_ss,
            "deterministic_warnings": det.warnings,
            "photocurrent": photocurrent,
        }),
    )?;
    println!(
        "{} of {n_traj} trajectories completed; final concurrence {c_ens:.4} (steady {c_ss:.4})",
        ens.trajectories
    );
    Ok(())
}

fn qfunc(a: QfuncArgs, common: &Common, res: &mut Resolver) -> Result<(), CliError> {
    let name: String = res.get("state", a.state, Some("steady".into()))?;
    let basis = BasisLabel::Dicke3;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let pure = |k: [f64; 3]| -> Result<DensityMatrix, CliError> {
        let ket: Vec<C64> = k.iter().map(|&x| C64::new(x, 0.0)).collect();
        Ok(DensityMatrix::pure(&ket, basis)?)
    };
    let rho = match name.as_str() {
        "gg" => DensityMatrix::basis_state(2, basis)?,
        "ee" => DensityMatrix::basis_state(0, basis)?,
        "psi-plus" | "bell-psi-plus" => pure([0.0, 1.0, 0.0])?,
        "phi-plus" => pure([s, 0.0, s])?,
        "phi-minus" => pure([s, 0.0, -s])?,
        "identity" => DensityMatrix::maximally_mixed(basis),
        "steady" => {
            let base = base_params(common, res, None)?;
            let p = point_params(common, res, base)?;
            steady_state(&feedback_drift_generator(&p, basis)?)?.rho
        }
        other => return Err(CliError::Usage(format!("unknown state '{other}'"))),
    };
    let n_theta = res.get("n_theta", a.n_theta, Some(DEFAULT_N_THETA))?;
    let n_phi = res.get("n_phi", a.n_phi, Some(DEFAULT_N_PHI))?;
    let tol = res.get("norm_tol", a.norm_tol, Some(1e-4))?;
    let dir = prepare_out(common, res)?;
    let g = q_grid(&rho, n_theta, n_phi)?;
    let mut w = create(&dir, "qfunc.csv")?;
    g.write_csv(&mut w)?;
    w.flush()?;
    let (mut best, mut at) = (f64::NEG_INFINITY, (0, 0));
    for i in 0..g.n_theta() {
        for k in 0..g.n_phi() {
            // Strict margin so rounding noise along a pole does not pick the column.
            if g.at(i, k) > best + 1e-12 {
                best = g.at(i, k);
                at = (i, k);
            }
        }
    }
    let norm = g.normalization();
    write_json(
        &dir,
        "qfunc.json",
        &json!({
            "state": name,
            "n_theta": n_theta,
            "n_phi": n_phi,
            "normalization": norm,
            "max": { "theta": g.theta[at.0], "phi": g.phi[at.1], "q": best },
        }),
    )?;
    g.check_normalization(tol)?;
    println!(
        "normalization {norm:.8}; max Q {best:.6} at theta = {:.6}",
        g.theta[at.0]
    );
    Ok(())
}

fn validate(a: ValidateArgs, common: &Common, res: &mut Resolver) -> Result<(), CliError> {
    let base = base_params(common, res, None)?;
    let alpha = res.get("alpha", common.alpha, Some(0.4))?;
    let step = res.get("grid_step", a.grid_step, Some(0.25))?;
    let ratios = res.get("ratios", a.ratios, Some(NumList(vec![10.0, 30.0, 100.0])))?;
    let n_fock = res.get("n_fock", a.n_fock, Some(6))?;
    let trial = res.get("experimental_mapping", a.experimental_mapping, Some(false))?;
    base.validate()?;
    let axis = grid(-1.0, 1.0, step)?;
    let dir = prepare_out(common, res)?;

    let points: Vec<ModelParams> = axis
        .iter()
        .flat_map(|&al| {
            axis.iter().map(move |&la| ModelParams {
                alpha: al,
                lambda: la,
                ..base
            })
        })
        .collect();
    let report = bloch::consistency_report(&points);
    let mut w = create(&dir, "bloch_report.csv")?;
    report.write_csv(&mut w)?;
    w.flush()?;
    write_json(&dir, "bloch_report.json", &report)?;

    let adiabatic = adiabatic_comparison(&ratios.0, alpha, n_fock)?;
    let mut w = create(&dir, "adiabatic.csv")?;
    write_adiabatic_csv(&adiabatic, &mut w)?;
    w.flush()?;

    let trial_failed = if trial {
        let rows = experimental::trial_comparison(&points)?;
        let mut w = create(&dir, "bloch_trial.csv")?;
        experimental::write_trial_csv(&rows, &mut w)?;
        w.flush()?;
        Some(rows.iter().filter(|r| r.error.is_some()).count())
    } else {
        None
    };

    let origin = report
        .rows
        .iter()
        .find(|r| r.alpha == 0.0 && r.lambda == 0.0)
        .map(|r| r.analytic_residual);
    let monotone = adiabatic
        .windows(2)
        .all(|w| w[1].ratio <= w[0].ratio || w[1].trace_distance < w[0].trace_distance);
    let diverged = report.rows.iter().filter(|r| r.diverged).count();
    let analytic_failed = report.rows.iter().filter(|r| r.error.is_some()).count();
    write_json(
        &dir,
        "validate.json",
        &json!({
            "bloch": {
                "points": report.rows.len(),
                "analytic_failed": analytic_failed,
                "diverged": diverged,
                "origin_analytic_residual": origin,
                "trial_mapping_failed": trial_failed,
            },
            "adiabatic": {
                "alpha": alpha,
                "n_fock": n_fock,
                "rows": adiabatic,
                "trace_distance_decreasing": monotone,
            },
        }),
    )?;
    println!(
        "bloch: {} points, {diverged} diverged; adiabatic trace distance decreasing: {monotone}",
        report.rows.len()
    );
    Ok(())
}
