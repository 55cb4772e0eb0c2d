//! The eight-variable Bloch system for the feedback-driven triplet, its
//! closed-form steady state, and a report comparing the two.
//!
//! Both are transcribed as published, suspected typos included. The report
//! measures how far they disagree; the authoritative dynamics live in
//! [`crate::generators`].

use std::f64::consts::SQRT_2;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::format;
use crate::params::ModelParams;

/// Divergence cutoff for the fixed-point search.
pub const DIVERGENCE_NORM: f64 = 1e6;
pub const FIXED_POINT_T: f64 = 200.0;
pub const FIXED_POINT_DT: f64 = 1e-3;
/// Denominators below this magnitude are treated as zero.
pub const S_MIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct BlochState {
    pub x12: f64,
    pub x13: f64,
    pub x23: f64,
    pub y12: f64,
    pub y13: f64,
    pub y23: f64,
    pub z12: f64,
    pub z13: f64,
}

impl BlochState {
    pub fn to_array(self) -> [f64; 8] {
        [
            self.x12, self.x13, self.x23, self.y12, self.y13, self.y23, self.z12, self.z13,
        ]
    }

    pub fn from_array(a: [f64; 8]) -> Self {
        let [x12, x13, x23, y12, y13, y23, z12, z13] = a;
        Self {
            x12,
            x13,
            x23,
            y12,
            y13,
            y23,
            z12,
            z13,
        }
    }

    pub fn norm_inf(self) -> f64 {
        self.to_array().iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn distance(self, other: BlochState) -> f64 {
        self.axpy(-1.0, other).norm_inf()
    }

    /// `self + a·other`
    fn axpy(self, a: f64, other: BlochState) -> Self {
        let (s, o) = (self.to_array(), other.to_array());
        Self::from_array(std::array::from_fn(|i| s[i] + a * o[i]))
    }

    fn is_finite(self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }
}

/// Right-hand side of the Bloch equations.
pub fn ode_rhs(p: &ModelParams, s: &BlochState) -> BlochState {
    let (a, l, g) = (p.alpha, p.lambda, p.gamma);
    let r2a = SQRT_2 * a;
    let l2g = l * l / g;
    BlochState {
        x12: -2.0 * g * s.x12 - 2.0 * l + l2g * s.x23 + r2a * s.y13,
        x13: (-g - l2g - 2.0 * l) * s.x13 - r2a * s.y12 + r2a * s.y23,
        x23: (2.0 * g + l2g) * s.x12 - (g * g + l * l) * s.x23 + r2a * s.y13,
        y12: -r2a * s.x13 + (2.0 * g + 6.0 * l + 5.0 * l2g) * s.y12 - 2.0 * r2a * s.y13,
        y13: -r2a * s.x12 + r2a * s.x23 + (g + 2.0 * l + 2.0 * l2g) * s.y13,
        y23: r2a * s.x13
            + (-2.0 * g - 3.0 * l2g - 6.0 * l) * s.y12
            + (g + 4.0 * l + 5.0 * l2g) * s.y23
            + 2.0 * r2a * s.z12
            - 2.0 * r2a * s.z13,
        z12: (-2.0 * l - 3.0 * l2g) * s.x13 - 2.0 * r2a * s.y12 + r2a * s.y23
            - 8.0 * g / 3.0 * s.z12
            + (2.0 * g / 3.0 - 4.0 * l / 3.0 + 2.0 * l2g) * s.z13
            - 2.0 * g / 3.0
            - 4.0 * l / 3.0,
        z13: 2.0 * l * s.x13 - r2a * s.y12 - r2a * s.y23 + (2.0 * g / 3.0 + 4.0 * l / 3.0) * s.z12
            - (4.0 * g / 3.0 + 8.0 * l / 3.0 + 2.0 * l2g) * s.z13
            - 4.0 * g / 3.0
            + 8.0 * l / 3.0,
    }
}

/// `∂(ode_rhs)_i/∂s_j`; the system is affine so this does not depend on `s`.
pub fn jacobian(p: &ModelParams) -> [[f64; 8]; 8] {
    let (a, l, g) = (p.alpha, p.lambda, p.gamma);
    let r = SQRT_2 * a;
    let q = l * l / g;
    [
        [-2.0 * g, 0.0, q, 0.0, r, 0.0, 0.0, 0.0],
        [0.0, -g - q - 2.0 * l, 0.0, -r, 0.0, r, 0.0, 0.0],
        [2.0 * g + q, 0.0, -(g * g + l * l), 0.0, r, 0.0, 0.0, 0.0],
        [
            0.0,
            -r,
            0.0,
            2.0 * g + 6.0 * l + 5.0 * q,
            -2.0 * r,
            0.0,
            0.0,
            0.0,
        ],
        [-r, 0.0, r, 0.0, g + 2.0 * l + 2.0 * q, 0.0, 0.0, 0.0],
        [
            0.0,
            r,
            0.0,
            -2.0 * g - 3.0 * q - 6.0 * l,
            0.0,
            g + 4.0 * l + 5.0 * q,
            2.0 * r,
            -2.0 * r,
        ],
        [
            0.0,
            -2.0 * l - 3.0 * q,
            0.0,
            -2.0 * r,
            0.0,
            r,
            -8.0 * g / 3.0,
            2.0 * g / 3.0 - 4.0 * l / 3.0 + 2.0 * q,
        ],
        [
            0.0,
            2.0 * l,
            0.0,
            -r,
            0.0,
            -r,
            2.0 * g / 3.0 + 4.0 * l / 3.0,
            -(4.0 * g / 3.0 + 8.0 * l / 3.0 + 2.0 * q),
        ],
    ]
}

/// Numerators `[A, …, H]` and denominator `S` of the closed-form steady state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyPolynomials {
    pub numerators: [f64; 8],
    pub s: f64,
}

pub fn steady_polynomials(p: &ModelParams) -> SteadyPolynomials {
    let (a, l, g) = (p.alpha, p.lambda, p.gamma);
    let a2 = a * a;
    let gp = g + 2.0 * l;
    let s = 24.0 * a2 * a2 * g.powi(4)
        + 2.0 * g.powi(8)
        + 26.0 * g.powi(7) * l
        + 143.0 * g.powi(6) * l.powi(2)
        + 432.0 * g.powi(5) * l.powi(3)
        + 789.0 * g.powi(4) * l.powi(4)
        + 926.0 * g.powi(3) * l.powi(5)
        + 726.0 * g * g * l.powi(6)
        + 352.0 * g * l.powi(7)
        + 96.0 * l.powi(8)
        + 2.0 * a2 * g * g * (4.0 * g.powi(4) + 22.0 * g.powi(3) * l + 65.0 * g * g * l * l)
        + 116.0 * g * l.powi(3)
        + 60.0 * l.powi(4);
    let quartic = 2.0 * g.powi(4)
        + 14.0 * g.powi(3) * l
        + 33.0 * g * g * l * l
        + 32.0 * g * l.powi(3)
        + 16.0 * l.powi(4);
    let bg = gp * (4.0 * a2 * g * g * (g * g + 3.0 * g * l + l * l) + l * l * quartic);
    let b = 2.0 * g * bg;
    let d = 2.0
        * SQRT_2
        * a
        * g
        * g
        * gp
        * (4.0 * a2 * g * g + l * l * (5.0 * g * g + 20.0 * g * l + 16.0 * l * l));
    let f = 2.0
        * SQRT_2
        * a
        * g
        * g
        * gp
        * (4.0 * a2 * g * g
            + 2.0 * g.powi(4)
            + 14.0 * g.powi(3) * l
            + 37.0 * g * g * l * l
            + 44.0 * g * l.powi(3)
            + 44.0 * g * l.powi(3)
            + 16.0 * l.powi(4));
    let gg = g * bg;
    let h = g * gp.powi(3) * (4.0 * a2 * l * l + quartic);
    SteadyPolynomials {
        numerators: [0.0, b, 0.0, d, 0.0, f, gg, h],
        s,
    }
}

/// Closed-form steady state `(A/S, …, H/S)`. The `x12`, `x23` and `y13`
/// components are exact zeros.
pub fn analytic_steady(p: &ModelParams) -> Result<BlochState> {
    p.validate()?;
    let poly = steady_polynomials(p);
    if poly.s.abs() < S_MIN {
        return Err(Error::SingularDenominator("S"));
    }
    Ok(BlochState::from_array(poly.numerators.map(|n| {
        if n == 0.0 {
            0.0
        } else {
            n / poly.s
        }
    })))
}

/// Outcome of integrating the Bloch system from the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FixedPoint {
    Settled(BlochState),
    Diverged { time: f64 },
}

/// RK4 from `s = 0` up to `t_final`, stopping once `‖s‖∞` exceeds
/// [`DIVERGENCE_NORM`] or leaves the finite range.
pub fn integrate_from_origin(p: &ModelParams, t_final: f64, dt: f64) -> Result<FixedPoint> {
    let (n, h) = crate::generators::step_grid(t_final, dt)?;
    let mut s = BlochState::default();
    for k in 0..n {
        let k1 = ode_rhs(p, &s);
        let k2 = ode_rhs(p, &s.axpy(0.5 * h, k1));
        let k3 = ode_rhs(p, &s.axpy(0.5 * h, k2));
        let k4 = ode_rhs(p, &s.axpy(h, k3));
        s = s
            .axpy(h / 6.0, k1)
            .axpy(h / 3.0, k2)
            .axpy(h / 3.0, k3)
            .axpy(h / 6.0, k4);
        if !s.is_finite() || s.norm_inf() > DIVERGENCE_NORM {
            return Ok(FixedPoint::Diverged {
                time: (k + 1) as f64 * h,
            });
        }
    }
    Ok(FixedPoint::Settled(s))
}

/// One row of the consistency report. Quantities that could not be computed
/// are NaN.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyRow {
    pub alpha: f64,
    pub lambda: f64,
    /// `‖ode_rhs(analytic_steady)‖∞`
    pub analytic_residual: f64,
    /// `‖fixed point − analytic_steady‖∞`
    pub fixedpoint_distance: f64,
    pub diverged: bool,
    pub denominator: f64,
    pub analytic: Option<BlochState>,
    pub fixed_point: Option<BlochState>,
    pub diverged_at: Option<f64>,
    pub error: Option<String>,
}

impl ConsistencyRow {
    pub const CSV_HEADER: &'static str =
        "alpha,lambda,analytic_residual,fixedpoint_distance,diverged_flag";
}

pub fn consistency_row(p: &ModelParams) -> ConsistencyRow {
    let analytic = analytic_steady(p);
    let (fixed_point, diverged_at) = match integrate_from_origin(p, FIXED_POINT_T, FIXED_POINT_DT) {
        Ok(FixedPoint::Settled(s)) => (Some(s), None),
        Ok(FixedPoint::Diverged { time }) => (None, Some(time)),
        Err(_) => (None, None),
    };
    let analytic_ok = analytic.as_ref().ok().copied();
    ConsistencyRow {
        alpha: p.alpha,
        lambda: p.lambda,
        analytic_residual: analytic_ok.map_or(f64::NAN, |s| ode_rhs(p, &s).norm_inf()),
        fixedpoint_distance: match (analytic_ok, fixed_point) {
            (Some(a), Some(f)) => a.distance(f),
            _ => f64::NAN,
        },
        diverged: diverged_at.is_some(),
        denominator: steady_polynomials(p).s,
        analytic: analytic_ok,
        fixed_point,
        diverged_at,
        error: analytic.err().map(|e| e.to_string()),
    }
}

/// `α, λ ∈ [−1, 1]` at step 0.25 with γ = 1.
pub fn default_grid() -> Vec<ModelParams> {
    let axis: Vec<f64> = (0..=8).map(|i| -1.0 + 0.25 * i as f64).collect();
    axis.iter()
        .flat_map(|&a| axis.iter().map(move |&l| ModelParams::new(a, l)))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyReport {
    pub rows: Vec<ConsistencyRow>,
}

/// Evaluates every grid point (in parallel, order preserved). Nothing here is
/// judged; disagreement is the data.
pub fn consistency_report(grid: &[ModelParams]) -> ConsistencyReport {
    ConsistencyReport {
        rows: grid.par_iter().map(consistency_row).collect(),
    }
}

impl ConsistencyReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", ConsistencyRow::CSV_HEADER)?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{}",
                format::row(&[
                    r.alpha,
                    r.lambda,
                    r.analytic_residual,
                    r.fixedpoint_distance
                ]),
                u8::from(r.diverged)
            )?;
        }
        Ok(())
    }
}

/// A trial reading of the Bloch variables as expectation values in a
/// triplet state. Nothing establishes that this is the intended meaning.
pub mod experimental {
    use super::*;
    use crate::generators::{feedback_drift_generator, steady_state};
    use crate::operators::{collective_ops, BasisLabel, CollectiveOps};
    use crate::state::DensityMatrix;

    /// `x_ij = ⟨|i⟩⟨j| + |j⟩⟨i|⟩`, `y_ij = ⟨−i|i⟩⟨j| + i|j⟩⟨i|⟩`,
    /// `z_ij = ⟨|j⟩⟨j| − |i⟩⟨i|⟩` with triplet indices 1, 2, 3.
    pub fn trial_mapping(rho: &DensityMatrix) -> Result<BlochState> {
        if rho.basis() != BasisLabel::Dicke3 {
            return Err(Error::BasisMismatch(format!(
                "trial mapping needs a Dicke3 state, got {:?}",
                rho.basis()
            )));
        }
        let m = rho.mat();
        let x = |i: usize, j: usize| 2.0 * m[(i, j)].re;
        let y = |i: usize, j: usize| -2.0 * m[(i, j)].im;
        let z = |i: usize, j: usize| m[(j, j)].re - m[(i, i)].re;
        Ok(BlochState {
            x12: x(0, 1),
            x13: x(0, 2),
            x23: x(1, 2),
            y12: y(0, 1),
            y13: y(0, 2),
            y23: y(1, 2),
            z12: z(0, 1),
            z13: z(0, 2),
        })
    }

    #[derive(Debug, Clone, Serialize)]
    pub struct TrialRow {
        pub alpha: f64,
        pub lambda: f64,
        pub jx: f64,
        pub jy: f64,
        pub jz: f64,
        /// `‖trial_mapping(ρ_ss) − analytic_steady‖∞`
        pub analytic_distance: f64,
        /// `‖ode_rhs(trial_mapping(ρ_ss))‖∞`
        pub mapped_residual: f64,
        /// Set when the steady state could not be computed; the numeric
        /// fields are then NaN.
        pub error: Option<String>,
    }

    impl TrialRow {
        pub const CSV_HEADER: &'static str =
            "alpha,lambda,jx,jy,jz,analytic_distance,mapped_residual";
    }

    /// Liouvillian steady state at each point, mapped onto Bloch variables.
    pub fn trial_comparison(grid: &[ModelParams]) -> Result<Vec<TrialRow>> {
        let ops = collective_ops(BasisLabel::Dicke3)?;
        Ok(grid.par_iter().map(|p| trial_row(p, &ops)).collect())
    }

    fn trial_row(p: &ModelParams, ops: &CollectiveOps) -> TrialRow {
        let row = || -> Result<TrialRow> {
            let rho = steady_state(&feedback_drift_generator(p, BasisLabel::Dicke3)?)?.rho;
            let mapped = trial_mapping(&rho)?;
            Ok(TrialRow {
                alpha: p.alpha,
                lambda: p.lambda,
                jx: rho.expectation(&ops.jx).re,
                jy: rho.expectation(&ops.jy).re,
                jz: rho.expectation(&ops.jz).re,
                analytic_distance: analytic_steady(p).map_or(f64::NAN, |a| a.distance(mapped)),
                mapped_residual: ode_rhs(p, &mapped).norm_inf(),
                error: None,
            })
        };
        row().unwrap_or_else(|e| TrialRow {
            alpha: p.alpha,
            lambda: p.lambda,
            jx: f64::NAN,
            jy: f64::NAN,
            jz: f64::NAN,
            analytic_distance: f64::NAN,
            mapped_residual: f64::NAN,
            error: Some(e.to_string()),
        })
    }

    pub fn write_trial_csv<W: Write>(rows: &[TrialRow], mut w: W) -> io::Result<()> {
        writeln!(w, "{}", TrialRow::CSV_HEADER)?;
        for r in rows {
            writeln!(
                w,
                "{}",
                format::row(&[
                    r.alpha,
                    r.lambda,
                    r.jx,
                    r.jy,
                    r.jz,
                    r.analytic_distance,
                    r.mapped_residual
                ])
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::experimental::*;
    use super::*;
    use crate::operators::BasisLabel;
    use crate::state::DensityMatrix;
    use proptest::prelude::*;

    fn params(a: f64, l: f64) -> ModelParams {
        ModelParams::new(a, l)
    }

    #[test]
    fn constant_terms_at_origin() {
        let d = ode_rhs(&params(0.0, 0.0), &BlochState::default());
        let want = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -2.0 / 3.0, -4.0 / 3.0];
        assert_eq!(d.to_array(), want);
        let d = ode_rhs(&params(0.0, 0.5), &BlochState::default());
        assert!((d.x12 + 1.0).abs() < 1e-15);
        assert!((d.z12 - (-2.0 / 3.0 - 2.0 / 3.0)).abs() < 1e-15);
        assert!((d.z13 - (-4.0 / 3.0 + 4.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn polynomials_at_origin() {
        let poly = steady_polynomials(&params(0.0, 0.0));
        assert_eq!(poly.s, 2.0);
        assert_eq!(poly.numerators, [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0]);
        let s = analytic_steady(&params(0.0, 0.0)).unwrap();
        assert_eq!(
            s,
            BlochState {
                z13: 1.0,
                ..Default::default()
            }
        );
    }

    #[test]
    fn hand_evaluated_polynomials() {
        // α = 1, λ = 1, γ = 1 evaluated term by term.
        let poly = steady_polynomials(&params(1.0, 1.0));
        let s = 24.0
            + 2.0
            + 26.0
            + 143.0
            + 432.0
            + 789.0
            + 926.0
            + 726.0
            + 352.0
            + 96.0
            + 2.0 * (4.0 + 22.0 + 65.0)
            + 116.0
            + 60.0;
        assert_eq!(poly.s, s);
        let quartic = 2.0 + 14.0 + 33.0 + 32.0 + 16.0;
        let g = 3.0 * (4.0 * 5.0 + quartic);
        assert_eq!(poly.numerators[6], g);
        assert_eq!(poly.numerators[1], 2.0 * g);
        assert!((poly.numerators[3] - 2.0 * SQRT_2 * 3.0 * (4.0 + 41.0)).abs() < 1e-12);
        assert!(
            (poly.numerators[5] - 2.0 * SQRT_2 * 3.0 * (4.0 + 2.0 + 14.0 + 37.0 + 88.0 + 16.0))
                .abs()
                < 1e-12
        );
        assert_eq!(poly.numerators[7], 27.0 * (4.0 + quartic));
    }

    #[test]
    fn printed_origin_state_is_not_a_fixed_point() {
        // ż13 = −4/3·z13 − 4/3 at the origin, so z13 = 1 leaves −8/3.
        let p = params(0.0, 0.0);
        let r = ode_rhs(&p, &analytic_steady(&p).unwrap());
        assert_eq!(r.z12, 0.0);
        assert!((r.z13 + 8.0 / 3.0).abs() < 1e-15);
        match integrate_from_origin(&p, FIXED_POINT_T, FIXED_POINT_DT).unwrap() {
            FixedPoint::Settled(s) => {
                assert!((s.z12 + 4.0 / 7.0).abs() < 1e-9);
                assert!((s.z13 + 9.0 / 7.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn singular_denominator() {
        assert!(matches!(
            analytic_steady(&ModelParams::new(0.0, 0.0).with_gamma(1e-3)),
            Err(Error::SingularDenominator(_))
        ));
    }

    #[test]
    fn denominator_sign() {
        // Every coefficient is positive, so S > 0 whenever λ ≥ 0.
        for i in 0..=100 {
            for j in 0..=50 {
                let (a, l) = (-5.0 + 0.1 * i as f64, 0.1 * j as f64);
                assert!(steady_polynomials(&params(a, l)).s > 0.0, "({a}, {l})");
            }
        }
        // The printed S is not positive everywhere on negative feedback.
        assert!(steady_polynomials(&params(0.0, -0.95)).s < 0.0);
        let mut negative = 0;
        for i in 0..=100 {
            for j in 0..=100 {
                let (a, l) = (-5.0 + 0.1 * i as f64, -5.0 + 0.1 * j as f64);
                if steady_polynomials(&params(a, l)).s <= 0.0 {
                    negative += 1;
                    assert!(l < 0.0);
                }
            }
        }
        assert!(negative > 0);
    }

    #[test]
    fn divergence_is_flagged() {
        // The ẏ12 coefficient 2γ + 6λ + 5λ²/γ is positive here and α couples it in.
        let row = consistency_row(&params(0.5, 0.5));
        assert!(row.diverged);
        assert!(row.fixedpoint_distance.is_nan());
        assert!(row.diverged_at.unwrap() < FIXED_POINT_T);
    }

    #[test]
    fn default_report_is_complete() {
        let grid = default_grid();
        assert_eq!(grid.len(), 81);
        let report = consistency_report(&grid);
        assert_eq!(report.rows.len(), 81);
        for (r, p) in report.rows.iter().zip(&grid) {
            assert_eq!((r.alpha, r.lambda), (p.alpha, p.lambda));
        }
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 82);
        assert!(text
            .lines()
            .skip(1)
            .all(|l| l.ends_with(",0") || l.ends_with(",1")));
    }

    #[test]
    fn trial_mapping_of_ground_state() {
        let g = DensityMatrix::basis_state(2, BasisLabel::Dicke3).unwrap();
        let s = trial_mapping(&g).unwrap();
        assert_eq!(
            s,
            BlochState {
                z13: 1.0,
                ..Default::default()
            }
        );
        let rows = trial_comparison(&[params(0.0, 0.0), params(0.4, -0.8)]).unwrap();
        assert!(rows[0].analytic_distance < 1e-9);
        let bad = trial_comparison(&[params(0.25, -0.5)]).unwrap();
        assert!(bad[0].error.is_some() && bad[0].jz.is_nan());
        assert!((rows[0].jz + 2.0).abs() < 1e-9);
        assert!(trial_mapping(&DensityMatrix::maximally_mixed(BasisLabel::Product4)).is_err());
    }

    fn state_strategy() -> impl Strategy<Value = BlochState> {
        prop::array::uniform8(-3.0..3.0f64).prop_map(BlochState::from_array)
    }

    proptest! {
        #[test]
        fn jacobian_matches_finite_differences(
            a in -2.0..2.0f64, l in -2.0..2.0f64, s in state_strategy()
        ) {
            let p = params(a, l);
            let jac = jacobian(&p);
            let h = 1e-5;
            for j in 0..8 {
                let mut up = s.to_array();
                let mut down = s.to_array();
                up[j] += h;
                down[j] -= h;
                let fu = ode_rhs(&p, &BlochState::from_array(up)).to_array();
                let fd = ode_rhs(&p, &BlochState::from_array(down)).to_array();
                for i in 0..8 {
                    let fdiff = (fu[i] - fd[i]) / (2.0 * h);
                    prop_assert!(
                        (fdiff - jac[i][j]).abs() <= 1e-6 * jac[i][j].abs().max(1.0),
                        "entry ({}, {}): {} vs {}", i, j, fdiff, jac[i][j]
                    );
                }
            }
        }

        #[test]
        fn homogeneous_part_is_linear(
            a in -2.0..2.0f64, l in -2.0..2.0f64, w in -2.0..2.0f64,
            s1 in state_strategy(), s2 in state_strategy()
        ) {
            let p = params(a, l);
            let c = ode_rhs(&p, &BlochState::default());
            let lin = |s: BlochState| ode_rhs(&p, &s).axpy(-1.0, c);
            let lhs = lin(s1.axpy(w, s2));
            let rhs = lin(s1).axpy(w, lin(s2));
            prop_assert!(lhs.distance(rhs) < 1e-11);
        }

        #[test]
        fn alpha_parity(a in -3.0..3.0f64, l in 0.0..3.0f64) {
            let plus = analytic_steady(&params(a, l)).unwrap();
            let minus = analytic_steady(&params(-a, l)).unwrap();
            prop_assert_eq!(plus.y12, -minus.y12);
            prop_assert_eq!(plus.y23, -minus.y23);
            prop_assert_eq!(plus.x13, minus.x13);
            prop_assert_eq!(plus.z12, minus.z12);
            prop_assert_eq!(plus.z13, minus.z13);
            prop_assert_eq!((plus.x12, plus.x23, plus.y13), (0.0, 0.0, 0.0));
        }
    }
}
