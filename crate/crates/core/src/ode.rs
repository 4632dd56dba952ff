//! Explicit Runge-Kutta integration: adaptive Dormand-Prince 5(4) and
//! fixed-step RK4.
//!
//! The vector field is autonomous and acts on dense `n x d` states. DOPRI5
//! uses the standard tableau with the first-same-as-last stage, an RMS error
//! norm scaled by `atol + rtol |y|`, and a PI step controller with safety 0.9
//! and growth factors clamped to `[0.2, 5.0]`. Integration is single-threaded
//! and bit-deterministic for fixed inputs.

use crate::error::Error;
use crate::linalg::DenseMatrix;
use crate::scalar::{real, Float};

/// Integration method: adaptive DOPRI5 or RK4 with a fixed step `h`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OdeMethod<T> {
    Dopri5,
    Rk4 { h: T },
}

/// Solver configuration.
#[derive(Clone, Copy, Debug)]
pub struct OdeConfig<T> {
    pub t0: T,
    pub t1: T,
    pub rtol: T,
    pub atol: T,
    /// Initial step; `None` defaults to `(t1 - t0) / 100`.
    pub h_init: Option<T>,
    pub h_min: T,
    pub max_steps: usize,
    pub method: OdeMethod<T>,
    /// Keep the state at every accepted time (off by default).
    pub store_states: bool,
}

impl<T: Float> OdeConfig<T> {
    pub fn dopri5(t0: T, t1: T) -> Self {
        Self {
            t0,
            t1,
            rtol: real(1e-5),
            atol: real(1e-7),
            h_init: None,
            h_min: real(1e-6),
            max_steps: 10_000,
            method: OdeMethod::Dopri5,
            store_states: false,
        }
    }

    pub fn rk4(t0: T, t1: T, h: T) -> Self {
        Self {
            method: OdeMethod::Rk4 { h },
            ..Self::dopri5(t0, t1)
        }
    }

    fn validate(&self) -> Result<(), Error> {
        if !(self.t1 > self.t0) {
            return Err(Error::InvalidArgument(format!(
                "time horizon must be increasing, got [{}, {}]",
                self.t0, self.t1
            )));
        }
        if !(self.rtol > T::zero()) || !(self.atol > T::zero()) {
            return Err(Error::InvalidArgument(
                "tolerances must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Step bookkeeping.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

/// Result of one integration.
#[derive(Clone, Debug)]
pub struct Trajectory<T> {
    /// Accepted times, strictly increasing from `t0` to `t1`.
    pub times: Vec<T>,
    /// States at the accepted times when `store_states` was set.
    pub states: Option<Vec<DenseMatrix<T>>>,
    pub final_state: DenseMatrix<T>,
    pub stats: OdeStats,
}

/// Integration failure carrying the partial trajectory up to the failure.
#[derive(Debug)]
pub struct OdeFailure<T> {
    pub error: Error,
    pub partial: Trajectory<T>,
}

impl<T> From<OdeFailure<T>> for Error {
    fn from(failure: OdeFailure<T>) -> Self {
        failure.error
    }
}

pub type OdeResult<T> = Result<Trajectory<T>, OdeFailure<T>>;

// Dormand-Prince 5(4) tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

// 5th-order minus embedded 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrate `dX/dt = rhs(X)` from `x0` over the configured horizon.
pub fn integrate<T: Float>(
    mut rhs: impl FnMut(&DenseMatrix<T>) -> DenseMatrix<T>,
    x0: &DenseMatrix<T>,
    cfg: &OdeConfig<T>,
) -> OdeResult<T> {
    if let Err(error) = cfg.validate() {
        return Err(OdeFailure {
            error,
            partial: Trajectory {
                times: vec![cfg.t0],
                states: cfg.store_states.then(|| vec![x0.clone()]),
                final_state: x0.clone(),
                stats: OdeStats::default(),
            },
        });
    }
    match cfg.method {
        OdeMethod::Rk4 { h } => integrate_rk4(rhs, x0, cfg, h),
        OdeMethod::Dopri5 => integrate_dopri5(&mut rhs, x0, cfg),
    }
}

fn integrate_rk4<T: Float>(
    mut rhs: impl FnMut(&DenseMatrix<T>) -> DenseMatrix<T>,
    x0: &DenseMatrix<T>,
    cfg: &OdeConfig<T>,
    h: T,
) -> OdeResult<T> {
    let span = cfg.t1 - cfg.t0;
    if !(h > T::zero()) {
        return Err(OdeFailure {
            error: Error::InvalidArgument(format!("rk4 step must be positive, got {h}")),
            partial: Trajectory {
                times: vec![cfg.t0],
                states: cfg.store_states.then(|| vec![x0.clone()]),
                final_state: x0.clone(),
                stats: OdeStats::default(),
            },
        });
    }
    let steps = ((span / h).ceil().to_f64_lossy() as usize).max(1);
    let h = span / real::<T>(steps as f64);
    let half = real::<T>(0.5);
    let sixth = real::<T>(1.0 / 6.0);

    let mut times = vec![cfg.t0];
    let mut states = cfg.store_states.then(|| vec![x0.clone()]);
    let mut x = x0.clone();
    let mut stats = OdeStats::default();
    for step in 0..steps {
        let k1 = rhs(&x);
        let mut x2 = x.clone();
        x2.axpy(h * half, &k1);
        let k2 = rhs(&x2);
        let mut x3 = x.clone();
        x3.axpy(h * half, &k2);
        let k3 = rhs(&x3);
        let mut x4 = x.clone();
        x4.axpy(h, &k3);
        let k4 = rhs(&x4);
        stats.rhs_evals += 4;

        let mut incr = k1;
        incr.axpy(real(2.0), &k2);
        incr.axpy(real(2.0), &k3);
        incr.add_assign(&k4);
        x.axpy(h * sixth, &incr);
        stats.accepted += 1;
        let t = cfg.t0 + h * real::<T>((step + 1) as f64);
        times.push(if step + 1 == steps { cfg.t1 } else { t });
        if let Some(s) = states.as_mut() {
            s.push(x.clone());
        }
    }
    Ok(Trajectory {
        times,
        states,
        final_state: x,
        stats,
    })
}

fn integrate_dopri5<T: Float>(
    rhs: &mut impl FnMut(&DenseMatrix<T>) -> DenseMatrix<T>,
    x0: &DenseMatrix<T>,
    cfg: &OdeConfig<T>,
) -> OdeResult<T> {
    let span = cfg.t1 - cfg.t0;
    let mut t = cfg.t0;
    let mut x = x0.clone();
    let mut times = vec![cfg.t0];
    let mut states = cfg.store_states.then(|| vec![x0.clone()]);
    let mut stats = OdeStats::default();

    let fail = |error: Error,
                times: Vec<T>,
                states: Option<Vec<DenseMatrix<T>>>,
                final_state: DenseMatrix<T>,
                stats: OdeStats| {
        Err(OdeFailure {
            error,
            partial: Trajectory { times, states, final_state, stats },
        })
    };

    let mut h = cfg
        .h_init
        .unwrap_or(span * real::<T>(0.01))
        .min(span)
        .max(cfg.h_min);
    let mut k1 = rhs(&x);
    stats.rhs_evals += 1;

    let safety = real::<T>(0.9);
    let beta = real::<T>(0.04);
    let expo1 = real::<T>(0.2) - beta * real::<T>(0.75);
    let factor_min = real::<T>(0.2);
    let factor_max = real::<T>(5.0);
    let mut err_old = real::<T>(1e-4);

    while t < cfg.t1 {
        if stats.accepted + stats.rejected >= cfg.max_steps {
            return fail(
                Error::MaxStepsExceeded(cfg.max_steps),
                times,
                states,
                x,
                stats,
            );
        }
        let last = t + h >= cfg.t1;
        let h_step = if last { cfg.t1 - t } else { h };
        if h_step < cfg.h_min && !last {
            return fail(
                Error::StepUnderflow {
                    t: t.to_f64_lossy(),
                    h_min: cfg.h_min.to_f64_lossy(),
                },
                times,
                states,
                x,
                stats,
            );
        }

        // Stages 2..7; k7 is the FSAL candidate.
        let mut k = Vec::with_capacity(7);
        k.push(k1.clone());
        for stage in 0..6 {
            let mut arg = x.clone();
            for (j, kj) in k.iter().enumerate() {
                let a = A[stage][j];
                if a != 0.0 {
                    arg.axpy(h_step * real::<T>(a), kj);
                }
            }
            k.push(rhs(&arg));
            stats.rhs_evals += 1;
        }
        // 5th-order solution is the stage-7 argument (A[5] row = b weights).
        let mut x_new = x.clone();
        for (j, kj) in k.iter().take(6).enumerate() {
            let a = A[5][j];
            if a != 0.0 {
                x_new.axpy(h_step * real::<T>(a), kj);
            }
        }
        debug_assert_eq!(k.len(), 7);

        // Embedded error estimate.
        let mut err_sq = T::zero();
        let count = x.data().len().max(1);
        for idx in 0..x.data().len() {
            let mut e = T::zero();
            for (j, kj) in k.iter().enumerate() {
                let c = E[j];
                if c != 0.0 {
                    e += real::<T>(c) * kj.data()[idx];
                }
            }
            e *= h_step;
            let scale = cfg.atol
                + cfg.rtol * x.data()[idx].abs().max(x_new.data()[idx].abs());
            let ratio = e / scale;
            err_sq += ratio * ratio;
        }
        let err = (err_sq / real::<T>(count as f64)).sqrt();

        if err <= T::one() {
            t = if last { cfg.t1 } else { t + h_step };
            // k7 was evaluated at x_new: first-same-as-last.
            k1 = k.pop().expect("seven stages");
            x = x_new;
            stats.accepted += 1;
            times.push(t);
            if let Some(s) = states.as_mut() {
                s.push(x.clone());
            }
            let factor = if err <= T::zero() {
                factor_max
            } else {
                (safety * err.powf(-expo1) * err_old.powf(beta))
                    .max(factor_min)
                    .min(factor_max)
            };
            err_old = err.max(real(1e-4));
            h = (h_step * factor).max(cfg.h_min);
        } else {
            stats.rejected += 1;
            let factor = (safety * err.powf(-expo1)).max(factor_min).min(T::one());
            let shrunk = h_step * factor;
            if shrunk < cfg.h_min {
                return fail(
                    Error::StepUnderflow {
                        t: t.to_f64_lossy(),
                        h_min: cfg.h_min.to_f64_lossy(),
                    },
                    times,
                    states,
                    x,
                    stats,
                );
            }
            h = shrunk;
        }
    }

    Ok(Trajectory {
        times,
        states,
        final_state: x,
        stats,
    })
}

/// Fitted RK4 convergence order on `[0, horizon]`: global error against a
/// tight-tolerance DOPRI5 reference at `h, h/2, h/4`, averaged dyadic slope.
pub fn convergence_order<T: Float>(
    mut rhs: impl FnMut(&DenseMatrix<T>) -> DenseMatrix<T>,
    x0: &DenseMatrix<T>,
    horizon: T,
) -> Result<T, Error> {
    let mut reference_cfg = OdeConfig::dopri5(T::zero(), horizon);
    reference_cfg.rtol = real(1e-12);
    reference_cfg.atol = real(1e-14);
    let reference = integrate(&mut rhs, x0, &reference_cfg)
        .map_err(Error::from)?
        .final_state;

    let base_h = horizon / real::<T>(8.0);
    let mut errors = Vec::new();
    for split in 0..3 {
        let h = base_h / real::<T>(2.0f64.powi(split));
        let cfg = OdeConfig::rk4(T::zero(), horizon, h);
        let final_state = integrate(&mut rhs, x0, &cfg).map_err(Error::from)?.final_state;
        errors.push(final_state.sub(&reference).frobenius_norm());
    }
    let mut slopes = Vec::new();
    for w in errors.windows(2) {
        if w[1] == T::zero() {
            return Ok(real(4.0));
        }
        slopes.push((w[0] / w[1]).log2());
    }
    Ok(slopes.iter().copied().sum::<T>() / real::<T>(slopes.len() as f64))
}
