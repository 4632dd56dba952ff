//! Framelet message passing: the discrete residual layer, its ODE vector
//! field, a reference GCN layer, and the energy / stability probes.

use crate::error::{Error, Result};
use crate::graph::{dirichlet_energy, LaplacianBundle};
use crate::linalg::DenseMatrix;
use crate::operators::FrameletOperatorSet;
use crate::rng::Rng;
use crate::scalar::{real, Float};
use crate::spectral::eig_symmetric;

/// Learnable mixing matrices of one message passing layer: `theta_low` pairs
/// with the low pass, `theta_high[r - 1]` with high-pass index `r` and is
/// shared across levels. A per-level layout is available behind
/// `theta_high_per_level` and defaults to off.
#[derive(Clone, Debug)]
pub struct FmpParams<T> {
    pub theta_low: DenseMatrix<T>,
    pub theta_high: Vec<DenseMatrix<T>>,
    pub theta_high_per_level: Option<Vec<Vec<DenseMatrix<T>>>>,
    /// Trace ceiling `M` enforced by the PSD projection.
    pub trace_bound: Option<T>,
    pub psd_project: bool,
}

impl<T: Float> FmpParams<T> {
    /// All-zero parameters for `K` high passes on `d`-dimensional features.
    pub fn zeros(high_pass_count: usize, d: usize) -> Self {
        Self {
            theta_low: DenseMatrix::zeros(d, d),
            theta_high: (0..high_pass_count)
                .map(|_| DenseMatrix::zeros(d, d))
                .collect(),
            theta_high_per_level: None,
            trace_bound: None,
            psd_project: false,
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.theta_low.rows()
    }

    /// Iterate `theta_low` then the high-pass matrices.
    pub fn iter(&self) -> impl Iterator<Item = &DenseMatrix<T>> {
        std::iter::once(&self.theta_low).chain(self.theta_high.iter())
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut DenseMatrix<T>> {
        std::iter::once(&mut self.theta_low).chain(self.theta_high.iter_mut())
    }

    /// Project every theta onto the symmetric PSD cone and rescale the trace
    /// to `min(tr, trace_bound)`: symmetrize, clip negative eigenvalues,
    /// rescale.
    pub fn project_psd(&mut self) -> Result<()> {
        let bound = self.trace_bound;
        for theta in self.iter_mut() {
            let d = theta.rows();
            let sym = theta.add(&theta.transpose()).scale(real::<T>(0.5));
            let dec = eig_symmetric(&sym)?;
            let clipped: Vec<T> = dec.eigenvalues.iter().map(|&l| l.max(T::zero())).collect();
            let trace: T = clipped.iter().copied().sum();
            let scale = match bound {
                Some(m) if trace > m && trace > T::zero() => m / trace,
                _ => T::one(),
            };
            let mut rebuilt = DenseMatrix::zeros(d, d);
            for (l, &lam) in clipped.iter().enumerate() {
                let lam = lam * scale;
                if lam == T::zero() {
                    continue;
                }
                for i in 0..d {
                    let ui = dec.eigenvectors.get(i, l);
                    if ui == T::zero() {
                        continue;
                    }
                    for j in 0..d {
                        rebuilt.set(i, j, rebuilt.get(i, j) + lam * ui * dec.eigenvectors.get(j, l));
                    }
                }
            }
            *theta = rebuilt;
        }
        Ok(())
    }

    /// Spectral norms `(‖theta_low‖₂, ‖theta_high[r]‖₂...)`.
    pub fn spectral_norms(&self) -> Vec<T> {
        self.iter().map(DenseMatrix::spectral_norm).collect()
    }
}

fn relu<T: Float>(x: &DenseMatrix<T>) -> DenseMatrix<T> {
    x.map(|v| v.max(T::zero()))
}

fn check_dims<T: Float>(
    ops: &FrameletOperatorSet<T>,
    params: &FmpParams<T>,
    x: &DenseMatrix<T>,
) -> Result<()> {
    if x.rows() != ops.node_count() {
        return Err(Error::Dimension(format!(
            "signal has {} rows for {} nodes",
            x.rows(),
            ops.node_count()
        )));
    }
    if x.cols() != params.feature_dim() {
        return Err(Error::Dimension(format!(
            "signal has {} feature columns, parameters expect {}",
            x.cols(),
            params.feature_dim()
        )));
    }
    if params.theta_high.len() != ops.bank().high_pass_count() {
        return Err(Error::Dimension(format!(
            "{} high-pass thetas for a bank with {} high passes",
            params.theta_high.len(),
            ops.bank().high_pass_count()
        )));
    }
    Ok(())
}

/// Pre-activation message `Σ_r (Σ_l W_{r,l} X) Θ_r + W_{0,J} X Θ_0`.
pub fn fmp_message<T: Float>(
    ops: &FrameletOperatorSet<T>,
    params: &FmpParams<T>,
    x: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    check_dims(ops, params, x)?;
    let mut y = ops.apply_low_pass(x)?.matmul(&params.theta_low);
    match &params.theta_high_per_level {
        None => {
            for r in 1..=ops.bank().high_pass_count() {
                let stacked = ops.apply_high_stacked(r, x)?;
                y.add_assign(&stacked.matmul(&params.theta_high[r - 1]));
            }
        }
        Some(per_level) => {
            for r in 1..=ops.bank().high_pass_count() {
                for l in 1..=ops.levels() {
                    let w = ops.apply(crate::operators::OpIndex::HighPass { r, l }, x)?;
                    y.add_assign(&w.matmul(&per_level[r - 1][l - 1]));
                }
            }
        }
    }
    Ok(y)
}

/// One discrete layer: `X + σ(message)`, with `σ = ReLU` when
/// `with_activation` and the identity otherwise.
pub fn fmp_forward<T: Float>(
    ops: &FrameletOperatorSet<T>,
    params: &FmpParams<T>,
    x: &DenseMatrix<T>,
    with_activation: bool,
) -> Result<DenseMatrix<T>> {
    let y = fmp_message(ops, params, x)?;
    let z = if with_activation { relu(&y) } else { y };
    Ok(x.add(&z))
}

/// The continuous-time vector field: the message itself, no activation and
/// no residual shift.
pub fn fmp_ode_rhs<T: Float>(
    ops: &FrameletOperatorSet<T>,
    params: &FmpParams<T>,
    x: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    fmp_message(ops, params, x)
}

/// Reference GCN layer `relu(P X W)`.
pub fn gcn_forward<T: Float>(
    bundle: &LaplacianBundle<T>,
    w: &DenseMatrix<T>,
    x: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    if x.rows() != bundle.node_count() {
        return Err(Error::Dimension(format!(
            "signal has {} rows for {} nodes",
            x.rows(),
            bundle.node_count()
        )));
    }
    if x.cols() != w.rows() {
        return Err(Error::Dimension(format!(
            "signal has {} feature columns, weight expects {}",
            x.cols(),
            w.rows()
        )));
    }
    Ok(relu(&bundle.propagator().mul_dense(x).matmul(w)))
}

/// Result of one no-activation step checked against the trace-bound energy
/// sandwich `E(X) <= E(X') <= (M sqrt(KJ+1) + 1)^2 E(X)`.
pub fn energy_sandwich_check<T: Float>(
    bundle: &LaplacianBundle<T>,
    ops: &FrameletOperatorSet<T>,
    params: &FmpParams<T>,
    x: &DenseMatrix<T>,
) -> Result<(T, T, T)> {
    if !params.psd_project {
        return Err(Error::PreconditionsUnmet(
            "energy sandwich requires psd-projected parameters".into(),
        ));
    }
    if !ops.is_exact() {
        return Err(Error::PreconditionsUnmet(
            "energy sandwich requires exact operators".into(),
        ));
    }
    let m = params.trace_bound.ok_or_else(|| {
        Error::PreconditionsUnmet("energy sandwich requires a trace bound M".into())
    })?;
    // Validate the preconditions instead of trusting the flag.
    let tol = real::<T>(1e-8);
    for (idx, theta) in params.iter().enumerate() {
        if theta.max_asymmetry() > tol {
            return Err(Error::PreconditionsUnmet(format!(
                "theta {idx} is not symmetric"
            )));
        }
        let dec = eig_symmetric(theta)?;
        if dec.eigenvalues.iter().any(|&l| l < -tol) {
            return Err(Error::PreconditionsUnmet(format!(
                "theta {idx} has a negative eigenvalue"
            )));
        }
        if theta.trace() > m + tol {
            return Err(Error::PreconditionsUnmet(format!(
                "theta {idx} exceeds the trace bound"
            )));
        }
    }

    let lower = dirichlet_energy(bundle, x)?;
    let next = fmp_forward(ops, params, x, false)?;
    let observed = dirichlet_energy(bundle, &next)?;
    let kj = ops.bank().high_pass_count() * ops.levels();
    let factor = m * real::<T>((kj + 1) as f64).sqrt() + T::one();
    let upper = factor * factor * lower;

    let slack = real::<T>(1e-9) * lower.max(T::one());
    if observed < lower - slack || observed > upper + slack {
        return Err(Error::BoundViolated(format!(
            "energy sandwich violated: {} <= {} <= {} fails",
            lower.to_f64_lossy(),
            observed.to_f64_lossy(),
            upper.to_f64_lossy()
        )));
    }
    Ok((lower, observed, upper))
}

/// Perturbation growth of a stack of discrete layers against the layer-wise
/// Lipschitz envelope.
#[derive(Clone, Debug)]
pub struct StabilityReport<T> {
    /// Per-layer growth constant used for the envelope:
    /// `C = 1 + ‖Θ_0‖₂ ‖W_{0,J}‖₂ + Σ_{r,l} ‖Θ_r‖₂ ‖W_{r,l}‖₂`.
    pub c_constant: T,
    /// The same constant rewritten as `C = 1 + 4 C₁ sqrt(λ_max) max_r C_r`:
    /// the implied empirical `C₁`. Zero when the rewrite degenerates.
    pub c_one_empirical: T,
    /// Spectral norms `C_r` of the thetas, low pass first.
    pub theta_norms: Vec<T>,
    pub lambda_max: T,
    /// `‖X^(t) - X̃^(t)‖_F / ‖X^(0) - X̃^(0)‖_F` for `t = 1..layers`.
    pub per_layer_ratios: Vec<T>,
    /// `C^t` for `t = 1..layers`.
    pub bounds: Vec<T>,
}

impl<T: Float> StabilityReport<T> {
    /// Every observed ratio within its bound (plus absolute slack).
    pub fn holds(&self, slack: T) -> bool {
        self.per_layer_ratios
            .iter()
            .zip(&self.bounds)
            .all(|(&r, &b)| r <= b + slack)
    }
}

/// Run paired forward passes from `x0` and a seeded Gaussian perturbation of
/// scale `perturb_scale`, reporting growth ratios against `C^t`.
pub fn stability_probe<T: Float>(
    ops: &FrameletOperatorSet<T>,
    params: &FmpParams<T>,
    x0: &DenseMatrix<T>,
    perturb_scale: T,
    layers: usize,
    seed: u64,
) -> Result<StabilityReport<T>> {
    check_dims(ops, params, x0)?;
    let theta_norms = params.spectral_norms();
    let lambda_max = ops.eigenvalues()?.last().copied().unwrap_or(T::zero());

    let mut norm_term = theta_norms[0] * ops.low_pass_norm()?;
    for r in 1..=ops.bank().high_pass_count() {
        for l in 1..=ops.levels() {
            norm_term += theta_norms[r] * ops.high_pass_norm(r, l)?;
        }
    }
    let c_constant = T::one() + norm_term;
    let max_theta = theta_norms[1..]
        .iter()
        .copied()
        .fold(theta_norms[0], T::max);
    let denom = real::<T>(4.0) * lambda_max.sqrt() * max_theta;
    let c_one_empirical = if denom > T::zero() {
        norm_term / denom
    } else {
        T::zero()
    };

    let mut rng = Rng::from_seed(seed);
    let mut delta = DenseMatrix::zeros(x0.rows(), x0.cols());
    for v in delta.data_mut() {
        *v = rng.normal(T::zero(), T::one()) * perturb_scale;
    }
    let mut x = x0.clone();
    let mut x_tilde = x0.add(&delta);
    let initial_gap = x_tilde.sub(&x).frobenius_norm();

    let mut per_layer_ratios = Vec::with_capacity(layers);
    let mut bounds = Vec::with_capacity(layers);
    let mut envelope = T::one();
    for _ in 0..layers {
        x = fmp_forward(ops, params, &x, true)?;
        x_tilde = fmp_forward(ops, params, &x_tilde, true)?;
        envelope *= c_constant;
        let ratio = if initial_gap > T::zero() {
            x_tilde.sub(&x).frobenius_norm() / initial_gap
        } else {
            T::zero()
        };
        per_layer_ratios.push(ratio);
        bounds.push(envelope);
    }

    Ok(StabilityReport {
        c_constant,
        c_one_empirical,
        theta_norms,
        lambda_max,
        per_layer_ratios,
        bounds,
    })
}

impl<T: Float> FrameletOperatorSet<T> {
    /// `W_{0,J} X`; convenience alias used by the layers.
    pub fn apply_low_pass(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        self.apply(crate::operators::OpIndex::LowPass, x)
    }
}
