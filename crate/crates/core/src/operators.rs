//! The framelet operator family `{W_{0,J}} ∪ {W_{r,l}}`.
//!
//! Exact mode realizes each operator as `U diag(filter(scaled λ)) Uᵀ` from a
//! dense eigendecomposition. Chebyshev mode realizes the same family as
//! products of low-degree polynomial factors in the sparse Laplacian, built
//! from the two-scale relation: the low pass at level `l` is the factor chain
//! `Π_{j=l+1..n₀} a(λ̃/2^j)` truncated where `alpha` is flat, and the high
//! pass `beta_r(λ̃/2^l)` is one `b_r(λ̃/2^{l+1})` factor times the finer
//! low-pass chain.
//!
//! Convention: `W_{0,J}` filters with `alpha(λ̃/2)` and `W_{r,l}` with
//! `beta_r(λ̃/2^l)`, `l = 1..J`, on the dilated spectrum `λ̃ = λ/2^R`. This is
//! the unique pairing under which the dyadic telescoping collapses the frame
//! symbol to `s(λ) = alpha(λ̃/2^{J+1})²`.

use crate::chebyshev::{fit_chebyshev, FilterSource, PolynomialOperator};
use crate::error::{Error, Result};
use crate::graph::LaplacianBundle;
use crate::linalg::{CsrMatrix, DenseMatrix};
use crate::rng::Rng;
use crate::scalar::{real, Float};
use crate::spectral::{FilterBank, SpectralDecomposition};

/// Address of one operator in the family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpIndex {
    LowPass,
    /// High pass `r` in `1..=K` at level `l` in `1..=J`.
    HighPass { r: usize, l: usize },
}

enum Mode<T> {
    Exact {
        /// Eigenvalues of the Laplacian the set was built on.
        eigenvalues: Vec<T>,
        low_pass: DenseMatrix<T>,
        /// `high_pass[r - 1][l - 1]`.
        high_pass: Vec<Vec<DenseMatrix<T>>>,
        /// Cached `Σ_l W_{r,l}` per `r`, used by the message passing layers.
        stacked: Vec<DenseMatrix<T>>,
    },
    Chebyshev {
        laplacian: CsrMatrix<T>,
        lambda_max_bound: T,
        degree: usize,
        low_pass: PolynomialOperator<T>,
        high_pass: Vec<Vec<PolynomialOperator<T>>>,
    },
}

/// The family `{W_{0,J}} ∪ {W_{r,l} : r = 1..K, l = 1..J}` as applicable
/// linear operators.
pub struct FrameletOperatorSet<T> {
    bank: FilterBank<T>,
    levels: usize,
    dilation: i32,
    mode: Mode<T>,
    warnings: Vec<String>,
}

/// Smallest integer `R` with `lambda_max / 2^R <= ceiling`; 0 when the
/// spectrum is degenerate at or below zero. `R` may be negative.
pub fn dilation_scale<T: Float>(lambda_max: T, ceiling: T) -> i32 {
    if !(lambda_max > T::zero()) {
        return 0;
    }
    let ratio = (lambda_max.to_f64_lossy() / ceiling.to_f64_lossy()).log2();
    let mut r = ratio.ceil() as i32;
    let fits = |r: i32| lambda_max.to_f64_lossy() * 2.0f64.powi(-r) <= ceiling.to_f64_lossy();
    while !fits(r) {
        r += 1;
    }
    while r > i32::MIN + 1 && fits(r - 1) {
        r -= 1;
    }
    r
}

fn pow2<T: Float>(exp: i32) -> T {
    real(2.0f64.powi(exp))
}

impl<T: Float> FrameletOperatorSet<T> {
    pub fn bank(&self) -> &FilterBank<T> {
        &self.bank
    }

    /// Level count `J`.
    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Dilation scale `R`.
    pub fn dilation(&self) -> i32 {
        self.dilation
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.mode, Mode::Exact { .. })
    }

    /// Chebyshev degree, if approximated.
    pub fn degree(&self) -> Option<usize> {
        match &self.mode {
            Mode::Exact { .. } => None,
            Mode::Chebyshev { degree, .. } => Some(*degree),
        }
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn node_count(&self) -> usize {
        match &self.mode {
            Mode::Exact { low_pass, .. } => low_pass.rows(),
            Mode::Chebyshev { laplacian, .. } => laplacian.n(),
        }
    }

    /// `1 + K·J`.
    pub fn operator_count(&self) -> usize {
        1 + self.bank.high_pass_count() * self.levels
    }

    /// All indices in deterministic order: low pass, then `(r, l)` row-major.
    pub fn indices(&self) -> Vec<OpIndex> {
        let mut out = vec![OpIndex::LowPass];
        for r in 1..=self.bank.high_pass_count() {
            for l in 1..=self.levels {
                out.push(OpIndex::HighPass { r, l });
            }
        }
        out
    }

    fn check_index(&self, which: OpIndex) -> Result<()> {
        if let OpIndex::HighPass { r, l } = which {
            if r == 0 || r > self.bank.high_pass_count() || l == 0 || l > self.levels {
                return Err(Error::UnknownOperator { r, l });
            }
        }
        Ok(())
    }

    /// Apply one operator of the family to an `n x d` signal.
    pub fn apply(&self, which: OpIndex, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        self.check_index(which)?;
        if x.rows() != self.node_count() {
            return Err(Error::Dimension(format!(
                "signal has {} rows for {} nodes",
                x.rows(),
                self.node_count()
            )));
        }
        match &self.mode {
            Mode::Exact { low_pass, high_pass, .. } => Ok(match which {
                OpIndex::LowPass => low_pass.matmul(x),
                OpIndex::HighPass { r, l } => high_pass[r - 1][l - 1].matmul(x),
            }),
            Mode::Chebyshev {
                laplacian,
                lambda_max_bound,
                low_pass,
                high_pass,
                ..
            } => match which {
                OpIndex::LowPass => low_pass.apply(laplacian, *lambda_max_bound, x),
                OpIndex::HighPass { r, l } => {
                    high_pass[r - 1][l - 1].apply(laplacian, *lambda_max_bound, x)
                }
            },
        }
    }

    /// `Σ_l W_{r,l} X` for one high-pass index `r`.
    pub fn apply_high_stacked(&self, r: usize, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        if r == 0 || r > self.bank.high_pass_count() {
            return Err(Error::UnknownOperator { r, l: 0 });
        }
        match &self.mode {
            Mode::Exact { stacked, .. } => {
                if x.rows() != self.node_count() {
                    return Err(Error::Dimension(format!(
                        "signal has {} rows for {} nodes",
                        x.rows(),
                        self.node_count()
                    )));
                }
                Ok(stacked[r - 1].matmul(x))
            }
            Mode::Chebyshev { .. } => {
                let mut acc = DenseMatrix::zeros(x.rows(), x.cols());
                for l in 1..=self.levels {
                    acc.add_assign(&self.apply(OpIndex::HighPass { r, l }, x)?);
                }
                Ok(acc)
            }
        }
    }

    /// Dense realization of one operator (applies to the identity in
    /// Chebyshev mode); intended for small-graph diagnostics.
    pub fn to_dense(&self, which: OpIndex) -> Result<DenseMatrix<T>> {
        self.apply(which, &DenseMatrix::identity(self.node_count()))
    }

    /// Eigenvalues of the underlying Laplacian (exact mode only).
    pub fn eigenvalues(&self) -> Result<&[T]> {
        match &self.mode {
            Mode::Exact { eigenvalues, .. } => Ok(eigenvalues),
            Mode::Chebyshev { .. } => Err(Error::ExactModeRequired),
        }
    }

    fn scaled_eigenvalues(&self) -> Result<Vec<T>> {
        let shrink = pow2::<T>(-self.dilation);
        Ok(self.eigenvalues()?.iter().map(|&l| l * shrink).collect())
    }

    /// Spectral norm of `W_{0,J}` (exact mode).
    pub fn low_pass_norm(&self) -> Result<T> {
        let half = real::<T>(0.5);
        Ok(self
            .scaled_eigenvalues()?
            .iter()
            .map(|&lt| self.bank.scaling_low(lt * half).abs())
            .fold(T::zero(), T::max))
    }

    /// Spectral norm of `W_{r,l}` (exact mode).
    pub fn high_pass_norm(&self, r: usize, l: usize) -> Result<T> {
        self.check_index(OpIndex::HighPass { r, l })?;
        let shrink = pow2::<T>(-(l as i32));
        Ok(self
            .scaled_eigenvalues()?
            .iter()
            .map(|&lt| self.bank.scaling_high(r, lt * shrink).abs())
            .fold(T::zero(), T::max))
    }

    /// Spectral norm of the stacked high passes of one level:
    /// `max_ℓ sqrt(Σ_r beta_r(λ̃_ℓ / 2^l)²)` (exact mode).
    pub fn stacked_level_norm(&self, l: usize) -> Result<T> {
        if l == 0 || l > self.levels {
            return Err(Error::UnknownOperator { r: 1, l });
        }
        let shrink = pow2::<T>(-(l as i32));
        Ok(self
            .scaled_eigenvalues()?
            .iter()
            .map(|&lt| self.bank.scaling_high_sq_sum(lt * shrink).sqrt())
            .fold(T::zero(), T::max))
    }

    /// Frame symbol `s(λ) = alpha(λ̃/2)² + Σ_{r,l} beta_r(λ̃/2^l)²` per
    /// eigenvalue (exact mode).
    pub fn frame_symbol(&self) -> Result<Vec<T>> {
        let half = real::<T>(0.5);
        let scaled = self.scaled_eigenvalues()?;
        Ok(scaled
            .iter()
            .map(|&lt| {
                let a = self.bank.scaling_low(lt * half);
                let mut s = a * a;
                for l in 1..=self.levels {
                    s += self.bank.scaling_high_sq_sum(lt * pow2::<T>(-(l as i32)));
                }
                s
            })
            .collect())
    }

    /// Measured hop radius of node `node`'s influence under the widest
    /// operator (Chebyshev mode): entries of `W e_node` above a relative
    /// threshold, ranked by BFS distance over the Laplacian pattern.
    pub fn hop_reach(&self, node: usize) -> Result<usize> {
        match &self.mode {
            Mode::Exact { .. } => Err(Error::ChebyshevModeRequired),
            Mode::Chebyshev {
                laplacian,
                lambda_max_bound,
                low_pass,
                high_pass,
                ..
            } => {
                let widest = std::iter::once(low_pass)
                    .chain(high_pass.iter().flatten())
                    .max_by_key(|op| op.reach())
                    .expect("at least the low pass exists");
                let mut e = DenseMatrix::zeros(laplacian.n(), 1);
                e.set(node, 0, T::one());
                let y = widest.apply(laplacian, *lambda_max_bound, &e)?;
                Ok(measured_reach(laplacian, node, &y))
            }
        }
    }

    /// Sum of recorded per-factor fit errors across all operators; an upper
    /// envelope for approximation-induced defects (Chebyshev mode).
    pub fn fit_error_budget(&self) -> Result<T> {
        match &self.mode {
            Mode::Exact { .. } => Err(Error::ChebyshevModeRequired),
            Mode::Chebyshev { low_pass, high_pass, .. } => Ok(std::iter::once(low_pass)
                .chain(high_pass.iter().flatten())
                .map(PolynomialOperator::error_budget)
                .fold(T::zero(), |a, b| a + b)),
        }
    }
}

/// BFS over the sparse pattern; radius of entries of `y` exceeding
/// `1e-12 * max|y|`.
pub fn measured_reach<T: Float>(pattern: &CsrMatrix<T>, source: usize, y: &DenseMatrix<T>) -> usize {
    let n = pattern.n();
    let max_abs = y.max_abs();
    if max_abs == T::zero() {
        return 0;
    }
    let threshold = max_abs * real::<T>(1e-12);
    let mut dist = vec![usize::MAX; n];
    let mut queue = std::collections::VecDeque::new();
    dist[source] = 0;
    queue.push_back(source);
    while let Some(i) = queue.pop_front() {
        for (j, _) in pattern.row_entries(i) {
            if dist[j] == usize::MAX {
                dist[j] = dist[i] + 1;
                queue.push_back(j);
            }
        }
    }
    let mut reach = 0usize;
    for i in 0..n {
        if y.get(i, 0).abs() > threshold && dist[i] != usize::MAX {
            reach = reach.max(dist[i]);
        }
    }
    reach
}

fn vanishing_level_warnings<T: Float>(
    bank: &FilterBank<T>,
    levels: usize,
    scaled_max: T,
) -> Vec<String> {
    let mut warnings = Vec::new();
    for l in 1..=levels {
        let arg = scaled_max * pow2::<T>(-(l as i32));
        let peak = (1..=bank.high_pass_count())
            .map(|r| bank.scaling_high(r, arg).abs())
            .fold(T::zero(), T::max);
        if peak < real::<T>(1e-14) {
            warnings.push(format!(
                "high-pass responses at level {l} all vanish below 1e-14 on this spectrum"
            ));
        }
    }
    warnings
}

/// Build the family in exact mode from an eigendecomposition of the
/// normalized Laplacian.
pub fn build_exact_operators<T: Float>(
    dec: &SpectralDecomposition<T>,
    bank: FilterBank<T>,
    levels: usize,
) -> Result<FrameletOperatorSet<T>> {
    if levels == 0 {
        return Err(Error::InvalidArgument("level count J must be >= 1".into()));
    }
    let lambda_max = dec.lambda_max();
    let dilation = dilation_scale(lambda_max, bank.domain_ceiling());
    let shrink = pow2::<T>(-dilation);
    let half = real::<T>(0.5);

    let low_pass = dec.filter_matrix(|l| bank.scaling_low(l * shrink * half));
    let mut high_pass = Vec::with_capacity(bank.high_pass_count());
    let mut stacked = Vec::with_capacity(bank.high_pass_count());
    for r in 1..=bank.high_pass_count() {
        let mut per_level = Vec::with_capacity(levels);
        for l in 1..=levels {
            let level_shrink = shrink * pow2::<T>(-(l as i32));
            per_level.push(dec.filter_matrix(|lam| bank.scaling_high(r, lam * level_shrink)));
        }
        let mut sum = per_level[0].clone();
        for w in &per_level[1..] {
            sum.add_assign(w);
        }
        high_pass.push(per_level);
        stacked.push(sum);
    }
    let warnings = vanishing_level_warnings(&bank, levels, lambda_max * shrink);
    Ok(FrameletOperatorSet {
        bank,
        levels,
        dilation,
        mode: Mode::Exact {
            eigenvalues: dec.eigenvalues.clone(),
            low_pass,
            high_pass,
            stacked,
        },
        warnings,
    })
}

/// Build the family in Chebyshev mode from a Laplacian bundle, degree `m`
/// per factor.
pub fn build_approx_operators<T: Float>(
    bundle: &LaplacianBundle<T>,
    bank: FilterBank<T>,
    levels: usize,
    degree: usize,
) -> Result<FrameletOperatorSet<T>> {
    if levels == 0 {
        return Err(Error::InvalidArgument("level count J must be >= 1".into()));
    }
    if degree == 0 {
        return Err(Error::InvalidArgument("chebyshev degree must be >= 1".into()));
    }
    let lambda_max = bundle.lambda_max_estimate();
    let dilation = dilation_scale(lambda_max, bank.domain_ceiling());
    // Degenerate spectra (edgeless graphs) get a sliver of an interval so the
    // factor fits stay well posed; the filters evaluate to their 0-limits.
    let scaled_max = (lambda_max * pow2::<T>(-dilation)).max(real(1e-12));

    // Chain depth: unroll the low-pass product down to where alpha is flat
    // (within 1e-6 of 1 in square for banks without an exact flat region).
    let flat = bank.flat_radius();
    let mut chain_depth = 1usize;
    loop {
        let arg = scaled_max * pow2::<T>(-(chain_depth as i32));
        let flat_enough = if flat > T::zero() {
            arg <= flat
        } else {
            let a = bank.scaling_low(arg);
            T::one() - a * a <= real::<T>(1e-6)
        };
        if flat_enough || chain_depth >= 64 {
            break;
        }
        chain_depth += 1;
    }

    // Factor chain realizing alpha(lambda~ / 2^s): filter factors a at the
    // scales j = s+1..=chain_depth, and, for banks without an exact flat
    // region, a fitted terminal scaling factor at the deepest scale so the
    // product converges to the exact operator instead of plateauing at a
    // truncation bias. Flat banks end on alpha = 1 exactly.
    let scaling_chain = |s: usize| -> Result<Vec<_>> {
        let mut factors = Vec::new();
        for j in (s + 1)..=chain_depth {
            let end = scaled_max * pow2::<T>(-(j as i32));
            let fit = fit_chebyshev(
                |xi| bank.filter_low(xi),
                end,
                degree,
                FilterSource::FilterLow,
            )?;
            factors.push((fit, -(dilation + j as i32)));
        }
        if flat == T::zero() {
            let terminal = chain_depth.max(s);
            let end = scaled_max * pow2::<T>(-(terminal as i32));
            let fit = fit_chebyshev(
                |xi| bank.scaling_low(xi),
                end,
                degree,
                FilterSource::ScalingLow,
            )?;
            factors.push((fit, -(dilation + terminal as i32)));
        }
        Ok(factors)
    };

    let low_pass = PolynomialOperator { factors: scaling_chain(1)? };

    let mut high_pass = Vec::with_capacity(bank.high_pass_count());
    for r in 1..=bank.high_pass_count() {
        let mut per_level = Vec::with_capacity(levels);
        for l in 1..=levels {
            let j0 = l + 1;
            let end = scaled_max * pow2::<T>(-(j0 as i32));
            let head = fit_chebyshev(
                |xi| bank.filter_high(r, xi),
                end,
                degree,
                FilterSource::FilterHigh(r),
            )?;
            let mut factors = vec![(head, -(dilation + j0 as i32))];
            factors.extend(scaling_chain(j0)?);
            per_level.push(PolynomialOperator { factors });
        }
        high_pass.push(per_level);
    }

    Ok(FrameletOperatorSet {
        bank,
        levels,
        dilation,
        mode: Mode::Chebyshev {
            laplacian: bundle.norm_laplacian().clone(),
            lambda_max_bound: lambda_max,
            degree,
            low_pass,
            high_pass,
        },
        warnings: Vec::new(),
    })
}

/// Frame bounds, reconstruction residual, per-level norms, and the analytic
/// tightness deficit of an exact operator family.
#[derive(Clone, Debug)]
pub struct TightnessReport<T> {
    pub bank: &'static str,
    pub levels: usize,
    pub dilation: i32,
    /// Frame lower bound `A = min s(λ)`.
    pub frame_lower: T,
    /// Frame upper bound `B = max s(λ)`.
    pub frame_upper: T,
    /// `‖Σ WᵀW - I‖_F` over the whole family.
    pub reconstruction_error: T,
    /// `max_λ (1 - alpha(λ̃/2^{J+1})²)`, the analytic tightness deficit.
    pub deficit_bound: T,
    /// `‖stacked high pass at level l‖₂` for `l = 1..J`.
    pub per_level_norms: Vec<T>,
    /// Worst `|‖f‖² - Σ coefficient energies|` over 16 random unit vectors.
    pub parseval_residual: T,
    /// Active exponent pairing, recorded verbatim in reports.
    pub convention: &'static str,
}

/// Exponent pairing used by this crate (see the module docs).
pub const OPERATOR_CONVENTION: &str =
    "W[0,J] = alpha(lambda~/2); W[r,l] = beta_r(lambda~/2^l), l = 1..J; lambda~ = lambda/2^R";

/// Compute the tightness diagnostics of an exact family.
pub fn tightness_report<T: Float>(ops: &FrameletOperatorSet<T>) -> Result<TightnessReport<T>> {
    let symbol = ops.frame_symbol().map_err(|_| Error::ExactModeRequired)?;
    let frame_lower = symbol.iter().copied().fold(T::infinity(), T::min);
    let frame_upper = symbol.iter().copied().fold(T::neg_infinity(), T::max);

    let n = ops.node_count();
    let mut gram = DenseMatrix::<T>::zeros(n, n);
    for which in ops.indices() {
        let w = ops.to_dense(which)?;
        // W is symmetric, so WᵀW = W·W.
        gram.add_assign(&w.matmul(&w));
    }
    for i in 0..n {
        gram.set(i, i, gram.get(i, i) - T::one());
    }
    let reconstruction_error = gram.frobenius_norm();

    let shrink = pow2::<T>(-ops.dilation());
    let top_shrink = pow2::<T>(-(ops.levels() as i32 + 1));
    let deficit_bound = ops
        .eigenvalues()?
        .iter()
        .map(|&lam| {
            let a = ops.bank().scaling_low(lam * shrink * top_shrink);
            (T::one() - a * a).max(T::zero())
        })
        .fold(T::zero(), T::max);

    let per_level_norms: Vec<T> = (1..=ops.levels())
        .map(|l| ops.stacked_level_norm(l))
        .collect::<Result<_>>()?;

    // Parseval probe on 16 seeded random unit vectors.
    let mut rng = Rng::from_seed(0x5eed_f0a1);
    let mut parseval_residual = T::zero();
    for _ in 0..16 {
        let mut f = DenseMatrix::zeros(n, 1);
        for i in 0..n {
            f.set(i, 0, rng.normal(T::zero(), T::one()));
        }
        let norm = f.frobenius_norm();
        if norm == T::zero() {
            continue;
        }
        let f = f.scale(norm.recip());
        let mut coeff_energy = T::zero();
        for which in ops.indices() {
            let w = ops.apply(which, &f)?;
            coeff_energy += w.dot(&w);
        }
        parseval_residual = parseval_residual.max((T::one() - coeff_energy).abs());
    }

    Ok(TightnessReport {
        bank: ops.bank().name(),
        levels: ops.levels(),
        dilation: ops.dilation(),
        frame_lower,
        frame_upper,
        reconstruction_error,
        deficit_bound,
        per_level_norms,
        parseval_residual,
        convention: OPERATOR_CONVENTION,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_laplacian_bundle, generate_sbm, Graph, SbmConfig};
    use crate::spectral::{eig_symmetric, haar_bank, nu_bank};

    fn two_node_graph() -> Graph<f64> {
        Graph::build(
            2,
            &[(0, 1, 1.0)],
            DenseMatrix::from_rows(&[vec![1.0], vec![1.0]]),
            None,
        )
        .unwrap()
    }

    fn exact_set(
        graph: &Graph<f64>,
        bank: FilterBank<f64>,
        levels: usize,
    ) -> FrameletOperatorSet<f64> {
        let bundle = build_laplacian_bundle(graph).unwrap();
        let dec = eig_symmetric(&bundle.norm_laplacian().to_dense()).unwrap();
        build_exact_operators(&dec, bank, levels).unwrap()
    }

    #[test]
    fn dilation_scale_examples() {
        // Two-node graph: top eigenvalue 1, Haar ceiling pi -> R = -1.
        assert_eq!(dilation_scale(1.0f64, std::f64::consts::PI), -1);
        // Nu ceiling 1/2 with lambda_max 1 -> R = 1.
        assert_eq!(dilation_scale(1.0f64, 0.5), 1);
        assert_eq!(dilation_scale(0.5f64, 0.5), 0);
        assert_eq!(dilation_scale(0.0f64, 0.5), 0);
    }

    #[test]
    fn constant_eigenvector_routing() {
        let g = two_node_graph();
        let ops = exact_set(&g, haar_bank(), 2);
        // u1 = normalized constant direction is the lambda = 0 eigenvector.
        let u1 = DenseMatrix::column(&[std::f64::consts::FRAC_1_SQRT_2; 2]);
        let low = ops.apply(OpIndex::LowPass, &u1).unwrap();
        assert!(low.sub(&u1).max_abs() < 1e-12);
        for l in 1..=2 {
            let high = ops.apply(OpIndex::HighPass { r: 1, l }, &u1).unwrap();
            assert!(high.max_abs() < 1e-12);
        }
    }

    #[test]
    fn two_node_haar_low_pass_diagonal() {
        let g = two_node_graph();
        let ops = exact_set(&g, haar_bank(), 1);
        assert_eq!(ops.dilation(), -1);
        // Filter values alpha(0) = 1 and alpha(lambda2~ / 2) with lambda2~ = 2.
        let bank = haar_bank::<f64>();
        let expected_top = bank.scaling_low(1.0);
        let dec_vals = [1.0, expected_top];
        // Check against the eigenbasis realization: W u_l = alpha_l u_l.
        let bundle = build_laplacian_bundle(&g).unwrap();
        let dec = eig_symmetric(&bundle.norm_laplacian().to_dense()).unwrap();
        for (l, &expect) in dec_vals.iter().enumerate() {
            let u = DenseMatrix::column(&dec.eigenvectors.col_to_vec(l));
            let w = ops.apply(OpIndex::LowPass, &u).unwrap();
            assert!(w.sub(&u.scale(expect)).max_abs() < 1e-12, "column {l}");
        }
    }

    #[test]
    fn nu_reconstruction_is_exact() {
        let g: Graph<f64> =
            generate_sbm(3, &SbmConfig { n: 12, ..SbmConfig::default() }).unwrap();
        let ops = exact_set(&g, nu_bank(), 2);
        let n = ops.node_count();
        let mut acc = DenseMatrix::<f64>::zeros(n, n);
        for which in ops.indices() {
            let w = ops.to_dense(which).unwrap();
            acc.add_assign(&w.matmul(&w));
        }
        for i in 0..n {
            acc.set(i, i, acc.get(i, i) - 1.0);
        }
        assert!(acc.frobenius_norm() <= 1e-10);
    }

    #[test]
    fn unknown_operator_index_errors() {
        let g = two_node_graph();
        let ops = exact_set(&g, haar_bank(), 1);
        let x = DenseMatrix::zeros(2, 1);
        assert!(matches!(
            ops.apply(OpIndex::HighPass { r: 2, l: 1 }, &x),
            Err(Error::UnknownOperator { .. })
        ));
        assert!(matches!(
            ops.apply(OpIndex::HighPass { r: 1, l: 3 }, &x),
            Err(Error::UnknownOperator { .. })
        ));
    }

    #[test]
    fn zero_signal_maps_to_zero() {
        let g = two_node_graph();
        let ops = exact_set(&g, nu_bank(), 1);
        let x = DenseMatrix::zeros(2, 3);
        for which in ops.indices() {
            assert_eq!(ops.apply(which, &x).unwrap().max_abs(), 0.0);
        }
    }

    #[test]
    fn tightness_report_nu_is_tight() {
        let g: Graph<f64> =
            generate_sbm(5, &SbmConfig { n: 16, ..SbmConfig::default() }).unwrap();
        let ops = exact_set(&g, nu_bank(), 2);
        let report = tightness_report(&ops).unwrap();
        assert!((report.frame_lower - 1.0).abs() <= 1e-10);
        assert!((report.frame_upper - 1.0).abs() <= 1e-10);
        assert!(report.reconstruction_error <= 1e-9);
        assert!(report.parseval_residual <= 1e-9);
        assert!(report.deficit_bound <= 1e-12);
    }

    #[test]
    fn tightness_report_haar_deficit() {
        let g: Graph<f64> =
            generate_sbm(5, &SbmConfig { n: 16, ..SbmConfig::default() }).unwrap();
        let ops = exact_set(&g, haar_bank(), 4);
        let report = tightness_report(&ops).unwrap();
        assert!(report.frame_upper <= 1.0 + 1e-12);
        assert!(1.0 - report.frame_lower <= report.deficit_bound + 1e-12);
        assert!(report.parseval_residual <= report.deficit_bound + 1e-9);
        // Haar deficit is positive: the frame is near-tight, not tight.
        assert!(report.deficit_bound > 0.0);
    }

    #[test]
    fn tightness_requires_exact_mode() {
        let g = two_node_graph();
        let bundle = build_laplacian_bundle(&g).unwrap();
        let ops = build_approx_operators(&bundle, haar_bank(), 1, 4).unwrap();
        assert!(matches!(
            tightness_report(&ops),
            Err(Error::ExactModeRequired)
        ));
    }

    #[test]
    fn realized_operators_are_symmetric() {
        let g: Graph<f64> =
            generate_sbm(6, &SbmConfig { n: 14, ..SbmConfig::default() }).unwrap();
        let exact = exact_set(&g, haar_bank(), 2);
        for which in exact.indices() {
            assert!(exact.to_dense(which).unwrap().max_asymmetry() <= 1e-10);
        }
        let bundle = build_laplacian_bundle(&g).unwrap();
        let approx = build_approx_operators(&bundle, haar_bank(), 2, 8).unwrap();
        for which in approx.indices() {
            assert!(approx.to_dense(which).unwrap().max_asymmetry() <= 1e-10);
        }
    }

    #[test]
    fn operator_count_matches_family_size() {
        let g = two_node_graph();
        let ops = exact_set(&g, nu_bank(), 3);
        assert_eq!(ops.operator_count(), 1 + 2 * 3);
        assert_eq!(ops.indices().len(), ops.operator_count());
    }

    #[test]
    fn operators_commute() {
        let g: Graph<f64> =
            generate_sbm(11, &SbmConfig { n: 20, ..SbmConfig::default() }).unwrap();
        let ops = exact_set(&g, haar_bank(), 2);
        let indices = ops.indices();
        for a in &indices {
            for b in &indices {
                let wa = ops.to_dense(*a).unwrap();
                let wb = ops.to_dense(*b).unwrap();
                let ab = wa.matmul(&wb);
                let ba = wb.matmul(&wa);
                assert!(ab.sub(&ba).frobenius_norm() <= 1e-9);
            }
        }
    }

    #[test]
    fn stacked_high_matches_per_level_sum() {
        let g: Graph<f64> =
            generate_sbm(2, &SbmConfig { n: 10, ..SbmConfig::default() }).unwrap();
        let ops = exact_set(&g, haar_bank(), 3);
        let x = {
            let mut rng = Rng::from_seed(4);
            let mut x = DenseMatrix::zeros(10, 2);
            for v in x.data_mut() {
                *v = rng.normal(0.0, 1.0);
            }
            x
        };
        let stacked = ops.apply_high_stacked(1, &x).unwrap();
        let mut manual = DenseMatrix::zeros(10, 2);
        for l in 1..=3 {
            manual.add_assign(&ops.apply(OpIndex::HighPass { r: 1, l }, &x).unwrap());
        }
        assert!(stacked.sub(&manual).max_abs() <= 1e-12);
    }

    #[test]
    fn hop_reach_requires_chebyshev_mode() {
        let g = two_node_graph();
        let ops = exact_set(&g, haar_bank(), 1);
        assert!(matches!(ops.hop_reach(0), Err(Error::ChebyshevModeRequired)));
    }

    #[test]
    fn edgeless_graph_builds_in_both_modes() {
        // Degenerate spectrum: R = 0, low pass is the identity, high passes
        // vanish.
        let g: Graph<f64> =
            Graph::build(3, &[], DenseMatrix::zeros(3, 1), None).unwrap();
        let bundle = build_laplacian_bundle(&g).unwrap();
        let x = DenseMatrix::from_rows(&[vec![1.0], vec![-2.0], vec![0.5]]);

        let dec = eig_symmetric(&bundle.norm_laplacian().to_dense()).unwrap();
        let exact = build_exact_operators(&dec, haar_bank(), 2).unwrap();
        assert_eq!(exact.dilation(), 0);
        assert!(exact.apply(OpIndex::LowPass, &x).unwrap().sub(&x).max_abs() < 1e-12);

        let approx = build_approx_operators(&bundle, haar_bank(), 2, 6).unwrap();
        assert!(approx.apply(OpIndex::LowPass, &x).unwrap().sub(&x).max_abs() < 1e-9);
        for l in 1..=2 {
            let y = approx.apply(OpIndex::HighPass { r: 1, l }, &x).unwrap();
            assert!(y.max_abs() < 1e-9);
        }
    }

    #[test]
    fn deep_levels_emit_vanishing_warning() {
        let g = two_node_graph();
        // At this dilation the nu bank's high passes all fall below 1e-14.
        let ops = exact_set(&g, nu_bank(), 2);
        assert!(!ops.warnings().is_empty());
    }
}
