//! Chebyshev fits of spectral filters and matrix-free polynomial application.
//!
//! A [`ChebyshevFilter`] approximates a scalar filter on `[0, E]` by a degree
//! `m` Chebyshev series sampled at the Gauss nodes. Applying it to a sparse
//! operator costs `m` sparse products per feature column and touches only the
//! `m`-hop neighborhood of each node.

use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, DenseMatrix};
use crate::scalar::{real, Float};

/// Which filter a Chebyshev fit approximates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FilterSource {
    FilterLow,
    FilterHigh(usize),
    ScalingLow,
    ScalingHigh(usize),
    Custom(&'static str),
}

/// Degree-`m` Chebyshev series of a scalar function on `[0, interval_end]`.
///
/// Coefficients are stored ready to use: `p(xi) = sum_j c_j T_j(t(xi))` with
/// `t` the affine map of `[0, interval_end]` onto `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct ChebyshevFilter<T> {
    coefficients: Vec<T>,
    interval_end: T,
    source: FilterSource,
    sup_error: T,
}

/// Fit `f` on `[0, interval_end]` with a degree-`m` series via the discrete
/// cosine projection at the `m + 1` Chebyshev-Gauss nodes. The recorded
/// `sup_error` is the max pointwise deviation on a 2048-point grid.
pub fn fit_chebyshev<T: Float>(
    f: impl Fn(T) -> T,
    interval_end: T,
    m: usize,
    source: FilterSource,
) -> Result<ChebyshevFilter<T>> {
    if m < 1 {
        return Err(Error::InvalidArgument("chebyshev degree must be >= 1".into()));
    }
    if !(interval_end > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "fit interval end must be positive, got {interval_end}"
        )));
    }
    let nodes = m + 1;
    let half = real::<T>(0.5);
    // Sample at x_k = cos(pi (k + 1/2) / (m + 1)) mapped into [0, E].
    let mut angles = Vec::with_capacity(nodes);
    let mut samples = Vec::with_capacity(nodes);
    for k in 0..nodes {
        let angle = T::PI() * (real::<T>(k as f64) + half) / real::<T>(nodes as f64);
        let x = angle.cos();
        let xi = (x + T::one()) * half * interval_end;
        let s = f(xi);
        if !s.is_finite() {
            return Err(Error::NonFiniteSample(xi.to_f64_lossy()));
        }
        angles.push(angle);
        samples.push(s);
    }
    let mut coefficients = Vec::with_capacity(nodes);
    for j in 0..nodes {
        let mut acc = T::zero();
        for k in 0..nodes {
            acc += samples[k] * (angles[k] * real::<T>(j as f64)).cos();
        }
        let weight = if j == 0 {
            T::one() / real::<T>(nodes as f64)
        } else {
            real::<T>(2.0) / real::<T>(nodes as f64)
        };
        coefficients.push(acc * weight);
    }
    let mut filter = ChebyshevFilter {
        coefficients,
        interval_end,
        source,
        sup_error: T::zero(),
    };
    let mut sup = T::zero();
    for k in 0..2048 {
        let xi = interval_end * real::<T>(k as f64) / real::<T>(2047.0);
        sup = sup.max((filter.eval(xi) - f(xi)).abs());
    }
    filter.sup_error = sup;
    Ok(filter)
}

impl<T: Float> ChebyshevFilter<T> {
    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn coefficients(&self) -> &[T] {
        &self.coefficients
    }

    pub fn interval_end(&self) -> T {
        self.interval_end
    }

    pub fn source(&self) -> FilterSource {
        self.source
    }

    /// Recorded sup-norm fit error.
    pub fn sup_error(&self) -> T {
        self.sup_error
    }

    /// Evaluate the series at a scalar `xi` in `[0, interval_end]`.
    pub fn eval(&self, xi: T) -> T {
        let t = real::<T>(2.0) * xi / self.interval_end - T::one();
        // Clenshaw recurrence.
        let mut b1 = T::zero();
        let mut b2 = T::zero();
        let two_t = t + t;
        for &c in self.coefficients.iter().rev() {
            let next = two_t * b1 - b2 + c;
            b2 = b1;
            b1 = next;
        }
        b1 - t * b2
    }

    /// Apply `p(2^scale_exp L) X` through the three-term recurrence.
    ///
    /// `lambda_max_bound` must dominate the spectrum of `L`; the scaled bound
    /// has to fall inside the fit interval.
    pub fn apply(
        &self,
        l: &CsrMatrix<T>,
        scale_exp: i32,
        lambda_max_bound: T,
        x: &DenseMatrix<T>,
    ) -> Result<DenseMatrix<T>> {
        let scale = real::<T>(2.0f64.powi(scale_exp));
        let scaled_bound = scale * lambda_max_bound;
        if scaled_bound > self.interval_end * real::<T>(1.0 + 1e-9) {
            return Err(Error::SpectrumOutsideDomain {
                bound: scaled_bound.to_f64_lossy(),
                end: self.interval_end.to_f64_lossy(),
            });
        }
        if x.rows() != l.n() {
            return Err(Error::Dimension(format!(
                "operand has {} rows for an {}-node operator",
                x.rows(),
                l.n()
            )));
        }
        // Affine map: t(M) = (2 / E) * scale * L - I.
        let a = real::<T>(2.0) * scale / self.interval_end;
        let apply_t = |v: &DenseMatrix<T>| -> DenseMatrix<T> {
            let mut out = l.mul_dense(v);
            for (o, &s) in out.data_mut().iter_mut().zip(v.data()) {
                *o = *o * a - s;
            }
            out
        };

        let mut acc = x.scale(self.coefficients[0]);
        if self.coefficients.len() == 1 {
            return Ok(acc);
        }
        let mut t_prev = x.clone();
        let mut t_cur = apply_t(x);
        acc.axpy(self.coefficients[1], &t_cur);
        for &c in &self.coefficients[2..] {
            let mut t_next = apply_t(&t_cur);
            t_next = t_next.scale(real::<T>(2.0));
            t_next.axpy(-T::one(), &t_prev);
            acc.axpy(c, &t_next);
            t_prev = t_cur;
            t_cur = t_next;
        }
        Ok(acc)
    }
}

/// One framelet operator as an ordered product of Chebyshev filter factors,
/// each applied to the same Laplacian at its own dyadic scale.
#[derive(Clone, Debug)]
pub struct PolynomialOperator<T> {
    /// `(filter, scale_exp)` pairs; factor `i` evaluates on `2^scale_exp L`.
    pub factors: Vec<(ChebyshevFilter<T>, i32)>,
}

impl<T: Float> PolynomialOperator<T> {
    /// Product of factor applications, rightmost factor first. Factors are
    /// polynomials in one matrix, so they commute and the order is purely a
    /// determinism convention.
    pub fn apply(
        &self,
        l: &CsrMatrix<T>,
        lambda_max_bound: T,
        x: &DenseMatrix<T>,
    ) -> Result<DenseMatrix<T>> {
        let mut cur = x.clone();
        for (filter, scale_exp) in self.factors.iter().rev() {
            cur = filter.apply(l, *scale_exp, lambda_max_bound, &cur)?;
        }
        Ok(cur)
    }

    /// Total polynomial degree: hops of graph distance one application can
    /// propagate information.
    pub fn reach(&self) -> usize {
        self.factors.iter().map(|(f, _)| f.degree()).sum()
    }

    /// Worst recorded sup-norm fit error over the factors, a cheap budget for
    /// the whole product (each factor is bounded by 1 in magnitude).
    pub fn error_budget(&self) -> T {
        self.factors
            .iter()
            .map(|(f, _)| f.sup_error())
            .fold(T::zero(), |a, b| a + b)
    }
}
