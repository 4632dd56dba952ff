//! Dense symmetric eigendecomposition and filter banks.

pub mod bank;

pub use bank::{haar_bank, nu_bank, FilterBank};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::{real, Float};

/// Eigenpairs of a symmetric matrix: ascending eigenvalues and an orthonormal
/// matrix whose column `l` pairs with `eigenvalues[l]`.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition<T> {
    pub eigenvalues: Vec<T>,
    pub eigenvectors: DenseMatrix<T>,
}

impl<T: Float> SpectralDecomposition<T> {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn lambda_max(&self) -> T {
        *self.eigenvalues.last().expect("non-empty decomposition")
    }

    /// `U diag(f(λ)) Uᵀ` for a scalar spectral filter `f`.
    pub fn filter_matrix(&self, f: impl Fn(T) -> T) -> DenseMatrix<T> {
        let n = self.n();
        let u = &self.eigenvectors;
        // Scale columns of U by f(λ), then multiply by Uᵀ.
        let mut scaled = u.clone();
        for l in 0..n {
            let fl = f(self.eigenvalues[l]);
            for i in 0..n {
                scaled.set(i, l, scaled.get(i, l) * fl);
            }
        }
        let mut out = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for l in 0..n {
                let s = scaled.get(i, l);
                if s == T::zero() {
                    continue;
                }
                let out_row = out.row_mut(i);
                for j in 0..n {
                    out_row[j] += s * u.get(j, l);
                }
            }
        }
        out
    }

    /// Max orthonormality defect `‖UᵀU - I‖_∞`.
    pub fn orthonormality_defect(&self) -> T {
        let u = &self.eigenvectors;
        let gram = u.transpose_matmul(u);
        let mut worst = T::zero();
        for i in 0..gram.rows() {
            for j in 0..gram.cols() {
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max((gram.get(i, j) - target).abs());
            }
        }
        worst
    }

    /// Max residual `‖M U - U Λ‖_∞`.
    pub fn residual(&self, m: &DenseMatrix<T>) -> T {
        let mu = m.matmul(&self.eigenvectors);
        let mut worst = T::zero();
        for i in 0..mu.rows() {
            for l in 0..mu.cols() {
                let r = mu.get(i, l) - self.eigenvectors.get(i, l) * self.eigenvalues[l];
                worst = worst.max(r.abs());
            }
        }
        worst
    }
}

/// Cyclic Jacobi eigensolver for dense symmetric matrices.
///
/// Rotations sweep the upper triangle row-major until the off-diagonal
/// Frobenius norm drops below `1e-12 ‖M‖_F`, with a hard cap of 100 sweeps.
/// Deterministic: fixed sweep order, eigenvalues sorted ascending, and each
/// eigenvector's largest-magnitude entry made positive.
pub fn eig_symmetric<T: Float>(m: &DenseMatrix<T>) -> Result<SpectralDecomposition<T>> {
    let n = m.rows();
    if n == 0 || m.cols() != n {
        return Err(Error::Dimension(format!(
            "eigensolver needs a square non-empty matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let asym = m.max_asymmetry().to_f64_lossy();
    if asym > 1e-10 {
        return Err(Error::NotSymmetric(asym));
    }

    let mut a = m.clone();
    // Symmetrize exactly so rotations preserve symmetry bit-for-bit.
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = (a.get(i, j) + a.get(j, i)) * real::<T>(0.5);
            a.set(i, j, avg);
            a.set(j, i, avg);
        }
    }
    let mut v = DenseMatrix::<T>::identity(n);
    let frob = a.frobenius_norm();
    let threshold = real::<T>(1e-12) * frob;

    let off_diag_norm = |a: &DenseMatrix<T>| -> T {
        let mut acc = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                let x = a.get(i, j);
                acc += x * x;
            }
        }
        (acc + acc).sqrt()
    };

    let mut converged = frob == T::zero() || off_diag_norm(&a) <= threshold;
    let mut sweeps = 0usize;
    while !converged && sweeps < 100 {
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == T::zero() {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (real::<T>(2.0) * apq);
                let t = {
                    let denom = theta.abs() + (theta * theta + T::one()).sqrt();
                    if theta >= T::zero() {
                        denom.recip()
                    } else {
                        -denom.recip()
                    }
                };
                let c = (t * t + T::one()).sqrt().recip();
                let s = t * c;

                // Rotate rows/columns p and q of A.
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                // Accumulate the eigenvector basis.
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
        sweeps += 1;
        converged = off_diag_norm(&a) <= threshold;
    }
    if !converged {
        return Err(Error::EigenNoConvergence {
            residual: off_diag_norm(&a).to_f64_lossy(),
            sweeps,
        });
    }

    // Sort ascending, carrying eigenvector columns along.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a.get(i, i)
            .partial_cmp(&a.get(j, j))
            .expect("eigenvalues are finite")
    });
    let eigenvalues: Vec<T> = order.iter().map(|&i| a.get(i, i)).collect();
    let mut eigenvectors = DenseMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        // Sign convention: largest-magnitude entry positive.
        let mut best = 0usize;
        let mut best_abs = T::zero();
        for k in 0..n {
            let x = v.get(k, src).abs();
            if x > best_abs {
                best_abs = x;
                best = k;
            }
        }
        let flip = v.get(best, src) < T::zero();
        for k in 0..n {
            let x = v.get(k, src);
            eigenvectors.set(k, dst, if flip { -x } else { x });
        }
    }

    Ok(SpectralDecomposition { eigenvalues, eigenvectors })
}
