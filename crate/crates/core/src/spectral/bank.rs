//! Framelet generator sets: filters and scaling functions.
//!
//! A bank ships a low-pass filter `a` and high-pass filters `b^(1)..b^(K)`
//! together with scaling functions `alpha` and `beta^(1)..beta^(K)` tied by
//! the two-scale relations
//!
//! ```text
//! alpha(2 xi) = a(xi) alpha(xi),     beta_r(2 xi) = b_r(xi) alpha(xi).
//! ```
//!
//! Those relations make the dyadic telescoping identity
//! `alpha(xi/2)^2 = alpha(xi)^2 + sum_r beta_r(xi)^2` exact whenever the
//! filters satisfy the partition `a^2 + sum_r b_r^2 = 1`, which is what the
//! tightness and energy-split diagnostics downstream rely on.

use crate::scalar::{real, Float};

/// The two shipped generator sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BankKind {
    /// One high pass: `a = cos(xi/2)`, `b = sin(xi/2)`.
    Haar,
    /// Two high passes built from the polynomial bump `nu`.
    Nu,
}

/// A framelet generator set with pointwise-evaluable filters and scaling
/// functions. All functions are even; evaluation uses `|xi|`.
#[derive(Clone, Debug)]
pub struct FilterBank<T> {
    kind: BankKind,
    name: &'static str,
    high_pass_count: usize,
    domain_ceiling: T,
    flat_radius: T,
}

/// Haar-type bank with one high pass.
///
/// `alpha(xi) = sin(xi/2)/(xi/2)` (1 at 0 by continuity). The high-pass
/// scaling function is taken from the two-scale relation,
/// `beta(xi) = b(xi/2) alpha(xi/2) = sin^2(xi/4)/(xi/4)`, rather than the
/// partition completion `sqrt(1 - alpha^2)`; only the former telescopes, so
/// the frame is near-tight with an analytic deficit instead of exactly tight.
pub fn haar_bank<T: Float>() -> FilterBank<T> {
    FilterBank {
        kind: BankKind::Haar,
        name: "haar",
        high_pass_count: 1,
        domain_ceiling: T::PI(),
        flat_radius: T::zero(),
    }
}

/// Two-high-pass bank whose masks are supported on `|xi| <= 1/2` and scaling
/// functions on `|xi| <= 1`. `alpha` is identically 1 on `|xi| <= 1/4`, which
/// makes every system built on a spectrum dilated into `[0, 1/2]` exactly
/// tight.
pub fn nu_bank<T: Float>() -> FilterBank<T> {
    FilterBank {
        kind: BankKind::Nu,
        name: "nu",
        high_pass_count: 2,
        domain_ceiling: real(0.5),
        flat_radius: real(0.25),
    }
}

/// `nu(t) = t^4 (35 - 84 t + 70 t^2 - 20 t^3)`; rises from 0 to 1 on [0, 1]
/// with `nu(t) + nu(1 - t) = 1`.
pub fn nu_polynomial<T: Float>(t: T) -> T {
    let c35 = real::<T>(35.0);
    let c84 = real::<T>(84.0);
    let c70 = real::<T>(70.0);
    let c20 = real::<T>(20.0);
    t * t * t * t * (c35 - t * (c84 - t * (c70 - t * c20)))
}

/// `sin(x)/x`, 1 at 0.
fn sinc<T: Float>(x: T) -> T {
    if x == T::zero() {
        T::one()
    } else {
        x.sin() / x
    }
}

impl<T: Float> FilterBank<T> {
    pub fn kind(&self) -> BankKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    /// Number of high passes `K`.
    pub fn high_pass_count(&self) -> usize {
        self.high_pass_count
    }

    /// Ceiling `D` of the filters' natural domain: the dilation puts the
    /// scaled spectrum inside `[0, D]`.
    pub fn domain_ceiling(&self) -> T {
        self.domain_ceiling
    }

    /// Largest radius on which `alpha` is identically 1.
    pub fn flat_radius(&self) -> T {
        self.flat_radius
    }

    /// Low-pass filter `a(xi)`.
    pub fn filter_low(&self, xi: T) -> T {
        let x = xi.abs();
        match self.kind {
            BankKind::Haar => (x * real::<T>(0.5)).cos(),
            BankKind::Nu => {
                let eighth = real::<T>(0.125);
                let quarter = real::<T>(0.25);
                if x < eighth {
                    T::one()
                } else if x <= quarter {
                    (T::FRAC_PI_2() * nu_polynomial(real::<T>(8.0) * x - T::one())).cos()
                } else {
                    T::zero()
                }
            }
        }
    }

    /// High-pass filter `b^(r)(xi)`, `r` in `1..=K`.
    pub fn filter_high(&self, r: usize, xi: T) -> T {
        assert!(r >= 1 && r <= self.high_pass_count, "filter index {r}");
        let x = xi.abs();
        match self.kind {
            BankKind::Haar => (x * real::<T>(0.5)).sin(),
            BankKind::Nu => {
                let eighth = real::<T>(0.125);
                let quarter = real::<T>(0.25);
                let half = real::<T>(0.5);
                if r == 1 {
                    if x < eighth {
                        T::zero()
                    } else if x <= quarter {
                        (T::FRAC_PI_2() * nu_polynomial(real::<T>(8.0) * x - T::one())).sin()
                    } else if x <= half {
                        (T::FRAC_PI_2() * nu_polynomial(real::<T>(4.0) * x - T::one())).cos()
                    } else {
                        T::zero()
                    }
                } else {
                    if x < quarter {
                        T::zero()
                    } else if x <= half {
                        (T::FRAC_PI_2() * nu_polynomial(real::<T>(4.0) * x - T::one())).sin()
                    } else {
                        T::zero()
                    }
                }
            }
        }
    }

    /// Low-pass scaling function `alpha(xi)`.
    pub fn scaling_low(&self, xi: T) -> T {
        let x = xi.abs();
        match self.kind {
            BankKind::Haar => sinc(x * real::<T>(0.5)),
            BankKind::Nu => {
                let quarter = real::<T>(0.25);
                let half = real::<T>(0.5);
                if x < quarter {
                    T::one()
                } else if x <= half {
                    (T::FRAC_PI_2() * nu_polynomial(real::<T>(4.0) * x - T::one())).cos()
                } else {
                    T::zero()
                }
            }
        }
    }

    /// High-pass scaling function `beta^(r)(xi)`, `r` in `1..=K`.
    pub fn scaling_high(&self, r: usize, xi: T) -> T {
        assert!(r >= 1 && r <= self.high_pass_count, "scaling index {r}");
        let x = xi.abs();
        match self.kind {
            BankKind::Haar => {
                // b(xi/2) alpha(xi/2) = sin^2(xi/4)/(xi/4).
                let q = x * real::<T>(0.25);
                let s = q.sin();
                s * sinc(q)
            }
            BankKind::Nu => {
                let quarter = real::<T>(0.25);
                let half = real::<T>(0.5);
                let one = T::one();
                if r == 1 {
                    if x < quarter {
                        T::zero()
                    } else if x < half {
                        (T::FRAC_PI_2() * nu_polynomial(real::<T>(4.0) * x - one)).sin()
                    } else if x <= one {
                        let c = (T::FRAC_PI_2() * nu_polynomial(real::<T>(2.0) * x - one)).cos();
                        c * c
                    } else {
                        T::zero()
                    }
                } else {
                    if x < half {
                        T::zero()
                    } else if x <= one {
                        let arg = T::FRAC_PI_2() * nu_polynomial(real::<T>(2.0) * x - one);
                        arg.cos() * arg.sin()
                    } else {
                        T::zero()
                    }
                }
            }
        }
    }

    /// `sum_r beta^(r)(xi)^2`.
    pub fn scaling_high_sq_sum(&self, xi: T) -> T {
        (1..=self.high_pass_count)
            .map(|r| {
                let b = self.scaling_high(r, xi);
                b * b
            })
            .sum()
    }
}
