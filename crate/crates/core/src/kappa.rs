//! Congestion speed laws `kappa(rho)`.
//!
//! A speed law is continuous, bounded, strictly positive, and non-increasing
//! in the density: crowded regions slow agents down but never stop them.
//! The affine-truncated and rational laws are Lipschitz.

use alloc::format;

use crate::error::{Error, Result};
use crate::grid::ScalarField;

/// Pointwise speed cap as a function of the local density.
#[derive(Clone, Debug, PartialEq)]
pub enum KappaModel {
    /// `kappa(r) = kappa0`.
    Constant { kappa0: f64 },
    /// `kappa(r) = max(kappa0 (1 - r / r_max), kappa_min)`.
    AffineTruncated {
        kappa0: f64,
        r_max: f64,
        kappa_min: f64,
    },
    /// `kappa(r) = kappa0 / (1 + c r)`. Bounded below by `kappa0 / (1 + c R)`
    /// on any bounded density range, and we clamp negative densities to 0,
    /// so positivity holds on all inputs the solvers produce.
    Rational { kappa0: f64, c: f64 },
}

impl KappaModel {
    /// Validate the model parameters.
    pub fn validate(&self) -> Result<()> {
        match *self {
            KappaModel::Constant { kappa0 } => {
                if !(kappa0 > 0.0) {
                    return Err(Error::Invalid {
                        what: "kappa0",
                        why: format!("must be > 0, got {kappa0}"),
                    });
                }
            }
            KappaModel::AffineTruncated {
                kappa0,
                r_max,
                kappa_min,
            } => {
                if !(kappa0 > 0.0) || !(r_max > 0.0) {
                    return Err(Error::Invalid {
                        what: "kappa",
                        why: format!("kappa0 and r_max must be > 0, got {kappa0}, {r_max}"),
                    });
                }
                if !(kappa_min > 0.0) || kappa_min > kappa0 {
                    return Err(Error::Invalid {
                        what: "kappa_min",
                        why: format!("must lie in (0, kappa0], got {kappa_min}"),
                    });
                }
            }
            KappaModel::Rational { kappa0, c } => {
                if !(kappa0 > 0.0) || c < 0.0 {
                    return Err(Error::Invalid {
                        what: "kappa",
                        why: format!("need kappa0 > 0 and c >= 0, got {kappa0}, {c}"),
                    });
                }
            }
        }
        Ok(())
    }

    /// Speed at density `r`. Negative densities (round-off) evaluate as 0.
    pub fn eval(&self, r: f64) -> f64 {
        let r = r.max(0.0);
        match *self {
            KappaModel::Constant { kappa0 } => kappa0,
            KappaModel::AffineTruncated {
                kappa0,
                r_max,
                kappa_min,
            } => (kappa0 * (1.0 - r / r_max)).max(kappa_min),
            KappaModel::Rational { kappa0, c } => kappa0 / (1.0 + c * r),
        }
    }

    /// `kappa(0)`, the uncongested speed entering the stationary equation.
    pub fn at_zero(&self) -> f64 {
        self.eval(0.0)
    }

    /// Supremum of the law; equals `kappa(0)` since the law is non-increasing
    /// on the nonnegative densities it is evaluated on.
    pub fn sup(&self) -> f64 {
        self.at_zero()
    }

    /// Evaluate the law on a density field.
    pub fn eval_field(&self, rho: &ScalarField) -> ScalarField {
        let mut out = rho.clone();
        for v in out.values_mut() {
            *v = self.eval(*v);
        }
        out
    }
}
