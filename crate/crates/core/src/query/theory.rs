//! Success probability, error accumulation and expected utility of drawing
//! `n` samples, and the utility-maximising sample count.

use alloc::format;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingTheoryParams {
    /// Probability that a single sample is correct, in (0, 1).
    pub p_s: f64,
    /// Correlation between samples, in [0, 1].
    pub rho: f64,
    /// Weight of the correctness benefit.
    pub alpha: f64,
    /// Weight of the accumulated-error penalty.
    pub beta: f64,
    /// Per-sample cost.
    pub gamma: f64,
}

impl SamplingTheoryParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_s > 0.0 && self.p_s < 1.0) {
            return Err(Error::InvalidParameter(format!("p_s must lie in (0, 1), got {}", self.p_s)));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::InvalidParameter(format!("rho must lie in [0, 1], got {}", self.rho)));
        }
        for (name, w) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be a finite non-negative weight, got {w}")));
            }
        }
        Ok(())
    }

    /// `1 - (1 - p_s)^(n (1 - rho))`.
    pub fn p_at_least_one(&self, n: f64) -> Result<f64> {
        self.validate()?;
        if n < 1.0 {
            return Err(Error::InvalidParameter(format!("n must be >= 1, got {n}")));
        }
        let exponent = n * (1.0 - self.rho);
        if exponent == 1.0 {
            return Ok(self.p_s);
        }
        Ok(1.0 - libm::pow(1.0 - self.p_s, exponent))
    }

    /// `n (1 - p_s)`.
    pub fn cumulative_error(&self, n: f64) -> Result<f64> {
        if n < 0.0 {
            return Err(Error::InvalidParameter(format!("n must be >= 0, got {n}")));
        }
        if !(0.0..=1.0).contains(&self.p_s) {
            return Err(Error::InvalidParameter(format!("p_s must lie in [0, 1], got {}", self.p_s)));
        }
        Ok(n * (1.0 - self.p_s))
    }

    /// `alpha [1 - (1 - p_s)^n] - beta n (1 - p_s) - gamma n`.
    ///
    /// Uses the independent-sample success probability, as the utility model
    /// does; `rho` only affects [`Self::p_at_least_one`].
    pub fn utility(&self, n: f64) -> Result<f64> {
        self.validate()?;
        if n < 1.0 {
            return Err(Error::InvalidParameter(format!("n must be >= 1, got {n}")));
        }
        let miss = 1.0 - self.p_s;
        Ok(self.alpha * (1.0 - libm::pow(miss, n)) - self.beta * n * miss - self.gamma * n)
    }

    /// Stationary point of [`Self::utility`]:
    ///
    /// `dU/dn = -alpha (1 - p_s)^n ln(1 - p_s) - beta (1 - p_s) - gamma = 0`
    ///
    /// gives `n* = ln[(beta (1 - p_s) + gamma) / (-alpha ln(1 - p_s))] / ln(1 - p_s)`.
    /// An interior maximum exists only when the marginal cost is positive and
    /// below the marginal benefit at `n = 0`.
    pub fn optimal_n(&self) -> Result<f64> {
        self.validate()?;
        let log_miss = libm::log(1.0 - self.p_s);
        let cost = self.beta * (1.0 - self.p_s) + self.gamma;
        let benefit = -self.alpha * log_miss;
        if cost <= 0.0 {
            return Err(Error::NoInteriorOptimum("utility is non-decreasing without error or sampling cost".into()));
        }
        if cost >= benefit {
            return Err(Error::NoInteriorOptimum(format!(
                "marginal cost {cost} is not below the initial marginal benefit {benefit}"
            )));
        }
        Ok(libm::log(cost / benefit) / log_miss)
    }
}
