//! Standard normal helpers and log-space accumulation.

use libm::erfc;
use statrs::function::gamma::ln_gamma;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

#[inline]
pub fn norm_ln_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

/// Standard normal CDF, accurate in the lower tail.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail `1 - Φ(x)`, accurate for large positive `x`.
#[inline]
pub fn norm_sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// `P(lo < Z < hi)` without subtracting two numbers close to one.
pub fn norm_interval(lo: f64, hi: f64) -> f64 {
    if lo >= 0.0 {
        norm_sf(lo) - norm_sf(hi)
    } else if hi <= 0.0 {
        norm_cdf(hi) - norm_cdf(lo)
    } else {
        1.0 - norm_cdf(lo) - norm_sf(hi)
    }
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Running log-sum-exp over signed terms `sign * exp(ln_abs)`.
///
/// Positive and negative parts are kept separately so the final
/// difference is taken once, at a common scale.
#[derive(Debug, Clone, Copy, Default)]
pub struct SignedLogSum {
    pos: LogSum,
    neg: LogSum,
}

impl SignedLogSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, positive: bool, ln_abs: f64) {
        if positive {
            self.pos.add(ln_abs)
        } else {
            self.neg.add(ln_abs)
        }
    }

    /// Returns `(sign, ln|sum|)`; an exact zero is `(0.0, -inf)`.
    pub fn value(&self) -> (f64, f64) {
        let p = self.pos.ln();
        let n = self.neg.ln();
        if p == n {
            return (0.0, f64::NEG_INFINITY);
        }
        let (sign, hi, lo) = if p > n { (1.0, p, n) } else { (-1.0, n, p) };
        (sign, hi + (-(lo - hi).exp()).ln_1p())
    }
}

/// Streaming log-sum-exp with rescaling when a larger term arrives.
#[derive(Debug, Clone, Copy)]
pub struct LogSum {
    max: f64,
    scaled: f64,
}

impl Default for LogSum {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSum {
    pub fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x <= self.max {
            self.scaled += (x - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    pub fn ln(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

/// `ln(exp(a) + exp(b))`.
pub fn ln_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Sign function with `sign(0) = 0`.
#[inline]
pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Median with the midpoint convention for even lengths. Sorts in place.
pub fn median_in_place(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}
