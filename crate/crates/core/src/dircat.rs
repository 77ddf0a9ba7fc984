//! Dirichlet-Categorical and Dirichlet density terms.

use alloc::format;
use libm::{lgamma, log};

use crate::error::{Error, Result};

/// Integer count types accepted by [`log_dircat`].
pub trait Count: Copy {
    fn as_f64(self) -> f64;
}

impl Count for usize {
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Count for u32 {
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Count for u64 {
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

fn check_alpha(len: usize, alpha: &[f64]) -> Result<()> {
    if len != alpha.len() {
        return Err(Error::DimensionMismatch {
            what: "concentration vector",
            expected: len,
            found: alpha.len(),
        });
    }
    if let Some(a) = alpha.iter().find(|a| !(**a > 0.0)) {
        return Err(Error::domain(format!("concentration must be positive, got {a}")));
    }
    Ok(())
}

/// Log probability of one particular sequence with the given `counts` under
/// a categorical whose parameter is integrated against `Dirichlet(alpha)`:
///
/// `lgamma(A) - lgamma(n + A) + sum_k [lgamma(x_k + a_k) - lgamma(a_k)]`
pub fn log_dircat<C: Count>(counts: &[C], alpha: &[f64]) -> Result<f64> {
    check_alpha(counts.len(), alpha)?;
    Ok(log_dircat_unchecked(counts, alpha))
}

#[inline]
pub(crate) fn log_dircat_unchecked<C: Count>(counts: &[C], alpha: &[f64]) -> f64 {
    let mut n = 0.0;
    let mut a_sum = 0.0;
    let mut acc = 0.0;
    for (&c, &a) in counts.iter().zip(alpha) {
        let c = c.as_f64();
        n += c;
        a_sum += a;
        if c > 0.0 {
            acc += lgamma(c + a) - lgamma(a);
        }
    }
    acc + lgamma(a_sum) - lgamma(n + a_sum)
}

/// Pólya-urn predictive probability that the next draw is `k`.
pub fn polya_predictive<C: Count>(counts: &[C], alpha: &[f64], k: usize) -> f64 {
    let n: f64 = counts.iter().map(|c| c.as_f64()).sum();
    let a_sum: f64 = alpha.iter().sum();
    (counts[k].as_f64() + alpha[k]) / (n + a_sum)
}

/// Log density of a probability vector `phi` under `Dirichlet(beta)`.
///
/// A zero entry gives density zero when `beta_w > 1`, is harmless when
/// `beta_w == 1`, and makes the density infinite when `beta_w < 1`; the last
/// case is rejected.
pub fn log_dirichlet_density(phi: &[f64], beta: &[f64]) -> Result<f64> {
    check_alpha(phi.len(), beta)?;
    let b_sum: f64 = beta.iter().sum();
    let mut acc = lgamma(b_sum);
    for (w, (&p, &b)) in phi.iter().zip(beta).enumerate() {
        acc -= lgamma(b);
        if p > 0.0 {
            acc += (b - 1.0) * log(p);
        } else if b < 1.0 {
            return Err(Error::domain(format!(
                "topic probability of word {w} is zero with beta {b} < 1: Dirichlet density is infinite"
            )));
        } else if b > 1.0 {
            return Ok(f64::NEG_INFINITY);
        }
    }
    Ok(acc)
}
