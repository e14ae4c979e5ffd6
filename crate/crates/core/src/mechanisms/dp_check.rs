//! Monte-Carlo check of the ε-DP inequality on one pair of neighbouring
//! datasets.
//!
//! The Laplace-noised query is evaluated `trials` times on each dataset, the
//! pooled outputs are histogrammed into equal-width bins, and the largest
//! frequency ratio over well-populated bins is compared against
//! `e^ε · tolerance_factor`. Both directions of the ratio are checked.

use serde::Serialize;

use super::laplace::{laplace_scale, sample_laplace};
use super::{PrivacyBudget, RngState, Sensitivity};
use crate::{Error, Result};

/// Fewest trials accepted; below this the binned ratios are too noisy.
pub const MIN_TRIALS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct DpCheckConfig {
    pub bins: usize,
    pub trials: usize,
    pub tolerance_factor: f64,
    /// A bin takes part in the ratio only if it received at least this many
    /// outputs from the two datasets combined.
    pub min_joint_hits: usize,
}

impl Default for DpCheckConfig {
    fn default() -> Self {
        Self {
            bins: 20,
            trials: 100_000,
            tolerance_factor: 1.2,
            min_joint_hits: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DpCheckReport {
    pub epsilon: f64,
    pub max_ratio: f64,
    pub bound: f64,
    pub bins_compared: usize,
    pub passed: bool,
}

pub fn empirical_dp_check<T, Q>(
    query: Q,
    d: &[T],
    d_prime: &[T],
    sensitivity: Sensitivity,
    budget: PrivacyBudget,
    config: &DpCheckConfig,
    rng: &mut RngState,
) -> Result<DpCheckReport>
where
    T: PartialEq,
    Q: Fn(&[T]) -> f64,
{
    if config.trials < MIN_TRIALS {
        return Err(Error::invalid("trials", format!("need at least {MIN_TRIALS}, got {}", config.trials)));
    }
    if config.bins == 0 {
        return Err(Error::invalid("bins", "must be positive"));
    }
    if !(config.tolerance_factor.is_finite() && config.tolerance_factor >= 1.0) {
        return Err(Error::invalid("tolerance_factor", "must be at least 1"));
    }
    if !are_neighbours(d, d_prime) {
        return Err(Error::invalid(
            "datasets",
            "must differ by exactly one record (one substitution, addition or removal)",
        ));
    }
    let scale = laplace_scale(sensitivity, budget)?;

    let answer_d = query(d);
    let answer_d_prime = query(d_prime);
    let mut rng_d = rng.child("dataset");
    let mut rng_d_prime = rng.child("neighbour");
    let mut out_d = Vec::with_capacity(config.trials);
    let mut out_d_prime = Vec::with_capacity(config.trials);
    for _ in 0..config.trials {
        out_d.push(answer_d + sample_laplace(scale, &mut rng_d)?);
        out_d_prime.push(answer_d_prime + sample_laplace(scale, &mut rng_d_prime)?);
    }

    let (lo, hi) = out_d
        .iter()
        .chain(&out_d_prime)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let width = (hi - lo) / config.bins as f64;
    let bin_of = |x: f64| -> usize {
        if width <= 0.0 {
            0
        } else {
            (((x - lo) / width) as usize).min(config.bins - 1)
        }
    };
    let mut hist_d = vec![0usize; config.bins];
    let mut hist_d_prime = vec![0usize; config.bins];
    for &x in &out_d {
        hist_d[bin_of(x)] += 1;
    }
    for &x in &out_d_prime {
        hist_d_prime[bin_of(x)] += 1;
    }

    let mut max_ratio: f64 = 0.0;
    let mut bins_compared = 0;
    for (&a, &b) in hist_d.iter().zip(&hist_d_prime) {
        if a + b < config.min_joint_hits {
            continue;
        }
        bins_compared += 1;
        let ratio = if a == 0 || b == 0 {
            f64::INFINITY
        } else {
            let (a, b) = (a as f64, b as f64);
            (a / b).max(b / a)
        };
        max_ratio = max_ratio.max(ratio);
    }
    let bound = budget.epsilon().exp() * config.tolerance_factor;
    Ok(DpCheckReport {
        epsilon: budget.epsilon(),
        max_ratio,
        bound,
        bins_compared,
        passed: bins_compared > 0 && max_ratio <= bound,
    })
}

/// Equal size with at most one substituted record, or sizes differing by one
/// where the larger dataset is the smaller plus one inserted record.
fn are_neighbours<T: PartialEq>(a: &[T], b: &[T]) -> bool {
    use std::cmp::Ordering;
    match a.len().cmp(&b.len()) {
        Ordering::Equal => a.iter().zip(b).filter(|(x, y)| x != y).count() <= 1,
        Ordering::Less => one_insertion(a, b),
        Ordering::Greater => one_insertion(b, a),
    }
}

fn one_insertion<T: PartialEq>(short: &[T], long: &[T]) -> bool {
    if long.len() != short.len() + 1 {
        return false;
    }
    let split = short.iter().zip(long).take_while(|(x, y)| x == y).count();
    short[split..] == long[split + 1..]
}
