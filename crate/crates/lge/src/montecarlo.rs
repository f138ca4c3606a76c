//! Empirical estimation of the analytic quantities, with confidence
//! reporting. Cross-validates the closed forms against direct sampling
//! and against the full slot-level protocol.
//!
//! Trials run in batches of 2^14; each batch owns an RNG stream derived
//! from (seed, batchIndex) and the per-bin counts are summed, so results
//! are bit-identical for any thread count.

use std::io::Write;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytics::{self, GeoParam};
use crate::error::{Error, Result};
use crate::protocol;
use crate::streams::stream;

pub const TRIALS_PER_BATCH: u64 = 1 << 14;

/// One empirical-vs-analytic comparison.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EstimateReport {
    pub quantity: String,
    pub trials: u64,
    /// Raw event count behind `empirical` (kept for histogram export).
    pub count: u64,
    pub empirical: f64,
    pub analytic: f64,
    pub std_error: f64,
    pub z_score: f64,
}

impl EstimateReport {
    fn new(quantity: String, trials: u64, count: u64, analytic: f64) -> Self {
        let empirical = count as f64 / trials as f64;
        let std_error = proportion_std_error(count, trials);
        EstimateReport {
            quantity,
            trials,
            count,
            empirical,
            analytic,
            std_error,
            z_score: (empirical - analytic) / std_error,
        }
    }

    pub fn within_sigma(&self, k: f64) -> bool {
        self.z_score.abs() <= k
    }

    /// One-sided check for bounds: empirical <= analytic + k sigma.
    pub fn passes_upper(&self, k: f64) -> bool {
        self.empirical <= self.analytic + k * self.std_error
    }
}

/// Binomial standard error with a Wilson-style shrinkage fallback for
/// rare (or saturated) cells, so sigma stays positive and sane.
fn proportion_std_error(count: u64, trials: u64) -> f64 {
    let t = trials as f64;
    let rare = (count as f64) < 10.0 || ((trials - count) as f64) < 10.0;
    let p = if rare {
        (count as f64 + 0.5) / (t + 1.0)
    } else {
        count as f64 / t
    };
    (p * (1.0 - p) / t).sqrt()
}

/// Run `trials` independent trials in deterministic batches, histogram
/// the bin index each trial returns.
fn batched_counts<F>(trials: u64, bins: usize, seed: u64, trial: F) -> Vec<u64>
where
    F: Fn(&mut ChaCha8Rng) -> usize + Sync,
{
    let batches = trials.div_ceil(TRIALS_PER_BATCH);
    (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, b);
            let size = TRIALS_PER_BATCH.min(trials - b * TRIALS_PER_BATCH);
            let mut counts = vec![0u64; bins];
            for _ in 0..size {
                counts[trial(&mut rng)] += 1;
            }
            counts
        })
        .reduce(
            || vec![0u64; bins],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        )
}

/// Frequencies of the survivor count W over direct geometric sampling
/// (no protocol layer), compared to the series pmf. One report per value
/// of W with nonzero observed mass.
pub fn estimate_survivor_pmf(
    n: u64,
    param: GeoParam,
    trials: u64,
    seed: u64,
) -> Result<Vec<EstimateReport>> {
    validate_trials(trials)?;
    if n < 1 {
        return Err(Error::invalid("n", "need n >= 1"));
    }
    let counts = batched_counts(trials, n as usize + 1, seed, |rng| {
        let mut max = 0u64;
        let mut ties = 0usize;
        for _ in 0..n {
            let x = analytics::draw_geometric(param, rng);
            if x > max {
                max = x;
                ties = 1;
            } else if x == max {
                ties += 1;
            }
        }
        ties
    });
    Ok(counts
        .iter()
        .enumerate()
        .skip(1)
        .filter(|&(_, &c)| c > 0)
        .map(|(a, &c)| {
            let analytic = analytics::survivor_pmf_series(n, param, a as u64, 1e-16);
            EstimateReport::new(format!("Pr[W={a}]"), trials, c, analytic)
        })
        .collect())
}

/// Empirical exceedance frequency of the maximum against the tail bound:
/// Pr[M > C ln n / ln Q] vs n^{1-C}.
///
/// The per-station event `X > floor(threshold)` is decided by comparing
/// the generating uniform against q^floor(threshold) — the exact
/// inverse-CDF event, without materializing the variate.
pub fn estimate_max_tail(
    n: u64,
    param: GeoParam,
    c: f64,
    trials: u64,
    seed: u64,
) -> Result<EstimateReport> {
    validate_trials(trials)?;
    let tb = analytics::max_geo_tail_bound(n, param, c)?;
    // M > threshold  <=>  some X_i > floor(threshold)  <=>  some u_i < q^floor(t).
    let cut = (tb.threshold.max(0.0).floor() * param.ln_q()).exp();
    let counts = batched_counts(trials, 2, seed, |rng| {
        use rand::Rng;
        let mut exceeded = false;
        for _ in 0..n {
            let u = loop {
                let u: f64 = rng.gen();
                if u > 0.0 {
                    break u;
                }
            };
            if u < cut {
                exceeded = true;
            }
        }
        exceeded as usize
    });
    Ok(EstimateReport::new(
        format!("Pr[M>{:.4}] (n={n}, C={c})", tb.threshold),
        trials,
        counts[1],
        tb.bound,
    ))
}

/// Survivor-count estimates from full slot-level phases, with the
/// truncation-probability budget that separates the protocol from the
/// pure WGeo regime.
#[derive(Debug, Clone, Serialize)]
pub struct PhaseEstimate {
    pub reports: Vec<EstimateReport>,
    /// Union bound on Pr[some draw is truncated]: n * q^(3^(L+1) - 1).
    pub truncation_budget: f64,
    /// Set when the truncation budget is too large for WGeo to describe
    /// the observed survivor counts.
    pub regime_mismatch: bool,
    pub max_survivors_observed: u64,
}

pub fn estimate_phase_survivors(
    n: u64,
    param: GeoParam,
    l: u32,
    trials: u64,
    seed: u64,
) -> Result<PhaseEstimate> {
    validate_trials(trials)?;
    if n < 1 {
        return Err(Error::invalid("n", "need n >= 1"));
    }
    if l > protocol::MAX_KEY_INDEX {
        return Err(Error::invalid("L", "key index too large"));
    }
    let counts = batched_counts(trials, n as usize + 1, seed, |rng| {
        protocol::lge_phase_count(n, param, l, rng) as usize
    });
    let reports: Vec<EstimateReport> = counts
        .iter()
        .enumerate()
        .skip(1)
        .filter(|&(_, &c)| c > 0)
        .map(|(a, &c)| {
            let analytic = analytics::survivor_pmf_series(n, param, a as u64, 1e-16);
            EstimateReport::new(format!("Pr[survivors={a}]"), trials, c, analytic)
        })
        .collect();
    let cutoff = 3f64.powi(l as i32 + 1);
    let truncation_budget = ((n as f64).ln() + (cutoff - 1.0) * param.ln_q()).exp();
    let max_survivors_observed = counts
        .iter()
        .rposition(|&c| c > 0)
        .map_or(0, |a| a as u64);
    Ok(PhaseEstimate {
        reports,
        truncation_budget,
        regime_mismatch: truncation_budget > 1e-2,
        max_survivors_observed,
    })
}

fn validate_trials(trials: u64) -> Result<()> {
    if trials < 1000 {
        return Err(Error::invalid("trials", format!("need at least 1000, got {trials}")));
    }
    Ok(())
}

/// CSV histogram export: a, count, frequency, analytic, z.
pub fn write_histogram_csv<W: Write>(reports: &[EstimateReport], mut w: W) -> Result<()> {
    writeln!(w, "a,count,frequency,analytic,z")?;
    for (i, r) in reports.iter().enumerate() {
        // Quantity labels are "Pr[W=a]" / "Pr[survivors=a]"; recover a.
        let a: String = r
            .quantity
            .chars()
            .skip_while(|c| !c.is_ascii_digit())
            .take_while(|c| c.is_ascii_digit())
            .collect();
        let a = if a.is_empty() { (i + 1).to_string() } else { a };
        writeln!(
            w,
            "{a},{},{},{},{}",
            r.count, r.empirical, r.analytic, r.z_score
        )?;
    }
    Ok(())
}
