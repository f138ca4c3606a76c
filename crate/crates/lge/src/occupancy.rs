//! Urns-and-balls singleton machinery: exact singleton probabilities for
//! arbitrary urn distributions, the harmonic-averaging function bounding
//! them, the (L-1)/(H_n - 1) ceiling on the max-min success probability,
//! and a desk-scale multi-start search probing that ceiling.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytics::{harmonic, EULER_GAMMA};
use crate::error::{Error, Result};
use crate::streams::stream;

/// Subset enumeration in [`singleton_prob_exact`] is 2^L; keep L small.
pub const MAX_URNS_EXACT: usize = 20;

/// Probability vector over L urns.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SimplexVector {
    probs: Vec<f64>,
}

impl SimplexVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("probs", "need at least one urn"));
        }
        if probs.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(Error::invalid("probs", "entries must be finite and >= 0"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(
                "probs",
                format!("must sum to 1 within 1e-12, got {total}"),
            ));
        }
        Ok(Self { probs })
    }

    pub fn uniform(l: usize) -> Self {
        assert!(l >= 1);
        Self {
            probs: vec![1.0 / l as f64; l],
        }
    }

    /// Euclidean projection of an arbitrary point onto the simplex.
    pub fn project(point: &[f64]) -> Self {
        assert!(!point.is_empty());
        let mut sorted: Vec<f64> = point.to_vec();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let mut cumulative = 0.0;
        let mut threshold = sorted[0] - 1.0;
        for (j, &v) in sorted.iter().enumerate() {
            cumulative += v;
            let t = (cumulative - 1.0) / (j + 1) as f64;
            if v - t > 0.0 {
                threshold = t;
            }
        }
        let probs: Vec<f64> = point.iter().map(|&v| (v - threshold).max(0.0)).collect();
        // Renormalize away the last-ulp drift so the constructor invariant
        // holds exactly enough.
        let total: f64 = probs.iter().sum();
        Self {
            probs: probs.into_iter().map(|p| p / total).collect(),
        }
    }

    /// A Dirichlet(1,...,1) (uniform-on-the-simplex) sample.
    pub fn dirichlet<R: Rng + ?Sized>(l: usize, rng: &mut R) -> Self {
        assert!(l >= 1);
        let raw: Vec<f64> = (0..l)
            .map(|_| {
                let u: f64 = loop {
                    let u = rng.gen::<f64>();
                    if u > 0.0 {
                        break u;
                    }
                };
                -u.ln()
            })
            .collect();
        let total: f64 = raw.iter().sum();
        Self {
            probs: raw.into_iter().map(|x| x / total).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// Pr[urn `urn_index` holds exactly one of `ball_count` balls] =
/// Q p_i (1-p_i)^{Q-1}.
pub fn singleton_prob_single_urn(pvec: &SimplexVector, ball_count: u32, urn_index: usize) -> f64 {
    assert!(ball_count >= 2, "need at least 2 balls");
    let p = pvec.probs[urn_index];
    ball_count as f64 * p * (1.0 - p).powi(ball_count as i32 - 1)
}

/// Exact probability that at least one urn holds exactly one ball, by
/// inclusion–exclusion over urn subsets T:
/// Pr[all urns in T are singletons] = Q!/(Q-|T|)! * prod_{i in T} p_i *
/// (1 - sum_T p_i)^{Q-|T|}; subsets larger than the ball count contribute
/// nothing.
pub fn singleton_prob_exact(pvec: &SimplexVector, ball_count: u32) -> Result<f64> {
    if pvec.len() > MAX_URNS_EXACT {
        return Err(Error::invalid(
            "pvec",
            format!("exact enumeration limited to {MAX_URNS_EXACT} urns, got {}", pvec.len()),
        ));
    }
    if ball_count < 2 {
        return Err(Error::invalid("ballCount", "need at least 2 balls"));
    }
    let l = pvec.len();
    let q = ball_count as u64;
    let mut total = 0.0;
    for mask in 1u32..(1 << l) {
        let size = mask.count_ones() as u64;
        if size > q {
            continue;
        }
        let mut prod = 1.0;
        let mut sum = 0.0;
        for (i, &p) in pvec.probs.iter().enumerate() {
            if mask & (1 << i) != 0 {
                prod *= p;
                sum += p;
            }
        }
        let falling: f64 = (0..size).map(|i| (q - i) as f64).product();
        let term = falling * prod * (1.0 - sum).max(0.0).powi((q - size) as i32);
        total += if size % 2 == 1 { term } else { -term };
    }
    Ok(total.clamp(0.0, 1.0))
}

/// The harmonic-averaging function `f(p) = sum_{Q=2..n} Pr[singleton]/Q`.
/// Strictly below L-1 whenever every p_i < 1.
pub fn willard_f(pvec: &SimplexVector, n: u32) -> Result<f64> {
    if n < 2 {
        return Err(Error::invalid("n", "need n >= 2"));
    }
    let mut acc = 0.0;
    for q in 2..=n {
        acc += singleton_prob_exact(pvec, q)? / q as f64;
    }
    Ok(acc)
}

/// The ceiling (L-1)/(H_n - 1) on the max-min singleton probability.
/// Zero for L = 1 (a lone urn holding >= 2 balls has no singleton).
pub fn msp_bound(l: u32, n: u64) -> f64 {
    assert!(l >= 1 && n >= 2);
    if l == 1 {
        return 0.0;
    }
    (l as f64 - 1.0) / (harmonic(n) - 1.0)
}

/// Number of random bits below which an oblivious leader election over
/// <= n stations succeeds with probability < 1/2:
/// log2(ln(n)/2 + (1+gamma)/2).
pub fn random_bits_threshold(n: u64) -> f64 {
    assert!(n >= 2);
    ((n as f64).ln() / 2.0 + (1.0 + EULER_GAMMA) / 2.0).log2()
}

/// Outcome of the max-min search.
#[derive(Debug, Clone, Serialize)]
pub struct MspResult {
    #[serde(rename = "L")]
    pub l: u32,
    pub n: u32,
    #[serde(rename = "bestVector")]
    pub best_vector: SimplexVector,
    /// The ball count attaining the inner minimum at the best vector.
    #[serde(rename = "worstQ")]
    pub worst_q: u32,
    /// Best max-min value found; always strictly below `bound`.
    pub value: f64,
    pub bound: f64,
    #[serde(skip)]
    pub budget_exhausted: bool,
}

/// Inner objective: min over ball counts 2..=n of the exact singleton
/// probability, with the attaining Q.
fn min_over_ball_counts(pvec: &SimplexVector, n: u32) -> Result<(f64, u32)> {
    let mut best = f64::INFINITY;
    let mut best_q = 2;
    for q in 2..=n {
        let v = singleton_prob_exact(pvec, q)?;
        if v < best {
            best = v;
            best_q = q;
        }
    }
    Ok((best, best_q))
}

/// Best-found lower estimate of the max-min singleton probability via
/// multi-start Nelder–Mead over the simplex (candidates projected back
/// after every step; the inner min over Q is exact, not sampled).
pub fn msp_search(l: u32, n: u32, budget: u64, seed: u64) -> Result<MspResult> {
    if l < 1 {
        return Err(Error::invalid("L", "need L >= 1"));
    }
    if l as usize > MAX_URNS_EXACT {
        return Err(Error::invalid("L", format!("need L <= {MAX_URNS_EXACT}")));
    }
    if n < 2 {
        return Err(Error::invalid("n", "need n >= 2"));
    }
    let bound = msp_bound(l, n as u64);
    if l == 1 {
        return Ok(MspResult {
            l,
            n,
            best_vector: SimplexVector::uniform(1),
            worst_q: 2,
            value: 0.0,
            bound,
            budget_exhausted: false,
        });
    }
    const STARTS: u64 = 32;
    let per_start = (budget / STARTS).max(50);
    let runs: Vec<(f64, SimplexVector, u64, bool)> = (0..STARTS)
        .into_par_iter()
        .map(|s| {
            let mut rng = stream(seed, s);
            let start = if s == 0 {
                SimplexVector::uniform(l as usize)
            } else {
                SimplexVector::dirichlet(l as usize, &mut rng)
            };
            let (x, value, evals) = nelder_mead_max(start.probs(), per_start, |point| {
                let pvec = SimplexVector::project(point);
                min_over_ball_counts(&pvec, n).map(|(v, _)| v)
            })?;
            Ok((value, SimplexVector::project(&x), s, evals >= per_start))
        })
        .collect::<Result<Vec<_>>>()?;
    // Deterministic best-of: highest value, ties broken by start index.
    let (value, best_vector, _, exhausted) = runs
        .into_iter()
        .max_by(|a, b| (a.0, std::cmp::Reverse(a.2)).partial_cmp(&(b.0, std::cmp::Reverse(b.2))).unwrap())
        .unwrap();
    let (_, worst_q) = min_over_ball_counts(&best_vector, n)?;
    Ok(MspResult {
        l,
        n,
        best_vector,
        worst_q,
        value,
        bound,
        budget_exhausted: exhausted,
    })
}

/// Plain Nelder–Mead maximization with an evaluation budget. Returns the
/// best point, its value, and the evaluations spent.
fn nelder_mead_max<F>(start: &[f64], max_evals: u64, f: F) -> Result<(Vec<f64>, f64, u64)>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let dim = start.len();
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut evals = 0u64;
    let eval = |x: &[f64], evals: &mut u64| -> Result<f64> {
        *evals += 1;
        f(x)
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let v0 = eval(start, &mut evals)?;
    simplex.push((start.to_vec(), v0));
    for i in 0..dim {
        let mut x = start.to_vec();
        x[i] += 0.15;
        let v = eval(&x, &mut evals)?;
        simplex.push((x, v));
    }
    while evals < max_evals {
        // Best first (maximization).
        simplex.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        let spread = simplex[0].1 - simplex[dim].1;
        let diameter: f64 = simplex[1..]
            .iter()
            .map(|(x, _)| {
                x.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max)
            })
            .fold(0.0f64, f64::max);
        if spread < 1e-12 && diameter < 1e-8 {
            break;
        }
        let centroid: Vec<f64> = (0..dim)
            .map(|i| simplex[..dim].iter().map(|(x, _)| x[i]).sum::<f64>() / dim as f64)
            .collect();
        let worst = simplex[dim].clone();
        let reflected: Vec<f64> = centroid
            .iter()
            .zip(&worst.0)
            .map(|(c, w)| c + alpha * (c - w))
            .collect();
        let fr = eval(&reflected, &mut evals)?;
        if fr > simplex[0].1 {
            let expanded: Vec<f64> = centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + gamma * (c - w))
                .collect();
            let fe = eval(&expanded, &mut evals)?;
            simplex[dim] = if fe > fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr > simplex[dim - 1].1 {
            simplex[dim] = (reflected, fr);
        } else {
            let contracted: Vec<f64> = centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + rho * (w - c))
                .collect();
            let fc = eval(&contracted, &mut evals)?;
            if fc > worst.1 {
                simplex[dim] = (contracted, fc);
            } else {
                // Shrink toward the best vertex.
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = entry
                        .0
                        .iter()
                        .zip(&best)
                        .map(|(v, b)| b + sigma * (v - b))
                        .collect();
                    let fv = eval(&x, &mut evals)?;
                    *entry = (x, fv);
                }
            }
        }
    }
    simplex.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    let (x, v) = simplex.swap_remove(0);
    Ok((x, v, evals))
}
