//! Monte Carlo engine and statistical comparison toolkit.
//!
//! Replicas draw from per-replica RNG streams derived from the master seed
//! (stream id = replica index), and results are merged in replica order, so
//! a run is bit-identical for any worker count.

use crate::numeric::KahanSum;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::time::Duration;
use thiserror::Error;

/// Summaries keep their sorted sample array (the ECDF handle) only up to
/// this many values; beyond it only streaming moments are retained.
pub const ECDF_SAMPLE_CAP: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("empty sample")]
    EmptySample,
    #[error("pmf supports differ: {left} vs {right} entries")]
    MismatchedSupports { left: usize, right: usize },
    #[error("replicas must emit the same number of samples ({0} vs {1})")]
    MismatchedReplicaOutputs(usize, usize),
    #[error("need at least one replica")]
    ZeroReplicas,
    #[error("summary exceeded the ECDF cap; sorted samples unavailable")]
    EcdfUnavailable,
}

/// Deterministic per-replica generator: the master seed keys the cipher and
/// the replica index selects the stream.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

/// Moments, standard errors and the sorted-sample ECDF of one batch.
#[derive(Debug, Clone)]
pub struct EmpiricalSummary {
    n: usize,
    mean: f64,
    variance: f64,
    m3: f64,
    m4: f64,
    sorted: Option<Vec<f64>>,
}

impl EmpiricalSummary {
    pub fn from_samples(samples: Vec<f64>) -> Result<Self, StatsError> {
        if samples.is_empty() {
            return Err(StatsError::EmptySample);
        }
        let n = samples.len();
        let mut acc = KahanSum::new();
        for &x in &samples {
            acc.add(x);
        }
        let mean = acc.value() / n as f64;
        let mut c2 = KahanSum::new();
        let mut c3 = KahanSum::new();
        let mut c4 = KahanSum::new();
        for &x in &samples {
            let d = x - mean;
            c2.add(d * d);
            c3.add(d * d * d);
            c4.add(d * d * d * d);
        }
        let variance = if n > 1 {
            c2.value() / (n - 1) as f64
        } else {
            0.0
        };
        let sorted = (n <= ECDF_SAMPLE_CAP).then(|| {
            let mut s = samples;
            s.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite samples"));
            s
        });
        Ok(Self {
            n,
            mean,
            variance,
            m3: c3.value() / n as f64,
            m4: c4.value() / n as f64,
            sorted,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Central moment of order 2, 3 or 4 (normalized by n).
    pub fn central_moment(&self, order: u32) -> f64 {
        match order {
            2 => self.variance * (self.n.saturating_sub(1)) as f64 / self.n as f64,
            3 => self.m3,
            4 => self.m4,
            _ => panic!("central moments tracked up to order 4"),
        }
    }

    /// Standard error of the mean.
    pub fn se_mean(&self) -> f64 {
        (self.variance / self.n as f64).sqrt()
    }

    pub fn sorted_samples(&self) -> Result<&[f64], StatsError> {
        self.sorted.as_deref().ok_or(StatsError::EcdfUnavailable)
    }

    /// Right-continuous empirical CDF.
    pub fn ecdf(&self, x: f64) -> Result<f64, StatsError> {
        let s = self.sorted_samples()?;
        Ok(s.partition_point(|&v| v <= x) as f64 / self.n as f64)
    }

    pub fn ks_distance(&self, other: &EmpiricalSummary) -> Result<f64, StatsError> {
        ks_two_sample(self.sorted_samples()?, other.sorted_samples()?)
    }

    pub fn ks_vs_cdf<F: Fn(f64) -> f64>(&self, cdf: F) -> Result<f64, StatsError> {
        ks_vs_cdf(self.sorted_samples()?, cdf)
    }
}

/// Output of a replica run: the pooled per-sample summary and the summary of
/// per-replica means. When replicas emit several (dependent) samples each,
/// standard errors should come from `replica_means`.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub samples: EmpiricalSummary,
    pub replica_means: EmpiricalSummary,
}

/// Maps replica indices to outputs on a pool of `workers` threads, in
/// replica order. Replica i draws from `replica_rng(seed, i)`, so the result
/// does not depend on the worker count.
pub fn collect_replicas<T, F>(n_replicas: u64, seed: u64, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> T + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| {
        (0..n_replicas)
            .into_par_iter()
            .map(|i| {
                let mut rng = replica_rng(seed, i);
                f(i, &mut rng)
            })
            .collect()
    })
}

/// Runs `n_replicas` independent replicas on a pool of `workers` threads.
///
/// Each replica outputs a fixed number of samples; outputs are concatenated
/// in replica order before summarizing.
pub fn run_replicas<F>(
    n_replicas: u64,
    seed: u64,
    workers: usize,
    sampler: F,
) -> Result<RunSummary, StatsError>
where
    F: Fn(u64, &mut ChaCha8Rng) -> Vec<f64> + Sync,
{
    if n_replicas == 0 {
        return Err(StatsError::ZeroReplicas);
    }
    let outputs: Vec<Vec<f64>> = collect_replicas(n_replicas, seed, workers, sampler);
    let per = outputs[0].len();
    if per == 0 {
        return Err(StatsError::EmptySample);
    }
    let mut flat = Vec::with_capacity(per * outputs.len());
    let mut means = Vec::with_capacity(outputs.len());
    for out in &outputs {
        if out.len() != per {
            return Err(StatsError::MismatchedReplicaOutputs(per, out.len()));
        }
        let mut acc = KahanSum::new();
        for &x in out {
            acc.add(x);
        }
        means.push(acc.value() / per as f64);
        flat.extend_from_slice(out);
    }
    Ok(RunSummary {
        samples: EmpiricalSummary::from_samples(flat)?,
        replica_means: EmpiricalSummary::from_samples(means)?,
    })
}

/// Two-sample Kolmogorov-Smirnov distance between sorted samples.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(d)
}

/// KS distance between a sorted sample's ECDF and a reference CDF, evaluated
/// on both sides of every step.
pub fn ks_vs_cdf<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> Result<f64, StatsError> {
    if sorted.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d
            .max((i as f64 / n - f).abs())
            .max(((i + 1) as f64 / n - f).abs());
    }
    Ok(d)
}

/// Total variation distance (1/2) Σ |p_κ - q_κ| between pmfs on the same
/// support range.
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64, StatsError> {
    if p.len() != q.len() {
        return Err(StatsError::MismatchedSupports {
            left: p.len(),
            right: q.len(),
        });
    }
    if p.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let mut acc = KahanSum::new();
    for (&a, &b) in p.iter().zip(q) {
        acc.add((a - b).abs());
    }
    Ok(0.5 * acc.value())
}

/// Distance metric recorded in a comparison report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Ks,
    Tv,
    ZScore,
    AbsDiff,
    AbsLogDiff,
    Band,
}

/// One cross-check outcome: empirical value against a reference, a distance
/// under a declared metric, and the tolerance it must meet.
///
/// The wall-clock runtime is kept for display but excluded from
/// serialization so that reports are byte-identical across reruns.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub name: String,
    pub empirical: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub se: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
    pub provenance: String,
    pub metric: Metric,
    pub distance: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip)]
    pub runtime: Duration,
}

impl ComparisonReport {
    fn build(
        name: &str,
        empirical: f64,
        se: Option<f64>,
        reference: Option<f64>,
        provenance: &str,
        metric: Metric,
        distance: f64,
        tolerance: f64,
    ) -> Self {
        Self {
            name: name.to_string(),
            empirical,
            se,
            reference,
            provenance: provenance.to_string(),
            metric,
            distance,
            tolerance,
            pass: distance <= tolerance,
            runtime: Duration::ZERO,
        }
    }

    pub fn ks(name: &str, distance: f64, tolerance: f64, provenance: &str) -> Self {
        Self::build(
            name,
            distance,
            None,
            None,
            provenance,
            Metric::Ks,
            distance,
            tolerance,
        )
    }

    pub fn tv(name: &str, distance: f64, tolerance: f64, provenance: &str) -> Self {
        Self::build(
            name,
            distance,
            None,
            None,
            provenance,
            Metric::Tv,
            distance,
            tolerance,
        )
    }

    pub fn abs_diff(
        name: &str,
        empirical: f64,
        reference: f64,
        tolerance: f64,
        provenance: &str,
    ) -> Self {
        let d = (empirical - reference).abs();
        Self::build(
            name,
            empirical,
            None,
            Some(reference),
            provenance,
            Metric::AbsDiff,
            d,
            tolerance,
        )
    }

    pub fn abs_log_diff(
        name: &str,
        ln_empirical: f64,
        ln_reference: f64,
        tolerance: f64,
        provenance: &str,
    ) -> Self {
        let d = (ln_empirical - ln_reference).abs();
        Self::build(
            name,
            ln_empirical,
            None,
            Some(ln_reference),
            provenance,
            Metric::AbsLogDiff,
            d,
            tolerance,
        )
    }

    /// z-score report for an externally computed standard error (delta
    /// method and friends); `moment_compare` covers the plain-mean case.
    pub fn z_score(
        name: &str,
        empirical: f64,
        reference: f64,
        se: f64,
        k_sigma: f64,
        provenance: &str,
    ) -> Self {
        let diff = (empirical - reference).abs();
        let z = if diff == 0.0 {
            0.0
        } else if se == 0.0 {
            f64::INFINITY
        } else {
            diff / se
        };
        Self::build(
            name,
            empirical,
            Some(se),
            Some(reference),
            provenance,
            Metric::ZScore,
            z,
            k_sigma,
        )
    }

    /// Pass when `value` lies in [lo, hi].
    pub fn band(name: &str, value: f64, lo: f64, hi: f64, provenance: &str) -> Self {
        let center = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        Self::build(
            name,
            value,
            None,
            Some(center),
            provenance,
            Metric::Band,
            (value - center).abs(),
            half,
        )
    }

    pub fn with_runtime(mut self, runtime: Duration) -> Self {
        self.runtime = runtime;
        self
    }
}

/// z-score comparison of a summary's mean against a reference value;
/// passes when |mean - reference| <= k_sigma standard errors.
pub fn moment_compare(
    summary: &EmpiricalSummary,
    name: &str,
    reference: f64,
    k_sigma: f64,
    provenance: &str,
) -> ComparisonReport {
    let se = summary.se_mean();
    let diff = (summary.mean() - reference).abs();
    // a degenerate sample with a mismatched value is flagged as an
    // unconditional failure rather than 0/0
    let z = if diff == 0.0 {
        0.0
    } else if se == 0.0 {
        f64::INFINITY
    } else {
        diff / se
    };
    ComparisonReport::build(
        name,
        summary.mean(),
        Some(se),
        Some(reference),
        provenance,
        Metric::ZScore,
        z,
        k_sigma,
    )
}
