//! Closed-form finite-n laws and direct samplers for the depth of a uniform
//! point: the i.i.d.-sum representation
//!
//!   D_n(k) = Σ_{i<=k} a_i V_i 1{U_i <= a_i/A_i},
//!
//! its exact Laplace transform (a product over i of
//! 1 - a_i/A_i + (a_i/A_i) g(λ a_i/a_n) with g(x) = (e^x-1)/x, g(0) = 1),
//! the exact mean (1/2) Σ a_i²/A_i, the splitting-index pmf of two marked
//! points, and the joint samplers for two and ℓ marked paths.
//!
//! Products are accumulated as sums of log1p terms so they survive n = 10^6
//! without underflow. These laws are the ground truth the tree simulator is
//! cross-checked against.
//!
//! The summable zero-index regime (Σ i^{-1} a_i < ∞) has no closed-form
//! limit: its mean is the limit of `mean_dn_exact` and samples of the limit
//! are approximated by `dn_iid_sample` at a large truncation n, with
//! truncation error bounded by the tail of the mean series.

use crate::numeric::{exp_ratio_m1, KahanSum};
use crate::sequences::{LengthSequence, SequenceError};
use rand::Rng;
use thiserror::Error;

/// exp() overflows past this; ln-scale results beyond it are range errors.
const MAX_EXP_ARG: f64 = 709.0;

#[derive(Debug, Error)]
pub enum LawError {
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error("Laplace transform overflows: ln value {ln_value} exceeds exp range")]
    Overflow { ln_value: f64 },
    #[error("increment range requires 0 <= s <= t <= 1, got s={s}, t={t}")]
    BadIncrementRange { s: f64, t: f64 },
    #[error("conditional sampler requires n > k >= 1 and ell >= 1 (n={n}, k={k}, ell={ell})")]
    BadConditionalArgs { n: usize, k: usize, ell: usize },
    #[error("projection indices must be ascending and within 1..={n}")]
    BadIndexList { n: usize },
}

/// One draw of D_n = Σ a_i V_i 1{U_i <= a_i/A_i}.
///
/// Per index the stream is: one uniform for U_i, then one for V_i only when
/// the indicator fires.
pub fn dn_iid_sample<R: Rng>(seq: &LengthSequence, n: usize, rng: &mut R) -> Result<f64, LawError> {
    Ok(dn_iid_sample_at(seq, n, &[n], rng)?[0])
}

/// Partial sums D_n(k) of the representation at each k in `ks`
/// (ascending, within 1..=n).
pub fn dn_iid_sample_at<R: Rng>(
    seq: &LengthSequence,
    n: usize,
    ks: &[usize],
    rng: &mut R,
) -> Result<Vec<f64>, LawError> {
    seq.a_value(n)?;
    if ks.is_empty() || ks.windows(2).any(|w| w[0] > w[1]) || ks[0] < 1 || *ks.last().unwrap() > n {
        return Err(LawError::BadIndexList { n });
    }
    let lengths = seq.lengths();
    let prefix = seq.prefix_sums();
    let mut out = Vec::with_capacity(ks.len());
    let mut acc = 0.0;
    let mut next = 0usize;
    for i in 1..=*ks.last().unwrap() {
        let a = lengths[i - 1];
        let r = a / prefix[i];
        if rng.gen::<f64>() <= r {
            acc += a * rng.gen::<f64>();
        }
        while next < ks.len() && ks[next] == i {
            out.push(acc);
            next += 1;
        }
    }
    Ok(out)
}

/// ln E[exp(λ D_n / a_n)], exact up to float rounding.
pub fn ln_laplace_dn_exact(seq: &LengthSequence, n: usize, lambda: f64) -> Result<f64, LawError> {
    ln_product_over(seq, n, 1, n, lambda)
}

/// E[exp(λ D_n / a_n)]; errors when the ln-scale value exceeds the exp range.
pub fn laplace_dn_exact(seq: &LengthSequence, n: usize, lambda: f64) -> Result<f64, LawError> {
    let ln = ln_laplace_dn_exact(seq, n, lambda)?;
    if ln > MAX_EXP_ARG {
        return Err(LawError::Overflow { ln_value: ln });
    }
    Ok(ln.exp())
}

/// ln E[exp(λ (ξ_n(t) - ξ_n(s)))]: the product restricted to
/// i ∈ (⌊ns⌋, ⌊nt⌋].
pub fn ln_laplace_increment_exact(
    seq: &LengthSequence,
    n: usize,
    s: f64,
    t: f64,
    lambda: f64,
) -> Result<f64, LawError> {
    if !(0.0..=1.0).contains(&s) || !(0.0..=1.0).contains(&t) || s > t {
        return Err(LawError::BadIncrementRange { s, t });
    }
    let lo = (n as f64 * s).floor() as usize;
    let hi = (n as f64 * t).floor() as usize;
    ln_product_over(seq, n, lo + 1, hi, lambda)
}

/// E[exp(λ (ξ_n(t) - ξ_n(s)))].
pub fn laplace_increment_exact(
    seq: &LengthSequence,
    n: usize,
    s: f64,
    t: f64,
    lambda: f64,
) -> Result<f64, LawError> {
    let ln = ln_laplace_increment_exact(seq, n, s, t, lambda)?;
    if ln > MAX_EXP_ARG {
        return Err(LawError::Overflow { ln_value: ln });
    }
    Ok(ln.exp())
}

/// ln(1 - r + r g(x)) = log1p(r (g(x) - 1)). Past the exp overflow point the
/// factor is dominated by r e^x / x, whose logarithm is still representable.
#[inline]
fn ln_factor(r: f64, x: f64) -> f64 {
    if x > 700.0 {
        r.ln() + x - x.ln()
    } else {
        (r * exp_ratio_m1(x)).ln_1p()
    }
}

fn ln_product_over(
    seq: &LengthSequence,
    n: usize,
    from: usize,
    to: usize,
    lambda: f64,
) -> Result<f64, LawError> {
    let a_n = seq.a_value(n)?;
    let lengths = seq.lengths();
    let prefix = seq.prefix_sums();
    let mut acc = KahanSum::new();
    for i in from..=to {
        let a = lengths[i - 1];
        let r = a / prefix[i];
        acc.add(ln_factor(r, lambda * a / a_n));
    }
    Ok(acc.value())
}

/// E[D_n] = (1/2) Σ_{i<=n} a_i² / A_i.
pub fn mean_dn_exact(seq: &LengthSequence, n: usize) -> Result<f64, LawError> {
    seq.a_value(n)?;
    let lengths = seq.lengths();
    let prefix = seq.prefix_sums();
    let mut acc = KahanSum::new();
    for i in 1..=n {
        let a = lengths[i - 1];
        acc.add(a * a / prefix[i]);
    }
    Ok(0.5 * acc.value())
}

/// The law of the splitting index S_n(2):
/// p_κ = (a_κ/A_κ)² ∏_{i>κ} (1 - (a_i/A_i)²).
#[derive(Debug, Clone)]
pub struct SplittingPmf {
    n: usize,
    probabilities: Vec<f64>,
    cdf: Vec<f64>,
}

impl SplittingPmf {
    pub fn n(&self) -> usize {
        self.n
    }

    /// p_1..p_n.
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn total(&self) -> f64 {
        let mut acc = KahanSum::new();
        for &p in &self.probabilities {
            acc.add(p);
        }
        acc.value()
    }

    /// Inverse-CDF draw, O(log n).
    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let u = rng.gen::<f64>() * self.cdf[self.n - 1];
        (self.cdf.partition_point(|&c| c <= u) + 1).min(self.n)
    }
}

pub fn splitting_index_pmf(seq: &LengthSequence, n: usize) -> Result<SplittingPmf, LawError> {
    seq.a_value(n)?;
    let lengths = seq.lengths();
    let prefix = seq.prefix_sums();
    let mut probabilities = vec![0.0; n];
    let mut tail = KahanSum::new(); // Σ_{i>κ} log1p(-(a_i/A_i)²)
    for kappa in (1..=n).rev() {
        let r = lengths[kappa - 1] / prefix[kappa];
        probabilities[kappa - 1] = (2.0 * r.ln() + tail.value()).exp();
        if kappa > 1 {
            tail.add((-r * r).ln_1p());
        }
    }
    let mut cdf = Vec::with_capacity(n);
    let mut acc = KahanSum::new();
    for &p in &probabilities {
        acc.add(p);
        cdf.push(acc.value());
    }
    Ok(SplittingPmf {
        n,
        probabilities,
        cdf,
    })
}

/// Joint law of one index of two marked paths above their splitting index:
/// P(1,0) = P(0,1) = a_i/(A_i + a_i), P(0,0) = A_{i-1}/(A_i + a_i),
/// P(1,1) = 0.
#[derive(Debug, Clone, Copy)]
pub struct BernoulliPairLaw {
    pub i: usize,
    pub p10: f64,
    pub p01: f64,
    pub p00: f64,
    pub p11: f64,
}

impl BernoulliPairLaw {
    pub fn new(seq: &LengthSequence, i: usize) -> Result<Self, LawError> {
        let a = seq.a_value(i)?;
        let denom = seq.prefix_sum(i)? + a;
        let p = a / denom;
        Ok(Self {
            i,
            p10: p,
            p01: p,
            p00: seq.prefix_sum(i - 1)? / denom,
            p11: 0.0,
        })
    }

    /// One uniform draw decides the pair.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> (bool, bool) {
        let w = rng.gen::<f64>();
        if w < self.p10 {
            (true, false)
        } else if w < self.p10 + self.p01 {
            (false, true)
        } else {
            (false, false)
        }
    }
}

/// Joint sample of the two marked paths (Δ^{(1)}, Δ^{(2)}) evaluated at the
/// requested indices, together with the splitting index κ it was built from.
#[derive(Debug, Clone)]
pub struct TwoPointSample {
    pub kappa: usize,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

/// Sampler for the joint two-path law: κ from the splitting pmf, a shared
/// i.i.d. sum below κ, independent uniforms on segment κ, and Bernoulli
/// pairs above. Setup is O(n); each draw is O(n) path work after an
/// O(log n) κ draw.
pub struct TwoPointSampler<'a> {
    seq: &'a LengthSequence,
    n: usize,
    splitting: SplittingPmf,
}

impl<'a> TwoPointSampler<'a> {
    pub fn new(seq: &'a LengthSequence, n: usize) -> Result<Self, LawError> {
        Ok(Self {
            seq,
            n,
            splitting: splitting_index_pmf(seq, n)?,
        })
    }

    pub fn splitting(&self) -> &SplittingPmf {
        &self.splitting
    }

    /// Evaluates both paths at each index in `ks` (ascending, within 1..=n).
    pub fn sample<R: Rng>(&self, ks: &[usize], rng: &mut R) -> Result<TwoPointSample, LawError> {
        let n = self.n;
        if ks.is_empty()
            || ks.windows(2).any(|w| w[0] > w[1])
            || ks[0] < 1
            || *ks.last().unwrap() > n
        {
            return Err(LawError::BadIndexList { n });
        }
        let lengths = self.seq.lengths();
        let prefix = self.seq.prefix_sums();
        let kappa = self.splitting.sample(rng);
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        let mut first = Vec::with_capacity(ks.len());
        let mut second = Vec::with_capacity(ks.len());
        let mut next = 0usize;
        for i in 1..=*ks.last().unwrap() {
            let a = lengths[i - 1];
            match i.cmp(&kappa) {
                std::cmp::Ordering::Less => {
                    // shared prefix of the two paths
                    if rng.gen::<f64>() <= a / prefix[i] {
                        let inc = a * rng.gen::<f64>();
                        d1 += inc;
                        d2 += inc;
                    }
                }
                std::cmp::Ordering::Equal => {
                    d1 += a * rng.gen::<f64>();
                    d2 += a * rng.gen::<f64>();
                }
                std::cmp::Ordering::Greater => {
                    let q = a / (prefix[i] + a);
                    let w = rng.gen::<f64>();
                    if w < q {
                        d1 += a * rng.gen::<f64>();
                    } else if w < 2.0 * q {
                        d2 += a * rng.gen::<f64>();
                    }
                }
            }
            while next < ks.len() && ks[next] == i {
                first.push(d1);
                second.push(d2);
                next += 1;
            }
        }
        Ok(TwoPointSample {
            kappa,
            first,
            second,
        })
    }
}

/// One draw of the ℓ tail increments Σ_{i=k+2}^n a_i V_i^{(j)} B^{(i,j)},
/// where the exchangeable ℓ-uplet puts mass a_i/(A_{i-1} + ℓ a_i) on each
/// single-one configuration and A_{i-1}/(A_{i-1} + ℓ a_i) on all-zeros.
pub fn ell_point_conditional_sample<R: Rng>(
    seq: &LengthSequence,
    n: usize,
    ell: usize,
    k: usize,
    rng: &mut R,
) -> Result<Vec<f64>, LawError> {
    if ell < 1 || k < 1 || n <= k {
        return Err(LawError::BadConditionalArgs { n, k, ell });
    }
    seq.a_value(n)?;
    let lengths = seq.lengths();
    let prefix = seq.prefix_sums();
    let mut out = vec![0.0; ell];
    for i in (k + 2)..=n {
        let a = lengths[i - 1];
        let q = a / (prefix[i - 1] + ell as f64 * a);
        let w = rng.gen::<f64>();
        if w < ell as f64 * q {
            let j = ((w / q) as usize).min(ell - 1);
            out[j] += a * rng.gen::<f64>();
        }
    }
    Ok(out)
}

/// ln E[exp(Σ_j λ_j T_j / a_n)] for the ℓ tail increments above: the product
/// over i of 1 + (a_i/(A_{i-1} + ℓ a_i)) Σ_j (g(λ_j a_i/a_n) - 1).
///
/// For ℓ = 1 this reduces index-by-index to the factors of the D_n product,
/// which pins down the grouping of the sum inside the logarithm.
pub fn ln_laplace_ell_conditional(
    seq: &LengthSequence,
    n: usize,
    ell: usize,
    k: usize,
    lambdas: &[f64],
) -> Result<f64, LawError> {
    if ell < 1 || k < 1 || n <= k || lambdas.len() != ell {
        return Err(LawError::BadConditionalArgs { n, k, ell });
    }
    let a_n = seq.a_value(n)?;
    let lengths = seq.lengths();
    let prefix = seq.prefix_sums();
    let mut acc = KahanSum::new();
    for i in (k + 2)..=n {
        let a = lengths[i - 1];
        let q = a / (prefix[i - 1] + ell as f64 * a);
        let s: f64 = lambdas.iter().map(|&l| exp_ratio_m1(l * a / a_n)).sum();
        if !s.is_finite() {
            return Err(LawError::Overflow {
                ln_value: f64::INFINITY,
            });
        }
        acc.add((q * s).ln_1p());
    }
    Ok(acc.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn single_segment_depth_is_uniform() {
        let seq = LengthSequence::constant(2.0, 1).unwrap();
        let mut r = rng(1);
        let n_draws = 20_000;
        let mut mean = 0.0;
        for _ in 0..n_draws {
            let d = dn_iid_sample(&seq, 1, &mut r).unwrap();
            assert!((0.0..=2.0).contains(&d));
            mean += d;
        }
        mean /= n_draws as f64;
        // uniform(0,2): mean 1, sd 2/sqrt(12)
        let se = 2.0 / 12f64.sqrt() / (n_draws as f64).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * se);
    }

    #[test]
    fn iid_sampler_mean_matches_exact_mean() {
        let seq = LengthSequence::constant(1.0, 10_000).unwrap();
        let exact = mean_dn_exact(&seq, 10_000).unwrap();
        let mut r = rng(2);
        let n_draws = 20_000;
        let samples: Vec<f64> = (0..n_draws)
            .map(|_| dn_iid_sample(&seq, 10_000, &mut r).unwrap())
            .collect();
        let mean: f64 = samples.iter().sum::<f64>() / n_draws as f64;
        let var: f64 =
            samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n_draws - 1) as f64;
        let se = (var / n_draws as f64).sqrt();
        assert!(
            (mean - exact).abs() < 3.0 * se,
            "mean {mean} vs exact {exact}"
        );
    }

    #[test]
    fn partial_sums_are_monotone() {
        let seq = LengthSequence::power(1.0, 500).unwrap();
        let mut r = rng(3);
        for _ in 0..200 {
            let path = dn_iid_sample_at(&seq, 500, &[100, 250, 400, 500], &mut r).unwrap();
            assert!(path.windows(2).all(|w| w[0] <= w[1]));
        }
        assert!(matches!(
            dn_iid_sample_at(&seq, 500, &[], &mut r),
            Err(LawError::BadIndexList { .. })
        ));
        assert!(matches!(
            dn_iid_sample_at(&seq, 500, &[200, 100], &mut r),
            Err(LawError::BadIndexList { .. })
        ));
    }

    #[test]
    fn laplace_at_zero_is_exactly_one() {
        let seq = LengthSequence::power(1.0, 1000).unwrap();
        assert_eq!(laplace_dn_exact(&seq, 1000, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn laplace_two_factor_hand_product() {
        // constant(1), n=2, λ=1: factor i=1 is g(1) = e-1, factor i=2 is
        // 1 - 1/2 + (1/2) g(1) = e/2
        let seq = LengthSequence::constant(1.0, 2).unwrap();
        let e = std::f64::consts::E;
        let expected = (e - 1.0) * e / 2.0;
        let got = laplace_dn_exact(&seq, 2, 1.0).unwrap();
        assert!((got - expected).abs() < 1e-14 * expected);
    }

    #[test]
    fn mean_dn_exact_values() {
        let seq = LengthSequence::constant(3.0, 2).unwrap();
        assert!((mean_dn_exact(&seq, 1).unwrap() - 1.5).abs() < 1e-15);
        let seq = LengthSequence::constant(1.0, 2).unwrap();
        assert!((mean_dn_exact(&seq, 2).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn laplace_derivative_at_zero_recovers_mean() {
        let n = 100_000;
        let seq = LengthSequence::power(1.0, n).unwrap();
        let a_n = seq.a_value(n).unwrap();
        let h = 1e-5;
        let plus = laplace_dn_exact(&seq, n, h).unwrap();
        let minus = laplace_dn_exact(&seq, n, -h).unwrap();
        let deriv = (plus - minus) / (2.0 * h) * a_n;
        let exact = mean_dn_exact(&seq, n).unwrap();
        assert!(
            (deriv - exact).abs() < 1e-4 * exact,
            "deriv {deriv} vs mean {exact}"
        );
    }

    #[test]
    fn splitting_pmf_trivial_and_normalized() {
        let seq = LengthSequence::constant(1.0, 1).unwrap();
        let pmf = splitting_index_pmf(&seq, 1).unwrap();
        assert!((pmf.probabilities()[0] - 1.0).abs() < 1e-15);

        for (seq, n) in [
            (LengthSequence::power(1.0, 10_000).unwrap(), 10_000),
            (LengthSequence::constant(1.0, 10_000).unwrap(), 10_000),
            (LengthSequence::log_power(-2.0, 10_000).unwrap(), 10_000),
        ] {
            let pmf = splitting_index_pmf(&seq, n).unwrap();
            assert!((pmf.total() - 1.0).abs() < 1e-10, "{}", seq.label());
            assert!(pmf.probabilities().iter().all(|&p| p >= 0.0));
        }
    }

    #[test]
    fn splitting_sampler_matches_pmf() {
        let seq = LengthSequence::power(1.0, 50).unwrap();
        let pmf = splitting_index_pmf(&seq, 50).unwrap();
        let mut r = rng(4);
        let n_draws = 50_000;
        let mut counts = vec![0usize; 50];
        for _ in 0..n_draws {
            counts[pmf.sample(&mut r) - 1] += 1;
        }
        let tv: f64 = counts
            .iter()
            .zip(pmf.probabilities())
            .map(|(&c, &p)| (c as f64 / n_draws as f64 - p).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.01, "tv {tv}");
    }

    #[test]
    fn bernoulli_pair_algebra() {
        let seq = LengthSequence::power(1.0, 200).unwrap();
        for i in [1usize, 2, 17, 100, 200] {
            let law = BernoulliPairLaw::new(&seq, i).unwrap();
            assert_eq!(law.p11, 0.0);
            let total = law.p10 + law.p01 + law.p00 + law.p11;
            assert!((total - 1.0).abs() < 1e-12);
            // conditional law of B1 given B2 = 0 is Bernoulli(a_i/A_i)
            let r = seq.a_value(i).unwrap() / seq.prefix_sum(i).unwrap();
            assert!((law.p10 / (law.p10 + law.p00) - r).abs() < 1e-12);
        }
    }

    #[test]
    fn two_point_single_segment() {
        let seq = LengthSequence::constant(1.0, 1).unwrap();
        let sampler = TwoPointSampler::new(&seq, 1).unwrap();
        let mut r = rng(5);
        let n_draws = 20_000;
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for _ in 0..n_draws {
            let s = sampler.sample(&[1], &mut r).unwrap();
            assert_eq!(s.kappa, 1);
            assert!((0.0..=1.0).contains(&s.first[0]));
            m1 += s.first[0];
            m2 += s.second[0];
        }
        let se = 3.0 / 12f64.sqrt() / (n_draws as f64).sqrt();
        assert!((m1 / n_draws as f64 - 0.5).abs() < se);
        assert!((m2 / n_draws as f64 - 0.5).abs() < se);
    }

    #[test]
    fn two_point_paths_share_prefix_below_kappa() {
        let seq = LengthSequence::power(1.0, 100).unwrap();
        let sampler = TwoPointSampler::new(&seq, 100).unwrap();
        let mut r = rng(6);
        for _ in 0..500 {
            let ks: Vec<usize> = (1..=100).collect();
            let s = sampler.sample(&ks, &mut r).unwrap();
            for k in 1..s.kappa {
                assert_eq!(s.first[k - 1], s.second[k - 1]);
            }
            assert!(s.first.windows(2).all(|w| w[0] <= w[1]));
            assert!(s.second.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn ell_uplet_base_case_and_mass() {
        let seq = LengthSequence::power(1.0, 100).unwrap();
        let mut r = rng(7);
        // n = k+1: the sum over (k+2)..=n is empty
        let out = ell_point_conditional_sample(&seq, 11, 3, 10, &mut r).unwrap();
        assert_eq!(out, vec![0.0, 0.0, 0.0]);
        // masses add to one
        for i in 2..=100usize {
            for ell in 1..=4usize {
                let a = seq.a_value(i).unwrap();
                let denom = seq.prefix_sum(i - 1).unwrap() + ell as f64 * a;
                let total = ell as f64 * (a / denom) + seq.prefix_sum(i - 1).unwrap() / denom;
                assert!((total - 1.0).abs() < 1e-15);
            }
        }
        assert!(matches!(
            ell_point_conditional_sample(&seq, 10, 0, 5, &mut r),
            Err(LawError::BadConditionalArgs { .. })
        ));
        assert!(matches!(
            ell_point_conditional_sample(&seq, 10, 2, 10, &mut r),
            Err(LawError::BadConditionalArgs { .. })
        ));
    }

    #[test]
    fn increment_product_edges() {
        let seq = LengthSequence::power(1.0, 1000).unwrap();
        // empty range
        assert_eq!(
            laplace_increment_exact(&seq, 1000, 0.4, 0.4, 1.0).unwrap(),
            1.0
        );
        // full range coincides with the D_n transform, same summation order
        let full = ln_laplace_increment_exact(&seq, 1000, 0.0, 1.0, 0.7).unwrap();
        let dn = ln_laplace_dn_exact(&seq, 1000, 0.7).unwrap();
        assert_eq!(full, dn);
        assert!(matches!(
            laplace_increment_exact(&seq, 1000, 0.8, 0.2, 1.0),
            Err(LawError::BadIncrementRange { .. })
        ));
    }

    #[test]
    fn ell_conditional_laplace_reduces_to_product_for_one_point() {
        // the grouped reading of the conditional transform must collapse to
        // the plain per-index product when ℓ = 1
        let n = 1000;
        let k = 99;
        let seq = LengthSequence::power(1.0, n).unwrap();
        let lhs = ln_laplace_ell_conditional(&seq, n, 1, k, &[0.8]).unwrap();
        let rhs = ln_laplace_increment_exact(&seq, n, (k + 1) as f64 / n as f64, 1.0, 0.8).unwrap();
        assert!(
            (lhs - rhs).abs() < 1e-12 * rhs.abs().max(1.0),
            "{lhs} vs {rhs}"
        );
    }

    #[test]
    fn conditional_sampler_mgf_matches_conditional_laplace() {
        let n = 400;
        let k = 10;
        let ell = 3;
        let lambdas = [0.5, 0.25, 0.75];
        let seq = LengthSequence::power(1.0, n).unwrap();
        let a_n = seq.a_value(n).unwrap();
        let exact = ln_laplace_ell_conditional(&seq, n, ell, k, &lambdas)
            .unwrap()
            .exp();
        let mut r = rng(8);
        let n_draws = 40_000;
        let mut vals = Vec::with_capacity(n_draws);
        for _ in 0..n_draws {
            let t = ell_point_conditional_sample(&seq, n, ell, k, &mut r).unwrap();
            let e: f64 = t.iter().zip(&lambdas).map(|(x, l)| l * x / a_n).sum();
            vals.push(e.exp());
        }
        let mean: f64 = vals.iter().sum::<f64>() / n_draws as f64;
        let var: f64 =
            vals.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n_draws - 1) as f64;
        let se = (var / n_draws as f64).sqrt();
        assert!(
            (mean - exact).abs() < 3.0 * se,
            "mgf {mean} vs exact {exact}"
        );
    }

    #[test]
    fn overflow_is_a_range_error() {
        let seq = LengthSequence::constant(1.0, 100).unwrap();
        assert!(matches!(
            laplace_dn_exact(&seq, 100, 800.0),
            Err(LawError::Overflow { .. })
        ));
        // the ln-scale variant still evaluates
        assert!(ln_laplace_dn_exact(&seq, 100, 800.0).unwrap() > MAX_EXP_ARG);
    }
}
