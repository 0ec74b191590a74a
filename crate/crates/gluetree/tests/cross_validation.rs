//! Distributional cross-checks between the tree simulator, the closed-form
//! finite-n laws and the limit objects, at sizes small enough to run beside
//! the acceptance suite.

use gluetree::exact_laws::{
    dn_iid_sample, dn_iid_sample_at, laplace_dn_exact, ln_laplace_ell_conditional, TwoPointSampler,
};
use gluetree::glue_tree::GluedTree;
use gluetree::limit_laws::phi_alpha;
use gluetree::mc_stats::{
    collect_replicas, ks_two_sample, moment_compare, replica_rng, run_replicas, EmpiricalSummary,
};
use gluetree::sequences::LengthSequence;
use gluetree::tolerances;
use rand::Rng;
use std::sync::Arc;

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// Projection depths D_n(k) from the simulator against the truncated
/// i.i.d.-sum representation, at n = 500, k = 250.
#[test]
fn projection_depths_match_iid_partial_sums() {
    let n = 500;
    let k = 250;
    let seq = Arc::new(LengthSequence::power(1.0, n).unwrap());
    let tree_side = run_replicas(1_000, 101, 2, |_, rng| {
        let tree = GluedTree::grown(seq.clone(), n, rng).unwrap();
        (0..100)
            .map(|_| {
                let p = tree.sample_uniform_point(rng);
                tree.projection_depths(&p, &[k]).unwrap()[0]
            })
            .collect()
    })
    .unwrap();
    let iid_side = run_replicas(100_000, 102, 2, |_, rng| {
        vec![dn_iid_sample_at(&seq, n, &[k], rng).unwrap()[0]]
    })
    .unwrap();
    let d = tree_side.samples.ks_distance(&iid_side.samples).unwrap();
    assert!(d < tolerances::KS_DISTANCE, "ks {d}");
}

/// Marginals of the joint two-path sampler have the D_n law.
#[test]
fn two_point_marginals_match_dn_law() {
    let n = 200;
    let seq = LengthSequence::power(1.0, n).unwrap();
    let sampler = TwoPointSampler::new(&seq, n).unwrap();
    let mut rng = replica_rng(103, 0);
    let n_draws = 100_000;
    let mut first = Vec::with_capacity(n_draws);
    let mut second = Vec::with_capacity(n_draws);
    for _ in 0..n_draws {
        let s = sampler.sample(&[n], &mut rng).unwrap();
        first.push(s.first[0]);
        second.push(s.second[0]);
    }
    let mut rng = replica_rng(104, 0);
    let iid: Vec<f64> = (0..n_draws)
        .map(|_| dn_iid_sample(&seq, n, &mut rng).unwrap())
        .collect();
    let iid = sorted(iid);
    let d1 = ks_two_sample(&sorted(first), &iid).unwrap();
    let d2 = ks_two_sample(&sorted(second), &iid).unwrap();
    assert!(d1 < tolerances::KS_DISTANCE, "first marginal ks {d1}");
    assert!(d2 < tolerances::KS_DISTANCE, "second marginal ks {d2}");
}

/// Joint tail probabilities P(both paths gain more than a threshold above
/// the cut) agree between the explicit joint sampler and tree marking.
#[test]
fn two_point_joint_tails_match_tree_marking() {
    let n = 200;
    let cut = 100;
    let seq = Arc::new(LengthSequence::power(1.0, n).unwrap());
    let a_n = seq.a_value(n).unwrap();
    let threshold = 0.4 * a_n;

    let sampler = TwoPointSampler::new(&seq, n).unwrap();
    let joint = run_replicas(2_000, 105, 2, |_, rng| {
        (0..50)
            .map(|_| {
                let s = sampler.sample(&[cut, n], rng).unwrap();
                let t1 = s.first[1] - s.first[0];
                let t2 = s.second[1] - s.second[0];
                f64::from(t1 > threshold && t2 > threshold)
            })
            .collect()
    })
    .unwrap();

    let tree = run_replicas(2_000, 106, 2, |_, rng| {
        let tree = GluedTree::grown(seq.clone(), n, rng).unwrap();
        (0..50)
            .map(|_| {
                let marks = tree.mark_many(2, rng).unwrap();
                let tails: Vec<f64> = marks
                    .points
                    .iter()
                    .map(|p| p.depth - tree.projection_depths(p, &[cut]).unwrap()[0])
                    .collect();
                f64::from(tails[0] > threshold && tails[1] > threshold)
            })
            .collect()
    })
    .unwrap();

    let diff = (joint.replica_means.mean() - tree.replica_means.mean()).abs();
    let se = (joint.replica_means.se_mean().powi(2) + tree.replica_means.se_mean().powi(2)).sqrt();
    assert!(
        diff <= 3.0 * se,
        "joint tail mismatch: {} vs {} (3se = {})",
        joint.replica_means.mean(),
        tree.replica_means.mean(),
        3.0 * se
    );
}

/// The two coordinates of a pair mark are exchangeable.
#[test]
fn pair_marks_are_exchangeable() {
    let n = 200;
    let seq = Arc::new(LengthSequence::power(1.0, n).unwrap());
    let pairs: Vec<(f64, f64)> = collect_replicas(1_000, 107, 2, |_, rng| {
        let tree = GluedTree::grown(seq.clone(), n, rng).unwrap();
        let depths: Vec<(f64, f64)> = (0..100)
            .map(|_| {
                let marks = tree.mark_many(2, rng).unwrap();
                (marks.points[0].depth, marks.points[1].depth)
            })
            .collect();
        depths
    })
    .into_iter()
    .flatten()
    .collect();
    let firsts = sorted(pairs.iter().map(|p| p.0).collect());
    let seconds = sorted(pairs.iter().map(|p| p.1).collect());
    let d = ks_two_sample(&firsts, &seconds).unwrap();
    assert!(d < tolerances::KS_DISTANCE, "ks {d}");
}

/// Empirical Laplace transform of the i.i.d.-sum sampler against the exact
/// product at λ = 0.5.
#[test]
fn empirical_laplace_matches_exact_product() {
    let n = 1_000;
    let lambda = 0.5;
    let seq = LengthSequence::power(1.0, n).unwrap();
    let a_n = seq.a_value(n).unwrap();
    let exact = laplace_dn_exact(&seq, n, lambda).unwrap();
    let run = run_replicas(100_000, 108, 2, |_, rng| {
        vec![(lambda * dn_iid_sample(&seq, n, rng).unwrap() / a_n).exp()]
    })
    .unwrap();
    let report = moment_compare(&run.samples, "laplace", exact, 3.0, "exact formula");
    assert!(
        report.pass,
        "{} vs {} (z = {})",
        run.samples.mean(),
        exact,
        report.distance
    );
}

/// One-sided exponential bound on the transform at large fixed n:
/// E[exp(λ D_n/a_n)] <= exp(c (1 + 1/α) λ e^{cλ}) for c = 1.5.
#[test]
fn laplace_exponential_bound() {
    let n = 100_000;
    let seq = LengthSequence::power(1.0, n).unwrap();
    let c = 1.5;
    for &lambda in &[0.5, 1.0, 2.0] {
        let value = laplace_dn_exact(&seq, n, lambda).unwrap();
        let bound = (c * 2.0 * lambda * (c * lambda).exp()).exp();
        assert!(value <= bound, "λ={lambda}: {value} > bound {bound}");
    }
}

/// First and second moments of D_n/a_n against the cumulants of φ_1.
#[test]
fn dn_moments_match_phi_cumulants() {
    let n = 100_000;
    let seq = LengthSequence::power(1.0, n).unwrap();
    let a_n = seq.a_value(n).unwrap();
    let scaled: Vec<f64> = collect_replicas(5_000, 109, 2, |_, rng| {
        dn_iid_sample(&seq, n, rng).unwrap() / a_n
    });
    // κ1 = 1, κ2 = 1/3 at α = 1
    let m1 = EmpiricalSummary::from_samples(scaled.clone()).unwrap();
    let r1 = moment_compare(&m1, "m1", 1.0, 3.0, "limit cumulant");
    assert!(r1.pass, "m1 {} (z = {})", m1.mean(), r1.distance);
    let m2 = EmpiricalSummary::from_samples(scaled.iter().map(|x| x * x).collect()).unwrap();
    let r2 = moment_compare(&m2, "m2", 1.0 / 3.0 + 1.0, 3.0, "limit cumulant");
    assert!(r2.pass, "m2 {} (z = {})", m2.mean(), r2.distance);
}

/// Graph-depth statistics of the unit-length genealogy: depth of the last
/// vertex near ln n and maximal depth near e·ln n (wide bands; second-order
/// corrections are large at n = 10^5).
#[test]
fn genealogy_graph_depth_statistics() {
    let n = 100_000;
    let seq = Arc::new(LengthSequence::constant(1.0, n).unwrap());
    let stats: Vec<(f64, f64)> = collect_replicas(30, 110, 4, |_, rng| {
        let tree = GluedTree::grown(seq.clone(), n, rng).unwrap();
        let g = tree.genealogy();
        (g.graph_depth(n) as f64, g.max_graph_depth() as f64)
    });
    let log_n = (n as f64).ln();
    let last = stats.iter().map(|s| s.0).sum::<f64>() / stats.len() as f64 / log_n;
    let max = stats.iter().map(|s| s.1).sum::<f64>() / stats.len() as f64 / log_n;
    assert!(
        (0.8..=1.2).contains(&last),
        "vertex-n depth / ln n = {last}"
    );
    assert!(
        (2.1..=3.0).contains(&max),
        "max depth / ln n = {max} (limit e)"
    );
}

/// The Fenwick-backed simulator against a naive linear-scan oracle: same
/// uniform draws produce the same trees, and heights from disjoint streams
/// have the same law.
#[test]
fn fenwick_growth_matches_naive_oracle() {
    struct NaiveTree {
        lengths: Vec<f64>,
        parents: Vec<usize>,
        base_depths: Vec<f64>,
    }
    impl NaiveTree {
        fn grown(seq: &LengthSequence, n: usize, rng: &mut impl Rng) -> Self {
            let mut t = NaiveTree {
                lengths: vec![seq.a_value(1).unwrap()],
                parents: vec![0],
                base_depths: vec![0.0],
            };
            for m in 2..=n {
                let total: f64 = t.lengths.iter().sum();
                let target = rng.gen::<f64>() * total;
                let mut acc = 0.0;
                let mut host = t.lengths.len() - 1;
                for (i, &len) in t.lengths.iter().enumerate() {
                    acc += len;
                    if acc > target {
                        host = i;
                        break;
                    }
                }
                let offset = rng.gen::<f64>() * t.lengths[host];
                t.parents.push(host + 1);
                t.base_depths.push(t.base_depths[host] + offset);
                t.lengths.push(seq.a_value(m).unwrap());
            }
            t
        }
        fn height(&self) -> f64 {
            self.base_depths
                .iter()
                .zip(&self.lengths)
                .map(|(b, l)| b + l)
                .fold(f64::MIN, f64::max)
        }
    }

    let n = 300;
    let seq = Arc::new(LengthSequence::power(1.0, n).unwrap());

    // same stream, same trees
    for replica in 0..100u64 {
        let mut r1 = replica_rng(111, replica);
        let mut r2 = replica_rng(111, replica);
        let fast = GluedTree::grown(seq.clone(), n, &mut r1).unwrap();
        let naive = NaiveTree::grown(&seq, n, &mut r2);
        for i in 1..=n {
            assert_eq!(
                fast.segment(i).parent as usize,
                naive.parents[i - 1],
                "replica {replica}"
            );
            assert_eq!(fast.segment(i).base_depth, naive.base_depths[i - 1]);
        }
    }

    // disjoint streams, same height law
    let fast_heights = sorted(collect_replicas(2_000, 112, 2, |_, rng| {
        GluedTree::grown(seq.clone(), n, rng).unwrap().height()
    }));
    let naive_heights = sorted(collect_replicas(2_000, 113, 2, |_, rng| {
        NaiveTree::grown(&seq, n, rng).height()
    }));
    let d = ks_two_sample(&fast_heights, &naive_heights).unwrap();
    // 1% critical value for 2000 vs 2000 is ≈ 0.0515
    assert!(d < 0.06, "height law ks {d}");
}

/// ℓ = 3 conditional transform against the product of limit exponents
/// Σ φ_α(λ_i) at n = 10^4 (the ℓ-point limit at the Laplace level).
#[test]
fn ell_conditional_laplace_approaches_sum_of_phis() {
    let n = 10_000;
    let seq = LengthSequence::power(1.0, n).unwrap();
    let lambdas = [1.0, 0.5, 0.25];
    let ln_exact = ln_laplace_ell_conditional(&seq, n, 3, 10, &lambdas).unwrap();
    let ln_limit: f64 = lambdas.iter().map(|&l| phi_alpha(1.0, l).unwrap()).sum();
    assert!(
        (ln_exact - ln_limit).abs() < 0.02,
        "conditional {ln_exact} vs Σφ {ln_limit}"
    );
}
