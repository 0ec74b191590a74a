//! The registered cross-validation suite: simulator ↔ exact law ↔ limit law
//! comparisons at desk scale, each emitting pass/fail [`ComparisonReport`]s.
//!
//! Every tolerance is pinned in [`crate::tolerances`]; a report fails only
//! when its distance exceeds the declared tolerance. The same functions back
//! the `verify` CLI command and the acceptance test suite.

use crate::exact_laws::{
    self, dn_iid_sample, ell_point_conditional_sample, ln_laplace_dn_exact,
    ln_laplace_increment_exact, mean_dn_exact, splitting_index_pmf,
};
use crate::glue_tree::{GluedTree, TreeError};
use crate::limit_laws::{
    self, bd_constant_via_curve, ln_limit_laplace_increment, phi_alpha, solve_beta_star,
    xi_process_sample, xi_sample, LimitModel,
};
use crate::mc_stats::{
    collect_replicas, moment_compare, run_replicas, tv_distance, ComparisonReport,
    EmpiricalSummary, StatsError,
};
use crate::sequences::LengthSequence;
use crate::tolerances as tol;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CheckError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Law(#[from] exact_laws::LawError),
    #[error(transparent)]
    Limit(#[from] limit_laws::LimitError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Sequence(#[from] crate::sequences::SequenceError),
}

/// Tolerances that configs may override; everything else is fixed.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Tolerances {
    pub ks: f64,
    pub tv: f64,
    pub z_sigma: f64,
    pub log_laplace: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            ks: tol::KS_DISTANCE,
            tv: tol::TV_DISTANCE,
            z_sigma: tol::Z_SIGMA,
            log_laplace: tol::LOG_LAPLACE_DIFF,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyContext {
    pub seed: u64,
    pub workers: usize,
    pub tol: Tolerances,
}

impl VerifyContext {
    pub fn new(seed: u64, workers: usize) -> Self {
        Self {
            seed,
            workers,
            tol: Tolerances::default(),
        }
    }
}

/// Distinct master seed per check so independent checks never share replica
/// streams.
fn salted(seed: u64, salt: u64) -> u64 {
    seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn stamp(mut reports: Vec<ComparisonReport>, start: Instant) -> Vec<ComparisonReport> {
    let elapsed = start.elapsed() / reports.len().max(1) as u32;
    for r in &mut reports {
        r.runtime = elapsed;
    }
    reports
}

/// Constants: β* and the height constant against their reported decimals,
/// the equation residual, and agreement of the curve-maximization route.
pub fn check_constants(_ctx: &VerifyContext) -> Result<Vec<ComparisonReport>, CheckError> {
    let start = Instant::now();
    let b = solve_beta_star();
    let via_curve = bd_constant_via_curve()?;
    let reports = vec![
        ComparisonReport::abs_diff(
            "constants/beta_star",
            b.beta_star,
            1.594,
            tol::CONSTANT_DECIMALS,
            "reported value",
        ),
        ComparisonReport::abs_diff(
            "constants/height_constant",
            b.height_constant,
            1.544,
            tol::CONSTANT_DECIMALS,
            "reported value",
        ),
        ComparisonReport::abs_diff(
            "constants/beta_star_residual",
            b.residual,
            0.0,
            tol::BETA_STAR_RESIDUAL,
            "root equation",
        ),
        ComparisonReport::abs_diff(
            "constants/curve_vs_root",
            via_curve,
            b.height_constant,
            tol::CURVE_ROOT_AGREEMENT,
            "curve maximization",
        ),
    ];
    Ok(stamp(reports, start))
}

/// Tree-sampled depths against the exact mean (1/2) Σ a_i²/A_i, for the unit
/// and linear sequences at n = 10^2 and 10^4.
///
/// 10^5 samples come from 10^3 independent trees with 10^2 marked points
/// each; the z-score uses the standard error of per-tree means, which stays
/// valid under the within-tree dependence of the points.
pub fn check_exact_mean(ctx: &VerifyContext) -> Result<Vec<ComparisonReport>, CheckError> {
    let start = Instant::now();
    let mut reports = Vec::new();
    let cases: [(&str, LengthSequence, usize); 4] = [
        ("constant(1)", LengthSequence::constant(1.0, 100)?, 100),
        (
            "constant(1)",
            LengthSequence::constant(1.0, 10_000)?,
            10_000,
        ),
        ("power(1)", LengthSequence::power(1.0, 100)?, 100),
        ("power(1)", LengthSequence::power(1.0, 10_000)?, 10_000),
    ];
    for (salt, (label, seq, n)) in cases.into_iter().enumerate() {
        let exact = mean_dn_exact(&seq, n)?;
        let seq = Arc::new(seq);
        let run = run_replicas(
            1_000,
            salted(ctx.seed, 10 + salt as u64),
            ctx.workers,
            |_, rng| {
                let tree = GluedTree::grown(seq.clone(), n, rng).expect("growth within capacity");
                (0..100)
                    .map(|_| tree.sample_uniform_point(rng).depth)
                    .collect()
            },
        )?;
        reports.push(moment_compare(
            &run.replica_means,
            &format!("exact_mean/{label}/n={n}"),
            exact,
            ctx.tol.z_sigma,
            "exact formula",
        ));
    }
    Ok(stamp(reports, start))
}

/// KS distance between simulator depths and the i.i.d.-sum representation at
/// n = 10^3, 10^5 samples per side.
pub fn check_representation_equivalence(
    ctx: &VerifyContext,
) -> Result<Vec<ComparisonReport>, CheckError> {
    let start = Instant::now();
    let n = 1_000;
    let seq = Arc::new(LengthSequence::power(1.0, n)?);
    let tree_side = run_replicas(1_000, salted(ctx.seed, 20), ctx.workers, |_, rng| {
        let tree = GluedTree::grown(seq.clone(), n, rng).expect("growth within capacity");
        (0..100)
            .map(|_| tree.sample_uniform_point(rng).depth)
            .collect()
    })?;
    let iid_side = run_replicas(100_000, salted(ctx.seed, 21), ctx.workers, |_, rng| {
        vec![dn_iid_sample(&seq, n, rng).expect("valid n")]
    })?;
    let d = tree_side.samples.ks_distance(&iid_side.samples)?;
    let report = ComparisonReport::ks(
        "representation/ks_tree_vs_iid_sum",
        d,
        ctx.tol.ks,
        "other sampler (i.i.d.-sum representation)",
    );
    Ok(stamp(vec![report], start))
}

/// Finite-n Laplace product at n = 10^6 against the limit exponent φ_1.
pub fn check_laplace_limit(ctx: &VerifyContext) -> Result<Vec<ComparisonReport>, CheckError> {
    let start = Instant::now();
    let n = 1_000_000;
    let seq = LengthSequence::power(1.0, n)?;
    let mut reports = Vec::new();
    for &lambda in &[-1.0, 0.5, 1.0] {
        let ln_exact = ln_laplace_dn_exact(&seq, n, lambda)?;
        let phi = phi_alpha(1.0, lambda)?;
        reports.push(ComparisonReport::abs_log_diff(
            &format!("laplace_limit/lambda={lambda}"),
            ln_exact,
            phi,
            ctx.tol.log_laplace,
            "limit formula",
        ));
    }
    Ok(stamp(reports, start))
}

/// Splitting-index law: empirical S_n(2) pmf from the simulator against the
/// exact pmf at n = 100, plus normalization of the pmf up to n = 10^6.
pub fn check_splitting_law(ctx: &VerifyContext) -> Result<Vec<ComparisonReport>, CheckError> {
    let start = Instant::now();
    let n = 100;
    let seq = Arc::new(LengthSequence::power(1.0, n)?);
    let pmf = splitting_index_pmf(&seq, n)?;
    let n_samples = 100_000u64;
    let indices: Vec<usize> =
        collect_replicas(n_samples, salted(ctx.seed, 30), ctx.workers, |_, rng| {
            let tree = GluedTree::grown(seq.clone(), n, rng).expect("growth within capacity");
            let marks = tree.mark_many(2, rng).expect("two marks");
            marks
                .splitting_index
                .expect("pair mark carries the splitting index")
        });
    let mut counts = vec![0.0f64; n];
    for idx in indices {
        counts[idx - 1] += 1.0 / n_samples as f64;
    }
    let tv = tv_distance(&counts, pmf.probabilities())?;
    let mut reports = vec![ComparisonReport::tv(
        "splitting/tv_simulator_vs_exact",
        tv,
        ctx.tol.tv,
        "exact formula",
    )];
    for (label, seq) in [
        ("power(1)", LengthSequence::power(1.0, 1_000_000)?),
        ("constant(1)", LengthSequence::constant(1.0, 1_000_000)?),
        ("logpower(-2)", LengthSequence::log_power(-2.0, 1_000_000)?),
    ] {
        let total = splitting_index_pmf(&seq, 1_000_000)?.total();
        reports.push(ComparisonReport::abs_diff(
            &format!("splitting/normalization/{label}/n=1000000"),
            total,
            1.0,
            tol::PMF_NORMALIZATION,
            "probability distribution",
        ));
    }
    Ok(stamp(reports, start))
}

/// ξ_1 sampler: mean against (α+1)/(2α) = 1, empirical log-MGF at λ = 1
/// against φ_1(1), and the self-similarity identity ξ(1/2) ~ (1/2) ξ(1).
pub fn check_xi_sampler(ctx: &VerifyContext) -> Result<Vec<ComparisonReport>, CheckError> {
    let start = Instant::now();
    let model = LimitModel::new(1.0)?;
    let n_samples = 100_000u64;

    let mean_run = run_replicas(n_samples, salted(ctx.seed, 40), ctx.workers, |_, rng| {
        vec![xi_sample(&model, rng)]
    })?;
    let mut reports = vec![moment_compare(
        &mean_run.samples,
        "xi/mean",
        1.0,
        ctx.tol.z_sigma,
        "limit formula",
    )];

    let lambda = 1.0;
    let mgf_run = run_replicas(n_samples, salted(ctx.seed, 41), ctx.workers, |_, rng| {
        vec![(lambda * xi_sample(&model, rng)).exp()]
    })?;
    let phi = phi_alpha(1.0, lambda)?;
    // delta method: se(ln m) = se(m) / m
    reports.push(ComparisonReport::z_score(
        "xi/log_mgf/lambda=1",
        mgf_run.samples.mean().ln(),
        phi,
        mgf_run.samples.se_mean() / mgf_run.samples.mean(),
        ctx.tol.z_sigma,
        "limit formula",
    ));

    let half = run_replicas(n_samples, salted(ctx.seed, 42), ctx.workers, |_, rng| {
        vec![xi_process_sample(&model, rng).eval(0.5)]
    })?;
    let scaled = run_replicas(n_samples, salted(ctx.seed, 43), ctx.workers, |_, rng| {
        vec![0.5 * xi_sample(&model, rng)]
    })?;
    let d = half.samples.ks_distance(&scaled.samples)?;
    reports.push(ComparisonReport::ks(
        "xi/self_similarity",
        d,
        ctx.tol.ks,
        "other sampler (scaled copy)",
    ));
    Ok(stamp(reports, start))
}

/// Finite-dimensional functional law: increment Laplace products at
/// n = 10^5 against the limit integrals on three windows.
pub fn check_increment_laplace(ctx: &VerifyContext) -> Result<Vec<ComparisonReport>, CheckError> {
    let start = Instant::now();
    let n = 100_000;
    let seq = LengthSequence::power(1.0, n)?;
    let lambda = 1.0;
    let mut reports = Vec::new();
    for &(s, t) in &[(0.0, 0.5), (0.25, 0.75), (0.5, 1.0)] {
        let ln_exact = ln_laplace_increment_exact(&seq, n, s, t, lambda)?;
        let ln_limit = ln_limit_laplace_increment(1.0, s, t, lambda)?;
        reports.push(ComparisonReport::abs_log_diff(
            &format!("increments/s={s},t={t}"),
            ln_exact,
            ln_limit,
            ctx.tol.log_laplace,
            "limit formula",
        ));
    }
    Ok(stamp(reports, start))
}

/// Unit-length regime: sampled D_n/ln n over 100 trees, the exact genealogy
/// identity, and the H_n/ln n band at n = 10^6.
pub fn check_unit_length_regime(ctx: &VerifyContext) -> Result<Vec<ComparisonReport>, CheckError> {
    let start = Instant::now();
    let n = 100_000;
    let seq = Arc::new(LengthSequence::constant(1.0, n)?);
    let depths: Vec<f64> = collect_replicas(100, salted(ctx.seed, 50), ctx.workers, |_, rng| {
        let tree = GluedTree::grown(seq.clone(), n, rng).expect("growth within capacity");
        tree.sample_uniform_point(rng).depth
    });
    let d_over_log = depths.iter().sum::<f64>() / depths.len() as f64 / (n as f64).ln();
    let (lo, hi) = tol::D_OVER_LOG_BAND;
    let mut reports = vec![ComparisonReport::band(
        "unit_regime/d_over_log_n",
        d_over_log,
        lo,
        hi,
        "limit 1/2",
    )];

    // genealogy identity d(L_i, root) = weighted path + 1, exact
    let mut rng = crate::mc_stats::replica_rng(salted(ctx.seed, 51), 0);
    let tree = GluedTree::grown(seq.clone(), n, &mut rng)?;
    let genealogy = tree.genealogy();
    let mut worst = 0.0f64;
    for i in 1..=tree.len() {
        let leaf_depth = tree.segment(i).base_depth + tree.segment(i).length;
        let path = genealogy.weighted_path_length(i) + 1.0;
        worst = worst.max((leaf_depth - path).abs() / leaf_depth.max(1.0));
    }
    reports.push(ComparisonReport::abs_diff(
        "unit_regime/genealogy_identity",
        worst,
        0.0,
        tol::EXACT_RELATIVE,
        "exact coupling",
    ));

    // single trees spread ±0.1 around 1.35 at this n; a small average is a
    // steadier estimate of the same diagnostic
    let n_big = 1_000_000;
    let seq_big = Arc::new(LengthSequence::constant(1.0, n_big)?);
    let heights: Vec<f64> = collect_replicas(6, salted(ctx.seed, 52), ctx.workers, |_, rng| {
        GluedTree::grown(seq_big.clone(), n_big, rng)
            .expect("growth within capacity")
            .height()
    });
    let h_over_log = heights.iter().sum::<f64>() / heights.len() as f64 / (n_big as f64).ln();
    let (lo, hi) = tol::H_OVER_LOG_BAND;
    reports.push(ComparisonReport::band(
        "unit_regime/h_over_log_n",
        h_over_log,
        lo,
        hi,
        "height constant 1.544",
    ));
    Ok(stamp(reports, start))
}

/// α > 0 height diagnostic: H_n ln ln n / (a_n ln n) averaged over 20 trees
/// must sit in the configured band at n = 10^6 and be closer to 1 there than
/// at n = 10^3.
pub fn check_height_diagnostic(ctx: &VerifyContext) -> Result<Vec<ComparisonReport>, CheckError> {
    let start = Instant::now();
    let n_small = 1_000;
    let n_big = 1_000_000;
    let seq = Arc::new(LengthSequence::power(1.0, n_big)?);
    let stat = |height: f64, n: usize| {
        let nf = n as f64;
        height * nf.ln().ln() / (nf.powf(1.0) * nf.ln())
    };
    let pairs: Vec<(f64, f64)> =
        collect_replicas(20, salted(ctx.seed, 60), ctx.workers, |_, rng| {
            let mut tree = GluedTree::new(seq.clone()).expect("capacity");
            tree.grow_to(n_small, rng).expect("growth within capacity");
            let small = stat(tree.height(), n_small);
            tree.grow_to(n_big, rng).expect("growth within capacity");
            (small, stat(tree.height(), n_big))
        });
    let mean_small = pairs.iter().map(|p| p.0).sum::<f64>() / pairs.len() as f64;
    let mean_big = pairs.iter().map(|p| p.1).sum::<f64>() / pairs.len() as f64;
    let (lo, hi) = tol::HEIGHT_STAT_BAND;
    let band = ComparisonReport::band(
        "height_stat/band_at_n=1000000",
        mean_big,
        lo,
        hi,
        "a.s. limit 1",
    );
    // trend: distance to 1 at 10^6 must not exceed the distance at 10^3
    let trend = ComparisonReport::abs_diff(
        "height_stat/trend_toward_limit",
        mean_big,
        1.0,
        (mean_small - 1.0).abs(),
        "a.s. limit 1",
    );
    Ok(stamp(vec![band, trend], start))
}

/// ℓ-point limit at ℓ = 3: conditional tail coordinates have mean near
/// (α+1)/(2α) = 1 and the deepest branch point collapses under a_n.
pub fn check_ell_point_limit(ctx: &VerifyContext) -> Result<Vec<ComparisonReport>, CheckError> {
    let start = Instant::now();
    let n = 10_000;
    let ell = 3;
    let k = 10;
    let seq = Arc::new(LengthSequence::power(1.0, n)?);
    let a_n = seq.a_value(n)?;
    let n_samples = 10_000u64;
    let coords: Vec<Vec<f64>> =
        collect_replicas(n_samples, salted(ctx.seed, 70), ctx.workers, |_, rng| {
            ell_point_conditional_sample(&seq, n, ell, k, rng)
                .expect("valid conditional arguments")
                .into_iter()
                .map(|x| x / a_n)
                .collect()
        });
    let mut reports = Vec::new();
    for j in 0..ell {
        let column: Vec<f64> = coords.iter().map(|c| c[j]).collect();
        let summary = EmpiricalSummary::from_samples(column)?;
        reports.push(moment_compare(
            &summary,
            &format!("ell_point/coordinate_{}_mean", j + 1),
            1.0,
            ctx.tol.z_sigma,
            "limit formula",
        ));
    }

    let branch: Vec<f64> = collect_replicas(200, salted(ctx.seed, 71), ctx.workers, |_, rng| {
        let tree = GluedTree::grown(seq.clone(), n, rng).expect("growth within capacity");
        let marks = tree.mark_many(ell, rng).expect("three marks");
        marks.max_branch_depth.expect("pairs exist for three marks") / a_n
    });
    let mean_branch = branch.iter().sum::<f64>() / branch.len() as f64;
    reports.push(ComparisonReport::abs_diff(
        "ell_point/max_branch_depth_collapse",
        mean_branch,
        0.0,
        tol::BRANCH_DEPTH_COLLAPSE,
        "limit 0",
    ));
    Ok(stamp(reports, start))
}

type CheckFn = fn(&VerifyContext) -> Result<Vec<ComparisonReport>, CheckError>;

/// The registered checks, in the order the verify command runs them.
pub const REGISTERED_CHECKS: &[(&str, CheckFn)] = &[
    ("constants", check_constants),
    ("exact_mean", check_exact_mean),
    ("representation", check_representation_equivalence),
    ("laplace_limit", check_laplace_limit),
    ("splitting", check_splitting_law),
    ("xi_sampler", check_xi_sampler),
    ("increments", check_increment_laplace),
    ("unit_regime", check_unit_length_regime),
    ("height_stat", check_height_diagnostic),
    ("ell_point", check_ell_point_limit),
];

/// Full verification report, serialized by the verify command.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub seed: u64,
    pub reports: Vec<ComparisonReport>,
    pub all_pass: bool,
}

/// Runs every registered check and assembles the report.
pub fn run_all(ctx: &VerifyContext) -> Result<VerifyReport, CheckError> {
    let mut reports = Vec::new();
    for (_, check) in REGISTERED_CHECKS {
        reports.extend(check(ctx)?);
    }
    let all_pass = reports.iter().all(|r| r.pass);
    Ok(VerifyReport {
        schema_version: 1,
        seed: ctx.seed,
        reports,
        all_pass,
    })
}
