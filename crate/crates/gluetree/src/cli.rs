//! Experiment runner: JSON experiment configs, scalar flag overrides, and
//! the simulate | verify | limits batch commands.
//!
//! Reproducibility contract: a seed is mandatory (config field or --seed
//! flag, never a wall-clock default), per-replica RNG streams derive from
//! it, and output files are byte-identical for a fixed config regardless of
//! the worker count.

use crate::checks::{self, CheckError, Tolerances, VerifyContext, VerifyReport};
use crate::exact_laws::mean_dn_exact;
use crate::glue_tree::GluedTree;
use crate::limit_laws::{
    classify_regime, phi_alpha, uniform_leaf_moment, xi_iid_max_statistic, xi_sample, LimitModel,
    Regime,
};
use crate::mc_stats::{collect_replicas, replica_rng, EmpiricalSummary};
use crate::sequences::SequenceSpec;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use thiserror::Error;

pub const OUTPUT_SCHEMA_VERSION: u32 = 1;

/// Column order of simulate.csv, pinned by golden tests.
pub const SIMULATE_CSV_HEADER: &str =
    "n,a_n,big_a_n,h_mean,h_se,height_stat,d_mean,d_se,d_mean_exact,d_norm";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    Sequence(#[from] crate::sequences::SequenceError),
    #[error(transparent)]
    Tree(#[from] crate::glue_tree::TreeError),
    #[error(transparent)]
    Law(#[from] crate::exact_laws::LawError),
    #[error(transparent)]
    Limit(#[from] crate::limit_laws::LimitError),
    #[error(transparent)]
    Stats(#[from] crate::mc_stats::StatsError),
}

impl CliError {
    /// 2 for config errors, 1 otherwise (verification failures are handled
    /// by the caller from the report itself).
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Simulate,
    Verify,
    Limits,
}

impl CommandKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CommandKind::Simulate => "simulate",
            CommandKind::Verify => "verify",
            CommandKind::Limits => "limits",
        }
    }
}

/// Optional per-field tolerance overrides from the config file.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    pub ks: Option<f64>,
    pub tv: Option<f64>,
    pub z_sigma: Option<f64>,
    pub log_laplace: Option<f64>,
}

impl ToleranceOverrides {
    fn apply(&self, mut t: Tolerances) -> Tolerances {
        if let Some(v) = self.ks {
            t.ks = v;
        }
        if let Some(v) = self.tv {
            t.tv = v;
        }
        if let Some(v) = self.z_sigma {
            t.z_sigma = v;
        }
        if let Some(v) = self.log_laplace {
            t.log_laplace = v;
        }
        t
    }
}

/// Grids and sample counts for the limits command.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct LimitsSection {
    pub alphas: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub xi_samples: u64,
    pub leaf_moments: Vec<f64>,
    pub sequences: Vec<SequenceSpec>,
    /// Horizon for divergence tests on sequences without an analytic regime.
    pub horizon: usize,
}

impl Default for LimitsSection {
    fn default() -> Self {
        Self {
            alphas: vec![1.0],
            lambdas: (-4..=4).map(|i| i as f64 / 2.0).collect(),
            xi_samples: 100_000,
            leaf_moments: vec![0.0, 1.0, 2.0],
            sequences: vec![
                SequenceSpec::Power { alpha: 1.0 },
                SequenceSpec::Constant { c: 1.0 },
                SequenceSpec::LogPower { gamma: -2.0 },
            ],
            horizon: 100_000,
        }
    }
}

/// The experiment config document. `seed` may come from the file or the
/// --seed flag but must come from somewhere.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sequence: Option<SequenceSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicas: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points_per_tree: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<ToleranceOverrides>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limits: Option<LimitsSection>,
}

/// Scalar overrides from command-line flags.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub n: Option<usize>,
    pub replicas: Option<u64>,
}

/// Fully validated configuration for one command run.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub command: CommandKind,
    pub seed: u64,
    pub workers: usize,
    pub out: PathBuf,
    pub sequence: Option<SequenceSpec>,
    pub n_grid: Vec<usize>,
    pub replicas: u64,
    pub points_per_tree: u64,
    pub tolerances: Tolerances,
    pub limits: LimitsSection,
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    serde_json::from_str(text)
        .map_err(|e| CliError::Config(format!("line {}, column {}: {}", e.line(), e.column(), e)))
}

impl ExperimentConfig {
    pub fn resolve(
        self,
        command: CommandKind,
        overrides: &Overrides,
    ) -> Result<ResolvedConfig, CliError> {
        if let Some(kind) = &self.experiment {
            if kind != command.as_str() {
                return Err(CliError::Config(format!(
                    "config declares experiment \"{kind}\" but the {} command was invoked",
                    command.as_str()
                )));
            }
        }
        let seed = overrides.seed.or(self.seed).ok_or_else(|| {
            CliError::Config(
                "seed is required: set \"seed\" in the config or pass --seed".to_string(),
            )
        })?;
        let workers = overrides.workers.or(self.workers).unwrap_or(1);
        if workers == 0 {
            return Err(CliError::Config("workers must be >= 1".to_string()));
        }
        let out = overrides
            .out
            .clone()
            .or(self.out)
            .unwrap_or_else(|| PathBuf::from("out"));
        let mut n_grid = match (overrides.n.or(self.n), self.n_grid) {
            (Some(n), _) => vec![n],
            (None, Some(grid)) => grid,
            (None, None) => Vec::new(),
        };
        n_grid.sort_unstable();
        n_grid.dedup();
        if n_grid.iter().any(|&n| n == 0) {
            return Err(CliError::Config("n values must be >= 1".to_string()));
        }
        let replicas = overrides.replicas.or(self.replicas).unwrap_or(100);
        if replicas == 0 {
            return Err(CliError::Config("replicas must be >= 1".to_string()));
        }
        let points_per_tree = self.points_per_tree.unwrap_or(100).max(1);
        if command == CommandKind::Simulate {
            if self.sequence.is_none() {
                return Err(CliError::Config(
                    "simulate requires a \"sequence\"".to_string(),
                ));
            }
            if n_grid.is_empty() {
                return Err(CliError::Config(
                    "simulate requires \"n\" or \"n_grid\"".to_string(),
                ));
            }
        }
        Ok(ResolvedConfig {
            command,
            seed,
            workers,
            out,
            sequence: self.sequence,
            n_grid,
            replicas,
            points_per_tree,
            tolerances: self
                .tolerances
                .unwrap_or_default()
                .apply(Tolerances::default()),
            limits: self.limits.unwrap_or_default(),
        })
    }
}

fn create_out_dir(cfg: &ResolvedConfig) -> Result<(), CliError> {
    fs::create_dir_all(&cfg.out)?;
    Ok(())
}

fn meta_json(cfg: &ResolvedConfig) -> serde_json::Value {
    serde_json::json!({
        "schema_version": OUTPUT_SCHEMA_VERSION,
        "command": cfg.command.as_str(),
        "seed": cfg.seed,
        "sequence": cfg.sequence,
        "n_grid": cfg.n_grid,
        "replicas": cfg.replicas,
        "points_per_tree": cfg.points_per_tree,
    })
}

/// One aggregated row of simulate.csv.
#[derive(Debug, Clone, Serialize)]
pub struct SimulateRow {
    pub n: usize,
    pub a_n: f64,
    pub big_a_n: f64,
    pub h_mean: f64,
    pub h_se: f64,
    pub height_stat: f64,
    pub d_mean: f64,
    pub d_se: f64,
    pub d_mean_exact: f64,
    pub d_norm: f64,
}

#[derive(Debug)]
pub struct SimulateOutput {
    pub csv_path: PathBuf,
    pub rows: Vec<SimulateRow>,
}

/// Grows `replicas` trees through the n-grid and aggregates heights and
/// sampled depths per grid point. Each replica grows a single tree through
/// all checkpoints, so the height column is monotone along the grid.
pub fn cmd_simulate(cfg: &ResolvedConfig) -> Result<SimulateOutput, CliError> {
    let spec = cfg
        .sequence
        .as_ref()
        .expect("resolve() enforced the sequence");
    let max_n = *cfg.n_grid.last().expect("resolve() enforced the grid");
    let seq = Arc::new(spec.build(max_n)?);
    let grid = cfg.n_grid.clone();
    let points = cfg.points_per_tree;

    // per replica and grid point: (height, mean sampled depth)
    let per_replica: Vec<Vec<(f64, f64)>> =
        collect_replicas(cfg.replicas, cfg.seed, cfg.workers, |_, rng| {
            let mut tree = GluedTree::new(seq.clone()).expect("capacity covers the grid");
            grid.iter()
                .map(|&n| {
                    tree.grow_to(n, rng).expect("capacity covers the grid");
                    let mean_depth = (0..points)
                        .map(|_| tree.sample_uniform_point(rng).depth)
                        .sum::<f64>()
                        / points as f64;
                    (tree.height(), mean_depth)
                })
                .collect()
        });

    let mut rows = Vec::with_capacity(grid.len());
    for (gi, &n) in grid.iter().enumerate() {
        let heights =
            EmpiricalSummary::from_samples(per_replica.iter().map(|r| r[gi].0).collect())?;
        let depths = EmpiricalSummary::from_samples(per_replica.iter().map(|r| r[gi].1).collect())?;
        let nf = n as f64;
        let a_n = seq.a_value(n)?;
        rows.push(SimulateRow {
            n,
            a_n,
            big_a_n: seq.prefix_sum(n)?,
            h_mean: heights.mean(),
            h_se: heights.se_mean(),
            // ln ln n is only meaningful from n = 3 on
            height_stat: if n >= 3 {
                heights.mean() * nf.ln().ln() / (a_n * nf.ln())
            } else {
                f64::NAN
            },
            d_mean: depths.mean(),
            d_se: depths.se_mean(),
            d_mean_exact: mean_dn_exact(&seq, n)?,
            d_norm: depths.mean() / seq.harmonic_weighted_sum(n)?,
        });
    }

    create_out_dir(cfg)?;
    let csv_path = cfg.out.join("simulate.csv");
    let mut w = BufWriter::new(fs::File::create(&csv_path)?);
    writeln!(w, "{SIMULATE_CSV_HEADER}")?;
    for r in &rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.a_n,
            r.big_a_n,
            r.h_mean,
            r.h_se,
            r.height_stat,
            r.d_mean,
            r.d_se,
            r.d_mean_exact,
            r.d_norm
        )?;
    }
    w.flush()?;
    fs::write(
        cfg.out.join("simulate_meta.json"),
        serde_json::to_string_pretty(&meta_json(cfg)).expect("serializable meta") + "\n",
    )?;
    Ok(SimulateOutput { csv_path, rows })
}

#[derive(Debug)]
pub struct VerifyOutput {
    pub json_path: PathBuf,
    pub report: VerifyReport,
}

/// Runs the registered cross-checks and writes verify.json; the report is
/// written even when checks fail.
pub fn cmd_verify(cfg: &ResolvedConfig) -> Result<VerifyOutput, CliError> {
    let ctx = VerifyContext {
        seed: cfg.seed,
        workers: cfg.workers,
        tol: cfg.tolerances,
    };
    let report = checks::run_all(&ctx)?;
    create_out_dir(cfg)?;
    let json_path = cfg.out.join("verify.json");
    fs::write(
        &json_path,
        serde_json::to_string_pretty(&report).expect("serializable report") + "\n",
    )?;
    Ok(VerifyOutput { json_path, report })
}

#[derive(Debug)]
pub struct LimitsOutput {
    pub phi_path: PathBuf,
    pub xi_path: PathBuf,
    pub leaf_path: PathBuf,
    pub regime_path: PathBuf,
}

/// Tabulates φ on the α×λ grid, ξ samples, uniform-leaf moments and the
/// regime classification of the configured sequences.
pub fn cmd_limits(cfg: &ResolvedConfig) -> Result<LimitsOutput, CliError> {
    create_out_dir(cfg)?;
    let lim = &cfg.limits;

    let phi_path = cfg.out.join("phi.csv");
    let mut w = BufWriter::new(fs::File::create(&phi_path)?);
    writeln!(w, "alpha,lambda,phi")?;
    for &alpha in &lim.alphas {
        for &lambda in &lim.lambdas {
            writeln!(w, "{},{},{}", alpha, lambda, phi_alpha(alpha, lambda)?)?;
        }
    }
    w.flush()?;

    let xi_path = cfg.out.join("xi_samples.csv");
    let mut w = BufWriter::new(fs::File::create(&xi_path)?);
    writeln!(w, "alpha,value")?;
    for (ai, &alpha) in lim.alphas.iter().enumerate() {
        let model = LimitModel::new(alpha)?;
        let samples: Vec<f64> = collect_replicas(
            lim.xi_samples,
            cfg.seed ^ (ai as u64) << 32,
            cfg.workers,
            |_, rng| xi_sample(&model, rng),
        );
        for v in samples {
            writeln!(w, "{},{}", alpha, v)?;
        }
    }
    w.flush()?;

    let leaf_path = cfg.out.join("leaf_moments.csv");
    let mut w = BufWriter::new(fs::File::create(&leaf_path)?);
    writeln!(w, "alpha,p,value")?;
    for (ai, &alpha) in lim.alphas.iter().enumerate() {
        let model = LimitModel::new(alpha)?;
        for (pi, &p) in lim.leaf_moments.iter().enumerate() {
            let mut rng = replica_rng(cfg.seed ^ 0xBEEF, (ai * 64 + pi) as u64);
            let v = uniform_leaf_moment(&model, p, lim.xi_samples as usize, &mut rng)?;
            writeln!(w, "{},{},{}", alpha, p, v)?;
        }
    }
    w.flush()?;

    // report-only diagnostic: scaled max of i.i.d. ξ copies
    let xi_max_path = cfg.out.join("xi_max.csv");
    let mut w = BufWriter::new(fs::File::create(&xi_max_path)?);
    writeln!(w, "alpha,copies,statistic")?;
    for (ai, &alpha) in lim.alphas.iter().enumerate() {
        let model = LimitModel::new(alpha)?;
        for (ci, &copies) in [100usize, 1_000, 10_000].iter().enumerate() {
            let mut rng = replica_rng(cfg.seed ^ 0xD1A6, (ai * 8 + ci) as u64);
            writeln!(
                w,
                "{},{},{}",
                alpha,
                copies,
                xi_iid_max_statistic(&model, copies, &mut rng)
            )?;
        }
    }
    w.flush()?;

    let regime_path = cfg.out.join("regimes.csv");
    let mut w = BufWriter::new(fs::File::create(&regime_path)?);
    writeln!(w, "sequence,regime,alpha")?;
    for spec in &lim.sequences {
        let seq = spec.build(lim.horizon)?;
        let regime = classify_regime(&seq, Some(lim.horizon))?;
        let alpha = match regime {
            Regime::AlphaPositive { alpha } => alpha.to_string(),
            _ => String::new(),
        };
        writeln!(w, "{},{},{}", spec.label(), regime, alpha)?;
    }
    w.flush()?;

    Ok(LimitsOutput {
        phi_path,
        xi_path,
        leaf_path,
        regime_path,
    })
}
