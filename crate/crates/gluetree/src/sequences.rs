//! Length sequences (a_n), their prefix sums A_n and the regular-variation
//! diagnostic a_n / Σ i^{-1} a_i.
//!
//! A sequence is immutable after construction: all caches are built eagerly
//! up to a caller-chosen capacity, so shared read access from worker threads
//! needs no synchronization.

use crate::numeric::KahanSum;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SequenceError {
    #[error("length a_{index} = {value} is not a positive finite real")]
    NonPositiveLength { index: usize, value: f64 },
    #[error("sequence parameter {name} = {value} is not finite")]
    BadParameter { name: &'static str, value: f64 },
    #[error("index {n} out of range (capacity {max})")]
    OutOfRange { n: usize, max: usize },
    #[error("custom sequence table is empty")]
    EmptyTable,
    #[error("index must be >= 1")]
    ZeroIndex,
}

/// Serializable description of a sequence, as written in experiment configs:
/// `{"kind": "power", "alpha": 1.0}` etc.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SequenceSpec {
    Constant {
        c: f64,
    },
    Power {
        alpha: f64,
    },
    /// a_n = (ln(n+1))^gamma. The argument is shifted by one so that a_1 > 0;
    /// the regular-variation index stays 0.
    LogPower {
        gamma: f64,
    },
    Custom {
        table: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rv_index: Option<f64>,
    },
}

impl SequenceSpec {
    pub fn build(&self, n_max: usize) -> Result<LengthSequence, SequenceError> {
        LengthSequence::from_spec(self.clone(), n_max)
    }

    /// Short label used in reports and CSV rows.
    pub fn label(&self) -> String {
        match self {
            SequenceSpec::Constant { c } => format!("constant({c})"),
            SequenceSpec::Power { alpha } => format!("power({alpha})"),
            SequenceSpec::LogPower { gamma } => format!("logpower({gamma})"),
            SequenceSpec::Custom { table, .. } => format!("custom(len={})", table.len()),
        }
    }
}

/// A positive length sequence with cached prefix sums.
///
/// `prefix[n]` holds A_n = a_1 + ... + a_n (A_0 = 0) and `harmonic[n]` holds
/// Σ_{i<=n} a_i / i; both are accumulated with compensated summation.
#[derive(Debug, Clone)]
pub struct LengthSequence {
    spec: SequenceSpec,
    rv_index: Option<f64>,
    lengths: Vec<f64>,
    prefix: Vec<f64>,
    harmonic: Vec<f64>,
}

impl LengthSequence {
    pub fn constant(c: f64, n_max: usize) -> Result<Self, SequenceError> {
        Self::from_spec(SequenceSpec::Constant { c }, n_max)
    }

    pub fn power(alpha: f64, n_max: usize) -> Result<Self, SequenceError> {
        Self::from_spec(SequenceSpec::Power { alpha }, n_max)
    }

    pub fn log_power(gamma: f64, n_max: usize) -> Result<Self, SequenceError> {
        Self::from_spec(SequenceSpec::LogPower { gamma }, n_max)
    }

    pub fn custom(table: Vec<f64>, rv_index: Option<f64>) -> Result<Self, SequenceError> {
        Self::from_spec(SequenceSpec::Custom { table, rv_index }, 0)
    }

    /// Builds the sequence with caches covering 1..=n_max. For custom tables
    /// the capacity is the table length and `n_max` is ignored.
    pub fn from_spec(spec: SequenceSpec, n_max: usize) -> Result<Self, SequenceError> {
        let (lengths, rv_index) = match &spec {
            SequenceSpec::Constant { c } => {
                if !c.is_finite() {
                    return Err(SequenceError::BadParameter {
                        name: "c",
                        value: *c,
                    });
                }
                (vec![*c; n_max], Some(0.0))
            }
            SequenceSpec::Power { alpha } => {
                if !alpha.is_finite() {
                    return Err(SequenceError::BadParameter {
                        name: "alpha",
                        value: *alpha,
                    });
                }
                let v: Vec<f64> = (1..=n_max).map(|n| (n as f64).powf(*alpha)).collect();
                // negative-index power sequences fall outside the regimes
                // handled here, so no index is declared for them
                let idx = if *alpha >= 0.0 { Some(*alpha) } else { None };
                (v, idx)
            }
            SequenceSpec::LogPower { gamma } => {
                if !gamma.is_finite() {
                    return Err(SequenceError::BadParameter {
                        name: "gamma",
                        value: *gamma,
                    });
                }
                let v: Vec<f64> = (1..=n_max)
                    .map(|n| ((n as f64) + 1.0).ln().powf(*gamma))
                    .collect();
                (v, Some(0.0))
            }
            SequenceSpec::Custom { table, rv_index } => {
                if table.is_empty() {
                    return Err(SequenceError::EmptyTable);
                }
                (table.clone(), *rv_index)
            }
        };
        for (i, &a) in lengths.iter().enumerate() {
            if !(a > 0.0) || !a.is_finite() {
                return Err(SequenceError::NonPositiveLength {
                    index: i + 1,
                    value: a,
                });
            }
        }

        let mut prefix = Vec::with_capacity(lengths.len() + 1);
        let mut harmonic = Vec::with_capacity(lengths.len() + 1);
        prefix.push(0.0);
        harmonic.push(0.0);
        let mut ps = KahanSum::new();
        let mut hs = KahanSum::new();
        for (i, &a) in lengths.iter().enumerate() {
            ps.add(a);
            hs.add(a / (i + 1) as f64);
            prefix.push(ps.value());
            harmonic.push(hs.value());
        }

        Ok(Self {
            spec,
            rv_index,
            lengths,
            prefix,
            harmonic,
        })
    }

    pub fn spec(&self) -> &SequenceSpec {
        &self.spec
    }

    pub fn label(&self) -> String {
        self.spec.label()
    }

    /// Declared regular-variation index, if any.
    pub fn rv_index(&self) -> Option<f64> {
        self.rv_index
    }

    /// Largest n the caches cover.
    pub fn max_n(&self) -> usize {
        self.lengths.len()
    }

    fn check(&self, n: usize) -> Result<(), SequenceError> {
        if n == 0 {
            Err(SequenceError::ZeroIndex)
        } else if n > self.lengths.len() {
            Err(SequenceError::OutOfRange {
                n,
                max: self.lengths.len(),
            })
        } else {
            Ok(())
        }
    }

    /// a_n, n >= 1.
    pub fn a_value(&self, n: usize) -> Result<f64, SequenceError> {
        self.check(n)?;
        Ok(self.lengths[n - 1])
    }

    /// A_n = Σ_{i<=n} a_i, with A_0 = 0.
    pub fn prefix_sum(&self, n: usize) -> Result<f64, SequenceError> {
        if n > self.lengths.len() {
            return Err(SequenceError::OutOfRange {
                n,
                max: self.lengths.len(),
            });
        }
        Ok(self.prefix[n])
    }

    /// Σ_{i<=n} i^{-1} a_i, the normalizer of the typical-depth limits.
    pub fn harmonic_weighted_sum(&self, n: usize) -> Result<f64, SequenceError> {
        self.check(n)?;
        Ok(self.harmonic[n])
    }

    /// Diagnostic a_n / Σ_{i<=n} i^{-1} a_i; converges to the
    /// regular-variation index for regularly varying sequences.
    pub fn rv_index_estimate(&self, n: usize) -> Result<f64, SequenceError> {
        self.check(n)?;
        Ok(self.lengths[n - 1] / self.harmonic[n])
    }

    /// Slice of lengths a_1..=a_n; hot loops index this directly.
    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    /// Slice of prefix sums A_0..=A_max.
    pub fn prefix_sums(&self) -> &[f64] {
        &self.prefix
    }
}
