//! Edge-length distributions and reproducible i.i.d. weight sampling.
//!
//! Weights are generated counter-style: the uniform variate for an edge is a
//! pure function of `(master seed, trial, edge id)`, so an assignment can be
//! materialized eagerly or evaluated lazily edge by edge with identical bits.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{EdgeId, Graph};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistributionError {
    #[error("atom at zero: the distribution puts mass {0} on length 0")]
    AtomAtZero(f64),
    #[error("infinite mean: {0}")]
    InfiniteMean(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Wire form of a distribution, as it appears in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    Exponential {
        rate: f64,
    },
    Uniform {
        low: f64,
        high: f64,
    },
    /// Finite atoms `(value, probability)`.
    Discrete {
        atoms: Vec<(f64, f64)>,
    },
    /// Density `shape * scale^shape / t^(shape + 1)` on `[scale, ∞)`.
    Pareto {
        scale: f64,
        shape: f64,
    },
    /// Point mass at `value`.
    Constant {
        value: f64,
    },
    /// `factor * X` for `X` drawn from `base`.
    Scaled {
        factor: f64,
        base: Box<DistributionSpec>,
    },
}

impl Default for DistributionSpec {
    fn default() -> Self {
        DistributionSpec::Exponential { rate: 1.0 }
    }
}

/// A validated edge-length law `ν` on `(0, ∞)` with finite mean.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeDistribution {
    kind: Kind,
    spec: DistributionSpec,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Exponential { rate: f64 },
    Uniform { low: f64, high: f64 },
    // cumulative probabilities, last entry forced to 1
    Discrete { values: Vec<f64>, cumulative: Vec<f64> },
    Pareto { scale: f64, shape: f64 },
    Constant { value: f64 },
    Scaled { factor: f64, base: Box<EdgeDistribution> },
}

fn finite_positive(name: &str, x: f64) -> Result<(), DistributionError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(DistributionError::InvalidParameter(format!(
            "{name} must be finite and > 0, got {x}"
        )))
    }
}

/// Checks the standing hypotheses (no atom at zero, finite positive mean) and
/// builds the distribution.
pub fn validate_distribution(spec: &DistributionSpec) -> Result<EdgeDistribution, DistributionError> {
    let kind = match spec {
        DistributionSpec::Exponential { rate } => {
            finite_positive("rate", *rate)?;
            Kind::Exponential { rate: *rate }
        }
        DistributionSpec::Uniform { low, high } => {
            if !(low.is_finite() && high.is_finite() && *low >= 0.0 && low < high) {
                return Err(DistributionError::InvalidParameter(format!(
                    "uniform needs 0 <= low < high, got [{low}, {high}]"
                )));
            }
            Kind::Uniform {
                low: *low,
                high: *high,
            }
        }
        DistributionSpec::Discrete { atoms } => {
            if atoms.is_empty() {
                return Err(DistributionError::InvalidParameter(
                    "discrete distribution needs at least one atom".into(),
                ));
            }
            let mut atoms = atoms.clone();
            for &(v, p) in &atoms {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(DistributionError::InvalidParameter(format!(
                        "atom value {v} must be finite and >= 0"
                    )));
                }
                if !(p.is_finite() && p >= 0.0) {
                    return Err(DistributionError::InvalidParameter(format!(
                        "atom probability {p} must be >= 0"
                    )));
                }
            }
            let total: f64 = atoms.iter().map(|a| a.1).sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(DistributionError::InvalidParameter(format!(
                    "atom probabilities sum to {total}, expected 1"
                )));
            }
            let zero_mass: f64 = atoms.iter().filter(|a| a.0 == 0.0).map(|a| a.1).sum();
            if zero_mass > 0.0 {
                return Err(DistributionError::AtomAtZero(zero_mass));
            }
            atoms.retain(|a| a.1 > 0.0);
            atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
            let values: Vec<f64> = atoms.iter().map(|a| a.0).collect();
            let mut acc = 0.0;
            let mut cumulative: Vec<f64> = atoms
                .iter()
                .map(|a| {
                    acc += a.1;
                    acc
                })
                .collect();
            *cumulative.last_mut().unwrap() = 1.0;
            Kind::Discrete { values, cumulative }
        }
        DistributionSpec::Pareto { scale, shape } => {
            finite_positive("scale", *scale)?;
            finite_positive("shape", *shape)?;
            if *shape <= 1.0 {
                return Err(DistributionError::InfiniteMean(format!(
                    "pareto shape {shape} <= 1"
                )));
            }
            Kind::Pareto {
                scale: *scale,
                shape: *shape,
            }
        }
        DistributionSpec::Constant { value } => {
            if *value == 0.0 {
                return Err(DistributionError::AtomAtZero(1.0));
            }
            finite_positive("value", *value)?;
            Kind::Constant { value: *value }
        }
        DistributionSpec::Scaled { factor, base } => {
            finite_positive("factor", *factor)?;
            Kind::Scaled {
                factor: *factor,
                base: Box::new(validate_distribution(base)?),
            }
        }
    };
    Ok(EdgeDistribution {
        kind,
        spec: spec.clone(),
    })
}

impl EdgeDistribution {
    pub fn spec(&self) -> &DistributionSpec {
        &self.spec
    }

    /// No atoms, so ties between distinct paths have probability zero.
    pub fn is_atomless(&self) -> bool {
        match &self.kind {
            Kind::Exponential { .. } | Kind::Pareto { .. } => true,
            Kind::Uniform { low, high } => low < high,
            Kind::Discrete { .. } | Kind::Constant { .. } => false,
            Kind::Scaled { base, .. } => base.is_atomless(),
        }
    }

    /// Mean edge length `b`.
    pub fn mean(&self) -> f64 {
        match &self.kind {
            Kind::Exponential { rate } => 1.0 / rate,
            Kind::Uniform { low, high } => 0.5 * (low + high),
            Kind::Discrete { values, cumulative } => {
                let mut prev = 0.0;
                values
                    .iter()
                    .zip(cumulative)
                    .map(|(v, c)| {
                        let p = c - prev;
                        prev = *c;
                        v * p
                    })
                    .sum()
            }
            Kind::Pareto { scale, shape } => shape * scale / (shape - 1.0),
            Kind::Constant { value } => *value,
            Kind::Scaled { factor, base } => factor * base.mean(),
        }
    }

    /// Variance; `+∞` for Pareto laws with shape in `(1, 2]`.
    pub fn variance(&self) -> f64 {
        match &self.kind {
            Kind::Exponential { rate } => 1.0 / (rate * rate),
            Kind::Uniform { low, high } => (high - low).powi(2) / 12.0,
            Kind::Discrete { values, cumulative } => {
                let m = self.mean();
                let mut prev = 0.0;
                values
                    .iter()
                    .zip(cumulative)
                    .map(|(v, c)| {
                        let p = c - prev;
                        prev = *c;
                        (v - m).powi(2) * p
                    })
                    .sum()
            }
            Kind::Pareto { scale, shape } => {
                if *shape <= 2.0 {
                    f64::INFINITY
                } else {
                    scale * scale * shape / ((shape - 1.0).powi(2) * (shape - 2.0))
                }
            }
            Kind::Constant { .. } => 0.0,
            Kind::Scaled { factor, base } => factor * factor * base.variance(),
        }
    }

    /// `F(t) = ν([0, t])`.
    pub fn cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            // no atom at zero and no mass below it
            return 0.0;
        }
        match &self.kind {
            Kind::Exponential { rate } => -(-rate * t).exp_m1(),
            Kind::Uniform { low, high } => ((t - low) / (high - low)).clamp(0.0, 1.0),
            Kind::Discrete { values, cumulative } => {
                match values.iter().rposition(|&v| v <= t) {
                    Some(k) => cumulative[k],
                    None => 0.0,
                }
            }
            Kind::Pareto { scale, shape } => {
                if t < *scale {
                    0.0
                } else {
                    1.0 - (scale / t).powf(*shape)
                }
            }
            Kind::Constant { value } => {
                if t >= *value {
                    1.0
                } else {
                    0.0
                }
            }
            Kind::Scaled { factor, base } => base.cdf(t / factor),
        }
    }

    /// Generalized inverse `inf { t : F(t) >= u }` for `u` in `(0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        match &self.kind {
            Kind::Exponential { rate } => -(-u).ln_1p() / rate,
            Kind::Uniform { low, high } => low + u * (high - low),
            Kind::Discrete { values, cumulative } => {
                let k = cumulative.partition_point(|&c| c < u);
                values[k.min(values.len() - 1)]
            }
            Kind::Pareto { scale, shape } => scale / (1.0 - u).powf(1.0 / shape),
            Kind::Constant { value } => *value,
            Kind::Scaled { factor, base } => factor * base.quantile(u),
        }
    }

    /// Infimum of the support.
    pub fn essential_min(&self) -> f64 {
        match &self.kind {
            Kind::Exponential { .. } => 0.0,
            Kind::Uniform { low, .. } => *low,
            Kind::Discrete { values, .. } => values[0],
            Kind::Pareto { scale, .. } => *scale,
            Kind::Constant { value } => *value,
            Kind::Scaled { factor, base } => factor * base.essential_min(),
        }
    }

    /// Sample from a uniform variate in the open interval `(0, 1)`.
    ///
    /// The result is always `> 0`.
    pub fn sample_from_uniform(&self, u: f64) -> f64 {
        match &self.kind {
            // -ln(u) with u in (0,1) is strictly positive
            Kind::Exponential { rate } => -u.ln() / rate,
            Kind::Uniform { low, high } => {
                let w = low + u * (high - low);
                if w > 0.0 {
                    w
                } else {
                    f64::MIN_POSITIVE
                }
            }
            Kind::Scaled { factor, base } => factor * base.sample_from_uniform(u),
            _ => self.quantile(u),
        }
    }
}

/// Counter-based seed: `(master, trial)` plus an edge id fixes one weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master: u64,
    pub trial: u64,
}

impl SeedSpec {
    pub const fn new(master: u64, trial: u64) -> Self {
        SeedSpec { master, trial }
    }

    fn key(&self) -> u64 {
        // two rounds keep (master, trial) and (master', trial') streams apart
        mix64(mix64(self.master ^ 0x243F_6A88_85A3_08D3).wrapping_add(self.trial.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
    }
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Maps 64 random bits to the open interval `(0, 1)`.
#[inline]
pub fn open_unit(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Uniform variate for one `(seed, counter)` pair.
#[inline]
pub fn counter_uniform(seed: SeedSpec, counter: u64) -> f64 {
    uniform_for_key(seed.key(), counter)
}

#[inline]
fn uniform_for_key(key: u64, counter: u64) -> f64 {
    open_unit(mix64(key ^ mix64(counter.wrapping_add(0x9E37_79B9_7F4A_7C15))))
}

/// Small deterministic stream generator for seeded sampling of vertices,
/// pairs and triples in the diagnostics.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        CounterRng {
            key: SeedSpec::new(seed, stream).key(),
            counter: 0,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter += 1;
        mix64(self.key ^ mix64(self.counter))
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        // Lemire's multiply-shift; the bias is < n / 2^64
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    pub fn unit(&mut self) -> f64 {
        open_unit(self.next_u64())
    }
}

/// Read access to per-edge lengths.
pub trait EdgeWeights: Sync {
    fn weight(&self, edge: EdgeId) -> f64;
}

/// One realization `ω` stored densely by edge id.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightAssignment {
    weights: Vec<f64>,
    provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    Sampled {
        distribution: DistributionSpec,
        seed: SeedSpec,
    },
    Deterministic(String),
}

impl WeightAssignment {
    /// Wraps explicit weights; every weight must be finite and `> 0`.
    pub fn from_values(weights: Vec<f64>, label: impl Into<String>) -> Result<Self, DistributionError> {
        if let Some((e, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w > 0.0))
        {
            return Err(DistributionError::InvalidParameter(format!(
                "edge {e} has non-positive weight {w}"
            )));
        }
        Ok(WeightAssignment {
            weights,
            provenance: Provenance::Deterministic(label.into()),
        })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Returns a copy with every weight multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> WeightAssignment {
        assert!(factor > 0.0 && factor.is_finite());
        WeightAssignment {
            weights: self.weights.iter().map(|w| w * factor).collect(),
            provenance: Provenance::Deterministic(format!("scaled x{factor}")),
        }
    }

    /// Audit dump: one `edge_id weight` line per edge.
    pub fn write_dump(&self, mut out: impl std::io::Write) -> std::io::Result<()> {
        for (e, w) in self.weights.iter().enumerate() {
            writeln!(out, "{e} {w:e}")?;
        }
        Ok(())
    }
}

impl EdgeWeights for WeightAssignment {
    #[inline]
    fn weight(&self, edge: EdgeId) -> f64 {
        self.weights[edge as usize]
    }
}

impl EdgeWeights for [f64] {
    #[inline]
    fn weight(&self, edge: EdgeId) -> f64 {
        self[edge as usize]
    }
}

impl EdgeWeights for Vec<f64> {
    #[inline]
    fn weight(&self, edge: EdgeId) -> f64 {
        self[edge as usize]
    }
}

impl<W: EdgeWeights + ?Sized> EdgeWeights for &W {
    #[inline]
    fn weight(&self, edge: EdgeId) -> f64 {
        (**self).weight(edge)
    }
}

/// Unit weights: the hop metric.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnitWeights;

impl EdgeWeights for UnitWeights {
    #[inline]
    fn weight(&self, _edge: EdgeId) -> f64 {
        1.0
    }
}

/// Lazily evaluated realization: each weight is recomputed from the counter.
///
/// Produces bit-identical values to [`sample_weights`] for the same seed.
#[derive(Debug, Clone)]
pub struct LazyWeights<'a> {
    dist: &'a EdgeDistribution,
    key: u64,
    scale: f64,
}

impl<'a> LazyWeights<'a> {
    pub fn new(dist: &'a EdgeDistribution, seed: SeedSpec) -> Self {
        LazyWeights {
            dist,
            key: seed.key(),
            scale: 1.0,
        }
    }

    /// Same realization with every weight multiplied by `factor`.
    pub fn scaled(mut self, factor: f64) -> Self {
        self.scale = factor;
        self
    }
}

impl EdgeWeights for LazyWeights<'_> {
    #[inline]
    fn weight(&self, edge: EdgeId) -> f64 {
        let w = self
            .dist
            .sample_from_uniform(uniform_for_key(self.key, edge as u64));
        if self.scale == 1.0 {
            w
        } else {
            w * self.scale
        }
    }
}

/// Draws one i.i.d. length per edge of `g`.
pub fn sample_weights(g: &Graph, dist: &EdgeDistribution, seed: SeedSpec) -> WeightAssignment {
    let key = seed.key();
    let weights = (0..g.edge_count() as u64)
        .map(|e| dist.sample_from_uniform(uniform_for_key(key, e)))
        .collect();
    WeightAssignment {
        weights,
        provenance: Provenance::Sampled {
            distribution: dist.spec().clone(),
            seed,
        },
    }
}

/// `F(t) = ν([0, t])`; zero at `t = 0` because `ν({0}) = 0`.
pub fn cdf_probe(dist: &EdgeDistribution, t: f64) -> f64 {
    dist.cdf(t)
}
