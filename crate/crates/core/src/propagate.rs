//! Propagation of a nominal PMF through a downstream model `z = g(x, y)` that
//! has one regime per class.
//!
//! The analytic path uses the regime means and standard deviations; the Monte
//! Carlo path draws a class from the PMF and then `z` from that regime's
//! sampler.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pmf::Pmf;
use crate::rng::stream_rng;

/// Draws per Monte Carlo chunk. Chunking is fixed so results depend only on
/// the seed, never on the worker count.
pub const MC_CHUNK: usize = 8192;
pub const DEFAULT_HISTOGRAM_BINS: usize = 64;
/// Draws used by [`ConditionalQuantModel::check_consistency`].
pub const CONSISTENCY_DRAWS: usize = 10_000;
/// Standard errors beyond which a sampler is flagged as inconsistent.
pub const CONSISTENCY_SE_LIMIT: f64 = 5.0;

/// Draws `g_k(x)` for `x` from the regime's input distribution.
pub trait RegimeSampler: Send + Sync {
    fn sample(&self, rng: &mut dyn RngCore) -> f64;
}

/// Packaged sampler kinds available from model files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum SamplerSpec {
    Gaussian { mean: f64, sd: f64 },
    Uniform { low: f64, high: f64 },
    Constant { value: f64 },
}

impl SamplerSpec {
    /// Exact mean and standard deviation of the sampler.
    pub fn moments(&self) -> (f64, f64) {
        match *self {
            SamplerSpec::Gaussian { mean, sd } => (mean, sd),
            SamplerSpec::Uniform { low, high } => ((low + high) / 2.0, (high - low) / 12f64.sqrt()),
            SamplerSpec::Constant { value } => (value, 0.0),
        }
    }

    fn validate(&self, regime: usize) -> Result<()> {
        let bad = |reason: &str| {
            Err(Error::InvalidRegime {
                regime,
                reason: reason.to_string(),
            })
        };
        match *self {
            SamplerSpec::Gaussian { mean, sd } => {
                if !mean.is_finite() || !sd.is_finite() || sd < 0.0 {
                    return bad("gaussian sampler needs finite mean and sd >= 0");
                }
            }
            SamplerSpec::Uniform { low, high } => {
                if !low.is_finite() || !high.is_finite() || high < low {
                    return bad("uniform sampler needs finite low <= high");
                }
            }
            SamplerSpec::Constant { value } => {
                if !value.is_finite() {
                    return bad("constant sampler needs a finite value");
                }
            }
        }
        Ok(())
    }
}

impl RegimeSampler for SamplerSpec {
    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        match *self {
            SamplerSpec::Gaussian { mean, sd } => {
                Normal::new(mean, sd).expect("validated sd").sample(rng)
            }
            SamplerSpec::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
            SamplerSpec::Constant { value } => value,
        }
    }
}

/// One regime `g_k` of the downstream model.
#[derive(Clone)]
pub struct Regime {
    pub name: String,
    pub mean: f64,
    pub sd: Option<f64>,
    pub sampler: Option<Arc<dyn RegimeSampler>>,
}

impl fmt::Debug for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Regime")
            .field("name", &self.name)
            .field("mean", &self.mean)
            .field("sd", &self.sd)
            .field("sampler", &self.sampler.as_ref().map(|_| "<sampler>"))
            .finish()
    }
}

impl Regime {
    pub fn moments(name: impl Into<String>, mean: f64, sd: f64) -> Self {
        Regime {
            name: name.into(),
            mean,
            sd: Some(sd),
            sampler: None,
        }
    }

    /// Regime whose moments are taken from a packaged sampler.
    pub fn from_spec(name: impl Into<String>, spec: SamplerSpec) -> Self {
        let (mean, sd) = spec.moments();
        Regime {
            name: name.into(),
            mean,
            sd: Some(sd),
            sampler: Some(Arc::new(spec)),
        }
    }

    pub fn with_sampler(mut self, sampler: Arc<dyn RegimeSampler>) -> Self {
        self.sampler = Some(sampler);
        self
    }
}

/// Serialized form of a regime in a model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampler: Option<SamplerSpec>,
}

/// Serialized form of a [`ConditionalQuantModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub classes: Vec<RegimeSpec>,
}

#[derive(Debug, Clone)]
pub struct ConditionalQuantModel {
    regimes: Vec<Regime>,
}

/// Sampler that disagrees with its declared regime moments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyWarning {
    pub regime: usize,
    pub name: String,
    pub declared_mean: f64,
    pub sample_mean: f64,
    pub declared_sd: Option<f64>,
    pub sample_sd: f64,
}

impl ConditionalQuantModel {
    pub fn new(regimes: Vec<Regime>) -> Result<Self> {
        if regimes.len() < 2 {
            return Err(Error::DegenerateLength { len: regimes.len() });
        }
        for (k, r) in regimes.iter().enumerate() {
            if !r.mean.is_finite() {
                return Err(Error::InvalidRegime {
                    regime: k,
                    reason: "mean must be finite".into(),
                });
            }
            if let Some(sd) = r.sd {
                if !sd.is_finite() || sd < 0.0 {
                    return Err(Error::InvalidRegime {
                        regime: k,
                        reason: "sd must be finite and >= 0".into(),
                    });
                }
            }
        }
        Ok(ConditionalQuantModel { regimes })
    }

    /// Resolves a model file; `mu` and `sigma` default to the sampler's exact
    /// moments when omitted.
    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        let regimes = spec
            .classes
            .iter()
            .enumerate()
            .map(|(k, c)| {
                if let Some(s) = &c.sampler {
                    s.validate(k)?;
                }
                let exact = c.sampler.map(|s| s.moments());
                let mean = c.mu.or(exact.map(|m| m.0)).ok_or_else(|| Error::InvalidRegime {
                    regime: k,
                    reason: "needs mu or a sampler".into(),
                })?;
                Ok(Regime {
                    name: c.name.clone(),
                    mean,
                    sd: c.sigma.or(exact.map(|m| m.1)),
                    sampler: c.sampler.map(|s| Arc::new(s) as Arc<dyn RegimeSampler>),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(regimes)
    }

    pub fn regimes(&self) -> &[Regime] {
        &self.regimes
    }

    pub fn num_regimes(&self) -> usize {
        self.regimes.len()
    }

    fn check_dims(&self, pmf: &Pmf) -> Result<()> {
        if pmf.num_classes() != self.regimes.len() {
            return Err(Error::DimensionMismatch {
                expected: self.regimes.len(),
                got: pmf.num_classes(),
            });
        }
        Ok(())
    }

    fn sds(&self) -> Result<Vec<f64>> {
        self.regimes
            .iter()
            .enumerate()
            .map(|(k, r)| r.sd.ok_or(Error::MissingSd { regime: k }))
            .collect()
    }

    fn samplers(&self) -> Result<Vec<&dyn RegimeSampler>> {
        self.regimes
            .iter()
            .enumerate()
            .map(|(k, r)| r.sampler.as_deref().ok_or(Error::MissingSampler { regime: k }))
            .collect()
    }

    /// Compares each sampler against its declared moments using
    /// [`CONSISTENCY_DRAWS`] draws; regimes without a sampler are skipped.
    pub fn check_consistency(&self, seed: u64) -> Vec<ConsistencyWarning> {
        let mut warnings = Vec::new();
        for (k, r) in self.regimes.iter().enumerate() {
            let Some(sampler) = r.sampler.as_deref() else {
                continue;
            };
            let mut rng = stream_rng(seed, k as u64);
            let mut acc = Moments::default();
            let mut draws = Vec::with_capacity(CONSISTENCY_DRAWS);
            for _ in 0..CONSISTENCY_DRAWS {
                let z = sampler.sample(&mut rng);
                acc.push(z);
                draws.push(z);
            }
            let n = CONSISTENCY_DRAWS as f64;
            let var = acc.sample_variance();
            let se_mean = (var / n).sqrt();
            let mean_bad = (acc.mean - r.mean).abs() > CONSISTENCY_SE_LIMIT * se_mean.max(1e-12 * r.mean.abs().max(1.0));
            let var_bad = match r.sd {
                Some(sd) => {
                    let m4 = draws.iter().map(|z| (z - acc.mean).powi(4)).sum::<f64>() / n;
                    let se_var = ((m4 - var * var).max(0.0) / n).sqrt();
                    (var - sd * sd).abs() > CONSISTENCY_SE_LIMIT * se_var.max(1e-12 * (sd * sd).max(1.0))
                }
                None => false,
            };
            if mean_bad || var_bad {
                warnings.push(ConsistencyWarning {
                    regime: k,
                    name: r.name.clone(),
                    declared_mean: r.mean,
                    sample_mean: acc.mean,
                    declared_sd: r.sd,
                    sample_sd: var.sqrt(),
                });
            }
        }
        warnings
    }
}

/// `E[z] = Σ p_k μ_k`.
pub fn analytic_mean(pmf: &Pmf, model: &ConditionalQuantModel) -> Result<f64> {
    model.check_dims(pmf)?;
    Ok(pmf
        .probs()
        .iter()
        .zip(&model.regimes)
        .map(|(p, r)| p * r.mean)
        .sum())
}

/// `Var[z] = Σ p_k (σ_k² + μ_k²) - (Σ p_k μ_k)²`, clamped at 0 against
/// rounding.
pub fn analytic_variance(pmf: &Pmf, model: &ConditionalQuantModel) -> Result<f64> {
    model.check_dims(pmf)?;
    let sds = model.sds()?;
    let mean = analytic_mean(pmf, model)?;
    let second: f64 = pmf
        .probs()
        .iter()
        .zip(&model.regimes)
        .zip(&sds)
        .map(|((p, r), sd)| p * (sd * sd + r.mean * r.mean))
        .sum();
    Ok((second - mean * mean).max(0.0))
}

/// Streaming mean/variance accumulator with an associative merge.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
    min: f64,
    max: f64,
}

impl Moments {
    fn push(&mut self, z: f64) {
        if self.n == 0 {
            self.min = z;
            self.max = z;
        } else {
            self.min = self.min.min(z);
            self.max = self.max.max(z);
        }
        self.n += 1;
        let delta = z - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (z - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let nf = n as f64;
        Moments {
            n,
            mean: self.mean + delta * other.n as f64 / nf,
            m2: self.m2 + other.m2 + delta * delta * self.n as f64 * other.n as f64 / nf,
            min: self.min.min(other.min),
            max: self.max.max(other.max),
        }
    }

    fn sample_variance(&self) -> f64 {
        if self.n > 1 {
            self.m2 / (self.n - 1) as f64
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    /// `bins + 1` ascending edges spanning the sample minimum to maximum.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    fn build(values: &[f64], bins: usize, min: f64, max: f64) -> Histogram {
        let bins = bins.max(1);
        let width = (max - min) / bins as f64;
        let edges = (0..=bins).map(|i| min + width * i as f64).collect();
        let mut counts = vec![0u64; bins];
        for &z in values {
            let idx = if width > 0.0 {
                (((z - min) / width) as usize).min(bins - 1)
            } else {
                0
            };
            counts[idx] += 1;
        }
        Histogram { edges, counts }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PropagationMethod {
    Analytic,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropagationResult {
    pub method: PropagationMethod,
    pub mean: f64,
    pub variance: f64,
    /// Monte Carlo draws; `None` for analytic results.
    pub samples: Option<u64>,
    /// Sample standard deviation over `sqrt(n)`.
    pub standard_error: Option<f64>,
    pub histogram: Option<Histogram>,
}

pub fn analytic_propagate(pmf: &Pmf, model: &ConditionalQuantModel) -> Result<PropagationResult> {
    Ok(PropagationResult {
        method: PropagationMethod::Analytic,
        mean: analytic_mean(pmf, model)?,
        variance: analytic_variance(pmf, model)?,
        samples: None,
        standard_error: None,
        histogram: None,
    })
}

/// Monte Carlo propagation with `n` draws.
///
/// Draws are split into fixed chunks of [`MC_CHUNK`], each with its own
/// generator stream of `seed`; chunk results merge in chunk order, so the
/// output is reproducible for any thread count. The variance uses the `n - 1`
/// denominator. Pass `histogram_bins` to also bin the draws between their
/// minimum and maximum.
pub fn mc_propagate(
    pmf: &Pmf,
    model: &ConditionalQuantModel,
    n: usize,
    seed: u64,
    histogram_bins: Option<usize>,
) -> Result<PropagationResult> {
    model.check_dims(pmf)?;
    let samplers = model.samplers()?;
    if n == 0 {
        return Err(Error::ZeroSamples);
    }
    let keep = histogram_bins.is_some();
    let chunks = n.div_ceil(MC_CHUNK);
    let parts: Vec<(Moments, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = MC_CHUNK.min(n - c * MC_CHUNK);
            let mut rng = stream_rng(seed, c as u64);
            let mut acc = Moments::default();
            let mut values = Vec::with_capacity(if keep { len } else { 0 });
            for _ in 0..len {
                let k = pmf.sample_class(&mut rng);
                let z = samplers[k].sample(&mut rng);
                acc.push(z);
                if keep {
                    values.push(z);
                }
            }
            (acc, values)
        })
        .collect();
    let total = parts
        .iter()
        .fold(Moments::default(), |acc, (m, _)| acc.merge(*m));
    let histogram = histogram_bins.map(|bins| {
        let all: Vec<f64> = parts.iter().flat_map(|(_, v)| v.iter().copied()).collect();
        Histogram::build(&all, bins, total.min, total.max)
    });
    let variance = total.sample_variance();
    Ok(PropagationResult {
        method: PropagationMethod::MonteCarlo,
        mean: total.mean,
        variance,
        samples: Some(n as u64),
        standard_error: Some((variance / n as f64).sqrt()),
        histogram,
    })
}
