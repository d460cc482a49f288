//! Bayesian quadratic discriminant analysis.
//!
//! Each class has a Gaussian class-conditional density with a conjugate
//! Normal-Inverse-Wishart (NIW) prior on its mean and covariance, and the class
//! weights carry a Dirichlet prior. The posterior predictive PMF for a new
//! input is available three ways:
//!
//! * closed form: the NIW predictive is a multivariate Student-t, weighted by
//!   the Dirichlet posterior mean;
//! * Monte Carlo: parameters are drawn from the posterior and the per-draw
//!   class scores are averaged;
//! * plug-in: Gaussian densities at the posterior-mean parameters, ignoring
//!   parameter uncertainty.
//!
//! Densities are handled in the log domain throughout.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::pmf::{NormPolicy, Pmf};
use crate::rng::stream_rng;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Labeled feature vectors. Labels are zero-based class indices.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    inputs: Vec<DVector<f64>>,
    labels: Vec<usize>,
    num_classes: usize,
    dim: usize,
    class_names: Option<Vec<String>>,
}

impl TrainingSet {
    pub fn new(inputs: Vec<Vec<f64>>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::EmptyInput);
        }
        if num_classes < 2 {
            return Err(Error::DegenerateLength { len: num_classes });
        }
        if inputs.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: inputs.len(),
                got: labels.len(),
            });
        }
        let dim = inputs[0].len();
        if dim == 0 {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        for row in &inputs {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            if let Some(index) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { index });
            }
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                len: num_classes,
            });
        }
        Ok(TrainingSet {
            inputs: inputs.into_iter().map(DVector::from_vec).collect(),
            labels,
            num_classes,
            dim,
            class_names: None,
        })
    }

    pub fn with_class_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.num_classes {
            return Err(Error::InvalidClassNames {
                expected: self.num_classes,
                got: names.len(),
            });
        }
        self.class_names = Some(names);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn inputs(&self) -> &[DVector<f64>] {
        &self.inputs
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> Option<&[String]> {
        self.class_names.as_deref()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Per-class sufficient statistics.
    pub fn class_stats(&self) -> Vec<ClassStats> {
        (0..self.num_classes)
            .map(|k| {
                let pts: Vec<&DVector<f64>> = self
                    .inputs
                    .iter()
                    .zip(&self.labels)
                    .filter(|(_, &l)| l == k)
                    .map(|(x, _)| x)
                    .collect();
                ClassStats::from_points(self.dim, &pts)
            })
            .collect()
    }
}

/// Count, mean and scatter `Σ (x - x̄)(x - x̄)ᵀ` of a set of points.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassStats {
    pub count: f64,
    pub mean: DVector<f64>,
    pub scatter: DMatrix<f64>,
}

impl ClassStats {
    pub fn empty(dim: usize) -> Self {
        ClassStats {
            count: 0.0,
            mean: DVector::zeros(dim),
            scatter: DMatrix::zeros(dim, dim),
        }
    }

    pub fn from_points(dim: usize, points: &[&DVector<f64>]) -> Self {
        if points.is_empty() {
            return Self::empty(dim);
        }
        let n = points.len() as f64;
        let mut mean = DVector::zeros(dim);
        for p in points {
            mean += *p;
        }
        mean /= n;
        let mut scatter = DMatrix::zeros(dim, dim);
        for p in points {
            let d = *p - &mean;
            scatter += &d * d.transpose();
        }
        ClassStats {
            count: n,
            mean,
            scatter,
        }
    }
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn cholesky(m: &DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    Cholesky::new(symmetrize(m))
}

fn log_det_from_chol(l: &DMatrix<f64>) -> f64 {
    2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

/// Normal-Inverse-Wishart hyperparameters: `Σ ~ IW(dof, scatter)`,
/// `μ | Σ ~ N(location, Σ / scale_count)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NiwParams {
    pub location: DVector<f64>,
    pub scale_count: f64,
    pub dof: f64,
    pub scatter: DMatrix<f64>,
}

impl NiwParams {
    pub fn dim(&self) -> usize {
        self.location.len()
    }

    fn check_proper(&self) -> Result<()> {
        let d = self.dim();
        if self.scatter.nrows() != d || self.scatter.ncols() != d {
            return Err(Error::ImproperPrior(format!(
                "scatter must be {d}x{d}, got {}x{}",
                self.scatter.nrows(),
                self.scatter.ncols()
            )));
        }
        if !(self.scale_count > 0.0 && self.scale_count.is_finite()) {
            return Err(Error::ImproperPrior("scale count must be positive".into()));
        }
        if !(self.dof > d as f64 - 1.0 && self.dof.is_finite()) {
            return Err(Error::ImproperPrior(format!(
                "degrees of freedom must exceed {}, got {}",
                d as f64 - 1.0,
                self.dof
            )));
        }
        if self.location.iter().any(|v| !v.is_finite()) || cholesky(&self.scatter).is_none() {
            return Err(Error::ImproperPrior(
                "location must be finite and scatter positive definite".into(),
            ));
        }
        Ok(())
    }

    /// Conjugate update; the identity when `stats.count == 0`.
    pub fn update(&self, stats: &ClassStats) -> NiwParams {
        if stats.count == 0.0 {
            return self.clone();
        }
        let n = stats.count;
        let k0 = self.scale_count;
        let kn = k0 + n;
        let diff = &stats.mean - &self.location;
        NiwParams {
            location: (&self.location * k0 + &stats.mean * n) / kn,
            scale_count: kn,
            dof: self.dof + n,
            scatter: symmetrize(&(&self.scatter + &stats.scatter + (&diff * diff.transpose()) * (k0 * n / kn))),
        }
    }
}

/// Hyperparameters shared by every class plus Dirichlet pseudo-counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Prior {
    pub niw: NiwParams,
    pub dirichlet: Vec<f64>,
    /// Leave classes without observations at the prior instead of failing.
    pub allow_empty_classes: bool,
}

impl Prior {
    /// Weakly informative default: location at the global data mean, scale
    /// count 1, `D + 2` degrees of freedom, scatter equal to the global
    /// sample covariance, and one Dirichlet pseudo-count per class.
    pub fn default_for(data: &TrainingSet) -> Result<Prior> {
        let d = data.dim();
        let all: Vec<&DVector<f64>> = data.inputs().iter().collect();
        let stats = ClassStats::from_points(d, &all);
        if stats.count < 2.0 {
            return Err(Error::SingularScatter { class: 0 });
        }
        let cov = &stats.scatter / (stats.count - 1.0);
        if cholesky(&cov).is_none() {
            return Err(Error::SingularScatter { class: 0 });
        }
        Ok(Prior {
            niw: NiwParams {
                location: stats.mean,
                scale_count: 1.0,
                dof: d as f64 + 2.0,
                scatter: cov,
            },
            dirichlet: vec![1.0; data.num_classes()],
            allow_empty_classes: false,
        })
    }
}

/// Posterior for one class with cached factorizations.
#[derive(Debug, Clone)]
pub struct ClassPosterior {
    pub params: NiwParams,
    chol_scatter: DMatrix<f64>,
    log_det_scatter: f64,
    chol_inv_scatter: DMatrix<f64>,
}

impl ClassPosterior {
    fn new(class: usize, params: NiwParams) -> Result<Self> {
        let chol = cholesky(&params.scatter).ok_or(Error::SingularScatter { class })?;
        let inv = chol.inverse();
        let chol_inv = cholesky(&inv).ok_or(Error::SingularScatter { class })?;
        let l = chol.l();
        Ok(ClassPosterior {
            log_det_scatter: log_det_from_chol(&l),
            chol_scatter: l,
            chol_inv_scatter: chol_inv.l(),
            params,
        })
    }

    /// Squared Mahalanobis norm of `x - location` under the scatter matrix.
    fn scatter_mahalanobis(&self, x: &DVector<f64>) -> f64 {
        let diff = x - &self.params.location;
        let y = self
            .chol_scatter
            .solve_lower_triangular(&diff)
            .expect("cholesky factor is nonsingular");
        y.norm_squared()
    }

    /// Log density of the multivariate Student-t posterior predictive.
    pub fn predictive_log_density(&self, x: &DVector<f64>) -> f64 {
        let d = self.params.dim() as f64;
        let nu = self.params.dof - d + 1.0;
        let kappa = self.params.scale_count;
        let c = (kappa + 1.0) / (kappa * nu);
        let log_det = d * c.ln() + self.log_det_scatter;
        let delta2 = self.scatter_mahalanobis(x) / c;
        ln_gamma((nu + d) / 2.0) - ln_gamma(nu / 2.0) - d / 2.0 * (nu * PI).ln() - 0.5 * log_det
            - (nu + d) / 2.0 * (delta2 / nu).ln_1p()
    }

    /// Posterior mean of the covariance, `scatter / (dof - D - 1)`.
    pub fn mean_covariance(&self) -> Option<DMatrix<f64>> {
        let denom = self.params.dof - self.params.dim() as f64 - 1.0;
        (denom > 0.0).then(|| &self.params.scatter / denom)
    }

    /// Gaussian log density at the posterior-mean parameters.
    pub fn plug_in_log_density(&self, x: &DVector<f64>) -> Option<f64> {
        let d = self.params.dim() as f64;
        let denom = self.params.dof - d - 1.0;
        if denom <= 0.0 {
            return None;
        }
        let log_det = self.log_det_scatter - d * denom.ln();
        let delta2 = self.scatter_mahalanobis(x) * denom;
        Some(-0.5 * (d * LN_2PI + log_det + delta2))
    }

    /// Draws `(μ, Σ)` from the NIW posterior via the Bartlett decomposition of
    /// the Wishart-distributed precision.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> GaussianDraw {
        let d = self.params.dim();
        let mut a = DMatrix::zeros(d, d);
        for i in 0..d {
            let chi = ChiSquared::new(self.params.dof - i as f64).expect("dof > D - 1");
            a[(i, i)] = chi.sample(rng).sqrt();
            for j in 0..i {
                a[(i, j)] = rng.sample(StandardNormal);
            }
        }
        // precision = M Mᵀ with M lower triangular
        let m = &self.chol_inv_scatter * a;
        let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let offset = m
            .tr_solve_lower_triangular(&z)
            .expect("Bartlett factor is nonsingular");
        let mean = &self.params.location + offset / self.params.scale_count.sqrt();
        let half_log_det_precision = m.diagonal().iter().map(|v| v.ln()).sum();
        GaussianDraw {
            mean,
            precision_factor: m,
            half_log_det_precision,
        }
    }
}

/// One posterior draw of a class-conditional Gaussian, stored through a lower
/// triangular factor `M` of its precision matrix.
#[derive(Debug, Clone)]
pub struct GaussianDraw {
    pub mean: DVector<f64>,
    pub precision_factor: DMatrix<f64>,
    half_log_det_precision: f64,
}

impl GaussianDraw {
    pub fn covariance(&self) -> DMatrix<f64> {
        let p = &self.precision_factor * self.precision_factor.transpose();
        p.try_inverse().expect("precision is nonsingular")
    }

    pub fn log_density(&self, x: &DVector<f64>) -> f64 {
        let d = self.mean.len() as f64;
        let diff = x - &self.mean;
        let y = self.precision_factor.tr_mul(&diff);
        -0.5 * d * LN_2PI + self.half_log_det_precision - 0.5 * y.norm_squared()
    }
}

/// Joint posterior over all class parameters.
#[derive(Debug, Clone)]
pub struct GaussianPosterior {
    classes: Vec<ClassPosterior>,
    dirichlet: Vec<f64>,
    dim: usize,
    class_names: Option<Vec<String>>,
}

impl GaussianPosterior {
    pub fn from_parts(classes: Vec<NiwParams>, dirichlet: Vec<f64>) -> Result<Self> {
        if classes.len() < 2 {
            return Err(Error::DegenerateLength { len: classes.len() });
        }
        if dirichlet.len() != classes.len() {
            return Err(Error::DimensionMismatch {
                expected: classes.len(),
                got: dirichlet.len(),
            });
        }
        if dirichlet.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return Err(Error::ImproperPrior("Dirichlet counts must be positive".into()));
        }
        let dim = classes[0].dim();
        for c in &classes {
            if c.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: c.dim(),
                });
            }
            c.check_proper()?;
        }
        let classes = classes
            .into_iter()
            .enumerate()
            .map(|(k, p)| ClassPosterior::new(k, p))
            .collect::<Result<Vec<_>>>()?;
        Ok(GaussianPosterior {
            classes,
            dirichlet,
            dim,
            class_names: None,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> &[ClassPosterior] {
        &self.classes
    }

    pub fn dirichlet(&self) -> &[f64] {
        &self.dirichlet
    }

    pub fn class_names(&self) -> Option<&[String]> {
        self.class_names.as_deref()
    }

    /// Posterior mean class weights.
    pub fn mean_class_prior(&self) -> Vec<f64> {
        let total: f64 = self.dirichlet.iter().sum();
        self.dirichlet.iter().map(|a| a / total).collect()
    }

    fn check_input(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if let Some(index) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(())
    }

    /// Draws class weights from the Dirichlet posterior and every class's
    /// Gaussian parameters from its NIW posterior.
    pub fn sample_parameters<R: Rng + ?Sized>(&self, rng: &mut R) -> PosteriorDraw {
        let gammas: Vec<f64> = self
            .dirichlet
            .iter()
            .map(|&a| Gamma::new(a, 1.0).expect("positive shape").sample(rng))
            .collect();
        let ln_total = gammas.iter().sum::<f64>().ln();
        PosteriorDraw {
            log_weights: gammas.iter().map(|g| g.ln() - ln_total).collect(),
            classes: self.classes.iter().map(|c| c.sample(rng)).collect(),
        }
    }

    fn finish(&self, log_scores: &[f64], method: PredictiveMethod, samples: Option<usize>) -> Result<PredictiveOutput> {
        let pmf = normalize_log_scores(log_scores)?;
        let pmf = match &self.class_names {
            Some(names) => pmf.with_class_names(names.clone())?,
            None => pmf,
        };
        Ok(PredictiveOutput { pmf, method, samples })
    }
}

/// One joint draw of all model parameters.
#[derive(Debug, Clone)]
pub struct PosteriorDraw {
    pub log_weights: Vec<f64>,
    pub classes: Vec<GaussianDraw>,
}

impl PosteriorDraw {
    /// `ln π_k + ln N(x; μ_k, Σ_k)` for every class.
    pub fn log_joint(&self, x: &DVector<f64>) -> Vec<f64> {
        self.log_weights
            .iter()
            .zip(&self.classes)
            .map(|(lw, c)| lw + c.log_density(x))
            .collect()
    }
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn normalize_log_scores(log_scores: &[f64]) -> Result<Pmf> {
    let lse = log_sum_exp(log_scores);
    if !lse.is_finite() {
        return Err(Error::NumericalUnderflow);
    }
    let probs: Vec<f64> = log_scores.iter().map(|s| (s - lse).exp()).collect();
    Pmf::new(&probs, NormPolicy::default())
}

/// Conjugate posterior from class-partitioned data.
pub fn fit_posterior(data: &TrainingSet, prior: &Prior) -> Result<GaussianPosterior> {
    let k = data.num_classes();
    if prior.niw.dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            got: prior.niw.dim(),
        });
    }
    if prior.dirichlet.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: prior.dirichlet.len(),
        });
    }
    if prior.dirichlet.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
        return Err(Error::ImproperPrior("Dirichlet counts must be positive".into()));
    }
    prior.niw.check_proper()?;
    let stats = data.class_stats();
    if !prior.allow_empty_classes {
        if let Some(class) = stats.iter().position(|s| s.count == 0.0) {
            return Err(Error::EmptyClass { class });
        }
    }
    let classes = stats.iter().map(|s| prior.niw.update(s)).collect();
    let dirichlet = prior
        .dirichlet
        .iter()
        .zip(&stats)
        .map(|(a, s)| a + s.count)
        .collect();
    let mut post = GaussianPosterior::from_parts(classes, dirichlet)?;
    post.class_names = data.class_names.clone();
    Ok(post)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredictiveMethod {
    Mc,
    ClosedForm,
    PlugIn,
}

/// How Monte Carlo draws are combined into a PMF.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum McAveraging {
    /// Average `π_k N(x; μ_k, Σ_k)` over draws, then normalize over classes.
    /// Targets the closed-form Student-t predictive.
    #[default]
    Joint,
    /// Normalize each draw into class probabilities, then average them
    /// (`E_θ[P(y = k | x, θ)]`).
    Conditional,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictiveOutput {
    pub pmf: Pmf,
    pub method: PredictiveMethod,
    pub samples: Option<usize>,
}

/// Combines precomputed posterior draws into a predictive PMF.
pub fn predict_with_draws(
    x: &DVector<f64>,
    post: &GaussianPosterior,
    draws: &[PosteriorDraw],
    averaging: McAveraging,
) -> Result<PredictiveOutput> {
    post.check_input(x)?;
    if draws.is_empty() {
        return Err(Error::ZeroSamples);
    }
    let k = post.num_classes();
    let per_draw: Vec<Vec<f64>> = draws.iter().map(|d| d.log_joint(x)).collect();
    let ln_s = (draws.len() as f64).ln();
    let log_scores: Vec<f64> = match averaging {
        McAveraging::Joint => (0..k)
            .map(|c| {
                let col: Vec<f64> = per_draw.iter().map(|row| row[c]).collect();
                log_sum_exp(&col) - ln_s
            })
            .collect(),
        McAveraging::Conditional => {
            let mut sums = vec![0.0; k];
            for row in &per_draw {
                let lse = log_sum_exp(row);
                if !lse.is_finite() {
                    return Err(Error::NumericalUnderflow);
                }
                for (s, v) in sums.iter_mut().zip(row) {
                    *s += (v - lse).exp();
                }
            }
            sums.iter().map(|s| s.ln()).collect()
        }
    };
    post.finish(&log_scores, PredictiveMethod::Mc, Some(draws.len()))
}

/// Monte Carlo posterior predictive with `samples` parameter draws.
pub fn posterior_predictive_mc<R: Rng + ?Sized>(
    x: &DVector<f64>,
    post: &GaussianPosterior,
    samples: usize,
    rng: &mut R,
) -> Result<PredictiveOutput> {
    posterior_predictive_mc_with(x, post, samples, rng, McAveraging::Joint)
}

pub fn posterior_predictive_mc_with<R: Rng + ?Sized>(
    x: &DVector<f64>,
    post: &GaussianPosterior,
    samples: usize,
    rng: &mut R,
    averaging: McAveraging,
) -> Result<PredictiveOutput> {
    post.check_input(x)?;
    if samples == 0 {
        return Err(Error::ZeroSamples);
    }
    let draws: Vec<PosteriorDraw> = (0..samples).map(|_| post.sample_parameters(rng)).collect();
    predict_with_draws(x, post, &draws, averaging)
}

/// Exact predictive: Dirichlet-mean weights times Student-t densities.
pub fn posterior_predictive_closed(x: &DVector<f64>, post: &GaussianPosterior) -> Result<PredictiveOutput> {
    post.check_input(x)?;
    let weights = post.mean_class_prior();
    let log_scores: Vec<f64> = post
        .classes
        .iter()
        .zip(&weights)
        .map(|(c, w)| w.ln() + c.predictive_log_density(x))
        .collect();
    post.finish(&log_scores, PredictiveMethod::ClosedForm, None)
}

/// Class probabilities at the posterior-mean parameters.
pub fn plug_in_predict(x: &DVector<f64>, post: &GaussianPosterior) -> Result<PredictiveOutput> {
    post.check_input(x)?;
    let weights = post.mean_class_prior();
    let log_scores = post
        .classes
        .iter()
        .zip(&weights)
        .enumerate()
        .map(|(k, (c, w))| {
            c.plug_in_log_density(x)
                .map(|ld| w.ln() + ld)
                .ok_or_else(|| {
                    Error::ImproperPrior(format!(
                        "class {k}: posterior mean covariance needs dof > D + 1"
                    ))
                })
        })
        .collect::<Result<Vec<_>>>()?;
    post.finish(&log_scores, PredictiveMethod::PlugIn, None)
}

/// Prediction strategy for batch helpers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Predictor {
    ClosedForm,
    PlugIn,
    MonteCarlo { samples: usize, averaging: McAveraging },
}

fn predict_one<R: Rng + ?Sized>(
    x: &DVector<f64>,
    post: &GaussianPosterior,
    predictor: Predictor,
    rng: &mut R,
) -> Result<PredictiveOutput> {
    match predictor {
        Predictor::ClosedForm => posterior_predictive_closed(x, post),
        Predictor::PlugIn => plug_in_predict(x, post),
        Predictor::MonteCarlo { samples, averaging } => {
            posterior_predictive_mc_with(x, post, samples, rng, averaging)
        }
    }
}

/// Predicts from replicated realizations of one uncertain input and averages
/// the resulting PMFs.
pub fn predict_replicated<R: Rng + ?Sized>(
    realizations: &[DVector<f64>],
    post: &GaussianPosterior,
    predictor: Predictor,
    rng: &mut R,
) -> Result<PredictiveOutput> {
    if realizations.is_empty() {
        return Err(Error::EmptyInput);
    }
    let k = post.num_classes();
    let mut acc = vec![0.0; k];
    let mut first = None;
    for x in realizations {
        let out = predict_one(x, post, predictor, rng)?;
        for (a, p) in acc.iter_mut().zip(out.pmf.probs()) {
            *a += p;
        }
        first.get_or_insert(out);
    }
    let first = first.expect("nonempty");
    let mut pmf = Pmf::new(&acc, NormPolicy::Renormalize)?;
    if let Some(names) = &post.class_names {
        pmf = pmf.with_class_names(names.clone())?;
    }
    Ok(PredictiveOutput {
        pmf,
        method: first.method,
        samples: first.samples,
    })
}

/// Predicts each group of realizations in parallel. Group `i` uses generator
/// stream `i` of `seed`, so output does not depend on the thread count.
pub fn predict_batch(
    groups: &[Vec<DVector<f64>>],
    post: &GaussianPosterior,
    predictor: Predictor,
    seed: u64,
) -> Result<Vec<PredictiveOutput>> {
    groups
        .par_iter()
        .enumerate()
        .map(|(i, g)| {
            let mut rng = stream_rng(seed, i as u64);
            predict_replicated(g, post, predictor, &mut rng)
        })
        .collect()
}

/// One class of a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    #[serde(default)]
    pub name: Option<String>,
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub classes: Vec<ClassSpec>,
}

impl DatasetSpec {
    pub fn class_names(&self) -> Vec<String> {
        self.classes
            .iter()
            .enumerate()
            .map(|(k, c)| c.name.clone().unwrap_or_else(|| (k + 1).to_string()))
            .collect()
    }
}

/// Draws `n` labeled points: class from the weights, then input from that
/// class's Gaussian.
pub fn synth_gaussian_dataset<R: Rng + ?Sized>(spec: &DatasetSpec, n: usize, rng: &mut R) -> Result<TrainingSet> {
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let weights: Vec<f64> = spec.classes.iter().map(|c| c.weight).collect();
    let weights = Pmf::new(&weights, NormPolicy::default())?;
    let dim = spec.classes[0].mean.len();
    let factors = spec
        .classes
        .iter()
        .enumerate()
        .map(|(k, c)| {
            if c.mean.len() != dim || c.cov.len() != dim || c.cov.iter().any(|r| r.len() != dim) {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: c.mean.len(),
                });
            }
            let cov = DMatrix::from_fn(dim, dim, |i, j| c.cov[i][j]);
            if (&cov - cov.transpose()).amax() > 1e-12 * cov.amax().max(1.0) {
                return Err(Error::SingularCovariance { class: k });
            }
            let chol = Cholesky::new(cov).ok_or(Error::SingularCovariance { class: k })?;
            Ok((DVector::from_column_slice(&c.mean), chol.l()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut inputs = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let k = weights.sample_class(rng);
        let (mean, l) = &factors[k];
        let z = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let x = mean + l * z;
        inputs.push(x.iter().copied().collect());
        labels.push(k);
    }
    TrainingSet::new(inputs, labels, spec.classes.len())?.with_class_names(spec.class_names())
}
