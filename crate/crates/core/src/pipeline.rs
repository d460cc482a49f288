//! End-to-end classification chain: fit the Bayesian classifier, predict
//! PMFs for held-out inputs, then summarize dispersion and score them.

use nalgebra::DVector;
use serde::Serialize;

use crate::bayes::{
    fit_posterior, predict_batch, synth_gaussian_dataset, ClassSpec, DatasetSpec, PredictiveOutput, Predictor, Prior,
    TrainingSet,
};
use crate::dispersion::{report_all, summarize_reports, Statistic, StatisticSummary, UncertaintyReport};
use crate::error::{Error, Result};
use crate::pmf::DEFAULT_EPS_MODE;
use crate::rng::stream_rng;
use crate::scoring::{confusion_with_tolerance, ebs, exe, ConfusionMatrix, LabeledProbabilities, TieRule, DEFAULT_EPS_CLIP};

/// Generator streams reserved for dataset synthesis. Prediction uses streams
/// `0..n_test`.
const TRAIN_STREAM: u64 = u64::MAX;
const TEST_STREAM: u64 = u64::MAX - 1;

pub const DEFAULT_TRAIN_SIZE: usize = 600;
pub const DEFAULT_TEST_SIZE: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainConfig {
    pub predictor: Predictor,
    pub alpha: f64,
    pub eps_mode: f64,
    pub eps_clip: f64,
    pub tie_rule: TieRule,
    pub seed: u64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            predictor: Predictor::ClosedForm,
            alpha: 1.0,
            eps_mode: DEFAULT_EPS_MODE,
            eps_clip: DEFAULT_EPS_CLIP,
            tie_rule: TieRule::default(),
            seed: 0,
        }
    }
}

/// Scores against known test labels.
#[derive(Debug, Clone, Serialize)]
pub struct ChainScores {
    pub exe: f64,
    pub ebs: f64,
    pub confusion: ConfusionMatrix,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainReport {
    pub predictions: Vec<PredictiveOutput>,
    pub reports: Vec<UncertaintyReport>,
    pub summaries: Vec<(Statistic, StatisticSummary)>,
    pub scores: Option<ChainScores>,
}

impl ChainReport {
    pub fn summary(&self, stat: Statistic) -> &StatisticSummary {
        &self
            .summaries
            .iter()
            .find(|(s, _)| *s == stat)
            .expect("every statistic is summarized")
            .1
    }
}

/// Runs the chain on test inputs given as groups of replicated realizations
/// (one group per test row; a single realization for exact inputs). Scores
/// are computed when labels are supplied.
pub fn run_chain(
    train: &TrainingSet,
    test_inputs: &[Vec<DVector<f64>>],
    test_labels: Option<&[usize]>,
    prior: Option<&Prior>,
    config: &ChainConfig,
) -> Result<ChainReport> {
    if test_inputs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let default_prior;
    let prior = match prior {
        Some(p) => p,
        None => {
            default_prior = Prior::default_for(train)?;
            &default_prior
        }
    };
    let post = fit_posterior(train, prior)?;
    log::info!(
        "fitted posterior on {} points, {} classes, dimension {}",
        train.len(),
        train.num_classes(),
        train.dim()
    );
    let predictions = predict_batch(test_inputs, &post, config.predictor, config.seed)?;
    let reports = predictions
        .iter()
        .map(|p| report_all(&p.pmf, config.alpha, config.eps_mode))
        .collect::<Result<Vec<_>>>()?;
    let summaries = summarize_reports(&reports)?;
    let scores = match test_labels {
        Some(labels) => {
            let scored =
                LabeledProbabilities::from_pmfs(predictions.iter().map(|p| p.pmf.clone()).collect(), labels.to_vec())?;
            Some(ChainScores {
                exe: exe(&scored, config.eps_clip)?,
                ebs: ebs(&scored)?,
                confusion: confusion_with_tolerance(&scored, config.tie_rule, config.eps_mode)?,
            })
        }
        None => None,
    };
    Ok(ChainReport {
        predictions,
        reports,
        summaries,
        scores,
    })
}

/// Synthetic datasets for the demo.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemoPreset {
    /// Three unit-covariance classes 5 sd apart: mostly confident predictions.
    Separated,
    /// The same layout 1.5 sd apart: heavy class overlap.
    Overlapping,
}

impl DemoPreset {
    pub fn name(self) -> &'static str {
        match self {
            DemoPreset::Separated => "separated",
            DemoPreset::Overlapping => "overlapping",
        }
    }

    pub fn spec(self) -> DatasetSpec {
        let side = match self {
            DemoPreset::Separated => 5.0,
            DemoPreset::Overlapping => 1.5,
        };
        let height = side * 3f64.sqrt() / 2.0;
        let corners = [[0.0, 0.0], [side, 0.0], [side / 2.0, height]];
        DatasetSpec {
            classes: corners
                .iter()
                .enumerate()
                .map(|(k, c)| ClassSpec {
                    name: Some(format!("class{}", k + 1)),
                    mean: c.to_vec(),
                    cov: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                    weight: 1.0 / 3.0,
                })
                .collect(),
        }
    }
}

impl std::str::FromStr for DemoPreset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "separated" => Ok(DemoPreset::Separated),
            "overlapping" => Ok(DemoPreset::Overlapping),
            other => Err(format!("unknown preset {other:?}")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DemoRun {
    pub train: TrainingSet,
    pub test: TrainingSet,
    pub report: ChainReport,
}

/// Synthesizes training and test sets from `spec` and runs the chain.
pub fn run_demo(spec: &DatasetSpec, n_train: usize, n_test: usize, config: &ChainConfig) -> Result<DemoRun> {
    let train = synth_gaussian_dataset(spec, n_train, &mut stream_rng(config.seed, TRAIN_STREAM))?;
    let test = synth_gaussian_dataset(spec, n_test, &mut stream_rng(config.seed, TEST_STREAM))?;
    let groups: Vec<Vec<DVector<f64>>> = test.inputs().iter().map(|x| vec![x.clone()]).collect();
    let report = run_chain(&train, &groups, Some(test.labels()), None, config)?;
    Ok(DemoRun { train, test, report })
}
