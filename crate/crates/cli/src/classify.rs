use std::path::PathBuf;

use clap::Args;
use nalgebra::DVector;
use serde_json::json;

use nominal_uq::bayes::{DatasetSpec, Predictor, TrainingSet};
use nominal_uq::dispersion::Statistic;
use nominal_uq::pipeline::{run_chain, run_demo as run_demo_chain, ChainConfig, ChainReport, DemoPreset};
use nominal_uq::pipeline::{DEFAULT_TEST_SIZE, DEFAULT_TRAIN_SIZE};
use nominal_uq::scoring::test_prior;
use nominal_uq::scoring::LabeledProbabilities;
use nominal_uq::Error;

use crate::error::{CliError, CliResult};
use crate::input::{read_feature_rows, read_json};
use crate::output::{write_report, Record, RunConfig};
use crate::score::{default_class_names, Scores};
use crate::{value_name, AveragingArg, MethodArg, OutputArgs, TieRuleArg, Tolerances};

/// Options shared by `classify` and `demo`.
#[derive(Args, Debug, Clone)]
pub struct PredictArgs {
    /// How the posterior predictive PMF is computed.
    #[arg(long, value_enum, default_value_t = MethodArg::Closed)]
    pub method: MethodArg,

    /// Posterior parameter draws per test row for `--method mc`.
    #[arg(long, default_value_t = 1000)]
    pub posterior_samples: usize,

    /// How Monte Carlo draws are combined for `--method mc`.
    #[arg(long, value_enum, default_value_t = AveragingArg::Joint)]
    pub averaging: AveragingArg,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// How to pick the predicted class when several share the maximum.
    #[arg(long, value_enum, default_value_t = TieRuleArg::LowestIndex)]
    pub tie_rule: TieRuleArg,
}

impl PredictArgs {
    fn chain_config(&self, tol: &Tolerances) -> CliResult<ChainConfig> {
        let predictor = match self.method {
            MethodArg::Closed => Predictor::ClosedForm,
            MethodArg::PlugIn => Predictor::PlugIn,
            MethodArg::Mc => {
                if self.posterior_samples == 0 {
                    return Err(CliError::Usage("--posterior-samples must be positive".into()));
                }
                Predictor::MonteCarlo {
                    samples: self.posterior_samples,
                    averaging: self.averaging.averaging(),
                }
            }
        };
        Ok(ChainConfig {
            predictor,
            alpha: tol.alpha,
            eps_mode: tol.eps_mode,
            eps_clip: tol.eps_clip,
            tie_rule: self.tie_rule.rule(),
            seed: self.seed,
        })
    }

    fn echo(&self, config: &mut RunConfig) {
        config.set("method", value_name(self.method));
        if self.method == MethodArg::Mc {
            config
                .set("posterior_samples", self.posterior_samples)
                .set("averaging", value_name(self.averaging));
        }
        config.set("seed", self.seed).set("tie_rule", value_name(self.tie_rule));
    }
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    /// Training CSV: numeric feature columns plus a 1-based `label` column.
    #[arg(long)]
    pub train: PathBuf,

    /// Test CSV with the same feature columns. An optional `label` column
    /// enables scoring; rows sharing a `group` value are replicated
    /// realizations of one uncertain input and yield one averaged PMF.
    #[arg(long)]
    pub test: PathBuf,

    /// Number of classes; defaults to the largest training label.
    #[arg(long)]
    pub num_classes: Option<usize>,

    #[command(flatten)]
    pub predict: PredictArgs,

    #[command(flatten)]
    pub tolerances: Tolerances,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct DemoArgs {
    /// Built-in dataset: `separated` or `overlapping`.
    #[arg(long, default_value = "separated", conflicts_with = "spec")]
    pub preset: DemoPreset,

    /// Dataset spec (JSON): {"classes": [{"name", "mean", "cov", "weight"}]}.
    #[arg(long)]
    pub spec: Option<PathBuf>,

    #[arg(long, default_value_t = DEFAULT_TRAIN_SIZE)]
    pub n_train: usize,

    #[arg(long, default_value_t = DEFAULT_TEST_SIZE)]
    pub n_test: usize,

    #[command(flatten)]
    pub predict: PredictArgs,

    #[command(flatten)]
    pub tolerances: Tolerances,

    #[command(flatten)]
    pub output: OutputArgs,
}

fn write_chain(
    config: &RunConfig,
    class_names: &[String],
    row_ids: &[String],
    report: &ChainReport,
    test_labels: Option<&[usize]>,
    output: &OutputArgs,
) -> CliResult<()> {
    let mut records = Vec::new();
    for (id, p) in row_ids.iter().zip(&report.predictions) {
        for (name, q) in class_names.iter().zip(p.pmf.probs()) {
            records.push(Record::new("prediction", id, name, *q));
        }
    }
    for (id, r) in row_ids.iter().zip(&report.reports) {
        for s in Statistic::ALL {
            records.push(Record::new("row", id, s.name(), r.get(s)));
        }
    }
    for (s, m) in &report.summaries {
        records.push(Record::new("summary", "median", s.name(), m.median));
        records.push(Record::new("summary", "mean", s.name(), m.mean));
        records.push(Record::new("summary", "iqr", s.name(), m.iqr));
        records.push(Record::new("summary", "sd", s.name(), m.sd));
    }
    let mut scores_json = serde_json::Value::Null;
    if let (Some(s), Some(labels)) = (&report.scores, test_labels) {
        let data = LabeledProbabilities::from_pmfs(
            report.predictions.iter().map(|p| p.pmf.clone()).collect(),
            labels.to_vec(),
        )?;
        let scores = Scores {
            class_names,
            test_prior: test_prior(&data).probs().to_vec(),
            exe: s.exe,
            ebs: s.ebs,
            confusion: &s.confusion,
        };
        records.extend(scores.records());
        scores_json = scores.json();
    }

    let first = &report.predictions[0];
    let rows: Vec<_> = row_ids
        .iter()
        .zip(report.predictions.iter().zip(&report.reports))
        .map(|(id, (p, r))| json!({"row": id, "pmf": p.pmf.probs(), "statistics": r}))
        .collect();
    let summary: Vec<_> = report
        .summaries
        .iter()
        .map(|(s, m)| json!({"statistic": s, "median": m.median, "mean": m.mean, "iqr": m.iqr, "sd": m.sd}))
        .collect();
    let body = json!({
        "class_names": class_names,
        "method": first.method,
        "samples": first.samples,
        "rows": rows,
        "summary": summary,
        "scores": scores_json,
    });
    write_report(output.output.as_deref(), output.format, config, &records, body)
}

fn to_vectors(rows: &[Vec<f64>]) -> Vec<DVector<f64>> {
    rows.iter().map(|r| DVector::from_column_slice(r)).collect()
}

pub fn run_classify(args: &ClassifyArgs) -> CliResult<()> {
    let tol = &args.tolerances;
    tol.validate()?;
    let chain = args.predict.chain_config(tol)?;

    let train_rows = read_feature_rows(&args.train, true)?;
    let test_rows = read_feature_rows(&args.test, false)?;
    if train_rows.feature_names != test_rows.feature_names {
        return Err(CliError::parse(
            &args.test,
            Some(1),
            format!(
                "feature columns {:?} do not match the training columns {:?}",
                test_rows.feature_names, train_rows.feature_names
            ),
        ));
    }

    let mut inputs = Vec::new();
    let mut labels = Vec::new();
    for g in &train_rows.groups {
        let label = g.label.expect("labels are required for training");
        for x in &g.inputs {
            inputs.push(x.clone());
            labels.push(label);
        }
    }
    let k = match args.num_classes {
        Some(k) => k,
        None => labels.iter().max().map_or(0, |m| m + 1),
    };
    let class_names = default_class_names(k);
    let train = TrainingSet::new(inputs, labels, k)
        .and_then(|t| t.with_class_names(class_names.clone()))
        .map_err(|e| CliError::lib(args.train.display().to_string(), e))?;

    let groups: Vec<Vec<DVector<f64>>> = test_rows.groups.iter().map(|g| to_vectors(&g.inputs)).collect();
    let test_labels: Option<Vec<usize>> = test_rows.groups.iter().map(|g| g.label).collect();
    if let Some(labels) = &test_labels {
        if let Some(i) = labels.iter().position(|&l| l >= k) {
            let g = &test_rows.groups[i];
            return Err(CliError::lib(
                format!("{}: row {} (line {})", args.test.display(), g.id, g.line),
                Error::InvalidLabel { row: i + 1 },
            ));
        }
    }
    let row_ids: Vec<String> = test_rows.groups.iter().map(|g| g.id.clone()).collect();
    let report = run_chain(&train, &groups, test_labels.as_deref(), None, &chain).map_err(|e| match e {
        Error::AmbiguousArgmax { row } => {
            let g = &test_rows.groups[row];
            CliError::lib(format!("{}: row {} (line {})", args.test.display(), g.id, g.line), e)
        }
        other => other.into(),
    })?;

    let mut config = RunConfig::new("classify");
    config
        .set("train", args.train.display())
        .set("test", args.test.display())
        .set("num_classes", k)
        .set("train_rows", train.len())
        .set("test_rows", row_ids.len());
    args.predict.echo(&mut config);
    tol.echo(&mut config);
    write_chain(&config, &class_names, &row_ids, &report, test_labels.as_deref(), &args.output)
}

pub fn run_demo(args: &DemoArgs) -> CliResult<()> {
    let tol = &args.tolerances;
    tol.validate()?;
    let chain = args.predict.chain_config(tol)?;
    let spec: DatasetSpec = match &args.spec {
        Some(path) => read_json(path)?,
        None => args.preset.spec(),
    };
    let run = run_demo_chain(&spec, args.n_train, args.n_test, &chain)?;
    let class_names = spec.class_names();
    let row_ids: Vec<String> = (1..=run.test.len()).map(|i| i.to_string()).collect();

    let mut config = RunConfig::new("demo");
    match &args.spec {
        Some(path) => config.set("spec", path.display()),
        None => config.set("preset", args.preset.name()),
    };
    config.set("n_train", args.n_train).set("n_test", args.n_test);
    args.predict.echo(&mut config);
    tol.echo(&mut config);
    write_chain(
        &config,
        &class_names,
        &row_ids,
        &run.report,
        Some(run.test.labels()),
        &args.output,
    )
}
