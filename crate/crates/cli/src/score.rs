use std::path::PathBuf;

use clap::Args;
use serde_json::{json, Value};

use nominal_uq::scoring::{confusion_with_tolerance, ebs, exe, test_prior, ConfusionMatrix, LabeledProbabilities};
use nominal_uq::{Error, Pmf};

use crate::error::{CliError, CliResult};
use crate::input::read_labeled_rows;
use crate::output::{write_report, Record, RunConfig};
use crate::{value_name, OutputArgs, TieRuleArg, Tolerances};

#[derive(Args, Debug)]
pub struct ScoreArgs {
    /// Labeled probability rows: CSV `p_1,...,p_K,label` with 1-based labels, or JSON.
    #[arg(short, long)]
    pub input: PathBuf,

    /// How to pick the predicted class when several share the maximum.
    #[arg(long, value_enum, default_value_t = TieRuleArg::LowestIndex)]
    pub tie_rule: TieRuleArg,

    #[command(flatten)]
    pub tolerances: Tolerances,

    #[command(flatten)]
    pub output: OutputArgs,
}

/// Scores of one labeled evaluation set.
pub struct Scores<'a> {
    pub class_names: &'a [String],
    pub test_prior: Vec<f64>,
    pub exe: f64,
    pub ebs: f64,
    pub confusion: &'a ConfusionMatrix,
}

impl Scores<'_> {
    pub fn records(&self) -> Vec<Record> {
        let c = self.confusion;
        let mut out = vec![
            Record::new("metric", "all", "loss", c.classification_loss),
            Record::new("metric", "all", "exe", self.exe),
            Record::new("metric", "all", "ebs", self.ebs),
        ];
        for (name, q) in self.class_names.iter().zip(&self.test_prior) {
            out.push(Record::new("test_prior", name, "q", *q));
        }
        for (t, row) in c.counts.iter().enumerate() {
            for (p, &n) in row.iter().enumerate() {
                out.push(Record::new("confusion", &self.class_names[t], &self.class_names[p], n as f64));
            }
        }
        for (name, r) in self.class_names.iter().zip(&c.rates) {
            out.push(Record::new("rates", name, "tpr", r.tpr));
            out.push(Record::new("rates", name, "fpr", r.fpr));
            out.push(Record::new("rates", name, "tnr", r.tnr));
            out.push(Record::new("rates", name, "fnr", r.fnr));
        }
        out
    }

    pub fn json(&self) -> Value {
        json!({
            "loss": self.confusion.classification_loss,
            "exe": self.exe,
            "ebs": self.ebs,
            "test_prior": self.test_prior,
            "confusion": {
                "counts": self.confusion.counts,
                "rates": self.confusion.rates,
            },
        })
    }
}

pub fn default_class_names(k: usize) -> Vec<String> {
    (1..=k).map(|i| i.to_string()).collect()
}

pub fn run(args: &ScoreArgs) -> CliResult<()> {
    let tol = &args.tolerances;
    tol.validate()?;
    let input = read_labeled_rows(&args.input)?;
    let rows = &input.pmfs;
    let mut pmfs = Vec::with_capacity(rows.rows.len());
    for (i, row) in rows.rows.iter().enumerate() {
        let p = Pmf::new(row, tol.policy()).map_err(|e| CliError::lib(rows.row_context(i), e))?;
        if let Some(first) = pmfs.first().map(Pmf::num_classes) {
            if p.num_classes() != first {
                return Err(CliError::lib(
                    rows.row_context(i),
                    Error::DimensionMismatch {
                        expected: first,
                        got: p.num_classes(),
                    },
                ));
            }
        }
        if input.labels[i] >= p.num_classes() {
            return Err(CliError::lib(rows.row_context(i), Error::InvalidLabel { row: i + 1 }));
        }
        pmfs.push(p);
    }
    let k = pmfs[0].num_classes();
    let class_names = match &rows.class_names {
        Some(names) if names.len() == k => names.clone(),
        Some(names) => {
            return Err(CliError::lib(
                "class_names",
                Error::InvalidClassNames {
                    expected: k,
                    got: names.len(),
                },
            ))
        }
        None => default_class_names(k),
    };
    let n = pmfs.len();
    let data = LabeledProbabilities::from_pmfs(pmfs, input.labels.clone())?;
    let confusion = confusion_with_tolerance(&data, args.tie_rule.rule(), tol.eps_mode).map_err(|e| match e {
        Error::AmbiguousArgmax { row } => CliError::lib(rows.row_context(row), e),
        other => other.into(),
    })?;
    let scores = Scores {
        class_names: &class_names,
        test_prior: test_prior(&data).probs().to_vec(),
        exe: exe(&data, tol.eps_clip)?,
        ebs: ebs(&data)?,
        confusion: &confusion,
    };

    let mut config = RunConfig::new("score");
    config
        .set("input", args.input.display())
        .set("rows", n)
        .set("tie_rule", value_name(args.tie_rule));
    tol.echo(&mut config);
    let mut body = scores.json();
    body["class_names"] = json!(class_names);
    body["rows"] = json!(n);
    write_report(
        args.output.output.as_deref(),
        args.output.format,
        &config,
        &scores.records(),
        body,
    )
}
