use std::path::{Path, PathBuf};

use clap::Args;
use serde_json::json;

use nominal_uq::propagate::{
    analytic_propagate, mc_propagate, ConditionalQuantModel, Histogram, ModelSpec, PropagationResult,
    DEFAULT_HISTOGRAM_BINS,
};
use nominal_uq::{Error, Pmf};

use crate::error::{CliError, CliResult};
use crate::input::{is_json, read_json, read_pmf_rows};
use crate::output::{write_plain_csv, write_report, Record, RunConfig};
use crate::{OutputArgs, Tolerances};

#[derive(Args, Debug)]
pub struct PropagateArgs {
    /// Model spec (JSON): {"classes": [{"name", "mu", "sigma", "sampler": {"kind", "params"}}]}.
    #[arg(short, long)]
    pub model: PathBuf,

    /// File holding one PMF row (CSV with header, or JSON).
    #[arg(short, long, conflicts_with = "pmf", required_unless_present = "pmf")]
    pub input: Option<PathBuf>,

    /// PMF given inline as comma-separated probabilities.
    #[arg(long, allow_hyphen_values = true)]
    pub pmf: Option<String>,

    /// Monte Carlo draws; analytic moments only when omitted.
    #[arg(long)]
    pub mc_samples: Option<usize>,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Write a histogram of the Monte Carlo draws here (CSV, or JSON by extension).
    #[arg(long, requires = "mc_samples")]
    pub histogram: Option<PathBuf>,

    #[arg(long, default_value_t = DEFAULT_HISTOGRAM_BINS)]
    pub bins: usize,

    #[command(flatten)]
    pub tolerances: Tolerances,

    #[command(flatten)]
    pub output: OutputArgs,
}

fn read_pmf(args: &PropagateArgs) -> CliResult<Pmf> {
    let policy = args.tolerances.policy();
    if let Some(inline) = &args.pmf {
        let values = inline
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| CliError::Usage(format!("--pmf: {inline:?} is not a comma-separated list of numbers")))?;
        return Pmf::new(&values, policy).map_err(|e| CliError::lib("--pmf", e));
    }
    let path = args.input.as_deref().expect("clap enforces --input or --pmf");
    let rows = read_pmf_rows(path)?;
    if rows.rows.len() != 1 {
        return Err(CliError::Usage(format!(
            "{}: expected exactly one PMF row, found {}",
            path.display(),
            rows.rows.len()
        )));
    }
    Pmf::new(&rows.rows[0], policy).map_err(|e| CliError::lib(rows.row_context(0), e))
}

fn result_records(section: &str, r: &PropagationResult) -> Vec<Record> {
    let mut out = vec![
        Record::new(section, "z", "mean", r.mean),
        Record::new(section, "z", "variance", r.variance),
        Record::new(section, "z", "sd", r.variance.sqrt()),
    ];
    if let Some(se) = r.standard_error {
        out.push(Record::new(section, "z", "standard_error", se));
    }
    if let Some(n) = r.samples {
        out.push(Record::new(section, "z", "samples", n as f64));
    }
    out
}

fn write_histogram(path: &Path, h: &Histogram) -> CliResult<()> {
    if is_json(path) {
        let mut s = serde_json::to_string_pretty(h).expect("histogram serializes");
        s.push('\n');
        return std::fs::write(path, s).map_err(|e| CliError::io(path, e));
    }
    let rows: Vec<Vec<String>> = h
        .counts
        .iter()
        .enumerate()
        .map(|(i, c)| vec![h.edges[i].to_string(), h.edges[i + 1].to_string(), c.to_string()])
        .collect();
    write_plain_csv(path, &["lower", "upper", "count"], &rows)
}

pub fn run(args: &PropagateArgs) -> CliResult<()> {
    let tol = &args.tolerances;
    tol.validate()?;
    if args.bins == 0 {
        return Err(CliError::Usage("--bins must be positive".into()));
    }
    let spec: ModelSpec = read_json(&args.model)?;
    let model = ConditionalQuantModel::from_spec(&spec).map_err(|e| CliError::lib(args.model.display().to_string(), e))?;
    let pmf = read_pmf(args)?;
    if pmf.num_classes() != model.num_regimes() {
        return Err(CliError::lib(
            "PMF vs model",
            Error::DimensionMismatch {
                expected: model.num_regimes(),
                got: pmf.num_classes(),
            },
        ));
    }
    let analytic = analytic_propagate(&pmf, &model)?;
    let mut mc = match args.mc_samples {
        Some(n) => Some(mc_propagate(&pmf, &model, n, args.seed, args.histogram.as_ref().map(|_| args.bins))?),
        None => None,
    };
    let warnings = if mc.is_some() {
        model.check_consistency(args.seed)
    } else {
        Vec::new()
    };
    for w in &warnings {
        let declared_sd = w.declared_sd.map_or("unset".to_owned(), |s| s.to_string());
        log::warn!(
            "regime {:?}: sampler mean {} / sd {} disagree with declared mean {} / sd {}",
            w.name,
            w.sample_mean,
            w.sample_sd,
            w.declared_mean,
            declared_sd
        );
    }
    if let (Some(path), Some(h)) = (&args.histogram, mc.as_mut().and_then(|r| r.histogram.take())) {
        write_histogram(path, &h)?;
    }

    let mut config = RunConfig::new("propagate");
    config.set("model", args.model.display());
    match (&args.input, &args.pmf) {
        (Some(p), _) => config.set("input", p.display()),
        (None, Some(inline)) => config.set("pmf", inline),
        (None, None) => unreachable!("clap enforces --input or --pmf"),
    };
    config.set("seed", args.seed);
    if let Some(n) = args.mc_samples {
        config.set("mc_samples", n);
    }
    tol.echo(&mut config);
    config.set("histogram_bins", args.bins);

    let mut records = result_records("analytic", &analytic);
    if let Some(r) = &mc {
        records.extend(result_records("monte-carlo", r));
    }
    for w in &warnings {
        records.push(Record::new("warning", &w.name, "declared_mean", w.declared_mean));
        records.push(Record::new("warning", &w.name, "sample_mean", w.sample_mean));
        records.push(Record::new("warning", &w.name, "declared_sd", w.declared_sd));
        records.push(Record::new("warning", &w.name, "sample_sd", w.sample_sd));
    }
    let body = json!({
        "pmf": pmf.probs(),
        "analytic": analytic,
        "monte_carlo": mc,
        "warnings": warnings,
    });
    write_report(args.output.output.as_deref(), args.output.format, &config, &records, body)
}
