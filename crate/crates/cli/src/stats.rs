use std::path::PathBuf;

use clap::Args;
use serde_json::json;

use nominal_uq::dispersion::{report_all, summarize_reports, Statistic};
use nominal_uq::Pmf;

use crate::error::{CliError, CliResult};
use crate::input::read_pmf_rows;
use crate::output::{write_report, Record, RunConfig};
use crate::{OutputArgs, Tolerances};

#[derive(Args, Debug)]
pub struct StatsArgs {
    /// PMF rows: CSV with class names as header, or JSON.
    #[arg(short, long)]
    pub input: PathBuf,

    #[command(flatten)]
    pub tolerances: Tolerances,

    #[command(flatten)]
    pub output: OutputArgs,
}

pub fn run(args: &StatsArgs) -> CliResult<()> {
    let tol = &args.tolerances;
    tol.validate()?;
    let input = read_pmf_rows(&args.input)?;
    let mut pmfs = Vec::with_capacity(input.rows.len());
    for (i, row) in input.rows.iter().enumerate() {
        let mut p = Pmf::new(row, tol.policy()).map_err(|e| CliError::lib(input.row_context(i), e))?;
        if let Some(names) = &input.class_names {
            p = p
                .with_class_names(names.clone())
                .map_err(|e| CliError::lib(input.row_context(i), e))?;
        }
        pmfs.push(p);
    }
    let reports = pmfs
        .iter()
        .enumerate()
        .map(|(i, p)| report_all(p, tol.alpha, tol.eps_mode).map_err(|e| CliError::lib(input.row_context(i), e)))
        .collect::<CliResult<Vec<_>>>()?;
    let summary = summarize_reports(&reports)?;

    let mut config = RunConfig::new("stats");
    config.set("input", args.input.display()).set("rows", pmfs.len());
    tol.echo(&mut config);

    let mut records = Vec::new();
    for (i, r) in reports.iter().enumerate() {
        for s in Statistic::ALL {
            records.push(Record::new("row", i + 1, s.name(), r.get(s)));
        }
    }
    for (s, m) in &summary {
        records.push(Record::new("summary", "median", s.name(), m.median));
        records.push(Record::new("summary", "mean", s.name(), m.mean));
        records.push(Record::new("summary", "iqr", s.name(), m.iqr));
        records.push(Record::new("summary", "sd", s.name(), m.sd));
    }

    let rows: Vec<_> = pmfs
        .iter()
        .zip(&reports)
        .enumerate()
        .map(|(i, (p, r))| json!({"row": i + 1, "pmf": p.probs(), "statistics": r}))
        .collect();
    let summary_json: Vec<_> = summary
        .iter()
        .map(|(s, m)| json!({"statistic": s, "median": m.median, "mean": m.mean, "iqr": m.iqr, "sd": m.sd}))
        .collect();
    let body = json!({
        "class_names": input.class_names,
        "rows": rows,
        "summary": summary_json,
    });
    write_report(args.output.output.as_deref(), args.output.format, &config, &records, body)
}
