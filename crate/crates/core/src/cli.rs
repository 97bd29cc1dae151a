//! Command-line front end.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{self, AnalysisTable, GroupingSpec, MultiCategory, MAX_AUTHOR_BUCKET};
use crate::baselines::{self, BaselineTable};
use crate::ingest::{self, ArticleRecord, Format};
use crate::plot;
use crate::synth::{self, LognormalSpec};

#[derive(Debug, Parser)]
#[command(
    name = "gmncs",
    version,
    about = "Geometric mean normalized citation scores"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-(category, year) baselines as `category,year,n,arith_mean,geo_mean`.
    Baselines(BaselinesArgs),
    /// Per-(article, category) normalized scores.
    Score(ScoreArgs),
    /// Grouped gMNCS table: `group,author_bucket,n,gmncs,ci_low,ci_high`.
    Analyze(AnalyzeArgs),
    /// Plot data with jittered x positions from an analysis table.
    ExportPlot(ExportPlotArgs),
    /// Precision and coverage simulations on discretised lognormal data.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Input files (JSONL or CSV); records are concatenated in argument order.
    #[arg(long = "in", value_name = "PATH", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    /// Input format; guessed from each file's extension when omitted.
    #[arg(long, value_parser = parse_format)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output file; standard output when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BaselinesArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Baselines CSV to score against instead of computing them from the input.
    #[arg(long, value_name = "PATH")]
    pub baselines: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct GroupingArgs {
    /// Country groups to report (comma-separated codes); every observed country when omitted.
    #[arg(long, value_delimiter = ',')]
    pub countries: Option<Vec<String>>,
    /// Country groups hold only single-country articles (the default).
    #[arg(long, conflicts_with = "include_international")]
    pub domestic_only: bool,
    /// Also count internationally co-authored articles in each of their countries' groups.
    #[arg(long)]
    pub include_international: bool,
    /// Author-count range, e.g. `1-10` or `3`.
    #[arg(long, default_value = "1-10", value_parser = parse_buckets)]
    pub buckets: (u32, u32),
    /// Report articles with more than ten authors as a `10+` bucket.
    #[arg(long)]
    pub overflow_bucket: bool,
    /// Smallest group size that gets a confidence interval.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(2..))]
    pub min_n: u64,
    /// Confidence level in (0, 1).
    #[arg(long, default_value_t = 0.95, value_parser = parse_level)]
    pub level: f64,
    /// Restrict groups to these publication years (comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub years: Option<Vec<i32>>,
    /// Restrict groups to these categories (comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub categories: Option<Vec<String>>,
    /// Omit the pooled `All` group.
    #[arg(long)]
    pub no_all: bool,
    /// Leave articles without country information out of the `All` group.
    #[arg(long)]
    pub all_excludes_unknown: bool,
    /// Leave internationally co-authored articles out of the `All` group.
    #[arg(long)]
    pub all_excludes_international: bool,
    /// One observation per article, averaging its scores over its categories.
    #[arg(long)]
    pub average_categories: bool,
}

impl GroupingArgs {
    pub fn to_spec(&self) -> GroupingSpec<f64> {
        GroupingSpec {
            countries: self
                .countries
                .as_ref()
                .map(|cs| cs.iter().map(|c| c.trim().to_uppercase()).collect()),
            include_international: self.include_international,
            all_group: !self.no_all,
            all_includes_international: !self.all_excludes_international,
            all_includes_unknown: !self.all_excludes_unknown,
            buckets: self.buckets,
            overflow_bucket: self.overflow_bucket,
            min_n: self.min_n as usize,
            level: self.level,
            years: self.years.clone(),
            categories: self.categories.clone(),
            multi_category: if self.average_categories {
                MultiCategory::AveragePerArticle
            } else {
                MultiCategory::PerAssignment
            },
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub grouping: GroupingArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ExportPlotArgs {
    /// Analysis table CSV written by `analyze`.
    #[arg(long, value_name = "PATH")]
    pub table: PathBuf,
    /// Horizontal distance between neighbouring series.
    #[arg(long, default_value_t = plot::DEFAULT_JITTER)]
    pub jitter: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    Precision,
    Coverage,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Csv,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Which experiment to run.
    #[arg(value_enum, default_value_t = Experiment::All)]
    pub experiment: Experiment,
    /// Location of ln(1 + c).
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub mu: f64,
    /// Scale of ln(1 + c); must be positive.
    #[arg(long, default_value_t = 1.1, value_parser = parse_positive)]
    pub sigma: f64,
    /// Sample size per replicate.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    /// Number of replicates.
    #[arg(long, default_value_t = 10_000)]
    pub reps: usize,
    /// Random seed; printed in the report.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Confidence level for the coverage experiment.
    #[arg(long, default_value_t = 0.95, value_parser = parse_level)]
    pub level: f64,
    /// Human-readable sections or `section,metric,value` CSV rows.
    #[arg(long = "report-format", value_enum, default_value_t = ReportFormat::Text)]
    pub report_format: ReportFormat,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse()
}

fn parse_level(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("level must lie strictly between 0 and 1, got {v}"))
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be positive, got {v}"))
    }
}

fn parse_buckets(s: &str) -> Result<(u32, u32), String> {
    let (lo, hi) = match s.split_once('-') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (s.trim(), s.trim()),
    };
    let lo: u32 = lo
        .parse()
        .map_err(|_| format!("invalid bucket range '{s}'"))?;
    let hi: u32 = hi
        .parse()
        .map_err(|_| format!("invalid bucket range '{s}'"))?;
    if lo < 1 || hi > MAX_AUTHOR_BUCKET || lo > hi {
        return Err(format!(
            "bucket range must lie within 1-{MAX_AUTHOR_BUCKET}, got '{s}'"
        ));
    }
    Ok((lo, hi))
}

fn open_output(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Reads every input file, reporting rejected lines and duplicate ids on stderr.
pub fn load_records(input: &InputArgs) -> Result<Vec<ArticleRecord>> {
    let mut records = Vec::new();
    for path in &input.inputs {
        let parsed = ingest::parse_file(path, input.format)
            .with_context(|| format!("cannot read {}", path.display()))?;
        warn_rejected(path, &parsed.errors);
        records.extend(parsed.records);
    }
    let report = ingest::validate_dataset(&records);
    if !report.duplicates.is_empty() {
        eprintln!(
            "warning: {} duplicate id(s), e.g. {}",
            report.duplicates.len(),
            report.duplicates[0]
        );
    }
    Ok(records)
}

fn warn_rejected(path: &Path, errors: &[ingest::RecordError]) {
    if errors.is_empty() {
        return;
    }
    eprintln!(
        "warning: {}: {} line(s) rejected",
        path.display(),
        errors.len()
    );
    for e in errors.iter().take(5) {
        eprintln!("  {e}");
    }
}

fn usable_baselines(records: &[ArticleRecord]) -> Result<BaselineTable<f64>> {
    let table = baselines::compute_baselines::<f64>(records);
    if !table.has_usable_cell() {
        bail!("no usable baseline");
    }
    for key in table.degenerate_cells() {
        eprintln!("warning: cell {key} has no citations; its articles get no score");
    }
    Ok(table)
}

pub fn cmd_baselines(args: &BaselinesArgs) -> Result<()> {
    let records = load_records(&args.input)?;
    let table = usable_baselines(&records)?;
    table.write_csv(open_output(&args.output.out)?)?;
    Ok(())
}

pub fn cmd_score(args: &ScoreArgs) -> Result<()> {
    let records = load_records(&args.input)?;
    let table = match &args.baselines {
        Some(path) => {
            let file =
                File::open(path).with_context(|| format!("cannot read {}", path.display()))?;
            BaselineTable::read_csv(file)
                .with_context(|| format!("bad baselines in {}", path.display()))?
        }
        None => usable_baselines(&records)?,
    };
    let observations = baselines::normalize_all(&records, &table)?;
    baselines::write_scores_csv(&observations, open_output(&args.output.out)?)?;
    Ok(())
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<()> {
    let records = load_records(&args.input)?;
    let spec = args.grouping.to_spec();
    let table = analysis::analyze_dataset(&records, &spec)?;
    for key in &table.degenerate_cells {
        eprintln!("warning: cell {key} has no citations; its articles are excluded");
    }
    if table.excluded_degenerate > 0 {
        eprintln!(
            "warning: {} observation(s) excluded from degenerate cells",
            table.excluded_degenerate
        );
    }
    table.write_csv(open_output(&args.output.out)?)?;
    Ok(())
}

pub fn cmd_export_plot(args: &ExportPlotArgs) -> Result<()> {
    let file =
        File::open(&args.table).with_context(|| format!("cannot read {}", args.table.display()))?;
    // the level is not stored in the table and does not affect plot data
    let table = AnalysisTable::<f64>::read_csv(file, 0.95)
        .with_context(|| format!("bad analysis table in {}", args.table.display()))?;
    let points = plot::plot_points(&table, args.jitter);
    plot::write_plot_csv(&points, open_output(&args.output.out)?)?;
    Ok(())
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let spec = LognormalSpec::new(args.mu, args.sigma, args.n as usize, args.seed)?;
    let precision = matches!(args.experiment, Experiment::Precision | Experiment::All)
        .then(|| synth::precision_experiment(&spec, args.reps))
        .transpose()?;
    let coverage = matches!(args.experiment, Experiment::Coverage | Experiment::All)
        .then(|| synth::coverage_experiment(&spec, args.level, args.reps))
        .transpose()?;
    let mut out = open_output(&args.output.out)?;
    match args.report_format {
        ReportFormat::Text => {
            writeln!(out, "# gmncs simulate")?;
            writeln!(out, "seed                  {}", spec.seed)?;
            writeln!(out, "mu                    {}", spec.mu)?;
            writeln!(out, "sigma                 {}", spec.sigma)?;
            writeln!(out, "n                     {}", spec.n)?;
            if let Some(p) = &precision {
                writeln!(out)?;
                write!(out, "{p}")?;
            }
            if let Some(c) = &coverage {
                writeln!(out)?;
                write!(out, "{c}")?;
            }
        }
        ReportFormat::Csv => {
            synth::write_reports_csv(precision.as_ref(), coverage.as_ref(), &mut out)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Baselines(a) => cmd_baselines(a),
        Command::Score(a) => cmd_score(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::ExportPlot(a) => cmd_export_plot(a),
        Command::Simulate(a) => cmd_simulate(a),
    }
}
