//! `trustrec`: ingest rating/trust dumps and run cross-validated
//! recommender experiments, writing tidy CSV reports.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use trustrec_core::harness::{
    recommended_degree_distribution, sweep_length, theta_grid, ThetaSummary, DEFAULT_FOLDS, DEFAULT_LIST_LENGTH,
    DEFAULT_REALIZATIONS, DEFAULT_SEED,
};
use trustrec_core::ingest::{load_raw, read_canonical_file, write_canonical_file, DEFAULT_THRESHOLD};
use trustrec_core::{run_experiment, sweep_theta, Dataset, ExperimentConfig, Method, MethodConfig, MetricsReport};

const DEFAULT_THETA: f64 = 0.70;

// `--L` defaults are written as the literal "10".
const _: () = assert!(DEFAULT_LIST_LENGTH == 10);

#[derive(Debug, Parser)]
#[command(name = "trustrec", version, about = "Trust-aware diffusion recommenders and their evaluation")]
struct Cli {
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Threshold raw ratings, join the trust network and write a canonical dataset
    Ingest(IngestArgs),
    /// Cross-validate methods and write a metrics report
    Evaluate(EvaluateArgs),
    /// Evaluate CosRA+T over a grid of theta values on shared splits
    SweepTheta(SweepThetaArgs),
    /// Evaluate methods over a range of list lengths
    SweepLength(SweepLengthArgs),
    /// Histogram of training degrees of recommended objects (one fold)
    DegreeDist(DegreeDistArgs),
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Ratings file: user<TAB>object<TAB>rating per line
    #[arg(long)]
    ratings: PathBuf,
    /// Trust file: truster<TAB>trustee per line
    #[arg(long)]
    trust: PathBuf,
    /// Minimum rating kept as a link (1-5)
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: u8,
    /// Canonical dataset output path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SplitArgs {
    /// Canonical dataset file
    #[arg(long)]
    dataset: PathBuf,
    /// Number of cross-validation folds (at least 2)
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    folds: usize,
    /// Independent realizations; realization r uses seed + r
    #[arg(long, default_value_t = DEFAULT_REALIZATIONS)]
    realizations: usize,
    /// Base random seed
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// CSV report path (default: standard output)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the report as JSON, including the configuration
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    split: SplitArgs,
    /// Comma-separated methods: GR, UCF, HC, MD, CosRA, CosRA_T
    #[arg(long, default_value = "GR,UCF,HC,MD,CosRA,CosRA_T", value_parser = parse_methods)]
    methods: Methods,
    /// List lengths: a single value, a comma list, or a range a:b[:step]
    #[arg(long = "L", default_value = "10", value_parser = parse_lengths)]
    lengths: Lengths,
    /// Trust exponent used by CosRA_T
    #[arg(long, default_value_t = DEFAULT_THETA)]
    theta: f64,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Debug, Args)]
struct SweepThetaArgs {
    #[command(flatten)]
    split: SplitArgs,
    /// Theta grid start:end:step
    #[arg(long, default_value = "0:1:0.05", value_parser = parse_grid)]
    grid: Grid,
    /// List lengths: a single value, a comma list, or a range a:b[:step]
    #[arg(long = "L", default_value = "10", value_parser = parse_lengths)]
    lengths: Lengths,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Debug, Args)]
struct SweepLengthArgs {
    #[command(flatten)]
    split: SplitArgs,
    /// Comma-separated methods: GR, UCF, HC, MD, CosRA, CosRA_T
    #[arg(long, default_value = "GR,UCF,HC,MD,CosRA,CosRA_T", value_parser = parse_methods)]
    methods: Methods,
    /// List lengths: a range a:b[:step] or a comma list
    #[arg(long = "L", default_value = "1:100", value_parser = parse_lengths)]
    lengths: Lengths,
    /// Trust exponent used by CosRA_T
    #[arg(long, default_value_t = DEFAULT_THETA)]
    theta: f64,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Debug, Args)]
struct DegreeDistArgs {
    /// Canonical dataset file
    #[arg(long)]
    dataset: PathBuf,
    /// Comma-separated methods: GR, UCF, HC, MD, CosRA, CosRA_T
    #[arg(long, alias = "method", default_value = "GR,UCF,HC,MD,CosRA,CosRA_T", value_parser = parse_methods)]
    methods: Methods,
    /// List length
    #[arg(long = "L", default_value_t = DEFAULT_LIST_LENGTH)]
    len: usize,
    /// Trust exponent used by CosRA_T
    #[arg(long, default_value_t = DEFAULT_THETA)]
    theta: f64,
    /// Number of folds; the histogram uses fold 0
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    folds: usize,
    /// Random seed of the split
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// CSV output path (default: standard output)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
struct Methods(Vec<Method>);

#[derive(Debug, Clone)]
struct Lengths(Vec<usize>);

#[derive(Debug, Clone)]
struct Grid(Vec<f64>);

fn parse_methods(s: &str) -> Result<Methods, String> {
    let methods = s
        .split(',')
        .map(|m| m.trim().parse::<Method>().map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    let mut seen = Vec::new();
    for m in methods {
        if !seen.contains(&m) {
            seen.push(m);
        }
    }
    Ok(Methods(seen))
}

fn parse_count(s: &str) -> Result<usize, String> {
    match s.trim().parse::<usize>() {
        Ok(0) | Err(_) => Err(format!("'{s}' is not a positive integer")),
        Ok(v) => Ok(v),
    }
}

fn parse_lengths(s: &str) -> Result<Lengths, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let mut lengths = match parts.as_slice() {
        [single] => single.split(',').map(parse_count).collect::<Result<Vec<_>, _>>()?,
        [a, b] | [a, b, _] => {
            let (a, b) = (parse_count(a)?, parse_count(b)?);
            let step = parts.get(2).map(|p| parse_count(p)).transpose()?.unwrap_or(1);
            if b < a {
                return Err(format!("empty range {s}"));
            }
            (a..=b).step_by(step).collect()
        }
        _ => return Err(format!("expected N, N,M,... or a:b[:step], got '{s}'")),
    };
    lengths.sort_unstable();
    lengths.dedup();
    Ok(Lengths(lengths))
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("'{p}' is not a number")))
        .collect::<Result<_, _>>()?;
    let [start, end, step] = parts[..] else {
        return Err(format!("expected start:end:step, got '{s}'"));
    };
    let grid = theta_grid(start, end, step).map_err(|e| e.to_string())?;
    if grid.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(format!("grid {s} leaves [0, 1]"));
    }
    Ok(Grid(grid))
}

/// Usage errors exit with 1, data errors with 2.
enum Failure {
    Usage(String),
    Data(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Data(e.into())
    }
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn method_configs(methods: &[Method], theta: f64) -> Result<Vec<MethodConfig>, Failure> {
    methods
        .iter()
        .map(|&m| if m == Method::CosRaT { MethodConfig::cosra_t(theta) } else { Ok(MethodConfig::plain(m)) })
        .collect::<Result<_, _>>()
        .map_err(usage)
}

fn experiment_config(split: &SplitArgs, methods: Vec<MethodConfig>, lengths: Vec<usize>) -> Result<ExperimentConfig, Failure> {
    let cfg = ExperimentConfig {
        methods,
        list_lengths: lengths,
        folds: split.folds,
        realizations: split.realizations,
        seed: split.seed,
        ..Default::default()
    };
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

fn load(path: &Path) -> Result<(Dataset, String), Failure> {
    let (d, _) = read_canonical_file(path).with_context(|| format!("reading {}", path.display()))?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let s = d.stats();
    eprintln!(
        "loaded {}: {} users, {} objects, {} rating links, {} trust links",
        path.display(),
        s.users,
        s.objects,
        s.rating_links,
        s.trust_links
    );
    Ok((d, name))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_report(report: &MetricsReport, args: &ReportArgs) -> Result<(), Failure> {
    let mut out = output(args.out.as_deref())?;
    report.write_csv(&mut out)?;
    out.flush()?;
    if let Some(p) = &args.json {
        let file = File::create(p).with_context(|| format!("creating {}", p.display()))?;
        let mut w = BufWriter::new(file);
        report.write_json(&mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn fmt_value(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

/// Method-by-metric table for one list length, on standard error.
fn print_summary(report: &MetricsReport, len: usize) {
    let metrics = trustrec_core::Metric::ALL;
    let mut header = format!("{:<14}", "method");
    for m in metrics {
        header.push_str(&format!("{:>10}", m.name()));
    }
    eprintln!("summary at L = {len}\n{header}");
    let mut seen: Vec<(Method, Option<f64>)> = Vec::new();
    for row in &report.rows {
        if !seen.contains(&(row.method, row.theta)) {
            seen.push((row.method, row.theta));
        }
    }
    for (method, theta) in seen {
        let label = match theta {
            Some(t) => format!("{method}({t})"),
            None => method.to_string(),
        };
        let mut line = format!("{label:<14}");
        for metric in metrics {
            let l = metric.depends_on_length().then_some(len);
            let v = report
                .rows
                .iter()
                .find(|r| r.method == method && r.theta == theta && r.metric == metric && r.list_len == l)
                .and_then(|r| r.mean);
            line.push_str(&format!("{:>10}", fmt_value(v)));
        }
        eprintln!("{line}");
    }
}

fn print_theta_summary(summary: &ThetaSummary) {
    for o in &summary.optima {
        let len = o.list_len.map_or_else(String::new, |l| format!(" at L = {l}"));
        eprintln!("best theta for {}{len}: {} ({:.4})", o.metric, o.theta, o.value);
    }
    eprintln!("mean optimal theta over accuracy metrics: {:.3}", summary.overall);
}

fn cmd_ingest(a: IngestArgs) -> Result<(), Failure> {
    if !(1..=5).contains(&a.threshold) {
        return Err(usage(format!("threshold must be between 1 and 5, got {}", a.threshold)));
    }
    let (d, report) = load_raw(&a.ratings, &a.trust, a.threshold)
        .with_context(|| format!("loading {} and {}", a.ratings.display(), a.trust.display()))?;
    if d.rating_graph.links() == 0 {
        return Err(Failure::Data(anyhow::anyhow!("no links after thresholding")));
    }
    write_canonical_file(&d, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    let s = d.stats();
    eprintln!("users (m)             {}", s.users);
    eprintln!("objects (n)           {}", s.objects);
    eprintln!("rating links          {}", s.rating_links);
    eprintln!("trust links           {}", s.trust_links);
    eprintln!("rating sparsity       {:.3e}", s.rating_sparsity);
    eprintln!("trust sparsity        {:.3e}", s.trust_sparsity);
    eprintln!("duplicate ratings     {}", report.duplicate_links);
    eprintln!("trust edges dropped   {} (endpoint without kept ratings)", report.dropped_trust);
    eprintln!("trust self-loops      {}", report.self_loops);
    eprintln!("duplicate trust       {}", report.duplicate_trust);
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<(), Failure> {
    let cfg = experiment_config(&a.split, method_configs(&a.methods.0, a.theta)?, a.lengths.0)?;
    let (d, name) = load(&a.split.dataset)?;
    let report = run_experiment(&d, &name, &cfg)?;
    write_report(&report, &a.report)?;
    for &len in &cfg.list_lengths {
        print_summary(&report, len);
    }
    Ok(())
}

fn cmd_sweep_theta(a: SweepThetaArgs) -> Result<(), Failure> {
    let mut cfg = experiment_config(&a.split, vec![MethodConfig::cosra_t(DEFAULT_THETA).map_err(usage)?], a.lengths.0)?;
    cfg.theta_values = a.grid.0;
    let (d, name) = load(&a.split.dataset)?;
    let (report, summary) = sweep_theta(&d, &name, &cfg)?;
    write_report(&report, &a.report)?;
    print_theta_summary(&summary);
    Ok(())
}

fn cmd_sweep_length(a: SweepLengthArgs) -> Result<(), Failure> {
    let cfg = experiment_config(&a.split, method_configs(&a.methods.0, a.theta)?, a.lengths.0)?;
    let (d, name) = load(&a.split.dataset)?;
    let report = sweep_length(&d, &name, &cfg)?;
    write_report(&report, &a.report)?;
    Ok(())
}

fn cmd_degree_dist(a: DegreeDistArgs) -> Result<(), Failure> {
    if a.len == 0 {
        return Err(usage("list length must be positive"));
    }
    if a.folds < 2 {
        return Err(usage(format!("need at least 2 folds, got {}", a.folds)));
    }
    let methods = method_configs(&a.methods.0, a.theta)?;
    let (d, _) = load(&a.dataset)?;
    let mut out = output(a.out.as_deref())?;
    writeln!(out, "method,L,degree,count")?;
    for m in methods {
        for (degree, count) in recommended_degree_distribution(&d, m, a.len, a.folds, a.seed)? {
            writeln!(out, "{},{},{degree},{count}", m.method, a.len)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(usage("--workers must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker pool")?;
    }
    match cli.command {
        Command::Ingest(a) => cmd_ingest(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::SweepTheta(a) => cmd_sweep_theta(a),
        Command::SweepLength(a) => cmd_sweep_length(a),
        Command::DegreeDist(a) => cmd_degree_dist(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
