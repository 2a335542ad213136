use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{debug, error, info};

use taxicab_core::invariants::check_decomposition;
use taxicab_core::pipeline::{analyze, compare, Analysis, AnalysisOptions};
use taxicab_core::qsr::Recommendation;
use taxicab_core::report_io::{read_table_csv, write_report, AnalysisReport, CsvOptions, ReportFormat};
use taxicab_core::scores::{map_coordinates, ScoresError};
use taxicab_core::svgmap::{render_map, MapStyle};
use taxicab_core::{ContingencyTable, Error, ErrorKind, Method, SearchConfig, SearchStrategy};

/// Environment variable holding the log filter (`error`, `info`, `debug`, ...).
const LOG_ENV: &str = "TAXICAB_LOG";
/// Enumerated side up to which the default search is exhaustive.
const AUTO_EXHAUSTIVE_CAP: usize = 21;

#[derive(Parser, Debug)]
#[command(name = "taxicab", version, about = "Taxicab correspondence and log-ratio analysis of contingency tables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decompose a table and report dispersions, QSR and scores.
    Analyze(AnalyzeArgs),
    /// Draw a symmetric map of two axes as SVG.
    Map(MapArgs),
}

#[derive(Args, Debug)]
struct InputArgs {
    /// CSV file with column labels in the first row and row labels in the first column.
    #[arg(long)]
    input: PathBuf,
    /// Field delimiter.
    #[arg(long, default_value_t = ',')]
    delimiter: char,
    /// The first row holds data, not column labels.
    #[arg(long)]
    no_header: bool,
    /// The first column holds data, not row labels.
    #[arg(long)]
    no_row_labels: bool,
}

#[derive(Args, Debug)]
struct SearchArgs {
    /// Sign-vector search. Defaults to exhaustive when the smaller side is at
    /// most the exhaustive cap, criss-cross otherwise.
    #[arg(long, value_enum)]
    search: Option<SearchArg>,
    #[arg(long, default_value_t = AUTO_EXHAUSTIVE_CAP)]
    exhaustive_cap: usize,
    /// Add 1 to every count before log-ratio centering.
    #[arg(long)]
    add_one: bool,
    /// Seed for the genetic search.
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::Both)]
    method: MethodArg,
    /// Number of axes to extract.
    #[arg(long, default_value_t = 2)]
    axes: usize,
    #[command(flatten)]
    search: SearchArgs,
    /// Output directory for reports.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
}

#[derive(Args, Debug)]
struct MapArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value_t = SingleMethod::Tca)]
    method: SingleMethod,
    /// Axes on the horizontal and vertical directions, 1-based.
    #[arg(long, default_value = "1,2", value_parser = parse_pair)]
    axes_pair: (usize, usize),
    #[command(flatten)]
    search: SearchArgs,
    /// Output SVG file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    title: Option<String>,
    #[arg(long, default_value_t = 800)]
    width: u32,
    #[arg(long, default_value_t = 600)]
    height: u32,
    #[arg(long, default_value = "#1f77b4")]
    row_color: String,
    #[arg(long, default_value = "#d62728")]
    col_color: String,
    #[arg(long, default_value_t = 4.0)]
    point_size: f64,
    #[arg(long, default_value_t = 12.0)]
    font_size: f64,
    /// Omit point labels.
    #[arg(long)]
    no_labels: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum MethodArg {
    Tca,
    Tlra,
    Both,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SingleMethod {
    Tca,
    Tlra,
}

impl From<SingleMethod> for Method {
    fn from(m: SingleMethod) -> Method {
        match m {
            SingleMethod::Tca => Method::Tca,
            SingleMethod::Tlra => Method::Tlra,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SearchArg {
    Exhaustive,
    Crisscross,
    Genetic,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum FormatArg {
    Json,
    Csv,
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected two comma-separated axes, got {s:?}"))?;
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
    Ok((parse(a)?, parse(b)?))
}

/// Failures carry the exit status they map to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.kind() {
            ErrorKind::Usage => 1,
            ErrorKind::Data => 2,
            ErrorKind::Internal => 3,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

fn load_table(args: &InputArgs) -> Result<ContingencyTable, Failure> {
    if !args.delimiter.is_ascii() {
        return Err(usage("delimiter must be a single ASCII character"));
    }
    let options = CsvOptions {
        has_header: !args.no_header,
        has_row_labels: !args.no_row_labels,
        delimiter: args.delimiter as u8,
    };
    let table = read_table_csv(&args.input, &options).map_err(Error::from)?;
    info!("read {}x{} table from {}", table.nrows(), table.ncols(), args.input.display());
    Ok(table)
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "table".into())
}

fn search_config(args: &SearchArgs, table: &ContingencyTable, max_axes: usize) -> SearchConfig {
    let smaller = table.nrows().min(table.ncols());
    let strategy = match args.search {
        Some(SearchArg::Exhaustive) => SearchStrategy::Exhaustive,
        Some(SearchArg::Crisscross) => SearchStrategy::CrissCross,
        Some(SearchArg::Genetic) => SearchStrategy::Genetic,
        None if smaller <= args.exhaustive_cap => SearchStrategy::Exhaustive,
        None => SearchStrategy::CrissCross,
    };
    debug!("search {} (smaller side {smaller}, cap {})", strategy.name(), args.exhaustive_cap);
    let mut cfg = SearchConfig::with_strategy(strategy);
    cfg.max_axes = max_axes;
    cfg.exhaustive_cap = args.exhaustive_cap;
    cfg.genetic.rng_seed = args.seed;
    cfg
}

fn verify(analysis: &Analysis) -> Result<(), Failure> {
    let report = check_decomposition(&analysis.decomposition);
    if report.is_ok() {
        debug!("{}: {} invariant checks passed", analysis.method.name(), report.checks_run);
        return Ok(());
    }
    for v in &report.violations {
        error!("{}: {v}", analysis.method.name());
    }
    Err(Failure {
        code: 3,
        message: format!(
            "{} decomposition failed {} of {} invariant checks",
            analysis.method.name(),
            report.violations.len(),
            report.checks_run
        ),
    })
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

fn print_tables(analysis: &Analysis, out: &mut String) {
    let dec = &analysis.decomposition;
    let _ = writeln!(out, "== {} ({} search) ==", analysis.method.name(), dec.search.name());
    let _ = writeln!(out, "dispersion");
    let _ = writeln!(out, "{:>6} {:>14}", "axis", "delta");
    for axis in &dec.axes {
        let _ = writeln!(out, "{:>6} {:>14.6}", axis.axis_index, axis.delta);
    }
    let _ = writeln!(out, "QSR (%)");
    let _ = writeln!(out, "{:>6} {:>8} {:>8} {:>8} {:>8} {:>8}", "axis", "S*T", "S'*T'", "S'*T", "S*T'", "all");
    for rec in &analysis.qsr {
        let [st, sbtb, sbt, stb, all] = rec.layout();
        let _ = writeln!(
            out,
            "{:>6} {:>8} {:>8} {:>8} {:>8} {:>8}",
            rec.axis_index,
            pct(st),
            pct(sbtb),
            pct(sbt),
            pct(stb),
            pct(all)
        );
    }
    if !dec.unconverged_axes.is_empty() {
        let _ = writeln!(out, "warning: search did not converge on axes {:?}", dec.unconverged_axes);
    }
}

fn print_recommendation(cmp_tca: &Analysis, cmp_tlra: &Analysis, rec: &Recommendation, out: &mut String) {
    let _ = writeln!(out, "== recommendation ==");
    let _ = writeln!(out, "{:>6} {:>8} {:>8}", "axis", "TCA", "TLRA");
    for (a, b) in cmp_tca.qsr.iter().zip(&cmp_tlra.qsr).take(rec.axes_considered) {
        let _ = writeln!(out, "{:>6} {:>8} {:>8}", a.axis_index, pct(a.overall), pct(b.overall));
    }
    let _ = writeln!(
        out,
        "{} (mean QSR margin TLRA - TCA: {:+.2} pp over {} axes)",
        rec.verdict, rec.margin_pp, rec.axes_considered
    );
    let _ = writeln!(out, "note: TCA and TLRA dispersions are on different scales and are not compared");
}

fn write_one(
    args: &AnalyzeArgs,
    dataset: &str,
    analysis: &Analysis,
    recommendation: Option<&Recommendation>,
) -> Result<PathBuf, Failure> {
    let pseudocount = args.search.add_one.then_some(1.0);
    let seed = (analysis.decomposition.search == SearchStrategy::Genetic).then_some(args.search.seed);
    let mut report = AnalysisReport::from_analysis(dataset, analysis, pseudocount, seed);
    report.recommendation = recommendation.cloned();
    let stem = format!("{dataset}-{}", analysis.method.name().to_lowercase());
    let (format, path) = match args.format {
        FormatArg::Json => (ReportFormat::Json, args.out.join(format!("{stem}.json"))),
        FormatArg::Csv => (ReportFormat::Csv, args.out.join(stem)),
    };
    write_report(&report, format, &path).map_err(Error::from)?;
    info!("wrote {}", path.display());
    Ok(path)
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<String, Failure> {
    if args.axes == 0 {
        return Err(usage("--axes must be at least 1"));
    }
    let table = load_table(&args.input)?;
    let dataset = dataset_name(&args.input.input);
    let cfg = search_config(&args.search, &table, args.axes);
    cfg.validate().map_err(Error::from)?;
    let pseudocount = args.search.add_one.then_some(1.0);
    fs::create_dir_all(&args.out).map_err(|e| Failure {
        code: 2,
        message: format!("{}: {e}", args.out.display()),
    })?;

    let mut out = String::new();
    let _ = writeln!(out, "dataset {dataset}: {} rows x {} columns", table.nrows(), table.ncols());
    let mut written = Vec::new();
    match args.method {
        MethodArg::Both => {
            let cmp = compare(&table, &cfg, pseudocount, args.axes, Some(dataset.clone()))?;
            verify(&cmp.tca)?;
            verify(&cmp.tlra)?;
            print_tables(&cmp.tca, &mut out);
            print_tables(&cmp.tlra, &mut out);
            print_recommendation(&cmp.tca, &cmp.tlra, &cmp.recommendation, &mut out);
            written.push(write_one(args, &dataset, &cmp.tca, Some(&cmp.recommendation))?);
            written.push(write_one(args, &dataset, &cmp.tlra, Some(&cmp.recommendation))?);
        }
        MethodArg::Tca | MethodArg::Tlra => {
            let method = if args.method == MethodArg::Tca { Method::Tca } else { Method::Tlra };
            let options = AnalysisOptions {
                method,
                search: cfg,
                pseudocount,
                dataset: Some(dataset.clone()),
            };
            let analysis = analyze(&table, &options)?;
            verify(&analysis)?;
            print_tables(&analysis, &mut out);
            written.push(write_one(args, &dataset, &analysis, None)?);
        }
    }
    for path in written {
        let _ = writeln!(out, "wrote {}", path.display());
    }
    Ok(out)
}

fn cmd_map(args: &MapArgs) -> Result<String, Failure> {
    let table = load_table(&args.input)?;
    let dataset = dataset_name(&args.input.input);
    let (alpha, beta) = args.axes_pair;
    let available = table.nrows().min(table.ncols()).saturating_sub(1);
    if alpha == beta || alpha == 0 || beta == 0 || alpha.max(beta) > available {
        return Err(Error::from(ScoresError::AxisOutOfRange(alpha, beta, available)).into());
    }
    let style = MapStyle {
        width: args.width,
        height: args.height,
        row_color: args.row_color.clone(),
        col_color: args.col_color.clone(),
        row_labels: !args.no_labels,
        col_labels: !args.no_labels,
        point_size: args.point_size,
        font_size: args.font_size,
        ..MapStyle::default()
    };
    style.validate().map_err(Error::from)?;

    let method = Method::from(args.method);
    let cfg = search_config(&args.search, &table, alpha.max(beta));
    cfg.validate().map_err(Error::from)?;
    let options = AnalysisOptions {
        method,
        search: cfg,
        pseudocount: args.search.add_one.then_some(1.0),
        dataset: Some(dataset.clone()),
    };
    let analysis = analyze(&table, &options)?;
    verify(&analysis)?;
    let coords = map_coordinates(&analysis.scores, (alpha, beta)).map_err(Error::from)?;
    let title = args
        .title
        .clone()
        .unwrap_or_else(|| format!("{dataset}: {} map", method.name()));
    let svg = render_map(&coords, &style, &title).map_err(Error::from)?;
    fs::write(&args.out, svg).map_err(|e| Failure {
        code: 2,
        message: format!("{}: {e}", args.out.display()),
    })?;
    Ok(format!("wrote {}\n", args.out.display()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Analyze(args) => cmd_analyze(args),
        Command::Map(args) => cmd_map(args),
    };
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
