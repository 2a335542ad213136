//! CSV ingestion of tables and JSON/CSV emission of analysis reports.

use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{synthetic_labels, ContingencyTable, Method, ModelError, QsrRecord, Quadrant, SearchStrategy};
use crate::pipeline::Analysis;
use crate::qsr::{Recommendation, Verdict};

#[derive(Debug, Error)]
pub enum ReportIoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("CSV parse error at line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRows { line: u64, expected: usize, found: usize },
    #[error("line {line}, column {col}: {value:?} is not a number")]
    NonNumericCell { line: u64, col: usize, value: String },
    #[error("input contains no data rows")]
    Empty,
    #[error(transparent)]
    Table(#[from] ModelError),
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed report manifest: {0}")]
    Manifest(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ReportIoError + '_ {
    move |source| ReportIoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvOptions {
    /// First row holds column labels.
    pub has_header: bool,
    /// First column holds row labels.
    pub has_row_labels: bool,
    pub delimiter: u8,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            has_header: true,
            has_row_labels: true,
            delimiter: b',',
        }
    }
}

pub fn read_table_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<ContingencyTable, ReportIoError> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(io_err(path))?;
    read_table(file, options)
}

/// Parses a table from any reader. Missing labels are synthesized as
/// `R1..RI` / `C1..CJ`.
pub fn read_table<R: Read>(reader: R, options: &CsvOptions) -> Result<ContingencyTable, ReportIoError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(options.delimiter)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut header: Option<Vec<String>> = None;
    let mut row_labels = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for result in rdr.records() {
        let record = result.map_err(|e| ReportIoError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        if options.has_header && header.is_none() {
            header = Some(record.iter().map(str::to_string).collect());
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(ReportIoError::RaggedRows {
                line,
                expected,
                found: record.len(),
            });
        }
        let mut fields = record.iter();
        if options.has_row_labels {
            row_labels.push(fields.next().unwrap_or_default().to_string());
        }
        let offset = usize::from(options.has_row_labels);
        let values = fields
            .enumerate()
            .map(|(k, cell)| {
                cell.parse::<f64>().map_err(|_| ReportIoError::NonNumericCell {
                    line,
                    col: k + offset + 1,
                    value: cell.to_string(),
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(ReportIoError::Empty);
    }
    let n_rows = rows.len();
    let n_cols = rows[0].len();
    let col_labels = match header {
        Some(mut h) => {
            // Accept both "corner,c1,..,cJ" and "c1,..,cJ" above labeled rows.
            if options.has_row_labels && h.len() == n_cols + 1 {
                h.remove(0);
            }
            if h.len() != n_cols {
                return Err(ReportIoError::RaggedRows {
                    line: 1,
                    expected: n_cols + usize::from(options.has_row_labels),
                    found: h.len(),
                });
            }
            h
        }
        None => synthetic_labels('C', n_cols),
    };
    let row_labels = if options.has_row_labels {
        row_labels
    } else {
        synthetic_labels('R', n_rows)
    };
    let values = DMatrix::from_fn(n_rows, n_cols, |i, j| rows[i][j]);
    Ok(ContingencyTable::new(values, row_labels, col_labels)?)
}

/// Writes a labeled table in the layout [`read_table`] expects.
pub fn write_table_csv(table: &ContingencyTable, path: impl AsRef<Path>) -> Result<(), ReportIoError> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_to_io(e, path))?;
    let mut header = vec![String::new()];
    header.extend(table.col_labels().iter().cloned());
    w.write_record(&header).map_err(|e| csv_to_io(e, path))?;
    for (label, row) in table.row_labels().iter().zip(table.rows()) {
        let mut rec = vec![label.clone()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec).map_err(|e| csv_to_io(e, path))?;
    }
    w.flush().map_err(io_err(path))
}

fn csv_to_io(e: csv::Error, path: &Path) -> ReportIoError {
    ReportIoError::Io {
        path: path.to_path_buf(),
        source: io::Error::other(e.to_string()),
    }
}

/// Per-axis QSR values as they appear in a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QsrSummary {
    pub q_st: f64,
    pub q_sbar_tbar: f64,
    pub q_s_tbar: f64,
    pub q_sbar_t: f64,
    pub overall: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub empty_quadrants: Vec<Quadrant>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisReport {
    pub axis: usize,
    pub delta: f64,
    pub qsr: QsrSummary,
    /// Row principal scores on this axis, in row-label order.
    pub row_scores: Vec<f64>,
    pub col_scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub dataset: String,
    pub method: Method,
    pub search: SearchStrategy,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub axes: Vec<AxisReport>,
    pub recommendation: Option<Recommendation>,
    pub pseudocount: Option<f64>,
    pub software_version: String,
    pub rng_seed: Option<u64>,
}

impl AnalysisReport {
    pub fn from_analysis(dataset: &str, analysis: &Analysis, pseudocount: Option<f64>, rng_seed: Option<u64>) -> Self {
        let scores = &analysis.scores;
        let axes = analysis
            .qsr
            .iter()
            .enumerate()
            .map(|(k, q)| AxisReport {
                axis: q.axis_index,
                delta: q.delta,
                qsr: QsrSummary {
                    q_st: q.q_st,
                    q_sbar_tbar: q.q_sbar_tbar,
                    q_s_tbar: q.q_s_tbar,
                    q_sbar_t: q.q_sbar_t,
                    overall: q.overall,
                    empty_quadrants: q.empty_quadrants.clone(),
                },
                row_scores: scores.f.column(k).iter().copied().collect(),
                col_scores: scores.g.column(k).iter().copied().collect(),
            })
            .collect();
        AnalysisReport {
            dataset: dataset.to_string(),
            method: analysis.method,
            search: analysis.decomposition.search,
            row_labels: scores.row_labels.clone(),
            col_labels: scores.col_labels.clone(),
            axes,
            recommendation: None,
            pseudocount: match analysis.method {
                Method::Tlra => pseudocount,
                Method::Tca => None,
            },
            software_version: crate::VERSION.to_string(),
            rng_seed,
        }
    }

    pub fn deltas(&self) -> Vec<f64> {
        self.axes.iter().map(|a| a.delta).collect()
    }

    pub fn qsr_records(&self) -> Vec<QsrRecord> {
        self.axes
            .iter()
            .map(|a| QsrRecord {
                axis_index: a.axis,
                q_st: a.qsr.q_st,
                q_sbar_tbar: a.qsr.q_sbar_tbar,
                q_s_tbar: a.qsr.q_s_tbar,
                q_sbar_t: a.qsr.q_sbar_t,
                overall: a.qsr.overall,
                delta: a.delta,
                empty_quadrants: a.qsr.empty_quadrants.clone(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

/// JSON writes a single file at `path`; CSV writes a directory at `path`
/// holding `manifest.csv`, `deltas.csv`, `qsr.csv`, `row_scores.csv` and
/// `col_scores.csv`.
pub fn write_report(report: &AnalysisReport, format: ReportFormat, path: impl AsRef<Path>) -> Result<(), ReportIoError> {
    let path = path.as_ref();
    match format {
        ReportFormat::Json => {
            let mut text = serde_json::to_string_pretty(report)?;
            text.push('\n');
            fs::write(path, text).map_err(io_err(path))
        }
        ReportFormat::Csv => write_report_csv(report, path),
    }
}

pub fn read_report(path: impl AsRef<Path>, format: ReportFormat) -> Result<AnalysisReport, ReportIoError> {
    let path = path.as_ref();
    match format {
        ReportFormat::Json => {
            let text = fs::read_to_string(path).map_err(io_err(path))?;
            Ok(serde_json::from_str(&text)?)
        }
        ReportFormat::Csv => read_report_csv(path),
    }
}

const MANIFEST_SCHEMA: &str = "taxicab-report-csv/1";
const CSV_FILES: [&str; 4] = ["deltas.csv", "qsr.csv", "row_scores.csv", "col_scores.csv"];

fn write_rows(path: &Path, rows: &[Vec<String>]) -> Result<(), ReportIoError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_to_io(e, path))?;
    for row in rows {
        w.write_record(row).map_err(|e| csv_to_io(e, path))?;
    }
    w.flush().map_err(io_err(path))
}

fn read_rows(path: &Path) -> Result<Vec<Vec<String>>, ReportIoError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_to_io(e, path))?;
    rdr.records()
        .map(|r| {
            r.map(|rec| rec.iter().map(str::to_string).collect())
                .map_err(|e| ReportIoError::Parse {
                    line: e.position().map_or(0, |p| p.line()),
                    message: e.to_string(),
                })
        })
        .collect()
}

fn quadrant_name(q: Quadrant) -> &'static str {
    match q {
        Quadrant::ST => "s_t",
        Quadrant::SbarTbar => "sbar_tbar",
        Quadrant::STbar => "s_tbar",
        Quadrant::SbarT => "sbar_t",
    }
}

fn parse_quadrant(s: &str) -> Result<Quadrant, ReportIoError> {
    match s {
        "s_t" => Ok(Quadrant::ST),
        "sbar_tbar" => Ok(Quadrant::SbarTbar),
        "s_tbar" => Ok(Quadrant::STbar),
        "sbar_t" => Ok(Quadrant::SbarT),
        _ => Err(ReportIoError::Manifest(format!("unknown quadrant {s:?}"))),
    }
}

fn write_report_csv(report: &AnalysisReport, dir: &Path) -> Result<(), ReportIoError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let kv = |k: &str, v: String| vec![k.to_string(), v];
    let mut manifest = vec![
        kv("key", "value".into()),
        kv("schema", MANIFEST_SCHEMA.into()),
        kv("dataset", report.dataset.clone()),
        kv("method", report.method.name().to_lowercase()),
        kv("search", report.search.name().into()),
        kv("software_version", report.software_version.clone()),
        kv("rng_seed", report.rng_seed.map(|s| s.to_string()).unwrap_or_default()),
        kv("pseudocount", report.pseudocount.map(|c| c.to_string()).unwrap_or_default()),
    ];
    if let Some(r) = &report.recommendation {
        manifest.push(kv("recommendation", r.verdict.to_string()));
        manifest.push(kv("recommendation_margin_pp", r.margin_pp.to_string()));
        manifest.push(kv("recommendation_axes", r.axes_considered.to_string()));
    }
    manifest.push(kv("files", CSV_FILES.join(";")));
    write_rows(&dir.join("manifest.csv"), &manifest)?;

    let mut deltas = vec![vec!["axis".to_string(), "delta".to_string()]];
    deltas.extend(report.axes.iter().map(|a| vec![a.axis.to_string(), a.delta.to_string()]));
    write_rows(&dir.join("deltas.csv"), &deltas)?;

    // Quadrant column order: S×T, S̄×T̄, S̄×T, S×T̄, all.
    let mut qsr = vec![["axis", "q_st", "q_sbar_tbar", "q_sbar_t", "q_s_tbar", "overall", "empty_quadrants"]
        .map(str::to_string)
        .to_vec()];
    qsr.extend(report.axes.iter().map(|a| {
        vec![
            a.axis.to_string(),
            a.qsr.q_st.to_string(),
            a.qsr.q_sbar_tbar.to_string(),
            a.qsr.q_sbar_t.to_string(),
            a.qsr.q_s_tbar.to_string(),
            a.qsr.overall.to_string(),
            a.qsr.empty_quadrants.iter().map(|q| quadrant_name(*q)).collect::<Vec<_>>().join(";"),
        ]
    }));
    write_rows(&dir.join("qsr.csv"), &qsr)?;

    for (file, labels, pick) in [
        ("row_scores.csv", &report.row_labels, true),
        ("col_scores.csv", &report.col_labels, false),
    ] {
        let mut rows = vec![std::iter::once("label".to_string())
            .chain(report.axes.iter().map(|a| format!("axis{}", a.axis)))
            .collect::<Vec<_>>()];
        for (i, label) in labels.iter().enumerate() {
            let mut row = vec![label.clone()];
            row.extend(report.axes.iter().map(|a| {
                let s = if pick { &a.row_scores } else { &a.col_scores };
                s[i].to_string()
            }));
            rows.push(row);
        }
        write_rows(&dir.join(file), &rows)?;
    }
    Ok(())
}

fn num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T, ReportIoError> {
    s.parse()
        .map_err(|_| ReportIoError::Manifest(format!("{what}: cannot parse {s:?}")))
}

fn read_report_csv(dir: &Path) -> Result<AnalysisReport, ReportIoError> {
    let manifest = read_rows(&dir.join("manifest.csv"))?;
    let get = |key: &str| -> Option<String> {
        manifest
            .iter()
            .skip(1)
            .find(|r| r.first().map(String::as_str) == Some(key))
            .map(|r| r.get(1).cloned().unwrap_or_default())
    };
    let required = |key: &str| get(key).ok_or_else(|| ReportIoError::Manifest(format!("missing key {key:?}")));
    if required("schema")? != MANIFEST_SCHEMA {
        return Err(ReportIoError::Manifest("unsupported schema".into()));
    }
    let method = match required("method")?.as_str() {
        "tca" => Method::Tca,
        "tlra" => Method::Tlra,
        m => return Err(ReportIoError::Manifest(format!("unknown method {m:?}"))),
    };
    let search = match required("search")?.as_str() {
        "exhaustive" => SearchStrategy::Exhaustive,
        "crisscross" => SearchStrategy::CrissCross,
        "genetic" => SearchStrategy::Genetic,
        s => return Err(ReportIoError::Manifest(format!("unknown search {s:?}"))),
    };
    let optional = |key: &str| get(key).filter(|v| !v.is_empty());
    let recommendation = match optional("recommendation") {
        Some(v) => Some(Recommendation {
            verdict: match v.as_str() {
                "PreferTCA" => Verdict::PreferTCA,
                "PreferTLRA" => Verdict::PreferTLRA,
                "Inconclusive" => Verdict::Inconclusive,
                _ => return Err(ReportIoError::Manifest(format!("unknown verdict {v:?}"))),
            },
            margin_pp: num(&required("recommendation_margin_pp")?, "margin")?,
            axes_considered: num(&required("recommendation_axes")?, "axes")?,
        }),
        None => None,
    };

    let deltas = read_rows(&dir.join("deltas.csv"))?;
    let qsr = read_rows(&dir.join("qsr.csv"))?;
    let row_scores = read_rows(&dir.join("row_scores.csv"))?;
    let col_scores = read_rows(&dir.join("col_scores.csv"))?;
    let n_axes = deltas.len().saturating_sub(1);
    if qsr.len() != n_axes + 1 {
        return Err(ReportIoError::Manifest("deltas.csv and qsr.csv disagree on axis count".into()));
    }
    let labels = |rows: &[Vec<String>]| rows.iter().skip(1).map(|r| r[0].clone()).collect::<Vec<_>>();
    let column = |rows: &[Vec<String>], k: usize| -> Result<Vec<f64>, ReportIoError> {
        rows.iter()
            .skip(1)
            .map(|r| num(r.get(k + 1).map_or("", String::as_str), "score"))
            .collect()
    };
    let mut axes = Vec::with_capacity(n_axes);
    for k in 0..n_axes {
        let d = &deltas[k + 1];
        let q = &qsr[k + 1];
        if q.len() < 7 || d.len() < 2 {
            return Err(ReportIoError::Manifest(format!("short row for axis {}", k + 1)));
        }
        let empty_quadrants = if q[6].is_empty() {
            Vec::new()
        } else {
            q[6].split(';').map(parse_quadrant).collect::<Result<_, _>>()?
        };
        axes.push(AxisReport {
            axis: num(&d[0], "axis")?,
            delta: num(&d[1], "delta")?,
            qsr: QsrSummary {
                q_st: num(&q[1], "q_st")?,
                q_sbar_tbar: num(&q[2], "q_sbar_tbar")?,
                q_sbar_t: num(&q[3], "q_sbar_t")?,
                q_s_tbar: num(&q[4], "q_s_tbar")?,
                overall: num(&q[5], "overall")?,
                empty_quadrants,
            },
            row_scores: column(&row_scores, k)?,
            col_scores: column(&col_scores, k)?,
        });
    }
    Ok(AnalysisReport {
        dataset: required("dataset")?,
        method,
        search,
        row_labels: labels(&row_scores),
        col_labels: labels(&col_scores),
        axes,
        recommendation,
        pseudocount: optional("pseudocount").map(|v| num(&v, "pseudocount")).transpose()?,
        software_version: required("software_version")?,
        rng_seed: optional("rng_seed").map(|v| num(&v, "rng_seed")).transpose()?,
    })
}
