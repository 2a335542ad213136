//! Table → centering → decomposition → QSR → scores, for one method.

use crate::centering::{add_pseudocount, center_tca, center_tlra_counts};
use crate::error::Result;
use crate::model::{correspondence, ContingencyTable, CorrespondenceMatrix, Decomposition, Method, QsrRecord};
use crate::qsr::{qsr_report, recommend_method, Recommendation};
use crate::scores::{principal_scores, PrincipalScores};
use crate::tsvd::{decompose, SearchConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    pub method: Method,
    pub search: SearchConfig,
    /// Constant added to every cell before log-ratio centering. Never applied
    /// to TCA.
    pub pseudocount: Option<f64>,
    pub dataset: Option<String>,
}

impl AnalysisOptions {
    pub fn new(method: Method, search: SearchConfig) -> Self {
        AnalysisOptions {
            method,
            search,
            pseudocount: None,
            dataset: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub method: Method,
    /// The table that was centered (after any pseudocount).
    pub table: ContingencyTable,
    pub correspondence: CorrespondenceMatrix,
    pub decomposition: Decomposition,
    pub qsr: Vec<QsrRecord>,
    pub scores: PrincipalScores,
}

pub fn analyze(table: &ContingencyTable, options: &AnalysisOptions) -> Result<Analysis> {
    let table = match (options.method, options.pseudocount) {
        (Method::Tlra, Some(c)) => add_pseudocount(table, c)?,
        _ => table.clone(),
    };
    let p = correspondence(&table);
    let centered = match options.method {
        Method::Tca => center_tca(&p),
        Method::Tlra => center_tlra_counts(&table)?,
    };
    let mut decomposition = decompose(&centered, &options.search)?;
    decomposition.table_ref = options.dataset.clone();
    let qsr = qsr_report(&decomposition);
    let scores = principal_scores(&decomposition, &p)?;
    Ok(Analysis {
        method: options.method,
        table,
        correspondence: p,
        decomposition,
        qsr,
        scores,
    })
}

/// Both centerings on the same table plus the QSR-based verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub tca: Analysis,
    pub tlra: Analysis,
    pub recommendation: Recommendation,
}

pub fn compare(
    table: &ContingencyTable,
    search: &SearchConfig,
    pseudocount: Option<f64>,
    axes_considered: usize,
    dataset: Option<String>,
) -> Result<Comparison> {
    let options = |method| AnalysisOptions {
        method,
        search: search.clone(),
        pseudocount,
        dataset: dataset.clone(),
    };
    let tca = analyze(table, &options(Method::Tca))?;
    let tlra = analyze(table, &options(Method::Tlra))?;
    let axes = axes_considered.min(tca.qsr.len()).min(tlra.qsr.len()).max(1);
    let recommendation = recommend_method(&tca.qsr, &tlra.qsr, axes)?;
    Ok(Comparison {
        tca,
        tlra,
        recommendation,
    })
}
