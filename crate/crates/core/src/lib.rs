//! Taxicab correspondence analysis (TCA) and taxicab log-ratio analysis
//! (TLRA) of contingency tables and compositional data.
//!
//! A table is double-centered either multiplicatively
//! ([`centering::center_tca`]) or log bi-additively
//! ([`centering::center_tlra`]), decomposed with the taxicab SVD
//! ([`tsvd::decompose`]), and each axis is scored by the quality of the
//! signs of its residuals ([`qsr`]). Comparing the QSR of the two
//! centerings on the leading axes suggests which one suits the data.
//!
//! ```
//! use taxicab_core::{datasets, pipeline, Method, SearchConfig};
//!
//! let table = datasets::demo_ca();
//! let cmp = pipeline::compare(&table, &SearchConfig::default(), None, 2, None).unwrap();
//! assert_eq!(cmp.recommendation.verdict, taxicab_core::qsr::Verdict::PreferTLRA);
//! assert!((cmp.tca.qsr[0].overall - 0.8143).abs() < 1e-4);
//! # let _ = Method::Tca;
//! ```

pub mod centering;
pub mod datasets;
pub mod error;
pub mod invariants;
pub mod model;
pub mod pipeline;
pub mod qsr;
pub mod report_io;
pub mod scores;
pub mod svgmap;
pub mod tsvd;

pub use error::{Error, ErrorKind, Result};
pub use model::{
    correspondence, AxisResult, ContingencyTable, CorrespondenceMatrix, Decomposition, Method,
    QsrRecord, ResidualMatrix, ResidualOrigin, SearchStrategy, SignVector,
};
pub use tsvd::SearchConfig;

/// Version string recorded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
