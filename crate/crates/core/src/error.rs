use thiserror::Error;

use crate::centering::CenteringError;
use crate::model::ModelError;
use crate::qsr::QsrError;
use crate::report_io::ReportIoError;
use crate::scores::ScoresError;
use crate::svgmap::SvgError;
use crate::tsvd::TsvdError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Centering(#[from] CenteringError),
    #[error(transparent)]
    Tsvd(#[from] TsvdError),
    #[error(transparent)]
    Qsr(#[from] QsrError),
    #[error(transparent)]
    Scores(#[from] ScoresError),
    #[error(transparent)]
    Svg(#[from] SvgError),
    #[error(transparent)]
    Io(#[from] ReportIoError),
}

/// Coarse classification used to pick a process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Internal,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Model(_) | Error::Centering(_) => ErrorKind::Data,
            Error::Io(e) => match e {
                ReportIoError::Io { .. }
                | ReportIoError::Parse { .. }
                | ReportIoError::NonNumericCell { .. }
                | ReportIoError::RaggedRows { .. }
                | ReportIoError::Empty
                | ReportIoError::Table(_) => ErrorKind::Data,
                ReportIoError::Json(_) | ReportIoError::Manifest(_) => ErrorKind::Data,
            },
            Error::Tsvd(TsvdError::DimensionTooLarge { .. } | TsvdError::InvalidConfig(_)) => {
                ErrorKind::Usage
            }
            Error::Scores(ScoresError::AxisOutOfRange(..)) => ErrorKind::Usage,
            Error::Svg(SvgError::InvalidStyle(_)) => ErrorKind::Usage,
            Error::Tsvd(_) | Error::Qsr(_) | Error::Scores(_) | Error::Svg(_) => ErrorKind::Internal,
        }
    }
}
