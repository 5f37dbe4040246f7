use thiserror::Error;

use crate::coboundary::CoboundaryError;
use crate::lab::LabError;
use crate::measures::MeasureError;
use crate::path_space::PathError;
use crate::spectral::SpectralError;
use crate::substitution::{ParseError, SubstitutionError};

/// Any error raised by the crate, for callers that do not care which layer failed.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Substitution(#[from] SubstitutionError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Coboundary(#[from] CoboundaryError),
    #[error(transparent)]
    Lab(#[from] LabError),
}
