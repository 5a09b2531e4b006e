use thiserror::Error;

use crate::fluctuations::FluctuationError;
use crate::model::ModelError;
use crate::oracle::OracleError;
use crate::spectra::SpectraError;
use crate::steady_state::SolveError;

/// Any failure along the scan pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Fluctuation(#[from] FluctuationError),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("grid point {index}: {source}")]
    AtGridPoint {
        index: usize,
        #[source]
        source: alloc::boxed::Box<Error>,
    },
}

impl Error {
    pub fn at(index: usize, source: impl Into<Error>) -> Self {
        Error::AtGridPoint { index, source: alloc::boxed::Box::new(source.into()) }
    }
}
