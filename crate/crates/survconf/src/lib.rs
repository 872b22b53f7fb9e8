//! CSV ingestion, model files, the `survconf` command-line tool and the HTTP
//! service, on top of [`survconf_core`].

pub mod cli;
pub mod error;
pub mod io;
pub mod model;
pub mod service;
pub mod study;

pub use error::{AppError, AppResult, ErrorBody};
pub use io::{ingest_covariates, ingest_csv, IngestError};
pub use model::{FitSettings, ModelRecord};
pub use survconf_core as core;
