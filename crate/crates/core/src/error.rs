// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid mode selection: {0}")]
    Modes(String),

    #[error("state is not physical: {0}")]
    NotPhysical(String),

    #[error("channel is not completely positive (min eigenvalue {min_eigenvalue:.3e})")]
    NotCompletelyPositive { min_eigenvalue: f64 },

    #[error("invalid value for `{field}`: {reason}")]
    Parameter { field: String, reason: String },

    #[error("objective failed at parameters {params:?}: {source}")]
    Objective {
        params: Vec<f64>,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn parameter(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parameter {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
