// Copyright 2026 Lightcone Lab Contributors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors raised by the numerical kernels and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("resolution error: sigma = {sigma} is below twice the grid spacing h = {spacing}")]
    Resolution { sigma: f64, spacing: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("capacity error: {0}")]
    Capacity(String),

    #[error("divergence error: {0}")]
    Divergence(String),

    #[error("hypothesis error: {0}")]
    Hypothesis(String),

    #[error("index {index} out of range for {len} modes")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("plan error: {0}")]
    Plan(String),

    #[error("truncation error: {0}")]
    Truncation(String),

    #[error("numerical tolerance failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
