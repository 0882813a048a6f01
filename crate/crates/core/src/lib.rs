// Copyright 2026 Lightcone Lab Contributors
// SPDX-License-Identifier: Apache-2.0

//! Numerical laboratory for Lieb–Robinson bounds of continuum fermions with
//! smeared-out pair interactions.

pub mod bounds;
pub mod condexp;
pub mod error;
pub mod fock;
pub mod fft;
pub mod grid;
pub mod jet;
pub mod linalg;
pub mod onebody;
pub mod quadrature;

pub use error::{Error, Result};
