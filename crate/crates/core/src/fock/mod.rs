// Copyright 2026 Lightcone Lab Contributors
// SPDX-License-Identifier: Apache-2.0

//! Finite-mode fermionic Fock space: CAR generators, mode-truncated many-body
//! Hamiltonians, Heisenberg dynamics and the (anti)commutator rewriter.

mod basis;
mod model;
mod operator;
mod rewriter;

pub use basis::{smooth_bump, ModeBasis, ModeTag};
pub use model::{
    box_mask, lattice_centers, second_quantize, volume_convergence, Evolution, FtSample, GroundState, ManyBody,
    ModelSpec, VolumeRow, CLUSTERING_BGAP_CAP, MAX_CENTERS,
};
pub use operator::{FockOperator, Parity, DENSE_DIM_CAP, MAX_MODES};
pub use rewriter::{expand_commutator, ladder_from, BracketMode, Factor, OperatorExpression, Slot, Term};
